//! The matrix Jacobi equation `A'' + T A = 0`, `A(0) = 0`, `A'(0) = I`, along
//! a tidal profile, with the density ratio `ψ = det A / s_c^{n-1}`, the
//! Riccati operator `U = A' A⁻¹` and its trace `Φ`.
//!
//! The radial integral `∫ det A` is carried as an extra state component, so
//! it is exact (to the integrator tolerance) at every requested stop.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::TidalProfile;
use crate::models::{model_density, phi_c, s_c, ModelConstants};
use crate::ode::{Dopri, OdeOptions};

/// First diagnostic time: ψ and Φ are 0/0 at the origin.
pub const T_DIAGNOSTIC: f64 = 1e-4;
/// Above this condition number of `A`, `Φ` is reported as unavailable.
pub const COND_LIMIT: f64 = 1e12;
const H_MAX: f64 = 0.05;

/// State of the Jacobi system at one time.
#[derive(Debug, Clone)]
pub struct JacobiState {
    pub t: f64,
    pub a: DMatrix<f64>,
    pub a_prime: DMatrix<f64>,
    /// `∫_0^t det A`.
    pub radial_integral: f64,
}

impl JacobiState {
    pub fn det(&self) -> f64 {
        self.a.determinant()
    }
}

/// A solved Jacobi system on the integrator's grid.
#[derive(Clone)]
pub struct JacobiSolution {
    /// Model constants `ψ` and `Φ_c` are measured against.
    pub consts: ModelConstants,
    pub tol: f64,
    pub grid: Vec<f64>,
    pub a: Vec<DMatrix<f64>>,
    pub a_prime: Vec<DMatrix<f64>>,
    pub det_a: Vec<f64>,
    pub radial_integral: Vec<f64>,
    /// `det A / s_c^{n-1}`; `None` at `t = 0` and where `s_c ≤ 0`.
    pub psi: Vec<Option<f64>>,
    /// `tr(A' A⁻¹)`; `None` at `t = 0` and where `cond(A) > 1e12`.
    pub phi: Vec<Option<f64>>,
    /// `Φ' = -tr T - tr U²`, from the state.
    pub phi_prime: Vec<Option<f64>>,
    pub first_conjugate: Option<f64>,
    pub radial_sign: f64,
    pub frame_signs: Vec<f64>,
    profile: Arc<dyn TidalProfile>,
}

impl std::fmt::Debug for JacobiSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JacobiSolution")
            .field("consts", &self.consts)
            .field("points", &self.grid.len())
            .field("t_max", &self.t_max())
            .field("first_conjugate", &self.first_conjugate)
            .finish()
    }
}

fn pack(s: &JacobiState) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * s.a.len() + 1);
    y.extend(s.a.iter());
    y.extend(s.a_prime.iter());
    y.push(s.radial_integral);
    y
}

fn unpack(t: f64, y: &[f64], m: usize) -> JacobiState {
    let mm = m * m;
    JacobiState {
        t,
        a: DMatrix::from_column_slice(m, m, &y[..mm]),
        a_prime: DMatrix::from_column_slice(m, m, &y[mm..2 * mm]),
        radial_integral: y[2 * mm],
    }
}

fn integrate(
    profile: &dyn TidalProfile,
    start: &JacobiState,
    stops: &[f64],
    tol: f64,
    record_steps: bool,
) -> Result<Vec<JacobiState>> {
    let m = profile.dim();
    let mm = m * m;
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let t_eval = t.min(profile.t_max());
        let tm = profile.eval(t_eval)?;
        let a = DMatrix::from_column_slice(m, m, &y[..mm]);
        let acc = -(&tm * &a);
        dy[..mm].copy_from_slice(&y[mm..2 * mm]);
        dy[mm..2 * mm].copy_from_slice(acc.as_slice());
        dy[2 * mm] = a.determinant();
        Ok(())
    };
    let mut ode = Dopri::new(rhs, start.t, pack(start), OdeOptions::adaptive(tol).with_h_max(H_MAX))?;
    let mut out = Vec::new();
    for &stop in stops {
        while ode.t() < stop {
            ode.step(stop)?;
            if record_steps || ode.t() == stop {
                out.push(unpack(ode.t(), ode.y(), m));
            }
        }
    }
    Ok(out)
}

/// Solve the Jacobi system on `[0, t_max]`.
pub fn solve_jacobi(
    profile: Arc<dyn TidalProfile>,
    consts: ModelConstants,
    t_max: f64,
    tol: f64,
) -> Result<JacobiSolution> {
    solve_jacobi_with_stops(profile, consts, t_max, tol, &[])
}

/// Solve the Jacobi system, landing exactly on each of `stops` as well.
pub fn solve_jacobi_with_stops(
    profile: Arc<dyn TidalProfile>,
    consts: ModelConstants,
    t_max: f64,
    tol: f64,
    stops: &[f64],
) -> Result<JacobiSolution> {
    let m = profile.dim();
    if m + 1 != consts.n {
        return Err(Error::InvalidSpec(format!(
            "profile dimension {m} does not match n - 1 = {}",
            consts.n - 1
        )));
    }
    if !(t_max > 0.0) || t_max > profile.t_max() * (1.0 + 1e-12) {
        return Err(Error::Extrapolation { t: t_max, t_max: profile.t_max() });
    }
    let mut all_stops: Vec<f64> = stops.iter().copied().filter(|s| *s > 0.0 && *s < t_max).collect();
    if T_DIAGNOSTIC < t_max {
        all_stops.push(T_DIAGNOSTIC);
    }
    all_stops.push(t_max);
    all_stops.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all_stops.dedup();

    let start = JacobiState { t: 0.0, a: DMatrix::zeros(m, m), a_prime: DMatrix::identity(m, m), radial_integral: 0.0 };
    let mut states = vec![start.clone()];
    states.extend(integrate(profile.as_ref(), &start, &all_stops, tol, true)?);

    let mut sol = JacobiSolution {
        consts,
        tol,
        grid: Vec::with_capacity(states.len()),
        a: Vec::with_capacity(states.len()),
        a_prime: Vec::with_capacity(states.len()),
        det_a: Vec::with_capacity(states.len()),
        radial_integral: Vec::with_capacity(states.len()),
        psi: Vec::with_capacity(states.len()),
        phi: Vec::with_capacity(states.len()),
        phi_prime: Vec::with_capacity(states.len()),
        first_conjugate: None,
        radial_sign: profile.radial_sign(),
        frame_signs: profile.frame_signs(),
        profile,
    };
    for s in states {
        let det = s.det();
        let (phi, dphi) = riccati_scalars(sol.profile.as_ref(), &s)?;
        let sc = s_c(&consts, s.t);
        sol.psi.push((s.t > 0.0 && sc > 0.0 && !past_pole(&consts, s.t)).then(|| det / model_density(&consts, s.t)));
        sol.phi.push(phi);
        sol.phi_prime.push(dphi);
        sol.grid.push(s.t);
        sol.det_a.push(det);
        sol.radial_integral.push(s.radial_integral);
        sol.a.push(s.a);
        sol.a_prime.push(s.a_prime);
    }
    sol.first_conjugate = sol.locate_conjugate()?;
    Ok(sol)
}

fn past_pole(consts: &ModelConstants, t: f64) -> bool {
    consts.conjugate_radius().is_some_and(|r| t >= r)
}

/// `(Φ, Φ')` at a state, or `None` where `A` is too ill-conditioned.
fn riccati_scalars(profile: &dyn TidalProfile, s: &JacobiState) -> Result<(Option<f64>, Option<f64>)> {
    if s.t <= 0.0 {
        return Ok((None, None));
    }
    let svd = s.a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || smax / smin > COND_LIMIT {
        return Ok((None, None));
    }
    let Some(inv) = s.a.clone().try_inverse() else {
        return Ok((None, None));
    };
    let u = &s.a_prime * inv;
    let tm = profile.eval(s.t.min(profile.t_max()))?;
    let phi = u.trace();
    let dphi = -tm.trace() - (&u * &u).trace();
    Ok((Some(phi), Some(dphi)))
}

fn sigma_min(a: &DMatrix<f64>) -> f64 {
    a.clone().svd(false, false).singular_values.min()
}

impl JacobiSolution {
    pub fn t_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn m(&self) -> usize {
        self.consts.m()
    }

    pub fn profile(&self) -> &Arc<dyn TidalProfile> {
        &self.profile
    }

    fn stored(&self, i: usize) -> JacobiState {
        JacobiState {
            t: self.grid[i],
            a: self.a[i].clone(),
            a_prime: self.a_prime[i].clone(),
            radial_integral: self.radial_integral[i],
        }
    }

    /// The state at any `t ∈ [0, t_max]`, integrated from the nearest stored
    /// grid point at or before `t`.
    pub fn state_at(&self, t: f64) -> Result<JacobiState> {
        if !(0.0..=self.t_max()).contains(&t) {
            return Err(Error::Extrapolation { t, t_max: self.t_max() });
        }
        let k = self.grid.partition_point(|&s| s <= t) - 1;
        let start = self.stored(k);
        if start.t == t {
            return Ok(start);
        }
        Ok(integrate(self.profile.as_ref(), &start, &[t], self.tol, false)?.pop().unwrap())
    }

    /// `∫_0^t det A`.
    pub fn radial_integral_at(&self, t: f64) -> Result<f64> {
        Ok(self.state_at(t)?.radial_integral)
    }

    /// Index of the first grid point with `t ≥ T_DIAGNOSTIC`.
    pub fn first_diagnostic_index(&self) -> usize {
        self.grid.iter().position(|&t| t >= T_DIAGNOSTIC * (1.0 - 1e-12)).unwrap_or(self.grid.len() - 1)
    }

    /// `U = A' A⁻¹` at grid point `i`, when `A` is invertible.
    pub fn riccati_operator(&self, i: usize) -> Option<DMatrix<f64>> {
        if self.phi[i].is_none() {
            return None;
        }
        self.a[i].clone().try_inverse().map(|inv| &self.a_prime[i] * inv)
    }

    /// First zero of `det A`: a sign change refined by bisection, or an even
    /// order zero found as a vanishing local minimum of `σ_min(A)`.
    fn locate_conjugate(&self) -> Result<Option<f64>> {
        let n = self.grid.len();
        let sig: Vec<f64> = self.a.iter().map(sigma_min).collect();
        for i in 1..n {
            if i + 1 < n && self.det_a[i + 1].signum() != self.det_a[i].signum() && self.det_a[i] != 0.0 {
                return self.bisect(i, i + 1).map(Some);
            }
            if self.det_a[i] == 0.0 && i > 0 {
                return Ok(Some(self.grid[i]));
            }
            if i + 1 < n && sig[i] < sig[i - 1] && sig[i] <= sig[i + 1] {
                let scale = self.a[i].norm().max(self.grid[i]);
                if sig[i] < 0.2 * scale {
                    if let Some(t) = self.golden_zero(i - 1, i + 1)? {
                        return Ok(Some(t));
                    }
                }
            }
        }
        Ok(None)
    }

    fn bisect(&self, lo: usize, hi: usize) -> Result<f64> {
        let (mut a, mut b) = (self.grid[lo], self.grid[hi]);
        let sa = self.det_a[lo].signum();
        while b - a > 1e-11 {
            let mid = 0.5 * (a + b);
            let d = self.state_at(mid)?.det();
            if d == 0.0 {
                return Ok(mid);
            }
            if d.signum() == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    fn golden_zero(&self, lo: usize, hi: usize) -> Result<Option<f64>> {
        let f = |t: f64| -> Result<f64> { Ok(sigma_min(&self.state_at(t)?.a)) };
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (self.grid[lo], self.grid[hi]);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (f(x1)?, f(x2)?);
        while b - a > 1e-11 {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = f(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = f(x2)?;
            }
        }
        let t = 0.5 * (a + b);
        let scale = self.state_at(t)?.a_prime.norm().max(1.0);
        Ok((f(t)? <= 1e-7 * scale).then_some(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundDirection {
    /// `ψ ≥ 1` and `ψ' ≥ 0`.
    Lower,
    /// `ψ ≤ 1` and `ψ' ≤ 0`.
    Upper,
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiReport {
    pub direction: BoundDirection,
    pub bound_holds: bool,
    pub monotone_holds: bool,
    /// Smallest signed margin of the bound (`ψ - 1` for lower, `1 - ψ` for upper).
    pub worst_margin: f64,
    pub worst_at: f64,
    /// Smallest signed monotonicity increment.
    pub worst_monotone: f64,
    pub equality_points: Vec<f64>,
    pub equality_everywhere: bool,
    /// Largest `‖T(t) + c I‖` over the equality points.
    pub model_tidal_deviation: f64,
    /// Equality points exist and the profile equals `-c I` at all of them.
    pub equality_diagnostic: bool,
    pub checked_points: usize,
}

impl PsiReport {
    pub fn holds(&self) -> bool {
        self.bound_holds && self.monotone_holds
    }
}

const PSI_SLACK: f64 = 1e-8;
const PSI_EQUALITY: f64 = 1e-6;
const TIDAL_EQUALITY: f64 = 1e-6;

/// Indices of the grid points in `[T_DIAGNOSTIC, min(first_conjugate, t_max))`.
fn diagnostic_range(sol: &JacobiSolution) -> std::ops::Range<usize> {
    let start = sol.first_diagnostic_index();
    let end = match sol.first_conjugate {
        Some(tc) => sol.grid.partition_point(|&t| t < tc),
        None => sol.grid.len(),
    };
    start..end.max(start)
}

fn domain_guard(sol: &JacobiSolution) -> Result<()> {
    if let Some(r) = sol.consts.conjugate_radius() {
        let end = sol.first_conjugate.unwrap_or(f64::INFINITY).min(sol.t_max());
        if end >= r {
            return Err(Error::ModelDomain { cut: end, limit: r });
        }
    }
    Ok(())
}

/// Check `ψ ≥ 1` (lower) or `ψ ≤ 1` (upper) together with the matching
/// monotonicity of `ψ`.
pub fn psi_bound_check(sol: &JacobiSolution, direction: BoundDirection) -> Result<PsiReport> {
    domain_guard(sol)?;
    let sign = match direction {
        BoundDirection::Lower => 1.0,
        BoundDirection::Upper => -1.0,
    };
    let range = diagnostic_range(sol);
    let mut r = PsiReport {
        direction,
        bound_holds: true,
        monotone_holds: true,
        worst_margin: f64::INFINITY,
        worst_at: f64::NAN,
        worst_monotone: f64::INFINITY,
        equality_points: Vec::new(),
        equality_everywhere: true,
        model_tidal_deviation: 0.0,
        equality_diagnostic: false,
        checked_points: 0,
    };
    let model = -sol.consts.c;
    let mut prev: Option<f64> = None;
    for i in range {
        let Some(psi) = sol.psi[i] else { continue };
        r.checked_points += 1;
        let margin = sign * (psi - 1.0);
        if margin < r.worst_margin {
            r.worst_margin = margin;
            r.worst_at = sol.grid[i];
        }
        if let Some(p) = prev {
            r.worst_monotone = r.worst_monotone.min(sign * (psi - p));
        }
        prev = Some(psi);
        if (psi - 1.0).abs() <= PSI_EQUALITY {
            r.equality_points.push(sol.grid[i]);
            let t = sol.profile.eval(sol.grid[i])?;
            let dev = (t - DMatrix::identity(sol.m(), sol.m()) * model).abs().max();
            r.model_tidal_deviation = r.model_tidal_deviation.max(dev);
        } else {
            r.equality_everywhere = false;
        }
    }
    r.bound_holds = r.worst_margin >= -PSI_SLACK;
    r.monotone_holds = r.worst_monotone >= -PSI_SLACK;
    r.equality_everywhere &= r.checked_points > 0;
    r.equality_diagnostic = !r.equality_points.is_empty() && r.model_tidal_deviation <= TIDAL_EQUALITY;
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct RiccatiReport {
    pub inequality_holds: bool,
    pub comparison_holds: bool,
    /// Largest `(Φ' + Φ²/m + m k) / (1 + Φ²)`.
    pub worst_inequality: f64,
    pub worst_inequality_at: f64,
    /// Largest `Φ - Φ_c`, relative to `1 + |Φ_c|`.
    pub worst_comparison: f64,
    pub worst_comparison_at: f64,
    /// The inequality and the comparison are both saturated to 1e-6.
    pub saturated: bool,
    pub checked_points: usize,
}

impl RiccatiReport {
    pub fn holds(&self) -> bool {
        self.inequality_holds && self.comparison_holds
    }
}

const RICCATI_SLACK: f64 = 1e-6;

/// Check the scalar Riccati inequality `Φ' + Φ²/m + m k ≤ 0` (with
/// `k = -c`) and the comparison `Φ ≤ Φ_c`.
pub fn riccati_check(sol: &JacobiSolution, consts: &ModelConstants) -> Result<RiccatiReport> {
    domain_guard(sol)?;
    let m = consts.m() as f64;
    let mut r = RiccatiReport {
        inequality_holds: true,
        comparison_holds: true,
        worst_inequality: f64::NEG_INFINITY,
        worst_inequality_at: f64::NAN,
        worst_comparison: f64::NEG_INFINITY,
        worst_comparison_at: f64::NAN,
        saturated: true,
        checked_points: 0,
    };
    for i in diagnostic_range(sol) {
        let (Some(phi), Some(dphi)) = (sol.phi[i], sol.phi_prime[i]) else { continue };
        let t = sol.grid[i];
        r.checked_points += 1;
        let lhs = (dphi + phi * phi / m + m * consts.k()) / (1.0 + phi * phi);
        if lhs > r.worst_inequality {
            r.worst_inequality = lhs;
            r.worst_inequality_at = t;
        }
        let mut sat = lhs.abs() <= RICCATI_SLACK;
        if let Ok(pc) = phi_c(consts, t) {
            let d = (phi - pc) / (1.0 + pc.abs());
            if d > r.worst_comparison {
                r.worst_comparison = d;
                r.worst_comparison_at = t;
            }
            sat &= d.abs() <= RICCATI_SLACK;
        }
        r.saturated &= sat;
    }
    r.inequality_holds = r.worst_inequality <= RICCATI_SLACK;
    r.comparison_holds = r.worst_comparison <= RICCATI_SLACK;
    r.saturated &= r.checked_points > 0;
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct RauchReport {
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_prime: Vec<f64>,
    /// `|φ - 1|` at the first diagnostic point.
    pub initial_deviation: f64,
    pub limit_holds: bool,
    pub monotone_holds: bool,
    pub worst_derivative: f64,
    /// Diagnostic points where `φ = 1` to 1e-6.
    pub equality_points: Vec<f64>,
}

impl RauchReport {
    pub fn holds(&self) -> bool {
        self.limit_holds && self.monotone_holds
    }
}

fn frame_norm2(signs: &[f64], j: &DVector<f64>, k: &DVector<f64>) -> f64 {
    signs.iter().zip(j.iter().zip(k.iter())).map(|(s, (a, b))| s * a * b).sum()
}

/// The quotient `φ = g₁(J₁, J₁)/g₂(J₂, J₂)` for `J_i = A_i v`, with the
/// conclusions `φ → 1` at the origin and `φ' ≥ 0`.
pub fn rauch_quotient(sol1: &JacobiSolution, sol2: &JacobiSolution, v: &[f64]) -> Result<RauchReport> {
    if sol1.m() != sol2.m() || v.len() != sol1.m() {
        return Err(Error::InvalidSpec("Rauch quotient needs matching dimensions".into()));
    }
    let t_end = sol1.t_max().min(sol2.t_max());
    for tc in [sol1.first_conjugate, sol2.first_conjugate].into_iter().flatten() {
        if tc <= t_end {
            return Err(Error::ConjugateInRange { t: tc });
        }
    }
    let v = DVector::from_row_slice(v);
    let mut times: Vec<f64> = sol1.grid.iter().chain(&sol2.grid).copied().filter(|&t| t >= T_DIAGNOSTIC * (1.0 - 1e-12) && t <= t_end).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));
    let mut rep = RauchReport {
        grid: Vec::new(),
        phi: Vec::new(),
        phi_prime: Vec::new(),
        initial_deviation: f64::NAN,
        limit_holds: false,
        monotone_holds: true,
        worst_derivative: f64::INFINITY,
        equality_points: Vec::new(),
    };
    for &t in &times {
        let s1 = sol1.state_at(t)?;
        let s2 = sol2.state_at(t)?;
        let (j1, dj1) = (&s1.a * &v, &s1.a_prime * &v);
        let (j2, dj2) = (&s2.a * &v, &s2.a_prime * &v);
        let n1 = frame_norm2(&sol1.frame_signs, &j1, &j1);
        let n2 = frame_norm2(&sol2.frame_signs, &j2, &j2);
        let d1 = 2.0 * frame_norm2(&sol1.frame_signs, &j1, &dj1);
        let d2 = 2.0 * frame_norm2(&sol2.frame_signs, &j2, &dj2);
        let phi = n1 / n2;
        let dphi = (d1 * n2 - n1 * d2) / (n2 * n2);
        rep.grid.push(t);
        rep.phi.push(phi);
        rep.phi_prime.push(dphi);
        rep.worst_derivative = rep.worst_derivative.min(dphi);
        if (phi - 1.0).abs() <= 1e-6 {
            rep.equality_points.push(t);
        }
    }
    if let Some(&phi0) = rep.phi.first() {
        rep.initial_deviation = (phi0 - 1.0).abs();
        rep.limit_holds = rep.initial_deviation <= 1e-3;
    }
    rep.monotone_holds = rep.worst_derivative >= -1e-8;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::{ConstantProfile, FnProfile};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn model_solution(c: f64, n: usize, t_max: f64) -> JacobiSolution {
        let prof = Arc::new(ConstantProfile::scalar(-c, n - 1, t_max));
        solve_jacobi(prof, ModelConstants::new(c, n).unwrap(), t_max, 1e-12).unwrap()
    }

    fn model_t_max(c: f64) -> f64 {
        if c < 0.0 {
            3f64.min(0.9 * PI / (-c).sqrt())
        } else {
            3.0
        }
    }

    #[test]
    fn initial_data_and_model_oracle() {
        for &c in &[-1.0, 0.0, 1.0] {
            for n in 2..=4 {
                let sol = model_solution(c, n, model_t_max(c));
                let m = n - 1;
                assert_eq!(sol.a[0], DMatrix::zeros(m, m));
                assert_eq!(sol.a_prime[0], DMatrix::identity(m, m));
                let consts = sol.consts;
                for (i, &t) in sol.grid.iter().enumerate().skip(1) {
                    let want = model_density(&consts, t);
                    assert!((sol.det_a[i] - want).abs() / want.max(1e-12) <= 1e-8, "c={c} n={n} t={t}");
                    assert!(sol.det_a[i] > 0.0);
                    if let Some(psi) = sol.psi[i] {
                        assert!((psi - 1.0).abs() <= 1e-8);
                    }
                }
                let k = sol.first_diagnostic_index();
                assert_eq!(sol.grid[k], T_DIAGNOSTIC);
                assert!((sol.psi[k].unwrap() - 1.0).abs() <= 1e-4);
                assert!((sol.grid[k] * sol.phi[k].unwrap() - m as f64).abs() <= 1e-3);
                assert!(sol.first_conjugate.is_none());
            }
        }
    }

    #[test]
    fn flat_profile() {
        let sol = model_solution(0.0, 4, 2.0);
        let i = sol.grid.len() - 1;
        assert_abs_diff_eq!(sol.det_a[i], 8.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.phi[i].unwrap(), 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.radial_integral[i], 4.0, epsilon = 1e-9);
    }

    #[test]
    fn conjugate_points_odd_and_even() {
        for n in 2..=4 {
            let sol = model_solution(-1.0, n, 4.0);
            let tc = sol.first_conjugate.expect("conjugate point");
            assert!((tc - PI).abs() <= 1e-8, "n={n}: {tc}");
        }
        let sol = model_solution(-4.0, 3, 2.0);
        assert!((sol.first_conjugate.unwrap() - PI / 2.0).abs() <= 1e-8);
    }

    #[test]
    fn conjugate_of_anisotropic_profile() {
        // first zero from the stiffest direction: π/2
        let prof = Arc::new(ConstantProfile::diagonal(&[1.0, 4.0], 3.0));
        let sol = solve_jacobi(prof, ModelConstants::new(0.0, 3).unwrap(), 3.0, 1e-12).unwrap();
        assert!((sol.first_conjugate.unwrap() - PI / 2.0).abs() <= 1e-8);
    }

    #[test]
    fn state_at_and_stops() {
        let prof = Arc::new(ConstantProfile::scalar(-1.0, 2, 2.0));
        let consts = ModelConstants::new(1.0, 3).unwrap();
        let sol = solve_jacobi_with_stops(prof, consts, 2.0, 1e-12, &[0.7, 1.3]).unwrap();
        assert!(sol.grid.contains(&0.7) && sol.grid.contains(&1.3));
        let s = sol.state_at(1.234).unwrap();
        assert_abs_diff_eq!(s.det(), 1.234f64.sinh().powi(2), epsilon = 1e-10);
        // ∫ sinh² = (sinh(2t)/2 - t)/2
        let want = (2.468f64.sinh() / 2.0 - 1.234) / 2.0;
        assert_abs_diff_eq!(s.radial_integral, want, epsilon = 1e-10);
        assert!(sol.state_at(2.1).is_err());
    }

    #[test]
    fn phi_matches_log_derivative_and_u_is_self_adjoint() {
        let prof = Arc::new(FnProfile {
            dim: 3,
            t_max: 2.0,
            radial_sign: -1.0,
            f: |t: f64| {
                let s = t.sin();
                DMatrix::from_row_slice(3, 3, &[0.3, 0.1 * s, 0.0, 0.1 * s, -0.5, 0.2, 0.0, 0.2, 0.1 + 0.1 * t])
            },
        });
        let sol = solve_jacobi(prof, ModelConstants::new(0.0, 4).unwrap(), 2.0, 1e-12).unwrap();
        let h = 1e-4;
        for i in (sol.first_diagnostic_index() + 1..sol.grid.len() - 1).step_by(3) {
            let t = sol.grid[i];
            if t < 0.1 {
                continue;
            }
            let fd = (sol.state_at(t + h).unwrap().det().ln() - sol.state_at(t - h).unwrap().det().ln()) / (2.0 * h);
            let phi = sol.phi[i].unwrap();
            assert!((fd - phi).abs() <= 1e-5 * phi.abs(), "t={t}: {fd} vs {phi}");
            let u = sol.riccati_operator(i).unwrap();
            assert!((&u - u.transpose()).norm() <= 1e-6 * u.norm());
        }
    }

    #[test]
    fn psi_checks() {
        let sol = model_solution(0.5, 4, 2.0);
        let rep = psi_bound_check(&sol, BoundDirection::Lower).unwrap();
        assert!(rep.holds() && rep.equality_everywhere && rep.equality_diagnostic);
        assert!(rep.worst_margin.abs() <= 1e-8);

        // curvature below the bound: tidal = -(c - 0.1) I
        let prof = Arc::new(ConstantProfile::scalar(-0.5 + 0.1, 3, 2.0));
        let sol = solve_jacobi(prof, ModelConstants::new(0.5, 4).unwrap(), 2.0, 1e-12).unwrap();
        let rep = psi_bound_check(&sol, BoundDirection::Lower).unwrap();
        assert!(!rep.bound_holds && rep.worst_margin < 0.0);
        assert!(psi_bound_check(&sol, BoundDirection::Upper).unwrap().holds());

        // model pole inside the range
        let prof = Arc::new(ConstantProfile::scalar(-2.0, 1, 4.0));
        let sol = solve_jacobi(prof, ModelConstants::new(-1.0, 2).unwrap(), 4.0, 1e-10).unwrap();
        assert!(matches!(psi_bound_check(&sol, BoundDirection::Lower), Err(Error::ModelDomain { .. })));
    }

    #[test]
    fn riccati_checks() {
        for &c in &[0.0, 1.0, -1.0] {
            let sol = model_solution(c, 3, model_t_max(c).min(2.0));
            let rep = riccati_check(&sol, &sol.consts).unwrap();
            assert!(rep.holds() && rep.saturated, "c={c}: {rep:?}");
        }
        // more focusing than the model violates Φ ≤ Φ_c
        let prof = Arc::new(ConstantProfile::scalar(0.3, 2, 2.0));
        let sol = solve_jacobi(prof, ModelConstants::new(0.0, 3).unwrap(), 2.0, 1e-12).unwrap();
        let consts = ModelConstants::new(-1.0, 3).unwrap();
        let rep = riccati_check(&sol, &consts).unwrap();
        assert!(!rep.comparison_holds);
        let rep = riccati_check(&sol, &ModelConstants::new(0.0, 3).unwrap()).unwrap();
        assert!(rep.holds());
        let prof = Arc::new(ConstantProfile::scalar(-0.3, 2, 2.0));
        let sol = solve_jacobi(prof, ModelConstants::new(0.0, 3).unwrap(), 2.0, 1e-12).unwrap();
        let rep = riccati_check(&sol, &sol.consts).unwrap();
        assert!(!rep.holds());
    }

    #[test]
    fn rauch_examples() {
        let s1 = model_solution(1.0, 2, 2.0);
        let s2 = model_solution(0.0, 2, 2.0);
        let rep = rauch_quotient(&s1, &s2, &[1.0]).unwrap();
        assert!(rep.holds());
        for (t, phi) in rep.grid.iter().zip(&rep.phi) {
            assert_abs_diff_eq!(*phi, (t.sinh() / t).powi(2), epsilon = 1e-9);
        }
        let same = rauch_quotient(&s1, &s1, &[1.0]).unwrap();
        assert!(same.holds() && same.phi.iter().all(|p| *p == 1.0));
        assert_eq!(same.equality_points.len(), same.grid.len());
        let conj = model_solution(-1.0, 2, 4.0);
        let flat = model_solution(0.0, 2, 4.0);
        assert!(matches!(rauch_quotient(&conj, &flat, &[1.0]), Err(Error::ConjugateInRange { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn det_positive_before_conjugate(a in -1.0f64..1.0, b in -1.0f64..1.0, d in -1.0f64..1.0) {
                let prof = Arc::new(ConstantProfile {
                    matrix: DMatrix::from_row_slice(2, 2, &[a, b, b, d]),
                    t_max: 2.5,
                    radial_sign: -1.0,
                    frame_signs: vec![1.0, 1.0],
                });
                let sol = solve_jacobi(prof, ModelConstants::new(0.0, 3).unwrap(), 2.5, 1e-10).unwrap();
                let end = sol.first_conjugate.unwrap_or(f64::INFINITY);
                for (t, det) in sol.grid.iter().zip(&sol.det_a).skip(1) {
                    if *t < end - 1e-6 {
                        prop_assert!(*det > 0.0);
                    }
                }
                // the largest eigenvalue fixes the first zero
                let lmax = 0.5 * (a + d) + (0.25 * (a - d).powi(2) + b * b).sqrt();
                if lmax > 0.0 && PI / lmax.sqrt() < 2.4 {
                    prop_assert!((sol.first_conjugate.unwrap() - PI / lmax.sqrt()).abs() <= 1e-7);
                } else if lmax <= 0.0 {
                    prop_assert!(sol.first_conjugate.is_none());
                }
            }
        }
    }
}
