//! Example families: generalized Robertson-Walker warped products
//! `-dt² + f(t)² g_F` over constant-curvature fibers, Minkowski-based radial
//! conformal deformations, and the Lorentzian constant-curvature models.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Scalar;
use crate::metric::{
    space_form_chart_radius, space_form_factor, Analytic, ChartDomain, ClosedForm, CoordinateMetric, MetricFamily,
};

/// Warping function `f` with its first two derivatives.
#[derive(Clone)]
pub enum WarpFunction {
    /// `cosh(rate·t)`.
    Cosh { rate: f64 },
    /// `exp(rate·t)`.
    Exp { rate: f64 },
    /// `cos(rate·t)`.
    Cos { rate: f64 },
    /// `Σ coeffs[k] t^k`.
    Poly { coeffs: Vec<f64> },
    /// `t ↦ (f, f', f'')`.
    Custom(Arc<dyn Fn(f64) -> (f64, f64, f64) + Send + Sync>),
}

impl std::fmt::Debug for WarpFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WarpFunction::Cosh { rate } => write!(f, "cosh({rate} t)"),
            WarpFunction::Exp { rate } => write!(f, "exp({rate} t)"),
            WarpFunction::Cos { rate } => write!(f, "cos({rate} t)"),
            WarpFunction::Poly { coeffs } => write!(f, "poly{coeffs:?}"),
            WarpFunction::Custom(_) => write!(f, "custom"),
        }
    }
}

impl WarpFunction {
    pub fn constant(v: f64) -> Self {
        WarpFunction::Poly { coeffs: vec![v] }
    }

    /// `(f, f', f'')` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        match self {
            WarpFunction::Cosh { rate: a } => ((a * t).cosh(), a * (a * t).sinh(), a * a * (a * t).cosh()),
            WarpFunction::Exp { rate: a } => {
                let e = (a * t).exp();
                (e, a * e, a * a * e)
            }
            WarpFunction::Cos { rate: a } => ((a * t).cos(), -a * (a * t).sin(), -a * a * (a * t).cos()),
            WarpFunction::Poly { coeffs } => {
                let (mut f0, mut f1, mut f2) = (0.0, 0.0, 0.0);
                for ck in coeffs.iter().rev() {
                    f2 = f2 * t + 2.0 * f1;
                    f1 = f1 * t + f0;
                    f0 = f0 * t + ck;
                }
                (f0, f1, f2)
            }
            WarpFunction::Custom(f) => f(t),
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        self.eval(t).0
    }
}

/// A GRW spacetime with a constant-curvature fiber of dimension `m`.
#[derive(Debug, Clone)]
pub struct GRWData {
    pub warp: WarpFunction,
    pub m: usize,
    pub k_fiber: f64,
    /// Open interval `I` of the base.
    pub interval: (f64, f64),
}

impl GRWData {
    pub fn new(warp: WarpFunction, m: usize, k_fiber: f64, interval: (f64, f64)) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidSpec("fiber dimension must be at least 1".into()));
        }
        if !(interval.0 < interval.1) {
            return Err(Error::InvalidSpec(format!("empty interval {interval:?}")));
        }
        let data = GRWData { warp, m, k_fiber, interval };
        for t in data.grid(201) {
            let (f, _, _) = data.warp.eval(t);
            if !(f > 0.0) {
                return Err(Error::InvalidSpec(format!("warping function not positive at t = {t}")));
            }
        }
        Ok(data)
    }

    /// `n = m + 1`.
    pub fn n(&self) -> usize {
        self.m + 1
    }

    /// Ricci value `Ric_F(Z, Z) = (m - 1) k_F` for a `g_F`-unit `Z`.
    pub fn fiber_ricci(&self) -> f64 {
        (self.m as f64 - 1.0) * self.k_fiber
    }

    /// `n` equally spaced points over a bounded check window inside `I`.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.check_window();
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    fn check_window(&self) -> (f64, f64) {
        let lo = if self.interval.0.is_finite() { self.interval.0 } else { -3.0 };
        let hi = if self.interval.1.is_finite() { self.interval.1 } else { 3.0 };
        let pad = 1e-9 * (hi - lo);
        (lo + pad, hi - pad)
    }
}

/// `Ric(X, X)` for `X = ∂_t + λ Z`, `Z` a `g_F`-unit fiber vector.
pub fn grw_ricci_timelike(data: &GRWData, t: f64, lambda: f64, fiber_ric_value: f64) -> Result<f64> {
    let (f, f1, f2) = data.warp.eval(t);
    if lambda * lambda * f * f > 1.0 + 1e-12 {
        return Err(Error::OutOfDomain { what: "timelike Ricci formula (λ²f² > 1)", t });
    }
    let m = data.m as f64;
    Ok(-m * f2 / f + lambda * lambda * (fiber_ric_value + f * f2 + (m - 1.0) * f1 * f1))
}

/// Sectional curvature of `Span{∂_t + λY, Z}` with `Y, Z` `g_F`-orthonormal.
pub fn grw_timelike_sectional(data: &GRWData, t: f64, lambda: f64) -> Result<f64> {
    let (f, f1, f2) = data.warp.eval(t);
    if lambda * lambda * f * f >= 1.0 {
        return Err(Error::OutOfDomain { what: "timelike plane (λ²f² ≥ 1)", t });
    }
    let num = -f * f2 + lambda * lambda * f * f * (data.k_fiber + f1 * f1);
    Ok(num / ((-1.0 + lambda * lambda * f * f) * f * f))
}

/// `H(λ) = Ric(X, X) - m c g(X, X)`; nonnegative on `[0, 1/f]` exactly when
/// the Ricci bound holds at `t`.
pub fn ricci_parabola(data: &GRWData, c: f64, t: f64, lambda: f64) -> Result<f64> {
    let f = data.warp.f(t);
    let m = data.m as f64;
    let ric = grw_ricci_timelike(data, t, lambda, data.fiber_ricci())?;
    Ok(ric - m * c * (-1.0 + lambda * lambda * f * f))
}

/// Right minus left member of the polynomial form of `K(π) ≥ c` over the
/// plane family `Span{∂_t + λY, Z}`; nonnegative on `[0, 1/f]` exactly when
/// the sectional bound holds at `t`.
pub fn sectional_parabola(data: &GRWData, c: f64, t: f64, lambda: f64) -> f64 {
    let (f, f1, f2) = data.warp.eval(t);
    let l2 = lambda * lambda;
    let lhs = -f * f2 + l2 * f * f * (data.k_fiber + f1 * f1);
    let rhs = -c * f * f + c * l2 * f.powi(4);
    rhs - lhs
}

/// Outcome of checking a pair of conditions (A), (B) on a `t`-grid.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionVerdict {
    pub a_holds: bool,
    pub b_holds: bool,
    /// (B) is vacuous for one-dimensional fibers.
    pub b_vacuous: bool,
    pub a_equality: bool,
    pub b_equality: bool,
    /// Both conditions hold with equality everywhere: Einstein (Ricci
    /// version) or constant curvature (sectional version).
    pub equality: bool,
    pub worst_a_margin: f64,
    pub worst_b_margin: f64,
    pub a_failures: Vec<f64>,
    pub b_failures: Vec<f64>,
}

impl ConditionVerdict {
    pub fn holds(&self) -> bool {
        self.a_holds && self.b_holds
    }
}

const CONDITION_SLACK: f64 = 1e-12;
const EQUALITY_TOL: f64 = 1e-10;

fn verdict(data: &GRWData, margin_a: impl Fn(f64) -> f64, margin_b: impl Fn(f64) -> f64) -> ConditionVerdict {
    let grid = data.grid(201);
    let b_vacuous = data.m == 1;
    let mut v = ConditionVerdict {
        a_holds: true,
        b_holds: true,
        b_vacuous,
        a_equality: true,
        b_equality: true,
        equality: false,
        worst_a_margin: f64::INFINITY,
        worst_b_margin: f64::INFINITY,
        a_failures: Vec::new(),
        b_failures: Vec::new(),
    };
    for &t in &grid {
        let a = margin_a(t);
        v.worst_a_margin = v.worst_a_margin.min(a);
        if a < -CONDITION_SLACK {
            v.a_holds = false;
            v.a_failures.push(t);
        }
        if a.abs() > EQUALITY_TOL {
            v.a_equality = false;
        }
        if !b_vacuous {
            let b = margin_b(t);
            v.worst_b_margin = v.worst_b_margin.min(b);
            if b < -CONDITION_SLACK {
                v.b_holds = false;
                v.b_failures.push(t);
            }
            if b.abs() > EQUALITY_TOL {
                v.b_equality = false;
            }
        }
    }
    if b_vacuous {
        v.worst_b_margin = 0.0;
    }
    v.equality = v.a_equality && v.b_equality;
    v
}

/// Conditions equivalent to `Ric(X, X) ≥ m c g(X, X)` for all timelike `X`:
/// (A) `f''/f ≤ c`, (B) `k_F ≥ f f'' - f'²`.
pub fn grw_ricci_conditions(data: &GRWData, c: f64) -> ConditionVerdict {
    verdict(
        data,
        |t| {
            let (f, _, f2) = data.warp.eval(t);
            c - f2 / f
        },
        |t| {
            let (f, f1, f2) = data.warp.eval(t);
            (data.m as f64 - 1.0) * (data.k_fiber - (f * f2 - f1 * f1))
        },
    )
}

/// Conditions equivalent to `K(π) ≥ c` for all timelike planes:
/// (A) `f''/f ≥ c`, (B) `k_F ≤ f f'' - f'²`.
pub fn grw_sectional_conditions(data: &GRWData, c: f64) -> ConditionVerdict {
    verdict(
        data,
        |t| {
            let (f, _, f2) = data.warp.eval(t);
            f2 / f - c
        },
        |t| {
            let (f, f1, f2) = data.warp.eval(t);
            (f * f2 - f1 * f1) - data.k_fiber
        },
    )
}

struct GrwChart {
    warp: WarpFunction,
    m: usize,
    k_fiber: f64,
}

impl ClosedForm for GrwChart {
    fn dim(&self) -> usize {
        self.m + 1
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = self.m + 1;
        let t = x[0];
        let (f0, f1, f2) = self.warp.eval(t.value());
        let f = t.lift(f0, f1, f2);
        let h = if self.m >= 2 { space_form_factor(&x[1..], self.k_fiber) } else { S::constant(1.0) };
        let gff = f * f * h;
        let mut out = vec![S::constant(0.0); n * n];
        out[0] = S::constant(-1.0);
        for i in 1..n {
            out[i * n + i] = gff;
        }
        out
    }
}

/// Chart `(t, x)` with the fiber in its conformally flat chart (flat line
/// for `m = 1`), so that `∂_t` is the comoving direction and the fiber
/// metric is `δ` at `x = 0`.
pub fn build_grw_metric(data: &GRWData) -> Result<CoordinateMetric> {
    if !(1..=3).contains(&data.m) {
        return Err(Error::UnsupportedDimension { n: data.n(), what: "GRW fiber chart" });
    }
    let n = data.n();
    let r_fiber = if data.m >= 2 { space_form_chart_radius(data.k_fiber) } else { 1e3 };
    let mut lo = vec![-r_fiber; n];
    let mut hi = vec![r_fiber; n];
    lo[0] = data.interval.0;
    hi[0] = data.interval.1;
    let domain = ChartDomain::boxed(lo, hi).with_predicate(move |x: &[f64]| {
        x[1..].iter().map(|v| v * v).sum::<f64>().sqrt() < r_fiber
    });
    let mut sig = vec![1.0; n];
    sig[0] = -1.0;
    let (wlo, whi) = data.check_window();
    let mut reference = vec![0.0; n];
    reference[0] = if (wlo..=whi).contains(&0.0) { 0.0 } else { 0.5 * (wlo + whi) };
    CoordinateMetric::new(
        format!("grw(f={:?}, m={}, k_F={})", data.warp, data.m, data.k_fiber),
        MetricFamily::Grw,
        Arc::new(Analytic(GrwChart { warp: data.warp.clone(), m: data.m, k_fiber: data.k_fiber })),
        sig,
        domain,
        &reference,
    )
}

/// GRW data of the Lorentzian model of constant curvature `c` in dimension
/// `n`: `f = cosh(√c t)`, `1`, or `cos(√-c t)` over a fiber of curvature `c`.
pub fn model_grw_data(c: f64, n: usize) -> Result<GRWData> {
    if n < 2 {
        return Err(Error::UnsupportedDimension { n, what: "Lorentzian model" });
    }
    let (warp, interval) = if c > 0.0 {
        (WarpFunction::Cosh { rate: c.sqrt() }, (-50.0, 50.0))
    } else if c < 0.0 {
        let a = (-c).sqrt();
        let half = std::f64::consts::FRAC_PI_2 / a;
        (WarpFunction::Cos { rate: a }, (-half * 0.999, half * 0.999))
    } else {
        (WarpFunction::constant(1.0), (-1e3, 1e3))
    };
    GRWData::new(warp, n - 1, c, interval)
}

/// The Lorentzian model space of constant curvature `c`, in the conformally
/// flat chart centred at the base point (the chart origin). The GRW form
/// from [`model_grw_data`] is isometric but does not contain all radial
/// geodesics from the origin when `c < 0`.
pub fn model_spacetime(c: f64, n: usize) -> Result<CoordinateMetric> {
    crate::metric::lorentzian_space_form(c, n)
}

/// Radial conformal deformation `g* = e^{2ω} g` with `ω(r) = a r²`.
#[derive(Debug, Clone)]
pub struct ConformalData {
    pub a: f64,
    pub base: CoordinateMetric,
}

impl ConformalData {
    pub fn omega(&self, r: f64) -> f64 {
        self.a * r * r
    }
    pub fn omega_prime(&self, r: f64) -> f64 {
        2.0 * self.a * r
    }
    pub fn omega_second(&self, _r: f64) -> f64 {
        2.0 * self.a
    }

    /// `Hess ω(v₂, v₂)` for the unit vector `v₂` of a radial Minkowski plane
    /// orthogonal to the radial direction: `-ω'(r)/r`.
    pub fn minkowski_hess_term(&self, r: f64) -> f64 {
        -self.omega_prime(r) / r
    }
}

/// `e^{-2ω(r)} (K + ω''(r) - hess_term)` for a radial plane at radius `r`.
pub fn conformal_radial_sectional(conf: &ConformalData, r: f64, base_k: f64, hess_term: f64) -> f64 {
    (-2.0 * conf.omega(r)).exp() * (base_k + conf.omega_second(r) - hess_term)
}

struct ConformalChart {
    eta: Vec<f64>,
    a: f64,
}

impl ClosedForm for ConformalChart {
    fn dim(&self) -> usize {
        self.eta.len()
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = self.eta.len();
        // ω = a r² with r² = -η(x, x) the squared proper time from the origin
        let mut r2 = S::constant(0.0);
        for (xi, s) in x.iter().zip(&self.eta) {
            r2 = r2 - *xi * *xi * *s;
        }
        let factor = (r2 * (2.0 * self.a)).exp();
        let mut out = vec![S::constant(0.0); n * n];
        for i in 0..n {
            out[i * n + i] = factor * self.eta[i];
        }
        out
    }
}

/// `e^{2ω} η` on a Minkowski base, whose chart is its own normal chart.
pub fn build_conformal_metric(conf: &ConformalData) -> Result<CoordinateMetric> {
    let base = &conf.base;
    let lorentzian = base.index() == 1 && base.signature()[0] < 0.0;
    if base.family() != &(MetricFamily::Flat { identity: true }) || !lorentzian {
        return Err(Error::BaseNotSupported(format!(
            "conformal deformations need the Minkowski identity chart, got {}",
            base.name()
        )));
    }
    let n = base.dim();
    let eta = base.signature().to_vec();
    let half = 3.0;
    CoordinateMetric::new(
        format!("conformal(a={}, base=minkowski)", conf.a),
        MetricFamily::Conformal { a: conf.a },
        Arc::new(Analytic(ConformalChart { eta: eta.clone(), a: conf.a })),
        eta,
        ChartDomain::cube(n, half),
        &vec![0.0; n],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{minkowski, PlaneSpec};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn cosh_grw(m: usize, k_fiber: f64) -> GRWData {
        GRWData::new(WarpFunction::Cosh { rate: 1.0 }, m, k_fiber, (-3.0, 3.0)).unwrap()
    }

    #[test]
    fn warp_derivatives_are_consistent() {
        let warps = [
            WarpFunction::Cosh { rate: 0.7 },
            WarpFunction::Exp { rate: -1.3 },
            WarpFunction::Cos { rate: 0.5 },
            WarpFunction::Poly { coeffs: vec![1.0, 1.0, -0.125, 0.02] },
        ];
        for w in &warps {
            for &t in &[-0.4, 0.0, 0.9] {
                let h = 1e-5;
                let (f, f1, f2) = w.eval(t);
                let d1 = (w.f(t + h) - w.f(t - h)) / (2.0 * h);
                let d2 = (w.f(t + h) - 2.0 * f + w.f(t - h)) / (h * h);
                assert!((d1 - f1).abs() <= 1e-6 * (1.0 + f1.abs()), "{w:?}");
                assert!((d2 - f2).abs() <= 1e-4 * (1.0 + f2.abs()), "{w:?}");
            }
        }
    }

    #[test]
    fn ricci_formula_examples() {
        let d = cosh_grw(3, 1.0);
        assert_abs_diff_eq!(grw_ricci_timelike(&d, 0.0, 0.0, 2.0).unwrap(), -3.0, epsilon = 1e-15);
        // λ = 1/f at t = 0: -3 + (2 + 1 + 2·sinh²0)
        assert_abs_diff_eq!(grw_ricci_timelike(&d, 0.0, 1.0, 2.0).unwrap(), 0.0, epsilon = 1e-15);
        assert!(grw_ricci_timelike(&d, 0.0, 1.5, 2.0).is_err());
        let stat = GRWData::new(WarpFunction::constant(1.0), 3, 0.0, (-1.0, 1.0)).unwrap();
        assert_eq!(grw_ricci_timelike(&stat, 0.3, 0.7, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn christoffel_of_two_dimensional_grw() {
        let d = GRWData::new(WarpFunction::Exp { rate: 0.8 }, 1, 0.0, (-2.0, 2.0)).unwrap();
        let g = build_grw_metric(&d).unwrap();
        let x = [0.3, 0.5];
        let (f, f1, _) = d.warp.eval(0.3);
        let gamma = g.christoffel(&x).unwrap();
        let fd = g.clone().with_finite_differences().christoffel(&x).unwrap();
        assert_abs_diff_eq!(gamma.get(0, 1, 1), f * f1, epsilon = 1e-14);
        assert_abs_diff_eq!(gamma.get(1, 0, 1), f1 / f, epsilon = 1e-14);
        assert_abs_diff_eq!(gamma.get(0, 0, 0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gamma.get(1, 1, 1), 0.0, epsilon = 1e-14);
        for (l, m, k) in [(0, 1, 1), (1, 0, 1), (1, 1, 0), (0, 0, 0)] {
            assert_abs_diff_eq!(gamma.get(l, m, k), fd.get(l, m, k), epsilon = 1e-8);
        }
    }

    #[test]
    fn constant_curvature_grw_charts() {
        for (warp, k_f) in [(WarpFunction::Cosh { rate: 1.0 }, 1.0), (WarpFunction::Exp { rate: 1.0 }, 0.0)] {
            let d = GRWData::new(warp, 3, k_f, (-2.0, 2.0)).unwrap();
            let g = build_grw_metric(&d).unwrap();
            let x = [0.4, 0.1, -0.2, 0.15];
            let r = g.riemann(&x).unwrap();
            let planes = [
                ([1.0, 0.3, 0.0, 0.0], [0.0, 0.0, 1.0, 0.2]),
                ([0.2, 1.0, 0.0, 0.5], [0.0, -0.3, 1.0, 0.0]),
                ([1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]),
            ];
            for (u, v) in planes {
                let k = r.sectional(&DVector::from_row_slice(&u), &DVector::from_row_slice(&v)).unwrap();
                assert_abs_diff_eq!(k, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn quoted_curvature_components() {
        let d = GRWData::new(WarpFunction::Poly { coeffs: vec![1.0, 0.4, 0.3] }, 3, 0.5, (-0.5, 1.0)).unwrap();
        let g = build_grw_metric(&d).unwrap();
        for &t in &[0.0, 0.3, 0.8] {
            let x = [t, 0.0, 0.0, 0.0];
            let (f, f1, f2) = d.warp.eval(t);
            let r = g.riemann(&x).unwrap();
            let dt = DVector::from_row_slice(&[1.0, 0.0, 0.0, 0.0]);
            let y = DVector::from_row_slice(&[0.0, 1.0, 0.0, 0.0]);
            let z = DVector::from_row_slice(&[0.0, 0.0, 1.0, 0.0]);
            assert_abs_diff_eq!(r.lowered(&dt, &z, &z, &dt), -f * f2, epsilon = 1e-12);
            assert_abs_diff_eq!(r.lowered(&y, &z, &z, &dt), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.lowered(&y, &z, &z, &y), f * f * (0.5 + f1 * f1), epsilon = 1e-12);
            // timelike plane family against the closed form
            for &lam in &[0.0, 0.3 / f, 0.9 / f] {
                let u = &dt + &y * lam;
                let k = r.sectional(&u, &z).unwrap();
                assert_abs_diff_eq!(k, grw_timelike_sectional(&d, t, lam).unwrap(), epsilon = 1e-10);
            }
            let ric = r.ricci();
            assert_abs_diff_eq!(ric[(0, 0)], grw_ricci_timelike(&d, t, 0.0, d.fiber_ricci()).unwrap(), epsilon = 1e-10);
            let lam = 0.8 / f;
            let xv = &dt + &z * lam;
            let ric_x = (xv.transpose() * &ric * &xv)[(0, 0)];
            assert_abs_diff_eq!(ric_x, grw_ricci_timelike(&d, t, lam, d.fiber_ricci()).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn sectional_on_comoving_plane_is_f2_over_f() {
        let d = GRWData::new(WarpFunction::Poly { coeffs: vec![1.0, 1.0, -0.125] }, 2, 0.0, (-0.5, 2.0)).unwrap();
        let g = build_grw_metric(&d).unwrap();
        for &t in &[0.0, 0.5, 1.5] {
            let (f, _, f2) = d.warp.eval(t);
            let k = g
                .sectional(&PlaneSpec::new(vec![t, 0.2, -0.1], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]))
                .unwrap();
            assert_abs_diff_eq!(k, f2 / f, epsilon = 1e-6);
        }
    }

    #[test]
    fn static_flat_grw_is_minkowski() {
        let d = GRWData::new(WarpFunction::constant(1.0), 3, 0.0, (-5.0, 5.0)).unwrap();
        let g = build_grw_metric(&d).unwrap();
        let x = [0.3, 0.1, 0.2, -0.4];
        assert_eq!(g.g(&x).unwrap(), nalgebra::DMatrix::from_diagonal(&DVector::from_row_slice(&[-1.0, 1.0, 1.0, 1.0])));
        assert!(g.ricci(&x).unwrap().abs().max() < 1e-14);
    }

    #[test]
    fn models_have_constant_curvature() {
        for &c in &[-1.0, -0.3, 0.0, 0.5, 1.0] {
            for n in 2..=4 {
                let g = model_spacetime(c, n).unwrap();
                check_constant(&g, c, n);
                check_constant(&build_grw_metric(&model_grw_data(c, n).unwrap()).unwrap(), c, n);
            }
        }
    }

    fn check_constant(g: &CoordinateMetric, c: f64, n: usize) {
        let mut x = vec![0.0; n];
        x[0] = 0.2;
        if n > 2 {
            x[1] = 0.1;
        }
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        u[0] = 1.0;
        u[1] = 0.2;
        v[n - 1] = 1.0;
        if n > 2 {
            v[1] = 0.4;
        }
        let k = g.sectional(&PlaneSpec::new(x, u, v)).unwrap();
        assert_abs_diff_eq!(k, c, epsilon = 1e-10);
    }

    #[test]
    fn condition_verdicts() {
        let v = grw_ricci_conditions(&cosh_grw(3, 1.0), 1.0);
        assert!(v.holds() && v.equality);
        let v = grw_ricci_conditions(&cosh_grw(3, 1.2), 1.0);
        assert!(v.holds() && v.a_equality && !v.b_equality && !v.equality);
        let v = grw_sectional_conditions(&cosh_grw(3, 1.0), 1.0);
        assert!(v.holds() && v.equality);
        let v = grw_sectional_conditions(&cosh_grw(3, 0.5), 1.0);
        assert!(v.holds() && v.a_equality && !v.b_equality);
        let e = GRWData::new(WarpFunction::Exp { rate: 1.0 }, 3, 0.0, (-2.0, 2.0)).unwrap();
        let v = grw_sectional_conditions(&e, 1.0);
        assert!(v.holds() && v.equality);
        // one-dimensional fiber: (B) vacuous
        let d = GRWData::new(WarpFunction::Poly { coeffs: vec![1.0, 0.5, 0.2] }, 1, 7.0, (0.0, 1.0)).unwrap();
        let v = grw_ricci_conditions(&d, 0.4 / 1.0);
        assert!(v.b_vacuous && v.b_holds);
        assert!(v.holds());
        let v = grw_ricci_conditions(&cosh_grw(3, 0.8), 1.0);
        assert!(!v.b_holds && !v.b_failures.is_empty());
    }

    #[test]
    fn conformal_formula_examples() {
        let base = minkowski(3).unwrap();
        let zero = ConformalData { a: 0.0, base: base.clone() };
        assert_eq!(conformal_radial_sectional(&zero, 0.3, -0.7, 0.0), -0.7);
        let pos = ConformalData { a: 0.1, base: base.clone() };
        assert_abs_diff_eq!(conformal_radial_sectional(&pos, 1e-6, 0.0, 0.0), 0.2, epsilon = 1e-9);
        let neg = ConformalData { a: -0.1, base };
        assert_abs_diff_eq!(conformal_radial_sectional(&neg, 1e-6, 0.0, 0.0), -0.2, epsilon = 1e-9);
    }

    #[test]
    fn conformal_metric_matches_radial_formula() {
        for &a in &[0.1, -0.1] {
            let conf = ConformalData { a, base: minkowski(3).unwrap() };
            let g = build_conformal_metric(&conf).unwrap();
            for &(r, chi, phi) in &[(0.05, 0.0, 0.0), (0.05, 0.4, 1.0), (0.1, 0.8, 2.5), (0.02, 0.2, -1.0)] {
                let dir = [f64::cosh(chi), f64::sinh(chi) * f64::cos(phi), f64::sinh(chi) * f64::sin(phi)];
                let x: Vec<f64> = dir.iter().map(|d| r * d).collect();
                // spacelike η-unit vector orthogonal to the radial direction
                let v2 = [f64::sinh(chi), f64::cosh(chi) * f64::cos(phi), f64::cosh(chi) * f64::sin(phi)];
                let k = g.sectional(&PlaneSpec::new(x, dir.to_vec(), v2.to_vec())).unwrap();
                let want = conformal_radial_sectional(&conf, r, 0.0, conf.minkowski_hess_term(r));
                assert_abs_diff_eq!(k, want, epsilon = 1e-4);
                assert_eq!(k.signum(), a.signum());
            }
        }
    }

    #[test]
    fn conformal_needs_minkowski_base() {
        let conf = ConformalData { a: 0.1, base: crate::metric::euclidean(3).unwrap() };
        assert!(matches!(build_conformal_metric(&conf), Err(Error::BaseNotSupported(_))));
        let zero = ConformalData { a: 0.0, base: minkowski(3).unwrap() };
        let g = build_conformal_metric(&zero).unwrap();
        assert_eq!(g.g(&[0.1, 0.2, 0.3]).unwrap(), minkowski(3).unwrap().g(&[0.1, 0.2, 0.3]).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn poly_data(c0: f64, c1: f64, c2: f64, k_f: f64) -> GRWData {
            GRWData::new(WarpFunction::Poly { coeffs: vec![c0, c1, c2] }, 3, k_f, (0.0, 1.0)).unwrap()
        }

        proptest! {
            /// When (A) and (B) hold the bound holds across λ ∈ [0, 1/f];
            /// when either fails a violation shows up at λ = 0 or λ = 1/f.
            #[test]
            fn ricci_proposition_both_ways(
                c1 in -0.5f64..0.5, c2 in -0.5f64..0.5, k_f in -1.0f64..1.0, c in -1.0f64..1.0,
            ) {
                let d = poly_data(1.0, c1, c2, k_f);
                prop_assume!(d.grid(201).iter().all(|&t| d.warp.f(t) > 0.1));
                let v = grw_ricci_conditions(&d, c);
                for t in d.grid(21) {
                    let f = d.warp.f(t);
                    let lams: Vec<f64> = (0..=10).map(|i| i as f64 / (10.0 * f)).collect();
                    if v.holds() {
                        for &l in &lams {
                            prop_assert!(ricci_parabola(&d, c, t, l).unwrap() >= -1e-8);
                        }
                    }
                }
                if !v.holds() {
                    let t = v.a_failures.first().or(v.b_failures.first()).copied().unwrap();
                    let f = d.warp.f(t);
                    let worst = ricci_parabola(&d, c, t, 0.0).unwrap().min(ricci_parabola(&d, c, t, 1.0 / f).unwrap());
                    prop_assert!(worst < 0.0);
                }
            }

            #[test]
            fn sectional_proposition_both_ways(
                c1 in -0.5f64..0.5, c2 in -0.5f64..0.5, k_f in -1.0f64..1.0, c in -1.0f64..1.0,
            ) {
                let d = poly_data(1.0, c1, c2, k_f);
                prop_assume!(d.grid(201).iter().all(|&t| d.warp.f(t) > 0.1));
                let v = grw_sectional_conditions(&d, c);
                for t in d.grid(21) {
                    let f = d.warp.f(t);
                    if v.holds() {
                        for i in 0..=10 {
                            prop_assert!(sectional_parabola(&d, c, t, i as f64 / (10.0 * f)) >= -1e-8);
                        }
                    }
                }
                if !v.holds() {
                    let t = v.a_failures.first().or(v.b_failures.first()).copied().unwrap();
                    let f = d.warp.f(t);
                    let worst = sectional_parabola(&d, c, t, 0.0).min(sectional_parabola(&d, c, t, 1.0 / f));
                    prop_assert!(worst < 0.0);
                }
            }

            #[test]
            fn ricci_contraction_matches_formula(t in -1.0f64..1.0, rate in 0.2f64..1.5, k_f in -0.5f64..1.5) {
                let d = GRWData::new(WarpFunction::Cosh { rate }, 3, k_f, (-1.5, 1.5)).unwrap();
                let g = build_grw_metric(&d).unwrap();
                let ric = g.ricci(&[t, 0.0, 0.0, 0.0]).unwrap();
                let want = grw_ricci_timelike(&d, t, 0.0, d.fiber_ricci()).unwrap();
                prop_assert!((ric[(0, 0)] - want).abs() <= 1e-6);
            }

            #[test]
            fn conformal_sign_near_origin(r in 0.001f64..0.05, chi in -1.0f64..1.0, phi in 0.0f64..6.28, neg in any::<bool>()) {
                let a = if neg { -0.1 } else { 0.1 };
                let conf = ConformalData { a, base: minkowski(3).unwrap() };
                let g = build_conformal_metric(&conf).unwrap();
                let dir = [chi.cosh(), chi.sinh() * phi.cos(), chi.sinh() * phi.sin()];
                let v2 = [chi.sinh(), chi.cosh() * phi.cos(), chi.cosh() * phi.sin()];
                let x: Vec<f64> = dir.iter().map(|d| r * d).collect();
                let k = g.sectional(&PlaneSpec::new(x, dir.to_vec(), v2.to_vec())).unwrap();
                prop_assert_eq!(k.signum(), a.signum());
            }
        }
    }
}
