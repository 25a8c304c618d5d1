//! Small-`t` behaviour of the Jacobi solutions (`det A = t^m - Ric t^{m+2}/6
//! + …`, `A e_i = t e_i - T e_i t³/6 + …`) and the local comparisons that
//! follow from a strict Ricci inequality at the base point.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jacobi::JacobiSolution;
use crate::metric::{inner, CoordinateMetric};
use crate::models::{ModelConstants, SignatureMode};
use crate::sclv::{
    check_compatible, direction_measure, solve_spec, CutFunction, DirectionNode, DirectionSet, JacobiSource, MetricSource,
    Resolution, SCLVSpec,
};

pub const FIT_WINDOW: (f64, f64) = (0.02, 0.2);
pub const FIT_NODES: usize = 40;

fn window_nodes() -> Vec<f64> {
    let (lo, hi) = FIT_WINDOW;
    let ratio = (hi / lo).ln();
    (0..FIT_NODES).map(|k| lo * (ratio * k as f64 / (FIT_NODES - 1) as f64).exp()).collect()
}

fn check_window(sol: &JacobiSolution) -> Result<()> {
    if sol.t_max() < FIT_WINDOW.1 * (1.0 - 1e-12) {
        return Err(Error::WindowUnresolved(format!("solution ends at {} before the fit window", sol.t_max())));
    }
    if sol.tol > 1e-10 {
        return Err(Error::WindowUnresolved(format!("solver tolerance {} is coarser than 1e-10", sol.tol)));
    }
    if let Some(tc) = sol.first_conjugate {
        if tc <= FIT_WINDOW.1 {
            return Err(Error::WindowUnresolved(format!("conjugate point at t = {tc} inside the fit window")));
        }
    }
    Ok(())
}

/// Least squares `y ≈ Σ_j coef_j t^{p_j}`; returns the coefficients and the
/// RMS residual.
fn fit(ts: &[f64], ys: &[f64], powers: &[i32]) -> Result<(Vec<f64>, f64)> {
    let x = DMatrix::from_fn(ts.len(), powers.len(), |i, j| ts[i].powi(powers[j]));
    let y = DVector::from_column_slice(ys);
    let coef = x
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::WindowUnresolved(format!("least squares failed: {e}")))?;
    let r = &x * &coef - &y;
    Ok((coef.iter().copied().collect(), (r.norm_squared() / ts.len() as f64).sqrt()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionFit {
    pub m: usize,
    /// `|det A(t_lo)/t_lo^m - 1|`.
    pub leading_check: f64,
    /// `-6 ×` the `t^{m+2}` coefficient of `det A`.
    pub ricci_estimate: f64,
    /// Fitted `t^{m+3}` coefficient (vanishes for constant profiles).
    pub cubic_term: f64,
    pub fit_window: (f64, f64),
    pub residual: f64,
}

/// Fit `det A / t^m - 1 ≈ a t² + b t³ + d t⁴` on the window.
pub fn fit_det_a_expansion(sol: &JacobiSolution) -> Result<ExpansionFit> {
    check_window(sol)?;
    let m = sol.m() as i32;
    let ts = window_nodes();
    let mut ys = Vec::with_capacity(ts.len());
    for &t in &ts {
        let det = sol.state_at(t)?.det();
        ys.push(det / t.powi(m) - 1.0);
    }
    let (coef, residual) = fit(&ts, &ys, &[2, 3, 4, 5])?;
    Ok(ExpansionFit {
        m: sol.m(),
        leading_check: ys[0].abs(),
        ricci_estimate: -6.0 * coef[0],
        cubic_term: coef[1],
        fit_window: FIT_WINDOW,
        residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct JacobiFieldFit {
    pub index: usize,
    /// `t³` coefficient of the diagonal component `(A e_i)_i`.
    pub diagonal_cubic: f64,
    /// `T_ii(0) = -6 × diagonal_cubic`.
    pub tidal_estimate: f64,
    /// `K(γ', E_i) = -6 ε × diagonal_cubic`.
    pub sectional_estimate: f64,
    /// Fitted `t³` coefficients of the off-diagonal components.
    pub off_diagonal_cubic: Vec<f64>,
    /// `max |(A e_i)_j| / t³` over the window, `j ≠ i`.
    pub off_diagonal_bound: f64,
    /// The off-diagonal components stay within `C t³`, `C` from the fit.
    pub off_diagonal_cubic_order: bool,
    pub residual: f64,
}

/// Fit the frame components of the Jacobi field `A e_i`.
pub fn fit_jacobi_expansion(sol: &JacobiSolution, index: usize) -> Result<JacobiFieldFit> {
    check_window(sol)?;
    let m = sol.m();
    if index >= m {
        return Err(Error::InvalidSpec(format!("frame index {index} out of range for m = {m}")));
    }
    let ts = window_nodes();
    let states: Vec<DMatrix<f64>> = ts.iter().map(|&t| sol.state_at(t).map(|s| s.a)).collect::<Result<_>>()?;
    let diag: Vec<f64> = ts.iter().zip(&states).map(|(t, a)| a[(index, index)] / t - 1.0).collect();
    let (coef, mut residual) = fit(&ts, &diag, &[2, 3, 4])?;
    let mut off = Vec::new();
    let mut bound: f64 = 0.0;
    let mut ok = true;
    for j in (0..m).filter(|&j| j != index) {
        let ys: Vec<f64> = ts.iter().zip(&states).map(|(t, a)| a[(j, index)] / t.powi(3)).collect();
        let (c, r) = fit(&ts, &ys, &[0, 1, 2])?;
        residual = residual.max(r);
        let c_bound = c[0].abs() + FIT_WINDOW.1 * c[1].abs() + FIT_WINDOW.1.powi(2) * c[2].abs();
        let observed = ys.iter().fold(0.0f64, |a, y| a.max(y.abs()));
        ok &= observed <= 2.0 * c_bound + 1e-6;
        bound = bound.max(observed);
        off.push(c[0]);
    }
    let eps = sol.radial_sign;
    Ok(JacobiFieldFit {
        index,
        diagonal_cubic: coef[0],
        tidal_estimate: -6.0 * coef[0],
        sectional_estimate: -6.0 * eps * coef[0],
        off_diagonal_cubic: off,
        off_diagonal_bound: bound,
        off_diagonal_cubic_order: ok,
        residual,
    })
}

/// `Ric(ξ, ξ)` at `p` for frame components `ξ`.
pub fn ricci_along(metric: &CoordinateMetric, p: &[f64], frame: &[f64]) -> Result<f64> {
    let xi = metric.orthonormal_basis(p)?.combine(frame);
    let ric = metric.ricci(p)?;
    Ok(inner(&ric, &xi, &xi))
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalComparisonReport {
    pub xi: Vec<f64>,
    pub ric1: f64,
    pub ric2: f64,
    /// `sign(det A₁ - det A₂)` near the origin: `-sign(ric1 - ric2)`.
    pub predicted_sign: f64,
    /// Largest `δ` with the predicted ordering on `(0, δ)` for every cone
    /// direction (capped at the probe length).
    pub delta: f64,
    /// The first crossing was found before the probe length.
    pub crossing_found: bool,
    pub cone: DirectionSet,
    pub vol1: f64,
    pub vol2: f64,
    /// `sign(vol1 - vol2)` equals the predicted sign.
    pub strict_holds: bool,
}

#[derive(Debug, Clone)]
pub struct LocalOptions {
    /// Cone of directions around `ξ`; defaults to a narrow cap of the
    /// causal character of `ξ`.
    pub cone: Option<DirectionSet>,
    pub resolution: Resolution,
    pub t_probe: f64,
    /// Delta values below this are reported as not found.
    pub min_delta: f64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions { cone: None, resolution: Resolution { radial: 4, azimuth: 4 }, t_probe: 1.0, min_delta: 1e-3 }
    }
}

const SCAN_POINTS: usize = 200;
const SCAN_START: f64 = 1e-2;

/// First `t` in `(SCAN_START, t_probe]` where `sign(det A₁ - det A₂)`
/// departs from `sign`, refined by bisection.
fn first_crossing(s1: &JacobiSolution, s2: &JacobiSolution, sign: f64, t_probe: f64) -> Result<Option<f64>> {
    let d = |t: f64| -> Result<f64> { Ok(sign * (s1.state_at(t)?.det() - s2.state_at(t)?.det())) };
    let mut prev = SCAN_START.min(t_probe);
    if d(prev)? <= 0.0 {
        return Ok(Some(prev));
    }
    for k in 1..=SCAN_POINTS {
        let t = SCAN_START + (t_probe - SCAN_START) * k as f64 / SCAN_POINTS as f64;
        if d(t)? <= 0.0 {
            let (mut a, mut b) = (prev, t);
            while b - a > 1e-10 {
                let mid = 0.5 * (a + b);
                if d(mid)? > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        prev = t;
    }
    Ok(None)
}

fn mode_of(xi: &[f64], lorentzian: bool) -> (f64, SignatureMode) {
    let q: f64 = xi.iter().enumerate().map(|(i, x)| if i == 0 && lorentzian { -x * x } else { x * x }).sum();
    if q < 0.0 {
        (q, SignatureMode::LorentzianTimelike)
    } else {
        (q, SignatureMode::Riemannian)
    }
}

/// Local comparison over two Jacobi sources whose base-point Ricci values
/// along `ξ` are `ric1` and `ric2`.
pub fn local_comparison_with(
    src1: &dyn JacobiSource,
    src2: &dyn JacobiSource,
    n: usize,
    xi: &[f64],
    lorentzian: bool,
    ric: (f64, f64),
    opts: &LocalOptions,
    tol: f64,
) -> Result<LocalComparisonReport> {
    let (ric1, ric2) = ric;
    if (ric1 - ric2).abs() <= 1e-9 * (1.0 + ric1.abs().max(ric2.abs())) {
        return Err(Error::RicciEqual { ric1, ric2 });
    }
    let (q, mode) = mode_of(xi, lorentzian);
    if (q.abs() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidVector(format!("ξ = {xi:?} is not unit")));
    }
    let predicted_sign = -(ric1 - ric2).signum();
    let cone = opts.cone.clone().unwrap_or(match mode {
        SignatureMode::LorentzianTimelike => DirectionSet::TimelikeCap { chi_max: 0.2 },
        SignatureMode::Riemannian if lorentzian => DirectionSet::SpacelikeCap { chi_max: 0.2 },
        SignatureMode::Riemannian => DirectionSet::Sphere,
    });
    let consts = ModelConstants::new(0.0, n)?;
    let probe_spec = SCLVSpec::new(consts, cone.clone(), CutFunction::constant(opts.t_probe))?
        .with_mode(mode)?
        .with_resolution(opts.resolution);
    let mut nodes = vec![DirectionNode { frame: xi.to_vec(), weight: 0.0, coarse_weight: 0.0 }];
    nodes.extend(direction_measure(&probe_spec)?);
    let radial = ModelConstants::radial(0.0, n, mode)?;

    let mut delta = opts.t_probe;
    let mut crossing_found = false;
    for node in &nodes {
        let s1 = src1.solve(node, radial, opts.t_probe, &[], tol)?;
        let s2 = src2.solve(node, radial, opts.t_probe, &[], tol)?;
        let end = [s1.first_conjugate, s2.first_conjugate].into_iter().flatten().fold(opts.t_probe, f64::min);
        if let Some(t) = first_crossing(&s1, &s2, predicted_sign, end)? {
            crossing_found = true;
            delta = delta.min(t);
        } else if end < delta {
            delta = end;
        }
    }
    if delta < opts.min_delta {
        return Err(Error::DeltaNotFound { t_probe: opts.t_probe });
    }
    let spec = SCLVSpec::new(consts, cone.clone(), CutFunction::constant(0.5 * delta))?
        .with_mode(mode)?
        .with_resolution(opts.resolution);
    let v1 = solve_spec(&spec, src1, 1.0, &[], tol)?.report_at(1.0)?.vol_u;
    let v2 = solve_spec(&spec, src2, 1.0, &[], tol)?.report_at(1.0)?.vol_u;
    Ok(LocalComparisonReport {
        xi: xi.to_vec(),
        ric1,
        ric2,
        predicted_sign,
        delta,
        crossing_found,
        cone,
        vol1: v1,
        vol2: v2,
        strict_holds: (v1 - v2).signum() == predicted_sign && v1 != v2,
    })
}

/// Strict local volume ordering near `p1`, `p2` from `Ric₁(ξ,ξ) ≠ Ric₂(ξ,ξ)`,
/// with tangent spaces identified through the orthonormal frames.
pub fn local_comparison(
    metric1: &CoordinateMetric,
    metric2: &CoordinateMetric,
    p1: &[f64],
    p2: &[f64],
    xi: &[f64],
    opts: &LocalOptions,
    tol: f64,
) -> Result<LocalComparisonReport> {
    if metric1.dim() != metric2.dim() || metric1.signature() != metric2.signature() {
        return Err(Error::Signature("local comparison needs metrics of the same dimension and signature".into()));
    }
    let n = metric1.dim();
    let lorentzian = metric1.signature().iter().any(|s| *s < 0.0);
    let ric = (ricci_along(metric1, p1, xi)?, ricci_along(metric2, p2, xi)?);
    local_comparison_with(
        &MetricSource::new(metric1, p1),
        &MetricSource::new(metric2, p2),
        n,
        xi,
        lorentzian,
        ric,
        opts,
        tol,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct BallComparisonReport {
    /// `+1` when `Ric₁ < Ric₂` everywhere (first balls larger), `-1` otherwise.
    pub ordering: f64,
    pub worst_ricci_gap: f64,
    pub epsilon: f64,
    pub r: Vec<f64>,
    pub vol1: Vec<f64>,
    pub vol2: Vec<f64>,
    /// Requested radii at or beyond `ε`, not compared.
    pub skipped: Vec<f64>,
    pub strict_holds: bool,
}

/// Metric balls of radius `r` around `p1`, `p2` in two Riemannian metrics
/// with a strict Ricci ordering at the centres.
pub fn riemannian_ball_comparison(
    metric1: &CoordinateMetric,
    metric2: &CoordinateMetric,
    p1: &[f64],
    p2: &[f64],
    r_grid: &[f64],
    tol: f64,
) -> Result<BallComparisonReport> {
    let n = metric1.dim();
    if metric2.dim() != n {
        return Err(Error::InvalidSpec("metrics have different dimensions".into()));
    }
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[1] <= w[0]) || r_grid[0] <= 0.0 {
        return Err(Error::InvalidSpec("r_grid must be positive and strictly increasing".into()));
    }
    let r_max = *r_grid.last().unwrap();
    let consts = ModelConstants::new(0.0, n)?;
    let probe = SCLVSpec::new(consts, DirectionSet::Sphere, CutFunction::constant(1.0))?
        .with_resolution(Resolution { radial: 4, azimuth: 4 });
    check_compatible(&probe, metric1)?;
    check_compatible(&probe, metric2)?;
    let nodes = direction_measure(&probe)?;
    let mut gaps = Vec::with_capacity(nodes.len());
    for d in &nodes {
        gaps.push(ricci_along(metric2, p2, &d.frame)? - ricci_along(metric1, p1, &d.frame)?);
    }
    let (lo, hi) = gaps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), g| (a.min(*g), b.max(*g)));
    if hi.abs() <= 1e-9 && lo.abs() <= 1e-9 {
        return Err(Error::RicciEqual { ric1: 0.0, ric2: 0.0 });
    }
    let ordering = if lo > 1e-9 {
        1.0
    } else if hi < -1e-9 {
        -1.0
    } else {
        return Err(Error::HypothesisViolated {
            detail: format!("Ricci gap changes sign over the unit sphere ({lo:.3e} .. {hi:.3e})"),
        });
    };

    let src1 = MetricSource::new(metric1, p1);
    let src2 = MetricSource::new(metric2, p2);
    let t_probe = 1.5 * r_max;
    let radial = ModelConstants::radial(0.0, n, SignatureMode::Riemannian)?;
    let mut epsilon = t_probe;
    for node in &nodes {
        let s1 = src1.solve(node, radial, t_probe, &[], tol)?;
        let s2 = src2.solve(node, radial, t_probe, &[], tol)?;
        let end = [s1.first_conjugate, s2.first_conjugate].into_iter().flatten().fold(t_probe, f64::min);
        epsilon = epsilon.min(first_crossing(&s1, &s2, ordering, end)?.unwrap_or(end));
    }
    if epsilon <= 1e-3 {
        return Err(Error::DeltaNotFound { t_probe });
    }
    let (keep, skipped): (Vec<f64>, Vec<f64>) = r_grid.iter().partition(|r| **r < epsilon);
    let mut rep = BallComparisonReport {
        ordering,
        worst_ricci_gap: if ordering > 0.0 { lo } else { -hi },
        epsilon,
        r: keep.clone(),
        vol1: Vec::new(),
        vol2: Vec::new(),
        skipped,
        strict_holds: true,
    };
    if keep.is_empty() {
        return Ok(rep);
    }
    let r_top = *keep.last().unwrap();
    let spec = SCLVSpec::new(consts, DirectionSet::Sphere, CutFunction::constant(1.0))?.with_scale_max(r_top.max(1.0))?;
    let c1 = solve_spec(&spec, &src1, r_top, &keep, tol)?.ratio_curve(&keep)?;
    let c2 = solve_spec(&spec, &src2, r_top, &keep, tol)?.ratio_curve(&keep)?;
    rep.vol1 = c1.vol_ur;
    rep.vol2 = c2.vol_ur;
    rep.strict_holds = rep.vol1.iter().zip(&rep.vol2).all(|(a, b)| (a - b) * ordering > 0.0);
    Ok(rep)
}
