//! Radial geodesics with a parallel orthonormal frame, and the tidal
//! operator `v ↦ R(v, γ')γ'` expressed in that frame.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::metric::{gram_schmidt, inner, CoordinateMetric};
use crate::ode::{Dopri, OdeOptions};

/// Tidal matrices `T(t)` on the orthogonal complement of the radial
/// direction, with `T_ij = ε_i R(E_j, γ', γ', E_i)` so that the Jacobi
/// equation reads `A'' + T A = 0`.
pub trait TidalProfile: Send + Sync {
    /// `n - 1`.
    fn dim(&self) -> usize;
    fn eval(&self, t: f64) -> Result<DMatrix<f64>>;
    fn t_max(&self) -> f64;
    /// `ε = g(γ', γ')`.
    fn radial_sign(&self) -> f64 {
        -1.0
    }
    /// `ε_i = g(E_i, E_i)`.
    fn frame_signs(&self) -> Vec<f64> {
        vec![1.0; self.dim()]
    }
}

fn check_range(t: f64, t_max: f64) -> Result<()> {
    if t < 0.0 || t > t_max * (1.0 + 1e-12) {
        return Err(Error::Extrapolation { t, t_max });
    }
    Ok(())
}

/// A profile independent of `t`.
#[derive(Debug, Clone)]
pub struct ConstantProfile {
    pub matrix: DMatrix<f64>,
    pub t_max: f64,
    pub radial_sign: f64,
    pub frame_signs: Vec<f64>,
}

impl ConstantProfile {
    /// `T ≡ value · I` along a timelike radial geodesic.
    pub fn scalar(value: f64, dim: usize, t_max: f64) -> Self {
        ConstantProfile {
            matrix: DMatrix::identity(dim, dim) * value,
            t_max,
            radial_sign: -1.0,
            frame_signs: vec![1.0; dim],
        }
    }

    pub fn diagonal(values: &[f64], t_max: f64) -> Self {
        let dim = values.len();
        ConstantProfile {
            matrix: DMatrix::from_diagonal(&DVector::from_row_slice(values)),
            t_max,
            radial_sign: -1.0,
            frame_signs: vec![1.0; dim],
        }
    }

    pub fn with_signs(mut self, radial_sign: f64, frame_signs: Vec<f64>) -> Self {
        self.radial_sign = radial_sign;
        self.frame_signs = frame_signs;
        self
    }
}

impl TidalProfile for ConstantProfile {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn eval(&self, t: f64) -> Result<DMatrix<f64>> {
        check_range(t, self.t_max)?;
        Ok(self.matrix.clone())
    }
    fn t_max(&self) -> f64 {
        self.t_max
    }
    fn radial_sign(&self) -> f64 {
        self.radial_sign
    }
    fn frame_signs(&self) -> Vec<f64> {
        self.frame_signs.clone()
    }
}

/// A profile given by a closure.
pub struct FnProfile<F> {
    pub dim: usize,
    pub t_max: f64,
    pub radial_sign: f64,
    pub f: F,
}

impl<F> TidalProfile for FnProfile<F>
where
    F: Fn(f64) -> DMatrix<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64) -> Result<DMatrix<f64>> {
        check_range(t, self.t_max)?;
        Ok((self.f)(t))
    }
    fn t_max(&self) -> f64 {
        self.t_max
    }
    fn radial_sign(&self) -> f64 {
        self.radial_sign
    }
}

/// A radial geodesic `γ(t) = exp_p(tξ)` with its parallel frame and tidal
/// matrices on the integrator's grid.
#[derive(Debug, Clone)]
pub struct RadialSystem {
    pub base_point: Vec<f64>,
    pub xi: DVector<f64>,
    /// `ε = g(ξ, ξ)`.
    pub epsilon: f64,
    pub grid: Vec<f64>,
    pub path: Vec<Vec<f64>>,
    pub velocity: Vec<DVector<f64>>,
    /// `E_1 … E_{n-1}` at each grid point.
    pub frames: Vec<Vec<DVector<f64>>>,
    pub frame_signs: Vec<f64>,
    pub tidal: Vec<DMatrix<f64>>,
    /// Largest `|g(γ', γ') - ε|` seen before each re-normalization.
    pub max_normalization_drift: f64,
    /// Largest frame orthonormality defect seen before each re-normalization.
    pub max_frame_drift: f64,
}

impl RadialSystem {
    pub fn t_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn dim(&self) -> usize {
        self.base_point.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RadialOptions {
    pub tol: f64,
    /// Upper bound on the step, which is also the tidal sampling spacing.
    pub h_max: f64,
    /// Fixed step instead of adaptive control.
    pub fixed_step: Option<f64>,
    /// Re-orthonormalize the frame every this many steps.
    pub reorthonormalize_every: usize,
}

impl RadialOptions {
    pub fn new(tol: f64) -> Self {
        RadialOptions { tol, h_max: 0.02, fixed_step: None, reorthonormalize_every: 32 }
    }
}

/// Check that `ξ` is a unit vector admissible as a radial direction and
/// return `ε = g(ξ, ξ)`.
pub fn check_direction(metric: &CoordinateMetric, p: &[f64], xi: &DVector<f64>) -> Result<f64> {
    let g = metric.g(p)?;
    let q = inner(&g, xi, xi);
    if (q.abs() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidVector(format!("direction is not unit: g(ξ, ξ) = {q}")));
    }
    if q < 0.0 && !metric.is_future(xi.as_slice()) {
        return Err(Error::InvalidVector("timelike direction is not future-pointing".into()));
    }
    Ok(q.signum())
}

fn chart_exit(e: Error, t: f64) -> Error {
    match e {
        Error::OutOfChart { .. } => Error::ChartExit { t },
        other => other,
    }
}

/// Integrate the geodesic and parallel transport of an initial frame from
/// `p` along `ξ` up to `t_max`.
pub fn integrate_radial(
    metric: &CoordinateMetric,
    p: &[f64],
    xi: &DVector<f64>,
    t_max: f64,
    tol: f64,
) -> Result<RadialSystem> {
    integrate_radial_with(metric, p, xi, t_max, RadialOptions::new(tol))
}

pub fn integrate_radial_with(
    metric: &CoordinateMetric,
    p: &[f64],
    xi: &DVector<f64>,
    t_max: f64,
    opts: RadialOptions,
) -> Result<RadialSystem> {
    let n = metric.dim();
    if p.len() != n || xi.len() != n {
        return Err(Error::InvalidSpec("base point or direction has the wrong dimension".into()));
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidSpec(format!("t_max must be positive, got {t_max}")));
    }
    let eps = check_direction(metric, p, xi)?;
    let g0 = metric.g(p)?;
    let chart: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            e
        })
        .collect();
    let frame0 = gram_schmidt(&g0, &[(xi.clone(), eps)], &chart)?;
    let frame_signs: Vec<f64> = frame0.signs[1..].to_vec();

    let mut y0 = Vec::with_capacity(n * (n + 1));
    y0.extend_from_slice(p);
    y0.extend(xi.iter());
    for e in &frame0.vectors[1..] {
        y0.extend(e.iter());
    }

    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let x = &y[..n];
        let u = &y[n..2 * n];
        let gamma = metric.christoffel(x).map_err(|e| chart_exit(e, t))?;
        dy[..n].copy_from_slice(u);
        let acc = gamma.contract(u, u);
        for i in 0..n {
            dy[n + i] = -acc[i];
        }
        for k in 0..n - 1 {
            let off = 2 * n + k * n;
            let tr = gamma.contract(u, &y[off..off + n]);
            for i in 0..n {
                dy[off + i] = -tr[i];
            }
        }
        Ok(())
    };

    let ode_opts = match opts.fixed_step {
        Some(h) => OdeOptions::fixed(h),
        None => OdeOptions::adaptive(opts.tol).with_h_max(opts.h_max),
    };
    let mut ode = Dopri::new(rhs, 0.0, y0, ode_opts).map_err(|e| chart_exit(e, 0.0))?;

    let mut sys = RadialSystem {
        base_point: p.to_vec(),
        xi: xi.clone(),
        epsilon: eps,
        grid: Vec::new(),
        path: Vec::new(),
        velocity: Vec::new(),
        frames: Vec::new(),
        frame_signs: frame_signs.clone(),
        tidal: Vec::new(),
        max_normalization_drift: 0.0,
        max_frame_drift: 0.0,
    };
    record(metric, &mut sys, 0.0, ode.y(), n)?;
    let mut since = 0;
    while ode.t() < t_max {
        ode.step(t_max)?;
        since += 1;
        if since >= opts.reorthonormalize_every && ode.t() < t_max {
            since = 0;
            let fixed = reorthonormalize(metric, &mut sys, ode.y(), n, eps, &frame_signs)
                .map_err(|e| chart_exit(e, ode.t()))?;
            ode.reset_state(fixed)?;
        }
        let t = ode.t();
        let y = ode.y().to_vec();
        record(metric, &mut sys, t, &y, n).map_err(|e| chart_exit(e, t))?;
    }
    Ok(sys)
}

fn split_state(y: &[f64], n: usize) -> (Vec<f64>, DVector<f64>, Vec<DVector<f64>>) {
    let x = y[..n].to_vec();
    let u = DVector::from_row_slice(&y[n..2 * n]);
    let frame = (0..n - 1).map(|k| DVector::from_row_slice(&y[2 * n + k * n..2 * n + (k + 1) * n])).collect();
    (x, u, frame)
}

fn drift(g: &DMatrix<f64>, u: &DVector<f64>, frame: &[DVector<f64>], eps: f64, signs: &[f64]) -> (f64, f64) {
    let norm = (inner(g, u, u) - eps).abs();
    let mut fr = 0.0f64;
    for (i, ei) in frame.iter().enumerate() {
        fr = fr.max(inner(g, ei, u).abs());
        for (j, ej) in frame.iter().enumerate() {
            let want = if i == j { signs[i] } else { 0.0 };
            fr = fr.max((inner(g, ei, ej) - want).abs());
        }
    }
    (norm, fr)
}

fn reorthonormalize(
    metric: &CoordinateMetric,
    sys: &mut RadialSystem,
    y: &[f64],
    n: usize,
    eps: f64,
    signs: &[f64],
) -> Result<Vec<f64>> {
    let (x, u, frame) = split_state(y, n);
    let g = metric.g(&x)?;
    let (dn, df) = drift(&g, &u, &frame, eps, signs);
    sys.max_normalization_drift = sys.max_normalization_drift.max(dn);
    sys.max_frame_drift = sys.max_frame_drift.max(df);
    let u = &u / (eps * inner(&g, &u, &u)).sqrt();
    let fixed = gram_schmidt(&g, &[(u.clone(), eps)], &frame)?;
    let mut out = Vec::with_capacity(y.len());
    out.extend_from_slice(&x);
    out.extend(u.iter());
    for e in &fixed.vectors[1..] {
        out.extend(e.iter());
    }
    Ok(out)
}

fn record(metric: &CoordinateMetric, sys: &mut RadialSystem, t: f64, y: &[f64], n: usize) -> Result<()> {
    let (x, u, frame) = split_state(y, n);
    let r = metric.riemann(&x)?;
    let g = r.metric();
    let (dn, df) = drift(g, &u, &frame, sys.epsilon, &sys.frame_signs);
    sys.max_normalization_drift = sys.max_normalization_drift.max(dn);
    sys.max_frame_drift = sys.max_frame_drift.max(df);
    let m = n - 1;
    let images: Vec<DVector<f64>> = frame.iter().map(|e| r.apply(e, &u, &u)).collect();
    let tidal = DMatrix::from_fn(m, m, |i, j| sys.frame_signs[i] * inner(g, &images[j], &frame[i]));
    sys.grid.push(t);
    sys.path.push(x);
    sys.velocity.push(u);
    sys.frames.push(frame);
    sys.tidal.push(tidal);
    Ok(())
}

/// Cubic Lagrange interpolation of a system's tidal matrices.
#[derive(Debug, Clone)]
pub struct InterpolatedProfile {
    grid: Arc<Vec<f64>>,
    values: Arc<Vec<DMatrix<f64>>>,
    radial_sign: f64,
    frame_signs: Vec<f64>,
}

impl InterpolatedProfile {
    pub fn new(grid: Vec<f64>, values: Vec<DMatrix<f64>>, radial_sign: f64, frame_signs: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSpec("tidal samples need an increasing grid".into()));
        }
        Ok(InterpolatedProfile { grid: Arc::new(grid), values: Arc::new(values), radial_sign, frame_signs })
    }
}

impl TidalProfile for InterpolatedProfile {
    fn dim(&self) -> usize {
        self.values[0].nrows()
    }

    fn eval(&self, t: f64) -> Result<DMatrix<f64>> {
        let t_max = self.t_max();
        check_range(t, t_max)?;
        let g = &self.grid;
        let n = g.len();
        let k = g.partition_point(|&s| s <= t).saturating_sub(1).min(n - 1);
        if g[k] == t {
            return Ok(self.values[k].clone());
        }
        let width = n.min(4);
        let start = k.saturating_sub(1).min(n - width);
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for i in start..start + width {
            let mut w = 1.0;
            for j in start..start + width {
                if j != i {
                    w *= (t - g[j]) / (g[i] - g[j]);
                }
            }
            out += &self.values[i] * w;
        }
        Ok(out)
    }

    fn t_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    fn radial_sign(&self) -> f64 {
        self.radial_sign
    }

    fn frame_signs(&self) -> Vec<f64> {
        self.frame_signs.clone()
    }
}

/// The tidal profile of a radial system, interpolated cubically in `t`.
pub fn tidal_profile(system: &RadialSystem) -> InterpolatedProfile {
    InterpolatedProfile {
        grid: Arc::new(system.grid.clone()),
        values: Arc::new(system.tidal.clone()),
        radial_sign: system.epsilon,
        frame_signs: system.frame_signs.clone(),
    }
}

/// `exp_p(v)`: the endpoint at time 1 of the geodesic with initial velocity
/// `v` (any causal character).
pub fn geodesic_endpoint(metric: &CoordinateMetric, p: &[f64], v: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = metric.dim();
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let gamma = metric.christoffel(&y[..n]).map_err(|e| chart_exit(e, t))?;
        dy[..n].copy_from_slice(&y[n..]);
        let acc = gamma.contract(&y[n..], &y[n..]);
        for i in 0..n {
            dy[n + i] = -acc[i];
        }
        Ok(())
    };
    let mut y0 = p.to_vec();
    y0.extend_from_slice(v);
    let mut ode = Dopri::new(rhs, 0.0, y0, OdeOptions::adaptive(tol).with_h_max(0.05))?;
    ode.advance(1.0)?;
    Ok(ode.y()[..n].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature_models::{build_grw_metric, model_spacetime, GRWData, WarpFunction};
    use crate::metric::{minkowski, space_form};
    use approx::assert_abs_diff_eq;

    fn timelike(chi: f64, n: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[0] = chi.cosh();
        v[1] = chi.sinh();
        v
    }

    #[test]
    fn minkowski_lines() {
        let m = minkowski(3).unwrap();
        let p = [0.1, 0.2, -0.3];
        let xi = timelike(0.7, 3);
        let sys = integrate_radial(&m, &p, &xi, 2.0, 1e-10).unwrap();
        assert_eq!(sys.t_max(), 2.0);
        for (t, x) in sys.grid.iter().zip(&sys.path) {
            for i in 0..3 {
                assert_abs_diff_eq!(x[i], p[i] + t * xi[i], epsilon = 1e-12);
            }
        }
        assert!(sys.tidal.iter().all(|m| m.abs().max() == 0.0));
        for f in &sys.frames {
            for (e, e0) in f.iter().zip(&sys.frames[0]) {
                assert!((e - e0).abs().max() < 1e-12);
            }
        }
    }

    #[test]
    fn comoving_grw_tidal_is_minus_f2_over_f() {
        let d = GRWData::new(WarpFunction::Poly { coeffs: vec![1.0, 0.3, 0.2] }, 3, 0.5, (-1.0, 3.0)).unwrap();
        let g = build_grw_metric(&d).unwrap();
        let p = [0.2, 0.0, 0.0, 0.0];
        let xi = timelike(0.0, 4);
        let sys = integrate_radial(&g, &p, &xi, 1.5, 1e-10).unwrap();
        for (t, (x, tid)) in sys.grid.iter().zip(sys.path.iter().zip(&sys.tidal)) {
            assert_abs_diff_eq!(x[0], 0.2 + t, epsilon = 1e-10);
            assert!(x[1..].iter().all(|v| v.abs() < 1e-12));
            let (f, _, f2) = d.warp.eval(0.2 + t);
            assert!((tid - DMatrix::identity(3, 3) * (-f2 / f)).abs().max() < 1e-8);
        }
        let prof = tidal_profile(&sys);
        let (f, _, f2) = d.warp.eval(0.2 + 0.77);
        assert!((prof.eval(0.77).unwrap() - DMatrix::identity(3, 3) * (-f2 / f)).abs().max() < 1e-7);
        assert!(matches!(prof.eval(1.6), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn exp_warp_profile_is_minus_identity() {
        let d = GRWData::new(WarpFunction::Exp { rate: 1.0 }, 2, 0.0, (-3.0, 3.0)).unwrap();
        let g = build_grw_metric(&d).unwrap();
        let sys = integrate_radial(&g, &[0.0, 0.0, 0.0], &timelike(0.0, 3), 2.0, 1e-10).unwrap();
        let prof = tidal_profile(&sys);
        for &t in &[0.0, 0.37, 1.91] {
            assert!((prof.eval(t).unwrap() + DMatrix::identity(2, 2)).abs().max() < 1e-8);
        }
    }

    #[test]
    fn constant_curvature_tidal() {
        for &(c, chi) in &[(-1.0, 1.3), (0.5, 1.3), (1.0, 1.3)] {
            let g = model_spacetime(c, 4).unwrap();
            let xi = DVector::from_row_slice(&[f64::cosh(chi), 0.6 * f64::sinh(chi), 0.8 * f64::sinh(chi), 0.0]);
            let sys = integrate_radial(&g, &[0.0; 4], &xi, 2.5, 1e-10).unwrap();
            for tid in &sys.tidal {
                assert!((tid + DMatrix::identity(3, 3) * c).abs().max() <= 1e-7, "c = {c}");
            }
            let prof = tidal_profile(&sys);
            assert!((prof.eval(0.37).unwrap() + DMatrix::identity(3, 3) * c).abs().max() <= 1e-7);
        }
    }

    #[test]
    fn riemannian_sphere_tidal_is_plus_k() {
        let g = space_form(1.0, 3).unwrap();
        let xi = DVector::from_row_slice(&[0.6, 0.0, 0.8]);
        let sys = integrate_radial(&g, &[0.0; 3], &xi, 2.5, 1e-10).unwrap();
        assert_eq!(sys.epsilon, 1.0);
        for tid in &sys.tidal {
            assert!((tid - DMatrix::identity(2, 2)).abs().max() < 1e-7);
        }
    }

    #[test]
    fn frame_invariants_on_boosted_grw_geodesic() {
        let d = GRWData::new(WarpFunction::Cosh { rate: 1.0 }, 3, 1.2, (-4.0, 4.0)).unwrap();
        let g = build_grw_metric(&d).unwrap();
        let f = d.warp.f(0.1);
        let xi = DVector::from_row_slice(&[
            0.9f64.cosh(),
            0.5 * 0.9f64.sinh() / f,
            0.0,
            (0.75f64).sqrt() * 0.9f64.sinh() / f,
        ]);
        let sys = integrate_radial(&g, &[0.1, 0.0, 0.0, 0.0], &xi, 3.0, 1e-10).unwrap();
        assert!(sys.max_normalization_drift <= 1e-8, "{}", sys.max_normalization_drift);
        assert!(sys.max_frame_drift <= 1e-8, "{}", sys.max_frame_drift);
        for tid in &sys.tidal {
            // self-adjoint with respect to diag(ε_i)
            let s = DMatrix::from_diagonal(&DVector::from_row_slice(&sys.frame_signs));
            let st = &s * tid;
            assert!((&st - st.transpose()).abs().max() <= 1e-8);
        }
    }

    #[test]
    fn spacelike_direction_in_lorentzian_chart() {
        let g = model_spacetime(1.0, 3).unwrap();
        let xi = DVector::from_row_slice(&[0.0, 1.0, 0.0]);
        let sys = integrate_radial(&g, &[0.0; 3], &xi, 1.0, 1e-10).unwrap();
        assert_eq!(sys.epsilon, 1.0);
        assert_eq!(sys.frame_signs, vec![-1.0, 1.0]);
        for tid in &sys.tidal {
            assert!((tid - DMatrix::identity(2, 2)).abs().max() < 1e-7);
        }
    }

    #[test]
    fn rejected_directions() {
        let m = minkowski(2).unwrap();
        let past = DVector::from_row_slice(&[-1.0, 0.0]);
        assert!(matches!(integrate_radial(&m, &[0.0, 0.0], &past, 1.0, 1e-10), Err(Error::InvalidVector(_))));
        let null = DVector::from_row_slice(&[1.0, 1.0]);
        assert!(matches!(integrate_radial(&m, &[0.0, 0.0], &null, 1.0, 1e-10), Err(Error::InvalidVector(_))));
    }

    #[test]
    fn chart_exit_is_reported() {
        let d = GRWData::new(WarpFunction::Cosh { rate: 1.0 }, 1, 0.0, (-1.0, 1.0)).unwrap();
        let grw = build_grw_metric(&d).unwrap();
        let err = integrate_radial(&grw, &[0.0, 0.0], &timelike(0.0, 2), 2.0, 1e-10).unwrap_err();
        match err {
            // reported at the stage that left the chart, at most one step late
            Error::ChartExit { t } => assert!(t > 0.9 && t < 1.03, "t = {t}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn integrator_order_on_non_comoving_geodesic() {
        let d = GRWData::new(WarpFunction::Cosh { rate: 1.0 }, 2, 1.0, (-4.0, 4.0)).unwrap();
        let g = build_grw_metric(&d).unwrap();
        let xi = timelike(0.8, 3);
        let run = |h: f64| {
            let mut o = RadialOptions::new(f64::INFINITY);
            o.fixed_step = Some(h);
            integrate_radial_with(&g, &[0.0; 3], &xi, 1.0, o).unwrap().path.last().unwrap().clone()
        };
        let reference = run(0.005);
        let err = |x: Vec<f64>| x.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let e1 = err(run(0.1));
        let e2 = err(run(0.05));
        assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn interpolation_is_cubic_exact() {
        let grid: Vec<f64> = (0..8).map(|i| (i as f64 * 0.3).powf(1.2)).collect();
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t + 0.25 * t * t * t;
        let values = grid.iter().map(|&t| DMatrix::from_element(1, 1, f(t))).collect();
        let prof = InterpolatedProfile::new(grid.clone(), values, -1.0, vec![1.0]).unwrap();
        for &t in &[0.0, 0.05, 0.5, 1.3, grid[7]] {
            assert_abs_diff_eq!(prof.eval(t).unwrap()[(0, 0)], f(t), epsilon = 1e-12);
        }
    }

    #[test]
    fn endpoint_matches_closed_form_in_flat_space() {
        let m = minkowski(3).unwrap();
        let x = geodesic_endpoint(&m, &[0.0; 3], &[0.5, 0.2, -0.1], 1e-12).unwrap();
        assert_abs_diff_eq!(x[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(x[2], -0.1, epsilon = 1e-12);
    }
}
