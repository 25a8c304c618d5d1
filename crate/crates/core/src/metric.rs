//! Metrics given componentwise on a single coordinate chart, with
//! Levi-Civita connection, Riemann, Ricci and sectional curvature.
//!
//! Curvature convention: `R(X,Y) = [∇_X, ∇_Y] - ∇_[X,Y]`, lowered as
//! `R(X,Y,Z,W) = g(R(X,Y)Z, W)`, so that `K(u,v) = R(u,v,v,u) / Q(u,v)` and
//! the model of constant curvature `c` reports `K = c` on every
//! nondegenerate plane.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar, MAX_DIM};

/// Metric components and their first two coordinate derivatives at a point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    /// `dg[a]` is `∂_a g`.
    pub dg: Vec<DMatrix<f64>>,
    /// `ddg[a][b]` is `∂_a ∂_b g`.
    pub ddg: Vec<Vec<DMatrix<f64>>>,
}

/// A field of symmetric matrices on a chart.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;
    fn components(&self, x: &[f64]) -> DMatrix<f64>;
    /// Exact derivatives, when the field knows them.
    fn jet(&self, _x: &[f64]) -> Option<MetricJet> {
        None
    }
}

/// Closed-form metric components written once over [`Scalar`].
pub trait ClosedForm: Send + Sync {
    fn dim(&self) -> usize;
    /// Row-major `n × n` components.
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S>;
}

/// Adapter turning a [`ClosedForm`] into a [`MetricField`] with exact jets.
pub struct Analytic<T>(pub T);

impl<T: ClosedForm> MetricField for Analytic<T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn components(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.0.dim();
        DMatrix::from_row_slice(n, n, &self.0.eval::<f64>(x))
    }

    fn jet(&self, x: &[f64]) -> Option<MetricJet> {
        let n = self.0.dim();
        if n > MAX_DIM {
            return None;
        }
        let comps = self.0.eval(&Jet::point(x));
        let g = DMatrix::from_fn(n, n, |i, j| comps[i * n + j].v);
        let dg = (0..n).map(|a| DMatrix::from_fn(n, n, |i, j| comps[i * n + j].d[a])).collect();
        let ddg = (0..n)
            .map(|a| (0..n).map(|b| DMatrix::from_fn(n, n, |i, j| comps[i * n + j].h[a][b])).collect())
            .collect();
        Some(MetricJet { g, dg, ddg })
    }
}

/// A metric given only by a component evaluator; derivatives come from
/// finite differences.
pub struct FnField<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> MetricField for FnField<F>
where
    F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn components(&self, x: &[f64]) -> DMatrix<f64> {
        (self.f)(x)
    }
}

/// Which builtin family a metric came from; drives features that only some
/// charts support (closed-form exponential maps, conformal bases).
#[derive(Debug, Clone, PartialEq)]
pub enum MetricFamily {
    /// Constant metric `Lᵀ diag(signature) L`; `identity` when `L = I`.
    Flat { identity: bool },
    /// Space form of curvature `k` in the chart `η / (1 + k η(x,x)/4)²`.
    SpaceForm { k: f64 },
    /// Warped product `-dt² + f(t)² g_F`.
    Grw,
    /// `e^{2ω} η` with `ω = a (-η(x, x))`.
    Conformal { a: f64 },
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// Open coordinate box, optionally intersected with a predicate.
#[derive(Clone)]
pub struct ChartDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub predicate: Option<Arc<dyn Fn(&[f64]) -> bool + Send + Sync>>,
}

impl fmt::Debug for ChartDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartDomain")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("predicate", &self.predicate.is_some())
            .finish()
    }
}

impl ChartDomain {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        ChartDomain { lo, hi, predicate: None }
    }

    pub fn cube(n: usize, half_width: f64) -> Self {
        ChartDomain::boxed(vec![-half_width; n], vec![half_width; n])
    }

    pub fn with_predicate(mut self, p: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.predicate = Some(Arc::new(p));
        self
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lo.len()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(xi, (lo, hi))| xi > lo && xi < hi)
            && self.predicate.as_ref().is_none_or(|p| p(x))
    }
}

/// A metric tensor on one coordinate chart.
#[derive(Clone)]
pub struct CoordinateMetric {
    name: String,
    family: MetricFamily,
    field: Arc<dyn MetricField>,
    signature: Vec<f64>,
    domain: ChartDomain,
    mode: DerivativeMode,
    time_orientation: f64,
}

impl fmt::Debug for CoordinateMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoordinateMetric")
            .field("name", &self.name)
            .field("family", &self.family)
            .field("signature", &self.signature)
            .field("domain", &self.domain)
            .field("mode", &self.mode)
            .finish()
    }
}

impl CoordinateMetric {
    /// `signature` lists the eigenvalue signs, e.g. `[-1, 1, 1, 1]`; it is
    /// checked at the supplied reference point.
    pub fn new(
        name: impl Into<String>,
        family: MetricFamily,
        field: Arc<dyn MetricField>,
        signature: Vec<f64>,
        domain: ChartDomain,
        reference: &[f64],
    ) -> Result<Self> {
        let n = field.dim();
        if signature.len() != n || domain.lo.len() != n || domain.hi.len() != n {
            return Err(Error::InvalidSpec(format!(
                "metric dimension {n} does not match signature/domain lengths"
            )));
        }
        let mode = if field.jet(reference).is_some() {
            DerivativeMode::Analytic
        } else {
            DerivativeMode::FiniteDifference
        };
        let metric =
            CoordinateMetric { name: name.into(), family, field, signature, domain, mode, time_orientation: 1.0 };
        metric.check_signature(&[reference.to_vec()])?;
        Ok(metric)
    }

    /// A metric from a bare component evaluator (finite-difference curvature).
    pub fn from_fn(
        name: impl Into<String>,
        dim: usize,
        signature: Vec<f64>,
        domain: ChartDomain,
        reference: &[f64],
        f: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(name, MetricFamily::Custom, Arc::new(FnField { dim, f }), signature, domain, reference)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn family(&self) -> &MetricFamily {
        &self.family
    }
    pub fn dim(&self) -> usize {
        self.field.dim()
    }
    pub fn signature(&self) -> &[f64] {
        &self.signature
    }
    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    pub fn derivative_mode(&self) -> DerivativeMode {
        self.mode
    }

    /// Number of negative eigenvalues (the index).
    pub fn index(&self) -> usize {
        self.signature.iter().filter(|s| **s < 0.0).count()
    }

    /// Force finite-difference curvature even when exact jets exist.
    pub fn with_finite_differences(mut self) -> Self {
        self.mode = DerivativeMode::FiniteDifference;
        self
    }

    /// Reverse which sign of the coordinate-0 component counts as future.
    pub fn with_time_orientation(mut self, sign: f64) -> Self {
        self.time_orientation = sign.signum();
        self
    }

    /// Future-pointing test for causal vectors: the coordinate-0 component
    /// has the sign of the chart's time orientation.
    pub fn is_future(&self, v: &[f64]) -> bool {
        self.time_orientation * v[0] > 0.0
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.domain.contains(x)
    }

    pub fn g(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if !self.contains(x) {
            return Err(Error::OutOfChart { point: x.to_vec() });
        }
        Ok(self.field.components(x))
    }

    /// Symmetry, nondegeneracy and eigenvalue-sign check at each sample.
    pub fn check_signature(&self, samples: &[Vec<f64>]) -> Result<()> {
        let want = self.index();
        for x in samples {
            let g = self.g(x)?;
            let asym = (&g - g.transpose()).abs().max();
            if asym > 1e-12 * (1.0 + g.abs().max()) {
                return Err(Error::Signature(format!("metric not symmetric at {x:?}")));
            }
            let eig = SymmetricEigen::new(g.clone());
            let scale = g.abs().max().max(f64::MIN_POSITIVE);
            if eig.eigenvalues.iter().any(|l| l.abs() <= 1e-14 * scale) {
                return Err(Error::SingularMetric { point: x.clone() });
            }
            let neg = eig.eigenvalues.iter().filter(|l| **l < 0.0).count();
            if neg != want {
                return Err(Error::Signature(format!(
                    "index {neg} at {x:?}, expected {want}"
                )));
            }
        }
        Ok(())
    }

    /// Metric and its derivatives at `x`, exact or by finite differences.
    pub fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        if !self.contains(x) {
            return Err(Error::OutOfChart { point: x.to_vec() });
        }
        if self.mode == DerivativeMode::Analytic {
            if let Some(j) = self.field.jet(x) {
                return Ok(j);
            }
        }
        self.fd_jet(x)
    }

    fn step(&self, x: &[f64], i: usize) -> f64 {
        1e-4 * (1.0 + x[i].abs())
    }

    fn eval_shift(&self, x: &[f64], shifts: &[(usize, f64)]) -> Result<DMatrix<f64>> {
        let mut y = x.to_vec();
        for &(i, h) in shifts {
            y[i] += h;
        }
        self.g(&y)
    }

    /// Central differences with one Richardson extrapolation.
    fn fd_jet(&self, x: &[f64]) -> Result<MetricJet> {
        let n = self.dim();
        let g = self.g(x)?;
        let mut dg = Vec::with_capacity(n);
        for a in 0..n {
            let h = self.step(x, a);
            let d = |h: f64| -> Result<DMatrix<f64>> {
                Ok((self.eval_shift(x, &[(a, h)])? - self.eval_shift(x, &[(a, -h)])?) / (2.0 * h))
            };
            dg.push((d(0.5 * h)? * 4.0 - d(h)?) / 3.0);
        }
        let mut ddg = vec![vec![DMatrix::zeros(n, n); n]; n];
        for a in 0..n {
            for b in a..n {
                let ha = self.step(x, a);
                let hb = self.step(x, b);
                let dd = |s: f64| -> Result<DMatrix<f64>> {
                    let (ha, hb) = (ha * s, hb * s);
                    if a == b {
                        Ok((self.eval_shift(x, &[(a, ha)])? - &g * 2.0 + self.eval_shift(x, &[(a, -ha)])?)
                            / (ha * ha))
                    } else {
                        Ok((self.eval_shift(x, &[(a, ha), (b, hb)])?
                            - self.eval_shift(x, &[(a, ha), (b, -hb)])?
                            - self.eval_shift(x, &[(a, -ha), (b, hb)])?
                            + self.eval_shift(x, &[(a, -ha), (b, -hb)])?)
                            / (4.0 * ha * hb))
                    }
                };
                let v = (dd(0.5)? * 4.0 - dd(1.0)?) / 3.0;
                ddg[a][b] = v.clone();
                ddg[b][a] = v;
            }
        }
        Ok(MetricJet { g, dg, ddg })
    }

    pub fn christoffel(&self, x: &[f64]) -> Result<Christoffel> {
        let jet = self.jet(x)?;
        let gi = invert(&jet.g, x)?;
        Ok(christoffel_from(&jet, &gi))
    }

    pub fn riemann(&self, x: &[f64]) -> Result<RiemannTensor> {
        let jet = self.jet(x)?;
        riemann_from_jet(&jet, x)
    }

    pub fn ricci(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.riemann(x)?.ricci())
    }

    /// `K(π) = R(u,v,v,u) / (g(u,u) g(v,v) - g(u,v)²)`.
    pub fn sectional(&self, plane: &PlaneSpec) -> Result<f64> {
        let r = self.riemann(&plane.point)?;
        r.sectional(&plane.u, &plane.v)
    }

    /// Orthonormal basis at `x` from signature-aware Gram-Schmidt on the
    /// chart basis; timelike vectors first, future-pointing (positive
    /// coordinate-0 component).
    pub fn orthonormal_basis(&self, x: &[f64]) -> Result<Frame> {
        let g = self.g(x)?;
        let n = self.dim();
        let chart: Vec<DVector<f64>> = (0..n).map(|i| unit(n, i)).collect();
        let frame = gram_schmidt(&g, &[], &chart)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| frame.signs[a].partial_cmp(&frame.signs[b]).unwrap());
        let mut vectors: Vec<DVector<f64>> = order.iter().map(|&i| frame.vectors[i].clone()).collect();
        let signs: Vec<f64> = order.iter().map(|&i| frame.signs[i]).collect();
        for (v, s) in vectors.iter_mut().zip(&signs) {
            if *s < 0.0 && !self.is_future(v.as_slice()) {
                *v = -v.clone();
            }
        }
        Ok(Frame { vectors, signs })
    }
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

pub fn inner(g: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (u.transpose() * g * v)[(0, 0)]
}

/// Vectors with their causal signs `g(e_i, e_i) = ±1`.
#[derive(Debug, Clone)]
pub struct Frame {
    pub vectors: Vec<DVector<f64>>,
    pub signs: Vec<f64>,
}

impl Frame {
    /// Components of `v` along the frame: `v = Σ coeffs[i] e_i`.
    pub fn coefficients(&self, g: &DMatrix<f64>, v: &DVector<f64>) -> Vec<f64> {
        self.vectors.iter().zip(&self.signs).map(|(e, s)| s * inner(g, e, v)).collect()
    }

    pub fn combine(&self, coeffs: &[f64]) -> DVector<f64> {
        let n = self.vectors[0].len();
        let mut out = DVector::zeros(n);
        for (c, e) in coeffs.iter().zip(&self.vectors) {
            out += e * *c;
        }
        out
    }

    /// Chart components of the frame as matrix columns.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.vectors)
    }
}

/// Signature-aware Gram-Schmidt: `lead` vectors (already orthonormal) are
/// kept, then `candidates` are orthonormalized against everything so far;
/// nearly dependent or null candidates are skipped.
pub fn gram_schmidt(g: &DMatrix<f64>, lead: &[(DVector<f64>, f64)], candidates: &[DVector<f64>]) -> Result<Frame> {
    let n = g.nrows();
    let mut vectors: Vec<DVector<f64>> = lead.iter().map(|(v, _)| v.clone()).collect();
    let mut signs: Vec<f64> = lead.iter().map(|(_, s)| *s).collect();
    for cand in candidates {
        if vectors.len() == n {
            break;
        }
        let mut v = cand.clone();
        for _ in 0..2 {
            for (e, s) in vectors.iter().zip(&signs) {
                let proj = s * inner(g, e, &v);
                v -= e * proj;
            }
        }
        let q = inner(g, &v, &v);
        let scale = g.abs().max() * cand.norm_squared();
        if q.abs() <= 1e-10 * scale {
            continue;
        }
        vectors.push(&v / q.abs().sqrt());
        signs.push(q.signum());
    }
    if vectors.len() != n {
        return Err(Error::InvalidVector("could not complete an orthonormal frame".into()));
    }
    Ok(Frame { vectors, signs })
}

pub(crate) fn invert(g: &DMatrix<f64>, x: &[f64]) -> Result<DMatrix<f64>> {
    let scale = g.abs().max();
    let det = g.determinant();
    if !det.is_finite() || det.abs() <= 1e-14 * scale.powi(g.nrows() as i32) {
        return Err(Error::SingularMetric { point: x.to_vec() });
    }
    g.clone().try_inverse().ok_or_else(|| Error::SingularMetric { point: x.to_vec() })
}

/// `Γ^λ_{μν}`, stored with `get(λ, μ, ν)`.
#[derive(Debug, Clone)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, l: usize, m: usize, k: usize) -> f64 {
        self.data[(l * self.n + m) * self.n + k]
    }

    /// `Γ^λ_{μν} u^μ v^ν` for each λ.
    pub fn contract(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|l| {
                let mut s = 0.0;
                for m in 0..n {
                    if u[m] == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        s += self.get(l, m, k) * u[m] * v[k];
                    }
                }
                s
            })
            .collect()
    }
}

fn christoffel_from(jet: &MetricJet, gi: &DMatrix<f64>) -> Christoffel {
    let n = jet.g.nrows();
    let mut data = vec![0.0; n * n * n];
    for l in 0..n {
        for m in 0..n {
            for k in m..n {
                let mut s = 0.0;
                for r in 0..n {
                    s += gi[(l, r)] * (jet.dg[m][(r, k)] + jet.dg[k][(r, m)] - jet.dg[r][(m, k)]);
                }
                data[(l * n + m) * n + k] = 0.5 * s;
                data[(l * n + k) * n + m] = 0.5 * s;
            }
        }
    }
    Christoffel { n, data }
}

/// Riemann tensor `R^ρ_{σμν}` with `R(∂_μ, ∂_ν) ∂_σ = R^ρ_{σμν} ∂_ρ`, plus the
/// metric needed to lower it.
#[derive(Debug, Clone)]
pub struct RiemannTensor {
    n: usize,
    up: Vec<f64>,
    g: DMatrix<f64>,
}

fn riemann_from_jet(jet: &MetricJet, x: &[f64]) -> Result<RiemannTensor> {
    let n = jet.g.nrows();
    let gi = invert(&jet.g, x)?;
    let gamma = christoffel_from(jet, &gi);
    // ∂_a Γ^l_{mk}
    let dgi: Vec<DMatrix<f64>> = (0..n).map(|a| -(&gi * &jet.dg[a] * &gi)).collect();
    let mut dgamma = vec![0.0; n * n * n * n];
    let idx = |a: usize, l: usize, m: usize, k: usize| ((a * n + l) * n + m) * n + k;
    for a in 0..n {
        for l in 0..n {
            for m in 0..n {
                for k in m..n {
                    let mut s = 0.0;
                    for r in 0..n {
                        let first = jet.dg[m][(r, k)] + jet.dg[k][(r, m)] - jet.dg[r][(m, k)];
                        let second = jet.ddg[a][m][(r, k)] + jet.ddg[a][k][(r, m)] - jet.ddg[a][r][(m, k)];
                        s += dgi[a][(l, r)] * first + gi[(l, r)] * second;
                    }
                    dgamma[idx(a, l, m, k)] = 0.5 * s;
                    dgamma[idx(a, l, k, m)] = 0.5 * s;
                }
            }
        }
    }
    let mut up = vec![0.0; n * n * n * n];
    for rho in 0..n {
        for sigma in 0..n {
            for mu in 0..n {
                for nu in 0..n {
                    let mut v = dgamma[idx(mu, rho, nu, sigma)] - dgamma[idx(nu, rho, mu, sigma)];
                    for lam in 0..n {
                        v += gamma.get(rho, mu, lam) * gamma.get(lam, nu, sigma)
                            - gamma.get(rho, nu, lam) * gamma.get(lam, mu, sigma);
                    }
                    up[((rho * n + sigma) * n + mu) * n + nu] = v;
                }
            }
        }
    }
    Ok(RiemannTensor { n, up, g: jet.g.clone() })
}

impl RiemannTensor {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// `R^ρ_{σμν}`.
    pub fn up(&self, rho: usize, sigma: usize, mu: usize, nu: usize) -> f64 {
        let n = self.n;
        self.up[((rho * n + sigma) * n + mu) * n + nu]
    }

    /// `R_{abcd} = g(R(∂_a, ∂_b) ∂_c, ∂_d)`.
    pub fn lowered_component(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        (0..self.n).map(|r| self.g[(d, r)] * self.up(r, c, a, b)).sum()
    }

    /// `R(X, Y) Z`.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(n);
        for rho in 0..n {
            let mut s = 0.0;
            for sigma in 0..n {
                if z[sigma] == 0.0 {
                    continue;
                }
                for mu in 0..n {
                    if x[mu] == 0.0 {
                        continue;
                    }
                    for nu in 0..n {
                        s += self.up(rho, sigma, mu, nu) * z[sigma] * x[mu] * y[nu];
                    }
                }
            }
            out[rho] = s;
        }
        out
    }

    /// `R(X, Y, Z, W) = g(R(X, Y) Z, W)`.
    pub fn lowered(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>, w: &DVector<f64>) -> f64 {
        inner(&self.g, &self.apply(x, y, z), w)
    }

    /// `Ric(Y, Z) = tr(X ↦ R(X, Y) Z)`; component `(b, c)` is `R^a_{c a b}`.
    pub fn ricci(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |b, c| (0..n).map(|a| self.up(a, c, a, b)).sum())
    }

    pub fn sectional(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let guu = inner(&self.g, u, u);
        let gvv = inner(&self.g, v, v);
        let guv = inner(&self.g, u, v);
        let q = guu * gvv - guv * guv;
        let scale = self.g.abs().max().powi(2) * u.norm_squared() * v.norm_squared();
        if q.abs() < 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::DegeneratePlane { gram: q });
        }
        Ok(self.lowered(u, v, v, u) / q)
    }
}

/// A tangent plane at a point, spanned by two coordinate vectors.
#[derive(Debug, Clone)]
pub struct PlaneSpec {
    pub point: Vec<f64>,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

impl PlaneSpec {
    pub fn new(point: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> Self {
        PlaneSpec { point, u: DVector::from_vec(u), v: DVector::from_vec(v) }
    }
}

// ---------------------------------------------------------------------------
// Builtin flat and space-form charts.

/// Constant metric `Lᵀ diag(signature) L`.
pub struct FlatChart {
    g: Vec<f64>,
    n: usize,
}

impl ClosedForm for FlatChart {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval<S: Scalar>(&self, _x: &[S]) -> Vec<S> {
        self.g.iter().map(|v| S::constant(*v)).collect()
    }
}

/// Flat metric of the given signature, optionally in the linear chart `L`.
pub fn flat(signature: &[f64], transform: Option<DMatrix<f64>>) -> Result<CoordinateMetric> {
    let n = signature.len();
    let eta = DMatrix::from_diagonal(&DVector::from_row_slice(signature));
    let identity = transform.is_none();
    let l = transform.unwrap_or_else(|| DMatrix::identity(n, n));
    if l.nrows() != n || l.ncols() != n {
        return Err(Error::InvalidSpec("linear chart has the wrong shape".into()));
    }
    let g = l.transpose() * eta * &l;
    let g = (&g + g.transpose()) * 0.5;
    let chart = FlatChart { g: g.transpose().as_slice().to_vec(), n };
    let mut sig = signature.to_vec();
    sig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let name = if sig.iter().all(|s| *s > 0.0) { "euclidean" } else { "minkowski" };
    CoordinateMetric::new(
        name,
        MetricFamily::Flat { identity },
        Arc::new(Analytic(chart)),
        sig,
        ChartDomain::cube(n, 1e3),
        &vec![0.0; n],
    )
}

/// Minkowski space `-dt² + dx²` in its identity chart.
pub fn minkowski(n: usize) -> Result<CoordinateMetric> {
    let mut sig = vec![1.0; n];
    sig[0] = -1.0;
    flat(&sig, None)
}

pub fn euclidean(n: usize) -> Result<CoordinateMetric> {
    flat(&vec![1.0; n], None)
}

/// `δ / (1 + k|x|²/4)²`: the space form of curvature `k` (stereographic or
/// Poincaré-ball chart), equal to `δ` at the origin.
pub(crate) fn space_form_factor<S: Scalar>(x: &[S], k: f64) -> S {
    let mut r2 = S::constant(0.0);
    for xi in x {
        r2 = r2 + *xi * *xi;
    }
    let denom = r2 * (k / 4.0) + 1.0;
    S::constant(1.0) / (denom * denom)
}

/// Radius of the chart in which [`space_form_factor`] is regular.
pub(crate) fn space_form_chart_radius(k: f64) -> f64 {
    if k < 0.0 {
        2.0 / (-k).sqrt()
    } else if k > 0.0 {
        // geodesics from the origin of length < π/√k stay within 2 tan(·)/√k
        40.0 / k.sqrt()
    } else {
        1e3
    }
}

struct SpaceFormChart {
    k: f64,
    eta: Vec<f64>,
}

impl ClosedForm for SpaceFormChart {
    fn dim(&self) -> usize {
        self.eta.len()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = self.eta.len();
        let mut q = S::constant(0.0);
        for (xi, s) in x.iter().zip(&self.eta) {
            q = q + *xi * *xi * *s;
        }
        let denom = q * (self.k / 4.0) + 1.0;
        let f = S::constant(1.0) / (denom * denom);
        let mut out = vec![S::constant(0.0); n * n];
        for i in 0..n {
            out[i * n + i] = f * self.eta[i];
        }
        out
    }
}

/// Riemannian space form of constant sectional curvature `k`.
pub fn space_form(k: f64, n: usize) -> Result<CoordinateMetric> {
    let radius = space_form_chart_radius(k);
    let domain = ChartDomain::cube(n, radius).with_predicate(move |x: &[f64]| {
        x.iter().map(|v| v * v).sum::<f64>().sqrt() < radius
    });
    CoordinateMetric::new(
        format!("space_form(k={k})"),
        MetricFamily::SpaceForm { k },
        Arc::new(Analytic(SpaceFormChart { k, eta: vec![1.0; n] })),
        vec![1.0; n],
        domain,
        &vec![0.0; n],
    )
}

/// Lorentzian space form of constant curvature `k`: `η / (1 + k η(x,x)/4)²`.
///
/// Radial geodesics from the origin are straight coordinate rays, so the
/// chart contains every timelike geodesic from the origin up to proper time
/// `π/√-k` when `k < 0`, and all of them when `k ≥ 0`.
pub fn lorentzian_space_form(k: f64, n: usize) -> Result<CoordinateMetric> {
    let mut eta = vec![1.0; n];
    eta[0] = -1.0;
    let half = if k == 0.0 { 1e3 } else { 40.0 / k.abs().sqrt() };
    let signs = eta.clone();
    let domain = ChartDomain::cube(n, half).with_predicate(move |x: &[f64]| {
        let q: f64 = x.iter().zip(&signs).map(|(v, s)| v * v * s).sum();
        1.0 + k * q / 4.0 > 1e-3
    });
    CoordinateMetric::new(
        format!("lorentzian_space_form(k={k})"),
        MetricFamily::SpaceForm { k },
        Arc::new(Analytic(SpaceFormChart { k, eta: eta.clone() })),
        eta,
        domain,
        &vec![0.0; n],
    )
}
