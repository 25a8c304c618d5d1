//! Star-shaped tangent sets `{tξ : ξ ∈ D, 0 < t < cut(ξ)}` over a direction
//! set `D` of unit vectors at a base point, their exponential-image volumes
//! by polar quadrature, and the scaled-family ratio curve.
//!
//! Directions are given by their components in the orthonormal frame
//! returned by [`CoordinateMetric::orthonormal_basis`] at the base point
//! (timelike vector first).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{integrate_radial, tidal_profile};
use crate::jacobi::{solve_jacobi_with_stops, JacobiSolution};
use crate::metric::{CoordinateMetric, MetricFamily};
use crate::models::{model_radial_integral, ModelConstants, SignatureMode};
use crate::quadrature::clenshaw_curtis_on;

/// Which unit directions make up the set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DirectionSet {
    /// Future unit timelike vectors of rapidity at most `chi_max`.
    TimelikeCap { chi_max: f64 },
    /// Unit spacelike vectors `sinh χ e₀ + cosh χ ω` with `|χ| ≤ chi_max`.
    SpacelikeCap { chi_max: f64 },
    /// The full unit sphere of a Riemannian tangent space.
    Sphere,
    /// User nodes: frame components and quadrature weights.
    Explicit { nodes: Vec<Vec<f64>>, weights: Vec<f64> },
}

impl DirectionSet {
    /// Causal character of the radial geodesics.
    pub fn mode(&self) -> Option<SignatureMode> {
        match self {
            DirectionSet::TimelikeCap { .. } => Some(SignatureMode::LorentzianTimelike),
            DirectionSet::SpacelikeCap { .. } | DirectionSet::Sphere => Some(SignatureMode::Riemannian),
            DirectionSet::Explicit { .. } => None,
        }
    }
}

/// Angular resolution of the builtin grids. Both counts must be even; the
/// grid with half of each is nested in the full one and drives the error
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    /// Clenshaw-Curtis intervals in rapidity or polar angle.
    pub radial: usize,
    /// Points of the periodic rule in azimuth.
    pub azimuth: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution { radial: 16, azimuth: 16 }
    }
}

impl Resolution {
    pub fn doubled(self) -> Self {
        Resolution { radial: 2 * self.radial, azimuth: 2 * self.azimuth }
    }
}

/// Cut function `ξ ↦ c_U(ξ)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CutFunction {
    Constant { value: f64 },
    /// One value per quadrature node, in the order of [`direction_measure`].
    Table { values: Vec<f64> },
    /// `base + Σ coeffs[i] ξ_i` over the frame components.
    Linear { base: f64, coeffs: Vec<f64> },
    #[serde(skip)]
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for CutFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CutFunction::Constant { value } => write!(f, "Constant({value})"),
            CutFunction::Table { values } => write!(f, "Table({values:?})"),
            CutFunction::Linear { base, coeffs } => write!(f, "Linear({base}, {coeffs:?})"),
            CutFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl CutFunction {
    pub fn constant(value: f64) -> Self {
        CutFunction::Constant { value }
    }

    /// The cut at node `index` with frame components `xi`.
    pub fn eval(&self, index: usize, xi: &[f64]) -> Result<f64> {
        let v = match self {
            CutFunction::Constant { value } => *value,
            CutFunction::Table { values } => *values
                .get(index)
                .ok_or_else(|| Error::InvalidSpec(format!("cut table has no entry for node {index}")))?,
            CutFunction::Linear { base, coeffs } => {
                if coeffs.len() != xi.len() {
                    return Err(Error::InvalidSpec("linear cut has the wrong number of coefficients".into()));
                }
                base + coeffs.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>()
            }
            CutFunction::Custom(f) => f(xi),
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidSpec(format!("cut value {v} at node {index} is not positive and finite")));
        }
        Ok(v)
    }

    /// The cut at an arbitrary direction, for closed-form cuts only.
    pub fn eval_anywhere(&self, xi: &[f64]) -> Option<f64> {
        match self {
            CutFunction::Table { .. } => None,
            other => other.eval(0, xi).ok(),
        }
    }
}

/// A star-shaped set over a bounded direction set with a finite cut.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SCLVSpec {
    /// Comparison curvature `c` and dimension `n`.
    pub consts: ModelConstants,
    pub mode: SignatureMode,
    pub directions: DirectionSet,
    #[serde(default)]
    pub resolution: Resolution,
    pub cut: CutFunction,
    /// Right end `b ≥ 1` of the scale interval `(0, b]`.
    #[serde(default = "one")]
    pub scale_max: f64,
}

fn one() -> f64 {
    1.0
}

impl SCLVSpec {
    pub fn new(consts: ModelConstants, directions: DirectionSet, cut: CutFunction) -> Result<Self> {
        let mode = directions.mode().unwrap_or(SignatureMode::LorentzianTimelike);
        let spec = SCLVSpec { consts, mode, directions, resolution: Resolution::default(), cut, scale_max: 1.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_mode(mut self, mode: SignatureMode) -> Result<Self> {
        self.mode = mode;
        self.validate()?;
        Ok(self)
    }

    pub fn with_resolution(mut self, resolution: Resolution) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn with_scale_max(mut self, b: f64) -> Result<Self> {
        self.scale_max = b;
        self.validate()?;
        Ok(self)
    }

    pub fn with_cut(mut self, cut: CutFunction) -> Self {
        self.cut = cut;
        self
    }

    pub fn n(&self) -> usize {
        self.consts.n
    }

    /// Table constants of the radial model density (`c` or `-c`).
    pub fn radial_constants(&self) -> ModelConstants {
        ModelConstants::radial(self.consts.c, self.consts.n, self.mode).expect("validated constants")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(mode) = self.directions.mode() {
            if mode != self.mode {
                return Err(Error::InvalidSpec(format!(
                    "direction set {:?} requires mode {mode:?}",
                    self.directions
                )));
            }
        }
        match &self.directions {
            DirectionSet::TimelikeCap { chi_max } | DirectionSet::SpacelikeCap { chi_max } => {
                if !(*chi_max > 0.0 && chi_max.is_finite()) {
                    return Err(Error::InvalidSpec(format!("chi_max must be positive and finite, got {chi_max}")));
                }
            }
            DirectionSet::Sphere => {}
            DirectionSet::Explicit { nodes, weights } => {
                if nodes.is_empty() || nodes.len() != weights.len() {
                    return Err(Error::InvalidSpec("explicit directions need one weight per node".into()));
                }
                if nodes.iter().any(|v| v.len() != self.n()) || weights.iter().any(|w| !(*w >= 0.0)) {
                    return Err(Error::InvalidSpec("explicit nodes have the wrong dimension or a negative weight".into()));
                }
            }
        }
        if self.resolution.radial < 2
            || self.resolution.radial % 2 != 0
            || self.resolution.azimuth < 2
            || self.resolution.azimuth % 2 != 0
        {
            return Err(Error::InvalidSpec("grid resolutions must be even and at least 2".into()));
        }
        if !(self.scale_max >= 1.0 && self.scale_max.is_finite()) {
            return Err(Error::InvalidSpec(format!("scale interval end b = {} must be at least 1", self.scale_max)));
        }
        Ok(())
    }
}

/// One quadrature node on the direction set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionNode {
    /// Frame components of the unit direction.
    pub frame: Vec<f64>,
    pub weight: f64,
    /// Weight in the nested coarse rule (zero off the coarse grid).
    pub coarse_weight: f64,
}

/// Rule with nested coarse weights on `[a, b]`.
fn nested_cc(n: usize, a: f64, b: f64) -> Vec<(f64, f64, f64)> {
    let fine = clenshaw_curtis_on(n, a, b);
    let coarse = clenshaw_curtis_on(n / 2, a, b);
    fine.iter()
        .enumerate()
        .map(|(k, (x, w))| (*x, *w, if k % 2 == 0 { coarse[k / 2].1 } else { 0.0 }))
        .collect()
}

fn nested_periodic(n: usize) -> Vec<(f64, f64, f64)> {
    let w = 2.0 * PI / n as f64;
    // starting at 0, the even points form the coarse periodic rule
    (0..n).map(|i| (i as f64 * w, w, if i % 2 == 0 { 2.0 * w } else { 0.0 })).collect()
}

/// Nodes on the unit sphere `S^d` (`d ∈ {0, 1, 2}`) with nested weights.
fn sphere_rule(d: usize, res: Resolution) -> Vec<(Vec<f64>, f64, f64)> {
    match d {
        0 => vec![(vec![1.0], 1.0, 1.0), (vec![-1.0], 1.0, 1.0)],
        1 => nested_periodic(res.azimuth).into_iter().map(|(t, w, wc)| (vec![t.cos(), t.sin()], w, wc)).collect(),
        2 => {
            let mut out = Vec::new();
            for (u, wu, wuc) in nested_cc(res.radial, -1.0, 1.0) {
                let s = (1.0 - u * u).max(0.0).sqrt();
                for (p, wp, wpc) in nested_periodic(res.azimuth) {
                    out.push((vec![s * p.cos(), s * p.sin(), u], wu * wp, wuc * wpc));
                }
            }
            out
        }
        _ => unreachable!(),
    }
}

/// Quadrature nodes and weights on the direction set: the hyperboloid
/// measure `sinh^{n-2}χ dχ dΩ` on timelike caps, `cosh^{n-2}χ dχ dΩ` on
/// spacelike caps and the round measure on spheres.
pub fn direction_measure(spec: &SCLVSpec) -> Result<Vec<DirectionNode>> {
    spec.validate()?;
    let n = spec.n();
    let res = spec.resolution;
    let supported = |what| if (2..=4).contains(&n) { Ok(()) } else { Err(Error::UnsupportedDimension { n, what }) };
    let mut nodes = Vec::new();
    let mut push = |frame: Vec<f64>, w: f64, wc: f64| {
        if w != 0.0 || wc != 0.0 {
            nodes.push(DirectionNode { frame, weight: w, coarse_weight: wc });
        }
    };
    match &spec.directions {
        DirectionSet::TimelikeCap { chi_max } => {
            supported("builtin timelike direction grids")?;
            let lo = if n == 2 { -chi_max } else { 0.0 };
            for (chi, w, wc) in nested_cc(res.radial, lo, *chi_max) {
                let (ch, sh) = (chi.cosh(), chi.sinh());
                if n == 2 {
                    push(vec![ch, sh], w, wc);
                    continue;
                }
                let jac = sh.abs().powi(n as i32 - 2);
                for (omega, wo, woc) in sphere_rule(n - 2, res) {
                    let mut v = vec![ch];
                    v.extend(omega.iter().map(|o| sh * o));
                    push(v, w * jac * wo, wc * jac * woc);
                }
            }
        }
        DirectionSet::SpacelikeCap { chi_max } => {
            supported("builtin spacelike direction grids")?;
            for (chi, w, wc) in nested_cc(res.radial, -chi_max, *chi_max) {
                let (ch, sh) = (chi.cosh(), chi.sinh());
                let jac = ch.powi(n as i32 - 2);
                for (omega, wo, woc) in sphere_rule(n - 2, res) {
                    let mut v = vec![sh];
                    v.extend(omega.iter().map(|o| ch * o));
                    push(v, w * jac * wo, wc * jac * woc);
                }
            }
        }
        DirectionSet::Sphere => {
            supported("builtin sphere grids")?;
            if n == 4 {
                for (a, w, wc) in nested_cc(res.radial, 0.0, PI) {
                    let jac = a.sin().powi(2);
                    for (omega, wo, woc) in sphere_rule(2, res) {
                        let mut v = vec![a.cos()];
                        v.extend(omega.iter().map(|o| a.sin() * o));
                        push(v, w * jac * wo, wc * jac * woc);
                    }
                }
            } else {
                for (v, w, wc) in sphere_rule(n - 1, res) {
                    push(v, w, wc);
                }
            }
        }
        DirectionSet::Explicit { nodes: vs, weights } => {
            for (v, w) in vs.iter().zip(weights) {
                let eps = frame_norm2(spec, v);
                let want = spec.mode.epsilon();
                if (eps - want).abs() > 1e-10 {
                    return Err(Error::InvalidVector(format!("explicit node {v:?} is not unit of sign {want}")));
                }
                if want < 0.0 && v[0] <= 0.0 {
                    return Err(Error::InvalidVector(format!("explicit node {v:?} is not future-pointing")));
                }
                push(v.clone(), *w, *w);
            }
        }
    }
    Ok(nodes)
}

fn frame_norm2(spec: &SCLVSpec, v: &[f64]) -> f64 {
    let lorentzian = !matches!(spec.directions, DirectionSet::Sphere) && spec.lorentzian_frame();
    v.iter().enumerate().map(|(i, x)| if i == 0 && lorentzian { -x * x } else { x * x }).sum()
}

impl SCLVSpec {
    /// Whether the ambient frame is Lorentzian (first vector timelike).
    fn lorentzian_frame(&self) -> bool {
        match &self.directions {
            DirectionSet::Sphere => false,
            DirectionSet::TimelikeCap { .. } | DirectionSet::SpacelikeCap { .. } => true,
            // explicit timelike nodes live in a Lorentzian frame; explicit
            // spacelike nodes are read in a Riemannian one
            DirectionSet::Explicit { .. } => self.mode == SignatureMode::LorentzianTimelike,
        }
    }
}

/// Closed-form measure of a builtin direction set.
pub fn closed_form_measure(spec: &SCLVSpec) -> Option<f64> {
    let n = spec.n();
    match spec.directions {
        DirectionSet::TimelikeCap { chi_max: x } => match n {
            2 => Some(2.0 * x),
            3 => Some(2.0 * PI * (x.cosh() - 1.0)),
            4 => Some(PI * ((2.0 * x).sinh() - 2.0 * x)),
            _ => None,
        },
        DirectionSet::SpacelikeCap { chi_max: x } => match n {
            2 => Some(4.0 * x),
            3 => Some(4.0 * PI * x.sinh()),
            4 => Some(4.0 * PI * (x + (2.0 * x).sinh() / 2.0)),
            _ => None,
        },
        DirectionSet::Sphere => match n {
            2 => Some(2.0 * PI),
            3 => Some(4.0 * PI),
            4 => Some(2.0 * PI * PI),
            _ => None,
        },
        DirectionSet::Explicit { .. } => None,
    }
}

/// Per-direction radial integrals.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionIntegral {
    pub index: usize,
    pub frame: Vec<f64>,
    pub weight: f64,
    pub cut: f64,
    /// `∫_0^{cut} det A`.
    pub radial_integral: f64,
    /// `∫_0^{cut} s_c^{n-1}`.
    pub model_integral: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeReport {
    pub vol_u: f64,
    pub vol_u0: f64,
    pub per_direction: Vec<DirectionIntegral>,
    pub quadrature_error_estimate: f64,
    pub model_error_estimate: f64,
}

impl VolumeReport {
    /// `Σ weight × radial_integral`, in node order.
    pub fn resum(&self) -> (f64, f64) {
        let a = self.per_direction.iter().map(|d| d.weight * d.radial_integral).sum();
        let b = self.per_direction.iter().map(|d| d.weight * d.model_integral).sum();
        (a, b)
    }
}

/// One direction's Jacobi solution to `r_max · cut`.
#[derive(Debug, Clone)]
pub struct DirectionSolve {
    pub index: usize,
    pub node: DirectionNode,
    pub cut: f64,
    pub solution: JacobiSolution,
}

/// All direction solves of a spec, up to scale `r_max`.
#[derive(Debug, Clone)]
pub struct SolvedSpec {
    pub spec: SCLVSpec,
    pub r_max: f64,
    pub directions: Vec<DirectionSolve>,
}

/// Source of the Jacobi solution along a direction, to `t_end` with extra
/// stops.
pub trait JacobiSource: Sync {
    fn solve(&self, node: &DirectionNode, consts: ModelConstants, t_end: f64, stops: &[f64], tol: f64)
        -> Result<JacobiSolution>;
}

/// Radial geodesics of a coordinate metric from a base point.
pub struct MetricSource<'a> {
    pub metric: &'a CoordinateMetric,
    pub base_point: &'a [f64],
}

impl<'a> MetricSource<'a> {
    pub fn new(metric: &'a CoordinateMetric, base_point: &'a [f64]) -> Self {
        MetricSource { metric, base_point }
    }

    /// Coordinate vector of a direction given by frame components.
    pub fn coordinate_direction(&self, frame: &[f64]) -> Result<DVector<f64>> {
        let basis = self.metric.orthonormal_basis(self.base_point)?;
        Ok(basis.combine(frame))
    }
}

impl JacobiSource for MetricSource<'_> {
    fn solve(
        &self,
        node: &DirectionNode,
        consts: ModelConstants,
        t_end: f64,
        stops: &[f64],
        tol: f64,
    ) -> Result<JacobiSolution> {
        let xi = self.coordinate_direction(&node.frame)?;
        let system = integrate_radial(self.metric, self.base_point, &xi, t_end, tol)?;
        solve_jacobi_with_stops(Arc::new(tidal_profile(&system)), consts, t_end, tol, stops)
    }
}

/// Synthetic tidal profiles chosen per direction.
pub struct ProfileSource<F>(pub F);

impl<F> JacobiSource for ProfileSource<F>
where
    F: Fn(&DirectionNode, f64) -> Arc<dyn crate::geodesic::TidalProfile> + Sync,
{
    fn solve(
        &self,
        node: &DirectionNode,
        consts: ModelConstants,
        t_end: f64,
        stops: &[f64],
        tol: f64,
    ) -> Result<JacobiSolution> {
        solve_jacobi_with_stops((self.0)(node, t_end), consts, t_end, tol, stops)
    }
}

pub fn check_compatible(spec: &SCLVSpec, metric: &CoordinateMetric) -> Result<()> {
    if metric.dim() != spec.n() {
        return Err(Error::InvalidSpec(format!(
            "metric dimension {} does not match spec dimension {}",
            metric.dim(),
            spec.n()
        )));
    }
    let negatives = metric.signature().iter().filter(|s| **s < 0.0).count();
    let want = usize::from(spec.lorentzian_frame());
    if negatives != want {
        return Err(Error::Signature(format!(
            "spec directions need a metric with {want} negative directions, found {negatives}"
        )));
    }
    Ok(())
}

/// Solve every direction to `r_max · cut`, landing on `r · cut` for each
/// `r` in `scales`.
pub fn solve_spec(
    spec: &SCLVSpec,
    source: &dyn JacobiSource,
    r_max: f64,
    scales: &[f64],
    tol: f64,
) -> Result<SolvedSpec> {
    let nodes = direction_measure(spec)?;
    let consts = spec.radial_constants();
    let cuts: Vec<f64> = nodes.iter().enumerate().map(|(i, d)| spec.cut.eval(i, &d.frame)).collect::<Result<_>>()?;
    if let CutFunction::Table { values } = &spec.cut {
        if values.len() != nodes.len() {
            return Err(Error::InvalidSpec(format!(
                "cut table has {} entries but the direction grid has {} nodes",
                values.len(),
                nodes.len()
            )));
        }
    }
    if let Some(limit) = consts.conjugate_radius() {
        let worst = cuts.iter().cloned().fold(0.0, f64::max) * r_max;
        if worst >= limit {
            return Err(Error::ModelDomain { cut: worst, limit });
        }
    }
    let solved: Vec<Result<DirectionSolve>> = nodes
        .into_par_iter()
        .zip(cuts.into_par_iter())
        .enumerate()
        .map(|(index, (node, cut))| {
            let t_end = r_max * cut;
            let stops: Vec<f64> = scales.iter().map(|r| r * cut).collect();
            let solution = source.solve(&node, consts, t_end, &stops, tol)?;
            if let Some(t) = solution.first_conjugate {
                if t <= t_end {
                    return Err(Error::ConjugateBeforeCut { direction: index, t, cut: t_end });
                }
            }
            Ok(DirectionSolve { index, node, cut, solution })
        })
        .collect();
    let directions = solved.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SolvedSpec { spec: spec.clone(), r_max, directions })
}

impl SolvedSpec {
    /// Volume report of the scaled set `U^r`, `r ≤ r_max`.
    pub fn report_at(&self, r: f64) -> Result<VolumeReport> {
        let mut per = Vec::with_capacity(self.directions.len());
        let mut coarse = (0.0, 0.0);
        let mut abs_sum = 0.0;
        for d in &self.directions {
            let t = r * d.cut;
            let ri = d.solution.radial_integral_at(t)?;
            let mi = model_radial_integral(&d.solution.consts, t);
            coarse.0 += d.node.coarse_weight * ri;
            coarse.1 += d.node.coarse_weight * mi;
            abs_sum += d.node.weight * ri.abs();
            per.push(DirectionIntegral {
                index: d.index,
                frame: d.node.frame.clone(),
                weight: d.node.weight,
                cut: t,
                radial_integral: ri,
                model_integral: mi,
            });
        }
        let mut report = VolumeReport {
            vol_u: 0.0,
            vol_u0: 0.0,
            per_direction: per,
            quadrature_error_estimate: 0.0,
            model_error_estimate: 0.0,
        };
        let (vu, vu0) = report.resum();
        report.vol_u = vu;
        report.vol_u0 = vu0;
        let tol = self.directions.first().map_or(0.0, |d| d.solution.tol);
        let radial = 100.0 * tol * abs_sum + 1e-13 * vu.abs();
        report.quadrature_error_estimate = (vu - coarse.0).abs() + radial;
        report.model_error_estimate = (vu0 - coarse.1).abs() + 1e-13 * vu0.abs();
        Ok(report)
    }

    pub fn ratio_curve(&self, r_grid: &[f64]) -> Result<RatioCurve> {
        let mut curve = RatioCurve::default();
        for &r in r_grid {
            let rep = self.report_at(r)?;
            curve.r.push(r);
            curve.vol_ur.push(rep.vol_u);
            curve.vol_u0r.push(rep.vol_u0);
            curve.v.push(rep.vol_u / rep.vol_u0);
        }
        Ok(curve)
    }
}

/// `vol(exp_p U)` and `vol(U₀)` of a spec in a metric.
pub fn volume(spec: &SCLVSpec, metric: &CoordinateMetric, p: &[f64], tol: f64) -> Result<VolumeReport> {
    check_compatible(spec, metric)?;
    solve_spec(spec, &MetricSource::new(metric, p), 1.0, &[], tol)?.report_at(1.0)
}

/// `r ↦ vol(U^r)/vol(U₀^r)`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RatioCurve {
    pub r: Vec<f64>,
    pub vol_ur: Vec<f64>,
    pub vol_u0r: Vec<f64>,
    pub v: Vec<f64>,
}

impl RatioCurve {
    /// Largest increase `V(r_{i+1}) - V(r_i)`.
    pub fn worst_increase(&self) -> f64 {
        self.v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_r_grid(spec: &SCLVSpec, r_grid: &[f64]) -> Result<f64> {
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[1] <= w[0]) || r_grid[0] <= 0.0 {
        return Err(Error::InvalidSpec("r_grid must be positive and strictly increasing".into()));
    }
    let r_max = *r_grid.last().unwrap();
    if r_max > spec.scale_max * (1.0 + 1e-12) {
        return Err(Error::InvalidSpec(format!("r_grid exceeds the scale interval (0, {}]", spec.scale_max)));
    }
    Ok(r_max)
}

/// Ratio curve from one Jacobi solve per direction to `max(r_grid) · cut`.
pub fn ratio_curve(
    spec: &SCLVSpec,
    metric: &CoordinateMetric,
    p: &[f64],
    r_grid: &[f64],
    tol: f64,
) -> Result<RatioCurve> {
    check_compatible(spec, metric)?;
    let r_max = check_r_grid(spec, r_grid)?;
    solve_spec(spec, &MetricSource::new(metric, p), r_max, r_grid, tol)?.ratio_curve(r_grid)
}

/// Same as [`ratio_curve`] over an arbitrary Jacobi source.
pub fn ratio_curve_with(spec: &SCLVSpec, source: &dyn JacobiSource, r_grid: &[f64], tol: f64) -> Result<(SolvedSpec, RatioCurve)> {
    let r_max = check_r_grid(spec, r_grid)?;
    let solved = solve_spec(spec, source, r_max, r_grid, tol)?;
    let curve = solved.ratio_curve(r_grid)?;
    Ok((solved, curve))
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Closed-form inverse exponential map at the chart origin of the builtin
/// flat and space-form charts: `x ↦ (frame direction, length)`.
struct ExpInverse {
    /// Curvature of the `η / (1 + k η(x,x)/4)²` chart.
    k: f64,
    signature: Vec<f64>,
}

impl ExpInverse {
    fn for_metric(metric: &CoordinateMetric, p: &[f64]) -> Result<Self> {
        let k = match metric.family() {
            MetricFamily::Flat { identity: true } => 0.0,
            MetricFamily::SpaceForm { k } => *k,
            other => {
                return Err(Error::OracleUnavailable(format!(
                    "no closed-form exponential map for the {other:?} family"
                )))
            }
        };
        if p.iter().any(|x| *x != 0.0) {
            return Err(Error::OracleUnavailable("the exponential map is realised at the chart origin only".into()));
        }
        Ok(ExpInverse { k, signature: metric.signature().to_vec() })
    }

    /// Length along the geodesic reaching coordinate radius `rho`.
    fn length(&self, eps: f64, rho: f64) -> Option<f64> {
        let q = self.k * eps;
        let half = 0.5 * q.abs().sqrt() * rho;
        if q > 0.0 {
            Some(2.0 / q.sqrt() * half.atan())
        } else if q < 0.0 {
            (half < 1.0).then(|| 2.0 / (-q).sqrt() * half.atanh())
        } else {
            Some(rho)
        }
    }

    /// Coordinate radius reached at length `s`.
    fn radius(&self, eps: f64, s: f64) -> f64 {
        let q = self.k * eps;
        let half = 0.5 * q.abs().sqrt() * s;
        if q > 0.0 {
            2.0 / q.sqrt() * half.tan()
        } else if q < 0.0 {
            2.0 / (-q).sqrt() * half.tanh()
        } else {
            s
        }
    }

    fn sqrt_det(&self, x: &[f64]) -> f64 {
        let eta: f64 = x.iter().zip(&self.signature).map(|(xi, s)| s * xi * xi).sum();
        let f = 1.0 / (1.0 + self.k * eta / 4.0).powi(2);
        f.powf(x.len() as f64 / 2.0)
    }
}

fn in_direction_set(spec: &SCLVSpec, xi: &[f64]) -> bool {
    match &spec.directions {
        DirectionSet::TimelikeCap { chi_max } => xi[0] > 0.0 && xi[0].acosh() <= *chi_max,
        DirectionSet::SpacelikeCap { chi_max } => xi[0].asinh().abs() <= *chi_max,
        DirectionSet::Sphere => true,
        DirectionSet::Explicit { .. } => false,
    }
}

/// Monte-Carlo volume of `exp_p(U)` in coordinates: uniform samples in a
/// bounding box, weighted by `√|det g|`. Deterministic for a given seed.
pub fn mc_volume_oracle(
    spec: &SCLVSpec,
    metric: &CoordinateMetric,
    p: &[f64],
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_compatible(spec, metric)?;
    let inv = ExpInverse::for_metric(metric, p)?;
    if matches!(spec.directions, DirectionSet::Explicit { .. }) {
        return Err(Error::OracleUnavailable("explicit direction sets have no interior".into()));
    }
    if matches!(spec.cut, CutFunction::Table { .. }) {
        return Err(Error::OracleUnavailable("tabulated cuts are defined on grid nodes only".into()));
    }
    let n = spec.n();
    let eps = spec.mode.epsilon();
    let component_bound = match spec.directions {
        DirectionSet::TimelikeCap { chi_max } | DirectionSet::SpacelikeCap { chi_max } => chi_max.cosh(),
        _ => 1.0,
    };
    let c_max = match &spec.cut {
        CutFunction::Constant { value } => *value,
        CutFunction::Linear { base, coeffs } => base + component_bound * coeffs.iter().map(|a| a.abs()).sum::<f64>(),
        // custom cuts: the node maximum with a safety margin
        _ => {
            let nodes = direction_measure(spec)?;
            1.05 * nodes.iter().filter_map(|d| spec.cut.eval_anywhere(&d.frame)).fold(0.0, f64::max)
        }
    };
    let rho_max = inv.radius(eps, c_max);
    if !rho_max.is_finite() || rho_max <= 0.0 {
        return Err(Error::OracleUnavailable("image leaves the chart".into()));
    }
    let (lo, hi): (Vec<f64>, Vec<f64>) = match spec.directions {
        DirectionSet::TimelikeCap { chi_max } => {
            let mut lo = vec![-rho_max * chi_max.sinh(); n];
            let mut hi = vec![rho_max * chi_max.sinh(); n];
            lo[0] = 0.0;
            hi[0] = rho_max * chi_max.cosh();
            (lo, hi)
        }
        DirectionSet::SpacelikeCap { chi_max } => {
            let mut lo = vec![-rho_max * chi_max.cosh(); n];
            let mut hi = vec![rho_max * chi_max.cosh(); n];
            lo[0] = -rho_max * chi_max.sinh();
            hi[0] = rho_max * chi_max.sinh();
            (lo, hi)
        }
        _ => (vec![-rho_max; n], vec![rho_max; n]),
    };
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();

    const CHUNK: u64 = 1 << 16;
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut x = vec![0.0; n];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                for i in 0..n {
                    x[i] = rng.gen_range(lo[i]..hi[i]);
                }
                let q: f64 = x.iter().zip(&inv.signature).map(|(xi, s)| s * xi * xi).sum();
                if q * eps <= 0.0 {
                    continue;
                }
                let rho = (q * eps).sqrt();
                let xi: Vec<f64> = x.iter().map(|v| v / rho).collect();
                if !in_direction_set(spec, &xi) {
                    continue;
                }
                let Some(len) = inv.length(eps, rho) else { continue };
                let Some(cut) = spec.cut.eval_anywhere(&xi) else { continue };
                if len < cut {
                    let f = inv.sqrt_det(&x);
                    s1 += f;
                    s2 += f * f;
                }
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = samples as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    Ok(McEstimate { value: box_vol * mean, std_error: box_vol * (var / nf).sqrt(), samples })
}
