//! Verifiers for the volume comparison statements: the lower bound under a
//! sectional curvature bound, the upper bound under a Ricci bound, the
//! monotone ratio curve, and the flat-model corollary.
//!
//! A verdict whose hypothesis audit fails is inapplicable and never claims
//! that the conclusion is violated.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jacobi::{psi_bound_check, riccati_check, BoundDirection, JacobiSolution};
use crate::metric::CoordinateMetric;
use crate::models::ModelConstants;
use crate::sclv::{check_compatible, solve_spec, CutFunction, JacobiSource, MetricSource, RatioCurve, SCLVSpec, SolvedSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    Guenther,
    Bishop,
    GromovA,
    GromovB,
    FlatCorollary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    A,
    B,
}

/// Worst curvature margin along one radial geodesic (negative = violated).
#[derive(Debug, Clone, Serialize)]
pub struct DirectionAudit {
    pub index: usize,
    pub frame: Vec<f64>,
    pub worst_margin: f64,
    pub worst_at: f64,
    /// Largest `|T(t) + κ I|` along the geodesic.
    pub model_deviation: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EqualityFlags {
    /// `|vol_U - vol_U0| ≤ tol · vol_U0` (or two ratio values agree).
    pub volumes_equal: bool,
    /// Tidal operator ≡ `-κ I` to 1e-6 along every sampled geodesic.
    pub tidal_model: bool,
    pub equality: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonVerdict {
    pub theorem: Theorem,
    pub c: f64,
    pub hypothesis_passed: bool,
    pub hypothesis_audit: Vec<DirectionAudit>,
    pub worst_hypothesis_margin: f64,
    /// `None` when the hypothesis failed.
    pub conclusion_holds: Option<bool>,
    pub vol_u: f64,
    pub vol_u0: f64,
    /// Signed margin of the conclusion relative to `vol_U0` (positive = holds).
    pub margin: f64,
    /// The inequality holds strictly, beyond the slack.
    pub strict: bool,
    /// Per-direction density ratio checks (ψ bound and monotonicity).
    pub directionwise_holds: Option<bool>,
    /// Per-direction Riccati checks, for the Ricci-bound statements.
    pub riccati_holds: Option<bool>,
    pub ratio_curve: Option<RatioCurve>,
    pub equality: EqualityFlags,
    pub tol: f64,
    pub detail: String,
}

impl ComparisonVerdict {
    pub fn inapplicable(&self) -> bool {
        !self.hypothesis_passed
    }

    /// The hypothesis-violated error of an inapplicable verdict.
    pub fn require_hypothesis(&self) -> Result<&Self> {
        if self.hypothesis_passed {
            return Ok(self);
        }
        let worst = self
            .hypothesis_audit
            .iter()
            .min_by(|a, b| a.worst_margin.total_cmp(&b.worst_margin))
            .map(|a| format!("direction #{} {:?} at t = {:.6}: margin {:.3e}", a.index, a.frame, a.worst_at, a.worst_margin))
            .unwrap_or_default();
        Err(Error::HypothesisViolated { detail: format!("{:?}: {worst}", self.theorem) })
    }
}

/// Integration tolerance used for a given comparison slack.
pub fn ode_tolerance(tol: f64) -> f64 {
    (tol * 1e-3).clamp(1e-12, 1e-8)
}

const TIDAL_EQUALITY: f64 = 1e-6;

#[derive(Clone, Copy)]
enum Audit {
    /// Sectional curvature of radial planes: `T ≤ -κ I`.
    Sectional,
    /// Ricci in the radial direction: `tr T ≥ -(n-1) κ`.
    Ricci,
}

fn audit_solution(sol: &JacobiSolution, audit: Audit) -> Result<(f64, f64, f64)> {
    let kappa = sol.consts.c;
    let m = sol.m();
    let symmetric = sol.frame_signs.iter().all(|s| *s > 0.0);
    let mut worst = (f64::INFINITY, f64::NAN);
    let mut dev: f64 = 0.0;
    for &t in &sol.grid {
        let tm = sol.profile().eval(t)?;
        let margin = match audit {
            Audit::Sectional => -kappa - max_radial_plane(&tm, symmetric),
            Audit::Ricci => tm.trace() + m as f64 * kappa,
        };
        if margin < worst.0 {
            worst = (margin, t);
        }
        dev = dev.max((tm + DMatrix::identity(m, m) * kappa).abs().max());
    }
    Ok((worst.0, worst.1, dev))
}

/// Largest `T`-value over radial planes: the top eigenvalue when the frame
/// is positive definite, the diagonal entries otherwise.
fn max_radial_plane(t: &DMatrix<f64>, symmetric: bool) -> f64 {
    if symmetric {
        let sym = (t + t.transpose()) * 0.5;
        sym.symmetric_eigenvalues().max()
    } else {
        t.diagonal().max()
    }
}

fn audits(solved: &SolvedSpec, audit: Audit) -> Result<Vec<DirectionAudit>> {
    solved
        .directions
        .par_iter()
        .map(|d| {
            let (worst_margin, worst_at, model_deviation) = audit_solution(&d.solution, audit)?;
            Ok(DirectionAudit { index: d.index, frame: d.node.frame.clone(), worst_margin, worst_at, model_deviation })
        })
        .collect()
}

fn with_c(spec: &SCLVSpec, c: f64) -> Result<SCLVSpec> {
    let mut spec = spec.clone();
    spec.consts = ModelConstants::new(c, spec.consts.n)?;
    spec.validate()?;
    Ok(spec)
}

struct Run {
    solved: SolvedSpec,
    audit: Vec<DirectionAudit>,
    worst: f64,
    passed: bool,
    tidal_model: bool,
}

fn run(spec: &SCLVSpec, source: &dyn JacobiSource, r_max: f64, scales: &[f64], tol: f64, audit: Audit) -> Result<Run> {
    let solved = solve_spec(spec, source, r_max, scales, ode_tolerance(tol))?;
    let audit = audits(&solved, audit)?;
    let worst = audit.iter().map(|a| a.worst_margin).fold(f64::INFINITY, f64::min);
    let tidal_model = audit.iter().all(|a| a.model_deviation <= TIDAL_EQUALITY);
    Ok(Run { solved, passed: worst >= -tol, audit, worst, tidal_model })
}

fn base_verdict(theorem: Theorem, c: f64, run: &Run, tol: f64) -> ComparisonVerdict {
    ComparisonVerdict {
        theorem,
        c,
        hypothesis_passed: run.passed,
        hypothesis_audit: run.audit.clone(),
        worst_hypothesis_margin: run.worst,
        conclusion_holds: None,
        vol_u: f64::NAN,
        vol_u0: f64::NAN,
        margin: f64::NAN,
        strict: false,
        directionwise_holds: None,
        riccati_holds: None,
        ratio_curve: None,
        equality: EqualityFlags::default(),
        tol,
        detail: String::new(),
    }
}

fn volume_conclusion(v: &mut ComparisonVerdict, run: &Run, sign: f64) -> Result<()> {
    let rep = run.solved.report_at(1.0)?;
    v.vol_u = rep.vol_u;
    v.vol_u0 = rep.vol_u0;
    v.margin = sign * (rep.vol_u - rep.vol_u0) / rep.vol_u0;
    v.equality.volumes_equal = v.margin.abs() <= v.tol;
    v.equality.tidal_model = run.tidal_model;
    v.equality.equality = v.equality.volumes_equal && run.tidal_model;
    if run.passed {
        v.conclusion_holds = Some(v.margin >= -v.tol);
        v.strict = v.margin > v.tol;
    }
    Ok(())
}

/// Lower volume bound from `K(π) ≥ c` on radial planes.
pub fn check_guenther(spec: &SCLVSpec, metric: &CoordinateMetric, p: &[f64], c: f64, tol: f64) -> Result<ComparisonVerdict> {
    check_compatible(spec, metric)?;
    guenther_with(spec, &MetricSource::new(metric, p), c, tol)
}

pub fn guenther_with(spec: &SCLVSpec, source: &dyn JacobiSource, c: f64, tol: f64) -> Result<ComparisonVerdict> {
    let spec = with_c(spec, c)?;
    let run = run(&spec, source, 1.0, &[], tol, Audit::Sectional)?;
    let mut v = base_verdict(Theorem::Guenther, c, &run, tol);
    volume_conclusion(&mut v, &run, 1.0)?;
    let mut psi_ok = true;
    for d in &run.solved.directions {
        psi_ok &= psi_bound_check(&d.solution, BoundDirection::Lower)?.holds();
    }
    v.directionwise_holds = Some(psi_ok);
    if run.passed {
        v.conclusion_holds = v.conclusion_holds.map(|h| h && psi_ok);
    }
    v.detail = describe(&v);
    Ok(v)
}

/// Upper volume bound from `Ric(v, v) ≥ (n-1) c g(v, v)` on radial vectors.
pub fn check_bishop(spec: &SCLVSpec, metric: &CoordinateMetric, p: &[f64], c: f64, tol: f64) -> Result<ComparisonVerdict> {
    check_compatible(spec, metric)?;
    bishop_with(spec, &MetricSource::new(metric, p), c, tol)
}

pub fn bishop_with(spec: &SCLVSpec, source: &dyn JacobiSource, c: f64, tol: f64) -> Result<ComparisonVerdict> {
    let spec = with_c(spec, c)?;
    let run = run(&spec, source, 1.0, &[], tol, Audit::Ricci)?;
    let mut v = base_verdict(Theorem::Bishop, c, &run, tol);
    volume_conclusion(&mut v, &run, -1.0)?;
    let mut psi_ok = true;
    let mut ric_ok = true;
    for d in &run.solved.directions {
        psi_ok &= psi_bound_check(&d.solution, BoundDirection::Upper)?.holds();
        ric_ok &= riccati_check(&d.solution, &d.solution.consts)?.holds();
    }
    v.directionwise_holds = Some(psi_ok);
    v.riccati_holds = Some(ric_ok);
    if run.passed {
        v.conclusion_holds = v.conclusion_holds.map(|h| h && psi_ok && ric_ok);
    }
    v.detail = describe(&v);
    Ok(v)
}

fn cut_is_constant(spec: &SCLVSpec) -> Result<bool> {
    if let CutFunction::Constant { .. } = spec.cut {
        return Ok(true);
    }
    let nodes = crate::sclv::direction_measure(spec)?;
    let cuts: Vec<f64> = nodes.iter().enumerate().map(|(i, d)| spec.cut.eval(i, &d.frame)).collect::<Result<_>>()?;
    let (lo, hi) = cuts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    Ok(hi - lo <= 1e-12)
}

/// Monotonicity of `V(r) = vol(U^r)/vol(U₀^r)` under condition A (`c = 0`)
/// or B (constant cut).
pub fn check_bishop_gromov(
    spec: &SCLVSpec,
    metric: &CoordinateMetric,
    p: &[f64],
    c: f64,
    r_grid: &[f64],
    condition: Condition,
    tol: f64,
) -> Result<ComparisonVerdict> {
    check_compatible(spec, metric)?;
    bishop_gromov_with(spec, &MetricSource::new(metric, p), c, r_grid, condition, tol)
}

pub fn bishop_gromov_with(
    spec: &SCLVSpec,
    source: &dyn JacobiSource,
    c: f64,
    r_grid: &[f64],
    condition: Condition,
    tol: f64,
) -> Result<ComparisonVerdict> {
    let spec = with_c(spec, c)?;
    match condition {
        Condition::A if c != 0.0 => {
            return Err(Error::ConditionNotMet { condition: 'A', detail: format!("requires c = 0, got c = {c}") })
        }
        Condition::B if !cut_is_constant(&spec)? => {
            return Err(Error::ConditionNotMet { condition: 'B', detail: "cut function is not constant".into() })
        }
        _ => {}
    }
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[1] <= w[0]) || r_grid[0] <= 0.0 {
        return Err(Error::InvalidSpec("r_grid must be positive and strictly increasing".into()));
    }
    let r_max = *r_grid.last().unwrap();
    if r_max > spec.scale_max * (1.0 + 1e-12) {
        return Err(Error::InvalidSpec(format!("r_grid exceeds the scale interval (0, {}]", spec.scale_max)));
    }
    let theorem = match condition {
        Condition::A => Theorem::GromovA,
        Condition::B => Theorem::GromovB,
    };
    let run = run(&spec, source, r_max, r_grid, tol, Audit::Ricci)?;
    let mut v = base_verdict(theorem, c, &run, tol);
    let curve = run.solved.ratio_curve(r_grid)?;
    let rep = run.solved.report_at(r_max)?;
    v.vol_u = rep.vol_u;
    v.vol_u0 = rep.vol_u0;
    v.margin = -curve.worst_increase();
    let repeated = curve.v.windows(2).any(|w| (w[1] - w[0]).abs() <= tol);
    v.equality.volumes_equal = repeated;
    v.equality.tidal_model = run.tidal_model;
    v.equality.equality = repeated && run.tidal_model;
    if condition == Condition::A {
        // with c = 0, ψ = det A / t^{n-1} must be non-increasing along each direction
        let mut ok = true;
        for d in &run.solved.directions {
            let r = psi_bound_check(&d.solution, BoundDirection::Upper)?;
            ok &= r.monotone_holds;
        }
        v.directionwise_holds = Some(ok);
    }
    if run.passed {
        let mono = curve.v.len() < 2 || v.margin >= -tol;
        v.conclusion_holds = Some(mono && v.directionwise_holds.unwrap_or(true));
        v.strict = v.margin > tol;
    }
    v.ratio_curve = Some(curve);
    v.detail = describe(&v);
    Ok(v)
}

/// `vol(Z) ≤ vol(Z₀)` under the timelike convergence condition, for each
/// set of a family.
pub fn check_flat_corollary(specs: &[SCLVSpec], metric: &CoordinateMetric, p: &[f64], tol: f64) -> Result<Vec<ComparisonVerdict>> {
    specs
        .iter()
        .map(|spec| {
            let mut v = check_bishop(spec, metric, p, 0.0, tol)?;
            v.theorem = Theorem::FlatCorollary;
            v.detail = describe(&v);
            Ok(v)
        })
        .collect()
}

fn describe(v: &ComparisonVerdict) -> String {
    match v.conclusion_holds {
        None => format!("{:?}: inapplicable, hypothesis margin {:.3e}", v.theorem, v.worst_hypothesis_margin),
        Some(true) if v.equality.equality => format!("{:?}: holds with equality (tidal = -cI)", v.theorem),
        Some(true) => format!("{:?}: holds, margin {:.3e}{}", v.theorem, v.margin, if v.strict { " (strict)" } else { "" }),
        Some(false) => format!("{:?}: CONCLUSION FAILED, margin {:.3e}", v.theorem, v.margin),
    }
}

type Q = Ratio<i64>;

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

/// One data set of the ratio-sum counterexample.
#[derive(Debug, Clone, Serialize)]
pub struct RatioSumSet {
    pub label: String,
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub c: Vec<String>,
    pub d: Vec<String>,
    /// `a_i/b_i ≥ c_i/d_i` for every `i`.
    pub termwise: bool,
    pub sum_ab: String,
    pub sum_cd: String,
    pub sum_ab_value: f64,
    pub sum_cd_value: f64,
    /// `Σa/Σb < Σc/Σd`.
    pub reversed: bool,
    /// `a_i < c_i < d_i` and `a_i < b_i < d_i`, when checked.
    pub side_conditions: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub sets: Vec<RatioSumSet>,
    pub reversed: bool,
}

fn ratio_set(label: &str, a: &[Q], b: &[Q], c: &[Q], d: &[Q], side: bool) -> RatioSumSet {
    let termwise = (0..a.len()).all(|i| a[i] / b[i] >= c[i] / d[i]);
    let sum = |v: &[Q]| v.iter().fold(Q::from_integer(0), |s, x| s + x);
    let ab = sum(a) / sum(b);
    let cd = sum(c) / sum(d);
    let side_conditions = side.then(|| (0..a.len()).all(|i| a[i] < c[i] && c[i] < d[i] && a[i] < b[i] && b[i] < d[i]));
    let show = |v: &[Q]| v.iter().map(|x| x.to_string()).collect();
    let value = |x: Q| *x.numer() as f64 / *x.denom() as f64;
    RatioSumSet {
        label: label.into(),
        a: show(a),
        b: show(b),
        c: show(c),
        d: show(d),
        termwise,
        sum_ab: ab.to_string(),
        sum_cd: cd.to_string(),
        sum_ab_value: value(ab),
        sum_cd_value: value(cd),
        reversed: ab < cd,
        side_conditions,
    }
}

/// Termwise ratio inequalities `a_i/b_i ≥ c_i/d_i` that fail to survive
/// summation, in exact rational arithmetic.
pub fn counterexample_33() -> CounterexampleReport {
    let m = 10;
    let one = q(1, 1);
    let set1 = ratio_set(
        "set 1 (M = 10)",
        &[q(2, 1), q(2, 1)],
        &[one, q(1, m)],
        &[one, q(m, 1)],
        &[one, one],
        false,
    );
    let set2 = ratio_set(
        "set 2",
        &[q(3, 10), q(1, 99)],
        &[q(1, 2), q(1, 90)],
        &[q(1, 2), q(9, 10)],
        &[one, one],
        true,
    );
    let reversed = set1.termwise && set1.reversed && set2.termwise && set2.reversed && set2.side_conditions == Some(true);
    CounterexampleReport { sets: vec![set1, set2], reversed }
}

/// One member of a search family.
#[derive(Clone)]
pub struct SearchInstance {
    pub label: String,
    pub spec: SCLVSpec,
    pub metric: Arc<CoordinateMetric>,
    pub base_point: Vec<f64>,
    pub r_grid: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchHit {
    pub label: String,
    pub r: f64,
    pub big_r: f64,
    pub v_r: f64,
    pub v_big_r: f64,
    pub spec: SCLVSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub evaluated: usize,
    /// Instances whose Ricci audit failed (not counted as candidates).
    pub skipped_hypothesis: Vec<String>,
    /// Instances where condition A or B applies anyway.
    pub condition_applies: Vec<String>,
    pub errors: Vec<String>,
    pub hits: Vec<SearchHit>,
    pub summary: String,
}

/// Gap below which `V(r) < V(R)` counts as a hit.
pub const SEARCH_GAP: f64 = 1e-6;

/// Scan a family for `r < R` with `V(r) < V(R) - 1e-6`, over at most
/// `budget` instances.
pub fn search_ratio_violation(family: &[SearchInstance], budget: usize, tol: f64) -> SearchReport {
    let take = family.len().min(budget);
    let results: Vec<(usize, Result<(bool, bool, RatioCurve)>)> = family[..take]
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let out = (|| {
                check_compatible(&inst.spec, &inst.metric)?;
                let r_max = *inst.r_grid.last().ok_or_else(|| Error::InvalidSpec("empty r_grid".into()))?;
                let src = MetricSource::new(&inst.metric, &inst.base_point);
                let run = run(&inst.spec, &src, r_max, &inst.r_grid, tol, Audit::Ricci)?;
                let applies = inst.spec.consts.c == 0.0 || cut_is_constant(&inst.spec)?;
                Ok((run.passed, applies, run.solved.ratio_curve(&inst.r_grid)?))
            })();
            (i, out)
        })
        .collect();
    let mut rep = SearchReport {
        evaluated: take,
        skipped_hypothesis: Vec::new(),
        condition_applies: Vec::new(),
        errors: Vec::new(),
        hits: Vec::new(),
        summary: String::new(),
    };
    for (i, res) in results {
        let inst = &family[i];
        match res {
            Err(e) => rep.errors.push(format!("{}: {e}", inst.label)),
            Ok((passed, applies, curve)) => {
                if applies {
                    rep.condition_applies.push(inst.label.clone());
                }
                if !passed {
                    rep.skipped_hypothesis.push(inst.label.clone());
                    continue;
                }
                if let Some(hit) = first_increase(&curve) {
                    rep.hits.push(SearchHit {
                        label: inst.label.clone(),
                        r: curve.r[hit.0],
                        big_r: curve.r[hit.1],
                        v_r: curve.v[hit.0],
                        v_big_r: curve.v[hit.1],
                        spec: inst.spec.clone(),
                    });
                }
            }
        }
    }
    rep.summary = if rep.hits.is_empty() {
        format!("none found within budget ({take} instances)")
    } else {
        format!("{} instance(s) with V(r) < V(R)", rep.hits.len())
    };
    rep
}

/// First pair `i < j` with `V_i < V_j - SEARCH_GAP`, taking for each `j` the
/// smallest earlier value.
fn first_increase(curve: &RatioCurve) -> Option<(usize, usize)> {
    let mut best = 0;
    for j in 1..curve.v.len() {
        if curve.v[best] < curve.v[j] - SEARCH_GAP {
            return Some((best, j));
        }
        if curve.v[j] < curve.v[best] {
            best = j;
        }
    }
    None
}
