use std::sync::Arc;

use serde::Serialize;
use volcomp::comparison::{
    check_bishop, check_bishop_gromov, check_flat_corollary, check_guenther, counterexample_33, ode_tolerance,
    search_ratio_violation, ComparisonVerdict, Condition, SearchInstance,
};
use volcomp::expansions::{fit_det_a_expansion, fit_jacobi_expansion, ricci_along, ExpansionFit, JacobiFieldFit};
use volcomp::geodesic::{integrate_radial, tidal_profile};
use volcomp::jacobi::solve_jacobi;
use volcomp::sclv::{check_compatible, mc_volume_oracle, ratio_curve, solve_spec, McEstimate, MetricSource};
use volcomp::{ModelConstants, SignatureMode};

use crate::config::{ConditionConfig, RunConfig, TheoremKind};
use crate::output::{num, opt, profile_csv, Csv, Output};
use crate::{CliError, EXIT_CONCLUSION, EXIT_HYPOTHESIS, EXIT_OK};

pub fn volume(cfg: &RunConfig, out: &mut Output) -> Result<i32, CliError> {
    let metric = cfg.build_metric()?;
    let spec = cfg.build_spec()?;
    let p = cfg.base_point()?;
    check_compatible(&spec, &metric)?;
    let solved = solve_spec(&spec, &MetricSource::new(&metric, &p), 1.0, &[], ode_tolerance(cfg.tolerances.tol))?;
    let rep = solved.report_at(1.0)?;
    out.json("volume", "volume", &rep)?;
    let mut header = vec!["index".to_string()];
    header.extend((0..spec.n()).map(|i| format!("xi_{i}")));
    header.extend(["weight", "cut", "radial_integral", "model_integral"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header);
    for d in &rep.per_direction {
        let mut row = vec![d.index.to_string()];
        row.extend(d.frame.iter().map(|x| num(*x)));
        row.extend([num(d.weight), num(d.cut), num(d.radial_integral), num(d.model_integral)]);
        csv.row(&row);
    }
    out.csv("volume_directions", csv)?;
    if cfg.output.dump_directions {
        for d in &solved.directions {
            out.csv(&format!("direction_{:03}", d.index), profile_csv(&d.solution))?;
        }
    }
    println!("vol_U  = {}", num(rep.vol_u));
    println!("vol_U0 = {}", num(rep.vol_u0));
    println!("quadrature error estimate {}", num(rep.quadrature_error_estimate));
    Ok(EXIT_OK)
}

fn verdict_code(verdicts: &[ComparisonVerdict]) -> i32 {
    if verdicts.iter().any(|v| v.conclusion_holds == Some(false)) {
        EXIT_CONCLUSION
    } else if verdicts.iter().any(|v| v.inapplicable()) {
        EXIT_HYPOTHESIS
    } else {
        EXIT_OK
    }
}

fn ratio_csv(r: &[f64], vol_ur: &[f64], vol_u0r: &[f64], v: &[f64]) -> Csv {
    let mut csv = Csv::new(&["r", "vol_Ur", "vol_U0r", "V"]);
    for i in 0..r.len() {
        csv.row(&[num(r[i]), num(vol_ur[i]), num(vol_u0r[i]), num(v[i])]);
    }
    csv
}

pub fn verify(cfg: &RunConfig, out: &mut Output) -> Result<i32, CliError> {
    let kind = cfg
        .theorem
        .kind
        .ok_or_else(|| CliError::Config("field `theorem.kind`: required by verify".into()))?;
    let metric = cfg.build_metric()?;
    let spec = cfg.build_spec()?;
    let p = cfg.base_point()?;
    let c = cfg.comparison_c()?;
    let tol = cfg.tolerances.tol;
    let verdicts = match kind {
        TheoremKind::Guenther => vec![check_guenther(&spec, &metric, &p, c, tol)?],
        TheoremKind::Bishop => vec![check_bishop(&spec, &metric, &p, c, tol)?],
        TheoremKind::BishopGromov => {
            let condition = match cfg.theorem.condition {
                Some(ConditionConfig::A) => Condition::A,
                Some(ConditionConfig::B) => Condition::B,
                None => return Err(CliError::Config("field `theorem.condition`: required for bishop-gromov".into())),
            };
            vec![check_bishop_gromov(&spec, &metric, &p, c, &cfg.r_grid()?, condition, tol)?]
        }
        TheoremKind::FlatCorollary => check_flat_corollary(std::slice::from_ref(&spec), &metric, &p, tol)?,
    };
    out.json("verdict", "verify", &verdicts)?;
    let mut csv = Csv::new(&[
        "theorem",
        "c",
        "hypothesis_passed",
        "conclusion_holds",
        "vol_U",
        "vol_U0",
        "margin",
        "strict",
        "equality",
    ]);
    for v in &verdicts {
        let theorem = serde_json::to_value(v.theorem).ok().and_then(|t| t.as_str().map(String::from)).unwrap_or_default();
        let holds = v.conclusion_holds.map(|b| b.to_string()).unwrap_or_else(|| "inapplicable".into());
        csv.row(&[
            theorem,
            num(v.c),
            v.hypothesis_passed.to_string(),
            holds,
            num(v.vol_u),
            num(v.vol_u0),
            num(v.margin),
            v.strict.to_string(),
            v.equality.equality.to_string(),
        ]);
        println!("{}", v.detail);
    }
    out.csv("verdict", csv)?;
    if let Some(curve) = verdicts.first().and_then(|v| v.ratio_curve.as_ref()) {
        out.csv("ratio", ratio_csv(&curve.r, &curve.vol_ur, &curve.vol_u0r, &curve.v))?;
    }
    Ok(verdict_code(&verdicts))
}

pub fn ratio(cfg: &RunConfig, out: &mut Output) -> Result<i32, CliError> {
    let metric = cfg.build_metric()?;
    let spec = cfg.build_spec()?;
    let p = cfg.base_point()?;
    let grid = cfg.r_grid()?;
    let curve = ratio_curve(&spec, &metric, &p, &grid, ode_tolerance(cfg.tolerances.tol))?;
    out.json("ratio", "ratio", &curve)?;
    out.csv("ratio", ratio_csv(&curve.r, &curve.vol_ur, &curve.vol_u0r, &curve.v))?;
    println!("largest increase of V over the grid: {}", num(curve.worst_increase()));
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ExpandEntry {
    frame: Vec<f64>,
    epsilon: f64,
    ricci_analytic: f64,
    det_fit: ExpansionFit,
    field_fits: Vec<JacobiFieldFit>,
    /// `ε Σ_i K(γ', E_i)` from the field fits.
    frame_ricci_sum: f64,
}

pub fn expand(cfg: &RunConfig, out: &mut Output) -> Result<i32, CliError> {
    let metric = cfg.build_metric()?;
    let p = cfg.base_point()?;
    let n = cfg.dim();
    let c = cfg.theorem.c.or(cfg.sclv.as_ref().map(|s| s.c)).unwrap_or(0.0);
    let mut frames = cfg.expand.directions.clone();
    if frames.is_empty() {
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        frames.push(e0);
    }
    let basis = metric.orthonormal_basis(&p)?;
    let t_max = cfg.expand.t_max;
    let mut entries = Vec::new();
    let mut csv = Csv::new(&[
        "direction",
        "epsilon",
        "ricci_estimate",
        "ricci_analytic",
        "abs_error",
        "frame_ricci_sum",
        "cubic_term",
        "residual",
    ]);
    for (k, frame) in frames.iter().enumerate() {
        if frame.len() != n {
            return Err(CliError::Config(format!("field `expand.directions[{k}]`: needs {n} components")));
        }
        let xi = basis.combine(frame);
        let sys = integrate_radial(&metric, &p, &xi, t_max, 1e-12)?;
        let eps = sys.epsilon;
        let consts = ModelConstants::radial(c, n, SignatureMode::from_epsilon(eps))?;
        let sol = solve_jacobi(Arc::new(tidal_profile(&sys)), consts, t_max, 1e-12)?;
        let det_fit = fit_det_a_expansion(&sol)?;
        let field_fits: Vec<JacobiFieldFit> = (0..n - 1).map(|i| fit_jacobi_expansion(&sol, i)).collect::<Result<_, _>>()?;
        let frame_ricci_sum = eps * field_fits.iter().map(|f| f.sectional_estimate).sum::<f64>();
        let ricci_analytic = ricci_along(&metric, &p, frame)?;
        csv.row(&[
            k.to_string(),
            num(eps),
            num(det_fit.ricci_estimate),
            num(ricci_analytic),
            num((det_fit.ricci_estimate - ricci_analytic).abs()),
            num(frame_ricci_sum),
            num(det_fit.cubic_term),
            num(det_fit.residual),
        ]);
        println!("direction {k}: ricci_estimate {} (analytic {})", num(det_fit.ricci_estimate), num(ricci_analytic));
        out.csv(&format!("expand_direction_{k:03}"), profile_csv(&sol))?;
        entries.push(ExpandEntry { frame: frame.clone(), epsilon: eps, ricci_analytic, det_fit, field_fits, frame_ricci_sum });
    }
    out.json("expand", "expand", &entries)?;
    out.csv("expand", csv)?;
    Ok(EXIT_OK)
}

pub fn counterexample(out: &mut Output) -> Result<i32, CliError> {
    let rep = counterexample_33();
    let mut csv = Csv::new(&["set", "i", "a", "b", "c", "d"]);
    for set in &rep.sets {
        println!("{}:", set.label);
        for i in 0..set.a.len() {
            println!("  a = {}, b = {}, c = {}, d = {}", set.a[i], set.b[i], set.c[i], set.d[i]);
            csv.row(&[set.label.clone(), i.to_string(), set.a[i].clone(), set.b[i].clone(), set.c[i].clone(), set.d[i].clone()]);
        }
        println!("  termwise a_i/b_i > c_i/d_i: {}", if set.termwise { "yes" } else { "no" });
        println!("  sum a / sum b = {}, sum c / sum d = {}", set.sum_ab, set.sum_cd);
        if let Some(side) = set.side_conditions {
            println!("  side conditions a_i < c_i < d_i, a_i < b_i < d_i: {}", if side { "yes" } else { "no" });
        }
    }
    println!("ratio sum inequality reversed: {}", if rep.reversed { "yes" } else { "no" });
    out.json("counterexample", "counterexample", &rep)?;
    out.csv("counterexample", csv)?;
    Ok(if rep.reversed { EXIT_OK } else { EXIT_CONCLUSION })
}

pub fn search(cfg: &RunConfig, out: &mut Output) -> Result<i32, CliError> {
    let metric = Arc::new(cfg.build_metric()?);
    let p = cfg.base_point()?;
    let grid = cfg.r_grid()?;
    let cuts = if cfg.search.cuts.is_empty() { vec![cfg.sclv()?.cut.clone()] } else { cfg.search.cuts.clone() };
    let family = cuts
        .into_iter()
        .enumerate()
        .map(|(i, cut)| {
            Ok(SearchInstance {
                label: format!("cut #{i}"),
                spec: cfg.build_spec_with_cut(cut)?,
                metric: metric.clone(),
                base_point: p.clone(),
                r_grid: grid.clone(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let budget = cfg.search.budget.unwrap_or(family.len());
    let rep = search_ratio_violation(&family, budget, cfg.tolerances.tol);
    out.json("search", "search", &rep)?;
    let mut csv = Csv::new(&["label", "r", "R", "V_r", "V_R", "condition_applies"]);
    let mut alarm = false;
    for h in &rep.hits {
        let applies = rep.condition_applies.contains(&h.label);
        alarm |= applies;
        csv.row(&[h.label.clone(), num(h.r), num(h.big_r), num(h.v_r), num(h.v_big_r), applies.to_string()]);
    }
    out.csv("search", csv)?;
    for e in &rep.errors {
        eprintln!("skipped {e}");
    }
    println!("{}", rep.summary);
    Ok(if alarm { EXIT_CONCLUSION } else { EXIT_OK })
}

#[derive(Serialize)]
struct OracleReport {
    polar: f64,
    monte_carlo: McEstimate,
    standard_errors: f64,
    relative_difference: f64,
    within_three_se: bool,
}

pub fn oracle(cfg: &RunConfig, seed: u64, out: &mut Output) -> Result<i32, CliError> {
    let metric = cfg.build_metric()?;
    let spec = cfg.build_spec()?;
    let p = cfg.base_point()?;
    check_compatible(&spec, &metric)?;
    let polar = solve_spec(&spec, &MetricSource::new(&metric, &p), 1.0, &[], ode_tolerance(cfg.tolerances.tol))?
        .report_at(1.0)?
        .vol_u;
    let mc = mc_volume_oracle(&spec, &metric, &p, cfg.oracle.samples, seed)?;
    let diff = (mc.value - polar).abs();
    let z = if mc.std_error > 0.0 { diff / mc.std_error } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
    let rep = OracleReport {
        polar,
        monte_carlo: mc,
        standard_errors: z,
        relative_difference: diff / polar.abs(),
        within_three_se: z <= 3.0,
    };
    out.seed = Some(seed);
    out.json("oracle", "oracle", &rep)?;
    let mut csv = Csv::new(&["samples", "seed", "polar", "monte_carlo", "std_error", "z"]);
    csv.row(&[mc.samples.to_string(), seed.to_string(), num(polar), num(mc.value), num(mc.std_error), opt(Some(z))]);
    out.csv("oracle", csv)?;
    println!("polar {}  monte carlo {} +/- {}  ({} SE)", num(polar), num(mc.value), num(mc.std_error), num(z));
    Ok(if rep.within_three_se { EXIT_OK } else { EXIT_CONCLUSION })
}
