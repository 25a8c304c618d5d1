//! Acceptance suite: one pass/fail line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use volcomp::comparison::{check_bishop, check_bishop_gromov, check_guenther, counterexample_33, Condition};
use volcomp::curvature_models::{
    build_conformal_metric, build_grw_metric, model_spacetime, ConformalData, GRWData, WarpFunction,
};
use volcomp::expansions::{fit_det_a_expansion, local_comparison, riemannian_ball_comparison, ricci_along, LocalOptions};
use volcomp::geodesic::{integrate_radial, tidal_profile, ConstantProfile};
use volcomp::jacobi::{riccati_check, solve_jacobi};
use volcomp::metric::{euclidean, minkowski, space_form, CoordinateMetric};
use volcomp::models::{c_c, model_density, s_c};
use volcomp::sclv::{mc_volume_oracle, volume, CutFunction, DirectionSet, Resolution, SCLVSpec};
use volcomp::{ModelConstants, SignatureMode};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn cosh_grw(m: usize, k_fiber: f64) -> CoordinateMetric {
    let data = GRWData::new(WarpFunction::Cosh { rate: 1.0 }, m, k_fiber, (-3.0, 3.0)).unwrap();
    build_grw_metric(&data).unwrap()
}

fn cap(c: f64, n: usize, chi: f64, cut: CutFunction, res: usize) -> SCLVSpec {
    SCLVSpec::new(ModelConstants::new(c, n).unwrap(), DirectionSet::TimelikeCap { chi_max: chi }, cut)
        .unwrap()
        .with_resolution(Resolution { radial: res, azimuth: res })
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for &c in &[-2.0, -1.0, 0.0, 0.5, 1.0, 2.0] {
        let consts = ModelConstants::new(c, 3).unwrap();
        let t_c = if c < 0.0 { 0.9 * PI / (-c as f64).sqrt() } else { 3.0 };
        for k in 0..=2000 {
            let t = 0.01 + (t_c - 0.01) * k as f64 / 2000.0;
            let (s, cc) = (s_c(&consts, t), c_c(&consts, t));
            worst = worst.max((cc * cc - c * s * s - 1.0).abs());
        }
    }
    ensure(worst <= 1e-12, format!("identity defect {worst:e}"))?;
    Ok(format!("max |c_c² - c s_c² - 1| = {worst:.2e}"))
}

fn criterion_2() -> Outcome {
    let mut worst_det: f64 = 0.0;
    let mut worst_psi: f64 = 0.0;
    for &c in &[-1.0, 0.0, 1.0] {
        for n in 2..=4 {
            let t_max = if c < 0.0 { 3f64.min(0.9 * PI) } else { 3.0 };
            let consts = ModelConstants::new(c, n).unwrap();
            let prof = Arc::new(ConstantProfile::scalar(-c, n - 1, t_max));
            let sol = solve_jacobi(prof, consts, t_max, 1e-12).map_err(|e| e.to_string())?;
            for (i, &t) in sol.grid.iter().enumerate().skip(1) {
                let want = model_density(&consts, t);
                worst_det = worst_det.max((sol.det_a[i] - want).abs() / want.max(1e-12));
                if let Some(psi) = sol.psi[i] {
                    worst_psi = worst_psi.max((psi - 1.0).abs());
                }
            }
        }
    }
    ensure(worst_det <= 1e-8 && worst_psi <= 1e-8, format!("det deviation {worst_det:e}, psi deviation {worst_psi:e}"))?;
    Ok(format!("max rel det deviation {worst_det:.2e}, max |psi - 1| {worst_psi:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=4 {
        let prof = Arc::new(ConstantProfile::scalar(1.0, n - 1, 4.0));
        let sol = solve_jacobi(prof, ModelConstants::new(-1.0, n).unwrap(), 4.0, 1e-12).map_err(|e| e.to_string())?;
        let tc = sol.first_conjugate.ok_or("no conjugate point found")?;
        worst = worst.max((tc - PI).abs());
    }
    ensure(worst <= 1e-8, format!("|t_conj - pi| = {worst:e}"))?;
    Ok(format!("max |first_conjugate - pi| = {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let metric = cosh_grw(2, 1.0);
    let p = [0.0; 3];
    let spec = cap(0.5, 3, 0.5, CutFunction::constant(1.0), 8);
    let v = check_guenther(&spec, &metric, &p, 0.5, 1e-8).map_err(|e| e.to_string())?;
    ensure(v.hypothesis_passed, format!("hypothesis audit failed: {}", v.detail))?;
    ensure(v.conclusion_holds == Some(true) && v.vol_u >= v.vol_u0, format!("conclusion: {}", v.detail))?;
    ensure(v.directionwise_holds == Some(true), "psi not nondecreasing along some direction")?;
    let spec1 = cap(1.0, 3, 0.5, CutFunction::constant(1.0), 8);
    let eq = check_guenther(&spec1, &metric, &p, 1.0, 1e-8).map_err(|e| e.to_string())?;
    ensure(eq.conclusion_holds == Some(true) && eq.equality.equality && eq.equality.tidal_model, format!("self-comparison: {}", eq.detail))?;
    Ok(format!(
        "vol_U = {:.10} >= vol_U0 = {:.10}; self-comparison equality with tidal = -cI",
        v.vol_u, v.vol_u0
    ))
}

fn criterion_5() -> Outcome {
    let metric = cosh_grw(2, 1.2);
    let spec = cap(1.0, 3, 0.5, CutFunction::constant(1.0), 8);
    let v = check_bishop(&spec, &metric, &[0.0; 3], 1.0, 1e-8).map_err(|e| e.to_string())?;
    ensure(v.hypothesis_passed, format!("hypothesis audit failed: {}", v.detail))?;
    ensure(v.conclusion_holds == Some(true) && v.strict && v.vol_u < v.vol_u0, format!("conclusion: {}", v.detail))?;
    ensure(v.riccati_holds == Some(true), "Phi <= Phi_c failed")?;
    // comoving direction against closed forms
    let xi = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    let sys = integrate_radial(&metric, &[0.0; 3], &xi, 2.0, 1e-11).map_err(|e| e.to_string())?;
    let sol = solve_jacobi(Arc::new(tidal_profile(&sys)), ModelConstants::new(1.0, 3).unwrap(), 2.0, 1e-11)
        .map_err(|e| e.to_string())?;
    let rep = riccati_check(&sol, &sol.consts).map_err(|e| e.to_string())?;
    ensure(rep.holds(), format!("comoving Riccati check: {rep:?}"))?;
    Ok(format!("vol_U = {:.10} < vol_U0 = {:.10}; Riccati comparison holds", v.vol_u, v.vol_u0))
}

fn criterion_6() -> Outcome {
    let r_grid: Vec<f64> = (1..=10).map(|i| 0.1 * i as f64).collect();
    let data = GRWData::new(WarpFunction::Poly { coeffs: vec![1.0, 1.0, -0.125] }, 2, 0.0, (-0.5, 3.0)).unwrap();
    let concave = build_grw_metric(&data).unwrap();
    let spec = cap(0.0, 3, 0.5, CutFunction::Linear { base: 1.0, coeffs: vec![0.0, 0.2, 0.1] }, 8);
    let a = check_bishop_gromov(&spec, &concave, &[0.0; 3], 0.0, &r_grid, Condition::A, 1e-8).map_err(|e| e.to_string())?;
    ensure(a.hypothesis_passed, format!("Ric >= 0 audit failed: {}", a.detail))?;
    ensure(a.conclusion_holds == Some(true), format!("condition A: {}", a.detail))?;
    let spec_b = cap(1.0, 3, 0.5, CutFunction::constant(1.0), 8);
    let mut worst_b: f64 = f64::NEG_INFINITY;
    for k_fiber in [1.0, 1.2] {
        let b = check_bishop_gromov(&spec_b, &cosh_grw(2, k_fiber), &[0.0; 3], 1.0, &r_grid, Condition::B, 1e-8)
            .map_err(|e| e.to_string())?;
        ensure(b.conclusion_holds == Some(true), format!("condition B (k_F = {k_fiber}): {}", b.detail))?;
        worst_b = worst_b.max(-b.margin);
    }
    Ok(format!("A: worst increase {:.2e}; B: worst increase {:.2e}", -a.margin, worst_b))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let rep = counterexample_33();
    let elapsed = start.elapsed();
    let s1 = &rep.sets[0];
    let s2 = &rep.sets[1];
    ensure(s1.termwise && s1.reversed && s1.sum_ab == "40/11" && s1.sum_cd == "11/2", format!("set 1: {s1:?}"))?;
    ensure(
        s2.termwise && s2.reversed && s2.side_conditions == Some(true) && s2.sum_ab == "307/506" && s2.sum_cd == "7/10",
        format!("set 2: {s2:?}"),
    )?;
    ensure(elapsed < Duration::from_millis(1), format!("took {elapsed:?}"))?;
    Ok(format!("set 1: 40/11 < 11/2; set 2: 307/506 < 7/10 with side conditions; {elapsed:?}"))
}

fn criterion_8() -> Outcome {
    let mut cases: Vec<(String, CoordinateMetric, Vec<f64>)> = Vec::new();
    for n in 2..=4 {
        cases.push((format!("minkowski n={n}"), minkowski(n).unwrap(), vec![0.0; n]));
        cases.push((format!("euclidean n={n}"), euclidean(n).unwrap(), vec![0.0; n]));
        for c in [-1.0, 1.0] {
            cases.push((format!("lorentzian space form c={c} n={n}"), model_spacetime(c, n).unwrap(), vec![0.0; n]));
            cases.push((format!("riemannian space form k={c} n={n}"), space_form(c, n).unwrap(), vec![0.0; n]));
        }
        let m = n - 1;
        cases.push((format!("cosh GRW n={n}"), cosh_grw(m, 1.2), vec![0.0; n]));
        let concave = GRWData::new(WarpFunction::Poly { coeffs: vec![1.0, 1.0, -0.125] }, m, 0.0, (-0.5, 3.0)).unwrap();
        cases.push((format!("concave GRW n={n}"), build_grw_metric(&concave).unwrap(), vec![0.0; n]));
        let conf = ConformalData { a: 0.1, base: minkowski(n).unwrap() };
        cases.push((format!("conformal n={n}"), build_conformal_metric(&conf).unwrap(), vec![0.0; n]));
    }
    let mut worst = (0.0f64, String::new());
    let mut count = 0;
    for (name, metric, p) in &cases {
        let n = metric.dim();
        let lorentzian = metric.signature().iter().any(|s| *s < 0.0);
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        if lorentzian {
            for chi in [0.0f64, 0.4] {
                let mut v = vec![0.0; n];
                v[0] = chi.cosh();
                v[1] = chi.sinh();
                dirs.push(v);
            }
            let mut s = vec![0.0; n];
            s[0] = 0.3f64.sinh();
            s[n - 1] = 0.3f64.cosh();
            dirs.push(s);
        } else {
            let mut v = vec![0.0; n];
            v[0] = 0.6;
            v[n - 1] = 0.8;
            dirs.push(v);
        }
        for frame in dirs {
            let basis = metric.orthonormal_basis(p).map_err(|e| e.to_string())?;
            let xi = basis.combine(&frame);
            let sys = integrate_radial(metric, p, &xi, 0.3, 1e-12).map_err(|e| format!("{name}: {e}"))?;
            let eps = sys.epsilon;
            let consts = ModelConstants::radial(0.0, n, SignatureMode::from_epsilon(eps)).unwrap();
            let sol = solve_jacobi(Arc::new(tidal_profile(&sys)), consts, 0.3, 1e-12).map_err(|e| format!("{name}: {e}"))?;
            let fit = fit_det_a_expansion(&sol).map_err(|e| format!("{name}: {e}"))?;
            let ric = ricci_along(metric, p, &frame).map_err(|e| format!("{name}: {e}"))?;
            let err = (fit.ricci_estimate - ric).abs();
            let ok = if ric.abs() < 0.1 { err <= 1e-4 } else { err <= 1e-3 * ric.abs() };
            ensure(ok, format!("{name} {frame:?}: estimate {} vs Ric {ric}", fit.ricci_estimate))?;
            let scaled = if ric.abs() < 0.1 { err / 1e-4 } else { err / (1e-3 * ric.abs()) };
            if scaled > worst.0 {
                worst = (scaled, name.clone());
            }
            count += 1;
        }
    }
    Ok(format!("{count} directions over {} metrics; worst error at {:.1}% of tolerance ({})", cases.len(), 100.0 * worst.0, worst.1))
}

fn criterion_9() -> Outcome {
    let flat = minkowski(3).unwrap();
    let model = model_spacetime(1.0, 3).unwrap();
    let p = [0.0; 3];
    let opts = LocalOptions::default();
    let w = local_comparison(&flat, &model, &p, &p, &[1.0, 0.0, 0.0], &opts, 1e-10).map_err(|e| e.to_string())?;
    let w2 = local_comparison(&flat, &model, &p, &p, &[0.0, 1.0, 0.0], &opts, 1e-10).map_err(|e| e.to_string())?;
    ensure(w.strict_holds && w.vol1 < w.vol2, format!("timelike cone: {w:?}"))?;
    ensure(w2.strict_holds && w2.vol1 > w2.vol2, format!("spacelike section: {w2:?}"))?;
    Ok(format!(
        "timelike: {:.6e} < {:.6e} (delta {:.3}); spacelike: {:.6e} > {:.6e} (delta {:.3})",
        w.vol1, w.vol2, w.delta, w2.vol1, w2.vol2, w2.delta
    ))
}

fn criterion_10() -> Outcome {
    let r = [0.2, 0.5];
    let p = [0.0; 3];
    let rep = riemannian_ball_comparison(&euclidean(3).unwrap(), &space_form(1.0, 3).unwrap(), &p, &p, &r, 1e-11)
        .map_err(|e| e.to_string())?;
    ensure(rep.skipped.is_empty() && rep.strict_holds && rep.ordering > 0.0, format!("{rep:?}"))?;
    let mut worst: f64 = 0.0;
    for (i, ri) in r.iter().enumerate() {
        worst = worst.max((rep.vol1[i] - 4.0 * PI * ri.powi(3) / 3.0).abs());
        worst = worst.max((rep.vol2[i] - 2.0 * PI * (ri - ri.sin() * ri.cos())).abs());
    }
    ensure(worst <= 1e-6, format!("closed-form deviation {worst:e}"))?;
    Ok(format!("flat balls strictly larger; closed-form deviation {worst:.2e}"))
}

fn criterion_11() -> Outcome {
    let spec = cap(0.0, 2, 1.0, CutFunction::constant(1.0), 16);
    let metric = minkowski(2).unwrap();
    let rep = volume(&spec, &metric, &[0.0, 0.0], 1e-10).map_err(|e| e.to_string())?;
    let est = mc_volume_oracle(&spec, &metric, &[0.0, 0.0], 10_000_000, 20_240_601).map_err(|e| e.to_string())?;
    let diff = (est.value - rep.vol_u).abs();
    ensure(diff <= 3.0 * est.std_error, format!("|MC - polar| = {diff:e} > 3 SE = {:e}", 3.0 * est.std_error))?;
    ensure(diff <= 0.01 * rep.vol_u, "outside 1%")?;
    Ok(format!(
        "polar {:.10}, MC {:.6} +/- {:.1e} (1e7 samples, {:.2} SE)",
        rep.vol_u,
        est.value,
        est.std_error,
        diff / est.std_error
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 11] = [
        ("model identities", criterion_1, Some(Duration::from_secs(1))),
        ("constant-curvature oracle", criterion_2, Some(Duration::from_secs(10))),
        ("conjugate-point location", criterion_3, None),
        ("lower volume bound (cosh GRW vs c = 0.5)", criterion_4, Some(Duration::from_secs(60))),
        ("upper volume bound (k_F = 1.2 vs c = 1)", criterion_5, None),
        ("ratio monotonicity, conditions A and B", criterion_6, None),
        ("ratio-sum counterexample arithmetic", criterion_7, None),
        ("expansion recovery of Ric", criterion_8, None),
        ("two-sided local comparison", criterion_9, None),
        ("Riemannian ball volumes", criterion_10, None),
        ("Monte-Carlo oracle agreement", criterion_11, Some(Duration::from_secs(60))),
    ];
    let mut failures = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > *l => Err(format!("runtime {elapsed:.2?} exceeds {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{elapsed:.2?}]", i + 1),
            Err(msg) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
