//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use hcflow_cli::config::{parse_json, RunConfig};
use hcflow_core::ensemble::{random_initial, random_model, EnsembleParams};
use hcflow_core::flow::{closed_form_inverse, gamma_system, relative_error};
use hcflow_core::hss::{grassmannian_realization, verify_chern_tensors, verify_root_identities, CERealization};
use hcflow_core::limit::coefficient_span;
use hcflow_core::linalg::{self, c, CMatrix, CVector, HermitianEigen};
use hcflow_core::model::ce25;
use hcflow_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed_2026;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ensemble(n: usize, params: EnsembleParams, salt: u64) -> Vec<(CSpaceModel, InvariantMetric)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ salt);
    (0..n)
        .map(|_| {
            let m = random_model(&mut rng, &params);
            let init = random_initial(&mut rng, &m);
            (m, init)
        })
        .collect()
}

fn t_ext(init: &InvariantMetric) -> f64 {
    extinction_time(init.h_base(), DEFAULT_TIE_TOL).t_ext
}

fn closed_vs_rk4() -> Outcome {
    let mut worst = 0.0f64;
    for (m, init) in ensemble(50, EnsembleParams::default(), 1) {
        let t = 0.9 * t_ext(&init);
        let err = match integrate_rk4(&m, &init, t, 1000) {
            Ok(rk) => relative_error(rk.last(), &closed_form_solution(&m, &init, t).unwrap()),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    outcome(worst <= 1e-8, format!("50 models, max relative error {worst:.3e} (tol 1e-8)"))
}

fn finite_difference() -> Outcome {
    let delta = 1e-6;
    let mut worst = 0.0f64;
    let mut worst_scaled = 0.0f64;
    let mut failing = 0;
    for (m, init) in ensemble(50, EnsembleParams::default(), 1) {
        let t_end = 0.9 * t_ext(&init);
        let mut model_worst = 0.0f64;
        for i in 0..10 {
            let t = t_end * i as f64 / 9.0;
            let plus = closed_form_solution(&m, &init, t + delta).unwrap();
            let minus = closed_form_solution(&m, &init, t - delta).unwrap();
            let k = k_tensor(&m, &closed_form_solution(&m, &init, t).unwrap()).unwrap();
            for (j, kb) in k.base.iter().enumerate() {
                let fd = (plus.h_base()[j] - minus.h_base()[j]) / (2.0 * delta);
                model_worst = model_worst.max((fd - kb).abs());
            }
            let fd = (plus.h_fiber() - minus.h_fiber()).scale(0.5 / delta);
            let err = linalg::max_abs(&(fd - &k.fiber));
            model_worst = model_worst.max(err);
            worst_scaled = worst_scaled.max(err / linalg::max_abs(&k.fiber).max(1.0));
        }
        if model_worst > 1e-6 {
            failing += 1;
        }
        worst = worst.max(model_worst);
    }
    outcome(
        worst <= 1e-6,
        format!(
            "50 models x 10 times, max entrywise error {worst:.3e} (tol 1e-6), {failing} models above tol; error relative to max(1, |K|) {worst_scaled:.3e}"
        ),
    )
}

fn chern_tensors() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let ce = CERealization::ce25();
    let mut worst = 0.0f64;
    let mut names = Vec::new();
    for _ in 0..5 {
        let h = vec![rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)];
        let hf = CMatrix::from_element(1, 1, c(rng.random_range(0.2..3.0), 0.0));
        let rep = verify_chern_tensors(&ce, &InvariantMetric::new(h, hf).unwrap()).unwrap();
        worst = worst.max(rep.max());
        names = rep.entries.iter().map(|e| e.name.clone()).collect();
        for f in rep.failures(1e-12) {
            eprintln!("  {}: {:.3e}", f.name, f.value);
        }
    }
    outcome(worst <= 1e-12, format!("5 metrics, {} residuals each, max {worst:.3e} (tol 1e-12)", names.len()))
}

fn root_identities() -> Outcome {
    let mut worst = 0.0f64;
    for (p, q) in [(1, 2), (2, 2), (1, 3)] {
        let rep = verify_root_identities(&grassmannian_realization(p, q).unwrap());
        worst = worst.max(rep.max());
    }
    outcome(worst <= 1e-12, format!("Gr(1,2), Gr(2,2), Gr(1,3), max residual {worst:.3e} (tol 1e-12)"))
}

fn determinant_law() -> Outcome {
    let params = EnsembleParams { equal_a: true, s_at_least_k: true, ..Default::default() };
    let mut worst = 0.0f64;
    for (m, init) in ensemble(50, params, 5) {
        let t_e = t_ext(&init);
        let t = t_e - 1e-6;
        let k = m.k() as i32;
        let lhs = (t_e - t).powi(k) * HermitianEigen::new(&closed_form_inverse(&m, &init, t).unwrap()).determinant();
        let rhs = 4f64.powi(k) * HermitianEigen::new(&gamma_system(&m).theta_s).determinant();
        worst = worst.max(((lhs - rhs) / rhs).abs());
    }
    outcome(worst <= 1e-4, format!("50 equal-A models, max relative error {worst:.3e} (tol 1e-4)"))
}

fn kernel_law() -> Outcome {
    let mut worst_angle = 0.0f64;
    let mut dims_ok = true;
    let mut base_ok = true;
    let mut count = 0;
    for equal in [false, true] {
        let params = EnsembleParams { equal_a: equal, ..Default::default() };
        for (m, init) in ensemble(25, params, 6 + equal as u64) {
            let lf = limit_form(&m, &init, DEFAULT_TIE_TOL).unwrap();
            let span = coefficient_span(&m, &lf.p_set);
            let kernel = lf.numerical_kernel();
            dims_ok &= kernel.ncols() == span.ncols() && lf.q_hat == span.ncols();
            worst_angle = worst_angle.max(linalg::max_principal_angle_sin(&kernel, &span));
            base_ok &= lf.base_limits.iter().enumerate().all(|(i, &b)| (b == 0.0) == lf.p_set.contains(&i));
            count += 1;
        }
    }
    outcome(
        dims_ok && base_ok && worst_angle <= 1e-8,
        format!("{count} models, dimensions match: {dims_ok}, max principal angle sine {worst_angle:.3e} (tol 1e-8), base limits exact: {base_ok}"),
    )
}

fn ulps_apart(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

fn metric_ulps(a: &InvariantMetric, b: &InvariantMetric) -> u64 {
    let base = a.h_base().iter().zip(b.h_base()).map(|(x, y)| ulps_apart(*x, *y)).max().unwrap_or(0);
    let fib = a
        .h_fiber()
        .iter()
        .zip(b.h_fiber().iter())
        .map(|(x, y)| ulps_apart(x.re, y.re).max(if x.im == 0.0 && y.im == 0.0 { 0 } else { ulps_apart(x.im, y.im) }))
        .max()
        .unwrap_or(0);
    base.max(fib)
}

fn static_metrics() -> Outcome {
    let lambdas = [0.1, 1.0, 10.0];
    let mut models = vec![ce25(1.0, 1.0)];
    let params = EnsembleParams { s_at_least_k: true, ..Default::default() };
    models.extend(ensemble(10, params, 7).into_iter().map(|(m, _)| m));
    let mut worst_res = 0.0f64;
    let mut worst_ulps = 0u64;
    for m in &models {
        let st: Vec<StaticMetric> = lambdas.iter().map(|&l| static_metric(m, l).unwrap()).collect();
        for s in &st {
            worst_res = worst_res.max(s.residual);
        }
        for a in &st {
            for b in &st {
                let scaled = b.metric.scaled(b.lambda / a.lambda).unwrap();
                worst_ulps = worst_ulps.max(metric_ulps(&a.metric, &scaled));
            }
        }
    }
    let m = ce25(1.0, 1.0);
    let rejects_lambda = matches!(static_metric(&m, 0.0), Err(Error::NoStaticForNonpositiveLambda { .. }))
        && matches!(static_metric(&m, -2.0), Err(Error::NoStaticForNonpositiveLambda { .. }));
    let zero = FiberSpec::new(1, vec![CVector::zeros(1), CVector::zeros(1)]);
    let singular = build_cspace(m.factors().to_vec(), zero).unwrap();
    let rejects_singular = matches!(static_metric(&singular, 1.0), Err(Error::ThetaSingular { .. }));
    outcome(
        worst_res <= 1e-12 && worst_ulps <= 4 && rejects_lambda && rejects_singular,
        format!(
            "{} models, max residual {worst_res:.3e} (tol 1e-12), homothety within {worst_ulps} ulp, rejects lambda<=0: {rejects_lambda}, rejects singular Theta_s: {rejects_singular}",
            models.len()
        ),
    )
}

fn normalized_convergence() -> Outcome {
    let m = ce25(1.0, 1.0);
    let init = InvariantMetric::initial(&m, CMatrix::identity(1, 1)).unwrap();
    let ns = normalized_state(&m, &init, 2.0 - 1e-6, 1.0, DEFAULT_TIE_TOL).unwrap();
    let st = static_metric(&m, 1.0 / ns.xi_limit).unwrap();
    let dist = ns.normalized_metric.max_diff(&st.metric);
    let xi_err = (ns.xi_limit - 1.0).abs();
    outcome(
        dist <= 1e-3 && xi_err <= 1e-10,
        format!("|c h - static(1/xi)| = {dist:.3e} (tol 1e-3), |xi - 1| = {xi_err:.3e} (tol 1e-10)"),
    )
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 9);
    let models = ensemble(20, EnsembleParams::default(), 9);
    let mut worst_increase = f64::NEG_INFINITY;
    for (m, init) in &models {
        let v = CVector::from_fn(m.k(), |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let t_end = t_ext(init) - 1e-4;
        let vals: Vec<f64> = (0..100)
            .map(|i| {
                let h = closed_form_solution(m, init, t_end * i as f64 / 99.0).unwrap();
                (v.adjoint() * h.h_fiber() * &v)[(0, 0)].re
            })
            .collect();
        for w in vals.windows(2) {
            worst_increase = worst_increase.max(w[1] - w[0]);
        }
    }
    outcome(
        worst_increase <= 1e-12,
        format!("20 models/vectors x 100 times, largest step change {worst_increase:.3e} (must be <= 1e-12)"),
    )
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hcflow"))
}

fn scratch_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hcflow-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn cli_contract() -> Outcome {
    let dir = scratch_dir();
    let ce25_path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/ce25.json");
    let mut notes = Vec::new();

    let out = bin()
        .args(["simulate", "--config"])
        .arg(&ce25_path)
        .args(["--t-end", "1.0", "--steps", "1000", "--cross-check"])
        .output()
        .unwrap();
    let csv_text = String::from_utf8_lossy(&out.stdout).to_string();
    let mut lines = csv_text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let mut max_diff = 0.0f64;
    let mut rows = 0;
    for line in lines {
        let vals: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        for (i, name) in header.iter().enumerate() {
            if let Some(j) = header.iter().position(|h| *h == format!("rk4_{name}")) {
                max_diff = max_diff.max((vals[i] - vals[j]).abs());
            }
        }
        rows += 1;
    }
    let sim_ok = out.status.code() == Some(0) && rows == 1001 && header.contains(&"rk4_Re_H_1_1") && max_diff <= 1e-8;
    notes.push(format!("simulate: exit {:?}, {rows} rows, max |closed-rk4| {max_diff:.1e}", out.status.code()));

    let out = bin().args(["static", "--config"]).arg(&ce25_path).args(["--lambda", "1.0"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or_default();
    let static_ok =
        out.status.code() == Some(0) && v["h"] == serde_json::json!([0.5, 0.5]) && v["H"] == serde_json::json!([[1.0]]);
    notes.push(format!("static: h={} H={}", v["h"], v["H"]));

    let out = bin().args(["simulate", "--config"]).arg(&ce25_path).args(["--t-end", "3.0"]).output().unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    let past_ok = out.status.code() == Some(3) && stderr.contains("PastExtinction: T=2");
    notes.push(format!("past extinction: exit {:?}", out.status.code()));

    let mut cfg: RunConfig = parse_json(&std::fs::read_to_string(&ce25_path).unwrap(), "config").unwrap();
    cfg.model.factors[0].a = 0.1 + 0.2;
    cfg.model.factors[1].a = 1.0 / 3.0;
    cfg.model.fiber.c = Some(vec![vec![[1e-300, -0.25 / 3.0]], vec![[-std::f64::consts::E, 5e-324]]]);
    cfg.initial.h0 = vec![vec![[std::f64::consts::PI / 7.0, 0.0]]];
    let tricky = dir.join("tricky.json");
    std::fs::write(&tricky, cfg.to_json()).unwrap();
    let dump1 = bin().args(["limit", "--dump-config", "--config"]).arg(&tricky).output().unwrap();
    let dumped = dir.join("dumped.json");
    std::fs::write(&dumped, &dump1.stdout).unwrap();
    let dump2 = bin().args(["limit", "--dump-config", "--config"]).arg(&dumped).output().unwrap();
    let reparsed: RunConfig = parse_json(&String::from_utf8_lossy(&dump1.stdout), "dump").unwrap();
    let round_trip_ok = dump1.status.code() == Some(0)
        && dump1.stdout == dump2.stdout
        && reparsed == cfg
        && reparsed.model().unwrap() == cfg.model().unwrap()
        && reparsed.initial.h0[0][0][0].to_bits() == cfg.initial.h0[0][0][0].to_bits();
    notes.push(format!("round trip bit-exact: {round_trip_ok}"));
    let _ = std::fs::remove_dir_all(&dir);

    outcome(sim_ok && static_ok && past_ok && round_trip_ok, notes.join("; "))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("closed form vs RK4", closed_vs_rk4),
        ("flow equation by finite differences", finite_difference),
        ("Chern tensors from first principles", chern_tensors),
        ("root identities", root_identities),
        ("determinant law at extinction", determinant_law),
        ("limit kernel", kernel_law),
        ("static metrics", static_metrics),
        ("normalized convergence", normalized_convergence),
        ("monotone fibre metric", monotonicity),
        ("CLI contract", cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status} {name}: {} [{:.2}s]", i + 1, o.detail, start.elapsed().as_secs_f64());
        failed += !o.pass as usize;
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
