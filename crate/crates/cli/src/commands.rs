use std::io::Write;
use std::path::{Path, PathBuf};

use hcflow_core::flow::{closed_form_trajectory, integrate_rk4};
use hcflow_core::hss::{
    catalog_table, grassmannian_realization, verify_chern_tensors, verify_root_identities, CERealization,
};
use hcflow_core::linalg::{CMatrix, HermitianEigen};
use hcflow_core::{
    closed_form_solution, collapse_structure_ce, extinction_time, limit_form, normalized_state, static_metric,
    static_residual, CSpaceModel, FactorKind, InvariantMetric, ResidualReport, DEFAULT_TIE_TOL,
};
use serde_json::{json, Value};

use crate::config::{self, complex_rows, MetricConfig, RunConfig};
use crate::{CliError, Command, Common};

/// Residual tolerance of the `verify` command.
pub const VERIFY_TOL: f64 = 1e-12;

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { common, t_end, steps, cross_check, stride } => {
            with_config(&common, |cfg| simulate(cfg, &common, t_end, steps, cross_check, stride))
        }
        Command::Limit { common } => with_config(&common, |cfg| limit(cfg, &common)),
        Command::Static { common, lambda, check } => with_config(&common, |cfg| statics(cfg, lambda, check.as_deref())),
        Command::Normalize { common, t_end, steps, v, stride } => {
            with_config(&common, |cfg| normalize(cfg, &common, t_end, steps, v, stride))
        }
        Command::Verify { common } => with_config(&common, verify),
        Command::Catalog { common } => emit(&common, None, catalog()),
    }
}

fn with_config(common: &Common, f: impl FnOnce(&RunConfig) -> Result<String, CliError>) -> Result<(), CliError> {
    let path = common.config.as_ref().ok_or_else(|| CliError::Config("--config: required".into()))?;
    let cfg = config::load(path)?;
    let model = cfg.model()?;
    cfg.initial(&model)?;
    for w in model.warnings() {
        eprintln!("warning: {w}");
    }
    if common.dump_config {
        return emit(common, Some(&cfg), cfg.to_json() + "\n");
    }
    let out = f(&cfg)?;
    emit(common, Some(&cfg), out)
}

fn output_path(common: &Common, cfg: Option<&RunConfig>) -> Option<PathBuf> {
    let p = common.output.clone().or_else(|| cfg.and_then(|c| c.run.output.as_ref()).map(PathBuf::from))?;
    if p.is_relative() {
        if let Some(dir) = std::env::var_os("HCF_OUTPUT_DIR") {
            return Some(Path::new(&dir).join(p));
        }
    }
    Some(p)
}

fn emit(common: &Common, cfg: Option<&RunConfig>, text: String) -> Result<(), CliError> {
    match output_path(common, cfg) {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| CliError::Io(format!("--output {}: {e}", path.display())))
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn tie_tol(cfg: &RunConfig, common: &Common) -> f64 {
    common.tie_tol.or(cfg.run.tie_tol).unwrap_or(DEFAULT_TIE_TOL)
}

fn stride_ok(stride: usize) -> Result<(), CliError> {
    if stride == 0 {
        return Err(CliError::Config("--stride: must be at least 1".into()));
    }
    Ok(())
}

fn metric_header(prefix: &str, s: usize, k: usize) -> Vec<String> {
    let mut cols: Vec<String> = (1..=s).map(|i| format!("{prefix}h_{i}")).collect();
    for a in 1..=k {
        for b in a..=k {
            cols.push(format!("{prefix}Re_H_{a}_{b}"));
            cols.push(format!("{prefix}Im_H_{a}_{b}"));
        }
    }
    cols
}

fn metric_row(h_base: &[f64], h: &CMatrix) -> Vec<f64> {
    let mut row = h_base.to_vec();
    let k = h.nrows();
    for a in 0..k {
        for b in a..k {
            row.push(h[(a, b)].re);
            row.push(h[(a, b)].im);
        }
    }
    row
}

fn csv_string(header: &[String], rows: &[Vec<f64>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r.iter().map(|x| x.to_string())).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

fn det(h: &CMatrix) -> f64 {
    HermitianEigen::new(h).determinant()
}

fn simulate(
    cfg: &RunConfig,
    common: &Common,
    t_end: Option<f64>,
    steps: Option<usize>,
    cross_check: bool,
    stride: usize,
) -> Result<String, CliError> {
    stride_ok(stride)?;
    let model = cfg.model()?;
    let init = cfg.initial(&model)?;
    let t_ext = extinction_time(init.h_base(), tie_tol(cfg, common)).t_ext;
    let t_end = t_end.or(cfg.run.t_end).unwrap_or(0.9 * t_ext);
    let steps = steps.or(cfg.run.steps).unwrap_or(1000);
    let closed = closed_form_trajectory(&model, &init, t_end, steps)?;
    let rk = if cross_check { Some(integrate_rk4(&model, &init, t_end, steps)?) } else { None };

    let (s, k) = (model.s(), model.k());
    let mut header = vec!["t".to_string()];
    header.extend(metric_header("", s, k));
    header.push("det_H".into());
    if rk.is_some() {
        header.extend(metric_header("rk4_", s, k));
        header.push("rk4_det_H".into());
    }
    let mut rows = Vec::new();
    let mut max_diff = 0.0f64;
    for n in (0..=steps).filter(|n| n % stride == 0 || *n == steps) {
        let st = &closed.states[n];
        let mut row = vec![closed.times[n]];
        row.extend(metric_row(st.h_base(), st.h_fiber()));
        row.push(det(st.h_fiber()));
        if let Some(rk) = &rk {
            let r = &rk.states[n];
            row.extend(metric_row(r.h_base(), r.h_fiber()));
            row.push(det(r.h_fiber()));
            max_diff = max_diff.max(st.max_diff(r));
        }
        rows.push(row);
    }
    if rk.is_some() {
        eprintln!("max |closed - rk4| = {max_diff:e}");
    }
    csv_string(&header, &rows)
}

fn matrix_json(m: &CMatrix) -> Value {
    json!(complex_rows(m))
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

fn limit(cfg: &RunConfig, common: &Common) -> Result<String, CliError> {
    let model = cfg.model()?;
    let init = cfg.initial(&model)?;
    let tol = tie_tol(cfg, common);
    let lf = limit_form(&model, &init, tol)?;

    let zp_columns: Vec<Value> =
        lf.zp_basis.column_iter().map(|c| json!(c.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())).collect();
    let mut near = Vec::new();
    for n in 1..=20 {
        let t = lf.t_ext * (1.0 - 0.5f64.powi(n));
        let h = closed_form_solution(&model, &init, t)?;
        near.push(json!({
            "n": n,
            "t": t,
            "h": h.h_base(),
            "fiber_distance": hcflow_core::linalg::max_abs(&(h.h_fiber() - &lf.fiber_limit)),
        }));
    }
    let collapse = match model.ce_pairs() {
        Some(_) => {
            let r = collapse_structure_ce(&model, &init, tol)?;
            json!({
                "sigma": one_based(&r.sigma),
                "p_set": one_based(&r.p_set),
                "I1": one_based(&r.i1),
                "I2": one_based(&r.i2),
                "description": r.description,
            })
        }
        None => Value::Null,
    };
    let report = json!({
        "T": lf.t_ext,
        "p_set": one_based(&lf.p_set),
        "base_limits": lf.base_limits,
        "q_hat": lf.q_hat,
        "fiber_rank": lf.fiber_rank,
        "Zp_basis": zp_columns,
        "theta_p_eigenvalues": lf.theta_p_eigenvalues,
        "fiber_limit": matrix_json(&lf.fiber_limit),
        "kernel_description": lf.kernel_description,
        "collapsing_subgroup": lf.collapsing_subgroup,
        "near_extinction": near,
        "collapse": collapse,
        "warnings": model.warnings(),
    });
    Ok(serde_json::to_string_pretty(&report).expect("report serializes") + "\n")
}

fn check_metric(cfg: &RunConfig, model: &CSpaceModel, check: &str) -> Result<InvariantMetric, CliError> {
    if !check.is_empty() {
        let text = std::fs::read_to_string(check).map_err(|e| CliError::Config(format!("--check {check}: {e}")))?;
        let m: MetricConfig = config::parse_json(&text, "--check")?;
        return m.metric(model, "--check");
    }
    match &cfg.metric {
        Some(m) => m.metric(model, "metric"),
        None => cfg.initial(model),
    }
}

fn statics(cfg: &RunConfig, lambda: Option<f64>, check: Option<&str>) -> Result<String, CliError> {
    let model = cfg.model()?;
    let report = match (lambda, check) {
        (Some(l), None) => {
            let st = static_metric(&model, l)?;
            let h = st.metric.h_fiber();
            json!({
                "lambda": st.lambda,
                "h": st.metric.h_base(),
                "H": (0..h.nrows()).map(|i| (0..h.ncols()).map(|j| h[(i, j)].re).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "H_imag": (0..h.nrows()).map(|i| (0..h.ncols()).map(|j| h[(i, j)].im).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "residual": st.residual,
            })
        }
        (None, Some(path)) => {
            let metric = check_metric(cfg, &model, path)?;
            let (residual, lambda_fit) = static_residual(&model, &metric)?;
            json!({ "lambda_fit": lambda_fit, "residual": residual })
        }
        (Some(_), Some(_)) => return Err(CliError::Config("--lambda and --check are mutually exclusive".into())),
        (None, None) => return Err(CliError::Config("static: pass --lambda or --check".into())),
    };
    Ok(serde_json::to_string_pretty(&report).expect("report serializes") + "\n")
}

fn normalize(
    cfg: &RunConfig,
    common: &Common,
    t_end: Option<f64>,
    steps: Option<usize>,
    v: Option<f64>,
    stride: usize,
) -> Result<String, CliError> {
    stride_ok(stride)?;
    let model = cfg.model()?;
    let init = cfg.initial(&model)?;
    let tol = tie_tol(cfg, common);
    let v = v.or(cfg.run.v).unwrap_or(1.0);
    let t_ext = extinction_time(init.h_base(), tol).t_ext;
    let times: Vec<f64> = match t_end.or(cfg.run.t_end) {
        Some(t_end) => {
            let steps = steps.or(cfg.run.steps).unwrap_or(1000);
            if steps == 0 {
                return Err(CliError::Config("--steps: must be at least 1".into()));
            }
            (0..=steps)
                .filter(|n| n % stride == 0 || *n == steps)
                .map(|n| if n == steps { t_end } else { t_end * n as f64 / steps as f64 })
                .collect()
        }
        None => std::iter::once(0.0).chain((1..=20).map(|n| t_ext * (1.0 - 0.5f64.powi(n)))).collect(),
    };

    let (s, k) = (model.s(), model.k());
    let mut header = vec!["t".to_string(), "xi".into(), "c".into()];
    header.extend(metric_header("c_", s, k));
    let mut rows = Vec::new();
    let mut xi_limit = f64::NAN;
    for &t in &times {
        let ns = normalized_state(&model, &init, t, v, tol)?;
        xi_limit = ns.xi_limit;
        let mut row = vec![t, ns.xi_of_t, ns.c_of_t];
        row.extend(metric_row(ns.normalized_metric.h_base(), ns.normalized_metric.h_fiber()));
        rows.push(row);
    }
    let st = static_metric(&model, 1.0 / xi_limit)?;
    let mut row = vec![t_ext, xi_limit, f64::INFINITY];
    row.extend(metric_row(st.metric.h_base(), st.metric.h_fiber()));
    rows.push(row);
    csv_string(&header, &rows)
}

fn report_json(rep: &ResidualReport) -> Value {
    let entries: serde_json::Map<String, Value> =
        rep.entries.iter().map(|e| (e.name.clone(), json!(e.value))).collect();
    json!({ "max": rep.max(), "passed": rep.all_below(VERIFY_TOL), "residuals": entries })
}

fn verify(cfg: &RunConfig) -> Result<String, CliError> {
    let model = cfg.model()?;
    let init = cfg.initial(&model)?;
    let mut passed = true;
    let mut roots = Vec::new();
    for (i, f) in model.factors().iter().enumerate() {
        let entry = match f.kind {
            FactorKind::Grassmannian { p, q } => match grassmannian_realization(p, q) {
                Ok(r) => {
                    let rep = verify_root_identities(&r);
                    passed &= rep.all_below(VERIFY_TOL);
                    json!({ "factor": i + 1, "type": f.kind.label(), "report": report_json(&rep) })
                }
                Err(e) => json!({ "factor": i + 1, "type": f.kind.label(), "skipped": e.to_string() }),
            },
            _ => json!({ "factor": i + 1, "type": f.kind.label(), "skipped": "no explicit realization for this type" }),
        };
        roots.push(entry);
    }
    let realization = match cfg.complex_structure() {
        Some(cs) if model.s() == 2 && model.k() == 1 => {
            let grass = |j: usize| match model.factors()[j].kind {
                FactorKind::Grassmannian { p, q } => Ok((p, q)),
                _ => Err(hcflow_core::Error::ShapeMismatch("Chern verification needs Grassmannian factors".into())),
            };
            grass(0).and_then(|a| grass(1).and_then(|b| CERealization::with_structure(a, b, cs)))
        }
        _ => CERealization::from_model(&model),
    };
    let chern = match realization {
        Ok(ce) => {
            let rep = verify_chern_tensors(&ce, &init)?;
            passed &= rep.all_below(VERIFY_TOL);
            report_json(&rep)
        }
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    let report = json!({
        "tolerance": VERIFY_TOL,
        "passed": passed,
        "root_identities": roots,
        "chern_tensors": chern,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if !passed {
        eprintln!("warning: some residuals exceed {VERIFY_TOL:e}");
    }
    Ok(text)
}

fn kind_name(kind: &FactorKind) -> String {
    match *kind {
        FactorKind::Grassmannian { p, q } => format!("grassmannian p={p} q={q}"),
        FactorKind::SpOverU { n } => format!("sp_over_u n={n}"),
        FactorKind::SoOverU { n } => format!("so_over_u n={n}"),
        FactorKind::EIII => "e3".into(),
        FactorKind::EVII => "e7".into(),
        FactorKind::Quadric { n } => format!("quadric n={n}"),
    }
}

fn catalog() -> String {
    let rows = catalog_table();
    let mut out = format!("{:<26} {:<22} {:>5}  {:<10} {}\n", "kind", "space", "dim_C", "admissible", "note");
    for e in rows {
        out += &format!(
            "{:<26} {:<22} {:>5}  {:<10} {}\n",
            kind_name(&e.kind),
            e.label,
            e.dim_n,
            if e.admissible { "yes" } else { "no" },
            e.reason
        );
    }
    out
}
