//! The canned experiment commands behind the CLI: sampling, single solves,
//! the five-panel interpolation figure, and the three sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::geometry::{
    build_index, epsilon_schedule, sample_cloud, DensityModel, Domain, DomainKind, LabelSet,
    PointCloud,
};
use crate::kernels::{k_of_p, moments, p_of_k, Kernel, KernelMoments};
use crate::operators::{build_graph, build_stencil, Field};
use crate::oracles::{
    consistency_error, continuum_1d, holder_ratio, interior_probes, spike_index,
    AnalyticFunction,
};
use crate::solvers::{
    solve_game, solve_graph_inf, solve_graph_p, solve_hypergraph, SolveError, SolveReport,
    SolverConfig,
};

use super::config::{ExperimentConfig, ResolvedConfig, Scheme};
use super::io::{
    g17, write_cloud_csv, write_labels_csv, write_report_json, write_solution_csv, write_text,
    RunReport,
};
use super::{svg, CliError};

/// Default label layout for the one-dimensional experiments.
const FIGURE1_POSITIONS: [f64; 6] = [0.08, 0.25, 0.42, 0.58, 0.75, 0.92];
const FIGURE1_VALUES: [f64; 6] = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
const SWEEP_POSITIONS: [f64; 2] = [0.25, 0.75];
const SWEEP_VALUES: [f64; 2] = [0.0, 1.0];
const SWEEP_LADDER: [usize; 5] = [250, 500, 1000, 2000, 4000];

/// Desk-scale calibration of the stencil-radius schedule used by the 1D
/// sweeps; overridable via `epsilon.amplitude` / `epsilon.exponent`.
const SWEEP_AMPLITUDE: f64 = 0.06;
const SWEEP_EXPONENT: f64 = 0.4;
/// The interpolation figure wants the wide-stencil regime where the graph
/// Laplacian degenerates (n eps^2 >> 1), so its default radius is larger.
const FIGURE1_AMPLITUDE: f64 = 0.25;

fn map_solve_err(e: SolveError) -> CliError {
    match e {
        SolveError::HypergraphNotConnected => {
            CliError::Connectivity("hypergraph not connected; increase epsilon".into())
        }
        SolveError::GraphNotConnected => {
            CliError::Connectivity("graph not connected; increase epsilon".into())
        }
        other => CliError::Config(other.to_string()),
    }
}

fn density_from_config(
    cfg: &ExperimentConfig,
    domain: &Domain,
    resolved: &mut ResolvedConfig,
) -> Result<DensityModel, CliError> {
    match cfg.get("density") {
        None | Some("uniform") => {
            resolved.set("density", "uniform");
            Ok(DensityModel::uniform(domain))
        }
        Some("ramp") => {
            if domain.dim != 1 || domain.kind != DomainKind::UnitBox {
                return Err(CliError::Config(
                    "density=ramp is defined on the 1D unit box".into(),
                ));
            }
            resolved.set("density", "ramp");
            Ok(DensityModel::ramp_1d())
        }
        Some(v) => Err(CliError::Config(format!(
            "key `density`: expected uniform|ramp, got `{v}`"
        ))),
    }
}

fn resolve_cloud(
    cfg: &ExperimentConfig,
    base: &Path,
    resolved: &mut ResolvedConfig,
) -> Result<(PointCloud, Domain), CliError> {
    let d = cfg.usize("d", 1)?;
    let domain = cfg.domain(d)?;
    resolved.set("d", d);
    resolved.set(
        "domain",
        if domain.kind == DomainKind::UnitBox { "box" } else { "ball" },
    );
    match cfg.get("cloud") {
        None | Some("generate") => {
            let n = cfg
                .usize_opt("n")?
                .ok_or_else(|| CliError::Config("cloud=generate requires `n`".into()))?;
            let seed = cfg.u64("seed", 0)?;
            let density = density_from_config(cfg, &domain, resolved)?;
            let cloud = sample_cloud(n, &domain, &density, seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            resolved.set("cloud", "generate");
            resolved.set("n", n);
            resolved.set("seed", seed);
            Ok((cloud, domain))
        }
        Some(rel) => {
            let path = base.join(rel);
            let cloud = super::io::read_cloud_csv(&path)?;
            if cloud.dim() != d {
                return Err(CliError::Config(format!(
                    "cloud file has dimension {}, config says d={d}",
                    cloud.dim()
                )));
            }
            let canonical = path.canonicalize().unwrap_or(path);
            resolved.set("cloud", canonical.display());
            resolved.set("n", cloud.n());
            resolved.set("seed", cfg.u64("seed", 0)?);
            Ok((cloud, domain))
        }
    }
}

/// Nearest node to a 1D position; ties go to the lower index.
fn nearest_node_1d(cloud: &PointCloud, pos: f64) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for i in 0..cloud.n() {
        let dist = (cloud.point(i)[0] - pos).abs();
        if dist < best_dist {
            best_dist = dist;
            best = i;
        }
    }
    best
}

fn labels_from_positions(
    cloud: &PointCloud,
    positions: &[f64],
    values: &[f64],
) -> Result<LabelSet, CliError> {
    if positions.len() != values.len() {
        return Err(CliError::Config(
            "labels.positions and labels.values must have equal length".into(),
        ));
    }
    if cloud.dim() != 1 {
        return Err(CliError::Config(
            "labels.positions only supports d=1; provide a labels file instead".into(),
        ));
    }
    let mut entries = Vec::with_capacity(positions.len());
    for (&pos, &val) in positions.iter().zip(values) {
        entries.push((nearest_node_1d(cloud, pos), val));
    }
    entries.sort_by_key(|e| e.0);
    if entries.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(CliError::Config(
            "two label positions map to the same node; refine the cloud".into(),
        ));
    }
    LabelSet::new(entries, cloud.n()).map_err(|e| CliError::Config(e.to_string()))
}

fn resolve_labels(
    cfg: &ExperimentConfig,
    base: &Path,
    cloud: &PointCloud,
    default_positions: &[f64],
    default_values: &[f64],
    resolved: &mut ResolvedConfig,
) -> Result<LabelSet, CliError> {
    if let Some(rel) = cfg.get("labels") {
        let path = base.join(rel);
        let labels = super::io::read_labels_csv(&path, cloud.n())?;
        let canonical = path.canonicalize().unwrap_or(path);
        resolved.set("labels", canonical.display());
        return Ok(labels);
    }
    let positions = cfg.f64_list("labels.positions", default_positions)?;
    let values = cfg.f64_list("labels.values", default_values)?;
    if positions.is_empty() {
        return Err(CliError::Config(
            "no labels: set `labels=<path>` or `labels.positions`/`labels.values`".into(),
        ));
    }
    let join = |xs: &[f64]| xs.iter().map(|x| g17(*x)).collect::<Vec<_>>().join(",");
    resolved.set("labels.positions", join(&positions));
    resolved.set("labels.values", join(&values));
    labels_from_positions(cloud, &positions, &values)
}

fn resolve_epsilon(
    cfg: &ExperimentConfig,
    n: usize,
    d: usize,
    domain: &Domain,
    resolved: &mut ResolvedConfig,
) -> Result<f64, CliError> {
    if let Some(eps) = cfg.f64_opt("epsilon")? {
        if !(eps > 0.0) {
            return Err(CliError::Config(format!("epsilon must be positive, got {eps}")));
        }
        // Echo schedule keys if present so a resolved config re-resolves to
        // itself.
        if let Some(a) = cfg.f64_opt("epsilon.amplitude")? {
            resolved.set_f64("epsilon.amplitude", a);
        }
        if let Some(e) = cfg.f64_opt("epsilon.exponent")? {
            resolved.set_f64("epsilon.exponent", e);
        }
        resolved.set_f64("epsilon", eps);
        return Ok(eps);
    }
    let amplitude = cfg.f64("epsilon.amplitude", 1.5)?;
    let exponent = cfg.f64("epsilon.exponent", 0.4)?;
    let eps = epsilon_schedule(n, d, amplitude, exponent, domain)
        .map_err(|e| CliError::Config(e.to_string()))?;
    resolved.set_f64("epsilon.amplitude", amplitude);
    resolved.set_f64("epsilon.exponent", exponent);
    resolved.set_f64("epsilon", eps);
    Ok(eps)
}

fn record_solver(cfg: &SolverConfig, resolved: &mut ResolvedConfig) {
    resolved.set_f64("tol", cfg.tol);
    resolved.set("max_iter", cfg.max_iter);
    resolved.set(
        "sweep",
        match cfg.sweep {
            crate::solvers::Sweep::Jacobi => "jacobi",
            crate::solvers::Sweep::GaussSeidel => "gauss_seidel",
        },
    );
    resolved.set_f64("damping", cfg.damping);
}

fn record_kernel(cfg: &ExperimentConfig, resolved: &mut ResolvedConfig) {
    match cfg.get("kernel") {
        None | Some("constant") => resolved.set("kernel", "constant"),
        Some(other) => {
            resolved.set("kernel", other);
            if other == "gaussian" {
                if let Ok(sigma) = cfg.f64("kernel.sigma", 1.0) {
                    resolved.set_f64("kernel.sigma", sigma);
                }
            }
            if other == "tabulated" {
                if let Some(t) = cfg.get("kernel.table") {
                    resolved.set("kernel.table", t);
                }
            }
        }
    }
}

pub fn cmd_sample(cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut resolved = ResolvedConfig::default();
    if cfg.get("cloud").is_some() && cfg.get("cloud") != Some("generate") {
        return Err(CliError::Config("sample always generates; drop the `cloud` key".into()));
    }
    let (cloud, _) = resolve_cloud(cfg, base, &mut resolved)?;
    resolved.set("out", out.display());
    write_cloud_csv(&out.join("cloud.csv"), &cloud)?;
    resolved.write(out)?;
    Ok(())
}

/// Resolves `(p, k)` for the hypergraph scheme: an explicit `k` wins and
/// determines `p` through the kernel moments; otherwise `p` determines `k`;
/// the default is `k = 1`.
fn resolve_p_k(
    cfg: &ExperimentConfig,
    m: &KernelMoments,
) -> Result<(f64, f64), CliError> {
    match (cfg.f64_opt("k")?, cfg.f64_opt("p")?) {
        (Some(k), None) => {
            if k < 0.0 {
                return Err(CliError::Config(format!("k must be nonnegative, got {k}")));
            }
            Ok((p_of_k(k, m), k))
        }
        (None, Some(p)) => {
            let k = k_of_p(p, m).map_err(|e| CliError::Config(e.to_string()))?;
            Ok((p, k))
        }
        (Some(k), Some(p)) => {
            let want = p_of_k(k, m);
            if (want - p).abs() > 1e-9 * p.abs().max(1.0) {
                return Err(CliError::Config(format!(
                    "inconsistent p={p} and k={k}: k implies p={want}"
                )));
            }
            Ok((p, k))
        }
        (None, None) => Ok((p_of_k(1.0, m), 1.0)),
    }
}

pub fn cmd_solve(cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let scheme = cfg.scheme()?;
    let mut resolved = ResolvedConfig::default();
    resolved.set("scheme", scheme.name());
    let (cloud, domain) = resolve_cloud(cfg, base, &mut resolved)?;
    let labels = resolve_labels(cfg, base, &cloud, &[], &[], &mut resolved)?;
    let kernel = cfg.kernel(base)?;
    record_kernel(cfg, &mut resolved);
    let solver = cfg.solver_config()?;
    record_solver(&solver, &mut resolved);
    let n = cloud.n();
    let d = cloud.dim();
    let eps = resolve_epsilon(cfg, n, d, &domain, &mut resolved)?;
    let index = build_index(&cloud, eps).map_err(|e| CliError::Config(e.to_string()))?;

    let (field, report, p_out, k_out): (Field, SolveReport, Option<f64>, Option<f64>);
    match scheme {
        Scheme::Hyper => {
            let m = moments(&kernel, d).map_err(|e| CliError::Config(e.to_string()))?;
            let (p, k) = resolve_p_k(cfg, &m)?;
            resolved.set_f64("p", p);
            resolved.set_f64("k", k);
            let st = build_stencil(&cloud, &index, eps, k);
            let (u, r) = solve_hypergraph(&st, &labels, &kernel, &cloud, &solver)
                .map_err(map_solve_err)?;
            (field, report, p_out, k_out) = (u, r, Some(p), Some(k));
        }
        Scheme::Graph2 => {
            let g = build_graph(&cloud, &index, eps, &kernel);
            resolved.set_f64("p", 2.0);
            let (u, r) = solve_graph_p(&g, &labels, 2.0, &solver).map_err(map_solve_err)?;
            (field, report, p_out, k_out) = (u, r, Some(2.0), None);
        }
        Scheme::GraphP => {
            let p = cfg
                .f64_opt("p")?
                .ok_or_else(|| CliError::Config("scheme=graphp requires `p`".into()))?;
            resolved.set_f64("p", p);
            let g = build_graph(&cloud, &index, eps, &kernel);
            let (u, r) = solve_graph_p(&g, &labels, p, &solver).map_err(map_solve_err)?;
            (field, report, p_out, k_out) = (u, r, Some(p), None);
        }
        Scheme::GraphInf => {
            let g = build_graph(&cloud, &index, eps, &kernel);
            let (u, r) = solve_graph_inf(&g, &labels, &solver).map_err(map_solve_err)?;
            (field, report, p_out, k_out) = (u, r, None, None);
        }
        Scheme::Game => {
            let p = cfg
                .f64_opt("p")?
                .ok_or_else(|| CliError::Config("scheme=game requires `p`".into()))?;
            let lambda = cfg.f64("lambda", 1.0)?;
            resolved.set_f64("p", p);
            resolved.set_f64("lambda", lambda);
            let g = build_graph(&cloud, &index, eps, &kernel);
            let (u, r) = solve_game(&g, &labels, p, lambda, &solver).map_err(map_solve_err)?;
            (field, report, p_out, k_out) = (u, r, Some(p), None);
        }
    }

    resolved.set("out", out.display());
    write_solution_csv(&out.join("solution.csv"), field.as_slice())?;
    write_report_json(
        &out.join("report.json"),
        &RunReport {
            iterations: report.iterations,
            final_update: report.final_update,
            converged: report.converged,
            wall_seconds: report.wall_seconds,
            scheme: scheme.name().into(),
            p: p_out,
            epsilon: eps,
            k: k_out,
            n,
            seed: cloud.seed(),
        },
    )?;
    resolved.write(out)?;
    if !report.converged {
        return Err(CliError::NotConverged);
    }
    Ok(())
}

/// Median over nodes of the distance to the `knn`-th nearest neighbor.
fn median_knn_distance(cloud: &PointCloud, knn: usize) -> Result<f64, CliError> {
    let n = cloud.n();
    if knn == 0 || knn >= n {
        return Err(CliError::Config(format!("knn must lie in [1, n-1], got {knn}")));
    }
    let mut per_node = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n - 1);
    for i in 0..n {
        dists.clear();
        for j in 0..n {
            if j != i {
                dists.push(cloud.distance_sq(i, j));
            }
        }
        let (_, kth, _) = dists.select_nth_unstable_by(knn - 1, |a, b| a.partial_cmp(b).unwrap());
        per_node.push(kth.sqrt());
    }
    per_node.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(per_node[(n - 1) / 2])
}

pub fn cmd_figure1(cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let d = cfg.usize("d", 1)?;
    if d != 1 {
        return Err(CliError::Config(format!("figure1 requires d=1, got d={d}")));
    }
    let n = cfg.usize("n", 1280)?;
    let seed = cfg.u64("seed", 0)?;
    let lambda = cfg.f64("lambda", 1.0)?;
    let solver = cfg.solver_config()?;
    let domain = Domain::unit_box(1).map_err(|e| CliError::Config(e.to_string()))?;
    let density = DensityModel::uniform(&domain);
    let cloud =
        sample_cloud(n, &domain, &density, seed).map_err(|e| CliError::Config(e.to_string()))?;

    let mut resolved = ResolvedConfig::default();
    resolved.set("d", 1);
    resolved.set("n", n);
    resolved.set("seed", seed);
    resolved.set_f64("lambda", lambda);
    resolved.set("domain", "box");
    resolved.set("density", "uniform");
    resolved.set("kernel", "constant");
    record_solver(&solver, &mut resolved);
    let labels = resolve_labels(
        cfg,
        base,
        &cloud,
        &FIGURE1_POSITIONS,
        &FIGURE1_VALUES,
        &mut resolved,
    )?;

    // Radius selection. The default is the desk-scale calibrated schedule:
    // at n = 1280 a ball of the median nearest-72 radius sits exactly at the
    // n*eps^2 = 1 crossover where the graph Laplacian still half-interpolates
    // instead of degenerating, so the ball emulation of the nearest-knn
    // construction is opt-in via the `knn` key.
    let knn = cfg.usize_opt("knn")?;
    let eps = if let Some(eps) = cfg.f64_opt("epsilon")? {
        if !(eps > 0.0) {
            return Err(CliError::Config(format!("epsilon must be positive, got {eps}")));
        }
        if let Some(a) = cfg.f64_opt("epsilon.amplitude")? {
            resolved.set_f64("epsilon.amplitude", a);
        }
        if let Some(e) = cfg.f64_opt("epsilon.exponent")? {
            resolved.set_f64("epsilon.exponent", e);
        }
        eps
    } else if let Some(knn) = knn {
        resolved.set("knn", knn);
        median_knn_distance(&cloud, knn)?
    } else {
        let amplitude = cfg.f64("epsilon.amplitude", FIGURE1_AMPLITUDE)?;
        let exponent = cfg.f64("epsilon.exponent", SWEEP_EXPONENT)?;
        resolved.set_f64("epsilon.amplitude", amplitude);
        resolved.set_f64("epsilon.exponent", exponent);
        epsilon_schedule(n, 1, amplitude, exponent, &domain)
            .map_err(|e| CliError::Config(e.to_string()))?
    };
    resolved.set_f64("epsilon", eps);
    resolved.set("out", out.display());

    let kernel = Kernel::Constant;
    let index = build_index(&cloud, eps).map_err(|e| CliError::Config(e.to_string()))?;
    let graph = build_graph(&cloud, &index, eps, &kernel);
    let stencil = build_stencil(&cloud, &index, eps, 1.0);
    let m = moments(&kernel, 1).map_err(|e| CliError::Config(e.to_string()))?;
    let hyper_p = p_of_k(1.0, &m);

    let mut panels: Vec<(&str, Field, SolveReport, Option<f64>, Option<f64>)> = Vec::new();
    {
        let (u, r) = solve_graph_p(&graph, &labels, 2.0, &solver).map_err(map_solve_err)?;
        panels.push(("graph2", u, r, Some(2.0), None));
        let (u, r) = solve_graph_p(&graph, &labels, 4.0, &solver).map_err(map_solve_err)?;
        panels.push(("graph4", u, r, Some(4.0), None));
        let (u, r) = solve_graph_inf(&graph, &labels, &solver).map_err(map_solve_err)?;
        panels.push(("graphinf", u, r, None, None));
        let (u, r) =
            solve_game(&graph, &labels, 4.0, lambda, &solver).map_err(map_solve_err)?;
        panels.push(("game4", u, r, Some(4.0), None));
        let (u, r) = solve_hypergraph(&stencil, &labels, &kernel, &cloud, &solver)
            .map_err(map_solve_err)?;
        panels.push(("hyper", u, r, Some(hyper_p), Some(1.0)));
    }

    // Node order sorted by coordinate for the plot data.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cloud.point(a)[0].partial_cmp(&cloud.point(b)[0]).unwrap());
    let label_points: Vec<(f64, f64)> = labels
        .iter()
        .map(|&(i, y)| (cloud.point(i)[0], y))
        .collect();

    let mut plotdata = String::from("x");
    for (name, _, _, _, _) in &panels {
        let _ = write!(plotdata, ",{name}");
    }
    plotdata.push('\n');
    for &i in &order {
        let _ = write!(plotdata, "{}", g17(cloud.point(i)[0]));
        for (_, u, _, _, _) in &panels {
            let _ = write!(plotdata, ",{}", g17(u[i]));
        }
        plotdata.push('\n');
    }
    write_text(&out.join("plotdata.csv"), &plotdata)?;
    write_labels_csv(&out.join("labels.csv"), &labels)?;

    let mut spikes = Vec::new();
    let mut all_converged = true;
    for (name, u, report, p, k) in &panels {
        write_solution_csv(&out.join(format!("solution_{name}.csv")), u.as_slice())?;
        write_report_json(
            &out.join(format!("report_{name}.json")),
            &RunReport {
                iterations: report.iterations,
                final_update: report.final_update,
                converged: report.converged,
                wall_seconds: report.wall_seconds,
                scheme: (*name).into(),
                p: *p,
                epsilon: eps,
                k: *k,
                n,
                seed,
            },
        )?;
        let series: Vec<(f64, f64)> = order.iter().map(|&i| (cloud.point(i)[0], u[i])).collect();
        write_text(
            &out.join(format!("panel_{name}.svg")),
            &svg::line_plot(name, &series, &label_points),
        )?;
        let spike = spike_index(u, &labels).map_err(|e| CliError::Failed(e.to_string()))?;
        spikes.push((*name, spike));
        all_converged &= report.converged;
    }

    let mut meta = String::from("{\n");
    let _ = writeln!(meta, "  \"epsilon\": {},", g17(eps));
    let rule = match knn {
        Some(k) => format!(
            "median distance to the {k}-th nearest neighbor; ball stencils emulate the nearest-{k} construction"
        ),
        None => "calibrated radius schedule (epsilon.amplitude * delta_n^epsilon.exponent)".into(),
    };
    let _ = writeln!(meta, "  \"epsilon_rule\": \"{rule}\",");
    let _ = writeln!(
        meta,
        "  \"omitted_panel\": \"hypergraph energy-minimizer interpolation (needs a nonsmooth convex solver; out of scope)\","
    );
    let _ = writeln!(meta, "  \"lambda\": {},", g17(lambda));
    let _ = writeln!(meta, "  \"spike_index\": {{");
    for (idx, (name, s)) in spikes.iter().enumerate() {
        let comma = if idx + 1 < spikes.len() { "," } else { "" };
        let _ = writeln!(meta, "    \"{name}\": {}{comma}", g17(*s));
    }
    meta.push_str("  }\n}\n");
    write_text(&out.join("metadata.json"), &meta)?;
    resolved.write(out)?;
    if !all_converged {
        return Err(CliError::NotConverged);
    }
    Ok(())
}

struct SweepRow {
    n: usize,
    epsilon: f64,
    metric: &'static str,
    value: f64,
    wall_seconds: f64,
}

fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut text = String::from("n,epsilon,metric,value,wall_seconds\n");
    for r in rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            r.n,
            g17(r.epsilon),
            r.metric,
            g17(r.value),
            g17(r.wall_seconds)
        );
    }
    write_text(path, &text)
}

fn write_metric_report_csv(
    path: &Path,
    k: f64,
    p: f64,
    rows: &[SweepRow],
) -> Result<(), CliError> {
    let mut text = String::from("n,epsilon,k,p,metric,value\n");
    for r in rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            r.n,
            g17(r.epsilon),
            g17(k),
            g17(p),
            r.metric,
            g17(r.value)
        );
    }
    write_text(path, &text)
}

fn sweep_epsilon(
    cfg: &ExperimentConfig,
    n: usize,
    d: usize,
    domain: &Domain,
    resolved: &mut ResolvedConfig,
) -> Result<f64, CliError> {
    let amplitude = cfg.f64("epsilon.amplitude", SWEEP_AMPLITUDE)?;
    let exponent = cfg.f64("epsilon.exponent", SWEEP_EXPONENT)?;
    resolved.set_f64("epsilon.amplitude", amplitude);
    resolved.set_f64("epsilon.exponent", exponent);
    epsilon_schedule(n, d, amplitude, exponent, domain)
        .map_err(|e| CliError::Config(e.to_string()))
}

pub fn cmd_sweep_convergence(
    cfg: &ExperimentConfig,
    base: &Path,
    out: &Path,
) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let d = cfg.usize("d", 1)?;
    if d != 1 {
        return Err(CliError::Config("sweep-convergence requires d=1".into()));
    }
    let domain = Domain::unit_box(1).map_err(|e| CliError::Config(e.to_string()))?;
    let mut resolved = ResolvedConfig::default();
    resolved.set("d", 1);
    resolved.set("domain", "box");
    let density = density_from_config(cfg, &domain, &mut resolved)?;
    let kernel = cfg.kernel(base)?;
    record_kernel(cfg, &mut resolved);
    let m = moments(&kernel, 1).map_err(|e| CliError::Config(e.to_string()))?;
    let (p, k) = resolve_p_k(cfg, &m)?;
    resolved.set_f64("p", p);
    resolved.set_f64("k", k);
    let ladder = cfg.usize_list("n.list", &SWEEP_LADDER)?;
    resolved.set(
        "n.list",
        ladder.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
    );
    let seed = cfg.u64("seed", 0)?;
    resolved.set("seed", seed);
    let solver = cfg.solver_config()?;
    record_solver(&solver, &mut resolved);
    let positions = cfg.f64_list("labels.positions", &SWEEP_POSITIONS)?;
    let values = cfg.f64_list("labels.values", &SWEEP_VALUES)?;
    let join = |xs: &[f64]| xs.iter().map(|x| g17(*x)).collect::<Vec<_>>().join(",");
    resolved.set("labels.positions", join(&positions));
    resolved.set("labels.values", join(&values));
    resolved.set("out", out.display());

    let knots: Vec<(f64, f64)> =
        positions.iter().copied().zip(values.iter().copied()).collect();
    let oracle = continuum_1d(&knots, &density, p, 4000)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let mut rows = Vec::new();
    for &n in &ladder {
        let start = Instant::now();
        let rung_seed = seed.wrapping_add(n as u64);
        let cloud = sample_cloud(n, &domain, &density, rung_seed)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let labels = labels_from_positions(&cloud, &positions, &values)?;
        let eps = sweep_epsilon(cfg, n, 1, &domain, &mut resolved)?;
        let index = build_index(&cloud, eps).map_err(|e| CliError::Config(e.to_string()))?;
        let st = build_stencil(&cloud, &index, eps, k);
        let (u, report) =
            solve_hypergraph(&st, &labels, &kernel, &cloud, &solver).map_err(map_solve_err)?;
        if !report.converged {
            return Err(CliError::NotConverged);
        }
        let mut sup = 0.0f64;
        for i in 0..n {
            sup = sup.max((u[i] - oracle.eval(cloud.point(i)[0])).abs());
        }
        rows.push(SweepRow {
            n,
            epsilon: eps,
            metric: "sup_error",
            value: sup,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    write_sweep_csv(&out.join("sweep.csv"), &rows)?;
    write_metric_report_csv(&out.join("report.csv"), k, p, &rows)?;
    resolved.write(out)?;
    Ok(())
}

/// Built-in consistency test functions; all have nonvanishing gradients on
/// the probe region near the domain center. The radial profile is the
/// default: its gradient is collinear with the inner-ball extrema directions,
/// which keeps the lattice-alignment deficit of the discrete max/min balanced
/// between the two caps and the error ladder clean down to the finest radius.
fn phi_family(cfg: &ExperimentConfig, resolved: &mut ResolvedConfig) -> Result<AnalyticFunction, CliError> {
    let name = cfg.get("phi").unwrap_or("radial");
    resolved.set("phi", name);
    match name {
        "quadratic" => Ok(AnalyticFunction::quadratic_diagonal(
            vec![1.0, 2.5],
            vec![1.0, 0.5],
        )),
        "radial" => Ok(AnalyticFunction::quadratic_radial(vec![2.0, 0.0])),
        "linear" => Ok(AnalyticFunction::linear(vec![1.0, -0.5], 0.2)),
        other => Err(CliError::Config(format!(
            "key `phi`: expected quadratic|radial|linear, got `{other}`"
        ))),
    }
}

/// Regular lattice over the domain's bounding box, clipped to the domain.
fn grid_cloud(domain: &Domain, m: usize) -> Result<PointCloud, CliError> {
    let d = domain.dim;
    let (lo, hi) = domain.bounds();
    let mut coords = Vec::new();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0f64; d];
    loop {
        for t in 0..d {
            x[t] = lo[t] + (hi[t] - lo[t]) * idx[t] as f64 / (m - 1) as f64;
        }
        if domain.contains(&x) {
            coords.extend_from_slice(&x);
        }
        let mut t = 0;
        loop {
            if t == d {
                let cloud = PointCloud::from_coords(d, coords, 0)
                    .map_err(|e| CliError::Resolution(e.to_string()))?;
                return Ok(cloud);
            }
            idx[t] += 1;
            if idx[t] < m {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
    }
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.max(1e-300).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..xs.len() {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    num / den
}

pub fn cmd_sweep_consistency(
    cfg: &ExperimentConfig,
    base: &Path,
    out: &Path,
) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let d = cfg.usize("d", 2)?;
    if d != 2 {
        return Err(CliError::Config("sweep-consistency requires d=2".into()));
    }
    // The ball is the default domain here: it admits interior probes at the
    // coarsest ladder radius, where the unit box does not.
    let domain = match cfg.get("domain") {
        None | Some("ball") => Domain::unit_ball(2),
        Some("box") => Domain::unit_box(2),
        Some(v) => {
            return Err(CliError::Config(format!(
                "key `domain`: expected box|ball, got `{v}`"
            )))
        }
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    let mut resolved = ResolvedConfig::default();
    resolved.set("d", 2);
    resolved.set(
        "domain",
        if domain.kind == DomainKind::UnitBox { "box" } else { "ball" },
    );
    let kernel = cfg.kernel(base)?;
    record_kernel(cfg, &mut resolved);
    let m = moments(&kernel, 2).map_err(|e| CliError::Config(e.to_string()))?;
    let (p, k) = resolve_p_k(cfg, &m)?;
    resolved.set_f64("p", p);
    resolved.set_f64("k", k);
    let phi = phi_family(cfg, &mut resolved)?;
    let rho = DensityModel::uniform(&domain);
    resolved.set("density", "uniform");
    let eps_list = cfg.f64_list("eps.list", &[0.4, 0.2, 0.1, 0.05])?;
    resolved.set(
        "eps.list",
        eps_list.iter().map(|e| g17(*e)).collect::<Vec<_>>().join(","),
    );
    let grid_m = cfg.usize_opt("grid.m")?;
    if let Some(gm) = grid_m {
        resolved.set("grid.m", gm);
    }
    resolved.set("out", out.display());

    let extent = {
        let (lo, hi) = domain.bounds();
        hi[0] - lo[0]
    };
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for &eps in &eps_list {
        let start = Instant::now();
        if !(eps > 0.0) {
            return Err(CliError::Config(format!("epsilon must be positive, got {eps}")));
        }
        // Grid spacing at most eps^2/4 suppresses the transport error. The
        // automatic grid uses power-of-two subdivisions so lattice
        // coordinates and their differences are exact dyadic floats, which
        // keeps closed-ball membership mirror-symmetric even on sphere ties.
        let h_max = eps * eps / 4.0;
        let m_side = match grid_m {
            Some(gm) => gm,
            None => ((extent / h_max).ceil() as usize).next_power_of_two() + 1,
        };
        let spacing = extent / (m_side - 1) as f64;
        if spacing > h_max * (1.0 + 1e-12) {
            return Err(CliError::Resolution(format!(
                "grid too coarse for epsilon={eps}: spacing {spacing} exceeds eps^2/4 = {h_max}"
            )));
        }
        let cloud = grid_cloud(&domain, m_side)?;
        let index = build_index(&cloud, eps).map_err(|e| CliError::Config(e.to_string()))?;
        let probes = interior_probes(&cloud, &domain, eps, k, &phi, 40);
        if probes.is_empty() {
            return Err(CliError::Resolution(
                "epsilon too large for domain (no interior probe nodes)".into(),
            ));
        }
        let (max_err, _) = consistency_error(
            &cloud, &index, eps, k, &kernel, &phi, &rho, p, &m, &probes,
        )
        .map_err(|e| CliError::Resolution(e.to_string()))?;
        errors.push(max_err);
        rows.push(SweepRow {
            n: cloud.n(),
            epsilon: eps,
            metric: "consistency_max_error",
            value: max_err,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    let slope = log_log_slope(&eps_list, &errors);
    if let Some(last) = rows.last() {
        rows.push(SweepRow {
            n: last.n,
            epsilon: *eps_list.last().unwrap(),
            metric: "consistency_slope",
            value: slope,
            wall_seconds: 0.0,
        });
    }
    write_sweep_csv(&out.join("sweep.csv"), &rows)?;
    write_metric_report_csv(&out.join("report.csv"), k, p, &rows)?;
    resolved.write(out)?;
    Ok(())
}

pub fn cmd_sweep_holder(cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let d = cfg.usize("d", 1)?;
    let domain = cfg.domain(d)?;
    let mut resolved = ResolvedConfig::default();
    resolved.set("d", d);
    resolved.set(
        "domain",
        if domain.kind == DomainKind::UnitBox { "box" } else { "ball" },
    );
    let density = density_from_config(cfg, &domain, &mut resolved)?;
    let kernel = cfg.kernel(base)?;
    record_kernel(cfg, &mut resolved);
    let m = moments(&kernel, d).map_err(|e| CliError::Config(e.to_string()))?;
    let (p, k) = resolve_p_k(cfg, &m)?;
    if p <= d as f64 {
        return Err(CliError::Regime(format!(
            "Hoelder regime requires p > d (got p={p}, d={d})"
        )));
    }
    resolved.set_f64("p", p);
    resolved.set_f64("k", k);
    let alpha = match cfg.f64_opt("alpha")? {
        Some(a) => a,
        None => 0.5 * (p - d as f64) / (p - 1.0),
    };
    resolved.set_f64("alpha", alpha);
    let ladder = cfg.usize_list("n.list", &SWEEP_LADDER)?;
    resolved.set(
        "n.list",
        ladder.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
    );
    let seed = cfg.u64("seed", 0)?;
    resolved.set("seed", seed);
    let solver = cfg.solver_config()?;
    record_solver(&solver, &mut resolved);
    let positions = cfg.f64_list("labels.positions", &SWEEP_POSITIONS)?;
    let values = cfg.f64_list("labels.values", &SWEEP_VALUES)?;
    let join = |xs: &[f64]| xs.iter().map(|x| g17(*x)).collect::<Vec<_>>().join(",");
    resolved.set("labels.positions", join(&positions));
    resolved.set("labels.values", join(&values));
    resolved.set("out", out.display());

    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for &n in &ladder {
        let start = Instant::now();
        let rung_seed = seed.wrapping_add(n as u64);
        let cloud = sample_cloud(n, &domain, &density, rung_seed)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let labels = labels_from_positions(&cloud, &positions, &values)?;
        let eps = sweep_epsilon(cfg, n, d, &domain, &mut resolved)?;
        let index = build_index(&cloud, eps).map_err(|e| CliError::Config(e.to_string()))?;
        let st = build_stencil(&cloud, &index, eps, k);
        let (u, report) =
            solve_hypergraph(&st, &labels, &kernel, &cloud, &solver).map_err(map_solve_err)?;
        if !report.converged {
            return Err(CliError::NotConverged);
        }
        let (ratio, _) =
            holder_ratio(&cloud, &u, alpha, eps).map_err(|e| CliError::Config(e.to_string()))?;
        ratios.push(ratio);
        rows.push(SweepRow {
            n,
            epsilon: eps,
            metric: "holder_ratio",
            value: ratio,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    write_sweep_csv(&out.join("sweep.csv"), &rows)?;
    write_metric_report_csv(&out.join("report.csv"), k, p, &rows)?;
    resolved.write(out)?;

    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    // Degenerate all-zero ratios (constant labels) are trivially bounded.
    if hi > 1e-12 && hi / lo > 2.0 {
        return Err(CliError::Failed(format!(
            "Hoelder ratio varies by more than a factor 2 across the ladder ({lo} .. {hi})"
        )));
    }
    Ok(())
}
