//! Config-driven front end: `verify` runs the operator-identity battery on a
//! configured model, `scan` sweeps an energy grid (optionally a coupling
//! ladder) into CSV/JSON/plot files, `twobody` compares the momentum-grid
//! solver against the separable closed form.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use scatterkit::config::ScenarioConfig;
use scatterkit::diagnostics::{
    full_report, unitarity_defect, unitarity_defect_abs, unitarity_reduction_check,
    DiagnosticsReport, ScanResult, SkippedPoint,
};
use scatterkit::error::ScatterError;
use scatterkit::linop::{green_split, loglog_slope, op_norm, SpectralParameter};
use scatterkit::modelspace::{build_flat_model, build_yamaguchi_grid, energy_grid};
use scatterkit::momentum::{
    grid_bound_state, grid_ls_solve, yamaguchi_binding_analytic, yamaguchi_on_shell_t, Yamaguchi,
};
use scatterkit::multibody::{
    exact_t, faddeev_solve, heitler_exact_k, k_components_solve, linearized_t, osborn_t,
    pair_k_set, pair_t_set, relative_gap, script_t_components, t_from_k_full, unitary_impulse_t,
    ScatteringSystem,
};
use scatterkit::twobody::{pair_unitarity_defect, PairChannel};

#[derive(Parser)]
#[command(name = "scatterkit", version, about = "operator-identity verification and scan driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// worker threads (fallback: SCATTERKIT_THREADS, then available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// replace the model seed from the config
    #[arg(long, global = true)]
    seed_override: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// run the operator-identity battery at one energy
    Verify { config: PathBuf },
    /// sweep the energy grid (and optional coupling ladder) into CSV/JSON
    Scan { config: PathBuf },
    /// momentum-grid solver vs the separable closed form
    Twobody { config: PathBuf },
}

fn main() {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("SCATTERKIT_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = threads {
        // ignore failure: the global pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    std::process::exit(code);
}

fn exit_code(e: &ScatterError) -> i32 {
    match e {
        ScatterError::Config(_)
        | ScatterError::InvalidInput(_)
        | ScatterError::Domain(_)
        | ScatterError::ShapeMismatch(_) => 2,
        ScatterError::Io(_) => 4,
        _ => 3,
    }
}

fn run(cli: &Cli) -> Result<i32, ScatterError> {
    let (path, f): (&Path, fn(&Cli, ScenarioConfig) -> Result<i32, ScatterError>) =
        match &cli.command {
            Command::Verify { config } => (config, cmd_verify),
            Command::Scan { config } => (config, cmd_scan),
            Command::Twobody { config } => (config, cmd_twobody),
        };
    let text = fs::read_to_string(path)?;
    let mut cfg = ScenarioConfig::from_toml_str(&text)?;
    if let Some(seed) = cli.seed_override {
        cfg.model.seed = seed;
    }
    fs::create_dir_all(&cli.out)?;
    f(cli, cfg)
}

#[derive(Serialize)]
struct Check {
    name: String,
    value: f64,
    threshold: f64,
    pass: bool,
}

impl Check {
    fn new(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            pass: value.is_finite() && value <= threshold,
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    version: String,
    config: ScenarioConfig,
    e0: f64,
    eps: f64,
    checks: Vec<Check>,
    passed: bool,
}

fn build_system(cfg: &ScenarioConfig) -> Result<ScatteringSystem, ScatterError> {
    build_flat_model(&cfg.model.to_model_config()?)
}

fn cmd_verify(cli: &Cli, cfg: ScenarioConfig) -> Result<i32, ScatterError> {
    let sys = build_system(&cfg)?;
    let grid = energy_grid(&cfg.grid.to_grid_spec()?)?;
    let z = grid[0];
    let t = &cfg.thresholds;
    let (g1, _) = green_split(sys.h0(), &z);

    let exact = exact_t(&sys, &z)?;
    let exact_k = heitler_exact_k(&sys, &z)?;
    let t_comps = faddeev_solve(&sys, &z)?;
    let k_comps = k_components_solve(&sys, &z)?;
    let t_pairs = pair_t_set(&sys, &z)?;
    let k_pairs = pair_k_set(&sys, &z)?;
    let (direct, transformed) = script_t_components(&t_pairs, &k_pairs, &g1)?;
    let lin = linearized_t(&k_pairs, &g1)?;

    let mut checks = vec![
        Check::new(
            "component_sum_matches_exact_t",
            relative_gap(&t_comps.sum(), &exact),
            t.identity_tol,
        ),
        Check::new(
            "component_sum_matches_exact_k",
            relative_gap(&k_comps.sum(), &exact_k),
            t.identity_tol,
        ),
        Check::new(
            "k_resummation_matches_exact_t",
            relative_gap(&t_from_k_full(&exact_k, &g1)?, &exact),
            t.identity_tol,
        ),
        Check::new(
            "component_route_consistency",
            direct
                .iter()
                .map(|(c, m)| relative_gap(m, transformed.get(*c).expect("same channels")))
                .fold(0.0, f64::max),
            t.identity_tol,
        ),
        Check::new(
            "pair_unitarity",
            t_pairs
                .iter()
                .map(|(_, tm)| {
                    let n = op_norm(tm).unwrap_or(f64::INFINITY);
                    pair_unitarity_defect(tm, &g1) / (n * n).max(1.0)
                })
                .fold(0.0, f64::max),
            t.hermiticity_tol,
        ),
        Check::new(
            "exact_t_unitarity",
            unitarity_defect(&exact, &g1),
            t.unitarity_tol,
        ),
        Check::new(
            "linearized_t_unitarity",
            unitarity_defect(&lin, &g1),
            t.unitarity_tol,
        ),
        Check::new(
            "exact_k_hermiticity",
            relative_gap(&exact_k.adjoint(), &exact_k),
            t.hermiticity_tol,
        ),
    ];

    // fixed-centers coincidence applies to N=3 with channel (2,3) inert
    let ch23_inert = cfg.model.inert_channels.iter().any(|&c| c == (2, 3));
    if sys.n_particles() == 3 && ch23_inert {
        let uia = unitary_impulse_t(&t_pairs, &g1);
        let t12 = t_pairs.get(PairChannel::new(1, 2).expect("valid")).unwrap();
        let t13 = t_pairs.get(PairChannel::new(1, 3).expect("valid")).unwrap();
        let osb = osborn_t(t12, t13, &g1);
        checks.push(Check::new(
            "fixed_centers_coincidence",
            op_norm(&(&uia - &osb))?,
            t.coincidence_tol,
        ));
    }

    let passed = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg,
        e0: z.e0(),
        eps: z.eps(),
        checks,
        passed,
    };
    write_json(&cli.out.join("verify_report.json"), &report)?;
    for c in &report.checks {
        println!(
            "{} {}: {:.3e} (tol {:.1e})",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
    Ok(if passed { 0 } else { 1 })
}

/// CSV column order; stable interface, documented in the README.
const CSV_COLUMNS: &[(&str, fn(&DiagnosticsReport) -> f64)] = &[
    ("e0", |r| r.e0),
    ("eps", |r| r.eps),
    ("e_b_min", |r| r.e_b_min),
    ("norm_TaG0", |r| r.smallness.max_t_g0),
    ("norm_TaG1", |r| r.smallness.max_t_g1),
    ("norm_KaG2", |r| r.smallness.max_k_g2),
    ("second_order", |r| r.smallness.second_order),
    ("commutator", |r| r.smallness.commutator),
    ("product_residual", |r| r.smallness.product_residual),
    ("kernel_radius", |r| r.smallness.kernel_radius),
    ("defect_exact", |r| r.defect_exact),
    ("defect_impulse", |r| r.defect_impulse),
    ("defect_linearized", |r| r.defect_linearized),
    ("defect_uia", |r| r.defect_unitary_impulse),
    ("defect_impulse_abs", |r| r.defect_impulse_abs),
    ("defect_uia_abs", |r| r.defect_unitary_impulse_abs),
    ("reduction_gap", |r| r.reduction_gap),
    ("err_impulse", |r| r.err_impulse),
    ("err_linearized", |r| r.err_linearized),
    ("err_uia", |r| r.err_unitary_impulse),
];

/// quantities that get their own two-column plot file
const PLOT_COLUMNS: &[&str] = &[
    "norm_TaG0",
    "norm_TaG1",
    "norm_KaG2",
    "err_impulse",
    "err_uia",
    "defect_uia",
];

/// 12 significant digits, fixed format, so identical runs are byte-identical
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Serialize)]
struct CouplingRow {
    scale: f64,
    defect_impulse_abs: f64,
    defect_uia_abs: f64,
    reduction_gap: f64,
    reduction_side: f64,
}

#[derive(Serialize)]
struct CouplingFit {
    impulse_defect_slope: f64,
    uia_defect_slope: f64,
    reduction_gap_slope: f64,
    reduction_side_slope: f64,
}

#[derive(Serialize)]
struct ScanMetadata {
    version: String,
    config: ScenarioConfig,
    wallclock_seconds: f64,
    total_points: usize,
    skipped: Vec<SkippedPoint>,
    coupling_fit: Option<CouplingFit>,
}

/// Parallel counterpart of the library's serial scan: rows are computed on
/// the worker pool and reassembled in grid order; skip semantics match.
fn parallel_scan(
    sys: &ScatteringSystem,
    grid: &[SpectralParameter],
) -> Result<ScanResult, ScatterError> {
    use rayon::prelude::*;
    let results: Vec<Result<DiagnosticsReport, ScatterError>> =
        grid.par_iter().map(|z| full_report(sys, z)).collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (index, res) in results.into_iter().enumerate() {
        match res {
            Ok(row) => rows.push(row),
            Err(
                e @ (ScatterError::PoleProximity { .. }
                | ScatterError::NearSingular { .. }
                | ScatterError::Precondition(_)
                | ScatterError::DegenerateInput { .. }),
            ) => skipped.push(SkippedPoint {
                index,
                e0: grid[index].e0(),
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if skipped.len() * 2 > grid.len() {
        return Err(ScatterError::ScanDegenerate {
            skipped: skipped.len(),
            total: grid.len(),
        });
    }
    rows.sort_by(|a, b| a.e0.partial_cmp(&b.e0).expect("finite energies"));
    Ok(ScanResult {
        rows,
        skipped,
        total_points: grid.len(),
    })
}

fn cmd_scan(cli: &Cli, cfg: ScenarioConfig) -> Result<i32, ScatterError> {
    let start = Instant::now();
    let sys = build_system(&cfg)?;
    let grid = energy_grid(&cfg.grid.to_grid_spec()?)?;
    let scan = parallel_scan(&sys, &grid)?;

    if cfg.output.write_csv {
        let mut csv = String::new();
        csv.push_str(
            &CSV_COLUMNS
                .iter()
                .map(|(n, _)| *n)
                .collect::<Vec<_>>()
                .join(","),
        );
        csv.push('\n');
        for row in &scan.rows {
            let line = CSV_COLUMNS
                .iter()
                .map(|(_, f)| sig12(f(row)))
                .collect::<Vec<_>>()
                .join(",");
            csv.push_str(&line);
            csv.push('\n');
        }
        fs::write(cli.out.join("scan.csv"), csv)?;
    }

    if cfg.output.write_plots {
        for name in PLOT_COLUMNS {
            let (_, f) = CSV_COLUMNS
                .iter()
                .find(|(n, _)| n == name)
                .expect("plot column exists");
            let mut text = String::new();
            for row in &scan.rows {
                text.push_str(&format!("{} {}\n", sig12(row.e0), sig12(f(row))));
            }
            fs::write(cli.out.join(format!("plot_{name}.dat")), text)?;
        }
    }

    // coupling ladder at the central grid energy
    let coupling_fit = if cfg.scan.coupling.is_empty() {
        None
    } else {
        let z = grid[grid.len() / 2];
        let (g1, _) = green_split(sys.h0(), &z);
        let mut rows = Vec::new();
        for &s in &cfg.scan.coupling {
            let scaled = sys.scaled(s);
            let t_pairs = pair_t_set(&scaled, &z)?;
            let imp = scatterkit::multibody::impulse_t(&t_pairs);
            let uia = unitary_impulse_t(&t_pairs, &g1);
            let (lhs, _, gap) = unitarity_reduction_check(&t_pairs, &g1)?;
            rows.push(CouplingRow {
                scale: s,
                defect_impulse_abs: unitarity_defect_abs(&imp, &g1),
                defect_uia_abs: unitarity_defect_abs(&uia, &g1),
                reduction_gap: gap,
                reduction_side: op_norm(&lhs)?,
            });
        }
        if cfg.output.write_csv {
            let mut csv = String::from(
                "scale,defect_impulse_abs,defect_uia_abs,reduction_gap,reduction_side\n",
            );
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    sig12(r.scale),
                    sig12(r.defect_impulse_abs),
                    sig12(r.defect_uia_abs),
                    sig12(r.reduction_gap),
                    sig12(r.reduction_side)
                ));
            }
            fs::write(cli.out.join("coupling_scan.csv"), csv)?;
        }
        let xs: Vec<f64> = rows.iter().map(|r| r.scale).collect();
        let col = |f: fn(&CouplingRow) -> f64| -> f64 {
            let ys: Vec<f64> = rows.iter().map(f).collect();
            loglog_slope(&xs, &ys)
        };
        (rows.len() >= 2).then(|| CouplingFit {
            impulse_defect_slope: col(|r| r.defect_impulse_abs),
            uia_defect_slope: col(|r| r.defect_uia_abs),
            reduction_gap_slope: col(|r| r.reduction_gap),
            reduction_side_slope: col(|r| r.reduction_side),
        })
    };

    if cfg.output.write_json {
        let meta = ScanMetadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            wallclock_seconds: start.elapsed().as_secs_f64(),
            total_points: scan.total_points,
            skipped: scan.skipped.clone(),
            coupling_fit,
        };
        write_json(&cli.out.join("scan_meta.json"), &meta)?;
        write_json(&cli.out.join("scan_rows.json"), &scan.rows)?;
    }
    println!(
        "scan complete: {} rows, {} skipped",
        scan.rows.len(),
        scan.skipped.len()
    );
    Ok(0)
}

#[derive(Serialize)]
struct ConvergenceStep {
    nodes: usize,
    t_on_re: f64,
    t_on_im: f64,
    step_change: f64,
}

#[derive(Serialize)]
struct TwoBodyReport {
    version: String,
    config: ScenarioConfig,
    t_on_grid_re: f64,
    t_on_grid_im: f64,
    t_on_analytic_re: f64,
    t_on_analytic_im: f64,
    relative_gap: f64,
    convergence: Vec<ConvergenceStep>,
    convergence_ratio: f64,
    binding_grid: Option<f64>,
    binding_analytic: Option<f64>,
    binding_gap: Option<f64>,
    checks: Vec<Check>,
    passed: bool,
}

fn cmd_twobody(cli: &Cli, cfg: ScenarioConfig) -> Result<i32, ScatterError> {
    let tb = cfg.twobody.clone().ok_or_else(|| {
        ScatterError::Config("twobody command requires a [twobody] section".into())
    })?;
    let yam = Yamaguchi::new(tb.beta, tb.lambda)?;
    let k = tb.on_shell_momentum;

    let solve = |nodes: usize, cutoff: f64| -> Result<Complex64, ScatterError> {
        let (_, grid) = build_yamaguchi_grid(tb.beta, tb.lambda, nodes, cutoff, k)?;
        Ok(grid_ls_solve(&yam, &grid)?.1)
    };

    let t_on = solve(tb.nodes, tb.cutoff)?;
    let analytic = yamaguchi_on_shell_t(&yam, k);
    let gap = if analytic.norm() == 0.0 {
        t_on.norm()
    } else {
        (t_on - analytic).norm() / analytic.norm()
    };

    let mut convergence = Vec::new();
    let mut prev: Option<Complex64> = None;
    for &n in &tb.convergence_nodes {
        let t = solve(n, tb.cutoff)?;
        convergence.push(ConvergenceStep {
            nodes: n,
            t_on_re: t.re,
            t_on_im: t.im,
            step_change: prev.map_or(0.0, |p| (t - p).norm()),
        });
        prev = Some(t);
    }
    let steps: Vec<f64> = convergence
        .iter()
        .skip(1)
        .map(|c| c.step_change)
        .collect();
    let convergence_ratio = match steps.as_slice() {
        [.., a, b] if *a > 0.0 => b / a,
        _ => 0.0,
    };

    let binding_analytic = yamaguchi_binding_analytic(&yam);
    let binding_grid = {
        let (_, grid) = build_yamaguchi_grid(tb.beta, tb.lambda, tb.binding_nodes, tb.binding_cutoff, k)?;
        grid_bound_state(&yam, &grid)?
    };
    let binding_gap = match (binding_grid, binding_analytic) {
        (Some(g), Some(a)) => Some((g - a).abs()),
        (None, None) => None,
        // one search binds and the other does not: report the discrepancy
        (g, a) => Some(g.or(a).expect("one side present")),
    };

    let checks = vec![
        Check::new("on_shell_vs_analytic", gap, 1e-6),
        Check::new("node_doubling_ratio", convergence_ratio, 1.0),
        Check::new("binding_vs_analytic", binding_gap.unwrap_or(0.0), 1e-8),
    ];
    let passed = checks.iter().all(|c| c.pass);
    let report = TwoBodyReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg,
        t_on_grid_re: t_on.re,
        t_on_grid_im: t_on.im,
        t_on_analytic_re: analytic.re,
        t_on_analytic_im: analytic.im,
        relative_gap: gap,
        convergence,
        convergence_ratio,
        binding_grid,
        binding_analytic,
        binding_gap,
        checks,
        passed,
    };
    write_json(&cli.out.join("twobody_report.json"), &report)?;
    for c in &report.checks {
        println!(
            "{} {}: {:.3e} (tol {:.1e})",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
    Ok(if passed { 0 } else { 1 })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ScatterError> {
    let file = fs::File::create(path)?;
    serde_json::to_writer_pretty(file, value)
        .map_err(|e| ScatterError::Config(format!("serialization failed: {e}")))?;
    Ok(())
}
