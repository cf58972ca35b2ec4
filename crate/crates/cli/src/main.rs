//! `monopole-lab`: verification suites, flow solves and topology tables.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage or configuration error,
//! 3 runtime failure. Every command writes `manifest_<command>.json` into `--out`.

mod config;
mod manifest;
mod topology;

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};
use monopole_core::fields::random_config;
use monopole_core::functional::{self, FunctionalParams, SolveOptions};
use monopole_core::lattice::{flux_background, flux_matrix, TorusLattice};
use monopole_core::verify::{self, Suite, VerifyOptions};
use monopole_core::{par, snapshot};

use config::{Overrides, RunConfig};
use manifest::Recorder;

#[derive(Parser, Debug)]
#[command(name = "monopole-lab", version, about = "Lattice Seiberg-Witten monopole workbench")]
struct Cli {
    /// key=value configuration file with [sections]; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores, 1 = bit-exact reproducible).
    #[arg(long, global = true, env = "MONOPOLE_LAB_THREADS")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Validate the configuration and write the manifest without computing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a named invariant suite.
    Verify {
        /// clifford, lattice, weitzenbock, gradient, gauge, kahler or reduce3d.
        suite: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Minimize the functional by gradient flow from a seeded random start.
    Solve {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Dimension, index, basic-class and bound tables for a manifold.
    Topology {
        input: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

enum Failure {
    Checks,
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Checks => 1,
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> Option<String> {
        match self {
            Failure::Checks => None,
            Failure::Usage(m) | Failure::Runtime(m) => Some(m.clone()),
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

fn resolve(cli: &Cli, overrides: &Overrides) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &cli.config {
        cfg.apply_file(p)?;
    }
    cfg.apply_overrides(overrides);
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json<T: serde::Serialize>(rec: &mut Recorder, name: &str, value: &T) -> Result<(), Failure> {
    let p = rec.path(name);
    std::fs::write(&p, serde_json::to_string_pretty(value).map_err(runtime)?).map_err(runtime)?;
    rec.output(&p);
    Ok(())
}

fn cmd_verify(rec: &mut Recorder, suite: Suite) -> Result<(), Failure> {
    let c = &rec.config;
    let opts = VerifyOptions {
        size: c.size,
        spacing: c.spacing,
        flux: c.flux_upper(6),
        kappa: c.kappa,
        eta_amplitude: c.eta_amplitude,
        seed: c.seed,
        sizes: c.sizes.clone(),
        samples: c.samples,
    };
    if rec.dry_run {
        return Ok(());
    }
    let t = Instant::now();
    let report = par::with_threads(c.threads, || verify::run(suite, &opts)).map_err(|e| match e {
        monopole_core::Error::InvalidParameter(m) => Failure::Usage(m),
        other => runtime(other),
    })?;
    let seconds = t.elapsed().as_secs_f64();
    let csv_path = rec.path(&format!("verify_{suite}.csv"));
    let mut w = csv::Writer::from_path(&csv_path).map_err(runtime)?;
    w.write_record(["check", "value", "tolerance", "comparison", "passed"]).map_err(runtime)?;
    for ch in &report.checks {
        let cmp = match ch.comparison {
            verify::Comparison::AtMost => "at_most",
            verify::Comparison::AtLeast => "at_least",
        };
        w.write_record([ch.name.clone(), format!("{:e}", ch.value), format!("{:e}", ch.tolerance), cmp.into(), ch.passed.to_string()])
            .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    rec.output(&csv_path);
    #[derive(serde::Serialize)]
    struct Json<'a> {
        seconds: f64,
        #[serde(flatten)]
        report: &'a verify::SuiteReport,
    }
    write_json(rec, &format!("verify_{suite}.json"), &Json { seconds, report: &report })?;
    for ch in &report.checks {
        rec.check(&ch.name, ch.passed);
        println!("{} {} = {:e} (tolerance {:e})", if ch.passed { "PASS" } else { "FAIL" }, ch.name, ch.value, ch.tolerance);
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn cmd_solve(rec: &mut Recorder) -> Result<(), Failure> {
    let c = rec.config.clone();
    let lat = TorusLattice::cubic(4, c.size, c.spacing).map_err(|e| Failure::Usage(e.to_string()))?;
    let m = flux_matrix(4, &c.flux_upper(6)).map_err(|e| Failure::Usage(e.to_string()))?;
    let bg = flux_background(&lat, &m).map_err(|e| Failure::Usage(e.to_string()))?;
    let lat = Arc::new(lat);
    let mut params = FunctionalParams::weitzenbock(c.kappa);
    if c.eta_amplitude != 0.0 {
        params = params.with_eta(functional::constant_eta(&lat, c.eta_amplitude));
    }
    let opts = SolveOptions { max_iters: c.max_iters, tol: c.tol, gauge_fix_every: c.gauge_fix_every, ..Default::default() };
    if rec.dry_run {
        return Ok(());
    }
    let (out, report, err) = par::with_threads(c.threads, || {
        let start = random_config(lat.clone(), Arc::new(bg), c.seed, c.amplitude)?;
        functional::flow_minimize_partial(&start, &params, &opts)
    })
    .map_err(runtime)?;
    let trace = rec.path("trace.csv");
    functional::write_trace_csv(&report.trace, BufWriter::new(File::create(&trace).map_err(runtime)?)).map_err(runtime)?;
    rec.output(&trace);
    let base = rec.path("final");
    snapshot::save_config(&base, &out, Some(c.seed)).map_err(runtime)?;
    let (pa, pp) = snapshot::config_paths(&base);
    rec.output(&pa);
    rec.output(&pp);
    write_json(rec, "solve_report.json", &report)?;
    println!(
        "iterations {} functional {:e} |psi|_inf {:e} I+ {:e} converged {}",
        report.iterations, report.functional, report.psi_inf, report.i_plus, report.converged
    );
    if let Some(e) = err {
        return Err(runtime(e));
    }
    rec.check("converged", report.converged);
    rec.check("psi_bound", report.bounds.psi_bound_ok);
    rec.check("i_plus_bound", report.bounds.i_plus_bound_ok);
    if report.converged && report.bounds.psi_bound_ok && report.bounds.i_plus_bound_ok {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn cmd_topology(rec: &mut Recorder, input: &std::path::Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(input).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", input.display())))?;
    let parsed: topology::TopologyInput = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("schema violation: {e}")))?;
    parsed.manifold.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if rec.dry_run {
        return Ok(());
    }
    let report = topology::evaluate(&parsed, rec.config.bound).map_err(Failure::Usage)?;
    for p in topology::write_tables(&rec.config.out, &report).map_err(runtime)? {
        rec.output(&p);
    }
    write_json(rec, "topology.json", &report)?;
    for row in &report.dimensions {
        println!("class [{}] c1^2 {} dimension {} ({})", row.class, row.c1_sq, row.dimension, row.rule);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (label, overrides) = match &cli.command {
        Command::Verify { suite, overrides } => (format!("verify {suite}"), overrides),
        Command::Solve { overrides } => ("solve".to_string(), overrides),
        Command::Topology { overrides, .. } => ("topology".to_string(), overrides),
    };
    let cfg = match resolve(&cli, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        eprintln!("error: cannot create {}: {e}", cfg.out.display());
        return ExitCode::from(3);
    }
    let mut rec = Recorder::new(label, cfg, cli.dry_run);
    let resolved = rec.path("resolved.conf");
    let result = std::fs::write(&resolved, rec.config.to_text()).map_err(runtime).and_then(|_| {
        rec.output(&resolved);
        match &cli.command {
            Command::Verify { suite, .. } => match suite.parse::<Suite>() {
                Ok(s) => cmd_verify(&mut rec, s),
                Err(e) => Err(Failure::Usage(e.to_string())),
            },
            Command::Solve { .. } => cmd_solve(&mut rec),
            Command::Topology { input, .. } => cmd_topology(&mut rec, input),
        }
    });
    let (code, msg) = match &result {
        Ok(()) => (0, None),
        Err(f) => (f.code(), f.message()),
    };
    if let Some(m) = &msg {
        eprintln!("error: {m}");
    }
    match rec.finish(code, msg) {
        Ok(p) => eprintln!("manifest: {}", p.display()),
        Err(e) => {
            eprintln!("error: cannot write manifest: {e}");
            return ExitCode::from(3);
        }
    }
    ExitCode::from(code as u8)
}
