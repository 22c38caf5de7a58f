//! `intstab`: solvers, norms and the verification harness from the command line.
//!
//! Exit codes: 0 success, 1 verification failures, 2 configuration or input
//! error, 3 CFL violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use intstab_core::config::parse_seed;
use intstab_core::controls::Minimizer;
use intstab_core::field::write_csv;
use intstab_core::{
    claw_evolve, evolve, norm_int, norm_triple, ClawProblem, Error, GridField, Hamiltonian, HjbProblem, Report,
    RunConfig, Verifier,
};

#[derive(Parser, Debug)]
#[command(name = "intstab", version, about = "HJB and conservation-law solvers with stability checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (INI-style `key = value` under `[section]` headers).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for randomized suites; overrides `[run] seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<String>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Comma-separated suites; overrides `[run] suite`.
    #[arg(long, global = true, value_name = "NAME[,NAME...]")]
    suite: Option<String>,

    /// Also write SVG plots of traced records.
    #[arg(long, global = true)]
    plot: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Evolve the HJB problem and write snapshot CSVs.
    SolveHjb,
    /// Evolve the conservation law and write snapshot CSVs.
    SolveClaw,
    /// Print |H|_conv, |H|_diff and the drift hull as JSON.
    Seminorms,
    /// Print the int norm (and optionally the triple norm) of the initial data.
    NormInt,
    /// Run verification suites and write the report.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Cfl { .. } => 3,
                _ => 2,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &cli.seed {
        cfg.set("run", "seed", &parse_seed(s)?.to_string())?;
    }
    if let Some(s) = &cli.suite {
        cfg.set("run", "suite", s)?;
    }
    match cli.command {
        Command::SolveHjb => solve_hjb(&cfg, &out_dir(cli)),
        Command::SolveClaw => solve_claw(&cfg, &out_dir(cli)),
        Command::Seminorms => seminorms(&cfg, cli.out.as_deref()),
        Command::NormInt => norm(&cfg, cli.out.as_deref()),
        Command::Verify => verify(&cfg, &out_dir(cli), cli.plot),
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn write_snapshots(out: &Path, prefix: &str, cfg: &RunConfig, times: &[f64], fields: &[GridField]) -> Result<(), Error> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.ini"), cfg.to_ini())?;
    for (t, f) in times.iter().zip(fields) {
        let path = out.join(format!("{prefix}_t{t:.6}.csv"));
        write_csv(&path, f)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn solve_hjb(cfg: &RunConfig, out: &Path) -> Result<ExitCode, Error> {
    let init = cfg.initial()?;
    let ham = cfg.hamiltonian(init.dim())?;
    let (t, snaps) = cfg.times()?;
    let problem = HjbProblem::new(ham, init)?;
    let fields = evolve(&problem, t, &cfg.scheme()?, &snaps)?;
    write_snapshots(out, "hjb", cfg, &snaps, &fields)?;
    Ok(ExitCode::SUCCESS)
}

fn solve_claw(cfg: &RunConfig, out: &Path) -> Result<ExitCode, Error> {
    let problem = ClawProblem::new(cfg.flux()?, cfg.initial()?)?;
    let (t, snaps) = cfg.times()?;
    let fields = claw_evolve(&problem, t, &cfg.scheme()?, &snaps)?;
    write_snapshots(out, "claw", cfg, &snaps, &fields)?;
    Ok(ExitCode::SUCCESS)
}

fn emit(doc: serde_json::Value, out: Option<&Path>, name: &str) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(&doc).expect("json value serializes") + "\n";
    print!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn seminorms(cfg: &RunConfig, out: Option<&Path>) -> Result<ExitCode, Error> {
    let dim = cfg.dim()?;
    let ham = cfg.hamiltonian(dim)?;
    let (conv, diff) = ham.seminorms(dim)?;
    let mut doc = json!({ "conv": conv, "diff": diff, "config_hash": cfg.hash() });
    if let Hamiltonian::Controlled(op) = &ham {
        let c = intstab_core::seminorm_conv(op);
        let d = intstab_core::seminorm_diff(op)?;
        if let Minimizer::Drift(b) = c.minimizer {
            doc["conv_center"] = json!(&b[..dim]);
        }
        if let Minimizer::Diffusion(a) = d.minimizer {
            doc["diff_minimizer"] = json!(a);
        }
        doc["controls"] = json!(op.controls().len());
    }
    if let Some(hull) = ham.drift_hull(dim) {
        let v: Vec<&[f64]> = hull.vertices().iter().map(|p| &p[..dim]).collect();
        doc["hull_vertices"] = json!(v);
    }
    emit(doc, out, "seminorms.json")?;
    Ok(ExitCode::SUCCESS)
}

fn norm(cfg: &RunConfig, out: Option<&Path>) -> Result<ExitCode, Error> {
    let f = cfg.initial()?;
    let (radius, triple, tol_rel) = cfg.norm()?;
    let mut doc = json!({
        "int": norm_int(&f, radius).value,
        "radius": radius,
        "l1": f.l1_norm(),
        "linf": f.linf_norm(),
        "config_hash": cfg.hash(),
    });
    if triple {
        let tcfg = intstab_core::field::TripleNormConfig { tol_rel, window: radius, ..Default::default() };
        let v = norm_triple(&f, &tcfg)?;
        doc["triple"] = json!({ "value": v.value, "horizon": v.horizon, "argmax_time": v.argmax_time });
    }
    emit(doc, out, "norm.json")?;
    Ok(ExitCode::SUCCESS)
}

fn verify(cfg: &RunConfig, out: &Path, plot: bool) -> Result<ExitCode, Error> {
    let options = cfg.verify_options()?;
    let suites = cfg.suites()?;
    let verifier = Verifier::new(options)?;
    let mut results = Vec::with_capacity(suites.len());
    for &s in &suites {
        let recs = verifier.run_suite(s)?;
        let failed = recs.iter().filter(|r| !r.passed()).count();
        let secs: f64 = recs.iter().map(|r| r.runtime.as_secs_f64()).sum();
        eprintln!("{:<22} {:>5} records {:>4} failed {:>8.1} s", s.name(), recs.len(), failed, secs);
        for r in recs.iter().filter(|r| !r.passed()) {
            eprintln!("  FAIL {} lhs={:e} rhs={:e} tol={:e}", r.name, r.lhs, r.rhs, r.tolerance);
        }
        results.push((s, recs));
    }
    let report = Report::new(&cfg.hash(), options.seed, results);
    report.write(out, plot)?;
    let s = &report.summary;
    println!("verify: {} records, {} passed, {} failed; report at {}", s.total, s.passed, s.failed, out.join("report.json").display());
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
