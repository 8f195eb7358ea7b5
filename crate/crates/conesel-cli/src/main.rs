//! `conesel` command line: benchmark experiments, a constraint-file
//! checker, and the randomized self-test harness.

mod bench;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bench::BenchConfig;
use conesel::constraints::ConstraintSet;
use conesel::feasibility::{farkas_feasible, polar_components, simplicial_bounds};
use conesel::selection::{ica, init_config};
use conesel::sim::{sample_scenario, Scenario, Selector};

#[derive(Parser)]
#[command(
    name = "conesel",
    version,
    about = "Constraint feasibility analysis and online selection benchmark"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Varying zone counts over many sampled environments (long-form CSV
    /// plus one file per figure panel).
    Sweep(CommonArgs),
    /// Fixed zone count: summary table and per-step drop histograms.
    Fixed(CommonArgs),
    /// One episode: replayable scenario file plus a per-step trace.
    Once(OnceArgs),
    /// Feasibility report for a constraint file.
    Check { file: PathBuf },
    /// Randomized cross-check suites; exits nonzero on any failure.
    Selftest,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Zone counts: a single number, a comma list, or `lo:hi:step`.
    #[arg(long)]
    zones: Option<String>,
    /// Environments per zone count.
    #[arg(long)]
    envs: Option<usize>,
    /// Comma list of selectors: ica, lcs (uses --depth), lcsN, b1, b2.
    #[arg(long)]
    selectors: Option<String>,
    /// Search depth for a bare `lcs` selector.
    #[arg(long)]
    depth: Option<usize>,
    /// Base seed; environment i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step (seconds).
    #[arg(long)]
    dt: Option<f64>,
    /// Worker threads for environment dispatch.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run selectors only on infeasibility instead of every step.
    #[arg(long)]
    select_on_jump_only: bool,
    /// Write timing columns as zero for byte-stable output.
    #[arg(long)]
    no_timing: bool,
    /// Optional `key = value` defaults file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct OnceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Selector to run (default ica).
    #[arg(long)]
    selector: Option<String>,
    /// Replay an existing scenario file instead of sampling.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Sweep(args) => {
            resolve(&args, Experiment::Sweep).and_then(|cfg| bench::cmd_sweep(&cfg))
        }
        Cmd::Fixed(args) => {
            resolve(&args, Experiment::Fixed).and_then(|cfg| bench::cmd_fixed(&cfg))
        }
        Cmd::Once(args) => run_once(&args),
        Cmd::Check { file } => run_check(&file),
        Cmd::Selftest => return run_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Experiment {
    Sweep,
    Fixed,
    Once,
}

fn load_config_file(path: &PathBuf) -> Result<BTreeMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("reading config {}: {e}", path.display()))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected `key = value`", path.display(), lineno + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parse_zone_counts(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    let counts: Vec<usize> = if let Some((lo, rest)) = s.split_once(':') {
        let (hi, step) = rest
            .split_once(':')
            .ok_or_else(|| format!("bad zone range `{s}`; expected lo:hi:step"))?;
        let lo: usize = lo.trim().parse().map_err(|e| format!("bad zone range `{s}`: {e}"))?;
        let hi: usize = hi.trim().parse().map_err(|e| format!("bad zone range `{s}`: {e}"))?;
        let step: usize = step.trim().parse().map_err(|e| format!("bad zone range `{s}`: {e}"))?;
        if step == 0 {
            return Err("zone range step must be positive".into());
        }
        (lo..=hi).step_by(step).collect()
    } else {
        s.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|e| format!("bad zone count `{tok}`: {e}"))
            })
            .collect::<Result<_, _>>()?
    };
    if counts.is_empty() {
        return Err("zone count list is empty".into());
    }
    for &c in &counts {
        if c % 2 != 0 {
            return Err(format!(
                "zone count {c} is odd; counts must be even for the equal static/dynamic split"
            ));
        }
    }
    Ok(counts)
}

fn parse_selectors(s: &str, depth: usize) -> Result<Vec<Selector>, String> {
    let mut out = vec![];
    for tok in s.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        if tok.eq_ignore_ascii_case("lcs") {
            out.push(Selector::Lcs { depth });
        } else {
            out.push(tok.parse::<Selector>()?);
        }
    }
    if out.is_empty() {
        return Err("selector list is empty".into());
    }
    Ok(out)
}

fn file_usize(file: &BTreeMap<String, String>, key: &str) -> Result<Option<usize>, String> {
    file.get(key)
        .map(|v| v.parse::<usize>().map_err(|e| format!("config key `{key}`: {e}")))
        .transpose()
}

fn file_u64(file: &BTreeMap<String, String>, key: &str) -> Result<Option<u64>, String> {
    file.get(key)
        .map(|v| v.parse::<u64>().map_err(|e| format!("config key `{key}`: {e}")))
        .transpose()
}

fn resolve(args: &CommonArgs, exp: Experiment) -> Result<BenchConfig, String> {
    let file = match &args.config {
        Some(p) => load_config_file(p)?,
        None => BTreeMap::new(),
    };
    let bool_opt = |flag: bool, key: &str| -> Result<bool, String> {
        if flag {
            return Ok(true);
        }
        match file.get(key) {
            None => Ok(false),
            Some(v) => match v.as_str() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                other => Err(format!("config key `{key}`: bad boolean `{other}`")),
            },
        }
    };

    let depth = match args.depth {
        Some(d) => d,
        None => file_usize(&file, "depth")?.unwrap_or(5),
    };
    if depth == 0 {
        return Err("search depth must be at least 1".into());
    }

    let zones_default = match exp {
        Experiment::Sweep => "2:100:2",
        Experiment::Fixed => "100",
        Experiment::Once => "2",
    };
    let zones_spec = args
        .zones
        .clone()
        .or_else(|| file.get("zones").cloned())
        .unwrap_or_else(|| zones_default.to_string());
    let zone_counts = parse_zone_counts(&zones_spec)?;
    if exp != Experiment::Sweep && zone_counts.len() != 1 {
        return Err("this experiment takes a single zone count".into());
    }

    let selectors_default = match exp {
        Experiment::Fixed => "ica,lcs1,lcs5,lcs10,b1,b2",
        _ => "ica,lcs,b1,b2",
    };
    let selectors_spec = args
        .selectors
        .clone()
        .or_else(|| file.get("selectors").cloned())
        .unwrap_or_else(|| selectors_default.to_string());
    let selectors = parse_selectors(&selectors_spec, depth)?;

    let n_envs = match args.envs {
        Some(v) => v,
        None => file_usize(&file, "envs")?.unwrap_or(50),
    };
    if n_envs == 0 {
        return Err("need at least one environment".into());
    }
    let seed0 = match args.seed {
        Some(v) => v,
        None => file_u64(&file, "seed")?.unwrap_or(0),
    };
    let dt = match args.dt {
        Some(v) => v,
        None => match file.get("dt") {
            Some(v) => v.parse().map_err(|e| format!("config key `dt`: {e}"))?,
            None => conesel::sim::DEFAULT_DT,
        },
    };
    if !(dt > 0.0) {
        return Err("dt must be positive".into());
    }
    let jobs = match args.jobs {
        Some(v) => v,
        None => file_usize(&file, "jobs")?.unwrap_or(1),
    };
    let out = args
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok(BenchConfig {
        zone_counts,
        n_envs,
        selectors,
        seed0,
        dt,
        jobs: jobs.max(1),
        out,
        select_on_jump_only: bool_opt(args.select_on_jump_only, "select_on_jump_only")?,
        no_timing: bool_opt(args.no_timing, "no_timing")?,
    })
}

fn run_once(args: &OnceArgs) -> Result<(), String> {
    let cfg = resolve(&args.common, Experiment::Once)?;
    let selector = match &args.selector {
        Some(s) => parse_selectors(s, 5)?[0],
        None => Selector::Ica,
    };
    let scenario = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("reading {}: {e}", path.display()))?;
            Scenario::from_text(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => {
            let zc = cfg.zone_counts[0];
            let mut sc =
                sample_scenario(zc / 2, zc - zc / 2, cfg.seed0).map_err(|e| e.to_string())?;
            sc.dt = cfg.dt;
            sc
        }
    };
    let summary = bench::cmd_once(
        &scenario,
        selector,
        &cfg.out,
        cfg.select_on_jump_only,
        cfg.no_timing,
    )?;
    println!("{summary}");
    Ok(())
}

fn run_check(file: &PathBuf) -> Result<(), String> {
    let text =
        std::fs::read_to_string(file).map_err(|e| format!("reading {}: {e}", file.display()))?;
    let cs = ConstraintSet::from_text(&text).map_err(|e| format!("{}: {e}", file.display()))?;
    println!(
        "constraints: {} ({} hard, {} soft), input dimension {}",
        cs.len(),
        cs.n_hard(),
        cs.n_soft(),
        cs.input_dim()
    );
    let feasible = farkas_feasible(&cs);
    println!("feasible: {feasible}");
    match polar_components(&cs) {
        Ok(report) => {
            let nu: Vec<String> = report.nu_star.iter().map(|v| format!("{v:.6}")).collect();
            println!("nu* = [{}]", nu.join(", "));
            println!("min component: {:.6}", report.nu_min_enforced);
            match (report.dist_lower, report.dist_upper) {
                (Some(lo), Some(hi)) => println!("boundary distance bounds: [{lo:.6}, {hi:.6}]"),
                _ => println!("boundary distance bounds: not available"),
            }
        }
        Err(_) => {
            println!("nu* = (none; system infeasible)");
            if let Some((lo, hi)) = simplicial_bounds(&cs) {
                println!("boundary distance bounds: [{lo:.6}, {hi:.6}]");
            }
        }
    }
    match ica(&cs, &init_config(&cs)) {
        Ok((p, _nu)) => {
            let bits: Vec<&str> = p.bits().iter().map(|&b| if b { "1" } else { "0" }).collect();
            println!("selected configuration: [{}]", bits.join(" "));
            println!(
                "enforced: {}/{} ({} dropped)",
                p.enforced_count(),
                cs.len(),
                cs.len() - p.enforced_count()
            );
        }
        Err(e) => println!("selection failed: {e}"),
    }
    Ok(())
}

fn run_selftest() -> ExitCode {
    let reports = conesel::selftest::run_all();
    let mut all_pass = true;
    for r in &reports {
        println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
        all_pass &= r.pass;
    }
    if all_pass {
        println!("selftest: all {} suites passed", reports.len());
        ExitCode::SUCCESS
    } else {
        println!("selftest: FAILURES PRESENT");
        ExitCode::FAILURE
    }
}
