//! Benchmark execution and CSV emission for the sweep / fixed / once
//! commands.
//!
//! Environments are dispatched to a small worker pool; every episode is
//! seeded as `seed0 + env_index`, so all selectors of one environment see
//! the same scenario and runs are paired. Aggregation happens after the
//! pool joins, in fixed task order, so output bytes do not depend on the
//! number of jobs.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use conesel::sim::{
    run_episode_opts, sample_scenario, EpisodeOptions, RunMetrics, Selector,
};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub zone_counts: Vec<usize>,
    pub n_envs: usize,
    pub selectors: Vec<Selector>,
    pub seed0: u64,
    pub dt: f64,
    pub jobs: usize,
    pub out: PathBuf,
    pub select_on_jump_only: bool,
    pub no_timing: bool,
}

/// Aggregates of one episode, plus the raw per-step drop percentages for
/// histogram assembly.
#[derive(Debug, Clone)]
pub struct EpisodeStats {
    pub avg_drop_pct: f64,
    pub max_drop_pct: f64,
    pub avg_time_s: f64,
    pub max_time_s: f64,
    pub avg_qp_time_s: f64,
    pub step_drops: Vec<f64>,
}

impl EpisodeStats {
    fn from_metrics(m: &RunMetrics) -> Self {
        let n = m.records.len().max(1) as f64;
        EpisodeStats {
            avg_drop_pct: m.avg_drop_pct,
            max_drop_pct: m.max_drop_pct,
            avg_time_s: m.avg_time,
            max_time_s: m.max_time,
            avg_qp_time_s: m.records.iter().map(|r| r.qp_time).sum::<f64>() / n,
            step_drops: m.records.iter().map(|r| r.dropped_soft_pct).collect(),
        }
    }
}

struct EnvResult {
    zone_count: usize,
    per_selector: Vec<EpisodeStats>, // parallel to cfg.selectors
}

/// Runs every (zone_count, env) cell of the grid over the worker pool.
/// Returns results ordered by (zone_count index, env index).
fn run_grid(cfg: &BenchConfig) -> Result<Vec<EnvResult>, String> {
    let tasks: Vec<(usize, usize)> = cfg
        .zone_counts
        .iter()
        .enumerate()
        .flat_map(|(zi, _)| (0..cfg.n_envs).map(move |e| (zi, e)))
        .collect();
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<EnvResult, String>>>> =
        tasks.iter().map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..cfg.jobs.max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let (zi, env) = tasks[i];
                let zc = cfg.zone_counts[zi];
                let r = run_env(cfg, zc, env);
                if r.is_ok() {
                    eprintln!("done: zones={zc} env={}/{}", env + 1, cfg.n_envs);
                }
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });

    let mut out = Vec::with_capacity(tasks.len());
    for slot in slots {
        match slot.into_inner().unwrap() {
            Some(Ok(r)) => out.push(r),
            Some(Err(e)) => return Err(e),
            None => return Err("worker pool dropped a task".into()),
        }
    }
    Ok(out)
}

fn run_env(cfg: &BenchConfig, zone_count: usize, env: usize) -> Result<EnvResult, String> {
    let seed = cfg.seed0 + env as u64;
    let mut sc = sample_scenario(zone_count / 2, zone_count - zone_count / 2, seed)
        .map_err(|e| format!("zones={zone_count} env={env}: {e}"))?;
    sc.dt = cfg.dt;
    let opts = EpisodeOptions { select_on_jump_only: cfg.select_on_jump_only };
    let mut per_selector = Vec::with_capacity(cfg.selectors.len());
    for sel in &cfg.selectors {
        let metrics = run_episode_opts(&sc, *sel, opts)
            .map_err(|e| format!("zones={zone_count} env={env} selector={}: {e}", sel.label()))?;
        per_selector.push(EpisodeStats::from_metrics(&metrics));
    }
    Ok(EnvResult { zone_count, per_selector })
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<(), String> {
    let mut content = String::with_capacity(rows.len() * 40 + header.len() + 1);
    content.push_str(header);
    content.push('\n');
    for row in rows {
        content.push_str(row);
        content.push('\n');
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    }
    std::fs::write(path, content).map_err(|e| format!("writing {}: {e}", path.display()))
}

/// Pooled aggregates of one (zone_count, selector) cell across
/// environments.
struct CellAgg {
    avg_drop: f64,
    max_drop: f64,
    avg_time: f64,
    max_time: f64,
    avg_qp: f64,
}

fn aggregate(results: &[EnvResult], zone_count: usize, sel_idx: usize) -> CellAgg {
    let cells: Vec<&EpisodeStats> = results
        .iter()
        .filter(|r| r.zone_count == zone_count)
        .map(|r| &r.per_selector[sel_idx])
        .collect();
    let n = cells.len().max(1) as f64;
    CellAgg {
        avg_drop: cells.iter().map(|c| c.avg_drop_pct).sum::<f64>() / n,
        max_drop: cells.iter().map(|c| c.max_drop_pct).fold(0.0, f64::max),
        avg_time: cells.iter().map(|c| c.avg_time_s).sum::<f64>() / n,
        max_time: cells.iter().map(|c| c.max_time_s).fold(0.0, f64::max),
        avg_qp: cells.iter().map(|c| c.avg_qp_time_s).sum::<f64>() / n,
    }
}

/// Varying-zone-count experiment. Emits the long-form `sweep.csv` plus
/// one wide file per figure panel.
pub fn cmd_sweep(cfg: &BenchConfig) -> Result<(), String> {
    let results = run_grid(cfg)?;
    let zero = cfg.no_timing;
    let t = |v: f64| if zero { fmt(0.0) } else { fmt(v) };

    let mut rows = vec![];
    for &zc in &cfg.zone_counts {
        for (si, sel) in cfg.selectors.iter().enumerate() {
            let a = aggregate(&results, zc, si);
            rows.push(format!(
                "{zc},{},{},{},{},{},{}",
                sel.label(),
                fmt(a.avg_drop),
                fmt(a.max_drop),
                t(a.avg_time),
                t(a.max_time),
                t(a.avg_qp),
            ));
        }
    }
    write_csv(
        &cfg.out.join("sweep.csv"),
        "zones,selector,avg_drop_pct,max_drop_pct,avg_time_s,max_time_s,avg_qp_time_s",
        &rows,
    )?;

    let labels: Vec<String> = cfg.selectors.iter().map(|s| s.label()).collect();
    let panel_header = format!("zones,{}", labels.join(","));
    let panels: [(&str, fn(&CellAgg) -> f64, bool); 4] = [
        ("fig2a_avg_drop.csv", |a| a.avg_drop, false),
        ("fig2b_max_drop.csv", |a| a.max_drop, false),
        ("fig2c_avg_time.csv", |a| a.avg_time, true),
        ("fig2d_max_time.csv", |a| a.max_time, true),
    ];
    for (name, pick, is_time) in panels {
        let mut rows = vec![];
        for &zc in &cfg.zone_counts {
            let vals: Vec<String> = (0..cfg.selectors.len())
                .map(|si| {
                    let v = pick(&aggregate(&results, zc, si));
                    if is_time { t(v) } else { fmt(v) }
                })
                .collect();
            rows.push(format!("{zc},{}", vals.join(",")));
        }
        write_csv(&cfg.out.join(name), &panel_header, &rows)?;
    }
    Ok(())
}

/// Fixed-zone-count experiment: summary table plus per-step drop
/// histograms (unit-percent bins from 0 to 100).
pub fn cmd_fixed(cfg: &BenchConfig) -> Result<(), String> {
    if cfg.zone_counts.len() != 1 {
        return Err("fixed experiment expects exactly one zone count".into());
    }
    let zc = cfg.zone_counts[0];
    let results = run_grid(cfg)?;
    let zero = cfg.no_timing;
    let t = |v: f64| if zero { fmt(0.0) } else { fmt(v) };

    let mut rows = vec![];
    for (si, sel) in cfg.selectors.iter().enumerate() {
        let a = aggregate(&results, zc, si);
        rows.push(format!(
            "{},{},{},{},{},{}",
            sel.label(),
            t(a.avg_time),
            t(a.max_time),
            fmt(a.avg_drop),
            fmt(a.max_drop),
            t(a.avg_qp),
        ));
    }
    write_csv(
        &cfg.out.join("fixed_summary.csv"),
        "selector,avg_time_s,max_time_s,avg_drop_pct,max_drop_pct,avg_qp_time_s",
        &rows,
    )?;

    let mut rows = vec![];
    for (si, sel) in cfg.selectors.iter().enumerate() {
        let mut bins = [0usize; 100];
        for r in results.iter().filter(|r| r.zone_count == zc) {
            for &d in &r.per_selector[si].step_drops {
                let b = (d.floor() as usize).min(99);
                bins[b] += 1;
            }
        }
        for (b, count) in bins.iter().enumerate() {
            rows.push(format!("{},{},{},{}", sel.label(), b, b + 1, count));
        }
    }
    write_csv(&cfg.out.join("fixed_hist.csv"), "selector,bin_lo,bin_hi,count", &rows)?;
    Ok(())
}

/// Single-episode run: writes the replayable scenario and a per-step
/// trace, and returns a printable summary.
pub fn cmd_once(
    scenario: &conesel::sim::Scenario,
    selector: Selector,
    out: &Path,
    select_on_jump_only: bool,
    no_timing: bool,
) -> Result<String, String> {
    let metrics = run_episode_opts(
        scenario,
        selector,
        EpisodeOptions { select_on_jump_only },
    )
    .map_err(|e| e.to_string())?;

    std::fs::create_dir_all(out).map_err(|e| format!("creating {}: {e}", out.display()))?;
    std::fs::write(out.join("scenario.txt"), scenario.to_text())
        .map_err(|e| format!("writing {}: {e}", out.join("scenario.txt").display()))?;

    let t = |v: f64| if no_timing { fmt(0.0) } else { fmt(v) };
    let rows: Vec<String> = metrics
        .records
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}",
                fmt(r.t),
                r.jump_count,
                r.p.enforced_count(),
                fmt(r.dropped_soft_pct),
                t(r.selector_time),
                t(r.qp_time),
                fmt(r.x[0]),
                fmt(r.x[1]),
            )
        })
        .collect();
    write_csv(
        &out.join("steps.csv"),
        "t,jump_count,enforced,dropped_soft_pct,selector_time_s,qp_time_s,x,y",
        &rows,
    )?;

    let last = metrics.records.last().unwrap();
    Ok(format!(
        "selector: {}\nsteps: {}\njumps: {}\navg drop: {:.3}%\nmax drop: {:.3}%\navg selector time: {:.6} s\nreached goal: {}\nfinal position: ({:.4}, {:.4})",
        selector.label(),
        metrics.records.len(),
        last.jump_count,
        metrics.avg_drop_pct,
        metrics.max_drop_pct,
        metrics.avg_time,
        metrics.reached_goal,
        last.x[0],
        last.x[1],
    ))
}
