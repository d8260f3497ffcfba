//! Ablation matrix: every (spec, scenario, seed) episode, aggregated per spec.

use std::path::Path;

use mbappe_core::AblationSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::episode::{run_episode, EpisodeConfig, EpisodeLog};
use crate::error::{Error, Result};
use crate::metrics::{EpisodeScore, Metrics};
use crate::scenario::Scenario;

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "MBAPPE_NUM_WORKERS";

/// Worker count from [`WORKERS_ENV`], or the machine's parallelism.
pub fn worker_count() -> Result<usize> {
    parse_workers(std::env::var(WORKERS_ENV).ok().as_deref())
}

fn parse_workers(value: Option<&str>) -> Result<usize> {
    match value {
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `f` on a pool sized by [`worker_count`].
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// The four prior ablations with both constraints on.
pub fn prior_specs() -> Vec<AblationSpec> {
    [(false, false), (true, false), (false, true), (true, true)]
        .into_iter()
        .map(|(l, h)| AblationSpec {
            use_learned_prior: l,
            use_handcrafted_prior: h,
            ..AblationSpec::default()
        })
        .collect()
}

/// The four continuity-constraint ablations with both priors on.
pub fn constraint_specs() -> Vec<AblationSpec> {
    [(false, false), (true, false), (false, true), (true, true)]
        .into_iter()
        .map(|(t, n)| AblationSpec {
            use_tree_constraint: t,
            use_node_constraint: n,
            ..AblationSpec::default()
        })
        .collect()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    spec: Vec<AblationSpec>,
}

/// Resolves `priors`, `constraints`, or a TOML file of `[[spec]]` tables.
pub fn load_specs(arg: &str) -> Result<Vec<AblationSpec>> {
    match arg {
        "priors" => Ok(prior_specs()),
        "constraints" => Ok(constraint_specs()),
        path => {
            let p = Path::new(path);
            let text = std::fs::read_to_string(p).map_err(|e| Error::read(p, e))?;
            let file: SpecFile = toml::from_str(&text).map_err(|e| Error::Config(format!("{path}: {e}")))?;
            if file.spec.is_empty() {
                return Err(Error::Config(format!("{path}: no [[spec]] entries")));
            }
            Ok(file.spec)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub spec: AblationSpec,
    /// Metrics over the successful episodes; `None` if every episode failed.
    pub metrics: Option<Metrics>,
    pub mean_search_ms: f64,
    /// One entry per failed episode: `scenario/seed: error`.
    pub failures: Vec<String>,
}

/// Runs every combination in parallel. Episode errors do not abort the
/// matrix; they are recorded on the row of their spec.
pub fn run_ablation_matrix(
    scenarios: &[Scenario],
    base: &EpisodeConfig,
    specs: &[AblationSpec],
    seeds: &[u64],
) -> Result<Vec<AblationRow>> {
    if scenarios.is_empty() || specs.is_empty() || seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one scenario, spec and seed".into()));
    }
    // deterministic reduce order: scenario id, then seed
    let mut order: Vec<usize> = (0..scenarios.len()).collect();
    order.sort_by(|&a, &b| scenarios[a].id.cmp(&scenarios[b].id));
    let jobs: Vec<(usize, usize, u64)> = (0..specs.len())
        .flat_map(|k| order.iter().flat_map(move |&i| seeds.iter().map(move |&s| (k, i, s))))
        .collect();

    let results: Vec<Result<EpisodeLog>> = with_workers(|| {
        jobs.par_iter()
            .map(|&(k, i, seed)| {
                let mut cfg = base.clone();
                cfg.search.ablation = specs[k];
                run_episode(&scenarios[i], &cfg, seed)
            })
            .collect()
    })?;

    let mut rows: Vec<AblationRow> = specs
        .iter()
        .map(|&spec| AblationRow {
            spec,
            metrics: None,
            mean_search_ms: 0.0,
            failures: Vec::new(),
        })
        .collect();
    let mut scores: Vec<Vec<EpisodeScore>> = vec![Vec::new(); specs.len()];
    let mut search_ms: Vec<(f64, usize)> = vec![(0.0, 0); specs.len()];
    for (&(k, i, seed), res) in jobs.iter().zip(results) {
        match res {
            Ok(log) => {
                search_ms[k].0 += log.search_time.as_secs_f64() * 1e3;
                search_ms[k].1 += log.planning.len();
                scores[k].push(EpisodeScore::of(&log));
            }
            Err(e) => rows[k].failures.push(format!("{}/{seed}: {e}", scenarios[i].id)),
        }
    }
    for (k, row) in rows.iter_mut().enumerate() {
        if !scores[k].is_empty() {
            row.metrics = Some(Metrics::aggregate(&scores[k])?);
        }
        let (ms, n) = search_ms[k];
        row.mean_search_ms = if n > 0 { ms / n as f64 } else { 0.0 };
    }
    Ok(rows)
}

/// CSV table, one row per spec. With `timing = false` the latency column
/// reads `NA` so reruns are byte-identical.
pub fn ablation_csv(rows: &[AblationRow], timing: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["flags", "CR", "DA", "EP", "score", "episodes", "mean_search_ms", "status"])
        .expect("in-memory write");
    for row in rows {
        let m = row.metrics.as_ref();
        let num = |f: fn(&Metrics) -> f64, prec: usize| m.map_or_else(|| "NA".to_owned(), |m| format!("{:.prec$}", f(m)));
        let status = match row.failures.as_slice() {
            [] => "ok".to_owned(),
            [first, ..] => format!("failed {} episode(s); first: {first}", row.failures.len()),
        };
        w.write_record([
            row.spec.label(),
            num(|m| m.cr, 4),
            num(|m| m.da, 4),
            num(|m| m.ep, 4),
            num(|m| m.score, 2),
            m.map_or(0, |m| m.episodes).to_string(),
            if timing { format!("{:.2}", row.mean_search_ms) } else { "NA".to_owned() },
            status,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
