use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mbappe::ablation::{ablation_csv, load_specs, run_ablation_matrix, with_workers};
use mbappe::episode::{plan_once, run_episode, EpisodeConfig, EpisodeLog};
use mbappe::metrics::{EpisodeScore, Metrics};
use mbappe::synth::{builtin_suite, generate_scenario, Family, ScenarioParams};
use mbappe::{render_svg, Error, PlannerConfigFile, PredictorChoice, Result, Scenario, TreeExport};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "mbappe", version, about = "Prior-guided MCTS motion planner: closed-loop runs, ablations and exports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct PlannerArgs {
    /// Planner configuration (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured predictor.
    #[arg(long, value_enum)]
    predictor: Option<PredictorChoice>,
    /// Overrides the configured replan interval, in 0.1 s ticks.
    #[arg(long)]
    replan_every: Option<u32>,
}

impl PlannerArgs {
    fn load(&self) -> Result<PlannerConfigFile> {
        let mut cfg = match &self.config {
            Some(p) => PlannerConfigFile::load(p)?,
            None => PlannerConfigFile::default(),
        };
        if let Some(r) = self.replan_every {
            cfg.replan_every = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn episode(&self, cfg: &PlannerConfigFile) -> Result<EpisodeConfig> {
        cfg.episode_config(self.predictor)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeFormat {
    Dot,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop episode and write its log.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        planner: PlannerArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Also store every search tree in the search log.
        #[arg(long)]
        trees: bool,
    },
    /// Run every matching scenario for every seed, in parallel.
    Batch {
        /// Glob pattern, or `builtin` / `builtin:N` for the synthetic suite.
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        planner: PlannerArgs,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seed: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the ablation matrix and write a CSV table.
    Ablate {
        /// Glob pattern, or `builtin` / `builtin:N` for the synthetic suite.
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        planner: PlannerArgs,
        /// `priors`, `constraints`, or a TOML file of `[[spec]]` tables.
        #[arg(long, default_value = "priors")]
        specs: String,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seed: Vec<u64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Write NA in the latency column so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Write synthetic scenarios as JSON files.
    GenScenarios {
        #[arg(long)]
        out: PathBuf,
        /// Families to generate (repeatable); all when omitted.
        #[arg(long)]
        family: Vec<String>,
        /// Scenarios per family.
        #[arg(long, default_value_t = 4)]
        count: u64,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Export a search tree as DOT or JSON.
    ExportTree {
        /// Search log (`*.search.ndjson`) holding captured trees.
        #[arg(long, conflicts_with = "scenario")]
        input: Option<PathBuf>,
        /// Planning step to export from the search log.
        #[arg(long, default_value_t = 0)]
        step: usize,
        /// Search once from this scenario's start instead.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        planner: PlannerArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "dot")]
        format: TreeFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an episode log over its scenario as SVG.
    RenderTrajectory {
        /// Episode log (`*.ndjson`); the `.search.ndjson` sidecar next to it
        /// is picked up automatically.
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            scenario,
            planner,
            seed,
            out,
            trees,
        } => cmd_run(&scenario, &planner, seed, &out, trees),
        Command::Batch {
            scenario,
            planner,
            seed,
            out,
        } => cmd_batch(&scenario, &planner, &seed, &out),
        Command::Ablate {
            scenario,
            planner,
            specs,
            seed,
            out,
            no_timing,
        } => cmd_ablate(&scenario, &planner, &specs, &seed, &out, !no_timing),
        Command::GenScenarios {
            out,
            family,
            count,
            seed,
        } => cmd_gen(&out, &family, count, seed),
        Command::ExportTree {
            input,
            step,
            scenario,
            planner,
            seed,
            format,
            out,
        } => cmd_export_tree(input.as_deref(), step, scenario.as_deref(), &planner, seed, format, &out),
        Command::RenderTrajectory { log, scenario, out } => cmd_render(&log, &scenario, &out),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    std::fs::write(path, contents).map_err(|e| Error::write(path, e))
}

fn stem(id: &str, seed: u64) -> String {
    format!("{id}_seed{seed}")
}

/// Resolves a scenario pattern. Everything is loaded and validated before
/// any output is written.
fn load_scenarios(pattern: &str, cfg: &PlannerConfigFile) -> Result<Vec<Scenario>> {
    let mut scenarios = if let Some(rest) = pattern.strip_prefix("builtin") {
        let n = match rest.strip_prefix(':') {
            Some(n) => n.parse().map_err(|_| Error::Config(format!("bad suite size in {pattern:?}")))?,
            None if rest.is_empty() => 20,
            None => return Err(Error::Config(format!("bad scenario pattern {pattern:?}"))),
        };
        builtin_suite(n)?
    } else {
        let paths = glob::glob(pattern).map_err(|e| Error::Config(format!("bad glob {pattern:?}: {e}")))?;
        let mut out = Vec::new();
        for p in paths {
            let p = p.map_err(|e| Error::read(e.path().to_path_buf(), e.into()))?;
            out.push(Scenario::load(&p)?);
        }
        out
    };
    if scenarios.is_empty() {
        return Err(Error::Input(format!("no scenario matches {pattern:?}")));
    }
    for s in &mut scenarios {
        cfg.apply_vehicle(s);
        s.validate()?;
    }
    Ok(scenarios)
}

fn print_metrics(label: &str, m: &Metrics) {
    println!(
        "{label}: CR={:.3} DA={:.3} EP={:.3} score={:.2} episodes={}",
        m.cr, m.da, m.ep, m.score, m.episodes
    );
}

fn cmd_run(scenario: &Path, planner: &PlannerArgs, seed: u64, out: &Path, trees: bool) -> Result<()> {
    let cfg = planner.load()?;
    let mut s = Scenario::load(scenario)?;
    cfg.apply_vehicle(&mut s);
    s.validate()?;
    let mut episode = planner.episode(&cfg)?;
    episode.capture_trees = trees;
    let log = run_episode(&s, &episode, seed)?;
    let metrics = Metrics::aggregate(&[EpisodeScore::of(&log)])?;
    create_dir(out)?;
    let (log_path, _) = log.write(out, &stem(&s.id, seed))?;
    write_file(
        &out.join(format!("{}.metrics.json", stem(&s.id, seed))),
        &serde_json::to_string_pretty(&metrics).expect("metrics serialize"),
    )?;
    print_metrics(&s.id, &metrics);
    println!("log: {}", log_path.display());
    Ok(())
}

fn cmd_batch(pattern: &str, planner: &PlannerArgs, seeds: &[u64], out: &Path) -> Result<()> {
    let cfg = planner.load()?;
    let scenarios = load_scenarios(pattern, &cfg)?;
    let episode = planner.episode(&cfg)?;
    let jobs: Vec<(&Scenario, u64)> = scenarios.iter().flat_map(|s| seeds.iter().map(move |&k| (s, k))).collect();
    let logs: Vec<Result<EpisodeLog>> =
        with_workers(|| jobs.par_iter().map(|&(s, k)| run_episode(s, &episode, k)).collect())?;
    create_dir(out)?;
    let mut scores = Vec::new();
    let mut first_err = None;
    for ((s, k), log) in jobs.iter().zip(logs) {
        match log {
            Ok(log) => {
                log.write(out, &stem(&s.id, *k))?;
                scores.push(EpisodeScore::of(&log));
            }
            Err(e) => {
                eprintln!("{} seed {k}: {e}", s.id);
                first_err.get_or_insert(e);
            }
        }
    }
    if !scores.is_empty() {
        let m = Metrics::aggregate(&scores)?;
        let summary = serde_json::json!({ "metrics": m, "episodes": scores });
        write_file(&out.join("metrics.json"), &serde_json::to_string_pretty(&summary).expect("serializes"))?;
        print_metrics("batch", &m);
    }
    first_err.map_or(Ok(()), Err)
}

fn cmd_ablate(pattern: &str, planner: &PlannerArgs, specs: &str, seeds: &[u64], out: &Path, timing: bool) -> Result<()> {
    let cfg = planner.load()?;
    let specs = load_specs(specs)?;
    let scenarios = load_scenarios(pattern, &cfg)?;
    let episode = planner.episode(&cfg)?;
    let rows = run_ablation_matrix(&scenarios, &episode, &specs, seeds)?;
    write_file(out, &ablation_csv(&rows, timing))?;
    for row in &rows {
        match &row.metrics {
            Some(m) => print_metrics(&row.spec.label(), m),
            None => println!("{}: no successful episodes", row.spec.label()),
        }
    }
    let failed: usize = rows.iter().map(|r| r.failures.len()).sum();
    if failed > 0 {
        let first = rows.iter().flat_map(|r| &r.failures).next().cloned().unwrap_or_default();
        return Err(Error::Runtime(format!("{failed} episode(s) failed; first: {first}")));
    }
    Ok(())
}

fn cmd_gen(out: &Path, families: &[String], count: u64, first_seed: u64) -> Result<()> {
    let families: Vec<Family> = if families.is_empty() {
        Family::ALL.to_vec()
    } else {
        families.iter().map(|f| f.parse()).collect::<Result<_>>()?
    };
    let mut scenarios = Vec::new();
    for f in families {
        for seed in first_seed..first_seed + count {
            scenarios.push(generate_scenario(f, &ScenarioParams::default(), seed)?);
        }
    }
    create_dir(out)?;
    for s in &scenarios {
        s.save(&out.join(format!("{}.json", s.id)))?;
    }
    println!("wrote {} scenarios to {}", scenarios.len(), out.display());
    Ok(())
}

fn cmd_export_tree(
    input: Option<&Path>,
    step: usize,
    scenario: Option<&Path>,
    planner: &PlannerArgs,
    seed: u64,
    format: TreeFormat,
    out: &Path,
) -> Result<()> {
    let tree = match (input, scenario) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
            let line = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .nth(step)
                .ok_or_else(|| Error::Input(format!("{}: no planning step {step}", path.display())))?;
            let value: serde_json::Value =
                serde_json::from_str(line).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
            // accept a planning summary with a captured tree or a bare tree
            let tree_value = value.get("tree").cloned().unwrap_or(value);
            if tree_value.is_null() {
                return Err(Error::Input(format!(
                    "{}: step {step} has no captured tree (run with --trees)",
                    path.display()
                )));
            }
            TreeExport::from_json(&tree_value.to_string())?
        }
        (None, Some(path)) => {
            let cfg = planner.load()?;
            let mut s = Scenario::load(path)?;
            cfg.apply_vehicle(&mut s);
            plan_once(&s, &planner.episode(&cfg)?, seed)?
        }
        (None, None) => return Err(Error::Config("export-tree needs --input or --scenario".into())),
    };
    let text = match format {
        TreeFormat::Dot => tree.to_dot(),
        TreeFormat::Json => tree.to_json(),
    };
    write_file(out, &text)?;
    println!("tree with {} nodes written to {}", tree.nodes.len(), out.display());
    Ok(())
}

fn cmd_render(log: &Path, scenario: &Path, out: &Path) -> Result<()> {
    let s = Scenario::load(scenario)?;
    let sidecar = log.to_str().and_then(|p| p.strip_suffix(".ndjson")).map(|p| PathBuf::from(format!("{p}.search.ndjson")));
    let sidecar = sidecar.filter(|p| p.exists());
    let episode = EpisodeLog::read(log, sidecar.as_deref())?;
    let svg = render_svg(&s, &episode)?;
    write_file(out, &svg)?;
    println!("wrote {}", out.display());
    Ok(())
}
