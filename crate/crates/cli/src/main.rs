use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nte_core::arena::{
    export_plot_data, match_log_jsonl, run_tournament, TournamentConfig, Variant, VariantFile,
};
use nte_core::config::{config_hash, parse_config, RunConfig};
use nte_core::improve::{make_game, meta_learn, play_game, read_dataset_manifest, Lineage};
use nte_core::neural::read_checkpoint_manifest;
use nte_core::rng::subseed;

mod selftest;

#[derive(Parser)]
#[command(name = "nte", version, about = "Neural tree expansion for multi-robot reach-target-avoid games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration; omitted keys take the profile defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let text = match &self.config {
            Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => String::new(),
        };
        Ok(parse_config(&text)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the self-improvement loop and write datasets, checkpoints and lineage.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Play a tournament and write the plot CSV (plus a JSON-lines match log).
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        /// JSON file with `attackers` and `defenders` variant lists.
        #[arg(long)]
        variants: PathBuf,
        /// Number of paired initial conditions.
        #[arg(long)]
        games: usize,
        #[arg(long)]
        out: PathBuf,
        /// Training run directory for biased variants.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Match log path (default: `<out>` with a `.jsonl` extension).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Record decision latencies as zero for reproducible output.
        #[arg(long)]
        no_timing: bool,
    },
    /// Play one game and write its trajectory as JSON lines.
    Rollout {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Attacker variant, e.g. `unbiased_learner` or `biased_learner:2@500`.
        #[arg(long, default_value = "unbiased_learner")]
        attacker: Variant,
        #[arg(long, default_value = "unbiased_learner")]
        defender: Variant,
        #[arg(long)]
        run: Option<PathBuf>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a checkpoint, dataset or lineage manifest.
    Inspect { path: PathBuf },
    /// Run the invariant fuzz suites.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn train(config: &ConfigArgs, out: &Path, seed: u64) -> Result<()> {
    let run = config.load()?;
    let lineage = meta_learn(&run, out, seed)?;
    println!(
        "trained {} iteration(s); lineage at {}",
        lineage.iterations.len(),
        out.join("lineage.json").display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn eval(
    config: &ConfigArgs,
    variants: &Path,
    games: usize,
    out: &Path,
    run_dir: Option<&Path>,
    seed: u64,
    log: Option<&Path>,
    no_timing: bool,
) -> Result<()> {
    let run = config.load()?;
    let file: VariantFile = serde_json::from_str(
        &fs::read_to_string(variants).with_context(|| format!("reading {}", variants.display()))?,
    )
    .with_context(|| format!("parsing {}", variants.display()))?;
    let cfg = TournamentConfig {
        game: run.game.clone(),
        curriculum: run.curriculum.clone(),
        planner: run.search.clone(),
        seed,
        record_timing: !no_timing,
    };
    let results = run_tournament(&file.attackers, &file.defenders, games, &cfg, run_dir)?;
    let hash = config_hash(&run);
    fs::write(out, export_plot_data(&results, &hash))?;
    let log = log.map(Path::to_path_buf).unwrap_or_else(|| out.with_extension("jsonl"));
    fs::write(&log, match_log_jsonl(&results, &hash)?)?;
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    println!("{} games ({failed} failed); plot data in {}", results.len(), out.display());
    Ok(())
}

fn rollout(
    config: &ConfigArgs,
    seed: u64,
    attacker: &Variant,
    defender: &Variant,
    run_dir: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let run = config.load()?;
    let game = make_game(&run.curriculum, &run.game, 0, subseed(seed, "rollout", &[]), 0)?;
    let a = attacker.controller(&run.search, run_dir)?;
    let b = defender.controller(&run.search, run_dir)?;
    let rec = play_game(&game, &a, &b, subseed(seed, "match", &[]))?;
    let mut text = serde_json::to_string(&serde_json::json!({
        "config_hash": config_hash(&run),
        "game": game.spec,
    }))?;
    text.push('\n');
    for step in &rec.trajectory {
        let states: Vec<_> = step.state.robots.iter().map(|r| &r.vector).collect();
        let active: Vec<_> = step.state.robots.iter().map(|r| r.active).collect();
        text.push_str(&serde_json::to_string(&serde_json::json!({
            "t": step.t,
            "states": states,
            "active": active,
            "action": step.action,
            "events": step.events,
        }))?);
        text.push('\n');
    }
    text.push_str(&serde_json::to_string(&serde_json::json!({
        "t": rec.steps,
        "states": rec.final_state.robots.iter().map(|r| &r.vector).collect::<Vec<_>>(),
        "active": rec.final_state.robots.iter().map(|r| r.active).collect::<Vec<_>>(),
        "reached": rec.reached,
    }))?);
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn inspect(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("architecture").is_some() {
        let m = read_checkpoint_manifest(path)?;
        let expected = m.architecture.parameter_count();
        println!("checkpoint {}", path.display());
        println!("  kind: {:?}, iteration {}, seed {}", m.architecture.kind, m.iteration, m.seed);
        println!("  parameter_count: {} (architecture expects {expected})", m.parameter_count);
        println!("  config_hash: {}", m.config_hash);
        println!("  datasets: {:?}", m.datasets);
        if m.parameter_count != expected {
            bail!("parameter count does not match the architecture");
        }
    } else if value.get("record_layout").is_some() {
        let m = read_dataset_manifest(path)?;
        println!("dataset {}", path.display());
        println!("  kind: {:?}, team: {:?}, iteration {}", m.kind, m.team, m.iteration);
        println!("  samples: {}, config_hash: {}", m.sample_count, m.config_hash);
        println!("  layout: {}", m.record_layout);
    } else if value.get("iterations").is_some() {
        let l: Lineage = serde_json::from_value(value)?;
        println!("lineage (config_hash {}, seed {})", l.config_hash, l.seed);
        for it in &l.iterations {
            println!(
                "  iteration {} -> checkpoint {} (from {}): {:?}",
                it.iteration, it.checkpoint_index, it.parent_checkpoint, it.checkpoints
            );
        }
    } else {
        println!("{}", serde_json::to_string_pretty(&value)?);
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("NTE_THREADS") {
        let n: usize = v.parse().with_context(|| format!("NTE_THREADS={v} is not a number"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Train { config, out, seed } => train(&config, &out, seed),
        Command::Eval {
            config,
            variants,
            games,
            out,
            run,
            seed,
            log,
            no_timing,
        } => eval(&config, &variants, games, &out, run.as_deref(), seed, log.as_deref(), no_timing),
        Command::Rollout {
            config,
            seed,
            attacker,
            defender,
            run,
            out,
        } => rollout(&config, seed, &attacker, &defender, run.as_deref(), out.as_deref()),
        Command::Inspect { path } => inspect(&path),
        Command::Selftest { seed } => {
            let failures = selftest::run(seed);
            if failures > 0 {
                bail!("{failures} selftest check(s) failed");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

