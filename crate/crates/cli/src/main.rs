//! `nemo`: runs language-acquisition trials, sweeps, a projection demo and
//! a throughput benchmark.

mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use nemo::assembly::projection_setup;
use nemo::experiment::{
    run_trials, sweep_beta, sweep_lexicon, sweep_tutoring, ExperimentConfig, SweepResult,
};
use nemo::language::{sample_sentence, Lexicon, Organ};
use nemo::{project, rng, Backend};
use serde::Serialize;

use config::{parse_interval, resolve, sweep_values, Overrides, Resolved};
use output::{now, peak_rss_bytes, Manifest, OutDir};

#[derive(Parser)]
#[command(name = "nemo", version, about = "NEMO language-organ simulator")]
struct Cli {
    /// Worker threads for independent trials. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    #[command(flatten)]
    config: Overrides,
    /// Directory for the manifest and results.
    #[arg(long, short)]
    output: PathBuf,
    /// Record per-trial wallclock in trial.csv (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train until success (or budget exhaustion), `repeats` times.
    Run(Common),
    /// Vary the lexicon size l.
    SweepLexicon {
        #[command(flatten)]
        common: Common,
        /// Comma-separated l values.
        #[arg(long)]
        values: Option<String>,
    },
    /// Vary the plasticity rate beta of every area.
    SweepBeta {
        #[command(flatten)]
        common: Common,
        /// Comma-separated beta values.
        #[arg(long)]
        values: Option<String>,
    },
    /// Vary the tutoring interval (`none` disables tutoring).
    SweepTutoring {
        #[command(flatten)]
        common: Common,
        /// Comma-separated intervals, e.g. none,2,5.
        #[arg(long)]
        values: Option<String>,
    },
    /// Project a fixed stimulus into a recurrent area and print the trace.
    ProjectDemo(ProjectArgs),
    /// Measure steps per second and memory for an organ configuration.
    Bench {
        #[command(flatten)]
        config: Overrides,
        #[arg(long, short)]
        output: PathBuf,
        /// Network steps to time.
        #[arg(long, default_value_t = 100)]
        steps: u32,
    },
    /// Parse and validate a configuration, printing the resolved form.
    ValidateConfig {
        #[command(flatten)]
        config: Overrides,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(clap::Args, Serialize)]
struct ProjectArgs {
    #[arg(long, default_value_t = 10_000)]
    n: u32,
    #[arg(long, default_value_t = 100)]
    k: u32,
    #[arg(long, default_value_t = 0.01)]
    p: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Overlap of consecutive caps that counts as converged.
    #[arg(long, default_value_t = 0.95)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = Backend::Lazy)]
    backend: Backend,
    #[arg(long, short)]
    #[serde(skip)]
    output: PathBuf,
}

/// Bad input from the user (exit 2) versus a failure while running (exit 1).
enum Failure {
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn usage<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn internal<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Internal)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    if cli.threads == 0 {
        return Err(Failure::Usage(anyhow!("--threads must be at least 1")));
    }
    let pool = internal(
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build()
            .context("cannot start thread pool"),
    )?;
    let threads = cli.threads;
    pool.install(|| match cli.command {
        Command::Run(c) => run(&c, threads),
        Command::SweepLexicon { common, values } => sweep(&common, threads, "l", &values),
        Command::SweepBeta { common, values } => sweep(&common, threads, "beta", &values),
        Command::SweepTutoring { common, values } => {
            sweep(&common, threads, "tutoring_interval", &values)
        }
        Command::ProjectDemo(args) => project_demo(&args, threads),
        Command::Bench {
            config,
            output,
            steps,
        } => bench(&config, &output, steps, threads),
        Command::ValidateConfig { config, output } => validate(&config, output.as_deref()),
    })
}

fn argv() -> Vec<String> {
    std::env::args().collect()
}

fn manifest<'a, C: Serialize>(
    command: &'a str,
    seed: u64,
    threads: usize,
    config: &'a C,
) -> Manifest<'a, C> {
    Manifest {
        tool: "nemo",
        version: env!("CARGO_PKG_VERSION"),
        build: env!("NEMO_BUILD_ID"),
        command,
        argv: argv(),
        seed,
        threads,
        config,
        started_at: now(),
        finished_at: None,
        outcome: None,
    }
}

fn finish<C: Serialize>(
    out: &OutDir,
    mut m: Manifest<'_, C>,
    outcome: serde_json::Value,
) -> Outcome {
    m.finished_at = Some(now());
    m.outcome = Some(outcome);
    internal(out.write_json("manifest.json", &m))
}

fn run(c: &Common, threads: usize) -> Outcome {
    let resolved = usage(resolve(&c.config))?;
    let out = internal(OutDir::create(&c.output))?;
    let cfg = &resolved.experiment;
    let m = manifest("run", cfg.seed, threads, &resolved);
    internal(out.write_json("manifest.json", &m))?;
    log::info!(
        "running {} trial(s), budget {} sentences",
        cfg.repeats,
        cfg.max_sentences
    );
    let trials = internal(run_trials(cfg).map_err(Into::into))?;
    internal(out.write_trials_csv("trial.csv", &trials, c.timing))?;
    let criteria: Vec<_> = trials
        .iter()
        .map(|t| {
            serde_json::json!({
                "trial": t.trial,
                "seed": t.seed,
                "sentences_to_success": t.sentences_to_success,
                "sentences_run": t.sentences_run,
                "tutoring_rounds": t.tutoring_rounds,
                "wallclock_ms": t.wallclock_ms,
                "progress": t.progress,
                "words": t.reports,
            })
        })
        .collect();
    internal(out.write_json("criteria.json", &criteria))?;
    let successes = trials.iter().filter(|t| t.success()).count();
    for t in &trials {
        match t.sentences_to_success {
            Some(m) => log::info!("trial {}: success after {m} sentences", t.trial),
            None => log::warn!(
                "trial {}: budget of {} sentences exhausted",
                t.trial,
                cfg.max_sentences
            ),
        }
    }
    finish(
        &out,
        m,
        serde_json::json!({ "trials": trials.len(), "successes": successes }),
    )
}

fn sweep(c: &Common, threads: usize, variable: &str, values: &Option<String>) -> Outcome {
    let resolved = usage(resolve(&c.config))?;
    let raw = usage(sweep_values(values, &resolved.sweep, variable))?;
    let base = &resolved.experiment;
    let run: Box<dyn FnOnce() -> nemo::Result<SweepResult> + '_> = match variable {
        "l" => {
            let ls = usage(parse_all(&raw, |s| {
                s.parse::<usize>()
                    .map_err(|e| anyhow!("l value `{s}`: {e}"))
            }))?;
            let scale = !resolved.budget_explicit;
            Box::new(move || sweep_lexicon(base, &ls, scale))
        }
        "beta" => {
            let bs = usage(parse_all(&raw, |s| {
                s.parse::<f64>()
                    .map_err(|e| anyhow!("beta value `{s}`: {e}"))
            }))?;
            Box::new(move || sweep_beta(base, &bs))
        }
        _ => {
            let is = usage(parse_all(&raw, parse_interval))?;
            Box::new(move || sweep_tutoring(base, &is))
        }
    };
    let out = internal(OutDir::create(&c.output))?;
    sweep_finish(c, &out, threads, &resolved, variable, run)
}

fn parse_all<T>(raw: &[String], f: impl Fn(&str) -> anyhow::Result<T>) -> anyhow::Result<Vec<T>> {
    if raw.is_empty() {
        return Err(anyhow!("empty sweep value list"));
    }
    raw.iter().map(|s| f(s)).collect()
}

fn sweep_finish(
    c: &Common,
    out: &OutDir,
    threads: usize,
    resolved: &Resolved,
    variable: &str,
    run: impl FnOnce() -> nemo::Result<SweepResult>,
) -> Outcome {
    let command = format!("sweep-{variable}");
    let m = manifest(&command, resolved.experiment.seed, threads, resolved);
    internal(out.write_json("manifest.json", &m))?;
    let result = internal(run().map_err(Into::into))?;
    let trials: Vec<_> = result
        .points
        .iter()
        .flat_map(|p| p.trials.iter().cloned())
        .collect();
    internal(out.write_trials_csv("trial.csv", &trials, c.timing))?;
    internal(out.write_json("sweep.json", &result))?;
    for p in &result.points {
        log::info!(
            "{variable}={}: mean {:?}, std {:?}, failures {}/{}",
            p.value,
            p.mean,
            p.std,
            p.failures,
            p.trials.len()
        );
    }
    let summary: Vec<_> = result
        .points
        .iter()
        .map(|p| serde_json::json!({ "value": p.value, "mean": p.mean, "std": p.std, "failures": p.failures }))
        .collect();
    finish(out, m, serde_json::json!({ "points": summary }))
}

fn project_demo(args: &ProjectArgs, threads: usize) -> Outcome {
    let out = internal(OutDir::create(&args.output))?;
    let m = manifest("project-demo", args.seed, threads, args);
    internal(out.write_json("manifest.json", &m))?;
    let (mut net, stim, target) = usage(
        projection_setup(args.n, args.k, args.p, args.beta, args.backend, args.seed)
            .map_err(Into::into),
    )?;
    let (_, trace) =
        internal(project(&mut net, &stim, target, args.steps, args.threshold).map_err(Into::into))?;
    println!("step  overlap(b_t, b_t+1)");
    for (i, o) in trace.overlaps.iter().enumerate() {
        println!("{:>4}  {o:.3}", i + 1);
    }
    match trace.converged_at {
        Some(s) => println!("converged at step {s} (threshold {})", args.threshold),
        None => println!(
            "no convergence within {} steps (threshold {})",
            args.steps, args.threshold
        ),
    }
    internal(out.write_json("trace.json", &trace))?;
    finish(&out, m, serde_json::to_value(&trace).unwrap_or_default())
}

#[derive(Serialize)]
struct BenchReport {
    steps: u32,
    seconds: f64,
    steps_per_second: f64,
    backend: Backend,
    synapses: usize,
    synapse_heap_bytes: usize,
    peak_rss_bytes: Option<u64>,
    /// Memory an explicit backend would need for the same organ:
    /// `sum over connectomes of n_src * n_dst * p * 12` bytes.
    explicit_estimate_bytes: f64,
}

fn explicit_estimate(cfg: &ExperimentConfig) -> f64 {
    let o = &cfg.organ;
    let pair = |a: &nemo::AreaParams, b: &nemo::AreaParams| {
        f64::from(a.n) * f64::from(b.n) * b.p + f64::from(b.n) * f64::from(a.n) * a.p
    };
    let rec = |a: &nemo::AreaParams| f64::from(a.n) * (f64::from(a.n) - 1.0) * a.p;
    let synapses = pair(&o.phon, &o.lex_n)
        + pair(&o.phon, &o.lex_v)
        + pair(&o.visual, &o.lex_n)
        + pair(&o.motor, &o.lex_v)
        + o.contexts as f64 * (pair(&o.context, &o.lex_n) + pair(&o.context, &o.lex_v))
        + rec(&o.lex_n)
        + rec(&o.lex_v);
    synapses * 12.0
}

fn bench(ov: &Overrides, output: &std::path::Path, steps: u32, threads: usize) -> Outcome {
    let resolved = usage(resolve(ov))?;
    let out = internal(OutDir::create(output))?;
    let cfg = &resolved.experiment;
    let m = manifest("bench", cfg.seed, threads, &resolved);
    internal(out.write_json("manifest.json", &m))?;
    let lexicon =
        internal(Lexicon::build(cfg.l, cfg.organ.contexts, cfg.seed).map_err(Into::into))?;
    let mut organ_cfg = cfg.organ.clone();
    organ_cfg.seed = cfg.seed;
    let mut organ = internal(Organ::build(organ_cfg, lexicon).map_err(Into::into))?;
    let mut r = rng::stream(cfg.seed, "bench");
    let per_sentence = 2 * cfg.organ.tau;
    let sentences = steps.div_ceil(per_sentence).max(1);
    let started = Instant::now();
    for _ in 0..sentences {
        let s = sample_sentence(organ.lexicon(), cfg.organ.order, &mut r);
        internal(organ.feed_sentence(&s).map_err(Into::into))?;
    }
    let seconds = started.elapsed().as_secs_f64();
    let done = sentences * per_sentence;
    let report = BenchReport {
        steps: done,
        seconds,
        steps_per_second: f64::from(done) / seconds.max(1e-9),
        backend: cfg.organ.backend,
        synapses: organ.network.synapse_count(),
        synapse_heap_bytes: organ.network.heap_bytes(),
        peak_rss_bytes: peak_rss_bytes(),
        explicit_estimate_bytes: explicit_estimate(cfg),
    };
    println!(
        "{} steps in {:.2} s ({:.1} steps/s), backend {}, peak RSS {}, explicit estimate {:.0} MiB",
        report.steps,
        report.seconds,
        report.steps_per_second,
        report.backend,
        report.peak_rss_bytes.map_or("unknown".into(), |b| format!(
            "{:.0} MiB",
            b as f64 / 1048576.0
        )),
        report.explicit_estimate_bytes / 1048576.0
    );
    internal(out.write_json("bench.json", &report))?;
    finish(&out, m, serde_json::to_value(&report).unwrap_or_default())
}

fn validate(ov: &Overrides, output: Option<&std::path::Path>) -> Outcome {
    let resolved = usage(resolve(ov))?;
    let text = internal(serde_json::to_string_pretty(&resolved).map_err(Into::into))?;
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if let Some(dir) = output {
        let out = internal(OutDir::create(dir))?;
        let m = manifest("validate-config", resolved.experiment.seed, 1, &resolved);
        finish(&out, m, serde_json::json!("valid"))?;
    }
    Ok(())
}
