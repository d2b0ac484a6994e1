//! Training trials and parameter sweeps.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NemoError, Result};
use crate::language::criteria::{check_success, CriterionReport, Thresholds};
use crate::language::lexicon::{sample_sentence, Lexicon, WordOrder};
use crate::language::organ::{Organ, OrganConfig};
use crate::params::Backend;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub organ: OrganConfig,
    /// Nouns (and verbs) in the lexicon.
    pub l: usize,
    pub max_sentences: u32,
    /// Evaluate success after every this many sentences.
    pub eval_every: u32,
    /// Tutor a random word after every this many sentences.
    pub tutoring_interval: Option<u32>,
    pub repeats: u32,
    pub seed: u64,
    #[serde(default)]
    pub thresholds: Thresholds,
}

/// Sentence budget used when none is configured.
pub fn default_budget(l: usize) -> u32 {
    200 * l as u32
}

impl ExperimentConfig {
    pub fn new(organ: OrganConfig, l: usize) -> Self {
        Self {
            organ,
            l,
            max_sentences: default_budget(l),
            eval_every: 1,
            tutoring_interval: None,
            repeats: 1,
            seed: 0,
            thresholds: Thresholds::default(),
        }
    }

    /// Desk-scale setting: `n = 10^4`, `k = 100`, lexical `k = 50`, context
    /// `k = 20`, `p = 0.05`, `beta = 0.1`, `C = 5`, `tau = 2`, `l = 3`.
    pub fn desk() -> Self {
        let mut organ = OrganConfig::uniform(10_000, 100, 0.05, 0.1, 5);
        organ.set_lex_k(50);
        organ.context.k = 20;
        Self::new(organ, 3)
    }

    /// Full-scale lexicon-sweep setting: `n = 10^5`, `p = 0.05`,
    /// `beta = 0.06`, lexical `k = 50`, context `k = 20`, other `k = 100`,
    /// `C = 20`, `tau = 2`.
    pub fn fig2a() -> Self {
        let mut organ = OrganConfig::uniform(100_000, 100, 0.05, 0.06, 20);
        organ.set_lex_k(50);
        organ.context.k = 20;
        Self::new(organ, 4)
    }

    /// β-sweep setting: as [`Self::fig2a`] without extra context areas, `l = 4`.
    pub fn fig2b() -> Self {
        let mut cfg = Self::fig2a();
        cfg.organ.contexts = 0;
        cfg.l = 4;
        cfg.max_sentences = default_budget(4);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.organ.validate()?;
        if self.l == 0 {
            return Err(NemoError::param("l", "must be at least 1"));
        }
        if self.repeats == 0 {
            return Err(NemoError::param("repeats", "must be at least 1"));
        }
        if self.eval_every == 0 {
            return Err(NemoError::param("eval_every", "must be at least 1"));
        }
        if self.tutoring_interval == Some(0) {
            return Err(NemoError::param("tutoring_interval", "must be at least 1"));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.organ.lex_n.beta
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.organ.set_beta(beta);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u32,
    pub seed: u64,
    pub order: WordOrder,
    pub l: usize,
    #[serde(rename = "C")]
    pub contexts: usize,
    pub beta: f64,
    pub tau: u32,
    pub backend: Backend,
    pub tutoring_interval: Option<u32>,
    pub sentences_to_success: Option<u32>,
    pub sentences_run: u32,
    pub tutoring_rounds: u32,
    pub wallclock_ms: u64,
    /// Passed criteria (summed over words) at each evaluation.
    pub progress: Vec<usize>,
    pub reports: Vec<CriterionReport>,
}

impl TrialResult {
    pub fn success(&self) -> bool {
        self.sentences_to_success.is_some()
    }
}

/// Seed of trial `index` under a master seed; independent of every other trial.
pub fn trial_seed(master: u64, index: u32) -> u64 {
    rng::derive_seed(master, &format!("trial:{index}"))
}

/// Trains a fresh organ on random sentences until P and Q hold for every
/// word or the sentence budget runs out. `config.seed` seeds the trial.
pub fn train_until_success(config: &ExperimentConfig) -> Result<TrialResult> {
    run_seeded(config, 0, config.seed)
}

/// Runs trial `index` of the configuration (seed derived from the master).
pub fn run_trial(config: &ExperimentConfig, index: u32) -> Result<TrialResult> {
    run_seeded(config, index, trial_seed(config.seed, index))
}

fn run_seeded(config: &ExperimentConfig, index: u32, seed: u64) -> Result<TrialResult> {
    config.validate()?;
    let started = Instant::now();
    let lexicon = Lexicon::build(
        config.l,
        config.organ.contexts,
        rng::derive_seed(seed, "lexicon"),
    )?;
    let mut organ_cfg = config.organ.clone();
    organ_cfg.seed = rng::derive_seed(seed, "organ");
    let mut organ = Organ::build(organ_cfg, lexicon)?;
    let mut sentences = rng::stream(seed, "sentences");
    let mut tutoring = rng::stream(seed, "tutoring");
    let words: Vec<_> = organ.lexicon().words().copied().collect();

    let mut result = TrialResult {
        trial: index,
        seed,
        order: config.organ.order,
        l: config.l,
        contexts: config.organ.contexts,
        beta: config.beta(),
        tau: config.organ.tau,
        backend: config.organ.backend,
        tutoring_interval: config.tutoring_interval,
        sentences_to_success: None,
        sentences_run: 0,
        tutoring_rounds: 0,
        wallclock_ms: 0,
        progress: Vec::new(),
        reports: Vec::new(),
    };
    for m in 1..=config.max_sentences {
        let s = sample_sentence(organ.lexicon(), config.organ.order, &mut sentences);
        organ.feed_sentence(&s)?;
        result.sentences_run = m;
        if let Some(j) = config.tutoring_interval {
            if m % j == 0 {
                let w = words[rand::Rng::random_range(&mut tutoring, 0..words.len())];
                organ.tutor_word(&w)?;
                result.tutoring_rounds += 1;
            }
        }
        if m % config.eval_every == 0 || m == config.max_sentences {
            let report = check_success(&mut organ, &config.thresholds)?;
            result.progress.push(report.passed_count());
            let pass = report.pass;
            result.reports = report.words;
            if pass {
                result.sentences_to_success = Some(m);
                break;
            }
        }
    }
    result.wallclock_ms = started.elapsed().as_millis() as u64;
    log::info!(
        "trial {index} (l={}, beta={}, order={}): {}",
        config.l,
        config.beta(),
        config.organ.order,
        match result.sentences_to_success {
            Some(m) => format!("success after {m} sentences"),
            None => format!("no success within {} sentences", config.max_sentences),
        }
    );
    Ok(result)
}

/// Runs `config.repeats` trials, in parallel on the current rayon pool.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    (0..config.repeats)
        .into_par_iter()
        .map(|i| run_trial(config, i))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Mean sentences-to-success over successful trials.
    pub mean: Option<f64>,
    /// Sample standard deviation (n - 1); 0 for a single success.
    pub std: Option<f64>,
    pub successes: usize,
    pub failures: usize,
    /// Set when the std rests on a single success.
    pub single: bool,
}

pub fn aggregate(trials: &[TrialResult]) -> Result<Aggregate> {
    summarize(
        &trials
            .iter()
            .map(|t| t.sentences_to_success)
            .collect::<Vec<_>>(),
    )
}

/// Moments of the successful outcomes; failures (`None`) are only counted.
pub fn summarize(outcomes: &[Option<u32>]) -> Result<Aggregate> {
    if outcomes.is_empty() {
        return Err(NemoError::EmptyInput("no trials to aggregate"));
    }
    let xs: Vec<f64> = outcomes.iter().flatten().map(|&m| f64::from(m)).collect();
    let failures = outcomes.len() - xs.len();
    let (mean, std) = match xs.len() {
        0 => (None, None),
        1 => (Some(xs[0]), Some(0.0)),
        n => {
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (Some(mean), Some(var.sqrt()))
        }
    };
    Ok(Aggregate {
        mean,
        std,
        successes: xs.len(),
        failures,
        single: xs.len() == 1,
    })
}

/// A sweep coordinate: a number, or a label such as `"none"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Label(String),
}

impl std::fmt::Display for SweepValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepValue::Number(x) => write!(f, "{x}"),
            SweepValue::Label(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: SweepValue,
    pub trials: Vec<TrialResult>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub variable: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn means(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.mean).collect()
    }
}

/// Runs every (point, repeat) pair on the current rayon pool. Repeat `i`
/// uses the same trial seed at every point.
fn sweep(variable: &str, configs: Vec<(SweepValue, ExperimentConfig)>) -> Result<SweepResult> {
    for (_, c) in &configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, u32)> = configs
        .iter()
        .enumerate()
        .flat_map(|(p, (_, c))| (0..c.repeats).map(move |i| (p, i)))
        .collect();
    let results: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(p, i)| run_trial(&configs[p].1, i))
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(configs.len());
    let mut iter = results.into_iter();
    for (value, c) in configs {
        let trials: Vec<TrialResult> = iter.by_ref().take(c.repeats as usize).collect();
        let agg = aggregate(&trials)?;
        if agg.failures > 0 {
            log::warn!(
                "{variable}={value}: {} of {} trials failed",
                agg.failures,
                trials.len()
            );
        }
        points.push(SweepPoint {
            value,
            trials,
            mean: agg.mean,
            std: agg.std,
            failures: agg.failures,
        });
    }
    Ok(SweepResult {
        variable: variable.to_string(),
        points,
    })
}

/// Varies the lexicon size. When `scale_budget` is set, each point gets the
/// default budget for its `l`.
pub fn sweep_lexicon(
    base: &ExperimentConfig,
    ls: &[usize],
    scale_budget: bool,
) -> Result<SweepResult> {
    let configs = ls
        .iter()
        .map(|&l| {
            let mut c = base.clone();
            c.l = l;
            if scale_budget {
                c.max_sentences = default_budget(l);
            }
            (SweepValue::Number(l as f64), c)
        })
        .collect();
    sweep("l", configs)
}

/// Varies the plasticity rate of every area.
pub fn sweep_beta(base: &ExperimentConfig, betas: &[f64]) -> Result<SweepResult> {
    let configs = betas
        .iter()
        .map(|&b| (SweepValue::Number(b), base.clone().with_beta(b)))
        .collect();
    sweep("beta", configs)
}

/// Varies the tutoring interval; `None` disables tutoring.
pub fn sweep_tutoring(base: &ExperimentConfig, intervals: &[Option<u32>]) -> Result<SweepResult> {
    let configs = intervals
        .iter()
        .map(|&iv| {
            let mut c = base.clone();
            c.tutoring_interval = iv;
            let value = match iv {
                Some(j) => SweepValue::Number(f64::from(j)),
                None => SweepValue::Label("none".into()),
            };
            (value, c)
        })
        .collect();
    sweep("tutoring_interval", configs)
}
