//! JSON run configuration and its resolution against presets and flags.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use nemo::experiment::{default_budget, ExperimentConfig};
use nemo::language::{OrganConfig, WordOrder};
use nemo::{AreaParams, Backend};
use serde::{Deserialize, Serialize};

/// Area names accepted under `areas`. `default` applies to every area and
/// `CONTEXT` to every `CONTEXT_i`.
const AREA_KEYS: [&str; 7] = [
    "default", "PHON", "LEX_N", "LEX_V", "VISUAL", "MOTOR", "CONTEXT",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaSpec {
    pub n: Option<u32>,
    pub k: Option<u32>,
    pub p: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: String,
    pub values: Vec<serde_json::Value>,
}

/// Tutoring setting as written in a file: an interval or `null`/`"none"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntervalSpec {
    Every(u32),
    Label(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub areas: BTreeMap<String, AreaSpec>,
    pub tau: Option<u32>,
    pub order: Option<WordOrder>,
    pub l: Option<usize>,
    #[serde(rename = "C")]
    pub contexts: Option<usize>,
    pub backend: Option<Backend>,
    pub seed: Option<u64>,
    pub max_sentences: Option<u32>,
    pub eval_every: Option<u32>,
    #[serde(default, deserialize_with = "some_interval")]
    pub tutoring_interval: Option<Option<IntervalSpec>>,
    pub repeats: Option<u32>,
    pub sweep: Option<SweepSpec>,
}

/// Keeps an explicit `null` distinct from an absent key.
fn some_interval<'de, D>(d: D) -> Result<Option<Option<IntervalSpec>>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    Option::<IntervalSpec>::deserialize(d).map(Some)
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))
    }
}

/// Settings given on the command line; each overrides the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Start from a built-in parameter set: desk, fig2a, fig2b.
    #[arg(long)]
    pub preset: Option<String>,
    /// Master seed (falls back to the file, then NEMO_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Plasticity rate of every area.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Nouns (and verbs) in the lexicon.
    #[arg(long)]
    pub l: Option<usize>,
    /// Number of extra context areas.
    #[arg(long = "contexts", short = 'C')]
    pub contexts: Option<usize>,
    #[arg(long)]
    pub tau: Option<u32>,
    /// SV or VS.
    #[arg(long)]
    pub order: Option<WordOrder>,
    /// explicit or lazy.
    #[arg(long)]
    pub backend: Option<Backend>,
    #[arg(long)]
    pub max_sentences: Option<u32>,
    #[arg(long)]
    pub eval_every: Option<u32>,
    /// Tutor one word every this many sentences, or `none`.
    #[arg(long)]
    pub tutoring_interval: Option<String>,
    #[arg(long)]
    pub repeats: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub experiment: ExperimentConfig,
    /// Whether the sentence budget was set rather than defaulted.
    pub budget_explicit: bool,
    pub sweep: Option<SweepSpec>,
}

pub fn preset(name: &str) -> anyhow::Result<ExperimentConfig> {
    match name {
        "desk" => Ok(ExperimentConfig::desk()),
        "fig2a" => Ok(ExperimentConfig::fig2a()),
        "fig2b" => Ok(ExperimentConfig::fig2b()),
        other => bail!("unknown preset `{other}` (expected desk, fig2a or fig2b)"),
    }
}

pub fn parse_interval(s: &str) -> anyhow::Result<Option<u32>> {
    match s {
        "none" => Ok(None),
        _ => {
            let j: u32 = s.parse().map_err(|_| {
                anyhow!("tutoring_interval: expected a positive integer or `none`, got `{s}`")
            })?;
            Ok(Some(j))
        }
    }
}

fn interval_from_spec(spec: &Option<IntervalSpec>) -> anyhow::Result<Option<u32>> {
    match spec {
        None => Ok(None),
        Some(IntervalSpec::Every(j)) => Ok(Some(*j)),
        Some(IntervalSpec::Label(s)) => parse_interval(s),
    }
}

fn area_slot<'a>(organ: &'a mut OrganConfig, key: &str) -> &'a mut AreaParams {
    match key {
        "PHON" => &mut organ.phon,
        "LEX_N" => &mut organ.lex_n,
        "LEX_V" => &mut organ.lex_v,
        "VISUAL" => &mut organ.visual,
        "MOTOR" => &mut organ.motor,
        _ => &mut organ.context,
    }
}

/// Applies `areas` entries: `default` first, then the named areas.
/// Without a preset every area must end up with `n`, `k`, `p` and `beta`.
fn resolve_areas(
    base: Option<OrganConfig>,
    areas: &BTreeMap<String, AreaSpec>,
) -> anyhow::Result<OrganConfig> {
    for key in areas.keys() {
        if !AREA_KEYS.contains(&key.as_str()) {
            bail!(
                "areas.{key}: unknown area (expected one of {})",
                AREA_KEYS.join(", ")
            );
        }
    }
    let default = areas.get("default").cloned().unwrap_or_default();
    let named = &AREA_KEYS[1..];
    let mut organ = base
        .clone()
        .unwrap_or_else(|| OrganConfig::uniform(1, 1, 0.0, 0.0, 0));
    for key in named {
        let spec = areas.get(*key).cloned().unwrap_or_default();
        let slot = area_slot(&mut organ, key);
        let has_base = base.is_some();
        fn pick<T: Copy>(
            key: &str,
            field: &str,
            own: Option<T>,
            def: Option<T>,
            current: Option<T>,
        ) -> anyhow::Result<T> {
            own.or(def).or(current).ok_or_else(|| {
                anyhow!("areas.{key}.{field}: missing (set it under areas.{key} or areas.default)")
            })
        }
        slot.n = pick(key, "n", spec.n, default.n, has_base.then_some(slot.n))?;
        slot.k = pick(key, "k", spec.k, default.k, has_base.then_some(slot.k))?;
        slot.p = pick(key, "p", spec.p, default.p, has_base.then_some(slot.p))?;
        slot.beta = pick(
            key,
            "beta",
            spec.beta,
            default.beta,
            has_base.then_some(slot.beta),
        )?;
    }
    Ok(organ)
}

/// Resolves preset, then file, then flags, then validates.
pub fn resolve(ov: &Overrides) -> anyhow::Result<Resolved> {
    let file = match &ov.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let base = ov.preset.as_deref().map(preset).transpose()?;
    if base.is_none() && ov.config.is_none() {
        bail!("give --config FILE or --preset NAME");
    }
    let organ = resolve_areas(base.as_ref().map(|b| b.organ.clone()), &file.areas)?;
    let mut cfg = match base {
        Some(mut b) => {
            b.organ = organ;
            b
        }
        None => {
            let l = file.l.or(ov.l).ok_or_else(|| anyhow!("l: missing"))?;
            ExperimentConfig::new(organ, l)
        }
    };
    let mut budget_explicit = false;

    if let Some(v) = file.tau {
        cfg.organ.tau = v;
    }
    if let Some(v) = file.order {
        cfg.organ.order = v;
    }
    if let Some(v) = file.l {
        cfg.l = v;
    }
    if let Some(v) = file.contexts {
        cfg.organ.contexts = v;
    }
    if let Some(v) = file.backend {
        cfg.organ.backend = v;
    }
    if let Some(v) = file.max_sentences {
        cfg.max_sentences = v;
        budget_explicit = true;
    }
    if let Some(v) = file.eval_every {
        cfg.eval_every = v;
    }
    if let Some(v) = &file.tutoring_interval {
        cfg.tutoring_interval = interval_from_spec(v)?;
    }
    if let Some(v) = file.repeats {
        cfg.repeats = v;
    }

    if let Some(v) = ov.beta {
        cfg.organ.set_beta(v);
    }
    if let Some(v) = ov.l {
        cfg.l = v;
    }
    if let Some(v) = ov.contexts {
        cfg.organ.contexts = v;
    }
    if let Some(v) = ov.tau {
        cfg.organ.tau = v;
    }
    if let Some(v) = ov.order {
        cfg.organ.order = v;
    }
    if let Some(v) = ov.backend {
        cfg.organ.backend = v;
    }
    if let Some(v) = ov.max_sentences {
        cfg.max_sentences = v;
        budget_explicit = true;
    }
    if let Some(v) = ov.eval_every {
        cfg.eval_every = v;
    }
    if let Some(v) = &ov.tutoring_interval {
        cfg.tutoring_interval = parse_interval(v)?;
    }
    if let Some(v) = ov.repeats {
        cfg.repeats = v;
    }
    cfg.seed = match ov.seed.or(file.seed) {
        Some(s) => s,
        None => match std::env::var("NEMO_SEED") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| anyhow!("NEMO_SEED: expected an unsigned integer, got `{s}`"))?,
            Err(_) => 0,
        },
    };
    if !budget_explicit {
        cfg.max_sentences = default_budget(cfg.l);
    }
    cfg.validate()?;
    Ok(Resolved {
        experiment: cfg,
        budget_explicit,
        sweep: file.sweep,
    })
}

/// Numeric sweep values from the command line or the file.
pub fn sweep_values(
    cli: &Option<String>,
    spec: &Option<SweepSpec>,
    variable: &str,
) -> anyhow::Result<Vec<String>> {
    if let Some(list) = cli {
        return Ok(list
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect());
    }
    match spec {
        Some(s) if s.variable == variable => Ok(s
            .values
            .iter()
            .map(|v| match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Null => "none".to_string(),
                other => other.to_string(),
            })
            .collect()),
        Some(s) => bail!(
            "sweep.variable: config sweeps `{}`, command sweeps `{variable}`",
            s.variable
        ),
        None => bail!("no sweep values: pass --values or set sweep.values in the config"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(json: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, json.as_bytes()).unwrap();
        f
    }

    fn with_file(f: &tempfile::NamedTempFile) -> Overrides {
        Overrides {
            config: Some(f.path().to_path_buf()),
            ..Default::default()
        }
    }

    const MINIMAL: &str = r#"{"areas": {"default": {"n": 1000, "k": 30, "p": 0.05, "beta": 0.06}}, "l": 2, "C": 1, "seed": 3}"#;

    #[test]
    fn flag_overrides_file() {
        let f = write(
            r#"{"areas": {"default": {"n": 1000, "k": 30, "p": 0.05, "beta": 0.06}}, "l": 2, "C": 0}"#,
        );
        let mut ov = with_file(&f);
        ov.beta = Some(0.1);
        let r = resolve(&ov).unwrap();
        assert_eq!(r.experiment.beta(), 0.1);
        assert!(r.experiment.organ.areas().iter().all(|a| a.beta == 0.1));
    }

    #[test]
    fn out_of_range_p_names_the_key() {
        let f = write(
            r#"{"areas": {"default": {"n": 1000, "k": 30, "p": 0.05, "beta": 0.06}, "PHON": {"p": 1.5}}, "l": 2, "C": 0}"#,
        );
        let err = resolve(&with_file(&f)).unwrap_err();
        assert!(format!("{err:#}").contains("areas.PHON.p"), "{err:#}");
    }

    #[test]
    fn missing_p_is_an_error() {
        let f =
            write(r#"{"areas": {"default": {"n": 1000, "k": 30, "beta": 0.06}}, "l": 2, "C": 0}"#);
        let err = resolve(&with_file(&f)).unwrap_err();
        assert!(format!("{err:#}").contains("areas.PHON.p"), "{err:#}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = write(r#"{"areas": {}, "l": 2, "colour": 1}"#);
        let err = resolve(&with_file(&f)).unwrap_err();
        assert!(format!("{err:#}").contains("colour"), "{err:#}");
        let f = write(r#"{"areas": {"PHONE": {"n": 3}}, "l": 2}"#);
        assert!(format!("{:#}", resolve(&with_file(&f)).unwrap_err()).contains("areas.PHONE"));
        let f = write(r#"{"areas": {"PHON": {"size": 3}}, "l": 2}"#);
        assert!(format!("{:#}", resolve(&with_file(&f)).unwrap_err()).contains("size"));
    }

    #[test]
    fn fig2a_preset_values() {
        let ov = Overrides {
            preset: Some("fig2a".into()),
            ..Default::default()
        };
        let e = resolve(&ov).unwrap().experiment;
        assert_eq!(e.organ.phon.n, 100_000);
        assert_eq!(e.organ.phon.p, 0.05);
        assert_eq!(e.beta(), 0.06);
        assert_eq!(
            (
                e.organ.lex_n.k,
                e.organ.lex_v.k,
                e.organ.context.k,
                e.organ.visual.k
            ),
            (50, 50, 20, 100)
        );
        assert_eq!((e.organ.contexts, e.organ.tau), (20, 2));
    }

    #[test]
    fn budget_defaults_to_200_per_word() {
        let f = write(MINIMAL);
        let r = resolve(&with_file(&f)).unwrap();
        assert_eq!(r.experiment.max_sentences, 400);
        assert!(!r.budget_explicit);
        let mut ov = with_file(&f);
        ov.max_sentences = Some(7);
        assert_eq!(resolve(&ov).unwrap().experiment.max_sentences, 7);
    }

    #[test]
    fn tutoring_interval_forms() {
        for (json, want) in [("null", None), ("\"none\"", None), ("5", Some(5))] {
            let f = write(&MINIMAL.replace(
                "\"seed\": 3",
                &format!("\"seed\": 3, \"tutoring_interval\": {json}"),
            ));
            assert_eq!(
                resolve(&with_file(&f))
                    .unwrap()
                    .experiment
                    .tutoring_interval,
                want,
                "{json}"
            );
        }
        assert!(parse_interval("often").is_err());
    }

    #[test]
    fn seed_precedence() {
        let f = write(MINIMAL);
        assert_eq!(resolve(&with_file(&f)).unwrap().experiment.seed, 3);
        let mut ov = with_file(&f);
        ov.seed = Some(9);
        assert_eq!(resolve(&ov).unwrap().experiment.seed, 9);
    }

    #[test]
    fn sweep_values_from_file_or_flag() {
        let spec = Some(SweepSpec {
            variable: "beta".into(),
            values: serde_json::from_str("[0.03, 0.06, 0.1]").unwrap(),
        });
        assert_eq!(
            sweep_values(&None, &spec, "beta").unwrap(),
            ["0.03", "0.06", "0.1"]
        );
        assert_eq!(
            sweep_values(&Some("2,3".into()), &spec, "l").unwrap(),
            ["2", "3"]
        );
        assert!(sweep_values(&None, &spec, "l").is_err());
        assert!(sweep_values(&None, &None, "l").is_err());
    }
}
