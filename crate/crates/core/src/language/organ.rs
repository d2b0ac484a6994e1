//! The language organ: PHON, the two lexical areas, VISUAL, MOTOR and the
//! extra context areas, plus the two training stimuli (sentences and single
//! word tutoring).

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::lexicon::{Lexicon, Pos, Sentence, Word, WordOrder};
use crate::error::{NemoError, Result};
use crate::network::{Activity, AreaId, Assembly, ClampMap, Network, NetworkBuilder, StepPlan};
use crate::params::{AreaParams, Backend};
use crate::rng;

pub const PHON: &str = "PHON";
pub const LEX_N: &str = "LEX_N";
pub const LEX_V: &str = "LEX_V";
pub const VISUAL: &str = "VISUAL";
pub const MOTOR: &str = "MOTOR";

pub fn context_name(i: usize) -> String {
    format!("CONTEXT_{i}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganConfig {
    pub phon: AreaParams,
    pub lex_n: AreaParams,
    pub lex_v: AreaParams,
    pub visual: AreaParams,
    pub motor: AreaParams,
    /// Shared parameters of every `CONTEXT_i` area.
    pub context: AreaParams,
    /// Number of extra context areas.
    pub contexts: usize,
    /// Steps each word is heard for.
    pub tau: u32,
    pub order: WordOrder,
    pub backend: Backend,
    pub seed: u64,
}

impl OrganConfig {
    /// Every area with the same `n`, `k`, `p` and `beta`.
    pub fn uniform(n: u32, k: u32, p: f64, beta: f64, contexts: usize) -> Self {
        let a = |name: &str| AreaParams::new(name, n, k, beta, p);
        Self {
            phon: a(PHON),
            lex_n: a(LEX_N),
            lex_v: a(LEX_V),
            visual: a(VISUAL),
            motor: a(MOTOR),
            context: a("CONTEXT"),
            contexts,
            tau: 2,
            order: WordOrder::SV,
            backend: Backend::Lazy,
            seed: 0,
        }
    }

    pub fn areas_mut(&mut self) -> [&mut AreaParams; 6] {
        [
            &mut self.phon,
            &mut self.lex_n,
            &mut self.lex_v,
            &mut self.visual,
            &mut self.motor,
            &mut self.context,
        ]
    }

    pub fn areas(&self) -> [&AreaParams; 6] {
        [
            &self.phon,
            &self.lex_n,
            &self.lex_v,
            &self.visual,
            &self.motor,
            &self.context,
        ]
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.areas_mut().into_iter().for_each(|a| a.beta = beta);
    }

    pub fn set_lex_k(&mut self, k: u32) {
        self.lex_n.k = k;
        self.lex_v.k = k;
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 {
            return Err(NemoError::param("tau", "must be at least 1"));
        }
        self.areas().into_iter().try_for_each(AreaParams::validate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrganAreas {
    pub phon: AreaId,
    pub lex_n: AreaId,
    pub lex_v: AreaId,
    pub visual: AreaId,
    pub motor: AreaId,
    pub contexts: Vec<AreaId>,
}

impl OrganAreas {
    /// Lexical area of a part of speech.
    pub fn lex(&self, pos: Pos) -> AreaId {
        match pos {
            Pos::Noun => self.lex_n,
            Pos::Verb => self.lex_v,
        }
    }

    /// Perceptual area grounding a part of speech.
    pub fn semantic(&self, pos: Pos) -> AreaId {
        match pos {
            Pos::Noun => self.visual,
            Pos::Verb => self.motor,
        }
    }
}

/// Neurons assigned to each word in the pre-initialized areas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAssemblies {
    /// Indexed by word id.
    pub phon: Vec<Assembly>,
    /// VISUAL for nouns, MOTOR for verbs; indexed by word id.
    pub semantic: Vec<Assembly>,
    /// Assembly in `CONTEXT_{i[W]}`; indexed by word id.
    pub context: Vec<Option<Assembly>>,
}

#[derive(Debug, Clone)]
pub struct Organ {
    pub network: Network,
    lexicon: Lexicon,
    areas: OrganAreas,
    config: OrganConfig,
    bound: BoundAssemblies,
}

fn random_assembly(seed: u64, area: AreaId, params: &AreaParams, label: String) -> Assembly {
    let mut r = rng::stream(seed, &format!("assembly:{label}"));
    let neurons: Vec<u32> = index::sample(&mut r, params.n as usize, params.k as usize)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    Assembly::new(area, neurons).with_label(label)
}

impl Organ {
    pub fn build(config: OrganConfig, lexicon: Lexicon) -> Result<Self> {
        config.validate()?;
        if config.contexts != lexicon.contexts() {
            return Err(NemoError::ConfigMismatch(format!(
                "organ has {} context areas, lexicon expects {}",
                config.contexts,
                lexicon.contexts()
            )));
        }
        let mut b = NetworkBuilder::new(config.seed, config.backend);
        let phon = b.area(AreaParams {
            name: PHON.into(),
            ..config.phon.clone()
        });
        let lex_n = b.area(AreaParams {
            name: LEX_N.into(),
            ..config.lex_n.clone()
        });
        let lex_v = b.area(AreaParams {
            name: LEX_V.into(),
            ..config.lex_v.clone()
        });
        let visual = b.area(AreaParams {
            name: VISUAL.into(),
            ..config.visual.clone()
        });
        let motor = b.area(AreaParams {
            name: MOTOR.into(),
            ..config.motor.clone()
        });
        let contexts: Vec<AreaId> = (0..config.contexts)
            .map(|i| {
                b.area(AreaParams {
                    name: context_name(i),
                    ..config.context.clone()
                })
            })
            .collect();
        b.fiber_pair(phon, lex_n)
            .fiber_pair(phon, lex_v)
            .fiber_pair(visual, lex_n)
            .fiber_pair(motor, lex_v);
        for &c in &contexts {
            b.fiber_pair(c, lex_n).fiber_pair(c, lex_v);
        }
        b.recurrent(lex_n).recurrent(lex_v);
        let network = b.build()?;
        let areas = OrganAreas {
            phon,
            lex_n,
            lex_v,
            visual,
            motor,
            contexts,
        };

        let seed = config.seed;
        let mut bound = BoundAssemblies {
            phon: Vec::new(),
            semantic: Vec::new(),
            context: Vec::new(),
        };
        let mut words: Vec<&Word> = lexicon.words().collect();
        words.sort_by_key(|w| w.id);
        for w in words {
            bound.phon.push(random_assembly(
                seed,
                phon,
                network.params(phon),
                format!("PHON[{}]", w.id),
            ));
            let sem = areas.semantic(w.pos);
            let sem_name = &network.params(sem).name;
            bound.semantic.push(random_assembly(
                seed,
                sem,
                network.params(sem),
                format!("{sem_name}[{}]", w.id),
            ));
            bound.context.push(w.context_index.map(|i| {
                let area = areas.contexts[i];
                random_assembly(
                    seed,
                    area,
                    network.params(area),
                    format!("{}[{}]", context_name(i), w.id),
                )
            }));
        }
        Ok(Self {
            network,
            lexicon,
            areas,
            config,
            bound,
        })
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn areas(&self) -> &OrganAreas {
        &self.areas
    }

    pub fn config(&self) -> &OrganConfig {
        &self.config
    }

    pub fn bound(&self) -> &BoundAssemblies {
        &self.bound
    }

    pub fn phon(&self, w: &Word) -> &Assembly {
        &self.bound.phon[w.id]
    }

    pub fn semantic(&self, w: &Word) -> &Assembly {
        &self.bound.semantic[w.id]
    }

    pub fn context(&self, w: &Word) -> Option<&Assembly> {
        self.bound.context[w.id].as_ref()
    }

    /// Fibers as `(source name, destination name)` pairs, recurrent ones included.
    pub fn fibers(&self) -> Vec<(String, String)> {
        self.network
            .connectomes()
            .iter()
            .map(|c| {
                (
                    self.network.params(c.src()).name.clone(),
                    self.network.params(c.dst()).name.clone(),
                )
            })
            .collect()
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        if self.lexicon.contains(w) {
            Ok(())
        } else {
            Err(NemoError::UnknownWord(w.id))
        }
    }

    fn learning_plan(&self, clamps: ClampMap) -> StepPlan {
        StepPlan::new(
            clamps,
            Activity::Only(vec![self.areas.lex_n, self.areas.lex_v]),
            true,
        )
    }

    /// Clamps shared by a whole stimulus: the perceptual assemblies of the
    /// given words and their extra context assemblies.
    fn context_clamps<'a>(&self, words: impl IntoIterator<Item = &'a Word>) -> ClampMap {
        let mut clamps = ClampMap::new();
        for w in words {
            clamps.insert(self.semantic(w).clone());
            if let Some(c) = self.context(w) {
                clamps.insert(c.clone());
            }
        }
        clamps
    }

    /// Presents a grounded sentence: perceptual and context assemblies of
    /// both words fire for all `2 tau` steps, `PHON` of the first word for
    /// the first `tau`, then `PHON` of the second. Only the lexical areas
    /// compute caps. All firing is cleared at the end.
    pub fn feed_sentence(&mut self, s: &Sentence) -> Result<()> {
        s.words.iter().try_for_each(|w| self.check_word(w))?;
        let base = self.context_clamps(&s.words);
        for word in &s.words {
            let mut clamps = base.clone();
            clamps.insert(self.phon(word).clone());
            let plan = self.learning_plan(clamps);
            for _ in 0..self.config.tau {
                self.network.step_with(&plan)?;
            }
        }
        self.network.clear_firing();
        Ok(())
    }

    /// Presents one word on its own: `PHON[W]`, its perceptual assembly and
    /// its context assembly fire for `tau` steps.
    pub fn tutor_word(&mut self, w: &Word) -> Result<()> {
        self.check_word(w)?;
        let mut clamps = self.context_clamps([w]);
        clamps.insert(self.phon(w).clone());
        let plan = self.learning_plan(clamps);
        for _ in 0..self.config.tau {
            self.network.step_with(&plan)?;
        }
        self.network.clear_firing();
        Ok(())
    }

    /// The schedule of clamped assemblies `feed_sentence` uses, one entry
    /// per step.
    pub fn sentence_schedule(&self, s: &Sentence) -> Vec<Vec<Assembly>> {
        let mut out = Vec::new();
        for word in &s.words {
            let mut step: Vec<Assembly> = Vec::new();
            for w in &s.words {
                step.push(self.semantic(w).clone());
                step.extend(self.context(w).cloned());
            }
            step.push(self.phon(word).clone());
            for _ in 0..self.config.tau {
                out.push(step.clone());
            }
        }
        out
    }

    /// JSON manifest of the bound assemblies, for checkpoints.
    pub fn manifest(&self) -> serde_json::Value {
        serde_json::json!({
            "lexicon": self.lexicon.to_json(),
            "areas": (0..self.network.area_count())
                .map(|a| self.network.params(AreaId(a)).name.clone())
                .collect::<Vec<_>>(),
            "assemblies": &self.bound,
        })
    }
}
