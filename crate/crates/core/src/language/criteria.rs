//! Success criteria of the acquisition experiment.
//!
//! * P: perceptual + context assemblies, routed through the correct
//!   lexical area, reactivate the word's PHON assembly.
//! * Q1: when `PHON[W]` fires once, the cap ν in the correct lexical area
//!   receives at least twice the input of the cap μ in the other one.
//! * Q2: ν reactivates `PHON[W]` and the word's perceptual assembly; μ
//!   activates none of the assemblies in PHON or the other perceptual area.
//! * Q3: ν reproduces itself through recurrent synapses, μ does not.
//!
//! Every readout runs with plasticity off and leaves all areas silent.

use serde::{Deserialize, Serialize};

use super::lexicon::Word;
use super::organ::Organ;
use crate::assembly::{fire_once, overlap_sets};
use crate::error::Result;
use crate::network::{Activity, Assembly, ClampMap, StepPlan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Minimum overlap for an assembly to count as activated (inclusive).
    pub activate: f64,
    /// An assembly with overlap strictly below this is not activated.
    pub silent: f64,
    /// Required ratio of ν input to μ input (inclusive).
    pub input_ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            activate: 0.75,
            silent: 0.5,
            input_ratio: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PResult {
    pub pass: bool,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q1Result {
    pub pass: bool,
    /// `nu_input / mu_input`; infinite (serialized as null) when μ is silent.
    pub ratio: f64,
    pub nu_input: f64,
    pub mu_input: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q2Result {
    pub pass: bool,
    pub nu_phon: f64,
    pub nu_semantic: f64,
    /// Largest overlap of μ's PHON cap with any word's PHON assembly.
    pub mu_phon_max: f64,
    /// Largest overlap of μ's cap in the other perceptual area with any
    /// assembly there.
    pub mu_semantic_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q3Result {
    pub pass: bool,
    pub self_overlap: f64,
    pub cross_overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub word: usize,
    pub pos: super::lexicon::Pos,
    pub p: PResult,
    pub q1: Q1Result,
    pub q2: Q2Result,
    pub q3: Q3Result,
}

impl CriterionReport {
    pub fn pass(&self) -> bool {
        self.p.pass && self.q1.pass && self.q2.pass && self.q3.pass
    }

    /// Names of the failed criteria.
    pub fn failures(&self) -> Vec<&'static str> {
        [
            ("P", self.p.pass),
            ("Q1", self.q1.pass),
            ("Q2", self.q2.pass),
            ("Q3", self.q3.pass),
        ]
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| name)
        .collect()
    }

    pub fn passed_count(&self) -> usize {
        4 - self.failures().len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub pass: bool,
    pub words: Vec<CriterionReport>,
}

impl SuccessReport {
    pub fn passed_count(&self) -> usize {
        self.words.iter().map(CriterionReport::passed_count).sum()
    }
}

/// Caps ν and μ formed when `PHON[W]` fires once, with their total inputs.
struct Probe {
    nu: Assembly,
    mu: Assembly,
    nu_input: f64,
    mu_input: f64,
}

fn probe(organ: &mut Organ, w: &Word) -> Result<Probe> {
    let areas = organ.areas().clone();
    let (own, other) = (areas.lex(w.pos), areas.lex(w.pos.other()));
    let phon = organ.phon(w).clone();
    organ
        .network
        .reset_readout_stream(&format!("probe:{}", w.id));
    fire_once(&mut organ.network, &[&phon], &[own, other])?;
    let net = &organ.network;
    let out = Probe {
        nu: Assembly::new(own, net.winners(own).to_vec()),
        mu: Assembly::new(other, net.winners(other).to_vec()),
        nu_input: net.winner_inputs(own).iter().sum(),
        mu_input: net.winner_inputs(other).iter().sum(),
    };
    organ.network.clear_firing();
    Ok(out)
}

pub fn check_p(organ: &mut Organ, w: &Word, th: &Thresholds) -> Result<PResult> {
    let areas = organ.areas().clone();
    let lex = areas.lex(w.pos);
    let mut clamps = ClampMap::new().with(organ.semantic(w).clone());
    if let Some(c) = organ.context(w) {
        clamps.insert(c.clone());
    }
    let net = &mut organ.network;
    net.reset_readout_stream(&format!("P:{}", w.id));
    net.clear_firing();
    net.step_with(&StepPlan::new(clamps, Activity::Only(vec![lex]), false))?;
    let cap = Assembly::new(lex, net.winners(lex).to_vec());
    fire_once(net, &[&cap], &[areas.phon])?;
    let overlap = overlap_sets(organ.network.winners(areas.phon), organ.phon(w).neurons());
    organ.network.clear_firing();
    Ok(PResult {
        pass: overlap >= th.activate,
        overlap,
    })
}

fn q1_from(p: &Probe, th: &Thresholds) -> Q1Result {
    let ratio = if p.mu_input > 0.0 {
        p.nu_input / p.mu_input
    } else if p.nu_input > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Q1Result {
        pass: !p.nu.is_empty() && p.nu_input >= th.input_ratio * p.mu_input,
        ratio,
        nu_input: p.nu_input,
        mu_input: p.mu_input,
    }
}

pub fn check_q1(organ: &mut Organ, w: &Word, th: &Thresholds) -> Result<Q1Result> {
    let p = probe(organ, w)?;
    Ok(q1_from(&p, th))
}

fn q2_from(organ: &mut Organ, w: &Word, p: &Probe, th: &Thresholds) -> Result<Q2Result> {
    let areas = organ.areas().clone();
    let (sem, other_sem) = (areas.semantic(w.pos), areas.semantic(w.pos.other()));

    organ
        .network
        .reset_readout_stream(&format!("Q2nu:{}", w.id));
    fire_once(&mut organ.network, &[&p.nu], &[areas.phon, sem])?;
    let nu_phon = overlap_sets(organ.network.winners(areas.phon), organ.phon(w).neurons());
    let nu_semantic = overlap_sets(organ.network.winners(sem), organ.semantic(w).neurons());

    organ
        .network
        .reset_readout_stream(&format!("Q2mu:{}", w.id));
    fire_once(&mut organ.network, &[&p.mu], &[areas.phon, other_sem])?;
    let phon_cap = organ.network.winners(areas.phon).to_vec();
    let sem_cap = organ.network.winners(other_sem).to_vec();
    let words: Vec<Word> = organ.lexicon().words().copied().collect();
    let mu_phon_max = words
        .iter()
        .map(|x| overlap_sets(&phon_cap, organ.phon(x).neurons()))
        .fold(0.0, f64::max);
    let mu_semantic_max = organ
        .lexicon()
        .of(w.pos.other())
        .iter()
        .map(|x| overlap_sets(&sem_cap, organ.semantic(x).neurons()))
        .fold(0.0, f64::max);
    organ.network.clear_firing();
    Ok(Q2Result {
        pass: nu_phon >= th.activate
            && nu_semantic >= th.activate
            && mu_phon_max < th.silent
            && mu_semantic_max < th.silent,
        nu_phon,
        nu_semantic,
        mu_phon_max,
        mu_semantic_max,
    })
}

pub fn check_q2(organ: &mut Organ, w: &Word, th: &Thresholds) -> Result<Q2Result> {
    let p = probe(organ, w)?;
    q2_from(organ, w, &p, th)
}

fn q3_from(organ: &mut Organ, w: &Word, p: &Probe, th: &Thresholds) -> Result<Q3Result> {
    organ
        .network
        .reset_readout_stream(&format!("Q3nu:{}", w.id));
    fire_once(&mut organ.network, &[&p.nu], &[p.nu.area])?;
    let self_overlap = overlap_sets(organ.network.winners(p.nu.area), p.nu.neurons());
    organ
        .network
        .reset_readout_stream(&format!("Q3mu:{}", w.id));
    fire_once(&mut organ.network, &[&p.mu], &[p.mu.area])?;
    let cross_overlap = overlap_sets(organ.network.winners(p.mu.area), p.mu.neurons());
    organ.network.clear_firing();
    Ok(Q3Result {
        pass: !p.nu.is_empty() && self_overlap >= th.activate && cross_overlap < th.silent,
        self_overlap,
        cross_overlap,
    })
}

pub fn check_q3(organ: &mut Organ, w: &Word, th: &Thresholds) -> Result<Q3Result> {
    let p = probe(organ, w)?;
    q3_from(organ, w, &p, th)
}

pub fn check_word(organ: &mut Organ, w: &Word, th: &Thresholds) -> Result<CriterionReport> {
    let p_res = check_p(organ, w, th)?;
    let probe = probe(organ, w)?;
    let q1 = q1_from(&probe, th);
    let q2 = q2_from(organ, w, &probe, th)?;
    let q3 = q3_from(organ, w, &probe, th)?;
    Ok(CriterionReport {
        word: w.id,
        pos: w.pos,
        p: p_res,
        q1,
        q2,
        q3,
    })
}

/// Evaluates P and Q1-Q3 for every word. Weights are never modified.
pub fn check_success(organ: &mut Organ, th: &Thresholds) -> Result<SuccessReport> {
    let words: Vec<Word> = organ.lexicon().words().copied().collect();
    let reports = words
        .iter()
        .map(|w| check_word(organ, w, th))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuccessReport {
        pass: reports.iter().all(CriterionReport::pass),
        words: reports,
    })
}
