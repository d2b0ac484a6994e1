//! Areas, connectomes and the synchronous step function.
//!
//! One step maps the firing at time `t` to the winners at `t + 1`:
//!
//! * a clamped area fires its clamp during the step and holds it afterwards;
//! * a free area receives the summed weights of all firing presynaptic
//!   neurons (fibers plus its own recurrent connectome) and keeps the k-cap;
//! * any other area falls silent.
//!
//! With plasticity on, every synapse from a neuron firing at `t` to a winner
//! at `t + 1` is multiplied by `1 + beta` of the destination area, clamped
//! winners included.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::cap::cap_entries;
use crate::connectome::{bernoulli_indices, Connectome};
use crate::error::{NemoError, Result};
use crate::lazy::{lazy_candidates, InputLaw};
use crate::params::{AreaParams, Backend};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AreaId(pub usize);

impl fmt::Display for AreaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A named set of neurons in one area.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assembly {
    pub area: AreaId,
    neurons: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Assembly {
    /// Builds an assembly; neuron indices are sorted and deduplicated.
    pub fn new(area: AreaId, neurons: impl Into<Vec<u32>>) -> Self {
        let mut neurons = neurons.into();
        neurons.sort_unstable();
        neurons.dedup();
        Self {
            area,
            neurons,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn neurons(&self) -> &[u32] {
        &self.neurons
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    pub fn contains(&self, j: u32) -> bool {
        self.neurons.binary_search(&j).is_ok()
    }
}

/// Assemblies forced to fire during one step. Several assemblies clamped in
/// the same area fire together.
#[derive(Debug, Clone, Default)]
pub struct ClampMap {
    entries: BTreeMap<AreaId, Vec<Assembly>>,
}

impl ClampMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, assembly: Assembly) -> Self {
        self.insert(assembly);
        self
    }

    pub fn insert(&mut self, assembly: Assembly) {
        self.entries
            .entry(assembly.area)
            .or_default()
            .push(assembly);
    }

    pub fn is_clamped(&self, area: AreaId) -> bool {
        self.entries.contains_key(&area)
    }

    pub fn areas(&self) -> impl Iterator<Item = AreaId> + '_ {
        self.entries.keys().copied()
    }

    pub fn assemblies(&self, area: AreaId) -> &[Assembly] {
        self.entries.get(&area).map_or(&[], Vec::as_slice)
    }

    /// Union of the neurons clamped in `area`, sorted.
    pub fn firing(&self, area: AreaId) -> Option<Vec<u32>> {
        let list = self.entries.get(&area)?;
        let mut out: Vec<u32> = list
            .iter()
            .flat_map(|a| a.neurons.iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        Some(out)
    }
}

/// Which unclamped areas compute a new cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Activity {
    AllFree,
    Only(Vec<AreaId>),
}

#[derive(Debug, Clone)]
pub struct StepPlan {
    pub clamps: ClampMap,
    pub free: Activity,
    pub plasticity: bool,
}

impl StepPlan {
    pub fn new(clamps: ClampMap, free: Activity, plasticity: bool) -> Self {
        Self {
            clamps,
            free,
            plasticity,
        }
    }

    fn is_free(&self, area: AreaId) -> bool {
        match &self.free {
            Activity::AllFree => true,
            Activity::Only(list) => list.contains(&area),
        }
    }
}

/// Winner sets of every area after the latest step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiringState {
    pub t: u64,
    /// Sorted winners per area.
    pub winners: Vec<Vec<u32>>,
    /// Synaptic input of each winner (aligned with `winners`); empty for
    /// clamped or externally set areas.
    pub inputs: Vec<Vec<f64>>,
}

impl FiringState {
    fn empty(areas: usize) -> Self {
        Self {
            t: 0,
            winners: vec![Vec::new(); areas],
            inputs: vec![Vec::new(); areas],
        }
    }
}

#[derive(Debug, Clone)]
struct Area {
    params: AreaParams,
    support_mask: Vec<bool>,
    /// Sorted neurons whose incoming synapses are materialized (lazy only).
    support: Vec<u32>,
    rng: StreamRng,
    scratch: Vec<f64>,
}

impl Area {
    fn add_support(&mut self, j: u32) {
        if !self.support_mask[j as usize] {
            self.support_mask[j as usize] = true;
            let pos = self.support.partition_point(|&s| s < j);
            self.support.insert(pos, j);
        }
    }
}

#[derive(Debug, Clone)]
pub struct NetworkBuilder {
    seed: u64,
    backend: Backend,
    areas: Vec<AreaParams>,
    links: Vec<(AreaId, AreaId)>,
}

impl NetworkBuilder {
    pub fn new(seed: u64, backend: Backend) -> Self {
        Self {
            seed,
            backend,
            areas: Vec::new(),
            links: Vec::new(),
        }
    }

    pub fn area(&mut self, params: AreaParams) -> AreaId {
        self.areas.push(params);
        AreaId(self.areas.len() - 1)
    }

    /// One-way fiber from `src` into `dst`.
    pub fn fiber(&mut self, src: AreaId, dst: AreaId) -> &mut Self {
        self.links.push((src, dst));
        self
    }

    pub fn fiber_pair(&mut self, a: AreaId, b: AreaId) -> &mut Self {
        self.fiber(a, b).fiber(b, a)
    }

    pub fn recurrent(&mut self, a: AreaId) -> &mut Self {
        self.fiber(a, a)
    }

    pub fn build(&self) -> Result<Network> {
        let mut names: Vec<&str> = Vec::new();
        for p in &self.areas {
            p.validate()?;
            if names.contains(&p.name.as_str()) {
                return Err(NemoError::param(
                    "areas",
                    format!("duplicate area `{}`", p.name),
                ));
            }
            names.push(&p.name);
        }
        let mut seen = Vec::new();
        let mut connectomes = Vec::with_capacity(self.links.len());
        let mut incoming = vec![Vec::new(); self.areas.len()];
        for &(src, dst) in &self.links {
            let (sp, dp) = match (self.areas.get(src.0), self.areas.get(dst.0)) {
                (Some(s), Some(d)) => (s, d),
                _ => return Err(NemoError::UnknownArea(format!("{src} -> {dst}"))),
            };
            if seen.contains(&(src, dst)) {
                return Err(NemoError::param(
                    "fibers",
                    format!("duplicate fiber {} -> {}", sp.name, dp.name),
                ));
            }
            seen.push((src, dst));
            let seed = rng::derive_seed(self.seed, &format!("connectome:{}->{}", sp.name, dp.name));
            incoming[dst.0].push(connectomes.len());
            connectomes.push(Connectome::sample(src, sp, dst, dp, self.backend, seed)?);
        }
        let areas = self
            .areas
            .iter()
            .map(|p| Area {
                params: p.clone(),
                support_mask: vec![false; p.n as usize],
                support: Vec::new(),
                rng: rng::stream(self.seed, &format!("lazy:{}", p.name)),
                scratch: vec![0.0; p.n as usize],
            })
            .collect::<Vec<_>>();
        let n_areas = areas.len();
        Ok(Network {
            seed: self.seed,
            backend: self.backend,
            areas,
            connectomes,
            incoming,
            state: FiringState::empty(n_areas),
            plastic_steps: 0,
            readout_rng: rng::stream(self.seed, "readout:0"),
        })
    }
}

/// A set of areas joined by connectomes, together with its firing state.
#[derive(Debug, Clone)]
pub struct Network {
    seed: u64,
    backend: Backend,
    areas: Vec<Area>,
    connectomes: Vec<Connectome>,
    incoming: Vec<Vec<usize>>,
    state: FiringState,
    plastic_steps: u64,
    readout_rng: StreamRng,
}

/// Candidate winner that still needs its incoming synapses drawn.
struct Pending {
    neuron: u32,
    total: u32,
}

impl Network {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn area_count(&self) -> usize {
        self.areas.len()
    }

    pub fn params(&self, area: AreaId) -> &AreaParams {
        &self.areas[area.0].params
    }

    pub fn area_id(&self, name: &str) -> Result<AreaId> {
        self.areas
            .iter()
            .position(|a| a.params.name == name)
            .map(AreaId)
            .ok_or_else(|| NemoError::UnknownArea(name.to_string()))
    }

    pub fn connectomes(&self) -> &[Connectome] {
        &self.connectomes
    }

    pub(crate) fn connectomes_mut(&mut self) -> &mut [Connectome] {
        &mut self.connectomes
    }

    pub fn connectome(&self, src: AreaId, dst: AreaId) -> Option<&Connectome> {
        self.incoming
            .get(dst.0)?
            .iter()
            .map(|&c| &self.connectomes[c])
            .find(|c| c.src() == src)
    }

    pub fn connectome_mut(&mut self, src: AreaId, dst: AreaId) -> Option<&mut Connectome> {
        let idx = *self
            .incoming
            .get(dst.0)?
            .iter()
            .find(|&&c| self.connectomes[c].src() == src)?;
        Some(&mut self.connectomes[idx])
    }

    pub fn has_fiber(&self, src: AreaId, dst: AreaId) -> bool {
        self.connectome(src, dst).is_some()
    }

    pub fn state(&self) -> &FiringState {
        &self.state
    }

    pub fn winners(&self, area: AreaId) -> &[u32] {
        &self.state.winners[area.0]
    }

    pub fn winner_inputs(&self, area: AreaId) -> &[f64] {
        &self.state.inputs[area.0]
    }

    /// Neurons whose incoming synapses have been drawn (lazy backend). For
    /// the explicit backend every neuron is materialized and this is empty.
    pub fn support(&self, area: AreaId) -> &[u32] {
        &self.areas[area.0].support
    }

    pub(crate) fn set_support(&mut self, area: AreaId, neurons: &[u32]) {
        let a = &mut self.areas[area.0];
        a.support.clear();
        a.support_mask.iter_mut().for_each(|m| *m = false);
        for &j in neurons {
            a.add_support(j);
        }
    }

    /// Number of plasticity-enabled steps taken so far.
    pub fn plastic_steps(&self) -> u64 {
        self.plastic_steps
    }

    /// Silences every area.
    pub fn clear_firing(&mut self) {
        for (w, i) in self.state.winners.iter_mut().zip(&mut self.state.inputs) {
            w.clear();
            i.clear();
        }
    }

    /// Overwrites the current winners of `area`.
    pub fn set_firing(&mut self, area: AreaId, neurons: &[u32]) -> Result<()> {
        let n = self.checked_area(area)?.n;
        if let Some(&bad) = neurons.iter().find(|&&j| j >= n) {
            return Err(NemoError::InvalidAssembly {
                area: self.areas[area.0].params.name.clone(),
                reason: format!("neuron {bad} out of range (n={n})"),
            });
        }
        let mut v = neurons.to_vec();
        v.sort_unstable();
        v.dedup();
        self.state.winners[area.0] = v;
        self.state.inputs[area.0].clear();
        Ok(())
    }

    /// Restarts the random stream used by plasticity-free steps of the lazy
    /// backend. The stream depends only on the seed and on how many plastic
    /// steps have run, so evaluating the same weights twice gives the same
    /// answer and never perturbs training randomness.
    pub fn reset_readout_stream(&mut self, label: &str) {
        self.readout_rng = rng::stream(
            self.seed,
            &format!("readout:{}:{label}", self.plastic_steps),
        );
    }

    fn checked_area(&self, area: AreaId) -> Result<&AreaParams> {
        self.areas
            .get(area.0)
            .map(|a| &a.params)
            .ok_or_else(|| NemoError::UnknownArea(area.to_string()))
    }

    fn validate_clamps(&self, clamps: &ClampMap) -> Result<()> {
        for area in clamps.areas() {
            let params = self.checked_area(area)?;
            for asm in clamps.assemblies(area) {
                if asm.len() != params.k as usize {
                    return Err(NemoError::InvalidAssembly {
                        area: params.name.clone(),
                        reason: format!("clamp has {} neurons, expected k={}", asm.len(), params.k),
                    });
                }
                if asm.neurons.last().is_some_and(|&j| j >= params.n) {
                    return Err(NemoError::InvalidAssembly {
                        area: params.name.clone(),
                        reason: format!("neuron out of range (n={})", params.n),
                    });
                }
            }
        }
        Ok(())
    }

    /// One synchronous step in which every unclamped area is free.
    pub fn step(&mut self, clamps: &ClampMap, plasticity: bool) -> Result<&FiringState> {
        let plan = StepPlan::new(clamps.clone(), Activity::AllFree, plasticity);
        self.step_with(&plan)
    }

    pub fn step_with(&mut self, plan: &StepPlan) -> Result<&FiringState> {
        self.validate_clamps(&plan.clamps)?;
        if let Activity::Only(list) = &plan.free {
            for &a in list {
                self.checked_area(a)?;
            }
        }
        let lazy = self.backend == Backend::Lazy;
        let plastic = plan.plasticity;

        let firing: Vec<Vec<u32>> = (0..self.areas.len())
            .map(|a| {
                plan.clamps
                    .firing(AreaId(a))
                    .unwrap_or_else(|| self.state.winners[a].clone())
            })
            .collect();

        let mut next = FiringState::empty(self.areas.len());
        next.t = self.state.t + 1;
        for b in 0..self.areas.len() {
            let id = AreaId(b);
            if let Some(clamped) = plan.clamps.firing(id) {
                if lazy && plastic {
                    for &j in &clamped {
                        if !self.areas[b].support_mask[j as usize] {
                            self.materialize_fresh(b, j);
                        }
                    }
                }
                next.winners[b] = clamped;
            } else if plan.is_free(id) {
                let (winners, pending) = self.compute_cap(b, &firing, lazy, plastic);
                if !pending.is_empty() {
                    self.materialize_winners(b, &firing, &pending);
                }
                let (w, i) = winners.into_iter().unzip();
                next.winners[b] = w;
                next.inputs[b] = i;
            }
        }

        if plastic {
            for c in &mut self.connectomes {
                let pre = &firing[c.src().0];
                let post = &next.winners[c.dst().0];
                if pre.is_empty() || post.is_empty() {
                    continue;
                }
                let dst = &self.areas[c.dst().0];
                let mut mask = vec![false; dst.params.n as usize];
                for &j in post {
                    mask[j as usize] = true;
                }
                c.apply_plasticity_masked(pre, &mask, dst.params.beta);
            }
            self.plastic_steps += 1;
        }
        self.state = next;
        Ok(&self.state)
    }

    /// Incoming connectomes of `b` whose source fires, in network order.
    fn active_incoming(&self, b: usize, firing: &[Vec<u32>]) -> Vec<usize> {
        self.incoming[b]
            .iter()
            .copied()
            .filter(|&c| !firing[self.connectomes[c].src().0].is_empty())
            .collect()
    }

    fn compute_cap(
        &mut self,
        b: usize,
        firing: &[Vec<u32>],
        lazy: bool,
        plastic: bool,
    ) -> (Vec<(u32, f64)>, Vec<Pending>) {
        let active = self.active_incoming(b, firing);
        let k = self.areas[b].params.k as usize;
        let mut scratch = std::mem::take(&mut self.areas[b].scratch);
        let mut touched = Vec::new();
        for &c in &active {
            let conn = &self.connectomes[c];
            conn.accumulate(&firing[conn.src().0], &mut scratch, &mut touched);
        }
        let mut entries: Vec<(u32, f64)> = touched
            .iter()
            .map(|&j| {
                let v = scratch[j as usize];
                scratch[j as usize] = 0.0;
                (j, v)
            })
            .collect();
        self.areas[b].scratch = scratch;

        if lazy && !active.is_empty() {
            let parts: Vec<(u32, f64)> = active
                .iter()
                .map(|&c| {
                    let conn = &self.connectomes[c];
                    (firing[conn.src().0].len() as u32, conn.p())
                })
                .collect();
            let law = InputLaw::new(&parts);
            let area = &mut self.areas[b];
            let n = area.params.n;
            let rng = if plastic {
                &mut area.rng
            } else {
                &mut self.readout_rng
            };
            // Non-support neurons that fire in a frozen recurrent readout are
            // not excluded from their own input; the bias is one synapse.
            entries.extend(lazy_candidates(&law, n, &area.support, k, rng));
        }

        let winners = cap_entries(&mut entries, k);
        let pending = if lazy && plastic {
            let mask = &self.areas[b].support_mask;
            winners
                .iter()
                .filter(|(j, _)| !mask[*j as usize])
                .map(|&(j, v)| Pending {
                    neuron: j,
                    total: v as u32,
                })
                .collect()
        } else {
            Vec::new()
        };
        (winners, pending)
    }

    /// Draws the incoming synapses of new winners of `b` so that the
    /// synapses from the currently firing neurons add up to the input each
    /// winner was sampled with.
    fn materialize_winners(&mut self, b: usize, firing: &[Vec<u32>], pending: &[Pending]) {
        let active = self.active_incoming(b, firing);
        let parts: Vec<(u32, f64)> = active
            .iter()
            .map(|&c| {
                (
                    firing[self.connectomes[c].src().0].len() as u32,
                    self.connectomes[c].p(),
                )
            })
            .collect();
        let law = InputLaw::new(&parts);
        let incoming = self.incoming[b].clone();
        for w in pending {
            let j = w.neuron;
            let counts = law.split(w.total, &mut self.areas[b].rng);
            for &c in &incoming {
                let (src, p, src_size, recurrent) = {
                    let conn = &self.connectomes[c];
                    (conn.src().0, conn.p(), conn.src_size(), conn.is_recurrent())
                };
                let fired = &firing[src];
                let rng = &mut self.areas[b].rng;
                let mut sources: Vec<u32> = match active.iter().position(|&a| a == c) {
                    Some(part) => index::sample(rng, fired.len(), counts[part] as usize)
                        .into_iter()
                        .map(|pos| fired[pos])
                        .collect(),
                    None => Vec::new(),
                };
                bernoulli_indices(src_size, p, rng, |i| {
                    if !(recurrent && i == j) && fired.binary_search(&i).is_err() {
                        sources.push(i);
                    }
                });
                self.connectomes[c].materialize(j, sources);
            }
            self.areas[b].add_support(j);
        }
    }

    /// Draws every incoming synapse of `j` in `b` unconditionally (used when
    /// a clamp first drives a neuron).
    fn materialize_fresh(&mut self, b: usize, j: u32) {
        for c in self.incoming[b].clone() {
            let (p, src_size, recurrent) = {
                let conn = &self.connectomes[c];
                (conn.p(), conn.src_size(), conn.is_recurrent())
            };
            let mut sources = Vec::new();
            bernoulli_indices(src_size, p, &mut self.areas[b].rng, |i| {
                if !(recurrent && i == j) {
                    sources.push(i);
                }
            });
            self.connectomes[c].materialize(j, sources);
        }
        self.areas[b].add_support(j);
    }

    /// Order-independent digest of every synapse weight.
    pub fn weight_checksum(&self) -> u64 {
        let mut acc: u64 = 0;
        for (ci, c) in self.connectomes.iter().enumerate() {
            for (i, j, w) in c.synapses() {
                let key = ((ci as u64) << 48) ^ (u64::from(i) << 24) ^ u64::from(j);
                let mut h = rng::derive_seed(key, "w");
                h ^= w.to_bits().wrapping_mul(0x9e37_79b9_7f4a_7c15);
                acc = acc.wrapping_add(h.rotate_left(17));
            }
        }
        acc
    }

    pub fn synapse_count(&self) -> usize {
        self.connectomes.iter().map(Connectome::synapse_count).sum()
    }

    pub fn heap_bytes(&self) -> usize {
        self.connectomes.iter().map(Connectome::heap_bytes).sum()
    }

    /// Resets weights and support of the lazy backend (explicit connectomes
    /// are cleared too). Used when restoring snapshots.
    pub(crate) fn clear_synapses(&mut self) {
        for c in &mut self.connectomes {
            c.clear();
        }
        for i in 0..self.areas.len() {
            self.set_support(AreaId(i), &[]);
        }
    }
}

/// Sums, for every neuron of a destination area, the weights from firing
/// presynaptic neurons across several connectomes.
pub fn synaptic_inputs(dst_size: u32, sources: &[(&Connectome, &[u32])]) -> Result<Vec<f64>> {
    let mut inputs = vec![0.0; dst_size as usize];
    let mut touched = Vec::new();
    for (conn, firing) in sources {
        if conn.dst_size() != dst_size {
            return Err(NemoError::DimensionMismatch(format!(
                "connectome targets {} neurons, area has {dst_size}",
                conn.dst_size()
            )));
        }
        if let Some(&bad) = firing.iter().find(|&&i| i >= conn.src_size()) {
            return Err(NemoError::DimensionMismatch(format!(
                "firing neuron {bad} outside source of size {}",
                conn.src_size()
            )));
        }
        conn.accumulate(firing, &mut inputs, &mut touched);
    }
    Ok(inputs)
}
