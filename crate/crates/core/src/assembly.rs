//! Assembly-level operations: overlap, projection and frozen readout.

use serde::{Deserialize, Serialize};

use crate::error::{NemoError, Result};
use crate::network::{Activity, AreaId, Assembly, ClampMap, Network, NetworkBuilder, StepPlan};
use crate::params::{AreaParams, Backend};
use crate::rng;

/// Fraction of shared neurons, `|a ∩ b| / max(|a|, |b|)`. For two caps of
/// the same area this is `|a ∩ b| / k`.
pub fn overlap(a: &Assembly, b: &Assembly) -> Result<f64> {
    if a.area != b.area {
        return Err(NemoError::DimensionMismatch(format!(
            "overlap between areas {} and {}",
            a.area, b.area
        )));
    }
    Ok(overlap_sets(a.neurons(), b.neurons()))
}

/// Overlap of two sorted neuron sets.
pub fn overlap_sets(a: &[u32], b: &[u32]) -> f64 {
    let denom = a.len().max(b.len());
    if denom == 0 {
        return 0.0;
    }
    let (mut i, mut j, mut shared) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    shared as f64 / denom as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    /// `overlaps[i]` compares the caps after steps `i + 1` and `i + 2`.
    pub overlaps: Vec<f64>,
    /// Step at which the cap first matched its predecessor closely enough.
    pub converged_at: Option<usize>,
}

/// Repeatedly fires `stimulus` into `target` with plasticity on until two
/// consecutive caps overlap by at least `threshold`, or `max_steps` pass.
/// All other areas are silenced first.
pub fn project(
    network: &mut Network,
    stimulus: &Assembly,
    target: AreaId,
    max_steps: usize,
    threshold: f64,
) -> Result<(Assembly, ConvergenceTrace)> {
    if !network.has_fiber(stimulus.area, target) {
        return Err(NemoError::MissingFiber {
            src: network.params(stimulus.area).name.clone(),
            dst: network.params(target).name.clone(),
        });
    }
    network.clear_firing();
    let plan = StepPlan::new(
        ClampMap::new().with(stimulus.clone()),
        Activity::Only(vec![target]),
        true,
    );
    let mut trace = ConvergenceTrace {
        overlaps: Vec::new(),
        converged_at: None,
    };
    let mut prev: Option<Vec<u32>> = None;
    for step in 1..=max_steps {
        let cap = network.step_with(&plan)?.winners[target.0].clone();
        if let Some(prev) = prev.replace(cap) {
            let o = overlap_sets(&prev, network.winners(target));
            trace.overlaps.push(o);
            if o >= threshold {
                trace.converged_at = Some(step);
                break;
            }
        }
    }
    let cap = Assembly::new(target, network.winners(target).to_vec());
    Ok((cap, trace))
}

/// Two areas `A -> B` with `B` recurrent, both with parameters `n, k, p,
/// beta`, and a random stimulus assembly of `k` neurons in `A`.
pub fn projection_setup(
    n: u32,
    k: u32,
    p: f64,
    beta: f64,
    backend: Backend,
    seed: u64,
) -> Result<(Network, Assembly, AreaId)> {
    let mut b = NetworkBuilder::new(seed, backend);
    let a = b.area(AreaParams::new("A", n, k, beta, p));
    let t = b.area(AreaParams::new("B", n, k, beta, p));
    b.fiber(a, t).recurrent(t);
    let net = b.build()?;
    let mut r = rng::stream(seed, "stimulus");
    let neurons: Vec<u32> = rand::seq::index::sample(&mut r, n as usize, k as usize)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    Ok((net, Assembly::new(a, neurons).with_label("stimulus"), t))
}

/// Fires the given assemblies for one plasticity-free step and lets each
/// area in `targets` form a cap. Every other area ends silent; weights are
/// untouched. Afterwards the caps and their inputs can be read from
/// [`Network::winners`] and [`Network::winner_inputs`].
pub fn fire_once(network: &mut Network, fire: &[&Assembly], targets: &[AreaId]) -> Result<()> {
    network.clear_firing();
    let mut by_area: Vec<(AreaId, Vec<u32>)> = Vec::new();
    for a in fire {
        match by_area.iter_mut().find(|(id, _)| *id == a.area) {
            Some((_, v)) => v.extend_from_slice(a.neurons()),
            None => by_area.push((a.area, a.neurons().to_vec())),
        }
    }
    for (area, neurons) in &by_area {
        network.set_firing(*area, neurons)?;
    }
    let plan = StepPlan::new(ClampMap::new(), Activity::Only(targets.to_vec()), false);
    network.step_with(&plan)?;
    Ok(())
}

/// One-step frozen readout of `target` given the firing assemblies.
pub fn readout(network: &mut Network, fire: &[&Assembly], target: AreaId) -> Result<Vec<u32>> {
    fire_once(network, fire, &[target])?;
    Ok(network.winners(target).to_vec())
}
