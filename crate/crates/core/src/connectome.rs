//! Sparse weighted synapses between two areas (or within one).
//!
//! Synapses are stored as per-source rows so that both input accumulation
//! and plasticity only touch the rows of neurons that fired.

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{NemoError, Result};
use crate::network::AreaId;
use crate::params::{AreaParams, Backend};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Default)]
struct Row {
    targets: Vec<u32>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Connectome {
    src: AreaId,
    dst: AreaId,
    src_size: u32,
    dst_size: u32,
    p: f64,
    backend: Backend,
    rows: Vec<Row>,
    synapses: usize,
}

/// Calls `emit` for every index in `0..n` independently with probability `p`,
/// in increasing order.
pub(crate) fn bernoulli_indices<R: Rng + ?Sized>(
    n: u32,
    p: f64,
    rng: &mut R,
    mut emit: impl FnMut(u32),
) {
    if p <= 0.0 || n == 0 {
        return;
    }
    if p >= 1.0 {
        (0..n).for_each(emit);
        return;
    }
    let gap = Geometric::new(p).expect("p in (0, 1)");
    let mut j: u64 = 0;
    loop {
        j += gap.sample(rng);
        if j >= u64::from(n) {
            break;
        }
        emit(j as u32);
        j += 1;
    }
}

impl Connectome {
    /// Creates an empty connectome. Weights must then be sampled or inserted.
    pub fn empty(
        src: AreaId,
        dst: AreaId,
        src_size: u32,
        dst_size: u32,
        p: f64,
        backend: Backend,
    ) -> Result<Self> {
        if src_size == 0 || dst_size == 0 {
            return Err(NemoError::DimensionMismatch(format!(
                "connectome {src}->{dst} has a zero-size side ({src_size}x{dst_size})"
            )));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(NemoError::param("p", format!("{p} is outside [0, 1]")));
        }
        Ok(Self {
            src,
            dst,
            src_size,
            dst_size,
            p,
            backend,
            rows: vec![Row::default(); src_size as usize],
            synapses: 0,
        })
    }

    /// Samples the connectome from `src` into `dst`. The connection
    /// probability is the destination area's `p`. The explicit backend draws
    /// every ordered pair now; the lazy backend starts with nothing.
    pub fn sample(
        src: AreaId,
        src_params: &AreaParams,
        dst: AreaId,
        dst_params: &AreaParams,
        backend: Backend,
        seed: u64,
    ) -> Result<Self> {
        src_params.validate()?;
        dst_params.validate()?;
        let mut c = Self::empty(src, dst, src_params.n, dst_params.n, dst_params.p, backend)?;
        if backend == Backend::Explicit {
            let mut rng = rng::stream(seed, "synapses");
            c.sample_all(&mut rng);
        }
        Ok(c)
    }

    fn sample_all(&mut self, rng: &mut StreamRng) {
        let recurrent = self.is_recurrent();
        let (n, p) = (self.dst_size, self.p);
        let mut total = 0;
        for (i, row) in self.rows.iter_mut().enumerate() {
            bernoulli_indices(n, p, rng, |j| {
                if !(recurrent && j as usize == i) {
                    row.targets.push(j);
                    row.weights.push(1.0);
                }
            });
            total += row.targets.len();
        }
        self.synapses = total;
    }

    pub fn src(&self) -> AreaId {
        self.src
    }

    pub fn dst(&self) -> AreaId {
        self.dst
    }

    pub fn src_size(&self) -> u32 {
        self.src_size
    }

    pub fn dst_size(&self) -> u32 {
        self.dst_size
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn is_recurrent(&self) -> bool {
        self.src == self.dst
    }

    pub fn synapse_count(&self) -> usize {
        self.synapses
    }

    /// Approximate heap bytes held by synapse storage.
    pub fn heap_bytes(&self) -> usize {
        let rows = self.rows.len() * std::mem::size_of::<Row>();
        let syn: usize = self
            .rows
            .iter()
            .map(|r| r.targets.capacity() * 4 + r.weights.capacity() * 8)
            .sum();
        rows + syn
    }

    pub fn weight(&self, i: u32, j: u32) -> Option<f64> {
        let row = self.rows.get(i as usize)?;
        row.targets
            .iter()
            .position(|&t| t == j)
            .map(|pos| row.weights[pos])
    }

    /// Sets the weight of synapse `i -> j`, creating it if absent.
    pub fn set_weight(&mut self, i: u32, j: u32, w: f64) -> Result<()> {
        if i >= self.src_size || j >= self.dst_size {
            return Err(NemoError::DimensionMismatch(format!(
                "synapse {i}->{j} outside {}x{}",
                self.src_size, self.dst_size
            )));
        }
        if self.is_recurrent() && i == j {
            return Err(NemoError::DimensionMismatch(format!(
                "self-synapse {i}->{i}"
            )));
        }
        let row = &mut self.rows[i as usize];
        match row.targets.iter().position(|&t| t == j) {
            Some(pos) => row.weights[pos] = w,
            None => {
                row.targets.push(j);
                row.weights.push(w);
                self.synapses += 1;
            }
        }
        Ok(())
    }

    /// Iterates all synapses as `(src, dst, weight)`, grouped by source.
    pub fn synapses(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, row)| {
            row.targets
                .iter()
                .zip(&row.weights)
                .map(move |(&j, &w)| (i as u32, j, w))
        })
    }

    /// Adds the input of every firing source neuron into `inputs`, recording
    /// destinations that receive their first contribution in `touched`.
    pub fn accumulate(&self, firing: &[u32], inputs: &mut [f64], touched: &mut Vec<u32>) {
        for &i in firing {
            let row = &self.rows[i as usize];
            for (&j, &w) in row.targets.iter().zip(&row.weights) {
                let slot = &mut inputs[j as usize];
                if *slot == 0.0 {
                    touched.push(j);
                }
                *slot += w;
            }
        }
    }

    /// Multiplies by `1 + beta` every synapse from a neuron in `pre` to a
    /// neuron in `post`. Both are neuron index sets of the respective areas.
    pub fn apply_plasticity(&mut self, pre: &[u32], post: &[u32], beta: f64) {
        let mut mask = vec![false; self.dst_size as usize];
        for &j in post {
            mask[j as usize] = true;
        }
        self.apply_plasticity_masked(pre, &mask, beta);
    }

    pub(crate) fn apply_plasticity_masked(&mut self, pre: &[u32], post_mask: &[bool], beta: f64) {
        if beta == 0.0 {
            return;
        }
        let factor = 1.0 + beta;
        for &i in pre {
            let row = &mut self.rows[i as usize];
            for (&j, w) in row.targets.iter().zip(row.weights.iter_mut()) {
                if post_mask[j as usize] {
                    *w *= factor;
                }
            }
        }
    }

    /// Records fresh unit-weight synapses from `sources` into `j`.
    pub(crate) fn materialize(&mut self, j: u32, sources: impl IntoIterator<Item = u32>) {
        for i in sources {
            let row = &mut self.rows[i as usize];
            row.targets.push(j);
            row.weights.push(1.0);
            self.synapses += 1;
        }
    }

    pub(crate) fn clear(&mut self) {
        for row in &mut self.rows {
            row.targets.clear();
            row.weights.clear();
        }
        self.synapses = 0;
    }
}
