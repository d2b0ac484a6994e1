//! Sampling for the lazy backend.
//!
//! A neuron whose incoming synapses were never materialized receives, from
//! `f` firing neurons of an area connected with probability `p`, an input
//! distributed `Binomial(f, p)` (all such synapses still have weight 1).
//! Instead of drawing that for every unmaterialized neuron, the top values
//! of the `u` i.i.d. draws are generated directly, highest value first: the
//! number of draws equal to `v` among those still unassigned is binomial in
//! the conditional probability `P(X = v | X <= v)`.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// Distribution of the total input from several firing groups.
#[derive(Debug, Clone)]
pub struct InputLaw {
    parts: Vec<(u32, f64)>,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    /// `suffix[i]` is the pmf of the sum of parts `i..`.
    suffix: Vec<Vec<f64>>,
}

fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let n = n as usize;
    let mut pmf = vec![0.0; n + 1];
    if p <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        pmf[n] = 1.0;
        return pmf;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    // ln C(n, a) built incrementally.
    let mut ln_choose = 0.0;
    for (a, slot) in pmf.iter_mut().enumerate() {
        if a > 0 {
            ln_choose += ((n - a + 1) as f64).ln() - (a as f64).ln();
        }
        *slot = (ln_choose + a as f64 * lp + (n - a) as f64 * lq).exp();
    }
    pmf
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl InputLaw {
    /// `parts` lists `(firing count, connection probability)` per source.
    pub fn new(parts: &[(u32, f64)]) -> Self {
        let mut suffix = vec![vec![1.0]; parts.len() + 1];
        for (i, &(f, p)) in parts.iter().enumerate().rev() {
            suffix[i] = convolve(&binomial_pmf(f, p), &suffix[i + 1]);
        }
        let pmf = suffix[0].clone();
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for &x in &pmf {
            acc += x;
            cdf.push(acc);
        }
        Self {
            parts: parts.to_vec(),
            pmf,
            cdf,
            suffix,
        }
    }

    pub fn binomial(firing: u32, p: f64) -> Self {
        Self::new(&[(firing, p)])
    }

    /// Largest attainable input.
    pub fn max_input(&self) -> u32 {
        (self.pmf.len() - 1) as u32
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Splits a total input `x` into per-part synapse counts, drawn from the
    /// conditional law given the sum.
    pub fn split<R: Rng + ?Sized>(&self, x: u32, rng: &mut R) -> Vec<u32> {
        let mut rest = x as usize;
        let mut out = Vec::with_capacity(self.parts.len());
        for (i, &(f, p)) in self.parts.iter().enumerate() {
            let own = binomial_pmf(f, p);
            let tail = &self.suffix[i + 1];
            let lo = rest.saturating_sub(tail.len() - 1);
            let hi = rest.min(f as usize);
            let weights: Vec<f64> = (lo..=hi).map(|a| own[a] * tail[rest - a]).collect();
            let total: f64 = weights.iter().sum();
            let pick = if total > 0.0 {
                let mut r = rng.random::<f64>() * total;
                let mut chosen = hi;
                for (off, w) in weights.iter().enumerate() {
                    if r < *w {
                        chosen = lo + off;
                        break;
                    }
                    r -= w;
                }
                chosen
            } else {
                // Only reachable through underflow in a far tail.
                hi
            };
            out.push(pick as u32);
            rest -= pick;
        }
        out
    }
}

/// Maps sorted positions among the neurons of `0..n` not in `excluded`
/// (sorted) to neuron indices.
fn positions_to_neurons(positions: &[usize], excluded: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(positions.len());
    let mut j = 0;
    for &pos in positions {
        let mut x = pos + j;
        while j < excluded.len() && excluded[j] as usize <= x {
            j += 1;
            x = pos + j;
        }
        out.push(x as u32);
    }
    out
}

fn merge_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Draws the `quota` largest inputs among the neurons of `0..dst_size` that
/// are not in `support` (sorted), each neuron's input following `law`
/// independently. Zero inputs are never returned and ties at the cut keep
/// the lowest indices. Output is `(neuron, input)` in decreasing input.
pub fn lazy_candidates<R: Rng + ?Sized>(
    law: &InputLaw,
    dst_size: u32,
    support: &[u32],
    quota: usize,
    rng: &mut R,
) -> Vec<(u32, f64)> {
    let mut remaining = (dst_size as usize).saturating_sub(support.len()) as u64;
    let mut need = quota;
    let mut out = Vec::with_capacity(quota);
    let mut excluded: Option<Vec<u32>> = None;
    for v in (1..=law.max_input() as usize).rev() {
        if need == 0 || remaining == 0 {
            break;
        }
        let q = if law.cdf[v] > 0.0 {
            (law.pmf[v] / law.cdf[v]).min(1.0)
        } else {
            0.0
        };
        if q <= 0.0 {
            continue;
        }
        let count = Binomial::new(remaining, q)
            .expect("valid binomial")
            .sample(rng) as usize;
        if count == 0 {
            continue;
        }
        let ex = excluded.as_deref().unwrap_or(support);
        let mut positions = index::sample(rng, remaining as usize, count).into_vec();
        positions.sort_unstable();
        let neurons = positions_to_neurons(&positions, ex);
        let take = count.min(need);
        out.extend(neurons[..take].iter().map(|&j| (j, v as f64)));
        need -= take;
        remaining -= count as u64;
        if need > 0 {
            excluded = Some(merge_sorted(ex, &neurons));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn pmf_sums_to_one() {
        for &(f, p) in &[(0, 0.3), (1, 0.5), (50, 0.05), (300, 0.01), (7, 1.0)] {
            let law = InputLaw::binomial(f, p);
            let s: f64 = law.pmf().iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "{f} {p}: {s}");
        }
        let law = InputLaw::new(&[(100, 0.05), (20, 0.1), (0, 0.3)]);
        assert_eq!(law.max_input(), 120);
        let mean: f64 = law
            .pmf()
            .iter()
            .enumerate()
            .map(|(a, &w)| a as f64 * w)
            .sum();
        assert!((mean - 7.0).abs() < 1e-9);
    }

    #[test]
    fn silent_sources_give_no_candidates() {
        let mut r = rng::stream(1, "t");
        assert!(lazy_candidates(&InputLaw::binomial(0, 0.05), 1000, &[], 10, &mut r).is_empty());
    }

    #[test]
    fn full_support_gives_no_candidates() {
        let mut r = rng::stream(1, "t");
        let support: Vec<u32> = (0..100).collect();
        assert!(
            lazy_candidates(&InputLaw::binomial(50, 0.5), 100, &support, 10, &mut r).is_empty()
        );
    }

    #[test]
    fn candidates_avoid_support_and_are_distinct() {
        let mut r = rng::stream(3, "t");
        let support: Vec<u32> = (0..1000).step_by(3).collect();
        for _ in 0..50 {
            let c = lazy_candidates(&InputLaw::binomial(30, 0.1), 1000, &support, 40, &mut r);
            assert_eq!(c.len(), 40);
            let mut ids: Vec<u32> = c.iter().map(|e| e.0).collect();
            assert!(ids.iter().all(|j| j % 3 != 0 && *j < 1000));
            ids.sort_unstable();
            ids.dedup();
            assert_eq!(ids.len(), 40);
            assert!(c.windows(2).all(|w| w[0].1 >= w[1].1));
        }
    }

    #[test]
    fn position_mapping_skips_excluded() {
        assert_eq!(
            positions_to_neurons(&[0, 1, 2, 3], &[0, 2]),
            vec![1, 3, 4, 5]
        );
        assert_eq!(positions_to_neurons(&[0], &[]), vec![0]);
    }

    #[test]
    fn split_respects_total_and_bounds() {
        let law = InputLaw::new(&[(5, 0.3), (3, 0.5), (0, 0.2), (4, 1.0)]);
        let mut r = rng::stream(9, "t");
        for x in 4..=12 {
            for _ in 0..20 {
                let s = law.split(x, &mut r);
                assert_eq!(s.iter().sum::<u32>(), x);
                assert!(s[0] <= 5 && s[1] <= 3 && s[2] == 0 && s[3] == 4);
            }
        }
    }

    /// The maximum of `u` binomial draws, simulated directly, against the
    /// maximum produced by the top-down sampler.
    #[test]
    fn top_value_matches_direct_draws() {
        let (u, f, p) = (500u32, 40u32, 0.1);
        let law = InputLaw::binomial(f, p);
        let direct_law = Binomial::new(u64::from(f), p).unwrap();
        let mut r = rng::stream(11, "t");
        let trials = 4000;
        let mut direct = vec![0usize; f as usize + 1];
        let mut lazy = vec![0usize; f as usize + 1];
        for _ in 0..trials {
            let m = (0..u).map(|_| direct_law.sample(&mut r)).max().unwrap() as usize;
            direct[m] += 1;
            let c = lazy_candidates(&law, u, &[], 1, &mut r);
            lazy[c.first().map_or(0, |e| e.1 as usize)] += 1;
        }
        let mean = |h: &[usize]| {
            h.iter().enumerate().map(|(v, &c)| v * c).sum::<usize>() as f64 / trials as f64
        };
        assert!(
            (mean(&direct) - mean(&lazy)).abs() < 0.1,
            "{} vs {}",
            mean(&direct),
            mean(&lazy)
        );
    }
}
