//! Child prediction: exact children from a known digest, and child-trait
//! distributions when the digest is unknown.
//!
//! With an unknown digest every stream bit is modeled as an independent fair
//! coin. Groups never share bits, so the child law factorises over the twelve
//! groups; within a group the cells are correlated (a shared swap outcome, and
//! a failed mutation test leaves its bits to be re-read for inheritance), so
//! the joint law of each group is enumerated exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::digest::Digest;
use crate::exec::Execution;
use crate::genescience::{apply_swap_pattern, inherit_cell, mix_genes, BitSource, MutationContext};
use crate::genome::{Cattribute, GeneArray, CELLS, GROUPS, GROUP_SIZE};

pub const VALUES: usize = 32;

/// Samples per independently seeded Monte Carlo chunk.
const MC_CHUNK: usize = 1 << 14;

/// The exact child for a known seed digest. Same function as breeding uses.
pub fn predict_child(matron: &GeneArray, sire: &GeneArray, target_digest: Digest) -> GeneArray {
    mix_genes(matron, sire, target_digest)
}

/// Per-cell child law: `probs[cell][value]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraitDistribution {
    probs: Vec<[f64; VALUES]>,
}

impl TraitDistribution {
    fn zeros() -> Self {
        TraitDistribution { probs: vec![[0.0; VALUES]; CELLS] }
    }

    pub fn prob(&self, cell: usize, value: u8) -> f64 {
        self.probs[cell][value as usize]
    }

    pub fn row(&self, cell: usize) -> &[f64; VALUES] {
        &self.probs[cell]
    }

    pub fn rows(&self) -> &[[f64; VALUES]] {
        &self.probs
    }

    /// Largest `|self - other|` over every (cell, value).
    pub fn max_abs_diff(&self, other: &TraitDistribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Largest per-row total-variation distance.
    pub fn max_row_tv(&self, other: &TraitDistribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// CSV with header `cell,value,probability`; only positive entries are listed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell,value,probability\n");
        for (cell, row) in self.probs.iter().enumerate() {
            for (value, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    let _ = writeln!(out, "{cell},{value},{p}");
                }
            }
        }
        out
    }

    /// CSV comparing this (exact) law with an empirical one. Lists every entry
    /// positive in either.
    pub fn to_csv_with_empirical(&self, empirical: &TraitDistribution) -> String {
        let mut out = String::from("cell,value,probability,monte_carlo,abs_error\n");
        for cell in 0..CELLS {
            for value in 0..VALUES {
                let p = self.probs[cell][value];
                let q = empirical.probs[cell][value];
                if p > 0.0 || q > 0.0 {
                    let _ = writeln!(out, "{cell},{value},{p},{q},{}", (p - q).abs());
                }
            }
        }
        out
    }
}

/// Exact joint law of the four child cells of one group.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupLaw {
    group: usize,
    outcomes: Vec<([u8; GROUP_SIZE], f64)>,
}

impl GroupLaw {
    pub fn group(&self) -> usize {
        self.group
    }

    /// Distinct child groups and their probabilities, sorted by cells.
    pub fn outcomes(&self) -> &[([u8; GROUP_SIZE], f64)] {
        &self.outcomes
    }

    /// Probability that every `(cell, value)` constraint holds. Cells are
    /// absolute indices and must lie in this group.
    pub fn prob_matching(&self, constraints: &[(usize, u8)]) -> f64 {
        self.outcomes
            .iter()
            .filter(|(cells, _)| {
                constraints.iter().all(|&(c, v)| cells[c - self.group * GROUP_SIZE] == v)
            })
            .map(|(_, p)| p)
            .sum()
    }

    pub fn most_likely(&self) -> ([u8; GROUP_SIZE], f64) {
        // Ties go to the smallest cells, keeping the choice deterministic.
        self.outcomes
            .iter()
            .copied()
            .fold(([0; GROUP_SIZE], -1.0), |best, o| if o.1 > best.1 { o } else { best })
    }
}

/// Fixed window of bits for enumerating inheritance outcomes.
struct Window {
    bits: u32,
    pos: u32,
}

impl BitSource for Window {
    fn peek(&mut self, n: u32) -> u32 {
        (self.bits >> self.pos) & ((1 << n) - 1)
    }
    fn advance(&mut self, n: u32) {
        self.pos += n;
    }
    fn position(&self) -> u64 {
        self.pos as u64
    }
}

/// The 8 swap-phase outcomes of one parent group, equal orders merged.
fn swap_outcomes(group: [u8; GROUP_SIZE]) -> Vec<([u8; GROUP_SIZE], f64)> {
    let mut merged: Vec<([u8; GROUP_SIZE], f64)> = Vec::with_capacity(8);
    for p in 0..8u8 {
        let pattern = [p & 1 == 1, p & 2 == 2, p & 4 == 4];
        let swaps = pattern.iter().filter(|&&s| s).count() as i32;
        // A pair swaps when both of its bits are zero.
        let w = 0.25f64.powi(swaps) * 0.75f64.powi(3 - swaps);
        let cells = apply_swap_pattern(group, pattern);
        match merged.iter_mut().find(|(c, _)| *c == cells) {
            Some(entry) => entry.1 += w,
            None => merged.push((cells, w)),
        }
    }
    merged
}

/// Calls `f` with every weighted child-group outcome of one group; equal
/// outcomes may repeat.
fn for_each_group_outcome(
    matron4: [u8; GROUP_SIZE],
    sire4: [u8; GROUP_SIZE],
    group: usize,
    mut f: impl FnMut([u8; GROUP_SIZE], f64),
) {
    let base = group * GROUP_SIZE;
    let sire_swaps = swap_outcomes(sire4);
    for (m4, wm) in swap_outcomes(matron4) {
        for &(s4, ws) in &sire_swaps {
            // A successful mutation reads 3 bits and the other cells one each.
            let head = MutationContext::new(m4[0], s4[0], base);
            let width = if head.is_eligible() { 6 } else { 4 };
            let w = wm * ws / (1u32 << width) as f64;
            for bits in 0..(1u32 << width) {
                let mut src = Window { bits, pos: 0 };
                let mut cells = [0u8; GROUP_SIZE];
                for q in 0..GROUP_SIZE {
                    cells[q] = inherit_cell(base + q, m4[q], s4[q], &mut src).0;
                }
                f(cells, w);
            }
        }
    }
}

pub fn group_law(matron: &GeneArray, sire: &GeneArray, group: usize) -> GroupLaw {
    assert!(group < GROUPS);
    let mut acc: BTreeMap<[u8; GROUP_SIZE], f64> = BTreeMap::new();
    for_each_group_outcome(matron.group(group), sire.group(group), group, |cells, w| {
        *acc.entry(cells).or_insert(0.0) += w;
    });
    GroupLaw { group, outcomes: acc.into_iter().collect() }
}

/// Probability that a child of groups `matron4` and `sire4` at `group`
/// meets every `(cell, value)` constraint. Same result as
/// [`GroupLaw::prob_matching`] without building the law.
pub fn group_match_probability(
    matron4: [u8; GROUP_SIZE],
    sire4: [u8; GROUP_SIZE],
    group: usize,
    constraints: &[(usize, u8)],
) -> f64 {
    assert!(group < GROUPS);
    let base = group * GROUP_SIZE;
    let mut p = 0.0;
    for_each_group_outcome(matron4, sire4, group, |cells, w| {
        if constraints.iter().all(|&(c, v)| cells[c - base] == v) {
            p += w;
        }
    });
    p
}

/// Exact per-cell child law under a uniformly random digest.
pub fn trait_distribution(matron: &GeneArray, sire: &GeneArray) -> TraitDistribution {
    let mut dist = TraitDistribution::zeros();
    for g in 0..GROUPS {
        for (cells, p) in group_law(matron, sire, g).outcomes {
            for (q, v) in cells.into_iter().enumerate() {
                dist.probs[g * GROUP_SIZE + q][v as usize] += p;
            }
        }
    }
    dist
}

/// The single most likely child and its probability.
pub fn most_likely_child(matron: &GeneArray, sire: &GeneArray) -> (GeneArray, f64) {
    let mut cells = [0u8; CELLS];
    let mut prob = 1.0;
    for g in 0..GROUPS {
        let (best, p) = group_law(matron, sire, g).most_likely();
        cells[g * GROUP_SIZE..(g + 1) * GROUP_SIZE].copy_from_slice(&best);
        prob *= p;
    }
    (GeneArray::new(cells).expect("child cells in range"), prob)
}

/// Probability that a child carries every constraint of `cattribute`.
pub fn cattribute_probability(matron: &GeneArray, sire: &GeneArray, cattribute: &Cattribute) -> f64 {
    let mut by_group: BTreeMap<usize, Vec<(usize, u8)>> = BTreeMap::new();
    for &(cell, value) in cattribute.constraints() {
        by_group.entry(cell / GROUP_SIZE).or_default().push((cell, value));
    }
    by_group
        .into_iter()
        .map(|(g, cons)| group_match_probability(matron.group(g), sire.group(g), g, &cons))
        .product()
}

pub fn monte_carlo_distribution(
    matron: &GeneArray,
    sire: &GeneArray,
    samples: usize,
    rng_seed: u64,
) -> TraitDistribution {
    monte_carlo_distribution_with(matron, sire, samples, rng_seed, Execution::default())
}

/// Empirical child law over `samples` seeded random digests. Samples are split
/// into fixed-size chunks, each with its own ChaCha stream, so the result does
/// not depend on the execution mode.
pub fn monte_carlo_distribution_with(
    matron: &GeneArray,
    sire: &GeneArray,
    samples: usize,
    rng_seed: u64,
    exec: Execution,
) -> TraitDistribution {
    assert!(samples >= 1, "at least one sample is required");
    let chunks = samples.div_ceil(MC_CHUNK);
    let partials = exec.map_indexed(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(c as u64);
        let n = MC_CHUNK.min(samples - c * MC_CHUNK);
        let mut counts = vec![[0u32; VALUES]; CELLS];
        let mut bytes = [0u8; 32];
        for _ in 0..n {
            rng.fill_bytes(&mut bytes);
            let child = mix_genes(matron, sire, Digest(bytes));
            for (row, &v) in counts.iter_mut().zip(child.cells()) {
                row[v as usize] += 1;
            }
        }
        counts
    });
    let mut dist = TraitDistribution::zeros();
    for counts in partials {
        for (row, crow) in dist.probs.iter_mut().zip(&counts) {
            for (p, &c) in row.iter_mut().zip(crow) {
                *p += c as f64;
            }
        }
    }
    for row in &mut dist.probs {
        for p in row.iter_mut() {
            *p /= samples as f64;
        }
    }
    dist
}
