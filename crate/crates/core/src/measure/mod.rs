//! Inductive construction of a symmetric finite-entropy measure μ on G whose
//! random walk makes the conjugates w_n H w_n⁻¹ converge.
//!
//! Level n carries a tile Ã_n, the set A_n (Ã_n minus earlier witnesses), a
//! ball Δ_n in the alphabet of all earlier levels, a window Q_n and, for
//! n ≥ 1, a witness b_n found for (⋃_{d ∈ Δ_n} d⁻¹ Q_n d, Δ_n).

mod artifact;
mod witness;

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use artifact::{check_artifact, ArtifactCheck, BuilderArtifact, EntryRecord, LevelRecord, TileRecord};
pub use witness::{
    enumeration_search, thompson_support_bound, thompson_translation_bound, verify_witness, SearchConfig,
    Verification, WitnessQuery, WitnessSearch,
};

use crate::chabauty::{Subgroup, Window};
use crate::error::{Error, Result};
use crate::groups::{Enumerator, Group};
use crate::records::{self, rational_to_f64, TailDistribution};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuilderConfig {
    pub i_max: usize,
    pub delta_cap: usize,
    /// Q_n contains the first prefix_block · (n + 1) enumerated elements
    pub prefix_block: usize,
    pub search: SearchConfig,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        Self { i_max: 64, delta_cap: 100_000, prefix_block: 16, search: SearchConfig::default() }
    }
}

/// α_i = 2^{-i}
pub fn alpha(i: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << i)
}

/// Ã_0 = {e}, then each new enumerated g together with g⁻¹.
pub fn make_tiles<G: Group>(group: &G, count: usize) -> Vec<Vec<G::Element>> {
    let mut tiles = Vec::with_capacity(count);
    if count == 0 {
        return tiles;
    }
    let e = group.identity();
    let mut seen = HashSet::from([e.clone()]);
    tiles.push(vec![e]);
    let mut en = Enumerator::new(group.clone());
    let mut i = 0;
    while tiles.len() < count {
        i += 1;
        let Some(g) = en.get(i).cloned() else { break };
        if !seen.insert(g.clone()) {
            continue;
        }
        let gi = group.inv(&g);
        if gi == g {
            tiles.push(vec![g]);
        } else {
            seen.insert(gi.clone());
            tiles.push(vec![g, gi]);
        }
    }
    tiles
}

/// Shannon entropy, summed in sorted order so that hash-map iteration order
/// cannot change the last bits.
pub(crate) fn entropy_of(probs: impl Iterator<Item = f64>) -> f64 {
    let mut terms: Vec<f64> = probs.filter(|&x| x > 0.0).map(|x| -x * x.ln()).collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// All products of at most `length` letters, breadth first; the flag reports
/// that the cap cut the closure short.
pub fn delta_ball<G: Group>(
    group: &G,
    alphabet: &[G::Element],
    length: u64,
    cap: usize,
) -> (Vec<G::Element>, bool) {
    let e = group.identity();
    let mut seen = HashSet::from([e.clone()]);
    let mut out = vec![e.clone()];
    let mut frontier = vec![e];
    for _ in 0..length {
        let mut next = Vec::new();
        for w in &frontier {
            for s in alphabet {
                let x = group.mul(w, s);
                if seen.contains(&x) {
                    continue;
                }
                if out.len() >= cap {
                    return (out, true);
                }
                seen.insert(x.clone());
                out.push(x.clone());
                next.push(x);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    (out, false)
}

#[derive(Clone, Debug)]
pub struct Level<E> {
    pub index: usize,
    pub gauge: u64,
    pub tile: Vec<E>,
    pub a: Vec<E>,
    pub delta: Vec<E>,
    pub delta_capped: bool,
    /// Q_index \ Q_{index−1}
    pub q_added: Vec<E>,
    pub b: Option<E>,
    pub verification: Option<Verification>,
}

pub struct BuilderState<G: Group> {
    pub group: G,
    pub h: Subgroup<G>,
    pub h0: G::Element,
    pub p: TailDistribution,
    pub config: BuilderConfig,
    pub levels: Vec<Level<G::Element>>,
    tiles: Vec<Vec<G::Element>>,
    q: Vec<G::Element>,
    q_seen: HashSet<G::Element>,
    q_len: Vec<usize>,
    alphabet: Vec<G::Element>,
    alphabet_seen: HashSet<G::Element>,
    forbidden: HashSet<G::Element>,
    enumerator: Enumerator<G>,
}

impl<G: WitnessSearch> BuilderState<G> {
    pub fn new(group: G, h: Subgroup<G>, h0: G::Element, p: TailDistribution, config: BuilderConfig) -> Result<Self> {
        if group.is_identity(&h0) || !h.contains(&group, &h0).is_in() {
            return Err(Error::Precondition("h0 must be a nontrivial element of H".into()));
        }
        if !p.is_exact() || !p.support_infinite() {
            return Err(Error::Precondition("the index law must have exact masses and infinite support".into()));
        }
        let tiles = make_tiles(&group, config.i_max + 1);
        if tiles.len() <= config.i_max {
            return Err(Error::Precondition(format!("{} has fewer than {} tiles", group.describe(), config.i_max + 1)));
        }
        let enumerator = Enumerator::new(group.clone());
        Ok(Self {
            group,
            h,
            h0,
            p,
            config,
            levels: Vec::new(),
            tiles,
            q: Vec::new(),
            q_seen: HashSet::new(),
            q_len: Vec::new(),
            alphabet: Vec::new(),
            alphabet_seen: HashSet::new(),
            forbidden: HashSet::new(),
            enumerator,
        })
    }

    /// Builds levels 0..=i_max.
    pub fn build(group: G, h: Subgroup<G>, h0: G::Element, p: TailDistribution, config: BuilderConfig) -> Result<Self> {
        let mut s = Self::new(group, h, h0, p, config)?;
        while s.levels.len() <= s.config.i_max {
            s.step()?;
        }
        Ok(s)
    }

    pub fn q_window(&self, n: usize) -> Window<G::Element> {
        Window::new(format!("Q{n}"), self.q[..self.q_len[n]].iter().cloned())
    }

    pub fn capped_levels(&self) -> Vec<usize> {
        self.levels.iter().filter(|l| l.delta_capped).map(|l| l.index).collect()
    }

    fn extend_q(&mut self, delta: &[G::Element], n: usize) -> Vec<G::Element> {
        let mut added = Vec::new();
        let mut push = |x: G::Element, q: &mut Vec<G::Element>, seen: &mut HashSet<G::Element>| {
            if seen.insert(x.clone()) {
                q.push(x.clone());
                added.push(x);
            }
        };
        for d in delta {
            push(self.group.conj(d, &self.h0), &mut self.q, &mut self.q_seen);
        }
        let block = self.enumerator.prefix(self.config.prefix_block * (n + 1)).to_vec();
        for x in block {
            push(x, &mut self.q, &mut self.q_seen);
        }
        self.q_len.push(self.q.len());
        added
    }

    /// Builds the next level.
    pub fn step(&mut self) -> Result<()> {
        let n = self.levels.len();
        let gauge = records::gauge(&self.p, n as u64)?;
        let tile = self.tiles[n].clone();
        let a: Vec<G::Element> = tile.iter().filter(|x| !self.forbidden.contains(*x)).cloned().collect();
        let (delta, delta_capped) = delta_ball(&self.group, &self.alphabet, gauge, self.config.delta_cap);
        let q_added = self.extend_q(&delta, n);
        let (b, verification) = if n == 0 {
            (None, None)
        } else {
            let query = WitnessQuery {
                h: &self.h,
                q: &self.q,
                conj: &delta,
                z: &delta,
                forbidden: &self.forbidden,
            };
            let (b, v) = self.group.find_witness(&query, &self.config.search, n as u64).map_err(|e| match e {
                Error::SearchExhausted(msg) => Error::SearchExhausted(format!("level {n}: {msg}")),
                other => other,
            })?;
            (Some(b), Some(v))
        };
        let mut new_letters: Vec<G::Element> = a.clone();
        if let Some(b) = &b {
            new_letters.push(b.clone());
            new_letters.push(self.group.inv(b));
        }
        for x in new_letters {
            self.forbidden.insert(x.clone());
            if !self.group.is_identity(&x) && self.alphabet_seen.insert(x.clone()) {
                self.alphabet.push(x);
            }
        }
        self.levels.push(Level { index: n, gauge, tile, a, delta, delta_capped, q_added, b, verification });
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileEntry<E> {
    pub element: E,
    pub mass: BigRational,
    pub is_b: bool,
}

#[derive(Clone, Debug)]
pub struct TileMeasure<E> {
    pub index: usize,
    pub p: BigRational,
    pub entries: Vec<TileEntry<E>>,
    cumulative: Vec<f64>,
}

impl<E> TileMeasure<E> {
    pub fn new(index: usize, p: BigRational, entries: Vec<TileEntry<E>>) -> Self {
        let mut acc = 0.0;
        let cumulative = entries
            .iter()
            .map(|e| {
                acc += rational_to_f64(&(&e.mass / &p));
                acc
            })
            .collect();
        Self { index, p, entries, cumulative }
    }

    pub fn mass_sum(&self) -> BigRational {
        self.entries.iter().fold(BigRational::zero(), |acc, e| acc + &e.mass)
    }

    /// Entropy (natural log) of the conditional law within the tile.
    pub fn conditional_entropy(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| rational_to_f64(&(&e.mass / &self.p)))
            .filter(|&x| x > 0.0)
            .map(|x| -x * x.ln())
            .sum()
    }

    fn pick(&self, u: f64) -> usize {
        let total = *self.cumulative.last().expect("tiles are nonempty");
        self.cumulative.partition_point(|&c| c <= u * total).min(self.entries.len() - 1)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerStats {
    pub draws: u64,
    /// draws whose first index exceeded i_max and was resampled
    pub truncated: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub entropy_mu: f64,
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
    pub max_tile_entropy: f64,
}

/// μ truncated to the tiles 0..=i_max, with exact masses.
#[derive(Clone, Debug)]
pub struct BuiltMeasure<G: Group> {
    pub group: G,
    pub p: TailDistribution,
    pub i_max: usize,
    pub tiles: Vec<TileMeasure<G::Element>>,
    /// Σ_{i > i_max} p_i
    pub residual: BigRational,
}

fn split_evenly<E: Clone>(items: &[E], mass: &BigRational, is_b: bool, out: &mut Vec<TileEntry<E>>) {
    let share = mass / BigRational::from_integer(BigInt::from(items.len()));
    out.extend(items.iter().map(|x| TileEntry { element: x.clone(), mass: share.clone(), is_b }));
}

impl<G: Group> BuiltMeasure<G> {
    /// Within tile i ≥ 1: α_i p_i uniformly on A_i \ {b_i^{±1}} and the rest
    /// evenly on {b_i^{±1}}; a part that is empty passes its mass to the other.
    pub fn assemble(state: &BuilderState<G>) -> Self {
        let group = state.group.clone();
        let i_max = state.levels.len().saturating_sub(1);
        let mut tiles = Vec::with_capacity(state.levels.len());
        for level in &state.levels {
            let i = level.index;
            let p_i = state.p.mass_exact(i as u64).expect("exact law");
            let b_part: Vec<G::Element> = match &level.b {
                None => Vec::new(),
                Some(b) => {
                    let bi = group.inv(b);
                    if bi == *b {
                        vec![b.clone()]
                    } else {
                        vec![b.clone(), bi]
                    }
                }
            };
            let rest: Vec<G::Element> = level.a.iter().filter(|x| !b_part.contains(x)).cloned().collect();
            let mut entries = Vec::new();
            match (rest.is_empty(), b_part.is_empty()) {
                (true, true) => {}
                (true, false) => split_evenly(&b_part, &p_i, true, &mut entries),
                (false, true) => split_evenly(&rest, &p_i, false, &mut entries),
                (false, false) => {
                    let on_rest = &p_i * alpha(i);
                    split_evenly(&rest, &on_rest, false, &mut entries);
                    split_evenly(&b_part, &(&p_i - &on_rest), true, &mut entries);
                }
            }
            tiles.push(TileMeasure::new(i, p_i, entries));
        }
        let residual = state.p.tail_exact(i_max as u64 + 1).expect("exact law");
        Self { group, p: state.p.clone(), i_max, tiles, residual }
    }

    /// μ(g) on the truncated support.
    pub fn masses(&self) -> HashMap<G::Element, BigRational> {
        let mut m: HashMap<G::Element, BigRational> = HashMap::new();
        for t in &self.tiles {
            for e in &t.entries {
                *m.entry(e.element.clone()).or_insert_with(BigRational::zero) += &e.mass;
            }
        }
        m
    }

    pub fn tile_sums_exact(&self) -> bool {
        self.tiles.iter().all(|t| t.mass_sum() == t.p)
    }

    /// μ(g) = μ(g⁻¹) exactly for every g in the support.
    pub fn is_symmetric(&self) -> bool {
        let m = self.masses();
        m.iter().all(|(g, x)| m.get(&self.group.inv(g)) == Some(x))
    }

    /// No element carries mass from two tiles.
    pub fn tiles_disjoint(&self) -> bool {
        let mut seen = HashSet::new();
        self.tiles.iter().flat_map(|t| &t.entries).all(|e| seen.insert(&e.element))
    }

    /// H(μ) against log 4 + H(p), both over the indices 0..=i_max.
    pub fn entropy_bound_check(&self) -> EntropyReport {
        let entropy_mu = entropy_of(self.masses().values().map(rational_to_f64));
        let bound = 4f64.ln() + self.p.partial_entropy(self.i_max as u64);
        let max_tile_entropy = self.tiles.iter().map(TileMeasure::conditional_entropy).fold(0.0, f64::max);
        let slack = bound - entropy_mu;
        EntropyReport { entropy_mu, bound, slack, holds: slack >= 0.0, max_tile_entropy }
    }

    /// Draws the tile index from p (resampling indices beyond i_max), then
    /// the element within the tile.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, stats: &mut SamplerStats) -> (&TileEntry<G::Element>, usize) {
        stats.draws += 1;
        let mut i = self.p.sample(rng);
        if i as usize > self.i_max {
            stats.truncated += 1;
            while i as usize > self.i_max {
                i = self.p.sample(rng);
            }
        }
        let tile = &self.tiles[i as usize];
        let k = tile.pick(rng.gen::<f64>());
        (&tile.entries[k], i as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFlags {
    /// 1-based step
    pub time: usize,
    pub value: u64,
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbcReport {
    pub horizon: usize,
    pub records: Vec<RecordFlags>,
    /// first record index from which (A), (B), (C) hold through the horizon
    pub k0: Option<usize>,
}

/// Record times of the tile-index sequence (ties count as records) with:
/// (A) the step at T_k is a witness b_{R_k}^{±1}; (B) T_{k+1} ≤ Φ(R_k);
/// (C) no index equal to R_k occurs strictly between T_k and T_{k+1}.
/// For the last record, (B) fails only once the horizon reaches Φ(R_k).
pub fn verify_abc(indices: &[u64], is_b: &[bool], p: &TailDistribution) -> Result<AbcReport> {
    if indices.len() != is_b.len() {
        return Err(Error::Precondition("index and witness flags differ in length".into()));
    }
    let horizon = indices.len();
    if horizon == 0 {
        return Ok(AbcReport { horizon, records: Vec::new(), k0: None });
    }
    let trace = records::record_times(indices)?;
    let times = &trace.record_times;
    let mut flags = Vec::with_capacity(times.len());
    for (k, (&t, &r)) in times.iter().zip(&trace.record_values).enumerate() {
        let phi = records::gauge(p, r)?;
        let (b, c) = match times.get(k + 1) {
            Some(&next) => (next as u64 <= phi, trace.record_values[k + 1] > r),
            None => ((horizon as u64) < phi, true),
        };
        flags.push(RecordFlags { time: t, value: r, a: is_b[t - 1], b, c });
    }
    let mut k0 = None;
    for k in (0..flags.len()).rev() {
        let f = &flags[k];
        if f.a && f.b && f.c {
            k0 = Some(k);
        } else {
            break;
        }
    }
    Ok(AbcReport { horizon, records: flags, k0 })
}

#[cfg(test)]
mod tests;
