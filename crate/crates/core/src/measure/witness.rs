//! Witness search: b with Q ∩ H = Q ∩ (b^{±1}z)H(b^{±1}z)⁻¹ for every z ∈ Z.
//!
//! Windows are passed as a base set Q and conjugators D standing for the set
//! {d⁻¹ q d : d ∈ D, q ∈ Q}, which is never materialised.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chabauty::{Membership, Subgroup};
use crate::error::{Error, Result};
use crate::groups::{
    BaseElement, BaseGroup, BaumslagSolitar, Dyadic, Enumerator, Group, Site, Thompson, ThompsonElement,
    WreathElement, WreathGroup,
};
use crate::seed;

pub struct WitnessQuery<'a, G: Group> {
    pub h: &'a Subgroup<G>,
    pub q: &'a [G::Element],
    pub conj: &'a [G::Element],
    pub z: &'a [G::Element],
    /// elements b must avoid, together with their inverses
    pub forbidden: &'a HashSet<G::Element>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// verify every (d, q, z, ±) combination when there are at most this many
    pub exhaustive_limit: usize,
    /// otherwise verify this many seeded random combinations
    pub verify_samples: usize,
    /// candidates tried by the enumeration search
    pub budget: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { exhaustive_limit: 200_000, verify_samples: 2048, budget: 4096, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub checked: usize,
    pub total: u128,
    pub exhaustive: bool,
    pub passed: bool,
}

fn agrees<G: Group>(group: &G, h: &Subgroup<G>, x: &G::Element, y: &G::Element) -> bool {
    // x ∈ yHy⁻¹ ⟺ y⁻¹xy ∈ H
    let inside = h.contains(group, x);
    let moved = h.contains(group, &group.mul(&group.mul(&group.inv(y), x), y));
    inside != Membership::Undetermined && inside == moved
}

/// Checks the neighbourhood condition for b on all combinations, or on a
/// seeded sample of them when there are too many.
pub fn verify_witness<G: Group>(
    group: &G,
    query: &WitnessQuery<'_, G>,
    b: &G::Element,
    cfg: &SearchConfig,
    salt: u64,
) -> Verification {
    let bi = group.inv(b);
    let ys: Vec<G::Element> = query
        .z
        .iter()
        .flat_map(|z| [group.mul(b, z), group.mul(&bi, z)])
        .collect();
    let total = query.conj.len() as u128 * query.q.len() as u128 * ys.len() as u128;
    if total == 0 {
        return Verification { checked: 0, total, exhaustive: true, passed: true };
    }
    let conjugate = |d: &G::Element, q: &G::Element| group.mul(&group.mul(&group.inv(d), q), d);
    if total <= cfg.exhaustive_limit as u128 {
        let mut checked = 0;
        for d in query.conj {
            for q in query.q {
                let x = conjugate(d, q);
                for y in &ys {
                    checked += 1;
                    if !agrees(group, query.h, &x, y) {
                        return Verification { checked, total, exhaustive: true, passed: false };
                    }
                }
            }
        }
        return Verification { checked, total, exhaustive: true, passed: true };
    }
    let mut rng = seed::rng_for(cfg.seed, salt);
    for checked in 1..=cfg.verify_samples {
        let d = &query.conj[rng.gen_range(0..query.conj.len())];
        let q = &query.q[rng.gen_range(0..query.q.len())];
        let y = &ys[rng.gen_range(0..ys.len())];
        if !agrees(group, query.h, &conjugate(d, q), y) {
            return Verification { checked, total, exhaustive: false, passed: false };
        }
    }
    Verification { checked: cfg.verify_samples, total, exhaustive: false, passed: true }
}

fn admissible<G: Group>(group: &G, query: &WitnessQuery<'_, G>, b: &G::Element) -> bool {
    !group.is_identity(b) && !query.forbidden.contains(b) && !query.forbidden.contains(&group.inv(b))
}

/// Tries candidates in enumeration order.
pub fn enumeration_search<G: Group>(
    group: &G,
    query: &WitnessQuery<'_, G>,
    cfg: &SearchConfig,
    salt: u64,
) -> Result<(G::Element, Verification)> {
    if query.z.is_empty() {
        return Ok((group.identity(), Verification { checked: 0, total: 0, exhaustive: true, passed: true }));
    }
    let mut e = Enumerator::new(group.clone());
    for i in 1..=cfg.budget {
        let Some(b) = e.get(i).cloned() else { break };
        if !admissible(group, query, &b) {
            continue;
        }
        let v = verify_witness(group, query, &b, cfg, salt);
        if v.passed {
            return Ok((b, v));
        }
    }
    Err(Error::SearchExhausted(format!(
        "no witness among the first {} elements of {} (|Q| = {}, |D| = {}, |Z| = {})",
        cfg.budget,
        group.describe(),
        query.q.len(),
        query.conj.len(),
        query.z.len()
    )))
}

pub trait WitnessSearch: Group {
    fn find_witness(
        &self,
        query: &WitnessQuery<'_, Self>,
        cfg: &SearchConfig,
        salt: u64,
    ) -> Result<(Self::Element, Verification)> {
        enumeration_search(self, query, cfg, salt)
    }
}

impl WitnessSearch for BaumslagSolitar {}

impl WitnessSearch for BaseGroup {}

/// Smallest N ≥ 0 with supp(d⁻¹ q d) ⊆ [−N, N] for all d and all q ∈ [F, F].
pub fn thompson_support_bound(q: &[ThompsonElement], conj: &[ThompsonElement]) -> BigInt {
    let nq = q.iter().filter_map(ThompsonElement::support_radius).max().unwrap_or_else(BigInt::zero);
    let (lo, hi) = (Dyadic::from_int(-&nq), Dyadic::from_int(nq.clone()));
    // supp(d⁻¹ q d) = d⁻¹(supp q) and d⁻¹ is increasing
    conj.iter()
        .map(|d| (-d.eval_inverse(&lo).floor()).max(d.eval_inverse(&hi).ceil()))
        .chain(std::iter::once(nq))
        .max()
        .unwrap()
        .max(BigInt::zero())
}

/// Smallest M ≥ 1 with M ≥ |x| + |m| for every breakpoint x and end shift m of every z.
pub fn thompson_translation_bound(z: &[ThompsonElement]) -> BigInt {
    z.iter()
        .map(|z| {
            let shift = z.left_shift.abs().max(z.right_shift.abs());
            let hull = match z.breakpoint_hull() {
                Some((lo, hi)) => (-lo.floor()).max(hi.ceil()),
                None => BigInt::zero(),
            };
            hull.max(BigInt::zero()) + shift
        })
        .max()
        .unwrap_or_else(BigInt::zero)
        .max(BigInt::one())
}

impl WitnessSearch for Thompson {
    /// Translation by −(M + N + 1), moved further out only if that element is forbidden.
    fn find_witness(
        &self,
        query: &WitnessQuery<'_, Self>,
        cfg: &SearchConfig,
        salt: u64,
    ) -> Result<(ThompsonElement, Verification)> {
        let n = thompson_support_bound(query.q, query.conj);
        let m = thompson_translation_bound(query.z);
        let mut c = m + n + 1;
        for _ in 0..cfg.budget {
            let b = ThompsonElement::translation(-&c);
            if admissible(self, query, &b) {
                let v = verify_witness(self, query, &b, cfg, salt);
                if v.passed {
                    return Ok((b, v));
                }
                return Err(Error::SearchExhausted(format!("translation by -{c} failed verification")));
            }
            c += 1;
        }
        Err(Error::SearchExhausted("every candidate translation is forbidden".into()))
    }
}

fn linf(b: &BaseElement) -> Option<i64> {
    match b {
        BaseElement::Integer(x) => Some(x.abs()),
        BaseElement::Tuple(v) => Some(v.iter().map(|x| x.abs()).max().unwrap_or(0)),
        _ => None,
    }
}

/// ℓ∞ radius of the lamp sites and the position of x.
fn footprint_radius(x: &WreathElement) -> Option<i64> {
    let mut r = linf(&x.position)?;
    for s in x.lamps.keys() {
        if let Site::Point(p) = s {
            r = r.max(linf(p)?);
        }
    }
    Some(r)
}

fn first_axis(base: &BaseGroup, k: i64) -> Option<BaseElement> {
    match base {
        BaseGroup::Integer => Some(BaseElement::Integer(k)),
        BaseGroup::Lattice(d) if *d > 0 => {
            let mut v = vec![0; *d];
            v[0] = k;
            Some(BaseElement::Tuple(v))
        }
        _ => None,
    }
}

impl WitnessSearch for WreathGroup {
    /// Over ℤ or ℤ^d: translate along the first axis far enough that the
    /// footprints of b^{±1}Z miss the footprint of the conjugated window.
    fn find_witness(
        &self,
        query: &WitnessQuery<'_, Self>,
        cfg: &SearchConfig,
        salt: u64,
    ) -> Result<(WreathElement, Verification)> {
        let radius = |xs: &[WreathElement]| -> Option<i64> {
            xs.iter().map(footprint_radius).try_fold(0i64, |acc, r| Some(acc.max(r?)))
        };
        let bounds = (radius(query.q), radius(query.conj), radius(query.z));
        let (Some(rq), Some(rd), Some(rz)) = bounds else {
            return enumeration_search(self, query, cfg, salt);
        };
        if first_axis(&self.base, 1).is_none() {
            return enumeration_search(self, query, cfg, salt);
        }
        // sites of d⁻¹ q d lie within rq + 2 rd
        let start = rq + 2 * rd + rz + 1;
        for k in start..start + cfg.budget as i64 {
            let b = self.translation(first_axis(&self.base, k).unwrap());
            if !admissible(self, query, &b) {
                continue;
            }
            let v = verify_witness(self, query, &b, cfg, salt);
            if v.passed {
                return Ok((b, v));
            }
        }
        Err(Error::SearchExhausted(format!("no axis translation from {start} passed verification")))
    }
}
