//! Membership oracles for the named subgroup families.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::{FamilyOracle, Membership};
use crate::error::{Error, Result};
use crate::groups::{
    BaseElement, BaseGroup, BaumslagSolitar, BsElement, Dyadic, Group, Site, ThompsonElement, WreathElement,
    WreathGroup,
};

/// ⟨a⟩ in BS(m, n).
#[derive(Clone, Copy, Debug, Default)]
pub struct CyclicA;

impl FamilyOracle<BaumslagSolitar> for CyclicA {
    fn contains(&self, _group: &BaumslagSolitar, x: &BsElement) -> Membership {
        Membership::from_bool(x.as_a_power().is_some())
    }

    fn normalizes(&self, _group: &BaumslagSolitar, g: &BsElement) -> bool {
        g.as_a_power().is_some()
    }

    fn describe(&self) -> String {
        "<a>".into()
    }
}

const CACHED_POWERS: i64 = 32;

/// The subgroup of F generated by the translates t_k f t_k⁻¹, k ∈ ℤ.
#[derive(Debug)]
pub struct ThompsonH {
    f: ThompsonElement,
    lo: Dyadic,
    hi: Dyadic,
    /// slope exponent of f just right of `lo`
    kappa: i32,
    powers: OnceLock<Vec<ThompsonElement>>,
}

impl ThompsonH {
    /// `f` must be nontrivial with support inside [0, 1].
    pub fn new(f: ThompsonElement) -> Result<Self> {
        let bad = |why: &str| Error::Precondition(format!("generator of H: {why}"));
        if !f.in_commutator() {
            return Err(bad("must have compact support"));
        }
        let (lo, hi) = match f.breakpoint_hull() {
            Some((lo, hi)) => (lo.clone(), hi.clone()),
            None => return Err(bad("must be nontrivial")),
        };
        if lo < Dyadic::zero() || hi > Dyadic::from_int(1) {
            return Err(bad("support must lie in [0, 1]"));
        }
        let kappa = f.pieces[0].k;
        Ok(Self { f, lo, hi, kappa, powers: OnceLock::new() })
    }

    pub fn generator(&self) -> &ThompsonElement {
        &self.f
    }

    /// f^j
    pub fn power(&self, j: i64) -> ThompsonElement {
        let cache = self.powers.get_or_init(|| {
            let fi = self.f.inverse();
            let mut v = vec![ThompsonElement::identity(); (2 * CACHED_POWERS + 1) as usize];
            for i in 1..=CACHED_POWERS as usize {
                v[CACHED_POWERS as usize + i] = v[CACHED_POWERS as usize + i - 1].compose(&self.f);
                v[CACHED_POWERS as usize - i] = v[CACHED_POWERS as usize - i + 1].compose(&fi);
            }
            v
        });
        if j.abs() <= CACHED_POWERS {
            return cache[(j + CACHED_POWERS) as usize].clone();
        }
        let base = if j > 0 { self.f.clone() } else { self.f.inverse() };
        (0..j.unsigned_abs()).fold(ThompsonElement::identity(), |acc, _| acc.compose(&base))
    }

    /// t_k f^j t_k⁻¹
    pub fn translate_power(&self, k: &BigInt, j: i64) -> ThompsonElement {
        self.power(j).conj_shift(k)
    }

    /// The k with k + lo ≤ b ≤ k + hi (two of them when b is a shared endpoint).
    fn cells_of(&self, b: &Dyadic) -> Vec<BigInt> {
        let k = b.floor();
        [k.clone() - 1, k]
            .into_iter()
            .filter(|k| {
                let kd = Dyadic::from_int(k.clone());
                &kd + &self.lo <= *b && *b <= &kd + &self.hi
            })
            .collect()
    }

    pub fn contains_element(&self, g: &ThompsonElement) -> bool {
        if !g.in_commutator() {
            return false;
        }
        let mut cells = BTreeSet::new();
        for b in &g.breakpoints {
            let ks = self.cells_of(b);
            if ks.is_empty() {
                return false;
            }
            cells.extend(ks);
        }
        let mut candidate = ThompsonElement::identity();
        for k in &cells {
            let start = &Dyadic::from_int(k.clone()) + &self.lo;
            let slope = g.slope_exponent_right_of(&start);
            if slope % self.kappa != 0 {
                return false;
            }
            let j = (slope / self.kappa) as i64;
            candidate = candidate.compose(&self.translate_power(k, j));
        }
        candidate == *g
    }
}

/// Whether g lies in the subgroup generated by the integer translates of f.
pub fn thompson_h_membership(g: &ThompsonElement, f: &ThompsonElement) -> Result<bool> {
    Ok(ThompsonH::new(f.clone())?.contains_element(g))
}

impl FamilyOracle<crate::groups::Thompson> for ThompsonH {
    fn contains(&self, _group: &crate::groups::Thompson, x: &ThompsonElement) -> Membership {
        Membership::from_bool(self.contains_element(x))
    }

    fn normalizes(&self, _group: &crate::groups::Thompson, g: &ThompsonElement) -> bool {
        g.is_translation()
    }

    fn describe(&self) -> String {
        format!("H(f = {})", self.f)
    }
}

/// Limit lamp values with a certification status. A site is certified when
/// it lies in `window` (every site if `window` is None) and not in
/// `uncertified`; its value is `values[site]`, or the identity when absent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LampConfiguration {
    pub values: BTreeMap<Site, BaseElement>,
    pub uncertified: BTreeSet<Site>,
    #[serde(default)]
    pub window: Option<BTreeSet<Site>>,
}

impl LampConfiguration {
    pub fn is_certified(&self, site: &Site) -> bool {
        !self.uncertified.contains(site) && self.window.as_ref().map_or(true, |w| w.contains(site))
    }

    pub fn value(&self, lamp: &BaseGroup, site: &Site) -> BaseElement {
        self.values.get(site).cloned().unwrap_or_else(|| lamp.identity())
    }
}

fn conjugate_in_cyclic(lamp: &BaseGroup, c: &BaseElement, v: &BaseElement, a: &BaseElement) -> bool {
    // c⁻¹ v c ∈ ⟨a⟩
    let y = lamp.mul(&lamp.mul(&lamp.inv(c), v), c);
    lamp.in_cyclic_subgroup(&y, a)
}

/// Decides whether the lamp part of x lies in ⊕_b ⟨c_b a c_b⁻¹⟩ with c_b the
/// limit value at b.
pub fn wreath_limit_membership(
    lamp: &BaseGroup,
    lamps: &BTreeMap<Site, BaseElement>,
    conf: &LampConfiguration,
    a: &BaseElement,
) -> Membership {
    let mut undetermined = false;
    for (site, v) in lamps {
        if conf.is_certified(site) {
            if !conjugate_in_cyclic(lamp, &conf.value(lamp, site), v, a) {
                return Membership::Out;
            }
        } else if lamp.is_abelian() {
            if !lamp.in_cyclic_subgroup(v, a) {
                return Membership::Out;
            }
        } else if let Some(all) = lamp.elements() {
            let answers: BTreeSet<bool> = all.iter().map(|c| conjugate_in_cyclic(lamp, c, v, a)).collect();
            if answers.len() > 1 {
                undetermined = true;
            } else if answers.contains(&false) {
                return Membership::Out;
            }
        } else {
            undetermined = true;
        }
    }
    if undetermined {
        Membership::Undetermined
    } else {
        Membership::In
    }
}

/// The limit subgroup H(w) = ⟨δ_b^{c_b a c_b⁻¹}⟩ of a lamplighter trajectory.
#[derive(Clone, Debug)]
pub struct WreathDiagonal {
    pub a: BaseElement,
    pub conf: LampConfiguration,
}

impl WreathDiagonal {
    pub fn new(group: &WreathGroup, a: BaseElement, conf: LampConfiguration) -> Result<Self> {
        group.lamp.validate(&a)?;
        if a == group.lamp.identity() {
            return Err(Error::Precondition("a must be a nontrivial lamp value".into()));
        }
        Ok(Self { a, conf })
    }
}

impl FamilyOracle<WreathGroup> for WreathDiagonal {
    fn contains(&self, group: &WreathGroup, x: &WreathElement) -> Membership {
        if x.position != group.base.identity() {
            return Membership::Out;
        }
        wreath_limit_membership(&group.lamp, &x.lamps, &self.conf, &self.a)
    }

    fn describe(&self) -> String {
        format!("H(w; a = {}, {} set lamps)", self.a, self.conf.values.len())
    }
}

/// ⊕_{x ∈ O} ⟨a⟩ over the orbit O of base points (the fixed point ∗ excluded).
#[derive(Clone, Debug)]
pub struct PermWreathSum {
    pub a: BaseElement,
}

impl FamilyOracle<WreathGroup> for PermWreathSum {
    fn contains(&self, group: &WreathGroup, x: &WreathElement) -> Membership {
        if x.position != group.base.identity() {
            return Membership::Out;
        }
        Membership::from_bool(x.lamps.iter().all(|(s, v)| match s {
            Site::Point(_) => group.lamp.in_cyclic_subgroup(v, &self.a),
            Site::Fixed => false,
        }))
    }

    fn normalizes(&self, _group: &WreathGroup, g: &WreathElement) -> bool {
        g.lamps.keys().all(|s| *s == Site::Fixed)
    }

    fn describe(&self) -> String {
        format!("sum over the orbit of <{}>", self.a)
    }
}
