//! Subgroups as membership predicates, finite windows, Chabauty neighbourhood
//! tests and conjugation traces along random-walk trajectories.

mod oracles;
mod trace;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::groups::{Enumerator, Group};

pub use oracles::{
    thompson_h_membership, wreath_limit_membership, CyclicA, LampConfiguration, PermWreathSum, ThompsonH,
    WreathDiagonal,
};
pub use trace::{
    fingerprint_of_hex, mask_fingerprint, mask_hex, trace_conjugates, ConjugationTracker, GenericTracker, ThompsonTracker, TraceRecorder, WindowTrace,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Membership {
    In,
    Out,
    Undetermined,
}

impl Membership {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Membership::In
        } else {
            Membership::Out
        }
    }

    pub fn is_in(self) -> bool {
        self == Membership::In
    }
}

/// A named family of subgroups with decidable membership.
pub trait FamilyOracle<G: Group>: Send + Sync + fmt::Debug {
    fn contains(&self, group: &G, x: &G::Element) -> Membership;

    /// A cheap sufficient test for g H g⁻¹ = H.
    fn normalizes(&self, _group: &G, _g: &G::Element) -> bool {
        false
    }

    fn describe(&self) -> String;
}

#[derive(Clone, Debug)]
pub enum Subgroup<G: Group> {
    Trivial,
    Family(Arc<dyn FamilyOracle<G>>),
    /// by · inner · by⁻¹
    Conjugate { by: G::Element, inner: Box<Subgroup<G>> },
    Intersection(Vec<Subgroup<G>>),
}

impl<G: Group> Subgroup<G> {
    pub fn family(oracle: impl FamilyOracle<G> + 'static) -> Self {
        Subgroup::Family(Arc::new(oracle))
    }

    /// g · self · g⁻¹, folding nested conjugations.
    pub fn conjugate(&self, group: &G, g: &G::Element) -> Self {
        match self {
            Subgroup::Trivial => Subgroup::Trivial,
            Subgroup::Conjugate { by, inner } => {
                Subgroup::Conjugate { by: group.mul(g, by), inner: inner.clone() }
            }
            other => Subgroup::Conjugate { by: g.clone(), inner: Box::new(other.clone()) },
        }
    }

    pub fn contains(&self, group: &G, x: &G::Element) -> Membership {
        match self {
            Subgroup::Trivial => Membership::from_bool(group.is_identity(x)),
            Subgroup::Family(o) => o.contains(group, x),
            Subgroup::Conjugate { by, inner } => {
                let y = group.mul(&group.mul(&group.inv(by), x), by);
                inner.contains(group, &y)
            }
            Subgroup::Intersection(parts) => {
                let mut undetermined = false;
                for p in parts {
                    match p.contains(group, x) {
                        Membership::Out => return Membership::Out,
                        Membership::Undetermined => undetermined = true,
                        Membership::In => {}
                    }
                }
                if undetermined {
                    Membership::Undetermined
                } else {
                    Membership::In
                }
            }
        }
    }

    pub fn normalizes(&self, group: &G, g: &G::Element) -> bool {
        match self {
            Subgroup::Trivial => true,
            Subgroup::Family(o) => o.normalizes(group, g),
            Subgroup::Conjugate { by, inner } => {
                inner.normalizes(group, &group.mul(&group.mul(&group.inv(by), g), by))
            }
            Subgroup::Intersection(parts) => parts.iter().all(|p| p.normalizes(group, g)),
        }
    }

    pub fn describe(&self, group: &G) -> String {
        match self {
            Subgroup::Trivial => "trivial".into(),
            Subgroup::Family(o) => o.describe(),
            Subgroup::Conjugate { by, inner } => format!("conj({}; {})", group.format(by), inner.describe(group)),
            Subgroup::Intersection(parts) => {
                let inner: Vec<String> = parts.iter().map(|p| p.describe(group)).collect();
                format!("intersection({})", inner.join(", "))
            }
        }
    }
}

/// A finite, duplicate-free, ordered set of elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window<E> {
    pub label: String,
    elements: Vec<E>,
}

impl<E: Clone + Eq + std::hash::Hash> Window<E> {
    pub fn new(label: impl Into<String>, items: impl IntoIterator<Item = E>) -> Self {
        let mut seen = HashSet::new();
        let elements = items.into_iter().filter(|x| seen.insert(x.clone())).collect();
        Self { label: label.into(), elements }
    }

    pub fn elements(&self) -> &[E] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: &E) -> bool {
        self.elements.contains(x)
    }

    pub fn is_subset_of(&self, other: &Window<E>) -> bool {
        let set: HashSet<&E> = other.elements.iter().collect();
        self.elements.iter().all(|x| set.contains(x))
    }
}

/// Enumeration prefixes of sizes 2^j · 16 for j = 1..=count.
pub fn exhaustion<G: Group>(group: &G, count: usize) -> Vec<Window<G::Element>> {
    let mut e = Enumerator::new(group.clone());
    (1..=count).map(|j| Window::new(format!("Q{j}"), e.prefix(16usize << j).to_vec())).collect()
}

pub fn window_mask<G: Group>(group: &G, h: &Subgroup<G>, q: &Window<G::Element>) -> Vec<Membership> {
    q.elements().iter().map(|x| h.contains(group, x)).collect()
}

/// Q ∩ H; undetermined elements are left out.
pub fn window_intersect<G: Group>(group: &G, h: &Subgroup<G>, q: &Window<G::Element>) -> Vec<G::Element> {
    q.elements().iter().filter(|x| h.contains(group, x).is_in()).cloned().collect()
}

/// Whether Q ∩ H = Q ∩ K; `None` if some membership is undetermined.
pub fn neighborhood_equal<G: Group>(
    group: &G,
    h: &Subgroup<G>,
    k: &Subgroup<G>,
    q: &Window<G::Element>,
) -> Option<bool> {
    let mut equal = true;
    for x in q.elements() {
        match (h.contains(group, x), k.contains(group, x)) {
            (Membership::Undetermined, _) | (_, Membership::Undetermined) => return None,
            (a, b) if a != b => equal = false,
            _ => {}
        }
    }
    Some(equal)
}

/// Oracle answers on a window against the ball of radius `length` in a
/// finite generating set of H.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleAgreement {
    pub family: String,
    pub window: usize,
    pub subgroup_ball: usize,
    pub ball_capped: bool,
    /// window elements found in the subgroup ball
    pub members: usize,
    pub undetermined: usize,
    /// formatted window elements on which the two sides differ
    pub mismatches: Vec<String>,
}

impl OracleAgreement {
    pub fn agrees(&self) -> bool {
        self.mismatches.is_empty() && self.undetermined == 0 && !self.ball_capped
    }
}

pub fn brute_force_agreement<G: Group>(
    group: &G,
    family: impl Into<String>,
    h: &Subgroup<G>,
    generators: &[G::Element],
    length: u64,
    window: &[G::Element],
    cap: usize,
) -> OracleAgreement {
    let (ball, ball_capped) = crate::measure::delta_ball(group, generators, length, cap);
    let ball: HashSet<G::Element> = ball.into_iter().collect();
    compare_on_window(group, family.into(), h, window, ball.len(), ball_capped, |x| ball.contains(x))
}

/// The same comparison for generators that commute pairwise. Every word of
/// length ≤ `length` in them and their inverses then equals an ordered word
/// g_1^{e_1} ⋯ g_s^{e_s} with Σ|e_i| ≤ `length`, so enumerating exponent
/// vectors covers the whole ball without storing it. `subgroup_ball` counts
/// the exponent vectors.
pub fn commuting_word_agreement<G: Group>(
    group: &G,
    family: impl Into<String>,
    h: &Subgroup<G>,
    generators: &[G::Element],
    length: u64,
    window: &[G::Element],
) -> crate::error::Result<OracleAgreement> {
    for (i, a) in generators.iter().enumerate() {
        for b in &generators[i + 1..] {
            if group.mul(a, b) != group.mul(b, a) {
                return Err(crate::error::Error::Precondition(format!(
                    "{} and {} do not commute",
                    group.format(a),
                    group.format(b)
                )));
            }
        }
    }
    let targets: HashSet<&G::Element> = window.iter().collect();
    let inverses: Vec<G::Element> = generators.iter().map(|g| group.inv(g)).collect();
    let mut walk = OrderedWords { group, generators, inverses: &inverses, targets: &targets, found: HashSet::new(), vectors: 0 };
    walk.descend(0, length, &group.identity());
    let OrderedWords { found, vectors, .. } = walk;
    Ok(compare_on_window(group, family.into(), h, window, vectors, false, |x| found.contains(x)))
}

struct OrderedWords<'a, G: Group> {
    group: &'a G,
    generators: &'a [G::Element],
    inverses: &'a [G::Element],
    targets: &'a HashSet<&'a G::Element>,
    found: HashSet<G::Element>,
    vectors: usize,
}

impl<G: Group> OrderedWords<'_, G> {
    fn descend(&mut self, i: usize, budget: u64, acc: &G::Element) {
        if i == self.generators.len() {
            self.vectors += 1;
            if self.targets.contains(acc) {
                self.found.insert(acc.clone());
            }
            return;
        }
        self.descend(i + 1, budget, acc);
        for step in [&self.generators[i], &self.inverses[i]] {
            let mut x = acc.clone();
            for e in 1..=budget {
                x = self.group.mul(&x, step);
                self.descend(i + 1, budget - e, &x);
            }
        }
    }
}

fn compare_on_window<G: Group>(
    group: &G,
    family: String,
    h: &Subgroup<G>,
    window: &[G::Element],
    subgroup_ball: usize,
    ball_capped: bool,
    in_ball: impl Fn(&G::Element) -> bool,
) -> OracleAgreement {
    let mut out = OracleAgreement {
        family,
        window: window.len(),
        subgroup_ball,
        ball_capped,
        members: 0,
        undetermined: 0,
        mismatches: Vec::new(),
    };
    for x in window {
        let brute = in_ball(x);
        out.members += brute as usize;
        match h.contains(group, x) {
            Membership::Undetermined => out.undetermined += 1,
            m if m.is_in() != brute => out.mismatches.push(group.format(x)),
            _ => {}
        }
    }
    out
}

/// Probe elements lying in z H z⁻¹ for every z ∈ Z.
pub fn normalish_witnesses<G: Group>(
    group: &G,
    h: &Subgroup<G>,
    z: &[G::Element],
    probe: &[G::Element],
) -> Vec<G::Element> {
    let conjugates: Vec<Subgroup<G>> = z.iter().map(|zz| h.conjugate(group, zz)).collect();
    probe
        .iter()
        .filter(|x| conjugates.iter().all(|c| c.contains(group, x).is_in()))
        .cloned()
        .collect()
}
