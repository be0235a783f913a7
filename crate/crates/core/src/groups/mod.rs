//! Exact element arithmetic for the group families used by the experiments.
//!
//! Every family implements [`Group`]: elements are kept in a canonical form so
//! that equality of elements is structural equality of values.

mod base;
mod bs;
mod dyadic;
mod thompson;
mod wreath;

use std::collections::HashSet;
use std::fmt::Debug;
use std::hash::Hash;

pub use base::{BaseElement, BaseGroup};
pub use bs::{BaumslagSolitar, BsElement, Letter};
pub use dyadic::Dyadic;
pub use thompson::{Affine, Thompson, ThompsonElement};
pub use wreath::{Site, WreathElement, WreathGroup};

use crate::error::Result;

pub trait Group: Clone + Send + Sync {
    type Element: Clone + Eq + Ord + Hash + Debug + Send + Sync;

    fn identity(&self) -> Self::Element;
    fn mul(&self, x: &Self::Element, y: &Self::Element) -> Self::Element;
    fn inv(&self, x: &Self::Element) -> Self::Element;
    /// x ← x·y
    fn mul_assign(&self, x: &mut Self::Element, y: &Self::Element) {
        *x = self.mul(x, y);
    }
    /// A symmetric generating set in a fixed order; drives [`Enumerator`].
    fn generators(&self) -> Vec<Self::Element>;
    fn format(&self, x: &Self::Element) -> String;
    fn parse(&self, text: &str) -> Result<Self::Element>;
    fn describe(&self) -> String;

    fn is_identity(&self, x: &Self::Element) -> bool {
        *x == self.identity()
    }

    /// g x g⁻¹
    fn conj(&self, g: &Self::Element, x: &Self::Element) -> Self::Element {
        self.mul(&self.mul(g, x), &self.inv(g))
    }

    fn product<'a, I>(&self, items: I) -> Self::Element
    where
        I: IntoIterator<Item = &'a Self::Element>,
        Self::Element: 'a,
    {
        items.into_iter().fold(self.identity(), |acc, x| self.mul(&acc, x))
    }

    fn pow(&self, x: &Self::Element, k: i64) -> Self::Element {
        let base = if k < 0 { self.inv(x) } else { x.clone() };
        let mut acc = self.identity();
        for _ in 0..k.unsigned_abs() {
            acc = self.mul(&acc, &base);
        }
        acc
    }
}

/// Breadth-first enumeration of a group by word length over its generators,
/// deduplicated by canonical form. Index 0 is the identity.
#[derive(Clone, Debug)]
pub struct Enumerator<G: Group> {
    group: G,
    generators: Vec<G::Element>,
    elements: Vec<G::Element>,
    seen: HashSet<G::Element>,
    expanded: usize,
}

impl<G: Group> Enumerator<G> {
    pub fn new(group: G) -> Self {
        let generators = group.generators();
        let id = group.identity();
        let mut seen = HashSet::new();
        seen.insert(id.clone());
        Self { group, generators, elements: vec![id], seen, expanded: 0 }
    }

    pub fn group(&self) -> &G {
        &self.group
    }

    /// Element number `i`, or `None` when the group is finite with at most `i` elements.
    pub fn get(&mut self, i: usize) -> Option<&G::Element> {
        while self.elements.len() <= i {
            if !self.expand_one() {
                return None;
            }
        }
        self.elements.get(i)
    }

    /// The first `n` elements (fewer if the group is smaller).
    pub fn prefix(&mut self, n: usize) -> &[G::Element] {
        if n > 0 {
            let _ = self.get(n - 1);
        }
        &self.elements[..n.min(self.elements.len())]
    }

    pub fn position(&mut self, x: &G::Element, search_limit: usize) -> Option<usize> {
        for i in 0..search_limit {
            match self.get(i) {
                Some(y) if y == x => return Some(i),
                Some(_) => {}
                None => return None,
            }
        }
        None
    }

    fn expand_one(&mut self) -> bool {
        if self.expanded >= self.elements.len() {
            return false;
        }
        let x = self.elements[self.expanded].clone();
        self.expanded += 1;
        for g in &self.generators {
            let y = self.group.mul(&x, g);
            if self.seen.insert(y.clone()) {
                self.elements.push(y);
            }
        }
        true
    }
}

pub fn enumerate<G: Group>(group: &G, i: usize) -> Option<G::Element> {
    Enumerator::new(group.clone()).get(i).cloned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_spiral() {
        let g = BaseGroup::Integer;
        let mut e = Enumerator::new(g);
        let first: Vec<_> = e.prefix(5).to_vec();
        assert_eq!(
            first,
            vec![
                BaseElement::Integer(0),
                BaseElement::Integer(1),
                BaseElement::Integer(-1),
                BaseElement::Integer(2),
                BaseElement::Integer(-2)
            ]
        );
    }

    #[test]
    fn finite_group_exhausts() {
        let mut e = Enumerator::new(BaseGroup::Symmetric(3));
        assert_eq!(e.prefix(100).len(), 6);
        assert!(e.get(6).is_none());
    }

    #[test]
    fn bs_prefix_distinct_and_inverse_closed() {
        let g = BaumslagSolitar::new(2, 3).unwrap();
        let mut e = Enumerator::new(g.clone());
        let first: Vec<_> = e.prefix(10).to_vec();
        assert_eq!(first[0], g.identity());
        for i in 0..first.len() {
            for j in 0..i {
                assert_ne!(first[i], first[j]);
            }
        }
        let big: Vec<_> = e.prefix(400).to_vec();
        for x in &big[..100] {
            assert!(big.contains(&g.inv(x)), "inverse of {} missing", g.format(x));
        }
    }
}
