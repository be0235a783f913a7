//! The catalog of base groups: ℤ, ℤ^d, ℤ/q, free groups F_k and symmetric
//! groups S_s. They serve as lamp groups A and base groups B of wreath products.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::Group;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum BaseGroup {
    Integer,
    Lattice(usize),
    Cyclic(u64),
    Free(usize),
    Symmetric(usize),
}

/// Free-group words store letters as ±i (generator i ≥ 1, sign for inverse).
/// Permutations store 0-based images: `Perm(p)` maps i to p[i].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseElement {
    Integer(i64),
    Tuple(Vec<i64>),
    Cyclic(u64),
    Free(Vec<i32>),
    Perm(Vec<u8>),
}

impl BaseElement {
    /// Permutation from 1-based cycle notation, e.g. `&[&[1, 3]]` for (13).
    pub fn perm_from_cycles(degree: usize, cycles: &[&[u8]]) -> Self {
        let mut p: Vec<u8> = (0..degree as u8).collect();
        for cycle in cycles {
            for (i, &x) in cycle.iter().enumerate() {
                let y = cycle[(i + 1) % cycle.len()];
                p[(x - 1) as usize] = y - 1;
            }
        }
        BaseElement::Perm(p)
    }

    pub fn unit_vector(dim: usize, axis: usize, sign: i64) -> Self {
        let mut v = vec![0; dim];
        v[axis] = sign;
        BaseElement::Tuple(v)
    }
}

impl BaseGroup {
    /// Checks that `x` is a canonical element of this group.
    pub fn validate(&self, x: &BaseElement) -> Result<()> {
        let ok = match (self, x) {
            (BaseGroup::Integer, BaseElement::Integer(_)) => true,
            (BaseGroup::Lattice(d), BaseElement::Tuple(v)) => v.len() == *d,
            (BaseGroup::Cyclic(q), BaseElement::Cyclic(r)) => r < q,
            (BaseGroup::Free(k), BaseElement::Free(w)) => {
                w.iter().all(|&l| l != 0 && l.unsigned_abs() as usize <= *k)
                    && w.windows(2).all(|p| p[0] != -p[1])
            }
            (BaseGroup::Symmetric(s), BaseElement::Perm(p)) => {
                let mut seen = vec![false; *s];
                p.len() == *s
                    && p.iter().all(|&i| (i as usize) < *s && !std::mem::replace(&mut seen[i as usize], true))
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::GroupMismatch(format!("{x:?} is not a canonical element of {self:?}")))
        }
    }

    pub fn is_abelian(&self) -> bool {
        match self {
            BaseGroup::Integer | BaseGroup::Lattice(_) | BaseGroup::Cyclic(_) => true,
            BaseGroup::Free(k) => *k <= 1,
            BaseGroup::Symmetric(s) => *s <= 2,
        }
    }

    /// All elements, for finite groups.
    pub fn elements(&self) -> Option<Vec<BaseElement>> {
        match self {
            BaseGroup::Cyclic(q) => Some((0..*q).map(BaseElement::Cyclic).collect()),
            BaseGroup::Symmetric(_) => Some(super::Enumerator::new(self.clone()).prefix(usize::MAX).to_vec()),
            _ => None,
        }
    }

    /// Decides x ∈ ⟨a⟩.
    pub fn in_cyclic_subgroup(&self, x: &BaseElement, a: &BaseElement) -> bool {
        match (x, a) {
            (BaseElement::Integer(x), BaseElement::Integer(a)) => {
                if *a == 0 {
                    *x == 0
                } else {
                    x % a == 0
                }
            }
            (BaseElement::Tuple(x), BaseElement::Tuple(a)) => {
                let Some(i) = a.iter().position(|&c| c != 0) else {
                    return x.iter().all(|&c| c == 0);
                };
                if x[i] % a[i] != 0 {
                    return false;
                }
                let k = x[i] / a[i];
                x.iter().zip(a).all(|(xc, ac)| *xc == k * ac)
            }
            (BaseElement::Free(xw), _) => {
                let bound = xw.len() as i64 + 1;
                (-bound..=bound).any(|k| self.pow(a, k) == *x)
            }
            _ => {
                // finite cyclic subgroup: walk the powers of a
                let id = self.identity();
                let mut p = id.clone();
                loop {
                    if p == *x {
                        return true;
                    }
                    p = self.mul(&p, a);
                    if p == id {
                        return false;
                    }
                }
            }
        }
    }
}

fn free_reduce(mut w: Vec<i32>) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(w.len());
    for l in w.drain(..) {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

impl Group for BaseGroup {
    type Element = BaseElement;

    fn identity(&self) -> BaseElement {
        match self {
            BaseGroup::Integer => BaseElement::Integer(0),
            BaseGroup::Lattice(d) => BaseElement::Tuple(vec![0; *d]),
            BaseGroup::Cyclic(_) => BaseElement::Cyclic(0),
            BaseGroup::Free(_) => BaseElement::Free(Vec::new()),
            BaseGroup::Symmetric(s) => BaseElement::Perm((0..*s as u8).collect()),
        }
    }

    fn mul(&self, x: &BaseElement, y: &BaseElement) -> BaseElement {
        match (self, x, y) {
            (BaseGroup::Integer, BaseElement::Integer(a), BaseElement::Integer(b)) => BaseElement::Integer(a + b),
            (BaseGroup::Lattice(_), BaseElement::Tuple(a), BaseElement::Tuple(b)) => {
                BaseElement::Tuple(a.iter().zip(b).map(|(p, q)| p + q).collect())
            }
            (BaseGroup::Cyclic(q), BaseElement::Cyclic(a), BaseElement::Cyclic(b)) => BaseElement::Cyclic((a + b) % q),
            (BaseGroup::Free(_), BaseElement::Free(a), BaseElement::Free(b)) => {
                BaseElement::Free(free_reduce(a.iter().chain(b).copied().collect()))
            }
            (BaseGroup::Symmetric(_), BaseElement::Perm(a), BaseElement::Perm(b)) => {
                // (ab)(i) = a(b(i))
                BaseElement::Perm(b.iter().map(|&i| a[i as usize]).collect())
            }
            _ => panic!("element kinds {x:?}, {y:?} do not belong to {self:?}"),
        }
    }

    fn inv(&self, x: &BaseElement) -> BaseElement {
        match (self, x) {
            (_, BaseElement::Integer(a)) => BaseElement::Integer(-a),
            (_, BaseElement::Tuple(a)) => BaseElement::Tuple(a.iter().map(|c| -c).collect()),
            (BaseGroup::Cyclic(q), BaseElement::Cyclic(a)) => BaseElement::Cyclic((q - a) % q),
            (_, BaseElement::Free(w)) => BaseElement::Free(w.iter().rev().map(|l| -l).collect()),
            (_, BaseElement::Perm(p)) => {
                let mut inv = vec![0u8; p.len()];
                for (i, &j) in p.iter().enumerate() {
                    inv[j as usize] = i as u8;
                }
                BaseElement::Perm(inv)
            }
            _ => panic!("element {x:?} does not belong to {self:?}"),
        }
    }

    fn generators(&self) -> Vec<BaseElement> {
        match self {
            BaseGroup::Integer => vec![BaseElement::Integer(1), BaseElement::Integer(-1)],
            BaseGroup::Lattice(d) => (0..*d)
                .flat_map(|i| [BaseElement::unit_vector(*d, i, 1), BaseElement::unit_vector(*d, i, -1)])
                .collect(),
            BaseGroup::Cyclic(q) => {
                let mut g = vec![BaseElement::Cyclic(1 % q)];
                if *q > 2 {
                    g.push(BaseElement::Cyclic(q - 1));
                }
                g
            }
            BaseGroup::Free(k) => (1..=*k as i32).flat_map(|i| [BaseElement::Free(vec![i]), BaseElement::Free(vec![-i])]).collect(),
            BaseGroup::Symmetric(s) => (1..*s as u8).map(|i| BaseElement::perm_from_cycles(*s, &[&[i, i + 1]])).collect(),
        }
    }

    fn format(&self, x: &BaseElement) -> String {
        x.to_string()
    }

    fn parse(&self, text: &str) -> Result<BaseElement> {
        let t = text.trim();
        let bad = || Error::Parse(format!("cannot parse {t:?} as an element of {self:?}"));
        let x = match self {
            BaseGroup::Integer => BaseElement::Integer(t.parse().map_err(|_| bad())?),
            BaseGroup::Cyclic(q) => {
                let r: i64 = t.parse().map_err(|_| bad())?;
                BaseElement::Cyclic(r.rem_euclid(*q as i64) as u64)
            }
            BaseGroup::Lattice(_) => {
                let inner = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')).ok_or_else(bad)?;
                let v = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner.split(',').map(|c| c.trim().parse::<i64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?
                };
                BaseElement::Tuple(v)
            }
            BaseGroup::Free(_) => {
                if t == "e" {
                    BaseElement::Free(Vec::new())
                } else {
                    let letters = t
                        .chars()
                        .map(|c| {
                            if c.is_ascii_lowercase() {
                                Ok(c as i32 - 'a' as i32 + 1)
                            } else if c.is_ascii_uppercase() {
                                Ok(-(c as i32 - 'A' as i32 + 1))
                            } else {
                                Err(bad())
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    BaseElement::Free(free_reduce(letters))
                }
            }
            BaseGroup::Symmetric(_) => {
                let inner = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')).ok_or_else(bad)?;
                let p = inner
                    .split(',')
                    .map(|c| c.trim().parse::<u8>().ok().and_then(|v| v.checked_sub(1)))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(bad)?;
                BaseElement::Perm(p)
            }
        };
        self.validate(&x)?;
        Ok(x)
    }

    fn describe(&self) -> String {
        match self {
            BaseGroup::Integer => "Z".into(),
            BaseGroup::Lattice(d) => format!("Z^{d}"),
            BaseGroup::Cyclic(q) => format!("Z/{q}"),
            BaseGroup::Free(k) => format!("F_{k}"),
            BaseGroup::Symmetric(s) => format!("S_{s}"),
        }
    }
}

impl fmt::Display for BaseElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseElement::Integer(a) => write!(f, "{a}"),
            BaseElement::Cyclic(a) => write!(f, "{a}"),
            BaseElement::Tuple(v) => {
                let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            BaseElement::Free(w) => {
                if w.is_empty() {
                    return write!(f, "e");
                }
                for &l in w {
                    let c = if l > 0 { (b'a' + (l - 1) as u8) as char } else { (b'A' + (-l - 1) as u8) as char };
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            BaseElement::Perm(p) => {
                let parts: Vec<String> = p.iter().map(|i| (i + 1).to_string()).collect();
                write!(f, "[{}]", parts.join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3(cycles: &[&[u8]]) -> BaseElement {
        BaseElement::perm_from_cycles(3, cycles)
    }

    #[test]
    fn permutation_conjugation() {
        let g = BaseGroup::Symmetric(3);
        // (13)(12)(13)⁻¹ = (23)
        assert_eq!(g.conj(&s3(&[&[1, 3]]), &s3(&[&[1, 2]])), s3(&[&[2, 3]]));
        assert!(!g.in_cyclic_subgroup(&s3(&[&[1, 3]]), &s3(&[&[1, 2]])));
        assert!(g.in_cyclic_subgroup(&g.identity(), &s3(&[&[1, 2]])));
        assert!(g.in_cyclic_subgroup(&s3(&[&[1, 3, 2]]), &s3(&[&[1, 2, 3]])));
        assert_eq!(g.elements().unwrap().len(), 6);
    }

    #[test]
    fn cyclic_membership_in_infinite_groups() {
        assert!(BaseGroup::Integer.in_cyclic_subgroup(&BaseElement::Integer(-9), &BaseElement::Integer(3)));
        assert!(!BaseGroup::Integer.in_cyclic_subgroup(&BaseElement::Integer(4), &BaseElement::Integer(3)));
        let l = BaseGroup::Lattice(2);
        assert!(l.in_cyclic_subgroup(&BaseElement::Tuple(vec![2, -4]), &BaseElement::Tuple(vec![1, -2])));
        assert!(!l.in_cyclic_subgroup(&BaseElement::Tuple(vec![2, -3]), &BaseElement::Tuple(vec![1, -2])));
        let f = BaseGroup::Free(2);
        let ab = f.parse("ab").unwrap();
        assert!(f.in_cyclic_subgroup(&f.parse("BABA").unwrap(), &ab));
        assert!(!f.in_cyclic_subgroup(&f.parse("ba").unwrap(), &ab));
    }

    #[test]
    fn text_round_trip() {
        for (g, s) in [
            (BaseGroup::Integer, "-7"),
            (BaseGroup::Lattice(3), "(1,0,-2)"),
            (BaseGroup::Cyclic(5), "3"),
            (BaseGroup::Free(2), "aBa"),
            (BaseGroup::Free(2), "e"),
            (BaseGroup::Symmetric(3), "[2,1,3]"),
        ] {
            let x = g.parse(s).unwrap();
            assert_eq!(g.format(&x), s);
        }
        assert!(BaseGroup::Symmetric(3).parse("[1,1,3]").is_err());
        assert_eq!(BaseGroup::Free(2).parse("aA").unwrap(), BaseElement::Free(vec![]));
    }

    #[test]
    fn free_reduction_and_inverse() {
        let f = BaseGroup::Free(2);
        let x = f.parse("abA").unwrap();
        assert_eq!(f.mul(&x, &f.inv(&x)), f.identity());
        assert!(f.validate(&f.mul(&x, &f.parse("aB").unwrap())).is_ok());
    }
}
