//! Baumslag–Solitar groups BS(m, n) = ⟨a, t | t a^m t⁻¹ = a^n⟩ with elements
//! kept in Britton normal form a^{k0} t^{ε1} a^{k1} ⋯ t^{εr} a^{kr}.
//!
//! Coset exponents: an exponent followed by t lies in [0, |n|) and one followed
//! by t⁻¹ lies in [0, |m|). This is the convention forced by the relation, since
//! a^{qn} t = t a^{qm} and a^{qm} t⁻¹ = t⁻¹ a^{qn}.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::Group;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    A,
    AInv,
    T,
    TInv,
}

impl Letter {
    pub fn inverse(self) -> Letter {
        match self {
            Letter::A => Letter::AInv,
            Letter::AInv => Letter::A,
            Letter::T => Letter::TInv,
            Letter::TInv => Letter::T,
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'a' => Some(Letter::A),
            'A' => Some(Letter::AInv),
            't' => Some(Letter::T),
            'T' => Some(Letter::TInv),
            _ => None,
        }
    }
}

/// `head` is k0; each syllable is (ε_i, k_i).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BsElement {
    pub head: BigInt,
    pub syllables: Vec<(i8, BigInt)>,
}

impl BsElement {
    pub fn a_power(k: impl Into<BigInt>) -> Self {
        Self { head: k.into(), syllables: Vec::new() }
    }

    /// Number of t-letters.
    pub fn t_length(&self) -> usize {
        self.syllables.len()
    }

    /// Signed t-exponent sum.
    pub fn height(&self) -> i64 {
        self.syllables.iter().map(|(e, _)| *e as i64).sum()
    }

    pub fn trailing(&self) -> &BigInt {
        self.syllables.last().map(|(_, k)| k).unwrap_or(&self.head)
    }

    /// Some(k) when the element is a^k.
    pub fn as_a_power(&self) -> Option<&BigInt> {
        if self.syllables.is_empty() {
            Some(&self.head)
        } else {
            None
        }
    }

    /// The same element with its trailing a-exponent set to zero.
    pub fn strip_trailing(&self) -> Self {
        let mut x = self.clone();
        *x.trailing_mut() = BigInt::zero();
        x
    }

    fn trailing_mut(&mut self) -> &mut BigInt {
        match self.syllables.last_mut() {
            Some((_, k)) => k,
            None => &mut self.head,
        }
    }

    /// The letters of the normal form, a-runs expanded.
    pub fn letters(&self) -> Vec<Letter> {
        fn run(out: &mut Vec<Letter>, k: &BigInt) {
            let l = if k.is_negative() { Letter::AInv } else { Letter::A };
            let mut c = k.abs();
            while c.is_positive() {
                out.push(l);
                c -= 1;
            }
        }
        let mut out = Vec::new();
        run(&mut out, &self.head);
        for (e, k) in &self.syllables {
            out.push(if *e > 0 { Letter::T } else { Letter::TInv });
            run(&mut out, k);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaumslagSolitar {
    m: i64,
    n: i64,
}

impl BaumslagSolitar {
    pub fn new(m: i64, n: i64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Precondition(format!("BS({m},{n}) needs nonzero parameters")));
        }
        Ok(Self { m, n })
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn a(&self) -> BsElement {
        BsElement::a_power(1)
    }

    pub fn t(&self) -> BsElement {
        BsElement { head: BigInt::zero(), syllables: vec![(1, BigInt::zero())] }
    }

    pub fn push_a(&self, x: &mut BsElement, k: &BigInt) {
        *x.trailing_mut() += k;
    }

    /// Right-multiplies by t^eps, eps = ±1.
    pub fn push_t(&self, x: &mut BsElement, eps: i8) {
        // pinch t⁻¹ a^{jn} t = a^{jm} or t a^{jm} t⁻¹ = a^{jn}
        let (modulus, image) = if eps > 0 { (self.n, self.m) } else { (self.m, self.n) };
        let modulus = BigInt::from(modulus);
        if let Some((last_eps, k)) = x.syllables.last() {
            if *last_eps == -eps && k.is_multiple_of(&modulus) {
                let carry = (k / &modulus) * image;
                x.syllables.pop();
                *x.trailing_mut() += carry;
                return;
            }
        }
        let k = x.trailing_mut();
        let (q, r) = k.div_mod_floor(&modulus.abs());
        let q = if modulus.is_negative() { -q } else { q };
        *k = r;
        x.syllables.push((eps, q * image));
    }

    pub fn push_letter(&self, x: &mut BsElement, l: Letter) {
        match l {
            Letter::A => self.push_a(x, &BigInt::one()),
            Letter::AInv => self.push_a(x, &-BigInt::one()),
            Letter::T => self.push_t(x, 1),
            Letter::TInv => self.push_t(x, -1),
        }
    }

    /// Normal form of a raw word.
    pub fn britton_reduce(&self, word: &[Letter]) -> BsElement {
        let mut x = BsElement::default();
        for &l in word {
            self.push_letter(&mut x, l);
        }
        x
    }

    pub fn reduce_str(&self, word: &str) -> Result<BsElement> {
        self.parse(word)
    }
}

impl Group for BaumslagSolitar {
    type Element = BsElement;

    fn identity(&self) -> BsElement {
        BsElement::default()
    }

    fn mul(&self, x: &BsElement, y: &BsElement) -> BsElement {
        let mut out = x.clone();
        self.push_a(&mut out, &y.head);
        for (e, k) in &y.syllables {
            self.push_t(&mut out, *e);
            self.push_a(&mut out, k);
        }
        out
    }

    fn inv(&self, x: &BsElement) -> BsElement {
        let mut out = BsElement::a_power(-x.trailing());
        for i in (0..x.syllables.len()).rev() {
            self.push_t(&mut out, -x.syllables[i].0);
            let k = if i == 0 { &x.head } else { &x.syllables[i - 1].1 };
            self.push_a(&mut out, &-k);
        }
        out
    }

    fn generators(&self) -> Vec<BsElement> {
        let a = self.a();
        let t = self.t();
        vec![self.inv(&a), a, self.inv(&t), t]
    }

    fn format(&self, x: &BsElement) -> String {
        x.to_string()
    }

    /// Letters over {a, A, t, T}; a run may also be written `a^k` (k any integer).
    fn parse(&self, text: &str) -> Result<BsElement> {
        let t = text.trim();
        let bad = || Error::Parse(format!("cannot parse BS word {t:?}"));
        let mut x = BsElement::default();
        if t == "e" {
            return Ok(x);
        }
        let chars: Vec<char> = t.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let l = Letter::from_char(chars[i]).ok_or_else(bad)?;
            i += 1;
            if chars.get(i) == Some(&'^') {
                let start = i + 1;
                let mut end = start;
                while end < chars.len() && (chars[end].is_ascii_digit() || (end == start && chars[end] == '-')) {
                    end += 1;
                }
                let k: BigInt = chars[start..end].iter().collect::<String>().parse().map_err(|_| bad())?;
                match l {
                    Letter::A => self.push_a(&mut x, &k),
                    Letter::AInv => self.push_a(&mut x, &-k),
                    _ => return Err(bad()),
                }
                i = end;
            } else {
                self.push_letter(&mut x, l);
            }
        }
        Ok(x)
    }

    fn describe(&self) -> String {
        format!("BS({},{})", self.m, self.n)
    }
}

/// Runs of up to 8 letters are spelled out; longer runs use `a^k`.
impl fmt::Display for BsElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn run(f: &mut fmt::Formatter<'_>, k: &BigInt) -> fmt::Result {
            if k.abs() > BigInt::from(8) {
                return write!(f, "a^{k}");
            }
            let c = if k.is_negative() { "A" } else { "a" };
            let n: usize = k.abs().try_into().unwrap_or(0);
            write!(f, "{}", c.repeat(n))
        }
        if self.head.is_zero() && self.syllables.is_empty() {
            return write!(f, "e");
        }
        run(f, &self.head)?;
        for (e, k) in &self.syllables {
            write!(f, "{}", if *e > 0 { "t" } else { "T" })?;
            run(f, k)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    /// Image in Aff(ℚ) under a ↦ x + 1, t ↦ (n/m)x, as (slope, offset).
    fn affine_image(m: i64, n: i64, word: &[Letter]) -> (BigRational, BigRational) {
        let r = |p: i64, q: i64| BigRational::new(p.into(), q.into());
        let mut acc = (r(1, 1), r(0, 1));
        for l in word {
            let (s, o) = match l {
                Letter::A => (r(1, 1), r(1, 1)),
                Letter::AInv => (r(1, 1), r(-1, 1)),
                Letter::T => (r(n, m), r(0, 1)),
                Letter::TInv => (r(m, n), r(0, 1)),
            };
            // acc ∘ (x ↦ s x + o)
            acc = (&acc.0 * &s, &acc.0 * &o + &acc.1);
        }
        acc
    }

    fn w(g: &BaumslagSolitar, s: &str) -> BsElement {
        g.parse(s).unwrap()
    }

    #[test]
    fn relation_and_pinches() {
        let g = BaumslagSolitar::new(2, 3).unwrap();
        assert_eq!(w(&g, "taaT"), BsElement::a_power(3));
        let x = w(&g, "taT");
        assert_eq!(x.t_length(), 2);
        assert_eq!(g.format(&x), "taT");
        assert_eq!(w(&g, "Taaaaaat"), BsElement::a_power(4));
        assert_eq!(affine_image(2, 3, &w(&g, "Taaaaaat").letters()), affine_image(2, 3, &BsElement::a_power(4).letters()));
        let ta = w(&g, "ta");
        assert_eq!(g.inv(&ta), w(&g, "AT"));
        assert_eq!(g.mul(&ta, &g.inv(&ta)), g.identity());
    }

    #[test]
    fn coset_exponents_reduced() {
        let g = BaumslagSolitar::new(2, 3).unwrap();
        // a^4 t = a t a^2
        assert_eq!(w(&g, "aaaat"), w(&g, "ataa"));
        // a^5 T = a T a^6
        assert_eq!(w(&g, "aaaaaT"), w(&g, "aTaaaaaa"));
        let x = w(&g, "AAAAAAAtTTaaaaat");
        for (i, (e, _)) in x.syllables.iter().enumerate() {
            let k = if i == 0 { &x.head } else { &x.syllables[i - 1].1 };
            let bound = if *e > 0 { 3 } else { 2 };
            assert!(!k.is_negative() && *k < BigInt::from(bound));
        }
    }

    #[test]
    fn long_runs_round_trip() {
        let g = BaumslagSolitar::new(2, 3).unwrap();
        let x = w(&g, "a^-40tAT");
        assert_eq!(g.format(&x), "aataTa^-45");
        assert_eq!(g.format(&w(&g, "a^-40")), "a^-40");
        assert_eq!(w(&g, &g.format(&x)), x);
        assert_eq!(w(&g, "e"), g.identity());
    }

    fn letters() -> impl Strategy<Value = Vec<Letter>> {
        prop::collection::vec(prop_oneof![Just(Letter::A), Just(Letter::AInv), Just(Letter::T), Just(Letter::TInv)], 0..24)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn britton_soundness(x in letters(), y in letters(), z in letters(), mn in prop_oneof![Just((2i64, 3i64)), Just((2, 4)), Just((1, 2)), Just((-2, 3)), Just((3, 3))]) {
            let g = BaumslagSolitar::new(mn.0, mn.1).unwrap();
            let nx = g.britton_reduce(&x);
            prop_assert_eq!(g.britton_reduce(&nx.letters()), nx.clone());
            prop_assert_eq!(affine_image(mn.0, mn.1, &nx.letters()), affine_image(mn.0, mn.1, &x));
            let inv: Vec<Letter> = x.iter().rev().map(|l| l.inverse()).collect();
            let mut ww = x.clone();
            ww.extend(inv);
            prop_assert_eq!(g.britton_reduce(&ww), g.identity());
            let (ny, nz) = (g.britton_reduce(&y), g.britton_reduce(&z));
            prop_assert_eq!(g.mul(&g.mul(&nx, &ny), &nz), g.mul(&nx, &g.mul(&ny, &nz)));
            prop_assert_eq!(g.mul(&nx, &g.inv(&nx)), g.identity());
            prop_assert_eq!(g.parse(&g.format(&nx)).unwrap(), nx);
        }
    }
}
