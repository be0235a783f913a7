//! Thompson's group F in its model on ℝ: piecewise-linear homeomorphisms with
//! finitely many dyadic breakpoints, slopes 2^k, and integer translations
//! outside a compact set.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Dyadic, Group};
use crate::error::{Error, Result};

/// x ↦ 2^k x + q
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Affine {
    pub k: i32,
    pub q: Dyadic,
}

impl Affine {
    pub fn translation(m: impl Into<BigInt>) -> Self {
        Affine { k: 0, q: Dyadic::from_int(m) }
    }

    pub fn apply(&self, x: &Dyadic) -> Dyadic {
        &x.mul_pow2(self.k as i64) + &self.q
    }

    /// self ∘ other
    pub fn compose(&self, other: &Affine) -> Affine {
        Affine { k: self.k + other.k, q: &other.q.mul_pow2(self.k as i64) + &self.q }
    }

    pub fn inverse(&self) -> Affine {
        Affine { k: -self.k, q: -&self.q.mul_pow2(-self.k as i64) }
    }

    pub fn apply_inverse(&self, y: &Dyadic) -> Dyadic {
        (y - &self.q).mul_pow2(-self.k as i64)
    }

    fn as_translation(&self) -> Option<BigInt> {
        if self.k == 0 {
            self.q.to_integer()
        } else {
            None
        }
    }
}

/// Breakpoints b_1 < … < b_n, one affine piece per bounded component
/// [b_i, b_{i+1}], and translations by `left_shift` below b_1 and by
/// `right_shift` above b_n.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThompsonElement {
    pub breakpoints: Vec<Dyadic>,
    pub pieces: Vec<Affine>,
    pub left_shift: BigInt,
    pub right_shift: BigInt,
}

impl ThompsonElement {
    pub fn translation(m: impl Into<BigInt>) -> Self {
        let m = m.into();
        Self { breakpoints: Vec::new(), pieces: Vec::new(), left_shift: m.clone(), right_shift: m }
    }

    pub fn identity() -> Self {
        Self::translation(0)
    }

    /// Supported in [1/4, 3/4]: 2x − 1/4 on [1/4, 3/8], x + 1/8 on [3/8, 1/2],
    /// x/2 + 3/8 on [1/2, 3/4].
    pub fn default_f() -> Self {
        let d = |s: &str| s.parse::<Dyadic>().unwrap();
        Self::from_components(
            vec![d("1/4"), d("3/8"), d("1/2"), d("3/4")],
            vec![
                Affine::translation(0),
                Affine { k: 1, q: d("-1/4") },
                Affine { k: 0, q: d("1/8") },
                Affine { k: -1, q: d("3/8") },
                Affine::translation(0),
            ],
        )
        .unwrap()
    }

    /// t on (−∞, 0], t/2 on [0, 2], t − 1 on [2, ∞).
    pub fn x1() -> Self {
        Self::from_components(
            vec![Dyadic::zero(), Dyadic::from_int(2)],
            vec![Affine::translation(0), Affine { k: -1, q: Dyadic::zero() }, Affine::translation(-1)],
        )
        .unwrap()
    }

    /// Builds a canonical element from breakpoints and the n + 1 maps on the
    /// components between them (the outer two must be integer translations).
    pub fn from_components(breakpoints: Vec<Dyadic>, maps: Vec<Affine>) -> Result<Self> {
        if maps.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidElement(format!(
                "{} breakpoints need {} maps, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                maps.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidElement("breakpoints must be strictly increasing".into()));
        }
        for (i, b) in breakpoints.iter().enumerate() {
            if maps[i].apply(b) != maps[i + 1].apply(b) {
                return Err(Error::InvalidElement(format!("discontinuous at breakpoint {b}")));
            }
        }
        if maps[0].as_translation().is_none() || maps[maps.len() - 1].as_translation().is_none() {
            return Err(Error::InvalidElement("unbounded components must be integer translations".into()));
        }
        Ok(Self::canonical(breakpoints, maps))
    }

    /// Drops breakpoints separating equal maps. Input is assumed continuous.
    fn canonical(breakpoints: Vec<Dyadic>, maps: Vec<Affine>) -> Self {
        let mut bps = Vec::with_capacity(breakpoints.len());
        let mut ms: Vec<Affine> = Vec::with_capacity(maps.len());
        let mut maps = maps.into_iter();
        ms.push(maps.next().unwrap());
        for (b, m) in breakpoints.into_iter().zip(maps) {
            if *ms.last().unwrap() != m {
                bps.push(b);
                ms.push(m);
            }
        }
        let left_shift = ms[0].as_translation().expect("left end is a translation");
        let right_shift = ms[ms.len() - 1].as_translation().expect("right end is a translation");
        let pieces = if ms.len() >= 2 { ms[1..ms.len() - 1].to_vec() } else { Vec::new() };
        Self { breakpoints: bps, pieces, left_shift, right_shift }
    }

    /// The maps on all n + 1 components, including both ends.
    pub fn maps(&self) -> Vec<Affine> {
        let mut v = Vec::with_capacity(self.pieces.len() + 2);
        v.push(Affine::translation(self.left_shift.clone()));
        if !self.breakpoints.is_empty() {
            v.extend(self.pieces.iter().cloned());
            v.push(Affine::translation(self.right_shift.clone()));
        }
        v
    }

    fn map_index_at(&self, x: &Dyadic) -> usize {
        // component i covers [b_i, b_{i+1}); continuity makes the choice at breakpoints harmless
        self.breakpoints.partition_point(|b| b <= x)
    }

    fn map_at(&self, idx: usize) -> Affine {
        if idx == 0 {
            Affine::translation(self.left_shift.clone())
        } else if idx == self.breakpoints.len() {
            Affine::translation(self.right_shift.clone())
        } else {
            self.pieces[idx - 1].clone()
        }
    }

    /// Slope exponent of the piece immediately to the right of x.
    pub fn slope_exponent_right_of(&self, x: &Dyadic) -> i32 {
        self.map_at(self.map_index_at(x)).k
    }

    pub fn eval(&self, x: &Dyadic) -> Dyadic {
        self.map_at(self.map_index_at(x)).apply(x)
    }

    pub fn eval_inverse(&self, y: &Dyadic) -> Dyadic {
        self.eval_inverse_with(&self.images(), y)
    }

    /// Images of the breakpoints.
    fn images(&self) -> Vec<Dyadic> {
        self.breakpoints.iter().enumerate().map(|(i, b)| self.map_at(i).apply(b)).collect()
    }

    fn eval_inverse_with(&self, images: &[Dyadic], y: &Dyadic) -> Dyadic {
        let idx = images.partition_point(|b| b <= y);
        self.map_at(idx).apply_inverse(y)
    }

    /// Both end shifts vanish, i.e. the element lies in [F, F].
    pub fn in_commutator(&self) -> bool {
        self.left_shift.is_zero() && self.right_shift.is_zero()
    }

    pub fn is_translation(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// Outside [first, last] the element is a translation.
    pub fn breakpoint_hull(&self) -> Option<(&Dyadic, &Dyadic)> {
        Some((self.breakpoints.first()?, self.breakpoints.last()?))
    }

    /// Smallest integer N with supp ⊆ [−N, N], for elements with zero end shifts.
    pub fn support_radius(&self) -> Option<BigInt> {
        if !self.in_commutator() {
            return None;
        }
        match self.breakpoint_hull() {
            None => Some(BigInt::from(0)),
            Some((lo, hi)) => Some((-lo.floor()).max(hi.ceil()).max(BigInt::from(0))),
        }
    }

    pub fn inverse(&self) -> Self {
        let images = self.images();
        let maps = self.maps().iter().map(Affine::inverse).collect();
        Self::canonical(images, maps)
    }

    /// self ∘ other
    pub fn compose(&self, other: &Self) -> Self {
        let images = other.images();
        let mut bps: Vec<Dyadic> = other.breakpoints.clone();
        bps.extend(self.breakpoints.iter().map(|b| other.eval_inverse_with(&images, b)));
        bps.sort();
        bps.dedup();
        let mut maps = Vec::with_capacity(bps.len() + 1);
        for i in 0..=bps.len() {
            let sample = match (i.checked_sub(1).map(|j| &bps[j]), bps.get(i)) {
                (None, None) => Dyadic::zero(),
                (None, Some(hi)) => hi - &Dyadic::from_int(1),
                (Some(lo), None) => lo + &Dyadic::from_int(1),
                (Some(lo), Some(hi)) => lo.midpoint(hi),
            };
            let g = other.map_at(other.map_index_at(&sample));
            let f = self.map_at(self.map_index_at(&g.apply(&sample)));
            maps.push(f.compose(&g));
        }
        Self::canonical(bps, maps)
    }

    /// t_k ∘ self ∘ t_k⁻¹, computed without a general composition.
    pub fn conj_translation(&self, k: i64) -> Self {
        self.conj_shift(&BigInt::from(k))
    }

    pub fn conj_shift(&self, k: &BigInt) -> Self {
        let kd = Dyadic::from_int(k.clone());
        let breakpoints = self.breakpoints.iter().map(|b| b + &kd).collect();
        let pieces = self
            .pieces
            .iter()
            .map(|a| Affine { k: a.k, q: &(&a.q + &kd) - &kd.mul_pow2(a.k as i64) })
            .collect();
        Self { breakpoints, pieces, left_shift: self.left_shift.clone(), right_shift: self.right_shift.clone() }
    }

    /// Continuity and canonical form.
    pub fn is_valid(&self) -> bool {
        if self.breakpoints.is_empty() {
            return self.pieces.is_empty() && self.left_shift == self.right_shift;
        }
        if self.pieces.len() + 1 != self.breakpoints.len() || self.breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        let maps = self.maps();
        self.breakpoints
            .iter()
            .enumerate()
            .all(|(i, b)| maps[i] != maps[i + 1] && maps[i].apply(b) == maps[i + 1].apply(b))
    }
}

impl fmt::Display for ThompsonElement {
    /// `m-=L; b1 [k,q] b2 … bn; m+=R`, or `m-=L; m+=R` without breakpoints.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m-={}; ", self.left_shift)?;
        if !self.breakpoints.is_empty() {
            write!(f, "{}", self.breakpoints[0])?;
            for (p, b) in self.pieces.iter().zip(&self.breakpoints[1..]) {
                write!(f, " [{},{}] {}", p.k, p.q, b)?;
            }
            write!(f, "; ")?;
        }
        write!(f, "m+={}", self.right_shift)
    }
}

impl std::str::FromStr for ThompsonElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("Thompson element {s:?}: {why}"));
        let parts: Vec<&str> = s.split(';').map(str::trim).collect();
        let shift = |p: &str, key: &str| -> Result<BigInt> {
            p.strip_prefix(key).and_then(|v| v.trim().parse().ok()).ok_or_else(|| bad("bad end shift"))
        };
        let (left, table, right) = match parts.as_slice() {
            [l, r] => (shift(l, "m-=")?, "", shift(r, "m+=")?),
            [l, t, r] => (shift(l, "m-=")?, *t, shift(r, "m+=")?),
            _ => return Err(bad("expected `m-=L; table; m+=R`")),
        };
        let mut breakpoints = Vec::new();
        let mut maps = vec![Affine::translation(left.clone())];
        let mut rest = table.trim();
        while !rest.is_empty() {
            let (tok, after) = match rest.find('[') {
                Some(i) => (&rest[..i], &rest[i..]),
                None => (rest, ""),
            };
            breakpoints.push(tok.trim().parse::<Dyadic>()?);
            rest = after.trim();
            if rest.is_empty() {
                break;
            }
            let close = rest.find(']').ok_or_else(|| bad("unclosed piece"))?;
            let (k, q) = rest[1..close].split_once(',').ok_or_else(|| bad("piece needs `k,q`"))?;
            maps.push(Affine {
                k: k.trim().parse().map_err(|_| bad("bad slope exponent"))?,
                q: q.trim().parse()?,
            });
            rest = rest[close + 1..].trim();
        }
        if breakpoints.is_empty() {
            if left != right {
                return Err(bad("no breakpoints but unequal end shifts"));
            }
        } else {
            maps.push(Affine::translation(right));
        }
        let given = breakpoints.len();
        let x = Self::from_components(breakpoints, maps)?;
        if x.breakpoints.len() != given {
            return Err(bad("a breakpoint separates equal maps"));
        }
        Ok(x)
    }
}

impl Serialize for ThompsonElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ThompsonElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// F with generators x0 = translation by 1 and x1, plus their inverses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thompson;

impl Group for Thompson {
    type Element = ThompsonElement;

    fn identity(&self) -> ThompsonElement {
        ThompsonElement::identity()
    }

    fn mul(&self, x: &ThompsonElement, y: &ThompsonElement) -> ThompsonElement {
        if x.is_translation() && y.is_translation() {
            return ThompsonElement::translation(&x.left_shift + &y.left_shift);
        }
        x.compose(y)
    }

    fn inv(&self, x: &ThompsonElement) -> ThompsonElement {
        x.inverse()
    }

    fn generators(&self) -> Vec<ThompsonElement> {
        let x0 = ThompsonElement::translation(1);
        let x1 = ThompsonElement::x1();
        vec![x0.inverse(), x0, x1.inverse(), x1]
    }

    fn conj(&self, g: &ThompsonElement, x: &ThompsonElement) -> ThompsonElement {
        if g.is_translation() {
            x.conj_shift(&g.left_shift)
        } else {
            self.mul(&self.mul(g, x), &g.inverse())
        }
    }

    fn format(&self, x: &ThompsonElement) -> String {
        x.to_string()
    }

    fn parse(&self, text: &str) -> Result<ThompsonElement> {
        text.parse()
    }

    fn describe(&self) -> String {
        "F".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    /// Piecewise evaluation straight from the defining formulas of `default_f`.
    fn f_oracle(x: &Dyadic) -> Dyadic {
        if *x <= d("1/4") || *x >= d("3/4") {
            x.clone()
        } else if *x <= d("3/8") {
            &x.mul_pow2(1) - &d("1/4")
        } else if *x <= d("1/2") {
            x + &d("1/8")
        } else {
            &x.mul_pow2(-1) + &d("3/8")
        }
    }

    fn sample_points(n: usize, seed: u64) -> Vec<Dyadic> {
        use rand::Rng;
        let mut rng = crate::seed::rng_from_seed(seed);
        (0..n).map(|_| Dyadic::new(rng.gen_range(-4096i64..8192), rng.gen_range(0..12))).collect()
    }

    #[test]
    fn default_f_matches_oracle() {
        let f = ThompsonElement::default_f();
        assert!(f.is_valid());
        for x in sample_points(200, 1) {
            assert_eq!(f.eval(&x), f_oracle(&x), "at {x}");
        }
    }

    #[test]
    fn inverse_pointwise() {
        let f = ThompsonElement::default_f();
        let fi = f.inverse();
        assert!(fi.is_valid());
        assert_eq!(fi.pieces.iter().map(|p| p.k).collect::<Vec<_>>(), vec![-1, 0, 1]);
        for x in sample_points(100, 2) {
            assert_eq!(f_oracle(&fi.eval(&x)), x);
            assert_eq!(fi.eval(&f_oracle(&x)), x);
        }
    }

    #[test]
    fn f_squared_pointwise() {
        let f = ThompsonElement::default_f();
        let ff = f.compose(&f);
        assert!(ff.is_valid());
        let mut slopes: Vec<i32> = ff.pieces.iter().map(|p| p.k).collect();
        slopes.dedup();
        // 4, 2 on [1/4, 3/8] then 1/2, 1/4 on [3/8, 3/4]
        assert_eq!(slopes, vec![2, 1, -1, -2]);
        for x in sample_points(200, 3) {
            assert_eq!(ff.eval(&x), f_oracle(&f_oracle(&x)));
        }
    }

    #[test]
    fn conjugation_by_translation_shifts_breakpoints() {
        let f = ThompsonElement::default_f();
        let t = ThompsonElement::translation(1);
        let c = t.compose(&f).compose(&t.inverse());
        assert_eq!(c, f.conj_translation(1));
        let shifted: Vec<Dyadic> = f.breakpoints.iter().map(|b| b + &Dyadic::from_int(1)).collect();
        assert_eq!(c.breakpoints, shifted);
        assert_eq!(f.compose(&ThompsonElement::identity()), f);
        assert_eq!(Thompson.mul(&t, &t.inverse()), Thompson.identity());
    }

    #[test]
    fn x1_and_text() {
        let x1 = ThompsonElement::x1();
        assert_eq!(x1.eval(&d("-3")), d("-3"));
        assert_eq!(x1.eval(&d("1")), d("1/2"));
        assert_eq!(x1.eval(&d("5")), d("4"));
        let s = ThompsonElement::default_f().to_string();
        assert_eq!(s, "m-=0; 1/2^2 [1,-1/2^2] 3/2^3 [0,1/2^3] 1/2^1 [-1,3/2^3] 3/2^2; m+=0");
        assert_eq!(Thompson.parse(&s).unwrap(), ThompsonElement::default_f());
        assert_eq!(Thompson.parse("m-=3; m+=3").unwrap(), ThompsonElement::translation(3));
        assert!(Thompson.parse("m-=0; 0 [0,0] 1; m+=0").is_err());
        assert!(Thompson.parse("m-=0; 0 [1,0] 1; m+=0").is_err());
        assert_eq!(ThompsonElement::default_f().support_radius(), Some(BigInt::from(1)));
    }

    fn word(gens: &[ThompsonElement], idx: &[usize]) -> ThompsonElement {
        idx.iter().fold(ThompsonElement::identity(), |acc, &i| acc.compose(&gens[i]))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn axioms_and_pointwise(a in prop::collection::vec(0usize..6, 0..8),
                                b in prop::collection::vec(0usize..6, 0..8),
                                c in prop::collection::vec(0usize..6, 0..8),
                                num in -2000i64..2000, e in 0u32..10) {
            let mut gens = Thompson.generators();
            gens.push(ThompsonElement::default_f());
            gens.push(ThompsonElement::default_f().inverse());
            let (x, y, z) = (word(&gens, &a), word(&gens, &b), word(&gens, &c));
            prop_assert!(x.is_valid() && y.is_valid());
            prop_assert_eq!(Thompson.mul(&Thompson.mul(&x, &y), &z), Thompson.mul(&x, &Thompson.mul(&y, &z)));
            prop_assert!(Thompson.mul(&x, &Thompson.inv(&x)).is_translation());
            prop_assert_eq!(Thompson.mul(&x, &Thompson.inv(&x)), Thompson.identity());
            let p = Dyadic::new(num, e);
            prop_assert_eq!(x.compose(&y).eval(&p), x.eval(&y.eval(&p)));
            prop_assert_eq!(x.eval_inverse(&x.eval(&p)), p);
            prop_assert_eq!(Thompson.parse(&Thompson.format(&x)).unwrap(), x);
        }
    }
}
