//! Restricted wreath products A ≀ B and the permutational variant A ≀_X B with
//! X = B ⊔ {∗}, where B acts on itself by left multiplication and fixes ∗.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{BaseElement, BaseGroup, Group};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Site {
    Point(BaseElement),
    Fixed,
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Point(b) => write!(f, "{b}"),
            Site::Fixed => write!(f, "*"),
        }
    }
}

/// (φ, b): lamps never store identity values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WreathElement {
    pub lamps: BTreeMap<Site, BaseElement>,
    pub position: BaseElement,
}

impl WreathElement {
    pub fn support(&self) -> impl Iterator<Item = &Site> {
        self.lamps.keys()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WreathGroup {
    pub lamp: BaseGroup,
    pub base: BaseGroup,
    pub permutational: bool,
}

impl WreathGroup {
    pub fn new(lamp: BaseGroup, base: BaseGroup) -> Self {
        Self { lamp, base, permutational: false }
    }

    pub fn permutational(lamp: BaseGroup, base: BaseGroup) -> Self {
        Self { lamp, base, permutational: true }
    }

    pub fn lamp_at(&self, x: &WreathElement, site: &Site) -> BaseElement {
        x.lamps.get(site).cloned().unwrap_or_else(|| self.lamp.identity())
    }

    /// δ_site^value at the base identity.
    pub fn delta(&self, site: Site, value: BaseElement) -> WreathElement {
        let mut lamps = BTreeMap::new();
        if value != self.lamp.identity() {
            lamps.insert(site, value);
        }
        WreathElement { lamps, position: self.base.identity() }
    }

    /// (1, b)
    pub fn translation(&self, b: BaseElement) -> WreathElement {
        WreathElement { lamps: BTreeMap::new(), position: b }
    }

    pub fn act(&self, b: &BaseElement, site: &Site) -> Site {
        match site {
            Site::Point(x) => Site::Point(self.base.mul(b, x)),
            Site::Fixed => Site::Fixed,
        }
    }

    fn lamp_update(&self, x: &mut WreathElement, y: &WreathElement) {
        let id = self.lamp.identity();
        for (site, v) in &y.lamps {
            let target = self.act(&x.position, site);
            let cur = x.lamps.remove(&target).unwrap_or_else(|| id.clone());
            let new = self.lamp.mul(&cur, v);
            if new != id {
                x.lamps.insert(target, new);
            }
        }
        if y.position != self.base.identity() {
            x.position = self.base.mul(&x.position, &y.position);
        }
    }

    pub fn sites_valid(&self, x: &WreathElement) -> bool {
        x.lamps.iter().all(|(s, v)| {
            let site_ok = match s {
                Site::Point(p) => self.base.validate(p).is_ok(),
                Site::Fixed => self.permutational,
            };
            site_ok && self.lamp.validate(v).is_ok() && *v != self.lamp.identity()
        }) && self.base.validate(&x.position).is_ok()
    }
}

impl Group for WreathGroup {
    type Element = WreathElement;

    fn identity(&self) -> WreathElement {
        WreathElement { lamps: BTreeMap::new(), position: self.base.identity() }
    }

    fn mul(&self, x: &WreathElement, y: &WreathElement) -> WreathElement {
        let mut z = x.clone();
        self.lamp_update(&mut z, y);
        z
    }

    /// In place, with cost proportional to the support of y.
    fn mul_assign(&self, x: &mut WreathElement, y: &WreathElement) {
        self.lamp_update(x, y);
    }

    fn inv(&self, x: &WreathElement) -> WreathElement {
        let b_inv = self.base.inv(&x.position);
        let lamps = x.lamps.iter().map(|(s, v)| (self.act(&b_inv, s), self.lamp.inv(v))).collect();
        WreathElement { lamps, position: b_inv }
    }

    fn generators(&self) -> Vec<WreathElement> {
        let e = self.base.identity();
        let mut gens: Vec<WreathElement> =
            self.lamp.generators().into_iter().map(|a| self.delta(Site::Point(e.clone()), a)).collect();
        if self.permutational {
            gens.extend(self.lamp.generators().into_iter().map(|a| self.delta(Site::Fixed, a)));
        }
        gens.extend(self.base.generators().into_iter().map(|b| self.translation(b)));
        gens
    }

    fn format(&self, x: &WreathElement) -> String {
        let parts: Vec<String> = x.lamps.iter().map(|(s, v)| format!("{s}:{v}")).collect();
        format!("{{{}}};{}", parts.join(","), x.position)
    }

    fn parse(&self, text: &str) -> Result<WreathElement> {
        let t = text.trim();
        let bad = |why: &str| Error::Parse(format!("wreath element {t:?}: {why}"));
        let rest = t.strip_prefix('{').ok_or_else(|| bad("missing '{'"))?;
        let close = rest.find('}').ok_or_else(|| bad("missing '}'"))?;
        let (body, tail) = (&rest[..close], &rest[close + 1..]);
        let pos_text = tail.strip_prefix(';').ok_or_else(|| bad("missing ';'"))?;
        let position = self.base.parse(pos_text)?;
        let mut lamps = BTreeMap::new();
        for entry in split_top_level(body) {
            let (s, v) = entry.split_once(':').ok_or_else(|| bad("lamp entry without ':'"))?;
            let site = if s.trim() == "*" { Site::Fixed } else { Site::Point(self.base.parse(s)?) };
            let value = self.lamp.parse(v)?;
            if value == self.lamp.identity() {
                return Err(bad("identity lamp values are not stored"));
            }
            if lamps.insert(site, value).is_some() {
                return Err(bad("repeated site"));
            }
        }
        let x = WreathElement { lamps, position };
        if !self.sites_valid(&x) {
            return Err(bad("site outside the index set"));
        }
        Ok(x)
    }

    fn describe(&self) -> String {
        if self.permutational {
            format!("{} wr_X {}", self.lamp.describe(), self.base.describe())
        } else {
            format!("{} wr {}", self.lamp.describe(), self.base.describe())
        }
    }
}

/// Splits on commas not nested in brackets or parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() {
        out.push(&s[start..]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lamplighter() -> WreathGroup {
        WreathGroup::new(BaseGroup::Cyclic(2), BaseGroup::Integer)
    }

    #[test]
    fn lamplighter_product() {
        let g = lamplighter();
        let x = g.parse("{0:1};1").unwrap();
        let y = g.mul(&x, &x);
        assert_eq!(g.format(&y), "{0:1,1:1};2");
    }

    #[test]
    fn inverse_formula() {
        let g = WreathGroup::new(BaseGroup::Symmetric(3), BaseGroup::Lattice(2));
        let x = g.parse("{(0,0):[2,3,1],(1,-1):[2,1,3]};(3,1)").unwrap();
        assert_eq!(g.mul(&x, &g.inv(&x)), g.identity());
        assert_eq!(g.mul(&g.inv(&x), &x), g.identity());
        assert_eq!(g.inv(&x).position, BaseElement::Tuple(vec![-3, -1]));
    }

    #[test]
    fn permutational_fixed_point() {
        let g = WreathGroup::permutational(BaseGroup::Symmetric(3), BaseGroup::Lattice(1));
        let x = g.parse("{*:[2,1,3]};(5)").unwrap();
        let y = g.parse("{*:[1,3,2],(0):[2,1,3]};(0)").unwrap();
        let xy = g.mul(&x, &y);
        // ∗ is not moved by the base
        assert!(xy.lamps.contains_key(&Site::Fixed));
        assert!(xy.lamps.contains_key(&Site::Point(BaseElement::Tuple(vec![5]))));
        assert_eq!(g.parse(&g.format(&xy)).unwrap(), xy);
        assert!(lamplighter().parse("{*:1};0").is_err());
    }

    fn arb_elem() -> impl Strategy<Value = (Vec<(i64, u8)>, i64)> {
        (prop::collection::vec((-4i64..4, 0u8..6), 0..4), -3i64..3)
    }

    fn build(g: &WreathGroup, spec: &(Vec<(i64, u8)>, i64)) -> WreathElement {
        let perms = BaseGroup::Symmetric(3).elements().unwrap();
        let mut x = g.translation(BaseElement::Integer(spec.1));
        for (site, p) in &spec.0 {
            let d = g.delta(Site::Point(BaseElement::Integer(*site)), perms[*p as usize].clone());
            x = g.mul(&d, &x);
        }
        x
    }

    proptest! {
        #[test]
        fn axioms_and_support(a in arb_elem(), b in arb_elem(), c in arb_elem()) {
            let g = WreathGroup::new(BaseGroup::Symmetric(3), BaseGroup::Integer);
            let (x, y, z) = (build(&g, &a), build(&g, &b), build(&g, &c));
            prop_assert_eq!(g.mul(&g.mul(&x, &y), &z), g.mul(&x, &g.mul(&y, &z)));
            prop_assert_eq!(g.mul(&x, &g.identity()), x.clone());
            prop_assert_eq!(g.mul(&x, &g.inv(&x)), g.identity());
            let xy = g.mul(&x, &y);
            prop_assert!(xy.lamps.len() <= x.lamps.len() + y.lamps.len());
            prop_assert!(g.sites_valid(&xy));
            prop_assert_eq!(g.parse(&g.format(&xy)).unwrap(), xy);
        }
    }
}
