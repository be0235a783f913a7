//! The Bass–Serre tree of BS(m, n): vertices are cosets w⟨a⟩, with an edge
//! from w⟨a⟩ to w a^l t⟨a⟩ for 0 ≤ l < |n|.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{BaumslagSolitar, BsElement, Group};

/// A coset w⟨a⟩, held as the normal form of w with trailing exponent 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeVertex(BsElement);

impl TreeVertex {
    pub fn representative(&self) -> &BsElement {
        &self.0
    }

    /// Membership in the subtree spanned by words in {a, t⁻¹}.
    pub fn in_lower_subtree(&self) -> bool {
        self.0.syllables.iter().all(|(e, _)| *e < 0)
    }
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == BsElement::default() {
            write!(f, "<a>")
        } else {
            write!(f, "{}<a>", self.0)
        }
    }
}

/// Edge label: `Out(l)` for w a^l t, `In(j)` for w a^j t⁻¹.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeLabel {
    Out(i64),
    In(i64),
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::Out(l) => write!(f, "out{l}"),
            EdgeLabel::In(j) => write!(f, "in{j}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classification {
    Elliptic { fixed: TreeVertex },
    Loxodromic { translation_length: usize },
    Unknown,
}

#[derive(Clone, Debug)]
pub struct BallEntry {
    pub vertex: TreeVertex,
    pub parent: Option<usize>,
    pub label: Option<EdgeLabel>,
    pub depth: usize,
    pub height: i64,
}

#[derive(Clone, Debug)]
pub struct Ball {
    pub entries: Vec<BallEntry>,
    /// Every non-parent neighbour met during BFS was new.
    pub is_tree: bool,
}

impl Ball {
    pub fn edge_count(&self) -> usize {
        self.entries.iter().filter(|e| e.parent.is_some()).count()
    }

    pub fn contains(&self, v: &TreeVertex) -> bool {
        self.entries.iter().any(|e| &e.vertex == v)
    }

    /// CSV edge list: parent,child,label,height (height of the child).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "parent,child,label,height")?;
        for e in &self.entries {
            if let (Some(p), Some(l)) = (e.parent, e.label) {
                writeln!(out, "{},{},{},{}", self.entries[p].vertex, e.vertex, l, e.height)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FixedSubtree {
    pub vertices: Vec<TreeVertex>,
    pub loxodromic: bool,
    /// The fixed vertices of the ball agree with the connected component found by BFS.
    pub connected: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct BassSerreTree {
    group: BaumslagSolitar,
}

impl BassSerreTree {
    pub fn new(group: BaumslagSolitar) -> Self {
        Self { group }
    }

    pub fn group(&self) -> &BaumslagSolitar {
        &self.group
    }

    pub fn root(&self) -> TreeVertex {
        TreeVertex(BsElement::default())
    }

    /// The coset w⟨a⟩.
    pub fn vertex_of(&self, w: &BsElement) -> TreeVertex {
        TreeVertex(w.strip_trailing())
    }

    fn step(&self, v: &TreeVertex, k: i64, eps: i8) -> TreeVertex {
        let mut x = v.0.clone();
        self.group.push_a(&mut x, &BigInt::from(k));
        self.group.push_t(&mut x, eps);
        self.vertex_of(&x)
    }

    /// |n| out-neighbours then |m| in-neighbours.
    pub fn neighbors(&self, v: &TreeVertex) -> Vec<(TreeVertex, EdgeLabel)> {
        let mut out = Vec::with_capacity((self.group.m().abs() + self.group.n().abs()) as usize);
        for l in 0..self.group.n().abs() {
            out.push((self.step(v, l, 1), EdgeLabel::Out(l)));
        }
        for j in 0..self.group.m().abs() {
            out.push((self.step(v, j, -1), EdgeLabel::In(j)));
        }
        out
    }

    pub fn act(&self, g: &BsElement, v: &TreeVertex) -> TreeVertex {
        self.vertex_of(&self.group.mul(g, &v.0))
    }

    pub fn height(&self, v: &TreeVertex) -> i64 {
        v.0.height()
    }

    /// Tree distance: the t-length of the normal form of u⁻¹v.
    pub fn distance(&self, u: &TreeVertex, v: &TreeVertex) -> usize {
        self.group.mul(&self.group.inv(&u.0), &v.0).t_length()
    }

    /// Vertices of the geodesic from u to v, both ends included.
    pub fn geodesic(&self, u: &TreeVertex, v: &TreeVertex) -> Vec<TreeVertex> {
        let x = self.group.mul(&self.group.inv(&u.0), &v.0);
        let mut prefix = BsElement::a_power(x.head.clone());
        let mut path = vec![u.clone()];
        for (e, k) in &x.syllables {
            self.group.push_t(&mut prefix, *e);
            path.push(self.act(&u.0, &self.vertex_of(&prefix)));
            self.group.push_a(&mut prefix, k);
        }
        path
    }

    pub fn ball(&self, center: &TreeVertex, radius: usize) -> Ball {
        let mut entries = vec![BallEntry {
            vertex: center.clone(),
            parent: None,
            label: None,
            depth: 0,
            height: self.height(center),
        }];
        let mut index: HashMap<TreeVertex, usize> = HashMap::from([(center.clone(), 0)]);
        let mut is_tree = true;
        let mut i = 0;
        while i < entries.len() {
            if entries[i].depth < radius {
                let parent_vertex = entries[i].parent.map(|p| entries[p].vertex.clone());
                for (w, label) in self.neighbors(&entries[i].vertex.clone()) {
                    if Some(&w) == parent_vertex.as_ref() {
                        continue;
                    }
                    if index.contains_key(&w) {
                        is_tree = false;
                        continue;
                    }
                    index.insert(w.clone(), entries.len());
                    let height = self.height(&w);
                    entries.push(BallEntry { vertex: w, parent: Some(i), label: Some(label), depth: entries[i].depth + 1, height });
                }
            }
            i += 1;
        }
        Ball { entries, is_tree }
    }

    /// Displacement descent: repeatedly move v to the midpoint of [v, g·v].
    pub fn classify(&self, g: &BsElement, v0: &TreeVertex, radius: usize) -> Classification {
        let mut v = v0.clone();
        let mut prev: Option<usize> = None;
        for _ in 0..=radius {
            let gv = self.act(g, &v);
            let d = self.distance(&v, &gv);
            if d == 0 {
                return Classification::Elliptic { fixed: v };
            }
            if prev == Some(d) {
                return Classification::Loxodromic { translation_length: d };
            }
            prev = Some(d);
            v = self.geodesic(&v, &gv).swap_remove(d / 2);
        }
        Classification::Unknown
    }

    /// The k with w⁻¹ g w = a^k for v = w⟨a⟩.
    pub fn zeta(&self, g: &BsElement, v: &TreeVertex) -> Result<BigInt> {
        if self.group.is_identity(g) {
            return Err(Error::Precondition("zeta of the identity is undefined".into()));
        }
        let w = &v.0;
        let x = self.group.mul(&self.group.mul(&self.group.inv(w), g), w);
        x.as_a_power()
            .cloned()
            .ok_or_else(|| Error::Precondition(format!("{} does not fix {v}", self.group.format(g))))
    }

    pub fn fixes(&self, g: &BsElement, v: &TreeVertex) -> bool {
        self.act(g, v) == *v
    }

    /// Fixed vertices within `radius` of a fixed vertex found by descent from the root.
    pub fn fixed_subtree(&self, g: &BsElement, radius: usize) -> FixedSubtree {
        let center = match self.classify(g, &self.root(), radius.max(4) * 4) {
            Classification::Elliptic { fixed } => fixed,
            _ => return FixedSubtree { vertices: Vec::new(), loxodromic: true, connected: true },
        };
        let mut seen: HashSet<TreeVertex> = HashSet::from([center.clone()]);
        let mut order = vec![center.clone()];
        let mut queue = VecDeque::from([(center.clone(), 0usize)]);
        while let Some((v, d)) = queue.pop_front() {
            if d == radius {
                continue;
            }
            for (w, _) in self.neighbors(&v) {
                if self.fixes(g, &w) && seen.insert(w.clone()) {
                    order.push(w.clone());
                    queue.push_back((w, d + 1));
                }
            }
        }
        let ball = self.ball(&center, radius);
        let in_ball: HashSet<&TreeVertex> =
            ball.entries.iter().map(|e| &e.vertex).filter(|v| self.fixes(g, v)).collect();
        let connected = in_ball.len() == seen.len() && seen.iter().all(|v| in_ball.contains(v));
        FixedSubtree { vertices: order, loxodromic: false, connected }
    }

    /// Checks ζ_g(v′) = (m/n)^{h(v′)−h(v)} ζ_g(v) over all pairs of fixed vertices found.
    pub fn zeta_relation_check(&self, g: &BsElement, radius: usize) -> Result<bool> {
        let sub = self.fixed_subtree(g, radius);
        if sub.loxodromic {
            return Err(Error::Precondition("element is not elliptic".into()));
        }
        let ratio = BigRational::new(self.group.m().into(), self.group.n().into());
        let data: Vec<(i64, BigRational)> = sub
            .vertices
            .iter()
            .map(|v| Ok((self.height(v), BigRational::from_integer(self.zeta(g, v)?))))
            .collect::<Result<_>>()?;
        for (h, z) in &data {
            for (h2, z2) in &data {
                let factor = rational_pow(&ratio, h2 - h);
                if *z2 != &factor * z {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// With g = u^N, checks N·|ζ_u(v′)| = |ζ_g(v′)| at a common fixed vertex.
    pub fn root_bound_check(&self, g: &BsElement, u: &BsElement, n: u32, radius: usize) -> Result<bool> {
        if self.group.pow(u, n as i64) != *g {
            return Err(Error::Precondition("g is not the N-th power of u".into()));
        }
        let v = match self.classify(u, &self.root(), radius) {
            Classification::Elliptic { fixed } if self.fixes(g, &fixed) => fixed,
            _ => return Err(Error::SearchExhausted("no common fixed vertex within the radius".into())),
        };
        let zu = self.zeta(u, &v)?;
        let zg = self.zeta(g, &v)?;
        Ok(BigInt::from(n) * zu.abs() == zg.abs())
    }

    /// Smallest k in [1, bound] with g⁻¹ a^k g ∈ ⟨a⟩.
    pub fn intersection_index_witness(&self, g: &BsElement, bound: u64) -> Option<u64> {
        let gi = self.group.inv(g);
        (1..=bound).find(|&k| {
            let x = self.group.mul(&self.group.mul(&gi, &BsElement::a_power(k)), g);
            x.as_a_power().is_some()
        })
    }
}

fn rational_pow(r: &BigRational, e: i64) -> BigRational {
    let base = if e < 0 { r.recip() } else { r.clone() };
    (0..e.unsigned_abs()).fold(BigRational::one(), |acc, _| acc * &base)
}

/// Heights of a vertex set: (min, max), or None when empty.
pub fn height_range(tree: &BassSerreTree, vertices: &[TreeVertex]) -> Option<(i64, i64)> {
    let hs = vertices.iter().map(|v| tree.height(v));
    let min = hs.clone().min()?;
    Some((min, hs.max()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tree(m: i64, n: i64) -> BassSerreTree {
        BassSerreTree::new(BaumslagSolitar::new(m, n).unwrap())
    }

    fn w(t: &BassSerreTree, s: &str) -> BsElement {
        t.group().parse(s).unwrap()
    }

    fn v(t: &BassSerreTree, s: &str) -> TreeVertex {
        t.vertex_of(&w(t, s))
    }

    /// Plain BFS distance over `neighbors`.
    fn bfs_distance(t: &BassSerreTree, u: &TreeVertex, target: &TreeVertex, cap: usize) -> Option<usize> {
        let mut seen = HashSet::from([u.clone()]);
        let mut frontier = vec![u.clone()];
        for d in 0..=cap {
            if frontier.contains(target) {
                return Some(d);
            }
            let mut next = Vec::new();
            for x in &frontier {
                for (y, _) in t.neighbors(x) {
                    if seen.insert(y.clone()) {
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        None
    }

    #[test]
    fn root_neighbors() {
        let t = tree(2, 3);
        let nb = t.neighbors(&t.root());
        assert_eq!(nb.len(), 5);
        let distinct: HashSet<_> = nb.iter().map(|(x, _)| x.clone()).collect();
        assert_eq!(distinct.len(), 5);
        let outs: Vec<TreeVertex> = nb[..3].iter().map(|(x, _)| x.clone()).collect();
        assert_eq!(outs, vec![v(&t, "t"), v(&t, "at"), v(&t, "aat")]);
        for (x, _) in &nb {
            assert!(t.neighbors(x).iter().any(|(y, _)| *y == t.root()));
            assert_eq!((t.height(x) - t.height(&t.root())).abs(), 1);
        }
    }

    #[test]
    fn stabilizer_heights_and_action() {
        let t = tree(2, 3);
        assert_eq!(t.act(&w(&t, "a"), &t.root()), t.root());
        assert_ne!(t.act(&w(&t, "t"), &t.root()), t.root());
        assert_eq!(t.height(&v(&t, "t")), 1);
        assert_eq!(t.height(&v(&t, "aT")), -1);
        // trailing a-powers do not change the coset
        assert_eq!(v(&t, "taaaaa"), v(&t, "t"));
    }

    #[test]
    fn balls_are_trees() {
        for (m, n) in [(2, 3), (2, 4), (3, 2), (1, 2)] {
            let t = tree(m, n);
            let ball = t.ball(&t.root(), 4);
            assert!(ball.is_tree);
            assert_eq!(ball.entries.len() - ball.edge_count(), 1);
            for e in &ball.entries {
                if let Some(p) = e.parent {
                    assert_eq!((e.height - ball.entries[p].height).abs(), 1);
                }
            }
        }
        let t = tree(2, 3);
        // 1 + 5 + 5·4 + 5·4² at radius 3
        assert_eq!(t.ball(&t.root(), 3).entries.len(), 1 + 5 + 20 + 80);
    }

    #[test]
    fn distance_matches_bfs() {
        let t = tree(2, 3);
        let ball = t.ball(&t.root(), 3);
        for (i, e) in ball.entries.iter().enumerate().step_by(7) {
            for f in ball.entries.iter().skip(i % 5).step_by(11) {
                let d = t.distance(&e.vertex, &f.vertex);
                assert_eq!(Some(d), bfs_distance(&t, &e.vertex, &f.vertex, 6));
                let path = t.geodesic(&e.vertex, &f.vertex);
                assert_eq!(path.len(), d + 1);
                assert_eq!(path.last(), Some(&f.vertex));
                for p in path.windows(2) {
                    assert!(t.neighbors(&p[0]).iter().any(|(x, _)| *x == p[1]));
                }
            }
        }
    }

    #[test]
    fn classification() {
        let t = tree(2, 3);
        assert_eq!(t.classify(&w(&t, "aaaaa"), &t.root(), 8), Classification::Elliptic { fixed: t.root() });
        assert_eq!(t.classify(&w(&t, "t"), &t.root(), 8), Classification::Loxodromic { translation_length: 1 });
        let g = w(&t, "taT");
        assert!(!t.fixes(&g, &t.root()));
        assert!(t.fixes(&g, &v(&t, "t")));
        match t.classify(&g, &t.root(), 8) {
            Classification::Elliptic { fixed } => assert!(t.fixes(&g, &fixed)),
            other => panic!("{other:?}"),
        }
        for (m, n) in [(2, 3), (2, 4), (3, 5), (-2, 3)] {
            let t = tree(m, n);
            assert!(matches!(t.classify(&w(&t, "a"), &t.root(), 4), Classification::Elliptic { .. }));
            assert_eq!(t.classify(&w(&t, "t"), &t.root(), 4), Classification::Loxodromic { translation_length: 1 });
        }
        let t = tree(2, 3);
        assert_eq!(t.classify(&w(&t, "tat"), &t.root(), 8), Classification::Loxodromic { translation_length: 2 });
    }

    #[test]
    fn zeta_values() {
        let t = tree(2, 3);
        assert_eq!(t.zeta(&w(&t, "aaa"), &t.root()).unwrap(), BigInt::from(3));
        assert!(t.zeta(&t.group().identity(), &t.root()).is_err());
        assert!(t.zeta(&w(&t, "t"), &t.root()).is_err());
        let t4 = tree(2, 4);
        assert_eq!(t4.zeta(&w(&t4, "aa"), &v(&t4, "T")).unwrap(), BigInt::from(4));
        assert_eq!(t4.zeta(&w(&t4, "aa"), &t4.root()).unwrap(), BigInt::from(2));
        let a6 = w(&t, "aaaaaa");
        assert_eq!(t.zeta(&a6, &v(&t, "T")).unwrap(), BigInt::from(9));
        assert_eq!(t.zeta(&a6, &v(&t, "t")).unwrap(), BigInt::from(4));
    }

    #[test]
    fn fixed_subtrees() {
        let t4 = tree(2, 4);
        let a2 = w(&t4, "aa");
        for r in 1..=5 {
            let sub = t4.fixed_subtree(&a2, r);
            assert!(sub.connected && !sub.loxodromic);
            let ball = t4.ball(&t4.root(), r);
            let fixed: HashSet<TreeVertex> = sub.vertices.into_iter().collect();
            for e in &ball.entries {
                if e.vertex.in_lower_subtree() {
                    assert!(fixed.contains(&e.vertex), "{} should be fixed", e.vertex);
                }
            }
        }
        // the fixed set is strictly larger than the lower subtree: t⁻¹at⟨a⟩ has height 0
        let extra = v(&t4, "Tat");
        assert!(t4.fixes(&a2, &extra));
        assert!(!extra.in_lower_subtree());
        assert_eq!(t4.height(&extra), 0);
        assert_ne!(extra, t4.root());
        let t = tree(2, 3);
        let mut extremes = Vec::new();
        for j in [2, 4, 6] {
            let sub = t.fixed_subtree(&BsElement::a_power(j), 6);
            assert!(sub.connected);
            assert!(sub.vertices.len() < t.ball(&t.root(), 6).entries.len());
            let (lo, hi) = height_range(&t, &sub.vertices).unwrap();
            extremes.push(lo.abs().max(hi.abs()));
        }
        assert!(extremes.iter().all(|&h| h <= 2), "{extremes:?}");
        assert!(t.fixed_subtree(&w(&t, "t"), 3).loxodromic);
        let id = t.fixed_subtree(&t.group().identity(), 2);
        assert_eq!(id.vertices.len(), t.ball(&t.root(), 2).entries.len());
    }

    #[test]
    fn zeta_relation_and_roots() {
        let t4 = tree(2, 4);
        assert!(t4.zeta_relation_check(&w(&t4, "aa"), 4).unwrap());
        let t = tree(2, 3);
        assert!(t.zeta_relation_check(&BsElement::a_power(6), 5).unwrap());
        assert!(t.zeta_relation_check(&BsElement::a_power(1), 3).unwrap());
        assert!(t.root_bound_check(&BsElement::a_power(3), &BsElement::a_power(1), 3, 4).unwrap());
        assert!(t4.root_bound_check(&BsElement::a_power(2), &BsElement::a_power(1), 2, 4).unwrap());
        for k in 1..6 {
            for n in 1..=5u32 {
                let u = BsElement::a_power(k);
                let g = t.group().pow(&u, n as i64);
                assert!(t.root_bound_check(&g, &u, n, 4).unwrap());
            }
        }
    }

    #[test]
    fn intersection_indices() {
        let t = tree(2, 3);
        assert_eq!(t.intersection_index_witness(&t.group().identity(), 10), Some(1));
        assert_eq!(t.intersection_index_witness(&w(&t, "t"), 20), Some(3));
        assert_eq!(t.intersection_index_witness(&w(&t, "tt"), 20), Some(9));
        assert_eq!(t.intersection_index_witness(&w(&t, "tt"), 8), None);
    }

    #[test]
    fn csv_export() {
        let t = tree(2, 3);
        let mut buf = Vec::new();
        t.ball(&t.root(), 1).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.contains("<a>,t<a>,out0,1"));
        assert!(text.contains("<a>,aT<a>,in1,-1"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn action_preserves_adjacency(g in "[aAtT]{0,10}", path in prop::collection::vec(0usize..5, 0..5), pick in 0usize..5) {
            let t = tree(2, 3);
            let g = w(&t, if g.is_empty() { "e" } else { &g });
            let mut u = t.root();
            for i in path {
                u = t.neighbors(&u)[i].0.clone();
            }
            let x = t.neighbors(&u)[pick].0.clone();
            let (gu, gx) = (t.act(&g, &u), t.act(&g, &x));
            prop_assert!(t.neighbors(&gu).iter().any(|(y, _)| *y == gx));
            prop_assert_eq!((t.height(&gu) - t.height(&gx)).abs(), 1);
        }
    }
}
