use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::*;
use crate::chabauty::{PermWreathSum, ThompsonH};
use crate::groups::{BaseElement, BaseGroup, BaumslagSolitar, Site, Thompson, ThompsonElement, WreathGroup};
use crate::records::TailSpec;
use crate::seed;

fn thompson_h() -> Subgroup<Thompson> {
    Subgroup::family(ThompsonH::new(ThompsonElement::default_f()).unwrap())
}

fn small_thompson(i_max: usize) -> BuilderState<Thompson> {
    let config = BuilderConfig { i_max, delta_cap: 64, ..Default::default() };
    BuilderState::build(Thompson, thompson_h(), ThompsonElement::default_f(), TailDistribution::telescoping(), config)
        .unwrap()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn tiles_of_integers() {
    let tiles = make_tiles(&BaseGroup::Integer, 3);
    let as_sets: Vec<HashSet<BaseElement>> = tiles.into_iter().map(|t| t.into_iter().collect()).collect();
    let int = |xs: &[i64]| xs.iter().map(|&x| BaseElement::Integer(x)).collect::<HashSet<_>>();
    assert_eq!(as_sets, vec![int(&[0]), int(&[1, -1]), int(&[2, -2])]);
}

#[test]
fn involutions_get_singleton_tiles() {
    let s3 = BaseGroup::Symmetric(3);
    let tiles = make_tiles(&s3, 10);
    // e, three transpositions, one pair of 3-cycles
    assert_eq!(tiles.len(), 5);
    for t in &tiles {
        let involutive = s3.inv(&t[0]) == t[0];
        assert_eq!(t.len(), if involutive { 1 } else { 2 });
    }
}

#[test]
fn bs_tiles_are_disjoint_and_symmetric() {
    let g = BaumslagSolitar::new(2, 3).unwrap();
    let tiles = make_tiles(&g, 6);
    let mut seen = HashSet::new();
    for t in &tiles {
        for x in t {
            assert!(seen.insert(x.clone()), "repeated element {}", g.format(x));
            assert!(t.contains(&g.inv(x)));
        }
    }
    assert_eq!(tiles[0], vec![g.identity()]);
}

#[test]
fn delta_ball_examples() {
    let z = BaseGroup::Integer;
    let int = BaseElement::Integer;
    let (ball, capped) = delta_ball(&z, &[int(0), int(1), int(-1)], 3, 1000);
    let got: HashSet<_> = ball.into_iter().collect();
    assert_eq!(got, (-3..=3).map(int).collect::<HashSet<_>>());
    assert!(!capped);

    let (ball, capped) = delta_ball(&z, &[], 5, 1000);
    assert_eq!((ball, capped), (vec![int(0)], false));

    let (ball, capped) = delta_ball(&Thompson, &Thompson.generators(), 10, 100);
    assert_eq!(ball.len(), 100);
    assert!(capped);
}

#[test]
fn thompson_witness_formula() {
    let th = Thompson;
    let f = ThompsonElement::default_f();
    // support in [−7/4, −5/4]: N = 2
    let q = vec![th.conj(&ThompsonElement::translation(-2), &f), th.identity()];
    // breakpoints up to 11/4, no end shift: M = 3
    let z = vec![th.identity(), th.conj(&ThompsonElement::translation(2), &f)];
    let h = thompson_h();
    let forbidden = HashSet::new();
    let query = WitnessQuery { h: &h, q: &q, conj: &[th.identity()], z: &z, forbidden: &forbidden };
    assert_eq!(thompson_support_bound(&q, &[th.identity()]), BigInt::from(2));
    assert_eq!(thompson_translation_bound(&z), BigInt::from(3));
    let (b, v) = th.find_witness(&query, &SearchConfig::default(), 0).unwrap();
    assert_eq!(b, ThompsonElement::translation(-6));
    assert!(v.passed && v.exhaustive);
}

#[test]
fn thompson_witness_skips_forbidden() {
    let th = Thompson;
    let h = thompson_h();
    let q = vec![ThompsonElement::default_f()];
    let z = vec![th.identity()];
    let forbidden = HashSet::from([ThompsonElement::translation(3)]);
    let query = WitnessQuery { h: &h, q: &q, conj: &[th.identity()], z: &z, forbidden: &forbidden };
    // N = 1, M = 1: −3 is forbidden through its inverse
    let (b, _) = th.find_witness(&query, &SearchConfig::default(), 0).unwrap();
    assert_eq!(b, ThompsonElement::translation(-4));
}

#[test]
fn perm_wreath_witness_clears_footprints() {
    let g = WreathGroup::permutational(BaseGroup::Cyclic(2), BaseGroup::Lattice(3));
    let h = Subgroup::family(PermWreathSum { a: BaseElement::Cyclic(1) });
    let site = |v: [i64; 3]| Site::Point(BaseElement::Tuple(v.to_vec()));
    let one = BaseElement::Cyclic(1);
    let q = vec![g.delta(site([2, 0, -2]), one.clone()), g.delta(site([0, 1, 0]), one.clone()), g.identity()];
    let z = vec![
        g.identity(),
        g.delta(site([-2, 2, 0]), one.clone()),
        g.translation(BaseElement::Tuple(vec![1, 0, 0])),
        g.delta(Site::Fixed, one),
    ];
    let forbidden = HashSet::new();
    let query = WitnessQuery { h: &h, q: &q, conj: &[g.identity()], z: &z, forbidden: &forbidden };
    let (b, v) = g.find_witness(&query, &SearchConfig::default(), 0).unwrap();
    assert_eq!(b, g.translation(BaseElement::Tuple(vec![5, 0, 0])));
    assert!(v.passed);
}

#[test]
fn empty_z_accepts_identity() {
    let g = BaumslagSolitar::new(2, 3).unwrap();
    let h = Subgroup::family(crate::chabauty::CyclicA);
    let forbidden = HashSet::new();
    let q = vec![g.a()];
    let query = WitnessQuery { h: &h, q: &q, conj: &[g.identity()], z: &[], forbidden: &forbidden };
    let (b, _) = g.find_witness(&query, &SearchConfig::default(), 0).unwrap();
    assert_eq!(b, g.identity());
}

#[test]
fn trivial_h0_is_rejected() {
    let config = BuilderConfig { i_max: 2, ..Default::default() };
    let err = BuilderState::build(Thompson, thompson_h(), Thompson.identity(), TailDistribution::telescoping(), config);
    assert!(matches!(err, Err(Error::Precondition(_))));
}

#[test]
fn assembly_degenerate_splits() {
    let int = BaseElement::Integer;
    let mut entries = Vec::new();
    // A_i empty: everything on the witness pair
    split_evenly(&[int(4), int(-4)], &rat(1, 6), true, &mut entries);
    assert_eq!(entries.iter().map(|e| e.mass.clone()).collect::<Vec<_>>(), vec![rat(1, 12), rat(1, 12)]);

    // an involutive witness takes all of (1 − α_i) p_i
    let s3 = BaseGroup::Symmetric(3);
    let t = BaseElement::perm_from_cycles(3, &[&[1, 2]]);
    assert_eq!(s3.inv(&t), t);
    let mut entries = Vec::new();
    let p = rat(1, 12);
    let on_rest = &p * alpha(2);
    split_evenly(&[t.clone()], &(&p - &on_rest), true, &mut entries);
    assert_eq!(entries[0].mass, rat(3, 48));
}

#[test]
fn small_thompson_build_invariants() {
    let state = small_thompson(8);
    let th = Thompson;
    assert_eq!(state.levels.len(), 9);
    assert!(state.levels[0].b.is_none());
    let mut prev = 0;
    for (n, level) in state.levels.iter().enumerate() {
        let q = state.q_window(n);
        assert!(q.len() >= prev);
        prev = q.len();
        // every d ∈ Δ_n sees a nontrivial element of dHd⁻¹ in Q_n
        for d in level.delta.iter().take(16) {
            let k = state.h.conjugate(&th, d);
            assert!(q.elements().iter().any(|x| !th.is_identity(x) && k.contains(&th, x).is_in()));
        }
        if let Some(b) = &level.b {
            assert!(b.is_translation() && b.left_shift < BigInt::zero());
            assert!(level.verification.as_ref().unwrap().passed);
        }
        // A_n avoids every earlier witness
        for earlier in &state.levels[..n] {
            if let Some(b) = &earlier.b {
                assert!(!level.a.contains(b) && !level.a.contains(&th.inv(b)));
            }
        }
    }
    for w in 1..state.levels.len() {
        assert!(state.q_window(w - 1).is_subset_of(&state.q_window(w)));
    }
    let mu = BuiltMeasure::assemble(&state);
    assert!(mu.tile_sums_exact());
    assert!(mu.is_symmetric());
    assert!(mu.tiles_disjoint());
    let e = mu.entropy_bound_check();
    assert!(e.holds && e.max_tile_entropy <= 4f64.ln() + 1e-12, "{e:?}");
    // α_i p_i bound off the witness pair
    for t in &mu.tiles[1..] {
        let off: BigRational = t.entries.iter().filter(|e| !e.is_b).map(|e| e.mass.clone()).sum();
        assert!(off <= &t.p * alpha(t.index));
    }
    assert_eq!(mu.residual, rat(1, 10));
}

#[test]
fn builder_is_deterministic() {
    let a = small_thompson(5);
    let b = small_thompson(5);
    let ja = BuilderArtifact::from_build(&a, &BuiltMeasure::assemble(&a)).to_json().unwrap();
    let jb = BuilderArtifact::from_build(&b, &BuiltMeasure::assemble(&b)).to_json().unwrap();
    assert_eq!(ja, jb);
}

#[test]
fn artifact_round_trip_and_tamper_detection() {
    let state = small_thompson(4);
    let mu = BuiltMeasure::assemble(&state);
    let art = BuilderArtifact::from_build(&state, &mu);
    let back = BuilderArtifact::from_json(&art.to_json().unwrap()).unwrap();
    assert_eq!(back, art);
    assert!(check_artifact(&Thompson, &back).unwrap().passed());

    let mut bad = art.clone();
    let entry = bad.tiles[3].entries.iter_mut().find(|e| e.is_b).unwrap();
    let m = parse_mass(&entry.mass) + rat(1, 1 << 20);
    entry.mass = crate::records::format_rational(&m);
    let check = check_artifact(&Thompson, &bad).unwrap();
    assert!(!check.symmetric && !check.tile_sums_exact);
}

fn parse_mass(s: &str) -> BigRational {
    crate::records::parse_rational(s).unwrap()
}

fn point_measure() -> BuiltMeasure<BaseGroup> {
    let p = TailDistribution::new(TailSpec::Finite { masses: vec!["1".into()] }).unwrap();
    let tile = TileMeasure::new(
        0,
        BigRational::one(),
        vec![TileEntry { element: BaseElement::Integer(0), mass: BigRational::one(), is_b: false }],
    );
    BuiltMeasure { group: BaseGroup::Integer, p, i_max: 0, tiles: vec![tile], residual: BigRational::zero() }
}

#[test]
fn point_mass_samples_identity() {
    let mu = point_measure();
    let mut rng = seed::rng_from_seed(3);
    let mut stats = SamplerStats::default();
    for _ in 0..100 {
        let (e, i) = mu.sample(&mut rng, &mut stats);
        assert_eq!((e.element.clone(), i), (BaseElement::Integer(0), 0));
    }
    assert_eq!(stats, SamplerStats { draws: 100, truncated: 0 });
}

#[test]
fn sampling_is_reproducible_and_truncation_matches_tail() {
    let state = small_thompson(6);
    let mu = BuiltMeasure::assemble(&state);
    let run = |seed_value| {
        let mut rng = seed::rng_from_seed(seed_value);
        let mut stats = SamplerStats::default();
        let draws: Vec<(ThompsonElement, usize)> =
            (0..100_000).map(|_| mu.sample(&mut rng, &mut stats)).map(|(e, i)| (e.element.clone(), i)).collect();
        (draws, stats)
    };
    let (a, sa) = run(11);
    let (b, sb) = run(11);
    assert_eq!(a[..1000], b[..1000]);
    assert_eq!(sa, sb);
    // tail(7) = 1/8
    let q = 1.0 / 8.0;
    let n = sa.draws as f64;
    let sigma = (n * q * (1.0 - q)).sqrt();
    assert!((sa.truncated as f64 - n * q).abs() <= 3.0 * sigma, "{sa:?}");
    // sampled elements lie in their tiles
    let by_tile: BTreeMap<usize, HashSet<&ThompsonElement>> =
        mu.tiles.iter().map(|t| (t.index, t.entries.iter().map(|e| &e.element).collect())).collect();
    assert!(a.iter().take(5000).all(|(x, i)| by_tile[i].contains(x)));
}

#[test]
fn abc_flags() {
    let p = TailDistribution::telescoping();
    // all steps are witnesses, strictly increasing indices
    let r = verify_abc(&[1, 2, 3, 4], &[true; 4], &p).unwrap();
    assert!(r.records.iter().all(|f| f.a && f.b && f.c));
    assert_eq!(r.k0, Some(0));

    // a tie with the record value in the gap breaks (C) for the earlier record
    let r = verify_abc(&[2, 0, 2, 5], &[true; 4], &p).unwrap();
    assert_eq!(r.records.iter().map(|f| f.c).collect::<Vec<_>>(), vec![false, true, true]);
    assert_eq!(r.k0, Some(1));

    // a non-witness step at a record time breaks (A)
    let r = verify_abc(&[1, 3, 0], &[true, false, false], &p).unwrap();
    assert!(!r.records[1].a);
    assert_eq!(r.k0, None);

    // Φ(0) = 4: a first record at value 0 followed by a record at time 5 violates (B)
    let r = verify_abc(&[0, 0, 0, 0, 1], &[true; 5], &p).unwrap();
    assert!(!r.records[3].b && r.records[3].c);
    assert_eq!(verify_abc(&[], &[], &p).unwrap().k0, None);
}
