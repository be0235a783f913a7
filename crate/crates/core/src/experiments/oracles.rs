//! Every subgroup oracle against brute-force enumeration of words in a finite
//! generating set of the subgroup.

use num_bigint::BigInt;

use crate::chabauty::{brute_force_agreement, commuting_word_agreement, CyclicA, OracleAgreement, PermWreathSum, Subgroup, ThompsonH, WreathDiagonal};
use crate::chabauty::LampConfiguration;
use crate::error::Result;
use crate::groups::{BaseElement, BaseGroup, BaumslagSolitar, Dyadic, Group, Site, Thompson, ThompsonElement, WreathGroup};
use crate::measure::delta_ball;

/// Words in the subgroup generators.
pub const SUBGROUP_LENGTH: u64 = 12;
/// Words in the ambient generators.
pub const WINDOW_LENGTH: u64 = 8;
const CAP: usize = 4_000_000;

fn window<G: Group>(group: &G) -> Vec<G::Element> {
    delta_ball(group, &group.generators(), WINDOW_LENGTH, CAP).0
}

fn with_inverses<G: Group>(group: &G, xs: Vec<G::Element>) -> Vec<G::Element> {
    xs.into_iter().flat_map(|x| [group.inv(&x), x]).collect()
}

fn baumslag_solitar() -> Result<Vec<OracleAgreement>> {
    let g = BaumslagSolitar::new(2, 3)?;
    let w = window(&g);
    let (a, t) = (g.a(), g.t());
    let cyclic = Subgroup::family(CyclicA);
    let conj = cyclic.conjugate(&g, &t);
    let meet = Subgroup::Intersection(vec![cyclic.clone(), conj.clone()]);
    let cases = [
        ("BS(2,3) trivial", Subgroup::Trivial, vec![]),
        ("BS(2,3) <a>", cyclic, vec![a.clone()]),
        ("BS(2,3) t<a>t^-1", conj, vec![g.conj(&t, &a)]),
        ("BS(2,3) <a> ∩ t<a>t^-1", meet, vec![g.pow(&a, 3)]),
    ];
    Ok(cases
        .into_iter()
        .map(|(name, h, gens)| {
            let gens = with_inverses(&g, gens);
            brute_force_agreement(&g, name, &h, &gens, SUBGROUP_LENGTH, &w, CAP)
        })
        .collect())
}

/// f is the first compactly supported window element with support in [0, 1];
/// H is generated by the translates of f supported inside the hull of the
/// window's compactly supported elements. The translates commute, so the
/// length-12 ball (about 4.7e6 elements for eight translates) is walked as
/// ordered words instead of stored.
fn thompson() -> Result<OracleAgreement> {
    let w = window(&Thompson);
    let (zero, one) = (Dyadic::zero(), Dyadic::from_int(1));
    let f = w
        .iter()
        .find(|x| {
            x.in_commutator() && x.breakpoint_hull().is_some_and(|(lo, hi)| *lo >= zero && *hi <= one)
        })
        .cloned()
        .unwrap_or_else(ThompsonElement::default_f);
    // translates whose support lies inside the hull of the window's [F, F] part
    let (lo, hi) = w
        .iter()
        .filter(|x| x.in_commutator())
        .filter_map(|x| x.breakpoint_hull())
        .fold(None, |acc: Option<(Dyadic, Dyadic)>, (a, b)| match acc {
            None => Some((a.clone(), b.clone())),
            Some((l, h)) => Some((l.min(a.clone()), h.max(b.clone()))),
        })
        .unwrap_or((zero.clone(), one.clone()));
    let (flo, fhi) = f.breakpoint_hull().map(|(a, b)| (a.clone(), b.clone())).unwrap_or((zero, one));
    let last = (&hi - &fhi).floor();
    let cells: Vec<BigInt> = std::iter::successors(Some((&lo - &flo).ceil()), |k| Some(k + 1)).take_while(|k| *k <= last).collect();
    let h = ThompsonH::new(f.clone())?;
    let gens: Vec<_> = cells.iter().map(|k| h.translate_power(k, 1)).collect();
    let name = format!("F H(f = {f})");
    commuting_word_agreement(&Thompson, name, &Subgroup::family(h), &gens, SUBGROUP_LENGTH, &w)
}

fn wreath() -> Result<Vec<OracleAgreement>> {
    let reach = (WINDOW_LENGTH / 2) as i64;
    let site = |x: i64| Site::Point(BaseElement::Integer(x));

    let g = WreathGroup::new(BaseGroup::Symmetric(3), BaseGroup::Integer);
    let a = BaseElement::perm_from_cycles(3, &[&[1, 2]]);
    let mut conf = LampConfiguration::default();
    conf.values.insert(site(1), BaseElement::perm_from_cycles(3, &[&[1, 3]]));
    conf.values.insert(site(-2), BaseElement::perm_from_cycles(3, &[&[1, 2, 3]]));
    let gens: Vec<_> = (-reach..=reach)
        .map(|b| {
            let c = conf.value(&g.lamp, &site(b));
            g.delta(site(b), g.lamp.conj(&c, &a))
        })
        .collect();
    let h = Subgroup::family(WreathDiagonal::new(&g, a, conf)?);
    let diagonal = brute_force_agreement(&g, "S3 wr Z H(w)", &h, &gens, SUBGROUP_LENGTH, &window(&g), CAP);

    let p = WreathGroup::permutational(BaseGroup::Cyclic(2), BaseGroup::Integer);
    let one = BaseElement::Cyclic(1);
    let gens: Vec<_> = (-reach..=reach).map(|b| p.delta(site(b), one.clone())).collect();
    let h = Subgroup::family(PermWreathSum { a: one });
    let sum = brute_force_agreement(&p, "Z/2 wr_X Z orbit sum", &h, &gens, SUBGROUP_LENGTH, &window(&p), CAP);
    Ok(vec![diagonal, sum])
}

/// One agreement report per subgroup family.
pub fn oracle_suite() -> Result<Vec<OracleAgreement>> {
    let mut out = baumslag_solitar()?;
    out.push(thompson()?);
    out.extend(wreath()?);
    Ok(out)
}
