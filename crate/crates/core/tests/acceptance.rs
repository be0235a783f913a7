//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Every experiment runs with its default
//! configuration, which is the one pinned here.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use srslab::experiments::{self, ExperimentConfig, ExperimentKind, Manifest};
use srslab::groups::BaseGroup;
use srslab::records::TailSpec;
use tempfile::TempDir;

const SEEDS_RECORDS: usize = 500;
const SEEDS_THOMPSON: usize = 200;
const SEEDS_WREATH: usize = 200;
const SEEDS_MARTINGALE: usize = 100;
const HORIZON: u64 = 10_000;

const SIMPLE_AT_HORIZON: f64 = 0.95;
const NONSIMPLE_STEPS: f64 = 0.05;
const GAUGE: f64 = 0.99;
const I_MAX: usize = 64;
const SEED_FRACTION: f64 = 0.9;
const CERTIFIED: f64 = 0.9;
const EQUIVARIANCE_PAIRS: u64 = 100;
const NEAR_DIRAC: f64 = 0.9;
const DIRAC_TOLERANCE: f64 = 0.05;
const ETA_POOL: usize = 500;
const NORMALISH_RADIUS: usize = 5;
const CLAIM_RADIUS: usize = 5;
const BOUNDED_RADIUS: usize = 6;

const LIMIT_RECORDS: Duration = Duration::from_secs(30);
const LIMIT_MEASURE: Duration = Duration::from_secs(120);
const LIMIT_THOMPSON: Duration = Duration::from_secs(600);
const LIMIT_WREATH: Duration = Duration::from_secs(300);
const LIMIT_MARTINGALE: Duration = Duration::from_secs(600);
const LIMIT_BS: Duration = Duration::from_secs(60);
const LIMIT_ORACLES: Duration = Duration::from_secs(300);

struct Run {
    manifest: Manifest,
    dir: TempDir,
    elapsed: Duration,
}

impl Run {
    fn f(&self, name: &str) -> f64 {
        self.manifest.metric_f64(name).unwrap_or(f64::NAN)
    }

    fn u(&self, name: &str) -> u64 {
        self.manifest.metric_u64(name).unwrap_or(u64::MAX)
    }

    fn list(&self, name: &str) -> Vec<u64> {
        self.manifest.metrics.get(name).and_then(|v| serde_json::from_value(v.clone()).ok()).unwrap_or_default()
    }

    fn flag(&self, name: &str) -> bool {
        self.manifest.metrics.get(name).and_then(|v| v.as_bool()).unwrap_or(false)
    }

    fn verified(&self) -> bool {
        experiments::verify(self.dir.path()).is_ok_and(|r| r.passed())
    }
}

fn run(kind: ExperimentKind) -> Run {
    let cfg = ExperimentConfig::defaults(kind);
    let dir = tempfile::tempdir().expect("tempdir");
    let start = Instant::now();
    let manifest = experiments::run(&cfg, dir.path()).unwrap_or_else(|e| panic!("{kind}: {e}"));
    Run { manifest, dir, elapsed: start.elapsed() }
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("run directory")
        .map(|e| {
            let e = e.expect("dir entry");
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).expect("artifact"))
        })
        .collect()
}

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn line(&mut self, n: usize, title: &str, ok: bool, elapsed: Duration, detail: String) {
        if !ok {
            self.failed.push(n);
        }
        println!("criterion {n} {} {title}: {detail} ({:.1} s)", if ok { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
    }
}

fn main() -> ExitCode {
    let mut report = Report { failed: Vec::new() };
    let mut runs: BTreeMap<&'static str, Run> = BTreeMap::new();

    let records = run(ExperimentKind::Records);
    let c = &records.manifest.config;
    let setup = c.trials == SEEDS_RECORDS
        && c.horizon == HORIZON
        && c.records.tail == TailSpec::Telescoping
        && c.records.contrast == (TailSpec::Geometric { ratio: "1/2".into() });
    let simple = records.f("default.fraction_simple_at_horizon");
    let nonsimple = records.f("contrast.fraction_nonsimple_steps");
    report.line(
        1,
        "records dichotomy",
        setup && simple >= SIMPLE_AT_HORIZON && nonsimple > NONSIMPLE_STEPS && records.elapsed < LIMIT_RECORDS,
        records.elapsed,
        format!("simple at horizon {simple:.4} >= {SIMPLE_AT_HORIZON}, geometric nonsimple steps {nonsimple:.4} > {NONSIMPLE_STEPS}"),
    );
    let gauge = records.f("default.gauge_validation");
    report.line(
        2,
        "gauge validity",
        setup && gauge >= GAUGE && records.elapsed < LIMIT_RECORDS,
        records.elapsed,
        format!("validation {gauge:.4} >= {GAUGE}"),
    );
    runs.insert("records", records);

    let thompson = run(ExperimentKind::ThompsonMu);
    let c = &thompson.manifest.config;
    let (mu, bound, slack) = (thompson.f("entropy_mu"), thompson.f("entropy_bound"), thompson.f("entropy_slack"));
    let exact = thompson.flag("tile_sums_exact") && thompson.flag("tile_masses_match_law") && thompson.flag("symmetric");
    report.line(
        3,
        "exact measure invariants",
        c.thompson.i_max == I_MAX && exact && mu <= bound && slack >= 0.0 && thompson.verified() && thompson.elapsed < LIMIT_MEASURE,
        thompson.elapsed,
        format!(
            "I_max {}, tile sums exact and symmetric {exact}, H(mu) {mu:.6} <= {bound:.6} (slack {slack:.6}), support {}",
            c.thompson.i_max,
            thompson.u("support")
        ),
    );
    let n = thompson.u("trajectories");
    let (abc, stab) = (thompson.f("abc_fraction"), thompson.f("stabilized_fraction"));
    let stabilized = thompson.list("stabilized_windows");
    let nontrivial = thompson.list("nontrivial_windows");
    let every = !stabilized.is_empty() && stabilized == nontrivial;
    report.line(
        4,
        "thompson end to end",
        n == SEEDS_THOMPSON as u64
            && c.horizon == HORIZON
            && abc >= SEED_FRACTION
            && stab >= SEED_FRACTION
            && every
            && thompson.elapsed < LIMIT_THOMPSON,
        thompson.elapsed,
        format!(
            "abc {abc:.3} >= {SEED_FRACTION}, stabilized {stab:.3} >= {SEED_FRACTION}, \
             non-identity traces per window {nontrivial:?} of stabilized {stabilized:?}, \
             limit non-trivial on {} of {n}",
            thompson.u("limit_nontrivial")
        ),
    );
    runs.insert("thompson-mu", thompson);

    let wreath = run(ExperimentKind::WreathSrs);
    let c = &wreath.manifest.config;
    let setup = c.trials == SEEDS_WREATH
        && c.horizon == HORIZON
        && c.wreath.lamp == BaseGroup::Symmetric(3)
        && c.wreath.control_lamp == BaseGroup::Cyclic(2)
        && c.wreath.base == BaseGroup::Lattice(3)
        && c.wreath.window_radius == 2;
    let certified = wreath.f("certified_fraction");
    let pairs = wreath.u("equivariance_pairs");
    let mismatches = wreath.u("equivariance_mismatches");
    let (census, control) = (wreath.u("census_distinct"), wreath.u("control_census_distinct"));
    report.line(
        5,
        "wreath product S3 wr Z^3",
        setup
            && certified >= CERTIFIED
            && pairs == EQUIVARIANCE_PAIRS
            && wreath.u("equivariance_compared") > 0
            && mismatches == 0
            && control == 1
            && census >= 2
            && wreath.verified()
            && wreath.elapsed < LIMIT_WREATH,
        wreath.elapsed,
        format!(
            "certified {certified:.4} >= {CERTIFIED}, equivariance {mismatches} mismatches over {pairs} pairs \
             ({} comparisons), census Z/2 {control} and S3 {census}",
            wreath.u("equivariance_compared")
        ),
    );
    runs.insert("wreath-srs", wreath);

    let martingale = run(ExperimentKind::Martingale);
    let c = &martingale.manifest.config;
    let near = martingale.f("near_dirac_fraction");
    let counts = martingale.list("normalish_min_counts");
    let counts_ok = counts.len() > NORMALISH_RADIUS
        && counts.iter().enumerate().take(NORMALISH_RADIUS + 1).all(|(r, &k)| k >= r as u64)
        && martingale.u("normalish_ok") == martingale.u("normalish_subgroups")
        && martingale.u("normalish_subgroups") > 0;
    report.line(
        6,
        "martingale and normalish witnesses",
        c.trials == SEEDS_MARTINGALE
            && c.martingale.pool == ETA_POOL
            && c.martingale.tolerance == DIRAC_TOLERANCE
            && near >= NEAR_DIRAC
            && counts_ok
            && martingale.verified()
            && martingale.elapsed < LIMIT_MARTINGALE,
        martingale.elapsed,
        format!(
            "near Dirac {near:.3} >= {NEAR_DIRAC}, nondecreasing on {} of {} subgroups, minimum counts by radius {counts:?}",
            martingale.u("normalish_ok"),
            martingale.u("normalish_subgroups")
        ),
    );
    runs.insert("martingale", martingale);

    let bs = run(ExperimentKind::BsTree);
    let c = &bs.manifest.config.bs;
    let setup = c.claim_group == (2, 4)
        && c.claim_element == "aa"
        && c.claim_radius == CLAIM_RADIUS
        && c.bounded_group == (2, 3)
        && c.bounded_powers == [2, 4, 6]
        && c.bounded_radius == BOUNDED_RADIUS;
    let claim = bs.flag("claim_holds");
    let zeta = bs.flag("zeta_relation");
    let height = bs.manifest.metrics.get("max_abs_height").and_then(|v| v.as_i64()).unwrap_or(i64::MAX);
    let (it, itt) = (bs.u("index.t"), bs.u("index.tt"));
    report.line(
        7,
        "Bass-Serre exact suite",
        setup && claim && zeta && height < BOUNDED_RADIUS as i64 && it == 3 && itt == 9 && bs.verified() && bs.elapsed < LIMIT_BS,
        bs.elapsed,
        format!(
            "Fix(a^2) = syntactic subtree {claim} (contained {}, {} extra fixed vertices), zeta relation {zeta}, \
             max |height| {height} < {BOUNDED_RADIUS}, index(t) {it}, index(t^2) {itt}",
            bs.flag("claim_contained"),
            bs.u("claim_extra_fixed")
        ),
    );
    runs.insert("bs-tree", bs);

    let start = Instant::now();
    let agreements = experiments::oracle_suite();
    let elapsed = start.elapsed();
    let (ok, detail) = match &agreements {
        Ok(list) => (
            !list.is_empty() && list.iter().all(|a| a.agrees()),
            list.iter()
                .map(|a| {
                    format!(
                        "{} [window {}, ball {}, members {}, mismatches {}, undetermined {}]",
                        a.family,
                        a.window,
                        a.subgroup_ball,
                        a.members,
                        a.mismatches.len(),
                        a.undetermined
                    )
                })
                .collect::<Vec<_>>()
                .join("; "),
        ),
        Err(e) => (false, e.to_string()),
    };
    report.line(8, "oracle equivalence", ok && elapsed < LIMIT_ORACLES, elapsed, detail);

    let start = Instant::now();
    runs.insert("permwreath-srs", run(ExperimentKind::PermwreathSrs));
    let mut differing = Vec::new();
    let mut files = 0;
    for kind in ExperimentKind::ALL {
        let first = &runs[kind.name()];
        let again = run(kind);
        let (a, b) = (artifacts(first.dir.path()), artifacts(again.dir.path()));
        files += a.len();
        if a != b || a.is_empty() {
            differing.push(kind.name());
        }
    }
    report.line(
        9,
        "determinism",
        differing.is_empty(),
        start.elapsed(),
        format!("{files} artifacts over {} experiments rerun, differing {differing:?}", ExperimentKind::ALL.len()),
    );

    if report.failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {:?}", report.failed);
        ExitCode::FAILURE
    }
}
