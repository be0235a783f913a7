//! Reproducible experiment runs: one config schema, deterministic artifacts
//! (events.jsonl, summary.csv, manifest.json and per-experiment extras) and a
//! verifier that re-checks exact invariants from the logged data.

mod bs;
mod oracles;
mod records;
mod srs;
mod wreath;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::groups::BaseGroup;
use crate::records::TailSpec;

pub use oracles::oracle_suite;

pub const MANIFEST_FORMAT: &str = "srslab-manifest/1";
pub const MANIFEST: &str = "manifest.json";
pub const EVENTS: &str = "events.jsonl";
pub const SUMMARY: &str = "summary.csv";
pub const BUILDER: &str = "builder.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Records,
    WreathSrs,
    PermwreathSrs,
    ThompsonMu,
    BsTree,
    Martingale,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Records,
        ExperimentKind::WreathSrs,
        ExperimentKind::PermwreathSrs,
        ExperimentKind::ThompsonMu,
        ExperimentKind::BsTree,
        ExperimentKind::Martingale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Records => "records",
            ExperimentKind::WreathSrs => "wreath-srs",
            ExperimentKind::PermwreathSrs => "permwreath-srs",
            ExperimentKind::ThompsonMu => "thompson-mu",
            ExperimentKind::BsTree => "bs-tree",
            ExperimentKind::Martingale => "martingale",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordsConfig {
    pub tail: TailSpec,
    /// law whose records stay non-simple
    pub contrast: TailSpec,
    pub partial_terms: u64,
}

impl Default for RecordsConfig {
    fn default() -> Self {
        Self {
            tail: TailSpec::Telescoping,
            contrast: TailSpec::Geometric { ratio: "1/2".into() },
            partial_terms: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WreathConfig {
    pub lamp: BaseGroup,
    pub a: String,
    pub control_lamp: BaseGroup,
    pub control_a: String,
    pub base: BaseGroup,
    pub guard: f64,
    pub window_radius: i64,
    pub census_radius: i64,
    pub equivariance_pairs: usize,
    pub probe_radius: i64,
    /// g is a product of at most this many lazy steps
    pub g_length: usize,
}

impl Default for WreathConfig {
    fn default() -> Self {
        Self {
            lamp: BaseGroup::Symmetric(3),
            a: "[2,1,3]".into(),
            control_lamp: BaseGroup::Cyclic(2),
            control_a: "1".into(),
            base: BaseGroup::Lattice(3),
            guard: 0.2,
            window_radius: 2,
            census_radius: 1,
            equivariance_pairs: 100,
            probe_radius: 2,
            g_length: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleConfig {
    pub lamp: BaseGroup,
    pub a: String,
    pub base: BaseGroup,
    pub guard: f64,
    /// η-samples per checkpoint (one pool reused at every checkpoint)
    pub pool: usize,
    pub checkpoint_every: u64,
    pub tolerance: f64,
    pub normalish_subgroups: usize,
    pub normalish_max_radius: i64,
}

impl Default for MartingaleConfig {
    fn default() -> Self {
        Self {
            lamp: BaseGroup::Symmetric(3),
            a: "[2,1,3]".into(),
            base: BaseGroup::Lattice(3),
            guard: 0.2,
            pool: 500,
            checkpoint_every: 1000,
            tolerance: 0.05,
            normalish_subgroups: 10,
            normalish_max_radius: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThompsonConfig {
    pub i_max: usize,
    pub delta_cap: usize,
    pub windows: usize,
    pub guard: f64,
}

impl Default for ThompsonConfig {
    fn default() -> Self {
        Self { i_max: 64, delta_cap: 256, windows: 3, guard: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermWreathConfig {
    pub lamp: BaseGroup,
    pub a: String,
    pub base: BaseGroup,
    pub i_max: usize,
    pub delta_cap: usize,
    pub windows: usize,
    pub guard: f64,
}

impl Default for PermWreathConfig {
    fn default() -> Self {
        Self {
            lamp: BaseGroup::Cyclic(2),
            a: "1".into(),
            base: BaseGroup::Lattice(3),
            i_max: 16,
            delta_cap: 256,
            windows: 3,
            guard: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsConfig {
    /// (m, n) for the fixed-subtree claim and the ζ-relation
    pub claim_group: (i64, i64),
    pub claim_element: String,
    pub claim_radius: usize,
    /// (m, n) with neither m/n nor n/m an integer
    pub bounded_group: (i64, i64),
    pub bounded_powers: Vec<i64>,
    pub bounded_radius: usize,
    pub index_elements: Vec<String>,
    pub index_bound: u64,
}

impl Default for BsConfig {
    fn default() -> Self {
        Self {
            claim_group: (2, 4),
            claim_element: "aa".into(),
            claim_radius: 5,
            bounded_group: (2, 3),
            bounded_powers: vec![2, 4, 6],
            bounded_radius: 6,
            index_elements: vec!["t".into(), "tt".into()],
            index_bound: 50,
        }
    }
}

/// Everything that determines a run. The output directory is not part of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub trials: usize,
    pub horizon: u64,
    pub records: RecordsConfig,
    pub wreath: WreathConfig,
    pub martingale: MartingaleConfig,
    pub thompson: ThompsonConfig,
    pub permwreath: PermWreathConfig,
    pub bs: BsConfig,
}

impl ExperimentConfig {
    /// The settings used by the acceptance suite.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let (trials, horizon) = match kind {
            ExperimentKind::Records => (500, 10_000),
            ExperimentKind::WreathSrs => (200, 10_000),
            ExperimentKind::Martingale => (100, 10_000),
            ExperimentKind::ThompsonMu => (200, 10_000),
            ExperimentKind::PermwreathSrs => (100, 2_000),
            ExperimentKind::BsTree => (0, 0),
        };
        Self {
            kind,
            seed: 2024,
            trials,
            horizon,
            records: RecordsConfig::default(),
            wreath: WreathConfig::default(),
            martingale: MartingaleConfig::default(),
            thompson: ThompsonConfig::default(),
            permwreath: PermWreathConfig::default(),
            bs: BsConfig::default(),
        }
    }

    /// Reads a TOML config. Keys left out take the defaults of the
    /// experiment; `kind` may come from the file or from the caller.
    pub fn from_toml(kind: Option<ExperimentKind>, text: &str) -> Result<Self> {
        let file: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let file_kind = match file.get("kind") {
            Some(v) => Some(
                v.as_str()
                    .ok_or_else(|| Error::Config("kind must be a string".into()))?
                    .parse::<ExperimentKind>()?,
            ),
            None => None,
        };
        let kind = match (kind, file_kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!("config is for {b}, not {a}")));
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(Error::Config("no experiment kind given".into())),
        };
        let mut base = toml::Table::try_from(Self::defaults(kind)).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, file);
        let cfg: Self = toml::Value::Table(base).try_into().map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let guards = [self.wreath.guard, self.martingale.guard, self.thompson.guard, self.permwreath.guard];
        if guards.iter().any(|g| !(0.0..1.0).contains(g)) {
            return Err(Error::Config("guard fractions must lie in [0, 1)".into()));
        }
        if self.thompson.windows == 0 || self.thompson.windows > self.thompson.i_max {
            return Err(Error::Config("thompson.windows must lie in 1..=i_max".into()));
        }
        if self.permwreath.windows == 0 || self.permwreath.windows > self.permwreath.i_max {
            return Err(Error::Config("permwreath.windows must lie in 1..=i_max".into()));
        }
        if self.martingale.checkpoint_every == 0 {
            return Err(Error::Config("martingale.checkpoint_every must be positive".into()));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One line of events.jsonl.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seed: u64,
    pub step: u64,
    pub event_kind: String,
    pub payload: Value,
}

impl Event {
    pub fn new(seed: u64, step: u64, kind: &str, payload: impl Serialize) -> Self {
        Self { seed, step, event_kind: kind.into(), payload: serde_json::to_value(payload).expect("payload serializes") }
    }
}

/// What an experiment hands back before anything is written.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub events: Vec<Event>,
    pub summary_header: Vec<String>,
    pub summary_rows: Vec<Vec<String>>,
    pub metrics: BTreeMap<String, Value>,
    pub checks: BTreeMap<String, bool>,
    pub warnings: Vec<String>,
    /// extra artifacts: file name and bytes
    pub files: Vec<(String, Vec<u8>)>,
}

impl RunOutput {
    fn metric(&mut self, name: &str, v: impl Serialize) {
        self.metrics.insert(name.into(), serde_json::to_value(v).expect("metric serializes"));
    }

    fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.into(), ok);
    }

    fn header(&mut self, cols: &[&str]) {
        self.summary_header = cols.iter().map(|c| c.to_string()).collect();
    }

    fn row(&mut self, cols: Vec<String>) {
        self.summary_rows.push(cols);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: String,
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub metrics: BTreeMap<String, Value>,
    /// acceptance checks computed by the run
    pub checks: BTreeMap<String, bool>,
    pub warnings: Vec<String>,
    /// file name → sha256
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn metric_f64(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).and_then(Value::as_f64)
    }

    pub fn metric_u64(&self, name: &str) -> Option<u64> {
        self.metrics.get(name).and_then(Value::as_u64)
    }

    pub fn check(&self, name: &str) -> Option<bool> {
        self.checks.get(name).copied()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    match config.kind {
        ExperimentKind::Records => records::run(config),
        ExperimentKind::WreathSrs => wreath::run_srs(config),
        ExperimentKind::Martingale => wreath::run_martingale(config),
        ExperimentKind::ThompsonMu => srs::run_thompson(config),
        ExperimentKind::PermwreathSrs => srs::run_permwreath(config),
        ExperimentKind::BsTree => bs::run(config),
    }
}

/// Runs the experiment and writes its artifacts into `out`.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let output = execute(config)?;
    fs::create_dir_all(out)?;
    let mut artifacts = BTreeMap::new();
    let mut write = |name: &str, bytes: &[u8]| -> Result<()> {
        fs::write(out.join(name), bytes)?;
        artifacts.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    };
    let mut events = Vec::new();
    for e in &output.events {
        serde_json::to_writer(&mut events, e)?;
        events.push(b'\n');
    }
    write(EVENTS, &events)?;
    let mut summary = String::new();
    let line = |cols: &[String]| cols.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(",") + "\n";
    summary.push_str(&line(&output.summary_header));
    for r in &output.summary_rows {
        summary.push_str(&line(r));
    }
    write(SUMMARY, summary.as_bytes())?;
    for (name, bytes) in &output.files {
        write(name, bytes)?;
    }
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: config.kind,
        config_hash: config.hash(),
        config: config.clone(),
        metrics: output.metrics,
        checks: output.checks,
        warnings: output.warnings,
        artifacts,
    };
    fs::write(out.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl VerifyCheck {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub experiment: ExperimentKind,
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn read_artifact(dir: &Path, name: &str) -> Result<Vec<u8>> {
    fs::read(dir.join(name)).map_err(|e| Error::MissingArtifact(format!("{name}: {e}")))
}

fn read_events(bytes: &[u8]) -> Result<Vec<Event>> {
    std::str::from_utf8(bytes)
        .map_err(|e| Error::Parse(e.to_string()))?
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Re-checks a finished run from its directory without re-simulating:
/// artifact hashes, then the exact invariants of the experiment.
pub fn verify(dir: &Path) -> Result<VerifyReport> {
    let manifest: Manifest = serde_json::from_slice(&read_artifact(dir, MANIFEST)?)?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(Error::Parse(format!("unsupported manifest format {:?}", manifest.format)));
    }
    let mut checks = Vec::new();
    let mut files = BTreeMap::new();
    for (name, hash) in &manifest.artifacts {
        let bytes = read_artifact(dir, name)?;
        let actual = sha256_hex(&bytes);
        checks.push(VerifyCheck::new(format!("hash {name}"), &actual == hash, actual));
        files.insert(name.clone(), bytes);
    }
    checks.push(VerifyCheck::new(
        "config hash",
        manifest.config.hash() == manifest.config_hash,
        manifest.config_hash.clone(),
    ));
    let events = read_events(files.get(EVENTS).ok_or_else(|| Error::MissingArtifact(EVENTS.into()))?)?;
    let cfg = &manifest.config;
    let more = match manifest.experiment {
        ExperimentKind::Records => records::verify(cfg, &manifest, &events)?,
        ExperimentKind::WreathSrs => wreath::verify_srs(cfg, &events)?,
        ExperimentKind::Martingale => wreath::verify_martingale(cfg, &manifest, &events)?,
        ExperimentKind::ThompsonMu | ExperimentKind::PermwreathSrs => {
            let builder = files.get(BUILDER).ok_or_else(|| Error::MissingArtifact(BUILDER.into()))?;
            srs::verify(cfg, &manifest, builder, &events)?
        }
        ExperimentKind::BsTree => bs::verify(cfg, &events)?,
    };
    checks.extend(more);
    Ok(VerifyReport { experiment: manifest.experiment, checks })
}
