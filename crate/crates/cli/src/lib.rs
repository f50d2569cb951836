//! Experiment driver behind the `stablerank` binary.
//!
//! An [`ExperimentConfig`] names one command and its parameters; [`run`]
//! produces the JSON artifact and [`execute`] writes it and maps failures
//! onto exit codes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use stablerank_core::isometry::{
    cuntz_defect, fock_left_shifts, orthogonal_row_family, prime_coisometry_pair, prime_shift_pair,
    IsometryFamily,
};
use stablerank_core::linalg::C64;
use stablerank_core::nest::{is_in_nest_algebra, random_member};
use stablerank_core::riesz::{self, RieszReport};
use stablerank_core::witness::{
    self, check_certificate, right_invertible_pair, right_invertible_pair_megablock, PerturbationCertificate,
};
use stablerank_core::{Error, NestSpec};

pub const TOL_ENV: &str = "STABLERANK_TOL";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    WitnessRtsr2,
    WitnessMegablock,
    WitnessObstruction,
    RieszCorner,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Fock,
    PrimeCoisometry,
    PrimeShift,
}

fn default_eps() -> f64 {
    0.1
}
fn default_nodes() -> usize {
    riesz::DEFAULT_NODES
}
fn default_pad() -> usize {
    2
}
fn default_corner_dim() -> usize {
    6
}
fn default_gamma() -> f64 {
    1.0
}
fn default_one() -> usize {
    1
}

/// One experiment. Unset optional fields take the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    /// JSON file `{"atom_dims": [...]}`; alternative to `dims`.
    #[serde(default)]
    pub nest_file: Option<PathBuf>,
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Falls back to `STABLERANK_TOL`, then to the module default.
    #[serde(default)]
    pub tol: Option<f64>,
    /// Number of generators of the Fock family.
    #[serde(default)]
    pub n: Option<u32>,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_pad")]
    pub pad: usize,
    /// Corner dimension for `riesz-corner`.
    #[serde(default = "default_corner_dim")]
    pub dim: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_one", rename = "J")]
    pub j: usize,
    #[serde(default)]
    pub family: Option<Family>,
    /// Consecutive seeds to run, starting at `seed`.
    #[serde(default = "default_one")]
    pub count: usize,
    #[serde(default = "default_one")]
    pub jobs: usize,
    /// Artifact to check, for `validate`.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            nest_file: None,
            dims: None,
            seed: 0,
            eps: default_eps(),
            tol: None,
            n: None,
            depth: None,
            nodes: default_nodes(),
            pad: default_pad(),
            dim: default_corner_dim(),
            gamma: default_gamma(),
            j: 1,
            family: None,
            count: 1,
            jobs: 1,
            input: None,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return bad(format!("tol must be positive, got {tol}"));
            }
        }
        if self.count == 0 || self.jobs == 0 {
            return bad("count and jobs must be at least 1".into());
        }
        if self.dims.is_some() && self.nest_file.is_some() {
            return bad("give either dims or nest_file, not both".into());
        }
        if self.command == Command::Validate && self.input.is_none() {
            return bad("validate needs an input artifact".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Module(#[from] Error),
    #[error("validation failed: {0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Module(_) | CliError::Invalid(_) => EXIT_FAILURE,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Module(e) => e.kind(),
            CliError::Invalid(_) => "validation",
        }
    }

    /// `{"kind": .., "message": ..}`.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "kind": self.kind(), "message": self.to_string() }).to_string()
    }
}

/// Tolerance from the config, else `STABLERANK_TOL`, else `default`.
pub fn resolve_tol(config: Option<f64>, default: f64) -> Result<f64, CliError> {
    if let Some(tol) = config {
        return Ok(tol);
    }
    match std::env::var(TOL_ENV) {
        Ok(text) => match text.trim().parse::<f64>() {
            Ok(tol) if tol > 0.0 && tol.is_finite() => Ok(tol),
            _ => Err(CliError::Config(format!("{TOL_ENV}={text:?} is not a positive number"))),
        },
        Err(_) => Ok(default),
    }
}

fn load_spec(config: &ExperimentConfig) -> Result<NestSpec, CliError> {
    let dims = match (&config.dims, &config.nest_file) {
        (Some(d), _) => d.clone(),
        (None, Some(path)) => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct SpecFile {
                atom_dims: Vec<usize>,
            }
            let text = read(path)?;
            let file: SpecFile = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            file.atom_dims
        }
        (None, None) => return Err(CliError::Config("dims or nest_file is required".into())),
    };
    NestSpec::new(dims).map_err(|e| CliError::Config(e.to_string()))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("artifacts serialize")
}

/// Runs `per_seed` for each seed of the sweep; a single seed yields its
/// artifact directly, several yield a `sweep` artifact in seed order.
fn sweep(config: &ExperimentConfig, per_seed: impl Fn(u64) -> Result<Value, CliError> + Sync) -> Result<Value, CliError> {
    if config.count == 1 {
        return per_seed(config.seed);
    }
    let seeds: Vec<u64> = (0..config.count as u64).map(|i| config.seed + i).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let runs = pool.install(|| seeds.par_iter().map(|&s| per_seed(s)).collect::<Result<Vec<_>, _>>())?;
    let runs: Vec<Value> = seeds
        .iter()
        .zip(runs)
        .map(|(s, artifact)| serde_json::json!({ "seed": s, "artifact": artifact }))
        .collect();
    Ok(serde_json::json!({ "kind": "sweep", "runs": runs }))
}

/// Runs the experiment and returns its artifact.
pub fn run(config: &ExperimentConfig) -> Result<Value, CliError> {
    config.check()?;
    match config.command {
        Command::WitnessRtsr2 => {
            let spec = load_spec(config)?;
            let tol = resolve_tol(config.tol, witness::DEFAULT_TOL)?;
            sweep(config, |seed| {
                let a = random_member(&spec, 2 * seed, 1.0)?;
                let b = random_member(&spec, 2 * seed + 1, 1.0)?;
                Ok(to_value(&right_invertible_pair(&a, &b, config.eps, tol)?))
            })
        }
        Command::WitnessMegablock => {
            let spec = load_spec(config)?;
            let tol = resolve_tol(config.tol, witness::DEFAULT_TOL)?;
            sweep(config, |seed| {
                let a = random_member(&spec, 2 * seed, 1.0)?;
                let b = random_member(&spec, 2 * seed + 1, 1.0)?;
                let cert = right_invertible_pair_megablock(&a, &b, config.eps, config.gamma, config.j, tol)?;
                Ok(to_value(&cert))
            })
        }
        Command::RieszCorner => sweep(config, |seed| {
            let a = riesz::random_corner(config.dim, 2 * seed)?;
            Ok(to_value(&riesz::riesz_corner(&a, config.pad, config.eps, config.nodes, 2 * seed + 1)?))
        }),
        Command::WitnessObstruction => {
            let params = obstruction_params(config)?;
            let report = obstruction_report(&params)?;
            if let Some(reason) = report.failure() {
                return Err(CliError::Invalid(reason));
            }
            Ok(to_value(&report))
        }
        Command::Validate => {
            let path = config.input.as_ref().expect("checked");
            let text = read(path)?;
            let artifact: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Invalid(format!("{}: not JSON: {e}", path.display())))?;
            let tol = config.tol;
            let summary = validate_value(&artifact, tol)?;
            Ok(summary)
        }
    }
}

/// Checks one artifact; fails with [`CliError::Invalid`] if any check fails.
pub fn validate_value(artifact: &Value, tol: Option<f64>) -> Result<Value, CliError> {
    let kind = artifact.get("kind").and_then(Value::as_str).unwrap_or("");
    let malformed = |e: serde_json::Error| CliError::Invalid(format!("malformed {kind}: {e}"));
    match kind {
        "perturbation_certificate" => {
            let cert: PerturbationCertificate = serde_json::from_value(artifact.clone()).map_err(malformed)?;
            let tol = resolve_tol(tol, witness::DEFAULT_TOL)?;
            let check = check_certificate(&cert, &cert.a, &cert.b, tol)?;
            if !check.passed() {
                return Err(CliError::Invalid(format!("certificate checks: {}", to_value(&check))));
            }
            Ok(serde_json::json!({ "kind": kind, "valid": true, "checks": check }))
        }
        "riesz_report" => {
            let report: RieszReport = serde_json::from_value(artifact.clone()).map_err(malformed)?;
            let checks = riesz::check_report(&report)?;
            if let Some(c) = checks.iter().find(|c| !c.passed) {
                return Err(CliError::Invalid(format!("{} = {:e} against bound {:e}", c.name, c.value, c.bound)));
            }
            Ok(serde_json::json!({ "kind": kind, "valid": true, "checks": checks }))
        }
        "obstruction_report" => {
            let stored: ObstructionReport = serde_json::from_value(artifact.clone()).map_err(malformed)?;
            let fresh = obstruction_report(&stored.params)?;
            if fresh != stored {
                return Err(CliError::Invalid("report differs from the recomputed family".into()));
            }
            if let Some(reason) = fresh.failure() {
                return Err(CliError::Invalid(reason));
            }
            Ok(serde_json::json!({ "kind": kind, "valid": true }))
        }
        "sweep" => {
            let runs = artifact
                .get("runs")
                .and_then(Value::as_array)
                .ok_or_else(|| CliError::Invalid("sweep without runs".into()))?;
            let mut seeds = Vec::with_capacity(runs.len());
            for run in runs {
                let inner = run
                    .get("artifact")
                    .ok_or_else(|| CliError::Invalid("sweep run without artifact".into()))?;
                validate_value(inner, tol)?;
                seeds.push(run.get("seed").cloned().unwrap_or(Value::Null));
            }
            Ok(serde_json::json!({ "kind": kind, "valid": true, "seeds": seeds }))
        }
        other => Err(CliError::Invalid(format!("unknown artifact kind {other:?}"))),
    }
}

/// Parameters that determine an obstruction report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstructionParams {
    pub family: Family,
    #[serde(default)]
    pub n: Option<u32>,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
}

fn obstruction_params(config: &ExperimentConfig) -> Result<ObstructionParams, CliError> {
    let family = config.family.unwrap_or(Family::Fock);
    Ok(match family {
        Family::Fock => ObstructionParams {
            family,
            n: Some(config.n.unwrap_or(2)),
            depth: Some(config.depth.unwrap_or(4)),
            dims: None,
        },
        _ => ObstructionParams {
            family,
            n: None,
            depth: None,
            dims: Some(load_spec(config)?.atom_dims().to_vec()),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSummary {
    pub n: usize,
    pub isometry: bool,
    pub defect: usize,
    pub index_proxy: i64,
    pub next_defined: usize,
    pub next_orthogonal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectSummary {
    pub rank: usize,
    pub positive: bool,
    /// The defect is exactly the projection onto the empty word.
    pub vacuum: bool,
}

/// Exact checks on one isometry family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstructionReport {
    pub kind: String,
    pub params: ObstructionParams,
    /// `W_i* W_j` is the domain indicator of `W_i` for `i = j` and zero
    /// otherwise, as integer matrices.
    pub exact_isometries: bool,
    pub ranges_disjoint: bool,
    pub row_families: Vec<RowSummary>,
    #[serde(default)]
    pub cuntz_defect: Option<DefectSummary>,
    /// Adjoints of the members lie in the nest algebra.
    #[serde(default)]
    pub nest_membership: Option<bool>,
    pub family: IsometryFamily,
}

impl ObstructionReport {
    fn failure(&self) -> Option<String> {
        if !self.exact_isometries {
            return Some("isometry identities fail".into());
        }
        if !self.ranges_disjoint {
            return Some("member ranges overlap".into());
        }
        if let Some(row) = self.row_families.iter().find(|r| !r.isometry || r.defect == 0) {
            return Some(format!("row family of length {} has no defect", row.n));
        }
        if self.cuntz_defect.as_ref().is_some_and(|d| !d.vacuum) {
            return Some("Cuntz defect is not the vacuum projection".into());
        }
        if self.nest_membership == Some(false) {
            return Some("adjoints leave the nest algebra".into());
        }
        None
    }
}

fn exact_isometries(f: &IsometryFamily) -> Result<bool, CliError> {
    for i in 0..f.members.len() {
        let wi = f.matrix(i)?;
        for j in 0..f.members.len() {
            let gram = wi.t().dot(&f.matrix(j)?);
            let ok = gram.indexed_iter().all(|((r, c), &x)| {
                let expected = i == j && r == c && f.members[i].apply(r).is_some();
                x == i64::from(expected)
            });
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn obstruction_report(params: &ObstructionParams) -> Result<ObstructionReport, CliError> {
    let spec = params
        .dims
        .clone()
        .map(NestSpec::new)
        .transpose()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let family = match (params.family, &spec) {
        (Family::Fock, _) => {
            let (n, depth) = params
                .n
                .zip(params.depth)
                .ok_or_else(|| CliError::Config("fock family needs n and depth".into()))?;
            fock_left_shifts(n, depth)?
        }
        (Family::PrimeCoisometry, Some(spec)) => prime_coisometry_pair(spec)?,
        (Family::PrimeShift, Some(spec)) => prime_shift_pair(spec)?,
        _ => return Err(CliError::Config("prime families need dims".into())),
    };

    let mut row_families = Vec::new();
    for n in 1.. {
        match orthogonal_row_family(&family, 0, 1, n) {
            Ok(row) => row_families.push(RowSummary {
                n,
                isometry: row.isometry,
                defect: row.defect,
                index_proxy: row.index_proxy,
                next_defined: row.next_defined,
                next_orthogonal: row.next_orthogonal,
            }),
            Err(Error::Truncation(_)) => break,
            Err(e) => return Err(e.into()),
        }
    }

    let cuntz = match params.family {
        Family::Fock => {
            let d = cuntz_defect(&family)?;
            let vacuum = d
                .matrix
                .indexed_iter()
                .all(|((r, c), &x)| x == i64::from(r == 0 && c == 0));
            Some(DefectSummary {
                rank: d.rank,
                positive: d.positive,
                vacuum,
            })
        }
        _ => None,
    };

    let nest_membership = match (params.family, &spec) {
        (Family::PrimeCoisometry, Some(spec)) => {
            let mut inside = true;
            for i in 0..family.members.len() {
                let adj = family.matrix(i)?.t().mapv(|x| C64::new(x as f64, 0.0));
                inside &= is_in_nest_algebra(&adj, spec, 0.0)?;
            }
            Some(inside)
        }
        _ => None,
    };

    Ok(ObstructionReport {
        kind: "obstruction_report".into(),
        params: params.clone(),
        exact_isometries: exact_isometries(&family)?,
        ranges_disjoint: family.ranges_disjoint(),
        row_families,
        cuntz_defect: cuntz,
        nest_membership,
        family,
    })
}

/// Serialized form of an artifact: pretty JSON with a trailing newline.
pub fn render(artifact: &Value) -> String {
    let mut text = serde_json::to_string_pretty(artifact).expect("values serialize");
    text.push('\n');
    text
}

/// Writes `text` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Runs `config`, writes the artifact to `out` (or stdout) and returns the
/// exit code. Failures print `{"kind", "message"}` to stderr.
pub fn execute(config: &ExperimentConfig) -> i32 {
    let result = run(config).and_then(|artifact| {
        let text = render(&artifact);
        match &config.out {
            Some(path) => write_atomic(path, &text),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(format!("stdout: {e}"))),
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
