//! Config-driven experiment runs.
//!
//! A run config is TOML with optional `seed`, `out_dir` and `threads` keys and a list of
//! `[[experiments]]` tables selected by `kind`. Every experiment is validated before any of
//! them starts. Each one writes into its own numbered subdirectory, and the run ends with
//! `manifest.json` at the top of the output directory.

use crate::admissibility::{admissibility_table, AdmissibleTriple, Case, Exponent};
use crate::dispersion::{fit_decay, log_grid, summability, YPolicy};
use crate::hermite_basis::HermiteBasis;
use crate::nls::{self, CauchyProblem, NlsParams, SolverKind};
use crate::report::{config_hash, summary_json, ExperimentRecord, Manifest, Table};
use crate::row;
use crate::spectral_field::cutoff::{sharp_block, DyadicCutoff};
use crate::spectral_field::{io, Domain, EtaMultiplier, FieldGrid, Geometry, SpectralField};
use crate::strichartz::{
    counterexample_d2_1, modewise_strichartz_check, scaling_check, strichartz_scan, CounterexampleConfig, ModewiseConfig,
    ScalingConfig, ScanConfig,
};
use crate::{Error, Result};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable naming the output directory when neither the file nor a flag does.
pub const OUT_DIR_ENV: &str = "GRUSHIN_OUT_DIR";
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_OUT_DIR: &str = "grushin-out";

/// Values given on the command line. The config file wins over these.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    threads: Option<usize>,
    #[serde(default)]
    experiments: Vec<Experiment>,
}

/// The merged configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub experiments: Vec<Experiment>,
    /// Source line of each experiment table, for messages.
    #[serde(skip)]
    pub lines: Vec<usize>,
    #[serde(skip)]
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    BasisCheck(BasisCheck),
    Decompose(Decompose),
    DispersionScan(DispersionScan),
    StrichartzScan(ScanConfig),
    ScalingCheck(ScalingConfig),
    Counterexample(CounterexampleConfig),
    NlsRun(NlsRun),
    AdmissibilityTable(AdmissibilityTableConfig),
    Summability(SummabilityConfig),
    ModewiseCheck(ModewiseConfig),
}

/// Kinds accepted in `kind = "..."`.
pub const KINDS: [&str; 10] = [
    "basis-check",
    "decompose",
    "dispersion-scan",
    "strichartz-scan",
    "scaling-check",
    "counterexample",
    "nls-run",
    "admissibility-table",
    "summability",
    "modewise-check",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisCheck {
    pub d1: usize,
    pub m_max: usize,
    /// Fiber frequencies at which the eigen-relation is checked.
    pub etas: Vec<f64>,
    pub orthonormality_tolerance: f64,
    pub residual_tolerance: f64,
}

impl Default for BasisCheck {
    fn default() -> Self {
        Self { d1: 1, m_max: 64, etas: vec![0.25, 1.0, 4.0], orthonormality_tolerance: 1e-10, residual_tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Decompose {
    pub geometry: Geometry,
    pub m_max: usize,
    /// Random datum support: modes `≤ m_hi`, `|k|_∞ ≤ k_hi`.
    pub m_hi: usize,
    pub k_hi: usize,
    /// Sobolev index reported per block.
    pub s: f64,
    /// Save the datum next to the tables.
    pub checkpoint: bool,
}

impl Default for Decompose {
    fn default() -> Self {
        Self {
            geometry: Geometry { d1: 1, d2: 2, domain: Domain::Torus, k_max: 4 },
            m_max: 8,
            m_hi: 8,
            k_hi: 4,
            s: 1.0,
            checkpoint: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionScan {
    pub sigma: f64,
    pub d: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub n_times: usize,
    /// Times at or below this are excluded from the fit.
    pub transient: f64,
    pub policy: YPolicy,
    pub tolerance: f64,
}

impl Default for DispersionScan {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            d: 1,
            t_min: 10.0,
            t_max: 1000.0,
            n_times: 13,
            transient: 10.0,
            policy: YPolicy::default(),
            tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NlsRun {
    pub geometry: Geometry,
    /// Stored mode ceiling; defaults to `κ` times the datum's top mode.
    pub m_max: Option<usize>,
    pub m_hi: usize,
    pub k_hi: usize,
    /// `‖u0‖_{L^∞}` of the random datum.
    pub amplitude: f64,
    pub params: NlsParams,
    /// Raise `steps` to the smallest power of two resolving the fastest linear phase.
    pub auto_steps: bool,
    /// Also run the other solver and report the final-time distance.
    pub cross_check: bool,
    /// Step multiplier for the cross-check run when it is the splitting solver.
    pub cross_step_factor: usize,
    /// Step-halving levels of the refinement study; 0 skips it.
    pub refinement_levels: usize,
    /// Long-time boundedness run over this multiple of the horizon; 0 skips it.
    pub long_time_factor: usize,
    pub growth_bound: f64,
    /// Save the final state.
    pub checkpoint: bool,
}

impl Default for NlsRun {
    fn default() -> Self {
        Self {
            geometry: Geometry { d1: 1, d2: 2, domain: Domain::Torus, k_max: 4 },
            m_max: None,
            m_hi: 1,
            k_hi: 1,
            amplitude: 0.6,
            params: NlsParams { horizon: 0.25, ..NlsParams::default() },
            auto_steps: true,
            cross_check: false,
            cross_step_factor: 4,
            refinement_levels: 0,
            long_time_factor: 0,
            growth_bound: 4.0,
            checkpoint: true,
        }
    }
}

impl NlsRun {
    fn m_max(&self) -> usize {
        self.m_max.unwrap_or(self.params.kappa as usize * self.m_hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmissibilityTableConfig {
    pub d1: usize,
    pub d2: usize,
    pub sigma: f64,
    pub case: Case,
    /// Interior sweep points.
    pub n: usize,
    /// Extra `r` values kept when admissible.
    pub extra_r: Vec<f64>,
}

impl Default for AdmissibilityTableConfig {
    fn default() -> Self {
        Self { d1: 1, d2: 2, sigma: 1.0, case: Case::Euclidean, n: 8, extra_r: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummabilityConfig {
    pub d1: usize,
    pub d2: usize,
    pub sigma: f64,
    pub p: Exponent,
    pub q: Exponent,
    pub r: Exponent,
    pub case: Case,
    pub epsilon: f64,
    pub a_exp_max: u32,
    pub m_cut: usize,
    /// Largest accepted max/min of the ratio across blocks.
    pub bound: f64,
}

impl Default for SummabilityConfig {
    fn default() -> Self {
        Self {
            d1: 1,
            d2: 2,
            sigma: 1.0,
            p: Exponent::Finite(6.0),
            q: Exponent::Finite(2.0),
            r: Exponent::Finite(6.0),
            case: Case::Euclidean,
            epsilon: 0.1,
            a_exp_max: 8,
            m_cut: 4096,
            bound: 4.0,
        }
    }
}

impl SummabilityConfig {
    fn triple(&self) -> AdmissibleTriple {
        AdmissibleTriple { p: self.p, q: self.q, r: self.r, sigma: self.sigma, d1: self.d1, d2: self.d2, case: self.case }
    }
}

/// Why a run did not finish cleanly.
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    /// Bad config or unusable output directory; nothing was computed.
    Config(String),
    /// A computation failed; the message carries the module's diagnosis.
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

fn line_of(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

/// Line of each `[[experiments]]` header.
fn experiment_lines(text: &str) -> Vec<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.trim_start().starts_with("[[experiments]]"))
        .map(|(i, _)| i + 1)
        .collect()
}

impl RunConfig {
    /// Parse and validate a config file, merging it over `flags` and the defaults.
    pub fn parse(text: &str, source: &str, flags: &Flags) -> std::result::Result<Self, RunError> {
        let file: FileConfig = toml::from_str(text).map_err(|e| {
            let (line, col) = e.span().map_or((1, 1), |s| line_of(text, s.start));
            RunError::Config(format!("{source}:{line}:{col}: {}", e.message().trim()))
        })?;
        let mut lines = experiment_lines(text);
        lines.resize(file.experiments.len(), 1);
        let env_out = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        let cfg = Self {
            seed: file.seed.or(flags.seed).unwrap_or(DEFAULT_SEED),
            out_dir: file.out_dir.or_else(|| flags.out_dir.clone()).or(env_out).unwrap_or_else(|| DEFAULT_OUT_DIR.into()),
            threads: file.threads.or(flags.threads),
            experiments: file.experiments,
            lines,
            source: source.to_string(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Config with no file: flags, environment and defaults only.
    pub fn from_flags(flags: &Flags, experiments: Vec<Experiment>) -> std::result::Result<Self, RunError> {
        let mut cfg = Self::parse("", "<flags>", flags)?;
        cfg.lines = vec![0; experiments.len()];
        cfg.experiments = experiments;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> std::result::Result<(), RunError> {
        if self.threads == Some(0) {
            return Err(RunError::Config(format!("{}: threads must be at least 1", self.source)));
        }
        for (i, e) in self.experiments.iter().enumerate() {
            e.validate().map_err(|err| {
                let line = self.lines.get(i).copied().unwrap_or(0);
                RunError::Config(format!("{}:{line}: experiments[{i}] ({}): {err}", self.source, e.kind()))
            })?;
        }
        Ok(())
    }

    /// SHA-256 of the merged config as JSON. The output directory and thread count are
    /// left out since they do not change any number.
    pub fn hash(&self) -> String {
        let v = json!({ "seed": self.seed, "experiments": self.experiments });
        config_hash(&v.to_string())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_geometry(g: &Geometry) -> Result<()> {
    match g.domain {
        Domain::Torus => Geometry::torus(g.d1, g.d2, g.k_max).map(drop),
        Domain::EuclideanBox { side } => Geometry::euclidean_box(g.d1, g.d2, side, g.k_max).map(drop),
    }
}

fn check_admissible(t: &AdmissibleTriple) -> Result<()> {
    let d = t.is_admissible();
    if d.admissible {
        Ok(())
    } else {
        Err(Error::Inadmissible(d.reason))
    }
}

/// Files written by one experiment plus its JSON summary.
struct Outcome {
    artifacts: Vec<PathBuf>,
    summary: serde_json::Value,
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::BasisCheck(_) => KINDS[0],
            Experiment::Decompose(_) => KINDS[1],
            Experiment::DispersionScan(_) => KINDS[2],
            Experiment::StrichartzScan(_) => KINDS[3],
            Experiment::ScalingCheck(_) => KINDS[4],
            Experiment::Counterexample(_) => KINDS[5],
            Experiment::NlsRun(_) => KINDS[6],
            Experiment::AdmissibilityTable(_) => KINDS[7],
            Experiment::Summability(_) => KINDS[8],
            Experiment::ModewiseCheck(_) => KINDS[9],
        }
    }

    /// Default-parameter experiment of the named kind.
    pub fn default_of(kind: &str) -> Option<Self> {
        Some(match kind {
            "basis-check" => Experiment::BasisCheck(Default::default()),
            "decompose" => Experiment::Decompose(Default::default()),
            "dispersion-scan" => Experiment::DispersionScan(Default::default()),
            "strichartz-scan" => Experiment::StrichartzScan(Default::default()),
            "scaling-check" => Experiment::ScalingCheck(Default::default()),
            "counterexample" => Experiment::Counterexample(Default::default()),
            "nls-run" => Experiment::NlsRun(Default::default()),
            "admissibility-table" => Experiment::AdmissibilityTable(Default::default()),
            "summability" => Experiment::Summability(Default::default()),
            "modewise-check" => Experiment::ModewiseCheck(Default::default()),
            _ => return None,
        })
    }

    /// Parameter checks that need no computation.
    pub fn validate(&self) -> Result<()> {
        match self {
            Experiment::BasisCheck(c) => {
                if c.d1 == 0 || c.d1 > 3 {
                    return Err(Error::InvalidArgument(format!("d1 must be 1, 2 or 3, got {}", c.d1)));
                }
                for &e in &c.etas {
                    positive("eta", e)?;
                }
                Ok(())
            }
            Experiment::Decompose(c) => {
                check_geometry(&c.geometry)?;
                if c.m_hi > c.m_max || c.k_hi > c.geometry.k_max {
                    return Err(Error::InvalidArgument("datum support exceeds m_max or k_max".into()));
                }
                Ok(())
            }
            Experiment::DispersionScan(c) => {
                if !(1.0..=2.0).contains(&c.sigma) || !(1..=3).contains(&c.d) {
                    return Err(Error::InvalidArgument(format!("need σ ∈ [1, 2] and d ∈ {{1, 2, 3}}, got σ = {}, d = {}", c.sigma, c.d)));
                }
                positive("t_min", c.t_min)?;
                if !(c.t_max >= 100.0 * c.t_min) {
                    return Err(Error::InvalidArgument("t range must span two decades".into()));
                }
                if c.n_times < 3 {
                    return Err(Error::InvalidArgument("need at least 3 times".into()));
                }
                Ok(())
            }
            Experiment::StrichartzScan(c) => c.validate(),
            Experiment::ScalingCheck(c) => {
                check_admissible(&AdmissibleTriple {
                    p: c.p,
                    q: c.q,
                    r: c.r,
                    sigma: c.sigma,
                    d1: c.d1,
                    d2: c.d2,
                    case: Case::Euclidean,
                })?;
                if c.p.is_infinite() {
                    return Err(Error::InvalidArgument("the broken-scaling control needs finite p".into()));
                }
                for &l in &c.lambdas {
                    if !(l > 0.0 && l.log2().fract() == 0.0) {
                        return Err(Error::InvalidArgument(format!("λ = {l} is not a power of two")));
                    }
                }
                positive("horizon", c.horizon)
            }
            Experiment::Counterexample(c) => {
                if !(c.n >= 2.0) {
                    return Err(Error::InvalidArgument(format!("N must be at least 2, got {}", c.n)));
                }
                positive("horizon", c.horizon)?;
                positive("side", c.side)?;
                positive("eta_max", c.eta_max)?;
                if c.times < 2 || c.n_x < 8 {
                    return Err(Error::InvalidArgument("need times ≥ 2 and n_x ≥ 8".into()));
                }
                Ok(())
            }
            Experiment::NlsRun(c) => {
                check_geometry(&c.geometry)?;
                c.params.validate()?;
                positive("amplitude", c.amplitude)?;
                if c.k_hi > c.geometry.k_max {
                    return Err(Error::InvalidArgument(format!("k_hi = {} exceeds k_max = {}", c.k_hi, c.geometry.k_max)));
                }
                if c.m_max() < c.params.kappa as usize * c.m_hi {
                    return Err(Error::InvalidArgument(format!(
                        "mode headroom: m_hi = {} needs m_max ≥ {}",
                        c.m_hi,
                        c.params.kappa as usize * c.m_hi
                    )));
                }
                if c.refinement_levels == 1 {
                    return Err(Error::InvalidArgument("a refinement study needs at least 2 levels".into()));
                }
                if c.cross_step_factor == 0 {
                    return Err(Error::InvalidArgument("cross_step_factor must be at least 1".into()));
                }
                Ok(())
            }
            Experiment::AdmissibilityTable(c) => {
                if c.d1 == 0 || c.d2 == 0 {
                    return Err(Error::InvalidArgument("dimensions must be at least 1".into()));
                }
                if !(1.0..=2.0).contains(&c.sigma) {
                    return Err(Error::InvalidArgument(format!("σ = {} outside [1, 2]", c.sigma)));
                }
                Ok(())
            }
            Experiment::Summability(c) => check_admissible(&c.triple()),
            Experiment::ModewiseCheck(c) => {
                check_admissible(&c.triple())?;
                if c.samples == 0 || c.packets == 0 || c.modes.is_empty() {
                    return Err(Error::InvalidArgument("need samples, packets and modes".into()));
                }
                if !c.a.is_power_of_two() {
                    return Err(Error::InvalidArgument(format!("A = {} is not a power of two", c.a)));
                }
                Ok(())
            }
        }
    }

    fn execute(&self, seed: u64, dir: &Path) -> Result<Outcome> {
        match self {
            Experiment::BasisCheck(c) => basis_check(c, dir),
            Experiment::Decompose(c) => decompose(c, seed, dir),
            Experiment::DispersionScan(c) => dispersion_scan(c, dir),
            Experiment::StrichartzScan(c) => {
                let rep = strichartz_scan(c, seed)?;
                let mut rows = Table::new(&["a", "m", "sample", "quotient", "constant", "ratio", "control"]);
                for r in &rep.rows {
                    rows.push(row![r.a, r.m, r.sample, r.quotient, r.constant, r.ratio, r.control]);
                }
                let mut header = vec!["a", "sup_quotient", "sup_control", "sup_ratio"];
                let sens: Vec<String> = c.sensitivity.iter().map(|e| format!("sup_quotient_eps_{e}")).collect();
                header.extend(sens.iter().map(String::as_str));
                let mut blocks = Table::new(&header);
                for b in &rep.blocks {
                    let mut r = row![b.a, b.sup_quotient, b.sup_control, b.sup_ratio];
                    r.extend(b.sup_sensitivity.iter().map(|&v| v.into()));
                    blocks.push(r);
                }
                let artifacts = vec![write(dir, "rows.csv", &rows)?, write(dir, "blocks.csv", &blocks)?];
                let summary = json!({
                    "gamma": rep.gamma,
                    "max_min": rep.max_min,
                    "control_slope": rep.control_slope,
                    "sensitivity": rep.sensitivity,
                    "bounded": rep.bounded,
                    "control_grows": rep.control_grows,
                    "passed": rep.bounded && rep.control_grows,
                });
                Ok(Outcome { artifacts, summary })
            }
            Experiment::ScalingCheck(c) => {
                let rep = scaling_check(c)?;
                let mut t = Table::new(&[
                    "lambda",
                    "quotient",
                    "quotient_scaled",
                    "rel_diff",
                    "broken",
                    "broken_scaled",
                    "observed_factor",
                    "predicted_factor",
                    "factor_rel_err",
                ]);
                for r in &rep.rows {
                    t.push(row![
                        r.lambda,
                        r.quotient,
                        r.quotient_scaled,
                        r.rel_diff,
                        r.broken,
                        r.broken_scaled,
                        r.observed_factor,
                        r.predicted_factor,
                        r.factor_rel_err
                    ]);
                }
                let summary = json!({
                    "invariant": rep.invariant,
                    "control_matches": rep.control_matches,
                    "passed": rep.invariant && rep.control_matches,
                });
                Ok(Outcome { artifacts: vec![write(dir, "rows.csv", &t)?], summary })
            }
            Experiment::Counterexample(c) => {
                let rep = counterexample_d2_1(c)?;
                let mut t = Table::new(&["t", "translation_defect", "l4_ratio", "linf_ratio"]);
                for r in &rep.rows {
                    t.push(row![r.t, r.translation_defect, r.l4_ratio, r.linf_ratio]);
                }
                let summary = json!({
                    "verdict": rep.verdict,
                    "max_defect": rep.max_defect,
                    "l4_drift": rep.l4_drift,
                    "linf_drift": rep.linf_drift,
                    "continuum_defect": rep.continuum_defect,
                    "passed": rep.passed,
                });
                Ok(Outcome { artifacts: vec![write(dir, "rows.csv", &t)?], summary })
            }
            Experiment::NlsRun(c) => nls_run(c, seed, dir),
            Experiment::AdmissibilityTable(c) => {
                let rows = admissibility_table(c.d1, c.d2, c.sigma, c.case, c.n, &c.extra_r);
                let mut t = Table::new(&["r", "q", "p", "gamma", "gamma_sob", "gap"]);
                for r in &rows {
                    t.push(row![r.r, r.q, r.p, r.gamma, r.gamma_sob, r.gap]);
                }
                let summary = json!({ "rows": rows.len() });
                Ok(Outcome { artifacts: vec![write(dir, "table.csv", &t)?], summary })
            }
            Experiment::Summability(c) => {
                let rows = summability(&c.triple(), c.epsilon, c.a_exp_max, c.m_cut)?;
                let mut t = Table::new(&["a", "sum", "ratio", "modes"]);
                for r in &rows {
                    t.push(row![r.a, r.sum, r.ratio, r.modes]);
                }
                let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(l, h), r| (l.min(r.ratio), h.max(r.ratio)));
                let max_min = hi / lo;
                let summary = json!({ "max_min": max_min, "passed": max_min <= c.bound });
                Ok(Outcome { artifacts: vec![write(dir, "rows.csv", &t)?], summary })
            }
            Experiment::ModewiseCheck(c) => {
                let rep = modewise_strichartz_check(c, seed)?;
                let mut rows = Table::new(&["a", "m", "scale", "sample", "quotient", "constant", "ratio"]);
                for r in &rep.rows {
                    rows.push(row![r.a, r.m, r.scale, r.sample, r.quotient, r.constant, r.ratio]);
                }
                let mut modes = Table::new(&["m", "horizon", "sup_ratio", "growth_slope", "growing"]);
                for m in &rep.modes {
                    modes.push(row![m.m, m.horizon, m.sup_ratio, m.growth_slope, m.growing]);
                }
                let artifacts = vec![write(dir, "rows.csv", &rows)?, write(dir, "modes.csv", &modes)?];
                let summary = json!({ "max_min": rep.max_min, "bounded": rep.bounded, "passed": rep.bounded });
                Ok(Outcome { artifacts, summary })
            }
        }
    }
}

fn write(dir: &Path, name: &str, t: &Table) -> Result<PathBuf> {
    let p = dir.join(name);
    t.write(&p)?;
    Ok(p)
}

fn basis_check(c: &BasisCheck, dir: &Path) -> Result<Outcome> {
    let basis = HermiteBasis::new(c.d1, c.m_max)?;
    let mut t = Table::new(&["m", "multiplicity", "eigenvalue", "orthonormality_defect", "eigen_residual"]);
    let mut worst_residual = 0.0f64;
    for m in 0..=c.m_max {
        let mut res = 0.0f64;
        for k in 0..basis.multiplicity(m) {
            for &eta in &c.etas {
                res = res.max(basis.eigen_residual(m, k, eta)?);
            }
        }
        worst_residual = worst_residual.max(res);
        t.push(row![m, basis.multiplicity(m), basis.lambda(m), basis.orthonormality_defect(m), res]);
    }
    let ortho = basis.orthonormality_defect(c.m_max);
    let summary = json!({
        "orthonormality_defect": ortho,
        "eigen_residual": worst_residual,
        "passed": ortho <= c.orthonormality_tolerance && worst_residual <= c.residual_tolerance,
    });
    Ok(Outcome { artifacts: vec![write(dir, "basis.csv", &t)?], summary })
}

fn decompose(c: &Decompose, seed: u64, dir: &Path) -> Result<Outcome> {
    let geom = c.geometry.clone();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut u = SpectralField::random(geom.clone(), c.m_max, c.m_hi, c.k_hi, &mut rng);
    u.seed = Some(seed);
    u.label = "random band-limited datum".into();
    let total = u.l2_norm_sqr();
    if total == 0.0 {
        return Err(Error::ZeroDenominator("random datum vanished".into()));
    }

    let mut modes = Table::new(&["m", "l2_sqr", "fraction"]);
    let mut mode_sum = 0.0;
    for m in 0..=c.m_max {
        let v = u.project_mode(m).l2_norm_sqr();
        mode_sum += v;
        modes.push(row![m, v, v / total]);
    }

    let lam_max = (0..geom.n_fibers()).map(|j| (2 * c.m_max + geom.d1) as f64 * geom.eta_norm(j)).fold(0.0, f64::max);
    let top = sharp_block(lam_max);
    let cut = DyadicCutoff::default();
    let mut blocks = Table::new(&["a", "sharp_l2_sqr", "smooth_l2_sqr", "sharp_hs_sqr"]);
    let (mut sharp_sum, mut smooth_sum) = (0.0, 0.0);
    let mut a = 1u64;
    // smooth blocks spill one dyadic step past the sharp ones
    while a <= 2 * top {
        let sharp = u.project_block_sharp(a);
        let smooth = u.project_block(a, &cut).l2_norm_sqr();
        let v = sharp.l2_norm_sqr();
        sharp_sum += v;
        smooth_sum += smooth;
        blocks.push(row![a, v, smooth, sharp.sobolev_norm(c.s).powi(2)]);
        a <<= 1;
    }

    let grid = FieldGrid::auto(geom.clone(), c.m_max, nls::dealiased_points(geom.k_max, 1))?;
    let values = grid.synthesize(&u)?;
    let back = grid.analyze(&values)?;
    let round_trip = back.sub(&u).l2_norm() / u.l2_norm();
    let parseval = (grid.grid_l2_norm(&values).powi(2) - total).abs() / total;

    let mut artifacts = vec![write(dir, "modes.csv", &modes)?, write(dir, "blocks.csv", &blocks)?];
    if c.checkpoint {
        let p = dir.join("datum.field");
        io::save(&u, &p)?;
        artifacts.push(p);
    }
    let summary = json!({
        "l2_sqr": total,
        "mode_partition_defect": (mode_sum - total).abs() / total,
        "block_partition_defect": (sharp_sum - total).abs() / total,
        "smooth_block_ratio": smooth_sum / total,
        "round_trip_defect": round_trip,
        "parseval_defect": parseval,
        "sobolev_norm": u.sobolev_norm(c.s),
    });
    Ok(Outcome { artifacts, summary })
}

fn dispersion_scan(c: &DispersionScan, dir: &Path) -> Result<Outcome> {
    let times = log_grid(c.t_min, c.t_max, c.n_times);
    let fit = fit_decay(c.sigma, c.d, &times, &c.policy, c.transient)?;
    let mut t = Table::new(&["t", "sup", "y_star", "far", "error", "nodes", "widened", "fitted"]);
    for p in &fit.points {
        t.push(row![p.t, p.sup, p.y_star, p.far, p.error, p.nodes, p.widened, p.t > fit.transient]);
    }
    let summary = json!({
        "slope": fit.slope,
        "intercept": fit.intercept,
        "predicted": fit.predicted,
        "passed": (fit.slope - fit.predicted).abs() <= c.tolerance,
    });
    Ok(Outcome { artifacts: vec![write(dir, "decay.csv", &t)?], summary })
}

fn ledger_table(led: &nls::ConservationLedger) -> Table {
    let mut t = Table::new(&["t", "mass", "energy", "hs_norm", "h_sigma_sqr", "linf"]);
    for r in &led.rows {
        t.push(row![r.t, r.mass, r.energy, r.hs_norm, r.h_sigma_sqr, r.linf]);
    }
    t
}

fn nls_run(c: &NlsRun, seed: u64, dir: &Path) -> Result<Outcome> {
    let m_max = c.m_max();
    let kappa = c.params.kappa;
    let grid = nls::nls_grid(&c.geometry, m_max, kappa)?;
    let u0 = nls::small_datum(&c.geometry, m_max, c.m_hi, c.k_hi, c.amplitude, seed, &grid)?;
    let mut params = c.params.clone();
    if c.auto_steps {
        let w = CauchyProblem::new(u0.clone(), params.clone())?.omega_max();
        let need = (4.0 * params.horizon * w / std::f64::consts::PI).ceil() as usize;
        params.steps = params.steps.max(need.next_power_of_two());
    }
    let problem = CauchyProblem::new(u0.clone(), params.clone())?;
    let traj = nls::solve(&problem, &grid)?;
    let led = nls::conservation_report(&traj, &params, &grid)?;

    let mut artifacts = vec![write(dir, "ledger.csv", &ledger_table(&led))?];
    let mut proxies = Table::new(&["p", "q", "r", "norm"]);
    for &(p, q, r, v) in &led.proxy_norms {
        proxies.push(row![p, q, r, v]);
    }
    artifacts.push(write(dir, "proxies.csv", &proxies)?);

    let mut summary = json!({
        "regime": summary_json(&problem.regime())?,
        "steps": params.steps,
        "n_x": grid.n_x,
        "n_y": grid.n_y,
        "mass_drift": led.mass_drift,
        "energy_drift": led.energy_drift,
        "h_sigma_constant": led.h_sigma_constant,
        "embedding_constant": led.embedding_constant,
    });

    if let Some(pr) = &traj.picard {
        let mut t = Table::new(&["iteration", "correction", "factor"]);
        for (i, &corr) in pr.corrections.iter().enumerate() {
            let f = if i == 0 { f64::NAN } else { pr.factors[i - 1] };
            t.push(row![i + 1, corr, f]);
        }
        artifacts.push(write(dir, "picard.csv", &t)?);
        summary["picard"] = summary_json(pr)?;
        // first-iterate correction at T and T/2 on the same step size
        let c1 = nls::first_correction(&problem, &grid, pr.horizon, params.steps)?;
        let c2 = nls::first_correction(&problem, &grid, pr.horizon / 2.0, params.steps / 2)?;
        summary["theta"] = json!((c1 / c2).log2());
    }

    if c.cross_check {
        let other = match params.solver {
            SolverKind::Picard => {
                NlsParams { solver: SolverKind::Splitting, steps: params.steps * c.cross_step_factor, ..params.clone() }
            }
            SolverKind::Splitting => NlsParams { solver: SolverKind::Picard, ..params.clone() },
        };
        let tr = nls::solve(&CauchyProblem::new(u0.clone(), other)?, &grid)?;
        summary["cross_distance"] = json!(nls::final_distance(&traj, &tr));
    }

    if c.refinement_levels >= 2 {
        let splitting = NlsParams { solver: SolverKind::Splitting, ..params.clone() };
        let st = nls::refinement_study(&CauchyProblem::new(u0.clone(), splitting)?, &grid, c.refinement_levels)?;
        let mut t = Table::new(&["steps", "mass_drift", "energy_drift", "error"]);
        for l in &st.levels {
            t.push(row![l.steps, l.mass_drift, l.energy_drift, l.error]);
        }
        artifacts.push(write(dir, "refinement.csv", &t)?);
        summary["refinement"] = json!({
            "error_order": st.error_order,
            "energy_order": st.energy_order,
            "mass_order": st.mass_order,
        });
    }

    if c.long_time_factor > 0 {
        let rep = nls::long_time_check(&problem, &grid, c.long_time_factor, c.growth_bound)?;
        summary["long_time"] = summary_json(&rep)?;
    }

    if c.checkpoint {
        let p = dir.join("final.field");
        io::save(traj.last(), &p)?;
        artifacts.push(p);
    }
    Ok(Outcome { artifacts, summary })
}

/// Result of a run that got past validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    /// `experiments[i] (kind): diagnosis` for each failed experiment.
    pub failures: Vec<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            RunError::Numerical(String::new()).exit_code()
        }
    }
}

/// Run every experiment in order. A failing experiment is recorded and the rest still run.
pub fn run(cfg: &RunConfig) -> std::result::Result<RunOutcome, RunError> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out)
        .map_err(|e| RunError::Config(format!("cannot create output directory {}: {e}", out.display())))?;
    let hash = cfg.hash();
    let start = Instant::now();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (i, e) in cfg.experiments.iter().enumerate() {
        let dir = out.join(format!("{i:02}-{}", e.kind()));
        std::fs::create_dir_all(&dir)
            .map_err(|err| RunError::Config(format!("cannot create {}: {err}", dir.display())))?;
        let t0 = Instant::now();
        let res = e.execute(cfg.seed, &dir);
        let wall = t0.elapsed().as_secs_f64();
        let (ok, artifacts, summary) = match res {
            Ok(o) => (true, o.artifacts, o.summary),
            Err(err) => {
                failures.push(format!("experiments[{i}] ({}): {err}", e.kind()));
                (false, Vec::new(), json!({ "error": err.to_string() }))
            }
        };
        let per = json!({ "kind": e.kind(), "config_hash": hash, "seed": cfg.seed, "summary": summary });
        let sp = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&per).map_err(|e| RunError::Numerical(e.to_string()))? + "\n";
        std::fs::write(&sp, text).map_err(|e| RunError::Numerical(format!("writing {}: {e}", sp.display())))?;
        let mut artifacts = artifacts;
        artifacts.push(sp);
        let artifacts = artifacts.into_iter().map(|p| p.strip_prefix(out).map(Path::to_path_buf).unwrap_or(p)).collect();
        records.push(ExperimentRecord { index: i, kind: e.kind().into(), ok, wall_seconds: wall, artifacts, summary });
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        backend: crate::par::backend().into(),
        config_hash: hash,
        seed: cfg.seed,
        config: serde_json::to_value(cfg).map_err(|e| RunError::Numerical(e.to_string()))?,
        wall_seconds: start.elapsed().as_secs_f64(),
        experiments: records,
    };
    let manifest_path = out.join("manifest.json");
    manifest.write(&manifest_path).map_err(|e| RunError::Numerical(e.to_string()))?;
    Ok(RunOutcome { manifest, manifest_path, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> std::result::Result<RunConfig, RunError> {
        RunConfig::parse(text, "test.toml", &Flags::default())
    }

    #[test]
    fn kinds_round_trip() {
        for k in KINDS {
            let e = Experiment::default_of(k).unwrap();
            assert_eq!(e.kind(), k);
            let text = format!("[[experiments]]\nkind = \"{k}\"\n");
            let cfg = parse(&text).unwrap();
            assert_eq!(cfg.experiments, vec![e]);
        }
        assert!(Experiment::default_of("nope").is_none());
    }

    #[test]
    fn file_beats_flags_beats_defaults() {
        let flags = Flags { seed: Some(5), out_dir: Some("flag".into()), threads: Some(2) };
        let cfg = RunConfig::parse("seed = 9\n", "t", &flags).unwrap();
        assert_eq!((cfg.seed, cfg.out_dir.as_path(), cfg.threads), (9, Path::new("flag"), Some(2)));
        let cfg = RunConfig::parse("", "t", &Flags::default()).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse("seed = 1\n\n[[experiments]]\nkind = \"counterexample\"\nn = \"eight\"\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let RunError::Config(msg) = err else { panic!() };
        // type errors inside an experiment point at its table
        assert!(msg.starts_with("test.toml:3:"), "{msg}");
        let RunError::Config(msg) = parse("seed = 1\nout_dir = \"x\n").unwrap_err() else { panic!() };
        assert!(msg.starts_with("test.toml:2:"), "{msg}");
    }

    #[test]
    fn unknown_key_and_kind_rejected() {
        assert!(parse("[[experiments]]\nkind = \"counterexample\"\nbogus = 1\n").is_err());
        assert!(parse("[[experiments]]\nkind = \"warp-drive\"\n").is_err());
        assert!(parse("sed = 1\n").is_err());
    }

    #[test]
    fn semantic_error_names_experiment_line() {
        let text = "[[experiments]]\nkind = \"admissibility-table\"\n\n[[experiments]]\nkind = \"strichartz-scan\"\nr = 3.0\n";
        let RunError::Config(msg) = parse(text).unwrap_err() else { panic!() };
        assert!(msg.starts_with("test.toml:4: experiments[1] (strichartz-scan): inadmissible"), "{msg}");
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = RunConfig::parse("out_dir = \"a\"\n", "t", &Flags::default()).unwrap();
        let b = RunConfig::parse("out_dir = \"b\"\nthreads = 3\n", "t", &Flags::default()).unwrap();
        let c = RunConfig::parse("seed = 1\n", "t", &Flags::default()).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn empty_run_writes_manifest_only() {
        let dir = tempfile::tempdir().unwrap();
        let flags = Flags { out_dir: Some(dir.path().join("o")), ..Default::default() };
        let out = run(&RunConfig::from_flags(&flags, vec![]).unwrap()).unwrap();
        assert_eq!(out.exit_code(), 0);
        let names: Vec<_> = std::fs::read_dir(dir.path().join("o")).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("manifest.json")]);
    }

    #[test]
    fn numerical_failure_is_reported_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        // fiber scales spanning nine decades cannot share one x grid
        let exp = Experiment::Decompose(Decompose {
            geometry: Geometry { d1: 1, d2: 1, domain: Domain::EuclideanBox { side: 1e-6 }, k_max: 400 },
            m_max: 40,
            m_hi: 40,
            k_hi: 400,
            s: 1.0,
            checkpoint: false,
        });
        let flags = Flags { out_dir: Some(dir.path().to_path_buf()), ..Default::default() };
        let out = run(&RunConfig::from_flags(&flags, vec![exp]).unwrap()).unwrap();
        assert_eq!(out.exit_code(), 3);
        assert!(out.failures[0].starts_with("experiments[0] (decompose): quadrature underresolved"), "{:?}", out.failures);
        assert!(!out.manifest.experiments[0].ok);
    }
}
