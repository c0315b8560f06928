//! Suite orchestration: each suite runs the invariant checks of one area and
//! reports residuals against fixed tolerances; sweeps write `h`-series as CSV.

mod checks;
pub mod config;
pub mod coverage;
pub mod sweep;

use std::fmt::{self, Write as _};

use rand::{RngCore, SeedableRng};
use rayon::prelude::*;

pub use config::{AlgebraPreset, ExperimentConfig, MetricPreset, SymbolPreset};
pub use coverage::{coverage_ledger, CheckSpec, CHECKS};
pub use sweep::{sweep, Experiment, SweepOutput};

use crate::error::{Error, Result};
use crate::sampling::TestRng;
use crate::semiclassics::ConvergenceReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Group,
    Coadjoint,
    Quantization,
    Groupoid,
    Semiclassics,
    Induction,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Group,
        Suite::Coadjoint,
        Suite::Quantization,
        Suite::Groupoid,
        Suite::Semiclassics,
        Suite::Induction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Group => "group",
            Suite::Coadjoint => "coadjoint",
            Suite::Quantization => "quantization",
            Suite::Groupoid => "groupoid",
            Suite::Semiclassics => "semiclassics",
            Suite::Induction => "induction",
        }
    }

    /// Suites selected by a command-line name; `all` selects every suite.
    pub fn select(name: &str) -> Result<Vec<Suite>> {
        if name == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Suite::ALL
            .iter()
            .find(|s| s.name() == name)
            .map(|s| vec![*s])
            .ok_or_else(|| Error::UnknownSuite(name.to_string()))
    }

    fn run(self, cfg: &ExperimentConfig) -> Result<Vec<CheckResult>> {
        match self {
            Suite::Group => checks::group::run(cfg),
            Suite::Coadjoint => checks::coadjoint::run(cfg),
            Suite::Quantization => checks::quantization::run(cfg),
            Suite::Groupoid => checks::groupoid::run(cfg),
            Suite::Semiclassics => checks::semiclassics::run(cfg),
            Suite::Induction => checks::induction::run(cfg),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one invariant.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub id: &'static str,
    pub passed: bool,
    /// The number the pass/fail decision rests on: an error, or a fitted slope.
    pub residual: f64,
    pub requirement: String,
    /// Error of the extrapolated limit, for checks that extrapolate.
    pub limit_error: Option<f64>,
    pub reports: Vec<ConvergenceReport>,
}

impl CheckResult {
    /// Passes when `residual <= tol` (NaN fails).
    pub fn bound(id: &'static str, residual: f64, tol: f64) -> Self {
        Self {
            id,
            passed: residual <= tol,
            residual,
            requirement: format!("<= {tol:.0e}"),
            limit_error: None,
            reports: Vec::new(),
        }
    }

    pub fn new(id: &'static str, passed: bool, residual: f64, requirement: impl Into<String>) -> Self {
        Self {
            id,
            passed,
            residual,
            requirement: requirement.into(),
            limit_error: None,
            reports: Vec::new(),
        }
    }

    pub fn with_reports(mut self, reports: Vec<ConvergenceReport>) -> Self {
        self.reports = reports;
        self
    }

    pub fn with_limit_error(mut self, e: f64) -> Self {
        self.limit_error = Some(e);
        self
    }

    pub fn spec(&self) -> &'static CheckSpec {
        coverage::spec(self.id)
    }
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, id: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.id == id)
    }

    /// Plain-text report; identical inputs give identical bytes.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "suite {} seed {}", self.suite, self.seed);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<40} {:>11.3e}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.id,
                c.residual,
                c.requirement
            );
            for r in &c.reports {
                let _ = writeln!(
                    out,
                    "     fit slope {:.4} over {} points, limit {:.6e}{:+.6e}i, target {:.6e}{:+.6e}i",
                    r.fitted_slope,
                    r.fit_points(),
                    r.extrapolated_limit.re,
                    r.extrapolated_limit.im,
                    r.target.re,
                    r.target.im
                );
            }
        }
        let failed = self.failures().count();
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), failed);
        out
    }
}

/// Run one suite, or every suite for `all` (in parallel, reported in fixed order).
pub fn run_suite(name: &str, cfg: &ExperimentConfig) -> Result<SuiteResult> {
    cfg.validate()?;
    let suites = Suite::select(name)?;
    let parts: Vec<Result<Vec<CheckResult>>> = suites.par_iter().map(|s| s.run(cfg)).collect();
    let mut checks = Vec::new();
    for p in parts {
        checks.extend(p?);
    }
    Ok(SuiteResult {
        suite: name.to_string(),
        seed: cfg.seed,
        checks,
    })
}

/// Independent random stream per check, so a check draws the same samples
/// whether its suite runs alone or inside `all`.
pub(crate) fn check_rng(cfg: &ExperimentConfig, id: &str) -> TestRng {
    // FNV-1a of the id, mixed with the seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut seeder = TestRng::seed_from_u64(cfg.seed ^ h);
    TestRng::seed_from_u64(seeder.next_u64())
}

/// Suites with their checks, then the sweep experiments.
pub fn list() -> String {
    let mut out = String::from("suites:\n");
    for s in Suite::ALL {
        let _ = writeln!(out, "  {}", s.name());
        for c in CHECKS.iter().filter(|c| c.suite == s) {
            let _ = writeln!(out, "    {:<40} {}", c.id, c.anchor);
        }
    }
    let _ = writeln!(out, "  all");
    out.push_str("experiments:\n");
    for e in Experiment::ALL {
        let _ = writeln!(out, "  {:<12} {}", e.name(), e.anchor());
    }
    out
}
