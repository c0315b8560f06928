//! `h`-sweeps of the semiclassical experiments, written as CSV plus a
//! two-column gnuplot file.

use std::fmt::{self, Write as _};

use num_complex::Complex64;
use rand::Rng;

use super::checks::groupoid::haar_test_function;
use super::checks::semiclassics::{algebra_element, covariance_report, family};
use super::{check_rng, ExperimentConfig};
use crate::error::{Error, Result};
use crate::groupoid::{haar_integral, FiberGrid, TangentGroupoidPoint};
use crate::lie_group::GroupElement;
use crate::sampling::random_field;
use crate::semiclassics::{character_pairing, trace_functional, ConvergenceReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Trace,
    Character,
    Covariance,
    Haar,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::Trace,
        Experiment::Character,
        Experiment::Covariance,
        Experiment::Haar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Trace => "trace",
            Experiment::Character => "character",
            Experiment::Covariance => "covariance",
            Experiment::Haar => "haar",
        }
    }

    pub fn anchor(self) -> &'static str {
        match self {
            Experiment::Trace => "h * trace of the canonical kernel against the symbol integral",
            Experiment::Character => "character pairing with exp(Z/h) against its classical limit",
            Experiment::Covariance => "dequantized conjugate by (id, f) against the transported symbol",
            Experiment::Haar => "Haar system of the tangent groupoid as h -> 0",
        }
    }

    pub fn select(name: &str) -> Result<Experiment> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| Error::UnknownSuite(name.to_string()))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub report: ConvergenceReport,
    /// `h,value_re,value_im,target_re,target_im,abs_error` rows, then a `fit` row.
    pub csv: String,
    /// `h abs_error` columns for gnuplot.
    pub dat: String,
}

fn report(exp: Experiment, cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let m = cfg.manifold()?;
    let grid = FiberGrid::default_grid();
    let hs = cfg.h_grid();
    // trace and character share the family draw, so a zero Z reproduces the trace
    let mut r = check_rng(cfg, "sweep.family");
    match exp {
        Experiment::Trace => Ok(trace_functional(&family(cfg, &m, &grid, &mut r, &hs)?)),
        Experiment::Character => {
            let fam = family(cfg, &m, &grid, &mut r, &hs)?;
            let z = algebra_element(cfg, &m, &mut r);
            character_pairing(&fam, &z)
        }
        Experiment::Covariance => {
            let fam = family(cfg, &m, &grid, &mut r, &hs)?;
            let g = GroupElement::from_function(random_field(&m, &mut r, 1.0));
            covariance_report(&g, &fam, &grid)
        }
        Experiment::Haar => {
            let x = r.gen_range(0.0..m.circumference());
            let f = |pt: &TangentGroupoidPoint| haar_test_function(&m, pt);
            let target = haar_integral(&m, &grid, f, 0.0, x);
            let values = hs.iter().map(|&h| haar_integral(&m, &grid, f, h, x)).collect();
            Ok(ConvergenceReport::from_values(hs, values, target))
        }
    }
}

pub fn sweep(exp: Experiment, cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let report = report(exp, cfg)?;
    let (csv, dat) = render(&report)?;
    Ok(SweepOutput { report, csv, dat })
}

fn num(x: f64) -> String {
    format!("{x:.15e}")
}

fn render(r: &ConvergenceReport) -> Result<(String, String)> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["h", "value_re", "value_im", "target_re", "target_im", "abs_error"])?;
    let mut dat = String::from("# h abs_error\n");
    let t: Complex64 = r.target;
    for ((h, v), e) in r.h_values.iter().zip(&r.values).zip(&r.errors) {
        w.write_record([num(*h), num(v.re), num(v.im), num(t.re), num(t.im), num(*e)])?;
        let _ = writeln!(dat, "{} {}", num(*h), num(*e));
    }
    w.write_record([
        "fit".to_string(),
        num(r.fitted_slope),
        num(r.extrapolated_limit.re),
        num(r.extrapolated_limit.im),
        "lower_half".to_string(),
        r.fit_points().to_string(),
    ])?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok((String::from_utf8(bytes).expect("csv output is ascii"), dat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::AlgebraPreset;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: 64,
            k_min: 3,
            k_max: 6,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn csv_layout() {
        let out = sweep(Experiment::Haar, &small()).unwrap();
        let lines: Vec<&str> = out.csv.lines().collect();
        assert_eq!(lines[0], "h,value_re,value_im,target_re,target_im,abs_error");
        assert_eq!(lines.len(), 1 + 4 + 1);
        assert!(lines[5].starts_with("fit,"));
        assert!(lines[5].ends_with(",lower_half,2"));
        assert_eq!(out.dat.lines().count(), 1 + 4);
    }

    #[test]
    fn zero_character_is_the_trace() {
        let cfg = ExperimentConfig {
            algebra: AlgebraPreset::Zero,
            ..small()
        };
        let t = sweep(Experiment::Trace, &cfg).unwrap();
        let c = sweep(Experiment::Character, &cfg).unwrap();
        for (a, b) in t.report.values.iter().zip(&c.report.values) {
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
        assert!((t.report.target - c.report.target).norm() <= 1e-12 * t.report.target.norm().max(1.0));
    }

    #[test]
    fn covariance_error_decreases_below_a_sixteenth() {
        let cfg = ExperimentConfig {
            k_min: 3,
            k_max: 8,
            ..ExperimentConfig::default()
        };
        let r = sweep(Experiment::Covariance, &cfg).unwrap().report;
        let below: Vec<f64> = r
            .h_values
            .iter()
            .zip(&r.errors)
            .filter(|(h, _)| **h <= 0.0625)
            .map(|(_, e)| *e)
            .collect();
        assert!(below.len() >= 4);
        assert!(below.windows(2).all(|w| w[1] < w[0]), "{below:?}");
    }

    #[test]
    fn unknown_experiment_is_rejected() {
        assert!(matches!(Experiment::select("nope"), Err(Error::UnknownSuite(_))));
    }
}
