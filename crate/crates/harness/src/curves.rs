//! Learning curves averaged across runs: `steps,mean,sem`.
//!
//! Each run log is a CSV with a header. Rows whose value column is empty are
//! skipped. Runs rarely share step values, so every run is resampled onto the
//! union of all step values that lie inside every run's range, by linear
//! interpolation between its neighbouring points.

use std::io::{Read, Write};
use std::path::Path;

use sad_core::tabular::mean_sem;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub steps: f64,
    pub mean: f64,
    /// Sample standard deviation across runs over `sqrt(runs)`; 0 for one run.
    pub sem: f64,
}

/// Read `(step, value)` pairs from one CSV log, sorted by step.
pub fn read_series<R: Read>(reader: R, axis: &str, value: &str) -> Result<Vec<(f64, f64)>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Config(format!("log has no `{name}` column")))
    };
    let (xi, yi) = (col(axis)?, col(value)?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let (x, y) = (rec.get(xi).unwrap_or(""), rec.get(yi).unwrap_or(""));
        if y.is_empty() {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| HarnessError::Config(format!("not a number: `{s}`")))
        };
        out.push((parse(x)?, parse(y)?));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

fn interpolate(series: &[(f64, f64)], x: f64) -> f64 {
    let i = series.partition_point(|p| p.0 < x);
    if i < series.len() && series[i].0 == x {
        return series[i].1;
    }
    let (a, b) = (series[i - 1], series[i]);
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

/// Average several series on their common grid.
pub fn average_series(runs: &[Vec<(f64, f64)>]) -> Result<Vec<CurvePoint>, HarnessError> {
    if runs.is_empty() {
        return Err(HarnessError::Config("no run logs given".into()));
    }
    if let Some(i) = runs.iter().position(Vec::is_empty) {
        return Err(HarnessError::Config(format!("run {i} has no points")));
    }
    let lo = runs.iter().map(|r| r[0].0).fold(f64::NEG_INFINITY, f64::max);
    let hi = runs.iter().map(|r| r[r.len() - 1].0).fold(f64::INFINITY, f64::min);
    if lo > hi {
        return Err(HarnessError::Config("run logs do not overlap in steps".into()));
    }
    let mut grid: Vec<f64> = runs
        .iter()
        .flatten()
        .map(|p| p.0)
        .filter(|&x| x >= lo && x <= hi)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid
        .into_iter()
        .map(|x| {
            let ys: Vec<f64> = runs.iter().map(|r| interpolate(r, x)).collect();
            let (mean, sem) = mean_sem(&ys);
            CurvePoint { steps: x, mean, sem }
        })
        .collect())
}

/// Mean and s.e.m. curve of `value` against `axis` across the given logs.
pub fn emit_curves<P: AsRef<Path>>(logs: &[P], axis: &str, value: &str) -> Result<Vec<CurvePoint>, HarnessError> {
    let runs = logs
        .iter()
        .map(|p| {
            let f = std::fs::File::open(p.as_ref())?;
            read_series(f, axis, value)
        })
        .collect::<Result<Vec<_>, _>>()?;
    average_series(&runs)
}

pub fn write_curve<W: Write>(points: &[CurvePoint], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["steps", "mean", "sem"])?;
    for p in points {
        w.write_record([p.steps.to_string(), p.mean.to_string(), p.sem.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_run_has_zero_sem() {
        let pts = average_series(&[vec![(0.0, 1.0), (10.0, 3.0)]]).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().all(|p| p.sem == 0.0));
    }

    #[test]
    fn constant_runs_at_five_and_seven() {
        let a = vec![(0.0, 5.0), (4.0, 5.0), (8.0, 5.0)];
        let b = vec![(0.0, 7.0), (8.0, 7.0)];
        let pts = average_series(&[a, b]).unwrap();
        assert_eq!(pts.len(), 3);
        for p in pts {
            assert_eq!(p.mean, 6.0);
            assert!((p.sem - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(average_series(&[]).is_err());
        assert!(emit_curves::<&str>(&[], "update", "eval_score").is_err());
        assert!(average_series(&[vec![(0.0, 1.0)], vec![]]).is_err());
    }

    #[test]
    fn mismatched_grids_are_interpolated_on_the_overlap() {
        let a = vec![(0.0, 0.0), (10.0, 10.0), (20.0, 20.0)];
        let b = vec![(5.0, 1.0), (15.0, 1.0), (30.0, 1.0)];
        let pts = average_series(&[a, b]).unwrap();
        let steps: Vec<f64> = pts.iter().map(|p| p.steps).collect();
        assert_eq!(steps, vec![5.0, 10.0, 15.0, 20.0]);
        assert_eq!(pts[0].mean, (5.0 + 1.0) / 2.0);
        assert_eq!(pts[2].mean, (15.0 + 1.0) / 2.0);
    }

    #[test]
    fn reads_run_logs_skipping_unscored_rows() {
        let text = "update,td_loss,eval_score\n1,0.5,\n2,0.4,1.5\n4,0.3,2.5\n";
        let s = read_series(text.as_bytes(), "update", "eval_score").unwrap();
        assert_eq!(s, vec![(2.0, 1.5), (4.0, 2.5)]);
        assert!(read_series(text.as_bytes(), "update", "missing").is_err());
        let mut out = Vec::new();
        write_curve(&average_series(&[s]).unwrap(), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "steps,mean,sem\n2,1.5,0\n4,2.5,0\n");
    }

    proptest! {
        #[test]
        fn mean_stays_within_run_envelope(
            ys in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 1..6)
        ) {
            let runs: Vec<Vec<(f64, f64)>> = ys
                .iter()
                .map(|r| r.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect())
                .collect();
            for p in average_series(&runs).unwrap() {
                let at: Vec<f64> = ys.iter().map(|r| r[p.steps as usize]).collect();
                let lo = at.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = at.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(p.mean >= lo - 1e-9 && p.mean <= hi + 1e-9);
                prop_assert!(p.sem >= 0.0);
            }
        }
    }
}
