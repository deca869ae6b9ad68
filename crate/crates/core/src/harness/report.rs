//! Report rows, summary statistics, slope fits and CSV output.
//!
//! `report.csv` and `summary.csv` depend only on the configuration, so two
//! runs of the same config produce identical bytes. Wall-clock times go to
//! `timing.csv` next to them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Header of `report.csv`.
pub const REPORT_HEADER: &str = "problem,mode,elements,h,order,epsilon,enriched,m_train,m_test,seed,\
train_loss,train_rel_l2,test_rel_l2,oracle_rel_l2,layer_error,layer_width,status";

/// Header of `summary.csv`.
pub const SUMMARY_HEADER: &str = "statistic,value";

/// Header of `timing.csv`.
pub const TIMING_HEADER: &str = "row,wall_seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub problem: String,
    pub mode: String,
    pub elements: usize,
    pub h: f64,
    pub order: String,
    pub epsilon: f64,
    pub enriched: bool,
    pub m_train: usize,
    pub m_test: usize,
    pub seed: Option<u64>,
    pub train_loss: Option<f64>,
    pub train_rel_l2: Option<f64>,
    pub test_rel_l2: Option<f64>,
    pub oracle_rel_l2: Option<f64>,
    /// Largest `max |u - u_ref| / ‖u_ref‖_∞` inside the layer over the test set.
    pub layer_error: Option<f64>,
    pub layer_width: Option<f64>,
    /// `ok`, or the failure message.
    pub status: String,
    pub wall_seconds: f64,
}

impl ReportRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Ordinary least squares fit of `log error` against `log elements`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the fit residuals in log space.
    pub residual: f64,
    pub points: usize,
}

pub fn fit_slope(elements: &[f64], errors: &[f64]) -> Result<SlopeFit> {
    if elements.len() != errors.len() {
        return Err(Error::ShapeMismatch {
            expected: elements.len(),
            got: errors.len(),
        });
    }
    if elements.len() < 3 {
        return Err(Error::invalid("a slope fit needs at least three resolutions"));
    }
    if elements.iter().chain(errors).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid("slope fit needs positive finite values"));
    }
    let x: Vec<f64> = elements.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
        points: x.len(),
    })
}

/// Sample mean and standard deviation (`n - 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub slope: Option<SlopeFit>,
    /// Named scalar results (means, deviations, ratios) in insertion order.
    pub summary: Vec<(String, f64)>,
}

impl Report {
    pub fn push_summary(&mut self, name: impl Into<String>, value: f64) {
        self.summary.push((name.into(), value));
    }

    pub fn summary_value(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:e}"))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_report_csv(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{REPORT_HEADER}");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{:e},{},{:e},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.problem),
            r.mode,
            r.elements,
            r.h,
            r.order,
            r.epsilon,
            r.enriched,
            r.m_train,
            r.m_test,
            r.seed.map_or(String::new(), |v| v.to_string()),
            opt(r.train_loss),
            opt(r.train_rel_l2),
            opt(r.test_rel_l2),
            opt(r.oracle_rel_l2),
            opt(r.layer_error),
            opt(r.layer_width),
            csv_field(&r.status),
        );
    }
    s
}

pub fn write_summary_csv(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{SUMMARY_HEADER}");
    if let Some(fit) = &report.slope {
        let _ = writeln!(s, "slope,{:e}", fit.slope);
        let _ = writeln!(s, "slope_intercept,{:e}", fit.intercept);
        let _ = writeln!(s, "slope_residual,{:e}", fit.residual);
        let _ = writeln!(s, "slope_points,{}", fit.points);
    }
    for (k, v) in &report.summary {
        let _ = writeln!(s, "{},{v:e}", csv_field(k));
    }
    s
}

pub fn write_timing_csv(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{TIMING_HEADER}");
    for (i, r) in report.rows.iter().enumerate() {
        let _ = writeln!(s, "{i},{:.3}", r.wall_seconds);
    }
    s
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub report: PathBuf,
    pub summary: PathBuf,
    pub timing: PathBuf,
}

/// Write `report.csv`, `summary.csv` and `timing.csv` into `dir`.
pub fn emit_report(report: &Report, dir: impl AsRef<Path>) -> Result<ReportFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let files = ReportFiles {
        report: dir.join("report.csv"),
        summary: dir.join("summary.csv"),
        timing: dir.join("timing.csv"),
    };
    std::fs::write(&files.report, write_report_csv(report))?;
    std::fs::write(&files.summary, write_summary_csv(report))?;
    std::fs::write(&files.timing, write_timing_csv(report))?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(elements: usize, err: f64) -> ReportRow {
        ReportRow {
            problem: "bc1".into(),
            mode: "oracle".into(),
            elements,
            h: 2.0 / elements as f64,
            order: "P1".into(),
            epsilon: 0.1,
            enriched: false,
            m_train: 0,
            m_test: 4,
            seed: None,
            train_loss: None,
            train_rel_l2: None,
            test_rel_l2: Some(err),
            oracle_rel_l2: Some(err),
            layer_error: None,
            layer_width: None,
            status: "ok".into(),
            wall_seconds: 0.25,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = Report::default();
        assert_eq!(write_report_csv(&r), format!("{REPORT_HEADER}\n"));
        assert_eq!(write_summary_csv(&r), format!("{SUMMARY_HEADER}\n"));
    }

    #[test]
    fn exact_power_law_is_fitted_exactly() {
        let k = [8.0, 16.0, 32.0, 64.0];
        let e: Vec<f64> = k.iter().map(|v: &f64| 3.0 * v.powf(-2.0)).collect();
        let fit = fit_slope(&k, &e).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert!(fit_slope(&k[..2], &e[..2]).is_err());
        assert!(fit_slope(&k, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn four_resolutions_give_a_finite_slope_field() {
        let mut r = Report::default();
        for (k, e) in [(8, 1e-2), (16, 2.6e-3), (32, 6e-4), (64, 1.6e-4)] {
            r.rows.push(row(k, e));
        }
        let ks: Vec<f64> = r.rows.iter().map(|r| r.elements as f64).collect();
        let es: Vec<f64> = r.rows.iter().map(|r| r.test_rel_l2.unwrap()).collect();
        r.slope = Some(fit_slope(&ks, &es).unwrap());
        let text = write_summary_csv(&r);
        let slope: f64 = text
            .lines()
            .find_map(|l| l.strip_prefix("slope,"))
            .unwrap()
            .parse()
            .unwrap();
        assert!(slope.is_finite() && (slope + 2.0).abs() < 0.1);
        let csv = write_report_csv(&r);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().all(|l| l.split(',').count() == REPORT_HEADER.split(',').count()));
    }

    #[test]
    fn failure_messages_are_quoted() {
        let mut r = Report::default();
        let mut bad = row(8, 1.0);
        bad.status = "failed: non-finite value at epoch 3, sample 1".into();
        bad.test_rel_l2 = None;
        r.rows.push(bad);
        let csv = write_report_csv(&r);
        assert!(csv.lines().nth(1).unwrap().ends_with("\"failed: non-finite value at epoch 3, sample 1\""));
        assert_eq!(r.failed_rows(), 1);
    }

    #[test]
    fn mean_and_sample_deviation() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn emit_writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::default();
        r.rows.push(row(8, 1e-2));
        r.push_summary("test_rel_l2_mean", 1e-2);
        let files = emit_report(&r, dir.path().join("nested")).unwrap();
        let summary = std::fs::read_to_string(&files.summary).unwrap();
        assert!(summary.contains("test_rel_l2_mean,1e-2"));
        let timing = std::fs::read_to_string(&files.timing).unwrap();
        assert_eq!(timing, format!("{TIMING_HEADER}\n0,0.250\n"));
    }
}
