//! Summaries, per-step tables and plots of an estimate stream.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use nalgebra::{Cholesky, SMatrix, SVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::records::{EstimateRecord, TruthRecord};
use crate::stats::chi2_quantile;

type V12 = SVector<f64, 12>;
type M12 = SMatrix<f64, 12, 12>;

pub const AXES: [&str; 6] = ["fx", "fy", "fz", "tx", "ty", "tz"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportOptions {
    /// Converged once every bias standard deviation stays within this factor
    /// of its final value.
    pub convergence_ratio: f64,
    /// Two-sided probability mass of the NEES acceptance band.
    pub nees_confidence: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            convergence_ratio: 2.0,
            nees_confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalEstimate {
    pub t: f64,
    pub b: [f64; 6],
    pub bd: [f64; 6],
    pub b_std: [f64; 6],
    pub bd_std: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeesSummary {
    pub dof: usize,
    pub mean: f64,
    /// Per-sample band `[χ²⁻¹(α/2), χ²⁻¹(1−α/2)]`.
    pub band: [f64; 2],
    pub fraction_in_band: f64,
    /// Whether the full covariance was available (otherwise diagonal only).
    pub full_covariance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthComparison {
    pub final_bias_error: [f64; 6],
    pub final_drift_error: [f64; 6],
    pub rms_bias_error: [f64; 6],
    pub nees: NeesSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub estimates: usize,
    pub gated: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_estimate: Option<FinalEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthComparison>,
}

/// One estimate joined with the truth valid at its timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub estimate: EstimateRecord,
    pub bias_error: Option<[f64; 6]>,
    pub drift_error: Option<[f64; 6]>,
    pub nees: Option<f64>,
}

fn covariance(e: &EstimateRecord) -> M12 {
    match &e.cov {
        Some(c) if c.len() == 144 => M12::from_row_slice(c),
        _ => M12::from_diagonal(&V12::from(e.p_diag)),
    }
}

/// `eᵀ P⁻¹ e`; `None` when `P` is not positive definite.
pub fn nees(error: &V12, cov: &M12) -> Option<f64> {
    let chol = Cholesky::new(*cov)?;
    Some(error.dot(&chol.solve(error)))
}

/// Joins estimates with the latest truth record at or before each one.
pub fn rows(estimates: &[EstimateRecord], truth: Option<&[TruthRecord]>) -> Vec<Row> {
    let mut next = 0;
    estimates
        .iter()
        .map(|e| {
            let tr = truth.and_then(|tr| {
                while next < tr.len() && tr[next].t <= e.t {
                    next += 1;
                }
                next.checked_sub(1).map(|i| &tr[i]).or(tr.first())
            });
            let Some(tr) = tr else {
                return Row {
                    estimate: e.clone(),
                    bias_error: None,
                    drift_error: None,
                    nees: None,
                };
            };
            let b_true = tr.bias_at(e.t);
            let be: [f64; 6] = std::array::from_fn(|i| e.b[i] - b_true[i]);
            let de: [f64; 6] = std::array::from_fn(|i| e.bd[i] - tr.bd[i]);
            let err = V12::from_fn(|i, _| if i < 6 { be[i] } else { de[i - 6] });
            Row {
                estimate: e.clone(),
                bias_error: Some(be),
                drift_error: Some(de),
                nees: nees(&err, &covariance(e)),
            }
        })
        .collect()
}

fn convergence_time(estimates: &[EstimateRecord], ratio: f64) -> Option<f64> {
    let last = estimates.last()?;
    let limit: [f64; 6] = std::array::from_fn(|i| ratio * last.p_diag[i].sqrt());
    let within = |e: &EstimateRecord| (0..6).all(|i| e.p_diag[i].sqrt() <= limit[i]);
    let first_bad_from_end = estimates.iter().rposition(|e| !within(e));
    match first_bad_from_end {
        None => Some(estimates[0].t),
        Some(i) => estimates.get(i + 1).map(|e| e.t),
    }
}

pub fn summarize(estimates: &[EstimateRecord], truth: Option<&[TruthRecord]>, opts: &ReportOptions) -> Summary {
    let final_estimate = estimates.last().map(|e| FinalEstimate {
        t: e.t,
        b: e.b,
        bd: e.bd,
        b_std: std::array::from_fn(|i| e.p_diag[i].sqrt()),
        bd_std: std::array::from_fn(|i| e.p_diag[i + 6].sqrt()),
    });
    let truth = truth.filter(|t| !t.is_empty() && !estimates.is_empty()).map(|tr| {
        let rows = rows(estimates, Some(tr));
        let last = rows.last().expect("non-empty");
        let n = rows.len() as f64;
        let rms_bias_error = std::array::from_fn(|i| {
            (rows.iter().map(|r| r.bias_error.unwrap()[i].powi(2)).sum::<f64>() / n).sqrt()
        });
        let alpha = 1.0 - opts.nees_confidence;
        let band = [chi2_quantile(alpha / 2.0, 12.0), chi2_quantile(1.0 - alpha / 2.0, 12.0)];
        let values: Vec<f64> = rows.iter().filter_map(|r| r.nees).collect();
        let m = values.len().max(1) as f64;
        TruthComparison {
            final_bias_error: last.bias_error.unwrap(),
            final_drift_error: last.drift_error.unwrap(),
            rms_bias_error,
            nees: NeesSummary {
                dof: 12,
                mean: values.iter().sum::<f64>() / m,
                band,
                fraction_in_band: values.iter().filter(|v| **v >= band[0] && **v <= band[1]).count() as f64 / m,
                full_covariance: estimates.iter().all(|e| e.cov.as_ref().is_some_and(|c| c.len() == 144)),
            },
        }
    });
    Summary {
        estimates: estimates.len(),
        gated: estimates.iter().filter(|e| e.gated).count(),
        convergence_time: convergence_time(estimates, opts.convergence_ratio),
        final_estimate,
        truth,
    }
}

/// Per-step CSV table. Error and NEES columns are present only when truth
/// was joined.
pub fn write_table<W: Write>(writer: W, rows: &[Row]) -> Result<()> {
    let with_truth = rows.first().is_some_and(|r| r.nees.is_some() || r.bias_error.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string(), "gated".to_string()];
    for prefix in ["b", "bd", "b_std", "bd_std"] {
        header.extend(AXES.iter().map(|a| format!("{prefix}_{a}")));
    }
    if with_truth {
        for prefix in ["b_err", "bd_err"] {
            header.extend(AXES.iter().map(|a| format!("{prefix}_{a}")));
        }
        header.push("nees".into());
    }
    let csv_err = |e: csv::Error| Error::Config(format!("writing table: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let e = &r.estimate;
        let mut rec = vec![e.t.to_string(), e.gated.to_string()];
        rec.extend(e.b.iter().chain(&e.bd).map(f64::to_string));
        rec.extend(e.p_diag.iter().map(|v| v.sqrt().to_string()));
        if with_truth {
            let nan = [f64::NAN; 6];
            rec.extend(r.bias_error.as_ref().unwrap_or(&nan).iter().map(f64::to_string));
            rec.extend(r.drift_error.as_ref().unwrap_or(&nan).iter().map(f64::to_string));
            rec.push(r.nees.unwrap_or(f64::NAN).to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("writing table", e))
}

const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

struct Panel<'a> {
    title: String,
    t: &'a [f64],
    est: Vec<f64>,
    truth: Option<Vec<f64>>,
}

fn polyline(t: &[f64], v: &[f64], x: impl Fn(f64) -> f64, y: impl Fn(f64) -> f64) -> String {
    let mut s = String::new();
    for (ti, vi) in t.iter().zip(v) {
        let _ = write!(s, "{:.2},{:.2} ", x(*ti), y(*vi));
    }
    s
}

fn svg(title: &str, panels: &[Panel]) -> String {
    const W: f64 = 360.0;
    const H: f64 = 180.0;
    const PAD: f64 = 30.0;
    let cols = 3;
    let rows = panels.len().div_ceil(cols);
    let width = cols as f64 * W;
    let height = rows as f64 * H + 30.0;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"10\" y=\"20\" font-size=\"14\">{title}</text>\n"
    );
    for (k, p) in panels.iter().enumerate() {
        let ox = (k % cols) as f64 * W;
        let oy = 30.0 + (k / cols) as f64 * H;
        let (t0, t1) = (p.t[0], *p.t.last().unwrap());
        let all = p.est.iter().chain(p.truth.iter().flatten()).filter(|v| v.is_finite());
        let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        if !(hi > lo) {
            lo -= 0.5;
            hi += 0.5;
        }
        let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
        let x = |t: f64| ox + PAD + (t - t0) / span_t * (W - 2.0 * PAD);
        let y = |v: f64| oy + H - PAD - (v - lo) / (hi - lo) * (H - 2.0 * PAD);
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#ccc\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\">{} [{lo:.3e}, {hi:.3e}]</text>",
            ox + PAD,
            oy + PAD,
            W - 2.0 * PAD,
            H - 2.0 * PAD,
            ox + PAD,
            oy + PAD - 5.0,
            p.title,
        );
        if let Some(tr) = &p.truth {
            let _ = writeln!(
                s,
                "<polyline fill=\"none\" stroke=\"black\" stroke-dasharray=\"4 3\" points=\"{}\"/>",
                polyline(p.t, tr, x, y)
            );
        }
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{}\" points=\"{}\"/>",
            COLORS[k % COLORS.len()],
            polyline(p.t, &p.est, x, y)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `bias.svg` and `drift.svg` into `dir`. Truth traces are dashed.
pub fn write_plots(dir: &Path, rows: &[Row], truth: Option<&[TruthRecord]>) -> Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let t: Vec<f64> = rows.iter().map(|r| r.estimate.t).collect();
    for (name, drift) in [("bias", false), ("drift", true)] {
        let panels: Vec<Panel> = (0..6)
            .map(|i| Panel {
                title: format!("{}{}", if drift { "drift " } else { "bias " }, AXES[i]),
                t: &t,
                est: rows
                    .iter()
                    .map(|r| if drift { r.estimate.bd[i] } else { r.estimate.b[i] })
                    .collect(),
                truth: truth.filter(|_| rows[0].bias_error.is_some()).map(|_| {
                    rows.iter()
                        .map(|r| {
                            if drift {
                                r.estimate.bd[i] - r.drift_error.unwrap()[i]
                            } else {
                                r.estimate.b[i] - r.bias_error.unwrap()[i]
                            }
                        })
                        .collect()
                }),
            })
            .collect();
        let path = dir.join(format!("{name}.svg"));
        std::fs::write(&path, svg(name, &panels)).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(t: f64, b: f64, var: f64) -> EstimateRecord {
        EstimateRecord {
            t,
            b: [b; 6],
            bd: [0.0; 6],
            p_diag: [var; 12],
            innovation: [0.0; 6],
            gated: false,
            cov: None,
        }
    }

    #[test]
    fn summary_without_truth_has_no_errors() {
        let s = summarize(&[est(0.0, 1.0, 4.0), est(1.0, 1.0, 1.0)], None, &ReportOptions::default());
        assert!(s.truth.is_none());
        assert_eq!(s.final_estimate.unwrap().b_std, [1.0; 6]);
        assert_eq!(s.convergence_time, Some(0.0));
        let s = summarize(&[], None, &ReportOptions::default());
        assert_eq!(s.estimates, 0);
        assert!(s.final_estimate.is_none());
    }

    #[test]
    fn convergence_is_last_entry_into_ratio() {
        let ests = [est(0.0, 0.0, 100.0), est(1.0, 0.0, 9.0), est(2.0, 0.0, 1.0), est(3.0, 0.0, 1.0)];
        let s = summarize(&ests, None, &ReportOptions::default());
        assert_eq!(s.convergence_time, Some(2.0));
    }

    #[test]
    fn nees_against_truth() {
        let truth = [TruthRecord {
            t: 0.0,
            b: [0.0; 6],
            bd: [0.0; 6],
        }];
        let rows = rows(&[est(0.5, 2.0, 4.0)], Some(&truth));
        // six bias axes each contribute (2/2)² = 1, drift axes contribute 0
        assert!((rows[0].nees.unwrap() - 6.0).abs() < 1e-12);
        let s = summarize(&[est(0.5, 2.0, 4.0)], Some(&truth), &ReportOptions::default());
        let t = s.truth.unwrap();
        assert_eq!(t.final_bias_error, [2.0; 6]);
        assert!((t.nees.band[0] - 4.403788506).abs() < 1e-6);
        assert!((t.nees.band[1] - 23.33666416).abs() < 1e-6);
        assert!(!t.nees.full_covariance);
    }

    #[test]
    fn table_has_nees_column_only_with_truth() {
        let truth = [TruthRecord {
            t: 0.0,
            b: [0.0; 6],
            bd: [0.0; 6],
        }];
        let e = [est(0.0, 1.0, 1.0)];
        let mut buf = Vec::new();
        write_table(&mut buf, &rows(&e, Some(&truth))).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap().ends_with(",nees"));
        let mut buf = Vec::new();
        write_table(&mut buf, &rows(&e, None)).unwrap();
        assert!(!String::from_utf8(buf).unwrap().contains("nees"));
    }

    #[test]
    fn plots_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let ests = [est(0.0, 1.0, 1.0), est(1.0, 2.0, 1.0)];
        write_plots(dir.path(), &rows(&ests, None), None).unwrap();
        let svg = std::fs::read_to_string(dir.path().join("bias.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("polyline"));
        assert!(dir.path().join("drift.svg").exists());
    }
}
