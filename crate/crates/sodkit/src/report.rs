//! Evaluation output: a JSON report with one row per image, and the mean
//! precision-recall curve as CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sodkit_core::metrics::{aggregate, ImageMetrics, PrCurve};

use crate::config::RunConfig;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub mae: f64,
    pub msiou: f64,
    pub s_measure: f64,
    pub weighted_f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mae: f64,
    pub msiou: f64,
    pub s_measure: f64,
    pub weighted_f: f64,
    pub n_images: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<Row>,
    pub aggregate: Aggregate,
    pub config: RunConfig,
    /// Files present on only one side, skipped.
    pub unmatched: Vec<String>,
    /// Unmatched files plus images with an empty ground truth.
    pub warnings: usize,
}

impl Row {
    pub fn new(name: &str, m: &ImageMetrics) -> Self {
        Self {
            name: name.to_string(),
            mae: m.mae,
            msiou: m.msiou,
            s_measure: m.s_measure,
            weighted_f: m.weighted_f,
        }
    }

    fn metrics(&self) -> ImageMetrics {
        ImageMetrics {
            mae: self.mae,
            msiou: self.msiou,
            s_measure: self.s_measure,
            weighted_f: self.weighted_f,
            empty_gt: false,
        }
    }
}

/// Means over `rows` in their order.
pub fn aggregate_rows(rows: &[Row]) -> Result<Aggregate> {
    let m = aggregate(&rows.iter().map(Row::metrics).collect::<Vec<_>>())?;
    Ok(Aggregate {
        mae: m.mae,
        msiou: m.msiou,
        s_measure: m.s_measure,
        weighted_f: m.weighted_f,
        n_images: m.n_images,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Data(format!("bad report: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}

pub const PR_HEADER: &str = "threshold,precision,recall";

pub fn pr_csv(curve: &PrCurve) -> String {
    let mut out = String::from(PR_HEADER);
    out.push('\n');
    for ((t, p), r) in curve.thresholds.iter().zip(&curve.precision).zip(&curve.recall) {
        writeln!(out, "{t},{p},{r}").expect("writing to a String");
    }
    out
}

pub fn write_pr_csv(path: &Path, curve: &PrCurve) -> Result<()> {
    fs::write(path, pr_csv(curve)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sodkit_core::metrics::pr_curve;
    use sodkit_core::Tensor;

    #[test]
    fn csv_has_header_and_256_rows() {
        let p = Tensor::new(&[1, 2], vec![0.2, 0.9]).unwrap();
        let g = Tensor::new(&[1, 2], vec![0.0, 1.0]).unwrap();
        let csv = pr_csv(&pr_curve(&p, &g).unwrap());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PR_HEADER);
        assert_eq!(lines.len(), 257);
        assert_eq!(lines[1], "0,0.5,1");
        assert_eq!(lines[256], "1,1,0");
    }

    #[test]
    fn json_round_trip_keeps_every_bit() {
        let rows = vec![
            Row {
                name: "a".into(),
                mae: 0.1,
                msiou: 1.0 / 3.0,
                s_measure: 0.7,
                weighted_f: 0.2,
            },
            Row {
                name: "b".into(),
                mae: 0.3,
                msiou: 0.25,
                s_measure: 0.9,
                weighted_f: 0.6,
            },
        ];
        let r = EvalReport {
            aggregate: aggregate_rows(&rows).unwrap(),
            rows,
            config: RunConfig::default(),
            unmatched: vec![],
            warnings: 0,
        };
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
        assert!((r.aggregate.mae - 0.2).abs() < 1e-15);
    }
}
