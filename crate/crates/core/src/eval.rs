//! Case-based confusion matrix, selective-prediction metrics, Dice overlap
//! and EMD gate calibration.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::chd::{CHDType, LabelSet};
use crate::classify::Diagnosis;
use crate::error::{Error, Result};
use crate::volume::BinaryMask;

pub const CLASSES: usize = 17;
/// Column 0 is Uncertain, column `1 + k` is class `k`.
pub const COLUMNS: usize = CLASSES + 1;
pub const UNCERTAIN_COLUMN: &str = "Uncertain";

/// Rows are truth classes, columns Uncertain followed by predicted classes.
/// Every truth label of an image adds exactly one count to its row.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; COLUMNS]; CLASSES],
    /// Per predicted class, labels emitted that are not in the image's truth.
    pub spurious: [u64; CLASSES],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub cases: u64,
    pub uncertain: u64,
    pub correct: u64,
    pub coverage: f64,
    pub selective_accuracy: f64,
    pub full_accuracy: f64,
}

fn column(t: CHDType) -> usize {
    1 + t.index()
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one image. A truth label found in `predicted` is correct;
    /// otherwise it is counted under the first predicted label outside the
    /// truth set, or under the first predicted label when all of them are
    /// other truth labels of the same image.
    pub fn add(&mut self, truth: &LabelSet, predicted: Option<&LabelSet>) {
        let Some(pred) = predicted else {
            for t in truth {
                self.counts[t.index()][0] += 1;
            }
            return;
        };
        let extra: Vec<CHDType> = pred.difference(truth).copied().collect();
        for &p in &extra {
            self.spurious[p.index()] += 1;
        }
        for &t in truth {
            let col = if pred.contains(&t) {
                column(t)
            } else if let Some(&p) = extra.first().or(pred.first()) {
                column(p)
            } else {
                0
            };
            self.counts[t.index()][col] += 1;
        }
    }

    pub fn add_diagnosis(&mut self, truth: &LabelSet, d: &Diagnosis) {
        let labels = d.labels();
        self.add(truth, (!d.is_uncertain()).then_some(&labels));
    }

    pub fn accumulate<'a>(preds: impl IntoIterator<Item = (&'a LabelSet, &'a Diagnosis)>) -> Self {
        let mut cm = Self::new();
        for (t, d) in preds {
            cm.add_diagnosis(t, d);
        }
        cm
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in row.iter_mut().zip(o) {
                *c += v;
            }
        }
        for (s, o) in self.spurious.iter_mut().zip(&other.spurious) {
            *s += o;
        }
    }

    pub fn row_total(&self, t: CHDType) -> u64 {
        self.counts[t.index()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn uncertain(&self) -> u64 {
        self.counts.iter().map(|r| r[0]).sum()
    }

    pub fn correct(&self) -> u64 {
        CHDType::ALL
            .iter()
            .map(|&t| self.counts[t.index()][column(t)])
            .sum()
    }

    pub fn metrics(&self) -> Result<Metrics> {
        let cases = self.total();
        if cases == 0 {
            return Err(Error::Metrics("no cases".into()));
        }
        let uncertain = self.uncertain();
        let answered = cases - uncertain;
        if answered == 0 {
            return Err(Error::Metrics(
                "every case is Uncertain: coverage 0, selective accuracy undefined".into(),
            ));
        }
        let correct = self.correct();
        Ok(Metrics {
            cases,
            uncertain,
            correct,
            coverage: answered as f64 / cases as f64,
            selective_accuracy: correct as f64 / answered as f64,
            full_accuracy: correct as f64 / cases as f64,
        })
    }

    fn header() -> Vec<&'static str> {
        std::iter::once(UNCERTAIN_COLUMN)
            .chain(CHDType::ALL.iter().map(|t| t.name()))
            .collect()
    }

    /// Tab-separated matrix with a header row and one row per truth class.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("truth");
        for h in Self::header() {
            s.push('\t');
            s.push_str(h);
        }
        s.push('\n');
        for t in CHDType::ALL {
            s.push_str(t.name());
            for c in self.counts[t.index()] {
                let _ = write!(s, "\t{c}");
            }
            s.push('\n');
        }
        s
    }

    /// Reads [`to_tsv`](Self::to_tsv) output. Columns and rows may come in
    /// any order; missing rows are zero. Lines starting with `#` are skipped.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Metrics(m);
        let mut lines = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| bad("empty matrix file".into()))?;
        let cols: Vec<usize> = header
            .split('\t')
            .skip(1)
            .map(|h| {
                if h.eq_ignore_ascii_case(UNCERTAIN_COLUMN) || h == "U" {
                    Ok(0)
                } else {
                    h.parse::<CHDType>().map(column)
                }
            })
            .collect::<Result<_>>()?;
        let mut cm = Self::new();
        let mut seen = LabelSet::new();
        for line in lines {
            let mut f = line.split('\t');
            let t: CHDType = f.next().unwrap_or_default().parse()?;
            if !seen.insert(t) {
                return Err(bad(format!("duplicate row {t}")));
            }
            let vals: Vec<&str> = f.collect();
            if vals.len() != cols.len() {
                return Err(bad(format!("row {t} has {} fields, expected {}", vals.len(), cols.len())));
            }
            for (v, &c) in vals.iter().zip(&cols) {
                let n: u64 = if v.trim().is_empty() {
                    0
                } else {
                    v.trim().parse().map_err(|_| bad(format!("row {t}: bad count {v:?}")))?
                };
                cm.counts[t.index()][c] += n;
            }
        }
        Ok(cm)
    }

    /// Aligned text table, Uncertain
    /// column first, zero cells left blank, spurious labels as a last row.
    pub fn render_table(&self) -> String {
        let names: Vec<&str> = Self::header()
            .into_iter()
            .map(|h| if h == UNCERTAIN_COLUMN { "U" } else { h })
            .collect();
        let width = names.iter().map(|n| n.len()).max().unwrap_or(1).max(4) + 1;
        let mut s = format!("{:<8}", "");
        for n in &names {
            let _ = write!(s, "{n:>width$}");
        }
        let _ = writeln!(s, "{:>width$}", "total");
        let cell = |v: u64| if v == 0 { String::new() } else { v.to_string() };
        for t in CHDType::ALL {
            let _ = write!(s, "{:<8}", t.name());
            for &v in &self.counts[t.index()] {
                let _ = write!(s, "{:>width$}", cell(v));
            }
            let _ = writeln!(s, "{:>width$}", self.row_total(t));
        }
        let _ = write!(s, "{:<8}{:>width$}", "spurious", "");
        for &v in &self.spurious {
            let _ = write!(s, "{:>width$}", cell(v));
        }
        s.push('\n');
        s
    }
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn summary(&self) -> String {
        format!(
            "cases {} uncertain {} correct {} | coverage {:.1}% selective accuracy {:.1}% full accuracy {:.1}%",
            self.cases,
            self.uncertain,
            self.correct,
            100.0 * self.coverage,
            100.0 * self.selective_accuracy,
            100.0 * self.full_accuracy
        )
    }
}

/// `2|A∩B| / (|A| + |B|)`; two empty masks score 1.
pub fn dice(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    if pred.grid() != gt.grid() {
        return Err(Error::GridMismatch(format!(
            "dice of {:?} and {:?} voxel grids",
            pred.dims(),
            gt.dims()
        )));
    }
    let (a, b) = (pred.count(), gt.count());
    if a + b == 0 {
        return Ok(1.0);
    }
    let both = pred
        .as_slice()
        .iter()
        .zip(gt.as_slice())
        .filter(|(x, y)| **x && **y)
        .count();
    Ok(2.0 * both as f64 / (a + b) as f64)
}

/// Smallest gate that accepts at least `coverage` of the given nearest-template
/// distances (nearest-rank quantile). `None` for an empty sample or a
/// coverage outside `(0, 1]`.
pub fn calibrate_gate(min_emds: &[f64], coverage: f64) -> Option<f64> {
    if min_emds.is_empty() || !(coverage > 0.0 && coverage <= 1.0) {
        return None;
    }
    let mut v = min_emds.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (coverage * v.len() as f64).ceil() as usize;
    Some(v[rank.clamp(1, v.len()) - 1])
}
