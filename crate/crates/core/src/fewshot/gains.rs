use std::collections::BTreeMap;

use serde::Serialize;

use super::{EvalReport, FewShotError, HeadKind, Result};

/// Mean metrics of one (head, shot) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportCell {
    pub mean_accuracy: f64,
    pub mean_f1: f64,
}

/// A named collection of cells, typically one report directory produced
/// from a single pre-training configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportSet {
    pub name: String,
    pub cells: BTreeMap<(HeadKind, usize), ReportCell>,
}

impl ReportSet {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), cells: BTreeMap::new() }
    }

    pub fn from_reports<'a>(name: impl Into<String>, reports: impl IntoIterator<Item = &'a EvalReport>) -> Result<Self> {
        let mut set = Self::new(name);
        for r in reports {
            set.insert(r.config.head, r.config.shot, ReportCell { mean_accuracy: r.mean_accuracy, mean_f1: r.mean_f1 })?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, head: HeadKind, shot: usize, cell: ReportCell) -> Result<()> {
        if self.cells.insert((head, shot), cell).is_some() {
            return Err(FewShotError::CellMismatch(format!("{} has two {head} {shot}-shot reports", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainRow {
    pub comparison: String,
    pub avg_accuracy_gain: f64,
    pub avg_f1_gain: f64,
}

/// Average improvement of `combined` over each baseline, taken as the mean
/// over cells of the difference in mean accuracy (and mean F1).
pub fn compute_gains(combined: &ReportSet, baselines: &[&ReportSet]) -> Result<Vec<GainRow>> {
    if combined.cells.is_empty() {
        return Err(FewShotError::EmptyInput);
    }
    baselines
        .iter()
        .map(|base| {
            if base.cells.keys().ne(combined.cells.keys()) {
                return Err(FewShotError::CellMismatch(format!(
                    "{} has cells [{}] but {} has [{}]",
                    combined.name,
                    describe(combined),
                    base.name,
                    describe(base)
                )));
            }
            let n = combined.cells.len() as f64;
            let (mut acc, mut f1) = (0.0, 0.0);
            for (c, b) in combined.cells.values().zip(base.cells.values()) {
                acc += c.mean_accuracy - b.mean_accuracy;
                f1 += c.mean_f1 - b.mean_f1;
            }
            Ok(GainRow { comparison: format!("{} vs {}", combined.name, base.name), avg_accuracy_gain: acc / n, avg_f1_gain: f1 / n })
        })
        .collect()
}

fn describe(set: &ReportSet) -> String {
    set.cells.keys().map(|(h, k)| format!("{h}/k{k}")).collect::<Vec<_>>().join(", ")
}

/// Signed, two decimals; a gain that rounds to zero prints as `+0.00`.
pub fn format_gain(x: f64) -> String {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        "+0.00".to_owned()
    } else if r > 0.0 {
        format!("+{r:.2}")
    } else {
        format!("{r:.2}")
    }
}

pub fn gains_csv(rows: &[GainRow]) -> String {
    let mut out = String::from("comparison,avg_accuracy_gain,avg_f1_gain\n");
    for r in rows {
        let name = if r.comparison.contains([',', '"', '\n']) {
            format!("\"{}\"", r.comparison.replace('"', "\"\""))
        } else {
            r.comparison.clone()
        };
        out.push_str(&format!("{name},{},{}\n", format_gain(r.avg_accuracy_gain), format_gain(r.avg_f1_gain)));
    }
    out
}
