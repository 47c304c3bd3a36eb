use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{Confusion, GroupAccuracy};
use crate::classifiers::ClassifierKind;
use crate::error::{Error, Result};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepGroup {
    Traditional,
    Autoencoder,
}

impl RepGroup {
    pub fn heading(self) -> &'static str {
        match self {
            RepGroup::Traditional => "Traditional",
            RepGroup::Autoencoder => "Autoencoder",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationEntry {
    pub name: String,
    pub display_name: String,
    pub group: RepGroup,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub fold_accs: Vec<f64>,
    /// Average of `fold_accs`.
    pub mean: f64,
    /// `trace / total` of the confusion accumulated over test folds.
    pub overall_accuracy: f64,
    pub overall_accuracy_without_silence: Option<f64>,
    pub confusion: Confusion,
    pub per_class: Vec<GroupAccuracy>,
    pub per_subgroup: Vec<GroupAccuracy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub version: u32,
    pub seed: u64,
    pub k: usize,
    /// Inventory labels; confusion rows and columns follow this order.
    pub classes: Vec<String>,
    pub silence_label: String,
    pub chance_baseline: f64,
    pub representations: Vec<RepresentationEntry>,
    pub classifiers: Vec<ClassifierKind>,
    /// representation name → classifier name → cell.
    pub grid: BTreeMap<String, BTreeMap<String, CellReport>>,
    pub warnings: Vec<String>,
}

impl BenchmarkReport {
    pub fn cell(&self, representation: &str, classifier: ClassifierKind) -> Option<&CellReport> {
        self.grid.get(representation)?.get(classifier.name())
    }

    pub fn n_cells(&self) -> usize {
        self.grid.values().map(BTreeMap::len).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.version != REPORT_VERSION {
            return Err(Error::Format(format!("unsupported report version {}", r.version)));
        }
        Ok(r)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        Self::from_json(&text).map_err(|e| e.context(path.display().to_string()))
    }
}

/// Two decimals, halves rounded up. The tiny offset absorbs binary
/// representation error (0.855 is stored as 0.85499999…).
pub fn round2(v: f64) -> f64 {
    ((v * 100.0) + 0.5 + 1e-9).floor() / 100.0
}

pub fn fmt2(v: f64) -> String {
    format!("{:.2}", round2(v))
}

/// Table-1 shape: representations grouped by kind down the side,
/// classifiers across. The best (rounded) value in each column is bolded,
/// the best overall is starred; every tied cell is marked.
pub fn render_table1(report: &BenchmarkReport) -> Result<String> {
    let mut missing = Vec::new();
    for rep in &report.representations {
        for &clf in &report.classifiers {
            if report.cell(&rep.name, clf).is_none() {
                missing.push(format!("{}:{}", rep.name, clf));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Render(format!("missing grid cells: {}", missing.join(", "))));
    }
    let value = |rep: &RepresentationEntry, clf| round2(report.cell(&rep.name, clf).expect("checked").mean);
    let col_best: Vec<f64> = report
        .classifiers
        .iter()
        .map(|&c| report.representations.iter().map(|r| value(r, c)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let global = col_best.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut out = String::new();
    out.push_str("| Representation |");
    for c in &report.classifiers {
        write!(out, " {} |", c.display_name()).unwrap();
    }
    out.push_str("\n|:---|");
    out.push_str(&"---:|".repeat(report.classifiers.len()));
    out.push('\n');
    for group in [RepGroup::Traditional, RepGroup::Autoencoder] {
        let rows: Vec<&RepresentationEntry> = report.representations.iter().filter(|r| r.group == group).collect();
        if rows.is_empty() {
            continue;
        }
        write!(out, "| **{}** |", group.heading()).unwrap();
        out.push_str(&" |".repeat(report.classifiers.len()));
        out.push('\n');
        for rep in rows {
            write!(out, "| {} |", rep.display_name).unwrap();
            for (j, &clf) in report.classifiers.iter().enumerate() {
                let v = value(rep, clf);
                let text = fmt2(v);
                let cell = match (v == col_best[j], v == global) {
                    (true, true) => format!("**{text}\\***"),
                    (true, false) => format!("**{text}**"),
                    _ => text,
                };
                write!(out, " {cell} |").unwrap();
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Number of phonemes in each of Table 2's best and worst blocks.
pub const TABLE2_BLOCK: usize = 6;

/// Table-2 shape for one grid cell: subgroup accuracies, then the six best
/// and six worst phonemes (silence and unsupported classes excluded).
pub fn render_table2(report: &BenchmarkReport, representation: &str, classifier: ClassifierKind) -> Result<String> {
    let cell = report
        .cell(representation, classifier)
        .ok_or_else(|| Error::Render(format!("no cell {representation}:{classifier} in report")))?;
    let acc = |a: Option<f64>| a.map_or_else(|| "n/a".to_string(), fmt2);
    let mut out = String::from("| Phonemes | Classification Accuracy |\n|:---|---:|\n");
    out.push_str("| **Phoneme Subgroups** | |\n");
    for g in &cell.per_subgroup {
        writeln!(out, "| {} | {} |", g.name, acc(g.accuracy)).unwrap();
    }
    let mut ranked: Vec<(&str, f64)> = cell
        .per_class
        .iter()
        .filter(|c| c.name != report.silence_label)
        .filter_map(|c| c.accuracy.map(|a| (c.name.as_str(), a)))
        .collect();
    let mut best = ranked.clone();
    best.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    out.push_str("| **Highest Phoneme Performances** | |\n");
    for (name, a) in best.iter().take(TABLE2_BLOCK) {
        writeln!(out, "| {name} | {} |", fmt2(*a)).unwrap();
    }
    out.push_str("| **Lowest Phoneme Performances** | |\n");
    for (name, a) in ranked.iter().take(TABLE2_BLOCK) {
        writeln!(out, "| {name} | {} |", fmt2(*a)).unwrap();
    }
    Ok(out)
}
