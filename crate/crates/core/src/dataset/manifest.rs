use std::path::Path;

use serde::Serialize;

use super::inventory::{Category, PhonemeInventory, Subgroup};
use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 4] = ["audio_id", "start_s", "end_s", "label"];

/// One time-aligned phoneme label.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub audio_id: String,
    pub start: f64,
    pub end: f64,
    pub label: String,
    /// Index of `label` in the inventory the set was validated against.
    pub class: usize,
}

impl Annotation {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub total: usize,
    pub class_counts: Vec<(String, usize)>,
    pub category_fractions: Vec<(Category, f64)>,
    /// Fractions per subgroup; `None` collects the silence class so the
    /// level still partitions the whole dataset.
    pub subgroup_fractions: Vec<(Option<Subgroup>, f64)>,
}

impl DatasetStats {
    pub fn compute(classes: &[usize], inventory: &PhonemeInventory) -> Self {
        let mut counts = vec![0usize; inventory.len()];
        for &c in classes {
            counts[c] += 1;
        }
        let total = classes.len();
        let frac = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };

        let category_fractions = Category::ALL
            .iter()
            .map(|&cat| {
                let n = inventory
                    .members_of_category(cat)
                    .iter()
                    .map(|&i| counts[i])
                    .sum();
                (cat, frac(n))
            })
            .collect();

        let mut subgroup_fractions: Vec<(Option<Subgroup>, f64)> = inventory
            .subgroups()
            .into_iter()
            .map(|g| {
                let n = inventory.members_of_subgroup(g).iter().map(|&i| counts[i]).sum();
                (Some(g), frac(n))
            })
            .collect();
        subgroup_fractions.push((None, frac(counts[inventory.silence_index()])));

        Self {
            total,
            class_counts: inventory
                .labels()
                .map(str::to_string)
                .zip(counts)
                .collect(),
            category_fractions,
            subgroup_fractions,
        }
    }

    pub fn count_of(&self, label: &str) -> usize {
        self.class_counts
            .iter()
            .find(|(l, _)| l == label)
            .map_or(0, |(_, n)| *n)
    }

    pub fn category_fraction(&self, category: Category) -> f64 {
        self.category_fractions
            .iter()
            .find(|(c, _)| *c == category)
            .map_or(0.0, |(_, f)| *f)
    }

    pub fn render(&self) -> String {
        let mut out = format!("total: {}\n", self.total);
        for (cat, f) in &self.category_fractions {
            out.push_str(&format!("category {cat}: {f:.4}\n"));
        }
        for (g, f) in &self.subgroup_fractions {
            let name = g.map_or("silence", Subgroup::as_str);
            out.push_str(&format!("subgroup {name}: {f:.4}\n"));
        }
        for (label, n) in &self.class_counts {
            out.push_str(&format!("{label}\t{n}\n"));
        }
        out
    }
}

/// Annotations sorted by `(audio_id, start)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    annotations: Vec<Annotation>,
    stats: DatasetStats,
}

impl AnnotationSet {
    pub fn new(mut annotations: Vec<Annotation>, inventory: &PhonemeInventory) -> Result<Self> {
        for a in &annotations {
            validate_times(a.start, a.end).map_err(|msg| Error::Range(format!("{}: {msg}", a.audio_id)))?;
            match inventory.index_of(&a.label) {
                Some(i) if i == a.class => {}
                _ => {
                    return Err(Error::Inventory(format!(
                        "annotation label `{}` does not match class index {}",
                        a.label, a.class
                    )))
                }
            }
        }
        annotations.sort_by(|a, b| {
            a.audio_id
                .cmp(&b.audio_id)
                .then(a.start.total_cmp(&b.start))
        });
        let classes: Vec<usize> = annotations.iter().map(|a| a.class).collect();
        let stats = DatasetStats::compute(&classes, inventory);
        Ok(Self { annotations, stats })
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn stats(&self) -> &DatasetStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.annotations.iter().map(|a| a.class).collect()
    }

    /// Distinct audio ids in sorted order.
    pub fn audio_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.annotations.iter().map(|a| a.audio_id.as_str()).collect();
        ids.dedup();
        ids
    }

    pub fn to_tsv(&self) -> String {
        let mut out = MANIFEST_HEADER.join("\t");
        out.push('\n');
        for a in &self.annotations {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", a.audio_id, a.start, a.end, a.label));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_tsv())?;
        Ok(())
    }
}

fn validate_times(start: f64, end: f64) -> std::result::Result<(), String> {
    if !start.is_finite() || !end.is_finite() {
        return Err("non-finite time".into());
    }
    if start < 0.0 {
        return Err(format!("start {start} is negative"));
    }
    if end <= start {
        return Err(format!("end {end} is not after start {start}"));
    }
    Ok(())
}

pub fn load_manifest(path: impl AsRef<Path>, inventory: &PhonemeInventory) -> Result<AnnotationSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    parse_manifest(&text, inventory)
}

/// Parses manifest text: a header row `audio_id start_s end_s label`
/// followed by one annotation per line. Columns are tab separated; any run
/// of whitespace is accepted.
pub fn parse_manifest(text: &str, inventory: &PhonemeInventory) -> Result<AnnotationSet> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => break (i + 1, l),
            None => return Err(Error::Parse { line: 1, msg: "missing header".into() }),
        }
    };
    let cols: Vec<&str> = header.1.split_whitespace().collect();
    if cols != MANIFEST_HEADER {
        return Err(Error::Parse {
            line: header.0,
            msg: format!("expected header `{}`", MANIFEST_HEADER.join("\t")),
        });
    }

    let mut annotations = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 4 columns, got {}", cols.len()),
            });
        }
        let parse_time = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad {what} `{s}`"),
            })
        };
        let start = parse_time(cols[1], "start_s")?;
        let end = parse_time(cols[2], "end_s")?;
        validate_times(start, end).map_err(|msg| Error::Range(format!("line {line_no}: {msg}")))?;
        let label = cols[3];
        let class = inventory.index_of(label).ok_or_else(|| Error::UnknownLabel {
            label: label.to_string(),
            line: line_no,
        })?;
        annotations.push(Annotation {
            audio_id: cols[0].to_string(),
            start,
            end,
            label: label.to_string(),
            class,
        });
    }
    AnnotationSet::new(annotations, inventory)
}
