use serde::{Deserialize, Serialize};

use crate::dataset::{Category, PhonemeInventory, Subgroup};
use crate::error::{Error, Result};

/// `counts[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Confusion {
    pub counts: Vec<Vec<u64>>,
}

impl Confusion {
    pub fn new(n_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn from_predictions(n_classes: usize, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        let mut c = Self::new(n_classes);
        c.record(truth, predicted)?;
        Ok(c)
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, truth: &[usize], predicted: &[usize]) -> Result<()> {
        if truth.len() != predicted.len() {
            return Err(Error::Geometry(format!(
                "{} labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let k = self.n_classes();
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= k || p >= k {
                return Err(Error::Label(format!("class index {} outside {k} classes", t.max(p))));
            }
            self.counts[t][p] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Confusion) {
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in row.iter_mut().zip(o) {
                *a += b;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    /// `trace / total`; `None` for an empty matrix.
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.trace() as f64 / total as f64)
    }

    /// Micro accuracy over samples whose true class is in `members`.
    pub fn accuracy_over(&self, members: &[usize]) -> GroupTally {
        let support = members.iter().map(|&c| self.support(c)).sum();
        let correct = members.iter().map(|&c| self.counts[c][c]).sum();
        GroupTally { support, correct }
    }

    pub fn per_class(&self) -> Vec<GroupTally> {
        (0..self.n_classes()).map(|c| self.accuracy_over(&[c])).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupTally {
    pub support: u64,
    pub correct: u64,
}

impl GroupTally {
    /// Undefined (not zero) without support.
    pub fn accuracy(&self) -> Option<f64> {
        (self.support > 0).then(|| self.correct as f64 / self.support as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracy {
    pub name: String,
    pub support: u64,
    pub correct: u64,
    pub accuracy: Option<f64>,
}

impl GroupAccuracy {
    fn new(name: &str, t: GroupTally) -> Self {
        Self {
            name: name.to_string(),
            support: t.support,
            correct: t.correct,
            accuracy: t.accuracy(),
        }
    }
}

pub const ALL_VOWELS: &str = "All Vowels";
pub const ALL_CONSONANTS: &str = "All Consonants";

/// Category and subgroup accuracies in report order: all vowels, vowel
/// subgroups, all consonants, consonant subgroups.
pub fn subgroup_accuracy(confusion: &Confusion, inventory: &PhonemeInventory) -> Result<Vec<GroupAccuracy>> {
    if confusion.n_classes() != inventory.len() {
        return Err(Error::Geometry(format!(
            "confusion has {} classes, inventory {}",
            confusion.n_classes(),
            inventory.len()
        )));
    }
    let mut out = Vec::new();
    for (category, heading) in [(Category::Vowel, ALL_VOWELS), (Category::Consonant, ALL_CONSONANTS)] {
        out.push(GroupAccuracy::new(
            heading,
            confusion.accuracy_over(&inventory.members_of_category(category)),
        ));
        for g in Subgroup::ALL.into_iter().filter(|g| g.category() == category) {
            out.push(GroupAccuracy::new(
                g.display_name(),
                confusion.accuracy_over(&inventory.members_of_subgroup(g)),
            ));
        }
    }
    Ok(out)
}
