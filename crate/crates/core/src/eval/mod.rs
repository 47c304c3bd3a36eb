//! Stratified cross-validation over a representation × classifier grid,
//! with accuracy bookkeeping and report rendering.

mod folds;
mod metrics;
mod report;
mod scaler;

use std::collections::BTreeMap;

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;

use crate::classifiers::{train_classifier, ClassifierKind, ModelSpec};
use crate::dataset::PhonemeInventory;
use crate::dsp::FeatureMatrix;
use crate::error::{Error, Result};

pub use folds::{stratified_folds, FoldPlan};
pub use metrics::{subgroup_accuracy, Confusion, GroupAccuracy, GroupTally, ALL_CONSONANTS, ALL_VOWELS};
pub use report::{
    fmt2, render_table1, render_table2, round2, BenchmarkReport, CellReport, RepGroup, RepresentationEntry,
    REPORT_VERSION, TABLE2_BLOCK,
};
pub use scaler::Scaler;

/// Number of folds used by the benchmark.
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub fold_accs: Vec<f64>,
    pub confusion: Confusion,
}

impl CvOutcome {
    pub fn mean(&self) -> f64 {
        self.fold_accs.iter().sum::<f64>() / self.fold_accs.len() as f64
    }
}

/// Runs every fold of `plan`: fits a [`Scaler`] on the training rows,
/// standardizes both splits, and scores `fit_predict(fold, x_train,
/// y_train, x_test)`.
pub fn cross_validate<F>(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    plan: &FoldPlan,
    mut fit_predict: F,
) -> Result<CvOutcome>
where
    F: FnMut(usize, ArrayView2<f64>, &[usize], ArrayView2<f64>) -> Result<Vec<usize>>,
{
    if x.nrows() != y.len() || plan.assignment.len() != y.len() {
        return Err(Error::Geometry("features, labels and fold plan disagree in length".into()));
    }
    let mut confusion = Confusion::new(n_classes);
    let mut fold_accs = Vec::with_capacity(plan.k);
    for fold in 0..plan.k {
        let test = plan.test_indices(fold);
        let train = plan.train_indices(fold);
        if test.is_empty() {
            return Err(Error::Data(format!("fold {fold} has no test samples")));
        }
        let scaler = Scaler::fit(x.select(Axis(0), &train).view())?;
        let x_train = scaler.apply(x.select(Axis(0), &train).view())?;
        let x_test = scaler.apply(x.select(Axis(0), &test).view())?;
        let y_train: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        let y_test: Vec<usize> = test.iter().map(|&i| y[i]).collect();
        let pred = fit_predict(fold, x_train.view(), &y_train, x_test.view())
            .map_err(|e| e.context(format!("fold {fold}")))?;
        let fc = Confusion::from_predictions(n_classes, &y_test, &pred)?;
        fold_accs.push(fc.accuracy().expect("non-empty fold"));
        confusion.merge(&fc);
    }
    Ok(CvOutcome { fold_accs, confusion })
}

/// Feature matrix for one grid row.
#[derive(Debug, Clone)]
pub struct BenchmarkInput {
    pub entry: RepresentationEntry,
    pub features: FeatureMatrix,
}

pub fn labels_to_indices(labels: &[String], inventory: &PhonemeInventory) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|l| {
            inventory
                .index_of(l)
                .ok_or_else(|| Error::Label(format!("label `{l}` is not in the inventory")))
        })
        .collect()
}

/// Seed handed to the classifier trained on `fold`.
pub fn fold_seed(spec_seed: u64, fold: usize) -> u64 {
    spec_seed.wrapping_add(fold as u64)
}

pub fn cell_report(outcome: &CvOutcome, inventory: &PhonemeInventory) -> Result<CellReport> {
    let c = &outcome.confusion;
    let sil = inventory.silence_index();
    let non_sil: Vec<usize> = (0..inventory.len()).filter(|&i| i != sil).collect();
    Ok(CellReport {
        fold_accs: outcome.fold_accs.clone(),
        mean: outcome.mean(),
        overall_accuracy: c.accuracy().unwrap_or(0.0),
        overall_accuracy_without_silence: c.accuracy_over(&non_sil).accuracy(),
        per_class: c
            .per_class()
            .into_iter()
            .zip(inventory.classes())
            .map(|(t, cls)| GroupAccuracy {
                name: cls.label.clone(),
                support: t.support,
                correct: t.correct,
                accuracy: t.accuracy(),
            })
            .collect(),
        per_subgroup: subgroup_accuracy(c, inventory)?,
        confusion: c.clone(),
    })
}

/// Every (representation, classifier) cell under `k`-fold stratified CV.
/// Cells are independent and run in parallel; the result does not depend
/// on scheduling.
pub fn run_benchmark(
    inputs: &[BenchmarkInput],
    specs: &[ModelSpec],
    inventory: &PhonemeInventory,
    k: usize,
    seed: u64,
) -> Result<BenchmarkReport> {
    let mut warnings = Vec::new();
    let mut prepared = Vec::with_capacity(inputs.len());
    for input in inputs {
        let y = labels_to_indices(&input.features.labels, inventory)
            .map_err(|e| e.context(format!("representation {}", input.entry.name)))?;
        let plan = stratified_folds(&y, k, seed)?;
        for w in &plan.warnings {
            let msg = format!("{}: {w}", input.entry.name);
            if !warnings.contains(&msg) {
                warnings.push(msg);
            }
        }
        prepared.push((input, y, plan));
    }
    let jobs: Vec<(usize, &ModelSpec)> = (0..prepared.len())
        .flat_map(|r| specs.iter().map(move |s| (r, s)))
        .collect();
    let cells: Vec<Result<CellReport>> = jobs
        .par_iter()
        .map(|&(r, spec)| {
            let (input, y, plan) = &prepared[r];
            let label = format!("cell {}:{}", input.entry.name, spec.kind);
            log::info!("running {label}");
            let outcome = cross_validate(input.features.data.view(), y, inventory.len(), plan, |fold, xt, yt, xv| {
                let mut s = spec.clone();
                s.seed = fold_seed(spec.seed, fold);
                train_classifier(&s, xt, yt)?.predict(xv)
            })
            .map_err(|e| e.context(label.clone()))?;
            cell_report(&outcome, inventory).map_err(|e| e.context(label))
        })
        .collect();
    let mut grid: BTreeMap<String, BTreeMap<String, CellReport>> = BTreeMap::new();
    for (&(r, spec), cell) in jobs.iter().zip(cells) {
        grid.entry(prepared[r].0.entry.name.clone())
            .or_default()
            .insert(spec.kind.name().to_string(), cell?);
    }
    let mut classifiers: Vec<ClassifierKind> = Vec::new();
    for s in specs {
        if !classifiers.contains(&s.kind) {
            classifiers.push(s.kind);
        }
    }
    Ok(BenchmarkReport {
        version: REPORT_VERSION,
        seed,
        k,
        classes: inventory.labels().map(str::to_string).collect(),
        silence_label: inventory.class(inventory.silence_index()).label.clone(),
        chance_baseline: inventory.chance_baseline(),
        representations: inputs.iter().map(|i| i.entry.clone()).collect(),
        classifiers,
        grid,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Category, PhonemeClass, Subgroup};
    use ndarray::Array2;

    fn inventory() -> PhonemeInventory {
        let c = |label: &str, category, subgroup| PhonemeClass {
            label: label.into(),
            category,
            subgroup,
        };
        PhonemeInventory::new(vec![
            c("a", Category::Vowel, Some(Subgroup::Unrounded)),
            c("u", Category::Vowel, Some(Subgroup::Rounded)),
            c("s", Category::Consonant, Some(Subgroup::Fricative)),
            c("SIL", Category::Silence, None),
        ])
        .unwrap()
    }

    fn toy_features(n: usize) -> FeatureMatrix {
        let labels = ["a", "u", "s", "SIL"];
        let y: Vec<String> = (0..n).map(|i| labels[i % 4].to_string()).collect();
        let data = Array2::from_shape_fn((n, 3), |(i, j)| (i % 4) as f64 * 3.0 + ((i * 7 + j) % 5) as f64 * 0.1);
        FeatureMatrix::new(data, y).unwrap()
    }

    fn entry(name: &str, group: RepGroup) -> RepresentationEntry {
        RepresentationEntry {
            name: name.into(),
            display_name: name.to_uppercase(),
            group,
            dim: 3,
        }
    }

    #[test]
    fn majority_classifier_scores_majority_fraction() {
        let y: Vec<usize> = (0..50).map(|i| usize::from(i % 5 == 0)).collect();
        let x = Array2::from_shape_fn((50, 2), |(i, j)| (i + j) as f64);
        let plan = stratified_folds(&y, 5, 1).unwrap();
        let out = cross_validate(x.view(), &y, 2, &plan, |_, _, yt, xv| {
            let ones = yt.iter().filter(|&&v| v == 1).count();
            let maj = usize::from(ones * 2 > yt.len());
            Ok(vec![maj; xv.nrows()])
        })
        .unwrap();
        assert!((out.mean() - 0.8).abs() < 1e-12);
        assert_eq!(out.confusion.trace(), 40);
    }

    #[test]
    fn mean_and_trace_consistency() {
        let inv = inventory();
        let inputs = [BenchmarkInput {
            entry: entry("toy", RepGroup::Traditional),
            features: toy_features(40),
        }];
        let specs = [
            ModelSpec::new(ClassifierKind::DecisionTree, 1),
            ModelSpec::new(ClassifierKind::LogregL2, 1),
        ];
        let r = run_benchmark(&inputs, &specs, &inv, 5, 9).unwrap();
        assert_eq!(r.n_cells(), 2);
        assert!((r.chance_baseline - 0.25).abs() < 1e-15);
        for cell in r.grid["toy"].values() {
            let m = cell.fold_accs.iter().sum::<f64>() / 5.0;
            assert!((m - cell.mean).abs() < 1e-12);
            assert_eq!(cell.overall_accuracy, cell.confusion.accuracy().unwrap());
            for (c, row) in cell.per_class.iter().zip(&cell.confusion.counts) {
                assert_eq!(c.support, row.iter().sum::<u64>());
            }
        }
        let again = run_benchmark(&inputs, &specs, &inv, 5, 9).unwrap();
        assert_eq!(r.to_json().unwrap(), again.to_json().unwrap());
        assert_eq!(BenchmarkReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }

    fn synthetic_report(values: &[(&str, RepGroup, [f64; 2])]) -> BenchmarkReport {
        let inv = inventory();
        let mut grid = BTreeMap::new();
        for (name, _, vals) in values {
            let mut row = BTreeMap::new();
            for (clf, v) in [ClassifierKind::DenseNn, ClassifierKind::SvmRbf].into_iter().zip(vals) {
                let outcome = CvOutcome {
                    fold_accs: vec![*v; 5],
                    confusion: Confusion {
                        counts: vec![vec![4, 1, 0, 0], vec![0, 3, 0, 0], vec![0, 0, 2, 2], vec![0, 0, 0, 1]],
                    },
                };
                row.insert(clf.name().to_string(), cell_report(&outcome, &inv).unwrap());
            }
            grid.insert(name.to_string(), row);
        }
        BenchmarkReport {
            version: REPORT_VERSION,
            seed: 0,
            k: 5,
            classes: inv.labels().map(str::to_string).collect(),
            silence_label: "SIL".into(),
            chance_baseline: 0.25,
            representations: values.iter().map(|(n, g, _)| entry(n, *g)).collect(),
            classifiers: vec![ClassifierKind::DenseNn, ClassifierKind::SvmRbf],
            grid,
            warnings: vec![],
        }
    }

    #[test]
    fn table1_marks_best_and_ties() {
        let r = synthetic_report(&[
            ("m", RepGroup::Traditional, [0.86, 0.40]),
            ("l", RepGroup::Traditional, [0.5, 0.52]),
            ("ae", RepGroup::Autoencoder, [0.3, 0.52]),
        ]);
        let t = render_table1(&r).unwrap();
        assert!(t.contains("| M | **0.86\\*** | 0.40 |"), "{t}");
        assert!(t.contains("| L | 0.50 | **0.52** |"));
        assert!(t.contains("| AE | 0.30 | **0.52** |"));
        let trad = t.find("**Traditional**").unwrap();
        let ae = t.find("**Autoencoder**").unwrap();
        assert!(trad < t.find("| M |").unwrap() && t.find("| L |").unwrap() < ae);
    }

    #[test]
    fn table1_global_ties_all_starred() {
        let r = synthetic_report(&[("m", RepGroup::Traditional, [0.7, 0.7])]);
        let t = render_table1(&r).unwrap();
        assert_eq!(t.matches("**0.70\\***").count(), 2);
    }

    #[test]
    fn table1_rejects_missing_cells() {
        let mut r = synthetic_report(&[("m", RepGroup::Traditional, [0.7, 0.6])]);
        r.grid.get_mut("m").unwrap().remove("svm_rbf");
        match render_table1(&r) {
            Err(Error::Render(msg)) => assert!(msg.contains("m:svm_rbf")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table2_blocks() {
        let r = synthetic_report(&[("m", RepGroup::Traditional, [0.7, 0.6])]);
        let t = render_table2(&r, "m", ClassifierKind::DenseNn).unwrap();
        assert!(t.contains("| All Vowels | 0.88 |"), "{t}");
        assert!(t.contains("| Nasals | n/a |"));
        let hi = t.find("Highest").unwrap();
        let lo = t.find("Lowest").unwrap();
        let best: Vec<&str> = t[hi..lo].lines().skip(1).filter(|l| !l.contains("**")).collect();
        assert_eq!(best, vec!["| u | 1.00 |", "| a | 0.80 |", "| s | 0.50 |"]);
        assert!(!t.contains("| SIL |"));
        assert!(render_table2(&r, "m", ClassifierKind::DecisionTree).is_err());
    }
}
