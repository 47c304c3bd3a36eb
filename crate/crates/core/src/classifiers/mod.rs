//! Eight classifiers behind one train/predict interface, plus `PBML`
//! persistence.
//!
//! Labels are plain class indices. A model remembers the sorted set of
//! labels it saw and only ever predicts one of them.

mod dense_nn;
mod logreg;
mod persist;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dense_nn::{DenseNn, DenseNnParams};
pub use logreg::{LogRegParams, LogisticRegression, Penalty};
pub use persist::{PBML_MAGIC, PBML_VERSION};
pub use svm::{smo_solve, BinarySvm, Kernel, SmoParams, SmoSolution, SvmModel};
pub use tree::{cart_best_split, gini, tree_rng, DecisionTree, ForestParams, Node, RandomForest, Split, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    DenseNn,
    SvmLinear,
    SvmRbf,
    RandomForest,
    DecisionTree,
    LogregL1,
    LogregL2,
    LogregElasticnet,
}

impl ClassifierKind {
    /// Report column order.
    pub const ALL: [ClassifierKind; 8] = [
        ClassifierKind::DenseNn,
        ClassifierKind::SvmLinear,
        ClassifierKind::SvmRbf,
        ClassifierKind::RandomForest,
        ClassifierKind::DecisionTree,
        ClassifierKind::LogregL1,
        ClassifierKind::LogregL2,
        ClassifierKind::LogregElasticnet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::DenseNn => "dense_nn",
            ClassifierKind::SvmLinear => "svm_linear",
            ClassifierKind::SvmRbf => "svm_rbf",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::LogregL1 => "logreg_l1",
            ClassifierKind::LogregL2 => "logreg_l2",
            ClassifierKind::LogregElasticnet => "logreg_elasticnet",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::DenseNn => "Dense NN",
            ClassifierKind::SvmLinear => "SVM (linear)",
            ClassifierKind::SvmRbf => "SVM (rbf)",
            ClassifierKind::RandomForest => "RF",
            ClassifierKind::DecisionTree => "DT",
            ClassifierKind::LogregL1 => "LR (L1)",
            ClassifierKind::LogregL2 => "LR (L2)",
            ClassifierKind::LogregElasticnet => "LR (ElasticNet)",
        }
    }

    pub fn has_proba(self) -> bool {
        matches!(
            self,
            ClassifierKind::DenseNn
                | ClassifierKind::LogregL1
                | ClassifierKind::LogregL2
                | ClassifierKind::LogregElasticnet
        )
    }

    fn tag(self) -> u8 {
        Self::ALL.iter().position(|&k| k == self).expect("listed") as u8
    }

    fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown classifier `{s}`")))
    }
}

/// Every tunable knob. Defaults are the benchmark's fixed settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub svm_c: f64,
    /// `None`: `1 / (d · Var(X))` over all training entries.
    pub svm_gamma: Option<f64>,
    pub svm_tol: f64,
    pub svm_max_passes: usize,
    pub rf_trees: usize,
    /// `None`: `max(1, ⌊√d⌋)`.
    pub rf_max_features: Option<usize>,
    pub rf_bootstrap: bool,
    pub max_depth: Option<usize>,
    /// Inverse penalty strength; `λ = 1 / (C · N)`.
    pub lr_c: f64,
    pub lr_l1_ratio: f64,
    pub lr_max_iter: usize,
    pub lr_tol: f64,
    pub nn_hidden: Vec<usize>,
    pub nn_dropout: f64,
    pub nn_lr: f64,
    pub nn_epochs: usize,
    pub nn_batch: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            svm_c: 1.0,
            svm_gamma: None,
            svm_tol: 1e-3,
            svm_max_passes: 10_000,
            rf_trees: 100,
            rf_max_features: None,
            rf_bootstrap: true,
            max_depth: None,
            lr_c: 1.0,
            lr_l1_ratio: 0.5,
            lr_max_iter: 1000,
            lr_tol: 1e-4,
            nn_hidden: vec![512, 512],
            nn_dropout: 0.05,
            nn_lr: 1e-3,
            nn_epochs: 50,
            nn_batch: 32,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("invalid hyperparameter {what}")));
        if !(self.svm_c > 0.0) || self.svm_gamma.is_some_and(|g| !(g > 0.0)) || !(self.svm_tol > 0.0) {
            return bad("for SVM");
        }
        if self.svm_max_passes == 0 {
            return bad("svm_max_passes");
        }
        if self.rf_trees == 0 || self.rf_max_features == Some(0) || self.max_depth == Some(0) {
            return bad("for trees");
        }
        if !(self.lr_c > 0.0) || !(0.0..=1.0).contains(&self.lr_l1_ratio) || self.lr_max_iter == 0 || !(self.lr_tol >= 0.0)
        {
            return bad("for logistic regression");
        }
        if self.nn_hidden.contains(&0)
            || !(0.0..1.0).contains(&self.nn_dropout)
            || !(self.nn_lr > 0.0)
            || self.nn_epochs == 0
            || self.nn_batch == 0
        {
            return bad("for the dense network");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ClassifierKind,
    #[serde(default)]
    pub hyper: Hyperparams,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        Self {
            kind,
            hyper: Hyperparams::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelBody {
    DenseNn(DenseNn),
    Svm(SvmModel),
    Forest(RandomForest),
    Tree(DecisionTree),
    LogReg(LogisticRegression),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    /// Sorted distinct training labels; internal class `i` is `classes[i]`.
    pub classes: Vec<usize>,
    pub input_dim: usize,
    pub body: ModelBody,
}

/// Index of the first maximum.
pub(crate) fn argmax_first(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn check_finite(x: &ArrayView2<f64>) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite feature value".into()));
    }
    Ok(())
}

pub fn train_classifier(spec: &ModelSpec, x: ArrayView2<f64>, y: &[usize]) -> Result<TrainedModel> {
    spec.hyper.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::Geometry(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    if x.nrows() < 2 || x.ncols() == 0 {
        return Err(Error::Data(format!(
            "need at least 2 samples with 1 feature, got {}×{}",
            x.nrows(),
            x.ncols()
        )));
    }
    check_finite(&x)?;
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Label(format!("training labels contain a single class ({})", classes[0])));
    }
    let yi: Vec<usize> = y.iter().map(|l| classes.binary_search(l).expect("present")).collect();
    let k = classes.len();
    let h = &spec.hyper;
    let n = x.nrows();
    let d = x.ncols();
    let logreg = |penalty| {
        LogisticRegression::fit(
            x,
            &yi,
            k,
            &LogRegParams {
                penalty,
                lambda: 1.0 / (h.lr_c * n as f64),
                max_iter: h.lr_max_iter,
                tol: h.lr_tol,
            },
        )
    };
    let smo = SmoParams {
        c: h.svm_c,
        tol: h.svm_tol,
        max_passes: h.svm_max_passes,
    };
    let tree_params = |max_features| TreeParams {
        max_depth: h.max_depth,
        max_features,
    };
    let body = match spec.kind {
        ClassifierKind::DenseNn => {
            let p = DenseNnParams {
                hidden: h.nn_hidden.clone(),
                dropout: h.nn_dropout,
                lr: h.nn_lr,
                epochs: h.nn_epochs,
                batch_size: h.nn_batch,
            };
            ModelBody::DenseNn(DenseNn::fit(x, &yi, k, &p, spec.seed)?)
        }
        ClassifierKind::SvmLinear => ModelBody::Svm(SvmModel::fit(x, &yi, k, Kernel::Linear, &smo)?),
        ClassifierKind::SvmRbf => {
            let gamma = h.svm_gamma.unwrap_or_else(|| {
                let var = x.var(0.0);
                if var > 0.0 {
                    1.0 / (d as f64 * var)
                } else {
                    1.0
                }
            });
            ModelBody::Svm(SvmModel::fit(x, &yi, k, Kernel::Rbf { gamma }, &smo)?)
        }
        ClassifierKind::RandomForest => {
            let m = h.rf_max_features.unwrap_or(((d as f64).sqrt().floor() as usize).max(1));
            let p = ForestParams {
                n_trees: h.rf_trees,
                bootstrap: h.rf_bootstrap,
                tree: tree_params(Some(m.min(d))),
            };
            ModelBody::Forest(RandomForest::fit(x, &yi, k, &p, spec.seed))
        }
        ClassifierKind::DecisionTree => {
            let rows: Vec<usize> = (0..n).collect();
            let mut rng = tree_rng(spec.seed, 0);
            ModelBody::Tree(DecisionTree::fit(x, &yi, k, &rows, &tree_params(None), &mut rng))
        }
        ClassifierKind::LogregL1 => ModelBody::LogReg(logreg(Penalty::L1)),
        ClassifierKind::LogregL2 => ModelBody::LogReg(logreg(Penalty::L2)),
        ClassifierKind::LogregElasticnet => ModelBody::LogReg(logreg(Penalty::ElasticNet {
            l1_ratio: h.lr_l1_ratio,
        })),
    };
    Ok(TrainedModel {
        kind: spec.kind,
        classes,
        input_dim: d,
        body,
    })
}

impl TrainedModel {
    fn check(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim {
            return Err(Error::Geometry(format!(
                "model expects {} features, got {}",
                self.input_dim,
                x.ncols()
            )));
        }
        check_finite(x)
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        self.check(&x)?;
        let internal = match &self.body {
            ModelBody::Svm(m) => m.predict(x),
            ModelBody::Forest(m) => m.predict(x),
            ModelBody::Tree(m) => m.predict(x),
            ModelBody::DenseNn(_) | ModelBody::LogReg(_) => self
                .predict_proba(x)?
                .rows()
                .into_iter()
                .map(|r| argmax_first(r.iter().copied()))
                .collect(),
        };
        Ok(internal.into_iter().map(|i| self.classes[i]).collect())
    }

    /// Class probabilities with columns in `classes` order.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&x)?;
        match &self.body {
            ModelBody::DenseNn(m) => m.predict_proba(x),
            ModelBody::LogReg(m) => Ok(m.predict_proba(x)),
            _ => Err(Error::Config(format!("{} does not produce probabilities", self.kind))),
        }
    }
}
