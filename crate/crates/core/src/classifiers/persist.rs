//! `PBML` model files: magic, version, kind tag, then a kind-specific
//! payload of little-endian integers and 64-bit floats.

use std::io::{Read, Write};
use std::path::Path;

use super::{
    BinarySvm, ClassifierKind, DecisionTree, DenseNn, Kernel, LogisticRegression, ModelBody, Node, RandomForest,
    SvmModel, TrainedModel,
};
use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};
use crate::neural::{Activation, Dense, Mlp};

pub const PBML_MAGIC: &[u8; 4] = b"PBML";
pub const PBML_VERSION: u16 = 1;

fn write_tree<W: Write>(w: &mut Writer<W>, t: &DecisionTree) -> Result<()> {
    w.u32(t.n_classes)?;
    w.u32(t.nodes.len())?;
    for node in &t.nodes {
        match node {
            Node::Leaf { proba } => {
                w.u8(0)?;
                w.f64s(proba)?;
            }
            Node::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                w.u8(1)?;
                w.u32(*feature)?;
                w.f64(*threshold)?;
                w.u32(*left)?;
                w.u32(*right)?;
            }
        }
    }
    Ok(())
}

fn read_tree<R: Read>(r: &mut Reader<R>, input_dim: usize) -> Result<DecisionTree> {
    let n_classes = r.u32()?;
    let n_nodes = r.u32()?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        nodes.push(match r.u8()? {
            0 => Node::Leaf {
                proba: r.f64s(n_classes)?,
            },
            1 => {
                let feature = r.u32()?;
                let threshold = r.f64()?;
                let (left, right) = (r.u32()?, r.u32()?);
                if feature >= input_dim || left >= n_nodes || right >= n_nodes {
                    return Err(Error::Format("tree node index out of range".into()));
                }
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                }
            }
            t => return Err(Error::Format(format!("unknown tree node tag {t}"))),
        });
    }
    if nodes.is_empty() {
        return Err(Error::Format("empty tree".into()));
    }
    Ok(DecisionTree { nodes, n_classes })
}

fn write_model<W: Write>(m: &TrainedModel, w: W) -> Result<()> {
    let mut w = Writer(w);
    w.magic(PBML_MAGIC, PBML_VERSION)?;
    w.u8(m.kind.tag())?;
    w.u32(m.input_dim)?;
    w.usizes(&m.classes)?;
    match &m.body {
        ModelBody::DenseNn(nn) => {
            w.u32(nn.net.layers.len())?;
            for l in &nn.net.layers {
                w.u8(l.activation.tag())?;
                w.f64(l.dropout)?;
                w.array2(&l.weights)?;
                w.array1(&l.bias)?;
            }
        }
        ModelBody::Svm(s) => {
            match s.kernel {
                Kernel::Linear => w.u8(0)?,
                Kernel::Rbf { gamma } => {
                    w.u8(1)?;
                    w.f64(gamma)?;
                }
            }
            w.u32(s.n_classes)?;
            w.array2(&s.support_vectors)?;
            w.u32(s.machines.len())?;
            for mach in &s.machines {
                w.u32(mach.positive)?;
                w.u32(mach.negative)?;
                w.usizes(&mach.support)?;
                w.f64s(&mach.coef)?;
                w.f64(mach.bias)?;
            }
        }
        ModelBody::Forest(f) => {
            w.u32(f.n_classes)?;
            w.u32(f.trees.len())?;
            for t in &f.trees {
                write_tree(&mut w, t)?;
            }
        }
        ModelBody::Tree(t) => write_tree(&mut w, t)?,
        ModelBody::LogReg(lr) => {
            w.array2(&lr.weights)?;
            w.array1(&lr.intercept)?;
        }
    }
    Ok(())
}

fn read_model<R: Read>(r: R) -> Result<TrainedModel> {
    let mut r = Reader(r);
    r.magic(PBML_MAGIC, PBML_VERSION)?;
    let tag = r.u8()?;
    let kind = ClassifierKind::from_tag(tag).ok_or_else(|| Error::Format(format!("unknown model kind {tag}")))?;
    let input_dim = r.u32()?;
    let classes = r.usizes()?;
    let body = match kind {
        ClassifierKind::DenseNn => {
            let n = r.u32()?;
            let mut layers = Vec::with_capacity(n);
            for _ in 0..n {
                let act = Activation::from_tag(r.u8()?).ok_or_else(|| Error::Format("bad activation tag".into()))?;
                let dropout = r.f64()?;
                let weights = r.array2()?;
                let bias = r.array1()?;
                layers.push(Dense {
                    weights,
                    bias,
                    activation: act,
                    dropout,
                });
            }
            let chained = layers.windows(2).all(|p| p[0].output_dim() == p[1].input_dim());
            if layers.is_empty() || !chained || layers[0].input_dim() != input_dim {
                return Err(Error::Format("inconsistent network shapes".into()));
            }
            ModelBody::DenseNn(DenseNn { net: Mlp { layers } })
        }
        ClassifierKind::SvmLinear | ClassifierKind::SvmRbf => {
            let kernel = match r.u8()? {
                0 => Kernel::Linear,
                1 => Kernel::Rbf { gamma: r.f64()? },
                t => return Err(Error::Format(format!("unknown kernel tag {t}"))),
            };
            let n_classes = r.u32()?;
            let support_vectors = r.array2()?;
            let n = r.u32()?;
            let mut machines = Vec::with_capacity(n);
            for _ in 0..n {
                let positive = r.u32()?;
                let negative = r.u32()?;
                let support = r.usizes()?;
                let coef = r.f64s(support.len())?;
                let bias = r.f64()?;
                if support.iter().any(|&s| s >= support_vectors.nrows()) || positive.max(negative) >= n_classes {
                    return Err(Error::Format("SVM index out of range".into()));
                }
                machines.push(BinarySvm {
                    positive,
                    negative,
                    support,
                    coef,
                    bias,
                });
            }
            ModelBody::Svm(SvmModel {
                kernel,
                support_vectors,
                machines,
                n_classes,
            })
        }
        ClassifierKind::RandomForest => {
            let n_classes = r.u32()?;
            let n = r.u32()?;
            let trees = (0..n).map(|_| read_tree(&mut r, input_dim)).collect::<Result<_>>()?;
            ModelBody::Forest(RandomForest { trees, n_classes })
        }
        ClassifierKind::DecisionTree => ModelBody::Tree(read_tree(&mut r, input_dim)?),
        _ => ModelBody::LogReg(LogisticRegression {
            weights: r.array2()?,
            intercept: r.array1()?,
            objective: Vec::new(),
        }),
    };
    Ok(TrainedModel {
        kind,
        classes,
        input_dim,
        body,
    })
}

impl TrainedModel {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_model(self, &mut buf)?;
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        read_model(bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        Self::from_bytes(&bytes).map_err(|e| e.context(path.display().to_string()))
    }
}
