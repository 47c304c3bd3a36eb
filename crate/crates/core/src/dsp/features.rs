//! Labelled feature matrices and their CSV / `PBFT` binary encodings.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use crate::error::{Error, Result};

pub const PBFT_MAGIC: &[u8; 4] = b"PBFT";
pub const PBFT_VERSION: u16 = 1;

/// `N × d` feature rows with one string label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: Array2<f64>,
    pub labels: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(data: Array2<f64>, labels: Vec<String>) -> Result<Self> {
        if data.nrows() != labels.len() {
            return Err(Error::Geometry(format!(
                "{} rows but {} labels",
                data.nrows(),
                labels.len()
            )));
        }
        Ok(Self { data, labels })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<String>, dim: usize) -> Result<Self> {
        let n = rows.len();
        let mut flat = Vec::with_capacity(n * dim);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(Error::Geometry(format!("row {i} has {} values, expected {dim}", r.len())));
            }
            flat.extend(r);
        }
        let data = Array2::from_shape_vec((n, dim), flat).expect("shape checked");
        Self::new(data, labels)
    }

    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from("label");
        for j in 0..self.dim() {
            out.push_str(&format!(",f{j}"));
        }
        out.push('\n');
        for (row, label) in self.data.rows().into_iter().zip(&self.labels) {
            if label.contains([',', '"', '\n', '\r']) {
                return Err(Error::Format(format!("label `{label}` cannot be written to CSV")));
            }
            out.push_str(label);
            for v in row {
                // `{}` is the shortest representation that round-trips
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "empty CSV".into() })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.first() != Some(&"label") || cols[1..].iter().enumerate().any(|(j, c)| *c != format!("f{j}")) {
            return Err(Error::Parse {
                line: 1,
                msg: "expected header `label,f0,...`".into(),
            });
        }
        let dim = cols.len() - 1;
        let mut flat = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            labels.push(parts.next().unwrap_or_default().to_string());
            let mut count = 0;
            for p in parts {
                flat.push(p.parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("bad value `{p}`"),
                })?);
                count += 1;
            }
            if count != dim {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected {dim} values, got {count}"),
                });
            }
        }
        let data = Array2::from_shape_vec((labels.len(), dim), flat).expect("counts checked");
        Self::new(data, labels)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(PBFT_MAGIC)?;
        w.write_u16::<LittleEndian>(PBFT_VERSION)?;
        w.write_u32::<LittleEndian>(self.dim() as u32)?;
        w.write_u64::<LittleEndian>(self.n_rows() as u64)?;
        for v in self.data.iter() {
            w.write_f64::<LittleEndian>(*v)?;
        }
        for label in &self.labels {
            w.write_u32::<LittleEndian>(label.len() as u32)?;
            w.write_all(label.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != PBFT_MAGIC {
            return Err(Error::Format("not a PBFT feature file".into()));
        }
        let version = r.read_u16::<LittleEndian>()?;
        if version != PBFT_VERSION {
            return Err(Error::Format(format!("unsupported PBFT version {version}")));
        }
        let dim = r.read_u32::<LittleEndian>()? as usize;
        let n = r.read_u64::<LittleEndian>()? as usize;
        let mut flat = vec![0.0; n * dim];
        r.read_f64_into::<LittleEndian>(&mut flat)?;
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            labels.push(String::from_utf8(buf).map_err(|_| Error::Format("label is not UTF-8".into()))?);
        }
        let data = Array2::from_shape_vec((n, dim), flat).expect("sized");
        Self::new(data, labels)
    }

    /// Writes CSV for `.csv` paths, `PBFT` binary for `.pbft`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        match extension(path).as_deref() {
            Some("csv") => std::fs::write(path, self.to_csv()?)?,
            Some("pbft") => {
                let mut buf = Vec::new();
                self.write_binary(&mut buf)?;
                std::fs::write(path, buf)?;
            }
            _ => {
                return Err(Error::Config(format!(
                    "{}: feature files must end in .csv or .pbft",
                    path.display()
                )))
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        match extension(path).as_deref() {
            Some("csv") => Self::from_csv(&std::fs::read_to_string(path)?),
            Some("pbft") => Self::read_binary(std::io::BufReader::new(std::fs::File::open(path)?)),
            _ => Err(Error::Config(format!(
                "{}: feature files must end in .csv or .pbft",
                path.display()
            ))),
        }
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(values: Vec<f64>, n: usize, d: usize) -> FeatureMatrix {
        let labels = (0..n).map(|i| ["a", "ʃ", "SIL"][i % 3].to_string()).collect();
        FeatureMatrix::new(Array2::from_shape_vec((n, d), values).unwrap(), labels).unwrap()
    }

    proptest! {
        #[test]
        fn csv_and_binary_round_trip(
            (n, d, values) in (0usize..6, 1usize..5).prop_flat_map(|(n, d)| {
                (Just(n), Just(d), proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, n * d))
            })
        ) {
            let m = matrix(values, n, d);
            let csv = FeatureMatrix::from_csv(&m.to_csv().unwrap()).unwrap();
            prop_assert_eq!(&csv.labels, &m.labels);
            prop_assert!(csv.data.iter().zip(m.data.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
            let mut buf = Vec::new();
            m.write_binary(&mut buf).unwrap();
            let bin = FeatureMatrix::read_binary(&buf[..]).unwrap();
            prop_assert!(bin.data.iter().zip(m.data.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(bin.labels, m.labels);
        }
    }

    #[test]
    fn binary_layout() {
        let m = matrix(vec![1.0, 2.0], 1, 2);
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"PBFT");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(u32::from_le_bytes(buf[6..10].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[10..18].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(buf[18..26].try_into().unwrap()), 1.0);
        assert_eq!(buf.len(), 18 + 16 + 4 + 1);
    }

    #[test]
    fn csv_header() {
        let m = matrix(vec![0.5, -1.25, 3.0], 1, 3);
        assert!(m.to_csv().unwrap().starts_with("label,f0,f1,f2\na,0.5,-1.25,3\n"));
    }

    #[test]
    fn extension_dispatch() {
        let dir = tempfile::tempdir().unwrap();
        let m = matrix(vec![0.1; 6], 3, 2);
        for name in ["x.csv", "x.pbft"] {
            let p = dir.path().join(name);
            m.save(&p).unwrap();
            assert_eq!(FeatureMatrix::load(&p).unwrap(), m);
        }
        assert!(m.save(dir.path().join("x.txt")).is_err());
    }
}
