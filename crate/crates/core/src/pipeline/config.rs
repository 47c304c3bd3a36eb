//! Run configuration for `bench`: a TOML file with relative paths resolved
//! against the file's own directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, Hyperparams};
use crate::dataset::PhonemeInventory;
use crate::dsp::Representation;
use crate::error::{Error, Result};
use crate::eval::DEFAULT_FOLDS;

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "PHONEBENCH_SEED";

/// Trained encoder files for the bottleneck representations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct AeModels {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ae_small: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ae_big: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lstm_ae_small: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lstm_ae_big: Option<PathBuf>,
}

impl AeModels {
    pub fn get(&self, repr: Representation) -> Option<&Path> {
        match repr {
            Representation::AeSmall => self.ae_small.as_deref(),
            Representation::AeBig => self.ae_big.as_deref(),
            Representation::LstmAeSmall => self.lstm_ae_small.as_deref(),
            Representation::LstmAeBig => self.lstm_ae_big.as_deref(),
            _ => None,
        }
    }

    fn paths_mut(&mut self) -> [&mut Option<PathBuf>; 4] {
        [
            &mut self.ae_small,
            &mut self.ae_big,
            &mut self.lstm_ae_small,
            &mut self.lstm_ae_big,
        ]
    }
}

fn all_representations() -> Vec<Representation> {
    Representation::ALL.to_vec()
}

fn all_classifiers() -> Vec<ClassifierKind> {
    ClassifierKind::ALL.to_vec()
}

fn default_k() -> usize {
    DEFAULT_FOLDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    /// Inventory TSV; the built-in 33-class inventory when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inventory: Option<PathBuf>,
    /// Directory holding `<audio_id>.wav`; the manifest's directory when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default = "all_representations")]
    pub representations: Vec<Representation>,
    #[serde(default = "all_classifiers")]
    pub classifiers: Vec<ClassifierKind>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    /// Resample non-44.1 kHz audio instead of rejecting it.
    #[serde(default)]
    pub resample: bool,
    #[serde(default)]
    pub autoencoders: AeModels,
    #[serde(default)]
    pub hyper: Hyperparams,
}

impl RunConfig {
    /// Parses `text`; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: impl AsRef<Path>) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let base = base.as_ref();
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.manifest);
        fix(&mut cfg.output_dir);
        cfg.inventory.iter_mut().for_each(fix);
        cfg.audio_dir.iter_mut().for_each(fix);
        for p in cfg.autoencoders.paths_mut() {
            p.iter_mut().for_each(fix);
        }
        Ok(cfg)
    }

    /// Reads, resolves, applies the seed override, and validates.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = Self::parse(&text, base).map_err(|e| e.context(path.display().to_string()))?;
        cfg.apply_seed_override(std::env::var(SEED_ENV).ok().as_deref())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not a 64-bit unsigned integer")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.k)));
        }
        if self.representations.is_empty() || self.classifiers.is_empty() {
            return Err(Error::Config("representation and classifier lists must be non-empty".into()));
        }
        self.hyper.validate()?;
        let mut required = vec![self.manifest.as_path()];
        required.extend(self.inventory.as_deref());
        required.extend(self.audio_dir.as_deref());
        for &r in &self.representations {
            if r.needs_autoencoder() {
                match self.autoencoders.get(r) {
                    Some(p) => required.push(p),
                    None => return Err(Error::Config(format!("representation {r} needs an autoencoder model path"))),
                }
            }
        }
        for p in required {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn audio_dir(&self) -> PathBuf {
        self.audio_dir.clone().unwrap_or_else(|| {
            self.manifest
                .parent()
                .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
        })
    }

    pub fn load_inventory(&self) -> Result<PhonemeInventory> {
        match &self.inventory {
            Some(p) => PhonemeInventory::load(p),
            None => Ok(PhonemeInventory::default_inventory()),
        }
    }

    /// The configuration as it will actually run, in TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults_and_resolves_paths() {
        let cfg = RunConfig::parse("manifest = \"m.tsv\"\noutput_dir = \"/abs/out\"\n", "/base").unwrap();
        assert_eq!(cfg.manifest, PathBuf::from("/base/m.tsv"));
        assert_eq!(cfg.output_dir, PathBuf::from("/abs/out"));
        assert_eq!(cfg.audio_dir(), PathBuf::from("/base"));
        assert_eq!(cfg.representations.len(), 9);
        assert_eq!(cfg.classifiers.len(), 8);
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.hyper, Hyperparams::default());
    }

    #[test]
    fn full_config_parses() {
        let text = r#"
manifest = "m.tsv"
output_dir = "out"
representations = ["mfcc-segment", "ae-small"]
classifiers = ["dense_nn", "svm_rbf"]
k = 3
seed = 99

[autoencoders]
ae-small = "models/s.pbnn"

[hyper]
nn_epochs = 5
rf_trees = 10
"#;
        let cfg = RunConfig::parse(text, "b").unwrap();
        assert_eq!(cfg.representations, vec![Representation::MfccSegment, Representation::AeSmall]);
        assert_eq!(cfg.classifiers, vec![ClassifierKind::DenseNn, ClassifierKind::SvmRbf]);
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.autoencoders.get(Representation::AeSmall), Some(Path::new("b/models/s.pbnn")));
        assert_eq!(cfg.hyper.nn_epochs, 5);
        let again = RunConfig::parse(&cfg.to_toml().unwrap(), "").unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_and_names_are_config_errors() {
        for text in [
            "manifest = \"m\"\noutput_dir = \"o\"\nbogus = 1\n",
            "manifest = \"m\"\noutput_dir = \"o\"\nrepresentations = [\"mfcc\"]\n",
            "manifest = \"m\"\noutput_dir = \"o\"\n[hyper]\nnn_width = 3\n",
            "output_dir = \"o\"\n",
        ] {
            assert!(matches!(RunConfig::parse(text, "."), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn seed_override() {
        let mut cfg = RunConfig::parse("manifest = \"m\"\noutput_dir = \"o\"\nseed = 1\n", ".").unwrap();
        cfg.apply_seed_override(None).unwrap();
        assert_eq!(cfg.seed, 1);
        cfg.apply_seed_override(Some("18446744073709551615")).unwrap();
        assert_eq!(cfg.seed, u64::MAX);
        assert!(matches!(cfg.apply_seed_override(Some("-3")), Err(Error::Config(_))));
    }

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("m.tsv"), "").unwrap();
        let base = "manifest = \"m.tsv\"\noutput_dir = \"o\"\n";
        let cfg = RunConfig::parse(base, dir.path()).unwrap();
        // ae reps are in the default list but no model paths are given
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let traditional = format!("{base}representations = [\"mfcc-frame\"]\n");
        RunConfig::parse(&traditional, dir.path()).unwrap().validate().unwrap();
        let missing = format!("{traditional}inventory = \"nope.tsv\"\n");
        assert!(RunConfig::parse(&missing, dir.path()).unwrap().validate().is_err());
        let bad_k = format!("{traditional}k = 1\n");
        assert!(RunConfig::parse(&bad_k, dir.path()).unwrap().validate().is_err());
    }
}
