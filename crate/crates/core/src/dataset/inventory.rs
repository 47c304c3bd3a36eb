use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_INVENTORY: &str = include_str!("../../data/default_inventory.tsv");

/// Label reserved for the "no phoneme" class.
pub const SILENCE_LABEL: &str = "SIL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Vowel,
    Consonant,
    Silence,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Vowel, Category::Consonant, Category::Silence];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Vowel => "vowel",
            Category::Consonant => "consonant",
            Category::Silence => "silence",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vowel" => Ok(Category::Vowel),
            "consonant" => Ok(Category::Consonant),
            "silence" => Ok(Category::Silence),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subgroup {
    Rounded,
    Unrounded,
    Affricate,
    Approximant,
    Fricative,
    Nasal,
    Plosive,
    Trill,
}

impl Subgroup {
    pub const ALL: [Subgroup; 8] = [
        Subgroup::Rounded,
        Subgroup::Unrounded,
        Subgroup::Affricate,
        Subgroup::Approximant,
        Subgroup::Fricative,
        Subgroup::Nasal,
        Subgroup::Plosive,
        Subgroup::Trill,
    ];

    pub fn category(self) -> Category {
        match self {
            Subgroup::Rounded | Subgroup::Unrounded => Category::Vowel,
            _ => Category::Consonant,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Subgroup::Rounded => "rounded",
            Subgroup::Unrounded => "unrounded",
            Subgroup::Affricate => "affricate",
            Subgroup::Approximant => "approximant",
            Subgroup::Fricative => "fricative",
            Subgroup::Nasal => "nasal",
            Subgroup::Plosive => "plosive",
            Subgroup::Trill => "trill",
        }
    }

    /// Plural heading used in rendered reports ("Rounded Vowels", "Nasals").
    pub fn display_name(self) -> &'static str {
        match self {
            Subgroup::Rounded => "Rounded Vowels",
            Subgroup::Unrounded => "Unrounded Vowels",
            Subgroup::Affricate => "Affricates",
            Subgroup::Approximant => "Approximants",
            Subgroup::Fricative => "Fricatives",
            Subgroup::Nasal => "Nasals",
            Subgroup::Plosive => "Plosives",
            Subgroup::Trill => "Trills",
        }
    }
}

impl fmt::Display for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subgroup {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Subgroup::ALL
            .iter()
            .copied()
            .find(|g| g.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown subgroup `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhonemeClass {
    pub label: String,
    pub category: Category,
    pub subgroup: Option<Subgroup>,
}

/// Ordered label set with its vowel/consonant/silence taxonomy.
///
/// Class order is significant: it defines class indices everywhere else
/// (confusion matrices, classifier outputs, tie-breaking).
#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeInventory {
    classes: Vec<PhonemeClass>,
    index: HashMap<String, usize>,
}

impl PhonemeInventory {
    pub fn new(classes: Vec<PhonemeClass>) -> Result<Self> {
        let mut index = HashMap::with_capacity(classes.len());
        let mut silences = 0;
        for (i, class) in classes.iter().enumerate() {
            if class.label.is_empty() || class.label.chars().any(char::is_whitespace) {
                return Err(Error::Inventory(format!(
                    "label `{}` must be non-empty and contain no whitespace",
                    class.label
                )));
            }
            match (class.category, class.subgroup) {
                (Category::Silence, None) => silences += 1,
                (Category::Silence, Some(g)) => {
                    return Err(Error::Inventory(format!(
                        "silence class `{}` cannot have subgroup {g}",
                        class.label
                    )))
                }
                (cat, None) => {
                    return Err(Error::Inventory(format!(
                        "{cat} class `{}` needs a subgroup",
                        class.label
                    )))
                }
                (cat, Some(g)) if g.category() != cat => {
                    return Err(Error::Inventory(format!(
                        "subgroup {g} is not a {cat} subgroup (class `{}`)",
                        class.label
                    )))
                }
                _ => {}
            }
            if index.insert(class.label.clone(), i).is_some() {
                return Err(Error::Inventory(format!("duplicate label `{}`", class.label)));
            }
        }
        if silences != 1 {
            return Err(Error::Inventory(format!(
                "exactly one silence class required, found {silences}"
            )));
        }
        Ok(Self { classes, index })
    }

    /// The shipped 33-class inventory (10 vowels, 22 consonants, silence).
    pub fn default_inventory() -> Self {
        Self::parse(DEFAULT_INVENTORY).expect("bundled inventory is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| e.context(path.display().to_string()))
    }

    /// Parses the `label  category  subgroup` TSV format. `-` or an empty
    /// cell marks "no subgroup".
    pub fn parse(text: &str) -> Result<Self> {
        let mut classes = Vec::new();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, header)) => {
                let cols: Vec<&str> = header.split_whitespace().collect();
                if cols != ["label", "category", "subgroup"] {
                    return Err(Error::Parse {
                        line: 1,
                        msg: format!("expected header `label category subgroup`, got `{header}`"),
                    });
                }
            }
            None => return Err(Error::Inventory("empty inventory file".into())),
        }
        for (i, line) in lines {
            let line_no = i + 1;
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() < 2 || cols.len() > 3 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 3 columns, got {}", cols.len()),
                });
            }
            let category = cols[1]
                .parse::<Category>()
                .map_err(|msg| Error::Parse { line: line_no, msg })?;
            let subgroup = match cols.get(2).copied() {
                None | Some("-") => None,
                Some(s) => Some(
                    s.parse::<Subgroup>()
                        .map_err(|msg| Error::Parse { line: line_no, msg })?,
                ),
            };
            classes.push(PhonemeClass {
                label: cols[0].to_string(),
                category,
                subgroup,
            });
        }
        Self::new(classes)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("label\tcategory\tsubgroup\n");
        for c in &self.classes {
            let sub = c.subgroup.map_or("-", Subgroup::as_str);
            out.push_str(&format!("{}\t{}\t{}\n", c.label, c.category, sub));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[PhonemeClass] {
        &self.classes
    }

    pub fn class(&self, index: usize) -> &PhonemeClass {
        &self.classes[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().map(|c| c.label.as_str())
    }

    pub fn silence_index(&self) -> usize {
        self.classes
            .iter()
            .position(|c| c.category == Category::Silence)
            .expect("validated inventory has a silence class")
    }

    /// Subgroups present in this inventory, in canonical order.
    pub fn subgroups(&self) -> Vec<Subgroup> {
        Subgroup::ALL
            .iter()
            .copied()
            .filter(|g| self.classes.iter().any(|c| c.subgroup == Some(*g)))
            .collect()
    }

    pub fn members_of_subgroup(&self, group: Subgroup) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.classes[i].subgroup == Some(group))
            .collect()
    }

    pub fn members_of_category(&self, category: Category) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.classes[i].category == category)
            .collect()
    }

    /// Uniform-guessing accuracy, `1 / |classes|`.
    pub fn chance_baseline(&self) -> f64 {
        1.0 / self.len() as f64
    }
}
