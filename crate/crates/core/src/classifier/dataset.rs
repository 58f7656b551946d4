//! Labelled model inputs with a train/val/test split by source recording.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ClassifierError;
use crate::spectral::ModelInput;
use crate::NUM_CLASSES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(ClassifierError::InvalidConfig(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub input: ModelInput,
    pub label: usize,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetIndex {
    entries: Vec<Entry>,
    split: BTreeMap<String, Split>,
}

impl DatasetIndex {
    /// Splits sources 80/10/10, stratified by label, shuffled with `seed`.
    ///
    /// Every slice of a recording follows its source into the same split. A
    /// class with at least three sources gets at least one in val and test.
    pub fn new(entries: Vec<Entry>, seed: u64) -> Result<Self, ClassifierError> {
        let mut by_class: Vec<Vec<String>> = vec![Vec::new(); NUM_CLASSES];
        let mut seen = BTreeMap::new();
        for e in &entries {
            if e.label >= NUM_CLASSES {
                return Err(ClassifierError::BadLabel(e.label));
            }
            if seen.insert(e.source_id.clone(), e.label).is_none() {
                by_class[e.label].push(e.source_id.clone());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut split = BTreeMap::new();
        for sources in &mut by_class {
            sources.shuffle(&mut rng);
            let n = sources.len();
            let mut held = (n as f64 * 0.1).round() as usize;
            if n >= 3 {
                held = held.max(1);
            }
            for (i, s) in sources.iter().enumerate() {
                let part = if i < held {
                    Split::Test
                } else if i < 2 * held {
                    Split::Val
                } else {
                    Split::Train
                };
                split.insert(s.clone(), part);
            }
        }
        Ok(Self { entries, split })
    }

    /// Uses a caller-provided assignment; every source must be assigned.
    pub fn with_split(
        entries: Vec<Entry>,
        split: BTreeMap<String, Split>,
    ) -> Result<Self, ClassifierError> {
        for e in &entries {
            if e.label >= NUM_CLASSES {
                return Err(ClassifierError::BadLabel(e.label));
            }
            if !split.contains_key(&e.source_id) {
                return Err(ClassifierError::InvalidConfig(format!(
                    "source `{}` has no split",
                    e.source_id
                )));
            }
        }
        Ok(Self { entries, split })
    }

    /// Every entry in one split.
    pub fn all_in(entries: Vec<Entry>, part: Split) -> Result<Self, ClassifierError> {
        let split = entries.iter().map(|e| (e.source_id.clone(), part)).collect();
        Self::with_split(entries, split)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn split_map(&self) -> &BTreeMap<String, Split> {
        &self.split
    }

    pub fn split_of(&self, source_id: &str) -> Option<Split> {
        self.split.get(source_id).copied()
    }

    /// Entry indices belonging to `part`, in insertion order.
    pub fn indices(&self, part: Split) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| self.split[&e.source_id] == part)
            .map(|(i, _)| i)
            .collect()
    }

    /// Per-class entry counts in `part`.
    pub fn class_counts(&self, part: Split) -> [u64; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for i in self.indices(part) {
            counts[self.entries[i].label] += 1;
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn entries(sources_per_class: usize, slices: usize) -> Vec<Entry> {
        let mut out = Vec::new();
        for label in 0..NUM_CLASSES {
            for s in 0..sources_per_class {
                for _ in 0..slices {
                    out.push(Entry {
                        input: ModelInput::new(Matrix::zeros(2, 2)),
                        label,
                        source_id: format!("c{label}_n{s}"),
                    });
                }
            }
        }
        out
    }

    #[test]
    fn split_is_80_10_10_per_class() {
        let idx = DatasetIndex::new(entries(88, 3), 1).unwrap();
        let test = idx.class_counts(Split::Test);
        let val = idx.class_counts(Split::Val);
        let train = idx.class_counts(Split::Train);
        for c in 0..NUM_CLASSES {
            assert_eq!(test[c], 27);
            assert_eq!(val[c], 27);
            assert_eq!(train[c], 210);
        }
    }

    #[test]
    fn small_classes_still_get_held_out_sources() {
        let idx = DatasetIndex::new(entries(3, 1), 0).unwrap();
        assert!(idx.class_counts(Split::Test).iter().all(|&c| c == 1));
        assert!(idx.class_counts(Split::Val).iter().all(|&c| c == 1));
    }

    #[test]
    fn with_split_requires_full_assignment() {
        let e = entries(1, 1);
        assert!(DatasetIndex::with_split(e.clone(), BTreeMap::new()).is_err());
        let idx = DatasetIndex::all_in(e, Split::Test).unwrap();
        assert_eq!(idx.indices(Split::Test).len(), NUM_CLASSES);
        assert!(idx.indices(Split::Train).is_empty());
    }

    proptest! {
        #[test]
        fn no_source_spans_two_splits(seed in any::<u64>(), n in 1usize..20, slices in 1usize..4) {
            let idx = DatasetIndex::new(entries(n, slices), seed).unwrap();
            let mut per_source: BTreeMap<&str, BTreeSet<Split>> = BTreeMap::new();
            for part in [Split::Train, Split::Val, Split::Test] {
                for i in idx.indices(part) {
                    per_source.entry(&idx.entries()[i].source_id).or_default().insert(part);
                }
            }
            prop_assert_eq!(per_source.len(), n * NUM_CLASSES);
            prop_assert!(per_source.values().all(|s| s.len() == 1));
        }
    }
}
