use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub validation: Vec<String>,
}

impl DatasetSplit {
    pub fn part(&self, name: &str) -> Option<&[String]> {
        match name {
            "train" => Some(&self.train),
            "test" => Some(&self.test),
            "validation" | "val" => Some(&self.validation),
            _ => None,
        }
    }
}

/// Shuffles `ids` with a seeded generator and cuts the result into
/// `(train, test, validation)` proportional to `ratios`. Test and validation
/// get `floor(n * ratio / total)` ids (at least one each); train takes the
/// remainder. When the minimums would leave train empty, the larger of test
/// and validation gives ids back.
pub fn split_dataset<S: AsRef<str>>(ids: &[S], ratios: (u32, u32, u32), seed: u64) -> Result<DatasetSplit> {
    let (r_train, r_test, r_val) = ratios;
    if r_train == 0 || r_test == 0 || r_val == 0 {
        return Err(Error::InvalidConfig(format!("split ratios must be positive, got {ratios:?}")));
    }
    let n = ids.len();
    if n < 3 {
        return Err(Error::NotEnoughIds { ids: n, parts: 3 });
    }
    let mut shuffled: Vec<String> = ids.iter().map(|s| s.as_ref().to_owned()).collect();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let total = (r_train + r_test + r_val) as u64;
    let share = |r: u32| ((n as u64 * r as u64 / total) as usize).max(1);
    let (mut n_test, mut n_val) = (share(r_test), share(r_val));
    while n_test + n_val >= n {
        if n_val >= n_test {
            n_val -= 1;
        } else {
            n_test -= 1;
        }
    }

    let validation = shuffled.split_off(n - n_val);
    let test = shuffled.split_off(n - n_val - n_test);
    Ok(DatasetSplit {
        train: shuffled,
        test,
        validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("img_{i:05}")).collect()
    }

    #[test]
    fn full_corpus_sizes() {
        let s = split_dataset(&ids(8000), (6, 1, 1), 0).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.validation.len()), (6000, 1000, 1000));
    }

    #[test]
    fn scaled_down_sizes() {
        let s = split_dataset(&ids(8), (6, 1, 1), 1).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.validation.len()), (6, 1, 1));
        let s = split_dataset(&ids(3), (6, 1, 1), 1).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.validation.len()), (1, 1, 1));
        let s = split_dataset(&ids(3), (1, 1, 4), 0).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.validation.len()), (1, 1, 1));
    }

    #[test]
    fn seeds_control_the_permutation() {
        let a = split_dataset(&ids(100), (6, 1, 1), 9).unwrap();
        assert_eq!(a, split_dataset(&ids(100), (6, 1, 1), 9).unwrap());
        assert_ne!(a, split_dataset(&ids(100), (6, 1, 1), 10).unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(split_dataset(&ids(2), (6, 1, 1), 0), Err(Error::NotEnoughIds { ids: 2, parts: 3 })));
        assert!(split_dataset(&ids(10), (6, 0, 1), 0).is_err());
    }

    proptest! {
        #[test]
        fn partitions_ids(n in 3usize..300, seed in any::<u64>(), a in 1u32..10, b in 1u32..10, c in 1u32..10) {
            let all = ids(n);
            let s = split_dataset(&all, (a, b, c), seed).unwrap();
            let mut seen = HashSet::new();
            for id in s.train.iter().chain(&s.test).chain(&s.validation) {
                prop_assert!(seen.insert(id.clone()), "duplicate {}", id);
            }
            prop_assert_eq!(seen.len(), n);
            prop_assert!(!s.train.is_empty() && !s.test.is_empty() && !s.validation.is_empty());
        }
    }
}
