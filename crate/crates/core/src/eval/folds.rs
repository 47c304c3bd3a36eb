use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Assignment of every sample to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignment: Vec<usize>,
    /// One message per class that cannot appear in every fold.
    pub warnings: Vec<String>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }

    /// `counts[class][fold]`.
    pub fn class_fold_counts(&self, y: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
        let mut c = vec![vec![0; self.k]; n_classes];
        for (&label, &f) in y.iter().zip(&self.assignment) {
            c[label][f] += 1;
        }
        c
    }
}

/// Stratified folds: each class is shuffled by `seed` and dealt round-robin.
/// The dealing position carries over from one class to the next (classes in
/// ascending label order), so total fold sizes also differ by at most one.
pub fn stratified_folds(y: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if y.len() < k {
        return Err(Error::Data(format!("{} samples cannot fill {k} folds", y.len())));
    }
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; y.len()];
    let mut warnings = Vec::new();
    let mut next = 0;
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            let msg = format!("class {c} has {} samples, fewer than {k} folds", members.len());
            log::warn!("{msg}");
            warnings.push(msg);
        }
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan {
        k,
        seed,
        assignment,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_division() {
        let y: Vec<usize> = std::iter::repeat(0).take(10).chain(std::iter::repeat(1).take(5)).collect();
        let plan = stratified_folds(&y, 5, 3).unwrap();
        let c = plan.class_fold_counts(&y, 2);
        assert_eq!(c[0], vec![2; 5]);
        assert_eq!(c[1], vec![1; 5]);
        assert!(plan.warnings.is_empty());
    }

    #[test]
    fn seven_samples() {
        let plan = stratified_folds(&[0; 7], 5, 1).unwrap();
        let mut c = plan.class_fold_counts(&[0; 7], 1).remove(0);
        c.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(c, vec![2, 2, 1, 1, 1]);
    }

    #[test]
    fn small_class_warns() {
        let y = [0, 0, 0, 0, 0, 1, 1, 1];
        let plan = stratified_folds(&y, 5, 0).unwrap();
        assert_eq!(plan.warnings.len(), 1);
        let c = plan.class_fold_counts(&y, 2);
        assert_eq!(c[1].iter().filter(|&&v| v == 0).count(), 2);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(stratified_folds(&[0, 1, 0], 5, 0), Err(Error::Data(_))));
    }

    proptest! {
        #[test]
        fn balanced_partition(y in proptest::collection::vec(0usize..6, 5..120), k in 2usize..7, seed: u64) {
            prop_assume!(y.len() >= k);
            let plan = stratified_folds(&y, k, seed).unwrap();
            prop_assert!(plan.assignment.iter().all(|&f| f < k));
            for counts in plan.class_fold_counts(&y, 6) {
                let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
                prop_assert!(hi - lo <= 1);
            }
            let sizes: Vec<usize> = (0..k).map(|f| plan.test_indices(f).len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert_eq!(sizes.iter().sum::<usize>(), y.len());
            prop_assert_eq!(&stratified_folds(&y, k, seed).unwrap(), &plan);
        }
    }
}
