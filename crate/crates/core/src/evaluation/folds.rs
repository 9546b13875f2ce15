use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of every row to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn n_rows(&self) -> usize {
        self.assignments.len()
    }

    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&r| self.assignments[r] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&r| self.assignments[r] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles each class by `seed` and deals its rows round-robin to the folds.
/// The deal position carries over from one class to the next, so total fold
/// sizes and per-class fold counts each differ by at most one.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::ParameterOutOfRange(format!(
            "K={k} must be at least 2"
        )));
    }
    if k > n {
        return Err(Error::KTooLarge { k, rows: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; n];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..n).filter(|&r| labels[r] == class).collect();
        if !rows.is_empty() && rows.len() < k {
            log::warn!(
                "class {class} has {} rows for {k} folds; some folds lack it",
                rows.len()
            );
        }
        rows.shuffle(&mut rng);
        for r in rows {
            assignments[r] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cohort_of_41() {
        let labels: Vec<u8> = (0..41).map(|i| (i < 21) as u8).collect();
        let plan = stratified_kfold(&labels, 10, 1).unwrap();
        assert!(plan.fold_sizes().iter().all(|&s| s == 4 || s == 5));
        for f in 0..10 {
            let rows = plan.test_rows(f);
            let p = rows.iter().filter(|&&r| labels[r] == 1).count();
            let c = rows.len() - p;
            assert!(
                (2..=3).contains(&p) && (2..=3).contains(&c),
                "fold {f}: {p}/{c}"
            );
        }
    }

    #[test]
    fn leave_one_out_and_limits() {
        let labels = [0, 1, 0, 1, 1];
        let plan = stratified_kfold(&labels, 5, 0).unwrap();
        assert_eq!(plan.fold_sizes(), vec![1; 5]);
        assert!(matches!(
            stratified_kfold(&labels, 6, 0),
            Err(Error::KTooLarge { k: 6, rows: 5 })
        ));
        assert!(stratified_kfold(&labels, 1, 0).is_err());
    }

    #[test]
    fn seeded() {
        let labels: Vec<u8> = (0..41).map(|i| (i % 3 == 0) as u8).collect();
        let a = stratified_kfold(&labels, 10, 7).unwrap();
        assert_eq!(a, stratified_kfold(&labels, 10, 7).unwrap());
        let b = stratified_kfold(&labels, 10, 8).unwrap();
        assert_ne!(a.assignments, b.assignments);
        let mut sa = a.fold_sizes();
        let mut sb = b.fold_sizes();
        sa.sort();
        sb.sort();
        assert_eq!(sa, sb);
    }
}
