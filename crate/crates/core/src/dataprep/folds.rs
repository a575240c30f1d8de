use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub test: Vec<usize>,
    pub train: Vec<usize>,
    /// Observations excluded from both sets (class balancing).
    pub dropped: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    /// Test fold of each observation.
    pub assignment: Vec<usize>,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    fn from_assignment(assignment: Vec<usize>, k: usize) -> Self {
        let folds = (0..k)
            .map(|f| {
                let (test, train): (Vec<usize>, Vec<usize>) =
                    (0..assignment.len()).partition(|&i| assignment[i] == f);
                Fold {
                    test,
                    train,
                    dropped: Vec::new(),
                }
            })
            .collect();
        FoldPlan { assignment, folds }
    }
}

/// Stratified `k`-fold plan: each class is shuffled and dealt round-robin
/// across folds, so per-fold class counts differ by at most one.
pub fn kfold_stratified(labels: &[bool], k: usize, seed: u64) -> Result<FoldPlan> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::TooMany {
            what: "folds (need 2 <= k <= n)",
            requested: k,
            available: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| labels[i]);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut assignment = vec![0; n];
    for (slot, &i) in pos.iter().chain(neg.iter()).enumerate() {
        assignment[i] = slot % k;
    }
    Ok(FoldPlan::from_assignment(assignment, k))
}

/// Leave-one-out plan where each fold also drops one random observation of
/// the opposite class from training, so every training set has the same
/// class counts.
pub fn loocv_balanced(labels: &[bool], seed: u64) -> Result<FoldPlan> {
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i]);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let folds = (0..labels.len())
        .map(|i| {
            let other = if labels[i] { &neg } else { &pos };
            let j = other[rng.random_range(0..other.len())];
            Fold {
                test: vec![i],
                train: (0..labels.len()).filter(|&t| t != i && t != j).collect(),
                dropped: vec![j],
            }
        })
        .collect();
    Ok(FoldPlan {
        assignment: (0..labels.len()).collect(),
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n_pos: usize, n_neg: usize) -> Vec<bool> {
        let mut v = vec![true; n_pos];
        v.extend(vec![false; n_neg]);
        // interleave a little so index order is not class order
        v.rotate_left(n_pos / 2);
        v
    }

    #[test]
    fn kfold_partitions_and_stratifies() {
        let y = labels(23, 41);
        let plan = kfold_stratified(&y, 10, 3).unwrap();
        let mut seen = vec![0; y.len()];
        for f in &plan.folds {
            for &i in &f.test {
                seen[i] += 1;
            }
            assert_eq!(f.test.len() + f.train.len(), y.len());
        }
        assert!(seen.iter().all(|&c| c == 1));
        let pos_counts: Vec<usize> = plan
            .folds
            .iter()
            .map(|f| f.test.iter().filter(|&&i| y[i]).count())
            .collect();
        let (lo, hi) = (
            *pos_counts.iter().min().unwrap(),
            *pos_counts.iter().max().unwrap(),
        );
        assert!(hi - lo <= 1);
        let sizes: Vec<usize> = plan.folds.iter().map(|f| f.test.len()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn kfold_with_k_equal_n_is_leave_one_out() {
        let y = labels(5, 5);
        let plan = kfold_stratified(&y, 10, 0).unwrap();
        assert!(plan.folds.iter().all(|f| f.test.len() == 1 && f.train.len() == 9));
    }

    #[test]
    fn kfold_is_seeded() {
        let y = labels(12, 18);
        assert_eq!(kfold_stratified(&y, 5, 9).unwrap(), kfold_stratified(&y, 5, 9).unwrap());
        assert_ne!(kfold_stratified(&y, 5, 9).unwrap(), kfold_stratified(&y, 5, 10).unwrap());
    }

    #[test]
    fn kfold_rejects_too_many_folds() {
        assert!(kfold_stratified(&labels(2, 2), 5, 0).is_err());
    }

    #[test]
    fn balanced_loocv_contract() {
        let y = labels(22, 40);
        let plan = loocv_balanced(&y, 17).unwrap();
        assert_eq!(plan.folds.len(), y.len());
        let n_pos = y.iter().filter(|&&v| v).count();
        for (i, f) in plan.folds.iter().enumerate() {
            assert_eq!(f.test, vec![i]);
            assert_eq!(f.train.len(), y.len() - 2);
            let j = f.dropped[0];
            assert_ne!(j, i);
            assert_ne!(y[j], y[i]);
            assert!(!f.train.contains(&j) && !f.train.contains(&i));
            let train_pos = f.train.iter().filter(|&&t| y[t]).count();
            assert_eq!(train_pos, n_pos - 1);
        }
        assert_eq!(plan, loocv_balanced(&y, 17).unwrap());
    }

    #[test]
    fn balanced_loocv_needs_both_classes() {
        assert!(loocv_balanced(&[true, true], 0).is_err());
    }
}
