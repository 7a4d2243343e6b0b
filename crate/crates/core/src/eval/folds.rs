//! Subject-grouped k-fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub validation: Vec<String>,
    pub training: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// Disjoint validation groups covering every subject, none training on itself.
    pub fn check(&self, subjects: &[String]) -> Result<()> {
        let mut seen: Vec<&String> = self.folds.iter().flat_map(|f| &f.validation).collect();
        seen.sort();
        let before = seen.len();
        seen.dedup();
        if seen.len() != before {
            return Err(Error::Invariant("a subject validates in more than one fold".into()));
        }
        let mut all: Vec<&String> = subjects.iter().collect();
        all.sort();
        all.dedup();
        if seen != all {
            return Err(Error::Invariant("validation groups do not cover the subjects".into()));
        }
        for (i, f) in self.folds.iter().enumerate() {
            if f.training.iter().any(|s| f.validation.contains(s)) {
                return Err(Error::Invariant(format!("fold {i} trains on a validation subject")));
            }
        }
        Ok(())
    }
}

/// Shuffle subjects with `seed`, deal them round-robin into `k` groups;
/// fold `i` validates on group `i` and trains on the others.
pub fn group_kfold(subjects: &[String], k: usize, seed: u64) -> Result<FoldPlan> {
    let mut unique: Vec<String> = subjects.to_vec();
    unique.sort();
    unique.dedup();
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if unique.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} subjects cannot fill {k} folds",
            unique.len()
        )));
    }
    unique.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut groups = vec![Vec::new(); k];
    for (i, s) in unique.into_iter().enumerate() {
        groups[i % k].push(s);
    }
    let folds = (0..k)
        .map(|i| Fold {
            validation: groups[i].clone(),
            training: groups
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, g)| g.iter().cloned())
                .collect(),
        })
        .collect();
    Ok(FoldPlan { folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subjects(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i:02}")).collect()
    }

    #[test]
    fn ten_subjects_five_folds() {
        let plan = group_kfold(&subjects(10), 5, 7).unwrap();
        assert!(plan.folds.iter().all(|f| f.validation.len() == 2 && f.training.len() == 8));
        plan.check(&subjects(10)).unwrap();
    }

    #[test]
    fn twenty_two_subjects_group_sizes() {
        let plan = group_kfold(&subjects(22), 5, 1).unwrap();
        let sizes: Vec<usize> = plan.folds.iter().map(|f| f.validation.len()).collect();
        assert_eq!(sizes, vec![5, 5, 4, 4, 4]);
        plan.check(&subjects(22)).unwrap();
    }

    #[test]
    fn seed_controls_assignment() {
        let a = group_kfold(&subjects(12), 3, 5).unwrap();
        assert_eq!(a, group_kfold(&subjects(12), 3, 5).unwrap());
        assert_ne!(a, group_kfold(&subjects(12), 3, 6).unwrap());
    }

    #[test]
    fn too_few_subjects() {
        assert!(group_kfold(&subjects(4), 5, 0).is_err());
    }
}
