use rand::seq::SliceRandom;

use crate::error::{Error, Result};

/// Seeded stratified k-fold split. Each class is shuffled and dealt
/// round-robin, the second class continuing where the first stopped, so
/// per-fold class counts are within one of proportional and fold sizes
/// within one of each other.
pub fn stratified_kfold(y: &[u8], k: usize, seed: u64, path: &[u64]) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {k}")));
    }
    let mut rng = crate::rng::stream(seed, path);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if idx.len() < k {
            return Err(Error::ClassTooSmall {
                class,
                count: idx.len(),
                folds: k,
            });
        }
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Complement of one fold.
pub fn train_indices(folds: &[Vec<usize>], held_out: usize) -> Vec<usize> {
    let mut t: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != held_out)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    t.sort_unstable();
    t
}

/// Seeded stratified split into (train, test) with `fraction` of each class
/// held out (rounded, at least one row per class).
pub fn stratified_holdout(y: &[u8], fraction: f64, seed: u64, path: &[u64]) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("holdout fraction {fraction} outside (0, 1)")));
    }
    let mut rng = crate::rng::stream(seed, path);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if idx.len() < 2 {
            return Err(Error::ClassTooSmall {
                class,
                count: idx.len(),
                folds: 2,
            });
        }
        idx.shuffle(&mut rng);
        let n_test = ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len() - 1);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
