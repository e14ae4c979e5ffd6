//! PATE-style prediction perturbation: disjoint teacher shards and a noisy
//! argmax over their votes.

use ndarray::{ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;

use crate::mechanisms::{laplace_scale, sample_laplace, PrivacyBudget, RngState, Sensitivity};
use crate::model::{predict_proba_row, train, LogisticModel, TrainConfig};
use crate::{Error, Result};

pub const DEFAULT_NUM_TEACHERS: usize = 10;

/// Reshuffles tried before giving up on shards that each hold both classes.
const PARTITION_ATTEMPTS: usize = 10;

/// One vote changes two class counts by one each.
const VOTE_SENSITIVITY: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TeacherEnsemble {
    teachers: Vec<LogisticModel>,
    /// Row indices (into the training matrix) of each teacher's shard.
    partition: Vec<Vec<usize>>,
}

impl TeacherEnsemble {
    pub fn teachers(&self) -> &[LogisticModel] {
        &self.teachers
    }

    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    pub fn num_teachers(&self) -> usize {
        self.teachers.len()
    }

    /// Vote counts `(n₀, n₁)` for one row.
    pub fn votes_row(&self, row: ArrayView1<f64>) -> Result<(usize, usize)> {
        if self.teachers.is_empty() {
            return Err(Error::Empty("teacher ensemble has no teachers".into()));
        }
        let mut ones = 0;
        for t in &self.teachers {
            if predict_proba_row(t, row)? >= 0.5 {
                ones += 1;
            }
        }
        Ok((self.teachers.len() - ones, ones))
    }

    pub fn votes(&self, features: ArrayView2<f64>) -> Result<Vec<(usize, usize)>> {
        features.axis_iter(Axis(0)).map(|r| self.votes_row(r)).collect()
    }
}

/// Near-equal shard sizes; the first `n mod k` shards get one extra row.
fn shard_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

pub fn pate_train(
    features: ArrayView2<f64>,
    labels: &[u8],
    num_teachers: usize,
    config: &TrainConfig,
    rng: &mut RngState,
) -> Result<TeacherEnsemble> {
    let n = labels.len();
    if num_teachers < 2 {
        return Err(Error::invalid("num_teachers", format!("must be at least 2, got {num_teachers}")));
    }
    if num_teachers * 4 > n {
        return Err(Error::invalid(
            "num_teachers",
            format!("{num_teachers} teachers exceed n/4 for {n} training rows"),
        ));
    }
    if features.nrows() != n {
        return Err(Error::invalid("labels", format!("{n} labels for {} rows", features.nrows())));
    }

    let sizes = shard_sizes(n, num_teachers);
    let mut order: Vec<usize> = (0..n).collect();
    let mut partition = None;
    for _ in 0..PARTITION_ATTEMPTS {
        order.shuffle(rng);
        let mut shards = Vec::with_capacity(num_teachers);
        let mut start = 0;
        for &size in &sizes {
            let mut shard = order[start..start + size].to_vec();
            shard.sort_unstable();
            shards.push(shard);
            start += size;
        }
        let both_classes = shards.iter().all(|s| {
            let ones = s.iter().filter(|&&i| labels[i] == 1).count();
            ones > 0 && ones < s.len()
        });
        if both_classes {
            partition = Some(shards);
            break;
        }
    }
    let partition = partition.ok_or_else(|| {
        Error::Degenerate(format!(
            "no partition into {num_teachers} shards with both classes after {PARTITION_ATTEMPTS} attempts"
        ))
    })?;

    let teachers = partition
        .iter()
        .map(|shard| {
            let x = features.select(Axis(0), shard);
            let y: Vec<u8> = shard.iter().map(|&i| labels[i]).collect();
            train(x.view(), &y, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TeacherEnsemble { teachers, partition })
}

/// Laplace scale `2/ε` applied to each vote count.
pub fn vote_noise_scale(budget: PrivacyBudget) -> Result<f64> {
    laplace_scale(Sensitivity::l1(VOTE_SENSITIVITY)?, budget)
}

/// Noisy argmax of one vote pair; ties after noise go to class 1.
pub fn noisy_argmax(votes: (usize, usize), scale: f64, rng: &mut RngState) -> Result<u8> {
    let n0 = votes.0 as f64 + sample_laplace(scale, rng)?;
    let n1 = votes.1 as f64 + sample_laplace(scale, rng)?;
    Ok(u8::from(n1 >= n0))
}

pub fn pate_predict(
    ensemble: &TeacherEnsemble,
    features: ArrayView2<f64>,
    budget: PrivacyBudget,
    rng: &mut RngState,
) -> Result<Vec<u8>> {
    let scale = vote_noise_scale(budget)?;
    ensemble
        .votes(features)?
        .into_iter()
        .map(|v| noisy_argmax(v, scale, rng))
        .collect()
}

/// Noisy fraction of teachers voting for class 1, clamped to [0, 1].
pub fn noisy_vote_fraction(
    ensemble: &TeacherEnsemble,
    row: ArrayView1<f64>,
    budget: PrivacyBudget,
    rng: &mut RngState,
) -> Result<f64> {
    let scale = vote_noise_scale(budget)?;
    let (_, ones) = ensemble.votes_row(row)?;
    let noisy = ones as f64 + sample_laplace(scale, rng)?;
    Ok((noisy / ensemble.num_teachers() as f64).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn data(n: usize) -> (Array2<f64>, Vec<u8>) {
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            let y = labels[i] as f64;
            0.5 * y + 0.1 * ((i * 7 + j * 3) % 5) as f64
        });
        (x, labels)
    }

    #[test]
    fn shard_size_policy() {
        assert_eq!(shard_sizes(1000, 10), vec![100; 10]);
        let s = shard_sizes(1005, 10);
        assert_eq!(s.iter().filter(|&&x| x == 101).count(), 5);
        assert_eq!(s.iter().filter(|&&x| x == 100).count(), 5);
        assert_eq!(s.iter().sum::<usize>(), 1005);
    }

    #[test]
    fn ensemble_partition_is_disjoint_and_covering() {
        let (x, y) = data(1005);
        let e = pate_train(x.view(), &y, 10, &TrainConfig::default(), &mut RngState::from_seed(1)).unwrap();
        assert_eq!(e.num_teachers(), 10);
        let mut all: Vec<usize> = e.partition().concat();
        all.sort_unstable();
        assert_eq!(all, (0..1005).collect::<Vec<_>>());
        let sizes: Vec<usize> = e.partition().iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn teacher_count_preconditions() {
        let (x, y) = data(40);
        let cfg = TrainConfig::default();
        let mut rng = RngState::from_seed(1);
        assert!(pate_train(x.view(), &y, 1, &cfg, &mut rng).is_err());
        assert!(pate_train(x.view(), &y, 11, &cfg, &mut rng).is_err());
        assert!(pate_train(x.view(), &y, 10, &cfg, &mut rng).is_ok());
    }

    #[test]
    fn impossible_partition_errors() {
        // only one positive row cannot reach every shard
        let (x, mut y) = data(40);
        y.iter_mut().for_each(|v| *v = 0);
        y[0] = 1;
        let r = pate_train(x.view(), &y, 4, &TrainConfig::default(), &mut RngState::from_seed(1));
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn unanimous_votes_survive_huge_epsilon() {
        // P(Lap(2e-4) difference exceeds 10) is far below 1e-6
        let scale = vote_noise_scale(PrivacyBudget::pure(1e4).unwrap()).unwrap();
        let mut rng = RngState::from_seed(5);
        for _ in 0..10_000 {
            assert_eq!(noisy_argmax((10, 0), scale, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn split_vote_is_a_fair_coin() {
        for eps in [0.01, 1.0, 100.0] {
            let scale = vote_noise_scale(PrivacyBudget::pure(eps).unwrap()).unwrap();
            let mut rng = RngState::from_seed(6);
            let ones: usize = (0..10_000)
                .map(|_| noisy_argmax((5, 5), scale, &mut rng).unwrap() as usize)
                .sum();
            let f = ones as f64 / 1e4;
            assert!((f - 0.5).abs() < 0.02, "ε = {eps}: {f}");
        }
    }

    #[test]
    fn heavy_noise_flips_often() {
        // Oracle: the difference of two Lap(b) variables exceeds t with
        // probability (1/2)(1 + t/(2b)) e^{-t/b}; b = 200, t = 10 gives 0.4875.
        let scale = vote_noise_scale(PrivacyBudget::pure(0.01).unwrap()).unwrap();
        let mut rng = RngState::from_seed(7);
        let ones: usize = (0..10_000)
            .map(|_| noisy_argmax((10, 0), scale, &mut rng).unwrap() as usize)
            .sum();
        let f = ones as f64 / 1e4;
        assert!(f > 0.2 && f < 0.5, "{f}");
        assert!((f - 0.4875).abs() < 0.02, "{f}");
    }

    #[test]
    fn vote_fraction_is_clamped() {
        let (x, y) = data(200);
        let e = pate_train(x.view(), &y, 4, &TrainConfig::default(), &mut RngState::from_seed(2)).unwrap();
        let mut rng = RngState::from_seed(3);
        let b = PrivacyBudget::pure(0.01).unwrap();
        for row in x.rows() {
            let p = noisy_vote_fraction(&e, row, b, &mut rng).unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
    }
}
