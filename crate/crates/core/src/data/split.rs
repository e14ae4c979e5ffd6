use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::preprocess::Dataset;
use crate::mechanisms::RngState;
use crate::{Error, Result};

pub const DEFAULT_INNER_TRAIN_FRACTION: f64 = 0.5;

/// Row indices of the four disjoint parts. The victim half trains and tests
/// the model under audit; the attack half trains and tests the shadow model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourWaySplit {
    pub victim_train: Vec<usize>,
    pub victim_test: Vec<usize>,
    pub attack_train: Vec<usize>,
    pub attack_test: Vec<usize>,
}

impl FourWaySplit {
    pub fn parts(&self) -> [&[usize]; 4] {
        [&self.victim_train, &self.victim_test, &self.attack_train, &self.attack_test]
    }
}

pub fn four_way_split(dataset: &Dataset, seed: u64, inner_train_fraction: f64) -> Result<FourWaySplit> {
    four_way_split_with(dataset, &RngState::from_seed(seed), inner_train_fraction)
}

/// Stratified four-way split.
///
/// Rows of each class are shuffled and then interleaved so every class is
/// spread evenly along one sequence; contiguous runs of that sequence form
/// the parts. The victim half gets the extra row when `n` is odd, and the
/// train side of each half gets the extra row of its inner split.
pub fn four_way_split_with(dataset: &Dataset, rng: &RngState, inner_train_fraction: f64) -> Result<FourWaySplit> {
    let n = dataset.n_rows();
    if n < 8 {
        return Err(Error::Degenerate(format!("four-way split needs at least 8 rows, got {n}")));
    }
    if !(inner_train_fraction > 0.0 && inner_train_fraction < 1.0) {
        return Err(Error::invalid(
            "inner_train_fraction",
            format!("must lie strictly between 0 and 1, got {inner_train_fraction}"),
        ));
    }

    let mut rng = rng.child("four-way-split");
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in dataset.labels().iter().enumerate() {
        by_class[y as usize].push(i);
    }
    let mut keyed = Vec::with_capacity(n);
    for (class, rows) in by_class.iter_mut().enumerate() {
        rows.shuffle(&mut rng);
        let m = rows.len() as f64;
        keyed.extend(rows.iter().enumerate().map(|(k, &r)| ((k as f64 + 0.5) / m, class, r)));
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let order: Vec<usize> = keyed.into_iter().map(|(_, _, r)| r).collect();

    let victim = n.div_ceil(2);
    let attack = n - victim;
    let inner = |half: usize| -> usize {
        let train = (half as f64 * inner_train_fraction - 1e-9).ceil() as usize;
        train.clamp(1, half - 1)
    };
    let sizes = [inner(victim), victim - inner(victim), inner(attack), attack - inner(attack)];

    let mut parts = Vec::with_capacity(4);
    let mut start = 0;
    for size in sizes {
        let mut part = order[start..start + size].to_vec();
        part.sort_unstable();
        start += size;
        parts.push(part);
    }
    let names = ["victim_train", "victim_test", "attack_train", "attack_test"];
    for (part, name) in parts.iter().zip(names) {
        let positives = part.iter().filter(|&&r| dataset.labels()[r] == 1).count();
        if positives == 0 || positives == part.len() {
            return Err(Error::Degenerate(format!("{name} would not contain both classes")));
        }
    }
    let mut parts = parts.into_iter();
    Ok(FourWaySplit {
        victim_train: parts.next().unwrap(),
        victim_test: parts.next().unwrap(),
        attack_train: parts.next().unwrap(),
        attack_test: parts.next().unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn dataset(labels: Vec<u8>) -> Dataset {
        let n = labels.len();
        Dataset::new(Array2::zeros((n, 1)), labels, vec!["x".into()], Vec::new()).unwrap()
    }

    fn alternating(n: usize) -> Dataset {
        dataset((0..n).map(|i| (i % 2) as u8).collect())
    }

    fn sizes(s: &FourWaySplit) -> [usize; 4] {
        s.parts().map(<[usize]>::len)
    }

    #[test]
    fn equal_quarters() {
        let s = four_way_split(&alternating(100), 1, 0.5).unwrap();
        assert_eq!(sizes(&s), [25, 25, 25, 25]);
    }

    #[test]
    fn odd_count_surplus_goes_to_victim_train() {
        let s = four_way_split(&alternating(101), 1, 0.5).unwrap();
        assert_eq!(sizes(&s), [26, 25, 25, 25]);
        let s = four_way_split(&alternating(103), 1, 0.5).unwrap();
        assert_eq!(sizes(&s), [26, 26, 26, 25]);
    }

    #[test]
    fn deterministic_per_seed() {
        let ds = alternating(200);
        assert_eq!(four_way_split(&ds, 4, 0.5).unwrap(), four_way_split(&ds, 4, 0.5).unwrap());
        assert_ne!(four_way_split(&ds, 4, 0.5).unwrap(), four_way_split(&ds, 5, 0.5).unwrap());
    }

    #[test]
    fn rejects_tiny_or_single_class_parts() {
        assert!(four_way_split(&alternating(7), 1, 0.5).is_err());
        let mut labels = vec![0u8; 40];
        labels[0] = 1;
        assert!(matches!(four_way_split(&dataset(labels), 1, 0.5), Err(Error::Degenerate(_))));
        assert!(four_way_split(&alternating(40), 1, 0.0).is_err());
        assert!(four_way_split(&alternating(40), 1, 1.0).is_err());
    }

    #[test]
    fn stratification_within_two_points() {
        // 30% positives, n = 400
        let labels: Vec<u8> = (0..400).map(|i| u8::from(i % 10 < 3)).collect();
        let ds = dataset(labels);
        for seed in 0..10 {
            let s = four_way_split(&ds, seed, 0.5).unwrap();
            for part in s.parts() {
                let p = part.iter().filter(|&&r| ds.labels()[r] == 1).count() as f64 / part.len() as f64;
                assert!((p - 0.3).abs() <= 0.02, "seed {seed}: {p}");
            }
        }
    }

    proptest! {
        #[test]
        fn parts_disjoint_and_covering(
            labels in prop::collection::vec(0u8..2, 8..300),
            seed in any::<u64>(),
            frac in 0.1f64..0.9,
        ) {
            let ds = dataset(labels);
            if let Ok(s) = four_way_split(&ds, seed, frac) {
                let mut all: Vec<usize> = s.parts().concat();
                all.sort_unstable();
                prop_assert_eq!(all, (0..ds.n_rows()).collect::<Vec<_>>());
                let [a, b, c, d] = sizes(&s);
                prop_assert!((a + b).abs_diff(c + d) <= 1);
            }
        }
    }
}
