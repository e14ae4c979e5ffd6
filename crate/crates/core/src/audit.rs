//! Membership-inference audit.
//!
//! A shadow model trained like the victim on the attack half's train part
//! produces outputs on attack_train (members) and attack_test
//! (non-members). One logistic classifier per true label is fit on the
//! features `[1 − p, p, y]`; a member for label 1 tends to have high `p`
//! and a member for label 0 low `p`, which a single linear model cannot
//! express. The decision threshold maximises `tpr − fpr` on the shadow
//! rows, and is only adopted when that maximum (a one-sided two-sample
//! Kolmogorov–Smirnov statistic) is significant; otherwise the attack
//! flags nobody. The attack is finally pointed at the victim's released
//! probabilities for victim_train (true members) and victim_test (true
//! non-members).

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FourWaySplit};
use crate::dp_pipelines::DpMethod;
use crate::model::{predict_proba, predict_proba_row, train, LogisticModel, TrainConfig};
use crate::{Error, Result};

pub const ATTACK_FEATURES: usize = 3;

/// Default level of the test that decides whether the attack acts at all.
pub const DEFAULT_SIGNIFICANCE: f64 = 0.05;

/// `[1 − p, p, y]` for a released class-1 probability `p` and true label `y`.
pub fn attack_features(probability: f64, true_label: u8) -> Result<[f64; ATTACK_FEATURES]> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::invalid("probability", format!("must lie in [0, 1], got {probability}")));
    }
    if true_label > 1 {
        return Err(Error::invalid("true_label", "must be 0 or 1"));
    }
    Ok([1.0 - probability, probability, f64::from(true_label)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    pub train: TrainConfig,
    /// Level of the member/non-member distinguishability test.
    pub significance: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            significance: DEFAULT_SIGNIFICANCE,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        let a = self.significance;
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::invalid("significance", format!("must lie in (0, 1), got {a}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackModel {
    /// Indexed by true label.
    classifiers: [LogisticModel; 2],
    /// A row is flagged when its membership score is strictly above this.
    threshold: f64,
    training_accuracy: f64,
    shadow_advantage: f64,
}

impl AttackModel {
    pub fn from_classifiers(classifiers: [LogisticModel; 2], threshold: f64) -> Result<Self> {
        for c in &classifiers {
            if c.dim() != ATTACK_FEATURES {
                return Err(Error::DimensionMismatch {
                    expected: ATTACK_FEATURES,
                    actual: c.dim(),
                });
            }
        }
        if threshold.is_nan() {
            return Err(Error::invalid("threshold", "must not be NaN"));
        }
        Ok(Self {
            classifiers,
            threshold,
            training_accuracy: f64::NAN,
            shadow_advantage: f64::NAN,
        })
    }

    pub fn classifier(&self, true_label: u8) -> &LogisticModel {
        &self.classifiers[usize::from(true_label.min(1))]
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Accuracy of the thresholded decisions on the attack's own rows.
    pub fn training_accuracy(&self) -> f64 {
        self.training_accuracy
    }

    /// Best `tpr − fpr` over thresholds on the shadow rows, before the
    /// significance check.
    pub fn shadow_advantage(&self) -> f64 {
        self.shadow_advantage
    }

    /// False when the shadow evidence was not significant and the attack
    /// abstains.
    pub fn is_active(&self) -> bool {
        self.threshold < f64::INFINITY
    }

    pub fn membership_probability(&self, probability: f64, true_label: u8) -> Result<f64> {
        let f = attack_features(probability, true_label)?;
        predict_proba_row(self.classifier(true_label), ArrayView1::from(&f))
    }

    pub fn is_member(&self, probability: f64, true_label: u8) -> Result<bool> {
        Ok(self.membership_probability(probability, true_label)? > self.threshold)
    }
}

/// Non-private shadow: the victim's trainer applied to attack_train only.
pub fn train_shadow(dataset: &Dataset, split: &FourWaySplit, config: &TrainConfig) -> Result<LogisticModel> {
    let (x, y) = dataset.subset(&split.attack_train);
    train(x.view(), &y, config)
}

/// Trains the attack from a logistic shadow model.
pub fn train_attack(
    shadow_model: &LogisticModel,
    dataset: &Dataset,
    split: &FourWaySplit,
    config: &AttackConfig,
) -> Result<AttackModel> {
    if shadow_model.dim() != dataset.n_features() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n_features(),
            actual: shadow_model.dim(),
        });
    }
    train_attack_with(|row| predict_proba_row(shadow_model, row), dataset, split, config)
}

/// Trains the attack from an arbitrary shadow release. `shadow_probability`
/// is called once per attack-half row, attack_train first; victim rows are
/// never read.
pub fn train_attack_with<F>(
    mut shadow_probability: F,
    dataset: &Dataset,
    split: &FourWaySplit,
    config: &AttackConfig,
) -> Result<AttackModel>
where
    F: FnMut(ArrayView1<f64>) -> Result<f64>,
{
    config.validate()?;
    if split.attack_train.is_empty() || split.attack_test.is_empty() {
        return Err(Error::Degenerate("attack training needs both members and non-members".into()));
    }
    // Per true label: attack feature rows and membership targets.
    let mut rows: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut membership: [Vec<u8>; 2] = [Vec::new(), Vec::new()];
    for (part, member) in [(&split.attack_train, 1u8), (&split.attack_test, 0u8)] {
        for &r in part.iter() {
            let label = dataset.labels()[r];
            let p = shadow_probability(dataset.features().row(r))?;
            rows[usize::from(label)].extend(attack_features(p, label)?);
            membership[usize::from(label)].push(member);
        }
    }
    let mut classifiers = Vec::with_capacity(2);
    let mut scored: Vec<(f64, u8)> = Vec::new();
    for label in 0..2 {
        let m = &membership[label];
        if !m.contains(&0) || !m.contains(&1) {
            return Err(Error::Degenerate(format!(
                "label {label} lacks members or non-members in the attack half"
            )));
        }
        let x = Array2::from_shape_vec((m.len(), ATTACK_FEATURES), std::mem::take(&mut rows[label]))
            .expect("attack rows have fixed width");
        let classifier = train(x.view(), m, &config.train)?;
        scored.extend(predict_proba(&classifier, x.view())?.into_iter().zip(m.iter().copied()));
        classifiers.push(classifier);
    }
    let (best, shadow_advantage) = best_threshold(&scored);
    let members = split.attack_train.len() as f64;
    let nonmembers = split.attack_test.len() as f64;
    let threshold = if shadow_advantage > ks_critical_value(members, nonmembers, config.significance) {
        best
    } else {
        f64::INFINITY
    };
    let correct = scored.iter().filter(|&&(s, m)| (s > threshold) == (m == 1)).count();
    let classifiers: [LogisticModel; 2] = classifiers.try_into().expect("one classifier per label");
    Ok(AttackModel {
        classifiers,
        threshold,
        training_accuracy: correct as f64 / scored.len() as f64,
        shadow_advantage,
    })
}

/// Threshold `t` maximising `tpr − fpr` for the rule `score > t`, and that
/// maximum. Among equally good thresholds the highest (fewest flags) wins;
/// with no positive advantage the result flags nobody.
fn best_threshold(scored: &[(f64, u8)]) -> (f64, f64) {
    let members = scored.iter().filter(|(_, m)| *m == 1).count() as f64;
    let nonmembers = scored.len() as f64 - members;
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (mut best_t, mut best_adv) = (f64::INFINITY, 0.0);
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < sorted.len() {
        // Consume a whole block of tied scores, then cut just below it.
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 == 1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let adv = tp / members - fp / nonmembers;
        if adv > best_adv {
            best_adv = adv;
            best_t = sorted.get(i).map_or(f64::NEG_INFINITY, |next| next.0);
        }
    }
    (best_t, best_adv)
}

/// Asymptotic critical value of the one-sided two-sample KS statistic:
/// `P(D⁺ > d) ≈ exp(−2 d² nm / (n + m))`.
fn ks_critical_value(n: f64, m: f64, significance: f64) -> f64 {
    (-significance.ln() * (n + m) / (2.0 * n * m)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiaOutcome {
    pub tpr: f64,
    pub fpr: f64,
    pub true_positive_count: usize,
    pub false_positive_count: usize,
    pub member_count: usize,
    pub nonmember_count: usize,
}

impl MiaOutcome {
    pub fn from_counts(
        true_positive_count: usize,
        member_count: usize,
        false_positive_count: usize,
        nonmember_count: usize,
    ) -> Result<Self> {
        if member_count == 0 || nonmember_count == 0 {
            return Err(Error::Empty("membership audit needs members and non-members".into()));
        }
        if true_positive_count > member_count || false_positive_count > nonmember_count {
            return Err(Error::invalid("counts", "flagged rows exceed the pool size"));
        }
        Ok(Self {
            tpr: true_positive_count as f64 / member_count as f64,
            fpr: false_positive_count as f64 / nonmember_count as f64,
            true_positive_count,
            false_positive_count,
            member_count,
            nonmember_count,
        })
    }
}

/// Runs the attack against the victim's release. `victim_probability` is
/// called once per victim row, members (victim_train) first.
pub fn run_mia<F>(
    attack: &AttackModel,
    mut victim_probability: F,
    dataset: &Dataset,
    split: &FourWaySplit,
) -> Result<MiaOutcome>
where
    F: FnMut(ArrayView1<f64>) -> Result<f64>,
{
    let mut flagged = |rows: &[usize]| -> Result<usize> {
        let mut count = 0;
        for &r in rows {
            let p = victim_probability(dataset.features().row(r))?;
            if attack.is_member(p, dataset.labels()[r])? {
                count += 1;
            }
        }
        Ok(count)
    };
    let tp = flagged(&split.victim_train)?;
    let fp = flagged(&split.victim_test)?;
    MiaOutcome::from_counts(tp, split.victim_train.len(), fp, split.victim_test.len())
}

/// `tpr − fpr`; 0 means no leakage, negative means the attack does worse
/// than guessing.
pub fn privacy_leakage(outcome: &MiaOutcome) -> f64 {
    outcome.tpr - outcome.fpr
}

/// `acc_nonprivate − acc_private`; positive values are degradation.
pub fn utility_loss(acc_private: f64, acc_nonprivate: f64) -> f64 {
    acc_nonprivate - acc_private
}

/// Members correctly flagged by the attack.
pub fn true_revealed_records(outcome: &MiaOutcome) -> usize {
    outcome.true_positive_count
}

/// Metrics of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub method: DpMethod,
    pub epsilon: f64,
    pub seed: u64,
    pub acc_nonprivate: f64,
    pub acc_private: f64,
    pub utility_loss: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub privacy_leakage: f64,
    pub true_revealed_records: usize,
    /// `true_revealed_records / member_count`.
    pub trr_rate: f64,
    pub member_count: usize,
}

impl AuditReport {
    pub fn new(method: DpMethod, epsilon: f64, seed: u64, acc_nonprivate: f64, acc_private: f64, mia: &MiaOutcome) -> Self {
        Self {
            method,
            epsilon,
            seed,
            acc_nonprivate,
            acc_private,
            utility_loss: utility_loss(acc_private, acc_nonprivate),
            tpr: mia.tpr,
            fpr: mia.fpr,
            privacy_leakage: privacy_leakage(mia),
            true_revealed_records: true_revealed_records(mia),
            trr_rate: mia.true_positive_count as f64 / mia.member_count as f64,
            member_count: mia.member_count,
        }
    }
}
