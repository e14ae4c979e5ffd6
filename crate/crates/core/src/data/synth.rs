use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::raw::{ColumnValues, RawColumn, RawTable};
use super::schema::{ColumnKind, ColumnSpec, TabularSchema};
use crate::mechanisms::RngState;
use crate::{Error, Result};

const CATEGORIES: [&str; 3] = ["a", "b", "c"];
pub const SYNTH_TARGET: &str = "final_result";

/// Parameters of the two-cluster generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n: usize,
    #[serde(default = "default_numeric")]
    pub d_numeric: usize,
    #[serde(default = "default_categorical")]
    pub d_categorical: usize,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_numeric() -> usize {
    5
}

fn default_categorical() -> usize {
    2
}

fn default_separation() -> f64 {
    2.0
}

impl SynthParams {
    pub fn new(n: usize, d_numeric: usize, d_categorical: usize, separation: f64, seed: u64) -> Self {
        Self { n, d_numeric, d_categorical, separation, seed }
    }
}

/// Balanced binary data shaped like a flattened learning-analytics extract.
///
/// Every numeric feature is `N(±separation/2, 1)` depending on the class, so
/// the class means differ by `separation` along each numeric axis.
/// Categorical columns draw from three levels with frequencies tilted
/// toward one end by class; the tilt vanishes when `separation` is 0, so at
/// zero separation labels are independent of all features. The target uses
/// the categories `Distinction`/`Pass` (class 1) and `Fail`/`Withdrawn`
/// (class 0).
pub fn synth_generate(params: &SynthParams) -> Result<(RawTable, TabularSchema)> {
    if params.n < 8 {
        return Err(Error::invalid("n", format!("must be at least 8, got {}", params.n)));
    }
    if params.d_numeric == 0 {
        return Err(Error::invalid("d_numeric", "must be at least 1"));
    }
    if !(params.separation.is_finite() && params.separation >= 0.0) {
        return Err(Error::invalid("separation", "must be a non-negative finite number"));
    }
    let root = RngState::from_seed(params.seed).child("synth");

    let mut labels: Vec<u8> = (0..params.n).map(|i| u8::from(i < params.n / 2)).collect();
    labels.shuffle(&mut root.child("labels"));

    let mut columns = Vec::new();
    let mut specs = Vec::new();
    for j in 0..params.d_numeric {
        let mut rng = root.child("numeric").child_u64(j as u64);
        let values = labels
            .iter()
            .map(|&y| {
                let mean = if y == 1 { params.separation / 2.0 } else { -params.separation / 2.0 };
                let z: f64 = StandardNormal.sample(&mut rng);
                mean + z
            })
            .collect();
        let name = format!("num_{j}");
        specs.push(ColumnSpec { name: name.clone(), kind: ColumnKind::Numeric });
        columns.push(RawColumn { name, values: ColumnValues::Numeric(values) });
    }

    let tilt = 0.3 * (params.separation / 2.0).tanh();
    for j in 0..params.d_categorical {
        let mut rng = root.child("categorical").child_u64(j as u64);
        let values = labels
            .iter()
            .map(|&y| {
                let sign = if y == 1 { 1.0 } else { -1.0 };
                let probs = [1.0 / 3.0 - sign * tilt, 1.0 / 3.0, 1.0 / 3.0 + sign * tilt];
                let u: f64 = rng.random();
                let k = if u < probs[0] {
                    0
                } else if u < probs[0] + probs[1] {
                    1
                } else {
                    2
                };
                CATEGORIES[k].to_string()
            })
            .collect();
        let name = format!("cat_{j}");
        specs.push(ColumnSpec { name: name.clone(), kind: ColumnKind::Categorical });
        columns.push(RawColumn { name, values: ColumnValues::Categorical(values) });
    }

    let mut rng = root.child("target");
    let targets = labels
        .iter()
        .map(|&y| {
            let first: bool = rng.random_bool(0.25);
            match (y, first) {
                (1, true) => "Distinction",
                (1, false) => "Pass",
                (_, true) => "Withdrawn",
                (_, false) => "Fail",
            }
            .to_string()
        })
        .collect();
    specs.push(ColumnSpec { name: SYNTH_TARGET.into(), kind: ColumnKind::Target });
    columns.push(RawColumn { name: SYNTH_TARGET.into(), values: ColumnValues::Target(targets) });

    let schema = TabularSchema::new(specs, ["Distinction", "Pass"])?;
    Ok((RawTable::new(columns)?, schema))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{preprocess, read_csv};

    fn emit(params: &SynthParams) -> Vec<u8> {
        let (table, _) = synth_generate(params).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        buf
    }

    #[test]
    fn deterministic_emission() {
        let p = SynthParams::new(200, 3, 2, 1.5, 7);
        assert_eq!(emit(&p), emit(&p));
        assert_ne!(emit(&p), emit(&SynthParams { seed: 8, ..p.clone() }));
    }

    #[test]
    fn balanced_and_readable() {
        let p = SynthParams::new(101, 2, 1, 2.0, 3);
        let (table, schema) = synth_generate(&p).unwrap();
        let bytes = emit(&p);
        let reread = read_csv(bytes.as_slice(), &schema).unwrap();
        assert_eq!(reread, table);
        let ds = preprocess(&table, &schema).unwrap();
        let ones = ds.labels().iter().filter(|&&y| y == 1).count();
        assert_eq!(ones, 50);
        assert_eq!(ds.n_features(), 2 + 3);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(synth_generate(&SynthParams::new(4, 2, 0, 1.0, 0)).is_err());
        assert!(synth_generate(&SynthParams::new(100, 0, 2, 1.0, 0)).is_err());
        assert!(synth_generate(&SynthParams::new(100, 1, 0, -1.0, 0)).is_err());
    }
}
