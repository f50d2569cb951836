//! JSON encodings shared by every artifact: complex matrices are written as
//! a pair of row-major real arrays `{"re": [[..]], "im": [[..]]}`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{C64, CMat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        let re = m.rows().into_iter().map(|r| r.iter().map(|z| z.re).collect()).collect();
        let im = m.rows().into_iter().map(|r| r.iter().map(|z| z.im).collect()).collect();
        MatrixJson { re, im }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMat> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if self.im.len() != rows
            || self.re.iter().chain(&self.im).any(|r| r.len() != cols)
        {
            return Err(Error::Shape(
                "re/im arrays are ragged or of different shapes".into(),
            ));
        }
        let mut m = CMat::zeros((rows, cols));
        for (i, (re, im)) in self.re.iter().zip(&self.im).enumerate() {
            for (j, (a, b)) in re.iter().zip(im).enumerate() {
                m[[i, j]] = C64::new(*a, *b);
            }
        }
        Ok(m)
    }
}

/// `#[serde(with = "crate::json::matrix")]` for `CMat` fields.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        MatrixJson::deserialize(d)?
            .to_matrix()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_matrix, seeded_rng};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matrix_json_round_trips(seed in any::<u64>(), rows in 0usize..5, cols in 1usize..5) {
            let m = random_matrix(&mut seeded_rng(seed), rows, cols);
            let text = serde_json::to_string(&MatrixJson::from(&m)).unwrap();
            let back: MatrixJson = serde_json::from_str(&text).unwrap();
            let back = back.to_matrix().unwrap();
            prop_assert_eq!(back.nrows(), rows);
            if rows > 0 {
                prop_assert_eq!(back, m);
            }
        }
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let j = MatrixJson {
            re: vec![vec![1.0, 2.0], vec![3.0]],
            im: vec![vec![0.0, 0.0], vec![0.0]],
        };
        assert!(matches!(j.to_matrix(), Err(Error::Shape(_))));
    }
}
