//! Complex matrices as explicit real and imaginary arrays.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use steering_core::ComplexMatrix;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonMatrix {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

pub type LabelledMatrices = BTreeMap<String, BTreeMap<String, JsonMatrix>>;

impl JsonMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.re.len(), self.re.first().map_or(0, Vec::len))
    }

    /// Checks rectangular, matching `re`/`im` arrays of finite numbers.
    pub fn to_matrix(&self) -> Result<ComplexMatrix, CliError> {
        let (rows, cols) = self.shape();
        if rows == 0 || cols == 0 {
            return Err(CliError::Parse("matrix has no entries".into()));
        }
        if self.im.len() != rows {
            return Err(CliError::Parse(format!(
                "re has {rows} rows but im has {}",
                self.im.len()
            )));
        }
        for (r, (re, im)) in self.re.iter().zip(&self.im).enumerate() {
            if re.len() != cols || im.len() != cols {
                return Err(CliError::Parse(format!("row {r} is ragged (expected {cols} columns)")));
            }
        }
        let m = ComplexMatrix::from_fn(rows, cols, |r, c| Complex64::new(self.re[r][c], self.im[r][c]));
        if !m.is_finite() {
            return Err(CliError::Parse("matrix has non-finite entries".into()));
        }
        Ok(m)
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let (rows, cols) = m.shape();
        Self {
            re: (0..rows)
                .map(|r| (0..cols).map(|c| clean(m[(r, c)].re)).collect())
                .collect(),
            im: (0..rows)
                .map(|r| (0..cols).map(|c| clean(m[(r, c)].im)).collect())
                .collect(),
        }
    }
}

/// Maps `-0.0` to `0.0` so saved files do not depend on the sign of zero.
fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

pub fn to_labelled(m: &LabelledMatrices) -> Result<BTreeMap<String, BTreeMap<String, ComplexMatrix>>, CliError> {
    m.iter()
        .map(|(x, outs)| {
            let outs = outs
                .iter()
                .map(|(a, j)| j.to_matrix().map(|mat| (a.clone(), mat)))
                .collect::<Result<_, _>>()?;
            Ok((x.clone(), outs))
        })
        .collect()
}

pub fn from_labelled<'a, I, J>(outer: I) -> LabelledMatrices
where
    I: IntoIterator<Item = (&'a String, J)>,
    J: IntoIterator<Item = (&'a String, &'a ComplexMatrix)>,
{
    outer
        .into_iter()
        .map(|(x, inner)| {
            (
                x.clone(),
                inner
                    .into_iter()
                    .map(|(a, m)| (a.clone(), JsonMatrix::from_matrix(m)))
                    .collect(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_rows_are_rejected() {
        let m = JsonMatrix {
            re: vec![vec![1.0, 0.0], vec![0.0]],
            im: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        };
        assert!(matches!(m.to_matrix(), Err(CliError::Parse(_))));
    }

    #[test]
    fn matrix_roundtrip() {
        let m = ComplexMatrix::pauli_y();
        let j = JsonMatrix::from_matrix(&m);
        assert_eq!(j.to_matrix().unwrap(), m);
        assert_eq!(j.im[0][1], -1.0);
    }

    #[test]
    fn negative_zero_is_normalized() {
        let m = ComplexMatrix::pauli_x().scale(-0.0);
        let j = JsonMatrix::from_matrix(&m);
        assert!(j.re.iter().flatten().all(|x| x.is_sign_positive()));
    }
}
