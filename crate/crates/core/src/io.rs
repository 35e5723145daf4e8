//! JSON interchange for matrices and distributions.
//!
//! Matrices: `{"dim": d, "re": [[...]], "im": [[...]]}`, row-major, `im`
//! optional. Distributions: a bare JSON array of probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CMatrix, C64};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let d = m.nrows();
        let re = (0..d).map(|i| (0..d).map(|j| m[(i, j)].re).collect()).collect();
        let any_imag = m.iter().any(|z| z.im != 0.0);
        let im = any_imag.then(|| (0..d).map(|i| (0..d).map(|j| m[(i, j)].im).collect()).collect());
        MatrixJson { dim: d, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let d = self.dim;
        let check = |rows: &Vec<Vec<f64>>, name: &str| -> Result<()> {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::Parse(format!("\"{name}\" must be a {d}x{d} array")));
            }
            Ok(())
        };
        check(&self.re, "re")?;
        if let Some(im) = &self.im {
            check(im, "im")?;
        }
        Ok(CMatrix::from_fn(d, d, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            C64::new(self.re[i][j], im)
        }))
    }
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let m: MatrixJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    m.to_matrix()
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string(&MatrixJson::from_matrix(m)).expect("matrix serializes")
}

pub fn parse_probabilities(text: &str) -> Result<Vec<f64>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}
