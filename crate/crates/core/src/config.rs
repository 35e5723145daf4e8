//! Tolerances and size caps shared by every constructor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Eigenvalues down to `-psd_tol` are clipped to zero.
    pub psd_tol: f64,
    /// Eigenvalues at or below this are treated as kernel.
    pub support_tol: f64,
    /// Eigenvalue gap below which two eigenvalues share a spectral projector.
    pub degeneracy_tol: f64,
    /// Max elementwise deviation `|M - M^H|` accepted (and symmetrized away).
    pub hermiticity_tol: f64,
    /// Max `|Tr M - 1|` accepted without `normalize`.
    pub trace_tol: f64,
    /// Renormalize inputs whose trace is off by more than `trace_tol`.
    pub normalize: bool,
    /// Bracket width at which scalar bisections stop.
    pub root_tol: f64,
    /// Largest tensor-power dimension `d^n` that may be formed.
    pub dim_cap: usize,
    /// Largest tilting parameter explored by the classical rate solver.
    pub s_cap: f64,
    /// Largest number of type classes enumerated.
    pub type_cap: usize,
    /// Number of thresholds in the dual certificate grid of `beta_star`.
    pub dual_grid: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            psd_tol: 1e-10,
            support_tol: 1e-10,
            degeneracy_tol: 1e-9,
            hermiticity_tol: 1e-12,
            trace_tol: 1e-8,
            normalize: false,
            root_tol: 1e-12,
            dim_cap: 4096,
            s_cap: 50.0,
            type_cap: 1_000_000,
            dual_grid: 32,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let tols = [
            ("psd_tol", self.psd_tol),
            ("support_tol", self.support_tol),
            ("degeneracy_tol", self.degeneracy_tol),
            ("hermiticity_tol", self.hermiticity_tol),
            ("trace_tol", self.trace_tol),
            ("root_tol", self.root_tol),
            ("s_cap", self.s_cap),
        ];
        for (name, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dim_cap < 4 {
            return Err(Error::InvalidConfig(format!("dim_cap must be >= 4, got {}", self.dim_cap)));
        }
        if self.type_cap == 0 {
            return Err(Error::InvalidConfig("type_cap must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let cfg = Config { support_tol: 0.0, ..Config::default() };
        assert!(cfg.validate().is_err());
        let cfg = Config { dim_cap: 2, ..Config::default() };
        assert!(cfg.validate().is_err());
    }
}
