//! Numerical tolerances shared by every computation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::QuadTol;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub quad: QuadTol,
    /// Mass of `G` left outside the solver domain, relative to `∫G`.
    pub tail_tol_rel: f64,
    /// Threshold offset `ε = threshold_rel · α · max G` used for `E = 0⁻`.
    pub threshold_rel: f64,
    /// Absolute tolerance on located eigenvalues.
    pub eig_tol: f64,
    /// Half-width of the near-threshold probe, relative to `max(|E|, α max G)`.
    pub near_threshold_rel: f64,
    /// Finite-difference step is `fd_resolution / √(α max G)` (capped by the domain length).
    pub fd_resolution: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad: QuadTol::default(),
            tail_tol_rel: 1e-6,
            threshold_rel: 1e-9,
            eig_tol: 1e-9,
            near_threshold_rel: 1e-7,
            fd_resolution: 0.125,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("quad.abs", self.quad.abs),
            ("quad.rel", self.quad.rel),
            ("tail_tol_rel", self.tail_tol_rel),
            ("threshold_rel", self.threshold_rel),
            ("eig_tol", self.eig_tol),
            ("near_threshold_rel", self.near_threshold_rel),
            ("fd_resolution", self.fd_resolution),
        ];
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("tolerance {name} = {v} must be positive")));
            }
        }
        if self.quad.max_subdivisions == 0 {
            return Err(Error::InvalidArgument("quad.max_subdivisions must be positive".into()));
        }
        Ok(())
    }
}
