//! Generalized S-estimators of location and scatter for incomplete data.

mod fit;
mod mscale;
mod rho;

pub use fit::{gre_fit, gse_fit, s_fit, FitOptions};
pub use mscale::gse_scale;
pub use rho::{expected_rho, rho_value, rocke_gamma, tuning_constant, weight_value, RhoFamily, RhoSpec};


use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct ScatterEstimate {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    /// Case weights in [0, 1]; zero for dropped cases.
    pub weights: Vec<f64>,
    /// Partial squared Mahalanobis distances under the estimate; NaN for dropped cases.
    pub distances: Vec<f64>,
    /// Minimized generalized M-scale.
    pub scale: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cases with no observed coordinate.
    pub dropped: Vec<usize>,
}

impl ScatterEstimate {
    /// A bare location/scatter pair, e.g. to start a fit from.
    pub fn from_parts(mu: DVector<f64>, sigma: DMatrix<f64>) -> Self {
        ScatterEstimate {
            mu,
            sigma,
            weights: Vec::new(),
            distances: Vec::new(),
            scale: f64::NAN,
            iterations: 0,
            converged: true,
            dropped: Vec::new(),
        }
    }
}
