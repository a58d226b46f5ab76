//! Scalar and pairwise robust statistics plus the distribution functions the
//! filters and estimators are calibrated against. Everything here is a pure
//! function of its inputs.

mod dist;
mod scale;

pub use dist::{
    binom_quantile, chi2_cdf, chi2_pdf, chi2_quantile, chi2_sf, gamma_p, gamma_q, ln_gamma,
};
pub use scale::{
    gk_cov, mad, median, median_mad, pairwise_scatter, qn, Dispersion, LocationScale,
    PairwiseScatter2x2, MAD_CONSISTENCY, QN_CONSISTENCY,
};

pub(crate) use scale::{median_in_place, median_mad_unchecked};
