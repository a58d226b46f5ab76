//! Robust location, dispersion and pairwise covariance.

use crate::error::{Error, Result};

/// Consistency constant making the MAD unbiased for the normal standard deviation.
pub const MAD_CONSISTENCY: f64 = 1.4826;

/// Asymptotic consistency constant of the Qn estimator.
pub const QN_CONSISTENCY: f64 = 2.2219;

/// Dispersion estimator used inside [`gk_cov`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dispersion {
    /// MAD without the consistency constant.
    RawMad,
    /// MAD scaled by [`MAD_CONSISTENCY`].
    Mad,
    /// Rousseeuw-Croux Qn.
    Qn,
}

impl Dispersion {
    pub fn estimate(self, sample: &[f64]) -> Result<f64> {
        match self {
            Dispersion::RawMad => mad(sample, false),
            Dispersion::Mad => mad(sample, true),
            Dispersion::Qn => qn(sample),
        }
    }
}

/// A location/scale pair. A zero scale is representable and signals degeneracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationScale {
    pub location: f64,
    pub scale: f64,
}

/// Center and 2x2 scatter for a pair of variables. Not necessarily positive definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseScatter2x2 {
    pub center: [f64; 2],
    pub matrix: [[f64; 2]; 2],
}

impl PairwiseScatter2x2 {
    pub fn determinant(&self) -> f64 {
        self.matrix[0][0] * self.matrix[1][1] - self.matrix[0][1] * self.matrix[1][0]
    }

    /// Nonsingular with positive diagonal, using a relative determinant threshold.
    pub fn is_usable(&self, rel_tol: f64) -> bool {
        let a = self.matrix[0][0];
        let d = self.matrix[1][1];
        a > 0.0 && d > 0.0 && self.determinant() > rel_tol * a * d
    }

    /// Squared Mahalanobis distance of `(x, y)`; meaningful only when [`Self::is_usable`].
    pub fn mahalanobis(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        let [[a, b], [_, d]] = self.matrix;
        let det = self.determinant();
        (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det
    }
}

fn check(sample: &[f64], needed: usize) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.len() < needed {
        return Err(Error::SampleTooSmall {
            needed,
            got: sample.len(),
        });
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Median of a buffer that may be reordered. Caller guarantees non-empty, finite.
pub(crate) fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (left, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if n % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Sample median; the midpoint of the central pair for even lengths.
pub fn median(sample: &[f64]) -> Result<f64> {
    check(sample, 1)?;
    let mut buf = sample.to_vec();
    Ok(median_in_place(&mut buf))
}

/// Median absolute deviation about the median, optionally scaled by 1.4826.
pub fn mad(sample: &[f64], normalized: bool) -> Result<f64> {
    check(sample, 2)?;
    Ok(median_mad_unchecked(sample, normalized).scale)
}

/// Median and MAD in one pass over a scratch copy.
pub fn median_mad(sample: &[f64], normalized: bool) -> Result<LocationScale> {
    check(sample, 2)?;
    Ok(median_mad_unchecked(sample, normalized))
}

pub(crate) fn median_mad_unchecked(sample: &[f64], normalized: bool) -> LocationScale {
    let mut buf = sample.to_vec();
    let location = median_in_place(&mut buf);
    for (b, &x) in buf.iter_mut().zip(sample) {
        *b = (x - location).abs();
    }
    let raw = median_in_place(&mut buf);
    let scale = if normalized { raw * MAD_CONSISTENCY } else { raw };
    LocationScale { location, scale }
}

/// Rousseeuw-Croux Qn: the C(h, 2)-th smallest pairwise absolute difference,
/// h = floor(n / 2) + 1, times the asymptotic constant 2.2219.
pub fn qn(sample: &[f64]) -> Result<f64> {
    check(sample, 2)?;
    let n = sample.len();
    let h = n / 2 + 1;
    let k = h * (h - 1) / 2;
    let mut diffs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            diffs.push((sample[i] - sample[j]).abs());
        }
    }
    let (_, kth, _) = diffs.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(QN_CONSISTENCY * *kth)
}

/// Gnanadesikan-Kettenring covariance: (S(x + y)^2 - S(x - y)^2) / 4.
pub fn gk_cov(x: &[f64], y: &[f64], scale: Dispersion) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    check(x, 2)?;
    check(y, 2)?;
    let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let sp = scale.estimate(&sum)?;
    let sm = scale.estimate(&diff)?;
    Ok(0.25 * (sp * sp - sm * sm))
}

/// Coordinate-wise medians and the GK scatter with normalized MAD scales.
pub fn pairwise_scatter(x: &[f64], y: &[f64]) -> Result<PairwiseScatter2x2> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let lx = median_mad(x, true)?;
    let ly = median_mad(y, true)?;
    let cxy = gk_cov(x, y, Dispersion::Mad)?;
    Ok(PairwiseScatter2x2 {
        center: [lx.location, ly.location],
        matrix: [[lx.scale * lx.scale, cxy], [cxy, ly.scale * ly.scale]],
    })
}
