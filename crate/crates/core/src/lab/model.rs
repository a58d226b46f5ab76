//! True models, contamination generators and the LRT divergence.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::chi2_quantile;
use crate::linalg::{cholesky, log_det_chol};
use crate::rng::{stream, StreamRng};

/// Condition number of generated random correlation matrices.
pub const RANDOM_CORRELATION_CONDITION: f64 = 100.0;

/// `trace(S S0^-1) - log det(S S0^-1) - p`.
pub fn lrt_distance(sigma: &DMatrix<f64>, sigma0: &DMatrix<f64>) -> Result<f64> {
    if sigma.shape() != sigma0.shape() || !sigma.is_square() {
        return Err(Error::InvalidArgument("scatter matrices must be square and of equal size".into()));
    }
    let p = sigma.nrows();
    let c0 = cholesky(sigma0.clone())?;
    let c = cholesky(sigma.clone())?;
    let tr = c0.solve(sigma).trace();
    Ok((tr - (log_det_chol(&c) - log_det_chol(&c0)) - p as f64).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrelationKind {
    Random,
    Ar1(f64),
}

pub fn ar1_correlation(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |j, k| rho.powi((j as i32 - k as i32).abs()))
}

/// Haar-distributed orthogonal matrix via QR of a Gaussian matrix.
fn random_orthogonal(p: usize, rng: &mut StreamRng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn unit_diagonal(a: &DMatrix<f64>) -> DMatrix<f64> {
    let p = a.nrows();
    let d: Vec<f64> = (0..p).map(|j| a[(j, j)].sqrt()).collect();
    DMatrix::from_fn(p, p, |j, k| match j.cmp(&k) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => a[(j, k)] / (d[j] * d[k]),
        std::cmp::Ordering::Greater => a[(k, j)] / (d[k] * d[j]),
    })
}

/// Random correlation matrix with condition number
/// [`RANDOM_CORRELATION_CONDITION`].
pub fn random_correlation(p: usize, rng: &mut StreamRng) -> DMatrix<f64> {
    random_correlation_with(p, RANDOM_CORRELATION_CONDITION, rng)
}

/// Eigenvalues uniform on `[1, condition]` (both ends included) with random
/// orthogonal eigenvectors, rescaled to unit diagonal. Rescaling changes the
/// spectrum, so the smallest eigenvalue is then reset to `max / condition`
/// (others below it lifted) and the matrix rescaled again until its
/// condition number settles.
pub fn random_correlation_with(p: usize, condition: f64, rng: &mut StreamRng) -> DMatrix<f64> {
    let mut lambda: Vec<f64> = (0..p).map(|_| 1.0 + rng.random::<f64>() * (condition - 1.0)).collect();
    if p >= 2 {
        lambda[0] = 1.0;
        lambda[1] = condition;
    }
    let q = random_orthogonal(p, rng);
    let mut r = unit_diagonal(&(&q * DMatrix::from_diagonal(&DVector::from_vec(lambda)) * q.transpose()));
    for _ in 0..1000 {
        let eig = SymmetricEigen::new(r.clone());
        let (hi, lo) = (eig.eigenvalues.max(), eig.eigenvalues.min());
        if (hi / lo - condition).abs() <= 1e-8 * condition {
            break;
        }
        let floor = hi / condition;
        let mut l = eig.eigenvalues.map(|v| v.max(floor));
        l[eig.eigenvalues.imin()] = floor;
        r = unit_diagonal(&(&eig.eigenvectors * DMatrix::from_diagonal(&l) * eig.eigenvectors.transpose()));
    }
    r
}

pub fn gen_correlation(p: usize, kind: CorrelationKind, seed: u64) -> Result<DMatrix<f64>> {
    if p < 2 {
        return Err(Error::InvalidArgument("correlation models need p >= 2".into()));
    }
    Ok(match kind {
        CorrelationKind::Ar1(rho) => ar1_correlation(p, rho),
        CorrelationKind::Random => random_correlation(p, &mut stream(seed, &[])),
    })
}

/// True scatter with its least favourable direction.
#[derive(Debug, Clone)]
pub struct TrueModel {
    pub sigma0: DMatrix<f64>,
    /// Smallest-eigenvalue eigenvector scaled so that v' S0^-1 v = 1.
    pub v: DVector<f64>,
    chol_l: DMatrix<f64>,
}

impl TrueModel {
    pub fn new(sigma0: DMatrix<f64>) -> Result<Self> {
        let chol_l = cholesky(sigma0.clone())?.unpack();
        let eig = SymmetricEigen::new(sigma0.clone());
        let (imin, lmin) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, l)| if l < acc.1 { (i, l) } else { acc });
        let mut v = eig.eigenvectors.column(imin).into_owned() * lmin.sqrt();
        let lead = v.iter().copied().fold(0.0_f64, |a, x| if x.abs() > a.abs() { x } else { a });
        if lead < 0.0 {
            v = -v;
        }
        Ok(TrueModel { sigma0, v, chol_l })
    }

    pub fn p(&self) -> usize {
        self.sigma0.nrows()
    }

    /// n draws from N(0, sigma0).
    pub fn sample(&self, n: usize, rng: &mut StreamRng) -> DMatrix<f64> {
        let p = self.p();
        let z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        z * self.chol_l.transpose()
    }
}

fn count_of(eps: f64, total: usize) -> usize {
    (eps * total as f64 + 1e-9).floor() as usize
}

/// Replaces `floor(eps n p)` uniformly chosen cells by N(k, 0.1^2) draws.
/// Returns the replaced cells, sorted.
pub fn contaminate_cellwise(x: &mut DMatrix<f64>, eps: f64, k: f64, rng: &mut StreamRng) -> Result<Vec<(usize, usize)>> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidProbability(eps));
    }
    let (n, p) = x.shape();
    let count = count_of(eps, n * p);
    let mut cells: Vec<usize> = sample(rng, n * p, count).into_vec();
    cells.sort_unstable();
    let mut labels = Vec::with_capacity(count);
    for c in cells {
        let (i, j) = (c / p, c % p);
        let z: f64 = rng.sample(StandardNormal);
        x[(i, j)] = k + 0.1 * z;
        labels.push((i, j));
    }
    Ok(labels)
}

/// Replaces `floor(eps n)` uniformly chosen rows by draws from
/// 0.5 N(c v, 0.1^2 I) + 0.5 N(-c v, 0.1^2 I), c = sqrt(k chi2_p(0.99)).
pub fn contaminate_casewise(x: &mut DMatrix<f64>, model: &TrueModel, eps: f64, k: f64, rng: &mut StreamRng) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidProbability(eps));
    }
    let (n, p) = x.shape();
    let c = (k * chi2_quantile(0.99, p as u32)?).sqrt();
    let mut rows: Vec<usize> = sample(rng, n, count_of(eps, n)).into_vec();
    rows.sort_unstable();
    for &i in &rows {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            x[(i, j)] = sign * c * model.v[j] + 0.1 * z;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lrt_examples() {
        let s0 = ar1_correlation(4, 0.5);
        assert!(lrt_distance(&s0, &s0).unwrap().abs() < 1e-12);
        let two = DMatrix::from_element(1, 1, 2.0);
        let one = DMatrix::from_element(1, 1, 1.0);
        assert_relative_eq!(lrt_distance(&two, &one).unwrap(), 1.0 - 2.0_f64.ln(), epsilon = 1e-12);
        let c: f64 = 3.0;
        assert_relative_eq!(lrt_distance(&(&s0 * c), &s0).unwrap(), 4.0 * (c - c.ln() - 1.0), max_relative = 1e-12);
    }

    #[test]
    fn ar1_examples() {
        let r = ar1_correlation(3, 0.9);
        assert_relative_eq!(r[(0, 2)], 0.81, epsilon = 1e-15);
        assert_eq!(ar1_correlation(5, 0.0), DMatrix::identity(5, 5));
    }

    #[test]
    fn least_favourable_direction_is_normalized() {
        let s0 = gen_correlation(8, CorrelationKind::Random, 3).unwrap();
        let m = TrueModel::new(s0.clone()).unwrap();
        let q = m.v.dot(&(s0.clone().try_inverse().unwrap() * &m.v));
        assert_relative_eq!(q, 1.0, epsilon = 1e-10);
        for j in 0..8 {
            assert_relative_eq!(s0[(j, j)], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn contamination_counts() {
        let mut rng = stream(1, &[]);
        let mut x = DMatrix::zeros(100, 10);
        assert_eq!(contaminate_cellwise(&mut x, 0.05, 3.0, &mut rng).unwrap().len(), 50);
        let before = x.clone();
        assert!(contaminate_cellwise(&mut x, 0.0, 3.0, &mut rng).unwrap().is_empty());
        assert_eq!(x, before);
        let m = TrueModel::new(ar1_correlation(10, 0.9)).unwrap();
        assert_eq!(contaminate_casewise(&mut x, &m, 0.1, 2.0, &mut rng).unwrap().len(), 10);
    }
}
