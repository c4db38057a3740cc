//! Two-user Gaussian MIMO multiple-access channel model.
//!
//! Holds the channel pair, input covariances under a per-user trace
//! constraint, the sum-capacity determinant, and the iterative
//! water-filling solver that produces the optimal covariances. Random
//! channel generation is seeded and counter-based so Monte Carlo shards
//! stay deterministic and independent.

use crate::matrix::Matrix;
use crate::rng::SplitMix64;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    /// Water-filling failed to reach the convergence tolerance within the
    /// iteration cap (10^4 alternating passes).
    NoConvergence,
    /// Covariances violate the trace or PSD constraints.
    InvalidCovariance(String),
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelError::NoConvergence => write!(f, "iterative water-filling did not converge"),
            ChannelError::InvalidCovariance(why) => write!(f, "invalid covariance pair: {why}"),
        }
    }
}

impl std::error::Error for ChannelError {}

/// Uniform entry distribution for random channel draws.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Uniform {
    pub lo: f64,
    pub hi: f64,
}

impl Uniform {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "uniform distribution needs lo < hi");
        Uniform { lo, hi }
    }
}

/// The pair of r x t channel matrices of a two-user MIMO MAC.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    h1: Matrix,
    h2: Matrix,
}

impl ChannelPair {
    pub fn new(h1: Matrix, h2: Matrix) -> Self {
        assert_eq!(
            (h1.rows(), h1.cols()),
            (h2.rows(), h2.cols()),
            "channel matrices must share dimensions"
        );
        ChannelPair { h1, h2 }
    }

    pub fn h(&self, user: usize) -> &Matrix {
        match user {
            1 => &self.h1,
            2 => &self.h2,
            _ => panic!("user index must be 1 or 2"),
        }
    }

    pub fn h1(&self) -> &Matrix {
        &self.h1
    }

    pub fn h2(&self) -> &Matrix {
        &self.h2
    }

    /// Receive antennas.
    pub fn r(&self) -> usize {
        self.h1.rows()
    }

    /// Transmit antennas per user.
    pub fn t(&self) -> usize {
        self.h1.cols()
    }
}

/// Input covariances of both users under the common power budget `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePair {
    pub k1: Matrix,
    pub k2: Matrix,
    pub p: f64,
}

impl CovariancePair {
    pub fn new(k1: Matrix, k2: Matrix, p: f64) -> Result<Self, ChannelError> {
        for (name, k) in [("K1", &k1), ("K2", &k2)] {
            if !k.is_square() {
                return Err(ChannelError::InvalidCovariance(format!("{name} is not square")));
            }
            if k.trace() > p + 1e-9 {
                return Err(ChannelError::InvalidCovariance(format!(
                    "{name} trace {} exceeds budget {}",
                    k.trace(),
                    p
                )));
            }
            let (vals, _) = k
                .sym_eigen()
                .map_err(|e| ChannelError::InvalidCovariance(format!("{name}: {e}")))?;
            if let Some(min) = vals.last() {
                if *min < -1e-9 {
                    return Err(ChannelError::InvalidCovariance(format!(
                        "{name} has negative eigenvalue {min}"
                    )));
                }
            }
        }
        Ok(CovariancePair { k1, k2, p })
    }

    pub fn k(&self, user: usize) -> &Matrix {
        match user {
            1 => &self.k1,
            2 => &self.k2,
            _ => panic!("user index must be 1 or 2"),
        }
    }
}

/// Output of [`sum_capacity`].
#[derive(Debug, Clone)]
pub struct CapacityResult {
    /// Sum capacity in bits: `0.5 * log2(c_d)`.
    pub c_sum: f64,
    /// The capacity determinant `|I + H1 K1 H1^T + H2 K2 H2^T|`, linear scale.
    pub c_d: f64,
    /// The optimizing covariances.
    pub covariances: CovariancePair,
}

/// Capacity determinant at the given covariances.
pub fn c_d(ch: &ChannelPair, cov: &CovariancePair) -> f64 {
    let r = ch.r();
    let a = &ch.h1.matmul(&cov.k1).matmul(&ch.h1.transpose());
    let b = &ch.h2.matmul(&cov.k2).matmul(&ch.h2.transpose());
    (&(&Matrix::identity(r) + a) + b).symmetrized().det()
}

fn objective_bits(ch: &ChannelPair, k1: &Matrix, k2: &Matrix) -> f64 {
    let r = ch.r();
    let a = &ch.h1.matmul(k1).matmul(&ch.h1.transpose());
    let b = &ch.h2.matmul(k2).matmul(&ch.h2.transpose());
    let det = (&(&Matrix::identity(r) + a) + b).symmetrized().det();
    0.5 * det.max(1e-300).log2()
}

/// Water-fills one user against a fixed noise-plus-interference covariance
/// `z`. Returns the per-user covariance with `trace <= p`.
fn water_fill_single(h: &Matrix, z: &Matrix, p: f64) -> Matrix {
    let t = h.cols();
    let zinv = z
        .symmetrized()
        .inverse()
        .expect("noise covariance I + HKH^T is positive definite");
    let g = h.transpose().matmul(&zinv).matmul(h).symmetrized();
    let (lam, u) = g.sym_eigen().expect("small symmetric eigenproblem");
    // active eigenmodes sorted by gain descending (sym_eigen already sorts)
    let gains: Vec<f64> = lam.iter().map(|l| l.max(0.0)).collect();
    let mut k_active = 0usize;
    let mut level = 0.0f64;
    // water level over the 1/gain breakpoints: the highest count k for
    // which every selected mode stays above water
    for k in 1..=t {
        if gains[k - 1] <= 1e-15 {
            break;
        }
        let inv_sum: f64 = gains[..k].iter().map(|g| 1.0 / g).sum();
        let mu = (p + inv_sum) / k as f64;
        if mu > 1.0 / gains[k - 1] {
            k_active = k;
            level = mu;
        }
    }
    let mut k_mat = Matrix::zeros(t, t);
    for i in 0..k_active {
        let power = (level - 1.0 / gains[i]).max(0.0);
        if power <= 0.0 {
            continue;
        }
        let ui = Matrix::col_vec(&u.column(i));
        k_mat = &k_mat + &ui.matmul(&ui.transpose()).scale(power);
    }
    k_mat
}

/// Sum capacity of the two-user MAC by iterative water-filling.
///
/// Alternates single-user water-filling against the other user's
/// interference until successive objectives differ by less than 1e-10
/// bits. The optimizing covariances accompany the value.
pub fn sum_capacity(ch: &ChannelPair, p: f64) -> Result<CapacityResult, ChannelError> {
    assert!(p > 0.0, "power budget must be positive");
    let r = ch.r();
    let t = ch.t();
    let mut k1 = Matrix::zeros(t, t);
    let mut k2 = Matrix::zeros(t, t);
    let mut last = objective_bits(ch, &k1, &k2);
    let mut converged = false;
    for _ in 0..10_000 {
        let z1 = &Matrix::identity(r) + &ch.h2.matmul(&k2).matmul(&ch.h2.transpose());
        k1 = water_fill_single(&ch.h1, &z1, p);
        let z2 = &Matrix::identity(r) + &ch.h1.matmul(&k1).matmul(&ch.h1.transpose());
        k2 = water_fill_single(&ch.h2, &z2, p);
        let now = objective_bits(ch, &k1, &k2);
        if (now - last).abs() < 1e-10 {
            converged = true;
            break;
        }
        last = now;
    }
    if !converged {
        return Err(ChannelError::NoConvergence);
    }
    let covariances = CovariancePair::new(k1, k2, p)?;
    let cd = c_d(ch, &covariances).max(1.0);
    Ok(CapacityResult { c_sum: 0.5 * cd.log2(), c_d: cd, covariances })
}

/// Converts a power constraint in dB to linear scale.
pub fn db_to_linear(p_db: f64) -> f64 {
    10f64.powf(p_db / 10.0)
}

/// Seeded random channel pair with i.i.d. uniform entries. Entries are
/// drawn row-major, user 1 first; the draw order is part of the
/// reproducibility contract.
pub fn random_channel(r: usize, t: usize, dist: Uniform, seed: u64) -> ChannelPair {
    let mut rng = SplitMix64::new(seed);
    let mut draw = |rows: usize, cols: usize| -> Matrix {
        let data = (0..rows * cols).map(|_| rng.uniform(dist.lo, dist.hi)).collect();
        Matrix::new(rows, cols, data)
    };
    let h1 = draw(r, t);
    let h2 = draw(r, t);
    ChannelPair::new(h1, h2)
}

/// Seeded random diagonal channel pair: square matrices with random
/// diagonals and exact zeros elsewhere. Diagonal of user 1 first.
pub fn diagonal_random_channel(dim: usize, dist: Uniform, seed: u64) -> ChannelPair {
    let mut rng = SplitMix64::new(seed);
    let mut draw = || -> Matrix {
        let d: Vec<f64> = (0..dim).map(|_| rng.uniform(dist.lo, dist.hi)).collect();
        Matrix::diag(&d)
    };
    let h1 = draw();
    let h2 = draw();
    ChannelPair::new(h1, h2)
}
