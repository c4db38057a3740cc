//! Parallel coding scheme: one lattice codebook per active transmit
//! antenna, turning the two-user MIMO MAC into an equivalent multi-user
//! SIMO MAC.
//!
//! Inactive antennas (zero water-filling power) are dropped; the
//! remaining columns of `H_l B_l` form the effective channel. The
//! receiver successively decodes `m = t1 + t2` integer combinations with
//! coefficient rows `a_1..a_m`; the minimum effective noise of
//! combination `j` after cancelling the previous ones is the squared
//! Gram-Schmidt residual of `L E a_j` against the earlier combinations,
//! with `L^T L = (I + H~^T H~)^{-1}` and `E = diag(beta)`.
//!
//! The capacity check searches coefficient matrices with nonnegative
//! entries and determinant exactly +1 whose per-codebook binding
//! combination (the last one using the codebook) is a bijection; that
//! family is precisely the unit-diagonal upper-triangular nonnegative
//! matrices under even column permutations, which keeps the scan small at
//! any entry bound. The lattice scalings are pinned to the tight fixed
//! point `beta_i^2 proportional to sigma^2_binding(i)` and a candidate is
//! accepted when the noise profile is nondecreasing along the decode
//! order. Every accepted witness is re-verified through the explicit
//! projection formula before it is reported.

use crate::channel::{sum_capacity, ChannelPair, CovariancePair};
use crate::matrix::{MatError, Matrix};
use std::fmt;

/// Integer coefficient matrix, rows are combinations in decode order.
pub type IntMat = Vec<Vec<i64>>;

#[derive(Debug, Clone, PartialEq)]
pub enum PcsError {
    /// Columns of `H_l B_l` past the covariance rank carry mass.
    RankMismatch { column_norm: f64 },
    /// Previous combinations are linearly dependent after equalization.
    SingularProjection,
    /// Enumeration guard tripped.
    SearchSpaceTooLarge { dim: usize, entry_bound: i64 },
    /// Both users have zero-rank covariances; there is nothing to code.
    EmptySystem,
    BadParams(String),
    Mat(MatError),
}

impl fmt::Display for PcsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PcsError::RankMismatch { column_norm } => {
                write!(f, "inactive columns carry mass {column_norm:e}")
            }
            PcsError::SingularProjection => write!(f, "projection base is singular"),
            PcsError::SearchSpaceTooLarge { dim, entry_bound } => {
                write!(f, "unimodular scan of dim {dim} bound {entry_bound} is too large")
            }
            PcsError::EmptySystem => write!(f, "no active transmit antennas"),
            PcsError::BadParams(why) => write!(f, "bad parameters: {why}"),
            PcsError::Mat(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PcsError {}

impl From<MatError> for PcsError {
    fn from(e: MatError) -> Self {
        PcsError::Mat(e)
    }
}

/// Equivalent SIMO system for the parallel scheme.
#[derive(Debug, Clone)]
pub struct PcsSystem {
    /// Effective channel, `r x (t1 + t2)`.
    pub h_tilde: Matrix,
    /// Active antennas of user 1 and 2.
    pub t1: usize,
    pub t2: usize,
    /// Factor with `L^T L = (I + H~^T H~)^{-1}`.
    pub l_factor: Matrix,
    /// Capacity determinant `|I + H~ H~^T|` of the equivalent system.
    pub capacity_det: f64,
}

impl PcsSystem {
    pub fn num_codebooks(&self) -> usize {
        self.t1 + self.t2
    }

    /// Sum capacity of the equivalent system, bits.
    pub fn capacity_bits(&self) -> f64 {
        0.5 * self.capacity_det.log2()
    }
}

/// Builds the equivalent SIMO system from pivoted Cholesky factors of the
/// covariances, keeping only columns backed by covariance rank.
pub fn build_equivalent_simo(ch: &ChannelPair, cov: &CovariancePair) -> Result<PcsSystem, PcsError> {
    let (b1, t1) = cov.k1.cholesky_pivoted()?;
    let (b2, t2) = cov.k2.cholesky_pivoted()?;
    if t1 + t2 == 0 {
        return Err(PcsError::EmptySystem);
    }
    let mut blocks: Vec<Matrix> = Vec::new();
    for (h, b, rank) in [(ch.h1(), &b1, t1), (ch.h2(), &b2, t2)] {
        let x = h.matmul(b);
        // inactive columns must be numerically empty
        for j in rank..x.cols() {
            let norm: f64 = (0..x.rows()).map(|i| x[(i, j)] * x[(i, j)]).sum::<f64>().sqrt();
            if norm > 1e-7 {
                return Err(PcsError::RankMismatch { column_norm: norm });
            }
        }
        if rank > 0 {
            blocks.push(x.columns(0, rank));
        }
    }
    let h_tilde = match blocks.len() {
        1 => blocks.pop().unwrap(),
        2 => blocks[0].hcat(&blocks[1]),
        _ => unreachable!(),
    };
    let m = t1 + t2;
    let gram = &Matrix::identity(m) + &h_tilde.transpose().matmul(&h_tilde).symmetrized();
    let capacity_det = gram.det();
    let gram_inv = gram.inverse()?.symmetrized();
    // L^T L = gram_inv with L upper triangular
    let l_factor = gram_inv.cholesky()?.transpose();
    Ok(PcsSystem { h_tilde, t1, t2, l_factor, capacity_det })
}

fn le_vector(sys: &PcsSystem, a: &[i64], beta: &[f64]) -> Vec<f64> {
    let m = sys.num_codebooks();
    assert_eq!(a.len(), m);
    assert_eq!(beta.len(), m);
    let mut v = vec![0.0; m];
    for (i, vi) in v.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..m {
            acc += sys.l_factor[(i, k)] * beta[k] * a[k] as f64;
        }
        *vi = acc;
    }
    v
}

/// Minimum effective noise variance of the next combination `a_j` after
/// cancelling the rows of `a_prev`, via the explicit projection
/// `sigma_j^2 = ||(I - Q (Q^T Q)^{-1} Q^T) L E a_j||^2` with columns of
/// `Q` being `L E a_k`.
pub fn effective_noise(
    sys: &PcsSystem,
    a_prev: &[Vec<i64>],
    a_j: &[i64],
    beta: &[f64],
) -> Result<f64, PcsError> {
    let m = sys.num_codebooks();
    let v = le_vector(sys, a_j, beta);
    if a_prev.is_empty() {
        return Ok(v.iter().map(|x| x * x).sum());
    }
    let k = a_prev.len();
    let mut q = Matrix::zeros(m, k);
    for (col, row_coeffs) in a_prev.iter().enumerate() {
        let u = le_vector(sys, row_coeffs, beta);
        for i in 0..m {
            q[(i, col)] = u[i];
        }
    }
    let gram = q.transpose().matmul(&q).symmetrized();
    let scale = gram.max_abs().max(1e-300);
    // reject nearly dependent bases that inversion might silently survive
    if gram.det().abs() < 1e-12 * scale.powi(k as i32) {
        return Err(PcsError::SingularProjection);
    }
    let inv = gram.inverse().map_err(|_| PcsError::SingularProjection)?;
    let vm = Matrix::new(m, 1, v.clone());
    let proj = q.matmul(&inv).matmul(&q.transpose()).matmul(&vm);
    let mut acc = 0.0;
    for i in 0..m {
        let d = v[i] - proj[(i, 0)];
        acc += d * d;
    }
    Ok(acc)
}

/// Full noise profile along the decode order by sequential Gram-Schmidt;
/// `sigma2[j]` is the minimum effective noise of combination `j`.
pub fn sigma_profile(sys: &PcsSystem, a: &IntMat, beta: &[f64]) -> Result<Vec<f64>, PcsError> {
    let m = sys.num_codebooks();
    if a.len() != m || a.iter().any(|row| row.len() != m) {
        return Err(PcsError::BadParams("coefficient matrix must be square".into()));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut out = Vec::with_capacity(m);
    for row in a {
        let mut w = le_vector(sys, row, beta);
        let full: f64 = w.iter().map(|x| x * x).sum();
        for u in &basis {
            let dot: f64 = u.iter().zip(&w).map(|(a, b)| a * b).sum();
            for (wi, ui) in w.iter_mut().zip(u) {
                *wi -= dot * ui;
            }
        }
        let norm2: f64 = w.iter().map(|x| x * x).sum();
        if norm2 <= 1e-13 * full.max(1e-300) {
            return Err(PcsError::SingularProjection);
        }
        out.push(norm2);
        let norm = norm2.sqrt();
        basis.push(w.into_iter().map(|x| x / norm).collect());
    }
    Ok(out)
}

/// Per-codebook rates for a full-rank coefficient matrix.
#[derive(Debug, Clone)]
pub struct PcsRates {
    /// Rate of each codebook, bits, already clamped at zero.
    pub rates: Vec<f64>,
    pub sum: f64,
    pub sigma2: Vec<f64>,
}

/// Rates under coefficient matrix `a` and scalings `beta`: codebook `i`
/// is limited by every combination that uses it,
/// `r_i = min_j 0.5 log+ (beta_i^2 / sigma_j^2)` over `j` with `a[j][i] != 0`.
pub fn pcs_rates(sys: &PcsSystem, a: &IntMat, beta: &[f64]) -> Result<PcsRates, PcsError> {
    let m = sys.num_codebooks();
    if int_det(a) == 0 {
        return Err(PcsError::BadParams("coefficient matrix must be full rank".into()));
    }
    let sigma2 = sigma_profile(sys, a, beta)?;
    let mut rates = Vec::with_capacity(m);
    for i in 0..m {
        let mut r = f64::INFINITY;
        for (j, row) in a.iter().enumerate() {
            if row[i] != 0 {
                r = r.min(0.5 * (beta[i] * beta[i] / sigma2[j]).log2());
            }
        }
        if r == f64::INFINITY {
            return Err(PcsError::BadParams(format!("codebook {i} appears in no combination")));
        }
        rates.push(r.max(0.0));
    }
    let sum = rates.iter().sum();
    Ok(PcsRates { rates, sum, sigma2 })
}

/// Exact integer determinant by cofactor expansion (dims <= 6).
pub fn int_det(a: &IntMat) -> i128 {
    fn go(a: &[Vec<i64>], cols: &mut Vec<usize>, row: usize) -> i128 {
        if cols.len() == 1 {
            return a[row][cols[0]] as i128;
        }
        let mut acc: i128 = 0;
        for idx in 0..cols.len() {
            let c = cols.remove(idx);
            let minor = go(a, cols, row + 1);
            cols.insert(idx, c);
            let term = a[row][c] as i128 * minor;
            if idx % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }
    let n = a.len();
    go(a, &mut (0..n).collect(), 0)
}

/// Streaming exhaustive enumeration of integer matrices with entries in
/// `[-entry_bound, entry_bound]` and determinant +-1, in odometer order.
pub struct UnimodularEnum {
    dim: usize,
    entry_bound: i64,
    digits: Vec<i64>,
    done: bool,
}

/// Guards: `dim <= 6`, `entry_bound <= 5`, and the raw scan must stay
/// under 10^8 candidates.
pub fn unimodular_enum(dim: usize, entry_bound: i64) -> Result<UnimodularEnum, PcsError> {
    if dim == 0 || dim > 6 || entry_bound < 1 || entry_bound > 5 {
        return Err(PcsError::SearchSpaceTooLarge { dim, entry_bound });
    }
    let base = (2 * entry_bound + 1) as f64;
    if base.powi((dim * dim) as i32) > 1e8 {
        return Err(PcsError::SearchSpaceTooLarge { dim, entry_bound });
    }
    Ok(UnimodularEnum { dim, entry_bound, digits: vec![-entry_bound; dim * dim], done: false })
}

impl Iterator for UnimodularEnum {
    type Item = IntMat;

    fn next(&mut self) -> Option<IntMat> {
        while !self.done {
            let mat: IntMat = (0..self.dim)
                .map(|i| self.digits[i * self.dim..(i + 1) * self.dim].to_vec())
                .collect();
            // advance the odometer
            let mut idx = self.digits.len();
            loop {
                if idx == 0 {
                    self.done = true;
                    break;
                }
                idx -= 1;
                if self.digits[idx] < self.entry_bound {
                    self.digits[idx] += 1;
                    for d in self.digits[idx + 1..].iter_mut() {
                        *d = -self.entry_bound;
                    }
                    break;
                }
            }
            if int_det(&mat).abs() == 1 {
                return Some(mat);
            }
        }
        None
    }
}

/// Search configuration for [`pcs_check`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PcsSearch {
    /// Largest coefficient magnitude tried in the unimodular search.
    pub entry_bound: i64,
    /// Log-spaced starting points for the scaling fixed point, per matrix.
    pub beta_grid: usize,
}

impl Default for PcsSearch {
    fn default() -> Self {
        PcsSearch { entry_bound: 3, beta_grid: 4 }
    }
}

/// Accepted witness of the parallel-scheme capacity check.
#[derive(Debug, Clone)]
pub struct PcsWitness {
    /// Unimodular coefficient matrix, rows in decode order.
    pub a: IntMat,
    /// Binding combination of each codebook (the last one using it).
    pub pi: Vec<usize>,
    /// Lattice scalings, normalized to unit geometric mean of the squares.
    pub beta: Vec<f64>,
    /// Noise profile along the decode order at `beta`.
    pub sigma_hat2: Vec<f64>,
}

/// Verdict of the parallel-scheme sum-capacity check.
#[derive(Debug, Clone)]
pub struct PcsReport {
    pub achievable: bool,
    pub witness: Option<PcsWitness>,
    /// Sum rate of the accepted witness, bits.
    pub sum_rate_bits: Option<f64>,
    /// Sum capacity of the instance, bits.
    pub capacity_bits: f64,
    /// Number of codebooks `t1 + t2` (0 when the channel carries nothing).
    pub num_codebooks: usize,
    /// Candidate matrices examined.
    pub candidates_tried: u64,
}

/// Binding map: for each codebook, the index of the last combination with
/// a nonzero coefficient on it. `None` when some codebook is unused.
fn binding_map(a: &IntMat) -> Option<Vec<usize>> {
    let m = a.len();
    let mut pi = vec![usize::MAX; m];
    for i in 0..m {
        for (j, row) in a.iter().enumerate() {
            if row[i] != 0 {
                pi[i] = j;
            }
        }
        if pi[i] == usize::MAX {
            return None;
        }
    }
    Some(pi)
}

/// The tight-scaling residual in centered log coordinates:
/// `F(y) = y - centered(log sigma2_pi(exp(y)))`. A zero of `F` is a
/// scaling vector proportional to its own binding noise.
fn tight_residual(sys: &PcsSystem, a: &IntMat, pi: &[usize], y: &[f64]) -> Option<Vec<f64>> {
    let m = y.len();
    let beta: Vec<f64> = y.iter().map(|l| (0.5 * l).exp()).collect();
    let sigma2 = sigma_profile(sys, a, &beta).ok()?;
    let mut target: Vec<f64> = (0..m).map(|i| sigma2[pi[i]].ln()).collect();
    let mean = target.iter().sum::<f64>() / m as f64;
    Some((0..m).map(|i| y[i] - (target[i] - mean)).collect())
}

fn center(y: &mut [f64]) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    for v in y.iter_mut() {
        *v -= mean;
    }
}

/// All tight fixed points of one coefficient matrix that the solver can
/// locate: plain iteration for the contractive cases, exact bisection in
/// the single-ratio case, Newton with a finite-difference Jacobian
/// otherwise (unstable fixed points repel the iteration but not Newton).
fn solve_tight(
    sys: &PcsSystem,
    a: &IntMat,
    pi: &[usize],
    beta_grid: usize,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let m = sys.num_codebooks();
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut push = |y: Vec<f64>, found: &mut Vec<Vec<f64>>| {
        if y.iter().all(|v| v.is_finite())
            && !found.iter().any(|f| {
                f.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max) < 1e-6
            })
        {
            found.push(y);
        }
    };

    if m == 1 {
        push(vec![0.0], &mut found);
    } else if m == 2 {
        // one ratio: y = (u, -u); bisect sign changes of the residual
        let rho = |u: f64| tight_residual(sys, a, pi, &[u, -u]).map(|f| f[0]);
        let grid = 96;
        let lo = -24.0;
        let hi = 24.0;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=grid {
            let u = lo + (hi - lo) * i as f64 / grid as f64;
            let Some(val) = rho(u) else {
                prev = None;
                continue;
            };
            if let Some((pu, pv)) = prev {
                if pv == 0.0 {
                    push(vec![pu, -pu], &mut found);
                } else if pv * val < 0.0 {
                    let (mut a0, mut b0) = (pu, u);
                    let mut fa = pv;
                    for _ in 0..60 {
                        let mid = 0.5 * (a0 + b0);
                        let Some(fm) = rho(mid) else { break };
                        if fa * fm <= 0.0 {
                            b0 = mid;
                        } else {
                            a0 = mid;
                            fa = fm;
                        }
                    }
                    let u_root = 0.5 * (a0 + b0);
                    push(vec![u_root, -u_root], &mut found);
                }
            }
            prev = Some((u, val));
        }
    } else {
        // quick contractive attempt from the flat start
        let mut y = vec![0.0; m];
        for _ in 0..100 {
            let Some(f) = tight_residual(sys, a, pi, &y) else { break };
            let delta = f.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            for (yi, fi) in y.iter_mut().zip(&f) {
                *yi -= fi;
            }
            center(&mut y);
            if y.iter().any(|v| v.abs() > 60.0) {
                break;
            }
            if delta < 1e-9 {
                push(y.clone(), &mut found);
                break;
            }
        }
        // Newton from the flat start plus single-axis perturbations
        let mut seeds = vec![vec![0.0; m]];
        for g in 0..beta_grid {
            let mut s = vec![0.0; m];
            s[g % m] = 2.5 * (1 + g / m) as f64 * if g % 2 == 0 { 1.0 } else { -1.0 };
            center(&mut s);
            seeds.push(s);
        }
        'seed: for seed in seeds {
            let mut y = seed;
            for _ in 0..40 {
                let Some(f) = tight_residual(sys, a, pi, &y) else { continue 'seed };
                let norm = f.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                if norm < 1e-9 {
                    push(y.clone(), &mut found);
                    continue 'seed;
                }
                // finite-difference Jacobian on the first m-1 coordinates;
                // the last one is pinned by the zero-sum constraint
                let n = m - 1;
                let h = 1e-6;
                let mut jac = Matrix::zeros(n, n);
                for k in 0..n {
                    let mut yk = y.clone();
                    yk[k] += h;
                    yk[m - 1] -= h;
                    let Some(fk) = tight_residual(sys, a, pi, &yk) else { continue 'seed };
                    for i in 0..n {
                        jac[(i, k)] = (fk[i] - f[i]) / h;
                    }
                }
                let rhs = Matrix::new(n, 1, f[..n].to_vec());
                let Ok(inv) = jac.inverse() else { continue 'seed };
                let step = inv.matmul(&rhs);
                let mut scale = 1.0f64;
                for i in 0..n {
                    scale = scale.min(4.0 / step[(i, 0)].abs().max(1e-12));
                }
                let scale = scale.min(1.0);
                for i in 0..n {
                    y[i] -= scale * step[(i, 0)];
                }
                y[m - 1] = -y[..n].iter().sum::<f64>();
                if y.iter().any(|v| v.abs() > 80.0) {
                    continue 'seed;
                }
            }
        }
    }

    found
        .into_iter()
        .filter_map(|y| {
            let beta: Vec<f64> = y.iter().map(|l| (0.5 * l).exp()).collect();
            let sigma2 = sigma_profile(sys, a, &beta).ok()?;
            // confirm the fixed point: beta_i^2 proportional to sigma2_pi(i)
            let ratios: Vec<f64> =
                (0..beta.len()).map(|i| beta[i] * beta[i] / sigma2[pi[i]]).collect();
            let (rmin, rmax) =
                ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(*r), hi.max(*r)));
            if rmax / rmin > 1.0 + 1e-6 {
                return None;
            }
            Some((beta, sigma2))
        })
        .collect()
}

/// Validity of a converged profile: noise nondecreasing along the decode
/// order and every codebook scaling at least its binding noise.
fn profile_valid(beta: &[f64], sigma2: &[f64], pi: &[usize]) -> bool {
    for w in sigma2.windows(2) {
        if w[1] < w[0] * (1.0 - 1e-9) {
            return false;
        }
    }
    for (i, &b) in beta.iter().enumerate() {
        if b * b < sigma2[pi[i]] * (1.0 - 1e-9) {
            return false;
        }
    }
    true
}

/// Candidate coefficient matrices: every nonnegative determinant-one
/// matrix with a bijective binding map is an even column permutation of
/// an upper-triangular nonnegative matrix with unit diagonal, so the
/// search enumerates exactly that family.
fn perm_is_even(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    let mut transpositions = 0usize;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0usize;
        let mut at = start;
        while !seen[at] {
            seen[at] = true;
            at = perm[at];
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 0
}

fn structured_candidates(m: usize, entry_bound: i64) -> Vec<IntMat> {
    // column permutations in lexicographic order
    fn perms(m: usize) -> Vec<Vec<usize>> {
        fn recurse(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if rest.is_empty() {
                out.push(prefix.clone());
                return;
            }
            for i in 0..rest.len() {
                let x = rest.remove(i);
                prefix.push(x);
                recurse(prefix, rest, out);
                prefix.pop();
                rest.insert(i, x);
            }
        }
        let mut out = Vec::new();
        recurse(&mut Vec::new(), &mut (0..m).collect(), &mut out);
        out
    }
    // off-diagonal coefficient values, ascending
    let values: Vec<i64> = (0..=entry_bound).collect();
    // even permutations keep the determinant at +1
    let perms: Vec<Vec<usize>> = perms(m).into_iter().filter(|p| perm_is_even(p)).collect();
    let offdiag = m * (m - 1) / 2;
    let mut out = Vec::new();
    let mut digits = vec![0usize; offdiag];
    loop {
        // upper-triangular core with unit diagonal
        let mut u = vec![vec![0i64; m]; m];
        let mut idx = 0;
        for (i, row) in u.iter_mut().enumerate() {
            row[i] = 1;
            for j in (i + 1)..m {
                row[j] = values[digits[idx]];
                idx += 1;
            }
        }
        for perm in &perms {
            // column perm[k] of the candidate is column k of the core
            let mut a = vec![vec![0i64; m]; m];
            for i in 0..m {
                for k in 0..m {
                    a[i][perm[k]] = u[i][k];
                }
            }
            out.push(a);
        }
        // advance
        let mut pos = offdiag;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if digits[pos] + 1 < values.len() {
                digits[pos] += 1;
                for d in digits[pos + 1..].iter_mut() {
                    *d = 0;
                }
                break;
            }
        }
    }
}

/// Decides sum-capacity achievability of the parallel scheme at power `p`
/// (linear). The first accepted witness in enumeration order is returned,
/// re-verified through the explicit projection formula.
pub fn pcs_check(ch: &ChannelPair, p: f64, search: PcsSearch) -> Result<PcsReport, PcsError> {
    let cap = sum_capacity(ch, p).map_err(|e| PcsError::BadParams(e.to_string()))?;
    pcs_check_with_capacity(ch, &cap.covariances, search)
}

/// As [`pcs_check`] with a precomputed water-filling solution.
pub fn pcs_check_with_capacity(
    ch: &ChannelPair,
    cov: &CovariancePair,
    search: PcsSearch,
) -> Result<PcsReport, PcsError> {
    let sys = match build_equivalent_simo(ch, cov) {
        Ok(sys) => sys,
        Err(PcsError::EmptySystem) => {
            // nothing to transmit: zero capacity is trivially reached
            return Ok(PcsReport {
                achievable: true,
                witness: None,
                sum_rate_bits: Some(0.0),
                capacity_bits: 0.0,
                num_codebooks: 0,
                candidates_tried: 0,
            });
        }
        Err(e) => return Err(e),
    };
    let m = sys.num_codebooks();
    if m > 6 {
        return Err(PcsError::SearchSpaceTooLarge { dim: m, entry_bound: search.entry_bound });
    }
    let capacity_bits = sys.capacity_bits();
    let mut tried = 0u64;
    for a in structured_candidates(m, search.entry_bound) {
        tried += 1;
        let Some(pi) = binding_map(&a) else { continue };
        for (beta, sigma2) in solve_tight(&sys, &a, &pi, search.beta_grid) {
            if !profile_valid(&beta, &sigma2, &pi) {
                continue;
            }
            if let Some(report) = verify_witness(&sys, &a, &pi, &beta, capacity_bits, tried) {
                return Ok(report);
            }
        }
    }
    Ok(PcsReport {
        achievable: false,
        witness: None,
        sum_rate_bits: None,
        capacity_bits,
        num_codebooks: m,
        candidates_tried: tried,
    })
}

/// Re-checks an accepting assignment against its own invariants through
/// the explicit projection formula rather than the Gram-Schmidt fast
/// path: unimodularity, profile ordering, scaling feasibility, and the
/// sum rate reaching capacity.
fn verify_witness(
    sys: &PcsSystem,
    a: &IntMat,
    pi: &[usize],
    beta: &[f64],
    capacity_bits: f64,
    tried: u64,
) -> Option<PcsReport> {
    if int_det(a) != 1 {
        return None;
    }
    let m = sys.num_codebooks();
    let mut sigma2 = Vec::with_capacity(m);
    for j in 0..m {
        let prev: Vec<Vec<i64>> = a[..j].to_vec();
        sigma2.push(effective_noise(sys, &prev, &a[j], beta).ok()?);
    }
    if !profile_valid(beta, &sigma2, pi) {
        return None;
    }
    let rates = pcs_rates(sys, a, beta).ok()?;
    if (rates.sum - capacity_bits).abs() > 1e-7 {
        return None;
    }
    Some(PcsReport {
        achievable: true,
        witness: Some(PcsWitness {
            a: a.clone(),
            pi: pi.to_vec(),
            beta: beta.to_vec(),
            sigma_hat2: sigma2,
        }),
        sum_rate_bits: Some(rates.sum),
        capacity_bits,
        num_codebooks: m,
        candidates_tried: tried,
    })
}
