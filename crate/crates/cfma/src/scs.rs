//! Serial coding scheme: one lattice codebook per user, split across that
//! user's transmit antennas.
//!
//! The receiver decodes two integer combinations of the codewords with
//! coefficient vectors `a`, `b` and per-user lattice scalings `beta`. The
//! achievable rate pair follows from the determinant of the effective
//! noise covariance; the sum capacity is attained exactly when the
//! degree-2t polynomial `g(gamma)` built from the optimal precoders dips
//! to zero for some positive scaling ratio `gamma = beta1/beta2`. Special
//! shapes (single transmit antenna, diagonal 2x2, shared-SVD effective
//! channels) carry closed-form conditions that the general check must
//! agree with.

use crate::channel::{c_d, sum_capacity, ChannelPair, CovariancePair};
use crate::matrix::{MatError, Matrix};
use crate::poly::Polynomial;
use std::fmt;

/// Achievability tolerance: `min g <= SCS_TOL * |leading coefficient|`
/// counts as achievable, so boundary cases with a double root pass.
pub const SCS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub enum ScsError {
    /// A required rate in the min-rule came out negative; the raw pair is
    /// attached so callers can still inspect the computed values.
    InfeasibleRates(Box<ScsRatePair>),
    /// Both antennas of one slot carry zero power: the system splits into
    /// independent single-user links and the two-user analysis is moot.
    DegeneratePowerSplit,
    /// The channel geometry admits no finite power threshold.
    Inapplicable,
    /// Parameters violate their invariants (shape, sign, independence).
    BadParams(String),
    Mat(MatError),
}

impl fmt::Display for ScsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScsError::InfeasibleRates(p) => {
                write!(f, "rate pair infeasible: r(a)={:?} r(b|a)={:?}", p.r_a, p.r_b_given_a)
            }
            ScsError::DegeneratePowerSplit => {
                write!(f, "power splitting degenerates to independent point-to-point links")
            }
            ScsError::Inapplicable => write!(f, "no finite power threshold for this geometry"),
            ScsError::BadParams(why) => write!(f, "bad parameters: {why}"),
            ScsError::Mat(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ScsError {}

impl From<MatError> for ScsError {
    fn from(e: MatError) -> Self {
        ScsError::Mat(e)
    }
}

/// Integer combination coefficients and lattice scalings for the two
/// decoded combinations, plus the precoders in use.
#[derive(Debug, Clone)]
pub struct ScsParams {
    pub a: [i64; 2],
    pub b: [i64; 2],
    pub beta: [f64; 2],
    pub b1: Matrix,
    pub b2: Matrix,
}

impl ScsParams {
    pub fn new(
        a: [i64; 2],
        b: [i64; 2],
        beta: [f64; 2],
        b1: Matrix,
        b2: Matrix,
    ) -> Result<Self, ScsError> {
        if a[0] * b[1] - a[1] * b[0] == 0 {
            return Err(ScsError::BadParams("a and b must be linearly independent".into()));
        }
        if beta[0] <= 0.0 || beta[1] <= 0.0 {
            return Err(ScsError::BadParams("beta entries must be positive".into()));
        }
        if !b1.is_square() || !b2.is_square() || b1.rows() != b2.rows() {
            return Err(ScsError::BadParams("precoders must be square and same size".into()));
        }
        Ok(ScsParams { a, b, beta, b1, b2 })
    }

    /// Scaled coefficients of the first combination.
    fn a_tilde(&self) -> [f64; 2] {
        [self.a[0] as f64 * self.beta[0], self.a[1] as f64 * self.beta[1]]
    }

    fn b_tilde(&self) -> [f64; 2] {
        [self.b[0] as f64 * self.beta[0], self.b[1] as f64 * self.beta[1]]
    }

    /// Checks `B_l B_l^T = K_l` against a covariance pair.
    pub fn matches_covariances(&self, cov: &CovariancePair, tol: f64) -> bool {
        let r1 = (&self.b1.matmul(&self.b1.transpose()) - &cov.k1).frob_norm();
        let r2 = (&self.b2.matmul(&self.b2.transpose()) - &cov.k2).frob_norm();
        let scale = cov.k1.frob_norm().max(cov.k2.frob_norm()).max(1.0);
        r1 <= tol * scale && r2 <= tol * scale
    }
}

/// Effective-noise core matrix of the first combination:
/// `M = (a1~^2 + a2~^2) I_t + (a1~ B2^T H2^T - a2~ B1^T H1^T)(a1~ H2 B2 - a2~ H1 B1)`.
pub fn m_matrix(ch: &ChannelPair, params: &ScsParams) -> Matrix {
    let t = ch.t();
    let [at1, at2] = params.a_tilde();
    let x1 = ch.h1().matmul(&params.b1);
    let x2 = ch.h2().matmul(&params.b2);
    let diff = &x2.scale(at1) - &x1.scale(at2);
    &Matrix::identity(t).scale(at1 * at1 + at2 * at2) + &diff.transpose().matmul(&diff)
}

/// Per-user rates of both decoding stages and the assembled pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScsRatePair {
    /// Per-user rate of the first combination, bits.
    pub r_a: [f64; 2],
    /// Per-user rate of the second combination given the first, bits.
    pub r_b_given_a: [f64; 2],
    /// Final per-user rates under the zero-coefficient case rule.
    pub r1: f64,
    pub r2: f64,
    /// Determinant of the core matrix `M`.
    pub m_det: f64,
}

impl ScsRatePair {
    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }
}

/// Achievable rate pair for the given combination coefficients. Stage
/// rates are reported unclamped; the pair is rejected as infeasible when
/// a rate required by the case rule is negative.
pub fn scs_rate_pair(
    ch: &ChannelPair,
    cov: &CovariancePair,
    params: &ScsParams,
) -> Result<ScsRatePair, ScsError> {
    if !params.matches_covariances(cov, 1e-8) {
        return Err(ScsError::BadParams("precoders do not factor the covariances".into()));
    }
    let t = ch.t() as i32;
    let m = m_matrix(ch, params);
    let m_det = m.det();
    let cd_raw = c_d(ch, cov);
    let [at1, at2] = params.a_tilde();
    let [bt1, bt2] = params.b_tilde();
    let cross = at1 * bt2 - at2 * bt1;

    let stage1 = |beta: f64| 0.5 * (beta.powi(2 * t) * cd_raw / m_det).log2();
    let stage2 = |beta: f64| 0.5 * (beta.powi(2 * t) * m_det / cross.powi(2 * t)).log2();
    let r_a = [stage1(params.beta[0]), stage1(params.beta[1])];
    let r_b_given_a = [stage2(params.beta[0]), stage2(params.beta[1])];

    // case rule: a zero coefficient in one combination exempts that user
    // from the corresponding stage
    let assemble = |l: usize| -> f64 {
        if params.b[l] == 0 {
            r_a[l]
        } else if params.a[l] == 0 {
            r_b_given_a[l]
        } else {
            r_a[l].min(r_b_given_a[l])
        }
    };
    let pair = ScsRatePair { r_a, r_b_given_a, r1: assemble(0), r2: assemble(1), m_det };

    let required_nonneg = |l: usize| -> bool {
        let mut ok = true;
        if params.b[l] != 0 {
            ok &= r_b_given_a[l] >= -1e-12;
        }
        if params.a[l] != 0 {
            ok &= r_a[l] >= -1e-12;
        }
        ok
    };
    if !(required_nonneg(0) && required_nonneg(1)) {
        return Err(ScsError::InfeasibleRates(Box::new(pair)));
    }
    Ok(pair)
}

/// Sum-capacity polynomial `g(gamma) = f(gamma) - sqrt(c_d) * gamma^t`,
/// where `f` is the determinant of the first-combination noise core at
/// `a = (1,1)`, `beta = (gamma, 1)`, expressed as a polynomial of degree
/// `2t` by evaluating at Chebyshev nodes and interpolating.
pub fn g_polynomial(ch: &ChannelPair, b1: &Matrix, b2: &Matrix, cd: f64) -> Polynomial {
    let t = ch.t();
    let x1 = ch.h1().matmul(b1);
    let x2 = ch.h2().matmul(b2);
    let f_eval = |gamma: f64| -> f64 {
        let diff = &x2.scale(gamma) - &x1;
        (&Matrix::identity(t).scale(gamma * gamma + 1.0) + &diff.transpose().matmul(&diff)).det()
    };
    let n = 2 * t + 1;
    // Chebyshev nodes on [-1, 1]
    let nodes: Vec<f64> = (0..n)
        .map(|k| (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64).cos())
        .collect();
    let mut vand = Matrix::zeros(n, n);
    for (i, &x) in nodes.iter().enumerate() {
        let mut pw = 1.0;
        for j in 0..n {
            vand[(i, j)] = pw;
            pw *= x;
        }
    }
    let rhs = Matrix::new(n, 1, nodes.iter().map(|&x| f_eval(x)).collect());
    let coeffs_mat = vand
        .inverse()
        .expect("Chebyshev Vandermonde is well conditioned at degree <= 2t")
        .matmul(&rhs);
    let mut coeffs: Vec<f64> = (0..n).map(|i| coeffs_mat[(i, 0)]).collect();
    coeffs[t] -= cd.max(0.0).sqrt();
    Polynomial::new(coeffs)
}

/// Precoder families tried by [`scs_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderStrategy {
    /// Plain Cholesky factors of the optimal covariances.
    Cholesky,
    /// Cholesky factors right-multiplied by every permutation matrix pair.
    CholeskyPermutations,
}

impl PrecoderStrategy {
    pub fn label(&self) -> &'static str {
        match self {
            PrecoderStrategy::Cholesky => "cholesky",
            PrecoderStrategy::CholeskyPermutations => "cholesky x permutations",
        }
    }
}

/// Verdict of the serial-scheme sum-capacity check.
#[derive(Debug, Clone)]
pub struct ScsReport {
    pub achievable: bool,
    /// A positive scaling ratio at which `g` is non-positive, when found.
    pub gamma_witness: Option<f64>,
    /// Interval of admissible ratios around the witness, when bracketed.
    pub gamma_interval: Option<(f64, f64)>,
    /// The polynomial of the best precoder candidate.
    pub g_poly: Polynomial,
    pub precoder_choice: &'static str,
    /// Smallest polynomial value seen over positive ratios, normalized by
    /// the leading coefficient.
    pub g_min_rel: f64,
}

fn permutations(t: usize) -> Vec<Matrix> {
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
    let mut all = Vec::new();
    recurse(&mut Vec::new(), &mut (0..t).collect(), &mut all);
    all.into_iter()
        .map(|perm| {
            let mut p = Matrix::zeros(t, t);
            for (row, &col) in perm.iter().enumerate() {
                p[(row, col)] = 1.0;
            }
            p
        })
        .collect()
}

/// Searches positive gamma for `g(gamma) <= tol`: positive real roots
/// first, then a log-spaced fallback grid that guards against root-finder
/// misses on ill-conditioned high-power instances.
fn gamma_search(g: &Polynomial) -> (bool, Option<f64>, Option<(f64, f64)>, f64) {
    let lead = g.leading().abs().max(1e-300);
    let tol = SCS_TOL * lead;
    let mut best_gamma = None;
    let mut best_val = f64::INFINITY;
    let mut interval = None;

    if let Ok(roots) = g.real_roots() {
        let pos: Vec<f64> = roots.into_iter().filter(|r| *r > 0.0).collect();
        // interval between consecutive roots where g dips negative
        for w in pos.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if g.eval(mid) < 0.0 {
                interval = Some((w[0], w[1]));
                best_gamma = Some(mid);
                best_val = g.eval(mid);
                break;
            }
        }
        if best_gamma.is_none() {
            if let Some(&r) = pos.first() {
                // touching root: g(r) ~ 0 counts
                best_gamma = Some(r);
                best_val = g.eval(r);
            }
        }
    }
    // fallback grid
    if best_val > tol {
        let n = 2000;
        for i in 0..=n {
            let gamma = 10f64.powf(-3.0 + 6.0 * i as f64 / n as f64);
            let v = g.eval(gamma);
            if v < best_val {
                best_val = v;
                best_gamma = Some(gamma);
            }
        }
    }
    let achievable = best_val <= tol;
    (
        achievable,
        if achievable { best_gamma } else { None },
        if achievable { interval } else { None },
        best_val / lead,
    )
}

/// Decides sum-capacity achievability of the serial scheme at power `p`
/// (linear) under the given precoder strategy.
pub fn scs_check(
    ch: &ChannelPair,
    p: f64,
    strategy: PrecoderStrategy,
) -> Result<ScsReport, ScsError> {
    let cap = sum_capacity(ch, p).map_err(|e| ScsError::BadParams(e.to_string()))?;
    scs_check_with_capacity(ch, &cap.covariances, cap.c_d, strategy)
}

/// Same as [`scs_check`] but reusing an already computed water-filling
/// solution, so sweeps do not repeat the optimization per scheme.
pub fn scs_check_with_capacity(
    ch: &ChannelPair,
    cov: &CovariancePair,
    cd: f64,
    strategy: PrecoderStrategy,
) -> Result<ScsReport, ScsError> {
    let b1 = cov.k1.cholesky()?;
    let b2 = cov.k2.cholesky()?;
    let candidates: Vec<(Matrix, Matrix)> = match strategy {
        PrecoderStrategy::Cholesky => vec![(b1, b2)],
        PrecoderStrategy::CholeskyPermutations => {
            let perms = permutations(ch.t());
            let mut out = Vec::with_capacity(perms.len() * perms.len());
            for p1 in &perms {
                for p2 in &perms {
                    out.push((b1.matmul(p1), b2.matmul(p2)));
                }
            }
            out
        }
    };
    let mut report: Option<ScsReport> = None;
    for (c1, c2) in candidates {
        let g = g_polynomial(ch, &c1, &c2, cd);
        let (achievable, witness, interval, min_rel) = gamma_search(&g);
        let better = match &report {
            None => true,
            Some(r) => {
                (achievable && !r.achievable)
                    || (achievable == r.achievable && min_rel < r.g_min_rel)
            }
        };
        if better {
            report = Some(ScsReport {
                achievable,
                gamma_witness: witness,
                gamma_interval: interval,
                g_poly: g,
                precoder_choice: strategy.label(),
                g_min_rel: min_rel,
            });
        }
        if report.as_ref().is_some_and(|r| r.achievable) {
            break;
        }
    }
    Ok(report.expect("at least one precoder candidate"))
}

/// Closed-form single-transmit-antenna check.
#[derive(Debug, Clone)]
pub struct SimoReport {
    pub achievable: bool,
    /// Discriminant of the scaling-ratio quadratic.
    pub delta: f64,
    /// Admissible ratio interval when the discriminant is nonnegative.
    pub gamma_interval: Option<(f64, f64)>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn simo_cd(h1: &[f64], h2: &[f64], p: f64) -> f64 {
    let r = h1.len();
    let g = &Matrix::col_vec(h1).matmul(&Matrix::col_vec(h1).transpose())
        + &Matrix::col_vec(h2).matmul(&Matrix::col_vec(h2).transpose());
    (&Matrix::identity(r) + &g.scale(p)).det()
}

/// Sum-capacity condition for `t = 1`: achievable iff the discriminant
/// `(sqrt(C_d) + 2P h1.h2)^2 - 4(1 + P|h1|^2)(1 + P|h2|^2)` is nonnegative,
/// with the ratio chosen between the two quadratic roots.
pub fn simo_check(h1: &[f64], h2: &[f64], p: f64) -> SimoReport {
    assert_eq!(h1.len(), h2.len(), "channel vectors must share length");
    let cd = simo_cd(h1, h2, p);
    let n1 = dot(h1, h1);
    let n2 = dot(h2, h2);
    let cross = dot(h1, h2);
    let s = cd.sqrt() + 2.0 * p * cross;
    let delta = s * s - 4.0 * (1.0 + p * n1) * (1.0 + p * n2);
    let achievable = delta >= 0.0;
    let gamma_interval = if achievable {
        let den = 2.0 * (1.0 + p * n2);
        Some(((s - delta.sqrt()) / den, (s + delta.sqrt()) / den))
    } else {
        None
    };
    SimoReport { achievable, delta, gamma_interval }
}

/// Power-threshold analysis for `t = 1`.
#[derive(Debug, Clone)]
pub struct PowerThreshold {
    /// True when the geometry admits achievability at some finite power.
    pub condition_met: bool,
    /// Smallest power beyond which the discriminant stays nonnegative.
    pub p_star: Option<f64>,
    pub collinear: bool,
}

/// Finds the power threshold beyond which the single-antenna scheme
/// reaches sum capacity. Collinear channels use the closed ratio test;
/// independent channels require the spectral condition
/// `(sqrt(l1 l2) + 2 h1.h2)^2 > 4 |h1|^2 |h2|^2`, otherwise no finite
/// threshold is guaranteed and `Inapplicable` is returned.
pub fn simo_power_threshold(h1: &[f64], h2: &[f64]) -> Result<PowerThreshold, ScsError> {
    assert_eq!(h1.len(), h2.len());
    let n1 = dot(h1, h1);
    let n2 = dot(h2, h2);
    let cross = dot(h1, h2);
    let collinear = (n1 * n2 - cross * cross).abs() <= 1e-12 * (n1 * n2).max(1.0);

    if collinear {
        // P h1.h2 / sqrt(1 + P(|h1|^2 + |h2|^2)) >= 3/4, monotone in P
        if cross <= 0.0 {
            return Ok(PowerThreshold { condition_met: false, p_star: None, collinear });
        }
        // threshold solves c^2 P^2 - (9/16)(s P + 1) = 0 with s = n1 + n2
        let s = n1 + n2;
        let q = Polynomial::new(vec![-9.0 / 16.0, -9.0 / 16.0 * s, cross * cross]);
        let p_star = q
            .real_roots()
            .ok()
            .and_then(|roots| roots.into_iter().filter(|r| *r > 0.0).next_back());
        return Ok(PowerThreshold { condition_met: true, p_star, collinear });
    }

    let gram = &Matrix::col_vec(h1).matmul(&Matrix::col_vec(h1).transpose())
        + &Matrix::col_vec(h2).matmul(&Matrix::col_vec(h2).transpose());
    let (lam, _) = gram.sym_eigen()?;
    let (l1, l2) = (lam[0].max(0.0), lam[1].max(0.0));
    let lhs = ((l1 * l2).sqrt() + 2.0 * cross).powi(2);
    if lhs <= 4.0 * n1 * n2 {
        return Err(ScsError::Inapplicable);
    }
    // Delta(P) = 0 implies D(P) := q(P)^2 - 16 P^2 (h1.h2)^2 C_d(P) = 0 with
    // q(P) = C_d + 4 P^2 (h1.h2)^2 - 4 (1 + P n1)(1 + P n2); both C_d and q
    // are quadratics in P, so D is a quartic handled by the root finder.
    let cd_poly = [1.0, l1 + l2, l1 * l2]; // (1 + l1 P)(1 + l2 P)
    let q_poly = [
        cd_poly[0] - 4.0,
        cd_poly[1] - 4.0 * (n1 + n2),
        cd_poly[2] + 4.0 * cross * cross - 4.0 * n1 * n2,
    ];
    let mut d = vec![0.0; 5];
    for i in 0..3 {
        for j in 0..3 {
            d[i + j] += q_poly[i] * q_poly[j];
        }
    }
    for (i, c) in cd_poly.iter().enumerate() {
        d[i + 2] -= 16.0 * cross * cross * c;
    }
    let delta_at = |p: f64| simo_check(h1, h2, p).delta;
    let p_star = Polynomial::new(d)
        .real_roots()
        .ok()
        .map(|roots| {
            roots
                .into_iter()
                .filter(|r| *r > 0.0 && delta_at(*r).abs() <= 1e-6 * (1.0 + r * r))
                .fold(f64::NAN, f64::max)
        })
        .filter(|p| p.is_finite());
    Ok(PowerThreshold { condition_met: true, p_star, collinear })
}

/// Which closed-form condition a diagonal 2x2 system satisfies.
#[derive(Debug, Clone)]
pub struct DiagonalReport {
    pub condition1: bool,
    pub condition2: bool,
    /// Fixed scaling ratio prescribed by the first condition.
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
}

impl DiagonalReport {
    pub fn any(&self) -> bool {
        self.condition1 || self.condition2
    }
}

/// Large-power achievability conditions for diagonal 2x2 channels with
/// diagonal power splits. Errors with `DegeneratePowerSplit` when the
/// split reduces the system to two independent single-user links.
pub fn diagonal_check(ch: &ChannelPair, cov: &CovariancePair) -> Result<DiagonalReport, ScsError> {
    let (r, t) = (ch.r(), ch.t());
    if r != 2 || t != 2 {
        return Err(ScsError::BadParams("diagonal check expects 2x2 channels".into()));
    }
    for m in [ch.h1(), ch.h2(), &cov.k1, &cov.k2] {
        if m[(0, 1)].abs() > 1e-9 || m[(1, 0)].abs() > 1e-9 {
            return Err(ScsError::BadParams("matrices must be diagonal".into()));
        }
    }
    let p = cov.p;
    let k = [[cov.k1[(0, 0)], cov.k1[(1, 1)]], [cov.k2[(0, 0)], cov.k2[(1, 1)]]];
    let tol = 1e-12 * p.max(1.0);
    if (k[0][0] <= tol && k[1][1] <= tol) || (k[0][1] <= tol && k[1][0] <= tol) {
        return Err(ScsError::DegeneratePowerSplit);
    }
    let h = [[ch.h1()[(0, 0)], ch.h1()[(1, 1)]], [ch.h2()[(0, 0)], ch.h2()[(1, 1)]]];
    // c_lj = h_lj sqrt(k_lj / P)
    let c = [
        [h[0][0] * (k[0][0] / p).sqrt(), h[0][1] * (k[0][1] / p).sqrt()],
        [h[1][0] * (k[1][0] / p).sqrt(), h[1][1] * (k[1][1] / p).sqrt()],
    ];
    let mut condition1 = false;
    let mut gamma1 = None;
    if k[0][0] > tol && k[1][0] > tol {
        let lhs = (c[1][1] / c[1][0] - c[0][1] / c[0][0]).powi(2);
        let rhs =
            ((c[0][1].powi(2) + c[1][1].powi(2)) / (c[0][0].powi(2) + c[1][0].powi(2))).sqrt();
        if lhs < rhs {
            condition1 = true;
            gamma1 = Some(c[0][0] / c[1][0]);
        }
    }
    let mut condition2 = false;
    let mut gamma2 = None;
    if k[0][1] > tol && k[1][1] > tol {
        let lhs = (c[1][0] / c[1][1] - c[0][0] / c[0][1]).powi(2);
        let rhs =
            ((c[0][0].powi(2) + c[1][0].powi(2)) / (c[0][1].powi(2) + c[1][1].powi(2))).sqrt();
        if lhs < rhs {
            condition2 = true;
            gamma2 = Some(c[0][1] / c[1][1]);
        }
    }
    Ok(DiagonalReport { condition1, condition2, gamma1, gamma2 })
}

/// Shared-SVD factor check.
#[derive(Debug, Clone)]
pub struct SvdCheckReport {
    pub achievable: bool,
    /// Index of the factor whose discriminant is nonnegative.
    pub factor: Option<usize>,
    pub gamma_witness: Option<f64>,
}

/// Achievability test when both effective channels share singular-vector
/// factors: some index must satisfy
/// `4 l1_i l2_i - 3 sqrt(1 + l1_i^2 + l2_i^2) >= 0`.
pub fn svd_check(lambda1: &[f64], lambda2: &[f64]) -> SvdCheckReport {
    assert_eq!(lambda1.len(), lambda2.len(), "singular value vectors must share length");
    for (i, (&l1, &l2)) in lambda1.iter().zip(lambda2).enumerate() {
        let disc = 4.0 * l1 * l2 - 3.0 * (1.0 + l1 * l1 + l2 * l2).sqrt();
        if disc >= -1e-12 {
            let gi = Polynomial::new(vec![
                1.0 + l1 * l1,
                -(2.0 * l1 * l2 + (1.0 + l1 * l1 + l2 * l2).sqrt()),
                1.0 + l2 * l2,
            ]);
            let witness =
                gi.real_roots().ok().and_then(|roots| roots.into_iter().find(|r| *r > 0.0));
            return SvdCheckReport { achievable: true, factor: Some(i), gamma_witness: witness };
        }
    }
    SvdCheckReport { achievable: false, factor: None, gamma_witness: None }
}

/// Shared-SVD structure detection on the effective channels `H_l B_l`.
#[derive(Debug, Clone)]
pub struct StructureReport {
    pub shared_svd: bool,
    /// `(S, V1, V2, D)` when the factors match.
    pub factors: Option<(Matrix, Matrix, Matrix, Matrix)>,
}

/// Default factor-matching tolerance.
pub const SHARED_SVD_TOL: f64 = 1e-6;

/// Detects whether `H1 B1` and `H2 B2` share left/right singular-vector
/// factors up to per-column sign, at tolerance [`SHARED_SVD_TOL`].
pub fn structure_detect(ch: &ChannelPair, cov: &CovariancePair) -> Result<StructureReport, ScsError> {
    structure_detect_with_tol(ch, cov, SHARED_SVD_TOL)
}

/// As [`structure_detect`] with an explicit tolerance; loose tolerances
/// classify "nearly shared" factor pairs as shared.
pub fn structure_detect_with_tol(
    ch: &ChannelPair,
    cov: &CovariancePair,
    tol: f64,
) -> Result<StructureReport, ScsError> {
    let b1 = cov.k1.cholesky()?;
    let b2 = cov.k2.cholesky()?;
    let x1 = ch.h1().matmul(&b1);
    let x2 = ch.h2().matmul(&b2);
    if !x1.is_square() {
        return Err(ScsError::BadParams("effective channels must be square".into()));
    }
    let svd1 = x1.svd()?;
    let svd2 = x2.svd()?;
    let (mut s1, v1, mut d1) = (svd1.s.clone(), svd1.v_matrix(), svd1.d.clone());
    let (mut s2, v2, mut d2) = (svd2.s.clone(), svd2.v_matrix(), svd2.d.clone());
    canonicalize_signs(&mut s1, &mut d1);
    canonicalize_signs(&mut s2, &mut d2);
    let shared = (&s1 - &s2).max_abs() <= tol && (&d1 - &d2).max_abs() <= tol;
    let factors = if shared { Some((s1, v1, v2, d1)) } else { None };
    Ok(StructureReport { shared_svd: shared, factors })
}

/// Flips each (left, right) singular-vector column pair so the
/// largest-magnitude entry of the left column is positive.
fn canonicalize_signs(s: &mut Matrix, d: &mut Matrix) {
    let n = s.cols();
    for j in 0..n.min(d.cols()) {
        let mut pivot = 0;
        for i in 1..s.rows() {
            if s[(i, j)].abs() > s[(pivot, j)].abs() {
                pivot = i;
            }
        }
        if s[(pivot, j)] < 0.0 {
            for i in 0..s.rows() {
                s[(i, j)] = -s[(i, j)];
            }
            for i in 0..d.rows() {
                d[(i, j)] = -d[(i, j)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{random_channel, Uniform};
    use crate::rng::SplitMix64;

    fn scalar_channel(h1: f64, h2: f64) -> ChannelPair {
        ChannelPair::new(Matrix::new(1, 1, vec![h1]), Matrix::new(1, 1, vec![h2]))
    }

    fn reference_mac() -> ChannelPair {
        ChannelPair::new(
            Matrix::from_rows(&[vec![1.3, 1.2], vec![1.3, 1.8]]),
            Matrix::from_rows(&[vec![1.4, 1.2], vec![1.2, 1.9]]),
        )
    }

    #[test]
    fn m_matrix_difference_term_vanishes() {
        // H1 B1 = H2 B2 makes the cross term vanish at a = (1,1), beta = 1
        let ch = ChannelPair::new(Matrix::identity(2), Matrix::identity(2));
        let params = ScsParams::new(
            [1, 1],
            [1, 0],
            [1.0, 1.0],
            Matrix::identity(2),
            Matrix::identity(2),
        )
        .unwrap();
        let m = m_matrix(&ch, &params);
        assert!((&m - &Matrix::identity(2).scale(2.0)).frob_norm() < 1e-12);
    }

    #[test]
    fn m_matrix_scalar_case() {
        let ch = scalar_channel(1.0, 1.0);
        let b = Matrix::new(1, 1, vec![10f64.sqrt()]);
        let params = ScsParams::new([1, 1], [1, 0], [1.0, 1.0], b.clone(), b).unwrap();
        let m = m_matrix(&ch, &params);
        assert!((m[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rate_pair_scalar_instance() {
        let p = 10.0f64;
        let ch = scalar_channel(1.0, 1.0);
        let b = Matrix::new(1, 1, vec![p.sqrt()]);
        let k = Matrix::new(1, 1, vec![p]);
        let cov = CovariancePair::new(k.clone(), k, p).unwrap();
        let params = ScsParams::new([1, 1], [1, 0], [1.0, 1.0], b.clone(), b).unwrap();
        let pair = scs_rate_pair(&ch, &cov, &params).unwrap();
        assert!((pair.m_det - 2.0).abs() < 1e-12);
        assert!((pair.r_a[0] - 0.5 * (21.0f64 / 2.0).log2()).abs() < 1e-9);
        assert!((pair.r_b_given_a[0] - 0.5 * 2.0f64.log2()).abs() < 1e-9);
        // b2 = 0: user 2 decodes from the first combination only
        assert!((pair.r2 - pair.r_a[1]).abs() < 1e-12);
        // sum collapses to capacity since |a1 b2 - a2 b1| = 1
        assert!((pair.sum() - 0.5 * 21.0f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn rate_pair_rejects_dependent_coefficients() {
        let b = Matrix::new(1, 1, vec![1.0]);
        assert!(matches!(
            ScsParams::new([1, 1], [2, 2], [1.0, 1.0], b.clone(), b),
            Err(ScsError::BadParams(_))
        ));
    }

    /// Independent scalar evaluation of the two-stage rates for t = r = 1,
    /// a = (1,1), b = (1,0).
    fn siso_oracle(h1: f64, h2: f64, p: f64, beta: [f64; 2]) -> (f64, f64, f64) {
        let cd = 1.0 + p * (h1 * h1 + h2 * h2);
        let (at1, at2) = (beta[0], beta[1]);
        let m = at1 * at1 + at2 * at2 + p * (at1 * h2 - at2 * h1).powi(2);
        let r1_a = 0.5 * (beta[0] * beta[0] * cd / m).log2();
        let r2_a = 0.5 * (beta[1] * beta[1] * cd / m).log2();
        let r1_b = 0.5 * (beta[0] * beta[0] * m / (at1 * beta[1]).powi(2)).log2();
        (r1_a.min(r1_b), r2_a, m)
    }

    #[test]
    fn siso_reduction_matches_oracle() {
        let mut rng = SplitMix64::new(0x515);
        for _ in 0..1000 {
            let (h1, h2) = (rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0));
            let p = rng.uniform(0.5, 50.0);
            let beta = [rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0)];
            let ch = scalar_channel(h1, h2);
            let b = Matrix::new(1, 1, vec![p.sqrt()]);
            let k = Matrix::new(1, 1, vec![p]);
            let cov = CovariancePair::new(k.clone(), k, p).unwrap();
            let params = ScsParams::new([1, 1], [1, 0], beta, b.clone(), b).unwrap();
            let (o_r1, o_r2, o_m) = siso_oracle(h1, h2, p, beta);
            match scs_rate_pair(&ch, &cov, &params) {
                Ok(pair) => {
                    assert!((pair.m_det - o_m).abs() < 1e-9 * o_m);
                    assert!((pair.r1 - o_r1).abs() < 1e-9);
                    assert!((pair.r2 - o_r2).abs() < 1e-9);
                }
                Err(ScsError::InfeasibleRates(pair)) => {
                    assert!(
                        o_r1 < 1e-9 || o_r2 < 1e-9 || pair.r_a[0] < 1e-9,
                        "oracle says feasible: {o_r1} {o_r2}"
                    );
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn g_polynomial_matches_simo_closed_form() {
        let mut rng = SplitMix64::new(0x60);
        for _ in 0..200 {
            let h1: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let h2: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let p = rng.uniform(0.5, 20.0);
            let ch = ChannelPair::new(Matrix::col_vec(&h1), Matrix::col_vec(&h2));
            let b = Matrix::new(1, 1, vec![p.sqrt()]);
            let cd = simo_cd(&h1, &h2, p);
            let g = g_polynomial(&ch, &b, &b, cd);
            let n1 = dot(&h1, &h1);
            let n2 = dot(&h2, &h2);
            let cross = dot(&h1, &h2);
            let expect = [1.0 + p * n1, -(cd.sqrt() + 2.0 * p * cross), 1.0 + p * n2];
            assert_eq!(g.degree(), 2);
            for (c, e) in g.coeffs().iter().zip(expect.iter()) {
                assert!((c - e).abs() < 1e-7 * e.abs().max(1.0), "{c} vs {e}");
            }
        }
    }

    #[test]
    fn g_polynomial_zero_channel() {
        // H = 0: f = (gamma^2 + 1)^t, c_d = 1, so g = g^4 + g^2 + 1 at t = 2
        let ch = ChannelPair::new(Matrix::zeros(2, 2), Matrix::zeros(2, 2));
        let g = g_polynomial(&ch, &Matrix::zeros(2, 2), &Matrix::zeros(2, 2), 1.0);
        let expect = [1.0, 0.0, 1.0, 0.0, 1.0];
        for (c, e) in g.coeffs().iter().zip(expect.iter()) {
            assert!((c - e).abs() < 1e-9, "{c} vs {e}");
        }
        let (achievable, _, _, _) = gamma_search(&g);
        assert!(!achievable);
    }

    #[test]
    fn g_polynomial_interpolation_matches_direct_evaluation() {
        let mut rng = SplitMix64::new(0x61);
        for _ in 0..100 {
            let ch = random_channel(2, 2, Uniform::new(0.0, 1.0), rng.next_u64());
            let p = rng.uniform(0.5, 30.0);
            let cap = sum_capacity(&ch, p).unwrap();
            let b1 = cap.covariances.k1.cholesky().unwrap();
            let b2 = cap.covariances.k2.cholesky().unwrap();
            let g = g_polynomial(&ch, &b1, &b2, cap.c_d);
            let x1 = ch.h1().matmul(&b1);
            let x2 = ch.h2().matmul(&b2);
            let scale = g.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for _ in 0..50 {
                let gamma = rng.uniform(0.05, 4.0);
                let diff = &x2.scale(gamma) - &x1;
                let f = (&Matrix::identity(2).scale(gamma * gamma + 1.0)
                    + &diff.transpose().matmul(&diff))
                    .det();
                let direct = f - gamma.powi(2) * cap.c_d.sqrt();
                let poly = g.eval(gamma);
                assert!(
                    (direct - poly).abs() <= 1e-7 * scale.max(direct.abs()),
                    "direct {direct} vs interpolated {poly}"
                );
            }
            // leading coefficient identity
            let lead_expect = (&Matrix::identity(2) + &x2.transpose().matmul(&x2)).det();
            assert!((g.leading() - lead_expect).abs() <= 1e-7 * lead_expect);
            assert!(g.leading() > 0.0);
        }
    }

    #[test]
    fn reference_mac_scs_verdicts() {
        let ch = reference_mac();
        let low =
            scs_check(&ch, crate::channel::db_to_linear(0.0), PrecoderStrategy::Cholesky).unwrap();
        assert!(low.achievable, "achievable at 0 dB: {:?}", low.g_min_rel);
        assert!(low.gamma_witness.is_some());
        let high =
            scs_check(&ch, crate::channel::db_to_linear(8.0), PrecoderStrategy::Cholesky).unwrap();
        assert!(!high.achievable, "not achievable at 8 dB");
    }

    #[test]
    fn simo_check_examples() {
        // equal orthogonal-extended channels at P = 10
        let rep = simo_check(&[1.0, 0.0], &[1.0, 0.0], 10.0);
        assert!((rep.delta - ((21f64.sqrt() + 20.0).powi(2) - 484.0)).abs() < 1e-9);
        assert!(rep.achievable);
        let (lo, hi) = rep.gamma_interval.unwrap();
        assert!(lo > 0.0 && lo < 1.0 && hi > 1.0);

        // orthogonal channels at vanishing power: delta -> -3
        let rep = simo_check(&[1.0, 0.0], &[0.0, 1.0], 1e-12);
        assert!((rep.delta + 3.0).abs() < 1e-6);
        assert!(!rep.achievable);
    }

    #[test]
    fn simo_collinear_delta_identity() {
        // collinear channels: delta = 4 P h1.h2 sqrt(C_d) - 3 C_d
        let mut rng = SplitMix64::new(0x77);
        for _ in 0..200 {
            let h1: Vec<f64> = (0..2).map(|_| rng.uniform(0.1, 2.0)).collect();
            let scale = rng.uniform(0.2, 3.0);
            let h2: Vec<f64> = h1.iter().map(|x| x * scale).collect();
            let p = rng.uniform(0.1, 20.0);
            let rep = simo_check(&h1, &h2, p);
            let cd = simo_cd(&h1, &h2, p);
            let expect = 4.0 * p * dot(&h1, &h2) * cd.sqrt() - 3.0 * cd;
            assert!((rep.delta - expect).abs() < 1e-7 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn simo_matches_general_check() {
        let mut rng = SplitMix64::new(0x99);
        for trial in 0..1000 {
            let r = 1 + (rng.next_u64() % 3) as usize;
            let h1: Vec<f64> = (0..r).map(|_| rng.uniform(0.0, 1.5)).collect();
            let h2: Vec<f64> = (0..r).map(|_| rng.uniform(0.0, 1.5)).collect();
            let p = rng.uniform(0.2, 40.0);
            let simo = simo_check(&h1, &h2, p);
            let ch = ChannelPair::new(Matrix::col_vec(&h1), Matrix::col_vec(&h2));
            let general = scs_check(&ch, p, PrecoderStrategy::Cholesky).unwrap();
            // skip knife-edge discriminants where the verdict is a coin flip
            if simo.delta.abs() < 1e-6 * (1.0 + p * p) {
                continue;
            }
            assert_eq!(
                simo.achievable, general.achievable,
                "trial {trial}: delta {} vs g_min {}",
                simo.delta, general.g_min_rel
            );
        }
    }

    #[test]
    fn power_threshold_branches() {
        // collinear engages the ratio test
        let rep = simo_power_threshold(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!(rep.collinear && rep.condition_met);
        let p_star = rep.p_star.unwrap();
        assert!(p_star > 0.0);
        assert!(simo_check(&[1.0, 1.0], &[1.0, 1.0], p_star * 1.01).achievable);
        assert!(!simo_check(&[1.0, 1.0], &[1.0, 1.0], p_star * 0.99).achievable);

        // orthogonal unit channels fail the spectral condition
        assert!(matches!(
            simo_power_threshold(&[1.0, 0.0], &[0.0, 1.0]),
            Err(ScsError::Inapplicable)
        ));

        // nearly collinear independent pair has a positive threshold
        let h1 = [1.0, 0.1];
        let h2 = [1.0, -0.1];
        let rep = simo_power_threshold(&h1, &h2).unwrap();
        assert!(!rep.collinear && rep.condition_met);
        let p_star = rep.p_star.expect("finite threshold");
        assert!(p_star > 0.0);
        for mult in [1.01, 2.0, 10.0] {
            assert!(simo_check(&h1, &h2, p_star * mult).achievable, "P = {}", p_star * mult);
        }
        assert!(!simo_check(&h1, &h2, p_star * 0.98).achievable);
    }

    #[test]
    fn diagonal_symmetric_case_engages_condition_one() {
        let ch = ChannelPair::new(Matrix::identity(2), Matrix::identity(2));
        let p = 4.0;
        let k = Matrix::diag(&[p / 2.0, p / 2.0]);
        let cov = CovariancePair::new(k.clone(), k, p).unwrap();
        let rep = diagonal_check(&ch, &cov).unwrap();
        assert!(rep.condition1);
        assert!((rep.gamma1.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_degenerate_split() {
        let ch = ChannelPair::new(Matrix::identity(2), Matrix::identity(2));
        let p = 2.0;
        let cov =
            CovariancePair::new(Matrix::diag(&[0.0, p]), Matrix::diag(&[p, 0.0]), p).unwrap();
        assert!(matches!(diagonal_check(&ch, &cov), Err(ScsError::DegeneratePowerSplit)));
    }

    #[test]
    fn diagonal_condition_predicts_large_power_achievability() {
        // fixed-ratio instance satisfying condition 1; the gap polynomial
        // q(P) = f^2 - gamma^{2t} C_d shares its sign with g, so past the
        // sign change the fixed-gamma evaluation must stay non-positive
        let h1 = Matrix::diag(&[1.0, 0.9]);
        let h2 = Matrix::diag(&[1.1, 1.0]);
        let ch = ChannelPair::new(h1, h2);
        let mut crossing = None;
        for pdb in 0..40 {
            let p = crate::channel::db_to_linear(pdb as f64);
            let k = Matrix::diag(&[p / 2.0, p / 2.0]);
            let cov = CovariancePair::new(k.clone(), k, p).unwrap();
            let rep = diagonal_check(&ch, &cov).unwrap();
            if !rep.condition1 {
                continue;
            }
            let gamma = rep.gamma1.unwrap();
            let b1 = cov.k1.cholesky().unwrap();
            let b2 = cov.k2.cholesky().unwrap();
            let cd = c_d(&ch, &cov);
            let g = g_polynomial(&ch, &b1, &b2, cd);
            let val = g.eval(gamma);
            if val <= 0.0 && crossing.is_none() {
                crossing = Some(pdb);
            }
            if let Some(first) = crossing {
                if pdb > first {
                    assert!(
                        val <= 1e-7 * g.leading().abs(),
                        "negative past the sign change, at {pdb} dB got {val}"
                    );
                }
            }
        }
        assert!(crossing.is_some(), "condition-1 instance must eventually achieve");
    }

    #[test]
    fn svd_check_examples() {
        let rep = svd_check(&[2.0], &[2.0]);
        assert!(rep.achievable);
        assert!(rep.gamma_witness.unwrap() > 0.0);

        // boundary: 4 * 1.5 - 3 * 2 = 0
        let b = (1.5f64).sqrt();
        assert!(svd_check(&[b, 0.0], &[b, 0.0]).achievable);

        assert!(!svd_check(&[0.0, 0.0], &[0.0, 0.0]).achievable);
    }

    #[test]
    fn structure_detect_cases() {
        // identical channels share factors exactly
        let h = Matrix::from_rows(&[vec![1.0, 0.3], vec![0.2, 1.4]]);
        let ch = ChannelPair::new(h.clone(), h);
        let p = 2.0;
        let k = Matrix::identity(2).scale(p / 2.0);
        let cov = CovariancePair::new(k.clone(), k, p).unwrap();
        let rep = structure_detect(&ch, &cov).unwrap();
        assert!(rep.shared_svd);

        // distinct rotations do not
        let rot = |deg: f64| {
            let a = (deg as f64).to_radians();
            Matrix::from_rows(&[vec![a.cos(), -a.sin()], vec![a.sin(), a.cos()]])
        };
        let ch = ChannelPair::new(rot(30.0), rot(60.0));
        let k = Matrix::identity(2);
        let cov = CovariancePair::new(k.clone(), k, 2.0).unwrap();
        let rep = structure_detect(&ch, &cov).unwrap();
        assert!(!rep.shared_svd);
    }

    #[test]
    fn structure_detect_reference_mac_nearly_shared() {
        // at 0 dB the reference channels' factors agree to ~2e-2: shared
        // under a loose tolerance, distinct under the strict default
        let ch = reference_mac();
        let cap = sum_capacity(&ch, 1.0).unwrap();
        let strict = structure_detect(&ch, &cap.covariances).unwrap();
        assert!(!strict.shared_svd);
        let loose = structure_detect_with_tol(&ch, &cap.covariances, 0.05).unwrap();
        assert!(loose.shared_svd, "factors should match within 0.05");
        let (_, v1, v2, _) = loose.factors.unwrap();
        assert!((v1[(0, 0)] - 2.825).abs() < 0.02);
        assert!((v2[(0, 0)] - 2.875).abs() < 0.02);
    }

    #[test]
    fn scs_verdict_invariant_under_receive_rotation() {
        let mut rng = SplitMix64::new(0x6060);
        for _ in 0..30 {
            let ch = random_channel(2, 2, Uniform::new(0.0, 1.0), rng.next_u64());
            let raw = Matrix::new(2, 2, (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect());
            let q = raw.svd().unwrap().s;
            let rotated = ChannelPair::new(q.matmul(ch.h1()), q.matmul(ch.h2()));
            let p = rng.uniform(0.5, 30.0);
            let a = scs_check(&ch, p, PrecoderStrategy::Cholesky).unwrap();
            let b = scs_check(&rotated, p, PrecoderStrategy::Cholesky).unwrap();
            if a.g_min_rel.abs().min(b.g_min_rel.abs()) < 1e-9 {
                continue; // boundary instance
            }
            assert_eq!(a.achievable, b.achievable);
        }
    }

    #[test]
    fn permutation_strategy_never_loses() {
        let mut rng = SplitMix64::new(0xA11);
        for _ in 0..50 {
            let ch = random_channel(2, 2, Uniform::new(0.0, 1.0), rng.next_u64());
            let p = rng.uniform(1.0, 300.0);
            let plain = scs_check(&ch, p, PrecoderStrategy::Cholesky).unwrap();
            let perm = scs_check(&ch, p, PrecoderStrategy::CholeskyPermutations).unwrap();
            if plain.achievable {
                assert!(perm.achievable, "permutation search includes the identity pair");
            }
        }
    }
}
