//! Real polynomials and real-root extraction.
//!
//! Roots are isolated with a floating-point Sturm chain and refined by
//! bisection on the root count, with a final Newton polish. Degrees one
//! and two take closed forms. The chain elements are renormalized to unit
//! max-coefficient as they are produced, which keeps the remainder
//! sequence well scaled for the degree-(2t) polynomials this crate
//! produces (t <= 4 in practice).

use std::fmt;

/// Raised when every coefficient is below the trim tolerance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegenerateInput;

impl fmt::Display for DegenerateInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "polynomial has no significant coefficients")
    }
}

impl std::error::Error for DegenerateInput {}

/// Real polynomial with coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial and trims trailing coefficients that are tiny
    /// relative to the largest one.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            self.coeffs = vec![0.0];
            return;
        }
        while self.coeffs.len() > 1 {
            if self.coeffs.last().unwrap().abs() <= 1e-14 * scale {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![0.0]);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * i as f64)
            .collect();
        Polynomial::new(coeffs)
    }

    /// All real roots, ascending, de-duplicated. Multiple roots are
    /// reported once.
    pub fn real_roots(&self) -> Result<Vec<f64>, DegenerateInput> {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale <= 1e-300 {
            return Err(DegenerateInput);
        }
        // normalize so the chain arithmetic sees O(1) numbers
        let norm: Vec<f64> = self.coeffs.iter().map(|c| c / scale).collect();
        let p = Polynomial::new(norm);
        if p.degree() == 0 {
            return Err(DegenerateInput);
        }
        let roots = match p.degree() {
            1 => {
                let (b, a) = (p.coeffs[0], p.coeffs[1]);
                vec![-b / a]
            }
            2 => quadratic_roots(p.coeffs[0], p.coeffs[1], p.coeffs[2]),
            _ => sturm_roots(&p),
        };
        let mut out: Vec<f64> = Vec::new();
        for r in roots {
            let r = p.polish(r);
            let span = 1e-9 * r.abs().max(1.0);
            if !out.iter().any(|&x| (x - r).abs() <= span) {
                out.push(r);
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(out)
    }

    /// A few Newton steps; falls back to the input when the derivative is
    /// too flat (multiple roots) or the update stops improving |p|.
    fn polish(&self, x0: f64) -> f64 {
        let d = self.derivative();
        let mut x = x0;
        let mut best = x0;
        let mut best_val = self.eval(x0).abs();
        for _ in 0..4 {
            let dv = d.eval(x);
            if dv.abs() < 1e-14 {
                break;
            }
            x -= self.eval(x) / dv;
            if !x.is_finite() {
                break;
            }
            let v = self.eval(x).abs();
            if v < best_val {
                best_val = v;
                best = x;
            }
        }
        best
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c}*x"),
                _ => format!("{c}*x^{i}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

/// Numerically stable quadratic formula.
fn quadratic_roots(c0: f64, c1: f64, c2: f64) -> Vec<f64> {
    let disc = c1 * c1 - 4.0 * c2 * c0;
    let scale = c0.abs().max(c1.abs()).max(c2.abs());
    if disc < -1e-14 * scale * scale {
        return vec![];
    }
    if disc <= 1e-14 * scale * scale {
        return vec![-c1 / (2.0 * c2)];
    }
    let sq = disc.sqrt();
    let q = -0.5 * (c1 + c1.signum() * sq);
    let r1 = q / c2;
    let r2 = if q != 0.0 { c0 / q } else { -c1 / c2 - r1 };
    vec![r1, r2]
}

/// Sturm chain, each element scaled to unit max-coefficient.
fn sturm_chain(p: &Polynomial) -> Vec<Polynomial> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let n = chain.len();
        let (a, b) = (&chain[n - 2], &chain[n - 1]);
        if b.is_zero() || b.degree() == 0 {
            break;
        }
        let mut rem = poly_rem(a, b);
        let s = rem.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if s <= 1e-12 {
            break;
        }
        rem = Polynomial::new(rem.coeffs.iter().map(|c| -c / s).collect());
        chain.push(rem);
    }
    chain
}

/// Remainder of a / b.
fn poly_rem(a: &Polynomial, b: &Polynomial) -> Polynomial {
    let mut r = a.coeffs.clone();
    let db = b.degree();
    let lead = b.leading();
    while r.len() > db {
        let k = r.len() - 1;
        let f = r[k] / lead;
        for i in 0..=db {
            r[k - db + i] -= f * b.coeffs[i];
        }
        r.pop();
    }
    Polynomial::new(r)
}

/// Sign changes of the chain at x.
fn sign_changes(chain: &[Polynomial], x: f64) -> usize {
    let mut count = 0;
    let mut last = 0i8;
    for p in chain {
        let v = p.eval(x);
        let s = if v > 1e-300 {
            1i8
        } else if v < -1e-300 {
            -1i8
        } else {
            0
        };
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

fn sturm_roots(p: &Polynomial) -> Vec<f64> {
    let chain = sturm_chain(p);
    // Cauchy bound on root magnitude
    let lead = p.leading().abs();
    let bound = 1.0 + p.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())) / lead;
    let count = |a: f64, b: f64| -> usize {
        let (ca, cb) = (sign_changes(&chain, a), sign_changes(&chain, b));
        ca.saturating_sub(cb)
    };
    let mut roots = Vec::new();
    // stack of intervals with their root counts
    let mut stack = vec![(-bound, bound, count(-bound, bound))];
    while let Some((a, b, n)) = stack.pop() {
        if n == 0 {
            continue;
        }
        if n == 1 {
            roots.push(refine_single(&chain, p, a, b));
            continue;
        }
        let mid = 0.5 * (a + b);
        if b - a < 1e-13 * (1.0 + mid.abs()) {
            // cluster of roots tighter than resolution: report the midpoint
            roots.push(mid);
            continue;
        }
        let left = count(a, mid).min(n);
        stack.push((a, mid, left));
        stack.push((mid, b, n - left));
    }
    roots
}

/// Bisection on the Sturm count for an interval holding exactly one root.
fn refine_single(chain: &[Polynomial], p: &Polynomial, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        if b - a <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let mid = 0.5 * (a + b);
        let changes_left = sign_changes(chain, a).saturating_sub(sign_changes(chain, mid));
        if changes_left >= 1 {
            b = mid;
        } else {
            a = mid;
        }
    }
    let mid = 0.5 * (a + b);
    // prefer an exact sign-change bracket if one exists
    if p.eval(a) * p.eval(b) < 0.0 {
        let (mut lo, mut hi) = (a, b);
        for _ in 0..80 {
            let m = 0.5 * (lo + hi);
            if p.eval(lo) * p.eval(m) <= 0.0 {
                hi = m;
            } else {
                lo = m;
            }
        }
        return 0.5 * (lo + hi);
    }
    mid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    /// Dense sign-change scan used as an independent oracle.
    fn grid_roots(p: &Polynomial, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let mut prev_x = lo;
        let mut prev_v = p.eval(lo);
        for i in 1..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let v = p.eval(x);
            if prev_v == 0.0 {
                out.push(prev_x);
            } else if prev_v * v < 0.0 {
                // bisect inside the bracket
                let (mut a, mut b) = (prev_x, x);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if p.eval(a) * p.eval(m) <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                out.push(0.5 * (a + b));
            }
            prev_x = x;
            prev_v = v;
        }
        out
    }

    #[test]
    fn simple_quadratics() {
        let p = Polynomial::new(vec![-1.0, 0.0, 1.0]); // x^2 - 1
        assert_eq!(p.real_roots().unwrap(), vec![-1.0, 1.0]);
        let q = Polynomial::new(vec![1.0, 0.0, 1.0]); // x^2 + 1
        assert!(q.real_roots().unwrap().is_empty());
    }

    #[test]
    fn degenerate_input() {
        let p = Polynomial::new(vec![0.0, 0.0]);
        assert_eq!(p.real_roots(), Err(DegenerateInput));
        let c = Polynomial::new(vec![3.0]);
        assert_eq!(c.real_roots(), Err(DegenerateInput));
    }

    #[test]
    fn double_root_is_found() {
        // (x - 1)^2
        let p = Polynomial::new(vec![1.0, -2.0, 1.0]);
        let roots = p.real_roots().unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 1.0).abs() < 1e-7);
        // (x - 2)^2 (x + 1): double root away from the simple one
        let p = Polynomial::new(vec![4.0, 0.0, -3.0, 1.0]);
        let roots = p.real_roots().unwrap();
        assert_eq!(roots.len(), 2, "roots: {roots:?}");
        assert!((roots[0] + 1.0).abs() < 1e-7);
        assert!((roots[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn simo_quadratic_two_positive_roots_bracketing_one() {
        // capacity condition quadratic for equal unit channels at P = 10:
        // (1+P) x^2 - (sqrt(1+2P) + 2P) x + (1+P)
        let p10 = 10.0;
        let cd = 1.0 + 2.0 * p10;
        let p = Polynomial::new(vec![1.0 + p10, -(cd.sqrt() + 2.0 * p10), 1.0 + p10]);
        let roots = p.real_roots().unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots[0] > 0.0 && roots[1] > 0.0);
        assert!(roots[0] < 1.0 && roots[1] > 1.0, "roots must bracket 1: {roots:?}");
        let oracle = grid_roots(&p, 1e-6, 1e6, 1_000_000);
        assert_eq!(oracle.len(), 2);
        for (r, o) in roots.iter().zip(oracle.iter()) {
            assert!((r - o).abs() < 1e-6 * o.abs().max(1.0));
        }
    }

    #[test]
    fn random_cubics_and_quartics_match_grid_oracle() {
        let mut rng = SplitMix64::new(0xABCD);
        for trial in 0..400 {
            let deg = if trial % 2 == 0 { 3 } else { 4 };
            let coeffs: Vec<f64> = (0..=deg).map(|_| rng.uniform(-3.0, 3.0)).collect();
            if coeffs.last().unwrap().abs() < 0.05 {
                continue;
            }
            let p = Polynomial::new(coeffs);
            if p.degree() != deg {
                continue;
            }
            let roots = p.real_roots().unwrap();
            let oracle = grid_roots(&p, -50.0, 50.0, 1_000_000);
            assert_eq!(
                roots.len(),
                oracle.len(),
                "trial {trial}: root count mismatch for {p}: {roots:?} vs {oracle:?}"
            );
            for (r, o) in roots.iter().zip(oracle.iter()) {
                assert!((r - o).abs() < 1e-5 * o.abs().max(1.0), "{r} vs {o} for {p}");
            }
            let scale = p.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for r in &roots {
                assert!(p.eval(*r).abs() <= 1e-7 * scale * r.abs().max(1.0).powi(deg as i32));
            }
        }
    }

    #[test]
    fn residuals_meet_tolerance() {
        let mut rng = SplitMix64::new(0x5EED);
        for _ in 0..200 {
            let deg = 2 + (rng.next_u64() % 7) as usize; // up to degree 8
            let coeffs: Vec<f64> = (0..=deg).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let p = Polynomial::new(coeffs);
            if p.degree() < 2 {
                continue;
            }
            let Ok(roots) = p.real_roots() else { continue };
            let scale = p.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for r in roots {
                if r.abs() < 1e3 {
                    assert!(p.eval(r).abs() <= 1e-7 * scale, "residual {} at {}", p.eval(r), r);
                }
            }
        }
    }

    #[test]
    fn scaling_invariance() {
        // the SIMO quadratic scaled by a large constant must give the same roots
        let base = Polynomial::new(vec![11.0, -24.58, 11.0]);
        let scaled = Polynomial::new(base.coeffs().iter().map(|c| c * 1e8).collect());
        let r1 = base.real_roots().unwrap();
        let r2 = scaled.real_roots().unwrap();
        assert_eq!(r1.len(), r2.len());
        for (a, b) in r1.iter().zip(r2.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
