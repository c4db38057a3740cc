use cfma::channel::{c_d, db_to_linear, ChannelPair, CovariancePair};
use cfma::matrix::Matrix;
use cfma::pcs::{pcs_check_with_capacity, PcsSearch};
use cfma::scs::{scs_check_with_capacity, PrecoderStrategy};

// single-user water-filling against fixed noise covariance
fn wf_single(h: &Matrix, z: &Matrix, p: f64) -> Matrix {
    let t = h.cols();
    let zinv = z.symmetrized().inverse().unwrap();
    let g = h.transpose().matmul(&zinv).matmul(h).symmetrized();
    let (lam, u) = g.sym_eigen().unwrap();
    let gains: Vec<f64> = lam.iter().map(|l| l.max(0.0)).collect();
    let mut k_active = 0usize;
    let mut level = 0.0f64;
    for k in 1..=t {
        if gains[k - 1] <= 1e-15 { break; }
        let inv_sum: f64 = gains[..k].iter().map(|g| 1.0 / g).sum();
        let mu = (p + inv_sum) / k as f64;
        if mu > 1.0 / gains[k - 1] { k_active = k; level = mu; }
    }
    let mut k_mat = Matrix::zeros(t, t);
    for i in 0..k_active {
        let power = (level - 1.0 / gains[i]).max(0.0);
        if power <= 0.0 { continue; }
        let ui = Matrix::col_vec(&u.column(i));
        k_mat = &k_mat + &ui.matmul(&ui.transpose()).scale(power);
    }
    k_mat
}

fn iwf(ch: &ChannelPair, p: f64, rounds: usize, simultaneous: bool) -> CovariancePair {
    let r = ch.r();
    let t = ch.t();
    let mut k1 = Matrix::zeros(t, t);
    let mut k2 = Matrix::zeros(t, t);
    for _ in 0..rounds {
        if simultaneous {
            let z1 = &Matrix::identity(r) + &ch.h2().matmul(&k2).matmul(&ch.h2().transpose());
            let z2 = &Matrix::identity(r) + &ch.h1().matmul(&k1).matmul(&ch.h1().transpose());
            let new1 = wf_single(ch.h1(), &z1, p);
            let new2 = wf_single(ch.h2(), &z2, p);
            k1 = new1;
            k2 = new2;
        } else {
            let z1 = &Matrix::identity(r) + &ch.h2().matmul(&k2).matmul(&ch.h2().transpose());
            k1 = wf_single(ch.h1(), &z1, p);
            let z2 = &Matrix::identity(r) + &ch.h1().matmul(&k1).matmul(&ch.h1().transpose());
            k2 = wf_single(ch.h2(), &z2, p);
        }
    }
    CovariancePair::new(k1, k2, p).unwrap()
}

fn main() {
    let ch = ChannelPair::new(
        Matrix::from_rows(&[vec![1.3, 1.2], vec![1.3, 1.8]]),
        Matrix::from_rows(&[vec![1.4, 1.2], vec![1.2, 1.9]]),
    );
    let scs_target = "YYYnnnnnnnnnn";
    let pcs_target = "YYYYnYYYYYYnn";
    println!("scs target:                 {scs_target}");
    println!("pcs target:                 {pcs_target}");
    for simultaneous in [false, true] {
        for rounds in [1usize, 2, 3, 10] {
            let mut scs_row = String::new();
            let mut pcs_row = String::new();
            let mut ranks = String::new();
            for pdb in (0..=24).step_by(2) {
                let p = db_to_linear(pdb as f64);
                let cov = iwf(&ch, p, rounds, simultaneous);
                let cd = c_d(&ch, &cov);
                let s = scs_check_with_capacity(&ch, &cov, cd, PrecoderStrategy::Cholesky).unwrap();
                scs_row.push(if s.achievable { 'Y' } else { 'n' });
                let (_, r1) = cov.k1.cholesky_pivoted().unwrap();
                let (_, r2) = cov.k2.cholesky_pivoted().unwrap();
                ranks.push_str(&format!("{}{} ", r1, r2));
                let rep = pcs_check_with_capacity(&ch, &cov, PcsSearch { entry_bound: 4, beta_grid: 4 }).unwrap();
                pcs_row.push(if rep.achievable { 'Y' } else { 'n' });
            }
            let mode = if simultaneous { "simul" } else { "gauss" };
            let s_ok = if scs_row == scs_target { " SCS-MATCH" } else { "" };
            let p_ok = if pcs_row == pcs_target { " PCS-MATCH" } else { "" };
            println!("{mode} rounds={rounds:2}: scs={scs_row}{s_ok} pcs={pcs_row}{p_ok} ranks={ranks}");
        }
    }
}
