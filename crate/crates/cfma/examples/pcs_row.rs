use cfma::channel::{db_to_linear, ChannelPair};
use cfma::matrix::Matrix;
use cfma::pcs::{pcs_check, PcsSearch};

fn main() {
    let ch = ChannelPair::new(
        Matrix::from_rows(&[vec![1.3, 1.2], vec![1.3, 1.8]]),
        Matrix::from_rows(&[vec![1.4, 1.2], vec![1.2, 1.9]]),
    );
    let target = "YYYYnYYYYYYnn";
    println!("target:    {target}");
    for bound in [1i64, 2, 3, 4, 5, 6, 7, 8, 10, 12, 16, 20] {
        let t0 = std::time::Instant::now();
        let mut row = String::new();
        for pdb in (0..=24).step_by(2) {
            let rep = pcs_check(&ch, db_to_linear(pdb as f64),
                PcsSearch { entry_bound: bound, beta_grid: 4 }).unwrap();
            row.push(if rep.achievable { 'Y' } else { 'n' });
        }
        println!("bound={bound:2}: {row}  {:?}{}", t0.elapsed(), if row == target { "  <-- MATCH" } else { "" });
    }
}
