use cfma::channel::{db_to_linear, ChannelPair};
use cfma::matrix::Matrix;
use cfma::scs::{scs_check, PrecoderStrategy};

fn main() {
    let ch = ChannelPair::new(
        Matrix::from_rows(&[vec![1.3, 1.2], vec![1.3, 1.8]]),
        Matrix::from_rows(&[vec![1.4, 1.2], vec![1.2, 1.9]]),
    );
    let t0 = std::time::Instant::now();
    for pdb in (0..=24).step_by(2) {
        let rep = scs_check(&ch, db_to_linear(pdb as f64), PrecoderStrategy::Cholesky).unwrap();
        let perm = scs_check(&ch, db_to_linear(pdb as f64), PrecoderStrategy::CholeskyPermutations).unwrap();
        println!("P={pdb:2} dB  scs={} perm={} g_min_rel={:+.4e}", 
            if rep.achievable {"Y"} else {"n"},
            if perm.achievable {"Y"} else {"n"},
            rep.g_min_rel);
    }
    println!("elapsed: {:?}", t0.elapsed());
}
