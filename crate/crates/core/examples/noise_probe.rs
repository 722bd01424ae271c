//! Estimator and labeling statistics on pure receiver noise.

use wdcss::rng::complex_normal;
use wdcss::wdamf::{adaptive_threshold, estimate, label_sets, estimate_sigma, ImmConfig, NoiseLevel, ThresholdConfig};
use rand::SeedableRng;

fn main() -> wdcss::Result<()> {
    let d = 256;
    let m = 1600;
    let noise = NoiseLevel { d, sigma: 1.0 };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let (mut jam, mut sig, mut what, mut corr) = (0.0, 0.0, 0.0, 0.0);
    let (mut vs, mut vout, mut vmf) = (0.0, 0.0, 0.0);
    let trials = 200;
    for _ in 0..trials {
        let w: Vec<_> = (0..m).map(|_| complex_normal(&mut rng, d as f64)).collect();
        let out = estimate(&w, &ImmConfig::default(), noise)?;
        let thr = adaptive_threshold(out.y_end(), &ThresholdConfig::default(), m as f64).max(wdcss::wdamf::threshold_floor(&ThresholdConfig::default(), noise));
        let sets = label_sets(&out.w_hat, thr, 2);
        jam += sets.jammed_count() as f64 / m as f64;
        sig += estimate_sigma(&w, &out.w_hat, &sets, d, 1.0);
        what += out.w_hat.iter().map(|v| v.norm_sqr()).sum::<f64>() / m as f64 / d as f64;
        let us: num_complex::Complex64 = sets.clean_indices().map(|k| w[k]).sum();
        vs += us.norm_sqr() / (sets.clean_count().max(1) as f64 * d as f64);
        let fresh: num_complex::Complex64 = (0..sets.jammed_count()).map(|_| complex_normal(&mut rng, d as f64)).sum();
        vout += (us + fresh).norm_sqr() / (m * d) as f64;
        vmf += w.iter().sum::<num_complex::Complex64>().norm_sqr() / (m * d) as f64;
        corr += w.iter().zip(&out.w_hat).map(|(a, b)| (a * b.conj()).re).sum::<f64>() / m as f64 / d as f64;
    }
    let t = trials as f64;
    println!("jammed frac {:.3} sigma_est {:.3} E|w_hat|^2/D {:.4} E[w w_hat*]/D {:.4}", jam / t, sig / t, what / t, corr / t);
    println!("clean-sum var ratio {:.3} output var ratio {:.3} mf var ratio {:.3}", vs / t, vout / t, vmf / t);
    Ok(())
}
