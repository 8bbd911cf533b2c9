//! Minimum SNR for the short-packet reliability target, and how it moves
//! with blocklength and error probability.

use handover_gcs::channel::linear_to_db;
use handover_gcs::urllc::{dispersion, fb_rate, gamma_min, q_inv, snr_margin, UrllcParams};

fn main() -> handover_gcs::Result<()> {
    let p = UrllcParams::default();
    let g = gamma_min(&p)?;
    println!("n = {}, eps = {:e}, R = {} bit/use", p.blocklength, p.eps_max, p.r_req);
    println!("gamma_min = {g:.9} ({:.4} dB)", linear_to_db(g));
    println!("Q^-1(eps) = {:.6}, V(gamma_min) = {:.6}", q_inv(p.eps_max)?, dispersion(g));
    println!("rate at gamma_min = {:.12}", fb_rate(g, p.blocklength, p.eps_max)?);

    println!("\nlinear margin over the threshold:");
    for db in [-3.0, 0.0, 3.0, 10.0] {
        let gamma = 10f64.powf(db / 10.0);
        println!("  {db:5.1} dB  ->  {:+.6}", snr_margin(gamma, &p)?);
    }

    println!("\nthreshold (dB) by blocklength and error target:");
    print!("{:>8}", "n \\ eps");
    let eps = [1e-3, 1e-5, 1e-7, 1e-9];
    for e in eps {
        print!("{e:>10.0e}");
    }
    println!();
    for n in [50u64, 100, 180, 500, 2000] {
        print!("{n:>8}");
        for e in eps {
            let q = UrllcParams::new(n as f64 * 1e3, 1e-3, 1e-3, e, 0.5)?;
            print!("{:>10.3}", linear_to_db(gamma_min(&q)?));
        }
        println!();
    }
    Ok(())
}
