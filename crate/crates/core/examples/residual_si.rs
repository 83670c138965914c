//! Residual self-interference seen from both ends: the receive-side matrix
//! `Omega(W)` and the transmit-side matrix `Lambda(v)` give the same power.

use fdtrx::linalg;
use fdtrx::metrics::{lambda_mat, omega, upsilons};
use fdtrx::params::{build_si_correlation, lin_to_db, lmmse_error_correlation, sample_realization};
use fdtrx::SystemParams;

fn main() {
    let params = SystemParams::with_defaults(4, 2, 1, 1.0);
    let corr = lmmse_error_correlation(&build_si_correlation(&params), &params).unwrap();
    let ch = sample_realization(&params, 9);
    let w: Vec<_> =
        ch.h.iter()
            .map(|h| linalg::normalized(h).unwrap())
            .collect();
    let v = linalg::normalized(&ch.g[0]).unwrap();

    let via_omega = linalg::quad(&omega(&w, &corr, &params), &v);
    let lm = lambda_mat(&v, &corr, &params);
    let via_lambda: f64 = w.iter().map(|x| linalg::quad(&lm, x)).sum();
    println!(
        "residual SI with 1 mW per stream: {:.3} dBm (receive side)",
        lin_to_db(via_omega)
    );
    println!(
        "                                  {:.3} dBm (transmit side)",
        lin_to_db(via_lambda)
    );

    for (n, u) in upsilons(&corr, &params).iter().enumerate() {
        let si: f64 = w.iter().map(|x| linalg::quad(u, x)).sum();
        println!("antenna {n}: SI at the ADC input {:.2} dBm", lin_to_db(si));
    }
}
