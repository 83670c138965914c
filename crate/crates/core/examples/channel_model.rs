//! SI channel correlation, the LMMSE estimation error it leaves behind, and
//! one draw of the user channels.

use fdtrx::linalg;
use fdtrx::params::{build_si_correlation, lin_to_db, lmmse_error_correlation, sample_realization};
use fdtrx::SystemParams;

fn main() {
    let params = SystemParams::with_defaults(4, 2, 2, 1.0);
    let r_h0 = build_si_correlation(&params);
    println!("SI channel correlation: {}x{}", r_h0.nrows(), r_h0.ncols());
    println!("  largest eigenvalue {:.3e}", linalg::lambda_max(&r_h0));

    for energy in [1e-5, 1e-3, 1e-1] {
        let p = SystemParams {
            train_energy: energy,
            ..params.clone()
        };
        let err = lmmse_error_correlation(&r_h0, &p).unwrap();
        println!(
            "pilot energy {energy:.0e}: error lambda_max {:.3e} ({:.1} dB below the channel)",
            err.lambda_max(),
            lin_to_db(linalg::lambda_max(&r_h0) / err.lambda_max())
        );
    }

    let ch = sample_realization(&params, 7);
    for (i, h) in ch.h.iter().enumerate() {
        println!(
            "downlink user {i}: |h|^2 = {:.2} dB",
            lin_to_db(h.norm_squared())
        );
    }
    for (j, g) in ch.g.iter().enumerate() {
        println!(
            "uplink user {j}: |g|^2 = {:.2} dB",
            lin_to_db(g.norm_squared())
        );
    }
}
