//! Half-duplex reference: each link gets its own slot and therefore needs
//! the SINR `(1 + gamma)^2 - 1` to match the full-duplex rate.

use fdtrx::harness::hd_target;
use fdtrx::hd::{solve_hd_dl, solve_hd_ul, DlContext, UlGain};
use fdtrx::params::{db_to_lin, lin_to_db, sample_realization};
use fdtrx::SystemParams;

fn main() {
    for gamma_db in [0.0, 3.0, 6.0] {
        let gamma = db_to_lin(gamma_db);
        let params = SystemParams::with_defaults(4, 2, 2, gamma);
        let ch = sample_realization(&params, 1);
        let target = hd_target(gamma);
        let ul = solve_hd_ul(
            &ch.g,
            &[target; 2],
            params.sigma_z_sq,
            UlGain::Plain,
            &params,
        )
        .unwrap();
        let dl = solve_hd_dl(
            &ch.h,
            &[target; 2],
            &params.sigma_d_sq,
            &params,
            &DlContext::default(),
        )
        .unwrap();
        let ul_total: f64 = ul.p.iter().sum();
        println!(
            "gamma {gamma_db} dB (HD target {:.2} dB): uplink {:.2} dBm, downlink {:.2} dBm, total {:.2} dBm",
            lin_to_db(target),
            lin_to_db(ul_total),
            lin_to_db(dl.total_power()),
            lin_to_db(ul_total + dl.total_power())
        );
    }
}
