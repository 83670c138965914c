//! Alternating optimization under the structured SI error model, compared
//! with its first iterate (zero-forcing receivers).

use fdtrx::ao::{solve_ao, solve_zf_oneshot};
use fdtrx::params::{
    build_si_correlation, db_to_lin, lin_to_db, lmmse_error_correlation, sample_realization,
};
use fdtrx::SystemParams;

fn main() {
    let params = SystemParams::with_defaults(10, 8, 8, db_to_lin(5.0));
    let corr = lmmse_error_correlation(&build_si_correlation(&params), &params).unwrap();
    let ch = sample_realization(&params, 2);

    let zf = solve_zf_oneshot(&ch, &corr, &params).unwrap();
    let ao = solve_ao(&ch, &corr, &params).unwrap();
    for (i, obj) in ao.trace.objectives.iter().enumerate() {
        println!("iteration {:>2}: {:.4} dBm", i + 1, lin_to_db(*obj));
    }
    println!("stopped: {:?}", ao.trace.status);
    println!(
        "zero-forcing {:.3} dBm, alternating {:.3} dBm",
        lin_to_db(zf.solution.total_power()),
        lin_to_db(ao.solution.total_power())
    );
}
