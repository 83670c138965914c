//! Per-antenna ADC input cap: the dual multipliers rise until every antenna
//! is under the cap, at some cost in transmit power.

use fdtrx::ao::{solve_inner, zf_init, AoContext};
use fdtrx::params::{
    build_si_correlation, db_to_lin, lin_to_db, lmmse_error_correlation, sample_realization,
};
use fdtrx::SystemParams;

fn main() {
    let mut params = SystemParams::with_defaults(4, 2, 2, db_to_lin(4.0));
    let corr = lmmse_error_correlation(&build_si_correlation(&params), &params).unwrap();
    let ch = sample_realization(&params, 4);
    let v = zf_init(&ch.g);

    let free = solve_inner(&v, &AoContext::new(&ch, &corr, &params).unwrap()).unwrap();
    let peak = free.adc_power.iter().copied().fold(0.0, f64::max);
    println!(
        "no cap: {:.4} dBm total, peak ADC {:.3} dBm",
        lin_to_db(free.total_power()),
        lin_to_db(peak)
    );

    for back_off_db in [0.1, 0.3, 1.0] {
        params.gamma_adc = Some(peak * db_to_lin(-back_off_db));
        let ctx = AoContext::new(&ch, &corr, &params).unwrap();
        match solve_inner(&v, &ctx) {
            Ok(s) => println!(
                "cap {:.2} dBm: {:.4} dBm total, peak ADC {:.3} dBm, {} rounds, nu {:?}",
                lin_to_db(params.gamma_adc.unwrap()),
                lin_to_db(s.total_power()),
                lin_to_db(s.adc_power.iter().copied().fold(0.0, f64::max)),
                s.rounds,
                s.nu
            ),
            Err(e) => println!("cap {:.2} dBm: {e}", lin_to_db(params.gamma_adc.unwrap())),
        }
    }
}
