//! Uplink power control as a fixed-point iteration: the iterates rise
//! monotonically from zero and any start lands on the same point.

use fdtrx::hd::{UlGain, UlProblem};
use fdtrx::params::{db_to_lin, sample_realization};
use fdtrx::SystemParams;

fn main() {
    let params = SystemParams::with_defaults(4, 0, 3, db_to_lin(5.0));
    let ch = sample_realization(&params, 3);
    let prob = UlProblem::new(
        &ch.g,
        &params.gamma_u,
        params.sigma_z_sq,
        UlGain::Plain,
        &params,
    )
    .unwrap();

    let mut x = vec![0.0; 3];
    for it in 1..=8 {
        x = prob.map(&x);
        let total: f64 = x.iter().sum();
        println!("iteration {it}: total power {total:.6e} mW");
    }

    let from_zero = prob.run_from(&[0.0; 3], &params).unwrap();
    let from_far = prob.run_from(&[1.0; 3], &params).unwrap();
    println!(
        "from zero: {:?} after {} iterations",
        from_zero.x, from_zero.iterations
    );
    println!(
        "from 1 mW: {:?} after {} iterations",
        from_far.x, from_far.iterations
    );
}
