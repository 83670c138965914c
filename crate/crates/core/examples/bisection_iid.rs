//! Globally optimal design for i.i.d. SI estimation error: bisection on the
//! downlink power budget.

use fdtrx::bisection::{solve_p1, solve_p_eta, P1Mode};
use fdtrx::metrics::{dl_sinrs, ul_sinrs};
use fdtrx::params::{db_to_lin, lin_to_db, sample_realization};
use fdtrx::{SiCorrelation, SystemParams};

fn main() {
    let params = SystemParams::with_defaults(4, 2, 2, db_to_lin(5.0));
    let corr = SiCorrelation::iid(4, 1e-6, params.beta2);
    let ch = sample_realization(&params, 5);

    let sol = solve_p1(&ch, &corr, &params, P1Mode::IidOnly).unwrap();
    println!(
        "budget {:.4e} mW after {} bisection steps",
        sol.eta, sol.iterations
    );
    println!(
        "total power {:.3} dBm",
        lin_to_db(sol.solution.total_power())
    );
    println!("downlink SINRs {:?}", dl_sinrs(&sol.solution, &ch, &params));
    println!(
        "uplink SINRs   {:?}",
        ul_sinrs(&sol.solution, &ch, &corr, &params)
    );

    println!("budget -> downlink power needed:");
    for f in [0.5, 0.9, 1.0, 1.1, 2.0] {
        let s = solve_p_eta(f * sol.eta, &ch, &corr, &params).unwrap();
        println!("  {:.4e} -> {:.4e}", s.eta, s.dl_power);
    }
}
