//! Seeded Monte-Carlo sweep over the SINR target, printed as CSV.
//!
//! `cargo run --release --example monte_carlo_sweep [scenario.json] [trials]`

use std::path::PathBuf;

use fdtrx::harness::{csv::format_csv, run_montecarlo, Scenario};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios/desk.json")
    });
    let mut scenario = Scenario::load(&path).unwrap();
    if let Some(t) = args.next() {
        scenario.trials = t.parse().expect("trials must be an integer");
    }
    let rows = run_montecarlo(&scenario).unwrap();
    print!("{}", format_csv(&rows));
}
