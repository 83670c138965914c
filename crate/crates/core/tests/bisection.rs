mod common;

use common::*;
use fdtrx::bisection::{effective_xi, solve_p1, solve_p_eta, P1Mode, SiCoefficients};
use fdtrx::hd::{solve_hd_dl, solve_hd_ul, DlContext, UlGain};
use fdtrx::metrics::{check_feasible, dl_sinrs, ul_sinrs};
use fdtrx::{ParamError, SiCorrelation, SolveError};

fn iid_instance(
    seed: u64,
    n: usize,
    k: usize,
    l: usize,
    gamma_db: f64,
) -> (
    fdtrx::SystemParams,
    SiCorrelation,
    fdtrx::ChannelRealization,
) {
    let p = system(n, k, l, gamma_db);
    let corr = iid_like(&p);
    let ch = realization(&p, seed);
    (p, corr, ch)
}

#[test]
fn downlink_power_is_increasing_and_concave_in_the_budget() {
    for seed in 0..10 {
        let (p, corr, ch) = iid_instance(seed, 4, 3, 3, 5.0);
        let star = solve_p1(&ch, &corr, &p, P1Mode::IidOnly).unwrap().eta;
        let grid: Vec<f64> = (0..50).map(|i| 3.0 * star * i as f64 / 49.0).collect();
        let dl: Vec<f64> = grid
            .iter()
            .map(|&e| solve_p_eta(e, &ch, &corr, &p).unwrap().dl_power)
            .collect();
        let scale = dl.iter().copied().fold(0.0, f64::max);
        for w in dl.windows(2) {
            assert!(w[1] - w[0] >= -1e-9 * scale, "seed {seed}: not increasing");
        }
        for w in dl.windows(3) {
            assert!(
                w[2] - 2.0 * w[1] + w[0] <= 1e-8 * scale,
                "seed {seed}: not concave"
            );
        }
    }
}

#[test]
fn budget_matches_the_crossing_on_a_grid() {
    for seed in 0..10 {
        let (p, corr, ch) = iid_instance(seed, 4, 2, 2, 5.0);
        let sol = solve_p1(&ch, &corr, &p, P1Mode::IidOnly).unwrap();
        // The crossing is where the residual eta - dl_power(eta) changes sign.
        let lo = solve_p_eta(sol.eta * (1.0 - 1e-3), &ch, &corr, &p).unwrap();
        let hi = solve_p_eta(sol.eta * (1.0 + 1e-3), &ch, &corr, &p).unwrap();
        assert!(lo.dl_power > lo.eta, "seed {seed}");
        assert!(hi.dl_power < hi.eta, "seed {seed}");
        assert!(rel_diff(sol.solution.dl_power(), sol.eta) < p.tol_bisect);
    }
}

#[test]
fn constraints_are_tight_at_the_optimum() {
    for seed in 0..10 {
        let (p, corr, ch) = iid_instance(seed, 4, 3, 2, 4.0);
        let sol = solve_p1(&ch, &corr, &p, P1Mode::IidOnly).unwrap().solution;
        for (s, g) in dl_sinrs(&sol, &ch, &p).iter().zip(&p.gamma_d) {
            assert!(rel_diff(*s, *g) < 1e-6, "seed {seed}: dl {s} vs {g}");
        }
        for (s, g) in ul_sinrs(&sol, &ch, &corr, &p).iter().zip(&p.gamma_u) {
            assert!(rel_diff(*s, *g) < 1e-6, "seed {seed}: ul {s} vs {g}");
        }
    }
}

#[test]
fn matches_exhaustive_search_for_one_user_pair() {
    for seed in 0..5 {
        let (p, corr, ch) = iid_instance(seed, 2, 1, 1, 5.0);
        let total = solve_p1(&ch, &corr, &p, P1Mode::IidOnly)
            .unwrap()
            .solution
            .total_power();
        let grid = grid_iid(&ch, corr.iid_variance.unwrap(), &p, 0.002, 1000);
        assert!(
            grid >= total * (1.0 - 1e-6),
            "seed {seed}: grid {grid} below {total}"
        );
        assert!(
            grid <= total * 1.0021,
            "seed {seed}: grid {grid} vs {total}"
        );
    }
}

#[test]
fn no_self_interference_decouples_the_links() {
    let p = system(4, 2, 2, 5.0);
    let corr = SiCorrelation::iid(4, 0.0, p.beta2);
    let ch = realization(&p, 3);
    let sol = solve_p1(&ch, &corr, &p, P1Mode::IidOnly).unwrap().solution;
    let ul = solve_hd_ul(
        &ch.g,
        &p.gamma_u,
        p.sigma_z_tilde_sq(),
        UlGain::Impaired,
        &p,
    )
    .unwrap();
    let noise: Vec<f64> = (0..2)
        .map(|i| {
            p.sigma_d_sq[i]
                + (0..2)
                    .map(|j| ul.p[j] * ch.f[(j, i)].norm_sqr())
                    .sum::<f64>()
        })
        .collect();
    let dl = solve_hd_dl(&ch.h, &p.gamma_d, &noise, &p, &DlContext::default()).unwrap();
    assert!(vec_rel_diff(&ul.p, &sol.p_u) < 1e-9);
    assert!(rel_diff(dl.total_power(), sol.dl_power()) < 1e-6);
}

#[test]
fn worst_case_bound_is_feasible_under_the_true_correlation() {
    for seed in 0..10 {
        let p = system(4, 2, 2, 5.0);
        let corr = structured(&p);
        let ch = realization(&p, seed);
        assert!(matches!(
            solve_p1(&ch, &corr, &p, P1Mode::IidOnly),
            Err(SolveError::Params(ParamError::Range {
                field: "r_phi0",
                ..
            }))
        ));
        let sol = solve_p1(&ch, &corr, &p, P1Mode::WorstCase)
            .unwrap()
            .solution;
        let rep = check_feasible(&sol, &ch, &corr, &p, 1e-6);
        assert!(rep.feasible, "seed {seed}: {rep:?}");
    }
}

#[test]
fn worst_case_coefficients_use_the_largest_eigenvalue() {
    let p = system(3, 1, 1, 0.0);
    let corr = structured(&p);
    let lam = fdtrx::linalg::lambda_max(&corr.r_phi0);
    let c = SiCoefficients::for_correlation(&corr, &p);
    assert!(rel_diff(c.xi, SiCoefficients::from_variance(lam, &p).xi) < 1e-14);
    assert!(rel_diff(effective_xi(&corr, &p), c.xi) < 1e-14);
    assert!(rel_diff(c.adc_coeff, lam * (1.0 + p.beta1)) < 1e-14);
}

#[test]
fn deterministic() {
    let (p, corr, ch) = iid_instance(9, 4, 3, 3, 5.0);
    let a = solve_p1(&ch, &corr, &p, P1Mode::IidOnly).unwrap();
    let b = solve_p1(&ch, &corr, &p, P1Mode::IidOnly).unwrap();
    assert_eq!(a, b);
}

#[test]
fn infeasible_cases() {
    let (mut p, corr, ch) = iid_instance(1, 2, 3, 3, 5.0);
    let e = solve_p1(&ch, &corr, &p, P1Mode::IidOnly).unwrap_err();
    assert!(e.is_infeasible(), "{e}");
    p = system(4, 2, 2, 5.0);
    p.gamma_adc = Some(p.sigma_z_sq * 1.0001);
    let e = solve_p1(&realization(&p, 1), &iid_like(&p), &p, P1Mode::IidOnly).unwrap_err();
    assert!(e.is_infeasible(), "{e}");
    let mut p = system(4, 2, 2, 5.0);
    p.p_max = 1e-9;
    let e = solve_p1(&realization(&p, 1), &iid_like(&p), &p, P1Mode::IidOnly).unwrap_err();
    assert!(e.is_infeasible(), "{e}");
}

#[test]
fn adc_cap_holds_when_feasible() {
    for seed in 0..20 {
        let (mut p, corr, ch) = iid_instance(seed, 4, 2, 2, 5.0);
        let free = solve_p1(&ch, &corr, &p, P1Mode::IidOnly).unwrap();
        let adc_free = fdtrx::metrics::adc_power(&free.solution, &ch, &corr, &p);
        let peak = adc_free.iter().copied().fold(0.0, f64::max);
        p.gamma_adc = Some(peak * 0.99);
        match solve_p1(&ch, &corr, &p, P1Mode::IidOnly) {
            Ok(s) => {
                let adc = fdtrx::metrics::adc_power(&s.solution, &ch, &corr, &p);
                assert!(adc.iter().all(|a| *a <= peak * 0.99 * (1.0 + 1e-9)));
            }
            Err(e) => assert!(e.is_infeasible()),
        }
        p.gamma_adc = Some(peak * 1.01);
        let loose = solve_p1(&ch, &corr, &p, P1Mode::IidOnly).unwrap();
        assert!(rel_diff(loose.solution.total_power(), free.solution.total_power()) < 1e-9);
    }
}
