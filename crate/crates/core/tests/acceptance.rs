//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::time::Instant;

use markov_hjb::cost::CostModel;
use markov_hjb::ergodic::{
    check_strong_max_principle, dedrift_samples, discount_sequence, q_diagnostic,
    semigroup_apply, solve_ergodic_direct, solve_ergodic_vanishing_discount,
    solve_ergodic_vanishing_discount_from, solve_ergodic_with_offset, undiscounted_flow,
    DEFAULT_R_MIN, DEFAULT_T_MAX,
};
use markov_hjb::fixtures::{random_model, random_problem, FamilyMix};
use markov_hjb::hjb::{extract_policy, solve_finite_horizon, verify_comparison, Policy, Problem};
use markov_hjb::ode::Tolerances;
use markov_hjb::sim::{estimate_value_gap_with_tolerance, evaluate_stationary_policy, simulate};
use markov_hjb::stationary::solve_stationary;
use markov_hjb::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{euler_dp, max_abs_diff, two_node_entropic};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("closed-form ergodic constant", closed_form_ergodic),
        ("symmetric exactness", symmetric_exactness),
        ("comparison principle", comparison_suite),
        ("nonexpansiveness and semigroup law", nonexpansiveness_suite),
        ("q monotonicity and convergence", q_monotonicity),
        ("finite-horizon asymptotics", finite_horizon_asymptotics),
        ("verification by simulation", verification),
        ("Euler oracle equivalence", oracle_equivalence),
        ("strong maximum principle", strong_max_principle),
        ("corrector uniqueness", corrector_uniqueness),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = check();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {:>2} PASS [{secs:6.2}s] {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{secs:6.2}s] {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sequence() -> Vec<f64> {
    discount_sequence(DEFAULT_R_MIN).unwrap()
}

fn closed_form_ergodic() -> Verdict {
    let m = two_node_entropic(4.0, 1.0);
    let vd = solve_ergodic_vanishing_discount(&m, &sequence()).map_err(err)?;
    let direct = solve_ergodic_direct(&m, DEFAULT_T_MAX).map_err(err)?;
    let xi2 = -std::f64::consts::LN_2;
    let e_vd = (vd.gamma - 2.0).abs().max((vd.xi[1] - xi2).abs());
    let e_direct = (direct.gamma - 2.0).abs().max((direct.xi[1] - xi2).abs());
    let gap = (vd.gamma - direct.gamma).abs();
    ensure(
        e_vd <= 1e-5 && e_direct <= 1e-5 && gap <= 1e-5,
        format!("vanishing error {e_vd:.2e}, direct error {e_direct:.2e}, method gap {gap:.2e} (limit 1e-5)"),
    )
}

fn symmetric_exactness() -> Verdict {
    let m = two_node_entropic(1.0, 1.0);
    let mut worst_v: f64 = 0.0;
    for horizon in [1.0, 10.0] {
        let p = Problem::new(m.clone(), vec![0.0, 0.0], horizon, 0.0).map_err(err)?;
        let traj = solve_finite_horizon(&p, Tolerances::default()).map_err(err)?;
        for (t, row) in traj.grid.iter().zip(&traj.values) {
            for v in row {
                worst_v = worst_v.max((v - (horizon - t)).abs());
            }
        }
    }
    let vd = solve_ergodic_vanishing_discount(&m, &sequence()).map_err(err)?;
    let direct = solve_ergodic_direct(&m, DEFAULT_T_MAX).map_err(err)?;
    let worst_gamma = (vd.gamma - 1.0).abs().max((direct.gamma - 1.0).abs());
    let mut worst_ru: f64 = 0.0;
    for r in sequence() {
        let s = solve_stationary(&m, r).map_err(err)?;
        for u in &s.u {
            worst_ru = worst_ru.max((r * u - 1.0).abs());
        }
    }
    ensure(
        worst_v <= 1e-8 && worst_gamma <= 1e-8 && worst_ru <= 1e-9,
        format!("|V - (T - t)| {worst_v:.2e}, |gamma - 1| {worst_gamma:.2e}, |r u - 1| {worst_ru:.2e}"),
    )
}

fn comparison_suite() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..=6);
        let horizon = rng.random_range(0.5..3.0);
        let r = rng.random_range(0.0..0.5);
        let p = random_problem(&mut rng, n, FamilyMix::Mixed, horizon, r).map_err(err)?;
        let low = p.terminal_payoff().to_vec();
        let high: Vec<f64> = low
            .iter()
            .map(|g| g + if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1.0) })
            .collect();
        let tol = Tolerances::new(1e-10, 1e-12).unwrap();
        let report = verify_comparison(&p, &low, &high, horizon, tol).map_err(err)?;
        worst = worst.max(report.max_violation);
    }
    ensure(worst <= 1e-8, format!("50 instances, max violation {worst:.2e} (limit 1e-8)"))
}

fn nonexpansiveness_suite() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut excess, mut law): (f64, f64) = (f64::NEG_INFINITY, 0.0);
    for _ in 0..20 {
        let n = rng.random_range(2..=6);
        let m = random_model(&mut rng, n, FamilyMix::Mixed).map_err(err)?;
        let gamma = solve_ergodic_vanishing_discount(&m, &sequence()).map_err(err)?.gamma;
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let sx = semigroup_apply(&m, gamma, &x, 1.0).map_err(err)?;
            let sy = semigroup_apply(&m, gamma, &y, 1.0).map_err(err)?;
            excess = excess.max(max_abs_diff(&sx, &sy) - max_abs_diff(&x, &y));
            let half = semigroup_apply(&m, gamma, &y, 0.5).map_err(err)?;
            let twice = semigroup_apply(&m, gamma, &half, 0.5).map_err(err)?;
            law = law.max(max_abs_diff(&twice, &sy));
        }
    }
    ensure(
        excess <= 1e-8 && law <= 1e-8,
        format!("2000 pairs, max(|S x - S y| - |x - y|) {excess:.2e}, semigroup law error {law:.2e}"),
    )
}

fn q_monotonicity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_step: f64 = f64::NEG_INFINITY;
    let mut worst_limit: f64 = 0.0;
    for k in 0..20 {
        let n = rng.random_range(2..=6);
        let p = random_problem(&mut rng, n, FamilyMix::Entropic, 1.0, 0.0).map_err(err)?;
        let sol = solve_ergodic_vanishing_discount(p.model(), &sequence()).map_err(err)?;
        let flow = undiscounted_flow(p.model(), p.terminal_payoff(), DEFAULT_T_MAX).map_err(err)?;
        let series = dedrift_samples(flow.times, flow.values, sol.gamma);
        let q = q_diagnostic(&series, &sol.xi).map_err(|e| format!("instance {k}: {e}"))?;
        for w in q.q.windows(2) {
            worst_step = worst_step.max(w[1] - w[0]);
        }
        let q_inf = q
            .q_infinity
            .ok_or_else(|| format!("instance {k}: q did not settle by t = {DEFAULT_T_MAX}"))?;
        let last = series.values.last().unwrap();
        let dev = last
            .iter()
            .zip(&sol.xi)
            .map(|(v, x)| (v - x - q_inf).abs())
            .fold(0.0, f64::max);
        worst_limit = worst_limit.max(dev);
    }
    ensure(
        worst_step <= 1e-9 && worst_limit <= 1e-4,
        format!("20 instances, largest q increase {worst_step:.2e}, |v(t_max) - xi - q_inf| {worst_limit:.2e}"),
    )
}

fn finite_horizon_asymptotics() -> Verdict {
    let m = two_node_entropic(4.0, 1.0);
    let g = vec![0.0, 0.0];
    let (sol, _) = solve_ergodic_with_offset(&m, &g, &sequence(), DEFAULT_T_MAX).map_err(err)?;
    let q_inf = sol.q_infinity.ok_or("q did not settle")?;
    let tol = Tolerances::new(1e-12, 1e-12).unwrap();
    let mut deviations = vec![];
    let mut policy_errors = vec![];
    for horizon in [10.0, 20.0, 40.0] {
        let p = Problem::new(m.clone(), g.clone(), horizon, 0.0).map_err(err)?;
        let traj = solve_finite_horizon(&p, tol).map_err(err)?;
        let dev = traj
            .initial_values()
            .iter()
            .zip(&sol.xi)
            .map(|(u, x)| (u - (sol.gamma * horizon + x + q_inf)).abs())
            .fold(0.0, f64::max);
        deviations.push(dev);
        let Policy::TimeVarying { tables, .. } = extract_policy(&p, &traj).map_err(err)? else {
            return Err("expected a time-varying policy".into());
        };
        policy_errors.push(tables[0].iter().map(|l| (l - 2.0).abs()).fold(0.0, f64::max));
    }
    let nonincreasing = deviations.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let detail = format!(
        "deviations {:.2e}, {:.2e}, {:.2e}; |lambda(0) - 2| {:.2e}, {:.2e}, {:.2e}",
        deviations[0], deviations[1], deviations[2], policy_errors[0], policy_errors[1], policy_errors[2]
    );
    ensure(
        nonincreasing
            && deviations[2] <= 1e-4
            && policy_errors.windows(2).all(|w| w[1] <= w[0] + 1e-9)
            && policy_errors[2] <= 1e-3,
        detail,
    )
}

fn verification() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_z: f64 = 0.0;
    let mut worst_excess: f64 = f64::NEG_INFINITY;
    for k in 0..10 {
        let n = rng.random_range(2..=6);
        let r = rng.random_range(0.0..0.3);
        let p = random_problem(&mut rng, n, FamilyMix::Mixed, 1.0, r).map_err(err)?;
        let traj = solve_finite_horizon(&p, Tolerances::default()).map_err(err)?;
        let policy = extract_policy(&p, &traj).map_err(err)?;
        let report = simulate(&p, &policy, 0, 10_000, 1000 + k).map_err(err)?;
        let reference = traj.initial_values()[0];
        let z = estimate_value_gap_with_tolerance(&report, reference, 1e-7 * (1.0 + reference.abs()))
            .map_err(err)?;
        worst_z = worst_z.max(z.abs());
        worst_excess = worst_excess.max(perturbation_excess(p.model(), 0.5)?);
    }
    ensure(
        worst_z <= 3.0 && worst_excess <= 1e-9,
        format!("10 instances, max |z| {worst_z:.2}; perturbed policies exceed optimum by at most {worst_excess:.2e}"),
    )
}

/// Largest `max_i (u_perturbed − uʳ)_i` over every single-edge ×1.5
/// perturbation of the optimal stationary policy.
fn perturbation_excess(m: &CostModel, r: f64) -> Result<f64, String> {
    let opt = solve_stationary(m, r).map_err(err)?;
    let lambdas = m.all_intensities_at(&opt.u).map_err(err)?;
    let mut worst = f64::NEG_INFINITY;
    for e in 0..lambdas.len() {
        let mut perturbed = lambdas.clone();
        perturbed[e] *= 1.5;
        let policy = Policy::stationary(m, perturbed).map_err(err)?;
        let u = evaluate_stationary_policy(m, &policy, r).map_err(err)?;
        for (a, b) in u.iter().zip(&opt.u) {
            worst = worst.max(a - b);
        }
    }
    Ok(worst)
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let n = rng.random_range(2..=6);
        let r = rng.random_range(0.0..0.5);
        let p = random_problem(&mut rng, n, FamilyMix::Mixed, 1.0, r).map_err(err)?;
        let traj = solve_finite_horizon(&p, Tolerances::default()).map_err(err)?;
        let oracle = euler_dp(p.model(), p.terminal_payoff(), 1.0, r, 100_000);
        worst = worst.max(max_abs_diff(traj.initial_values(), &oracle));
    }
    ensure(worst <= 1e-4, format!("10 instances, max |V(0) - Euler| {worst:.2e} (limit 1e-4)"))
}

fn strong_max_principle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut min_gap = f64::INFINITY;
    for _ in 0..10 {
        let n = rng.random_range(2..=6);
        let m = random_model(&mut rng, n, FamilyMix::Entropic).map_err(err)?;
        let gamma = solve_ergodic_vanishing_discount(&m, &sequence()).map_err(err)?.gamma;
        let low: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        // raise a random non-empty proper subset of nodes
        let raised = rng.random_range(0..n);
        let mut high = low.clone();
        high[raised] += rng.random_range(0.1..1.0);
        for (i, h) in high.iter_mut().enumerate() {
            if i != raised && rng.random_bool(0.3) && i != (raised + 1) % n {
                *h += rng.random_range(0.1..1.0);
            }
        }
        let report = check_strong_max_principle(&m, gamma, &low, &high, 0.5).map_err(err)?;
        min_gap = min_gap.min(report.min_gap);
    }
    let mut rejected = 0;
    for _ in 0..5 {
        let n = rng.random_range(2..=6);
        let m = random_model(&mut rng, n, FamilyMix::Quadratic).map_err(err)?;
        let mut high = vec![0.0; n];
        high[0] = 1.0;
        if let Err(Error::PreconditionUnmet(_)) =
            check_strong_max_principle(&m, 0.0, &vec![0.0; n], &high, 0.5)
        {
            rejected += 1;
        }
    }
    ensure(
        min_gap > 0.0 && rejected == 5,
        format!("10 entropic instances, smallest gap {min_gap:.2e}; {rejected}/5 quadratic instances rejected"),
    )
}

fn corrector_uniqueness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let n = rng.random_range(2..=6);
        let m = random_model(&mut rng, n, FamilyMix::Entropic).map_err(err)?;
        let from_zero = solve_ergodic_vanishing_discount(&m, &sequence()).map_err(err)?;
        let guess: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let from_guess = solve_ergodic_vanishing_discount_from(&m, &sequence(), &guess).map_err(err)?;
        worst = worst.max(max_abs_diff(&from_zero.xi, &from_guess.xi));
    }
    ensure(worst <= 1e-7, format!("10 entropic instances, max |xi - xi'| {worst:.2e} (limit 1e-7)"))
}
