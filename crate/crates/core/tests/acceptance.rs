//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints one PASS/FAIL line; exits non-zero if any fails.

use std::f64::consts::E;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;
use ri_core::bridge::{envelope_derivative, sinkhorn_solve, SinkhornOptions};
use ri_core::diagnostics::{directional_derivative_check, fso_check, gibbs_check, jensen_gap};
use ri_core::model::kappa_cost;
use ri_core::optimizer::{brute_force_oracle, f_value, outer_solve, OracleOptions, OuterOptions};
use ri_core::random::{random_coupling, random_instance, random_marginal, seeded_rng, InstanceSpec};
use ri_core::restrictions::{entry_report, EntryPair};
use ri_core::{full_solve, Coupling, MarginalX, ProblemInstance, RawInstance, SolveOptions};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn max_diff_2d(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn seeded(seed: u64, n: usize, m: usize, alpha: f64) -> ProblemInstance {
    random_instance(&InstanceSpec {
        seed,
        n,
        m,
        alpha,
        utility_max: 2.0,
        ..InstanceSpec::default()
    })
    .validate()
    .unwrap()
}

fn sym_raw(alpha: f64) -> RawInstance {
    RawInstance::unlabeled(
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![0.5, 0.5],
        vec![0.5, 0.5],
        alpha,
        1.0,
    )
}

/// Seeded optima used by several criteria.
fn optimum_family() -> Vec<ProblemInstance> {
    let mut out = Vec::new();
    for seed in 0..12u64 {
        let n = 2 + (seed % 4) as usize;
        let m = 2 + ((seed / 2) % 3) as usize;
        let alpha = [0.2, 0.5, 0.8][(seed % 3) as usize];
        out.push(seeded(100 + seed, n, m, alpha));
    }
    out
}

fn c1_symmetric() -> Outcome {
    let start = Instant::now();
    let inst = sym_raw(0.5).validate().unwrap();
    let s = full_solve(&inst, &SolveOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let diag = E / (1.0 + E);
    let value = (0.5 * (1.0 + E)).ln();
    let errs = [
        max_diff(s.nu_star.weights(), &[0.5, 0.5]),
        (s.ccp[[0, 0]] - diag).abs().max((s.ccp[[1, 1]] - diag).abs()),
        (s.u_star - value).abs(),
        (s.f_star - value).abs(),
        (s.ccp[[0, 0]] - 0.7310586).abs(),
        (s.u_star - 0.6201145).abs(),
    ];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    check(
        s.converged && worst <= 1e-6 && elapsed < Duration::from_secs(1),
        format!("max error {worst:.2e}, {elapsed:.2?}"),
    )
}

fn c2_constant_utility() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = seeded_rng(2);
    for (k, c) in [0.0, 1.5, -3.0, 7.25].into_iter().enumerate() {
        let n = 2 + k;
        let m = 3;
        let phi = ri_core::random::random_simplex_point(&mut rng, n);
        let mu = ri_core::random::random_simplex_point(&mut rng, m);
        let alpha = [0.3, 0.5, 0.9, 1.0][k];
        let lambda = [1.0, 0.5, 2.0, 1.0][k];
        let inst = RawInstance::unlabeled(vec![vec![c; m]; n], phi, mu, alpha, lambda)
            .validate()
            .unwrap();
        let s = full_solve(&inst, &SolveOptions::default()).unwrap();
        let prod = Coupling::product(inst.phi(), inst.mu()).unwrap();
        worst = worst
            .max(max_diff(s.nu_star.weights(), inst.phi()))
            .max(max_diff_2d(s.coupling.joint(), prod.joint()))
            .max((s.u_star - c).abs())
            .max(kappa_cost(&s.coupling, &inst).unwrap().abs());
    }
    check(worst <= 1e-10, format!("max error {worst:.2e}"))
}

fn c3_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst_value = f64::NEG_INFINITY;
    let mut worst_marginal = 0.0f64;
    for k in 0..20u64 {
        let n = 2 + (k % 2) as usize;
        let m = 2 + ((k / 2) % 2) as usize;
        let alpha = [0.25, 0.5, 0.75][(k % 3) as usize];
        let inst = seeded(300 + k, n, m, alpha);
        let s = full_solve(&inst, &SolveOptions::default()).unwrap();
        let o = brute_force_oracle(
            &inst,
            &OracleOptions {
                seed: k,
                ..OracleOptions::default()
            },
        )
        .unwrap();
        worst_value = worst_value.max(o.u_best - s.u_star);
        worst_marginal = worst_marginal.max(max_diff(s.nu_star.weights(), &o.coupling.row_marginal()));
    }
    let elapsed = start.elapsed();
    check(
        worst_value <= 1e-5 && worst_marginal <= 1e-3 && elapsed < Duration::from_secs(60),
        format!("max U_oracle - U_solver {worst_value:.2e}, marginal gap {worst_marginal:.2e}, {elapsed:.2?}"),
    )
}

fn c4_duality_gap() -> Outcome {
    let mut rng = seeded_rng(4);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut solves = 0;
    for seed in 0..40u64 {
        let n = 2 + (seed % 6) as usize;
        let m = 2 + ((seed / 3) % 5) as usize;
        let inst = seeded(400 + seed, n, m, rng.random_range(0.05..1.0));
        let nu = random_marginal(&mut rng, n);
        for target in [nu, full_solve(&inst, &SolveOptions::default()).unwrap().nu_star] {
            let sol = sinkhorn_solve(&inst, &target, &SinkhornOptions::default()).unwrap();
            if sol.converged {
                solves += 1;
                lo = lo.min(sol.duality_gap);
                hi = hi.max(sol.duality_gap);
            }
        }
    }
    check(
        solves == 80 && lo >= -1e-12 && hi <= 1e-8,
        format!("{solves}/80 converged, gap range [{lo:.2e}, {hi:.2e}]"),
    )
}

fn c5_gibbs() -> Outcome {
    let mut at_optimum = 0.0f64;
    let mut probe_min = f64::INFINITY;
    let mut rng = seeded_rng(5);
    for inst in optimum_family() {
        let s = full_solve(&inst, &SolveOptions::default()).unwrap();
        at_optimum = at_optimum.max(gibbs_check(&s.coupling, &inst).unwrap());
        let prod = Coupling::product(inst.phi(), inst.mu()).unwrap();
        probe_min = probe_min.min(gibbs_check(&prod, &inst).unwrap());
        for _ in 0..5 {
            let p = random_coupling(&mut rng, &inst);
            probe_min = probe_min.min(gibbs_check(&p, &inst).unwrap());
        }
    }
    check(
        at_optimum <= 1e-6 && probe_min >= 1e-2,
        format!("optima max {at_optimum:.2e}, probes min {probe_min:.3}"),
    )
}

fn c6_jensen() -> Outcome {
    let mut rng = seeded_rng(6);
    let family = optimum_family();
    let mut sweep_min = f64::INFINITY;
    for k in 0..1000 {
        let inst = &family[k % family.len()];
        let p = random_coupling(&mut rng, inst);
        sweep_min = sweep_min.min(jensen_gap(&p, inst).unwrap());
    }
    let mut at_optimum = 0.0f64;
    for inst in &family {
        let s = full_solve(inst, &SolveOptions::default()).unwrap();
        at_optimum = at_optimum.max(jensen_gap(&s.coupling, inst).unwrap().abs());
    }
    let inst = sym_raw(0.5).validate().unwrap();
    let full = Coupling::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
    let probe = jensen_gap(&full, &inst).unwrap();
    let closed = (0.5 * (1.0 + E)).ln() - (1.0 - std::f64::consts::LN_2);
    check(
        sweep_min >= -1e-12 && at_optimum <= 1e-8 && (probe - 0.313262).abs() <= 1e-5 && (probe - closed).abs() < 1e-12,
        format!("sweep min {sweep_min:.3e}, optima max {at_optimum:.2e}, full-info {probe:.7}"),
    )
}

fn c7_concavity() -> Outcome {
    let mut rng = seeded_rng(7);
    let family = optimum_family();
    let mut worst = f64::INFINITY;
    for k in 0..100 {
        let inst = &family[k % family.len()];
        let a = random_marginal(&mut rng, inst.n());
        let b = random_marginal(&mut rng, inst.n());
        let mid: Vec<f64> = a.weights().iter().zip(b.weights()).map(|(x, y)| 0.5 * (x + y)).collect();
        let mid = MarginalX::new(mid).unwrap();
        let excess = f_value(&mid, inst).unwrap()
            - 0.5 * (f_value(&a, inst).unwrap() + f_value(&b, inst).unwrap());
        worst = worst.min(excess);
    }
    check(worst > 1e-12, format!("min midpoint excess {worst:.3e}"))
}

fn c8_uniqueness() -> Outcome {
    let mut rng = seeded_rng(8);
    let mut worst = 0.0f64;
    for inst in optimum_family() {
        let base = outer_solve(&inst, &OuterOptions::default()).unwrap();
        for _ in 0..5 {
            let r = outer_solve(
                &inst,
                &OuterOptions {
                    start: Some(random_marginal(&mut rng, inst.n())),
                    ..OuterOptions::default()
                },
            )
            .unwrap();
            if !r.converged {
                return Err("a random start did not converge".into());
            }
            worst = worst.max(max_diff(base.nu.weights(), r.nu.weights()));
        }
    }
    check(worst <= 1e-8, format!("max disagreement {worst:.2e}"))
}

fn c9_first_step_orthogonality() -> Outcome {
    let mut rng = seeded_rng(9);
    let mut min_decay = f64::INFINITY;
    let (mut ratio_lo, mut ratio_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    // Directions that load small entries of P carry a large ε² term, so the
    // decade 1e-3..1e-4 is not yet asymptotic for them; reported, not gated.
    let mut coarse_hi = f64::NEG_INFINITY;
    for inst in optimum_family() {
        let s = full_solve(&inst, &SolveOptions::default()).unwrap();
        for _ in 0..3 {
            let h = random_coupling(&mut rng, &inst);
            let slopes = fso_check(&s.coupling, &h, &inst, &[1e-2, 1e-3, 1e-4]).unwrap();
            min_decay = min_decay.min(slopes[0].1 / slopes[2].1);
            let e3 = directional_derivative_check(&s.coupling, &h, &inst, 1e-3).unwrap();
            let e4 = directional_derivative_check(&s.coupling, &h, &inst, 1e-4).unwrap();
            let e5 = directional_derivative_check(&s.coupling, &h, &inst, 1e-5).unwrap();
            coarse_hi = coarse_hi.max(e4 / e3);
            ratio_lo = ratio_lo.min(e5 / e4);
            ratio_hi = ratio_hi.max(e5 / e4);
        }
    }
    check(
        min_decay >= 5.0 && ratio_lo >= 0.05 && ratio_hi <= 0.15,
        format!(
            "min slope decay {min_decay:.1}x, error ratio 1e-4->1e-5 in [{ratio_lo:.4}, {ratio_hi:.4}] \
             (1e-3->1e-4 max {coarse_hi:.4})"
        ),
    )
}

fn c10_entry() -> Outcome {
    let mut rng = seeded_rng(10);
    let mut worst_constancy = 0.0f64;
    let mut worst_alpha = 0.0f64;
    for alpha in [0.25, 0.5, 0.75] {
        for seed in 0..3u64 {
            let n = 3 + seed as usize % 2;
            let inst = seeded(1000 + seed, n, 3, alpha);
            let phi_entrant = ri_core::random::random_simplex_point(&mut rng, n);
            let pair = EntryPair::with_entrant_prior(inst, &phi_entrant, &SolveOptions::default()).unwrap();
            let report = entry_report(&pair, 1e-6).unwrap();
            for p in &report.pairs {
                worst_constancy = worst_constancy.max(p.constancy.deviation);
            }
            match report.alpha_hat {
                Some(a) => worst_alpha = worst_alpha.max((a - alpha).abs()),
                None => return Err(format!("alpha unidentified at seed {seed}")),
            }
        }
    }
    let inst = seeded(1100, 3, 3, 0.5);
    let mut pair = EntryPair::with_entrant_prior(inst, &[0.2, 0.2, 0.6], &SolveOptions::default()).unwrap();
    pair.entrant_solution.ccp[[1, 2]] *= 1.05;
    let corrupted = entry_report(&pair, 1e-6).unwrap();
    check(
        worst_constancy <= 1e-6 && worst_alpha <= 1e-4 && !corrupted.passed,
        format!(
            "max deviation {worst_constancy:.2e}, max alpha error {worst_alpha:.2e}, corrupted probe {}",
            if corrupted.passed { "passed" } else { "rejected" }
        ),
    )
}

fn c11_envelope() -> Outcome {
    let mut rng = seeded_rng(11);
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let inst = seeded(1200 + seed, 3, 3, [0.25, 0.5, 0.75][seed as usize % 3]);
        let nu = random_marginal(&mut rng, 3);
        for x in 0..3 {
            let d = envelope_derivative(&nu, x, &inst, 1e-4, &SinkhornOptions::default()).unwrap();
            worst = worst.max((d.finite_difference - d.potential_prediction).abs());
        }
    }
    check(worst <= 1e-3, format!("max mismatch {worst:.2e}"))
}

fn c12_alpha_limit() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let raw = random_instance(&InstanceSpec {
            seed: 1300 + seed,
            alpha: 0.999,
            utility_max: 2.0,
            ..InstanceSpec::default()
        });
        let inst = raw.validate().unwrap();
        let s = full_solve(&inst, &SolveOptions::default()).unwrap();
        let mb = Array2::from_shape_fn((inst.n(), inst.m()), |(i, j)| {
            let z: f64 = (0..inst.n()).map(|k| raw.phi[k] * raw.utility[k][j].exp()).sum();
            raw.phi[i] * raw.utility[i][j].exp() / z
        });
        worst = worst.max(max_diff_2d(&s.ccp, &mb));
    }
    check(worst <= 1e-2, format!("max CCP distance {worst:.2e}"))
}

fn c13_performance() -> Outcome {
    let big = random_instance(&InstanceSpec {
        seed: 1400,
        n: 500,
        m: 500,
        utility_max: 10.0,
        ..InstanceSpec::default()
    })
    .validate()
    .unwrap();
    let nu = random_marginal(&mut seeded_rng(13), 500);
    let start = Instant::now();
    let sol = sinkhorn_solve(&big, &nu, &SinkhornOptions { tol: 1e-8, ..Default::default() }).unwrap();
    let bridge = start.elapsed();

    let mid = seeded(1401, 100, 100, 0.5);
    let start = Instant::now();
    let s = full_solve(&mid, &SolveOptions::default()).unwrap();
    let solve = start.elapsed();
    let limit = Duration::from_secs(10);
    check(
        sol.converged && s.converged && bridge < limit && solve < limit,
        format!(
            "bridge 500x500 {bridge:.2?} ({} sweeps), full_solve 100x100 {solve:.2?} ({} outer steps)",
            sol.iterations, s.outer_iterations
        ),
    )
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("1 symmetric 2x2 fixture", c1_symmetric),
        ("2 constant utility", c2_constant_utility),
        ("3 oracle equivalence", c3_oracle),
        ("4 duality gap certificate", c4_duality_gap),
        ("5 Gibbs property", c5_gibbs),
        ("6 Jensen envelope", c6_jensen),
        ("7 strict concavity", c7_concavity),
        ("8 uniqueness", c8_uniqueness),
        ("9 first-step orthogonality", c9_first_step_orthogonality),
        ("10 entry restrictions", c10_entry),
        ("11 envelope derivative", c11_envelope),
        ("12 alpha -> 1 continuity", c12_alpha_limit),
        ("13 performance", c13_performance),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  criterion {name}: {detail} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
