//! Acceptance suite: one test per acceptance criterion, each printing a
//! pass line with the measured quantities. Run with
//! `cargo test -p aggnet-cli --test acceptance -- --nocapture` to see the
//! per-criterion output.

use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_pcg::Pcg64;

use aggnet_core::consensus::{consensus_closed_form, consensus_schweitzer};
use aggnet_core::dynamics::{iterate_global, sample_two_island, GlobalAggregatorSpec};
use aggnet_core::linalg::{Matrix, RowStochasticMatrix, ROW_SUM_TOL};
use aggnet_core::local::{self, LocalAggregatorSpec};
use aggnet_core::robust::{self, RobustQuery};
use aggnet_core::two_island::{self, TwoIslandEnv};

fn random_stochastic(rng: &mut Pcg64, n: usize) -> RowStochasticMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(0.05..1.0)).collect())
        .collect();
    RowStochasticMatrix::validate_renormalizing(Matrix::from_rows(&rows).unwrap(), ROW_SUM_TOL)
        .unwrap()
}

fn random_spec(rng: &mut Pcg64, n: usize) -> GlobalAggregatorSpec {
    let rho = rng.gen_range(0.05..0.95);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let alpha = raw.iter().map(|a| a / sum).collect();
    let beta = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
    GlobalAggregatorSpec::new(rho, alpha, beta).unwrap()
}

#[test]
fn criterion_01_closed_form_simulation_equivalence() {
    let start = Instant::now();
    let mut rng = Pcg64::seed_from_u64(1001);
    let mut worst_sim: f64 = 0.0;
    let mut worst_pert: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=12);
        let t = random_stochastic(&mut rng, n);
        let spec = random_spec(&mut rng, n);
        let p0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let closed = consensus_closed_form(&t, &spec, &p0).unwrap().value;
        let pert = consensus_schweitzer(&t, &spec, &p0).unwrap().value;
        let sim = iterate_global(&t, &spec, &p0, 3_000_000, 1e-12)
            .unwrap()
            .consensus
            .unwrap()
            .scalar()
            .unwrap();
        worst_sim = worst_sim.max((closed - sim).abs());
        worst_pert = worst_pert.max((closed - pert).abs());
        assert!((closed - sim).abs() < 1e-8);
        assert!((closed - pert).abs() < 1e-9);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "runtime bound: {elapsed:.1} s");
    println!(
        "criterion 01 PASS: 200 instances, max |closed - sim| = {worst_sim:.2e} (< 1e-8), \
         max |closed - perturbation| = {worst_pert:.2e} (< 1e-9), {elapsed:.1} s (< 30 s)"
    );
}

#[test]
fn criterion_02_worked_micro_case() {
    let t = RowStochasticMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    let spec = GlobalAggregatorSpec::new(0.5, vec![1.0, 0.0], vec![0.5, 0.5]).unwrap();
    let p0 = [1.0, 0.0];
    // iteration oracle first
    let sim = iterate_global(&t, &spec, &p0, 1_000_000, 1e-13)
        .unwrap()
        .consensus
        .unwrap()
        .scalar()
        .unwrap();
    assert!((sim - 0.75).abs() < 1e-11, "iteration oracle gave {sim}");
    let closed = consensus_closed_form(&t, &spec, &p0).unwrap().value;
    let pert = consensus_schweitzer(&t, &spec, &p0).unwrap().value;
    assert!((closed - 0.75).abs() < 1e-12);
    assert!((pert - 0.75).abs() < 1e-12);
    println!(
        "criterion 02 PASS: consensus 0.75 by iteration ({sim:.12}), direct formula \
         ({closed:.12}), and perturbation route ({pert:.12})"
    );
}

#[test]
fn criterion_03_two_island_formula_cross_check() {
    // closed forms
    let d0 = two_island::delta0(2.0, 2.0).unwrap();
    assert!((d0 - 1.0 / 21.0).abs() < 1e-14);
    let env = TwoIslandEnv::with_equal_beta(2.0, 2.0, 0.5, 0.5, 0.5).unwrap();
    let d1 = two_island::delta1(&env);
    assert!((d1 - 4.0 / 51.0).abs() < 1e-14);
    // stationary-distribution oracle for delta0
    let f = two_island::expected_matrix(2.0, 2.0).unwrap();
    let s = f.stationary_distribution().unwrap();
    let d0_oracle = (s.dot(&[1.0, 0.0]) - 2.0 / 3.0).abs();
    assert!((d0_oracle - 1.0 / 21.0).abs() < 1e-10);
    // island-simulation oracle for delta1
    let spec = GlobalAggregatorSpec::new(0.5, vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
    let sim = iterate_global(&f, &spec, &[1.0, 0.0], 1_000_000, 1e-13)
        .unwrap()
        .consensus
        .unwrap()
        .scalar()
        .unwrap();
    let d1_oracle = (sim - 2.0 / 3.0).abs();
    assert!((d1_oracle - 4.0 / 51.0).abs() < 1e-10);
    println!(
        "criterion 03 PASS: delta0(2,2) = 1/21 (formula dev {:.1e}, oracle dev {:.1e}), \
         delta1 = 4/51 (formula dev {:.1e}, oracle dev {:.1e})",
        (d0 - 1.0 / 21.0).abs(),
        (d0_oracle - 1.0 / 21.0).abs(),
        (d1 - 4.0 / 51.0).abs(),
        (d1_oracle - 4.0 / 51.0).abs()
    );
}

#[test]
fn criterion_04_speed_threshold_reproduction() {
    let start = Instant::now();
    let (pi, h_lo, h_hi, grid) = (1.5, 4.0, 40.0, 2000);
    let at = |rho: f64| {
        robust::robust_set(&RobustQuery::new(pi, h_lo, h_hi, rho, grid).unwrap()).unwrap()
    };
    let half = at(0.5);
    assert!(half.empty && half.measure == 0.0, "robust set must be empty at rho = 0.5");
    let fast = at(0.999);
    assert!(!fast.empty && fast.measure > 0.0, "robust set must have measure at rho = 0.999");
    // monotone measure along a 50-point speed grid
    let mut prev = 0.0;
    for k in 0..50 {
        let rho = 0.01 + 0.98 * k as f64 / 49.0;
        let m = at(rho).measure;
        assert!(m >= prev - 1e-12, "measure must be nondecreasing at rho = {rho}");
        prev = m;
    }
    let star = robust::rho_star(pi, h_lo, h_hi, grid).unwrap();
    assert!((0.5..1.0).contains(&star));
    assert!(at(star - 0.01).measure == 0.0);
    assert!(at((star + 0.01).min(0.9999)).measure > 0.0);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "runtime bound: {elapsed:.1} s");
    println!(
        "criterion 04 PASS: measure(0.5) = 0, measure(0.999) = {:.4}, rho* = {star:.6} in \
         [0.5, 1), monotone over 50 speeds, {elapsed:.1} s (< 60 s)",
        fast.measure
    );
}

#[test]
fn criterion_05_majority_training_property_suite() {
    let mut checked = 0;
    let mut min_margin = f64::INFINITY;
    for &pi in &[1.5, 2.0, 3.0] {
        let alpha = pi * pi / (pi * pi + 1.0) + 0.05;
        for i in 0..20 {
            let h = 1.1 + 98.9 * i as f64 / 19.0;
            for j in 0..20 {
                let beta = 0.03 + 0.94 * j as f64 / 19.0;
                for k in 0..10 {
                    let rho = 0.05 + 0.9 * k as f64 / 9.0;
                    let env = TwoIslandEnv::with_equal_beta(h, pi, rho, alpha, beta).unwrap();
                    let star = two_island::delta_star(&env).unwrap();
                    assert!(star > 0.0, "gap change must be positive at {env:?}");
                    let bumped = TwoIslandEnv { h: h + 1e-3, ..env };
                    let diff = two_island::delta1(&bumped) - two_island::delta1(&env);
                    assert!(diff > 0.0, "gap must increase in h at {env:?}");
                    min_margin = min_margin.min(star);
                    checked += 1;
                }
            }
        }
    }
    println!(
        "criterion 05 PASS: {checked} grid points (20x20x10 over three size ratios), all \
         with positive gap change (min {min_margin:.2e}) and forward-increasing gap in h"
    );
}

#[test]
fn criterion_06_minority_regime_detection() {
    let env = TwoIslandEnv::with_equal_beta(5.0, 2.0, 0.5, 0.3, 0.05).unwrap();
    let c = two_island::classify_regime(&env).unwrap();
    let h_lower = c.thresholds["h_lower"];
    let h_upper = c.thresholds["h_upper"];
    assert!(1.0 < h_lower && h_lower < h_upper && h_upper.is_finite());
    // dense sign scan at 1e-3 resolution in log h confirms the pattern
    let star = |h: f64| {
        two_island::delta_star(&TwoIslandEnv { h, ..env }).unwrap()
    };
    let mut crossings = Vec::new();
    let mut bad_signs = 0;
    let mut lx = (1.0f64 + 1e-7).ln();
    let top = 1e6f64.ln();
    let mut prev = star(lx.exp());
    while lx < top {
        lx += 1e-3;
        let h = lx.exp();
        let v = star(h);
        if v.signum() != prev.signum() {
            crossings.push(h);
        }
        let expected_negative = h > h_lower && h < h_upper;
        let tol_band = (h / h_lower - 1.0).abs() < 2e-3 || (h / h_upper - 1.0).abs() < 2e-3;
        if !tol_band && (v < 0.0) != expected_negative {
            bad_signs += 1;
        }
        prev = v;
    }
    assert_eq!(crossings.len(), 2, "exactly two sign changes expected: {crossings:?}");
    assert_eq!(bad_signs, 0, "sign pattern must match the reported thresholds");
    println!(
        "criterion 06 PASS: thresholds h_lower = {h_lower:.6}, h_upper = {h_upper:.4} with \
         positive-negative-positive gap change confirmed by a {}-point log scan",
        ((top - (1.0f64 + 1e-7).ln()) / 1e-3) as usize
    );
}

#[test]
fn criterion_07_local_aggregator_suite() {
    let mut rng = Pcg64::seed_from_u64(1007);
    let mut worst_sum_dev: f64 = 0.0;
    let mut min_gap_margin = f64::INFINITY;
    for _ in 0..500 {
        let b12: f64 = rng.gen_range(0.0..0.9);
        let b11: f64 = (b12 + rng.gen_range(1e-4..0.1)).min(0.9999);
        let b21: f64 = rng.gen_range(0.0..0.9);
        let b22: f64 = (b21 + rng.gen_range(1e-4..0.1)).min(0.9999);
        let spec =
            LocalAggregatorSpec::new(rng.gen_range(0.05..0.95), b11, b12, b21, b22).unwrap();
        let h = rng.gen_range(1.05..40.0);
        let pi = rng.gen_range(1.05..6.0);
        let none = local::check_local_beats_none(&spec, h, pi).unwrap();
        assert!(none.improves_all_topics, "dominant spec must beat no aggregation");
        min_gap_margin = min_gap_margin
            .min(none.none.0 - none.local.gap1)
            .min(none.none.1 - none.local.gap2);
        // paired global design
        let env = TwoIslandEnv::new(
            h,
            pi,
            rng.gen_range(0.05..0.95),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.02..0.98),
            rng.gen_range(0.02..0.98),
        )
        .unwrap();
        let cmp = local::check_global_vs_local(&env, &spec).unwrap();
        let sum_dev = (cmp.global.0 + cmp.global.1 - 1.0).abs();
        assert!(sum_dev < 1e-14, "global topic gaps must sum to 1");
        worst_sum_dev = worst_sum_dev.max(sum_dev);
        assert!(cmp.local.0 + cmp.local.1 < 1.0);
        let margin = if cmp.worse_topic == 1 {
            cmp.global.0 - cmp.local.0
        } else {
            cmp.global.1 - cmp.local.1
        };
        assert!(margin > 0.0, "a worse topic must exist for the global design");
    }
    println!(
        "criterion 07 PASS: 500 dominant specs beat no-aggregation componentwise (min \
         margin {min_gap_margin:.2e}); 500 global pairings each have a worse topic; \
         global gap sums deviate from 1 by at most {worst_sum_dev:.1e} (< 1e-14)"
    );
}

#[test]
fn criterion_08_derivative_validation() {
    let mut rng = Pcg64::seed_from_u64(1008);
    let eps = 1e-6;
    // relative error with a floor: strict relative error is ill-posed where
    // the derivative itself crosses zero inside the box
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-3);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 500 {
        let h = rng.gen_range(1.2..20.0);
        let pi = rng.gen_range(1.2..4.0);
        let rho = rng.gen_range(0.05..0.95);
        let alpha = rng.gen_range(0.05..0.95);
        let beta = rng.gen_range(0.05..0.95);
        let env = TwoIslandEnv::with_equal_beta(h, pi, rho, alpha, beta).unwrap();
        if two_island::signed_gap(&env).abs() <= 1e-8 {
            continue;
        }
        checked += 1;
        let gap = |h: f64, pi: f64, rho: f64, alpha: f64, beta: f64| {
            two_island::signed_gap(
                &TwoIslandEnv::with_equal_beta(h, pi, rho, alpha, beta).unwrap(),
            )
        };
        let pairs = [
            (
                two_island::d_signed_gap_dh(&env).unwrap(),
                (gap(h + eps, pi, rho, alpha, beta) - gap(h - eps, pi, rho, alpha, beta))
                    / (2.0 * eps),
            ),
            (
                two_island::d_signed_gap_dbeta(&env).unwrap(),
                (gap(h, pi, rho, alpha, beta + eps) - gap(h, pi, rho, alpha, beta - eps))
                    / (2.0 * eps),
            ),
            (
                two_island::d_signed_gap_dalpha(&env).unwrap(),
                (gap(h, pi, rho, alpha + eps, beta) - gap(h, pi, rho, alpha - eps, beta))
                    / (2.0 * eps),
            ),
        ];
        for (analytic, fd) in pairs {
            let r = rel(analytic, fd);
            worst = worst.max(r);
            assert!(r < 1e-6, "derivative mismatch: analytic {analytic}, fd {fd}");
        }
    }
    println!(
        "criterion 08 PASS: 3 analytic derivatives at 500 interior points with |gap| > 1e-8 \
         match central differences (step 1e-6), worst floored relative error {worst:.2e} (< 1e-6)"
    );
}

#[test]
fn criterion_09_sbm_consistency() {
    let start = Instant::now();
    // h = 3 at a density where every realization is primitive; n = 100
    // uses the closest integer split to the 2:1 ratio, with each size's
    // prediction evaluated at its own realized size ratio
    let mut medians = Vec::new();
    for &(n1, n2) in &[(20usize, 10usize), (67, 33), (200, 100)] {
        let pi = n1 as f64 / n2 as f64;
        let env = TwoIslandEnv::new(3.0, pi, 0.5, 0.5, 0.4, 0.4).unwrap();
        let predicted = two_island::consensus(&env);
        let mut devs: Vec<f64> = (0..50)
            .map(|seed| {
                let sample = sample_two_island(n1, n2, 0.6, 0.2, seed).unwrap();
                let spec = sample.global_spec(0.5, 0.5, 0.4, 0.4).unwrap();
                let sim = iterate_global(
                    &sample.matrix,
                    &spec,
                    &sample.unit_beliefs(),
                    500_000,
                    1e-10,
                )
                .unwrap()
                .consensus
                .unwrap()
                .scalar()
                .unwrap();
                (sim - predicted).abs()
            })
            .collect();
        devs.sort_by(f64::total_cmp);
        medians.push(0.5 * (devs[24] + devs[25]));
    }
    assert!(
        medians[0] > medians[1] && medians[1] > medians[2],
        "median deviation must decrease with n: {medians:?}"
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "runtime bound: {elapsed:.1} s");
    println!(
        "criterion 09 PASS: median |simulated - predicted| over 50 seeds decreases over \
         n = 30, 100, 300: {:.4} > {:.4} > {:.4}; {elapsed:.1} s (< 120 s)",
        medians[0], medians[1], medians[2]
    );
}

#[test]
fn criterion_10_cli_determinism() {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_aggnet"))
            .args([
                "simulate",
                "--set",
                "n1=30",
                "--set",
                "n2=15",
                "--set",
                "p_s=0.6",
                "--set",
                "p_d=0.2",
                "--set",
                "rho=0.5",
                "--set",
                "alpha=0.4:0.6:3:linear",
                "--set",
                "beta=0.4",
                "--seed",
                "21",
            ])
            .output()
            .expect("binary runs")
    };
    let a = run();
    let b = run();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "repeated runs must be byte-identical");
    // a second mode for good measure
    let sweep = || {
        Command::new(env!("CARGO_BIN_EXE_aggnet"))
            .args([
                "gap", "--set", "h=1.1:100:50:log", "--set", "pi=2", "--set", "rho=0.5",
                "--set", "alpha=0.9", "--set", "beta=0.3", "--format", "json",
            ])
            .output()
            .expect("binary runs")
    };
    let c = sweep();
    let d = sweep();
    assert!(c.status.success());
    assert_eq!(c.stdout, d.stdout);
    println!(
        "criterion 10 PASS: simulate (3-point sweep, seed 21) and gap (50-point log sweep) \
         runs are byte-identical across invocations"
    );
}

#[test]
fn criterion_05_addendum_prop3_cli_sweep() {
    // the spec's worked CLI example: every point of the log sweep worsens
    // learning when training is sufficiently majority-weighted
    let out = Command::new(env!("CARGO_BIN_EXE_aggnet"))
        .args([
            "gap", "--set", "h=1.1:100:50:log", "--set", "pi=2", "--set", "rho=0.5", "--set",
            "alpha=0.9", "--set", "beta=0.3",
        ])
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert!(fields[8] > 0.0, "delta_star must be positive on the whole sweep");
        rows += 1;
    }
    assert_eq!(rows, 50);
    println!("criterion 05 addendum PASS: 50-point CLI gap sweep has delta_star > 0 throughout");
}
