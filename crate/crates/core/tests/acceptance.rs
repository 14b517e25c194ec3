//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line with its measurements and runtime.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;
use multistable::rng::Stream;
use multistable::shotnoise::{generate_points, sample_path, sample_path_b, sample_path_d, sample_path_w, sample_path_z};
use multistable::spectra::{
    chernoff_asymptotic_bounds, chernoff_sup, coarse_exponents, concave_hull, delta_estimate, estimate_fg,
    hausdorff_curve, holder_estimate, large_deviation_curve, BoundLemma, BoundParams, ChernoffParams, ExtReal,
    FgOptions, Side,
};
use multistable::stable_norm::{schelling_f, stable_norm_constant};
use multistable::validation::{empirical_char_fn, scaling_fit, MCConfig};
use multistable::{AlphaFunction, ProcessKind};

/// Prints the criterion line outside the test harness capture, then fails
/// the test if the criterion or its time budget was missed.
fn report(id: &str, name: &str, pass: bool, detail: String, start: Instant, budget: Duration) {
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let verdict = if pass && in_time { "PASS" } else { "FAIL" };
    let line = format!(
        "criterion {id} [{name}]: {verdict} ({detail}; {:.2} s of {} s budget)\n",
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded its time budget: {elapsed:?}");
}

#[test]
fn criterion_01_chernoff_closed_form() {
    let start = Instant::now();
    let pos = ChernoffGrid::new(12.0, 1_000_000, false);
    let neg = ChernoffGrid::new(12.0, 1_000_000, true);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for i in 0..20 {
        for j in 0..20 {
            if i == j {
                continue;
            }
            let lambda = (i as f64 + 0.5) / 20.0;
            let p = (j as f64 + 0.5) / 20.0;
            let params = ChernoffParams::new(lambda, p).unwrap();
            let (side, grid) = if p < lambda { (Side::PositiveT, &pos) } else { (Side::NegativeT, &neg) };
            let closed = chernoff_sup(params, side).unwrap().value;
            worst = worst.max((closed - grid.max_h(lambda, p)).abs());
            pairs += 1;
        }
    }
    report(
        "1",
        "Chernoff closed form vs grid search",
        worst <= 1e-9,
        format!("{pairs} (lambda, p) pairs, max |diff| = {worst:.3e}, tolerance 1e-9"),
        start,
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_02_asymptotic_bounds() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    let mut checked = 0;
    let mut failures = Vec::new();
    for lemma in [BoundLemma::Pr3, BoundLemma::Pr4, BoundLemma::Pr5, BoundLemma::Pr6] {
        for _ in 0..10 {
            let gap = rng.gen_range(0.5..1.0);
            let top = rng.gen_range(-0.4..-0.05);
            let (a, b) = match lemma {
                BoundLemma::Pr3 | BoundLemma::Pr5 => (top, top - gap),
                BoundLemma::Pr4 | BoundLemma::Pr6 => (top - gap, top),
            };
            let params = BoundParams {
                a,
                b,
                k1: rng.gen_range(0.1..1.0),
                k2: rng.gen_range(0.1..1.0),
                k_u: rng.gen_range(0.5..1.0),
            };
            for n in [1e4, 1e6] {
                let check = chernoff_asymptotic_bounds(lemma, params, n).unwrap();
                checked += 1;
                if !check.holds {
                    failures.push(format!("{lemma:?} {params:?} n={n}"));
                }
            }
        }
    }
    report(
        "2",
        "PR3-PR6 bounds",
        failures.is_empty(),
        format!("{checked} checks, failures: {failures:?}"),
        start,
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_03_stable_norm_constant() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for k in 1..=9 {
        let u = 1.0 + 0.1 * k as f64;
        let closed = stable_norm_constant(u).unwrap();
        let oracle = stable_norm_oracle(u);
        worst = worst.max(((closed - oracle) / oracle).abs());
    }
    report(
        "3",
        "C_u closed form vs oscillatory quadrature",
        worst <= 1e-6,
        format!("u = 1.1..1.9, max relative error {worst:.3e}, tolerance 1e-6"),
        start,
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_04_schelling_positivity() {
    let start = Instant::now();
    let values: Vec<(f64, f64)> = (0..100)
        .map(|i| {
            let beta = 1.05 + 0.9 * i as f64 / 99.0;
            (beta, schelling_f(beta).unwrap())
        })
        .collect();
    let (argmin, min) = values.iter().cloned().fold((0.0, f64::INFINITY), |m, v| if v.1 < m.1 { v } else { m });
    report(
        "4",
        "F(beta) > 0 on [1.05, 1.95]",
        min > 0.0,
        format!("100 points, min F = {min:.6e} at beta = {argmin:.4}"),
        start,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_05_characteristic_function() {
    let start = Instant::now();
    let alpha = AlphaFunction::constant(1.5).unwrap();
    let cfg = MCConfig::new(20_000, 5, 1_000_000).unwrap();
    let rep = empirical_char_fn(&alpha, 0.0, 1.0, &[0.5, 1.0, 2.0], &cfg).unwrap();
    let mut pass = rep.all_pass();
    let mut detail = Vec::new();
    for e in &rep.entries {
        let exact = (-e.theta.abs().powf(1.5)).exp();
        pass &= (e.theoretical - exact).abs() < 1e-12;
        detail.push(format!(
            "theta={}: |diff|={:.4} <= {:.4} (3/sqrt(M)={:.4} + slack {:.4})",
            e.theta,
            e.distance,
            e.tolerance,
            3.0 / (cfg.replicas as f64).sqrt(),
            e.truncation_slack
        ));
    }
    report(
        "5",
        "characteristic function, constant alpha = 1.5",
        pass,
        detail.join(", "),
        start,
        Duration::from_secs(300),
    );
}

fn bitwise_equal(x: &[f64], y: &[f64]) -> bool {
    x.len() == y.len() && x.iter().zip(y).all(|(a, b)| a.to_bits() == b.to_bits())
}

#[test]
fn criterion_06_structural_identities() {
    let start = Instant::now();
    let affine = AlphaFunction::affine(1.2, 0.6).unwrap();
    let constant = AlphaFunction::constant(1.5).unwrap();
    let n = 1 << 12;
    let mut bwz: f64 = 0.0;
    let mut db: f64 = 0.0;
    let mut deterministic = true;
    for seed in 0..20 {
        let pts = generate_points(seed, 10_000).unwrap();
        let b = sample_path_b(&pts, &affine, n).unwrap();
        let w = sample_path_w(&pts, &affine, n).unwrap();
        let z = sample_path_z(&pts, &affine, n).unwrap();
        for j in 0..=n {
            bwz = bwz.max((b.values[j] - w.values[j] - z.values[j]).abs());
        }
        let bc = sample_path_b(&pts, &constant, n).unwrap();
        let dc = sample_path_d(&pts, &constant, n).unwrap();
        for j in 0..=n {
            db = db.max((bc.values[j] - dc.values[j]).abs());
        }
        let again = sample_path_b(&generate_points(seed, 10_000).unwrap(), &affine, n).unwrap();
        deterministic &= bitwise_equal(&b.values, &again.values);
    }
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<Vec<u8>> = (0..2)
        .map(|k| {
            let path = dir.path().join(format!("run{k}.csv"));
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_mslevy"))
                .args(["--seed", "3", "--set", "truncation=5000", "--set", "resolution=1024", "--out"])
                .arg(&path)
                .arg("simulate")
                .status()
                .unwrap();
            assert!(status.success());
            std::fs::read(&path).unwrap()
        })
        .collect();
    deterministic &= files[0] == files[1];
    report(
        "6",
        "structural identities and determinism",
        bwz <= 1e-12 && db <= 1e-12 && deterministic,
        format!("20 seeds, max |B - W - Z| = {bwz:.2e}, max |D - B| (constant) = {db:.2e}, byte-identical reruns: {deterministic}"),
        start,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_07_large_deviation_spectrum() {
    let start = Instant::now();
    let alpha = AlphaFunction::constant(1.5).unwrap();
    let slope_grid: Vec<f64> = (0..=10).map(|i| 0.8 + 0.05 * i as f64).collect();
    let mut grid = vec![0.3, 2.0 / 3.0];
    grid.extend(&slope_grid);
    grid.push(1.8);
    let mut per_seed: Vec<Vec<ExtReal>> = Vec::new();
    for seed in 0..10 {
        let pts = generate_points(seed, 1_000_000).unwrap();
        let b = sample_path_b(&pts, &alpha, 1 << 16).unwrap();
        let fields: Vec<_> = (10..=16).map(|m| coarse_exponents(&b, 1 << m).unwrap()).collect();
        per_seed.push(estimate_fg(&fields, &grid, &[0.05], FgOptions::default()).unwrap().values);
    }
    // −∞ sorts below every finite value, so it is mapped to f64::NEG_INFINITY for the median
    let med: Vec<f64> = (0..grid.len())
        .map(|i| median(&per_seed.iter().map(|v| v[i].to_f64()).collect::<Vec<_>>()))
        .collect();
    let at_03 = med[0];
    let plateau = med[1];
    let tail = &med[2..2 + slope_grid.len()];
    let slope_fit = if tail.iter().all(|v| v.is_finite()) { slope(&slope_grid, tail) } else { f64::NAN };
    let beyond = med[grid.len() - 1];
    let a = (at_03 - 0.45).abs() <= 0.15;
    let b = (plateau - 1.0).abs() <= 0.15;
    let c = (slope_fit + 1.0).abs() <= 0.25;
    let d = beyond == f64::NEG_INFINITY || beyond < 0.1;
    report(
        "7",
        "large-deviation spectrum, constant alpha = 1.5",
        a && b && c && d,
        format!(
            "median over 10 seeds: (a) f_g(0.3) = {at_03:.3} vs 0.45 +- 0.15 [{}], (b) f_g(2/3) = {plateau:.3} vs 1 +- 0.15 [{}], (c) slope on [0.8, 1.3] = {slope_fit:.3} vs -1 +- 0.25 [{}], (d) f_g(1.8) = {beyond} [{}]",
            ok(a), ok(b), ok(c), ok(d)
        ),
        start,
        Duration::from_secs(600),
    );
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "miss"
    }
}

#[test]
fn criterion_08_increment_probability_scaling() {
    let start = Instant::now();
    let alpha = AlphaFunction::constant(1.5).unwrap();
    let cfg = MCConfig::new(100_000, 8, 1_000_000).unwrap();
    let n_list: Vec<usize> = (8..=14).map(|k| 1 << k).collect();
    let low = scaling_fit(&alpha, 0.3, 0.05, 0.5, &n_list, &cfg, ProcessKind::Y).unwrap();
    let high = scaling_fit(&alpha, 1.0, 0.05, 0.5, &n_list, &cfg, ProcessKind::Y).unwrap();
    let s_low = low.slope.unwrap_or(f64::NAN);
    let s_high = high.slope.unwrap_or(f64::NAN);
    let pass_low = low.reliable && (s_low + 0.55).abs() <= 0.1;
    let pass_high = high.reliable && (s_high + 1.0 / 3.0).abs() <= 0.1;
    report(
        "8",
        "P_n^j scaling, constant alpha = 1.5",
        pass_low && pass_high,
        format!(
            "low beta=0.3: slope {s_low:.3} vs -0.55 +- 0.1 [{}]; high beta=1.0: slope {s_high:.3} vs -0.333 +- 0.1 [{}]",
            ok(pass_low),
            ok(pass_high)
        ),
        start,
        Duration::from_secs(600),
    );
}

#[test]
fn criterion_09_holder_delta_cross_check() {
    let start = Instant::now();
    let alpha = AlphaFunction::constant(1.5).unwrap();
    let pts = generate_points(0, 16_000_000).unwrap();
    let b = sample_path_b(&pts, &alpha, 1 << 20).unwrap();
    let times = Stream::new(99, 0);
    let mut diffs = Vec::new();
    let mut max_delta: f64 = 0.0;
    let mut max_h: f64 = 0.0;
    for i in 0..100 {
        let t = 0.02 + 0.96 * times.open01_at(i);
        let delta = delta_estimate(&pts, t).unwrap().delta_hat;
        max_delta = max_delta.max(delta);
        if i < 50 {
            let h = holder_estimate(&b, t, 1..=16).unwrap();
            max_h = max_h.max(h);
            diffs.push((h - delta / 1.5).abs());
        }
    }
    let med = median(&diffs);
    let a = med <= 0.15;
    let bnd = max_delta <= 1.05;
    let c = max_h <= 2.0 / 3.0 + 0.15;
    report(
        "9",
        "Hoelder / delta cross-check, constant alpha = 1.5",
        a && bnd && c,
        format!(
            "median |h - delta/1.5| = {med:.3} <= 0.15 [{}], max delta = {max_delta:.3} <= 1.05 [{}], max h = {max_h:.3} <= 0.817 [{}]",
            ok(a),
            ok(bnd),
            ok(c)
        ),
        start,
        Duration::from_secs(300),
    );
}

#[test]
fn criterion_10_formalism_gap() {
    let start = Instant::now();
    let (c, d) = (1.2, 1.8);
    let grid: Vec<f64> = (0..200).map(|i| -0.2 + 2.4 * i as f64 / 199.0).collect();
    let fh = hausdorff_curve(c, d, 0.0, &grid).unwrap();
    let fg = large_deviation_curve(c, d, &grid).unwrap();
    let dominated = fh.values.iter().zip(&fg.values).all(|(h, g)| h <= g);
    let strict: Vec<bool> = grid
        .iter()
        .zip(fh.values.iter().zip(&fg.values))
        .filter(|(x, _)| **x > 1.0 / c && **x <= 1.0 + 1.0 / c)
        .map(|(_, (h, g))| h < g)
        .collect();
    let gap = !strict.is_empty() && strict.iter().all(|s| *s);
    let hull = concave_hull(&fg).unwrap();
    let concave = hull.values.iter().zip(&fg.values).all(|(h, g)| match (h, g) {
        (ExtReal::NegInf, ExtReal::NegInf) => true,
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs() <= 1e-12,
        _ => false,
    });
    report(
        "10",
        "formalism gap, c = 1.2, d = 1.8",
        dominated && gap && concave,
        format!(
            "f_H <= f_g on 200 points [{}], f_H < f_g at {} points of (1/c, 1 + 1/c] [{}], f_g equals its concave hull [{}]",
            ok(dominated),
            strict.len(),
            ok(gap),
            ok(concave)
        ),
        start,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_11_smooth_part() {
    let start = Instant::now();
    let alpha = AlphaFunction::affine(1.2, 0.6).unwrap();
    let pts = generate_points(0, 20_000).unwrap();
    let a = sample_path(&pts, &alpha, ProcessKind::A, 1 << 14).unwrap();
    let hs: Vec<f64> = (1..=20).map(|k| holder_estimate(&a, k as f64 / 21.0, 2..=14).unwrap()).collect();
    let min = hs.iter().cloned().fold(f64::INFINITY, f64::min);
    report(
        "11",
        "smooth part A = D - B, affine alpha",
        min >= 0.8,
        format!("20 interior points, min Hoelder estimate {min:.3} >= 0.8"),
        start,
        Duration::from_secs(120),
    );
}
