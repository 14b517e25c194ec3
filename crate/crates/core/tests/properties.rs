mod common;

use proptest::prelude::*;

use multistable::rng::Stream;
use multistable::shotnoise::generate_points;
use multistable::spectra::{
    chernoff_h, chernoff_sup, concave_hull, delta_estimate, hausdorff_spectrum, large_deviation_curve,
    large_deviation_spectrum_theoretical, ChernoffParams, Side,
};
use multistable::validation::{empirical_char_fn, increment_prob, tangent_check, MCConfig};
use multistable::{AlphaFunction, ProcessKind};

fn range() -> impl Strategy<Value = (f64, f64)> {
    (1.01f64..1.98, 0.0f64..0.5).prop_map(|(c, w)| (c, (c + w).min(1.99)))
}

proptest! {
    #[test]
    fn hausdorff_below_large_deviation((c, d) in range(), m in 0.0f64..1.0, h in -0.5f64..2.5) {
        let m = m.min(1.0 / c);
        let fh = hausdorff_spectrum(c, d, m, h).unwrap();
        let fg = large_deviation_spectrum_theoretical(c, d, h).unwrap();
        prop_assert!(fh <= fg);
    }

    #[test]
    fn large_deviation_is_concave((c, d) in range()) {
        let grid: Vec<f64> = (0..120).map(|i| -0.1 + 2.2 * i as f64 / 119.0).collect();
        let fg = large_deviation_curve(c, d, &grid).unwrap();
        let hull = concave_hull(&fg).unwrap();
        for (a, b) in hull.values.iter().zip(&fg.values) {
            prop_assert!((a.to_f64() - b.to_f64()).abs() <= 1e-12 || a == b);
        }
    }

    #[test]
    fn chernoff_sup_dominates(lambda in 0.01f64..0.99, p in 0.01f64..0.99, t in 0.0f64..30.0) {
        prop_assume!((lambda - p).abs() > 1e-6);
        let params = ChernoffParams::new(lambda, p).unwrap();
        let (side, t) = if p < lambda { (Side::PositiveT, t) } else { (Side::NegativeT, -t) };
        let sup = chernoff_sup(params, side).unwrap();
        prop_assert!(sup.value >= 0.0);
        prop_assert!(sup.value >= chernoff_h(params, t) - 1e-12);
        prop_assert!((sup.value - chernoff_h(params, sup.t0)).abs() <= 1e-12 * (1.0 + sup.value));
    }

    #[test]
    fn points_are_prefix_stable(seed in any::<u64>(), short in 1usize..200, extra in 0usize..200) {
        let a = generate_points(seed, short).unwrap();
        let b = generate_points(seed, short + extra).unwrap();
        prop_assert_eq!(a, b.prefix(short).unwrap());
    }
}

#[test]
fn char_fn_modulus_and_thread_independence() {
    let alpha = AlphaFunction::sinusoidal(1.5, 0.3, 1.0, 0.0).unwrap();
    let cfg = MCConfig::new(300, 21, 2000).unwrap();
    let thetas = [-3.0, -0.4, 0.0, 0.7, 5.0];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| empirical_char_fn(&alpha, 0.1, 0.9, &thetas, &cfg).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one, three);
    for e in &one.entries {
        assert!(e.empirical.norm() <= 1.0 + 1e-15);
        assert!(e.theoretical > 0.0 && e.theoretical <= 1.0);
    }
}

#[test]
fn char_fn_standard_error_scales_like_clt() {
    let alpha = AlphaFunction::constant(1.5).unwrap();
    let errors: Vec<f64> = [1_000, 10_000, 100_000]
        .iter()
        .map(|&m| {
            let cfg = MCConfig::new(m, 3, 1000).unwrap();
            let rep = empirical_char_fn(&alpha, 0.0, 1.0, &[1.0], &cfg).unwrap();
            rep.entries[0].std_error * (m as f64).sqrt()
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.5..=2.0).contains(&ratio), "{errors:?}");
    }
}

#[test]
fn increment_prob_shrinks_with_band() {
    let alpha = AlphaFunction::affine(1.2, 0.6).unwrap();
    let cfg = MCConfig::new(400, 2, 5000).unwrap();
    for process in [ProcessKind::Y, ProcessKind::B] {
        let mut last = f64::INFINITY;
        for eps in [1.0, 0.5, 0.25, 0.1, 0.05, 0.01] {
            let p = increment_prob(&alpha, 0.8, eps, 512, 300, &cfg, process).unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert!(p <= last);
            last = p;
        }
    }
}

#[test]
fn tangent_distances_shrink() {
    let alpha = AlphaFunction::affine(1.2, 0.6).unwrap();
    let cfg = MCConfig::new(4000, 6, 20_000).unwrap();
    let r_list: Vec<f64> = (3..=8).map(|k| (-(k as f64)).exp2()).collect();
    let pts = tangent_check(&alpha, 0.5, &r_list, 2.0, &cfg).unwrap();
    let exact_gap: Vec<f64> = pts.iter().map(|p| (p.exact - p.limit).abs()).collect();
    for w in exact_gap.windows(2) {
        assert!(w[1] < w[0], "{exact_gap:?}");
    }
    for p in &pts {
        assert!((p.empirical - p.exact).norm() <= 3.0 / (cfg.replicas as f64).sqrt() + 0.01, "{p:?}");
    }
    let zero = tangent_check(&alpha, 0.5, &r_list, 0.0, &cfg).unwrap();
    assert!(zero.iter().all(|p| p.distance == 0.0));
}

#[test]
fn delta_hat_over_uniform_points() {
    let pts = generate_points(0, 100_000).unwrap();
    let pick = Stream::new(7, 0);
    let deltas: Vec<f64> = (0..100)
        .map(|i| delta_estimate(&pts, pick.open01_at(i)).unwrap().delta_hat)
        .collect();
    let max = deltas.iter().cloned().fold(0.0, f64::max);
    let med = common::median(&deltas);
    assert!(max <= 1.05, "{max}");
    assert!((med - 1.0).abs() <= 0.05, "median {med}");
}
