//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

/// Composite Simpson rule with `panels` (even) sub-intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels.is_multiple_of(2));
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Repeated pairwise averaging of partial sums of an alternating series.
fn euler_average(mut partial: Vec<f64>, rounds: usize) -> f64 {
    for _ in 0..rounds {
        partial = partial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    *partial.last().unwrap()
}

/// `C_u = 1 / ∫₀^∞ x^{−u} sin x dx`, summed over half-periods.
pub fn stable_norm_oracle(u: f64) -> f64 {
    // ∫₀^π x^{−u} x dx in closed form; the remainder x^{−u}(sin x − x) is
    // O(x^{3−u}) and smoothed further by x = π s²
    let sin_minus_x = |x: f64| {
        if x < 1e-2 {
            let x2 = x * x;
            -x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
        } else {
            x.sin() - x
        }
    };
    let remainder = simpson(
        |s| {
            if s == 0.0 {
                return 0.0;
            }
            let x = PI * s * s;
            x.powf(-u) * sin_minus_x(x) * 2.0 * PI * s
        },
        0.0,
        1.0,
        4000,
    );
    let first = remainder + PI.powf(2.0 - u) / (2.0 - u);
    let mut partial = vec![first];
    for k in 1..80 {
        let a = k as f64 * PI;
        let block = simpson(|x| x.powf(-u) * x.sin(), a, a + PI, 400);
        partial.push(partial.last().unwrap() + block);
    }
    1.0 / euler_average(partial, 40)
}

pub fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// `F(β) = Γ(1+β) sin(πβ/2) ∫₋₁¹ φ(x)(1−x)^{−1−β} dx`.
///
/// Follows from `φ̂(η) = ∫φ(x)cos(ηx)dx` and the Abel-summed
/// `∫₀^∞ η^β cos(aη) dη = −Γ(1+β) sin(πβ/2) a^{−1−β}`. The integrand is
/// flat at both ends, so the trapezoid rule converges spectrally.
pub fn schelling_oracle(beta: f64) -> f64 {
    let m = 20_000;
    let h = 2.0 / m as f64;
    let integral: f64 = (1..m)
        .map(|i| {
            let x = -1.0 + i as f64 * h;
            bump(x) * (1.0 - x).powf(-1.0 - beta)
        })
        .sum::<f64>()
        * h;
    gamma(1.0 + beta) * (PI * beta / 2.0).sin() * integral
}

/// Maximum of `H(t) = λt − log(1 − p + p e^t)` over a uniform grid.
pub struct ChernoffGrid {
    t: Vec<f64>,
    exp_t: Vec<f64>,
}

impl ChernoffGrid {
    /// `points` nodes on `[0, span]` (or `[−span, 0]` when `negative`).
    pub fn new(span: f64, points: usize, negative: bool) -> Self {
        let dir = if negative { -1.0 } else { 1.0 };
        let t: Vec<f64> = (0..points).map(|i| dir * span * i as f64 / (points - 1) as f64).collect();
        let exp_t = t.iter().map(|t| t.exp()).collect();
        ChernoffGrid { t, exp_t }
    }

    pub fn max_h(&self, lambda: f64, p: f64) -> f64 {
        self.t
            .iter()
            .zip(&self.exp_t)
            .map(|(t, e)| lambda * t - (1.0 - p + p * e).ln())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Bernoulli relative entropy, evaluated plainly.
pub fn kl(lambda: f64, p: f64) -> f64 {
    lambda * (lambda / p).ln() + (1.0 - lambda) * ((1.0 - lambda) / (1.0 - p)).ln()
}

/// `exp(−∫_s^t |θ|^{α(x)} dx)` for `α(x) = a + b x`, in closed form.
pub fn affine_char_fn(a: f64, b: f64, s: f64, t: f64, theta: f64) -> f64 {
    let l = theta.abs().ln();
    let antiderivative = |x: f64| (l * (a + b * x)).exp() / (b * l);
    (-(antiderivative(t) - antiderivative(s))).exp()
}

/// Least-squares slope.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = s.len();
    if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}
