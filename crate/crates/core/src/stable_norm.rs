//! The stable normalisation constant `C_u` and the bump-function objects
//! `φ`, `φ̂` and `F(β) = −∫₀^∞ η^β cos(η) φ̂(η) dη`.

use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

/// `C_u = (∫₀^∞ x^{−u} sin x dx)^{−1}` for `1 < u < 2`.
///
/// Uses the Mellin identity `∫₀^∞ x^{s−1} sin x dx = Γ(s) sin(πs/2)` with
/// `s = 1 − u`, rewritten as `Γ(2−u) cos(πu/2) / (1−u)` to keep the Gamma
/// argument positive.
pub fn stable_norm_constant(u: f64) -> Result<f64> {
    if !(u > 1.0 && u < 2.0) {
        return Err(Error::domain(format!("C_u needs 1 < u < 2, got {u}")));
    }
    Ok(stable_norm_unchecked(u))
}

#[inline]
pub(crate) fn stable_norm_unchecked(u: f64) -> f64 {
    (1.0 - u) / (gamma(2.0 - u) * (PI * u / 2.0).cos())
}

/// `C_u^{1/u}`, the coefficient multiplying `Γ_i^{−1/u}` in the series.
#[inline]
pub(crate) fn stable_scale(u: f64) -> f64 {
    stable_norm_unchecked(u).powf(1.0 / u)
}

/// The canonical bump `φ(x) = exp(1 − 1/(1 − x²))` on `(−1, 1)`, zero
/// elsewhere. Even, smooth, `φ(0) = 1`, flat at `±1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BumpFunction;

impl BumpFunction {
    pub const SUPPORT_RADIUS: f64 = 1.0;

    pub fn value(&self, x: f64) -> f64 {
        bump(x)
    }

    pub fn fourier(&self, xi: f64) -> Result<f64> {
        bump_fourier(xi)
    }
}

pub fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// `φ(x)` and its first four derivatives.
///
/// Written as `φ = e^g` with `g = 1 − u`, `u = 1/(1−x²) = ½(1/(1−x) + 1/(1+x))`
/// so that `u^{(k)} = ½ k! ((1−x)^{−k−1} + (−1)^k (1+x)^{−k−1})`, and the
/// derivatives follow from Faà di Bruno.
pub fn bump_derivatives(x: f64) -> [f64; 5] {
    let phi = bump(x);
    if phi == 0.0 {
        return [0.0; 5];
    }
    let a = 1.0 / (1.0 - x);
    let b = 1.0 / (1.0 + x);
    let uk = |k: i32, fact: f64| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        0.5 * fact * (a.powi(k + 1) + sign * b.powi(k + 1))
    };
    let g1 = -uk(1, 1.0);
    let g2 = -uk(2, 2.0);
    let g3 = -uk(3, 6.0);
    let g4 = -uk(4, 24.0);
    [
        phi,
        phi * g1,
        phi * (g2 + g1 * g1),
        phi * (g3 + 3.0 * g2 * g1 + g1.powi(3)),
        phi * (g4 + 4.0 * g3 * g1 + 3.0 * g2 * g2 + 6.0 * g2 * g1 * g1 + g1.powi(4)),
    ]
}

const PANEL_ORDER: usize = 24;
const MAX_PANELS: usize = 1 << 14;

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_on(PANEL_ORDER, 0.0, 1.0))
}

/// Composite Gauss–Legendre over `[0, 1]` with `panels` equal panels;
/// returns the integral of `f` and of `|f|`.
fn composite_01<F: Fn(f64) -> f64>(f: &F, panels: usize) -> (f64, f64) {
    let (x, w) = panel_rule();
    let h = 1.0 / panels as f64;
    let mut total = 0.0;
    let mut total_abs = 0.0;
    for p in 0..panels {
        let left = p as f64 * h;
        let mut acc = 0.0;
        let mut acc_abs = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            let v = wi * f(left + h * xi);
            acc += v;
            acc_abs += v.abs();
        }
        total += acc * h;
        total_abs += acc_abs * h;
    }
    (total, total_abs)
}

/// `φ̂(ξ) = ∫_{−1}^{1} φ(x) cos(ξx) dx`.
///
/// For `|ξ| ≥ 16` the integral is taken after four integrations by parts,
/// `φ̂(ξ) = ξ^{−4} ∫ φ⁽⁴⁾(x) cos(ξx) dx` (boundary terms vanish because φ is
/// flat at ±1); this keeps the absolute accuracy far below `|ξ|^{−β}` for
/// large `ξ`. Panels are doubled until two successive composite rules agree.
const DERIVATIVE_FORM_FROM: f64 = 16.0;

pub fn bump_fourier(xi: f64) -> Result<f64> {
    if !xi.is_finite() {
        return Err(Error::domain(format!("xi must be finite, got {xi}")));
    }
    let xi = xi.abs();
    let direct = xi < DERIVATIVE_FORM_FROM;
    let integrand = |x: f64| {
        let d = bump_derivatives(x);
        let base = if direct { d[0] } else { d[4] };
        base * (xi * x).cos()
    };
    let mut panels = 16usize.max((xi / 8.0).ceil() as usize).next_power_of_two();
    let (mut prev, abs_integral) = composite_01(&integrand, panels);
    // rounding floor of the composite sum
    let floor = 64.0 * f64::EPSILON * abs_integral;
    let mut evaluations = panels * PANEL_ORDER;
    loop {
        panels *= 2;
        let (next, _) = composite_01(&integrand, panels);
        evaluations += panels * PANEL_ORDER;
        let diff = (next - prev).abs();
        if diff <= (1e-13 * next.abs()).max(floor) {
            let half_line = 2.0 * next;
            return Ok(if direct { half_line } else { half_line / xi.powi(4) });
        }
        if panels >= MAX_PANELS {
            return Err(Error::Numeric {
                what: format!("bump Fourier transform at xi = {xi} did not converge"),
                estimate: 2.0 * next,
                error: diff,
                evaluations,
            });
        }
        prev = next;
    }
}

/// Gauss–Legendre order on the first half-period, in the variable `s`
/// with `η = π s⁴`.
const FIRST_BLOCK_ORDER: usize = 64;
const BLOCK_ORDER: usize = 32;
const INITIAL_BLOCKS: usize = 64;
const MAX_BLOCKS: usize = 1 << 14;
/// Stop doubling once the last half-period block is this small.
pub const SCHELLING_BLOCK_TOL: f64 = 1e-12;

/// Quadrature nodes (η), weights and cached `φ̂(η)` for one half-period.
struct Block {
    eta: Vec<f64>,
    weight: Vec<f64>,
    phi_hat: Vec<f64>,
}

fn build_block(k: usize) -> Result<Block> {
    let (eta, weight) = if k == 0 {
        // η = π s⁴ absorbs the η^β endpoint behaviour
        let (s, w) = gauss_legendre_on(FIRST_BLOCK_ORDER, 0.0, 1.0);
        let eta: Vec<f64> = s.iter().map(|s| PI * s.powi(4)).collect();
        let weight: Vec<f64> = s
            .iter()
            .zip(&w)
            .map(|(s, w)| w * 4.0 * PI * s.powi(3))
            .collect();
        (eta, weight)
    } else {
        gauss_legendre_on(BLOCK_ORDER, k as f64 * PI, (k + 1) as f64 * PI)
    };
    let phi_hat = eta.iter().map(|&e| bump_fourier(e)).collect::<Result<Vec<_>>>()?;
    Ok(Block {
        eta,
        weight,
        phi_hat,
    })
}

fn block_cache() -> &'static Mutex<Vec<Block>> {
    static CACHE: OnceLock<Mutex<Vec<Block>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

/// Half-period contributions `∫_{kπ}^{(k+1)π} η^β cos(η) φ̂(η) dη` for `k < count`.
fn block_integrals(beta: f64, count: usize) -> Result<Vec<f64>> {
    let mut cache = block_cache().lock().unwrap_or_else(|e| e.into_inner());
    while cache.len() < count {
        let k = cache.len();
        cache.push(build_block(k)?);
    }
    Ok(cache[..count]
        .iter()
        .map(|b| {
            b.eta
                .iter()
                .zip(&b.weight)
                .zip(&b.phi_hat)
                .map(|((e, w), p)| w * e.powf(beta) * e.cos() * p)
                .sum()
        })
        .collect())
}

/// `F(β) = −∫₀^∞ η^β cos(η) φ̂(η) dη`.
///
/// Summed over half-periods `[kπ, (k+1)π]`; the truncation point is doubled
/// (starting from 64 half-periods) until the last block contributes less
/// than [`SCHELLING_BLOCK_TOL`]. `φ̂` decays faster than any power, so the
/// remaining tail is far below that.
pub fn schelling_f(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain(format!("F(beta) needs beta > 0, got {beta}")));
    }
    let mut count = INITIAL_BLOCKS;
    loop {
        let blocks = block_integrals(beta, count)?;
        let last = *blocks.last().expect("at least one block");
        if last.abs() < SCHELLING_BLOCK_TOL {
            return Ok(-blocks.iter().sum::<f64>());
        }
        if count >= MAX_BLOCKS {
            return Err(Error::Numeric {
                what: format!("F({beta}) tail did not fall below {SCHELLING_BLOCK_TOL:e}"),
                estimate: -blocks.iter().sum::<f64>(),
                error: last.abs(),
                evaluations: count,
            });
        }
        count *= 2;
    }
}
