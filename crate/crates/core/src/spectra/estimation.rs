use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::theory::{check_grid, ExtReal, SpectrumCurve, SpectrumFamily, SpectrumKind, SpectrumSource};
use crate::alpha::AlphaFunction;
use crate::error::{Error, Result};
use crate::shotnoise::{PointSystem, SamplePath};
use crate::stats::least_squares;

/// Coarse exponents `e_{n,j} = log|X((j+1)/n) − X(j/n)| / (−log n)`.
///
/// Zero increments carry no exponent; they are flagged in `zero_mask` and
/// stored as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseExponentField {
    pub n: usize,
    pub exponents: Vec<f64>,
    pub zero_mask: Vec<bool>,
}

impl CoarseExponentField {
    pub fn masked_count(&self) -> usize {
        self.zero_mask.iter().filter(|m| **m).count()
    }

    fn finite(&self) -> impl Iterator<Item = f64> + '_ {
        self.exponents
            .iter()
            .zip(&self.zero_mask)
            .filter(|(_, m)| !**m)
            .map(|(e, _)| *e)
    }
}

/// Exponents of the increments of `path` at resolution `n`, which must
/// divide the path's resolution.
pub fn coarse_exponents(path: &SamplePath, n: usize) -> Result<CoarseExponentField> {
    if n < 2 || !path.resolution.is_multiple_of(n) {
        return Err(Error::domain(format!(
            "resolution {n} must be at least 2 and divide the path resolution {}",
            path.resolution
        )));
    }
    let step = path.resolution / n;
    let scale = -(n as f64).ln();
    let mut exponents = Vec::with_capacity(n);
    let mut zero_mask = Vec::with_capacity(n);
    for j in 0..n {
        let inc = path.values[(j + 1) * step] - path.values[j * step];
        if inc == 0.0 {
            exponents.push(f64::NAN);
            zero_mask.push(true);
        } else {
            exponents.push(inc.abs().ln() / scale);
            zero_mask.push(false);
        }
    }
    Ok(CoarseExponentField {
        n,
        exponents,
        zero_mask,
    })
}

/// `N_n^ε(β)`: unmasked `j` with `β − ε ≤ e_{n,j} ≤ β + ε`.
pub fn count_n(field: &CoarseExponentField, beta: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("eps must be positive, got {eps}")));
    }
    Ok(count_m(field, beta - eps, beta + eps))
}

/// `M_n(β₁, β₂)`: unmasked `j` with `β₁ ≤ e_{n,j} ≤ β₂`.
pub fn count_m(field: &CoarseExponentField, beta1: f64, beta2: f64) -> usize {
    field.finite().filter(|e| *e >= beta1 && *e <= beta2).count()
}

/// Tuning of [`estimate_fg`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgOptions {
    /// Two successive ε-estimates closer than this count as stabilised.
    pub stabilization: f64,
    /// Fewer resolutions than this mark every value unreliable.
    pub min_resolutions: usize,
}

impl Default for FgOptions {
    fn default() -> Self {
        FgOptions {
            stabilization: 0.05,
            min_resolutions: 4,
        }
    }
}

/// Estimate at one (β, ε): value and whether it rests on ≥ 2 resolutions.
fn fg_at(fields: &[CoarseExponentField], beta: f64, eps: f64) -> (ExtReal, bool) {
    let mut x = Vec::with_capacity(fields.len());
    let mut y = Vec::with_capacity(fields.len());
    for f in fields {
        let count = count_m(f, beta - eps, beta + eps);
        if count >= 1 {
            x.push((f.n as f64).ln());
            y.push((count as f64).ln());
        }
    }
    match x.len() {
        0 => (ExtReal::NegInf, true),
        1 => (ExtReal::Finite(y[0] / x[0]), false),
        2 => match least_squares(&x, &y) {
            Some(fit) => (ExtReal::Finite(fit.slope), true),
            None => (ExtReal::Finite(y[0] / x[0]), false),
        },
        m => {
            // liminf proxy: the smallest leave-one-out slope
            let mut lowest = f64::INFINITY;
            for skip in 0..m {
                let xs: Vec<f64> = (0..m).filter(|&i| i != skip).map(|i| x[i]).collect();
                let ys: Vec<f64> = (0..m).filter(|&i| i != skip).map(|i| y[i]).collect();
                if let Some(fit) = least_squares(&xs, &ys) {
                    lowest = lowest.min(fit.slope);
                }
            }
            (ExtReal::Finite(lowest), lowest.is_finite())
        }
    }
}

fn close(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    match (a, b) {
        (ExtReal::NegInf, ExtReal::NegInf) => true,
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs() < tol,
        _ => false,
    }
}

/// Large-deviation spectrum from coarse-exponent fields at several
/// resolutions.
///
/// For each β and ε the exponent is the least-squares slope of `log N`
/// against `log n` over resolutions with a nonzero count, taking the
/// minimum over leave-one-out fits. Along the decreasing `eps_schedule` the
/// reported value is the one at the smallest ε whose estimate is within
/// `stabilization` of the next larger ε. A β with no hit at any resolution
/// is `−∞`. Values are capped at 1 since `N ≤ n`.
pub fn estimate_fg(
    fields: &[CoarseExponentField],
    beta_grid: &[f64],
    eps_schedule: &[f64],
    options: FgOptions,
) -> Result<SpectrumCurve> {
    if fields.is_empty() {
        return Err(Error::InsufficientData("no resolutions given".into()));
    }
    let mut ns: Vec<usize> = fields.iter().map(|f| f.n).collect();
    ns.sort_unstable();
    if ns.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("resolutions must be distinct"));
    }
    if eps_schedule.is_empty()
        || eps_schedule.iter().any(|e| !(*e > 0.0))
        || eps_schedule.windows(2).any(|w| !(w[1] < w[0]))
    {
        return Err(Error::domain("eps schedule must be positive and strictly decreasing"));
    }
    check_grid(beta_grid)?;
    let enough_resolutions = fields.len() >= options.min_resolutions;
    let mut values = Vec::with_capacity(beta_grid.len());
    let mut reliable = Vec::with_capacity(beta_grid.len());
    for &beta in beta_grid {
        let per_eps: Vec<(ExtReal, bool)> = eps_schedule.iter().map(|&e| fg_at(fields, beta, e)).collect();
        let chosen = if per_eps.len() == 1 {
            Some(0)
        } else {
            (1..per_eps.len())
                .rev()
                .find(|&i| close(per_eps[i].0, per_eps[i - 1].0, options.stabilization))
        };
        let (value, ok) = match chosen {
            Some(i) => per_eps[i],
            None => (per_eps[per_eps.len() - 1].0, false),
        };
        let value = match value {
            ExtReal::Finite(v) => ExtReal::Finite(v.min(1.0)),
            other => other,
        };
        values.push(value);
        reliable.push(ok && enough_resolutions);
    }
    let mut curve = SpectrumCurve::new(
        SpectrumKind::new(SpectrumFamily::LargeDeviation, SpectrumSource::Empirical),
        beta_grid.to_vec(),
        values,
    )?;
    curve.reliable = reliable;
    curve.meta = vec![
        ("resolutions".into(), format!("{ns:?}")),
        ("eps_schedule".into(), format!("{eps_schedule:?}")),
        ("stabilization".into(), format!("{:?}", options.stabilization)),
    ];
    Ok(curve)
}

/// Partition-function exponents `τ(q)`: `Σ_j |ΔX|^q ≈ n^{−τ(q)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauCurve {
    pub q: Vec<f64>,
    pub tau: Vec<f64>,
    pub reliable: Vec<bool>,
}

/// `τ(q)` from the regression of `log Σ_j |ΔX_{n,j}|^q` on `log n`.
///
/// `q_grid` must cover `[−2, 5]`. A q with fewer than two usable
/// resolutions gets `NaN` and is flagged.
pub fn partition_tau(fields: &[CoarseExponentField], q_grid: &[f64]) -> Result<TauCurve> {
    check_grid(q_grid)?;
    if q_grid.is_empty() || q_grid[0] > -2.0 || q_grid[q_grid.len() - 1] < 5.0 {
        return Err(Error::domain("q grid must span at least [-2, 5]"));
    }
    let mut tau = Vec::with_capacity(q_grid.len());
    let mut reliable = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for f in fields {
            let log_n = (f.n as f64).ln();
            // |Δ|^q = n^{−q e}; summed in log space
            let logs: Vec<f64> = f.finite().map(|e| -q * e * log_n).collect();
            if logs.is_empty() {
                continue;
            }
            let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
            x.push(log_n);
            y.push(top + sum.ln());
        }
        match least_squares(&x, &y) {
            Some(fit) => {
                tau.push(-fit.slope);
                reliable.push(true);
            }
            None => {
                tau.push(f64::NAN);
                reliable.push(false);
            }
        }
    }
    Ok(TauCurve {
        q: q_grid.to_vec(),
        tau,
        reliable,
    })
}

/// `f_l(β) = min_q (qβ − τ(q))` over the reliable part of `tau`.
pub fn legendre_empirical(tau: &TauCurve, beta_grid: &[f64]) -> Result<SpectrumCurve> {
    check_grid(beta_grid)?;
    let usable: Vec<(f64, f64)> = tau
        .q
        .iter()
        .zip(&tau.tau)
        .zip(&tau.reliable)
        .filter(|(_, ok)| **ok)
        .map(|((q, t), _)| (*q, *t))
        .collect();
    if usable.is_empty() {
        return Err(Error::Degenerate("no reliable tau(q) values".into()));
    }
    let values = beta_grid
        .iter()
        .map(|&b| {
            ExtReal::Finite(
                usable
                    .iter()
                    .map(|(q, t)| q * b - t)
                    .fold(f64::INFINITY, f64::min),
            )
        })
        .collect();
    let mut curve = SpectrumCurve::new(
        SpectrumKind::new(SpectrumFamily::Legendre, SpectrumSource::Empirical),
        beta_grid.to_vec(),
        values,
    )?;
    curve.meta = vec![("q_range".into(), format!("[{:?}, {:?}]", tau.q[0], tau.q[tau.q.len() - 1]))];
    Ok(curve)
}

/// Pointwise Hölder exponent from oscillations.
///
/// For each dyadic radius `r = 2^{−k}`, `k ∈ levels`, takes the oscillation
/// (max − min) of the path over grid points in `[t − r, t + r]`, and returns
/// the slope of `log osc` against `log r`, clipped to `[0, 1.5]`. Radii with
/// zero oscillation are skipped.
pub fn holder_estimate(path: &SamplePath, t: f64, levels: RangeInclusive<u32>) -> Result<f64> {
    let n = path.resolution;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::domain(format!("t must be interior, got {t}")));
    }
    let (k_min, k_max) = (*levels.start(), *levels.end());
    if k_min >= k_max || k_max >= 63 || (1usize << k_max) > n {
        return Err(Error::domain(format!(
            "levels {k_min}..={k_max} must be increasing with 2^k_max <= resolution {n}"
        )));
    }
    let nf = n as f64;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for k in levels {
        let r = (-(k as f64)).exp2();
        let lo = ((t - r) * nf).ceil().max(0.0) as usize;
        let hi = (((t + r) * nf).floor() as usize).min(n);
        let window = &path.values[lo..=hi];
        let max = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = window.iter().cloned().fold(f64::INFINITY, f64::min);
        let osc = max - min;
        if osc > 0.0 {
            x.push(r.ln());
            y.push(osc.ln());
        }
    }
    match least_squares(&x, &y) {
        Some(fit) => Ok(fit.slope.clamp(0.0, 1.5)),
        None => Err(Error::Degenerate(format!(
            "oscillations vanish at t={t} on all but {} radii",
            x.len()
        ))),
    }
}

/// Approximation-rate estimate at `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub t: f64,
    pub delta_hat: f64,
    /// 0-based half-open index range `[start, end)` of points examined.
    pub window: (usize, usize),
    /// `λ_i = 1/(1 + Γ_i)` of the points with `|t − V_i| ≤ λ_i`.
    pub lambdas: Vec<f64>,
}

/// `δ̂(t) = 1/ρ`, `ρ = max(1, max_i log|t − V_i| / log λ_i)` over the points
/// of the tail window `i ∈ [N/4, N]` with `|t − V_i| ≤ λ_i = 1/(1 + Γ_i)`;
/// 1 when no point qualifies.
pub fn delta_estimate(points: &PointSystem, t: f64) -> Result<DeltaEstimate> {
    let n = points.len();
    if n < 100 {
        return Err(Error::InsufficientData(format!(
            "delta estimate needs at least 100 points, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("t must lie in [0, 1], got {t}")));
    }
    let start = n / 4;
    let mut rho: f64 = 1.0;
    let mut lambdas = Vec::new();
    for i in start..n {
        let dist = (t - points.locations()[i]).abs();
        if dist == 0.0 {
            return Err(Error::domain(format!("t = {t} coincides with a jump location")));
        }
        let lambda = 1.0 / (1.0 + points.gamma()[i]);
        if dist <= lambda {
            lambdas.push(lambda);
            rho = rho.max(dist.ln() / lambda.ln());
        }
    }
    Ok(DeltaEstimate {
        t,
        delta_hat: 1.0 / rho,
        window: (start, n),
        lambdas,
    })
}

/// `δ̂(t) / α(t)`.
pub fn predicted_holder(alpha: &AlphaFunction, estimate: &DeltaEstimate) -> Result<f64> {
    Ok(estimate.delta_hat / alpha.evaluate(estimate.t)?)
}
