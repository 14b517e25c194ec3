//! Monte-Carlo checks of characteristic functions, increment-probability
//! scalings and localisability.
//!
//! All checks look at increments over a strip `(a, b]` of time. The
//! restriction of the Poisson point measure `{(Γ_i, V_i)}` to levels
//! `Γ ≤ T` and locations in `(a, b]` is a Poisson process with
//! `Poisson(T (b − a))` points whose levels are i.i.d. uniform on `(0, T]`
//! and locations i.i.d. uniform on `(a, b]`. Summing over that set gives the
//! series truncated at level `T` in law, without walking the points outside
//! the strip or sorting the levels.

use num_complex::Complex64;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha::AlphaFunction;
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::rng::{replica_seed, CounterRng, Stream, STREAM_ARRIVALS, STREAM_LOCATIONS};
use crate::shotnoise::ProcessKind;
use crate::stable_norm::stable_scale;
use crate::stats::least_squares;

const STREAM_COUNT: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    /// Number of independent replicas `M`.
    pub replicas: usize,
    pub seed_base: u64,
    /// Truncation `N`, used as the level cut `Γ ≤ N`.
    pub truncation: usize,
    /// Multiplier `k` of the `k/√M` Monte-Carlo allowance.
    pub clt_multiplier: f64,
    /// Fixed allowance added to every tolerance.
    pub abs_tolerance: f64,
}

impl MCConfig {
    pub fn new(replicas: usize, seed_base: u64, truncation: usize) -> Result<Self> {
        let cfg = MCConfig {
            replicas,
            seed_base,
            truncation,
            ..MCConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 100 {
            return Err(Error::domain(format!("need at least 100 replicas, got {}", self.replicas)));
        }
        if self.truncation < 1 {
            return Err(Error::domain("truncation must be positive"));
        }
        if !(self.clt_multiplier >= 0.0 && self.abs_tolerance >= 0.0) {
            return Err(Error::domain("tolerances must be non-negative"));
        }
        Ok(())
    }

    fn level(&self) -> f64 {
        self.truncation as f64
    }
}

impl Default for MCConfig {
    fn default() -> Self {
        MCConfig {
            replicas: 10_000,
            seed_base: 0,
            truncation: 1_000_000,
            clt_multiplier: 3.0,
            abs_tolerance: 0.0,
        }
    }
}

/// `u^p` for `u ∈ (0, 1)` and a fixed `p`: the binary exponent goes through a
/// lookup table and the mantissa through a degree-5 Taylor expansion around
/// the centre of one of 256 sub-intervals of `[1, 2)`. Relative error stays
/// at a few ulps, at a fraction of the cost of `powf`.
struct PowerTable {
    p: f64,
    by_exponent: Vec<f64>,
    centres: Vec<f64>,
    coeffs: Vec<[f64; 6]>,
}

impl PowerTable {
    const BITS: u32 = 8;

    fn new(p: f64) -> Self {
        let by_exponent = (0..2047)
            .map(|e| ((e as f64) - 1023.0) * p)
            .map(f64::exp2)
            .collect();
        let cells = 1usize << Self::BITS;
        let mut centres = Vec::with_capacity(cells);
        let mut coeffs = Vec::with_capacity(cells);
        for k in 0..cells {
            let c = 1.0 + (k as f64 + 0.5) / cells as f64;
            let mut a = [0.0; 6];
            a[0] = c.powf(p);
            for j in 1..6 {
                a[j] = a[j - 1] * (p - (j - 1) as f64) / (j as f64 * c);
            }
            centres.push(c);
            coeffs.push(a);
        }
        PowerTable {
            p,
            by_exponent,
            centres,
            coeffs,
        }
    }

    #[inline]
    fn eval(&self, u: f64) -> f64 {
        let bits = u.to_bits();
        let e = ((bits >> 52) & 0x7ff) as usize;
        if e == 0 || e == 0x7ff {
            return u.powf(self.p);
        }
        let k = ((bits >> (52 - Self::BITS)) & ((1 << Self::BITS) - 1)) as usize;
        let m = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | 0x3ff0_0000_0000_0000);
        let x = m - self.centres[k];
        let a = &self.coeffs[k];
        let poly = a[0] + x * (a[1] + x * (a[2] + x * (a[3] + x * (a[4] + x * a[5]))));
        self.by_exponent[e] * poly
    }
}

#[inline]
fn signed(x: f64, sign: u64) -> f64 {
    f64::from_bits(x.to_bits() ^ sign)
}

/// One replica's view of the strip `(a, b]`.
struct Strip {
    count: u64,
    levels: Stream,
    locations: Stream,
    a: f64,
    width: f64,
}

impl Strip {
    fn new(seed: u64, a: f64, b: f64, level: f64) -> Result<Self> {
        let width = b - a;
        let mean = level * width;
        let count = if mean > 0.0 {
            let poisson = Poisson::new(mean)
                .map_err(|e| Error::domain(format!("Poisson mean {mean}: {e}")))?;
            poisson.sample(&mut CounterRng::new(Stream::new(seed, STREAM_COUNT))) as u64
        } else {
            0
        };
        Ok(Strip {
            count,
            levels: Stream::new(seed, STREAM_ARRIVALS),
            locations: Stream::new(seed, STREAM_LOCATIONS),
            a,
            width,
        })
    }

    /// Level as a fraction of the cut (uniform on (0, 1)) and the sign as a
    /// sign-bit mask; the sign comes from the lowest bit, which the uniform
    /// does not use.
    #[inline]
    fn level_and_sign(&self, k: u64) -> (f64, u64) {
        let x = self.levels.u64_at(k);
        let u = ((x >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64);
        (u, x << 63)
    }

    #[inline]
    fn location(&self, k: u64) -> f64 {
        self.a + self.width * self.locations.location_at(k)
    }
}

/// `B` increments over the nested strips `(a, a + r]` for each `r` in
/// `widths` (largest first), at level cut `T`; also returns the increment
/// over the largest strip from levels `≤ T/2`.
fn b_increments(alpha: &AlphaFunction, seed: u64, a: f64, widths: &[f64], level: f64) -> Result<(Vec<f64>, f64)> {
    let strip = Strip::new(seed, a, a + widths[0], level)?;
    let mut sums = vec![0.0; widths.len()];
    let mut half = 0.0;
    if alpha.is_constant() {
        let al = alpha.value_unchecked(a);
        let table = PowerTable::new(-1.0 / al);
        let nested = widths.len() > 1;
        for k in 0..strip.count {
            let (u, sign) = strip.level_and_sign(k);
            let term = signed(table.eval(u), sign);
            half += term * f64::from(u8::from(u <= 0.5));
            if nested {
                let v = strip.location(k);
                for (s, w) in sums.iter_mut().zip(widths) {
                    if v <= a + w {
                        *s += term;
                    }
                }
            } else {
                sums[0] += term;
            }
        }
        let factor = stable_scale(al) * level.powf(-1.0 / al);
        for s in sums.iter_mut() {
            *s *= factor;
        }
        half *= factor;
    } else {
        for k in 0..strip.count {
            let (u, sign) = strip.level_and_sign(k);
            let v = strip.location(k);
            let al = alpha.value_unchecked(v);
            let term = signed(stable_scale(al) * (u * level).powf(-1.0 / al), sign);
            if u <= 0.5 {
                half += term;
            }
            for (s, w) in sums.iter_mut().zip(widths) {
                if v <= a + w {
                    *s += term;
                }
            }
        }
    }
    Ok((sums, half))
}

/// `exp(−∫_s^t |θ|^{α(x)} dx)`.
pub fn theoretical_char_fn(alpha: &AlphaFunction, s: f64, t: f64, theta: f64) -> Result<f64> {
    if theta == 0.0 {
        return Ok(1.0);
    }
    let at = theta.abs();
    let integral = integrate(|x| at.powf(alpha.value_unchecked(x)), s, t, 1e-13, 1e-10, 2000)?;
    Ok((-integral.value).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharFnEntry {
    pub theta: f64,
    pub empirical: Complex64,
    pub theoretical: f64,
    pub distance: f64,
    /// Replicate standard error of the empirical mean.
    pub std_error: f64,
    /// Measured truncation allowance.
    pub truncation_slack: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharFnReport {
    pub s: f64,
    pub t: f64,
    pub config: MCConfig,
    pub entries: Vec<CharFnEntry>,
}

impl CharFnReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Mean of `e^{iθX}` and its standard error.
fn char_mean(samples: &[f64], theta: f64) -> (Complex64, f64) {
    let m = samples.len() as f64;
    let (mut c, mut s, mut c2, mut s2) = (0.0, 0.0, 0.0, 0.0);
    for &x in samples {
        let (sn, cs) = (theta * x).sin_cos();
        c += cs;
        s += sn;
        c2 += cs * cs;
        s2 += sn * sn;
    }
    let (mc, ms) = (c / m, s / m);
    let var = (c2 / m - mc * mc).max(0.0) + (s2 / m - ms * ms).max(0.0);
    (Complex64::new(mc, ms), (var / m).sqrt())
}

/// Truncation error of a characteristic-function estimate at level `T`,
/// bounded from the difference with the level-`T/2` estimate.
///
/// The omitted small jumps act like a Gaussian of variance `∝ T^{1−2/α}`, so
/// the bias decays like `T^{−(2/d − 1)}`; the difference between the two
/// cuts then bounds the bias at `T/2` by `|ĉ_T − ĉ_{T/2}| · (1 + 1/(2^{2/d−1} − 1))`.
fn truncation_slack(full: Complex64, half: Complex64, d: f64) -> f64 {
    let rate = 2f64.powf(2.0 / d - 1.0) - 1.0;
    (full - half).norm() * (1.0 + 1.0 / rate)
}

/// Empirical characteristic function of `B(t) − B(s)` at each `θ`, against
/// `exp(−∫_s^t |θ|^{α(x)} dx)`. An entry passes when the distance is at most
/// `k/√M + slack + abs_tolerance`.
pub fn empirical_char_fn(
    alpha: &AlphaFunction,
    s: f64,
    t: f64,
    thetas: &[f64],
    cfg: &MCConfig,
) -> Result<CharFnReport> {
    cfg.validate()?;
    if !(0.0 <= s && s < t && t <= 1.0) {
        return Err(Error::domain(format!("need 0 <= s < t <= 1, got s={s}, t={t}")));
    }
    if thetas.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("theta values must be finite"));
    }
    let level = cfg.level();
    let draws: Vec<(f64, f64)> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            b_increments(alpha, replica_seed(cfg.seed_base, r), s, &[t - s], level).map(|(v, h)| (v[0], h))
        })
        .collect::<Result<Vec<_>>>()?;
    let full: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let half: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let (_, d) = alpha.bounds();
    let mc_allowance = cfg.clt_multiplier / (cfg.replicas as f64).sqrt();
    let entries = thetas
        .iter()
        .map(|&theta| {
            let (empirical, std_error) = char_mean(&full, theta);
            let (at_half, _) = char_mean(&half, theta);
            let theoretical = theoretical_char_fn(alpha, s, t, theta)?;
            let distance = (empirical - theoretical).norm();
            let truncation_slack = truncation_slack(empirical, at_half, d);
            let tolerance = mc_allowance + truncation_slack + cfg.abs_tolerance;
            Ok(CharFnEntry {
                theta,
                empirical,
                theoretical,
                distance,
                std_error,
                truncation_slack,
                tolerance,
                pass: distance <= tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CharFnReport {
        s,
        t,
        config: *cfg,
        entries,
    })
}

/// Increments `X(t_j + 1/n) − X(t_j)` for several cells `(t_j, t_j + 1/n]`,
/// one row per replica. `X` is `Y` or `B`.
fn cell_increments(
    alpha: &AlphaFunction,
    cells: &[(f64, f64)],
    cfg: &MCConfig,
    process: ProcessKind,
) -> Result<Vec<Vec<f64>>> {
    let lo = cells.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let hi = cells.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let level = cfg.level();
    // Y with a varying exponent also moves through the jumps left of t_j
    let a = if process == ProcessKind::Y && !alpha.is_constant() { 0.0 } else { lo };
    let exponents: Vec<(f64, f64)> = cells
        .iter()
        .map(|&(l, r)| (-1.0 / alpha.value_unchecked(l), -1.0 / alpha.value_unchecked(r)))
        .collect();
    (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|rep| {
            let strip = Strip::new(replica_seed(cfg.seed_base, rep), a, hi, level)?;
            let mut sums = vec![0.0; cells.len()];
            if alpha.is_constant() {
                let al = alpha.value_unchecked(lo);
                let table = PowerTable::new(-1.0 / al);
                for k in 0..strip.count {
                    let (u, sign) = strip.level_and_sign(k);
                    let v = strip.location(k);
                    let mut term = None;
                    for (s, &(l, r)) in sums.iter_mut().zip(cells) {
                        if v > l && v <= r {
                            *s += *term.get_or_insert_with(|| signed(table.eval(u), sign));
                        }
                    }
                }
                let mut factor = level.powf(-1.0 / al);
                if process == ProcessKind::B {
                    factor *= stable_scale(al);
                }
                for s in sums.iter_mut() {
                    *s *= factor;
                }
            } else {
                for k in 0..strip.count {
                    let (u, sign) = strip.level_and_sign(k);
                    let v = strip.location(k);
                    let g = u * level;
                    for (i, &(l, r)) in cells.iter().enumerate() {
                        if v > r {
                            continue;
                        }
                        sums[i] += match process {
                            ProcessKind::B if v > l => {
                                let al = alpha.value_unchecked(v);
                                signed(stable_scale(al) * g.powf(-1.0 / al), sign)
                            }
                            ProcessKind::B => 0.0,
                            _ => {
                                let (el, er) = exponents[i];
                                if v > l {
                                    signed(g.powf(er), sign)
                                } else {
                                    signed(g.powf(er) - g.powf(el), sign)
                                }
                            }
                        };
                    }
                }
            }
            Ok(sums)
        })
        .collect()
}

fn check_process(process: ProcessKind) -> Result<()> {
    match process {
        ProcessKind::Y | ProcessKind::B => Ok(()),
        other => Err(Error::domain(format!("increment probabilities use Y or B, got {other}"))),
    }
}

fn band(n: usize, beta: f64, eps: f64) -> (f64, f64) {
    let nf = n as f64;
    (nf.powf(-(beta + eps)), nf.powf(-(beta - eps)))
}

/// `P(n^{−(β+ε)} ≤ |X((j+1)/n) − X(j/n)| ≤ n^{−(β−ε)})` over the replicas.
pub fn increment_prob(
    alpha: &AlphaFunction,
    beta: f64,
    eps: f64,
    n: usize,
    j: usize,
    cfg: &MCConfig,
    process: ProcessKind,
) -> Result<f64> {
    cfg.validate()?;
    check_process(process)?;
    if !(eps > 0.0) || n == 0 || j >= n {
        return Err(Error::domain(format!("need eps > 0 and 0 <= j < n, got eps={eps}, j={j}, n={n}")));
    }
    let nf = n as f64;
    let cell = (j as f64 / nf, (j + 1) as f64 / nf);
    let incs = cell_increments(alpha, &[cell], cfg, process)?;
    let (lo, hi) = band(n, beta, eps);
    let hits = incs.iter().filter(|row| (lo..=hi).contains(&row[0].abs())).count();
    Ok(hits as f64 / cfg.replicas as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `β < 1/d`: `P ≍ n^{α(t)β − 1}`.
    Low,
    /// `β > 1/c`: `P ≍ n^{1/α(t) − β}`.
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub regime: Regime,
    pub n_list: Vec<usize>,
    pub probabilities: Vec<f64>,
    /// Slope of `log P̂` against `log n` over the resolutions with `P̂ > 0`.
    pub slope: Option<f64>,
    pub predicted: (f64, f64),
    pub reliable: bool,
    pub contained: bool,
}

/// Fits the scaling exponent of the increment probability over the cell
/// containing `t` at each resolution in `n_list`.
///
/// The predicted interval is `[α(β−ε) − 1, α(β+ε) − 1]` in the low regime
/// and `[1/α − β − ε, 1/α − β + ε]` in the high regime, with `α = α(t)`.
pub fn scaling_fit(
    alpha: &AlphaFunction,
    beta: f64,
    eps: f64,
    t: f64,
    n_list: &[usize],
    cfg: &MCConfig,
    process: ProcessKind,
) -> Result<ScalingFit> {
    cfg.validate()?;
    check_process(process)?;
    let (c, d) = alpha.bounds();
    let regime = if beta < 1.0 / d {
        Regime::Low
    } else if beta > 1.0 / c {
        Regime::High
    } else {
        return Err(Error::domain(format!(
            "beta = {beta} lies in [1/d, 1/c] = [{}, {}], where no scaling is available",
            1.0 / d,
            1.0 / c
        )));
    };
    if !(eps > 0.0) {
        return Err(Error::domain("eps must be positive"));
    }
    if n_list.len() < 4 || n_list[0] < 2 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("n_list needs at least 4 increasing resolutions >= 2"));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(Error::domain(format!("t must lie in [0, 1), got {t}")));
    }
    let cells: Vec<(f64, f64)> = n_list
        .iter()
        .map(|&n| {
            let nf = n as f64;
            let j = ((t * nf).floor() as usize).min(n - 1);
            (j as f64 / nf, (j + 1) as f64 / nf)
        })
        .collect();
    let incs = cell_increments(alpha, &cells, cfg, process)?;
    let probabilities: Vec<f64> = n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let (lo, hi) = band(n, beta, eps);
            let hits = incs.iter().filter(|row| (lo..=hi).contains(&row[i].abs())).count();
            hits as f64 / cfg.replicas as f64
        })
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = n_list
        .iter()
        .zip(&probabilities)
        .filter(|(_, p)| **p > 0.0)
        .map(|(&n, p)| ((n as f64).ln(), p.ln()))
        .unzip();
    let slope = least_squares(&x, &y).map(|f| f.slope);
    let reliable = x.len() >= 3 && slope.is_some();
    let at = alpha.evaluate(t)?;
    let predicted = match regime {
        Regime::Low => (at * (beta - eps) - 1.0, at * (beta + eps) - 1.0),
        Regime::High => (1.0 / at - beta - eps, 1.0 / at - beta + eps),
    };
    let contained = reliable && slope.is_some_and(|s| s >= predicted.0 && s <= predicted.1);
    Ok(ScalingFit {
        regime,
        n_list: n_list.to_vec(),
        probabilities,
        slope,
        predicted,
        reliable,
        contained,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentPoint {
    pub r: f64,
    pub empirical: Complex64,
    /// Characteristic function of the tangent stable law, `exp(−|θ|^{α(u)})`.
    pub limit: f64,
    /// Exact value at this `r`, `exp(−∫_u^{u+r} |θ r^{−1/α(u)}|^{α(x)} dx)`.
    pub exact: f64,
    pub distance: f64,
}

/// Distance between the law of `(B(u + r) − B(u)) / r^{1/α(u)}` and its
/// stable tangent, through the characteristic function at `θ`.
pub fn tangent_check(
    alpha: &AlphaFunction,
    u: f64,
    r_list: &[f64],
    theta: f64,
    cfg: &MCConfig,
) -> Result<Vec<TangentPoint>> {
    cfg.validate()?;
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!("u must be interior, got {u}")));
    }
    let room = u.min(1.0 - u);
    if r_list.is_empty()
        || r_list.iter().any(|r| !(*r > 0.0 && *r < room))
        || r_list.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::domain(format!(
            "r_list must be strictly decreasing within (0, {room})"
        )));
    }
    let level = cfg.level();
    let rows: Vec<Vec<f64>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|rep| b_increments(alpha, replica_seed(cfg.seed_base, rep), u, r_list, level).map(|(v, _)| v))
        .collect::<Result<Vec<_>>>()?;
    let au = alpha.evaluate(u)?;
    let limit = (-theta.abs().powf(au)).exp();
    r_list
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let scale = r.powf(-1.0 / au);
            let samples: Vec<f64> = rows.iter().map(|row| row[i] * scale).collect();
            let (empirical, _) = char_mean(&samples, theta);
            Ok(TangentPoint {
                r,
                empirical,
                limit,
                exact: theoretical_char_fn(alpha, u, u + r, theta * scale)?,
                distance: (empirical - limit).norm(),
            })
        })
        .collect()
}
