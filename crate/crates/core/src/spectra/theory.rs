use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real number or minus infinity.
///
/// Spectra take the value −∞ on whole intervals; keeping it as a tag stops
/// it from leaking into arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::NegInf => None,
        }
    }

    /// `−∞` maps to `f64::NEG_INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::NEG_INFINITY)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::NegInf, ExtReal::NegInf) => Some(Ordering::Equal),
            (ExtReal::NegInf, ExtReal::Finite(_)) => Some(Ordering::Less),
            (ExtReal::Finite(_), ExtReal::NegInf) => Some(Ordering::Greater),
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        if v == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(v)
        }
    }
}

/// Formats finite values with the shortest round-trip representation and
/// the sentinel as `-inf`.
impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::Finite(v) => write!(f, "{v:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumFamily {
    Hausdorff,
    LargeDeviation,
    Legendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumSource {
    Theoretical,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumKind {
    pub family: SpectrumFamily,
    pub source: SpectrumSource,
}

impl SpectrumKind {
    pub const fn new(family: SpectrumFamily, source: SpectrumSource) -> Self {
        SpectrumKind { family, source }
    }
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match self.family {
            SpectrumFamily::Hausdorff => "hausdorff",
            SpectrumFamily::LargeDeviation => "large_deviation",
            SpectrumFamily::Legendre => "legendre",
        };
        let source = match self.source {
            SpectrumSource::Theoretical => "theoretical",
            SpectrumSource::Empirical => "empirical",
        };
        write!(f, "{family}/{source}")
    }
}

/// A spectrum sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCurve {
    pub kind: SpectrumKind,
    pub grid: Vec<f64>,
    pub values: Vec<ExtReal>,
    /// Per-point reliability; empty when every value is exact.
    pub reliable: Vec<bool>,
    /// Free-form `(key, value)` metadata carried into CSV headers.
    pub meta: Vec<(String, String)>,
}

impl SpectrumCurve {
    pub fn new(kind: SpectrumKind, grid: Vec<f64>, values: Vec<ExtReal>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::domain("grid and values differ in length"));
        }
        check_grid(&grid)?;
        Ok(SpectrumCurve {
            kind,
            grid,
            values,
            reliable: Vec::new(),
            meta: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn is_reliable(&self, i: usize) -> bool {
        self.reliable.get(i).copied().unwrap_or(true)
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("grid values must be finite"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("grid must be strictly increasing"));
    }
    Ok(())
}

fn check_range(c: f64, d: f64) -> Result<()> {
    if !(c > 1.0 && c <= d && d < 2.0) {
        return Err(Error::domain(format!("need 1 < c <= d < 2, got c={c}, d={d}")));
    }
    Ok(())
}

/// Hausdorff spectrum of `B` and `D`:
///
/// * `h·d` on `[0, 1/d]`,
/// * `1` on `(1/d, 1/c)`,
/// * `min_set_dimension` at `h = 1/c`,
/// * `−∞` for `h < 0` or `h > 1/c`.
///
/// When `c = d` the plateau is empty and `h = 1/c` falls in the first case,
/// giving 1 (the classical Lévy spectrum).
pub fn hausdorff_spectrum(c: f64, d: f64, min_set_dimension: f64, h: f64) -> Result<ExtReal> {
    check_range(c, d)?;
    if !(0.0..=1.0).contains(&min_set_dimension) {
        return Err(Error::domain(format!(
            "min_set_dimension must lie in [0, 1], got {min_set_dimension}"
        )));
    }
    if h.is_nan() {
        return Err(Error::domain("h is NaN"));
    }
    let (inv_c, inv_d) = (1.0 / c, 1.0 / d);
    Ok(if h < 0.0 || h > inv_c {
        ExtReal::NegInf
    } else if h <= inv_d {
        ExtReal::Finite(h * d)
    } else if h < inv_c {
        ExtReal::Finite(1.0)
    } else {
        ExtReal::Finite(min_set_dimension)
    })
}

/// Large-deviation (and Legendre) spectrum of `B`:
///
/// * `β·d` on `[0, 1/d]`,
/// * `1` on `(1/d, 1/c]`,
/// * `1 + 1/c − β` on `(1/c, 1 + 1/c]`,
/// * `−∞` for `β < 0` or `β > 1 + 1/c`.
pub fn large_deviation_spectrum_theoretical(c: f64, d: f64, beta: f64) -> Result<ExtReal> {
    check_range(c, d)?;
    if beta.is_nan() {
        return Err(Error::domain("beta is NaN"));
    }
    let (inv_c, inv_d) = (1.0 / c, 1.0 / d);
    Ok(if beta < 0.0 || beta > 1.0 + inv_c {
        ExtReal::NegInf
    } else if beta <= inv_d {
        ExtReal::Finite(beta * d)
    } else if beta <= inv_c {
        ExtReal::Finite(1.0)
    } else {
        ExtReal::Finite(1.0 + inv_c - beta)
    })
}

pub fn hausdorff_curve(c: f64, d: f64, min_set_dimension: f64, grid: &[f64]) -> Result<SpectrumCurve> {
    let values = grid
        .iter()
        .map(|&h| hausdorff_spectrum(c, d, min_set_dimension, h))
        .collect::<Result<Vec<_>>>()?;
    let mut curve = SpectrumCurve::new(
        SpectrumKind::new(SpectrumFamily::Hausdorff, SpectrumSource::Theoretical),
        grid.to_vec(),
        values,
    )?;
    curve.meta = vec![
        ("c".into(), format!("{c:?}")),
        ("d".into(), format!("{d:?}")),
        ("min_set_dimension".into(), format!("{min_set_dimension:?}")),
    ];
    Ok(curve)
}

pub fn large_deviation_curve(c: f64, d: f64, grid: &[f64]) -> Result<SpectrumCurve> {
    let values = grid
        .iter()
        .map(|&b| large_deviation_spectrum_theoretical(c, d, b))
        .collect::<Result<Vec<_>>>()?;
    let mut curve = SpectrumCurve::new(
        SpectrumKind::new(SpectrumFamily::LargeDeviation, SpectrumSource::Theoretical),
        grid.to_vec(),
        values,
    )?;
    curve.meta = vec![("c".into(), format!("{c:?}")), ("d".into(), format!("{d:?}"))];
    Ok(curve)
}

/// Upper concave envelope of the finite part of `curve`, evaluated on the
/// same grid; `−∞` outside the span of the finite points.
pub fn concave_hull(curve: &SpectrumCurve) -> Result<SpectrumCurve> {
    check_grid(&curve.grid)?;
    let points: Vec<(f64, f64)> = curve
        .grid
        .iter()
        .zip(&curve.values)
        .filter_map(|(&x, v)| v.finite().map(|y| (x, y)))
        .collect();
    if points.is_empty() {
        return Err(Error::domain("concave hull of an everywhere −∞ curve"));
    }
    // monotone chain, upper part
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in &points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let (lo, hi) = (hull[0].0, hull[hull.len() - 1].0);
    let mut seg = 0;
    let values = curve
        .grid
        .iter()
        .map(|&x| {
            if x < lo || x > hi {
                return ExtReal::NegInf;
            }
            while seg + 1 < hull.len() - 1 && x > hull[seg + 1].0 {
                seg += 1;
            }
            if hull.len() == 1 {
                return ExtReal::Finite(hull[0].1);
            }
            let (a, b) = (hull[seg], hull[seg + 1]);
            if x == a.0 {
                ExtReal::Finite(a.1)
            } else if x == b.0 {
                ExtReal::Finite(b.1)
            } else {
                ExtReal::Finite(a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0))
            }
        })
        .collect();
    let mut out = curve.clone();
    out.values = values;
    out.reliable = Vec::new();
    out.meta.push(("transform".into(), "concave_hull".into()));
    Ok(out)
}

/// `λ` and `p` of `H(t) = λt − log(1 − p + p e^t)`, both in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffParams {
    lambda: f64,
    p: f64,
}

impl ChernoffParams {
    pub fn new(lambda: f64, p: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0 && p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!(
                "lambda and p must lie in (0, 1), got lambda={lambda}, p={p}"
            )));
        }
        Ok(ChernoffParams { lambda, p })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    PositiveT,
    NegativeT,
}

pub fn chernoff_h(params: ChernoffParams, t: f64) -> f64 {
    let ChernoffParams { lambda, p } = params;
    let log_mgf = if t <= 0.0 {
        (p * t.exp_m1()).ln_1p()
    } else {
        t + (p + (1.0 - p) * (-t).exp()).ln()
    };
    lambda * t - log_mgf
}

/// Supremum of `H` over one half-line together with its maximiser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffSup {
    pub value: f64,
    pub t0: f64,
}

/// `sup H = λ log(λ/p) + (1−λ) log((1−λ)/(1−p))`, reached at
/// `t₀ = log(λ(1−p)/(p(1−λ)))`. The positive side needs `p < λ`, the
/// negative side `λ < p`.
pub fn chernoff_sup(params: ChernoffParams, side: Side) -> Result<ChernoffSup> {
    let ChernoffParams { lambda, p } = params;
    match side {
        Side::PositiveT if !(p < lambda) => {
            return Err(Error::domain(format!("positive side needs p < lambda, got p={p}, lambda={lambda}")))
        }
        Side::NegativeT if !(lambda < p) => {
            return Err(Error::domain(format!("negative side needs lambda < p, got lambda={lambda}, p={p}")))
        }
        _ => {}
    }
    Ok(ChernoffSup {
        value: kl_bernoulli(lambda, p),
        t0: (lambda * (1.0 - p) / (p * (1.0 - lambda))).ln(),
    })
}

fn kl_bernoulli(lambda: f64, p: f64) -> f64 {
    // both terms are O(λ − p) and cancel to O((λ − p)²)
    let delta = lambda - p;
    lambda * (delta / p).ln_1p() + (1.0 - lambda) * (-delta / (1.0 - p)).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundLemma {
    /// `sup_{t>0} H ≥ (a−b)/2 · n^a log n` with `p = K n^b`, `λ = n^a`, `0 > a > b`.
    Pr3,
    /// `sup_{t<0} H ≥ K₁/4 · n^b` with `p = K₁ n^b`, `λ = K₂ n^a`, `0 > b > a`.
    Pr4,
    /// `inf_{t>0} e^{−λtn}(1−p+pe^t)^n ≤ e^{−(a−b)/2 · n^{1+a} log n}`.
    Pr5,
    /// `inf_{t<0} e^{−λtn}(1−p+pe^t)^{K_U n} ≤ e^{−K₁K_U/4 · n^{1+b}}`.
    Pr6,
}

/// Constants of one bound lemma. `k1` is `K` for PR3/PR5; `k2` and `k_u`
/// are only read by the lemmas that use them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub a: f64,
    pub b: f64,
    pub k1: f64,
    pub k2: f64,
    pub k_u: f64,
}

/// Both sides of a bound lemma at one `n`.
///
/// For PR5 and PR6 the two sides underflow for moderate `n`, so `lhs` and
/// `rhs` hold their natural logarithms (`log_scale = true`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub log_scale: bool,
    pub holds: bool,
}

pub fn chernoff_asymptotic_bounds(lemma: BoundLemma, params: BoundParams, n: f64) -> Result<BoundCheck> {
    let BoundParams { a, b, k1, k2, k_u } = params;
    if !(n > 1.0 && n.is_finite()) {
        return Err(Error::domain(format!("n must be a finite number above 1, got {n}")));
    }
    if !(k1 > 0.0) {
        return Err(Error::domain("K must be positive"));
    }
    let log_n = n.ln();
    match lemma {
        BoundLemma::Pr3 | BoundLemma::Pr5 => {
            if !(0.0 > a && a > b) {
                return Err(Error::domain(format!("need 0 > a > b, got a={a}, b={b}")));
            }
            let params = ChernoffParams::new(n.powf(a), k1 * n.powf(b))?;
            let sup = chernoff_sup(params, Side::PositiveT)?.value;
            let bound = 0.5 * (a - b) * n.powf(a) * log_n;
            if lemma == BoundLemma::Pr3 {
                Ok(BoundCheck {
                    lhs: sup,
                    rhs: bound,
                    log_scale: false,
                    holds: sup >= bound,
                })
            } else {
                let (lhs, rhs) = (-n * sup, -n * bound);
                Ok(BoundCheck {
                    lhs,
                    rhs,
                    log_scale: true,
                    holds: lhs <= rhs,
                })
            }
        }
        BoundLemma::Pr4 | BoundLemma::Pr6 => {
            if !(0.0 > b && b > a) {
                return Err(Error::domain(format!("need 0 > b > a, got a={a}, b={b}")));
            }
            if !(k2 > 0.0) {
                return Err(Error::domain("K2 must be positive"));
            }
            let lambda = k2 * n.powf(a);
            let p = k1 * n.powf(b);
            if lemma == BoundLemma::Pr4 {
                let sup = chernoff_sup(ChernoffParams::new(lambda, p)?, Side::NegativeT)?.value;
                let bound = 0.25 * k1 * n.powf(b);
                Ok(BoundCheck {
                    lhs: sup,
                    rhs: bound,
                    log_scale: false,
                    holds: sup >= bound,
                })
            } else {
                if !(k_u > 0.0) {
                    return Err(Error::domain("K_U must be positive"));
                }
                // e^{−λtn}(1−p+pe^t)^{K_U n} = e^{−K_U n H̃(t)} with λ̃ = λ/K_U
                let sup = chernoff_sup(ChernoffParams::new(lambda / k_u, p)?, Side::NegativeT)?.value;
                let lhs = -k_u * n * sup;
                let rhs = -0.25 * k1 * k_u * n.powf(1.0 + b);
                Ok(BoundCheck {
                    lhs,
                    rhs,
                    log_scale: true,
                    holds: lhs <= rhs,
                })
            }
        }
    }
}
