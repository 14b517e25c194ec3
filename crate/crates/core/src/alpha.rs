//! The stability-index function `α: [0,1] → (1,2)`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Functions touching 1 or 2 within this margin are rejected.
pub const RANGE_MARGIN: f64 = 1e-6;

/// Parametric family of an [`AlphaFunction`].
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaKind {
    Constant {
        value: f64,
    },
    /// `intercept + slope * t`
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `mean + amplitude * sin(2π frequency t + phase)`
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
    /// Monotone cubic (PCHIP) interpolant of values on equispaced knots
    /// `k / (m - 1)`, `k = 0..m`.
    Table {
        values: Vec<f64>,
        slopes: Vec<f64>,
    },
}

/// Serialisable description: a kind name, its parameter list and an
/// optional override of the declared minimum-set dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaDescriptor {
    pub kind: String,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_set_dimension: Option<f64>,
}

/// A validated C¹ stability-index function with its range and metadata.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaFunction {
    kind: AlphaKind,
    c: f64,
    d: f64,
    lipschitz_bound: f64,
    min_set_dimension: f64,
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::domain(format!("t = {t} lies outside [0, 1]")))
    }
}

impl AlphaFunction {
    pub fn constant(value: f64) -> Result<Self> {
        Self::build(AlphaKind::Constant { value })
    }

    pub fn affine(intercept: f64, slope: f64) -> Result<Self> {
        Self::build(AlphaKind::Affine { intercept, slope })
    }

    pub fn sinusoidal(mean: f64, amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        Self::build(AlphaKind::Sinusoidal {
            mean,
            amplitude,
            frequency,
            phase,
        })
    }

    /// Table kind from values on equispaced knots covering `[0, 1]`.
    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::domain("a table needs at least two knots"));
        }
        let slopes = pchip_slopes(&values);
        Self::build(AlphaKind::Table { values, slopes })
    }

    pub fn from_descriptor(desc: &AlphaDescriptor) -> Result<Self> {
        let p = &desc.params;
        let need = |lo: usize, hi: usize| -> Result<()> {
            if p.len() < lo || p.len() > hi {
                Err(Error::domain(format!(
                    "alpha kind '{}' takes {lo}..={hi} parameters, got {}",
                    desc.kind,
                    p.len()
                )))
            } else {
                Ok(())
            }
        };
        let alpha = match desc.kind.as_str() {
            "constant" => {
                need(1, 1)?;
                Self::constant(p[0])?
            }
            "affine" => {
                need(2, 2)?;
                Self::affine(p[0], p[1])?
            }
            "sinusoidal" => {
                need(2, 4)?;
                Self::sinusoidal(
                    p[0],
                    p[1],
                    p.get(2).copied().unwrap_or(1.0),
                    p.get(3).copied().unwrap_or(0.0),
                )?
            }
            "table" => Self::table(p.clone())?,
            other => return Err(Error::domain(format!("unknown alpha kind '{other}'"))),
        };
        match desc.min_set_dimension {
            Some(dim) => alpha.with_min_set_dimension(dim),
            None => Ok(alpha),
        }
    }

    pub fn descriptor(&self) -> AlphaDescriptor {
        let (kind, params) = match &self.kind {
            AlphaKind::Constant { value } => ("constant", vec![*value]),
            AlphaKind::Affine { intercept, slope } => ("affine", vec![*intercept, *slope]),
            AlphaKind::Sinusoidal {
                mean,
                amplitude,
                frequency,
                phase,
            } => ("sinusoidal", vec![*mean, *amplitude, *frequency, *phase]),
            AlphaKind::Table { values, .. } => ("table", values.clone()),
        };
        AlphaDescriptor {
            kind: kind.to_string(),
            params,
            min_set_dimension: Some(self.min_set_dimension),
        }
    }

    fn build(kind: AlphaKind) -> Result<Self> {
        let params_finite = match &kind {
            AlphaKind::Constant { value } => value.is_finite(),
            AlphaKind::Affine { intercept, slope } => intercept.is_finite() && slope.is_finite(),
            AlphaKind::Sinusoidal {
                mean,
                amplitude,
                frequency,
                phase,
            } => [mean, amplitude, frequency, phase].iter().all(|v| v.is_finite()),
            AlphaKind::Table { values, .. } => values.iter().all(|v| v.is_finite()),
        };
        if !params_finite {
            return Err(Error::domain("alpha parameters must be finite"));
        }
        let (c, d) = compute_bounds(&kind);
        if c <= 1.0 + RANGE_MARGIN || d >= 2.0 - RANGE_MARGIN {
            return Err(Error::domain(format!(
                "alpha range [{c}, {d}] must lie strictly inside (1, 2)"
            )));
        }
        let lipschitz_bound = lipschitz(&kind);
        let min_set_dimension = match kind {
            AlphaKind::Constant { .. } => 1.0,
            _ => 0.0,
        };
        Ok(AlphaFunction {
            kind,
            c,
            d,
            lipschitz_bound,
            min_set_dimension,
        })
    }

    /// Overrides the declared Hausdorff dimension of `{t: α(t) = c}`.
    ///
    /// A constant function always has dimension 1.
    pub fn with_min_set_dimension(mut self, dim: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&dim) {
            return Err(Error::domain(format!(
                "min_set_dimension {dim} must lie in [0, 1]"
            )));
        }
        if self.is_constant() && dim != 1.0 {
            return Err(Error::domain(
                "a constant alpha has min_set_dimension 1",
            ));
        }
        self.min_set_dimension = dim;
        Ok(self)
    }

    pub fn kind(&self) -> &AlphaKind {
        &self.kind
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, AlphaKind::Constant { .. })
    }

    /// `(c, d) = (inf α, sup α)` over `[0, 1]`.
    pub fn bounds(&self) -> (f64, f64) {
        (self.c, self.d)
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    pub fn min_set_dimension(&self) -> f64 {
        self.min_set_dimension
    }

    pub fn evaluate(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.value_unchecked(t))
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(derivative_of(&self.kind, t))
    }

    /// `α(t)` without the domain check, for hot loops over validated grids.
    #[inline]
    pub(crate) fn value_unchecked(&self, t: f64) -> f64 {
        value_of(&self.kind, t)
    }
}

impl fmt::Display for AlphaFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let desc = self.descriptor();
        let params: Vec<String> = desc.params.iter().map(|p| p.to_string()).collect();
        write!(f, "{}({})", desc.kind, params.join(","))
    }
}

fn value_of(kind: &AlphaKind, t: f64) -> f64 {
    match kind {
        AlphaKind::Constant { value } => *value,
        AlphaKind::Affine { intercept, slope } => intercept + slope * t,
        AlphaKind::Sinusoidal {
            mean,
            amplitude,
            frequency,
            phase,
        } => mean + amplitude * (2.0 * PI * frequency * t + phase).sin(),
        AlphaKind::Table { values, slopes } => {
            let (k, s, h) = locate(values.len(), t);
            hermite(values[k], values[k + 1], slopes[k] * h, slopes[k + 1] * h, s)
        }
    }
}

fn derivative_of(kind: &AlphaKind, t: f64) -> f64 {
    match kind {
        AlphaKind::Constant { .. } => 0.0,
        AlphaKind::Affine { slope, .. } => *slope,
        AlphaKind::Sinusoidal {
            amplitude,
            frequency,
            phase,
            ..
        } => amplitude * 2.0 * PI * frequency * (2.0 * PI * frequency * t + phase).cos(),
        AlphaKind::Table { values, slopes } => {
            let (k, s, h) = locate(values.len(), t);
            hermite_derivative(values[k], values[k + 1], slopes[k] * h, slopes[k + 1] * h, s) / h
        }
    }
}

/// Interval index, local coordinate in [0, 1] and knot spacing.
fn locate(m: usize, t: f64) -> (usize, f64, f64) {
    let h = 1.0 / (m - 1) as f64;
    let k = ((t / h).floor() as usize).min(m - 2);
    let s = ((t - k as f64 * h) / h).clamp(0.0, 1.0);
    (k, s, h)
}

fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * m1
}

fn hermite_derivative(y0: f64, y1: f64, m0: f64, m1: f64, s: f64) -> f64 {
    let s2 = s * s;
    (6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1
        + (3.0 * s2 - 2.0 * s) * m1
}

/// Fritsch–Butland slopes with the usual shape-preserving end conditions.
fn pchip_slopes(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let h = 1.0 / (m - 1) as f64;
    let delta: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    if m == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; m];
    for k in 1..m - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        d[k] = if a * b <= 0.0 { 0.0 } else { 2.0 / (1.0 / a + 1.0 / b) };
    }
    let edge = |d0: f64, d1: f64| -> f64 {
        // three-point end formula for equal spacing, limited to preserve shape
        let v = (3.0 * d0 - d1) / 2.0;
        if v.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && v.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            v
        }
    };
    d[0] = edge(delta[0], delta[1]);
    d[m - 1] = edge(delta[m - 2], delta[m - 3]);
    d
}

fn compute_bounds(kind: &AlphaKind) -> (f64, f64) {
    match kind {
        AlphaKind::Constant { value } => (*value, *value),
        AlphaKind::Affine { intercept, slope } => {
            let end = intercept + slope;
            (intercept.min(end), intercept.max(end))
        }
        AlphaKind::Sinusoidal {
            mean,
            amplitude,
            frequency,
            phase,
        } => {
            let (lo, hi) = sin_range(*phase, 2.0 * PI * frequency + phase);
            let a = mean + amplitude * lo;
            let b = mean + amplitude * hi;
            (a.min(b), a.max(b))
        }
        AlphaKind::Table { .. } => grid_bounds(kind),
    }
}

/// Range of `sin` over the closed interval between `x0` and `x1`.
fn sin_range(x0: f64, x1: f64) -> (f64, f64) {
    let (a, b) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
    let contains = |target: f64| -> bool {
        // smallest target + 2πk that is ≥ a
        let k = ((a - target) / (2.0 * PI)).ceil();
        target + 2.0 * PI * k <= b
    };
    let ends = (a.sin(), b.sin());
    let lo = if contains(-PI / 2.0) { -1.0 } else { ends.0.min(ends.1) };
    let hi = if contains(PI / 2.0) { 1.0 } else { ends.0.max(ends.1) };
    (lo, hi)
}

/// Grid search with step 1e-4 followed by golden-section refinement to 1e-10.
fn grid_bounds(kind: &AlphaKind) -> (f64, f64) {
    const STEPS: usize = 10_000;
    let f = |t: f64| value_of(kind, t);
    let mut imin = 0;
    let mut imax = 0;
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for i in 0..=STEPS {
        let v = f(i as f64 / STEPS as f64);
        if v < vmin {
            vmin = v;
            imin = i;
        }
        if v > vmax {
            vmax = v;
            imax = i;
        }
    }
    let bracket = |i: usize| {
        let h = 1.0 / STEPS as f64;
        (
            (i as f64 * h - h).max(0.0),
            (i as f64 * h + h).min(1.0),
        )
    };
    let (a, b) = bracket(imin);
    let lo = golden_min(&f, a, b).min(vmin);
    let (a, b) = bracket(imax);
    let hi = -golden_min(&|t| -f(t), a, b);
    (lo, hi.max(vmax))
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > 1e-10 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    f(a).min(f(b)).min(f1).min(f2)
}

fn lipschitz(kind: &AlphaKind) -> f64 {
    match kind {
        AlphaKind::Constant { .. } => 0.0,
        AlphaKind::Affine { slope, .. } => slope.abs(),
        AlphaKind::Sinusoidal {
            amplitude,
            frequency,
            ..
        } => (amplitude * 2.0 * PI * frequency).abs(),
        AlphaKind::Table { values, slopes } => {
            // the derivative is quadratic on each interval: check ends and vertex
            let m = values.len();
            let h = 1.0 / (m - 1) as f64;
            let mut best: f64 = 0.0;
            for k in 0..m - 1 {
                let g = |s: f64| {
                    hermite_derivative(values[k], values[k + 1], slopes[k] * h, slopes[k + 1] * h, s)
                        / h
                };
                // p'(s) = A s² + B s + C; vertex at -B / (2A)
                let c0 = g(0.0);
                let c1 = g(1.0);
                let chalf = g(0.5);
                let a2 = 2.0 * (c1 + c0 - 2.0 * chalf);
                let b1 = c1 - c0 - a2;
                let mut cand = c0.abs().max(c1.abs());
                if a2 != 0.0 {
                    let sv = -b1 / (2.0 * a2);
                    if (0.0..=1.0).contains(&sv) {
                        cand = cand.max(g(sv).abs());
                    }
                }
                best = best.max(cand);
            }
            best * (1.0 + 1e-12)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sinus() -> AlphaFunction {
        AlphaFunction::sinusoidal(1.5, 0.3, 1.0, 0.0).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(AlphaFunction::constant(1.5).unwrap().evaluate(0.3).unwrap(), 1.5);
        let aff = AlphaFunction::affine(1.2, 0.6).unwrap();
        assert!((aff.evaluate(0.5).unwrap() - 1.5).abs() < 1e-15);
        // 1.5 + 0.3 sin(π/2)
        assert!((sinus().evaluate(0.25).unwrap() - 1.8).abs() < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(AlphaFunction::constant(1.5).unwrap().derivative(0.4).unwrap(), 0.0);
        let aff = AlphaFunction::affine(1.2, 0.6).unwrap();
        assert!((aff.derivative(0.7).unwrap() - 0.6).abs() < 1e-15);
        // d/dt 0.3 sin(2πt) at 0 = 0.6π
        assert!((sinus().derivative(0.0).unwrap() - 0.6 * PI).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        let a = sinus();
        assert!(a.evaluate(-0.01).is_err());
        assert!(a.evaluate(1.01).is_err());
        assert!(a.derivative(f64::NAN).is_err());
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(AlphaFunction::constant(1.5).unwrap().bounds(), (1.5, 1.5));
        let (c, d) = AlphaFunction::affine(1.2, 0.6).unwrap().bounds();
        assert!((c - 1.2).abs() < 1e-15 && (d - 1.8).abs() < 1e-15);
        let (c, d) = sinus().bounds();
        assert!((c - 1.2).abs() < 1e-12 && (d - 1.8).abs() < 1e-12);
    }

    fn brute_bounds(a: &AlphaFunction) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=100_000 {
            let v = a.evaluate(i as f64 / 100_000.0).unwrap();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    #[test]
    fn bounds_agree_with_brute_force() {
        let cases = vec![
            AlphaFunction::constant(1.3).unwrap(),
            AlphaFunction::affine(1.8, -0.5).unwrap(),
            AlphaFunction::sinusoidal(1.5, 0.2, 1.7, 0.4).unwrap(),
            AlphaFunction::sinusoidal(1.5, -0.2, 0.3, 2.0).unwrap(),
            AlphaFunction::table(vec![1.3, 1.7, 1.2, 1.6, 1.5]).unwrap(),
        ];
        for a in cases {
            let (c, d) = a.bounds();
            let (bc, bd) = brute_bounds(&a);
            assert!((c - bc).abs() < 1e-6 && (d - bd).abs() < 1e-6, "{a}: {c},{d} vs {bc},{bd}");
        }
    }

    #[test]
    fn range_validation() {
        assert!(AlphaFunction::constant(1.0).is_err());
        assert!(AlphaFunction::constant(2.0 - 1e-7).is_err());
        assert!(AlphaFunction::affine(1.5, 0.6).is_err());
        assert!(AlphaFunction::sinusoidal(1.5, 0.5, 1.0, 0.0).is_err());
        assert!(AlphaFunction::table(vec![1.5]).is_err());
        assert!(AlphaFunction::constant(f64::NAN).is_err());
    }

    #[test]
    fn min_set_dimension_defaults_and_override() {
        assert_eq!(AlphaFunction::constant(1.5).unwrap().min_set_dimension(), 1.0);
        let a = AlphaFunction::affine(1.2, 0.6).unwrap();
        assert_eq!(a.min_set_dimension(), 0.0);
        assert_eq!(a.clone().with_min_set_dimension(0.5).unwrap().min_set_dimension(), 0.5);
        assert!(a.with_min_set_dimension(1.5).is_err());
        assert!(AlphaFunction::constant(1.5).unwrap().with_min_set_dimension(0.0).is_err());
    }

    #[test]
    fn table_interpolates_knots_and_is_c1() {
        let vals = vec![1.3, 1.7, 1.2, 1.6, 1.5];
        let a = AlphaFunction::table(vals.clone()).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let t = k as f64 / 4.0;
            assert!((a.evaluate(t).unwrap() - v).abs() < 1e-14);
        }
        // derivative continuous across knots
        for k in 1..4 {
            let t = k as f64 / 4.0;
            let left = a.derivative(t - 1e-9).unwrap();
            let right = a.derivative(t + 1e-9).unwrap();
            assert!((left - right).abs() < 1e-6, "knot {k}: {left} vs {right}");
        }
        // range preserved: stays within the knot range
        let (c, d) = a.bounds();
        assert!(c >= 1.2 - 1e-12 && d <= 1.7 + 1e-12);
    }

    #[test]
    fn descriptor_round_trip() {
        let desc = AlphaDescriptor {
            kind: "sinusoidal".into(),
            params: vec![1.5, 0.3],
            min_set_dimension: None,
        };
        let a = AlphaFunction::from_descriptor(&desc).unwrap();
        assert_eq!(a, sinus());
        let back = AlphaFunction::from_descriptor(&a.descriptor()).unwrap();
        assert_eq!(back, a);
        assert_eq!(a.to_string(), "sinusoidal(1.5,0.3,1,0)");
        let bad = AlphaDescriptor {
            kind: "quadratic".into(),
            params: vec![1.5],
            min_set_dimension: None,
        };
        assert!(AlphaFunction::from_descriptor(&bad).is_err());
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn invariants_hold_on_samples(
            kind in 0usize..4,
            p0 in 1.3f64..1.7,
            p1 in -0.25f64..0.25,
            freq in 0.2f64..3.0,
            knots in proptest::collection::vec(1.1f64..1.9, 2..8),
            s in 0.0f64..1.0,
            t in 0.0f64..1.0,
        ) {
            let a = match kind {
                0 => AlphaFunction::constant(p0).unwrap(),
                1 => AlphaFunction::affine(p0, p1).unwrap(),
                2 => AlphaFunction::sinusoidal(p0, p1, freq, 0.3).unwrap(),
                _ => AlphaFunction::table(knots).unwrap(),
            };
            let (c, d) = a.bounds();
            prop_assert!(1.0 < c && c <= d && d < 2.0);
            let (vs, vt) = (a.evaluate(s).unwrap(), a.evaluate(t).unwrap());
            prop_assert!(vs >= c - 1e-12 && vs <= d + 1e-12);
            prop_assert!((vs - vt).abs() <= a.lipschitz_bound() * (s - t).abs() + 1e-12);
            prop_assert_eq!(vs, a.evaluate(s).unwrap());
        }
    }
}
