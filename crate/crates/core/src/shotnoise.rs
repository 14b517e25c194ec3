//! Truncated shot-noise series for multistable Lévy motions.
//!
//! A [`PointSystem`] holds one realisation of the driving triple
//! `(Γ_i, V_i, γ_i)`: unit-rate Poisson arrival times, uniform jump
//! locations and Rademacher signs. Paths are evaluated on the closed grid
//! `t_j = j/n`, `j = 0..=n`, with the right-continuous convention
//! "`V_i ≤ t`" for every indicator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alpha::AlphaFunction;
use crate::error::{Error, Result};
use crate::rng::{Stream, STREAM_ARRIVALS, STREAM_LOCATIONS, STREAM_SIGNS};
use crate::stable_norm::stable_scale;

#[derive(Debug, Clone, PartialEq)]
pub struct PointSystem {
    seed: u64,
    gamma: Vec<f64>,
    locations: Vec<f64>,
    signs: Vec<f64>,
}

/// Draws the first `count` points of the system seeded by `seed`.
///
/// `Γ` is the running sum of `−ln(1 − U)` over the arrivals stream; `V` and
/// the signs come from their own streams. Entry `i` depends only on
/// `(seed, i)`, so a longer system extends a shorter one.
pub fn generate_points(seed: u64, count: usize) -> Result<PointSystem> {
    if count == 0 {
        return Err(Error::domain("a point system needs at least one point"));
    }
    let arrivals = Stream::new(seed, STREAM_ARRIVALS);
    let locations = Stream::new(seed, STREAM_LOCATIONS);
    let signs = Stream::new(seed, STREAM_SIGNS);
    let mut gamma = Vec::with_capacity(count);
    let mut acc = 0.0;
    for i in 0..count as u64 {
        acc += arrivals.exp1_at(i);
        gamma.push(acc);
    }
    Ok(PointSystem {
        seed,
        gamma,
        locations: (0..count as u64).map(|i| locations.location_at(i)).collect(),
        signs: (0..count as u64).map(|i| signs.sign_at(i)).collect(),
    })
}

impl PointSystem {
    /// Builds a system from explicit sequences, checking the invariants.
    pub fn from_parts(seed: u64, gamma: Vec<f64>, locations: Vec<f64>, signs: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() || gamma.len() != locations.len() || gamma.len() != signs.len() {
            return Err(Error::domain("point sequences must be non-empty and of equal length"));
        }
        if !(gamma[0] > 0.0) || gamma.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("arrival times must be positive and strictly increasing"));
        }
        if locations.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
            return Err(Error::domain("jump locations must lie in (0, 1]"));
        }
        if signs.iter().any(|s| *s != 1.0 && *s != -1.0) {
            return Err(Error::domain("signs must be +1 or -1"));
        }
        Ok(PointSystem {
            seed,
            gamma,
            locations,
            signs,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    /// The first `count` points.
    pub fn prefix(&self, count: usize) -> Result<PointSystem> {
        if count == 0 || count > self.len() {
            return Err(Error::domain(format!(
                "prefix length {count} outside 1..={}",
                self.len()
            )));
        }
        Ok(PointSystem {
            seed: self.seed,
            gamma: self.gamma[..count].to_vec(),
            locations: self.locations[..count].to_vec(),
            signs: self.signs[..count].to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProcessKind {
    Y,
    B,
    D,
    Z,
    W,
    A,
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProcessKind::Y => "Y",
            ProcessKind::B => "B",
            ProcessKind::D => "D",
            ProcessKind::Z => "Z",
            ProcessKind::W => "W",
            ProcessKind::A => "A",
        };
        f.write_str(s)
    }
}

impl FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "Y" => Ok(ProcessKind::Y),
            "B" => Ok(ProcessKind::B),
            "D" => Ok(ProcessKind::D),
            "Z" => Ok(ProcessKind::Z),
            "W" => Ok(ProcessKind::W),
            "A" => Ok(ProcessKind::A),
            other => Err(Error::domain(format!("unknown process kind '{other}'"))),
        }
    }
}

/// Where a path came from: enough to regenerate it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub truncation: usize,
    pub alpha: String,
}

/// A process evaluated at `t_j = j/n`, `j = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub kind: ProcessKind,
    pub resolution: usize,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl SamplePath {
    pub fn time(&self, j: usize) -> f64 {
        grid_time(j, self.resolution)
    }
}

#[inline]
fn grid_time(j: usize, n: usize) -> f64 {
    j as f64 / n as f64
}

fn provenance(points: &PointSystem, alpha: &AlphaFunction) -> Provenance {
    Provenance {
        seed: points.seed,
        truncation: points.len(),
        alpha: alpha.to_string(),
    }
}

fn check_resolution(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::domain("grid resolution must be at least 1"))
    } else {
        Ok(())
    }
}

/// Index of the first grid point `t_j = j/n` with `v ≤ t_j`.
fn cell_of(v: f64, n: usize) -> usize {
    let mut j = ((v * n as f64).ceil() as usize).clamp(1, n);
    while j > 1 && v <= grid_time(j - 1, n) {
        j -= 1;
    }
    while j < n && v > grid_time(j, n) {
        j += 1;
    }
    j
}

/// Sums per-point terms into their cells and prefix-sums over the grid.
fn accumulate(points: &PointSystem, n: usize, term: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut cells = vec![0.0; n + 1];
    for (i, &v) in points.locations.iter().enumerate() {
        cells[cell_of(v, n)] += term(i);
    }
    let mut acc = 0.0;
    for c in cells.iter_mut() {
        acc += *c;
        *c = acc;
    }
    cells
}

/// Per-point coefficients `(C_{α(V_i)}^{1/α(V_i)}, 1/α(V_i))`.
fn location_coefficients(points: &PointSystem, alpha: &AlphaFunction) -> Vec<(f64, f64)> {
    if alpha.is_constant() {
        let a = alpha.value_unchecked(0.0);
        vec![(stable_scale(a), 1.0 / a); points.len()]
    } else {
        points
            .locations
            .iter()
            .map(|&v| {
                let a = alpha.value_unchecked(v);
                (stable_scale(a), 1.0 / a)
            })
            .collect()
    }
}

/// `Y(t) = Σ_{i ≤ N} γ_i Γ_i^{−1/α(t)} 1(V_i ≤ t)`.
pub fn eval_y(points: &PointSystem, alpha: &AlphaFunction, t: f64) -> Result<f64> {
    let inv = 1.0 / alpha.evaluate(t)?;
    Ok(points
        .gamma
        .iter()
        .zip(&points.locations)
        .zip(&points.signs)
        .filter(|((_, v), _)| **v <= t)
        .map(|((g, _), s)| s * g.powf(-inv))
        .sum())
}

/// `B(t) = Σ γ_i C_{α(V_i)}^{1/α(V_i)} Γ_i^{−1/α(V_i)} 1(V_i ≤ t)`, in `O(N + n)`.
pub fn sample_path_b(points: &PointSystem, alpha: &AlphaFunction, n: usize) -> Result<SamplePath> {
    check_resolution(n)?;
    let coef = location_coefficients(points, alpha);
    let values = accumulate(points, n, |i| {
        let (scale, inv) = coef[i];
        points.signs[i] * scale * points.gamma[i].powf(-inv)
    });
    Ok(SamplePath {
        kind: ProcessKind::B,
        resolution: n,
        values,
        provenance: provenance(points, alpha),
    })
}

/// `Z(t) = Σ γ_i C_{α(V_i)}^{1/α(V_i)} i^{−1/α(V_i)} 1(V_i ≤ t)`.
pub fn sample_path_z(points: &PointSystem, alpha: &AlphaFunction, n: usize) -> Result<SamplePath> {
    check_resolution(n)?;
    let coef = location_coefficients(points, alpha);
    let values = accumulate(points, n, |i| {
        let (scale, inv) = coef[i];
        points.signs[i] * scale * ((i + 1) as f64).powf(-inv)
    });
    Ok(SamplePath {
        kind: ProcessKind::Z,
        resolution: n,
        values,
        provenance: provenance(points, alpha),
    })
}

/// `W(t) = Σ γ_i C_{α(V_i)}^{1/α(V_i)} (Γ_i^{−1/α(V_i)} − i^{−1/α(V_i)}) 1(V_i ≤ t)`.
pub fn sample_path_w(points: &PointSystem, alpha: &AlphaFunction, n: usize) -> Result<SamplePath> {
    check_resolution(n)?;
    let coef = location_coefficients(points, alpha);
    let values = accumulate(points, n, |i| {
        let (scale, inv) = coef[i];
        points.signs[i] * scale * (points.gamma[i].powf(-inv) - ((i + 1) as f64).powf(-inv))
    });
    Ok(SamplePath {
        kind: ProcessKind::W,
        resolution: n,
        values,
        provenance: provenance(points, alpha),
    })
}

/// Values of `Σ_{V_i ≤ t_j} γ_i Γ_i^{−1/α(t_j)}` on the grid.
///
/// The exponent depends on the evaluation time, so each grid point sums
/// over every earlier jump (`O(N n)`); points are sorted by cell once so the
/// inner loop runs over a contiguous prefix. Constant α reduces to prefix
/// sums.
fn time_exponent_sums(points: &PointSystem, alpha: &AlphaFunction, n: usize) -> Vec<f64> {
    if alpha.is_constant() {
        let inv = 1.0 / alpha.value_unchecked(0.0);
        return accumulate(points, n, |i| points.signs[i] * points.gamma[i].powf(-inv));
    }
    let cells: Vec<usize> = points.locations.iter().map(|&v| cell_of(v, n)).collect();
    // counting sort by cell
    let mut starts = vec![0usize; n + 2];
    for &c in &cells {
        starts[c + 1] += 1;
    }
    for j in 1..starts.len() {
        starts[j] += starts[j - 1];
    }
    let mut fill = starts.clone();
    let mut log_gamma = vec![0.0; points.len()];
    let mut sign = vec![0.0; points.len()];
    for (i, &c) in cells.iter().enumerate() {
        let slot = fill[c];
        fill[c] += 1;
        log_gamma[slot] = points.gamma[i].ln();
        sign[slot] = points.signs[i];
    }
    (0..=n)
        .map(|j| {
            let end = starts[j + 1];
            let inv = 1.0 / alpha.value_unchecked(grid_time(j, n));
            log_gamma[..end]
                .iter()
                .zip(&sign[..end])
                .map(|(lg, s)| s * (-lg * inv).exp())
                .sum()
        })
        .collect()
}

pub fn sample_path_y(points: &PointSystem, alpha: &AlphaFunction, n: usize) -> Result<SamplePath> {
    check_resolution(n)?;
    Ok(SamplePath {
        kind: ProcessKind::Y,
        resolution: n,
        values: time_exponent_sums(points, alpha, n),
        provenance: provenance(points, alpha),
    })
}

/// `D(t) = C_{α(t)}^{1/α(t)} Σ γ_i Γ_i^{−1/α(t)} 1(V_i ≤ t)`.
pub fn sample_path_d(points: &PointSystem, alpha: &AlphaFunction, n: usize) -> Result<SamplePath> {
    check_resolution(n)?;
    let mut values = time_exponent_sums(points, alpha, n);
    for (j, v) in values.iter_mut().enumerate() {
        *v *= stable_scale(alpha.value_unchecked(grid_time(j, n)));
    }
    Ok(SamplePath {
        kind: ProcessKind::D,
        resolution: n,
        values,
        provenance: provenance(points, alpha),
    })
}

/// The smooth part `A = D − B`.
pub fn smooth_part_a(path_b: &SamplePath, path_d: &SamplePath) -> Result<SamplePath> {
    if path_b.kind != ProcessKind::B || path_d.kind != ProcessKind::D {
        return Err(Error::domain("smooth_part_a expects a B path and a D path"));
    }
    if path_b.resolution != path_d.resolution || path_b.provenance != path_d.provenance {
        return Err(Error::domain("B and D paths must share grid and provenance"));
    }
    Ok(SamplePath {
        kind: ProcessKind::A,
        resolution: path_b.resolution,
        values: path_d
            .values
            .iter()
            .zip(&path_b.values)
            .map(|(d, b)| d - b)
            .collect(),
        provenance: path_b.provenance.clone(),
    })
}

/// Any of the six processes on the grid of resolution `n`.
pub fn sample_path(
    points: &PointSystem,
    alpha: &AlphaFunction,
    kind: ProcessKind,
    n: usize,
) -> Result<SamplePath> {
    match kind {
        ProcessKind::Y => sample_path_y(points, alpha, n),
        ProcessKind::B => sample_path_b(points, alpha, n),
        ProcessKind::D => sample_path_d(points, alpha, n),
        ProcessKind::Z => sample_path_z(points, alpha, n),
        ProcessKind::W => sample_path_w(points, alpha, n),
        ProcessKind::A => {
            let b = sample_path_b(points, alpha, n)?;
            let d = sample_path_d(points, alpha, n)?;
            smooth_part_a(&b, &d)
        }
    }
}

/// Size of the `B`-jump at `V_i` (1-based `i`):
/// `γ_i C_{α(V_i)}^{1/α(V_i)} Γ_i^{−1/α(V_i)}`.
pub fn jump_size(points: &PointSystem, alpha: &AlphaFunction, i: usize) -> Result<f64> {
    if i == 0 || i > points.len() {
        return Err(Error::domain(format!(
            "jump index {i} outside 1..={}",
            points.len()
        )));
    }
    let k = i - 1;
    let a = alpha.evaluate(points.locations[k])?;
    Ok(points.signs[k] * stable_scale(a) * points.gamma[k].powf(-1.0 / a))
}

/// `sup_j |X_{N2}(t_j) − X_{N1}(t_j)|` for the paths built from the first
/// `n1` and `n2` points of the same seed.
pub fn truncation_error_report(
    seed: u64,
    alpha: &AlphaFunction,
    kind: ProcessKind,
    n: usize,
    n1: usize,
    n2: usize,
) -> Result<f64> {
    if n1 == 0 || n1 > n2 {
        return Err(Error::domain(format!("need 1 ≤ N1 ≤ N2, got N1={n1}, N2={n2}")));
    }
    let full = generate_points(seed, n2)?;
    let short = full.prefix(n1)?;
    let a = sample_path(&short, alpha, kind, n)?;
    let b = sample_path(&full, alpha, kind, n)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}
