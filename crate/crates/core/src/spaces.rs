//! Sequence and function spaces with exact norms and duality pairings.
//!
//! Scalars are real. `L_p[0,1]` is modeled by piecewise-constant functions on
//! dyadic grids, so every integral below is a finite sum and the only error is
//! floating-point rounding.

use serde::{Deserialize, Serialize};

use crate::error::{FrameError, Result};

/// Finest grid level accepted anywhere in the crate.
pub const MAX_LEVEL: u32 = 24;

/// Conjugate exponent `p* = p / (p - 1)`; `1* = ∞`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(FrameError::InvalidExponent {
            value: p,
            range: "[1, inf)",
        })
    }
}

pub(crate) fn check_open_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(FrameError::InvalidExponent {
            value: p,
            range: "(1, inf)",
        })
    }
}

// Sums in this crate fold from +0.0; `Iterator::sum` of nothing is -0.0.

/// `(Σ |v|^p)^{1/p}` with the common exponents special-cased.
fn power_sum_norm<I: Iterator<Item = f64>>(values: I, p: f64) -> f64 {
    if p == 1.0 {
        values.map(f64::abs).fold(0.0, |a, b| a + b)
    } else if p == 2.0 {
        values.map(|v| v * v).fold(0.0, |a, b| a + b).sqrt()
    } else {
        values
            .map(|v| v.abs().powf(p))
            .fold(0.0, |a, b| a + b)
            .powf(1.0 / p)
    }
}

// ---------------------------------------------------------------------------
// Sequences
// ---------------------------------------------------------------------------

/// A finitely supported real sequence, indexed from 1.
///
/// Indices are strictly increasing and no stored value is zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, f64)>", into = "Vec<(usize, f64)>")]
pub struct SeqVector {
    entries: Vec<(usize, f64)>,
}

impl SeqVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds a vector from `(index, value)` pairs in any order.
    ///
    /// Rejects index 0, repeated indices and non-finite values; zeros are dropped.
    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Result<Self> {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(i, _)| i);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(FrameError::InvalidSequence(format!(
                    "index {} appears twice",
                    w[0].0
                )));
            }
        }
        if entries.iter().any(|&(i, _)| i == 0) {
            return Err(FrameError::InvalidSequence("indices start at 1".into()));
        }
        if entries.iter().any(|&(_, v)| !v.is_finite()) {
            return Err(FrameError::NonFinite("sequence entries"));
        }
        entries.retain(|&(_, v)| v != 0.0);
        Ok(Self { entries })
    }

    /// `values[i]` becomes the entry at index `i + 1`.
    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i + 1, *v))
            .collect();
        Self { entries }
    }

    /// The unit vector `e_n`.
    pub fn basis(n: usize) -> Self {
        assert!(n >= 1, "sequence indices start at 1");
        Self {
            entries: vec![(n, 1.0)],
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest index in the support, 0 for the zero vector.
    pub fn max_index(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i)
    }

    pub fn get(&self, n: usize) -> f64 {
        self.entries
            .binary_search_by_key(&n, |&(i, _)| i)
            .map_or(0.0, |k| self.entries[k].1)
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        Ok(power_sum_norm(self.entries.iter().map(|&(_, v)| v), p))
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, v)| v.abs())
            .fold(0.0, |a, b| a + b)
    }

    pub fn scaled(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self::zero();
        }
        Self {
            entries: self.entries.iter().map(|&(i, v)| (i, c * v)).collect(),
        }
    }

    /// `self + c * other`, merged in index order.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (
            self.entries.iter().peekable(),
            other.entries.iter().peekable(),
        );
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(&&(i, x)), Some(&&(j, y))) => {
                    if i < j {
                        a.next();
                        (i, x)
                    } else if j < i {
                        b.next();
                        (j, c * y)
                    } else {
                        a.next();
                        b.next();
                        (i, x + c * y)
                    }
                }
                (Some(&&(i, x)), None) => {
                    a.next();
                    (i, x)
                }
                (None, Some(&&(j, y))) => {
                    b.next();
                    (j, c * y)
                }
                (None, None) => break,
            };
            if next.1 != 0.0 {
                out.push(next);
            }
        }
        Self { entries: out }
    }

    /// Keeps only indices `≤ n`.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|&(i, _)| i <= n)
                .collect(),
        }
    }

    /// Dense values for indices `1..=len`.
    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(i, v) in &self.entries {
            if i <= len {
                out[i - 1] = v;
            }
        }
        out
    }
}

impl TryFrom<Vec<(usize, f64)>> for SeqVector {
    type Error = FrameError;

    fn try_from(pairs: Vec<(usize, f64)>) -> Result<Self> {
        Self::from_pairs(pairs)
    }
}

impl From<SeqVector> for Vec<(usize, f64)> {
    fn from(v: SeqVector) -> Self {
        v.entries
    }
}

/// A bounded sequence `μ_1, …, μ_L, c, c, c, …`.
///
/// Trailing prefix values equal to the tail are dropped, so equal sequences
/// compare equal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDualSeq")]
pub struct DualSeq {
    prefix: Vec<f64>,
    tail: f64,
}

#[derive(Deserialize)]
struct RawDualSeq {
    prefix: Vec<f64>,
    tail: f64,
}

impl TryFrom<RawDualSeq> for DualSeq {
    type Error = FrameError;

    fn try_from(raw: RawDualSeq) -> Result<Self> {
        if raw.prefix.iter().any(|v| !v.is_finite()) || !raw.tail.is_finite() {
            return Err(FrameError::NonFinite("bounded sequence"));
        }
        Ok(Self::new(raw.prefix, raw.tail))
    }
}

impl DualSeq {
    pub fn new(mut prefix: Vec<f64>, tail: f64) -> Self {
        while prefix.last() == Some(&tail) {
            prefix.pop();
        }
        Self { prefix, tail }
    }

    pub fn zero() -> Self {
        Self::new(Vec::new(), 0.0)
    }

    /// The constant sequence `(c, c, …)`.
    pub fn constant(c: f64) -> Self {
        Self::new(Vec::new(), c)
    }

    /// The coordinate functional `u_n*`.
    pub fn coordinate(n: usize) -> Self {
        assert!(n >= 1, "sequence indices start at 1");
        let mut prefix = vec![0.0; n];
        prefix[n - 1] = 1.0;
        Self::new(prefix, 0.0)
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn get(&self, n: usize) -> f64 {
        assert!(n >= 1, "sequence indices start at 1");
        self.prefix.get(n - 1).copied().unwrap_or(self.tail)
    }

    pub fn is_zero(&self) -> bool {
        self.tail == 0.0 && self.prefix.iter().all(|&v| v == 0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.prefix
            .iter()
            .fold(self.tail.abs(), |acc, v| acc.max(v.abs()))
    }

    /// Index at which `|μ_n|` attains the sup norm; the first tail index when
    /// only the tail attains it.
    pub fn argmax_abs(&self) -> usize {
        let sup = self.sup_norm();
        self.prefix
            .iter()
            .position(|v| v.abs() == sup)
            .map_or(self.prefix.len() + 1, |k| k + 1)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.prefix.iter().map(|v| c * v).collect(), c * self.tail)
    }

    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        let len = self.prefix.len().max(other.prefix.len());
        let prefix = (1..=len).map(|n| self.get(n) + c * other.get(n)).collect();
        Self::new(prefix, self.tail + c * other.tail)
    }
}

pub fn lp_norm(v: &SeqVector, p: f64) -> Result<f64> {
    v.lp_norm(p)
}

pub fn linf_norm(mu: &DualSeq) -> f64 {
    mu.sup_norm()
}

/// `Σ μ_n λ_n`, the action of `μ ∈ ℓ^∞` on `λ ∈ ℓ^1`.
pub fn pairing_psi(mu: &DualSeq, lambda: &SeqVector) -> f64 {
    lambda
        .entries()
        .iter()
        .map(|&(n, v)| mu.get(n) * v)
        .fold(0.0, |a, b| a + b)
}

// ---------------------------------------------------------------------------
// Dyadic grid functions on [0, 1)
// ---------------------------------------------------------------------------

/// Piecewise-constant function on `[0,1)` with `2^level` equal cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridFunction {
    level: u32,
    coefficients: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGrid {
    level: u32,
    coefficients: Vec<f64>,
}

impl TryFrom<RawGrid> for GridFunction {
    type Error = FrameError;

    fn try_from(raw: RawGrid) -> Result<Self> {
        Self::new(raw.level, raw.coefficients)
    }
}

fn check_level(level: u32) -> Result<()> {
    if level > MAX_LEVEL {
        Err(FrameError::LevelTooLarge(level))
    } else {
        Ok(())
    }
}

impl GridFunction {
    pub fn new(level: u32, coefficients: Vec<f64>) -> Result<Self> {
        check_level(level)?;
        let expected = 1usize << level;
        if coefficients.len() != expected {
            return Err(FrameError::CoefficientCount {
                level,
                expected,
                found: coefficients.len(),
            });
        }
        if coefficients.iter().any(|v| !v.is_finite()) {
            return Err(FrameError::NonFinite("grid coefficients"));
        }
        Ok(Self {
            level,
            coefficients,
        })
    }

    pub fn constant(level: u32, c: f64) -> Result<Self> {
        check_level(level)?;
        Self::new(level, vec![c; 1 << level])
    }

    pub fn zero(level: u32) -> Result<Self> {
        Self::constant(level, 0.0)
    }

    /// Samples `f` at the left endpoint of every cell.
    pub fn from_fn(level: u32, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_level(level)?;
        let width = cell_width(level);
        Self::new(
            level,
            (0..1usize << level).map(|k| f(k as f64 * width)).collect(),
        )
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&v| v == 0.0)
    }

    /// Value at `t ∈ [0, 1)`; 0 at `t = 1` and outside.
    pub fn eval(&self, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        let k = ((t * self.coefficients.len() as f64) as usize).min(self.coefficients.len() - 1);
        self.coefficients[k]
    }

    /// Same function represented on the finer grid `level`.
    pub fn refine(&self, level: u32) -> Result<Self> {
        check_level(level)?;
        if level < self.level {
            return Err(FrameError::CoarsenRefused {
                from: self.level,
                to: level,
            });
        }
        let rep = 1usize << (level - self.level);
        let coefficients = self
            .coefficients
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, rep))
            .collect();
        Ok(Self {
            level,
            coefficients,
        })
    }

    pub(crate) fn refined_to(&self, level: u32) -> std::borrow::Cow<'_, Self> {
        if level == self.level {
            std::borrow::Cow::Borrowed(self)
        } else {
            std::borrow::Cow::Owned(
                self.refine(level)
                    .expect("refinement level checked by caller"),
            )
        }
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        let width = cell_width(self.level);
        let norm = if p == 1.0 {
            self.coefficients
                .iter()
                .map(|v| v.abs())
                .fold(0.0, |a, b| a + b)
                * width
        } else if p == 2.0 {
            (self
                .coefficients
                .iter()
                .map(|v| v * v)
                .fold(0.0, |a, b| a + b)
                * width)
                .sqrt()
        } else {
            (self
                .coefficients
                .iter()
                .map(|v| v.abs().powf(p))
                .fold(0.0, |a, b| a + b)
                * width)
                .powf(1.0 / p)
        };
        Ok(norm)
    }

    pub fn sup_norm(&self) -> f64 {
        self.coefficients
            .iter()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            level: self.level,
            coefficients: self.coefficients.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + c * other` on the finer of the two grids.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        let level = self.level.max(other.level);
        let mut out = self.refined_to(level).into_owned();
        let other = other.refined_to(level);
        for (a, b) in out.coefficients.iter_mut().zip(other.coefficients.iter()) {
            *a += c * b;
        }
        out
    }

    /// In-place `self += c * other`; `other` must not be finer than `self`.
    pub(crate) fn accumulate(&mut self, c: f64, other: &Self) {
        if other.level > self.level {
            *self = self.add_scaled(c, other);
            return;
        }
        let rep = 1usize << (self.level - other.level);
        for (k, a) in self.coefficients.iter_mut().enumerate() {
            *a += c * other.coefficients[k / rep];
        }
    }

    /// Unit vector of `L_{p*}` norming `self` in `L_p`:
    /// `sign(f)|f|^{p-1} / ‖f‖_p^{p-1}`. Zero maps to zero.
    pub fn norming_functional(&self, p: f64) -> Result<Self> {
        let norm = self.lp_norm(p)?;
        if norm == 0.0 {
            return Ok(self.scaled(0.0));
        }
        let coefficients = self
            .coefficients
            .iter()
            .map(|&v| {
                let u = v / norm;
                if p == 2.0 {
                    u
                } else {
                    u.signum() * u.abs().powf(p - 1.0)
                }
            })
            .collect();
        Ok(Self {
            level: self.level,
            coefficients,
        })
    }
}

pub(crate) fn cell_width(level: u32) -> f64 {
    (-(level as f64)).exp2()
}

pub fn grid_lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    f.lp_norm(p)
}

/// `∫_0^1 f g dx`, computed exactly on the common refinement.
pub fn pairing_phi(fdual: &GridFunction, g: &GridFunction) -> f64 {
    let level = fdual.level.max(g.level);
    let rf = 1usize << (level - fdual.level);
    let rg = 1usize << (level - g.level);
    let sum: f64 = if rf == 1 && rg == 1 {
        fdual
            .coefficients
            .iter()
            .zip(&g.coefficients)
            .map(|(a, b)| a * b)
            .fold(0.0, |a, b| a + b)
    } else {
        (0..1usize << level)
            .map(|k| fdual.coefficients[k / rf] * g.coefficients[k / rg])
            .fold(0.0, |a, b| a + b)
    };
    sum * cell_width(level)
}

// ---------------------------------------------------------------------------
// Amalgam functions on R
// ---------------------------------------------------------------------------

/// Function on ℝ supported in `[lo, hi + 1)`, stored as one grid function per
/// unit cell `[m, m + 1)` shifted to `[0, 1)`. All cells share one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAmalgam")]
pub struct AmalgamFunction {
    window: (i64, i64),
    cells: Vec<GridFunction>,
}

#[derive(Deserialize)]
struct RawAmalgam {
    window: (i64, i64),
    cells: Vec<GridFunction>,
}

impl TryFrom<RawAmalgam> for AmalgamFunction {
    type Error = FrameError;

    fn try_from(raw: RawAmalgam) -> Result<Self> {
        Self::new(raw.window, raw.cells)
    }
}

pub(crate) fn check_window(window: (i64, i64)) -> Result<()> {
    let (lo, hi) = window;
    if lo > hi {
        return Err(FrameError::InvalidWindow {
            lo,
            hi,
            reason: "lower end exceeds upper end".into(),
        });
    }
    if hi - lo >= 1 << 20 {
        return Err(FrameError::InvalidWindow {
            lo,
            hi,
            reason: "window too wide".into(),
        });
    }
    Ok(())
}

impl AmalgamFunction {
    /// Cells are listed for `m = lo, lo + 1, …, hi`; coarser cells are refined
    /// to the finest level present.
    pub fn new(window: (i64, i64), cells: Vec<GridFunction>) -> Result<Self> {
        check_window(window)?;
        let expected = (window.1 - window.0 + 1) as usize;
        if cells.len() != expected {
            return Err(FrameError::InvalidWindow {
                lo: window.0,
                hi: window.1,
                reason: format!("expected {expected} cells, got {}", cells.len()),
            });
        }
        let level = cells.iter().map(GridFunction::level).max().unwrap_or(0);
        let cells = cells
            .into_iter()
            .map(|c| c.refine(level))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { window, cells })
    }

    pub fn zero(window: (i64, i64), level: u32) -> Result<Self> {
        check_window(window)?;
        let zero = GridFunction::zero(level)?;
        Ok(Self {
            window,
            cells: vec![zero; (window.1 - window.0 + 1) as usize],
        })
    }

    /// Function equal to `cell` (shifted) on `[m, m + 1)` and zero elsewhere.
    pub fn single(m: i64, cell: GridFunction) -> Self {
        Self {
            window: (m, m),
            cells: vec![cell],
        }
    }

    /// Indicator of the unit cell `[m, m + 1)`.
    pub fn chi(m: i64, level: u32) -> Result<Self> {
        Ok(Self::single(m, GridFunction::constant(level, 1.0)?))
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    pub fn level(&self) -> u32 {
        self.cells[0].level()
    }

    pub fn cells(&self) -> &[GridFunction] {
        &self.cells
    }

    pub fn cell(&self, m: i64) -> Option<&GridFunction> {
        if m < self.window.0 || m > self.window.1 {
            None
        } else {
            self.cells.get((m - self.window.0) as usize)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(GridFunction::is_zero)
    }

    /// Restriction to the window `[lo, hi]`, zero-padded where needed.
    pub fn restricted(&self, window: (i64, i64)) -> Result<Self> {
        check_window(window)?;
        let zero = GridFunction::zero(self.level())?;
        let cells = (window.0..=window.1)
            .map(|m| self.cell(m).cloned().unwrap_or_else(|| zero.clone()))
            .collect();
        Ok(Self { window, cells })
    }

    /// `ℓ^q` norm of the per-cell `L_p` norms.
    pub fn norm(&self, p: f64, q: f64) -> Result<f64> {
        check_open_exponent(p)?;
        check_open_exponent(q)?;
        let norms = self
            .cells
            .iter()
            .map(|c| c.lp_norm(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(power_sum_norm(norms.into_iter(), q))
    }

    /// `T_a f(x) = f(x - a)` for integer `a`.
    pub fn translate(&self, a: i64) -> Self {
        Self {
            window: (self.window.0 + a, self.window.1 + a),
            cells: self.cells.clone(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            window: self.window,
            cells: self.cells.iter().map(|g| g.scaled(c)).collect(),
        }
    }

    /// `self + c * other` over the union of both windows.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        let window = (
            self.window.0.min(other.window.0),
            self.window.1.max(other.window.1),
        );
        let level = self.level().max(other.level());
        let cells = (window.0..=window.1)
            .map(|m| {
                let mut cell = match self.cell(m) {
                    Some(g) => g.refined_to(level).into_owned(),
                    None => GridFunction::zero(level).expect("level already validated"),
                };
                if let Some(g) = other.cell(m) {
                    cell.accumulate(c, g);
                }
                cell
            })
            .collect();
        Self { window, cells }
    }

    /// In-place `self += c * other`, falling back to [`Self::add_scaled`]
    /// when `other` reaches outside the window or is finer.
    pub(crate) fn accumulate(&mut self, c: f64, other: &Self) {
        let inside = other.window.0 >= self.window.0 && other.window.1 <= self.window.1;
        if !inside || other.level() > self.level() {
            *self = self.add_scaled(c, other);
            return;
        }
        for (i, cell) in other.cells.iter().enumerate() {
            let m = other.window.0 + i as i64;
            self.cells[(m - self.window.0) as usize].accumulate(c, cell);
        }
    }

    /// Unit vector of `(L_{p*}, ℓ^{q*})` norming `self` in `(L_p, ℓ^q)`.
    pub fn norming_functional(&self, p: f64, q: f64) -> Result<Self> {
        let total = self.norm(p, q)?;
        if total == 0.0 {
            return Ok(self.scaled(0.0));
        }
        let cells = self
            .cells
            .iter()
            .map(|cell| {
                let a = cell.lp_norm(p)? / total;
                let weight = if q == 2.0 { a } else { a.powf(q - 1.0) };
                Ok(cell.norming_functional(p)?.scaled(weight))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            window: self.window,
            cells,
        })
    }
}

pub fn amalgam_norm(f: &AmalgamFunction, p: f64, q: f64) -> Result<f64> {
    f.norm(p, q)
}

/// `Σ_m ∫_m^{m+1} f g`, over the cells both functions share.
pub fn pairing_phi_pq(fdual: &AmalgamFunction, g: &AmalgamFunction) -> f64 {
    let lo = fdual.window.0.max(g.window.0);
    let hi = fdual.window.1.min(g.window.1);
    (lo..=hi)
        .map(|m| match (fdual.cell(m), g.cell(m)) {
            (Some(a), Some(b)) => pairing_phi(a, b),
            _ => 0.0,
        })
        .fold(0.0, |a, b| a + b)
}

pub fn translate(f: &AmalgamFunction, a: i64) -> AmalgamFunction {
    f.translate(a)
}

/// Zero extension of `f` from `[0, 1]` to ℝ.
pub fn embed_tilde(f: &GridFunction) -> AmalgamFunction {
    AmalgamFunction::single(0, f.clone())
}
