//! Frames, expansions, besselian sums and the frame-level probes.
//!
//! Every series is truncated explicitly: operations take the number `N` of
//! leading ranks they may use.

mod constant;
mod probes;
mod report;
mod space;

use std::fmt;
use std::sync::Arc;

use crate::error::{FrameError, Result};
use crate::spaces::SeqVector;

pub(crate) use constant::estimate_schedule;
pub use constant::{
    candidate_pairs, duality_constant_check, estimate_frame_constant, sample_rng, sample_unit_pair,
    sampling_horizon, DEFAULT_HORIZON,
};
pub use probes::{
    boundedly_complete_tail, reflexivity_probe, shrinking_tail, unconditional_deviation,
    ProbeConfig, UnconditionalProbe, Verdict,
};
pub(crate) use report::CSV_HEADER;
pub use report::{round_significant, FrameReport, ProbeResult, SIGNIFICANT_DIGITS};
pub use space::{Element, ElementKind, Space};

/// Source of the pairs `(a_n, b_n*)` of a frame.
///
/// Only `space`, `rank_limit`, `pair` and `dual` are required; the bulk
/// methods have generic defaults built on `pair` and may be overridden with
/// faster routes that must agree with the defaults.
pub trait FrameGenerator: Send + Sync + fmt::Debug {
    fn space(&self) -> Space;

    /// Largest rank with a representable pair, `None` when every rank is.
    fn rank_limit(&self) -> Option<usize>;

    /// The pair at `rank ≥ 1`; callers have already validated the rank.
    fn pair(&self, rank: usize) -> Result<(Element, Element)>;

    /// Generator of the dual pair `((b_n*, J(a_n)))`.
    fn dual(&self) -> Result<Arc<dyn FrameGenerator>>;

    /// Rank after which every remaining pair is zero, when known.
    fn covering_rank(&self) -> Option<usize> {
        self.rank_limit()
    }

    /// `(b_n*(x))_{n ≤ count}`.
    fn analysis(&self, x: &Element, count: usize) -> Result<Vec<f64>> {
        let space = self.space();
        (1..=count)
            .map(|n| {
                let (_, b) = self.pair(n)?;
                space.pair(&b, x)
            })
            .collect()
    }

    /// `(x*(a_n))_{n ≤ count}`.
    fn testing(&self, xs: &Element, count: usize) -> Result<Vec<f64>> {
        let space = self.space();
        (1..=count)
            .map(|n| {
                let (a, _) = self.pair(n)?;
                space.pair(xs, &a)
            })
            .collect()
    }

    /// `Σ c_n a_n` over the given coefficients.
    fn synthesize(&self, coefs: &[f64]) -> Result<Element> {
        let mut acc = self.space().zero();
        for (n, &c) in coefs.iter().enumerate() {
            if c != 0.0 {
                let (a, _) = self.pair(n + 1)?;
                acc.accumulate(c, &a)?;
            }
        }
        Ok(acc)
    }

    /// `Σ c_n b_n*` over the given coefficients.
    fn synthesize_dual(&self, coefs: &[f64]) -> Result<Element> {
        let mut acc = self.space().dual_zero();
        for (n, &c) in coefs.iter().enumerate() {
            if c != 0.0 {
                let (_, b) = self.pair(n + 1)?;
                acc.accumulate(c, &b)?;
            }
        }
        Ok(acc)
    }
}

/// A labeled, immutable frame.
#[derive(Clone)]
pub struct Frame {
    label: String,
    generator: Arc<dyn FrameGenerator>,
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Frame")
            .field("label", &self.label)
            .field("space", &self.space())
            .finish()
    }
}

impl Frame {
    pub fn new(label: impl Into<String>, generator: Arc<dyn FrameGenerator>) -> Self {
        Self {
            label: label.into(),
            generator,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn space(&self) -> Space {
        self.generator.space()
    }

    pub fn generator(&self) -> &Arc<dyn FrameGenerator> {
        &self.generator
    }

    pub fn rank_limit(&self) -> Option<usize> {
        self.generator.rank_limit()
    }

    pub fn covering_rank(&self) -> Option<usize> {
        self.generator.covering_rank()
    }

    fn check_rank(&self, rank: usize) -> Result<()> {
        if rank == 0 {
            return Err(FrameError::RankZero);
        }
        self.check_truncation(rank)
    }

    pub(crate) fn check_truncation(&self, n: usize) -> Result<()> {
        match self.rank_limit() {
            Some(limit) if n > limit => Err(FrameError::RankOutOfRange {
                rank: n,
                limit,
                label: self.label.clone(),
            }),
            _ => Ok(()),
        }
    }

    /// The pair `(a_n, b_n*)`.
    pub fn pair(&self, rank: usize) -> Result<(Element, Element)> {
        self.check_rank(rank)?;
        self.generator.pair(rank)
    }

    pub(crate) fn analysis(&self, x: &Element, n: usize) -> Result<Vec<f64>> {
        self.space().check_primal(x)?;
        self.check_truncation(n)?;
        self.generator.analysis(x, n)
    }

    pub(crate) fn testing(&self, xs: &Element, n: usize) -> Result<Vec<f64>> {
        self.space().check_dual(xs)?;
        self.check_truncation(n)?;
        self.generator.testing(xs, n)
    }

    pub(crate) fn synthesize(&self, coefs: &[f64]) -> Result<Element> {
        self.check_truncation(coefs.len())?;
        self.generator.synthesize(coefs)
    }

    pub(crate) fn synthesize_dual(&self, coefs: &[f64]) -> Result<Element> {
        self.check_truncation(coefs.len())?;
        self.generator.synthesize_dual(coefs)
    }

    /// Number of zero pairs among the first `n` ranks.
    pub fn zero_pairs(&self, n: usize) -> Result<usize> {
        let mut count = 0;
        for rank in 1..=n {
            let (a, b) = self.pair(rank)?;
            if a.is_zero() || b.is_zero() {
                count += 1;
            }
        }
        Ok(count)
    }
}

/// Label of the dual frame: a trailing `*` is toggled.
pub(crate) fn dual_label(label: &str) -> String {
    match label.strip_suffix('*') {
        Some(base) => base.to_string(),
        None => format!("{label}*"),
    }
}

/// `b_n*(x)`.
pub fn analysis_coefficient(frame: &Frame, n: usize, x: &Element) -> Result<f64> {
    frame.space().check_primal(x)?;
    let (_, b) = frame.pair(n)?;
    frame.space().pair(&b, x)
}

/// `S_N x = Σ_{n ≤ N} b_n*(x) a_n`.
pub fn synthesis_partial(frame: &Frame, x: &Element, n: usize) -> Result<Element> {
    let coefs = frame.analysis(x, n)?;
    frame.synthesize(&coefs)
}

/// The first `N` entries of `(b_n*(x) x*(a_n))_n`.
pub fn coefficient_sequence(
    frame: &Frame,
    x: &Element,
    xs: &Element,
    n: usize,
) -> Result<SeqVector> {
    let c = frame.analysis(x, n)?;
    let d = frame.testing(xs, n)?;
    let products: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a * b).collect();
    Ok(SeqVector::from_dense(&products))
}

/// `Σ_{n ≤ N} |b_n*(x)| |x*(a_n)|`.
pub fn besselian_sum(frame: &Frame, x: &Element, xs: &Element, n: usize) -> Result<f64> {
    let c = frame.analysis(x, n)?;
    let d = frame.testing(xs, n)?;
    Ok(besselian_from_coefficients(&c, &d))
}

pub(crate) fn besselian_from_coefficients(c: &[f64], d: &[f64]) -> f64 {
    c.iter()
        .zip(d)
        .map(|(a, b)| (a * b).abs())
        .fold(0.0, |s, t| s + t)
}

/// The dual pair `((b_n*, J(a_n)))` acting on the dual space.
pub fn dual_frame(frame: &Frame) -> Result<Frame> {
    let generator = frame.generator.dual()?;
    Ok(Frame::new(dual_label(&frame.label), generator))
}

/// The frame with `a_n` replaced by `c a_n` and `b_n*` by `b_n* / c`.
pub fn rescaled_frame(frame: &Frame, c: f64) -> Result<Frame> {
    if c == 0.0 || !c.is_finite() {
        return Err(FrameError::InvalidExperiment(format!(
            "rescaling factor must be finite and nonzero, got {c}"
        )));
    }
    Ok(Frame::new(
        format!("{}~x{c}", frame.label),
        Arc::new(Rescaled {
            inner: frame.generator.clone(),
            factor: c,
        }),
    ))
}

/// Frame over `space` whose pairs are all zero.
pub fn zero_frame(label: impl Into<String>, space: Space, rank_limit: Option<usize>) -> Frame {
    Frame::new(label, Arc::new(ZeroPairs { space, rank_limit }))
}

#[derive(Debug)]
struct Rescaled {
    inner: Arc<dyn FrameGenerator>,
    factor: f64,
}

impl FrameGenerator for Rescaled {
    fn space(&self) -> Space {
        self.inner.space()
    }

    fn rank_limit(&self) -> Option<usize> {
        self.inner.rank_limit()
    }

    fn covering_rank(&self) -> Option<usize> {
        self.inner.covering_rank()
    }

    fn pair(&self, rank: usize) -> Result<(Element, Element)> {
        let (a, b) = self.inner.pair(rank)?;
        Ok((a.scaled(self.factor), b.scaled(1.0 / self.factor)))
    }

    fn dual(&self) -> Result<Arc<dyn FrameGenerator>> {
        Ok(Arc::new(Rescaled {
            inner: self.inner.dual()?,
            factor: 1.0 / self.factor,
        }))
    }

    fn analysis(&self, x: &Element, count: usize) -> Result<Vec<f64>> {
        let c = self.inner.analysis(x, count)?;
        Ok(c.into_iter().map(|v| v / self.factor).collect())
    }

    fn testing(&self, xs: &Element, count: usize) -> Result<Vec<f64>> {
        let d = self.inner.testing(xs, count)?;
        Ok(d.into_iter().map(|v| v * self.factor).collect())
    }

    fn synthesize(&self, coefs: &[f64]) -> Result<Element> {
        let scaled: Vec<f64> = coefs.iter().map(|v| v * self.factor).collect();
        self.inner.synthesize(&scaled)
    }

    fn synthesize_dual(&self, coefs: &[f64]) -> Result<Element> {
        let scaled: Vec<f64> = coefs.iter().map(|v| v / self.factor).collect();
        self.inner.synthesize_dual(&scaled)
    }
}

#[derive(Debug)]
struct ZeroPairs {
    space: Space,
    rank_limit: Option<usize>,
}

impl FrameGenerator for ZeroPairs {
    fn space(&self) -> Space {
        self.space
    }

    fn rank_limit(&self) -> Option<usize> {
        self.rank_limit
    }

    fn pair(&self, _rank: usize) -> Result<(Element, Element)> {
        Ok((self.space.zero(), self.space.dual_zero()))
    }

    fn dual(&self) -> Result<Arc<dyn FrameGenerator>> {
        Ok(Arc::new(ZeroPairs {
            space: self.space.dual()?,
            rank_limit: self.rank_limit,
        }))
    }

    fn analysis(&self, _x: &Element, count: usize) -> Result<Vec<f64>> {
        Ok(vec![0.0; count])
    }

    fn testing(&self, _xs: &Element, count: usize) -> Result<Vec<f64>> {
        Ok(vec![0.0; count])
    }
}
