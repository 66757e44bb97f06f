//! Sampled lower bounds for the frame constant
//! `L = sup_{‖u‖ ≤ 1, ‖u*‖ ≤ 1} Σ |b_n*(u)| |u*(a_n)|`.
//!
//! Each estimate is the maximum over two families of unit pairs:
//! deterministic candidates (normalized frame elements with their norming
//! partners, plus the known extreme points of the sequence-space balls) and
//! seeded random pairs improved by alternating ascent. On `ℓ^1` and `ℓ^∞` a
//! sample is scored at the best `e_k` on the `ℓ^1` side, which dominates it
//! and keeps the estimate free of rounding excess. Sample `k` depends only
//! on `(seed, k)`, so estimates are independent of evaluation order and are
//! nondecreasing in both the truncation and the sample count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{besselian_from_coefficients, dual_frame, Element, Frame, Space};
use crate::error::{FrameError, Result};
use crate::spaces::{DualSeq, SeqVector};

/// Number of leading ranks random samples are drawn over when the frame has
/// no finite covering rank.
pub const DEFAULT_HORIZON: usize = 256;

const ASCENT_STEPS: usize = 32;

/// Relative gain below which the ascent stops.
const ASCENT_STALL: f64 = 1e-10;

/// Generator for stream `stream` of `seed`.
pub fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rank span random samples are drawn over.
pub fn sampling_horizon(frame: &Frame) -> usize {
    frame.covering_rank().unwrap_or(DEFAULT_HORIZON)
}

fn normalized(space: &Space, x: Element) -> Result<Element> {
    let norm = space.norm(&x)?;
    Ok(if norm > 0.0 { x.scaled(1.0 / norm) } else { x })
}

fn normalized_dual(space: &Space, xs: Element) -> Result<Element> {
    let norm = space.dual_norm(&xs)?;
    Ok(if norm > 0.0 {
        xs.scaled(1.0 / norm)
    } else {
        xs
    })
}

fn sign_or(primary: f64, fallback: f64) -> f64 {
    if primary != 0.0 {
        primary.signum()
    } else if fallback != 0.0 {
        fallback.signum()
    } else {
        1.0
    }
}

/// The `k`-th random unit pair `(u, u*)` of the estimator stream.
///
/// `u` starts as a Gaussian combination of the first ranks of the frame and
/// `u*` as its norming functional; each ascent step then replaces one side by
/// the norming partner of the sign-aligned combination of the other side's
/// coefficients, keeping the step only when the besselian sum does not drop.
pub fn sample_unit_pair(frame: &Frame, seed: u64, k: u64) -> Result<(Element, Element)> {
    let space = frame.space();
    let horizon = sampling_horizon(frame);
    let mut rng = sample_rng(seed, k);
    let raw: Vec<f64> = (0..horizon)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut u = frame.synthesize(&raw)?;
    if space.norm(&u)? == 0.0 {
        u = space.random_primal(&mut rng, horizon);
    }
    let mut u = normalized(&space, u)?;
    let mut us = space.norming_dual(&u)?;
    let mut c = frame.analysis(&u, horizon)?;
    let mut d = frame.testing(&us, horizon)?;
    let mut value = besselian_from_coefficients(&c, &d);

    for _ in 0..ASCENT_STEPS {
        let start = value;
        let weights: Vec<f64> = c
            .iter()
            .zip(&d)
            .map(|(&ci, &di)| sign_or(di, ci) * ci.abs())
            .collect();
        let w = frame.synthesize(&weights)?;
        if !w.is_zero() {
            let next = space.norming_dual(&w)?;
            let next_d = frame.testing(&next, horizon)?;
            let next_value = besselian_from_coefficients(&c, &next_d);
            if next_value >= value {
                us = next;
                d = next_d;
                value = next_value;
            }
        }

        let weights: Vec<f64> = d
            .iter()
            .zip(&c)
            .map(|(&di, &ci)| sign_or(ci, di) * di.abs())
            .collect();
        let v = frame.synthesize_dual(&weights)?;
        if !v.is_zero() {
            let next = space.norming_primal(&v)?;
            let next_c = frame.analysis(&next, horizon)?;
            let next_value = besselian_from_coefficients(&next_c, &d);
            if next_value >= value {
                u = next;
                c = next_c;
                value = next_value;
            }
        }
        if value - start <= ASCENT_STALL * value {
            break;
        }
    }
    Ok((u, us))
}

/// Deterministic unit pairs for truncation `n`, each tagged with the first
/// truncation it belongs to.
pub fn candidate_pairs(frame: &Frame, n: usize) -> Result<Vec<(usize, Element, Element)>> {
    frame.check_truncation(n)?;
    let space = frame.space();
    let mut out = Vec::new();
    for k in 1..=n {
        let (a, b) = frame.pair(k)?;
        if !a.is_zero() {
            let u = normalized(&space, a)?;
            let us = space.norming_dual(&u)?;
            out.push((k, u, us));
        }
        if !b.is_zero() {
            let us = normalized_dual(&space, b)?;
            let u = space.norming_primal(&us)?;
            out.push((k, u, us));
        }
        match space {
            Space::L1 => {
                out.push((
                    k,
                    Element::Seq(SeqVector::basis(k)),
                    Element::Bounded(DualSeq::constant(1.0)),
                ));
                out.push((
                    k,
                    Element::Seq(SeqVector::basis(k).scaled(-1.0)),
                    Element::Bounded(DualSeq::constant(-1.0)),
                ));
            }
            Space::LInf => out.push((
                k,
                Element::Bounded(DualSeq::constant(1.0)),
                Element::Seq(SeqVector::basis(k)),
            )),
            _ => {}
        }
    }
    Ok(out)
}

/// Running besselian sums `Σ_{n ≤ N}` read off at each truncation of `schedule`.
fn prefix_values(c: &[f64], d: &[f64], schedule: &[usize], from: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(schedule.len());
    let mut acc = 0.0;
    let mut upto = 0;
    for &n in schedule {
        while upto < n {
            acc += (c[upto] * d[upto]).abs();
            upto += 1;
        }
        out.push(if n >= from { acc } else { 0.0 });
    }
    out
}

/// Estimates `L̂` at every truncation of an increasing schedule, sharing the
/// sampled pairs across truncations. `extra` unit pairs join the sample set.
pub(crate) fn estimate_schedule(
    frame: &Frame,
    schedule: &[usize],
    samples: usize,
    seed: u64,
    extra: &[(Element, Element)],
) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(FrameError::InvalidExperiment(
            "sample count must be positive".into(),
        ));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FrameError::InvalidExperiment(
            "truncation schedule must be strictly increasing".into(),
        ));
    }
    let Some(&n_max) = schedule.last() else {
        return Ok(Vec::new());
    };
    frame.check_truncation(n_max)?;

    // On ℓ^1 the sum is convex in u (in u* for ℓ^∞), so its sup over the
    // ball is attained at some e_k; samples are scored at their best e_k.
    let space = frame.space();
    let reach = n_max.max(sampling_horizon(frame));
    let extreme = match space {
        Space::L1 | Space::LInf => (1..=reach)
            .map(|k| {
                let e = Element::Seq(SeqVector::basis(k));
                match space {
                    Space::L1 => frame.analysis(&e, n_max),
                    _ => frame.testing(&e, n_max),
                }
            })
            .collect::<Result<Vec<_>>>()?,
        _ => Vec::new(),
    };
    let evaluate = |from: usize, u: &Element, us: &Element| -> Result<Vec<f64>> {
        let c = frame.analysis(u, n_max)?;
        let d = frame.testing(us, n_max)?;
        Ok(prefix_values(&c, &d, schedule, from))
    };
    let evaluate_sample = |u: &Element, us: &Element| -> Result<Vec<f64>> {
        if extreme.is_empty() {
            return evaluate(1, u, us);
        }
        let fixed = match space {
            Space::L1 => frame.testing(us, n_max)?,
            _ => frame.analysis(u, n_max)?,
        };
        let mut best = vec![0.0f64; schedule.len()];
        for e in &extreme {
            for (b, v) in best.iter_mut().zip(prefix_values(e, &fixed, schedule, 1)) {
                *b = b.max(v);
            }
        }
        Ok(best)
    };

    let candidates = candidate_pairs(frame, n_max)?;
    let from_candidates = candidates
        .par_iter()
        .map(|(k, u, us)| evaluate(*k, u, us))
        .collect::<Result<Vec<_>>>()?;
    let from_samples = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let (u, us) = sample_unit_pair(frame, seed, k)?;
            evaluate_sample(&u, &us)
        })
        .collect::<Result<Vec<_>>>()?;
    let from_extra = extra
        .par_iter()
        .map(|(u, us)| evaluate_sample(u, us))
        .collect::<Result<Vec<_>>>()?;

    let mut best = vec![0.0f64; schedule.len()];
    for values in from_candidates
        .iter()
        .chain(&from_samples)
        .chain(&from_extra)
    {
        for (b, v) in best.iter_mut().zip(values) {
            *b = b.max(*v);
        }
    }
    Ok(best)
}

/// `L̂`: the largest besselian sum at truncation `n` over the candidate pairs
/// and `samples` random unit pairs. A lower bound for the truncated constant.
pub fn estimate_frame_constant(frame: &Frame, n: usize, samples: usize, seed: u64) -> Result<f64> {
    Ok(estimate_schedule(frame, &[n], samples, seed, &[])?[0])
}

/// `(L̂_F, L̂_{F*})` with identical truncation, budget and seed.
pub fn duality_constant_check(
    frame: &Frame,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let dual = dual_frame(frame)?;
    Ok((
        estimate_frame_constant(frame, n, samples, seed)?,
        estimate_frame_constant(&dual, n, samples, seed)?,
    ))
}
