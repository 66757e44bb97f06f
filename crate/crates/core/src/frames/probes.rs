//! Truncation-scale evidence for unconditional convergence, shrinking and
//! bounded completeness. Probes report decay or a witness, never a proof.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constant::{sample_rng, sampling_horizon, DEFAULT_HORIZON};
use super::report::{FrameReport, ProbeResult};
use super::{Element, Frame, Space};
use crate::error::{FrameError, Result};
use crate::spaces::DualSeq;

const PERMUTATION_STREAM: u64 = 5 << 40;
const PROBE_DUAL_STREAM: u64 = 3 << 40;
const PROBE_PRIMAL_STREAM: u64 = 4 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnconditionalProbe {
    /// `max_π ‖S_{π,N} x − S_N x‖`.
    pub permutation_deviation: f64,
    /// `max_{π,ε} ‖Σ ε_n b_{π(n)}*(x) a_{π(n)}‖`.
    pub signed_sum_norm: f64,
}

/// Compares `S_N x` with the same terms summed in `trials` random orders, and
/// records the largest norm of the randomly signed sums.
pub fn unconditional_deviation(
    frame: &Frame,
    x: &Element,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<UnconditionalProbe> {
    if trials == 0 {
        return Err(FrameError::InvalidExperiment(
            "at least one trial is required".into(),
        ));
    }
    let space = frame.space();
    let coefs = frame.analysis(x, n)?;
    let reference = frame.synthesize(&coefs)?;
    let terms = (1..=n)
        .map(|k| Ok(frame.pair(k)?.0))
        .collect::<Result<Vec<_>>>()?;

    let per_trial = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = sample_rng(seed, PERMUTATION_STREAM | t);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let signs: Vec<f64> = (0..n)
                .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect();
            let mut permuted = space.zero();
            let mut signed = space.zero();
            for (&i, &s) in order.iter().zip(&signs) {
                permuted.accumulate(coefs[i], &terms[i])?;
                signed.accumulate(s * coefs[i], &terms[i])?;
            }
            let deviation = space.norm(&permuted.add_scaled(-1.0, &reference)?)?;
            Ok((deviation, space.norm(&signed)?))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(per_trial.into_iter().fold(
        UnconditionalProbe {
            permutation_deviation: 0.0,
            signed_sum_norm: 0.0,
        },
        |acc, (d, s)| UnconditionalProbe {
            permutation_deviation: acc.permutation_deviation.max(d),
            signed_sum_norm: acc.signed_sum_norm.max(s),
        },
    ))
}

/// Upper end of a tail, capped at the representable ranks. Ranks past the
/// cap only pair with grid functions finer than the frame's level.
fn tail_end(frame: &Frame, n: usize, m: usize) -> Result<usize> {
    if m <= n {
        return Err(FrameError::InvalidTruncation(format!(
            "tail horizon {m} must exceed truncation {n}"
        )));
    }
    Ok(frame.rank_limit().map_or(m, |limit| m.min(limit)))
}

/// `‖Σ_{N<n≤M} x*(a_n) b_n*‖` in the dual space.
pub fn shrinking_tail(frame: &Frame, xs: &Element, n: usize, m: usize) -> Result<f64> {
    frame.space().check_dual(xs)?;
    let end = tail_end(frame, n, m)?;
    if n >= end {
        return Ok(0.0);
    }
    let mut d = frame.testing(xs, end)?;
    d[..n].iter_mut().for_each(|v| *v = 0.0);
    frame.space().dual_norm(&frame.synthesize_dual(&d)?)
}

/// `‖Σ_{N<n≤M} x**(b_n*) a_n‖` for `x** = J(x)`, on reflexive spaces only.
pub fn boundedly_complete_tail(frame: &Frame, x: &Element, n: usize, m: usize) -> Result<f64> {
    let space = frame.space();
    if !space.is_reflexive() {
        return Err(FrameError::NotRepresentable(format!(
            "bidual elements of {space} have no finite representation"
        )));
    }
    space.check_primal(x)?;
    let end = tail_end(frame, n, m)?;
    if n >= end {
        return Ok(0.0);
    }
    let mut c = frame.analysis(x, end)?;
    c[..n].iter_mut().for_each(|v| *v = 0.0);
    space.norm(&frame.synthesize(&c)?)
}

/// Closed verdict vocabulary of the reflexivity probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    ConsistentWithReflexive,
    NonShrinkingWitness,
    NotBoundedlyCompleteWitness,
    Inconclusive,
    Degenerate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::ConsistentWithReflexive => "consistent with reflexive",
            Verdict::NonShrinkingWitness => "non-shrinking witness found",
            Verdict::NotBoundedlyCompleteWitness => "non-boundedly-complete witness found",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub schedule: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Tails at the last truncation must fall below this to count as decayed.
    pub decay_tolerance: f64,
    /// A unit functional whose tail stays at or above this is a witness.
    pub witness_floor: f64,
    /// Tail horizon `M`; defaults to the covering rank when known.
    pub horizon: Option<usize>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            schedule: vec![4, 16, 64, 256],
            samples: 2000,
            seed: 42,
            decay_tolerance: 1e-6,
            witness_floor: 0.5,
            horizon: None,
        }
    }
}

/// Unit functionals known to keep a non-decaying tail.
fn witness_functionals(space: &Space) -> Vec<(&'static str, Element)> {
    match space {
        Space::L1 => vec![("all-ones", Element::Bounded(DualSeq::constant(1.0)))],
        _ => Vec::new(),
    }
}

fn max_tails<F>(items: &[Element], schedule: &[usize], horizon: usize, tail: F) -> Result<Vec<f64>>
where
    F: Fn(&Element, usize, usize) -> Result<f64> + Sync,
{
    let per_item = items
        .par_iter()
        .map(|x| {
            schedule
                .iter()
                .map(|&n| tail(x, n, horizon.max(n + 1)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = vec![0.0f64; schedule.len()];
    for tails in &per_item {
        for (b, t) in best.iter_mut().zip(tails) {
            *b = b.max(*t);
        }
    }
    Ok(best)
}

/// Shrinking and bounded-completeness tails over sampled unit functionals
/// and sampled unit vectors along `config.schedule`, with a verdict.
pub fn reflexivity_probe(frame: &Frame, config: &ProbeConfig) -> Result<FrameReport> {
    if config.schedule.is_empty() || config.schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FrameError::InvalidExperiment(
            "schedule must be nonempty and strictly increasing".into(),
        ));
    }
    let space = frame.space();
    let last = *config.schedule.last().expect("nonempty schedule");
    let horizon = config.horizon.unwrap_or_else(|| {
        frame
            .covering_rank()
            .unwrap_or_else(|| DEFAULT_HORIZON.max(2 * last))
    });
    let draw_horizon = sampling_horizon(frame);

    let mut report = FrameReport::new("reflexivity", frame.label(), config.samples, config.seed);

    let span = frame.rank_limit().map_or(horizon, |l| horizon.min(l));
    let zero = frame.zero_pairs(span)?;
    if zero == span {
        report
            .flags
            .push(format!("degenerate: all {span} pairs are zero"));
    } else if zero > 0 {
        report.flags.push(format!("zero pairs: {zero} of {span}"));
    }

    let duals = (0..config.samples as u64)
        .map(|k| {
            let mut rng = sample_rng(config.seed, PROBE_DUAL_STREAM | k);
            let xs = space.random_dual(&mut rng, draw_horizon);
            let norm = space.dual_norm(&xs)?;
            Ok(if norm > 0.0 {
                xs.scaled(1.0 / norm)
            } else {
                xs
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let shrink = max_tails(&duals, &config.schedule, horizon, |xs, n, m| {
        shrinking_tail(frame, xs, n, m)
    })?;

    let mut witness_tail: Option<f64> = None;
    for (name, xs) in witness_functionals(&space) {
        let tails = max_tails(
            std::slice::from_ref(&xs),
            &config.schedule,
            horizon,
            |xs, n, m| shrinking_tail(frame, xs, n, m),
        )?;
        for (&n, &t) in config.schedule.iter().zip(&tails) {
            report.push(ProbeResult::at_least(
                format!("shrinking_tail[{name}]"),
                n,
                t,
                config.witness_floor,
            ));
        }
        let final_tail = *tails.last().expect("nonempty schedule");
        witness_tail = Some(witness_tail.map_or(final_tail, |w: f64| w.max(final_tail)));
    }

    let bounded = if space.is_reflexive() {
        let primals = (0..config.samples as u64)
            .map(|k| {
                let mut rng = sample_rng(config.seed, PROBE_PRIMAL_STREAM | k);
                let x = space.random_primal(&mut rng, draw_horizon);
                let norm = space.norm(&x)?;
                Ok(if norm > 0.0 { x.scaled(1.0 / norm) } else { x })
            })
            .collect::<Result<Vec<_>>>()?;
        Some(max_tails(
            &primals,
            &config.schedule,
            horizon,
            |x, n, m| boundedly_complete_tail(frame, x, n, m),
        )?)
    } else {
        report
            .flags
            .push("boundedly-complete leg: not representable".to_string());
        None
    };

    let shrink_final = *shrink.last().expect("nonempty schedule");
    let bounded_final = bounded
        .as_ref()
        .map(|b| *b.last().expect("nonempty schedule"));
    let witness = witness_tail.is_some_and(|t| t >= config.witness_floor);

    let verdict = if zero == span {
        Verdict::Degenerate
    } else if witness || shrink_final >= config.witness_floor {
        Verdict::NonShrinkingWitness
    } else if bounded_final.is_some_and(|b| b >= config.witness_floor) {
        Verdict::NotBoundedlyCompleteWitness
    } else if shrink_final <= config.decay_tolerance
        && bounded_final.is_some_and(|b| b <= config.decay_tolerance)
    {
        Verdict::ConsistentWithReflexive
    } else {
        Verdict::Inconclusive
    };

    let decay_checked = verdict == Verdict::ConsistentWithReflexive;
    for (i, &n) in config.schedule.iter().enumerate() {
        let is_last = n == last;
        let row = |name: &str, v: f64| {
            if is_last && decay_checked {
                ProbeResult::at_most(name, n, v, config.decay_tolerance)
            } else {
                ProbeResult::info(name, n, v)
            }
        };
        report.push(row("shrinking_tail", shrink[i]));
        if let Some(b) = &bounded {
            report.push(row("boundedly_complete_tail", b[i]));
        }
    }
    report.verdict = Some(verdict.as_str().to_string());
    report.ensure_finite()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{canonical_l1_frame, haar_frame};
    use crate::frames::zero_frame;
    use crate::spaces::{GridFunction, SeqVector};

    #[test]
    fn l1_all_ones_tail_never_decays() {
        let f = canonical_l1_frame();
        let ones = Element::Bounded(DualSeq::constant(1.0));
        for (n, m) in [(0, 1), (3, 10), (100, 1000)] {
            assert_eq!(shrinking_tail(&f, &ones, n, m).unwrap(), 1.0);
        }
        let harmonic = Element::Bounded(DualSeq::new(
            (1..=64).map(|k| 1.0 / k as f64).collect(),
            0.0,
        ));
        for n in [1, 7, 30] {
            assert_eq!(
                shrinking_tail(&f, &harmonic, n, 64).unwrap(),
                1.0 / (n + 1) as f64
            );
        }
        assert!(shrinking_tail(&f, &ones, 5, 5).is_err());
    }

    #[test]
    fn haar_tails_vanish_at_full_truncation() {
        let f = haar_frame(2.0, 4).unwrap();
        let mut rng = sample_rng(11, 0);
        let g = f.space().random_dual(&mut rng, 0);
        assert!(shrinking_tail(&f, &g, 16, 32).unwrap() <= 1e-12);
        let x = f.space().random_primal(&mut rng, 0);
        assert!(boundedly_complete_tail(&f, &x, 16, 32).unwrap() <= 1e-12);
        assert_eq!(
            boundedly_complete_tail(&f, &f.space().zero(), 2, 16).unwrap(),
            0.0
        );
    }

    #[test]
    fn single_haar_term_tail() {
        let f = haar_frame(3.0, 5).unwrap();
        let (h2, _) = f.pair(2).unwrap();
        let tail = boundedly_complete_tail(&f, &h2, 1, 32).unwrap();
        approx::assert_abs_diff_eq!(tail, f.space().norm(&h2).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn bounded_completeness_rejected_on_l1() {
        let f = canonical_l1_frame();
        let x = Element::Seq(SeqVector::basis(1));
        assert!(matches!(
            boundedly_complete_tail(&f, &x, 1, 4),
            Err(FrameError::NotRepresentable(_))
        ));
    }

    #[test]
    fn permutations_do_not_move_finite_sums() {
        let f = canonical_l1_frame();
        let x = Element::Seq(SeqVector::from_dense(
            &(1..=20).map(|k| 1.0 / (k * k) as f64).collect::<Vec<_>>(),
        ));
        let probe = unconditional_deviation(&f, &x, 20, 10, 3).unwrap();
        assert!(probe.permutation_deviation <= 1e-15);
        approx::assert_abs_diff_eq!(
            probe.signed_sum_norm,
            f.space().norm(&x).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn probe_verdicts() {
        let config = ProbeConfig {
            schedule: vec![2, 8, 16],
            samples: 20,
            ..ProbeConfig::default()
        };
        let haar = reflexivity_probe(&haar_frame(2.0, 4).unwrap(), &config).unwrap();
        assert_eq!(haar.verdict.as_deref(), Some("consistent with reflexive"));
        assert!(haar.passed());

        let l1 = reflexivity_probe(&canonical_l1_frame(), &config).unwrap();
        assert_eq!(l1.verdict.as_deref(), Some("non-shrinking witness found"));
        for n in [2, 8, 16] {
            assert_eq!(l1.probe("shrinking_tail[all-ones]", n).unwrap().value, 1.0);
        }
        assert!(l1.flags.iter().any(|f| f.contains("not representable")));

        let zero = zero_frame("zero", Space::grid(2.0, 4).unwrap(), Some(16));
        let z = reflexivity_probe(&zero, &config).unwrap();
        assert_eq!(z.verdict.as_deref(), Some("degenerate"));
        assert!(z.probes.iter().all(|p| p.value == 0.0));
        assert!(z.flags.iter().any(|f| f.starts_with("degenerate")));
    }

    #[test]
    fn unconditional_probe_needs_trials() {
        let f = haar_frame(2.0, 2).unwrap();
        let x = Element::Grid(GridFunction::constant(2, 1.0).unwrap());
        assert!(unconditional_deviation(&f, &x, 4, 0, 1).is_err());
    }
}
