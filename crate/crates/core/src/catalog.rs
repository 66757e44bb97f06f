//! The concrete frames: canonical `ℓ^1`, normalized Haar on `L_p[0,1]`, and
//! the translated amalgam frame on `(L_p, ℓ^q)`.

use std::sync::Arc;

use crate::error::{FrameError, Result};
use crate::frames::{dual_frame, zero_frame, Element, Frame, FrameGenerator, Space};
use crate::spaces::{
    check_open_exponent, check_window, conjugate_exponent, AmalgamFunction, DualSeq, GridFunction,
    SeqVector,
};

// ---------------------------------------------------------------------------
// l^1
// ---------------------------------------------------------------------------

/// `((e_n, u_n*))`, and its dual `((u_n*, J(e_n)))` acting on `ℓ^∞`.
#[derive(Debug)]
struct CanonicalSequence {
    on_dual: bool,
}

impl FrameGenerator for CanonicalSequence {
    fn space(&self) -> Space {
        if self.on_dual {
            Space::LInf
        } else {
            Space::L1
        }
    }

    fn rank_limit(&self) -> Option<usize> {
        None
    }

    fn pair(&self, rank: usize) -> Result<(Element, Element)> {
        let e = Element::Seq(SeqVector::basis(rank));
        let u = Element::Bounded(DualSeq::coordinate(rank));
        Ok(if self.on_dual { (u, e) } else { (e, u) })
    }

    fn dual(&self) -> Result<Arc<dyn FrameGenerator>> {
        if self.on_dual {
            Err(FrameError::NotRepresentable(
                "the dual of the l-infinity frame needs functionals on l-infinity".into(),
            ))
        } else {
            Ok(Arc::new(CanonicalSequence { on_dual: true }))
        }
    }

    fn analysis(&self, x: &Element, count: usize) -> Result<Vec<f64>> {
        Ok(coordinates(x, count))
    }

    fn testing(&self, xs: &Element, count: usize) -> Result<Vec<f64>> {
        Ok(coordinates(xs, count))
    }

    fn synthesize(&self, coefs: &[f64]) -> Result<Element> {
        Ok(sequence_from(coefs, !self.on_dual))
    }

    fn synthesize_dual(&self, coefs: &[f64]) -> Result<Element> {
        Ok(sequence_from(coefs, self.on_dual))
    }
}

fn coordinates(x: &Element, count: usize) -> Vec<f64> {
    match x {
        Element::Seq(v) => v.to_dense(count),
        Element::Bounded(mu) => (1..=count).map(|n| mu.get(n)).collect(),
        _ => unreachable!("kind checked by Frame"),
    }
}

fn sequence_from(coefs: &[f64], finite: bool) -> Element {
    if finite {
        Element::Seq(SeqVector::from_dense(coefs))
    } else {
        Element::Bounded(DualSeq::new(coefs.to_vec(), 0.0))
    }
}

pub fn canonical_l1_frame() -> Frame {
    Frame::new(
        "l1-canonical",
        Arc::new(CanonicalSequence { on_dual: false }),
    )
}

// ---------------------------------------------------------------------------
// Haar system
// ---------------------------------------------------------------------------

/// Rank `n` of the Haar system with its generation `m`
/// (`2^{m-1} < n ≤ 2^m` for `n ≥ 2`, and `m = 0` for `n = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HaarIndex {
    pub n: usize,
    pub m: u32,
}

impl HaarIndex {
    pub fn new(n: usize) -> Result<Self> {
        match n {
            0 => Err(FrameError::RankZero),
            1 => Ok(Self { n, m: 0 }),
            _ => Ok(Self {
                n,
                m: usize::BITS - (n - 1).leading_zeros(),
            }),
        }
    }

    /// Length of the support of `h_n`.
    pub fn support_length(&self) -> f64 {
        if self.n == 1 {
            1.0
        } else {
            (1.0 - self.m as f64).exp2()
        }
    }

    /// First cell, half-width and full width of the support, in cells of
    /// level `level ≥ m`.
    fn cells(&self, level: u32) -> (usize, usize, usize) {
        if self.n == 1 {
            let width = 1usize << level;
            return (0, width, width);
        }
        let half = 1usize << (level - self.m);
        let k = self.n - (1usize << (self.m - 1)) - 1;
        (2 * k * half, half, 2 * half)
    }
}

/// `h_n(t)` on `[0, 1]`.
pub fn haar_eval(n: usize, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(FrameError::PointOutOfRange(t));
    }
    let idx = HaarIndex::new(n)?;
    if n == 1 {
        return Ok(if t < 1.0 { 1.0 } else { 0.0 });
    }
    let scale = (idx.m as f64).exp2();
    let n = n as f64;
    let a = (2.0 * n - 2.0) / scale - 1.0;
    let b = (2.0 * n - 1.0) / scale - 1.0;
    let c = 2.0 * n / scale - 1.0;
    Ok(if a <= t && t < b {
        1.0
    } else if b <= t && t < c {
        -1.0
    } else {
        0.0
    })
}

/// `‖h_n‖_2`.
pub fn haar_l2_norm(n: usize) -> Result<f64> {
    Ok(HaarIndex::new(n)?.support_length().sqrt())
}

/// `h_n / ‖h_n‖_2` on the level-`level` grid, sampled from [`haar_eval`] at
/// cell midpoints.
pub fn normalized_haar(n: usize, level: u32) -> Result<GridFunction> {
    let idx = HaarIndex::new(n)?;
    if n > 1 << level {
        return Err(FrameError::NotRepresentable(format!(
            "h_{n} needs a grid finer than level {level}"
        )));
    }
    let norm = haar_l2_norm(idx.n)?;
    let half_cell = 0.5 * (-(level as f64)).exp2();
    GridFunction::from_fn(level, |t| {
        haar_eval(n, t + half_cell).expect("midpoints lie in [0,1)") / norm
    })
}

#[derive(Debug)]
struct HaarSystem {
    p: f64,
    level: u32,
}

impl HaarSystem {
    /// `±2^{(m-1)/2}`, the nonzero values of the normalized `h_n`.
    fn amplitude(idx: &HaarIndex) -> f64 {
        if idx.n == 1 {
            1.0
        } else {
            ((idx.m as f64 - 1.0) / 2.0).exp2()
        }
    }

    fn transform(&self, x: &Element, count: usize) -> Result<Vec<f64>> {
        let Element::Grid(g) = x else {
            unreachable!("kind checked by Frame")
        };
        let level = g.level().max(self.level);
        let g = g.refined_to(level);
        let v = g.coefficients();
        let width = (-(level as f64)).exp2();
        (1..=count)
            .map(|n| {
                let idx = HaarIndex::new(n)?;
                let (start, half, full) = idx.cells(level);
                if n == 1 {
                    return Ok(v.iter().sum::<f64>() * width);
                }
                let pos: f64 = v[start..start + half].iter().sum();
                let neg: f64 = v[start + half..start + full].iter().sum();
                Ok(Self::amplitude(&idx) * (pos - neg) * width)
            })
            .collect()
    }

    fn combine(&self, coefs: &[f64]) -> Result<Element> {
        let mut out = vec![0.0; 1 << self.level];
        for (i, &c) in coefs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let idx = HaarIndex::new(i + 1)?;
            let (start, half, full) = idx.cells(self.level);
            let v = c * Self::amplitude(&idx);
            if idx.n == 1 {
                out.iter_mut().for_each(|o| *o += v);
                continue;
            }
            out[start..start + half].iter_mut().for_each(|o| *o += v);
            out[start + half..start + full]
                .iter_mut()
                .for_each(|o| *o -= v);
        }
        Ok(Element::Grid(GridFunction::new(self.level, out)?))
    }
}

impl FrameGenerator for HaarSystem {
    fn space(&self) -> Space {
        Space::Grid {
            p: self.p,
            level: self.level,
        }
    }

    fn rank_limit(&self) -> Option<usize> {
        Some(1 << self.level)
    }

    fn pair(&self, rank: usize) -> Result<(Element, Element)> {
        let h = Element::Grid(normalized_haar(rank, self.level)?);
        Ok((h.clone(), h))
    }

    fn dual(&self) -> Result<Arc<dyn FrameGenerator>> {
        Ok(Arc::new(HaarSystem {
            p: conjugate_exponent(self.p),
            level: self.level,
        }))
    }

    fn analysis(&self, x: &Element, count: usize) -> Result<Vec<f64>> {
        self.transform(x, count)
    }

    fn testing(&self, xs: &Element, count: usize) -> Result<Vec<f64>> {
        self.transform(xs, count)
    }

    fn synthesize(&self, coefs: &[f64]) -> Result<Element> {
        self.combine(coefs)
    }

    fn synthesize_dual(&self, coefs: &[f64]) -> Result<Element> {
        self.combine(coefs)
    }
}

/// `((h_n/‖h_n‖_2, Φ_p(h_n/‖h_n‖_2)))` on the level-`level` grid, ranks
/// `1..=2^level`.
pub fn haar_frame(p: f64, level: u32) -> Result<Frame> {
    check_open_exponent(p)?;
    if level == 0 {
        return Err(FrameError::InvalidLabel {
            label: format!("haar:p={p}:J=0"),
            reason: "the Haar frame needs J >= 1".into(),
        });
    }
    Space::grid(p, level)?;
    Ok(Frame::new(
        format!("haar:p={p}:J={level}"),
        Arc::new(HaarSystem { p, level }),
    ))
}

// ---------------------------------------------------------------------------
// Z x N* enumeration and the amalgam frame
// ---------------------------------------------------------------------------

/// Translation `m` and base rank `n` of an amalgam frame element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AmalgamIndex {
    pub m: i64,
    pub n: usize,
}

/// Diagonal order on `ℤ × ℕ*`: blocks of constant `|m| + n = s`, and within
/// a block `m` ascending. Block `s` holds `2s - 1` indices, so ranks up to
/// `s²` exhaust blocks `1..=s`.
pub fn enumerate_z_cross_n(rank: usize) -> Result<AmalgamIndex> {
    if rank == 0 {
        return Err(FrameError::RankZero);
    }
    let r = rank as u64;
    let mut s = r.isqrt();
    if s * s < r {
        s += 1;
    }
    let offset = r - (s - 1) * (s - 1) - 1;
    let m = offset as i64 - (s as i64 - 1);
    let n = s as i64 - m.abs();
    Ok(AmalgamIndex { m, n: n as usize })
}

/// Inverse of [`enumerate_z_cross_n`].
pub fn rank_of(index: AmalgamIndex) -> Result<usize> {
    if index.n == 0 {
        return Err(FrameError::RankZero);
    }
    let s = index.m.unsigned_abs() as usize + index.n;
    Ok((s - 1) * (s - 1) + (index.m + s as i64 - 1) as usize + 1)
}

#[derive(Debug)]
struct TranslatedSystem {
    base: Arc<dyn FrameGenerator>,
    base_len: usize,
    p: f64,
    q: f64,
    window: (i64, i64),
    level: u32,
}

impl TranslatedSystem {
    fn locate(&self, rank: usize) -> Option<AmalgamIndex> {
        let idx = enumerate_z_cross_n(rank).ok()?;
        (idx.m >= self.window.0 && idx.m <= self.window.1 && idx.n <= self.base_len).then_some(idx)
    }

    fn cellwise(
        &self,
        x: &Element,
        count: usize,
        base_op: impl Fn(&Element, usize) -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        let Element::Amalgam(f) = x else {
            unreachable!("kind checked by Frame")
        };
        let per_cell = (self.window.0..=self.window.1)
            .map(|m| match f.cell(m) {
                Some(cell) => base_op(&Element::Grid(cell.clone()), self.base_len),
                None => Ok(vec![0.0; self.base_len]),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((1..=count)
            .map(|r| {
                self.locate(r).map_or(0.0, |idx| {
                    per_cell[(idx.m - self.window.0) as usize][idx.n - 1]
                })
            })
            .collect())
    }

    fn combine(
        &self,
        coefs: &[f64],
        base_op: impl Fn(&[f64]) -> Result<Element>,
    ) -> Result<Element> {
        let width = (self.window.1 - self.window.0 + 1) as usize;
        let mut per_cell = vec![vec![0.0; self.base_len]; width];
        for (i, &c) in coefs.iter().enumerate() {
            if let Some(idx) = self.locate(i + 1) {
                per_cell[(idx.m - self.window.0) as usize][idx.n - 1] += c;
            }
        }
        let cells = per_cell
            .iter()
            .map(|cell_coefs| {
                if cell_coefs.iter().all(|&c| c == 0.0) {
                    return GridFunction::zero(self.level);
                }
                match base_op(cell_coefs)? {
                    Element::Grid(g) => g.refine(self.level),
                    other => Err(FrameError::SpaceMismatch {
                        expected: "grid function".into(),
                        found: other.kind().to_string(),
                    }),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Element::Amalgam(AmalgamFunction::new(self.window, cells)?))
    }
}

fn lift(m: i64, x: Element) -> Result<Element> {
    match x {
        Element::Grid(g) => Ok(Element::Amalgam(AmalgamFunction::single(m, g))),
        other => Err(FrameError::SpaceMismatch {
            expected: "grid function".into(),
            found: other.kind().to_string(),
        }),
    }
}

impl FrameGenerator for TranslatedSystem {
    fn space(&self) -> Space {
        Space::Amalgam {
            p: self.p,
            q: self.q,
            window: self.window,
            level: self.level,
        }
    }

    fn rank_limit(&self) -> Option<usize> {
        None
    }

    fn covering_rank(&self) -> Option<usize> {
        let reach = self
            .window
            .0
            .unsigned_abs()
            .max(self.window.1.unsigned_abs()) as usize;
        let s = reach + self.base_len;
        Some(s * s)
    }

    fn pair(&self, rank: usize) -> Result<(Element, Element)> {
        match self.locate(rank) {
            Some(idx) => {
                let (a, b) = self.base.pair(idx.n)?;
                Ok((lift(idx.m, a)?, lift(idx.m, b)?))
            }
            None => {
                let space = self.space();
                Ok((space.zero(), space.dual_zero()))
            }
        }
    }

    fn dual(&self) -> Result<Arc<dyn FrameGenerator>> {
        Ok(Arc::new(TranslatedSystem {
            base: self.base.dual()?,
            base_len: self.base_len,
            p: conjugate_exponent(self.p),
            q: conjugate_exponent(self.q),
            window: self.window,
            level: self.level,
        }))
    }

    fn analysis(&self, x: &Element, count: usize) -> Result<Vec<f64>> {
        self.cellwise(x, count, |cell, len| self.base.analysis(cell, len))
    }

    fn testing(&self, xs: &Element, count: usize) -> Result<Vec<f64>> {
        self.cellwise(xs, count, |cell, len| self.base.testing(cell, len))
    }

    fn synthesize(&self, coefs: &[f64]) -> Result<Element> {
        self.combine(coefs, |c| self.base.synthesize(c))
    }

    fn synthesize_dual(&self, coefs: &[f64]) -> Result<Element> {
        self.combine(coefs, |c| self.base.synthesize_dual(c))
    }
}

/// `((T_m ã_n, Φ_{p,q}(T_m b̃_n)))` for `m` in `window`, enumerated by
/// [`enumerate_z_cross_n`]. Indices with `m` outside the window, or `n` past
/// the base frame's representable ranks, carry zero pairs.
pub fn amalgam_frame(base: &Frame, q: f64, window: (i64, i64)) -> Result<Frame> {
    check_open_exponent(q)?;
    check_window(window)?;
    let Space::Grid { p, level } = base.space() else {
        return Err(FrameError::SpaceMismatch {
            expected: "frame over a grid space".into(),
            found: base.space().to_string(),
        });
    };
    let Some(base_len) = base.rank_limit() else {
        return Err(FrameError::NotRepresentable(
            "the base frame must have finitely many representable ranks".into(),
        ));
    };
    let label = match base.label().strip_prefix("haar:") {
        Some(rest) => {
            let rest = rest.split(":J=").next().unwrap_or(rest);
            format!(
                "amalgam:{rest}:q={q}:J={level}:window={},{}",
                window.0, window.1
            )
        }
        None => format!(
            "amalgam[{}]:q={q}:window={},{}",
            base.label(),
            window.0,
            window.1
        ),
    };
    Ok(Frame::new(
        label,
        Arc::new(TranslatedSystem {
            base: base.generator().clone(),
            base_len,
            p,
            q,
            window,
            level,
        }),
    ))
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

fn label_error(label: &str, reason: impl Into<String>) -> FrameError {
    FrameError::InvalidLabel {
        label: label.to_string(),
        reason: reason.into(),
    }
}

fn parse_params<'a>(
    label: &str,
    fields: &[&'a str],
    allowed: &[&str],
) -> Result<Vec<(&'a str, &'a str)>> {
    let mut out = Vec::new();
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| label_error(label, format!("expected key=value, got {field:?}")))?;
        if !allowed.contains(&key) {
            return Err(label_error(label, format!("unknown parameter {key:?}")));
        }
        if out.iter().any(|(k, _)| *k == key) {
            return Err(label_error(label, format!("parameter {key:?} given twice")));
        }
        out.push((key, value));
    }
    Ok(out)
}

fn param<'a>(label: &str, params: &[(&str, &'a str)], key: &str) -> Result<&'a str> {
    params
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| label_error(label, format!("missing parameter {key:?}")))
}

fn number<T: std::str::FromStr>(label: &str, key: &str, text: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| label_error(label, format!("{key}={text:?} is not a valid number")))
}

/// Resolves `l1-canonical`, `haar:p=<p>:J=<J>` and
/// `amalgam:p=<p>:q=<q>:J=<J>:window=<lo>,<hi>`. A trailing `*` selects the
/// dual frame and a `zero:` prefix the all-zero frame over the same space.
pub fn resolve_label(label: &str) -> Result<Frame> {
    let label = label.trim();
    if let Some(inner) = label.strip_suffix('*') {
        return dual_frame(&resolve_label(inner)?);
    }
    if let Some(inner) = label.strip_prefix("zero:") {
        let f = resolve_label(inner)?;
        return Ok(zero_frame(label, f.space(), f.rank_limit()));
    }
    if label == "l1-canonical" {
        return Ok(canonical_l1_frame());
    }
    let mut fields = label.split(':');
    let family = fields.next().unwrap_or_default();
    let fields: Vec<&str> = fields.collect();
    let bad = |e: FrameError| match e {
        FrameError::InvalidLabel { .. } => e,
        other => label_error(label, other.to_string()),
    };
    match family {
        "haar" => {
            let params = parse_params(label, &fields, &["p", "J"])?;
            let p = number(label, "p", param(label, &params, "p")?)?;
            let level = number(label, "J", param(label, &params, "J")?)?;
            haar_frame(p, level).map_err(bad)
        }
        "amalgam" => {
            let params = parse_params(label, &fields, &["p", "q", "J", "window"])?;
            let p = number(label, "p", param(label, &params, "p")?)?;
            let q = number(label, "q", param(label, &params, "q")?)?;
            let level = number(label, "J", param(label, &params, "J")?)?;
            let window = param(label, &params, "window")?;
            let (lo, hi) = window
                .split_once(',')
                .ok_or_else(|| label_error(label, "window must be <lo>,<hi>"))?;
            let window = (number(label, "window", lo)?, number(label, "window", hi)?);
            let base = haar_frame(p, level).map_err(bad)?;
            let frame = amalgam_frame(&base, q, window).map_err(bad)?;
            Ok(Frame::new(label, frame.generator().clone()))
        }
        _ => Err(label_error(label, "unknown frame family")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{analysis_coefficient, coefficient_sequence};
    use crate::spaces::pairing_phi;

    #[test]
    fn l1_frame_elements() {
        let f = canonical_l1_frame();
        let (a3, _) = f.pair(3).unwrap();
        assert_eq!(a3, Element::Seq(SeqVector::from_dense(&[0.0, 0.0, 1.0])));
        let (_, b2) = f.pair(2).unwrap();
        let x = Element::Seq(SeqVector::from_dense(&[5.0, 7.0, 11.0]));
        assert_eq!(f.space().pair(&b2, &x).unwrap(), 7.0);
    }

    #[test]
    fn l1_dual_frame() {
        let d = dual_frame(&canonical_l1_frame()).unwrap();
        assert_eq!(d.space(), Space::LInf);
        let (a, b) = d.pair(4).unwrap();
        assert_eq!(a, Element::Bounded(DualSeq::coordinate(4)));
        assert_eq!(b, Element::Seq(SeqVector::basis(4)));
        assert!(matches!(
            dual_frame(&d),
            Err(FrameError::NotRepresentable(_))
        ));
    }

    #[test]
    fn haar_values() {
        assert_eq!(haar_eval(1, 0.5).unwrap(), 1.0);
        assert_eq!(haar_eval(1, 1.0).unwrap(), 0.0);
        assert_eq!(haar_eval(2, 0.25).unwrap(), 1.0);
        assert_eq!(haar_eval(2, 0.75).unwrap(), -1.0);
        assert_eq!(haar_eval(5, 0.05).unwrap(), 1.0);
        assert_eq!(haar_eval(5, 0.2).unwrap(), -1.0);
        assert_eq!(haar_eval(5, 0.5).unwrap(), 0.0);
        assert!(haar_eval(3, 1.5).is_err());
        assert!(haar_eval(3, -0.1).is_err());
        assert!(haar_eval(0, 0.5).is_err());
    }

    #[test]
    fn haar_norms() {
        assert_eq!(haar_l2_norm(1).unwrap(), 1.0);
        assert_eq!(haar_l2_norm(2).unwrap(), 1.0);
        assert_eq!(haar_l2_norm(5).unwrap(), 0.5);
    }

    #[test]
    fn haar_generations() {
        for n in 2..=256usize {
            let idx = HaarIndex::new(n).unwrap();
            assert!((1usize << (idx.m - 1)) < n && n <= 1usize << idx.m);
            // measure of the support read off the grid samples of haar_eval
            let g = normalized_haar(n, 8).unwrap();
            let support = g.coefficients().iter().filter(|&&v| v != 0.0).count() as f64 / 256.0;
            assert_eq!(support, idx.support_length());
        }
        assert_eq!(HaarIndex::new(1).unwrap().m, 0);
    }

    #[test]
    fn haar_means() {
        let one = GridFunction::constant(0, 1.0).unwrap();
        assert_eq!(pairing_phi(&one, &normalized_haar(1, 6).unwrap()), 1.0);
        for n in 2..=64 {
            approx::assert_abs_diff_eq!(
                pairing_phi(&one, &normalized_haar(n, 6).unwrap()),
                0.0,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn haar_frame_first_elements() {
        let f = haar_frame(1.5, 1).unwrap();
        let (a2, _) = f.pair(2).unwrap();
        assert_eq!(
            a2,
            Element::Grid(GridFunction::new(1, vec![1.0, -1.0]).unwrap())
        );
        assert!(f.pair(3).is_err());
        assert!(haar_frame(1.0, 3).is_err());
        assert!(haar_frame(f64::INFINITY, 3).is_err());
        assert!(haar_frame(2.0, 0).is_err());
    }

    #[test]
    fn haar_fast_routes_match_elementwise_routes() {
        let f = haar_frame(3.0, 5).unwrap();
        let g = f.generator();
        let mut rng = crate::frames::sample_rng(2, 0);
        let x = f.space().random_primal(&mut rng, 0);
        let fast = g.analysis(&x, 32).unwrap();
        for n in 1..=32 {
            let (_, b) = g.pair(n).unwrap();
            let slow = f.space().pair(&b, &x).unwrap();
            approx::assert_abs_diff_eq!(fast[n - 1], slow, epsilon = 1e-12);
        }
        let coefs: Vec<f64> = (0..32).map(|k| (k as f64).sin()).collect();
        let Element::Grid(fast) = g.synthesize(&coefs).unwrap() else {
            panic!()
        };
        let mut slow = GridFunction::zero(5).unwrap();
        for (k, c) in coefs.iter().enumerate() {
            slow = slow.add_scaled(*c, &normalized_haar(k + 1, 5).unwrap());
        }
        for (a, b) in fast.coefficients().iter().zip(slow.coefficients()) {
            approx::assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn haar_transform_accepts_finer_inputs() {
        let f = haar_frame(2.0, 2).unwrap();
        let x = Element::Grid(normalized_haar(3, 2).unwrap().refine(6).unwrap());
        approx::assert_abs_diff_eq!(
            analysis_coefficient(&f, 3, &x).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let c = f.generator().analysis(&x, 4).unwrap();
        for (got, want) in c.iter().zip([0.0, 0.0, 1.0, 0.0]) {
            approx::assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn enumeration_order() {
        let first: Vec<_> = (1..=4).map(|r| enumerate_z_cross_n(r).unwrap()).collect();
        assert_eq!(
            first,
            vec![
                AmalgamIndex { m: 0, n: 1 },
                AmalgamIndex { m: -1, n: 1 },
                AmalgamIndex { m: 0, n: 2 },
                AmalgamIndex { m: 1, n: 1 },
            ]
        );
        for r in 1..=10_000 {
            assert_eq!(rank_of(enumerate_z_cross_n(r).unwrap()).unwrap(), r);
        }
        assert!(enumerate_z_cross_n(0).is_err());
    }

    #[test]
    fn amalgam_cell_identity() {
        let base = haar_frame(2.0, 3).unwrap();
        let f = amalgam_frame(&base, 2.0, (-2, 2)).unwrap();
        assert_eq!(f.label(), "amalgam:p=2:q=2:J=3:window=-2,2");
        let mut rng = crate::frames::sample_rng(4, 0);
        let Element::Grid(cell) = base.space().random_primal(&mut rng, 0) else {
            panic!()
        };
        let x = Element::Amalgam(AmalgamFunction::single(1, cell.clone()));
        for n in 1..=8 {
            let r = rank_of(AmalgamIndex { m: 1, n }).unwrap();
            let expected = analysis_coefficient(&base, n, &Element::Grid(cell.clone())).unwrap();
            approx::assert_abs_diff_eq!(
                analysis_coefficient(&f, r, &x).unwrap(),
                expected,
                epsilon = 1e-12
            );
            let r0 = rank_of(AmalgamIndex { m: 0, n }).unwrap();
            assert_eq!(analysis_coefficient(&f, r0, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn amalgam_fast_routes_match() {
        let base = haar_frame(1.5, 2).unwrap();
        let f = amalgam_frame(&base, 3.0, (-1, 1)).unwrap();
        let cover = f.covering_rank().unwrap();
        assert_eq!(cover, 25);
        let mut rng = crate::frames::sample_rng(8, 0);
        let x = f.space().random_primal(&mut rng, 0);
        let xs = f.space().random_dual(&mut rng, 0);
        let c = f.generator().analysis(&x, cover).unwrap();
        let d = f.generator().testing(&xs, cover).unwrap();
        for r in 1..=cover {
            let (a, b) = f.pair(r).unwrap();
            approx::assert_abs_diff_eq!(c[r - 1], f.space().pair(&b, &x).unwrap(), epsilon = 1e-12);
            approx::assert_abs_diff_eq!(
                d[r - 1],
                f.space().pair(&xs, &a).unwrap(),
                epsilon = 1e-12
            );
        }
        let coefs: Vec<f64> = (0..cover).map(|k| (k as f64 * 0.7).cos()).collect();
        let fast = f.generator().synthesize(&coefs).unwrap();
        let mut slow = f.space().zero();
        for (k, c) in coefs.iter().enumerate() {
            slow = slow.add_scaled(*c, &f.pair(k + 1).unwrap().0).unwrap();
        }
        let diff = fast.add_scaled(-1.0, &slow).unwrap();
        assert!(f.space().norm(&diff).unwrap() <= 1e-12);
    }

    #[test]
    fn amalgam_zero_pairs_outside_window() {
        let f = amalgam_frame(&haar_frame(2.0, 1).unwrap(), 2.0, (0, 0)).unwrap();
        let r = rank_of(AmalgamIndex { m: 1, n: 1 }).unwrap();
        let (a, b) = f.pair(r).unwrap();
        assert!(a.is_zero() && b.is_zero());
        let r = rank_of(AmalgamIndex { m: 0, n: 3 }).unwrap();
        assert!(f.pair(r).unwrap().0.is_zero());
        assert!(amalgam_frame(&canonical_l1_frame(), 2.0, (0, 0)).is_err());
        assert!(amalgam_frame(&haar_frame(2.0, 1).unwrap(), 1.0, (0, 0)).is_err());
        assert!(amalgam_frame(&haar_frame(2.0, 1).unwrap(), 2.0, (0, 1 << 22)).is_err());
    }

    #[test]
    fn translation_covariance() {
        let f = amalgam_frame(&haar_frame(3.0, 3).unwrap(), 1.5, (-2, 2)).unwrap();
        let mut rng = crate::frames::sample_rng(6, 0);
        let Element::Amalgam(x) = f.space().random_primal(&mut rng, 0) else {
            panic!()
        };
        let x = x.restricted((-2, 1)).unwrap();
        let shifted = Element::Amalgam(x.translate(1));
        let x = Element::Amalgam(x);
        for m in -2..=1 {
            for n in 1..=8 {
                let r = rank_of(AmalgamIndex { m, n }).unwrap();
                let r1 = rank_of(AmalgamIndex { m: m + 1, n }).unwrap();
                approx::assert_abs_diff_eq!(
                    analysis_coefficient(&f, r1, &shifted).unwrap(),
                    analysis_coefficient(&f, r, &x).unwrap(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn haar_orthonormality_at_p2() {
        let f = haar_frame(2.0, 4).unwrap();
        for i in 1..=16 {
            let (a, _) = f.pair(i).unwrap();
            let row = coefficient_sequence(&f, &a, &a, 16).unwrap();
            assert_eq!(row.entries(), &[(i, 1.0)]);
        }
    }

    #[test]
    fn labels() {
        assert_eq!(resolve_label("l1-canonical").unwrap().space(), Space::L1);
        assert_eq!(
            resolve_label("haar:p=2:J=8").unwrap().space(),
            Space::Grid { p: 2.0, level: 8 }
        );
        let a = resolve_label("amalgam:p=2:q=3:J=6:window=-3,3").unwrap();
        assert_eq!(a.label(), "amalgam:p=2:q=3:J=6:window=-3,3");
        assert_eq!(
            a.space(),
            Space::Amalgam {
                p: 2.0,
                q: 3.0,
                window: (-3, 3),
                level: 6
            }
        );
        let d = resolve_label("haar:p=1.5:J=3*").unwrap();
        assert_eq!(d.space(), Space::Grid { p: 3.0, level: 3 });
        let z = resolve_label("zero:haar:p=2:J=3").unwrap();
        assert_eq!(z.zero_pairs(8).unwrap(), 8);
        for bad in [
            "haar:p=2",
            "haar:p=x:J=3",
            "haar:p=0.5:J=3",
            "haar:p=2:J=3:z=1",
            "amalgam:p=2:q=2:J=3:window=3",
            "amalgam:p=2:q=2:J=3:window=2,1",
            "wavelet",
            "l1-canonical**",
        ] {
            assert!(
                matches!(
                    resolve_label(bad),
                    Err(FrameError::InvalidLabel { .. }) | Err(FrameError::NotRepresentable(_))
                ),
                "{bad}"
            );
        }
    }
}
