use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FrameError, Result};
use crate::spaces::{
    check_open_exponent, check_window, conjugate_exponent, pairing_phi, pairing_phi_pq,
    pairing_psi, AmalgamFunction, DualSeq, GridFunction, SeqVector,
};

/// A vector in one of the represented spaces or their duals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Element {
    Seq(SeqVector),
    Bounded(DualSeq),
    Grid(GridFunction),
    Amalgam(AmalgamFunction),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    Seq,
    Bounded,
    Grid,
    Amalgam,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Seq => "finitely supported sequence",
            ElementKind::Bounded => "bounded sequence",
            ElementKind::Grid => "grid function",
            ElementKind::Amalgam => "amalgam function",
        })
    }
}

impl Element {
    pub fn kind(&self) -> ElementKind {
        match self {
            Element::Seq(_) => ElementKind::Seq,
            Element::Bounded(_) => ElementKind::Bounded,
            Element::Grid(_) => ElementKind::Grid,
            Element::Amalgam(_) => ElementKind::Amalgam,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Element::Seq(v) => v.is_zero(),
            Element::Bounded(v) => v.is_zero(),
            Element::Grid(v) => v.is_zero(),
            Element::Amalgam(v) => v.is_zero(),
        }
    }

    pub fn scaled(&self, c: f64) -> Element {
        match self {
            Element::Seq(v) => Element::Seq(v.scaled(c)),
            Element::Bounded(v) => Element::Bounded(v.scaled(c)),
            Element::Grid(v) => Element::Grid(v.scaled(c)),
            Element::Amalgam(v) => Element::Amalgam(v.scaled(c)),
        }
    }

    /// `self + c * other`; both operands must be of the same kind.
    pub fn add_scaled(&self, c: f64, other: &Element) -> Result<Element> {
        Ok(match (self, other) {
            (Element::Seq(a), Element::Seq(b)) => Element::Seq(a.add_scaled(c, b)),
            (Element::Bounded(a), Element::Bounded(b)) => Element::Bounded(a.add_scaled(c, b)),
            (Element::Grid(a), Element::Grid(b)) => Element::Grid(a.add_scaled(c, b)),
            (Element::Amalgam(a), Element::Amalgam(b)) => Element::Amalgam(a.add_scaled(c, b)),
            _ => {
                return Err(FrameError::SpaceMismatch {
                    expected: self.kind().to_string(),
                    found: other.kind().to_string(),
                })
            }
        })
    }

    /// In-place accumulation used by the synthesis loops.
    pub(crate) fn accumulate(&mut self, c: f64, other: &Element) -> Result<()> {
        if c == 0.0 {
            return Ok(());
        }
        match (&mut *self, other) {
            (Element::Grid(a), Element::Grid(b)) => {
                a.accumulate(c, b);
                Ok(())
            }
            (Element::Amalgam(a), Element::Amalgam(b)) => {
                a.accumulate(c, b);
                Ok(())
            }
            _ => {
                *self = self.add_scaled(c, other)?;
                Ok(())
            }
        }
    }
}

/// Descriptor of the Banach space a frame lives in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Space {
    /// `ℓ^1`, dual represented by bounded sequences.
    L1,
    /// `ℓ^∞`; only the canonical image of `ℓ^1` in its dual is represented.
    LInf,
    /// Level-`level` dyadic slice of `L_p[0,1]`, dual `L_{p*}` via `Φ_p`.
    Grid { p: f64, level: u32 },
    /// Windowed slice of `(L_p, ℓ^q)`, dual `(L_{p*}, ℓ^{q*})` via `Φ_{p,q}`.
    Amalgam {
        p: f64,
        q: f64,
        window: (i64, i64),
        level: u32,
    },
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::L1 => f.write_str("l1"),
            Space::LInf => f.write_str("linf"),
            Space::Grid { p, level } => write!(f, "L_{p}[0,1] at level {level}"),
            Space::Amalgam {
                p,
                q,
                window,
                level,
            } => write!(
                f,
                "(L_{p}, l^{q}) on [{}, {}] at level {level}",
                window.0,
                window.1 + 1
            ),
        }
    }
}

impl Space {
    pub fn grid(p: f64, level: u32) -> Result<Space> {
        check_open_exponent(p)?;
        if level > crate::spaces::MAX_LEVEL {
            return Err(FrameError::LevelTooLarge(level));
        }
        Ok(Space::Grid { p, level })
    }

    pub fn amalgam(p: f64, q: f64, window: (i64, i64), level: u32) -> Result<Space> {
        check_open_exponent(p)?;
        check_open_exponent(q)?;
        check_window(window)?;
        if level > crate::spaces::MAX_LEVEL {
            return Err(FrameError::LevelTooLarge(level));
        }
        Ok(Space::Amalgam {
            p,
            q,
            window,
            level,
        })
    }

    pub fn primal_kind(&self) -> ElementKind {
        match self {
            Space::L1 => ElementKind::Seq,
            Space::LInf => ElementKind::Bounded,
            Space::Grid { .. } => ElementKind::Grid,
            Space::Amalgam { .. } => ElementKind::Amalgam,
        }
    }

    pub fn dual_kind(&self) -> ElementKind {
        match self {
            Space::L1 => ElementKind::Bounded,
            Space::LInf => ElementKind::Seq,
            Space::Grid { .. } => ElementKind::Grid,
            Space::Amalgam { .. } => ElementKind::Amalgam,
        }
    }

    /// The dual space, when its elements have a finite representation.
    pub fn dual(&self) -> Result<Space> {
        match *self {
            Space::L1 => Ok(Space::LInf),
            Space::LInf => Err(FrameError::NotRepresentable(
                "the dual of l-infinity has no finite representation".into(),
            )),
            Space::Grid { p, level } => Ok(Space::Grid {
                p: conjugate_exponent(p),
                level,
            }),
            Space::Amalgam {
                p,
                q,
                window,
                level,
            } => Ok(Space::Amalgam {
                p: conjugate_exponent(p),
                q: conjugate_exponent(q),
                window,
                level,
            }),
        }
    }

    /// Reflexive families, where bidual elements are represented by primal ones.
    pub fn is_reflexive(&self) -> bool {
        matches!(self, Space::Grid { .. } | Space::Amalgam { .. })
    }

    pub fn check_primal(&self, x: &Element) -> Result<()> {
        check_kind(self.primal_kind(), x, self)
    }

    pub fn check_dual(&self, xs: &Element) -> Result<()> {
        check_kind(self.dual_kind(), xs, self)
    }

    pub fn norm(&self, x: &Element) -> Result<f64> {
        self.check_primal(x)?;
        match (self, x) {
            (Space::L1, Element::Seq(v)) => Ok(v.l1_norm()),
            (Space::LInf, Element::Bounded(v)) => Ok(v.sup_norm()),
            (Space::Grid { p, .. }, Element::Grid(v)) => v.lp_norm(*p),
            (Space::Amalgam { p, q, .. }, Element::Amalgam(v)) => v.norm(*p, *q),
            _ => unreachable!("kind checked above"),
        }
    }

    pub fn dual_norm(&self, xs: &Element) -> Result<f64> {
        self.check_dual(xs)?;
        match (self, xs) {
            (Space::L1, Element::Bounded(v)) => Ok(v.sup_norm()),
            (Space::LInf, Element::Seq(v)) => Ok(v.l1_norm()),
            _ => self.dual()?.norm(xs),
        }
    }

    /// `x*(x)` for `x* ∈ E*`, `x ∈ E`.
    pub fn pair(&self, xs: &Element, x: &Element) -> Result<f64> {
        self.check_dual(xs)?;
        self.check_primal(x)?;
        Ok(match (xs, x) {
            (Element::Bounded(mu), Element::Seq(lambda)) => pairing_psi(mu, lambda),
            (Element::Seq(lambda), Element::Bounded(mu)) => pairing_psi(mu, lambda),
            (Element::Grid(f), Element::Grid(g)) => pairing_phi(f, g),
            (Element::Amalgam(f), Element::Amalgam(g)) => pairing_phi_pq(f, g),
            _ => unreachable!("kinds checked above"),
        })
    }

    pub fn zero(&self) -> Element {
        zero_of(self.primal_kind(), self)
    }

    pub fn dual_zero(&self) -> Element {
        zero_of(self.dual_kind(), self)
    }

    /// A unit dual vector `u*` with `u*(x) = ‖x‖`. For `x = 0` a fixed unit
    /// functional is returned.
    pub fn norming_dual(&self, x: &Element) -> Result<Element> {
        self.check_primal(x)?;
        if x.is_zero() {
            return Ok(self.unit_dual());
        }
        Ok(match (self, x) {
            (Space::L1, Element::Seq(v)) => Element::Bounded(DualSeq::new(
                v.to_dense(v.max_index()).iter().map(|c| sign(*c)).collect(),
                0.0,
            )),
            (Space::LInf, Element::Bounded(mu)) => {
                let k = mu.argmax_abs();
                Element::Seq(SeqVector::from_pairs([(k, sign(mu.get(k)))])?)
            }
            (Space::Grid { p, .. }, Element::Grid(f)) => Element::Grid(f.norming_functional(*p)?),
            (Space::Amalgam { p, q, .. }, Element::Amalgam(f)) => {
                Element::Amalgam(f.norming_functional(*p, *q)?)
            }
            _ => unreachable!("kind checked above"),
        })
    }

    /// A unit primal vector `u` with `x*(u) = ‖x*‖`. For `x* = 0` a fixed
    /// unit vector is returned.
    pub fn norming_primal(&self, xs: &Element) -> Result<Element> {
        self.check_dual(xs)?;
        if xs.is_zero() {
            return Ok(self.unit_primal());
        }
        match self {
            Space::L1 => {
                let Element::Bounded(mu) = xs else {
                    unreachable!()
                };
                let k = mu.argmax_abs();
                Ok(Element::Seq(SeqVector::from_pairs([(k, sign(mu.get(k)))])?))
            }
            Space::LInf => {
                let Element::Seq(v) = xs else { unreachable!() };
                Ok(Element::Bounded(DualSeq::new(
                    v.to_dense(v.max_index()).iter().map(|c| sign(*c)).collect(),
                    0.0,
                )))
            }
            // reflexive: the dual of the dual space norms back
            _ => self.dual()?.norming_dual(xs),
        }
    }

    pub fn unit_primal(&self) -> Element {
        match *self {
            Space::L1 => Element::Seq(SeqVector::basis(1)),
            Space::LInf => Element::Bounded(DualSeq::constant(1.0)),
            Space::Grid { level, .. } => {
                Element::Grid(GridFunction::constant(level, 1.0).expect("validated level"))
            }
            Space::Amalgam { window, level, .. } => {
                Element::Amalgam(AmalgamFunction::chi(window.0, level).expect("validated level"))
            }
        }
    }

    pub fn unit_dual(&self) -> Element {
        match self {
            Space::L1 => Element::Bounded(DualSeq::constant(1.0)),
            Space::LInf => Element::Seq(SeqVector::basis(1)),
            _ => self
                .dual()
                .expect("reflexive families have duals")
                .unit_primal(),
        }
    }

    /// Unnormalized random vector with Gaussian entries. Sequence spaces use
    /// the coordinates `1..=horizon`.
    pub fn random_primal<R: Rng + ?Sized>(&self, rng: &mut R, horizon: usize) -> Element {
        random_of(self.primal_kind(), self, rng, horizon)
    }

    pub fn random_dual<R: Rng + ?Sized>(&self, rng: &mut R, horizon: usize) -> Element {
        random_of(self.dual_kind(), self, rng, horizon)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_kind(expected: ElementKind, x: &Element, space: &Space) -> Result<()> {
    if x.kind() == expected {
        Ok(())
    } else {
        Err(FrameError::SpaceMismatch {
            expected: format!("{expected} of {space}"),
            found: x.kind().to_string(),
        })
    }
}

fn zero_of(kind: ElementKind, space: &Space) -> Element {
    match (kind, *space) {
        (ElementKind::Seq, _) => Element::Seq(SeqVector::zero()),
        (ElementKind::Bounded, _) => Element::Bounded(DualSeq::zero()),
        (ElementKind::Grid, Space::Grid { level, .. }) => {
            Element::Grid(GridFunction::zero(level).expect("validated level"))
        }
        (ElementKind::Amalgam, Space::Amalgam { window, level, .. }) => {
            Element::Amalgam(AmalgamFunction::zero(window, level).expect("validated window"))
        }
        _ => unreachable!("element kind follows the space family"),
    }
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn random_of<R: Rng + ?Sized>(
    kind: ElementKind,
    space: &Space,
    rng: &mut R,
    horizon: usize,
) -> Element {
    match (kind, *space) {
        (ElementKind::Seq, _) => Element::Seq(SeqVector::from_dense(&gaussian_vec(rng, horizon))),
        (ElementKind::Bounded, _) => {
            let prefix = (0..horizon).map(|_| rng.random_range(-1.0..=1.0)).collect();
            Element::Bounded(DualSeq::new(prefix, 0.0))
        }
        (ElementKind::Grid, Space::Grid { level, .. }) => Element::Grid(
            GridFunction::new(level, gaussian_vec(rng, 1 << level)).expect("validated level"),
        ),
        (ElementKind::Amalgam, Space::Amalgam { window, level, .. }) => {
            let cells = (window.0..=window.1)
                .map(|_| {
                    GridFunction::new(level, gaussian_vec(rng, 1 << level))
                        .expect("validated level")
                })
                .collect();
            Element::Amalgam(AmalgamFunction::new(window, cells).expect("validated window"))
        }
        _ => unreachable!("element kind follows the space family"),
    }
}
