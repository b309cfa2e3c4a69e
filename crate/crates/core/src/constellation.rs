//! Gray-labeled QAM constellations and the coordinate product distance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cis, C64};

/// Tolerance for deciding that a point is a constellation member.
const MEMBER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationKind {
    Qpsk,
    Qam8,
    Qam16,
}

impl ConstellationKind {
    pub fn order(self) -> usize {
        match self {
            ConstellationKind::Qpsk => 4,
            ConstellationKind::Qam8 => 8,
            ConstellationKind::Qam16 => 16,
        }
    }

    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            4 => Ok(ConstellationKind::Qpsk),
            8 => Ok(ConstellationKind::Qam8),
            16 => Ok(ConstellationKind::Qam16),
            o => Err(Error::UnsupportedOrder(o)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConstellationKind::Qpsk => "qpsk",
            ConstellationKind::Qam8 => "qam8",
            ConstellationKind::Qam16 => "qam16",
        }
    }
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstellationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "qam4" => Ok(ConstellationKind::Qpsk),
            "qam8" | "8qam" => Ok(ConstellationKind::Qam8),
            "qam16" | "16qam" => Ok(ConstellationKind::Qam16),
            _ => Err(Error::UnknownConstellation(s.to_string())),
        }
    }
}

/// A finite unit-energy constellation. `points[label]` is the point carrying
/// the bit label `label` (most significant bit first).
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: ConstellationKind,
    phi: f64,
    bits: usize,
    points: Vec<C64>,
}

fn inverse_gray(mut g: usize) -> usize {
    let mut i = 0;
    while g != 0 {
        i ^= g;
        g >>= 1;
    }
    i
}

/// Amplitude of the 4-PAM level whose Gray label is `g`: 00,01,11,10 -> -3,-1,1,3.
fn pam4(g: usize) -> f64 {
    -3.0 + 2.0 * inverse_gray(g) as f64
}

pub fn average_energy(points: &[C64]) -> f64 {
    points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64
}

/// Scales `points` to unit average energy.
pub fn normalize_energy(points: &[C64]) -> Vec<C64> {
    let e = average_energy(points);
    points.iter().map(|p| p / e.sqrt()).collect()
}

/// Coordinate product distance of an arbitrary point set: the minimum over
/// distinct pairs of `|u_re - v_re| * |u_im - v_im|`.
pub fn cpd_of(points: &[C64]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints);
    }
    let mut best = f64::INFINITY;
    for (i, u) in points.iter().enumerate() {
        for v in &points[i + 1..] {
            best = best.min((u.re - v.re).abs() * (u.im - v.im).abs());
        }
    }
    Ok(best)
}

impl Constellation {
    /// Unit-energy Gray-labeled QAM of the given order, rotated by `e^{j phi}`.
    pub fn make_qam(order: usize, phi: f64) -> Result<Self> {
        Self::new(ConstellationKind::from_order(order)?, phi)
    }

    pub fn new(kind: ConstellationKind, phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::InvalidArgument(format!("rotation {phi}")));
        }
        let raw: Vec<C64> = match kind {
            ConstellationKind::Qpsk => vec![
                C64::new(1.0, 1.0),
                C64::new(-1.0, 1.0),
                C64::new(1.0, -1.0),
                C64::new(-1.0, -1.0),
            ],
            ConstellationKind::Qam8 => (0..8)
                .map(|label| {
                    let im = if label & 1 == 0 { 1.0 } else { -1.0 };
                    C64::new(pam4(label >> 1), im)
                })
                .collect(),
            ConstellationKind::Qam16 => (0..16)
                .map(|label| C64::new(pam4(label >> 2), pam4(label & 3)))
                .collect(),
        };
        let rot = cis(phi);
        let points = normalize_energy(&raw).into_iter().map(|p| p * rot).collect();
        Ok(Constellation { kind, phi, bits: kind.order().trailing_zeros() as usize, points })
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> C64 {
        self.points[label]
    }

    pub fn average_energy(&self) -> f64 {
        average_energy(&self.points)
    }

    pub fn cpd(&self) -> Result<f64> {
        cpd_of(&self.points)
    }

    pub fn label_bits(&self, label: usize) -> Vec<u8> {
        (0..self.bits).rev().map(|b| ((label >> b) & 1) as u8).collect()
    }

    pub fn bits_to_label(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.bits {
            return Err(Error::BadLabelLength { got: bits.len(), expected: self.bits });
        }
        Ok(bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize))
    }

    pub fn bits_to_point(&self, bits: &[u8]) -> Result<C64> {
        Ok(self.points[self.bits_to_label(bits)?])
    }

    /// Label of an exact constellation member.
    pub fn label_of(&self, point: C64) -> Result<usize> {
        self.points
            .iter()
            .position(|p| (p - point).norm() < MEMBER_TOL)
            .ok_or(Error::NotAMember(point))
    }

    pub fn point_to_bits(&self, point: C64) -> Result<Vec<u8>> {
        Ok(self.label_bits(self.label_of(point)?))
    }

    /// Distinct pairwise differences `u - v` (including zero), deduplicated.
    pub fn difference_set(&self) -> Vec<C64> {
        let mut out: Vec<C64> = Vec::new();
        for u in &self.points {
            for v in &self.points {
                let d = u - v;
                if !out.iter().any(|w| (w - d).norm() < MEMBER_TOL) {
                    out.push(d);
                }
            }
        }
        out
    }
}

/// Number of differing bits between two labels.
pub fn hamming(a: usize, b: usize) -> u32 {
    (a ^ b).count_ones()
}
