//! Planar n-revolute serial chains: joint centers, the vectors from each
//! joint center to the operation point, and the 3xn Jacobian.
//!
//! The base joint sits at the origin and every joint angle is measured
//! relative to the previous link, so the direction of link `i` is the
//! cumulative sum of the first `i` angles. The operation point is the tip
//! of the last link. The Jacobian's first row is all ones (joint rates map
//! one-to-one to end-effector angular velocity); the remaining two rows
//! hold each joint-to-tip vector rotated 90 degrees counterclockwise.

use nalgebra::{Matrix2xX, Matrix3xX, RowDVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::perp;

#[derive(Serialize, Deserialize)]
struct ManipulatorJson {
    link_lengths: Vec<f64>,
}

/// A planar serial manipulator with revolute joints, described by its
/// link lengths. Serializes as `{"link_lengths": [a1, ..., an]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ManipulatorJson", into = "ManipulatorJson")]
pub struct Manipulator {
    link_lengths: Vec<f64>,
}

impl TryFrom<ManipulatorJson> for Manipulator {
    type Error = Error;

    fn try_from(raw: ManipulatorJson) -> Result<Self> {
        Self::new(raw.link_lengths)
    }
}

impl From<Manipulator> for ManipulatorJson {
    fn from(m: Manipulator) -> Self {
        Self {
            link_lengths: m.link_lengths,
        }
    }
}

impl Manipulator {
    /// At least two links, all of positive finite length.
    pub fn new(link_lengths: Vec<f64>) -> Result<Self> {
        if link_lengths.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a manipulator needs at least 2 links, got {}",
                link_lengths.len()
            )));
        }
        if let Some(a) = link_lengths.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "link length {a} is not a positive finite number"
            )));
        }
        Ok(Self { link_lengths })
    }

    pub fn n(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    /// The same architecture scaled by a positive factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.link_lengths.iter().map(|a| a * factor).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct PostureJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_rad: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_deg: Option<Vec<f64>>,
}

/// A joint-angle vector, stored in radians exactly as given (no
/// normalization into a principal range). Serializes as
/// `{"theta_rad": [...]}` and deserializes from either `theta_rad` or
/// `theta_deg`, exactly one of the two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PostureJson", into = "PostureJson")]
pub struct Posture {
    theta: Vec<f64>,
}

impl TryFrom<PostureJson> for Posture {
    type Error = Error;

    fn try_from(raw: PostureJson) -> Result<Self> {
        match (raw.theta_rad, raw.theta_deg) {
            (Some(rad), None) => Self::new(rad),
            (None, Some(deg)) => Self::from_degrees(deg),
            (Some(_), Some(_)) => Err(Error::InvalidArgument(
                "posture defines both theta_rad and theta_deg; use exactly one".into(),
            )),
            (None, None) => Err(Error::InvalidArgument(
                "posture defines neither theta_rad nor theta_deg".into(),
            )),
        }
    }
}

impl From<Posture> for PostureJson {
    fn from(p: Posture) -> Self {
        Self {
            theta_rad: Some(p.theta),
            theta_deg: None,
        }
    }
}

impl Posture {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidArgument("posture has no joint angles".into()));
        }
        if let Some(t) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "joint angle {t} is not finite"
            )));
        }
        Ok(Self { theta })
    }

    pub fn from_degrees(deg: Vec<f64>) -> Result<Self> {
        Self::new(deg.into_iter().map(f64::to_radians).collect())
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
}

fn check_dimensions(m: &Manipulator, p: &Posture) -> Result<()> {
    if m.n() != p.n() {
        return Err(Error::InvalidArgument(format!(
            "posture has {} angles but the manipulator has {} joints",
            p.n(),
            m.n()
        )));
    }
    Ok(())
}

/// Positions of the n joint centers and of the operation point. The first
/// center is the origin; each next center adds the previous link along
/// its cumulative direction, and the operation point is the tip of the
/// last link.
pub fn joint_centers(m: &Manipulator, p: &Posture) -> Result<(Vec<Vector2<f64>>, Vector2<f64>)> {
    check_dimensions(m, p)?;
    let mut centers = Vec::with_capacity(m.n());
    let mut pos = Vector2::zeros();
    let mut cum = 0.0;
    for (a, t) in m.link_lengths().iter().zip(p.theta()) {
        centers.push(pos);
        cum += t;
        let (s, c) = cum.sin_cos();
        pos += *a * Vector2::new(c, s);
    }
    Ok((centers, pos))
}

/// The vectors from each joint center to the operation point.
pub fn r_vectors(m: &Manipulator, p: &Posture) -> Result<Vec<Vector2<f64>>> {
    let (centers, tip) = joint_centers(m, p)?;
    Ok(centers.into_iter().map(|c| tip - c).collect())
}

/// The Jacobian of a posture, partitioned into its row of ones and the
/// 2xn block of 90-degree-rotated joint-to-tip vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBlocks {
    a: RowDVector<f64>,
    b: Matrix2xX<f64>,
    r: Vec<Vector2<f64>>,
}

impl JacobianBlocks {
    /// Builds the blocks from the joint-to-tip vectors alone; any list of
    /// two or more finite vectors corresponds to some chain.
    pub fn from_r_vectors(r: Vec<Vector2<f64>>) -> Result<Self> {
        if r.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a Jacobian needs at least 2 columns, got {}",
                r.len()
            )));
        }
        if r.iter().any(|v| !(v.x.is_finite() && v.y.is_finite())) {
            return Err(Error::InvalidArgument(
                "joint-to-tip vectors must be finite".into(),
            ));
        }
        let a = RowDVector::repeat(r.len(), 1.0);
        let b = Matrix2xX::from_columns(&r.iter().map(|&v| perp(v)).collect::<Vec<_>>());
        Ok(Self { a, b, r })
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    /// The row of ones.
    pub fn a(&self) -> &RowDVector<f64> {
        &self.a
    }

    /// The 2xn length-unit block; column j is the 90-degree rotation of
    /// the j-th joint-to-tip vector.
    pub fn b(&self) -> &Matrix2xX<f64> {
        &self.b
    }

    /// The joint-to-tip vectors themselves.
    pub fn r(&self) -> &[Vector2<f64>] {
        &self.r
    }

    /// Assembles the full 3xn Jacobian.
    pub fn full_matrix(&self) -> Matrix3xX<f64> {
        let n = self.n();
        Matrix3xX::from_fn(n, |i, j| {
            if i == 0 {
                1.0
            } else {
                self.b[(i - 1, j)]
            }
        })
    }
}

/// The manipulator Jacobian at a posture.
pub fn jacobian(m: &Manipulator, p: &Posture) -> Result<JacobianBlocks> {
    JacobianBlocks::from_r_vectors(r_vectors(m, p)?)
}
