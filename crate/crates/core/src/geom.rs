//! Isotropic sets of points in the dimensionless plane.
//!
//! A planar point set is *isotropic* when the second moment about its
//! centroid is a scalar multiple of the 2x2 identity. Such sets stay
//! isotropic under rigid rotation about the centroid, under reflection
//! about any axis through the centroid, and under union with another
//! isotropic set sharing the same centroid. The vertices of a regular
//! polygon ("trivial" sets) are the canonical examples; here they are
//! normalized to radius sqrt(2) so that the sum of the outer products
//! of the n position vectors equals n times the identity.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative eigenvalue spread below which a second moment counts
/// as isotropic. Closed-form constructions are exact to rounding; user
/// data may not be.
pub const DEFAULT_ISOTROPY_TOL: f64 = 1e-9;

/// A point of the dimensionless plane. Serializes as the pair `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub(crate) fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub(crate) fn from_vector(v: Vector2<f64>) -> Self {
        Self::new(v.x, v.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(p: [f64; 2]) -> Self {
        Self::new(p[0], p[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

#[derive(Serialize, Deserialize)]
struct PointSetJson {
    points: Vec<Point2>,
}

/// An ordered set of at least two finite points.
///
/// The ordering is significant: relabeling the points produces a distinct
/// value, although all moment statistics are shared. Serializes as
/// `{"points": [[x, y], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointSetJson", into = "PointSetJson")]
pub struct PointSet2 {
    points: Vec<Point2>,
}

impl TryFrom<PointSetJson> for PointSet2 {
    type Error = Error;

    fn try_from(raw: PointSetJson) -> Result<Self> {
        Self::new(raw.points)
    }
}

impl From<PointSet2> for PointSetJson {
    fn from(s: PointSet2) -> Self {
        Self { points: s.points }
    }
}

impl PointSet2 {
    /// Builds a set from at least two finite points.
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a point set needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "point ({}, {}) is not finite",
                p.x, p.y
            )));
        }
        Ok(Self { points })
    }

    pub fn from_coords(coords: &[[f64; 2]]) -> Result<Self> {
        Self::new(coords.iter().copied().map(Point2::from).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 2 by construction
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    /// Returns the same geometric set with point labels permuted: point `i`
    /// of the result is point `perm[i]` of `self`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        if perm.len() != n {
            return Err(Error::InvalidArgument(format!(
                "permutation length {} does not match set size {}",
                perm.len(),
                n
            )));
        }
        let mut seen = vec![false; n];
        for &i in perm {
            if i >= n || seen[i] {
                return Err(Error::InvalidArgument(format!(
                    "{perm:?} is not a permutation of 0..{n}"
                )));
            }
            seen[i] = true;
        }
        Ok(Self {
            points: perm.iter().map(|&i| self.points[i]).collect(),
        })
    }
}

/// Eigenvalues of a symmetric 2x2 matrix, in ascending order.
pub(crate) fn symmetric_eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let a = m[(0, 0)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let c = m[(1, 1)];
    let mean = 0.5 * (a + c);
    let disc = (0.5 * (a - c)).hypot(b);
    (mean - disc, mean + disc)
}

/// Rotation of the plane through `alpha`, counterclockwise.
pub(crate) fn rotation(alpha: f64) -> Matrix2<f64> {
    let (s, c) = alpha.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Applies the 90-degree counterclockwise rotation to a vector.
#[inline]
pub(crate) fn perp(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

/// Centroid of the set: the first moment divided by the point count.
pub fn centroid(s: &PointSet2) -> Point2 {
    let sum: Vector2<f64> = s.points().iter().map(Point2::as_vector).sum();
    Point2::from_vector(sum / s.len() as f64)
}

/// Second moment of the set about its centroid: the sum of the outer
/// products of the centered position vectors. Symmetric positive
/// semidefinite by construction.
pub fn second_moment(s: &PointSet2) -> Matrix2<f64> {
    let c = centroid(s).as_vector();
    let mut m = Matrix2::zeros();
    for p in s.points() {
        let q = p.as_vector() - c;
        m += q * q.transpose();
    }
    m
}

/// Root-mean-square distance of the points from `about`. When `about` is
/// the centroid this equals `sqrt(tr(M) / n)` with `M` the second moment.
pub fn d_rms(s: &PointSet2, about: Point2) -> f64 {
    let o = about.as_vector();
    let sum: f64 = s
        .points()
        .iter()
        .map(|p| (p.as_vector() - o).norm_squared())
        .sum();
    (sum / s.len() as f64).sqrt()
}

/// Geometric moment of inertia of the set about its centroid: that of
/// unit masses at the points, i.e. `tr(M) I - M`.
pub fn geometric_inertia(s: &PointSet2) -> Matrix2<f64> {
    let m = second_moment(s);
    Matrix2::identity() * m.trace() - m
}

/// Outcome of an isotropy check of a point set's second moment.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropyReport {
    pub second_moment: Matrix2<f64>,
    pub eigenvalue_low: f64,
    pub eigenvalue_high: f64,
    /// `(high - low) / max(high, eps)`; zero for a perfectly isotropic set.
    pub relative_spread: f64,
    pub is_isotropic: bool,
}

/// Eigen-decomposes the second moment and reports whether the relative
/// eigenvalue spread is within `tol` (which must be positive).
pub fn check_isotropy(s: &PointSet2, tol: f64) -> IsotropyReport {
    let m = second_moment(s);
    let (lo, hi) = symmetric_eigenvalues(&m);
    let relative_spread = (hi - lo) / hi.max(f64::MIN_POSITIVE);
    IsotropyReport {
        second_moment: m,
        eigenvalue_low: lo,
        eigenvalue_high: hi,
        relative_spread,
        is_isotropic: relative_spread <= tol,
    }
}

/// Default phase of the trivial set: puts the first vertex so that the
/// 3-point set comes out as `{(sqrt(6)/2, sqrt(2)/2), (-sqrt(6)/2,
/// sqrt(2)/2), (0, -sqrt(2))}` and the 4-point set axis-aligned at
/// `(+-1, +-1)`.
pub fn default_phase(n: usize) -> f64 {
    PI / 2.0 - PI / n as f64
}

/// Vertices of the regular n-gon of radius sqrt(2) centered at the
/// origin, listed counterclockwise from `phase`. The radius makes the sum
/// of the outer products of the vertices equal `n` times the identity,
/// and the centroid is exactly the origin.
pub fn trivial_set(n: usize, phase: f64) -> Result<PointSet2> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "a trivial isotropic set needs at least 3 vertices, got {n}"
        )));
    }
    let radius = 2f64.sqrt();
    let points = (0..n)
        .map(|k| {
            let ang = phase + TAU * k as f64 / n as f64;
            Point2::new(radius * ang.cos(), radius * ang.sin())
        })
        .collect();
    PointSet2::new(points)
}

/// Rotates every point through `alpha` about `about`, as a rigid body.
/// Rotation about the centroid preserves isotropy of the second moment.
pub fn rotate_set(s: &PointSet2, alpha: f64, about: Point2) -> PointSet2 {
    let r = rotation(alpha);
    let o = about.as_vector();
    PointSet2 {
        points: s
            .points()
            .iter()
            .map(|p| Point2::from_vector(o + r * (p.as_vector() - o)))
            .collect(),
    }
}

/// Concatenates two sets whose centroids coincide within `tol`
/// (Euclidean distance). The union of two isotropic sets sharing a
/// centroid is isotropic.
pub fn union_sets(s1: &PointSet2, s2: &PointSet2, tol: f64) -> Result<PointSet2> {
    let c1 = centroid(s1).as_vector();
    let c2 = centroid(s2).as_vector();
    let distance = (c1 - c2).norm();
    if distance > tol {
        return Err(Error::CentroidMismatch { distance, tol });
    }
    let mut points = s1.points().to_vec();
    points.extend_from_slice(s2.points());
    Ok(PointSet2 { points })
}

/// Mirrors every point about the line through the centroid at angle
/// `axis_angle`. Reflection preserves the second-moment eigenvalues, so
/// isotropic sets stay isotropic.
pub fn reflect_set(s: &PointSet2, axis_angle: f64) -> PointSet2 {
    let (sn, cs) = (2.0 * axis_angle).sin_cos();
    let h = Matrix2::new(cs, sn, sn, -cs);
    let c = centroid(s).as_vector();
    PointSet2 {
        points: s
            .points()
            .iter()
            .map(|p| Point2::from_vector(c + h * (p.as_vector() - c)))
            .collect(),
    }
}
