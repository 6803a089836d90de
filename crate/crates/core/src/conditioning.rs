//! Distance of the dimensionally-homogeneous Jacobian to an isotropic
//! model matrix.
//!
//! The translational rows of a planar Jacobian carry length units, so its
//! condition number is meaningless as-is. Dividing those rows by a
//! *conditioning length* `l_P` renders the matrix dimensionless, and `l_P`
//! is chosen to minimize the weighted Frobenius distance `z` between the
//! normalized Jacobian and a 3xn model matrix `K` built from an isotropic
//! set of points. Both the optimal reciprocal length `lambda = 1/l_P` and
//! the optimal rigid rotation `alpha` of the model set have closed forms:
//! the minimization is quadratic in `lambda` and sinusoidal in `alpha`.
//!
//! `z = 0` means the posture realizes the isotropic model exactly; large
//! `z` (approaching its global maximum) flags proximity to a rank-two
//! singularity.

use nalgebra::{Matrix3xX, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    centroid, perp, rotation, symmetric_eigenvalues, PointSet2, DEFAULT_ISOTROPY_TOL,
};
use crate::kinematics::JacobianBlocks;

/// Guard against division by a vanishing squared-distance sum.
const SUM_R2_FLOOR: f64 = 1e-30;

/// Relative threshold below which the two alignment sums count as zero
/// and the optimal model rotation is reported indeterminate.
const ALIGNMENT_EPS: f64 = 1e-14;

/// The dimensionless 3xn reference built from a normalized isotropic set:
/// a row of ones over the 90-degree rotations of the (optionally rotated)
/// set points. Satisfies `K Kᵀ = n I` for n >= 3.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrix {
    /// Normalized set points (centroid at the origin, sum of outer
    /// products equal to n times the identity), before rotation.
    base_points: Vec<Vector2<f64>>,
    alpha: f64,
    matrix: Matrix3xX<f64>,
    source_set: PointSet2,
    rescaled: bool,
}

impl ModelMatrix {
    /// Strict constructor: the set must already be centered at the origin
    /// and normalized so the sum of outer products is n times the
    /// identity, to 1e-9 relative.
    pub fn new(set: &PointSet2, alpha: f64) -> Result<Self> {
        let n = set.len() as f64;
        let c = centroid(set).as_vector();
        let mut outer = nalgebra::Matrix2::zeros();
        for p in set.points() {
            let v = p.as_vector();
            outer += v * v.transpose();
        }
        let target = nalgebra::Matrix2::identity() * n;
        let deviation = ((outer - target).norm() / n).max(c.norm() / 2f64.sqrt());
        let tol = 1e-9;
        if deviation > tol {
            return Err(Error::NotNormalized { deviation, tol });
        }
        let base_points: Vec<Vector2<f64>> =
            set.points().iter().map(|p| p.as_vector()).collect();
        Ok(Self::assemble(base_points, alpha, set.clone(), false))
    }

    /// Lenient constructor: recenters the set on its centroid and rescales
    /// it to the canonical normalization, refusing only sets that are not
    /// isotropic. Two-point sets are special-cased: no plane pair is
    /// isotropic, so the centered pair is scaled to radius sqrt(2) and
    /// used as the best available reference.
    pub fn normalized(set: &PointSet2, alpha: f64) -> Result<Self> {
        let (base_points, rescaled) = normalize_model_points(set)?;
        Ok(Self::assemble(base_points, alpha, set.clone(), rescaled))
    }

    fn assemble(
        base_points: Vec<Vector2<f64>>,
        alpha: f64,
        source_set: PointSet2,
        rescaled: bool,
    ) -> Self {
        let rot = rotation(alpha);
        let cols: Vec<_> = base_points
            .iter()
            .map(|k| {
                let e_rk = perp(rot * k);
                nalgebra::Vector3::new(1.0, e_rk.x, e_rk.y)
            })
            .collect();
        let matrix = Matrix3xX::from_columns(&cols);
        Self {
            base_points,
            alpha,
            matrix,
            source_set,
            rescaled,
        }
    }

    /// The same model set at a different rigid rotation.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self::assemble(
            self.base_points.clone(),
            alpha,
            self.source_set.clone(),
            self.rescaled,
        )
    }

    pub fn n(&self) -> usize {
        self.base_points.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The 3xn matrix at the current rotation.
    pub fn matrix(&self) -> &Matrix3xX<f64> {
        &self.matrix
    }

    /// The normalized set points before rotation.
    pub fn base_points(&self) -> &[Vector2<f64>] {
        &self.base_points
    }

    /// The set points at the current rotation.
    pub fn rotated_points(&self) -> Vec<Vector2<f64>> {
        let rot = rotation(self.alpha);
        self.base_points.iter().map(|k| rot * k).collect()
    }

    pub fn source_set(&self) -> &PointSet2 {
        &self.source_set
    }

    /// Whether [`ModelMatrix::normalized`] had to recenter or rescale the
    /// source set.
    pub fn rescaled(&self) -> bool {
        self.rescaled
    }
}

fn normalize_model_points(set: &PointSet2) -> Result<(Vec<Vector2<f64>>, bool)> {
    let n = set.len();
    let c = centroid(set).as_vector();
    let centered: Vec<Vector2<f64>> = set
        .points()
        .iter()
        .map(|p| p.as_vector() - c)
        .collect();

    let scale = if n == 2 {
        let radius = centered[0].norm();
        if radius < 1e-150 {
            return Err(Error::InvalidArgument(
                "two-point model set has coincident points".into(),
            ));
        }
        2f64.sqrt() / radius
    } else {
        let mut m = nalgebra::Matrix2::zeros();
        for q in &centered {
            m += q * q.transpose();
        }
        let (lo, hi) = symmetric_eigenvalues(&m);
        let spread = (hi - lo) / hi.max(f64::MIN_POSITIVE);
        if spread > DEFAULT_ISOTROPY_TOL {
            return Err(Error::NotIsotropic {
                spread,
                tol: DEFAULT_ISOTROPY_TOL,
            });
        }
        let mean = 0.5 * (lo + hi);
        if mean < 1e-150 {
            return Err(Error::InvalidArgument(
                "model set has zero extent about its centroid".into(),
            ));
        }
        (n as f64 / mean).sqrt()
    };

    let rms = (centered.iter().map(|q| q.norm_squared()).sum::<f64>() / n as f64).sqrt();
    let rescaled = (scale - 1.0).abs() > 1e-9 || c.norm() > 1e-9 * rms.max(1.0);
    Ok((centered.into_iter().map(|q| q * scale).collect(), rescaled))
}

/// The default model set for an n-joint chain: the trivial isotropic set
/// (regular n-gon of radius sqrt(2)) at the default phase. For n = 2,
/// where no isotropic pair exists, the antipodal pair at radius sqrt(2).
pub fn default_model_set(n: usize) -> Result<PointSet2> {
    if n == 2 {
        let r = 2f64.sqrt();
        return PointSet2::from_coords(&[[r, 0.0], [-r, 0.0]]);
    }
    crate::geom::trivial_set(n, crate::geom::default_phase(n))
}

/// Weighted Frobenius distance between two 3xn matrices:
/// `sqrt(tr[(A-B)(A-B)ᵀ] / n)`.
pub fn frobenius_distance(a: &Matrix3xX<f64>, b: &Matrix3xX<f64>) -> Result<f64> {
    if a.ncols() != b.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix shapes differ: 3x{} vs 3x{}",
            a.ncols(),
            b.ncols()
        )));
    }
    Ok(((a - b).norm_squared() / a.ncols() as f64).sqrt())
}

/// The quadratic-form route to z: `(1/2n) tr(J̄J̄ᵀ - 2KJ̄ᵀ + KKᵀ)`,
/// evaluated through the expanded traces.
pub fn z_quadratic_form(jbar: &Matrix3xX<f64>, k: &Matrix3xX<f64>) -> Result<f64> {
    if jbar.ncols() != k.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix shapes differ: 3x{} vs 3x{}",
            jbar.ncols(),
            k.ncols()
        )));
    }
    let n = jbar.ncols() as f64;
    let jj = jbar.norm_squared(); // tr(J̄ J̄ᵀ)
    let kj = jbar.dot(k); // tr(K J̄ᵀ)
    let kk = k.norm_squared(); // tr(K Kᵀ)
    Ok(0.5 / n * (jj - 2.0 * kj + kk))
}

/// The length-ratio route to z, valid once lambda has been set to its
/// closed-form optimum: half the mean squared model radius minus half the
/// squared ratio of d_rms to the conditioning length.
pub fn z_via_length_ratio(model: &ModelMatrix, d_rms: f64, l_p: f64) -> f64 {
    let n = model.n() as f64;
    let sum_k2: f64 = model.base_points().iter().map(|k| k.norm_squared()).sum();
    sum_k2 / (2.0 * n) - 0.5 * (d_rms / l_p) * (d_rms / l_p)
}

/// The reciprocal conditioning length minimizing z at the model's current
/// rotation, and the conditioning length itself.
///
/// `lambda = sum_j(k̃ᵀ_j r_j) / sum_j ||r_j||²`; the denominator is n times
/// the squared rms joint-to-tip distance. A zero or negative projection
/// sum admits no positive length: the caller should re-optimize the model
/// rotation first.
pub fn conditioning_length(jb: &JacobianBlocks, model: &ModelMatrix) -> Result<(f64, f64)> {
    if jb.n() != model.n() {
        return Err(Error::InvalidArgument(format!(
            "jacobian has {} columns but the model set has {} points",
            jb.n(),
            model.n()
        )));
    }
    let rotated = model.rotated_points();
    let projection: f64 = rotated
        .iter()
        .zip(jb.r())
        .map(|(k, r)| k.dot(r))
        .sum();
    if !(projection > 0.0) {
        return Err(Error::DegenerateAlignment { projection });
    }
    let sum_r2: f64 = jb.r().iter().map(Vector2::norm_squared).sum::<f64>().max(SUM_R2_FLOOR);
    let lambda = projection / sum_r2;
    Ok((lambda, 1.0 / lambda))
}

/// Alignment sums of a posture against unrotated model points:
/// `N = sum r_jᵀ E k_j` (transverse projections) and `D = sum r_jᵀ k_j`
/// (direct projections).
fn alignment_sums(r: &[Vector2<f64>], k: &[Vector2<f64>]) -> (f64, f64) {
    let mut n_sum = 0.0;
    let mut d_sum = 0.0;
    for (rj, kj) in r.iter().zip(k) {
        n_sum += rj.dot(&perp(*kj));
        d_sum += rj.dot(kj);
    }
    (n_sum, d_sum)
}

fn optimal_alpha_for_points(jb: &JacobianBlocks, k: &[Vector2<f64>]) -> Result<f64> {
    if jb.n() != k.len() {
        return Err(Error::InvalidArgument(format!(
            "jacobian has {} columns but the model set has {} points",
            jb.n(),
            k.len()
        )));
    }
    let (n_sum, d_sum) = alignment_sums(jb.r(), k);
    let scale: f64 = jb
        .r()
        .iter()
        .zip(k)
        .map(|(r, kj)| r.norm() * kj.norm())
        .sum();
    if !(n_sum.hypot(d_sum) > ALIGNMENT_EPS * scale) {
        return Err(Error::IndeterminateRotation);
    }
    // The stationarity condition has two roots pi apart; compare z at
    // both, at the positive-projection lambda, and keep the minimizer.
    let candidate = n_sum.atan2(d_sum);
    let sum_r2: f64 = jb.r().iter().map(Vector2::norm_squared).sum::<f64>().max(SUM_R2_FLOOR);
    let lambda = n_sum.hypot(d_sum) / sum_r2;
    let z_at = |alpha: f64| -> f64 {
        let jbar = jbar_matrix(jb, lambda);
        let kmat = kmat_at(k, alpha);
        z_quadratic_form(&jbar, &kmat).expect("shapes match")
    };
    let other = candidate + std::f64::consts::PI;
    let best = if z_at(candidate) <= z_at(other) {
        candidate
    } else {
        other
    };
    Ok(wrap_to_pi(best))
}

/// The model rotation minimizing z for this posture, in (-pi, pi]. The
/// set is normalized the same way as in [`z_value`].
pub fn optimal_alpha(jb: &JacobianBlocks, set: &PointSet2) -> Result<f64> {
    let (points, _) = normalize_model_points(set)?;
    optimal_alpha_for_points(jb, &points)
}

fn wrap_to_pi(a: f64) -> f64 {
    let mut x = a.rem_euclid(std::f64::consts::TAU);
    if x > std::f64::consts::PI {
        x -= std::f64::consts::TAU;
    }
    x
}

fn jbar_matrix(jb: &JacobianBlocks, lambda: f64) -> Matrix3xX<f64> {
    Matrix3xX::from_fn(jb.n(), |i, j| {
        if i == 0 {
            1.0
        } else {
            lambda * jb.b()[(i - 1, j)]
        }
    })
}

fn kmat_at(points: &[Vector2<f64>], alpha: f64) -> Matrix3xX<f64> {
    let rot = rotation(alpha);
    let cols: Vec<_> = points
        .iter()
        .map(|k| {
            let e_rk = perp(rot * k);
            nalgebra::Vector3::new(1.0, e_rk.x, e_rk.y)
        })
        .collect();
    Matrix3xX::from_columns(&cols)
}

/// The dimensionally-homogeneous Jacobian: the row of ones over the
/// translational block divided by the conditioning length.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedJacobian {
    jbar: Matrix3xX<f64>,
    lambda: f64,
    l_p: f64,
}

impl NormalizedJacobian {
    pub fn from_blocks(jb: &JacobianBlocks, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be a positive finite reciprocal length, got {lambda}"
            )));
        }
        Ok(Self {
            jbar: jbar_matrix(jb, lambda),
            lambda,
            l_p: 1.0 / lambda,
        })
    }

    pub fn jbar(&self) -> &Matrix3xX<f64> {
        &self.jbar
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn l_p(&self) -> f64 {
        self.l_p
    }
}

/// Condition number of a 3xn matrix (n >= 3) under the Frobenius norm,
/// with each factor normalized so that an isotropic matrix scores exactly
/// 1: `kappa = sqrt(tr(G) tr(G⁻¹)) / 3` with `G = A Aᵀ`. For square 3x3
/// matrices this is the weighted-Frobenius condition number; for
/// redundant chains the Moore-Penrose generalized inverse replaces the
/// inverse, which keeps `kappa >= 1` with equality exactly at isotropy.
/// Returns infinity when the matrix is rank-deficient.
pub fn condition_number(a: &Matrix3xX<f64>) -> f64 {
    let g = a * a.transpose();
    let trace = g.trace();
    match g.try_inverse() {
        Some(gi) => {
            let trace_inv = gi.trace();
            if trace_inv <= 0.0 || !trace_inv.is_finite() {
                f64::INFINITY
            } else {
                (trace * trace_inv).sqrt() / 3.0
            }
        }
        None => f64::INFINITY,
    }
}

/// The full conditioning record of one posture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningResult {
    /// Distance-to-isotropy objective, >= 0; zero exactly when the
    /// normalized Jacobian matches the model matrix.
    pub z: f64,
    /// Conditioning length.
    #[serde(rename = "l_P")]
    pub l_p: f64,
    /// Optimal model-set rotation, radians in (-pi, pi].
    #[serde(rename = "alpha_opt_rad")]
    pub alpha_opt: f64,
    /// Condition number of the normalized Jacobian; 1 exactly at
    /// isotropy, infinite at rank-deficient postures.
    pub kappa: f64,
    /// Root-mean-square distance of the joint centers from the operation
    /// point.
    pub d_rms: f64,
    /// Set when the model set had to be recentered or rescaled before
    /// use.
    #[serde(skip)]
    pub model_rescaled: bool,
}

/// Conditioning analysis of one posture against a model set: optimal
/// model rotation, conditioning length, distance z and condition number.
///
/// The set is recentered and rescaled to the canonical normalization if
/// needed (flagged in the result); joints correspond to model points in
/// label order.
pub fn z_value(jb: &JacobianBlocks, set: &PointSet2) -> Result<ConditioningResult> {
    z_value_impl(jb, set, None)
}

/// As [`z_value`] with an explicit relabeling of the model points: model
/// point `perm[j]` is assigned to joint `j`.
pub fn z_value_relabeled(
    jb: &JacobianBlocks,
    set: &PointSet2,
    perm: &[usize],
) -> Result<ConditioningResult> {
    z_value_impl(jb, set, Some(perm))
}

fn z_value_impl(
    jb: &JacobianBlocks,
    set: &PointSet2,
    perm: Option<&[usize]>,
) -> Result<ConditioningResult> {
    let relabeled;
    let set = match perm {
        Some(p) => {
            relabeled = set.relabeled(p)?;
            &relabeled
        }
        None => set,
    };
    let base = ModelMatrix::normalized(set, 0.0)?;
    let alpha_opt = optimal_alpha_for_points(jb, base.base_points())?;
    let model = base.with_alpha(alpha_opt);
    let (lambda, l_p) = conditioning_length(jb, &model)?;
    let nj = NormalizedJacobian::from_blocks(jb, lambda)?;

    // Primary route: half the squared weighted Frobenius distance.
    let distance = frobenius_distance(nj.jbar(), model.matrix())?;
    let z = 0.5 * distance * distance;

    let n = jb.n() as f64;
    let sum_r2: f64 = jb.r().iter().map(Vector2::norm_squared).sum();
    let d_rms = (sum_r2 / n).sqrt();
    debug_assert!({
        let alt = z_via_length_ratio(&model, d_rms, l_p);
        (z - alt).abs() <= 1e-9 * z.abs().max(1.0)
    });

    Ok(ConditioningResult {
        z,
        l_p,
        alpha_opt,
        kappa: condition_number(nj.jbar()),
        d_rms,
        model_rescaled: model.rescaled(),
    })
}

/// z with both lambda and alpha eliminated in closed form:
/// `sum||k||²/2n - (N² + D²)/(2n sum||r||²)`.
///
/// Unlike [`z_value`], this is total: it extends continuously through
/// degenerate postures (where it equals the global maximum of z and no
/// optimal rotation or finite conditioning length exists). Grid sweeps
/// and the posture optimizer use this form.
pub fn z_at_posture(jb: &JacobianBlocks, model: &ModelMatrix) -> f64 {
    let k = model.base_points();
    debug_assert_eq!(jb.n(), k.len());
    let (n_sum, d_sum) = alignment_sums(jb.r(), k);
    let sum_r2: f64 = jb.r().iter().map(Vector2::norm_squared).sum::<f64>().max(SUM_R2_FLOOR);
    let sum_k2: f64 = k.iter().map(Vector2::norm_squared).sum();
    let n = jb.n() as f64;
    sum_k2 / (2.0 * n) - (n_sum * n_sum + d_sum * d_sum) / (2.0 * n * sum_r2)
}

/// Allocation-free z for grid sweeps: forward kinematics and the closed
/// forms fused into two passes over the chain. `theta` holds all n joint
/// angles; `k` the normalized model points; `sum_k2` their squared-norm
/// sum.
pub(crate) fn z_for_angles(links: &[f64], theta: &[f64], k: &[Vector2<f64>], sum_k2: f64) -> f64 {
    debug_assert_eq!(links.len(), theta.len());
    debug_assert_eq!(links.len(), k.len());
    let mut cum = 0.0;
    let mut tip = Vector2::zeros();
    for (a, t) in links.iter().zip(theta) {
        cum += t;
        let (s, c) = cum.sin_cos();
        tip += *a * Vector2::new(c, s);
    }
    let mut pos = Vector2::zeros();
    cum = 0.0;
    let mut n_sum = 0.0;
    let mut d_sum = 0.0;
    let mut sum_r2 = 0.0;
    for ((a, t), kj) in links.iter().zip(theta).zip(k) {
        let r = tip - pos;
        n_sum += r.dot(&perp(*kj));
        d_sum += r.dot(kj);
        sum_r2 += r.norm_squared();
        cum += t;
        let (s, c) = cum.sin_cos();
        pos += *a * Vector2::new(c, s);
    }
    let n = links.len() as f64;
    sum_k2 / (2.0 * n) - (n_sum * n_sum + d_sum * d_sum) / (2.0 * n * sum_r2.max(SUM_R2_FLOOR))
}
