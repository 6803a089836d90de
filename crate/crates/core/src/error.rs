use thiserror::Error;

/// Errors produced by the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A value violated a constructor or argument contract (wrong length,
    /// nonpositive link, non-finite number, bad permutation, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two point sets that must share a centroid do not.
    #[error("centroid mismatch: distance {distance:.6e} exceeds tolerance {tol:.6e}")]
    CentroidMismatch { distance: f64, tol: f64 },

    /// A point set required to be isotropic is not: the eigenvalues of its
    /// second moment differ by more than the tolerance.
    #[error("point set is not isotropic: relative eigenvalue spread {spread:.6e} exceeds {tol:.6e}")]
    NotIsotropic { spread: f64, tol: f64 },

    /// A model set fails the strict normalization requirement (centroid at
    /// the origin and second moment equal to n times the identity).
    #[error("model set is not normalized: deviation {deviation:.6e} exceeds {tol:.6e}")]
    NotNormalized { deviation: f64, tol: f64 },

    /// The projection sum coupling the posture to the model set is zero or
    /// negative, so no positive conditioning length exists at this rotation.
    #[error(
        "degenerate alignment: projection sum {projection:.6e} admits no positive conditioning length"
    )]
    DegenerateAlignment { projection: f64 },

    /// Both alignment sums vanish: every model rotation is stationary and
    /// the optimal rotation is undefined.
    #[error("indeterminate model rotation: both alignment sums vanish")]
    IndeterminateRotation,

    /// A configuration value is out of range (grid resolution, levels, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A workspace threshold selects an empty region of the grid.
    #[error("empty region: threshold {z_m:.6} does not exceed grid minimum {z_min:.6}")]
    EmptyRegion { z_m: f64, z_min: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
