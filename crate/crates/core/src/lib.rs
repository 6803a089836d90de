//! Kinetostatic conditioning of planar n-revolute serial manipulators.
//!
//! The library measures how far a manipulator posture is from kinetostatic
//! isotropy. Because the translational rows of a planar Jacobian carry
//! length units, it first divides them by a posture-dependent
//! *conditioning length*, then measures the weighted Frobenius distance z
//! of the result to an isotropic *model matrix* built from a reference set
//! of points in the dimensionless plane. Both the conditioning length and
//! the optimal rigid rotation of the model set have closed forms; a dense
//! sweep over the conditioning joints plus local refinement finds the
//! globally optimum posture, whose conditioning length is the
//! manipulator's *characteristic length*. Grid exports and isocontours of
//! z map the conditioning landscape, and the fraction of the landscape
//! below a threshold gives a scale-free useful-workspace measure.
//!
//! Modules:
//! - [`geom`]: isotropic point sets (construction, moments, rotation,
//!   reflection, union).
//! - [`kinematics`]: the chain model and its Jacobian.
//! - [`conditioning`]: model matrices, the distance z, conditioning
//!   length, optimal model rotation and condition number.
//! - [`optimize`]: global posture search and the characteristic length.
//! - [`isocontour`]: z grids, workspace-area measures and
//!   marching-squares level curves.
//! - [`cli`]: the file formats and commands behind the `kinetostat`
//!   binary.
//!
//! All analysis routines are pure functions on immutable values and are
//! safe to call concurrently; grid sweeps parallelize internally with
//! deterministic, position-addressed output.

pub mod cli;
pub mod conditioning;
pub mod error;
pub mod geom;
pub mod isocontour;
pub mod kinematics;
pub mod optimize;

pub use conditioning::{
    condition_number, conditioning_length, default_model_set, frobenius_distance, optimal_alpha,
    z_at_posture, z_quadratic_form, z_value, z_value_relabeled, ConditioningResult, ModelMatrix,
    NormalizedJacobian,
};
pub use error::{Error, Result};
pub use geom::{
    centroid, check_isotropy, d_rms, default_phase, geometric_inertia, reflect_set, rotate_set,
    second_moment, trivial_set, union_sets, IsotropyReport, Point2, PointSet2,
};
pub use isocontour::{
    best_fit_axis_ratio, contour_encloses, evaluate_grid, evaluate_grid_slice,
    extract_isocontours, workspace_area, Contour, WorkspaceMeasure, ZGrid,
};
pub use kinematics::{jacobian, joint_centers, r_vectors, JacobianBlocks, Manipulator, Posture};
pub use optimize::{
    characteristic_length, optimum_posture, singularity_proximity, LocalMinimum,
    OptimizationConfig, OptimumPosture,
};
