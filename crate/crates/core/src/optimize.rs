//! Global search for the optimum posture and characteristic length.
//!
//! A rotation of the whole chain about its base joint leaves z unchanged,
//! so z is a function of the conditioning-joint variables theta_2..theta_n
//! alone and theta_1 can be pinned to any constant. The search runs a
//! dense grid over the conditioning-joint torus (with the per-posture
//! optimal model rotation and conditioning length in closed form at every
//! sample), then polishes every grid-local minimum with a deterministic
//! Nelder-Mead descent. The conditioning length at the global optimum is
//! the characteristic length of the manipulator.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditioning::{z_for_angles, z_value, ConditioningResult, ModelMatrix};
use crate::error::{Error, Result};
use crate::geom::PointSet2;
use crate::kinematics::{jacobian, Manipulator, Posture};

/// Default samples per axis for chains with up to two conditioning joints.
pub const DEFAULT_GRID_SAMPLES: usize = 720;
/// Default samples per axis for chains with three conditioning joints.
pub const DEFAULT_GRID_SAMPLES_4R: usize = 180;
/// Hard cap on total grid evaluations.
const MAX_GRID_POINTS: usize = 50_000_000;
/// At most this many grid-local minima are polished.
const MAX_REFINE_SEEDS: usize = 64;

/// Search configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationConfig {
    /// Grid step in radians per axis. `None` picks 2pi/720 for up to two
    /// conditioning joints and 2pi/180 for three; four or more require an
    /// explicit (coarse) value.
    pub grid_resolution: Option<f64>,
    /// Stop refining once the simplex's z spread falls below this.
    pub refine_tolerance: f64,
    /// Iteration cap per local refinement.
    pub max_refine_iters: usize,
    /// Fixed base-joint angle (any value yields the same z and length).
    pub theta1: f64,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            grid_resolution: None,
            refine_tolerance: 1e-12,
            max_refine_iters: 200,
            theta1: 0.0,
        }
    }
}

impl OptimizationConfig {
    /// Samples per axis for a search over `dims` conditioning joints.
    fn samples_per_axis(&self, dims: usize) -> Result<usize> {
        let samples = match self.grid_resolution {
            Some(step) => {
                if !(step.is_finite() && step > 0.0 && step <= TAU) {
                    return Err(Error::Config(format!(
                        "grid resolution must be a step in (0, 2pi] radians, got {step}"
                    )));
                }
                ((TAU / step).round() as usize).max(2)
            }
            None => match dims {
                0 => 1,
                1 | 2 => DEFAULT_GRID_SAMPLES,
                3 => DEFAULT_GRID_SAMPLES_4R,
                _ => {
                    return Err(Error::Config(format!(
                        "{dims} conditioning joints require an explicit coarse grid_resolution"
                    )))
                }
            },
        };
        let total = (samples as f64).powi(dims as i32);
        if total > MAX_GRID_POINTS as f64 {
            return Err(Error::Config(format!(
                "grid of {samples}^{dims} points exceeds the {MAX_GRID_POINTS} evaluation cap"
            )));
        }
        Ok(samples)
    }
}

/// One refined minimum of z over the conditioning joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimum {
    pub theta: Posture,
    pub z: f64,
}

/// Outcome of the global posture search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumPosture {
    /// The optimum joint angles (first entry is the pinned base angle),
    /// conditioning joints normalized into [0, 2pi).
    pub theta: Posture,
    pub z_min: f64,
    /// Conditioning length at the optimum; the characteristic length when
    /// the optimum is global.
    #[serde(rename = "l_P")]
    pub l_p: f64,
    #[serde(rename = "alpha_opt_rad")]
    pub alpha_opt: f64,
    /// Whether the search covered the full conditioning torus (always
    /// true for the dense sweep implemented here).
    pub is_global: bool,
    /// Every distinct refined local minimum, best first.
    pub all_local_minima: Vec<LocalMinimum>,
}

/// Deterministic Nelder-Mead descent (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2) from `x0` with initial step `scale`.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    scale: f64,
    ftol: f64,
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let dim = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += scale;
        let fv = f(&v);
        simplex.push((v, fv));
    }

    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"));
        let spread = simplex[dim].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread < ftol || diameter < 1e-10 {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (v, _) in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let point_at = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = point_at(1.0);
        let f_refl = f(&reflected);
        if f_refl < simplex[0].1 {
            let expanded = point_at(2.0);
            let f_exp = f(&expanded);
            simplex[dim] = if f_exp < f_refl {
                (expanded, f_exp)
            } else {
                (reflected, f_refl)
            };
        } else if f_refl < simplex[dim - 1].1 {
            simplex[dim] = (reflected, f_refl);
        } else {
            let contracted = if f_refl < worst.1 {
                point_at(0.5)
            } else {
                point_at(-0.5)
            };
            let f_con = f(&contracted);
            if f_con < worst.1.min(f_refl) {
                simplex[dim] = (contracted, f_con);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for (x, b) in entry.0.iter_mut().zip(&best) {
                        *x = b + 0.5 * (*x - b);
                    }
                    entry.1 = f(&entry.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx)
}

fn decode_index(mut idx: usize, samples: usize, digits: &mut [usize]) {
    for d in digits.iter_mut().rev() {
        *d = idx % samples;
        idx /= samples;
    }
}

fn toroidal_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(TAU);
            d.min(TAU - d)
        })
        .fold(0.0, f64::max)
}

/// Dense grid sweep plus local refinement over theta_2..theta_n.
///
/// Returns the global optimum together with every distinct local minimum
/// found. Ties within 1e-9 of the best z are broken toward the
/// lexicographically smallest angle vector, and all tied postures remain
/// listed in `all_local_minima`.
pub fn optimum_posture(
    m: &Manipulator,
    set: &PointSet2,
    cfg: &OptimizationConfig,
) -> Result<OptimumPosture> {
    let n = m.n();
    if set.len() != n {
        return Err(Error::InvalidArgument(format!(
            "model set has {} points but the manipulator has {} joints",
            set.len(),
            n
        )));
    }
    let model = ModelMatrix::normalized(set, 0.0)?;
    let kpts = model.base_points().to_vec();
    let sum_k2: f64 = kpts.iter().map(|k| k.norm_squared()).sum();
    let links = m.link_lengths().to_vec();
    let theta1 = cfg.theta1;

    let dims = n - 1;
    let samples = cfg.samples_per_axis(dims)?;
    let step = TAU / samples as f64;
    let total = samples.pow(dims as u32);

    let z_of = |angles: &[f64], buf: &mut Vec<f64>| -> f64 {
        buf.clear();
        buf.push(theta1);
        buf.extend_from_slice(angles);
        z_for_angles(&links, buf, &kpts, sum_k2)
    };

    // Dense sweep; each slot is independent, so the parallel fill is
    // deterministic regardless of worker count.
    let mut values = vec![0.0f64; total];
    values
        .par_iter_mut()
        .enumerate()
        .for_each_init(
            || (vec![0usize; dims], vec![0.0f64; dims], Vec::with_capacity(n)),
            |(digits, angles, buf), (idx, slot)| {
                decode_index(idx, samples, digits);
                for (a, d) in angles.iter_mut().zip(digits.iter()) {
                    *a = step * *d as f64;
                }
                *slot = z_of(angles, buf);
            },
        );

    // Grid-local minima: no toroidal neighbor (offsets in {-1,0,1}^dims)
    // is strictly lower.
    let neighbor_offsets: Vec<Vec<isize>> = {
        let mut offsets = Vec::new();
        let mut current = vec![-1isize; dims];
        loop {
            if current.iter().any(|&o| o != 0) {
                offsets.push(current.clone());
            }
            let mut axis = 0;
            loop {
                if axis == dims {
                    break;
                }
                current[axis] += 1;
                if current[axis] <= 1 {
                    break;
                }
                current[axis] = -1;
                axis += 1;
            }
            if axis == dims {
                break;
            }
        }
        offsets
    };

    let mut seeds: Vec<(f64, usize)> = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let mut digits = vec![0usize; dims];
            decode_index(idx, samples, &mut digits);
            let v = values[idx];
            for off in &neighbor_offsets {
                let mut nidx = 0usize;
                for (d, o) in digits.iter().zip(off) {
                    let nd = (*d as isize + o).rem_euclid(samples as isize) as usize;
                    nidx = nidx * samples + nd;
                }
                if values[nidx] < v {
                    return None;
                }
            }
            Some((v, idx))
        })
        .collect();
    seeds.sort_by(|a, b| a.partial_cmp(b).expect("finite z"));
    seeds.truncate(MAX_REFINE_SEEDS);

    // Polish every seed and merge duplicates from shared basins.
    let mut refined: Vec<(Vec<f64>, f64)> = Vec::new();
    for &(_, idx) in &seeds {
        let mut digits = vec![0usize; dims];
        decode_index(idx, samples, &mut digits);
        let x0: Vec<f64> = digits.iter().map(|&d| step * d as f64).collect();
        let objective = |x: &[f64]| {
            let mut buf = Vec::with_capacity(n);
            z_of(x, &mut buf)
        };
        let (x, fx) = nelder_mead(
            objective,
            &x0,
            step,
            cfg.refine_tolerance,
            cfg.max_refine_iters,
        );
        let x: Vec<f64> = x.iter().map(|t| t.rem_euclid(TAU)).collect();
        refined.push((x, fx));
    }
    refined.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .expect("finite z")
            .then_with(|| a.0.partial_cmp(&b.0).expect("finite angles"))
    });
    let mut minima: Vec<(Vec<f64>, f64)> = Vec::new();
    for (x, fx) in refined {
        if minima
            .iter()
            .all(|(kept, _)| toroidal_distance(kept, &x) > 1e-5)
        {
            minima.push((x, fx));
        }
    }
    let Some(best_z) = minima.first().map(|(_, z)| *z) else {
        return Err(Error::Config("empty search grid".into()));
    };

    // Global minimum with deterministic tie-breaking: among everything
    // within 1e-9 of the best, pick the lexicographically smallest angles.
    let winner = minima
        .iter()
        .filter(|(_, z)| *z <= best_z + 1e-9)
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite angles"))
        .expect("nonempty");
    let (winner_x, winner_z) = (winner.0.clone(), winner.1);

    let mut theta = Vec::with_capacity(n);
    theta.push(theta1);
    theta.extend_from_slice(&winner_x);
    let posture = Posture::new(theta)?;
    let record = full_record(m, &posture, set)?;

    let all_local_minima = minima
        .into_iter()
        .map(|(x, z)| {
            let mut t = Vec::with_capacity(n);
            t.push(theta1);
            t.extend_from_slice(&x);
            Ok(LocalMinimum {
                theta: Posture::new(t)?,
                z,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(OptimumPosture {
        theta: posture,
        z_min: winner_z,
        l_p: record.l_p,
        alpha_opt: record.alpha_opt,
        is_global: true,
        all_local_minima,
    })
}

fn full_record(m: &Manipulator, p: &Posture, set: &PointSet2) -> Result<ConditioningResult> {
    z_value(&jacobian(m, p)?, set)
}

/// Conditioning length at the globally optimum posture.
pub fn characteristic_length(
    m: &Manipulator,
    set: &PointSet2,
    cfg: &OptimizationConfig,
) -> Result<f64> {
    Ok(optimum_posture(m, set, cfg)?.l_p)
}

/// z at a posture, as a proximity-to-singularity estimate: z attains its
/// global maximum exactly at rank-two singularities, so larger values
/// mean closer to singularity in the sense of this index.
pub fn singularity_proximity(m: &Manipulator, p: &Posture, set: &PointSet2) -> Result<f64> {
    Ok(full_record(m, p, set)?.z)
}
