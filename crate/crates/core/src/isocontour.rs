//! z maps over the conditioning-joint torus: dense grids, cell-counted
//! workspace area, and marching-squares isocontours.
//!
//! The grid samples z on a square lattice of (theta2, theta3) in
//! [0, 2pi) x [0, 2pi) with the base angle pinned at zero, using the same
//! closed forms as the posture optimizer. Contours are traced wrap-aware:
//! on the torus a level curve either closes on itself or winds around a
//! period, in which case it is reported open (periodic). A flat-window
//! mode ignores the wrap cells instead, reproducing plots drawn over a
//! plain square.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditioning::{z_for_angles, ModelMatrix};
use crate::error::{Error, Result};
use crate::geom::{symmetric_eigenvalues, PointSet2};
use crate::kinematics::Manipulator;

/// A sampled z map over the (theta2, theta3) torus.
#[derive(Debug, Clone, PartialEq)]
pub struct ZGrid {
    resolution: usize,
    theta2_axis: Vec<f64>,
    theta3_axis: Vec<f64>,
    /// Row-major: `values[i2 * resolution + i3]`.
    values: Vec<f64>,
    z_min: f64,
    z_max: f64,
    min_index: (usize, usize),
    max_index: (usize, usize),
}

impl ZGrid {
    /// Wraps an externally computed field (row-major, `resolution`
    /// squared finite entries).
    pub fn from_values(resolution: usize, values: Vec<f64>) -> Result<Self> {
        if resolution < 8 {
            return Err(Error::Config(format!(
                "grid resolution must be at least 8 samples per axis, got {resolution}"
            )));
        }
        if values.len() != resolution * resolution {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for a {resolution}x{resolution} grid, got {}",
                resolution * resolution,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid values must be finite".into()));
        }
        let axis: Vec<f64> = (0..resolution)
            .map(|i| TAU * i as f64 / resolution as f64)
            .collect();
        let mut min_index = (0, 0);
        let mut max_index = (0, 0);
        let (mut z_min, mut z_max) = (values[0], values[0]);
        for (idx, &v) in values.iter().enumerate() {
            if v < z_min {
                z_min = v;
                min_index = (idx / resolution, idx % resolution);
            }
            if v > z_max {
                z_max = v;
                max_index = (idx / resolution, idx % resolution);
            }
        }
        Ok(Self {
            resolution,
            theta2_axis: axis.clone(),
            theta3_axis: axis,
            values,
            z_min,
            z_max,
            min_index,
            max_index,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn theta2_axis(&self) -> &[f64] {
        &self.theta2_axis
    }

    pub fn theta3_axis(&self) -> &[f64] {
        &self.theta3_axis
    }

    pub fn value(&self, i2: usize, i3: usize) -> f64 {
        self.values[i2 * self.resolution + i3]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Lattice indices of the minimum (first occurrence in row-major
    /// order).
    pub fn min_index(&self) -> (usize, usize) {
        self.min_index
    }

    pub fn max_index(&self) -> (usize, usize) {
        self.max_index
    }

    /// CSV export: header `theta2_rad,theta3_rad,z`, one row per lattice
    /// point in row-major order, 17 significant digits, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 64);
        out.push_str("theta2_rad,theta3_rad,z\n");
        for i2 in 0..self.resolution {
            for i3 in 0..self.resolution {
                out.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e}\n",
                    self.theta2_axis[i2],
                    self.theta3_axis[i3],
                    self.value(i2, i3)
                ));
            }
        }
        out
    }
}

/// Samples z on a `resolution` x `resolution` lattice for a three-joint
/// chain. Chains with more joints need [`evaluate_grid_slice`] to pin the
/// extra angles.
pub fn evaluate_grid(m: &Manipulator, set: &PointSet2, resolution: usize) -> Result<ZGrid> {
    evaluate_grid_slice(m, set, resolution, &[])
}

/// Samples z over (theta2, theta3) with theta1 = 0 and theta4..theta_n
/// fixed at `fixed_tail`. Rows are evaluated in parallel; the output is
/// position-addressed and deterministic.
pub fn evaluate_grid_slice(
    m: &Manipulator,
    set: &PointSet2,
    resolution: usize,
    fixed_tail: &[f64],
) -> Result<ZGrid> {
    if resolution < 8 {
        return Err(Error::Config(format!(
            "grid resolution must be at least 8 samples per axis, got {resolution}"
        )));
    }
    let n = m.n();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "a z grid needs two conditioning joints: the manipulator has only {n} joints"
        )));
    }
    if fixed_tail.len() != n - 3 {
        return Err(Error::InvalidArgument(format!(
            "expected {} fixed tail angles for an {n}-joint chain, got {}",
            n - 3,
            fixed_tail.len()
        )));
    }
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

    let step = TAU / resolution as f64;
    let mut values = vec![0.0f64; resolution * resolution];
    values
        .par_chunks_mut(resolution)
        .enumerate()
        .for_each_init(
            || {
                let mut theta = vec![0.0; n];
                theta[3..].copy_from_slice(fixed_tail);
                theta
            },
            |theta, (i2, row)| {
                theta[1] = step * i2 as f64;
                for (i3, slot) in row.iter_mut().enumerate() {
                    theta[2] = step * i3 as f64;
                    *slot = z_for_angles(&links, theta, &kpts, sum_k2);
                }
            },
        );
    ZGrid::from_values(resolution, values)
}

/// Fraction of the conditioning torus where z stays at or below a
/// threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceMeasure {
    /// The threshold itself.
    #[serde(rename = "z_M")]
    pub z_m: f64,
    /// `cell_count / resolution²`, a scale-free workspace measure.
    pub area_fraction: f64,
    pub cell_count: usize,
}

/// Cell-counting quadrature of the region `z <= z_M` on the torus. The
/// threshold must exceed the grid minimum, else the region is empty.
pub fn workspace_area(grid: &ZGrid, z_m: f64) -> Result<WorkspaceMeasure> {
    if !(z_m > grid.z_min()) {
        return Err(Error::EmptyRegion {
            z_m,
            z_min: grid.z_min(),
        });
    }
    let cell_count = grid.values().iter().filter(|&&v| v <= z_m).count();
    Ok(WorkspaceMeasure {
        z_m,
        area_fraction: cell_count as f64 / grid.values().len() as f64,
        cell_count,
    })
}

/// One traced level curve. `points` are (theta2, theta3) pairs in
/// radians; curves that cross the 2pi seam continue past it (the
/// coordinates form one continuous lift). A closed curve repeats its
/// first point at the end; an open curve either terminates on the window
/// boundary (flat mode) or is periodic: it winds around the torus, the
/// last point sitting one full period from the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub level: f64,
    pub closed: bool,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EdgeKey {
    /// Edge from node (i, j) to (i+1, j): crossing varies along theta2.
    U(usize, usize),
    /// Edge from node (i, j) to (i, j+1): crossing varies along theta3.
    V(usize, usize),
}

/// Marching squares over the grid at each requested level.
///
/// With `wrap` set the lattice is treated as a torus: seam-crossing cells
/// participate and a curve is "closed" exactly when it returns to its
/// start without net winding. Without `wrap` only the flat window's cells
/// are traced, so seam-crossing curves split into boundary-terminated
/// open pieces; z values are identical either way. Levels at or outside
/// the grid's value range yield no contours.
pub fn extract_isocontours(grid: &ZGrid, levels: &[f64], wrap: bool) -> Result<Vec<Contour>> {
    if levels.is_empty() {
        return Err(Error::Config("no contour levels given".into()));
    }
    if levels.iter().any(|l| !l.is_finite()) {
        return Err(Error::Config("contour levels must be finite".into()));
    }
    let mut contours = Vec::new();
    for &level in levels {
        if level <= grid.z_min() || level >= grid.z_max() {
            continue;
        }
        trace_level(grid, level, wrap, &mut contours);
    }
    Ok(contours)
}

fn trace_level(grid: &ZGrid, level: f64, wrap: bool, out: &mut Vec<Contour>) {
    let res = grid.resolution();
    let above = |i: usize, j: usize| grid.value(i % res, j % res) > level;
    let value = |i: usize, j: usize| grid.value(i % res, j % res);

    // Crossing position along an edge, in lattice units from the edge's
    // canonical node. Both cells sharing the edge see the same number.
    let crossing = |key: EdgeKey| -> (f64, f64) {
        match key {
            EdgeKey::U(i, j) => {
                let (a, b) = (value(i, j), value(i + 1, j));
                (i as f64 + (level - a) / (b - a), j as f64)
            }
            EdgeKey::V(i, j) => {
                let (a, b) = (value(i, j), value(i, j + 1));
                (i as f64, j as f64 + (level - a) / (b - a))
            }
        }
    };

    let cells = if wrap { res } else { res - 1 };
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..cells {
        for j in 0..cells {
            let bl = above(i, j);
            let br = above(i + 1, j);
            let tr = above(i + 1, j + 1);
            let tl = above(i, j + 1);
            let case = bl as u8 | (br as u8) << 1 | (tr as u8) << 2 | (tl as u8) << 3;
            if case == 0 || case == 15 {
                continue;
            }
            // Canonical edge keys; the modulo only bites on seam cells,
            // which exist in wrap mode alone.
            let bottom = EdgeKey::U(i, j);
            let top = EdgeKey::U(i, (j + 1) % res);
            let left = EdgeKey::V(i, j);
            let right = EdgeKey::V((i + 1) % res, j);
            let center_above = {
                let c = 0.25
                    * (value(i, j) + value(i + 1, j) + value(i + 1, j + 1) + value(i, j + 1));
                c > level
            };
            match case {
                1 => segments.push((left, bottom)),
                2 => segments.push((bottom, right)),
                3 => segments.push((left, right)),
                4 => segments.push((top, right)),
                5 => {
                    if center_above {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((top, right));
                    }
                }
                6 => segments.push((bottom, top)),
                7 => segments.push((left, top)),
                8 => segments.push((left, top)),
                9 => segments.push((bottom, top)),
                10 => {
                    if center_above {
                        segments.push((left, bottom));
                        segments.push((top, right));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                11 => segments.push((top, right)),
                12 => segments.push((left, right)),
                13 => segments.push((bottom, right)),
                14 => segments.push((left, bottom)),
                _ => unreachable!(),
            }
        }
    }

    // Edge-adjacency graph: every crossing edge touches at most two
    // segments, so components are simple paths or cycles.
    let mut adjacency: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (id, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(id);
        adjacency.entry(*b).or_default().push(id);
    }
    let mut used = vec![false; segments.len()];
    let step = TAU / res as f64;
    let span = res as f64;

    // Lift `raw` next to `prev` (the two differ by whole periods).
    let lift = |raw: (f64, f64), prev: (f64, f64)| -> (f64, f64) {
        let adjust = |c: f64, p: f64| c + span * ((p - c) / span).round();
        (adjust(raw.0, prev.0), adjust(raw.1, prev.1))
    };

    // Walk from a segment in one direction until the chain ends or bites
    // its tail. Cycles are always detected here because every edge of a
    // cycle has degree two.
    fn walk(
        segments: &[(EdgeKey, EdgeKey)],
        adjacency: &BTreeMap<EdgeKey, Vec<usize>>,
        used: &mut [bool],
        start_seg: usize,
    ) -> (Vec<EdgeKey>, bool) {
        let (e0, e1) = segments[start_seg];
        used[start_seg] = true;
        let mut chain = vec![e0, e1];
        loop {
            let last = *chain.last().unwrap();
            if last == chain[0] {
                chain.pop();
                return (chain, true);
            }
            match adjacency[&last].iter().find(|&&id| !used[id]).copied() {
                Some(id) => {
                    used[id] = true;
                    let (a, b) = segments[id];
                    chain.push(if a == last { b } else { a });
                }
                None => return (chain, false),
            }
        }
    }

    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        let (mut chain, cycle) = walk(&segments, &adjacency, &mut used, start);
        if !cycle {
            // a path: extend backwards from the head to its other endpoint
            let mut prefix: Vec<EdgeKey> = Vec::new();
            let mut cursor = chain[0];
            while let Some(id) = adjacency[&cursor].iter().find(|&&id| !used[id]).copied() {
                used[id] = true;
                let (a, b) = segments[id];
                cursor = if a == cursor { b } else { a };
                prefix.push(cursor);
            }
            prefix.reverse();
            prefix.extend(chain);
            chain = prefix;
        }

        // reconstruct one continuous lift of the polyline
        let first = crossing(chain[0]);
        let mut lattice: Vec<(f64, f64)> = Vec::with_capacity(chain.len() + 1);
        lattice.push(first);
        let mut prev = first;
        for &edge in &chain[1..] {
            let p = lift(crossing(edge), prev);
            lattice.push(p);
            prev = p;
        }
        let mut closed = false;
        if cycle {
            let back = lift(crossing(chain[0]), prev);
            // zero net winding means a genuinely closed loop; otherwise
            // the curve is periodic across the torus
            let w2 = ((back.0 - first.0) / span).round() as i64;
            let w3 = ((back.1 - first.1) / span).round() as i64;
            closed = w2 == 0 && w3 == 0;
            lattice.push(back);
        }
        out.push(Contour {
            level,
            closed,
            points: lattice.iter().map(|p| [p.0 * step, p.1 * step]).collect(),
        });
    }
}

/// Axis ratio (>= 1) of the best-fit ellipse of a polyline, from the
/// eigenvalues of the point covariance. `None` for degenerate inputs.
pub fn best_fit_axis_ratio(points: &[[f64; 2]]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in points {
        cx += p[0] / n;
        cy += p[1] / n;
    }
    let mut cov = nalgebra::Matrix2::zeros();
    for p in points {
        let q = nalgebra::Vector2::new(p[0] - cx, p[1] - cy);
        cov += q * q.transpose() / n;
    }
    let (lo, hi) = symmetric_eigenvalues(&cov);
    if lo <= 1e-30 {
        return None;
    }
    Some((hi / lo).sqrt())
}

/// Even-odd containment test of `point` in a closed contour. The query is
/// shifted by whole periods to the lift the contour was traced in.
pub fn contour_encloses(contour: &Contour, point: [f64; 2]) -> bool {
    if !contour.closed || contour.points.len() < 4 {
        return false;
    }
    let pts = &contour.points;
    let n = pts.len() as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in pts {
        cx += p[0] / n;
        cy += p[1] / n;
    }
    let shift = |v: f64, c: f64| v + TAU * ((c - v) / TAU).round();
    let (px, py) = (shift(point[0], cx), shift(point[1], cy));

    let mut inside = false;
    for w in pts.windows(2) {
        let (x1, y1, x2, y2) = (w[0][0], w[0][1], w[1][0], w[1][1]);
        if (y1 > py) != (y2 > py) {
            let x_cross = x1 + (py - y1) / (y2 - y1) * (x2 - x1);
            if x_cross > px {
                inside = !inside;
            }
        }
    }
    inside
}
