//! Command implementations and file handling behind the `kinetostat`
//! binary.
//!
//! Stable contracts: exit code 0 on success, 2 on input or configuration
//! errors, 3 on numerical degeneracy (no optimal model rotation or no
//! positive conditioning length). Outputs are byte-identical across
//! repeat runs on identical inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::conditioning::{default_model_set, z_value, z_value_relabeled};
use crate::error::Error;
use crate::geom::{trivial_set, default_phase, PointSet2};
use crate::isocontour::{evaluate_grid_slice, extract_isocontours, workspace_area};
use crate::kinematics::{jacobian, Manipulator, Posture};
use crate::optimize::{optimum_posture, OptimizationConfig};

/// The subcommands of the tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Analyze,
    Optimize,
    Isocontour,
    TrivialSet,
    WorkspaceArea,
}

/// A record of one invocation: what ran, on which files, with which
/// overrides. Written next to the outputs on request; never part of the
/// primary outputs, which must stay deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: CommandKind,
    pub inputs: Vec<String>,
    pub output: Option<String>,
    pub config: serde_json::Value,
    pub tool_version: String,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(
        command: CommandKind,
        inputs: &[&Path],
        output: Option<&Path>,
        config: serde_json::Value,
    ) -> Self {
        Self {
            command,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            output: output.map(|p| p.display().to_string()),
            config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// Errors of the command layer, each mapping to a stable exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for input and configuration problems, 3 for numerical
    /// degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::DegenerateAlignment { .. })
            | CliError::Core(Error::IndeterminateRotation) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_manipulator(path: &Path) -> CliResult<Manipulator> {
    read_json(path)
}

pub fn load_posture(path: &Path) -> CliResult<Posture> {
    read_json(path)
}

pub fn load_point_set(path: &Path) -> CliResult<PointSet2> {
    read_json(path)
}

fn model_set_for(m: &Manipulator, set_path: Option<&Path>) -> CliResult<PointSet2> {
    match set_path {
        Some(p) => load_point_set(p),
        None => Ok(default_model_set(m.n())?),
    }
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable output");
    text.push('\n');
    text
}

/// Conditioning record of one posture. The model set defaults to the
/// trivial isotropic set with as many points as joints.
pub fn cmd_analyze(
    manipulator: &Path,
    posture: &Path,
    set: Option<&Path>,
    permutation: Option<&[usize]>,
) -> CliResult<String> {
    let m = load_manipulator(manipulator)?;
    let p = load_posture(posture)?;
    let model = model_set_for(&m, set)?;
    let jb = jacobian(&m, &p)?;
    let result = match permutation {
        Some(perm) => z_value_relabeled(&jb, &model, perm)?,
        None => z_value(&jb, &model)?,
    };
    Ok(to_pretty_json(&result))
}

/// Global optimum posture and characteristic length.
pub fn cmd_optimize(
    manipulator: &Path,
    set: Option<&Path>,
    cfg: &OptimizationConfig,
) -> CliResult<String> {
    let m = load_manipulator(manipulator)?;
    let model = model_set_for(&m, set)?;
    let result = optimum_posture(&m, &model, cfg)?;
    Ok(to_pretty_json(&result))
}

/// Outputs of the isocontour command: the full grid as CSV and, when
/// levels were requested, the traced contours as JSON.
pub struct IsocontourOutput {
    pub grid_csv: String,
    pub contours_json: Option<String>,
}

pub fn cmd_isocontour(
    manipulator: &Path,
    set: Option<&Path>,
    resolution: usize,
    levels: &[f64],
    wrap: bool,
    fixed_tail: &[f64],
) -> CliResult<IsocontourOutput> {
    let m = load_manipulator(manipulator)?;
    let model = model_set_for(&m, set)?;
    let grid = evaluate_grid_slice(&m, &model, resolution, fixed_tail)?;
    let contours_json = if levels.is_empty() {
        None
    } else {
        let contours = extract_isocontours(&grid, levels, wrap)?;
        Some(to_pretty_json(&contours))
    };
    Ok(IsocontourOutput {
        grid_csv: grid.to_csv(),
        contours_json,
    })
}

/// The trivial isotropic set as JSON.
pub fn cmd_trivial_set(n: usize, phase: Option<f64>) -> CliResult<String> {
    let set = trivial_set(n, phase.unwrap_or_else(|| default_phase(n)))?;
    Ok(to_pretty_json(&set))
}

/// Workspace-area measure of the region z <= z_M.
pub fn cmd_workspace_area(
    manipulator: &Path,
    set: Option<&Path>,
    resolution: usize,
    z_max: f64,
    fixed_tail: &[f64],
) -> CliResult<String> {
    let m = load_manipulator(manipulator)?;
    let model = model_set_for(&m, set)?;
    let grid = evaluate_grid_slice(&m, &model, resolution, fixed_tail)?;
    let measure = workspace_area(&grid, z_max)?;
    Ok(to_pretty_json(&measure))
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes the run manifest as JSON.
pub fn write_manifest(manifest: &RunManifest, path: &Path) -> CliResult<()> {
    emit(&to_pretty_json(manifest), Some(path))
}

/// Human-oriented one-line summary of a config for the manifest.
pub fn config_summary(cfg: &OptimizationConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

/// Renders a float list for diagnostics.
pub fn format_angles(angles: &[f64]) -> String {
    let mut s = String::new();
    for (i, a) in angles.iter().enumerate() {
        if i > 0 {
            let _ = write!(s, ", ");
        }
        let _ = write!(s, "{a:.6}");
    }
    s
}
