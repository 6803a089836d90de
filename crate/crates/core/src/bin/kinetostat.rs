//! Kinetostatic conditioning analysis of planar revolute serial chains.
//!
//! Subcommands: `analyze` (conditioning record of one posture),
//! `optimize` (global optimum posture and characteristic length),
//! `isocontour` (z map as CSV plus traced level curves), `trivial-set`
//! (regular-polygon model sets) and `workspace-area` (fraction of the
//! conditioning torus with z below a threshold).
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 numerical
//! degeneracy.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};

use kinetostat::cli::{
    cmd_analyze, cmd_isocontour, cmd_optimize, cmd_trivial_set, cmd_workspace_area, emit,
    write_manifest, CliError, CliResult, CommandKind, RunManifest,
};
use kinetostat::optimize::OptimizationConfig;

#[derive(Parser)]
#[command(
    name = "kinetostat",
    version,
    about = "Conditioning analysis of planar n-revolute serial manipulators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Interpret command-line angles (--theta1, --phase, --fixed) as
    /// degrees.
    #[arg(long, global = true, action = ArgAction::SetTrue)]
    degrees: bool,

    /// Interpret command-line angles as radians (the default).
    #[arg(long, global = true, action = ArgAction::SetTrue, conflicts_with = "degrees")]
    radians: bool,

    /// Write a run manifest (command, inputs, config, version, timestamp)
    /// to this path.
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// Samples per axis of the (theta2, theta3) grid.
    #[arg(long, default_value_t = 360)]
    resolution: usize,

    /// Fixed values for theta4..theta_n when the chain has more than
    /// three joints.
    #[arg(long, value_delimiter = ',', num_args = 1.., value_name = "ANGLES")]
    fixed: Vec<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Conditioning record (z, conditioning length, model rotation,
    /// condition number) of one posture.
    Analyze {
        /// Manipulator JSON: {"link_lengths": [a1, ..., an]}.
        manipulator: PathBuf,
        /// Posture JSON: {"theta_deg": [...]} or {"theta_rad": [...]}.
        posture: PathBuf,
        /// Model point-set JSON: {"points": [[x, y], ...]}; defaults to
        /// the trivial set with one point per joint.
        set: Option<PathBuf>,
        /// Relabeling of the model points: joint j pairs with point
        /// PERM[j].
        #[arg(long, value_delimiter = ',', num_args = 1.., value_name = "PERM")]
        permutation: Option<Vec<usize>>,
        /// Output path (stdout if omitted).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },

    /// Global optimum posture, minimum z and characteristic length.
    Optimize {
        manipulator: PathBuf,
        set: Option<PathBuf>,
        /// Samples per axis of the search grid (defaults to 720 for up to
        /// two conditioning joints, 180 for three).
        #[arg(long)]
        resolution: Option<usize>,
        /// Pinned base-joint angle.
        #[arg(long, default_value_t = 0.0)]
        theta1: f64,
        /// Stop refining once the z improvement falls below this.
        #[arg(long, default_value_t = 1e-12)]
        refine_tolerance: f64,
        /// Iteration cap per local refinement.
        #[arg(long, default_value_t = 200)]
        max_refine_iters: usize,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },

    /// z grid over the conditioning torus as CSV, plus optional traced
    /// isocontours.
    Isocontour {
        manipulator: PathBuf,
        set: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        /// Contour levels to trace.
        #[arg(long, value_delimiter = ',', num_args = 1.., value_name = "LEVELS")]
        levels: Vec<f64>,
        /// Treat the grid as a flat window instead of a torus: seam
        /// cells are skipped, so curves crossing 2pi terminate instead
        /// of wrapping. Grid values are unaffected.
        #[arg(long, action = ArgAction::SetTrue)]
        no_wrap: bool,
        /// CSV output path (stdout if omitted).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Contour JSON output path; defaults to the CSV path with a
        /// .contours.json suffix, or stdout after the CSV.
        #[arg(long, value_name = "PATH")]
        contours_out: Option<PathBuf>,
    },

    /// Vertices of the regular n-gon of radius sqrt(2) (the trivial
    /// isotropic model set).
    TrivialSet {
        /// Number of vertices (at least 3).
        n: usize,
        /// Phase of the first vertex; default reproduces the reference
        /// orientation.
        #[arg(long)]
        phase: Option<f64>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },

    /// Fraction of the conditioning torus with z at or below a threshold.
    WorkspaceArea {
        manipulator: PathBuf,
        set: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        /// The threshold z_M.
        #[arg(long, value_name = "Z")]
        z_max: f64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn angle_in(value: f64, degrees: bool) -> f64 {
    if degrees {
        value.to_radians()
    } else {
        value
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let degrees = cli.degrees;
    match &cli.command {
        Command::Analyze {
            manipulator,
            posture,
            set,
            permutation,
            out,
        } => {
            let text = cmd_analyze(
                manipulator,
                posture,
                set.as_deref(),
                permutation.as_deref(),
            )?;
            emit(&text, out.as_deref())?;
            maybe_manifest(
                &cli,
                CommandKind::Analyze,
                &manifest_inputs(&[Some(manipulator), Some(posture), set.as_deref()]),
                out.as_deref(),
                serde_json::json!({ "permutation": permutation }),
            )
        }
        Command::Optimize {
            manipulator,
            set,
            resolution,
            theta1,
            refine_tolerance,
            max_refine_iters,
            out,
        } => {
            let cfg = OptimizationConfig {
                grid_resolution: resolution.map(|samples| TAU / samples.max(1) as f64),
                refine_tolerance: *refine_tolerance,
                max_refine_iters: *max_refine_iters,
                theta1: angle_in(*theta1, degrees),
            };
            let text = cmd_optimize(manipulator, set.as_deref(), &cfg)?;
            emit(&text, out.as_deref())?;
            maybe_manifest(
                &cli,
                CommandKind::Optimize,
                &manifest_inputs(&[Some(manipulator), set.as_deref()]),
                out.as_deref(),
                kinetostat::cli::config_summary(&cfg),
            )
        }
        Command::Isocontour {
            manipulator,
            set,
            grid,
            levels,
            no_wrap,
            out,
            contours_out,
        } => {
            let fixed: Vec<f64> = grid.fixed.iter().map(|a| angle_in(*a, degrees)).collect();
            let output = cmd_isocontour(
                manipulator,
                set.as_deref(),
                grid.resolution,
                levels,
                !no_wrap,
                &fixed,
            )?;
            emit(&output.grid_csv, out.as_deref())?;
            if let Some(contours) = &output.contours_json {
                let target = contours_out.clone().or_else(|| {
                    out.as_ref()
                        .map(|p| p.with_extension("contours.json"))
                });
                emit(contours, target.as_deref())?;
            }
            maybe_manifest(
                &cli,
                CommandKind::Isocontour,
                &manifest_inputs(&[Some(manipulator), set.as_deref()]),
                out.as_deref(),
                serde_json::json!({
                    "resolution": grid.resolution,
                    "levels": levels,
                    "wrap": !no_wrap,
                    "fixed": fixed,
                }),
            )
        }
        Command::TrivialSet { n, phase, out } => {
            let text = cmd_trivial_set(*n, phase.map(|p| angle_in(p, degrees)))?;
            emit(&text, out.as_deref())?;
            maybe_manifest(
                &cli,
                CommandKind::TrivialSet,
                &[],
                out.as_deref(),
                serde_json::json!({ "n": n, "phase": phase }),
            )
        }
        Command::WorkspaceArea {
            manipulator,
            set,
            grid,
            z_max,
            out,
        } => {
            let fixed: Vec<f64> = grid.fixed.iter().map(|a| angle_in(*a, degrees)).collect();
            let text = cmd_workspace_area(
                manipulator,
                set.as_deref(),
                grid.resolution,
                *z_max,
                &fixed,
            )?;
            emit(&text, out.as_deref())?;
            maybe_manifest(
                &cli,
                CommandKind::WorkspaceArea,
                &manifest_inputs(&[Some(manipulator), set.as_deref()]),
                out.as_deref(),
                serde_json::json!({
                    "resolution": grid.resolution,
                    "z_max": z_max,
                    "fixed": fixed,
                }),
            )
        }
    }
}

fn manifest_inputs<'a>(paths: &[Option<&'a Path>]) -> Vec<&'a Path> {
    paths.iter().flatten().copied().collect()
}

fn maybe_manifest(
    cli: &Cli,
    command: CommandKind,
    inputs: &[&Path],
    output: Option<&Path>,
    config: serde_json::Value,
) -> CliResult<()> {
    if let Some(path) = &cli.manifest {
        for input in inputs {
            if !input.exists() {
                return Err(CliError::Usage(format!(
                    "manifest requires existing inputs, missing {}",
                    input.display()
                )));
            }
        }
        let manifest = RunManifest::new(command, inputs, output, config);
        write_manifest(&manifest, path)?;
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
