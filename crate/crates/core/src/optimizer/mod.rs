//! Precoder design by semidefinite relaxation and the concave-convex
//! procedure, followed by Gaussian randomization.
//!
//! Each stream rate is a log-ratio of two quadratic forms of the stacked
//! precoder. The forms are bounded by exponentials of auxiliary variables;
//! the convex side becomes an exponential cone and the concave side is
//! linearised around the previous iterate. Lifting `X = p p^H` and dropping
//! the rank constraint leaves a conic program per iteration.

mod cccp;
mod lifting;
mod portions;
mod randomize;
mod subproblem;

pub use cccp::{cccp_solve, initial_precoder, CccpState, ConvergenceReason, SolveTrace};
pub use lifting::{build_lifted_matrices, LiftedForm, LiftedMatrices, Stream, StreamLayout};
pub use portions::{
    equal_portions, objective_value, portions_for, recover_rate_portions, water_fill_portions,
};
pub use randomize::{randomize_and_rescale, RandomizationSettings, RandomizationStats};
pub use subproblem::{assemble_subproblem, Anchors, SubproblemVars, ANCHOR_CLAMP, AUX_BOUND};

use crate::channel::{ChannelError, ChannelSet};
use crate::conic::{ConicError, SolveStatus};
use crate::signal::PrecoderSolution;
use crate::CVector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Conic(#[from] ConicError),
    /// The first subproblem could not be solved. `dump` holds the problem
    /// in the text interchange format.
    #[error("subproblem at iteration {iteration} ended with {status:?}")]
    Subproblem {
        iteration: usize,
        status: SolveStatus,
        dump: String,
    },
}

/// What the design maximises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// `Σ min(T_j, R_j)`
    Ttm,
    /// `Σ R_j`
    Stm,
    /// `min R_j`
    Mmf,
}

/// Everything one precoder design needs.
#[derive(Debug, Clone, Copy)]
pub struct DesignInputs<'a> {
    pub channels: &'a ChannelSet,
    pub geo_precoders: &'a [CVector],
    pub demands: &'a [f64],
    /// LEO power budget `P_L`.
    pub power: f64,
    /// `None` drops the leakage constraint.
    pub il_threshold: Option<f64>,
    pub layout: StreamLayout,
    pub objective: ObjectiveKind,
    pub tolerance: f64,
    pub max_iterations: usize,
}

/// Result of a full design.
#[derive(Debug, Clone)]
pub struct Design {
    pub solution: PrecoderSolution,
    pub state: CccpState,
    pub trace: SolveTrace,
}

/// Runs the whole pipeline: heuristic start, concave-convex iterations and
/// randomized extraction.
pub fn design(
    inputs: &DesignInputs,
    settings: &RandomizationSettings,
) -> Result<Design, OptimizerError> {
    let matrices = build_lifted_matrices(inputs.channels, inputs.geo_precoders, inputs.layout)?;
    if inputs.demands.len() != inputs.channels.k_l() {
        return Err(OptimizerError::Dimension(format!(
            "{} demands for {} LUs",
            inputs.demands.len(),
            inputs.channels.k_l()
        )));
    }
    let init = initial_precoder(&matrices, inputs);
    let (state, mut trace) = cccp_solve(&matrices, inputs, &init)?;
    let (solution, stats) = randomize_and_rescale(&state.x, &matrices, inputs, settings);
    trace.randomization = Some(stats);
    Ok(Design {
        solution,
        state,
        trace,
    })
}
