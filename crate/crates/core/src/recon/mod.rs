//! Reconstruction: proximal operators, the joint objective and solvers, a
//! two-stage sparse baseline and filtered backprojection.

mod fbp;
mod joint;
mod objective;
mod prox;
mod two_stage;

pub use fbp::fbp_reconstruct;
pub use joint::{
    solve_joint, HistoryEntry, JointSolver, JointState, ReconConfig, Termination, Thresholding,
    DIVERGENCE_FACTOR, STOP_WINDOW,
};
pub use objective::{JointProblem, Objective, ObjectiveTerms, Residuals, SOUND_SPEED_FLOOR};
pub use prox::{prox_l1, prox_nonneg};
pub use two_stage::{solve_l1_then_poisson, TwoStageResult};
