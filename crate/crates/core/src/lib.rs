//! Polynomial state-feedback synthesis and backward reachable set outer
//! approximations for discrete-time polynomial systems, via moment
//! relaxations of occupation-measure linear programs.
//!
//! The pipeline: describe a system ([`SystemSpec`]), assemble the moment
//! relaxation ([`synth::build_synthesis_sdp`]), solve it with a conic backend
//! ([`conic`]), extract a controller ([`synth::extract_controller`]), certify
//! the closed loop ([`reach`]) and check it by simulation ([`sim`]).

pub mod conic;
pub mod error;
pub mod io;
pub mod moments;
pub mod poly;
pub mod reach;
pub mod sets;
pub mod sim;
pub mod synth;

pub use nalgebra;

pub use conic::{ConicProblem, ConicSolution, SolveStatus, SolverSettings};
pub use error::{Error, Result};
pub use io::{load_system, SystemFile};
pub use moments::MomentVector;
pub use poly::{MultiIndex, Polynomial};
pub use reach::{AutonomousSpec, ReachCertificate};
pub use sets::{InputScaling, SemiAlgebraicSet, SystemSpec};
pub use sim::{GridReport, GridSpec, Outcome, RolloutResult};
pub use synth::{ControllerPoly, DualCertificate, RelaxationOptions};
