//! Low-rank plus sparse matrix recovery from missing, corrupted, or
//! compressed observations.
//!
//! The low-rank component is factored as `L = U Vᵀ` with orthonormal `U`,
//! which moves the trace-norm penalty onto the small `n x d` factor `V`.
//! Every solver iteration then needs only a thin QR of an `m x d` matrix and
//! an SVD of an `n x d` matrix instead of an SVD of the full `m x n` iterate.
//!
//! Solvers:
//!
//! * [`rmc::solve_rmc`]: robust matrix completion (sparse outliers on a
//!   partially observed matrix), with [`rmc::solve_rpca`] as the fully
//!   observed special case.
//! * [`rmc::solve_mc`]: plain matrix completion with a least-squares fit.
//! * [`cpcp::solve_cpcp`]: recovery from linear measurements `y = P_Q(L + S)`
//!   by a linearized ADMM.
//!
//! Supporting modules provide the dense kernels ([`linalg`]), proximal
//! operators ([`prox`]), observation operators ([`measure`]), problem
//! generators ([`data`]), metrics ([`metrics`]), text formats ([`io`]), and
//! the command-line harness ([`cli`]).
//!
//! ```
//! use lowrank::data::{generate_planted, PlantedSpec};
//! use lowrank::metrics::relative_error;
//! use lowrank::{rmc, SolverConfig};
//!
//! let problem = generate_planted(&PlantedSpec::new(60, 50, 3).spikes(0.05, 1.0).seed(7)).unwrap();
//! let result = rmc::solve_rpca(&problem.d_obs, &SolverConfig::default().with_rank(6)).unwrap();
//! assert!(relative_error(&result.low_rank(), &problem.l0).unwrap() < 1e-2);
//! ```

pub mod cli;
pub mod config;
pub mod cpcp;
pub mod data;
pub mod error;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod measure;
pub mod metrics;
pub mod prox;
pub mod rmc;

pub use config::{IterRecord, Param, RankReduction, SolveResult, SolverConfig, Termination};
pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use measure::{LinearMeasurement, ObservationMask, SubspaceOperator};
