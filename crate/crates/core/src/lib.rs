//! Streaming variable selection and estimation for generalized linear models.
//!
//! Data arrive in batches. After each batch only fixed-size summary
//! statistics are kept: the coefficient vector, the cumulative diagonal of
//! the negative Hessian, and a dense Hessian block over the indices that have
//! ever been selected. Each new batch is linearized at the previous estimate,
//! every coordinate is thresholded in closed form (LASSO, SCAD or MCP), the
//! penalty level is picked by an online BIC, and the selected coordinates are
//! refit by a renewable Newton step.
//!
//! ```no_run
//! use renewglm::{Family, PenaltyConfig, SolverConfig, SolverState};
//! # fn batches() -> Vec<renewglm::Batch> { unimplemented!() }
//! let config = SolverConfig::new(PenaltyConfig::scad(3.7));
//! let mut stream = batches().into_iter();
//! let (mut state, _trace) =
//!     SolverState::init_first_batch(&stream.next().unwrap(), &config, Family::GaussianIdentity)?;
//! for batch in stream {
//!     state.process_batch(&batch, &config)?;
//! }
//! println!("active set: {:?}", state.active());
//! # Ok::<(), renewglm::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod glm;
pub mod linalg;
pub mod penalty;
pub mod persistence;
pub mod simulation;
pub mod solver;
pub mod tuning;

pub use error::{Error, Result};
pub use glm::{Batch, Family};
pub use penalty::{CoordinateStat, PenaltyConfig, PenaltyKind};
pub use solver::{select_active, SolverConfig, SolverState};
pub use tuning::BicTrace;
