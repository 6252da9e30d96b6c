//! Group-sparse feedback linear-quadratic controller synthesis.
//!
//! The library solves the structured LQ synthesis problem
//!
//! ```text
//! minimize    <R, W> + gamma * ||P||_{s,t;0}
//! subject to  W in PSD cone,  Psi_i(W) in PSD cone,
//!             off-block-diagonal blocks of W1 = 0,
//!             P = W2^T,
//! ```
//!
//! in its vectorized form `min f(W~) + g(P~)  s.t.  A W~ + B P~ = 0`, and
//! recovers a stabilizing block-sparse state-feedback gain `K = W2^T W1^{-1}`.
//!
//! Solver routes:
//! - direct ADMM on the coupled problem ([`engine::run_admm`]),
//! - Douglas-Rachford splitting on the epi-composition form
//!   ([`engine::run_dr`]), equivalent to ADMM under the state map
//!   [`engine::map_admm_to_dr`],
//! - a PALM penalty baseline ([`engine::palm_run`]),
//! - subgradient descent on a difference-of-convex relaxation
//!   ([`engine::subgrad_dc_run`]).
//!
//! Modules follow the data flow: [`linalg`] (dense kernels) -> [`problem`]
//! (constraint assembly) -> [`prox`] (sparsity proximal maps) -> [`cone_qp`]
//! (inner conic QP) -> [`engine`] (outer iterations) -> [`recovery`]
//! (controller extraction).

pub mod cone_qp;
pub mod engine;
pub mod linalg;
pub mod problem;
pub mod prox;
pub mod recovery;

pub use linalg::{DenseMatrix, SymMatrix};
pub use problem::{BlockPartition, SfLqProblem, SystemData};
pub use prox::{ProxKind, ProxSpec};
pub use recovery::Controller;
