//! Distribution, exact tail asymptotics and rare-event simulation for
//! infinite-server queues in a Markov-modulated environment.
//!
//! Jobs arrive at rate `N lambda_i` and leave at rate `mu_i` while a
//! background chain sits in state `i`. Given the background path the number
//! of jobs at time `t` is Poisson, with a mean that is `N` times a path
//! functional. The crate computes the law of that functional, the exact
//! large-`N` asymptotics of `P(M_N(t) >= N a)` and importance-sampling
//! estimates of the same probability.

pub mod asymptotics;
pub mod error;
pub mod functionals;
pub mod io;
pub mod model;
pub mod montecarlo;
pub mod pde;
pub mod special;

pub use error::{Error, Result};
pub use model::{validate, InitialLaw, Model, ModelSpec, Variant};
