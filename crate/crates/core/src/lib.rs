//! Risk-averse Bayesian reward learning for gridworld navigation.
//!
//! Demonstrations are scored under a maximum-entropy trajectory model for
//! every weight vector of a small discrete reward space. The resulting
//! posterior yields per-feature marginals whose entropy drives a risk-averse
//! choice of reward weights, which in turn define a costmap for planning.

pub mod bayes;
pub mod demonstrator;
pub mod envmodel;
pub mod error;
pub mod experiment;
pub mod maxent;
pub mod planner;
pub mod riskselect;

pub use error::{Error, Result};
