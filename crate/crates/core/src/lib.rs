//! Long-run analysis of discrete-time imprecise Markov chains.
//!
//! A model is a separately specified set of transition matrices: one credal
//! set of next-state distributions per state, given either as a list of
//! vertices or as probability intervals. The crate evaluates the upper
//! transition operator `T̄` and its topical companion `T̄_f h = f + T̄h`.
//! Ergodicity and weak ergodicity are decided from the accessibility graph
//! of `T̄`. Limit upper expectations and limit upper expected time averages
//! come from the additive eigenvalue of `T̄_f`, and the `oracle` module
//! checks them against brute-force enumeration of compatible precise chains.
//!
//! ```
//! use imcergo::{ergodicity, model, operator::UpperTransitionOperator};
//!
//! let doc = r#"{"states":["a","b"],"rows":{
//!     "a":{"type":"intervals","lower":[0,0],"upper":[1,1]},
//!     "b":{"type":"vertices","pmfs":[[1,0]]}}}"#;
//! let m = model::load_model(doc).unwrap();
//! let op = UpperTransitionOperator::new(&m);
//! let f = model::Gamble::new(vec![0.0, 1.0]).unwrap();
//! let report = ergodicity::full_report(&op, &f, &Default::default()).unwrap();
//! assert!(report.ergodic);
//! assert!((report.limit_upper.unwrap() - 1.0).abs() < 1e-9);
//! assert!((report.limit_avg_upper.unwrap() - 0.5).abs() < 1e-9);
//! ```

pub mod cli;
pub mod ergodicity;
pub mod error;
pub mod generate;
pub mod graph;
pub mod model;
pub mod operator;
pub mod oracle;

pub use error::{Error, Result};
pub use model::{CredalRow, Gamble, IntervalRow, Pmf, StateSet, StateSpace, TransitionModel};
pub use operator::UpperTransitionOperator;
