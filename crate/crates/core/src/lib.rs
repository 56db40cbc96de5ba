//! Online correctional learning for discrete observation streams.
//!
//! A student estimates a distribution (or a model parameter) from a stream
//! of discrete observations. A teacher who knows the true distribution may
//! alter up to `b` of those observations before the student sees them. This
//! crate computes the teacher's optimal online policy by exact backward
//! induction over the count-vector MDP, provides batch (offline) correction
//! baselines and closed-form error floors, and checks the Hoeffding-style
//! variance bound by Monte-Carlo.
//!
//! ```
//! use corrlearn::{dp, mdp::MdpSpec, observation::Categorical};
//!
//! let theta0 = Categorical::new(vec![0.5, 0.5]).unwrap();
//! let spec = MdpSpec::negative_l1(&theta0, 2, 1).unwrap();
//! let (_policy, values) = dp::solve(&spec).unwrap();
//! assert_eq!(values.root_value(&spec).unwrap(), 0.0);
//! ```

pub mod batch;
pub mod bounds;
pub mod combinatorics;
pub mod dp;
pub mod error;
pub mod experiments;
pub mod likelihood;
pub mod mdp;
pub mod observation;
pub mod teacher;

pub use error::{Error, Result};
pub use observation::{Categorical, CountVector, ObservationSequence, Seed};
