//! Equilibria of integer programming games with bilateral payoffs.
//!
//! Games are sampled by best responses and solved exactly on the sample by
//! support enumeration or, for correlated equilibria, by one linear program.

pub mod bench;
pub mod error;
pub mod games;
pub mod instance;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod pns;
pub mod sampled;
pub mod sgm;

pub use error::{Error, Result};
pub use model::{BilateralGame, JointDistribution, MixedStrategy, Profile, PureStrategy};
pub use sampled::{SampledGame, SampledProfile};
