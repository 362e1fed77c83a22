//! Win ratio design calculations for prioritized time-to-event endpoints.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64` for everyday use, with `f32` variants alongside.

pub mod copula;
pub mod design;
pub mod error;
pub mod mvn;
pub mod quadrature;
pub mod real;
pub mod sim;
pub mod special;
pub mod survival;
pub mod winprob;

pub use error::{Error, Result};
pub use real::Real;

pub use copula::{ArmModel, Copula, GaussianCopula};
pub use design::{DesignSpec, Rounding, Target};
pub use sim::{SimConfig, SimSummary};
pub use survival::{Censoring, Marginal, MarginalKind};
pub use winprob::{compute_table, Arm, Scenario, WinLossTie, WinProbOptions};

pub type MarginalModel = Marginal<f64>;
pub type CensoringModel = Censoring<f64>;
pub type CopulaSpec = Copula<f64>;
pub type ArmJointModel = ArmModel<f64>;
pub type ScenarioSpec = Scenario<f64>;
pub type WinLossTieTable = WinLossTie<f64>;
pub type Design = DesignSpec<f64>;
pub type SimSettings = SimConfig<f64>;

pub type MarginalModelF32 = Marginal<f32>;
pub type CensoringModelF32 = Censoring<f32>;
pub type ArmJointModelF32 = ArmModel<f32>;
pub type ScenarioSpecF32 = Scenario<f32>;
pub type WinLossTieTableF32 = WinLossTie<f32>;
