//! Bayesian wavelet shrinkage under a point-mass plus scaled-beta prior,
//! with classical thresholding baselines, risk analysis and a seeded
//! simulation harness.

pub mod baselines;
mod betaquad;
pub mod dwt;
pub mod elicitation;
pub mod error;
pub mod exec;
pub mod pipeline;
pub mod prior;
pub mod quadrature;
pub mod risk;
pub mod shrinkage;
pub mod signals;
pub mod sim;

pub use baselines::{ThresholdPolicy, ThresholdRule, ThresholdScope};
pub use dwt::{CoefficientPyramid, WaveletFilter};
pub use elicitation::{elicit, ElicitationConfig, Elicited, ShapePolicy};
pub use error::{Error, Result};
pub use exec::Execution;
pub use pipeline::{denoise_signal, DenoiseConfig, Method};
pub use prior::BetaMixturePrior;
pub use risk::{RiskAnalyzer, RiskCurve};
pub use shrinkage::{BetaShrinkageRule, ShrinkageRule};
pub use signals::TestFunction;
pub use sim::{run_scenario, ExperimentResult, ExperimentScenario, Generator};
