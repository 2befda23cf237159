//! Feedback equilibria of a deterministic debt-management game.
//!
//! A borrower controls repayment `u` and currency devaluation `v`; risk-neutral
//! lenders price bonds at `p`. The equilibrium value `V*` and price `p*` are built
//! by integrating the Minus-branch backward system from the bankruptcy threshold
//! and restarting at every contact with the constant-strategy envelope `W`.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a > b)` also rejects NaN

pub mod asymptotics;
pub mod backward_solver;
pub mod constant_strategy;
pub mod cost_model;
pub mod equilibrium;
pub mod error;
pub mod hamiltonian;
pub mod ode;
pub mod roots;
pub mod simulator;

pub use backward_solver::{BackwardArc, BackwardSolver, EpsFamily, SolverOptions, StopReason};
pub use constant_strategy::{ConstantStrategy, ConstantStrategyCurve};
pub use cost_model::{
    ConvexCost, CostModel, CostSpec, FnCost, ReferenceDevaluation, ReferenceEffort,
    ValidationReport,
};
pub use equilibrium::{BuildOptions, BuildStatus, EquilibriumSolution, StateEval};
pub use error::{Error, Result};
pub use hamiltonian::{Branch, HamiltonianPoint, Model, ModelParams, ModelSpec, Salvage};
pub use simulator::{
    discounted_cost, price_functional, verify_equilibrium, ConstantControls, EquilibriumFeedback,
    FixedPrice, Outcome, PiecewiseConstant, Policy, PriceMap, SimOptions, Simulator, Trajectory,
    VerificationReport,
};

/// Version string embedded in every output artifact.
pub const ARTIFACT_VERSION: &str = concat!("debtgame ", env!("CARGO_PKG_VERSION"));
