//! Deterministic simulator for residential peak-load reduction under
//! customer engagement plans.
//!
//! A community of homes owns shiftable appliances (dryers, dish washers)
//! and thermostatically controlled loads (air conditioners, water heaters).
//! An [`EngagementPlan`] bounds how far each class may be delayed or
//! throttled. [`evaluate_plan`] runs the operator/home protocol and reports
//! the resulting community peak.

pub mod community;
pub mod config;
pub mod constraints;
pub mod coordinator;
pub mod curve;
pub mod error;
pub mod grid;
pub mod output;
pub mod plan;
pub mod shiftable;
pub mod sweep;
pub mod thermal;
pub mod thermostat;
pub mod units;

pub use community::{aggregate, generate_community, Community, CommunityConfig, Customer};
pub use coordinator::{evaluate_plan, Evaluation, EvaluationOptions, SimulationReport};
pub use curve::LoadCurve;
pub use error::{Error, Result};
pub use grid::{LoadProfile, TimeGrid};
pub use plan::{EngagementPlan, LoadClassId, PlanMode, PlanTerm};
