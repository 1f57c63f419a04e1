//! Origin-destination demand calibration against path travel times.
//!
//! The crate is `no_std` (it needs `alloc`) and carries the numerical side of the
//! toolkit: the road network and its fixed routes, a stochastic mesoscopic
//! simulator used as the expensive black box, the differentiable macroscopic
//! network model, and the two calibration algorithms (the physics-informed
//! metamodel and the SPSA baseline). File formats and the command line live in
//! the `odcal` companion crate.
//!
//! Units are SI internally (meters, seconds, meters/second). Demands are in
//! vehicles per hour and densities in vehicles per kilometer per lane.

#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod analytical;
pub mod assignment;
pub mod compare;
pub mod fd;
pub mod mesosim;
pub mod metamodel;
pub mod metrics;
pub mod network;
pub mod objective;
pub mod paths;
pub mod scenario;
pub mod seeds;
pub mod so;
pub mod spsa;

pub use analytical::{AnalyticalModel, AnalyticalState, FdParams, ModelError};
pub use assignment::AssignmentMatrix;
pub use compare::{compare, CompareOptions, ComparisonReport};
pub use mesosim::{make_ground_truth, simulate, SimConfig, SimError, SimResult, Simulator};
pub use metamodel::{fit_beta, run_metamodel, solve_surrogate, MetamodelOptions, MetamodelParams};
pub use metrics::{nrmse, MetricError};
pub use network::{Network, NetworkError, Segment, SegmentId, Zone, ZoneId};
pub use objective::{Evaluation, Objective, SimObjective};
pub use paths::{OdPair, OdVector, PathError, PathSet};
pub use scenario::{generate_scenario, CongestionLevel, Scenario, ScenarioError, ScenarioSpec};
pub use so::{Algorithm, EvalRecord, SoError, SoState};
pub use spsa::{run_spsa, SpsaConfig};
