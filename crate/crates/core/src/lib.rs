//! Quasi-static quantum Otto cycles in integrable spin chains.
//!
//! The working media are the transverse-field Ising chain and the easy-axis
//! XXZ chain, described through their quasiparticle content. Thermal states
//! follow from the thermodynamic Bethe ansatz ([`tba`]); prethermal
//! adiabatic strokes evolve the filling with generalized hydrodynamics
//! ([`strokes`]); [`cycle`] assembles Otto cycles and the closed-form
//! infinitesimal-cycle efficiencies.

pub mod correlators;
pub mod cycle;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod models;
pub mod state;
pub mod strokes;
pub mod tba;

pub use cycle::{run_cycle, CycleConfig, CycleResult, MediumSelector};
pub use error::{Error, Result};
pub use grid::{RapidityGrid, StringSpectrum};
pub use models::{ChargeId, Model};
pub use state::{gge_distance, interpolate_filling, Field, FillingState, RootDensityState, StateDistance};
pub use strokes::{ghd_stroke, thermal_stroke, work_along, GhdOptions, StrokePath, StrokeTrajectory};
pub use tba::{DiscreteModel, Numerics, ThermalPoint};
