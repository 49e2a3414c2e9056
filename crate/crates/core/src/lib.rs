//! Simulation and analysis toolkit for a driven elastic interface on the unit
//! torus, evolving by
//!
//! ```text
//! g_t = -c (-Δ)^{1/2} g + φ(x, g(x)) + F
//! ```
//!
//! The half-Laplacian acts as the Fourier multiplier |k|, the heterogeneity φ
//! is a periodic pinning force (a random cubic-spline landscape or one of the
//! analytic 1D families), and F is the applied load. The toolkit covers
//! explicit-Euler time stepping with stuck detection, critical-force
//! bisection, velocity sweeps with power-law fits near the depinning
//! transition, space-time period measurement, the energy functional with
//! stationary-state search, and the 1D ODE model that serves as an analytic
//! cross-check.

pub mod depinning;
pub mod energy;
pub mod evolution;
pub mod obstacle;
pub mod ode;
pub mod schedule;
pub mod spectral;

pub use depinning::{find_critical_force, fit_power_law, velocity_sweep};
pub use energy::{extension_energy_check, find_stationary, total_energy, EnergyBreakdown};
pub use evolution::{
    detect_stuck, measure_period, rhs, run_until_travel, step, SimConfig, Simulation,
    TravelOutcome, TravelResult,
};
pub use obstacle::{build_random_obstacles, Analytic1d, ObstacleField, ObstacleSpec};
pub use ode::{closed_form_velocity, ode_timestep_velocity, period_integral};
pub use spectral::{GridField, SpectralField};
