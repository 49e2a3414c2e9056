//! Energy functional of the interface, stationary-state search, residual
//! diagnostics, and the numerical verification of the harmonic-extension
//! identity for the H^{1/2} self-energy.
//!
//! The energy at applied force F is
//!
//! ```text
//! E(g) = (c/2)·[g]²  +  (-1/N) Σ_j ∫_0^{g_j} φ(x_j, γ) dγ  -  F·mean(g)
//! ```
//!
//! with `[g]²` the two-sided spectral seminorm. The evolution is its L²
//! gradient flow, so `dE·h = -⟨rhs(g), h⟩` and E decreases along
//! trajectories at fixed F.

use crate::evolution::{rhs, run_until_travel, EvolveError, SimConfig, TravelOutcome};
use crate::obstacle::ObstacleField;
use crate::spectral::{signed_wavenumber, GridField, SpectralField};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("y_cutoff {y_cutoff} too small: extension tail {tail:.3e} exceeds {tol:.3e}")]
    CutoffTooSmall { y_cutoff: f64, tail: f64, tol: f64 },
    #[error("quadrature needs an odd number of points >= 3, got {0}")]
    BadQuadrature(usize),
}

/// Additive split of the interface energy; `total` is the exact sum of the
/// three parts.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `(c/2)·[g]²_{H^{1/2}}`.
    pub elastic: f64,
    /// `-(1/N) Σ_j ∫_0^{g_j} φ(x_j, γ) dγ`, from the exact spline (or
    /// analytic) antiderivative in y.
    pub potential: f64,
    /// `-F·mean(g)`.
    pub driving: f64,
    pub total: f64,
}

/// Energy of a state under the given landscape, applied force, and elastic
/// coefficient.
pub fn total_energy(g: &GridField, obstacle: &ObstacleField, f: f64, c: f64) -> EnergyBreakdown {
    let elastic = 0.5 * c * g.forward_transform().h_half_seminorm_sq();
    let n = g.n();
    let mut pot = 0.0;
    for (j, &gj) in g.values().iter().enumerate() {
        pot += obstacle.potential(j as f64 / n as f64, gj);
    }
    let potential = -pot / n as f64;
    let driving = -f * g.mean();
    EnergyBreakdown {
        elastic,
        potential,
        driving,
        total: elastic + potential + driving,
    }
}

/// Stationary-equation defect `-c(-Δ)^{1/2}g + φ(·,g) + F`; identically
/// zero exactly at stationary solutions.
pub fn residual(g: &GridField, obstacle: &ObstacleField, f: f64, c: f64) -> GridField {
    rhs(g, obstacle, f, c)
}

/// Run the gradient flow from g ≡ 0 until it either sticks (returning the
/// stationary state) or travels the averaging length (returning None: no
/// reachable stationary solution at this force).
pub fn find_stationary(
    cfg: &SimConfig,
    obstacle: &ObstacleField,
) -> Result<Option<GridField>, EvolveError> {
    let g0 = GridField::zeros(cfg.n)?;
    let travel = run_until_travel(&g0, cfg, obstacle)?;
    Ok(match travel.outcome {
        TravelOutcome::Stuck => Some(travel.final_state),
        TravelOutcome::Traveled => None,
    })
}

/// Dirichlet energy of the mode-wise harmonic extension
/// `u±(x, y) = Σ_k (ĝ(k)/2) e^{-|k| y} e^{2πikx}` on both half-strips with
/// the jump g split as ±g/2, computed by composite-Simpson quadrature in y.
///
/// Carries the real-field pairing factor 2 of the two-sided seminorm
/// convention, so the exact value equals `(1/2)·h_half_seminorm_sq`. The
/// mean mode carries no extension energy and is excluded from both sides.
pub fn extension_energy_check(
    s: &SpectralField,
    y_cutoff: f64,
    n_quad: usize,
) -> Result<f64, EnergyError> {
    if n_quad < 3 || n_quad % 2 == 0 {
        return Err(EnergyError::BadQuadrature(n_quad));
    }
    let n = s.n();
    // per-mode weights |k|²|ĝ(k)|²; both strips and the convention factor
    // combine to exactly this density (see module docs)
    let modes: Vec<(f64, f64)> = s
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .filter_map(|(j, c)| {
            let k = signed_wavenumber(j, n).unsigned_abs() as f64;
            let w = c.norm_sqr();
            (w > 0.0).then_some((k, w))
        })
        .collect();
    let total_est: f64 = modes.iter().map(|(k, w)| 0.5 * k * w).sum();
    let tail: f64 = modes
        .iter()
        .map(|(k, w)| k * w * (-2.0 * k * y_cutoff).exp())
        .sum();
    let tol = 1e-9 * total_est.max(f64::MIN_POSITIVE);
    if tail > tol {
        return Err(EnergyError::CutoffTooSmall {
            y_cutoff,
            tail,
            tol,
        });
    }
    let density = |y: f64| -> f64 {
        modes
            .iter()
            .map(|(k, w)| k * k * w * (-2.0 * k * y).exp())
            .sum()
    };
    let h = y_cutoff / (n_quad - 1) as f64;
    let mut acc = density(0.0) + density(y_cutoff);
    for i in 1..n_quad - 1 {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * density(i as f64 * h);
    }
    Ok(acc * h / 3.0)
}
