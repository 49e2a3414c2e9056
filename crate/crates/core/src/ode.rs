//! The 1D ODE model `ġ = φ(g) + F`: exact period integrals, the closed-form
//! kinetic laws, and a time-stepped cross-check. The PDE reduces to this
//! model on the zero mode for x-independent heterogeneities, which makes it
//! the analytic oracle for the full simulator.

use crate::obstacle::Analytic1d;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("pinned: F = {f} does not exceed -min φ = {f_c}")]
    Pinned { f: f64, f_c: f64 },
    #[error("closed form requires F > {f_c}, got {f}")]
    BelowThreshold { f: f64, f_c: f64 },
    #[error("quadrature failed to converge (interval [{a}, {b}])")]
    QuadratureStalled { a: f64, b: f64 },
    #[error("time stepping stalled: velocity fell below {0:.1e}")]
    Stuck(f64),
}

const VELOCITY_FLOOR: f64 = 1e-14;

/// Smoothness breakpoints of each family inside (0, 1); the quadrature
/// splits there so every panel has a smooth integrand.
fn breakpoints(f: &Analytic1d) -> &'static [f64] {
    match f {
        Analytic1d::AbsLog => &[0.5],
        Analytic1d::PiecewiseLinear => &[0.25, 0.75],
        // smooth, but the integrand peaks sharply at the force minimum
        Analytic1d::Cosine { .. } => &[0.25, 0.5, 0.75],
    }
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, OdeError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let h = b - a;
    let left = h / 12.0 * (fa + 4.0 * flm + fm);
    let right = h / 12.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || h < 1e-15 {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(OdeError::QuadratureStalled { a, b });
    }
    Ok(adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, OdeError> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 60)
}

/// Travel time over one period, `T = ∫_0^1 dg / (F + φ(g))`, by adaptive
/// quadrature to ~1e-10 relative accuracy. The average velocity is `1/T`.
pub fn period_integral(force: &Analytic1d, f: f64) -> Result<f64, OdeError> {
    let f_c = -force.min();
    if f + force.min() <= 0.0 {
        return Err(OdeError::Pinned { f, f_c });
    }
    let integrand = |g: f64| 1.0 / (f + force.eval(g));
    // coarse scale estimate to convert the relative tolerance to absolute
    let mut scale = 0.0;
    for i in 0..=16 {
        scale += integrand(i as f64 / 16.0);
    }
    scale /= 17.0;
    let tol_per_unit = 1e-11 * scale.max(1e-300);

    let mut edges = vec![0.0];
    edges.extend_from_slice(breakpoints(force));
    edges.push(1.0);
    let mut total = 0.0;
    for pair in edges.windows(2) {
        total += integrate(&integrand, pair[0], pair[1], tol_per_unit * (pair[1] - pair[0]))?;
    }
    Ok(total)
}

/// The paper-style closed forms for the average velocity above threshold.
///
/// `abs_log`: `v̄ = 1 / (log F − log(F−1))`, F_c = 1.
/// `piecewise_linear`: `v̄ = 2(F−1) / (1 − log F + F log F + log(F−1) − F log(F−1))`, F_c = 1.
/// `cosine(a)`: `v̄ = sqrt(F² − a²)`, F_c = a.
pub fn closed_form_velocity(force: &Analytic1d, f: f64) -> Result<f64, OdeError> {
    match force {
        Analytic1d::AbsLog => {
            if f <= 1.0 {
                return Err(OdeError::BelowThreshold { f, f_c: 1.0 });
            }
            Ok(1.0 / (f.ln() - (f - 1.0).ln()))
        }
        Analytic1d::PiecewiseLinear => {
            if f <= 1.0 {
                return Err(OdeError::BelowThreshold { f, f_c: 1.0 });
            }
            let lf = f.ln();
            let lf1 = (f - 1.0).ln();
            Ok(2.0 * (f - 1.0) / (1.0 - lf + f * lf + lf1 - f * lf1))
        }
        Analytic1d::Cosine { amplitude } => {
            let a = amplitude.abs();
            if f <= a {
                return Err(OdeError::BelowThreshold { f, f_c: a });
            }
            Ok((f * f - a * a).sqrt())
        }
    }
}

/// Explicit-Euler average velocity over one spatial period, with linear
/// interpolation of the final crossing. Mirrors the PDE stepper on the zero
/// mode.
pub fn ode_timestep_velocity(force: &Analytic1d, f: f64, dt: f64) -> Result<f64, OdeError> {
    assert!(dt > 0.0, "dt must be positive");
    let mut g = 0.0f64;
    // Kahan compensation: near a pinned point the increments drop below one
    // ulp of g and plain accumulation would stall above the velocity floor.
    let mut comp = 0.0f64;
    let mut t = 0.0f64;
    let max_steps = (1e7 / dt) as u64;
    for _ in 0..max_steps {
        let v = force.eval(g) + f;
        if v < VELOCITY_FLOOR {
            return Err(OdeError::Stuck(VELOCITY_FLOOR));
        }
        let y = dt * v - comp;
        let g_next = g + y;
        if g_next >= 1.0 {
            let frac = (1.0 - g) / (g_next - g);
            return Ok(1.0 / (t + frac * dt));
        }
        comp = (g_next - g) - y;
        g = g_next;
        t += dt;
    }
    Err(OdeError::Stuck(VELOCITY_FLOOR))
}
