//! Critical-force bisection, velocity sweeps above threshold, and power-law
//! fits near the depinning transition.
//!
//! Bisection classifies each probe force by running the evolution from the
//! flat zero state: stuck means F < F*, traveled means F ≥ F*. A probe whose
//! certified minimum mean velocity `mean_x(min_y φ) + F` exceeds the stuck
//! threshold is classified as traveled without stepping — the discrete mean
//! advances at least that fast at every step, so neither sticking nor
//! non-travel is possible. This keeps trivially-depinned probes (free
//! interface, analytic forces far above threshold) out of the time loop;
//! every velocity measurement still runs the full dynamics.

use crate::evolution::{
    measure_period, run_until_travel, EvolveError, SimConfig, Simulation, TravelOutcome,
};
use crate::obstacle::ObstacleField;
use crate::schedule::run_jobs;
use crate::spectral::GridField;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DepinError {
    #[error("invalid bracket [{lower}, {upper}]: {reason}")]
    BadBracket { lower: f64, upper: f64, reason: String },
    #[error("inconclusive probe at F = {f}: {steps} steps without classification")]
    InconclusiveProbe { f: f64, steps: u64 },
    #[error("all sweep runs stuck; F* estimate is wrong")]
    AllStuck,
    #[error("v̄ not monotone at F = {f}: {v} after {v_prev} (tolerance 1e-6)")]
    NonMonotone { f: f64, v: f64, v_prev: f64 },
    #[error("power-law fit needs at least {need} usable points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("power-law fit window spans {decades:.2} decades, needs at least 2")]
    TooFewDecades { decades: f64 },
    #[error(transparent)]
    Evolve(#[from] EvolveError),
}

/// Bracket and termination settings of the F* bisection. Defaults follow
/// the reference parameter table: initial bracket [0, 0.5], accuracy 2e-9.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BisectionOptions {
    pub lower: f64,
    pub upper: f64,
    pub accuracy: f64,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        BisectionOptions {
            lower: 0.0,
            upper: 0.5,
            accuracy: 2e-9,
        }
    }
}

/// One classified bisection probe.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub f: f64,
    pub traveled: bool,
    /// Steps actually taken; zero when the travel certificate fired.
    pub steps: u64,
    pub certified: bool,
}

/// Final bracket of the critical force: every probe at or below `lower`
/// stuck, every probe at or above `upper` traveled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalForce {
    pub lower: f64,
    pub upper: f64,
    pub probes: Vec<ProbeRecord>,
}

fn classify(
    cfg: &SimConfig,
    obstacle: &ObstacleField,
    f: f64,
) -> Result<ProbeRecord, DepinError> {
    let cfg = cfg.with_force(f);
    let g0 = GridField::zeros(cfg.n).map_err(EvolveError::from)?;
    let sim = Simulation::new(&cfg, obstacle, &g0)?;
    if sim.certified_min_velocity() > cfg.stuck_threshold {
        return Ok(ProbeRecord {
            f,
            traveled: true,
            steps: 0,
            certified: true,
        });
    }
    match run_until_travel(&g0, &cfg, obstacle) {
        Ok(r) => Ok(ProbeRecord {
            f,
            traveled: r.outcome == TravelOutcome::Traveled,
            steps: (r.elapsed_time / cfg.dt) as u64,
            certified: false,
        }),
        Err(EvolveError::Inconclusive { steps, .. }) => {
            Err(DepinError::InconclusiveProbe { f, steps })
        }
        Err(e) => Err(e.into()),
    }
}

/// Bisect for the critical force on the classification of
/// [`run_until_travel`], always starting each probe from g ≡ 0. Terminates
/// when the bracket is narrower than `opts.accuracy`.
pub fn find_critical_force(
    cfg: &SimConfig,
    obstacle: &ObstacleField,
    opts: &BisectionOptions,
) -> Result<CriticalForce, DepinError> {
    if !(opts.lower >= 0.0 && opts.upper > opts.lower && opts.accuracy > 0.0) {
        return Err(DepinError::BadBracket {
            lower: opts.lower,
            upper: opts.upper,
            reason: "need 0 <= lower < upper and accuracy > 0".into(),
        });
    }
    let mut probes = Vec::new();
    let low = classify(cfg, obstacle, opts.lower)?;
    probes.push(low);
    if low.traveled {
        return Err(DepinError::BadBracket {
            lower: opts.lower,
            upper: opts.upper,
            reason: format!("run at lower bound F = {} traveled; lower the bracket", opts.lower),
        });
    }
    let high = classify(cfg, obstacle, opts.upper)?;
    probes.push(high);
    if !high.traveled {
        return Err(DepinError::BadBracket {
            lower: opts.lower,
            upper: opts.upper,
            reason: format!("run at upper bound F = {} stuck; raise the bracket", opts.upper),
        });
    }
    let mut lower = opts.lower;
    let mut upper = opts.upper;
    while upper - lower > opts.accuracy {
        let mid = 0.5 * (lower + upper);
        if mid <= lower || mid >= upper {
            break; // resolution limit of f64
        }
        let probe = classify(cfg, obstacle, mid)?;
        probes.push(probe);
        if probe.traveled {
            upper = mid;
        } else {
            lower = mid;
        }
    }
    Ok(CriticalForce { lower, upper, probes })
}

/// Log-spaced excess-force grid for a velocity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    /// Smallest F - F* probed.
    pub eps_min: f64,
    /// Largest F - F* probed.
    pub eps_max: f64,
    pub points: usize,
    /// Also measure the space-time period (and its defect) at each force.
    pub measure_periods: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        // three decades below eps_max = 0.1, per the reference experiment
        SweepSpec {
            eps_min: 1e-4,
            eps_max: 1e-1,
            points: 16,
            measure_periods: true,
        }
    }
}

impl SweepSpec {
    /// `points` forces spanning `decades` decades below `eps_max`.
    pub fn from_decades(eps_max: f64, decades: f64, points: usize) -> Self {
        SweepSpec {
            eps_min: eps_max * 10f64.powf(-decades),
            eps_max,
            points,
            measure_periods: true,
        }
    }

    pub fn excesses(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.eps_max];
        }
        let ratio = self.eps_max / self.eps_min;
        (0..self.points)
            .map(|i| self.eps_min * ratio.powf(i as f64 / (self.points - 1) as f64))
            .collect()
    }
}

/// One traveled sweep run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepPoint {
    pub f: f64,
    /// F - F* as assigned by the sweep grid.
    pub eps: f64,
    /// averaging_length / elapsed_time.
    pub v_bar: f64,
    pub elapsed_time: f64,
    pub period: Option<f64>,
    pub defect: Option<f64>,
}

/// Sweep results ordered by force; stuck forces are reported separately and
/// excluded from the points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub stuck: Vec<f64>,
}

/// Measure v̄(F) at forces `f_star + eps` for each grid excess, running
/// probes concurrently on `workers` threads. Results are deterministic and
/// ordered by F; a decrease of v̄ beyond 1e-6 flags misclassification.
pub fn velocity_sweep(
    cfg: &SimConfig,
    obstacle: &ObstacleField,
    f_star: f64,
    spec: &SweepSpec,
    workers: usize,
) -> Result<SweepOutcome, DepinError> {
    let excesses = spec.excesses();
    let results = run_jobs(excesses.len(), workers, |i| {
        let eps = excesses[i];
        let run_cfg = cfg.with_force(f_star + eps);
        let g0 = match GridField::zeros(run_cfg.n) {
            Ok(g) => g,
            Err(e) => return Err(DepinError::Evolve(e.into())),
        };
        let travel = run_until_travel(&g0, &run_cfg, obstacle)?;
        if travel.outcome == TravelOutcome::Stuck {
            return Ok(None);
        }
        let (period, defect) = if spec.measure_periods {
            let m = measure_period(&run_cfg, obstacle)?;
            (Some(m.period), Some(m.defect))
        } else {
            (None, None)
        };
        Ok(Some(SweepPoint {
            f: run_cfg.f,
            eps,
            v_bar: run_cfg.averaging_length / travel.elapsed_time,
            elapsed_time: travel.elapsed_time,
            period,
            defect,
        }))
    });

    let mut points = Vec::new();
    let mut stuck = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r? {
            Some(p) => points.push(p),
            None => stuck.push(f_star + excesses[i]),
        }
    }
    if points.is_empty() {
        return Err(DepinError::AllStuck);
    }
    points.sort_by(|a, b| a.f.total_cmp(&b.f));
    for pair in points.windows(2) {
        if pair[1].v_bar < pair[0].v_bar - 1e-6 {
            return Err(DepinError::NonMonotone {
                f: pair[1].f,
                v: pair[1].v_bar,
                v_prev: pair[0].v_bar,
            });
        }
    }
    Ok(SweepOutcome { points, stuck })
}

/// Fitted power law `v̄ ≈ prefactor · (F - F*)^exponent`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    /// Range of F - F* actually fitted.
    pub window: (f64, f64),
    pub points_used: usize,
}

/// Window of excess forces admitted to the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub min_eps: f64,
    pub max_eps: f64,
}

impl FitWindow {
    /// Default exclusions: excesses below 10× the bisection accuracy (F*
    /// uncertainty biases them) and the largest decade of the sweep (the
    /// crossover toward linear response).
    pub fn auto(sweep: &[SweepPoint], bisection_accuracy: f64) -> FitWindow {
        let max_eps = sweep.iter().map(|p| p.eps).fold(0.0f64, f64::max);
        FitWindow {
            min_eps: 10.0 * bisection_accuracy,
            max_eps: max_eps / 10.0,
        }
    }

    pub fn all() -> FitWindow {
        FitWindow {
            min_eps: 0.0,
            max_eps: f64::INFINITY,
        }
    }
}

/// Least-squares line through `(log(F - F*), log v̄)`. Requires at least 8
/// points spanning at least two decades of excess force.
pub fn fit_power_law(
    sweep: &[SweepPoint],
    f_star: f64,
    window: FitWindow,
) -> Result<PowerLawFit, DepinError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut eps_lo = f64::INFINITY;
    let mut eps_hi = 0.0f64;
    for p in sweep {
        let eps = p.f - f_star;
        if eps < window.min_eps || eps > window.max_eps || eps <= 0.0 || p.v_bar <= 0.0 {
            continue;
        }
        xs.push(eps.ln());
        ys.push(p.v_bar.ln());
        eps_lo = eps_lo.min(eps);
        eps_hi = eps_hi.max(eps);
    }
    if xs.len() < 8 {
        return Err(DepinError::TooFewPoints { need: 8, got: xs.len() });
    }
    let decades = (eps_hi / eps_lo).log10();
    if decades < 2.0 - 1e-9 {
        return Err(DepinError::TooFewDecades { decades });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
        window: (eps_lo, eps_hi),
        points_used: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obstacle::Analytic1d;
    use crate::ode::closed_form_velocity;

    fn small_cfg(n: usize) -> SimConfig {
        SimConfig {
            n,
            ..SimConfig::default()
        }
    }

    #[test]
    fn free_interface_bracket_collapses_to_zero() {
        let cfg = small_cfg(64);
        let r = find_critical_force(&cfg, &ObstacleField::zero(), &BisectionOptions::default())
            .unwrap();
        assert_eq!(r.lower, 0.0);
        assert!(r.upper <= 2e-9, "upper = {}", r.upper);
        // all positive probes were certified without stepping
        assert!(r.probes.iter().filter(|p| p.f > 0.0).all(|p| p.certified));
    }

    #[test]
    fn invalid_brackets_are_rejected() {
        let cfg = small_cfg(64);
        let zero = ObstacleField::zero();
        // lower bound that travels
        let bad = BisectionOptions {
            lower: 0.1,
            upper: 0.5,
            accuracy: 1e-3,
        };
        assert!(matches!(
            find_critical_force(&cfg, &zero, &bad),
            Err(DepinError::BadBracket { .. })
        ));
        // upper bound that sticks
        let cos = ObstacleField::Analytic1d(Analytic1d::Cosine { amplitude: 1.0 });
        let bad = BisectionOptions {
            lower: 0.0,
            upper: 0.5,
            accuracy: 1e-3,
        };
        assert!(matches!(
            find_critical_force(&small_cfg(16), &cos, &bad),
            Err(DepinError::BadBracket { .. })
        ));
    }

    #[test]
    fn cosine_critical_force_is_the_force_minimum() {
        // F_c = -min φ = 1 for the unit cosine; pure ODE pinning of the
        // flat interface. Coarse accuracy keeps the stuck probes short.
        let cfg = SimConfig {
            n: 16,
            dt: 2e-3,
            ..SimConfig::default()
        };
        let cos = ObstacleField::Analytic1d(Analytic1d::Cosine { amplitude: 1.0 });
        let opts = BisectionOptions {
            lower: 0.0,
            upper: 1.5,
            accuracy: 1e-4,
        };
        let r = find_critical_force(&cfg, &cos, &opts).unwrap();
        assert!(r.upper - r.lower <= 1e-4);
        assert!(
            r.lower <= 1.0 && 1.0 <= r.upper + 2e-3,
            "bracket [{}, {}]",
            r.lower,
            r.upper
        );
        // probes above 1 certify instantly
        assert!(r.probes.iter().filter(|p| p.f > 1.0).all(|p| p.certified));
    }

    #[test]
    fn free_interface_sweep_recovers_v_equals_f() {
        let cfg = small_cfg(64);
        let spec = SweepSpec {
            eps_min: 1e-2,
            eps_max: 1.0,
            points: 9,
            measure_periods: false,
        };
        let out = velocity_sweep(&cfg, &ObstacleField::zero(), 0.0, &spec, 2).unwrap();
        assert!(out.stuck.is_empty());
        for p in &out.points {
            assert!(
                (p.v_bar - p.f).abs() <= 1e-6 * p.f,
                "v̄ = {} at F = {}",
                p.v_bar,
                p.f
            );
        }
    }

    #[test]
    fn synthetic_sqrt_law_is_recovered_exactly() {
        let f_star = 0.37;
        let points: Vec<SweepPoint> = (0..12)
            .map(|i| {
                let eps = 1e-4 * 10f64.powf(i as f64 / 4.0);
                SweepPoint {
                    f: f_star + eps,
                    eps,
                    v_bar: 3.0 * eps.sqrt(),
                    elapsed_time: 0.0,
                    period: None,
                    defect: None,
                }
            })
            .collect();
        let fit = fit_power_law(&points, f_star, FitWindow::all()).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-12);
        assert!((fit.prefactor - 3.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.points_used, 12);
    }

    #[test]
    fn abs_log_family_is_not_a_power_law() {
        // negative control: velocities from the logarithmic closed form give
        // window-dependent slopes far from 1/2
        let fam = Analytic1d::AbsLog;
        let make = |eps_min: f64| -> Vec<SweepPoint> {
            (0..12)
                .map(|i| {
                    let eps = eps_min * 10f64.powf(i as f64 / 5.5);
                    let v = closed_form_velocity(&fam, 1.0 + eps).unwrap();
                    SweepPoint {
                        f: 1.0 + eps,
                        eps,
                        v_bar: v,
                        elapsed_time: 0.0,
                        period: None,
                        defect: None,
                    }
                })
                .collect()
        };
        let hi = fit_power_law(&make(1e-4), 1.0, FitWindow::all()).unwrap();
        let lo = fit_power_law(&make(1e-6), 1.0, FitWindow::all()).unwrap();
        assert!((hi.exponent - lo.exponent).abs() > 0.03, "no window drift");
        assert!(hi.exponent < 0.3, "slope {} looks like a power law", hi.exponent);
    }

    #[test]
    fn fit_validation_errors() {
        let points: Vec<SweepPoint> = (0..5)
            .map(|i| {
                let eps = 1e-3 * 2f64.powi(i);
                SweepPoint {
                    f: eps,
                    eps,
                    v_bar: eps.sqrt(),
                    elapsed_time: 0.0,
                    period: None,
                    defect: None,
                }
            })
            .collect();
        assert!(matches!(
            fit_power_law(&points, 0.0, FitWindow::all()),
            Err(DepinError::TooFewPoints { .. })
        ));
        let narrow: Vec<SweepPoint> = (0..10)
            .map(|i| {
                let eps = 1e-3 * (1.0 + i as f64 * 0.1);
                SweepPoint {
                    f: eps,
                    eps,
                    v_bar: eps.sqrt(),
                    elapsed_time: 0.0,
                    period: None,
                    defect: None,
                }
            })
            .collect();
        assert!(matches!(
            fit_power_law(&narrow, 0.0, FitWindow::all()),
            Err(DepinError::TooFewDecades { .. })
        ));
    }

    #[test]
    fn sweep_is_worker_count_independent() {
        let cfg = small_cfg(32);
        let spec = SweepSpec {
            eps_min: 0.05,
            eps_max: 0.5,
            points: 6,
            measure_periods: false,
        };
        let a = velocity_sweep(&cfg, &ObstacleField::zero(), 0.0, &spec, 1).unwrap();
        let b = velocity_sweep(&cfg, &ObstacleField::zero(), 0.0, &spec, 4).unwrap();
        assert_eq!(a.points.len(), b.points.len());
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.f, y.f);
            assert_eq!(x.v_bar, y.v_bar);
        }
    }
}
