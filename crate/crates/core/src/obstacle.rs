//! The heterogeneous pinning force φ(x, y): random smooth spline landscapes
//! for the PDE experiments and the analytic 1D families used for the
//! closed-form kinetic laws.
//!
//! Spline landscapes are uniform periodic cubic B-splines on an M×M control
//! grid over the unit cell, built as the y-derivative of a potential with
//! smooth dips of fixed depth at randomly selected cells. The force dipole of
//! a site points "up then down" in y, so sites attract the interface. The
//! construction telescopes, so the landscape has exactly zero mean.
//!
//! The analytic families are kept verbatim from their defining formulas,
//! including the nonzero means of `abs_log` and `piecewise_linear`; those two
//! exist only for kinetic-law cross-checks, not as PDE heterogeneities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of the generator behind [`build_random_obstacles`], pinned in config
/// echoes so runs are reproducible across machines.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha)";

#[derive(Debug, Error)]
pub enum ObstacleError {
    #[error("site_size {0} is not one of 1/8, 1/16, 1/32, 1/64, 1/128")]
    BadSiteSize(f64),
    #[error("site_probability {0} is outside (0, 1)")]
    BadProbability(f64),
    #[error("well_depth {0} must be positive")]
    BadDepth(f64),
    #[error("cosine family needs positive amplitude, got {0}")]
    BadAmplitude(f64),
    #[error("unknown analytic family tag {0:?}")]
    UnknownFamily(String),
    #[error("control grid must be M x M with M >= 4, got {0} values")]
    BadControlGrid(usize),
    #[error("malformed obstacle document: {0}")]
    BadDocument(String),
}

// Uniform cubic B-spline basis pieces on t in [0,1).
#[inline]
fn bspline_weights(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    let t2 = t * t;
    [
        s * s * s / 6.0,
        (3.0 * t2 * t - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t2 * t + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t2 * t / 6.0,
    ]
}

// Antiderivatives of the basis pieces over [0, t]; at t=1 these are
// (1/24, 11/24, 11/24, 1/24).
#[inline]
fn bspline_integrals(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t2 * t2;
    [
        (1.0 - s * s * s * s) / 24.0,
        t4 / 8.0 - t3 / 3.0 + 2.0 * t / 3.0,
        (-0.75 * t4 + t3 + 1.5 * t2 + t) / 6.0,
        t4 / 24.0,
    ]
}

/// Split a real coordinate into (cell index, local parameter) on an M-cell
/// periodic grid over [0, 1).
#[inline]
fn locate(coord: f64, m: usize) -> (usize, f64) {
    let u = (coord - coord.floor()) * m as f64;
    let mut cell = u as usize;
    let mut t = u - cell as f64;
    if cell >= m {
        // coord was within one ulp below an integer
        cell = 0;
        t = 0.0;
    }
    (cell, t)
}

/// Analytic x-independent force families, 1-periodic in y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Analytic1d {
    /// `φ(y) = 2|ỹ - 1/2| - 1`; the logarithmic-law case, F_c = 1.
    AbsLog,
    /// The piecewise ramp `-4ỹ / -1 / -1 + 4(ỹ - 3/4)`; linear-law case, F_c = 1.
    PiecewiseLinear,
    /// `φ(y) = a·cos(2πy)`; smooth non-degenerate case, F_c = a.
    Cosine { amplitude: f64 },
}

impl Analytic1d {
    pub fn eval(&self, y: f64) -> f64 {
        let t = y - y.floor();
        match self {
            Analytic1d::AbsLog => 2.0 * (t - 0.5).abs() - 1.0,
            Analytic1d::PiecewiseLinear => {
                if t < 0.25 {
                    -4.0 * t
                } else if t < 0.75 {
                    -1.0
                } else {
                    -1.0 + 4.0 * (t - 0.75)
                }
            }
            Analytic1d::Cosine { amplitude } => {
                amplitude * (2.0 * std::f64::consts::PI * y).cos()
            }
        }
    }

    /// `∫_0^y φ(γ) dγ`, exact; whole periods contribute the family mean.
    pub fn antiderivative(&self, y: f64) -> f64 {
        let n = y.floor();
        let t = y - n;
        let partial = match self {
            Analytic1d::AbsLog => {
                if t <= 0.5 {
                    -t * t
                } else {
                    t * t - 2.0 * t + 0.5
                }
            }
            Analytic1d::PiecewiseLinear => {
                if t < 0.25 {
                    -2.0 * t * t
                } else if t < 0.75 {
                    -0.125 - (t - 0.25)
                } else {
                    2.0 * t * t - 4.0 * t + 1.25
                }
            }
            Analytic1d::Cosine { amplitude } => {
                amplitude * (2.0 * std::f64::consts::PI * t).sin()
                    / (2.0 * std::f64::consts::PI)
            }
        };
        n * self.mean() + partial
    }

    /// Exact mean over one period.
    pub fn mean(&self) -> f64 {
        match self {
            Analytic1d::AbsLog => -0.5,
            Analytic1d::PiecewiseLinear => -0.75,
            Analytic1d::Cosine { .. } => 0.0,
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            Analytic1d::AbsLog | Analytic1d::PiecewiseLinear => -1.0,
            Analytic1d::Cosine { amplitude } => -amplitude.abs(),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Analytic1d::AbsLog | Analytic1d::PiecewiseLinear => 0.0,
            Analytic1d::Cosine { amplitude } => amplitude.abs(),
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Analytic1d::AbsLog => "abs_log",
            Analytic1d::PiecewiseLinear => "piecewise_linear",
            Analytic1d::Cosine { .. } => "cosine",
        }
    }
}

/// Build an analytic family from its tag; `params` carries the cosine
/// amplitude.
pub fn analytic_force_1d(family: &str, amplitude: Option<f64>) -> Result<Analytic1d, ObstacleError> {
    match family {
        "abs_log" => Ok(Analytic1d::AbsLog),
        "piecewise_linear" => Ok(Analytic1d::PiecewiseLinear),
        "cosine" => {
            let a = amplitude.unwrap_or(1.0);
            if a <= 0.0 {
                return Err(ObstacleError::BadAmplitude(a));
            }
            Ok(Analytic1d::Cosine { amplitude: a })
        }
        other => Err(ObstacleError::UnknownFamily(other.to_string())),
    }
}

/// Parameters of a random spline landscape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    /// Cell size of the control grid; one of 1/8 … 1/128.
    pub site_size: f64,
    /// Probability that a control cell carries a pinning site.
    pub site_probability: f64,
    /// Depth of the potential dip per site. The force dipole amplitude is
    /// `well_depth * M`, so equal maximum force across site sizes means
    /// scaling `well_depth ∝ site_size`.
    pub well_depth: f64,
    pub rng_seed: u64,
}

impl ObstacleSpec {
    pub fn validate(&self) -> Result<usize, ObstacleError> {
        const ALLOWED: [usize; 5] = [8, 16, 32, 64, 128];
        let m = (1.0 / self.site_size).round() as usize;
        if !(self.site_size > 0.0 && ALLOWED.contains(&m) && (1.0 / m as f64) == self.site_size) {
            return Err(ObstacleError::BadSiteSize(self.site_size));
        }
        if !(self.site_probability > 0.0 && self.site_probability < 1.0) {
            return Err(ObstacleError::BadProbability(self.site_probability));
        }
        if !(self.well_depth > 0.0 && self.well_depth.is_finite()) {
            return Err(ObstacleError::BadDepth(self.well_depth));
        }
        Ok(m)
    }
}

/// A periodic cubic-spline force landscape on an M×M control grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineField {
    m: usize,
    /// Row-major control values: `controls[i * m + j]` is the force control
    /// at x-cell `i`, y-cell `j`.
    controls: Vec<f64>,
    amplitude: f64,
    seed: u64,
}

impl SplineField {
    pub fn new(m: usize, controls: Vec<f64>, amplitude: f64, seed: u64) -> Result<Self, ObstacleError> {
        if m < 4 || controls.len() != m * m {
            return Err(ObstacleError::BadControlGrid(controls.len()));
        }
        Ok(Self { m, controls, amplitude, seed })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn controls(&self) -> &[f64] {
        &self.controls
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    fn control(&self, i: isize, j: isize) -> f64 {
        let m = self.m as isize;
        let i = i.rem_euclid(m) as usize;
        let j = j.rem_euclid(m) as usize;
        self.controls[i * self.m + j]
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let (ix, tx) = locate(x, self.m);
        let (iy, ty) = locate(y, self.m);
        let wx = bspline_weights(tx);
        let wy = bspline_weights(ty);
        let mut acc = 0.0;
        for (a, &wa) in wx.iter().enumerate() {
            let i = ix as isize + a as isize - 1;
            let mut row = 0.0;
            for (b, &wb) in wy.iter().enumerate() {
                row += wb * self.control(i, iy as isize + b as isize - 1);
            }
            acc += wa * row;
        }
        self.amplitude * acc
    }

    /// Exact `∫_0^y φ(x,γ) dγ` from the B-spline antiderivative.
    fn potential(&self, x: f64, y: f64) -> f64 {
        let (ix, tx) = locate(x, self.m);
        let wx = bspline_weights(tx);
        let collapse = |j: isize| -> f64 {
            let mut v = 0.0;
            for (a, &wa) in wx.iter().enumerate() {
                v += wa * self.control(ix as isize + a as isize - 1, j);
            }
            v
        };
        let column: Vec<f64> = (0..self.m as isize).map(collapse).collect();
        self.amplitude * column_antiderivative(&column, y)
    }

    /// Mean over the unit cell; equals the mean of the control values.
    fn mean(&self) -> f64 {
        self.amplitude * self.controls.iter().sum::<f64>() / (self.m * self.m) as f64
    }

    /// Lipschitz bounds (L_x, L_y) from adjacent control differences: the
    /// spline derivative is a convex combination of `M·ΔC`.
    fn lipschitz(&self) -> (f64, f64) {
        let m = self.m;
        let mut dx: f64 = 0.0;
        let mut dy: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let c = self.controls[i * m + j];
                dx = dx.max((self.controls[((i + 1) % m) * m + j] - c).abs());
                dy = dy.max((self.controls[i * m + (j + 1) % m] - c).abs());
            }
        }
        let scale = self.amplitude.abs() * m as f64;
        (scale * dx, scale * dy)
    }
}

/// `∫_0^y` of the 1D periodic cubic spline with the given control column.
/// Works for any real `y`; whole periods contribute the column mean.
pub(crate) fn column_antiderivative(column: &[f64], y: f64) -> f64 {
    let m = column.len();
    let c = |j: isize| column[j.rem_euclid(m as isize) as usize];
    let n = y.floor();
    let (cell, t) = locate(y, m);
    // prefix of complete spans: span s integrates (1/M)(C[s-1] + 11C[s] + 11C[s+1] + C[s+2])/24
    let mut acc = 0.0;
    for s in 0..cell as isize {
        acc += (c(s - 1) + 11.0 * (c(s) + c(s + 1)) + c(s + 2)) / 24.0;
    }
    let iw = bspline_integrals(t);
    for (b, &w) in iw.iter().enumerate() {
        acc += w * c(cell as isize + b as isize - 1);
    }
    let period = column.iter().sum::<f64>() / m as f64;
    (acc / m as f64) + n * period
}

/// A pinning landscape: either a 2D spline field or an analytic 1D family.
#[derive(Debug, Clone, PartialEq)]
pub enum ObstacleField {
    Spline2d(SplineField),
    Analytic1d(Analytic1d),
}

impl ObstacleField {
    /// The free interface, φ ≡ 0.
    pub fn zero() -> Self {
        ObstacleField::Analytic1d(Analytic1d::Cosine { amplitude: 0.0 })
    }

    /// Force value at (x, y); both arguments wrap periodically.
    pub fn eval_force(&self, x: f64, y: f64) -> f64 {
        match self {
            ObstacleField::Spline2d(s) => s.eval(x, y),
            ObstacleField::Analytic1d(f) => f.eval(y),
        }
    }

    /// Exact `∫_0^y φ(x,γ) dγ`.
    pub fn potential(&self, x: f64, y: f64) -> f64 {
        match self {
            ObstacleField::Spline2d(s) => s.potential(x, y),
            ObstacleField::Analytic1d(f) => f.antiderivative(y),
        }
    }

    /// Exact mean over the unit cell.
    pub fn mean(&self) -> f64 {
        match self {
            ObstacleField::Spline2d(s) => s.mean(),
            ObstacleField::Analytic1d(f) => f.mean(),
        }
    }

    /// Subtract the exact mean of a spline landscape (known from the control
    /// values). Analytic families are kept verbatim.
    pub fn enforce_zero_mean(self) -> Self {
        match self {
            ObstacleField::Spline2d(mut s) => {
                let mean = s.controls.iter().sum::<f64>() / (s.m * s.m) as f64;
                for c in &mut s.controls {
                    *c -= mean;
                }
                ObstacleField::Spline2d(s)
            }
            other => other,
        }
    }

    /// Global lower bound for φ (convex-combination bound for splines).
    pub fn lower_bound(&self) -> f64 {
        match self {
            ObstacleField::Spline2d(s) => {
                let ext = if s.amplitude >= 0.0 {
                    s.controls.iter().cloned().fold(f64::INFINITY, f64::min)
                } else {
                    s.controls.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                };
                (s.amplitude * ext).min(0.0)
            }
            ObstacleField::Analytic1d(f) => f.min(),
        }
    }

    /// Global upper bound for φ.
    pub fn upper_bound(&self) -> f64 {
        match self {
            ObstacleField::Spline2d(s) => {
                let ext = if s.amplitude >= 0.0 {
                    s.controls.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                } else {
                    s.controls.iter().cloned().fold(f64::INFINITY, f64::min)
                };
                (s.amplitude * ext).max(0.0)
            }
            ObstacleField::Analytic1d(f) => f.max(),
        }
    }

    /// Lipschitz bounds (L_x, L_y).
    pub fn lipschitz(&self) -> (f64, f64) {
        match self {
            ObstacleField::Spline2d(s) => s.lipschitz(),
            ObstacleField::Analytic1d(f) => {
                let l = match f {
                    Analytic1d::AbsLog => 2.0,
                    Analytic1d::PiecewiseLinear => 4.0,
                    Analytic1d::Cosine { amplitude } => {
                        2.0 * std::f64::consts::PI * amplitude.abs()
                    }
                };
                (0.0, l)
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ObstacleDoc::from(self)).expect("obstacle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ObstacleError> {
        let doc: ObstacleDoc = serde_json::from_str(text)
            .map_err(|e| ObstacleError::BadDocument(e.to_string()))?;
        doc.try_into()
    }
}

/// Flat serialization document: `{mode, M, control_values, amplitude, seed,
/// family, params}`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleDoc {
    mode: String,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    control_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Value>,
}

impl From<&ObstacleField> for ObstacleDoc {
    fn from(f: &ObstacleField) -> Self {
        match f {
            ObstacleField::Spline2d(s) => ObstacleDoc {
                mode: "spline2d".into(),
                m: Some(s.m),
                control_values: Some(s.controls.clone()),
                amplitude: Some(s.amplitude),
                seed: Some(s.seed),
                family: None,
                params: None,
            },
            ObstacleField::Analytic1d(a) => ObstacleDoc {
                mode: "analytic1d".into(),
                m: None,
                control_values: None,
                amplitude: None,
                seed: None,
                family: Some(a.tag().into()),
                params: match a {
                    Analytic1d::Cosine { amplitude } => {
                        Some(serde_json::json!({ "amplitude": amplitude }))
                    }
                    _ => None,
                },
            },
        }
    }
}

impl TryFrom<ObstacleDoc> for ObstacleField {
    type Error = ObstacleError;

    fn try_from(doc: ObstacleDoc) -> Result<Self, ObstacleError> {
        match doc.mode.as_str() {
            "spline2d" => {
                let m = doc
                    .m
                    .ok_or_else(|| ObstacleError::BadDocument("spline2d needs M".into()))?;
                let controls = doc
                    .control_values
                    .ok_or_else(|| ObstacleError::BadDocument("spline2d needs control_values".into()))?;
                Ok(ObstacleField::Spline2d(SplineField::new(
                    m,
                    controls,
                    doc.amplitude.unwrap_or(1.0),
                    doc.seed.unwrap_or(0),
                )?))
            }
            "analytic1d" => {
                let family = doc
                    .family
                    .ok_or_else(|| ObstacleError::BadDocument("analytic1d needs family".into()))?;
                let amplitude = doc
                    .params
                    .as_ref()
                    .and_then(|p| p.get("amplitude"))
                    .and_then(|v| v.as_f64());
                if family == "cosine" {
                    // allow the degenerate free-interface amplitude 0 from
                    // ObstacleField::zero() round trips
                    let a = amplitude.unwrap_or(1.0);
                    if a < 0.0 {
                        return Err(ObstacleError::BadAmplitude(a));
                    }
                    return Ok(ObstacleField::Analytic1d(Analytic1d::Cosine { amplitude: a }));
                }
                Ok(ObstacleField::Analytic1d(analytic_force_1d(&family, amplitude)?))
            }
            other => Err(ObstacleError::BadDocument(format!("unknown mode {other:?}"))),
        }
    }
}

/// Build a random spline landscape. Deterministic in `spec.rng_seed`: cells
/// are visited in row-major order and each draws one uniform variate.
///
/// A selected cell (i, j) adds a dip of `well_depth` to the potential control
/// Φ(i, j); force controls are `-M` times the forward y-difference of Φ, so
/// each site carries an up-then-down dipole and every control column sums to
/// zero exactly.
pub fn build_random_obstacles(spec: &ObstacleSpec) -> Result<ObstacleField, ObstacleError> {
    let m = spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut potential = vec![0.0f64; m * m];
    for cell in potential.iter_mut() {
        if rng.gen::<f64>() < spec.site_probability {
            *cell -= spec.well_depth;
        }
    }
    let mut controls = vec![0.0f64; m * m];
    for i in 0..m {
        for j in 0..m {
            let dy = potential[i * m + (j + 1) % m] - potential[i * m + j];
            controls[i * m + j] = -(m as f64) * dy;
        }
    }
    Ok(ObstacleField::Spline2d(SplineField::new(m, controls, 1.0, spec.rng_seed)?).enforce_zero_mean())
}
