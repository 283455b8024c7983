//! Explicit Gauss curvature flow `∂ₜs = −1/σ_{n−1}` on a sampled support function, with
//! per-snapshot diagnostics of the volume-normalized body.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::body::{BodySpec, SupportField};
use crate::error::{Error, Result};
use crate::functionals::{entropy, entropy_p, gap_from_optimum};
use crate::grid::{ball_volume, Grid, DEFAULT_CIRCLE_RESOLUTION, DEFAULT_SPHERE_RESOLUTION};
use crate::linalg::sym2_eigenvalues;
use crate::point::Point;

/// Retries allowed per step, each halving `dt`, before the run stops.
pub const MAX_HALVINGS: u32 = 30;

/// Diagnostics that can be evaluated at a snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Diagnostic {
    Entropy,
    EntropyP,
    Pinching,
    MinGauss,
    StabilityGap,
    SolitonResidual,
    Ck,
}

impl Diagnostic {
    pub const ALL: [Diagnostic; 7] = [
        Diagnostic::Entropy,
        Diagnostic::EntropyP,
        Diagnostic::Pinching,
        Diagnostic::MinGauss,
        Diagnostic::StabilityGap,
        Diagnostic::SolitonResidual,
        Diagnostic::Ck,
    ];
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FlowConfig {
    #[cfg_attr(feature = "serde", serde(rename = "n"))]
    pub dimension: usize,
    /// Grid resolution; `None` picks the per-dimension default.
    pub resolution: Option<usize>,
    pub dt_safety: f64,
    /// Steps between snapshots. The initial and final states are always recorded.
    pub snapshot_every: usize,
    pub stop_fraction: f64,
    pub diagnostics: Vec<Diagnostic>,
    pub max_steps: Option<usize>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            dimension: 2,
            resolution: None,
            dt_safety: 0.1,
            snapshot_every: 500,
            stop_fraction: 1e-3,
            diagnostics: Diagnostic::ALL.to_vec(),
            max_steps: None,
        }
    }
}

impl FlowConfig {
    pub fn new(dimension: usize) -> Self {
        FlowConfig { dimension, ..FlowConfig::default() }
    }

    pub fn resolution(&self) -> usize {
        self.resolution.unwrap_or(if self.dimension == 3 { DEFAULT_SPHERE_RESOLUTION } else { DEFAULT_CIRCLE_RESOLUTION })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 2 && self.dimension != 3 {
            return Err(Error::UnsupportedDimension(self.dimension));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety.is_finite()) {
            return Err(Error::InvalidParameter("dt_safety must be positive"));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidParameter("snapshot_every must be at least 1"));
        }
        if !(self.stop_fraction > 0.0 && self.stop_fraction < 1.0) {
            return Err(Error::InvalidParameter("stop_fraction must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        self.validate()?;
        Ok(Arc::new(Grid::new(self.dimension, self.resolution())?))
    }

    fn wants(&self, d: Diagnostic) -> bool {
        self.diagnostics.contains(&d)
    }
}

/// `T = V/(nV(B))` together with the inradius lower bound `r₋ⁿ/n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extinction {
    pub time: f64,
    pub inradius_bound: f64,
}

impl Extinction {
    pub fn bound_holds(&self) -> bool {
        self.time >= self.inradius_bound * (1.0 - 1e-9)
    }
}

pub fn extinction_estimate(field: &SupportField) -> Result<Extinction> {
    let n = field.dimension();
    let time = field.volume()? / (n as f64 * ball_volume(n));
    let r = field.radii()?.inradius;
    Ok(Extinction { time, inradius_bound: libm::pow(r, n as f64) / n as f64 })
}

/// The flow at one instant. `sigma` caches `σ_{n−1}` of `field`.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub field: SupportField,
    pub dt_last: f64,
    pub step_count: usize,
    curvature: Vec<[f64; 3]>,
}

impl FlowState {
    pub fn new(field: SupportField) -> Result<Self> {
        let curvature = field.curvature_matrix()?;
        check_positive(&curvature, field.dimension())?;
        Ok(FlowState { t: 0.0, field, dt_last: 0.0, step_count: 0, curvature })
    }

    pub fn sigma(&self) -> Vec<f64> {
        let planar = self.field.dimension() == 2;
        self.curvature.iter().map(|a| determinant(a, planar)).collect()
    }

    pub fn volume(&self) -> f64 {
        self.field.volume_with_sigma(&self.sigma())
    }

    /// `safety · h² · min_i σ_i² / λ_max(cof A_i)`; on the circle `cof A = 1`.
    pub fn planned_dt(&self, safety: f64) -> f64 {
        let h = self.field.grid().spacing();
        let planar = self.field.dimension() == 2;
        let limit = self
            .curvature
            .iter()
            .map(|a| {
                let sigma = determinant(a, planar);
                let stiffness = if planar { 1.0 } else { sym2_eigenvalues(a[0], a[1], a[2]).1 };
                sigma * sigma / stiffness
            })
            .fold(f64::INFINITY, f64::min);
        safety * h * h * limit
    }
}

fn determinant(a: &[f64; 3], planar: bool) -> f64 {
    if planar {
        a[0]
    } else {
        a[0] * a[2] - a[1] * a[1]
    }
}

fn check_positive(curvature: &[[f64; 3]], n: usize) -> Result<()> {
    for (node, a) in curvature.iter().enumerate() {
        let smallest = if n == 2 { a[0] } else { sym2_eigenvalues(a[0], a[1], a[2]).0 };
        if !(smallest > 0.0) {
            return Err(Error::ConvexityViolation { node, value: smallest });
        }
    }
    Ok(())
}

/// One explicit Euler step `s ← s − dt/σ_{n−1}`; on the sphere the result is projected
/// back onto the resolved band before the convexity check.
pub fn step(state: &FlowState, dt: f64) -> Result<FlowState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive"));
    }
    let planar = state.field.dimension() == 2;
    let updated: Vec<f64> = state
        .field
        .values()
        .iter()
        .zip(&state.curvature)
        .map(|(s, a)| s - dt / determinant(a, planar))
        .collect();
    let grid = state.field.grid();
    let values = if planar { updated } else { grid.project(&updated)? };
    let field = SupportField::new(grid.clone(), values)?;
    let curvature = field.curvature_matrix()?;
    check_positive(&curvature, field.dimension())?;
    Ok(FlowState { t: state.t + dt, field, dt_last: dt, step_count: state.step_count + 1, curvature })
}

/// Tries `dt`, halving on convexity loss up to [`MAX_HALVINGS`] times.
pub fn advance(state: &FlowState, dt: f64) -> Result<FlowState> {
    let mut trial = dt;
    for _ in 0..=MAX_HALVINGS {
        match step(state, trial) {
            Err(Error::ConvexityViolation { .. }) => trial *= 0.5,
            other => return other,
        }
    }
    Err(Error::StepFailure { time: state.t, halvings: MAX_HALVINGS })
}

/// Diagnostics of one recorded state. Unrequested diagnostics are `None` or empty.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub t_over_t: f64,
    pub volume: f64,
    pub min_support: f64,
    pub max_support: f64,
    pub entropy: Option<f64>,
    pub entropy_point: Option<Point>,
    /// `E_p(K̃)` for `p = −1, …, −n`.
    pub entropies_p: Vec<f64>,
    pub pinching: Option<f64>,
    pub min_gauss: Option<f64>,
    pub stability_gap: Option<f64>,
    pub stability_ratio: Option<f64>,
    pub soliton_residual: Option<f64>,
    /// C^k proxies for `k = 0, 1, 2`.
    pub ck: Vec<f64>,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Termination {
    VolumeReached,
    MaxSteps,
    StepFailure { time: f64, halvings: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrace {
    pub config: FlowConfig,
    pub extinction: Extinction,
    pub initial_volume: f64,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    pub steps: usize,
}

impl FlowTrace {
    /// The step failure that ended the run, if any.
    pub fn failure(&self) -> Option<Error> {
        match self.termination {
            Termination::StepFailure { time, halvings } => Some(Error::StepFailure { time, halvings }),
            _ => None,
        }
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a trace always holds the initial snapshot")
    }
}

/// Sum of `sup |s − 1|` and the derivative sup norms of orders `1..=k` for the body
/// normalized and recentred at its entropy point.
pub fn ck_proxy(field: &SupportField, k: usize) -> Result<f64> {
    let normalized = field.normalize()?;
    let centre = entropy(&normalized)?.point;
    Ok(ck_proxies(&normalized.translate(&centre), k)?[k])
}

/// Cumulative proxies for orders `0..=k` of an already normalized, recentred field.
pub fn ck_proxies(centred: &SupportField, k: usize) -> Result<Vec<f64>> {
    let shifted: Vec<f64> = centred.values().iter().map(|s| s - 1.0).collect();
    let norms = centred.grid().derivative_sup_norms(&shifted, k)?;
    Ok(norms
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect())
}

/// Evaluates the configured diagnostics at `state`.
pub fn snapshot(state: &FlowState, config: &FlowConfig, extinction_time: f64) -> Result<Snapshot> {
    let field = &state.field;
    let n = field.dimension();
    let sigma = state.sigma();
    let volume = field.volume_with_sigma(&sigma);
    let scale = libm::pow(ball_volume(n) / volume, 1.0 / n as f64);
    let normalized = field.scale(scale);
    let values = field.values();
    let mut snap = Snapshot {
        step: state.step_count,
        t: state.t,
        t_over_t: state.t / extinction_time,
        volume,
        min_support: values.iter().copied().fold(f64::INFINITY, f64::min),
        max_support: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        entropy: None,
        entropy_point: None,
        entropies_p: Vec::new(),
        pinching: None,
        min_gauss: None,
        stability_gap: None,
        stability_ratio: None,
        soliton_residual: None,
        ck: Vec::new(),
        dt: state.dt_last,
    };
    let needs_centre = [Diagnostic::Entropy, Diagnostic::StabilityGap, Diagnostic::SolitonResidual, Diagnostic::Ck]
        .iter()
        .any(|d| config.wants(*d));
    let optimum = if needs_centre { Some(entropy(&normalized)?) } else { None };
    if let Some(opt) = &optimum {
        if config.wants(Diagnostic::Entropy) {
            snap.entropy = Some(opt.value);
            snap.entropy_point = Some(opt.point);
        }
        if config.wants(Diagnostic::StabilityGap) {
            let gap = gap_from_optimum(&normalized, opt);
            snap.stability_gap = Some(gap.gap);
            snap.stability_ratio = gap.ratio;
        }
    }
    if config.wants(Diagnostic::EntropyP) {
        for k in 1..=n as i32 {
            snap.entropies_p.push(entropy_p(&normalized, -k)?.value);
        }
    }
    if config.wants(Diagnostic::Pinching) {
        snap.pinching = Some(field.pinching_ratio()?);
    }
    if config.wants(Diagnostic::MinGauss) {
        snap.min_gauss = Some(1.0 / sigma.iter().copied().fold(0.0, f64::max));
    }
    let centred = optimum.map(|opt| normalized.translate(&opt.point));
    if let Some(centred) = &centred {
        if config.wants(Diagnostic::SolitonResidual) {
            // σ scales by scale^{n−1}; translation leaves it unchanged
            let factor = libm::pow(scale, n as f64 - 1.0);
            let residual = centred
                .values()
                .iter()
                .zip(&sigma)
                .map(|(s, g)| (s * g * factor - 1.0).abs())
                .fold(0.0, f64::max);
            snap.soliton_residual = Some(residual);
        }
        if config.wants(Diagnostic::Ck) {
            snap.ck = ck_proxies(centred, 2)?;
        }
    }
    Ok(snap)
}

/// Integrates from the sampled `spec` until the volume drops to `stop_fraction` of its
/// initial value, a step fails, or `max_steps` is reached.
pub fn run(spec: &BodySpec, config: &FlowConfig) -> Result<FlowTrace> {
    let grid = config.grid()?;
    run_field(SupportField::from_spec(spec, grid)?, config)
}

pub fn run_field(field: SupportField, config: &FlowConfig) -> Result<FlowTrace> {
    run_observed(field, config, |_, _| {})
}

/// [`run_field`], calling `observe` with each state as its snapshot is recorded.
pub fn run_observed(
    field: SupportField,
    config: &FlowConfig,
    mut observe: impl FnMut(&FlowState, &Snapshot),
) -> Result<FlowTrace> {
    config.validate()?;
    if field.dimension() != config.dimension {
        return Err(Error::InvalidParameter("field dimension differs from the configuration"));
    }
    let extinction = extinction_estimate(&field)?;
    let mut state = FlowState::new(field)?;
    let initial_volume = state.volume();
    let target = config.stop_fraction * initial_volume;
    let mut snapshots = Vec::new();
    let mut record = |state: &FlowState, snapshots: &mut Vec<Snapshot>| -> Result<()> {
        let snap = snapshot(state, config, extinction.time)?;
        observe(state, &snap);
        snapshots.push(snap);
        Ok(())
    };
    record(&state, &mut snapshots)?;
    let termination = loop {
        if state.volume() <= target {
            break Termination::VolumeReached;
        }
        if config.max_steps.is_some_and(|m| state.step_count >= m) {
            break Termination::MaxSteps;
        }
        let dt = state.planned_dt(config.dt_safety);
        match advance(&state, dt) {
            Ok(next) => state = next,
            Err(Error::StepFailure { time, halvings }) => break Termination::StepFailure { time, halvings },
            Err(e) => return Err(e),
        }
        if state.step_count % config.snapshot_every == 0 {
            record(&state, &mut snapshots)?;
        }
    };
    if snapshots.last().map(|s| s.step) != Some(state.step_count) {
        record(&state, &mut snapshots)?;
    }
    Ok(FlowTrace { config: config.clone(), extinction, initial_volume, snapshots, termination, steps: state.step_count })
}

/// Terminal roundness of one body; `failure` is set instead of aborting a study.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundnessRow {
    pub initial_epsilon: f64,
    pub initial_pinching: f64,
    pub terminal_pinching: f64,
    pub terminal_ck: Vec<f64>,
    pub terminal_soliton_residual: f64,
    pub terminal_stability_ratio: Option<f64>,
    pub final_volume_fraction: f64,
    pub steps: usize,
    pub failure: Option<Error>,
}

/// Runs one flow with every diagnostic enabled and tabulates its endpoints.
pub fn roundness_row(spec: &BodySpec, config: &FlowConfig) -> Result<RoundnessRow> {
    let config = FlowConfig { diagnostics: Diagnostic::ALL.to_vec(), ..config.clone() };
    let trace = run(spec, &config)?;
    let first = &trace.snapshots[0];
    let last = trace.last();
    let missing = || Error::InvalidParameter("diagnostic missing from snapshot");
    Ok(RoundnessRow {
        initial_epsilon: first.entropy.ok_or_else(missing)?,
        initial_pinching: first.pinching.ok_or_else(missing)?,
        terminal_pinching: last.pinching.ok_or_else(missing)?,
        terminal_ck: last.ck.clone(),
        terminal_soliton_residual: last.soliton_residual.ok_or_else(missing)?,
        terminal_stability_ratio: last.stability_ratio,
        final_volume_fraction: last.volume / trace.initial_volume,
        steps: trace.steps,
        failure: trace.failure(),
    })
}

/// One row per spec; setup errors are recorded in the row rather than aborting.
pub fn roundness_study(specs: &[BodySpec], config: &FlowConfig) -> Vec<core::result::Result<RoundnessRow, Error>> {
    specs.iter().map(|spec| roundness_row(spec, config)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::HarmonicTerm;
    use alloc::vec;

    fn grid(n: usize, res: usize) -> Arc<Grid> {
        Arc::new(Grid::new(n, res).unwrap())
    }

    #[test]
    fn extinction_examples() {
        let g2 = grid(2, 128);
        let ball = extinction_estimate(&SupportField::from_spec(&BodySpec::ball(1.0), g2.clone()).unwrap()).unwrap();
        assert!((ball.time - 0.5).abs() < 1e-13 && (ball.inradius_bound - 0.5).abs() < 1e-9);
        let ball3 = SupportField::from_spec(&BodySpec::ball(1.5), grid(3, 16)).unwrap();
        assert!((extinction_estimate(&ball3).unwrap().time - 1.125).abs() < 1e-12);
        let ellipse = SupportField::from_spec(&BodySpec::ellipsoid(&[2.0, 1.0]), grid(2, 256)).unwrap();
        let e = extinction_estimate(&ellipse).unwrap();
        assert!((e.time - 1.0).abs() < 1e-10 && (e.inradius_bound - 0.5).abs() < 1e-8 && e.bound_holds());
    }

    #[test]
    fn ball_step_is_the_ode_euler_step() {
        for (n, res) in [(2, 64), (3, 12)] {
            let r: f64 = 0.8;
            let state = FlowState::new(SupportField::from_spec(&BodySpec::ball(r), grid(n, res)).unwrap()).unwrap();
            let dt = 1e-3;
            let next = step(&state, dt).unwrap();
            let expected = r - dt * libm::pow(r, 1.0 - n as f64);
            assert!(next.field.values().iter().all(|s| (s - expected).abs() < 1e-13));
            let exact = libm::pow(libm::pow(r, n as f64) - n as f64 * dt, 1.0 / n as f64);
            assert!((expected - exact).abs() < 1e-5);
            assert_eq!(next.step_count, 1);
            assert!(next.t > state.t);
        }
    }

    #[test]
    fn symmetric_data_stays_symmetric() {
        let spec = BodySpec::TrigPerturbation {
            base_radius: 1.0,
            terms: vec![HarmonicTerm { degree: 4, order: 0, coefficient: 1.0 }],
            amplitude: 0.02,
        };
        let n = 64;
        let mut state = FlowState::new(SupportField::from_spec(&spec, grid(2, n)).unwrap()).unwrap();
        for _ in 0..50 {
            let dt = state.planned_dt(0.1);
            state = step(&state, dt).unwrap();
        }
        let v = state.field.values();
        // cos(4θ) is invariant under θ ↦ θ + π/2 and θ ↦ −θ
        for i in 0..n {
            assert!((v[i] - v[(i + n / 4) % n]).abs() < 1e-12);
            assert!((v[i] - v[(n - i) % n]).abs() < 1e-12);
        }
    }

    /// Reference: classical RK4 with 50 substeps per Euler step on the same semi-discrete
    /// system. Euler's gap to it must be first order in dt.
    #[test]
    fn euler_converges_to_rk4_oracle_on_ellipse() {
        // 32 nodes keep dt = 1e-4 inside the Euler stability region (σ_min = 1/4)
        let g = grid(2, 32);
        let start = SupportField::from_spec(&BodySpec::ellipsoid(&[2.0, 1.0]), g.clone()).unwrap();
        let rhs = |s: &[f64]| -> Vec<f64> {
            let f = SupportField::new(g.clone(), s.to_vec()).unwrap();
            f.sigma().unwrap().iter().map(|x| -1.0 / x).collect()
        };
        let axpy = |a: &[f64], k: &[f64], h: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, y)| x + h * y).collect() };
        let horizon = 1e-2;
        let substeps = 5000;
        let h = horizon / substeps as f64;
        let mut reference = start.values().to_vec();
        for _ in 0..substeps {
            let k1 = rhs(&reference);
            let k2 = rhs(&axpy(&reference, &k1, h / 2.0));
            let k3 = rhs(&axpy(&reference, &k2, h / 2.0));
            let k4 = rhs(&axpy(&reference, &k3, h));
            for i in 0..reference.len() {
                reference[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let euler_error = |steps: usize| {
            let mut state = FlowState::new(start.clone()).unwrap();
            for _ in 0..steps {
                state = step(&state, horizon / steps as f64).unwrap();
            }
            state.field.values().iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let errors = [euler_error(100), euler_error(200), euler_error(400), euler_error(1000)];
        for pair in errors[..3].windows(2) {
            let ratio = pair[1] / pair[0];
            assert!((ratio - 0.5).abs() < 0.02, "ratio {ratio}");
        }
        assert!(errors[0] < 5e-6 && errors[3] < 1e-6, "{errors:?}");
    }

    #[test]
    fn ball_run_tracks_exact_radius() {
        let config = FlowConfig { resolution: Some(128), dt_safety: 0.05, stop_fraction: 0.1, snapshot_every: 500, ..FlowConfig::new(2) };
        let trace = run(&BodySpec::ball(1.0), &config).unwrap();
        assert_eq!(trace.termination, Termination::VolumeReached);
        for snap in &trace.snapshots {
            let exact = libm::sqrt(1.0 - 2.0 * snap.t);
            assert!((snap.max_support - exact).abs() / exact < 1e-3, "t={} {} vs {exact}", snap.t, snap.max_support);
            assert!(snap.entropy.unwrap().abs() < 1e-10);
            assert!(snap.soliton_residual.unwrap() < 1e-9);
        }
        assert!(trace.last().volume <= 0.1 * trace.initial_volume);
    }

    #[test]
    fn ellipse_run_is_monotone() {
        let config = FlowConfig { resolution: Some(128), stop_fraction: 0.05, snapshot_every: 200, ..FlowConfig::new(2) };
        let trace = run(&BodySpec::ellipsoid(&[2.0, 1.0]), &config).unwrap();
        assert!(trace.snapshots.len() > 5);
        for pair in trace.snapshots.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            assert!(b.t > a.t && b.volume < a.volume);
            assert!(b.entropy.unwrap() <= a.entropy.unwrap() + 1e-8);
            assert!(b.min_gauss.unwrap() >= a.min_gauss.unwrap() - 1e-8);
            assert!((b.volume - trace.initial_volume + 2.0 * core::f64::consts::PI * b.t).abs() < 1e-3 * trace.initial_volume);
        }
        assert!(trace.last().pinching.unwrap() > trace.snapshots[0].pinching.unwrap());
    }

    #[test]
    fn ck_proxy_of_degree_four_perturbation() {
        let amp = 0.01;
        let spec = BodySpec::TrigPerturbation {
            base_radius: 1.0,
            terms: vec![HarmonicTerm { degree: 4, order: 0, coefficient: 1.0 }],
            amplitude: amp,
        };
        let field = SupportField::from_spec(&spec, grid(2, 256)).unwrap();
        let unit = SupportField::from_spec(&BodySpec::ball(1.0), grid(2, 256)).unwrap();
        let proxies: Vec<f64> = (0..=4).map(|k| ck_proxy(&field, k).unwrap()).collect();
        assert!(proxies.windows(2).all(|w| w[1] >= w[0]));
        // normalization shifts s by O(amp²), so each derivative sup is amp·4^m up to that
        let a = amp;
        let expected = [a, a * 5.0, a * 21.0];
        for k in 0..3 {
            assert!((proxies[k] - expected[k]).abs() < 2e-3 * (1.0 + k as f64), "{k}: {} vs {}", proxies[k], expected[k]);
        }
        for k in 0..=4 {
            // roundoff grows like (N/2)^k
            assert!(ck_proxy(&unit, k).unwrap() < 1e-15 * libm::pow(128.0, k as f64) + 1e-12);
        }
    }

    #[test]
    fn step_failure_is_reported_with_partial_trace() {
        let config = FlowConfig { resolution: Some(32), dt_safety: 1e12, max_steps: Some(5), ..FlowConfig::new(2) };
        let spec = BodySpec::ellipsoid(&[3.0, 1.0]);
        let trace = run(&spec, &config).unwrap();
        assert!(!trace.snapshots.is_empty());
        assert!(trace.failure().is_none() || matches!(trace.failure(), Some(Error::StepFailure { .. })));
    }

    #[test]
    fn unit_ball_roundness_row_is_zero() {
        let config = FlowConfig { resolution: Some(64), stop_fraction: 0.1, snapshot_every: 100_000, ..FlowConfig::new(2) };
        let row = roundness_row(&BodySpec::ball(1.0), &config).unwrap();
        assert!(row.initial_epsilon.abs() < 1e-6 && row.terminal_soliton_residual < 1e-6);
        assert!(row.terminal_ck.iter().all(|c| *c < 1e-6) && (row.terminal_pinching - 1.0).abs() < 1e-6);
        assert!(row.failure.is_none());
    }

    #[test]
    fn config_validation() {
        assert!(FlowConfig::new(4).validate().is_err());
        assert!(FlowConfig { stop_fraction: 1.0, ..FlowConfig::new(2) }.validate().is_err());
        assert!(FlowConfig { snapshot_every: 0, ..FlowConfig::new(2) }.validate().is_err());
        assert_eq!(FlowConfig::new(3).resolution(), DEFAULT_SPHERE_RESOLUTION);
    }
}
