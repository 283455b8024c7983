//! Multi-body suites: inequality verification, stability scaling and terminal roundness.
//! Bodies are processed in parallel; results keep corpus order.

use std::sync::Arc;

use gaussflow_core::flow::{roundness_row, FlowConfig, FlowTrace, RoundnessRow};
use gaussflow_core::functionals::{stability_gap, SANTALO_RELATIVE_SLACK};
use gaussflow_core::grid::{ball_volume, sphere_area};
use gaussflow_core::{functional_report, BodySpec, Error, FunctionalReport, Grid, SupportField};
use rayon::prelude::*;

use crate::corpus::SeededBody;

/// Signed margins of one body; each is non-negative when its inequality holds.
#[derive(Clone, Debug, PartialEq)]
pub struct Margins {
    pub chain: f64,
    /// Divided by `nV(B)²`.
    pub blaschke_santalo: f64,
    pub vitale: f64,
    pub lemma_stab: f64,
    /// Distance of `r` outside `[1, 1/(1−ϵ)]`, zero inside.
    pub r_bracket: f64,
}

impl Margins {
    pub fn from_report(report: &FunctionalReport) -> Self {
        let n = report.dimension;
        let lemma = &report.lemma;
        Margins {
            chain: report.chain.min_margin(),
            blaschke_santalo: report.blaschke_santalo_margin / (sphere_area(n) * ball_volume(n)),
            vitale: report.vitale_margin,
            lemma_stab: lemma.bound_margin(),
            r_bracket: (lemma.r_lower - lemma.r).max(lemma.r - lemma.r_upper).max(0.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyRow {
    pub index: usize,
    pub seed: Option<u64>,
    pub spec: BodySpec,
    pub outcome: Result<(FunctionalReport, Margins), Error>,
}

impl VerifyRow {
    pub fn failing_checks(&self) -> Vec<String> {
        match &self.outcome {
            Ok((report, _)) => report.failing_checks().iter().map(|s| s.to_string()).collect(),
            Err(e) => vec![format!("error: {e}")],
        }
    }

    pub fn passed(&self) -> bool {
        self.failing_checks().is_empty()
    }
}

fn analyze(spec: &BodySpec, grid: &Arc<Grid>) -> Result<(FunctionalReport, Margins), Error> {
    let field = SupportField::from_spec(spec, grid.clone())?;
    let report = functional_report(&field)?;
    let margins = Margins::from_report(&report);
    Ok((report, margins))
}

pub fn verify_bodies(bodies: &[SeededBody], grid: &Arc<Grid>) -> Vec<VerifyRow> {
    bodies
        .par_iter()
        .enumerate()
        .map(|(index, body)| VerifyRow {
            index,
            seed: Some(body.seed),
            spec: body.spec.clone(),
            outcome: analyze(&body.spec, grid),
        })
        .collect()
}

pub fn verify_spec(spec: &BodySpec, grid: &Arc<Grid>) -> VerifyRow {
    VerifyRow { index: 0, seed: None, spec: spec.clone(), outcome: analyze(spec, grid) }
}

/// Relative slack implied by the Blaschke–Santaló tolerance, for table display.
pub const SANTALO_SLACK: f64 = SANTALO_RELATIVE_SLACK;

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityRow {
    pub parameter: f64,
    pub epsilon: f64,
    pub gap: f64,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilitySummary {
    /// Least-squares slope of `log gap` against `log ε`.
    pub slope: f64,
    pub threshold: f64,
    pub max_ratio: f64,
    pub decades: f64,
    /// Ratios of the smaller-ε half stay within 10% of the larger-ε half's maximum.
    pub bounded: bool,
    pub passed: bool,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StudyError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("degenerate family: ε spans {decades:.2} decades over {usable} bodies with ε > 0, need 1.5")]
    InsufficientSpread { decades: f64, usable: usize },
}

/// Gaps and ratios of `family`, then the log–log fit over the members with defined ratio.
pub fn stability_study(
    family: &[(f64, BodySpec)],
    grid: &Arc<Grid>,
) -> Result<(Vec<StabilityRow>, StabilitySummary), StudyError> {
    let n = grid.dimension();
    let rows = family
        .par_iter()
        .map(|(parameter, spec)| {
            let gap = stability_gap(&SupportField::from_spec(spec, grid.clone())?)?;
            Ok(StabilityRow { parameter: *parameter, epsilon: gap.epsilon, gap: gap.gap, ratio: gap.ratio })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut usable: Vec<&StabilityRow> = rows.iter().filter(|r| r.ratio.is_some() && r.gap > 0.0).collect();
    usable.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let decades = match (usable.first(), usable.last()) {
        (Some(lo), Some(hi)) => (hi.epsilon / lo.epsilon).log10(),
        _ => 0.0,
    };
    if usable.len() < 3 || decades < 1.5 {
        return Err(StudyError::InsufficientSpread { decades, usable: usable.len() });
    }
    let points: Vec<(f64, f64)> = usable.iter().map(|r| (r.epsilon.ln(), r.gap.ln())).collect();
    let slope = least_squares_slope(&points);
    let ratios: Vec<f64> = usable.iter().filter_map(|r| r.ratio).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let half = ratios.len() / 2;
    let upper_max = ratios[half..].iter().copied().fold(0.0, f64::max);
    let bounded = ratios.iter().all(|r| r.is_finite()) && ratios[..half].iter().all(|r| *r <= 1.1 * upper_max);
    let threshold = 1.0 / (n as f64 + 1.0) - 0.05;
    let passed = bounded && slope >= threshold;
    Ok((rows, StabilitySummary { slope, threshold, max_ratio, decades, bounded, passed }))
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug)]
pub struct RoundnessEntry {
    pub parameter: f64,
    pub spec: BodySpec,
    pub row: Result<RoundnessRow, Error>,
}

pub fn roundness_study(family: &[(f64, BodySpec)], config: &FlowConfig) -> Vec<RoundnessEntry> {
    family
        .par_iter()
        .map(|(parameter, spec)| RoundnessEntry { parameter: *parameter, spec: spec.clone(), row: roundness_row(spec, config) })
        .collect()
}

/// Thresholds applied to bodies that start far from round but with small entropy.
#[derive(Clone, Copy, Debug)]
pub struct RoundnessCriteria {
    pub max_initial_pinching: f64,
    pub max_initial_epsilon: f64,
    pub min_terminal_pinching: f64,
    pub max_terminal_residual: f64,
    /// Allowed relative drop between consecutive proxies ordered by initial ε.
    pub trend_noise: f64,
}

impl Default for RoundnessCriteria {
    fn default() -> Self {
        RoundnessCriteria {
            max_initial_pinching: 0.2,
            max_initial_epsilon: 0.05,
            min_terminal_pinching: 0.9,
            max_terminal_residual: 0.05,
            trend_noise: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundnessVerdict {
    pub eligible: usize,
    pub failures: Vec<String>,
}

impl RoundnessVerdict {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn judge_roundness(entries: &[RoundnessEntry], criteria: &RoundnessCriteria) -> RoundnessVerdict {
    let mut failures = Vec::new();
    let mut eligible = Vec::new();
    for entry in entries {
        match &entry.row {
            Err(e) => failures.push(format!("parameter {}: {e}", entry.parameter)),
            Ok(row) if row.initial_pinching < criteria.max_initial_pinching
                && row.initial_epsilon <= criteria.max_initial_epsilon =>
            {
                if let Some(e) = &row.failure {
                    failures.push(format!("parameter {}: {e}", entry.parameter));
                }
                if row.terminal_pinching < criteria.min_terminal_pinching {
                    failures.push(format!("parameter {}: terminal pinching {}", entry.parameter, row.terminal_pinching));
                }
                if row.terminal_soliton_residual > criteria.max_terminal_residual {
                    failures.push(format!(
                        "parameter {}: soliton residual {}",
                        entry.parameter, row.terminal_soliton_residual
                    ));
                }
                eligible.push(row);
            }
            Ok(_) => {}
        }
    }
    eligible.sort_by(|a, b| a.initial_epsilon.total_cmp(&b.initial_epsilon));
    for k in 0..3 {
        for pair in eligible.windows(2) {
            let (lo, hi) = (pair[0].terminal_ck[k], pair[1].terminal_ck[k]);
            if hi < (1.0 - criteria.trend_noise) * lo {
                failures.push(format!(
                    "ck{k} drops from {lo} to {hi} as ε grows from {} to {}",
                    pair[0].initial_epsilon, pair[1].initial_epsilon
                ));
            }
        }
    }
    RoundnessVerdict { eligible: eligible.len(), failures }
}

/// Largest per-snapshot increase of E(K̃) and decrease of min Gauss curvature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotonicityViolation {
    pub entropy_increase: f64,
    pub min_gauss_decrease: f64,
}

pub fn monotonicity(trace: &FlowTrace) -> MonotonicityViolation {
    let mut worst = MonotonicityViolation { entropy_increase: 0.0, min_gauss_decrease: 0.0 };
    for pair in trace.snapshots.windows(2) {
        if let (Some(a), Some(b)) = (pair[0].entropy, pair[1].entropy) {
            worst.entropy_increase = worst.entropy_increase.max(b - a);
        }
        if let (Some(a), Some(b)) = (pair[0].min_gauss, pair[1].min_gauss) {
            worst.min_gauss_decrease = worst.min_gauss_decrease.max(a - b);
        }
    }
    worst
}

/// Extinction time from the last two snapshots, extrapolating the volume linearly to 0.
pub fn extrapolated_extinction(trace: &FlowTrace) -> Option<f64> {
    let snaps = &trace.snapshots;
    let (a, b) = (snaps.get(snaps.len().checked_sub(2)?)?, snaps.last()?);
    (a.volume > b.volume).then(|| b.t + b.volume * (b.t - a.t) / (a.volume - b.volume))
}

/// Terminal diagnostics compared across resolutions.
pub fn terminal_diagnostics(trace: &FlowTrace) -> Vec<(&'static str, Option<f64>)> {
    let last = trace.last();
    vec![
        ("entropy", last.entropy),
        ("pinching", last.pinching),
        ("min_gauss", last.min_gauss),
        ("stability_gap", last.stability_gap),
        ("soliton_residual", last.soliton_residual),
        ("ck0", last.ck.first().copied()),
        ("ck1", last.ck.get(1).copied()),
        ("ck2", last.ck.get(2).copied()),
    ]
}
