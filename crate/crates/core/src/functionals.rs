//! Entropy functionals, their optimal points, metrics between bodies and the
//! inequality checks built on them.
//!
//! Every check returns a signed margin (non-negative when the inequality holds) rather
//! than a bare boolean, so tolerances stay visible to the caller.

use alloc::vec::Vec;

use crate::body::SupportField;
use crate::error::{Error, Result};
use crate::grid::{ball_volume, sphere_area};
use crate::linalg::cholesky_solve;
use crate::optimize::{newton_minimize, Evaluation, NewtonOptions, Vector};
use crate::point::Point;

/// Slack allowed on chain and Vitale margins for quadrature error.
pub const MARGIN_SLACK: f64 = 1e-9;
/// Relative slack on the Blaschke–Santaló margin.
pub const SANTALO_RELATIVE_SLACK: f64 = 1e-8;
/// Below this entropy the stability ratio is reported as undefined.
pub const RATIO_EPSILON_FLOOR: f64 = 1e-12;

/// Value and derivatives of an integral objective at a point.
#[derive(Clone, Copy, Debug)]
pub struct Objective {
    pub value: f64,
    pub gradient: Point,
    pub hessian: [[f64; 3]; 3],
}

/// An optimal value and the interior point attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Optimum {
    pub value: f64,
    pub point: Point,
}

/// `∫ log(s − x·u) dθ` with derivatives in `x`; `None` unless `x` is interior.
pub fn log_objective(field: &SupportField, x: &Point) -> Option<Objective> {
    integral_objective(field, x, |g| (libm::log(g), -1.0 / g, -1.0 / (g * g)))
}

/// `∫ (s − x·u)^p dθ` with derivatives in `x`; `None` unless `x` is interior.
pub fn power_objective(field: &SupportField, p: i32, x: &Point) -> Option<Objective> {
    let pf = p as f64;
    integral_objective(field, x, |g| {
        let gp = libm::pow(g, pf);
        (gp, -pf * gp / g, pf * (pf - 1.0) * gp / (g * g))
    })
}

/// `kernel(g) = (f(g), ∂f/∂x along u, ∂²f/∂x² along u⊗u)`.
fn integral_objective(field: &SupportField, x: &Point, kernel: impl Fn(f64) -> (f64, f64, f64)) -> Option<Objective> {
    let grid = field.grid();
    let n = grid.dimension();
    let mut value = 0.0;
    let mut gradient = Point::ORIGIN;
    let mut hessian = [[0.0; 3]; 3];
    for ((s, u), w) in field.values().iter().zip(grid.nodes()).zip(grid.weights()) {
        let g = s - x.dot(u);
        if !(g > 0.0) {
            return None;
        }
        let (f, d1, d2) = kernel(g);
        value += w * f;
        gradient = gradient + *u * (w * d1);
        for i in 0..n {
            for j in 0..n {
                hessian[i][j] += w * d2 * u.0[i] * u.0[j];
            }
        }
    }
    Some(Objective { value, gradient, hessian })
}

fn to_evaluation(objective: &Objective, n: usize, sign: f64) -> Evaluation {
    let mut gradient = [0.0; 4];
    let mut hessian = [[0.0; 4]; 4];
    for i in 0..n {
        gradient[i] = sign * objective.gradient.0[i];
        for j in 0..n {
            hessian[i][j] = sign * objective.hessian[i][j];
        }
    }
    Evaluation { value: sign * objective.value, gradient, hessian }
}

fn lift(p: &Point) -> Vector {
    [p.0[0], p.0[1], p.0[2], 0.0]
}

/// Minimizes `sign · objective` from the Steiner point and certifies strict convexity
/// of `sign · objective` at the optimum.
fn optimize(field: &SupportField, sign: f64, objective: impl Fn(&Point) -> Option<Objective>) -> Result<Optimum> {
    let n = field.dimension();
    let start = field.steiner_point();
    let result = newton_minimize(
        n,
        lift(&start),
        |z| objective(&Point([z[0], z[1], z[2]])).map(|o| to_evaluation(&o, n, sign)),
        &NewtonOptions::default(),
    )?;
    let point = Point([result.point[0], result.point[1], result.point[2]]);
    let certificate = cholesky_solve(&result.evaluation.hessian, &[1.0; 4], n);
    if certificate.is_none() {
        return Err(Error::OptimizationFailure("optimality certificate failed: Hessian not definite"));
    }
    Ok(Optimum { value: sign * result.evaluation.value, point })
}

/// Guan–Ni entropy `E(K) = sup_x ∫ log(s − x·u) dθ` and the entropy point `e(K)`.
pub fn entropy(field: &SupportField) -> Result<Optimum> {
    optimize(field, -1.0, |x| log_objective(field, x))
}

/// `E_p(K) = inf_x ∫ (s − x·u)^p dθ` and its minimizer `e_p(K)` for `p ∈ {−n, …, −1}`.
pub fn entropy_p(field: &SupportField, p: i32) -> Result<Optimum> {
    let n = field.dimension() as i32;
    if !(-n..=-1).contains(&p) {
        return Err(Error::InvalidParameter("entropy exponent must lie in [-n, -1]"));
    }
    optimize(field, 1.0, |x| power_objective(field, p, x))
}

/// The Santaló point: the minimizer of `∫ (s − x·u)^{−n} dθ`.
pub fn santalo_point(field: &SupportField) -> Result<Point> {
    Ok(entropy_p(field, -(field.dimension() as i32))?.point)
}

fn check_normalized(field: &SupportField) -> Result<f64> {
    let n = field.dimension();
    let volume = field.volume()?;
    let target = ball_volume(n);
    if (volume - target).abs() > 1e-8 * target {
        return Err(Error::NotNormalized { volume, target });
    }
    Ok(volume)
}

/// Terms of the chain
/// `exp(−E/(nV(B))) ≤ E₋₁/(nV(B)) ≤ (E₋₂/(nV(B)))^{1/2} ≤ … ≤ (E₋ₙ/(nV(B)))^{1/n} ≤ 1`
/// and their consecutive differences.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainCheck {
    pub terms: Vec<f64>,
    pub margins: Vec<f64>,
}

impl ChainCheck {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn holds(&self) -> bool {
        self.min_margin() >= -MARGIN_SLACK
    }
}

/// Evaluates the entropy chain; the body must already have the volume of the unit ball.
pub fn check_entropy_chain(field: &SupportField) -> Result<ChainCheck> {
    check_normalized(field)?;
    let n = field.dimension();
    let area = sphere_area(n);
    let mut terms = Vec::with_capacity(n + 2);
    terms.push(libm::exp(-entropy(field)?.value / area));
    for k in 1..=n {
        let value = entropy_p(field, -(k as i32))?.value;
        terms.push(libm::pow(value / area, 1.0 / k as f64));
    }
    terms.push(1.0);
    let margins = terms.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(ChainCheck { terms, margins })
}

/// Hausdorff distance `sup_u |s_a − s_b|`, approximated by the maximum over nodes.
pub fn hausdorff(a: &SupportField, b: &SupportField) -> Result<f64> {
    a.check_same_grid(b)?;
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// `δ₂(a, b) = (∫ (s_a − s_b)² dθ)^{1/2}`.
pub fn delta2(a: &SupportField, b: &SupportField) -> Result<f64> {
    a.check_same_grid(b)?;
    let squared = a.grid().integrate(a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)));
    Ok(libm::sqrt(squared))
}

fn beta(a: f64, b: f64) -> f64 {
    libm::tgamma(a) * libm::tgamma(b) / libm::tgamma(a + b)
}

/// Vitale's constant `α_n = nV(B) β(3, n−1) / β(1/2, (n−1)/2)`.
pub fn vitale_constant(n: usize) -> Result<f64> {
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let nf = n as f64;
    Ok(sphere_area(n) * beta(3.0, nf - 1.0) / beta(0.5, 0.5 * (nf - 1.0)))
}

/// `δ₂² − α_n D(K∪L)^{1−n} δ_H^{n+1}`.
pub fn check_vitale(a: &SupportField, b: &SupportField) -> Result<f64> {
    a.check_same_grid(b)?;
    let grid = a.grid();
    let n = grid.dimension();
    let union: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x.max(*y)).collect();
    let diameter = (0..union.len()).map(|i| union[i] + union[grid.antipode(i)]).fold(f64::NEG_INFINITY, f64::max);
    let d2 = delta2(a, b)?;
    let dh = hausdorff(a, b)?;
    let rhs = vitale_constant(n)? * libm::pow(diameter, 1.0 - n as f64) * libm::pow(dh, n as f64 + 1.0);
    Ok(d2 * d2 - rhs)
}

/// `nV(B)² − V(K)·E₋ₙ(K)`.
pub fn check_blaschke_santalo(field: &SupportField) -> Result<f64> {
    let n = field.dimension();
    let bound = sphere_area(n) * ball_volume(n);
    let volume = field.volume()?;
    Ok(bound - volume * entropy_p(field, -(n as i32))?.value)
}

/// Quantities of the explicit stability bound for `δ_H(K − e₋₂(K), B_r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityBound {
    /// `ϵ = 1 − E₋₁/(nV(B))`.
    pub epsilon: f64,
    /// `δ_H(K − e₋₂, B_r)^{n+1}`.
    pub lhs: f64,
    /// `(2nV(B)/α_n) D² (D + 2/(1−ϵ))^{n−1} ϵ`.
    pub rhs: f64,
    pub r: f64,
    pub r_lower: f64,
    pub r_upper: f64,
}

impl StabilityBound {
    pub fn bound_margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn r_in_bracket(&self) -> bool {
        self.r >= self.r_lower - MARGIN_SLACK && self.r <= self.r_upper + MARGIN_SLACK
    }

    pub fn holds(&self) -> bool {
        self.bound_margin() >= -MARGIN_SLACK && self.r_in_bracket()
    }
}

/// Evaluates the stability bound for a body with the volume of the unit ball.
pub fn lemma_stab_bound(field: &SupportField) -> Result<StabilityBound> {
    check_normalized(field)?;
    let n = field.dimension();
    let area = sphere_area(n);
    let e_m1 = entropy_p(field, -1)?;
    let e_m2 = entropy_p(field, -2)?;
    let epsilon = 1.0 - e_m1.value / area;
    if !(e_m1.value > 0.0) || !(epsilon < 1.0) {
        return Err(Error::InvalidParameter("E_-1 must be positive"));
    }
    let centered = field.translate(&e_m2.point);
    let r = libm::sqrt(area / e_m2.value);
    let deviation = centered.values().iter().map(|s| (s - r).abs()).fold(0.0, f64::max);
    let lhs = libm::pow(deviation, n as f64 + 1.0);
    let diameter = field.diameter();
    let rhs = 2.0 * area / vitale_constant(n)?
        * diameter
        * diameter
        * libm::pow(diameter + 2.0 / (1.0 - epsilon), n as f64 - 1.0)
        * epsilon;
    Ok(StabilityBound { epsilon, lhs, rhs, r, r_lower: 1.0, r_upper: 1.0 / (1.0 - epsilon) })
}

/// `ε = E(K̃)`, `gap = δ_H(K̃ − e(K̃), B)` and `gap / ε^{1/(n+1)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityGap {
    pub epsilon: f64,
    pub gap: f64,
    /// `None` when `ε` is below [`RATIO_EPSILON_FLOOR`].
    pub ratio: Option<f64>,
}

/// Normalizes, recenters at the entropy point and measures the distance to the unit ball.
pub fn stability_gap(field: &SupportField) -> Result<StabilityGap> {
    let normalized = field.normalize()?;
    let optimum = entropy(&normalized)?;
    Ok(gap_from_optimum(&normalized, &optimum))
}

pub(crate) fn gap_from_optimum(normalized: &SupportField, optimum: &Optimum) -> StabilityGap {
    let n = normalized.dimension();
    let gap = normalized
        .values()
        .iter()
        .zip(normalized.grid().nodes())
        .map(|(s, u)| (s - optimum.point.dot(u) - 1.0).abs())
        .fold(0.0, f64::max);
    let epsilon = optimum.value;
    let ratio = (epsilon > RATIO_EPSILON_FLOOR).then(|| gap / libm::pow(epsilon, 1.0 / (n as f64 + 1.0)));
    StabilityGap { epsilon, gap, ratio }
}

/// Largest `C` with `|e₋₂ − e|² ≤ E/C` over the given `(E, e, e₋₂)` samples whose entropy
/// is at most `0.1`; `None` if no sample separates the two points.
pub fn proximity_constant(samples: &[(f64, Point, Point)]) -> Option<f64> {
    samples
        .iter()
        .filter(|(e, _, _)| *e <= 0.1)
        .filter_map(|(value, e, e_m2)| {
            let d = (*e - *e_m2).norm();
            (d > 1e-12).then(|| value / (d * d))
        })
        .reduce(f64::min)
}

/// Everything measured for one body. All quantities except `volume` refer to the
/// volume-normalized body `K̃ = scale · K`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalReport {
    pub dimension: usize,
    pub volume: f64,
    pub scale: f64,
    pub entropy: Optimum,
    /// `E_p` for `p = −1, …, −n`, in that order.
    pub entropies_p: Vec<Optimum>,
    pub santalo_point: Point,
    pub diameter: f64,
    pub inradius: f64,
    pub incenter: Point,
    pub circumradius: f64,
    pub circumcenter: Point,
    pub pinching: f64,
    pub chain: ChainCheck,
    pub blaschke_santalo_margin: f64,
    /// Vitale margin between `K̃ − e(K̃)` and the unit ball.
    pub vitale_margin: f64,
    pub stability: StabilityGap,
    pub lemma: StabilityBound,
}

impl FunctionalReport {
    /// Names of the inequality checks that fail their tolerances.
    pub fn failing_checks(&self) -> Vec<&'static str> {
        let n = self.dimension;
        let mut failing = Vec::new();
        if !self.chain.holds() {
            failing.push("entropy_chain");
        }
        if self.blaschke_santalo_margin < -SANTALO_RELATIVE_SLACK * sphere_area(n) * ball_volume(n) {
            failing.push("blaschke_santalo");
        }
        if self.vitale_margin < -MARGIN_SLACK {
            failing.push("vitale");
        }
        if self.lemma.bound_margin() < -MARGIN_SLACK {
            failing.push("stability_bound");
        }
        if !self.lemma.r_in_bracket() {
            failing.push("r_bracket");
        }
        if self.stability.gap < 0.0 {
            failing.push("stability_gap");
        }
        failing
    }
}

pub fn functional_report(field: &SupportField) -> Result<FunctionalReport> {
    let n = field.dimension();
    let volume = field.volume()?;
    let scale = libm::pow(ball_volume(n) / volume, 1.0 / n as f64);
    let normalized = field.scale(scale);
    let entropy_opt = entropy(&normalized)?;
    let entropies_p = (1..=n as i32).map(|k| entropy_p(&normalized, -k)).collect::<Result<Vec<_>>>()?;
    let santalo_point = entropies_p[n - 1].point;
    let radii = normalized.radii()?;
    let chain = check_entropy_chain(&normalized)?;
    let blaschke_santalo_margin = sphere_area(n) * ball_volume(n) - normalized.volume()? * entropies_p[n - 1].value;
    let centered = normalized.translate(&entropy_opt.point);
    let unit = centered.with_values(alloc::vec![1.0; centered.values().len()]);
    let vitale_margin = check_vitale(&centered, &unit)?;
    Ok(FunctionalReport {
        dimension: n,
        volume,
        scale,
        entropy: entropy_opt,
        santalo_point,
        diameter: normalized.diameter(),
        inradius: radii.inradius,
        incenter: radii.incenter,
        circumradius: radii.circumradius,
        circumcenter: radii.circumcenter,
        pinching: normalized.pinching_ratio()?,
        chain,
        blaschke_santalo_margin,
        vitale_margin,
        stability: gap_from_optimum(&normalized, &entropy_opt),
        lemma: lemma_stab_bound(&normalized)?,
        entropies_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{BodySpec, HarmonicTerm};
    use crate::grid::Grid;
    use alloc::sync::Arc;
    use alloc::vec;
    use core::f64::consts::PI;

    fn field(spec: BodySpec, n: usize, res: usize) -> SupportField {
        SupportField::from_spec(&spec, Arc::new(Grid::new(n, res).unwrap())).unwrap()
    }

    fn normalized_ellipse() -> SupportField {
        let a = libm::sqrt(2.0);
        field(BodySpec::ellipsoid(&[a, 1.0 / a]), 2, 512)
    }

    #[test]
    fn unit_ball_entropy_is_zero_at_origin() {
        for (n, res) in [(2, 128), (3, 16)] {
            let opt = entropy(&field(BodySpec::ball(1.0), n, res)).unwrap();
            assert!(opt.value.abs() < 1e-12 && opt.point.norm() < 1e-12);
        }
    }

    #[test]
    fn translated_ball_entropy_point_follows_center() {
        let f = field(BodySpec::Ball { radius: 1.0, center: vec![0.3, 0.0] }, 2, 128);
        let opt = entropy(&f).unwrap();
        assert!(opt.value.abs() < 1e-12);
        assert!((opt.point - Point::new2(0.3, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn normalized_ellipse_entropy_matches_closed_form() {
        // (1/2π)∫ log(a²cos² + b²sin²) = 2 log((a+b)/2) gives E = 2π log((a+b)/2) at e = 0
        let a = libm::sqrt(2.0);
        let exact = 2.0 * PI * libm::log((a + 1.0 / a) / 2.0);
        let opt = entropy(&normalized_ellipse()).unwrap();
        assert!((opt.value - exact).abs() < 1e-10, "{} vs {exact}", opt.value);
        assert!(opt.point.norm() < 1e-10);
    }

    #[test]
    fn ball_entropy_p_values() {
        let b2 = field(BodySpec::ball(1.0), 2, 64);
        let opt = entropy_p(&b2, -1).unwrap();
        assert!((opt.value - 2.0 * PI).abs() < 1e-12 && opt.point.norm() < 1e-12);
        let b3 = field(BodySpec::ball(1.0), 3, 16);
        assert!((entropy_p(&b3, -2).unwrap().value - 4.0 * PI).abs() < 1e-12);
        assert!(entropy_p(&b2, -3).is_err());
        assert!(entropy_p(&b2, 0).is_err());
    }

    #[test]
    fn santalo_point_symmetry_and_equivariance() {
        let even = BodySpec::TrigPerturbation {
            base_radius: 1.0,
            terms: vec![
                HarmonicTerm { degree: 2, order: 0, coefficient: 1.0 },
                HarmonicTerm { degree: 4, order: -1, coefficient: 0.5 },
            ],
            amplitude: 0.04,
        };
        let f = field(even.clone(), 2, 256);
        assert!(santalo_point(&f).unwrap().norm() < 1e-8);
        let moved = field(even.translated(&[0.1, -0.25]), 2, 256);
        assert!((santalo_point(&moved).unwrap() - Point::new2(0.1, -0.25)).norm() < 1e-8);
        assert!(santalo_point(&field(BodySpec::ball(2.0), 3, 16)).unwrap().norm() < 1e-10);
    }

    #[test]
    fn chain_on_ball_is_tight_and_on_ellipse_holds() {
        let chain = check_entropy_chain(&field(BodySpec::ball(1.0), 2, 128)).unwrap();
        assert!(chain.margins.iter().all(|m| m.abs() < 1e-12));
        let chain = check_entropy_chain(&normalized_ellipse()).unwrap();
        assert!(chain.margins.iter().all(|m| *m >= 0.0), "{:?}", chain.margins);
        let not_normalized = field(BodySpec::ball(2.0), 2, 64);
        assert!(matches!(check_entropy_chain(&not_normalized), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn metrics() {
        let (b2, b1) = (field(BodySpec::ball(2.0), 2, 128), field(BodySpec::ball(1.0), 2, 128));
        assert!((hausdorff(&b2, &b1).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(hausdorff(&b1, &b1).unwrap(), 0.0);
        assert!((delta2(&b2, &b1).unwrap() - libm::sqrt(2.0 * PI)).abs() < 1e-13);
        assert_eq!(delta2(&b1, &b1).unwrap(), 0.0);
        let e = field(BodySpec::ellipsoid(&[2.0, 1.0]), 2, 128);
        assert!((hausdorff(&e, &b1).unwrap() - 1.0).abs() < 1e-15);
        let other = field(BodySpec::ball(1.0), 2, 64);
        assert_eq!(hausdorff(&b1, &other), Err(Error::GridMismatch));
    }

    #[test]
    fn vitale_constants() {
        assert!((vitale_constant(2).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        assert!((vitale_constant(3).unwrap() - PI / 6.0).abs() < 1e-14);
        assert!(vitale_constant(4).is_err());
    }

    #[test]
    fn vitale_margin_for_concentric_balls() {
        let (b2, b1) = (field(BodySpec::ball(2.0), 2, 128), field(BodySpec::ball(1.0), 2, 128));
        let margin = check_vitale(&b2, &b1).unwrap();
        assert!((margin - (2.0 * PI - 1.0 / 6.0)).abs() < 1e-12);
        assert_eq!(check_vitale(&b1, &b1).unwrap(), 0.0);
    }

    #[test]
    fn blaschke_santalo_equality_for_ellipses() {
        let ball = field(BodySpec::ball(1.0), 2, 128);
        assert!(check_blaschke_santalo(&ball).unwrap().abs() < 1e-12);
        let ellipse = field(BodySpec::ellipsoid(&[2.0, 1.0]), 2, 512);
        assert!(check_blaschke_santalo(&ellipse).unwrap().abs() < 1e-6 * 2.0 * PI * PI);
        let ellipsoid = field(BodySpec::ellipsoid(&[1.0, 1.3, 0.8]), 3, 48);
        assert!(check_blaschke_santalo(&ellipsoid).unwrap().abs() < 1e-6 * 4.0 * PI * 4.0 * PI / 3.0);
    }

    #[test]
    fn stability_bound_on_ball_and_ellipse() {
        let ball = lemma_stab_bound(&field(BodySpec::ball(1.0), 2, 128)).unwrap();
        assert!(ball.epsilon.abs() < 1e-14 && (ball.r - 1.0).abs() < 1e-14);
        assert!(ball.lhs < 1e-30 && ball.rhs.abs() < 1e-12);
        let ellipse = lemma_stab_bound(&normalized_ellipse()).unwrap();
        assert!(ellipse.holds(), "{ellipse:?}");
        assert!(ellipse.lhs <= ellipse.rhs);
    }

    #[test]
    fn stability_gap_on_ball_is_degenerate() {
        let gap = stability_gap(&field(BodySpec::ball(1.7), 2, 128)).unwrap();
        assert!(gap.epsilon.abs() < 1e-12 && gap.gap < 1e-12);
        assert_eq!(gap.ratio, None);
    }

    #[test]
    fn report_for_unit_ball() {
        let report = functional_report(&field(BodySpec::ball(1.0), 2, 128)).unwrap();
        assert!(report.entropy.value.abs() < 1e-12);
        assert!(report.failing_checks().is_empty());
        assert!(report.chain.margins.iter().all(|m| m.abs() < 1e-12));
        assert!((report.inradius - 1.0).abs() < 1e-9 && (report.circumradius - 1.0).abs() < 1e-9);
    }
}
