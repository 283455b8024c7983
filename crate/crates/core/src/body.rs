//! Convex bodies represented by sampled support functions.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{ball_volume, sphere_area, Grid};
use crate::legendre::{gauss_legendre, legendre_polynomials, AssociatedTable};
use crate::linalg::sym2_eigenvalues;
use crate::optimize::{barrier_lp, halfspaces, Vector};
use crate::point::Point;

/// One harmonic of a [`BodySpec::TrigPerturbation`].
///
/// On the circle, `order ≥ 0` selects `cos(degree·θ)` and `order < 0` selects
/// `sin(degree·θ)`. On the sphere it is the real spherical harmonic `Y_{degree,order}`
/// scaled to unit mean square.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HarmonicTerm {
    pub degree: u32,
    pub order: i32,
    pub coefficient: f64,
}

/// Analytic generator of an initial body.
///
/// Centers and offsets are coordinate lists of length `n`; an empty list means the origin.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum BodySpec {
    Ball {
        radius: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        center: Vec<f64>,
    },
    Ellipsoid {
        semiaxes: Vec<f64>,
        #[cfg_attr(feature = "serde", serde(default))]
        center: Vec<f64>,
    },
    /// Ball with two opposite caps of height `cap_height` cut off along the last
    /// coordinate axis, edges rounded with radius `smoothing` and then mollified over
    /// the angular width `smoothing`.
    SlicedBall { radius: f64, cap_height: f64, smoothing: f64 },
    /// `base_radius + amplitude · Σ coefficient · harmonic`.
    TrigPerturbation { base_radius: f64, terms: Vec<HarmonicTerm>, amplitude: f64 },
    Scaled { factor: f64, body: Box<BodySpec> },
    Translated { offset: Vec<f64>, body: Box<BodySpec> },
    MinkowskiSum { bodies: Vec<BodySpec> },
}

impl BodySpec {
    pub fn ball(radius: f64) -> Self {
        BodySpec::Ball { radius, center: Vec::new() }
    }

    pub fn ellipsoid(semiaxes: &[f64]) -> Self {
        BodySpec::Ellipsoid { semiaxes: semiaxes.to_vec(), center: Vec::new() }
    }

    pub fn scaled(self, factor: f64) -> Self {
        BodySpec::Scaled { factor, body: Box::new(self) }
    }

    pub fn translated(self, offset: &[f64]) -> Self {
        BodySpec::Translated { offset: offset.to_vec(), body: Box::new(self) }
    }
}

/// Sampled support function `s_i = s_K(u_i)`; the representation of a convex body.
#[derive(Clone, Debug)]
pub struct SupportField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

/// Inscribed and circumscribed balls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Radii {
    pub inradius: f64,
    pub incenter: Point,
    pub circumradius: f64,
    pub circumcenter: Point,
}

impl SupportField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(&values)?;
        Ok(SupportField { grid, values })
    }

    /// Samples `spec` and verifies strict convexity.
    pub fn from_spec(spec: &BodySpec, grid: Arc<Grid>) -> Result<Self> {
        let values = sample(spec, &grid)?;
        let field = SupportField { grid, values };
        field.check_convex()?;
        Ok(field)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dimension(&self) -> usize {
        self.grid.dimension()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        SupportField { grid: self.grid.clone(), values }
    }

    pub(crate) fn check_same_grid(&self, other: &SupportField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// The symmetric matrix `A = ∇²s + s·Id` per node as `[a11, a12, a22]`
    /// (on the circle only `a11 = s'' + s` is meaningful).
    pub fn curvature_matrix(&self) -> Result<Vec<[f64; 3]>> {
        let jet = self.grid.jet(&self.values)?;
        let planar = self.dimension() == 2;
        Ok(jet
            .hessian
            .iter()
            .zip(&self.values)
            .map(|(h, s)| if planar { [h[0] + s, 0.0, 0.0] } else { [h[0] + s, h[1], h[2] + s] })
            .collect())
    }

    /// Principal radii of curvature `(min, max)` per node: the eigenvalues of `A`.
    pub fn principal_radii(&self) -> Result<Vec<(f64, f64)>> {
        let planar = self.dimension() == 2;
        Ok(self
            .curvature_matrix()?
            .into_iter()
            .map(|a| if planar { (a[0], a[0]) } else { sym2_eigenvalues(a[0], a[1], a[2]) })
            .collect())
    }

    pub fn check_convex(&self) -> Result<()> {
        let radii = self.principal_radii()?;
        check_radii(&radii)
    }

    /// `σ_{n−1} = det A`, the reciprocal Gauss curvature at each normal.
    pub fn sigma(&self) -> Result<Vec<f64>> {
        let radii = self.principal_radii()?;
        check_radii(&radii)?;
        let planar = self.dimension() == 2;
        Ok(radii.iter().map(|&(lo, hi)| if planar { lo } else { lo * hi }).collect())
    }

    /// `V(K) = (1/n) ∫ s σ_{n−1} dθ`.
    pub fn volume(&self) -> Result<f64> {
        let sigma = self.sigma()?;
        Ok(self.volume_with_sigma(&sigma))
    }

    pub(crate) fn volume_with_sigma(&self, sigma: &[f64]) -> f64 {
        let n = self.dimension() as f64;
        self.grid.integrate(self.values.iter().zip(sigma).map(|(s, g)| s * g)) / n
    }

    /// `max_u s(u) + s(−u)` over antipodal node pairs.
    pub fn diameter(&self) -> f64 {
        (0..self.values.len())
            .map(|i| self.values[i] + self.values[self.grid.antipode(i)])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Steiner point `(1/V(B)) ∫ s(u) u dθ`; always interior.
    pub fn steiner_point(&self) -> Point {
        let n = self.dimension();
        let mut acc = Point::ORIGIN;
        for ((s, u), w) in self.values.iter().zip(self.grid.nodes()).zip(self.grid.weights()) {
            acc = acc + *u * (s * w);
        }
        acc * (1.0 / ball_volume(n))
    }

    /// Support function of `K − x`.
    pub fn translate(&self, x: &Point) -> SupportField {
        let values = self.values.iter().zip(self.grid.nodes()).map(|(s, u)| s - x.dot(u)).collect();
        self.with_values(values)
    }

    pub fn scale(&self, factor: f64) -> SupportField {
        self.with_values(self.values.iter().map(|s| s * factor).collect())
    }

    /// `K̃ = (V(B)/V(K))^{1/n} K`.
    pub fn normalize(&self) -> Result<SupportField> {
        Ok(self.scale(self.normalizing_factor()?))
    }

    pub fn normalizing_factor(&self) -> Result<f64> {
        let n = self.dimension();
        Ok(libm::pow(ball_volume(n) / self.volume()?, 1.0 / n as f64))
    }

    /// `min_u (s(u) − x·u)`: positive iff `x` is interior (up to the grid).
    pub fn interior_margin(&self, x: &Point) -> f64 {
        self.values
            .iter()
            .zip(self.grid.nodes())
            .map(|(s, u)| s - x.dot(u))
            .fold(f64::INFINITY, f64::min)
    }

    /// Global minimum principal curvature over global maximum principal curvature.
    pub fn pinching_ratio(&self) -> Result<f64> {
        let radii = self.principal_radii()?;
        check_radii(&radii)?;
        let smallest = radii.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let largest = radii.iter().map(|r| r.1).fold(0.0, f64::max);
        Ok(smallest / largest)
    }

    /// Inradius `max_x min_u (s − x·u)` and circumradius `min_x max_u (s − x·u)` with
    /// their centers, each as a linear program over `(x, radius)` solved by a barrier method.
    pub fn radii(&self) -> Result<Radii> {
        let n = self.dimension();
        let nodes = self.grid.nodes();
        let start = self.steiner_point();
        let scale = self.values.iter().fold(0.0f64, |a, s| a.max(s.abs())).max(1e-300);
        let tolerance = 1e-11 * scale;
        let lift = |p: &Point, r: f64| {
            let mut z = [0.0; 4];
            z[..n].copy_from_slice(p.coords(n));
            z[n] = r;
            z
        };
        let mut cost: Vector = [0.0; 4];
        cost[n] = -1.0;
        // x·u + r ≤ s
        let inner = halfspaces(self.values.iter().zip(nodes).map(|(s, u)| (lift(u, 1.0), *s)));
        let margin = self.interior_margin(&start);
        if !(margin > 0.0) {
            return Err(Error::OptimizationFailure("Steiner point is not interior"));
        }
        let z_in = barrier_lp(n + 1, cost, &inner, lift(&start, 0.5 * margin), scale, tolerance)?;
        // s − x·u − R ≤ 0
        cost[n] = 1.0;
        let outer = halfspaces(self.values.iter().zip(nodes).map(|(s, u)| (lift(&-*u, -1.0), -*s)));
        let reach = self.values.iter().zip(nodes).map(|(s, u)| s - start.dot(u)).fold(f64::NEG_INFINITY, f64::max);
        let z_out = barrier_lp(n + 1, cost, &outer, lift(&start, reach + 0.5 * scale), scale, tolerance)?;
        let radii = Radii {
            inradius: z_in[n],
            incenter: Point::from_slice(&z_in[..n]),
            circumradius: z_out[n],
            circumcenter: Point::from_slice(&z_out[..n]),
        };
        if !(radii.inradius > 0.0 && radii.inradius <= radii.circumradius + tolerance) {
            return Err(Error::OptimizationFailure("inconsistent inradius and circumradius"));
        }
        Ok(radii)
    }

    /// Boundary point with outer normal `u_i`: `s·u + ∇s`.
    pub fn boundary_points(&self) -> Result<Vec<Point>> {
        let jet = self.grid.jet(&self.values)?;
        Ok((0..self.values.len())
            .map(|i| {
                let [e1, e2] = self.grid.frame(i);
                self.grid.nodes()[i] * self.values[i] + e1 * jet.gradient[i][0] + e2 * jet.gradient[i][1]
            })
            .collect())
    }
}

fn check_radii(radii: &[(f64, f64)]) -> Result<()> {
    match radii.iter().enumerate().find(|(_, r)| !(r.0 > 0.0)) {
        Some((node, r)) => Err(Error::ConvexityViolation { node, value: r.0 }),
        None => Ok(()),
    }
}

/// Samples the support function of `spec` on `grid`.
pub fn support_from_spec(spec: &BodySpec, grid: Arc<Grid>) -> Result<SupportField> {
    SupportField::from_spec(spec, grid)
}

fn point_of(coords: &[f64], n: usize, what: &'static str) -> Result<Point> {
    match coords.len() {
        0 => Ok(Point::ORIGIN),
        len if len == n && coords.iter().all(|c| c.is_finite()) => Ok(Point::from_slice(coords)),
        _ => Err(Error::InvalidParameter(what)),
    }
}

fn positive(x: f64, what: &'static str) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(what))
    }
}

fn sample(spec: &BodySpec, grid: &Grid) -> Result<Vec<f64>> {
    let n = grid.dimension();
    let nodes = grid.nodes();
    match spec {
        BodySpec::Ball { radius, center } => {
            let r = positive(*radius, "ball radius must be positive")?;
            let c = point_of(center, n, "ball center must have n coordinates")?;
            Ok(nodes.iter().map(|u| r + c.dot(u)).collect())
        }
        BodySpec::Ellipsoid { semiaxes, center } => {
            if semiaxes.len() != n {
                return Err(Error::InvalidParameter("ellipsoid needs n semiaxes"));
            }
            for a in semiaxes {
                positive(*a, "ellipsoid semiaxes must be positive")?;
            }
            let c = point_of(center, n, "ellipsoid center must have n coordinates")?;
            Ok(nodes
                .iter()
                .map(|u| {
                    let q: f64 = (0..n).map(|k| semiaxes[k] * semiaxes[k] * u.0[k] * u.0[k]).sum();
                    libm::sqrt(q) + c.dot(u)
                })
                .collect())
        }
        BodySpec::SlicedBall { radius, cap_height, smoothing } => sliced_ball(grid, *radius, *cap_height, *smoothing),
        BodySpec::TrigPerturbation { base_radius, terms, amplitude } => {
            let base = positive(*base_radius, "base radius must be positive")?;
            if !amplitude.is_finite() {
                return Err(Error::InvalidParameter("amplitude must be finite"));
            }
            let mut values = vec![base; nodes.len()];
            for term in terms {
                let harmonic = harmonic_samples(grid, term)?;
                for (v, h) in values.iter_mut().zip(harmonic) {
                    *v += amplitude * term.coefficient * h;
                }
            }
            Ok(values)
        }
        BodySpec::Scaled { factor, body } => {
            let f = positive(*factor, "scale factor must be positive")?;
            Ok(sample(body, grid)?.into_iter().map(|s| s * f).collect())
        }
        BodySpec::Translated { offset, body } => {
            let x = point_of(offset, n, "offset must have n coordinates")?;
            Ok(sample(body, grid)?.into_iter().zip(nodes).map(|(s, u)| s + x.dot(u)).collect())
        }
        BodySpec::MinkowskiSum { bodies } => {
            if bodies.is_empty() {
                return Err(Error::InvalidParameter("Minkowski sum of no bodies"));
            }
            let mut acc = vec![0.0; nodes.len()];
            for b in bodies {
                for (a, s) in acc.iter_mut().zip(sample(b, grid)?) {
                    *a += s;
                }
            }
            Ok(acc)
        }
    }
}

fn harmonic_samples(grid: &Grid, term: &HarmonicTerm) -> Result<Vec<f64>> {
    let degree = term.degree as usize;
    let nodes = grid.nodes();
    if grid.dimension() == 2 {
        return Ok(nodes
            .iter()
            .map(|u| {
                let angle = libm::atan2(u.0[1], u.0[0]) * degree as f64;
                if term.order >= 0 {
                    libm::cos(angle)
                } else {
                    libm::sin(angle)
                }
            })
            .collect());
    }
    let m = term.order.unsigned_abs() as usize;
    if m > degree {
        return Err(Error::InvalidParameter("harmonic order exceeds degree"));
    }
    Ok(nodes
        .iter()
        .map(|u| {
            let theta = libm::acos(u.0[2].clamp(-1.0, 1.0));
            let phi = libm::atan2(u.0[1], u.0[0]);
            let table = AssociatedTable::new(degree + 1, &[theta]);
            let p = table.value[table.row(m, degree)];
            // ∫ over the sphere of the square equals 4π
            let angular = match term.order {
                0 => libm::sqrt(2.0),
                o if o > 0 => 2.0 * libm::cos(m as f64 * phi),
                _ => 2.0 * libm::sin(m as f64 * phi),
            };
            p * angular
        })
        .collect())
}

/// Zonal profile of the edge-rounded sliced ball as a function of the angle `psi` to the axis.
struct SlicedProfile {
    core_radius: f64,
    rounding: f64,
    /// Angular radius of the flat face's normal cone before rounding.
    face_angle: f64,
}

impl SlicedProfile {
    fn at(&self, psi: f64) -> f64 {
        let folded = psi.min(PI - psi);
        if folded < self.face_angle {
            self.rounding + self.core_radius * libm::cos(self.face_angle - folded)
        } else {
            self.rounding + self.core_radius
        }
    }
}

/// Gauss–Legendre rule mapped onto `[a, b]`.
fn mapped_rule(count: usize, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let (x, w) = gauss_legendre(count);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    x.into_iter().zip(w).map(move |(x, w)| (mid + half * x, half * w))
}

/// Intersection of a ball with a slab, made strictly convex by taking the parallel body
/// at distance `smoothing` and smooth by a zonal convolution with the heat kernel of
/// angular standard deviation `smoothing / 2` (multipliers `exp(−λ_l ρ²/8)` with
/// `λ_l = l²` on the circle and `l(l+1)` on the sphere). The kernel is positive, so the
/// convolution is a Minkowski average of rotated copies: convexity is preserved and
/// every principal radius stays at least `smoothing`.
fn sliced_ball(grid: &Grid, radius: f64, cap_height: f64, smoothing: f64) -> Result<Vec<f64>> {
    let r = positive(radius, "sliced ball radius must be positive")?;
    let delta = positive(cap_height, "cap height must be positive")?;
    let rho = positive(smoothing, "smoothing width must be positive")?;
    if delta + rho >= r || rho >= 1.0 {
        return Err(Error::InvalidParameter("need cap_height + smoothing < radius and smoothing < 1"));
    }
    let core = r - rho;
    let half_width = r - delta - rho;
    let profile = SlicedProfile { core_radius: core, rounding: rho, face_angle: libm::acos(half_width / core) };
    let alpha = profile.face_angle;
    // exp(−m²ρ²/8) < 1e-17 beyond 18/ρ
    let modes = (libm::ceil(20.0 / rho) as usize + 8).min(8192);
    let end_points = libm::ceil(modes as f64 * alpha) as usize + 64;
    let axis = grid.dimension() - 1;
    let mut coefficients = vec![0.0; modes + 1];
    let mut multipliers = vec![0.0; modes + 1];
    if grid.dimension() == 2 {
        // g(ψ) = Σ c_m cos(mψ) over the full circle, g even.
        for (psi, w) in mapped_rule(end_points, 0.0, alpha).chain(mapped_rule(end_points, PI - alpha, PI)) {
            let g = profile.at(psi);
            for (m, c) in coefficients.iter_mut().enumerate() {
                *c += w * g * libm::cos(m as f64 * psi);
            }
        }
        let flat = r;
        for (m, c) in coefficients.iter_mut().enumerate() {
            *c += if m == 0 {
                flat * (PI - 2.0 * alpha)
            } else {
                let mf = m as f64;
                flat * (libm::sin(mf * (PI - alpha)) - libm::sin(mf * alpha)) / mf
            };
            *c *= if m == 0 { 1.0 / PI } else { 2.0 / PI };
        }
        for (m, lambda) in multipliers.iter_mut().enumerate() {
            let mf = m as f64;
            *lambda = libm::exp(-mf * mf * rho * rho / 8.0);
        }
    } else {
        // g(ψ) = Σ a_l P_l(cos ψ)
        let mut p = vec![0.0; modes + 2];
        for (psi, w) in mapped_rule(end_points, 0.0, alpha).chain(mapped_rule(end_points, PI - alpha, PI)) {
            let g = profile.at(psi);
            legendre_polynomials(libm::cos(psi), &mut p[..modes + 1]);
            for (l, a) in coefficients.iter_mut().enumerate() {
                *a += w * g * p[l] * libm::sin(psi);
            }
        }
        // flat middle band: ∫ P_l = (P_{l+1} − P_{l−1})/(2l+1) on t ∈ [−cos α, cos α]
        let t = libm::cos(alpha);
        let mut p_hi = vec![0.0; modes + 2];
        let mut p_lo = vec![0.0; modes + 2];
        legendre_polynomials(t, &mut p_hi);
        legendre_polynomials(-t, &mut p_lo);
        for (l, a) in coefficients.iter_mut().enumerate() {
            let antiderivative = |q: &[f64]| {
                if l == 0 {
                    q[1]
                } else {
                    (q[l + 1] - q[l - 1]) / (2 * l + 1) as f64
                }
            };
            *a += r * (antiderivative(&p_hi) - antiderivative(&p_lo));
            *a *= (2 * l + 1) as f64 / 2.0;
        }
        for (l, lambda) in multipliers.iter_mut().enumerate() {
            let lf = l as f64;
            *lambda = libm::exp(-lf * (lf + 1.0) * rho * rho / 8.0);
        }
    }
    let mut basis = vec![0.0; modes + 1];
    Ok(grid
        .nodes()
        .iter()
        .map(|u| {
            let t = u.0[axis].clamp(-1.0, 1.0);
            if grid.dimension() == 2 {
                chebyshev(t, &mut basis);
            } else {
                legendre_polynomials(t, &mut basis);
            }
            basis.iter().zip(&coefficients).zip(&multipliers).map(|((b, c), l)| b * c * l).sum()
        })
        .collect())
}

/// `out[m] = T_m(t) = cos(m·acos t)`.
fn chebyshev(t: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for m in 2..out.len() {
        out[m] = 2.0 * t * out[m - 1] - out[m - 2];
    }
}

/// `n·V(B)`, the area of the sphere; re-exported for callers that normalize.
pub fn unit_sphere_area(n: usize) -> f64 {
    sphere_area(n)
}
