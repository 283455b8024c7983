//! Discretization of the unit circle and the unit 2-sphere.
//!
//! The circle uses `N` equally spaced angles with the uniform rule, exact for
//! trigonometric polynomials of degree below `N`. The sphere uses `L` Gauss–Legendre
//! colatitudes times `2L` uniform longitudes; the rule is exact for spherical harmonics
//! of degree up to `2L − 1`. Derivatives are spectral: Fourier on the circle, a
//! spherical-harmonic projection onto degrees `< L` on the sphere. No node sits on a
//! pole, so the chart quantities `1/sin θ` and `cot θ` are finite everywhere.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft::{Complex, Fft};
use crate::legendre::{gauss_legendre, AssociatedTable};
use crate::point::Point;

pub const DEFAULT_CIRCLE_RESOLUTION: usize = 512;
pub const DEFAULT_SPHERE_RESOLUTION: usize = 48;

/// Area of `S^{n-1}`; `n·V(B)`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => f64::NAN,
    }
}

/// Volume of the unit ball of `R^n`.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

/// First or second covariant derivatives in the orthonormal frame of each node.
#[derive(Clone, Debug, PartialEq)]
pub enum Derivative {
    /// `[∇_1 f, ∇_2 f]`; the second component is zero on the circle.
    Gradient(Vec<[f64; 2]>),
    /// `[∇_11 f, ∇_12 f, ∇_22 f]`; only the first component is used on the circle.
    Hessian(Vec<[f64; 3]>),
}

/// Value, gradient and covariant Hessian of a field at every node.
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: Vec<f64>,
    pub gradient: Vec<[f64; 2]>,
    pub hessian: Vec<[f64; 3]>,
}

#[derive(Clone, Debug)]
struct CircleOps {
    fft: Fft,
}

#[derive(Clone, Debug)]
struct SphereOps {
    latitudes: usize,
    longitudes: usize,
    sin: Vec<f64>,
    cot: Vec<f64>,
    gl_weights: Vec<f64>,
    table: AssociatedTable,
    ring_fft: Fft,
}

#[derive(Clone, Debug)]
enum Ops {
    Circle(CircleOps),
    Sphere(SphereOps),
}

/// Immutable discretization of `S^{n-1}` for `n ∈ {2, 3}`.
#[derive(Clone, Debug)]
pub struct Grid {
    dimension: usize,
    resolution: usize,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    frames: Vec<[Point; 2]>,
    antipodes: Vec<usize>,
    ops: Ops,
}

/// Builds the grid for `S^{n-1}`. `resolution` is the node count `N` on the circle and
/// the latitude count `L` on the sphere.
pub fn build_grid(n: usize, resolution: usize) -> Result<Grid> {
    Grid::new(n, resolution)
}

impl Grid {
    pub fn new(n: usize, resolution: usize) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::UnsupportedDimension(n));
        }
        if resolution < 8 || resolution % 2 != 0 {
            return Err(Error::InvalidResolution { dimension: n, resolution });
        }
        Ok(if n == 2 { Self::circle(resolution) } else { Self::sphere(resolution) })
    }

    /// Grid at the default resolution for dimension `n`.
    pub fn with_default_resolution(n: usize) -> Result<Self> {
        let resolution = if n == 2 { DEFAULT_CIRCLE_RESOLUTION } else { DEFAULT_SPHERE_RESOLUTION };
        Self::new(n, resolution)
    }

    fn circle(count: usize) -> Self {
        let mut nodes = Vec::with_capacity(count);
        let mut frames = Vec::with_capacity(count);
        for i in 0..count {
            let angle = 2.0 * PI * i as f64 / count as f64;
            let (s, c) = (libm::sin(angle), libm::cos(angle));
            nodes.push(Point::new2(c, s));
            frames.push([Point::new2(-s, c), Point::ORIGIN]);
        }
        Grid {
            dimension: 2,
            resolution: count,
            nodes,
            weights: vec![2.0 * PI / count as f64; count],
            frames,
            antipodes: (0..count).map(|i| (i + count / 2) % count).collect(),
            ops: Ops::Circle(CircleOps { fft: Fft::new(count) }),
        }
    }

    fn sphere(latitudes: usize) -> Self {
        let longitudes = 2 * latitudes;
        let (x, gl_weights) = gauss_legendre(latitudes);
        let colatitudes: Vec<f64> = x.iter().map(|x| libm::acos(*x)).collect();
        let sin: Vec<f64> = colatitudes.iter().map(|t| libm::sin(*t)).collect();
        let cot: Vec<f64> = x.iter().zip(&sin).map(|(c, s)| c / s).collect();
        let dphi = 2.0 * PI / longitudes as f64;
        let count = latitudes * longitudes;
        let mut nodes = Vec::with_capacity(count);
        let mut frames = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        let mut antipodes = Vec::with_capacity(count);
        for j in 0..latitudes {
            let (st, ct) = (sin[j], x[j]);
            for k in 0..longitudes {
                let phi = dphi * k as f64;
                let (sp, cp) = (libm::sin(phi), libm::cos(phi));
                nodes.push(Point::new3(st * cp, st * sp, ct));
                frames.push([Point::new3(ct * cp, ct * sp, -st), Point::new3(-sp, cp, 0.0)]);
                weights.push(gl_weights[j] * dphi);
                antipodes.push((latitudes - 1 - j) * longitudes + (k + latitudes) % longitudes);
            }
        }
        let table = AssociatedTable::new(latitudes, &colatitudes);
        Grid {
            dimension: 3,
            resolution: latitudes,
            nodes,
            weights,
            frames,
            antipodes,
            ops: Ops::Sphere(SphereOps {
                latitudes,
                longitudes,
                sin,
                cot,
                gl_weights,
                table,
                ring_fft: Fft::new(longitudes),
            }),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Orthonormal tangent frame at node `i` (the second vector is zero on the circle).
    pub fn frame(&self, i: usize) -> [Point; 2] {
        self.frames[i]
    }

    /// Index of the node at `-u_i`.
    pub fn antipode(&self, i: usize) -> usize {
        self.antipodes[i]
    }

    /// Characteristic angular spacing `h`: `2π/N` on the circle, `π/L` on the sphere.
    pub fn spacing(&self) -> f64 {
        match self.dimension {
            2 => 2.0 * PI / self.resolution as f64,
            _ => PI / self.resolution as f64,
        }
    }

    /// Highest trigonometric / spherical-harmonic degree resolved by the derivatives.
    pub fn degree_limit(&self) -> usize {
        match &self.ops {
            Ops::Circle(_) => self.resolution / 2,
            Ops::Sphere(s) => s.latitudes - 1,
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.dimension == other.dimension && self.resolution == other.resolution
    }

    pub(crate) fn check_len(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: field.len() });
        }
        Ok(())
    }

    /// `Σ w_i f_i`.
    pub fn quadrature(&self, field: &[f64]) -> Result<f64> {
        self.check_len(field)?;
        Ok(self.integrate(field.iter().copied()))
    }

    pub(crate) fn integrate(&self, values: impl Iterator<Item = f64>) -> f64 {
        self.weights.iter().zip(values).map(|(w, f)| w * f).sum()
    }

    pub fn differentiate(&self, field: &[f64], order: u32) -> Result<Derivative> {
        match order {
            1 => Ok(Derivative::Gradient(self.jet(field)?.gradient)),
            2 => Ok(Derivative::Hessian(self.jet(field)?.hessian)),
            _ => Err(Error::InvalidParameter("derivative order must be 1 or 2")),
        }
    }

    /// Band-limited projection of `field` together with its gradient and covariant Hessian.
    pub fn jet(&self, field: &[f64]) -> Result<Jet> {
        self.check_len(field)?;
        Ok(match &self.ops {
            Ops::Circle(c) => {
                let mut d = c.derivatives(field, &[1, 2]);
                let d2 = d.pop().unwrap_or_default();
                let d1 = d.pop().unwrap_or_default();
                Jet {
                    value: field.to_vec(),
                    gradient: d1.into_iter().map(|d| [d, 0.0]).collect(),
                    hessian: d2.into_iter().map(|d| [d, 0.0, 0.0]).collect(),
                }
            }
            Ops::Sphere(s) => s.jet(field),
        })
    }

    /// Laplace–Beltrami operator applied to `field`.
    pub fn laplacian(&self, field: &[f64]) -> Result<Vec<f64>> {
        self.check_len(field)?;
        Ok(match &self.ops {
            Ops::Circle(c) => c.derivative(field, 2),
            Ops::Sphere(s) => {
                let mut spectrum = s.analyze(field);
                s.apply_degree_multiplier(&mut spectrum, |l| -((l * (l + 1)) as f64));
                s.synthesize_values(&spectrum)
            }
        })
    }

    /// Projection onto the resolved band (identity on the circle).
    pub fn project(&self, field: &[f64]) -> Result<Vec<f64>> {
        self.check_len(field)?;
        Ok(match &self.ops {
            Ops::Circle(_) => field.to_vec(),
            Ops::Sphere(s) => s.synthesize_values(&s.analyze(field)),
        })
    }

    /// Sup norms of the derivatives of orders `0..=max_order` (`max_order ≤ 4`).
    ///
    /// On the circle these are `sup |f^{(m)}|`. On the sphere the odd and higher orders
    /// use the Laplacian as a stand-in for the full tensor: order 1 is `|∇f|`, order 2
    /// the Frobenius norm of `∇²f`, order 3 is `|∇Δf|` and order 4 the Frobenius norm
    /// of `∇²Δf`.
    pub fn derivative_sup_norms(&self, field: &[f64], max_order: usize) -> Result<Vec<f64>> {
        self.check_len(field)?;
        if max_order > 4 {
            return Err(Error::InvalidParameter("derivative order above 4"));
        }
        let sup = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0f64, |acc, x| acc.max(x.abs()));
        let mut norms = vec![sup(&mut field.iter().copied())];
        match &self.ops {
            Ops::Circle(c) => {
                for order in 1..=max_order {
                    norms.push(sup(&mut c.derivative(field, order as u32).into_iter()));
                }
            }
            Ops::Sphere(_) => {
                let frob = |h: &[f64; 3]| libm::sqrt(h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
                let grad = |g: &[f64; 2]| libm::hypot(g[0], g[1]);
                let jet = self.jet(field)?;
                if max_order >= 1 {
                    norms.push(sup(&mut jet.gradient.iter().map(grad)));
                }
                if max_order >= 2 {
                    norms.push(sup(&mut jet.hessian.iter().map(frob)));
                }
                if max_order >= 3 {
                    let lap = self.laplacian(field)?;
                    let lap_jet = self.jet(&lap)?;
                    norms.push(sup(&mut lap_jet.gradient.iter().map(grad)));
                    if max_order >= 4 {
                        norms.push(sup(&mut lap_jet.hessian.iter().map(frob)));
                    }
                }
            }
        }
        Ok(norms)
    }
}

impl CircleOps {
    /// `d^order f / dθ^order` by Fourier multiplication. The Nyquist mode is dropped for
    /// odd orders.
    fn derivative(&self, field: &[f64], order: u32) -> Vec<f64> {
        let mut out = self.derivatives(field, &[order]);
        out.pop().unwrap_or_default()
    }

    /// Several derivatives of `field` sharing one forward transform. Pairs of real
    /// outputs share an inverse transform as real and imaginary parts.
    fn derivatives(&self, field: &[f64], orders: &[u32]) -> Vec<Vec<f64>> {
        let n = self.fft.len();
        let mut spectrum: Vec<Complex> = field.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.fft.forward(&mut spectrum);
        let multiplied = |c: Complex, k: usize, order: u32| {
            if 2 * k == n && order % 2 == 1 {
                return Complex::ZERO;
            }
            let wavenumber = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            // (i m)^order
            let magnitude = (0..order).fold(1.0, |acc, _| acc * wavenumber);
            let rotated = match order % 4 {
                0 => c,
                1 => Complex::new(-c.im, c.re),
                2 => Complex::new(-c.re, -c.im),
                _ => Complex::new(c.im, -c.re),
            };
            rotated.scale(magnitude)
        };
        let mut out = Vec::with_capacity(orders.len());
        for pair in orders.chunks(2) {
            let mut work: Vec<Complex> = spectrum
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    let first = multiplied(c, k, pair[0]);
                    match pair.get(1) {
                        Some(&second) => {
                            let z = multiplied(c, k, second);
                            Complex::new(first.re - z.im, first.im + z.re)
                        }
                        None => first,
                    }
                })
                .collect();
            self.fft.inverse(&mut work);
            out.push(work.iter().map(|c| c.re).collect());
            if pair.len() == 2 {
                out.push(work.iter().map(|c| c.im).collect());
            }
        }
        out
    }
}

fn i_times(z: Complex) -> Complex {
    Complex::new(-z.im, z.re)
}

/// Real spherical-harmonic coefficients: `f = Σ P̄_lm(cos θ)(a_lm cos mφ + b_lm sin mφ)`.
struct Spectrum {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Radial {
    Value,
    DTheta,
    D2Theta,
}

impl SphereOps {
    fn index(&self, m: usize, l: usize) -> usize {
        self.table.row(m, l) / self.latitudes
    }

    fn analyze(&self, field: &[f64]) -> Spectrum {
        let (lat, lon) = (self.latitudes, self.longitudes);
        let dphi = 2.0 * PI / lon as f64;
        let modes = lat;
        // ring Fourier sums, [m * lat + j]; two real rings share one complex transform
        let mut ring_cos = vec![0.0; modes * lat];
        let mut ring_sin = vec![0.0; modes * lat];
        let mut work = vec![Complex::ZERO; lon];
        for j0 in (0..lat).step_by(2) {
            let j1 = (j0 + 1 < lat).then_some(j0 + 1);
            for k in 0..lon {
                let im = j1.map_or(0.0, |j| field[j * lon + k]);
                work[k] = Complex::new(field[j0 * lon + k], im);
            }
            self.ring_fft.forward(&mut work);
            for m in 0..modes {
                let (z, w) = (work[m], work[(lon - m) % lon]);
                // spectra of the real and imaginary inputs
                let first = Complex::new(0.5 * (z.re + w.re), 0.5 * (z.im - w.im));
                let second = Complex::new(0.5 * (z.im + w.im), -0.5 * (z.re - w.re));
                for (j, f) in core::iter::once((j0, first)).chain(j1.map(|j| (j, second))) {
                    let scale = dphi * self.gl_weights[j];
                    ring_cos[m * lat + j] = f.re * scale;
                    ring_sin[m * lat + j] = -f.im * scale;
                }
            }
        }
        let size = self.table.value.len() / lat;
        let mut spectrum = Spectrum { cos: vec![0.0; size], sin: vec![0.0; size] };
        for m in 0..modes {
            let norm = if m == 0 { 2.0 * PI } else { PI };
            let (rc, rs) = (&ring_cos[m * lat..(m + 1) * lat], &ring_sin[m * lat..(m + 1) * lat]);
            for l in m..lat {
                let row = self.table.row(m, l);
                let p = &self.table.value[row..row + lat];
                let mut a = 0.0;
                let mut b = 0.0;
                for j in 0..lat {
                    a += p[j] * rc[j];
                    b += p[j] * rs[j];
                }
                let idx = self.index(m, l);
                spectrum.cos[idx] = a / norm;
                spectrum.sin[idx] = b / norm;
            }
        }
        spectrum
    }

    fn apply_degree_multiplier(&self, spectrum: &mut Spectrum, multiplier: impl Fn(usize) -> f64) {
        for m in 0..self.latitudes {
            for l in m..self.latitudes {
                let idx = self.index(m, l);
                let factor = multiplier(l);
                spectrum.cos[idx] *= factor;
                spectrum.sin[idx] *= factor;
            }
        }
    }

    /// Per-ring Fourier coefficients `(A_m(θ_j), B_m(θ_j))` of the chosen radial derivative.
    fn rings(&self, spectrum: &Spectrum, radial: Radial) -> (Vec<f64>, Vec<f64>) {
        let lat = self.latitudes;
        let table = match radial {
            Radial::Value => &self.table.value,
            Radial::DTheta => &self.table.d_theta,
            Radial::D2Theta => &self.table.d2_theta,
        };
        let mut a = vec![0.0; lat * lat];
        let mut b = vec![0.0; lat * lat];
        for m in 0..lat {
            let (ra, rb) = (&mut a[m * lat..(m + 1) * lat], &mut b[m * lat..(m + 1) * lat]);
            for l in m..lat {
                let idx = self.index(m, l);
                let (ca, cb) = (spectrum.cos[idx], spectrum.sin[idx]);
                let row = self.table.row(m, l);
                let p = &table[row..row + lat];
                for j in 0..lat {
                    ra[j] += ca * p[j];
                    rb[j] += cb * p[j];
                }
            }
        }
        (a, b)
    }

    /// Evaluates `∂_φ^phi_order` of each ring series on the grid, two outputs per
    /// complex transform.
    fn ring_values(&self, requests: &[(&(Vec<f64>, Vec<f64>), u32)]) -> Vec<Vec<f64>> {
        let (lat, lon) = (self.latitudes, self.longitudes);
        let mut outputs: Vec<Vec<f64>> = requests.iter().map(|_| vec![0.0; lat * lon]).collect();
        let mut work = vec![Complex::ZERO; lon];
        let full = lon as f64;
        for (pair_index, pair) in requests.chunks(2).enumerate() {
            for j in 0..lat {
                work.iter_mut().for_each(|w| *w = Complex::ZERO);
                for (slot, (rings, phi_order)) in pair.iter().enumerate() {
                    for m in 0..lat {
                        let mf = m as f64;
                        let (am, bm) = (rings.0[m * lat + j], rings.1[m * lat + j]);
                        // coefficients of cos and sin after differentiating phi_order times
                        let (c, s) = match phi_order {
                            0 => (am, bm),
                            1 => (mf * bm, -mf * am),
                            _ => (-mf * mf * am, -mf * mf * bm),
                        };
                        // c cos + s sin = Re((c − i s) e^{imφ}), split over ±m
                        let (lo, hi) = if m == 0 {
                            (Complex::new(c * full, 0.0), Complex::ZERO)
                        } else {
                            (Complex::new(0.5 * c * full, -0.5 * s * full), Complex::new(0.5 * c * full, 0.5 * s * full))
                        };
                        let (lo, hi) = if slot == 0 { (lo, hi) } else { (i_times(lo), i_times(hi)) };
                        work[m] = work[m].add(lo);
                        if m > 0 {
                            work[lon - m] = work[lon - m].add(hi);
                        }
                    }
                }
                self.ring_fft.inverse(&mut work);
                let base = 2 * pair_index;
                for k in 0..lon {
                    outputs[base][j * lon + k] = work[k].re;
                    if pair.len() == 2 {
                        outputs[base + 1][j * lon + k] = work[k].im;
                    }
                }
            }
        }
        outputs
    }

    fn synthesize_values(&self, spectrum: &Spectrum) -> Vec<f64> {
        let rings = self.rings(spectrum, Radial::Value);
        self.ring_values(&[(&rings, 0)]).pop().unwrap_or_default()
    }

    fn jet(&self, field: &[f64]) -> Jet {
        let spectrum = self.analyze(field);
        let value_rings = self.rings(&spectrum, Radial::Value);
        let dt_rings = self.rings(&spectrum, Radial::DTheta);
        let d2t_rings = self.rings(&spectrum, Radial::D2Theta);
        let mut out = self
            .ring_values(&[
                (&value_rings, 0),
                (&value_rings, 1),
                (&value_rings, 2),
                (&dt_rings, 0),
                (&dt_rings, 1),
                (&d2t_rings, 0),
            ])
            .into_iter();
        let mut next = || out.next().unwrap_or_default();
        let (value, s_p, s_pp, s_t, s_tp, s_tt) = (next(), next(), next(), next(), next(), next());
        let lon = self.longitudes;
        let mut gradient = Vec::with_capacity(value.len());
        let mut hessian = Vec::with_capacity(value.len());
        for i in 0..value.len() {
            let j = i / lon;
            let (sin, cot) = (self.sin[j], self.cot[j]);
            gradient.push([s_t[i], s_p[i] / sin]);
            hessian.push([
                s_tt[i],
                (s_tp[i] - cot * s_p[i]) / sin,
                s_pp[i] / (sin * sin) + cot * s_t[i],
            ]);
        }
        Jet { value, gradient, hessian }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(Grid::new(4, 16).unwrap_err(), Error::UnsupportedDimension(4));
        assert!(matches!(Grid::new(2, 9), Err(Error::InvalidResolution { .. })));
        assert!(matches!(Grid::new(3, 6), Err(Error::InvalidResolution { .. })));
    }

    #[test]
    fn circle_nodes_and_weights() {
        let g = Grid::new(2, 8).unwrap();
        assert_eq!(g.len(), 8);
        for (i, u) in g.nodes().iter().enumerate() {
            let angle = 2.0 * PI * i as f64 / 8.0;
            assert!((u.0[0] - libm::cos(angle)).abs() < 1e-15);
            assert!((g.weights()[i] - 0.7853981634).abs() < 1e-10);
        }
    }

    #[test]
    fn grid_invariants_hold() {
        for (n, res) in [(2, 8), (2, 64), (3, 8), (3, 16), (3, 24)] {
            let g = Grid::new(n, res).unwrap();
            for u in g.nodes() {
                assert!((u.norm() - 1.0).abs() < 1e-14);
            }
            assert!(g.weights().iter().all(|w| *w > 0.0));
            let total: f64 = g.weights().iter().sum();
            assert!((total / sphere_area(n) - 1.0).abs() < 1e-12);
            let constant = vec![3.5; g.len()];
            let jet = g.jet(&constant).unwrap();
            let sup = jet
                .gradient
                .iter()
                .flat_map(|d| d.iter())
                .chain(jet.hessian.iter().flat_map(|h| h.iter()))
                .fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(sup < 1e-10, "n={n} res={res} sup={sup}");
            for i in 0..g.len() {
                let a = g.antipode(i);
                assert!((g.nodes()[a] + g.nodes()[i]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn quadrature_of_uz_squared_is_four_pi_over_three() {
        let g = Grid::new(3, 16).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|u| u.0[2] * u.0[2]).collect();
        assert!((g.quadrature(&f).unwrap() - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_rejects_length_mismatch() {
        let g = Grid::new(2, 8).unwrap();
        assert_eq!(g.quadrature(&[1.0; 7]), Err(Error::LengthMismatch { expected: 8, found: 7 }));
    }

    #[test]
    fn cosine_derivatives_on_circle() {
        let g = Grid::new(2, 64).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|u| u.0[0]).collect();
        let jet = g.jet(&f).unwrap();
        for (i, u) in g.nodes().iter().enumerate() {
            assert!((jet.gradient[i][0] + u.0[1]).abs() < 1e-10);
            assert!((jet.hessian[i][0] + u.0[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_functions_have_hessian_minus_value() {
        let g = Grid::new(3, 16).unwrap();
        let a = Point::new3(0.3, -0.2, 0.7);
        let f: Vec<f64> = g.nodes().iter().map(|u| a.dot(u)).collect();
        let jet = g.jet(&f).unwrap();
        for i in 0..g.len() {
            let h = jet.hessian[i];
            assert!((h[0] + f[i]).abs() < 1e-12);
            assert!(h[1].abs() < 1e-12);
            assert!((h[2] + f[i]).abs() < 1e-12);
            // gradient equals the tangential part of a
            let [e1, e2] = g.frame(i);
            assert!((jet.gradient[i][0] - a.dot(&e1)).abs() < 1e-12);
            assert!((jet.gradient[i][1] - a.dot(&e2)).abs() < 1e-12);
        }
    }

    #[test]
    fn degree_two_harmonic_is_laplace_eigenfunction() {
        let g = Grid::new(3, 16).unwrap();
        // x y + 0.5 (3 z² − 1) + x z is a degree-2 harmonic combination
        let f: Vec<f64> = g
            .nodes()
            .iter()
            .map(|u| u.0[0] * u.0[1] + 0.5 * (3.0 * u.0[2] * u.0[2] - 1.0) + u.0[0] * u.0[2])
            .collect();
        let lap = g.laplacian(&f).unwrap();
        let jet = g.jet(&f).unwrap();
        for i in 0..g.len() {
            assert!((lap[i] + 6.0 * f[i]).abs() < 1e-8 * (1.0 + f[i].abs()));
            let trace = jet.hessian[i][0] + jet.hessian[i][2];
            assert!((trace + 6.0 * f[i]).abs() < 1e-8 * (1.0 + f[i].abs()));
        }
    }

    #[test]
    fn sphere_hessian_of_smooth_field_matches_chart_formula() {
        // f = exp(z): ∇²f(e_θ,e_θ) = f_θθ, ∇²f(e_φ,e_φ) = cot θ f_θ, mixed term zero
        let g = Grid::new(3, 24).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|u| libm::exp(u.0[2])).collect();
        let jet = g.jet(&f).unwrap();
        for (i, u) in g.nodes().iter().enumerate() {
            let z = u.0[2];
            let s2 = 1.0 - z * z;
            let f_t = -libm::sqrt(s2) * libm::exp(z);
            let f_tt = (s2 - z) * libm::exp(z);
            assert!((jet.hessian[i][0] - f_tt).abs() < 1e-10);
            assert!(jet.hessian[i][1].abs() < 1e-10);
            assert!((jet.hessian[i][2] - z / libm::sqrt(s2) * f_t).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_error_drops_with_resolution() {
        let error = |res: usize| {
            let g = Grid::new(3, res).unwrap();
            let f: Vec<f64> = g
                .nodes()
                .iter()
                .map(|u| 1.0 / (1.3 + u.0[0] + 0.2 * u.0[2]))
                .collect();
            let jet = g.jet(&f).unwrap();
            // Laplacian of 1/(c + a·u) has the closed form below with a = (1, 0, 0.2)
            let a = Point::new3(1.0, 0.0, 0.2);
            let a2 = a.dot(&a);
            g.nodes()
                .iter()
                .enumerate()
                .map(|(i, u)| {
                    let t = a.dot(u);
                    let d = 1.3 + t;
                    let exact = 2.0 * (a2 - t * t) / (d * d * d) + 2.0 * t / (d * d);
                    let trace = jet.hessian[i][0] + jet.hessian[i][2];
                    (trace - exact).abs()
                })
                .fold(0.0f64, f64::max)
        };
        let (coarse, fine) = (error(16), error(32));
        assert!(fine * 10.0 <= coarse, "coarse {coarse} fine {fine}");
    }
}
