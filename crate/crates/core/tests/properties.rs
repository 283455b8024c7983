//! Property tests of the documented invariants on randomly generated bodies.

use std::sync::Arc;

use gaussflow_core::flow::{run_field, FlowConfig};
use gaussflow_core::functionals::{delta2, entropy, entropy_p, hausdorff, santalo_point, stability_gap};
use gaussflow_core::grid::{ball_volume, Derivative};
use gaussflow_core::{BodySpec, Grid, HarmonicTerm, Point, SupportField};
use proptest::prelude::*;

fn grid(n: usize, resolution: usize) -> Arc<Grid> {
    Arc::new(Grid::new(n, resolution).unwrap())
}

fn circle() -> Arc<Grid> {
    grid(2, 128)
}

fn sphere() -> Arc<Grid> {
    grid(3, 16)
}

/// A translated trigonometric perturbation of a ball, sampled on `grid`; rejected when
/// the random amplitude happens to break convexity.
fn body(n: usize) -> impl Strategy<Value = BodySpec> {
    let max_degree = if n == 2 { 6u32 } else { 4 };
    let term = (2..=max_degree, any::<i32>(), -1.0..1.0f64).prop_map(move |(degree, order, coefficient)| {
        let order = if n == 2 { -(order.rem_euclid(2)) } else { order.rem_euclid(2 * degree as i32 + 1) - degree as i32 };
        HarmonicTerm { degree, order, coefficient }
    });
    (0.7..1.5f64, prop::collection::vec(term, 1..4), 0.0..0.04f64, prop::collection::vec(-0.3..0.3f64, n)).prop_map(
        |(base_radius, terms, amplitude, offset)| {
            BodySpec::TrigPerturbation { base_radius, terms, amplitude: amplitude * base_radius }.translated(&offset)
        },
    )
}

fn sample(spec: &BodySpec, grid: &Arc<Grid>) -> Result<SupportField, TestCaseError> {
    SupportField::from_spec(spec, grid.clone()).map_err(|e| TestCaseError::reject(e.to_string()))
}

/// `∫_{S^{d−1}} Π x_i^{2a_i} = 2 Π Γ(a_i + ½) / Γ(Σ a_i + d/2)`.
fn even_moment(powers: &[u32]) -> f64 {
    let d = powers.len() as f64;
    let numerator: f64 = powers.iter().map(|&a| libm::tgamma(a as f64 + 0.5)).product();
    let total: u32 = powers.iter().sum();
    2.0 * numerator / libm::tgamma(total as f64 + 0.5 * d)
}

fn relative_close(a: f64, b: f64, tolerance: f64) -> bool {
    (a - b).abs() <= tolerance * b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn nodes_are_unit_and_weights_positive(n in 2usize..=3, raw in 4usize..40) {
        let resolution = if n == 2 { 4 * raw } else { 2 * raw };
        let g = grid(n, resolution);
        for u in g.nodes() {
            prop_assert!((u.dot(u).sqrt() - 1.0).abs() <= 1e-14);
        }
        prop_assert!(g.weights().iter().all(|w| *w > 0.0));
        let total: f64 = g.weights().iter().sum();
        let area = if n == 2 { 2.0 * std::f64::consts::PI } else { 4.0 * std::f64::consts::PI };
        prop_assert!(relative_close(total, area, 1e-12));
    }

    #[test]
    fn quadrature_integrates_even_monomials(n in 2usize..=3, a in 0u32..4, b in 0u32..4, c in 0u32..4) {
        let g = if n == 2 { circle() } else { sphere() };
        let powers: Vec<u32> = [a, b, c][..n].to_vec();
        prop_assume!(2 * powers.iter().sum::<u32>() as usize <= g.degree_limit());
        let values: Vec<f64> = g
            .nodes()
            .iter()
            .map(|u| powers.iter().enumerate().map(|(i, &p)| u.0[i].powi(2 * p as i32)).product())
            .collect();
        prop_assert!(relative_close(g.quadrature(&values).unwrap(), even_moment(&powers), 1e-12));
    }

    #[test]
    fn derivatives_ignore_added_constants(spec in body(2), constant in -5.0..5.0f64) {
        let g = circle();
        let field = sample(&spec, &g)?;
        let shifted: Vec<f64> = field.values().iter().map(|s| s + constant).collect();
        let (Derivative::Gradient(a), Derivative::Gradient(b)) =
            (g.differentiate(field.values(), 1).unwrap(), g.differentiate(&shifted, 1).unwrap())
        else {
            unreachable!()
        };
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x[0] - y[0]).abs() <= 1e-10 && (x[1] - y[1]).abs() <= 1e-10);
        }
    }

    #[test]
    fn constant_fields_have_zero_derivatives(n in 2usize..=3, constant in -5.0..5.0f64) {
        let g = if n == 2 { circle() } else { sphere() };
        let jet = g.jet(&vec![constant; g.len()]).unwrap();
        let worst = jet
            .gradient
            .iter()
            .flat_map(|d| d.iter())
            .chain(jet.hessian.iter().flat_map(|d| d.iter()))
            .fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(worst <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn homogeneity_under_scaling(n in 2usize..=3, spec in body(2), spec3 in body(3), factor in 0.3..3.0f64) {
        let (g, spec) = if n == 2 { (circle(), spec) } else { (sphere(), spec3) };
        let field = sample(&spec, &g)?;
        let scaled = field.scale(factor);
        let power = factor.powi(n as i32 - 1);
        for (a, b) in field.sigma().unwrap().iter().zip(scaled.sigma().unwrap()) {
            prop_assert!(relative_close(b, a * power, 1e-10));
        }
        prop_assert!(relative_close(scaled.diameter(), factor * field.diameter(), 1e-10));
        prop_assert!(relative_close(scaled.pinching_ratio().unwrap(), field.pinching_ratio().unwrap(), 1e-10));
        let (r, rs) = (field.radii().unwrap(), scaled.radii().unwrap());
        prop_assert!(relative_close(rs.inradius, factor * r.inradius, 1e-8));
        prop_assert!(relative_close(rs.circumradius, factor * r.circumradius, 1e-8));
        prop_assert!(relative_close(scaled.volume().unwrap(), factor.powi(n as i32) * field.volume().unwrap(), 1e-10));
    }

    #[test]
    fn normalized_bodies_have_diameter_at_least_two(n in 2usize..=3, spec in body(2), spec3 in body(3)) {
        let (g, spec) = if n == 2 { (circle(), spec) } else { (sphere(), spec3) };
        let normalized = sample(&spec, &g)?.normalize().unwrap();
        prop_assert!(relative_close(normalized.volume().unwrap(), ball_volume(n), 1e-12));
        prop_assert!(normalized.diameter() >= 2.0 - 1e-9);
    }

    #[test]
    fn support_is_positive_around_an_interior_origin(spec in body(2)) {
        let field = sample(&spec, &circle())?;
        let centred = field.translate(&field.steiner_point());
        prop_assert!(centred.values().iter().all(|s| *s > 0.0));
    }

    #[test]
    fn optimizers_are_translation_equivariant(n in 2usize..=3, spec in body(2), spec3 in body(3), shift in prop::collection::vec(-0.5..0.5f64, 3)) {
        let (g, spec) = if n == 2 { (circle(), spec) } else { (sphere(), spec3) };
        let field = sample(&spec, &g)?;
        let mut x = Point([0.0; 3]);
        x.0[..n].copy_from_slice(&shift[..n]);
        let moved = field.translate(&x);
        let check = |a: Point, b: Point| (0..3).all(|i| (a.0[i] - x.0[i] - b.0[i]).abs() <= 1e-9);
        let (e, em) = (entropy(&field).unwrap(), entropy(&moved).unwrap());
        prop_assert!((e.value - em.value).abs() <= 1e-9 && check(e.point, em.point));
        for p in 1..=n as i32 {
            let (a, b) = (entropy_p(&field, -p).unwrap(), entropy_p(&moved, -p).unwrap());
            prop_assert!(relative_close(b.value, a.value, 1e-9) && check(a.point, b.point));
        }
        prop_assert!(check(santalo_point(&field).unwrap(), santalo_point(&moved).unwrap()));
    }

    #[test]
    fn optimal_points_are_interior_and_gap_nonnegative(n in 2usize..=3, spec in body(2), spec3 in body(3)) {
        let (g, spec) = if n == 2 { (circle(), spec) } else { (sphere(), spec3) };
        let field = sample(&spec, &g)?.normalize().unwrap();
        prop_assert!(field.interior_margin(&entropy(&field).unwrap().point) > 0.0);
        for p in 1..=n as i32 {
            prop_assert!(field.interior_margin(&entropy_p(&field, -p).unwrap().point) > 0.0);
        }
        prop_assert!(stability_gap(&field).unwrap().gap >= 0.0);
    }

    #[test]
    fn metrics_are_symmetric_and_satisfy_the_triangle_inequality(a in body(2), b in body(2), c in body(2)) {
        let g = circle();
        let (a, b, c) = (sample(&a, &g)?, sample(&b, &g)?, sample(&c, &g)?);
        for metric in [hausdorff, delta2] {
            let (ab, ba) = (metric(&a, &b).unwrap(), metric(&b, &a).unwrap());
            prop_assert_eq!(ab, ba);
            prop_assert!(metric(&a, &a).unwrap() == 0.0);
            prop_assert!(metric(&a, &c).unwrap() <= ab + metric(&b, &c).unwrap() + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn flow_volume_decreases_at_the_sphere_area_rate(n in 2usize..=3, spec in body(2), spec3 in body(3)) {
        // the discrete volume law tightens like h²; 3D needs the default grid for 1e-3
        let (resolution, spec) = if n == 2 { (64, spec) } else { (48, spec3) };
        let field = sample(&spec, &grid(n, resolution))?;
        let config = FlowConfig { resolution: Some(resolution), snapshot_every: 5, stop_fraction: 0.2, diagnostics: Vec::new(), ..FlowConfig::new(n) };
        let trace = run_field(field, &config).unwrap();
        prop_assert!(trace.failure().is_none());
        let rate = n as f64 * ball_volume(n);
        for pair in trace.snapshots.windows(2) {
            prop_assert!(pair[1].t > pair[0].t && pair[1].volume < pair[0].volume);
        }
        for snap in &trace.snapshots {
            prop_assert!((snap.volume - trace.initial_volume + rate * snap.t).abs() <= 1e-3 * trace.initial_volume);
        }
    }
}

#[test]
fn round_bodies_are_balls() {
    let g = circle();
    let ball = SupportField::from_spec(&BodySpec::ball(1.3).translated(&[0.2, -0.4]), g.clone()).unwrap();
    assert!((ball.pinching_ratio().unwrap() - 1.0).abs() < 1e-10);
    let centre = ball.steiner_point();
    let reference = SupportField::from_spec(&BodySpec::ball(1.3), g).unwrap();
    assert!(hausdorff(&ball.translate(&centre), &reference).unwrap() < 1e-12);
}
