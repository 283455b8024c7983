//! Gauss–Legendre rules and associated Legendre function tables.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Nodes (descending in `[-1, 1]`) and weights of the `count`-point Gauss–Legendre rule.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    for i in 0..(count + 1) / 2 {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (count as f64 + 0.5));
        let mut derivative = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(count, x);
            derivative = dp;
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(count, x);
        if dp != 0.0 {
            derivative = dp;
        }
        let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        nodes[i] = x;
        nodes[count - 1 - i] = -x;
        weights[i] = w;
        weights[count - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fills `out[l] = P_l(x)` for `l < out.len()` (unnormalized Legendre polynomials).
pub fn legendre_polynomials(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for l in 2..out.len() {
        let lf = l as f64;
        out[l] = ((2.0 * lf - 1.0) * x * out[l - 1] - (lf - 1.0) * out[l - 2]) / lf;
    }
}

/// Associated Legendre functions normalized to `∫_{-1}^{1} P̄_lm(x)² dx = 1`, with their
/// first and second colatitude derivatives, sampled at a fixed set of colatitudes.
///
/// Layout: `value[offset(m, l) * rings + j]` for `0 ≤ m ≤ l < degree_limit`.
#[derive(Clone, Debug)]
pub(crate) struct AssociatedTable {
    pub rings: usize,
    pub value: Vec<f64>,
    pub d_theta: Vec<f64>,
    pub d2_theta: Vec<f64>,
    offsets: Vec<usize>,
}

impl AssociatedTable {
    pub fn new(degree_limit: usize, colatitudes: &[f64]) -> Self {
        let rings = colatitudes.len();
        let mut offsets = Vec::with_capacity(degree_limit + 1);
        let mut total = 0;
        for m in 0..degree_limit {
            offsets.push(total);
            total += degree_limit - m;
        }
        offsets.push(total);
        let mut value = vec![0.0; total * rings];
        let mut d_theta = vec![0.0; total * rings];
        let mut d2_theta = vec![0.0; total * rings];
        let mut column = vec![0.0; degree_limit];
        for (j, &theta) in colatitudes.iter().enumerate() {
            let x = libm::cos(theta);
            let sin = libm::sin(theta);
            let cot = x / sin;
            let mut diagonal = libm::sqrt(0.5);
            for m in 0..degree_limit {
                if m > 0 {
                    let mf = m as f64;
                    diagonal *= libm::sqrt((2.0 * mf + 1.0) / (2.0 * mf)) * sin;
                }
                // column[l] = P̄_lm for l in m..degree_limit
                column[m] = diagonal;
                if m + 1 < degree_limit {
                    column[m + 1] = libm::sqrt(2.0 * m as f64 + 3.0) * x * diagonal;
                }
                for l in m + 2..degree_limit {
                    let lf = l as f64;
                    let mf = m as f64;
                    let a = libm::sqrt((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf));
                    let b = libm::sqrt(
                        ((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0),
                    );
                    column[l] = a * (x * column[l - 1] - b * column[l - 2]);
                }
                for l in m..degree_limit {
                    let lf = l as f64;
                    let mf = m as f64;
                    let below = if l > m { column[l - 1] } else { 0.0 };
                    let c = if l > m {
                        libm::sqrt((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0))
                    } else {
                        0.0
                    };
                    let p = column[l];
                    let dp = (lf * x * p - c * below) / sin;
                    let d2p = -cot * dp - (lf * (lf + 1.0) - mf * mf / (sin * sin)) * p;
                    let idx = (offsets[m] + l - m) * rings + j;
                    value[idx] = p;
                    d_theta[idx] = dp;
                    d2_theta[idx] = d2p;
                }
            }
        }
        AssociatedTable { rings, value, d_theta, d2_theta, offsets }
    }

    /// Start of the `(m, l)` row in the flattened tables.
    #[inline]
    pub fn row(&self, m: usize, l: usize) -> usize {
        (self.offsets[m] + l - m) * self.rings
    }
}
