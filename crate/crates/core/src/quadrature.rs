//! Gauss–Legendre and Gauss–Hermite rules.
//!
//! Nodes are found by Newton iteration on the three-term recurrences, which
//! is accurate to a few ulps for the orders used here (up to a few hundred).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::param("quadrature order must be positive"));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            // Tricomi initial guess, descending from the right end.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        self.mapped(lo, hi).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Hermite rule for expectations under the standard normal:
/// `E[f(Z)] ≈ Σ w_i f(x_i)`, with `Σ w_i = 1`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::param("quadrature order must be positive"));
        }
        let n = order;
        let nf = n as f64;
        // Physicists' nodes (weight e^{-x^2}) via the orthonormal recurrence.
        let pim4 = PI.powf(-0.25);
        let mut xs = vec![0.0; n];
        let mut ws = vec![0.0; n];
        let m = n.div_ceil(2);
        let mut z = 0.0_f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * xs[0],
                3 => 1.91 * z - 0.91 * xs[1],
                _ => 2.0 * z - xs[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..200 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() < 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            xs[i] = z;
            xs[n - 1 - i] = -z;
            ws[i] = 2.0 / (pp * pp);
            ws[n - 1 - i] = ws[i];
        }
        if n % 2 == 1 {
            xs[n / 2] = 0.0;
        }
        let nodes: Vec<f64> = xs.iter().rev().map(|x| x * std::f64::consts::SQRT_2).collect();
        let scale = 1.0 / PI.sqrt();
        let weights: Vec<f64> = ws.iter().rev().map(|w| w * scale).collect();
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(Z)]` for `Z ~ N(0, 1)`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(10).unwrap();
        // degree 19 is the limit for 10 nodes
        let exact = 2.0 / 19.0;
        assert_abs_diff_eq!(gl.integrate(-1.0, 1.0, |x| x.powi(18)), exact, epsilon = 1e-14);
        assert_abs_diff_eq!(gl.integrate(0.0, 2.0, |x| x.powi(3)), 4.0, epsilon = 1e-13);
        assert_abs_diff_eq!(gl.weights().iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn legendre_high_order_is_stable() {
        for order in [16, 64, 128, 256] {
            let gl = GaussLegendre::new(order).unwrap();
            assert_abs_diff_eq!(gl.integrate(0.0, PI, f64::sin), 2.0, epsilon = 1e-13);
            assert!(gl.nodes().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn hermite_reproduces_normal_moments() {
        for order in [20, 61, 120] {
            let gh = GaussHermite::new(order).unwrap();
            assert_abs_diff_eq!(gh.expect(|_| 1.0), 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(gh.expect(|x| x * x), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(gh.expect(|x| x.powi(4)), 3.0, epsilon = 1e-11);
            assert_abs_diff_eq!(gh.expect(|x| x.powi(6)), 15.0, epsilon = 1e-10);
            assert_abs_diff_eq!(gh.expect(|x| x.cos()), (-0.5f64).exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_order_rejected() {
        assert!(GaussLegendre::new(0).is_err());
        assert!(GaussHermite::new(0).is_err());
    }
}
