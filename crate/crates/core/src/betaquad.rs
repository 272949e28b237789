//! Composite Gauss–Legendre nodes carrying the beta density in log form.
//!
//! Panels that touch an endpoint where the density diverges (shape < 1) use
//! `θ = end ± L·s^(1/shape)`, under which `(θ ∓ m)^(shape−1) dθ` has no
//! singular factor left. Endpoint gaps are tracked separately from `θ` so
//! that `ln(θ + m)` stays accurate when `θ` is within an ulp of `−m`.

use crate::prior::BetaMixturePrior;
use crate::quadrature::GaussLegendre;

/// A node with `ln(quadrature weight · g(θ))`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BetaNode {
    pub theta: f64,
    pub ln_weight: f64,
}

/// Nodes for `∫_lo^hi f(θ) g(θ) dθ` with `−m ≤ lo < hi ≤ m`.
///
/// `breaks` are extra interior split points (ignored if outside `(lo, hi)`);
/// pieces wider than `max_panel` are subdivided evenly.
pub(crate) fn beta_nodes(
    prior: &BetaMixturePrior,
    gl: &GaussLegendre,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    max_panel: f64,
) -> Vec<BetaNode> {
    let m = prior.m();
    let lo = lo.max(-m);
    let hi = hi.min(m);
    if !(hi > lo) {
        return Vec::new();
    }
    let mut cuts = vec![lo];
    let mut interior: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    cuts.extend(interior);
    cuts.push(hi);

    let mut panels = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = ((b - a) / max_panel).ceil().max(1.0) as usize;
        let step = (b - a) / pieces as f64;
        for i in 0..pieces {
            let pa = a + step * i as f64;
            let pb = if i + 1 == pieces { b } else { a + step * (i + 1) as f64 };
            panels.push((pa, pb));
        }
    }

    let ln_norm = (prior.a() + prior.b() - 1.0) * (2.0 * m).ln() + statrs::function::beta::ln_beta(prior.a(), prior.b());
    let ln_g = |left_gap: f64, right_gap: f64| -> f64 {
        (prior.a() - 1.0) * left_gap.ln() + (prior.b() - 1.0) * right_gap.ln() - ln_norm
    };

    let last = panels.len() - 1;
    let mut nodes = Vec::with_capacity(panels.len() * gl.order());
    for (idx, &(pa, pb)) in panels.iter().enumerate() {
        let width = pb - pa;
        let left_singular = idx == 0 && pa == -m && prior.a() < 1.0;
        let right_singular = idx == last && pb == m && prior.b() < 1.0;
        if left_singular && !right_singular {
            let inv = 1.0 / prior.a();
            for (s, w) in gl.mapped(0.0, 1.0) {
                let left_gap = width * s.powf(inv);
                let theta = -m + left_gap;
                let right_gap = 2.0 * m - left_gap;
                // dθ/ds = width/a · s^(1/a − 1)
                let ln_jac = (width * inv).ln() + (inv - 1.0) * s.ln();
                nodes.push(BetaNode {
                    theta,
                    ln_weight: w.ln() + ln_jac + ln_g(left_gap, right_gap),
                });
            }
        } else if right_singular && !left_singular {
            let inv = 1.0 / prior.b();
            for (s, w) in gl.mapped(0.0, 1.0) {
                let right_gap = width * s.powf(inv);
                let theta = m - right_gap;
                let left_gap = 2.0 * m - right_gap;
                let ln_jac = (width * inv).ln() + (inv - 1.0) * s.ln();
                nodes.push(BetaNode {
                    theta,
                    ln_weight: w.ln() + ln_jac + ln_g(left_gap, right_gap),
                });
            }
        } else if left_singular && right_singular {
            // single panel spanning [−m, m]: split it at the midpoint
            let mid = 0.5 * (pa + pb);
            nodes.extend(beta_nodes(prior, gl, pa, mid, &[], f64::INFINITY));
            nodes.extend(beta_nodes(prior, gl, mid, pb, &[], f64::INFINITY));
        } else {
            for (theta, w) in gl.mapped(pa, pb) {
                nodes.push(BetaNode {
                    theta,
                    ln_weight: w.ln() + ln_g(theta + m, m - theta),
                });
            }
        }
    }
    nodes
}
