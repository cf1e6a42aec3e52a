//! Probability that a colliding frame carries enough power to destroy the
//! desired frame, averaged over SF pairs, fading and both EDs' positions.
//!
//! For one SF pair with threshold `xi`, conditional on the desired frame's
//! fading `a` and distance `d0` and the interferer's distance `u`, the loss
//! probability is `Q(m, m a (d0/u)^-alpha / (xi omega))`: the interferer's
//! gamma-distributed fading has to exceed the margin. The unconditional
//! factor averages this over `a ~ Gamma`, `d0, u ~ f_D` and all SF pairs
//! with equal weight.

use crate::channel::{CaptureMatrix, FadingModel, Geometry};
use crate::error::{Error, Result};

use super::quadrature::{gauss_laguerre, gauss_legendre, Rule};
use super::special::{regularized_lower_gamma, regularized_upper_gamma};

/// Node-doubling controls for the triple integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureControls {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureControls {
    fn default() -> Self {
        Self {
            initial_nodes: 16,
            max_nodes: 256,
            rel_tol: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossFactor {
    pub value: f64,
    /// Nodes per axis at convergence.
    pub nodes: usize,
    /// Relative change between the last two refinements.
    pub rel_change: f64,
}

/// `P(A' > c A)` for iid unit-mean Gamma(m) fading `A, A'`, by Laguerre
/// quadrature over whichever variable keeps the integrand slowly varying:
/// `E[Q(m, c T)]` for `c <= 1`, `E[P(m, T' / c)]` otherwise.
fn fading_tail(m: f64, c: f64, laguerre: &Rule) -> f64 {
    let nodes = laguerre.nodes.iter().zip(&laguerre.weights);
    if c <= 1.0 {
        nodes.map(|(&t, &wt)| wt * regularized_upper_gamma(m, c * t)).sum()
    } else {
        nodes.map(|(&t, &wt)| wt * regularized_lower_gamma(m, t / c)).sum()
    }
}

/// Loss probability for one SF pair at a fixed node count.
fn pair_loss(xi: f64, g: &Geometry, f: &FadingModel, legendre: &Rule, laguerre: &Rule) -> f64 {
    let (h, w) = (g.altitude_m, g.max_distance());
    let d_nodes: Vec<(f64, f64)> = legendre
        .on_interval(h, w)
        .map(|(x, wt)| (x, wt * g.distance_pdf(x)))
        .collect();
    let mut total = 0.0;
    for &(d0, w0) in &d_nodes {
        for &(u, wu) in &d_nodes {
            // margin the interferer's normalised fading must exceed, per unit t
            let c = (d0 / u).powf(-g.path_loss_exp) / xi;
            total += w0 * wu * fading_tail(f.m, c, laguerre);
        }
    }
    total
}

fn loss_at(n: usize, xi: &CaptureMatrix, g: &Geometry, f: &FadingModel) -> f64 {
    let legendre = gauss_legendre(n);
    let laguerre = gauss_laguerre(n, f.m - 1.0);
    let k = xi.len();
    let mut sum = 0.0;
    for a in 0..k {
        for b in 0..k {
            sum += pair_loss(xi.get(a, b), g, f, &legendre, &laguerre);
        }
    }
    (sum / (k * k) as f64).clamp(0.0, 1.0)
}

/// Loss factor with Nakagami-m fading on both links, by Gauss-Legendre on
/// the two distance axes and generalized Gauss-Laguerre on the fading axis.
/// Node counts double until the relative change drops below the tolerance.
pub fn interferer_loss_factor(
    xi: &CaptureMatrix,
    g: &Geometry,
    f: &FadingModel,
    ctl: &QuadratureControls,
) -> Result<LossFactor> {
    g.validate()?;
    f.validate()?;
    let mut n = ctl.initial_nodes.max(2);
    let mut prev = loss_at(n, xi, g, f);
    let mut rel_change = f64::INFINITY;
    while n * 2 <= ctl.max_nodes {
        n *= 2;
        let next = loss_at(n, xi, g, f);
        rel_change = if next == 0.0 && prev == 0.0 {
            0.0
        } else {
            (next - prev).abs() / next.abs().max(prev.abs())
        };
        prev = next;
        if rel_change < ctl.rel_tol {
            return Ok(LossFactor {
                value: next,
                nodes: n,
                rel_change,
            });
        }
    }
    Err(Error::QuadratureNonConvergence {
        achieved: rel_change,
        target: ctl.rel_tol,
        nodes: n,
    })
}

/// Conditional loss probability without fading: the interferer at distance
/// `u` destroys the desired frame iff the desired ED is farther than
/// `xi^{-1/alpha} u`.
pub fn nofading_conditional_loss(xi: f64, u: f64, g: &Geometry) -> f64 {
    1.0 - g.distance_cdf(xi.powf(-1.0 / g.path_loss_exp) * u)
}

/// `∫_h^w loss(u) f_D(u) du` for one SF pair, by Gauss-Legendre on the
/// pieces where the integrand is polynomial (exact up to rounding).
pub fn nofading_pair_integral(xi: f64, g: &Geometry) -> f64 {
    let (h, w) = (g.altitude_m, g.max_distance());
    let t = xi.powf(1.0 / g.path_loss_exp);
    let mut cuts = vec![h, w];
    cuts.extend([t * h, t * w].into_iter().filter(|&c| c > h && c < w));
    cuts.sort_by(f64::total_cmp);
    let rule = gauss_legendre(16);
    cuts.windows(2)
        .map(|p| rule.integrate(p[0], p[1], |u| nofading_conditional_loss(xi, u, g) * g.distance_pdf(u)))
        .sum()
}

/// Closed form of [`nofading_pair_integral`].
pub fn nofading_pair_closed_form(xi: f64, g: &Geometry) -> f64 {
    let h = g.altitude_m;
    let r2 = g.radius_m * g.radius_m;
    let w = g.max_distance();
    let t = xi.powf(1.0 / g.path_loss_exp);
    let (lo, hi) = (t * h, t * w);
    let c = w * w / (r2 * r2);
    if hi <= h {
        0.0
    } else if t <= 1.0 {
        (hi * hi - h * h) * c - (hi.powi(4) - h.powi(4)) / (2.0 * t * t * r2 * r2)
    } else if lo < w {
        (lo * lo - h * h) / r2 + (w * w - lo * lo) * c - (w.powi(4) - lo.powi(4)) / (2.0 * t * t * r2 * r2)
    } else {
        1.0
    }
}

/// Four-branch expression for the no-fading pair integral exactly as it is
/// commonly quoted, kept only as a cross-check. Compared with
/// [`nofading_pair_closed_form`]:
/// - branch 2 (h/w < t < 1) lacks the `1/(2 R^4)` factor on the quartic term;
/// - branch 3 (1 < t < w/h) uses `(w^2 - h^2) c` where `(w^2 - a^2) c` is
///   needed and `1/(2 R^2)` where `1/(2 R^4)` is needed.
///
/// Branches 1 and 4 agree.
pub fn nofading_pair_literal(xi: f64, g: &Geometry) -> f64 {
    let h = g.altitude_m;
    let r2 = g.radius_m * g.radius_m;
    let w = g.max_distance();
    let t = xi.powf(1.0 / g.path_loss_exp);
    let a = t * h;
    let b = t * w;
    let c = 1.0 / r2 + h * h / (r2 * r2);
    let inv_t2 = xi.powf(-2.0 / g.path_loss_exp);
    if t < h / w {
        0.0
    } else if t < 1.0 {
        (b * b - h * h) * c - inv_t2 * (b.powi(4) - h.powi(4))
    } else if t < w / h {
        (a * a - h * h) / r2 + (w * w - h * h) * c - inv_t2 / (2.0 * r2) * (w.powi(4) - a.powi(4))
    } else {
        1.0
    }
}

/// Which evaluation of the per-pair no-fading integral to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NoFadingMode {
    #[default]
    Quadrature,
    ClosedForm,
    Literal,
}

/// Loss factor with fading ignored on both links, averaged over SF pairs.
pub fn interferer_loss_factor_nofading(xi: &CaptureMatrix, g: &Geometry, mode: NoFadingMode) -> Result<f64> {
    g.validate()?;
    let k = xi.len();
    let mut sum = 0.0;
    for a in 0..k {
        for b in 0..k {
            let x = xi.get(a, b);
            sum += match mode {
                NoFadingMode::Quadrature => nofading_pair_integral(x, g),
                NoFadingMode::ClosedForm => nofading_pair_closed_form(x, g),
                NoFadingMode::Literal => nofading_pair_literal(x, g),
            };
        }
    }
    Ok(sum / (k * k) as f64)
}
