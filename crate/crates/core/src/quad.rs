//! Integration engines: sphere quadrature, radial Gauss-Legendre,
//! polar-Fubini body integrals, hyperplane-section integrals, and the
//! normalized section profile.
//!
//! Randomized engines are batch-replicated: every batch derives its
//! stream from `(seed, batch_index)`, so results are bit-identical for a
//! fixed config regardless of scheduling. Deterministic engines report a
//! two-resolution difference as their error estimate.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::bodies::StarBody;
use crate::densities::Density;
use crate::error::{Error, Result};
use crate::geom;
use crate::opt;

/// Quadrature engine selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Plain Monte Carlo (iid uniforms).
    Mc,
    /// Randomized quasi-Monte Carlo: low-discrepancy points (Weyl on
    /// spheres, Halton in section boxes) with per-replicate random shifts.
    Qmc,
    /// Deterministic product rule in polar angles (spheres up to S^3).
    ProductPolar,
    /// Deterministic one-dimensional grids wherever available.
    Grid1d,
}

/// All quadrature decisions in one place.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationConfig {
    pub method: Method,
    /// Total direction budget for sphere quadrature.
    pub sphere_samples: usize,
    /// Gauss-Legendre node count for radial integrals.
    pub radial_nodes: usize,
    /// Total point budget for section (slice) integrals.
    pub mc_samples: usize,
    pub seed: u64,
    /// Relative tolerance target; results exceeding it are flagged, never
    /// silently accepted.
    pub rel_tol_target: f64,
    /// Points per replicate batch.
    pub batch_size: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            method: Method::Qmc,
            sphere_samples: 16384,
            radial_nodes: 32,
            mc_samples: 65536,
            seed: 0,
            rel_tol_target: 0.005,
            batch_size: 1024,
        }
    }
}

impl IntegrationConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sphere_samples == 0 || self.radial_nodes == 0 || self.mc_samples == 0 {
            return Err(Error::invalid("integration budgets must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if !(self.rel_tol_target > 0.0 && self.rel_tol_target < 1.0) {
            return Err(Error::invalid("rel_tol_target must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: IntegrationConfig =
            serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Derived stream id so that distinct integrals inside one operation
    /// consume disjoint portions of the seed space.
    pub(crate) fn substream(&self, tag: u64) -> u64 {
        self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(tag)
    }

    pub(crate) fn batches(&self, total: usize) -> (usize, usize) {
        let b = (total / self.batch_size).clamp(2, 64);
        let per = total.div_ceil(b);
        (b, per)
    }

    /// Replicate layout for randomized QMC: few long replicates, because the
    /// low-discrepancy gain lives in the prefix length, while independent
    /// shifts only buy a sqrt factor. iid sampling keeps the finer layout.
    pub(crate) fn replicates(&self, total: usize, qmc: bool) -> (usize, usize) {
        if qmc {
            let b = 8.min(total.div_ceil(2)).max(2);
            (b, total.div_ceil(b))
        } else {
            self.batches(total)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ToleranceNotMet,
}

/// A quadrature result with its error estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ValueWithError {
    pub value: f64,
    pub std_error: f64,
    pub samples_used: u64,
    pub status: Status,
}

impl ValueWithError {
    pub fn exact(value: f64) -> Self {
        ValueWithError {
            value,
            std_error: 0.0,
            samples_used: 0,
            status: Status::Ok,
        }
    }

    pub(crate) fn flagged(value: f64, std_error: f64, samples_used: u64, rel_tol: f64) -> Self {
        let scale = value.abs().max(1e-300);
        let status = if std_error.is_finite() && std_error <= rel_tol * scale {
            Status::Ok
        } else {
            Status::ToleranceNotMet
        };
        ValueWithError {
            value,
            std_error,
            samples_used,
            status,
        }
    }

    pub fn ok(&self) -> bool {
        matches!(self.status, Status::Ok)
    }

    /// Worst-case status of `self` and `other`.
    pub fn join_status(&self, other: &ValueWithError) -> Status {
        if self.ok() && other.ok() {
            Status::Ok
        } else {
            Status::ToleranceNotMet
        }
    }
}

// ---------------------------------------------------------------------------
// Special-function constants
// ---------------------------------------------------------------------------

/// Surface area of the unit sphere S^{n-1}: 2 pi^{n/2} / Gamma(n/2).
pub fn surface_area(n: usize) -> f64 {
    let nf = n as f64;
    (std::f64::consts::LN_2 + (nf / 2.0) * std::f64::consts::PI.ln() - ln_gamma(nf / 2.0)).exp()
}

/// The constant c(n,p) with |x|^p = c(n,p) * int_{S^{n-1}} |(x,theta)|^p dtheta.
pub fn spherical_constant(n: usize, p: f64) -> f64 {
    assert!(n >= 1 && p > 0.0, "spherical_constant needs n >= 1, p > 0");
    let nf = n as f64;
    (ln_gamma((p + nf) / 2.0)
        - std::f64::consts::LN_2
        - (nf - 1.0) / 2.0 * std::f64::consts::PI.ln()
        - ln_gamma((p + 1.0) / 2.0))
    .exp()
}

// ---------------------------------------------------------------------------
// Gauss-Legendre
// ---------------------------------------------------------------------------

fn legendre_value_deriv(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn compute_gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Chebyshev initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_value_deriv(m, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_value_deriv(m, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
        let (_, d) = legendre_value_deriv(m, 0.0);
        weights[m / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// Cached Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(m: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(m)
        .or_insert_with(|| Arc::new(compute_gauss_legendre(m)))
        .clone()
}

// ---------------------------------------------------------------------------
// Direction generation
// ---------------------------------------------------------------------------

const QMC_PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn std_normal() -> &'static Normal {
    static N: OnceLock<Normal> = OnceLock::new();
    N.get_or_init(|| Normal::new(0.0, 1.0).unwrap())
}

fn unit_from_uniforms(u: &[f64], out: &mut [f64]) {
    let normal = std_normal();
    let mut norm2 = 0.0;
    for (o, &ui) in out.iter_mut().zip(u) {
        let v = ui.clamp(1e-15, 1.0 - 1e-15);
        *o = normal.inverse_cdf(v);
        norm2 += *o * *o;
    }
    if norm2 > 1e-24 {
        let inv = norm2.sqrt().recip();
        for o in out.iter_mut() {
            *o *= inv;
        }
        return;
    }
    // Degenerate (all coordinates at the median); cannot happen for
    // the shifted sequences we feed in, but keep a hard fallback.
    for o in out.iter_mut() {
        *o = 0.0;
    }
    out[0] = 1.0;
}

/// One batch of (unpaired) unit directions. `qmc` uses a shifted Weyl
/// sequence; otherwise iid sampling. Stream `stream` fixes the batch.
pub(crate) fn direction_batch(n: usize, count: usize, seed: u64, stream: u64, qmc: bool) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = vec![0.0; count * n];
    if qmc {
        let alphas: Vec<f64> = (0..n).map(|i| (QMC_PRIMES[i % 16] as f64).sqrt().fract()).collect();
        let shift: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut u = vec![0.0; n];
        for j in 0..count {
            for k in 0..n {
                u[k] = ((j + 1) as f64 * alphas[k] + shift[k]).fract();
            }
            unit_from_uniforms(&u, &mut out[j * n..(j + 1) * n]);
        }
    } else {
        let mut u = vec![0.0; n];
        for j in 0..count {
            for uk in u.iter_mut() {
                *uk = rng.random::<f64>();
            }
            unit_from_uniforms(&u, &mut out[j * n..(j + 1) * n]);
        }
    }
    out
}

/// First `count` Halton points (indices 1..=count) in `d` dimensions,
/// flattened row-major. Digit counters make each point O(digits) instead of
/// O(log) divisions, and the matrix is meant to be generated once per
/// integral and shared across randomization batches: rank-1 lattices lose
/// too much box discrepancy past d = 2, and the section quadrature feeds
/// indicator integrands where that is the whole error.
pub(crate) fn halton_matrix(d: usize, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count * d];
    for k in 0..d {
        let b = QMC_PRIMES[k % 16];
        let inv = 1.0 / b as f64;
        let mut digits: Vec<u64> = Vec::new();
        for j in 0..count {
            let mut i = 0;
            loop {
                if i == digits.len() {
                    digits.push(1);
                    break;
                }
                if digits[i] + 1 < b {
                    digits[i] += 1;
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            let mut x = 0.0;
            for &dg in digits.iter().rev() {
                x = (x + dg as f64) * inv;
            }
            out[j * d + k] = x;
        }
    }
    out
}


// ---------------------------------------------------------------------------
// Sphere integration
// ---------------------------------------------------------------------------

fn mean_and_se(batch_values: &[f64]) -> (f64, f64) {
    let b = batch_values.len() as f64;
    let mean = batch_values.iter().sum::<f64>() / b;
    if batch_values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = batch_values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

/// Unnormalized surface integral of `g` over S^{n-1} (total measure
/// `surface_area(n)`).
///
/// n = 1 sums the two endpoint directions exactly; n = 2 uses the
/// periodic trapezoid rule; n >= 3 uses randomized QMC (or MC) with
/// antipodal pairing, which integrates even functions without odd-part
/// noise.
pub fn sphere_integrate<G>(g: G, n: usize, cfg: &IntegrationConfig) -> ValueWithError
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    assert!(n >= 1);
    match n {
        1 => ValueWithError::exact(g(&[1.0]) + g(&[-1.0])),
        2 => circle_trapezoid(&g, cfg),
        _ => match cfg.method {
            Method::ProductPolar | Method::Grid1d => product_polar_integrate(&g, n, cfg),
            Method::Qmc | Method::Mc => sphere_random(&g, n, cfg, cfg.method == Method::Qmc),
        },
    }
}

fn circle_trapezoid<G: Fn(&[f64]) -> f64>(g: &G, cfg: &IntegrationConfig) -> ValueWithError {
    // Even sample count so the half-resolution comparison reuses points.
    let m = cfg.sphere_samples.max(8).next_multiple_of(2);
    let h = 2.0 * std::f64::consts::PI / m as f64;
    let mut full = 0.0;
    let mut half = 0.0;
    for j in 0..m {
        let a = h * j as f64;
        let v = g(&[a.cos(), a.sin()]);
        full += v;
        if j % 2 == 0 {
            half += v;
        }
    }
    full *= h;
    half *= 2.0 * h;
    ValueWithError::flagged(full, (full - half).abs(), m as u64, cfg.rel_tol_target)
}

/// Recursive polar product rule: Gauss-Legendre in each polar angle,
/// trapezoid in the final azimuth. Node count grows like m^{n-1}, so this
/// engine is restricted to n <= 4.
fn product_polar_points(n: usize, budget: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    // Polar-angle panels split at the equator: |t|^p-type factors along the
    // polar axis then sit at a panel endpoint, where Gauss-Legendre keeps a
    // fast algebraic rate instead of stalling on the interior kink.
    match n {
        3 => {
            let m = ((budget as f64 / 4.0).sqrt().ceil() as usize).max(4);
            let gl = gauss_legendre(m);
            let mpsi = 2 * m;
            let hpsi = 2.0 * std::f64::consts::PI / mpsi as f64;
            let mut pts = Vec::with_capacity(2 * m * mpsi);
            for (lo, hi) in [(-1.0f64, 0.0f64), (0.0, 1.0)] {
                let c = 0.5 * (lo + hi);
                let h = 0.5 * (hi - lo);
                for (u, w) in gl.0.iter().zip(&gl.1) {
                    let t = c + h * u;
                    let s = (1.0 - t * t).max(0.0).sqrt();
                    for j in 0..mpsi {
                        let psi = hpsi * j as f64;
                        pts.push((vec![s * psi.cos(), s * psi.sin(), t], w * h * hpsi));
                    }
                }
            }
            Ok(pts)
        }
        4 => {
            let m = ((budget as f64 / 8.0).cbrt().ceil() as usize).max(4);
            let gl = gauss_legendre(m);
            let inner = product_polar_points(3, 4 * m * m)?;
            // S^3: theta = (cos phi, sin phi * omega), d theta = sin^2 phi dphi dOmega,
            // phi in [0, pi] split at pi/2.
            let mut pts = Vec::with_capacity(2 * m * inner.len());
            for (lo, hi) in [(0.0f64, 0.5), (0.5, 1.0)] {
                let c = 0.5 * (lo + hi) * std::f64::consts::PI;
                let h = 0.5 * (hi - lo) * std::f64::consts::PI;
                for (u, w) in gl.0.iter().zip(&gl.1) {
                    let phi = c + h * u;
                    let jac = h * phi.sin() * phi.sin();
                    for (omega, wo) in &inner {
                        let mut x = Vec::with_capacity(4);
                        x.push(phi.cos());
                        for o in omega {
                            x.push(phi.sin() * o);
                        }
                        pts.push((x, w * jac * wo));
                    }
                }
            }
            Ok(pts)
        }
        _ => Err(Error::invalid(format!(
            "product_polar supports n in 2..=4, got n={n}"
        ))),
    }
}

fn product_polar_integrate<G>(g: &G, n: usize, cfg: &IntegrationConfig) -> ValueWithError
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let run = |budget: usize| -> f64 {
        let pts = product_polar_points(n, budget).expect("validated dimension");
        pts.iter().map(|(x, w)| w * g(x)).sum()
    };
    match product_polar_points(n, cfg.sphere_samples) {
        Ok(pts) => {
            let full: f64 = pts.par_iter().map(|(x, w)| w * g(x)).sum::<f64>();
            let coarse = run(cfg.sphere_samples / 4);
            ValueWithError::flagged(
                full,
                (full - coarse).abs(),
                pts.len() as u64,
                cfg.rel_tol_target,
            )
        }
        Err(_) => sphere_random(g, n, cfg, true),
    }
}

fn sphere_random<G>(g: &G, n: usize, cfg: &IntegrationConfig, qmc: bool) -> ValueWithError
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let (nb, _) = cfg.replicates(cfg.sphere_samples, qmc);
    let per = cfg.sphere_samples.div_ceil(2 * nb).max(1);
    let area = surface_area(n);
    let stream0 = cfg.substream(0x5048);
    let batch_means: Vec<f64> = (0..nb)
        .into_par_iter()
        .map(|b| {
            let dirs = direction_batch(n, per, cfg.seed, stream0.wrapping_add(b as u64), qmc);
            let mut acc = 0.0;
            let mut neg = vec![0.0; n];
            for j in 0..per {
                let th = &dirs[j * n..(j + 1) * n];
                for (nk, tk) in neg.iter_mut().zip(th) {
                    *nk = -tk;
                }
                acc += g(th) + g(&neg);
            }
            area * acc / (2.0 * per as f64)
        })
        .collect();
    let (mean, se) = mean_and_se(&batch_means);
    ValueWithError::flagged(mean, se, (2 * per * nb) as u64, cfg.rel_tol_target)
}

// ---------------------------------------------------------------------------
// Body integration (polar Fubini)
// ---------------------------------------------------------------------------

/// Radial factor: integral of r^{n-1} h(r theta) over [0, r_K(theta)] by
/// Gauss-Legendre. The radial extent is clipped to the bounding radius,
/// which is a no-op for bodies honoring their contract.
fn radial_integral<H>(body: &StarBody, theta: &[f64], h: &H, gl: &(Vec<f64>, Vec<f64>)) -> f64
where
    H: Fn(&[f64]) -> f64 + ?Sized,
{
    let n = body.dim();
    let gauge = body.gauge_unchecked(theta);
    let r = if gauge > 0.0 {
        (1.0 / gauge).min(body.bounding_radius())
    } else {
        body.bounding_radius()
    };
    if !(r > 0.0) {
        return 0.0;
    }
    let half = r / 2.0;
    let mut acc = 0.0;
    let mut x = vec![0.0; n];
    for (t, w) in gl.0.iter().zip(&gl.1) {
        let s = half * (t + 1.0);
        for (xk, tk) in x.iter_mut().zip(theta) {
            *xk = s * tk;
        }
        acc += w * s.powi(n as i32 - 1) * h(&x);
    }
    acc * half
}

/// Polar-Fubini integral of an arbitrary integrand over the body.
pub fn body_integrate_fn<H>(body: &StarBody, h: H, cfg: &IntegrationConfig) -> ValueWithError
where
    H: Fn(&[f64]) -> f64 + Sync,
{
    let gl = gauss_legendre(cfg.radial_nodes);
    sphere_integrate(
        |theta| radial_integral(body, theta, &h, &gl),
        body.dim(),
        cfg,
    )
}

/// Integral of the density over the body.
pub fn body_integrate(body: &StarBody, f: &Density, cfg: &IntegrationConfig) -> Result<ValueWithError> {
    Error::check_dim(body.dim(), f.dim())?;
    Ok(body_integrate_fn(body, |x| f.eval_unchecked(x), cfg))
}

// ---------------------------------------------------------------------------
// Section integration
// ---------------------------------------------------------------------------

/// Integral of `f` over the (n-1)-dimensional slice K n {(x,xi) = s}.
///
/// For n = 1 the slice is the single point s*xi and the integral is the
/// point evaluation under the counting measure.
pub fn section_integrate(
    body: &StarBody,
    f: &Density,
    xi: &[f64],
    s: f64,
    cfg: &IntegrationConfig,
) -> Result<ValueWithError> {
    Error::check_dim(body.dim(), xi.len())?;
    Error::check_dim(body.dim(), f.dim())?;
    if !geom::is_unit(xi, 1e-9) {
        return Err(Error::invalid("xi must be a unit vector"));
    }
    let n = body.dim();
    let r_bound = body.bounding_radius();
    if s.abs() > r_bound {
        return Ok(ValueWithError::exact(0.0));
    }
    if n == 1 {
        let x = [s * xi[0]];
        let inside = body.gauge_unchecked(&x) <= 1.0 + 1e-12;
        return Ok(ValueWithError::exact(if inside {
            f.eval_unchecked(&x)
        } else {
            0.0
        }));
    }
    let frame = section_frame(body, xi);
    section_integrate_framed(body, f, xi, &frame, s, cfg)
}

/// Boundary points r(theta_i) theta_i on a fixed deterministic direction
/// set, flattened. Support values against any vector follow by a max of
/// dot products, with no further gauge evaluations.
pub(crate) fn boundary_cloud(body: &StarBody, count: usize) -> Vec<f64> {
    let n = body.dim();
    let r_bound = body.bounding_radius();
    let mut pts = direction_batch(n, count, 0, 0x535550, true);
    for j in 0..count {
        let th = &mut pts[j * n..(j + 1) * n];
        let g = body.gauge_unchecked(th);
        let r = if g > 0.0 { (1.0 / g).min(r_bound) } else { r_bound };
        for t in th.iter_mut() {
            *t *= r;
        }
    }
    pts
}

/// Width of the body along `u`: max_theta r(theta) <theta, u>, seeded from
/// the boundary cloud and simplex-polished. Any overestimate only dilates
/// a sampling box, so the result is inflated slightly to absorb the polish
/// tolerance.
pub(crate) fn support_along(body: &StarBody, cloud: &[f64], u: &[f64]) -> f64 {
    let n = body.dim();
    let r_bound = body.bounding_radius();
    let extent = |theta: &[f64]| -> f64 {
        let g = body.gauge_unchecked(theta);
        let r = if g > 0.0 { (1.0 / g).min(r_bound) } else { r_bound };
        r * geom::dot(theta, u).abs()
    };
    let mut best = 0;
    let mut best_v = -1.0;
    for j in 0..cloud.len() / n {
        let v = geom::dot(&cloud[j * n..(j + 1) * n], u).abs();
        if v > best_v {
            best_v = v;
            best = j;
        }
    }
    let polished = geom::normalized(&cloud[best * n..(best + 1) * n])
        .map(|start| {
            let sc = opt::SearchConfig {
                max_iters: 120,
                ..Default::default()
            };
            let (_, neg) = opt::refine_minimum(|th: &[f64]| -extent(th), &start, &sc);
            -neg
        })
        .unwrap_or(best_v);
    polished.max(best_v) * (1.0 + 1e-9)
}

/// Hyperplane chart for slicing perpendicular to a direction: orthonormal
/// basis plus per-axis sampling extents.
pub(crate) struct SectionFrame {
    pub basis: Vec<Vec<f64>>,
    pub half: Vec<f64>,
}

/// Polished frame: per-axis extents from the body's support.
pub(crate) fn section_frame(body: &StarBody, xi: &[f64]) -> SectionFrame {
    let basis = geom::orthonormal_complement(xi);
    let cloud = boundary_cloud(body, 1024);
    let half = basis.iter().map(|b| support_along(body, &cloud, b)).collect();
    SectionFrame { basis, half }
}

/// Cheap frame for search loops: support estimated from a precomputed
/// boundary cloud only, dilated enough to cover the cloud's angular
/// resolution. Search objectives need the right argmax, not tight boxes.
pub(crate) fn frame_from_cloud(cloud: &[f64], n: usize, xi: &[f64]) -> SectionFrame {
    let basis = geom::orthonormal_complement(xi);
    let half = basis
        .iter()
        .map(|b| {
            let mut m = 0.0f64;
            for j in 0..cloud.len() / n {
                m = m.max(geom::dot(&cloud[j * n..(j + 1) * n], b).abs());
            }
            m * 1.02
        })
        .collect();
    SectionFrame { basis, half }
}

pub(crate) fn section_integrate_framed(
    body: &StarBody,
    f: &Density,
    xi: &[f64],
    frame: &SectionFrame,
    s: f64,
    cfg: &IntegrationConfig,
) -> Result<ValueWithError> {
    let n = body.dim();
    let d = n - 1;
    let r_bound = body.bounding_radius();
    // Slice points satisfy |y|^2 <= R^2 - s^2 in hyperplane coordinates;
    // the per-axis support bounds tighten that ball's bounding box further.
    let a = (r_bound * r_bound - s * s).max(0.0).sqrt();
    if a == 0.0 {
        return Ok(ValueWithError::exact(0.0));
    }
    let ext: Vec<f64> = frame.half.iter().map(|h| h.min(a)).collect();
    let vol = ext.iter().map(|h| 2.0 * h).product::<f64>();
    if vol <= 0.0 {
        return Ok(ValueWithError::exact(0.0));
    }
    let center: Vec<f64> = xi.iter().map(|c| c * s).collect();
    let qmc = !matches!(cfg.method, Method::Mc);
    let (nb, per) = cfg.replicates(cfg.mc_samples, qmc);
    let base_pts = if qmc { halton_matrix(d, per) } else { Vec::new() };
    let stream0 = cfg.substream(0x53_4543);
    let batch_means: Vec<f64> = (0..nb)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream0.wrapping_add(b as u64));
            let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let mut acc = 0.0;
            let mut x = vec![0.0; n];
            for j in 0..per {
                x.copy_from_slice(&center);
                for (k, bv) in frame.basis.iter().enumerate() {
                    let u = if qmc {
                        (base_pts[j * d + k] + shift[k]).fract()
                    } else {
                        rng.random::<f64>()
                    };
                    let y = ext[k] * (2.0 * u - 1.0);
                    for (xk, bk) in x.iter_mut().zip(bv) {
                        *xk += y * bk;
                    }
                }
                if body.gauge_unchecked(&x) <= 1.0 + 1e-12 {
                    acc += f.eval_unchecked(&x);
                }
            }
            vol * acc / per as f64
        })
        .collect();
    let (mean, se) = mean_and_se(&batch_means);
    Ok(ValueWithError::flagged(
        mean,
        se,
        (per * nb) as u64,
        cfg.rel_tol_target,
    ))
}

// ---------------------------------------------------------------------------
// Section profile g(t)
// ---------------------------------------------------------------------------

/// The normalized section profile t -> int_{K n {(x,xi)=t}} f / sup_s (same),
/// together with the supremum normalizer.
pub struct SectionProfile<'a> {
    body: &'a StarBody,
    density: &'a Density,
    xi: Vec<f64>,
    cfg: IntegrationConfig,
    /// Supremum of the unnormalized section integral over offsets.
    pub sup: ValueWithError,
    /// Offset achieving the supremum.
    pub sup_at: f64,
}

impl<'a> SectionProfile<'a> {
    /// Unnormalized section integral at offset `t`.
    pub fn section(&self, t: f64) -> Result<ValueWithError> {
        section_integrate(self.body, self.density, &self.xi, t, &self.cfg)
    }

    /// Normalized profile value g(t) in [0, 1] up to quadrature noise.
    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.section(t)?.value / self.sup.value)
    }

    pub fn support_radius(&self) -> f64 {
        self.body.bounding_radius()
    }
}

pub const SUP_GRID_DEFAULT: usize = 129;

/// Grid-then-polish search for sup_s of the section integral along `xi`.
///
/// Returns (offset, value at a fresh re-evaluation). The re-evaluation at
/// the winning offset uses a shifted stream and doubled budget so the
/// reported sup is not biased upward by selecting the noisiest grid cell.
pub(crate) fn section_sup_search(
    body: &StarBody,
    f: &Density,
    xi: &[f64],
    cfg: &IntegrationConfig,
    grid: usize,
) -> Result<(f64, ValueWithError)> {
    let r = body.bounding_radius();
    let grid = grid.max(3) | 1; // odd so t = 0 is always probed
    let n = body.dim();
    let frame = if n >= 2 {
        Some(section_frame(body, xi))
    } else {
        None
    };
    let eval_at = |t: f64| -> Result<f64> {
        match &frame {
            Some(fr) => Ok(section_integrate_framed(body, f, xi, fr, t, cfg)?.value),
            None => Ok(section_integrate(body, f, xi, t, cfg)?.value),
        }
    };
    let evals: Vec<(f64, f64)> = (0..grid)
        .map(|i| {
            let t = -r + 2.0 * r * i as f64 / (grid - 1) as f64;
            Ok((t, eval_at(t)?))
        })
        .collect::<Result<_>>()?;
    let (mut best_t, mut best_v) = evals
        .iter()
        .copied()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    // Golden-section polish inside the bracketing cell pair.
    let step = 2.0 * r / (grid - 1) as f64;
    let (mut lo, mut hi) = (best_t - step, best_t + step);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let val = |t: f64| -> Result<f64> { eval_at(t.clamp(-r, r)) };
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = val(x1)?;
    let mut f2 = val(x2)?;
    for _ in 0..24 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = val(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = val(x1)?;
        }
    }
    let cand = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    if cand.1 > best_v {
        best_t = cand.0.clamp(-r, r);
        best_v = cand.1;
    }
    let _ = best_v;
    // Fresh high-budget estimate at the winner.
    let mut final_cfg = cfg.clone();
    final_cfg.mc_samples *= 2;
    final_cfg.seed = cfg.seed.wrapping_add(0x524546);
    let sup = match &frame {
        Some(fr) => section_integrate_framed(body, f, xi, fr, best_t, &final_cfg)?,
        None => section_integrate(body, f, xi, best_t, &final_cfg)?,
    };
    Ok((best_t, sup))
}

/// Weighted moment int_K |(x,xi)|^p f and mass int_K f, both by Fubini over
/// the sections perpendicular to `xi`: 1-D Gauss-Legendre in the offset
/// against the section profile A(t), split at the |t|^p kink and clipped to
/// the body's true width along xi. Returns (moment, mass) sharing one set
/// of section evaluations.
pub(crate) fn section_profile_moments(
    body: &StarBody,
    f: &Density,
    p: f64,
    xi: &[f64],
    cfg: &IntegrationConfig,
) -> Result<(ValueWithError, ValueWithError)> {
    let n = body.dim();
    let cloud = boundary_cloud(body, 1024);
    let h = support_along(body, &cloud, xi);
    if !(h > 0.0) {
        return Ok((ValueWithError::exact(0.0), ValueWithError::exact(0.0)));
    }
    let frame = if n >= 2 {
        Some(section_frame(body, xi))
    } else {
        None
    };
    let m = cfg.radial_nodes.max(32);
    let gl = gauss_legendre(m);
    let mut moment = 0.0;
    let mut mass = 0.0;
    let mut d_moment = 0.0;
    let mut d_mass = 0.0;
    let mut samples = 0u64;
    for sign in [-1.0, 1.0] {
        for (node, w) in gl.0.iter().zip(&gl.1) {
            // map [-1,1] -> one side of the kink
            let t = sign * h * 0.5 * (node + 1.0);
            let wt = w * h * 0.5;
            let a = match &frame {
                Some(fr) => section_integrate_framed(body, f, xi, fr, t, cfg)?,
                None => section_integrate(body, f, xi, t, cfg)?,
            };
            moment += wt * t.abs().powf(p) * a.value;
            mass += wt * a.value;
            d_moment += wt * t.abs().powf(p) * a.std_error;
            d_mass += wt * a.std_error;
            samples += a.samples_used;
        }
    }
    Ok((
        ValueWithError::flagged(moment, d_moment, samples, cfg.rel_tol_target),
        ValueWithError::flagged(mass, d_mass, samples, cfg.rel_tol_target),
    ))
}

/// Builds the normalized profile for Lemma-style section analysis.
pub fn profile_g<'a>(
    body: &'a StarBody,
    f: &'a Density,
    xi: &[f64],
    cfg: &IntegrationConfig,
) -> Result<SectionProfile<'a>> {
    Error::check_dim(body.dim(), xi.len())?;
    let (sup_at, sup) = section_sup_search(body, f, xi, cfg, SUP_GRID_DEFAULT)?;
    if !(sup.value > 0.0) {
        return Err(Error::DegenerateDensity(
            "section profile has zero supremum".into(),
        ));
    }
    Ok(SectionProfile {
        body,
        density: f,
        xi: xi.to_vec(),
        cfg: cfg.clone(),
        sup,
        sup_at,
    })
}

// ---------------------------------------------------------------------------
// 1-D |t|^q moment integration (graded mesh near the kink)
// ---------------------------------------------------------------------------

/// Integral of |t|^q g(t) over [support.0, support.1] for q > -1.
///
/// Each side of 0 is covered by a geometric mesh refined toward the kink,
/// with fixed-order Gauss-Legendre per cell; the innermost sliver is
/// integrated analytically against a locally-constant g. `breakpoints`
/// mark known discontinuities of g and become mesh boundaries, so step
/// profiles integrate to machine accuracy.
pub fn integrate_abs_moment<G>(g: G, support: (f64, f64), breakpoints: &[f64], q: f64) -> f64
where
    G: Fn(f64) -> f64,
{
    assert!(q > -1.0, "|t|^q integrable near 0 requires q > -1");
    let (a, b) = support;
    assert!(a <= b);
    let gl = gauss_legendre(24);
    // Integrates |t|^q g over one cell [lo, hi] with 0 not in the interior.
    let cell = |lo: f64, hi: f64| -> f64 {
        let half = (hi - lo) / 2.0;
        let mid = (hi + lo) / 2.0;
        let mut acc = 0.0;
        for (t, w) in gl.0.iter().zip(&gl.1) {
            let x = mid + half * t;
            acc += w * x.abs().powf(q) * g(x);
        }
        acc * half
    };
    let oriented = |sgn: f64, lo_abs: f64, hi_abs: f64| -> f64 {
        if sgn > 0.0 {
            cell(lo_abs, hi_abs)
        } else {
            cell(-hi_abs, -lo_abs)
        }
    };

    let mut total = 0.0;
    for (len, sgn) in [((-a).max(0.0), -1.0), (b.max(0.0), 1.0)] {
        if len <= 0.0 {
            continue;
        }
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .map(|&t| t * sgn)
            .filter(|&t| t > 1e-300 && t < len)
            .collect();
        cuts.push(len);
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup();
        // Innermost segment (0, cuts[0]]: geometric mesh halving toward the
        // kink, then an analytic sliver against locally-constant g.
        let inner_hi = cuts[0];
        let sliver = inner_hi * 2.0f64.powi(-60);
        let mut hi = inner_hi;
        while hi > sliver * 1.5 {
            let lo = (hi / 2.0).max(sliver);
            total += oriented(sgn, lo, hi);
            hi = lo;
        }
        total += g(sgn * sliver / 2.0) * sliver.powf(q + 1.0) / (q + 1.0);
        // Remaining segments: subdivide so every cell keeps hi/lo <= 2
        // (distance to the |t|^q singularity controls GL convergence) and
        // width <= len/8.
        for win in cuts.windows(2) {
            let (seg_lo, seg_hi) = (win[0], win[1]);
            let mut lo = seg_lo;
            while lo < seg_hi {
                let hi = (2.0 * lo).min(lo + len / 8.0).min(seg_hi);
                total += oriented(sgn, lo, hi);
                lo = hi;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::StarBody;
    use crate::densities::Density;

    fn cfg() -> IntegrationConfig {
        IntegrationConfig {
            sphere_samples: 16384,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = gauss_legendre(8);
        // degree 15 is exact for 8 nodes
        for k in 0..=7 {
            let exact = 2.0 / (2.0 * k as f64 + 1.0);
            let got: f64 = gl
                .0
                .iter()
                .zip(&gl.1)
                .map(|(t, w)| w * t.powi(2 * k))
                .sum();
            assert!((got - exact).abs() < 1e-13, "k={k}: {got} vs {exact}");
        }
        let odd: f64 = gl.0.iter().zip(&gl.1).map(|(t, w)| w * t.powi(3)).sum();
        assert!(odd.abs() < 1e-15);
    }

    #[test]
    fn surface_areas_match_closed_forms() {
        assert!((surface_area(1) - 2.0).abs() < 1e-12);
        assert!((surface_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((surface_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn spherical_constant_hand_values() {
        // c(2,2) = 1/pi, c(3,2) = 3/(4 pi), c(2,1) = 1/4.
        assert!((spherical_constant(2, 2.0) - 1.0 / std::f64::consts::PI).abs() < 1e-13);
        assert!((spherical_constant(3, 2.0) - 3.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-13);
        assert!((spherical_constant(2, 1.0) - 0.25).abs() < 1e-13);
    }

    #[test]
    fn spherical_constant_product_identity_on_s2() {
        // Analytically c(3,p) * int |cos phi|^p dtheta = 1 for all p > 0.
        for p in [1.0, 2.0, 3.5, 8.0] {
            let integral = 4.0 * std::f64::consts::PI / (p + 1.0);
            assert!((spherical_constant(3, p) * integral - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_integrate_constants() {
        let c = cfg();
        let v2 = sphere_integrate(|_| 1.0, 2, &c);
        assert!((v2.value - 2.0 * std::f64::consts::PI).abs() < 1e-10);
        let v3 = sphere_integrate(|_| 1.0, 3, &c);
        assert!((v3.value - 4.0 * std::f64::consts::PI).abs() < 1e-6);
        let v1 = sphere_integrate(|_| 1.0, 1, &c);
        assert!((v1.value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_integrate_coordinate_second_moment() {
        // int_{S^2} theta_1^2 dtheta = 4 pi / 3 by symmetry.
        let c = cfg();
        let v = sphere_integrate(|t| t[0] * t[0], 3, &c);
        let exact = 4.0 * std::f64::consts::PI / 3.0;
        assert!(
            (v.value - exact).abs() / exact < 3e-3,
            "{} vs {exact}",
            v.value
        );
    }

    #[test]
    fn product_polar_matches_closed_forms() {
        let mut c = cfg();
        c.method = Method::ProductPolar;
        c.sphere_samples = 8192;
        let v = sphere_integrate(|t| t[0] * t[0], 3, &c);
        let exact = 4.0 * std::f64::consts::PI / 3.0;
        assert!((v.value - exact).abs() < 1e-10);
        let v4 = sphere_integrate(|_| 1.0, 4, &c);
        let exact4 = surface_area(4);
        assert!((v4.value - exact4).abs() / exact4 < 1e-10, "{} vs {exact4}", v4.value);
        // |t_1|^3.5 moment on S^3 against the spherical-constant identity
        let p = 3.5;
        let v_m = sphere_integrate(|t| t[0].abs().powf(p), 4, &c);
        let exact_m = 1.0 / spherical_constant(4, p);
        assert!(
            (v_m.value - exact_m).abs() / exact_m < 1e-6,
            "{} vs {exact_m}",
            v_m.value
        );
    }

    #[test]
    fn sphere_integrate_is_deterministic() {
        let c = cfg();
        let a = sphere_integrate(|t| (t[0] + 0.3 * t[1]).abs().powf(1.7), 4, &c);
        let b = sphere_integrate(|t| (t[0] + 0.3 * t[1]).abs().powf(1.7), 4, &c);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn body_integrate_unit_disk_area() {
        let disk = StarBody::lq_ball(2, 2.0, 1.0).unwrap();
        let f = Density::constant(2, 1.0).unwrap();
        let v = body_integrate(&disk, &f, &cfg()).unwrap();
        assert!((v.value - std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn body_integrate_radial_square_over_disk() {
        // int |x|^2 over unit disk = pi/2.
        let disk = StarBody::lq_ball(2, 2.0, 1.0).unwrap();
        let f = Density::radial_power(2, 2.0).unwrap();
        let v = body_integrate(&disk, &f, &cfg()).unwrap();
        assert!((v.value - std::f64::consts::PI / 2.0).abs() < 1e-8);
    }

    #[test]
    fn body_integrate_l1_ball_volume() {
        // |B_1^3| = 2^3/3! = 4/3.
        let b1 = StarBody::cross_polytope(3, 1.0).unwrap();
        let f = Density::constant(3, 1.0).unwrap();
        let mut c = cfg();
        c.sphere_samples = 65536;
        let v = body_integrate(&b1, &f, &c).unwrap();
        let exact = 4.0 / 3.0;
        assert!((v.value - exact).abs() / exact < 5e-3, "{}", v.value);
    }

    #[test]
    fn section_disk_chord() {
        let disk = StarBody::lq_ball(2, 2.0, 1.0).unwrap();
        let f = Density::constant(2, 1.0).unwrap();
        let v = section_integrate(&disk, &f, &[1.0, 0.0], 0.0, &cfg()).unwrap();
        assert!((v.value - 2.0).abs() < 2e-2, "{}", v.value);
        let v = section_integrate(&disk, &f, &[1.0, 0.0], 0.6, &cfg()).unwrap();
        assert!((v.value - 1.6).abs() < 2e-2, "{}", v.value);
    }

    #[test]
    fn section_ball_slice_area() {
        let ball = StarBody::lq_ball(3, 2.0, 1.0).unwrap();
        let f = Density::constant(3, 1.0).unwrap();
        for s in [0.0, 0.3, 0.8] {
            let v = section_integrate(&ball, &f, &[0.0, 0.0, 1.0], s, &cfg()).unwrap();
            let exact = std::f64::consts::PI * (1.0 - s * s);
            assert!((v.value - exact).abs() / exact < 2e-2, "s={s}: {}", v.value);
        }
    }

    #[test]
    fn section_beyond_bounding_radius_is_zero() {
        let ball = StarBody::lq_ball(3, 2.0, 1.0).unwrap();
        let f = Density::constant(3, 1.0).unwrap();
        let v = section_integrate(&ball, &f, &[0.0, 0.0, 1.0], 1.5, &cfg()).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.std_error, 0.0);
    }

    #[test]
    fn section_dim_one_point_mass() {
        let seg = StarBody::cube(1, 2.0).unwrap(); // [-2, 2]
        let f = Density::gaussian(1, 1.0).unwrap();
        let v = section_integrate(&seg, &f, &[1.0], 1.0, &cfg()).unwrap();
        assert!((v.value - (-0.5f64).exp()).abs() < 1e-15);
        let v = section_integrate(&seg, &f, &[1.0], 3.0, &cfg()).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn profile_of_cube_is_flat() {
        let cube = StarBody::cube(2, 0.5).unwrap();
        let f = Density::constant(2, 1.0).unwrap();
        let prof = profile_g(&cube, &f, &[1.0, 0.0], &cfg()).unwrap();
        assert!((prof.sup.value - 1.0).abs() < 2e-2, "{}", prof.sup.value);
        for t in [-0.4, 0.0, 0.3] {
            let g = prof.eval(t).unwrap();
            assert!((g - 1.0).abs() < 3e-2, "t={t}: {g}");
        }
    }

    #[test]
    fn profile_of_disk_is_semicircle() {
        let disk = StarBody::lq_ball(2, 2.0, 1.0).unwrap();
        let f = Density::constant(2, 1.0).unwrap();
        let prof = profile_g(&disk, &f, &[1.0, 0.0], &cfg()).unwrap();
        assert!((prof.sup.value - 2.0).abs() < 3e-2);
        assert!(prof.sup_at.abs() < 0.05);
        let g = prof.eval(0.5).unwrap();
        assert!((g - (1.0f64 - 0.25).sqrt()).abs() < 3e-2, "{g}");
    }

    #[test]
    fn abs_moment_indicator_closed_form() {
        // int_{-A}^{A} |t|^q dt = 2 A^{q+1} / (q+1)
        for q in [-0.5, 0.0, 0.5, 1.0, 3.0, 7.5] {
            for a in [0.5, 1.0, 2.3] {
                let got = integrate_abs_moment(|_| 1.0, (-a, a), &[], q);
                let exact = 2.0 * a.powf(q + 1.0) / (q + 1.0);
                assert!(
                    (got - exact).abs() / exact < 1e-12,
                    "q={q} a={a}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn abs_moment_respects_breakpoints() {
        // step: 1 on [-1,0], 0.25 on (0, 2]
        let g = |t: f64| if t <= 0.0 { 1.0 } else { 0.25 };
        let got = integrate_abs_moment(g, (-1.0, 2.0), &[0.0], 1.0);
        let exact = 0.5 + 0.25 * 2.0; // int_{-1}^{0}|t| + 0.25 int_0^2 t
        assert!((got - exact).abs() < 1e-12, "{got} vs {exact}");
    }

    #[test]
    fn abs_moment_tent_hand_values() {
        let tent = |t: f64| (1.0 - t.abs()).max(0.0);
        let q0 = integrate_abs_moment(tent, (-1.0, 1.0), &[], 0.0);
        assert!((q0 - 1.0).abs() < 1e-12);
        let q1 = integrate_abs_moment(tent, (-1.0, 1.0), &[], 1.0);
        assert!((q1 - 1.0 / 3.0).abs() < 1e-12);
    }
}
