//! Containment margins, distance-type upper bounds (outer volume ratio and
//! homothety-restricted Banach-Mazur), the radial Jensen inequality, and the
//! moment-domination mass transfer check.

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::StarBody;
use crate::densities::{Density, DirectionMeasure};
use crate::error::{Error, Result};
use crate::geom;
use crate::moments::{self, BodyCloud};
use crate::opt::{self, SearchConfig};
use crate::quad::{self, IntegrationConfig, ValueWithError};

/// A body paired with the direction measure certifying its membership in
/// the class the moment bounds quantify over. Constructed through `new`,
/// which cross-checks the two representations.
#[derive(Debug, Clone)]
pub struct Witness {
    pub body: StarBody,
    pub measure: DirectionMeasure,
    pub tag: String,
}

const WITNESS_CHECK_DIRS: usize = 256;
const WITNESS_TOL: f64 = 1e-6;

impl Witness {
    /// Pair a body with its measure. The measure-induced gauge must match
    /// the body's gauge to 1e-6 relative on 256 sampled directions.
    pub fn new(body: StarBody, measure: DirectionMeasure, tag: impl Into<String>) -> Result<Witness> {
        Error::check_dim(body.dim(), measure.dim())?;
        let n = body.dim();
        let tag = tag.into();
        let dirs = if n == 1 {
            vec![1.0, -1.0]
        } else {
            quad::direction_batch(n, WITNESS_CHECK_DIRS, 0, 0x57495453, true)
        };
        for theta in dirs.chunks_exact(n) {
            let from_measure = measure.gauge(theta)?;
            let from_body = body.gauge_unchecked(theta);
            let scale = from_body.abs().max(1e-300);
            if (from_measure - from_body).abs() / scale > WITNESS_TOL {
                return Err(Error::WitnessRejected(format!(
                    "witness `{tag}`: measure gauge {from_measure} vs body gauge {from_body} at a sampled direction"
                )));
            }
        }
        Ok(Witness { body, measure, tag })
    }

    /// The exponent the measure certifies.
    pub fn p(&self) -> f64 {
        self.measure.p()
    }

    /// The lq ball of radius `scale`, self-certified at p = q.
    pub fn lp_ball(n: usize, q: f64, scale: f64) -> Result<Witness> {
        Witness::new(
            StarBody::lq_ball(n, q, scale)?,
            DirectionMeasure::lp_ball(n, q, scale)?,
            format!("l{q}-ball(r={scale})"),
        )
    }

    /// Euclidean ball of a given radius; certifies any p >= 1.
    pub fn euclidean_ball(n: usize, p: f64, radius: f64) -> Result<Witness> {
        Witness::new(
            StarBody::lq_ball(n, 2.0, radius)?,
            DirectionMeasure::euclidean_ball(n, p, radius)?,
            format!("ball(r={radius},p={p})"),
        )
    }

    /// Axis-aligned ellipsoid; certifies any p >= 1.
    pub fn ellipsoid(axes: &[f64], p: f64) -> Result<Witness> {
        Witness::new(
            StarBody::ellipsoid(axes)?,
            DirectionMeasure::ellipsoid(axes, p)?,
            format!("ellipsoid(axes={axes:?},p={p})"),
        )
    }
}

// ---------------------------------------------------------------------------
// Extremal direction ratios
// ---------------------------------------------------------------------------

const RATIO_PAIRS_DEFAULT: usize = 1 << 13;
const POLISH_STARTS: usize = 8;

/// Extremum of `ratio` over the sphere: dense antipodal sampling, then
/// simplex polish from the best few samples. Returns (direction, value);
/// the value is on the conservative side (a lower bound for sup, upper for
/// inf), tightened by the polish.
fn extremal_ratio<F>(
    ratio: &F,
    n: usize,
    cfg: &IntegrationConfig,
    stream: u64,
    maximize: bool,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n == 1 {
        let plus = ratio(&[1.0]);
        let minus = ratio(&[-1.0]);
        let pick_plus = if maximize { plus >= minus } else { plus <= minus };
        return if pick_plus {
            (vec![1.0], plus)
        } else {
            (vec![-1.0], minus)
        };
    }
    let pairs = (cfg.sphere_samples / 2).max(RATIO_PAIRS_DEFAULT);
    let dirs = quad::direction_batch(n, pairs, cfg.seed, cfg.substream(stream), true);
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::with_capacity(2 * pairs);
    for theta in dirs.chunks_exact(n) {
        scored.push((ratio(theta), theta.to_vec()));
        let anti = geom::neg(theta);
        scored.push((ratio(&anti), anti));
    }
    scored.sort_by(|a, b| {
        let cmp = a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal);
        let cmp = if maximize { cmp.reverse() } else { cmp };
        cmp.then_with(|| {
            if geom::lex_less(&a.1, &b.1) {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        })
    });

    let sign = if maximize { -1.0 } else { 1.0 };
    let search = SearchConfig {
        seed: cfg.substream(stream ^ 0x504F4C),
        ..Default::default()
    };
    let polished: Vec<(Vec<f64>, f64)> = scored[..POLISH_STARTS.min(scored.len())]
        .par_iter()
        .map(|(_, start)| {
            let (theta, v) = opt::refine_minimum(|t: &[f64]| sign * ratio(t), start, &search);
            (theta, sign * v)
        })
        .collect();

    let mut best_dir = scored[0].1.clone();
    let mut best_val = scored[0].0;
    for (theta, v) in polished {
        let better = if maximize { v > best_val } else { v < best_val };
        if better {
            best_val = v;
            best_dir = theta;
        }
    }
    (geom::canonical_sign(&best_dir), best_val)
}

/// Result of a containment test. `margin` is the supremum over directions
/// of gauge_outer/gauge_inner: the minimal scaling of the outer body that
/// swallows the inner one. Containment iff margin <= 1 (up to tolerance).
#[derive(Debug, Clone)]
pub struct ContainsResult {
    pub contained: bool,
    pub margin: f64,
    pub worst_direction: Vec<f64>,
}

pub fn contains_body(
    inner: &StarBody,
    outer: &StarBody,
    cfg: &IntegrationConfig,
) -> Result<ContainsResult> {
    Error::check_dim(inner.dim(), outer.dim())?;
    let n = inner.dim();
    let ratio = |theta: &[f64]| {
        let g_in = inner.gauge_unchecked(theta);
        let g_out = outer.gauge_unchecked(theta);
        if g_in > 0.0 {
            g_out / g_in
        } else if g_out == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    };
    let (worst_direction, margin) = extremal_ratio(&ratio, n, cfg, 0x434E54, true);
    Ok(ContainsResult {
        contained: margin <= 1.0 + 1e-6,
        margin,
        worst_direction,
    })
}

/// Minimal a >= 1 with sD subset M subset a s D over homothets of D:
/// (sup r_M/r_D) / (inf r_M/r_D). Upper-bounds any distance that also
/// optimizes over linear images of D.
pub fn dbm_scaling(m: &StarBody, d: &StarBody, cfg: &IntegrationConfig) -> Result<f64> {
    Error::check_dim(m.dim(), d.dim())?;
    let ratio = |theta: &[f64]| {
        let gm = m.gauge_unchecked(theta);
        let gd = d.gauge_unchecked(theta);
        if gm > 0.0 {
            gd / gm
        } else if gd == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    };
    let (_, sup) = extremal_ratio(&ratio, m.dim(), cfg, 0x424D58, true);
    let (_, inf) = extremal_ratio(&ratio, m.dim(), cfg, 0x424D4E, false);
    if !(inf > 0.0) {
        return Err(Error::invalid(
            "radial ratio reaches zero: bodies are not comparable by homothety",
        ));
    }
    Ok((sup / inf).max(1.0))
}

/// `dbm_scaling` minimized over diagonal linear images of D by coordinate
/// descent on log-scalings (the plain version fixes the identity map).
/// Returns the refined bound and the diagonal that attains it.
pub fn dbm_scaling_refined(
    m: &StarBody,
    d: &StarBody,
    cfg: &IntegrationConfig,
    sweeps: usize,
) -> Result<(f64, Vec<f64>)> {
    Error::check_dim(m.dim(), d.dim())?;
    let n = m.dim();
    let coarse = {
        let mut c = cfg.clone();
        c.sphere_samples = (cfg.sphere_samples / 8).max(1 << 10);
        c
    };
    let objective = |diag: &[f64], budget: &IntegrationConfig| -> Result<f64> {
        let ratio = |theta: &[f64]| {
            let gm = m.gauge_unchecked(theta);
            let mut pre = vec![0.0; n];
            for ((y, t), s) in pre.iter_mut().zip(theta).zip(diag) {
                *y = t / s;
            }
            let gd = d.gauge_unchecked(&pre);
            if gm > 0.0 {
                gd / gm
            } else if gd == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        };
        let (_, sup) = extremal_ratio(&ratio, n, budget, 0x424D58, true);
        let (_, inf) = extremal_ratio(&ratio, n, budget, 0x424D4E, false);
        if !(inf > 0.0) {
            return Err(Error::invalid(
                "radial ratio reaches zero: bodies are not comparable by homothety",
            ));
        }
        Ok((sup / inf).max(1.0))
    };

    let mut diag = vec![1.0; n];
    let mut best = objective(&diag, &coarse)?;
    let factors = [0.8, 0.9, 0.95, 1.0 / 0.95, 1.0 / 0.9, 1.25];
    for _ in 0..sweeps.max(1) {
        for i in 0..n {
            for fct in factors {
                let mut cand = diag.clone();
                cand[i] *= fct;
                let v = objective(&cand, &coarse)?;
                if v < best - 1e-12 {
                    best = v;
                    diag = cand;
                }
            }
        }
    }
    let refined = objective(&diag, cfg)?;
    Ok((refined, diag))
}

/// Distance-type upper bounds for a body against a witness list.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceReport {
    /// min over witnesses of s* (|D|/|K|)^{1/n} with K subset s* D.
    pub dovr_upper: f64,
    pub best_witness_tag: String,
    /// The containment scaling s* of the best witness.
    pub scaling_used: f64,
    /// Homothety distance bound to the best witness body.
    pub dbm_upper: f64,
}

/// Upper bound on the outer-volume-ratio distance from `body` to the class
/// certified by the witnesses at exponent p.
pub fn dovr_upper(
    body: &StarBody,
    p: f64,
    witnesses: &[Witness],
    cfg: &IntegrationConfig,
) -> Result<DistanceReport> {
    if witnesses.is_empty() {
        return Err(Error::invalid("need at least one containment witness"));
    }
    let n = body.dim();
    let kvol = body.volume_preferred(cfg).value;
    if !(kvol > 0.0) {
        return Err(Error::invalid("body volume must be positive"));
    }
    let mut best: Option<(f64, f64, &Witness)> = None;
    for w in witnesses {
        Error::check_dim(n, w.body.dim())?;
        if (w.p() - p).abs() > 1e-9 {
            return Err(Error::WitnessRejected(format!(
                "witness `{}` certifies exponent {} but the run uses p = {p}",
                w.tag,
                w.p()
            )));
        }
        let s = contains_body(body, &w.body, cfg)?.margin;
        if !(s > 0.0) || !s.is_finite() {
            continue;
        }
        let dvol = w.body.volume_preferred(cfg).value;
        let bound = s * (dvol / kvol).powf(1.0 / n as f64);
        let better = match &best {
            None => true,
            Some((bv, _, _)) => bound < *bv,
        };
        if better {
            best = Some((bound, s, w));
        }
    }
    let (bound, scaling_used, w) =
        best.ok_or_else(|| Error::invalid("no witness produced a finite cover of the body"))?;
    let dbm = dbm_scaling(body, &w.body, cfg)?;
    Ok(DistanceReport {
        dovr_upper: bound,
        best_witness_tag: w.tag.clone(),
        scaling_used,
        dbm_upper: dbm,
    })
}

// ---------------------------------------------------------------------------
// Radial Jensen inequality
// ---------------------------------------------------------------------------

/// int ||theta||^{-n} dsigma >= (int ||theta||^p dsigma)^{-n/p} with
/// normalized sphere measure; equality iff the gauge is constant.
#[derive(Debug, Clone, Serialize)]
pub struct JensenCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_error: f64,
    pub rhs_error: f64,
    pub holds: bool,
    pub p: f64,
}

pub fn jensen_check(body: &StarBody, p: f64, cfg: &IntegrationConfig) -> Result<JensenCheck> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::invalid("jensen check requires finite p > 0"));
    }
    let n = body.dim();
    let area = quad::surface_area(n);
    let npow = n as i32;
    let lhs_int = quad::sphere_integrate(
        |theta: &[f64]| {
            let g = body.gauge_unchecked(theta);
            if g > 0.0 {
                g.powi(-npow)
            } else {
                f64::INFINITY
            }
        },
        n,
        cfg,
    );
    let p_int = quad::sphere_integrate(
        |theta: &[f64]| body.gauge_unchecked(theta).powf(p),
        n,
        cfg,
    );
    let lhs = lhs_int.value / area;
    let mp = p_int.value / area;
    if !(mp > 0.0) {
        return Err(Error::invalid("gauge p-mean vanished; degenerate body"));
    }
    let rhs = mp.powf(-(n as f64) / p);
    let lhs_error = lhs_int.std_error / area;
    let rhs_error = (n as f64 / p) * mp.powf(-(n as f64) / p - 1.0) * p_int.std_error / area;
    Ok(JensenCheck {
        lhs,
        rhs,
        lhs_error,
        rhs_error,
        // the 1e-12 floor keeps equality cases from flipping on powf rounding
        // when the quadrature error is exactly zero
        holds: lhs >= rhs - 2.0 * (lhs_error + rhs_error) - 1e-12 * (lhs.abs() + rhs.abs()),
        p,
    })
}

// ---------------------------------------------------------------------------
// Moment domination transfer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DominationStatus {
    Ok,
    HypothesisViolated,
}

/// If every directional p-moment of f on K is dominated by the one on M,
/// the masses compare after paying the homothety factor to a reference
/// body D: int_K f <= a^p int_M f with a = dbm_scaling(M, D).
#[derive(Debug, Clone)]
pub struct DominationReport {
    pub status: DominationStatus,
    /// min over grid directions of moment_M - moment_K (raw, unnormalized).
    pub worst_margin: f64,
    pub worst_direction: Vec<f64>,
    /// Statistical error at the worst grid direction.
    pub worst_error: f64,
    pub grid_size: usize,
    /// a = dbm_scaling(M, D).
    pub scaling: f64,
    pub mass_k: ValueWithError,
    pub mass_m: ValueWithError,
    pub conclusion_lhs: f64,
    pub conclusion_rhs: f64,
    pub conclusion_error: f64,
    pub conclusion_holds: bool,
    pub p: f64,
}

const DOMINATION_GRID_PAIRS: usize = 512;

pub fn moment_domination(
    k: &StarBody,
    m: &StarBody,
    f: &Density,
    p: f64,
    d: &StarBody,
    cfg: &IntegrationConfig,
) -> Result<DominationReport> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::invalid("domination transfer requires finite p >= 1"));
    }
    let n = k.dim();
    Error::check_dim(n, m.dim())?;
    Error::check_dim(n, f.dim())?;
    Error::check_dim(n, d.dim())?;

    // Hypothesis grid: reduced-budget clouds make per-direction moments a
    // single weighted pass; statistical error rides along per direction.
    let budget = moments::search_budget(cfg);
    let cloud_k = BodyCloud::build(k, f, &budget)?;
    let cloud_m = BodyCloud::build(m, f, &budget)?;
    let mut grid: Vec<Vec<f64>> = Vec::with_capacity(DOMINATION_GRID_PAIRS * 2 + n);
    if n == 1 {
        grid.push(vec![1.0]);
        grid.push(vec![-1.0]);
    } else {
        let dirs = quad::direction_batch(n, DOMINATION_GRID_PAIRS, cfg.seed, cfg.substream(0x4752), true);
        for theta in dirs.chunks_exact(n) {
            grid.push(theta.to_vec());
            grid.push(geom::neg(theta));
        }
        for i in 0..n {
            grid.push(geom::axis(n, i));
        }
    }
    let checks: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|xi| {
            let mk = cloud_k.abs_moment_with_error(xi, p);
            let mm = cloud_m.abs_moment_with_error(xi, p);
            (mm.value - mk.value, mk.std_error + mm.std_error)
        })
        .collect();
    let mut worst_idx = 0;
    for (i, (margin, _)) in checks.iter().enumerate() {
        if *margin < checks[worst_idx].0 {
            worst_idx = i;
        }
    }
    let (worst_margin, worst_error) = checks[worst_idx];
    let hypothesis_ok = worst_margin >= -2.0 * worst_error;

    let scaling = dbm_scaling(m, d, cfg)?;
    let mass_k = quad::body_integrate(k, f, cfg)?;
    let mass_m = quad::body_integrate(m, f, cfg)?;
    let factor = scaling.powf(p);
    let conclusion_lhs = mass_k.value;
    let conclusion_rhs = factor * mass_m.value;
    let conclusion_error = mass_k.std_error + factor * mass_m.std_error;
    Ok(DominationReport {
        status: if hypothesis_ok {
            DominationStatus::Ok
        } else {
            DominationStatus::HypothesisViolated
        },
        worst_margin,
        worst_direction: grid[worst_idx].clone(),
        worst_error,
        grid_size: grid.len(),
        scaling,
        mass_k,
        mass_m,
        conclusion_lhs,
        conclusion_rhs,
        conclusion_error,
        conclusion_holds: conclusion_lhs <= conclusion_rhs + 2.0 * conclusion_error,
        p,
    })
}
