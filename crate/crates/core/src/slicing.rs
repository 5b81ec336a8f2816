//! Section suprema over directions and offsets, slicing constants, the
//! sup-section moment bound, and the one-dimensional q-moment functional.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bodies::StarBody;
use crate::densities::Density;
use crate::error::{Error, Result};
use crate::geom;
use crate::moments;
use crate::opt::{self, SearchConfig};
use crate::quad::{self, IntegrationConfig, ValueWithError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceMode {
    /// Hyperplanes through the origin.
    Central,
    /// All hyperplanes (direction and offset).
    Affine,
}

/// Best section found: direction, offset, and a fresh evaluation of the
/// section integral there. The value is a lower bound on the true
/// supremum, which is the conservative side for every downstream check.
#[derive(Debug, Clone)]
pub struct MaxSection {
    pub direction: Vec<f64>,
    pub offset: f64,
    pub value: ValueWithError,
}

fn search_seed(cfg: &IntegrationConfig, tag: u64) -> SearchConfig {
    SearchConfig {
        seed: cfg.substream(tag),
        ..Default::default()
    }
}

fn fresh_section_config(cfg: &IntegrationConfig) -> IntegrationConfig {
    let mut c = cfg.clone();
    c.seed = cfg.seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(0x534543);
    c.mc_samples = cfg.mc_samples * 2;
    c
}

/// sup over hyperplane sections of int f: in central mode the offset is
/// fixed at 0 and only the direction moves; in affine mode the per-start
/// direction winners each get a 1-D offset sup (grid + golden-section),
/// and the best pair wins.
pub fn max_section(
    body: &StarBody,
    f: &Density,
    mode: SliceMode,
    cfg: &IntegrationConfig,
) -> Result<MaxSection> {
    Error::check_dim(body.dim(), f.dim())?;
    let n = body.dim();
    if n == 1 {
        // the only central section is the origin itself
        let v = f.eval(&[0.0])?;
        let inside = body.gauge_unchecked(&[0.0]) <= 1.0;
        return Ok(MaxSection {
            direction: geom::canonical_sign(&[1.0]),
            offset: 0.0,
            value: ValueWithError::exact(if inside { v } else { 0.0 }),
        });
    }

    let coarse = moments::search_budget(cfg);
    // search objectives rebuild the hyperplane frame at every simplex step,
    // so they take the cloud-based support estimate; winners get polished
    // frames in the fresh evaluation
    let cloud = quad::boundary_cloud(body, 1024);
    let objective = |xi: &[f64]| {
        let frame = quad::frame_from_cloud(&cloud, n, xi);
        quad::section_integrate_framed(body, f, xi, &frame, 0.0, &coarse)
            .map(|v| v.value)
            .unwrap_or(0.0)
    };
    let outcome = opt::maximize_direction(objective, n, &search_seed(cfg, 0x534C43));

    let fresh = fresh_section_config(cfg);
    match mode {
        SliceMode::Central => {
            let value = quad::section_integrate(body, f, &outcome.direction, 0.0, &fresh)?;
            Ok(MaxSection {
                direction: outcome.direction,
                offset: 0.0,
                value,
            })
        }
        SliceMode::Affine => {
            let candidates = outcome.distinct_maxima(6, 1e-6);
            let mut best: Option<(Vec<f64>, f64, f64)> = None;
            for (xi, _) in &candidates {
                let (s, sup) = quad::section_sup_search(body, f, xi, &coarse, quad::SUP_GRID_DEFAULT)?;
                let better = match &best {
                    None => true,
                    Some((_, _, bv)) => sup.value > *bv,
                };
                if better {
                    best = Some((xi.clone(), s, sup.value));
                }
            }
            let (xi, s, _) =
                best.ok_or_else(|| Error::DegenerateDensity("no section carries mass".into()))?;
            let value = quad::section_integrate(body, f, &xi, s, &fresh)?;
            Ok(MaxSection {
                direction: xi,
                offset: s,
                value,
            })
        }
    }
}

/// Slicing constants: how much of the total mass a single hyperplane
/// section must carry, normalized by |K|^{1/n}.
#[derive(Debug, Clone)]
pub struct SlicingReport {
    pub mode: SliceMode,
    /// Constant for the requested mode: mass / (max section * |K|^{1/n}).
    pub s_hat: f64,
    pub central_constant: f64,
    /// Present only when the affine search ran.
    pub affine_constant: Option<f64>,
    pub maximizing_direction: Vec<f64>,
    pub maximizing_offset: f64,
    pub max_section: ValueWithError,
    pub mass: ValueWithError,
    pub volume: ValueWithError,
}

pub fn slicing_constant(
    body: &StarBody,
    f: &Density,
    mode: SliceMode,
    cfg: &IntegrationConfig,
) -> Result<SlicingReport> {
    let n = body.dim();
    let mass = quad::body_integrate(body, f, cfg)?;
    if !(mass.value > 0.0) {
        return Err(Error::DegenerateDensity("density carries no mass on the body".into()));
    }
    let volume = body.volume_preferred(cfg);
    let central = max_section(body, f, SliceMode::Central, cfg)?;
    let constant = |sec: &MaxSection| -> Result<f64> {
        if !(sec.value.value > 0.0) {
            return Err(Error::DegenerateDensity("max section carries no mass".into()));
        }
        Ok(mass.value / (sec.value.value * volume.value.powf(1.0 / n as f64)))
    };
    let central_constant = constant(&central)?;
    match mode {
        SliceMode::Central => Ok(SlicingReport {
            mode,
            s_hat: central_constant,
            central_constant,
            affine_constant: None,
            maximizing_direction: central.direction,
            maximizing_offset: 0.0,
            max_section: central.value,
            mass,
            volume,
        }),
        SliceMode::Affine => {
            let affine = max_section(body, f, SliceMode::Affine, cfg)?;
            // the affine family contains the central one; keep the better
            let affine = if affine.value.value >= central.value.value {
                affine
            } else {
                central
            };
            let affine_constant = constant(&affine)?;
            Ok(SlicingReport {
                mode,
                s_hat: affine_constant,
                central_constant,
                affine_constant: Some(affine_constant),
                maximizing_direction: affine.direction,
                maximizing_offset: affine.offset,
                max_section: affine.value,
                mass,
                volume,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Sup-section moment bound
// ---------------------------------------------------------------------------

/// One inequality instance relating the offset-sup of sections along xi,
/// the p-moment along xi, and total mass:
/// 2^p (p+1) sup_s(int_{H_s} f)^p * int|(x,xi)|^p f  >=  (int f)^{p+1}.
#[derive(Debug, Clone)]
pub struct SectionMomentBound {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// First-order error propagated from the three estimates.
    pub combined_error: f64,
    pub holds: bool,
    pub sup_section: ValueWithError,
    pub sup_offset: f64,
    pub moment: ValueWithError,
    pub mass: ValueWithError,
    pub p: f64,
}

pub fn section_moment_bound(
    body: &StarBody,
    f: &Density,
    p: f64,
    xi: &[f64],
    cfg: &IntegrationConfig,
) -> Result<SectionMomentBound> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::invalid("bound requires finite p > 0"));
    }
    let (sup_offset, sup_section) = quad::section_sup_search(body, f, xi, cfg, quad::SUP_GRID_DEFAULT)?;
    // Moment and mass by Fubini over the same sections the sup ranges over:
    // both reduce to 1-D integrals of the section profile A(t), which keeps
    // the three estimates consistent near equality cases.
    let (moment, mass) = quad::section_profile_moments(body, f, p, xi, cfg)?;

    let scale = 2f64.powf(p) * (p + 1.0);
    let sup = sup_section.value;
    let lhs = scale * sup.powf(p) * moment.value;
    let rhs = mass.value.powf(p + 1.0);
    let d_lhs = scale
        * (p * sup.powf(p - 1.0) * moment.value * sup_section.std_error
            + sup.powf(p) * moment.std_error);
    let d_rhs = (p + 1.0) * mass.value.powf(p) * mass.std_error;
    let combined_error = d_lhs + d_rhs;
    let margin = lhs - rhs;
    // the 1e-8 floor absorbs the deliberate sampling-box inflation when the
    // quadrature itself is exact and both sides agree to rounding
    let slack = 2.0 * combined_error + 1e-8 * (lhs.abs() + rhs.abs());
    Ok(SectionMomentBound {
        lhs,
        rhs,
        margin,
        combined_error,
        holds: margin >= -slack,
        sup_section,
        sup_offset,
        moment,
        mass,
        p,
    })
}

/// Mass-versus-affine-section ratio: mass / (sqrt(p) * d * |K|^{1/n} * sup),
/// where `d` is an outer-volume-ratio upper bound supplied by the caller.
/// The asserted range is p > 2; smaller p is reported with a note.
#[derive(Debug, Clone)]
pub struct AffineSlicingRatio {
    pub c_hat: f64,
    pub p: f64,
    pub d_upper: f64,
    pub in_asserted_range: bool,
    pub note: Option<String>,
    pub max_section: MaxSectionSummary,
    pub mass: ValueWithError,
    pub volume: ValueWithError,
}

#[derive(Debug, Clone)]
pub struct MaxSectionSummary {
    pub direction: Vec<f64>,
    pub offset: f64,
    pub value: ValueWithError,
}

pub fn affine_slicing_ratio(
    body: &StarBody,
    f: &Density,
    p: f64,
    d_upper: f64,
    cfg: &IntegrationConfig,
) -> Result<AffineSlicingRatio> {
    if !(p >= 1.0) {
        return Err(Error::invalid("ratio requires p >= 1"));
    }
    if !(d_upper >= 1.0) {
        return Err(Error::invalid("distance upper bound must be >= 1"));
    }
    let n = body.dim();
    let mass = quad::body_integrate(body, f, cfg)?;
    let volume = body.volume_preferred(cfg);
    let sec = max_section(body, f, SliceMode::Affine, cfg)?;
    if !(sec.value.value > 0.0) {
        return Err(Error::DegenerateDensity("max section carries no mass".into()));
    }
    let c_hat = mass.value
        / (p.sqrt() * d_upper * volume.value.powf(1.0 / n as f64) * sec.value.value);
    let in_asserted_range = p > 2.0;
    Ok(AffineSlicingRatio {
        c_hat,
        p,
        d_upper,
        in_asserted_range,
        note: if in_asserted_range {
            None
        } else {
            Some("p <= 2: outside the asserted range, reported for reference".into())
        },
        max_section: MaxSectionSummary {
            direction: sec.direction,
            offset: sec.offset,
            value: sec.value,
        },
        mass,
        volume,
    })
}

// ---------------------------------------------------------------------------
// One-dimensional profiles and the q-moment functional
// ---------------------------------------------------------------------------

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A compactly supported [0,1]-valued profile on the line.
#[derive(Clone)]
pub struct Profile1d {
    eval: ProfileFn,
    support: (f64, f64),
    breakpoints: Vec<f64>,
}

impl std::fmt::Debug for Profile1d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Profile1d")
            .field("support", &self.support)
            .field("breakpoints", &self.breakpoints.len())
            .finish()
    }
}

impl Profile1d {
    pub fn new<G>(eval: G, support: (f64, f64), breakpoints: Vec<f64>) -> Result<Profile1d>
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support.0 < support.1) || !support.0.is_finite() || !support.1.is_finite() {
            return Err(Error::invalid("profile support must be a finite interval"));
        }
        Ok(Profile1d {
            eval: Arc::new(eval),
            support,
            breakpoints,
        })
    }

    pub fn indicator(half_width: f64) -> Result<Profile1d> {
        if !(half_width > 0.0) {
            return Err(Error::invalid("half_width must be positive"));
        }
        let a = half_width;
        Profile1d::new(
            move |t: f64| if t.abs() <= a { 1.0 } else { 0.0 },
            (-a, a),
            vec![-a, a],
        )
    }

    pub fn tent(half_width: f64) -> Result<Profile1d> {
        if !(half_width > 0.0) {
            return Err(Error::invalid("half_width must be positive"));
        }
        let a = half_width;
        Profile1d::new(
            move |t: f64| (1.0 - t.abs() / a).max(0.0),
            (-a, a),
            vec![-a, a],
        )
    }

    /// Piecewise-constant profile on uniform cells over [lo, hi].
    pub fn steps(lo: f64, hi: f64, heights: Vec<f64>) -> Result<Profile1d> {
        if !(lo < hi) || heights.is_empty() {
            return Err(Error::invalid("steps need lo < hi and at least one cell"));
        }
        if heights.iter().any(|h| !h.is_finite()) {
            return Err(Error::invalid("step heights must be finite"));
        }
        let cells = heights.len();
        let width = (hi - lo) / cells as f64;
        let breakpoints: Vec<f64> = (0..=cells).map(|k| lo + k as f64 * width).collect();
        let hs = heights.clone();
        Profile1d::new(
            move |t: f64| {
                if t < lo || t >= hi {
                    0.0
                } else {
                    let k = (((t - lo) / width) as usize).min(cells - 1);
                    hs[k]
                }
            },
            (lo, hi),
            breakpoints,
        )
    }

    /// Random step profile with i.i.d. uniform [0,1] heights; deterministic
    /// in the seed.
    pub fn random_steps(cells: usize, half_width: f64, seed: u64) -> Result<Profile1d> {
        use rand::{Rng, SeedableRng};
        if cells == 0 {
            return Err(Error::invalid("need at least one cell"));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let heights: Vec<f64> = (0..cells).map(|_| rng.random::<f64>()).collect();
        Profile1d::steps(-half_width, half_width, heights)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Sampled check that values stay within [0 - tol, 1 + tol].
    pub fn validate_unit_range(&self, samples: usize, tol: f64) -> Result<()> {
        let (lo, hi) = self.support;
        for k in 0..samples {
            let t = lo + (hi - lo) * (k as f64 + 0.5) / samples as f64;
            let v = self.eval(t);
            if !(v >= -tol && v <= 1.0 + tol) {
                return Err(Error::invalid(format!(
                    "profile value {v} at t = {t} is outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// JSON wire format for 1-D profiles.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProfileSpec {
    Indicator(IndicatorSpec),
    Tent(TentSpec),
    Steps(StepsSpec),
    RandomSteps(RandomStepsSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSpec {
    pub half_width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TentSpec {
    pub half_width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepsSpec {
    pub lo: f64,
    pub hi: f64,
    pub heights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomStepsSpec {
    pub cells: usize,
    pub half_width: f64,
    pub seed: u64,
}

impl<'de> Deserialize<'de> for ProfileSpec {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        use serde::de::Error as _;
        let mut value = serde_json::Value::deserialize(deserializer)?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| D::Error::custom("profile spec must be a JSON object"))?;
        let tag = match obj.remove("type") {
            Some(serde_json::Value::String(s)) => s,
            _ => return Err(D::Error::custom("profile spec needs a string `type` field")),
        };
        let rest = serde_json::Value::Object(std::mem::take(obj));
        let parsed = match tag.as_str() {
            "indicator" => serde_json::from_value(rest).map(ProfileSpec::Indicator),
            "tent" => serde_json::from_value(rest).map(ProfileSpec::Tent),
            "steps" => serde_json::from_value(rest).map(ProfileSpec::Steps),
            "random_steps" => serde_json::from_value(rest).map(ProfileSpec::RandomSteps),
            other => return Err(D::Error::custom(format!("unknown profile type `{other}`"))),
        };
        parsed.map_err(|e| D::Error::custom(format!("{tag}: {e}")))
    }
}

impl ProfileSpec {
    pub fn from_json(text: &str) -> Result<ProfileSpec> {
        serde_json::from_str(text).map_err(|e| Error::Spec(format!("profile spec: {e}")))
    }

    pub fn build(&self) -> Result<Profile1d> {
        match self {
            ProfileSpec::Indicator(s) => Profile1d::indicator(s.half_width),
            ProfileSpec::Tent(s) => Profile1d::tent(s.half_width),
            ProfileSpec::Steps(s) => Profile1d::steps(s.lo, s.hi, s.heights.clone()),
            ProfileSpec::RandomSteps(s) => Profile1d::random_steps(s.cells, s.half_width, s.seed),
        }
    }
}

/// F(q) = ((q+1)/2 * int |t|^q g(t) dt)^{1/(q+1)}, non-decreasing in q for
/// [0,1]-valued g. The integral splits at 0 and at profile breakpoints; a
/// graded mesh absorbs the |t|^q kink for q in (-1, 0).
pub fn moment_functional(g: &Profile1d, q: f64) -> Result<f64> {
    if !(q > -1.0) || !q.is_finite() {
        return Err(Error::invalid("moment functional requires q > -1"));
    }
    g.validate_unit_range(257, 1e-9)?;
    let integral = quad::integrate_abs_moment(
        &|t| g.eval(t),
        g.support(),
        g.breakpoints(),
        q,
    );
    let base = (q + 1.0) / 2.0 * integral;
    if base < 0.0 {
        return Err(Error::invalid("profile integral came out negative"));
    }
    Ok(base.powf(1.0 / (q + 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> IntegrationConfig {
        IntegrationConfig {
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn functional_indicator_is_constant_in_q() {
        for a in [0.5, 1.0, 2.5] {
            let g = Profile1d::indicator(a).unwrap();
            for q in [-0.5, 0.0, 0.5, 1.0, 3.0, 7.5] {
                let fq = moment_functional(&g, q).unwrap();
                assert!((fq - a).abs() < 1e-9, "a={a} q={q}: {fq}");
            }
        }
    }

    #[test]
    fn functional_tent_values() {
        let g = Profile1d::tent(1.0).unwrap();
        let f0 = moment_functional(&g, 0.0).unwrap();
        assert!((f0 - 0.5).abs() < 1e-12, "{f0}");
        let f1 = moment_functional(&g, 1.0).unwrap();
        assert!((f1 - (1.0f64 / 3.0).sqrt()).abs() < 1e-12, "{f1}");
        assert!(f1 >= f0);
    }

    #[test]
    fn functional_monotone_on_random_steps() {
        for seed in 0..12u64 {
            let g = Profile1d::random_steps(32, 2.0, seed).unwrap();
            let mut prev = f64::NEG_INFINITY;
            let mut q = -0.5;
            while q <= 8.0 + 1e-12 {
                let fq = moment_functional(&g, q).unwrap();
                assert!(
                    fq >= prev - 1e-6,
                    "seed {seed}: F({q}) = {fq} < previous {prev}"
                );
                prev = fq;
                q += 0.5;
            }
        }
    }

    #[test]
    fn functional_rejects_out_of_range_profiles() {
        let g = Profile1d::new(|_| 1.5, (-1.0, 1.0), vec![]).unwrap();
        assert!(moment_functional(&g, 1.0).is_err());
        assert!(moment_functional(&Profile1d::indicator(1.0).unwrap(), -1.0).is_err());
    }

    #[test]
    fn profile_spec_round_trip() {
        let g = ProfileSpec::from_json(r#"{"type":"indicator","half_width":1.5}"#)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(g.eval(1.0), 1.0);
        assert_eq!(g.eval(2.0), 0.0);
        let g = ProfileSpec::from_json(
            r#"{"type":"steps","lo":-1.0,"hi":1.0,"heights":[0.2,0.8]}"#,
        )
        .unwrap()
        .build()
        .unwrap();
        assert_eq!(g.eval(-0.5), 0.2);
        assert_eq!(g.eval(0.5), 0.8);
        assert!(ProfileSpec::from_json(r#"{"type":"indicator","width":1.0}"#).is_err());
    }

    #[test]
    fn max_section_ball_central() {
        let ball = StarBody::lq_ball(3, 2.0, 1.0).unwrap();
        let f = Density::constant(3, 1.0).unwrap();
        let sec = max_section(&ball, &f, SliceMode::Central, &cfg()).unwrap();
        let pi = std::f64::consts::PI;
        assert!((sec.value.value - pi).abs() / pi < 5e-3, "{}", sec.value.value);
    }

    #[test]
    fn max_section_square_central_diagonal_chord() {
        // [-1/2,1/2]^2: longest central chord is the diagonal, length sqrt(2)
        let sq = StarBody::cube(2, 0.5).unwrap();
        let f = Density::constant(2, 1.0).unwrap();
        let sec = max_section(&sq, &f, SliceMode::Central, &cfg()).unwrap();
        let d = 2.0f64.sqrt();
        assert!((sec.value.value - d).abs() / d < 5e-3, "{}", sec.value.value);
        // chord direction is perpendicular to xi, so |xi_0 xi_1| = 1/2
        let prod = (sec.direction[0] * sec.direction[1]).abs();
        assert!((prod - 0.5).abs() < 1e-2, "{:?}", sec.direction);
    }

    #[test]
    fn max_section_ball_affine_is_central() {
        let ball = StarBody::lq_ball(3, 2.0, 1.0).unwrap();
        let f = Density::constant(3, 1.0).unwrap();
        let sec = max_section(&ball, &f, SliceMode::Affine, &cfg()).unwrap();
        let pi = std::f64::consts::PI;
        assert!((sec.value.value - pi).abs() / pi < 5e-3, "{}", sec.value.value);
        assert!(sec.offset.abs() < 0.02, "offset {}", sec.offset);
    }

    #[test]
    fn slicing_constant_disk() {
        // mass pi, max central chord 2, |K|^{1/2} = sqrt(pi)
        let disk = StarBody::lq_ball(2, 2.0, 1.0).unwrap();
        let f = Density::constant(2, 1.0).unwrap();
        let rep = slicing_constant(&disk, &f, SliceMode::Central, &cfg()).unwrap();
        let exact = std::f64::consts::PI.sqrt() / 2.0;
        assert!(
            (rep.s_hat - exact).abs() / exact < 2e-3,
            "{} vs {exact}",
            rep.s_hat
        );
    }

    #[test]
    fn slicing_constant_ball3() {
        let ball = StarBody::lq_ball(3, 2.0, 1.0).unwrap();
        let f = Density::constant(3, 1.0).unwrap();
        let rep = slicing_constant(&ball, &f, SliceMode::Affine, &cfg()).unwrap();
        let pi = std::f64::consts::PI;
        let vol = 4.0 * pi / 3.0;
        let exact = vol / (pi * vol.powf(1.0 / 3.0));
        assert!(
            (rep.s_hat - exact).abs() / exact < 6e-3,
            "{} vs {exact}",
            rep.s_hat
        );
        let affine = rep.affine_constant.unwrap();
        assert!(affine <= rep.central_constant * (1.0 + 1e-9));
    }

    #[test]
    fn section_moment_bound_cube_equality() {
        // cube + axis + uniform density: the bound is tight for every p.
        // Deterministic polar quadrature: equality is checked to 1e-3.
        let det = IntegrationConfig {
            seed: 5,
            method: quad::Method::ProductPolar,
            sphere_samples: 1 << 17,
            ..Default::default()
        };
        let f = Density::constant(3, 1.0).unwrap();
        let cube = StarBody::cube(3, 0.5).unwrap();
        for p in [1.0, 2.0, 5.0] {
            let b = section_moment_bound(&cube, &f, p, &[0.0, 0.0, 1.0], &det).unwrap();
            let ratio = b.lhs / b.rhs;
            assert!((ratio - 1.0).abs() < 1e-3, "p={p}: ratio {ratio}");
            assert!(b.holds);
        }
    }

    #[test]
    fn section_moment_bound_disk_strict() {
        // sup section 2, moment 4/3, mass pi: lhs = 32/3 > pi^2 = rhs
        let disk = StarBody::lq_ball(2, 2.0, 1.0).unwrap();
        let f = Density::constant(2, 1.0).unwrap();
        let b = section_moment_bound(&disk, &f, 1.0, &[1.0, 0.0], &cfg()).unwrap();
        assert!((b.lhs - 32.0 / 3.0).abs() < 0.05, "{}", b.lhs);
        assert!((b.rhs - std::f64::consts::PI.powi(2)).abs() < 0.05, "{}", b.rhs);
        assert!(b.margin > 0.5);
    }

    #[test]
    fn affine_ratio_scale_invariant() {
        let f = Density::constant(2, 1.0).unwrap();
        let b1 = StarBody::cube(2, 0.5).unwrap();
        let b2 = b1.scaled(3.0).unwrap();
        let r1 = affine_slicing_ratio(&b1, &f, 3.0, 1.2, &cfg()).unwrap();
        let r2 = affine_slicing_ratio(&b2, &f, 3.0, 1.2, &cfg()).unwrap();
        assert!(
            (r1.c_hat - r2.c_hat).abs() < 2e-3 * r1.c_hat,
            "{} vs {}",
            r1.c_hat,
            r2.c_hat
        );
        assert!(r1.in_asserted_range && r1.note.is_none());
        let low = affine_slicing_ratio(&b1, &f, 1.5, 1.2, &cfg()).unwrap();
        assert!(!low.in_asserted_range && low.note.is_some());
    }
}
