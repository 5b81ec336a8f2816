//! Origin-symmetric star bodies: gauge (Minkowski functional), radial
//! function, membership, and volume via the polar formula.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::geom;
use crate::quad::{self, IntegrationConfig, ValueWithError};

type GaugeFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum BodyKind {
    /// Unit ball of l_q scaled by `scale`; q finite and positive.
    LqBall { q: f64, scale: f64 },
    /// [-h, h]^n; the l_infinity family kept separate for stability.
    Cube { half_side: f64 },
    /// l_1 ball scaled by `scale`.
    CrossPolytope { scale: f64 },
    /// Axis-aligned ellipsoid with semi-axes `axes`.
    Ellipsoid { axes: Vec<f64> },
    Custom { gauge: GaugeFn },
}

/// A star body about the origin, represented through its gauge.
///
/// Immutable after construction; evaluators must be re-entrant, so bodies
/// can be shared freely between concurrent workers.
#[derive(Clone)]
pub struct StarBody {
    dim: usize,
    kind: BodyKind,
    symmetric: bool,
    bounding_radius: f64,
    exact_volume: Option<f64>,
    warnings: Vec<String>,
}

impl fmt::Debug for StarBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StarBody")
            .field("dim", &self.dim)
            .field("family", &self.family_tag())
            .field("bounding_radius", &self.bounding_radius)
            .field("exact_volume", &self.exact_volume)
            .finish()
    }
}

/// Volume of the Euclidean unit ball in R^n.
pub fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    ((nf / 2.0) * std::f64::consts::PI.ln() - ln_gamma(nf / 2.0 + 1.0)).exp()
}

/// Closed-form |B_q^n| for the unit l_q ball: (2 Gamma(1/q + 1))^n / Gamma(n/q + 1).
pub fn lq_ball_volume(n: usize, q: f64) -> f64 {
    if q.is_infinite() {
        return 2f64.powi(n as i32);
    }
    let nf = n as f64;
    (nf * (std::f64::consts::LN_2 + ln_gamma(1.0 / q + 1.0)) - ln_gamma(nf / q + 1.0)).exp()
}

impl StarBody {
    pub fn lq_ball(n: usize, q: f64, scale: f64) -> Result<StarBody> {
        if n == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(q > 0.0) {
            return Err(Error::invalid("lq_ball requires q > 0"));
        }
        if !(scale > 0.0) {
            return Err(Error::invalid("scale must be positive"));
        }
        if q.is_infinite() {
            return StarBody::cube(n, scale);
        }
        let nf = n as f64;
        // Radial max: at an axis for q <= 2, at the diagonal for q >= 2.
        let bounding_radius = scale * nf.powf((0.5 - 1.0 / q).max(0.0));
        Ok(StarBody {
            dim: n,
            kind: BodyKind::LqBall { q, scale },
            symmetric: true,
            bounding_radius,
            exact_volume: Some(scale.powi(n as i32) * lq_ball_volume(n, q)),
            warnings: Vec::new(),
        })
    }

    pub fn cube(n: usize, half_side: f64) -> Result<StarBody> {
        if n == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(half_side > 0.0) {
            return Err(Error::invalid("half_side must be positive"));
        }
        Ok(StarBody {
            dim: n,
            kind: BodyKind::Cube { half_side },
            symmetric: true,
            bounding_radius: half_side * (n as f64).sqrt(),
            exact_volume: Some((2.0 * half_side).powi(n as i32)),
            warnings: Vec::new(),
        })
    }

    pub fn cross_polytope(n: usize, scale: f64) -> Result<StarBody> {
        if n == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(scale > 0.0) {
            return Err(Error::invalid("scale must be positive"));
        }
        let ln_vol = n as f64 * (scale.ln() + std::f64::consts::LN_2) - ln_gamma(n as f64 + 1.0);
        Ok(StarBody {
            dim: n,
            kind: BodyKind::CrossPolytope { scale },
            symmetric: true,
            bounding_radius: scale,
            exact_volume: Some(ln_vol.exp()),
            warnings: Vec::new(),
        })
    }

    pub fn ellipsoid(axes: &[f64]) -> Result<StarBody> {
        let n = axes.len();
        if n == 0 {
            return Err(Error::invalid("ellipsoid needs at least one axis"));
        }
        if axes.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::invalid("ellipsoid axes must be positive"));
        }
        let vol = unit_ball_volume(n) * axes.iter().product::<f64>();
        Ok(StarBody {
            dim: n,
            kind: BodyKind::Ellipsoid { axes: axes.to_vec() },
            symmetric: true,
            bounding_radius: axes.iter().cloned().fold(0.0, f64::max),
            exact_volume: Some(vol),
            warnings: Vec::new(),
        })
    }

    /// Wraps a user-supplied gauge evaluator. Star-shapedness is not
    /// verified globally; homogeneity and (claimed) symmetry are sampled
    /// on a small grid and violations recorded as warnings.
    pub fn custom<G>(n: usize, gauge: G, bounding_radius: f64, symmetric: bool) -> Result<StarBody>
    where
        G: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if n == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(bounding_radius > 0.0 && bounding_radius.is_finite()) {
            return Err(Error::invalid(
                "custom bodies require a finite positive bounding_radius",
            ));
        }
        let mut body = StarBody {
            dim: n,
            kind: BodyKind::Custom {
                gauge: Arc::new(gauge),
            },
            symmetric,
            bounding_radius,
            exact_volume: None,
            warnings: Vec::new(),
        };
        body.warnings = body.construction_check(16);
        Ok(body)
    }

    fn construction_check(&self, grid: usize) -> Vec<String> {
        let mut warnings = Vec::new();
        let dirs = quad::direction_batch(self.dim, grid, 0xC0FFEE, 0, true);
        for j in 0..grid {
            let x = &dirs[j * self.dim..(j + 1) * self.dim];
            let g1 = self.gauge_unchecked(x);
            for lambda in [0.5, 2.0, 7.5] {
                let xs = geom::scale(x, lambda);
                let gs = self.gauge_unchecked(&xs);
                if !g1.is_finite() || !gs.is_finite() {
                    continue;
                }
                if (gs - lambda * g1).abs() > 1e-9 * (1.0 + lambda * g1) {
                    warnings.push(format!(
                        "gauge not positively homogeneous near {x:?} (lambda={lambda})"
                    ));
                }
            }
            if self.symmetric {
                let gm = self.gauge_unchecked(&geom::neg(x));
                if g1.is_finite() && (gm - g1).abs() > 1e-9 * (1.0 + g1) {
                    warnings.push(format!("gauge not even near {x:?}"));
                }
            }
        }
        warnings.truncate(4);
        warnings
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn exact_volume(&self) -> Option<f64> {
        self.exact_volume
    }

    pub fn construction_warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn family_tag(&self) -> &'static str {
        match &self.kind {
            BodyKind::LqBall { .. } => "lq_ball",
            BodyKind::Cube { .. } => "cube",
            BodyKind::CrossPolytope { .. } => "cross_polytope",
            BodyKind::Ellipsoid { .. } => "ellipsoid",
            BodyKind::Custom { .. } => "custom",
        }
    }

    /// Short human-readable descriptor for reports.
    pub fn describe(&self) -> String {
        match &self.kind {
            BodyKind::LqBall { q, scale } => format!("lq_ball(n={}, q={q}, scale={scale})", self.dim),
            BodyKind::Cube { half_side } => format!("cube(n={}, half_side={half_side})", self.dim),
            BodyKind::CrossPolytope { scale } => {
                format!("cross_polytope(n={}, scale={scale})", self.dim)
            }
            BodyKind::Ellipsoid { axes } => format!("ellipsoid(axes={axes:?})"),
            BodyKind::Custom { .. } => format!("custom(n={})", self.dim),
        }
    }

    /// The Minkowski functional ||x||_K without a dimension check; hot
    /// path for the integrators.
    pub fn gauge_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::LqBall { q, scale } => {
                let mut max = 0.0f64;
                for v in x {
                    max = max.max(v.abs());
                }
                if max == 0.0 {
                    return 0.0;
                }
                let mut acc = 0.0f64;
                for v in x {
                    acc += (v.abs() / max).powf(*q);
                }
                max * acc.powf(1.0 / q) / scale
            }
            BodyKind::Cube { half_side } => {
                let mut max = 0.0f64;
                for v in x {
                    max = max.max(v.abs());
                }
                max / half_side
            }
            BodyKind::CrossPolytope { scale } => x.iter().map(|v| v.abs()).sum::<f64>() / scale,
            BodyKind::Ellipsoid { axes } => {
                let mut acc = 0.0;
                for (v, a) in x.iter().zip(axes) {
                    let t = v / a;
                    acc += t * t;
                }
                acc.sqrt()
            }
            BodyKind::Custom { gauge } => gauge(x),
        }
    }

    /// The Minkowski functional ||x||_K = min{a >= 0 : x in aK}.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        Error::check_dim(self.dim, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("gauge argument must be finite"));
        }
        Ok(self.gauge_unchecked(x))
    }

    /// Radial function r_K(theta) = 1 / ||theta||_K for unit theta.
    pub fn radial(&self, theta: &[f64]) -> Result<f64> {
        Error::check_dim(self.dim, theta.len())?;
        if !geom::is_unit(theta, 1e-12) {
            return Err(Error::invalid("radial requires a unit direction"));
        }
        let g = self.gauge_unchecked(theta);
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::UnboundedBody {
                direction: theta.to_vec(),
            });
        }
        Ok(1.0 / g)
    }

    pub fn contains_point(&self, x: &[f64], tol: f64) -> Result<bool> {
        if tol < 0.0 {
            return Err(Error::invalid("tolerance must be nonnegative"));
        }
        Ok(self.gauge(x)? <= 1.0 + tol)
    }

    /// Volume by the polar formula n|K| = int_{S^{n-1}} r_K(theta)^n dtheta.
    ///
    /// The returned estimate always comes from quadrature, so it can be
    /// cross-checked against [`Self::exact_volume`] when one is known.
    pub fn volume(&self, cfg: &IntegrationConfig) -> ValueWithError {
        let n = self.dim;
        let mut v = quad::sphere_integrate(
            |theta| {
                let g = self.gauge_unchecked(theta);
                let r = if g > 0.0 {
                    (1.0 / g).min(self.bounding_radius)
                } else {
                    self.bounding_radius
                };
                r.powi(n as i32)
            },
            n,
            cfg,
        );
        v.value /= n as f64;
        v.std_error /= n as f64;
        v
    }

    /// Preferred volume for ratio computations: exact when known,
    /// otherwise the polar-formula estimate.
    pub fn volume_preferred(&self, cfg: &IntegrationConfig) -> ValueWithError {
        match self.exact_volume {
            Some(v) => ValueWithError::exact(v),
            None => self.volume(cfg),
        }
    }

    /// The same body scaled by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<StarBody> {
        if !(lambda > 0.0) {
            return Err(Error::invalid("scaling factor must be positive"));
        }
        let kind = match &self.kind {
            BodyKind::LqBall { q, scale } => BodyKind::LqBall {
                q: *q,
                scale: scale * lambda,
            },
            BodyKind::Cube { half_side } => BodyKind::Cube {
                half_side: half_side * lambda,
            },
            BodyKind::CrossPolytope { scale } => BodyKind::CrossPolytope {
                scale: scale * lambda,
            },
            BodyKind::Ellipsoid { axes } => BodyKind::Ellipsoid {
                axes: axes.iter().map(|a| a * lambda).collect(),
            },
            BodyKind::Custom { gauge } => {
                let g = gauge.clone();
                BodyKind::Custom {
                    gauge: Arc::new(move |x: &[f64]| g(&geom::scale(x, 1.0 / lambda)) ),
                }
            }
        };
        Ok(StarBody {
            dim: self.dim,
            kind,
            symmetric: self.symmetric,
            bounding_radius: self.bounding_radius * lambda,
            exact_volume: self.exact_volume.map(|v| v * lambda.powi(self.dim as i32)),
            warnings: self.warnings.clone(),
        })
    }
}

// ---------------------------------------------------------------------------
// JSON body specs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqBallSpec {
    pub n: usize,
    pub q: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeSpec {
    pub n: usize,
    pub half_side: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossPolytopeSpec {
    pub n: usize,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipsoidSpec {
    pub axes: Vec<f64>,
}

fn default_scale() -> f64 {
    1.0
}

/// Wire format for bodies, e.g. {"type":"lq_ball","n":3,"q":2.5,"scale":1.0}.
/// Unknown fields are rejected.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BodySpec {
    LqBall(LqBallSpec),
    Cube(CubeSpec),
    CrossPolytope(CrossPolytopeSpec),
    Ellipsoid(EllipsoidSpec),
}

// Hand-rolled tag dispatch: the derived internally-tagged deserializer
// buffers fields through serde's Content type, which mangles numbers when
// serde_json runs with arbitrary precision enabled.
impl<'de> Deserialize<'de> for BodySpec {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        use serde::de::Error as _;
        let mut value = serde_json::Value::deserialize(deserializer)?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| D::Error::custom("body spec must be a JSON object"))?;
        let tag = match obj.remove("type") {
            Some(serde_json::Value::String(s)) => s,
            _ => return Err(D::Error::custom("body spec needs a string `type` field")),
        };
        let rest = serde_json::Value::Object(std::mem::take(obj));
        let parsed = match tag.as_str() {
            "lq_ball" => serde_json::from_value(rest).map(BodySpec::LqBall),
            "cube" => serde_json::from_value(rest).map(BodySpec::Cube),
            "cross_polytope" => serde_json::from_value(rest).map(BodySpec::CrossPolytope),
            "ellipsoid" => serde_json::from_value(rest).map(BodySpec::Ellipsoid),
            other => return Err(D::Error::custom(format!("unknown body type `{other}`"))),
        };
        parsed.map_err(|e| D::Error::custom(format!("{tag}: {e}")))
    }
}

impl BodySpec {
    pub fn from_json(text: &str) -> Result<BodySpec> {
        serde_json::from_str(text).map_err(|e| Error::Spec(format!("body spec: {e}")))
    }

    pub fn build(&self) -> Result<StarBody> {
        match self {
            BodySpec::LqBall(s) => StarBody::lq_ball(s.n, s.q, s.scale),
            BodySpec::Cube(s) => StarBody::cube(s.n, s.half_side),
            BodySpec::CrossPolytope(s) => StarBody::cross_polytope(s.n, s.scale),
            BodySpec::Ellipsoid(s) => StarBody::ellipsoid(&s.axes),
        }
    }
}

pub fn body_from_json(text: &str) -> Result<StarBody> {
    BodySpec::from_json(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauge_vertex_and_l1_values() {
        let cube = StarBody::cube(3, 1.0).unwrap();
        assert_eq!(cube.gauge(&[2.0, 0.0, 0.0]).unwrap(), 2.0);
        let b1 = StarBody::cross_polytope(2, 1.0).unwrap();
        assert!((b1.gauge(&[0.3, 0.2]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gauge_l4_diagonal() {
        // (1^4 + 1^4)^{1/4} = 2^{1/4}
        let b4 = StarBody::lq_ball(2, 4.0, 1.0).unwrap();
        let g = b4.gauge(&[1.0, 1.0]).unwrap();
        assert!((g - 2.0f64.powf(0.25)).abs() < 1e-14, "{g}");
    }

    #[test]
    fn radial_values() {
        let ball = StarBody::lq_ball(3, 2.0, 1.0).unwrap();
        let r = ball.radial(&[0.0, 1.0, 0.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-15);

        let sq = StarBody::cube(2, 1.0).unwrap();
        let d = std::f64::consts::FRAC_1_SQRT_2;
        assert!((sq.radial(&[d, d]).unwrap() - 2.0f64.sqrt()).abs() < 1e-12);

        let b1 = StarBody::cross_polytope(3, 1.0).unwrap();
        let t = 1.0 / 3.0f64.sqrt();
        let r = b1.radial(&[t, t, t]).unwrap();
        assert!((r - 1.0 / 3.0f64.sqrt()).abs() < 1e-12, "{r}");
    }

    #[test]
    fn contains_point_boundary_and_outside() {
        let ball = StarBody::lq_ball(2, 2.0, 1.0).unwrap();
        assert!(ball.contains_point(&[0.0, 0.0], 0.0).unwrap());
        assert!(!ball.contains_point(&[1.5, 0.0], 0.0).unwrap());
        let sq = StarBody::cube(2, 1.0).unwrap();
        assert!(sq.contains_point(&[1.0, 1.0], 0.0).unwrap());
    }

    #[test]
    fn exact_volumes() {
        assert_eq!(StarBody::cube(3, 1.0).unwrap().exact_volume(), Some(8.0));
        let e = StarBody::ellipsoid(&[1.0, 2.0]).unwrap();
        assert!((e.exact_volume().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        let disk = StarBody::lq_ball(2, 2.0, 1.0).unwrap();
        assert!((disk.exact_volume().unwrap() - std::f64::consts::PI).abs() < 1e-12);
        let b1 = StarBody::cross_polytope(3, 1.0).unwrap();
        assert!((b1.exact_volume().unwrap() - 4.0 / 3.0).abs() < 1e-12);
        // cross-polytope and l_1 ball agree
        let l1 = StarBody::lq_ball(3, 1.0, 1.0).unwrap();
        assert!((l1.exact_volume().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn polar_volume_crosschecks_exact() {
        let cfg = IntegrationConfig {
            sphere_samples: 1 << 18,
            seed: 3,
            ..Default::default()
        };
        for body in [
            StarBody::lq_ball(2, 2.0, 1.0).unwrap(),
            StarBody::lq_ball(3, 1.5, 1.0).unwrap(),
            StarBody::cube(4, 0.5).unwrap(),
            StarBody::cross_polytope(3, 2.0).unwrap(),
            StarBody::ellipsoid(&[1.0, 2.0, 0.5]).unwrap(),
            StarBody::cube(1, 1.5).unwrap(),
        ] {
            let v = body.volume(&cfg);
            let exact = body.exact_volume().unwrap();
            assert!(
                (v.value - exact).abs() / exact < 5e-3,
                "{}: {} vs {exact}",
                body.describe(),
                v.value
            );
        }
    }

    #[test]
    fn q_infinite_maps_to_cube() {
        let b = StarBody::lq_ball(3, f64::INFINITY, 0.5).unwrap();
        assert_eq!(b.family_tag(), "cube");
        assert_eq!(b.exact_volume(), Some(1.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(StarBody::lq_ball(0, 2.0, 1.0).is_err());
        assert!(StarBody::lq_ball(2, -1.0, 1.0).is_err());
        assert!(StarBody::cube(2, 0.0).is_err());
        assert!(StarBody::ellipsoid(&[1.0, -2.0]).is_err());
        assert!(StarBody::ellipsoid(&[]).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let b = StarBody::cube(3, 1.0).unwrap();
        assert!(matches!(
            b.gauge(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn custom_body_checks_and_warns() {
        // A legitimate custom gauge: rotated square.
        let ok = StarBody::custom(
            2,
            |x: &[f64]| (x[0] + x[1]).abs().max((x[0] - x[1]).abs()),
            2.0f64.sqrt(),
            true,
        )
        .unwrap();
        assert!(ok.construction_warnings().is_empty());
        // Not homogeneous: gets flagged, not rejected.
        let bad = StarBody::custom(2, |x: &[f64]| geom::norm(x) + 0.1, 1.0, true).unwrap();
        assert!(!bad.construction_warnings().is_empty());
    }

    #[test]
    fn spec_json_round_trip_and_unknown_fields() {
        let b = body_from_json(r#"{"type":"lq_ball","n":3,"q":2.5,"scale":1.0}"#).unwrap();
        assert_eq!(b.dim(), 3);
        let b = body_from_json(r#"{"type":"cube","n":4,"half_side":0.5}"#).unwrap();
        assert_eq!(b.exact_volume(), Some(1.0));
        let b = body_from_json(r#"{"type":"ellipsoid","axes":[1.0,2.0,0.5]}"#).unwrap();
        assert_eq!(b.dim(), 3);
        assert!(body_from_json(r#"{"type":"cube","n":4,"half_side":0.5,"extra":1}"#).is_err());
        assert!(body_from_json(r#"{"type":"pyramid","n":3}"#).is_err());
    }

    #[test]
    fn scaled_body_scales_gauge_and_volume() {
        let b = StarBody::cross_polytope(3, 1.0).unwrap().scaled(2.0).unwrap();
        assert!((b.gauge(&[2.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((b.exact_volume().unwrap() - 8.0 * 4.0 / 3.0).abs() < 1e-12);
    }
}
