//! The bundled verification suite: twelve numbered checks covering the
//! quadrature identities, functional inequalities, distance bounds, and
//! determinism guarantees the library is built around. Each check returns
//! its worst observed margin so failures carry their evidence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use crate::bodies::{lq_ball_volume, StarBody};
use crate::densities::Density;
use crate::distances::{self, Witness};
use crate::geom;
use crate::moments;
use crate::quad::{self, IntegrationConfig, Method};
use crate::report::num17;
use crate::slicing::{self, Profile1d, SliceMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetProfile {
    /// Reduced matrices (n <= 4, p <= 4 where the check does not pin its
    /// own scope) and leaner quadrature budgets.
    Quick,
    /// The full matrices: n up to 6 and p up to 8.
    Full,
}

impl std::str::FromStr for BudgetProfile {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "quick" => Ok(BudgetProfile::Quick),
            "full" => Ok(BudgetProfile::Full),
            other => Err(format!("unknown budget profile `{other}` (quick|full)")),
        }
    }
}

impl BudgetProfile {
    pub fn as_str(&self) -> &'static str {
        match self {
            BudgetProfile::Quick => "quick",
            BudgetProfile::Full => "full",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    /// Instances examined.
    pub checks: usize,
    /// Worst observed figure (meaning depends on the check; see detail).
    pub worst: f64,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:02} {:<24} {}  ({})",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), Value::from(self.id as u64));
        m.insert("name".into(), Value::from(self.name));
        m.insert("passed".into(), Value::from(self.passed));
        m.insert("checks".into(), Value::from(self.checks as u64));
        m.insert("worst".into(), num17(self.worst));
        m.insert("detail".into(), Value::from(self.detail.clone()));
        Value::Object(m)
    }
}

#[derive(Debug, Clone)]
pub struct SuiteSummary {
    pub seed: u64,
    pub profile: BudgetProfile,
    pub criteria: Vec<CriterionResult>,
    pub all_passed: bool,
}

impl SuiteSummary {
    pub fn to_json_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("seed".into(), Value::from(self.seed));
        m.insert("profile".into(), Value::from(self.profile.as_str()));
        m.insert(
            "criteria".into(),
            Value::Array(self.criteria.iter().map(|c| c.to_json()).collect()),
        );
        m.insert("all_passed".into(), Value::from(self.all_passed));
        Value::Object(m)
    }

    pub fn lines(&self) -> Vec<String> {
        self.criteria.iter().map(|c| c.line()).collect()
    }
}

/// Run all twelve checks. Deterministic in (seed, profile): the summary
/// serializes to identical bytes across replays.
pub fn verify_suite(seed: u64, profile: BudgetProfile) -> SuiteSummary {
    let trace = std::env::var_os("SLICELAB_SUITE_TIMING").is_some();
    let timed = move |name: &str, f: &dyn Fn() -> CriterionResult| {
        let t0 = std::time::Instant::now();
        let r = f();
        if trace {
            eprintln!("[suite] {name}: {:?}", t0.elapsed());
        }
        r
    };
    let criteria = vec![
        timed("c01", &|| c01_spherical_identity(seed, profile)),
        timed("c02", &|| c02_polar_volume(seed, profile)),
        timed("c03", &|| c03_section_bound_equality(seed, profile)),
        timed("c04", &|| c04_section_bound_random(seed, profile)),
        timed("c05", &|| c05_functional_monotonicity(seed, profile)),
        timed("c06", &|| c06_slicing_desk_bound(seed, profile)),
        timed("c07", &|| c07_moment_ratio(seed, profile)),
        timed("c08", &|| c08_affine_ratio(seed, profile)),
        timed("c09", &|| c09_domination_transfer(seed, profile)),
        timed("c10", &|| c10_dovr_sanity(seed, profile)),
        timed("c11", &|| c11_spot_values(seed, profile)),
        timed("c12", &|| c12_determinism(seed, profile)),
    ];
    let all_passed = criteria.iter().all(|c| c.passed);
    SuiteSummary {
        seed,
        profile,
        criteria,
        all_passed,
    }
}

// ---------------------------------------------------------------------------
// Shared scaffolding
// ---------------------------------------------------------------------------

/// Deterministic engines where they exist (n <= 4), seeded QMC beyond.
fn base_cfg(seed: u64, n: usize, profile: BudgetProfile) -> IntegrationConfig {
    let full = profile == BudgetProfile::Full;
    let mut c = IntegrationConfig {
        seed,
        ..Default::default()
    };
    if n <= 4 {
        c.method = Method::ProductPolar;
        c.sphere_samples = if full { 1 << 17 } else { 1 << 16 };
    } else {
        c.sphere_samples = if full { 1 << 15 } else { 1 << 14 };
    }
    c.mc_samples = if full { 1 << 16 } else { 1 << 14 };
    c
}

fn suite_dims(profile: BudgetProfile) -> std::ops::RangeInclusive<usize> {
    match profile {
        BudgetProfile::Quick => 2..=4,
        BudgetProfile::Full => 2..=6,
    }
}

fn ellipsoid_axes(n: usize) -> Vec<f64> {
    (0..n).map(|i| 1.0 + i as f64 / (n.max(2) - 1) as f64).collect()
}

fn suite_bodies(n: usize, profile: BudgetProfile) -> Vec<(StarBody, String)> {
    let mut out = vec![
        (StarBody::cube(n, 0.5).unwrap(), format!("cube(n={n})")),
        (StarBody::lq_ball(n, 2.0, 1.0).unwrap(), format!("ball(n={n})")),
        (
            StarBody::cross_polytope(n, 1.0).unwrap(),
            format!("cross(n={n})"),
        ),
        (
            StarBody::ellipsoid(&ellipsoid_axes(n)).unwrap(),
            format!("ellipsoid(n={n})"),
        ),
    ];
    if profile == BudgetProfile::Full {
        out.push((
            StarBody::lq_ball(n, 1.5, 1.0).unwrap(),
            format!("l1.5-ball(n={n})"),
        ));
        out.push((StarBody::lq_ball(n, 4.0, 1.0).unwrap(), format!("l4-ball(n={n})")));
    }
    out
}

fn suite_densities(n: usize, profile: BudgetProfile) -> Vec<(Density, String)> {
    let mut out = vec![
        (Density::constant(n, 1.0).unwrap(), "const".to_string()),
        (Density::gaussian(n, 1.0).unwrap(), "gaussian(1)".to_string()),
        (
            Density::radial_power(n, 2.0).unwrap(),
            "radial^2".to_string(),
        ),
    ];
    if profile == BudgetProfile::Full {
        out.push((Density::exp_l1(n, 1.0).unwrap(), "exp-l1(1)".to_string()));
    }
    out
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let len = geom::norm(&v);
        if len > 1e-3 {
            return geom::scale(&v, 1.0 / len);
        }
    }
}

fn random_body(rng: &mut ChaCha8Rng, n: usize) -> (StarBody, String) {
    match rng.random_range(0..4u32) {
        0 => {
            let q = 1.0 + 3.0 * rng.random::<f64>();
            let s = 0.6 + 0.9 * rng.random::<f64>();
            (
                StarBody::lq_ball(n, q, s).unwrap(),
                format!("l{q:.2}-ball(r={s:.2})"),
            )
        }
        1 => {
            let h = 0.4 + 0.8 * rng.random::<f64>();
            (StarBody::cube(n, h).unwrap(), format!("cube(h={h:.2})"))
        }
        2 => {
            let s = 0.6 + 0.9 * rng.random::<f64>();
            (
                StarBody::cross_polytope(n, s).unwrap(),
                format!("cross(r={s:.2})"),
            )
        }
        _ => {
            let axes: Vec<f64> = (0..n).map(|_| 0.5 + 1.5 * rng.random::<f64>()).collect();
            (
                StarBody::ellipsoid(&axes).unwrap(),
                format!("ellipsoid({axes:.2?})"),
            )
        }
    }
}

fn random_density(rng: &mut ChaCha8Rng, n: usize) -> (Density, String) {
    match rng.random_range(0..5u32) {
        0 => {
            let c = 0.5 + 1.5 * rng.random::<f64>();
            (Density::constant(n, c).unwrap(), format!("const({c:.2})"))
        }
        1 => {
            let s = 0.6 + 0.9 * rng.random::<f64>();
            (Density::gaussian(n, s).unwrap(), format!("gauss({s:.2})"))
        }
        2 => {
            let a = [1.0, 2.0, 3.0][rng.random_range(0..3u32) as usize];
            (
                Density::radial_power(n, a).unwrap(),
                format!("radial^{a}"),
            )
        }
        3 => {
            let s = 0.8 + 0.8 * rng.random::<f64>();
            (Density::exp_l1(n, s).unwrap(), format!("exp-l1({s:.2})"))
        }
        _ => {
            let g = Density::gaussian(n, 1.0).unwrap();
            let c = Density::constant(n, 1.0).unwrap();
            let w = 0.2 + 0.6 * rng.random::<f64>();
            (
                Density::mixture(vec![(w, c), (1.0 - w, g)]).unwrap(),
                format!("mix({w:.2})"),
            )
        }
    }
}

struct Worst {
    value: f64,
    label: String,
    /// true = larger is worse
    ascending: bool,
}

impl Worst {
    fn largest() -> Worst {
        Worst {
            value: f64::NEG_INFINITY,
            label: String::new(),
            ascending: true,
        }
    }

    fn smallest() -> Worst {
        Worst {
            value: f64::INFINITY,
            label: String::new(),
            ascending: false,
        }
    }

    fn offer(&mut self, value: f64, label: impl Into<String>) {
        let worse = if self.ascending {
            value > self.value
        } else {
            value < self.value
        };
        if worse {
            self.value = value;
            self.label = label.into();
        }
    }
}

fn seed_for(seed: u64, criterion: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(criterion)
}

// ---------------------------------------------------------------------------
// 1. Spherical moment identity
// ---------------------------------------------------------------------------

/// |x|^p = c(n,p) * int_{S^{n-1}} |(x,theta)|^p dtheta for n in {2,3,4},
/// p in {1,2,3.5}, 20 random x each; relative error <= 1e-3.
fn c01_spherical_identity(seed: u64, profile: BudgetProfile) -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, 1));
    let mut worst = Worst::largest();
    let mut checks = 0;
    for n in [2usize, 3, 4] {
        let cfg = base_cfg(seed, n, profile);
        for p in [1.0, 2.0, 3.5] {
            let c = quad::spherical_constant(n, p);
            for _ in 0..20 {
                let radius = 0.5 + 1.5 * rng.random::<f64>();
                let x = geom::scale(&random_unit(&mut rng, n), radius);
                let integral = quad::sphere_integrate(
                    |theta: &[f64]| geom::dot(&x, theta).abs().powf(p),
                    n,
                    &cfg,
                );
                let lhs = radius.powf(p);
                let rel = (c * integral.value - lhs).abs() / lhs;
                worst.offer(rel, format!("n={n} p={p}"));
                checks += 1;
            }
        }
    }
    CriterionResult {
        id: 1,
        name: "spherical-identity",
        passed: worst.value <= 1e-3,
        checks,
        worst: worst.value,
        detail: format!(
            "worst rel {:.2e} at {} over {checks} checks (tol 1e-3)",
            worst.value, worst.label
        ),
    }
}

// ---------------------------------------------------------------------------
// 2. Polar volume against closed forms
// ---------------------------------------------------------------------------

/// Quadrature volume of lq balls, q in {1,2,4,inf}, n in {2..6}, within
/// 0.5% of the closed form.
fn c02_polar_volume(seed: u64, profile: BudgetProfile) -> CriterionResult {
    let mut worst = Worst::largest();
    let mut checks = 0;
    for n in 2..=6usize {
        let mut cfg = base_cfg(seed, n, profile);
        if n >= 5 {
            cfg.sphere_samples = if profile == BudgetProfile::Full {
                1 << 18
            } else {
                1 << 17
            };
        }
        for q in [1.0, 2.0, 4.0, f64::INFINITY] {
            let body = StarBody::lq_ball(n, q, 1.0).unwrap();
            let vol = body.volume(&cfg);
            let exact = lq_ball_volume(n, q);
            let rel = (vol.value - exact).abs() / exact;
            worst.offer(rel, format!("q={q} n={n}"));
            checks += 1;
        }
    }
    CriterionResult {
        id: 2,
        name: "polar-volume",
        passed: worst.value <= 5e-3,
        checks,
        worst: worst.value,
        detail: format!(
            "worst rel {:.2e} at {} over {checks} checks (tol 5e-3)",
            worst.value, worst.label
        ),
    }
}

// ---------------------------------------------------------------------------
// 3. Section moment bound: cube equality case
// ---------------------------------------------------------------------------

/// Cube + uniform density + axis direction makes the section bound an
/// identity: |LHS/RHS - 1| <= 1e-3 for p in {1,2,5}, n in {2,3,4}.
fn c03_section_bound_equality(seed: u64, profile: BudgetProfile) -> CriterionResult {
    let mut worst = Worst::largest();
    let mut checks = 0;
    let mut failed_run = None;
    for n in [2usize, 3, 4] {
        let cfg = base_cfg(seed, n, profile);
        let cube = StarBody::cube(n, 0.5).unwrap();
        let f = Density::constant(n, 1.0).unwrap();
        let xi = geom::axis(n, n - 1);
        for p in [1.0, 2.0, 5.0] {
            match slicing::section_moment_bound(&cube, &f, p, &xi, &cfg) {
                Ok(b) => {
                    let dev = (b.lhs / b.rhs - 1.0).abs();
                    worst.offer(dev, format!("n={n} p={p}"));
                }
                Err(e) => failed_run = Some(format!("n={n} p={p}: {e}")),
            }
            checks += 1;
        }
    }
    let passed = failed_run.is_none() && worst.value <= 1e-3;
    CriterionResult {
        id: 3,
        name: "section-bound-equality",
        passed,
        checks,
        worst: worst.value,
        detail: match failed_run {
            Some(e) => format!("run failed: {e}"),
            None => format!(
                "worst |lhs/rhs-1| {:.2e} at {} over {checks} checks (tol 1e-3)",
                worst.value, worst.label
            ),
        },
    }
}

// ---------------------------------------------------------------------------
// 4. Section moment bound: randomized instances
// ---------------------------------------------------------------------------

/// 100 random (body, density, direction, p) instances: the bound holds
/// with margin >= -2 * combined error; zero hard violations.
fn c04_section_bound_random(seed: u64, profile: BudgetProfile) -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, 4));
    let mut worst = Worst::smallest();
    let mut violations = 0;
    let mut errors = 0;
    let checks: usize = 100;
    for k in 0..checks {
        let n = 2 + (k % 3);
        let mut cfg = base_cfg(seed.wrapping_add(k as u64), n, profile);
        cfg.method = Method::Qmc;
        cfg.sphere_samples = 4096;
        cfg.radial_nodes = 24;
        cfg.mc_samples = 1 << 14;
        let (body, btag) = random_body(&mut rng, n);
        let (f, ftag) = random_density(&mut rng, n);
        let xi = random_unit(&mut rng, n);
        let p = [0.5, 1.0, 2.0, 5.0][k % 4];
        match slicing::section_moment_bound(&body, &f, p, &xi, &cfg) {
            Ok(b) => {
                let scale = b.rhs.abs().max(1e-300);
                worst.offer(
                    (b.margin + 2.0 * b.combined_error) / scale,
                    format!("{btag} {ftag} p={p}"),
                );
                if !b.holds {
                    violations += 1;
                }
            }
            Err(_) => errors += 1,
        }
    }
    CriterionResult {
        id: 4,
        name: "section-bound-random",
        passed: violations == 0 && errors == 0,
        checks,
        worst: worst.value,
        detail: format!(
            "{violations} violations, {errors} errors over {checks} instances; slackest rel margin {:.2e} at {}",
            worst.value, worst.label
        ),
    }
}

// ---------------------------------------------------------------------------
// 5. One-dimensional moment functional monotonicity
// ---------------------------------------------------------------------------

/// F(q) non-decreasing on the grid {0, 0.5, ..., 8} for 200 random step
/// profiles (slack 1e-6), and exactly constant (1e-9) for indicators.
fn c05_functional_monotonicity(seed: u64, _profile: BudgetProfile) -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, 5));
    let mut worst = Worst::smallest();
    let mut violations = 0;
    let mut checks = 0;
    for k in 0..200u64 {
        let cells = [8usize, 16, 32][rng.random_range(0..3u32) as usize];
        let half_width = 0.5 + 1.5 * rng.random::<f64>();
        let g = Profile1d::random_steps(cells, half_width, rng.random::<u64>()).unwrap();
        let mut prev = f64::NEG_INFINITY;
        let mut q = 0.0;
        while q <= 8.0 + 1e-12 {
            let fq = slicing::moment_functional(&g, q).unwrap();
            let slack = fq - prev;
            if prev.is_finite() {
                worst.offer(slack, format!("steps#{k} q={q}"));
                if slack < -1e-6 {
                    violations += 1;
                }
            }
            prev = fq;
            q += 0.5;
            checks += 1;
        }
    }
    let mut indicator_worst: f64 = 0.0;
    for a in [0.5, 1.0, 2.0] {
        let g = Profile1d::indicator(a).unwrap();
        let mut q = 0.0;
        while q <= 8.0 + 1e-12 {
            let fq = slicing::moment_functional(&g, q).unwrap();
            indicator_worst = indicator_worst.max((fq - a).abs());
            q += 0.5;
            checks += 1;
        }
    }
    let passed = violations == 0 && indicator_worst <= 1e-9;
    CriterionResult {
        id: 5,
        name: "functional-monotone",
        passed,
        checks,
        worst: worst.value,
        detail: format!(
            "{violations} monotonicity violations (slack tol 1e-6, min step {:.2e} at {}); indicator constancy dev {:.2e} (tol 1e-9)",
            worst.value, worst.label, indicator_worst
        ),
    }
}

// ---------------------------------------------------------------------------
// 6. Central slicing constant desk bound
// ---------------------------------------------------------------------------

/// S_hat <= 2 sqrt(n) for every built-in symmetric convex body and even
/// density, n <= 6.
fn c06_slicing_desk_bound(seed: u64, profile: BudgetProfile) -> CriterionResult {
    let mut worst = Worst::largest();
    let mut checks = 0;
    let mut errors = 0;
    for n in suite_dims(profile) {
        let mut cfg = base_cfg(seed, n, profile);
        cfg.mc_samples = cfg.mc_samples.min(1 << 14);
        let bound = 2.0 * (n as f64).sqrt();
        for (body, btag) in suite_bodies(n, profile) {
            for (f, ftag) in suite_densities(n, profile) {
                match slicing::slicing_constant(&body, &f, SliceMode::Central, &cfg) {
                    Ok(rep) => {
                        worst.offer(rep.s_hat / bound, format!("{btag} {ftag}"));
                    }
                    Err(_) => errors += 1,
                }
                checks += 1;
            }
        }
    }
    CriterionResult {
        id: 6,
        name: "slicing-desk-bound",
        passed: errors == 0 && worst.value <= 1.0,
        checks,
        worst: worst.value,
        detail: format!(
            "max S_hat/(2 sqrt(n)) = {:.3} at {} over {checks} checks; {errors} errors",
            worst.value, worst.label
        ),
    }
}

// ---------------------------------------------------------------------------
// 7. Normalized minimum-moment ratio
// ---------------------------------------------------------------------------

/// (min_moment/mass)^{1/p} / (sqrt(p) V_hat) <= 3 over the suite.
fn c07_moment_ratio(seed: u64, profile: BudgetProfile) -> CriterionResult {
    let ps: &[f64] = match profile {
        BudgetProfile::Quick => &[1.0, 2.0, 4.0],
        BudgetProfile::Full => &[1.0, 2.0, 4.0, 8.0],
    };
    let mut worst = Worst::largest();
    let mut checks = 0;
    let mut errors = 0;
    for n in suite_dims(profile) {
        // The bound has an order of magnitude of slack (observed ratios stay
        // below 0.5), so a lean randomized budget is plenty here.
        let mut cfg = base_cfg(seed, n, profile);
        cfg.method = Method::Qmc;
        cfg.sphere_samples = 1 << 13;
        cfg.radial_nodes = 16;
        cfg.mc_samples = 1 << 14;
        let f = Density::constant(n, 1.0).unwrap();
        let g = Density::gaussian(n, 1.0).unwrap();
        for (body, btag) in suite_bodies(n, profile) {
            for &p in ps {
                let mut witnesses = vec![
                    Witness::euclidean_ball(n, p, 1.0).unwrap(),
                    Witness::lp_ball(n, p, 1.0).unwrap(),
                ];
                if btag.starts_with("ellipsoid") {
                    witnesses.push(Witness::ellipsoid(&ellipsoid_axes(n), p).unwrap());
                }
                let mut densities: Vec<(&Density, &str)> = vec![(&f, "const")];
                if btag.starts_with("cube") || btag.starts_with("ball") {
                    densities.push((&g, "gauss"));
                }
                for (den, dtag) in &densities {
                    match moments::moment_bound_ratio(&body, den, p, &witnesses, &cfg) {
                        Ok(rep) => {
                            worst.offer(rep.ratio, format!("{btag} {dtag} p={p}"));
                        }
                        Err(_) => errors += 1,
                    }
                    checks += 1;
                }
            }
        }
    }
    CriterionResult {
        id: 7,
        name: "moment-ratio",
        passed: errors == 0 && worst.value <= 3.0,
        checks,
        worst: worst.value,
        detail: format!(
            "max ratio {:.3} at {} over {checks} instances (bound 3); {errors} errors",
            worst.value, worst.label
        ),
    }
}

// ---------------------------------------------------------------------------
// 8. Affine slicing ratio
// ---------------------------------------------------------------------------

/// C_hat <= 3 for p in {3,4,8}; p in {1,2} runs report-only.
fn c08_affine_ratio(seed: u64, profile: BudgetProfile) -> CriterionResult {
    let ps: &[f64] = match profile {
        BudgetProfile::Quick => &[3.0, 4.0],
        BudgetProfile::Full => &[3.0, 4.0, 8.0],
    };
    let mut worst = Worst::largest();
    let mut report_only_max: f64 = f64::NEG_INFINITY;
    let mut checks = 0;
    let mut errors = 0;
    for n in suite_dims(profile) {
        let mut cfg = base_cfg(seed, n, profile);
        cfg.mc_samples = cfg.mc_samples.min(1 << 14);
        let f = Density::constant(n, 1.0).unwrap();
        let bodies = [
            (StarBody::cube(n, 0.5).unwrap(), format!("cube(n={n})")),
            (StarBody::lq_ball(n, 2.0, 1.0).unwrap(), format!("ball(n={n})")),
            (
                StarBody::cross_polytope(n, 1.0).unwrap(),
                format!("cross(n={n})"),
            ),
        ];
        for (body, btag) in &bodies {
            for &p in ps {
                let witnesses = [
                    Witness::euclidean_ball(n, p, 1.0).unwrap(),
                    Witness::lp_ball(n, p, 1.0).unwrap(),
                ];
                let run = distances::dovr_upper(body, p, &witnesses, &cfg).and_then(|d| {
                    slicing::affine_slicing_ratio(body, &f, p, d.dovr_upper, &cfg)
                });
                match run {
                    Ok(rep) => worst.offer(rep.c_hat, format!("{btag} p={p}")),
                    Err(_) => errors += 1,
                }
                checks += 1;
            }
        }
        // low-exponent cases: recorded, not asserted
        if n <= 3 {
            for p in [1.0, 2.0] {
                let body = StarBody::lq_ball(n, 2.0, 1.0).unwrap();
                let witnesses = [Witness::euclidean_ball(n, p, 1.0).unwrap()];
                if let Ok(rep) = distances::dovr_upper(&body, p, &witnesses, &cfg)
                    .and_then(|d| slicing::affine_slicing_ratio(&body, &f, p, d.dovr_upper, &cfg))
                {
                    report_only_max = report_only_max.max(rep.c_hat);
                }
            }
        }
    }
    CriterionResult {
        id: 8,
        name: "affine-ratio",
        passed: errors == 0 && worst.value <= 3.0,
        checks,
        worst: worst.value,
        detail: format!(
            "max C_hat {:.3} at {} over {checks} instances (bound 3); {errors} errors; report-only p<=2 max {:.3}",
            worst.value, worst.label, report_only_max
        ),
    }
}

// ---------------------------------------------------------------------------
// 9. Moment domination mass transfer
// ---------------------------------------------------------------------------

/// 100 randomized instances with K inside M (so the direction-grid
/// hypothesis verifies): the mass conclusion holds with margin >= -2 err.
fn c09_domination_transfer(seed: u64, profile: BudgetProfile) -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, 9));
    let mut worst = Worst::smallest();
    let mut hypothesis_misses = 0;
    let mut violations = 0;
    let mut errors = 0;
    let checks: usize = 100;
    for k in 0..checks {
        let n = 2 + (k % 3);
        let mut cfg = base_cfg(seed.wrapping_add(k as u64), n, profile);
        cfg.method = Method::Qmc;
        cfg.sphere_samples = 4096;
        cfg.mc_samples = 1 << 14;
        let (m, mtag) = random_body(&mut rng, n);
        let (b, _) = random_body(&mut rng, n);
        let (f, ftag) = random_density(&mut rng, n);
        let p = [1.0, 2.0, 3.0, 5.0][k % 4];
        let d = match rng.random_range(0..3u32) {
            0 => StarBody::lq_ball(n, 2.0, 1.0).unwrap(),
            1 => StarBody::cube(n, 1.0).unwrap(),
            _ => m.clone(),
        };
        // shrink b until it sits strictly inside m; containment makes the
        // moment hypothesis hold for any nonnegative density
        let inst = distances::contains_body(&b, &m, &cfg).and_then(|cont| {
            let u = 0.5 + 0.4 * rng.random::<f64>();
            let k_body = b.scaled(u / cont.margin.max(1e-6))?;
            distances::moment_domination(&k_body, &m, &f, p, &d, &cfg)
        });
        match inst {
            Ok(rep) => {
                if rep.status != distances::DominationStatus::Ok {
                    hypothesis_misses += 1;
                    continue;
                }
                let scale = rep.conclusion_rhs.abs().max(1e-300);
                let rel_margin =
                    (rep.conclusion_rhs - rep.conclusion_lhs + 2.0 * rep.conclusion_error) / scale;
                worst.offer(rel_margin, format!("{mtag} {ftag} p={p}"));
                if !rep.conclusion_holds {
                    violations += 1;
                }
            }
            Err(_) => errors += 1,
        }
    }
    CriterionResult {
        id: 9,
        name: "domination-transfer",
        passed: violations == 0 && errors == 0 && hypothesis_misses == 0,
        checks,
        worst: worst.value,
        detail: format!(
            "{violations} conclusion violations, {hypothesis_misses} hypothesis misses, {errors} errors over {checks}; slackest rel margin {:.2e} at {}",
            worst.value, worst.label
        ),
    }
}

// ---------------------------------------------------------------------------
// 10. Outer-volume-ratio distance sanity
// ---------------------------------------------------------------------------

fn c10_dovr_sanity(seed: u64, profile: BudgetProfile) -> CriterionResult {
    let mut checks = 0;
    let mut failures: Vec<String> = Vec::new();
    let mut worst = Worst::largest();

    // (a) self-witness gives exactly 1
    for (n, q) in [(2usize, 1.0), (2, 2.0), (3, 2.0), (3, 3.0)] {
        let cfg = base_cfg(seed, n, profile);
        let body = StarBody::lq_ball(n, q, 1.0).unwrap();
        let w = Witness::lp_ball(n, q, 1.0).unwrap();
        match distances::dovr_upper(&body, q, &[w], &cfg) {
            Ok(rep) => {
                let dev = (rep.dovr_upper - 1.0).abs();
                worst.offer(dev / 1e-3, format!("self q={q} n={n}"));
                if dev > 1e-3 {
                    failures.push(format!("self-witness q={q} n={n}: {}", rep.dovr_upper));
                }
            }
            Err(e) => failures.push(format!("self-witness q={q} n={n}: {e}")),
        }
        checks += 1;
    }

    // (b) square in a disk: sqrt(2) scaling, bound sqrt(pi/2)
    {
        let cfg = base_cfg(seed, 2, profile);
        let cube = StarBody::cube(2, 1.0).unwrap();
        let w = Witness::euclidean_ball(2, 2.0, 1.0).unwrap();
        let exact = (std::f64::consts::PI / 2.0).sqrt();
        match distances::dovr_upper(&cube, 2.0, &[w], &cfg) {
            Ok(rep) => {
                let rel = (rep.dovr_upper - exact).abs() / exact;
                worst.offer(rel / 1e-2, "square-in-disk".to_string());
                if rel > 1e-2 {
                    failures.push(format!("square-in-disk: {} vs {exact}", rep.dovr_upper));
                }
            }
            Err(e) => failures.push(format!("square-in-disk: {e}")),
        }
        checks += 1;
    }

    // (c) ball witness stays within sqrt(n) on the built-in convex bodies
    for n in suite_dims(profile) {
        let cfg = base_cfg(seed, n, profile);
        let john = (n as f64).sqrt();
        for (body, btag) in suite_bodies(n, profile) {
            let w = Witness::euclidean_ball(n, 2.0, 1.0).unwrap();
            match distances::dovr_upper(&body, 2.0, &[w], &cfg) {
                Ok(rep) => {
                    worst.offer(rep.dovr_upper / (john * (1.0 + 1e-6)), btag.clone());
                    if rep.dovr_upper > john * (1.0 + 1e-6) {
                        failures.push(format!("{btag}: {} > sqrt({n})", rep.dovr_upper));
                    }
                }
                Err(e) => failures.push(format!("{btag}: {e}")),
            }
            checks += 1;
        }
    }

    CriterionResult {
        id: 10,
        name: "dovr-sanity",
        passed: failures.is_empty(),
        checks,
        worst: worst.value,
        detail: if failures.is_empty() {
            format!(
                "self=1, square-in-disk, and sqrt(n) covers all hold over {checks} checks (worst normalized {:.3} at {})",
                worst.value, worst.label
            )
        } else {
            failures.join("; ")
        },
    }
}

// ---------------------------------------------------------------------------
// 11. Closed-form spot values
// ---------------------------------------------------------------------------

fn c11_spot_values(seed: u64, profile: BudgetProfile) -> CriterionResult {
    let mut worst = Worst::largest();
    let mut checks = 0;
    let mut errors = 0;

    let cfg2 = base_cfg(seed, 2, profile);
    let disk = StarBody::lq_ball(2, 2.0, 1.0).unwrap();
    let f2 = Density::constant(2, 1.0).unwrap();
    match moments::moment(&disk, &f2, 1.0, &[1.0, 0.0], &cfg2) {
        Ok(v) => worst.offer((v.value - 4.0 / 3.0).abs() / (4.0 / 3.0), "disk p=1 moment"),
        Err(_) => errors += 1,
    }
    checks += 1;

    let cfg3 = base_cfg(seed, 3, profile);
    let cube = StarBody::cube(3, 0.5).unwrap();
    let f3 = Density::constant(3, 1.0).unwrap();
    for p in [1.0, 2.0, 5.0] {
        let exact = 2f64.powf(-p) / (p + 1.0);
        match moments::moment(&cube, &f3, p, &[0.0, 0.0, 1.0], &cfg3) {
            Ok(v) => worst.offer((v.value - exact).abs() / exact, format!("cube p={p} moment")),
            Err(_) => errors += 1,
        }
        checks += 1;
    }

    match slicing::slicing_constant(&disk, &f2, SliceMode::Central, &cfg2) {
        Ok(rep) => {
            let exact = std::f64::consts::PI.sqrt() / 2.0;
            worst.offer((rep.s_hat - exact).abs() / exact, "disk slicing constant");
        }
        Err(_) => errors += 1,
    }
    checks += 1;

    CriterionResult {
        id: 11,
        name: "spot-values",
        passed: errors == 0 && worst.value <= 1e-3,
        checks,
        worst: worst.value,
        detail: format!(
            "worst rel {:.2e} at {} over {checks} values (tol 1e-3); {errors} errors",
            worst.value, worst.label
        ),
    }
}

// ---------------------------------------------------------------------------
// 12. Determinism
// ---------------------------------------------------------------------------

/// Re-runs a representative subset with the same seed and compares the
/// serialized results byte for byte.
fn c12_determinism(seed: u64, profile: BudgetProfile) -> CriterionResult {
    let run = || {
        let subset = vec![
            c01_spherical_identity(seed, BudgetProfile::Quick),
            c03_section_bound_equality(seed, BudgetProfile::Quick),
            c11_spot_values(seed, BudgetProfile::Quick),
        ];
        let vals: Vec<Value> = subset.iter().map(|c| c.to_json()).collect();
        serde_json::to_string(&vals).expect("criterion serialization")
    };
    let first = run();
    let second = run();
    let passed = first == second;
    let _ = profile;
    CriterionResult {
        id: 12,
        name: "determinism",
        passed,
        checks: 2,
        worst: if passed { 0.0 } else { 1.0 },
        detail: if passed {
            format!("double run of 3 checks byte-identical ({} bytes)", first.len())
        } else {
            "replay produced different bytes".to_string()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_is_deterministic_and_counts_twelve() {
        let a = verify_suite(7, BudgetProfile::Quick);
        assert_eq!(a.criteria.len(), 12);
        let b = verify_suite(7, BudgetProfile::Quick);
        assert_eq!(
            serde_json::to_string(&a.to_json_value()).unwrap(),
            serde_json::to_string(&b.to_json_value()).unwrap()
        );
        for c in &a.criteria {
            assert!(!c.line().is_empty());
        }
    }
}
