//! Derivative-free minimization over unit directions.
//!
//! Multi-start simplex descent on tangent charts of the sphere: each start
//! runs Nelder-Mead in chart coordinates u -> normalize(b + U u), then
//! re-centers the chart at the incumbent and repeats with a smaller initial
//! step. Starts run concurrently; the merge is deterministic by
//! (value, lexicographic direction), so results do not depend on scheduling.

use rayon::prelude::*;

use crate::geom;
use crate::quad;

/// Outcome of a multi-start direction search. `best_value` is the best
/// value found — an upper bound on the true minimum.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub direction: Vec<f64>,
    pub value: f64,
    /// Best value reached from each start, in start order.
    pub start_values: Vec<f64>,
    /// Where each start converged (sign-canonical), in start order.
    pub start_directions: Vec<Vec<f64>>,
}

impl SearchOutcome {
    /// Distinct converged directions ordered best-first; `max_count` caps
    /// the list, directions closer than `align_tol` in |cosine| collapse.
    pub fn distinct_minima(&self, max_count: usize, align_tol: f64) -> Vec<(Vec<f64>, f64)> {
        self.distinct_by(max_count, align_tol, false)
    }

    /// As `distinct_minima`, for outcomes produced by maximization.
    pub fn distinct_maxima(&self, max_count: usize, align_tol: f64) -> Vec<(Vec<f64>, f64)> {
        self.distinct_by(max_count, align_tol, true)
    }

    fn distinct_by(&self, max_count: usize, align_tol: f64, descending: bool) -> Vec<(Vec<f64>, f64)> {
        let mut order: Vec<usize> = (0..self.start_values.len()).collect();
        order.sort_by(|&a, &b| {
            let cmp = self.start_values[a]
                .partial_cmp(&self.start_values[b])
                .unwrap_or(std::cmp::Ordering::Equal);
            let cmp = if descending { cmp.reverse() } else { cmp };
            cmp.then_with(|| {
                if geom::lex_less(&self.start_directions[a], &self.start_directions[b]) {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                }
            })
        });
        let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
        for i in order {
            let d = &self.start_directions[i];
            let dup = out
                .iter()
                .any(|(seen, _)| geom::dot(seen, d).abs() > 1.0 - align_tol);
            if !dup {
                out.push((d.clone(), self.start_values[i]));
                if out.len() == max_count {
                    break;
                }
            }
        }
        out
    }
}

impl SearchOutcome {
    /// Relative spread of per-start outcomes around the best value;
    /// small spread suggests the landscape has a single basin.
    pub fn start_spread(&self) -> f64 {
        let best = self.value;
        let worst = self.start_values.iter().cloned().fold(best, f64::max);
        let scale = best.abs().max(1e-300);
        (worst - best) / scale
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub random_starts: usize,
    pub rounds: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            random_starts: 8,
            rounds: 2,
            max_iters: 220,
            seed: 0,
        }
    }
}

fn chart_point(base: &[f64], basis: &[Vec<f64>], u: &[f64], out: &mut [f64]) {
    out.copy_from_slice(base);
    for (ui, tv) in u.iter().zip(basis) {
        for (o, t) in out.iter_mut().zip(tv) {
            *o += ui * t;
        }
    }
    let len = geom::norm(out);
    // u large enough to cancel the base point cannot happen for |u| < 1,
    // which the simplex sizes keep well clear of.
    for o in out.iter_mut() {
        *o /= len;
    }
}

fn nelder_mead<F>(f: &F, base: &[f64], step: f64, max_iters: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = base.len();
    let d = n - 1;
    let basis = geom::orthonormal_complement(base);
    let mut theta = vec![0.0; n];
    let eval_u = |u: &[f64], theta: &mut Vec<f64>| -> f64 {
        chart_point(base, &basis, u, theta);
        f(theta)
    };

    // simplex: d+1 vertices in chart coordinates
    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    verts.push(vec![0.0; d]);
    for i in 0..d {
        let mut v = vec![0.0; d];
        v[i] = step;
        verts.push(v);
    }
    let mut vals: Vec<f64> = verts.iter().map(|v| eval_u(v, &mut theta)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..max_iters {
        // order ascending by value; ties by lexicographic vertex for determinism
        let mut idx: Vec<usize> = (0..=d).collect();
        idx.sort_by(|&a, &b| {
            vals[a]
                .partial_cmp(&vals[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| {
                    if geom::lex_less(&verts[a], &verts[b]) {
                        std::cmp::Ordering::Less
                    } else {
                        std::cmp::Ordering::Greater
                    }
                })
        });
        let reordered: Vec<Vec<f64>> = idx.iter().map(|&i| verts[i].clone()).collect();
        let revals: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
        verts = reordered;
        vals = revals;

        let diam = verts[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&verts[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        // Chart-coordinate accuracy 1e-8 gives direction components well past
        // quadrature noise; the objective is flat to second order there.
        if diam < 1e-8 && (vals[d] - vals[0]).abs() < 1e-12 * (1.0 + vals[0].abs()) {
            break;
        }

        // centroid of all but worst
        let mut cen = vec![0.0; d];
        for v in &verts[..d] {
            for (c, x) in cen.iter_mut().zip(v) {
                *c += x / d as f64;
            }
        }
        let worst = vals[d];
        let mut refl = vec![0.0; d];
        for i in 0..d {
            refl[i] = cen[i] + alpha * (cen[i] - verts[d][i]);
        }
        let refl_val = eval_u(&refl, &mut theta);

        if refl_val < vals[0] {
            let mut exp = vec![0.0; d];
            for i in 0..d {
                exp[i] = cen[i] + gamma * (refl[i] - cen[i]);
            }
            let exp_val = eval_u(&exp, &mut theta);
            if exp_val < refl_val {
                verts[d] = exp;
                vals[d] = exp_val;
            } else {
                verts[d] = refl;
                vals[d] = refl_val;
            }
        } else if refl_val < vals[d - 1] {
            verts[d] = refl;
            vals[d] = refl_val;
        } else {
            let (cx, cv) = if refl_val < worst {
                let mut c = vec![0.0; d];
                for i in 0..d {
                    c[i] = cen[i] + rho * (refl[i] - cen[i]);
                }
                let v = eval_u(&c, &mut theta);
                (c, v)
            } else {
                let mut c = vec![0.0; d];
                for i in 0..d {
                    c[i] = cen[i] - rho * (cen[i] - verts[d][i]);
                }
                let v = eval_u(&c, &mut theta);
                (c, v)
            };
            if cv < worst.min(refl_val) {
                verts[d] = cx;
                vals[d] = cv;
            } else {
                // shrink toward best
                for k in 1..=d {
                    for i in 0..d {
                        verts[k][i] = verts[0][i] + sigma * (verts[k][i] - verts[0][i]);
                    }
                    vals[k] = eval_u(&verts[k].clone(), &mut theta);
                }
            }
        }
    }

    let mut best = 0;
    for k in 1..=d {
        if vals[k] < vals[best] {
            best = k;
        }
    }
    let mut out = vec![0.0; n];
    chart_point(base, &basis, &verts[best], &mut out);
    (out, vals[best])
}

fn run_start<F>(f: &F, start: &[f64], cfg: &SearchConfig) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let mut base = start.to_vec();
    let mut best_val = f(&base);
    let mut step = 0.35;
    for _ in 0..cfg.rounds.max(1) {
        let (theta, val) = nelder_mead(f, &base, step, cfg.max_iters);
        if val < best_val {
            best_val = val;
            base = theta;
        }
        step *= 0.15;
    }
    (base, best_val)
}

/// Simplex descent from one given start, no extra starts. For callers that
/// already hold good candidates (e.g. from dense sampling).
pub fn refine_minimum<F>(f: F, start: &[f64], cfg: &SearchConfig) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    if start.len() == 1 {
        return (start.to_vec(), f(start));
    }
    run_start(&f, start, cfg)
}

/// Minimize `f` over S^{n-1}. Starts: the 2n signed axes plus
/// `random_starts` seeded directions. Returned direction is sign-canonical
/// when both signs attain the value (even objectives).
pub fn minimize_direction<F>(f: F, n: usize, cfg: &SearchConfig) -> SearchOutcome
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(n >= 1, "dimension must be at least 1");
    if n == 1 {
        let plus = f(&[1.0]);
        let minus = f(&[-1.0]);
        let (direction, value) = if minus < plus {
            (vec![-1.0], minus)
        } else if plus < minus {
            (vec![1.0], plus)
        } else {
            (geom::canonical_sign(&[1.0]), plus)
        };
        return SearchOutcome {
            direction,
            value,
            start_values: vec![plus, minus],
            start_directions: vec![vec![1.0], vec![-1.0]],
        };
    }

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(2 * n + cfg.random_starts);
    for i in 0..n {
        let e = geom::axis(n, i);
        starts.push(e.clone());
        starts.push(geom::neg(&e));
    }
    let rand = quad::direction_batch(n, cfg.random_starts, cfg.seed, 0x535452, false);
    for j in 0..cfg.random_starts {
        starts.push(rand[j * n..(j + 1) * n].to_vec());
    }

    let results: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|s| run_start(&f, s, cfg))
        .collect();

    let start_values: Vec<f64> = results.iter().map(|(_, v)| *v).collect();
    let start_directions: Vec<Vec<f64>> = results
        .iter()
        .map(|(theta, _)| geom::canonical_sign(theta))
        .collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (cand, val) in start_directions.iter().zip(&start_values) {
        // prefer smaller value; break exact ties lexicographically
        let replace = match &best {
            None => true,
            Some((bt, bv)) => val < bv || (val == bv && geom::lex_less(cand, bt)),
        };
        if replace {
            best = Some((cand.clone(), *val));
        }
    }
    let (direction, value) = best.expect("at least one start");
    SearchOutcome {
        direction,
        value,
        start_values,
        start_directions,
    }
}

/// Maximize `f` over S^{n-1} (negated minimization).
pub fn maximize_direction<F>(f: F, n: usize, cfg: &SearchConfig) -> SearchOutcome
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut out = minimize_direction(|x: &[f64]| -f(x), n, cfg);
    out.value = -out.value;
    for v in out.start_values.iter_mut() {
        *v = -*v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_quadratic_minimum() {
        let c = [3.0, 1.0, 2.0];
        let f = |th: &[f64]| th.iter().zip(&c).map(|(t, ci)| ci * t * t).sum::<f64>();
        let out = minimize_direction(f, 3, &SearchConfig::default());
        assert!((out.value - 1.0).abs() < 1e-9, "{}", out.value);
        assert!(out.direction[1].abs() > 1.0 - 1e-5, "{:?}", out.direction);
    }

    #[test]
    fn maximizes_inner_product_magnitude() {
        let a = [0.3, -1.2, 0.5, 0.7];
        let na = geom::norm(&a);
        let out = maximize_direction(|th: &[f64]| geom::dot(th, &a).abs(), 4, &SearchConfig::default());
        assert!((out.value - na).abs() < 1e-7, "{} vs {na}", out.value);
        let align = geom::dot(&out.direction, &a).abs() / na;
        assert!(align > 1.0 - 1e-8, "{align}");
    }

    #[test]
    fn circle_minimum() {
        let out = minimize_direction(|th: &[f64]| th[0] * th[0], 2, &SearchConfig::default());
        assert!(out.value < 1e-12);
        assert!(out.direction[1].abs() > 1.0 - 1e-6);
    }

    #[test]
    fn one_dimensional_directions() {
        let out = minimize_direction(|th: &[f64]| th[0], 1, &SearchConfig::default());
        assert_eq!(out.direction, vec![-1.0]);
        assert_eq!(out.value, -1.0);
        let even = minimize_direction(|th: &[f64]| th[0] * th[0], 1, &SearchConfig::default());
        assert_eq!(even.direction, geom::canonical_sign(&[1.0]));
    }

    #[test]
    fn search_is_deterministic() {
        let f = |th: &[f64]| (th[0] - 0.3 * th[1]).abs() + 0.1 * th[2] * th[2];
        let a = minimize_direction(f, 3, &SearchConfig::default());
        let b = minimize_direction(f, 3, &SearchConfig::default());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let bits_a: Vec<u64> = a.direction.iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u64> = b.direction.iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn start_spread_small_for_rotation_invariant_objective() {
        let out = minimize_direction(|_: &[f64]| 2.5, 3, &SearchConfig::default());
        assert_eq!(out.value, 2.5);
        assert!(out.start_spread() < 1e-12);
    }
}
