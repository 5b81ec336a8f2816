//! Small dense-vector helpers shared by the integration and search code.
//!
//! Dimensions stay in the desk range (n <= 16), so plain `Vec<f64>` wins
//! over a linear-algebra dependency.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn neg(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

/// Returns `a` normalized to unit length, or `None` for the zero vector.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let r = norm(a);
    if r > 0.0 && r.is_finite() {
        Some(scale(a, 1.0 / r))
    } else {
        None
    }
}

pub fn is_unit(a: &[f64], tol: f64) -> bool {
    (norm(a) - 1.0).abs() <= tol
}

pub fn axis(dim: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = 1.0;
    v
}

/// Lexicographic order on coordinates; used to report a canonical
/// representative among directions with equal objective values.
pub fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Canonical sign for an antipodal pair: the lexicographically smaller
/// of `v` and `-v`.
pub fn canonical_sign(v: &[f64]) -> Vec<f64> {
    let n = neg(v);
    if lex_less(&n, v) {
        n
    } else {
        v.to_vec()
    }
}

/// Completes the unit vector `xi` to an orthonormal basis of R^n and
/// returns the n-1 vectors spanning the hyperplane orthogonal to `xi`.
///
/// Gram-Schmidt against the standard basis, skipping the axis most
/// aligned with `xi` for stability.
pub fn orthonormal_complement(xi: &[f64]) -> Vec<Vec<f64>> {
    let n = xi.len();
    let mut basis: Vec<Vec<f64>> = vec![xi.to_vec()];
    // Axis indices sorted by increasing |xi_i|: least-aligned first.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| xi[i].abs().partial_cmp(&xi[j].abs()).unwrap());
    for &i in &order {
        if basis.len() == n {
            break;
        }
        let mut v = axis(n, i);
        for b in &basis {
            let c = dot(&v, b);
            for (vk, bk) in v.iter_mut().zip(b) {
                *vk -= c * bk;
            }
        }
        let r = norm(&v);
        if r > 1e-8 {
            for vk in v.iter_mut() {
                *vk /= r;
            }
            basis.push(v);
        }
    }
    assert_eq!(basis.len(), n, "failed to complete orthonormal basis");
    basis.remove(0);
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthonormal() {
        for xi in [
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
            normalized(&[1.0, 2.0, -3.0]).unwrap(),
            normalized(&[0.3, -0.1, 0.9, 0.2, -0.5]).unwrap(),
        ] {
            let b = orthonormal_complement(&xi);
            assert_eq!(b.len(), xi.len() - 1);
            for (i, u) in b.iter().enumerate() {
                assert!((norm(u) - 1.0).abs() < 1e-12);
                assert!(dot(u, &xi).abs() < 1e-12);
                for v in &b[i + 1..] {
                    assert!(dot(u, v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn complement_in_dim_one_is_empty() {
        assert!(orthonormal_complement(&[1.0]).is_empty());
        assert!(orthonormal_complement(&[-1.0]).is_empty());
    }

    #[test]
    fn canonical_sign_picks_lex_smaller() {
        assert_eq!(canonical_sign(&[0.6, -0.8]), vec![-0.6, 0.8]);
        assert_eq!(canonical_sign(&[-0.6, 0.8]), vec![-0.6, 0.8]);
    }
}
