//! Real symmetric tridiagonal kernels: implicit-shift QL for all eigenvalues,
//! Sturm bisection for a few of the lowest, and inverse iteration for
//! selected eigenvectors.

/// Maximum QL sweeps spent on a single eigenvalue before giving up.
const MAX_QL_ITER: usize = 60;
const MAX_INVERSE_ITER: usize = 8;

/// All eigenvalues of the tridiagonal matrix with diagonal `diag` and
/// subdiagonal `sub` (`sub[i] = T[i+1][i]`), in ascending order.
///
/// Returns `None` when some eigenvalue does not converge.
pub fn ql_eigenvalues(diag: &[f64], sub: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    assert_eq!(sub.len() + 1, n.max(1));
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(sub);

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITER {
                    return None;
                }
                // Wilkinson-type shift from the leading 2x2 block.
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    d.sort_by(|a, b| a.total_cmp(b));
    Some(d)
}

/// LU factorization with partial pivoting of `T - λI` for a symmetric tridiagonal `T`.
struct ShiftedLu {
    /// Rows of `U`: entries at columns `i`, `i+1`, `i+2`.
    u: Vec<[f64; 3]>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(diag: &[f64], sub: &[f64], lambda: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut u = vec![[0.0; 3]; n];
        let mut mult = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let guard = |x: f64| if x.abs() < tiny { tiny.copysign(x) } else { x };

        // Active row (columns i, i+1) still to be pivoted against row i+1.
        let mut act = [diag[0] - lambda, if n > 1 { sub[0] } else { 0.0 }];
        for i in 0..n.saturating_sub(1) {
            let c = sub[i];
            let a = diag[i + 1] - lambda;
            let b = if i + 1 < n - 1 { sub[i + 1] } else { 0.0 };
            if act[0].abs() >= c.abs() {
                let p = guard(act[0]);
                u[i] = [p, act[1], 0.0];
                let l = c / p;
                mult[i] = l;
                act = [a - l * act[1], b];
            } else {
                u[i] = [c, a, b];
                let l = act[0] / c;
                mult[i] = l;
                swapped[i] = true;
                act = [act[1] - l * a, -l * b];
            }
        }
        u[n - 1] = [guard(act[0]), 0.0, 0.0];
        ShiftedLu { u, mult, swapped }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut y = vec![0.0; n];
        let mut act = rhs[0];
        for i in 0..n - 1 {
            let next = rhs[i + 1];
            if self.swapped[i] {
                y[i] = next;
                act -= self.mult[i] * next;
            } else {
                y[i] = act;
                act = next - self.mult[i] * act;
            }
        }
        y[n - 1] = act;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let [u0, u1, u2] = self.u[i];
            let mut s = y[i];
            if i + 1 < n {
                s -= u1 * x[i + 1];
            }
            if i + 2 < n {
                s -= u2 * x[i + 2];
            }
            x[i] = s / u0;
        }
        x
    }
}

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
fn sturm_count(diag: &[f64], sub_sq: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    for i in 0..diag.len() {
        if i > 0 {
            q = diag[i] - x - sub_sq[i - 1] / q;
        }
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `count` lowest eigenvalues, ascending, by bisection on the Sturm count.
pub fn lowest_eigenvalues(diag: &[f64], sub: &[f64], count: usize) -> Vec<f64> {
    let n = diag.len();
    assert!(count <= n && sub.len() + 1 == n.max(1));
    let sub_sq: Vec<f64> = sub.iter().map(|e| e * e).collect();
    let pivmin = f64::MIN_POSITIVE * sub_sq.iter().copied().fold(1.0, f64::max);
    // Gershgorin interval.
    let (mut lo, mut hi) = (f64::MAX, f64::MIN);
    for i in 0..n {
        let r = if i > 0 { sub[i - 1].abs() } else { 0.0 } + if i + 1 < n { sub[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    lo -= 2.0 * f64::EPSILON * scale * n as f64 + 2.0 * pivmin;
    hi += 2.0 * f64::EPSILON * scale * n as f64 + 2.0 * pivmin;
    // Absolute accuracy ~ ε‖T‖; callers sharpen with a Rayleigh quotient.
    let abs_tol = 2.0 * f64::EPSILON * scale + pivmin;

    (0..count)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            loop {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b || b - a <= abs_tol {
                    break mid;
                }
                if sturm_count(diag, &sub_sq, mid, pivmin) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
        })
        .collect()
}

/// `vᵀTv / vᵀv`.
pub fn rayleigh_quotient(diag: &[f64], sub: &[f64], v: &[f64]) -> f64 {
    let n = diag.len();
    let mut num = 0.0;
    for i in 0..n {
        let mut tv = diag[i] * v[i];
        if i > 0 {
            tv += sub[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            tv += sub[i] * v[i + 1];
        }
        num += v[i] * tv;
    }
    num / v.iter().map(|x| x * x).sum::<f64>()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    // Two passes of modified Gram-Schmidt.
    for _ in 0..2 {
        for u in against {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= dot * ui;
            }
        }
    }
}

pub fn tridiag_residual(diag: &[f64], sub: &[f64], lambda: f64, v: &[f64]) -> f64 {
    let n = diag.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut r = (diag[i] - lambda) * v[i];
        if i > 0 {
            r += sub[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            r += sub[i] * v[i + 1];
        }
        acc += r * r;
    }
    acc.sqrt()
}

/// Unit eigenvectors for the given (ascending, converged) eigenvalues by
/// inverse iteration, each orthogonalized against the ones before it.
///
/// Returns `None` if some vector fails to reach a residual of
/// `64·ε·‖T‖`.
pub fn inverse_iteration(diag: &[f64], sub: &[f64], eigenvalues: &[f64]) -> Option<Vec<Vec<f64>>> {
    let n = diag.len();
    let tnorm = (0..n)
        .map(|i| {
            diag[i].abs()
                + if i > 0 { sub[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { sub[i].abs() } else { 0.0 }
        })
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * tnorm;
    let tol = 64.0 * f64::EPSILON * tnorm;

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(eigenvalues.len());
    if sub.iter().all(|&s| s == 0.0) {
        // Diagonal matrix: exact unit vectors.
        let mut used = vec![false; n];
        for &lambda in eigenvalues {
            let i = (0..n)
                .filter(|&i| !used[i])
                .min_by(|&a, &b| (diag[a] - lambda).abs().total_cmp(&(diag[b] - lambda).abs()))?;
            used[i] = true;
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            vectors.push(v);
        }
        return Some(vectors);
    }
    for (k, &lambda) in eigenvalues.iter().enumerate() {
        if n == 1 {
            vectors.push(vec![1.0]);
            continue;
        }
        let lu = ShiftedLu::new(diag, sub, lambda, tiny);
        // Deterministic start vector with components in every direction.
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_75 + k as f64 * 0.31).sin())
            .collect();
        orthogonalize(&mut v, &vectors);
        let s = norm(&v);
        v.iter_mut().for_each(|x| *x /= s);

        let mut converged = false;
        for it in 0..MAX_INVERSE_ITER {
            let mut x = lu.solve(&v);
            orthogonalize(&mut x, &vectors);
            let s = norm(&x);
            if !s.is_finite() || s == 0.0 {
                return None;
            }
            x.iter_mut().for_each(|xi| *xi /= s);
            v = x;
            if it >= 1 && tridiag_residual(diag, sub, lambda, &v) <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return None;
        }
        vectors.push(v);
    }
    Some(vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_matches_ql() {
        let n = 60;
        let diag: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.37).sin() * 3.0 + (i as f64 - 30.0).powi(2) * 0.01).collect();
        let sub: Vec<f64> = (0..n - 1).map(|i| ((i as f64) * 1.1).cos()).collect();
        let all = ql_eigenvalues(&diag, &sub).unwrap();
        let low = lowest_eigenvalues(&diag, &sub, 5);
        for (a, b) in low.iter().zip(&all) {
            assert!((a - b).abs() < 1e-13 * all[n - 1].abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn bisection_on_diagonal_and_tiny_matrices() {
        assert!((lowest_eigenvalues(&[2.5], &[], 1)[0] - 2.5).abs() < 1e-14);
        let low = lowest_eigenvalues(&[3.0, -1.0, 0.5], &[0.0, 0.0], 2);
        assert!((low[0] + 1.0).abs() < 1e-15 && (low[1] - 0.5).abs() < 1e-15);
    }
    use rand::{Rng, SeedableRng};

    #[test]
    fn diagonal_matrix_is_exact() {
        let d = [3.0, -1.0, 2.0, 0.5];
        let ev = ql_eigenvalues(&d, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(ev, vec![-1.0, 0.5, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let (a, b, c) = (1.0, 3.0, 0.7);
        let ev = ql_eigenvalues(&[a, b], &[c]).unwrap();
        let mean = 0.5 * (a + b);
        let rad = (0.25 * (a - b) * (a - b) + c * c).sqrt();
        assert!((ev[0] - (mean - rad)).abs() < 1e-15);
        assert!((ev[1] - (mean + rad)).abs() < 1e-15);
    }

    #[test]
    fn toeplitz_matches_analytic_spectrum() {
        // diag 2, off-diag -1: λ_k = 2 - 2cos(kπ/(n+1)).
        let n = 50;
        let ev = ql_eigenvalues(&vec![2.0; n], &vec![-1.0; n - 1]).unwrap();
        for (k, &l) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((l - exact).abs() < 1e-13, "k={k}: {l} vs {exact}");
        }
    }

    #[test]
    fn random_trace_and_vectors() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(2..60);
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let e: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let ev = ql_eigenvalues(&d, &e).unwrap();
            let trace: f64 = d.iter().sum();
            assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-11);
            let vecs = inverse_iteration(&d, &e, &ev[..3.min(n)]).unwrap();
            for (i, v) in vecs.iter().enumerate() {
                assert!(tridiag_residual(&d, &e, ev[i], v) < 1e-12);
                for w in &vecs[..i] {
                    let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                    assert!(dot.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn near_degenerate_pair_stays_orthogonal() {
        // Two weakly coupled copies give a split of ~1e-9.
        let d = vec![1.0, 5.0, 1.0 + 1e-9, 7.0];
        let e = vec![0.0, 0.0, 0.0];
        let ev = ql_eigenvalues(&d, &e).unwrap();
        let vecs = inverse_iteration(&d, &e, &ev[..2]).unwrap();
        let dot: f64 = vecs[0].iter().zip(&vecs[1]).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-14);
    }
}
