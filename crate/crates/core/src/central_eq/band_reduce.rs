//! Unitary reduction of a Hermitian banded matrix to real symmetric
//! tridiagonal form by Givens rotations with bulge chasing.

use num_complex::Complex64;

/// A plane rotation `G = [[c, s], [-conj(s), c]]` acting on indices `(p, p+1)`.
#[derive(Debug, Clone, Copy)]
struct Rotation {
    p: usize,
    c: f64,
    s: Complex64,
}

/// Result of the reduction: `T = D† Q H Q† D` with `T` real tridiagonal.
pub struct Reduced {
    pub diag: Vec<f64>,
    pub sub: Vec<f64>,
    rotations: Vec<Rotation>,
    phases: Vec<Complex64>,
}

impl Reduced {
    /// Maps an eigenvector `y` of `T` back to an eigenvector `Q† D y` of `H`.
    pub fn back_transform(&self, y: &[f64]) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = y
            .iter()
            .zip(&self.phases)
            .map(|(&yi, &ph)| ph * yi)
            .collect();
        for rot in self.rotations.iter().rev() {
            let (a, b) = (v[rot.p], v[rot.p + 1]);
            v[rot.p] = a * rot.c - rot.s * b;
            v[rot.p + 1] = rot.s.conj() * a + b * rot.c;
        }
        v
    }
}

/// Phases `p` with `p_0 = 1` such that `conj(p_{i+1}) e_i p_i = |e_i|`.
pub fn phases_for(sub: &[Complex64]) -> Vec<Complex64> {
    let mut phases = Vec::with_capacity(sub.len() + 1);
    phases.push(Complex64::new(1.0, 0.0));
    for (i, e) in sub.iter().enumerate() {
        let r = e.norm();
        let unit = if r > 0.0 { e / r } else { Complex64::new(1.0, 0.0) };
        phases.push(phases[i] * unit);
    }
    phases
}

/// Reduces the Hermitian matrix given densely in row-major `a` (dimension
/// `n`, bandwidth `bw`) to real tridiagonal form.
pub fn reduce(mut a: Vec<Complex64>, n: usize, bw: usize) -> Reduced {
    let idx = |r: usize, c: usize| r * n + c;
    let mut rotations = Vec::new();

    // Zero A[target][col] against A[target-1][col] with a rotation in (target-1, target).
    let mut rotate = |a: &mut Vec<Complex64>, target: usize, col: usize| {
        let p = target - 1;
        let x = a[idx(p, col)];
        let y = a[idx(target, col)];
        if y.norm() == 0.0 {
            return;
        }
        let rho = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if x.norm() == 0.0 {
            (0.0, Complex64::new(1.0, 0.0))
        } else {
            (x.norm() / rho, (x / x.norm()) * y.conj() / rho)
        };
        let lo = p.saturating_sub(bw + 1);
        let hi = (target + bw + 1).min(n - 1);
        for j in lo..=hi {
            let (u, w) = (a[idx(p, j)], a[idx(target, j)]);
            a[idx(p, j)] = u * c + s * w;
            a[idx(target, j)] = -s.conj() * u + w * c;
        }
        for i in lo..=hi {
            let (u, w) = (a[idx(i, p)], a[idx(i, target)]);
            a[idx(i, p)] = u * c + w * s.conj();
            a[idx(i, target)] = -u * s + w * c;
        }
        a[idx(target, col)] = Complex64::new(0.0, 0.0);
        a[idx(col, target)] = Complex64::new(0.0, 0.0);
        rotations.push(Rotation { p, c, s });
    };

    if bw > 1 {
        for k in 0..n.saturating_sub(2) {
            let last = (k + bw).min(n - 1);
            for r in (k + 2..=last).rev() {
                rotate(&mut a, r, k);
                // The rotation leaves a bulge at (r + bw, r - 1); chase it off the end.
                let mut bulge_row = r + bw;
                let mut bulge_col = r - 1;
                while bulge_row < n {
                    rotate(&mut a, bulge_row, bulge_col);
                    bulge_col = bulge_row - 1;
                    bulge_row += bw;
                }
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[idx(i, i)].re).collect();
    let sub_c: Vec<Complex64> = (0..n.saturating_sub(1)).map(|i| a[idx(i + 1, i)]).collect();
    let phases = phases_for(&sub_c);
    let sub = sub_c.iter().map(|e| e.norm()).collect();
    Reduced {
        diag,
        sub,
        rotations,
        phases,
    }
}
