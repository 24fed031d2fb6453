//! The truncated central equation at fixed quasi-momentum.
//!
//! In dimensionless units the plane-wave coefficients `f_n` of a Bloch wave
//! with quasi-momentum `z` satisfy
//!
//! ```text
//! Σ_m [ (z+n)² δ_{mn} + Ṽ_{n-m} ] f_m = ε f_n
//! ```
//!
//! Truncating to `n ∈ [-M, M]` gives a `(2M+1)`-dimensional Hermitian matrix
//! whose bandwidth is the highest harmonic `N` of the potential.

pub(crate) mod band_reduce;
pub(crate) mod tridiag;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::FourierPotential;

/// Relative eigenvalue spacing (against `‖H‖∞`) below which bands are considered touching.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Target squared norm of every coefficient vector.
pub const COEFF_NORM_SQR: f64 = 1.0 / (2.0 * PI);

#[derive(Debug, Clone)]
pub struct CentralMatrix {
    z: f64,
    m: usize,
    /// `lower[d][i] = H[i+d][i]`, `d = 0..=bandwidth`.
    lower: Vec<Vec<Complex64>>,
}

impl CentralMatrix {
    /// Builds the matrix for a dimensionless potential (`q = 1`).
    pub fn build(potential: &FourierPotential, z: f64, m: usize) -> Result<Self> {
        if potential.q() != 1.0 {
            return Err(Error::invalid(
                "central matrix needs a dimensionless potential (q = 1); call scaled() first",
            ));
        }
        if !z.is_finite() || z.abs() >= 0.5 {
            return Err(Error::ZoneBoundaryExcluded { z });
        }
        let bw = potential.max_harmonic();
        if m < bw || m == 0 {
            return Err(Error::TruncationTooSmall { m, n: bw });
        }
        let dim = 2 * m + 1;
        let offset = potential.offset();
        let mut lower = Vec::with_capacity(bw + 1);
        lower.push(
            (0..dim)
                .map(|i| {
                    let n = i as f64 - m as f64;
                    Complex64::new((z + n) * (z + n) + offset, 0.0)
                })
                .collect(),
        );
        for d in 1..=bw {
            // Row n, column n-d holds Ṽ_d.
            let v = potential.coefficient(d as i64);
            lower.push(vec![v; dim - d]);
        }
        Ok(CentralMatrix { z, m, lower })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// Truncation half-width `M`.
    pub fn half_width(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        2 * self.m + 1
    }

    pub fn bandwidth(&self) -> usize {
        self.lower.len() - 1
    }

    /// Entry `H[r][c]` (row/column indices, not plane-wave indices).
    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        if r >= c {
            let d = r - c;
            self.lower.get(d).map_or(Complex64::new(0.0, 0.0), |b| b[c])
        } else {
            self.entry(c, r).conj()
        }
    }

    /// `‖H‖∞`, the largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let dim = self.dim();
        let bw = self.bandwidth();
        (0..dim)
            .map(|r| {
                let lo = r.saturating_sub(bw);
                let hi = (r + bw).min(dim - 1);
                (lo..=hi).map(|c| self.entry(r, c).norm()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let dim = self.dim();
        let bw = self.bandwidth();
        (0..dim)
            .map(|r| {
                let lo = r.saturating_sub(bw);
                let hi = (r + bw).min(dim - 1);
                (lo..=hi).map(|c| self.entry(r, c) * v[c]).sum()
            })
            .collect()
    }

    fn is_real(&self) -> bool {
        self.lower.iter().all(|b| b.iter().all(|x| x.im == 0.0))
    }

    fn to_dense(&self) -> Vec<Complex64> {
        let n = self.dim();
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        for (d, band) in self.lower.iter().enumerate() {
            for (i, &v) in band.iter().enumerate() {
                a[(i + d) * n + i] = v;
                a[i * n + i + d] = v.conj();
            }
        }
        a
    }
}

/// The lowest eigenpairs of one central matrix.
#[derive(Debug, Clone)]
pub struct EigenPairSet {
    pub z: f64,
    pub half_width: usize,
    /// Strictly ascending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[j][n + M] = f_n⁽ʲ⁾`, each with `Σ|f_n|² = 1/(2π)`.
    /// Phases are arbitrary at this layer.
    pub eigenvectors: Vec<Vec<Complex64>>,
    /// `‖H f − ε f‖₂` for the stored (normalized) vectors.
    pub residuals: Vec<f64>,
    pub norm_inf: f64,
}

impl EigenPairSet {
    pub fn coefficient(&self, band: usize, n: i64) -> Complex64 {
        let idx = n + self.half_width as i64;
        if idx < 0 || idx as usize >= self.eigenvectors[band].len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.eigenvectors[band][idx as usize]
        }
    }
}

/// Lowest `count` eigenpairs of `matrix`, normalized to `Σ|f_n|² = 1/(2π)`.
pub fn eigen_lowest(matrix: &CentralMatrix, count: usize) -> Result<EigenPairSet> {
    let dim = matrix.dim();
    if count == 0 || count > dim {
        return Err(Error::invalid(format!(
            "requested {count} eigenpairs from a {dim}-dimensional matrix"
        )));
    }
    let failure = |what: &str| Error::NumericalFailure {
        what: what.to_string(),
        dim,
        z: matrix.z,
    };

    let (diag, sub, back): (Vec<f64>, Vec<f64>, Box<dyn Fn(&[f64]) -> Vec<Complex64>>) =
        if matrix.bandwidth() <= 1 {
            let diag: Vec<f64> = matrix.lower[0].iter().map(|x| x.re).collect();
            let sub_c: Vec<Complex64> = matrix.lower.get(1).cloned().unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); dim - 1]);
            if matrix.is_real() {
                let sub = sub_c.iter().map(|x| x.re).collect();
                (diag, sub, Box::new(|y: &[f64]| y.iter().map(|&v| Complex64::new(v, 0.0)).collect()))
            } else {
                let phases = band_reduce::phases_for(&sub_c);
                let sub = sub_c.iter().map(|x| x.norm()).collect();
                (
                    diag,
                    sub,
                    Box::new(move |y: &[f64]| y.iter().zip(&phases).map(|(&v, &p)| p * v).collect()),
                )
            }
        } else {
            let reduced = band_reduce::reduce(matrix.to_dense(), dim, matrix.bandwidth());
            let diag = reduced.diag.clone();
            let sub = reduced.sub.clone();
            (diag, sub, Box::new(move |y: &[f64]| reduced.back_transform(y)))
        };

    let eigenvalues = if 4 * count <= dim {
        tridiag::lowest_eigenvalues(&diag, &sub, count)
    } else {
        let all = tridiag::ql_eigenvalues(&diag, &sub).ok_or_else(|| failure("QL iteration did not converge"))?;
        all[..count].to_vec()
    };

    let norm_inf = matrix.norm_inf();
    let tol = DEGENERACY_TOL * norm_inf;
    for w in eigenvalues.windows(2) {
        if w[1] - w[0] < tol {
            return Err(Error::DegenerateBands {
                z: matrix.z,
                lower: w[0],
                upper: w[1],
                tol,
            });
        }
    }

    let ys = tridiag::inverse_iteration(&diag, &sub, &eigenvalues)
        .ok_or_else(|| failure("inverse iteration did not converge"))?;
    let eigenvalues: Vec<f64> = ys.iter().map(|y| tridiag::rayleigh_quotient(&diag, &sub, y)).collect();
    let scale = COEFF_NORM_SQR.sqrt();
    let eigenvectors: Vec<Vec<Complex64>> = ys
        .iter()
        .map(|y| {
            let v = back(y);
            let nrm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|x| x * (scale / nrm)).collect()
        })
        .collect();
    let residuals = eigenvectors
        .iter()
        .zip(&eigenvalues)
        .map(|(f, &e)| {
            matrix
                .apply(f)
                .iter()
                .zip(f)
                .map(|(hf, fi)| (hf - fi * e).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    Ok(EigenPairSet {
        z: matrix.z,
        half_width: matrix.m,
        eigenvalues,
        eigenvectors,
        residuals,
        norm_inf,
    })
}
