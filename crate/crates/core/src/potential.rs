//! Real periodic potentials with finitely many Fourier harmonics,
//! `V(x) = Σ_{|n| ≤ N} V_n e^{i n q x}` with `V_{-n} = conj(V_n)`.
//!
//! Everything downstream of this module works in dimensionless units:
//! lengths in `1/q`, quasi-momenta in `q` (so `z = κ/q`), energies in
//! `ħ²q²/(2μ)` and times in `2μ/(ħq²)`. [`FourierPotential::scaled`] performs
//! the one conversion from physical units.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Relative tolerance used when checking `V_{-n} = conj(V_n)`.
const HERMITIAN_TOL: f64 = 1e-12;

/// Mass and reduced Planck constant used to make a physical potential dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub mu: f64,
    pub hbar: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units { mu: 1.0, hbar: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierPotential {
    q: f64,
    /// Nonzero coefficients only; both `n` and `-n` are stored.
    coeffs: BTreeMap<i64, Complex64>,
}

impl FourierPotential {
    /// Validates a full coefficient map (both signs of `n` present).
    pub fn new(q: f64, coeffs: BTreeMap<i64, Complex64>) -> Result<Self> {
        check_positive("q", q)?;
        let scale = coeffs.values().map(|v| v.norm()).fold(0.0, f64::max);
        for (&n, &v) in &coeffs {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::invalid(format!("coefficient V_{n} is not finite")));
            }
            let partner = coeffs.get(&-n).copied().unwrap_or_default();
            if (partner - v.conj()).norm() > HERMITIAN_TOL * scale {
                return Err(Error::invalid(format!(
                    "V_{} = {} is not the conjugate of V_{} = {}",
                    -n, partner, n, v
                )));
            }
        }
        let coeffs = coeffs
            .into_iter()
            .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
            .map(|(n, v)| if n == 0 { (n, Complex64::new(v.re, 0.0)) } else { (n, v) })
            .collect();
        Ok(FourierPotential { q, coeffs })
    }

    /// Builds a potential from its `n > 0` harmonics and the constant offset
    /// `v0`; the negative harmonics are filled in by conjugation.
    pub fn from_harmonics(q: f64, v0: f64, harmonics: &[(i64, Complex64)]) -> Result<Self> {
        if !v0.is_finite() {
            return Err(Error::invalid("v0 is not finite"));
        }
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, Complex64::new(v0, 0.0));
        for &(n, v) in harmonics {
            if n <= 0 {
                return Err(Error::invalid(format!(
                    "harmonic index {n} must be positive; negative indices are implied"
                )));
            }
            if coeffs.insert(n, v).is_some() {
                return Err(Error::invalid(format!("harmonic index {n} listed twice")));
            }
            coeffs.insert(-n, v.conj());
        }
        Self::new(q, coeffs)
    }

    /// `V(x) = A cos(q x)`, i.e. `V_{±1} = A/2`.
    pub fn cosine(amplitude: f64, q: f64) -> Result<Self> {
        check_positive("cosine amplitude A", amplitude)?;
        Self::from_harmonics(q, 0.0, &[(1, Complex64::new(amplitude / 2.0, 0.0))])
    }

    /// Dimensionless cosine potential of strength `alpha`: `q = 1`, `Ṽ_{±1} = α`.
    pub fn cosine_alpha(alpha: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        Self::from_harmonics(1.0, 0.0, &[(1, Complex64::new(alpha, 0.0))])
    }

    /// The empty potential.
    pub fn free(q: f64) -> Result<Self> {
        Self::from_harmonics(q, 0.0, &[])
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.q
    }

    pub fn coefficient(&self, n: i64) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    /// Nonzero coefficients in increasing `n`.
    pub fn coefficients(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&n, &v)| (n, v))
    }

    /// Highest harmonic index `N` with `V_N ≠ 0`; zero for a constant potential.
    pub fn max_harmonic(&self) -> usize {
        self.coeffs
            .keys()
            .map(|n| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn offset(&self) -> f64 {
        self.coefficient(0).re
    }

    /// True when every coefficient is real, so the central matrix is real symmetric.
    pub fn has_real_coefficients(&self) -> bool {
        self.coeffs.values().all(|v| v.im == 0.0)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let sum: Complex64 = self
            .coeffs
            .iter()
            .map(|(&n, &v)| v * Complex64::from_polar(1.0, n as f64 * self.q * x))
            .sum();
        // Conjugate pairs cancel the imaginary part up to rounding.
        sum.re
    }

    /// Converts to dimensionless form: `q = 1`, `Ṽ_n = 2μ V_n / (ħ q)²`.
    pub fn scaled(&self, units: Units) -> Result<Self> {
        check_positive("mu", units.mu)?;
        check_positive("hbar", units.hbar)?;
        let factor = 2.0 * units.mu / (units.hbar * self.q).powi(2);
        Ok(FourierPotential {
            q: 1.0,
            coeffs: self.coeffs.iter().map(|(&n, &v)| (n, v * factor)).collect(),
        })
    }

    /// SHA-256 over `q` and the coefficient bit patterns, as lowercase hex.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.q.to_bits().to_le_bytes());
        for (&n, v) in &self.coeffs {
            hasher.update(n.to_le_bytes());
            hasher.update(v.re.to_bits().to_le_bytes());
            hasher.update(v.im.to_bits().to_le_bytes());
        }
        hasher.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// `α = μA/(ħ²q²)`.
pub fn dimensionless_strength(amplitude: f64, mu: f64, hbar: f64, q: f64) -> Result<f64> {
    check_positive("A", amplitude)?;
    check_positive("mu", mu)?;
    check_positive("hbar", hbar)?;
    check_positive("q", q)?;
    Ok(mu * amplitude / (hbar * hbar * q * q))
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {value}")))
    }
}
