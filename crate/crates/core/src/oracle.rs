//! Independent check of `P₊`: sample `Ψ(x, t)` on a wide window, take its
//! discrete Fourier transform and sum the weight at `k ≥ 0`.
//!
//! Only [`position_wavefunctions`] is used to build the samples; nothing from
//! the `Λ` machinery enters the direct value.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bands::BandTable;
use crate::error::{Error, Result};
use crate::positivity::{p_plus_multiband, p_plus_single};
use crate::wavepacket::{position_wavefunctions, QuasiMomentumAmplitude};

/// Largest accepted `|1 − ∫_window |Ψ|² dx|`.
pub const WINDOW_DEFICIT_TOL: f64 = 1e-6;
/// Largest accepted change of the direct value when window and sample
/// count are both doubled.
pub const REFINEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Window `[-X, X)`.
    pub half_window: f64,
    /// Number of samples, a power of two.
    pub samples: usize,
    pub t: f64,
}

impl OracleConfig {
    /// Window of half-width `half_window` with the fewest power-of-two samples
    /// meeting the Nyquist requirement for `table`.
    pub fn for_table(table: &BandTable, half_window: f64, t: f64) -> Self {
        let required = required_momentum(table);
        let min_samples = (2.0 * half_window * required / PI).ceil() as usize;
        OracleConfig {
            half_window,
            samples: min_samples.max(16).next_power_of_two(),
            t,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_window / self.samples as f64
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    fn doubled(&self) -> Self {
        OracleConfig {
            half_window: 2.0 * self.half_window,
            samples: 2 * self.samples,
            t: self.t,
        }
    }
}

fn required_momentum(table: &BandTable) -> f64 {
    table.half_width() as f64 + 1.0
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub p_direct: f64,
    pub p_spectral: f64,
    pub abs_diff: f64,
    pub window: f64,
    pub samples: usize,
    pub t: f64,
    /// `∫_window |Ψ|² dx` on the base window.
    pub window_norm: f64,
    /// `Σ |φ(k_m)|² Δk` from the transform.
    pub momentum_norm: f64,
    /// `|p_direct(X, S) − p_direct(2X, 2S)|`.
    pub refinement_deviation: f64,
    pub nyquist: f64,
}

struct Direct {
    p_plus: f64,
    window_norm: f64,
    momentum_norm: f64,
}

fn direct(table: &BandTable, amp: &QuasiMomentumAmplitude, cfg: &OracleConfig) -> Result<Direct> {
    let s = cfg.samples;
    let dx = cfg.spacing();
    let xs: Vec<f64> = (0..s).map(|j| -cfg.half_window + j as f64 * dx).collect();
    let mut psi = position_wavefunctions(table, amp, &xs, cfg.t)?;
    let window_norm = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx;

    FftPlanner::<f64>::new().plan_fft_forward(s).process(&mut psi);
    // |φ(k_m)|² = dx²/(2π) |Ψ̂_m|², k_m = m Δk, Δk = 2π/(S dx); bins m ≥ S/2
    // are negative momenta.
    let dk = 2.0 * PI / (s as f64 * dx);
    let scale = dx * dx / (2.0 * PI) * dk;
    let weights: Vec<f64> = psi.iter().map(|v: &Complex64| v.norm_sqr() * scale).collect();
    let p_plus = weights[..s / 2].iter().sum();
    let momentum_norm = weights.iter().sum();
    Ok(Direct {
        p_plus,
        window_norm,
        momentum_norm,
    })
}

fn validate(table: &BandTable, cfg: &OracleConfig) -> Result<()> {
    if !(cfg.half_window > 0.0 && cfg.half_window.is_finite()) {
        return Err(Error::invalid(format!("window half-width must be positive, got {}", cfg.half_window)));
    }
    if cfg.samples < 16 || !cfg.samples.is_power_of_two() {
        return Err(Error::invalid(format!(
            "sample count must be a power of two ≥ 16, got {}",
            cfg.samples
        )));
    }
    if !cfg.t.is_finite() {
        return Err(Error::invalid("time must be finite"));
    }
    // Simpson's alternating weights make the synthesized Ψ repeat with
    // period π/Δz; the doubled window [-2X, 2X) has to stay clear of the
    // first image.
    let alias = PI / table.grid().spacing();
    if 4.0 * cfg.half_window >= 0.9 * alias {
        return Err(Error::invalid(format!(
            "window half-width {} is too wide for a z grid of spacing {} (limit {})",
            cfg.half_window,
            table.grid().spacing(),
            0.225 * alias
        )));
    }
    let required = required_momentum(table);
    if cfg.nyquist() < required {
        return Err(Error::NyquistViolation {
            nyquist: cfg.nyquist(),
            required,
        });
    }
    Ok(())
}

/// Direct `P₊` from the transform of `Ψ`, with the spectral value alongside.
///
/// The direct value is taken from the doubled configuration `(2X, 2S)` after
/// checking that it agrees with `(X, S)`.
pub fn direct_p_plus(table: &BandTable, amp: &QuasiMomentumAmplitude, cfg: &OracleConfig) -> Result<OracleReport> {
    validate(table, cfg)?;
    let base = direct(table, amp, cfg)?;
    let deficit = (1.0 - base.window_norm).abs();
    if deficit > WINDOW_DEFICIT_TOL {
        return Err(Error::WindowDeficit { deficit });
    }
    let fine_cfg = cfg.doubled();
    let fine = direct(table, amp, &fine_cfg)?;
    let refinement_deviation = (fine.p_plus - base.p_plus).abs();
    if refinement_deviation > REFINEMENT_TOL {
        return Err(Error::Quadrature(format!(
            "direct P+ changes by {refinement_deviation:e} when window and samples double"
        )));
    }
    let p_spectral = if amp.bands().len() == 1 {
        p_plus_single(table, amp)?.p_plus.expect("single-band value")
    } else {
        p_plus_multiband(table, amp, &[cfg.t])?.samples[0].p_plus
    };
    Ok(OracleReport {
        p_direct: fine.p_plus,
        p_spectral,
        abs_diff: (fine.p_plus - p_spectral).abs(),
        window: fine_cfg.half_window,
        samples: fine_cfg.samples,
        t: cfg.t,
        window_norm: base.window_norm,
        momentum_norm: fine.momentum_norm,
        refinement_deviation,
        nyquist: fine_cfg.nyquist(),
    })
}
