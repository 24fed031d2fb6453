//! Positive-momentum probability of Bloch wave packets.
//!
//! `Λ(z) = 2π Θ(z) |f₀(z)|² + 2π Σ_{n≥1} |f_n(z)|²` with the right-limit
//! convention `Θ(0) = 1`, so the grid point `z = 0` reports `Λ(0⁺)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bands::{gauge_fix_in_place, BandTable, CONVERGENCE_TOL};
use crate::central_eq::{eigen_lowest, CentralMatrix};
use crate::error::{Error, Result};
use crate::potential::FourierPotential;
use crate::quad::{apply_stencil, cubic_stencil, extrapolate_to_origin, simpson, simpson_coarse};
use crate::wavepacket::QuasiMomentumAmplitude;

/// Largest accepted difference between Simpson on the grid and on every
/// other grid point.
pub const QUADRATURE_TOL: f64 = 1e-8;
/// Bound on `|Im P̃(t)|`.
pub const IMAG_TOL: f64 = 1e-10;
/// Slack allowed on `0 ≤ P₊ ≤ 1`.
pub const RANGE_TOL: f64 = 1e-8;

fn theta(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// `Λ(z)` from one coefficient vector `f_{-M..=M}`.
pub fn lambda_of_coeffs(coeffs: &[Complex64], half_width: usize, z: f64) -> f64 {
    let m = half_width;
    let tail: f64 = coeffs[m + 1..].iter().map(|c| c.norm_sqr()).sum();
    2.0 * PI * (theta(z) * coeffs[m].norm_sqr() + tail)
}

fn check_band(table: &BandTable, band: usize) -> Result<()> {
    if band > table.max_band() {
        return Err(Error::invalid(format!(
            "band {band} is not in the table (bands 0..={})",
            table.max_band()
        )));
    }
    Ok(())
}

fn check_z(table: &BandTable, z: f64) -> Result<()> {
    if !(z.abs() <= table.grid().extent()) {
        return Err(Error::invalid(format!(
            "z = {z} is outside the tabulated range ±{}",
            table.grid().extent()
        )));
    }
    Ok(())
}

/// `conj(f₀ʲ) f₀ʲ'` and `Σ_{n≥1} conj(f_nʲ) f_nʲ'` at every grid point.
fn pair_sums(table: &BandTable, j: usize, jp: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let m = table.half_width();
    (0..table.grid().len())
        .map(|iz| {
            let a = table.coeffs(j, iz);
            let b = table.coeffs(jp, iz);
            let zero = a[m].conj() * b[m];
            let tail: Complex64 = a[m + 1..].iter().zip(&b[m + 1..]).map(|(x, y)| x.conj() * y).sum();
            (zero, tail)
        })
        .unzip()
}

fn band_sums(table: &BandTable, j: usize) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = pair_sums(table, j, j);
    (a.iter().map(|c| c.re).collect(), b.iter().map(|c| c.re).collect())
}

/// `Λ⁽ᴶ⁾` at every grid point.
pub fn lambda_on_grid(table: &BandTable, band: usize) -> Result<Vec<f64>> {
    check_band(table, band)?;
    let m = table.half_width();
    Ok(table
        .grid()
        .values()
        .iter()
        .enumerate()
        .map(|(iz, &z)| lambda_of_coeffs(table.coeffs(band, iz), m, z))
        .collect())
}

/// `Λ⁽ᴶ⁾(z)`; off-grid values interpolate the `n = 0` and `n ≥ 1` sums
/// separately and apply `Θ` afterwards.
pub fn lambda_single(table: &BandTable, band: usize, z: f64) -> Result<f64> {
    check_band(table, band)?;
    check_z(table, z)?;
    let (s0, s1) = band_sums(table, band);
    let g = table.grid();
    let (b, w) = cubic_stencil(-g.extent(), g.spacing(), g.len(), z);
    Ok(2.0 * PI * (theta(z) * apply_stencil(&s0, b, &w) + apply_stencil(&s1, b, &w)))
}

/// `Λ⁽ʲʲ'⁾(z) = 2π [conj(f₀ʲ) f₀ʲ' Θ(z) + Σ_{n≥1} conj(f_nʲ) f_nʲ']`.
pub fn lambda_cross(table: &BandTable, j: usize, jp: usize, z: f64) -> Result<Complex64> {
    if j == jp {
        return Err(Error::WrongOperation(format!(
            "lambda_cross needs two different bands (got {j} twice); use lambda_single"
        )));
    }
    check_band(table, j)?;
    check_band(table, jp)?;
    check_z(table, z)?;
    let (c0, c1) = pair_sums(table, j, jp);
    let g = table.grid();
    let (b, w) = cubic_stencil(-g.extent(), g.spacing(), g.len(), z);
    Ok((apply_stencil(&c0, b, &w) * theta(z) + apply_stencil(&c1, b, &w)) * (2.0 * PI))
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeSample {
    pub t: f64,
    pub p_plus: f64,
    pub p_tilde: f64,
    pub p_tilde_imag: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub fingerprint: String,
    pub bands: Vec<usize>,
    /// Time-independent value for single-band packets.
    pub p_plus: Option<f64>,
    pub p_bar: f64,
    /// Empty for single-band reports.
    pub samples: Vec<TimeSample>,
    /// Maximum of `Λ⁽ʲ⁾` over the grid and occupied bands, and where it occurs.
    pub lambda_max: f64,
    pub lambda_argmax_z: f64,
    pub lambda_argmax_band: usize,
    /// Largest `|Simpson(h) − Simpson(2h)|` over all integrals evaluated.
    pub quadrature_error: f64,
    pub quadrature_tolerance: f64,
    pub quadrature_ok: bool,
    pub max_imag_p_tilde: f64,
    /// `P₊ < 1` (single band) or `P̄ < 1` (multi-band).
    pub strictly_below_one: bool,
    pub in_unit_interval: bool,
}

impl PositivityReport {
    fn new(table: &BandTable, amp: &QuasiMomentumAmplitude) -> Result<Self> {
        let mut report = PositivityReport {
            fingerprint: table.fingerprint(),
            bands: amp.bands(),
            p_plus: None,
            p_bar: 0.0,
            samples: Vec::new(),
            lambda_max: f64::MIN,
            lambda_argmax_z: 0.0,
            lambda_argmax_band: 0,
            quadrature_error: 0.0,
            quadrature_tolerance: QUADRATURE_TOL,
            quadrature_ok: true,
            max_imag_p_tilde: 0.0,
            strictly_below_one: true,
            in_unit_interval: true,
        };
        for j in amp.bands() {
            for (iz, l) in lambda_on_grid(table, j)?.into_iter().enumerate() {
                if l > report.lambda_max {
                    report.lambda_max = l;
                    report.lambda_argmax_z = table.grid().z(iz);
                    report.lambda_argmax_band = j;
                }
            }
        }
        Ok(report)
    }

    fn note_quadrature(&mut self, err: f64) {
        self.quadrature_error = self.quadrature_error.max(err);
        self.quadrature_ok = self.quadrature_error <= self.quadrature_tolerance;
    }
}

/// Integral over the zone of a density whose `n = 0` part is switched on by
/// `Θ`: `∫ (Θ(z) a(z) + b(z)) dz`, split at `z = 0`. Returns the value and a
/// refinement error estimate.
fn split_integral(h: f64, center: usize, a: &[Complex64], b: &[Complex64]) -> (Complex64, f64) {
    let left: Vec<Complex64> = b[..=center].to_vec();
    let right: Vec<Complex64> = a[center..].iter().zip(&b[center..]).map(|(x, y)| x + y).collect();
    let fine = simpson(&left, h) + simpson(&right, h);
    let coarse = simpson_coarse(&left, h) + simpson_coarse(&right, h);
    (fine, (fine - coarse).norm())
}

/// Per-grid-point integrand pieces for the pair `(j, j')`, without the time phase.
fn pair_integrand(
    table: &BandTable,
    amp: &QuasiMomentumAmplitude,
    j: usize,
    jp: usize,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let (c0, c1) = pair_sums(table, j, jp);
    let pj = amp.samples(j).expect("occupied band");
    let pjp = amp.samples(jp).expect("occupied band");
    let w: Vec<Complex64> = pj.iter().zip(pjp).map(|(x, y)| x.conj() * y * (2.0 * PI)).collect();
    (
        c0.iter().zip(&w).map(|(c, w)| c * w).collect(),
        c1.iter().zip(&w).map(|(c, w)| c * w).collect(),
    )
}

/// `P₊ = ∫ dz Λ(z) |φ(z)|²` for a packet in a single band.
pub fn p_plus_single(table: &BandTable, amp: &QuasiMomentumAmplitude) -> Result<PositivityReport> {
    amp.check_compatible(table)?;
    let bands = amp.bands();
    if bands.len() != 1 {
        return Err(Error::WrongOperation(format!(
            "amplitude occupies {} bands; use p_plus_multiband",
            bands.len()
        )));
    }
    let j = bands[0];
    let mut report = PositivityReport::new(table, amp)?;
    let (a, b) = pair_integrand(table, amp, j, j);
    let g = table.grid();
    let (value, err) = split_integral(g.spacing(), g.center_index(), &a, &b);
    report.note_quadrature(err);
    let p = value.re;
    report.p_plus = Some(p);
    report.p_bar = p;
    report.strictly_below_one = p < 1.0;
    report.in_unit_interval = (-RANGE_TOL..=1.0 + RANGE_TOL).contains(&p);
    Ok(report)
}

/// `P₊(t) = P̄ + P̃(t)` at each of `times`.
///
/// Accepts any number of occupied bands; with one band `P̃ ≡ 0`. All stored
/// bands up to the highest occupied one must be separated by gaps.
pub fn p_plus_multiband(
    table: &BandTable,
    amp: &QuasiMomentumAmplitude,
    times: &[f64],
) -> Result<PositivityReport> {
    amp.check_compatible(table)?;
    let bands = amp.bands();
    let top = *bands.last().expect("non-empty amplitude");
    for j in 0..top {
        let gap = table.gap_above(j);
        if !(gap > 0.0) {
            return Err(Error::BandOverlap { band: j, gap });
        }
    }
    let mut report = PositivityReport::new(table, amp)?;
    let g = table.grid();
    let (h, center) = (g.spacing(), g.center_index());

    let mut p_bar = 0.0;
    for &j in &bands {
        let (a, b) = pair_integrand(table, amp, j, j);
        let (v, err) = split_integral(h, center, &a, &b);
        report.note_quadrature(err);
        p_bar += v.re;
    }

    // Cross terms carry e^{i(εʲ − εʲ')t}; both orderings are summed so the
    // imaginary part is a genuine consistency check.
    struct Pair {
        a: Vec<Complex64>,
        b: Vec<Complex64>,
        de: Vec<f64>,
    }
    let mut pairs = Vec::new();
    for &j in &bands {
        for &jp in &bands {
            if j != jp {
                let (a, b) = pair_integrand(table, amp, j, jp);
                let de = table.energies(j).iter().zip(table.energies(jp)).map(|(x, y)| x - y).collect();
                pairs.push(Pair { a, b, de });
            }
        }
    }
    let per_time: Vec<(Complex64, f64)> = times
        .par_iter()
        .map(|&t| {
            let mut total = Complex64::new(0.0, 0.0);
            let mut err: f64 = 0.0;
            for pair in &pairs {
                let phase: Vec<Complex64> = pair.de.iter().map(|&d| Complex64::from_polar(1.0, d * t)).collect();
                let a: Vec<Complex64> = pair.a.iter().zip(&phase).map(|(x, p)| x * p).collect();
                let b: Vec<Complex64> = pair.b.iter().zip(&phase).map(|(x, p)| x * p).collect();
                let (v, e) = split_integral(h, center, &a, &b);
                total += v;
                err = err.max(e);
            }
            (total, err)
        })
        .collect();

    report.p_bar = p_bar;
    report.strictly_below_one = p_bar < 1.0;
    report.in_unit_interval = (-RANGE_TOL..=1.0 + RANGE_TOL).contains(&p_bar);
    for (&t, &(tilde, err)) in times.iter().zip(&per_time) {
        report.note_quadrature(err);
        report.max_imag_p_tilde = report.max_imag_p_tilde.max(tilde.im.abs());
        let p = p_bar + tilde.re;
        report.in_unit_interval &= (-RANGE_TOL..=1.0 + RANGE_TOL).contains(&p);
        report.samples.push(TimeSample {
            t,
            p_plus: p,
            p_tilde: tilde.re,
            p_tilde_imag: tilde.im,
        });
    }
    Ok(report)
}

/// Longest beat period `2π / min |εʲ − εʲ'|` over occupied band pairs and
/// the grid points where both amplitudes are nonzero. `None` for one band.
pub fn longest_beat_period(table: &BandTable, amp: &QuasiMomentumAmplitude) -> Option<f64> {
    let bands = amp.bands();
    let mut min_gap = f64::INFINITY;
    for (x, &j) in bands.iter().enumerate() {
        for &jp in &bands[x + 1..] {
            let (pj, pjp) = (amp.samples(j)?, amp.samples(jp)?);
            for iz in 0..table.grid().len() {
                if pj[iz].norm() > 0.0 && pjp[iz].norm() > 0.0 {
                    min_gap = min_gap.min((table.energy(jp, iz) - table.energy(j, iz)).abs());
                }
            }
        }
    }
    min_gap.is_finite().then(|| 2.0 * PI / min_gap)
}

#[derive(Debug, Clone, Serialize)]
pub struct SupReport {
    pub alpha: f64,
    pub half_width: usize,
    pub sup_p: f64,
    /// `f₀⁽⁰⁾(0)` after gauge fixing.
    pub f00: f64,
    /// `max_n |f₋ₙ − fₙ|` of the zone-center ground state.
    pub symmetry_residual: f64,
    pub energy: f64,
    /// `|sup_p(M) − sup_p(2M)|`.
    pub truncation_deviation: f64,
}

fn zone_center_ground(alpha: f64, half_width: usize) -> Result<(Vec<Complex64>, f64)> {
    let p = FourierPotential::cosine_alpha(alpha)?;
    let m = CentralMatrix::build(&p, 0.0, half_width)?;
    let mut set = eigen_lowest(&m, 1)?;
    let mut v = set.eigenvectors.swap_remove(0);
    gauge_fix_in_place(&mut v)?;
    Ok((v, set.eigenvalues[0]))
}

/// `sup P₊ = 1/2 + π |f₀⁽⁰⁾(0)|²` for the cosine potential of strength `alpha`,
/// from the zone-center ground state at `half_width` and `2·half_width`.
///
/// Fails with a numerical error if the two truncations disagree by more than
/// the convergence tolerance.
pub fn sup_p_plus_cosine(alpha: f64, half_width: usize) -> Result<SupReport> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let (v, energy) = zone_center_ground(alpha, half_width)?;
    let (w, _) = zone_center_ground(alpha, 2 * half_width)?;
    let m = half_width;
    let f00 = v[m].re;
    let sup_p = 0.5 + PI * v[m].norm_sqr();
    let sup_2m = 0.5 + PI * w[2 * half_width].norm_sqr();
    let symmetry_residual = (1..=m).map(|n| (v[m - n] - v[m + n]).norm()).fold(0.0, f64::max);
    let truncation_deviation = (sup_p - sup_2m).abs();
    if !(truncation_deviation <= CONVERGENCE_TOL) {
        return Err(Error::NumericalFailure {
            what: format!(
                "sup P+ at alpha = {alpha} changes by {truncation_deviation:e} from M = {m} to M = {}",
                2 * m
            ),
            dim: 2 * m + 1,
            z: 0.0,
        });
    }
    Ok(SupReport {
        alpha,
        half_width,
        sup_p,
        f00,
        symmetry_residual,
        energy,
        truncation_deviation,
    })
}

/// Strong-potential approximation `1/2 + α^{-1/4}/(2√π)`.
pub fn asympt_strong(alpha: f64) -> f64 {
    0.5 + alpha.powf(-0.25) / (2.0 * PI.sqrt())
}

/// Weak-potential approximation `1 − α²`.
pub fn asympt_weak(alpha: f64) -> f64 {
    1.0 - alpha * alpha
}

/// Second-order `f₀⁽⁰⁾(0) ≈ (1 − α²)/√(2π)`.
pub fn perturbative_f00(alpha: f64) -> f64 {
    (1.0 - alpha * alpha) / (2.0 * PI).sqrt()
}

/// First-order neighbours `f_{±1}/f₀ ≈ −α`.
pub fn perturbative_g1(alpha: f64) -> f64 {
    -alpha
}

/// Harmonic-well `f₀⁽⁰⁾(0) ≈ α^{-1/8} / (√2 π^{3/4})`.
pub fn harmonic_f00(alpha: f64) -> f64 {
    alpha.powf(-0.125) / (2f64.sqrt() * PI.powf(0.75))
}

/// Shape diagnostics of `Λ⁽ᴶ⁾` on the grid.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaScan {
    pub band: usize,
    pub max_lambda: f64,
    /// `1 − max Λ`.
    pub margin: f64,
    pub lambda_right_limit: f64,
    /// Supremum over grid points with `z > 0` and where it occurs.
    pub positive_sup: f64,
    pub positive_argsup: f64,
    /// The positive-side supremum sits at the smallest positive grid point.
    pub sup_at_first_positive: bool,
    /// Largest `z*` such that Λ decreases strictly on the grid over `(0, z*]`.
    pub monotone_extent: f64,
    /// `Λ(0⁺) − Λ(0⁻)`, the left limit extrapolated from four samples.
    pub jump_at_zero: f64,
    /// `2π |f₀(0)|²`.
    pub theta_term: f64,
}

pub fn lambda_scan(table: &BandTable, band: usize) -> Result<LambdaScan> {
    let lam = lambda_on_grid(table, band)?;
    let g = table.grid();
    let c = g.center_index();
    if c < 4 {
        return Err(Error::invalid("lambda_scan needs at least 4 grid points per half zone"));
    }
    let max_lambda = lam.iter().copied().fold(f64::MIN, f64::max);
    let (mut argsup, mut positive_sup) = (c + 1, f64::MIN);
    for (i, &l) in lam.iter().enumerate().skip(c + 1) {
        if l > positive_sup {
            positive_sup = l;
            argsup = i;
        }
    }
    let mut end = c + 1;
    while end + 1 < lam.len() && lam[end + 1] < lam[end] {
        end += 1;
    }
    let left = extrapolate_to_origin([lam[c - 1], lam[c - 2], lam[c - 3], lam[c - 4]]);
    Ok(LambdaScan {
        band,
        max_lambda,
        margin: 1.0 - max_lambda,
        lambda_right_limit: lam[c],
        positive_sup,
        positive_argsup: g.z(argsup),
        sup_at_first_positive: argsup == c + 1,
        monotone_extent: g.z(end),
        jump_at_zero: lam[c] - left,
        theta_term: 2.0 * PI * table.coefficient(band, c, 0).norm_sqr(),
    })
}
