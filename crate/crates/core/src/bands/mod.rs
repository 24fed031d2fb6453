//! Band tables: the lowest bands of the central equation sampled over the
//! Brillouin zone with a fixed eigenvector gauge.

mod grid;
pub mod io;

pub use grid::{BrillouinGrid, GridSpec, DEFAULT_GRID_COUNT, DEFAULT_ZONE_MARGIN};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::central_eq::{eigen_lowest, CentralMatrix};
use crate::error::{Error, Result};
use crate::positivity::lambda_of_coeffs;
use crate::potential::FourierPotential;

pub const DEFAULT_TRUNCATION: usize = 100;
pub const CONVERGENCE_TOL: f64 = 1e-10;

/// Moduli within this relative distance of the maximum count as ties in [`gauge_fix`].
const GAUGE_TIE_TOL: f64 = 1e-10;

/// Rotates `coeffs` by a global phase so the largest-modulus entry is real and
/// positive. Ties (within a relative `1e-10`) go to the smallest index.
pub fn gauge_fix(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut v = coeffs.to_vec();
    gauge_fix_in_place(&mut v)?;
    Ok(v)
}

/// In-place [`gauge_fix`]; returns the position of the pivot entry.
pub fn gauge_fix_in_place(coeffs: &mut [Complex64]) -> Result<usize> {
    let pivot = gauge_pivot(coeffs).ok_or_else(|| Error::invalid("cannot gauge-fix a zero vector"))?;
    let p = coeffs[pivot];
    let rot = p.conj() / p.norm();
    for c in coeffs.iter_mut() {
        *c *= rot;
    }
    coeffs[pivot] = Complex64::new(p.norm(), 0.0);
    Ok(pivot)
}

fn gauge_pivot(coeffs: &[Complex64]) -> Option<usize> {
    let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(max > 0.0) {
        return None;
    }
    coeffs.iter().position(|c| c.norm() >= max * (1.0 - GAUGE_TIE_TOL))
}

/// Energies and gauge-fixed coefficients of one band over the grid.
#[derive(Debug, Clone, PartialEq)]
struct Band {
    energies: Vec<f64>,
    /// Row-major `[grid point][n + M]`.
    coeffs: Vec<Complex64>,
    pivots: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandTable {
    potential: FourierPotential,
    grid: BrillouinGrid,
    half_width: usize,
    bands: Vec<Band>,
}

impl BandTable {
    pub fn potential(&self) -> &FourierPotential {
        &self.potential
    }

    pub fn grid(&self) -> &BrillouinGrid {
        &self.grid
    }

    /// Truncation half-width `M`.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn dim(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn max_band(&self) -> usize {
        self.bands.len() - 1
    }

    pub fn fingerprint(&self) -> String {
        self.potential.fingerprint()
    }

    pub fn energy(&self, band: usize, iz: usize) -> f64 {
        self.bands[band].energies[iz]
    }

    pub fn energies(&self, band: usize) -> &[f64] {
        &self.bands[band].energies
    }

    /// Coefficients `f_n` for `n = -M..=M` at grid point `iz`.
    pub fn coeffs(&self, band: usize, iz: usize) -> &[Complex64] {
        let d = self.dim();
        &self.bands[band].coeffs[iz * d..(iz + 1) * d]
    }

    pub fn coefficient(&self, band: usize, iz: usize, n: i64) -> Complex64 {
        let idx = n + self.half_width as i64;
        if idx < 0 || idx as usize >= self.dim() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs(band, iz)[idx as usize]
        }
    }

    /// Plane-wave index `n` of the entry made real and positive by the gauge.
    pub fn gauge_tag(&self, band: usize, iz: usize) -> i64 {
        self.bands[band].pivots[iz]
    }

    /// Grid indices where the gauge pivot of `band` jumps to another `n`;
    /// the coefficients may change discontinuously in phase there.
    pub fn gauge_seams(&self, band: usize) -> Vec<usize> {
        let p = &self.bands[band].pivots;
        (1..p.len()).filter(|&i| p[i] != p[i - 1]).collect()
    }

    /// `min_z ε⁽ʲ⁺¹⁾ − max_z ε⁽ʲ⁾`.
    pub fn gap_above(&self, band: usize) -> f64 {
        let top = self.bands[band].energies.iter().copied().fold(f64::MIN, f64::max);
        let bottom = self.bands[band + 1].energies.iter().copied().fold(f64::MAX, f64::min);
        bottom - top
    }

    fn from_parts(
        potential: FourierPotential,
        grid: BrillouinGrid,
        half_width: usize,
        energies: Vec<Vec<f64>>,
        coeffs: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        let dim = 2 * half_width + 1;
        let mut bands = Vec::with_capacity(energies.len());
        for (e, c) in energies.into_iter().zip(coeffs) {
            let pivots = c
                .chunks(dim)
                .map(|v| {
                    gauge_pivot(v)
                        .map(|p| p as i64 - half_width as i64)
                        .ok_or_else(|| Error::BandFile("zero coefficient vector".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            bands.push(Band {
                energies: e,
                coeffs: c,
                pivots,
            });
        }
        Ok(BandTable {
            potential,
            grid,
            half_width,
            bands,
        })
    }
}

/// Solves the central equation at every grid point for bands `0..=max_band`.
///
/// `potential` must be dimensionless. Grid points are processed in parallel;
/// the result does not depend on scheduling.
pub fn compute_bands(
    potential: &FourierPotential,
    grid: &BrillouinGrid,
    max_band: usize,
    half_width: usize,
) -> Result<BandTable> {
    let count = max_band + 1;
    let dim = 2 * half_width + 1;
    let points = grid
        .values()
        .par_iter()
        .map(|&z| {
            let matrix = CentralMatrix::build(potential, z, half_width)?;
            let mut set = eigen_lowest(&matrix, count)?;
            for v in set.eigenvectors.iter_mut() {
                gauge_fix_in_place(v)?;
            }
            Ok(set)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut energies = vec![Vec::with_capacity(grid.len()); count];
    let mut coeffs = vec![Vec::with_capacity(grid.len() * dim); count];
    for set in points {
        for j in 0..count {
            energies[j].push(set.eigenvalues[j]);
            coeffs[j].extend_from_slice(&set.eigenvectors[j]);
        }
    }
    let table = BandTable::from_parts(potential.clone(), grid.clone(), half_width, energies, coeffs)?;
    for j in 0..max_band {
        let gap = table.gap_above(j);
        if !(gap > 0.0) {
            return Err(Error::BandOverlap { band: j, gap });
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub half_width: usize,
    pub doubled_half_width: usize,
    /// `max |ε_M − ε_{2M}|` over grid points and bands.
    pub max_energy_deviation: f64,
    /// `max |Λ_M − Λ_{2M}|` over grid points and bands.
    pub max_lambda_deviation: f64,
    /// Grid value and band where the larger of the two deviations occurs.
    pub worst_z: f64,
    pub worst_band: usize,
    pub tolerance: f64,
    pub pass: bool,
    /// Set when either table could not be computed.
    pub failure: Option<String>,
}

/// Compares tables at `M` and `2M`.
pub fn check_convergence(
    potential: &FourierPotential,
    grid: &BrillouinGrid,
    max_band: usize,
    half_width: usize,
) -> ConvergenceReport {
    let mut report = ConvergenceReport {
        half_width,
        doubled_half_width: 2 * half_width,
        max_energy_deviation: f64::NAN,
        max_lambda_deviation: f64::NAN,
        worst_z: f64::NAN,
        worst_band: 0,
        tolerance: CONVERGENCE_TOL,
        pass: false,
        failure: None,
    };
    let tables = compute_bands(potential, grid, max_band, half_width)
        .and_then(|a| compute_bands(potential, grid, max_band, 2 * half_width).map(|b| (a, b)));
    let (coarse, fine) = match tables {
        Ok(t) => t,
        Err(e) => {
            report.failure = Some(e.to_string());
            return report;
        }
    };
    compare_tables(&coarse, &fine, &mut report);
    report
}

fn compare_tables(coarse: &BandTable, fine: &BandTable, report: &mut ConvergenceReport) {
    let mut de_max: f64 = 0.0;
    let mut dl_max: f64 = 0.0;
    let mut worst = (0.0, 0.0, 0);
    for j in 0..coarse.band_count() {
        for (iz, &z) in coarse.grid().values().iter().enumerate() {
            let de = (coarse.energy(j, iz) - fine.energy(j, iz)).abs();
            let lc = lambda_of_coeffs(coarse.coeffs(j, iz), coarse.half_width(), z);
            let lf = lambda_of_coeffs(fine.coeffs(j, iz), fine.half_width(), z);
            let dl = (lc - lf).abs();
            de_max = de_max.max(de);
            dl_max = dl_max.max(dl);
            if de.max(dl) > worst.0 {
                worst = (de.max(dl), z, j);
            }
        }
    }
    report.max_energy_deviation = de_max;
    report.max_lambda_deviation = dl_max;
    report.worst_z = worst.1;
    report.worst_band = worst.2;
    report.pass = de_max < report.tolerance && dl_max < report.tolerance;
}

/// Computes bands at `half_width`, doubling it until the `M` vs `2M` check
/// passes or `max_half_width` is exceeded. Returns the converged table at the
/// accepted `M` and the last report.
pub fn compute_bands_converged(
    potential: &FourierPotential,
    grid: &BrillouinGrid,
    max_band: usize,
    half_width: usize,
    max_half_width: usize,
) -> Result<(BandTable, ConvergenceReport)> {
    let mut m = half_width;
    let mut coarse = compute_bands(potential, grid, max_band, m)?;
    loop {
        let fine = compute_bands(potential, grid, max_band, 2 * m)?;
        let mut report = ConvergenceReport {
            half_width: m,
            doubled_half_width: 2 * m,
            max_energy_deviation: 0.0,
            max_lambda_deviation: 0.0,
            worst_z: 0.0,
            worst_band: 0,
            tolerance: CONVERGENCE_TOL,
            pass: false,
            failure: None,
        };
        compare_tables(&coarse, &fine, &mut report);
        if report.pass || 2 * m > max_half_width {
            return Ok((coarse, report));
        }
        m *= 2;
        coarse = fine;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small_grid() -> BrillouinGrid {
        BrillouinGrid::new(101, DEFAULT_ZONE_MARGIN).unwrap()
    }

    #[test]
    fn gauge_fix_examples() {
        let s = 1.0 / (2.0 * PI).sqrt();
        let v = vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, s), Complex64::new(0.0, 0.0)];
        let g = gauge_fix(&v).unwrap();
        assert_eq!(g[1], Complex64::new(s, 0.0));
        assert_eq!(g[0].norm(), 0.0);
        assert_eq!(gauge_fix(&g).unwrap(), g);
        assert!(gauge_fix(&[Complex64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn gauge_fix_is_phase_invariant() {
        let v: Vec<Complex64> = (0..7)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let reference = gauge_fix(&v).unwrap();
        for k in 0..10 {
            let theta = 0.123 + k as f64 * 0.61;
            let rotated: Vec<Complex64> = v.iter().map(|c| c * Complex64::from_polar(1.0, theta)).collect();
            let g = gauge_fix(&rotated).unwrap();
            for (a, b) in g.iter().zip(&reference) {
                assert!((a - b).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn gauge_ties_go_to_smallest_index() {
        let v = vec![Complex64::new(0.0, -0.5), Complex64::new(0.1, 0.0), Complex64::new(0.5, 0.0)];
        let mut w = v.clone();
        assert_eq!(gauge_fix_in_place(&mut w).unwrap(), 0);
        assert_eq!(w[0], Complex64::new(0.5, 0.0));
    }

    #[test]
    fn free_particle_band_is_parabola() {
        let p = FourierPotential::free(1.0).unwrap();
        let g = small_grid();
        let t = compute_bands(&p, &g, 0, 8).unwrap();
        for (iz, &z) in g.values().iter().enumerate() {
            assert_eq!(t.energy(0, iz), z * z);
        }
    }

    #[test]
    fn weak_cosine_ground_state_matches_second_order() {
        let alpha: f64 = 0.01;
        let t = compute_bands(&FourierPotential::cosine_alpha(alpha).unwrap(), &small_grid(), 0, 20).unwrap();
        let e0 = t.energy(0, t.grid().center_index());
        let oracle = -2.0 * alpha * alpha;
        assert!((e0 - oracle).abs() < 0.05 * oracle.abs());
    }

    #[test]
    fn cosine_bands_are_gapped_and_normalized() {
        let t = compute_bands(&FourierPotential::cosine_alpha(1.0).unwrap(), &small_grid(), 1, 30).unwrap();
        assert!(t.gap_above(0) > 0.0);
        for j in 0..2 {
            for iz in 0..t.grid().len() {
                let s: f64 = t.coeffs(j, iz).iter().map(|c| c.norm_sqr()).sum();
                assert!((s - 1.0 / (2.0 * PI)).abs() < 1e-12);
                let tag = t.gauge_tag(j, iz);
                let pivot = t.coefficient(j, iz, tag);
                assert_eq!(pivot.im, 0.0);
                assert!(pivot.re > 0.0);
            }
        }
    }

    #[test]
    fn cosine_energies_are_even_in_z() {
        let t = compute_bands(&FourierPotential::cosine_alpha(0.7).unwrap(), &small_grid(), 2, 30).unwrap();
        let n = t.grid().len();
        for j in 0..3 {
            for iz in 0..n {
                assert!((t.energy(j, iz) - t.energy(j, n - 1 - iz)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cosine_zone_center_vector_is_symmetric() {
        let t = compute_bands(&FourierPotential::cosine_alpha(2.5).unwrap(), &small_grid(), 0, 40).unwrap();
        let c = t.grid().center_index();
        for n in 1..=40 {
            assert!((t.coefficient(0, c, n) - t.coefficient(0, c, -n)).norm() < 1e-10);
        }
    }

    #[test]
    fn recomputation_is_deterministic() {
        let p = FourierPotential::cosine_alpha(1.3).unwrap();
        let g = small_grid();
        let a = compute_bands(&p, &g, 1, 25).unwrap();
        let b = compute_bands(&p, &g, 1, 25).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn convergence_examples() {
        let g = small_grid();
        let ok = check_convergence(&FourierPotential::cosine_alpha(1.0).unwrap(), &g, 0, 100);
        assert!(ok.pass, "{ok:?}");
        // Band 0 alone is already converged at M = 10 for α = 10; bands up
        // to 3 reach further out in n and are not.
        let strong = FourierPotential::cosine_alpha(10.0).unwrap();
        let under = check_convergence(&strong, &g, 3, 10);
        assert!(!under.pass, "{under:?}");
        assert!(under.max_energy_deviation > 1e-9);
        assert!(check_convergence(&strong, &g, 0, 10).pass);
        assert!(!check_convergence(&strong, &g, 0, 8).pass);
        let free = check_convergence(&FourierPotential::free(1.0).unwrap(), &g, 0, 1);
        assert_eq!(free.max_energy_deviation, 0.0);
        assert_eq!(free.max_lambda_deviation, 0.0);
    }

    #[test]
    fn overlapping_bands_detected() {
        // Free particle: the top of band 1 (z → 0) meets band 2 at ε = 1.
        let p = FourierPotential::free(1.0).unwrap();
        let g = BrillouinGrid::new(11, 1e-3).unwrap();
        let err = compute_bands(&p, &g, 2, 6).unwrap_err();
        assert!(matches!(err, Error::DegenerateBands { .. } | Error::BandOverlap { .. }));
    }
}
