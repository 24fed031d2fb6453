//! Bloch wave packets: quasi-momentum amplitudes per band, the band-folded
//! momentum wave function and the real-space wave function.
//!
//! Amplitudes are sampled on the same grid as the [`BandTable`] they are used
//! with. Their phase is only meaningful relative to the gauge of that table
//! (largest coefficient real and positive); tabulated amplitudes from
//! elsewhere must use the same convention.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::BufRead;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::{BandTable, BrillouinGrid};
use crate::error::{Error, Result};
use crate::quad::{apply_stencil, cubic_stencil, simpson, simpson_weights};

/// Smooth compact bump `exp(-1/(1-u²))` on `|u| < 1`.
pub fn bump_profile(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// One entry of an amplitude configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeComponent {
    pub j: usize,
    pub kind: ComponentKind,
    pub z0: f64,
    pub w: f64,
    /// Complex weight as `[re, im]`.
    #[serde(default = "unit_weight")]
    pub weight: [f64; 2],
    #[serde(default)]
    pub phase: f64,
}

fn unit_weight() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeSpec {
    pub bands: Vec<AmplitudeComponent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiMomentumAmplitude {
    grid: BrillouinGrid,
    bands: BTreeMap<usize, Vec<Complex64>>,
}

impl QuasiMomentumAmplitude {
    /// Unit-normalized bump `∝ exp(-1/(1-u²))`, `u = (z - z0)/w`, in band `band`.
    pub fn bump(grid: &BrillouinGrid, band: usize, z0: f64, w: f64) -> Result<Self> {
        let samples = bump_samples(grid, z0, w)?;
        let mut amp = QuasiMomentumAmplitude {
            grid: grid.clone(),
            bands: BTreeMap::from([(band, samples)]),
        };
        amp.normalize()?;
        Ok(amp)
    }

    /// Superposes unit-normalized components with their weights and phases,
    /// then normalizes the total.
    pub fn from_spec(grid: &BrillouinGrid, spec: &AmplitudeSpec) -> Result<Self> {
        if spec.bands.is_empty() {
            return Err(Error::invalid("amplitude spec has no components"));
        }
        let h = grid.spacing();
        let mut bands: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
        for c in &spec.bands {
            let ComponentKind::Bump = c.kind;
            let shape = bump_samples(grid, c.z0, c.w)?;
            let norm = simpson(&shape.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>(), h).sqrt();
            let factor = Complex64::new(c.weight[0], c.weight[1]) * Complex64::from_polar(1.0, c.phase) / norm;
            let entry = bands
                .entry(c.j)
                .or_insert_with(|| vec![Complex64::new(0.0, 0.0); grid.len()]);
            for (e, s) in entry.iter_mut().zip(&shape) {
                *e += s * factor;
            }
        }
        let mut amp = QuasiMomentumAmplitude {
            grid: grid.clone(),
            bands,
        };
        amp.normalize()?;
        Ok(amp)
    }

    /// Wraps raw grid samples. The first and last sample of every band must
    /// vanish (support strictly inside the zone).
    pub fn from_samples(grid: &BrillouinGrid, bands: BTreeMap<usize, Vec<Complex64>>) -> Result<Self> {
        for (j, s) in &bands {
            if s.len() != grid.len() {
                return Err(Error::invalid(format!(
                    "band {j} has {} samples for a {}-point grid",
                    s.len(),
                    grid.len()
                )));
            }
            if s[0].norm() != 0.0 || s[s.len() - 1].norm() != 0.0 {
                return Err(Error::SupportViolation(format!(
                    "amplitude in band {j} does not vanish at the zone-boundary margin"
                )));
            }
        }
        Ok(QuasiMomentumAmplitude {
            grid: grid.clone(),
            bands,
        })
    }

    /// Reads `z, j, re, im` rows (optional header line) and interpolates each
    /// band onto `grid`; the amplitude is zero outside the tabulated range.
    pub fn from_csv<R: BufRead>(grid: &BrillouinGrid, input: R) -> Result<Self> {
        let mut rows: BTreeMap<usize, Vec<(f64, Complex64)>> = BTreeMap::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::invalid(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(Error::invalid(format!("line {}: expected z,j,re,im", lineno + 1)));
            }
            let Ok(z) = f[0].parse::<f64>() else {
                if lineno == 0 {
                    continue;
                }
                return Err(Error::invalid(format!("line {}: bad z '{}'", lineno + 1, f[0])));
            };
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("line {}: bad number '{s}'", lineno + 1)))
            };
            let j = f[1]
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("line {}: bad band '{}'", lineno + 1, f[1])))?;
            rows.entry(j).or_default().push((z, Complex64::new(parse(f[2])?, parse(f[3])?)));
        }
        let mut bands = BTreeMap::new();
        for (j, mut pts) in rows {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pts.len() < 4 {
                return Err(Error::invalid(format!("band {j} needs at least 4 tabulated points")));
            }
            let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
            if lo <= -grid.extent() || hi >= grid.extent() {
                return Err(Error::SupportViolation(format!(
                    "tabulated band {j} reaches the zone-boundary margin"
                )));
            }
            let samples = grid
                .values()
                .iter()
                .map(|&z| if z < lo || z > hi { Complex64::new(0.0, 0.0) } else { interp_scattered(&pts, z) })
                .collect();
            bands.insert(j, samples);
        }
        let mut amp = Self::from_samples(grid, bands)?;
        amp.normalize()?;
        Ok(amp)
    }

    pub fn grid(&self) -> &BrillouinGrid {
        &self.grid
    }

    /// Occupied bands in increasing order.
    pub fn bands(&self) -> Vec<usize> {
        self.bands.keys().copied().collect()
    }

    pub fn samples(&self, band: usize) -> Option<&[Complex64]> {
        self.bands.get(&band).map(Vec::as_slice)
    }

    /// `Σⱼ ∫ dz |φ⁽ʲ⁾|²` by Simpson on the grid.
    pub fn norm_sqr(&self) -> f64 {
        let h = self.grid.spacing();
        self.bands
            .values()
            .map(|s| simpson(&s.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>(), h))
            .sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invalid("amplitude has zero norm"));
        }
        let s = 1.0 / n.sqrt();
        for v in self.bands.values_mut().flatten() {
            *v *= s;
        }
        Ok(())
    }

    /// Range `[z_min, z_max]` of nonzero samples in `band`.
    pub fn support(&self, band: usize) -> Option<(f64, f64)> {
        let s = self.bands.get(&band)?;
        let first = s.iter().position(|v| v.norm() > 0.0)?;
        let last = s.iter().rposition(|v| v.norm() > 0.0)?;
        Some((self.grid.z(first), self.grid.z(last)))
    }

    /// `φ⁽ʲ⁾(z)` by cubic interpolation; zero for unoccupied bands or `|z|` beyond the grid.
    pub fn value(&self, band: usize, z: f64) -> Complex64 {
        match self.bands.get(&band) {
            Some(s) if z.abs() <= self.grid.extent() => {
                let (b, w) = cubic_stencil(-self.grid.extent(), self.grid.spacing(), self.grid.len(), z);
                apply_stencil(s, b, &w)
            }
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Only the given band, renormalized.
    pub fn restricted_to(&self, band: usize) -> Result<Self> {
        let s = self
            .bands
            .get(&band)
            .ok_or_else(|| Error::invalid(format!("band {band} is not occupied")))?;
        let mut amp = QuasiMomentumAmplitude {
            grid: self.grid.clone(),
            bands: BTreeMap::from([(band, s.clone())]),
        };
        amp.normalize()?;
        Ok(amp)
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        QuasiMomentumAmplitude {
            grid: self.grid.clone(),
            bands: self
                .bands
                .iter()
                .map(|(&j, s)| (j, s.iter().map(|v| v * r).collect()))
                .collect(),
        }
    }

    pub(crate) fn check_compatible(&self, table: &BandTable) -> Result<()> {
        if self.grid != *table.grid() {
            return Err(Error::invalid("amplitude and band table use different grids"));
        }
        if let Some(&top) = self.bands.keys().next_back() {
            if top > table.max_band() {
                return Err(Error::invalid(format!(
                    "amplitude occupies band {top} but the table stops at band {}",
                    table.max_band()
                )));
            }
        }
        Ok(())
    }
}

fn bump_samples(grid: &BrillouinGrid, z0: f64, w: f64) -> Result<Vec<Complex64>> {
    if !(w > 0.0 && w.is_finite() && z0.is_finite()) {
        return Err(Error::invalid(format!("bump needs finite z0 and w > 0 (z0 = {z0}, w = {w})")));
    }
    let limit = 0.5 - grid.margin();
    if z0 - w <= -limit || z0 + w >= limit {
        return Err(Error::SupportViolation(format!(
            "bump support [{}, {}] is not inside (-{limit}, {limit})",
            z0 - w,
            z0 + w
        )));
    }
    let samples: Vec<Complex64> = grid
        .values()
        .iter()
        .map(|&z| Complex64::new(bump_profile((z - z0) / w), 0.0))
        .collect();
    if samples.iter().all(|v| v.re == 0.0) {
        return Err(Error::invalid(format!("bump of half-width {w} falls between grid points")));
    }
    Ok(samples)
}

fn interp_scattered(pts: &[(f64, Complex64)], z: f64) -> Complex64 {
    // Cubic Lagrange on the four nearest tabulated points.
    let i = pts.partition_point(|p| p.0 < z).clamp(2, pts.len() - 2);
    let nodes = &pts[i - 2..i + 2];
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, &(za, va)) in nodes.iter().enumerate() {
        let mut l = 1.0;
        for (b, &(zb, _)) in nodes.iter().enumerate() {
            if a != b {
                l *= (z - zb) / (za - zb);
            }
        }
        acc += va * l;
    }
    acc
}

/// Interpolated band data at an off-grid `z`.
pub(crate) fn interp_energy(table: &BandTable, band: usize, z: f64) -> f64 {
    let g = table.grid();
    let (b, w) = cubic_stencil(-g.extent(), g.spacing(), g.len(), z);
    apply_stencil(table.energies(band), b, &w)
}

pub(crate) fn interp_coefficient(table: &BandTable, band: usize, z: f64, n: i64) -> Complex64 {
    let g = table.grid();
    let (b, w) = cubic_stencil(-g.extent(), g.spacing(), g.len(), z);
    (0..4).fold(Complex64::new(0.0, 0.0), |acc, k| acc + table.coefficient(band, b + k, n) * w[k])
}

/// Folds `k` into the zone: `n = round(k)` (half away from zero), `z = k − n`.
pub fn fold(k: f64) -> (i64, f64) {
    let n = k.round();
    (n as i64, k - n)
}

/// `φ(k, t) = Σⱼ √(2π) φ⁽ʲ⁾(z) f_n⁽ʲ⁾(z) e^{-iε⁽ʲ⁾(z) t}` with `(n, z) = fold(k)`.
pub fn momentum_wavefunction(
    table: &BandTable,
    amp: &QuasiMomentumAmplitude,
    k: f64,
    t: f64,
) -> Result<Complex64> {
    amp.check_compatible(table)?;
    momentum_value(table, amp, k, t)
}

fn momentum_value(table: &BandTable, amp: &QuasiMomentumAmplitude, k: f64, t: f64) -> Result<Complex64> {
    let (n, z) = fold(k);
    if !k.is_finite() || z.abs() > table.grid().extent() {
        return Err(Error::FoldingSeam { k });
    }
    if n.unsigned_abs() as usize > table.half_width() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let root = (2.0 * PI).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    for (&j, _) in amp.bands.iter() {
        let phi = amp.value(j, z);
        if phi.norm() == 0.0 {
            continue;
        }
        let f = interp_coefficient(table, j, z, n);
        let e = interp_energy(table, j, z);
        acc += phi * f * Complex64::from_polar(root, -e * t);
    }
    Ok(acc)
}

/// Sampled momentum density `|φ(k, t)|²`.
#[derive(Debug, Clone, Serialize)]
pub struct MomentumDistribution {
    pub t: f64,
    pub k: Vec<f64>,
    pub density: Vec<f64>,
    /// Folding index `n = [k]` of every sample.
    pub fold_index: Vec<i64>,
}

pub fn momentum_distribution(
    table: &BandTable,
    amp: &QuasiMomentumAmplitude,
    ks: &[f64],
    t: f64,
) -> Result<MomentumDistribution> {
    amp.check_compatible(table)?;
    let density = ks
        .par_iter()
        .map(|&k| momentum_value(table, amp, k, t).map(|v| v.norm_sqr()))
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentumDistribution {
        t,
        k: ks.to_vec(),
        density,
        fold_index: ks.iter().map(|&k| fold(k).0).collect(),
    })
}

/// `∫ dk |φ(k, t)|²` as a sum over folding cells of Simpson integrals on the
/// grid (no interpolation).
pub fn momentum_norm(table: &BandTable, amp: &QuasiMomentumAmplitude, t: f64) -> Result<f64> {
    amp.check_compatible(table)?;
    let m = table.half_width() as i64;
    let h = table.grid().spacing();
    let root = (2.0 * PI).sqrt();
    let total = (-m..=m)
        .into_par_iter()
        .map(|n| {
            let dens: Vec<f64> = (0..table.grid().len())
                .map(|iz| {
                    amp.bands
                        .iter()
                        .map(|(&j, s)| {
                            s[iz] * table.coefficient(j, iz, n)
                                * Complex64::from_polar(root, -table.energy(j, iz) * t)
                        })
                        .sum::<Complex64>()
                        .norm_sqr()
                })
                .collect();
            simpson(&dens, h)
        })
        .sum();
    Ok(total)
}

/// Precomputed quadrature nodes for real-space synthesis at one time.
struct Synthesis<'a> {
    table: &'a BandTable,
    /// `(grid index, band, Simpson weight · φ · e^{-iεt})` for nonzero samples.
    nodes: Vec<(usize, usize, Complex64)>,
}

impl<'a> Synthesis<'a> {
    fn new(table: &'a BandTable, amp: &QuasiMomentumAmplitude, t: f64) -> Self {
        let weights = simpson_weights(table.grid().len(), table.grid().spacing());
        let mut nodes = Vec::new();
        for (&j, s) in &amp.bands {
            for (iz, v) in s.iter().enumerate() {
                if v.norm() > 0.0 {
                    let phase = Complex64::from_polar(1.0, -table.energy(j, iz) * t);
                    nodes.push((iz, j, v * phase * weights[iz]));
                }
            }
        }
        Synthesis { table, nodes }
    }

    fn eval(&self, x: f64) -> Complex64 {
        let m = self.table.half_width() as i64;
        // e^{inx} for n = -M..=M
        let step = Complex64::from_polar(1.0, x);
        let mut planes = Vec::with_capacity(self.table.dim());
        let mut cur = Complex64::from_polar(1.0, -(m as f64) * x);
        for _ in 0..self.table.dim() {
            planes.push(cur);
            cur *= step;
        }
        let grid = self.table.grid();
        self.nodes
            .iter()
            .map(|&(iz, j, c)| {
                let periodic: Complex64 = self
                    .table
                    .coeffs(j, iz)
                    .iter()
                    .zip(&planes)
                    .map(|(f, p)| f * p)
                    .sum();
                c * Complex64::from_polar(1.0, grid.z(iz) * x) * periodic
            })
            .sum()
    }
}

/// `Ψ(x, t) = Σⱼ ∫ dz φ⁽ʲ⁾(z) e^{-iε⁽ʲ⁾(z)t} Σₙ f_n⁽ʲ⁾(z) e^{i(z+n)x}` by Simpson over the grid.
pub fn position_wavefunction(
    table: &BandTable,
    amp: &QuasiMomentumAmplitude,
    x: f64,
    t: f64,
) -> Result<Complex64> {
    Ok(position_wavefunctions(table, amp, &[x], t)?[0])
}

/// [`position_wavefunction`] at many points, evaluated in parallel.
pub fn position_wavefunctions(
    table: &BandTable,
    amp: &QuasiMomentumAmplitude,
    xs: &[f64],
    t: f64,
) -> Result<Vec<Complex64>> {
    amp.check_compatible(table)?;
    let synth = Synthesis::new(table, amp, t);
    Ok(xs.par_iter().map(|&x| synth.eval(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bands::compute_bands;
    use crate::potential::FourierPotential;

    fn grid(n: usize) -> BrillouinGrid {
        BrillouinGrid::new(n, 1e-6).unwrap()
    }

    #[test]
    fn bump_normalized_against_refined_grid() {
        let g = grid(2001);
        let amp = QuasiMomentumAmplitude::bump(&g, 0, 0.1, 0.05).unwrap();
        assert!((amp.norm_sqr() - 1.0).abs() < 1e-12);
        // Independent check: the analytic profile on a grid twice as fine.
        let s = amp.samples(0).unwrap();
        let c = s.iter().map(|v| v.re).fold(0.0, f64::max) / bump_profile(0.0);
        let fine = g.refined();
        let vals: Vec<f64> = fine
            .values()
            .iter()
            .map(|&z| (c * bump_profile((z - 0.1) / 0.05)).powi(2))
            .collect();
        assert!((simpson(&vals, fine.spacing()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bump_touching_boundary_is_rejected() {
        let g = grid(2001);
        assert!(matches!(
            QuasiMomentumAmplitude::bump(&g, 0, 0.49, 0.05),
            Err(Error::SupportViolation(_))
        ));
        assert!(QuasiMomentumAmplitude::bump(&g, 0, -0.46, 0.05).is_err());
    }

    #[test]
    fn bump_is_flat_at_support_edges() {
        // One-sided difference quotients at u → 1⁻ shrink faster than any power.
        let mut prev = f64::MAX;
        for k in 1..6 {
            let d = 10f64.powi(-k) * 0.5;
            let slope = (bump_profile(1.0 - d) - bump_profile(1.0)) / d;
            assert!(slope <= prev);
            prev = slope;
        }
        assert!(prev < 1e-100);
    }

    #[test]
    fn support_and_superposition() {
        let g = grid(401);
        let spec = AmplitudeSpec {
            bands: vec![
                AmplitudeComponent { j: 0, kind: ComponentKind::Bump, z0: 0.2, w: 0.1, weight: [1.0, 0.0], phase: 0.0 },
                AmplitudeComponent { j: 1, kind: ComponentKind::Bump, z0: 0.2, w: 0.1, weight: [0.0, 1.0], phase: 0.3 },
            ],
        };
        let amp = QuasiMomentumAmplitude::from_spec(&g, &spec).unwrap();
        assert_eq!(amp.bands(), vec![0, 1]);
        assert!((amp.norm_sqr() - 1.0).abs() < 1e-13);
        let (lo, hi) = amp.support(1).unwrap();
        assert!(lo > 0.1 && hi < 0.3);
        let s0 = amp.samples(0).unwrap();
        let s1 = amp.samples(1).unwrap();
        let ratio = s1[250] / s0[250];
        assert!((ratio - Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, 0.3)).norm() < 1e-12);
    }

    #[test]
    fn csv_amplitude_interpolates() {
        let g = grid(201);
        let mut text = String::from("z,j,re,im\n");
        for i in 0..=400 {
            let z = -0.2 + 0.4 * i as f64 / 400.0;
            let v = bump_profile(z / 0.2);
            text.push_str(&format!("{z},{},{v},0\n", 2));
        }
        let amp = QuasiMomentumAmplitude::from_csv(&g, text.as_bytes()).unwrap();
        let reference = QuasiMomentumAmplitude::bump(&g, 2, 0.0, 0.2).unwrap();
        let a = amp.samples(2).unwrap();
        let b = reference.samples(2).unwrap();
        let err = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
        let wide = "0.0,0,1,0\n-0.5,0,0,0\n0.1,0,1,0\n0.2,0,1,0\n";
        assert!(QuasiMomentumAmplitude::from_csv(&g, wide.as_bytes()).is_err());
    }

    #[test]
    fn free_particle_momentum_function() {
        let g = grid(2001);
        let table = compute_bands(&FourierPotential::free(1.0).unwrap(), &g, 0, 4).unwrap();
        let amp = QuasiMomentumAmplitude::bump(&g, 0, 0.1, 0.05).unwrap();
        let t = 2.7;
        let got = momentum_wavefunction(&table, &amp, 0.1, t).unwrap();
        let expect = amp.value(0, 0.1) * Complex64::from_polar(1.0, -0.01 * t);
        assert!((got - expect).norm() < 1e-12);
        // Nothing outside the n = 0 cell for a free particle.
        assert_eq!(momentum_wavefunction(&table, &amp, 1.1, t).unwrap().norm(), 0.0);
        assert!(matches!(momentum_wavefunction(&table, &amp, 0.5, 0.0), Err(Error::FoldingSeam { .. })));
        assert!(matches!(momentum_wavefunction(&table, &amp, -2.4999999, 0.0), Err(Error::FoldingSeam { .. })));
    }

    #[test]
    fn single_band_density_is_time_independent() {
        let g = grid(801);
        let table = compute_bands(&FourierPotential::cosine_alpha(1.0).unwrap(), &g, 0, 16).unwrap();
        let amp = QuasiMomentumAmplitude::bump(&g, 0, 0.2, 0.15).unwrap();
        let ks: Vec<f64> = (0..500).map(|i| -3.3 + i as f64 * 0.0131).collect();
        let d1 = momentum_distribution(&table, &amp, &ks, 0.37).unwrap();
        let d2 = momentum_distribution(&table, &amp, &ks, 91.5).unwrap();
        let dev = d1.density.iter().zip(&d2.density).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-12, "{dev}");
        assert!(d1.density.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn momentum_norm_equals_amplitude_norm() {
        let g = grid(801);
        let table = compute_bands(&FourierPotential::cosine_alpha(1.0).unwrap(), &g, 1, 16).unwrap();
        let spec = AmplitudeSpec {
            bands: vec![
                AmplitudeComponent { j: 0, kind: ComponentKind::Bump, z0: 0.25, w: 0.2, weight: [1.0, 0.0], phase: 0.0 },
                AmplitudeComponent { j: 1, kind: ComponentKind::Bump, z0: 0.25, w: 0.2, weight: [1.0, 0.0], phase: 0.0 },
            ],
        };
        let amp = QuasiMomentumAmplitude::from_spec(&g, &spec).unwrap();
        for t in [0.0, 1.3, 17.0] {
            assert!((momentum_norm(&table, &amp, t).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn free_particle_position_matches_single_integral() {
        let g = grid(801);
        let table = compute_bands(&FourierPotential::free(1.0).unwrap(), &g, 0, 3).unwrap();
        let amp = QuasiMomentumAmplitude::bump(&g, 0, 0.15, 0.2).unwrap();
        let t = 3.0;
        // Oracle: Gauss-Legendre-free dense trapezoid of the analytic bump on a
        // 16x finer grid; the integrand is smooth and compactly supported.
        let c = amp.samples(0).unwrap()[g.center_index() + 60].re
            / bump_profile((g.z(g.center_index() + 60) - 0.15) / 0.2);
        let n = 16 * 800;
        let h = 0.4 / n as f64;
        for &x in &[-20.0, -3.0, 0.0, 1.7, 12.0] {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..=n {
                let z = -0.05 + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                acc += Complex64::from_polar(c * bump_profile((z - 0.15) / 0.2) * w * h, z * x - z * z * t);
            }
            let oracle = acc / (2.0 * PI).sqrt();
            let got = position_wavefunction(&table, &amp, x, t).unwrap();
            assert!((got - oracle).norm() < 1e-8, "x={x}: {got} vs {oracle}");
        }
        assert_eq!(
            position_wavefunction(&table, &amp, 1.0, 0.0).unwrap(),
            position_wavefunction(&table, &amp, 1.0, 0.0).unwrap()
        );
    }

    #[test]
    fn incompatible_inputs_rejected() {
        let table = compute_bands(&FourierPotential::free(1.0).unwrap(), &grid(101), 0, 3).unwrap();
        let other = QuasiMomentumAmplitude::bump(&grid(201), 0, 0.1, 0.1).unwrap();
        assert!(momentum_wavefunction(&table, &other, 0.1, 0.0).is_err());
        let high = QuasiMomentumAmplitude::bump(&grid(101), 2, 0.1, 0.1).unwrap();
        assert!(position_wavefunction(&table, &high, 0.0, 0.0).is_err());
    }
}
