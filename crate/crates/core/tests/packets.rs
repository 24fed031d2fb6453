use std::collections::BTreeMap;
use std::f64::consts::PI;

use bloch_core::bands::io::{read_band_table, write_band_table};
use bloch_core::oracle::{direct_p_plus, OracleConfig};
use bloch_core::positivity::{lambda_on_grid, p_plus_multiband, p_plus_single};
use bloch_core::wavepacket::{
    momentum_norm, momentum_wavefunction, position_wavefunctions, AmplitudeComponent, AmplitudeSpec,
    ComponentKind,
};
use bloch_core::{compute_bands, BandTable, BrillouinGrid, FourierPotential, QuasiMomentumAmplitude};
use num_complex::Complex64;
use proptest::prelude::*;

fn two_band(g: &BrillouinGrid, z0: f64, w: f64, phase: f64) -> QuasiMomentumAmplitude {
    let c = |j, phase| AmplitudeComponent { j, kind: ComponentKind::Bump, z0, w, weight: [1.0, 0.0], phase };
    QuasiMomentumAmplitude::from_spec(g, &AmplitudeSpec { bands: vec![c(0, 0.0), c(1, phase)] }).unwrap()
}

fn cosine_table(alpha: f64, n: usize, max_band: usize, m: usize) -> BandTable {
    let g = BrillouinGrid::new(n, 1e-6).unwrap();
    compute_bands(&FourierPotential::cosine_alpha(alpha).unwrap(), &g, max_band, m).unwrap()
}

#[test]
fn two_band_density_is_a_single_beat() {
    let table = cosine_table(1.0, 401, 1, 16);
    let g = table.grid().clone();
    let amp = two_band(&g, 0.2, 0.15, 0.7);
    let iz = g.center_index() + 90;
    let z = g.z(iz);
    let k = 1.0 + z;
    let only = |j: usize| {
        let s = amp.samples(j).unwrap().to_vec();
        QuasiMomentumAmplitude::from_samples(&g, BTreeMap::from([(j, s)])).unwrap()
    };
    let a0 = momentum_wavefunction(&table, &only(0), k, 0.0).unwrap();
    let a1 = momentum_wavefunction(&table, &only(1), k, 0.0).unwrap();
    let w = table.energy(1, iz) - table.energy(0, iz);
    for i in 0..25 {
        let t = 0.41 * i as f64;
        let got = momentum_wavefunction(&table, &amp, k, t).unwrap().norm_sqr();
        let beat = a0.norm_sqr() + a1.norm_sqr() + 2.0 * (a0.conj() * a1 * Complex64::from_polar(1.0, -w * t)).re;
        assert!((got - beat).abs() <= 1e-8, "t={t}: {got} vs {beat}");
    }
}

#[test]
fn band_file_round_trip_preserves_positivity() {
    let table = cosine_table(0.6, 201, 1, 12);
    let mut buf = Vec::new();
    write_band_table(&table, serde_json::json!({}), &mut buf).unwrap();
    let (back, _) = read_band_table(buf.as_slice()).unwrap();
    let amp = two_band(back.grid(), -0.1, 0.2, 0.0);
    let a = p_plus_multiband(&table, &amp, &[0.0, 2.0]).unwrap();
    let b = p_plus_multiband(&back, &amp, &[0.0, 2.0]).unwrap();
    assert_eq!(a.samples[1].p_plus, b.samples[1].p_plus);
}

#[test]
fn position_norm_on_oracle_window() {
    let table = cosine_table(1.0, 401, 1, 16);
    let amp = two_band(table.grid(), 0.25, 0.2, 0.0);
    let cfg = OracleConfig::for_table(&table, 256.0, 3.0);
    let dx = cfg.spacing();
    let xs: Vec<f64> = (0..cfg.samples).map(|j| -cfg.half_window + j as f64 * dx).collect();
    let psi = position_wavefunctions(&table, &amp, &xs, cfg.t).unwrap();
    let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx;
    assert!((norm - 1.0).abs() < 1e-4, "{norm}");
}

#[test]
fn oracle_agrees_with_multiband() {
    let table = cosine_table(1.0, 401, 1, 16);
    let amp = two_band(table.grid(), 0.25, 0.2, 0.0);
    for t in [0.0, 1.1, 2.9] {
        let r = direct_p_plus(&table, &amp, &OracleConfig::for_table(&table, 256.0, t)).unwrap();
        assert!(r.abs_diff <= 1e-4, "t={t}: {r:?}");
        assert!((r.momentum_norm - 1.0).abs() <= 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_potentials_keep_lambda_below_one(
        v1 in 0.05f64..1.5, v2re in -0.8f64..0.8, v2im in -0.8f64..0.8, phase in 0.0f64..(2.0 * PI)
    ) {
        let p = FourierPotential::from_harmonics(
            1.0,
            0.0,
            &[(1, Complex64::from_polar(v1, phase)), (2, Complex64::new(v2re, v2im))],
        ).unwrap();
        let g = BrillouinGrid::new(41, 1e-6).unwrap();
        let table = compute_bands(&p, &g, 0, 16).unwrap();
        for iz in 0..g.len() {
            let s: f64 = table.coeffs(0, iz).iter().map(|c| c.norm_sqr()).sum();
            prop_assert!((s - 1.0 / (2.0 * PI)).abs() < 1e-12);
        }
        for l in lambda_on_grid(&table, 0).unwrap() {
            prop_assert!((0.0..1.0).contains(&l));
        }
    }

    #[test]
    fn single_band_results_ignore_global_phase(theta in 0.0f64..(2.0 * PI), t1 in 0.0f64..50.0, t2 in 0.0f64..50.0) {
        let table = cosine_table(0.8, 201, 0, 12);
        let amp = QuasiMomentumAmplitude::bump(table.grid(), 0, -0.05, 0.3).unwrap();
        let rotated = amp.with_global_phase(theta);
        let a = p_plus_single(&table, &amp).unwrap().p_plus.unwrap();
        let b = p_plus_single(&table, &rotated).unwrap().p_plus.unwrap();
        prop_assert!((a - b).abs() < 1e-14);
        let n1 = momentum_norm(&table, &amp, t1).unwrap();
        let n2 = momentum_norm(&table, &rotated, t2).unwrap();
        prop_assert!((n1 - n2).abs() < 1e-12);
    }
}
