//! Statistical oracles for the samplers.

use std::f64::consts::PI;

use nors_core::noise::{sample_eta, sample_grf, sample_white_noise, EtaSpec, GrfSpec};
use nors_core::spectral::{index_of, Spectral};
use nors_core::{Grid, RngStream};

fn moments(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let (mut n, mut s, mut s2) = (0usize, 0.0, 0.0);
    for v in values {
        n += 1;
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    (mean, s2 / n as f64 - mean * mean, n)
}

#[test]
fn white_noise_entry_variance() {
    let g = Grid::new(1, &[128], 100, 0.05).unwrap();
    let mut all = Vec::new();
    for i in 0..100 {
        all.extend(sample_white_noise(&g, &mut RngStream::derive(21, i)).into_values());
    }
    let (mean, var, n) = moments(all.iter().copied());
    assert!(n >= 1_000_000);
    let expect = 1.0 / (g.dt() * g.cell_volume());
    assert!((expect - 256_000.0).abs() < 1e-6);
    assert!((var / expect - 1.0).abs() < 0.01, "variance {var}");
    let stderr = (expect / n as f64).sqrt();
    assert!(mean.abs() < 3.0 * stderr, "mean {mean}");
}

#[test]
fn halving_dx_doubles_the_variance() {
    let coarse = Grid::new(1, &[64], 100, 0.05).unwrap();
    let fine = Grid::new(1, &[128], 100, 0.05).unwrap();
    let var = |g: &Grid| {
        let v: Vec<f64> = (0..40)
            .flat_map(|i| sample_white_noise(g, &mut RngStream::derive(5, i)).into_values())
            .collect();
        moments(v.into_iter()).1
    };
    let ratio = var(&fine) / var(&coarse);
    assert!((ratio - 2.0).abs() < 0.04, "ratio {ratio}");
}

#[test]
fn cell_integrals_over_a_region() {
    // Σ entry·dt·dx over a 10 × 8 block has variance dt·dx·80.
    let g = Grid::new(1, &[32], 20, 0.05).unwrap();
    let w = g.dt() * g.dx(0);
    let sums: Vec<f64> = (0..20_000)
        .map(|i| {
            let xi = sample_white_noise(&g, &mut RngStream::derive(8, i));
            (0..10)
                .flat_map(|n| xi.slice(n)[..8].to_vec())
                .map(|v| v * w)
                .sum()
        })
        .collect();
    let (_, var, _) = moments(sums.into_iter());
    assert!((var / (w * 80.0) - 1.0).abs() < 0.03, "{var}");
}

#[test]
fn eta_pointwise_variance_matches_the_closed_form() {
    let g = Grid::new(1, &[8], 1, 0.05).unwrap();
    let spec = EtaSpec::default();
    let expect: f64 = (-10i32..=10)
        .map(|k| {
            let k = k as f64;
            (k * PI / 8.0).sin().powi(2) / (1.0 + k * k).powi(2)
        })
        .sum();
    // Grid point 6 of 8 is x = 0.75.
    let values = (0..100_000).map(|i| {
        sample_eta(&g, &mut RngStream::derive(13, i), &spec).unwrap().values()[6]
    });
    let (_, var, _) = moments(values);
    assert!((var / expect - 1.0).abs() < 0.02, "{var} vs {expect}");
}

#[test]
fn grf_mode_energy_ratio() {
    let g = Grid::new(2, &[16, 16], 1, 0.05).unwrap();
    let spec = GrfSpec::default();
    let spectral = Spectral::new(g.sizes());
    let idx = |k1: i64, k2: i64| index_of(k1, 16) * 16 + index_of(k2, 16);
    let ring1 = [idx(1, 0), idx(-1, 0), idx(0, 1), idx(0, -1)];
    let ring4 = [idx(4, 0), idx(-4, 0), idx(0, 4), idx(0, -4)];
    let (mut e1, mut e4) = (0.0, 0.0);
    for i in 0..10_000 {
        let w = sample_grf(&g, &spec, &mut RngStream::derive(17, i)).unwrap();
        assert!(w.values().iter().sum::<f64>().abs() < 1e-9);
        let s = spectral.forward_real(w.values());
        e1 += ring1.iter().map(|&j| s[j].norm_sqr()).sum::<f64>();
        e4 += ring4.iter().map(|&j| s[j].norm_sqr()).sum::<f64>();
    }
    let predicted = (spec.amplitude(1.0) / spec.amplitude(16.0)).powi(2);
    assert!(((e1 / e4) / predicted - 1.0).abs() < 0.05, "{} vs {predicted}", e1 / e4);
}
