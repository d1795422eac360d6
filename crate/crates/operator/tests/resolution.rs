//! Discretisation invariance and spectral truncation.

use std::f64::consts::PI;

use nors_core::RngStream;
use nors_operator::{Activation, Fno, FnoConfig, FnoParams};

fn band_limited(n: usize) -> Vec<f64> {
    let x = |j: usize| j as f64 / n as f64;
    let mut v: Vec<f64> = (0..n).map(|j| (2.0 * PI * x(j)).sin() + 0.3 * (6.0 * PI * x(j)).cos()).collect();
    v.extend((0..n).map(|j| 0.5 - 0.7 * (4.0 * PI * x(j)).sin()));
    v
}

#[test]
fn one_parameter_set_agrees_across_resolutions() {
    let c = FnoConfig {
        spatial_dim: 1,
        in_channels: 2,
        hidden: 8,
        layers: 1,
        modes: vec![12],
        projection_hidden: 16,
        out_channels: 1,
        activation: Activation::Gelu,
    };
    let mut p = FnoParams::init(&c, &mut RngStream::new(5, 0)).unwrap();
    let mut s = RngStream::new(5, 1);
    for t in &mut p.tensors {
        for v in &mut t.data {
            *v += 0.2 * s.normal();
        }
    }
    let fno = Fno::new(p);
    let coarse = fno.forward(&fno.plan(&[64]).unwrap(), &band_limited(64)).unwrap();
    let fine = fno.forward(&fno.plan(&[128]).unwrap(), &band_limited(128)).unwrap();
    for (j, a) in coarse.iter().enumerate() {
        assert!((a - fine[2 * j]).abs() < 1e-6, "point {j}: {a} vs {}", fine[2 * j]);
    }
}

#[test]
fn modes_above_the_cutoff_do_not_reach_the_spectral_path() {
    let c = FnoConfig {
        spatial_dim: 1,
        in_channels: 1,
        hidden: 3,
        layers: 2,
        modes: vec![4],
        projection_hidden: 5,
        out_channels: 1,
        activation: Activation::Relu,
    };
    let mut p = FnoParams::init(&c, &mut RngStream::new(9, 0)).unwrap();
    // Silence the pointwise path of the first layer.
    for name in ["layer0.weight", "layer0.bias"] {
        let i = p.tensors.iter().position(|t| t.name == name).unwrap();
        p.tensors[i].data.fill(0.0);
    }
    let fno = Fno::new(p);
    let plan = fno.plan(&[32]).unwrap();
    let low: Vec<f64> = (0..32).map(|j| (2.0 * PI * 3.0 * j as f64 / 32.0).cos()).collect();
    let high: Vec<f64> = low
        .iter()
        .enumerate()
        .map(|(j, v)| v + (2.0 * PI * 9.0 * j as f64 / 32.0).sin())
        .collect();
    let a = fno.forward(&plan, &low).unwrap();
    let b = fno.forward(&plan, &high).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn two_dimensional_transfer_from_16_to_64() {
    let c = FnoConfig {
        spatial_dim: 2,
        in_channels: 1,
        hidden: 4,
        layers: 1,
        modes: vec![8, 8],
        projection_hidden: 8,
        out_channels: 1,
        activation: Activation::Relu,
    };
    let fno = Fno::new(FnoParams::init(&c, &mut RngStream::new(2, 0)).unwrap());
    let field = |n: usize| -> Vec<f64> {
        (0..n * n)
            .map(|f| {
                let (x, y) = ((f / n) as f64 / n as f64, (f % n) as f64 / n as f64);
                (2.0 * PI * (x + 2.0 * y)).sin() + 0.5 * (2.0 * PI * (7.0 * x - 3.0 * y)).cos()
            })
            .collect()
    };
    let coarse = fno.forward(&fno.plan(&[16, 16]).unwrap(), &field(16)).unwrap();
    let fine = fno.forward(&fno.plan(&[64, 64]).unwrap(), &field(64)).unwrap();
    for i in 0..16 {
        for j in 0..16 {
            assert!((coarse[i * 16 + j] - fine[(4 * i) * 64 + 4 * j]).abs() < 1e-6);
        }
    }
}
