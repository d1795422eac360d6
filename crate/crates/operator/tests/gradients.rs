//! Reverse-mode gradients against central finite differences.

use nors_core::RngStream;
use nors_operator::{Activation, Fno, FnoConfig, FnoParams};

fn tiny(act: Activation) -> FnoConfig {
    FnoConfig {
        spatial_dim: 1,
        in_channels: 3,
        hidden: 4,
        layers: 2,
        modes: vec![5],
        projection_hidden: 6,
        out_channels: 1,
        activation: act,
    }
}

/// Initialisation plus a perturbation so biases and spectral weights are
/// not degenerate.
fn params(c: &FnoConfig, seed: u64) -> FnoParams {
    let mut p = FnoParams::init(c, &mut RngStream::new(seed, 0)).unwrap();
    let mut s = RngStream::new(seed, 1);
    for t in &mut p.tensors {
        let amp = if t.name.ends_with(".spectral") { 0.4 } else { 0.3 };
        for v in &mut t.data {
            *v += amp * s.normal();
        }
    }
    p
}

fn sample(len: usize, seed: u64) -> Vec<f64> {
    let mut s = RngStream::new(seed, 7);
    (0..len).map(|_| s.normal()).collect()
}

fn objective(fno: &Fno, plan: &nors_operator::GridPlan, x: &[f64], up: &[f64]) -> f64 {
    fno.forward(plan, x).unwrap().iter().zip(up).map(|(a, b)| a * b).sum()
}

fn check(act: Activation, seed: u64) {
    let c = tiny(act);
    let fno = Fno::new(params(&c, seed));
    let plan = fno.plan(&[16]).unwrap();
    let x = sample(3 * 16, seed + 1);
    let up = sample(16, seed + 2);
    let (_, tape) = fno.forward_tape(&plan, &x).unwrap();
    let grad = fno.backward(&plan, &x, &tape, &up);
    let h = 1e-5;
    let mut worst = (0.0, String::new());
    for (ti, t) in fno.params.tensors.iter().enumerate() {
        for j in 0..t.data.len() {
            let mut plus = fno.clone();
            plus.params.tensors[ti].data[j] += h;
            let mut minus = fno.clone();
            minus.params.tensors[ti].data[j] -= h;
            let fd = (objective(&plus, &plan, &x, &up) - objective(&minus, &plan, &x, &up)) / (2.0 * h);
            let an = grad.tensors[ti].data[j];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
            if rel > worst.0 {
                worst = (rel, format!("{}[{j}]: analytic {an:e}, fd {fd:e}", t.name));
            }
        }
    }
    assert!(worst.0 < 1e-4, "{act:?}: worst relative error {:e} at {}", worst.0, worst.1);
}

#[test]
fn every_gradient_matches_finite_differences_relu() {
    check(Activation::Relu, 11);
}

#[test]
fn every_gradient_matches_finite_differences_gelu() {
    check(Activation::Gelu, 12);
}

#[test]
fn two_dimensional_gradients_match_finite_differences() {
    let c = FnoConfig {
        spatial_dim: 2,
        modes: vec![3, 3],
        ..tiny(Activation::Gelu)
    };
    let fno = Fno::new(params(&c, 21));
    let plan = fno.plan(&[8, 8]).unwrap();
    let x = sample(3 * 64, 22);
    let up = sample(64, 23);
    let (_, tape) = fno.forward_tape(&plan, &x).unwrap();
    let grad = fno.backward(&plan, &x, &tape, &up);
    let h = 1e-5;
    for (ti, t) in fno.params.tensors.iter().enumerate() {
        for j in (0..t.data.len()).step_by(3) {
            let mut plus = fno.clone();
            plus.params.tensors[ti].data[j] += h;
            let mut minus = fno.clone();
            minus.params.tensors[ti].data[j] -= h;
            let fd = (objective(&plus, &plan, &x, &up) - objective(&minus, &plan, &x, &up)) / (2.0 * h);
            let an = grad.tensors[ti].data[j];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
            assert!(rel < 1e-4, "{}[{j}]: analytic {an:e}, fd {fd:e}", t.name);
        }
    }
}

#[test]
fn gradients_add_over_batch_elements() {
    let c = tiny(Activation::Relu);
    let fno = Fno::new(params(&c, 31));
    let plan = fno.plan(&[16]).unwrap();
    let (xa, xb) = (sample(48, 32), sample(48, 33));
    let (ua, ub) = (sample(16, 34), sample(16, 35));
    let ga = fno.batch_gradient(&plan, &[&xa], &[&ua]).unwrap();
    let gb = fno.batch_gradient(&plan, &[&xb], &[&ub]).unwrap();
    let both = fno.batch_gradient(&plan, &[&xa, &xb], &[&ua, &ub]).unwrap();
    for ((a, b), s) in ga.tensors.iter().zip(&gb.tensors).zip(&both.tensors) {
        for ((x, y), z) in a.data.iter().zip(&b.data).zip(&s.data) {
            assert!((x + y - z).abs() <= 1e-12 * (1.0 + z.abs()));
        }
    }
}

#[test]
fn gradients_are_linear_in_the_upstream() {
    let c = tiny(Activation::Gelu);
    let fno = Fno::new(params(&c, 41));
    let plan = fno.plan(&[16]).unwrap();
    let x = sample(48, 42);
    let u = sample(16, 43);
    let u3: Vec<f64> = u.iter().map(|v| 3.0 * v).collect();
    let g1 = fno.batch_gradient(&plan, &[&x], &[&u]).unwrap();
    let g3 = fno.batch_gradient(&plan, &[&x], &[&u3]).unwrap();
    for (a, b) in g1.tensors.iter().zip(&g3.tensors) {
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((3.0 * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }
}
