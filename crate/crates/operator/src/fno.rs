//! Forward pass and reverse-mode gradients.
//!
//! Fields are stored channel-major: `[channel][point]`, with points in the
//! row-major order of the grid. A Fourier layer maps `v ↦ W v + b + K(v)`
//! where `K` multiplies the retained Fourier modes of `v` by the complex
//! matrices `R_κ`:
//!
//! ```text
//! K(v)(x) = (1/N) Σ_{κ∈S} c_κ Re( R_κ v̂_κ e^{2πi κ·x} ),   c_κ = 1 on the k_last = 0 plane, else 2
//! ```
//!
//! so the output is real and every retained mode stands for itself and its
//! conjugate partner.

use nors_core::spectral::{index_of, Spectral};
use num_complex::Complex64 as C64;

use crate::config::{Activation, FnoConfig};
use crate::params::{slot_modes, FnoParams};
use crate::{OpError, Result};

/// FFT plans and retained-mode positions for one grid.
#[derive(Debug)]
pub struct GridPlan {
    sizes: Vec<usize>,
    spectral: Spectral,
    slot_index: Vec<usize>,
    slot_scale: Vec<f64>,
}

impl GridPlan {
    pub fn new(config: &FnoConfig, sizes: &[usize]) -> Result<Self> {
        config.check_grid(sizes)?;
        let n = sizes.iter().product::<usize>() as f64;
        let mut slot_index = Vec::new();
        let mut slot_scale = Vec::new();
        for k in slot_modes(config) {
            let (flat, last) = match sizes.len() {
                1 => (k[0] as usize, k[0]),
                _ => (index_of(k[0], sizes[0]) * sizes[1] + k[1] as usize, k[1]),
            };
            slot_index.push(flat);
            slot_scale.push(if last == 0 { 1.0 } else { 2.0 } / n);
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            spectral: Spectral::new(sizes),
            slot_index,
            slot_scale,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn points(&self) -> usize {
        self.spectral.points()
    }

    fn slots(&self) -> usize {
        self.slot_index.len()
    }
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    /// Hidden states `v_0 … v_K`, each `[h][N]`.
    hidden: Vec<Vec<f64>>,
    /// Pre-activations of each Fourier layer.
    pre: Vec<Vec<f64>>,
    /// Retained spectra of each layer input, `[h][S]`.
    spectra: Vec<Vec<C64>>,
    /// Projection pre-activation and activation, `[H_q][N]`.
    q_pre: Vec<f64>,
    q_act: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fno {
    pub params: FnoParams,
}

impl Fno {
    pub fn new(params: FnoParams) -> Self {
        Self { params }
    }

    pub fn config(&self) -> &FnoConfig {
        &self.params.config
    }

    pub fn plan(&self, sizes: &[usize]) -> Result<GridPlan> {
        GridPlan::new(self.config(), sizes)
    }

    /// Output `[C_out][N]` for input `[C_in][N]`.
    pub fn forward(&self, plan: &GridPlan, input: &[f64]) -> Result<Vec<f64>> {
        self.forward_tape(plan, input).map(|(y, _)| y)
    }

    pub fn forward_tape(&self, plan: &GridPlan, input: &[f64]) -> Result<(Vec<f64>, Tape)> {
        let c = self.config();
        let n = plan.points();
        if input.len() != c.in_channels * n {
            return Err(OpError::Shape(format!(
                "input holds {} values, expected {} channels × {n} points",
                input.len(),
                c.in_channels
            )));
        }
        if plan.slots() != c.slots() {
            return Err(OpError::Config("grid plan built for another mode set".into()));
        }
        let p = &self.params;
        let h = c.hidden;
        let mut hidden = vec![linear(p.p_weight(), p.p_bias(), input, h, c.in_channels, n)];
        let mut pre = Vec::with_capacity(c.layers);
        let mut spectra = Vec::with_capacity(c.layers);
        for l in 0..c.layers {
            let v = &hidden[l];
            let mut z = linear(p.weight(l), p.bias(l), v, h, h, n);
            let vhat = spectral_forward(plan, p.spectral(l), v, h, &mut z);
            let next = if l + 1 < c.layers {
                z.iter().map(|&t| c.activation.apply(t)).collect()
            } else {
                z.clone()
            };
            pre.push(z);
            spectra.push(vhat);
            hidden.push(next);
        }
        let q_pre = linear(p.q1_weight(), p.q1_bias(), &hidden[c.layers], c.projection_hidden, h, n);
        let q_act: Vec<f64> = q_pre.iter().map(|&t| c.activation.apply(t)).collect();
        let out = linear(p.q2_weight(), p.q2_bias(), &q_act, c.out_channels, c.projection_hidden, n);
        Ok((
            out,
            Tape {
                hidden,
                pre,
                spectra,
                q_pre,
                q_act,
            },
        ))
    }

    /// Gradient of `Σ upstream · output` with respect to every parameter.
    pub fn backward(&self, plan: &GridPlan, input: &[f64], tape: &Tape, upstream: &[f64]) -> FnoParams {
        let c = self.config();
        let p = &self.params;
        let n = plan.points();
        let (h, hq) = (c.hidden, c.projection_hidden);
        let mut g = FnoParams::zeros(c).expect("validated config");
        let qi = 2 + 3 * c.layers;

        let (dw, db) = pair_mut(&mut g, qi + 2);
        let mut ds = linear_backward(p.q2_weight(), &tape.q_act, upstream, c.out_channels, hq, n, dw, db);
        mul_activation_derivative(&mut ds, &tape.q_pre, c.activation);
        let (dw, db) = pair_mut(&mut g, qi);
        let mut dv = linear_backward(p.q1_weight(), &tape.hidden[c.layers], &ds, hq, h, n, dw, db);

        for l in (0..c.layers).rev() {
            let mut dz = dv;
            if l + 1 < c.layers {
                mul_activation_derivative(&mut dz, &tape.pre[l], c.activation);
            }
            let (before, rest) = g.tensors.split_at_mut(3 + 3 * l);
            let (dw, db) = rest.split_at_mut(1);
            dv = linear_backward(p.weight(l), &tape.hidden[l], &dz, h, h, n, &mut dw[0].data, &mut db[0].data);
            spectral_backward(
                plan,
                p.spectral(l),
                &tape.spectra[l],
                &dz,
                h,
                &mut before[2 + 3 * l].data,
                &mut dv,
            );
        }

        let (dw, db) = pair_mut(&mut g, 0);
        linear_backward(p.p_weight(), input, &dv, h, c.in_channels, n, dw, db);
        g
    }
}

impl Fno {
    /// Sum of per-sample gradients, accumulated in sample order.
    pub fn batch_gradient(&self, plan: &GridPlan, inputs: &[&[f64]], upstreams: &[&[f64]]) -> Result<FnoParams> {
        if inputs.len() != upstreams.len() {
            return Err(OpError::Shape(format!(
                "{} inputs but {} upstream cotangents",
                inputs.len(),
                upstreams.len()
            )));
        }
        let mut total = FnoParams::zeros(self.config())?;
        for (x, u) in inputs.iter().zip(upstreams) {
            let (y, tape) = self.forward_tape(plan, x)?;
            if u.len() != y.len() {
                return Err(OpError::Shape(format!("upstream holds {} values, output {}", u.len(), y.len())));
            }
            total.axpy(1.0, &self.backward(plan, x, &tape, u));
        }
        Ok(total)
    }
}

/// Data of tensors `i` and `i + 1`.
fn pair_mut(p: &mut FnoParams, i: usize) -> (&mut [f64], &mut [f64]) {
    let (a, b) = p.tensors.split_at_mut(i + 1);
    (&mut a[i].data, &mut b[0].data)
}

/// `y[o] = Σ_i w[o][i] x[i] + b[o]` over all points.
fn linear(w: &[f64], b: &[f64], x: &[f64], outs: usize, ins: usize, n: usize) -> Vec<f64> {
    let mut y = vec![0.0; outs * n];
    for o in 0..outs {
        let row = &mut y[o * n..(o + 1) * n];
        row.fill(b[o]);
        for i in 0..ins {
            let a = w[o * ins + i];
            if a == 0.0 {
                continue;
            }
            for (r, &xv) in row.iter_mut().zip(&x[i * n..(i + 1) * n]) {
                *r += a * xv;
            }
        }
    }
    y
}

/// Accumulates weight and bias gradients and returns the input gradient.
#[allow(clippy::too_many_arguments)]
fn linear_backward(
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    outs: usize,
    ins: usize,
    n: usize,
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; ins * n];
    for o in 0..outs {
        let dyo = &dy[o * n..(o + 1) * n];
        db[o] += dyo.iter().sum::<f64>();
        for i in 0..ins {
            let xi = &x[i * n..(i + 1) * n];
            dw[o * ins + i] += dyo.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
            let a = w[o * ins + i];
            for (d, &g) in dx[i * n..(i + 1) * n].iter_mut().zip(dyo) {
                *d += a * g;
            }
        }
    }
    dx
}

fn mul_activation_derivative(d: &mut [f64], pre: &[f64], act: Activation) {
    for (g, &z) in d.iter_mut().zip(pre) {
        *g *= act.derivative(z);
    }
}

#[inline]
fn weight(r: &[f64], s: usize, o: usize, i: usize, h: usize) -> C64 {
    let k = 2 * ((s * h + o) * h + i);
    C64::new(r[k], r[k + 1])
}

/// Adds `K(v)` to `z` and returns the retained spectra of `v`.
fn spectral_forward(plan: &GridPlan, r: &[f64], v: &[f64], h: usize, z: &mut [f64]) -> Vec<C64> {
    let n = plan.points();
    let s_len = plan.slots();
    let mut buf = vec![C64::default(); n];
    let mut vhat = vec![C64::default(); h * s_len];
    for i in 0..h {
        for (b, &x) in buf.iter_mut().zip(&v[i * n..(i + 1) * n]) {
            *b = C64::new(x, 0.0);
        }
        plan.spectral.forward_in_place(&mut buf);
        for (s, &idx) in plan.slot_index.iter().enumerate() {
            vhat[i * s_len + s] = buf[idx];
        }
    }
    let mut yhat = vec![C64::default(); h * s_len];
    for s in 0..s_len {
        for o in 0..h {
            let mut acc = C64::default();
            for i in 0..h {
                acc += weight(r, s, o, i, h) * vhat[i * s_len + s];
            }
            yhat[o * s_len + s] = acc * plan.slot_scale[s];
        }
    }
    for o in 0..h {
        buf.fill(C64::default());
        for (s, &idx) in plan.slot_index.iter().enumerate() {
            buf[idx] = yhat[o * s_len + s];
        }
        plan.spectral.inverse_in_place(&mut buf);
        for (zv, b) in z[o * n..(o + 1) * n].iter_mut().zip(&buf) {
            *zv += b.re;
        }
    }
    vhat
}

/// Accumulates `∂/∂R` into `dr` and `∂/∂v` into `dv` given `dz = ∂/∂K(v)`.
fn spectral_backward(
    plan: &GridPlan,
    r: &[f64],
    vhat: &[C64],
    dz: &[f64],
    h: usize,
    dr: &mut [f64],
    dv: &mut [f64],
) {
    let n = plan.points();
    let s_len = plan.slots();
    let mut buf = vec![C64::default(); n];
    let mut g = vec![C64::default(); h * s_len];
    for o in 0..h {
        for (b, &x) in buf.iter_mut().zip(&dz[o * n..(o + 1) * n]) {
            *b = C64::new(x, 0.0);
        }
        plan.spectral.forward_in_place(&mut buf);
        for (s, &idx) in plan.slot_index.iter().enumerate() {
            g[o * s_len + s] = buf[idx] * plan.slot_scale[s];
        }
    }
    let mut dvhat = vec![C64::default(); h * s_len];
    for s in 0..s_len {
        for o in 0..h {
            let go = g[o * s_len + s];
            for i in 0..h {
                let k = 2 * ((s * h + o) * h + i);
                let d = go * vhat[i * s_len + s].conj();
                dr[k] += d.re;
                dr[k + 1] += d.im;
                dvhat[i * s_len + s] += weight(r, s, o, i, h).conj() * go;
            }
        }
    }
    for i in 0..h {
        buf.fill(C64::default());
        for (s, &idx) in plan.slot_index.iter().enumerate() {
            buf[idx] = dvhat[i * s_len + s];
        }
        plan.spectral.inverse_in_place(&mut buf);
        for (d, b) in dv[i * n..(i + 1) * n].iter_mut().zip(&buf) {
            *d += b.re;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nors_core::RngStream;

    fn config(dim: usize, act: Activation) -> FnoConfig {
        FnoConfig {
            spatial_dim: dim,
            in_channels: 3,
            hidden: 4,
            layers: 2,
            modes: vec![3; dim],
            projection_hidden: 5,
            out_channels: 1,
            activation: act,
        }
    }

    fn random_params(c: &FnoConfig, seed: u64) -> FnoParams {
        let mut p = FnoParams::init(c, &mut RngStream::new(seed, 0)).unwrap();
        let mut s = RngStream::new(seed, 1);
        for t in &mut p.tensors {
            let amp = if t.name.ends_with(".spectral") { 0.3 } else { 0.2 };
            for v in &mut t.data {
                *v += amp * s.normal();
            }
        }
        p
    }

    #[test]
    fn spectral_layer_of_a_single_mode() {
        // With identity weights on mode 1, K maps cos(2πx) to itself.
        let c = FnoConfig {
            hidden: 1,
            modes: vec![2],
            ..config(1, Activation::Relu)
        };
        let plan = GridPlan::new(&c, &[8]).unwrap();
        let mut r = vec![0.0; 2 * 2];
        r[2] = 1.0;
        let v: Vec<f64> = (0..8)
            .map(|j| (2.0 * std::f64::consts::PI * j as f64 / 8.0).cos())
            .collect();
        let mut z = vec![0.0; 8];
        spectral_forward(&plan, &r, &v, 1, &mut z);
        for (a, b) in z.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bias_only_network_is_constant() {
        let c = config(1, Activation::Relu);
        let mut p = FnoParams::zeros(&c).unwrap();
        let qi = p.tensors.len() - 1;
        p.tensors[qi].data[0] = 0.75;
        let f = Fno::new(p);
        let plan = f.plan(&[16]).unwrap();
        let y = f.forward(&plan, &[1.0; 48]).unwrap();
        assert!(y.iter().all(|&v| v == 0.75));
    }

    #[test]
    fn rejects_wrong_input_size() {
        let c = config(1, Activation::Relu);
        let f = Fno::new(FnoParams::zeros(&c).unwrap());
        let plan = f.plan(&[16]).unwrap();
        assert!(matches!(f.forward(&plan, &[0.0; 10]), Err(OpError::Shape(_))));
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let c = config(1, Activation::Gelu);
        let f = Fno::new(random_params(&c, 4));
        let plan = f.plan(&[16]).unwrap();
        let x: Vec<f64> = (0..48).map(|i| (i as f64 * 0.37).sin()).collect();
        let (_, tape) = f.forward_tape(&plan, &x).unwrap();
        let g = f.backward(&plan, &x, &tape, &[0.0; 16]);
        assert!(g.tensors.iter().all(|t| t.data.iter().all(|&v| v == 0.0)));
    }
}
