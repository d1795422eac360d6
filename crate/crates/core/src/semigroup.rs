//! The heat semigroup `e^{t ν Δ}` on the periodic torus and its Duhamel
//! integral, both diagonal in Fourier space.
//!
//! `I_c[u0](t) = e^{t ν Δ} u0` is evaluated exactly per mode. For
//! `I[f](t) = ∫_0^t e^{(t-s) ν Δ} f(s) ds` the forcing is taken piecewise
//! constant on each `[n dt, (n+1) dt)` and integrated exactly:
//!
//! ```text
//! Ĵ_{n+1} = e^{-λ dt} Ĵ_n + dt φ₁(λ dt) f̂_n,   Ĵ_0 = 0,   φ₁(z) = (1 - e^{-z}) / z
//! ```
//!
//! with `λ_k = ν 4π² |k|²`.

use std::f64::consts::PI;

use crate::spectral::{Spectral, C64};
use crate::{Error, Grid, Result, SpaceTimeField, SpatialField};

/// `φ₁(z) = (1 - e^{-z}) / z`, with `φ₁(0) = 1`.
pub fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        -(-z).exp_m1() / z
    }
}

#[derive(Clone, Debug)]
pub struct SemigroupContext {
    grid: Grid,
    nu: f64,
    spectral: Spectral,
    eigenvalues: Vec<f64>,
    step_decay: Vec<f64>,
    step_phi1: Vec<f64>,
}

impl SemigroupContext {
    pub fn new(grid: &Grid, nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(Error::Config(format!("diffusion coefficient must be ≥ 0, got {nu}")));
        }
        let spectral = Spectral::new(grid.sizes());
        let dt = grid.dt();
        let eigenvalues: Vec<f64> = spectral
            .k_squared()
            .into_iter()
            .map(|k2| nu * 4.0 * PI * PI * k2)
            .collect();
        let step_decay = eigenvalues.iter().map(|l| (-l * dt).exp()).collect();
        let step_phi1 = eigenvalues.iter().map(|l| phi1(l * dt)).collect();
        Ok(Self {
            grid: grid.clone(),
            nu,
            spectral,
            eigenvalues,
            step_decay,
            step_phi1,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// `λ_k = ν 4π² |k|²` per flat spectral index.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `e^{-λ_k dt}`.
    pub fn step_decay(&self) -> &[f64] {
        &self.step_decay
    }

    /// `φ₁(λ_k dt)`.
    pub fn step_phi1(&self) -> &[f64] {
        &self.step_phi1
    }

    /// `e^{t ν Δ} u0` at every storage time. Slice 0 is `u0` itself.
    pub fn apply_ic(&self, u0: &SpatialField) -> Result<SpaceTimeField> {
        self.grid.check_same(u0.grid(), "apply_ic")?;
        let p = self.grid.points();
        let nt = self.grid.time_steps();
        let dt = self.grid.dt();
        let spec = self.spectral.forward_real(u0.values());
        let mut out = Vec::with_capacity((nt + 1) * p);
        out.extend_from_slice(u0.values());
        for n in 1..=nt {
            let t = n as f64 * dt;
            let s: Vec<C64> = spec
                .iter()
                .zip(&self.eigenvalues)
                .map(|(c, l)| c * (-l * t).exp())
                .collect();
            out.extend(self.spectral.inverse_real(s));
        }
        Ok(SpaceTimeField::from_parts_unchecked(self.grid.clone(), out))
    }

    /// `e^{t ν Δ} u` for an arbitrary `t ≥ 0`.
    pub fn propagate(&self, u: &SpatialField, t: f64) -> Result<SpatialField> {
        self.grid.check_same(u.grid(), "propagate")?;
        let s: Vec<C64> = self
            .spectral
            .forward_real(u.values())
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| c * (-l * t).exp())
            .collect();
        Ok(SpatialField::from_parts_unchecked(
            self.grid.clone(),
            self.spectral.inverse_real(s),
        ))
    }

    fn integrate(&self, f: &SpaceTimeField, mut emit: impl FnMut(usize, &[C64])) -> Result<()> {
        self.grid.check_same(f.grid(), "apply_i")?;
        let dt = self.grid.dt();
        let mut acc = vec![C64::default(); self.grid.points()];
        for n in 0..self.grid.time_steps() {
            let fhat = self.spectral.forward_real(f.slice(n));
            for (k, a) in acc.iter_mut().enumerate() {
                *a = *a * self.step_decay[k] + fhat[k] * (dt * self.step_phi1[k]);
            }
            emit(n + 1, &acc);
        }
        Ok(())
    }

    /// `I[f]` at every storage time; slice 0 is zero.
    pub fn apply_i(&self, f: &SpaceTimeField) -> Result<SpaceTimeField> {
        let p = self.grid.points();
        let mut out = vec![0.0; (self.grid.time_steps() + 1) * p];
        self.integrate(f, |n, acc| {
            let v = self.spectral.inverse_real(acc.to_vec());
            out[n * p..(n + 1) * p].copy_from_slice(&v);
        })?;
        Ok(SpaceTimeField::from_parts_unchecked(self.grid.clone(), out))
    }

    /// `I[f](T)` only; skips the inverse transforms of intermediate slices.
    pub fn apply_i_final(&self, f: &SpaceTimeField) -> Result<SpatialField> {
        let nt = self.grid.time_steps();
        let mut last = Vec::new();
        self.integrate(f, |n, acc| {
            if n == nt {
                last = acc.to_vec();
            }
        })?;
        Ok(SpatialField::from_parts_unchecked(
            self.grid.clone(),
            self.spectral.inverse_real(last),
        ))
    }

    /// `∂^a` applied slice by slice, `a` a multi-index over the spatial axes.
    pub fn derivative(&self, f: &SpaceTimeField, multi_index: &[u32]) -> Result<SpaceTimeField> {
        self.grid.check_same(f.grid(), "derivative")?;
        let mult = derivative_multiplier(&self.spectral, multi_index)?;
        let p = self.grid.points();
        let mut out = Vec::with_capacity(f.values().len());
        for n in 0..=self.grid.time_steps() {
            let s: Vec<C64> = self
                .spectral
                .forward_real(f.slice(n))
                .iter()
                .zip(&mult)
                .map(|(c, m)| c * m)
                .collect();
            out.extend(self.spectral.inverse_real(s));
        }
        debug_assert_eq!(out.len(), (self.grid.time_steps() + 1) * p);
        Ok(SpaceTimeField::from_parts_unchecked(self.grid.clone(), out))
    }
}

/// Fourier multiplier of `∂^a`: `∏_i (2πi k_i)^{a_i}`, zero on the Nyquist
/// plane of every differentiated axis.
pub fn derivative_multiplier(spectral: &Spectral, multi_index: &[u32]) -> Result<Vec<C64>> {
    let d = spectral.sizes().len();
    if multi_index.len() != d {
        return Err(Error::InvalidAxis {
            axis: multi_index.len().saturating_sub(1),
            dim: d,
        });
    }
    Ok((0..spectral.points())
        .map(|i| {
            let k = spectral.mode(i);
            let mut m = C64::new(1.0, 0.0);
            for (axis, &order) in multi_index.iter().enumerate() {
                if order == 0 {
                    continue;
                }
                if spectral.is_nyquist(i, axis) {
                    return C64::default();
                }
                m *= C64::new(0.0, 2.0 * PI * k[axis] as f64).powu(order);
            }
            m
        })
        .collect())
}

fn unit(axis: usize, dim: usize) -> Result<Vec<u32>> {
    if axis >= dim {
        return Err(Error::InvalidAxis { axis, dim });
    }
    let mut a = vec![0; dim];
    a[axis] = 1;
    Ok(a)
}

/// First derivative of a spatial field along `axis`.
pub fn spectral_derivative(field: &SpatialField, axis: usize) -> Result<SpatialField> {
    let grid = field.grid();
    let spectral = Spectral::new(grid.sizes());
    let mult = derivative_multiplier(&spectral, &unit(axis, grid.dim())?)?;
    let s: Vec<C64> = spectral
        .forward_real(field.values())
        .iter()
        .zip(&mult)
        .map(|(c, m)| c * m)
        .collect();
    Ok(SpatialField::from_parts_unchecked(grid.clone(), spectral.inverse_real(s)))
}

/// First derivative of every slice of a space-time field along `axis`.
pub fn spectral_derivative_st(field: &SpaceTimeField, axis: usize) -> Result<SpaceTimeField> {
    let grid = field.grid();
    let a = unit(axis, grid.dim())?;
    // ν only enters the propagators, not derivatives.
    SemigroupContext::new(grid, 0.0)?.derivative(field, &a)
}

/// Entrywise product, accumulated left to right.
pub fn pointwise_product(fields: &[&SpaceTimeField]) -> Result<SpaceTimeField> {
    let (first, rest) = fields
        .split_first()
        .ok_or_else(|| Error::Config("pointwise_product needs at least one field".into()))?;
    let mut out = (*first).clone();
    for f in rest {
        if f.grid() != first.grid() {
            return Err(Error::ShapeMismatch {
                expected: first.grid().space_time_shape(),
                actual: f.grid().space_time_shape(),
            });
        }
        out.values_mut()
            .iter_mut()
            .zip(f.values())
            .for_each(|(a, b)| *a *= b);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(nx: usize) -> Grid {
        Grid::new(1, &[nx], 100, 0.05).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn phi1_limits() {
        assert_eq!(phi1(0.0), 1.0);
        assert!((phi1(1e-12) - 1.0).abs() < 1e-12);
        assert!((phi1(2.0) - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn context_invariants() {
        let ctx = SemigroupContext::new(&Grid::new(2, &[8, 8], 10, 0.05).unwrap(), 1.0).unwrap();
        assert_eq!(ctx.eigenvalues()[0], 0.0);
        assert!(ctx.step_decay().iter().all(|&m| m > 0.0 && m <= 1.0));
        assert!(ctx.step_phi1().iter().all(|&m| m > 0.0 && m <= 1.0));
    }

    #[test]
    fn sine_mode_decays_exactly() {
        let g = grid1(128);
        let ctx = SemigroupContext::new(&g, 1.0).unwrap();
        let u0 = SpatialField::from_fn(&g, |x| (2.0 * PI * x[0]).sin());
        let out = ctx.apply_ic(&u0).unwrap();
        assert_eq!(out.slice(0), u0.values());
        for n in [1, 37, 100] {
            let t = n as f64 * g.dt();
            let expect = SpatialField::from_fn(&g, |x| {
                (-4.0 * PI * PI * t).exp() * (2.0 * PI * x[0]).sin()
            });
            assert!(max_diff(out.slice(n), expect.values()) < 1e-10);
        }
    }

    #[test]
    fn constant_initial_condition_is_stationary() {
        let g = grid1(32);
        let ctx = SemigroupContext::new(&g, 1.0).unwrap();
        let out = ctx.apply_ic(&SpatialField::from_fn(&g, |_| 1.7)).unwrap();
        assert!(out.values().iter().all(|v| (v - 1.7).abs() < 1e-14));
    }

    #[test]
    fn constant_forcing_integrates_to_ct() {
        let g = grid1(32);
        let ctx = SemigroupContext::new(&g, 1.0).unwrap();
        let out = ctx.apply_i(&SpaceTimeField::constant(&g, 0.3)).unwrap();
        for n in 0..=g.time_steps() {
            let t = n as f64 * g.dt();
            assert!(out.slice(n).iter().all(|v| (v - 0.3 * t).abs() < 1e-15));
        }
    }

    #[test]
    fn time_constant_sine_forcing() {
        let g = grid1(128);
        let ctx = SemigroupContext::new(&g, 1.0).unwrap();
        let f = SpaceTimeField::from_fn(&g, |_, x| (2.0 * PI * x[0]).sin());
        let out = ctx.apply_i(&f).unwrap();
        let lam = 4.0 * PI * PI;
        for n in [1, 50, 100] {
            let t = n as f64 * g.dt();
            let expect =
                SpatialField::from_fn(&g, |x| (1.0 - (-lam * t).exp()) / lam * (2.0 * PI * x[0]).sin());
            assert!(max_diff(out.slice(n), expect.values()) < 1e-8);
        }
        let last = ctx.apply_i_final(&f).unwrap();
        assert!(max_diff(last.values(), out.slice(100)) < 1e-15);
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid1(64);
        let f = SpatialField::from_fn(&g, |x| (2.0 * PI * x[0]).sin());
        let df = spectral_derivative(&f, 0).unwrap();
        let expect = SpatialField::from_fn(&g, |x| 2.0 * PI * (2.0 * PI * x[0]).cos());
        assert!(max_diff(df.values(), expect.values()) < 1e-10);
        let c = spectral_derivative(&SpatialField::from_fn(&g, |_| 3.0), 0).unwrap();
        assert!(c.max_abs() < 1e-14);
        assert!(matches!(spectral_derivative(&f, 1), Err(Error::InvalidAxis { .. })));
    }

    #[test]
    fn derivative_along_constant_axis_vanishes() {
        let g = Grid::new(2, &[16, 8], 2, 0.1).unwrap();
        let f = SpatialField::from_fn(&g, |x| (2.0 * PI * x[1]).cos());
        assert!(spectral_derivative(&f, 0).unwrap().max_abs() < 1e-13);
        let st = SpaceTimeField::from_fn(&g, |t, x| t + (2.0 * PI * x[1]).cos());
        assert!(spectral_derivative_st(&st, 0).unwrap().values().iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn product_identities() {
        let g = grid1(16);
        let f = SpaceTimeField::from_fn(&g, |t, x| (x[0] + t).sin());
        let one = SpaceTimeField::constant(&g, 1.0);
        let zero = SpaceTimeField::zeros(&g);
        assert_eq!(pointwise_product(&[&f, &one]).unwrap(), f);
        assert!(pointwise_product(&[&f, &zero]).unwrap().values().iter().all(|&v| v == 0.0));
        let other = SpaceTimeField::zeros(&grid1(8));
        assert!(pointwise_product(&[&f, &other]).is_err());
    }
}
