//! Samplers for space-time white noise, initial conditions and forcings.
//!
//! Every sampler is a pure function of its grid, its parameters and the
//! [`RngStream`] handed in.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::spectral::{index_of, Spectral, C64};
use crate::{Error, Grid, Result, RngStream, SpaceTimeField, SpatialField};

/// Discrete space-time white noise: i.i.d. `N(0, 1 / (dt ∏ dx_i))` entries,
/// so that the integral over one cell is `N(0, dt ∏ dx_i)`. All `N_t + 1`
/// slices are drawn in row-major order; slice `n` drives `[n dt, (n+1) dt)`.
pub fn sample_white_noise(grid: &Grid, stream: &mut RngStream) -> SpaceTimeField {
    let std = (1.0 / (grid.dt() * grid.cell_volume())).sqrt();
    let mut values = vec![0.0; (grid.time_steps() + 1) * grid.points()];
    stream.fill_normal(&mut values, std);
    SpaceTimeField::from_parts_unchecked(grid.clone(), values)
}

fn require_1d(grid: &Grid, what: &str) -> Result<()> {
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid(format!("{what} needs a 1-d grid")));
    }
    Ok(())
}

fn require_2d(grid: &Grid, what: &str) -> Result<()> {
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid(format!("{what} needs a 2-d grid")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaSpec {
    /// Frequency scale λ.
    pub lambda: f64,
    /// Mode cutoff K.
    pub cutoff: usize,
}

impl Default for EtaSpec {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            cutoff: 10,
        }
    }
}

/// `η(x) = Σ_{k=-K}^{K} a_k / (1 + k²) · sin(k π (x - 0.5) / λ)` for given
/// coefficients `a_{-K}, …, a_K`.
pub fn eta_from_coefficients(grid: &Grid, lambda: f64, coeffs: &[f64]) -> Result<SpatialField> {
    require_1d(grid, "eta")?;
    if coeffs.len() % 2 != 1 {
        return Err(Error::Config("eta needs 2K+1 coefficients".into()));
    }
    let cutoff = (coeffs.len() / 2) as i64;
    Ok(SpatialField::from_fn(grid, |x| {
        (-cutoff..=cutoff)
            .zip(coeffs)
            .map(|(k, a)| {
                let k = k as f64;
                a / (1.0 + k * k) * (k * PI * (x[0] - 0.5) / lambda).sin()
            })
            .sum()
    }))
}

/// Draws `a_k ~ N(0, 1)` in the order `k = -K, …, K` and evaluates η.
pub fn sample_eta(grid: &Grid, stream: &mut RngStream, spec: &EtaSpec) -> Result<SpatialField> {
    if !(spec.lambda > 0.0) {
        return Err(Error::Config(format!("eta λ must be positive, got {}", spec.lambda)));
    }
    let coeffs: Vec<f64> = (0..2 * spec.cutoff + 1).map(|_| stream.normal()).collect();
    eta_from_coefficients(grid, spec.lambda, &coeffs)
}

/// `u0(x) = x (1 - x) + κ η(x)`; with `κ = 0` no randomness is consumed.
pub fn phi41_initial(
    grid: &Grid,
    kappa: f64,
    stream: &mut RngStream,
    eta: &EtaSpec,
) -> Result<SpatialField> {
    require_1d(grid, "phi41 initial condition")?;
    if !(kappa >= 0.0) {
        return Err(Error::Config(format!("κ must be ≥ 0, got {kappa}")));
    }
    let mut u0 = SpatialField::from_fn(grid, |x| x[0] * (1.0 - x[0]));
    if kappa != 0.0 {
        let e = sample_eta(grid, stream, eta)?;
        u0.values_mut()
            .iter_mut()
            .zip(e.values())
            .for_each(|(u, e)| *u += kappa * e);
    }
    Ok(u0)
}

/// Spectral law of a periodic Gaussian random field: mode `k` carries
/// amplitude `amp · (4π²|k|² + shift)^(-power/2)` and the mean mode is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrfSpec {
    pub power: f64,
    pub shift: f64,
    pub amp: f64,
}

impl Default for GrfSpec {
    /// `7^{3/2} (4π²|k|² + 49)^{-5/2}`.
    fn default() -> Self {
        Self {
            power: 5.0,
            shift: 49.0,
            amp: 7f64.powf(1.5),
        }
    }
}

impl GrfSpec {
    pub fn amplitude(&self, k_squared: f64) -> f64 {
        if k_squared == 0.0 {
            0.0
        } else {
            self.amp * (4.0 * PI * PI * k_squared + self.shift).powf(-self.power / 2.0)
        }
    }
}

/// Mode amplitudes `a_k` on `spectral`, with `a_k = a_{-k}`.
fn hermitian_field(
    spectral: &Spectral,
    amplitude: impl Fn(f64) -> f64,
    stream: &mut RngStream,
) -> Vec<f64> {
    let sizes = spectral.sizes().to_vec();
    let n = spectral.points();
    let z: Vec<C64> = (0..n)
        .map(|_| {
            let re = stream.normal();
            C64::new(re, stream.normal())
        })
        .collect();
    let k2 = spectral.k_squared();
    let mirror = |i: usize| -> usize {
        let k = spectral.mode(i);
        match sizes.len() {
            1 => index_of(-k[0], sizes[0]),
            _ => index_of(-k[0], sizes[0]) * sizes[1] + index_of(-k[1], sizes[1]),
        }
    };
    // (z_k + conj z_{-k}) / 2 makes the spectrum Hermitian; the resulting field
    // is Σ_k a_k Re(z_k e^{2πi k·x}).
    let spec: Vec<C64> = (0..n)
        .map(|i| (z[i] + z[mirror(i)].conj()) * (0.5 * amplitude(k2[i])))
        .collect();
    let mut buf = spec;
    spectral.inverse_in_place(&mut buf);
    let scale = buf.iter().fold(0.0f64, |m, c| m.max(c.re.abs())).max(1.0);
    debug_assert!(
        buf.iter().all(|c| c.im.abs() <= 1e-12 * scale),
        "Hermitian spectrum left an imaginary residue"
    );
    buf.iter().map(|c| c.re).collect()
}

/// Mean-zero periodic Gaussian random field (used for the initial vorticity).
pub fn sample_grf(grid: &Grid, spec: &GrfSpec, stream: &mut RngStream) -> Result<SpatialField> {
    let spectral = Spectral::new(grid.sizes());
    let values = hermitian_field(&spectral, |k2| spec.amplitude(k2), stream);
    Ok(SpatialField::from_parts_unchecked(grid.clone(), values))
}

pub fn sample_grf_vorticity(
    grid: &Grid,
    spec: &GrfSpec,
    stream: &mut RngStream,
) -> Result<SpatialField> {
    require_2d(grid, "vorticity GRF")?;
    sample_grf(grid, spec, stream)
}

/// Random-forcing variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    White,
    /// White noise filtered per time slice by `(1 + 4π²|k|²/shift)^(-power/2)`
    /// (the GRF spectral shape normalised to 1 at `k = 0`).
    SmoothedWhite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingSpec {
    pub power: f64,
    pub shift: f64,
}

impl Default for SmoothingSpec {
    fn default() -> Self {
        Self {
            power: 2.5,
            shift: 49.0,
        }
    }
}

impl SmoothingSpec {
    pub fn filter(&self, k_squared: f64) -> f64 {
        (1.0 + 4.0 * PI * PI * k_squared / self.shift).powf(-self.power / 2.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    /// Noise scale σ.
    pub sigma: f64,
    /// Amplitude of the deterministic force `A (sin 2π(x₁+x₂) + cos 2π(x₁+x₂))`;
    /// zero disables it.
    pub deterministic_amplitude: f64,
    pub kind: NoiseKind,
    pub smoothing: SmoothingSpec,
}

impl ForcingSpec {
    pub fn additive(sigma: f64) -> Self {
        Self {
            sigma,
            deterministic_amplitude: 0.0,
            kind: NoiseKind::White,
            smoothing: SmoothingSpec::default(),
        }
    }

    pub fn navier_stokes() -> Self {
        Self {
            sigma: 0.05,
            deterministic_amplitude: 0.1,
            kind: NoiseKind::SmoothedWhite,
            smoothing: SmoothingSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("σ must be ≥ 0, got {}", self.sigma)));
        }
        if !(self.smoothing.shift > 0.0) {
            return Err(Error::Config("smoothing shift must be positive".into()));
        }
        Ok(())
    }

    /// Samples the unscaled random forcing ξ of this spec.
    pub fn sample_noise(&self, grid: &Grid, stream: &mut RngStream) -> SpaceTimeField {
        let mut xi = sample_white_noise(grid, stream);
        if self.kind == NoiseKind::SmoothedWhite {
            let spectral = Spectral::new(grid.sizes());
            let filt: Vec<f64> = spectral
                .k_squared()
                .into_iter()
                .map(|k2| self.smoothing.filter(k2))
                .collect();
            for n in 0..=grid.time_steps() {
                let s: Vec<C64> = spectral
                    .forward_real(xi.slice(n))
                    .iter()
                    .zip(&filt)
                    .map(|(c, g)| c * g)
                    .collect();
                xi.slice_mut(n).copy_from_slice(&spectral.inverse_real(s));
            }
        }
        xi
    }
}

/// Deterministic Navier–Stokes force `A (sin 2π(x₁+x₂) + cos 2π(x₁+x₂))`.
pub fn deterministic_force(grid: &Grid, amplitude: f64) -> SpatialField {
    SpatialField::from_fn(grid, |x| {
        let s = 2.0 * PI * x.iter().sum::<f64>();
        amplitude * (s.sin() + s.cos())
    })
}

/// Deterministic force `f` and unscaled random forcing `ξ` for the 2-d
/// Navier–Stokes equation. The solver adds `f + σ ξ`.
pub fn ns_forcing(
    grid: &Grid,
    spec: &ForcingSpec,
    stream: &mut RngStream,
) -> Result<(SpatialField, SpaceTimeField)> {
    require_2d(grid, "Navier-Stokes forcing")?;
    spec.validate()?;
    Ok((
        deterministic_force(grid, spec.deterministic_amplitude),
        spec.sample_noise(grid, stream),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients_give_zero_eta() {
        let g = Grid::new(1, &[64], 1, 0.05).unwrap();
        let e = eta_from_coefficients(&g, 2.0, &[0.0; 21]).unwrap();
        assert_eq!(e.max_abs(), 0.0);
    }

    #[test]
    fn k0_term_is_silent() {
        let g = Grid::new(1, &[64], 1, 0.05).unwrap();
        let mut a = vec![0.0; 21];
        a[10] = 5.0;
        assert_eq!(eta_from_coefficients(&g, 2.0, &a).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn fixed_phi41_initial_condition() {
        let g = Grid::new(1, &[128], 100, 0.05).unwrap();
        let mut s = RngStream::new(0, 0);
        let u0 = phi41_initial(&g, 0.0, &mut s, &EtaSpec::default()).unwrap();
        assert_eq!(u0.values()[64], 0.25);
        for (j, v) in u0.values().iter().enumerate() {
            let x = j as f64 / 128.0;
            assert_eq!(*v, x * (1.0 - x));
        }
    }

    #[test]
    fn forcing_formula() {
        let g = Grid::new(2, &[8, 8], 1, 0.05).unwrap();
        let f = deterministic_force(&g, 0.1);
        assert!((f.values()[0] - 0.1).abs() < 1e-15);
        // Constant along x1 + x2 = const: (1, 3) and (3, 1) on the grid.
        assert!((f.values()[8 + 3] - f.values()[3 * 8 + 1]).abs() < 1e-15);
    }

    #[test]
    fn grf_is_mean_zero_and_reproducible() {
        let g = Grid::new(2, &[16, 16], 1, 0.05).unwrap();
        let spec = GrfSpec::default();
        let a = sample_grf_vorticity(&g, &spec, &mut RngStream::new(3, 9)).unwrap();
        let b = sample_grf_vorticity(&g, &spec, &mut RngStream::new(3, 9)).unwrap();
        assert_eq!(a, b);
        let mean: f64 = a.values().iter().sum::<f64>() / 256.0;
        assert!(mean.abs() < 1e-15);
        assert!(a.max_abs() > 0.0);
        assert!(sample_grf_vorticity(&Grid::new(1, &[16], 1, 0.05).unwrap(), &spec, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn smoothed_noise_keeps_the_mean_mode() {
        let g = Grid::new(2, &[8, 8], 2, 0.05).unwrap();
        let mut spec = ForcingSpec::navier_stokes();
        spec.kind = NoiseKind::White;
        let white = spec.sample_noise(&g, &mut RngStream::new(1, 2));
        spec.kind = NoiseKind::SmoothedWhite;
        let smooth = spec.sample_noise(&g, &mut RngStream::new(1, 2));
        let m = |f: &SpaceTimeField| f.slice(0).iter().sum::<f64>();
        assert!((m(&white) - m(&smooth)).abs() < 1e-9 * m(&white).abs().max(1.0));
        let e = |f: &SpaceTimeField| f.values().iter().map(|v| v * v).sum::<f64>();
        assert!(e(&smooth) < e(&white));
    }
}
