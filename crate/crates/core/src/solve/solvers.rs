//! Pseudo-spectral time stepping on the storage grid.

use std::f64::consts::PI;

use super::{EquationId, EquationSpec, SolverConfig, TimeScheme};
use crate::semigroup::{derivative_multiplier, phi1};
use crate::spectral::{Spectral, C64};
use crate::{Error, Result, SpaceTimeField, SpatialField};

fn check_initial(u0: &SpatialField, xi: &SpaceTimeField, dim: usize, what: &str) -> Result<()> {
    if xi.grid().dim() != dim {
        return Err(Error::InvalidGrid(format!("{what} needs a {dim}-d grid")));
    }
    if u0.grid().sizes() != xi.grid().sizes() {
        return Err(Error::GridMismatch(format!(
            "{what}: initial condition on {:?}, noise on {:?}",
            u0.grid().sizes(),
            xi.grid().sizes()
        )));
    }
    Ok(())
}

fn guard(values: &[f64], step: usize, bound: f64) -> Result<()> {
    let mut max_abs = 0.0f64;
    for v in values {
        if !v.is_finite() {
            return Err(Error::BlowUp {
                step,
                max_abs: f64::INFINITY,
                bound,
            });
        }
        max_abs = max_abs.max(v.abs());
    }
    if max_abs > bound {
        return Err(Error::BlowUp {
            step,
            max_abs,
            bound,
        });
    }
    Ok(())
}

/// `∂_t u − νΔu = μ(u) + σ g(u) ξ` with `g ≡ 1` or `g(u) = u`.
fn reaction_diffusion(
    u0: &SpatialField,
    xi: &SpaceTimeField,
    eq: &EquationSpec,
    cfg: &SolverConfig,
    multiplicative: bool,
) -> Result<SpaceTimeField> {
    check_initial(u0, xi, 1, eq.id.as_str())?;
    cfg.validate()?;
    let grid = xi.grid();
    let spectral = Spectral::new(grid.sizes());
    let h = grid.dt() / cfg.substeps as f64;
    let (decay, gain): (Vec<f64>, Vec<f64>) = spectral
        .k_squared()
        .into_iter()
        .map(|k2| {
            let l = eq.nu * 4.0 * PI * PI * k2;
            match cfg.scheme {
                TimeScheme::Exponential => ((-l * h).exp(), h * phi1(l * h)),
                TimeScheme::ImplicitEuler => (1.0 / (1.0 + h * l), h / (1.0 + h * l)),
            }
        })
        .unzip();
    let sigma = eq.sigma();
    let reaction = eq.reaction;
    let p = grid.points();
    let mut out = Vec::with_capacity((grid.time_steps() + 1) * p);
    out.extend_from_slice(u0.values());
    let mut u = u0.values().to_vec();
    let mut u_hat = spectral.forward_real(&u);
    let mut rhs = vec![0.0; p];
    for n in 0..grid.time_steps() {
        let xi_n = xi.slice(n);
        for _ in 0..cfg.substeps {
            for ((r, &ui), &x) in rhs.iter_mut().zip(&u).zip(xi_n) {
                let g = if multiplicative { ui } else { 1.0 };
                *r = reaction.eval(ui) + sigma * g * x;
            }
            let r_hat = spectral.forward_real(&rhs);
            for k in 0..p {
                u_hat[k] = u_hat[k] * decay[k] + r_hat[k] * gain[k];
            }
            u = spectral.inverse_real(u_hat.clone());
        }
        guard(&u, n + 1, cfg.blowup_bound)?;
        out.extend_from_slice(&u);
    }
    SpaceTimeField::new(grid.clone(), out)
}

/// Dynamic Φ⁴₁ model with additive noise. Returns every storage slice.
pub fn solve_phi41(
    u0: &SpatialField,
    xi: &SpaceTimeField,
    eq: &EquationSpec,
    cfg: &SolverConfig,
) -> Result<SpaceTimeField> {
    reaction_diffusion(u0, xi, eq, cfg, false)
}

/// Reaction–diffusion with multiplicative noise `σ u ξ`.
pub fn solve_rd_mult(
    u0: &SpatialField,
    xi: &SpaceTimeField,
    eq: &EquationSpec,
    cfg: &SolverConfig,
) -> Result<SpaceTimeField> {
    reaction_diffusion(u0, xi, eq, cfg, true)
}

/// 2/3-rule mask: keeps modes with `|k_i| ≤ X_i / 3` on every axis.
pub fn dealias_mask(spectral: &Spectral) -> Vec<f64> {
    let sizes = spectral.sizes();
    (0..spectral.points())
        .map(|i| {
            let k = spectral.mode(i);
            let keep = (0..sizes.len()).all(|a| 3 * k[a].unsigned_abs() <= sizes[a] as u64);
            if keep {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Velocity `(∂₂ψ, −∂₁ψ)` from the vorticity spectrum, where
/// `ψ̂ = ω̂ / |2πk|²` and the mean mode of ψ is zero.
pub fn velocity_spectrum(spectral: &Spectral, w_hat: &[C64]) -> [Vec<C64>; 2] {
    let k2 = spectral.k_squared();
    let mut u1 = vec![C64::default(); w_hat.len()];
    let mut u2 = vec![C64::default(); w_hat.len()];
    for i in 0..w_hat.len() {
        if k2[i] == 0.0 {
            continue;
        }
        let k = spectral.mode(i);
        let psi = w_hat[i] / (4.0 * PI * PI * k2[i]);
        u1[i] = psi * C64::new(0.0, 2.0 * PI * k[1] as f64);
        u2[i] = psi * C64::new(0.0, -2.0 * PI * k[0] as f64);
    }
    [u1, u2]
}

/// Vorticity-form Navier–Stokes: Crank–Nicolson diffusion, explicit
/// dealiased advection and forcing `f + σξ`.
pub fn solve_ns2d(
    w0: &SpatialField,
    xi: &SpaceTimeField,
    f: &SpatialField,
    eq: &EquationSpec,
    cfg: &SolverConfig,
) -> Result<SpaceTimeField> {
    check_initial(w0, xi, 2, "ns2d")?;
    check_initial(f, xi, 2, "ns2d forcing")?;
    cfg.validate()?;
    let grid = xi.grid();
    let spectral = Spectral::new(grid.sizes());
    let p = grid.points();
    let h = grid.dt() / cfg.substeps as f64;
    let (num, den): (Vec<f64>, Vec<f64>) = spectral
        .k_squared()
        .into_iter()
        .map(|k2| {
            let l = eq.nu * 4.0 * PI * PI * k2;
            (1.0 - 0.5 * h * l, 1.0 + 0.5 * h * l)
        })
        .unzip();
    let mask = dealias_mask(&spectral);
    let d1 = derivative_multiplier(&spectral, &[1, 0])?;
    let d2 = derivative_multiplier(&spectral, &[0, 1])?;
    let sigma = eq.sigma();

    let mut out = Vec::with_capacity((grid.time_steps() + 1) * p);
    out.extend_from_slice(w0.values());
    let mut w_hat = spectral.forward_real(w0.values());
    let mut forcing = vec![0.0; p];
    for n in 0..grid.time_steps() {
        for ((g, &fi), &x) in forcing.iter_mut().zip(f.values()).zip(xi.slice(n)) {
            *g = fi + sigma * x;
        }
        let forcing_hat = spectral.forward_real(&forcing);
        for _ in 0..cfg.substeps {
            let wd: Vec<C64> = w_hat.iter().zip(&mask).map(|(w, m)| w * m).collect();
            let [u1_hat, u2_hat] = velocity_spectrum(&spectral, &wd);
            let u1 = spectral.inverse_real(u1_hat);
            let u2 = spectral.inverse_real(u2_hat);
            let w1 = spectral.inverse_real(wd.iter().zip(&d1).map(|(w, m)| w * m).collect());
            let w2 = spectral.inverse_real(wd.iter().zip(&d2).map(|(w, m)| w * m).collect());
            let adv: Vec<f64> = (0..p).map(|i| u1[i] * w1[i] + u2[i] * w2[i]).collect();
            let adv_hat = spectral.forward_real(&adv);
            for k in 0..p {
                let rhs = forcing_hat[k] - adv_hat[k] * mask[k];
                w_hat[k] = (w_hat[k] * num[k] + rhs * h) / den[k];
            }
        }
        let w = spectral.inverse_real(w_hat.clone());
        guard(&w, n + 1, cfg.blowup_bound)?;
        out.extend_from_slice(&w);
    }
    SpaceTimeField::new(grid.clone(), out)
}

/// Dispatches on the equation. `f` is required for `ns2d` only.
pub fn solve(
    u0: &SpatialField,
    xi: &SpaceTimeField,
    f: Option<&SpatialField>,
    eq: &EquationSpec,
    cfg: &SolverConfig,
) -> Result<SpaceTimeField> {
    match eq.id {
        EquationId::Phi41 => solve_phi41(u0, xi, eq, cfg),
        EquationId::RdMult => solve_rd_mult(u0, xi, eq, cfg),
        EquationId::Ns2d => {
            let f = f.ok_or_else(|| Error::Config("ns2d needs a deterministic force".into()))?;
            solve_ns2d(u0, xi, f, eq, cfg)
        }
    }
}
