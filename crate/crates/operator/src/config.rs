//! Architecture configuration.

use serde::{Deserialize, Serialize};

use crate::{OpError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    /// tanh approximation.
    Gelu,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Gelu => {
                let u = GELU_C * (z + 0.044715 * z * z * z);
                0.5 * z * (1.0 + u.tanh())
            }
        }
    }

    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Gelu => {
                let u = GELU_C * (z + 0.044715 * z * z * z);
                let t = u.tanh();
                let du = GELU_C * (1.0 + 3.0 * 0.044715 * z * z);
                0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * du
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnoConfig {
    pub spatial_dim: usize,
    /// `m + d` for feature inputs.
    pub in_channels: usize,
    pub hidden: usize,
    pub layers: usize,
    /// Retained frequencies per axis: `0 ≤ k < modes` in 1-d; `|k₁| < modes[0]`,
    /// `0 ≤ k₂ < modes[1]` in 2-d.
    pub modes: Vec<usize>,
    pub projection_hidden: usize,
    pub out_channels: usize,
    pub activation: Activation,
}

impl FnoConfig {
    /// Standard sizes (h = 32, K = 4, projection width 128) with modes chosen
    /// for grid `sizes` by [`default_modes`].
    pub fn new(in_channels: usize, sizes: &[usize]) -> Self {
        Self {
            spatial_dim: sizes.len(),
            in_channels,
            hidden: 32,
            layers: 4,
            modes: default_modes(sizes),
            projection_hidden: 128,
            out_channels: 1,
            activation: Activation::Relu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OpError::Config(m));
        if !(1..=2).contains(&self.spatial_dim) {
            return bad(format!("spatial_dim must be 1 or 2, got {}", self.spatial_dim));
        }
        if self.modes.len() != self.spatial_dim {
            return bad(format!("{} mode counts for a {}-d operator", self.modes.len(), self.spatial_dim));
        }
        if self.modes.iter().any(|&m| m == 0) {
            return bad("mode counts must be ≥ 1".into());
        }
        if self.hidden == 0 || self.layers == 0 || self.in_channels == 0 {
            return bad("hidden, layers and in_channels must be ≥ 1".into());
        }
        if self.projection_hidden == 0 || self.out_channels == 0 {
            return bad("projection sizes must be ≥ 1".into());
        }
        Ok(())
    }

    /// Checks that every retained mode lies strictly below the Nyquist
    /// frequency of `sizes`.
    pub fn check_grid(&self, sizes: &[usize]) -> Result<()> {
        if sizes.len() != self.spatial_dim {
            return Err(OpError::Config(format!(
                "{}-d operator applied to a {}-d grid",
                self.spatial_dim,
                sizes.len()
            )));
        }
        for (&m, &x) in self.modes.iter().zip(sizes) {
            if m > max_modes(x) {
                return Err(OpError::Config(format!(
                    "{m} modes exceed the {} resolvable on {x} points",
                    max_modes(x)
                )));
            }
        }
        Ok(())
    }

    /// Number of retained spectral slots.
    pub fn slots(&self) -> usize {
        match self.spatial_dim {
            1 => self.modes[0],
            _ => (2 * self.modes[0] - 1) * self.modes[1],
        }
    }

    /// Shape of one layer's spectral weight tensor: `(modes…, h, h, 2)`.
    pub fn spectral_shape(&self) -> Vec<usize> {
        let mut s = match self.spatial_dim {
            1 => vec![self.modes[0]],
            _ => vec![2 * self.modes[0] - 1, self.modes[1]],
        };
        s.extend([self.hidden, self.hidden, 2]);
        s
    }
}

/// Largest mode count allowed on `X` points: `⌊X/2⌋`, which keeps every
/// retained frequency strictly below Nyquist.
pub fn max_modes(points: usize) -> usize {
    points / 2
}

/// 16 modes in 1-d and 12 per axis in 2-d, clamped to the grid.
pub fn default_modes(sizes: &[usize]) -> Vec<usize> {
    let target = if sizes.len() == 1 { 16 } else { 12 };
    sizes.iter().map(|&x| target.min(x / 2)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gelu_derivative_matches_differences() {
        for z in [-3.0, -0.5, 0.0, 0.3, 2.0] {
            let h = 1e-6;
            let fd = (Activation::Gelu.apply(z + h) - Activation::Gelu.apply(z - h)) / (2.0 * h);
            assert!((fd - Activation::Gelu.derivative(z)).abs() < 1e-8);
        }
    }

    #[test]
    fn defaults() {
        assert_eq!(default_modes(&[128]), vec![16]);
        assert_eq!(default_modes(&[64, 64]), vec![12, 12]);
        assert_eq!(default_modes(&[16, 16]), vec![8, 8]);
        assert_eq!(default_modes(&[16]), vec![8]);
        let c = FnoConfig::new(11, &[128]);
        assert_eq!((c.hidden, c.layers, c.projection_hidden), (32, 4, 128));
        assert_eq!(c.spectral_shape(), vec![16, 32, 32, 2]);
        let c2 = FnoConfig::new(31, &[16, 16]);
        assert_eq!(c2.slots(), 15 * 8);
    }

    #[test]
    fn mode_limits() {
        let c = FnoConfig::new(3, &[16]);
        assert!(c.check_grid(&[16]).is_ok());
        assert!(c.check_grid(&[12]).is_err());
        assert!(c.check_grid(&[16, 16]).is_err());
        let mut bad = c.clone();
        bad.modes = vec![0];
        assert!(bad.validate().is_err());
    }
}
