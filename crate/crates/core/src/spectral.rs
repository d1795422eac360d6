//! FFT plumbing on periodic grids.
//!
//! Forward transforms are unnormalised, `F_k = Σ_x f(x) e^{-2πi k·x}`; the
//! real inverse divides by the number of points, so a field equals
//! `(1/N) Σ_k F_k e^{2πi k·x}`. Index `j` on an axis of size `n` carries the
//! signed wavenumber `j` for `j ≤ n/2` and `j - n` above.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub type C64 = Complex64;

#[derive(Clone)]
pub struct Spectral {
    sizes: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("sizes", &self.sizes).finish()
    }
}

/// Signed wavenumber of index `j` on an axis with `n` points.
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Index holding signed wavenumber `k` on an axis with `n` points.
pub fn index_of(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

impl Spectral {
    pub fn new(sizes: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = sizes.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = sizes.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self {
            sizes: sizes.to_vec(),
            forward,
            inverse,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn points(&self) -> usize {
        self.sizes.iter().product()
    }

    fn transform(&self, buf: &mut [C64], plans: &[Arc<dyn Fft<f64>>]) {
        debug_assert_eq!(buf.len(), self.points());
        match self.sizes.len() {
            1 => plans[0].process(buf),
            2 => {
                let (rows, cols) = (self.sizes[0], self.sizes[1]);
                plans[1].process(buf);
                let mut column = vec![C64::default(); rows];
                for c in 0..cols {
                    for r in 0..rows {
                        column[r] = buf[r * cols + c];
                    }
                    plans[0].process(&mut column);
                    for r in 0..rows {
                        buf[r * cols + c] = column[r];
                    }
                }
            }
            d => unreachable!("unsupported dimension {d}"),
        }
    }

    /// Unnormalised forward transform in place.
    pub fn forward_in_place(&self, buf: &mut [C64]) {
        self.transform(buf, &self.forward);
    }

    /// Unnormalised inverse transform in place, `Σ_k F_k e^{+2πi k·x}`.
    pub fn inverse_in_place(&self, buf: &mut [C64]) {
        self.transform(buf, &self.inverse);
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    /// Normalised inverse, keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<C64>) -> Vec<f64> {
        self.inverse_in_place(&mut spectrum);
        let scale = 1.0 / self.points() as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }

    /// Signed wavenumber vector of a flat spectral index.
    pub fn mode(&self, flat: usize) -> [i64; 2] {
        match self.sizes.len() {
            1 => [wavenumber(flat, self.sizes[0]), 0],
            _ => {
                let cols = self.sizes[1];
                [
                    wavenumber(flat / cols, self.sizes[0]),
                    wavenumber(flat % cols, cols),
                ]
            }
        }
    }

    /// True when the flat index lies on the Nyquist plane of `axis`.
    pub fn is_nyquist(&self, flat: usize, axis: usize) -> bool {
        let n = self.sizes[axis];
        let j = match (self.sizes.len(), axis) {
            (1, _) => flat,
            (_, 0) => flat / self.sizes[1],
            _ => flat % self.sizes[1],
        };
        n % 2 == 0 && j == n / 2
    }

    /// `|k|²` (integer wavenumbers) for every flat index.
    pub fn k_squared(&self) -> Vec<f64> {
        (0..self.points())
            .map(|i| {
                let k = self.mode(i);
                (k[0] * k[0] + k[1] * k[1]) as f64
            })
            .collect()
    }
}

/// Band-limited resampling between periodic grids of equal dimension.
///
/// Mode amplitudes `F_k / N` are preserved for wavenumbers strictly inside
/// both grids' Nyquist limits; everything else (including Nyquist planes) is
/// dropped. Equal sizes return the input unchanged.
pub fn resample(values: &[f64], from: &[usize], to: &[usize]) -> Vec<f64> {
    assert_eq!(from.len(), to.len(), "resample across dimensions");
    if from == to {
        return values.to_vec();
    }
    let src = Spectral::new(from);
    let dst = Spectral::new(to);
    let spec = src.forward_real(values);
    let scale = dst.points() as f64 / src.points() as f64;
    let keep = |k: i64, a: usize| 2 * k.unsigned_abs() < from[a].min(to[a]) as u64;
    let mut out = vec![C64::default(); dst.points()];
    for (i, c) in spec.iter().enumerate() {
        let k = src.mode(i);
        if !(0..from.len()).all(|a| keep(k[a], a)) {
            continue;
        }
        let j = match to.len() {
            1 => index_of(k[0], to[0]),
            _ => index_of(k[0], to[0]) * to[1] + index_of(k[1], to[1]),
        };
        out[j] = c * scale;
    }
    dst.inverse_real(out)
}
