//! Discrete check that the Fourier transform carries `pi` to `pi_hat` on the line.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_core::AffinePair;

/// Spatial samples `v_j = (j - n/2) step`, `j = 0..n`, with `n` divisible by 4.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub n: usize,
    pub step: f64,
}

impl SpatialGrid {
    pub fn new(n: usize, step: f64) -> Result<Self> {
        if n == 0 || n % 4 != 0 {
            return Err(Error::GridIncompatible(format!("{n} samples is not a multiple of 4")));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidParameter("step must be positive".into()));
        }
        Ok(SpatialGrid { n, step })
    }

    pub fn point(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.step
    }

    /// `omega_k = (k - n/2) / (n step)`.
    pub fn frequency(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) / (self.n as f64 * self.step)
    }
}

/// `f_hat_k = step * sum_j f_j exp(-2 pi i v_j omega_k)`, via one FFT.
pub fn centred_dft(samples: &[Complex64], grid: &SpatialGrid) -> Vec<Complex64> {
    let n = grid.n;
    let sign = |j: usize| if j % 2 == 0 { 1.0 } else { -1.0 };
    let mut buf: Vec<Complex64> = samples.iter().enumerate().map(|(j, v)| v * sign(j)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    buf.iter()
        .enumerate()
        .map(|(k, v)| v * (sign(k) * grid.step))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntertwineReport {
    /// `|DFT(pi(x,a) f) - pi_hat(x,a) DFT(f)| / |pi_hat(x,a) DFT(f)|`.
    pub residual: f64,
    /// `|sum |f|^2 step - sum |f_hat|^2 / (n step)|`, relative.
    pub plancherel: f64,
}

/// Compares both sides of the intertwining identity for an integer dilation
/// and a translation by whole grid steps.
pub fn intertwine_check(f: &dyn Fn(f64) -> Complex64, grid: SpatialGrid, p: &AffinePair) -> Result<IntertwineReport> {
    if p.dim() != 1 {
        return Err(Error::Unsupported("the discrete check runs on the line".into()));
    }
    let a = p.a.matrix()[(0, 0)];
    let x = p.x[0];
    if a == 0.0 || a.fract() != 0.0 {
        return Err(Error::GridIncompatible(format!("dilation {a} is not a nonzero integer")));
    }
    let shift = x / grid.step;
    if (shift - shift.round()).abs() > 1e-9 {
        return Err(Error::GridIncompatible(format!("translation {x} is not a whole number of steps")));
    }
    let n = grid.n;
    let base: Vec<Complex64> = (0..n).map(|j| f(grid.point(j))).collect();
    let amp = a.abs().powf(-0.5);
    let moved: Vec<Complex64> = (0..n).map(|j| f((grid.point(j) - x) / a) * amp).collect();
    let lhs = centred_dft(&moved, &grid);
    let fhat = centred_dft(&base, &grid);
    let ai = a as i64;
    let half = (n / 2) as i64;
    let rhs: Vec<Complex64> = (0..n)
        .map(|k| {
            let idx = ai * (k as i64 - half) + half;
            if idx < 0 || idx >= n as i64 {
                return Complex64::new(0.0, 0.0);
            }
            let w = grid.frequency(k);
            fhat[idx as usize] * Complex64::from_polar(a.abs().sqrt(), -std::f64::consts::TAU * x * w)
        })
        .collect();
    let diff: f64 = lhs.iter().zip(&rhs).map(|(l, r)| (l - r).norm_sqr()).sum::<f64>().sqrt();
    let scale: f64 = rhs.iter().map(|r| r.norm_sqr()).sum::<f64>().sqrt();
    let residual = if scale == 0.0 { diff } else { diff / scale };
    let spatial: f64 = base.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.step;
    let spectral: f64 = fhat.iter().map(|v| v.norm_sqr()).sum::<f64>() / (n as f64 * grid.step);
    let plancherel = if spatial == 0.0 { 0.0 } else { (spatial - spectral).abs() / spatial };
    Ok(IntertwineReport { residual, plancherel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_core::{GroupElement, Matrix, Vector};

    fn pair(x: f64, a: f64) -> AffinePair {
        AffinePair::new(Vector::from_vec(vec![x]), GroupElement::generic(Matrix::from_element(1, 1, a)).unwrap()).unwrap()
    }

    fn gauss(v: f64) -> Complex64 {
        Complex64::new((-v * v / 2.0).exp(), 0.0)
    }

    #[test]
    fn identity_and_dilations() {
        let grid = SpatialGrid::new(4096, 1.0 / 8.0).unwrap();
        let r = intertwine_check(&gauss, grid, &pair(0.0, 1.0)).unwrap();
        assert_eq!(r.residual, 0.0);
        assert!(r.plancherel < 1e-8);
        for a in [2.0, 4.0, -2.0] {
            assert!(intertwine_check(&gauss, grid, &pair(0.0, a)).unwrap().residual <= 1e-6);
        }
        let r = intertwine_check(&gauss, grid, &pair(grid.step, 1.0)).unwrap();
        assert!(r.residual <= 1e-10, "{}", r.residual);
        assert!(intertwine_check(&gauss, grid, &pair(0.0, 0.5)).is_err());
        assert!(intertwine_check(&gauss, grid, &pair(0.3 * grid.step, 1.0)).is_err());
        assert!(SpatialGrid::new(4098, 0.1).is_err());
    }

    #[test]
    fn dft_of_gaussian_matches_closed_form() {
        // exp(-v^2/2) has transform sqrt(2 pi) exp(-2 pi^2 w^2)
        let grid = SpatialGrid::new(1024, 1.0 / 8.0).unwrap();
        let s: Vec<Complex64> = (0..grid.n).map(|j| gauss(grid.point(j))).collect();
        let fh = centred_dft(&s, &grid);
        for (k, v) in fh.iter().enumerate() {
            let w = grid.frequency(k);
            let want = (std::f64::consts::TAU).sqrt() * (-2.0 * std::f64::consts::PI.powi(2) * w * w).exp();
            assert!((v.re - want).abs() < 1e-10 && v.im.abs() < 1e-10);
        }
    }
}
