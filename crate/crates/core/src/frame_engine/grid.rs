//! Cell-centred frequency grids, sampled functions and their binary format.

use std::io::{Read, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Rectangular window `[lower, upper]` split into `shape[i]` cells per axis;
/// samples sit at the cell centres `lower + (j + 1/2) h`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub shape: Vec<usize>,
}

impl FrequencyGrid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: shape.len(),
            });
        }
        if lower.is_empty() || shape.iter().any(|&s| s == 0) {
            return Err(Error::InvalidParameter("grid needs at least one cell per axis".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l)) {
            return Err(Error::EmptyInterior);
        }
        Ok(FrequencyGrid { lower, upper, shape })
    }

    /// Grid with uniform spacing `h` on every axis.
    pub fn with_spacing(lower: Vec<f64>, upper: Vec<f64>, h: f64) -> Result<Self> {
        let shape = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| ((u - l) / h).round() as usize)
            .collect::<Vec<_>>();
        let g = FrequencyGrid::new(lower, upper, shape)?;
        if g.spacing().iter().any(|s| (s - h).abs() > 1e-12 * h) {
            return Err(Error::GridIncompatible(format!("window is not a multiple of {h}")));
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(&self.shape)
            .map(|((l, u), n)| (u - l) / *n as f64)
            .collect()
    }

    /// Quadrature weight of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// Row-major multi-index of a flat index (last axis fastest).
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for ax in (0..self.dim()).rev() {
            idx[ax] = flat % self.shape[ax];
            flat /= self.shape[ax];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn axis_point(&self, axis: usize, j: usize) -> f64 {
        let h = (self.upper[axis] - self.lower[axis]) / self.shape[axis] as f64;
        self.lower[axis] + (j as f64 + 0.5) * h
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .iter()
            .enumerate()
            .map(|(ax, &j)| self.axis_point(ax, j))
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Same window, every axis refined by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        FrequencyGrid {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            shape: self.shape.iter().map(|s| s * factor).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: FrequencyGrid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: &FrequencyGrid) -> Self {
        GridFunction {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: &FrequencyGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        GridFunction {
            grid: grid.clone(),
            values,
        }
    }

    fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch {
                expected: self.grid.len(),
                found: other.grid.len(),
            });
        }
        Ok(())
    }

    /// `<f, g> = h^d sum f conj(g)`, linear in the first slot.
    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.check_same(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&mut self, s: Complex64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: Complex64, other: &GridFunction) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    /// Writes the little-endian binary layout: ndim, shape, lower, upper,
    /// spacing, then interleaved re/im samples in row-major order.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let g = &self.grid;
        w.write_all(&(g.dim() as u64).to_le_bytes())?;
        for &s in &g.shape {
            w.write_all(&(s as u64).to_le_bytes())?;
        }
        for x in g.lower.iter().chain(&g.upper).chain(&g.spacing()) {
            w.write_all(&x.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 * self.values.len() + 64);
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut b8 = [0u8; 8];
        let mut u64_ = |r: &mut dyn Read| -> Result<u64> {
            r.read_exact(&mut b8).map_err(|e| Error::Malformed(e.to_string()))?;
            Ok(u64::from_le_bytes(b8))
        };
        let ndim = u64_(r)? as usize;
        if ndim == 0 || ndim > 16 {
            return Err(Error::Malformed(format!("implausible dimension {ndim}")));
        }
        let shape = (0..ndim).map(|_| u64_(r).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let mut f64s = |k: usize, r: &mut dyn Read| -> Result<Vec<f64>> {
            (0..k).map(|_| u64_(r).map(f64::from_bits)).collect()
        };
        let lower = f64s(ndim, r)?;
        let upper = f64s(ndim, r)?;
        let spacing = f64s(ndim, r)?;
        let grid = FrequencyGrid::new(lower, upper, shape).map_err(|e| Error::Malformed(e.to_string()))?;
        if grid.spacing().iter().zip(&spacing).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs()) {
            return Err(Error::Malformed("spacing disagrees with window and shape".into()));
        }
        let n = grid.len();
        let raw = f64s(2 * n, r)?;
        let values = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        Ok(GridFunction { grid, values })
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let f = GridFunction::read_from(&mut bytes)?;
        if !bytes.is_empty() {
            return Err(Error::Malformed(format!("{} trailing bytes", bytes.len())));
        }
        Ok(f)
    }
}

/// In-place unnormalised n-dimensional DFT on a row-major array,
/// `X_k = sum_j x_j exp(-+2 pi i j.k / n)`.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let total: usize = shape.iter().product();
    assert_eq!(total, data.len());
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = 1;
    for ax in (0..shape.len()).rev() {
        let n = shape[ax];
        if n > 1 {
            let fft = if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            };
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let block = n * stride;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + k * stride];
                    }
                    fft.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
        stride *= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_centres_and_indexing() {
        let g = FrequencyGrid::new(vec![0.0, -1.0], vec![1.0, 1.0], vec![4, 8]).unwrap();
        assert_eq!(g.len(), 32);
        assert_eq!(g.point(0), vec![0.125, -0.875]);
        for i in 0..g.len() {
            assert_eq!(g.ravel(&g.unravel(i)), i);
        }
        assert!(FrequencyGrid::new(vec![1.0], vec![1.0], vec![3]).is_err());
        assert!(FrequencyGrid::with_spacing(vec![0.0], vec![1.0], 0.3).is_err());
    }

    #[test]
    fn quadrature_converges_for_smooth_bumps() {
        let bump = |w: &[f64]| {
            let r2: f64 = w.iter().map(|x| x * x).sum();
            let v = if r2 < 1.0 { (-1.0 / (1.0 - r2)).exp() } else { 0.0 };
            Complex64::new(v, 0.0)
        };
        for g in [
            FrequencyGrid::new(vec![-1.5], vec![1.5], vec![256]).unwrap(),
            FrequencyGrid::new(vec![-1.5, -1.5], vec![1.5, 1.5], vec![128, 128]).unwrap(),
        ] {
            let coarse = GridFunction::from_fn(&g, bump).norm_sqr();
            let fine = GridFunction::from_fn(&g.refined(2), bump).norm_sqr();
            assert!((coarse - fine).abs() <= 1e-6 * fine, "{coarse} {fine}");
        }
    }

    #[test]
    fn binary_round_trip() {
        let g = FrequencyGrid::new(vec![0.0, 1.0], vec![2.0, 3.0], vec![3, 5]).unwrap();
        let f = GridFunction::from_fn(&g, |w| Complex64::new(w[0], -w[1]));
        let bytes = f.to_bytes();
        assert_eq!(bytes.len(), 8 + 16 + 3 * 16 + 16 * 15);
        assert_eq!(GridFunction::from_bytes(&bytes).unwrap(), f);
        assert!(GridFunction::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn fft_nd_matches_direct_dft() {
        let shape = [3usize, 4];
        let data: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let mut fast = data.clone();
        fft_nd(&mut fast, &shape, false);
        for k0 in 0..3 {
            for k1 in 0..4 {
                let mut s = Complex64::new(0.0, 0.0);
                for j0 in 0..3 {
                    for j1 in 0..4 {
                        let ph = -std::f64::consts::TAU * ((j0 * k0) as f64 / 3.0 + (j1 * k1) as f64 / 4.0);
                        s += data[j0 * 4 + j1] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((s - fast[k0 * 4 + k1]).norm() < 1e-10);
            }
        }
        fft_nd(&mut fast, &shape, true);
        for (a, b) in fast.iter().zip(&data) {
            assert!((a / 12.0 - b).norm() < 1e-12);
        }
    }
}
