//! The parallelepiped `R`, its dual lattice and the exponentials `e_m`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_core::{check_invertible, Matrix, Vector};

use super::grid::{FrequencyGrid, GridFunction};

/// `{sum x_j v_j : lower_j <= x_j <= upper_j}` with `v_j` the columns of `basis`.
#[derive(Clone, Debug, PartialEq)]
pub struct Parallelepiped {
    pub basis: Matrix,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    basis_inv: Matrix,
}

/// Serde form of a parallelepiped: basis given as rows of column vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelepipedSpec {
    #[serde(default)]
    pub basis: Option<Vec<Vec<f64>>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParallelepipedSpec {
    pub fn build(&self) -> Result<Parallelepiped> {
        match &self.basis {
            None => Parallelepiped::axis_aligned(self.lower.clone(), self.upper.clone()),
            Some(cols) => {
                let n = cols.len();
                let mut b = Matrix::zeros(n, n);
                for (j, c) in cols.iter().enumerate() {
                    if c.len() != n {
                        return Err(Error::DimensionMismatch { expected: n, found: c.len() });
                    }
                    for i in 0..n {
                        b[(i, j)] = c[i];
                    }
                }
                Parallelepiped::new(b, self.lower.clone(), self.upper.clone())
            }
        }
    }
}

impl Parallelepiped {
    pub fn new(basis: Matrix, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = basis.nrows();
        if basis.ncols() != n || lower.len() != n || upper.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: lower.len() });
        }
        check_invertible(&basis)?;
        if lower.iter().zip(&upper).any(|(a, b)| !(b > a)) {
            return Err(Error::EmptyInterior);
        }
        let basis_inv = basis.clone().try_inverse().ok_or(Error::Singular {
            det: 0.0,
            threshold: 0.0,
        })?;
        Ok(Parallelepiped {
            basis,
            lower,
            upper,
            basis_inv,
        })
    }

    pub fn axis_aligned(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = lower.len();
        Parallelepiped::new(Matrix::identity(n, n), lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).collect()
    }

    pub fn volume(&self) -> f64 {
        self.basis.determinant().abs() * self.lengths().iter().product::<f64>()
    }

    pub fn coordinates(&self, v: &[f64]) -> Vector {
        &self.basis_inv * Vector::from_column_slice(v)
    }

    pub fn contains(&self, v: &[f64], margin: f64) -> bool {
        let x = self.coordinates(v);
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (a, b))| *x >= a - margin && *x <= b + margin)
    }

    /// Positive diagonal basis: the lengths `|v_ii| (b_i - a_i)` of the
    /// periods that make the aligned FFT path possible.
    pub fn aligned_periods(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.basis[(i, j)] != 0.0 {
                    return None;
                }
            }
            if self.basis[(i, i)] <= 0.0 {
                return None;
            }
        }
        Some((0..n).map(|i| self.basis[(i, i)] * (self.upper[i] - self.lower[i])).collect())
    }

    /// `e_m(v) = Vol^{-1/2} exp(2 pi i (v | w(m))) chi_R(v)`.
    pub fn modulation(&self, dual: &DualLattice, m: &[i64], v: &[f64]) -> Complex64 {
        if !self.contains(v, 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        let w = dual.w(m);
        let phase: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
        Complex64::from_polar(self.volume().powf(-0.5), std::f64::consts::TAU * phase)
    }

    pub fn modulation_on(&self, dual: &DualLattice, m: &[i64], grid: &FrequencyGrid) -> GridFunction {
        GridFunction::from_fn(grid, |v| self.modulation(dual, m, v))
    }
}

/// `w_j` with `(v_i | w_j) = delta_ij` and the scales `1 / (b_j - a_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualLattice {
    pub basis: Matrix,
    pub scales: Vec<f64>,
}

impl DualLattice {
    /// `w(m) = sum m_j / (b_j - a_j) w_j`.
    pub fn w(&self, m: &[i64]) -> Vec<f64> {
        let n = self.scales.len();
        let mut out = vec![0.0; n];
        for j in 0..n {
            let c = m[j] as f64 * self.scales[j];
            for i in 0..n {
                out[i] += c * self.basis[(i, j)];
            }
        }
        out
    }

    /// Largest deviation of `(v_i | w_j)` from `delta_ij`.
    pub fn biorthogonality_residual(&self, r: &Parallelepiped) -> f64 {
        let g = r.basis.transpose() * &self.basis;
        (g - Matrix::identity(r.dim(), r.dim())).amax()
    }
}

pub fn dual_lattice(r: &Parallelepiped) -> Result<DualLattice> {
    check_invertible(&r.basis)?;
    Ok(DualLattice {
        basis: r.basis_inv.transpose(),
        scales: r.lengths().iter().map(|l| 1.0 / l).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dual_examples() {
        let r = Parallelepiped::axis_aligned(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let d = dual_lattice(&r).unwrap();
        assert_eq!(d.basis, Matrix::identity(2, 2));
        let b = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let r = Parallelepiped::new(b, vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let d = dual_lattice(&r).unwrap();
        assert!((d.basis[(0, 0)] - 0.5).abs() < 1e-15 && (d.basis[(1, 1)] - 1.0).abs() < 1e-15);
        assert_eq!(d.basis[(0, 1)], 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let b = Matrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0)) + Matrix::identity(3, 3) * 2.0;
            let r = Parallelepiped::new(b, vec![0.0; 3], vec![1.0, 2.0, 0.5]).unwrap();
            assert!(dual_lattice(&r).unwrap().biorthogonality_residual(&r) <= 1e-12);
        }
        assert!(Parallelepiped::new(Matrix::zeros(2, 2), vec![0.0; 2], vec![1.0; 2]).is_err());
    }

    #[test]
    fn modulations_are_orthonormal_on_the_grid() {
        let r = Parallelepiped::axis_aligned(vec![0.0], vec![1.0]).unwrap();
        let d = dual_lattice(&r).unwrap();
        let e1 = r.modulation(&d, &[1], &[0.3]);
        assert!((e1 - Complex64::from_polar(1.0, std::f64::consts::TAU * 0.3)).norm() < 1e-15);
        assert!((r.modulation(&d, &[0], &[0.7]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let r = Parallelepiped::axis_aligned(vec![1.0, -0.5], vec![2.0, 1.5]).unwrap();
        let d = dual_lattice(&r).unwrap();
        let grid = FrequencyGrid::new(vec![1.0, -0.5], vec![2.0, 1.5], vec![64, 128]).unwrap();
        let ms: Vec<[i64; 2]> = (-2..=2).flat_map(|a| (-2..=2).map(move |b| [a, b])).collect();
        let fs: Vec<GridFunction> = ms.iter().map(|m| r.modulation_on(&d, m, &grid)).collect();
        for (i, f) in fs.iter().enumerate() {
            for (j, g) in fs.iter().enumerate() {
                let ip = f.inner(g).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).norm() <= 1e-6, "{:?} {:?} {ip}", ms[i], ms[j]);
            }
        }
    }

    #[test]
    fn volume_scales_linearly() {
        let r = Parallelepiped::axis_aligned(vec![1.0], vec![2.0]).unwrap();
        let r2 = Parallelepiped::axis_aligned(vec![1.0], vec![3.0]).unwrap();
        assert_eq!(r.volume(), 1.0);
        assert_eq!(r2.volume(), 2.0);
    }
}
