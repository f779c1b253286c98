//! Frequency-side generators: indicators of `F` and smoothed indicators.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_core::Vector;
use crate::orbit_atlas::OrbitSpec;
use crate::separation::{Region, Samples, Sampling};

use super::grid::{FrequencyGrid, GridFunction};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    Indicator,
    /// Equal to 1 on `F`, smooth, vanishing outside the `margin`-neighbourhood.
    Mollified { margin: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub orbit: OrbitSpec,
    pub f: Region,
    pub d: Region,
    pub kind: GeneratorKind,
    /// `inf_F |phi_hat|`.
    pub a_phi: f64,
    /// `sup_D |phi_hat|`.
    pub b_phi: f64,
}

/// C-infinity step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    a / (a + b)
}

fn bump(x: f64, lo: f64, hi: f64, margin: f64) -> f64 {
    smooth_step((x - (lo - margin)) / margin) * smooth_step(((hi + margin) - x) / margin)
}

/// Whether `inner` inflated by `grow` lies in `outer`.
fn region_within(orbit: &OrbitSpec, inner: &Region, grow: f64, outer: &Region) -> Result<bool> {
    let tol = 1e-12;
    Ok(match (inner, outer) {
        (Region::Annulus { inner: a, outer: b }, Region::Annulus { inner: c, outer: d }) => {
            a - grow >= c - tol && b + grow <= d + tol
        }
        (Region::Cuboid { lower: l1, upper: u1 }, Region::Cuboid { lower: l2, upper: u2 }) => {
            l1.iter().zip(l2).all(|(a, b)| a - grow >= b - tol) && u1.iter().zip(u2).all(|(a, b)| a + grow <= b + tol)
        }
        _ => {
            if grow > 0.0 {
                return Err(Error::Unsupported("smoothing needs an annulus or cuboid".into()));
            }
            let Samples::Points(pts) = inner.samples(orbit, Sampling::default())? else {
                return Err(Error::InvalidParameter("generator regions live in the orbit".into()));
            };
            let margin = outer.default_margin(orbit);
            for p in &pts {
                if !outer.contains_point(orbit, p, margin)? {
                    return Ok(false);
                }
            }
            true
        }
    })
}

/// Builds `phi_hat = chi_F` (or its smoothed version) and checks
/// `supp phi_hat` within `D`, `a(phi) > 0`, `b(phi)` finite.
pub fn generator_from_indicator(
    orbit: &OrbitSpec,
    f: Region,
    d: Region,
    grid: &FrequencyGrid,
    kind: GeneratorKind,
) -> Result<Generator> {
    f.validate(orbit)?;
    d.validate(orbit)?;
    let grow = match kind {
        GeneratorKind::Indicator => 0.0,
        GeneratorKind::Mollified { margin } => {
            if !(margin > 0.0) {
                return Err(Error::InvalidParameter("smoothing margin must be positive".into()));
            }
            margin
        }
    };
    if !region_within(orbit, &f, grow, &d)? {
        return Err(Error::NotContained);
    }
    let mut g = Generator {
        orbit: orbit.clone(),
        f,
        d,
        kind,
        a_phi: 0.0,
        b_phi: 0.0,
    };
    let f_pts = g.region_points(&g.f, grid)?;
    let d_pts = g.region_points(&g.d, grid)?;
    if f_pts.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let vals = |pts: &[Vector]| -> Result<Vec<f64>> { pts.iter().map(|p| g.eval(p.as_slice()).map(|v| v.norm())).collect() };
    let a_phi = vals(&f_pts)?.into_iter().fold(f64::INFINITY, f64::min);
    let b_phi = vals(&d_pts)?.into_iter().fold(0.0, f64::max);
    g.a_phi = a_phi;
    g.b_phi = b_phi;
    if !(g.a_phi > 0.0) {
        return Err(Error::EmptyInterior);
    }
    Ok(g)
}

impl Generator {
    /// Region samples together with the grid points lying in the region.
    fn region_points(&self, r: &Region, grid: &FrequencyGrid) -> Result<Vec<Vector>> {
        let Samples::Points(mut pts) = r.samples(&self.orbit, Sampling::default())? else {
            return Err(Error::InvalidParameter("generator regions live in the orbit".into()));
        };
        if grid.dim() == self.orbit.dim() {
            for i in 0..grid.len() {
                let p = Vector::from_vec(grid.point(i));
                if r.contains_point(&self.orbit, &p, 0.0)? {
                    pts.push(p);
                }
            }
        }
        Ok(pts)
    }

    pub fn eval(&self, w: &[f64]) -> Result<Complex64> {
        let v = match self.kind {
            GeneratorKind::Indicator => {
                let p = Vector::from_column_slice(w);
                if self.f.contains_point(&self.orbit, &p, 0.0)? {
                    1.0
                } else {
                    0.0
                }
            }
            GeneratorKind::Mollified { margin } => match &self.f {
                Region::Annulus { inner, outer } => {
                    if w.len() == 1 && w[0] <= 0.0 {
                        0.0
                    } else {
                        let r = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                        bump(r, *inner, *outer, margin)
                    }
                }
                Region::Cuboid { lower, upper } => w
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(x, (l, u))| bump(*x, *l, *u, margin))
                    .product(),
                _ => return Err(Error::Unsupported("smoothing needs an annulus or cuboid".into())),
            },
        };
        Ok(Complex64::new(v, 0.0))
    }

    pub fn tabulate(&self, grid: &FrequencyGrid) -> Result<GridFunction> {
        let values = (0..grid.len()).map(|i| self.eval(&grid.point(i))).collect::<Result<Vec<_>>>()?;
        Ok(GridFunction {
            grid: grid.clone(),
            values,
        })
    }

    /// Radii between which `phi_hat` can be nonzero.
    pub fn radial_support(&self) -> (f64, f64) {
        let grow = match self.kind {
            GeneratorKind::Indicator => 0.0,
            GeneratorKind::Mollified { margin } => margin,
        };
        match &self.f {
            Region::Annulus { inner, outer } => ((inner - grow).max(0.0), outer + grow),
            Region::Cuboid { lower, upper } => {
                let mut near2 = 0.0;
                let mut far2 = 0.0;
                for (l, u) in lower.iter().zip(upper) {
                    let (l, u) = (l - grow, u + grow);
                    let n = if l > 0.0 {
                        l
                    } else if u < 0.0 {
                        -u
                    } else {
                        0.0
                    };
                    near2 += n * n;
                    far2 += l.abs().max(u.abs()).powi(2);
                }
                (f64::sqrt(near2), f64::sqrt(far2))
            }
            Region::Cloud { points, radius } => {
                let norms: Vec<f64> = points.iter().map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
                let near = norms.iter().cloned().fold(f64::INFINITY, f64::min) - radius;
                let far = norms.iter().cloned().fold(0.0, f64::max) + radius;
                (near.max(0.0), far)
            }
            _ => (0.0, f64::INFINITY),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_families::FamilySpec;

    fn line() -> OrbitSpec {
        OrbitSpec::similitude(FamilySpec::similitude(1)).unwrap()
    }

    #[test]
    fn indicator_and_mollified_bounds() {
        let orbit = line();
        let grid = FrequencyGrid::with_spacing(vec![0.0], vec![4.0], 1.0 / 64.0).unwrap();
        let f = Region::Annulus { inner: 1.0, outer: 2.0 };
        let g = generator_from_indicator(&orbit, f.clone(), f.clone(), &grid, GeneratorKind::Indicator).unwrap();
        assert_eq!((g.a_phi, g.b_phi), (1.0, 1.0));
        assert_eq!(g.eval(&[0.5]).unwrap().re, 0.0);

        let d = Region::Annulus { inner: 0.8, outer: 2.2 };
        let m = generator_from_indicator(&orbit, f.clone(), d.clone(), &grid, GeneratorKind::Mollified { margin: 0.1 }).unwrap();
        assert_eq!((m.a_phi, m.b_phi), (1.0, 1.0));
        assert_eq!(m.eval(&[0.85]).unwrap().re, 0.0);
        let mid = m.eval(&[0.95]).unwrap().re;
        assert!(mid > 0.0 && mid < 1.0);

        assert!(matches!(
            generator_from_indicator(&orbit, d.clone(), f.clone(), &grid, GeneratorKind::Indicator),
            Err(Error::NotContained)
        ));
        assert!(matches!(
            generator_from_indicator(&orbit, f.clone(), f.clone(), &grid, GeneratorKind::Mollified { margin: 0.1 }),
            Err(Error::NotContained)
        ));
        assert!(generator_from_indicator(
            &orbit,
            Region::Annulus { inner: 1.0, outer: 1.0 },
            f,
            &grid,
            GeneratorKind::Indicator
        )
        .is_err());
    }

    #[test]
    fn smooth_step_is_monotone_and_symmetric() {
        let mut prev = 0.0;
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let s = smooth_step(x);
            assert!(s >= prev);
            assert!((s + smooth_step(1.0 - x) - 1.0).abs() < 1e-14);
            prev = s;
        }
    }
}
