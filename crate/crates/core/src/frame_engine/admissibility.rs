//! The constant `C(omega) = int_H |phi_hat(h^T omega)|^2 dh` for similitude groups.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_families::{rotation2, FamilyKind, FamilySpec};
use crate::group_core::Vector;

use super::generator::Generator;

/// Radial midpoint nodes (in `u = ln r`) on the line and per angle in the plane.
const RADIAL_NODES_1D: usize = 200_000;
const RADIAL_NODES_2D: usize = 20_000;
const ANGLES: usize = 64;
/// Cut-offs in `u` used when the support reaches 0 or infinity.
const CUTOFF: f64 = 50.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub omegas: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub mean: f64,
    pub spread: f64,
    /// `spread <= 1e-3 * mean`.
    pub independent: bool,
}

fn radial_integral(phi: &dyn Fn(&[f64]) -> Result<f64>, dir: &[f64], u_lo: f64, u_hi: f64, nodes: usize) -> Result<f64> {
    if u_hi <= u_lo {
        return Ok(0.0);
    }
    let du = (u_hi - u_lo) / nodes as f64;
    let mut s = 0.0;
    let mut p = vec![0.0; dir.len()];
    for i in 0..nodes {
        let r = (u_lo + (i as f64 + 0.5) * du).exp();
        for (x, d) in p.iter_mut().zip(dir) {
            *x = r * d;
        }
        s += phi(&p)?.powi(2);
    }
    Ok(s * du)
}

fn integral_once(
    family: &FamilySpec,
    phi: &dyn Fn(&[f64]) -> Result<f64>,
    support: (f64, f64),
    omega: &Vector,
    cutoff: f64,
) -> Result<f64> {
    let norm = omega.norm();
    let u_lo = if support.0 > 0.0 { (support.0 / norm).ln() } else { -cutoff };
    let u_hi = if support.1.is_finite() { (support.1 / norm).ln() } else { cutoff };
    match family.n {
        1 => radial_integral(phi, &[omega[0]], u_lo, u_hi, RADIAL_NODES_1D),
        2 => {
            let mut s = 0.0;
            for j in 0..ANGLES {
                let k = rotation2(std::f64::consts::TAU * j as f64 / ANGLES as f64);
                let dir = k.transpose() * omega;
                s += radial_integral(phi, dir.as_slice(), u_lo, u_hi, RADIAL_NODES_2D)?;
            }
            Ok(s / ANGLES as f64)
        }
        _ => unreachable!(),
    }
}

/// Integrates `|phi|^2` along `H^T omega` with Haar measure `dr/r` (times
/// normalised `d theta` in the plane). `support` bounds the radii where
/// `phi` can be nonzero; an unbounded side is cut off, and growth under
/// doubling the cut-off is reported as divergence.
pub fn admissibility(
    family: &FamilySpec,
    phi: &dyn Fn(&[f64]) -> Result<f64>,
    support: (f64, f64),
    omegas: &[Vector],
) -> Result<AdmissibilityReport> {
    if family.kind != FamilyKind::Similitude || family.n > 2 {
        return Err(Error::Unsupported(format!(
            "explicit Haar integration only for similitude groups in dimension 1 or 2, got {} n={}",
            family.kind.tag(),
            family.n
        )));
    }
    let mut values = Vec::with_capacity(omegas.len());
    for w in omegas {
        if w.len() != family.n {
            return Err(Error::DimensionMismatch {
                expected: family.n,
                found: w.len(),
            });
        }
        let outside = w.norm() == 0.0 || (family.n == 1 && w[0] < 0.0);
        if outside {
            return Err(Error::ProbeOutsideOrbit {
                point: w.iter().copied().collect(),
                status: "outside".into(),
            });
        }
        let small = integral_once(family, phi, support, w, CUTOFF)?;
        if !(support.0 > 0.0 && support.1.is_finite()) {
            let large = integral_once(family, phi, support, w, 2.0 * CUTOFF)?;
            if (large - small).abs() > 1e-6 * small.abs().max(1e-300) {
                return Err(Error::DivergentIntegral {
                    omega: w.iter().copied().collect(),
                    small,
                    large,
                });
            }
        }
        values.push(small);
    }
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if values.is_empty() { 0.0 } else { max - min };
    Ok(AdmissibilityReport {
        omegas: omegas.iter().map(|w| w.iter().copied().collect()).collect(),
        values,
        mean,
        spread,
        independent: spread <= 1e-3 * mean.abs(),
    })
}

pub fn generator_admissibility(g: &Generator, omegas: &[Vector]) -> Result<AdmissibilityReport> {
    let phi = |w: &[f64]| g.eval(w).map(|v| v.norm());
    admissibility(&g.orbit.family, &phi, g.radial_support(), omegas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_indicator_gives_ln2() {
        let fam = FamilySpec::similitude(1);
        let phi = |w: &[f64]| Ok(if (1.0..=2.0).contains(&w[0]) { 1.0 } else { 0.0 });
        let omegas: Vec<Vector> = [0.5, 3.0, 1.0].iter().map(|&w| Vector::from_vec(vec![w])).collect();
        let rep = admissibility(&fam, &phi, (1.0, 2.0), &omegas).unwrap();
        for v in &rep.values {
            assert!((v - std::f64::consts::LN_2).abs() < 1e-4);
        }
        assert!(rep.independent);
        let zero = |_: &[f64]| Ok(0.0);
        let rep = admissibility(&fam, &zero, (1.0, 2.0), &omegas).unwrap();
        assert!(rep.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn divergence_is_detected() {
        let fam = FamilySpec::similitude(1);
        let phi = |w: &[f64]| Ok(if w[0] <= 2.0 { 1.0 } else { 0.0 });
        let omegas = [Vector::from_vec(vec![1.0])];
        assert!(matches!(
            admissibility(&fam, &phi, (0.0, 2.0), &omegas),
            Err(Error::DivergentIntegral { .. })
        ));
    }

    #[test]
    fn planar_annulus() {
        let fam = FamilySpec::similitude(2);
        let phi = |w: &[f64]| {
            let r = (w[0] * w[0] + w[1] * w[1]).sqrt();
            Ok(if (1.0..=3.0).contains(&r) { 1.0 } else { 0.0 })
        };
        let omegas = [Vector::from_vec(vec![0.5, 0.0]), Vector::from_vec(vec![-1.0, 2.0])];
        let rep = admissibility(&fam, &phi, (1.0, 3.0), &omegas).unwrap();
        for v in &rep.values {
            assert!((v - 3f64.ln()).abs() < 1e-4);
        }
        assert!(admissibility(&FamilySpec::lorentz_an(2), &phi, (1.0, 3.0), &omegas).is_err());
    }
}
