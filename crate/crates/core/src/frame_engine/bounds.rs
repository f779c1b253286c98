//! Predicted and empirical frame bounds.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_core::Vector;
use crate::separation::{Region, Status};

use super::generator::smooth_step;
use super::grid::GridFunction;
use super::system::{FrameSpec, FrameSystem};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedBounds {
    pub a: f64,
    pub b: f64,
    pub volume: f64,
    pub alpha: usize,
    pub a_phi: f64,
    pub b_phi: f64,
}

/// `A = Vol(R) a(phi)^2`, `B = Vol(R) alpha b(phi)^2`; needs verified
/// separation and covering certificates and an overlap constant.
pub fn predicted_bounds(spec: &FrameSpec) -> Result<PredictedBounds> {
    let sep = spec
        .separation
        .as_ref()
        .ok_or_else(|| Error::MissingCertificate("separation".into()))?;
    if sep.status != Status::Verified {
        return Err(Error::MissingCertificate(format!("separation is {}", sep.status.label())));
    }
    let cov = spec
        .covering
        .as_ref()
        .ok_or_else(|| Error::MissingCertificate("covering".into()))?;
    if !cov.covered {
        return Err(Error::MissingCertificate("covering has uncovered probe points".into()));
    }
    let overlap = spec
        .overlap
        .as_ref()
        .ok_or_else(|| Error::MissingCertificate("overlap constant".into()))?;
    let volume = spec.parallelepiped.volume();
    let g = &spec.generator;
    let a = volume * g.a_phi * g.a_phi;
    let b = volume * overlap.alpha as f64 * g.b_phi * g.b_phi;
    Ok(PredictedBounds {
        a,
        b,
        volume,
        alpha: overlap.alpha,
        a_phi: g.a_phi,
        b_phi: g.b_phi,
    })
}

/// Smooth window equal to 1 deep inside `k` and 0 outside it.
pub fn probe_window(system: &FrameSystem, k: &Region, taper: f64) -> Result<Vec<f64>> {
    let grid = &system.grid;
    let orbit = &system.spec.orbit;
    (0..grid.len())
        .map(|j| {
            let w = grid.point(j);
            Ok(match k {
                Region::Annulus { inner, outer } => {
                    if w.len() == 1 && w[0] <= 0.0 {
                        0.0
                    } else {
                        let r = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                        let t = taper * (outer - inner);
                        smooth_step((r - inner) / t) * smooth_step((outer - r) / t)
                    }
                }
                Region::Cuboid { lower, upper } => w
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(x, (l, u))| {
                        let t = taper * (u - l);
                        smooth_step((x - l) / t) * smooth_step((u - x) / t)
                    })
                    .product(),
                _ => {
                    if k.contains_point(orbit, &Vector::from_vec(w), 0.0)? {
                        1.0
                    } else {
                        0.0
                    }
                }
            })
        })
        .collect()
}

/// Random band-limited probes: a few random plane waves, smoothly windowed
/// to `k`. Each probe is checked to lie in the covered set.
pub fn random_probes(system: &FrameSystem, k: &Region, count: usize, seed: u64) -> Result<Vec<GridFunction>> {
    let grid = &system.grid;
    let window = probe_window(system, k, 0.05)?;
    let h = grid.spacing().iter().cloned().fold(0.0, f64::max);
    let band = 1.0 / (8.0 * h);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = grid.points();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let waves: Vec<(Complex64, Vec<f64>)> = (0..16)
            .map(|_| {
                let c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                let x = (0..grid.dim()).map(|_| rng.random_range(-band..band)).collect();
                (c, x)
            })
            .collect();
        let values = points
            .iter()
            .zip(&window)
            .map(|(p, w)| {
                if *w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let s: Complex64 = waves
                    .iter()
                    .map(|(c, x)| {
                        let ph: f64 = x.iter().zip(p).map(|(a, b)| a * b).sum();
                        c * Complex64::from_polar(1.0, -std::f64::consts::TAU * ph)
                    })
                    .sum();
                s * *w
            })
            .collect();
        let f = GridFunction {
            grid: grid.clone(),
            values,
        };
        check_probe(system, &f)?;
        out.push(f);
    }
    Ok(out)
}

fn check_probe(system: &FrameSystem, f: &GridFunction) -> Result<()> {
    let leak = system.leakage(f);
    if leak > 1e-12 {
        return Err(Error::OutOfRange(format!(
            "probe has {leak:.3e} of its energy outside the covered window"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalBounds {
    pub a_emp: f64,
    pub b_emp: f64,
    pub quotients: Vec<f64>,
    pub power_max: f64,
    pub power_min: f64,
    pub iterations: usize,
}

fn rayleigh(system: &FrameSystem, f: &GridFunction) -> Result<f64> {
    let c = system.analyze(f)?;
    Ok(c.energy() / f.norm_sqr())
}

fn masked(f: &mut GridFunction, mask: &[bool]) {
    for (v, m) in f.values.iter_mut().zip(mask) {
        if !m {
            *v = Complex64::new(0.0, 0.0);
        }
    }
}

fn normalise(f: &mut GridFunction) {
    let n = f.norm();
    if n > 0.0 {
        f.scale(Complex64::new(1.0 / n, 0.0));
    }
}

/// Rayleigh quotients of the probes, refined by power iteration for the
/// top of the spectrum and shifted power iteration for the bottom, both
/// restricted to the grid points where the probe window is positive.
pub fn empirical_bounds(
    system: &FrameSystem,
    probes: &[GridFunction],
    k: &Region,
    iterations: usize,
    seed: u64,
) -> Result<EmpiricalBounds> {
    if probes.is_empty() {
        return Err(Error::InvalidParameter("no probes".into()));
    }
    let mut quotients = Vec::with_capacity(probes.len());
    for p in probes {
        check_probe(system, p)?;
        if p.norm_sqr() == 0.0 {
            continue;
        }
        quotients.push(rayleigh(system, p)?);
    }
    let window = probe_window(system, k, 0.05)?;
    let mask: Vec<bool> = window
        .iter()
        .zip(system.covered_mask())
        .map(|(w, c)| *w > 0.0 && *c)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut v = GridFunction::zeros(&system.grid);
    for (x, m) in v.values.iter_mut().zip(&mask) {
        if *m {
            *x = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }
    normalise(&mut v);
    let start = v.clone();
    let mut power_max = 0.0;
    for _ in 0..iterations {
        let mut s = system.frame_apply(&v)?;
        masked(&mut s, &mask);
        power_max = s.inner(&v)?.re;
        v = s;
        normalise(&mut v);
    }
    power_max = power_max.max(rayleigh(system, &v)?);
    // shifted iteration on c - S converges to the bottom of the spectrum
    let shift = power_max * 1.05;
    let mut v = start;
    for _ in 0..iterations {
        let s = system.frame_apply(&v)?;
        let mut next = v.clone();
        next.scale(Complex64::new(shift, 0.0));
        next.axpy(Complex64::new(-1.0, 0.0), &s)?;
        masked(&mut next, &mask);
        v = next;
        normalise(&mut v);
    }
    let power_min = rayleigh(system, &v)?;
    let qmin = quotients.iter().cloned().fold(f64::INFINITY, f64::min);
    let qmax = quotients.iter().cloned().fold(0.0, f64::max);
    Ok(EmpiricalBounds {
        a_emp: qmin.min(power_min),
        b_emp: qmax.max(power_max),
        quotients,
        power_max,
        power_min,
        iterations,
    })
}
