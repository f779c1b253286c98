//! Inverting the frame operator from coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::grid::GridFunction;
use super::system::{Coefficients, FrameSystem};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    ConjugateGradient,
    /// `f_{k+1} = f_k + 2/(A+B) (y - S f_k)`.
    Relaxed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub f: GridFunction,
    pub iterations: usize,
    /// Final `|y - S f| / |y|` with `y = sum c g`.
    pub residual: f64,
    pub solver: Solver,
}

/// Solves `S f = sum c_{a,m} g_{a,m}` from zero, stopping once the relative
/// residual is at most `tol * A / B`, which bounds the relative error by `tol`.
pub fn reconstruct(
    system: &FrameSystem,
    c: &Coefficients,
    bounds: (f64, f64),
    solver: Solver,
    tol: f64,
    max_iter: usize,
) -> Result<Reconstruction> {
    let (a, b) = bounds;
    if !(a > 0.0 && b >= a) {
        return Err(Error::InvalidParameter(format!("bounds ({a}, {b}) unusable")));
    }
    let y = system.synthesize(c)?;
    let ynorm = y.norm();
    let mut f = GridFunction::zeros(&system.grid);
    if ynorm == 0.0 {
        return Ok(Reconstruction {
            f,
            iterations: 0,
            residual: 0.0,
            solver,
        });
    }
    let target = tol * a / b;
    match solver {
        Solver::Relaxed => {
            let lambda = Complex64::new(2.0 / (a + b), 0.0);
            let mut r = y.clone();
            for k in 0..=max_iter {
                let res = r.norm() / ynorm;
                if res <= target {
                    return Ok(Reconstruction {
                        f,
                        iterations: k,
                        residual: res,
                        solver,
                    });
                }
                if k == max_iter {
                    break;
                }
                f.axpy(lambda, &r)?;
                r = y.sub(&system.frame_apply(&f)?)?;
            }
            Err(Error::NonConvergence {
                iterations: max_iter,
                residual: r.norm() / ynorm,
            })
        }
        Solver::ConjugateGradient => {
            let mut r = y.clone();
            let mut p = r.clone();
            let mut rr = r.norm_sqr();
            for k in 0..=max_iter {
                let res = rr.sqrt() / ynorm;
                if res <= target {
                    return Ok(Reconstruction {
                        f,
                        iterations: k,
                        residual: res,
                        solver,
                    });
                }
                if k == max_iter {
                    break;
                }
                let sp = system.frame_apply(&p)?;
                let denom = p.inner(&sp)?.re;
                if !(denom > 0.0) {
                    break;
                }
                let alpha = Complex64::new(rr / denom, 0.0);
                f.axpy(alpha, &p)?;
                r.axpy(-alpha, &sp)?;
                let rr_new = r.norm_sqr();
                let beta = Complex64::new(rr_new / rr, 0.0);
                let mut next = r.clone();
                next.axpy(beta, &p)?;
                p = next;
                rr = rr_new;
            }
            let true_res = y.sub(&system.frame_apply(&f)?)?.norm() / ynorm;
            Err(Error::NonConvergence {
                iterations: max_iter,
                residual: true_res,
            })
        }
    }
}

/// `ceil(ln(1/tol) / ln((B+A)/(B-A)))`, the step count the relaxed
/// iteration needs in the worst case.
pub fn relaxed_step_bound(bounds: (f64, f64), tol: f64) -> usize {
    let (a, b) = bounds;
    if b <= a {
        return 1;
    }
    ((1.0 / tol).ln() / ((b + a) / (b - a)).ln()).ceil() as usize
}
