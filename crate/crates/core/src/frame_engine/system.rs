//! Frame vectors `pi_hat((w(m), a)^-1) phi_hat`, analysis and the frame
//! operator on a frequency grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_core::{theta, GroupElement, Matrix, Vector};
use crate::orbit_atlas::OrbitSpec;
use crate::separation::{CoverageCertificate, OverlapResult, SeparationCertificate};

use super::generator::Generator;
use super::grid::{fft_nd, FrequencyGrid, GridFunction};
use super::parallelepiped::{dual_lattice, DualLattice, Parallelepiped};

/// Which modulation indices enter the system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Modes {
    /// The complete discrete mode set where the grid allows it, otherwise
    /// the box `|m_j| <= half_width`.
    Auto { half_width: i64 },
    /// The complete discrete mode set; fails on incompatible grids.
    Aligned,
    /// An explicit box of modes evaluated by direct summation.
    Direct { ranges: Vec<(i64, i64)> },
}

impl Default for Modes {
    fn default() -> Self {
        Modes::Auto { half_width: 32 }
    }
}

/// All the data of a frame system before discretisation.
#[derive(Clone, Debug)]
pub struct FrameSpec {
    pub orbit: OrbitSpec,
    pub lattice: Vec<GroupElement>,
    pub generator: Generator,
    pub parallelepiped: Parallelepiped,
    pub modes: Modes,
    pub separation: Option<SeparationCertificate>,
    pub covering: Option<CoverageCertificate>,
    pub overlap: Option<OverlapResult>,
}

#[derive(Clone, Debug)]
enum Layout {
    /// `fold[k]` is the flat index of support point `k` modulo the periods.
    Aligned {
        periods: Vec<usize>,
        offsets: Vec<f64>,
        fold: Vec<usize>,
    },
    /// `phase[k * d + i]` is `(w_i | theta(a) omega_k) / L_i`.
    Direct {
        ranges: Vec<(i64, i64)>,
        phase: Vec<f64>,
    },
}

#[derive(Clone, Debug)]
struct Atom {
    lattice_index: usize,
    amp: f64,
    support: Vec<usize>,
    phi: Vec<Complex64>,
    layout: Layout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBlock {
    pub lattice_index: usize,
    pub modes_lo: Vec<i64>,
    pub shape: Vec<usize>,
    /// Row-major over `modes_lo + index`.
    pub values: Vec<Complex64>,
}

impl CoefficientBlock {
    pub fn get(&self, m: &[i64]) -> Option<Complex64> {
        let mut flat = 0;
        for ((&mi, &lo), &n) in m.iter().zip(&self.modes_lo).zip(&self.shape) {
            let k = mi - lo;
            if k < 0 || k as usize >= n {
                return None;
            }
            flat = flat * n + k as usize;
        }
        Some(self.values[flat])
    }

    pub fn mode(&self, flat: usize) -> Vec<i64> {
        let mut out = vec![0; self.shape.len()];
        let mut f = flat;
        for ax in (0..self.shape.len()).rev() {
            out[ax] = self.modes_lo[ax] + (f % self.shape[ax]) as i64;
            f /= self.shape[ax];
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub blocks: Vec<CoefficientBlock>,
    /// Fraction of `|f|^2` lying outside the union of the `a^-1 F`.
    pub leakage: f64,
}

/// Threshold above which `analyze` reports support leakage.
pub const LEAKAGE_WARNING: f64 = 1e-8;

impl Coefficients {
    pub fn energy(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.values.iter())
            .map(|c| c.norm_sqr())
            .sum()
    }

    pub fn count(&self) -> usize {
        self.blocks.iter().map(|b| b.values.len()).sum()
    }

    pub fn leaks(&self) -> bool {
        self.leakage >= LEAKAGE_WARNING
    }

    pub fn block(&self, lattice_index: usize) -> Option<&CoefficientBlock> {
        self.blocks.iter().find(|b| b.lattice_index == lattice_index)
    }
}

pub struct FrameSystem {
    pub spec: FrameSpec,
    pub grid: FrequencyGrid,
    pub dual: DualLattice,
    atoms: Vec<Atom>,
    covered: Vec<bool>,
}

fn diagonal_positive(m: &Matrix) -> Option<Vec<f64>> {
    let scale = m.amax();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && m[(i, j)].abs() > 1e-14 * scale {
                return None;
            }
        }
        if m[(i, i)] <= 0.0 {
            return None;
        }
    }
    Some((0..m.nrows()).map(|i| m[(i, i)]).collect())
}

impl FrameSystem {
    pub fn build(spec: FrameSpec, grid: FrequencyGrid) -> Result<FrameSystem> {
        let d = spec.orbit.dim();
        if grid.dim() != d || spec.parallelepiped.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: grid.dim(),
            });
        }
        if spec.lattice.is_empty() {
            return Err(Error::EmptyLattice);
        }
        let dual = dual_lattice(&spec.parallelepiped)?;
        // D within R
        let crate::separation::Samples::Points(d_pts) =
            spec.generator.d.samples(&spec.orbit, crate::separation::Sampling::default())?
        else {
            return Err(Error::InvalidParameter("generator support must be an orbit region".into()));
        };
        let tol = 1e-9 * spec.generator.d.diameter(&spec.orbit);
        if let Some(p) = d_pts.iter().find(|p| !spec.parallelepiped.contains(p.as_slice(), tol)) {
            return Err(Error::OutOfRange(format!("support point {:?} lies outside R", p.as_slice())));
        }
        let points = grid.points();
        let h = grid.spacing();
        let results: Vec<Result<(Option<Atom>, Vec<usize>)>> = spec
            .lattice
            .par_iter()
            .enumerate()
            .map(|(idx, a)| build_atom(&spec, &grid, &points, &h, &dual, idx, a))
            .collect();
        let mut atoms = Vec::new();
        let mut covered = vec![false; grid.len()];
        for r in results {
            let (atom, in_f) = r?;
            for j in in_f {
                covered[j] = true;
            }
            if let Some(a) = atom {
                atoms.push(a);
            }
        }
        Ok(FrameSystem {
            spec,
            grid,
            dual,
            atoms,
            covered,
        })
    }

    /// Lattice indices whose frame vectors meet the grid.
    pub fn active_lattice(&self) -> Vec<usize> {
        self.atoms.iter().map(|a| a.lattice_index).collect()
    }

    pub fn is_aligned(&self) -> bool {
        self.atoms.iter().all(|a| matches!(a.layout, Layout::Aligned { .. }))
    }

    /// Grid points lying in some `a^-1 F`.
    pub fn covered_mask(&self) -> &[bool] {
        &self.covered
    }

    pub fn mode_ranges(&self, lattice_index: usize) -> Option<Vec<(i64, i64)>> {
        let atom = self.atoms.iter().find(|a| a.lattice_index == lattice_index)?;
        Some(match &atom.layout {
            Layout::Aligned { periods, .. } => periods
                .iter()
                .map(|&p| {
                    let lo = -((p / 2) as i64);
                    (lo, lo + p as i64 - 1)
                })
                .collect(),
            Layout::Direct { ranges, .. } => ranges.clone(),
        })
    }

    /// `|det a|^{-1/2} exp(2 pi i (w(m) | theta(a) omega)) phi_hat(theta(a) omega)`.
    pub fn frame_vector_hat(&self, lattice_index: usize, m: &[i64]) -> Result<GridFunction> {
        let a = self
            .spec
            .lattice
            .get(lattice_index)
            .ok_or_else(|| Error::IndexOutsideWindow(format!("lattice index {lattice_index}")))?;
        if let Some(ranges) = self.mode_ranges(lattice_index) {
            if m.len() != ranges.len() || m.iter().zip(&ranges).any(|(v, (lo, hi))| v < lo || v > hi) {
                return Err(Error::IndexOutsideWindow(format!("mode {m:?}")));
            }
        }
        let th = theta(a)?;
        let amp = a.matrix().determinant().abs().powf(-0.5);
        let w = self.dual.w(m);
        let mut out = GridFunction::zeros(&self.grid);
        for (j, v) in out.values.iter_mut().enumerate() {
            let xi = th.matrix() * Vector::from_vec(self.grid.point(j));
            let phi = self.spec.generator.eval(xi.as_slice())?;
            if phi.norm() == 0.0 {
                continue;
            }
            let phase: f64 = w.iter().zip(xi.iter()).map(|(a, b)| a * b).sum();
            *v = phi * Complex64::from_polar(amp, std::f64::consts::TAU * phase);
        }
        Ok(out)
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::DimensionMismatch {
                expected: self.grid.len(),
                found: f.grid.len(),
            });
        }
        Ok(())
    }

    /// Fraction of `|f|^2` outside the covered set.
    pub fn leakage(&self, f: &GridFunction) -> f64 {
        let total: f64 = f.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let out: f64 = f
            .values
            .iter()
            .zip(&self.covered)
            .filter(|(_, c)| !**c)
            .map(|(v, _)| v.norm_sqr())
            .sum();
        out / total
    }

    /// `c_{a,m} = <f, g_{a,m}>` on the grid.
    pub fn analyze(&self, f: &GridFunction) -> Result<Coefficients> {
        self.check(f)?;
        let cell = self.grid.cell_volume();
        let blocks = self
            .atoms
            .par_iter()
            .map(|atom| analyze_atom(atom, f, cell))
            .collect();
        Ok(Coefficients {
            blocks,
            leakage: self.leakage(f),
        })
    }

    /// `sum c_{a,m} g_{a,m}`.
    pub fn synthesize(&self, c: &Coefficients) -> Result<GridFunction> {
        let parts: Vec<Option<Vec<Complex64>>> = self
            .atoms
            .par_iter()
            .map(|atom| c.block(atom.lattice_index).map(|b| synthesize_atom(atom, b)))
            .collect();
        let mut out = GridFunction::zeros(&self.grid);
        for (atom, part) in self.atoms.iter().zip(parts) {
            if let Some(vals) = part {
                for (j, v) in atom.support.iter().zip(vals) {
                    out.values[*j] += v;
                }
            }
        }
        Ok(out)
    }

    /// The frame operator `S f = sum <f, g> g`.
    pub fn frame_apply(&self, f: &GridFunction) -> Result<GridFunction> {
        self.synthesize(&self.analyze(f)?)
    }
}

fn build_atom(
    spec: &FrameSpec,
    grid: &FrequencyGrid,
    points: &[Vec<f64>],
    h: &[f64],
    dual: &DualLattice,
    idx: usize,
    a: &GroupElement,
) -> Result<(Option<Atom>, Vec<usize>)> {
    let th = theta(a)?;
    let thm = th.matrix().clone();
    let amp = a.matrix().determinant().abs().powf(-0.5);
    let mut support = Vec::new();
    let mut phi = Vec::new();
    let mut in_f = Vec::new();
    let mut xis = Vec::new();
    for (j, p) in points.iter().enumerate() {
        let xi = &thm * Vector::from_column_slice(p);
        let v = spec.generator.eval(xi.as_slice())?;
        if v.norm() > 0.0 {
            support.push(j);
            phi.push(v);
            xis.push(xi.clone());
        }
        if spec.generator.f.contains_point(&spec.orbit, &xi, 0.0)? {
            in_f.push(j);
        }
    }
    if support.is_empty() {
        return Ok((None, in_f));
    }
    let d = grid.dim();
    let aligned = spec.parallelepiped.aligned_periods().and_then(|lens| {
        let sigma = diagonal_positive(&thm)?;
        let mut periods = Vec::with_capacity(d);
        let mut offsets = Vec::with_capacity(d);
        for i in 0..d {
            let p = lens[i] / (sigma[i] * h[i]);
            let pr = p.round();
            if pr < 1.0 || (p - pr).abs() > 1e-9 * p {
                return None;
            }
            periods.push(pr as usize);
            offsets.push(sigma[i] * grid.lower[i] / lens[i] + 0.5 / pr);
        }
        // the support must fit inside one period on every axis
        for i in 0..d {
            let (mut lo, mut hi) = (usize::MAX, 0);
            for &j in &support {
                let k = grid.unravel(j)[i];
                lo = lo.min(k);
                hi = hi.max(k);
            }
            if hi - lo + 1 > periods[i] {
                return None;
            }
        }
        Some((periods, offsets))
    });
    let layout = match (&spec.modes, aligned) {
        (Modes::Aligned | Modes::Auto { .. }, Some((periods, offsets))) => {
            let fold = support
                .iter()
                .map(|&j| {
                    let idx = grid.unravel(j);
                    idx.iter().zip(&periods).fold(0, |acc, (k, p)| acc * p + k % p)
                })
                .collect();
            Layout::Aligned { periods, offsets, fold }
        }
        (Modes::Aligned, None) => {
            return Err(Error::GridIncompatible(format!(
                "lattice element {idx} does not map the grid onto whole periods of R"
            )))
        }
        (Modes::Auto { half_width }, None) => direct_layout(vec![(-half_width, *half_width); d], &xis, dual),
        (Modes::Direct { ranges }, _) => {
            if ranges.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: ranges.len() });
            }
            direct_layout(ranges.clone(), &xis, dual)
        }
    };
    Ok((
        Some(Atom {
            lattice_index: idx,
            amp,
            support,
            phi,
            layout,
        }),
        in_f,
    ))
}

fn direct_layout(ranges: Vec<(i64, i64)>, xis: &[Vector], dual: &DualLattice) -> Layout {
    let d = ranges.len();
    let mut phase = Vec::with_capacity(xis.len() * d);
    for xi in xis {
        for i in 0..d {
            let wi = dual.basis.column(i);
            phase.push(dual.scales[i] * wi.dot(xi));
        }
    }
    Layout::Direct { ranges, phase }
}

fn shape_of(ranges: &[(i64, i64)]) -> Vec<usize> {
    ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).collect()
}

fn modes_of(ranges: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for (lo, hi) in ranges {
        out = out
            .into_iter()
            .flat_map(|p| {
                (*lo..=*hi).map(move |m| {
                    let mut q = p.clone();
                    q.push(m);
                    q
                })
            })
            .collect();
    }
    out
}

fn aligned_ranges(periods: &[usize]) -> Vec<(i64, i64)> {
    periods
        .iter()
        .map(|&p| {
            let lo = -((p / 2) as i64);
            (lo, lo + p as i64 - 1)
        })
        .collect()
}

fn fold_index(m: &[i64], periods: &[usize]) -> usize {
    m.iter()
        .zip(periods)
        .fold(0, |acc, (mi, p)| acc * p + mi.rem_euclid(*p as i64) as usize)
}

fn analyze_atom(atom: &Atom, f: &GridFunction, cell: f64) -> CoefficientBlock {
    let scale = cell * atom.amp;
    match &atom.layout {
        Layout::Aligned { periods, offsets, fold } => {
            let total: usize = periods.iter().product();
            let mut buf = vec![Complex64::new(0.0, 0.0); total];
            for ((j, p), r) in atom.support.iter().zip(&atom.phi).zip(fold) {
                buf[*r] += f.values[*j] * p.conj();
            }
            fft_nd(&mut buf, periods, false);
            let ranges = aligned_ranges(periods);
            let values = modes_of(&ranges)
                .iter()
                .map(|m| {
                    let ph: f64 = m.iter().zip(offsets).map(|(mi, c)| *mi as f64 * c).sum();
                    buf[fold_index(m, periods)] * Complex64::from_polar(scale, -std::f64::consts::TAU * ph)
                })
                .collect();
            CoefficientBlock {
                lattice_index: atom.lattice_index,
                modes_lo: ranges.iter().map(|r| r.0).collect(),
                shape: shape_of(&ranges),
                values,
            }
        }
        Layout::Direct { ranges, phase } => {
            let d = ranges.len();
            let weighted: Vec<Complex64> = atom
                .support
                .iter()
                .zip(&atom.phi)
                .map(|(j, p)| f.values[*j] * p.conj())
                .collect();
            let values = modes_of(ranges)
                .iter()
                .map(|m| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (k, w) in weighted.iter().enumerate() {
                        let ph: f64 = (0..d).map(|i| m[i] as f64 * phase[k * d + i]).sum();
                        s += w * Complex64::from_polar(1.0, -std::f64::consts::TAU * ph);
                    }
                    s * scale
                })
                .collect();
            CoefficientBlock {
                lattice_index: atom.lattice_index,
                modes_lo: ranges.iter().map(|r| r.0).collect(),
                shape: shape_of(ranges),
                values,
            }
        }
    }
}

fn synthesize_atom(atom: &Atom, block: &CoefficientBlock) -> Vec<Complex64> {
    match &atom.layout {
        Layout::Aligned { periods, offsets, fold } => {
            let total: usize = periods.iter().product();
            let mut buf = vec![Complex64::new(0.0, 0.0); total];
            for (k, c) in block.values.iter().enumerate() {
                let m = block.mode(k);
                let ph: f64 = m.iter().zip(offsets).map(|(mi, o)| *mi as f64 * o).sum();
                buf[fold_index(&m, periods)] += c * Complex64::from_polar(1.0, std::f64::consts::TAU * ph);
            }
            fft_nd(&mut buf, periods, true);
            atom.phi
                .iter()
                .zip(fold)
                .map(|(p, r)| p * buf[*r] * atom.amp)
                .collect()
        }
        Layout::Direct { ranges, phase } => {
            let d = ranges.len();
            let modes = modes_of(ranges);
            atom.phi
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for m in &modes {
                        let Some(c) = block.get(m) else { continue };
                        let ph: f64 = (0..d).map(|i| m[i] as f64 * phase[k * d + i]).sum();
                        s += c * Complex64::from_polar(1.0, std::f64::consts::TAU * ph);
                    }
                    p * s * atom.amp
                })
                .collect()
        }
    }
}
