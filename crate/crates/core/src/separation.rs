//! Certificates for separated lattices, overlap constants and coverings.
//!
//! Regions live either in the orbit (vectors) or in the group (elements).
//! Exact certificates exist for annuli under scalings and for parameter
//! boxes of the AN families; everything else is a sampled numerical
//! certificate that records its sample count and inflation margin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_core::{GroupElement, Vector};
use crate::group_families::{
    self as fam, adjoint_growth, adjoint_growth_at, coords, from_coords, lattice_nilpotent_param,
    nilpotent_coords_from_log, nilpotent_log_norm, Compact, Coords, FamilyKind, FamilySpec,
    LatticeWindow,
};
use crate::orbit_atlas::{act, kappa, section, section_coords, Membership, OrbitSpec};

/// Relative margin used when none is given: `eta = 1e-9 * diameter`.
pub const DEFAULT_MARGIN_FACTOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum NilpotentShape {
    /// `Tr(X X^T) <= radius^2` for the logarithm `X` of the nilpotent factor.
    Ball { radius: f64 },
    /// `|n_i| <= half_width` on nilpotent exponential coordinates.
    Cube { half_width: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CompactShape {
    #[default]
    Identity,
    Full,
}

/// `{a(r) n(X) b : |r_j| <= a_half[j], X in shape, b in compact}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub a_half: Vec<f64>,
    pub nilpotent: NilpotentShape,
    #[serde(default)]
    pub compact: CompactShape,
}

impl ParamBox {
    pub fn cube(a_half: Vec<f64>, half_width: f64) -> Self {
        ParamBox {
            a_half,
            nilpotent: NilpotentShape::Cube { half_width },
            compact: CompactShape::Identity,
        }
    }

    pub fn with_compact(mut self, compact: CompactShape) -> Self {
        self.compact = compact;
        self
    }

    fn n_extent(&self) -> f64 {
        match self.nilpotent {
            NilpotentShape::Ball { radius } => radius,
            NilpotentShape::Cube { half_width } => half_width,
        }
    }

    pub fn diameter(&self) -> f64 {
        let a: f64 = self.a_half.iter().map(|h| h * h).sum();
        2.0 * (a + self.n_extent().powi(2)).sqrt()
    }

    fn validate(&self, family: &FamilySpec) -> Result<()> {
        if self.a_half.len() != family.abelian_rank() {
            return Err(Error::DimensionMismatch {
                expected: family.abelian_rank(),
                found: self.a_half.len(),
            });
        }
        let n_ok = family.nilpotent_dim() == 0 || self.n_extent() > 0.0;
        if self.a_half.iter().any(|&h| !(h > 0.0)) || !n_ok {
            return Err(Error::EmptyInterior);
        }
        Ok(())
    }

    /// Membership of coordinates, inflated by `margin` in every coordinate.
    pub fn contains_coords(&self, family: &FamilySpec, c: &Coords, margin: f64) -> bool {
        if c.a.iter().zip(&self.a_half).any(|(a, h)| a.abs() > h + margin) {
            return false;
        }
        let n_ok = match self.nilpotent {
            NilpotentShape::Ball { radius } => nilpotent_log_norm(family, &c.n) <= radius + margin,
            NilpotentShape::Cube { half_width } => c.n.iter().all(|v| v.abs() <= half_width + margin),
        };
        if !n_ok {
            return false;
        }
        match self.compact {
            CompactShape::Full => true,
            CompactShape::Identity => c.compact.distance_from_identity() <= margin.max(1e-9),
        }
    }
}

/// A compact subset of the orbit or of the group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// `inner <= |v| <= outer`; on the line only the positive half.
    Annulus { inner: f64, outer: f64 },
    Cuboid { lower: Vec<f64>, upper: Vec<f64> },
    /// A parameter box in the group.
    Params(ParamBox),
    /// The orbit-map image of a parameter box.
    Image { source: ParamBox },
    /// The orbit-map preimage of an orbit region.
    Lift { target: Box<Region> },
    /// Union of closed balls around explicit points.
    Cloud { points: Vec<Vec<f64>>, radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Orbit,
    Group,
}

/// Sampling density: at most `per_axis` points per coordinate and about
/// `total` points overall.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sampling {
    pub per_axis: usize,
    pub total: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            per_axis: 64,
            total: 4096,
        }
    }
}

impl Sampling {
    pub fn axis_count(&self, dims: usize) -> usize {
        if dims == 0 {
            return 1;
        }
        let by_total = (self.total as f64).powf(1.0 / dims as f64).floor() as usize;
        by_total.min(self.per_axis).max(2)
    }
}

fn axis(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k <= 1 || hi <= lo {
        return vec![0.5 * (lo + hi)];
    }
    (0..k)
        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
        .collect()
}

fn grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for ax in axes {
        let mut next = Vec::with_capacity(out.len() * ax.len());
        for p in &out {
            for &v in ax {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Samples of a region, in the space where the region lives.
#[derive(Clone, Debug)]
pub enum Samples {
    Points(Vec<Vector>),
    Elements(Vec<GroupElement>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::Points(p) => p.len(),
            Samples::Elements(e) => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Region {
    pub fn level(&self) -> Level {
        match self {
            Region::Params(_) | Region::Lift { .. } => Level::Group,
            _ => Level::Orbit,
        }
    }

    pub fn validate(&self, orbit: &OrbitSpec) -> Result<()> {
        match self {
            Region::Annulus { inner, outer } => {
                if !(inner >= &0.0 && outer > inner) {
                    return Err(Error::EmptyInterior);
                }
            }
            Region::Cuboid { lower, upper } => {
                if lower.len() != orbit.dim() || upper.len() != orbit.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: orbit.dim(),
                        found: lower.len(),
                    });
                }
                if lower.iter().zip(upper).any(|(l, u)| !(u > l)) {
                    return Err(Error::EmptyInterior);
                }
            }
            Region::Params(b) | Region::Image { source: b } => b.validate(&orbit.family)?,
            Region::Lift { target } => {
                if target.level() != Level::Orbit {
                    return Err(Error::InvalidParameter("lift target must be an orbit region".into()));
                }
                target.validate(orbit)?;
            }
            Region::Cloud { points, radius } => {
                if points.is_empty() || !(radius > &0.0) {
                    return Err(Error::EmptyInterior);
                }
            }
        }
        Ok(())
    }

    /// Euclidean diameter of an orbit region or coordinate diameter of a
    /// group region.
    pub fn diameter(&self, orbit: &OrbitSpec) -> f64 {
        match self {
            Region::Annulus { inner, outer } => {
                if orbit.dim() == 1 {
                    outer - inner
                } else {
                    2.0 * outer
                }
            }
            Region::Cuboid { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l).powi(2))
                .sum::<f64>()
                .sqrt(),
            Region::Params(b) | Region::Image { source: b } => b.diameter(),
            Region::Lift { target } => target.diameter(orbit),
            Region::Cloud { points, radius } => {
                let mut d: f64 = 0.0;
                for p in points {
                    for q in points {
                        let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum();
                        d = d.max(s.sqrt());
                    }
                }
                d + 2.0 * radius
            }
        }
    }

    pub fn default_margin(&self, orbit: &OrbitSpec) -> f64 {
        DEFAULT_MARGIN_FACTOR * self.diameter(orbit)
    }

    /// Membership of an orbit point, inflated by `margin` (negative shrinks).
    pub fn contains_point(&self, orbit: &OrbitSpec, v: &Vector, margin: f64) -> Result<bool> {
        Ok(match self {
            Region::Annulus { inner, outer } => {
                if orbit.dim() == 1 && v[0] < 0.0 {
                    return Ok(false);
                }
                let r = v.norm();
                r >= inner - margin && r <= outer + margin
            }
            Region::Cuboid { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, u))| *x >= l - margin && *x <= u + margin),
            Region::Image { source } => {
                if orbit.membership(v) != Membership::Inside {
                    return Ok(false);
                }
                let c = section_coords(orbit, v)?;
                source.contains_coords(&orbit.family, &c, margin)
            }
            Region::Cloud { points, radius } => points.iter().any(|p| {
                let s: f64 = p.iter().zip(v.iter()).map(|(a, b)| (a - b).powi(2)).sum();
                s.sqrt() <= radius + margin
            }),
            Region::Params(_) | Region::Lift { .. } => {
                return Err(Error::InvalidParameter("group region tested with a point".into()))
            }
        })
    }

    /// Membership of a group element, inflated by `margin`.
    pub fn contains_element(&self, orbit: &OrbitSpec, h: &GroupElement, margin: f64) -> Result<bool> {
        match self {
            Region::Params(b) => {
                let c = coords(&orbit.family, h)?;
                Ok(b.contains_coords(&orbit.family, &c, margin))
            }
            Region::Lift { target } => target.contains_point(orbit, &kappa(orbit, h)?, margin),
            _ => Err(Error::InvalidParameter("orbit region tested with an element".into())),
        }
    }

    /// Deterministic samples covering the region.
    pub fn samples(&self, orbit: &OrbitSpec, sampling: Sampling) -> Result<Samples> {
        self.validate(orbit)?;
        Ok(match self {
            Region::Annulus { inner, outer } => {
                let d = orbit.dim();
                if d == 1 {
                    let k = sampling.per_axis.max(2);
                    Samples::Points(axis(*inner, *outer, k).into_iter().map(|r| Vector::from_vec(vec![r])).collect())
                } else if d == 2 {
                    let k = sampling.axis_count(2);
                    let radii = axis(*inner, *outer, k);
                    let mut pts = Vec::with_capacity(k * k);
                    for r in &radii {
                        for j in 0..k {
                            let t = std::f64::consts::TAU * j as f64 / k as f64;
                            pts.push(Vector::from_vec(vec![r * t.cos(), r * t.sin()]));
                        }
                    }
                    Samples::Points(pts)
                } else {
                    let k = sampling.axis_count(d);
                    let cube = grid(&vec![axis(-1.0, 1.0, k); d]);
                    let radii = axis(*inner, *outer, k);
                    let mut pts = Vec::new();
                    for c in cube {
                        let v = Vector::from_vec(c);
                        let nv = v.norm();
                        if nv < 1e-12 {
                            continue;
                        }
                        for r in &radii {
                            pts.push(&v * (r / nv));
                        }
                    }
                    Samples::Points(pts)
                }
            }
            Region::Cuboid { lower, upper } => {
                let k = sampling.axis_count(lower.len());
                let axes: Vec<Vec<f64>> = lower.iter().zip(upper).map(|(l, u)| axis(*l, *u, k)).collect();
                Samples::Points(grid(&axes).into_iter().map(Vector::from_vec).collect())
            }
            Region::Params(b) => Samples::Elements(param_samples(&orbit.family, b, sampling)?),
            Region::Image { source } => {
                let els = param_samples(&orbit.family, source, sampling)?;
                let pts = els.iter().map(|h| kappa(orbit, h)).collect::<Result<Vec<_>>>()?;
                Samples::Points(pts)
            }
            Region::Lift { target } => {
                let Samples::Points(pts) = target.samples(orbit, sampling)? else {
                    unreachable!()
                };
                let els = pts
                    .iter()
                    .filter(|v| orbit.contains(v))
                    .map(|v| section(orbit, v))
                    .collect::<Result<Vec<_>>>()?;
                Samples::Elements(els)
            }
            Region::Cloud { points, .. } => {
                Samples::Points(points.iter().map(|p| Vector::from_vec(p.clone())).collect())
            }
        })
    }
}

fn compact_samples(family: &FamilySpec, shape: CompactShape, k: usize) -> Vec<Compact> {
    match (shape, family.kind) {
        (CompactShape::Identity, _) => vec![Compact::Identity],
        (CompactShape::Full, FamilyKind::Similitude) => match family.n {
            1 => vec![Compact::Rotation(crate::group_core::Matrix::identity(1, 1))],
            2 => (0..k)
                .map(|j| Compact::Rotation(fam::rotation2(std::f64::consts::TAU * j as f64 / k as f64)))
                .collect(),
            n => {
                let mut rng = ChaCha8Rng::seed_from_u64(17);
                (0..k).map(|_| Compact::Rotation(fam::random_rotation(n, &mut rng))).collect()
            }
        },
        (CompactShape::Full, FamilyKind::Sl2Lower) => vec![Compact::Sign(1.0), Compact::Sign(-1.0)],
        (CompactShape::Full, _) => vec![Compact::Identity],
    }
}

fn param_samples(family: &FamilySpec, b: &ParamBox, sampling: Sampling) -> Result<Vec<GroupElement>> {
    let rank = family.abelian_rank();
    let nd = family.nilpotent_dim();
    let compact_axis = b.compact == CompactShape::Full
        && matches!(family.kind, FamilyKind::Similitude if family.n >= 2);
    let dims = rank + nd + usize::from(compact_axis);
    let k = sampling.axis_count(dims);
    let a_axes: Vec<Vec<f64>> = b.a_half.iter().map(|h| axis(-h, *h, k)).collect();
    let n_axis = axis(-b.n_extent(), b.n_extent(), k);
    let a_pts = grid(&a_axes);
    let n_pts: Vec<Vec<f64>> = grid(&vec![n_axis; nd])
        .into_iter()
        .filter_map(|p| match b.nilpotent {
            NilpotentShape::Ball { radius } => {
                let norm: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                (norm <= radius * (1.0 + 1e-12)).then(|| nilpotent_coords_from_log(family, &p))
            }
            NilpotentShape::Cube { .. } => Some(p),
        })
        .collect();
    let compacts = compact_samples(family, b.compact, k);
    let mut out = Vec::with_capacity(a_pts.len() * n_pts.len() * compacts.len());
    for a in &a_pts {
        for n in &n_pts {
            for c in &compacts {
                out.push(from_coords(
                    family,
                    &Coords {
                        a: a.clone(),
                        n: n.clone(),
                        compact: c.clone(),
                    },
                )?);
            }
        }
    }
    Ok(out)
}

/// The orbit-map preimage of an orbit region.
pub fn lift_region(orbit: &OrbitSpec, b: &Region) -> Result<Region> {
    if b.level() != Level::Orbit {
        return Err(Error::InvalidParameter("only orbit regions can be lifted".into()));
    }
    b.validate(orbit)?;
    Ok(Region::Lift {
        target: Box::new(b.clone()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Method {
    Exact,
    Sampled { sampling: Sampling, margin: Option<f64> },
}

impl Method {
    pub fn sampled() -> Self {
        Method::Sampled {
            sampling: Sampling::default(),
            margin: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MethodUsed {
    Exact,
    /// A numerical certificate, not a proof.
    Sampled { samples: usize, margin: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub pair: (usize, usize),
    /// Orbit point, or the row-major matrix of a group element.
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Verified,
    Violated { witness: Witness },
    Inconclusive { reason: String, witness: Option<Witness> },
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Verified => "verified",
            Status::Violated { .. } => "violated",
            Status::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn is_verified(&self) -> bool {
        matches!(self, Status::Verified)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationCertificate {
    pub lattice_size: usize,
    pub region: Region,
    pub status: Status,
    pub method: MethodUsed,
    pub pairs_checked: usize,
}

fn element_point(h: &GroupElement) -> Vec<f64> {
    let m = h.matrix();
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Whether `check_separated` can run in exact mode for this input.
pub fn exact_applicable(orbit: &OrbitSpec, lattice: &[GroupElement], region: &Region) -> bool {
    exact_separation(orbit, lattice, region).is_ok()
}

pub fn check_separated(
    orbit: &OrbitSpec,
    lattice: &[GroupElement],
    region: &Region,
    method: &Method,
) -> Result<SeparationCertificate> {
    if lattice.is_empty() {
        return Err(Error::EmptyLattice);
    }
    region.validate(orbit)?;
    match method {
        Method::Exact => exact_separation(orbit, lattice, region),
        Method::Sampled { sampling, margin } => {
            let eta = margin.unwrap_or_else(|| region.default_margin(orbit));
            sampled_separation(orbit, lattice, region, *sampling, eta)
        }
    }
}

enum PairOutcome {
    Disjoint,
    Meets(Vec<f64>),
    Unknown(String),
}

/// Translates `g_i B` for similitudes and an annulus `B`.
fn annulus_pair(orbit: &OrbitSpec, gi: &GroupElement, gj: &GroupElement, inner: f64, outer: f64) -> Result<PairOutcome> {
    let ci = coords(&orbit.family, gi)?;
    let cj = coords(&orbit.family, gj)?;
    let base = orbit.family.base;
    // twisted action of scale s multiplies radii by 1/s
    let si = base.powf(-ci.a[0]);
    let sj = base.powf(-cj.a[0]);
    let lo = (si * inner).max(sj * inner);
    let hi = (si * outer).min(sj * outer);
    if lo <= hi * (1.0 + 1e-12) {
        let r = 0.5 * (lo + hi.max(lo));
        let mut p = vec![0.0; orbit.dim()];
        p[0] = r;
        Ok(PairOutcome::Meets(p))
    } else {
        Ok(PairOutcome::Disjoint)
    }
}

/// Bound on the lattice parameter of elements of `B B^-1` inside N.
fn nilpotent_overlap_bound(family: &FamilySpec, b: &ParamBox) -> Option<f64> {
    let delta = b.a_half.iter().cloned().fold(0.0, f64::max);
    let g = adjoint_growth(family, delta);
    match (family.kind, &b.nilpotent) {
        (FamilyKind::Similitude, _) => Some(0.0),
        (FamilyKind::LorentzAn, NilpotentShape::Ball { radius }) => Some(g * radius),
        (FamilyKind::LorentzAn, NilpotentShape::Cube { half_width }) => {
            Some(g * 2.0 * half_width * ((family.n - 1) as f64).sqrt())
        }
        (FamilyKind::Sl2Lower, NilpotentShape::Ball { radius }) => Some(2.0 * g * radius),
        (FamilyKind::Sl2Lower, NilpotentShape::Cube { half_width }) => Some(2.0 * g * half_width),
        (FamilyKind::TriangularQ, NilpotentShape::Ball { radius }) => Some(g * ((2.0 * radius).exp() - 1.0)),
        (FamilyKind::TriangularQ, NilpotentShape::Cube { .. }) => None,
    }
}

fn param_pair(orbit: &OrbitSpec, b: &ParamBox, gi: &GroupElement, gj: &GroupElement, bound: f64) -> Result<PairOutcome> {
    let family = &orbit.family;
    let rel = gj.inverse()?.mul(gi)?;
    let c = coords(family, &rel)?;
    let a_int = c.a.iter().any(|a| a.abs() > 0.5);
    if a_int {
        let delta = b.a_half.iter().cloned().fold(0.0, f64::max);
        if 2.0 * delta < 1.0 {
            return Ok(PairOutcome::Disjoint);
        }
        return Ok(PairOutcome::Unknown("abelian half-width reaches 1/2".into()));
    }
    match &c.compact {
        Compact::Rotation(_) if c.compact.distance_from_identity() > 1e-9 => {
            return Ok(match b.compact {
                CompactShape::Identity => PairOutcome::Disjoint,
                CompactShape::Full => PairOutcome::Meets(element_point(gj)),
            });
        }
        Compact::Sign(s) if *s < 0.0 => return Ok(PairOutcome::Disjoint),
        _ => {}
    }
    if family.kind == FamilyKind::Similitude {
        return Ok(PairOutcome::Meets(element_point(gj)));
    }
    let p = lattice_nilpotent_param(&rel);
    let size = match family.kind {
        FamilyKind::LorentzAn => p.iter().map(|v| v * v).sum::<f64>().sqrt(),
        FamilyKind::TriangularQ => p.iter().map(|v| v * v).sum::<f64>().sqrt(),
        _ => p.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    };
    if size > bound {
        Ok(PairOutcome::Disjoint)
    } else if size < 1e-12 {
        Ok(PairOutcome::Meets(element_point(gj)))
    } else {
        Ok(PairOutcome::Unknown(format!(
            "nilpotent offset {size:.3e} within overlap bound {bound:.3e}"
        )))
    }
}

fn exact_separation(orbit: &OrbitSpec, lattice: &[GroupElement], region: &Region) -> Result<SeparationCertificate> {
    if lattice.is_empty() {
        return Err(Error::EmptyLattice);
    }
    region.validate(orbit)?;
    let family = &orbit.family;
    enum Kind<'a> {
        Annulus(f64, f64),
        Box(&'a ParamBox, f64),
    }
    let kind = match region {
        Region::Annulus { inner, outer } if family.kind == FamilyKind::Similitude => {
            Kind::Annulus(*inner, *outer)
        }
        Region::Lift { target } => match target.as_ref() {
            Region::Annulus { inner, outer } if family.kind == FamilyKind::Similitude => {
                Kind::Annulus(*inner, *outer)
            }
            _ => return Err(Error::Unsupported("no exact criterion for this lifted region".into())),
        },
        Region::Params(b) | Region::Image { source: b } if orbit.is_free() => {
            let bound = nilpotent_overlap_bound(family, b)
                .ok_or_else(|| Error::Unsupported("cube boxes on a non-abelian N".into()))?;
            Kind::Box(b, bound)
        }
        _ => return Err(Error::Unsupported("no exact criterion for this region".into())),
    };
    let n = lattice.len();
    let mut pairs = 0;
    let mut unknown: Option<(String, Witness)> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            pairs += 1;
            let outcome = match kind {
                Kind::Annulus(a, b) => annulus_pair(orbit, &lattice[i], &lattice[j], a, b)?,
                Kind::Box(b, bound) => param_pair(orbit, b, &lattice[i], &lattice[j], bound)?,
            };
            match outcome {
                PairOutcome::Disjoint => {}
                PairOutcome::Meets(point) => {
                    let point = if region.level() == Level::Orbit && matches!(kind, Kind::Box(..)) {
                        // map the group witness down to the orbit
                        kappa(orbit, &lattice[j])?.iter().copied().collect()
                    } else if region.level() == Level::Group && matches!(kind, Kind::Annulus(..)) {
                        let v = Vector::from_vec(point);
                        element_point(&section(orbit, &v)?)
                    } else {
                        point
                    };
                    return Ok(SeparationCertificate {
                        lattice_size: n,
                        region: region.clone(),
                        status: Status::Violated {
                            witness: Witness { pair: (i, j), point },
                        },
                        method: MethodUsed::Exact,
                        pairs_checked: pairs,
                    });
                }
                PairOutcome::Unknown(reason) => {
                    if unknown.is_none() {
                        unknown = Some((
                            reason,
                            Witness {
                                pair: (i, j),
                                point: Vec::new(),
                            },
                        ));
                    }
                }
            }
        }
    }
    let status = match unknown {
        None => Status::Verified,
        Some((reason, w)) => Status::Inconclusive {
            reason,
            witness: Some(w),
        },
    };
    Ok(SeparationCertificate {
        lattice_size: n,
        region: region.clone(),
        status,
        method: MethodUsed::Exact,
        pairs_checked: pairs,
    })
}

/// Result of testing one sample translate against another translate.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Hit {
    Miss,
    Near,
    Inside,
}

fn test_translate(
    orbit: &OrbitSpec,
    region: &Region,
    gi: &GroupElement,
    gj_inv: &GroupElement,
    samples: &Samples,
    eta: f64,
    closed: bool,
) -> Result<(Hit, Vec<f64>)> {
    let mut best = (Hit::Miss, Vec::new());
    let rel = gj_inv.mul(gi)?;
    match samples {
        Samples::Points(pts) => {
            for s in pts {
                let moved = act(&orbit.family, &rel, s)?;
                let strict = region.contains_point(orbit, &moved, -eta)?;
                let loose = strict || region.contains_point(orbit, &moved, eta)?;
                let hit = if strict || (closed && loose) {
                    Hit::Inside
                } else if loose {
                    Hit::Near
                } else {
                    Hit::Miss
                };
                if hit > best.0 {
                    best = (hit, act(&orbit.family, gi, s)?.iter().copied().collect());
                    if hit == Hit::Inside {
                        return Ok(best);
                    }
                }
            }
        }
        Samples::Elements(els) => {
            for s in els {
                let moved = rel.mul(s)?;
                let strict = region.contains_element(orbit, &moved, -eta)?;
                let loose = strict || region.contains_element(orbit, &moved, eta)?;
                let hit = if strict || (closed && loose) {
                    Hit::Inside
                } else if loose {
                    Hit::Near
                } else {
                    Hit::Miss
                };
                if hit > best.0 {
                    best = (hit, element_point(&gi.mul(s)?));
                    if hit == Hit::Inside {
                        return Ok(best);
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Cheap exact rejection for parameter boxes: abelian coordinates of
/// `g_j^-1 g_i` farther apart than the box allows.
fn a_far_apart(orbit: &OrbitSpec, region: &Region, gi: &GroupElement, gj_inv: &GroupElement, eta: f64) -> bool {
    let Region::Params(b) = region else { return false };
    let Ok(rel) = gj_inv.mul(gi) else { return false };
    let Ok(c) = coords(&orbit.family, &rel) else { return false };
    c.a.iter()
        .zip(&b.a_half)
        .any(|(a, h)| a.abs() > 2.0 * h + 4.0 * eta)
}

fn sampled_separation(
    orbit: &OrbitSpec,
    lattice: &[GroupElement],
    region: &Region,
    sampling: Sampling,
    eta: f64,
) -> Result<SeparationCertificate> {
    let samples = region.samples(orbit, sampling)?;
    let n = lattice.len();
    let inverses = lattice.iter().map(|g| g.inverse()).collect::<Result<Vec<_>>>()?;
    let rows: Vec<Result<Vec<(usize, Hit, Vec<f64>)>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in 0..n {
                if i == j || a_far_apart(orbit, region, &lattice[i], &inverses[j], eta) {
                    continue;
                }
                let (hit, point) = test_translate(orbit, region, &lattice[i], &inverses[j], &samples, eta, false)?;
                if hit != Hit::Miss {
                    out.push((j, hit, point));
                }
            }
            Ok(out)
        })
        .collect();
    let mut near: Option<Witness> = None;
    for (i, row) in rows.into_iter().enumerate() {
        for (j, hit, point) in row? {
            let w = Witness { pair: (i, j), point };
            if hit == Hit::Inside {
                return Ok(SeparationCertificate {
                    lattice_size: n,
                    region: region.clone(),
                    status: Status::Violated { witness: w },
                    method: MethodUsed::Sampled {
                        samples: samples.len(),
                        margin: eta,
                    },
                    pairs_checked: n * (n - 1),
                });
            }
            if near.is_none() {
                near = Some(w);
            }
        }
    }
    let status = match near {
        None => Status::Verified,
        Some(w) => Status::Inconclusive {
            reason: "translates come within the margin without a certified witness".into(),
            witness: Some(w),
        },
    };
    Ok(SeparationCertificate {
        lattice_size: n,
        region: region.clone(),
        status,
        method: MethodUsed::Sampled {
            samples: samples.len(),
            margin: eta,
        },
        pairs_checked: n * (n - 1),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapResult {
    pub alpha: usize,
    /// `counts[i]` = number of translates meeting translate `i`.
    pub counts: Vec<usize>,
    pub method: MethodUsed,
}

/// `max_a #{b : a.D meets b.D}` with closed-set intersections.
pub fn overlap_constant(
    orbit: &OrbitSpec,
    lattice: &[GroupElement],
    d: &Region,
    method: &Method,
) -> Result<OverlapResult> {
    if lattice.is_empty() {
        return Err(Error::EmptyLattice);
    }
    d.validate(orbit)?;
    let n = lattice.len();
    match method {
        Method::Exact => {
            let (inner, outer) = match d {
                Region::Annulus { inner, outer } if orbit.family.kind == FamilyKind::Similitude => (*inner, *outer),
                Region::Lift { target } => match target.as_ref() {
                    Region::Annulus { inner, outer } if orbit.family.kind == FamilyKind::Similitude => {
                        (*inner, *outer)
                    }
                    _ => return Err(Error::Unsupported("no exact overlap rule for this region".into())),
                },
                _ => return Err(Error::Unsupported("no exact overlap rule for this region".into())),
            };
            let mut counts = vec![0; n];
            for i in 0..n {
                for j in 0..n {
                    let meets = i == j
                        || matches!(annulus_pair(orbit, &lattice[i], &lattice[j], inner, outer)?, PairOutcome::Meets(_));
                    if meets {
                        counts[i] += 1;
                    }
                }
            }
            Ok(OverlapResult {
                alpha: counts.iter().copied().max().unwrap_or(0),
                counts,
                method: MethodUsed::Exact,
            })
        }
        Method::Sampled { sampling, margin } => {
            let eta = margin.unwrap_or_else(|| d.default_margin(orbit));
            let samples = d.samples(orbit, *sampling)?;
            let inverses = lattice.iter().map(|g| g.inverse()).collect::<Result<Vec<_>>>()?;
            let counts: Vec<Result<usize>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut c = 1;
                    for j in 0..n {
                        if i == j || a_far_apart(orbit, d, &lattice[i], &inverses[j], eta) {
                            continue;
                        }
                        let (hit, _) = test_translate(orbit, d, &lattice[i], &inverses[j], &samples, eta, true)?;
                        if hit == Hit::Inside {
                            c += 1;
                        }
                    }
                    Ok(c)
                })
                .collect();
            let counts = counts.into_iter().collect::<Result<Vec<_>>>()?;
            Ok(OverlapResult {
                alpha: counts.iter().copied().max().unwrap_or(0),
                counts,
                method: MethodUsed::Sampled {
                    samples: samples.len(),
                    margin: eta,
                },
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageCertificate {
    pub covered: bool,
    pub uncovered: Vec<Vec<f64>>,
    pub samples: usize,
    /// Largest coordinate spacing of the probe grid.
    pub spacing: f64,
    pub margin: f64,
    pub max_multiplicity: usize,
    /// Probe points with the number of translates containing each.
    pub multiplicity: Vec<(Vec<f64>, usize)>,
}

/// Number of translates `a.F` (closed, inflated by `eta`) containing `v`.
pub fn multiplicity_at(
    orbit: &OrbitSpec,
    inverses: &[GroupElement],
    f: &Region,
    v: &Vector,
    eta: f64,
) -> Result<usize> {
    let mut c = 0;
    for inv in inverses {
        let moved = act(&orbit.family, inv, v)?;
        if f.contains_point(orbit, &moved, eta)? {
            c += 1;
        }
    }
    Ok(c)
}

/// Checks that every probe sample of `k` lies in some `a.F`.
pub fn check_covering(
    orbit: &OrbitSpec,
    lattice: &[GroupElement],
    f: &Region,
    k: &Region,
    sampling: Sampling,
    margin: Option<f64>,
) -> Result<CoverageCertificate> {
    if lattice.is_empty() {
        return Err(Error::EmptyLattice);
    }
    if f.level() != Level::Orbit || k.level() != Level::Orbit {
        return Err(Error::InvalidParameter("covering uses orbit regions".into()));
    }
    f.validate(orbit)?;
    let Samples::Points(pts) = k.samples(orbit, sampling)? else {
        unreachable!()
    };
    for p in &pts {
        let status = orbit.membership(p);
        if status != Membership::Inside {
            return Err(Error::ProbeOutsideOrbit {
                point: p.iter().copied().collect(),
                status: format!("{status:?}").to_lowercase(),
            });
        }
    }
    let eta = margin.unwrap_or_else(|| f.default_margin(orbit));
    let inverses = lattice.iter().map(|g| g.inverse()).collect::<Result<Vec<_>>>()?;
    let mult: Vec<Result<usize>> = pts
        .par_iter()
        .map(|p| multiplicity_at(orbit, &inverses, f, p, eta))
        .collect();
    let mult = mult.into_iter().collect::<Result<Vec<_>>>()?;
    let multiplicity: Vec<(Vec<f64>, usize)> = pts
        .iter()
        .zip(&mult)
        .map(|(p, &m)| (p.iter().copied().collect(), m))
        .collect();
    let uncovered: Vec<Vec<f64>> = multiplicity
        .iter()
        .filter(|(_, m)| *m == 0)
        .map(|(p, _)| p.clone())
        .collect();
    Ok(CoverageCertificate {
        covered: uncovered.is_empty(),
        uncovered,
        samples: pts.len(),
        spacing: probe_spacing(&pts),
        margin: eta,
        max_multiplicity: mult.iter().copied().max().unwrap_or(0),
        multiplicity,
    })
}

/// Largest nearest-neighbour distance in the probe set (coarse bound on
/// the grid spacing).
fn probe_spacing(pts: &[Vector]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let step = (pts.len() / 256).max(1);
    let mut worst: f64 = 0.0;
    for p in pts.iter().step_by(step) {
        let mut best = f64::INFINITY;
        for q in pts {
            let d = (p - q).norm();
            if d > 0.0 && d < best {
                best = d;
            }
        }
        if best.is_finite() {
            worst = worst.max(best);
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BqOptions {
    pub eps_max: f64,
    pub eps_min: f64,
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for BqOptions {
    fn default() -> Self {
        BqOptions {
            eps_max: 1.0,
            eps_min: 1e-12,
            delta: 0.25,
            samples: 2000,
            seed: 11,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BqRegion {
    pub epsilon: f64,
    pub delta: f64,
    pub region: ParamBox,
    /// Analytic bound on the lattice parameter of a `K_eps^4` element.
    pub avoidance_bound: f64,
    /// Largest observed `|Ad(a) Y| / |Y|` in the sampled containment check.
    pub conjugation_ratio: f64,
    /// Largest lattice parameter seen on sampled `K_eps^4` products.
    pub sampled_product_sup: f64,
    /// `e^delta / 2 < 3/4` for the Lorentz family.
    pub half_ball_check: Option<bool>,
}

fn avoidance_bound(family: &FamilySpec, eps: f64) -> f64 {
    let r = eps.sqrt();
    match family.kind {
        FamilyKind::LorentzAn => 2.0 * r,
        FamilyKind::TriangularQ => (4.0 * r).exp() - 1.0,
        FamilyKind::Sl2Lower => 4.0 * r,
        FamilyKind::Similitude => 0.0,
    }
}

fn random_ball(family: &FamilySpec, radius: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = family.nilpotent_dim();
    let dir: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let r = radius * rng.random::<f64>().powf(1.0 / k as f64);
    let flat: Vec<f64> = dir.iter().map(|v| v * r / norm).collect();
    nilpotent_coords_from_log(family, &flat)
}

fn n_element(family: &FamilySpec, n: Vec<f64>) -> Result<GroupElement> {
    from_coords(
        family,
        &Coords {
            a: vec![0.0; family.abelian_rank()],
            n,
            compact: Compact::Identity,
        },
    )
}

/// Finds `eps` and `delta` for the parameter box `|r_j| <= delta`,
/// `Tr(X X^T) <= eps` so that its lattice translates are disjoint.
pub fn build_bq_region(spec: &FamilySpec, window: &LatticeWindow, opts: &BqOptions) -> Result<BqRegion> {
    spec.validate()?;
    if spec.kind == FamilyKind::Similitude {
        return Err(Error::Unsupported("B(Q) needs a nilpotent factor".into()));
    }
    window.validate(spec)?;
    if !(opts.delta > 0.0 && opts.delta <= 0.25) {
        return Err(Error::InvalidParameter(format!("delta {} not in (0, 1/4]", opts.delta)));
    }
    // exp(Y) lies in K_eps^2 whenever |Y| <= 2 sqrt(eps)
    if adjoint_growth(spec, opts.delta) > 2.0 {
        return Err(Error::InvalidParameter("delta too large for conjugation containment".into()));
    }
    let degenerate = window.count(spec) == 1 && fam::lattice_points(spec, window)?[0].element.is_identity(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let half_ball = (spec.kind == FamilyKind::LorentzAn).then(|| opts.delta.exp() * 0.5 < 0.75);
    let mut eps = opts.eps_max;
    let mut last_violation = String::new();
    while eps >= opts.eps_min {
        let bound = avoidance_bound(spec, eps);
        if !degenerate && bound >= 0.5 {
            last_violation = format!(
                "K_eps^4 may reach the lattice element with unit nilpotent parameter (bound {bound:.3e})"
            );
            eps *= 0.5;
            continue;
        }
        let radius = eps.sqrt();
        // sampled containment a K a^-1 in K^2
        let mut ratio: f64 = 0.0;
        let mut product_sup: f64 = 0.0;
        for _ in 0..opts.samples {
            let r: Vec<f64> = (0..spec.abelian_rank())
                .map(|_| rng.random_range(-opts.delta..=opts.delta))
                .collect();
            let y = random_ball(spec, radius, &mut rng);
            let a = from_coords(
                spec,
                &Coords {
                    a: r.clone(),
                    n: vec![0.0; spec.nilpotent_dim()],
                    compact: Compact::Identity,
                },
            )?;
            let conj = a.mul(&n_element(spec, y.clone())?)?.mul(&a.inverse()?)?;
            let c = coords(spec, &conj)?;
            let before = nilpotent_log_norm(spec, &y);
            if before > 0.0 {
                let after = nilpotent_log_norm(spec, &c.n);
                ratio = ratio.max(after / before);
                debug_assert!(after / before <= adjoint_growth_at(spec, &r) * (1.0 + 1e-9));
            }
            let mut prod = n_element(spec, random_ball(spec, radius, &mut rng))?;
            for _ in 0..3 {
                prod = prod.mul(&n_element(spec, random_ball(spec, radius, &mut rng))?)?;
            }
            let sup = lattice_nilpotent_param(&prod).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            product_sup = product_sup.max(sup);
        }
        if ratio > 2.0 * (1.0 + 1e-9) || (!degenerate && product_sup >= 0.5) {
            last_violation = format!("sampled check failed: conjugation ratio {ratio:.3e}, K^4 sup {product_sup:.3e}");
            eps *= 0.5;
            continue;
        }
        let region = ParamBox {
            a_half: vec![opts.delta; spec.abelian_rank()],
            nilpotent: NilpotentShape::Ball { radius },
            compact: CompactShape::Identity,
        };
        return Ok(BqRegion {
            epsilon: eps,
            delta: opts.delta,
            region,
            avoidance_bound: bound,
            conjugation_ratio: ratio,
            sampled_product_sup: product_sup,
            half_ball_check: half_ball,
        });
    }
    Err(Error::EpsilonSearch {
        largest_tested: opts.eps_max,
        violation: last_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_families::{enumerate_lattice, FamilySpec, LatticeWindow};

    fn dyadic(k: i64) -> (OrbitSpec, Vec<GroupElement>) {
        let spec = FamilySpec::similitude(1);
        let orbit = OrbitSpec::similitude(spec.clone()).unwrap();
        let lat = enumerate_lattice(&spec, &LatticeWindow::new(vec![(-k, k)], vec![])).unwrap();
        (orbit, lat)
    }

    #[test]
    fn annulus_separation_examples() {
        let (orbit, lat) = dyadic(3);
        let b = Region::Annulus { inner: 1.0, outer: 1.5 };
        let cert = check_separated(&orbit, &lat, &b, &Method::Exact).unwrap();
        assert_eq!(cert.status, Status::Verified);
        let wide = Region::Annulus { inner: 1.0, outer: 2.5 };
        let cert = check_separated(&orbit, &lat, &wide, &Method::Exact).unwrap();
        let Status::Violated { witness } = cert.status else { panic!("expected violation") };
        // the witness lies in both translates
        let (i, j) = witness.pair;
        let v = Vector::from_vec(witness.point.clone());
        for g in [&lat[i], &lat[j]] {
            let back = act(&orbit.family, &g.inverse().unwrap(), &v).unwrap();
            assert!(wide.contains_point(&orbit, &back, 1e-12).unwrap());
        }
        let cert = check_separated(&orbit, &lat, &wide, &Method::sampled()).unwrap();
        assert!(matches!(cert.status, Status::Violated { .. }));
        let single = &lat[3..4];
        assert!(check_separated(&orbit, single, &wide, &Method::Exact).unwrap().status.is_verified());
        assert!(matches!(
            check_separated(&orbit, &[], &wide, &Method::Exact),
            Err(Error::EmptyLattice)
        ));
    }

    #[test]
    fn overlap_examples() {
        let (orbit, lat) = dyadic(4);
        let d = Region::Annulus { inner: 1.0, outer: 2.0 };
        let exact = overlap_constant(&orbit, &lat, &d, &Method::Exact).unwrap();
        assert_eq!(exact.alpha, 3);
        let sampled = overlap_constant(&orbit, &lat, &d, &Method::sampled()).unwrap();
        assert_eq!(sampled.alpha, 3);
        let narrow = Region::Annulus { inner: 1.0, outer: 1.9 };
        assert_eq!(overlap_constant(&orbit, &lat, &narrow, &Method::Exact).unwrap().alpha, 1);
        assert_eq!(overlap_constant(&orbit, &lat, &narrow, &Method::sampled()).unwrap().alpha, 1);
        assert_eq!(overlap_constant(&orbit, &lat[..1], &d, &Method::Exact).unwrap().alpha, 1);
    }

    #[test]
    fn overlap_brute_force_oracle() {
        // intervals [2^-k, 2^-k * 2] meet iff |k - j| <= 1
        let (orbit, lat) = dyadic(4);
        let d = Region::Annulus { inner: 1.0, outer: 2.0 };
        let got = overlap_constant(&orbit, &lat, &d, &Method::Exact).unwrap();
        for (i, count) in got.counts.iter().enumerate() {
            let lo_i = 2f64.powi(-(i as i32 - 4));
            let mut c = 0;
            for j in 0..lat.len() {
                let lo_j = 2f64.powi(-(j as i32 - 4));
                if lo_i.max(lo_j) <= (2.0 * lo_i).min(2.0 * lo_j) {
                    c += 1;
                }
            }
            assert_eq!(*count, c);
        }
    }

    #[test]
    fn overlap_is_stable_under_window_growth() {
        let d = Region::Annulus { inner: 1.0, outer: 2.0 };
        let (orbit, small) = dyadic(4);
        let (_, big) = dyadic(7);
        let a = overlap_constant(&orbit, &small, &d, &Method::Exact).unwrap().alpha;
        let b = overlap_constant(&orbit, &big, &d, &Method::Exact).unwrap().alpha;
        assert_eq!(a, b);
    }

    #[test]
    fn covering_examples() {
        let (orbit, lat) = dyadic(8);
        let f = Region::Annulus { inner: 1.0, outer: 2.0 };
        let k = Region::Annulus { inner: 0.1, outer: 10.0 };
        let cert = check_covering(&orbit, &lat, &f, &k, Sampling::default(), None).unwrap();
        assert!(cert.covered);
        assert!(cert.max_multiplicity <= 3);

        let f = Region::Annulus { inner: 1.0, outer: 1.5 };
        let k = Region::Annulus { inner: 1.0, outer: 4.0 };
        let cert = check_covering(&orbit, &lat, &f, &k, Sampling::default(), None).unwrap();
        assert!(!cert.covered);
        assert!(cert.uncovered.iter().any(|p| p[0] > 1.5 && p[0] < 2.0));
        assert!(cert.uncovered.iter().all(|p| (p[0] > 1.5 && p[0] < 2.0) || (p[0] > 3.0 && p[0] < 4.0)));

        let inside = Region::Annulus { inner: 1.1, outer: 1.4 };
        let id = vec![fam::similitude(&orbit.family, 1.0, crate::group_core::Matrix::identity(1, 1)).unwrap()];
        assert!(check_covering(&orbit, &id, &f, &inside, Sampling::default(), None).unwrap().covered);
    }

    #[test]
    fn covering_rejects_probe_outside_orbit() {
        let spec = FamilySpec::similitude(2);
        let orbit = OrbitSpec::similitude(spec.clone()).unwrap();
        let lat = enumerate_lattice(&spec, &LatticeWindow::new(vec![(-2, 2)], vec![])).unwrap();
        let f = Region::Annulus { inner: 1.0, outer: 2.0 };
        let k = Region::Cloud { points: vec![vec![0.5, 0.0], vec![0.0, 0.0]], radius: 0.1 };
        assert!(matches!(
            check_covering(&orbit, &lat, &f, &k, Sampling::default(), None),
            Err(Error::ProbeOutsideOrbit { .. })
        ));
    }

    #[test]
    fn lift_examples() {
        let spec = FamilySpec::similitude(2);
        let orbit = OrbitSpec::similitude(spec.clone()).unwrap();
        let b = Region::Annulus { inner: 1.0, outer: 1.5 };
        let lift = lift_region(&orbit, &b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let h = fam::random_element(&spec, &mut rng, 1.0).unwrap();
            let c = coords(&spec, &h).unwrap();
            let r_inv = 2f64.powf(-c.a[0]);
            let direct = (1.0..=1.5).contains(&r_inv);
            assert_eq!(lift.contains_element(&orbit, &h, 0.0).unwrap(), direct);
        }

        let spec = FamilySpec::lorentz_an(2);
        let orbit = OrbitSpec::lorentz(spec.clone(), 1).unwrap();
        let point = Region::Cloud { points: vec![vec![1.0, 0.0, 0.0]], radius: 1e-12 };
        let lift = lift_region(&orbit, &point).unwrap();
        assert!(lift.contains_element(&orbit, &GroupElement::identity(3), 0.0).unwrap());
        for _ in 0..200 {
            let h = fam::random_element(&spec, &mut rng, 1.0).unwrap();
            assert!(!lift.contains_element(&orbit, &h, 0.0).unwrap());
        }
    }

    #[test]
    fn bq_lorentz() {
        let spec = FamilySpec::lorentz_an(2);
        let window = LatticeWindow::symmetric(&spec, 1, 1);
        let bq = build_bq_region(&spec, &window, &BqOptions::default()).unwrap();
        assert!(bq.delta <= 0.25);
        assert_eq!(bq.half_ball_check, Some(true));
        assert!(bq.avoidance_bound < 0.5);
        let orbit = OrbitSpec::lorentz(spec.clone(), 1).unwrap();
        let lat = enumerate_lattice(&spec, &window).unwrap();
        let region = Region::Params(bq.region.clone());
        let exact = check_separated(&orbit, &lat, &region, &Method::Exact).unwrap();
        assert_eq!(exact.status, Status::Verified);
        let sampled = check_separated(&orbit, &lat, &region, &Method::sampled()).unwrap();
        assert_eq!(sampled.status, Status::Verified);
        let down = Region::Image { source: bq.region };
        let sampled = check_separated(&orbit, &lat, &down, &Method::sampled()).unwrap();
        assert_eq!(sampled.status, Status::Verified);
    }

    #[test]
    fn bq_degenerate_window_returns_max() {
        let spec = FamilySpec::triangular_q(2);
        let window = LatticeWindow::new(vec![(0, 0), (0, 0)], vec![(0, 0)]);
        let bq = build_bq_region(&spec, &window, &BqOptions::default()).unwrap();
        assert_eq!(bq.epsilon, 1.0);
    }

    #[test]
    fn bq_triangular_and_sl2() {
        for (spec, window) in [
            (FamilySpec::triangular_q(3), LatticeWindow::new(vec![(-1, 1), (0, 0), (0, 0)], vec![(-1, 1), (-1, 1), (0, 1)])),
            (FamilySpec::sl2_lower(), LatticeWindow::symmetric(&FamilySpec::sl2_lower(), 1, 1)),
        ] {
            let bq = build_bq_region(&spec, &window, &BqOptions::default()).unwrap();
            assert!(bq.avoidance_bound < 0.5);
            let lat = enumerate_lattice(&spec, &window).unwrap();
            let orbit = match spec.kind {
                FamilyKind::TriangularQ => OrbitSpec::symmetric(spec.clone(), vec![1, -1, 1]).unwrap(),
                _ => OrbitSpec::sl2(spec.clone()).unwrap(),
            };
            let region = Region::Params(bq.region);
            assert_eq!(check_separated(&orbit, &lat, &region, &Method::Exact).unwrap().status, Status::Verified);
            assert_eq!(check_separated(&orbit, &lat, &region, &Method::sampled()).unwrap().status, Status::Verified);
        }
    }

    #[test]
    fn half_ball_box_is_not_separating() {
        // |t|, |log lambda| <= 1/4 with |x| <= 1/2 lets n(1) and e overlap
        let spec = FamilySpec::lorentz_an(2);
        let orbit = OrbitSpec::lorentz(spec.clone(), 1).unwrap();
        let window = LatticeWindow::new(vec![(0, 0), (0, 0)], vec![(0, 1)]);
        let lat = enumerate_lattice(&spec, &window).unwrap();
        let b = Region::Params(ParamBox::cube(vec![0.25, 0.25], 0.5));
        let cert = check_separated(&orbit, &lat, &b, &Method::sampled()).unwrap();
        assert!(matches!(cert.status, Status::Violated { .. }));
    }
}
