//! Closed-form constructors, exponential maps and lattice windows for the
//! concrete families: similitudes R+SO(n), the Lorentz AN group on R^{n+1},
//! the upper triangular group acting on Sym(n), and the lower triangular
//! subgroup of SL(2, R).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_core::{
    expm, log_unipotent, AlgebraElement, FamilyTag, GroupElement, Matrix, Params, Vector,
};

/// Default cap on the number of lattice elements a window may produce.
pub const DEFAULT_LATTICE_CAP: usize = 100_000;

const ORTHO_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Similitude,
    LorentzAn,
    TriangularQ,
    Sl2Lower,
}

impl FamilyKind {
    pub fn tag(self) -> FamilyTag {
        match self {
            FamilyKind::Similitude => FamilyTag::Similitude,
            FamilyKind::LorentzAn => FamilyTag::LorentzAn,
            FamilyKind::TriangularQ => FamilyTag::TriangularQ,
            FamilyKind::Sl2Lower => FamilyTag::Sl2Lower,
        }
    }
}

/// A concrete family. For the similitude family `base` is the dilation
/// factor of the lattice and `rotations` the finite rotation subset.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub n: usize,
    pub base: f64,
    pub rotations: Vec<Matrix>,
}

impl FamilySpec {
    pub fn similitude(n: usize) -> Self {
        FamilySpec {
            kind: FamilyKind::Similitude,
            n,
            base: 2.0,
            rotations: vec![Matrix::identity(n, n)],
        }
    }

    pub fn lorentz_an(n: usize) -> Self {
        FamilySpec {
            kind: FamilyKind::LorentzAn,
            n,
            base: std::f64::consts::E,
            rotations: Vec::new(),
        }
    }

    pub fn triangular_q(n: usize) -> Self {
        FamilySpec {
            kind: FamilyKind::TriangularQ,
            n,
            base: std::f64::consts::E,
            rotations: Vec::new(),
        }
    }

    pub fn sl2_lower() -> Self {
        FamilySpec {
            kind: FamilyKind::Sl2Lower,
            n: 2,
            base: std::f64::consts::E,
            rotations: Vec::new(),
        }
    }

    pub fn with_base(mut self, base: f64) -> Self {
        self.base = base;
        self
    }

    /// Replaces the rotation subset; each entry must lie in SO(n).
    pub fn with_rotations(mut self, rotations: Vec<Matrix>) -> Result<Self> {
        for r in &rotations {
            check_rotation(r, self.n)?;
        }
        if rotations.is_empty() {
            return Err(Error::InvalidParameter("rotation subset is empty".into()));
        }
        self.rotations = rotations;
        Ok(self)
    }

    /// Plane rotations by the given angles (n = 2 only).
    pub fn with_angles(self, angles: &[f64]) -> Result<Self> {
        if self.n != 2 {
            return Err(Error::Unsupported("rotation angles need n = 2".into()));
        }
        let rots = angles.iter().map(|&a| rotation2(a)).collect();
        self.with_rotations(rots)
    }

    pub fn validate(&self) -> Result<()> {
        let min_n = match self.kind {
            FamilyKind::Similitude => 1,
            FamilyKind::LorentzAn => 2,
            FamilyKind::TriangularQ => 1,
            FamilyKind::Sl2Lower => 2,
        };
        if self.n < min_n {
            return Err(Error::InvalidParameter(format!(
                "{} needs n >= {min_n}, got {}",
                self.kind.tag(),
                self.n
            )));
        }
        if self.kind == FamilyKind::Sl2Lower && self.n != 2 {
            return Err(Error::InvalidParameter("sl2_lower has n = 2".into()));
        }
        if self.kind == FamilyKind::Similitude && !(self.base > 1.0 && self.base.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "similitude base must exceed 1, got {}",
                self.base
            )));
        }
        Ok(())
    }

    /// Size of the matrices representing the group.
    pub fn matrix_dim(&self) -> usize {
        match self.kind {
            FamilyKind::LorentzAn => self.n + 1,
            _ => self.n,
        }
    }

    /// Dimension of the vector space the group acts on.
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            FamilyKind::Similitude | FamilyKind::Sl2Lower => self.n,
            FamilyKind::LorentzAn => self.n + 1,
            FamilyKind::TriangularQ => self.n * (self.n + 1) / 2,
        }
    }

    /// Number of generators of the abelian lattice part.
    pub fn abelian_rank(&self) -> usize {
        match self.kind {
            FamilyKind::Similitude | FamilyKind::Sl2Lower => 1,
            FamilyKind::LorentzAn => 2,
            FamilyKind::TriangularQ => self.n,
        }
    }

    /// Dimension of the nilpotent part.
    pub fn nilpotent_dim(&self) -> usize {
        match self.kind {
            FamilyKind::Similitude => 0,
            FamilyKind::LorentzAn => self.n - 1,
            FamilyKind::TriangularQ => self.n * (self.n - 1) / 2,
            FamilyKind::Sl2Lower => 1,
        }
    }

    /// Dimension of the group itself.
    pub fn group_dim(&self) -> usize {
        let compact = match self.kind {
            FamilyKind::Similitude => self.n * (self.n - 1) / 2,
            _ => 0,
        };
        self.abelian_rank() + self.nilpotent_dim() + compact
    }
}

pub fn rotation2(angle: f64) -> Matrix {
    let (s, c) = angle.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn check_rotation(r: &Matrix, n: usize) -> Result<()> {
    if r.nrows() != n || r.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: r.nrows(),
        });
    }
    let dev = (r.transpose() * r - Matrix::identity(n, n)).amax();
    if dev > ORTHO_TOL {
        return Err(Error::InvalidParameter(format!(
            "rotation is not orthogonal (deviation {dev:.3e})"
        )));
    }
    if (r.determinant() - 1.0).abs() > ORTHO_TOL {
        return Err(Error::InvalidParameter("rotation has det != 1".into()));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// `a(lambda, t)` on R^{n+1}.
pub fn lorentz_a(n: usize, lambda: f64, t: f64) -> Matrix {
    let d = n + 1;
    let mut m = Matrix::identity(d, d);
    m[(0, 0)] = t.cosh();
    m[(d - 1, d - 1)] = t.cosh();
    m[(0, d - 1)] = t.sinh();
    m[(d - 1, 0)] = t.sinh();
    m * lambda
}

/// `n(x)` on R^{n+1}, `x` in R^{n-1}.
pub fn lorentz_n(x: &[f64]) -> Matrix {
    let d = x.len() + 2;
    let q = 0.5 * x.iter().map(|v| v * v).sum::<f64>();
    let mut m = Matrix::identity(d, d);
    m[(0, 0)] = 1.0 + q;
    m[(0, d - 1)] = q;
    m[(d - 1, 0)] = -q;
    m[(d - 1, d - 1)] = 1.0 - q;
    for (i, &xi) in x.iter().enumerate() {
        m[(0, i + 1)] = xi;
        m[(i + 1, 0)] = xi;
        m[(i + 1, d - 1)] = xi;
        m[(d - 1, i + 1)] = -xi;
    }
    m
}

/// `H(s, t) = s I + t (E_{1,n+1} + E_{n+1,1})`.
pub fn lorentz_h(n: usize, s: f64, t: f64) -> Matrix {
    let d = n + 1;
    let mut m = Matrix::identity(d, d) * s;
    m[(0, d - 1)] = t;
    m[(d - 1, 0)] = t;
    m
}

/// The nilpotent generator `X(x)` with `exp X(x) = n(x)`.
pub fn lorentz_x(x: &[f64]) -> Matrix {
    let d = x.len() + 2;
    let mut m = Matrix::zeros(d, d);
    for (i, &xi) in x.iter().enumerate() {
        m[(0, i + 1)] = xi;
        m[(i + 1, 0)] = xi;
        m[(i + 1, d - 1)] = xi;
        m[(d - 1, i + 1)] = -xi;
    }
    m
}

fn sl2_matrix(a: f64, u: f64) -> Matrix {
    // theta of diag(a, 1/a) [[1, 0], [u, 1]]
    Matrix::from_row_slice(2, 2, &[1.0 / a, -u / a, 0.0, a])
}

/// Builds the matrix for already validated parameters.
pub(crate) fn synthesize(params: &Params) -> Matrix {
    match params {
        Params::Generic => unreachable!("generic params carry no matrix"),
        Params::Similitude { scale, rotation } => rotation * *scale,
        Params::LorentzAn { lambda, t, x } => lorentz_a(x.len() + 1, *lambda, *t) * lorentz_n(x),
        Params::TriangularQ {
            log_diag,
            unipotent,
        } => {
            let d = Vector::from_iterator(log_diag.len(), log_diag.iter().map(|v| v.exp()));
            Matrix::from_diagonal(&d) * unipotent
        }
        Params::Sl2Lower { a, u } => sl2_matrix(*a, *u),
    }
}

/// Family parameter law, or `None` when the two elements are not in one
/// family of one dimension.
pub(crate) fn compose_params(p: &Params, q: &Params) -> Option<Params> {
    match (p, q) {
        (
            Params::Similitude { scale: s1, rotation: r1 },
            Params::Similitude { scale: s2, rotation: r2 },
        ) if r1.nrows() == r2.nrows() => Some(Params::Similitude {
            scale: s1 * s2,
            rotation: r1 * r2,
        }),
        (
            Params::LorentzAn { lambda: l1, t: t1, x: x1 },
            Params::LorentzAn { lambda: l2, t: t2, x: x2 },
        ) if x1.len() == x2.len() => {
            let f = t2.exp();
            Some(Params::LorentzAn {
                lambda: l1 * l2,
                t: t1 + t2,
                x: x1.iter().zip(x2).map(|(a, b)| f * a + b).collect(),
            })
        }
        (
            Params::TriangularQ { log_diag: d1, unipotent: u1 },
            Params::TriangularQ { log_diag: d2, unipotent: u2 },
        ) if d1.len() == d2.len() => {
            // (d U)(d' U') = d d' (d'^-1 U d') U'
            let n = d1.len();
            let mut conj = u1.clone();
            for i in 0..n {
                for j in 0..n {
                    conj[(i, j)] *= (d2[j] - d2[i]).exp();
                }
            }
            Some(Params::TriangularQ {
                log_diag: d1.iter().zip(d2).map(|(a, b)| a + b).collect(),
                unipotent: conj * u2,
            })
        }
        (Params::Sl2Lower { a: a1, u: u1 }, Params::Sl2Lower { a: a2, u: u2 }) => {
            Some(Params::Sl2Lower {
                a: a1 * a2,
                u: a2 * a2 * u1 + u2,
            })
        }
        _ => None,
    }
}

pub(crate) fn invert_params(p: &Params) -> Option<Params> {
    match p {
        Params::Generic => None,
        Params::Similitude { scale, rotation } => Some(Params::Similitude {
            scale: 1.0 / scale,
            rotation: rotation.transpose(),
        }),
        Params::LorentzAn { lambda, t, x } => {
            let f = -(-t).exp();
            Some(Params::LorentzAn {
                lambda: 1.0 / lambda,
                t: -t,
                x: x.iter().map(|v| f * v).collect(),
            })
        }
        Params::TriangularQ {
            log_diag,
            unipotent,
        } => {
            // (d U)^-1 = d^-1 (d U^-1 d^-1)
            let n = log_diag.len();
            let mut inv = unit_upper_inverse(unipotent);
            for i in 0..n {
                for j in 0..n {
                    inv[(i, j)] *= (log_diag[i] - log_diag[j]).exp();
                }
            }
            Some(Params::TriangularQ {
                log_diag: log_diag.iter().map(|v| -v).collect(),
                unipotent: inv,
            })
        }
        Params::Sl2Lower { a, u } => Some(Params::Sl2Lower {
            a: 1.0 / a,
            u: -u / (a * a),
        }),
    }
}

/// Inverse of a unit upper triangular matrix by back substitution, exact on
/// integer input.
fn unit_upper_inverse(u: &Matrix) -> Matrix {
    let n = u.nrows();
    let mut inv = Matrix::identity(n, n);
    for j in 0..n {
        for i in (0..j).rev() {
            let mut s = 0.0;
            for k in (i + 1)..=j {
                s += u[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s;
        }
    }
    inv
}

fn expect_kind(spec: &FamilySpec, params: &Params) -> Result<()> {
    if params.tag() != spec.kind.tag() {
        return Err(Error::WrongFamily {
            expected: spec.kind.tag().to_string(),
            found: params.tag().to_string(),
        });
    }
    Ok(())
}

/// Builds the closed-form matrix for `params` after validating them.
pub fn make_element(spec: &FamilySpec, params: Params) -> Result<GroupElement> {
    spec.validate()?;
    expect_kind(spec, &params)?;
    match &params {
        Params::Similitude { scale, rotation } => {
            positive("scale", *scale)?;
            check_rotation(rotation, spec.n)?;
        }
        Params::LorentzAn { lambda, t, x } => {
            positive("lambda", *lambda)?;
            if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite lorentz parameter".into()));
            }
            if x.len() != spec.n - 1 {
                return Err(Error::DimensionMismatch {
                    expected: spec.n - 1,
                    found: x.len(),
                });
            }
        }
        Params::TriangularQ {
            log_diag,
            unipotent,
        } => {
            if log_diag.len() != spec.n || unipotent.nrows() != spec.n || unipotent.ncols() != spec.n
            {
                return Err(Error::DimensionMismatch {
                    expected: spec.n,
                    found: log_diag.len(),
                });
            }
            for i in 0..spec.n {
                for j in 0..=i {
                    let want = if i == j { 1.0 } else { 0.0 };
                    if unipotent[(i, j)] != want {
                        return Err(Error::InvalidParameter(
                            "unipotent factor must be unit upper triangular".into(),
                        ));
                    }
                }
            }
            if log_diag.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite diagonal".into()));
            }
        }
        Params::Sl2Lower { a, u } => {
            if *a == 0.0 || !a.is_finite() || !u.is_finite() {
                return Err(Error::InvalidParameter(format!("sl2 parameter a = {a} invalid")));
            }
        }
        Params::Generic => unreachable!(),
    }
    let matrix = synthesize(&params);
    Ok(GroupElement::from_parts(matrix, params))
}

/// Convenience constructor for the similitude `scale * rotation`.
pub fn similitude(spec: &FamilySpec, scale: f64, rotation: Matrix) -> Result<GroupElement> {
    make_element(spec, Params::Similitude { scale, rotation })
}

pub fn lorentz(spec: &FamilySpec, lambda: f64, t: f64, x: Vec<f64>) -> Result<GroupElement> {
    make_element(spec, Params::LorentzAn { lambda, t, x })
}

pub fn triangular(spec: &FamilySpec, log_diag: Vec<f64>, unipotent: Matrix) -> Result<GroupElement> {
    make_element(
        spec,
        Params::TriangularQ {
            log_diag,
            unipotent,
        },
    )
}

pub fn sl2(spec: &FamilySpec, a: f64, u: f64) -> Result<GroupElement> {
    make_element(spec, Params::Sl2Lower { a, u })
}

/// Coordinates on the abelian or nilpotent part of the Lie algebra.
#[derive(Clone, Debug, PartialEq)]
pub enum AlgebraParams {
    /// Similitude: `[s]` for `sI`. Lorentz: `[s, t]` for `H(s, t)`.
    /// Triangular: the diagonal. sl2: `[s]` for `diag(s, -s)`.
    Abelian(Vec<f64>),
    /// Lorentz: `x` for `X(x)`. Triangular: strict upper entries row by row.
    /// sl2: `[u]` for the lower entry.
    Nilpotent(Vec<f64>),
}

fn strict_upper(n: usize, entries: &[f64]) -> Result<Matrix> {
    if entries.len() != n * (n - 1) / 2 {
        return Err(Error::DimensionMismatch {
            expected: n * (n - 1) / 2,
            found: entries.len(),
        });
    }
    let mut m = Matrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            m[(i, j)] = entries[k];
            k += 1;
        }
    }
    Ok(m)
}

fn strict_upper_entries(m: &Matrix) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn check_len(v: &[f64], want: usize) -> Result<()> {
    if v.len() != want {
        return Err(Error::DimensionMismatch {
            expected: want,
            found: v.len(),
        });
    }
    Ok(())
}

/// The matrix of an algebra element in the representation of `spec`.
pub fn algebra_element(spec: &FamilySpec, p: &AlgebraParams) -> Result<AlgebraElement> {
    spec.validate()?;
    let tag = spec.kind.tag();
    let n = spec.n;
    match (spec.kind, p) {
        (FamilyKind::Similitude, AlgebraParams::Abelian(v)) => {
            check_len(v, 1)?;
            AlgebraElement::abelian(Matrix::identity(n, n) * v[0], tag)
        }
        (FamilyKind::LorentzAn, AlgebraParams::Abelian(v)) => {
            check_len(v, 2)?;
            AlgebraElement::abelian(lorentz_h(n, v[0], v[1]), tag)
        }
        (FamilyKind::TriangularQ, AlgebraParams::Abelian(v)) => {
            check_len(v, n)?;
            AlgebraElement::abelian(Matrix::from_diagonal(&Vector::from_column_slice(v)), tag)
        }
        (FamilyKind::Sl2Lower, AlgebraParams::Abelian(v)) => {
            check_len(v, 1)?;
            AlgebraElement::abelian(Matrix::from_row_slice(2, 2, &[-v[0], 0.0, 0.0, v[0]]), tag)
        }
        (FamilyKind::LorentzAn, AlgebraParams::Nilpotent(x)) => {
            check_len(x, n - 1)?;
            AlgebraElement::nilpotent(lorentz_x(x), tag)
        }
        (FamilyKind::TriangularQ, AlgebraParams::Nilpotent(x)) => {
            AlgebraElement::nilpotent(strict_upper(n, x)?, tag)
        }
        (FamilyKind::Sl2Lower, AlgebraParams::Nilpotent(x)) => {
            check_len(x, 1)?;
            AlgebraElement::nilpotent(Matrix::from_row_slice(2, 2, &[0.0, -x[0], 0.0, 0.0]), tag)
        }
        (FamilyKind::Similitude, AlgebraParams::Nilpotent(_)) => Err(Error::Unsupported(
            "similitude family has no nilpotent part".into(),
        )),
    }
}

/// Closed-form exponential onto a family element.
pub fn family_exp(spec: &FamilySpec, p: &AlgebraParams) -> Result<GroupElement> {
    spec.validate()?;
    let n = spec.n;
    match (spec.kind, p) {
        (FamilyKind::Similitude, AlgebraParams::Abelian(v)) => {
            check_len(v, 1)?;
            similitude(spec, v[0].exp(), Matrix::identity(n, n))
        }
        (FamilyKind::LorentzAn, AlgebraParams::Abelian(v)) => {
            check_len(v, 2)?;
            lorentz(spec, v[0].exp(), v[1], vec![0.0; n - 1])
        }
        (FamilyKind::LorentzAn, AlgebraParams::Nilpotent(x)) => {
            check_len(x, n - 1)?;
            lorentz(spec, 1.0, 0.0, x.clone())
        }
        (FamilyKind::TriangularQ, AlgebraParams::Abelian(v)) => {
            check_len(v, n)?;
            triangular(spec, v.clone(), Matrix::identity(n, n))
        }
        (FamilyKind::TriangularQ, AlgebraParams::Nilpotent(x)) => {
            let u = expm(&strict_upper(n, x)?);
            triangular(spec, vec![0.0; n], clean_unit_upper(u))
        }
        (FamilyKind::Sl2Lower, AlgebraParams::Abelian(v)) => {
            check_len(v, 1)?;
            sl2(spec, v[0].exp(), 0.0)
        }
        (FamilyKind::Sl2Lower, AlgebraParams::Nilpotent(x)) => {
            check_len(x, 1)?;
            sl2(spec, 1.0, x[0])
        }
        (FamilyKind::Similitude, AlgebraParams::Nilpotent(_)) => Err(Error::Unsupported(
            "similitude family has no nilpotent part".into(),
        )),
    }
}

/// Forces exact zeros below and ones on the diagonal.
fn clean_unit_upper(mut u: Matrix) -> Matrix {
    let n = u.nrows();
    for i in 0..n {
        for j in 0..=i {
            u[(i, j)] = if i == j { 1.0 } else { 0.0 };
        }
    }
    u
}

/// Frobenius residual of `a n(x) a^-1 - n(e^-t x)`.
pub fn conjugation_check(spec: &FamilySpec, lambda: f64, t: f64, x: &[f64]) -> Result<f64> {
    if spec.kind != FamilyKind::LorentzAn {
        return Err(Error::WrongFamily {
            expected: FamilyTag::LorentzAn.to_string(),
            found: spec.kind.tag().to_string(),
        });
    }
    positive("lambda", lambda)?;
    check_len(x, spec.n - 1)?;
    let a = lorentz_a(spec.n, lambda, t);
    let a_inv = lorentz_a(spec.n, 1.0 / lambda, -t);
    let lhs = &a * lorentz_n(x) * a_inv;
    let f = (-t).exp();
    let scaled: Vec<f64> = x.iter().map(|v| f * v).collect();
    Ok((lhs - lorentz_n(&scaled)).norm())
}

/// Coordinates of an element: normalised abelian exponents (the lattice sits
/// at integers), nilpotent exponential coordinates and the compact factor.
#[derive(Clone, Debug, PartialEq)]
pub struct Coords {
    pub a: Vec<f64>,
    pub n: Vec<f64>,
    pub compact: Compact,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Compact {
    Identity,
    Rotation(Matrix),
    /// The central sign of the sl2 family.
    Sign(f64),
}

impl Compact {
    /// Distance from the identity of the compact factor.
    pub fn distance_from_identity(&self) -> f64 {
        match self {
            Compact::Identity => 0.0,
            Compact::Rotation(r) => (r - Matrix::identity(r.nrows(), r.ncols())).amax(),
            Compact::Sign(s) => (s - 1.0).abs(),
        }
    }
}

pub fn coords(spec: &FamilySpec, h: &GroupElement) -> Result<Coords> {
    expect_kind(spec, h.params())?;
    Ok(match h.params() {
        Params::Similitude { scale, rotation } => Coords {
            a: vec![scale.ln() / spec.base.ln()],
            n: Vec::new(),
            compact: Compact::Rotation(rotation.clone()),
        },
        Params::LorentzAn { lambda, t, x } => Coords {
            a: vec![lambda.ln(), *t],
            n: x.clone(),
            compact: Compact::Identity,
        },
        Params::TriangularQ {
            log_diag,
            unipotent,
        } => Coords {
            a: log_diag.clone(),
            n: strict_upper_entries(&log_unipotent(unipotent)?),
            compact: Compact::Identity,
        },
        Params::Sl2Lower { a, u } => Coords {
            a: vec![a.abs().ln()],
            n: vec![*u],
            compact: Compact::Sign(a.signum()),
        },
        Params::Generic => unreachable!(),
    })
}

pub fn from_coords(spec: &FamilySpec, c: &Coords) -> Result<GroupElement> {
    check_len(&c.a, spec.abelian_rank())?;
    check_len(&c.n, spec.nilpotent_dim())?;
    match spec.kind {
        FamilyKind::Similitude => {
            let rot = match &c.compact {
                Compact::Rotation(r) => r.clone(),
                _ => Matrix::identity(spec.n, spec.n),
            };
            similitude(spec, spec.base.powf(c.a[0]), rot)
        }
        FamilyKind::LorentzAn => lorentz(spec, c.a[0].exp(), c.a[1], c.n.clone()),
        FamilyKind::TriangularQ => {
            let u = clean_unit_upper(expm(&strict_upper(spec.n, &c.n)?));
            triangular(spec, c.a.clone(), u)
        }
        FamilyKind::Sl2Lower => {
            let sign = match c.compact {
                Compact::Sign(s) if s < 0.0 => -1.0,
                _ => 1.0,
            };
            sl2(spec, sign * c.a[0].exp(), c.n[0])
        }
    }
}

/// Frobenius norm of the logarithm of the nilpotent factor, i.e.
/// `sqrt(Tr(X X^T))`.
pub fn nilpotent_log_norm(spec: &FamilySpec, n_coords: &[f64]) -> f64 {
    let e: f64 = n_coords.iter().map(|v| v * v).sum::<f64>().sqrt();
    match spec.kind {
        FamilyKind::LorentzAn => 2.0 * e,
        _ => e,
    }
}

/// Maps a vector of Frobenius norm `r` in 𝔫 (flat log entries) to
/// nilpotent coordinates.
pub fn nilpotent_coords_from_log(spec: &FamilySpec, flat: &[f64]) -> Vec<f64> {
    match spec.kind {
        FamilyKind::LorentzAn => flat.iter().map(|v| 0.5 * v).collect(),
        _ => flat.to_vec(),
    }
}

/// Largest factor by which `Ad(a)` stretches the Frobenius norm on 𝔫, over
/// normalised abelian coordinates with `|a_j| <= delta`.
pub fn adjoint_growth(spec: &FamilySpec, delta: f64) -> f64 {
    match spec.kind {
        FamilyKind::Similitude => 1.0,
        FamilyKind::LorentzAn => delta.exp(),
        FamilyKind::TriangularQ => {
            if spec.n > 1 {
                (2.0 * delta).exp()
            } else {
                1.0
            }
        }
        FamilyKind::Sl2Lower => (2.0 * delta).exp(),
    }
}

/// Exact `Ad(a)` growth for a specific abelian coordinate vector.
pub fn adjoint_growth_at(spec: &FamilySpec, a: &[f64]) -> f64 {
    match spec.kind {
        FamilyKind::Similitude => 1.0,
        FamilyKind::LorentzAn => a[1].abs().exp(),
        FamilyKind::TriangularQ => {
            let mut g: f64 = 1.0;
            for i in 0..a.len() {
                for j in (i + 1)..a.len() {
                    g = g.max((a[i] - a[j]).exp());
                }
            }
            g
        }
        FamilyKind::Sl2Lower => (-2.0 * a[0]).exp(),
    }
}

/// Nilpotent parameter whose integrality defines the lattice:
/// `x` for Lorentz, `U - I` strict entries for triangular, `u` for sl2.
pub fn lattice_nilpotent_param(h: &GroupElement) -> Vec<f64> {
    match h.params() {
        Params::LorentzAn { x, .. } => x.clone(),
        Params::TriangularQ { unipotent, .. } => strict_upper_entries(unipotent),
        Params::Sl2Lower { u, .. } => vec![*u],
        _ => Vec::new(),
    }
}

/// Finite box of lattice indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeWindow {
    pub a_range: Vec<(i64, i64)>,
    pub n_range: Vec<(i64, i64)>,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_LATTICE_CAP
}

impl LatticeWindow {
    pub fn new(a_range: Vec<(i64, i64)>, n_range: Vec<(i64, i64)>) -> Self {
        LatticeWindow {
            a_range,
            n_range,
            cap: DEFAULT_LATTICE_CAP,
        }
    }

    /// The symmetric box `|m_j| <= ka`, `|k_i| <= kn`.
    pub fn symmetric(spec: &FamilySpec, ka: i64, kn: i64) -> Self {
        LatticeWindow::new(
            vec![(-ka, ka); spec.abelian_rank()],
            vec![(-kn, kn); spec.nilpotent_dim()],
        )
    }

    pub fn validate(&self, spec: &FamilySpec) -> Result<()> {
        check_len_ranges(&self.a_range, spec.abelian_rank(), "a_range")?;
        check_len_ranges(&self.n_range, spec.nilpotent_dim(), "n_range")?;
        let count = self.count(spec);
        if count > self.cap as u128 {
            return Err(Error::WindowOverflow {
                requested: count,
                cap: self.cap,
            });
        }
        Ok(())
    }

    pub fn count(&self, spec: &FamilySpec) -> u128 {
        let size = |r: &(i64, i64)| (r.1 - r.0 + 1).max(0) as u128;
        let rot = if spec.kind == FamilyKind::Similitude {
            spec.rotations.len() as u128
        } else {
            1
        };
        self.a_range
            .iter()
            .chain(&self.n_range)
            .fold(rot, |acc, r| acc.saturating_mul(size(r)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.a_range.iter().chain(&self.n_range).all(|&(lo, hi)| lo == -hi)
    }
}

fn check_len_ranges(r: &[(i64, i64)], want: usize, name: &str) -> Result<()> {
    if r.len() != want {
        return Err(Error::InvalidParameter(format!(
            "{name} has {} axes, family needs {want}",
            r.len()
        )));
    }
    if let Some(bad) = r.iter().find(|(lo, hi)| lo > hi) {
        return Err(Error::InvalidParameter(format!("{name} axis {bad:?} is empty")));
    }
    Ok(())
}

/// One enumerated lattice element with its integer indices.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticePoint {
    pub a: Vec<i64>,
    pub n: Vec<i64>,
    pub rotation: usize,
    pub element: GroupElement,
}

fn box_points(ranges: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &(lo, hi) in ranges {
        let mut next = Vec::with_capacity(out.len() * (hi - lo + 1) as usize);
        for p in &out {
            for k in lo..=hi {
                let mut q = p.clone();
                q.push(k);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// `a(m)` for integer exponents.
pub fn lattice_a(spec: &FamilySpec, m: &[i64], rotation: usize) -> Result<GroupElement> {
    let mf: Vec<f64> = m.iter().map(|&v| v as f64).collect();
    match spec.kind {
        FamilyKind::Similitude => {
            let rot = spec
                .rotations
                .get(rotation)
                .ok_or_else(|| Error::IndexOutsideWindow(format!("rotation {rotation}")))?;
            similitude(spec, spec.base.powi(m[0] as i32), rot.clone())
        }
        FamilyKind::LorentzAn => lorentz(spec, mf[0].exp(), mf[1], vec![0.0; spec.n - 1]),
        FamilyKind::TriangularQ => triangular(spec, mf, Matrix::identity(spec.n, spec.n)),
        FamilyKind::Sl2Lower => sl2(spec, mf[0].exp(), 0.0),
    }
}

/// The integer nilpotent lattice element indexed by `k`.
pub fn lattice_n(spec: &FamilySpec, k: &[i64]) -> Result<GroupElement> {
    let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
    match spec.kind {
        FamilyKind::Similitude => similitude(spec, 1.0, Matrix::identity(spec.n, spec.n)),
        FamilyKind::LorentzAn => lorentz(spec, 1.0, 0.0, kf),
        FamilyKind::TriangularQ => {
            let u = strict_upper(spec.n, &kf)? + Matrix::identity(spec.n, spec.n);
            triangular(spec, vec![0.0; spec.n], u)
        }
        FamilyKind::Sl2Lower => sl2(spec, 1.0, kf[0]),
    }
}

/// All products `a(m) n(k)` in the window, in lexicographic index order.
pub fn lattice_points(spec: &FamilySpec, window: &LatticeWindow) -> Result<Vec<LatticePoint>> {
    spec.validate()?;
    window.validate(spec)?;
    let rotations = if spec.kind == FamilyKind::Similitude {
        spec.rotations.len()
    } else {
        1
    };
    let a_pts = box_points(&window.a_range);
    let n_pts = box_points(&window.n_range);
    let mut out = Vec::with_capacity(a_pts.len() * n_pts.len() * rotations);
    for m in &a_pts {
        for r in 0..rotations {
            let a = lattice_a(spec, m, r)?;
            for k in &n_pts {
                let element = a.mul(&lattice_n(spec, k)?)?;
                out.push(LatticePoint {
                    a: m.clone(),
                    n: k.clone(),
                    rotation: r,
                    element,
                });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyLattice);
    }
    Ok(out)
}

pub fn enumerate_lattice(spec: &FamilySpec, window: &LatticeWindow) -> Result<Vec<GroupElement>> {
    Ok(lattice_points(spec, window)?
        .into_iter()
        .map(|p| p.element)
        .collect())
}

/// Square matrix from row-major data; test and scenario helper.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Malformed("matrix rows must form a square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// A random rotation in SO(n) (QR of a Gaussian matrix, sign fixed).
pub fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    if n == 1 {
        return Matrix::identity(1, 1);
    }
    let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    if q.determinant() < 0.0 {
        let mut col = q.column_mut(0);
        col *= -1.0;
    }
    q
}

/// Random family element with every coordinate drawn uniformly from
/// `[-bound, bound]` (abelian coordinates are normalised exponents).
pub fn random_element<R: Rng + ?Sized>(
    spec: &FamilySpec,
    rng: &mut R,
    bound: f64,
) -> Result<GroupElement> {
    let mut u = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.random_range(-bound..=bound)).collect() };
    let a = u(spec.abelian_rank());
    let n = u(spec.nilpotent_dim());
    let compact = match spec.kind {
        FamilyKind::Similitude => Compact::Rotation(random_rotation(spec.n, rng)),
        FamilyKind::Sl2Lower => Compact::Sign(if rng.random_bool(0.5) { 1.0 } else { -1.0 }),
        _ => Compact::Identity,
    };
    from_coords(spec, &Coords { a, n, compact })
}
