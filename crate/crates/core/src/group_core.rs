//! Matrix group elements, the contragredient involution and the affine group.
//!
//! A [`GroupElement`] is an invertible real matrix together with the family it
//! was built from and the parameters that built it. Keeping the parameters
//! lets lattice bookkeeping (which integer coordinates an element has) work on
//! exact parameter arithmetic instead of factoring matrices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_families;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative invertibility threshold: `|det| > INVERTIBILITY_TOL * scale^n`.
pub const INVERTIBILITY_TOL: f64 = 1e-12;

/// Which closed-form family an element (or algebra element) belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Generic,
    Similitude,
    LorentzAn,
    TriangularQ,
    Sl2Lower,
}

impl std::fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            FamilyTag::Generic => "generic",
            FamilyTag::Similitude => "similitude",
            FamilyTag::LorentzAn => "lorentz_an",
            FamilyTag::TriangularQ => "triangular_q",
            FamilyTag::Sl2Lower => "sl2_lower",
        };
        f.write_str(name)
    }
}

/// Defining parameters of a family element.
#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Generic,
    /// `scale * rotation`, `scale > 0`, `rotation` in SO(n).
    Similitude { scale: f64, rotation: Matrix },
    /// `a(lambda, t) n(x)` acting on R^{n+1}, `x` in R^{n-1}.
    LorentzAn { lambda: f64, t: f64, x: Vec<f64> },
    /// `d(exp(log_diag)) * unipotent`, `unipotent` unit upper triangular.
    TriangularQ { log_diag: Vec<f64>, unipotent: Matrix },
    /// theta of `diag(a, 1/a) [[1, 0], [u, 1]]`, so the twisted action of the
    /// element is the natural action of that lower triangular matrix.
    Sl2Lower { a: f64, u: f64 },
}

impl Params {
    pub fn tag(&self) -> FamilyTag {
        match self {
            Params::Generic => FamilyTag::Generic,
            Params::Similitude { .. } => FamilyTag::Similitude,
            Params::LorentzAn { .. } => FamilyTag::LorentzAn,
            Params::TriangularQ { .. } => FamilyTag::TriangularQ,
            Params::Sl2Lower { .. } => FamilyTag::Sl2Lower,
        }
    }
}

/// Errors unless `|det m| > INVERTIBILITY_TOL * (max |m_ij|)^n`.
pub fn check_invertible(m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let n = m.nrows() as i32;
    let scale = m.amax();
    let threshold = INVERTIBILITY_TOL * scale.powi(n);
    let det = m.determinant();
    if !det.is_finite() || det.abs() <= threshold || scale == 0.0 {
        return Err(Error::Singular { det, threshold });
    }
    Ok(())
}

fn invert(m: &Matrix) -> Result<Matrix> {
    check_invertible(m)?;
    m.clone().try_inverse().ok_or(Error::Singular {
        det: m.determinant(),
        threshold: INVERTIBILITY_TOL,
    })
}

/// One point of a closed subgroup H of GL(n, R).
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    matrix: Matrix,
    params: Params,
}

impl GroupElement {
    /// An explicit matrix with no family structure.
    pub fn generic(matrix: Matrix) -> Result<Self> {
        check_invertible(&matrix)?;
        Ok(GroupElement {
            matrix,
            params: Params::Generic,
        })
    }

    pub fn identity(n: usize) -> Self {
        GroupElement {
            matrix: Matrix::identity(n, n),
            params: Params::Generic,
        }
    }

    /// Used by the family constructors, which have already synthesized the
    /// matrix from `params`.
    pub(crate) fn from_parts(matrix: Matrix, params: Params) -> Self {
        GroupElement { matrix, params }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn family(&self) -> FamilyTag {
        self.params.tag()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Group product `self * other`. Family elements multiply through the
    /// family parameter law; mixed products fall back to generic matrices.
    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if let Some(params) = group_families::compose_params(&self.params, &other.params) {
            let matrix = group_families::synthesize(&params);
            return Ok(GroupElement { matrix, params });
        }
        Ok(GroupElement {
            matrix: &self.matrix * &other.matrix,
            params: Params::Generic,
        })
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        if let Some(params) = group_families::invert_params(&self.params) {
            let matrix = group_families::synthesize(&params);
            return Ok(GroupElement { matrix, params });
        }
        Ok(GroupElement {
            matrix: invert(&self.matrix)?,
            params: Params::Generic,
        })
    }

    /// Forget the family structure.
    pub fn to_generic(&self) -> GroupElement {
        GroupElement {
            matrix: self.matrix.clone(),
            params: Params::Generic,
        }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let n = self.dim();
        (&self.matrix - Matrix::identity(n, n)).amax() <= tol
    }
}

/// The contragredient involution `theta(h) = (h^-1)^T`.
pub fn theta(h: &GroupElement) -> Result<GroupElement> {
    let inv = invert(h.matrix())?;
    Ok(GroupElement {
        matrix: inv.transpose(),
        params: Params::Generic,
    })
}

/// The twisted action `h . v = (h^-1)^T v`.
pub fn twisted_apply(h: &GroupElement, v: &Vector) -> Result<Vector> {
    if v.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: v.len(),
        });
    }
    Ok(theta(h)?.matrix() * v)
}

/// A point `(x, a)` of the affine group R^n x| H acting by `v -> a v + x`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePair {
    pub x: Vector,
    pub a: GroupElement,
}

impl AffinePair {
    pub fn new(x: Vector, a: GroupElement) -> Result<Self> {
        if x.len() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: x.len(),
            });
        }
        Ok(AffinePair { x, a })
    }

    pub fn identity(n: usize) -> Self {
        AffinePair {
            x: Vector::zeros(n),
            a: GroupElement::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

/// `(x, a)(y, b) = (a y + x, a b)`.
pub fn affine_compose(p: &AffinePair, q: &AffinePair) -> Result<AffinePair> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok(AffinePair {
        x: p.a.matrix() * &q.x + &p.x,
        a: p.a.mul(&q.a)?,
    })
}

/// `(x, a)^-1 = (-a^-1 x, a^-1)`.
pub fn affine_inverse(p: &AffinePair) -> Result<AffinePair> {
    let a_inv = p.a.inverse()?;
    Ok(AffinePair {
        x: -(a_inv.matrix() * &p.x),
        a: a_inv,
    })
}

/// Which subalgebra an [`AlgebraElement`] is meant to lie in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgebraTag {
    Generic,
    /// The abelian part (𝔞) of a family.
    Abelian(FamilyTag),
    /// The nilpotent part (𝔫) of a family.
    Nilpotent(FamilyTag),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    matrix: Matrix,
    tag: AlgebraTag,
}

impl AlgebraElement {
    pub fn generic(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(AlgebraElement {
            matrix,
            tag: AlgebraTag::Generic,
        })
    }

    /// Tags `matrix` as an element of 𝔫; rejects non-nilpotent input.
    pub fn nilpotent(matrix: Matrix, family: FamilyTag) -> Result<Self> {
        if !is_nilpotent(&matrix) {
            return Err(Error::InvalidParameter(
                "matrix tagged as nilpotent has nonzero n-th power".into(),
            ));
        }
        Ok(AlgebraElement {
            matrix,
            tag: AlgebraTag::Nilpotent(family),
        })
    }

    pub fn abelian(matrix: Matrix, family: FamilyTag) -> Result<Self> {
        let mut el = AlgebraElement::generic(matrix)?;
        el.tag = AlgebraTag::Abelian(family);
        Ok(el)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn tag(&self) -> AlgebraTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// True when `m^n` vanishes (entries below `1e-12 * scale^n`).
pub fn is_nilpotent(m: &Matrix) -> bool {
    let n = m.nrows();
    if n == 0 {
        return true;
    }
    let scale = m.amax().max(1.0);
    let mut power = m.clone();
    for _ in 1..n {
        power = &power * m;
    }
    power.amax() <= 1e-12 * scale.powi(n as i32)
}

/// Matrix exponential of a raw square matrix.
///
/// Nilpotent input uses the finite series through `X^(n-1)/(n-1)!`; anything
/// else uses scaling and squaring around a Taylor polynomial whose degree is
/// picked from the scaled norm.
pub fn expm(x: &Matrix) -> Matrix {
    let n = x.nrows();
    let id = Matrix::identity(n, n);
    if is_nilpotent(x) {
        let mut sum = id.clone();
        let mut term = id;
        for j in 1..n {
            term = &term * x / j as f64;
            sum += &term;
        }
        return sum;
    }
    let norm = x.row_sum().amax().max(x.column_sum().amax());
    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm > 0.5 {
        scaled_norm /= 2.0;
        squarings += 1;
    }
    let scaled = x / 2f64.powi(squarings as i32);
    let mut sum = id.clone();
    let mut term = id;
    let mut bound = 1.0;
    for j in 1..=30 {
        term = &term * &scaled / j as f64;
        sum += &term;
        bound *= scaled_norm / j as f64;
        if bound < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(X)` as a generic group element.
pub fn matrix_exp(x: &AlgebraElement) -> GroupElement {
    GroupElement {
        matrix: expm(x.matrix()),
        params: Params::Generic,
    }
}

/// Logarithm of a unipotent matrix `U = I + N` by the finite series
/// `sum_{j<n} (-1)^(j+1) N^j / j`.
pub fn log_unipotent(u: &Matrix) -> Result<Matrix> {
    let n = u.nrows();
    let nil = u - Matrix::identity(n, n);
    if !is_nilpotent(&nil) {
        return Err(Error::InvalidParameter("matrix is not unipotent".into()));
    }
    let mut sum = Matrix::zeros(n, n);
    let mut power = nil.clone();
    for j in 1..n.max(1) {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        sum += &power * (sign / j as f64);
        power = &power * &nil;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, data.len() / rows, data)
    }

    fn g(rows: usize, data: &[f64]) -> GroupElement {
        GroupElement::generic(m(rows, data)).unwrap()
    }

    #[test]
    fn theta_examples() {
        let id = GroupElement::identity(3);
        assert!(theta(&id).unwrap().is_identity(0.0));

        let d = g(2, &[2.0, 0.0, 0.0, 0.5]);
        let t = theta(&d).unwrap();
        assert!((t.matrix() - m(2, &[0.5, 0.0, 0.0, 2.0])).amax() < 1e-15);

        let shear = g(2, &[1.0, 1.0, 0.0, 1.0]);
        let t = theta(&shear).unwrap();
        assert!((t.matrix() - m(2, &[1.0, 0.0, -1.0, 1.0])).amax() < 1e-15);
    }

    #[test]
    fn singular_matrices_are_rejected() {
        let err = GroupElement::generic(m(2, &[1.0, 2.0, 2.0, 4.0])).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
        let tiny = GroupElement::generic(m(2, &[1e-7, 0.0, 0.0, 1e-7])).unwrap();
        assert!(theta(&tiny).is_ok(), "scale-relative threshold");
    }

    #[test]
    fn twisted_apply_examples() {
        let v = Vector::from_vec(vec![0.3, -1.2]);
        assert_eq!(twisted_apply(&GroupElement::identity(2), &v).unwrap(), v);
        let dil = g(2, &[2.0, 0.0, 0.0, 2.0]);
        let out = twisted_apply(&dil, &Vector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!((out - Vector::from_vec(vec![0.5, 0.0])).amax() < 1e-15);
        let err = twisted_apply(&dil, &Vector::zeros(3)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 3 });
    }

    #[test]
    fn affine_examples() {
        let b = g(2, &[0.0, -1.0, 3.0, 0.5]);
        let q = AffinePair::new(Vector::from_vec(vec![0.2, 0.7]), b.clone()).unwrap();
        let left = affine_compose(&AffinePair::identity(2), &q).unwrap();
        assert!((left.x - &q.x).amax() < 1e-15);
        assert!((left.a.matrix() - b.matrix()).amax() < 1e-15);

        let p = AffinePair::new(Vector::from_vec(vec![1.0, 0.0]), g(2, &[2.0, 0.0, 0.0, 1.0])).unwrap();
        let q = AffinePair::new(Vector::from_vec(vec![1.0, 1.0]), GroupElement::identity(2)).unwrap();
        let pq = affine_compose(&p, &q).unwrap();
        assert!((pq.x - Vector::from_vec(vec![3.0, 1.0])).amax() < 1e-15);
        assert!((pq.a.matrix() - m(2, &[2.0, 0.0, 0.0, 1.0])).amax() < 1e-15);

        let p = AffinePair::new(Vector::from_vec(vec![2.0, 0.0]), g(2, &[2.0, 0.0, 0.0, 1.0])).unwrap();
        let inv = affine_inverse(&p).unwrap();
        assert!((&inv.x - Vector::from_vec(vec![-1.0, 0.0])).amax() < 1e-15);
        assert!((inv.a.matrix() - m(2, &[0.5, 0.0, 0.0, 1.0])).amax() < 1e-15);
        let back = affine_inverse(&inv).unwrap();
        assert!((back.x - &p.x).amax() < 1e-12);
        assert!((back.a.matrix() - p.a.matrix()).amax() < 1e-12);

        let id_inv = affine_inverse(&AffinePair::identity(3)).unwrap();
        assert!(id_inv.x.amax() == 0.0 && id_inv.a.is_identity(0.0));
    }

    #[test]
    fn exp_of_zero_and_nilpotent() {
        let zero = AlgebraElement::generic(Matrix::zeros(3, 3)).unwrap();
        assert!(matrix_exp(&zero).is_identity(0.0));

        let x = m(3, &[0.0, 1.0, 2.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0]);
        let e = expm(&x);
        // I + X + X^2/2, X^2 = 3 E_13
        let expected = m(3, &[1.0, 1.0, 3.5, 0.0, 1.0, 3.0, 0.0, 0.0, 1.0]);
        assert!((e - expected).amax() == 0.0);
        assert!(AlgebraElement::nilpotent(m(2, &[1.0, 0.0, 0.0, 0.0]), FamilyTag::Generic).is_err());
    }

    #[test]
    fn exp_matches_closed_forms() {
        let rot = m(2, &[0.0, -1.0, 1.0, 0.0]) * 0.7;
        let e = expm(&rot);
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        assert!((e - m(2, &[c, -s, s, c])).amax() < 1e-14);
        let big = Matrix::from_diagonal(&Vector::from_vec(vec![5.0, -3.0]));
        let e = expm(&big);
        assert!((e[(0, 0)] / 5f64.exp() - 1.0).abs() < 1e-13);
        assert!((e[(1, 1)] / (-3f64).exp() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn unipotent_log_inverts_exp() {
        let x = m(3, &[0.0, 0.4, -1.1, 0.0, 0.0, 2.5, 0.0, 0.0, 0.0]);
        let back = log_unipotent(&expm(&x)).unwrap();
        assert!((back - x).amax() < 1e-14);
    }

    fn invertible(n: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-2.0f64..2.0, n * n).prop_filter_map("near singular", move |v| {
            let mut mat = Matrix::from_vec(n, n, v);
            mat += Matrix::identity(n, n) * 2.5;
            (mat.determinant().abs() > 0.1).then_some(mat)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn theta_is_an_involutive_automorphism(a in invertible(3), b in invertible(3)) {
            let h = GroupElement::generic(a).unwrap();
            let k = GroupElement::generic(b).unwrap();
            let tt = theta(&theta(&h).unwrap()).unwrap();
            prop_assert!((tt.matrix() - h.matrix()).amax() < 1e-10);
            let lhs = theta(&h.mul(&k).unwrap()).unwrap();
            let rhs = theta(&h).unwrap().mul(&theta(&k).unwrap()).unwrap();
            prop_assert!((lhs.matrix() - rhs.matrix()).amax() < 1e-10);
        }

        #[test]
        fn twisted_action_is_a_left_action(a in invertible(3), b in invertible(3),
                                           v in proptest::collection::vec(-3.0f64..3.0, 3)) {
            let h = GroupElement::generic(a).unwrap();
            let k = GroupElement::generic(b).unwrap();
            let v = Vector::from_vec(v);
            let lhs = twisted_apply(&h.mul(&k).unwrap(), &v).unwrap();
            let rhs = twisted_apply(&h, &twisted_apply(&k, &v).unwrap()).unwrap();
            prop_assert!((lhs - rhs).amax() < 1e-10);
        }

        #[test]
        fn affine_compose_is_associative(a in invertible(2), b in invertible(2), c in invertible(2),
                                         xs in proptest::collection::vec(-3.0f64..3.0, 6)) {
            let pair = |m: Matrix, i: usize| AffinePair::new(
                Vector::from_vec(xs[i..i + 2].to_vec()), GroupElement::generic(m).unwrap()).unwrap();
            let (p, q, r) = (pair(a, 0), pair(b, 2), pair(c, 4));
            let lhs = affine_compose(&affine_compose(&p, &q).unwrap(), &r).unwrap();
            let rhs = affine_compose(&p, &affine_compose(&q, &r).unwrap()).unwrap();
            prop_assert!((&lhs.x - &rhs.x).amax() < 1e-10);
            prop_assert!((lhs.a.matrix() - rhs.a.matrix()).amax() < 1e-10);
            let unit = affine_compose(&p, &affine_inverse(&p).unwrap()).unwrap();
            prop_assert!(unit.x.amax() < 1e-12 && unit.a.is_identity(1e-12));
        }

        #[test]
        fn nilpotent_exp_has_exact_inverse(entries in proptest::collection::vec(-3.0f64..3.0, 6)) {
            let mut x = Matrix::zeros(4, 4);
            let mut k = 0;
            for i in 0..4 {
                for j in (i + 1)..4 {
                    x[(i, j)] = entries[k];
                    k += 1;
                }
            }
            let prod = expm(&x) * expm(&(-&x));
            prop_assert!((prod - Matrix::identity(4, 4)).amax() < 1e-12);
        }
    }
}
