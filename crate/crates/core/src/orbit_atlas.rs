//! Open orbits of each family, the orbit map `kappa(h) = h . omega`, its
//! inverse section on free orbits, and stabiliser tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_core::{twisted_apply, GroupElement, Matrix, Vector};
use crate::group_families::{self as fam, Compact, Coords, FamilyKind, FamilySpec};

/// Relative tolerance for the light cone and the other orbit boundaries.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Relative eigenvalue threshold below which a symmetric matrix is singular.
pub const SINGULAR_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-10;

/// `beta(v, w) = v_1 w_1 - sum_{j >= 2} v_j w_j`.
pub fn beta(v: &Vector, w: &Vector) -> f64 {
    v[0] * w[0] - v.iter().zip(w.iter()).skip(1).map(|(a, b)| a * b).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LorentzClass {
    Orbit(u8),
    Boundary,
}

/// Orbits 1..4 of the Lorentz AN action on R^{n+1}.
pub fn classify_lorentz(v: &Vector) -> LorentzClass {
    let d = v.len();
    let norm2 = v.norm_squared();
    if d < 2 || norm2 == 0.0 || !norm2.is_finite() {
        return LorentzClass::Boundary;
    }
    let b = beta(v, v);
    if b.abs() <= BOUNDARY_TOL * norm2 {
        return LorentzClass::Boundary;
    }
    if b > 0.0 {
        return LorentzClass::Orbit(if v[0] > 0.0 { 1 } else { 2 });
    }
    let gap = v[0] - v[d - 1];
    if gap.abs() <= BOUNDARY_TOL * norm2.sqrt() {
        return LorentzClass::Boundary;
    }
    LorentzClass::Orbit(if gap < 0.0 { 3 } else { 4 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signature {
    Nondegenerate { p: usize, q: usize },
    Singular,
}

fn check_symmetric(x: &Matrix) -> Result<()> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: x.ncols(),
        });
    }
    let dev = (x - x.transpose()).amax();
    if dev > SYMMETRY_TOL * x.amax().max(1.0) {
        return Err(Error::Asymmetric(dev));
    }
    Ok(())
}

/// Signature of a symmetric matrix by a symmetric eigensolver.
pub fn classify_symmetric(x: &Matrix) -> Result<Signature> {
    check_symmetric(x)?;
    let sym = (x + x.transpose()) * 0.5;
    let scale = sym.norm();
    if scale == 0.0 {
        return Ok(Signature::Singular);
    }
    let eig = sym.symmetric_eigen();
    let mut p = 0;
    let mut q = 0;
    for &l in eig.eigenvalues.iter() {
        if l.abs() < SINGULAR_TOL * scale {
            return Ok(Signature::Singular);
        }
        if l > 0.0 {
            p += 1;
        } else {
            q += 1;
        }
    }
    Ok(Signature::Nondegenerate { p, q })
}

/// Sign pattern of the open upper-triangular orbit through `x`: the signs of
/// the ratios of consecutive trailing principal minors, i.e. of the pivots of
/// the signed reverse Cholesky factorization. `None` when a pivot vanishes.
pub fn q_orbit_pattern(x: &Matrix) -> Result<Option<Vec<i8>>> {
    check_symmetric(x)?;
    if x.amax() == 0.0 {
        return Ok(None);
    }
    match signed_reverse_cholesky(x) {
        Ok((_, signs)) => Ok(Some(signs)),
        Err(Error::ProbeOutsideOrbit { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Row-wise upper triangle of a symmetric matrix, off-diagonal entries
/// scaled by sqrt 2 so the Euclidean product matches `Tr(XY)`.
pub fn flatten_sym(x: &Matrix) -> Vector {
    let n = x.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let f = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
            out.push(f * 0.5 * (x[(i, j)] + x[(j, i)]));
        }
    }
    Vector::from_vec(out)
}

pub fn unflatten_sym(v: &Vector, n: usize) -> Result<Matrix> {
    if v.len() != n * (n + 1) / 2 {
        return Err(Error::DimensionMismatch {
            expected: n * (n + 1) / 2,
            found: v.len(),
        });
    }
    let mut m = Matrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let val = if i == j {
                v[k]
            } else {
                v[k] / std::f64::consts::SQRT_2
            };
            m[(i, j)] = val;
            m[(j, i)] = val;
            k += 1;
        }
    }
    Ok(m)
}

pub fn sym_size(flat_len: usize) -> Option<usize> {
    (0..=flat_len).find(|n| n * (n + 1) / 2 == flat_len)
}

/// Which open orbit an [`OrbitSpec`] names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitLabel {
    /// Similitudes: the half-line `v > 0` for n = 1, `R^n \ {0}` otherwise.
    Punctured,
    Lorentz(u8),
    /// Upper triangular orbit on Sym(n) with this diagonal sign pattern.
    Symmetric(Vec<i8>),
    /// `{(x, y) : x != 0}` for the lower triangular sl2 subgroup.
    Sl2,
}

impl std::fmt::Display for OrbitLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrbitLabel::Punctured => f.write_str("punctured"),
            OrbitLabel::Lorentz(k) => write!(f, "O{k}"),
            OrbitLabel::Symmetric(s) => {
                let chars: String = s.iter().map(|&v| if v > 0 { '+' } else { '-' }).collect();
                write!(f, "sym[{chars}]")
            }
            OrbitLabel::Sl2 => f.write_str("x!=0"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Inside,
    Outside,
    Boundary,
}

/// One open orbit with its base point.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSpec {
    pub family: FamilySpec,
    pub label: OrbitLabel,
    pub base: Vector,
}

impl OrbitSpec {
    pub fn similitude(family: FamilySpec) -> Result<Self> {
        expect(&family, FamilyKind::Similitude)?;
        let mut base = Vector::zeros(family.n);
        base[0] = 1.0;
        Ok(OrbitSpec {
            family,
            label: OrbitLabel::Punctured,
            base,
        })
    }

    /// Orbit `k` in 1..4 with base `e_1, -e_1, e_{n+1}, -e_{n+1}`.
    pub fn lorentz(family: FamilySpec, k: u8) -> Result<Self> {
        expect(&family, FamilyKind::LorentzAn)?;
        let d = family.n + 1;
        let mut base = Vector::zeros(d);
        match k {
            1 => base[0] = 1.0,
            2 => base[0] = -1.0,
            3 => base[d - 1] = 1.0,
            4 => base[d - 1] = -1.0,
            _ => return Err(Error::OutOfRange(format!("lorentz orbit {k} not in 1..4"))),
        }
        Ok(OrbitSpec {
            family,
            label: OrbitLabel::Lorentz(k),
            base,
        })
    }

    /// Upper triangular orbit through `diag(signs)`.
    pub fn symmetric(family: FamilySpec, signs: Vec<i8>) -> Result<Self> {
        expect(&family, FamilyKind::TriangularQ)?;
        if signs.len() != family.n || signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!(
                "sign pattern {signs:?} does not fit n = {}",
                family.n
            )));
        }
        let d = Vector::from_iterator(signs.len(), signs.iter().map(|&s| s as f64));
        let base = flatten_sym(&Matrix::from_diagonal(&d));
        Ok(OrbitSpec {
            family,
            label: OrbitLabel::Symmetric(signs),
            base,
        })
    }

    pub fn sl2(family: FamilySpec) -> Result<Self> {
        expect(&family, FamilyKind::Sl2Lower)?;
        Ok(OrbitSpec {
            family,
            label: OrbitLabel::Sl2,
            base: Vector::from_vec(vec![1.0, 0.0]),
        })
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn membership(&self, v: &Vector) -> Membership {
        if v.len() != self.dim() || v.iter().any(|x| !x.is_finite()) {
            return Membership::Outside;
        }
        let norm = v.norm();
        match &self.label {
            OrbitLabel::Punctured => {
                if norm == 0.0 {
                    Membership::Boundary
                } else if self.family.n == 1 && v[0] < 0.0 {
                    Membership::Outside
                } else {
                    Membership::Inside
                }
            }
            OrbitLabel::Lorentz(k) => match classify_lorentz(v) {
                LorentzClass::Boundary => Membership::Boundary,
                LorentzClass::Orbit(j) if j == *k => Membership::Inside,
                LorentzClass::Orbit(_) => Membership::Outside,
            },
            OrbitLabel::Symmetric(signs) => {
                let Ok(x) = unflatten_sym(v, self.family.n) else {
                    return Membership::Outside;
                };
                match q_orbit_pattern(&x) {
                    Ok(Some(p)) if &p == signs => Membership::Inside,
                    Ok(Some(_)) => Membership::Outside,
                    _ => Membership::Boundary,
                }
            }
            OrbitLabel::Sl2 => {
                if v[0].abs() <= BOUNDARY_TOL * norm || norm == 0.0 {
                    Membership::Boundary
                } else {
                    Membership::Inside
                }
            }
        }
    }

    pub fn contains(&self, v: &Vector) -> bool {
        self.membership(v) == Membership::Inside
    }

    /// Whether the family acts freely on this orbit.
    pub fn is_free(&self) -> bool {
        !(self.family.kind == FamilyKind::Similitude && self.family.n > 2)
    }
}

fn expect(family: &FamilySpec, kind: FamilyKind) -> Result<()> {
    family.validate()?;
    if family.kind != kind {
        return Err(Error::WrongFamily {
            expected: kind.tag().to_string(),
            found: family.kind.tag().to_string(),
        });
    }
    Ok(())
}

/// The family action on its ambient space: the twisted action for the linear
/// families and `X -> h X h^T` on Sym(n) for the triangular family.
pub fn act(family: &FamilySpec, h: &GroupElement, v: &Vector) -> Result<Vector> {
    match family.kind {
        FamilyKind::TriangularQ => {
            let x = unflatten_sym(v, family.n)?;
            if h.dim() != family.n {
                return Err(Error::DimensionMismatch {
                    expected: family.n,
                    found: h.dim(),
                });
            }
            let m = h.matrix();
            Ok(flatten_sym(&(m * x * m.transpose())))
        }
        _ => twisted_apply(h, v),
    }
}

pub fn kappa(orbit: &OrbitSpec, h: &GroupElement) -> Result<Vector> {
    act(&orbit.family, h, &orbit.base)
}

pub fn stabilizer_member(orbit: &OrbitSpec, h: &GroupElement, tol: f64) -> bool {
    match kappa(orbit, h) {
        Ok(v) => (v - &orbit.base).norm() <= tol * orbit.base.norm(),
        Err(_) => false,
    }
}

/// A rotation taking `e_1` to the unit vector `u`.
pub fn rotation_to(u: &Vector) -> Matrix {
    let n = u.len();
    let mut e1 = Vector::zeros(n);
    e1[0] = 1.0;
    let w = &e1 - u;
    let ww = w.norm_squared();
    if ww < 1e-30 {
        return Matrix::identity(n, n);
    }
    if n == 1 {
        // u = -e1 has no rotation; callers exclude it
        return Matrix::identity(1, 1);
    }
    let house = Matrix::identity(n, n) - (&w * w.transpose()) * (2.0 / ww);
    let mut flip = Matrix::identity(n, n);
    flip[(1, 1)] = -1.0;
    house * flip
}

/// Signed reverse Cholesky: `x = h diag(eps) h^T` with `h` upper triangular,
/// positive diagonal.
pub fn signed_reverse_cholesky(x: &Matrix) -> Result<(Matrix, Vec<i8>)> {
    let n = x.nrows();
    // reversal turns the upper factorization into a lower one
    let xr = Matrix::from_fn(n, n, |i, j| x[(n - 1 - i, n - 1 - j)]);
    let mut l = Matrix::zeros(n, n);
    let mut eps = vec![0.0; n];
    let scale = x.amax().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let mut d = xr[(k, k)];
        for j in 0..k {
            d -= l[(k, j)] * l[(k, j)] * eps[j];
        }
        if d.abs() <= BOUNDARY_TOL * scale {
            return Err(Error::ProbeOutsideOrbit {
                point: flatten_sym(x).iter().copied().collect(),
                status: "on a singular trailing minor".into(),
            });
        }
        eps[k] = d.signum();
        let lkk = d.abs().sqrt();
        l[(k, k)] = lkk;
        for i in (k + 1)..n {
            let mut s = xr[(i, k)];
            for j in 0..k {
                s -= l[(i, j)] * l[(k, j)] * eps[j];
            }
            l[(i, k)] = s / (lkk * eps[k]);
        }
    }
    let h = Matrix::from_fn(n, n, |i, j| l[(n - 1 - i, n - 1 - j)]);
    let signs = (0..n).map(|i| eps[n - 1 - i] as i8).collect();
    Ok((h, signs))
}

/// The unique (free orbits) or a canonical (compact stabiliser) element with
/// `kappa(section(v)) = v`.
pub fn section(orbit: &OrbitSpec, v: &Vector) -> Result<GroupElement> {
    let status = orbit.membership(v);
    if status != Membership::Inside {
        return Err(Error::ProbeOutsideOrbit {
            point: v.iter().copied().collect(),
            status: format!("{status:?}").to_lowercase(),
        });
    }
    let fam_spec = &orbit.family;
    match &orbit.label {
        OrbitLabel::Punctured => {
            let r = v.norm();
            let rot = rotation_to(&(v / r));
            fam::similitude(fam_spec, 1.0 / r, rot)
        }
        OrbitLabel::Lorentz(k) => {
            let w = if *k == 2 || *k == 4 { -v } else { v.clone() };
            let d = w.len();
            let b = beta(&w, &w);
            let mid: Vec<f64> = w.iter().skip(1).take(d - 2).copied().collect();
            if *k <= 2 {
                let lambda = b.powf(-0.5);
                let t = (lambda * (w[0] - w[d - 1])).ln();
                fam::lorentz(fam_spec, lambda, t, mid.iter().map(|m| -lambda * m).collect())
            } else {
                let lambda = (-b).powf(-0.5);
                let t = (-lambda * (w[0] - w[d - 1])).ln();
                fam::lorentz(fam_spec, lambda, t, mid.iter().map(|m| lambda * m).collect())
            }
        }
        OrbitLabel::Symmetric(_) => {
            let x = unflatten_sym(v, fam_spec.n)?;
            let (h, _) = signed_reverse_cholesky(&x)?;
            let n = fam_spec.n;
            let log_diag: Vec<f64> = (0..n).map(|i| h[(i, i)].ln()).collect();
            let mut u = h.clone();
            for i in 0..n {
                let d = h[(i, i)];
                for j in 0..n {
                    u[(i, j)] = if j < i {
                        0.0
                    } else if j == i {
                        1.0
                    } else {
                        h[(i, j)] / d
                    };
                }
            }
            fam::triangular(fam_spec, log_diag, u)
        }
        OrbitLabel::Sl2 => fam::sl2(fam_spec, v[0], v[0] * v[1]),
    }
}

/// Coordinates of `section(v)`.
pub fn section_coords(orbit: &OrbitSpec, v: &Vector) -> Result<Coords> {
    fam::coords(&orbit.family, &section(orbit, v)?)
}

/// Identity-component test for the compact factor.
pub fn compact_is_identity(c: &Compact, tol: f64) -> bool {
    c.distance_from_identity() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_families::random_element;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vec(v: &[f64]) -> Vector {
        Vector::from_column_slice(v)
    }

    #[test]
    fn lorentz_examples() {
        assert_eq!(classify_lorentz(&vec(&[1.0, 0.0, 0.0])), LorentzClass::Orbit(1));
        assert_eq!(classify_lorentz(&vec(&[0.0, 0.0, 1.0])), LorentzClass::Orbit(3));
        assert_eq!(classify_lorentz(&vec(&[1.0, 1.0, 0.0])), LorentzClass::Boundary);
        assert_eq!(classify_lorentz(&vec(&[-2.0, 0.5, 0.3])), LorentzClass::Orbit(2));
        assert_eq!(classify_lorentz(&vec(&[0.0, 0.0, -1.0])), LorentzClass::Orbit(4));
        assert_eq!(classify_lorentz(&vec(&[0.4, 1.0, 0.4])), LorentzClass::Boundary);
    }

    #[test]
    fn symmetric_examples() {
        assert_eq!(
            classify_symmetric(&Matrix::identity(3, 3)).unwrap(),
            Signature::Nondegenerate { p: 3, q: 0 }
        );
        let ip = crate::root_structure::signature_matrix(3, 1).unwrap();
        assert_eq!(
            classify_symmetric(&ip).unwrap(),
            Signature::Nondegenerate { p: 1, q: 2 }
        );
        let d = Matrix::from_diagonal(&vec(&[1.0, 0.0]));
        assert_eq!(classify_symmetric(&d).unwrap(), Signature::Singular);
        let asym = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(classify_symmetric(&asym), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn lorentz_kappa_matches_displayed_formula() {
        let spec = FamilySpec::lorentz_an(3);
        let orbit = OrbitSpec::lorentz(spec.clone(), 1).unwrap();
        let (lambda, t, x) = (1.7, -0.4, vec![0.3, -1.2]);
        let a = fam::lorentz(&spec, lambda, t, vec![0.0, 0.0]).unwrap();
        let nx = fam::lorentz(&spec, 1.0, 0.0, x.clone()).unwrap();
        let got = kappa(&orbit, &nx.mul(&a).unwrap()).unwrap();
        let q = 0.5 * (x[0] * x[0] + x[1] * x[1]);
        let et = t.exp();
        let expected = vec(&[
            t.cosh() + et * q,
            -et * x[0],
            -et * x[1],
            -t.sinh() + et * q,
        ]) / lambda;
        assert!((got - expected).amax() < 1e-13);
    }

    #[test]
    fn triangular_kappa_example() {
        let spec = FamilySpec::triangular_q(2);
        let orbit = OrbitSpec::symmetric(spec.clone(), vec![1, 1]).unwrap();
        let h = fam::triangular(&spec, vec![2f64.ln(), 0.0], Matrix::identity(2, 2)).unwrap();
        let got = unflatten_sym(&kappa(&orbit, &h).unwrap(), 2).unwrap();
        assert!((got - Matrix::from_diagonal(&vec(&[4.0, 1.0]))).amax() < 1e-14);
        assert!(kappa(&orbit, &GroupElement::identity(2)).unwrap() == orbit.base);
    }

    #[test]
    fn stabilizer_examples() {
        let spec = FamilySpec::lorentz_an(2);
        let orbit = OrbitSpec::lorentz(spec.clone(), 1).unwrap();
        assert!(stabilizer_member(&orbit, &GroupElement::identity(3), 1e-12));
        for (l, t) in [(2.0, 0.0), (1.0, 0.5), (0.7, -0.1)] {
            let a = fam::lorentz(&spec, l, t, vec![0.0]).unwrap();
            assert!(!stabilizer_member(&orbit, &a, 1e-9));
        }
        let spec = FamilySpec::similitude(2);
        let orbit = OrbitSpec::similitude(spec.clone()).unwrap();
        let rot = fam::similitude(&spec, 1.0, fam::rotation2(std::f64::consts::PI)).unwrap();
        assert!(!stabilizer_member(&orbit, &rot, 1e-9));
    }

    #[test]
    fn flatten_matches_trace_product() {
        let x = Matrix::from_row_slice(3, 3, &[1.0, 2.0, -1.0, 2.0, 0.5, 3.0, -1.0, 3.0, 4.0]);
        let y = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, -2.0, 0.0, 1.0, 0.0, 1.5]);
        let tr = (&x * &y).trace();
        assert!((flatten_sym(&x).dot(&flatten_sym(&y)) - tr).abs() < 1e-13);
        assert!((unflatten_sym(&flatten_sym(&x), 3).unwrap() - x).amax() < 1e-15);
    }

    #[test]
    fn base_points_satisfy_their_predicates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let orbits = vec![
            OrbitSpec::similitude(FamilySpec::similitude(1)).unwrap(),
            OrbitSpec::similitude(FamilySpec::similitude(2)).unwrap(),
            OrbitSpec::lorentz(FamilySpec::lorentz_an(2), 1).unwrap(),
            OrbitSpec::lorentz(FamilySpec::lorentz_an(3), 2).unwrap(),
            OrbitSpec::lorentz(FamilySpec::lorentz_an(2), 3).unwrap(),
            OrbitSpec::lorentz(FamilySpec::lorentz_an(3), 4).unwrap(),
            OrbitSpec::symmetric(FamilySpec::triangular_q(3), vec![1, -1, 1]).unwrap(),
            OrbitSpec::symmetric(FamilySpec::triangular_q(2), vec![-1, -1]).unwrap(),
            OrbitSpec::sl2(FamilySpec::sl2_lower()).unwrap(),
        ];
        for orbit in &orbits {
            for _ in 0..200 {
                let h = random_element(&orbit.family, &mut rng, 1.5).unwrap();
                let v = kappa(orbit, &h).unwrap();
                assert!(orbit.contains(&v), "{} {:?}", orbit.label, v);
                // section inverts kappa
                let back = section(orbit, &v).unwrap();
                let w = kappa(orbit, &back).unwrap();
                assert!((&w - &v).amax() <= 1e-9 * v.amax().max(1.0));
                if orbit.is_free() {
                    assert!((back.matrix() - h.matrix()).amax() <= 1e-8 * h.matrix().amax().max(1.0));
                }
            }
        }
    }

    #[test]
    fn outside_points_have_no_section() {
        let orbit = OrbitSpec::lorentz(FamilySpec::lorentz_an(2), 1).unwrap();
        let err = section(&orbit, &vec(&[1.0, 1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::ProbeOutsideOrbit { .. }));
    }

    fn lorentz_point(n: usize) -> impl Strategy<Value = Vector> {
        proptest::collection::vec(-3.0f64..3.0, n + 1).prop_map(Vector::from_vec)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn lorentz_labels_are_invariant(v in lorentz_point(3), seed in 0u64..1000) {
            let spec = FamilySpec::lorentz_an(3);
            let class = classify_lorentz(&v);
            let LorentzClass::Orbit(k) = class else { return Ok(()); };
            let b = beta(&v, &v).abs() / v.norm_squared();
            prop_assume!(b > 1e-3);
            prop_assume!(k < 3 || (v[0] - v[3]).abs() / v.norm() > 1e-3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_element(&spec, &mut rng, 1.5).unwrap();
            let w = act(&spec, &h, &v).unwrap();
            prop_assert_eq!(classify_lorentz(&w), class);
        }

        #[test]
        fn sylvester_invariance(entries in proptest::collection::vec(-2.0f64..2.0, 6),
                                g in proptest::collection::vec(-2.0f64..2.0, 9)) {
            let x = unflatten_sym(&Vector::from_vec(entries), 3).unwrap();
            let sig = classify_symmetric(&x).unwrap();
            prop_assume!(sig != Signature::Singular);
            let eig = x.clone().symmetric_eigen();
            prop_assume!(eig.eigenvalues.iter().all(|l| l.abs() > 1e-3));
            let h = Matrix::from_vec(3, 3, g) + Matrix::identity(3, 3) * 2.5;
            prop_assume!(h.determinant().abs() > 0.1);
            let y = &h * &x * h.transpose();
            prop_assert_eq!(classify_symmetric(&y).unwrap(), sig);
        }

        #[test]
        fn q_patterns_are_invariant(entries in proptest::collection::vec(-2.0f64..2.0, 6), seed in 0u64..1000) {
            let x = unflatten_sym(&Vector::from_vec(entries), 3).unwrap();
            let Some(pattern) = q_orbit_pattern(&x).unwrap() else { return Ok(()); };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = FamilySpec::triangular_q(3);
            let h = random_element(&spec, &mut rng, 1.0).unwrap();
            let y = h.matrix() * &x * h.matrix().transpose();
            // skip points numerically close to a minor hypersurface
            let close = (1..=3).any(|k| x.view((3 - k, 3 - k), (k, k)).determinant().abs() < 1e-3);
            prop_assume!(!close);
            prop_assert_eq!(q_orbit_pattern(&y).unwrap(), Some(pattern));
        }
    }
}
