//! Randomised checks of the algebraic identities behind each family.

use orbitframe::group_core::{expm, theta, GroupElement, Matrix, Vector};
use orbitframe::group_families::{
    algebra_element, conjugation_check, family_exp, random_element, AlgebraParams, FamilyKind, FamilySpec,
};
use orbitframe::orbit_atlas::{act, classify_lorentz, kappa, q_orbit_pattern, LorentzClass, OrbitSpec};
use orbitframe::root_structure::{binomial, q_orbit_representatives, root_decomposition};
use orbitframe::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityRow {
    pub family: String,
    pub identity: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityRow {
    fn new(family: &str, identity: &str, samples: usize, max_residual: f64, tolerance: f64) -> Self {
        IdentityRow {
            family: family.to_string(),
            identity: identity.to_string(),
            samples,
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
        }
    }
}

const ALGEBRA_TOL: f64 = 1e-10;

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn uniform(rng: &mut ChaCha8Rng, k: usize, bound: f64) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-bound..=bound)).collect()
}

fn label(spec: &FamilySpec) -> String {
    format!("{} n={}", spec.kind.tag(), spec.n)
}

fn default_orbit(spec: &FamilySpec) -> Result<OrbitSpec> {
    match spec.kind {
        FamilyKind::Similitude => OrbitSpec::similitude(spec.clone()),
        FamilyKind::LorentzAn => OrbitSpec::lorentz(spec.clone(), 1),
        FamilyKind::TriangularQ => {
            let signs = (0..spec.n).map(|i| if i == 0 { 1 } else { -1 }).collect();
            OrbitSpec::symmetric(spec.clone(), signs)
        }
        FamilyKind::Sl2Lower => OrbitSpec::sl2(spec.clone()),
    }
}

/// Identities shared by every family: closed-form exponentials agree with
/// the series, the involution is multiplicative, the action is a left action
/// and the orbit map lands in the orbit.
fn common(spec: &FamilySpec, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<IdentityRow>> {
    let name = label(spec);
    let mut exp_res: f64 = 0.0;
    let mut exp_n = 0;
    for _ in 0..count {
        let mut params = vec![AlgebraParams::Abelian(uniform(rng, abelian_params(spec), 1.0))];
        if spec.nilpotent_dim() > 0 {
            params.push(AlgebraParams::Nilpotent(uniform(rng, spec.nilpotent_dim(), 1.0)));
        }
        for p in &params {
            let x = algebra_element(spec, p)?;
            let closed = family_exp(spec, p)?;
            exp_res = exp_res.max(rel(closed.matrix(), &expm(x.matrix())));
            exp_n += 1;
        }
    }
    let orbit = default_orbit(spec)?;
    let mut theta_res: f64 = 0.0;
    let mut action_res: f64 = 0.0;
    let mut misclassified = 0usize;
    for _ in 0..count {
        let g = random_element(spec, rng, 2.0)?;
        let h = random_element(spec, rng, 2.0)?;
        let gh = g.mul(&h)?;
        let lhs = theta(&gh)?;
        let rhs = theta(&g)?.mul(&theta(&h)?)?;
        theta_res = theta_res.max(rel(lhs.matrix(), rhs.matrix()));
        let v = Vector::from_vec(uniform(rng, orbit.dim(), 1.0));
        let once = act(spec, &gh, &v)?;
        let twice = act(spec, &g, &act(spec, &h, &v)?)?;
        action_res = action_res.max((&once - &twice).norm() / once.norm().max(1.0));
        if !orbit.contains(&kappa(&orbit, &g)?) {
            misclassified += 1;
        }
    }
    Ok(vec![
        IdentityRow::new(&name, "exp closed form = series", exp_n, exp_res, ALGEBRA_TOL),
        IdentityRow::new(&name, "theta(gh) = theta(g) theta(h)", count, theta_res, ALGEBRA_TOL),
        IdentityRow::new(&name, "(gh).v = g.(h.v)", count, action_res, ALGEBRA_TOL),
        IdentityRow::new(&name, &format!("kappa(h) in orbit {}", orbit.label), count, misclassified as f64, 0.0),
    ])
}

fn abelian_params(spec: &FamilySpec) -> usize {
    match spec.kind {
        FamilyKind::Similitude | FamilyKind::Sl2Lower => 1,
        FamilyKind::LorentzAn => 2,
        FamilyKind::TriangularQ => spec.n,
    }
}

fn lorentz(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<IdentityRow>> {
    let spec = FamilySpec::lorentz_an(n);
    let name = label(&spec);
    let mut conj: f64 = 0.0;
    for _ in 0..count {
        let lambda = rng.random_range(-2.0f64..=2.0).exp();
        let t = rng.random_range(-2.0..=2.0);
        let x = uniform(rng, n - 1, 2.0);
        conj = conj.max(conjugation_check(&spec, lambda, t, &x)?);
    }
    let mut hom: f64 = 0.0;
    for _ in 0..count {
        let (p, q) = (uniform(rng, 2, 1.0), uniform(rng, 2, 1.0));
        let sum: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a + b).collect();
        let e = |v: Vec<f64>| family_exp(&spec, &AlgebraParams::Abelian(v));
        hom = hom.max(rel(e(p)?.mul(&e(q)?)?.matrix(), e(sum)?.matrix()));
        let (x, y) = (uniform(rng, n - 1, 1.0), uniform(rng, n - 1, 1.0));
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let e = |v: Vec<f64>| family_exp(&spec, &AlgebraParams::Nilpotent(v));
        hom = hom.max(rel(e(x)?.mul(&e(y)?)?.matrix(), e(sum)?.matrix()));
    }
    let orbit = OrbitSpec::lorentz(spec.clone(), 1)?;
    let mut wrong = 0usize;
    let points = 10 * count;
    for _ in 0..points {
        let h = random_element(&spec, rng, 2.0)?;
        if classify_lorentz(&kappa(&orbit, &h)?) != LorentzClass::Orbit(1) {
            wrong += 1;
        }
    }
    Ok(vec![
        IdentityRow::new(&name, "a n(x) a^-1 = n(e^-t x)", count, conj, ALGEBRA_TOL),
        IdentityRow::new(&name, "exp(X) exp(Y) = exp(X + Y) on a and n", 2 * count, hom, ALGEBRA_TOL),
        IdentityRow::new(&name, "kappa(h) e1 classified as orbit 1", points, wrong as f64, 0.0),
    ])
}

/// All integer points of `{-r..r}^n`.
fn int_box(n: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| (-r..=r).map(move |x| [v.clone(), vec![x]].concat()))
            .collect();
    }
    out
}

fn triangular(n: usize) -> Result<Vec<IdentityRow>> {
    let name = format!("triangular_q n={n}");
    let roots = root_decomposition(n)?;
    let ts = int_box(n, 2);
    let worst = ts.iter().map(|t| roots.bracket_residual(t)).max().unwrap_or(0);
    let closed = if roots.positive_span_closed() { 0.0 } else { 1.0 };
    let mut rows = vec![
        IdentityRow::new(&name, "[d(t), E_ij] = (t_i - t_j) E_ij", ts.len(), worst as f64, 0.0),
        IdentityRow::new(&name, "positive root span closed", 1, closed, 0.0),
    ];
    for p in 1..n {
        rows.push(q_orbit_row(n, p)?);
    }
    Ok(rows)
}

/// `|#reps - C(n,p)| + |#reps - #patterns|`, patterns found by brute force.
fn q_orbit_row(n: usize, p: usize) -> Result<IdentityRow> {
    let reps = q_orbit_representatives(n, p)?;
    let mut patterns: Vec<Vec<i8>> = Vec::new();
    for r in &reps {
        if let Some(s) = q_orbit_pattern(r)? {
            if !patterns.contains(&s) {
                patterns.push(s);
            }
        }
    }
    let brute = (0u32..1 << n).filter(|m| m.count_ones() as usize == p).count();
    let all_valid = patterns.iter().all(|s| s.iter().filter(|&&v| v > 0).count() == p);
    let want = binomial(n, p);
    let res = reps.len().abs_diff(want) + reps.len().abs_diff(brute) + patterns.len().abs_diff(brute) + usize::from(!all_valid);
    Ok(IdentityRow::new(
        &format!("triangular_q n={n}"),
        &format!("q-orbits for p={p}: {} = C({n},{p}) = {brute} sign patterns", reps.len()),
        reps.len(),
        res as f64,
        0.0,
    ))
}

/// `a exp(Y) a^-1 = exp(a Y a^-1)` with `a` from the abelian part.
fn conjugation_generic(spec: &FamilySpec, count: usize, rng: &mut ChaCha8Rng) -> Result<IdentityRow> {
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let a = family_exp(spec, &AlgebraParams::Abelian(uniform(rng, abelian_params(spec), 1.0)))?;
        let y = AlgebraParams::Nilpotent(uniform(rng, spec.nilpotent_dim(), 1.0));
        let ym = algebra_element(spec, &y)?;
        let ny = family_exp(spec, &y)?;
        let ainv: GroupElement = a.inverse()?;
        let lhs = a.mul(&ny)?.mul(&ainv)?;
        let rhs = expm(&(a.matrix() * ym.matrix() * ainv.matrix()));
        worst = worst.max(rel(lhs.matrix(), &rhs));
    }
    Ok(IdentityRow::new(&label(spec), "a exp(Y) a^-1 = exp(Ad(a) Y)", count, worst, ALGEBRA_TOL))
}

pub const FAMILIES: [&str; 4] = ["similitude", "lorentz_an", "triangular_q", "sl2_lower"];

/// Runs the identity suites for one family name or `all`.
pub fn verify_identities(family: &str, count: usize, seed: u64) -> Result<Vec<IdentityRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let want = |f: &str| family == "all" || family == f;
    if !(family == "all" || FAMILIES.contains(&family)) {
        return Err(orbitframe::Error::InvalidParameter(format!(
            "unknown family {family:?}; expected one of {FAMILIES:?} or all"
        )));
    }
    let mut rows = Vec::new();
    if want("similitude") {
        for n in [1, 2, 3] {
            rows.extend(common(&FamilySpec::similitude(n), count, &mut rng)?);
        }
    }
    if want("lorentz_an") {
        for n in [2, 3] {
            rows.extend(lorentz(n, count, &mut rng)?);
            let spec = FamilySpec::lorentz_an(n);
            rows.extend(common(&spec, count, &mut rng)?);
            rows.push(conjugation_generic(&spec, count, &mut rng)?);
        }
    }
    if want("triangular_q") {
        for n in [2, 3, 4] {
            rows.extend(triangular(n)?);
            let spec = FamilySpec::triangular_q(n);
            rows.extend(common(&spec, count, &mut rng)?);
            rows.push(conjugation_generic(&spec, count, &mut rng)?);
        }
    }
    if want("sl2_lower") {
        let spec = FamilySpec::sl2_lower();
        rows.extend(common(&spec, count, &mut rng)?);
        rows.push(conjugation_generic(&spec, count, &mut rng)?);
    }
    Ok(rows)
}

pub fn table(rows: &[IdentityRow]) -> String {
    let fw = rows.iter().map(|r| r.family.len()).max().unwrap_or(6).max(6);
    let iw = rows.iter().map(|r| r.identity.len()).max().unwrap_or(8).max(8);
    let mut out = format!("{:<fw$}  {:<iw$}  {:>7}  {:>10}  {:>8}  result\n", "family", "identity", "samples", "residual", "tol");
    for r in rows {
        out.push_str(&format!(
            "{:<fw$}  {:<iw$}  {:>7}  {:>10.3e}  {:>8.0e}  {}\n",
            r.family,
            r.identity,
            r.samples,
            r.max_residual,
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    out.push_str(&format!("{} identities, {failed} failed\n", rows.len()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_orbit_counts() {
        for (n, p) in [(2, 1), (3, 1), (3, 2), (4, 2)] {
            let r = q_orbit_row(n, p).unwrap();
            assert!(r.pass, "{r:?}");
            assert_eq!(r.samples, binomial(n, p));
        }
    }

    #[test]
    fn unknown_family_is_rejected() {
        assert!(verify_identities("heisenberg", 1, 0).is_err());
    }

    #[test]
    fn int_box_size() {
        assert_eq!(int_box(3, 1).len(), 27);
    }
}
