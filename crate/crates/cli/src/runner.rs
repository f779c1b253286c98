//! Executes a scenario stage by stage and collects a report.

use std::path::Path;

use orbitframe::frame_engine::{
    empirical_bounds, generator_admissibility, generator_from_indicator, predicted_bounds, random_probes,
    reconstruct, relaxed_step_bound, FrameSpec, FrameSystem, Generator, Solver,
};
use orbitframe::group_core::{GroupElement, Vector};
use orbitframe::group_families::enumerate_lattice;
use orbitframe::orbit_atlas::OrbitSpec;
use orbitframe::separation::{
    build_bq_region, check_covering, check_separated, exact_applicable, lift_region, overlap_constant,
    CoverageCertificate, Level, OverlapResult, Region, SeparationCertificate, Status,
};
use orbitframe::Error;

use crate::report::*;
use crate::scenario::{method_for, FrameSection, MethodChoice, Scenario, ScenarioError};

pub struct RunOutput {
    pub report: Report,
    /// Covering probe points with their multiplicities.
    pub heatmap: Vec<(Vec<f64>, usize)>,
}

impl RunOutput {
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        write_file(dir, "report.json", &self.report.to_json())?;
        write_file(dir, "bounds.csv", &self.report.bounds_csv())?;
        write_file(dir, "covering_heatmap.csv", &heatmap_csv(&self.heatmap))
    }
}

/// Outcome a library error stands for once setup has succeeded.
fn classify(e: &Error) -> Outcome {
    match e {
        Error::NonConvergence { .. }
        | Error::EpsilonSearch { .. }
        | Error::Unsupported(_)
        | Error::MissingCertificate(_) => Outcome::Inconclusive,
        _ => Outcome::Violated,
    }
}

fn status_outcome(s: &Status) -> Outcome {
    match s {
        Status::Verified => Outcome::Verified,
        Status::Violated { .. } => Outcome::Violated,
        Status::Inconclusive { .. } => Outcome::Inconclusive,
    }
}

fn status_detail(c: &SeparationCertificate) -> String {
    let m = match &c.method {
        orbitframe::separation::MethodUsed::Exact => "exact".to_string(),
        orbitframe::separation::MethodUsed::Sampled { samples, .. } => format!("sampled, {samples} samples"),
    };
    match &c.status {
        Status::Verified => format!("{} pairs, {m}", c.pairs_checked),
        Status::Violated { witness } => format!("pair {:?} overlaps, {m}", witness.pair),
        Status::Inconclusive { reason, .. } => format!("{reason}, {m}"),
    }
}

/// The same region described on the other level.
fn counterpart(orbit: &OrbitSpec, r: &Region) -> orbitframe::Result<Option<Region>> {
    Ok(match (r.level(), r) {
        (Level::Orbit, Region::Image { source }) => Some(Region::Params(source.clone())),
        (Level::Orbit, _) => Some(lift_region(orbit, r)?),
        (Level::Group, Region::Params(b)) => Some(Region::Image { source: b.clone() }),
        (Level::Group, Region::Lift { target }) => Some((**target).clone()),
        _ => None,
    })
}

struct Run<'a> {
    s: &'a Scenario,
    orbit: OrbitSpec,
    lattice: Vec<GroupElement>,
    report: Report,
    heatmap: Vec<(Vec<f64>, usize)>,
}

impl<'a> Run<'a> {
    fn record(&mut self, stage: &str, outcome: Outcome, detail: impl Into<String>) {
        self.report.checks.push(Check {
            stage: stage.to_string(),
            outcome,
            detail: detail.into(),
        });
    }

    fn fail(&mut self, stage: &str, e: &Error) {
        self.record(stage, classify(e), e.to_string());
    }

    fn separation(&mut self) -> Option<SeparationCertificate> {
        let sc: &'a Scenario = self.s;
        let sec = &sc.separation;
        let region = match (&sec.region, &sec.bq) {
            (Some(r), _) => r.clone(),
            (None, Some(opts)) => match build_bq_region(&self.orbit.family, &sc.lattice, opts) {
                Ok(b) => {
                    let r = Region::Params(b.region.clone());
                    self.report.bq = Some(b);
                    r
                }
                Err(e) => {
                    self.fail("separation", &e);
                    return None;
                }
            },
            (None, None) => unreachable!("checked at parse time"),
        };
        let (orbit, lattice) = (self.orbit.clone(), std::mem::take(&mut self.lattice));
        let check = |region: &Region, choice: MethodChoice| {
            let exact_ok = exact_applicable(&orbit, &lattice, region);
            let method = method_for(choice, exact_ok, sec.sampling, sec.margin);
            check_separated(&orbit, &lattice, region, &method)
        };
        let primary = check(&region, sec.method);
        let other = if sec.equivalence {
            Some(counterpart(&orbit, &region).and_then(|o| o.map(|r| check(&r, MethodChoice::Auto)).transpose()))
        } else {
            None
        };
        self.lattice = lattice;
        let cert = match primary {
            Ok(c) => c,
            Err(e) => {
                self.fail("separation", &e);
                return None;
            }
        };
        self.record("separation", status_outcome(&cert.status), status_detail(&cert));
        if let Some(other) = other {
            match other {
                Ok(Some(other)) => {
                    let (a, b) = (cert.status.label(), other.status.label());
                    let outcome = if a == b {
                        Outcome::Verified
                    } else if a == "inconclusive" || b == "inconclusive" {
                        Outcome::Inconclusive
                    } else {
                        Outcome::Violated
                    };
                    self.record("separation_equivalence", outcome, format!("{a} on this level, {b} on the other"));
                    self.report.separation_counterpart = Some(other);
                }
                Ok(None) => self.record(
                    "separation_equivalence",
                    Outcome::Inconclusive,
                    "region has no counterpart on the other level",
                ),
                Err(e) => self.fail("separation_equivalence", &e),
            }
        }
        self.report.separation = Some(cert.clone());
        Some(cert)
    }

    fn covering(&mut self) -> Option<CoverageCertificate> {
        let sc: &'a Scenario = self.s;
        let c = &sc.covering;
        match check_covering(&self.orbit, &self.lattice, &c.f, &c.k, c.sampling, c.margin) {
            Ok(cov) => {
                let detail = if cov.covered {
                    format!("{} probe points, max multiplicity {}", cov.samples, cov.max_multiplicity)
                } else {
                    format!("{} of {} probe points uncovered, first {:?}", cov.uncovered.len(), cov.samples, cov.uncovered[0])
                };
                self.record("covering", if cov.covered { Outcome::Verified } else { Outcome::Violated }, detail);
                self.report.covering = Some(CoveringSummary {
                    covered: cov.covered,
                    samples: cov.samples,
                    spacing: cov.spacing,
                    margin: cov.margin,
                    max_multiplicity: cov.max_multiplicity,
                    uncovered: cov.uncovered.iter().take(16).cloned().collect(),
                    uncovered_total: cov.uncovered.len(),
                });
                self.heatmap = cov.multiplicity.clone();
                Some(cov)
            }
            Err(e) => {
                self.fail("covering", &e);
                None
            }
        }
    }

    fn overlap(&mut self) -> Option<OverlapResult> {
        let sc: &'a Scenario = self.s;
        let o = &sc.overlap;
        let exact_ok = exact_applicable(&self.orbit, &self.lattice, &o.d);
        let method = method_for(o.method, exact_ok, o.sampling, None);
        let mut result = overlap_constant(&self.orbit, &self.lattice, &o.d, &method);
        if o.method == MethodChoice::Auto && matches!(result, Err(Error::Unsupported(_))) {
            let sampled = method_for(MethodChoice::Sampled, false, o.sampling, None);
            result = overlap_constant(&self.orbit, &self.lattice, &o.d, &sampled);
        }
        match result {
            Ok(r) => {
                let argmax = r.counts.iter().position(|&c| c == r.alpha).unwrap_or(0);
                self.record("overlap", Outcome::Verified, format!("alpha = {} at lattice index {argmax}", r.alpha));
                self.report.overlap = Some(OverlapSummary {
                    alpha: r.alpha,
                    method: r.method.clone(),
                    argmax,
                });
                Some(r)
            }
            Err(e) => {
                self.fail("overlap", &e);
                None
            }
        }
    }

    fn frame(
        &mut self,
        fr: &FrameSection,
        sep: Option<SeparationCertificate>,
        cov: Option<CoverageCertificate>,
        overlap: Option<OverlapResult>,
    ) -> Option<Generator> {
        let s = self.s;
        let built = (|| {
            let grid = fr.grid.build()?;
            let r = fr.r.build()?;
            let generator =
                generator_from_indicator(&self.orbit, s.covering.f.clone(), s.overlap.d.clone(), &grid, fr.generator)?;
            let spec = FrameSpec {
                orbit: self.orbit.clone(),
                lattice: self.lattice.clone(),
                generator,
                parallelepiped: r,
                modes: fr.modes.clone(),
                separation: sep,
                covering: cov,
                overlap,
            };
            FrameSystem::build(spec, grid)
        })();
        let system = match built {
            Ok(sys) => sys,
            Err(e) => {
                self.fail("frame", &e);
                return None;
            }
        };
        let predicted = match predicted_bounds(&system.spec) {
            Ok(p) => {
                self.record("predicted_bounds", Outcome::Verified, format!("A = {}, B = {}", p.a, p.b));
                self.report.predicted = Some(p);
                Some(p)
            }
            Err(e) => {
                self.fail("predicted_bounds", &e);
                None
            }
        };
        let g = &system.spec.generator;
        self.report.frame = Some(FrameSummary {
            grid_points: system.grid.len(),
            aligned: system.is_aligned(),
            active_lattice: system.active_lattice(),
            volume: system.spec.parallelepiped.volume(),
            a_phi: g.a_phi,
            b_phi: g.b_phi,
        });
        self.unitarity(&system);

        let window = fr.probe_window.clone().unwrap_or_else(|| s.covering.k.clone());
        let tol = &s.tolerances;
        let empirical = random_probes(&system, &window, fr.probes, s.seed)
            .and_then(|p| empirical_bounds(&system, &p, &window, fr.power_iterations, s.seed));
        let empirical = match empirical {
            Ok(e) => e,
            Err(e) => {
                self.fail("empirical_bounds", &e);
                return Some(system.spec.generator.clone());
            }
        };
        let (a, b) = (empirical.a_emp, empirical.b_emp);
        let mut detail = format!("A_emp = {a}, B_emp = {b} over {} probes", empirical.quotients.len());
        let mut ok = a > 0.0 && a <= b;
        if let Some(p) = &predicted {
            ok &= p.a * (1.0 - tol.lower_slack) <= a && b <= p.b * (1.0 + tol.upper_slack);
            detail.push_str(&format!(", predicted [{}, {}]", p.a, p.b));
        }
        self.record("empirical_bounds", if ok { Outcome::Verified } else { Outcome::Violated }, detail);
        if let Some(t) = tol.tight {
            let vol = system.spec.parallelepiped.volume();
            let dev = (a - vol).abs().max((b - vol).abs());
            let outcome = if dev <= t { Outcome::Verified } else { Outcome::Violated };
            self.record("tight_frame", outcome, format!("max |bound - Vol(R)| = {dev:.3e} (tolerance {t:.0e})"));
        }
        self.report.empirical = Some(empirical);

        let bounds = predicted.map(|p| (p.a, p.b)).unwrap_or((a, b));
        self.reconstruction(&system, fr, &window, bounds);
        Some(system.spec.generator.clone())
    }

    fn unitarity(&mut self, system: &FrameSystem) {
        let sc: &'a Scenario = self.s;
        let tol = &sc.tolerances;
        let phi = match system.spec.generator.tabulate(&system.grid) {
            Ok(p) => p.norm(),
            Err(e) => return self.fail("unitarity", &e),
        };
        let mut spread: f64 = 0.0;
        let mut deviation: f64 = 0.0;
        let mut count = 0;
        for idx in system.active_lattice() {
            let ranges = system.mode_ranges(idx).unwrap_or_default();
            let mut modes: Vec<Vec<i64>> = vec![Vec::new()];
            for (lo, hi) in &ranges {
                let picks = [*lo, 0, *hi];
                modes = modes
                    .iter()
                    .flat_map(|m| picks.iter().map(move |p| [m.clone(), vec![*p]].concat()))
                    .collect();
            }
            let mut norms = Vec::new();
            for m in &modes {
                match system.frame_vector_hat(idx, m) {
                    Ok(g) => norms.push(g.norm()),
                    Err(e) => return self.fail("unitarity", &e),
                }
            }
            count += norms.len();
            let hi = norms.iter().cloned().fold(0.0, f64::max);
            let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
            if hi > 0.0 {
                spread = spread.max((hi - lo) / hi);
            }
            for n in &norms {
                deviation = deviation.max((n - phi).abs() / phi);
            }
        }
        let outcome = if spread <= tol.modulation { Outcome::Verified } else { Outcome::Violated };
        self.record("modulation_invariance", outcome, format!("relative spread {spread:.3e} over {count} vectors"));
        if let Some(t) = tol.unitarity {
            let outcome = if deviation <= t { Outcome::Verified } else { Outcome::Violated };
            self.record("unitarity", outcome, format!("max relative deviation {deviation:.3e}"));
        }
        self.report.unitarity = Some(UnitaritySummary {
            modulation_spread: spread,
            deviation,
            vectors_checked: count,
        });
    }

    fn reconstruction(&mut self, system: &FrameSystem, fr: &FrameSection, window: &Region, bounds: (f64, f64)) {
        let rc = &fr.reconstruction;
        let tol = self.s.tolerances.reconstruction;
        let probes = match random_probes(system, window, rc.probes, self.s.seed.wrapping_add(1)) {
            Ok(p) => p,
            Err(e) => return self.fail("reconstruction", &e),
        };
        let mut max_error: f64 = 0.0;
        let mut max_residual: f64 = 0.0;
        let mut max_iterations = 0;
        for f in &probes {
            let res = system
                .analyze(f)
                .and_then(|c| reconstruct(system, &c, bounds, rc.solver, tol, rc.max_iterations));
            match res {
                Ok(r) => {
                    let err = r.f.sub(f).map(|d| d.norm() / f.norm());
                    match err {
                        Ok(err) => max_error = max_error.max(err),
                        Err(e) => return self.fail("reconstruction", &e),
                    }
                    max_residual = max_residual.max(r.residual);
                    max_iterations = max_iterations.max(r.iterations);
                }
                Err(e) => return self.fail("reconstruction", &e),
            }
        }
        let relaxed_bound = (rc.solver == Solver::Relaxed).then(|| relaxed_step_bound(bounds, tol));
        let mut ok = max_error <= tol;
        if let Some(nb) = relaxed_bound {
            ok &= max_iterations <= nb;
        }
        self.record(
            "reconstruction",
            if ok { Outcome::Verified } else { Outcome::Violated },
            format!("{} probes, max error {max_error:.3e}, {max_iterations} iterations", probes.len()),
        );
        self.report.reconstruction = Some(ReconstructionSummary {
            probes: probes.len(),
            solver: rc.solver,
            bounds,
            max_error,
            max_residual,
            max_iterations,
            relaxed_bound,
        });
    }

    fn admissibility(&mut self, g: Option<Generator>) {
        let sc: &'a Scenario = self.s;
        let Some(sec) = &sc.admissibility else { return };
        let Some(g) = g else {
            return self.record("admissibility", Outcome::Inconclusive, "needs a generator from the frame stage");
        };
        let omegas: Vec<Vector> = sec.omegas.iter().map(|w| Vector::from_column_slice(w)).collect();
        let tol = &sc.tolerances;
        match generator_admissibility(&g, &omegas) {
            Ok(r) => {
                let mut ok = r.spread <= tol.admissibility_spread * r.mean.abs();
                let mut detail = format!("mean {:.8}, spread {:.3e} over {} frequencies", r.mean, r.spread, r.values.len());
                if let Some(want) = sec.expected {
                    let err = r.values.iter().map(|v| (v - want).abs()).fold(0.0, f64::max);
                    ok &= err <= tol.admissibility_value;
                    detail.push_str(&format!(", max error {err:.3e} against {want}"));
                }
                self.record("admissibility", if ok { Outcome::Verified } else { Outcome::Violated }, detail);
                self.report.admissibility = Some(r);
            }
            Err(e) => self.fail("admissibility", &e),
        }
    }
}

/// Runs every stage; only setup problems (bad family, orbit, window or
/// region parameters) are returned as errors.
pub fn run(s: &Scenario) -> Result<RunOutput, ScenarioError> {
    let invalid = |e: Error| ScenarioError::Invalid {
        source: s.name.clone(),
        message: e.to_string(),
    };
    let (orbit, lattice) = setup(s)?;
    for r in [&s.covering.f, &s.covering.k, &s.overlap.d] {
        r.validate(&orbit).map_err(invalid)?;
    }
    if let Some(r) = &s.separation.region {
        r.validate(&orbit).map_err(invalid)?;
    }
    let report = Report {
        scenario: s.name.clone(),
        seed: s.seed,
        family: orbit.family.kind.tag().to_string(),
        orbit: orbit.label.to_string(),
        outcome: Outcome::Verified,
        checks: Vec::new(),
        window: s.lattice.clone(),
        lattice_size: lattice.len(),
        bq: None,
        separation: None,
        separation_counterpart: None,
        covering: None,
        overlap: None,
        predicted: None,
        frame: None,
        empirical: None,
        unitarity: None,
        reconstruction: None,
        admissibility: None,
    };
    let mut run = Run {
        s,
        orbit,
        lattice,
        report,
        heatmap: Vec::new(),
    };
    run.record("lattice", Outcome::Verified, format!("{} elements", run.lattice.len()));
    let sep = run.separation();
    let cov = run.covering();
    let overlap = run.overlap();
    if let (Some(c), Some(o)) = (&cov, &overlap) {
        let ok = c.max_multiplicity <= o.alpha;
        run.record(
            "multiplicity",
            if ok { Outcome::Verified } else { Outcome::Violated },
            format!("max multiplicity {} against alpha {}", c.max_multiplicity, o.alpha),
        );
    }
    let generator = match &s.frame {
        Some(fr) => run.frame(fr, sep, cov, overlap),
        None => None,
    };
    run.admissibility(generator);
    let mut report = run.report;
    report.outcome = report.checks.iter().map(|c| c.outcome).max().unwrap_or(Outcome::Verified);
    Ok(RunOutput {
        report,
        heatmap: run.heatmap,
    })
}

fn setup(s: &Scenario) -> Result<(OrbitSpec, Vec<GroupElement>), ScenarioError> {
    let invalid = |e: Error| ScenarioError::Invalid {
        source: s.name.clone(),
        message: e.to_string(),
    };
    let orbit = s.orbit_spec().map_err(invalid)?;
    let lattice = enumerate_lattice(&orbit.family, &s.lattice).map_err(invalid)?;
    Ok((orbit, lattice))
}

/// The frame system of a scenario without certificates, for plotting.
pub fn frame_system(s: &Scenario) -> Result<FrameSystem, ScenarioError> {
    let invalid = |e: Error| ScenarioError::Invalid {
        source: s.name.clone(),
        message: e.to_string(),
    };
    let Some(fr) = &s.frame else {
        return Err(ScenarioError::Invalid {
            source: s.name.clone(),
            message: "scenario has no [frame] section".into(),
        });
    };
    let (orbit, lattice) = setup(s)?;
    let grid = fr.grid.build().map_err(invalid)?;
    let generator = generator_from_indicator(&orbit, s.covering.f.clone(), s.overlap.d.clone(), &grid, fr.generator)
        .map_err(invalid)?;
    let spec = FrameSpec {
        orbit,
        lattice,
        generator,
        parallelepiped: fr.r.build().map_err(invalid)?,
        modes: fr.modes.clone(),
        separation: None,
        covering: None,
        overlap: None,
    };
    FrameSystem::build(spec, grid).map_err(invalid)
}

/// Covering probe points with their multiplicities.
pub fn covering_map(s: &Scenario) -> Result<Vec<(Vec<f64>, usize)>, ScenarioError> {
    let (orbit, lattice) = setup(s)?;
    let c = &s.covering;
    check_covering(&orbit, &lattice, &c.f, &c.k, c.sampling, c.margin)
        .map(|cov| cov.multiplicity)
        .map_err(|e| ScenarioError::Invalid {
            source: s.name.clone(),
            message: e.to_string(),
        })
}
