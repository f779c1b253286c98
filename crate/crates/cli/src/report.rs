//! Run reports and their JSON/CSV renderings.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use orbitframe::frame_engine::{AdmissibilityReport, EmpiricalBounds, PredictedBounds, Solver};
use orbitframe::group_families::LatticeWindow;
use orbitframe::separation::{BqRegion, MethodUsed, SeparationCertificate};
use serde::Serialize;

/// Ordered from best to worst so that `max` combines outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Verified,
    Inconclusive,
    Violated,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Verified => 0,
            Outcome::Violated => 2,
            Outcome::Inconclusive => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Verified => "verified",
            Outcome::Inconclusive => "inconclusive",
            Outcome::Violated => "violated",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub stage: String,
    pub outcome: Outcome,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringSummary {
    pub covered: bool,
    pub samples: usize,
    pub spacing: f64,
    pub margin: f64,
    pub max_multiplicity: usize,
    /// At most the first 16 uncovered probe points.
    pub uncovered: Vec<Vec<f64>>,
    pub uncovered_total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapSummary {
    pub alpha: usize,
    pub method: MethodUsed,
    /// Lattice index attaining `alpha`.
    pub argmax: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameSummary {
    pub grid_points: usize,
    pub aligned: bool,
    pub active_lattice: Vec<usize>,
    pub volume: f64,
    pub a_phi: f64,
    pub b_phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnitaritySummary {
    /// Max over dilations of the relative spread of `|g_{a,m}|` in `m`.
    pub modulation_spread: f64,
    /// Max of `| |g_{a,m}| - |phi| | / |phi|`.
    pub deviation: f64,
    pub vectors_checked: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconstructionSummary {
    pub probes: usize,
    pub solver: Solver,
    pub bounds: (f64, f64),
    pub max_error: f64,
    pub max_residual: f64,
    pub max_iterations: usize,
    /// Iteration bound of the relaxed scheme at this tolerance.
    pub relaxed_bound: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub family: String,
    pub orbit: String,
    pub outcome: Outcome,
    pub checks: Vec<Check>,
    pub window: LatticeWindow,
    pub lattice_size: usize,
    pub bq: Option<BqRegion>,
    pub separation: Option<SeparationCertificate>,
    pub separation_counterpart: Option<SeparationCertificate>,
    pub covering: Option<CoveringSummary>,
    pub overlap: Option<OverlapSummary>,
    pub predicted: Option<PredictedBounds>,
    pub frame: Option<FrameSummary>,
    pub empirical: Option<EmpiricalBounds>,
    pub unitarity: Option<UnitaritySummary>,
    pub reconstruction: Option<ReconstructionSummary>,
    pub admissibility: Option<AdmissibilityReport>,
}

impl Report {
    pub fn check(&self, stage: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.stage == stage)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn bounds_csv(&self) -> String {
        let mut out = String::from("quantity,index,value\n");
        let mut row = |q: &str, i: Option<usize>, v: f64| {
            let idx = i.map(|i| i.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{q},{idx},{v}");
        };
        if let Some(o) = &self.overlap {
            row("alpha", None, o.alpha as f64);
        }
        if let Some(p) = &self.predicted {
            row("volume", None, p.volume);
            row("a_phi", None, p.a_phi);
            row("b_phi", None, p.b_phi);
            row("a_pred", None, p.a);
            row("b_pred", None, p.b);
        }
        if let Some(e) = &self.empirical {
            row("a_emp", None, e.a_emp);
            row("b_emp", None, e.b_emp);
            row("power_max", None, e.power_max);
            row("power_min", None, e.power_min);
            for (i, q) in e.quotients.iter().enumerate() {
                row("quotient", Some(i), *q);
            }
        }
        out
    }

    /// Fixed-width summary for terminals.
    pub fn table(&self) -> String {
        let mut out = format!("scenario {} ({} / {}), seed {}\n", self.scenario, self.family, self.orbit, self.seed);
        let w = self.checks.iter().map(|c| c.stage.len()).max().unwrap_or(5).max(5);
        for c in &self.checks {
            let _ = writeln!(out, "  {:<w$}  {:<12}  {}", c.stage, c.outcome.label(), c.detail);
        }
        let _ = writeln!(out, "outcome: {}", self.outcome.label());
        out
    }
}

/// One probe point per row with its multiplicity.
pub fn heatmap_csv(points: &[(Vec<f64>, usize)]) -> String {
    let dim = points.first().map_or(0, |p| p.0.len());
    let mut out = String::new();
    for i in 0..dim {
        let _ = write!(out, "x{i},");
    }
    out.push_str("multiplicity\n");
    for (p, m) in points {
        for x in p {
            let _ = write!(out, "{x},");
        }
        let _ = writeln!(out, "{m}");
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)
}
