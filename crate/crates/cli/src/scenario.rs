//! Scenario files: TOML with one section per pipeline stage.

use std::fmt;
use std::path::Path;

use orbitframe::frame_engine::{FrequencyGrid, GeneratorKind, Modes, ParallelepipedSpec, Solver};
use orbitframe::group_families::{FamilyKind, FamilySpec, LatticeWindow};
use orbitframe::orbit_atlas::OrbitSpec;
use orbitframe::separation::{BqOptions, Method, Region, Sampling};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub family: FamilySection,
    pub orbit: OrbitSection,
    pub lattice: LatticeWindow,
    pub separation: SeparationSection,
    pub covering: CoveringSection,
    pub overlap: OverlapSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<AdmissibilitySection>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    pub kind: FamilyKind,
    /// Ignored for `sl2_lower`, which always acts on the plane.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Dilation base of the similitude lattice (default 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    /// Rotation angles of the planar similitude lattice (default: identity only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
}

fn default_n() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "label", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrbitSection {
    Punctured,
    Lorentz { index: u8 },
    Symmetric { signs: Vec<i8> },
    Sl2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    /// Exact when the region admits it, sampled otherwise.
    #[default]
    Auto,
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationSection {
    /// Explicit separating region; mutually exclusive with `bq`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    /// Build the group-level box from the lattice window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bq: Option<BqOptions>,
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default)]
    pub sampling: Sampling,
    /// Sampled membership margin (default `1e-9 * diam`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    /// Also check the region on the other level (lifted or projected).
    #[serde(default = "yes")]
    pub equivalence: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringSection {
    pub f: Region,
    /// Probe window `K`.
    pub k: Region,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSection {
    pub d: Region,
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default)]
    pub sampling: Sampling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Points per axis; alternatively give `spacing`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

impl GridSection {
    pub fn build(&self) -> orbitframe::Result<FrequencyGrid> {
        match (&self.shape, self.spacing) {
            (Some(shape), None) => FrequencyGrid::new(self.lower.clone(), self.upper.clone(), shape.clone()),
            (None, Some(h)) => FrequencyGrid::with_spacing(self.lower.clone(), self.upper.clone(), h),
            _ => Err(orbitframe::Error::InvalidParameter(
                "grid needs exactly one of `shape` and `spacing`".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionSection {
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_solver")]
    pub solver: Solver,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

impl Default for ReconstructionSection {
    fn default() -> Self {
        ReconstructionSection {
            probes: default_probes(),
            solver: default_solver(),
            max_iterations: default_max_iterations(),
        }
    }
}

fn default_probes() -> usize {
    20
}

fn default_solver() -> Solver {
    Solver::ConjugateGradient
}

fn default_max_iterations() -> usize {
    200
}

fn default_power_iterations() -> usize {
    30
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSection {
    /// The parallelepiped `R` carrying the exponential basis.
    pub r: ParallelepipedSpec,
    pub generator: GeneratorKind,
    pub grid: GridSection,
    #[serde(default)]
    pub modes: Modes,
    /// Window for random probes (default: the covering window).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_window: Option<Region>,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_power_iterations")]
    pub power_iterations: usize,
    #[serde(default)]
    pub reconstruction: ReconstructionSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibilitySection {
    pub omegas: Vec<Vec<f64>>,
    /// Known value of the constant, checked at `tolerances.admissibility_value`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
}

/// Every numerical threshold of the pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `B_emp <= B_pred (1 + upper_slack)`. Default 1e-3.
    pub upper_slack: f64,
    /// `A_pred (1 - lower_slack) <= A_emp`. Default 0.
    pub lower_slack: f64,
    /// If set, `|A_emp - Vol(R)|` and `|B_emp - Vol(R)|` must not exceed it.
    pub tight: Option<f64>,
    /// Relative spread of `|g_{a,m}|` over the modes of one dilation. Default 1e-8.
    pub modulation: f64,
    /// If set, `| |g_{a,m}| - |phi| | / |phi|` over all atoms must not exceed it.
    pub unitarity: Option<f64>,
    /// Relative reconstruction error per probe. Default 1e-8.
    pub reconstruction: f64,
    /// Relative spread of the admissibility constant. Default 1e-3.
    pub admissibility_spread: f64,
    /// Absolute error against `admissibility.expected`. Default 1e-4.
    pub admissibility_value: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            upper_slack: 1e-3,
            lower_slack: 0.0,
            tight: None,
            modulation: 1e-8,
            unitarity: None,
            reconstruction: 1e-8,
            admissibility_spread: 1e-3,
            admissibility_value: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioError {
    Io { path: String, message: String },
    Parse { source: String, line: usize, column: usize, message: String },
    Invalid { source: String, message: String },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Io { path, message } => write!(f, "{path}: {message}"),
            ScenarioError::Parse {
                source,
                line,
                column,
                message,
            } => write!(f, "{source}:{line}:{column}: {message}"),
            ScenarioError::Invalid { source, message } => write!(f, "{source}: {message}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl Scenario {
    /// Parses scenario text; `source` names it in diagnostics.
    pub fn parse(text: &str, source: &str) -> Result<Scenario, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |sp| line_col(text, sp.start));
            ScenarioError::Parse {
                source: source.to_string(),
                line,
                column,
                message: e.message().trim().to_string(),
            }
        })?;
        s.check().map_err(|message| ScenarioError::Invalid {
            source: source.to_string(),
            message,
        })?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Scenario::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Structural checks that do not need the library.
    fn check(&self) -> Result<(), String> {
        match (&self.separation.region, &self.separation.bq) {
            (Some(_), Some(_)) => return Err("separation: give either `region` or `bq`, not both".into()),
            (None, None) => return Err("separation: one of `region` and `bq` is required".into()),
            _ => {}
        }
        if let Some(fr) = &self.frame {
            if fr.probes == 0 {
                return Err("frame.probes must be positive".into());
            }
        }
        if let Some(ad) = &self.admissibility {
            if ad.omegas.is_empty() {
                return Err("admissibility.omegas is empty".into());
            }
        }
        Ok(())
    }

    pub fn family_spec(&self) -> orbitframe::Result<FamilySpec> {
        let f = &self.family;
        let mut spec = match f.kind {
            FamilyKind::Similitude => FamilySpec::similitude(f.n),
            FamilyKind::LorentzAn => FamilySpec::lorentz_an(f.n),
            FamilyKind::TriangularQ => FamilySpec::triangular_q(f.n),
            FamilyKind::Sl2Lower => FamilySpec::sl2_lower(),
        };
        if let Some(b) = f.base {
            spec = spec.with_base(b);
        }
        if let Some(angles) = &f.angles {
            spec = spec.with_angles(angles)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn orbit_spec(&self) -> orbitframe::Result<OrbitSpec> {
        let family = self.family_spec()?;
        match &self.orbit {
            OrbitSection::Punctured => OrbitSpec::similitude(family),
            OrbitSection::Lorentz { index } => OrbitSpec::lorentz(family, *index),
            OrbitSection::Symmetric { signs } => OrbitSpec::symmetric(family, signs.clone()),
            OrbitSection::Sl2 => OrbitSpec::sl2(family),
        }
    }
}

/// Text with the same meaning in canonical form.
pub fn normalize(text: &str) -> Result<String, ScenarioError> {
    Ok(Scenario::parse(text, "<text>")?.to_toml())
}

pub fn method_for(choice: MethodChoice, exact_ok: bool, sampling: Sampling, margin: Option<f64>) -> Method {
    match choice {
        MethodChoice::Exact => Method::Exact,
        MethodChoice::Auto if exact_ok => Method::Exact,
        _ => Method::Sampled { sampling, margin },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"

[family]
kind = "similitude"
n = 1

[orbit]
label = "punctured"

[lattice]
a_range = [[-3, 3]]
n_range = []

[separation]
region = { kind = "annulus", inner = 1.0, outer = 1.5 }

[covering]
f = { kind = "annulus", inner = 1.0, outer = 2.0 }
k = { kind = "annulus", inner = 0.5, outer = 4.0 }

[overlap]
d = { kind = "annulus", inner = 1.0, outer = 2.0 }
"#;

    #[test]
    fn minimal_parses_with_defaults() {
        let s = Scenario::parse(MINIMAL, "m").unwrap();
        assert_eq!(s.tolerances, Tolerances::default());
        assert_eq!(s.separation.method, MethodChoice::Auto);
        assert!(s.separation.equivalence);
        assert_eq!(s.lattice.cap, orbitframe::group_families::DEFAULT_LATTICE_CAP);
        assert_eq!(s.orbit_spec().unwrap().dim(), 1);
        let again = Scenario::parse(&s.to_toml(), "again").unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn diagnostics_carry_position() {
        let bad = MINIMAL.replace("n = 1", "n = \"one\"");
        match Scenario::parse(&bad, "bad.toml") {
            Err(ScenarioError::Parse { line, column, source, .. }) => {
                assert_eq!(source, "bad.toml");
                assert_eq!(line, 6);
                assert_eq!(column, 5);
            }
            other => panic!("{other:?}"),
        }
        let bad = MINIMAL.replace("label = \"punctured\"", "label = \"sphere\"");
        assert!(matches!(Scenario::parse(&bad, "x"), Err(ScenarioError::Parse { .. })));
        let bad = format!("{MINIMAL}\n[frame]\nbogus = 1\n");
        assert!(matches!(Scenario::parse(&bad, "x"), Err(ScenarioError::Parse { .. })));
        let both = MINIMAL.replace("[separation]\n", "[separation]\nbq = {}\n");
        assert!(matches!(Scenario::parse(&both, "x"), Err(ScenarioError::Invalid { .. })));
    }

    #[test]
    fn line_col_counts_from_one() {
        assert_eq!(line_col("ab\ncd", 0), (1, 1));
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
    }
}
