//! Scenarios shipped with the binary.

use serde::Serialize;

use crate::scenario::{Scenario, ScenarioError};

pub const BUNDLED: [(&str, &str); 6] = [
    ("dyadic_1d", include_str!("../scenarios/dyadic_1d.toml")),
    ("similitude_2d", include_str!("../scenarios/similitude_2d.toml")),
    ("lorentz_an_n2", include_str!("../scenarios/lorentz_an_n2.toml")),
    ("glsym_n2_p1", include_str!("../scenarios/glsym_n2_p1.toml")),
    ("glsym_n3_p1", include_str!("../scenarios/glsym_n3_p1.toml")),
    ("sl2_remark", include_str!("../scenarios/sl2_remark.toml")),
];

pub fn bundled(name: &str) -> Option<Result<Scenario, ScenarioError>> {
    let name = name.strip_suffix(".toml").unwrap_or(name);
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| Scenario::parse(text, &format!("{n}.toml")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ListRow {
    pub name: String,
    pub family: String,
    pub n: usize,
    pub orbit: String,
    pub frame: bool,
    pub description: String,
}

/// Bundled scenarios whose name, family or description contains `filter`.
pub fn list_scenarios(filter: Option<&str>) -> Vec<ListRow> {
    BUNDLED
        .iter()
        .map(|(name, text)| {
            let s = Scenario::parse(text, name).expect("bundled scenario parses");
            let orbit = s.orbit_spec().map(|o| o.label.to_string()).unwrap_or_default();
            ListRow {
                name: name.to_string(),
                family: s.family.kind.tag().to_string(),
                n: s.family_spec().map(|f| f.n).unwrap_or(s.family.n),
                orbit,
                frame: s.frame.is_some(),
                description: s.description.clone(),
            }
        })
        .filter(|r| {
            filter.is_none_or(|f| {
                let f = f.to_lowercase();
                r.name.contains(&f) || r.family.contains(&f) || r.description.to_lowercase().contains(&f)
            })
        })
        .collect()
}

pub fn list_table(rows: &[ListRow]) -> String {
    let w = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = format!("{:<w$}  {:<12}  {:>2}  {:<10}  {:<5}  description\n", "name", "family", "n", "orbit", "frame");
    for r in rows {
        out.push_str(&format!(
            "{:<w$}  {:<12}  {:>2}  {:<10}  {:<5}  {}\n",
            r.name, r.family, r.n, r.orbit, r.frame, r.description
        ));
    }
    out
}
