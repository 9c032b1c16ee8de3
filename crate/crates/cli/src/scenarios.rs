//! Bundled scenario library.

use crate::config::ExperimentConfig;

const BUNDLED: &[(&str, &str)] = &[
    ("exact-algebra-p41", include_str!("../scenarios/exact-algebra-p41.toml")),
    ("exact-algebra-p42", include_str!("../scenarios/exact-algebra-p42.toml")),
    ("free-1d-p52", include_str!("../scenarios/free-1d-p52.toml")),
    ("free-1d-p53", include_str!("../scenarios/free-1d-p53.toml")),
    ("free-1d-p61", include_str!("../scenarios/free-1d-p61.toml")),
    ("free-1d-p63", include_str!("../scenarios/free-1d-p63.toml")),
    ("critical-3d-p71", include_str!("../scenarios/critical-3d-p71.toml")),
    ("kato-morawetz", include_str!("../scenarios/kato-morawetz.toml")),
    ("free-3d-morawetz", include_str!("../scenarios/free-3d-morawetz.toml")),
    ("control-eigenvector", include_str!("../scenarios/control-eigenvector.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn load(name: &str) -> anyhow::Result<ExperimentConfig> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| anyhow::anyhow!("unknown scenario {name:?}; see `decaylab list`"))?;
    ExperimentConfig::parse(text)
}

pub fn all() -> Vec<ExperimentConfig> {
    names().map(|n| load(n).expect("bundled scenario parses")).collect()
}

/// Scenarios whose name or proposition list contains `filter`.
pub fn filtered(filter: Option<&str>) -> Vec<ExperimentConfig> {
    all()
        .into_iter()
        .filter(|c| match filter {
            None | Some("") => true,
            Some(f) => c.scenario.contains(f) || c.propositions.iter().any(|p| p.to_string() == f),
        })
        .collect()
}

pub fn table(rows: &[ExperimentConfig]) -> String {
    let mut out = format!("{:<20} {:<24} {:<13} {}\n", "NAME", "PROPOSITIONS", "EXPECTED", "DESCRIPTION");
    for c in rows {
        let props: Vec<String> = c.propositions.iter().map(|p| p.to_string()).collect();
        let expected = serde_json::to_value(c.expected).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        out.push_str(&format!("{:<20} {:<24} {:<13} {}\n", c.scenario, props.join(","), expected, c.description));
    }
    out
}
