//! Field-wise comparison of two run reports.

use std::path::Path;

use anyhow::{bail, Context};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub verdict_flips: Vec<String>,
    pub drifts: Vec<String>,
    pub missing: Vec<String>,
}

impl Comparison {
    pub fn is_clean(&self) -> bool {
        self.verdict_flips.is_empty() && self.drifts.is_empty() && self.missing.is_empty()
    }

    /// 0 when clean, 1 for constant drift or missing checks, 2 for verdict flips.
    pub fn exit_code(&self) -> i32 {
        if !self.verdict_flips.is_empty() {
            2
        } else if self.is_clean() {
            0
        } else {
            1
        }
    }

    pub fn render(&self) -> String {
        if self.is_clean() {
            return "no differences\n".into();
        }
        let mut out = String::new();
        for f in &self.verdict_flips {
            out.push_str(&format!("VERDICT FLIP {f}\n"));
        }
        for d in &self.drifts {
            out.push_str(&format!("drift {d}\n"));
        }
        for m in &self.missing {
            out.push_str(&format!("missing {m}\n"));
        }
        out
    }
}

pub fn load(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn compare_reports(a: &Value, b: &Value, threshold: f64) -> anyhow::Result<Comparison> {
    let (va, vb) = (&a["schema_version"], &b["schema_version"]);
    if va.is_null() || vb.is_null() {
        bail!("reports lack a schema_version field");
    }
    if va != vb {
        bail!("schema version mismatch: {va} vs {vb}");
    }
    let checks = |v: &Value| -> Vec<Value> { v["verdicts"]["checks"].as_array().cloned().unwrap_or_default() };
    let (ca, cb) = (checks(a), checks(b));
    let mut cmp = Comparison { verdict_flips: vec![], drifts: vec![], missing: vec![] };
    for x in &ca {
        let id = x["id"].as_str().unwrap_or("?");
        let Some(y) = cb.iter().find(|y| y["id"] == x["id"]) else {
            cmp.missing.push(format!("{id} only in the first report"));
            continue;
        };
        if x["verdict"] != y["verdict"] {
            cmp.verdict_flips.push(format!("{id}: {} -> {}", x["verdict"], y["verdict"]));
        }
        let empty = serde_json::Map::new();
        let (kx, ky) = (x["constants"].as_object().unwrap_or(&empty), y["constants"].as_object().unwrap_or(&empty));
        for (k, vx) in kx {
            match (vx.as_f64(), ky.get(k).and_then(Value::as_f64)) {
                (Some(p), Some(q)) => {
                    let r = relative(p, q);
                    if r > threshold {
                        cmp.drifts.push(format!("{id}.{k}: {p:e} -> {q:e} (relative {r:.3e})"));
                    }
                }
                (None, None) => {}
                _ if vx != ky.get(k).unwrap_or(&Value::Null) => cmp.drifts.push(format!("{id}.{k}: {vx} -> {:?}", ky.get(k))),
                _ => {}
            }
        }
        let (fx, fy) = (&x["flags"], &y["flags"]);
        if fx != fy {
            cmp.drifts.push(format!("{id}.flags: {fx} -> {fy}"));
        }
    }
    for y in &cb {
        if !ca.iter().any(|x| x["id"] == y["id"]) {
            cmp.missing.push(format!("{} only in the second report", y["id"].as_str().unwrap_or("?")));
        }
    }
    Ok(cmp)
}
