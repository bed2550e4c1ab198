//! Flat INI-style configuration: `key = value` lines, `#`/`;` comments,
//! section headers tolerated and ignored. CLI flags override file values.

use std::collections::BTreeMap;
use std::path::Path;

pub type ConfigMap = BTreeMap<String, String>;

pub fn parse_ini(text: &str) -> ConfigMap {
    let mut map = ConfigMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    map
}

pub fn load(path: &Path) -> std::io::Result<ConfigMap> {
    Ok(parse_ini(&std::fs::read_to_string(path)?))
}

/// Fill `slot` from the config when the CLI left it empty.
pub fn fill<T: std::str::FromStr>(slot: &mut Option<T>, cfg: &ConfigMap, key: &str) {
    if slot.is_none() {
        if let Some(raw) = cfg.get(key) {
            if let Ok(v) = raw.parse::<T>() {
                *slot = Some(v);
            }
        }
    }
}

/// Lengths accept plain floats or `<mult>pi` (e.g. `16pi`).
pub fn parse_length(s: &str) -> Option<f64> {
    let t = s.trim();
    if let Some(mult) = t.strip_suffix("pi") {
        let m: f64 = if mult.is_empty() { 1.0 } else { mult.trim().parse().ok()? };
        return Some(m * std::f64::consts::PI);
    }
    t.parse().ok()
}
