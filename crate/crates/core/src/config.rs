//! Plain-text chain configuration.
//!
//! ```text
//! [chain]
//! coupling_j_hz = 6450000
//!
//! [drive]
//! omega_l_hz = 193499799937661.03
//! pump_power_w = 0.01
//! probe_power_w = 1e-6
//! kappa_ex_hz = 6450000
//! probe_direction = forward
//! pump_all = true
//!
//! [resonator.1]
//! mass_kg = 2e-12
//! ...
//! ```
//!
//! `#` starts a comment. Keys are fixed; anything unknown is rejected with the
//! offending line number.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use crate::params::{ChainConfig, DriveSpec, ProbeDirection, ResonatorSpec};
use crate::Result;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    /// 1-based line number, 0 when the problem is not tied to a line.
    pub line: usize,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if self.line > 0 {
            write!(f, " at line {}", self.line)?;
        }
        if let Some(key) = &self.key {
            write!(f, " (key `{key}`)")?;
        }
        write!(f, ": {}", self.message)
    }
}

fn err(line: usize, key: Option<&str>, message: impl Into<String>) -> ConfigError {
    ConfigError { line, key: key.map(str::to_owned), message: message.into() }
}

const RESONATOR_KEYS: [&str; 10] = [
    "mass_kg",
    "omega_m_hz",
    "gamma_m_hz",
    "omega_c_hz",
    "kappa_in_hz",
    "radius_m",
    "refractive_index",
    "dn_dlambda_per_m",
    "spin_rate_hz",
    "xi_hz_per_m",
];
const DRIVE_KEYS: [&str; 6] =
    ["omega_l_hz", "pump_power_w", "probe_power_w", "kappa_ex_hz", "probe_direction", "pump_all"];
const CHAIN_KEYS: [&str; 1] = ["coupling_j_hz"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Chain,
    Drive,
    Resonator(usize),
}

impl Section {
    fn keys(self) -> &'static [&'static str] {
        match self {
            Section::Chain => &CHAIN_KEYS,
            Section::Drive => &DRIVE_KEYS,
            Section::Resonator(_) => &RESONATOR_KEYS,
        }
    }
}

struct Entry {
    value: String,
    line: usize,
}

#[derive(Default)]
struct Table {
    header_line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Table {
    fn number(&self, key: &str) -> Result<f64, ConfigError> {
        let entry = self.entries.get(key).ok_or_else(|| err(self.header_line, Some(key), "missing required key"))?;
        parse_number(&entry.value).map_err(|m| err(entry.line, Some(key), m))
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        if self.entries.contains_key(key) {
            self.number(key)
        } else {
            Ok(default)
        }
    }
}

fn parse_number(raw: &str) -> std::result::Result<f64, String> {
    let v: f64 = raw.parse().map_err(|_| format!("`{raw}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{raw}` is not finite"))
    }
}

fn parse_section(name: &str, line: usize) -> Result<Section, ConfigError> {
    match name {
        "chain" => Ok(Section::Chain),
        "drive" => Ok(Section::Drive),
        _ => {
            let index = name
                .strip_prefix("resonator.")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|k| *k >= 1)
                .ok_or_else(|| err(line, None, format!("unknown section `[{name}]`")))?;
            Ok(Section::Resonator(index))
        }
    }
}

/// Parse a configuration document and validate the resulting chain.
pub fn parse_config(text: &str) -> Result<ChainConfig> {
    let tables = tokenize(text)?;
    build(&tables)
}

/// Read and parse a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ChainConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn tokenize(text: &str) -> Result<BTreeMap<Section, Table>, ConfigError> {
    let mut tables: BTreeMap<Section, Table> = BTreeMap::new();
    let mut current: Option<Section> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| err(line_no, None, "unterminated section header"))?.trim();
            let section = parse_section(name, line_no)?;
            if tables.contains_key(&section) {
                return Err(err(line_no, None, format!("section `[{name}]` appears twice")));
            }
            tables.insert(section, Table { header_line: line_no, entries: BTreeMap::new() });
            current = Some(section);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| err(line_no, None, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let section = current.ok_or_else(|| err(line_no, Some(key), "key outside of any section"))?;
        if !section.keys().contains(&key) {
            return Err(err(line_no, Some(key), "unknown key"));
        }
        let table = tables.get_mut(&section).expect("section registered on header");
        if table.entries.contains_key(key) {
            return Err(err(line_no, Some(key), "duplicate key"));
        }
        table.entries.insert(key.to_owned(), Entry { value: value.to_owned(), line: line_no });
    }
    Ok(tables)
}

fn build(tables: &BTreeMap<Section, Table>) -> Result<ChainConfig> {
    let mut resonators = Vec::new();
    for (section, table) in tables {
        if let Section::Resonator(index) = *section {
            if index != resonators.len() + 1 {
                return Err(err(
                    table.header_line,
                    None,
                    format!("resonator sections must be numbered 1..N without gaps; found {index}"),
                )
                .into());
            }
            resonators.push(resonator(table)?);
        }
    }
    if resonators.is_empty() {
        return Err(err(0, None, "no [resonator.k] sections").into());
    }

    let drive_table = tables.get(&Section::Drive).ok_or_else(|| err(0, None, "missing [drive] section"))?;
    let drive = drive(drive_table)?;

    let couplings = match tables.get(&Section::Chain) {
        Some(table) => match table.entries.get("coupling_j_hz") {
            Some(entry) => parse_list(&entry.value).map_err(|m| err(entry.line, Some("coupling_j_hz"), m))?,
            None if resonators.len() == 1 => Vec::new(),
            None => return Err(err(table.header_line, Some("coupling_j_hz"), "missing required key").into()),
        },
        None if resonators.len() == 1 => Vec::new(),
        None => return Err(err(0, Some("coupling_j_hz"), "missing [chain] section").into()),
    };
    if couplings.len() + 1 != resonators.len() {
        let line =
            tables.get(&Section::Chain).and_then(|t| t.entries.get("coupling_j_hz").map(|e| e.line)).unwrap_or(0);
        return Err(err(
            line,
            Some("coupling_j_hz"),
            format!(
                "expected {} values for {} resonators, got {}",
                resonators.len() - 1,
                resonators.len(),
                couplings.len()
            ),
        )
        .into());
    }

    let config = ChainConfig { resonators, couplings, drive };
    config.validate()?;
    Ok(config)
}

fn parse_list(raw: &str) -> std::result::Result<Vec<f64>, String> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(|v| parse_number(v.trim())).collect()
}

fn resonator(t: &Table) -> Result<ResonatorSpec, ConfigError> {
    Ok(ResonatorSpec {
        mass: t.number("mass_kg")?,
        omega_m: t.number("omega_m_hz")?,
        gamma_m: t.number("gamma_m_hz")?,
        omega_c: t.number("omega_c_hz")?,
        kappa_in: t.number("kappa_in_hz")?,
        radius: t.number("radius_m")?,
        refractive_index: t.number("refractive_index")?,
        dn_dlambda: t.number_or("dn_dlambda_per_m", 0.0)?,
        spin_rate: t.number("spin_rate_hz")?,
        xi: t.number("xi_hz_per_m")?,
    })
}

fn drive(t: &Table) -> Result<DriveSpec, ConfigError> {
    let direction = match t.entries.get("probe_direction") {
        Some(e) => e.value.parse::<ProbeDirection>().map_err(|m| err(e.line, Some("probe_direction"), m))?,
        None => ProbeDirection::Forward,
    };
    let pump_all = match t.entries.get("pump_all") {
        Some(e) => match e.value.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(err(e.line, Some("pump_all"), format!("expected `true` or `false`, got `{other}`"))),
        },
        None => true,
    };
    Ok(DriveSpec {
        omega_l: t.number("omega_l_hz")?,
        pump_power: t.number("pump_power_w")?,
        probe_power: t.number("probe_power_w")?,
        kappa_ex: t.number("kappa_ex_hz")?,
        direction,
        pump_all,
    })
}

/// Render a chain in the configuration format. Every number is written in
/// its shortest round-trip form, so `parse_config(&to_config_string(c)) == c`.
pub fn to_config_string(config: &ChainConfig) -> String {
    let mut out = String::new();
    if !config.couplings.is_empty() {
        let list: Vec<String> = config.couplings.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "[chain]\ncoupling_j_hz = {}\n", list.join(", "));
    }
    let d = &config.drive;
    let _ = writeln!(out, "[drive]");
    let _ = writeln!(out, "omega_l_hz = {}", fmt_f64(d.omega_l));
    let _ = writeln!(out, "pump_power_w = {}", fmt_f64(d.pump_power));
    let _ = writeln!(out, "probe_power_w = {}", fmt_f64(d.probe_power));
    let _ = writeln!(out, "kappa_ex_hz = {}", fmt_f64(d.kappa_ex));
    let _ = writeln!(out, "probe_direction = {}", d.direction.as_str());
    let _ = writeln!(out, "pump_all = {}", d.pump_all);
    for (k, r) in config.resonators.iter().enumerate() {
        let _ = writeln!(out, "\n[resonator.{}]", k + 1);
        let fields = [
            r.mass,
            r.omega_m,
            r.gamma_m,
            r.omega_c,
            r.kappa_in,
            r.radius,
            r.refractive_index,
            r.dn_dlambda,
            r.spin_rate,
            r.xi,
        ];
        for (key, value) in RESONATOR_KEYS.iter().zip(fields) {
            let _ = writeln!(out, "{key} = {}", fmt_f64(value));
        }
    }
    out
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
