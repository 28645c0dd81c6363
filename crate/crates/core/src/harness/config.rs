//! Sectioned `key = value` scenario files.
//!
//! ```text
//! # comment
//! [scenario]
//! id = collapse
//! tier = pde
//! t_end = 0.5
//!
//! [model]
//! law = power
//! m = 3
//!
//! [sweep]
//! key = model.m
//! values = 10, 20, 40
//! ```
//!
//! Every key belongs to a section; the full key list with defaults is in
//! [`SCHEMA`]. Unknown sections and keys are rejected with their line.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Blob,
    HardSphere,
    Pde,
    Stefan,
    EnergyStudy,
}

impl Tier {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "blob" => Tier::Blob,
            "hard_sphere" | "hardsphere" => Tier::HardSphere,
            "pde" => Tier::Pde,
            "stefan" => Tier::Stefan,
            "energy" | "energy_study" => Tier::EnergyStudy,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Tier::Blob => "blob",
            Tier::HardSphere => "hard_sphere",
            Tier::Pde => "pde",
            Tier::Stefan => "stefan",
            Tier::EnergyStudy => "energy",
        }
    }

    fn uses(&self, section: &str) -> bool {
        match section {
            "scenario" | "model" | "initial" | "sweep" => true,
            "particles" => matches!(self, Tier::Blob | Tier::HardSphere),
            "grid" => true,
            "pde" => matches!(self, Tier::Pde | Tier::Stefan | Tier::EnergyStudy),
            _ => false,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Text,
    /// One of the listed words.
    Choice(&'static [&'static str]),
    Real,
    Positive,
    NonNegative,
    Count,
    Seed,
    RealList,
    TextList,
}

/// `(section, key, kind, default)`; `None` marks a required key.
type Entry = (&'static str, &'static str, Kind, Option<&'static str>);

const LAWS: &[&str] = &["power", "hard_sphere", "reciprocal", "log"];

/// Every recognised key with its default.
pub const SCHEMA: &[(&str, &str, &str)] = &[
    ("scenario", "id", "(required)"),
    ("scenario", "tier", "(required) blob | hard_sphere | pde | stefan | energy"),
    ("scenario", "t_end", "1.0"),
    ("scenario", "seed", "0"),
    ("scenario", "samples", "(none) comma-separated times in (0, t_end)"),
    ("scenario", "outputs", "tier default"),
    ("model", "law", "power | hard_sphere | reciprocal | log (power)"),
    ("model", "m", "3"),
    ("model", "alpha", "0.1"),
    ("model", "sigma", "1"),
    ("model", "eta", "1"),
    ("model", "interaction", "1 (weight of the attractive term)"),
    ("particles", "n", "200"),
    ("particles", "delta", "0.05"),
    ("particles", "mollifier", "bump | indicator (bump)"),
    ("particles", "dt", "auto: 0.2δ²/max(1, f''(μ)μ) for blob, 1e-3 for hard_sphere"),
    ("particles", "integrator", "heun | euler (heun)"),
    ("particles", "eval_refine", "8"),
    ("particles", "diag_every", "1"),
    ("grid", "cells", "400"),
    ("grid", "left", "-2"),
    ("grid", "right", "2"),
    ("grid", "bc", "no_flux | whole_line (no_flux)"),
    ("pde", "eps", "1"),
    ("pde", "scaling", "micro | stefan | hele_shaw (micro)"),
    ("pde", "potential", "free | robin | obstacle | eta_drift (free)"),
    ("pde", "robin_a", "0"),
    ("pde", "robin_b", "1"),
    ("pde", "eta_w", "0"),
    ("pde", "scheme", "explicit | semi_implicit (explicit)"),
    ("pde", "dt_safety", "0.5"),
    ("pde", "dt_max", "none"),
    ("pde", "diag_every", "1"),
    ("pde", "functional", "j_eps | g_eps | g_eta_eps (g_eps), energy tier only"),
    ("initial", "kind", "bump | plateau | two_bumps | empirical | sampled (bump)"),
    ("initial", "center", "0"),
    ("initial", "width", "1"),
    ("initial", "height", "1"),
    ("initial", "separation", "1.5 (two_bumps: distance between centers)"),
    ("initial", "value", "theta (plateau height; a number or `theta`)"),
    ("initial", "a", "-0.5"),
    ("initial", "b", "0.5"),
    ("initial", "file", "(empirical: one position per line)"),
    ("initial", "density", "bump | plateau | two_bumps (sampled)"),
    ("sweep", "key", "section.key of a numeric parameter"),
    ("sweep", "values", "comma-separated, sorted"),
];

fn entries() -> Vec<Entry> {
    use Kind::*;
    vec![
        ("scenario", "id", Text, None),
        ("scenario", "tier", Choice(&["blob", "hard_sphere", "hardsphere", "pde", "stefan", "energy", "energy_study"]), None),
        ("scenario", "t_end", Positive, Some("1.0")),
        ("scenario", "seed", Seed, Some("0")),
        ("scenario", "samples", RealList, Some("")),
        ("scenario", "outputs", TextList, Some("")),
        ("model", "law", Choice(LAWS), Some("power")),
        ("model", "m", Positive, Some("3")),
        ("model", "alpha", Positive, Some("0.1")),
        ("model", "sigma", Positive, Some("1")),
        ("model", "eta", Positive, Some("1")),
        ("model", "interaction", Real, Some("1")),
        ("particles", "n", Count, Some("200")),
        ("particles", "delta", Positive, Some("0.05")),
        ("particles", "mollifier", Choice(&["bump", "indicator"]), Some("bump")),
        ("particles", "dt", Text, Some("auto")),
        ("particles", "integrator", Choice(&["heun", "euler"]), Some("heun")),
        ("particles", "eval_refine", Count, Some("8")),
        ("particles", "diag_every", Count, Some("1")),
        ("grid", "cells", Count, Some("400")),
        ("grid", "left", Real, Some("-2")),
        ("grid", "right", Real, Some("2")),
        ("grid", "bc", Choice(&["no_flux", "whole_line"]), Some("no_flux")),
        ("pde", "eps", Positive, Some("1")),
        ("pde", "scaling", Choice(&["micro", "stefan", "hele_shaw"]), Some("micro")),
        ("pde", "potential", Choice(&["free", "robin", "obstacle", "eta_drift"]), Some("free")),
        ("pde", "robin_a", NonNegative, Some("0")),
        ("pde", "robin_b", NonNegative, Some("1")),
        ("pde", "eta_w", Real, Some("0")),
        ("pde", "scheme", Choice(&["explicit", "semi_implicit"]), Some("explicit")),
        ("pde", "dt_safety", Positive, Some("0.5")),
        ("pde", "dt_max", Text, Some("none")),
        ("pde", "diag_every", Count, Some("1")),
        ("pde", "functional", Choice(&["j_eps", "g_eps", "g_eta_eps"]), Some("g_eps")),
        ("initial", "kind", Choice(&["bump", "plateau", "two_bumps", "empirical", "sampled"]), Some("bump")),
        ("initial", "center", Real, Some("0")),
        ("initial", "width", Positive, Some("1")),
        ("initial", "height", Positive, Some("1")),
        ("initial", "separation", Positive, Some("1.5")),
        ("initial", "value", Text, Some("theta")),
        ("initial", "a", Real, Some("-0.5")),
        ("initial", "b", Real, Some("0.5")),
        ("initial", "file", Text, Some("")),
        ("initial", "density", Choice(&["bump", "plateau", "two_bumps"]), Some("bump")),
    ]
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        kind: "config".into(),
        line,
        message: message.into(),
    }
}

fn parse_real(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn check_kind(kind: Kind, value: &str) -> std::result::Result<(), String> {
    let bad = |what: &str| Err(format!("expected {what}, got `{value}`"));
    match kind {
        Kind::Text => Ok(()),
        Kind::Choice(opts) => {
            if opts.contains(&value) {
                Ok(())
            } else {
                Err(format!("expected one of {}, got `{value}`", opts.join(" | ")))
            }
        }
        Kind::Real => parse_real(value).map(|_| ()).map_or_else(|| bad("a finite number"), Ok),
        Kind::Positive => match parse_real(value) {
            Some(v) if v > 0.0 => Ok(()),
            _ => bad("a positive number"),
        },
        Kind::NonNegative => match parse_real(value) {
            Some(v) if v >= 0.0 => Ok(()),
            _ => bad("a nonnegative number"),
        },
        Kind::Count => match value.parse::<usize>() {
            Ok(v) if v > 0 => Ok(()),
            _ => bad("a positive integer"),
        },
        Kind::Seed => value.parse::<u64>().map(|_| ()).map_err(|_| format!("expected an unsigned integer, got `{value}`")),
        Kind::RealList => {
            for item in split_list(value) {
                if parse_real(item).is_none() {
                    return Err(format!("expected a list of numbers, got `{item}`"));
                }
            }
            Ok(())
        }
        Kind::TextList => Ok(()),
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

/// Parameter sweep over one numeric key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<f64>,
}

/// Fully resolved scenario: every schema key for the tier has a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub tier: Tier,
    /// `section.key → value` including defaults.
    pub params: BTreeMap<String, String>,
    pub sweep: Option<Sweep>,
}

impl Scenario {
    pub fn get(&self, key: &str) -> Result<&str> {
        self.params
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::config(format!("scenario {}: missing key {key}", self.id)))
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        let v = self.get(key)?;
        parse_real(v).ok_or_else(|| Error::config(format!("{key}: expected a number, got `{v}`")))
    }

    pub fn count(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        v.parse().map_err(|_| Error::config(format!("{key}: expected an integer, got `{v}`")))
    }

    pub fn seed(&self) -> Result<u64> {
        let v = self.get("scenario.seed")?;
        v.parse().map_err(|_| Error::config(format!("scenario.seed: expected an integer, got `{v}`")))
    }

    pub fn reals(&self, key: &str) -> Result<Vec<f64>> {
        split_list(self.get(key)?)
            .map(|s| parse_real(s).ok_or_else(|| Error::config(format!("{key}: bad number `{s}`"))))
            .collect()
    }

    /// Optional number where `auto`/`none` mean absent.
    pub fn optional_real(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key)? {
            "auto" | "none" | "" => Ok(None),
            v => match parse_real(v) {
                Some(x) if x > 0.0 => Ok(Some(x)),
                _ => Err(Error::config(format!("{key}: expected a positive number or auto, got `{v}`"))),
            },
        }
    }

    /// Copy with one parameter replaced; `key` must already exist.
    pub fn with_param(&self, key: &str, value: f64) -> Result<Scenario> {
        if !self.params.contains_key(key) {
            return Err(Error::config(format!("unknown parameter {key}")));
        }
        let mut s = self.clone();
        s.params.insert(key.to_string(), format_value(value));
        Ok(s)
    }

    /// One child per sweep value, with the id suffixed by the value.
    pub fn children(&self) -> Result<Vec<Scenario>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![self.clone()]);
        };
        sweep
            .values
            .iter()
            .map(|&v| {
                let mut c = self.with_param(&sweep.key, v)?;
                c.id = format!("{}_{}", self.id, format_value(v));
                c.sweep = None;
                Ok(c)
            })
            .collect()
    }
}

fn format_value(v: f64) -> String {
    format!("{v}")
}

/// Parses a scenario file and fills in defaults.
pub fn parse_config(text: &str) -> Result<Scenario> {
    let schema = entries();
    let mut raw: BTreeMap<String, (String, usize)> = BTreeMap::new();
    let mut section: Option<String> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_error(lineno, "unterminated section header"))?
                .trim();
            if !["scenario", "model", "particles", "grid", "pde", "initial", "sweep"].contains(&name) {
                return Err(parse_error(lineno, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_error(lineno, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .as_deref()
            .ok_or_else(|| parse_error(lineno, format!("key `{key}` outside any section")))?;
        if sec == "sweep" {
            if key != "key" && key != "values" {
                return Err(parse_error(lineno, format!("unknown key `{key}` in [sweep]")));
            }
        } else {
            let entry = schema
                .iter()
                .find(|e| e.0 == sec && e.1 == key)
                .ok_or_else(|| parse_error(lineno, format!("unknown key `{key}` in [{sec}]")))?;
            check_kind(entry.2, value).map_err(|m| parse_error(lineno, format!("{sec}.{key}: {m}")))?;
        }
        let full = format!("{sec}.{key}");
        if raw.contains_key(&full) {
            return Err(parse_error(lineno, format!("duplicate key {full}")));
        }
        raw.insert(full, (value.to_string(), lineno));
    }

    let required = |k: &str| -> Result<(String, usize)> {
        raw.get(k)
            .cloned()
            .ok_or_else(|| parse_error(0, format!("missing required key {k}")))
    };
    let (id, _) = required("scenario.id")?;
    if id.is_empty() || id.contains(['/', '\\']) {
        return Err(parse_error(raw["scenario.id"].1, "scenario.id must be a plain non-empty name"));
    }
    let (tier_s, tier_line) = required("scenario.tier")?;
    let tier = Tier::parse(&tier_s).ok_or_else(|| parse_error(tier_line, format!("unknown tier `{tier_s}`")))?;
    for (k, (_, line)) in &raw {
        let sec = k.split('.').next().unwrap_or("");
        if !tier.uses(sec) {
            return Err(parse_error(*line, format!("section [{sec}] does not apply to the {tier} tier")));
        }
    }

    let mut params = BTreeMap::new();
    for (sec, key, _, default) in &schema {
        if !tier.uses(sec) {
            continue;
        }
        let full = format!("{sec}.{key}");
        let value = match raw.get(&full) {
            Some((v, _)) => v.clone(),
            None => match default {
                Some(d) => d.to_string(),
                None => return Err(parse_error(0, format!("missing required key {full}"))),
            },
        };
        params.insert(full, value);
    }

    let sweep = match (raw.get("sweep.key"), raw.get("sweep.values")) {
        (None, None) => None,
        (Some((key, line)), Some((values, vline))) => {
            let kind = schema
                .iter()
                .find(|e| format!("{}.{}", e.0, e.1) == *key)
                .map(|e| e.2)
                .ok_or_else(|| parse_error(*line, format!("sweep key `{key}` is not a parameter")))?;
            if !matches!(kind, Kind::Real | Kind::Positive | Kind::NonNegative | Kind::Count | Kind::Seed)
                && !matches!(key.as_str(), "particles.dt" | "pde.dt_max")
            {
                return Err(parse_error(*line, format!("sweep key `{key}` is not numeric")));
            }
            if !params.contains_key(key) {
                return Err(parse_error(*line, format!("sweep key `{key}` does not apply to the {tier} tier")));
            }
            let mut vals = Vec::new();
            for item in split_list(values) {
                let v = parse_real(item).ok_or_else(|| parse_error(*vline, format!("sweep value `{item}` is not finite")))?;
                check_kind(kind, item).map_err(|m| parse_error(*vline, format!("{key}: {m}")))?;
                vals.push(v);
            }
            if vals.is_empty() {
                return Err(parse_error(*vline, "sweep needs at least one value"));
            }
            if vals.windows(2).any(|w| !(w[0] < w[1]) && !(w[0] > w[1])) || !is_sorted(&vals) {
                return Err(parse_error(*vline, "sweep values must be sorted and distinct"));
            }
            Some(Sweep { key: key.clone(), values: vals })
        }
        (Some((_, line)), None) | (None, Some((_, line))) => {
            return Err(parse_error(*line, "a sweep needs both `key` and `values`"));
        }
    };

    let s = Scenario { id, tier, params, sweep };
    validate(&s, &raw)?;
    Ok(s)
}

fn is_sorted(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1]) || v.windows(2).all(|w| w[0] > w[1])
}

/// Cross-key checks, reported at the line of the offending key.
fn validate(s: &Scenario, raw: &BTreeMap<String, (String, usize)>) -> Result<()> {
    let line = |k: &str| raw.get(k).map_or(0, |(_, l)| *l);
    let t_end = s.real("scenario.t_end")?;
    for t in s.reals("scenario.samples")? {
        if !(t > 0.0 && t < t_end) {
            return Err(parse_error(line("scenario.samples"), format!("sample time {t} outside (0, t_end)")));
        }
    }
    if s.tier != Tier::EnergyStudy && s.real("grid.right")? <= s.real("grid.left")? {
        return Err(parse_error(line("grid.right"), "grid.right must exceed grid.left"));
    }
    if let Some(dt) = s.params.get("particles.dt") {
        if dt != "auto" && !matches!(parse_real(dt), Some(v) if v > 0.0) {
            return Err(parse_error(line("particles.dt"), format!("particles.dt: expected a positive number or auto, got `{dt}`")));
        }
    }
    if let Some(dt) = s.params.get("pde.dt_max") {
        if dt != "none" && !matches!(parse_real(dt), Some(v) if v > 0.0) {
            return Err(parse_error(line("pde.dt_max"), format!("pde.dt_max: expected a positive number or none, got `{dt}`")));
        }
    }
    if let Some(v) = s.params.get("pde.dt_safety") {
        if parse_real(v).is_some_and(|x| x > 1.0) {
            return Err(parse_error(line("pde.dt_safety"), "pde.dt_safety must lie in (0, 1]"));
        }
    }
    if s.get("initial.kind")? == "empirical" && s.get("initial.file")?.is_empty() {
        return Err(parse_error(line("initial.kind"), "empirical initial data needs initial.file"));
    }
    if s.get("initial.kind")? == "sampled" && !matches!(s.tier, Tier::Blob | Tier::HardSphere) {
        return Err(parse_error(line("initial.kind"), "sampled initial data applies to particle tiers"));
    }
    if s.get("initial.kind")? == "empirical" && !matches!(s.tier, Tier::Blob | Tier::HardSphere) {
        return Err(parse_error(line("initial.kind"), "empirical initial data applies to particle tiers"));
    }
    let value = s.get("initial.value")?;
    if value != "theta" && parse_real(value).is_none_or(|v| v < 0.0) {
        return Err(parse_error(line("initial.value"), format!("initial.value: expected `theta` or a nonnegative number, got `{value}`")));
    }
    if s.real("initial.b")? <= s.real("initial.a")? {
        return Err(parse_error(line("initial.b"), "initial.b must exceed initial.a"));
    }
    Ok(())
}
