//! Flat `key = value` configuration with `[section]` headers.
//!
//! Flags and file entries share one key space; flag spellings use `-` where
//! keys use `_`. Values are normalized on entry so the canonical text, and
//! therefore the config hash, does not depend on spelling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{ConstraintSpec, FeasibleSpec};
use crate::sets::Exponent;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    U64,
    Count,
    Real,
    Exponent,
    Word,
    CountList,
    RealList,
    Path,
}

/// `(section, key, kind)` for every accepted key.
const KEYS: &[(&str, &str, Kind)] = &[
    ("run", "seed", Kind::U64),
    ("run", "trials", Kind::Count),
    ("run", "threads", Kind::Count),
    ("run", "out", Kind::Path),
    ("run", "bootstrap", Kind::Count),
    ("dims", "n", Kind::Count),
    ("dims", "m", Kind::Count),
    ("dims", "d", Kind::Count),
    ("dims", "big_n", Kind::Count),
    ("dims", "n_list", Kind::CountList),
    ("sets", "q", Kind::Exponent),
    ("sets", "set_q", Kind::Word),
    ("sets", "set_e", Kind::Word),
    ("sets", "blocks", Kind::CountList),
    ("sets", "k", Kind::Real),
    ("sets", "radius", Kind::Real),
    ("solver", "restarts", Kind::Count),
    ("solver", "steps", Kind::Count),
    ("solver", "h", Kind::Real),
    ("grid", "k_grid", Kind::RealList),
    ("grid", "delta_grid", Kind::RealList),
];

/// Keys left out of the canonical text: they do not affect results.
const NON_SEMANTIC: &[&str] = &["threads", "out"];

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn lookup(key: &str) -> Option<(&'static str, &'static str, Kind)> {
    KEYS.iter().copied().find(|(_, k, _)| *k == key)
}

fn parse_real(key: &str, s: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => config_err(format!("{key}: '{s}' is not a finite number")),
    }
}

fn parse_count(key: &str, s: &str) -> Result<usize> {
    s.parse::<usize>()
        .or_else(|_| config_err(format!("{key}: '{s}' is not a nonnegative integer")))
}

fn normalize(key: &str, kind: Kind, raw: &str) -> Result<String> {
    let s = raw.trim();
    if s.is_empty() {
        return config_err(format!("{key}: empty value"));
    }
    let list = |f: &dyn Fn(&str) -> Result<String>| -> Result<String> {
        let parts = s
            .split(',')
            .map(|p| f(p.trim()))
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.join(","))
    };
    match kind {
        Kind::U64 => s
            .parse::<u64>()
            .map(|x| x.to_string())
            .or_else(|_| config_err(format!("{key}: '{s}' is not a 64-bit unsigned integer"))),
        Kind::Count => parse_count(key, s).map(|x| x.to_string()),
        Kind::Real => parse_real(key, s).map(|x| x.to_string()),
        Kind::Exponent => match s.parse::<Exponent<f64>>() {
            Ok(q) => Ok(q.to_string()),
            Err(_) => config_err(format!("{key}: '{s}' is not an exponent in [2, inf]")),
        },
        Kind::Word => Ok(s.to_ascii_lowercase()),
        Kind::CountList => list(&|p| parse_count(key, p).map(|x| x.to_string())),
        Kind::RealList => list(&|p| parse_real(key, p).map(|x| x.to_string())),
        Kind::Path => Ok(s.to_string()),
    }
}

/// Merged configuration: file entries overlaid by flags, values normalized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
    /// The seed was drawn from system entropy rather than supplied.
    pub seed_from_entropy: bool,
}

impl Settings {
    /// Parses config text. Unknown keys, keys outside their section and
    /// repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut settings = Settings::default();
        let mut section: Option<String> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let at = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !KEYS.iter().any(|(s, _, _)| *s == name) {
                    return Err(at(format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(at(format!("expected 'key = value', found '{line}'")));
            };
            let key = k.trim().replace('-', "_");
            let Some((sec, canon, _)) = lookup(&key) else {
                return Err(at(format!("unknown key '{}'", k.trim())));
            };
            match section.as_deref() {
                Some(s) if s == sec => {}
                Some(s) => return Err(at(format!("key '{canon}' belongs in [{sec}], not [{s}]"))),
                None => return Err(at(format!("key '{canon}' appears before any section; expected [{sec}]"))),
            }
            if settings.values.contains_key(canon) {
                return Err(at(format!("key '{canon}' is set twice")));
            }
            settings.set(canon, v).map_err(|e| match e {
                Error::Config(msg) => at(msg),
                other => other,
            })?;
        }
        Ok(settings)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets `key`, replacing any previous value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let Some((_, canon, kind)) = lookup(&key) else {
            return config_err(format!("unknown key '{key}'"));
        };
        self.values.insert(canon, normalize(canon, kind, value)?);
        Ok(())
    }

    pub fn set_default(&mut self, key: &str, value: &str) -> Result<()> {
        if !self.has(key) {
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing required setting '{key}' (flag --{})", key.replace('_', "-"))))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        Ok(self.require(key)?.parse().expect("normalized"))
    }

    pub fn count(&self, key: &str) -> Result<usize> {
        Ok(self.require(key)?.parse().expect("normalized"))
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        Ok(self.require(key)?.parse().expect("normalized"))
    }

    pub fn exponent(&self) -> Result<Exponent<f64>> {
        Ok(self.require("q")?.parse().expect("normalized"))
    }

    pub fn counts(&self, key: &str) -> Result<Vec<usize>> {
        Ok(self.require(key)?.split(',').map(|p| p.parse().expect("normalized")).collect())
    }

    pub fn reals(&self, key: &str) -> Result<Vec<f64>> {
        Ok(self.require(key)?.split(',').map(|p| p.parse().expect("normalized")).collect())
    }

    pub fn feasible(&self) -> Result<FeasibleSpec> {
        let word = self.require("set_q")?;
        if let Some(rest) = word.strip_prefix("lattice:") {
            let bounds: Vec<&str> = rest.split(':').collect();
            if let [lo, hi] = bounds[..] {
                if let (Ok(lo), Ok(hi)) = (lo.parse::<i64>(), hi.parse::<i64>()) {
                    return Ok(FeasibleSpec::Lattice { lo, hi });
                }
            }
            return config_err(format!("set_q: expected lattice:LO:HI, found '{word}'"));
        }
        match word {
            "hypercube" | "cube" => Ok(FeasibleSpec::Hypercube),
            "sphere" => Ok(FeasibleSpec::Sphere),
            "basis" => Ok(FeasibleSpec::Basis),
            other => config_err(format!(
                "set_q: unknown set '{other}' (expected hypercube, sphere, basis or lattice:LO:HI)"
            )),
        }
    }

    pub fn constraint(&self) -> Result<ConstraintSpec> {
        match self.require("set_e")? {
            "zero" => Ok(ConstraintSpec::Zero),
            "at-least" | "at_least" => Ok(ConstraintSpec::AtLeast(self.real("k")?)),
            "at-most" | "at_most" => Ok(ConstraintSpec::AtMost(self.real("k")?)),
            "ball" => Ok(ConstraintSpec::Ball(self.real("radius")?)),
            "blocks" => Ok(ConstraintSpec::Blocks {
                sizes: self.counts("blocks")?,
                k: self.real("k")?,
            }),
            other => config_err(format!(
                "set_e: unknown set '{other}' (expected zero, at-least, at-most, ball or blocks)"
            )),
        }
    }

    /// Sorted `key = value` lines of the semantic keys, preceded by the command.
    pub fn canonical(&self, command: &str) -> String {
        let mut text = format!("command = {command}\n");
        for (k, v) in &self.values {
            if !NON_SEMANTIC.contains(k) {
                let _ = writeln!(text, "{k} = {v}");
            }
        }
        text
    }

    /// First 16 hex digits of the SHA-256 of [`Settings::canonical`].
    pub fn hash(&self, command: &str) -> String {
        Sha256::digest(self.canonical(command).as_bytes())
            .iter()
            .take(8)
            .fold(String::new(), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    /// The settings as a loadable config file, grouped by section.
    /// `threads` and `out` are included only when `all` is set.
    pub fn to_config_text(&self, all: bool) -> String {
        let mut text = String::new();
        let mut current = "";
        for (sec, key, _) in KEYS {
            if !all && NON_SEMANTIC.contains(key) {
                continue;
            }
            if let Some(v) = self.values.get(key) {
                if *sec != current {
                    let _ = writeln!(text, "[{sec}]");
                    current = sec;
                }
                let _ = writeln!(text, "{key} = {v}");
            }
        }
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let s = Settings::parse("# comment\n[run]\nseed = 7\n[dims]\nn = 8\nm=8\n[sets]\nq = Inf\nset-q = hypercube\n")
            .unwrap();
        assert_eq!(s.u64("seed").unwrap(), 7);
        assert_eq!(s.count("n").unwrap(), 8);
        assert_eq!(s.get("q"), Some("inf"));
        assert_eq!(s.feasible().unwrap(), FeasibleSpec::Hypercube);
    }

    #[test]
    fn rejects_unknown_and_misplaced_keys() {
        let err = Settings::parse("[run]\ncolour = red\n").unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        assert!(Settings::parse("[dims]\nseed = 1\n").is_err());
        assert!(Settings::parse("seed = 1\n").is_err());
        assert!(Settings::parse("[nope]\n").is_err());
        assert!(Settings::parse("[run]\nseed = 1\nseed = 2\n").is_err());
        assert!(Settings::parse("[run]\nseed = -1\n").is_err());
    }

    #[test]
    fn canonical_form_ignores_spelling_and_non_semantic_keys() {
        let a = Settings::parse("[sets]\nq = 4.0\n[run]\nthreads = 2\nout = x\n").unwrap();
        let mut b = Settings::default();
        b.set("q", "4").unwrap();
        assert_eq!(a.canonical("margin"), b.canonical("margin"));
        assert_eq!(a.hash("margin"), b.hash("margin"));
        assert_ne!(a.hash("margin"), a.hash("concentrate"));
        assert_eq!(a.hash("margin").len(), 16);
    }

    #[test]
    fn config_text_round_trips() {
        let mut s = Settings::default();
        for (k, v) in [("seed", "3"), ("n", "5"), ("delta_grid", "0, 0.5,1"), ("set_e", "blocks"), ("blocks", "2,3")] {
            s.set(k, v).unwrap();
        }
        let again = Settings::parse(&s.to_config_text(true)).unwrap();
        assert_eq!(again.values, s.values);
        assert_eq!(s.reals("delta_grid").unwrap(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn set_specs() {
        let mut s = Settings::default();
        s.set("set_e", "blocks").unwrap();
        s.set("blocks", "4,3").unwrap();
        assert!(s.constraint().is_err());
        s.set("k", "0.5").unwrap();
        assert_eq!(s.constraint().unwrap(), ConstraintSpec::Blocks { sizes: vec![4, 3], k: 0.5 });
        s.set("set_q", "lattice:-1:1").unwrap();
        assert_eq!(s.feasible().unwrap(), FeasibleSpec::Lattice { lo: -1, hi: 1 });
        s.set("set_q", "torus").unwrap();
        assert!(s.feasible().is_err());
    }
}
