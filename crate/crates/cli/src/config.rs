//! INI-style run configuration: `[section]` headers, `key = value` lines,
//! `#` or `;` comments. Physical quantities carry a unit suffix and are
//! converted to atomic units on read.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use tdcis::units;
use tdcis::{Error, Result};

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed key/value text with access tracking, so that keys nobody asked
/// for can be reported as typos.
#[derive(Debug)]
pub struct Ini {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
    used: std::cell::RefCell<BTreeSet<(String, String)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Energy,
    Time,
    Length,
    Intensity,
    Field,
}

impl Dim {
    fn name(self) -> &'static str {
        match self {
            Dim::Energy => "energy (eV, hartree, au)",
            Dim::Time => "time (fs, as, au)",
            Dim::Length => "length (bohr, au, nm, um, mm, cm)",
            Dim::Intensity => "intensity (W/cm2, au)",
            Dim::Field => "field strength (au, V/cm)",
        }
    }
}

/// Factor that takes a value in `unit` to atomic units.
fn unit_factor(dim: Dim, unit: &str) -> Option<f64> {
    let u = unit.to_ascii_lowercase();
    Some(match (dim, u.as_str()) {
        (Dim::Energy, "ev") => 1.0 / units::HARTREE_EV,
        (Dim::Energy, "hartree" | "au" | "eh") => 1.0,
        (Dim::Time, "fs") => 1.0 / units::AU_TIME_FS,
        (Dim::Time, "as") => 1e-3 / units::AU_TIME_FS,
        (Dim::Time, "au") => 1.0,
        (Dim::Length, "bohr" | "au") => 1.0,
        (Dim::Length, "nm") => 1e-7 / units::BOHR_CM,
        (Dim::Length, "um") => 1e-4 / units::BOHR_CM,
        (Dim::Length, "mm") => 1e-1 / units::BOHR_CM,
        (Dim::Length, "cm") => 1.0 / units::BOHR_CM,
        (Dim::Intensity, "w/cm2" | "w/cm^2") => 1.0 / units::AU_INTENSITY_WCM2,
        (Dim::Intensity, "au") => 1.0,
        (Dim::Field, "au") => 1.0,
        (Dim::Field, "v/cm") => 1.0 / 5.14220674763e9,
        _ => return None,
    })
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current = String::from("run");
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Parse { line: line_no, msg: "unterminated section header".into() })?
                    .trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    return Err(Error::Parse { line: line_no, msg: format!("bad section name '{name}'") });
                }
                current = name.to_ascii_lowercase();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: line_no, msg: format!("expected key = value, found '{line}'") })?;
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(Error::Parse { line: line_no, msg: "empty key".into() });
            }
            let entry = Entry { value: value.trim().to_string(), line: line_no };
            if sections.entry(current.clone()).or_default().insert(key.clone(), entry).is_some() {
                return Err(Error::Parse { line: line_no, msg: format!("duplicate key '{key}' in [{current}]") });
            }
        }
        Ok(Self { sections, used: Default::default() })
    }

    pub fn section_names(&self) -> impl Iterator<Item = &String> {
        self.sections.keys()
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        let e = self.sections.get(section)?.get(key)?;
        self.used.borrow_mut().insert((section.to_string(), key.to_string()));
        Some(e)
    }

    fn err(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> Error {
        match self.sections.get(section).and_then(|s| s.get(key)) {
            Some(e) => Error::Parse { line: e.line, msg: format!("[{section}] {key}: {msg}") },
            None => Error::Config(format!("[{section}] {key}: {msg}")),
        }
    }

    pub fn str_opt(&self, section: &str, key: &str) -> Option<String> {
        self.entry(section, key).map(|e| e.value.clone())
    }

    pub fn str(&self, section: &str, key: &str) -> Result<String> {
        self.str_opt(section, key).ok_or_else(|| self.err(section, key, "missing"))
    }

    pub fn choice(&self, section: &str, key: &str, allowed: &[&str], default: Option<&str>) -> Result<String> {
        let v = match (self.str_opt(section, key), default) {
            (Some(v), _) => v.to_ascii_lowercase(),
            (None, Some(d)) => return Ok(d.to_string()),
            (None, None) => return Err(self.err(section, key, "missing")),
        };
        if allowed.contains(&v.as_str()) {
            Ok(v)
        } else {
            Err(self.err(section, key, format!("'{v}' is not one of {}", allowed.join(", "))))
        }
    }

    fn number(&self, section: &str, key: &str, text: &str) -> Result<f64> {
        let x: f64 = text.parse().map_err(|_| self.err(section, key, format!("'{text}' is not a number")))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(self.err(section, key, "must be finite"))
        }
    }

    /// Dimensionless number.
    pub fn f64_opt(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => {
                let v = e.value.clone();
                if v.split_whitespace().count() != 1 {
                    return Err(self.err(section, key, "expected a single dimensionless number"));
                }
                self.number(section, key, &v).map(Some)
            }
        }
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(section, key)?.unwrap_or(default))
    }

    pub fn usize_opt(&self, section: &str, key: &str) -> Result<Option<usize>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => {
                let v = e.value.clone();
                v.parse::<usize>().map(Some).map_err(|_| self.err(section, key, format!("'{v}' is not a count")))
            }
        }
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<usize> {
        self.usize_opt(section, key)?.ok_or_else(|| self.err(section, key, "missing"))
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        Ok(self.usize_opt(section, key)?.unwrap_or(default))
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.str_opt(section, key).map(|v| v.to_ascii_lowercase()) {
            None => Ok(default),
            Some(v) if v == "true" || v == "yes" || v == "on" => Ok(true),
            Some(v) if v == "false" || v == "no" || v == "off" => Ok(false),
            Some(v) => Err(self.err(section, key, format!("'{v}' is not a boolean"))),
        }
    }

    fn quantity_text(&self, section: &str, key: &str, text: &str, dim: Dim) -> Result<f64> {
        let mut parts = text.split_whitespace();
        let (num, unit) = (parts.next().unwrap_or(""), parts.next());
        if parts.next().is_some() {
            return Err(self.err(section, key, format!("expected '<number> <unit>', found '{text}'")));
        }
        let unit = unit.ok_or_else(|| self.err(section, key, format!("needs an explicit unit of {}", dim.name())))?;
        let factor =
            unit_factor(dim, unit).ok_or_else(|| self.err(section, key, format!("'{unit}' is not a unit of {}", dim.name())))?;
        Ok(self.number(section, key, num)? * factor)
    }

    /// Quantity with a unit suffix, returned in atomic units.
    pub fn quantity_opt(&self, section: &str, key: &str, dim: Dim) -> Result<Option<f64>> {
        match self.str_opt(section, key) {
            None => Ok(None),
            Some(v) => self.quantity_text(section, key, &v, dim).map(Some),
        }
    }

    pub fn quantity(&self, section: &str, key: &str, dim: Dim) -> Result<f64> {
        self.quantity_opt(section, key, dim)?.ok_or_else(|| self.err(section, key, "missing"))
    }

    /// Whitespace-separated list sharing one trailing unit, e.g.
    /// `1e13 2e13 5e13 W/cm2`.
    pub fn quantity_list(&self, section: &str, key: &str, dim: Dim) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.str_opt(section, key) else { return Ok(None) };
        let mut parts: Vec<&str> = v.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        let unit = parts.pop().ok_or_else(|| self.err(section, key, "empty list"))?;
        if parts.is_empty() {
            return Err(self.err(section, key, format!("needs values followed by a unit of {}", dim.name())));
        }
        let factor =
            unit_factor(dim, unit).ok_or_else(|| self.err(section, key, format!("'{unit}' is not a unit of {}", dim.name())))?;
        parts.iter().map(|p| self.number(section, key, p).map(|x| x * factor)).collect::<Result<Vec<_>>>().map(Some)
    }

    pub fn f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.str_opt(section, key) else { return Ok(None) };
        let items: Vec<&str> = v.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            return Err(self.err(section, key, "empty list"));
        }
        items.iter().map(|p| self.number(section, key, p)).collect::<Result<Vec<_>>>().map(Some)
    }

    /// Every key that no accessor asked for, as a config error.
    pub fn reject_unknown(&self) -> Result<()> {
        let used = self.used.borrow();
        for (s, keys) in &self.sections {
            for (k, e) in keys {
                if !used.contains(&(s.clone(), k.clone())) {
                    return Err(Error::Parse { line: e.line, msg: format!("unknown key '{k}' in [{s}]") });
                }
            }
        }
        Ok(())
    }

    /// Normalized echo: sections and keys sorted, values as written.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for (name, keys) in &self.sections {
            let _ = writeln!(s, "[{name}]");
            for (k, e) in keys {
                let _ = writeln!(s, "{k} = {}", e.value);
            }
        }
        s
    }
}

fn strip_comment(line: &str) -> &str {
    let cut = line.find(['#', ';']).unwrap_or(line.len());
    &line[..cut]
}
