//! Flat `key = value` sweep configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::director::TangentField;
use crate::gauss_graph::TestForms;
use crate::mesh::PrimitiveSpec;
use crate::spectral::FORM_SCALE;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("key `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
}

/// Surface family swept over refinement levels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Surface {
    Sphere { radius: f64 },
    /// Level `ℓ` uses a `n₀2^ℓ × n₀2^ℓ` grid.
    Torus { major_radius: f64, minor_radius: f64, base_resolution: usize },
}

impl Surface {
    pub fn spec(&self, level: u32) -> PrimitiveSpec {
        match *self {
            Surface::Sphere { radius } => PrimitiveSpec::Sphere { radius, level },
            Surface::Torus { major_radius, minor_radius, base_resolution } => {
                let n = base_resolution << level;
                PrimitiveSpec::Torus { major_radius, minor_radius, nu: n, nv: n }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Surface::Sphere { .. } => "sphere",
            Surface::Torus { .. } => "torus",
        }
    }

    /// `∫ (H²/4 − K/6)` of the smooth surface.
    pub fn q_zero(&self) -> f64 {
        match *self {
            Surface::Sphere { .. } => 10.0 * PI / 3.0,
            Surface::Torus { major_radius, minor_radius, .. } => {
                let c = major_radius / minor_radius;
                PI * PI * c * c / (c * c - 1.0).sqrt()
            }
        }
    }

    /// `½ ∫ |w|²` for the tangential projection of a catalog field.
    pub fn half_w_squared(&self, field: TangentField) -> f64 {
        match *self {
            Surface::Sphere { radius: r } => {
                let r2 = r * r;
                match field {
                    TangentField::Zero => 0.0,
                    TangentField::E1 | TangentField::E2 | TangentField::E3 => 4.0 * PI * r2 / 3.0,
                    TangentField::Swirl => 4.0 * PI * r2 * r2 / 3.0,
                }
            }
            Surface::Torus { major_radius: big, minor_radius: r, .. } => match field {
                TangentField::Zero => 0.0,
                TangentField::E1 | TangentField::E2 => 1.5 * PI * PI * big * r,
                TangentField::E3 => PI * PI * big * r,
                TangentField::Swirl => 2.0 * PI * PI * r * big.powi(3) + 3.0 * PI * PI * big * r.powi(3),
            },
        }
    }
}

/// Parsed sweep configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub surface: Surface,
    pub levels: Vec<u32>,
    pub eps: Vec<f64>,
    pub field: TangentField,
    pub seed: u64,
    /// Constant assumed by the spectral spot checks.
    pub form_scale: f64,
    /// Faces per cell sent through the spectral spot checks.
    pub spot_checks: usize,
    /// Relative tolerance of the ε → 0 limit fits.
    pub limit_tolerance: f64,
    /// Relative tolerance of the liminf flag.
    pub liminf_tolerance: f64,
    /// Minimum fitted order in ε for the pairing and the defect.
    pub min_order: f64,
    pub forms: TestForms,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            surface: Surface::Sphere { radius: 1.0 },
            levels: vec![2, 3, 4],
            eps: vec![0.2, 0.1, 0.05, 0.025],
            field: TangentField::E1,
            seed: 0,
            form_scale: FORM_SCALE,
            spot_checks: 16,
            limit_tolerance: 0.02,
            liminf_tolerance: 0.01,
            min_order: 0.9,
            forms: TestForms::default(),
        }
    }
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| ConfigError::Value { key: key.into(), message: format!("cannot parse `{s}`") }))
        .collect()
}

fn one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse::<T>().map_err(|_| ConfigError::Value { key: key.into(), message: format!("cannot parse `{v}`") })
}

impl SweepConfig {
    /// Parses `key = value` lines; `#` starts a comment. Unset keys keep defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: n + 1, message: format!("expected `key = value`, found `{line}`") })?;
            let k = k.trim().to_string();
            if kv.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError::Syntax { line: n + 1, message: format!("duplicate key `{k}`") });
            }
        }
        Self::from_map(&kv)
    }

    fn from_map(kv: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut c = SweepConfig::default();
        let get = |k: &str| kv.get(k).map(String::as_str);
        let surface = get("surface").unwrap_or("sphere");
        c.surface = match surface {
            "sphere" => Surface::Sphere { radius: get("radius").map(|v| one("radius", v)).transpose()?.unwrap_or(1.0) },
            "torus" => Surface::Torus {
                major_radius: get("major_radius").map(|v| one("major_radius", v)).transpose()?.unwrap_or(2f64.sqrt()),
                minor_radius: get("minor_radius").map(|v| one("minor_radius", v)).transpose()?.unwrap_or(1.0),
                base_resolution: get("base_resolution").map(|v| one("base_resolution", v)).transpose()?.unwrap_or(16),
            },
            other => return Err(ConfigError::Value { key: "surface".into(), message: format!("unknown surface `{other}`") }),
        };
        for (k, v) in kv {
            match k.as_str() {
                "surface" => {}
                "radius" if surface == "sphere" => {}
                "major_radius" | "minor_radius" | "base_resolution" if surface == "torus" => {}
                "levels" => c.levels = list(k, v)?,
                "eps" => c.eps = list(k, v)?,
                "field" => {
                    c.field = v.parse().map_err(|e: crate::director::DirectorError| ConfigError::Value {
                        key: k.clone(),
                        message: e.to_string(),
                    })?
                }
                "seed" => c.seed = one(k, v)?,
                "form_scale" => c.form_scale = one(k, v)?,
                "spot_checks" => c.spot_checks = one(k, v)?,
                "limit_tolerance" => c.limit_tolerance = one(k, v)?,
                "liminf_tolerance" => c.liminf_tolerance = one(k, v)?,
                "min_order" => c.min_order = one(k, v)?,
                "g" => c.forms.g = v.parse().map_err(|e: crate::gauss_graph::FormParseError| ConfigError::Value { key: k.clone(), message: e.to_string() })?,
                "omega" => c.forms.omega = v.parse().map_err(|e: crate::gauss_graph::FormParseError| ConfigError::Value { key: k.clone(), message: e.to_string() })?,
                _ => return Err(ConfigError::UnknownKey(k.clone())),
            }
        }
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, message: &str| Err(ConfigError::Value { key: key.into(), message: message.into() });
        if self.levels.is_empty() {
            return bad("levels", "at least one level is required");
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return bad("levels", "levels must be strictly increasing");
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("eps", "values must be positive and finite");
        }
        if self.eps.windows(2).any(|w| w[0] <= w[1]) {
            return bad("eps", "values must be strictly decreasing");
        }
        match self.surface {
            Surface::Sphere { radius } if !(radius > 0.0 && radius.is_finite()) => return bad("radius", "must be positive"),
            Surface::Torus { major_radius, minor_radius, base_resolution } => {
                if !(minor_radius > 0.0 && major_radius > minor_radius && major_radius.is_finite()) {
                    return bad("major_radius", "torus needs 0 < minor_radius < major_radius");
                }
                if base_resolution < 3 {
                    return bad("base_resolution", "must be at least 3");
                }
            }
            _ => {}
        }
        if !(self.form_scale.is_finite()) {
            return bad("form_scale", "must be finite");
        }
        Ok(())
    }

    /// Canonical text form: one `key = value` per line, keys sorted, floats
    /// in shortest round-trip form. Parsing it yields the same config.
    pub fn canonical(&self) -> String {
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        kv.insert("surface", self.surface.name().to_string());
        match self.surface {
            Surface::Sphere { radius } => {
                kv.insert("radius", format!("{radius:?}"));
            }
            Surface::Torus { major_radius, minor_radius, base_resolution } => {
                kv.insert("major_radius", format!("{major_radius:?}"));
                kv.insert("minor_radius", format!("{minor_radius:?}"));
                kv.insert("base_resolution", base_resolution.to_string());
            }
        }
        kv.insert("levels", self.levels.iter().map(u32::to_string).collect::<Vec<_>>().join(","));
        kv.insert("eps", self.eps.iter().map(|e| format!("{e:?}")).collect::<Vec<_>>().join(","));
        kv.insert("field", self.field.name().to_string());
        kv.insert("seed", self.seed.to_string());
        kv.insert("form_scale", format!("{:?}", self.form_scale));
        kv.insert("spot_checks", self.spot_checks.to_string());
        kv.insert("limit_tolerance", format!("{:?}", self.limit_tolerance));
        kv.insert("liminf_tolerance", format!("{:?}", self.liminf_tolerance));
        kv.insert("min_order", format!("{:?}", self.min_order));
        kv.insert("g", self.forms.g.to_string());
        kv.insert("omega", self.forms.omega.to_string());
        let mut out = String::new();
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// SHA-256 of [`SweepConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        hex_digest(self.canonical().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::half_w_squared;
    use crate::mesh::generate_primitive;

    #[test]
    fn parses_and_round_trips() {
        let text = "# recovery sweep\nsurface = sphere\nlevels = 2, 3\neps = 0.2,0.1\nfield = e1\nseed = 7\n";
        let c = SweepConfig::parse(text).unwrap();
        assert_eq!(c.levels, vec![2, 3]);
        assert_eq!(c.eps, vec![0.2, 0.1]);
        assert_eq!(c.seed, 7);
        let again = SweepConfig::parse(&c.canonical()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(SweepConfig::parse("levels 2"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(SweepConfig::parse("colour = red"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(SweepConfig::parse("eps = 0.1, -1"), Err(ConfigError::Value { .. })));
        assert!(matches!(SweepConfig::parse("levels = 3, 2"), Err(ConfigError::Value { .. })));
        assert!(matches!(SweepConfig::parse("surface = torus\nmajor_radius = 1\nminor_radius = 2"), Err(ConfigError::Value { .. })));
        assert!(matches!(SweepConfig::parse("seed = 1\nseed = 2"), Err(ConfigError::Syntax { line: 2, .. })));
        assert!(matches!(SweepConfig::parse("radius = 2\nsurface = torus"), Err(ConfigError::UnknownKey(_))));
    }

    #[test]
    fn analytic_tilt_oracles_match_quadrature() {
        let sphere = Surface::Sphere { radius: 1.5 };
        let torus = Surface::Torus { major_radius: 2f64.sqrt(), minor_radius: 1.0, base_resolution: 32 };
        for surf in [sphere, torus] {
            let mesh = generate_primitive(surf.spec(if surf.name() == "sphere" { 5 } else { 2 })).unwrap();
            for field in TangentField::ALL {
                let want = surf.half_w_squared(field);
                let got = half_w_squared(&mesh, &field.sample(&mesh));
                assert!((got - want).abs() <= 5e-3 * want.max(1.0), "{} {field}: {got} vs {want}", surf.name());
            }
        }
    }

    #[test]
    fn clifford_torus_willmore_value() {
        let t = Surface::Torus { major_radius: 2f64.sqrt(), minor_radius: 1.0, base_resolution: 16 };
        assert!((t.q_zero() - 2.0 * PI * PI).abs() < 1e-12);
    }
}
