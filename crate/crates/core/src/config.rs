//! Flat key-value scenario configs: one `key = value` per line, `#` comments.
//!
//! Instance keys: `n, p, q, r, a, b, c, d, mu, nu, domain.kind,
//! domain.radius, domain.sides, grid.h`. Commands add their own keys; unknown
//! keys are hard errors so typos cannot silently change a scenario.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::system::{Coefficients, Domain, Exponents, LowerOrderTerms, ProblemInstance};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("key `{key}`: cannot parse `{value}` as {kind}")]
    BadValue { key: String, value: String, kind: &'static str },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("domain.kind `{0}` is not one of whole-space | half-space | ball | box")]
    BadDomain(String),
}

/// Parsed flat config: ordered key-value pairs.
#[derive(Debug, Clone, Default)]
pub struct FlatConfig {
    entries: BTreeMap<String, String>,
}

/// Instance-level keys shared by every command.
pub const INSTANCE_KEYS: &[&str] = &[
    "n", "p", "q", "r", "a", "b", "c", "d", "mu", "nu", "domain.kind", "domain.radius",
    "domain.sides", "grid.h",
];

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Malformed { line: idx + 1, text: raw.to_string() });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries.insert(key.clone(), value).is_some() {
                return Err(ConfigError::DuplicateKey(key));
            }
        }
        Ok(Self { entries })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Reject keys outside `allowed` (instance keys are always allowed).
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for key in self.entries.keys() {
            if !INSTANCE_KEYS.contains(&key.as_str()) && !allowed.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }
        Ok(())
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    value: v.clone(),
                    kind: "a real number",
                }),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    value: v.clone(),
                    kind: "a nonnegative integer",
            }),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    value: v.clone(),
                    kind: "an unsigned integer",
                }),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.get_f64(key)?.ok_or_else(|| ConfigError::MissingKey(key.into()))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.get_usize(key)?.ok_or_else(|| ConfigError::MissingKey(key.into()))
    }

    /// Space-separated reals, e.g. `domain.sides = 1 1`.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => {
                let mut out = Vec::new();
                for tok in v.split_whitespace() {
                    out.push(tok.parse::<f64>().map_err(|_| ConfigError::BadValue {
                        key: key.into(),
                        value: v.clone(),
                        kind: "a space-separated list of reals",
                    })?);
                }
                Ok(Some(out))
            }
        }
    }

    /// Assemble the problem instance from the instance keys.
    pub fn instance(&self) -> Result<ProblemInstance, ConfigError> {
        let n = self.require_usize("n")?;
        let exps = Exponents::new(
            self.require_f64("p")?,
            self.require_f64("q")?,
            self.require_f64("r")?,
        );
        let coeffs = Coefficients::new(
            self.require_f64("a")?,
            self.require_f64("b")?,
            self.require_f64("c")?,
            self.require_f64("d")?,
        );
        let domain = self.domain()?;
        let mu = self.get_f64("mu")?.unwrap_or(0.0);
        let nu = self.get_f64("nu")?.unwrap_or(0.0);
        Ok(ProblemInstance::constant(n, exps, coeffs, domain)
            .with_lower_order(LowerOrderTerms::Linear { mu, nu }))
    }

    pub fn domain(&self) -> Result<Domain, ConfigError> {
        match self.get_str("domain.kind").unwrap_or("whole-space") {
            "whole-space" => Ok(Domain::WholeSpace),
            "half-space" => Ok(Domain::HalfSpace),
            "ball" => Ok(Domain::Ball { radius: self.require_f64("domain.radius")? }),
            "box" => {
                let sides = self
                    .get_f64_list("domain.sides")?
                    .ok_or_else(|| ConfigError::MissingKey("domain.sides".into()))?;
                Ok(Domain::Box { sides })
            }
            other => Err(ConfigError::BadDomain(other.to_string())),
        }
    }

    /// Serialize back to the flat text form (sorted keys, stable output).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Flatten an instance into config entries.
    pub fn from_instance(inst: &ProblemInstance, h: Option<f64>) -> Self {
        let mut cfg = Self::default();
        cfg.set("n", inst.n);
        cfg.set("p", inst.exps.p);
        cfg.set("q", inst.exps.q);
        cfg.set("r", inst.exps.r);
        if let Some(c) = inst.coeffs.constant() {
            cfg.set("a", c.a);
            cfg.set("b", c.b);
            cfg.set("c", c.c);
            cfg.set("d", c.d);
        }
        if let LowerOrderTerms::Linear { mu, nu } = inst.lot {
            if mu != 0.0 {
                cfg.set("mu", mu);
            }
            if nu != 0.0 {
                cfg.set("nu", nu);
            }
        }
        match &inst.domain {
            Domain::WholeSpace => cfg.set("domain.kind", "whole-space"),
            Domain::HalfSpace => cfg.set("domain.kind", "half-space"),
            Domain::Ball { radius } => {
                cfg.set("domain.kind", "ball");
                cfg.set("domain.radius", radius);
            }
            Domain::Box { sides } => {
                cfg.set("domain.kind", "box");
                let list =
                    sides.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
                cfg.set("domain.sides", list);
            }
        }
        if let Some(h) = h {
            cfg.set("grid.h", h);
        }
        cfg
    }
}
