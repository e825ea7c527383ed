use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Bad flags, config file or inputs. Maps to exit status 2.
#[derive(Debug)]
pub struct ConfigInvalid(pub String);

impl fmt::Display for ConfigInvalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigInvalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ConfigInvalid(msg.into()).into()
}

/// Parsed TOML config. Keys are looked up in the `[command]` table first, then at top level.
#[derive(Debug, Default)]
pub struct FileConfig {
    root: Option<toml::Table>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let root: toml::Table = text.parse().map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Ok(Self { root: Some(root) })
    }

    pub fn get<T: DeserializeOwned>(&self, section: &str, key: &str) -> anyhow::Result<Option<T>> {
        let Some(root) = &self.root else { return Ok(None) };
        let value = root
            .get(section)
            .and_then(|s| s.as_table())
            .and_then(|t| t.get(key))
            .or_else(|| root.get(key).filter(|v| !v.is_table()));
        match value {
            None => Ok(None),
            Some(v) => v
                .clone()
                .try_into()
                .map(Some)
                .map_err(|e| invalid(format!("config key `{key}`: {e}"))),
        }
    }
}

/// Flag, else config file, else default.
pub struct Resolver<'a> {
    pub file: &'a FileConfig,
    pub section: &'static str,
}

impl Resolver<'_> {
    pub fn opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> anyhow::Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file.get(self.section, key),
        }
    }

    pub fn or<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> anyhow::Result<T> {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    pub fn req<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> anyhow::Result<T> {
        self.opt(flag, key)?.ok_or_else(|| invalid(format!("missing `--{}`", key.replace('_', "-"))))
    }

    pub fn flag(&self, flag: bool, key: &str) -> anyhow::Result<bool> {
        Ok(flag || self.file.get::<bool>(self.section, key)?.unwrap_or(false))
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ToleranceConfig {
    /// Corner tube radius relative to the polygon diameter.
    pub eps_corner: f64,
    pub eps_iet: f64,
    /// Slack allowed when re-checking witness memberships.
    pub membership_tol: f64,
}

impl ToleranceConfig {
    pub const DEFAULT: Self = Self { eps_corner: 1e-12, eps_iet: 1e-10, membership_tol: 1e-9 };

    pub fn validate(&self) -> anyhow::Result<()> {
        for (name, v) in [("eps-corner", self.eps_corner), ("eps-iet", self.eps_iet), ("membership-tol", self.membership_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("tolerance --{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Self-describing envelope written for every command.
#[derive(Serialize)]
pub struct Report<R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub tolerances: ToleranceConfig,
    pub config: serde_json::Value,
    pub result: R,
}

/// SHA-256 of the compact JSON form of `config` (object keys sorted).
pub fn config_hash(config: &serde_json::Value) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl<R: Serialize> Report<R> {
    pub fn new(command: &'static str, seed: u64, tolerances: ToleranceConfig, config: serde_json::Value, result: R) -> Self {
        let mut hashed = config.clone();
        if let serde_json::Value::Object(map) = &mut hashed {
            map.insert("command".into(), command.into());
            map.insert("seed".into(), seed.into());
            map.insert("tolerances".into(), serde_json::to_value(tolerances).expect("tolerances serialize"));
        }
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: config_hash(&hashed),
            seed,
            tolerances,
            config,
            result,
        }
    }
}
