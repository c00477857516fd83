//! Flat, typed `key = value` configuration.
//!
//! Values are resolved from four layers, later ones winning:
//!
//! 1. the subcommand's schema defaults,
//! 2. the file given with `--config`,
//! 3. environment variables `ADVSCAPE_<KEY>` (key upper-cased, `.` and `-`
//!    written as `_`),
//! 4. `key=value` arguments on the command line.
//!
//! Blank lines and lines starting with `#` are ignored. An empty value means
//! "unset" and is only accepted for keys whose default is empty.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{config_err, Result};

pub const ENV_PREFIX: &str = "ADVSCAPE_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Type {
    Int,
    Seed,
    Float,
    Bool,
    Text,
    Path,
}

impl Type {
    fn check(self, value: &str) -> bool {
        match self {
            Type::Int => value.parse::<usize>().is_ok(),
            Type::Seed => value.parse::<u64>().is_ok(),
            Type::Float => value.parse::<f64>().is_ok_and(f64::is_finite),
            Type::Bool => parse_bool(value).is_some(),
            Type::Text | Type::Path => true,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Type::Int => "a non-negative integer",
            Type::Seed => "a 64-bit unsigned integer",
            Type::Float => "a finite number",
            Type::Bool => "a boolean",
            Type::Text => "text",
            Type::Path => "a path",
        }
    }
}

fn parse_bool(value: &str) -> Option<bool> {
    match value {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct Key {
    pub name: &'static str,
    pub ty: Type,
    pub default: String,
    pub doc: &'static str,
}

#[derive(Debug, Clone, Default)]
pub struct Schema {
    keys: Vec<Key>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn key(mut self, name: &'static str, ty: Type, default: impl ToString, doc: &'static str) -> Self {
        self.keys.push(Key {
            name,
            ty,
            default: default.to_string(),
            doc,
        });
        self
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    fn find(&self, name: &str) -> Option<&Key> {
        self.keys.iter().find(|k| k.name == name)
    }

    /// Environment overrides that name a key of this schema.
    pub fn env_layer(&self, vars: impl IntoIterator<Item = (String, String)>) -> Vec<(String, String)> {
        let vars: BTreeMap<String, String> = vars.into_iter().collect();
        self.keys
            .iter()
            .filter_map(|k| {
                let var = format!("{ENV_PREFIX}{}", k.name.to_uppercase().replace(['.', '-'], "_"));
                vars.get(&var).map(|v| (k.name.to_string(), v.clone()))
            })
            .collect()
    }

    /// Apply `layers` in order over the defaults, rejecting unknown keys and
    /// ill-typed values.
    pub fn resolve(&self, layers: &[Vec<(String, String)>]) -> Result<Config> {
        let mut values: BTreeMap<String, String> = self
            .keys
            .iter()
            .map(|k| (k.name.to_string(), k.default.clone()))
            .collect();
        for (key, value) in layers.iter().flatten() {
            let spec = self
                .find(key)
                .ok_or_else(|| config_err!("unknown key `{key}`"))?;
            check_value(spec, value)?;
            values.insert(key.clone(), value.clone());
        }
        Ok(Config {
            values,
            types: self.keys.iter().map(|k| (k.name.to_string(), k.ty)).collect(),
        })
    }

    /// One line per key: name, type, default and description.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for k in &self.keys {
            let default = if k.default.is_empty() { "(unset)" } else { &k.default };
            out.push_str(&format!("  {:<20} {:<10} {:<24} {}\n", k.name, format!("{:?}", k.ty).to_lowercase(), default, k.doc));
        }
        out
    }
}

fn check_value(spec: &Key, value: &str) -> Result<()> {
    if value.is_empty() {
        return if spec.default.is_empty() {
            Ok(())
        } else {
            Err(config_err!("key `{}` may not be empty", spec.name))
        };
    }
    if spec.ty.check(value) {
        Ok(())
    } else {
        Err(config_err!("key `{}` must be {}, got {value:?}", spec.name, spec.ty.name()))
    }
}

/// Parse `key = value` lines; `origin` names the source in error messages.
pub fn parse_pairs(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err!("{origin}:{}: expected `key = value`, got {line:?}", n + 1))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(config_err!("{origin}:{}: empty key", n + 1));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Parse command-line `key=value` arguments.
pub fn parse_args(args: &[String]) -> Result<Vec<(String, String)>> {
    args.iter()
        .map(|a| {
            a.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| config_err!("expected key=value, got {a:?}"))
        })
        .collect()
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
    types: BTreeMap<String, Type>,
}

impl Config {
    pub fn get(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| config_err!("unknown key `{key}`"))
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.values.get(key).is_some_and(|v| !v.is_empty())
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.required(key)?;
        v.parse()
            .map_err(|_| config_err!("key `{key}` has unparsable value {v:?}"))
    }

    pub fn required(&self, key: &str) -> Result<&str> {
        match self.get(key)? {
            "" => Err(config_err!("missing required key `{key}`")),
            v => Ok(v),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.parsed(key)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.parsed(key)
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.parsed(key)
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        let v = self.required(key)?;
        parse_bool(v).ok_or_else(|| config_err!("key `{key}` has unparsable value {v:?}"))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        self.required(key).map(PathBuf::from)
    }

    /// Fill in a value the command derived itself; the manifest records it.
    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        let value = value.to_string();
        match self.types.get(key) {
            Some(ty) if value.is_empty() || ty.check(&value) => {
                self.values.insert(key.to_string(), value);
                Ok(())
            }
            Some(ty) => Err(config_err!("key `{key}` must be {}, got {value:?}", ty.name())),
            None => Err(config_err!("unknown key `{key}`")),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Keys whose type is a seed, with their values.
    pub fn seeds(&self) -> Vec<(&str, &str)> {
        self.iter()
            .filter(|(k, _)| self.types.get(*k) == Some(&Type::Seed))
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
