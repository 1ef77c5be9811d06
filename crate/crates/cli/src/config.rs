//! Run configuration: per-command defaults, then a key=value file, then flags.

use dxray_core::kv::KeyValues;

use crate::UsageError;

/// Canonical key order for `--dump-config`.
const KEY_ORDER: &[&str] = &[
    "command",
    "handle",
    "s",
    "region",
    "window",
    "t",
    "sigma_range",
    "sigma_ref",
    "sigma",
    "tol",
    "grid_step",
    "arc_step",
    "corrector_tol",
    "max_points",
    "primes",
    "pair",
    "deriv_tol",
    "seg_tol",
    "expect_re",
    "expect_tol",
    "cutoffs",
    "out_dir",
    "cache",
    "workers",
];

/// Keys that do not change results and so stay out of the cache key.
const NON_SEMANTIC: &[&str] = &["out_dir", "cache", "workers"];

pub const COMMANDS: &[&str] = &["eval", "zeros", "xray", "strips", "verify-euler", "theorem2", "ratio-trace", "dh-repro"];

const TRACE_DEFAULTS: &[(&str, &str)] = &[("grid_step", "0.25"), ("arc_step", "0.02"), ("corrector_tol", "1e-9"), ("max_points", "20000")];

fn defaults(command: &str) -> Vec<(&'static str, &'static str)> {
    let mut d: Vec<(&str, &str)> = match command {
        "eval" => vec![("handle", ""), ("s", "")],
        "zeros" => vec![("handle", ""), ("region", ""), ("tol", "1e-10")],
        "xray" => {
            let mut v = vec![("handle", ""), ("window", "")];
            v.extend_from_slice(TRACE_DEFAULTS);
            v
        }
        "strips" => {
            let mut v = vec![("handle", ""), ("t", "0,100"), ("sigma_range", "-1,8"), ("sigma_ref", "0")];
            v.extend_from_slice(TRACE_DEFAULTS);
            v
        }
        "verify-euler" => vec![("handle", "zeta"), ("s", "3"), ("primes", "1000"), ("tol", "1e-8")],
        "theorem2" => vec![
            ("handle", "dh"),
            ("region", "0,1,60,200"),
            ("pair", "1"),
            ("deriv_tol", "1e-6"),
            ("seg_tol", "1e-4"),
            ("expect_re", ""),
            ("expect_tol", "0.02"),
        ],
        "ratio-trace" => vec![("handle", "zeta"), ("sigma", ""), ("t", ""), ("cutoffs", "100,1000,10000")],
        "dh-repro" => vec![],
        _ => vec![],
    };
    let out = if command == "dh-repro" || command == "xray" { "out" } else { "" };
    d.insert(0, ("command", ""));
    d.push(("out_dir", out));
    d.push(("cache", "true"));
    d.push(("workers", "0"));
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: Vec<(String, String)>,
}

impl RunConfig {
    /// `file` entries override defaults and `overrides` (from flags) override both.
    pub fn resolve(command: &str, file: Option<&str>, overrides: &[(&str, Option<String>)]) -> Result<Self, UsageError> {
        if !COMMANDS.contains(&command) {
            return Err(UsageError(format!("unknown command {command}")));
        }
        let mut values: Vec<(String, String)> = defaults(command).into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        values[0].1 = command.to_string();
        let set = |key: &str, value: String, values: &mut Vec<(String, String)>| -> Result<(), UsageError> {
            match values.iter_mut().find(|(k, _)| k == key) {
                Some(slot) => {
                    slot.1 = value;
                    Ok(())
                }
                None => Err(UsageError(format!("key {key:?} does not apply to {command}"))),
            }
        };
        if let Some(text) = file {
            let kv = KeyValues::parse(text).map_err(|e| UsageError(e.to_string()))?;
            for (k, v) in kv.iter() {
                if k == "command" {
                    if v != command {
                        return Err(UsageError(format!("config is for {v}, not {command}")));
                    }
                    continue;
                }
                set(k, v.to_string(), &mut values)?;
            }
        }
        for (k, v) in overrides {
            if let Some(v) = v {
                set(k, v.clone(), &mut values)?;
            }
        }
        values.sort_by_key(|(k, _)| KEY_ORDER.iter().position(|x| x == k).unwrap_or(usize::MAX));
        Ok(RunConfig { values })
    }

    pub fn command(&self) -> &str {
        &self.values[0].1
    }

    /// The value, or `None` when unset (empty).
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str()).filter(|v| !v.is_empty())
    }

    pub fn require(&self, key: &str) -> Result<&str, UsageError> {
        self.get(key).ok_or_else(|| UsageError(format!("{} needs {key}", self.command())))
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T, UsageError> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| UsageError(format!("bad value for {key}: {raw:?}")))
    }

    pub fn flag(&self, key: &str) -> Result<bool, UsageError> {
        match self.get(key) {
            None | Some("false") | Some("0") | Some("no") => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some(v) => Err(UsageError(format!("bad boolean for {key}: {v:?}"))),
        }
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Everything that determines the output bytes.
    pub fn cache_material(&self) -> String {
        self.values
            .iter()
            .filter(|(k, _)| !NON_SEMANTIC.contains(&k.as_str()))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips() {
        let cfg = RunConfig::resolve("zeros", None, &[("handle", Some("dh".into())), ("region", Some("0,1,60,200".into()))]).unwrap();
        let dump = cfg.dump();
        let again = RunConfig::resolve("zeros", Some(&dump), &[]).unwrap();
        assert_eq!(again.dump(), dump);
        assert!(dump.starts_with("command=zeros\nhandle=dh\nregion=0,1,60,200\ntol=1e-10\n"));
    }

    #[test]
    fn flags_override_file() {
        let cfg = RunConfig::resolve("zeros", Some("# scan\ntol=1e-8\nhandle=zeta\n"), &[("tol", Some("1e-9".into()))]).unwrap();
        assert_eq!(cfg.get("tol"), Some("1e-9"));
        assert_eq!(cfg.get("handle"), Some("zeta"));
    }

    #[test]
    fn foreign_keys_are_usage_errors() {
        assert!(RunConfig::resolve("eval", Some("primes=10\n"), &[]).is_err());
        assert!(RunConfig::resolve("eval", Some("command=zeros\n"), &[]).is_err());
    }

    #[test]
    fn cache_material_ignores_output_location() {
        let a = RunConfig::resolve("eval", None, &[("handle", Some("zeta".into())), ("out_dir", Some("a".into()))]).unwrap();
        let b = RunConfig::resolve("eval", None, &[("handle", Some("zeta".into())), ("out_dir", Some("b".into()))]).unwrap();
        assert_eq!(a.cache_material(), b.cache_material());
        assert_ne!(a.dump(), b.dump());
    }
}
