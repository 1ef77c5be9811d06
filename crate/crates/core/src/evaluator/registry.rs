//! Name-keyed constructors for [`FunctionHandle`]s.
//!
//! Descriptor grammar: `<name>[:<args>]`, e.g. `zeta`, `dh`, `hurwitz:0.25`,
//! `L:5:2=i` (the character mod 5 with chi(2) = i), `L:5:1` (table index),
//! `series:<path>` (a key=value series file; `terms=` sets the cutoff).

use std::collections::BTreeMap;
use std::sync::Arc;

use super::functions::{DavenportHeilbronn, DirichletL, HurwitzZeta, RiemannZeta, TruncatedGeneral};
use super::hurwitz::EvaluationParams;
use super::FunctionHandle;
use crate::character::character_table;
use crate::error::{Error, Result};
use crate::format::parse_complex;
use crate::kv::KeyValues;
use crate::series::SeriesSpec;

pub const DEFAULT_SERIES_TERMS: u64 = 10_000;

type Builder = dyn Fn(&str, &EvaluationParams) -> Result<FunctionHandle> + Send + Sync;

#[derive(Clone)]
pub struct HandleRegistry {
    builders: BTreeMap<String, Arc<Builder>>,
    params: EvaluationParams,
}

impl Default for HandleRegistry {
    fn default() -> Self {
        let mut reg = HandleRegistry::empty();
        reg.register("zeta", |args, p| {
            no_args("zeta", args)?;
            Ok(FunctionHandle::new(RiemannZeta::new(*p)))
        });
        reg.register("dh", |args, p| {
            no_args("dh", args)?;
            Ok(FunctionHandle::new(DavenportHeilbronn::new(*p)))
        });
        reg.register("hurwitz", |args, p| {
            let a: f64 = args.parse().map_err(|_| Error::Parse(format!("hurwitz needs a in (0,1], got {args:?}")))?;
            Ok(FunctionHandle::new(HurwitzZeta::new(a, *p)?))
        });
        reg.register("L", build_dirichlet);
        reg.register("series", |args, _| {
            let text = std::fs::read_to_string(args).map_err(|e| Error::Io(format!("{args}: {e}")))?;
            let spec = SeriesSpec::parse(&text)?;
            let terms = KeyValues::parse(&text)?.get_parsed::<u64>("terms")?.unwrap_or(DEFAULT_SERIES_TERMS);
            Ok(FunctionHandle::new(TruncatedGeneral::new(spec, terms)?))
        });
        reg
    }
}

fn no_args(name: &str, args: &str) -> Result<()> {
    if args.is_empty() {
        Ok(())
    } else {
        Err(Error::Parse(format!("{name} takes no arguments")))
    }
}

fn build_dirichlet(args: &str, p: &EvaluationParams) -> Result<FunctionHandle> {
    let (q, selector) = args
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("expected L:<q>:<n>=<value> or L:<q>:<index>, got L:{args}")))?;
    let q: u64 = q.parse().map_err(|_| Error::Parse(format!("bad modulus {q:?}")))?;
    let table = character_table(q)?;
    let chi = match selector.split_once('=') {
        Some((n, v)) => {
            let n: u64 = n.parse().map_err(|_| Error::Parse(format!("bad residue {n:?}")))?;
            let v = parse_complex(v)?;
            let mut hits = table.into_iter().filter(|chi| (chi.value(n) - v).norm() < 1e-9);
            let chi = hits
                .next()
                .ok_or_else(|| Error::Parse(format!("no character mod {q} has chi({n}) = {v}")))?;
            if hits.next().is_some() {
                return Err(Error::Parse(format!("chi({n}) = {v} does not determine a unique character mod {q}")));
            }
            chi
        }
        None => {
            let idx: usize = selector.parse().map_err(|_| Error::Parse(format!("bad character index {selector:?}")))?;
            table
                .get(idx)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("character index {idx} out of range mod {q}")))?
        }
    };
    Ok(FunctionHandle::new(DirichletL::new(chi, *p)))
}

impl HandleRegistry {
    pub fn empty() -> Self {
        HandleRegistry { builders: BTreeMap::new(), params: EvaluationParams::default() }
    }

    pub fn with_params(mut self, params: EvaluationParams) -> Self {
        self.params = params;
        self
    }

    pub fn register<F>(&mut self, name: &str, builder: F)
    where
        F: Fn(&str, &EvaluationParams) -> Result<FunctionHandle> + Send + Sync + 'static,
    {
        self.builders.insert(name.to_string(), Arc::new(builder));
    }

    pub fn names(&self) -> Vec<&str> {
        self.builders.keys().map(String::as_str).collect()
    }

    pub fn parse(&self, descriptor: &str) -> Result<FunctionHandle> {
        let descriptor = descriptor.trim();
        let (name, args) = descriptor.split_once(':').unwrap_or((descriptor, ""));
        let builder = self
            .builders
            .get(name)
            .ok_or_else(|| Error::Parse(format!("unknown function {name:?}; known: {}", self.names().join(", "))))?;
        builder(args, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn builtin_descriptors() {
        let reg = HandleRegistry::default();
        assert_eq!(reg.parse("zeta").unwrap().descriptor(), "zeta");
        assert_eq!(reg.parse("dh").unwrap().descriptor(), "dh");
        assert_eq!(reg.parse("L:5:2=i").unwrap().descriptor(), "L:5:1");
        assert_eq!(reg.parse("L:5:2=-i").unwrap().descriptor(), "L:5:3");
        assert_eq!(reg.parse("L:5:0").unwrap().descriptor(), "L:5:0");
        assert_eq!(reg.parse("hurwitz:0.25").unwrap().descriptor(), "hurwitz:0.25");
        assert!(reg.parse("L:5:4=1").is_err(), "ambiguous selector");
        assert!(reg.parse("L:5:9").is_err());
        assert!(reg.parse("hurwitz:2").is_err());
        assert!(reg.parse("nope").is_err());
        assert!(reg.parse("zeta:3").is_err());
    }

    #[test]
    fn series_file_descriptor() {
        let dir = std::env::temp_dir().join(format!("dxray-reg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("chi.txt");
        std::fs::write(&path, "kind=character\nmodulus=5\ncharacter_index=1\nterms=100\n").unwrap();
        let h = HandleRegistry::default().parse(&format!("series:{}", path.display())).unwrap();
        let v = h.value(Complex64::new(3.0, 0.0)).unwrap();
        let l = HandleRegistry::default().parse("L:5:1").unwrap().value(Complex64::new(3.0, 0.0)).unwrap();
        assert!((v - l).norm() < 1e-5);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn custom_registration() {
        let mut reg = HandleRegistry::empty();
        reg.register("z", |_, p| Ok(FunctionHandle::new(RiemannZeta::new(*p))));
        assert_eq!(reg.names(), vec!["z"]);
        assert!(reg.parse("zeta").is_err());
    }
}
