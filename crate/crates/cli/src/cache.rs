//! Content-addressed cache of command outcomes under `XRAY_CACHE_DIR`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::Outcome;

pub const CACHE_ENV: &str = "XRAY_CACHE_DIR";
pub const CODE_VERSION: &str = concat!("dxray ", env!("CARGO_PKG_VERSION"));

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn from_env() -> Option<Cache> {
        std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(Cache::new)
    }

    pub fn new(dir: impl Into<PathBuf>) -> Cache {
        Cache { dir: dir.into() }
    }

    pub fn key(material: &str) -> String {
        let mut h = Sha256::new();
        h.update(CODE_VERSION.as_bytes());
        h.update(b"\n");
        h.update(material.as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.bin"))
    }

    pub fn load(&self, key: &str) -> Option<Outcome> {
        decode(&fs::read(self.path(key)).ok()?)
    }

    pub fn store(&self, key: &str, outcome: &Outcome) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!("{key}.tmp{}", std::process::id()));
        fs::write(&tmp, encode(outcome))?;
        fs::rename(&tmp, self.path(key))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

// Layout: "ok <0|1>\n", then per section "<tag> <name> <len>\n<bytes>".
fn encode(o: &Outcome) -> Vec<u8> {
    let mut out = format!("ok {}\n", u8::from(o.ok)).into_bytes();
    let mut section = |tag: &str, name: &str, bytes: &[u8]| {
        out.extend_from_slice(format!("{tag} {name} {}\n", bytes.len()).as_bytes());
        out.extend_from_slice(bytes);
    };
    section("stdout", "-", o.stdout.as_bytes());
    section("stderr", "-", o.stderr.as_bytes());
    for (name, bytes) in &o.artifacts {
        section("artifact", name, bytes);
    }
    out
}

fn decode(mut data: &[u8]) -> Option<Outcome> {
    fn line<'a>(data: &mut &'a [u8]) -> Option<&'a str> {
        let end = data.iter().position(|&b| b == b'\n')?;
        let l = std::str::from_utf8(&data[..end]).ok()?;
        *data = &data[end + 1..];
        Some(l)
    }
    let ok = match line(&mut data)? {
        "ok 1" => true,
        "ok 0" => false,
        _ => return None,
    };
    let mut o = Outcome { ok, ..Default::default() };
    while !data.is_empty() {
        let header = line(&mut data)?;
        let mut parts = header.rsplitn(2, ' ');
        let len: usize = parts.next()?.parse().ok()?;
        let (tag, name) = parts.next()?.split_once(' ')?;
        if data.len() < len {
            return None;
        }
        let (bytes, rest) = data.split_at(len);
        data = rest;
        match tag {
            "stdout" => o.stdout = String::from_utf8(bytes.to_vec()).ok()?,
            "stderr" => o.stderr = String::from_utf8(bytes.to_vec()).ok()?,
            "artifact" => o.artifacts.push((name.to_string(), bytes.to_vec())),
            _ => return None,
        }
    }
    Some(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_including_spaces_in_names() {
        let o = Outcome {
            ok: false,
            stdout: "a\nb\n".into(),
            stderr: String::new(),
            artifacts: vec![("x y.csv".into(), b"1,2\n\n".to_vec()), ("z.svg".into(), vec![])],
        };
        assert_eq!(decode(&encode(&o)), Some(o));
    }

    #[test]
    fn store_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let key = Cache::key("command=eval\n");
        assert!(cache.load(&key).is_none());
        let o = Outcome { ok: true, stdout: "v\n".into(), ..Default::default() };
        cache.store(&key, &o).unwrap();
        assert_eq!(cache.load(&key), Some(o));
        assert_ne!(key, Cache::key("command=eval\nhandle=dh\n"));
    }
}
