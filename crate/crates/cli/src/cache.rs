//! On-disk impedance cache: a directory holding `manifest.json` and one data
//! file per matrix.
//!
//! Binary entries are `n·n` complex values, row-major, each stored as two
//! little-endian `f64` (re, im). JSON entries hold the same numbers as
//! `{"n", "re", "im"}`. The manifest records each entry's key and SHA-256.

use std::path::{Path, PathBuf};

use faer::Mat;
use num_complex::Complex64;
use sdm_core::cloning::CloningConfig;
use sdm_core::linalg::CMat;
use sdm_core::mesh::LoopFingerprint;
use sdm_core::Medium;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::CacheFormat;
use crate::CliError;

pub const CACHE_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheKey {
    pub loop_nodes: usize,
    pub loop_hash: String,
    pub g: f64,
    pub eta: f64,
    pub n_layers: usize,
    pub tail_ka: f64,
    pub max_kh: f64,
    pub rho0: f64,
    pub c: f64,
    pub freq_hz: f64,
}

impl CacheKey {
    pub fn new(fp: &LoopFingerprint, cfg: &CloningConfig, medium: &Medium, freq_hz: f64) -> Self {
        Self {
            loop_nodes: fp.n_nodes,
            loop_hash: fp.hash.clone(),
            g: cfg.g,
            eta: cfg.eta,
            n_layers: cfg.n_layers,
            tail_ka: cfg.tail_ka,
            max_kh: cfg.max_kh,
            rho0: medium.rho0,
            c: medium.c,
            freq_hz,
        }
    }

    /// Exact on everything but frequency, which matches within 1e-9 relative.
    pub fn matches(&self, other: &CacheKey) -> bool {
        let Self { freq_hz, .. } = *other;
        let same_rest = Self { freq_hz: self.freq_hz, ..other.clone() } == *self;
        same_rest && (self.freq_hz - freq_hz).abs() <= 1e-9 * self.freq_hz.abs().max(freq_hz.abs())
    }

    fn file_stem(&self) -> String {
        let json = serde_json::to_string(self).expect("keys always serialize");
        let digest = Sha256::digest(json.as_bytes());
        digest[..12].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub file: String,
    pub n: usize,
    pub sha256: String,
    /// Set when the matrix needed the eta retry; holds the eta actually used.
    pub retried_eta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheFailure {
    pub key: CacheKey,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub format: CacheFormat,
    pub entries: Vec<CacheEntry>,
    pub failures: Vec<CacheFailure>,
}

#[derive(Serialize, Deserialize)]
struct JsonMatrix {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

pub struct ImpedanceCache {
    dir: PathBuf,
    pub manifest: Manifest,
}

fn io_err(what: &str, path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{what} {}: {e}", path.display()))
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn encode_binary(d: &CMat) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 * d.nrows() * d.ncols());
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            out.extend_from_slice(&d[(i, j)].re.to_le_bytes());
            out.extend_from_slice(&d[(i, j)].im.to_le_bytes());
        }
    }
    out
}

pub fn decode_binary(bytes: &[u8], n: usize) -> Option<CMat> {
    if bytes.len() != 16 * n * n {
        return None;
    }
    let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8-byte slice"));
    Some(Mat::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        Complex64::new(f(k), f(k + 1))
    }))
}

fn encode(d: &CMat, format: CacheFormat) -> Vec<u8> {
    match format {
        CacheFormat::Binary => encode_binary(d),
        CacheFormat::Json => {
            let n = d.nrows();
            let (mut re, mut im) = (Vec::with_capacity(n * n), Vec::with_capacity(n * n));
            for i in 0..n {
                for j in 0..n {
                    re.push(d[(i, j)].re);
                    im.push(d[(i, j)].im);
                }
            }
            serde_json::to_vec(&JsonMatrix { n, re, im }).expect("matrices always serialize")
        }
    }
}

fn decode(bytes: &[u8], n: usize, format: CacheFormat) -> Option<CMat> {
    match format {
        CacheFormat::Binary => decode_binary(bytes, n),
        CacheFormat::Json => {
            let m: JsonMatrix = serde_json::from_slice(bytes).ok()?;
            if m.n != n || m.re.len() != n * n || m.im.len() != n * n {
                return None;
            }
            Some(Mat::from_fn(n, n, |i, j| Complex64::new(m.re[i * n + j], m.im[i * n + j])))
        }
    }
}

impl ImpedanceCache {
    /// Opens `dir`, creating an empty cache if it has no manifest. An existing
    /// cache keeps its own format.
    pub fn open(dir: &Path, format: CacheFormat) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST);
        let manifest = if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| io_err("cannot read", &path, e))?;
            let m: Manifest = serde_json::from_str(&text).map_err(|e| io_err("malformed manifest", &path, e))?;
            if m.version != CACHE_VERSION {
                return Err(io_err("unsupported cache version in", &path, m.version));
            }
            m
        } else {
            std::fs::create_dir_all(dir).map_err(|e| io_err("cannot create", dir, e))?;
            Manifest { version: CACHE_VERSION, format, entries: Vec::new(), failures: Vec::new() }
        };
        Ok(Self { dir: dir.to_path_buf(), manifest })
    }

    pub fn open_existing(dir: &Path) -> Result<Self, CliError> {
        if !dir.join(MANIFEST).exists() {
            return Err(CliError::Config(format!("no cache manifest in {}", dir.display())));
        }
        Self::open(dir, CacheFormat::Binary)
    }

    pub fn find(&self, key: &CacheKey) -> Option<&CacheEntry> {
        self.manifest.entries.iter().find(|e| e.key.matches(key))
    }

    /// Reads and verifies an entry. `Ok(None)` is a miss; a checksum or size
    /// mismatch is an error.
    pub fn lookup(&self, key: &CacheKey) -> Result<Option<CMat>, CliError> {
        let Some(entry) = self.find(key) else { return Ok(None) };
        let path = self.dir.join(&entry.file);
        let bytes = std::fs::read(&path).map_err(|e| io_err("cannot read", &path, e))?;
        if hex(&bytes) != entry.sha256 {
            return Err(io_err("checksum mismatch in", &path, "file was modified"));
        }
        decode(&bytes, entry.n, self.manifest.format)
            .map(Some)
            .ok_or_else(|| io_err("malformed cache entry", &path, "size mismatch"))
    }

    /// Writes the data file and records it; call [`save`](Self::save) after a batch.
    pub fn insert(&mut self, key: CacheKey, d: &CMat, retried_eta: Option<f64>) -> Result<(), CliError> {
        let ext = match self.manifest.format {
            CacheFormat::Binary => "bin",
            CacheFormat::Json => "json",
        };
        let file = format!("{}.{ext}", key.file_stem());
        let bytes = encode(d, self.manifest.format);
        let path = self.dir.join(&file);
        std::fs::write(&path, &bytes).map_err(|e| io_err("cannot write", &path, e))?;
        self.manifest.entries.retain(|e| !e.key.matches(&key));
        self.manifest.failures.retain(|f| !f.key.matches(&key));
        self.manifest.entries.push(CacheEntry { key, file, n: d.nrows(), sha256: hex(&bytes), retried_eta });
        Ok(())
    }

    pub fn record_failure(&mut self, key: CacheKey, reason: String) {
        self.manifest.failures.retain(|f| !f.key.matches(&key));
        self.manifest.failures.push(CacheFailure { key, reason });
    }

    pub fn save(&self) -> Result<(), CliError> {
        let path = self.dir.join(MANIFEST);
        let tmp = self.dir.join(format!("{MANIFEST}.tmp"));
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest always serializes");
        std::fs::write(&tmp, text).map_err(|e| io_err("cannot write", &tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| io_err("cannot replace", &path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sdm_core::mesh::circle_loop;

    fn key(f: f64) -> CacheKey {
        CacheKey::new(&circle_loop(0.55, 8).unwrap().fingerprint(), &CloningConfig::default(), &Medium::default(), f)
    }

    fn sample(n: usize) -> CMat {
        Mat::from_fn(n, n, |i, j| Complex64::new((i as f64 + 0.1).ln() / 3.0, -(j as f64).sqrt() * 1e-300))
    }

    #[test]
    fn frequency_tolerance_and_exact_rest() {
        let k = key(200.0);
        assert!(k.matches(&key(200.0 * (1.0 + 5e-10))));
        assert!(!k.matches(&key(200.0 * (1.0 + 5e-9))));
        let mut other = key(200.0);
        other.g = 1.2;
        assert!(!k.matches(&other));
    }

    #[test]
    fn binary_and_json_round_trips_are_bit_exact() {
        for format in [CacheFormat::Binary, CacheFormat::Json] {
            let dir = tempfile::tempdir().unwrap();
            let d = sample(5);
            let mut c = ImpedanceCache::open(dir.path(), format).unwrap();
            c.insert(key(100.0), &d, None).unwrap();
            c.save().unwrap();
            let back = ImpedanceCache::open(dir.path(), CacheFormat::Binary).unwrap().lookup(&key(100.0)).unwrap().unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    assert_eq!(back[(i, j)].re.to_bits(), d[(i, j)].re.to_bits());
                    assert_eq!(back[(i, j)].im.to_bits(), d[(i, j)].im.to_bits());
                }
            }
        }
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ImpedanceCache::open(dir.path(), CacheFormat::Binary).unwrap();
        c.insert(key(100.0), &sample(3), None).unwrap();
        c.save().unwrap();
        let file = dir.path().join(&c.manifest.entries[0].file);
        let mut bytes = std::fs::read(&file).unwrap();
        bytes[0] ^= 1;
        std::fs::write(&file, bytes).unwrap();
        assert!(c.lookup(&key(100.0)).is_err());
        assert!(c.lookup(&key(300.0)).unwrap().is_none());
    }
}
