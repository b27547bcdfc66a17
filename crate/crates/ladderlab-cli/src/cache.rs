//! Spectrum cache: one CSV per (config-hash, mass) with a JSON manifest
//! recording cutoffs, completeness guarantees and content hashes. All
//! writes are atomic (write to a temp file, then rename).

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ladderlab::spectra::{MassSlice, Provenance, SpectralLine};

use crate::config::{canonical_json, format_float17, sha256_hex};
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sha256: String,
    pub lambda_complete: f64,
    pub window: Option<(f64, f64)>,
    pub provenance: Provenance,
    pub lines: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Manifest {
    /// Echo of the config subset the hash was derived from.
    pub subset: Value,
    pub files: BTreeMap<String, ManifestEntry>,
}

pub struct SpectrumCache {
    dir: PathBuf,
    manifest: Manifest,
    pub hits: u32,
    pub misses: u32,
}

impl SpectrumCache {
    /// Opens (or initializes) the cache bucket for a config subset.
    pub fn open(cache_root: &Path, subset: Value) -> Result<Self, CliError> {
        let hash = crate::config::subset_hash(&subset);
        let dir = cache_root.join("spectra").join(&hash[..16]);
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Validation(format!("cannot create cache dir {dir:?}: {e}")))?;
        let manifest_path = dir.join("manifest.json");
        let manifest = if manifest_path.exists() {
            let text = fs::read_to_string(&manifest_path).map_err(|e| {
                CliError::Cache(format!("cannot read manifest {manifest_path:?}: {e}"))
            })?;
            let loaded: Manifest = serde_json::from_str(&text).map_err(|e| {
                CliError::Cache(format!(
                    "corrupt manifest {manifest_path:?}: {e}; delete the directory to recompute"
                ))
            })?;
            // guard against hash collisions and hand-edited manifests
            if canonical_json(&loaded.subset) != canonical_json(&subset) {
                return Err(CliError::Cache(format!(
                    "manifest {manifest_path:?} does not match the requested config; \
                     delete {dir:?} to recompute"
                )));
            }
            loaded
        } else {
            Manifest { subset, files: BTreeMap::new() }
        };
        Ok(SpectrumCache { dir, manifest, hits: 0, misses: 0 })
    }

    fn csv_name(m: u32) -> String {
        format!("m{m}.csv")
    }

    /// Loads the slice for mass `m` or computes and stores it.
    pub fn get_or_compute<F>(&mut self, m: u32, compute: F) -> Result<MassSlice, CliError>
    where
        F: FnOnce() -> Result<MassSlice, CliError>,
    {
        let name = Self::csv_name(m);
        let path = self.dir.join(&name);
        if let Some(entry) = self.manifest.files.get(&name) {
            if path.exists() {
                let bytes = fs::read(&path)
                    .map_err(|e| CliError::Cache(format!("cannot read {path:?}: {e}")))?;
                let digest = sha256_hex(&bytes);
                if digest != entry.sha256 {
                    return Err(CliError::Cache(format!(
                        "cache hash mismatch for {path:?}; delete the file to recompute"
                    )));
                }
                let slice = parse_slice_csv(&bytes, m, entry)?;
                self.hits += 1;
                return Ok(slice);
            }
        }
        let slice = compute()?;
        let bytes = render_slice_csv(&slice);
        write_atomic(&path, bytes.as_bytes())?;
        self.manifest.files.insert(
            name,
            ManifestEntry {
                sha256: sha256_hex(bytes.as_bytes()),
                lambda_complete: slice.lambda_complete,
                window: slice.window,
                provenance: slice.provenance,
                lines: slice.entries.len() as u64,
            },
        );
        self.misses += 1;
        Ok(slice)
    }

    /// Persists the manifest (atomic, canonical bytes).
    pub fn flush(&self) -> Result<(), CliError> {
        let value = serde_json::to_value(&self.manifest)
            .map_err(|e| CliError::Cache(format!("manifest serialization: {e}")))?;
        write_atomic(
            &self.dir.join("manifest.json"),
            canonical_json(&value).as_bytes(),
        )
    }

    #[cfg(test)]
    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

pub fn render_slice_csv(slice: &MassSlice) -> String {
    let mut out = String::from("m,lambda,multiplicity\n");
    for e in &slice.entries {
        out.push_str(&format_float17(slice.m));
        out.push(',');
        out.push_str(&format_float17(e.lambda));
        out.push(',');
        out.push_str(&e.multiplicity.to_string());
        out.push('\n');
    }
    out
}

fn parse_slice_csv(bytes: &[u8], m: u32, entry: &ManifestEntry) -> Result<MassSlice, CliError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| CliError::Cache(format!("cache file is not UTF-8: {e}")))?;
    let mut entries = Vec::with_capacity(entry.lines as usize);
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue; // header
        }
        let mut cols = line.split(',');
        let bad = || CliError::Cache(format!("malformed cache row {i}: {line:?}"));
        let m_val: f64 = cols.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let lambda: f64 = cols.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let multiplicity: u64 = cols.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        entries.push(SpectralLine {
            lambda,
            multiplicity,
            zero_mode: m_val == 0.0 && lambda == 0.0,
        });
    }
    Ok(MassSlice {
        m: m as f64,
        entries,
        lambda_complete: entry.lambda_complete,
        window: entry.window,
        provenance: entry.provenance,
    })
}

/// Write-temp-then-rename so concurrent readers never see partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)
        .map_err(|e| CliError::Validation(format!("cannot write {tmp:?}: {e}")))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Validation(format!("cannot rename into {path:?}: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_slice() -> MassSlice {
        MassSlice {
            m: 3.0,
            entries: vec![
                SpectralLine { lambda: -5.0, multiplicity: 2, zero_mode: false },
                SpectralLine { lambda: 5.0, multiplicity: 2, zero_mode: false },
            ],
            lambda_complete: 10.0,
            window: None,
            provenance: Provenance::Product,
        }
    }

    #[test]
    fn cache_round_trip_and_hit() {
        let dir = std::env::temp_dir().join(format!("ladderlab-cache-test-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let subset = serde_json::json!({"test": 1});
        let mut cache = SpectrumCache::open(&dir, subset.clone()).unwrap();
        let s1 = cache.get_or_compute(3, || Ok(sample_slice())).unwrap();
        assert_eq!(cache.misses, 1);
        cache.flush().unwrap();
        let mut cache2 = SpectrumCache::open(&dir, subset).unwrap();
        let s2 = cache2
            .get_or_compute(3, || panic!("must hit the cache"))
            .unwrap();
        assert_eq!(cache2.hits, 1);
        assert_eq!(s1.entries.len(), s2.entries.len());
        assert_eq!(s1.entries[0].lambda, s2.entries[0].lambda);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn corruption_is_detected() {
        let dir =
            std::env::temp_dir().join(format!("ladderlab-corrupt-test-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let subset = serde_json::json!({"test": 2});
        let mut cache = SpectrumCache::open(&dir, subset.clone()).unwrap();
        cache.get_or_compute(3, || Ok(sample_slice())).unwrap();
        cache.flush().unwrap();
        // flip a byte in the cached csv
        let csv = cache.dir().join("m3.csv");
        let mut bytes = fs::read(&csv).unwrap();
        let last = bytes.len() - 2;
        bytes[last] = b'9';
        fs::write(&csv, bytes).unwrap();
        let mut cache2 = SpectrumCache::open(&dir, subset).unwrap();
        let err = cache2
            .get_or_compute(3, || Ok(sample_slice()))
            .unwrap_err();
        assert!(matches!(err, CliError::Cache(_)));
        assert!(err.to_string().contains("delete"));
        let _ = fs::remove_dir_all(&dir);
    }
}
