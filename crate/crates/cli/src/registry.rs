use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use crosstrace_core::trace::{trace_to_json, SnapshotMode};
use crosstrace_core::{execute, parse, ExecConfig, Trace};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::ApiError;

pub const MAX_SOURCE_BYTES: usize = 64 * 1024;

/// Content address of a program run.
pub fn program_id(source: &str, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(source.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Meta {
    source: String,
    seed: u64,
    created_at: u64,
}

#[derive(Debug)]
pub struct ProgramRecord {
    pub program_id: String,
    pub source: String,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub trace: Arc<Trace>,
}

impl ProgramRecord {
    pub fn summary(&self) -> Value {
        json!({
            "programId": self.program_id,
            "seed": self.seed,
            "createdAt": self.created_at,
            "totalOps": self.trace.total_ops(),
            "finalGlobals": self.trace.final_snapshot().plain_globals(),
        })
    }
}

/// Parsed and executed programs, cached in memory and in a content-addressed
/// directory. Traces are deterministic, so only the source and seed go to disk
/// next to the trace JSON; a restart re-executes on first access.
pub struct Registry {
    dir: Option<PathBuf>,
    programs: RwLock<HashMap<String, Arc<ProgramRecord>>>,
}

impl Registry {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Registry { dir, programs: RwLock::new(HashMap::new()) }
    }

    /// Cache directory from `CROSSTRACE_CACHE`, default `./cache`.
    pub fn from_env() -> Self {
        let dir = std::env::var_os("CROSSTRACE_CACHE").map(PathBuf::from).unwrap_or_else(|| "cache".into());
        Self::new(Some(dir))
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn create(&self, source: &str, seed: u64) -> Result<Arc<ProgramRecord>, ApiError> {
        if source.is_empty() || source.len() > MAX_SOURCE_BYTES {
            return Err(ApiError::bad_request(
                "InvalidSource",
                format!("source must be 1 to {MAX_SOURCE_BYTES} bytes, got {}", source.len()),
            ));
        }
        let id = program_id(source, seed);
        if let Some(r) = self.lookup(&id) {
            return Ok(r);
        }
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let record = Arc::new(build(id, Meta { source: source.into(), seed, created_at })?);
        self.persist(&record);
        Ok(self.insert(record))
    }

    pub fn get(&self, id: &str) -> Result<Arc<ProgramRecord>, ApiError> {
        if let Some(r) = self.lookup(id) {
            return Ok(r);
        }
        let unknown = || ApiError::not_found("UnknownProgram", format!("no program {id}"));
        if id.len() != 64 || !id.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(unknown());
        }
        let dir = self.dir.as_ref().ok_or_else(unknown)?;
        let text = std::fs::read_to_string(dir.join(format!("{id}.json"))).map_err(|_| unknown())?;
        let meta: Meta = serde_json::from_str(&text).map_err(|e| ApiError::internal(e.to_string()))?;
        if program_id(&meta.source, meta.seed) != id {
            return Err(unknown());
        }
        Ok(self.insert(Arc::new(build(id.into(), meta)?)))
    }

    fn lookup(&self, id: &str) -> Option<Arc<ProgramRecord>> {
        self.programs.read().expect("registry lock").get(id).cloned()
    }

    fn insert(&self, record: Arc<ProgramRecord>) -> Arc<ProgramRecord> {
        let mut map = self.programs.write().expect("registry lock");
        map.entry(record.program_id.clone()).or_insert(record).clone()
    }

    fn persist(&self, r: &ProgramRecord) {
        let Some(dir) = &self.dir else { return };
        let meta = Meta { source: r.source.clone(), seed: r.seed, created_at: r.created_at };
        let write = || -> std::io::Result<()> {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{}.json", r.program_id)), serde_json::to_vec(&meta)?)?;
            let trace = trace_to_json(&r.trace, SnapshotMode::None);
            std::fs::write(dir.join(format!("{}.trace.json", r.program_id)), serde_json::to_vec(&trace)?)
        };
        // The cache is an optimization; a read-only directory only costs re-execution.
        if let Err(e) = write() {
            eprintln!("warning: could not write cache entry {}: {e}", r.program_id);
        }
    }
}

fn build(program_id: String, meta: Meta) -> Result<ProgramRecord, ApiError> {
    let program = parse(&meta.source)?;
    let trace = execute(&program, &ExecConfig::with_seed(meta.seed)).map_err(|a| ApiError::from(a.error))?;
    Ok(ProgramRecord {
        program_id,
        source: meta.source,
        seed: meta.seed,
        created_at: meta.created_at,
        trace: Arc::new(trace),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_depend_on_source_and_seed() {
        assert_eq!(program_id("let x = 1;", 0), program_id("let x = 1;", 0));
        assert_ne!(program_id("let x = 1;", 0), program_id("let x = 1;", 1));
        assert_ne!(program_id("let x = 1;", 0), program_id("let x = 2;", 0));
        assert_eq!(program_id("", 0).len(), 64);
    }

    #[test]
    fn creation_is_idempotent() {
        let r = Registry::new(None);
        let a = r.create("let x = Math.random();", 7).unwrap();
        let b = r.create("let x = Math.random();", 7).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert!(matches!(r.get(&"0".repeat(64)), Err(e) if e.kind == "UnknownProgram"));
    }
}
