use std::fs;
use std::path::Path as FsPath;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::toolkit::{Evidence, ToolCall};
use crate::memo::MemoTable;
use crate::world::{WorldError, WorldModel};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed memory file: {0}")]
    Format(#[from] serde_json::Error),
}

pub(crate) fn read_file(path: &FsPath) -> Result<Vec<u8>, PersistError> {
    fs::read(path).map_err(|source| PersistError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn write_file(path: &FsPath, bytes: &[u8]) -> Result<(), PersistError> {
    fs::write(path, bytes).map_err(|source| PersistError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// (location scope, toolkit op, canonical args).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MemoryKey {
    pub scope: String,
    pub op: String,
    pub args: String,
}

impl MemoryKey {
    pub fn of(call: &ToolCall, world: &WorldModel) -> Self {
        MemoryKey {
            scope: call.location_key(world),
            op: call.op_name().to_string(),
            args: serde_json::to_string(call).expect("tool call serializes"),
        }
    }
}

/// Verified and refuted toolkit observations, filed by location and bound
/// to one world digest. Binding to a different digest empties it.
#[derive(Debug, Default)]
pub struct SpatialMemory {
    table: MemoTable<MemoryKey, Evidence>,
    digest: RwLock<Option<String>>,
}

#[derive(Serialize, Deserialize)]
struct MemoryFile {
    world_digest: Option<String>,
    entries: Vec<MemoryEntry>,
}

#[derive(Serialize, Deserialize)]
struct MemoryEntry {
    key: MemoryKey,
    evidence: Evidence,
}

impl SpatialMemory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Invalidate everything unless the memory already belongs to `digest`.
    pub fn bind(&self, digest: &str) {
        let mut bound = self.digest.write().expect("memory lock");
        if bound.as_deref() != Some(digest) {
            self.table.clear();
            *bound = Some(digest.to_string());
        }
    }

    pub fn world_digest(&self) -> Option<String> {
        self.digest.read().expect("memory lock").clone()
    }

    pub fn lookup(&self, call: &ToolCall, world: &WorldModel) -> Option<Evidence> {
        self.table
            .lookup(&MemoryKey::of(call, world))
            .filter(|e| e.world_digest == world.digest())
    }

    /// Serve `call` from memory, or run it and remember the result.
    /// Returns the evidence and whether it was a hit.
    pub fn resolve(&self, call: &ToolCall, world: &WorldModel) -> Result<(Evidence, bool), WorldError> {
        if let Some(ev) = self.lookup(call, world) {
            return Ok((ev, true));
        }
        let ev = call.evidence(world)?;
        Ok((self.table.insert(MemoryKey::of(call, world), ev), false))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.table.hits()
    }

    pub fn misses(&self) -> u64 {
        self.table.misses()
    }

    pub fn to_json(&self) -> String {
        let file = MemoryFile {
            world_digest: self.world_digest(),
            entries: self
                .table
                .snapshot()
                .into_iter()
                .map(|(key, evidence)| MemoryEntry { key, evidence })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("memory serializes")
    }

    pub fn from_json(text: &[u8]) -> Result<Self, PersistError> {
        let file: MemoryFile = serde_json::from_slice(text)?;
        Ok(SpatialMemory {
            table: MemoTable::from_entries(file.entries.into_iter().map(|e| (e.key, e.evidence))),
            digest: RwLock::new(file.world_digest),
        })
    }

    /// Load from `path`, or start empty if the file does not exist.
    pub fn load_or_default(path: &FsPath) -> Result<Self, PersistError> {
        if !path.exists() {
            return Ok(Self::new());
        }
        Self::from_json(&read_file(path)?)
    }

    pub fn save(&self, path: &FsPath) -> Result<(), PersistError> {
        write_file(path, self.to_json().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::toolkit::tests::campus;
    use crate::world::fixtures::line_world;

    #[test]
    fn second_resolve_is_a_hit_with_identical_evidence() {
        let w = campus();
        let m = SpatialMemory::new();
        m.bind(w.digest());
        let call = ToolCall::PathTraversable { a: "lib_hall".into(), b: "hosp_lobby".into() };
        let (fresh, hit) = m.resolve(&call, &w).unwrap();
        assert!(!hit);
        let (cached, hit) = m.resolve(&call, &w).unwrap();
        assert!(hit);
        assert_eq!(fresh, cached);
        assert_eq!(cached, call.evidence(&w).unwrap());
    }

    #[test]
    fn rebinding_to_another_world_invalidates() {
        let w = campus();
        let m = SpatialMemory::new();
        m.bind(w.digest());
        m.resolve(&ToolCall::SensorsCovering { node: "store".into() }, &w).unwrap();
        assert_eq!(m.len(), 1);
        m.bind(w.digest());
        assert_eq!(m.len(), 1);
        m.bind(line_world().digest());
        assert!(m.is_empty());
    }

    #[test]
    fn persists_round_trip() {
        let w = campus();
        let m = SpatialMemory::new();
        m.bind(w.digest());
        m.resolve(&ToolCall::SensorsCovering { node: "store".into() }, &w).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mem.json");
        m.save(&path).unwrap();
        let back = SpatialMemory::load_or_default(&path).unwrap();
        assert_eq!(back.world_digest().as_deref(), Some(w.digest()));
        assert_eq!(back.to_json(), m.to_json());
        assert!(SpatialMemory::load_or_default(&dir.path().join("absent.json"))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn building_scopes_share_a_location_key() {
        let w = campus();
        let call = ToolCall::DoorsVerify {
            scope: ["lib_hall".to_string(), "lib_reading".to_string()].into(),
        };
        assert_eq!(MemoryKey::of(&call, &w).scope, "building:library");
    }
}
