use std::path::Path as FsPath;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::Schedule;
use crate::grounding::{read_file, write_file, PersistError};
use crate::memo::MemoTable;

/// Compiled schedules keyed by grounded-walk signature.
#[derive(Debug, Default)]
pub struct ProgrammingMemory {
    table: MemoTable<String, Schedule>,
    solver_calls: AtomicU64,
}

#[derive(Serialize, Deserialize)]
struct PmemEntry {
    signature: String,
    schedule: Schedule,
}

impl ProgrammingMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn lookup(&self, signature: &str) -> Option<Schedule> {
        self.table.lookup(&signature.to_string())
    }

    pub(crate) fn store(&self, signature: String, schedule: Schedule) -> Schedule {
        self.table.insert(signature, schedule)
    }

    pub(crate) fn count_solver_calls(&self, n: u64) {
        self.solver_calls.fetch_add(n, Ordering::Relaxed);
    }

    /// Set-cover invocations made by syntheses that missed the cache.
    pub fn solver_calls(&self) -> u64 {
        self.solver_calls.load(Ordering::Relaxed)
    }

    pub fn hits(&self) -> u64 {
        self.table.hits()
    }

    pub fn misses(&self) -> u64 {
        self.table.misses()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_json(&self) -> String {
        let entries: Vec<PmemEntry> = self
            .table
            .snapshot()
            .into_iter()
            .map(|(signature, schedule)| PmemEntry { signature, schedule })
            .collect();
        serde_json::to_string_pretty(&entries).expect("schedules serialize")
    }

    pub fn from_json(text: &[u8]) -> Result<Self, PersistError> {
        let entries: Vec<PmemEntry> = serde_json::from_slice(text)?;
        Ok(ProgrammingMemory {
            table: MemoTable::from_entries(entries.into_iter().map(|e| (e.signature, e.schedule))),
            solver_calls: AtomicU64::new(0),
        })
    }

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
