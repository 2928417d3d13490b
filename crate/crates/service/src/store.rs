//! Scenario store and simulation runs shared by the HTTP handlers.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use seamesh_core::engine::{run_simulation, MetricsHeader, MetricsRecord, TerminalTrack};
use seamesh_core::model::Scenario;

use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredScenario {
    pub id: String,
    pub revision: u64,
    pub scenario: Scenario,
}

#[derive(Debug)]
pub enum StoreError {
    NotFound,
    RevisionMismatch { current: u64 },
    ActiveRuns,
    Io(io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pending,
    Running,
    Done,
    Failed,
}

impl RunStatus {
    pub fn is_active(self) -> bool {
        matches!(self, RunStatus::Pending | RunStatus::Running)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHandle {
    pub schema_version: u32,
    pub id: String,
    pub scenario_id: String,
    pub status: RunStatus,
    pub progress: f64,
    pub records: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsPage {
    pub schema_version: u32,
    pub run_id: String,
    pub header: MetricsHeader,
    pub records: Vec<MetricsRecord>,
    /// `from_t` for the next page; absent once a finished run is exhausted.
    pub next_from_t: Option<f64>,
}

struct RunState {
    status: RunStatus,
    progress: f64,
    error: Option<String>,
}

pub struct Run {
    pub id: String,
    pub scenario_id: String,
    header: MetricsHeader,
    state: Mutex<RunState>,
    records: RwLock<Vec<MetricsRecord>>,
}

const PUBLISH_BATCH: usize = 512;

impl Run {
    pub fn handle(&self) -> RunHandle {
        let st = self.state.lock().expect("run state");
        RunHandle {
            schema_version: SCHEMA_VERSION,
            id: self.id.clone(),
            scenario_id: self.scenario_id.clone(),
            status: st.status,
            progress: st.progress,
            records: self.records.read().expect("run records").len(),
            error: st.error.clone(),
        }
    }

    pub fn status(&self) -> RunStatus {
        self.state.lock().expect("run state").status
    }

    /// Records with `t >= from_t`, at most `limit` of them.
    pub fn page(&self, from_t: f64, limit: usize) -> MetricsPage {
        // read the status first so a run finishing in between cannot drop
        // the tail of the log
        let active = self.status().is_active();
        let records = self.records.read().expect("run records");
        let start = records.partition_point(|r| r.t < from_t);
        let end = start.saturating_add(limit).min(records.len());
        let next_from_t = if end < records.len() || active {
            // index times dt is the same expression the engine uses for t
            Some((end as f64 * self.header.dt_s).max(from_t))
        } else {
            None
        };
        MetricsPage {
            schema_version: SCHEMA_VERSION,
            run_id: self.id.clone(),
            header: self.header.clone(),
            records: records[start..end].to_vec(),
            next_from_t,
        }
    }

    fn set(&self, status: RunStatus, progress: f64, error: Option<String>) {
        let mut st = self.state.lock().expect("run state");
        st.status = status;
        st.progress = progress;
        st.error = error;
    }
}

#[derive(Default)]
pub struct Store {
    scenarios: RwLock<BTreeMap<String, Arc<StoredScenario>>>,
    runs: RwLock<BTreeMap<String, Arc<Run>>>,
    dir: Option<PathBuf>,
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

impl Store {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Store backed by one JSON document per scenario in `dir`. Existing
    /// documents are loaded.
    pub fn with_dir(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut scenarios = BTreeMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = fs::read_to_string(&path)?;
            let doc: StoredScenario = serde_json::from_str(&text)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))?;
            scenarios.insert(doc.id.clone(), Arc::new(doc));
        }
        Ok(Self { scenarios: RwLock::new(scenarios), runs: RwLock::default(), dir: Some(dir) })
    }

    fn persist(&self, doc: &StoredScenario) -> io::Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        write_atomic(&dir.join(format!("{}.json", doc.id)), &serde_json::to_vec_pretty(doc)?)
    }

    pub fn insert(&self, scenario: Scenario) -> io::Result<Arc<StoredScenario>> {
        let doc = Arc::new(StoredScenario { id: new_id(), revision: 1, scenario });
        self.persist(&doc)?;
        self.scenarios.write().expect("scenarios").insert(doc.id.clone(), doc.clone());
        Ok(doc)
    }

    pub fn get(&self, id: &str) -> Option<Arc<StoredScenario>> {
        self.scenarios.read().expect("scenarios").get(id).cloned()
    }

    pub fn has_active_runs(&self, scenario_id: &str) -> bool {
        self.runs
            .read()
            .expect("runs")
            .values()
            .any(|r| r.scenario_id == scenario_id && r.status().is_active())
    }

    /// Swaps in a new document. Readers holding the old `Arc` keep a
    /// consistent copy.
    pub fn replace(
        &self,
        id: &str,
        scenario: Scenario,
        expected_revision: Option<u64>,
    ) -> Result<Arc<StoredScenario>, StoreError> {
        let mut map = self.scenarios.write().expect("scenarios");
        let current = map.get(id).ok_or(StoreError::NotFound)?;
        if let Some(rev) = expected_revision {
            if rev != current.revision {
                return Err(StoreError::RevisionMismatch { current: current.revision });
            }
        }
        if self.has_active_runs(id) {
            return Err(StoreError::ActiveRuns);
        }
        let doc = Arc::new(StoredScenario { id: id.to_string(), revision: current.revision + 1, scenario });
        self.persist(&doc).map_err(StoreError::Io)?;
        map.insert(id.to_string(), doc.clone());
        Ok(doc)
    }

    pub fn run(&self, id: &str) -> Option<Arc<Run>> {
        self.runs.read().expect("runs").get(id).cloned()
    }

    /// Validates the run request and starts the simulation on its own
    /// thread.
    pub fn start_run(
        &self,
        doc: &StoredScenario,
        scenario: Scenario,
        terminals: Vec<TerminalTrack>,
    ) -> seamesh_core::Result<Arc<Run>> {
        let sim = run_simulation(&scenario, &terminals)?;
        let run = Arc::new(Run {
            id: new_id(),
            scenario_id: doc.id.clone(),
            header: sim.header(),
            state: Mutex::new(RunState { status: RunStatus::Pending, progress: 0.0, error: None }),
            records: RwLock::new(Vec::new()),
        });
        self.runs.write().expect("runs").insert(run.id.clone(), run.clone());
        let worker = run.clone();
        std::thread::spawn(move || {
            worker.set(RunStatus::Running, 0.0, None);
            let total = sim.record_count().max(1) as f64;
            let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                let mut batch = Vec::with_capacity(PUBLISH_BATCH);
                let mut done = 0usize;
                for rec in sim {
                    batch.push(rec);
                    if batch.len() == PUBLISH_BATCH {
                        done += batch.len();
                        worker.records.write().expect("run records").append(&mut batch);
                        worker.set(RunStatus::Running, done as f64 / total, None);
                    }
                }
                worker.records.write().expect("run records").append(&mut batch);
            }));
            match outcome {
                Ok(()) => worker.set(RunStatus::Done, 1.0, None),
                Err(_) => {
                    let progress = worker.handle().progress;
                    worker.set(RunStatus::Failed, progress, Some("simulation worker panicked".into()));
                }
            }
        });
        Ok(run)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use seamesh_core::engine::build_redsea_scenario;

    fn pending_run(store: &Store, scenario_id: &str, records: usize) -> Arc<Run> {
        let sim = run_simulation(&build_redsea_scenario(), &[]).unwrap();
        let run = Arc::new(Run {
            id: new_id(),
            scenario_id: scenario_id.into(),
            header: sim.header(),
            state: Mutex::new(RunState { status: RunStatus::Running, progress: 0.0, error: None }),
            records: RwLock::new(sim.take(records).collect()),
        });
        store.runs.write().unwrap().insert(run.id.clone(), run.clone());
        run
    }

    #[test]
    fn active_run_blocks_replace() {
        let store = Store::in_memory();
        let doc = store.insert(build_redsea_scenario()).unwrap();
        let run = pending_run(&store, &doc.id, 0);
        assert!(matches!(store.replace(&doc.id, build_redsea_scenario(), None), Err(StoreError::ActiveRuns)));
        run.set(RunStatus::Done, 1.0, None);
        assert_eq!(store.replace(&doc.id, build_redsea_scenario(), None).unwrap().revision, 2);
    }

    #[test]
    fn paging_a_running_log_points_past_the_tail() {
        let store = Store::in_memory();
        let run = pending_run(&store, "s", 10);
        let page = run.page(0.0, 100);
        assert_eq!(page.records.len(), 10);
        assert_eq!(page.next_from_t, Some(10.0));
        let empty = run.page(10.0, 100);
        assert!(empty.records.is_empty());
        assert_eq!(empty.next_from_t, Some(10.0));
        run.set(RunStatus::Done, 1.0, None);
        assert_eq!(run.page(10.0, 100).next_from_t, None);
        let mid = run.page(3.0, 4);
        assert_eq!(mid.records.first().map(|r| r.t), Some(3.0));
        assert_eq!(mid.next_from_t, Some(7.0));
    }
}
