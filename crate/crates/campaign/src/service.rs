//! Campaign registry: serializes writers per campaign, persists every event
//! before publishing the new state, and bounds planning time.

use crate::error::{ApiError, ApiResult};
use crate::model::{CampaignState, CreateRequest, Event, Record, Report};
use crate::store::{list_ids, read_log, EventLog};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{Duration, SystemTime, UNIX_EPOCH};
use tokio::sync::{Mutex, OwnedMutexGuard};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Required bearer token, if any.
    pub token: Option<String>,
    /// Longest a recommendation request waits for the planner.
    pub plan_budget: Duration,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self { data_dir: data_dir.into(), token: None, plan_budget: Duration::from_secs(60) }
    }
}

/// Last committed state of one campaign and its log.
#[derive(Clone)]
pub struct Committed {
    pub state: Arc<CampaignState>,
    pub history: Arc<Vec<Record>>,
}

struct Entry {
    log: Arc<Mutex<EventLog>>,
    committed: RwLock<Committed>,
}

impl Entry {
    fn current(&self) -> Committed {
        self.committed.read().expect("lock poisoned").clone()
    }

    /// Applies, persists, then publishes. Callers hold the log lock.
    fn commit(&self, log: &mut EventLog, event: Event) -> ApiResult<Arc<CampaignState>> {
        let cur = self.current();
        let mut next = (*cur.state).clone();
        next.apply(&event)?;
        let record = Record { seq: next.version, ts: now_ms(), event };
        log.append(&record)?;
        let mut history = (*cur.history).clone();
        history.push(record);
        let state = Arc::new(next);
        *self.committed.write().expect("lock poisoned") =
            Committed { state: state.clone(), history: Arc::new(history) };
        Ok(state)
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

pub struct Service {
    cfg: ServiceConfig,
    campaigns: RwLock<BTreeMap<String, Arc<Entry>>>,
}

fn id_number(id: &str) -> Option<u64> {
    id.strip_prefix('c')?.parse().ok()
}

impl Service {
    /// Opens the data directory and replays every campaign found there.
    pub fn open(cfg: ServiceConfig) -> ApiResult<Self> {
        std::fs::create_dir_all(&cfg.data_dir)?;
        let mut campaigns = BTreeMap::new();
        for id in list_ids(&cfg.data_dir)? {
            let path = cfg.data_dir.join(format!("{id}.jsonl"));
            let records = read_log(&path)?;
            let state = CampaignState::replay(&id, &records)
                .map_err(|e| ApiError::Internal(format!("replaying {}: {e}", path.display())))?;
            let entry = Entry {
                log: Arc::new(Mutex::new(EventLog::open(&path)?)),
                committed: RwLock::new(Committed { state: Arc::new(state), history: Arc::new(records) }),
            };
            campaigns.insert(id, Arc::new(entry));
        }
        Ok(Self { cfg, campaigns: RwLock::new(campaigns) })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.cfg
    }

    pub fn ids(&self) -> Vec<String> {
        self.campaigns.read().expect("lock poisoned").keys().cloned().collect()
    }

    fn entry(&self, id: &str) -> ApiResult<Arc<Entry>> {
        self.campaigns
            .read()
            .expect("lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no campaign `{id}`")))
    }

    pub fn get(&self, id: &str) -> ApiResult<Committed> {
        Ok(self.entry(id)?.current())
    }

    pub fn create(&self, req: CreateRequest) -> ApiResult<Arc<CampaignState>> {
        let event = req.into_event();
        let mut state = CampaignState::create("", &event)?;
        let mut campaigns = self.campaigns.write().expect("lock poisoned");
        let next = campaigns.keys().filter_map(|k| id_number(k)).max().unwrap_or(0) + 1;
        let id = format!("c{next:06}");
        state.id = id.clone();
        let mut log = EventLog::create(&self.cfg.data_dir.join(format!("{id}.jsonl")))?;
        let record = Record { seq: 1, ts: now_ms(), event };
        log.append(&record)?;
        let state = Arc::new(state);
        let entry = Entry {
            log: Arc::new(Mutex::new(log)),
            committed: RwLock::new(Committed { state: state.clone(), history: Arc::new(vec![record]) }),
        };
        campaigns.insert(id, Arc::new(entry));
        Ok(state)
    }

    /// Current recommendation, planning it if needed. Planning that runs
    /// past the budget keeps going in the background and is committed when
    /// done; the caller gets `Busy` and retries.
    pub async fn recommend(&self, id: &str) -> ApiResult<Arc<CampaignState>> {
        let entry = self.entry(id)?;
        let guard = entry.log.clone().lock_owned().await;
        let state = entry.current().state;
        if !state.needs_planning()? {
            return Ok(state);
        }
        let task = tokio::spawn(plan_and_commit(entry, guard));
        match tokio::time::timeout(self.cfg.plan_budget, task).await {
            Ok(joined) => joined.map_err(|e| ApiError::Internal(format!("planner task: {e}")))?,
            Err(_) => Err(ApiError::Busy),
        }
    }

    pub async fn observe(&self, id: &str, report: Report) -> ApiResult<Arc<CampaignState>> {
        let entry = self.entry(id)?;
        let mut log = entry.log.lock().await;
        let state = entry.current().state;
        match state.observe(report)? {
            Some(event) => entry.commit(&mut log, event),
            None => Ok(state),
        }
    }

    pub async fn advance(&self, id: &str) -> ApiResult<Arc<CampaignState>> {
        let entry = self.entry(id)?;
        let mut log = entry.log.lock().await;
        let event = entry.current().state.advance()?;
        entry.commit(&mut log, event)
    }
}

async fn plan_and_commit(entry: Arc<Entry>, mut log: OwnedMutexGuard<EventLog>) -> ApiResult<Arc<CampaignState>> {
    let state = entry.current().state;
    let planning = state.clone();
    let event = tokio::task::spawn_blocking(move || planning.recommend())
        .await
        .map_err(|e| ApiError::Internal(format!("planner panicked: {e}")))??;
    match event {
        Some(event) => entry.commit(&mut log, event),
        None => Ok(state),
    }
}
