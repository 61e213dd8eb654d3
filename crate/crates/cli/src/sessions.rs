use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crosstrace_core::abstraction::{Policy, ViewState};
use uuid::Uuid;

use crate::error::ApiError;
use crate::registry::ProgramRecord;

pub const IDLE_TIMEOUT: Duration = Duration::from_secs(60 * 60);

pub struct Session {
    pub session_id: String,
    pub program: Arc<ProgramRecord>,
    pub view: ViewState,
    pub last_active: Instant,
}

/// In-memory sessions. Each session has its own lock, so actions on one
/// session apply in arrival order while other sessions proceed in parallel.
pub struct Sessions {
    idle: Duration,
    map: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

impl Default for Sessions {
    fn default() -> Self {
        Self::new(IDLE_TIMEOUT)
    }
}

impl Sessions {
    pub fn new(idle: Duration) -> Self {
        Sessions { idle, map: Mutex::new(HashMap::new()) }
    }

    pub fn create(&self, program: Arc<ProgramRecord>, policy: Policy) -> Arc<Mutex<Session>> {
        let session_id = Uuid::new_v4().to_string();
        let view = ViewState::initial(program.trace.clone(), policy);
        let s = Arc::new(Mutex::new(Session { session_id: session_id.clone(), program, view, last_active: Instant::now() }));
        self.map.lock().expect("session map").insert(session_id, s.clone());
        s
    }

    /// Runs `f` with exclusive access to the session and marks it active.
    pub fn with<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> T) -> Result<T, ApiError> {
        let s = self
            .map
            .lock()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("UnknownSession", format!("no session {id}")))?;
        let mut s = s.lock().expect("session");
        if s.last_active.elapsed() > self.idle {
            drop(s);
            self.map.lock().expect("session map").remove(id);
            return Err(ApiError::not_found("UnknownSession", format!("session {id} expired")));
        }
        s.last_active = Instant::now();
        Ok(f(&mut s))
    }

    /// Drops sessions idle for longer than the timeout; returns how many.
    pub fn evict_idle(&self) -> usize {
        let mut map = self.map.lock().expect("session map");
        let before = map.len();
        map.retain(|_, s| s.lock().map(|s| s.last_active.elapsed() <= self.idle).unwrap_or(false));
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("session map").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::Registry;

    #[test]
    fn idle_sessions_expire() {
        let program = Registry::new(None).create("let x = 1;", 0).unwrap();
        let store = Sessions::new(Duration::ZERO);
        let id = store.create(program.clone(), Policy::default()).lock().unwrap().session_id.clone();
        std::thread::sleep(Duration::from_millis(5));
        assert!(store.with(&id, |_| ()).is_err());
        assert!(store.is_empty());
        store.create(program, Policy::default());
        std::thread::sleep(Duration::from_millis(5));
        assert_eq!(store.evict_idle(), 1);
    }

    #[test]
    fn actions_are_scoped_to_a_session() {
        let program = Registry::new(None).create("let x = 1;\nlet y = x;\n", 0).unwrap();
        let store = Sessions::default();
        let a = store.create(program.clone(), Policy::default()).lock().unwrap().session_id.clone();
        let b = store.create(program, Policy::default()).lock().unwrap().session_id.clone();
        store.with(&a, |s| s.view.apply(&crosstrace_core::Action::MoveCursor(crosstrace_core::abstraction::CursorTarget::Delta { delta: 1 })))
            .unwrap()
            .unwrap();
        assert_eq!(store.with(&a, |s| s.view.log().len()).unwrap(), 1);
        assert_eq!(store.with(&b, |s| s.view.log().len()).unwrap(), 0);
    }
}
