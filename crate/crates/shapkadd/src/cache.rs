use std::collections::HashMap;
use std::sync::Mutex;

use shapkadd_core::{Coalition, Error as CoreError, Game, PlayerCount, Result as CoreResult};

/// Thread-safe memo around any game, counting distinct coalitions evaluated.
#[derive(Debug)]
pub struct CachedGame<G> {
    inner: G,
    memo: Mutex<HashMap<u64, f64>>,
}

impl<G: Game> CachedGame<G> {
    pub fn new(inner: G) -> Self {
        Self {
            inner,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn evaluations(&self) -> usize {
        self.memo.lock().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn inner(&self) -> &G {
        &self.inner
    }
}

impl<G: Game> Game for CachedGame<G> {
    fn players(&self) -> PlayerCount {
        self.inner.players()
    }

    fn value(&self, c: Coalition) -> CoreResult<f64> {
        if let Some(&v) = self
            .memo
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .get(&c.bits())
        {
            return Ok(v);
        }
        // evaluated outside the lock; a concurrent duplicate is harmless for a deterministic game
        let v = self.inner.value(c)?;
        if !v.is_finite() {
            return Err(CoreError::NonFinite {
                bits: c.bits(),
                value: v,
            });
        }
        self.memo
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .entry(c.bits())
            .or_insert(v);
        Ok(v)
    }
}
