use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// String id → provider lookup. Used for generators, embedders, sentiment
/// estimators and classifiers.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Arc<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, id: impl Into<String>, provider: Arc<T>) -> &mut Self {
        self.entries.insert(id.into(), provider);
        self
    }

    pub fn get(&self, id: &str) -> Result<Arc<T>> {
        self.entries.get(id).cloned().ok_or_else(|| {
            Error::Config(format!(
                "unknown {} backend `{id}` (registered: {})",
                self.kind,
                self.ids().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}
