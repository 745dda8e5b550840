use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ast::FilterExpr;
use super::eval::check_refs;
use super::parser::is_name_byte;
use super::FilterError;
use crate::model::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SavedFilter {
    pub name: String,
    /// Persisted as filter text.
    pub expr: FilterExpr,
    pub created_at: Timestamp,
}

/// Names usable after `@`: ASCII letters, digits, `_` and `-`.
pub fn is_valid_filter_name(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(is_name_byte)
}

/// Named filters of one course.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<SavedFilter>", into = "Vec<SavedFilter>")]
pub struct FilterStore {
    filters: BTreeMap<String, SavedFilter>,
}

impl From<Vec<SavedFilter>> for FilterStore {
    fn from(list: Vec<SavedFilter>) -> Self {
        Self {
            filters: list.into_iter().map(|f| (f.name.clone(), f)).collect(),
        }
    }
}

impl From<FilterStore> for Vec<SavedFilter> {
    fn from(store: FilterStore) -> Self {
        store.filters.into_values().collect()
    }
}

impl FilterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn lookup(&self, name: &str) -> Option<&SavedFilter> {
        self.filters.get(name)
    }

    /// Saves `expr` under `name`. An existing name is only replaced when
    /// `overwrite` is set. The store is left unchanged on error.
    pub fn save(
        &mut self,
        name: &str,
        expr: FilterExpr,
        created_at: Timestamp,
        overwrite: bool,
    ) -> Result<&SavedFilter, FilterError> {
        if !is_valid_filter_name(name) {
            return Err(FilterError::InvalidName(name.to_string()));
        }
        if self.filters.contains_key(name) && !overwrite {
            return Err(FilterError::NameExists(name.to_string()));
        }
        let saved = SavedFilter {
            name: name.to_string(),
            expr,
            created_at,
        };
        let previous = self.filters.insert(name.to_string(), saved);
        // any cycle created by this insert passes through `name`
        if let Err(e) = check_refs(&FilterExpr::Ref(name.to_string()), self) {
            match previous {
                Some(p) => self.filters.insert(name.to_string(), p),
                None => self.filters.remove(name),
            };
            return Err(e);
        }
        Ok(&self.filters[name])
    }

    pub fn get(&self, name: &str) -> Result<&SavedFilter, FilterError> {
        self.filters
            .get(name)
            .ok_or_else(|| FilterError::NotFound(name.to_string()))
    }

    /// All saved filters ordered by name.
    pub fn list(&self) -> impl Iterator<Item = &SavedFilter> {
        self.filters.values()
    }

    pub fn names(&self) -> Vec<&str> {
        self.filters.keys().map(String::as_str).collect()
    }

    /// Removes `name` unless another saved filter refers to it.
    pub fn delete(&mut self, name: &str) -> Result<SavedFilter, FilterError> {
        if !self.filters.contains_key(name) {
            return Err(FilterError::NotFound(name.to_string()));
        }
        if let Some(user) = self
            .filters
            .values()
            .find(|f| f.name != name && f.expr.refs().contains(&name))
        {
            return Err(FilterError::NameInUse {
                name: name.to_string(),
                by: user.name.clone(),
            });
        }
        Ok(self.filters.remove(name).expect("checked above"))
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}
