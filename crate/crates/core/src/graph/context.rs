use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("context key is empty")]
    EmptyKey,
    #[error("context value for key `{0}` is empty")]
    EmptyValue(String),
    #[error("context key `{0}` is not in canonical form")]
    NonCanonicalKey(String),
    #[error("context value `{0}` has surrounding whitespace")]
    UntrimmedValue(String),
    #[error("context key `{0}` has no values")]
    EmptyValueSet(String),
}

/// Attribute multimap attached to nodes and edges.
///
/// Keys are lowercase and trimmed, every key holds a non-empty, deduplicated
/// set of trimmed values. Values are only ever added.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(try_from = "BTreeMap<String, BTreeSet<String>>")]
pub struct ContextMap {
    entries: BTreeMap<String, BTreeSet<String>>,
}

/// Canonical form of a context key: trimmed, lowercase, single inner spaces.
pub fn canonical_key(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn is_canonical_key(key: &str) -> bool {
    !key.is_empty() && canonical_key(key) == key
}

impl ContextMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` under `key`. The key is canonicalised and the value
    /// trimmed. Returns `true` if the value was not already present.
    pub fn insert(&mut self, key: &str, value: &str) -> Result<bool, ContextError> {
        let key = canonical_key(key);
        if key.is_empty() {
            return Err(ContextError::EmptyKey);
        }
        let value = value.trim();
        if value.is_empty() {
            return Err(ContextError::EmptyValue(key));
        }
        Ok(self.entries.entry(key).or_default().insert(value.to_string()))
    }

    /// Unions `other` into `self`; no value is ever dropped.
    pub fn union_with(&mut self, other: &ContextMap) {
        for (key, values) in &other.entries {
            self.entries
                .entry(key.clone())
                .or_default()
                .extend(values.iter().cloned());
        }
    }

    pub fn union(mut self, other: &ContextMap) -> Self {
        self.union_with(other);
        self
    }

    pub fn get(&self, key: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(key)
    }

    pub fn contains(&self, key: &str, value: &str) -> bool {
        self.entries.get(key).is_some_and(|v| v.contains(value))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of keys.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Total number of (key, value) pairs.
    pub fn value_count(&self) -> usize {
        self.entries.values().map(BTreeSet::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// All (key, value) pairs in sorted order.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries
            .iter()
            .flat_map(|(k, vs)| vs.iter().map(move |v| (k.as_str(), v.as_str())))
    }

    /// True when every (key, value) pair of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &ContextMap) -> bool {
        self.pairs().all(|(k, v)| other.contains(k, v))
    }
}

impl Serialize for ContextMap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.entries.serialize(serializer)
    }
}

impl TryFrom<BTreeMap<String, BTreeSet<String>>> for ContextMap {
    type Error = ContextError;

    fn try_from(entries: BTreeMap<String, BTreeSet<String>>) -> Result<Self, Self::Error> {
        for (key, values) in &entries {
            if key.is_empty() {
                return Err(ContextError::EmptyKey);
            }
            if !is_canonical_key(key) {
                return Err(ContextError::NonCanonicalKey(key.clone()));
            }
            if values.is_empty() {
                return Err(ContextError::EmptyValueSet(key.clone()));
            }
            for value in values {
                if value.is_empty() {
                    return Err(ContextError::EmptyValue(key.clone()));
                }
                if value.trim() != value {
                    return Err(ContextError::UntrimmedValue(value.clone()));
                }
            }
        }
        Ok(Self { entries })
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for ContextMap {
    /// Builds a map from pairs, silently skipping pairs with empty keys or values.
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str)>>(iter: I) -> Self {
        let mut map = ContextMap::new();
        for (k, v) in iter {
            let _ = map.insert(k, v);
        }
        map
    }
}

impl fmt::Display for ContextMap {
    /// Renders as `{k=v1,v2; k2=v3}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (key, values)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{key}=")?;
            for (j, v) in values.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                f.write_str(v)?;
            }
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_canonicalises_key_and_trims_value() {
        let mut ctx = ContextMap::new();
        assert!(ctx.insert("  Year ", " 1898 ").unwrap());
        assert!(!ctx.insert("year", "1898").unwrap());
        assert!(ctx.contains("year", "1898"));
        assert_eq!(ctx.value_count(), 1);
    }

    #[test]
    fn rejects_empty_parts() {
        let mut ctx = ContextMap::new();
        assert_eq!(ctx.insert("  ", "x"), Err(ContextError::EmptyKey));
        assert!(matches!(ctx.insert("k", "   "), Err(ContextError::EmptyValue(_))));
        assert!(ctx.is_empty());
    }

    #[test]
    fn union_keeps_all_values() {
        let a: ContextMap = [("occupation", "computer scientist")].into_iter().collect();
        let b: ContextMap = [("occupation", "mathematician"), ("born", "1912")]
            .into_iter()
            .collect();
        let merged = a.clone().union(&b);
        assert_eq!(merged.get("occupation").unwrap().len(), 2);
        assert!(a.is_subset_of(&merged));
        assert!(b.is_subset_of(&merged));
    }

    #[test]
    fn deserialize_validates() {
        let ok: ContextMap = serde_json::from_str(r#"{"year":["1898"]}"#).unwrap();
        assert!(ok.contains("year", "1898"));
        assert!(serde_json::from_str::<ContextMap>(r#"{"Year":["1898"]}"#).is_err());
        assert!(serde_json::from_str::<ContextMap>(r#"{"year":[]}"#).is_err());
        assert!(serde_json::from_str::<ContextMap>(r#"{"year":[" 1898"]}"#).is_err());
    }

    #[test]
    fn display_is_compact() {
        let ctx: ContextMap = [("year", "1898"), ("place", "paris")].into_iter().collect();
        assert_eq!(ctx.to_string(), "{place=paris; year=1898}");
    }
}
