use std::collections::BTreeMap;

use super::Value;

/// Outcome of looking up a name. An unbound name is never mapped to a
/// default value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lookup<'a> {
    Bound(&'a Value),
    Unbound,
}

/// Global bindings of a kernel (the master's or a worker's).
///
/// Task evaluation only ever reads from an `Env`; builder temporaries live
/// on the Rust stack, so nothing a task computes can leak in here.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    bindings: BTreeMap<String, Value>,
}

/// `letter (letter | digit | '_')*`, ASCII only.
pub fn is_identifier(name: &str) -> bool {
    let mut bytes = name.bytes();
    bytes.next().is_some_and(|b| b.is_ascii_alphabetic())
        && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&self, name: &str) -> Lookup<'_> {
        match self.bindings.get(name) {
            Some(v) => Lookup::Bound(v),
            None => Lookup::Unbound,
        }
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.get(name)
    }

    /// Bind `name`, replacing any previous value. Returns false (and leaves
    /// the environment untouched) if `name` is not a valid identifier.
    pub fn bind(&mut self, name: &str, value: Value) -> bool {
        if !is_identifier(name) {
            return false;
        }
        self.bindings.insert(name.to_owned(), value);
        true
    }

    pub fn unbind(&mut self, name: &str) -> Option<Value> {
        self.bindings.remove(name)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Bindings in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }
}
