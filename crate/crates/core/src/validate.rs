use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// A single broken invariant, named by the config key that carries it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl Violation {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }

    /// Re-roots the key under `prefix` (`"x"` becomes `"prefix.x"`).
    pub fn nested(mut self, prefix: &str) -> Self {
        self.key = format!("{prefix}.{}", self.key);
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// Invariant checking for configuration types. Reports every violation.
pub trait Validate {
    fn violations(&self) -> Vec<Violation>;

    fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

/// Collects violations with key prefixes.
#[derive(Default)]
pub(crate) struct Checker {
    pub(crate) out: Vec<Violation>,
}

impl Checker {
    pub(crate) fn check(&mut self, ok: bool, key: &str, message: impl Into<String>) {
        if !ok {
            self.out.push(Violation::new(key, message));
        }
    }

    pub(crate) fn finite(&mut self, value: f64, key: &str) {
        self.check(value.is_finite(), key, format!("must be finite, got {value}"));
    }

    pub(crate) fn probability(&mut self, value: f64, key: &str) {
        self.check(
            (0.0..=1.0).contains(&value),
            key,
            format!("must be a probability in [0, 1], got {value}"),
        );
    }

    pub(crate) fn nested(&mut self, prefix: &str, inner: Vec<Violation>) {
        self.out.extend(inner.into_iter().map(|v| v.nested(prefix)));
    }
}
