use std::fmt;

use crate::error::{Error, Result};

/// Label of the probe mode in the canonical twin-beam mode set.
pub const PROBE: &str = "a";
/// Label of the conjugate mode in the canonical twin-beam mode set.
pub const CONJUGATE: &str = "b";

/// Ordered, duplicate-free list of bosonic mode labels.
///
/// Index 0 is always the probe and index 1 the conjugate. Loss ancillas are
/// appended after them in allocation order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModeSet {
    labels: Vec<String>,
}

impl ModeSet {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::InvalidModeSet(
                "probe and conjugate modes are required".into(),
            ));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::ModeCollision(l.clone()));
            }
        }
        Ok(Self { labels })
    }

    /// The probe/conjugate pair `(a, b)` with no ancillas.
    pub fn twin_beam() -> Self {
        Self {
            labels: vec![PROBE.to_string(), CONJUGATE.to_string()],
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probe(&self) -> &str {
        &self.labels[0]
    }

    pub fn conjugate(&self) -> &str {
        &self.labels[1]
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    /// Returns a copy with `label` appended, failing if it is already taken.
    pub fn with_mode(&self, label: &str) -> Result<Self> {
        if self.contains(label) {
            return Err(Error::ModeCollision(label.to_string()));
        }
        let mut labels = self.labels.clone();
        labels.push(label.to_string());
        Ok(Self { labels })
    }

    /// True when `self` is a leading prefix of `other`.
    pub fn is_prefix_of(&self, other: &ModeSet) -> bool {
        other.labels.len() >= self.labels.len() && other.labels[..self.labels.len()] == self.labels[..]
    }
}

impl fmt::Display for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.labels.join(", "))
    }
}
