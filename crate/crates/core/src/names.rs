//! Dotted qualified names such as `pandas.core.frame.DataFrame`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A dot-joined name with at least one segment.
///
/// Segments are non-empty and contain no whitespace. Anything else is
/// accepted, since runtime-reported names carry things like `numpy.bool_`
/// and call-path markers like `pandas.read_csv().dropna`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QualifiedName(String);

impl QualifiedName {
    pub fn parse(text: &str) -> Result<Self, Error> {
        if text.is_empty() || text.chars().any(char::is_whitespace) || text.split('.').any(str::is_empty) {
            return Err(Error::InvalidName(text.to_owned()));
        }
        Ok(QualifiedName(text.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.0.split('.')
    }

    pub fn segment_count(&self) -> usize {
        self.0.split('.').count()
    }

    /// Last segment.
    pub fn short_name(&self) -> &str {
        self.0.rsplit('.').next().unwrap_or(&self.0)
    }

    /// First segment: the top-level package the name lives in.
    pub fn library(&self) -> &str {
        self.0.split('.').next().unwrap_or(&self.0)
    }

    /// Every strict prefix, shortest first (`a.b.c` yields `a`, `a.b`).
    pub fn prefixes(&self) -> impl Iterator<Item = QualifiedName> + '_ {
        self.0
            .match_indices('.')
            .map(move |(i, _)| QualifiedName(self.0[..i].to_owned()))
    }
}

impl fmt::Display for QualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for QualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`", self.0)
    }
}

impl FromStr for QualifiedName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QualifiedName::parse(s)
    }
}

impl AsRef<str> for QualifiedName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for QualifiedName {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for QualifiedName {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        QualifiedName::parse(&text).map_err(serde::de::Error::custom)
    }
}
