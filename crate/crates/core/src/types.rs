use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Reference point a referential recording was measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceScheme {
    /// Linked ears (A1/A2).
    Le,
    /// Average reference.
    Ar,
    /// Common vertex (CZ).
    Cv,
    Unknown,
}

impl ReferenceScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            ReferenceScheme::Le => "LE",
            ReferenceScheme::Ar => "AR",
            ReferenceScheme::Cv => "CV",
            ReferenceScheme::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for ReferenceScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReferenceScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LE" => Ok(ReferenceScheme::Le),
            "AR" => Ok(ReferenceScheme::Ar),
            "CV" | "CZ" => Ok(ReferenceScheme::Cv),
            "UNKNOWN" => Ok(ReferenceScheme::Unknown),
            other => Err(format!("unknown reference scheme '{other}'")),
        }
    }
}

/// Event class of a labelled span or epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EventClass {
    Seiz,
    Bckg,
}

impl EventClass {
    pub const ALL: [EventClass; 2] = [EventClass::Seiz, EventClass::Bckg];

    pub fn as_str(self) -> &'static str {
        match self {
            EventClass::Seiz => "SEIZ",
            EventClass::Bckg => "BCKG",
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            EventClass::Seiz => 0,
            EventClass::Bckg => 1,
        }
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SEIZ" => Ok(EventClass::Seiz),
            "BCKG" => Ok(EventClass::Bckg),
            other => Err(other.to_string()),
        }
    }
}

/// Montage condition of a train or eval split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MontageTag {
    #[serde(rename = "LE")]
    Le,
    #[serde(rename = "AR")]
    Ar,
    #[serde(rename = "LE+AR")]
    LeAr,
}

impl MontageTag {
    pub const ALL: [MontageTag; 3] = [MontageTag::Le, MontageTag::Ar, MontageTag::LeAr];

    pub fn as_str(self) -> &'static str {
        match self {
            MontageTag::Le => "LE",
            MontageTag::Ar => "AR",
            MontageTag::LeAr => "LE+AR",
        }
    }

    /// Whether data recorded under `scheme` belongs to this condition.
    pub fn includes(self, scheme: ReferenceScheme) -> bool {
        match self {
            MontageTag::Le => scheme == ReferenceScheme::Le,
            MontageTag::Ar => scheme == ReferenceScheme::Ar,
            MontageTag::LeAr => matches!(scheme, ReferenceScheme::Le | ReferenceScheme::Ar),
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            MontageTag::Le => 0,
            MontageTag::Ar => 1,
            MontageTag::LeAr => 2,
        }
    }
}

impl fmt::Display for MontageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
