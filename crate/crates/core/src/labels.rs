//! Stance classes and the per-user decision type shared by every stage.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the two stance classes of a topic, stored as `0` or `1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Class(u8);

impl Class {
    pub const ZERO: Class = Class(0);
    pub const ONE: Class = Class(1);
    pub const ALL: [Class; 2] = [Class::ZERO, Class::ONE];

    pub fn new(id: u8) -> Option<Class> {
        (id < 2).then_some(Class(id))
    }

    pub fn from_index(index: usize) -> Class {
        assert!(index < 2, "class index {index} out of range");
        Class(index as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn other(self) -> Class {
        Class(1 - self.0)
    }

    /// `+1` for class 0 and `-1` for class 1, the sign convention of the linear models.
    pub fn sign(self) -> i8 {
        if self.0 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn from_sign(sign: i8) -> Class {
        if sign >= 0 {
            Class::ZERO
        } else {
            Class::ONE
        }
    }
}

impl TryFrom<u8> for Class {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Class::new(value).ok_or_else(|| format!("class id must be 0 or 1, got {value}"))
    }
}

impl From<Class> for u8 {
    fn from(c: Class) -> u8 {
        c.0
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Class {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "0" => Ok(Class::ZERO),
            "1" => Ok(Class::ONE),
            other => Err(format!("expected stance label 0 or 1, got {other:?}")),
        }
    }
}

/// A per-user decision: a class, or no decision at all.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StanceLabel {
    Class(Class),
    Unassigned,
}

impl StanceLabel {
    pub fn class(self) -> Option<Class> {
        match self {
            StanceLabel::Class(c) => Some(c),
            StanceLabel::Unassigned => None,
        }
    }

    pub fn is_assigned(self) -> bool {
        matches!(self, StanceLabel::Class(_))
    }
}

impl From<Class> for StanceLabel {
    fn from(c: Class) -> Self {
        StanceLabel::Class(c)
    }
}

impl fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StanceLabel::Class(c) => write!(f, "{c}"),
            StanceLabel::Unassigned => f.write_str("UNASSIGNED"),
        }
    }
}

impl FromStr for StanceLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "UNASSIGNED" => Ok(StanceLabel::Unassigned),
            other => other.parse().map(StanceLabel::Class),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_round_trips_through_text() {
        for c in Class::ALL {
            assert_eq!(c.to_string().parse::<Class>().unwrap(), c);
            assert_eq!(Class::from_sign(c.sign()), c);
        }
        assert!("2".parse::<Class>().is_err());
        assert_eq!(
            "UNASSIGNED".parse::<StanceLabel>().unwrap(),
            StanceLabel::Unassigned
        );
    }
}
