use alloc::string::String;
use core::fmt;

use super::units::{self, Unit};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.into())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl core::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(
    /// Opaque entity identifier, e.g. a Wikidata Q-number. Types are entities too.
    EntityId
);
string_id!(
    /// Opaque property identifier.
    PropertyId
);

/// A finite number with an optional unit tag from the registry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Option<Unit>,
}

impl Quantity {
    pub fn new(value: f64, unit: Option<Unit>) -> Self {
        Self { value, unit }
    }

    pub fn plain(value: f64) -> Self {
        Self { value, unit: None }
    }

    /// Value expressed in `unit`, or `None` across dimensions.
    pub fn in_unit(&self, unit: Option<Unit>) -> Option<f64> {
        units::convert(self.value, self.unit, unit)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            Some(u) => write!(f, "{} {}", self.value, u),
            None => write!(f, "{}", self.value),
        }
    }
}

/// Object position of a triple.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectValue {
    Entity(EntityId),
    Number(Quantity),
    Text(String),
    /// ISO-8601 date, possibly truncated to year or month precision.
    Time(String),
}

impl ObjectValue {
    pub fn as_quantity(&self) -> Option<&Quantity> {
        match self {
            ObjectValue::Number(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_entity(&self) -> Option<&EntityId> {
        match self {
            ObjectValue::Entity(e) => Some(e),
            _ => None,
        }
    }
}

/// Accepts `[-]YYYY[-MM[-DD]][T...]`.
pub fn is_iso_date(s: &str) -> bool {
    let date = s.split('T').next().unwrap_or("");
    let date = date.strip_prefix('-').unwrap_or(date);
    let mut parts = date.split('-');
    let year_ok = parts
        .next()
        .is_some_and(|y| !y.is_empty() && y.bytes().all(|b| b.is_ascii_digit()));
    let rest: alloc::vec::Vec<&str> = parts.collect();
    year_ok
        && rest.len() <= 2
        && rest
            .iter()
            .all(|p| p.len() == 2 && p.bytes().all(|b| b.is_ascii_digit()))
}

/// The (possibly negative) year of an ISO-8601 date string.
pub fn iso_year(s: &str) -> Option<i64> {
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s),
    };
    let digits: String = body.chars().take_while(|c| c.is_ascii_digit()).collect();
    digits.parse::<i64>().ok().map(|y| sign * y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub subject: EntityId,
    pub property: PropertyId,
    pub object: ObjectValue,
}
