//! Fixed unit registry used to compare quantities across unit tags.

use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    Length,
    Mass,
    /// Pure powers-of-ten scalings such as "thousand".
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unit {
    Metre,
    Centimetre,
    Kilometre,
    Mile,
    Foot,
    Kilogram,
    Gram,
    Pound,
    Thousand,
    Million,
    Billion,
}

impl Unit {
    pub const ALL: [Unit; 11] = [
        Unit::Metre,
        Unit::Centimetre,
        Unit::Kilometre,
        Unit::Mile,
        Unit::Foot,
        Unit::Kilogram,
        Unit::Gram,
        Unit::Pound,
        Unit::Thousand,
        Unit::Million,
        Unit::Billion,
    ];

    /// Canonical tag, as written in KB files.
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Metre => "m",
            Unit::Centimetre => "cm",
            Unit::Kilometre => "km",
            Unit::Mile => "mi",
            Unit::Foot => "ft",
            Unit::Kilogram => "kg",
            Unit::Gram => "g",
            Unit::Pound => "lb",
            Unit::Thousand => "thousand",
            Unit::Million => "million",
            Unit::Billion => "billion",
        }
    }

    /// Parses a unit tag. Accepts the canonical symbol and a few common
    /// spellings; matching is ASCII case-insensitive except for the single
    /// letter symbols.
    pub fn parse(tag: &str) -> Option<Unit> {
        let tag = tag.trim();
        let unit = match tag {
            "m" => Unit::Metre,
            "cm" => Unit::Centimetre,
            "km" => Unit::Kilometre,
            "mi" => Unit::Mile,
            "ft" => Unit::Foot,
            "kg" => Unit::Kilogram,
            "g" => Unit::Gram,
            "lb" | "lbs" => Unit::Pound,
            _ => {
                let lower = |s: &str| tag.eq_ignore_ascii_case(s);
                if lower("metre") || lower("metres") || lower("meter") || lower("meters") {
                    Unit::Metre
                } else if lower("centimetre") || lower("centimetres") || lower("centimeter") || lower("centimeters") {
                    Unit::Centimetre
                } else if lower("kilometre") || lower("kilometres") || lower("kilometer") || lower("kilometers") {
                    Unit::Kilometre
                } else if lower("mile") || lower("miles") {
                    Unit::Mile
                } else if lower("foot") || lower("feet") {
                    Unit::Foot
                } else if lower("kilogram") || lower("kilograms") {
                    Unit::Kilogram
                } else if lower("gram") || lower("grams") {
                    Unit::Gram
                } else if lower("pound") || lower("pounds") {
                    Unit::Pound
                } else if lower("thousand") {
                    Unit::Thousand
                } else if lower("million") {
                    Unit::Million
                } else if lower("billion") {
                    Unit::Billion
                } else {
                    return None;
                }
            }
        };
        Some(unit)
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Unit::Metre | Unit::Centimetre | Unit::Kilometre | Unit::Mile | Unit::Foot => Dimension::Length,
            Unit::Kilogram | Unit::Gram | Unit::Pound => Dimension::Mass,
            Unit::Thousand | Unit::Million | Unit::Billion => Dimension::Scalar,
        }
    }

    /// Multiplier into the base unit of the dimension (metre, kilogram, 1).
    pub fn factor(self) -> f64 {
        match self {
            Unit::Metre => 1.0,
            Unit::Centimetre => 0.01,
            Unit::Kilometre => 1000.0,
            Unit::Mile => 1609.344,
            Unit::Foot => 0.3048,
            Unit::Kilogram => 1.0,
            Unit::Gram => 0.001,
            Unit::Pound => 0.453_592_37,
            Unit::Thousand => 1e3,
            Unit::Million => 1e6,
            Unit::Billion => 1e9,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Converts `value` tagged with `from` into `to`.
///
/// A missing tag is a plain number and only converts to itself or to a
/// scalar unit. Returns `None` across incompatible dimensions.
pub fn convert(value: f64, from: Option<Unit>, to: Option<Unit>) -> Option<f64> {
    match (from, to) {
        (None, None) => Some(value),
        (Some(f), Some(t)) if f.dimension() == t.dimension() => Some(value * f.factor() / t.factor()),
        (Some(f), None) if f.dimension() == Dimension::Scalar => Some(value * f.factor()),
        (None, Some(t)) if t.dimension() == Dimension::Scalar => Some(value / t.factor()),
        _ => None,
    }
}
