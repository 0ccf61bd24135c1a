//! Numeric cell parsing and unit-aware comparison.

use alloc::string::String;

use crate::kb::{iso_year, ObjectValue, Quantity, Unit};

/// Parses `"180"`, `"1.80 m"`, `"1,234 km"`, `"5e3"` and similar. The unit
/// suffix must be in the registry.
pub fn parse_quantity(cell: &str) -> Option<Quantity> {
    let cell = cell.trim();
    let split = cell
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | ',' | 'e' | 'E')))
        .unwrap_or(cell.len());
    let (number, rest) = cell.split_at(split);
    // a trailing exponent marker belongs to a unit such as "em", not the number
    if number.is_empty() || number.ends_with(['e', 'E']) {
        return None;
    }
    let digits: String = number.chars().filter(|&c| c != ',').collect();
    let value: f64 = digits.parse().ok()?;
    if !value.is_finite() {
        return None;
    }
    let rest = rest.trim();
    let unit = if rest.is_empty() { None } else { Some(Unit::parse(rest)?) };
    Some(Quantity::new(value, unit))
}

pub fn is_numeric_cell(cell: &str) -> bool {
    parse_quantity(cell).is_some()
}

/// True iff at least half of the non-empty cells parse as numbers.
pub fn column_is_numeric<'a>(cells: impl Iterator<Item = &'a str>) -> bool {
    let (mut filled, mut numeric) = (0usize, 0usize);
    for c in cells {
        if c.trim().is_empty() {
            continue;
        }
        filled += 1;
        numeric += usize::from(is_numeric_cell(c));
    }
    filled > 0 && 2 * numeric >= filled
}

pub fn approx_equal(a: f64, b: f64, rel_tol: f64) -> bool {
    a == b || (a - b).abs() <= rel_tol * a.abs().max(b.abs())
}

/// Compares a cell quantity with a KB quantity. A unitless cell is read in
/// the KB value's own unit; otherwise both sides are converted.
pub fn quantities_match(cell: &Quantity, kb: &Quantity, rel_tol: f64) -> bool {
    let cell_value = match cell.unit {
        None => Some(cell.value),
        Some(_) => cell.in_unit(kb.unit),
    };
    cell_value.is_some_and(|v| approx_equal(v, kb.value, rel_tol))
}

/// Numeric reading of a KB object, if any: quantities directly, dates by
/// their year.
pub fn matches_object(cell: &Quantity, object: &ObjectValue, rel_tol: f64) -> bool {
    match object {
        ObjectValue::Number(q) => quantities_match(cell, q, rel_tol),
        ObjectValue::Time(t) => {
            cell.unit.is_none() && iso_year(t).is_some_and(|y| approx_equal(cell.value, y as f64, rel_tol))
        }
        _ => false,
    }
}
