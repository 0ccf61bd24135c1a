//! Tab-separated KB snapshot.
//!
//! ```text
//! E  id  label  alias1|alias2      entity
//! T  id  type-id                   type assertion
//! C  type-id  supertype-id         subclass edge
//! P  id  label                     property
//! S  subj  prop  kind  value [unit]   triple, kind in {e, n, s, t}
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::io::Write;
use std::path::Path;

use rowcomp_core::kb::{KbBuilder, KnowledgeBase, ObjectValue, Quantity, Triple, Unit};

use super::{read, FormatError};

pub fn load_kb(path: &Path) -> Result<KnowledgeBase, FormatError> {
    parse_kb(&read(path)?).map_err(|e| e.in_file(path))
}

pub fn parse_kb(text: &str) -> Result<KnowledgeBase, FormatError> {
    let mut b = KbBuilder::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = raw.split('\t').collect();
        let err = |m: String| FormatError::at(line, m);
        let arity = |lo: usize, hi: usize| {
            if f.len() < lo || f.len() > hi {
                Err(err(format!("record {} takes {} to {} fields, found {}", f[0], lo - 1, hi - 1, f.len() - 1)))
            } else {
                Ok(())
            }
        };
        b.at_line(line);
        let added = match f[0] {
            "E" => {
                arity(3, 4)?;
                let aliases = f
                    .get(3)
                    .map(|a| a.split('|').filter(|x| !x.is_empty()).map(String::from).collect())
                    .unwrap_or_default();
                b.entity(f[1].into(), f[2], aliases)
            }
            "T" => {
                arity(3, 3)?;
                b.instance_of(f[1].into(), f[2].into())
            }
            "C" => {
                arity(3, 3)?;
                b.subclass_of(f[1].into(), f[2].into())
            }
            "P" => {
                arity(3, 3)?;
                b.property(f[1].into(), f[2])
            }
            "S" => {
                arity(5, 6)?;
                let object = parse_object(f[3], f[4], f.get(5).copied()).map_err(err)?;
                b.triple(Triple {
                    subject: f[1].into(),
                    property: f[2].into(),
                    object,
                })
            }
            other => return Err(err(format!("unknown record type {other:?}"))),
        };
        added.map_err(|e| err(e.to_string()))?;
    }
    b.build().map_err(|e| FormatError::new(e.to_string()))
}

fn parse_object(kind: &str, value: &str, unit: Option<&str>) -> Result<ObjectValue, String> {
    if unit.is_some() && kind != "n" {
        return Err(format!("only numeric objects take a unit (kind {kind:?})"));
    }
    Ok(match kind {
        "e" => ObjectValue::Entity(value.into()),
        "s" => ObjectValue::Text(value.into()),
        "t" => ObjectValue::Time(value.into()),
        "n" => {
            let v: f64 = value.trim().parse().map_err(|_| format!("bad number {value:?}"))?;
            let unit = match unit.map(str::trim).filter(|u| !u.is_empty()) {
                None => None,
                Some(u) => Some(Unit::parse(u).ok_or_else(|| format!("unknown unit {u:?}"))?),
            };
            ObjectValue::Number(Quantity::new(v, unit))
        }
        other => return Err(format!("unknown object kind {other:?}")),
    })
}

fn clean(field: &str, what: &str) -> std::io::Result<()> {
    if field.contains(['\t', '\n', '\r']) {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{what} {field:?} contains a tab or newline"),
        ));
    }
    Ok(())
}

/// Writes `kb` in a canonical order: properties, entities, type
/// assertions, subclass edges, triples, each sorted by id.
pub fn write_kb(kb: &KnowledgeBase, out: &mut impl Write) -> std::io::Result<()> {
    for (p, label) in kb.properties() {
        clean(p.as_str(), "property id")?;
        clean(label, "label")?;
        writeln!(out, "P\t{p}\t{label}")?;
    }
    for (e, r) in kb.entities() {
        clean(e.as_str(), "entity id")?;
        clean(&r.label, "label")?;
        for a in &r.aliases {
            clean(a, "alias")?;
        }
        if r.aliases.is_empty() {
            writeln!(out, "E\t{e}\t{}", r.label)?;
        } else {
            writeln!(out, "E\t{e}\t{}\t{}", r.label, r.aliases.join("|"))?;
        }
    }
    for (e, t) in kb.type_assertions() {
        writeln!(out, "T\t{e}\t{t}")?;
    }
    for (sub, sup) in kb.subclass_edges() {
        writeln!(out, "C\t{sub}\t{sup}")?;
    }
    for t in kb.triples() {
        let (kind, value, unit) = match &t.object {
            ObjectValue::Entity(e) => ("e", e.to_string(), None),
            ObjectValue::Text(s) => ("s", s.clone(), None),
            ObjectValue::Time(s) => ("t", s.clone(), None),
            ObjectValue::Number(q) => ("n", q.value.to_string(), q.unit),
        };
        clean(&value, "value")?;
        match unit {
            Some(u) => writeln!(out, "S\t{}\t{}\t{kind}\t{value}\t{}", t.subject, t.property, u.symbol())?,
            None => writeln!(out, "S\t{}\t{}\t{kind}\t{value}", t.subject, t.property)?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# rappers\n\
P\tP742\tpseudonym\n\
E\tQ5\thuman\n\
E\tQ1\tKanye West\tYe|Yeezus\n\
T\tQ1\tQ5\n\
S\tQ1\tP742\ts\tYeezy\n\
S\tQ1\tP2048\tn\t1.73\tm\n\
P\tP2048\theight\n\
\n\
S\tQ1\tP569\tt\t1977-06-08\n\
P\tP569\tdate of birth\n";

    #[test]
    fn parses_and_round_trips() {
        let kb = parse_kb(SAMPLE).unwrap();
        assert_eq!((kb.entity_count(), kb.property_count(), kb.triple_count()), (2, 3, 3));
        let mut out = Vec::new();
        write_kb(&kb, &mut out).unwrap();
        let again = parse_kb(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(again, kb);
        let mut twice = Vec::new();
        write_kb(&again, &mut twice).unwrap();
        assert_eq!(out, twice);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("E\tQ1\tA\nX\tQ1\n", 2),
            ("E\tQ1\tA\nE\tQ1\tB\n", 2),
            ("P\tP1\tp\nE\tQ1\tA\nS\tQ1\tP1\tn\tabc\n", 3),
            ("P\tP1\tp\nE\tQ1\tA\nS\tQ1\tP1\tn\t3\tparsec\n", 3),
            ("P\tP1\tp\nE\tQ1\tA\nS\tQ1\tP1\ts\tx\nS\tQ1\tP1\ts\ty\n", 4),
            ("E\tQ1\n", 1),
            ("P\tP1\tp\nE\tQ1\tA\nS\tQ1\tP1\tt\tyesterday\n", 3),
        ];
        for (text, line) in cases {
            let e = parse_kb(text).unwrap_err();
            assert_eq!(e.line, Some(line), "{text:?}: {e}");
        }
        let dangling = parse_kb("E\tQ1\tA\n\nT\tQ1\tQ9\n").unwrap_err();
        assert!(dangling.to_string().contains("line 3"), "{dangling}");
    }

    #[test]
    fn empty_input_is_an_empty_kb() {
        let kb = parse_kb("").unwrap();
        assert_eq!(kb.entity_count(), 0);
        let mut out = Vec::new();
        write_kb(&kb, &mut out).unwrap();
        assert!(out.is_empty());
    }
}
