//! Converts a JSON-lines raw dump into the KB TSV format.
//!
//! Each line is either an entity record
//! `{"id", "label", "aliases"?, "types"?, "subclass_of"?, "claims"?}`, with
//! claims `{"property", "kind": "e"|"n"|"s"|"t", "value", "unit"?}`, or a
//! property record `{"property", "label"}`. Blank lines are skipped.

use std::io::Write;
use std::path::Path;

use rowcomp_core::kb::{KbBuilder, KnowledgeBase, ObjectValue, Quantity, Triple, Unit};
use serde::Deserialize;

use super::{read, write_kb, FormatError};

#[derive(Deserialize)]
#[serde(untagged)]
enum Record {
    Property {
        property: String,
        label: String,
    },
    Entity {
        id: String,
        label: String,
        #[serde(default)]
        aliases: Vec<String>,
        #[serde(default)]
        types: Vec<String>,
        #[serde(default)]
        subclass_of: Vec<String>,
        #[serde(default)]
        claims: Vec<Claim>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Claim {
    property: String,
    kind: String,
    value: serde_json::Value,
    unit: Option<String>,
}

fn claim_object(c: &Claim) -> Result<ObjectValue, String> {
    let text = || match &c.value {
        serde_json::Value::String(s) => Ok(s.clone()),
        other => Err(format!("claim {} expects a string value, found {other}", c.property)),
    };
    Ok(match c.kind.as_str() {
        "e" => ObjectValue::Entity(text()?.into()),
        "s" => ObjectValue::Text(text()?),
        "t" => ObjectValue::Time(text()?),
        "n" => {
            let v = match &c.value {
                serde_json::Value::Number(n) => n.as_f64(),
                serde_json::Value::String(s) => s.trim().parse().ok(),
                _ => None,
            }
            .ok_or_else(|| format!("claim {} has a non-numeric value", c.property))?;
            let unit = match c.unit.as_deref() {
                None | Some("") => None,
                Some(u) => Some(Unit::parse(u).ok_or_else(|| format!("unknown unit {u:?}"))?),
            };
            ObjectValue::Number(Quantity::new(v, unit))
        }
        k => return Err(format!("unknown claim kind {k:?}")),
    })
}

/// Parses and validates a dump exactly as a loaded KB would be.
pub fn ingest(text: &str) -> Result<KnowledgeBase, FormatError> {
    let mut b = KbBuilder::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let err = |m: String| FormatError::at(line, m);
        let record: Record = serde_json::from_str(raw).map_err(|e| err(e.to_string()))?;
        b.at_line(line);
        match record {
            Record::Property { property, label } => {
                b.property(property.into(), label).map_err(|e| err(e.to_string()))?;
            }
            Record::Entity {
                id,
                label,
                aliases,
                types,
                subclass_of,
                claims,
            } => {
                b.entity(id.as_str().into(), label, aliases).map_err(|e| err(e.to_string()))?;
                for t in types {
                    b.instance_of(id.as_str().into(), t.into()).map_err(|e| err(e.to_string()))?;
                }
                for s in subclass_of {
                    b.subclass_of(id.as_str().into(), s.into()).map_err(|e| err(e.to_string()))?;
                }
                for c in &claims {
                    let object = claim_object(c).map_err(err)?;
                    b.triple(Triple {
                        subject: id.as_str().into(),
                        property: c.property.as_str().into(),
                        object,
                    })
                    .map_err(|e| err(e.to_string()))?;
                }
            }
        }
    }
    b.build().map_err(|e| FormatError::new(e.to_string()))
}

/// Converts the dump at `input` into a TSV file at `output`.
pub fn ingest_file(input: &Path, output: &Path) -> Result<KnowledgeBase, FormatError> {
    let kb = ingest(&read(input)?).map_err(|e| e.in_file(input))?;
    let mut out = Vec::new();
    write_kb(&kb, &mut out).map_err(|e| FormatError::new(e.to_string()))?;
    std::fs::File::create(output)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| FormatError::new(e.to_string()).in_file(output))?;
    Ok(kb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::parse_kb;

    const DUMP: &str = r#"{"property": "P569", "label": "date of birth"}
{"property": "P2048", "label": "height"}
{"id": "Q5", "label": "human"}
{"id": "Q1", "label": "Kanye West", "aliases": ["Ye"], "types": ["Q5"], "claims": [{"property": "P569", "kind": "t", "value": "1977-06-08"}, {"property": "P2048", "kind": "n", "value": 1.73, "unit": "m"}]}
"#;

    #[test]
    fn round_trips_through_the_tsv_loader() {
        let kb = ingest(DUMP).unwrap();
        let mut out = Vec::new();
        write_kb(&kb, &mut out).unwrap();
        assert_eq!(parse_kb(std::str::from_utf8(&out).unwrap()).unwrap(), kb);
        assert_eq!(kb.triple_count(), 2);
    }

    #[test]
    fn errors_name_the_line() {
        let bad = format!("{DUMP}{{\"id\": \"Q2\", \"label\": \"x\", \"claims\": [{{\"property\": \"P569\", \"kind\": \"q\", \"value\": \"1\"}}]}}\n");
        assert_eq!(ingest(&bad).unwrap_err().line, Some(5));
        assert_eq!(ingest("\n{not json}\n").unwrap_err().line, Some(2));
        assert_eq!(ingest("").unwrap().entity_count(), 0);
    }
}
