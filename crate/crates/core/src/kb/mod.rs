//! Immutable in-memory knowledge base.
//!
//! Entities carry a label and aliases, may be asserted to belong to type
//! entities, and hold at most one object per property. A subclass-of
//! hierarchy among types is stored but never applied implicitly: `types_of`
//! and `entities_of_type` only see direct assertions, and closure is
//! requested explicitly through [`KnowledgeBase::type_closure`].

mod units;
mod value;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

pub use units::{convert, Dimension, Unit};
pub use value::{is_iso_date, iso_year, EntityId, ObjectValue, PropertyId, Quantity, Triple};

use crate::text::normalize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KbError {
    #[error("empty identifier")]
    EmptyId,
    #[error("entity {0} declared twice")]
    DuplicateEntity(EntityId),
    #[error("property {0} declared twice")]
    DuplicateProperty(PropertyId),
    #[error("conflicting objects for ({subject}, {property}){}", at(*.line))]
    ConflictingObject {
        subject: EntityId,
        property: PropertyId,
        line: Option<usize>,
    },
    #[error("reference to undeclared entity {id}{}", at(*.line))]
    DanglingEntity { id: EntityId, line: Option<usize> },
    #[error("reference to undeclared property {id}{}", at(*.line))]
    DanglingProperty { id: PropertyId, line: Option<usize> },
    #[error("non-finite number")]
    NonFiniteNumber,
    #[error("invalid ISO-8601 date {0:?}")]
    InvalidTime(String),
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("unknown property {0}")]
    UnknownProperty(PropertyId),
}

fn at(line: Option<usize>) -> String {
    match line {
        Some(l) => alloc::format!(" (line {l})"),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityRecord {
    pub label: String,
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeBase {
    entities: BTreeMap<EntityId, EntityRecord>,
    properties: BTreeMap<PropertyId, String>,
    types: BTreeMap<EntityId, BTreeSet<EntityId>>,
    members: BTreeMap<EntityId, BTreeSet<EntityId>>,
    superclasses: BTreeMap<EntityId, BTreeSet<EntityId>>,
    facts: BTreeMap<EntityId, BTreeMap<PropertyId, ObjectValue>>,
    labels: BTreeMap<String, BTreeSet<EntityId>>,
}

impl KnowledgeBase {
    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn property_count(&self) -> usize {
        self.properties.len()
    }

    pub fn triple_count(&self) -> usize {
        self.facts.values().map(BTreeMap::len).sum()
    }

    pub fn contains_entity(&self, e: &EntityId) -> bool {
        self.entities.contains_key(e)
    }

    pub fn contains_property(&self, p: &PropertyId) -> bool {
        self.properties.contains_key(p)
    }

    pub fn entity(&self, e: &EntityId) -> Option<&EntityRecord> {
        self.entities.get(e)
    }

    /// Label of `e`, falling back to the raw id for unknown entities.
    pub fn label<'a>(&'a self, e: &'a EntityId) -> &'a str {
        self.entities.get(e).map_or(e.as_str(), |r| r.label.as_str())
    }

    pub fn property_label<'a>(&'a self, p: &'a PropertyId) -> &'a str {
        self.properties.get(p).map_or(p.as_str(), String::as_str)
    }

    pub fn entities(&self) -> impl Iterator<Item = (&EntityId, &EntityRecord)> {
        self.entities.iter()
    }

    pub fn properties(&self) -> impl Iterator<Item = (&PropertyId, &str)> {
        self.properties.iter().map(|(p, l)| (p, l.as_str()))
    }

    /// Every triple, ordered by subject then property.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.facts.iter().flat_map(|(s, props)| {
            props.iter().map(move |(p, o)| Triple {
                subject: s.clone(),
                property: p.clone(),
                object: o.clone(),
            })
        })
    }

    /// Direct type assertions as `(entity, type)` pairs.
    pub fn type_assertions(&self) -> impl Iterator<Item = (&EntityId, &EntityId)> {
        self.types.iter().flat_map(|(e, ts)| ts.iter().map(move |t| (e, t)))
    }

    /// Subclass edges as `(subtype, supertype)` pairs.
    pub fn subclass_edges(&self) -> impl Iterator<Item = (&EntityId, &EntityId)> {
        self.superclasses
            .iter()
            .flat_map(|(t, sups)| sups.iter().map(move |s| (t, s)))
    }

    /// Object of `⟨e, p, ·⟩`, or `None` when the entity lacks the property.
    pub fn property_lookup(&self, e: &EntityId, p: &PropertyId) -> Result<Option<&ObjectValue>, KbError> {
        self.check_entity(e)?;
        self.check_property(p)?;
        Ok(self.get(e, p))
    }

    /// Unchecked lookup: unknown ids simply have no properties.
    pub fn get(&self, e: &EntityId, p: &PropertyId) -> Option<&ObjectValue> {
        self.facts.get(e).and_then(|props| props.get(p))
    }

    pub fn has_property(&self, e: &EntityId, p: &PropertyId) -> bool {
        self.get(e, p).is_some()
    }

    /// Properties held by `e` (empty for unknown ids).
    pub fn properties_of(&self, e: &EntityId) -> impl Iterator<Item = &PropertyId> {
        self.facts.get(e).into_iter().flat_map(BTreeMap::keys)
    }

    /// Directly asserted types of `e`.
    pub fn types_of(&self, e: &EntityId) -> Result<&BTreeSet<EntityId>, KbError> {
        self.check_entity(e)?;
        Ok(self.direct_types(e))
    }

    /// Like [`types_of`](Self::types_of) but empty for unknown ids.
    pub fn direct_types(&self, e: &EntityId) -> &BTreeSet<EntityId> {
        static EMPTY: BTreeSet<EntityId> = BTreeSet::new();
        self.types.get(e).unwrap_or(&EMPTY)
    }

    /// Entities directly asserted to have type `t`.
    pub fn entities_of_type(&self, t: &EntityId) -> Result<&BTreeSet<EntityId>, KbError> {
        self.check_entity(t)?;
        Ok(self.direct_members(t))
    }

    pub fn direct_members(&self, t: &EntityId) -> &BTreeSet<EntityId> {
        static EMPTY: BTreeSet<EntityId> = BTreeSet::new();
        self.members.get(t).unwrap_or(&EMPTY)
    }

    /// Direct types of `e` plus all of their transitive superclasses.
    pub fn type_closure(&self, e: &EntityId) -> Result<BTreeSet<EntityId>, KbError> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<EntityId> = self.types_of(e)?.iter().cloned().collect();
        while let Some(t) = stack.pop() {
            if seen.insert(t.clone()) {
                if let Some(sups) = self.superclasses.get(&t) {
                    stack.extend(sups.iter().cloned());
                }
            }
        }
        Ok(seen)
    }

    /// Entities whose label or alias equals `text` after case folding and
    /// whitespace collapsing.
    pub fn resolve_label(&self, text: &str) -> BTreeSet<EntityId> {
        self.labels.get(&normalize(text)).cloned().unwrap_or_default()
    }

    /// Every distinct normalised label or alias with the entities it names.
    pub fn label_index(&self) -> impl Iterator<Item = (&str, &BTreeSet<EntityId>)> {
        self.labels.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn check_entity(&self, e: &EntityId) -> Result<(), KbError> {
        if self.entities.contains_key(e) {
            Ok(())
        } else {
            Err(KbError::UnknownEntity(e.clone()))
        }
    }

    fn check_property(&self, p: &PropertyId) -> Result<(), KbError> {
        if self.properties.contains_key(p) {
            Ok(())
        } else {
            Err(KbError::UnknownProperty(p.clone()))
        }
    }
}

/// Validating builder. References may appear before their declarations;
/// they are resolved in [`build`](KbBuilder::build).
#[derive(Debug, Default)]
pub struct KbBuilder {
    kb: KnowledgeBase,
    line: Option<usize>,
    type_refs: Vec<(EntityId, EntityId, Option<usize>)>,
    subclass_refs: Vec<(EntityId, EntityId, Option<usize>)>,
    triple_refs: Vec<(Triple, Option<usize>)>,
}

impl KbBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Source line attached to errors for the records added next.
    pub fn at_line(&mut self, line: usize) -> &mut Self {
        self.line = Some(line);
        self
    }

    pub fn entity(&mut self, id: EntityId, label: impl Into<String>, aliases: Vec<String>) -> Result<&mut Self, KbError> {
        if id.is_empty() {
            return Err(KbError::EmptyId);
        }
        if self.kb.entities.contains_key(&id) {
            return Err(KbError::DuplicateEntity(id));
        }
        let label = label.into();
        for name in core::iter::once(&label).chain(&aliases) {
            let key = normalize(name);
            if !key.is_empty() {
                self.kb.labels.entry(key).or_default().insert(id.clone());
            }
        }
        self.kb.entities.insert(id, EntityRecord { label, aliases });
        Ok(self)
    }

    pub fn property(&mut self, id: PropertyId, label: impl Into<String>) -> Result<&mut Self, KbError> {
        if id.is_empty() {
            return Err(KbError::EmptyId);
        }
        if self.kb.properties.contains_key(&id) {
            return Err(KbError::DuplicateProperty(id));
        }
        self.kb.properties.insert(id, label.into());
        Ok(self)
    }

    pub fn instance_of(&mut self, entity: EntityId, ty: EntityId) -> Result<&mut Self, KbError> {
        if entity.is_empty() || ty.is_empty() {
            return Err(KbError::EmptyId);
        }
        self.type_refs.push((entity, ty, self.line));
        Ok(self)
    }

    pub fn subclass_of(&mut self, sub: EntityId, sup: EntityId) -> Result<&mut Self, KbError> {
        if sub.is_empty() || sup.is_empty() {
            return Err(KbError::EmptyId);
        }
        self.subclass_refs.push((sub, sup, self.line));
        Ok(self)
    }

    /// Adds a triple. Re-adding an identical triple is a no-op; a second,
    /// different object for the same subject and property is rejected.
    pub fn triple(&mut self, triple: Triple) -> Result<&mut Self, KbError> {
        if triple.subject.is_empty() || triple.property.is_empty() {
            return Err(KbError::EmptyId);
        }
        match &triple.object {
            ObjectValue::Number(q) if !q.value.is_finite() => return Err(KbError::NonFiniteNumber),
            ObjectValue::Time(t) if !is_iso_date(t) => return Err(KbError::InvalidTime(t.clone())),
            ObjectValue::Entity(e) if e.is_empty() => return Err(KbError::EmptyId),
            _ => {}
        }
        let slot = self
            .kb
            .facts
            .entry(triple.subject.clone())
            .or_default()
            .entry(triple.property.clone());
        match slot {
            alloc::collections::btree_map::Entry::Occupied(existing) => {
                if *existing.get() != triple.object {
                    return Err(KbError::ConflictingObject {
                        subject: triple.subject,
                        property: triple.property,
                        line: self.line,
                    });
                }
            }
            alloc::collections::btree_map::Entry::Vacant(v) => {
                v.insert(triple.object.clone());
                self.triple_refs.push((triple, self.line));
            }
        }
        Ok(self)
    }

    pub fn build(self) -> Result<KnowledgeBase, KbError> {
        let KbBuilder {
            mut kb,
            type_refs,
            subclass_refs,
            triple_refs,
            ..
        } = self;
        let entity = |kb: &KnowledgeBase, id: &EntityId, line| {
            if kb.entities.contains_key(id) {
                Ok(())
            } else {
                Err(KbError::DanglingEntity { id: id.clone(), line })
            }
        };
        for (t, line) in &triple_refs {
            entity(&kb, &t.subject, *line)?;
            if !kb.properties.contains_key(&t.property) {
                return Err(KbError::DanglingProperty {
                    id: t.property.clone(),
                    line: *line,
                });
            }
            if let ObjectValue::Entity(o) = &t.object {
                entity(&kb, o, *line)?;
            }
        }
        for (e, t, line) in type_refs {
            entity(&kb, &e, line)?;
            entity(&kb, &t, line)?;
            kb.members.entry(t.clone()).or_default().insert(e.clone());
            kb.types.entry(e).or_default().insert(t);
        }
        for (sub, sup, line) in subclass_refs {
            entity(&kb, &sub, line)?;
            entity(&kb, &sup, line)?;
            kb.superclasses.entry(sub).or_default().insert(sup);
        }
        Ok(kb)
    }
}
