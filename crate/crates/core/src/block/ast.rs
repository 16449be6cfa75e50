use std::fmt;

use super::registry::{self, BlockKind, FieldKind, FieldSpec, PortKind, TypeRef, ValueType};
use crate::numfmt::format_number;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValue {
    Number(f64),
    Text(String),
}

impl FieldValue {
    pub fn default_for(spec: &FieldSpec) -> Self {
        match spec.kind {
            FieldKind::Number { default, .. } => FieldValue::Number(default),
            FieldKind::Text { default }
            | FieldKind::Identifier { default }
            | FieldKind::Choice { default, .. }
            | FieldKind::Bits { default, .. } => FieldValue::Text(default.to_owned()),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            FieldValue::Number(x) => Some(*x),
            FieldValue::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            FieldValue::Text(s) => Some(s),
            FieldValue::Number(_) => None,
        }
    }
}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldValue::Number(x) => f.write_str(&format_number(*x)),
            FieldValue::Text(s) => f.write_str(s),
        }
    }
}

/// Why a field value does not fit its spec.
pub fn check_field(spec: &FieldSpec, value: &FieldValue) -> Result<(), String> {
    match (spec.kind, value) {
        (FieldKind::Number { integer, min, .. }, FieldValue::Number(x)) => {
            if !x.is_finite() {
                return Err(format!("{x} is not finite"));
            }
            if integer && x.fract() != 0.0 {
                return Err(format!("{x} is not an integer"));
            }
            if let Some(m) = min {
                if *x < m {
                    return Err(format!("{x} is below {m}"));
                }
            }
            Ok(())
        }
        (FieldKind::Text { .. }, FieldValue::Text(_)) => Ok(()),
        (FieldKind::Identifier { .. }, FieldValue::Text(s)) => {
            let mut chars = s.chars();
            let ok = chars
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
            if ok {
                Ok(())
            } else {
                Err(format!("{s:?} is not a valid variable name"))
            }
        }
        (FieldKind::Choice { options, .. }, FieldValue::Text(s)) => {
            if options.contains(&s.as_str()) {
                Ok(())
            } else {
                Err(format!("{s:?} is not one of {options:?}"))
            }
        }
        (FieldKind::Bits { list, .. }, FieldValue::Text(s)) => {
            let ok = if list {
                crate::ea::Population::parse(s).is_ok()
            } else {
                crate::ea::Individual::parse(s).is_ok()
            };
            if ok {
                Ok(())
            } else {
                Err(format!("{s:?} is not a bit string{}", if list { " list" } else { "" }))
            }
        }
        (_, FieldValue::Number(_)) => Err("expected text, found a number".to_owned()),
        (_, FieldValue::Text(_)) => Err("expected a number, found text".to_owned()),
    }
}

/// One block instance. Children are owned, so the connection graph is a
/// forest by construction.
#[derive(Debug, Clone)]
pub struct Block {
    pub uid: String,
    pub kind: &'static BlockKind,
    /// One per field spec, in declaration order.
    pub fields: Vec<FieldValue>,
    /// One per port spec, in declaration order. Statement slots hold the head
    /// of a chain.
    pub inputs: Vec<Option<Box<Block>>>,
    pub next: Option<Box<Block>>,
}

/// Structural equality: kind, fields and connections; uids are ignored.
impl PartialEq for Block {
    fn eq(&self, other: &Self) -> bool {
        self.kind.id == other.kind.id
            && self.fields == other.fields
            && self.inputs == other.inputs
            && self.next == other.next
    }
}

impl Block {
    /// A fresh block with default field values and no connections.
    pub fn new(kind_id: &str) -> Option<Self> {
        let kind = registry::kind(kind_id)?;
        Some(Self::of_kind(kind))
    }

    pub fn of_kind(kind: &'static BlockKind) -> Self {
        Self {
            uid: String::new(),
            kind,
            fields: kind.fields.iter().map(FieldValue::default_for).collect(),
            inputs: vec![None; kind.ports.len()],
            next: None,
        }
    }

    /// Builder: set a field. Panics on an unknown field name.
    pub fn field(mut self, name: &str, value: impl Into<FieldValue>) -> Self {
        let i = self
            .kind
            .field_index(name)
            .unwrap_or_else(|| panic!("{} has no field {name}", self.kind.id));
        self.fields[i] = value.into();
        self
    }

    /// Builder: connect a child to a port. Panics on an unknown port name.
    pub fn input(mut self, port: &str, child: Block) -> Self {
        let i = self
            .kind
            .port_index(port)
            .unwrap_or_else(|| panic!("{} has no port {port}", self.kind.id));
        self.inputs[i] = Some(Box::new(child));
        self
    }

    /// Builder: append `successor` at the end of this block's chain.
    pub fn then(mut self, successor: Block) -> Self {
        let mut slot = &mut self.next;
        while let Some(b) = slot {
            slot = &mut b.next;
        }
        *slot = Some(Box::new(successor));
        self
    }

    pub fn field_value(&self, name: &str) -> Option<&FieldValue> {
        self.kind.field_index(name).map(|i| &self.fields[i])
    }

    pub fn text_field(&self, name: &str) -> &str {
        self.field_value(name)
            .and_then(FieldValue::as_text)
            .unwrap_or_default()
    }

    pub fn number_field(&self, name: &str) -> f64 {
        self.field_value(name)
            .and_then(FieldValue::as_number)
            .unwrap_or_default()
    }

    pub fn child(&self, port: &str) -> Option<&Block> {
        self.kind
            .port_index(port)
            .and_then(|i| self.inputs[i].as_deref())
    }

    pub fn resolve_type(&self, t: TypeRef) -> Option<ValueType> {
        match t {
            TypeRef::Fixed(v) => Some(v),
            TypeRef::FromField(f) => self.text_field(f).parse().ok(),
        }
    }

    pub fn output_type(&self) -> Option<ValueType> {
        self.kind.output.and_then(|t| self.resolve_type(t))
    }

    /// The expected type of a value port, `None` for statement slots.
    pub fn port_type(&self, index: usize) -> Option<ValueType> {
        match self.kind.ports[index].kind {
            PortKind::Value(t) => self.resolve_type(t),
            PortKind::Statement => None,
        }
    }

    /// Depth-first pre-order walk: the block, each port's subtree in
    /// declaration order, then the chain successor.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Block)) {
        visit(self);
        for child in self.inputs.iter().flatten() {
            child.walk(visit);
        }
        if let Some(n) = &self.next {
            n.walk(visit);
        }
    }

    fn walk_mut(&mut self, visit: &mut impl FnMut(&mut Block)) {
        visit(self);
        for child in self.inputs.iter_mut().flatten() {
            child.walk_mut(visit);
        }
        if let Some(n) = &mut self.next {
            n.walk_mut(visit);
        }
    }

    /// The block followed by its chain successors.
    pub fn chain(&self) -> impl Iterator<Item = &Block> {
        std::iter::successors(Some(self), |b| b.next.as_deref())
    }
}

impl From<f64> for FieldValue {
    fn from(x: f64) -> Self {
        FieldValue::Number(x)
    }
}

impl From<&str> for FieldValue {
    fn from(s: &str) -> Self {
        FieldValue::Text(s.to_owned())
    }
}

impl From<String> for FieldValue {
    fn from(s: String) -> Self {
        FieldValue::Text(s)
    }
}

/// A saved workspace: top-level blocks (and their chains) in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockProgram {
    pub roots: Vec<Block>,
}

impl BlockProgram {
    /// Builds a program and assigns canonical uids.
    pub fn from_roots(roots: Vec<Block>) -> Self {
        let mut p = Self { roots };
        p.renumber();
        p
    }

    /// Assigns `b1, b2, ...` in canonical depth-first order.
    pub fn renumber(&mut self) {
        let mut next = 1usize;
        for root in &mut self.roots {
            root.walk_mut(&mut |b| {
                b.uid = format!("b{next}");
                next += 1;
            });
        }
    }

    pub fn walk<'a>(&'a self, mut visit: impl FnMut(&'a Block)) {
        for root in &self.roots {
            root.walk(&mut visit);
        }
    }

    pub fn block_count(&self) -> usize {
        let mut n = 0;
        self.walk(|_| n += 1);
        n
    }

    pub fn find(&self, uid: &str) -> Option<&Block> {
        let mut found = None;
        self.walk(|b| {
            if found.is_none() && b.uid == uid {
                found = Some(b);
            }
        });
        found
    }
}
