//! `.blockea.xml` reading and canonical writing.
//!
//! The document is flat: one `<block>` element per block directly under
//! `<program>`, fields as attributes, and connections as child elements that
//! reference other blocks by uid:
//!
//! ```xml
//! <?xml version="1.0" encoding="UTF-8"?>
//! <program format_version="1">
//!   <block uid="b1" kind="print">
//!     <value name="text" ref="b2"/>
//!   </block>
//!   <block uid="b2" kind="text" value="hi"/>
//! </program>
//! ```
//!
//! Blocks that nobody references are the roots, in document order. Canonical
//! output lists blocks depth-first from the roots and renumbers uids, so the
//! text depends only on program structure.

use std::collections::HashMap;
use std::fmt::Write as _;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use super::ast::{check_field, Block, BlockProgram, FieldValue};
use super::registry::{self, BlockKind, FieldKind, PortKind};

pub const FORMAT_VERSION: &str = "1";
const SUPPORTED_MAJOR: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XmlError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("unsupported format_version {0:?}")]
    UnsupportedVersion(String),
    #[error("block {uid}: unknown kind {kind:?}")]
    UnknownKind { uid: String, kind: String },
    #[error("<{element}>: unknown attribute {attribute:?}")]
    UnknownAttribute { element: String, attribute: String },
    #[error("<{element}>: missing attribute {attribute:?}")]
    MissingAttribute { element: String, attribute: String },
    #[error("unexpected <{element}> inside <{parent}>")]
    UnexpectedElement { element: String, parent: String },
    #[error("block {uid} ({kind}): bad field {field:?}: {reason}")]
    BadField { uid: String, kind: String, field: String, reason: String },
    #[error("block {uid} ({kind}): bad port {port:?}: {reason}")]
    BadPort { uid: String, kind: String, port: String, reason: String },
    #[error("duplicate block uid {0:?}")]
    DuplicateUid(String),
    #[error("reference to missing block {0:?}")]
    DanglingReference(String),
    #[error("block {0:?} is connected to more than one parent")]
    MultipleParents(String),
    #[error("connection cycle through block {0:?}")]
    CycleDetected(String),
}

/// Generic element tree; the schema is checked on top of it.
#[derive(Debug)]
struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Element>,
}

impl Element {
    fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, XmlError> {
        self.attr(key).ok_or_else(|| XmlError::MissingAttribute {
            element: self.describe(),
            attribute: key.to_owned(),
        })
    }

    fn only_attrs(&self, allowed: &[&str]) -> Result<(), XmlError> {
        match self.attrs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            Some((k, _)) => Err(XmlError::UnknownAttribute {
                element: self.describe(),
                attribute: k.clone(),
            }),
            None => Ok(()),
        }
    }

    fn describe(&self) -> String {
        match (self.attr("uid"), self.attr("name")) {
            (Some(uid), _) => format!("{} uid=\"{uid}\"", self.name),
            (None, Some(name)) => format!("{} name=\"{name}\"", self.name),
            _ => self.name.clone(),
        }
    }
}

fn malformed(e: impl std::fmt::Display) -> XmlError {
    XmlError::MalformedXml(e.to_string())
}

fn start_element(e: &BytesStart<'_>) -> Result<Element, XmlError> {
    let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
    let mut attrs = Vec::new();
    for a in e.attributes() {
        let a = a.map_err(malformed)?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a.unescape_value().map_err(malformed)?.into_owned();
        attrs.push((key, value));
    }
    Ok(Element { name, attrs, children: Vec::new() })
}

fn read_tree(text: &str) -> Result<Element, XmlError> {
    let mut reader = Reader::from_str(text);
    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;
    loop {
        let event = reader
            .read_event()
            .map_err(|e| malformed(format!("at byte {}: {e}", reader.error_position())))?;
        match event {
            Event::Start(e) => stack.push(start_element(&e)?),
            Event::Empty(e) => {
                let el = start_element(&e)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None if root.is_none() => root = Some(el),
                    None => return Err(malformed("more than one root element")),
                }
            }
            Event::End(_) => {
                let el = stack.pop().ok_or_else(|| malformed("unbalanced end tag"))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None if root.is_none() => root = Some(el),
                    None => return Err(malformed("more than one root element")),
                }
            }
            Event::Text(t) => {
                let t = t.unescape().map_err(malformed)?;
                if !t.trim().is_empty() {
                    let at = stack.last().map_or("document".to_owned(), Element::describe);
                    return Err(malformed(format!("unexpected text {:?} in <{at}>", t.trim())));
                }
            }
            Event::CData(_) => return Err(malformed("CDATA sections are not allowed")),
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
            Event::Eof => break,
        }
    }
    if let Some(open) = stack.last() {
        return Err(malformed(format!("unclosed element <{}>", open.describe())));
    }
    root.ok_or_else(|| malformed("no root element"))
}

fn check_version(v: &str) -> Result<(), XmlError> {
    let major: Option<u32> = v.split('.').next().and_then(|m| m.parse().ok());
    match major {
        Some(m) if (1..=SUPPORTED_MAJOR).contains(&m) => Ok(()),
        _ => Err(XmlError::UnsupportedVersion(v.to_owned())),
    }
}

struct Pending {
    uid: String,
    kind: &'static BlockKind,
    fields: Vec<FieldValue>,
    inputs: Vec<Option<String>>,
    next: Option<String>,
}

fn parse_field(kind: &'static BlockKind, uid: &str, name: &str, raw: &str) -> Result<(usize, FieldValue), XmlError> {
    let bad = |reason: String| XmlError::BadField {
        uid: uid.to_owned(),
        kind: kind.id.to_owned(),
        field: name.to_owned(),
        reason,
    };
    let index = kind.field_index(name).ok_or_else(|| XmlError::UnknownAttribute {
        element: format!("block uid=\"{uid}\""),
        attribute: name.to_owned(),
    })?;
    let spec = &kind.fields[index];
    let value = match spec.kind {
        FieldKind::Number { .. } => {
            let x: f64 = raw.trim().parse().map_err(|_| bad(format!("{raw:?} is not a number")))?;
            FieldValue::Number(x)
        }
        _ => FieldValue::Text(raw.to_owned()),
    };
    check_field(spec, &value).map_err(bad)?;
    Ok((index, value))
}

fn parse_block(el: &Element) -> Result<Pending, XmlError> {
    if el.name != "block" {
        return Err(XmlError::UnexpectedElement { element: el.describe(), parent: "program".into() });
    }
    let uid = el.require("uid")?.to_owned();
    let kind_id = el.require("kind")?;
    let kind = registry::kind(kind_id).ok_or_else(|| XmlError::UnknownKind {
        uid: uid.clone(),
        kind: kind_id.to_owned(),
    })?;
    let mut fields: Vec<FieldValue> = kind.fields.iter().map(FieldValue::default_for).collect();
    for (key, raw) in &el.attrs {
        if key == "uid" || key == "kind" {
            continue;
        }
        let (i, v) = parse_field(kind, &uid, key, raw)?;
        fields[i] = v;
    }

    let mut inputs = vec![None; kind.ports.len()];
    let mut next = None;
    let bad_port = |port: &str, reason: &str| XmlError::BadPort {
        uid: uid.clone(),
        kind: kind.id.to_owned(),
        port: port.to_owned(),
        reason: reason.to_owned(),
    };
    for child in &el.children {
        if !child.children.is_empty() {
            let inner = &child.children[0];
            return Err(XmlError::UnexpectedElement { element: inner.describe(), parent: child.describe() });
        }
        match child.name.as_str() {
            "value" | "statement" => {
                child.only_attrs(&["name", "ref"])?;
                let port = child.require("name")?;
                let target = child.require("ref")?;
                let i = kind.port_index(port).ok_or_else(|| bad_port(port, "no such port"))?;
                let is_statement = kind.ports[i].kind == PortKind::Statement;
                if is_statement != (child.name == "statement") {
                    let expected = if is_statement { "a <statement>" } else { "a <value>" };
                    return Err(bad_port(port, &format!("expected {expected} element")));
                }
                if inputs[i].is_some() {
                    return Err(bad_port(port, "connected twice"));
                }
                inputs[i] = Some(target.to_owned());
            }
            "next" => {
                child.only_attrs(&["ref"])?;
                if kind.output.is_some() {
                    return Err(bad_port("next", "value blocks cannot be chained"));
                }
                if next.is_some() {
                    return Err(bad_port("next", "connected twice"));
                }
                next = Some(child.require("ref")?.to_owned());
            }
            _ => {
                return Err(XmlError::UnexpectedElement {
                    element: child.describe(),
                    parent: el.describe(),
                })
            }
        }
    }
    Ok(Pending { uid, kind, fields, inputs, next })
}

struct Assembler {
    pending: Vec<Option<Pending>>,
    index: HashMap<String, usize>,
}

impl Assembler {
    fn build(&mut self, i: usize) -> Block {
        let p = self.pending[i].take().expect("each block is built once");
        let inputs = p
            .inputs
            .iter()
            .map(|r| r.as_ref().map(|uid| Box::new(self.build(self.index[uid]))))
            .collect();
        let next = p.next.as_ref().map(|uid| Box::new(self.build(self.index[uid])));
        Block { uid: p.uid, kind: p.kind, fields: p.fields, inputs, next }
    }
}

pub fn parse_xml(text: &str) -> Result<BlockProgram, XmlError> {
    let root = read_tree(text)?;
    if root.name != "program" {
        return Err(XmlError::UnexpectedElement { element: root.describe(), parent: "document".into() });
    }
    root.only_attrs(&["format_version"])?;
    check_version(root.require("format_version")?)?;

    let pending: Vec<Pending> = root.children.iter().map(parse_block).collect::<Result<_, _>>()?;

    let mut index = HashMap::new();
    for (i, p) in pending.iter().enumerate() {
        if index.insert(p.uid.clone(), i).is_some() {
            return Err(XmlError::DuplicateUid(p.uid.clone()));
        }
    }
    let mut has_parent = vec![false; pending.len()];
    for p in &pending {
        for target in p.inputs.iter().flatten().chain(&p.next) {
            let &t = index.get(target).ok_or_else(|| XmlError::DanglingReference(target.clone()))?;
            if std::mem::replace(&mut has_parent[t], true) {
                return Err(XmlError::MultipleParents(target.clone()));
            }
        }
    }
    // With at most one parent each, a block unreachable from the parentless
    // blocks can only sit on a cycle (or hang below one).
    let roots: Vec<usize> = (0..pending.len()).filter(|&i| !has_parent[i]).collect();
    let mut reached = vec![false; pending.len()];
    let mut stack = roots.clone();
    while let Some(i) = stack.pop() {
        reached[i] = true;
        let p = &pending[i];
        stack.extend(p.inputs.iter().flatten().chain(&p.next).map(|uid| index[uid]));
    }
    if let Some(i) = reached.iter().position(|r| !r) {
        return Err(XmlError::CycleDetected(pending[i].uid.clone()));
    }

    let mut asm = Assembler { pending: pending.into_iter().map(Some).collect(), index };
    Ok(BlockProgram { roots: roots.into_iter().map(|i| asm.build(i)).collect() })
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

/// Canonical text. Uids in the output are `b1, b2, ...` in depth-first order
/// regardless of the uids held by `program`.
pub fn serialize_xml(program: &BlockProgram) -> String {
    let mut canonical = program.clone();
    canonical.renumber();

    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    if canonical.roots.is_empty() {
        let _ = writeln!(out, "<program format_version=\"{FORMAT_VERSION}\"/>");
        return out;
    }
    let _ = writeln!(out, "<program format_version=\"{FORMAT_VERSION}\">");
    canonical.walk(|b| write_block(&mut out, b));
    out.push_str("</program>\n");
    out
}

fn write_block(out: &mut String, b: &Block) {
    let _ = write!(out, "  <block uid=\"{}\" kind=\"{}\"", b.uid, b.kind.id);
    for (spec, value) in b.kind.fields.iter().zip(&b.fields) {
        let _ = write!(out, " {}=\"{}\"", spec.name, escape_attr(&value.to_string()));
    }
    let connected = b.inputs.iter().any(Option::is_some) || b.next.is_some();
    if !connected {
        out.push_str("/>\n");
        return;
    }
    out.push_str(">\n");
    for (spec, child) in b.kind.ports.iter().zip(&b.inputs) {
        if let Some(child) = child {
            let element = match spec.kind {
                PortKind::Value(_) => "value",
                PortKind::Statement => "statement",
            };
            let _ = writeln!(out, "    <{element} name=\"{}\" ref=\"{}\"/>", spec.name, child.uid);
        }
    }
    if let Some(n) = &b.next {
        let _ = writeln!(out, "    <next ref=\"{}\"/>", n.uid);
    }
    out.push_str("  </block>\n");
}
