//! Block-program model: the kind registry, the AST, `.blockea.xml`
//! (de)serialization, and static validation.

mod ast;
pub mod registry;
mod validate;
mod xml;

pub use ast::{check_field, Block, BlockProgram, FieldValue};
pub use registry::{kind, BlockKind, FieldKind, FieldSpec, Group, PortKind, PortSpec, TypeRef, ValueType, REGISTRY};
pub use validate::{has_errors, validate, Diagnostic, DiagnosticKind, Severity};
pub use xml::{parse_xml, serialize_xml, XmlError, FORMAT_VERSION};
