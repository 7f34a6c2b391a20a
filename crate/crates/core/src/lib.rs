//! Design language front end: parsing, checking, and code generation for
//! sense/compute/control architectures.

pub mod checker;
pub mod codegen;
pub mod diagnostic;
pub mod filter;
pub mod json;
pub mod lexer;
pub mod model;
pub mod parser;
pub mod value;

pub use checker::{check, CheckError, CheckedSpec};
pub use codegen::{generate_manifest, generate_stubs, FrameworkManifest};
pub use diagnostic::Diagnostic;
pub use filter::{FilterExpr, Predicate};
pub use model::SpecModel;
pub use parser::{parse, parse_query};
pub use value::Value;
