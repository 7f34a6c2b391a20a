use diakit_core::filter::FilterError;
use diakit_core::value::ValueError;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum RuntimeError {
    #[error("unknown device class `{0}`")]
    UnknownClass(String),
    #[error("device class `{0}` is extended by other devices and cannot be instantiated")]
    AbstractClass(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("entity `{0}` is offline")]
    OfflineEntity(String),
    #[error("entity id `{0}` is already registered")]
    DuplicateId(String),
    #[error("`{class}` requires attribute `{attribute}`")]
    MissingAttribute { class: String, attribute: String },
    #[error("`{class}` has no attribute `{attribute}`")]
    UnknownAttribute { class: String, attribute: String },
    #[error("ordering comparison on non-numeric attribute `{0}`")]
    NonNumericOrdering(String),
    #[error("attribute `{0}` is filtered more than once")]
    DuplicateClause(String),
    #[error("{what}: {source}")]
    TypeMismatch { what: String, source: ValueError },
    #[error("{what}: expected {expected} argument(s), found {found}")]
    Arity { what: String, expected: usize, found: usize },
    #[error("`{class}` has no source `{source_name}`")]
    UnknownSource { class: String, source_name: String },
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("`{component}` does not declare source `{source_name}` from `{class}`")]
    UndeclaredInput { component: String, class: String, source_name: String },
    #[error("`{component}` does not declare action `{action}` on `{class}`")]
    UndeclaredAction { component: String, class: String, action: String },
    #[error("`{0}` is not a context and cannot publish")]
    NotAContext(String),
    #[error("action `{action}` has no method `{method}`")]
    UnknownMethod { action: String, method: String },
    #[error("empty composite of `{0}`")]
    EmptyComposite(String),
    #[error("entity `{entity}` has no pull handler for `{source_name}`")]
    NoPullHandler { entity: String, source_name: String },
    #[error("`{component}` is missing handler(s): {}", .handlers.join(", "))]
    MissingHandler { component: String, handlers: Vec<String> },
    #[error("`{component}` has handler(s) for undeclared inputs: {}", .handlers.join(", "))]
    ExtraHandler { component: String, handlers: Vec<String> },
    #[error("no logic registered for: {}", .0.join(", "))]
    MissingLogic(Vec<String>),
    #[error("entity `{entity}`: {message}")]
    Behavior { entity: String, message: String },
    #[error("{0}")]
    Logic(String),
    #[error("{component}.{handler}: {source}")]
    Handler {
        component: String,
        handler: String,
        source: Box<RuntimeError>,
    },
}

impl RuntimeError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            RuntimeError::UnknownClass(_) => "R-UNKNOWN-CLASS",
            RuntimeError::AbstractClass(_) => "R-ABSTRACT-CLASS",
            RuntimeError::UnknownEntity(_) => "R-UNKNOWN-ENTITY",
            RuntimeError::OfflineEntity(_) => "R-OFFLINE-ENTITY",
            RuntimeError::DuplicateId(_) => "R-DUPLICATE-ID",
            RuntimeError::MissingAttribute { .. } => "R-MISSING-ATTR",
            RuntimeError::UnknownAttribute { .. } => "R-UNKNOWN-ATTR",
            RuntimeError::NonNumericOrdering(_) => "R-NON-NUMERIC-ORDER",
            RuntimeError::DuplicateClause(_) => "R-DUPLICATE-CLAUSE",
            RuntimeError::TypeMismatch { .. } => "R-TYPE-MISMATCH",
            RuntimeError::Arity { .. } => "R-ARITY",
            RuntimeError::UnknownSource { .. } => "R-UNKNOWN-SOURCE",
            RuntimeError::UnknownComponent(_) => "R-UNKNOWN-COMPONENT",
            RuntimeError::UndeclaredInput { .. } => "R-UNDECLARED-INPUT",
            RuntimeError::UndeclaredAction { .. } => "R-UNDECLARED-ACTION",
            RuntimeError::NotAContext(_) => "R-NOT-A-CONTEXT",
            RuntimeError::UnknownMethod { .. } => "R-UNKNOWN-METHOD",
            RuntimeError::EmptyComposite(_) => "R-EMPTY-COMPOSITE",
            RuntimeError::NoPullHandler { .. } => "R-NO-PULL-HANDLER",
            RuntimeError::MissingHandler { .. } => "R-MISSING-HANDLER",
            RuntimeError::ExtraHandler { .. } => "R-EXTRA-HANDLER",
            RuntimeError::MissingLogic(_) => "R-MISSING-LOGIC",
            RuntimeError::Behavior { .. } => "R-BEHAVIOR",
            RuntimeError::Logic(_) => "R-LOGIC",
            RuntimeError::Handler { source, .. } => source.code(),
        }
    }

    pub fn logic(message: impl Into<String>) -> RuntimeError {
        RuntimeError::Logic(message.into())
    }
}

impl From<FilterError> for RuntimeError {
    fn from(e: FilterError) -> Self {
        match e {
            FilterError::DuplicateAttribute { attribute } => RuntimeError::DuplicateClause(attribute),
            FilterError::UnknownAttribute { class, attribute } => RuntimeError::UnknownAttribute { class, attribute },
            FilterError::NonNumericOrdering { attribute } => RuntimeError::NonNumericOrdering(attribute),
            FilterError::BadLiteral { attribute, source } => RuntimeError::TypeMismatch {
                what: format!("filter on `{attribute}`"),
                source,
            },
            FilterError::UnknownClass(c) => RuntimeError::UnknownClass(c),
        }
    }
}
