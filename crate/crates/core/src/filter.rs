//! Discovery filters: a conjunction of per-attribute predicates.
//!
//! Logical combination happens inside one attribute's predicate only; across
//! attributes the clauses are always and-ed.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::checker::CheckedSpec;
use crate::value::{Value, ValueError};

#[derive(Clone, Debug, PartialEq)]
pub enum Predicate {
    Eq(Value),
    Ne(Value),
    Lt(Value),
    Le(Value),
    Gt(Value),
    Ge(Value),
    Or(Box<Predicate>, Box<Predicate>),
    And(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
}

impl std::ops::Not for Predicate {
    type Output = Predicate;

    fn not(self) -> Predicate {
        Predicate::Not(Box::new(self))
    }
}

impl Predicate {
    pub fn or(a: Predicate, b: Predicate) -> Predicate {
        Predicate::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Predicate, b: Predicate) -> Predicate {
        Predicate::And(Box::new(a), Box::new(b))
    }

    pub fn eval(&self, actual: &Value) -> bool {
        let ord = |v: &Value| actual.numeric_cmp(v);
        match self {
            Predicate::Eq(v) => actual == v,
            Predicate::Ne(v) => actual != v,
            Predicate::Lt(v) => ord(v) == Some(Ordering::Less),
            Predicate::Le(v) => matches!(ord(v), Some(Ordering::Less | Ordering::Equal)),
            Predicate::Gt(v) => ord(v) == Some(Ordering::Greater),
            Predicate::Ge(v) => matches!(ord(v), Some(Ordering::Greater | Ordering::Equal)),
            Predicate::Or(a, b) => a.eval(actual) || b.eval(actual),
            Predicate::And(a, b) => a.eval(actual) && b.eval(actual),
            Predicate::Not(p) => !p.eval(actual),
        }
    }

    pub fn uses_ordering(&self) -> bool {
        match self {
            Predicate::Lt(_) | Predicate::Le(_) | Predicate::Gt(_) | Predicate::Ge(_) => true,
            Predicate::Eq(_) | Predicate::Ne(_) => false,
            Predicate::Or(a, b) | Predicate::And(a, b) => a.uses_ordering() || b.uses_ordering(),
            Predicate::Not(p) => p.uses_ordering(),
        }
    }

    fn try_map(&self, f: &mut impl FnMut(&Value) -> Result<Value, ValueError>) -> Result<Predicate, ValueError> {
        Ok(match self {
            Predicate::Eq(v) => Predicate::Eq(f(v)?),
            Predicate::Ne(v) => Predicate::Ne(f(v)?),
            Predicate::Lt(v) => Predicate::Lt(f(v)?),
            Predicate::Le(v) => Predicate::Le(f(v)?),
            Predicate::Gt(v) => Predicate::Gt(f(v)?),
            Predicate::Ge(v) => Predicate::Ge(f(v)?),
            Predicate::Or(a, b) => Predicate::or(a.try_map(f)?, b.try_map(f)?),
            Predicate::And(a, b) => Predicate::and(a.try_map(f)?, b.try_map(f)?),
            Predicate::Not(p) => !p.try_map(f)?,
        })
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Eq(v) => write!(f, "eq({v})"),
            Predicate::Ne(v) => write!(f, "ne({v})"),
            Predicate::Lt(v) => write!(f, "lt({v})"),
            Predicate::Le(v) => write!(f, "le({v})"),
            Predicate::Gt(v) => write!(f, "gt({v})"),
            Predicate::Ge(v) => write!(f, "ge({v})"),
            Predicate::Or(a, b) => write!(f, "or({a},{b})"),
            Predicate::And(a, b) => write!(f, "and({a},{b})"),
            Predicate::Not(p) => write!(f, "not({p})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub attribute: String,
    pub predicate: Predicate,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum FilterError {
    #[error("attribute `{attribute}` is filtered more than once")]
    DuplicateAttribute { attribute: String },
    #[error("`{class}` has no attribute `{attribute}`")]
    UnknownAttribute { class: String, attribute: String },
    #[error("ordering comparison on non-numeric attribute `{attribute}`")]
    NonNumericOrdering { attribute: String },
    #[error("bad literal for attribute `{attribute}`: {source}")]
    BadLiteral { attribute: String, source: ValueError },
    #[error("unknown device class `{0}`")]
    UnknownClass(String),
}

/// A conjunction of clauses, at most one per attribute. The empty filter
/// matches every instance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FilterExpr {
    pub clauses: Vec<Clause>,
}

impl FilterExpr {
    pub fn all() -> FilterExpr {
        FilterExpr::default()
    }

    /// Adds a clause, rejecting a second clause on the same attribute.
    pub fn with(mut self, attribute: impl Into<String>, predicate: Predicate) -> Result<FilterExpr, FilterError> {
        let attribute = attribute.into();
        if self.clause_for(&attribute).is_some() {
            return Err(FilterError::DuplicateAttribute { attribute });
        }
        self.clauses.push(Clause { attribute, predicate });
        Ok(self)
    }

    pub(crate) fn push_clause(&mut self, attribute: String, predicate: Predicate) {
        self.clauses.push(Clause { attribute, predicate });
    }

    pub fn clause_for(&self, attribute: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.attribute == attribute)
    }

    /// Types the filter against a device class: checks attribute names,
    /// restricts ordering operators to numeric attributes, and coerces every
    /// literal to the attribute's declared type.
    pub fn resolve(&self, spec: &CheckedSpec, class: &str) -> Result<FilterExpr, FilterError> {
        let members = spec
            .effective_members(class)
            .map_err(|_| FilterError::UnknownClass(class.to_string()))?;
        let mut out = FilterExpr::default();
        for clause in &self.clauses {
            let attr = members
                .attribute(&clause.attribute)
                .ok_or_else(|| FilterError::UnknownAttribute {
                    class: class.to_string(),
                    attribute: clause.attribute.clone(),
                })?;
            if clause.predicate.uses_ordering() && !attr.ty.is_numeric() {
                return Err(FilterError::NonNumericOrdering {
                    attribute: clause.attribute.clone(),
                });
            }
            let predicate = clause
                .predicate
                .try_map(&mut |v| v.clone().coerce(spec, &attr.ty))
                .map_err(|source| FilterError::BadLiteral {
                    attribute: clause.attribute.clone(),
                    source,
                })?;
            out = out.with(clause.attribute.clone(), predicate)?;
        }
        Ok(out)
    }

    /// Evaluates a resolved filter. Missing attributes never match.
    pub fn matches(&self, attributes: &BTreeMap<String, Value>) -> bool {
        self.clauses.iter().all(|c| {
            attributes
                .get(&c.attribute)
                .is_some_and(|v| c.predicate.eval(v))
        })
    }
}

/// Renders the textual form accepted by [`crate::parser::parse_query`].
impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}({})", c.attribute, c.predicate)?;
        }
        Ok(())
    }
}
