use std::fmt;

use crate::model::Loc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// A located message from the parser (`P…` codes) or the checker (`E…`
/// codes). Renders as `file:line:col: severity[code]: message`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub loc: Loc,
}

impl Diagnostic {
    pub fn error(code: &'static str, loc: Loc, message: impl Into<String>) -> Self {
        debug_assert!(is_valid_code(code), "bad diagnostic code {code}");
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            loc,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}[{}]: {}",
            self.loc, self.severity, self.code, self.message
        )
    }
}

/// `[PE][0-9]{3}`
pub fn is_valid_code(code: &str) -> bool {
    let b = code.as_bytes();
    b.len() == 4 && (b[0] == b'P' || b[0] == b'E') && b[1..].iter().all(u8::is_ascii_digit)
}
