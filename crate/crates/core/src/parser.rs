//! Recursive-descent parser for taxonomy/architecture files and for the
//! textual discovery-filter syntax.
//!
//! Grammar:
//!
//! ```text
//! spec        := decl*
//! decl        := device | action | structure | enumeration | context | controller
//! device      := "device" ID ("extends" ID)? "{" (attr | srcDecl | actRef)* "}"
//! attr        := "attribute" ID "as" type ";"
//! srcDecl     := "source" ID "as" type ("indexed" "by" ID "as" type ("," ID "as" type)*)? ";"
//! actRef      := "action" ID ";"
//! action      := "action" ID "{" (ID "(" (param ("," param)*)? ")" ";")* "}"
//! structure   := "structure" ID "{" (ID "as" type ";")* "}"
//! enumeration := "enumeration" ID "{" ID ("," ID)* "}"
//! context     := "context" ID "as" type ("indexed" "by" ID "as" type)? "{" input* "}"
//! input       := "source" ID ("," ID)* "from" ID ";" | "context" ID ";"
//! controller  := "controller" ID "{" ("context" ID ";" | "action" ID "on" ID ";")* "}"
//! type        := ID "[]"?
//! param       := ID "as" type
//! ```
//!
//! Component bodies also accept the items that belong to the *other*
//! component kind (`action … on …` in a context, `source … from …` in a
//! controller) so the checker can report them as pattern violations.
//!
//! Errors recover at declaration boundaries: the broken declaration is
//! dropped and parsing resumes at the next top-level keyword.

use std::sync::Arc;

use crate::diagnostic::Diagnostic;
use crate::filter::{FilterExpr, Predicate};
use crate::lexer::{tokenize, Tok, Token};
use crate::model::*;
use crate::value::Value;

pub const P_UNEXPECTED: &str = "P001";
pub const P_UNTERMINATED: &str = "P002";
pub const P_DUPLICATE_EXTENDS: &str = "P003";
pub const P_BAD_INDEX: &str = "P004";
pub const P_BAD_PREDICATE: &str = "P010";
pub const P_UNKNOWN_OPERATOR: &str = "P011";
pub const P_DUPLICATE_CLAUSE: &str = "P012";

const TOP_KEYWORDS: [&str; 6] = [
    "device",
    "action",
    "structure",
    "enumeration",
    "context",
    "controller",
];

/// Parses every file and concatenates their declarations in input order.
///
/// Parsing is total: the returned model holds every declaration that parsed
/// cleanly, and the diagnostics list holds one entry per syntax error.
pub fn parse<P: AsRef<str>, T: AsRef<str>>(files: &[(P, T)]) -> (SpecModel, Vec<Diagnostic>) {
    let mut declarations = Vec::new();
    let mut diagnostics = Vec::new();
    for (path, text) in files {
        let unit = parse_unit(path.as_ref(), text.as_ref());
        declarations.extend(unit.declarations);
        diagnostics.extend(unit.diagnostics);
    }
    (SpecModel::new(declarations), diagnostics)
}

/// One parsed file.
#[derive(Clone, Debug)]
pub struct SourceUnit {
    pub path: Arc<str>,
    pub declarations: Vec<Decl>,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn parse_unit(path: &str, text: &str) -> SourceUnit {
    let file: Arc<str> = Arc::from(path);
    let mut p = Parser {
        tokens: tokenize(text),
        pos: 0,
        file: file.clone(),
        depth: 0,
        diags: Vec::new(),
    };
    let mut declarations = Vec::new();
    while !p.at_eof() {
        p.depth = 0;
        match p.decl() {
            Ok(d) => declarations.push(d),
            Err(()) => p.recover(),
        }
    }
    SourceUnit {
        path: file,
        declarations,
        diagnostics: p.diags,
    }
}

type PResult<T> = Result<T, ()>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    file: Arc<str>,
    /// Braces opened by the declaration being parsed.
    depth: usize,
    diags: Vec<Diagnostic>,
}

impl Parser {
    fn tok(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_tok(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn loc(&self) -> Loc {
        let t = &self.tokens[self.pos];
        Loc::new(self.file.clone(), t.line, t.column)
    }

    fn at_eof(&self) -> bool {
        *self.tok() == Tok::Eof
    }

    fn bump(&mut self) {
        match self.tok() {
            Tok::LBrace => self.depth += 1,
            Tok::RBrace => self.depth = self.depth.saturating_sub(1),
            _ => {}
        }
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.tok(), Tok::Ident(s) if s == kw)
    }

    fn error<T>(&mut self, code: &'static str, loc: Loc, msg: impl Into<String>) -> PResult<T> {
        self.diags.push(Diagnostic::error(code, loc, msg));
        Err(())
    }

    fn unexpected<T>(&mut self, expected: &str) -> PResult<T> {
        let loc = self.loc();
        match self.tok().clone() {
            Tok::UnterminatedComment => self.error(P_UNTERMINATED, loc, "unterminated block comment"),
            t => self.error(P_UNEXPECTED, loc, format!("unexpected {t}, expected {expected}")),
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.tok() == tok {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&tok.to_string())
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        if let Tok::Ident(s) = self.tok() {
            let name = Name::new(s.clone(), self.loc());
            self.bump();
            Ok(name)
        } else {
            self.unexpected("an identifier")
        }
    }

    /// `ID "[]"?`
    fn type_ref(&mut self) -> PResult<(TypeRef, Loc)> {
        let name = self.ident()?;
        let mut ty = TypeRef::from_ident(&name.text);
        if *self.tok() == Tok::LBracket {
            self.bump();
            self.expect(Tok::RBracket)?;
            ty = TypeRef::Array(Box::new(ty));
        }
        Ok((ty, name.loc))
    }

    /// `ID "as" type`
    fn typed(&mut self) -> PResult<Typed> {
        let name = self.ident()?;
        self.expect_kw("as")?;
        let (ty, loc) = self.type_ref()?;
        Ok(Typed::new(name, ty, loc))
    }

    /// Checks for EOF inside a block opened at `open`.
    fn check_block_open(&mut self, open: &Loc) -> PResult<()> {
        if self.at_eof() {
            return self.error(P_UNTERMINATED, open.clone(), "block is never closed");
        }
        Ok(())
    }

    fn open_block(&mut self) -> PResult<Loc> {
        let loc = self.loc();
        self.expect(Tok::LBrace)?;
        Ok(loc)
    }

    /// Skips to the end of the broken declaration or to the next top-level
    /// keyword outside any brace.
    fn recover(&mut self) {
        loop {
            match self.tok() {
                Tok::Eof => return,
                Tok::RBrace => {
                    let closes = self.depth == 1;
                    self.bump();
                    if closes {
                        return;
                    }
                }
                Tok::Ident(s) if self.depth == 0 && TOP_KEYWORDS.contains(&s.as_str()) => return,
                _ => self.bump(),
            }
        }
    }

    fn decl(&mut self) -> PResult<Decl> {
        let kw = match self.tok() {
            Tok::Ident(s) if TOP_KEYWORDS.contains(&s.as_str()) => s.clone(),
            _ => return self.unexpected("a declaration keyword"),
        };
        self.bump();
        match kw.as_str() {
            "device" => self.device().map(Decl::Device),
            "action" => self.action().map(Decl::Action),
            "structure" => self.structure().map(Decl::Structure),
            "enumeration" => self.enumeration().map(Decl::Enumeration),
            "context" => self.context().map(Decl::Context),
            "controller" => self.controller().map(Decl::Controller),
            _ => unreachable!(),
        }
    }

    fn device(&mut self) -> PResult<DeviceDecl> {
        let name = self.ident()?;
        let mut parent = None;
        if self.is_kw("extends") {
            self.bump();
            parent = Some(self.ident()?);
            if self.is_kw("extends") || *self.tok() == Tok::Comma {
                let loc = self.loc();
                return self.error(
                    P_DUPLICATE_EXTENDS,
                    loc,
                    format!("device `{name}` may extend only one device"),
                );
            }
        }
        let open = self.open_block()?;
        let mut d = DeviceDecl {
            name,
            parent,
            attributes: Vec::new(),
            sources: Vec::new(),
            action_refs: Vec::new(),
        };
        loop {
            self.check_block_open(&open)?;
            if *self.tok() == Tok::RBrace {
                self.bump();
                return Ok(d);
            }
            if self.is_kw("attribute") {
                self.bump();
                let t = self.typed()?;
                self.expect(Tok::Semi)?;
                d.attributes.push(t);
            } else if self.is_kw("source") {
                self.bump();
                let name = self.ident()?;
                self.expect_kw("as")?;
                let (value_type, type_loc) = self.type_ref()?;
                let indices = self.indexed_by(true)?;
                self.expect(Tok::Semi)?;
                d.sources.push(SourceDecl {
                    name,
                    value_type,
                    type_loc,
                    indices,
                });
            } else if self.is_kw("action") {
                self.bump();
                let a = self.ident()?;
                self.expect(Tok::Semi)?;
                d.action_refs.push(a);
            } else {
                return self.unexpected("`attribute`, `source`, `action` or `}`");
            }
        }
    }

    /// Optional `indexed by ID as type ("," ID as type)*`.
    fn indexed_by(&mut self, allow_many: bool) -> PResult<Vec<Typed>> {
        let mut out = Vec::new();
        if !self.is_kw("indexed") {
            return Ok(out);
        }
        let start = self.loc();
        self.bump();
        if !self.is_kw("by") {
            let loc = self.loc();
            return self.error(P_BAD_INDEX, loc, "expected `by` after `indexed`");
        }
        self.bump();
        loop {
            let ok = matches!(self.tok(), Tok::Ident(_))
                && self.peek_tok(1) == &Tok::Ident("as".into())
                && matches!(self.peek_tok(2), Tok::Ident(_));
            if !ok {
                let loc = self.loc();
                return self.error(P_BAD_INDEX, loc, "malformed `indexed by` clause, expected `name as Type`");
            }
            out.push(self.typed()?);
            if *self.tok() != Tok::Comma {
                break;
            }
            if !allow_many {
                return self.error(P_BAD_INDEX, start, "a context output takes at most one index");
            }
            self.bump();
        }
        Ok(out)
    }

    fn action(&mut self) -> PResult<ActionDecl> {
        let name = self.ident()?;
        let open = self.open_block()?;
        let mut methods = Vec::new();
        loop {
            self.check_block_open(&open)?;
            if *self.tok() == Tok::RBrace {
                self.bump();
                return Ok(ActionDecl { name, methods });
            }
            let m = self.ident()?;
            self.expect(Tok::LParen)?;
            let mut params = Vec::new();
            if *self.tok() != Tok::RParen {
                loop {
                    params.push(self.typed()?);
                    if *self.tok() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen)?;
            self.expect(Tok::Semi)?;
            methods.push(MethodDecl { name: m, params });
        }
    }

    fn structure(&mut self) -> PResult<StructDecl> {
        let name = self.ident()?;
        let open = self.open_block()?;
        let mut fields = Vec::new();
        loop {
            self.check_block_open(&open)?;
            if *self.tok() == Tok::RBrace {
                self.bump();
                return Ok(StructDecl { name, fields });
            }
            fields.push(self.typed()?);
            self.expect(Tok::Semi)?;
        }
    }

    fn enumeration(&mut self) -> PResult<EnumDecl> {
        let name = self.ident()?;
        let open = self.open_block()?;
        let mut values = vec![self.ident()?];
        loop {
            self.check_block_open(&open)?;
            match self.tok() {
                Tok::Comma => {
                    self.bump();
                    values.push(self.ident()?);
                }
                Tok::RBrace => {
                    self.bump();
                    return Ok(EnumDecl { name, values });
                }
                _ => return self.unexpected("`,` or `}`"),
            }
        }
    }

    /// `source a, b from Device ;` after the `source` keyword.
    fn source_binding(&mut self) -> PResult<(Vec<Name>, Name)> {
        let mut sources = vec![self.ident()?];
        while *self.tok() == Tok::Comma {
            self.bump();
            sources.push(self.ident()?);
        }
        self.expect_kw("from")?;
        let device = self.ident()?;
        self.expect(Tok::Semi)?;
        Ok((sources, device))
    }

    /// `action A on Device ;` after the `action` keyword.
    fn action_use(&mut self) -> PResult<ActionUse> {
        let action = self.ident()?;
        self.expect_kw("on")?;
        let device = self.ident()?;
        self.expect(Tok::Semi)?;
        Ok(ActionUse { action, device })
    }

    fn context(&mut self) -> PResult<ContextDecl> {
        let name = self.ident()?;
        self.expect_kw("as")?;
        let (output_type, type_loc) = self.type_ref()?;
        let output_indices = self.indexed_by(false)?;
        let open = self.open_block()?;
        let mut c = ContextDecl {
            name,
            output_type,
            type_loc,
            output_indices,
            inputs: Vec::new(),
            action_uses: Vec::new(),
        };
        loop {
            self.check_block_open(&open)?;
            if *self.tok() == Tok::RBrace {
                self.bump();
                return Ok(c);
            }
            if self.is_kw("source") {
                self.bump();
                let (sources, device) = self.source_binding()?;
                c.inputs.push(InputBinding::EntitySources { sources, device });
            } else if self.is_kw("context") {
                self.bump();
                let context = self.ident()?;
                self.expect(Tok::Semi)?;
                c.inputs.push(InputBinding::ContextRef { context });
            } else if self.is_kw("action") {
                self.bump();
                c.action_uses.push(self.action_use()?);
            } else {
                return self.unexpected("`source`, `context` or `}`");
            }
        }
    }

    fn controller(&mut self) -> PResult<ControllerDecl> {
        let name = self.ident()?;
        let open = self.open_block()?;
        let mut c = ControllerDecl {
            name,
            context_inputs: Vec::new(),
            action_uses: Vec::new(),
            source_inputs: Vec::new(),
        };
        loop {
            self.check_block_open(&open)?;
            if *self.tok() == Tok::RBrace {
                self.bump();
                return Ok(c);
            }
            if self.is_kw("context") {
                self.bump();
                let ctx = self.ident()?;
                self.expect(Tok::Semi)?;
                c.context_inputs.push(ctx);
            } else if self.is_kw("action") {
                self.bump();
                c.action_uses.push(self.action_use()?);
            } else if self.is_kw("source") {
                self.bump();
                let binding = self.source_binding()?;
                c.source_inputs.push(binding);
            } else {
                return self.unexpected("`context`, `action` or `}`");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Discovery filters

/// Parses the textual filter syntax, e.g. `area(or(eq(room1),eq(room2))),size(gt(10))`.
///
/// Clauses are separated by `,` (or `.`, the fluent form). A bare value is
/// shorthand for `eq(value)`. Literal values are untyped here: numbers become
/// `Integer`/`Float`, `true`/`false` become `Boolean`, identifiers and quoted
/// strings become `String`. They are coerced to the attribute's declared type
/// when the filter is resolved against a device class.
pub fn parse_query(text: &str) -> Result<FilterExpr, Diagnostic> {
    let mut q = QueryParser {
        tokens: tokenize(text),
        pos: 0,
        file: Arc::from("<query>"),
    };
    let mut filter = FilterExpr::default();
    if q.tok() == &Tok::Eof {
        return Ok(filter);
    }
    loop {
        let attr_loc = q.loc();
        let attr = match q.tok().clone() {
            Tok::Ident(s) => s,
            t => return Err(q.err(P_BAD_PREDICATE, format!("expected an attribute name, found {t}"))),
        };
        q.bump();
        q.expect(Tok::LParen)?;
        let pred = q.predicate(0)?;
        q.expect(Tok::RParen)?;
        if filter.clause_for(&attr).is_some() {
            return Err(Diagnostic::error(
                P_DUPLICATE_CLAUSE,
                attr_loc,
                format!("attribute `{attr}` is filtered more than once; combine predicates with and/or"),
            ));
        }
        filter.push_clause(attr, pred);
        match q.tok() {
            Tok::Eof => return Ok(filter),
            Tok::Comma | Tok::Dot => q.bump(),
            t => {
                let msg = format!("expected `,` between clauses, found {t}");
                return Err(q.err(P_BAD_PREDICATE, msg));
            }
        }
    }
}

struct QueryParser {
    tokens: Vec<Token>,
    pos: usize,
    file: Arc<str>,
}

const MAX_PREDICATE_DEPTH: usize = 64;

impl QueryParser {
    fn tok(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn loc(&self) -> Loc {
        let t = &self.tokens[self.pos];
        Loc::new(self.file.clone(), t.line, t.column)
    }

    fn bump(&mut self) {
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
    }

    fn err(&self, code: &'static str, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(code, self.loc(), msg)
    }

    fn expect(&mut self, tok: Tok) -> Result<(), Diagnostic> {
        if *self.tok() == tok {
            self.bump();
            Ok(())
        } else {
            let msg = format!("expected {tok}, found {}", self.tok());
            Err(self.err(P_BAD_PREDICATE, msg))
        }
    }

    fn predicate(&mut self, depth: usize) -> Result<Predicate, Diagnostic> {
        if depth > MAX_PREDICATE_DEPTH {
            return Err(self.err(P_BAD_PREDICATE, "predicate nested too deeply"));
        }
        if let Tok::Ident(op) = self.tok().clone() {
            if self.tokens.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::LParen) {
                let op_loc = self.loc();
                self.bump();
                self.bump();
                let pred = match op.as_str() {
                    "eq" | "ne" | "lt" | "le" | "gt" | "ge" => {
                        let v = self.value()?;
                        match op.as_str() {
                            "eq" => Predicate::Eq(v),
                            "ne" => Predicate::Ne(v),
                            "lt" => Predicate::Lt(v),
                            "le" => Predicate::Le(v),
                            "gt" => Predicate::Gt(v),
                            _ => Predicate::Ge(v),
                        }
                    }
                    "or" | "and" => {
                        let a = self.predicate(depth + 1)?;
                        self.expect(Tok::Comma)?;
                        let b = self.predicate(depth + 1)?;
                        if op == "or" {
                            Predicate::Or(Box::new(a), Box::new(b))
                        } else {
                            Predicate::And(Box::new(a), Box::new(b))
                        }
                    }
                    "not" => Predicate::Not(Box::new(self.predicate(depth + 1)?)),
                    other => {
                        return Err(Diagnostic::error(
                            P_UNKNOWN_OPERATOR,
                            op_loc,
                            format!("unknown operator `{other}`"),
                        ))
                    }
                };
                self.expect(Tok::RParen)?;
                return Ok(pred);
            }
        }
        Ok(Predicate::Eq(self.value()?))
    }

    fn value(&mut self) -> Result<Value, Diagnostic> {
        let negative = if *self.tok() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let v = match self.tok().clone() {
            Tok::Int(i) => Value::Integer(if negative { -i } else { i }),
            Tok::Float(x) => Value::Float(if negative { -x } else { x }),
            _ if negative => return Err(self.err(P_BAD_PREDICATE, "expected a number after `-`")),
            Tok::Ident(s) if s == "true" => Value::Boolean(true),
            Tok::Ident(s) if s == "false" => Value::Boolean(false),
            Tok::Ident(s) | Tok::Str(s) => Value::String(s),
            t => return Err(self.err(P_BAD_PREDICATE, format!("expected a value, found {t}"))),
        };
        self.bump();
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_one(text: &str) -> (SpecModel, Vec<Diagnostic>) {
        parse(&[("t.diaspec", text)])
    }

    #[test]
    fn badge_reader_device() {
        let (m, d) = parse_one(
            "device BadgeReader extends LocatedDevice { source badgeDetected as String; source badgeDisappeared as String; }",
        );
        assert!(d.is_empty(), "{d:?}");
        let Decl::Device(dev) = &m.declarations[0] else { panic!() };
        assert_eq!(dev.name.text, "BadgeReader");
        assert_eq!(dev.parent.as_ref().unwrap().text, "LocatedDevice");
        assert_eq!(dev.sources.len(), 2);
        assert_eq!(dev.attributes.len(), 0);
    }

    #[test]
    fn enumeration_values_in_order() {
        let (m, d) = parse_one("enumeration BuildingState {OPEN, CLOSE}");
        assert!(d.is_empty());
        let Decl::Enumeration(e) = &m.declarations[0] else { panic!() };
        let vals: Vec<_> = e.values.iter().map(|v| v.text.as_str()).collect();
        assert_eq!(vals, ["OPEN", "CLOSE"]);
    }

    #[test]
    fn empty_input() {
        let (m, d) = parse_one("");
        assert!(m.is_empty());
        assert!(d.is_empty());
    }

    #[test]
    fn missing_parent_name_points_at_brace() {
        let (m, d) = parse_one("device X extends {");
        assert!(m.is_empty());
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].code, P_UNEXPECTED);
        assert_eq!((d[0].loc.line, d[0].loc.column), (1, 18));
    }

    #[test]
    fn duplicate_extends() {
        let (_, d) = parse_one("device X extends A extends B { }");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, P_DUPLICATE_EXTENDS);
        let (_, d) = parse_one("device X extends A, B { }");
        assert_eq!(d[0].code, P_DUPLICATE_EXTENDS);
    }

    #[test]
    fn malformed_indexed_by() {
        let (_, d) = parse_one("device X { source s as String indexed badge as String; }");
        assert_eq!(d[0].code, P_BAD_INDEX);
        let (_, d) = parse_one("device X { source s as String indexed by badge; }");
        assert_eq!(d[0].code, P_BAD_INDEX);
        let (_, d) = parse_one("context C as T indexed by a as A, b as B { context D; }");
        assert_eq!(d[0].code, P_BAD_INDEX);
    }

    #[test]
    fn multiple_source_indices_allowed() {
        let (m, d) = parse_one("device X { source s as String indexed by a as String, b as Integer; }");
        assert!(d.is_empty());
        let Decl::Device(dev) = &m.declarations[0] else { panic!() };
        assert_eq!(dev.sources[0].indices.len(), 2);
    }

    #[test]
    fn unterminated_block() {
        let (m, d) = parse_one("device X {\n  attribute a as String;\n");
        assert!(m.is_empty());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, P_UNTERMINATED);
        assert_eq!((d[0].loc.line, d[0].loc.column), (1, 10));
    }

    #[test]
    fn recovers_and_keeps_later_declarations() {
        let src = "device A { attribute x as ; }\ndevice B { }\naction C { go(; }\nenumeration E {X}";
        let (m, d) = parse_one(src);
        let names: Vec<_> = m.declarations.iter().map(|d| d.name().text.clone()).collect();
        assert_eq!(names, ["B", "E"]);
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|d| d.code == P_UNEXPECTED));
    }

    #[test]
    fn recovery_at_missing_brace() {
        let (m, d) = parse_one("device A\ndevice B {}");
        assert_eq!(d.len(), 1);
        assert_eq!(m.declarations.len(), 1);
        assert_eq!(m.declarations[0].name().text, "B");
    }

    #[test]
    fn component_bodies_keep_foreign_items() {
        let (m, d) = parse_one(
            "controller Bad { source badgeDetected from BadgeReader; }\ncontext C as T { action Display on Screen; }",
        );
        assert!(d.is_empty(), "{d:?}");
        let Decl::Controller(c) = &m.declarations[0] else { panic!() };
        assert_eq!(c.source_inputs.len(), 1);
        let Decl::Context(c) = &m.declarations[1] else { panic!() };
        assert_eq!(c.action_uses.len(), 1);
    }

    #[test]
    fn array_types() {
        let (m, d) = parse_one("context P as UserProfile[] indexed by area as Area { context X; }");
        assert!(d.is_empty());
        let Decl::Context(c) = &m.declarations[0] else { panic!() };
        assert_eq!(c.output_type.to_string(), "UserProfile[]");
        let (_, d) = parse_one("structure S { a as X[][]; }");
        assert_eq!(d[0].code, P_UNEXPECTED);
    }

    #[test]
    fn multi_file_concatenation() {
        let (m, d) = parse(&[("a", "device A {}"), ("b", "device B extends A {}")]);
        assert!(d.is_empty());
        assert_eq!(m.declarations.len(), 2);
        assert_eq!(&*m.declarations[1].name().loc.file, "b");
    }

    #[test]
    fn query_or_of_eqs() {
        let f = parse_query("area(or(eq(room1),eq(room2)))").unwrap();
        assert_eq!(f.clauses.len(), 1);
        assert_eq!(f.clauses[0].attribute, "area");
        assert_eq!(
            f.clauses[0].predicate,
            Predicate::Or(
                Box::new(Predicate::Eq(Value::String("room1".into()))),
                Box::new(Predicate::Eq(Value::String("room2".into())))
            )
        );
    }

    #[test]
    fn query_two_clauses_and_fluent_form() {
        let f = parse_query("area(room1),size(gt(10))").unwrap();
        assert_eq!(f.clauses.len(), 2);
        assert_eq!(f.clauses[0].predicate, Predicate::Eq(Value::String("room1".into())));
        assert_eq!(f.clauses[1].predicate, Predicate::Gt(Value::Integer(10)));
        assert_eq!(parse_query("area(room1).size(gt(10))").unwrap(), f);
    }

    #[test]
    fn query_empty_matches_everything() {
        assert!(parse_query("").unwrap().clauses.is_empty());
        assert!(parse_query("   ").unwrap().clauses.is_empty());
    }

    #[test]
    fn query_errors() {
        assert_eq!(parse_query("area(foo(room1))").unwrap_err().code, P_UNKNOWN_OPERATOR);
        assert_eq!(parse_query("area(eq(room1)").unwrap_err().code, P_BAD_PREDICATE);
        assert_eq!(parse_query("area(or(eq(a)))").unwrap_err().code, P_BAD_PREDICATE);
        assert_eq!(parse_query("(x)").unwrap_err().code, P_BAD_PREDICATE);
        assert_eq!(parse_query("a(1),a(2)").unwrap_err().code, P_DUPLICATE_CLAUSE);
    }

    #[test]
    fn query_literals() {
        let f = parse_query("a(-3),b(2.5),c(true),d(\"two words\")").unwrap();
        let preds: Vec<_> = f.clauses.iter().map(|c| c.predicate.clone()).collect();
        assert_eq!(
            preds,
            vec![
                Predicate::Eq(Value::Integer(-3)),
                Predicate::Eq(Value::Float(2.5)),
                Predicate::Eq(Value::Boolean(true)),
                Predicate::Eq(Value::String("two words".into())),
            ]
        );
    }
}
