//! Abstract syntax of taxonomy and architecture declarations.
//!
//! A [`SpecModel`] is what the parser produces: every top-level declaration
//! across all input files, in textual order. Name resolution happens later in
//! [`crate::checker`].

use std::fmt;
use std::sync::Arc;

/// Position of a syntax element, 1-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loc {
    pub file: Arc<str>,
    pub line: u32,
    pub column: u32,
}

impl Loc {
    pub fn new(file: Arc<str>, line: u32, column: u32) -> Self {
        Loc { file, line, column }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

/// An identifier together with where it was written.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    pub text: String,
    pub loc: Loc,
}

impl Name {
    pub fn new(text: impl Into<String>, loc: Loc) -> Self {
        Name {
            text: text.into(),
            loc,
        }
    }

    /// A name with no source position, for programmatic construction.
    pub fn bare(text: impl Into<String>) -> Self {
        Name::new(text, Loc::default())
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    String,
    Integer,
    Float,
    Boolean,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::String,
        Builtin::Integer,
        Builtin::Float,
        Builtin::Boolean,
    ];

    pub fn from_name(name: &str) -> Option<Builtin> {
        match name {
            "String" => Some(Builtin::String),
            "Integer" => Some(Builtin::Integer),
            "Float" => Some(Builtin::Float),
            "Boolean" => Some(Builtin::Boolean),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::String => "String",
            Builtin::Integer => "Integer",
            Builtin::Float => "Float",
            Builtin::Boolean => "Boolean",
        }
    }
}

/// A reference to a type. Arrays are single-level: the element of an array
/// is never itself an array.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeRef {
    Builtin(Builtin),
    Named(String),
    Array(Box<TypeRef>),
}

impl TypeRef {
    /// Interprets a bare identifier: one of the four builtins, otherwise a
    /// named datatype.
    pub fn from_ident(name: &str) -> TypeRef {
        match Builtin::from_name(name) {
            Some(b) => TypeRef::Builtin(b),
            None => TypeRef::Named(name.to_string()),
        }
    }

    /// Wraps a scalar type into an array type. Returns `None` when `element`
    /// is already an array.
    pub fn array_of(element: TypeRef) -> Option<TypeRef> {
        match element {
            TypeRef::Array(_) => None,
            other => Some(TypeRef::Array(Box::new(other))),
        }
    }

    pub fn is_array(&self) -> bool {
        matches!(self, TypeRef::Array(_))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            TypeRef::Builtin(Builtin::Integer) | TypeRef::Builtin(Builtin::Float)
        )
    }

    /// The datatype name this reference mentions, if any.
    pub fn named(&self) -> Option<&str> {
        match self {
            TypeRef::Named(n) => Some(n),
            TypeRef::Array(inner) => inner.named(),
            TypeRef::Builtin(_) => None,
        }
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Builtin(b) => f.write_str(b.name()),
            TypeRef::Named(n) => f.write_str(n),
            TypeRef::Array(inner) => write!(f, "{inner}[]"),
        }
    }
}

/// A `name as Type` pair with the location of the type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Typed {
    pub name: Name,
    pub ty: TypeRef,
    pub ty_loc: Loc,
}

impl Typed {
    pub fn new(name: Name, ty: TypeRef, ty_loc: Loc) -> Self {
        Typed { name, ty, ty_loc }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceDecl {
    pub name: Name,
    pub value_type: TypeRef,
    pub type_loc: Loc,
    pub indices: Vec<Typed>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeviceDecl {
    pub name: Name,
    pub parent: Option<Name>,
    pub attributes: Vec<Typed>,
    pub sources: Vec<SourceDecl>,
    pub action_refs: Vec<Name>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: Name,
    pub params: Vec<Typed>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionDecl {
    pub name: Name,
    pub methods: Vec<MethodDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructDecl {
    pub name: Name,
    pub fields: Vec<Typed>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumDecl {
    pub name: Name,
    pub values: Vec<Name>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InputBinding {
    /// `source a, b from Device;`
    EntitySources { sources: Vec<Name>, device: Name },
    /// `context Name;`
    ContextRef { context: Name },
}

/// `action Action on Device;`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionUse {
    pub action: Name,
    pub device: Name,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextDecl {
    pub name: Name,
    pub output_type: TypeRef,
    pub type_loc: Loc,
    pub output_indices: Vec<Typed>,
    pub inputs: Vec<InputBinding>,
    /// Action uses are illegal in contexts; kept so the checker can report them.
    pub action_uses: Vec<ActionUse>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControllerDecl {
    pub name: Name,
    pub context_inputs: Vec<Name>,
    pub action_uses: Vec<ActionUse>,
    /// `source … from` bindings are illegal in controllers; kept so the
    /// checker can report them.
    pub source_inputs: Vec<(Vec<Name>, Name)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Device(DeviceDecl),
    Action(ActionDecl),
    Structure(StructDecl),
    Enumeration(EnumDecl),
    Context(ContextDecl),
    Controller(ControllerDecl),
}

impl Decl {
    pub fn name(&self) -> &Name {
        match self {
            Decl::Device(d) => &d.name,
            Decl::Action(d) => &d.name,
            Decl::Structure(d) => &d.name,
            Decl::Enumeration(d) => &d.name,
            Decl::Context(d) => &d.name,
            Decl::Controller(d) => &d.name,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Decl::Device(_) => "device",
            Decl::Action(_) => "action",
            Decl::Structure(_) => "structure",
            Decl::Enumeration(_) => "enumeration",
            Decl::Context(_) => "context",
            Decl::Controller(_) => "controller",
        }
    }
}

/// Every declaration across all parsed files, in textual order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpecModel {
    pub declarations: Vec<Decl>,
}

impl SpecModel {
    pub fn new(declarations: Vec<Decl>) -> Self {
        SpecModel { declarations }
    }

    pub fn is_empty(&self) -> bool {
        self.declarations.is_empty()
    }

    pub fn devices(&self) -> impl Iterator<Item = &DeviceDecl> {
        self.declarations.iter().filter_map(|d| match d {
            Decl::Device(d) => Some(d),
            _ => None,
        })
    }

    pub fn contexts(&self) -> impl Iterator<Item = &ContextDecl> {
        self.declarations.iter().filter_map(|d| match d {
            Decl::Context(d) => Some(d),
            _ => None,
        })
    }

    pub fn controllers(&self) -> impl Iterator<Item = &ControllerDecl> {
        self.declarations.iter().filter_map(|d| match d {
            Decl::Controller(d) => Some(d),
            _ => None,
        })
    }

    /// A copy with every source position reset, for structural comparison.
    pub fn without_locations(&self) -> SpecModel {
        let mut out = self.clone();
        for decl in &mut out.declarations {
            strip_decl(decl);
        }
        out
    }
}

fn strip_name(n: &mut Name) {
    n.loc = Loc::default();
}

fn strip_typed(t: &mut Typed) {
    strip_name(&mut t.name);
    t.ty_loc = Loc::default();
}

fn strip_decl(decl: &mut Decl) {
    match decl {
        Decl::Device(d) => {
            strip_name(&mut d.name);
            if let Some(p) = &mut d.parent {
                strip_name(p);
            }
            d.attributes.iter_mut().for_each(strip_typed);
            for s in &mut d.sources {
                strip_name(&mut s.name);
                s.type_loc = Loc::default();
                s.indices.iter_mut().for_each(strip_typed);
            }
            d.action_refs.iter_mut().for_each(strip_name);
        }
        Decl::Action(a) => {
            strip_name(&mut a.name);
            for m in &mut a.methods {
                strip_name(&mut m.name);
                m.params.iter_mut().for_each(strip_typed);
            }
        }
        Decl::Structure(s) => {
            strip_name(&mut s.name);
            s.fields.iter_mut().for_each(strip_typed);
        }
        Decl::Enumeration(e) => {
            strip_name(&mut e.name);
            e.values.iter_mut().for_each(strip_name);
        }
        Decl::Context(c) => {
            strip_name(&mut c.name);
            c.type_loc = Loc::default();
            c.output_indices.iter_mut().for_each(strip_typed);
            for input in &mut c.inputs {
                match input {
                    InputBinding::EntitySources { sources, device } => {
                        sources.iter_mut().for_each(strip_name);
                        strip_name(device);
                    }
                    InputBinding::ContextRef { context } => strip_name(context),
                }
            }
            for u in &mut c.action_uses {
                strip_name(&mut u.action);
                strip_name(&mut u.device);
            }
        }
        Decl::Controller(c) => {
            strip_name(&mut c.name);
            c.context_inputs.iter_mut().for_each(strip_name);
            for u in &mut c.action_uses {
                strip_name(&mut u.action);
                strip_name(&mut u.device);
            }
            for (sources, device) in &mut c.source_inputs {
                sources.iter_mut().for_each(strip_name);
                strip_name(device);
            }
        }
    }
}

fn join_typed(items: &[Typed]) -> String {
    items
        .iter()
        .map(|t| format!("{} as {}", t.name, t.ty))
        .collect::<Vec<_>>()
        .join(", ")
}

fn join_names(items: &[Name]) -> String {
    items
        .iter()
        .map(|n| n.text.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for Decl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decl::Device(d) => {
                write!(f, "device {}", d.name)?;
                if let Some(p) = &d.parent {
                    write!(f, " extends {p}")?;
                }
                writeln!(f, " {{")?;
                for a in &d.attributes {
                    writeln!(f, "  attribute {} as {};", a.name, a.ty)?;
                }
                for s in &d.sources {
                    write!(f, "  source {} as {}", s.name, s.value_type)?;
                    if !s.indices.is_empty() {
                        write!(f, " indexed by {}", join_typed(&s.indices))?;
                    }
                    writeln!(f, ";")?;
                }
                for a in &d.action_refs {
                    writeln!(f, "  action {a};")?;
                }
                write!(f, "}}")
            }
            Decl::Action(a) => {
                writeln!(f, "action {} {{", a.name)?;
                for m in &a.methods {
                    writeln!(f, "  {}({});", m.name, join_typed(&m.params))?;
                }
                write!(f, "}}")
            }
            Decl::Structure(s) => {
                writeln!(f, "structure {} {{", s.name)?;
                for field in &s.fields {
                    writeln!(f, "  {} as {};", field.name, field.ty)?;
                }
                write!(f, "}}")
            }
            Decl::Enumeration(e) => {
                write!(f, "enumeration {} {{{}}}", e.name, join_names(&e.values))
            }
            Decl::Context(c) => {
                write!(f, "context {} as {}", c.name, c.output_type)?;
                if !c.output_indices.is_empty() {
                    write!(f, " indexed by {}", join_typed(&c.output_indices))?;
                }
                writeln!(f, " {{")?;
                for input in &c.inputs {
                    match input {
                        InputBinding::EntitySources { sources, device } => {
                            writeln!(f, "  source {} from {};", join_names(sources), device)?
                        }
                        InputBinding::ContextRef { context } => {
                            writeln!(f, "  context {context};")?
                        }
                    }
                }
                for u in &c.action_uses {
                    writeln!(f, "  action {} on {};", u.action, u.device)?;
                }
                write!(f, "}}")
            }
            Decl::Controller(c) => {
                writeln!(f, "controller {} {{", c.name)?;
                for ctx in &c.context_inputs {
                    writeln!(f, "  context {ctx};")?;
                }
                for (sources, device) in &c.source_inputs {
                    writeln!(f, "  source {} from {};", join_names(sources), device)?;
                }
                for u in &c.action_uses {
                    writeln!(f, "  action {} on {};", u.action, u.device)?;
                }
                write!(f, "}}")
            }
        }
    }
}

/// Pretty-prints the model in the surface syntax. Reparsing the output yields
/// a structurally identical model.
impl fmt::Display for SpecModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, decl) in self.declarations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "{decl}")?;
        }
        Ok(())
    }
}

/// Upper-cases the first character: `badgeDetected` → `BadgeDetected`.
pub fn capitalize(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Lower-cases the first character: `BadgeReader` → `badgeReader`.
pub fn decapitalize(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}
