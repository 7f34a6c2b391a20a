//! Name resolution, inheritance, typing, and enforcement of the
//! sense/compute/control pattern.
//!
//! | code | rule |
//! |------|------|
//! | E001 | duplicate name in a namespace, or duplicate member/handler name inside a declaration |
//! | E002 | unknown type name |
//! | E003 | unknown device in `from`, `on` or `extends` |
//! | E004 | source absent from the device's effective sources |
//! | E005 | unknown context reference |
//! | E006 | undeclared action, or action absent from the device's effective actions |
//! | E007 | inheritance cycle |
//! | E008 | controller binds an entity source |
//! | E009 | context uses an action |
//! | E010 | member redeclares an ancestor's member |
//! | E011 | index declared with an array type |
//! | E012 | duplicate structure field or enumeration value |
//! | E013 | cyclic context dependency |
//! | E014 | component with no inputs (context) or without contexts/actions (controller) |
//!
//! All rules run on every declaration; the checker never stops at the first
//! error. Results do not depend on the order of top-level declarations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Deref;

use thiserror::Error;

use crate::diagnostic::Diagnostic;
use crate::model::*;

pub const E_DUPLICATE: &str = "E001";
pub const E_UNKNOWN_TYPE: &str = "E002";
pub const E_UNKNOWN_DEVICE: &str = "E003";
pub const E_UNKNOWN_SOURCE: &str = "E004";
pub const E_UNKNOWN_CONTEXT: &str = "E005";
pub const E_UNKNOWN_ACTION: &str = "E006";
pub const E_INHERITANCE_CYCLE: &str = "E007";
pub const E_CONTROLLER_SOURCE: &str = "E008";
pub const E_CONTEXT_ACTION: &str = "E009";
pub const E_MEMBER_COLLISION: &str = "E010";
pub const E_INDEX_TYPE: &str = "E011";
pub const E_DATATYPE_DUPLICATE: &str = "E012";
pub const E_CONTEXT_CYCLE: &str = "E013";
pub const E_EMPTY_COMPONENT: &str = "E014";

/// Name of the initialization hook every component may implement.
pub const INIT_HOOK: &str = "postInitialize";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CheckError {
    pub code: &'static str,
    pub subject: String,
    pub detail: String,
    pub loc: Loc,
}

impl CheckError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.code, self.loc.clone(), format!("{}: {}", self.subject, self.detail))
    }
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_diagnostic())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LookupError {
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ComponentKind {
    Context,
    Controller,
}

pub enum Datatype<'a> {
    Struct(&'a StructDecl),
    Enum(&'a EnumDecl),
}

/// A member together with the device that declares it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Member<T> {
    pub owner: String,
    pub decl: T,
}

impl<T> Deref for Member<T> {
    type Target = T;
    fn deref(&self) -> &T {
        &self.decl
    }
}

/// Inheritance-closed members of a device, ancestor-first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EffectiveMembers {
    pub attributes: Vec<Member<Typed>>,
    pub sources: Vec<Member<SourceDecl>>,
    pub action_refs: Vec<Member<Name>>,
}

impl EffectiveMembers {
    pub fn attribute(&self, name: &str) -> Option<&Member<Typed>> {
        self.attributes.iter().find(|a| a.name.text == name)
    }

    pub fn source(&self, name: &str) -> Option<&Member<SourceDecl>> {
        self.sources.iter().find(|s| s.name.text == name)
    }

    pub fn has_action(&self, name: &str) -> bool {
        self.action_refs.iter().any(|a| a.text == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlowNode {
    EntitySource { device: String, source: String },
    Context(String),
    Controller(String),
    EntityAction { device: String, action: String },
}

impl fmt::Display for FlowNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowNode::EntitySource { device, source } => write!(f, "{device}.{source}"),
            FlowNode::Context(c) | FlowNode::Controller(c) => f.write_str(c),
            FlowNode::EntityAction { device, action } => write!(f, "{device}!{action}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowEdge {
    pub from: FlowNode,
    pub to: FlowNode,
}

/// What a component's logic must implement for one input, or its init hook.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandlerDescriptor {
    pub name: String,
    pub kind: HandlerKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HandlerKind {
    Init,
    Source {
        device: String,
        source: String,
        value_type: TypeRef,
        indices: Vec<(String, TypeRef)>,
    },
    Context {
        context: String,
        value_type: TypeRef,
        indices: Vec<(String, TypeRef)>,
    },
}

impl HandlerDescriptor {
    pub fn value_type(&self) -> Option<&TypeRef> {
        match &self.kind {
            HandlerKind::Init => None,
            HandlerKind::Source { value_type, .. } | HandlerKind::Context { value_type, .. } => Some(value_type),
        }
    }

    pub fn indices(&self) -> &[(String, TypeRef)] {
        match &self.kind {
            HandlerKind::Init => &[],
            HandlerKind::Source { indices, .. } | HandlerKind::Context { indices, .. } => indices,
        }
    }
}

/// `onNew` + capitalized input name.
pub fn handler_name(input: &str) -> String {
    format!("onNew{}", capitalize(input))
}

fn indices_of(items: &[Typed]) -> Vec<(String, TypeRef)> {
    items.iter().map(|t| (t.name.text.clone(), t.ty.clone())).collect()
}

/// A model that passed every check. Immutable; cheap to share behind an `Arc`.
#[derive(Clone, Debug)]
pub struct CheckedSpec {
    model: SpecModel,
    devices: BTreeMap<String, DeviceDecl>,
    device_order: Vec<String>,
    actions: BTreeMap<String, ActionDecl>,
    structures: BTreeMap<String, StructDecl>,
    enumerations: BTreeMap<String, EnumDecl>,
    contexts: BTreeMap<String, ContextDecl>,
    controllers: BTreeMap<String, ControllerDecl>,
    components: Vec<(ComponentKind, String)>,
    effective: BTreeMap<String, EffectiveMembers>,
    extended: BTreeSet<String>,
    edges: Vec<FlowEdge>,
}

impl CheckedSpec {
    pub fn model(&self) -> &SpecModel {
        &self.model
    }

    /// Devices in declaration order.
    pub fn devices(&self) -> impl Iterator<Item = &DeviceDecl> {
        self.device_order.iter().map(move |n| &self.devices[n])
    }

    pub fn device(&self, name: &str) -> Option<&DeviceDecl> {
        self.devices.get(name)
    }

    /// A device is abstract when at least one other device extends it.
    pub fn is_abstract(&self, device: &str) -> bool {
        self.extended.contains(device)
    }

    pub fn concrete_devices(&self) -> impl Iterator<Item = &DeviceDecl> {
        self.devices().filter(move |d| !self.is_abstract(&d.name.text))
    }

    pub fn action(&self, name: &str) -> Option<&ActionDecl> {
        self.actions.get(name)
    }

    pub fn actions(&self) -> impl Iterator<Item = &ActionDecl> {
        self.model.declarations.iter().filter_map(|d| match d {
            Decl::Action(a) => Some(a),
            _ => None,
        })
    }

    pub fn datatype(&self, name: &str) -> Option<Datatype<'_>> {
        if let Some(s) = self.structures.get(name) {
            return Some(Datatype::Struct(s));
        }
        self.enumerations.get(name).map(Datatype::Enum)
    }

    pub fn context(&self, name: &str) -> Option<&ContextDecl> {
        self.contexts.get(name)
    }

    pub fn controller(&self, name: &str) -> Option<&ControllerDecl> {
        self.controllers.get(name)
    }

    /// Contexts in declaration order.
    pub fn contexts(&self) -> impl Iterator<Item = &ContextDecl> {
        self.model.contexts()
    }

    /// Controllers in declaration order.
    pub fn controllers(&self) -> impl Iterator<Item = &ControllerDecl> {
        self.model.controllers()
    }

    /// Contexts and controllers interleaved in declaration order.
    pub fn components(&self) -> &[(ComponentKind, String)] {
        &self.components
    }

    pub fn component_kind(&self, name: &str) -> Option<ComponentKind> {
        if self.contexts.contains_key(name) {
            Some(ComponentKind::Context)
        } else if self.controllers.contains_key(name) {
            Some(ComponentKind::Controller)
        } else {
            None
        }
    }

    pub fn effective_members(&self, device: &str) -> Result<&EffectiveMembers, LookupError> {
        self.effective
            .get(device)
            .ok_or_else(|| LookupError::UnknownDevice(device.to_string()))
    }

    /// The device's ancestors, nearest first.
    pub fn ancestors(&self, device: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self.devices.get(device).and_then(|d| d.parent.as_ref());
        while let Some(p) = cur {
            out.push(p.text.as_str());
            cur = self.devices.get(&p.text).and_then(|d| d.parent.as_ref());
        }
        out
    }

    /// Reflexive: every device is a subclass of itself.
    pub fn is_subclass(&self, device: &str, ancestor: &str) -> bool {
        device == ancestor && self.devices.contains_key(device) || self.ancestors(device).contains(&ancestor)
    }

    /// One edge per bound source, per context reference, and per controller
    /// action use, in declaration order.
    pub fn flow_edges(&self) -> &[FlowEdge] {
        &self.edges
    }

    /// Components that declare `context` as an input, in declaration order.
    pub fn consumers(&self, context: &str) -> Vec<(ComponentKind, &str)> {
        self.components
            .iter()
            .filter(|(kind, name)| match kind {
                ComponentKind::Context => self.contexts[name].inputs.iter().any(|i| {
                    matches!(i, InputBinding::ContextRef { context: c } if c.text == context)
                }),
                ComponentKind::Controller => self.controllers[name].context_inputs.iter().any(|c| c.text == context),
            })
            .map(|(kind, name)| (*kind, name.as_str()))
            .collect()
    }

    /// Whether `component` declares `source from device_class` (or from an
    /// ancestor of `device_class`).
    pub fn binds_source(&self, component: &str, device_class: &str, source: &str) -> bool {
        self.contexts.get(component).is_some_and(|c| {
            c.inputs.iter().any(|i| match i {
                InputBinding::EntitySources { sources, device } => {
                    sources.iter().any(|s| s.text == source) && self.is_subclass(device_class, &device.text)
                }
                InputBinding::ContextRef { .. } => false,
            })
        })
    }

    /// Whether `controller` declares `action on device_class` (or on an
    /// ancestor of `device_class`).
    pub fn uses_action(&self, controller: &str, device_class: &str, action: &str) -> bool {
        self.controllers.get(controller).is_some_and(|c| {
            c.action_uses
                .iter()
                .any(|u| u.action.text == action && self.is_subclass(device_class, &u.device.text))
        })
    }

    /// The handlers a component's logic must provide: one per input (per
    /// source name for multi-source bindings) followed by the init hook.
    pub fn conformance_signature(&self, component: &str) -> Result<Vec<HandlerDescriptor>, LookupError> {
        let mut out = Vec::new();
        match self.component_kind(component) {
            Some(ComponentKind::Context) => {
                for input in &self.contexts[component].inputs {
                    match input {
                        InputBinding::EntitySources { sources, device } => {
                            let members = &self.effective[&device.text];
                            for s in sources {
                                let decl = members.source(&s.text).expect("checked source");
                                out.push(HandlerDescriptor {
                                    name: handler_name(&s.text),
                                    kind: HandlerKind::Source {
                                        device: device.text.clone(),
                                        source: s.text.clone(),
                                        value_type: decl.value_type.clone(),
                                        indices: indices_of(&decl.indices),
                                    },
                                });
                            }
                        }
                        InputBinding::ContextRef { context } => out.push(self.context_handler(&context.text)),
                    }
                }
            }
            Some(ComponentKind::Controller) => {
                for c in &self.controllers[component].context_inputs {
                    out.push(self.context_handler(&c.text));
                }
            }
            None => return Err(LookupError::UnknownComponent(component.to_string())),
        }
        out.push(HandlerDescriptor {
            name: INIT_HOOK.to_string(),
            kind: HandlerKind::Init,
        });
        Ok(out)
    }

    fn context_handler(&self, context: &str) -> HandlerDescriptor {
        let decl = &self.contexts[context];
        HandlerDescriptor {
            name: handler_name(context),
            kind: HandlerKind::Context {
                context: context.to_string(),
                value_type: decl.output_type.clone(),
                indices: indices_of(&decl.output_indices),
            },
        }
    }

    /// A layered ordering of flow nodes: entity sources, then contexts in
    /// dependency order, then controllers, then entity actions. Every flow
    /// edge points forward in this order.
    pub fn topological_order(&self) -> Vec<FlowNode> {
        let mut out: Vec<FlowNode> = Vec::new();
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            if let FlowNode::EntitySource { .. } = e.from {
                if seen.insert(e.from.clone()) {
                    out.push(e.from.clone());
                }
            }
        }
        // Kahn over the context graph, ties broken by declaration order
        let order: Vec<&str> = self.model.contexts().map(|c| c.name.text.as_str()).collect();
        let mut placed: BTreeSet<&str> = BTreeSet::new();
        while placed.len() < order.len() {
            let next = order
                .iter()
                .find(|c| {
                    !placed.contains(*c)
                        && self.contexts[**c].inputs.iter().all(|i| match i {
                            InputBinding::ContextRef { context } => placed.contains(context.text.as_str()),
                            InputBinding::EntitySources { .. } => true,
                        })
                })
                .expect("context graph is acyclic");
            placed.insert(next);
            out.push(FlowNode::Context(next.to_string()));
        }
        for c in self.model.controllers() {
            out.push(FlowNode::Controller(c.name.text.clone()));
        }
        for e in &self.edges {
            if let FlowNode::EntityAction { .. } = e.to {
                if seen.insert(e.to.clone()) {
                    out.push(e.to.clone());
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Namespace {
    Device,
    Action,
    Datatype,
    Context,
    Controller,
}

fn namespace(decl: &Decl) -> Namespace {
    match decl {
        Decl::Device(_) => Namespace::Device,
        Decl::Action(_) => Namespace::Action,
        Decl::Structure(_) | Decl::Enumeration(_) => Namespace::Datatype,
        Decl::Context(_) => Namespace::Context,
        Decl::Controller(_) => Namespace::Controller,
    }
}

enum Lookup<'a, T> {
    Missing,
    Ambiguous,
    Found(&'a T),
}

struct Checker<'m> {
    model: &'m SpecModel,
    names: BTreeMap<(Namespace, &'m str), Vec<&'m Decl>>,
    errors: Vec<CheckError>,
    /// Effective members for unambiguous, acyclic devices.
    effective: BTreeMap<String, EffectiveMembers>,
}

/// Checks a parsed model. On failure every error found is returned, sorted by
/// location.
pub fn check(model: &SpecModel) -> Result<CheckedSpec, Vec<CheckError>> {
    let mut cx = Checker {
        model,
        names: BTreeMap::new(),
        errors: Vec::new(),
        effective: BTreeMap::new(),
    };
    cx.namespaces();
    for decl in &model.declarations {
        cx.local(decl);
    }
    cx.inheritance();
    for decl in &model.declarations {
        cx.references(decl);
    }
    cx.context_cycles();
    if cx.errors.is_empty() {
        Ok(cx.build())
    } else {
        let mut errors = cx.errors;
        errors.sort_by(|a, b| (&a.loc, a.code, &a.detail).cmp(&(&b.loc, b.code, &b.detail)));
        Err(errors)
    }
}

impl<'m> Checker<'m> {
    fn err(&mut self, code: &'static str, loc: &Loc, subject: &str, detail: impl Into<String>) {
        self.errors.push(CheckError {
            code,
            subject: subject.to_string(),
            detail: detail.into(),
            loc: loc.clone(),
        });
    }

    fn lookup<T>(&self, ns: Namespace, name: &str, pick: impl Fn(&'m Decl) -> Option<&'m T>) -> Lookup<'m, T> {
        match self.names.get(&(ns, name)).map(Vec::as_slice) {
            None | Some([]) => Lookup::Missing,
            Some([one]) => pick(one).map_or(Lookup::Missing, Lookup::Found),
            Some(_) => Lookup::Ambiguous,
        }
    }

    fn device(&self, name: &str) -> Lookup<'m, DeviceDecl> {
        self.lookup(Namespace::Device, name, |d| match d {
            Decl::Device(d) => Some(d),
            _ => None,
        })
    }

    fn exists(&self, ns: Namespace, name: &str) -> bool {
        self.names.contains_key(&(ns, name))
    }

    fn namespaces(&mut self) {
        for decl in &self.model.declarations {
            self.names
                .entry((namespace(decl), decl.name().text.as_str()))
                .or_default()
                .push(decl);
        }
        let mut dups = Vec::new();
        for ((ns, name), decls) in &self.names {
            for d in decls.iter().skip(1) {
                dups.push((d.name().loc.clone(), name.to_string(), d.keyword()));
            }
            if *ns == Namespace::Datatype && Builtin::from_name(name).is_some() {
                for d in decls {
                    dups.push((d.name().loc.clone(), name.to_string(), "builtin type"));
                }
            }
        }
        for (loc, name, kw) in dups {
            self.err(E_DUPLICATE, &loc, &name, format!("`{name}` is already declared ({kw})"));
        }
    }

    fn check_type(&mut self, ty: &TypeRef, loc: &Loc, subject: &str) {
        if let Some(n) = ty.named() {
            if !self.exists(Namespace::Datatype, n) {
                self.err(E_UNKNOWN_TYPE, loc, subject, format!("unknown type `{n}`"));
            }
        }
    }

    fn check_index(&mut self, index: &Typed, subject: &str) {
        if index.ty.is_array() {
            self.err(
                E_INDEX_TYPE,
                &index.ty_loc,
                subject,
                format!("index `{}` cannot have array type {}", index.name, index.ty),
            );
        } else {
            self.check_type(&index.ty, &index.ty_loc, subject);
        }
    }

    /// Reports names whose keys repeat. `key` maps a name to its collision key.
    fn distinct<'a>(&mut self, code: &'static str, subject: &str, what: &str, names: impl IntoIterator<Item = (String, &'a Name)>) {
        let mut seen = BTreeSet::new();
        for (key, name) in names {
            if !seen.insert(key) {
                self.err(code, &name.loc, subject, format!("duplicate {what} `{}`", name.text));
            }
        }
    }

    /// Rules that only look inside one declaration.
    fn local(&mut self, decl: &'m Decl) {
        let subject = decl.name().text.as_str();
        match decl {
            Decl::Device(d) => {
                let members = d
                    .attributes
                    .iter()
                    .map(|a| &a.name)
                    .chain(d.sources.iter().map(|s| &s.name))
                    .chain(d.action_refs.iter());
                self.distinct(E_DUPLICATE, subject, "member", members.map(|n| (capitalize(&n.text), n)));
                for a in &d.attributes {
                    self.check_type(&a.ty, &a.ty_loc, subject);
                }
                for s in &d.sources {
                    self.check_type(&s.value_type, &s.type_loc, subject);
                    self.distinct(E_DUPLICATE, subject, "index", s.indices.iter().map(|i| (i.name.text.clone(), &i.name)));
                    for i in &s.indices {
                        self.check_index(i, subject);
                    }
                }
            }
            Decl::Action(a) => {
                self.distinct(E_DUPLICATE, subject, "method", a.methods.iter().map(|m| (m.name.text.clone(), &m.name)));
                for m in &a.methods {
                    self.distinct(E_DUPLICATE, subject, "parameter", m.params.iter().map(|p| (p.name.text.clone(), &p.name)));
                    for p in &m.params {
                        self.check_type(&p.ty, &p.ty_loc, subject);
                    }
                }
            }
            Decl::Structure(s) => {
                self.distinct(E_DATATYPE_DUPLICATE, subject, "field", s.fields.iter().map(|f| (f.name.text.clone(), &f.name)));
                for f in &s.fields {
                    self.check_type(&f.ty, &f.ty_loc, subject);
                }
            }
            Decl::Enumeration(e) => {
                self.distinct(E_DATATYPE_DUPLICATE, subject, "value", e.values.iter().map(|v| (v.text.clone(), v)));
            }
            Decl::Context(c) => {
                self.check_type(&c.output_type, &c.type_loc, subject);
                for i in &c.output_indices {
                    self.check_index(i, subject);
                }
                let inputs = c.inputs.iter().flat_map(|i| match i {
                    InputBinding::EntitySources { sources, .. } => sources.iter().collect::<Vec<_>>(),
                    InputBinding::ContextRef { context } => vec![context],
                });
                self.distinct(E_DUPLICATE, subject, "input", inputs.map(|n| (handler_name(&n.text), n)));
                for u in &c.action_uses {
                    self.err(
                        E_CONTEXT_ACTION,
                        &u.action.loc,
                        subject,
                        format!("a context cannot use action `{}`; only controllers act on entities", u.action),
                    );
                }
                if c.inputs.is_empty() && c.action_uses.is_empty() {
                    self.err(E_EMPTY_COMPONENT, &c.name.loc, subject, "a context needs at least one input");
                }
            }
            Decl::Controller(c) => {
                self.distinct(E_DUPLICATE, subject, "input", c.context_inputs.iter().map(|n| (handler_name(&n.text), n)));
                self.distinct(
                    E_DUPLICATE,
                    subject,
                    "action use",
                    c.action_uses.iter().map(|u| (format!("{}@{}", u.action.text, u.device.text), &u.action)),
                );
                for (sources, _) in &c.source_inputs {
                    self.err(
                        E_CONTROLLER_SOURCE,
                        &sources[0].loc,
                        subject,
                        "a controller cannot bind entity sources; route them through a context",
                    );
                }
                if c.source_inputs.is_empty() && (c.context_inputs.is_empty() || c.action_uses.is_empty()) {
                    self.err(
                        E_EMPTY_COMPONENT,
                        &c.name.loc,
                        subject,
                        "a controller needs at least one context and one action",
                    );
                }
            }
        }
    }

    /// The ancestor chain of `parent`, root first, or `None` when the chain
    /// runs into a cycle. Unknown or ambiguous ancestors end the chain.
    fn chain_from(&self, parent: Option<&'m Name>, start: &str) -> Option<Vec<&'m DeviceDecl>> {
        let mut chain = Vec::new();
        let mut visited = BTreeSet::from([start.to_string()]);
        let mut cur = parent;
        while let Some(p) = cur {
            if !visited.insert(p.text.clone()) {
                return None;
            }
            match self.device(&p.text) {
                Lookup::Found(d) => {
                    chain.push(d);
                    cur = d.parent.as_ref();
                }
                _ => break,
            }
        }
        chain.reverse();
        Some(chain)
    }

    fn inheritance(&mut self) {
        let devices: Vec<&'m DeviceDecl> = self.model.devices().collect();
        for d in &devices {
            if let Some(p) = &d.parent {
                if matches!(self.device(&p.text), Lookup::Missing) {
                    self.err(E_UNKNOWN_DEVICE, &p.loc, &d.name.text, format!("unknown device `{p}` in `extends`"));
                }
            }
            for a in &d.action_refs {
                if !self.exists(Namespace::Action, &a.text) {
                    self.err(E_UNKNOWN_ACTION, &a.loc, &d.name.text, format!("undeclared action `{a}`"));
                }
            }
        }
        // cycles: a device is on a cycle when its parent chain returns to it
        let mut on_cycle = BTreeSet::new();
        for d in &devices {
            let name = d.name.text.as_str();
            if !matches!(self.device(name), Lookup::Found(_)) || on_cycle.contains(name) {
                continue;
            }
            let mut cur = d.parent.as_ref();
            let mut steps = 0;
            while let Some(p) = cur {
                if p.text == name {
                    on_cycle.insert(name);
                    break;
                }
                steps += 1;
                if steps > devices.len() {
                    break;
                }
                cur = match self.device(&p.text) {
                    Lookup::Found(pd) => pd.parent.as_ref(),
                    _ => None,
                };
            }
        }
        for d in &devices {
            if on_cycle.contains(d.name.text.as_str()) {
                let loc = d.parent.as_ref().map_or(&d.name.loc, |p| &p.loc).clone();
                self.err(E_INHERITANCE_CYCLE, &loc, &d.name.text, "device is part of an inheritance cycle");
            }
        }
        for d in &devices {
            let Some(chain) = self.chain_from(d.parent.as_ref(), &d.name.text) else {
                continue;
            };
            let mut inherited = EffectiveMembers::default();
            for anc in &chain {
                push_members(&mut inherited, anc);
            }
            let keys: BTreeSet<String> = inherited
                .attributes
                .iter()
                .map(|a| capitalize(&a.name.text))
                .chain(inherited.sources.iter().map(|s| capitalize(&s.name.text)))
                .chain(inherited.action_refs.iter().map(|a| capitalize(&a.text)))
                .collect();
            let own = d
                .attributes
                .iter()
                .map(|a| &a.name)
                .chain(d.sources.iter().map(|s| &s.name))
                .chain(d.action_refs.iter());
            let mut collisions = Vec::new();
            for n in own {
                if keys.contains(&capitalize(&n.text)) {
                    collisions.push(n);
                }
            }
            for n in collisions {
                self.err(
                    E_MEMBER_COLLISION,
                    &n.loc,
                    &d.name.text,
                    format!("member `{n}` is already declared by an ancestor"),
                );
            }
            if matches!(self.device(&d.name.text), Lookup::Found(_)) {
                push_members(&mut inherited, d);
                self.effective.insert(d.name.text.clone(), inherited);
            }
        }
    }

    fn references(&mut self, decl: &'m Decl) {
        let subject = decl.name().text.as_str();
        match decl {
            Decl::Context(c) => {
                for input in &c.inputs {
                    match input {
                        InputBinding::EntitySources { sources, device } => match self.device(&device.text) {
                            Lookup::Missing => {
                                self.err(E_UNKNOWN_DEVICE, &device.loc, subject, format!("unknown device `{device}`"))
                            }
                            Lookup::Ambiguous => {}
                            Lookup::Found(_) => {
                                let Some(members) = self.effective.get(&device.text) else { continue };
                                let missing: Vec<&Name> =
                                    sources.iter().filter(|s| members.source(&s.text).is_none()).collect();
                                for s in missing {
                                    self.err(
                                        E_UNKNOWN_SOURCE,
                                        &s.loc,
                                        subject,
                                        format!("device `{device}` has no source `{s}`"),
                                    );
                                }
                            }
                        },
                        InputBinding::ContextRef { context } => {
                            if !self.exists(Namespace::Context, &context.text) {
                                self.err(E_UNKNOWN_CONTEXT, &context.loc, subject, format!("unknown context `{context}`"));
                            }
                        }
                    }
                }
            }
            Decl::Controller(c) => {
                for ctx in &c.context_inputs {
                    if !self.exists(Namespace::Context, &ctx.text) {
                        self.err(E_UNKNOWN_CONTEXT, &ctx.loc, subject, format!("unknown context `{ctx}`"));
                    }
                }
                for u in &c.action_uses {
                    let device = self.device(&u.device.text);
                    if matches!(device, Lookup::Missing) {
                        self.err(E_UNKNOWN_DEVICE, &u.device.loc, subject, format!("unknown device `{}`", u.device));
                    }
                    if !self.exists(Namespace::Action, &u.action.text) {
                        self.err(E_UNKNOWN_ACTION, &u.action.loc, subject, format!("undeclared action `{}`", u.action));
                    } else if let Some(members) = self.effective.get(&u.device.text) {
                        if matches!(device, Lookup::Found(_)) && !members.has_action(&u.action.text) {
                            self.err(
                                E_UNKNOWN_ACTION,
                                &u.action.loc,
                                subject,
                                format!("device `{}` does not provide action `{}`", u.device, u.action),
                            );
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn context_cycles(&mut self) {
        let mut graph: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        let mut locs: BTreeMap<&str, &Loc> = BTreeMap::new();
        for c in self.model.contexts() {
            let name = c.name.text.as_str();
            let entry = locs.entry(name).or_insert(&c.name.loc);
            if c.name.loc < **entry {
                *entry = &c.name.loc;
            }
            let edges = graph.entry(name).or_default();
            for i in &c.inputs {
                if let InputBinding::ContextRef { context } = i {
                    edges.insert(context.text.as_str());
                }
            }
        }
        let mut cyclic = Vec::new();
        for &start in graph.keys() {
            let mut stack: Vec<&str> = graph[start].iter().copied().collect();
            let mut seen = BTreeSet::new();
            while let Some(n) = stack.pop() {
                if n == start {
                    cyclic.push(start);
                    break;
                }
                if seen.insert(n) {
                    if let Some(next) = graph.get(n) {
                        stack.extend(next.iter().copied());
                    }
                }
            }
        }
        for c in cyclic {
            let loc = locs[c].clone();
            self.err(E_CONTEXT_CYCLE, &loc, c, "context depends on itself through its inputs");
        }
    }

    fn build(self) -> CheckedSpec {
        let model = self.model.clone();
        let mut spec = CheckedSpec {
            devices: BTreeMap::new(),
            device_order: Vec::new(),
            actions: BTreeMap::new(),
            structures: BTreeMap::new(),
            enumerations: BTreeMap::new(),
            contexts: BTreeMap::new(),
            controllers: BTreeMap::new(),
            components: Vec::new(),
            effective: self.effective,
            extended: BTreeSet::new(),
            edges: Vec::new(),
            model: SpecModel::default(),
        };
        for decl in &model.declarations {
            let name = decl.name().text.clone();
            match decl {
                Decl::Device(d) => {
                    if let Some(p) = &d.parent {
                        spec.extended.insert(p.text.clone());
                    }
                    spec.device_order.push(name.clone());
                    spec.devices.insert(name, d.clone());
                }
                Decl::Action(a) => {
                    spec.actions.insert(name, a.clone());
                }
                Decl::Structure(s) => {
                    spec.structures.insert(name, s.clone());
                }
                Decl::Enumeration(e) => {
                    spec.enumerations.insert(name, e.clone());
                }
                Decl::Context(c) => {
                    spec.components.push((ComponentKind::Context, name.clone()));
                    for input in &c.inputs {
                        match input {
                            InputBinding::EntitySources { sources, device } => {
                                for s in sources {
                                    spec.edges.push(FlowEdge {
                                        from: FlowNode::EntitySource {
                                            device: device.text.clone(),
                                            source: s.text.clone(),
                                        },
                                        to: FlowNode::Context(name.clone()),
                                    });
                                }
                            }
                            InputBinding::ContextRef { context } => spec.edges.push(FlowEdge {
                                from: FlowNode::Context(context.text.clone()),
                                to: FlowNode::Context(name.clone()),
                            }),
                        }
                    }
                    spec.contexts.insert(name, c.clone());
                }
                Decl::Controller(c) => {
                    spec.components.push((ComponentKind::Controller, name.clone()));
                    for ctx in &c.context_inputs {
                        spec.edges.push(FlowEdge {
                            from: FlowNode::Context(ctx.text.clone()),
                            to: FlowNode::Controller(name.clone()),
                        });
                    }
                    for u in &c.action_uses {
                        spec.edges.push(FlowEdge {
                            from: FlowNode::Controller(name.clone()),
                            to: FlowNode::EntityAction {
                                device: u.device.text.clone(),
                                action: u.action.text.clone(),
                            },
                        });
                    }
                    spec.controllers.insert(name, c.clone());
                }
            }
        }
        spec.model = model;
        spec
    }
}

fn push_members(into: &mut EffectiveMembers, d: &DeviceDecl) {
    let owner = &d.name.text;
    for a in &d.attributes {
        if into.attribute(&a.name.text).is_none() {
            into.attributes.push(Member { owner: owner.clone(), decl: a.clone() });
        }
    }
    for s in &d.sources {
        if into.source(&s.name.text).is_none() {
            into.sources.push(Member { owner: owner.clone(), decl: s.clone() });
        }
    }
    for a in &d.action_refs {
        if !into.has_action(&a.text) {
            into.action_refs.push(Member { owner: owner.clone(), decl: a.clone() });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn codes(src: &str) -> Vec<&'static str> {
        let (m, d) = parse(&[("t", src)]);
        assert!(d.is_empty(), "{d:?}");
        match check(&m) {
            Ok(_) => vec![],
            Err(errs) => {
                let mut c: Vec<_> = errs.iter().map(|e| e.code).collect();
                c.sort();
                c
            }
        }
    }

    fn ok(src: &str) -> CheckedSpec {
        let (m, d) = parse(&[("t", src)]);
        assert!(d.is_empty(), "{d:?}");
        check(&m).unwrap_or_else(|e| panic!("{e:?}"))
    }

    const BASE: &str = r#"
        structure Area { name as String; }
        action OnOff { on(); off(); }
        action Display { display(text as String); }
        device Switchable { action OnOff; }
        device Located extends Switchable { attribute area as Area; }
        device Reader extends Located { source seen as String; }
        device Screen extends Located { action Display; }
    "#;

    #[test]
    fn effective_members_ancestor_first() {
        let s = ok(BASE);
        let m = s.effective_members("Reader").unwrap();
        let attrs: Vec<_> = m.attributes.iter().map(|a| a.name.text.as_str()).collect();
        assert_eq!(attrs, ["area"]);
        assert_eq!(m.attributes[0].owner, "Located");
        let acts: Vec<_> = m.action_refs.iter().map(|a| a.text.as_str()).collect();
        assert_eq!(acts, ["OnOff"]);
        let m = s.effective_members("Screen").unwrap();
        let acts: Vec<_> = m.action_refs.iter().map(|a| a.text.as_str()).collect();
        assert_eq!(acts, ["OnOff", "Display"]);
        assert!(s.effective_members("Nope").is_err());
    }

    #[test]
    fn empty_device_has_empty_members() {
        let s = ok("device Lonely {}");
        assert_eq!(s.effective_members("Lonely").unwrap(), &EffectiveMembers::default());
    }

    #[test]
    fn minimal_flow_has_one_edge() {
        let s = ok("device D { source x as Integer; } context C as Integer { source x from D; }");
        assert_eq!(s.flow_edges().len(), 1);
    }

    #[test]
    fn each_error_code_has_a_trigger() {
        let cases: &[(&str, &[&str])] = &[
            ("device A {} device A {}", &["E001"]),
            ("device A { attribute x as String; source x as String; }", &["E001"]),
            ("device A { attribute x as Nope; }", &["E002"]),
            ("device A extends Nope {}", &["E003"]),
            ("device D { source x as Integer; } context C as Integer { source y from D; }", &["E004"]),
            ("device D { source x as Integer; } context C as Integer { source x from D; context Ghost; }", &["E005"]),
            ("device A { action Ghost; }", &["E006"]),
            ("device A extends B {} device B extends A {}", &["E007", "E007"]),
            ("controller Bad { source badgeDetected from BadgeReader; }", &["E008"]),
            (
                "action Act { go(); } device D { source x as Integer; action Act; } context C as Integer { source x from D; action Act on D; }",
                &["E009"],
            ),
            ("device A { attribute x as String; } device B extends A { attribute x as String; }", &["E010"]),
            ("device D { source x as Integer indexed by k as String[]; }", &["E011"]),
            ("structure S { a as String; a as Integer; }", &["E012"]),
            ("enumeration E {X, Y, X}", &["E012"]),
            (
                "device D { source x as Integer; } context A as Integer { source x from D; context B; } context B as Integer { context A; }",
                &["E013", "E013"],
            ),
            ("context C as Integer { }", &["E014"]),
        ];
        for (src, expected) in cases {
            assert_eq!(codes(src), *expected, "{src}");
        }
    }

    #[test]
    fn undeclared_action_on_device_is_e006() {
        let src = format!("{BASE} context C as String {{ source seen from Reader; }} controller K {{ context C; action Display on Reader; }}");
        assert_eq!(codes(&src), ["E006"]);
    }

    #[test]
    fn collects_all_errors() {
        assert_eq!(codes("device A { attribute x as Nope; } device B extends Ghost {}"), ["E002", "E003"]);
    }

    #[test]
    fn capitalized_publisher_collision() {
        assert_eq!(codes("device A { attribute area as String; source Area as String; }"), ["E001"]);
    }

    #[test]
    fn consumers_in_declaration_order() {
        let src = r#"
            device D { source x as Integer; action A; }
            action A { go(); }
            context P as Integer { source x from D; }
            controller K { context P; action A on D; }
            context Q as Integer { context P; }
        "#;
        let s = ok(src);
        let names: Vec<_> = s.consumers("P").into_iter().map(|(_, n)| n).collect();
        assert_eq!(names, ["K", "Q"]);
    }

    #[test]
    fn signature_of_minimal_context() {
        let s = ok("device D { source x as Integer; } context C as Integer { source x from D; }");
        let sig = s.conformance_signature("C").unwrap();
        assert_eq!(sig.len(), 2);
        assert_eq!(sig[0].name, "onNewX");
        assert_eq!(sig[1].kind, HandlerKind::Init);
        assert!(s.conformance_signature("Nope").is_err());
    }

    #[test]
    fn subclass_relation() {
        let s = ok(BASE);
        assert!(s.is_subclass("Reader", "Switchable"));
        assert!(s.is_subclass("Reader", "Reader"));
        assert!(!s.is_subclass("Located", "Reader"));
        assert!(s.is_abstract("Located"));
        assert!(!s.is_abstract("Screen"));
    }
}
