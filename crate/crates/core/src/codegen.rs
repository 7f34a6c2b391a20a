//! Framework manifest and component stubs.
//!
//! The manifest is the normative artifact: a canonical JSON description of
//! every callback, publisher, accessor, filter, and action proxy the runtime
//! provides for a checked spec. Stubs are Rust skeletons derived from it.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::checker::{CheckedSpec, HandlerDescriptor, HandlerKind, INIT_HOOK};
use crate::json::to_canonical_string;
use crate::model::{capitalize, decapitalize, InputBinding, TypeRef, Typed};

pub const MANIFEST_FILE: &str = "framework.manifest.json";
pub const FORMAT_VERSION: u32 = 1;
pub const GENERATED_MARKER: &str = "// GENERATED BY diakit — DO NOT EDIT (regenerated)";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

impl Param {
    fn of(t: &Typed) -> Param {
        Param {
            name: t.name.text.clone(),
            ty: t.ty.to_string(),
        }
    }

    fn to_json(&self) -> Json {
        json!({"name": self.name, "type": self.ty})
    }
}

fn params_json(ps: &[Param]) -> Json {
    Json::Array(ps.iter().map(Param::to_json).collect())
}

fn signature(ps: &[Param]) -> String {
    ps.iter().map(|p| format!("{}: {}", p.name, p.ty)).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeEntry {
    pub name: String,
    pub ty: String,
    pub declared_in: String,
    pub getter: String,
    pub setter: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceEntry {
    pub name: String,
    pub value_type: String,
    pub indices: Vec<Param>,
    pub declared_in: String,
    pub publisher: String,
    pub pull_accessor: String,
    pub subscriber: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodEntry {
    pub name: String,
    pub params: Vec<Param>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionEntry {
    pub name: String,
    pub declared_in: String,
    pub methods: Vec<MethodEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeviceEntry {
    pub name: String,
    pub parent: Option<String>,
    pub is_abstract: bool,
    pub attributes: Vec<AttributeEntry>,
    pub sources: Vec<SourceEntry>,
    pub actions: Vec<ActionEntry>,
}

impl DeviceEntry {
    /// Every effective attribute needs an initial value at construction.
    pub fn constructor(&self) -> Vec<Param> {
        self.attributes
            .iter()
            .map(|a| Param {
                name: a.name.clone(),
                ty: a.ty.clone(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InputEntry {
    Source { device: String, source: String },
    Context { context: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandlerEntry {
    pub name: String,
    pub input: InputEntry,
    pub value_type: String,
    pub indices: Vec<Param>,
}

impl HandlerEntry {
    fn of(h: &HandlerDescriptor) -> Option<HandlerEntry> {
        let (input, value_type, indices) = match &h.kind {
            HandlerKind::Init => return None,
            HandlerKind::Source {
                device,
                source,
                value_type,
                indices,
            } => (
                InputEntry::Source {
                    device: device.clone(),
                    source: source.clone(),
                },
                value_type,
                indices,
            ),
            HandlerKind::Context {
                context,
                value_type,
                indices,
            } => (InputEntry::Context { context: context.clone() }, value_type, indices),
        };
        Some(HandlerEntry {
            name: h.name.clone(),
            input,
            value_type: value_type.to_string(),
            indices: indices
                .iter()
                .map(|(n, t)| Param {
                    name: n.clone(),
                    ty: t.to_string(),
                })
                .collect(),
        })
    }

    /// Parameter list as the stub presents it: the producing proxy for entity
    /// sources, then the value, then one parameter per index.
    pub fn params(&self) -> Vec<Param> {
        let mut out = Vec::new();
        if let InputEntry::Source { device, .. } = &self.input {
            out.push(Param {
                name: "proxy".into(),
                ty: format!("{device}Proxy"),
            });
        }
        out.push(Param {
            name: "value".into(),
            ty: self.value_type.clone(),
        });
        out.extend(self.indices.iter().cloned());
        out
    }
}

/// Discovery support for one device class: `all<Device>s` and the
/// `<device>sWhere` filter with one slot per effective attribute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscoveryEntry {
    pub device: String,
    pub accessor: String,
    pub filter: String,
    pub slots: Vec<Param>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PullEntry {
    pub device: String,
    pub source: String,
    pub accessor: String,
    pub indices: Vec<Param>,
    pub value_type: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextEntry {
    pub name: String,
    pub output_type: String,
    pub output_indices: Vec<Param>,
    pub publisher: String,
    pub handlers: Vec<HandlerEntry>,
    pub init_hook: String,
    pub discovery: Vec<DiscoveryEntry>,
    pub pull: Vec<PullEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProxyEntry {
    pub device: String,
    pub action: String,
    pub composite: String,
    pub methods: Vec<MethodEntry>,
    pub discovery: DiscoveryEntry,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControllerEntry {
    pub name: String,
    pub handlers: Vec<HandlerEntry>,
    pub init_hook: String,
    pub proxies: Vec<ProxyEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameworkManifest {
    pub devices: Vec<DeviceEntry>,
    pub contexts: Vec<ContextEntry>,
    pub controllers: Vec<ControllerEntry>,
}

fn discovery(spec: &CheckedSpec, device: &str) -> DiscoveryEntry {
    let slots = spec
        .effective_members(device)
        .map(|m| m.attributes.iter().map(|a| Param::of(a)).collect())
        .unwrap_or_default();
    DiscoveryEntry {
        device: device.to_string(),
        accessor: format!("all{device}s"),
        filter: format!("{}sWhere", decapitalize(device)),
        slots,
    }
}

fn methods(spec: &CheckedSpec, action: &str) -> Vec<MethodEntry> {
    spec.action(action)
        .map(|a| {
            a.methods
                .iter()
                .map(|m| MethodEntry {
                    name: m.name.text.clone(),
                    params: m.params.iter().map(Param::of).collect(),
                })
                .collect()
        })
        .unwrap_or_default()
}

fn handlers(spec: &CheckedSpec, component: &str) -> Vec<HandlerEntry> {
    spec.conformance_signature(component)
        .expect("component exists")
        .iter()
        .filter_map(HandlerEntry::of)
        .collect()
}

/// Builds the manifest. Pure: equal specs give equal manifests.
pub fn generate_manifest(spec: &CheckedSpec) -> FrameworkManifest {
    let devices = spec
        .devices()
        .map(|d| {
            let name = &d.name.text;
            let m = spec.effective_members(name).expect("checked device");
            DeviceEntry {
                name: name.clone(),
                parent: d.parent.as_ref().map(|p| p.text.clone()),
                is_abstract: spec.is_abstract(name),
                attributes: m
                    .attributes
                    .iter()
                    .map(|a| AttributeEntry {
                        name: a.name.text.clone(),
                        ty: a.ty.to_string(),
                        declared_in: a.owner.clone(),
                        getter: format!("get{}", capitalize(&a.name.text)),
                        setter: format!("set{}", capitalize(&a.name.text)),
                    })
                    .collect(),
                sources: m
                    .sources
                    .iter()
                    .map(|s| SourceEntry {
                        name: s.name.text.clone(),
                        value_type: s.value_type.to_string(),
                        indices: s.indices.iter().map(Param::of).collect(),
                        declared_in: s.owner.clone(),
                        publisher: format!("set{}", capitalize(&s.name.text)),
                        pull_accessor: format!("get{}", capitalize(&s.name.text)),
                        subscriber: format!("subscribe{}", capitalize(&s.name.text)),
                    })
                    .collect(),
                actions: m
                    .action_refs
                    .iter()
                    .map(|a| ActionEntry {
                        name: a.text.clone(),
                        declared_in: a.owner.clone(),
                        methods: methods(spec, &a.text),
                    })
                    .collect(),
            }
        })
        .collect();

    let contexts = spec
        .contexts()
        .map(|c| {
            let name = &c.name.text;
            let mut disc: Vec<DiscoveryEntry> = Vec::new();
            let mut pull = Vec::new();
            for input in &c.inputs {
                if let InputBinding::EntitySources { sources, device } = input {
                    if !disc.iter().any(|d| d.device == device.text) {
                        disc.push(discovery(spec, &device.text));
                    }
                    let m = spec.effective_members(&device.text).expect("checked device");
                    for s in sources {
                        let decl = m.source(&s.text).expect("checked source");
                        pull.push(PullEntry {
                            device: device.text.clone(),
                            source: s.text.clone(),
                            accessor: format!("get{}", capitalize(&s.text)),
                            indices: decl.indices.iter().map(Param::of).collect(),
                            value_type: decl.value_type.to_string(),
                        });
                    }
                }
            }
            ContextEntry {
                name: name.clone(),
                output_type: c.output_type.to_string(),
                output_indices: c.output_indices.iter().map(Param::of).collect(),
                publisher: format!("set{}", capitalize(name)),
                handlers: handlers(spec, name),
                init_hook: INIT_HOOK.into(),
                discovery: disc,
                pull,
            }
        })
        .collect();

    let controllers = spec
        .controllers()
        .map(|c| ControllerEntry {
            name: c.name.text.clone(),
            handlers: handlers(spec, &c.name.text),
            init_hook: INIT_HOOK.into(),
            proxies: c
                .action_uses
                .iter()
                .map(|u| ProxyEntry {
                    device: u.device.text.clone(),
                    action: u.action.text.clone(),
                    composite: format!("{}Composite", u.device.text),
                    methods: methods(spec, &u.action.text),
                    discovery: discovery(spec, &u.device.text),
                })
                .collect(),
        })
        .collect();

    FrameworkManifest {
        devices,
        contexts,
        controllers,
    }
}

fn methods_json(ms: &[MethodEntry]) -> Json {
    Json::Array(
        ms.iter()
            .map(|m| json!({"name": m.name, "params": params_json(&m.params)}))
            .collect(),
    )
}

fn discovery_json(d: &DiscoveryEntry) -> Json {
    json!({
        "device": d.device,
        "accessor": d.accessor,
        "filter": d.filter,
        "slots": params_json(&d.slots),
    })
}

fn handler_json(h: &HandlerEntry) -> Json {
    let input = match &h.input {
        InputEntry::Source { device, source } => json!({"kind": "source", "device": device, "source": source}),
        InputEntry::Context { context } => json!({"kind": "context", "context": context}),
    };
    json!({
        "name": h.name,
        "input": input,
        "valueType": h.value_type,
        "indices": params_json(&h.indices),
    })
}

impl FrameworkManifest {
    pub fn to_json(&self) -> Json {
        let devices: Vec<Json> = self
            .devices
            .iter()
            .map(|d| {
                json!({
                    "name": d.name,
                    "parent": d.parent,
                    "abstract": d.is_abstract,
                    "constructor": params_json(&d.constructor()),
                    "attributes": d.attributes.iter().map(|a| json!({
                        "name": a.name,
                        "type": a.ty,
                        "declaredIn": a.declared_in,
                        "constructorRequired": true,
                        "getter": a.getter,
                        "setter": a.setter,
                    })).collect::<Vec<_>>(),
                    "sources": d.sources.iter().map(|s| json!({
                        "name": s.name,
                        "valueType": s.value_type,
                        "indices": params_json(&s.indices),
                        "declaredIn": s.declared_in,
                        "publisher": s.publisher,
                        "pullAccessor": s.pull_accessor,
                        "subscriber": s.subscriber,
                    })).collect::<Vec<_>>(),
                    "actions": d.actions.iter().map(|a| json!({
                        "name": a.name,
                        "declaredIn": a.declared_in,
                        "methods": methods_json(&a.methods),
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        let contexts: Vec<Json> = self
            .contexts
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "outputType": c.output_type,
                    "outputIndices": params_json(&c.output_indices),
                    "publisher": c.publisher,
                    "handlers": c.handlers.iter().map(handler_json).collect::<Vec<_>>(),
                    "initHook": c.init_hook,
                    "discovery": c.discovery.iter().map(discovery_json).collect::<Vec<_>>(),
                    "pull": c.pull.iter().map(|p| json!({
                        "device": p.device,
                        "source": p.source,
                        "accessor": p.accessor,
                        "indices": params_json(&p.indices),
                        "valueType": p.value_type,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        let controllers: Vec<Json> = self
            .controllers
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "handlers": c.handlers.iter().map(handler_json).collect::<Vec<_>>(),
                    "initHook": c.init_hook,
                    "actionProxies": c.proxies.iter().map(|p| json!({
                        "device": p.device,
                        "action": p.action,
                        "composite": p.composite,
                        "methods": methods_json(&p.methods),
                        "discovery": discovery_json(&p.discovery),
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "formatVersion": FORMAT_VERSION,
            "devices": devices,
            "contexts": contexts,
            "controllers": controllers,
        })
    }

    /// Canonical serialized form, terminated by a single newline.
    pub fn to_canonical_string(&self) -> String {
        let mut s = to_canonical_string(&self.to_json());
        s.push('\n');
        s
    }
}

#[derive(Debug, Error)]
pub enum StubError {
    #[error("refusing to overwrite {0}: file exists without the generated-file marker")]
    NotGenerated(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

pub fn snake_case(name: &str) -> String {
    let mut out = String::new();
    let chars: Vec<char> = name.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_uppercase() {
            let prev_lower = i > 0 && (chars[i - 1].is_lowercase() || chars[i - 1].is_ascii_digit());
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if i > 0 && (prev_lower || next_lower && chars[i - 1].is_uppercase()) {
                out.push('_');
            }
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

/// Relative path and content of every stub for `manifest`. Devices extended
/// by another device are abstract and get no stub.
pub fn render_stubs(manifest: &FrameworkManifest) -> Vec<(PathBuf, String)> {
    let mut out = Vec::new();
    for d in manifest.devices.iter().filter(|d| !d.is_abstract) {
        out.push((Path::new("devices").join(format!("{}.rs", snake_case(&d.name))), device_stub(d)));
    }
    for c in &manifest.contexts {
        out.push((Path::new("contexts").join(format!("{}.rs", snake_case(&c.name))), context_stub(c)));
    }
    for c in &manifest.controllers {
        out.push((
            Path::new("controllers").join(format!("{}.rs", snake_case(&c.name))),
            controller_stub(c),
        ));
    }
    out
}

/// Writes stubs under `out_dir`, returning the written paths. Existing files
/// are overwritten only when they carry the generated-file marker; otherwise
/// nothing is written and the offending file is named in the error.
pub fn generate_stubs(manifest: &FrameworkManifest, out_dir: &Path) -> Result<Vec<PathBuf>, StubError> {
    let stubs = render_stubs(manifest);
    for (rel, _) in &stubs {
        let path = out_dir.join(rel);
        match fs::read_to_string(&path) {
            Ok(existing) => {
                if existing.lines().next() != Some(GENERATED_MARKER) {
                    return Err(StubError::NotGenerated(path));
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(_) if path.exists() => return Err(StubError::NotGenerated(path)),
            Err(source) => return Err(StubError::Io { path, source }),
        }
    }
    let mut written = Vec::new();
    for (rel, content) in stubs {
        let path = out_dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| StubError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, content).map_err(|source| StubError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}

fn rust_type(ty: &str) -> String {
    match TypeRef::from_ident(ty.trim_end_matches("[]")) {
        _ if ty.ends_with("[]") => format!("Vec<{}>", rust_type(&ty[..ty.len() - 2])),
        TypeRef::Builtin(b) => match b.name() {
            "String" => "String".into(),
            "Integer" => "i64".into(),
            "Float" => "f64".into(),
            _ => "bool".into(),
        },
        _ => ty.to_string(),
    }
}

fn device_stub(d: &DeviceEntry) -> String {
    let mut s = format!("{GENERATED_MARKER}\n");
    match &d.parent {
        Some(p) => s.push_str(&format!("//! Entity implementation for `{}` (extends `{p}`).\n", d.name)),
        None => s.push_str(&format!("//! Entity implementation for `{}`.\n", d.name)),
    }
    s.push_str(&format!("//\n// constructor: {}({})\n", d.name, signature(&d.constructor())));
    for src in &d.sources {
        let mut ps = vec![Param {
            name: "value".into(),
            ty: src.value_type.clone(),
        }];
        ps.extend(src.indices.iter().cloned());
        s.push_str(&format!("// publisher: {}({})\n", src.publisher, signature(&ps)));
    }
    for a in &d.actions {
        for m in &a.methods {
            s.push_str(&format!("// method: {}({})  [{}]\n", m.name, signature(&m.params), a.name));
        }
    }
    s.push_str("\nuse diakit_core::Value;\nuse diakit_runtime::{BehaviorError, EntityBehavior};\n\n");
    s.push_str(&format!("#[derive(Default)]\npub struct {};\n\n", d.name));
    s.push_str(&format!("impl EntityBehavior for {} {{\n", d.name));
    s.push_str("    fn pull(&mut self, source: &str, indices: &[Value]) -> Result<Value, BehaviorError> {\n");
    s.push_str("        match source {\n");
    for src in &d.sources {
        s.push_str(&format!(
            "            // TODO: answer {}({}) -> {}\n",
            src.pull_accessor,
            signature(&src.indices),
            src.value_type
        ));
        s.push_str(&format!("            \"{}\" => todo!(\"{}\"),\n", src.name, src.pull_accessor));
    }
    s.push_str("            _ => Err(BehaviorError::no_pull(source, indices)),\n        }\n    }\n\n");
    s.push_str("    fn command(&mut self, action: &str, method: &str, args: &[Value]) -> Result<(), BehaviorError> {\n");
    s.push_str("        match (action, method) {\n");
    for a in &d.actions {
        for m in &a.methods {
            s.push_str(&format!("            // TODO: carry out {}({})\n", m.name, signature(&m.params)));
            s.push_str(&format!("            (\"{}\", \"{}\") => todo!(),\n", a.name, m.name));
        }
    }
    s.push_str("            _ => Err(BehaviorError::unknown_method(action, method, args)),\n        }\n    }\n}\n");
    s
}

fn handler_lines(s: &mut String, handlers: &[HandlerEntry], init_hook: &str) {
    s.push_str(&format!("        // handler: {init_hook}(ctx)\n"));
    s.push_str("        .init(|_state, _ctx| {\n            // TODO: discover and subscribe\n            Ok(())\n        })\n");
    for h in handlers {
        s.push_str(&format!("        // handler: {}({})\n", h.name, signature(&h.params())));
        s.push_str(&format!(
            "        .on(\"{}\", |_state, _ctx, delivery| {{\n            // TODO: value: {} = delivery.value\n            let _ = delivery;\n            Ok(())\n        }})\n",
            h.name,
            rust_type(&h.value_type)
        ));
    }
}

fn context_stub(c: &ContextEntry) -> String {
    let mut s = format!("{GENERATED_MARKER}\n");
    s.push_str(&format!(
        "//! Context `{}` producing `{}`{}.\n//\n",
        c.name,
        c.output_type,
        if c.output_indices.is_empty() {
            String::new()
        } else {
            format!(" indexed by {}", signature(&c.output_indices))
        }
    ));
    let mut publish = vec![Param {
        name: "value".into(),
        ty: c.output_type.clone(),
    }];
    publish.extend(c.output_indices.iter().cloned());
    s.push_str(&format!("// publisher: {}({})\n", c.publisher, signature(&publish)));
    for d in &c.discovery {
        s.push_str(&format!("// discovery: {}() / {}()\n", d.accessor, d.filter));
    }
    for p in &c.pull {
        s.push_str(&format!("// pull: {}.{}({}) -> {}\n", p.device, p.accessor, signature(&p.indices), p.value_type));
    }
    component_body(&mut s, &c.name, &c.handlers, &c.init_hook);
    s
}

fn controller_stub(c: &ControllerEntry) -> String {
    let mut s = format!("{GENERATED_MARKER}\n");
    s.push_str(&format!("//! Controller `{}`.\n//\n", c.name));
    for p in &c.proxies {
        for m in &p.methods {
            s.push_str(&format!("// action: {}.{}({})\n", p.composite, m.name, signature(&m.params)));
        }
        s.push_str(&format!("// discovery: {}() / {}()\n", p.discovery.accessor, p.discovery.filter));
    }
    component_body(&mut s, &c.name, &c.handlers, &c.init_hook);
    s
}

fn component_body(s: &mut String, name: &str, handlers: &[HandlerEntry], init_hook: &str) {
    s.push_str("\nuse diakit_runtime::Handlers;\n\n");
    s.push_str(&format!("#[derive(Default)]\npub struct {name}State;\n\n"));
    s.push_str(&format!(
        "pub fn {}() -> Handlers<{name}State> {{\n    Handlers::new({name}State)\n",
        snake_case(name)
    ));
    handler_lines(s, handlers, init_hook);
    s.push_str("}\n");
}
