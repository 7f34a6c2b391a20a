//! Random spec text.
//!
//! `valid_spec` builds layered specs that pass the checker. `loose_spec`
//! draws every name from a tiny pool, so duplicates, dangling references and
//! cycles are common; its output always parses.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::sample::{select, subsequence};

const TYPES: [&str; 7] = ["Integer", "Float", "String", "Boolean", "Kind", "Rec", "String[]"];

fn ty() -> impl Strategy<Value = String> {
    select(TYPES.to_vec()).prop_map(str::to_string)
}

fn index_clause() -> impl Strategy<Value = String> {
    prop_oneof![
        2 => Just(String::new()),
        1 => select(vec!["String", "Integer", "Kind", "Rec"]).prop_map(|t| format!(" indexed by key as {t}")),
    ]
}

#[derive(Clone, Debug)]
struct Device {
    parent: Option<usize>,
    attributes: Vec<String>,
    sources: Vec<(String, String)>,
    action: bool,
}

fn device(i: usize) -> impl Strategy<Value = Device> {
    let parent = if i == 0 {
        Just(None).boxed()
    } else {
        prop_oneof![2 => Just(None), 1 => (0..i).prop_map(Some)].boxed()
    };
    let min_sources = usize::from(i == 0);
    (
        parent,
        prop::collection::vec(ty(), 0..3),
        prop::collection::vec((ty(), index_clause()), min_sources..3),
        any::<bool>(),
    )
        .prop_map(move |(parent, attrs, sources, action)| Device {
            parent,
            attributes: attrs
                .into_iter()
                .enumerate()
                .map(|(k, t)| format!("attribute a{i}x{k} as {t};"))
                .collect(),
            sources: sources
                .into_iter()
                .enumerate()
                .map(|(k, (t, idx))| (format!("s{i}x{k}"), format!("source s{i}x{k} as {t}{idx};")))
                .collect(),
            action: action || i == 0,
        })
}

fn render_device(i: usize, d: &Device) -> String {
    let mut body: Vec<String> = d.attributes.clone();
    body.extend(d.sources.iter().map(|(_, s)| s.clone()));
    if d.action {
        body.push(format!("action Act{i};"));
    }
    let ext = d.parent.map(|p| format!(" extends Dev{p}")).unwrap_or_default();
    format!("device Dev{i}{ext} {{\n  {}\n}}", body.join("\n  "))
}

/// Declarations of a spec that passes `check`, one string per declaration.
pub fn valid_spec() -> impl Strategy<Value = Vec<String>> {
    (1usize..5)
        .prop_flat_map(|n| (0..n).map(device).collect::<Vec<_>>())
        .prop_flat_map(|devices| {
            let sources: Vec<(usize, String)> = devices
                .iter()
                .enumerate()
                .flat_map(|(i, d)| d.sources.iter().map(move |(s, _)| (i, s.clone())))
                .collect();
            let actions: Vec<usize> = (0..devices.len()).filter(|i| devices[*i].action).collect();
            let n_ctx = 1usize..5;
            (Just(devices), Just(sources), Just(actions), n_ctx)
        })
        .prop_flat_map(|(devices, sources, actions, n_ctx)| {
            let contexts: Vec<_> = (0..n_ctx)
                .map(|c| {
                    let src = subsequence(sources.clone(), if c == 0 { 1..=1 } else { 0..=sources.len().min(2) });
                    let ctx = subsequence((0..c).collect::<Vec<_>>(), 0..=c.min(2));
                    (src, ctx, ty(), index_clause())
                })
                .collect();
            let controllers = prop::collection::vec(
                (
                    subsequence((0..n_ctx).collect::<Vec<_>>(), 1..=n_ctx.min(2)),
                    subsequence(actions.clone(), 1..=actions.len().min(2)),
                ),
                1..3,
            );
            (Just(devices), contexts, controllers)
        })
        .prop_map(|(devices, contexts, controllers)| {
            let mut decls: Vec<String> = devices.iter().enumerate().map(|(i, d)| render_device(i, d)).collect();
            for i in 0..devices.len() {
                decls.push(format!("action Act{i} {{\n  go{i}(level as Integer, tag as Kind);\n  stop{i}();\n}}"));
            }
            decls.push("enumeration Kind {LOW, HIGH}".into());
            decls.push("structure Rec {\n  x as Integer;\n  y as String[];\n}".into());
            for (c, (srcs, ctxs, out, idx)) in contexts.iter().enumerate() {
                let mut inputs: Vec<String> = srcs.iter().map(|(d, s)| format!("source {s} from Dev{d};")).collect();
                inputs.extend(ctxs.iter().map(|k| format!("context Ctx{k};")));
                if inputs.is_empty() {
                    inputs.push(format!("context Ctx{};", c - 1));
                }
                decls.push(format!("context Ctx{c} as {out}{idx} {{\n  {}\n}}", inputs.join("\n  ")));
            }
            for (k, (ctxs, acts)) in controllers.iter().enumerate() {
                let mut body: Vec<String> = ctxs.iter().map(|c| format!("context Ctx{c};")).collect();
                body.extend(acts.iter().map(|a| format!("action Act{a} on Dev{a};")));
                decls.push(format!("controller Ctl{k} {{\n  {}\n}}", body.join("\n  ")));
            }
            decls
        })
}

const POOL: [&str; 4] = ["A", "B", "C", "D"];
const LOWER: [&str; 3] = ["p", "q", "r"];

fn name() -> impl Strategy<Value = String> {
    select(POOL.to_vec()).prop_map(str::to_string)
}

fn member() -> impl Strategy<Value = String> {
    select(LOWER.to_vec()).prop_map(str::to_string)
}

fn loose_type() -> impl Strategy<Value = String> {
    prop_oneof![
        ty(),
        name(),
        name().prop_map(|n| format!("{n}[]")),
    ]
}

fn loose_decl() -> impl Strategy<Value = String> {
    let dev = (
        name(),
        prop::option::of(name()),
        prop::collection::vec(
            prop_oneof![
                (member(), loose_type()).prop_map(|(m, t)| format!("attribute {m} as {t};")),
                (member(), loose_type(), prop::option::of(loose_type()))
                    .prop_map(|(m, t, i)| match i {
                        Some(i) => format!("source {m} as {t} indexed by k as {i}, j as String;"),
                        None => format!("source {m} as {t};"),
                    }),
                name().prop_map(|a| format!("action {a};")),
            ],
            0..4,
        ),
    )
        .prop_map(|(n, p, body)| {
            let ext = p.map(|p| format!(" extends {p}")).unwrap_or_default();
            format!("device {n}{ext} {{ {} }}", body.join(" "))
        });
    let action = (name(), prop::collection::vec((member(), prop::collection::vec(loose_type(), 0..3)), 0..3)).prop_map(
        |(n, methods)| {
            let ms: Vec<String> = methods
                .iter()
                .map(|(m, ps)| {
                    let ps: Vec<String> = ps.iter().enumerate().map(|(i, t)| format!("v{i} as {t}")).collect();
                    format!("{m}({});", ps.join(", "))
                })
                .collect();
            format!("action {n} {{ {} }}", ms.join(" "))
        },
    );
    let structure = (name(), prop::collection::vec((member(), loose_type()), 0..3)).prop_map(|(n, fs)| {
        let fs: Vec<String> = fs.iter().map(|(f, t)| format!("{f} as {t};")).collect();
        format!("structure {n} {{ {} }}", fs.join(" "))
    });
    let enumeration = (name(), prop::collection::vec(select(vec!["X", "Y", "Z"]), 1..4))
        .prop_map(|(n, vs)| format!("enumeration {n} {{{}}}", vs.join(", ")));
    let input = prop_oneof![
        (prop::collection::vec(member(), 1..3), name()).prop_map(|(ss, d)| format!("source {} from {d};", ss.join(", "))),
        name().prop_map(|c| format!("context {c};")),
        (name(), name()).prop_map(|(a, d)| format!("action {a} on {d};")),
    ];
    let context = (name(), loose_type(), prop::option::of(loose_type()), prop::collection::vec(input.clone(), 0..3)).prop_map(
        |(n, t, idx, ins)| {
            let idx = idx.map(|i| format!(" indexed by k as {i}")).unwrap_or_default();
            format!("context {n} as {t}{idx} {{ {} }}", ins.join(" "))
        },
    );
    let controller = (name(), prop::collection::vec(input, 0..3))
        .prop_map(|(n, ins)| format!("controller {n} {{ {} }}", ins.join(" ")));
    prop_oneof![dev, action, structure, enumeration, context, controller]
}

/// Declarations that parse but often fail the checker.
pub fn loose_spec() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(loose_decl(), 0..10)
}

pub fn join(decls: &[String]) -> String {
    decls.join("\n\n")
}
