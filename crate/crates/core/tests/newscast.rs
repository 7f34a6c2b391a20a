use std::collections::BTreeSet;
use std::path::PathBuf;

use diakit_core::checker::{ComponentKind, FlowNode};
use diakit_core::codegen::{render_stubs, GENERATED_MARKER};
use diakit_core::{check, generate_manifest, parse, CheckedSpec};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/newscast")
}

fn sources() -> Vec<(String, String)> {
    ["taxonomy.diaspec", "architecture.diaspec"]
        .iter()
        .map(|f| {
            let p = fixture_dir().join(f);
            (p.display().to_string(), std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}

fn newscast() -> CheckedSpec {
    let (model, diags) = parse(&sources());
    assert!(diags.is_empty(), "{diags:?}");
    check(&model).unwrap_or_else(|e| panic!("{e:#?}"))
}

#[test]
fn structural_counts() {
    let spec = newscast();
    assert_eq!(spec.devices().count(), 9);
    assert_eq!(spec.concrete_devices().count(), 7);
    assert_eq!(spec.contexts().count(), 6);
    assert_eq!(spec.controllers().count(), 2);
    let used: BTreeSet<_> = spec
        .controllers()
        .flat_map(|c| c.action_uses.iter().map(|u| u.action.text.clone()))
        .collect();
    assert_eq!(used.len(), 2);
    let sources: BTreeSet<_> = spec
        .concrete_devices()
        .flat_map(|d| d.sources.iter().map(|s| s.name.text.clone()))
        .collect();
    assert_eq!(sources.len(), 6);
}

#[test]
fn flow_graph_edges() {
    let spec = newscast();
    let edges: Vec<(String, String)> = spec
        .flow_edges()
        .iter()
        .map(|e| (e.from.to_string(), e.to.to_string()))
        .collect();
    assert!(edges.contains(&("BadgeReader.badgeDetected".into(), "Proximity".into())));
    assert!(edges.contains(&("NewsSelector".into(), "VisualManager".into())));
    let order = spec.topological_order();
    let pos = |n: &FlowNode| order.iter().position(|o| o == n).unwrap();
    for e in spec.flow_edges() {
        assert!(pos(&e.from) < pos(&e.to), "{} -> {}", e.from, e.to);
    }
}

#[test]
fn generated_names_in_manifest() {
    let spec = newscast();
    let m = generate_manifest(&spec);
    let br = m.devices.iter().find(|d| d.name == "BadgeReader").unwrap();
    let publishers: Vec<_> = br.sources.iter().map(|s| s.publisher.as_str()).collect();
    assert_eq!(publishers, ["setBadgeDetected", "setBadgeDisappeared"]);
    let ctor = br.constructor();
    assert_eq!((ctor[0].name.as_str(), ctor[0].ty.as_str()), ("area", "Area"));
    let methods: Vec<_> = br.actions.iter().flat_map(|a| a.methods.iter().map(|m| m.name.as_str())).collect();
    assert_eq!(methods, ["on", "off"]);

    let px = m.contexts.iter().find(|c| c.name == "Proximity").unwrap();
    assert_eq!(px.publisher, "setProximity");
    assert_eq!(px.output_type, "UserProfile[]");
    assert_eq!(px.output_indices[0].name, "area");
    let handlers: Vec<_> = px.handlers.iter().map(|h| h.name.as_str()).collect();
    assert_eq!(handlers, ["onNewBadgeDetected", "onNewBadgeDisappeared", "onNewProfile"]);

    let vm = m.controllers.iter().find(|c| c.name == "VisualManager").unwrap();
    assert_eq!(vm.proxies[0].discovery.filter, "screensWhere");
    assert_eq!(vm.proxies[0].composite, "ScreenComposite");
    let slots: Vec<_> = vm.proxies[0].discovery.slots.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(slots, ["area", "brightness"]);
}

#[test]
fn fifteen_stubs_for_newscast() {
    let spec = newscast();
    let m = generate_manifest(&spec);
    let stubs = render_stubs(&m);
    let expected = m.devices.iter().filter(|d| !d.is_abstract).count() + m.contexts.len() + m.controllers.len();
    assert_eq!(expected, 15);
    assert_eq!(stubs.len(), expected);
    for (_, content) in &stubs {
        assert_eq!(content.lines().next(), Some(GENERATED_MARKER));
    }
}

#[test]
fn stub_handlers_match_signatures() {
    let spec = newscast();
    let m = generate_manifest(&spec);
    for (path, content) in render_stubs(&m) {
        let named: BTreeSet<String> = content
            .lines()
            .filter_map(|l| l.trim().strip_prefix("// handler: "))
            .map(|l| l[..l.find('(').unwrap()].to_string())
            .collect();
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        let component = spec
            .components()
            .iter()
            .find(|(_, n)| diakit_core::codegen::snake_case(n) == stem && !path.starts_with("devices"));
        match component {
            Some((_, name)) => {
                let sig: BTreeSet<String> = spec
                    .conformance_signature(name)
                    .unwrap()
                    .into_iter()
                    .map(|h| h.name)
                    .collect();
                assert_eq!(named, sig, "{}", path.display());
            }
            None => assert!(named.is_empty(), "{}", path.display()),
        }
    }
}

#[test]
fn consumers_of_proximity() {
    let spec = newscast();
    assert_eq!(
        spec.consumers("Proximity"),
        [(ComponentKind::Context, "LanguageSelector"), (ComponentKind::Context, "DepartmentSelector")]
    );
}
