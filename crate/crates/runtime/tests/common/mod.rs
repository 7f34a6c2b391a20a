#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use diakit_core::{check, parse, CheckedSpec};
use diakit_runtime::sim::Scenario;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/newscast").join(name)
}

pub fn spec_from(text: &str) -> Arc<CheckedSpec> {
    let (model, diags) = parse(&[("test.diaspec", text)]);
    assert!(diags.is_empty(), "{diags:?}");
    Arc::new(check(&model).unwrap_or_else(|e| panic!("{e:#?}")))
}

pub fn newscast() -> Arc<CheckedSpec> {
    let files: Vec<(String, String)> = ["taxonomy.diaspec", "architecture.diaspec"]
        .iter()
        .map(|f| (f.to_string(), std::fs::read_to_string(fixture(f)).unwrap()))
        .collect();
    let (model, diags) = parse(&files);
    assert!(diags.is_empty(), "{diags:?}");
    Arc::new(check(&model).unwrap_or_else(|e| panic!("{e:#?}")))
}

pub fn walkthrough() -> Scenario {
    Scenario::from_json_str(&std::fs::read_to_string(fixture("walkthrough.json")).unwrap()).unwrap()
}
