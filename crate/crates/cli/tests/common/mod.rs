#![allow(dead_code)]

use std::ffi::OsStr;
use std::path::PathBuf;
use std::process::{Command, Output};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/newscast").join(name)
}

pub fn spec_files() -> Vec<PathBuf> {
    vec![fixture("taxonomy.diaspec"), fixture("architecture.diaspec")]
}

pub fn diakit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diakit"))
}

/// `diakit <sub> <fixture spec files> <rest...>`
pub fn on_fixture<S: AsRef<OsStr>>(sub: &str, rest: impl IntoIterator<Item = S>) -> Output {
    diakit().arg(sub).args(spec_files()).args(rest).output().expect("diakit runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}
