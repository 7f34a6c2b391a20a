//! Randomized discovery trials checked against a brute-force evaluator that
//! shares no code with the runtime's filter implementation.

use std::collections::BTreeMap;
use std::sync::Arc;

use diakit_core::{check, parse, FilterExpr, Predicate, Value};
use diakit_runtime::{Runtime, TableBehavior};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

const SPEC: &str = r#"
device Base {
  attribute n as Integer;
  attribute x as Float;
  attribute s as String;
  attribute f as Boolean;
}
device Left extends Base {
  attribute k as Integer;
}
device Right extends Base {
  attribute t as String;
}
device Plain extends Base {
}
"#;

const CONCRETE: [&str; 3] = ["Left", "Plain", "Right"];
const QUERIED: [&str; 4] = ["Base", "Left", "Plain", "Right"];

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Int,
    Float,
    Str,
    Bool,
}

fn attributes(class: &str) -> Vec<(&'static str, Kind)> {
    let mut v = vec![("n", Kind::Int), ("x", Kind::Float), ("s", Kind::Str), ("f", Kind::Bool)];
    match class {
        "Left" => v.push(("k", Kind::Int)),
        "Right" => v.push(("t", Kind::Str)),
        _ => {}
    }
    v
}

fn literal(kind: Kind) -> BoxedStrategy<Value> {
    match kind {
        Kind::Int => (-5i64..=5).prop_map(Value::Integer).boxed(),
        Kind::Float => (-6i32..=6).prop_map(|i| Value::Float(i as f64 / 2.0)).boxed(),
        Kind::Str => prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(Value::string).boxed(),
        Kind::Bool => any::<bool>().prop_map(Value::Boolean).boxed(),
    }
}

/// Predicates of nesting depth at most `depth` (a leaf has depth 1).
fn predicate(kind: Kind, depth: u32) -> BoxedStrategy<Predicate> {
    let numeric = matches!(kind, Kind::Int | Kind::Float);
    let lit = literal(kind);
    let leaf = if numeric {
        (0..6u8, lit)
            .prop_map(|(op, v)| match op {
                0 => Predicate::Eq(v),
                1 => Predicate::Ne(v),
                2 => Predicate::Lt(v),
                3 => Predicate::Le(v),
                4 => Predicate::Gt(v),
                _ => Predicate::Ge(v),
            })
            .boxed()
    } else {
        (any::<bool>(), lit)
            .prop_map(|(eq, v)| if eq { Predicate::Eq(v) } else { Predicate::Ne(v) })
            .boxed()
    };
    if depth <= 1 {
        return leaf;
    }
    let sub = predicate(kind, depth - 1);
    prop_oneof![
        2 => leaf,
        1 => (sub.clone(), sub.clone()).prop_map(|(a, b)| Predicate::or(a, b)),
        1 => (sub.clone(), sub.clone()).prop_map(|(a, b)| Predicate::and(a, b)),
        1 => sub.prop_map(|p| !p),
    ]
    .boxed()
}

#[derive(Clone, Debug)]
pub struct Trial {
    entities: Vec<(String, &'static str, BTreeMap<String, Value>, bool)>,
    class: &'static str,
    clauses: Vec<(String, Predicate)>,
}

fn entity() -> impl Strategy<Value = (&'static str, BTreeMap<String, Value>, bool)> {
    prop::sample::select(CONCRETE.to_vec()).prop_flat_map(|class| {
        let attrs: Vec<_> = attributes(class)
            .into_iter()
            .map(|(name, kind)| literal(kind).prop_map(move |v| (name.to_string(), v)))
            .collect();
        (Just(class), attrs, prop::bool::weighted(0.9))
            .prop_map(|(c, a, online)| (c, a.into_iter().collect(), online))
    })
}

fn trial() -> impl Strategy<Value = Trial> {
    let entities = prop::collection::vec(entity(), 0..=100);
    let query = prop::sample::select(QUERIED.to_vec()).prop_flat_map(|class| {
        let per_attr: Vec<_> = attributes(class)
            .into_iter()
            .map(|(name, kind)| prop::option::weighted(0.4, predicate(kind, 3).prop_map(move |p| (name.to_string(), p))))
            .collect();
        let clauses = per_attr
            .prop_map(|cs| cs.into_iter().flatten().collect::<Vec<_>>())
            .prop_shuffle();
        (Just(class), clauses)
    });
    (entities, query).prop_map(|(es, (class, clauses))| Trial {
        entities: es
            .into_iter()
            .enumerate()
            .map(|(i, (c, a, online))| (format!("e{i:03}"), c, a, online))
            .collect(),
        class,
        clauses,
    })
}

fn num(v: &Value) -> f64 {
    match v {
        Value::Integer(i) => *i as f64,
        Value::Float(x) => *x,
        _ => f64::NAN,
    }
}

fn holds(p: &Predicate, actual: &Value) -> bool {
    match p {
        Predicate::Eq(v) => actual == v,
        Predicate::Ne(v) => actual != v,
        Predicate::Lt(v) => num(actual) < num(v),
        Predicate::Le(v) => num(actual) <= num(v),
        Predicate::Gt(v) => num(actual) > num(v),
        Predicate::Ge(v) => num(actual) >= num(v),
        Predicate::Or(a, b) => holds(a, actual) || holds(b, actual),
        Predicate::And(a, b) => holds(a, actual) && holds(b, actual),
        Predicate::Not(a) => !holds(a, actual),
    }
}

fn is_a(class: &str, query: &str) -> bool {
    query == "Base" || class == query
}

/// Ids the query must return, by direct evaluation.
fn expected(t: &Trial) -> Vec<String> {
    t.entities
        .iter()
        .filter(|(_, class, attrs, online)| {
            *online && is_a(class, t.class) && t.clauses.iter().all(|(a, p)| holds(p, &attrs[a]))
        })
        .map(|(id, ..)| id.clone())
        .collect()
}

fn run_trial(spec: &Arc<diakit_core::CheckedSpec>, t: &Trial) -> Result<(), TestCaseError> {
    let mut rt = Runtime::new(Arc::clone(spec));
    for (id, class, attrs, online) in &t.entities {
        rt.register_entity(class, id, attrs.clone(), Box::new(TableBehavior::new()))
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        if !online {
            rt.unregister_entity(id).map_err(|e| TestCaseError::fail(e.to_string()))?;
        }
    }
    let mut filter = FilterExpr::all();
    for (a, p) in &t.clauses {
        filter = filter.with(a.clone(), p.clone()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    }
    let got = rt
        .discover(t.class, &filter)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&got.class, t.class);
    prop_assert_eq!(got.ids, expected(t));
    Ok(())
}

pub fn spec() -> Arc<diakit_core::CheckedSpec> {
    let (model, diags) = parse(&[("oracle.diaspec", SPEC)]);
    assert!(diags.is_empty(), "{diags:?}");
    Arc::new(check(&model).expect("oracle spec checks"))
}

/// Runs `cases` trials from a fixed seed. Returns the number of trials run.
pub fn run_trials(cases: u32) -> Result<u32, String> {
    let spec = spec();
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]);
    let mut runner = TestRunner::new_with_rng(config, rng);
    let count = std::cell::Cell::new(0u32);
    runner
        .run(&trial(), |t| {
            count.set(count.get() + 1);
            run_trial(&spec, &t)
        })
        .map_err(|e| e.to_string())?;
    Ok(count.get())
}
