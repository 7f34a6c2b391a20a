//! Reference logic for the Newscast application in `fixtures/newscast`.
//!
//! Proximity keeps the badge holders present in each area. The selectors
//! reduce that list to a language or department, publishing only on change.
//! NewsSelector and ScheduleSelector pick the matching item; the managers
//! turn results into `display` and `play` commands.

use std::collections::BTreeMap;

use diakit_core::model::TypeRef;
use diakit_core::{FilterExpr, Predicate, Value};

use crate::error::RuntimeError;
use crate::logic::{ComponentCtx, Delivery, HandlerResult, Handlers, LogicSet};

fn key(v: &Value) -> String {
    v.to_json().to_string()
}

fn area_of(d: &Delivery) -> Result<Value, RuntimeError> {
    d.index("area")
        .cloned()
        .ok_or_else(|| RuntimeError::logic(format!("`{}` delivered without an area", d.handler)))
}

fn reader_area(d: &Delivery) -> Result<Value, RuntimeError> {
    d.producer
        .entity()
        .and_then(|e| e.attribute("area"))
        .cloned()
        .ok_or_else(|| RuntimeError::logic("badge event from an entity without an area"))
}

fn subscribe_all(ctx: &mut ComponentCtx<'_>, class: &str, source: &str) -> HandlerResult {
    let all = ctx.discover_all(class)?;
    ctx.subscribe(&all, source)
}

/// Pulls from the entity with the smallest id of `class`; `None` when there
/// is none or it has nothing to give.
fn pull_any(ctx: &mut ComponentCtx<'_>, class: &str, source: &str, indices: Vec<Value>) -> Result<Option<Value>, RuntimeError> {
    let all = ctx.discover_all(class)?;
    if all.is_empty() {
        return Ok(None);
    }
    let id = ctx.any_one(&all)?;
    match ctx.pull(&id, source, indices) {
        Ok(v) => Ok(Some(v)),
        Err(RuntimeError::Behavior { .. }) | Err(RuntimeError::NoPullHandler { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Default)]
struct Presence {
    /// Area key to (area, badge holders in arrival order).
    areas: BTreeMap<String, (Value, Vec<(String, Value)>)>,
}

impl Presence {
    fn publish(&self, ctx: &mut ComponentCtx<'_>, k: &str) -> HandlerResult {
        let (area, people) = &self.areas[k];
        let list = Value::Array {
            element: TypeRef::Named("UserProfile".into()),
            items: people.iter().map(|(_, p)| p.clone()).collect(),
        };
        ctx.publish(list, vec![area.clone()])
    }
}

fn proximity() -> Handlers<Presence> {
    Handlers::new(Presence::default())
        .init(|_, ctx| {
            subscribe_all(ctx, "BadgeReader", "badgeDetected")?;
            subscribe_all(ctx, "BadgeReader", "badgeDisappeared")
        })
        .on("onNewBadgeDetected", |s, ctx, d| {
            let badge = d.value.as_str().unwrap_or_default().to_string();
            let area = reader_area(d)?;
            let Some(profile) = pull_any(ctx, "ProfileDB", "profile", vec![Value::string(badge.clone())])? else {
                return Ok(());
            };
            let k = key(&area);
            let entry = s.areas.entry(k.clone()).or_insert_with(|| (area, Vec::new()));
            if entry.1.iter().any(|(b, _)| *b == badge) {
                return Ok(());
            }
            entry.1.push((badge, profile));
            s.publish(ctx, &k)
        })
        .on("onNewBadgeDisappeared", |s, ctx, d| {
            let badge = d.value.as_str().unwrap_or_default();
            let k = key(&reader_area(d)?);
            let Some(entry) = s.areas.get_mut(&k) else {
                return Ok(());
            };
            let before = entry.1.len();
            entry.1.retain(|(b, _)| b != badge);
            if entry.1.len() == before {
                return Ok(());
            }
            s.publish(ctx, &k)
        })
        .on("onNewProfile", |_, _, _| Ok(()))
}

/// Most frequent `field` among the profiles; ties go to the smallest name.
fn dominant(profiles: &Value, field: &str) -> Option<Value> {
    let mut counts: BTreeMap<String, (usize, Value)> = BTreeMap::new();
    for p in profiles.items()? {
        if let Some(v) = p.field(field) {
            let name = v.as_str().unwrap_or_default().to_string();
            counts.entry(name).or_insert((0, v.clone())).0 += 1;
        }
    }
    let mut best: Option<(usize, Value)> = None;
    for (_, (n, v)) in counts {
        if best.as_ref().is_none_or(|(m, _)| n > *m) {
            best = Some((n, v));
        }
    }
    best.map(|(_, v)| v)
}

fn selector(field: &'static str) -> Handlers<BTreeMap<String, Value>> {
    Handlers::new(BTreeMap::new()).on("onNewProximity", move |last, ctx, d| {
        let area = area_of(d)?;
        let Some(choice) = dominant(&d.value, field) else {
            return Ok(());
        };
        let k = key(&area);
        if last.get(&k) == Some(&choice) {
            return Ok(());
        }
        last.insert(k, choice.clone());
        ctx.publish(choice, vec![area])
    })
}

#[derive(Default)]
struct NewsState {
    /// Pushed news by topic.
    cache: BTreeMap<String, Value>,
    /// Area key to (area, current language).
    languages: BTreeMap<String, (Value, Value)>,
}

fn topics(ctx: &ComponentCtx<'_>) -> Vec<String> {
    match ctx.spec().datatype("Topic") {
        Some(diakit_core::checker::Datatype::Enum(e)) => e.values.iter().map(|v| v.text.clone()).collect(),
        _ => Vec::new(),
    }
}

fn news_selector() -> Handlers<NewsState> {
    Handlers::new(NewsState::default())
        .init(|_, ctx| subscribe_all(ctx, "NewsProvider", "news"))
        .on("onNewLanguageSelector", |s, ctx, d| {
            let area = area_of(d)?;
            s.languages.insert(key(&area), (area.clone(), d.value.clone()));
            let candidates: Vec<Value> = if s.cache.is_empty() {
                let mut pulled = Vec::new();
                for topic in topics(ctx) {
                    if let Some(n) = pull_any(ctx, "NewsProvider", "news", vec![Value::enumeration("Topic", topic)])? {
                        pulled.push(n);
                    }
                }
                pulled
            } else {
                let order = topics(ctx);
                order.iter().filter_map(|t| s.cache.get(t).cloned()).collect()
            };
            match candidates.into_iter().find(|n| n.field("language") == Some(&d.value)) {
                Some(news) => ctx.publish(news, vec![area]),
                None => Ok(()),
            }
        })
        .on("onNewNews", |s, ctx, d| {
            let topic = d.index("topic").and_then(Value::as_str).unwrap_or_default().to_string();
            s.cache.insert(topic, d.value.clone());
            let targets: Vec<Value> = s
                .languages
                .values()
                .filter(|(_, lang)| d.value.field("language") == Some(lang))
                .map(|(area, _)| area.clone())
                .collect();
            for area in targets {
                ctx.publish(d.value.clone(), vec![area])?;
            }
            Ok(())
        })
}

#[derive(Default)]
struct ScheduleState {
    schedule: Option<Value>,
    /// Area key to (area, current department).
    departments: BTreeMap<String, (Value, Value)>,
}

fn schedule_selector() -> Handlers<ScheduleState> {
    Handlers::new(ScheduleState::default())
        .init(|_, ctx| subscribe_all(ctx, "ScheduleDB", "todaySchedule"))
        .on("onNewDepartmentSelector", |s, ctx, d| {
            let area = area_of(d)?;
            s.departments.insert(key(&area), (area.clone(), d.value.clone()));
            if s.schedule.is_none() {
                s.schedule = pull_any(ctx, "ScheduleDB", "todaySchedule", vec![])?;
            }
            match &s.schedule {
                Some(sched) if sched.field("department") == Some(&d.value) => ctx.publish(sched.clone(), vec![area]),
                _ => Ok(()),
            }
        })
        .on("onNewTodaySchedule", |s, ctx, d| {
            s.schedule = Some(d.value.clone());
            let targets: Vec<Value> = s
                .departments
                .values()
                .filter(|(_, dep)| d.value.field("department") == Some(dep))
                .map(|(area, _)| area.clone())
                .collect();
            for area in targets {
                ctx.publish(d.value.clone(), vec![area])?;
            }
            Ok(())
        })
}

fn entries(schedule: &Value) -> String {
    schedule
        .field("entries")
        .and_then(Value::items)
        .unwrap_or_default()
        .iter()
        .filter_map(Value::as_str)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Default)]
struct ReminderState {
    open: bool,
    schedule: Option<Value>,
}

fn remind(s: &mut ReminderState, ctx: &mut ComponentCtx<'_>) -> HandlerResult {
    if !s.open {
        return Ok(());
    }
    if s.schedule.is_none() {
        s.schedule = pull_any(ctx, "ScheduleDB", "todaySchedule", vec![])?;
    }
    let Some(sched) = &s.schedule else {
        return Ok(());
    };
    let Some(department) = sched.field("department") else {
        return Ok(());
    };
    let reminder = Value::structure(
        "Reminder",
        [
            ("department", department.clone()),
            ("message", Value::string(format!("Today: {}", entries(sched)))),
        ],
    );
    ctx.publish(reminder, vec![])
}

fn class_reminder() -> Handlers<ReminderState> {
    Handlers::new(ReminderState::default())
        .init(|_, ctx| {
            subscribe_all(ctx, "ScheduleDB", "todaySchedule")?;
            subscribe_all(ctx, "BuildingStatus", "state")
        })
        .on("onNewTodaySchedule", |s, ctx, d| {
            s.schedule = Some(d.value.clone());
            remind(s, ctx)
        })
        .on("onNewState", |s, ctx, d| {
            let was_open = s.open;
            s.open = d.value.as_str() == Some("OPEN");
            if s.open && !was_open {
                remind(s, ctx)
            } else {
                Ok(())
            }
        })
}

fn display_in_area(ctx: &mut ComponentCtx<'_>, area: Value, content: String) -> HandlerResult {
    let filter = FilterExpr::all().with("area", Predicate::Eq(area))?;
    let screens = ctx.discover("Screen", &filter)?;
    if screens.is_empty() {
        return Ok(());
    }
    let info = Value::structure("Information", [("content", Value::string(content))]);
    ctx.command(&screens, "Display", "display", vec![info])
}

fn visual_manager() -> Handlers<()> {
    Handlers::new(())
        .on("onNewNewsSelector", |_, ctx, d| {
            let content = d.value.field("content").and_then(Value::as_str).unwrap_or_default().to_string();
            display_in_area(ctx, area_of(d)?, content)
        })
        .on("onNewScheduleSelector", |_, ctx, d| display_in_area(ctx, area_of(d)?, entries(&d.value)))
}

fn audio_manager() -> Handlers<()> {
    Handlers::new(()).on("onNewClassReminder", |_, ctx, d| {
        let speakers = ctx.discover_all("LoudSpeaker")?;
        if speakers.is_empty() {
            return Ok(());
        }
        let message = d.value.field("message").cloned().unwrap_or(Value::string(""));
        let audio = Value::structure("Audio", [("message", message)]);
        ctx.command(&speakers, "Play", "play", vec![audio])
    })
}

/// Logic for every Newscast context and controller.
pub fn reference_logic() -> LogicSet {
    let mut set = LogicSet::new();
    set.insert("Proximity".into(), proximity().boxed());
    set.insert("LanguageSelector".into(), selector("language").boxed());
    set.insert("DepartmentSelector".into(), selector("department").boxed());
    set.insert("NewsSelector".into(), news_selector().boxed());
    set.insert("ScheduleSelector".into(), schedule_selector().boxed());
    set.insert("ClassReminder".into(), class_reminder().boxed());
    set.insert("VisualManager".into(), visual_manager().boxed());
    set.insert("AudioManager".into(), audio_manager().boxed());
    set
}
