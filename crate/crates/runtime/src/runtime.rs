//! Entity registry, discovery, and the push/pull/command interaction modes.
//!
//! Everything runs on one logical thread. Publications enqueue deliveries on
//! a single FIFO queue that [`Runtime::drain`] empties to completion.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use diakit_core::checker::{handler_name, CheckedSpec, ComponentKind};
use diakit_core::model::{TypeRef, Typed};
use diakit_core::{FilterExpr, Value};
use serde_json::{Map, Value as Json};

use crate::entity::{Composite, Entity, EntityBehavior};
use crate::error::RuntimeError;
use crate::logic::{validate_handlers, ComponentCtx, ComponentLogic, Delivery, Producer};
use crate::trace::{EventKind, EventRecord};

struct Subscription {
    component: String,
    entity: String,
    source: String,
}

enum Job {
    Deliver { component: String, delivery: Delivery },
    Execute { entity: String, action: String, method: String, args: Vec<Value> },
}

/// State shared by the runtime and the handlers it calls.
pub struct Core {
    spec: Arc<CheckedSpec>,
    entities: BTreeMap<String, Entity>,
    behaviors: BTreeMap<String, Box<dyn EntityBehavior>>,
    subscriptions: Vec<Subscription>,
    queue: VecDeque<Job>,
    records: Vec<EventRecord>,
    next_seq: u64,
    tick: u64,
    cause: Option<u64>,
}

fn index_map(indices: &[(String, Value)]) -> Map<String, Json> {
    indices.iter().map(|(n, v)| (n.clone(), v.to_json())).collect()
}

impl Core {
    pub fn spec(&self) -> &CheckedSpec {
        &self.spec
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    fn online(&self, id: &str) -> Result<&Entity, RuntimeError> {
        match self.entities.get(id) {
            Some(e) if e.online => Ok(e),
            Some(_) => Err(RuntimeError::OfflineEntity(id.to_string())),
            None => Err(RuntimeError::UnknownEntity(id.to_string())),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        kind: EventKind,
        producer: &str,
        name: &str,
        value: Json,
        indices: Map<String, Json>,
        cause: Option<u64>,
        target: Option<String>,
        steered: Option<bool>,
    ) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.records.push(EventRecord {
            seq,
            cause,
            tick: self.tick,
            kind,
            producer: producer.to_string(),
            name: name.to_string(),
            value,
            indices,
            target,
            steered,
        });
        seq
    }

    fn typed(&self, value: Value, ty: &TypeRef, what: impl Fn() -> String) -> Result<Value, RuntimeError> {
        value
            .coerce(&self.spec, ty)
            .map_err(|source| RuntimeError::TypeMismatch { what: what(), source })
    }

    fn typed_indices(&self, decl: &[Typed], given: Vec<Value>, what: &str) -> Result<Vec<(String, Value)>, RuntimeError> {
        if decl.len() != given.len() {
            return Err(RuntimeError::Arity {
                what: format!("indices of {what}"),
                expected: decl.len(),
                found: given.len(),
            });
        }
        decl.iter()
            .zip(given)
            .map(|(d, v)| {
                let v = self.typed(v, &d.ty, || format!("index `{}` of {what}", d.name))?;
                Ok((d.name.text.clone(), v))
            })
            .collect()
    }

    /// Validates a source publication; returns the typed value and indices.
    fn source_value(
        &self,
        entity: &str,
        source: &str,
        value: Value,
        indices: Vec<Value>,
    ) -> Result<(Value, Vec<(String, Value)>), RuntimeError> {
        let e = self.online(entity)?;
        let members = self.spec.effective_members(&e.class).expect("registered class");
        let decl = members.source(source).ok_or_else(|| RuntimeError::UnknownSource {
            class: e.class.clone(),
            source_name: source.to_string(),
        })?;
        let what = format!("{}.{}", e.class, source);
        let value = self.typed(value, &decl.value_type, || what.clone())?;
        let indices = self.typed_indices(&decl.indices, indices, &what)?;
        Ok((value, indices))
    }

    pub(crate) fn stimulus(
        &mut self,
        entity: &str,
        source: &str,
        value: Value,
        indices: Vec<Value>,
        steered: bool,
    ) -> Result<u64, RuntimeError> {
        let (value, indices) = self.source_value(entity, source, value, indices)?;
        let seq = self.record(
            EventKind::Stimulus,
            entity,
            source,
            value.to_json(),
            index_map(&indices),
            None,
            None,
            Some(steered),
        );
        self.emit_source(entity, source, value, indices, Some(seq))
    }

    pub(crate) fn publish_source(
        &mut self,
        entity: &str,
        source: &str,
        value: Value,
        indices: Vec<Value>,
    ) -> Result<u64, RuntimeError> {
        let (value, indices) = self.source_value(entity, source, value, indices)?;
        let cause = self.cause;
        self.emit_source(entity, source, value, indices, cause)
    }

    fn emit_source(
        &mut self,
        entity: &str,
        source: &str,
        value: Value,
        indices: Vec<(String, Value)>,
        cause: Option<u64>,
    ) -> Result<u64, RuntimeError> {
        let seq = self.record(
            EventKind::SourcePublish,
            entity,
            source,
            value.to_json(),
            index_map(&indices),
            cause,
            None,
            None,
        );
        let producer = Producer::Entity(self.online(entity)?.clone());
        let handler = handler_name(source);
        for sub in self.subscriptions.iter().filter(|s| s.entity == entity && s.source == source) {
            self.queue.push_back(Job::Deliver {
                component: sub.component.clone(),
                delivery: Delivery {
                    handler: handler.clone(),
                    value: value.clone(),
                    indices: indices.clone(),
                    producer: producer.clone(),
                    cause: seq,
                },
            });
        }
        Ok(seq)
    }

    pub(crate) fn discover(&self, class: &str, filter: &FilterExpr) -> Result<Composite, RuntimeError> {
        if self.spec.device(class).is_none() {
            return Err(RuntimeError::UnknownClass(class.to_string()));
        }
        let resolved = filter.resolve(&self.spec, class)?;
        let ids = self
            .entities
            .values()
            .filter(|e| e.online && self.spec.is_subclass(&e.class, class) && resolved.matches(&e.attributes))
            .map(|e| e.id.clone())
            .collect();
        Ok(Composite {
            class: class.to_string(),
            ids,
        })
    }

    pub(crate) fn any_one(composite: &Composite) -> Result<String, RuntimeError> {
        composite
            .ids
            .iter()
            .min()
            .cloned()
            .ok_or_else(|| RuntimeError::EmptyComposite(composite.class.clone()))
    }

    pub(crate) fn subscribe(&mut self, component: &str, composite: &Composite, source: &str) -> Result<(), RuntimeError> {
        if self.spec.component_kind(component).is_none() {
            return Err(RuntimeError::UnknownComponent(component.to_string()));
        }
        if !self.spec.binds_source(component, &composite.class, source) {
            return Err(RuntimeError::UndeclaredInput {
                component: component.to_string(),
                class: composite.class.clone(),
                source_name: source.to_string(),
            });
        }
        for id in &composite.ids {
            if !self.entities.get(id).is_some_and(|e| e.online) {
                continue;
            }
            let exists = self
                .subscriptions
                .iter()
                .any(|s| s.component == component && &s.entity == id && s.source == source);
            if !exists {
                self.subscriptions.push(Subscription {
                    component: component.to_string(),
                    entity: id.clone(),
                    source: source.to_string(),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn publish_context(&mut self, component: &str, value: Value, indices: Vec<Value>) -> Result<u64, RuntimeError> {
        let spec = Arc::clone(&self.spec);
        let decl = match spec.component_kind(component) {
            Some(ComponentKind::Context) => spec.context(component).expect("known context"),
            Some(ComponentKind::Controller) => return Err(RuntimeError::NotAContext(component.to_string())),
            None => return Err(RuntimeError::UnknownComponent(component.to_string())),
        };
        let value = self.typed(value, &decl.output_type, || format!("output of {component}"))?;
        let indices = self.typed_indices(&decl.output_indices, indices, component)?;
        let seq = self.record(
            EventKind::ContextPublish,
            component,
            component,
            value.to_json(),
            index_map(&indices),
            self.cause,
            None,
            None,
        );
        let handler = handler_name(component);
        for (_, consumer) in spec.consumers(component) {
            self.queue.push_back(Job::Deliver {
                component: consumer.to_string(),
                delivery: Delivery {
                    handler: handler.clone(),
                    value: value.clone(),
                    indices: indices.clone(),
                    producer: Producer::Context(component.to_string()),
                    cause: seq,
                },
            });
        }
        Ok(seq)
    }

    /// Synchronous pull. `requester` is the pulling component, or `None` for
    /// a call from outside any component.
    pub(crate) fn pull(
        &mut self,
        requester: Option<&str>,
        entity: &str,
        source: &str,
        indices: Vec<Value>,
    ) -> Result<Value, RuntimeError> {
        let e = self.online(entity)?;
        let class = e.class.clone();
        let members = self.spec.effective_members(&class).expect("registered class");
        let decl = members.source(source).ok_or_else(|| RuntimeError::UnknownSource {
            class: class.clone(),
            source_name: source.to_string(),
        })?;
        if let Some(component) = requester {
            if !self.spec.binds_source(component, &class, source) {
                return Err(RuntimeError::UndeclaredInput {
                    component: component.to_string(),
                    class,
                    source_name: source.to_string(),
                });
            }
        }
        let value_type = decl.value_type.clone();
        let what = format!("{class}.{source}");
        let indices = self.typed_indices(&decl.indices, indices, &what)?;
        let args: Vec<Value> = indices.iter().map(|(_, v)| v.clone()).collect();
        let behavior = self
            .behaviors
            .get_mut(entity)
            .ok_or_else(|| RuntimeError::NoPullHandler {
                entity: entity.to_string(),
                source_name: source.to_string(),
            })?;
        let value = behavior.pull(source, &args).map_err(|err| match err {
            crate::entity::BehaviorError::NoPull(_) => RuntimeError::NoPullHandler {
                entity: entity.to_string(),
                source_name: source.to_string(),
            },
            other => RuntimeError::Behavior {
                entity: entity.to_string(),
                message: other.to_string(),
            },
        })?;
        let value = self.typed(value, &value_type, || format!("value pulled from {what}"))?;
        self.record(
            EventKind::Pull,
            entity,
            source,
            value.to_json(),
            index_map(&indices),
            self.cause,
            None,
            None,
        );
        Ok(value)
    }

    pub(crate) fn command(
        &mut self,
        component: &str,
        composite: &Composite,
        action: &str,
        method: &str,
        args: Vec<Value>,
    ) -> Result<(), RuntimeError> {
        if self.spec.component_kind(component).is_none() {
            return Err(RuntimeError::UnknownComponent(component.to_string()));
        }
        if !self.spec.uses_action(component, &composite.class, action) {
            return Err(RuntimeError::UndeclaredAction {
                component: component.to_string(),
                class: composite.class.clone(),
                action: action.to_string(),
            });
        }
        let spec = Arc::clone(&self.spec);
        let m = spec
            .action(action)
            .and_then(|a| a.methods.iter().find(|m| m.name.text == method))
            .ok_or_else(|| RuntimeError::UnknownMethod {
                action: action.to_string(),
                method: method.to_string(),
            })?;
        let what = format!("{action}.{method}");
        let typed = self.typed_indices(&m.params, args, &what).map_err(|e| match e {
            RuntimeError::Arity { expected, found, .. } => RuntimeError::Arity {
                what: format!("arguments of {what}"),
                expected,
                found,
            },
            other => other,
        })?;
        let value: Map<String, Json> = index_map(&typed);
        let args: Vec<Value> = typed.into_iter().map(|(_, v)| v).collect();
        let mut ids = composite.ids.clone();
        ids.sort();
        for id in ids {
            if !self.entities.get(&id).is_some_and(|e| e.online) {
                continue;
            }
            self.record(
                EventKind::Command,
                component,
                method,
                Json::Object(value.clone()),
                Map::new(),
                self.cause,
                Some(id.clone()),
                None,
            );
            self.queue.push_back(Job::Execute {
                entity: id,
                action: action.to_string(),
                method: method.to_string(),
                args: args.clone(),
            });
        }
        Ok(())
    }
}

/// The in-process runtime for one checked spec.
pub struct Runtime {
    core: Core,
    logic: BTreeMap<String, Box<dyn ComponentLogic>>,
    started: bool,
}

impl Runtime {
    pub fn new(spec: Arc<CheckedSpec>) -> Runtime {
        Runtime {
            core: Core {
                spec,
                entities: BTreeMap::new(),
                behaviors: BTreeMap::new(),
                subscriptions: Vec::new(),
                queue: VecDeque::new(),
                records: Vec::new(),
                next_seq: 0,
                tick: 0,
                cause: None,
            },
            logic: BTreeMap::new(),
            started: false,
        }
    }

    pub fn spec(&self) -> &Arc<CheckedSpec> {
        &self.core.spec
    }

    pub fn tick(&self) -> u64 {
        self.core.tick
    }

    pub fn set_tick(&mut self, tick: u64) {
        self.core.tick = tick;
    }

    /// Registers an online instance of a concrete device class. Attribute
    /// values are coerced to their declared types.
    pub fn register_entity(
        &mut self,
        class: &str,
        id: &str,
        attributes: BTreeMap<String, Value>,
        behavior: Box<dyn EntityBehavior>,
    ) -> Result<&Entity, RuntimeError> {
        let spec = Arc::clone(&self.core.spec);
        if spec.device(class).is_none() {
            return Err(RuntimeError::UnknownClass(class.to_string()));
        }
        if spec.is_abstract(class) {
            return Err(RuntimeError::AbstractClass(class.to_string()));
        }
        if self.core.entities.get(id).is_some_and(|e| e.online) {
            return Err(RuntimeError::DuplicateId(id.to_string()));
        }
        let members = spec.effective_members(class).expect("known class");
        if let Some(extra) = attributes.keys().find(|k| members.attribute(k).is_none()) {
            return Err(RuntimeError::UnknownAttribute {
                class: class.to_string(),
                attribute: extra.clone(),
            });
        }
        let mut typed = BTreeMap::new();
        let mut given = attributes;
        for attr in &members.attributes {
            let name = &attr.name.text;
            let v = given.remove(name).ok_or_else(|| RuntimeError::MissingAttribute {
                class: class.to_string(),
                attribute: name.clone(),
            })?;
            let v = self.core.typed(v, &attr.ty, || format!("attribute `{name}` of {id}"))?;
            typed.insert(name.clone(), v);
        }
        self.core.behaviors.insert(id.to_string(), behavior);
        self.core.entities.insert(
            id.to_string(),
            Entity {
                id: id.to_string(),
                class: class.to_string(),
                attributes: typed,
                online: true,
            },
        );
        Ok(&self.core.entities[id])
    }

    /// Takes the entity offline and drops its subscriptions. Deliveries
    /// already queued from it are still delivered.
    pub fn unregister_entity(&mut self, id: &str) -> Result<(), RuntimeError> {
        self.core.online(id)?;
        if let Some(e) = self.core.entities.get_mut(id) {
            e.online = false;
        }
        self.core.behaviors.remove(id);
        self.core.subscriptions.retain(|s| s.entity != id);
        Ok(())
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.core.entities.get(id)
    }

    /// All entities ever registered, ascending id.
    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.core.entities.values()
    }

    pub fn discover(&self, class: &str, filter: &FilterExpr) -> Result<Composite, RuntimeError> {
        self.core.discover(class, filter)
    }

    pub fn any_one(&self, composite: &Composite) -> Result<String, RuntimeError> {
        Core::any_one(composite)
    }

    /// Validates `logic` against the component's signature and installs it,
    /// replacing earlier logic for that component.
    pub fn register_component_logic(&mut self, component: &str, logic: Box<dyn ComponentLogic>) -> Result<(), RuntimeError> {
        validate_handlers(&self.core.spec, component, logic.as_ref())?;
        self.logic.insert(component.to_string(), logic);
        Ok(())
    }

    /// Runs every init hook in declaration order, then drains. Every
    /// component must have logic.
    pub fn start(&mut self) -> Result<(), RuntimeError> {
        if self.started {
            return Ok(());
        }
        let components: Vec<String> = self.core.spec.components().iter().map(|(_, n)| n.clone()).collect();
        let missing: Vec<String> = components.iter().filter(|c| !self.logic.contains_key(*c)).cloned().collect();
        if !missing.is_empty() {
            return Err(RuntimeError::MissingLogic(missing));
        }
        self.started = true;
        for c in &components {
            let logic = self.logic.get_mut(c).expect("checked above");
            self.core.cause = None;
            logic
                .initialize(&mut ComponentCtx::new(&mut self.core, c))
                .map_err(|e| RuntimeError::Handler {
                    component: c.clone(),
                    handler: diakit_core::checker::INIT_HOOK.to_string(),
                    source: Box::new(e),
                })?;
        }
        self.drain()
    }

    pub fn publish_source(&mut self, entity: &str, source: &str, value: Value, indices: Vec<Value>) -> Result<u64, RuntimeError> {
        self.core.publish_source(entity, source, value, indices)
    }

    /// Records a stimulus on `entity.source` and publishes it.
    pub fn stimulus(
        &mut self,
        entity: &str,
        source: &str,
        value: Value,
        indices: Vec<Value>,
        steered: bool,
    ) -> Result<u64, RuntimeError> {
        self.core.stimulus(entity, source, value, indices, steered)
    }

    pub fn subscribe_source(&mut self, component: &str, composite: &Composite, source: &str) -> Result<(), RuntimeError> {
        self.core.subscribe(component, composite, source)
    }

    pub fn publish_context(&mut self, component: &str, value: Value, indices: Vec<Value>) -> Result<u64, RuntimeError> {
        self.core.publish_context(component, value, indices)
    }

    pub fn pull_source(&mut self, entity: &str, source: &str, indices: Vec<Value>) -> Result<Value, RuntimeError> {
        self.core.pull(None, entity, source, indices)
    }

    pub fn command(
        &mut self,
        component: &str,
        composite: &Composite,
        action: &str,
        method: &str,
        args: Vec<Value>,
    ) -> Result<(), RuntimeError> {
        self.core.command(component, composite, action, method, args)
    }

    pub fn pending(&self) -> usize {
        self.core.queue.len()
    }

    /// Processes queued deliveries and commands until the queue is empty.
    /// A failing handler aborts the drain and clears the queue.
    pub fn drain(&mut self) -> Result<(), RuntimeError> {
        while let Some(job) = self.core.queue.pop_front() {
            let result = self.run_job(job);
            self.core.cause = None;
            if let Err(e) = result {
                self.core.queue.clear();
                return Err(e);
            }
        }
        Ok(())
    }

    fn run_job(&mut self, job: Job) -> Result<(), RuntimeError> {
        match job {
            Job::Deliver { component, mut delivery } => {
                if self.core.spec.component_kind(&component) == Some(ComponentKind::Controller) {
                    delivery.cause = self.core.record(
                        EventKind::ControllerHandle,
                        &component,
                        &delivery.handler,
                        delivery.value.to_json(),
                        index_map(&delivery.indices),
                        Some(delivery.cause),
                        None,
                        None,
                    );
                }
                let logic = self
                    .logic
                    .get_mut(&component)
                    .ok_or_else(|| RuntimeError::MissingLogic(vec![component.clone()]))?;
                self.core.cause = Some(delivery.cause);
                logic
                    .handle(&mut ComponentCtx::new(&mut self.core, &component), &delivery)
                    .map_err(|e| RuntimeError::Handler {
                        component: component.clone(),
                        handler: delivery.handler.clone(),
                        source: Box::new(e),
                    })
            }
            Job::Execute {
                entity,
                action,
                method,
                args,
            } => {
                if !self.core.entities.get(&entity).is_some_and(|e| e.online) {
                    return Ok(());
                }
                match self.core.behaviors.get_mut(&entity) {
                    Some(b) => b.command(&action, &method, &args).map_err(|e| RuntimeError::Behavior {
                        entity: entity.clone(),
                        message: e.to_string(),
                    }),
                    None => Ok(()),
                }
            }
        }
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.core.records
    }

    pub fn take_records(&mut self) -> Vec<EventRecord> {
        std::mem::take(&mut self.core.records)
    }
}
