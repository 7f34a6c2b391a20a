//! Component logic: the developer-supplied side of contexts and controllers.

use std::collections::{BTreeMap, BTreeSet};

use diakit_core::checker::{CheckedSpec, INIT_HOOK};
use diakit_core::{FilterExpr, Value};

use crate::entity::{Composite, Entity};
use crate::error::RuntimeError;
use crate::runtime::Core;

pub type HandlerResult = Result<(), RuntimeError>;

/// Where a delivered value came from.
#[derive(Clone, Debug, PartialEq)]
pub enum Producer {
    /// The publishing entity as it was at publication time.
    Entity(Entity),
    Context(String),
}

impl Producer {
    pub fn entity(&self) -> Option<&Entity> {
        match self {
            Producer::Entity(e) => Some(e),
            Producer::Context(_) => None,
        }
    }
}

/// One value handed to one handler.
#[derive(Clone, Debug, PartialEq)]
pub struct Delivery {
    pub handler: String,
    pub value: Value,
    /// Index values in declaration order.
    pub indices: Vec<(String, Value)>,
    pub producer: Producer,
    /// Sequence number of the trace record this delivery answers to.
    pub cause: u64,
}

impl Delivery {
    pub fn index(&self, name: &str) -> Option<&Value> {
        self.indices.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

/// Implemented once per context or controller.
pub trait ComponentLogic: Send {
    /// Names of the input handlers this logic implements. The init hook is
    /// optional and not listed.
    fn handler_names(&self) -> Vec<String>;

    fn initialize(&mut self, _ctx: &mut ComponentCtx<'_>) -> HandlerResult {
        Ok(())
    }

    fn handle(&mut self, ctx: &mut ComponentCtx<'_>, delivery: &Delivery) -> HandlerResult;
}

/// Component logic by component name.
pub type LogicSet = BTreeMap<String, Box<dyn ComponentLogic>>;

type InitFn<S> = Box<dyn FnMut(&mut S, &mut ComponentCtx<'_>) -> HandlerResult + Send>;
type HandlerFn<S> = Box<dyn FnMut(&mut S, &mut ComponentCtx<'_>, &Delivery) -> HandlerResult + Send>;

/// Closure-based [`ComponentLogic`] over private state `S`.
pub struct Handlers<S> {
    state: S,
    init: Option<InitFn<S>>,
    handlers: BTreeMap<String, HandlerFn<S>>,
}

impl<S: Send + 'static> Handlers<S> {
    pub fn new(state: S) -> Handlers<S> {
        Handlers {
            state,
            init: None,
            handlers: BTreeMap::new(),
        }
    }

    pub fn init(mut self, f: impl FnMut(&mut S, &mut ComponentCtx<'_>) -> HandlerResult + Send + 'static) -> Self {
        self.init = Some(Box::new(f));
        self
    }

    pub fn on(
        mut self,
        handler: impl Into<String>,
        f: impl FnMut(&mut S, &mut ComponentCtx<'_>, &Delivery) -> HandlerResult + Send + 'static,
    ) -> Self {
        self.handlers.insert(handler.into(), Box::new(f));
        self
    }

    pub fn boxed(self) -> Box<dyn ComponentLogic> {
        Box::new(self)
    }
}

impl<S: Send + 'static> ComponentLogic for Handlers<S> {
    fn handler_names(&self) -> Vec<String> {
        self.handlers.keys().cloned().collect()
    }

    fn initialize(&mut self, ctx: &mut ComponentCtx<'_>) -> HandlerResult {
        match &mut self.init {
            Some(f) => f(&mut self.state, ctx),
            None => Ok(()),
        }
    }

    fn handle(&mut self, ctx: &mut ComponentCtx<'_>, delivery: &Delivery) -> HandlerResult {
        let f = self
            .handlers
            .get_mut(&delivery.handler)
            .ok_or_else(|| RuntimeError::logic(format!("no handler `{}`", delivery.handler)))?;
        f(&mut self.state, ctx, delivery)
    }
}

/// Compares implemented handler names with the component's signature.
pub(crate) fn validate_handlers(spec: &CheckedSpec, component: &str, logic: &dyn ComponentLogic) -> HandlerResult {
    let sig = spec
        .conformance_signature(component)
        .map_err(|_| RuntimeError::UnknownComponent(component.to_string()))?;
    let required: BTreeSet<String> = sig.into_iter().map(|h| h.name).filter(|n| n != INIT_HOOK).collect();
    let given: BTreeSet<String> = logic.handler_names().into_iter().filter(|n| n != INIT_HOOK).collect();
    let missing: Vec<String> = required.difference(&given).cloned().collect();
    if !missing.is_empty() {
        return Err(RuntimeError::MissingHandler {
            component: component.to_string(),
            handlers: missing,
        });
    }
    let extra: Vec<String> = given.difference(&required).cloned().collect();
    if !extra.is_empty() {
        return Err(RuntimeError::ExtraHandler {
            component: component.to_string(),
            handlers: extra,
        });
    }
    Ok(())
}

/// What a handler can do while it runs, on behalf of its component.
pub struct ComponentCtx<'a> {
    core: &'a mut Core,
    component: &'a str,
}

impl<'a> ComponentCtx<'a> {
    pub(crate) fn new(core: &'a mut Core, component: &'a str) -> Self {
        ComponentCtx { core, component }
    }

    pub fn component(&self) -> &str {
        self.component
    }

    pub fn spec(&self) -> &CheckedSpec {
        self.core.spec()
    }

    pub fn tick(&self) -> u64 {
        self.core.tick()
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.core.entity(id)
    }

    pub fn discover(&self, class: &str, filter: &FilterExpr) -> Result<Composite, RuntimeError> {
        self.core.discover(class, filter)
    }

    pub fn discover_all(&self, class: &str) -> Result<Composite, RuntimeError> {
        self.core.discover(class, &FilterExpr::all())
    }

    pub fn any_one(&self, composite: &Composite) -> Result<String, RuntimeError> {
        Core::any_one(composite)
    }

    pub fn subscribe(&mut self, composite: &Composite, source: &str) -> HandlerResult {
        self.core.subscribe(self.component, composite, source)
    }

    pub fn pull(&mut self, entity: &str, source: &str, indices: Vec<Value>) -> Result<Value, RuntimeError> {
        self.core.pull(Some(self.component), entity, source, indices)
    }

    pub fn publish(&mut self, value: Value, indices: Vec<Value>) -> HandlerResult {
        self.core.publish_context(self.component, value, indices).map(|_| ())
    }

    pub fn command(&mut self, composite: &Composite, action: &str, method: &str, args: Vec<Value>) -> HandlerResult {
        self.core.command(self.component, composite, action, method, args)
    }
}
