use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::frontend::{FunctionIR, Instruction, ScriptIR, ValueId};

use super::usage::UsageMap;

pub const DEFAULT_BUDGET: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TurtleId(pub u32);

impl fmt::Display for TurtleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Creation site of a turtle: the defining instruction of a function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site {
    pub function: usize,
    pub value: ValueId,
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {}", self.function, self.value)
    }
}

/// Import, property reads and calls that produced a turtle. Each segment is
/// a module path or a property name; a trailing `()` marks a call return.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProvenancePath(Vec<String>);

impl ProvenancePath {
    pub fn module(module: &str) -> Self {
        ProvenancePath(vec![module.to_owned()])
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn with_properties(&self, properties: &[String]) -> Self {
        let mut segments = self.0.clone();
        segments.extend(properties.iter().cloned());
        ProvenancePath(segments)
    }

    /// The return of calling this path.
    pub fn called(&self) -> Self {
        let mut segments = self.0.clone();
        if let Some(last) = segments.last_mut() {
            last.push_str("()");
        }
        ProvenancePath(segments)
    }

    pub fn rendered(&self) -> String {
        self.0.join(".")
    }

    pub fn is_return(&self) -> bool {
        self.0.last().is_some_and(|s| s.ends_with("()"))
    }
}

impl fmt::Display for ProvenancePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rendered())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Turtle {
    pub id: TurtleId,
    pub path: ProvenancePath,
    pub origin: Site,
    /// Receiver turtle of the call that created this one.
    pub parent: Option<TurtleId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AbstractValue {
    pub turtles: BTreeSet<TurtleId>,
    /// Indices of user functions the value may hold.
    pub functions: BTreeSet<usize>,
    /// Unresolved global names (`len`, `print`, ...).
    pub builtins: BTreeSet<String>,
    pub is_other: bool,
}

impl AbstractValue {
    pub fn is_empty(&self) -> bool {
        self.turtles.is_empty() && self.functions.is_empty() && self.builtins.is_empty() && !self.is_other
    }

    /// Least upper bound in place; true when `self` grew.
    pub fn join(&mut self, other: &AbstractValue) -> bool {
        let before = (self.turtles.len(), self.functions.len(), self.builtins.len(), self.is_other);
        self.turtles.extend(other.turtles.iter().copied());
        self.functions.extend(other.functions.iter().copied());
        self.builtins.extend(other.builtins.iter().cloned());
        self.is_other |= other.is_other;
        before != (self.turtles.len(), self.functions.len(), self.builtins.len(), self.is_other)
    }

    fn turtles_only(&self) -> AbstractValue {
        AbstractValue {
            turtles: self.turtles.clone(),
            ..Default::default()
        }
    }

    fn other() -> AbstractValue {
        AbstractValue {
            is_other: true,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CallEdge {
    pub caller: usize,
    pub site: ValueId,
    pub callee: usize,
    /// Caller argument value → callee parameter value.
    pub bindings: Vec<(ValueId, ValueId)>,
}

/// Fixpoint state of one script.
pub struct Analysis<'ir> {
    ir: &'ir ScriptIR,
    values: Vec<Vec<AbstractValue>>,
    returns: Vec<AbstractValue>,
    turtles: Vec<Turtle>,
    turtle_keys: HashMap<(Site, Option<TurtleId>), TurtleId>,
    callers: Vec<BTreeSet<usize>>,
    lexical_readers: Vec<BTreeSet<usize>>,
    call_edges: BTreeSet<CallEdge>,
    observations: BTreeMap<String, BTreeMap<String, BTreeSet<(Site, TurtleId)>>>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
    order: Vec<usize>,
    chains: Vec<HashMap<ValueId, (ValueId, Vec<String>)>>,
    visits: usize,
    budget: usize,
    truncated: bool,
}

/// Runs the worklist to a fixpoint (or until `budget` instruction visits).
pub fn analyze_script(ir: &ScriptIR, budget: usize) -> Analysis<'_> {
    let mut a = Analysis::new(ir, budget);
    a.run();
    a
}

impl<'ir> Analysis<'ir> {
    fn new(ir: &'ir ScriptIR, budget: usize) -> Self {
        let n = ir.functions.len();
        let chains = ir
            .functions
            .iter()
            .map(|f| {
                f.instructions()
                    .filter_map(|i| match i {
                        Instruction::Call { callee, .. } => Some((*callee, f.property_chain(*callee))),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        Analysis {
            ir,
            values: ir
                .functions
                .iter()
                .map(|f| vec![AbstractValue::default(); f.value_count as usize + 1])
                .collect(),
            returns: vec![AbstractValue::default(); n],
            turtles: Vec::new(),
            turtle_keys: HashMap::new(),
            callers: vec![BTreeSet::new(); n],
            lexical_readers: vec![BTreeSet::new(); n],
            call_edges: BTreeSet::new(),
            observations: BTreeMap::new(),
            queue: (0..n).collect(),
            queued: vec![true; n],
            order: Vec::new(),
            chains,
            visits: 0,
            budget,
            truncated: false,
        }
    }

    fn enqueue(&mut self, f: usize) {
        if !self.queued[f] {
            self.queued[f] = true;
            self.queue.push_back(f);
        }
    }

    fn run(&mut self) {
        while let Some(f) = self.queue.pop_front() {
            self.queued[f] = false;
            self.order.push(f);
            if !self.process(f) {
                self.truncated = true;
                log::warn!(
                    "{}: instruction budget of {} exhausted, result is partial",
                    self.ir.source_path,
                    self.budget
                );
                return;
            }
        }
    }

    /// Sweeps the function until its own values are stable. False when the
    /// budget ran out.
    fn process(&mut self, f: usize) -> bool {
        let ir = self.ir;
        let func = &ir.functions[f];
        let mut grew = false;
        loop {
            let mut changed = false;
            for ins in func.instructions() {
                self.visits += 1;
                if self.visits > self.budget {
                    return false;
                }
                changed |= self.transfer(f, func, ins);
            }
            if !changed {
                break;
            }
            grew = true;
        }
        if grew {
            let readers: Vec<usize> = self.lexical_readers[f].iter().copied().filter(|r| *r != f).collect();
            for r in readers {
                self.enqueue(r);
            }
        }
        true
    }

    fn value(&self, f: usize, v: ValueId) -> &AbstractValue {
        &self.values[f][v.0 as usize]
    }

    fn set(&mut self, f: usize, v: ValueId, new: &AbstractValue) -> bool {
        self.values[f][v.0 as usize].join(new)
    }

    fn turtle_for(&mut self, site: Site, receiver: Option<TurtleId>, path: impl FnOnce() -> ProvenancePath) -> TurtleId {
        // a receiver descended from this very site: reuse, so loops stay finite
        let mut cursor = receiver;
        while let Some(t) = cursor {
            let turtle = &self.turtles[t.0 as usize - 1];
            if turtle.origin == site {
                return t;
            }
            cursor = turtle.parent;
        }
        if let Some(t) = self.turtle_keys.get(&(site, receiver)) {
            return *t;
        }
        let id = TurtleId(self.turtles.len() as u32 + 1);
        self.turtles.push(Turtle {
            id,
            path: path(),
            origin: site,
            parent: receiver,
        });
        self.turtle_keys.insert((site, receiver), id);
        id
    }

    fn transfer(&mut self, f: usize, func: &FunctionIR, ins: &Instruction) -> bool {
        match ins {
            Instruction::Import { target, module } => {
                let t = self.turtle_for(Site { function: f, value: *target }, None, || ProvenancePath::module(module));
                let v = AbstractValue {
                    turtles: [t].into(),
                    ..Default::default()
                };
                self.set(f, *target, &v)
            }
            Instruction::PropertyRead { target, object, .. } | Instruction::Subscript { target, object, .. } => {
                let obj = self.value(f, *object);
                let mut v = obj.turtles_only();
                v.is_other = obj.is_other || !obj.functions.is_empty() || !obj.builtins.is_empty();
                self.set(f, *target, &v)
            }
            Instruction::Call { target, callee, args, keywords } => self.call(f, func, *target, *callee, args, keywords),
            Instruction::FunctionCreate { target, function_index } => {
                let v = AbstractValue {
                    functions: [*function_index].into(),
                    ..Default::default()
                };
                self.set(f, *target, &v)
            }
            Instruction::Phi { target, inputs } | Instruction::Operator { target, operands: inputs, .. } => {
                let mut v = AbstractValue::default();
                for i in inputs {
                    v.join(self.value(f, *i));
                }
                if matches!(ins, Instruction::Operator { .. }) {
                    v.is_other = true;
                }
                self.set(f, *target, &v)
            }
            Instruction::Return { value } => {
                if let Some(value) = value {
                    let v = self.value(f, *value).clone();
                    if self.returns[f].join(&v) {
                        let callers: Vec<usize> = self.callers[f].iter().copied().collect();
                        for c in callers {
                            self.enqueue(c);
                        }
                    }
                }
                false
            }
            Instruction::Const { target, .. } => self.set(f, *target, &AbstractValue::other()),
            Instruction::LexicalRead { target, name } => {
                let v = self.lexical(f, func, name);
                self.set(f, *target, &v)
            }
        }
    }

    fn lexical(&mut self, f: usize, func: &FunctionIR, name: &str) -> AbstractValue {
        let ir = self.ir;
        let mut scope = if func.parent.is_none() { Some(f) } else { func.parent };
        while let Some(s) = scope {
            let owner = &ir.functions[s];
            if let Some(values) = owner.bindings.get(name) {
                if s != f {
                    self.lexical_readers[s].insert(f);
                }
                let mut v = AbstractValue::default();
                for b in values {
                    v.join(self.value(s, *b));
                }
                return v;
            }
            scope = owner.parent;
        }
        AbstractValue {
            builtins: [name.to_owned()].into(),
            ..Default::default()
        }
    }

    fn call(
        &mut self,
        f: usize,
        func: &FunctionIR,
        target: ValueId,
        callee: ValueId,
        args: &[ValueId],
        keywords: &[(String, ValueId)],
    ) -> bool {
        let site = Site { function: f, value: target };
        let callee_value = self.value(f, callee).clone();
        let mut result = AbstractValue::default();

        // calls on turtles: record the method, return a fresh turtle
        let (_, chain) = self.chains[f].get(&callee).cloned().unwrap_or_else(|| func.property_chain(callee));
        for t in &callee_value.turtles {
            let receiver_path = self.turtles[t.0 as usize - 1].path.clone();
            let new_path = match chain.split_last() {
                Some((method, prefix)) => {
                    let key = receiver_path.with_properties(prefix);
                    self.observations
                        .entry(key.rendered())
                        .or_default()
                        .entry(method.clone())
                        .or_default()
                        .insert((site, *t));
                    key.with_properties(std::slice::from_ref(method)).called()
                }
                None => receiver_path.called(),
            };
            let fresh = self.turtle_for(site, Some(*t), || new_path);
            result.turtles.insert(fresh);
        }

        // calls to user functions: bind arguments, read the return summary
        for g in &callee_value.functions {
            let g = *g;
            let ir = self.ir;
            let gf = &ir.functions[g];
            let mut bindings = Vec::new();
            for (i, a) in args.iter().enumerate() {
                if let Some(p) = gf.params.get(i) {
                    bindings.push((*a, *p));
                }
            }
            for (name, a) in keywords {
                if let Some(p) = gf.param_names.iter().position(|n| n == name) {
                    bindings.push((*a, gf.params[p]));
                }
            }
            let mut param_changed = false;
            for (a, p) in &bindings {
                let v = self.value(f, *a).clone();
                param_changed |= self.set(g, *p, &v);
            }
            if param_changed {
                self.enqueue(g);
            }
            self.callers[g].insert(f);
            self.call_edges.insert(CallEdge {
                caller: f,
                site: target,
                callee: g,
                bindings,
            });
            result.join(&self.returns[g].clone());
        }

        // builtins and primitives return any turtle they were given
        if !callee_value.builtins.is_empty() {
            for a in args.iter().chain(keywords.iter().map(|(_, v)| v)) {
                let turtles = self.value(f, *a).turtles.clone();
                result.turtles.extend(turtles);
            }
            result.is_other = true;
        }
        if callee_value.is_other {
            result.is_other = true;
        }
        self.set(f, target, &result)
    }

    pub fn ir(&self) -> &ScriptIR {
        self.ir
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn visits(&self) -> usize {
        self.visits
    }

    pub fn turtles(&self) -> &[Turtle] {
        &self.turtles
    }

    pub fn turtle(&self, id: TurtleId) -> &Turtle {
        &self.turtles[id.0 as usize - 1]
    }

    pub fn call_edges(&self) -> impl Iterator<Item = &CallEdge> {
        self.call_edges.iter()
    }

    /// Function indices in the order they were taken off the worklist.
    pub fn processing_order(&self) -> &[usize] {
        &self.order
    }

    pub fn value_of(&self, function: usize, value: ValueId) -> &AbstractValue {
        self.value(function, value)
    }

    /// Turtles that may reach parameter `param` of the function named `function`.
    pub fn param_turtles(&self, function: &str, param: &str) -> Vec<&Turtle> {
        let Some(func) = self.ir.function_named(function) else { return Vec::new() };
        let Some(i) = func.param_names.iter().position(|p| p == param) else { return Vec::new() };
        self.value(func.index, func.params[i]).turtles.iter().map(|t| self.turtle(*t)).collect()
    }

    pub fn return_value(&self, function: usize) -> &AbstractValue {
        &self.returns[function]
    }

    pub fn usage_map(&self) -> UsageMap {
        let mut map = UsageMap {
            files_analyzed: 1,
            files_truncated: usize::from(self.truncated),
            ..Default::default()
        };
        for (path, methods) in &self.observations {
            for (m, sites) in methods {
                map.record(path, m, sites.len());
            }
        }
        map
    }

    fn describe(&self, v: &AbstractValue) -> String {
        let mut parts: Vec<String> = v
            .turtles
            .iter()
            .map(|t| format!("{t}={}", self.turtle(*t).path))
            .collect();
        parts.extend(v.functions.iter().map(|g| format!("fn#{g}={}", self.ir.functions[*g].name)));
        parts.extend(v.builtins.iter().map(|b| format!("builtin={b}")));
        if v.is_other {
            parts.push("other".to_owned());
        }
        format!("{{{}}}", parts.join(", "))
    }

    /// The IR listing annotated with the final abstract values, followed by
    /// the worklist order, call edges and turtle table.
    pub fn dump(&self) -> String {
        let mut out = format!("script {}\n", self.ir.source_path);
        for func in &self.ir.functions {
            out.push_str(&func.header());
            out.push('\n');
            for p in &func.params {
                out.push_str(&format!("  param {p} ; {}\n", self.describe(self.value(func.index, *p))));
            }
            for block in &func.blocks {
                out.push_str(&format!("  {}:\n", block.id));
                for ins in &block.instructions {
                    match ins.target() {
                        Some(t) => out.push_str(&format!("    {ins} ; {}\n", self.describe(self.value(func.index, t)))),
                        None => out.push_str(&format!("    {ins}\n")),
                    }
                }
                out.push_str(&format!("    {}\n", block.terminator_text()));
            }
        }
        let order: Vec<String> = self
            .order
            .iter()
            .map(|f| format!("#{f} {}", self.ir.functions[*f].name))
            .collect();
        out.push_str(&format!("worklist: {}\n", order.join(", ")));
        for e in &self.call_edges {
            let binds: Vec<String> = e.bindings.iter().map(|(a, p)| format!("{a}->{p}")).collect();
            out.push_str(&format!(
                "edge #{} {} -> #{} {} [{}]\n",
                e.caller,
                e.site,
                e.callee,
                self.ir.functions[e.callee].name,
                binds.join(", ")
            ));
        }
        for t in &self.turtles {
            match t.parent {
                Some(p) => out.push_str(&format!("turtle {} {} at {} from {p}\n", t.id, t.path, t.origin)),
                None => out.push_str(&format!("turtle {} {} at {}\n", t.id, t.path, t.origin)),
            }
        }
        if self.truncated {
            out.push_str("truncated\n");
        }
        out
    }
}
