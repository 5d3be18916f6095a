use std::collections::{BTreeMap, BTreeSet};

use rustpython_parser::ast::{self, Constant, Expr, Stmt};
use rustpython_parser::Parse;

use super::ir::*;
use crate::error::{Error, Result};

type Env = BTreeMap<String, ValueId>;

/// Parses `source` and lowers every function (and the top level) to SSA.
///
/// Unsupported constructs are skipped and tallied in `ScriptIR::warnings`;
/// only a syntax error fails the whole file.
pub fn parse_script(source: &str, path: &str) -> Result<ScriptIR> {
    let suite = ast::Suite::parse(source, path).map_err(|e| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    let mut state = ScriptState::default();
    let index = state.reserve();
    let mut top = FnBuilder::new(&mut state, index, "<module>".to_owned(), None);
    top.lower_body(&suite);
    let func = top.finish();
    state.functions[index] = Some(func);
    Ok(ScriptIR {
        source_path: path.to_owned(),
        functions: state.functions.into_iter().map(|f| f.expect("every reserved function is lowered")).collect(),
        warnings: state.warnings,
    })
}

/// Analysis roots: the top level, then every function in source order.
pub fn enumerate_roots(ir: &ScriptIR) -> Vec<&FunctionIR> {
    ir.functions.iter().collect()
}

#[derive(Default)]
struct ScriptState {
    functions: Vec<Option<FunctionIR>>,
    warnings: BTreeMap<String, usize>,
}

impl ScriptState {
    fn reserve(&mut self) -> usize {
        self.functions.push(None);
        self.functions.len() - 1
    }

    fn warn(&mut self, what: &str) {
        *self.warnings.entry(what.to_owned()).or_insert(0) += 1;
    }
}

/// End of a straight-line region: the block it ends in, the environment
/// there, and whether control can actually reach it.
struct Tail {
    block: Option<BlockId>,
    env: Env,
    live: bool,
}

#[derive(Default)]
struct LoopCtx {
    breaks: Vec<Tail>,
    continues: Vec<Tail>,
}

struct FnBuilder<'s> {
    state: &'s mut ScriptState,
    index: usize,
    name: String,
    parent: Option<usize>,
    params: Vec<ValueId>,
    param_names: Vec<String>,
    blocks: Vec<BasicBlock>,
    current: BlockId,
    live: bool,
    next_value: u32,
    env: Env,
    bindings: BTreeMap<String, Vec<ValueId>>,
    globals: BTreeSet<String>,
    loops: Vec<LoopCtx>,
}

impl<'s> FnBuilder<'s> {
    fn new(state: &'s mut ScriptState, index: usize, name: String, parent: Option<usize>) -> Self {
        let mut b = FnBuilder {
            state,
            index,
            name,
            parent,
            params: Vec::new(),
            param_names: Vec::new(),
            blocks: Vec::new(),
            current: BlockId(0),
            live: true,
            next_value: 1,
            env: Env::new(),
            bindings: BTreeMap::new(),
            globals: BTreeSet::new(),
            loops: Vec::new(),
        };
        b.current = b.new_block();
        b
    }

    fn finish(self) -> FunctionIR {
        FunctionIR {
            name: self.name,
            index: self.index,
            parent: self.parent,
            params: self.params,
            param_names: self.param_names,
            blocks: self.blocks,
            value_count: self.next_value - 1,
            bindings: self.bindings,
        }
    }

    fn fresh(&mut self) -> ValueId {
        let v = ValueId(self.next_value);
        self.next_value += 1;
        v
    }

    fn new_block(&mut self) -> BlockId {
        let id = BlockId(self.blocks.len() as u32);
        self.blocks.push(BasicBlock {
            id,
            instructions: Vec::new(),
            terminator: Terminator::Exit,
        });
        id
    }

    fn block_mut(&mut self, id: BlockId) -> &mut BasicBlock {
        &mut self.blocks[id.0 as usize]
    }

    fn terminate(&mut self, term: Terminator) {
        let current = self.current;
        self.block_mut(current).terminator = term;
    }

    fn emit(&mut self, ins: Instruction) {
        let current = self.current;
        self.block_mut(current).instructions.push(ins);
    }

    fn define(&mut self, make: impl FnOnce(ValueId) -> Instruction) -> ValueId {
        let v = self.fresh();
        self.emit(make(v));
        v
    }

    fn constant(&mut self, kind: ConstKind) -> ValueId {
        self.define(|target| Instruction::Const { target, kind })
    }

    fn operator(&mut self, op: &'static str, operands: Vec<ValueId>) -> ValueId {
        self.define(|target| Instruction::Operator { target, op, operands })
    }

    fn bind(&mut self, name: &str, value: ValueId) {
        if self.globals.contains(name) {
            self.state.warn("global store");
            return;
        }
        self.env.insert(name.to_owned(), value);
        self.bindings.entry(name.to_owned()).or_default().push(value);
    }

    fn tail(&self) -> Tail {
        Tail {
            block: Some(self.current),
            env: self.env.clone(),
            live: self.live,
        }
    }

    /// Control leaves the current region (return, break, continue): later
    /// statements go into a fresh block nobody jumps to.
    fn dead_end(&mut self) {
        self.current = self.new_block();
        self.live = false;
    }

    /// Starts a new block reached from every live tail; names bound to
    /// different values on different paths get a phi.
    fn join(&mut self, tails: Vec<Tail>) {
        let block = self.new_block();
        for t in tails.iter().filter(|t| t.live) {
            if let Some(b) = t.block {
                self.block_mut(b).terminator = Terminator::Jump(block);
            }
        }
        self.current = block;
        let live: Vec<&Tail> = tails.iter().filter(|t| t.live).collect();
        self.live = !live.is_empty();
        let sources: Vec<&Tail> = if live.is_empty() { tails.iter().take(1).collect() } else { live };
        let names: BTreeSet<&String> = sources.iter().flat_map(|t| t.env.keys()).collect();
        let mut env = Env::new();
        for name in names {
            let mut inputs: Vec<ValueId> = Vec::new();
            for t in &sources {
                if let Some(v) = t.env.get(name) {
                    if !inputs.contains(v) {
                        inputs.push(*v);
                    }
                }
            }
            let value = if inputs.len() == 1 {
                inputs[0]
            } else {
                let v = self.define(|target| Instruction::Phi { target, inputs });
                self.bindings.entry(name.clone()).or_default().push(v);
                v
            };
            env.insert(name.clone(), value);
        }
        self.env = env;
    }

    fn lower_body(&mut self, body: &[Stmt]) {
        for stmt in body {
            self.lower_stmt(stmt);
        }
    }

    fn lower_stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::FunctionDef(f) => {
                let v = self.lower_function(f.name.as_str(), &f.args, FnBody::Stmts(&f.body), &f.decorator_list);
                self.bind(f.name.as_str(), v);
            }
            Stmt::AsyncFunctionDef(f) => {
                let v = self.lower_function(f.name.as_str(), &f.args, FnBody::Stmts(&f.body), &f.decorator_list);
                self.bind(f.name.as_str(), v);
            }
            Stmt::ClassDef(c) => {
                self.state.warn("class definition");
                let v = self.constant(ConstKind::Other);
                self.bind(c.name.as_str(), v);
            }
            Stmt::Return(r) => {
                let value = r.value.as_deref().map(|e| self.lower_expr(e));
                self.emit(Instruction::Return { value });
                self.dead_end();
            }
            Stmt::Delete(_) | Stmt::Pass(_) => {}
            Stmt::Assign(a) => {
                let v = self.lower_expr(&a.value);
                for target in &a.targets {
                    self.assign(target, v);
                }
            }
            Stmt::TypeAlias(_) => self.state.warn("type alias"),
            Stmt::AugAssign(a) => {
                let current = self.lower_expr(&a.target);
                let rhs = self.lower_expr(&a.value);
                let v = self.operator("binop", vec![current, rhs]);
                self.assign(&a.target, v);
            }
            Stmt::AnnAssign(a) => {
                if let Some(value) = &a.value {
                    let v = self.lower_expr(value);
                    self.assign(&a.target, v);
                }
            }
            Stmt::For(f) => self.lower_for(&f.target, &f.iter, &f.body, &f.orelse),
            Stmt::AsyncFor(f) => self.lower_for(&f.target, &f.iter, &f.body, &f.orelse),
            Stmt::While(w) => self.lower_while(&w.test, &w.body, &w.orelse),
            Stmt::If(i) => self.lower_if(&i.test, &i.body, &i.orelse),
            Stmt::With(w) => self.lower_with(&w.items, &w.body),
            Stmt::AsyncWith(w) => self.lower_with(&w.items, &w.body),
            Stmt::Match(m) => self.lower_match(m),
            Stmt::Raise(r) => {
                if let Some(exc) = &r.exc {
                    self.lower_expr(exc);
                }
                if let Some(cause) = &r.cause {
                    self.lower_expr(cause);
                }
                self.dead_end();
            }
            Stmt::Try(t) => self.lower_try(&t.body, &t.handlers, &t.orelse, &t.finalbody),
            Stmt::TryStar(t) => self.lower_try(&t.body, &t.handlers, &t.orelse, &t.finalbody),
            Stmt::Assert(a) => {
                self.lower_expr(&a.test);
                if let Some(msg) = &a.msg {
                    self.lower_expr(msg);
                }
            }
            Stmt::Import(i) => {
                for alias in &i.names {
                    let full = alias.name.as_str();
                    match &alias.asname {
                        Some(as_name) => {
                            let v = self.import(full);
                            self.bind(as_name.as_str(), v);
                        }
                        None => {
                            // `import a.b.c` binds `a`
                            let root = full.split('.').next().unwrap_or(full);
                            let v = self.import(root);
                            self.bind(root, v);
                        }
                    }
                }
            }
            Stmt::ImportFrom(i) => {
                let level = i.level.as_ref().map_or(0, |l| l.to_usize());
                let module = format!("{}{}", ".".repeat(level), i.module.as_ref().map_or("", |m| m.as_str()));
                let base = self.import(&module);
                for alias in &i.names {
                    if alias.name.as_str() == "*" {
                        self.state.warn("star import");
                        continue;
                    }
                    let property = alias.name.to_string();
                    let v = self.define(|target| Instruction::PropertyRead { target, object: base, property });
                    let local = alias.asname.as_ref().unwrap_or(&alias.name);
                    self.bind(local.as_str(), v);
                }
            }
            Stmt::Global(g) => self.globals.extend(g.names.iter().map(|n| n.to_string())),
            Stmt::Nonlocal(n) => self.globals.extend(n.names.iter().map(|n| n.to_string())),
            Stmt::Expr(e) => {
                self.lower_expr(&e.value);
            }
            Stmt::Break(_) => {
                let tail = self.tail();
                if let Some(ctx) = self.loops.last_mut() {
                    ctx.breaks.push(tail);
                }
                self.dead_end();
            }
            Stmt::Continue(_) => {
                let tail = self.tail();
                if let Some(ctx) = self.loops.last_mut() {
                    ctx.continues.push(tail);
                }
                self.dead_end();
            }
        }
    }

    fn import(&mut self, module: &str) -> ValueId {
        let module = module.to_owned();
        self.define(|target| Instruction::Import { target, module })
    }

    fn assign(&mut self, target: &Expr, value: ValueId) {
        match target {
            Expr::Name(n) => self.bind(n.id.as_str(), value),
            Expr::Tuple(t) => self.destructure(&t.elts, value),
            Expr::List(l) => self.destructure(&l.elts, value),
            Expr::Starred(s) => self.assign(&s.value, value),
            Expr::Attribute(a) => {
                self.lower_expr(&a.value);
                self.state.warn("attribute store");
            }
            Expr::Subscript(s) => {
                self.lower_expr(&s.value);
                self.lower_expr(&s.slice);
                self.state.warn("subscript store");
            }
            _ => self.state.warn("assignment target"),
        }
    }

    fn destructure(&mut self, elts: &[Expr], value: ValueId) {
        for elt in elts {
            let v = self.define(|target| Instruction::Subscript { target, object: value, index: None });
            self.assign(elt, v);
        }
    }

    fn lower_if(&mut self, test: &Expr, body: &[Stmt], orelse: &[Stmt]) {
        let cond = self.lower_expr(test);
        let then_block = self.new_block();
        let else_block = self.new_block();
        self.terminate(Terminator::Branch { cond, then_block, else_block });
        let (pre_env, pre_live) = (self.env.clone(), self.live);

        self.current = then_block;
        self.lower_body(body);
        let then_tail = self.tail();

        self.current = else_block;
        self.env = pre_env;
        self.live = pre_live;
        self.lower_body(orelse);
        let else_tail = self.tail();

        self.join(vec![then_tail, else_tail]);
    }

    /// Header block with one phi per name the loop body may rebind. Inputs
    /// from back edges are filled in once the body has been lowered.
    fn loop_header(&mut self, body: &[Stmt], extra: &[&Expr]) -> (BlockId, Vec<(String, ValueId)>) {
        let mut assigned = BTreeSet::new();
        for e in extra {
            target_names(e, &mut assigned);
        }
        assigned_names(body, &mut assigned);
        assigned.retain(|n| !self.globals.contains(n));

        let header = self.new_block();
        self.terminate(Terminator::Jump(header));
        self.current = header;
        let mut phis = Vec::new();
        for name in assigned {
            let inputs: Vec<ValueId> = self.env.get(&name).copied().into_iter().collect();
            let v = self.define(|target| Instruction::Phi { target, inputs });
            self.env.insert(name.clone(), v);
            self.bindings.entry(name.clone()).or_default().push(v);
            phis.push((name, v));
        }
        (header, phis)
    }

    fn close_loop(&mut self, header: BlockId, phis: &[(String, ValueId)], ctx: LoopCtx, body_tail: Tail) {
        let back: Vec<Tail> = ctx.continues.into_iter().chain(std::iter::once(body_tail)).filter(|t| t.live).collect();
        for t in &back {
            if let Some(b) = t.block {
                self.block_mut(b).terminator = Terminator::Jump(header);
            }
        }
        for (name, phi) in phis {
            let extra: Vec<ValueId> = back.iter().filter_map(|t| t.env.get(name).copied()).collect();
            let header_block = self.block_mut(header);
            for ins in header_block.instructions.iter_mut() {
                if let Instruction::Phi { target, inputs } = ins {
                    if target == phi {
                        for v in &extra {
                            if v != phi && !inputs.contains(v) {
                                inputs.push(*v);
                            }
                        }
                    }
                }
            }
        }
    }

    fn lower_while(&mut self, test: &Expr, body: &[Stmt], orelse: &[Stmt]) {
        let (header, phis) = self.loop_header(body, &[test]);
        let cond = self.lower_expr(test);
        let header_end = self.current;
        let header_env = self.env.clone();
        let header_live = self.live;
        let body_block = self.new_block();
        let exit_block = self.new_block();
        self.block_mut(header_end).terminator = Terminator::Branch {
            cond,
            then_block: body_block,
            else_block: exit_block,
        };

        self.current = body_block;
        self.loops.push(LoopCtx::default());
        self.lower_body(body);
        let ctx = self.loops.pop().unwrap_or_default();
        let body_tail = self.tail();
        let breaks = self.finish_loop(header, &phis, ctx, body_tail);

        self.current = exit_block;
        self.env = header_env;
        self.live = header_live;
        self.lower_body(orelse);
        let mut tails = vec![self.tail()];
        tails.extend(breaks);
        self.join(tails);
    }

    fn lower_for(&mut self, target: &Expr, iter: &Expr, body: &[Stmt], orelse: &[Stmt]) {
        let iterable = self.lower_expr(iter);
        let (header, phis) = self.loop_header(body, &[target]);
        let header_env = self.env.clone();
        let header_live = self.live;
        let body_block = self.new_block();
        let exit_block = self.new_block();
        self.terminate(Terminator::Branch {
            cond: iterable,
            then_block: body_block,
            else_block: exit_block,
        });

        self.current = body_block;
        let element = self.define(|t| Instruction::Subscript { target: t, object: iterable, index: None });
        self.assign(target, element);
        self.loops.push(LoopCtx::default());
        self.lower_body(body);
        let ctx = self.loops.pop().unwrap_or_default();
        let body_tail = self.tail();
        let breaks = self.finish_loop(header, &phis, ctx, body_tail);

        self.current = exit_block;
        self.env = header_env;
        self.live = header_live;
        self.lower_body(orelse);
        let mut tails = vec![self.tail()];
        tails.extend(breaks);
        self.join(tails);
    }

    fn finish_loop(&mut self, header: BlockId, phis: &[(String, ValueId)], mut ctx: LoopCtx, body_tail: Tail) -> Vec<Tail> {
        let breaks = std::mem::take(&mut ctx.breaks);
        self.close_loop(header, phis, ctx, body_tail);
        breaks
    }

    fn lower_with(&mut self, items: &[ast::WithItem], body: &[Stmt]) {
        for item in items {
            let v = self.lower_expr(&item.context_expr);
            if let Some(target) = &item.optional_vars {
                self.assign(target, v);
            }
        }
        self.lower_body(body);
    }

    fn lower_try(&mut self, body: &[Stmt], handlers: &[ast::ExceptHandler], orelse: &[Stmt], finalbody: &[Stmt]) {
        let pre = Tail {
            block: None,
            env: self.env.clone(),
            live: self.live,
        };
        self.lower_body(body);
        let after_body = self.tail();
        let mut tails = Vec::new();
        for handler in handlers {
            let ast::ExceptHandler::ExceptHandler(h) = handler;
            // a handler may be entered before or after any statement of the body
            let entry = [
                Tail {
                    block: None,
                    env: pre.env.clone(),
                    live: pre.live,
                },
                Tail {
                    block: None,
                    env: after_body.env.clone(),
                    live: after_body.live,
                },
            ];
            self.join(entry.into());
            self.live = pre.live;
            if let Some(t) = &h.type_ {
                self.lower_expr(t);
            }
            if let Some(name) = &h.name {
                let v = self.constant(ConstKind::Other);
                self.bind(name.as_str(), v);
            }
            self.lower_body(&h.body);
            tails.push(self.tail());
        }
        self.current = after_body.block.expect("body tail has a block");
        self.env = after_body.env;
        self.live = after_body.live;
        self.lower_body(orelse);
        tails.insert(0, self.tail());
        self.join(tails);
        self.lower_body(finalbody);
    }

    fn lower_match(&mut self, m: &ast::StmtMatch) {
        let _subject = self.lower_expr(&m.subject);
        let pre_env = self.env.clone();
        let pre_live = self.live;
        let mut tails = vec![self.tail()];
        let start = self.current;
        for case in &m.cases {
            self.state.warn("match pattern");
            let block = self.new_block();
            self.block_mut(start).terminator = Terminator::Jump(block);
            self.current = block;
            self.env = pre_env.clone();
            self.live = pre_live;
            if let Some(guard) = &case.guard {
                self.lower_expr(guard);
            }
            self.lower_body(&case.body);
            tails.push(self.tail());
        }
        // the subject block already jumps to a case; the join is reached from it
        // only when there are none
        if !m.cases.is_empty() {
            tails[0].block = None;
        }
        self.join(tails);
    }

    fn lower_function(&mut self, name: &str, args: &ast::Arguments, body: FnBody<'_>, decorators: &[Expr]) -> ValueId {
        if !decorators.is_empty() {
            self.state.warn("decorator");
        }
        let all_args = args.posonlyargs.iter().chain(&args.args).chain(&args.kwonlyargs);
        for a in all_args.clone() {
            if let Some(default) = &a.default {
                self.lower_expr(default);
            }
        }
        let index = self.state.reserve();
        let mut child = FnBuilder::new(&mut *self.state, index, name.to_owned(), Some(self.index));
        let mut params: Vec<&str> = args.posonlyargs.iter().chain(&args.args).map(|a| a.def.arg.as_str()).collect();
        if let Some(v) = &args.vararg {
            params.push(v.arg.as_str());
        }
        params.extend(args.kwonlyargs.iter().map(|a| a.def.arg.as_str()));
        if let Some(k) = &args.kwarg {
            params.push(k.arg.as_str());
        }
        for p in params {
            let v = child.fresh();
            child.params.push(v);
            child.param_names.push(p.to_owned());
            child.bind(p, v);
        }
        match body {
            FnBody::Stmts(stmts) => child.lower_body(stmts),
            FnBody::Expr(e) => {
                let v = child.lower_expr(e);
                child.emit(Instruction::Return { value: Some(v) });
            }
        }
        let func = child.finish();
        self.state.functions[index] = Some(func);
        self.define(|target| Instruction::FunctionCreate {
            target,
            function_index: index,
        })
    }

    fn lower_exprs(&mut self, exprs: &[Expr]) -> Vec<ValueId> {
        exprs.iter().map(|e| self.lower_expr(e)).collect()
    }

    fn lower_expr(&mut self, expr: &Expr) -> ValueId {
        match expr {
            Expr::BoolOp(b) => {
                let operands = self.lower_exprs(&b.values);
                self.operator("boolop", operands)
            }
            Expr::NamedExpr(n) => {
                let v = self.lower_expr(&n.value);
                self.assign(&n.target, v);
                v
            }
            Expr::BinOp(b) => {
                let l = self.lower_expr(&b.left);
                let r = self.lower_expr(&b.right);
                self.operator("binop", vec![l, r])
            }
            Expr::UnaryOp(u) => {
                let v = self.lower_expr(&u.operand);
                if u.op == ast::UnaryOp::Not {
                    self.constant(ConstKind::Bool)
                } else {
                    self.operator("unaryop", vec![v])
                }
            }
            Expr::Lambda(l) => self.lower_function("<lambda>", &l.args, FnBody::Expr(&l.body), &[]),
            Expr::IfExp(i) => {
                self.lower_expr(&i.test);
                let a = self.lower_expr(&i.body);
                let b = self.lower_expr(&i.orelse);
                self.operator("ifexp", vec![a, b])
            }
            Expr::Dict(d) => {
                let mut operands = Vec::new();
                for k in d.keys.iter().flatten() {
                    operands.push(self.lower_expr(k));
                }
                operands.extend(self.lower_exprs(&d.values));
                self.operator("dict", operands)
            }
            Expr::Set(s) => {
                let operands = self.lower_exprs(&s.elts);
                self.operator("set", operands)
            }
            Expr::ListComp(c) => self.lower_comprehension("listcomp", &c.generators, &[&c.elt]),
            Expr::SetComp(c) => self.lower_comprehension("setcomp", &c.generators, &[&c.elt]),
            Expr::DictComp(c) => self.lower_comprehension("dictcomp", &c.generators, &[&c.key, &c.value]),
            Expr::GeneratorExp(c) => self.lower_comprehension("genexp", &c.generators, &[&c.elt]),
            Expr::Await(a) => {
                let v = self.lower_expr(&a.value);
                self.operator("await", vec![v])
            }
            Expr::Yield(y) => {
                let operands: Vec<ValueId> = y.value.iter().map(|e| self.lower_expr(e)).collect();
                self.operator("yield", operands)
            }
            Expr::YieldFrom(y) => {
                let v = self.lower_expr(&y.value);
                self.operator("yield", vec![v])
            }
            Expr::Compare(c) => {
                self.lower_expr(&c.left);
                self.lower_exprs(&c.comparators);
                self.constant(ConstKind::Bool)
            }
            Expr::Call(c) => {
                let callee = self.lower_expr(&c.func);
                let mut args = Vec::new();
                for a in &c.args {
                    args.push(match a {
                        Expr::Starred(s) => self.lower_expr(&s.value),
                        other => self.lower_expr(other),
                    });
                }
                let mut keywords = Vec::new();
                for k in &c.keywords {
                    let v = self.lower_expr(&k.value);
                    keywords.push((k.arg.as_ref().map_or_else(|| "**".to_owned(), |a| a.to_string()), v));
                }
                self.define(|target| Instruction::Call { target, callee, args, keywords })
            }
            Expr::FormattedValue(f) => {
                self.lower_expr(&f.value);
                self.constant(ConstKind::Str)
            }
            Expr::JoinedStr(j) => {
                self.lower_exprs(&j.values);
                self.constant(ConstKind::Str)
            }
            Expr::Constant(c) => self.constant(const_kind(&c.value)),
            Expr::Attribute(a) => {
                let object = self.lower_expr(&a.value);
                let property = a.attr.to_string();
                self.define(|target| Instruction::PropertyRead { target, object, property })
            }
            Expr::Subscript(s) => {
                let object = self.lower_expr(&s.value);
                let index = self.lower_expr(&s.slice);
                self.define(|target| Instruction::Subscript {
                    target,
                    object,
                    index: Some(index),
                })
            }
            Expr::Starred(s) => self.lower_expr(&s.value),
            Expr::Name(n) => self.read_name(n.id.as_str()),
            Expr::List(l) => {
                let operands = self.lower_exprs(&l.elts);
                self.operator("list", operands)
            }
            Expr::Tuple(t) => {
                let operands = self.lower_exprs(&t.elts);
                self.operator("tuple", operands)
            }
            Expr::Slice(s) => {
                for part in [&s.lower, &s.upper, &s.step].into_iter().flatten() {
                    self.lower_expr(part);
                }
                self.constant(ConstKind::Other)
            }
        }
    }

    fn read_name(&mut self, name: &str) -> ValueId {
        if !self.globals.contains(name) {
            if let Some(v) = self.env.get(name) {
                return *v;
            }
        }
        let name = name.to_owned();
        self.define(|target| Instruction::LexicalRead { target, name })
    }

    /// Comprehensions are lowered inline, without a loop: each generator's
    /// target is bound to an element read of its iterable, then the produced
    /// expressions are evaluated once. Comprehension variables do not leak.
    fn lower_comprehension(&mut self, op: &'static str, generators: &[ast::Comprehension], elts: &[&Expr]) -> ValueId {
        let saved = self.env.clone();
        for g in generators {
            let iterable = self.lower_expr(&g.iter);
            let element = self.define(|target| Instruction::Subscript { target, object: iterable, index: None });
            self.assign(&g.target, element);
            self.lower_exprs(&g.ifs);
        }
        let operands: Vec<ValueId> = elts.iter().map(|e| self.lower_expr(e)).collect();
        self.env = saved;
        self.operator(op, operands)
    }
}

enum FnBody<'a> {
    Stmts(&'a [Stmt]),
    Expr(&'a Expr),
}

fn const_kind(c: &Constant) -> ConstKind {
    match c {
        Constant::None => ConstKind::None,
        Constant::Bool(_) => ConstKind::Bool,
        Constant::Str(_) => ConstKind::Str,
        Constant::Bytes(_) => ConstKind::Bytes,
        Constant::Int(_) => ConstKind::Int,
        Constant::Tuple(_) => ConstKind::Tuple,
        Constant::Float(_) => ConstKind::Float,
        Constant::Complex { .. } => ConstKind::Complex,
        Constant::Ellipsis => ConstKind::Ellipsis,
    }
}

fn target_names(target: &Expr, out: &mut BTreeSet<String>) {
    match target {
        Expr::Name(n) => {
            out.insert(n.id.to_string());
        }
        Expr::Tuple(t) => t.elts.iter().for_each(|e| target_names(e, out)),
        Expr::List(l) => l.elts.iter().for_each(|e| target_names(e, out)),
        Expr::Starred(s) => target_names(&s.value, out),
        Expr::NamedExpr(n) => target_names(&n.target, out),
        _ => {}
    }
}

/// Names a statement list may bind, not descending into nested scopes.
fn assigned_names(body: &[Stmt], out: &mut BTreeSet<String>) {
    for stmt in body {
        match stmt {
            Stmt::FunctionDef(f) => {
                out.insert(f.name.to_string());
            }
            Stmt::AsyncFunctionDef(f) => {
                out.insert(f.name.to_string());
            }
            Stmt::ClassDef(c) => {
                out.insert(c.name.to_string());
            }
            Stmt::Assign(a) => {
                a.targets.iter().for_each(|t| target_names(t, out));
                walrus_names(&a.value, out);
            }
            Stmt::AugAssign(a) => target_names(&a.target, out),
            Stmt::AnnAssign(a) => target_names(&a.target, out),
            Stmt::For(f) => {
                target_names(&f.target, out);
                assigned_names(&f.body, out);
                assigned_names(&f.orelse, out);
            }
            Stmt::AsyncFor(f) => {
                target_names(&f.target, out);
                assigned_names(&f.body, out);
                assigned_names(&f.orelse, out);
            }
            Stmt::While(w) => {
                walrus_names(&w.test, out);
                assigned_names(&w.body, out);
                assigned_names(&w.orelse, out);
            }
            Stmt::If(i) => {
                walrus_names(&i.test, out);
                assigned_names(&i.body, out);
                assigned_names(&i.orelse, out);
            }
            Stmt::With(w) => {
                w.items.iter().filter_map(|i| i.optional_vars.as_deref()).for_each(|t| target_names(t, out));
                assigned_names(&w.body, out);
            }
            Stmt::AsyncWith(w) => {
                w.items.iter().filter_map(|i| i.optional_vars.as_deref()).for_each(|t| target_names(t, out));
                assigned_names(&w.body, out);
            }
            Stmt::Match(m) => m.cases.iter().for_each(|c| assigned_names(&c.body, out)),
            Stmt::Try(t) => {
                assigned_names(&t.body, out);
                for ast::ExceptHandler::ExceptHandler(h) in &t.handlers {
                    out.extend(h.name.iter().map(|n| n.to_string()));
                    assigned_names(&h.body, out);
                }
                assigned_names(&t.orelse, out);
                assigned_names(&t.finalbody, out);
            }
            Stmt::TryStar(t) => {
                assigned_names(&t.body, out);
                for ast::ExceptHandler::ExceptHandler(h) in &t.handlers {
                    out.extend(h.name.iter().map(|n| n.to_string()));
                    assigned_names(&h.body, out);
                }
                assigned_names(&t.orelse, out);
                assigned_names(&t.finalbody, out);
            }
            Stmt::Import(i) => {
                for a in &i.names {
                    let local = match &a.asname {
                        Some(n) => n.to_string(),
                        None => a.name.split('.').next().unwrap_or("").to_owned(),
                    };
                    out.insert(local);
                }
            }
            Stmt::ImportFrom(i) => {
                for a in i.names.iter().filter(|a| a.name.as_str() != "*") {
                    out.insert(a.asname.as_ref().unwrap_or(&a.name).to_string());
                }
            }
            Stmt::Expr(e) => walrus_names(&e.value, out),
            _ => {}
        }
    }
}

fn walrus_names(expr: &Expr, out: &mut BTreeSet<String>) {
    if let Expr::NamedExpr(n) = expr {
        target_names(&n.target, out);
        walrus_names(&n.value, out);
    }
}
