use std::sync::Arc;

use super::builtins::{call_builtin, Rng};
use super::value::{js_number_to_string, HeapId, Value};
use super::{ExecConfig, LocationId, Place, RuntimeError, RuntimeErrorKind, MAX_CALL_DEPTH};
use crate::syntax::{
    AssignOp, BinaryOp, DeclKind, Detail, LogicalOp, NodeId, NodeKind, Program, Role, UnaryOp, UpdateOp,
};
use crate::trace::{Effect, FlowWrite, OpKind, StepKind, Trace, TraceBuilder};
use crate::trace::build::Leaf;

use RuntimeErrorKind::*;

pub(super) fn run(program: Arc<Program>, config: &ExecConfig) -> Trace {
    let builder = TraceBuilder::new(program.clone(), config.seed, config.max_ops, config.capture_snapshots);
    let mut m = Machine {
        p: &program,
        b: builder,
        calls: vec![CallCtx { function: None, scopes: vec![Scope::default()], frame: None }],
        rng: Rng::new(config.seed),
        heap: Vec::new(),
        iterations: 0,
        max_iterations: config.max_ops,
        returned: None,
    };
    let result = m.program();
    let error = result.err().map(|f| m.error(f));
    let Machine { b, .. } = m;
    b.finish(error)
}

struct Binding {
    name: Arc<str>,
    loc: LocationId,
    constant: bool,
}

#[derive(Default)]
struct Scope {
    vars: Vec<Binding>,
}

struct CallCtx {
    function: Option<NodeId>,
    scopes: Vec<Scope>,
    frame: Option<usize>,
}

enum Fault {
    Runtime(RuntimeErrorKind, String, NodeId),
}

type R<T> = Result<T, Fault>;

#[derive(PartialEq, Eq)]
enum Completion {
    Normal,
    Return,
}

fn fault<T>(kind: RuntimeErrorKind, node: NodeId, msg: impl Into<String>) -> R<T> {
    Err(Fault::Runtime(kind, msg.into(), node))
}

fn write(loc: LocationId, value: Value, mut provenance: Vec<LocationId>, copy: bool, fresh: bool) -> Effect {
    provenance.sort_unstable();
    provenance.dedup();
    Effect::Write(FlowWrite { loc, value, provenance, copy, fresh })
}

fn free(loc: LocationId) -> Effect {
    Effect::Free { loc }
}

struct Machine<'p> {
    p: &'p Program,
    b: TraceBuilder,
    calls: Vec<CallCtx>,
    rng: Rng,
    heap: Vec<Vec<LocationId>>,
    iterations: usize,
    max_iterations: usize,
    returned: Option<LocationId>,
}

impl Machine<'_> {
    fn error(&self, f: Fault) -> RuntimeError {
        let Fault::Runtime(kind, message, node) = f;
        RuntimeError { kind, message, ast_node: node, tick: self.b.tick(), span: self.p.node(node).span }
    }

    fn emit(
        &mut self,
        kind: OpKind,
        node: NodeId,
        reads: Vec<LocationId>,
        effects: Vec<Effect>,
        leaf: Leaf,
    ) -> R<()> {
        self.emit_cond(kind, node, reads, effects, leaf, None)
    }

    fn emit_cond(
        &mut self,
        kind: OpKind,
        node: NodeId,
        reads: Vec<LocationId>,
        effects: Vec<Effect>,
        leaf: Leaf,
        condition: Option<bool>,
    ) -> R<()> {
        match self.b.emit(kind, node, reads, effects, leaf, condition) {
            Ok(_) => Ok(()),
            Err(_) => {
                let t = self.b.tick();
                fault(BudgetExceeded, node, format!("operation budget of {t} exhausted"))
            }
        }
    }

    fn value(&self, loc: LocationId) -> Value {
        self.b.value(loc).clone()
    }

    fn register(&mut self) -> LocationId {
        self.b.alloc(Place::Register)
    }

    fn ctx(&mut self) -> &mut CallCtx {
        self.calls.last_mut().expect("call context")
    }

    fn frame_index(&self) -> u32 {
        (self.calls.len() - 1) as u32
    }

    fn declare(&mut self, name: Arc<str>, constant: bool) -> LocationId {
        let frame = self.frame_index();
        let loc = self.b.alloc(Place::Binding { frame, name: name.clone() });
        let scope = self.ctx().scopes.last_mut().expect("scope");
        scope.vars.push(Binding { name, loc, constant });
        loc
    }

    fn lookup(&self, name: &str) -> Option<&Binding> {
        let mut i = self.calls.len() - 1;
        loop {
            let ctx = &self.calls[i];
            for scope in ctx.scopes.iter().rev() {
                if let Some(b) = scope.vars.iter().rev().find(|b| &*b.name == name) {
                    return Some(b);
                }
            }
            if i == 0 {
                return None;
            }
            // Lexical parent: the newest active call of the enclosing function.
            i = match ctx.function.and_then(|f| self.p.enclosing_function(f)) {
                Some(outer) => self.calls[..i].iter().rposition(|c| c.function == Some(outer)).unwrap_or(0),
                None => 0,
            };
        }
    }

    fn push_scope(&mut self) {
        self.ctx().scopes.push(Scope::default());
    }

    fn pop_scope(&mut self) {
        let scope = self.ctx().scopes.pop().expect("scope");
        for b in scope.vars.iter().rev() {
            self.b.append(free(b.loc));
        }
    }

    // ---- statements ----

    fn program(&mut self) -> R<()> {
        let body: Vec<NodeId> = self.p.root().children_with(Role::Body).collect();
        self.hoist(&body)?;
        for s in body {
            self.statement(s)?;
        }
        Ok(())
    }

    fn hoist(&mut self, stmts: &[NodeId]) -> R<()> {
        for &s in stmts {
            let node = self.p.node(s);
            if node.kind != NodeKind::FunctionDeclaration {
                continue;
            }
            let id = node.child(Role::Id).expect("function name");
            let name = self.p.node(id).name().expect("identifier").clone();
            let loc = self.declare(name, false);
            self.emit(
                OpKind::WriteBinding,
                s,
                vec![],
                vec![write(loc, Value::FunctionRef(s), vec![], false, true)],
                Leaf::Step(StepKind::Node(NodeKind::FunctionDeclaration)),
            )?;
        }
        Ok(())
    }

    fn statement(&mut self, id: NodeId) -> R<Completion> {
        let node = self.p.node(id);
        match node.kind {
            NodeKind::FunctionDeclaration => Ok(Completion::Normal),
            NodeKind::VariableDeclaration => {
                self.b.open(StepKind::Node(node.kind), id);
                self.declaration(id)?;
                self.b.close();
                Ok(Completion::Normal)
            }
            NodeKind::ExpressionStatement => {
                self.b.open(StepKind::Node(node.kind), id);
                let e = node.child(Role::Expression).expect("expression");
                let r = self.eval(e)?;
                self.b.append(free(r));
                self.b.close();
                Ok(Completion::Normal)
            }
            NodeKind::BlockStatement => {
                self.b.open(StepKind::Node(node.kind), id);
                let c = self.block_body(id)?;
                self.b.close();
                Ok(c)
            }
            NodeKind::IfStatement => self.if_statement(id),
            NodeKind::ForStatement => self.for_statement(id),
            NodeKind::WhileStatement => self.while_statement(id),
            NodeKind::ReturnStatement => self.return_statement(id),
            k => unreachable!("{k} is not a statement"),
        }
    }

    fn block_body(&mut self, id: NodeId) -> R<Completion> {
        let body: Vec<NodeId> = self.p.node(id).children_with(Role::Body).collect();
        self.push_scope();
        self.hoist(&body)?;
        for s in body {
            if self.statement(s)? == Completion::Return {
                return Ok(Completion::Return);
            }
        }
        self.pop_scope();
        Ok(Completion::Normal)
    }

    /// Evaluates a declaration's initializer into the current step and binds it.
    fn declaration(&mut self, id: NodeId) -> R<()> {
        let node = self.p.node(id);
        let name_node = node.child(Role::Id).expect("declared name");
        let name = self.p.node(name_node).name().expect("identifier").clone();
        let constant = node.detail == Detail::Declaration(DeclKind::Const);
        match node.child(Role::Init) {
            Some(init) => {
                let r = self.eval(init)?;
                let v = self.value(r);
                let loc = self.declare(name, constant);
                self.emit(
                    OpKind::WriteBinding,
                    id,
                    vec![r],
                    vec![write(loc, v, vec![r], true, true), free(r)],
                    Leaf::Folded,
                )
            }
            None => {
                let loc = self.declare(name, constant);
                self.emit(
                    OpKind::WriteBinding,
                    id,
                    vec![],
                    vec![write(loc, Value::Undefined, vec![], false, true)],
                    Leaf::Folded,
                )
            }
        }
    }

    /// Opens a container step for a test, evaluates it inline and records the outcome.
    fn condition(&mut self, test: NodeId, kind: StepKind) -> R<bool> {
        self.b.open(kind, test);
        let r = self.eval_inline(test)?;
        let outcome = self.value(r).truthy();
        self.emit_cond(OpKind::ConditionResult, test, vec![r], vec![free(r)], Leaf::Folded, Some(outcome))?;
        self.b.close();
        Ok(outcome)
    }

    fn if_statement(&mut self, id: NodeId) -> R<Completion> {
        let node = self.p.node(id);
        self.b.open(StepKind::Node(NodeKind::IfStatement), id);
        let test = node.child(Role::Test).expect("if test");
        let taken = if self.condition(test, StepKind::Node(self.p.node(test).kind))? {
            node.child(Role::Consequent)
        } else {
            node.child(Role::Alternate)
        };
        let c = match taken {
            Some(branch) => self.statement(branch)?,
            None => Completion::Normal,
        };
        self.b.close();
        Ok(c)
    }

    fn count_iteration(&mut self, loop_node: NodeId) -> R<()> {
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            return fault(BudgetExceeded, loop_node, "iteration budget exhausted");
        }
        Ok(())
    }

    fn for_statement(&mut self, id: NodeId) -> R<Completion> {
        let node = self.p.node(id);
        let (init, test, update, body) = (
            node.child(Role::Init),
            node.child(Role::Test),
            node.child(Role::Update),
            node.child(Role::Body).expect("loop body"),
        );
        self.b.open(StepKind::Node(NodeKind::ForStatement), id);
        self.push_scope();
        if let Some(init) = init {
            self.b.open(StepKind::LoopInit, init);
            if self.p.node(init).kind == NodeKind::VariableDeclaration {
                self.declaration(init)?;
            } else {
                let r = self.eval_inline(init)?;
                self.b.append(free(r));
            }
            self.b.close();
        }
        loop {
            self.count_iteration(id)?;
            match test {
                Some(test) => {
                    if !self.condition(test, StepKind::LoopTest)? {
                        break;
                    }
                    self.b.wrap_last_child(StepKind::Iteration, id);
                }
                None => {
                    self.b.open(StepKind::Iteration, id);
                }
            }
            if self.statement(body)? == Completion::Return {
                self.b.close();
                self.b.close();
                return Ok(Completion::Return);
            }
            if let Some(update) = update {
                self.b.open(StepKind::LoopUpdate, update);
                let r = self.eval_inline(update)?;
                self.b.append(free(r));
                self.b.close();
            }
            self.b.close();
        }
        self.pop_scope();
        self.b.close();
        Ok(Completion::Normal)
    }

    fn while_statement(&mut self, id: NodeId) -> R<Completion> {
        let node = self.p.node(id);
        let test = node.child(Role::Test).expect("while test");
        let body = node.child(Role::Body).expect("loop body");
        self.b.open(StepKind::Node(NodeKind::WhileStatement), id);
        loop {
            self.count_iteration(id)?;
            if !self.condition(test, StepKind::LoopTest)? {
                break;
            }
            self.b.wrap_last_child(StepKind::Iteration, id);
            if self.statement(body)? == Completion::Return {
                self.b.close();
                self.b.close();
                return Ok(Completion::Return);
            }
            self.b.close();
        }
        self.b.close();
        Ok(Completion::Normal)
    }

    fn return_statement(&mut self, id: NodeId) -> R<Completion> {
        self.b.open(StepKind::Node(NodeKind::ReturnStatement), id);
        let arg = self.p.node(id).child(Role::Argument);
        let res = self.register();
        let value = match arg {
            Some(a) => {
                let r = self.eval(a)?;
                let v = self.value(r);
                self.emit(
                    OpKind::ReturnValue,
                    id,
                    vec![r],
                    vec![write(res, v.clone(), vec![r], true, true), free(r)],
                    Leaf::Folded,
                )?;
                v
            }
            None => {
                self.emit(
                    OpKind::ReturnValue,
                    id,
                    vec![],
                    vec![write(res, Value::Undefined, vec![], false, true)],
                    Leaf::Folded,
                )?;
                Value::Undefined
            }
        };
        self.unwind(res, value);
        self.b.close();
        Ok(Completion::Return)
    }

    /// Releases every binding of the current call and pops its frame; the
    /// result register survives for the caller.
    fn unwind(&mut self, res: LocationId, value: Value) {
        while !self.ctx().scopes.is_empty() {
            self.pop_scope();
        }
        self.b.append(Effect::PopFrame);
        let ctx = self.ctx();
        let frame = ctx.frame.expect("return inside a call");
        self.b.frame_return(frame, value);
        self.returned = Some(res);
    }

    // ---- expressions ----

    /// Evaluates an expression in its own step, returning the result register.
    fn eval(&mut self, id: NodeId) -> R<LocationId> {
        let kind = self.p.node(id).kind;
        match kind {
            NodeKind::NumericLiteral
            | NodeKind::BooleanLiteral
            | NodeKind::StringLiteral
            | NodeKind::Identifier => self.eval_body(id, Leaf::Step(StepKind::Node(kind))),
            _ => {
                self.b.open(StepKind::Node(kind), id);
                let r = self.eval_body(id, Leaf::Folded)?;
                self.b.close();
                Ok(r)
            }
        }
    }

    /// Evaluates an expression into the currently open step.
    fn eval_inline(&mut self, id: NodeId) -> R<LocationId> {
        self.eval_body(id, Leaf::Folded)
    }

    fn eval_body(&mut self, id: NodeId, own: Leaf) -> R<LocationId> {
        let node = self.p.node(id);
        match node.kind {
            NodeKind::NumericLiteral | NodeKind::BooleanLiteral | NodeKind::StringLiteral => {
                let v = match &node.detail {
                    Detail::Number(n) => Value::Number(*n),
                    Detail::Boolean(b) => Value::Boolean(*b),
                    Detail::String(s) => Value::String(s.clone()),
                    d => unreachable!("literal detail {d:?}"),
                };
                let res = self.register();
                self.emit(OpKind::CreateLiteral, id, vec![], vec![write(res, v, vec![], false, true)], own)?;
                Ok(res)
            }
            NodeKind::Identifier => {
                let name = node.name().expect("identifier");
                let Some(binding) = self.lookup(name) else {
                    return fault(UndefinedVariable, id, format!("`{name}` is not defined"));
                };
                let loc = binding.loc;
                let v = self.value(loc);
                let res = self.register();
                self.emit(OpKind::ReadIdentifier, id, vec![loc], vec![write(res, v, vec![loc], true, true)], own)?;
                Ok(res)
            }
            NodeKind::ArrayExpression => self.array(id, own),
            NodeKind::BinaryExpression => {
                let Detail::Binary(op) = node.detail else { unreachable!() };
                let l = self.eval(node.child(Role::Left).expect("left"))?;
                let r = self.eval(node.child(Role::Right).expect("right"))?;
                let v = match binary(op, &self.value(l), &self.value(r)) {
                    Ok(v) => v,
                    Err(msg) => return fault(BadArgument, id, msg),
                };
                let res = self.register();
                self.emit(
                    OpKind::BinaryExpression,
                    id,
                    vec![l, r],
                    vec![write(res, v, vec![l, r], false, true), free(l), free(r)],
                    own,
                )?;
                Ok(res)
            }
            NodeKind::UnaryExpression => {
                let Detail::Unary(op) = node.detail else { unreachable!() };
                let a = self.eval(node.child(Role::Argument).expect("operand"))?;
                let v = match (op, self.value(a)) {
                    (UnaryOp::Neg, Value::Number(n)) => Value::Number(-n),
                    (UnaryOp::Not, v) => Value::Boolean(!v.truthy()),
                    (UnaryOp::Neg, v) => return fault(BadArgument, id, format!("cannot negate {}", v.type_name())),
                };
                let res = self.register();
                self.emit(
                    OpKind::UnaryExpression,
                    id,
                    vec![a],
                    vec![write(res, v, vec![a], false, true), free(a)],
                    own,
                )?;
                Ok(res)
            }
            NodeKind::LogicalExpression => {
                let Detail::Logical(op) = node.detail else { unreachable!() };
                let l = self.eval(node.child(Role::Left).expect("left"))?;
                let lv = self.value(l);
                let short = match op {
                    LogicalOp::And => !lv.truthy(),
                    LogicalOp::Or => lv.truthy(),
                };
                let res = self.register();
                if short {
                    self.emit(
                        OpKind::LogicalShortCircuit,
                        id,
                        vec![l],
                        vec![write(res, lv, vec![l], true, true), free(l)],
                        own,
                    )?;
                } else {
                    let r = self.eval(node.child(Role::Right).expect("right"))?;
                    let rv = self.value(r);
                    self.emit(
                        OpKind::LogicalShortCircuit,
                        id,
                        vec![l, r],
                        vec![write(res, rv, vec![r], true, true), free(l), free(r)],
                        own,
                    )?;
                }
                Ok(res)
            }
            NodeKind::MemberExpression => self.member_read(id, own),
            NodeKind::AssignmentExpression => self.assignment(id),
            NodeKind::UpdateExpression => self.update(id, own),
            NodeKind::CallExpression => self.call(id),
            k => unreachable!("{k} is not an expression"),
        }
    }

    fn array(&mut self, id: NodeId, own: Leaf) -> R<LocationId> {
        let elems: Vec<NodeId> = self.p.node(id).children_with(Role::Element).collect();
        let mut regs = Vec::with_capacity(elems.len());
        for e in elems {
            regs.push(self.eval(e)?);
        }
        let h = self.heap.len() as HeapId;
        let mut effects = vec![Effect::AllocArray { heap: h }];
        let mut slots = Vec::with_capacity(regs.len());
        for (i, r) in regs.iter().enumerate() {
            let loc = self.b.alloc(Place::Element { array: h, index: i as u32 });
            effects.push(write(loc, self.value(*r), vec![*r], true, true));
            slots.push(loc);
        }
        self.heap.push(slots);
        let res = self.register();
        effects.push(write(res, Value::ArrayRef(h), vec![], false, true));
        effects.extend(regs.iter().map(|r| free(*r)));
        self.emit(OpKind::CreateArray, id, regs, effects, own)?;
        Ok(res)
    }

    fn array_of(&self, node: NodeId, v: &Value) -> R<HeapId> {
        match v {
            Value::ArrayRef(h) => Ok(*h),
            other => fault(NotAnArray, node, format!("{} is not an array", other.type_name())),
        }
    }

    /// Resolves `a[i]` for reading (`append == false`) or writing, where writing
    /// one past the end appends. Returns the element location if it exists.
    fn element(&self, node: NodeId, heap: HeapId, index: &Value, append: bool) -> R<Option<LocationId>> {
        let Value::Number(n) = index else {
            return fault(BadArgument, node, format!("array index must be a number, got {}", index.type_name()));
        };
        let slots = &self.heap[heap as usize];
        let len = slots.len();
        if n.fract() != 0.0 || *n < 0.0 || *n > len as f64 || (*n == len as f64 && !append) {
            return fault(
                IndexOutOfBounds,
                node,
                format!("index {} out of bounds for length {len}", js_number_to_string(*n)),
            );
        }
        Ok(slots.get(*n as usize).copied())
    }

    fn member_read(&mut self, id: NodeId, own: Leaf) -> R<LocationId> {
        let node = self.p.node(id);
        let obj = self.eval(node.child(Role::Object).expect("object"))?;
        let computed = node.detail == (Detail::Member { computed: true });
        if !computed {
            let len = match self.value(obj) {
                Value::ArrayRef(h) => self.heap[h as usize].len() as f64,
                Value::String(s) => s.encode_utf16().count() as f64,
                other => return fault(NotAnArray, id, format!("{} has no length", other.type_name())),
            };
            let res = self.register();
            self.emit(
                OpKind::ReadProperty,
                id,
                vec![obj],
                vec![write(res, Value::Number(len), vec![], false, true), free(obj)],
                own,
            )?;
            return Ok(res);
        }
        let idx = self.eval(node.child(Role::Property).expect("index"))?;
        let h = self.array_of(id, &self.value(obj))?;
        let elem = self.element(id, h, &self.value(idx), false)?.expect("in bounds");
        let v = self.value(elem);
        let res = self.register();
        self.emit(
            OpKind::ReadElement,
            id,
            vec![obj, idx, elem],
            vec![write(res, v, vec![elem], true, true), free(obj), free(idx)],
            own,
        )?;
        Ok(res)
    }

    fn assignment(&mut self, id: NodeId) -> R<LocationId> {
        let node = self.p.node(id);
        let Detail::Assign(op) = node.detail else { unreachable!() };
        let target = node.child(Role::Left).expect("target");
        let rhs = node.child(Role::Right).expect("value");
        let tnode = self.p.node(target);
        if tnode.kind == NodeKind::Identifier {
            let name = tnode.name().expect("identifier").clone();
            let Some(binding) = self.lookup(&name) else {
                return fault(UndefinedVariable, target, format!("`{name}` is not defined"));
            };
            if binding.constant {
                return fault(BadArgument, id, format!("assignment to constant `{name}`"));
            }
            let loc = binding.loc;
            let value_reg = match op.binary() {
                None => self.eval(rhs)?,
                Some(bop) => {
                    let cur = self.eval(target)?;
                    let r = self.eval(rhs)?;
                    self.combine(id, bop, cur, r)?
                }
            };
            let v = self.value(value_reg);
            self.emit(
                OpKind::WriteBinding,
                id,
                vec![value_reg],
                vec![write(loc, v, vec![value_reg], true, false)],
                Leaf::Folded,
            )?;
            return Ok(value_reg);
        }

        // a[i] op= v
        let obj = self.eval(tnode.child(Role::Object).expect("object"))?;
        let idx = self.eval(tnode.child(Role::Property).expect("index"))?;
        let value_reg = match op {
            AssignOp::Assign => self.eval(rhs)?,
            _ => {
                let h = self.array_of(target, &self.value(obj))?;
                let elem = self.element(target, h, &self.value(idx), false)?.expect("in bounds");
                let cur = self.register();
                let ev = self.value(elem);
                self.emit(
                    OpKind::ReadElement,
                    target,
                    vec![obj, idx, elem],
                    vec![write(cur, ev, vec![elem], true, true)],
                    Leaf::Folded,
                )?;
                let r = self.eval(rhs)?;
                self.combine(id, op.binary().expect("compound"), cur, r)?
            }
        };
        let h = self.array_of(target, &self.value(obj))?;
        let slot = self.element(target, h, &self.value(idx), true)?;
        let (loc, fresh) = match slot {
            Some(loc) => (loc, false),
            None => {
                let index = self.heap[h as usize].len() as u32;
                let loc = self.b.alloc(Place::Element { array: h, index });
                self.heap[h as usize].push(loc);
                (loc, true)
            }
        };
        let v = self.value(value_reg);
        self.emit(
            OpKind::WriteElement,
            id,
            vec![obj, idx, value_reg],
            vec![write(loc, v, vec![value_reg], true, fresh), free(obj), free(idx)],
            Leaf::Folded,
        )?;
        Ok(value_reg)
    }

    /// Applies the arithmetic of a compound assignment as a folded operation.
    fn combine(&mut self, id: NodeId, op: BinaryOp, l: LocationId, r: LocationId) -> R<LocationId> {
        let v = match binary(op, &self.value(l), &self.value(r)) {
            Ok(v) => v,
            Err(msg) => return fault(BadArgument, id, msg),
        };
        let res = self.register();
        self.emit(
            OpKind::BinaryExpression,
            id,
            vec![l, r],
            vec![write(res, v, vec![l, r], false, true), free(l), free(r)],
            Leaf::Folded,
        )?;
        Ok(res)
    }

    fn update(&mut self, id: NodeId, own: Leaf) -> R<LocationId> {
        let node = self.p.node(id);
        let Detail::Update { op, prefix } = node.detail else { unreachable!() };
        let delta = if op == UpdateOp::Increment { 1.0 } else { -1.0 };
        let target = node.child(Role::Argument).expect("operand");
        let tnode = self.p.node(target);
        let (loc, mut reads, mut frees) = if tnode.kind == NodeKind::Identifier {
            let name = tnode.name().expect("identifier").clone();
            let Some(binding) = self.lookup(&name) else {
                return fault(UndefinedVariable, target, format!("`{name}` is not defined"));
            };
            if binding.constant {
                return fault(BadArgument, id, format!("assignment to constant `{name}`"));
            }
            (binding.loc, vec![], vec![])
        } else {
            let obj = self.eval(tnode.child(Role::Object).expect("object"))?;
            let idx = self.eval(tnode.child(Role::Property).expect("index"))?;
            let h = self.array_of(target, &self.value(obj))?;
            let elem = self.element(target, h, &self.value(idx), false)?.expect("in bounds");
            (elem, vec![obj, idx], vec![free(obj), free(idx)])
        };
        let old = match self.value(loc) {
            Value::Number(n) => n,
            other => return fault(BadArgument, id, format!("cannot increment {}", other.type_name())),
        };
        let new = old + delta;
        let res = self.register();
        reads.push(loc);
        let mut effects = vec![
            write(loc, Value::Number(new), vec![loc], false, false),
            if prefix {
                write(res, Value::Number(new), vec![loc], false, true)
            } else {
                write(res, Value::Number(old), vec![loc], true, true)
            },
        ];
        effects.append(&mut frees);
        self.emit(OpKind::UpdateValue, id, reads, effects, own)?;
        Ok(res)
    }

    fn call(&mut self, id: NodeId) -> R<LocationId> {
        let node = self.p.node(id);
        let callee = node.child(Role::Callee).expect("callee");
        let arg_nodes: Vec<NodeId> = node.children_with(Role::Argument).collect();
        let cnode = self.p.node(callee);

        if cnode.kind == NodeKind::MemberExpression {
            let prop = cnode.child(Role::Property).expect("builtin name");
            let name = self.p.node(prop).name().expect("identifier").clone();
            let mut regs = Vec::with_capacity(arg_nodes.len());
            for a in arg_nodes {
                regs.push(self.eval(a)?);
            }
            let args: Vec<Value> = regs.iter().map(|r| self.value(*r)).collect();
            let v = match call_builtin(&name, &args, &mut self.rng) {
                Ok(v) => v,
                Err(msg) => return fault(BadArgument, id, msg),
            };
            let res = self.register();
            let mut effects = vec![write(res, v, regs.clone(), false, true)];
            effects.extend(regs.iter().map(|r| free(*r)));
            self.emit(OpKind::CallBuiltin, id, regs, effects, Leaf::Folded)?;
            return Ok(res);
        }

        let f = self.eval(callee)?;
        let mut regs = Vec::with_capacity(arg_nodes.len());
        for a in arg_nodes {
            regs.push(self.eval(a)?);
        }
        let func = match self.value(f) {
            Value::FunctionRef(func) => func,
            other => {
                let name = cnode.name().map(|n| n.to_string()).unwrap_or_default();
                return fault(NotAFunction, callee, format!("`{name}` is {}, not a function", other.type_name()));
            }
        };
        if self.calls.len() > MAX_CALL_DEPTH {
            return fault(BudgetExceeded, id, format!("call depth limit of {MAX_CALL_DEPTH} exceeded"));
        }
        let fnode = self.p.node(func);
        let name = self.p.node(fnode.child(Role::Id).expect("name")).name().expect("identifier").clone();
        let params: Vec<NodeId> = fnode.children_with(Role::Param).collect();
        let body = fnode.child(Role::Body).expect("function body");

        let extra: Vec<LocationId> = regs.iter().skip(params.len()).copied().collect();
        let mut pre = vec![Effect::PushFrame { name: name.clone() }, free(f)];
        pre.extend(extra.iter().map(|r| free(*r)));
        let mut pre_reads = vec![f];
        pre_reads.extend(&extra);
        self.b.defer(&pre_reads, pre);

        let call_step = self.b.current();
        let parent = self.calls.last().and_then(|c| c.frame);
        let depth = self.calls.len() as u32;
        let frame = self.b.begin_frame(call_step, func, name, parent, depth);
        self.calls.push(CallCtx { function: Some(func), scopes: vec![Scope::default()], frame: Some(frame) });

        for (i, &param) in params.iter().enumerate() {
            let pname = self.p.node(param).name().expect("identifier").clone();
            let loc = self.declare(pname.clone(), false);
            let (reads, effects, v) = match regs.get(i) {
                Some(&r) => {
                    let v = self.value(r);
                    (vec![r], vec![write(loc, v.clone(), vec![r], true, true), free(r)], v)
                }
                None => (vec![], vec![write(loc, Value::Undefined, vec![], false, true)], Value::Undefined),
            };
            self.emit(OpKind::BindArgument, param, reads, effects, Leaf::Step(StepKind::Primitive))?;
            self.b.frame_argument(frame, pname, v);
        }
        let stmts: Vec<NodeId> = self.p.node(body).children_with(Role::Body).collect();
        self.hoist(&stmts)?;
        let mut completion = Completion::Normal;
        for s in stmts {
            completion = self.statement(s)?;
            if completion == Completion::Return {
                break;
            }
        }
        if completion == Completion::Normal {
            let res = self.register();
            self.emit(
                OpKind::ReturnValue,
                body,
                vec![],
                vec![write(res, Value::Undefined, vec![], false, true)],
                Leaf::Folded,
            )?;
            self.unwind(res, Value::Undefined);
        }
        debug_assert!(!self.b.has_pending());
        self.calls.pop();
        self.b.close();
        Ok(self.returned.take().expect("return register"))
    }
}

fn binary(op: BinaryOp, l: &Value, r: &Value) -> Result<Value, String> {
    use Value::{Boolean, Number, String as Str};
    let mismatch = || {
        Err(format!("operator `{}` does not apply to {} and {}", op.symbol(), l.type_name(), r.type_name()))
    };
    Ok(match op {
        BinaryOp::Add => match (l, r) {
            (Number(a), Number(b)) => Number(a + b),
            (Str(a), Str(b)) => Str(format!("{a}{b}").into()),
            (Str(a), Number(b)) => Str(format!("{a}{}", js_number_to_string(*b)).into()),
            (Number(a), Str(b)) => Str(format!("{}{b}", js_number_to_string(*a)).into()),
            _ => return mismatch(),
        },
        BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => {
            let (Number(a), Number(b)) = (l, r) else { return mismatch() };
            Number(match op {
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => a / b,
                _ => a % b,
            })
        }
        BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
            let ord = match (l, r) {
                (Number(a), Number(b)) => a.partial_cmp(b),
                (Str(a), Str(b)) => Some(a.encode_utf16().cmp(b.encode_utf16())),
                _ => return mismatch(),
            };
            use std::cmp::Ordering::*;
            Boolean(match (op, ord) {
                (_, None) => false,
                (BinaryOp::Lt, Some(o)) => o == Less,
                (BinaryOp::Le, Some(o)) => o != Greater,
                (BinaryOp::Gt, Some(o)) => o == Greater,
                (_, Some(o)) => o != Less,
            })
        }
        BinaryOp::StrictEq => Boolean(l.strict_equals(r)),
        BinaryOp::StrictNe => Boolean(!l.strict_equals(r)),
        BinaryOp::Eq | BinaryOp::Ne => {
            if l.type_name() != r.type_name() {
                return mismatch();
            }
            Boolean(l.strict_equals(r) == (op == BinaryOp::Eq))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(n: f64) -> Value {
        Value::Number(n)
    }

    #[test]
    fn arithmetic_and_comparison() {
        assert_eq!(binary(BinaryOp::Rem, &num(-7.0), &num(3.0)), Ok(num(-1.0)));
        assert_eq!(binary(BinaryOp::Add, &Value::String("a".into()), &num(1.5)), Ok(Value::String("a1.5".into())));
        assert_eq!(binary(BinaryOp::Lt, &num(f64::NAN), &num(1.0)), Ok(Value::Boolean(false)));
        assert_eq!(binary(BinaryOp::Ge, &num(f64::NAN), &num(1.0)), Ok(Value::Boolean(false)));
        assert_eq!(binary(BinaryOp::Lt, &Value::String("B".into()), &Value::String("a".into())), Ok(Value::Boolean(true)));
        assert!(binary(BinaryOp::Eq, &num(1.0), &Value::String("1".into())).is_err());
        assert_eq!(binary(BinaryOp::StrictNe, &num(1.0), &Value::String("1".into())), Ok(Value::Boolean(true)));
        assert!(binary(BinaryOp::Mul, &Value::Boolean(true), &num(1.0)).is_err());
    }
}
