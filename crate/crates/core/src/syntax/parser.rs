use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Names callable as `Math.<name>(...)`.
pub const MATH_BUILTINS: &[&str] = &["floor", "ceil", "abs", "min", "max", "random"];

/// Bound on syntactic nesting so that deep inputs fail cleanly instead of exhausting the stack.
pub const MAX_NESTING: u32 = 200;

const UNSUPPORTED_WORDS: &[&str] = &[
    "class", "try", "catch", "finally", "throw", "async", "await", "new", "var", "this", "switch",
    "case", "default", "do", "break", "continue", "yield", "import", "export", "typeof",
    "instanceof", "delete", "void", "in", "of", "null", "extends", "super", "with", "debugger",
    "static", "enum", "get", "set",
];

const RESERVED: &[&str] =
    &["let", "const", "function", "return", "if", "else", "for", "while", "true", "false"];

struct Raw {
    kind: NodeKind,
    start: usize,
    end: usize,
    // Extent including any wrapping parentheses; parents measure from this.
    outer_start: usize,
    outer_end: usize,
    detail: Detail,
    height: u32,
    children: Vec<(Role, Raw)>,
}

impl Raw {
    fn new(kind: NodeKind, start: usize, end: usize, detail: Detail) -> Self {
        Raw { kind, start, end, outer_start: start, outer_end: end, detail, height: 1, children: Vec::new() }
    }

    fn with(mut self, role: Role, child: Raw) -> Self {
        self.height = self.height.max(child.height + 1);
        self.children.push((role, child));
        self
    }
}

/// Which grammar production a fragment is parsed as.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fragment {
    Program,
    Statement,
    Expression,
}

pub fn parse(source: &str) -> Result<Program, ParseError> {
    parse_fragment(source, Fragment::Program)
}

/// Parses `source` as a single statement or expression, wrapped in a Program root.
///
/// For [`Fragment::Statement`] and [`Fragment::Expression`] the fragment's node is the
/// root's only child. `return` is accepted at statement level here.
pub fn parse_fragment(source: &str, fragment: Fragment) -> Result<Program, ParseError> {
    let toks = tokenize(source)?;
    let mut p = Parser { src: source, toks, pos: 0, fn_depth: 0, nesting: 0 };
    let mut root = Raw::new(NodeKind::Program, 0, source.len(), Detail::None);
    match fragment {
        Fragment::Program => {
            while !p.at_eof() {
                let stmt = p.statement()?;
                root = root.with(Role::Body, stmt);
            }
        }
        Fragment::Statement => {
            p.fn_depth = 1;
            let stmt = p.statement()?;
            root = root.with(Role::Body, stmt);
        }
        Fragment::Expression => {
            let expr = p.expression()?;
            root = root.with(Role::Expression, expr);
        }
    }
    if !p.at_eof() {
        return Err(p.unexpected("end of input"));
    }
    let lines = LineIndex::new(source);
    let mut nodes = Vec::new();
    flatten(root, None, &lines, &mut nodes);
    Ok(Program::from_parts(Arc::from(source), nodes))
}

fn flatten(raw: Raw, parent: Option<NodeId>, lines: &LineIndex, out: &mut Vec<Node>) -> NodeId {
    let id = out.len() as NodeId;
    out.push(Node {
        id,
        kind: raw.kind,
        span: lines.span(raw.start, raw.end),
        detail: raw.detail,
        parent,
        children: Vec::new(),
    });
    let children: Vec<Child> = raw
        .children
        .into_iter()
        .map(|(role, c)| Child { role, node: flatten(c, Some(id), lines, out) })
        .collect();
    out[id as usize].children = children;
    id
}

pub(crate) struct LineIndex<'a> {
    src: &'a str,
    starts: Vec<usize>,
}

impl<'a> LineIndex<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        let mut starts = vec![0];
        starts.extend(src.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { src, starts }
    }

    fn position(&self, offset: usize) -> (u32, u32) {
        let line = self.starts.partition_point(|&s| s <= offset) - 1;
        let col = self.src[self.starts[line]..offset].chars().count();
        (line as u32 + 1, col as u32 + 1)
    }

    pub(crate) fn span(&self, start: usize, end: usize) -> SourceSpan {
        let (start_line, start_col) = self.position(start);
        let (end_line, end_col) = self.position(end);
        SourceSpan { start_offset: start, end_offset: end, start_line, start_col, end_line, end_col }
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    fn_depth: u32,
    nesting: u32,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(q) if q == w)
    }

    fn eat_punct(&mut self, p: &str) -> Option<Token> {
        if self.is_punct(p) {
            Some(self.bump())
        } else {
            None
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<Token, ParseError> {
        self.eat_punct(p).ok_or_else(|| self.unexpected(&format!("`{p}`")))
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        if let Tok::Ident(w) = &t.tok {
            if UNSUPPORTED_WORDS.contains(&w.as_str()) {
                return self.unsupported(t.start, t.end, w);
            }
        }
        let found = match &t.tok {
            Tok::Eof => "end of input".to_string(),
            _ => format!("`{}`", &self.src[t.start..t.end]),
        };
        let (start, end) = if t.end > t.start { (t.start, t.end) } else { (t.start.saturating_sub(1), t.start) };
        let mut err = ParseError::at(self.src, start, end, format!("expected {expected}, found {found}"));
        err.expected = Some(expected.to_string());
        err
    }

    fn unsupported(&self, start: usize, end: usize, what: &str) -> ParseError {
        ParseError::at(self.src, start, end, format!("unsupported construct `{what}`"))
    }

    fn identifier(&mut self) -> Result<Raw, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(name) if !RESERVED.contains(&name.as_str()) => {
                if UNSUPPORTED_WORDS.contains(&name.as_str()) {
                    return Err(self.unsupported(t.start, t.end, name));
                }
                self.bump();
                Ok(Raw::new(NodeKind::Identifier, t.start, t.end, Detail::Name(Arc::from(name.as_str()))))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    // ---- statements ----

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, ParseError>) -> Result<T, ParseError> {
        if self.nesting >= MAX_NESTING {
            let t = self.peek();
            return Err(ParseError::at(self.src, t.start, t.end.max(t.start + 1), "nesting too deep"));
        }
        self.nesting += 1;
        let r = f(self);
        self.nesting -= 1;
        r
    }

    fn statement(&mut self) -> Result<Raw, ParseError> {
        self.nested(Self::statement_inner)
    }

    fn statement_inner(&mut self) -> Result<Raw, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(w) => match w.as_str() {
                "let" | "const" => {
                    let mut decl = self.declaration()?;
                    let semi = self.expect_punct(";")?;
                    decl.end = semi.end;
                    decl.outer_end = semi.end;
                    Ok(decl)
                }
                "function" => self.function(),
                "if" => self.if_statement(),
                "for" => self.for_statement(),
                "while" => self.while_statement(),
                "return" => self.return_statement(),
                w if UNSUPPORTED_WORDS.contains(&w) => Err(self.unsupported(t.start, t.end, w)),
                _ => self.expression_statement(),
            },
            Tok::Punct("{") => self.block(),
            Tok::Punct(";") => Err(self.unsupported(t.start, t.end, "empty statement")),
            _ => self.expression_statement(),
        }
    }

    fn declaration(&mut self) -> Result<Raw, ParseError> {
        let kw = self.bump();
        let kind = if self.src[kw.start..kw.end] == *"const" { DeclKind::Const } else { DeclKind::Let };
        if self.is_punct("[") || self.is_punct("{") {
            let t = self.peek();
            return Err(self.unsupported(t.start, t.end, "destructuring"));
        }
        let id = self.identifier()?;
        let mut end = id.outer_end;
        let mut node = Raw::new(NodeKind::VariableDeclaration, kw.start, end, Detail::Declaration(kind));
        node = node.with(Role::Id, id);
        if self.eat_punct("=").is_some() {
            let init = self.assignment()?;
            end = init.outer_end;
            node = node.with(Role::Init, init);
        } else if kind == DeclKind::Const {
            return Err(self.unexpected("`=` (const requires an initializer)"));
        }
        if self.is_punct(",") {
            let t = self.peek();
            return Err(self.unsupported(t.start, t.end, "multiple declarators"));
        }
        node.end = end;
        node.outer_end = end;
        Ok(node)
    }

    fn function(&mut self) -> Result<Raw, ParseError> {
        let kw = self.bump();
        if self.is_punct("*") {
            let t = self.peek();
            return Err(self.unsupported(t.start, t.end, "generator"));
        }
        let id = self.identifier()?;
        let mut node = Raw::new(NodeKind::FunctionDeclaration, kw.start, kw.end, Detail::None).with(Role::Id, id);
        self.expect_punct("(")?;
        if !self.is_punct(")") {
            loop {
                let param = self.identifier()?;
                node = node.with(Role::Param, param);
                if self.eat_punct(",").is_none() {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.fn_depth += 1;
        let body = self.block();
        self.fn_depth -= 1;
        let body = body?;
        node.end = body.outer_end;
        node.outer_end = body.outer_end;
        Ok(node.with(Role::Body, body))
    }

    fn block(&mut self) -> Result<Raw, ParseError> {
        let open = self.expect_punct("{")?;
        let mut node = Raw::new(NodeKind::BlockStatement, open.start, open.end, Detail::None);
        while !self.is_punct("}") {
            if self.at_eof() {
                return Err(self.unexpected("`}`"));
            }
            let stmt = self.statement()?;
            node = node.with(Role::Body, stmt);
        }
        let close = self.bump();
        node.end = close.end;
        node.outer_end = close.end;
        Ok(node)
    }

    fn paren_expression(&mut self) -> Result<Raw, ParseError> {
        self.expect_punct("(")?;
        let e = self.expression()?;
        self.expect_punct(")")?;
        Ok(e)
    }

    fn if_statement(&mut self) -> Result<Raw, ParseError> {
        let kw = self.bump();
        let test = self.paren_expression()?;
        let cons = self.statement()?;
        let mut end = cons.outer_end;
        let mut node = Raw::new(NodeKind::IfStatement, kw.start, end, Detail::None)
            .with(Role::Test, test)
            .with(Role::Consequent, cons);
        if self.is_word("else") {
            self.bump();
            let alt = self.statement()?;
            end = alt.outer_end;
            node = node.with(Role::Alternate, alt);
        }
        node.end = end;
        node.outer_end = end;
        Ok(node)
    }

    fn for_statement(&mut self) -> Result<Raw, ParseError> {
        let kw = self.bump();
        self.expect_punct("(")?;
        let mut node = Raw::new(NodeKind::ForStatement, kw.start, kw.end, Detail::None);
        if !self.is_punct(";") {
            let init = if self.is_word("let") || self.is_word("const") {
                self.declaration()?
            } else {
                self.expression()?
            };
            if self.is_word("of") || self.is_word("in") {
                let t = self.peek();
                return Err(self.unsupported(t.start, t.end, &format!("for-{}", &self.src[t.start..t.end])));
            }
            node = node.with(Role::Init, init);
        }
        self.expect_punct(";")?;
        if !self.is_punct(";") {
            let test = self.expression()?;
            node = node.with(Role::Test, test);
        }
        self.expect_punct(";")?;
        if !self.is_punct(")") {
            let update = self.expression()?;
            node = node.with(Role::Update, update);
        }
        self.expect_punct(")")?;
        let body = self.statement()?;
        node.end = body.outer_end;
        node.outer_end = body.outer_end;
        Ok(node.with(Role::Body, body))
    }

    fn while_statement(&mut self) -> Result<Raw, ParseError> {
        let kw = self.bump();
        let test = self.paren_expression()?;
        let body = self.statement()?;
        let end = body.outer_end;
        Ok(Raw::new(NodeKind::WhileStatement, kw.start, end, Detail::None)
            .with(Role::Test, test)
            .with(Role::Body, body))
    }

    fn return_statement(&mut self) -> Result<Raw, ParseError> {
        let kw = self.bump();
        if self.fn_depth == 0 {
            return Err(ParseError::at(self.src, kw.start, kw.end, "`return` outside of a function"));
        }
        let mut node = Raw::new(NodeKind::ReturnStatement, kw.start, kw.end, Detail::None);
        if !self.is_punct(";") {
            let arg = self.expression()?;
            node = node.with(Role::Argument, arg);
        }
        let semi = self.expect_punct(";")?;
        node.end = semi.end;
        node.outer_end = semi.end;
        Ok(node)
    }

    fn expression_statement(&mut self) -> Result<Raw, ParseError> {
        let expr = self.expression()?;
        let start = expr.outer_start;
        let semi = self.expect_punct(";")?;
        Ok(Raw::new(NodeKind::ExpressionStatement, start, semi.end, Detail::None).with(Role::Expression, expr))
    }

    // ---- expressions ----

    fn expression(&mut self) -> Result<Raw, ParseError> {
        let e = self.assignment()?;
        if self.is_punct(",") {
            let t = self.peek();
            return Err(self.unsupported(t.start, t.end, "comma operator"));
        }
        Ok(e)
    }

    fn check_target(&self, target: &Raw) -> Result<(), ParseError> {
        let ok = match target.kind {
            NodeKind::Identifier => true,
            NodeKind::MemberExpression => target.detail == Detail::Member { computed: true },
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(ParseError::at(self.src, target.start, target.end, "invalid assignment target"))
        }
    }

    fn assignment(&mut self) -> Result<Raw, ParseError> {
        self.nested(Self::assignment_inner)
    }

    fn assignment_inner(&mut self) -> Result<Raw, ParseError> {
        let lhs = self.binary(0)?;
        let op = match &self.peek().tok {
            Tok::Punct("=") => AssignOp::Assign,
            Tok::Punct("+=") => AssignOp::Add,
            Tok::Punct("-=") => AssignOp::Sub,
            Tok::Punct("*=") => AssignOp::Mul,
            Tok::Punct("/=") => AssignOp::Div,
            _ => return Ok(lhs),
        };
        self.check_target(&lhs)?;
        self.bump();
        let rhs = self.assignment()?;
        let (start, end) = (lhs.outer_start, rhs.outer_end);
        Ok(Raw::new(NodeKind::AssignmentExpression, start, end, Detail::Assign(op))
            .with(Role::Left, lhs)
            .with(Role::Right, rhs))
    }

    fn binary(&mut self, level: usize) -> Result<Raw, ParseError> {
        const LEVELS: &[&[&str]] = &[
            &["||"],
            &["&&"],
            &["==", "!=", "===", "!=="],
            &["<", "<=", ">", ">="],
            &["+", "-"],
            &["*", "/", "%"],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = match &self.peek().tok {
                Tok::Punct(p) if LEVELS[level].contains(p) => *p,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.binary(level + 1)?;
            let (kind, detail) = match op {
                "||" => (NodeKind::LogicalExpression, Detail::Logical(LogicalOp::Or)),
                "&&" => (NodeKind::LogicalExpression, Detail::Logical(LogicalOp::And)),
                _ => (NodeKind::BinaryExpression, Detail::Binary(binary_op(op))),
            };
            let (start, end) = (lhs.outer_start, rhs.outer_end);
            lhs = Raw::new(kind, start, end, detail).with(Role::Left, lhs).with(Role::Right, rhs);
            if lhs.height > MAX_NESTING {
                return Err(ParseError::at(self.src, start, end, "nesting too deep"));
            }
        }
    }

    fn unary(&mut self) -> Result<Raw, ParseError> {
        self.nested(Self::unary_inner)
    }

    fn unary_inner(&mut self) -> Result<Raw, ParseError> {
        let t = self.peek().clone();
        let detail = match &t.tok {
            Tok::Punct("-") => Some((NodeKind::UnaryExpression, Detail::Unary(UnaryOp::Neg))),
            Tok::Punct("!") => Some((NodeKind::UnaryExpression, Detail::Unary(UnaryOp::Not))),
            Tok::Punct("++") => Some((
                NodeKind::UpdateExpression,
                Detail::Update { op: UpdateOp::Increment, prefix: true },
            )),
            Tok::Punct("--") => Some((
                NodeKind::UpdateExpression,
                Detail::Update { op: UpdateOp::Decrement, prefix: true },
            )),
            Tok::Punct("+") => return Err(self.unsupported(t.start, t.end, "unary +")),
            Tok::Ident(w) if UNSUPPORTED_WORDS.contains(&w.as_str()) => {
                return Err(self.unsupported(t.start, t.end, w));
            }
            _ => None,
        };
        let Some((kind, detail)) = detail else { return self.postfix() };
        self.bump();
        let arg = self.unary()?;
        if kind == NodeKind::UpdateExpression {
            self.check_target(&arg)?;
        }
        let end = arg.outer_end;
        Ok(Raw::new(kind, t.start, end, detail).with(Role::Argument, arg))
    }

    fn postfix(&mut self) -> Result<Raw, ParseError> {
        let expr = self.call_member()?;
        let op = match &self.peek().tok {
            Tok::Punct("++") => UpdateOp::Increment,
            Tok::Punct("--") => UpdateOp::Decrement,
            _ => return Ok(expr),
        };
        self.check_target(&expr)?;
        let t = self.bump();
        let start = expr.outer_start;
        Ok(Raw::new(NodeKind::UpdateExpression, start, t.end, Detail::Update { op, prefix: false })
            .with(Role::Argument, expr))
    }

    fn call_member(&mut self) -> Result<Raw, ParseError> {
        let mut expr = self.primary()?;
        loop {
            if expr.height > MAX_NESTING {
                return Err(ParseError::at(self.src, expr.start, expr.end, "nesting too deep"));
            }
            if self.is_punct("(") {
                let callee_ok = expr.kind == NodeKind::Identifier
                    || (expr.kind == NodeKind::MemberExpression && is_math_member(&expr));
                if !callee_ok {
                    return Err(ParseError::at(self.src, expr.start, expr.end, "unsupported callee expression"));
                }
                self.bump();
                let start = expr.outer_start;
                let mut call = Raw::new(NodeKind::CallExpression, start, start, Detail::None).with(Role::Callee, expr);
                if !self.is_punct(")") {
                    loop {
                        let arg = self.assignment()?;
                        call = call.with(Role::Argument, arg);
                        if self.eat_punct(",").is_none() {
                            break;
                        }
                    }
                }
                let close = self.expect_punct(")")?;
                call.end = close.end;
                call.outer_end = close.end;
                expr = call;
            } else if self.is_punct("[") {
                if is_math_object(&expr) {
                    return Err(ParseError::at(self.src, expr.start, expr.end, "unsupported use of `Math`"));
                }
                self.bump();
                let index = self.expression()?;
                let close = self.expect_punct("]")?;
                let start = expr.outer_start;
                expr = Raw::new(NodeKind::MemberExpression, start, close.end, Detail::Member { computed: true })
                    .with(Role::Object, expr)
                    .with(Role::Property, index);
            } else if self.is_punct(".") {
                self.bump();
                let t = self.peek().clone();
                let name = match &t.tok {
                    Tok::Ident(n) => n.clone(),
                    _ => return Err(self.unexpected("property name")),
                };
                let allowed = if is_math_object(&expr) {
                    MATH_BUILTINS.contains(&name.as_str())
                } else {
                    name == "length"
                };
                if !allowed {
                    return Err(self.unsupported(t.start, t.end, &format!(".{name}")));
                }
                self.bump();
                let prop = Raw::new(NodeKind::Identifier, t.start, t.end, Detail::Name(Arc::from(name.as_str())));
                let start = expr.outer_start;
                let math = is_math_object(&expr);
                expr = Raw::new(NodeKind::MemberExpression, start, t.end, Detail::Member { computed: false })
                    .with(Role::Object, expr)
                    .with(Role::Property, prop);
                if math && !self.is_punct("(") {
                    return Err(ParseError::at(self.src, start, t.end, "`Math` members may only be called"));
                }
            } else {
                if is_math_object(&expr) {
                    return Err(ParseError::at(self.src, expr.start, expr.end, "unsupported use of `Math`"));
                }
                return Ok(expr);
            }
        }
    }

    fn primary(&mut self) -> Result<Raw, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Raw::new(NodeKind::NumericLiteral, t.start, t.end, Detail::Number(*v)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Raw::new(NodeKind::StringLiteral, t.start, t.end, Detail::String(Arc::from(s.as_str()))))
            }
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.bump();
                Ok(Raw::new(NodeKind::BooleanLiteral, t.start, t.end, Detail::Boolean(w == "true")))
            }
            Tok::Ident(w) if w == "function" => Err(self.unsupported(t.start, t.end, "function expression")),
            Tok::Ident(_) => self.identifier(),
            Tok::Punct("(") => {
                self.bump();
                let mut inner = self.expression()?;
                let close = self.expect_punct(")")?;
                inner.outer_start = t.start;
                inner.outer_end = close.end;
                Ok(inner)
            }
            Tok::Punct("[") => {
                self.bump();
                let mut node = Raw::new(NodeKind::ArrayExpression, t.start, t.end, Detail::None);
                if !self.is_punct("]") {
                    loop {
                        let el = self.assignment()?;
                        node = node.with(Role::Element, el);
                        if self.eat_punct(",").is_none() {
                            break;
                        }
                        if self.is_punct("]") {
                            break;
                        }
                    }
                }
                let close = self.expect_punct("]")?;
                node.end = close.end;
                node.outer_end = close.end;
                Ok(node)
            }
            Tok::Punct("{") => Err(self.unsupported(t.start, t.end, "object literal")),
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn is_math_object(raw: &Raw) -> bool {
    raw.kind == NodeKind::Identifier && matches!(&raw.detail, Detail::Name(n) if &**n == "Math")
}

fn is_math_member(raw: &Raw) -> bool {
    raw.kind == NodeKind::MemberExpression && raw.children.first().is_some_and(|(_, o)| is_math_object(o))
}

fn binary_op(p: &str) -> BinaryOp {
    match p {
        "+" => BinaryOp::Add,
        "-" => BinaryOp::Sub,
        "*" => BinaryOp::Mul,
        "/" => BinaryOp::Div,
        "%" => BinaryOp::Rem,
        "<" => BinaryOp::Lt,
        "<=" => BinaryOp::Le,
        ">" => BinaryOp::Gt,
        ">=" => BinaryOp::Ge,
        "==" => BinaryOp::Eq,
        "!=" => BinaryOp::Ne,
        "===" => BinaryOp::StrictEq,
        "!==" => BinaryOp::StrictNe,
        _ => unreachable!("not a binary operator: {p}"),
    }
}
