//! Lexing and recursive-descent parsing of the supported JavaScript subset.
//!
//! Statements: `let`/`const` (one declarator), assignment (`=`, `+=`, `-=`, `*=`, `/=`),
//! `++`/`--`, `if`/`else`, C-style `for`, `while`, `function`, `return`, blocks and
//! expression statements. Semicolons are mandatory.
//!
//! Expressions: number, boolean and string literals, array literals, identifiers,
//! `a[i]`, `a.length`, calls, arithmetic/comparison/equality operators, `&&`, `||`,
//! unary `-` and `!`, and calls to `Math.floor/ceil/abs/min/max/random`.

mod ast;
mod json;
mod lexer;
mod parser;

use serde::Serialize;
use thiserror::Error;

pub use ast::*;
pub use json::ast_to_json;
pub use parser::{parse, parse_fragment, Fragment, MATH_BUILTINS};

#[derive(Clone, Debug, Error, Serialize)]
#[error("{message} at {}:{}", span.start_line, span.start_col)]
pub struct ParseError {
    pub message: String,
    pub span: SourceSpan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
}

impl ParseError {
    pub(crate) fn at(src: &str, start: usize, end: usize, message: impl Into<String>) -> Self {
        let end = end.min(src.len());
        let start = start.min(end);
        ParseError {
            message: message.into(),
            span: parser::LineIndex::new(src).span(start, end),
            expected: None,
        }
    }
}

/// Innermost node whose span contains `[start, end)`; the root if nothing smaller does.
///
/// Sibling spans never overlap, so a single descent from the root suffices. Among
/// a parent and a child with identical spans the child wins.
pub fn node_at(program: &Program, start: usize, end: usize) -> &Node {
    let mut cur = program.root();
    'descend: loop {
        for c in &cur.children {
            let child = program.node(c.node);
            if child.span.contains(start, end) {
                cur = child;
                continue 'descend;
            }
        }
        return cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(p: &Program) -> Vec<NodeKind> {
        p.nodes().iter().map(|n| n.kind).collect()
    }

    #[test]
    fn let_with_binary_init() {
        let p = parse("let x = 1 + 2;").unwrap();
        use NodeKind::*;
        assert_eq!(
            kinds(&p),
            vec![Program, VariableDeclaration, Identifier, BinaryExpression, NumericLiteral, NumericLiteral]
        );
        assert_eq!(p.text(3), "1 + 2");
        assert_eq!(p.node(1).child(Role::Init), Some(3));
    }

    #[test]
    fn empty_program() {
        let p = parse("").unwrap();
        assert_eq!(p.len(), 1);
        assert!(p.root().children.is_empty());
    }

    #[test]
    fn for_roles() {
        let p = parse("for (let i = 0; i < 1; i++) {}").unwrap();
        let f = p.node(1);
        assert_eq!(f.kind, NodeKind::ForStatement);
        let roles: Vec<Role> = f.children.iter().map(|c| c.role).collect();
        assert_eq!(roles, vec![Role::Init, Role::Test, Role::Update, Role::Body]);
        assert_eq!(p.text(f.child(Role::Init).unwrap()), "let i = 0");
        assert_eq!(p.text(f.child(Role::Test).unwrap()), "i < 1");
    }

    #[test]
    fn rejects_class() {
        let err = parse("class A {}").unwrap_err();
        assert!(err.message.contains("`class`"), "{}", err.message);
        assert_eq!(err.span.start_offset, 0);
    }

    #[test]
    fn rejects_other_constructs() {
        for src in ["try { } catch (e) { }", "async function f() {}", "var x = 1;", "let x = 1", "let {a} = b;", "x = {};", "a.push(1);", "f()();", "let a = 1, b = 2;", "return 1;"] {
            assert!(parse(src).is_err(), "{src} should fail");
        }
    }

    #[test]
    fn parenthesized_spans_cover_parens_in_parent() {
        let p = parse("let y = (a + b) * c;").unwrap();
        let mul = p.node(1).child(Role::Init).unwrap();
        assert_eq!(p.text(mul), "(a + b) * c");
        let add = p.node(mul).child(Role::Left).unwrap();
        assert_eq!(p.text(add), "a + b");
    }

    #[test]
    fn precedence() {
        let p = parse_fragment("a || b && c < d + e * -f", Fragment::Expression).unwrap();
        let e = p.node(1);
        assert_eq!(e.detail, Detail::Logical(LogicalOp::Or));
        let and = p.node(e.child(Role::Right).unwrap());
        assert_eq!(and.detail, Detail::Logical(LogicalOp::And));
    }

    #[test]
    fn math_and_length_members() {
        let p = parse("let n = Math.max(a.length, 2);").unwrap();
        assert!(p.nodes().iter().any(|n| n.kind == NodeKind::CallExpression));
        assert!(parse("let m = Math.floor;").is_err());
        assert!(parse("let m = Math.sqrt(2);").is_err());
        assert!(parse("a.length = 3;").is_err());
    }

    #[test]
    fn line_columns() {
        let p = parse("let a = 1;\nlet bb = 22;").unwrap();
        let second = p.node(p.root().children[1].node);
        assert_eq!((second.span.start_line, second.span.start_col), (2, 1));
        assert_eq!((second.span.end_line, second.span.end_col), (2, 13));
    }

    #[test]
    fn node_at_innermost() {
        let src = "for (let i = 0; i < 1; i++) { x = i; }";
        let p = parse(src).unwrap();
        let s = src.find("i < 1").unwrap();
        assert_eq!(node_at(&p, s, s + 5).kind, NodeKind::BinaryExpression);
        let x = src.find("x =").unwrap();
        assert_eq!(node_at(&p, x, x).kind, NodeKind::Identifier);
        let b = src.find('{').unwrap();
        assert_eq!(node_at(&p, b, src.len()).kind, NodeKind::BlockStatement);
        assert_eq!(node_at(&p, 0, src.len()).kind, NodeKind::ForStatement);
    }
}
