use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

/// Preorder index of a node within its [`Program`].
pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum NodeKind {
    Program,
    FunctionDeclaration,
    BlockStatement,
    VariableDeclaration,
    ExpressionStatement,
    IfStatement,
    ForStatement,
    WhileStatement,
    ReturnStatement,
    AssignmentExpression,
    UpdateExpression,
    BinaryExpression,
    UnaryExpression,
    LogicalExpression,
    CallExpression,
    MemberExpression,
    ArrayExpression,
    Identifier,
    NumericLiteral,
    BooleanLiteral,
    StringLiteral,
}

impl NodeKind {
    pub fn is_statement(self) -> bool {
        matches!(
            self,
            NodeKind::FunctionDeclaration
                | NodeKind::BlockStatement
                | NodeKind::VariableDeclaration
                | NodeKind::ExpressionStatement
                | NodeKind::IfStatement
                | NodeKind::ForStatement
                | NodeKind::WhileStatement
                | NodeKind::ReturnStatement
        )
    }

    pub fn is_loop(self) -> bool {
        matches!(self, NodeKind::ForStatement | NodeKind::WhileStatement)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Label of a child edge, e.g. the `test` of a `for` statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Role {
    Body,
    Id,
    Param,
    Init,
    Test,
    Update,
    Consequent,
    Alternate,
    Expression,
    Argument,
    Left,
    Right,
    Callee,
    Object,
    Property,
    Element,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    StrictEq,
    StrictNe,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::StrictEq => "===",
            BinaryOp::StrictNe => "!==",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum LogicalOp {
    And,
    Or,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
}

impl AssignOp {
    /// The arithmetic applied before storing, `None` for plain `=`.
    pub fn binary(self) -> Option<BinaryOp> {
        match self {
            AssignOp::Assign => None,
            AssignOp::Add => Some(BinaryOp::Add),
            AssignOp::Sub => Some(BinaryOp::Sub),
            AssignOp::Mul => Some(BinaryOp::Mul),
            AssignOp::Div => Some(BinaryOp::Div),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum UpdateOp {
    Increment,
    Decrement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum DeclKind {
    Let,
    Const,
}

/// Kind-specific payload of a node.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", content = "value", rename_all = "camelCase")]
pub enum Detail {
    None,
    Name(Arc<str>),
    Number(f64),
    Boolean(bool),
    String(Arc<str>),
    Binary(BinaryOp),
    Logical(LogicalOp),
    Unary(UnaryOp),
    Assign(AssignOp),
    Update { op: UpdateOp, prefix: bool },
    Declaration(DeclKind),
    Member { computed: bool },
}

/// Byte range plus 1-based line/column of both ends. Columns count characters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct SourceSpan {
    pub start_offset: usize,
    pub end_offset: usize,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn len(&self) -> usize {
        self.end_offset - self.start_offset
    }

    pub fn is_empty(&self) -> bool {
        self.end_offset == self.start_offset
    }

    pub fn contains(&self, start: usize, end: usize) -> bool {
        self.start_offset <= start && end <= self.end_offset
    }
}

impl Serialize for SourceSpan {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SourceSpan", 6)?;
        st.serialize_field("startOffset", &self.start_offset)?;
        st.serialize_field("endOffset", &self.end_offset)?;
        st.serialize_field("startLine", &self.start_line)?;
        st.serialize_field("startCol", &self.start_col)?;
        st.serialize_field("endLine", &self.end_line)?;
        st.serialize_field("endCol", &self.end_col)?;
        st.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Child {
    pub role: Role,
    pub node: NodeId,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub span: SourceSpan,
    pub detail: Detail,
    pub parent: Option<NodeId>,
    pub children: Vec<Child>,
}

impl Node {
    pub fn child(&self, role: Role) -> Option<NodeId> {
        self.children.iter().find(|c| c.role == role).map(|c| c.node)
    }

    pub fn children_with(&self, role: Role) -> impl Iterator<Item = NodeId> + '_ {
        self.children.iter().filter(move |c| c.role == role).map(|c| c.node)
    }

    pub fn name(&self) -> Option<&Arc<str>> {
        match &self.detail {
            Detail::Name(n) => Some(n),
            _ => None,
        }
    }
}

/// A parsed program: the source text and its nodes in preorder (`nodes[id].id == id`).
#[derive(Clone, Debug)]
pub struct Program {
    source: Arc<str>,
    nodes: Vec<Node>,
}

impl Program {
    pub(crate) fn from_parts(source: Arc<str>, nodes: Vec<Node>) -> Self {
        Program { source, nodes }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn get(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id as usize)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 1
    }

    pub fn text(&self, id: NodeId) -> &str {
        let span = self.node(id).span;
        &self.source[span.start_offset..span.end_offset]
    }

    /// True if `ancestor` lies on the path from the root to `id` (inclusive).
    pub fn is_ancestor(&self, ancestor: NodeId, mut id: NodeId) -> bool {
        loop {
            if id == ancestor {
                return true;
            }
            match self.node(id).parent {
                Some(p) => id = p,
                None => return false,
            }
        }
    }

    /// Nearest enclosing function declaration of `id`, excluding `id` itself.
    pub fn enclosing_function(&self, id: NodeId) -> Option<NodeId> {
        let mut cur = self.node(id).parent;
        while let Some(p) = cur {
            if self.node(p).kind == NodeKind::FunctionDeclaration {
                return Some(p);
            }
            cur = self.node(p).parent;
        }
        None
    }

    /// Structural equality of two subtrees, ignoring ids and spans.
    pub fn same_shape(&self, a: NodeId, other: &Program, b: NodeId) -> bool {
        let na = self.node(a);
        let nb = other.node(b);
        na.kind == nb.kind
            && na.detail == nb.detail
            && na.children.len() == nb.children.len()
            && na
                .children
                .iter()
                .zip(&nb.children)
                .all(|(ca, cb)| ca.role == cb.role && self.same_shape(ca.node, other, cb.node))
    }
}
