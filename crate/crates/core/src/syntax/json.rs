use serde_json::{json, Value};

use super::{NodeId, Program};

/// AST as nested JSON: `{id, kind, span, detail, roles, children}` where `roles[i]`
/// labels `children[i]`.
pub fn ast_to_json(program: &Program) -> Value {
    node_json(program, 0)
}

fn node_json(program: &Program, id: NodeId) -> Value {
    let node = program.node(id);
    let roles: Vec<Value> = node.children.iter().map(|c| json!(c.role)).collect();
    let children: Vec<Value> = node.children.iter().map(|c| node_json(program, c.node)).collect();
    json!({
        "id": node.id,
        "kind": node.kind,
        "span": node.span,
        "detail": node.detail,
        "roles": roles,
        "children": children,
    })
}
