//! Named node predicates that annotation files can refer to.
//!
//! Predicates look only at token texts and the shape of the parse tree, so
//! the same library serves every grammar whose operators are spelled the
//! usual way.

use crate::grammar::{NodeId, ParseTree, TerminalKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Predicate {
    IsArith,
    IsLogical,
    IsLiteralArray,
    IsArrayAccess,
    IsCall,
    IsMemref,
}

const ARITH_OPS: &[&str] = &["+", "-", "*", "/", "%", "+=", "-=", "*=", "/=", "%="];
const LOGICAL_OPS: &[&str] = &["&&", "||", "!", "==", "!=", "<", ">", "<=", ">="];

impl Predicate {
    pub const ALL: [Predicate; 6] = [
        Predicate::IsArith,
        Predicate::IsLogical,
        Predicate::IsLiteralArray,
        Predicate::IsArrayAccess,
        Predicate::IsCall,
        Predicate::IsMemref,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::IsArith => "isarith",
            Predicate::IsLogical => "islogical",
            Predicate::IsLiteralArray => "is_literal_array",
            Predicate::IsArrayAccess => "is_array_access",
            Predicate::IsCall => "is_call",
            Predicate::IsMemref => "is_memref",
        }
    }

    pub fn from_name(name: &str) -> Option<Predicate> {
        Predicate::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn eval(self, tree: &ParseTree, id: NodeId) -> bool {
        match self {
            // a binary or compound-assignment arithmetic operator directly
            // under the node; a bare literal does not count
            Predicate::IsArith => direct_tokens(tree, id).any(|t| {
                ARITH_OPS.contains(&t)
                    || (t.starts_with("arith.")
                        && !t.starts_with("arith.cmp")
                        && t != "arith.constant"
                        && t != "arith.select")
            }),
            Predicate::IsLogical => direct_tokens(tree, id).any(|t| {
                LOGICAL_OPS.contains(&t) || t.starts_with("arith.cmp") || t == "arith.select"
            }),
            Predicate::IsLiteralArray => {
                let span = tree.node(id).span;
                let toks = &tree.tokens()[span.start..span.end];
                toks.first().is_some_and(|t| t.text == "{") || toks.iter().any(|t| t.text == "dense")
            }
            Predicate::IsArrayAccess => direct_tokens(tree, id).any(|t| t == "["),
            Predicate::IsCall => {
                let node = tree.node(id);
                if direct_tokens(tree, id).any(|t| t.ends_with(".call")) {
                    return true;
                }
                // callee token immediately followed by '('
                node.children.windows(2).any(|w| {
                    let (a, b) = (tree.node(w[0]), tree.node(w[1]));
                    a.token.is_some()
                        && !is_literal(tree, w[0])
                        && b.token.is_some_and(|t| tree.tokens()[t].text == "(")
                })
            }
            Predicate::IsMemref => direct_tokens(tree, id).any(|t| t.starts_with("memref.")),
        }
    }
}

fn direct_tokens<'a>(tree: &'a ParseTree, id: NodeId) -> impl Iterator<Item = &'a str> + 'a {
    tree.node(id)
        .children
        .iter()
        .filter_map(move |c| tree.node(*c).token)
        .map(move |t| tree.tokens()[t].text.as_str())
}

fn is_literal(tree: &ParseTree, id: NodeId) -> bool {
    match tree.node(id).kind {
        crate::grammar::NodeKind::Token(t) => {
            matches!(tree.grammar().terminal(t).kind, TerminalKind::Literal(_))
        }
        crate::grammar::NodeKind::Rule(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::grammar::parse_rule;

    fn eval_on(rule: &str, src: &str, p: Predicate) -> bool {
        let lang = builtin::mini_c();
        let t = parse_rule(&lang.grammar, rule, src).unwrap();
        p.eval(&t, t.root())
    }

    #[test]
    fn arith_needs_an_operator() {
        assert!(eval_on("addExpr", "a + 1", Predicate::IsArith));
        assert!(eval_on("assignExpr", "s += x", Predicate::IsArith));
        assert!(!eval_on("assignExpr", "s = x", Predicate::IsArith));
        assert!(!eval_on("addExpr", "42", Predicate::IsArith));
    }

    #[test]
    fn call_and_array_access() {
        assert!(eval_on("postfixExpr", "f(x, 2)", Predicate::IsCall));
        assert!(!eval_on("postfixExpr", "a[2]", Predicate::IsCall));
        assert!(eval_on("postfixExpr", "a[2]", Predicate::IsArrayAccess));
    }

    #[test]
    fn literal_array_and_logical() {
        assert!(eval_on("initializer", "{1, 2, 3}", Predicate::IsLiteralArray));
        assert!(!eval_on("initializer", "3", Predicate::IsLiteralArray));
        assert!(eval_on("relExpr", "i < n", Predicate::IsLogical));
        assert!(eval_on("logicalAndExpr", "a && b", Predicate::IsLogical));
    }

    #[test]
    fn names_round_trip() {
        for p in Predicate::ALL {
            assert_eq!(Predicate::from_name(p.name()), Some(p));
        }
        assert_eq!(Predicate::from_name("is_vector"), None);
    }
}
