//! Declaration-use chains over a construct tree.
//!
//! A declaration is visible from the point it is written to the end of its
//! scope, the nearest enclosing scope-forming construct. A use resolves to
//! the latest visible declaration with the same name in the innermost scope
//! that has one.

use std::collections::HashMap;

use serde::Serialize;

use super::{AnnotationSet, CId, ConstructTree, Role};
use crate::grammar::{NodeKind, ParseTree, TerminalKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Def {
    pub name: String,
    pub type_label: String,
    pub node: CId,
    pub scope: CId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Use {
    pub name: String,
    pub node: CId,
    /// Index into [`DeclUseChains::defs`].
    pub def: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct DeclUseChains {
    pub defs: Vec<Def>,
    /// Sorted by token position.
    pub uses: Vec<Use>,
    def_at: HashMap<CId, usize>,
    /// per scope construct, the defs declared directly in it (source order)
    by_scope: HashMap<CId, Vec<usize>>,
}

/// Token carrying the name of a def or use node: its first non-literal
/// token.
pub fn name_token(tree: &ParseTree, ct: &ConstructTree, id: CId) -> Option<usize> {
    let span = ct.node(id).span;
    let g = tree.grammar();
    (span.start..span.end)
        .find(|i| !matches!(g.terminal(tree.tokens()[*i].class).kind, TerminalKind::Literal(_)))
        .or_else(|| (span.start < tree.tokens().len()).then_some(span.start))
}

pub(crate) fn node_name(tree: &ParseTree, ct: &ConstructTree, id: CId) -> String {
    name_token(tree, ct, id)
        .map(|i| tree.tokens()[i].text.clone())
        .unwrap_or_default()
}

/// Scope a node declared at `id` would belong to: its nearest scope-forming
/// proper ancestor.
pub fn scope_of(ct: &ConstructTree, ann: &AnnotationSet, id: CId) -> CId {
    ct.ancestors(id)
        .find(|a| ann.is_scope(ct.label(*a)) || *a == ct.root())
        .unwrap_or(ct.root())
}

pub fn resolve_decl_use(tree: &ParseTree, ct: &ConstructTree, ann: &AnnotationSet) -> DeclUseChains {
    let mut chains = DeclUseChains::default();
    let (Some(use_l), Some(def_l)) = (ann.role_label(Role::Use), ann.role_label(Role::Def)) else {
        return chains;
    };
    let type_l = ann.role_label(Role::Type);
    let type_nodes: Vec<CId> = match type_l {
        Some(l) => ct.ids().filter(|c| ct.label(*c) == l).collect(),
        None => Vec::new(),
    };

    for id in ct.ids() {
        if ct.label(id) != def_l {
            continue;
        }
        let scope = scope_of(ct, ann, id);
        let idx = chains.defs.len();
        chains.defs.push(Def {
            name: node_name(tree, ct, id),
            type_label: type_label(tree, ct, id, &type_nodes),
            node: id,
            scope,
        });
        chains.def_at.insert(id, idx);
        chains.by_scope.entry(scope).or_default().push(idx);
    }

    for id in ct.ids() {
        if ct.label(id) != use_l {
            continue;
        }
        let name = node_name(tree, ct, id);
        let pos = ct.node(id).span.start;
        let def = chains.lookup(ct, ann, scope_of(ct, ann, id), &name, pos);
        chains.uses.push(Use {
            name,
            node: id,
            def,
        });
    }
    chains.uses.sort_by_key(|u| ct.node(u.node).span.start);
    chains
}

/// Type label of a declaration: the text of the nearest type construct
/// found while climbing from the declaration up to its repeatable unit,
/// plus `[]` for every `[` inside the declaration itself.
fn type_label(tree: &ParseTree, ct: &ConstructTree, def: CId, types: &[CId]) -> String {
    let g = tree.grammar();
    let dspan = ct.node(def).span;
    let dparse = ct.node(def).parse;
    let mut cur = Some(dparse);
    let mut found: Option<CId> = None;
    while let Some(a) = cur {
        let aspan = tree.node(a).span;
        let best = types
            .iter()
            .copied()
            .filter(|t| {
                let tp = ct.node(*t).parse;
                aspan.contains(&ct.node(*t).span)
                    && tree.is_ancestor_or_self(a, tp)
                    && !inside_foreign_unit(tree, a, tp, dparse)
            })
            .min_by_key(|t| {
                let s = ct.node(*t).span;
                let dist = if s.end <= dspan.start {
                    dspan.start - s.end
                } else {
                    s.start.saturating_sub(dspan.end)
                };
                (dist, s.start)
            });
        if best.is_some() {
            found = best;
            break;
        }
        let is_unit = matches!(tree.node(a).kind, NodeKind::Rule(r) if g.is_repeatable(r));
        if is_unit {
            break;
        }
        cur = tree.node(a).parent;
    }
    let mut label = match found {
        Some(t) => tree.normalized_text(ct.node(t).parse),
        None => String::new(),
    };
    let brackets = tree.tokens()[dspan.start..dspan.end]
        .iter()
        .filter(|t| t.text == "[")
        .count();
    for _ in 0..brackets {
        label.push_str("[]");
    }
    label
}

/// Is `node` inside a repeatable unit below `top` that does not also hold
/// `def`?
fn inside_foreign_unit(
    tree: &ParseTree,
    top: crate::grammar::NodeId,
    node: crate::grammar::NodeId,
    def: crate::grammar::NodeId,
) -> bool {
    let g = tree.grammar();
    let mut cur = Some(node);
    while let Some(n) = cur {
        if n == top {
            return false;
        }
        if let NodeKind::Rule(r) = tree.node(n).kind {
            if g.is_repeatable(r) && !tree.is_ancestor_or_self(n, def) {
                return true;
            }
        }
        cur = tree.node(n).parent;
    }
    false
}

impl DeclUseChains {
    /// Resolve `name` as if used at token `pos` inside `scope`.
    pub fn lookup(
        &self,
        ct: &ConstructTree,
        ann: &AnnotationSet,
        scope: CId,
        name: &str,
        pos: usize,
    ) -> Option<usize> {
        let mut s = Some(scope);
        while let Some(sc) = s {
            if ann.is_scope(ct.label(sc)) || sc == ct.root() {
                if let Some(ds) = self.by_scope.get(&sc) {
                    let hit = ds
                        .iter()
                        .copied()
                        .filter(|d| {
                            self.defs[*d].name == name && ct.node(self.defs[*d].node).span.start < pos
                        })
                        .max_by_key(|d| ct.node(self.defs[*d].node).span.start);
                    if hit.is_some() {
                        return hit;
                    }
                }
            }
            s = ct.node(sc).parent;
        }
        None
    }

    /// Every def reachable by name from token `pos` inside `scope`, one per
    /// name (the one a use there would resolve to), in source order.
    pub fn visible(
        &self,
        ct: &ConstructTree,
        ann: &AnnotationSet,
        scope: CId,
        pos: usize,
    ) -> Vec<usize> {
        let mut names: Vec<&str> = self.defs.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        let mut out: Vec<usize> = names
            .into_iter()
            .filter_map(|n| self.lookup(ct, ann, scope, n, pos))
            .collect();
        out.sort_by_key(|d| ct.node(self.defs[*d].node).span.start);
        out
    }

    pub fn def_of_node(&self, id: CId) -> Option<usize> {
        self.def_at.get(&id).copied()
    }

    pub fn unresolved_count(&self) -> usize {
        self.uses.iter().filter(|u| u.def.is_none()).count()
    }

    /// Uses whose node lies inside the token range of `id`.
    pub fn uses_within<'a>(&'a self, ct: &'a ConstructTree, id: CId) -> impl Iterator<Item = &'a Use> + 'a {
        let span = ct.node(id).span;
        let lo = self
            .uses
            .partition_point(|u| ct.node(u.node).span.start < span.start);
        self.uses[lo..]
            .iter()
            .take_while(move |u| ct.node(u.node).span.start < span.end)
            .filter(move |u| span.contains(&ct.node(u.node).span))
    }
}

/// Does `ctx` contain `nodes`: every use inside each node resolves to a
/// declaration inside `ctx` or inside that node itself.
pub fn contains(ct: &ConstructTree, chains: &DeclUseChains, ctx: CId, nodes: &[CId]) -> bool {
    nodes.iter().all(|n| {
        debug_assert!(ct.is_ancestor_or_self(ctx, *n), "node outside context");
        chains.uses_within(ct, *n).all(|u| match u.def {
            Some(d) => {
                let dn = chains.defs[d].node;
                ct.is_ancestor_or_self(ctx, dn) || ct.is_ancestor_or_self(*n, dn)
            }
            None => false,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::constructs::translate;
    use crate::grammar::parse;

    fn chains_for(src: &str) -> (ParseTree, ConstructTree, DeclUseChains) {
        let lang = builtin::mini_c();
        let t = parse(&lang.grammar, src).unwrap();
        let ct = translate(&t, &lang.ann);
        let ch = resolve_decl_use(&t, &ct, &lang.ann);
        (t, ct, ch)
    }

    #[test]
    fn undeclared_use_is_unresolved() {
        let (_, _, ch) = chains_for("int f(int a) { return a + z; }");
        assert_eq!(ch.unresolved_count(), 1);
        assert_eq!(ch.uses.iter().find(|u| u.def.is_none()).unwrap().name, "z");
    }

    #[test]
    fn shadowing_inner_loop() {
        let src = "void f(int n) {\n\
                   for (int i = 0; i < n; i++) {\n\
                     for (int i = 0; i < 2; i++) {\n\
                       g(i);\n\
                     }\n\
                     h(i);\n\
                   }\n\
                   }";
        let (t, ct, ch) = chains_for(src);
        let defs_i: Vec<usize> = ch
            .defs
            .iter()
            .filter(|d| d.name == "i")
            .map(|d| ct.node(d.node).span.start)
            .collect();
        assert_eq!(defs_i.len(), 2);
        let (outer, inner) = (defs_i[0], defs_i[1]);
        let call_arg = |callee: &str| {
            let pos = t.tokens().iter().position(|tk| tk.text == callee).unwrap() + 2;
            let u = ch.uses.iter().find(|u| ct.node(u.node).span.start == pos).unwrap();
            u.def.map(|d| ct.node(ch.defs[d].node).span.start)
        };
        assert_eq!(call_arg("g"), Some(inner));
        assert_eq!(call_arg("h"), Some(outer));
        assert_eq!(ch.unresolved_count(), 0);
    }

    #[test]
    fn type_labels() {
        let (_, _, ch) = chains_for(
            "float w[4];\nint f(int a[], int n) { float s = 0.5, t; for (int i = 0; i < n; i++) { s += a[i]; } return n; }",
        );
        let ty = |n: &str| ch.defs.iter().find(|d| d.name == n).unwrap().type_label.clone();
        assert_eq!(ty("w"), "float[]");
        assert_eq!(ty("a"), "int[]");
        assert_eq!(ty("n"), "int");
        assert_eq!(ty("s"), "float");
        assert_eq!(ty("t"), "float");
        assert_eq!(ty("i"), "int");
    }

    #[test]
    fn use_before_def_is_unresolved() {
        let (_, _, ch) = chains_for("void f() { x = 1; int x = 2; }");
        assert_eq!(ch.unresolved_count(), 1);
    }

    #[test]
    fn contains_respects_context() {
        let src = "int g;\nvoid f(int n) { for (int i = 0; i < n; i++) { g += i; } }";
        let (_, ct, ch) = chains_for(src);
        let lang = builtin::mini_c();
        let func = ct.node(ct.root()).children.iter().copied()
            .find(|c| lang.ann.label_name(ct.label(*c)) == "FUNC_").unwrap();
        let lp = ct.node(func).children.iter().copied()
            .find(|c| lang.ann.is_a_named(ct.label(*c), "LOOPS_")).unwrap();
        // `g` is declared outside the function
        assert!(!contains(&ct, &ch, func, &[lp]));
        assert!(contains(&ct, &ch, ct.root(), &[lp]));
        // a node with no uses is contained by any ancestor
        let def_i = ct.node(lp).children[0];
        assert!(contains(&ct, &ch, func, &[def_i]));
    }
}
