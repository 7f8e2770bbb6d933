use serde::Serialize;

use super::{AnnotationSet, Label, Matcher};
use crate::grammar::{NodeId, NodeKind, ParseTree, TokenSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CId(pub usize);

#[derive(Debug, Clone)]
pub struct CNode {
    pub label: Label,
    pub parse: NodeId,
    pub children: Vec<CId>,
    pub parent: Option<CId>,
    pub depth: usize,
    pub span: TokenSpan,
}

/// Construct tree in preorder; index 0 is the synthetic `PROGRAM_` root.
#[derive(Debug, Clone)]
pub struct ConstructTree {
    nodes: Vec<CNode>,
    /// parse node index -> construct translated from it
    of_parse: Vec<Option<CId>>,
}

/// Translate a parse tree into its construct tree. When several
/// definitions match a node the most specific wins (predicate, then rule
/// set), ties going to the one declared first. A node is folded into its
/// nearest construct ancestor when both cover the same tokens with the same
/// type.
pub fn translate(tree: &ParseTree, ann: &AnnotationSet) -> ConstructTree {
    let root = tree.root();
    let mut ct = ConstructTree {
        nodes: vec![CNode {
            label: ann.program(),
            parse: root,
            children: Vec::new(),
            parent: None,
            depth: 0,
            span: tree.node(root).span,
        }],
        of_parse: vec![None; tree.len()],
    };
    // preorder walk carrying the nearest construct ancestor
    let mut work: Vec<(NodeId, CId)> = tree
        .node(root)
        .children
        .iter()
        .rev()
        .map(|c| (*c, CId(0)))
        .collect();
    if let Some(label) = best_match(tree, ann, root) {
        // the start rule itself is annotated: it becomes the only child of
        // the synthetic root
        let id = ct.push(label, root, CId(0), tree);
        work.iter_mut().for_each(|w| w.1 = id);
    }
    while let Some((id, parent)) = work.pop() {
        let node = tree.node(id);
        let mut here = parent;
        if let NodeKind::Rule(_) = node.kind {
            if let Some(label) = best_match(tree, ann, id) {
                let p = &ct.nodes[parent.0];
                if !(p.label == label && p.span == node.span) {
                    here = ct.push(label, id, parent, tree);
                }
            }
        }
        for c in node.children.iter().rev() {
            work.push((*c, here));
        }
    }
    ct
}

fn best_match(tree: &ParseTree, ann: &AnnotationSet, id: NodeId) -> Option<Label> {
    let rule = tree.rule_of(id)?;
    ann.candidates(rule).iter().find_map(|i| {
        let d = &ann.defs[*i];
        match &d.matcher {
            Matcher::Rules(_) => Some(d.label),
            Matcher::Pred { pred, .. } => pred.eval(tree, id).then_some(d.label),
            Matcher::Union(_) => None,
        }
    })
}

impl ConstructTree {
    fn push(&mut self, label: Label, parse: NodeId, parent: CId, tree: &ParseTree) -> CId {
        let id = CId(self.nodes.len());
        let depth = self.nodes[parent.0].depth + 1;
        self.nodes.push(CNode {
            label,
            parse,
            children: Vec::new(),
            parent: Some(parent),
            depth,
            span: tree.node(parse).span,
        });
        self.nodes[parent.0].children.push(id);
        self.of_parse[parse.0] = Some(id);
        id
    }

    pub fn root(&self) -> CId {
        CId(0)
    }

    pub fn node(&self, id: CId) -> &CNode {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = CId> {
        (0..self.nodes.len()).map(CId)
    }

    pub fn label(&self, id: CId) -> Label {
        self.nodes[id.0].label
    }

    /// Construct translated from exactly this parse node, if any.
    pub fn of_parse(&self, id: NodeId) -> Option<CId> {
        self.of_parse.get(id.0).copied().flatten()
    }

    /// Nearest construct whose parse node is `id` or one of its ancestors.
    pub fn enclosing(&self, tree: &ParseTree, id: NodeId) -> CId {
        if let Some(c) = self.of_parse(id) {
            return c;
        }
        tree.ancestors(id)
            .find_map(|a| self.of_parse(a))
            .unwrap_or(CId(0))
    }

    pub fn ancestors(&self, id: CId) -> impl Iterator<Item = CId> + '_ {
        let mut cur = self.nodes[id.0].parent;
        std::iter::from_fn(move || {
            let n = cur?;
            cur = self.nodes[n.0].parent;
            Some(n)
        })
    }

    pub fn is_ancestor_or_self(&self, anc: CId, mut n: CId) -> bool {
        loop {
            if n == anc {
                return true;
            }
            match self.nodes[n.0].parent {
                Some(p) => n = p,
                None => return false,
            }
        }
    }

    pub fn is_proper_ancestor(&self, anc: CId, n: CId) -> bool {
        anc != n && self.is_ancestor_or_self(anc, n)
    }

    /// Preorder subtree ids (including `id`). Preorder numbering makes a
    /// subtree a contiguous index range.
    pub fn subtree(&self, id: CId) -> std::ops::Range<usize> {
        let mut end = id.0 + 1;
        while end < self.nodes.len() && self.is_ancestor_or_self(id, CId(end)) {
            end += 1;
        }
        id.0..end
    }

    pub fn lca(&self, a: CId, b: CId) -> CId {
        let (mut a, mut b) = (a, b);
        while self.nodes[a.0].depth > self.nodes[b.0].depth {
            a = self.nodes[a.0].parent.unwrap();
        }
        while self.nodes[b.0].depth > self.nodes[a.0].depth {
            b = self.nodes[b.0].parent.unwrap();
        }
        while a != b {
            a = self.nodes[a.0].parent.unwrap();
            b = self.nodes[b.0].parent.unwrap();
        }
        a
    }
}
