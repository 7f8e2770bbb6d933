use std::sync::Arc;

use serde::Serialize;

use super::earley::{Deriv, DerivChild};
use super::{Grammar, RuleId, TermId, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Rule(RuleId),
    Token(TermId),
}

/// Half-open range of token indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: &TokenSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone)]
pub struct ParseNode {
    pub kind: NodeKind,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    pub span: TokenSpan,
    pub alt_index: usize,
    /// Set for leaves.
    pub token: Option<usize>,
}

/// One preorder entry of a tree's shape: kind, alternative and child count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeEntry {
    pub kind: String,
    pub alt: usize,
    pub children: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpacingPolicy {
    /// One space between tokens, none before `;` `)` `,` and none after `(`.
    #[default]
    Spaced,
    /// Source text of the node as it appears in the parsed input.
    Verbatim,
}

/// Concrete parse tree stored as an arena in preorder.
#[derive(Debug, Clone)]
pub struct ParseTree {
    grammar: Arc<Grammar>,
    source: String,
    tokens: Vec<Token>,
    nodes: Vec<ParseNode>,
}

impl ParseTree {
    pub(crate) fn build(
        grammar: Arc<Grammar>,
        source: String,
        tokens: Vec<Token>,
        deriv: &Deriv,
    ) -> ParseTree {
        let mut tree = ParseTree {
            grammar,
            source,
            tokens,
            nodes: Vec::new(),
        };
        tree.push_rule(deriv, None);
        tree
    }

    fn push_rule(&mut self, d: &Deriv, parent: Option<NodeId>) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(ParseNode {
            kind: NodeKind::Rule(d.rule),
            children: Vec::new(),
            parent,
            span: TokenSpan {
                start: d.start,
                end: d.end,
            },
            alt_index: d.alt,
            token: None,
        });
        let mut children = Vec::new();
        self.push_children(&d.children, id, &mut children);
        self.nodes[id.0].children = children;
        id
    }

    fn push_children(&mut self, kids: &[DerivChild], parent: NodeId, out: &mut Vec<NodeId>) {
        for c in kids {
            match c {
                DerivChild::Token(t) => {
                    let id = NodeId(self.nodes.len());
                    self.nodes.push(ParseNode {
                        kind: NodeKind::Token(self.tokens[*t].class),
                        children: Vec::new(),
                        parent: Some(parent),
                        span: TokenSpan {
                            start: *t,
                            end: *t + 1,
                        },
                        alt_index: 0,
                        token: Some(*t),
                    });
                    out.push(id);
                }
                DerivChild::Node(d) if self.grammar.rule(d.rule).hidden => {
                    self.push_children(&d.children, parent, out);
                }
                DerivChild::Node(d) => {
                    let id = self.push_rule(d, Some(parent));
                    out.push(id);
                }
            }
        }
    }

    pub fn grammar(&self) -> &Arc<Grammar> {
        &self.grammar
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &ParseNode {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn kind_name(&self, id: NodeId) -> &str {
        self.grammar.kind_name(self.nodes[id.0].kind)
    }

    pub fn rule_of(&self, id: NodeId) -> Option<RuleId> {
        match self.nodes[id.0].kind {
            NodeKind::Rule(r) => Some(r),
            NodeKind::Token(_) => None,
        }
    }

    /// Preorder ids of the subtree rooted at `id` (including `id`).
    pub fn descendants(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let mut stack = vec![id];
        std::iter::from_fn(move || {
            let n = stack.pop()?;
            stack.extend(self.nodes[n.0].children.iter().rev().copied());
            Some(n)
        })
    }

    pub fn is_ancestor_or_self(&self, anc: NodeId, mut n: NodeId) -> bool {
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

    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let mut cur = self.nodes[id.0].parent;
        std::iter::from_fn(move || {
            let n = cur?;
            cur = self.nodes[n.0].parent;
            Some(n)
        })
    }

    /// Byte range of a token span; empty spans map to the offset where the
    /// next token starts.
    pub fn byte_range(&self, span: TokenSpan) -> (usize, usize) {
        if span.is_empty() {
            let at = self
                .tokens
                .get(span.start)
                .map_or(self.source.len(), |t| t.byte_span.0);
            return (at, at);
        }
        (
            self.tokens[span.start].byte_span.0,
            self.tokens[span.end - 1].byte_span.1,
        )
    }

    pub fn node_bytes(&self, id: NodeId) -> (usize, usize) {
        self.byte_range(self.nodes[id.0].span)
    }

    pub fn node_source(&self, id: NodeId) -> &str {
        let (s, e) = self.node_bytes(id);
        &self.source[s..e]
    }

    /// Token texts of a node joined by single spaces.
    pub fn normalized_text(&self, id: NodeId) -> String {
        let span = self.nodes[id.0].span;
        self.tokens[span.start..span.end]
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn unparse(&self, policy: SpacingPolicy) -> String {
        self.unparse_node(self.root(), policy)
    }

    pub fn unparse_node(&self, id: NodeId, policy: SpacingPolicy) -> String {
        match policy {
            SpacingPolicy::Verbatim => self.node_source(id).to_string(),
            SpacingPolicy::Spaced => {
                let span = self.nodes[id.0].span;
                spaced(self.tokens[span.start..span.end].iter().map(|t| t.text.as_str()))
            }
        }
    }

    pub fn shape(&self) -> Vec<ShapeEntry> {
        self.nodes
            .iter()
            .map(|n| ShapeEntry {
                kind: self.grammar.kind_name(n.kind).to_string(),
                alt: n.alt_index,
                children: n.children.len(),
            })
            .collect()
    }
}

/// Join token texts with the default spacing policy.
pub fn spaced<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    for t in texts {
        if let Some(p) = prev {
            let tight = matches!(t, ";" | ")" | ",") || p == "(";
            if !tight {
                out.push(' ');
            }
        }
        out.push_str(t);
        prev = Some(t);
    }
    out
}
