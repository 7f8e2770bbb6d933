//! Locations inside a program and text splicing.

use crate::constructs::{CId, ConstructTree};
use crate::grammar::{NodeId, NodeKind, ParseTree};

/// Where material lands, in parse-tree terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Where {
    /// After a repeatable unit.
    After(NodeId),
    /// Before a repeatable unit.
    Before(NodeId),
    /// Just before the closing token (token index) of an empty container.
    Close(usize),
}

/// A resolved insertion point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub at: Where,
    /// Token index the material will start at.
    pub pos: usize,
    /// Byte offset in the recipient source.
    pub byte: usize,
    /// Innermost construct around the insertion point.
    pub enclosing: CId,
    /// Construct children of `enclosing` that end at or before `pos`.
    pub ordinal: usize,
}

impl Location {
    pub fn new(tree: &ParseTree, ct: &ConstructTree, at: Where) -> Location {
        let (pos, byte, around) = match at {
            Where::After(u) => {
                let n = tree.node(u);
                (n.span.end, tree.node_bytes(u).1, n.parent.unwrap_or(u))
            }
            Where::Before(u) => {
                let n = tree.node(u);
                (n.span.start, tree.node_bytes(u).0, n.parent.unwrap_or(u))
            }
            Where::Close(t) => {
                let leaf = tree
                    .ids()
                    .find(|i| tree.node(*i).token == Some(t))
                    .expect("token has a leaf");
                (t, tree.tokens()[t].byte_span.0, tree.node(leaf).parent.unwrap_or(leaf))
            }
        };
        let enclosing = ct.enclosing(tree, around);
        let ordinal = ct
            .node(enclosing)
            .children
            .iter()
            .filter(|c| ct.node(**c).span.end <= pos)
            .count();
        Location {
            at,
            pos,
            byte,
            enclosing,
            ordinal,
        }
    }
}

fn is_unit(tree: &ParseTree, id: NodeId) -> bool {
    matches!(tree.node(id).kind, NodeKind::Rule(r) if tree.grammar().is_repeatable(r))
}

/// Nearest repeatable ancestor-or-self of `id`.
pub fn unit_of(tree: &ParseTree, id: NodeId) -> Option<NodeId> {
    std::iter::once(id)
        .chain(tree.ancestors(id))
        .find(|a| is_unit(tree, *a))
}

/// Nearest repeatable ancestor-or-self of `id` lying strictly inside
/// `within`.
pub fn unit_inside(tree: &ParseTree, id: NodeId, within: NodeId) -> Option<NodeId> {
    unit_of(tree, id).filter(|u| *u != within && tree.is_ancestor_or_self(within, *u))
}

/// Insertion point at the end of container `x`: after its last top-level
/// unit, or before its closing brace when it has none.
pub fn end_of(tree: &ParseTree, x: NodeId) -> Option<Where> {
    let last = tree
        .descendants(x)
        .skip(1)
        .filter(|d| is_unit(tree, *d))
        .filter(|d| {
            tree.ancestors(*d)
                .take_while(|a| *a != x)
                .all(|a| !is_unit(tree, a))
        })
        .last();
    if let Some(u) = last {
        return Some(Where::After(u));
    }
    let span = tree.node(x).span;
    (!span.is_empty() && tree.tokens()[span.end - 1].text == "}").then(|| Where::Close(span.end - 1))
}

/// Leading whitespace of the line holding byte `at`.
pub fn line_indent(src: &str, at: usize) -> &str {
    let start = src[..at].rfind('\n').map_or(0, |i| i + 1);
    let line = &src[start..];
    let n = line.len() - line.trim_start_matches([' ', '\t']).len();
    &line[..n]
}

/// Re-indent multi-line `text` (originally indented by `from`) to `to`.
pub fn reindent(text: &str, from: &str, to: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
            out.push_str(to);
            out.push_str(line.strip_prefix(from).unwrap_or(line.trim_start()));
        } else {
            out.push_str(line);
        }
    }
    out
}

/// Text inserted at `loc` so that `material` sits on its own line.
pub fn insertion_text(src: &str, loc: &Location, material: &str, from_indent: &str) -> String {
    match loc.at {
        Where::After(_) => {
            let ind = line_indent(src, loc.byte);
            format!("\n{ind}{}", reindent(material, from_indent, ind))
        }
        Where::Before(_) => {
            let ind = line_indent(src, loc.byte);
            format!("{}\n{ind}", reindent(material, from_indent, ind))
        }
        Where::Close(_) => {
            let ind = format!("{}  ", line_indent(src, loc.byte));
            format!(" {} ", reindent(material, from_indent, &ind))
        }
    }
}

/// A byte-range replacement on a source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splice {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Apply non-overlapping splices. Insertions at the same offset keep their
/// order in `edits`. Returns `None` when two splices overlap.
pub fn apply_splices(src: &str, edits: &[Splice]) -> Option<String> {
    let mut order: Vec<usize> = (0..edits.len()).collect();
    order.sort_by_key(|i| (edits[*i].start, edits[*i].end, *i));
    let mut out = String::with_capacity(src.len());
    let mut at = 0;
    for i in order {
        let e = &edits[i];
        if e.start < at || e.end < e.start || e.end > src.len() {
            return None;
        }
        out.push_str(&src[at..e.start]);
        out.push_str(&e.text);
        at = e.end;
    }
    out.push_str(&src[at..]);
    Some(out)
}
