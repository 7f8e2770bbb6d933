//! Composition styles: structural relations over construct trees that
//! approximate what an optimization needs to see before it fires.

mod pool;
mod scan;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constructs::{contains, AnnotationSet, CId, ConstructTree, DeclUseChains, Label};
use crate::grammar::{NodeId, ParseTree};

pub use pool::{extract_pool, MatchPool, PoolEntry};
pub use scan::{scan, scan_uncapped};

/// Per (program, style) match cap; Exists alone can match almost every node.
pub const MATCH_CAP: usize = 64;

pub const LOOP: &str = "LOOPS_";
pub const IF_ELSE: &str = "IF_ELSE_";
pub const FUNC: &str = "FUNC_";
pub const FUNC_CALL: &str = "FUNC_CALL_";
pub const ARITH: &str = "ARITH_EXPR_";
pub const LOGICAL: &str = "LOGICAL_EXPR_";
pub const MEMREF: &str = "MEMREF_";
pub const VECTOR: &str = "VECTOR_EXPR_";
pub const PROGRAM: &str = crate::constructs::PROGRAM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StyleName {
    Cousins,
    Nesting,
    Precedes,
    Balanced,
    Sequence,
    Exists,
}

impl StyleName {
    pub const ALL: [StyleName; 6] = [
        StyleName::Cousins,
        StyleName::Nesting,
        StyleName::Precedes,
        StyleName::Balanced,
        StyleName::Sequence,
        StyleName::Exists,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StyleName::Cousins => "Cousins",
            StyleName::Nesting => "Nesting",
            StyleName::Precedes => "Precedes",
            StyleName::Balanced => "Balanced",
            StyleName::Sequence => "Sequence",
            StyleName::Exists => "Exists",
        }
    }
}

impl fmt::Display for StyleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StyleName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StyleName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown style {s}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutatorKind {
    Replicate,
    Move,
    Insert,
    Replace,
}

impl MutatorKind {
    pub const ALL: [MutatorKind; 4] = [
        MutatorKind::Replicate,
        MutatorKind::Move,
        MutatorKind::Insert,
        MutatorKind::Replace,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MutatorKind::Replicate => "Replicate",
            MutatorKind::Move => "Move",
            MutatorKind::Insert => "Insert",
            MutatorKind::Replace => "Replace",
        }
    }
}

impl fmt::Display for MutatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MutatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MutatorKind::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mutator {s}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Fixed(usize),
    /// Sequence: any run length allowed by its bound.
    Variable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Param {
    /// generation distance
    K,
    /// token, nesting or branch distance
    D,
    /// sequence length or token count
    L,
}

impl Param {
    pub fn as_str(self) -> &'static str {
        match self {
            Param::K => "k",
            Param::D => "d",
            Param::L => "l",
        }
    }
}

/// A style as data. Construct types are annotation names and are resolved
/// against an [`AnnotationSet`] at scan time.
#[derive(Debug, Clone)]
pub struct CompositionStyle {
    pub name: StyleName,
    pub arity: Arity,
    /// Admissible types per position; Sequence and Exists have one.
    pub positions: Vec<Vec<&'static str>>,
    pub ctx_types: Vec<&'static str>,
    pub same_type_required: bool,
    /// Parameters with their default bound. K and D are upper bounds, L a
    /// lower bound.
    pub params: Vec<(Param, usize)>,
    pub mutators: Vec<MutatorKind>,
}

impl CompositionStyle {
    pub fn allows(&self, m: MutatorKind) -> bool {
        self.mutators.contains(&m)
    }

    pub fn default_bounds(&self) -> Bounds {
        Bounds(self.params.iter().copied().collect())
    }
}

pub fn style(name: StyleName) -> CompositionStyle {
    use MutatorKind::*;
    let all = vec![Replicate, Move, Insert, Replace];
    match name {
        StyleName::Cousins => CompositionStyle {
            name,
            arity: Arity::Fixed(2),
            positions: vec![vec![LOOP, FUNC_CALL, ARITH, LOGICAL]; 2],
            ctx_types: vec![IF_ELSE, LOOP, FUNC],
            same_type_required: true,
            params: vec![(Param::K, 0), (Param::D, 1)],
            mutators: all,
        },
        StyleName::Nesting => CompositionStyle {
            name,
            arity: Arity::Fixed(2),
            positions: vec![vec![LOOP, IF_ELSE]; 2],
            ctx_types: vec![LOOP, FUNC],
            same_type_required: true,
            params: vec![(Param::D, 2)],
            mutators: all,
        },
        StyleName::Precedes => CompositionStyle {
            name,
            arity: Arity::Fixed(2),
            positions: vec![vec![FUNC_CALL, MEMREF, ARITH]; 2],
            ctx_types: vec![LOOP, FUNC],
            same_type_required: false,
            params: vec![],
            mutators: vec![Move, Insert, Replace],
        },
        StyleName::Balanced => CompositionStyle {
            name,
            arity: Arity::Fixed(3),
            positions: vec![
                vec![IF_ELSE],
                vec![LOOP, FUNC_CALL, ARITH, MEMREF],
                vec![LOOP, FUNC_CALL, ARITH, MEMREF],
            ],
            ctx_types: vec![IF_ELSE, LOOP, FUNC],
            same_type_required: true,
            params: vec![(Param::D, 2)],
            mutators: all,
        },
        StyleName::Sequence => CompositionStyle {
            name,
            arity: Arity::Variable,
            positions: vec![vec![LOOP, FUNC_CALL, VECTOR, ARITH]],
            ctx_types: vec![LOOP, FUNC],
            same_type_required: true,
            params: vec![(Param::L, 2)],
            mutators: vec![Replicate, Insert, Replace],
        },
        StyleName::Exists => CompositionStyle {
            name,
            arity: Arity::Fixed(1),
            positions: vec![vec![FUNC, LOOP, IF_ELSE, FUNC_CALL, MEMREF, VECTOR, ARITH]],
            ctx_types: vec![VECTOR, LOOP, IF_ELSE, FUNC, PROGRAM],
            same_type_required: false,
            params: vec![(Param::L, 1)],
            mutators: vec![Insert, Replace],
        },
    }
}

pub fn all_styles() -> Vec<CompositionStyle> {
    StyleName::ALL.into_iter().map(style).collect()
}

/// Every (style, mutator) pair the registry admits, in registry order.
pub fn admissible_pairs() -> Vec<(StyleName, MutatorKind)> {
    all_styles()
        .iter()
        .flat_map(|s| {
            MutatorKind::ALL
                .into_iter()
                .filter(|m| s.allows(*m))
                .map(|m| (s.name, m))
        })
        .collect()
}

/// Predicate bounds for one scan.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bounds(pub BTreeMap<Param, usize>);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoundsError {
    #[error("unknown bound {key} for {style}")]
    UnknownKey { key: String, style: StyleName },
    #[error("bad bound value in {0}")]
    BadValue(String),
}

impl Bounds {
    pub fn get(&self, p: Param) -> Option<usize> {
        self.0.get(&p).copied()
    }

    /// Parse `k=0,d=1` on top of the style defaults. Only the style's own
    /// parameters are accepted.
    pub fn parse(style: &CompositionStyle, text: &str) -> Result<Bounds, BoundsError> {
        let mut b = style.default_bounds();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| BoundsError::BadValue(part.to_string()))?;
            let param = style
                .params
                .iter()
                .map(|(p, _)| *p)
                .find(|p| p.as_str() == k.trim())
                .ok_or_else(|| BoundsError::UnknownKey {
                    key: k.trim().to_string(),
                    style: style.name,
                })?;
            let v = v
                .trim()
                .parse()
                .map_err(|_| BoundsError::BadValue(part.to_string()))?;
            b.0.insert(param, v);
        }
        Ok(b)
    }

    /// Whether realized predicate values satisfy these bounds.
    pub fn admits(&self, values: &BTreeMap<Param, usize>) -> bool {
        values.iter().all(|(p, v)| match (p, self.get(*p)) {
            (_, None) => true,
            (Param::L, Some(min)) => *v >= min,
            (_, Some(max)) => *v <= max,
        })
    }
}

/// A witness that a style holds at `nodes` under `ctx`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StyleMatch {
    pub style: StyleName,
    pub nodes: Vec<CId>,
    pub ctx: CId,
    pub values: BTreeMap<Param, usize>,
    pub donor_id: String,
}

/// Serializable view of a match, with token spans and construct names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub style: StyleName,
    pub donor_id: String,
    pub nodes: Vec<SpanRecord>,
    pub ctx: SpanRecord,
    pub values: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanRecord {
    pub construct: String,
    pub span: [usize; 2],
}

impl StyleMatch {
    pub fn record(&self, ct: &ConstructTree, ann: &AnnotationSet) -> MatchRecord {
        let sr = |c: CId| SpanRecord {
            construct: ann.label_name(ct.label(c)).to_string(),
            span: [ct.node(c).span.start, ct.node(c).span.end],
        };
        MatchRecord {
            style: self.style,
            donor_id: self.donor_id.clone(),
            nodes: self.nodes.iter().map(|n| sr(*n)).collect(),
            ctx: sr(self.ctx),
            values: self
                .values
                .iter()
                .map(|(p, v)| (p.as_str().to_string(), *v))
                .collect(),
        }
    }

    /// Identity used when comparing match sets: node spans, context span
    /// and predicate values.
    pub fn key(&self, ct: &ConstructTree) -> MatchKey {
        MatchKey {
            nodes: self
                .nodes
                .iter()
                .map(|n| (ct.node(*n).span.start, ct.node(*n).span.end))
                .collect(),
            ctx: (ct.node(self.ctx).span.start, ct.node(self.ctx).span.end),
            values: self.values.iter().map(|(p, v)| (*p, *v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatchKey {
    pub nodes: Vec<(usize, usize)>,
    pub ctx: (usize, usize),
    pub values: Vec<(Param, usize)>,
}

/// Labels a style's type names resolve to under one annotation set. Names
/// the annotations do not define are dropped.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub positions: Vec<Vec<Label>>,
    pub ctx: Vec<Label>,
}

impl Resolved {
    pub fn new(style: &CompositionStyle, ann: &AnnotationSet) -> Resolved {
        let res = |names: &[&str]| names.iter().filter_map(|n| ann.label(n)).collect::<Vec<_>>();
        Resolved {
            positions: style.positions.iter().map(|p| res(p)).collect(),
            ctx: res(&style.ctx_types),
        }
    }
}

/// The type a node plays in a position: the first admissible type it
/// belongs to.
pub fn category(ann: &AnnotationSet, label: Label, admissible: &[Label]) -> Option<Label> {
    admissible.iter().copied().find(|c| ann.is_a(label, *c))
}

/// Lowest node at or above `start` whose type is a context type and which
/// contains `nodes`.
pub fn find_ctx(
    ct: &ConstructTree,
    chains: &DeclUseChains,
    ann: &AnnotationSet,
    ctx_types: &[Label],
    start: CId,
    nodes: &[CId],
) -> Option<CId> {
    std::iter::once(start)
        .chain(ct.ancestors(start))
        .find(|c| {
            category(ann, ct.label(*c), ctx_types).is_some() && contains(ct, chains, *c, nodes)
        })
}

/// Parse nodes that form the branches of an if-else construct: its direct
/// parse children whose rule the annotations mark as a branch.
pub fn branches(tree: &ParseTree, ann: &AnnotationSet, ct: &ConstructTree, cond: CId) -> Vec<NodeId> {
    tree.node(ct.node(cond).parse)
        .children
        .iter()
        .copied()
        .filter(|c| tree.rule_of(*c).is_some_and(|r| ann.is_branch_rule(r)))
        .collect()
}

/// Index of the branch holding `x`, if any.
pub fn branch_index(tree: &ParseTree, branches: &[NodeId], ct: &ConstructTree, x: CId) -> Option<usize> {
    let p = ct.node(x).parse;
    branches.iter().position(|b| tree.is_ancestor_or_self(*b, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_respects_mutator_table() {
        for s in all_styles() {
            if s.allows(MutatorKind::Replicate) {
                assert!(s.same_type_required, "{}", s.name);
            }
        }
        assert_eq!(admissible_pairs().len(), 20);
        assert!(!style(StyleName::Exists).allows(MutatorKind::Move));
        assert!(!style(StyleName::Precedes).allows(MutatorKind::Replicate));
        assert!(!style(StyleName::Sequence).allows(MutatorKind::Move));
    }

    #[test]
    fn bounds_parse_and_reject_unknown_keys() {
        let c = style(StyleName::Cousins);
        let b = Bounds::parse(&c, "k=1, d=0").unwrap();
        assert_eq!(b.get(Param::K), Some(1));
        assert_eq!(b.get(Param::D), Some(0));
        assert!(matches!(
            Bounds::parse(&c, "l=2"),
            Err(BoundsError::UnknownKey { .. })
        ));
        assert!(matches!(Bounds::parse(&c, "k=x"), Err(BoundsError::BadValue(_))));
        let e = style(StyleName::Exists);
        assert_eq!(Bounds::parse(&e, "").unwrap().get(Param::L), Some(1));
    }

    #[test]
    fn lower_and_upper_bounds() {
        let b = Bounds([(Param::D, 1), (Param::L, 2)].into_iter().collect());
        assert!(b.admits(&[(Param::D, 1)].into_iter().collect()));
        assert!(!b.admits(&[(Param::D, 2)].into_iter().collect()));
        assert!(!b.admits(&[(Param::L, 1)].into_iter().collect()));
        assert!(b.admits(&[(Param::L, 3), (Param::K, 9)].into_iter().collect()));
    }

    #[test]
    fn names_parse_case_insensitively() {
        assert_eq!("cousins".parse::<StyleName>(), Ok(StyleName::Cousins));
        assert_eq!("REPLACE".parse::<MutatorKind>(), Ok(MutatorKind::Replace));
        assert!("Fusion".parse::<StyleName>().is_err());
    }
}
