//! Partialization of donor matches and context matching in recipients.

use super::similarity::{similarity, KlrParams};
use super::MutationError;
use crate::constructs::{AnnotationSet, CId, ConstructTree};
use crate::program::Program;
use crate::styles::{
    branch_index, branches, category, find_ctx, CompositionStyle, Resolved, StyleMatch, StyleName,
};
use rand::Rng;

/// Where the removed construct sat relative to the anchors, by match index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hole {
    After(usize),
    Before(usize),
    /// At the end of the body of this node.
    Inside(usize),
    /// In a branch of `cond` other than the one holding `sibling`.
    OtherBranch { cond: usize, sibling: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialContext {
    pub removed: usize,
    pub anchors: Vec<usize>,
    pub hole: Hole,
    /// Donor construct the hole sits under, and its child ordinal there.
    pub parent: CId,
    pub ordinal: usize,
}

/// Match positions that may be removed to form a partial context.
pub fn removable(style: StyleName, arity: usize) -> Vec<usize> {
    match style {
        StyleName::Nesting => vec![1],
        StyleName::Balanced => vec![1, 2],
        _ => (0..arity).collect(),
    }
}

pub fn partialize(
    m: &StyleMatch,
    ct: &ConstructTree,
    removed: Option<usize>,
    rng: &mut impl Rng,
) -> Result<PartialContext, MutationError> {
    if m.nodes.len() < 2 {
        return Err(MutationError::Contract(
            "partialization requires k ≥ 2".to_string(),
        ));
    }
    let choices = removable(m.style, m.nodes.len());
    let i = match removed {
        Some(i) if choices.contains(&i) => i,
        Some(i) => {
            return Err(MutationError::Contract(format!(
                "position {i} of a {} match cannot be removed",
                m.style
            )))
        }
        None => choices[rng.gen_range(0..choices.len())],
    };
    let anchors: Vec<usize> = (0..m.nodes.len()).filter(|j| *j != i).collect();
    let hole = match m.style {
        StyleName::Nesting => Hole::Inside(0),
        StyleName::Balanced => Hole::OtherBranch {
            cond: 0,
            sibling: 3 - i,
        },
        _ if i > 0 => Hole::After(i - 1),
        _ => Hole::Before(1),
    };
    let child_pos = |n: CId| {
        let p = ct.node(n).parent.unwrap_or(ct.root());
        let at = ct.node(p).children.iter().position(|c| *c == n).unwrap_or(0);
        (p, at)
    };
    let (parent, ordinal) = match hole {
        Hole::After(j) => {
            let (p, at) = child_pos(m.nodes[j]);
            (p, at + 1)
        }
        Hole::Before(j) => child_pos(m.nodes[j]),
        Hole::Inside(j) | Hole::OtherBranch { cond: j, .. } => {
            let n = m.nodes[j];
            (n, ct.node(n).children.len())
        }
    };
    Ok(PartialContext {
        removed: i,
        anchors,
        hole,
        parent,
        ordinal,
    })
}

/// A recipient context with the donor anchors mapped into it.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextBinding {
    pub recipient_ctx: CId,
    /// (match index, recipient node)
    pub anchor_map: Vec<(usize, CId)>,
    pub similarity: f64,
}

impl ContextBinding {
    pub fn node(&self, idx: usize) -> Option<CId> {
        self.anchor_map.iter().find(|(i, _)| *i == idx).map(|(_, c)| *c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rel {
    Same,
    Anc,
    Desc,
    Before,
    After,
}

fn rel(ct: &ConstructTree, a: CId, b: CId) -> Rel {
    if a == b {
        Rel::Same
    } else if ct.is_ancestor_or_self(a, b) {
        Rel::Anc
    } else if ct.is_ancestor_or_self(b, a) {
        Rel::Desc
    } else if a < b {
        Rel::Before
    } else {
        Rel::After
    }
}

pub struct MatchInput<'a> {
    pub style: &'a CompositionStyle,
    pub ann: &'a AnnotationSet,
    pub donor: &'a Program,
    pub m: &'a StyleMatch,
    pub recipient: &'a Program,
    /// Match indices that must be mapped.
    pub anchors: &'a [usize],
    /// Require equal grammar rules between anchor pairs.
    pub same_rule: bool,
    pub klr: KlrParams,
}

const SEARCH_BUDGET: usize = 20_000;

/// Bind the donor context and anchors in the recipient. Candidate contexts
/// are tried by decreasing similarity to the donor context, then preorder.
pub fn match_context(input: &MatchInput) -> Result<ContextBinding, MutationError> {
    let MatchInput {
        style,
        ann,
        donor,
        m,
        recipient,
        ..
    } = *input;
    let res = Resolved::new(style, ann);
    let rct = &recipient.ct;
    let want = category(ann, donor.ct.label(m.ctx), &res.ctx);
    let mut cands: Vec<(f64, CId)> = rct
        .ids()
        .filter(|c| want.is_some() && category(ann, rct.label(*c), &res.ctx) == want)
        .map(|c| (similarity(&donor.ct, m.ctx, rct, c, input.klr), c))
        .collect();
    if cands.is_empty() {
        return Err(MutationError::NoCandidateContext);
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut budget = SEARCH_BUDGET;
    for (score, c) in cands {
        let mut chosen = Vec::new();
        if assign(input, &res, c, 0, &mut chosen, &mut budget) {
            return Ok(ContextBinding {
                recipient_ctx: c,
                anchor_map: input.anchors.iter().copied().zip(chosen).collect(),
                similarity: score,
            });
        }
        if budget == 0 {
            break;
        }
    }
    Err(MutationError::NoAnchorMatch)
}

fn position_of(style: &CompositionStyle, idx: usize) -> usize {
    idx.min(style.positions.len() - 1)
}

fn assign(
    input: &MatchInput,
    res: &Resolved,
    c: CId,
    j: usize,
    chosen: &mut Vec<CId>,
    budget: &mut usize,
) -> bool {
    let MatchInput {
        style,
        ann,
        donor,
        m,
        recipient,
        anchors,
        ..
    } = *input;
    let (dct, rct) = (&donor.ct, &recipient.ct);
    if j == anchors.len() {
        return whole_binding_ok(input, res, c, chosen);
    }
    let idx = anchors[j];
    let d = m.nodes[idx];
    let pos = &res.positions[position_of(style, idx)];
    let dcat = category(ann, dct.label(d), pos);
    let depth_bound = matches!(
        style.name,
        StyleName::Cousins | StyleName::Nesting | StyleName::Balanced
    );
    let d_off = dct.node(d).depth - dct.node(m.ctx).depth;
    let mut options: Vec<(f64, CId)> = if d == m.ctx {
        vec![(1.0, c)]
    } else {
        rct.subtree(c)
            .skip(1)
            .map(CId)
            .filter(|x| category(ann, rct.label(*x), pos) == dcat)
            .filter(|x| !depth_bound || rct.node(*x).depth - rct.node(c).depth == d_off)
            .filter(|x| {
                !input.same_rule
                    || donor.tree.rule_of(dct.node(d).parse)
                        == recipient.tree.rule_of(rct.node(*x).parse)
            })
            .map(|x| (similarity(dct, d, rct, x, input.klr), x))
            .collect()
    };
    options.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, x) in options {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let consistent = anchors[..j]
            .iter()
            .zip(chosen.iter())
            .all(|(pi, px)| rel(dct, m.nodes[*pi], d) == rel(rct, *px, x));
        if !consistent {
            continue;
        }
        chosen.push(x);
        if assign(input, res, c, j + 1, chosen, budget) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// Checks on a complete anchor assignment: the recipient context is the
/// one a scan would report for the anchors, and balanced descendants sit in
/// different branches.
fn whole_binding_ok(input: &MatchInput, res: &Resolved, c: CId, chosen: &[CId]) -> bool {
    let rct = &input.recipient.ct;
    let start = if chosen.contains(&c) {
        c
    } else if chosen.len() == 1 {
        rct.node(chosen[0]).parent.unwrap_or(rct.root())
    } else {
        chosen[1..].iter().fold(chosen[0], |acc, x| rct.lca(acc, *x))
    };
    if find_ctx(rct, &input.recipient.chains, input.ann, &res.ctx, start, chosen) != Some(c) {
        return false;
    }
    if input.style.name == StyleName::Balanced {
        let cond_at = input.anchors.iter().position(|i| *i == 0);
        if let Some(ci) = cond_at {
            let tree = &input.recipient.tree;
            let br = branches(tree, input.ann, rct, chosen[ci]);
            let idx: Vec<Option<usize>> = input
                .anchors
                .iter()
                .zip(chosen)
                .filter(|(i, _)| **i != 0)
                .map(|(_, x)| branch_index(tree, &br, rct, *x))
                .collect();
            if idx.iter().any(Option::is_none) {
                return false;
            }
            if idx.len() == 2 && idx[0] == idx[1] {
                return false;
            }
        }
    }
    true
}
