//! Structural similarity of two construct nodes from their label
//! environment: the node itself, a few ancestors and nearby siblings.

use crate::constructs::{CId, ConstructTree, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KlrParams {
    pub k_anc: usize,
    pub l_sib: usize,
    pub r_sib: usize,
}

impl Default for KlrParams {
    fn default() -> Self {
        KlrParams {
            k_anc: 2,
            l_sib: 1,
            r_sib: 1,
        }
    }
}

/// Labels compared by [`similarity`]: own label, `k_anc` ancestors (padded
/// with the root label), then `l_sib` left and `r_sib` right siblings,
/// nearest first (padded with `None`).
pub fn environment(ct: &ConstructTree, id: CId, p: KlrParams) -> Vec<Option<Label>> {
    let mut out = vec![Some(ct.label(id))];
    let root = ct.label(ct.root());
    let mut anc = ct.ancestors(id).map(|a| ct.label(a));
    for _ in 0..p.k_anc {
        out.push(Some(anc.next().unwrap_or(root)));
    }
    let (left, right): (&[CId], &[CId]) = match ct.node(id).parent {
        Some(par) => {
            let kids = &ct.node(par).children;
            let at = kids.iter().position(|c| *c == id).unwrap_or(0);
            (&kids[..at], &kids[at + 1..])
        }
        None => (&[], &[]),
    };
    for i in 0..p.l_sib {
        out.push(left.iter().rev().nth(i).map(|c| ct.label(*c)));
    }
    for i in 0..p.r_sib {
        out.push(right.get(i).map(|c| ct.label(*c)));
    }
    out
}

/// Fraction of equal labels between the two environments, in `[0, 1]`.
pub fn similarity(ca: &ConstructTree, a: CId, cb: &ConstructTree, b: CId, p: KlrParams) -> f64 {
    let ea = environment(ca, a, p);
    let eb = environment(cb, b, p);
    let same = ea.iter().zip(&eb).filter(|(x, y)| x == y).count();
    same as f64 / ea.len() as f64
}
