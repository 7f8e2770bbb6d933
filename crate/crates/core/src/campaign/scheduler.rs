//! Choosing what to do in each iteration.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::grammar::NodeKind;
use crate::program::{Language, Program};
use crate::styles::{MatchPool, MutatorKind, PoolEntry, StyleName};

pub type Pair = (StyleName, MutatorKind);

/// Weighted draw of (style, mutator) pairs, then a uniform donor match of
/// that style and a uniform recipient.
pub struct Scheduler<'a> {
    support: Vec<Pair>,
    dist: Option<WeightedIndex<f64>>,
    donors: BTreeMap<StyleName, Vec<&'a PoolEntry>>,
    recipients: usize,
}

impl<'a> Scheduler<'a> {
    /// Pairs whose style has no match in `pool` or whose weight is zero are
    /// left out of the draw.
    pub fn new(pool: &'a MatchPool, weights: &[(Pair, f64)], recipients: usize) -> Scheduler<'a> {
        let donors: BTreeMap<_, _> = pool.styles().into_iter().map(|s| (s, pool.of_style(s))).collect();
        let (support, w): (Vec<Pair>, Vec<f64>) = weights
            .iter()
            .filter(|(p, w)| *w > 0.0 && donors.contains_key(&p.0))
            .map(|(p, w)| (*p, *w))
            .unzip();
        let dist = WeightedIndex::new(&w).ok();
        Scheduler {
            support,
            dist,
            donors,
            recipients,
        }
    }

    /// Pairs that can be drawn.
    pub fn support(&self) -> &[Pair] {
        &self.support
    }

    pub fn draw_pair(&self, rng: &mut impl Rng) -> Option<Pair> {
        Some(self.support[self.dist.as_ref()?.sample(rng)])
    }

    pub fn draw_donor(&self, style: StyleName, rng: &mut impl Rng) -> &'a PoolEntry {
        let v = &self.donors[&style];
        v[rng.gen_range(0..v.len())]
    }

    pub fn draw_recipient(&self, rng: &mut impl Rng) -> usize {
        rng.gen_range(0..self.recipients)
    }
}

/// Reference mutation: replace a random subtree of `recipient` by a random
/// subtree of the same rule taken from one of `donors`. Returns the new
/// text and the donor id, or `None` when the drawn rule has no counterpart.
pub fn subtree_swap(
    lang: &Language,
    recipient: &Program,
    donors: &[Arc<Program>],
    rng: &mut impl Rng,
) -> Option<(String, String)> {
    let t = &recipient.tree;
    let nodes: Vec<_> = t
        .ids()
        .filter(|n| *n != t.root() && matches!(t.node(*n).kind, NodeKind::Rule(_)) && !t.node(*n).span.is_empty())
        .collect();
    if nodes.is_empty() || donors.is_empty() {
        return None;
    }
    let at = nodes[rng.gen_range(0..nodes.len())];
    let rule = t.rule_of(at)?;
    let donor = &donors[rng.gen_range(0..donors.len())];
    let dt = &donor.tree;
    let same: Vec<_> = dt
        .ids()
        .filter(|n| dt.rule_of(*n) == Some(rule) && !dt.node(*n).span.is_empty())
        .collect();
    if same.is_empty() {
        return None;
    }
    let pick = same[rng.gen_range(0..same.len())];
    let (s, e) = t.node_bytes(at);
    let src = recipient.source();
    let text = format!("{}{}{}", &src[..s], dt.node_source(pick), &src[e..]);
    Program::parse(lang, &recipient.id, &text).ok()?;
    Some((text, donor.id.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::styles::{admissible_pairs, all_styles, extract_pool};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool_of(texts: &[&str]) -> MatchPool {
        let lang = builtin::mini_c();
        let progs: Vec<_> = texts
            .iter()
            .map(|t| Arc::new(Program::parse(lang, "p", t).unwrap()))
            .collect();
        extract_pool(&progs, &all_styles(), &lang.ann)
    }

    #[test]
    fn single_weight_always_drawn() {
        let pool = pool_of(&["void f(int n) { for (int i = 0; i < n; i++) { g(i); } for (int j = 0; j < n; j++) { g(j); } }"]);
        let mut w: Vec<_> = admissible_pairs().into_iter().map(|p| (p, 0.0)).collect();
        w[0].1 = 1.0;
        let s = Scheduler::new(&pool, &w, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert_eq!(s.draw_pair(&mut rng), Some(w[0].0));
        }
    }

    #[test]
    fn styles_without_matches_leave_the_support() {
        let pool = pool_of(&["int f(int a) { return a + 1; }"]);
        let w: Vec<_> = admissible_pairs().into_iter().map(|p| (p, 1.0)).collect();
        let s = Scheduler::new(&pool, &w, 1);
        assert!(s.support().iter().all(|(st, _)| *st != StyleName::Sequence && *st != StyleName::Cousins));
        assert!(!s.support().is_empty());
    }

    #[test]
    fn swap_keeps_programs_parseable() {
        let lang = builtin::mini_c();
        let r = Program::parse(lang, "r", "int f(int a) {\n  int b = a * 2;\n  return b;\n}\n").unwrap();
        let d = Arc::new(Program::parse(lang, "d", "int g(int x) {\n  for (int i = 0; i < x; i++) {\n    x -= 1;\n  }\n  return x + 3;\n}\n").unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut changed = 0;
        for _ in 0..200 {
            if let Some((text, id)) = subtree_swap(lang, &r, &[d.clone()], &mut rng) {
                assert_eq!(id, "d");
                assert!(Program::parse(lang, "x", &text).is_ok());
                changed += usize::from(text != r.source());
            }
        }
        assert!(changed > 0);
    }
}
