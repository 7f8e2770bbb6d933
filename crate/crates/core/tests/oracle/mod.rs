//! Brute-force reference for style scanning. Enumerates every node tuple
//! and checks each relation directly from parent pointers and token spans,
//! sharing nothing with the scanner beyond the data it reads.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use stylefuzz::constructs::{AnnotationSet, CId, Label};
use stylefuzz::program::{Language, Program};
use stylefuzz::styles::{Bounds, CompositionStyle, MatchKey, Param, StyleName};

pub fn fixture_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Every fixture program of a language: (path, program).
pub fn fixture_programs(lang: &Language) -> Vec<(PathBuf, Program)> {
    let root = fixture_root().join(&lang.name);
    let mut paths = Vec::new();
    for sub in ["opt", "seed", "styles"] {
        if let Ok(rd) = std::fs::read_dir(root.join(sub)) {
            paths.extend(rd.map(|e| e.unwrap().path()));
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let id = p.file_name().unwrap().to_string_lossy().to_string();
            let prog = Program::parse(lang, &id, &text).unwrap();
            (p, prog)
        })
        .collect()
}

pub fn load(lang: &Language, rel: &str) -> Program {
    let p: &Path = &fixture_root().join(&lang.name).join(rel);
    let text = std::fs::read_to_string(p).unwrap();
    Program::parse(lang, rel, &text).unwrap()
}

struct View<'a> {
    prog: &'a Program,
    ann: &'a AnnotationSet,
}

impl View<'_> {
    fn n(&self) -> usize {
        self.prog.ct.len()
    }

    fn span(&self, c: usize) -> (usize, usize) {
        let s = self.prog.ct.node(CId(c)).span;
        (s.start, s.end)
    }

    fn parent(&self, c: usize) -> Option<usize> {
        self.prog.ct.node(CId(c)).parent.map(|p| p.0)
    }

    fn chain(&self, c: usize) -> Vec<usize> {
        let mut out = vec![c];
        let mut cur = c;
        while let Some(p) = self.parent(cur) {
            out.push(p);
            cur = p;
        }
        out
    }

    fn depth(&self, c: usize) -> usize {
        self.chain(c).len() - 1
    }

    fn is_anc(&self, a: usize, b: usize) -> bool {
        a != b && self.chain(b).contains(&a)
    }

    fn label(&self, c: usize) -> Label {
        self.prog.ct.node(CId(c)).label
    }

    fn cat(&self, c: usize, names: &[&str]) -> Option<Label> {
        if c == 0 {
            return None;
        }
        names
            .iter()
            .filter_map(|n| self.ann.label(n))
            .find(|l| self.ann.is_a(self.label(c), *l))
    }

    fn within(outer: (usize, usize), inner: (usize, usize)) -> bool {
        outer.0 <= inner.0 && inner.1 <= outer.1
    }

    /// Every use inside each node resolves to a def inside ctx or the node,
    /// judged by token spans.
    fn holds(&self, ctx: usize, nodes: &[usize]) -> bool {
        let ch = &self.prog.chains;
        nodes.iter().all(|n| {
            let ns = self.span(*n);
            ch.uses
                .iter()
                .filter(|u| Self::within(ns, self.span(u.node.0)))
                .all(|u| match u.def {
                    None => false,
                    Some(d) => {
                        let ds = self.span(ch.defs[d].node.0);
                        Self::within(self.span(ctx), ds) || Self::within(ns, ds)
                    }
                })
        })
    }

    /// Deepest common ancestor-or-self of `nodes` that has a context type
    /// and contains them.
    fn ctx(&self, style: &CompositionStyle, nodes: &[usize], proper: bool) -> Option<usize> {
        let common: Vec<usize> = (0..self.n())
            .filter(|c| nodes.iter().all(|n| self.chain(*n).contains(c)))
            .filter(|c| !(proper && nodes.contains(c)))
            .collect();
        common
            .into_iter()
            .filter(|c| {
                style
                    .ctx_types
                    .iter()
                    .filter_map(|t| self.ann.label(t))
                    .any(|t| self.ann.is_a(self.label(*c), t))
            })
            .filter(|c| self.holds(*c, nodes))
            .max_by_key(|c| self.depth(*c))
    }
}

type Raw = (Vec<usize>, usize, BTreeMap<Param, usize>);

fn admits(bounds: &Bounds, vals: &BTreeMap<Param, usize>) -> bool {
    vals.iter().all(|(p, v)| match bounds.get(*p) {
        None => true,
        Some(b) if *p == Param::L => *v >= b,
        Some(b) => *v <= b,
    })
}

pub fn brute_force(
    style: &CompositionStyle,
    prog: &Program,
    ann: &AnnotationSet,
    bounds: &Bounds,
    cap: Option<usize>,
) -> Vec<MatchKey> {
    let v = View { prog, ann };
    let n = v.n();
    let pos = |i: usize| style.positions[i].as_slice();
    let mut raw: Vec<Raw> = Vec::new();
    match style.name {
        StyleName::Cousins => {
            for a in 0..n {
                for b in a + 1..n {
                    let ca = v.cat(a, pos(0));
                    if ca.is_none() || ca != v.cat(b, pos(1)) || v.is_anc(a, b) {
                        continue;
                    }
                    let Some(ctx) = v.ctx(style, &[a, b], false) else { continue };
                    let k = v.depth(a).max(v.depth(b)) - v.depth(ctx) - 1;
                    let d = v.span(b).0 - v.span(a).1;
                    raw.push((vec![a, b], ctx, [(Param::K, k), (Param::D, d)].into()));
                }
            }
        }
        StyleName::Nesting => {
            for a in 0..n {
                for b in 0..n {
                    let ca = v.cat(a, pos(0));
                    if ca.is_none() || ca != v.cat(b, pos(1)) || !v.is_anc(a, b) {
                        continue;
                    }
                    let chain = v.chain(b);
                    let upto = chain.iter().position(|x| *x == a).unwrap();
                    let d = chain[..upto]
                        .iter()
                        .filter(|x| v.cat(**x, pos(0)).is_some())
                        .count();
                    let Some(ctx) = v.ctx(style, &[a, b], false) else { continue };
                    raw.push((vec![a, b], ctx, [(Param::D, d)].into()));
                }
            }
        }
        StyleName::Precedes => {
            for a in 0..n {
                for b in 0..n {
                    if v.cat(a, pos(0)).is_none() || v.cat(b, pos(1)).is_none() {
                        continue;
                    }
                    if v.span(a).1 > v.span(b).0 || v.is_anc(a, b) || v.is_anc(b, a) || a == b {
                        continue;
                    }
                    let Some(ctx) = v.ctx(style, &[a, b], false) else { continue };
                    raw.push((vec![a, b], ctx, BTreeMap::new()));
                }
            }
        }
        StyleName::Balanced => {
            let tree = &prog.tree;
            for i in 0..n {
                if v.cat(i, pos(0)).is_none() {
                    continue;
                }
                let ip = prog.ct.node(CId(i)).parse;
                let branches: Vec<(usize, usize)> = tree
                    .node(ip)
                    .children
                    .iter()
                    .filter(|c| tree.rule_of(**c).is_some_and(|r| ann.is_branch_rule(r)))
                    .map(|c| (tree.node(*c).span.start, tree.node(*c).span.end))
                    .collect();
                let branch = |x: usize| branches.iter().position(|b| View::within(*b, v.span(x)));
                for x in 0..n {
                    for y in x + 1..n {
                        if !v.is_anc(i, x) || !v.is_anc(i, y) {
                            continue;
                        }
                        let cx = v.cat(x, pos(1));
                        if cx.is_none() || cx != v.cat(y, pos(2)) {
                            continue;
                        }
                        let (Some(bx), Some(by)) = (branch(x), branch(y)) else { continue };
                        if bx == by {
                            continue;
                        }
                        let d = v.depth(x).max(v.depth(y)) - v.depth(i);
                        let Some(ctx) = v.ctx(style, &[i, x, y], false) else { continue };
                        raw.push((vec![i, x, y], ctx, [(Param::D, d)].into()));
                    }
                }
            }
        }
        StyleName::Sequence => {
            for p in 0..n {
                let kids: Vec<usize> = (0..n).filter(|c| v.parent(*c) == Some(p)).collect();
                let joins = |a: usize, b: usize| {
                    let ca = v.cat(a, pos(0));
                    ca.is_some() && ca == v.cat(b, pos(0)) && v.span(a).1 == v.span(b).0
                };
                for s in 0..kids.len() {
                    for e in s + 1..kids.len() {
                        if !(s..e).all(|j| joins(kids[j], kids[j + 1])) {
                            continue;
                        }
                        if s > 0 && joins(kids[s - 1], kids[s]) {
                            continue;
                        }
                        if e + 1 < kids.len() && joins(kids[e], kids[e + 1]) {
                            continue;
                        }
                        let run = kids[s..=e].to_vec();
                        let Some(ctx) = v.ctx(style, &run, false) else { continue };
                        let l = run.len();
                        raw.push((run, ctx, [(Param::L, l)].into()));
                    }
                }
            }
        }
        StyleName::Exists => {
            for a in 1..n {
                if v.cat(a, pos(0)).is_none() {
                    continue;
                }
                let Some(ctx) = v.ctx(style, &[a], true) else { continue };
                let (s, e) = v.span(a);
                raw.push((vec![a], ctx, [(Param::L, e - s)].into()));
            }
        }
    }
    raw.retain(|r| admits(bounds, &r.2));
    raw.sort_by(|x, y| x.0.cmp(&y.0));
    if let Some(c) = cap {
        raw.truncate(c);
    }
    raw.into_iter()
        .map(|(nodes, ctx, vals)| MatchKey {
            nodes: nodes.iter().map(|x| v.span(*x)).collect(),
            ctx: v.span(ctx),
            values: vals.into_iter().collect(),
        })
        .collect()
}
