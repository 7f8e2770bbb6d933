use std::collections::BTreeMap;

use super::{branch_index, branches, category, find_ctx, Bounds, CompositionStyle, Param, Resolved, StyleMatch, StyleName, MATCH_CAP};
use crate::constructs::{AnnotationSet, CId, ConstructTree};
use crate::program::Program;

/// All matches of `style` in `prog`, in preorder of their node tuples, at
/// most [`MATCH_CAP`] of them.
pub fn scan(
    style: &CompositionStyle,
    prog: &Program,
    ann: &AnnotationSet,
    bounds: &Bounds,
) -> Vec<StyleMatch> {
    Scanner::new(style, prog, ann, bounds, Some(MATCH_CAP)).run()
}

/// Like [`scan`] without the cap.
pub fn scan_uncapped(
    style: &CompositionStyle,
    prog: &Program,
    ann: &AnnotationSet,
    bounds: &Bounds,
) -> Vec<StyleMatch> {
    Scanner::new(style, prog, ann, bounds, None).run()
}

struct Scanner<'a> {
    style: &'a CompositionStyle,
    prog: &'a Program,
    ann: &'a AnnotationSet,
    bounds: &'a Bounds,
    cap: Option<usize>,
    res: Resolved,
    out: Vec<StyleMatch>,
}

impl<'a> Scanner<'a> {
    fn new(
        style: &'a CompositionStyle,
        prog: &'a Program,
        ann: &'a AnnotationSet,
        bounds: &'a Bounds,
        cap: Option<usize>,
    ) -> Scanner<'a> {
        Scanner {
            style,
            prog,
            ann,
            bounds,
            cap,
            res: Resolved::new(style, ann),
            out: Vec::new(),
        }
    }

    fn ct(&self) -> &'a ConstructTree {
        &self.prog.ct
    }

    fn full(&self) -> bool {
        self.cap.is_some_and(|c| self.out.len() >= c)
    }

    /// Category of every construct for position `pos`.
    fn cats(&self, pos: usize) -> Vec<Option<crate::constructs::Label>> {
        let ct = self.ct();
        ct.ids()
            .map(|c| {
                if c == ct.root() {
                    None
                } else {
                    category(self.ann, ct.label(c), &self.res.positions[pos])
                }
            })
            .collect()
    }

    fn ctx(&self, start: CId, nodes: &[CId]) -> Option<CId> {
        find_ctx(self.ct(), &self.prog.chains, self.ann, &self.res.ctx, start, nodes)
    }

    fn emit(&mut self, nodes: Vec<CId>, ctx: CId, values: BTreeMap<Param, usize>) {
        if self.bounds.admits(&values) {
            self.out.push(StyleMatch {
                style: self.style.name,
                nodes,
                ctx,
                values,
                donor_id: self.prog.id.clone(),
            });
        }
    }

    fn run(mut self) -> Vec<StyleMatch> {
        if self.res.ctx.is_empty() || self.res.positions.iter().any(Vec::is_empty) {
            return Vec::new();
        }
        match self.style.name {
            StyleName::Cousins => self.cousins(),
            StyleName::Nesting => self.nesting(),
            StyleName::Precedes => self.precedes(),
            StyleName::Balanced => self.balanced(),
            StyleName::Sequence => self.sequence(),
            StyleName::Exists => self.exists(),
        }
        self.out
    }

    fn cousins(&mut self) {
        let ct = self.ct();
        let cats = self.cats(0);
        let max_d = self.bounds.get(Param::D);
        for a in ct.ids() {
            let Some(ca) = cats[a.0] else { continue };
            let end = ct.node(a).span.end;
            // nodes after a's subtree are neither ancestors nor descendants;
            // their starts are nondecreasing in preorder
            for b in ct.subtree(a).end..ct.len() {
                let d = ct.node(CId(b)).span.start - end;
                if max_d.is_some_and(|m| d > m) {
                    break;
                }
                if cats[b] != Some(ca) {
                    continue;
                }
                let b = CId(b);
                let nodes = [a, b];
                let Some(ctx) = self.ctx(ct.lca(a, b), &nodes) else { continue };
                let base = ct.node(ctx).depth + 1;
                let k = ct.node(a).depth.max(ct.node(b).depth) - base;
                self.emit(nodes.to_vec(), ctx, [(Param::K, k), (Param::D, d)].into());
                if self.full() {
                    return;
                }
            }
        }
    }

    fn nesting(&mut self) {
        let ct = self.ct();
        let cats = self.cats(0);
        for a in ct.ids() {
            let Some(ca) = cats[a.0] else { continue };
            for b in ct.subtree(a).skip(1) {
                if cats[b] != Some(ca) {
                    continue;
                }
                let b = CId(b);
                // admissible nodes on the path below a, b included
                let d = std::iter::once(b)
                    .chain(ct.ancestors(b).take_while(|x| *x != a))
                    .filter(|x| cats[x.0].is_some())
                    .count();
                let nodes = [a, b];
                let Some(ctx) = self.ctx(a, &nodes) else { continue };
                self.emit(nodes.to_vec(), ctx, [(Param::D, d)].into());
                if self.full() {
                    return;
                }
            }
        }
    }

    fn precedes(&mut self) {
        let ct = self.ct();
        let cats = self.cats(0);
        for a in ct.ids() {
            if cats[a.0].is_none() {
                continue;
            }
            for b in ct.subtree(a).end..ct.len() {
                if cats[b].is_none() {
                    continue;
                }
                let b = CId(b);
                let nodes = [a, b];
                let Some(ctx) = self.ctx(ct.lca(a, b), &nodes) else { continue };
                self.emit(nodes.to_vec(), ctx, BTreeMap::new());
                if self.full() {
                    return;
                }
            }
        }
    }

    fn balanced(&mut self) {
        let ct = self.ct();
        let tree = &self.prog.tree;
        let ifs = self.cats(0);
        let cats = self.cats(1);
        for i in ct.ids() {
            if ifs[i.0].is_none() {
                continue;
            }
            let branches = branches(tree, self.ann, ct, i);
            let branch_of = |x: CId| branch_index(tree, &branches, ct, x);
            let inner: Vec<(CId, usize)> = ct
                .subtree(i)
                .skip(1)
                .map(CId)
                .filter(|x| cats[x.0].is_some())
                .filter_map(|x| branch_of(x).map(|b| (x, b)))
                .collect();
            let base = ct.node(i).depth;
            for (xi, (x, bx)) in inner.iter().enumerate() {
                for (y, by) in &inner[xi + 1..] {
                    if bx == by || cats[x.0] != cats[y.0] {
                        continue;
                    }
                    let d = ct.node(*x).depth.max(ct.node(*y).depth) - base;
                    let nodes = [i, *x, *y];
                    let Some(ctx) = self.ctx(i, &nodes) else { continue };
                    self.emit(nodes.to_vec(), ctx, [(Param::D, d)].into());
                    if self.full() {
                        return;
                    }
                }
            }
        }
    }

    fn sequence(&mut self) {
        let ct = self.ct();
        let cats = self.cats(0);
        let mut runs: Vec<(CId, Vec<CId>)> = Vec::new();
        for p in ct.ids() {
            let kids = &ct.node(p).children;
            let mut run: Vec<CId> = Vec::new();
            for &c in kids {
                let joins = run.last().is_some_and(|prev| {
                    cats[c.0].is_some()
                        && cats[prev.0] == cats[c.0]
                        && ct.node(*prev).span.end == ct.node(c).span.start
                });
                if !joins {
                    if run.len() >= 2 {
                        runs.push((p, std::mem::take(&mut run)));
                    }
                    run.clear();
                    if cats[c.0].is_some() {
                        run.push(c);
                    }
                } else {
                    run.push(c);
                }
            }
            if run.len() >= 2 {
                runs.push((p, run));
            }
        }
        runs.sort_by(|a, b| a.1.cmp(&b.1));
        for (p, run) in runs {
            let Some(ctx) = self.ctx(p, &run) else { continue };
            let l = run.len();
            self.emit(run, ctx, [(Param::L, l)].into());
            if self.full() {
                return;
            }
        }
    }

    fn exists(&mut self) {
        let ct = self.ct();
        let cats = self.cats(0);
        for n in ct.ids() {
            if cats[n.0].is_none() {
                continue;
            }
            let parent = ct.node(n).parent.expect("root has no category");
            let Some(ctx) = self.ctx(parent, &[n]) else { continue };
            let l = ct.node(n).span.len();
            self.emit(vec![n], ctx, [(Param::L, l)].into());
            if self.full() {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::styles::style;

    fn prog(src: &str) -> Program {
        Program::parse(builtin::mini_c(), "t", src).unwrap()
    }

    fn run(name: StyleName, src: &str, bounds: &str) -> (Program, Vec<StyleMatch>) {
        let p = prog(src);
        let s = style(name);
        let b = Bounds::parse(&s, bounds).unwrap();
        let m = scan(&s, &p, &builtin::mini_c().ann, &b);
        (p, m)
    }

    #[test]
    fn single_loop_has_no_cousins() {
        let (_, m) = run(
            StyleName::Cousins,
            "void f(int n) { for (int i = 0; i < n; i++) { g(i); } }",
            "k=0,d=0",
        );
        assert!(m.is_empty());
    }

    #[test]
    fn sequence_of_three_loops_is_one_maximal_run() {
        let src = "void f(int n) { for (;;) {} while (n) {} do {} while (n); }";
        let (p, m) = run(StyleName::Sequence, src, "");
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].nodes.len(), 3);
        assert_eq!(m[0].values[&Param::L], 3);
        assert_eq!(builtin::mini_c().ann.label_name(p.ct.label(m[0].ctx)), "FUNC_");
    }

    #[test]
    fn global_uses_have_no_context() {
        let src = "int g = 1; void f(int n) { for (;;) { g += 1; } for (;;) { g += 2; } }";
        let (_, m) = run(StyleName::Cousins, src, "k=0,d=0");
        assert!(m.is_empty());
        // Exists may fall back to the whole program as its context
        let (p, m) = run(StyleName::Exists, src, "");
        assert_eq!(m.len(), 5);
        let ann = &builtin::mini_c().ann;
        let arith: Vec<_> = m
            .iter()
            .filter(|x| ann.label_name(p.ct.label(x.nodes[0])) == "ARITH_EXPR_")
            .collect();
        assert_eq!(arith.len(), 2);
        assert!(arith.iter().all(|x| x.ctx == p.ct.root()));
    }

    #[test]
    fn cap_limits_output() {
        let mut body = String::new();
        for i in 0..40 {
            body.push_str(&format!("x = x + {i}; "));
        }
        let src = format!("void f(int x) {{ {body} }}");
        let (_, m) = run(StyleName::Precedes, &src, "");
        assert_eq!(m.len(), MATCH_CAP);
        let p = prog(&src);
        let s = style(StyleName::Precedes);
        let all = scan_uncapped(&s, &p, &builtin::mini_c().ann, &s.default_bounds());
        assert!(all.len() > MATCH_CAP);
        assert_eq!(&all[..MATCH_CAP], &m[..]);
    }
}
