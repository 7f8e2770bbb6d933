//! The four program transformations: Replicate and Move rebuild a partial
//! match inside one program, Insert and Replace carry donor constructs into
//! it. Every edit is a text splice on the recipient source followed by a
//! reparse, a scope check and, for Replicate and Insert, a rescan.

mod context;
mod edit;
mod rebind;
mod similarity;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::constructs::{CId, ConstructTree};
use crate::grammar::TokenSpan;
use crate::program::{Language, Program};
use crate::styles::{
    branch_index, branches, category, scan_uncapped, style, CompositionStyle, MutatorKind, Resolved,
    StyleMatch, StyleName,
};

pub use context::{match_context, partialize, removable, ContextBinding, Hole, MatchInput, PartialContext};
pub use edit::{apply_splices, end_of, line_indent, unit_inside, unit_of, Location, Splice, Where};
pub use rebind::{render, reparameterize, Policy, Rebinding, Reparam, Target, Taken};
pub use similarity::{environment, similarity, KlrParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutationError {
    #[error("mutator {kind} not allowed for style {style}")]
    NotAllowed { style: StyleName, kind: MutatorKind },
    #[error("{0}")]
    Contract(String),
    #[error("no candidate context in recipient")]
    NoCandidateContext,
    #[error("anchors cannot be matched in any candidate context")]
    NoAnchorMatch,
    #[error("no insertion point at the bound location")]
    NoInsertionPoint,
    #[error("no construct of the removed type to move")]
    MoveNoCandidate,
    #[error("no compatible visible declaration for {0}")]
    RebindFailure(String),
    #[error("mutated program does not parse: {0}")]
    Reparse(String),
    #[error("edit introduces unresolved uses")]
    NewUnresolvedUse,
    #[error("style not found at the bound context after the edit")]
    StyleNotRebuilt,
    #[error("cannot serialize edit: {0}")]
    SerializationFailure(String),
}

impl MutationError {
    /// Short stable key used in statistics.
    pub fn reason(&self) -> &'static str {
        match self {
            MutationError::NotAllowed { .. } => "not-allowed",
            MutationError::Contract(_) => "contract",
            MutationError::NoCandidateContext => "no-candidate-context",
            MutationError::NoAnchorMatch => "no-anchor-match",
            MutationError::NoInsertionPoint => "no-insertion-point",
            MutationError::MoveNoCandidate => "move-no-candidate",
            MutationError::RebindFailure(_) => "rebind-failure",
            MutationError::Reparse(_) => "reparse",
            MutationError::NewUnresolvedUse => "new-unresolved-use",
            MutationError::StyleNotRebuilt => "style-not-rebuilt",
            MutationError::SerializationFailure(_) => "serialization-failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub donor_id: String,
    pub recipient_id: String,
    pub style: StyleName,
    pub kind: MutatorKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorRecord {
    pub index: usize,
    pub donor: [usize; 2],
    pub recipient: [usize; 2],
}

/// What an edit did, for provenance files and logs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanRecord {
    pub removed: Option<usize>,
    pub recipient_ctx: [usize; 2],
    pub anchors: Vec<AnchorRecord>,
    /// Token positions (in the recipient) where material was placed.
    pub locations: Vec<usize>,
    pub similarity: f64,
    pub rebound: Vec<Rebinding>,
    pub renamed: Vec<(String, String)>,
    /// Recipient span of the construct moved by Move.
    pub moved: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MutatedProgram {
    pub text: String,
    pub provenance: Provenance,
    pub reparse_ok: bool,
    pub plan: PlanRecord,
}

#[derive(Debug, Clone, Copy)]
pub struct MutateOptions {
    pub seed: u64,
    /// Position removed by partialization; drawn from the seed when unset.
    pub removed: Option<usize>,
    pub klr: KlrParams,
}

impl MutateOptions {
    pub fn seeded(seed: u64) -> MutateOptions {
        MutateOptions {
            seed,
            removed: None,
            klr: KlrParams::default(),
        }
    }
}

fn span2(s: TokenSpan) -> [usize; 2] {
    [s.start, s.end]
}

/// Apply mutator `kind` for donor match `m` to `recipient`.
pub fn mutate(
    lang: &Language,
    donor: &Program,
    m: &StyleMatch,
    recipient: &Program,
    kind: MutatorKind,
    opts: &MutateOptions,
) -> Result<MutatedProgram, MutationError> {
    let st = style(m.style);
    if !st.allows(kind) {
        return Err(MutationError::NotAllowed {
            style: m.style,
            kind,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut ctx = Ctx {
        lang,
        st: &st,
        res: Resolved::new(&st, &lang.ann),
        donor,
        m,
        rec: recipient,
        klr: opts.klr,
        taken: Taken::default(),
        splices: Vec::new(),
        plan: PlanRecord {
            removed: None,
            recipient_ctx: [0, 0],
            anchors: Vec::new(),
            locations: Vec::new(),
            similarity: 0.0,
            rebound: Vec::new(),
            renamed: Vec::new(),
            moved: None,
        },
    };
    let bound_ctx = match kind {
        MutatorKind::Replicate | MutatorKind::Move => ctx.partial(kind, opts.removed, &mut rng)?,
        MutatorKind::Insert | MutatorKind::Replace => ctx.crossover(kind, &mut rng)?,
    };
    let text = apply_splices(recipient.source(), &ctx.splices)
        .ok_or_else(|| MutationError::SerializationFailure("overlapping splices".into()))?;
    let out = Program::parse(lang, &recipient.id, &text)
        .map_err(|e| MutationError::Reparse(e.to_string()))?;
    if out.chains.unresolved_count() > recipient.chains.unresolved_count() {
        return Err(MutationError::NewUnresolvedUse);
    }
    if matches!(kind, MutatorKind::Replicate | MutatorKind::Insert)
        && !rebuilt_at(&st, lang, recipient, bound_ctx, &out)
    {
        return Err(MutationError::StyleNotRebuilt);
    }
    Ok(MutatedProgram {
        text,
        provenance: Provenance {
            donor_id: donor.id.clone(),
            recipient_id: recipient.id.clone(),
            style: m.style,
            kind,
            seed: opts.seed,
        },
        reparse_ok: true,
        plan: ctx.plan,
    })
}

/// The node of `after` that corresponds to `ctx` of `before`, given that
/// every edit happened inside `ctx`.
pub fn corresponding_ctx(before: &Program, ctx: CId, after: &Program) -> Option<CId> {
    let delta = after.tree.tokens().len() as isize - before.tree.tokens().len() as isize;
    let span = before.ct.node(ctx).span;
    let label = before.ct.label(ctx);
    after.ct.ids().find(|c| {
        let n = after.ct.node(*c);
        n.label == label
            && n.span.start == span.start
            && n.span.end as isize == span.end as isize + delta
    })
}

fn rebuilt_at(
    st: &CompositionStyle,
    lang: &Language,
    before: &Program,
    ctx: CId,
    after: &Program,
) -> bool {
    let Some(target) = corresponding_ctx(before, ctx, after) else {
        return false;
    };
    scan_uncapped(st, after, &lang.ann, &st.default_bounds())
        .iter()
        .any(|m| m.ctx == target)
}

struct Ctx<'a> {
    lang: &'a Language,
    st: &'a CompositionStyle,
    res: Resolved,
    donor: &'a Program,
    m: &'a StyleMatch,
    rec: &'a Program,
    klr: KlrParams,
    taken: Taken,
    splices: Vec<Splice>,
    plan: PlanRecord,
}

impl Ctx<'_> {
    fn bind(&mut self, anchors: &[usize], same_rule: bool) -> Result<ContextBinding, MutationError> {
        let b = match_context(&MatchInput {
            style: self.st,
            ann: &self.lang.ann,
            donor: self.donor,
            m: self.m,
            recipient: self.rec,
            anchors,
            same_rule,
            klr: self.klr,
        })?;
        self.plan.recipient_ctx = span2(self.rec.ct.node(b.recipient_ctx).span);
        self.plan.similarity = b.similarity;
        self.plan.anchors = b
            .anchor_map
            .iter()
            .map(|(i, x)| AnchorRecord {
                index: *i,
                donor: span2(self.donor.ct.node(self.m.nodes[*i]).span),
                recipient: span2(self.rec.ct.node(*x).span),
            })
            .collect();
        Ok(b)
    }

    /// Rebind and render `material` of `src` for placement at `loc`.
    fn material(
        &mut self,
        src: &Program,
        material: TokenSpan,
        ctx: CId,
        loc: Location,
        policy: Policy,
        departing: Option<TokenSpan>,
        rng: &mut impl Rng,
    ) -> Result<String, MutationError> {
        let target = Target {
            ann: &self.lang.ann,
            recipient: self.rec,
            ctx,
            loc,
            departing,
        };
        let r = reparameterize(src, material, &target, policy, &mut self.taken, rng)?;
        self.plan.rebound.extend(r.rebound.iter().cloned());
        self.plan.renamed.extend(r.renamed.iter().cloned());
        self.plan.locations.push(loc.pos);
        Ok(render(src, material, &r.tokens))
    }

    fn insert_at(&mut self, src: &Program, material: TokenSpan, text: &str, loc: &Location) {
        let from = line_indent(src.source(), src.tree.byte_range(material).0).to_string();
        let ins = edit::insertion_text(self.rec.source(), loc, text, &from);
        self.splices.push(Splice {
            start: loc.byte,
            end: loc.byte,
            text: ins,
        });
    }

    fn partial(
        &mut self,
        kind: MutatorKind,
        removed: Option<usize>,
        rng: &mut impl Rng,
    ) -> Result<CId, MutationError> {
        let pc = partialize(self.m, &self.donor.ct, removed, rng)?;
        self.plan.removed = Some(pc.removed);
        let b = self.bind(&pc.anchors, false)?;
        let c = b.recipient_ctx;
        let loc = self.hole_location(&pc, &b)?;
        let rec = self.rec;
        match kind {
            MutatorKind::Replicate => {
                let eligible: Vec<usize> = pc
                    .anchors
                    .iter()
                    .copied()
                    .filter(|i| !(self.m.style == StyleName::Balanced && *i == 0))
                    .collect();
                let pick = eligible[rng.gen_range(0..eligible.len())];
                let a = b.node(pick).expect("anchor bound");
                let unit = unit_of(&rec.tree, rec.ct.node(a).parse).ok_or(MutationError::NoInsertionPoint)?;
                let span = rec.tree.node(unit).span;
                let text = self.material(rec, span, c, loc, Policy::Redraw, None, rng)?;
                self.insert_at(rec, span, &text, &loc);
            }
            MutatorKind::Move => {
                let unit = self.move_candidate(&pc, &b, &loc)?;
                let span = rec.tree.node(unit).span;
                self.plan.moved = Some(span2(span));
                let text = self.material(rec, span, c, loc, Policy::Keep, Some(span), rng)?;
                self.insert_at(rec, span, &text, &loc);
                let (s, e) = rec.tree.byte_range(span);
                let src = rec.source();
                let before = src[..s].trim_end_matches([' ', '\t']);
                let start = if before.ends_with('\n') {
                    before.len() - 1
                } else {
                    s
                };
                let start = if loc.byte > start && loc.byte < s { s } else { start };
                self.splices.push(Splice {
                    start,
                    end: e,
                    text: String::new(),
                });
            }
            _ => unreachable!("partial contexts serve Replicate and Move"),
        }
        Ok(c)
    }

    fn hole_location(&self, pc: &PartialContext, b: &ContextBinding) -> Result<Location, MutationError> {
        let rec = self.rec;
        let (tree, ct) = (&rec.tree, &rec.ct);
        let c = b.recipient_ctx;
        let cparse = ct.node(c).parse;
        let node = |i: usize| b.node(i).expect("anchor bound");
        let unit = |i: usize| unit_inside(tree, ct.node(node(i)).parse, cparse).ok_or(MutationError::NoInsertionPoint);
        let at = match pc.hole {
            Hole::After(i) => Where::After(unit(i)?),
            Hole::Before(i) => Where::Before(unit(i)?),
            Hole::Inside(i) => end_of(tree, ct.node(node(i)).parse).ok_or(MutationError::NoInsertionPoint)?,
            Hole::OtherBranch { cond, sibling } => {
                let ifc = node(cond);
                let br = branches(tree, &self.lang.ann, ct, ifc);
                let home = branch_index(tree, &br, ct, node(sibling));
                let pos = &self.res.positions[pc.removed.min(self.res.positions.len() - 1)];
                let want = category(&self.lang.ann, self.donor.ct.label(self.m.nodes[pc.removed]), pos);
                let others: Vec<usize> = (0..br.len()).filter(|i| Some(*i) != home).collect();
                let lacking = others.iter().copied().find(|bi| {
                    !ct.subtree(ifc).skip(1).map(CId).any(|x| {
                        branch_index(tree, &br, ct, x) == Some(*bi)
                            && category(&self.lang.ann, ct.label(x), pos) == want
                    })
                });
                let target = lacking.or(others.last().copied()).ok_or(MutationError::NoInsertionPoint)?;
                end_of(tree, br[target]).ok_or(MutationError::NoInsertionPoint)?
            }
        };
        let loc = Location::new(tree, ct, at);
        // the hole must lie inside the bound context
        let cs = ct.node(c).span;
        if loc.pos < cs.start || loc.pos > cs.end || !ct.is_ancestor_or_self(c, loc.enclosing) {
            return Err(MutationError::NoInsertionPoint);
        }
        Ok(loc)
    }

    /// Unit of the recipient construct closest in text to the removed donor
    /// construct that can be moved to `loc`.
    fn move_candidate(
        &self,
        pc: &PartialContext,
        b: &ContextBinding,
        loc: &Location,
    ) -> Result<crate::grammar::NodeId, MutationError> {
        let rec = self.rec;
        let (tree, ct) = (&rec.tree, &rec.ct);
        let ann = &self.lang.ann;
        let d = self.m.nodes[pc.removed];
        let pos = &self.res.positions[pc.removed.min(self.res.positions.len() - 1)];
        let want = category(ann, self.donor.ct.label(d), pos);
        let want_text = self.donor.tree.normalized_text(self.donor.ct.node(d).parse);
        let c = b.recipient_ctx;
        let anchors: Vec<CId> = b.anchor_map.iter().map(|(_, x)| *x).collect();
        let mut cands: Vec<(usize, CId, crate::grammar::NodeId)> = Vec::new();
        for x in ct.ids().skip(1) {
            if category(ann, ct.label(x), pos) != want || want.is_none() {
                continue;
            }
            if ct.is_ancestor_or_self(x, c) {
                continue;
            }
            if anchors.iter().any(|a| ct.is_ancestor_or_self(*a, x) || ct.is_ancestor_or_self(x, *a)) {
                continue;
            }
            let Some(u) = unit_of(tree, ct.node(x).parse) else { continue };
            if tree.is_ancestor_or_self(u, ct.node(c).parse)
                || anchors.iter().any(|a| tree.is_ancestor_or_self(u, ct.node(*a).parse))
            {
                continue;
            }
            let (s, e) = tree.node_bytes(u);
            if loc.byte > s && loc.byte < e {
                continue;
            }
            let dist = strsim::levenshtein(&want_text, &tree.normalized_text(ct.node(x).parse));
            cands.push((dist, x, u));
        }
        cands.sort_by_key(|(dist, x, _)| (*dist, *x));
        cands.first().map(|c| c.2).ok_or(MutationError::MoveNoCandidate)
    }

    fn crossover(&mut self, kind: MutatorKind, rng: &mut impl Rng) -> Result<CId, MutationError> {
        let m = self.m;
        let dct = &self.donor.ct;
        let all: Vec<usize> = (0..m.nodes.len()).collect();
        let b = self.bind(&all, kind == MutatorKind::Replace)?;
        let c = b.recipient_ctx;
        let donated: Vec<usize> = all
            .iter()
            .copied()
            .filter(|i| m.nodes[*i] != m.ctx)
            .filter(|i| {
                !all.iter().any(|j| {
                    j != i && m.nodes[*j] != m.ctx && dct.is_proper_ancestor(m.nodes[*j], m.nodes[*i])
                })
            })
            .collect();
        let (donor, rec) = (self.donor, self.rec);
        let cparse = rec.ct.node(c).parse;
        let dctx_parse = dct.node(m.ctx).parse;
        for i in donated {
            let x = b.node(i).expect("all nodes bound");
            let xparse = rec.ct.node(x).parse;
            let n = dct.node(m.nodes[i]).parse;
            match kind {
                MutatorKind::Insert => {
                    let du = unit_inside(&donor.tree, n, dctx_parse).ok_or(MutationError::NoInsertionPoint)?;
                    let ru = unit_inside(&rec.tree, xparse, cparse).ok_or(MutationError::NoInsertionPoint)?;
                    let loc = Location::new(&rec.tree, &rec.ct, Where::After(ru));
                    let span = donor.tree.node(du).span;
                    let text = self.material(donor, span, c, loc, Policy::Keep, None, rng)?;
                    self.insert_at(donor, span, &text, &loc);
                }
                MutatorKind::Replace => {
                    let loc = Location::new(&rec.tree, &rec.ct, Where::Before(xparse));
                    let span = donor.tree.node(n).span;
                    let text = self.material(donor, span, c, loc, Policy::Keep, None, rng)?;
                    let from = line_indent(donor.source(), donor.tree.byte_range(span).0).to_string();
                    let to = line_indent(rec.source(), loc.byte).to_string();
                    let (s, e) = rec.tree.node_bytes(xparse);
                    self.splices.push(Splice {
                        start: s,
                        end: e,
                        text: edit::reindent(&text, &from, &to),
                    });
                }
                _ => unreachable!("crossovers are Insert and Replace"),
            }
        }
        Ok(c)
    }
}

/// Token spans outside `ctx` are unchanged between `before` and `after`.
pub fn edit_is_local(before: &Program, ctx: CId, after: &Program) -> bool {
    let span = before.ct.node(ctx).span;
    let (a, b) = (before.tree.tokens(), after.tree.tokens());
    if b.len() + span.len() < a.len() {
        return false;
    }
    let tail = a.len() - span.end;
    a[..span.start].iter().zip(&b[..span.start]).all(|(x, y)| x.text == y.text)
        && b.len() >= span.start + tail
        && a[span.end..]
            .iter()
            .zip(&b[b.len() - tail..])
            .all(|(x, y)| x.text == y.text)
}

/// Helper for callers holding only a construct tree: label name of a node.
pub fn label_name<'a>(lang: &'a Language, ct: &ConstructTree, id: CId) -> &'a str {
    lang.ann.label_name(ct.label(id))
}
