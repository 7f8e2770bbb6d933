//! Rebinding free uses of moved, cloned or donated material to
//! declarations visible where it lands.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::Rng;
use serde::Serialize;

use super::edit::Location;
use super::MutationError;
use crate::constructs::{name_token, scope_of, AnnotationSet, CId};
use crate::grammar::TokenSpan;
use crate::program::Program;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Keep a use's name when it is still valid at the target, otherwise
    /// draw a replacement.
    Keep,
    /// Draw a different valid name whenever one exists.
    Redraw,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rebinding {
    pub from: String,
    pub to: String,
    pub type_label: String,
}

/// Result of reparameterizing one piece of material.
#[derive(Debug, Clone, Default)]
pub struct Reparam {
    /// Free uses rebound, one entry per distinct source declaration.
    pub rebound: Vec<Rebinding>,
    /// Material declarations renamed to avoid clashing at the target.
    pub renamed: Vec<(String, String)>,
    /// Token index (in the source program) -> replacement text.
    pub tokens: HashMap<usize, String>,
}

/// Names chosen so far within one edit, shared across its materials.
#[derive(Debug, Default)]
pub struct Taken(pub HashSet<String>);

pub struct Target<'a> {
    pub ann: &'a AnnotationSet,
    pub recipient: &'a Program,
    pub ctx: CId,
    pub loc: Location,
    /// Recipient tokens that leave their place with this edit (Move).
    pub departing: Option<TokenSpan>,
}

fn inside(outer: TokenSpan, inner: TokenSpan) -> bool {
    outer.start <= inner.start && inner.end <= outer.end
}

fn departs(target: &Target, span: TokenSpan) -> bool {
    target.departing.is_some_and(|d| inside(d, span))
}

/// Rebind the free uses of `material` (a token span of `src`) for placement
/// at `target`. Candidates are declarations visible at the location that
/// lie inside the target context and are type-compatible.
pub fn reparameterize(
    src: &Program,
    material: TokenSpan,
    target: &Target,
    policy: Policy,
    taken: &mut Taken,
    rng: &mut impl Rng,
) -> Result<Reparam, MutationError> {
    let (ann, rec) = (target.ann, target.recipient);
    let rct = &rec.ct;
    let mut out = Reparam::default();

    // material declarations that will live directly in the target scope
    let target_scope = std::iter::once(target.loc.enclosing)
        .chain(rct.ancestors(target.loc.enclosing))
        .find(|a| ann.is_scope(rct.label(*a)) || *a == rct.root())
        .unwrap_or(rct.root());
    let clash: HashSet<&str> = rec
        .chains
        .defs
        .iter()
        .filter(|d| d.scope == target_scope)
        .filter(|d| !departs(target, rct.node(d.node).span))
        .map(|d| d.name.as_str())
        .collect();
    let all_names: HashSet<&str> = rec.chains.defs.iter().map(|d| d.name.as_str()).collect();
    let mut def_rename: HashMap<usize, String> = HashMap::new();
    for (di, d) in src.chains.defs.iter().enumerate() {
        if !inside(material, src.ct.node(d.node).span) {
            continue;
        }
        // declared in a scope the material does not carry along
        let scope_span = src.ct.node(scope_of(&src.ct, ann, d.node)).span;
        if inside(material, scope_span) {
            continue;
        }
        if !(clash.contains(d.name.as_str()) || taken.0.contains(&d.name)) {
            taken.0.insert(d.name.clone());
            continue;
        }
        let fresh = (1..)
            .map(|n| format!("{}_{n}", d.name))
            .find(|c| !all_names.contains(c.as_str()) && !taken.0.contains(c))
            .expect("unbounded");
        taken.0.insert(fresh.clone());
        out.renamed.push((d.name.clone(), fresh.clone()));
        if let Some(t) = name_token(&src.tree, &src.ct, d.node) {
            out.tokens.insert(t, fresh.clone());
        }
        def_rename.insert(di, fresh);
    }

    // free uses grouped by the declaration they resolve to, in order of
    // first appearance
    let mut free: BTreeMap<usize, (usize, Vec<CId>)> = BTreeMap::new();
    for u in &src.chains.uses {
        let span = src.ct.node(u.node).span;
        if !inside(material, span) {
            continue;
        }
        let Some(d) = u.def else {
            return Err(MutationError::RebindFailure(u.name.clone()));
        };
        if let Some(new) = def_rename.get(&d) {
            if let Some(t) = name_token(&src.tree, &src.ct, u.node) {
                out.tokens.insert(t, new.clone());
            }
            continue;
        }
        if inside(material, src.ct.node(src.chains.defs[d].node).span) {
            continue;
        }
        let first = span.start;
        free.entry(d).or_insert((first, Vec::new())).1.push(u.node);
    }
    let mut groups: Vec<(usize, Vec<CId>)> = free.into_iter().map(|(d, (_, v))| (d, v)).collect();
    groups.sort_by_key(|(_, v)| src.ct.node(v[0]).span.start);

    let visible = rec
        .chains
        .visible(rct, ann, target.loc.enclosing, target.loc.pos);
    for (d, uses) in groups {
        let def = &src.chains.defs[d];
        let mut cands: Vec<&str> = visible
            .iter()
            .map(|v| &rec.chains.defs[*v])
            .filter(|v| rct.is_ancestor_or_self(target.ctx, v.node))
            .filter(|v| !departs(target, rct.node(v.node).span))
            .filter(|v| ann.compatible(&def.type_label, &v.type_label))
            .map(|v| v.name.as_str())
            .collect();
        if cands.is_empty() {
            return Err(MutationError::RebindFailure(def.name.clone()));
        }
        let to = match policy {
            Policy::Keep if cands.contains(&def.name.as_str()) => def.name.clone(),
            Policy::Redraw if cands.len() > 1 => {
                cands.retain(|c| *c != def.name);
                cands[rng.gen_range(0..cands.len())].to_string()
            }
            _ => cands[rng.gen_range(0..cands.len())].to_string(),
        };
        if to != def.name {
            for u in &uses {
                if let Some(t) = name_token(&src.tree, &src.ct, *u) {
                    out.tokens.insert(t, to.clone());
                }
            }
        }
        out.rebound.push(Rebinding {
            from: def.name.clone(),
            to,
            type_label: def.type_label.clone(),
        });
    }
    Ok(out)
}

/// Source text of `span` in `src` with token replacements applied.
pub fn render(src: &Program, span: TokenSpan, tokens: &HashMap<usize, String>) -> String {
    let tree = &src.tree;
    let (start, end) = tree.byte_range(span);
    let mut out = String::new();
    let mut at = start;
    for t in span.start..span.end {
        if let Some(rep) = tokens.get(&t) {
            let (s, e) = tree.tokens()[t].byte_span;
            out.push_str(&tree.source()[at..s]);
            out.push_str(rep);
            at = e;
        }
    }
    out.push_str(&tree.source()[at..end]);
    out
}
