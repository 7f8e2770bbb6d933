use std::collections::BTreeMap;
use std::sync::Arc;

use super::{scan, CompositionStyle, StyleMatch, StyleName};
use crate::constructs::AnnotationSet;
use crate::program::Program;

/// A match together with the program it was found in.
#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub donor: Arc<Program>,
    pub m: StyleMatch,
}

/// Donor matches grouped by style and the construct types of their nodes.
/// Built once, then only read.
#[derive(Debug, Clone, Default)]
pub struct MatchPool {
    groups: BTreeMap<(StyleName, String), Vec<PoolEntry>>,
}

impl MatchPool {
    pub fn len(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> impl Iterator<Item = (&(StyleName, String), &[PoolEntry])> {
        self.groups.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Entries of one style, in group order.
    pub fn of_style(&self, style: StyleName) -> Vec<&PoolEntry> {
        self.groups
            .range((style, String::new())..)
            .take_while(|((s, _), _)| *s == style)
            .flat_map(|(_, v)| v.iter())
            .collect()
    }

    pub fn styles(&self) -> Vec<StyleName> {
        let mut s: Vec<_> = self.groups.keys().map(|(s, _)| *s).collect();
        s.dedup();
        s
    }
}

/// Scan every corpus program for every style using each style's default
/// bounds.
pub fn extract_pool(
    corpus: &[Arc<Program>],
    styles: &[CompositionStyle],
    ann: &AnnotationSet,
) -> MatchPool {
    let mut pool = MatchPool::default();
    for prog in corpus {
        for s in styles {
            for m in scan(s, prog, ann, &s.default_bounds()) {
                let sig = m
                    .nodes
                    .iter()
                    .map(|n| ann.label_name(prog.ct.label(*n)))
                    .collect::<Vec<_>>()
                    .join(",");
                pool.groups.entry((s.name, sig)).or_default().push(PoolEntry {
                    donor: prog.clone(),
                    m,
                });
            }
        }
    }
    pool
}
