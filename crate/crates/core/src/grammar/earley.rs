//! Earley recognizer plus a deterministic derivation extractor.
//!
//! Nullable rules use the Aycock-Horspool prediction shortcut. Once the
//! chart accepts, a derivation is read back top-down: alternatives are tried
//! in declaration order and, inside an alternative, earlier symbols take the
//! longest span that still lets the rest of the alternative match.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::{Grammar, RuleId, Symbol, Token};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at token {furthest}{}: expected one of [{}]",
    match found { Some(t) => format!(" (found {t:?})"), None => " (end of input)".to_string() },
    expected.join(", "))]
pub struct ParseError {
    /// Furthest token index the parser reached.
    pub furthest: usize,
    /// Text of the offending token; `None` when input ended too early.
    pub found: Option<String>,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Item {
    rule: u32,
    alt: u32,
    dot: u32,
    origin: u32,
}

#[derive(Debug, Clone)]
pub(crate) enum DerivChild {
    Token(usize),
    Node(Deriv),
}

#[derive(Debug, Clone)]
pub(crate) struct Deriv {
    pub rule: RuleId,
    pub alt: usize,
    pub start: usize,
    pub end: usize,
    pub children: Vec<DerivChild>,
}

struct Chart<'g> {
    g: &'g Grammar,
    sets: Vec<Vec<Item>>,
    seen: Vec<HashSet<Item>>,
    /// (rule, alt, start, end) of every completed alternative.
    completed: HashSet<(u32, u32, u32, u32)>,
    /// (rule, start) -> ends, for every completed rule.
    ends: HashMap<(u32, u32), Vec<u32>>,
}

impl<'g> Chart<'g> {
    fn next_symbol(&self, it: &Item) -> Option<Symbol> {
        self.g.rules[it.rule as usize].alts[it.alt as usize]
            .get(it.dot as usize)
            .copied()
    }

    fn add(&mut self, k: usize, it: Item) {
        if self.seen[k].insert(it) {
            self.sets[k].push(it);
        }
    }
}

pub(crate) fn parse_tokens(
    g: &Grammar,
    start: RuleId,
    tokens: &[Token],
) -> Result<Deriv, ParseError> {
    let n = tokens.len();
    let mut chart = Chart {
        g,
        sets: vec![Vec::new(); n + 1],
        seen: vec![HashSet::new(); n + 1],
        completed: HashSet::new(),
        ends: HashMap::new(),
    };
    for alt in 0..g.rule(start).alts.len() {
        chart.add(
            0,
            Item {
                rule: start.0,
                alt: alt as u32,
                dot: 0,
                origin: 0,
            },
        );
    }

    for k in 0..=n {
        let mut i = 0;
        while i < chart.sets[k].len() {
            let it = chart.sets[k][i];
            i += 1;
            match chart.next_symbol(&it) {
                Some(Symbol::Rule(b)) => {
                    for alt in 0..g.rule(b).alts.len() {
                        chart.add(
                            k,
                            Item {
                                rule: b.0,
                                alt: alt as u32,
                                dot: 0,
                                origin: k as u32,
                            },
                        );
                    }
                    if g.is_nullable(b) {
                        chart.add(k, Item { dot: it.dot + 1, ..it });
                    }
                }
                Some(Symbol::Term(t)) => {
                    if k < n && tokens[k].class == t {
                        chart.add(k + 1, Item { dot: it.dot + 1, ..it });
                    }
                }
                None => {
                    if chart
                        .completed
                        .insert((it.rule, it.alt, it.origin, k as u32))
                    {
                        let ends = chart.ends.entry((it.rule, it.origin)).or_default();
                        if !ends.contains(&(k as u32)) {
                            ends.push(k as u32);
                        }
                    }
                    let origin = it.origin as usize;
                    let mut j = 0;
                    while j < chart.sets[origin].len() {
                        let w = chart.sets[origin][j];
                        j += 1;
                        if chart.next_symbol(&w) == Some(Symbol::Rule(RuleId(it.rule))) {
                            chart.add(k, Item { dot: w.dot + 1, ..w });
                        }
                    }
                }
            }
        }
    }

    let accepted = (0..g.rule(start).alts.len())
        .any(|alt| chart.completed.contains(&(start.0, alt as u32, 0, n as u32)));
    if !accepted {
        return Err(error_at(&chart, tokens));
    }
    for ends in chart.ends.values_mut() {
        ends.sort_unstable_by(|a, b| b.cmp(a));
    }
    let mut ex = Extractor {
        chart: &chart,
        tokens,
        memo: HashMap::new(),
        stack: HashSet::new(),
    };
    Ok(ex
        .build(start, 0, n)
        .expect("accepted chart always yields a derivation"))
}

fn error_at(chart: &Chart<'_>, tokens: &[Token]) -> ParseError {
    let n = tokens.len();
    let k = (0..=n).rev().find(|&k| !chart.sets[k].is_empty()).unwrap_or(0);
    let mut expected: Vec<String> = chart.sets[k]
        .iter()
        .filter_map(|it| match chart.next_symbol(it) {
            Some(Symbol::Term(t)) => Some(chart.g.terminal(t).name.clone()),
            _ => None,
        })
        .collect();
    expected.sort();
    expected.dedup();
    ParseError {
        furthest: k.min(n.saturating_sub(1)),
        found: tokens.get(k).map(|t| t.text.clone()),
        expected,
    }
}

struct Extractor<'c, 'g> {
    chart: &'c Chart<'g>,
    tokens: &'c [Token],
    memo: HashMap<(u32, u32, u32, u32, u32), bool>,
    stack: HashSet<(u32, u32, u32)>,
}

impl Extractor<'_, '_> {
    fn symbols(&self, rule: u32, alt: u32) -> &[Symbol] {
        &self.chart.g.rules[rule as usize].alts[alt as usize]
    }

    fn ends(&self, rule: u32, pos: u32) -> &[u32] {
        self.chart
            .ends
            .get(&(rule, pos))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Can symbols `k..` of (rule, alt) cover exactly `pos..end`?
    fn feasible(&mut self, rule: u32, alt: u32, k: u32, pos: u32, end: u32) -> bool {
        let syms = self.symbols(rule, alt);
        if k as usize == syms.len() {
            return pos == end;
        }
        let key = (rule, alt, k, pos, end);
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let ok = match syms[k as usize] {
            Symbol::Term(t) => {
                pos < end
                    && self.tokens[pos as usize].class == t
                    && self.feasible(rule, alt, k + 1, pos + 1, end)
            }
            Symbol::Rule(b) => {
                let ends: Vec<u32> = self.ends(b.0, pos).iter().copied().filter(|e| *e <= end).collect();
                ends.into_iter()
                    .any(|e| self.feasible(rule, alt, k + 1, e, end))
            }
        };
        self.memo.insert(key, ok);
        ok
    }

    fn build(&mut self, rule: RuleId, start: usize, end: usize) -> Option<Deriv> {
        let key = (rule.0, start as u32, end as u32);
        if !self.stack.insert(key) {
            return None;
        }
        let result = self.build_inner(rule, start, end);
        self.stack.remove(&key);
        result
    }

    fn build_inner(&mut self, rule: RuleId, start: usize, end: usize) -> Option<Deriv> {
        let nalts = self.chart.g.rule(rule).alts.len();
        for alt in 0..nalts as u32 {
            if !self
                .chart
                .completed
                .contains(&(rule.0, alt, start as u32, end as u32))
            {
                continue;
            }
            if let Some(children) = self.build_seq(rule.0, alt, 0, start as u32, end as u32) {
                return Some(Deriv {
                    rule,
                    alt: alt as usize,
                    start,
                    end,
                    children,
                });
            }
        }
        None
    }

    fn build_seq(
        &mut self,
        rule: u32,
        alt: u32,
        k: u32,
        pos: u32,
        end: u32,
    ) -> Option<Vec<DerivChild>> {
        let syms = self.symbols(rule, alt);
        if k as usize == syms.len() {
            return (pos == end).then(Vec::new);
        }
        match syms[k as usize] {
            Symbol::Term(_) => {
                if !self.feasible(rule, alt, k, pos, end) {
                    return None;
                }
                let mut rest = self.build_seq(rule, alt, k + 1, pos + 1, end)?;
                rest.insert(0, DerivChild::Token(pos as usize));
                Some(rest)
            }
            Symbol::Rule(b) => {
                let ends: Vec<u32> = self.ends(b.0, pos).iter().copied().filter(|e| *e <= end).collect();
                for e in ends {
                    if !self.feasible(rule, alt, k + 1, e, end) {
                        continue;
                    }
                    let Some(child) = self.build(b, pos as usize, e as usize) else {
                        continue;
                    };
                    if let Some(mut rest) = self.build_seq(rule, alt, k + 1, e, end) {
                        rest.insert(0, DerivChild::Node(child));
                        return Some(rest);
                    }
                }
                None
            }
        }
    }
}
