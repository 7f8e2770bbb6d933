//! Context-free grammars loaded at runtime, a tokenizer driven by their
//! token declarations, and an Earley parser producing concrete parse trees.

mod earley;
mod format;
mod tree;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use regex::Regex;
use thiserror::Error;

pub use earley::ParseError;
pub use tree::{NodeId, NodeKind, ParseNode, ParseTree, ShapeEntry, SpacingPolicy, TokenSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId(pub(crate) u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub(crate) u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Rule(RuleId),
    Term(TermId),
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub name: String,
    pub alts: Vec<Vec<Symbol>>,
    /// Desugared group or repetition; spliced away in parse trees.
    pub hidden: bool,
}

#[derive(Debug, Clone)]
pub enum TerminalKind {
    Literal(String),
    Pattern(Regex),
}

#[derive(Debug, Clone)]
pub struct Terminal {
    /// Declared name, or the quoted text for literals (`'for'`).
    pub name: String,
    pub kind: TerminalKind,
    pub priority: i32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("grammar syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("undefined rule {0}")]
    UndefinedRule(String),
    #[error("duplicate rule {0}")]
    DuplicateRule(String),
    #[error("grammar has no start declaration")]
    NoStart,
    #[error("start rule {0} is not defined")]
    UndefinedStart(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unrecognized character {found:?} at offset {offset}")]
pub struct LexError {
    pub offset: usize,
    pub found: char,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub class: TermId,
    pub text: String,
    pub index: usize,
    pub byte_span: (usize, usize),
}

/// A context-free grammar with its lexical specification.
#[derive(Debug)]
pub struct Grammar {
    rules: Vec<Rule>,
    rule_index: HashMap<String, RuleId>,
    terminals: Vec<Terminal>,
    term_index: HashMap<String, TermId>,
    skips: Vec<Regex>,
    start: RuleId,
    repeatable: Vec<bool>,
    nullable: Vec<bool>,
}

impl Grammar {
    fn assemble(
        rules: Vec<Rule>,
        rule_index: HashMap<String, RuleId>,
        terminals: Vec<Terminal>,
        term_index: HashMap<String, TermId>,
        skips: Vec<Regex>,
        start: RuleId,
        repeatable: Vec<bool>,
    ) -> Grammar {
        let mut nullable = vec![false; rules.len()];
        loop {
            let mut changed = false;
            for (i, r) in rules.iter().enumerate() {
                if nullable[i] {
                    continue;
                }
                let n = r.alts.iter().any(|alt| {
                    alt.iter().all(|s| match s {
                        Symbol::Rule(r) => nullable[r.0 as usize],
                        Symbol::Term(_) => false,
                    })
                });
                if n {
                    nullable[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Grammar {
            rules,
            rule_index,
            terminals,
            term_index,
            skips,
            start,
            repeatable,
            nullable,
        }
    }

    pub fn start(&self) -> RuleId {
        self.start
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id.0 as usize]
    }

    pub fn rule_id(&self, name: &str) -> Option<RuleId> {
        self.rule_index.get(name).copied()
    }

    pub fn terminal(&self, id: TermId) -> &Terminal {
        &self.terminals[id.0 as usize]
    }

    pub fn terminal_id(&self, name: &str) -> Option<TermId> {
        self.term_index.get(name).copied()
    }

    /// Number of rules written by the grammar author (hidden rules excluded).
    pub fn visible_rule_count(&self) -> usize {
        self.rules.iter().filter(|r| !r.hidden).count()
    }

    pub fn rule_names(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().filter(|r| !r.hidden).map(|r| r.name.as_str())
    }

    pub(crate) fn is_nullable(&self, id: RuleId) -> bool {
        self.nullable[id.0 as usize]
    }

    /// True when the rule appears as the element of a `*` or `+` repetition,
    /// i.e. another instance can be placed next to an existing one.
    pub fn is_repeatable(&self, id: RuleId) -> bool {
        self.repeatable.get(id.0 as usize).copied().unwrap_or(false)
    }

    pub fn kind_name(&self, kind: NodeKind) -> &str {
        match kind {
            NodeKind::Rule(r) => &self.rule(r).name,
            NodeKind::Token(t) => &self.terminal(t).name,
        }
    }

    /// Split `source` into tokens. Longest match wins; on equal length a
    /// literal beats a declared token class, then higher priority wins, then
    /// earlier declaration.
    pub fn tokenize(&self, source: &str) -> Result<Vec<Token>, LexError> {
        let mut tokens = Vec::new();
        let mut pos = 0;
        while pos < source.len() {
            let rest = &source[pos..];
            let mut best: Option<(usize, i32, usize, TermId)> = None;
            for (i, t) in self.terminals.iter().enumerate() {
                let len = match &t.kind {
                    TerminalKind::Literal(s) => {
                        if rest.starts_with(s.as_str()) {
                            s.len()
                        } else {
                            0
                        }
                    }
                    TerminalKind::Pattern(re) => re.find(rest).map_or(0, |m| m.end()),
                };
                if len == 0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bl, bp, bi, _)) => {
                        len > bl || (len == bl && (t.priority > bp || (t.priority == bp && i < bi)))
                    }
                };
                if better {
                    best = Some((len, t.priority, i, TermId(i as u32)));
                }
            }
            let skip_len = self
                .skips
                .iter()
                .filter_map(|re| re.find(rest).map(|m| m.end()))
                .max()
                .unwrap_or(0);
            match best {
                Some((len, _, _, id)) if len >= skip_len => {
                    tokens.push(Token {
                        class: id,
                        text: rest[..len].to_string(),
                        index: tokens.len(),
                        byte_span: (pos, pos + len),
                    });
                    pos += len;
                }
                _ if skip_len > 0 => pos += skip_len,
                _ => {
                    return Err(LexError {
                        offset: pos,
                        found: rest.chars().next().unwrap_or('\0'),
                    })
                }
            }
        }
        Ok(tokens)
    }
}

/// Parse grammar source text.
pub fn load_grammar(text: &str) -> Result<Grammar, GrammarError> {
    format::parse_grammar(text)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SourceError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown start rule {0}")]
    UnknownRule(String),
}

/// Tokenize and parse `source` from the grammar's start rule.
pub fn parse(grammar: &Arc<Grammar>, source: &str) -> Result<ParseTree, SourceError> {
    parse_from(grammar, grammar.start, source)
}

/// Parse `source` as an instance of rule `rule` rather than the start rule.
pub fn parse_rule(
    grammar: &Arc<Grammar>,
    rule: &str,
    source: &str,
) -> Result<ParseTree, SourceError> {
    let id = grammar
        .rule_id(rule)
        .ok_or_else(|| SourceError::UnknownRule(rule.to_string()))?;
    parse_from(grammar, id, source)
}

fn parse_from(grammar: &Arc<Grammar>, rule: RuleId, source: &str) -> Result<ParseTree, SourceError> {
    let tokens = grammar.tokenize(source)?;
    let derivation = earley::parse_tokens(grammar, rule, &tokens)?;
    Ok(ParseTree::build(
        grammar.clone(),
        source.to_string(),
        tokens,
        &derivation,
    ))
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Rule(r) => write!(f, "rule#{}", r.0),
            Symbol::Term(t) => write!(f, "term#{}", t.0),
        }
    }
}
