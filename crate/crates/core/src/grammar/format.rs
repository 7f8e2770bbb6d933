//! Reader for the `.grammar` text format.
//!
//! ```text
//! start translationUnit;
//! skip /\s+/;
//! token IDENT /[A-Za-z_][A-Za-z0-9_]*/ priority 1;
//! translationUnit : externalDecl* ;
//! block : '{' item* '}' | ';' ;
//! ```
//!
//! Alternatives may use `( ... )` groups and the postfix operators `?`, `*`
//! and `+`. Groups and repetitions are desugared into hidden rules whose
//! nodes are spliced into their parent when a parse tree is built, so the
//! tree only ever shows rules the grammar author wrote.

use std::collections::HashMap;

use regex::Regex;

use super::{Grammar, GrammarError, Rule, RuleId, Symbol, TermId, Terminal, TerminalKind};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Literal(String),
    Pattern(String),
    Int(i64),
    Colon,
    Semi,
    Bar,
    LParen,
    RParen,
    Question,
    Star,
    Plus,
}

#[derive(Debug, Clone)]
struct Lexeme {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> GrammarError {
    GrammarError::Syntax {
        line,
        col,
        message: msg.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Lexeme>, GrammarError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    macro_rules! bump {
        () => {{
            let c = chars[i];
            i += 1;
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let tok = match c {
            ':' => {
                bump!();
                Tok::Colon
            }
            ';' => {
                bump!();
                Tok::Semi
            }
            '|' => {
                bump!();
                Tok::Bar
            }
            '(' => {
                bump!();
                Tok::LParen
            }
            ')' => {
                bump!();
                Tok::RParen
            }
            '?' => {
                bump!();
                Tok::Question
            }
            '*' => {
                bump!();
                Tok::Star
            }
            '+' => {
                bump!();
                Tok::Plus
            }
            '\'' => {
                bump!();
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(syntax(l0, c0, "unterminated literal")),
                        Some('\'') => {
                            bump!();
                            break;
                        }
                        Some('\\') => {
                            bump!();
                            match chars.get(i) {
                                Some(_) => s.push(bump!()),
                                None => return Err(syntax(l0, c0, "unterminated literal")),
                            }
                        }
                        Some(_) => s.push(bump!()),
                    }
                }
                if s.is_empty() {
                    return Err(syntax(l0, c0, "empty literal"));
                }
                Tok::Literal(s)
            }
            '/' => {
                bump!();
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(syntax(l0, c0, "unterminated pattern")),
                        Some('/') => {
                            bump!();
                            break;
                        }
                        Some('\\') if chars.get(i + 1) == Some(&'/') => {
                            bump!();
                            s.push(bump!());
                        }
                        Some(_) => s.push(bump!()),
                    }
                }
                Tok::Pattern(s)
            }
            c if c.is_ascii_digit() || c == '-' => {
                let mut s = String::new();
                s.push(bump!());
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(bump!());
                }
                Tok::Int(s.parse().map_err(|_| syntax(l0, c0, "bad integer"))?)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    s.push(bump!());
                }
                Tok::Ident(s)
            }
            other => return Err(syntax(l0, c0, format!("unexpected character {other:?}"))),
        };
        out.push(Lexeme {
            tok,
            line: l0,
            col: c0,
        });
    }
    Ok(out)
}

/// Right-hand side before name resolution.
#[derive(Debug, Clone)]
enum Expr {
    Name(String),
    Lit(String),
    Group(Vec<Vec<Expr>>),
    Opt(Box<Expr>),
    Star(Box<Expr>),
    Plus(Box<Expr>),
}

struct RawRule {
    name: String,
    alts: Vec<Vec<Expr>>,
}

struct RawToken {
    name: String,
    pattern: String,
    priority: i32,
    line: usize,
    col: usize,
}

struct Parser {
    lx: Vec<Lexeme>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.lx.get(self.pos).map(|l| &l.tok)
    }

    fn here(&self) -> (usize, usize) {
        match self.lx.get(self.pos).or(self.lx.last()) {
            Some(l) => (l.line, l.col),
            None => (1, 1),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.lx.get(self.pos).map(|l| l.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), GrammarError> {
        let (line, col) = self.here();
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(syntax(line, col, format!("expected {what}, found {t:?}"))),
            None => Err(syntax(line, col, format!("expected {what}, found end of file"))),
        }
    }

    fn ident(&mut self) -> Result<String, GrammarError> {
        let (line, col) = self.here();
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => Err(syntax(line, col, "expected a name")),
        }
    }

    fn alternatives(&mut self) -> Result<Vec<Vec<Expr>>, GrammarError> {
        let mut alts = vec![self.sequence()?];
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            alts.push(self.sequence()?);
        }
        Ok(alts)
    }

    fn sequence(&mut self) -> Result<Vec<Expr>, GrammarError> {
        let mut seq = Vec::new();
        loop {
            let atom = match self.peek() {
                Some(Tok::Ident(_)) => match self.next() {
                    Some(Tok::Ident(s)) => Expr::Name(s),
                    _ => unreachable!(),
                },
                Some(Tok::Literal(_)) => match self.next() {
                    Some(Tok::Literal(s)) => Expr::Lit(s),
                    _ => unreachable!(),
                },
                Some(Tok::LParen) => {
                    self.pos += 1;
                    let inner = self.alternatives()?;
                    self.expect(Tok::RParen, "')'")?;
                    Expr::Group(inner)
                }
                _ => break,
            };
            let atom = match self.peek() {
                Some(Tok::Question) => {
                    self.pos += 1;
                    Expr::Opt(Box::new(atom))
                }
                Some(Tok::Star) => {
                    self.pos += 1;
                    Expr::Star(Box::new(atom))
                }
                Some(Tok::Plus) => {
                    self.pos += 1;
                    Expr::Plus(Box::new(atom))
                }
                _ => atom,
            };
            seq.push(atom);
        }
        Ok(seq)
    }
}

pub(super) fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let mut p = Parser {
        lx: lex(text)?,
        pos: 0,
    };
    let mut raw_rules: Vec<RawRule> = Vec::new();
    let mut raw_tokens: Vec<RawToken> = Vec::new();
    let mut skips: Vec<String> = Vec::new();
    let mut start: Option<(String, usize, usize)> = None;

    while p.peek().is_some() {
        let (line, col) = p.here();
        let name = p.ident()?;
        if p.peek() == Some(&Tok::Colon) {
            p.pos += 1;
            let alts = p.alternatives()?;
            p.expect(Tok::Semi, "';' after rule")?;
            if raw_rules.iter().any(|r| r.name == name) {
                return Err(GrammarError::DuplicateRule(name));
            }
            raw_rules.push(RawRule { name, alts });
            continue;
        }
        match name.as_str() {
            "start" => {
                let (l, c) = p.here();
                start = Some((p.ident()?, l, c));
                p.expect(Tok::Semi, "';'")?;
            }
            "skip" => {
                let (l, c) = p.here();
                match p.next() {
                    Some(Tok::Pattern(s)) => skips.push(s),
                    _ => return Err(syntax(l, c, "expected /pattern/ after skip")),
                }
                p.expect(Tok::Semi, "';'")?;
            }
            "token" => {
                let tname = p.ident()?;
                let (l, c) = p.here();
                let pattern = match p.next() {
                    Some(Tok::Pattern(s)) => s,
                    _ => return Err(syntax(l, c, "expected /pattern/ after token name")),
                };
                let mut priority = 0;
                if p.peek() == Some(&Tok::Ident("priority".into())) {
                    p.pos += 1;
                    let (l2, c2) = p.here();
                    match p.next() {
                        Some(Tok::Int(n)) => priority = n as i32,
                        _ => return Err(syntax(l2, c2, "expected integer priority")),
                    }
                }
                p.expect(Tok::Semi, "';'")?;
                if raw_tokens.iter().any(|t| t.name == tname) {
                    return Err(syntax(line, col, format!("duplicate token {tname}")));
                }
                raw_tokens.push(RawToken {
                    name: tname,
                    pattern,
                    priority,
                    line: l,
                    col: c,
                });
            }
            other => {
                return Err(syntax(
                    line,
                    col,
                    format!("expected ':' after rule name {other}"),
                ))
            }
        }
    }

    let mut b = Builder::default();
    for t in &raw_tokens {
        let re = Regex::new(&format!("^(?:{})", t.pattern)).map_err(|e| GrammarError::Syntax {
            line: t.line,
            col: t.col,
            message: format!("bad pattern for token {}: {e}", t.name),
        })?;
        let id = TermId(b.terminals.len() as u32);
        b.terminals.push(Terminal {
            name: t.name.clone(),
            kind: TerminalKind::Pattern(re),
            priority: t.priority,
        });
        b.term_index.insert(t.name.clone(), id);
    }
    for r in &raw_rules {
        if b.term_index.contains_key(&r.name) {
            return Err(GrammarError::DuplicateRule(r.name.clone()));
        }
        let id = RuleId(b.rules.len() as u32);
        b.rules.push(Rule {
            name: r.name.clone(),
            alts: Vec::new(),
            hidden: false,
        });
        b.rule_index.insert(r.name.clone(), id);
    }
    b.repeatable = vec![false; b.rules.len()];
    for r in &raw_rules {
        let id = b.rule_index[&r.name];
        let mut alts = Vec::with_capacity(r.alts.len());
        for alt in &r.alts {
            alts.push(b.lower_seq(&r.name, alt)?);
        }
        b.rules[id.0 as usize].alts = alts;
    }

    let (start_name, _, _) = start.ok_or(GrammarError::NoStart)?;
    let start = *b
        .rule_index
        .get(&start_name)
        .ok_or(GrammarError::UndefinedStart(start_name))?;

    let skips = skips
        .iter()
        .map(|s| {
            Regex::new(&format!("^(?:{s})")).map_err(|e| GrammarError::Syntax {
                line: 0,
                col: 0,
                message: format!("bad skip pattern: {e}"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut repeatable = b.repeatable;
    repeatable.resize(b.rules.len(), false);
    Ok(Grammar::assemble(
        b.rules,
        b.rule_index,
        b.terminals,
        b.term_index,
        skips,
        start,
        repeatable,
    ))
}

#[derive(Default)]
struct Builder {
    rules: Vec<Rule>,
    rule_index: HashMap<String, RuleId>,
    terminals: Vec<Terminal>,
    term_index: HashMap<String, TermId>,
    repeatable: Vec<bool>,
    hidden_count: usize,
}

impl Builder {
    fn literal(&mut self, text: &str) -> TermId {
        let key = format!("'{text}'");
        if let Some(id) = self.term_index.get(&key) {
            return *id;
        }
        let id = TermId(self.terminals.len() as u32);
        self.terminals.push(Terminal {
            name: key.clone(),
            kind: TerminalKind::Literal(text.to_string()),
            priority: i32::MAX,
        });
        self.term_index.insert(key, id);
        id
    }

    fn hidden(&mut self, owner: &str, alts: Vec<Vec<Symbol>>) -> RuleId {
        self.hidden_count += 1;
        let id = RuleId(self.rules.len() as u32);
        self.rules.push(Rule {
            name: format!("{owner}__{}", self.hidden_count),
            alts,
            hidden: true,
        });
        id
    }

    fn lower_seq(&mut self, owner: &str, seq: &[Expr]) -> Result<Vec<Symbol>, GrammarError> {
        seq.iter().map(|e| self.lower(owner, e)).collect()
    }

    fn lower(&mut self, owner: &str, e: &Expr) -> Result<Symbol, GrammarError> {
        Ok(match e {
            Expr::Name(n) => {
                if let Some(r) = self.rule_index.get(n) {
                    Symbol::Rule(*r)
                } else if let Some(t) = self.term_index.get(n) {
                    Symbol::Term(*t)
                } else {
                    return Err(GrammarError::UndefinedRule(n.clone()));
                }
            }
            Expr::Lit(s) => Symbol::Term(self.literal(s)),
            Expr::Group(alts) => {
                let mut lowered = Vec::new();
                for a in alts {
                    lowered.push(self.lower_seq(owner, a)?);
                }
                Symbol::Rule(self.hidden(owner, lowered))
            }
            Expr::Opt(inner) => {
                let s = self.lower(owner, inner)?;
                Symbol::Rule(self.hidden(owner, vec![vec![s], vec![]]))
            }
            Expr::Star(inner) | Expr::Plus(inner) => {
                let s = self.lower(owner, inner)?;
                self.mark_repeatable(s);
                // placeholder alternatives, patched once the id is known
                let star = self.hidden(owner, Vec::new());
                self.rules[star.0 as usize].alts =
                    vec![vec![s, Symbol::Rule(star)], Vec::new()];
                if matches!(e, Expr::Plus(_)) {
                    Symbol::Rule(self.hidden(owner, vec![vec![s, Symbol::Rule(star)]]))
                } else {
                    Symbol::Rule(star)
                }
            }
        })
    }

    fn mark_repeatable(&mut self, s: Symbol) {
        if let Symbol::Rule(r) = s {
            let i = r.0 as usize;
            if i >= self.repeatable.len() {
                self.repeatable.resize(i + 1, false);
            }
            self.repeatable[i] = true;
        }
    }
}
