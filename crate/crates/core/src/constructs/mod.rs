//! Program constructs: annotation files that map grammar nodes to
//! construct types, construct trees, and declaration-use chains.
//!
//! Annotation file syntax, one statement per `;`:
//!
//! ```text
//! construct FOR_STMT_ = rules(forStatement);
//! construct LOOPS_ = union(FOR_STMT_, WHILE_STMT_);
//! construct ARITH_EXPR_ = pred(isarith on addExpr, mulExpr);
//! role USES_ use;
//! scopes PROGRAM_, FUNC_, LOOPS_;
//! typecompat int->float;
//! branch statement;
//! ```
//!
//! `branch` lists the rules whose nodes, when they are direct children of an
//! `IF_ELSE_` construct, form its branches.

mod predicates;
mod scope;
mod translate;

use std::collections::HashMap;

use thiserror::Error;

use crate::grammar::{Grammar, RuleId};

pub use predicates::Predicate;
pub use scope::{contains, name_token, resolve_decl_use, scope_of, Def, DeclUseChains, Use};
pub use translate::{translate, CId, CNode, ConstructTree};

/// Index of a construct-type label inside an [`AnnotationSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub u16);

pub const PROGRAM: &str = "PROGRAM_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Use,
    Def,
    Type,
}

#[derive(Debug, Clone)]
pub enum Matcher {
    Rules(Vec<RuleId>),
    Union(Vec<Label>),
    Pred { pred: Predicate, rules: Vec<RuleId> },
}

impl Matcher {
    fn specificity(&self) -> u8 {
        match self {
            Matcher::Pred { .. } => 2,
            Matcher::Rules(_) => 1,
            Matcher::Union(_) => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstructDef {
    pub name: String,
    pub label: Label,
    pub matcher: Matcher,
    pub role: Option<Role>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnnotationError {
    #[error("annotation syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown rule {0}")]
    UnknownRule(String),
    #[error("undefined union member {0}")]
    UndefinedMember(String),
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("duplicate construct {0}")]
    DuplicateConstruct(String),
    #[error("role {0} is assigned twice")]
    DuplicateRole(String),
    #[error("unknown construct {0}")]
    UnknownConstruct(String),
}

/// One loaded annotation file, bound to the grammar it was checked against.
#[derive(Debug, Clone)]
pub struct AnnotationSet {
    labels: Vec<String>,
    label_index: HashMap<String, Label>,
    pub defs: Vec<ConstructDef>,
    /// For each label, every label it is a member of (itself included).
    categories: Vec<Vec<Label>>,
    /// rule -> indices into `defs` that can match a node of that rule.
    rule_candidates: HashMap<RuleId, Vec<usize>>,
    use_label: Option<Label>,
    def_label: Option<Label>,
    type_label: Option<Label>,
    scopes: Vec<Label>,
    pub typecompat: Vec<(String, String)>,
    branch_rules: Vec<RuleId>,
}

impl AnnotationSet {
    fn empty() -> AnnotationSet {
        let mut a = AnnotationSet {
            labels: Vec::new(),
            label_index: HashMap::new(),
            defs: Vec::new(),
            categories: Vec::new(),
            rule_candidates: HashMap::new(),
            use_label: None,
            def_label: None,
            type_label: None,
            scopes: Vec::new(),
            typecompat: Vec::new(),
            branch_rules: Vec::new(),
        };
        a.intern(PROGRAM);
        a
    }

    fn intern(&mut self, name: &str) -> Label {
        if let Some(l) = self.label_index.get(name) {
            return *l;
        }
        let l = Label(self.labels.len() as u16);
        self.labels.push(name.to_string());
        self.label_index.insert(name.to_string(), l);
        self.categories.push(vec![l]);
        l
    }

    pub fn program(&self) -> Label {
        Label(0)
    }

    pub fn label(&self, name: &str) -> Option<Label> {
        self.label_index.get(name).copied()
    }

    pub fn label_name(&self, l: Label) -> &str {
        &self.labels[l.0 as usize]
    }

    pub fn labels(&self) -> impl Iterator<Item = (Label, &str)> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, s)| (Label(i as u16), s.as_str()))
    }

    /// True when `label` is `category` or a (transitive) member of the
    /// union `category`.
    pub fn is_a(&self, label: Label, category: Label) -> bool {
        self.categories[label.0 as usize].contains(&category)
    }

    pub fn is_a_named(&self, label: Label, category: &str) -> bool {
        self.label(category).is_some_and(|c| self.is_a(label, c))
    }

    pub fn role_label(&self, role: Role) -> Option<Label> {
        match role {
            Role::Use => self.use_label,
            Role::Def => self.def_label,
            Role::Type => self.type_label,
        }
    }

    pub fn is_scope(&self, label: Label) -> bool {
        self.scopes.iter().any(|s| self.is_a(label, *s))
    }

    pub fn is_branch_rule(&self, rule: RuleId) -> bool {
        self.branch_rules.contains(&rule)
    }

    /// Whether a use whose declaration has type `use_ty` may be bound to a
    /// declaration of type `def_ty`.
    pub fn compatible(&self, use_ty: &str, def_ty: &str) -> bool {
        use_ty == def_ty
            || self
                .typecompat
                .iter()
                .any(|(a, b)| a == use_ty && b == def_ty)
    }

    pub(crate) fn candidates(&self, rule: RuleId) -> &[usize] {
        self.rule_candidates
            .get(&rule)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Parse an annotation file and check it against `grammar`.
pub fn load_annotations(text: &str, grammar: &Grammar) -> Result<AnnotationSet, AnnotationError> {
    let mut ann = AnnotationSet::empty();
    for (line, stmt) in statements(text) {
        let syntax = |m: &str| AnnotationError::Syntax {
            line,
            message: m.to_string(),
        };
        let (head, rest) = stmt
            .split_once(char::is_whitespace)
            .ok_or_else(|| syntax("expected a directive"))?;
        let rest = rest.trim();
        match head {
            "construct" => {
                let (name, rhs) = rest
                    .split_once('=')
                    .ok_or_else(|| syntax("expected '=' in construct"))?;
                let name = name.trim();
                if !is_name(name) {
                    return Err(syntax("bad construct name"));
                }
                if ann.defs.iter().any(|d| d.name == name) || name == PROGRAM {
                    return Err(AnnotationError::DuplicateConstruct(name.to_string()));
                }
                let matcher = parse_matcher(rhs.trim(), grammar, &ann, line)?;
                let label = ann.intern(name);
                if let Matcher::Union(members) = &matcher {
                    for m in members {
                        let mut closure = Vec::new();
                        collect_members(&ann, *m, &mut closure);
                        for c in closure {
                            if !ann.categories[c.0 as usize].contains(&label) {
                                ann.categories[c.0 as usize].push(label);
                            }
                        }
                    }
                }
                ann.defs.push(ConstructDef {
                    name: name.to_string(),
                    label,
                    matcher,
                    role: None,
                });
            }
            "role" => {
                let mut parts = rest.split_whitespace();
                let (Some(name), Some(role), None) = (parts.next(), parts.next(), parts.next())
                else {
                    return Err(syntax("expected `role NAME use|def|type`"));
                };
                let role = match role {
                    "use" => Role::Use,
                    "def" => Role::Def,
                    "type" => Role::Type,
                    _ => return Err(syntax("role must be use, def or type")),
                };
                let label = ann
                    .label(name)
                    .ok_or_else(|| AnnotationError::UnknownConstruct(name.to_string()))?;
                let slot = match role {
                    Role::Use => &mut ann.use_label,
                    Role::Def => &mut ann.def_label,
                    Role::Type => &mut ann.type_label,
                };
                if slot.is_some() {
                    return Err(AnnotationError::DuplicateRole(format!("{role:?}").to_lowercase()));
                }
                *slot = Some(label);
                if let Some(d) = ann.defs.iter_mut().find(|d| d.label == label) {
                    d.role = Some(role);
                }
            }
            "scopes" => {
                for name in list(rest) {
                    let l = ann
                        .label(name)
                        .ok_or_else(|| AnnotationError::UnknownConstruct(name.to_string()))?;
                    ann.scopes.push(l);
                }
            }
            "typecompat" => {
                for pair in list(rest) {
                    let (a, b) = pair
                        .split_once("->")
                        .ok_or_else(|| syntax("expected `from->to`"))?;
                    ann.typecompat.push((a.trim().to_string(), b.trim().to_string()));
                }
            }
            "branch" => {
                for name in list(rest) {
                    let r = grammar
                        .rule_id(name)
                        .ok_or_else(|| AnnotationError::UnknownRule(name.to_string()))?;
                    ann.branch_rules.push(r);
                }
            }
            other => return Err(syntax(&format!("unknown directive {other}"))),
        }
    }

    for (i, d) in ann.defs.iter().enumerate() {
        let rules = match &d.matcher {
            Matcher::Rules(r) | Matcher::Pred { rules: r, .. } => r,
            Matcher::Union(_) => continue,
        };
        for r in rules {
            ann.rule_candidates.entry(*r).or_default().push(i);
        }
    }
    for v in ann.rule_candidates.values_mut() {
        let defs = &ann.defs;
        // most specific first, then annotation order
        v.sort_by_key(|i| (std::cmp::Reverse(defs[*i].matcher.specificity()), *i));
    }
    Ok(ann)
}

fn collect_members(ann: &AnnotationSet, l: Label, out: &mut Vec<Label>) {
    out.push(l);
    if let Some(d) = ann.defs.iter().find(|d| d.label == l) {
        if let Matcher::Union(ms) = &d.matcher {
            for m in ms {
                collect_members(ann, *m, out);
            }
        }
    }
}

fn parse_matcher(
    rhs: &str,
    grammar: &Grammar,
    ann: &AnnotationSet,
    line: usize,
) -> Result<Matcher, AnnotationError> {
    let syntax = |m: &str| AnnotationError::Syntax {
        line,
        message: m.to_string(),
    };
    let open = rhs.find('(').ok_or_else(|| syntax("expected '('"))?;
    if !rhs.ends_with(')') {
        return Err(syntax("expected ')'"));
    }
    let kind = rhs[..open].trim();
    let body = &rhs[open + 1..rhs.len() - 1];
    let rules = |names: &str| -> Result<Vec<RuleId>, AnnotationError> {
        list(names)
            .map(|n| {
                grammar
                    .rule_id(n)
                    .ok_or_else(|| AnnotationError::UnknownRule(n.to_string()))
            })
            .collect()
    };
    match kind {
        "rules" => Ok(Matcher::Rules(rules(body)?)),
        "union" => {
            let members = list(body)
                .map(|n| {
                    ann.label(n)
                        .filter(|l| *l != ann.program())
                        .ok_or_else(|| AnnotationError::UndefinedMember(n.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Matcher::Union(members))
        }
        "pred" => {
            let (name, on) = body
                .split_once(" on ")
                .ok_or_else(|| syntax("expected `pred(NAME on rule, ...)`"))?;
            let pred = Predicate::from_name(name.trim())
                .ok_or_else(|| AnnotationError::UnknownPredicate(name.trim().to_string()))?;
            Ok(Matcher::Pred {
                pred,
                rules: rules(on)?,
            })
        }
        other => Err(syntax(&format!("unknown matcher {other}"))),
    }
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_')
}

/// Split into `;`-terminated statements with `#` comments removed, keeping
/// the line each statement starts on.
fn statements(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for ch in line.chars() {
            if cur.trim().is_empty() && !ch.is_whitespace() {
                start = i + 1;
            }
            if ch == ';' {
                out.push((start, cur.trim().to_string()));
                cur.clear();
            } else {
                cur.push(ch);
            }
        }
        cur.push(' ');
    }
    if !cur.trim().is_empty() {
        out.push((start, cur.trim().to_string()));
    }
    out
}
