//! A language (grammar plus annotations) and programs analysed under it.

use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::builtin;
use crate::constructs::{
    load_annotations, resolve_decl_use, translate, AnnotationError, AnnotationSet,
    ConstructTree, DeclUseChains,
};
use crate::grammar::{load_grammar, parse, GrammarError, ParseTree, SourceError};

#[derive(Debug, Clone)]
pub struct Language {
    pub name: String,
    /// File extension used when writing programs of this language.
    pub ext: String,
    pub grammar: Arc<crate::grammar::Grammar>,
    pub ann: Arc<AnnotationSet>,
}

#[derive(Debug, Error)]
pub enum LanguageError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Grammar { path: String, source: GrammarError },
    #[error("{path}: {source}")]
    Annotations {
        path: String,
        source: AnnotationError,
    },
    #[error("unknown builtin language {0}")]
    UnknownBuiltin(String),
}

impl Language {
    pub fn from_texts(
        name: &str,
        ext: &str,
        grammar: &str,
        annotations: &str,
    ) -> Result<Language, LanguageError> {
        let g = load_grammar(grammar).map_err(|source| LanguageError::Grammar {
            path: name.to_string(),
            source,
        })?;
        let ann = load_annotations(annotations, &g).map_err(|source| {
            LanguageError::Annotations {
                path: name.to_string(),
                source,
            }
        })?;
        Ok(Language {
            name: name.to_string(),
            ext: ext.to_string(),
            grammar: Arc::new(g),
            ann: Arc::new(ann),
        })
    }

    /// Load from a grammar and an annotation location; either may be
    /// `builtin:NAME` to use a shipped language file.
    pub fn load(grammar: &str, annotations: &str) -> Result<Language, LanguageError> {
        let read = |spec: &str, pick: fn(&builtin::Source) -> &'static str| {
            if let Some(name) = spec.strip_prefix("builtin:") {
                builtin::source(name)
                    .map(|s| pick(&s).to_string())
                    .ok_or_else(|| LanguageError::UnknownBuiltin(name.to_string()))
            } else {
                std::fs::read_to_string(spec).map_err(|source| LanguageError::Io {
                    path: spec.to_string(),
                    source,
                })
            }
        };
        let gtext = read(grammar, |s| s.grammar)?;
        let atext = read(annotations, |s| s.annotations)?;
        let g = load_grammar(&gtext).map_err(|source| LanguageError::Grammar {
            path: grammar.to_string(),
            source,
        })?;
        let ann = load_annotations(&atext, &g).map_err(|source| LanguageError::Annotations {
            path: annotations.to_string(),
            source,
        })?;
        let stem = |s: &str| {
            let s = s.strip_prefix("builtin:").unwrap_or(s);
            Path::new(s)
                .file_stem()
                .and_then(|x| x.to_str())
                .unwrap_or(s)
                .to_string()
        };
        let name = stem(grammar);
        let ext = builtin::source(&name).map_or("txt", |s| s.ext).to_string();
        Ok(Language {
            name,
            ext,
            grammar: Arc::new(g),
            ann: Arc::new(ann),
        })
    }
}

/// A parsed program with its construct tree and declaration-use chains.
#[derive(Debug, Clone)]
pub struct Program {
    pub id: String,
    pub tree: ParseTree,
    pub ct: ConstructTree,
    pub chains: DeclUseChains,
}

impl Program {
    pub fn parse(lang: &Language, id: &str, text: &str) -> Result<Program, SourceError> {
        let tree = parse(&lang.grammar, text)?;
        Ok(Program::from_tree(lang, id, tree))
    }

    pub fn from_tree(lang: &Language, id: &str, tree: ParseTree) -> Program {
        let ct = translate(&tree, &lang.ann);
        let chains = resolve_decl_use(&tree, &ct, &lang.ann);
        Program {
            id: id.to_string(),
            tree,
            ct,
            chains,
        }
    }

    pub fn source(&self) -> &str {
        self.tree.source()
    }
}

/// A program file that failed to load.
#[derive(Debug, Clone)]
pub struct Skipped {
    pub path: String,
    pub reason: String,
}

/// Parse every file in `dir` (sorted by name, non-recursive). Files that do
/// not parse are reported back rather than aborting the load.
pub fn load_dir(lang: &Language, dir: &Path) -> std::io::Result<(Vec<Program>, Vec<Skipped>)> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut progs = Vec::new();
    let mut skipped = Vec::new();
    for p in paths {
        let id = p.file_name().and_then(|n| n.to_str()).unwrap_or("").to_string();
        let text = match std::fs::read_to_string(&p) {
            Ok(t) => t,
            Err(e) => {
                skipped.push(Skipped {
                    path: p.display().to_string(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        match Program::parse(lang, &id, &text) {
            Ok(prog) => progs.push(prog),
            Err(e) => {
                log::warn!("skipping {}: {e}", p.display());
                skipped.push(Skipped {
                    path: p.display().to_string(),
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok((progs, skipped))
}
