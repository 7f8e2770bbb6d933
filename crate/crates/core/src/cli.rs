//! Command-line front end. Each subcommand writes to the given streams and
//! returns the process exit code: 0 ok, 1 bad input data, 2 usage or
//! configuration error, 3 environment failure, 4 edit rejected.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Once;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::campaign::{read_report, run_campaign, CampaignConfig, CampaignReport};
use crate::constructs::ConstructTree;
use crate::grammar::ParseTree;
use crate::mutators::{mutate, MutateOptions, MutationError};
use crate::program::{load_dir, Language, Program};
use crate::styles::{all_styles, scan, style, Bounds, MutatorKind, StyleName};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ENV: i32 = 3;
pub const EXIT_REJECTED: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "stylefuzz", version, about = "Grammar-driven mutational fuzzer for compiler optimizations")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(clap::Args, Debug, Clone)]
pub struct LangArgs {
    /// Grammar file or builtin:NAME (mini-c, mini-ir).
    #[arg(long, default_value = "builtin:mini-c")]
    pub grammar: String,
    /// Annotation file or builtin:NAME; defaults to the builtin grammar's.
    #[arg(long)]
    pub annotations: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Parse one program and print a tree as JSON.
    Parse {
        #[command(flatten)]
        lang: LangArgs,
        program: PathBuf,
        #[arg(long, value_enum, default_value = "construct-tree")]
        emit: Emit,
    },
    /// Print the style matches of every program in a directory as JSON lines.
    Scan {
        #[command(flatten)]
        lang: LangArgs,
        corpus: PathBuf,
        /// Style to look for; all styles when absent.
        #[arg(long)]
        style: Option<StyleName>,
        /// Predicate bounds such as k=0,d=1 (requires --style).
        #[arg(long)]
        bounds: Option<String>,
    },
    /// Apply one mutator to a recipient using a donor's style match.
    Mutate {
        #[command(flatten)]
        lang: LangArgs,
        #[arg(long)]
        donor: PathBuf,
        #[arg(long)]
        recipient: PathBuf,
        #[arg(long)]
        style: StyleName,
        #[arg(long)]
        mutator: MutatorKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Donor match to use (index in scan order); by default the first
        /// one that yields an edit.
        #[arg(long = "match")]
        match_index: Option<usize>,
        /// Where to write the mutated program; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the provenance record; next to --out, or stderr.
        #[arg(long)]
        provenance: Option<PathBuf>,
    },
    /// Run a campaign described by a config file.
    Fuzz {
        config: PathBuf,
        /// Override the configured worker count.
        #[arg(long)]
        workers: Option<usize>,
        /// Override the configured iteration budget.
        #[arg(long)]
        iterations: Option<u64>,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Summarize a campaign output directory.
    Report {
        output_dir: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    ParseTree,
    ConstructTree,
    DeclUse,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
}

/// Entry point shared by the binary and tests.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::*;
            let code = match e.kind() {
                DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match cli.cmd {
        Cmd::Parse { lang, program, emit } => cmd_parse(&lang, &program, emit, out, err),
        Cmd::Scan { lang, corpus, style, bounds } => cmd_scan(&lang, &corpus, style, bounds.as_deref(), out, err),
        Cmd::Mutate {
            lang,
            donor,
            recipient,
            style,
            mutator,
            seed,
            match_index,
            out: dest,
            provenance,
        } => cmd_mutate(
            &lang,
            &MutateArgs {
                donor,
                recipient,
                style,
                mutator,
                seed,
                match_index,
                out: dest,
                provenance,
            },
            out,
            err,
        ),
        Cmd::Fuzz {
            config,
            workers,
            iterations,
            seed,
            output_dir,
        } => cmd_fuzz(
            &config,
            &Overrides {
                workers,
                iterations,
                seed,
                output_dir,
            },
            out,
            err,
        ),
        Cmd::Report { output_dir, format } => cmd_report(&output_dir, format, out, err),
    }
}

macro_rules! fail {
    ($err:expr, $code:expr, $($fmt:tt)*) => {{
        let _ = writeln!($err, "stylefuzz: {}", format!($($fmt)*));
        return $code;
    }};
}

fn language(args: &LangArgs, err: &mut dyn Write) -> Result<Language, i32> {
    let ann = match &args.annotations {
        Some(a) => a.clone(),
        None if args.grammar.starts_with("builtin:") => args.grammar.clone(),
        None => {
            let _ = writeln!(err, "stylefuzz: --annotations is required with a grammar file");
            return Err(EXIT_USAGE);
        }
    };
    Language::load(&args.grammar, &ann).map_err(|e| {
        let _ = writeln!(err, "stylefuzz: {e}");
        EXIT_USAGE
    })
}

fn read_program(lang: &Language, path: &Path, err: &mut dyn Write) -> Result<Program, i32> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "stylefuzz: {}: {e}", path.display());
        EXIT_DATA
    })?;
    let id = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    Program::parse(lang, &id, &text).map_err(|e| {
        let _ = writeln!(err, "{}: {e}", path.display());
        EXIT_DATA
    })
}

pub fn parse_tree_json(tree: &ParseTree) -> Value {
    fn node(t: &ParseTree, id: crate::grammar::NodeId) -> Value {
        let n = t.node(id);
        let mut v = json!({ "kind": t.kind_name(id), "span": [n.span.start, n.span.end] });
        match n.token {
            Some(tok) => v["text"] = json!(t.tokens()[tok].text),
            None => v["children"] = Value::Array(n.children.iter().map(|c| node(t, *c)).collect()),
        }
        v
    }
    node(tree, tree.root())
}

pub fn construct_tree_json(lang: &Language, tree: &ParseTree, ct: &ConstructTree) -> Value {
    fn node(lang: &Language, t: &ParseTree, ct: &ConstructTree, id: crate::constructs::CId) -> Value {
        let n = ct.node(id);
        json!({
            "construct": lang.ann.label_name(n.label),
            "rule": t.kind_name(n.parse),
            "span": [n.span.start, n.span.end],
            "text": t.normalized_text(n.parse),
            "children": n.children.iter().map(|c| node(lang, t, ct, *c)).collect::<Vec<_>>(),
        })
    }
    node(lang, tree, ct, ct.root())
}

pub fn decl_use_json(prog: &Program) -> Value {
    let ct = &prog.ct;
    let span = |c: crate::constructs::CId| json!([ct.node(c).span.start, ct.node(c).span.end]);
    json!({
        "defs": prog.chains.defs.iter().map(|d| json!({
            "name": d.name, "type": d.type_label, "span": span(d.node), "scope": span(d.scope),
        })).collect::<Vec<_>>(),
        "uses": prog.chains.uses.iter().map(|u| json!({
            "name": u.name, "span": span(u.node), "def": u.def,
        })).collect::<Vec<_>>(),
    })
}

pub fn cmd_parse(lang: &LangArgs, program: &Path, emit: Emit, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let lang = match language(lang, err) {
        Ok(l) => l,
        Err(c) => return c,
    };
    let prog = match read_program(&lang, program, err) {
        Ok(p) => p,
        Err(c) => return c,
    };
    let v = match emit {
        Emit::ParseTree => parse_tree_json(&prog.tree),
        Emit::ConstructTree => construct_tree_json(&lang, &prog.tree, &prog.ct),
        Emit::DeclUse => decl_use_json(&prog),
    };
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"));
    EXIT_OK
}

pub fn cmd_scan(
    lang: &LangArgs,
    corpus: &Path,
    style_name: Option<StyleName>,
    bounds: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let styles = match style_name {
        Some(s) => vec![style(s)],
        None => all_styles(),
    };
    let bounds = match (bounds, style_name) {
        (Some(b), Some(_)) => match Bounds::parse(&styles[0], b) {
            Ok(b) => Some(b),
            Err(e) => fail!(err, EXIT_USAGE, "{e}"),
        },
        (Some(_), None) => fail!(err, EXIT_USAGE, "--bounds requires --style"),
        (None, _) => None,
    };
    let lang = match language(lang, err) {
        Ok(l) => l,
        Err(c) => return c,
    };
    let (progs, skipped) = match load_dir(&lang, corpus) {
        Ok(x) => x,
        Err(e) => fail!(err, EXIT_DATA, "{}: {e}", corpus.display()),
    };
    for s in &skipped {
        let _ = writeln!(err, "stylefuzz: skipped {}: {}", s.path, s.reason);
    }
    for p in &progs {
        for st in &styles {
            let b = bounds.clone().unwrap_or_else(|| st.default_bounds());
            for mut m in scan(st, p, &lang.ann, &b) {
                m.donor_id = p.id.clone();
                let rec = m.record(&p.ct, &lang.ann);
                let _ = writeln!(out, "{}", serde_json::to_string(&rec).expect("json"));
            }
        }
    }
    EXIT_OK
}

pub struct MutateArgs {
    pub donor: PathBuf,
    pub recipient: PathBuf,
    pub style: StyleName,
    pub mutator: MutatorKind,
    pub seed: u64,
    pub match_index: Option<usize>,
    pub out: Option<PathBuf>,
    pub provenance: Option<PathBuf>,
}

pub fn cmd_mutate(lang: &LangArgs, a: &MutateArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let st = style(a.style);
    if !st.allows(a.mutator) {
        fail!(err, EXIT_USAGE, "mutator not allowed for style: {} does not admit {}", a.style, a.mutator);
    }
    let lang = match language(lang, err) {
        Ok(l) => l,
        Err(c) => return c,
    };
    let (donor, rec) = match (read_program(&lang, &a.donor, err), read_program(&lang, &a.recipient, err)) {
        (Ok(d), Ok(r)) => (d, r),
        _ => return EXIT_DATA,
    };
    let mut matches = scan(&st, &donor, &lang.ann, &st.default_bounds());
    matches.iter_mut().for_each(|m| m.donor_id = donor.id.clone());
    let chosen: Vec<_> = match a.match_index {
        Some(i) => match matches.get(i) {
            Some(m) => vec![m],
            None => fail!(err, EXIT_USAGE, "donor has {} {} matches, no match {i}", matches.len(), a.style),
        },
        None => matches.iter().collect(),
    };
    if chosen.is_empty() {
        fail!(err, EXIT_DATA, "donor has no {} match", a.style);
    }
    let opts = MutateOptions::seeded(a.seed);
    let mut first_err: Option<MutationError> = None;
    for m in chosen {
        match mutate(&lang, &donor, m, &rec, a.mutator, &opts) {
            Ok(mp) => {
                let prov = json!({
                    "provenance": mp.provenance,
                    "match": m.record(&donor.ct, &lang.ann),
                    "plan": mp.plan,
                    "reparse_ok": mp.reparse_ok,
                });
                let prov = serde_json::to_string_pretty(&prov).expect("json") + "\n";
                let write = |p: &Path, s: &str| std::fs::write(p, s);
                match &a.out {
                    Some(p) => {
                        if let Err(e) = write(p, &mp.text) {
                            fail!(err, EXIT_ENV, "{}: {e}", p.display());
                        }
                    }
                    None => {
                        let _ = out.write_all(mp.text.as_bytes());
                    }
                }
                let ppath = a.provenance.clone().or_else(|| {
                    a.out.as_ref().map(|p| {
                        let mut s = p.as_os_str().to_owned();
                        s.push(".provenance.json");
                        PathBuf::from(s)
                    })
                });
                match ppath {
                    Some(p) => {
                        if let Err(e) = write(&p, &prov) {
                            fail!(err, EXIT_ENV, "{}: {e}", p.display());
                        }
                    }
                    None => {
                        let _ = err.write_all(prov.as_bytes());
                    }
                }
                return EXIT_OK;
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let e = first_err.expect("at least one match tried");
    fail!(err, EXIT_REJECTED, "edit rejected ({}): {e}", e.reason())
}

pub struct Overrides {
    pub workers: Option<usize>,
    pub iterations: Option<u64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

static STOP: AtomicBool = AtomicBool::new(false);
static HANDLER: Once = Once::new();

pub fn summary_line(r: &CampaignReport) -> String {
    let t = &r.totals;
    let triggers = t
        .triggers
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "iterations={} valid={} validity_rate={:.4} triggers[{}] crashes={} flaky={} exhausted={}{}",
        t.iterations,
        t.valid_count,
        t.validity_rate,
        triggers,
        r.crashes.len(),
        r.flaky.len(),
        t.exhausted,
        if r.interrupted { " (interrupted)" } else { "" }
    )
}

pub fn cmd_fuzz(config: &Path, o: &Overrides, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut cfg = match CampaignConfig::load(config) {
        Ok(c) => c,
        Err(e) => fail!(err, EXIT_USAGE, "{e}"),
    };
    if let Some(w) = o.workers {
        if w == 0 {
            fail!(err, EXIT_USAGE, "--workers must be at least 1");
        }
        cfg.workers = w;
    }
    if let Some(i) = o.iterations {
        cfg.budget.iterations = Some(i);
    }
    if let Some(s) = o.seed {
        cfg.rng_seed = s;
    }
    if let Some(d) = &o.output_dir {
        cfg.output_dir = d.clone();
    }
    HANDLER.call_once(|| {
        if let Err(e) = ctrlc::set_handler(|| STOP.store(true, Ordering::SeqCst)) {
            log::warn!("cannot install interrupt handler: {e}");
        }
    });
    STOP.store(false, Ordering::SeqCst);
    match run_campaign(&cfg, &STOP) {
        Ok(r) => {
            let _ = writeln!(out, "{}", summary_line(&r));
            EXIT_OK
        }
        Err(e) => fail!(err, e.exit_code(), "{e}"),
    }
}

pub fn report_table(r: &CampaignReport) -> String {
    let mut s = format!("{}\n\n", summary_line(r));
    s.push_str(&format!(
        "{:<22} {:>9} {:>9} {:>9}  rejects\n",
        "pair", "attempts", "success", "triggers"
    ));
    for (k, p) in &r.pairs {
        let rejects = p
            .rejects
            .iter()
            .map(|(why, n)| format!("{why}={n}"))
            .collect::<Vec<_>>()
            .join(" ");
        s.push_str(&format!(
            "{:<22} {:>9} {:>9} {:>9}  {}\n",
            k, p.attempts, p.successes, p.triggers, rejects
        ));
    }
    if !r.crashes.is_empty() || !r.flaky.is_empty() {
        s.push_str("\ncrashes\n");
        for (sig, b) in &r.crashes {
            s.push_str(&format!("  {sig}  hits={}  {}\n", b.hits, b.reproducer));
        }
        for (sig, b) in &r.flaky {
            s.push_str(&format!("  {sig}  hits={}  {} (flaky)\n", b.hits, b.reproducer));
        }
    }
    s
}

pub fn cmd_report(dir: &Path, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(r) = read_report(dir) else {
        fail!(err, EXIT_DATA, "no report found in {}", dir.display());
    };
    let text = match format {
        Format::Table => report_table(&r),
        Format::Csv => r.pairs_csv(),
    };
    let _ = out.write_all(text.as_bytes());
    EXIT_OK
}
