//! Stand-in for a loop-fusion pass, used as a harness target in tests and
//! demos. Prints `fused: N` where N counts pairs of loops of the same kind
//! that sit next to each other (no tokens in between) inside a function.
//! Input containing `planted_assert(` fails an assertion. With
//! `--crash-on-adjacent` any fusable pair aborts the process instead.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use stylefuzz::builtin;
use stylefuzz::constructs::CId;
use stylefuzz::program::{Language, Program};

#[derive(Parser)]
#[command(name = "fake-pass", about = "Toy loop-fusion pass for harness testing")]
struct Args {
    /// Pass to run; anything but loop-fusion does nothing.
    #[arg(long, default_value = "loop-fusion")]
    pass: String,
    /// Preparation passes (accepted and ignored).
    #[arg(long)]
    prep: Option<String>,
    /// mini-c or mini-ir; guessed from the extension by default.
    #[arg(long)]
    lang: Option<String>,
    /// Abort with an assertion failure when a fusable pair is found.
    #[arg(long)]
    crash_on_adjacent: bool,
    input: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("fake-pass: error: {}: {e}", args.input.display());
            return ExitCode::from(1);
        }
    };
    let ir = match args.lang.as_deref() {
        Some(l) => l == "mini-ir",
        None => args.input.extension().is_some_and(|e| e == "mlir"),
    };
    let lang = if ir { builtin::mini_ir() } else { builtin::mini_c() };
    let prog = match Program::parse(lang, "input", &text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("fake-pass: error: cannot parse input: {e}");
            return ExitCode::from(1);
        }
    };
    if args.pass != "loop-fusion" {
        return ExitCode::SUCCESS;
    }
    if text.contains("planted_assert(") {
        eprintln!("fake-pass: FakeFusion.cpp:88: void check(): Assertion `!planted' failed.");
        return ExitCode::from(1);
    }
    let pairs = fusable_pairs(lang, &prog);
    if pairs.is_empty() {
        return ExitCode::SUCCESS;
    }
    println!("fused: {}", pairs.len());
    if args.crash_on_adjacent {
        let kind = lang.ann.label_name(prog.ct.label(pairs[0].0));
        let pid = std::process::id();
        eprintln!("fake-pass: /tmp/build-{pid}/FakeFusion.cpp:{}: bool fuse(Loop*, Loop*): Assertion `!adjacent({kind})' failed.", 100 + pid % 50);
        eprintln!("#0 0x{:012x} in fuse(Loop*, Loop*) /tmp/build-{pid}/FakeFusion.cpp:{}", 0x5500_0000_0000u64 + pid as u64 * 16, 100 + pid % 50);
        eprintln!("#1 0x{:012x} in runOnFunction /tmp/build-{pid}/FakeFusion.cpp:212", 0x5500_0000_1000u64 + pid as u64 * 16);
        std::process::abort();
    }
    ExitCode::SUCCESS
}

/// Consecutive sibling loops of the same construct type with no token
/// between them, below some function.
fn fusable_pairs(lang: &Language, prog: &Program) -> Vec<(CId, CId)> {
    let ct = &prog.ct;
    let ann = &lang.ann;
    let is_loop = |c: CId| ann.is_a_named(ct.label(c), "LOOPS_");
    let in_func = |c: CId| ct.ancestors(c).any(|a| ann.is_a_named(ct.label(a), "FUNC_"));
    let mut out = Vec::new();
    for p in ct.ids() {
        for w in ct.node(p).children.windows(2) {
            let (a, b) = (w[0], w[1]);
            if is_loop(a)
                && is_loop(b)
                && ct.label(a) == ct.label(b)
                && ct.node(a).span.end == ct.node(b).span.start
                && in_func(a)
            {
                out.push((a, b));
            }
        }
    }
    out
}
