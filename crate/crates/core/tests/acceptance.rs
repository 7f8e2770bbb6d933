//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails.

mod oracle;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use stylefuzz::builtin;
use stylefuzz::campaign::{execute, CampaignConfig, Counters};
use stylefuzz::cli;
use stylefuzz::grammar::{parse, SpacingPolicy};
use stylefuzz::mutators::{mutate, MutateOptions};
use stylefuzz::program::{Language, Program};
use stylefuzz::styles::{all_styles, scan, style, MatchKey, MutatorKind, StyleMatch, StyleName};

type Outcome = Result<String, String>;

const FAKE: &str = env!("CARGO_BIN_EXE_fake-pass");

fn langs() -> [&'static Language; 2] {
    [builtin::mini_c(), builtin::mini_ir()]
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut total = 0usize;
    let mut counts = Vec::new();
    for lang in langs() {
        let progs = oracle::fixture_programs(lang);
        counts.push(progs.len());
        for (path, p) in &progs {
            if p.tree.tokens().len() > 200 {
                return Err(format!("{} has {} tokens", path.display(), p.tree.tokens().len()));
            }
            for st in all_styles() {
                let b = st.default_bounds();
                let mut got: Vec<MatchKey> = scan(&st, p, &lang.ann, &b).iter().map(|m| m.key(&p.ct)).collect();
                let mut want = oracle::brute_force(&st, p, &lang.ann, &b, Some(stylefuzz::styles::MATCH_CAP));
                got.sort();
                want.sort();
                if got != want {
                    return Err(format!("{} {}: scan {} vs oracle {}", path.display(), st.name, got.len(), want.len()));
                }
                total += got.len();
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    if counts[0] < 30 || counts[1] < 15 {
        return Err(format!("fixture counts {counts:?}"));
    }
    if secs >= 30.0 {
        return Err(format!("took {secs:.1}s"));
    }
    Ok(format!("{} mini-c + {} mini-ir programs, {total} matches identical, {secs:.1}s", counts[0], counts[1]))
}

fn criterion_2() -> Outcome {
    let mut n = 0;
    for lang in langs() {
        for (path, p) in oracle::fixture_programs(lang) {
            let again = parse(&lang.grammar, &p.tree.unparse(SpacingPolicy::Spaced))
                .map_err(|e| format!("{}: {e}", path.display()))?;
            if again.shape() != p.tree.shape() {
                return Err(format!("{} changes shape", path.display()));
            }
            n += 1;
        }
    }
    Ok(format!("{n}/{n} programs"))
}

struct Attempt<'a> {
    lang: &'static Language,
    donor: &'a Program,
    m: StyleMatch,
    rec: &'a Program,
    kind: MutatorKind,
    seed: u64,
}

/// Seeded attempts over both fixture corpora.
fn attempts<'a>(corpora: &'a [(&'static Language, Vec<Program>)], kinds: &[MutatorKind], n: usize, seed: u64) -> Vec<Attempt<'a>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let (lang, progs) = &corpora[rng.gen_range(0..corpora.len())];
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let styles: Vec<StyleName> = StyleName::ALL.into_iter().filter(|s| style(*s).allows(kind)).collect();
        let st = style(styles[rng.gen_range(0..styles.len())]);
        let donor = &progs[rng.gen_range(0..progs.len())];
        let ms = scan(&st, donor, &lang.ann, &st.default_bounds());
        if ms.is_empty() {
            continue;
        }
        let m = ms[rng.gen_range(0..ms.len())].clone();
        let rec = &progs[rng.gen_range(0..progs.len())];
        out.push(Attempt { lang, donor, m, rec, kind, seed: rng.gen() });
    }
    out
}

fn corpora() -> Vec<(&'static Language, Vec<Program>)> {
    langs()
        .into_iter()
        .map(|l| (l, oracle::fixture_programs(l).into_iter().map(|(_, p)| p).collect()))
        .collect()
}

fn reasons(r: &BTreeMap<&'static str, usize>) -> String {
    r.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

fn criterion_3() -> Outcome {
    let cs = corpora();
    let mut ok = 0;
    let mut rejected: BTreeMap<&'static str, usize> = BTreeMap::new();
    for a in attempts(&cs, &[MutatorKind::Replicate, MutatorKind::Insert], 1000, 3) {
        match mutate(a.lang, a.donor, &a.m, a.rec, a.kind, &MutateOptions::seeded(a.seed)) {
            Ok(out) => {
                let q = Program::parse(a.lang, "out", &out.text).map_err(|e| e.to_string())?;
                let delta = q.tree.tokens().len() as isize - a.rec.tree.tokens().len() as isize;
                let [s, e] = out.plan.recipient_ctx;
                let ctx = (s, (e as isize + delta) as usize);
                let st = style(a.m.style);
                let found = oracle::brute_force(&st, &q, &a.lang.ann, &st.default_bounds(), None)
                    .iter()
                    .any(|k| k.ctx == ctx);
                if !found {
                    return Err(format!("{} {} {} -> {}: style missing at ctx {ctx:?}", a.m.style, a.kind, a.donor.id, a.rec.id));
                }
                ok += 1;
            }
            Err(e) => *rejected.entry(e.reason()).or_default() += 1,
        }
    }
    if ok == 0 {
        return Err("no successful edits".into());
    }
    Ok(format!("{ok}/{ok} successful edits rebuilt; rejected: {}", reasons(&rejected)))
}

fn criterion_4() -> Outcome {
    let cs = corpora();
    let kinds = [MutatorKind::Replicate, MutatorKind::Move, MutatorKind::Insert, MutatorKind::Replace];
    let mut ok = 0;
    let mut rejected: BTreeMap<&'static str, usize> = BTreeMap::new();
    for a in attempts(&cs, &kinds, 1000, 4) {
        match mutate(a.lang, a.donor, &a.m, a.rec, a.kind, &MutateOptions::seeded(a.seed)) {
            Ok(out) => {
                let tree = parse(&a.lang.grammar, &out.text).map_err(|e| format!("{} -> {}: {e}", a.donor.id, a.rec.id))?;
                let q = Program::from_tree(a.lang, "out", tree);
                if q.chains.unresolved_count() > a.rec.chains.unresolved_count() {
                    return Err(format!("{} {} {} -> {}: new unresolved uses", a.m.style, a.kind, a.donor.id, a.rec.id));
                }
                if !out.reparse_ok {
                    return Err("emitted program flagged unparseable".into());
                }
                ok += 1;
            }
            Err(e) => *rejected.entry(e.reason()).or_default() += 1,
        }
    }
    if ok == 0 {
        return Err("no successful edits".into());
    }
    Ok(format!("{ok}/{ok} emitted programs valid; rejected: {}", reasons(&rejected)))
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn config_text(out: &Path, seed: u64, iterations: u64, workers: usize, scheduler: &str, crash: bool, weights: &str) -> String {
    format!(
        r#"
mode = "targeted"
grammar = "builtin:mini-c"
optimization_corpus = "{opt}"
seed_corpus = "{seed_dir}"
output_dir = "{out}"
rng_seed = {seed}
workers = {workers}
scheduler = "{scheduler}"
[budget]
iterations = {iterations}
[harness]
command = ["{FAKE}", {crash}"--pass", "{{pass}}", "{{input}}"]
pass = "loop-fusion"
timeout_ms = 10000
[[harness.counters]]
name = "loop_fusion"
pattern = "fused: (\\d+)"
[weights]
{weights}
"#,
        opt = fixtures().join("mini-c/opt").display(),
        seed_dir = fixtures().join("mini-c/seed").display(),
        out = out.display(),
        crash = if crash { "\"--crash-on-adjacent\", " } else { "" },
    )
}

fn fuzz(cfg_text: &str, dir: &Path) -> Result<(), String> {
    let path = dir.join("campaign.toml");
    std::fs::write(&path, cfg_text).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(["stylefuzz", "fuzz", path.to_str().unwrap()], &mut out, &mut err);
    if code != 0 {
        return Err(format!("fuzz exited {code}: {}", String::from_utf8_lossy(&err)));
    }
    Ok(())
}

fn report(dir: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(dir.join("report.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

const MIXED: &str = "\"Cousins/Replicate\" = 2.0\n\"Sequence/Insert\" = 1.0\n\"Precedes/Move\" = 1.0\n\"Exists/Replace\" = 1.0\n\"Balanced/Replicate\" = 1.0\n";

fn criterion_5() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for (i, workers) in [1, 1, 4, 4].into_iter().enumerate() {
        let dir = tmp.path().join(format!("run{i}"));
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        fuzz(&config_text(&dir.join("out"), 42, 300, workers, "styles", false, MIXED), &dir)?;
        let edits = std::fs::read_to_string(dir.join("out/edits.jsonl")).map_err(|e| e.to_string())?;
        let mut rep = report(&dir.join("out"))?;
        rep.as_object_mut().unwrap().remove("timing");
        runs.push((workers, edits, rep));
    }
    let (_, e0, r0) = &runs[0];
    for (w, e, r) in &runs[1..] {
        if e != e0 {
            return Err(format!("edit sequence differs with workers={w}"));
        }
        if r != r0 {
            return Err(format!("report differs with workers={w}"));
        }
    }
    Ok(format!("{} edits identical across 2x workers=1 and 2x workers=4", e0.lines().count()))
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cousins = "\"Cousins/Replicate\" = 4.0\n\"Cousins/Move\" = 1.0\n\"Cousins/Insert\" = 1.0\n\"Cousins/Replace\" = 1.0\n";
    let mut wins = 0;
    let mut detail = Vec::new();
    for seed in 1..=5u64 {
        let mut totals = Vec::new();
        for sched in ["styles", "baseline"] {
            let dir = tmp.path().join(format!("{sched}{seed}"));
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            fuzz(&config_text(&dir.join("out"), seed, 1000, 4, sched, false, cousins), &dir)?;
            let r = report(&dir.join("out"))?;
            totals.push(r["totals"]["triggers"]["loop_fusion"].as_u64().unwrap_or(0));
        }
        let (s, b) = (totals[0], totals[1]);
        if s >= 2 * b && s > 0 {
            wins += 1;
        }
        detail.push(format!("{s}:{b}"));
    }
    let secs = t.elapsed().as_secs_f64();
    let msg = format!("styles:baseline triggers per seed [{}], {wins}/5 seeds at >=2x, {secs:.0}s", detail.join(" "));
    if wins >= 4 && secs < 300.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_7() -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let donor = fixtures().join("mini-c/styles/replicate-donor.c");
    let rec = fixtures().join("mini-c/styles/replicate-recipient.c");
    let code = cli::run(
        [
            "stylefuzz",
            "mutate",
            "--donor",
            donor.to_str().unwrap(),
            "--recipient",
            rec.to_str().unwrap(),
            "--style",
            "Cousins",
            "--mutator",
            "Replicate",
            "--seed",
            "1",
        ],
        &mut out,
        &mut err,
    );
    let text = String::from_utf8(out).unwrap();
    if code != 0 {
        return Err(format!("exit {code}: {}", String::from_utf8_lossy(&err)));
    }
    // two loops back to back, one per accumulator
    let loop1 = "  for (int i = 0; i < 64; i++) {\n    sum1 += arr[i];\n  }\n";
    let loop2 = "  for (int i = 0; i < 64; i++) {\n    sum2 += arr[i];\n  }\n";
    let adjacent = text.contains(&format!("{loop1}{loop2}")) || text.contains(&format!("{loop2}{loop1}"));
    if !adjacent {
        return Err(format!("unexpected output:\n{text}"));
    }
    let p = Program::parse(builtin::mini_c(), "out", &text).map_err(|e| e.to_string())?;
    if p.chains.unresolved_count() != 0 {
        return Err("output has unresolved uses".into());
    }
    Ok("clone of the sum1 loop placed next to it, aggregator rebound to sum2".into())
}

fn criterion_8() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tmp.path().join("out");
    let text = config_text(&out, 8, 100, 2, "styles", true, "\"Cousins/Replicate\" = 1.0\n");
    fuzz(&text, tmp.path())?;
    let r = report(&out)?;
    let crashes = r["crashes"].as_object().cloned().unwrap_or_default();
    if crashes.is_empty() {
        return Err("no crash bucket".into());
    }
    let cfg = CampaignConfig::from_toml(&text, tmp.path()).map_err(|e| e.to_string())?;
    let counters = Counters::new(&cfg.harness);
    for (sig, b) in &crashes {
        let repro = out.join(b["reproducer"].as_str().unwrap());
        let again = execute(&cfg.harness, &counters, &repro, "repro", true).map_err(|e| e.to_string())?;
        if &again.crash_signature != sig {
            return Err(format!("{sig}: re-run gave {:?}", again.crash_signature));
        }
    }
    Ok(format!("{} crash buckets, every reproducer re-triggers its signature", crashes.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("scan-oracle equivalence", criterion_1),
        ("round-trip", criterion_2),
        ("rebuild guarantee", criterion_3),
        ("validity by construction", criterion_4),
        ("determinism", criterion_5),
        ("trigger differential", criterion_6),
        ("worked example", criterion_7),
        ("crash pipeline", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match res {
            Ok(msg) => println!("PASS {} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg}", i + 1);
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
