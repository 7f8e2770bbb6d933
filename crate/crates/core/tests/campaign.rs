use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stylefuzz::campaign::{
    execute, load_corpora, run_campaign, CampaignConfig, CampaignError, Counters, Exit, HarnessSpec,
    Scheduler,
};
use stylefuzz::styles::{admissible_pairs, StyleName};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

const FAKE: &str = env!("CARGO_BIN_EXE_fake-pass");

fn config(extra_args: &str, body: &str, out: &Path) -> CampaignConfig {
    let fx = fixtures();
    let text = format!(
        r#"
mode = "targeted"
grammar = "builtin:mini-c"
optimization_corpus = "{opt}"
seed_corpus = "{seed}"
output_dir = "{out}"
rng_seed = 3
{body}
[harness]
command = ["{FAKE}", {extra_args} "--pass", "{{pass}}", "{{input}}"]
pass = "loop-fusion"
timeout_ms = 10000
[[harness.counters]]
name = "loop_fusion"
pattern = "fused: (\\d+)"
"#,
        opt = fx.join("mini-c/opt").display(),
        seed = fx.join("mini-c/seed").display(),
        out = out.display(),
    );
    CampaignConfig::from_toml(&text, Path::new(".")).unwrap()
}

fn harness(cmd: &[&str], timeout_ms: u64) -> HarnessSpec {
    HarnessSpec {
        command: cmd.iter().map(|s| s.to_string()).collect(),
        pass: Some("loop-fusion".into()),
        prep: vec![],
        timeout_ms,
        counters: vec![stylefuzz::campaign::Counter {
            name: "loop_fusion".into(),
            pattern: r"fused: (\d+)".into(),
        }],
        validity_command: None,
        env: BTreeMap::new(),
    }
}

#[test]
fn corpora_from_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("", "[budget]\niterations = 1\n", dir.path());
    let c = load_corpora(&cfg).unwrap();
    assert_eq!(c.donors.len(), 10);
    assert_eq!(c.recipients.len(), 20);
    assert!(!c.pool.of_style(StyleName::Cousins).is_empty());
    assert_eq!(c.skipped, 0);
}

#[test]
fn empty_seed_dir_is_fatal_and_bad_files_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds");
    std::fs::create_dir(&seeds).unwrap();
    let mut cfg = config("", "[budget]\niterations = 1\n", dir.path());
    cfg.seed_corpus = seeds.clone();
    assert!(matches!(load_corpora(&cfg), Err(CampaignError::Corpus(_))));

    let opt = dir.path().join("opt");
    std::fs::create_dir(&opt).unwrap();
    for e in std::fs::read_dir(fixtures().join("mini-c/opt")).unwrap() {
        let p = e.unwrap().path();
        std::fs::copy(&p, opt.join(p.file_name().unwrap())).unwrap();
    }
    std::fs::write(opt.join("broken.c"), "int f( {").unwrap();
    std::fs::write(seeds.join("a.c"), "int f(int a) { return a; }\n").unwrap();
    cfg.optimization_corpus = opt;
    let c = load_corpora(&cfg).unwrap();
    assert_eq!(c.skipped, 1);
    assert_eq!(c.donors.len(), 10);
}

#[test]
fn no_styles_in_optimization_corpus_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let opt = dir.path().join("opt");
    std::fs::create_dir(&opt).unwrap();
    std::fs::write(opt.join("g.c"), "int g = 1;\n").unwrap();
    let mut cfg = config("", "[budget]\niterations = 1\n", dir.path());
    cfg.optimization_corpus = opt;
    let err = load_corpora(&cfg).err().unwrap();
    assert_eq!(err.to_string(), "optimization corpus yields no composition styles");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn uniform_weights_draw_pairs_uniformly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("", "[budget]\niterations = 1\n", dir.path());
    let c = load_corpora(&cfg).unwrap();
    let s = Scheduler::new(&c.pool, &cfg.weights, c.recipients.len());
    // every style occurs in the fixture corpus, so the support is the table
    assert_eq!(s.support().len(), admissible_pairs().len());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 10_000;
    let mut counts: BTreeMap<_, usize> = BTreeMap::new();
    for _ in 0..n {
        *counts.entry(s.draw_pair(&mut rng).unwrap()).or_default() += 1;
    }
    let k = s.support().len() as f64;
    let p = 1.0 / k;
    let expect = n as f64 * p;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    for (pair, c) in &counts {
        assert!((*c as f64 - expect).abs() <= 3.0 * sigma, "{pair:?}: {c}");
    }
    let chi2: f64 = counts.values().map(|c| (*c as f64 - expect).powi(2) / expect).sum();
    // 19 degrees of freedom, 99.9th percentile
    assert!(chi2 < 43.82, "chi2 = {chi2}");
}

#[test]
fn execute_reports_signals_triggers_and_timeouts() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.c");
    std::fs::write(&input, std::fs::read_to_string(fixtures().join("mini-c/opt/triple.c")).unwrap()).unwrap();

    let h = harness(&[FAKE, "{input}"], 10_000);
    let r = execute(&h, &Counters::new(&h), &input, "in", true).unwrap();
    assert_eq!(r.exit, Exit::Ok);
    assert_eq!(r.triggers["loop_fusion"], 2);
    assert!(!r.crashed());

    let h = harness(&[FAKE, "--crash-on-adjacent", "{input}"], 10_000);
    let r = execute(&h, &Counters::new(&h), &input, "in", true).unwrap();
    assert!(matches!(r.exit, Exit::Signal(6)));
    assert!(r.crashed());
    assert!(r.triggers.is_empty());

    let h = harness(&["sh", "-c", "kill -SEGV $$", "{input}"], 10_000);
    let r = execute(&h, &Counters::new(&h), &input, "in", true).unwrap();
    assert_eq!(r.exit, Exit::Signal(11));
    assert_eq!(r.crash_signature, "unknown-crash");

    let h = harness(&["sh", "-c", "exec sleep 30", "{input}"], 100);
    let t = Instant::now();
    let r = execute(&h, &Counters::new(&h), &input, "in", true).unwrap();
    assert_eq!(r.exit, Exit::Timeout);
    assert!(r.duration_ms >= 100 && t.elapsed().as_millis() < 2000, "{}", r.duration_ms);

    let planted = dir.path().join("p.c");
    std::fs::write(&planted, "int f(int a) { planted_assert(a); return a; }\n").unwrap();
    let h = harness(&[FAKE, "{input}"], 10_000);
    let r = execute(&h, &Counters::new(&h), &planted, "p", true).unwrap();
    assert_eq!(r.exit, Exit::Nonzero(1));
    assert!(r.crashed());
}

#[test]
fn output_is_capped() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.c");
    std::fs::write(&input, "").unwrap();
    let h = harness(&["sh", "-c", "head -c 3000000 /dev/zero >&2", "{input}"], 10_000);
    let r = execute(&h, &Counters::new(&h), &input, "in", true).unwrap();
    assert_eq!(r.exit, Exit::Ok);
    assert_eq!(r.stderr.len(), stylefuzz::campaign::CAPTURE_CAP);
}

#[test]
fn missing_harness_binary_is_a_spawn_failure() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("", "[budget]\niterations = 5\n", dir.path());
    cfg.harness.command[0] = "/nonexistent/compiler".into();
    let err = run_campaign(&cfg, &AtomicBool::new(false)).err().unwrap();
    assert!(matches!(err, CampaignError::Spawn(_)));
    assert_eq!(err.exit_code(), 3);
    assert!(!dir.path().join("edits.jsonl").exists());
}

#[test]
fn zero_budget_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("", "[budget]\niterations = 0\n", dir.path());
    let r = run_campaign(&cfg, &AtomicBool::new(false)).unwrap();
    assert_eq!(r.totals.iterations, 0);
    assert_eq!(r.totals.valid_count, 0);
    assert_eq!(r.totals.validity_rate, 0.0);
    assert_eq!(r.totals.triggers["loop_fusion"], 0);
    assert!(r.crashes.is_empty() && r.pairs.is_empty());
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn fusion_campaign_golden_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("", "workers = 4\n[budget]\niterations = 1000\n[weights]\n\"Cousins/Replicate\" = 1.0\n", dir.path());
    let r = run_campaign(&cfg, &AtomicBool::new(false)).unwrap();
    assert_eq!(r.totals.iterations + r.totals.exhausted, 1000);
    assert_eq!(r.totals.validity_rate, 1.0);
    assert!(r.totals.triggers["loop_fusion"] >= r.totals.iterations / 2, "{:?}", r.totals);
    assert!(r.crashes.is_empty());
    assert_eq!(r.pairs.keys().collect::<Vec<_>>(), ["Cousins/Replicate"]);
    let lines = std::fs::read_to_string(dir.path().join("edits.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 1000);
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("minute,iterations,valid,triggers\n"));
}

#[test]
fn crashing_pass_fills_buckets_with_reproducers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("\"--crash-on-adjacent\",", "workers = 2\n[budget]\niterations = 60\n[weights]\n\"Cousins/Replicate\" = 1.0\n", dir.path());
    let r = run_campaign(&cfg, &AtomicBool::new(false)).unwrap();
    assert!(!r.crashes.is_empty());
    for (sig, b) in &r.crashes {
        let repro = dir.path().join(&b.reproducer);
        assert!(repro.exists());
        assert!(repro.parent().unwrap().join("provenance.json").exists());
        let again = execute(&cfg.harness, &Counters::new(&cfg.harness), &repro, "r", true).unwrap();
        assert_eq!(&again.crash_signature, sig);
    }
    let hits: u64 = r.crashes.values().map(|b| b.hits).sum();
    assert_eq!(hits, r.totals.crash_runs);
}

#[test]
fn flaky_crashes_are_set_aside() {
    let dir = tempfile::tempdir().unwrap();
    // crashes on its second invocation only: the first is the harness
    // probe, the second the first iteration, the third the re-check
    let script = dir.path().join("flaky.sh");
    let count = dir.path().join("count");
    std::fs::write(
        &script,
        format!(
            "#!/bin/sh\nn=$(cat {c} 2>/dev/null || echo 0)\nn=$((n + 1))\necho $n > {c}\nif [ $n -eq 2 ]; then echo \"Assertion \\`once' failed.\" >&2; exit 1; fi\n",
            c = count.display()
        ),
    )
    .unwrap();
    let mut cfg = config("", "[budget]\niterations = 3\n[weights]\n\"Cousins/Replicate\" = 1.0\n", dir.path());
    cfg.harness.command = vec!["sh".into(), script.display().to_string(), "{input}".into()];
    let r = run_campaign(&cfg, &AtomicBool::new(false)).unwrap();
    assert!(r.crashes.is_empty());
    assert_eq!(r.flaky.len(), 1);
    let b = r.flaky.values().next().unwrap();
    assert!(b.reproducer.starts_with("crashes/flaky/"));
    assert!(dir.path().join(&b.reproducer).exists());
}
