//! Fuzzing campaigns: corpus loading, scheduling, running the compiler
//! under test, crash bucketing and reporting.
//!
//! Every iteration gets its own seed from one sequential generator, and
//! results are folded in iteration order, so the edit sequence and report
//! do not depend on the number of workers.

mod config;
mod harness;
mod scheduler;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mutators::{mutate, MutateOptions, MutatedProgram};
use crate::program::{load_dir, Language, Program};
use crate::styles::{all_styles, extract_pool, MatchPool, MatchRecord};

pub use config::{parse_pair, Budget, CampaignConfig, ConfigError, Counter, HarnessSpec, Mode, SchedulerKind};
pub use harness::{argv, dedup_crash, execute, Counters, Exit, RunResult, SpawnError, CAPTURE_CAP};
pub use scheduler::{subtree_swap, Pair, Scheduler};

/// Recipients tried for one drawn donor match before the iteration gives up.
pub const RECIPIENT_TRIES: usize = 8;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Corpus(String),
    #[error(transparent)]
    Spawn(#[from] SpawnError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CampaignError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CampaignError::Config(_) | CampaignError::Corpus(_) => 2,
            CampaignError::Spawn(_) | CampaignError::Io(_) => 3,
        }
    }
}

pub struct Corpora {
    pub lang: Language,
    pub pool: MatchPool,
    pub donors: Vec<Arc<Program>>,
    pub recipients: Vec<Arc<Program>>,
    /// Files of either corpus that did not parse.
    pub skipped: usize,
}

fn load_programs(lang: &Language, dir: &Path, what: &str) -> Result<(Vec<Arc<Program>>, usize), CampaignError> {
    let (progs, skipped) = load_dir(lang, dir)
        .map_err(|e| CampaignError::Corpus(format!("cannot read {what} {}: {e}", dir.display())))?;
    Ok((progs.into_iter().map(Arc::new).collect(), skipped.len()))
}

pub fn load_corpora(cfg: &CampaignConfig) -> Result<Corpora, CampaignError> {
    let lang = Language::load(&cfg.grammar, &cfg.annotations)
        .map_err(|e| CampaignError::Config(ConfigError::Invalid(e.to_string())))?;
    let (donors, s1) = load_programs(&lang, &cfg.optimization_corpus, "optimization corpus")?;
    let (recipients, s2) = load_programs(&lang, &cfg.seed_corpus, "seed corpus")?;
    if recipients.is_empty() {
        return Err(CampaignError::Corpus("seed corpus has no programs".into()));
    }
    let pool = extract_pool(&donors, &all_styles(), &lang.ann);
    if pool.is_empty() {
        return Err(CampaignError::Corpus("optimization corpus yields no composition styles".into()));
    }
    Ok(Corpora {
        lang,
        pool,
        donors,
        recipients,
        skipped: s1 + s2,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    /// Programs run through the harness.
    pub iterations: u64,
    /// Iterations in which no edit succeeded, so nothing was run.
    pub exhausted: u64,
    pub valid_count: u64,
    pub validity_rate: f64,
    pub triggers: BTreeMap<String, u64>,
    pub crash_runs: u64,
    pub timeouts: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairStats {
    pub attempts: u64,
    pub successes: u64,
    pub rejects: BTreeMap<String, u64>,
    pub triggers: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashBucket {
    /// Relative to the output directory.
    pub reproducer: String,
    pub first_iteration: u64,
    pub hits: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub donors: usize,
    pub recipients: usize,
    pub skipped_files: usize,
    pub pool_matches: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinuteBucket {
    pub minute: u64,
    pub iterations: u64,
    pub valid: u64,
    pub triggers: u64,
}

/// Everything that depends on wall-clock time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: u64,
    pub throughput: Vec<MinuteBucket>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub mode: Mode,
    pub scheduler: SchedulerKind,
    pub rng_seed: u64,
    pub interrupted: bool,
    pub corpus: CorpusStats,
    pub totals: Totals,
    pub pairs: BTreeMap<String, PairStats>,
    pub crashes: BTreeMap<String, CrashBucket>,
    /// Crashes whose reproducer did not crash the same way when re-run.
    pub flaky: BTreeMap<String, CrashBucket>,
    pub timing: Timing,
}

impl CampaignReport {
    fn empty(cfg: &CampaignConfig) -> CampaignReport {
        CampaignReport {
            mode: cfg.mode,
            scheduler: cfg.scheduler,
            rng_seed: cfg.rng_seed,
            interrupted: false,
            corpus: CorpusStats::default(),
            totals: Totals {
                triggers: cfg.harness.counters.iter().map(|c| (c.name.clone(), 0)).collect(),
                ..Totals::default()
            },
            pairs: BTreeMap::new(),
            crashes: BTreeMap::new(),
            flaky: BTreeMap::new(),
            timing: Timing::default(),
        }
    }

    /// Per-minute throughput as CSV.
    pub fn throughput_csv(&self) -> String {
        let mut s = String::from("minute,iterations,valid,triggers\n");
        for b in &self.timing.throughput {
            s.push_str(&format!("{},{},{},{}\n", b.minute, b.iterations, b.valid, b.triggers));
        }
        s
    }

    /// Per-(style, mutator) statistics as CSV.
    pub fn pairs_csv(&self) -> String {
        let reasons: std::collections::BTreeSet<&str> = self
            .pairs
            .values()
            .flat_map(|p| p.rejects.keys().map(String::as_str))
            .collect();
        let mut s = String::from("pair,attempts,successes,triggers");
        for r in &reasons {
            s.push_str(&format!(",reject:{r}"));
        }
        s.push('\n');
        for (k, p) in &self.pairs {
            s.push_str(&format!("{k},{},{},{}", p.attempts, p.successes, p.triggers));
            for r in &reasons {
                s.push_str(&format!(",{}", p.rejects.get(*r).copied().unwrap_or(0)));
            }
            s.push('\n');
        }
        s
    }
}

/// One line of `edits.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditRecord {
    pub iteration: u64,
    pub seed: u64,
    pub pair: Option<String>,
    pub rejects: Vec<String>,
    pub donor_id: Option<String>,
    pub recipient_id: Option<String>,
    pub text_sha256: Option<String>,
    pub exit: Option<Exit>,
    pub triggers: BTreeMap<String, u64>,
    pub crash_signature: String,
    pub valid: Option<bool>,
}

struct Edit {
    text: String,
    donor_id: String,
    recipient_id: String,
    provenance: serde_json::Value,
}

struct Outcome {
    index: u64,
    seed: u64,
    pair: Option<String>,
    rejects: Vec<&'static str>,
    edit: Option<Edit>,
    run: Option<RunResult>,
}

const BASELINE_PAIR: &str = "baseline/swap";

fn pair_key(p: Pair) -> String {
    format!("{}/{}", p.0, p.1)
}

struct Shared<'a> {
    cfg: &'a CampaignConfig,
    corpora: &'a Corpora,
    sched: Scheduler<'a>,
    /// Donor material for the baseline swap.
    swap_sources: Vec<Arc<Program>>,
    counters: Counters,
    work: PathBuf,
}

impl Shared<'_> {
    fn plan(&self, index: u64, seed: u64) -> Outcome {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Outcome {
            index,
            seed,
            pair: None,
            rejects: Vec::new(),
            edit: None,
            run: None,
        };
        let c = self.corpora;
        if self.cfg.scheduler == SchedulerKind::Baseline {
            out.pair = Some(BASELINE_PAIR.to_string());
            for _ in 0..RECIPIENT_TRIES {
                let r = &c.recipients[self.sched.draw_recipient(&mut rng)];
                match subtree_swap(&c.lang, r, &self.swap_sources, &mut rng) {
                    Some((text, donor_id)) => {
                        out.edit = Some(Edit {
                            provenance: serde_json::json!({
                                "donor_id": donor_id, "recipient_id": r.id, "scheduler": "baseline", "seed": seed,
                            }),
                            text,
                            donor_id,
                            recipient_id: r.id.clone(),
                        });
                        break;
                    }
                    None => out.rejects.push("no-counterpart"),
                }
            }
            return out;
        }
        let Some(pair) = self.sched.draw_pair(&mut rng) else {
            return out;
        };
        out.pair = Some(pair_key(pair));
        let entry = self.sched.draw_donor(pair.0, &mut rng);
        for _ in 0..RECIPIENT_TRIES {
            let r = &c.recipients[self.sched.draw_recipient(&mut rng)];
            let opts = MutateOptions::seeded(rng.gen());
            match mutate(&c.lang, &entry.donor, &entry.m, r, pair.1, &opts) {
                Ok(MutatedProgram { text, provenance, plan, .. }) => {
                    let record: MatchRecord = entry.m.record(&entry.donor.ct, &c.lang.ann);
                    out.edit = Some(Edit {
                        provenance: serde_json::json!({
                            "provenance": provenance, "match": record, "plan": plan,
                        }),
                        text,
                        donor_id: entry.donor.id.clone(),
                        recipient_id: r.id.clone(),
                    });
                    break;
                }
                Err(e) => out.rejects.push(e.reason()),
            }
        }
        out
    }

    fn input_path(&self, worker: usize) -> PathBuf {
        self.work.join(format!("w{worker}.{}", self.corpora.lang.ext))
    }

    fn run(&self, worker: usize, index: u64, seed: u64) -> Result<Outcome, SpawnError> {
        let mut out = self.plan(index, seed);
        if let Some(edit) = &out.edit {
            let path = self.input_path(worker);
            fs::write(&path, &edit.text).map_err(|source| SpawnError {
                program: path.display().to_string(),
                source,
            })?;
            let parses = Program::parse(&self.corpora.lang, "check", &edit.text).is_ok();
            out.run = Some(execute(&self.cfg.harness, &self.counters, &path, &edit.recipient_id, parses)?);
        }
        Ok(out)
    }
}

struct Aggregator<'a> {
    cfg: &'a CampaignConfig,
    shared: &'a Shared<'a>,
    report: CampaignReport,
    edits: fs::File,
    started: Instant,
}

impl Aggregator<'_> {
    fn fold(&mut self, o: Outcome) -> Result<(), CampaignError> {
        let r = &mut self.report;
        if let Some(p) = &o.pair {
            let st = r.pairs.entry(p.clone()).or_default();
            st.attempts += (o.rejects.len() + usize::from(o.edit.is_some())) as u64;
            st.successes += u64::from(o.edit.is_some());
            for why in &o.rejects {
                *st.rejects.entry(why.to_string()).or_default() += 1;
            }
        }
        let mut rec = EditRecord {
            iteration: o.index,
            seed: o.seed,
            pair: o.pair.clone(),
            rejects: o.rejects.iter().map(|s| s.to_string()).collect(),
            donor_id: o.edit.as_ref().map(|e| e.donor_id.clone()),
            recipient_id: o.edit.as_ref().map(|e| e.recipient_id.clone()),
            text_sha256: o.edit.as_ref().map(|e| hex::encode(Sha256::digest(e.text.as_bytes()))),
            exit: None,
            triggers: BTreeMap::new(),
            crash_signature: String::new(),
            valid: None,
        };
        match (&o.edit, &o.run) {
            (Some(edit), Some(run)) => {
                let t = &mut r.totals;
                t.iterations += 1;
                t.valid_count += u64::from(run.valid);
                t.timeouts += u64::from(run.exit == Exit::Timeout);
                let fired: u64 = run.triggers.values().sum();
                for (k, v) in &run.triggers {
                    *t.triggers.entry(k.clone()).or_default() += v;
                }
                if let Some(p) = &o.pair {
                    r.pairs.entry(p.clone()).or_default().triggers += fired;
                }
                let minute = self.started.elapsed().as_secs() / 60;
                let tp = &mut r.timing.throughput;
                if tp.last().is_none_or(|b| b.minute != minute) {
                    tp.push(MinuteBucket {
                        minute,
                        ..Default::default()
                    });
                }
                let b = tp.last_mut().expect("pushed");
                b.iterations += 1;
                b.valid += u64::from(run.valid);
                b.triggers += fired;
                rec.exit = Some(run.exit);
                rec.triggers = run.triggers.clone();
                rec.crash_signature = run.crash_signature.clone();
                rec.valid = Some(run.valid);
                if run.crashed() {
                    r.totals.crash_runs += 1;
                    self.bucket(o.index, edit, run)?;
                }
            }
            _ => self.report.totals.exhausted += 1,
        }
        serde_json::to_writer(&mut self.edits, &rec).map_err(std::io::Error::other)?;
        self.edits.write_all(b"\n")?;
        Ok(())
    }

    fn bucket(&mut self, index: u64, edit: &Edit, run: &RunResult) -> Result<(), CampaignError> {
        let sig = &run.crash_signature;
        let r = &mut self.report;
        if let Some(b) = r.crashes.get_mut(sig).or(r.flaky.get_mut(sig)) {
            b.hits += 1;
            return Ok(());
        }
        let ext = &self.shared.corpora.lang.ext;
        let out = &self.cfg.output_dir;
        let dir = out.join("crashes").join(sig);
        fs::create_dir_all(&dir)?;
        let repro = dir.join(format!("reproducer.{ext}"));
        fs::write(&repro, &edit.text)?;
        let prov = serde_json::json!({
            "iteration": index,
            "signature": sig,
            "exit": run.exit,
            "donor_id": edit.donor_id,
            "recipient_id": edit.recipient_id,
            "edit": edit.provenance,
        });
        fs::write(dir.join("provenance.json"), serde_json::to_string_pretty(&prov).map_err(std::io::Error::other)?)?;
        // one re-execution decides whether the bucket is kept
        let again = execute(&self.cfg.harness, &self.shared.counters, &repro, &edit.recipient_id, true)?;
        let bucket = |rel: &Path| CrashBucket {
            reproducer: rel.join(format!("reproducer.{ext}")).display().to_string(),
            first_iteration: index,
            hits: 1,
        };
        if again.crash_signature == *sig {
            r.crashes.insert(sig.clone(), bucket(&Path::new("crashes").join(sig)));
        } else {
            let rel = Path::new("crashes").join("flaky").join(sig);
            let flaky = out.join(&rel);
            if flaky.exists() {
                fs::remove_dir_all(&flaky)?;
            }
            fs::create_dir_all(flaky.parent().expect("nested"))?;
            fs::rename(&dir, &flaky)?;
            r.flaky.insert(sig.clone(), bucket(&rel));
        }
        Ok(())
    }
}

/// Run a campaign until its budget is spent or `stop` is raised. Writes
/// `edits.jsonl`, `report.json`, `report.csv` and crash buckets under the
/// output directory.
pub fn run_campaign(cfg: &CampaignConfig, stop: &AtomicBool) -> Result<CampaignReport, CampaignError> {
    let started = Instant::now();
    let mut report = CampaignReport::empty(cfg);
    if cfg.budget.iterations.is_none() && cfg.budget.seconds.is_none() {
        return Err(ConfigError::Invalid("budget needs iterations or seconds".into()).into());
    }
    let corpora = load_corpora(cfg)?;
    report.corpus = CorpusStats {
        donors: corpora.donors.len(),
        recipients: corpora.recipients.len(),
        skipped_files: corpora.skipped,
        pool_matches: corpora.pool.len(),
    };
    let sched = Scheduler::new(&corpora.pool, &cfg.weights, corpora.recipients.len());
    if cfg.scheduler == SchedulerKind::Styles && sched.support().is_empty() {
        return Err(CampaignError::Corpus(
            "optimization corpus yields no composition styles for the weighted pairs".into(),
        ));
    }
    fs::create_dir_all(&cfg.output_dir)?;
    let work = cfg.output_dir.join(".work");
    fs::create_dir_all(&work)?;
    let shared = Shared {
        cfg,
        corpora: &corpora,
        sched,
        swap_sources: corpora.donors.iter().chain(&corpora.recipients).cloned().collect(),
        counters: Counters::new(&cfg.harness),
        work: work.clone(),
    };
    // the harness must be runnable before the first iteration
    probe(cfg, &shared)?;
    let mut agg = Aggregator {
        cfg,
        shared: &shared,
        report,
        edits: fs::File::create(cfg.output_dir.join("edits.jsonl"))?,
        started,
    };
    let failed = AtomicBool::new(false);
    let mut error: Option<CampaignError> = None;
    let limit = cfg.budget.iterations.unwrap_or(u64::MAX);
    let deadline = cfg.budget.seconds.map(std::time::Duration::from_secs);
    let (task_tx, task_rx) = crossbeam_channel::bounded::<(u64, u64)>(cfg.workers);
    let (res_tx, res_rx) = crossbeam_channel::unbounded::<Result<Outcome, SpawnError>>();
    std::thread::scope(|s| {
        s.spawn(|| {
            let mut master = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            for i in 0..limit {
                if stop.load(Ordering::SeqCst)
                    || failed.load(Ordering::SeqCst)
                    || deadline.is_some_and(|d| started.elapsed() >= d)
                {
                    break;
                }
                if task_tx.send((i, master.gen())).is_err() {
                    break;
                }
            }
            drop(task_tx);
        });
        for w in 0..cfg.workers {
            let (rx, tx, shared) = (task_rx.clone(), res_tx.clone(), &shared);
            s.spawn(move || {
                for (i, seed) in rx {
                    if tx.send(shared.run(w, i, seed)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(res_tx);
        drop(task_rx);
        let mut pending: BTreeMap<u64, Outcome> = BTreeMap::new();
        let mut next = 0u64;
        for res in res_rx {
            match res {
                Ok(o) => {
                    pending.insert(o.index, o);
                }
                Err(e) => {
                    failed.store(true, Ordering::SeqCst);
                    error.get_or_insert(e.into());
                    continue;
                }
            }
            while let Some(o) = pending.remove(&next) {
                next += 1;
                if error.is_none() {
                    if let Err(e) = agg.fold(o) {
                        failed.store(true, Ordering::SeqCst);
                        error = Some(e);
                    }
                }
            }
        }
    });
    let _ = fs::remove_dir_all(&work);
    if let Some(e) = error {
        return Err(e);
    }
    let mut report = agg.report;
    report.interrupted = stop.load(Ordering::SeqCst);
    let t = &mut report.totals;
    t.validity_rate = if t.iterations == 0 { 0.0 } else { t.valid_count as f64 / t.iterations as f64 };
    report.timing.elapsed_ms = started.elapsed().as_millis() as u64;
    write_report(&cfg.output_dir, &report)?;
    Ok(report)
}

fn probe(cfg: &CampaignConfig, shared: &Shared) -> Result<(), CampaignError> {
    let path = shared.input_path(usize::MAX);
    fs::write(&path, shared.corpora.recipients[0].source())?;
    let res = execute(&cfg.harness, &shared.counters, &path, "probe", true);
    let _ = fs::remove_file(&path);
    res?;
    Ok(())
}

pub fn write_report(dir: &Path, report: &CampaignReport) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    fs::write(dir.join("report.json"), json + "\n")?;
    fs::write(dir.join("report.csv"), report.throughput_csv())
}

pub fn read_report(dir: &Path) -> Option<CampaignReport> {
    let text = fs::read_to_string(dir.join("report.json")).ok()?;
    serde_json::from_str(&text).ok()
}
