//! Driving the runtime: seeded and replayed runs, parallel fuzzing, bounded
//! exhaustive exploration, and lockstep comparison of the two graph modes.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ast::{Block, Expr, ExprKind, Location, Value};
use crate::monitor::{self, Classification, Verdict, Witness};
use crate::runtime::{Configuration, Enabled, GraphMode, StepRecord, TaskTree, Timestamp};

/// The choices made at each step, as indices into the enabled positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Schedule {
    pub mode: GraphMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub choices: Vec<u32>,
}

impl Schedule {
    pub fn new(mode: GraphMode) -> Schedule {
        Schedule {
            mode,
            seed: None,
            choices: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Policy {
    Seeded(u64),
    Replay(Schedule),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MonitorMode {
    /// Scan the whole configuration after every step.
    Scan,
    /// Check only what each step acquires, halting at the first failure.
    Detect,
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub fuel: u64,
    pub mode: GraphMode,
    pub monitor: MonitorMode,
    /// Keep the per-step trace and verdicts in the report.
    pub record: bool,
}

impl RunOptions {
    pub fn new(mode: GraphMode) -> RunOptions {
        RunOptions {
            fuel: 100_000,
            mode,
            monitor: MonitorMode::Scan,
            record: true,
        }
    }

    pub fn fuel(mut self, fuel: u64) -> RunOptions {
        self.fuel = fuel;
        self
    }

    pub fn monitor(mut self, monitor: MonitorMode) -> RunOptions {
        self.monitor = monitor;
        self
    }

    pub fn record(mut self, record: bool) -> RunOptions {
        self.record = record;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Final(Value),
    OobStuck,
    HardStuck(String),
    FuelExhausted,
    /// Detector mode stopped at an acquisition that failed its check.
    EntanglementDetected,
    /// A replayed schedule ran out before the program finished.
    ScheduleEnd,
    /// A replayed choice did not index an enabled position.
    InvalidChoice { step: u64, choice: u32, enabled: usize },
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Final(v) => write!(f, "final {v}"),
            Outcome::OobStuck => f.write_str("out-of-bounds stuck"),
            Outcome::HardStuck(m) => write!(f, "stuck: {m}"),
            Outcome::FuelExhausted => f.write_str("fuel exhausted"),
            Outcome::EntanglementDetected => f.write_str("entanglement detected"),
            Outcome::ScheduleEnd => f.write_str("schedule ended early"),
            Outcome::InvalidChoice { step, choice, enabled } => {
                write!(f, "choice {choice} at step {step} out of {enabled} enabled positions")
            }
        }
    }
}

/// One line of a trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub step: u64,
    pub choice: u32,
    #[serde(flatten)]
    pub record: StepRecord,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub outcome: Outcome,
    pub steps: u64,
    pub schedule: Schedule,
    /// Index 0 is the initial configuration. Empty unless recording.
    pub verdicts: Vec<Verdict>,
    pub trace: Vec<TraceRecord>,
    pub first_violation: Option<(u64, Vec<Witness>)>,
    pub all_safe: bool,
    pub config: Configuration,
}

impl RunReport {
    pub fn entangled(&self) -> bool {
        self.first_violation.is_some()
    }

    /// The trace as line-delimited JSON.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.trace {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }
}

fn detect_verdict(cfg: &Configuration, en: &Enabled, rec: &StepRecord) -> Verdict {
    let classification = monitor::classify_enabled(cfg, en);
    let witnesses: Vec<Witness> = rec
        .acquired
        .iter()
        .filter(|l| !monitor::acquisition_ok(cfg, rec.ts, **l))
        .map(|l| Witness {
            path: rec.path.clone(),
            loc: *l,
            allocated_by: cfg.stamp(*l).unwrap_or(Timestamp(u32::MAX)),
            task: rec.ts,
            leaves: cfg.tree.leaves(),
        })
        .collect();
    Verdict {
        disentangled: witnesses.is_empty(),
        safe: classification != Classification::HardStuck,
        classification,
        witnesses,
    }
}

/// Runs `program` to completion under one schedule, monitoring every step.
pub fn run(program: &Expr, policy: &Policy, opts: &RunOptions) -> RunReport {
    let mode = match policy {
        Policy::Replay(s) => s.mode,
        Policy::Seeded(_) => opts.mode,
    };
    let mut cfg = Configuration::new(program.clone(), mode);
    let mut rng = match policy {
        Policy::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        Policy::Replay(_) => None,
    };
    let mut schedule = Schedule::new(mode);
    schedule.seed = match policy {
        Policy::Seeded(seed) => Some(*seed),
        Policy::Replay(s) => s.seed,
    };
    let mut en = cfg.enabled();
    let v0 = match opts.monitor {
        MonitorMode::Scan => monitor::verdict_with(&cfg, &en),
        MonitorMode::Detect => Verdict {
            disentangled: true,
            safe: true,
            classification: monitor::classify_enabled(&cfg, &en),
            witnesses: Vec::new(),
        },
    };
    let mut all_safe = v0.safe;
    let mut first_violation = (!v0.disentangled).then(|| (0, v0.witnesses.clone()));
    let mut verdicts = Vec::new();
    let mut trace = Vec::new();
    if opts.record {
        verdicts.push(v0);
    }
    let mut steps = 0u64;
    let outcome = loop {
        if let Some(v) = cfg.result() {
            break Outcome::Final(v.clone());
        }
        if let Some((_, m)) = en.stuck.first() {
            break Outcome::HardStuck(m.clone());
        }
        if en.steps.is_empty() {
            break if en.oob.is_empty() {
                Outcome::HardStuck("no enabled position".into())
            } else {
                Outcome::OobStuck
            };
        }
        if steps >= opts.fuel {
            break Outcome::FuelExhausted;
        }
        let choice = match (&mut rng, policy) {
            (Some(rng), _) => rng.gen_range(0..en.steps.len()) as u32,
            (None, Policy::Replay(s)) => match s.choices.get(steps as usize) {
                Some(c) => *c,
                None => break Outcome::ScheduleEnd,
            },
            (None, Policy::Seeded(_)) => unreachable!(),
        };
        let Some(pos) = en.steps.get(choice as usize) else {
            break Outcome::InvalidChoice {
                step: steps,
                choice,
                enabled: en.steps.len(),
            };
        };
        let rec = match cfg.step(pos) {
            Ok(r) => r,
            Err(e) => break Outcome::HardStuck(e.to_string()),
        };
        steps += 1;
        schedule.choices.push(choice);
        en = cfg.enabled();
        let v = match opts.monitor {
            MonitorMode::Scan => monitor::verdict_with(&cfg, &en),
            MonitorMode::Detect => detect_verdict(&cfg, &en, &rec),
        };
        all_safe &= v.safe;
        let violated = !v.disentangled;
        if violated && first_violation.is_none() {
            first_violation = Some((steps, v.witnesses.clone()));
        }
        if opts.record {
            verdicts.push(v.clone());
            trace.push(TraceRecord {
                step: steps,
                choice,
                record: rec,
                verdict: v,
            });
        }
        if violated && opts.monitor == MonitorMode::Detect {
            break Outcome::EntanglementDetected;
        }
    };
    RunReport {
        outcome,
        steps,
        schedule,
        verdicts,
        trace,
        first_violation,
        all_safe,
        config: cfg,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FuzzSummary {
    pub trials: u64,
    pub finals: u64,
    pub oob_stuck: u64,
    pub hard_stuck: u64,
    pub fuel_exhausted: u64,
    /// Runs with at least one entangled configuration.
    pub violations: u64,
    /// Runs with at least one unsafe configuration.
    pub unsafe_runs: u64,
    pub violating_seeds: Vec<u64>,
    pub distinct_witnesses: usize,
}

impl FuzzSummary {
    pub fn clean(&self) -> bool {
        self.violations == 0 && self.unsafe_runs == 0
    }
}

/// Independent seeded runs with seeds `base_seed..base_seed + trials`,
/// spread over the rayon pool.
pub fn fuzz(program: &Expr, trials: u64, base_seed: u64, opts: &RunOptions) -> FuzzSummary {
    let opts = opts.record(false);
    let reports: Vec<_> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            let r = run(program, &Policy::Seeded(seed), &opts);
            let wits: Vec<_> = r
                .first_violation
                .iter()
                .flat_map(|(_, w)| w.iter().map(|w| (w.loc, w.allocated_by, w.task)))
                .collect();
            (seed, r.outcome, r.first_violation.is_some(), r.all_safe, wits)
        })
        .collect();
    let mut s = FuzzSummary {
        trials,
        ..FuzzSummary::default()
    };
    let mut distinct = BTreeSet::new();
    for (seed, outcome, violated, all_safe, wits) in reports {
        match outcome {
            Outcome::Final(_) => s.finals += 1,
            Outcome::OobStuck => s.oob_stuck += 1,
            Outcome::HardStuck(_) => s.hard_stuck += 1,
            Outcome::FuelExhausted => s.fuel_exhausted += 1,
            _ => {}
        }
        if violated {
            s.violations += 1;
            s.violating_seeds.push(seed);
        }
        if !all_safe {
            s.unsafe_runs += 1;
        }
        distinct.extend(wits);
    }
    s.distinct_witnesses = distinct.len();
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Entangled(Vec<Witness>),
    Unsafe(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub schedule: Schedule,
    pub kind: ViolationKind,
}

/// A point where the cyclic and standard runs of one schedule differ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disagreement {
    pub schedule: Schedule,
    pub what: String,
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    pub step_bound: usize,
    pub mode: GraphMode,
    pub state_cap: usize,
    /// Step a standard-mode configuration in lockstep with every cyclic one
    /// and compare them.
    pub compare_modes: bool,
}

impl ExploreOptions {
    pub fn new(step_bound: usize, mode: GraphMode) -> ExploreOptions {
        ExploreOptions {
            step_bound,
            mode,
            state_cap: 2_000_000,
            compare_modes: false,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ExploreReport {
    /// Distinct canonical states expanded.
    pub states: usize,
    pub transitions: usize,
    /// Visits to configurations with nothing left to do.
    pub terminals: usize,
    /// Visits cut off by the step bound.
    pub truncated: usize,
    pub violations: Vec<Violation>,
    pub disagreements: Vec<Disagreement>,
}

impl ExploreReport {
    pub fn complete(&self) -> bool {
        self.truncated == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExploreError {
    #[error("state budget exceeded after {0} states")]
    BudgetExceeded(usize),
}

struct Explorer<'a> {
    opts: &'a ExploreOptions,
    memo: HashMap<u128, usize>,
    report: ExploreReport,
    path: Vec<u32>,
}

impl Explorer<'_> {
    fn schedule(&self) -> Schedule {
        Schedule {
            mode: self.opts.mode,
            seed: None,
            choices: self.path.clone(),
        }
    }

    fn visit(&mut self, cfg: &Configuration, shadow: Option<&Configuration>) -> Result<(), ExploreError> {
        let depth = self.path.len();
        let remaining = self.opts.step_bound - depth;
        let mut key = canonical_hash(cfg);
        if let Some(s) = shadow {
            key = key.rotate_left(17) ^ canonical_hash(s);
        }
        let seen = self.memo.get(&key).copied();
        if seen.is_some_and(|r| r >= remaining) {
            return Ok(());
        }
        self.memo.insert(key, remaining);
        let en = cfg.enabled();
        let v = monitor::verdict_with(cfg, &en);
        if let Some(s) = shadow {
            if let Some(what) = compare(cfg, s, v.disentangled) {
                if seen.is_none() {
                    self.report.disagreements.push(Disagreement {
                        schedule: self.schedule(),
                        what,
                    });
                }
                return Ok(());
            }
        }
        if !v.disentangled || !v.safe {
            if seen.is_none() {
                let kind = if v.safe {
                    ViolationKind::Entangled(v.witnesses)
                } else {
                    let msg = en.stuck.first().map_or("stuck".to_string(), |(_, m)| m.clone());
                    ViolationKind::Unsafe(msg)
                };
                self.report.violations.push(Violation {
                    schedule: self.schedule(),
                    kind,
                });
            }
            return Ok(());
        }
        if en.steps.is_empty() {
            self.report.terminals += 1;
            return Ok(());
        }
        if remaining == 0 {
            self.report.truncated += 1;
            return Ok(());
        }
        if seen.is_none() {
            self.report.states += 1;
            if self.report.states > self.opts.state_cap {
                return Err(ExploreError::BudgetExceeded(self.report.states));
            }
        }
        let shadow_en = shadow.map(|s| s.enabled());
        for (i, pos) in en.steps.iter().enumerate() {
            self.path.push(i as u32);
            self.report.transitions += 1;
            let mut next = cfg.clone();
            if let Err(e) = next.step(pos) {
                self.report.violations.push(Violation {
                    schedule: self.schedule(),
                    kind: ViolationKind::Unsafe(e.to_string()),
                });
                self.path.pop();
                continue;
            }
            let next_shadow = match (shadow, &shadow_en) {
                (Some(s), Some(sen)) => {
                    let mut n = s.clone();
                    let ok = sen.steps.get(i) == Some(pos) && n.step(pos).is_ok();
                    if !ok {
                        self.report.disagreements.push(Disagreement {
                            schedule: self.schedule(),
                            what: "the position is not enabled in standard mode".into(),
                        });
                        self.path.pop();
                        continue;
                    }
                    Some(n)
                }
                _ => None,
            };
            self.visit(&next, next_shadow.as_ref())?;
            self.path.pop();
        }
        Ok(())
    }
}

fn compare(a: &Configuration, b: &Configuration, a_disentangled: bool) -> Option<String> {
    if a.expr != b.expr {
        return Some("expressions differ".into());
    }
    if a.store != b.store {
        return Some("stores differ".into());
    }
    let b_disentangled = monitor::disentangled(b).is_ok_and(|w| w.is_empty());
    if a_disentangled != b_disentangled {
        return Some(format!(
            "disentangled in {} mode only",
            if a_disentangled { a.mode() } else { b.mode() }
        ));
    }
    None
}

/// Depth-first enumeration of every schedule of at most `step_bound` steps.
/// Configurations that differ only in the numbering of locations and
/// timestamps are explored once.
pub fn explore(program: &Expr, opts: &ExploreOptions) -> Result<ExploreReport, ExploreError> {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(256 << 20)
            .spawn_scoped(s, || {
                let mut ex = Explorer {
                    opts,
                    memo: HashMap::new(),
                    report: ExploreReport::default(),
                    path: Vec::new(),
                };
                let cfg = Configuration::new(program.clone(), opts.mode);
                let shadow = opts
                    .compare_modes
                    .then(|| Configuration::new(program.clone(), other(opts.mode)));
                ex.visit(&cfg, shadow.as_ref())?;
                Ok(ex.report)
            })
            .expect("spawn explorer thread")
            .join()
            .expect("explorer thread panicked")
    })
}

fn other(mode: GraphMode) -> GraphMode {
    match mode {
        GraphMode::Cyclic => GraphMode::Standard,
        GraphMode::Standard => GraphMode::Cyclic,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Simulation {
    pub agree: bool,
    /// The first step index at which the modes differ.
    pub divergence: Option<usize>,
    pub reason: Option<String>,
    pub steps: usize,
}

/// Replays one choice sequence in both graph modes and compares the
/// configurations after every step.
pub fn simulate_modes(program: &Expr, schedule: &Schedule) -> Simulation {
    let mut c = Configuration::new(program.clone(), GraphMode::Cyclic);
    let mut s = Configuration::new(program.clone(), GraphMode::Standard);
    let diverge = |i: usize, why: String| Simulation {
        agree: false,
        divergence: Some(i),
        reason: Some(why),
        steps: i,
    };
    for i in 0..=schedule.choices.len() {
        let cd = monitor::disentangled(&c).is_ok_and(|w| w.is_empty());
        if let Some(why) = compare(&c, &s, cd) {
            return diverge(i, why);
        }
        let Some(&choice) = schedule.choices.get(i) else { break };
        let (ce, se) = (c.enabled(), s.enabled());
        let (Some(cp), Some(sp)) = (ce.steps.get(choice as usize), se.steps.get(choice as usize)) else {
            return diverge(i, format!("choice {choice} is not enabled in both modes"));
        };
        if cp != sp {
            return diverge(i, "the modes enable different positions".into());
        }
        if c.step(cp).is_err() || s.step(sp).is_err() {
            return diverge(i, "a step failed".into());
        }
    }
    Simulation {
        agree: true,
        divergence: None,
        reason: None,
        steps: schedule.choices.len(),
    }
}

/// A hash of the configuration that ignores how locations and timestamps
/// happen to be numbered, and ignores unreachable store blocks.
pub fn canonical_hash(cfg: &Configuration) -> u128 {
    let mut locs: Vec<Location> = Vec::new();
    let mut loc_ix: HashMap<Location, u64> = HashMap::new();
    let mut note = |l: Location, locs: &mut Vec<Location>| {
        if !loc_ix.contains_key(&l) {
            loc_ix.insert(l, locs.len() as u64);
            locs.push(l);
        }
    };
    cfg.expr.for_each_loc(&mut |l| note(l, &mut locs));
    let mut i = 0;
    while i < locs.len() {
        if let Some(b) = cfg.block(locs[i]) {
            b.for_each_loc(&mut |l| note(l, &mut locs));
        }
        i += 1;
    }

    let mut ts: Vec<Timestamp> = Vec::new();
    let mut ts_ix: HashMap<Timestamp, u32> = HashMap::new();
    let mut note_ts = |t: Timestamp, ts: &mut Vec<Timestamp>| {
        if !ts_ix.contains_key(&t) {
            ts_ix.insert(t, ts.len() as u32);
            ts.push(t);
        }
    };
    fn tree_ts(t: &TaskTree, f: &mut impl FnMut(Timestamp)) {
        f(t.timestamp());
        if let TaskTree::Node(_, l, r) = t {
            tree_ts(l, f);
            tree_ts(r, f);
        }
    }
    tree_ts(&cfg.tree, &mut |t| note_ts(t, &mut ts));
    for l in &locs {
        if let Some(t) = cfg.stamp(*l) {
            note_ts(t, &mut ts);
        }
    }

    let rename = |l: Location| Location(loc_ix[&l]);
    let mut expr = cfg.expr.clone();
    rename_expr(&mut expr, &rename);

    let mut h1 = DefaultHasher::new();
    let mut h2 = DefaultHasher::new();
    0x5eed_u32.hash(&mut h2);
    let mut both = |f: &dyn Fn(&mut DefaultHasher)| {
        f(&mut h1);
        f(&mut h2);
    };
    both(&|h| cfg.mode().hash(h));
    both(&|h| expr.hash(h));
    fn hash_tree(t: &TaskTree, ix: &HashMap<Timestamp, u32>, h: &mut DefaultHasher) {
        match t {
            TaskTree::Leaf(x) => (0u8, ix[x]).hash(h),
            TaskTree::Node(x, l, r) => {
                (1u8, ix[x]).hash(h);
                hash_tree(l, ix, h);
                hash_tree(r, ix, h);
            }
        }
    }
    both(&|h| hash_tree(&cfg.tree, &ts_ix, h));
    for l in &locs {
        let mut b = cfg.block(*l).cloned();
        if let Some(b) = &mut b {
            rename_block(b, &rename);
        }
        let stamp = cfg.stamp(*l).map(|t| ts_ix[&t]);
        both(&|h| (&b, stamp).hash(h));
    }
    for a in &ts {
        let row: Vec<bool> = ts.iter().map(|b| cfg.graph.precedes(*a, *b)).collect();
        both(&|h| row.hash(h));
    }
    ((h1.finish() as u128) << 64) | h2.finish() as u128
}

fn rename_value(v: &mut Value, f: &impl Fn(Location) -> Location) {
    match v {
        Value::Loc(l) => *l = f(*l),
        Value::Fold(inner) => rename_value(inner, f),
        _ => {}
    }
}

fn has_loc(e: &Expr) -> bool {
    let mut found = false;
    e.visit(&mut |e| {
        if let ExprKind::Val(v) = &e.kind {
            v.for_each_loc(&mut |_| found = true);
        }
        !found
    });
    found
}

fn rename_expr(e: &mut Expr, f: &impl Fn(Location) -> Location) {
    match &mut e.kind {
        ExprKind::Val(v) => rename_value(v, f),
        ExprKind::Abs(abs) => {
            if has_loc(&abs.body) {
                rename_expr(&mut Arc::make_mut(abs).body, f)
            }
        }
        _ => e.for_each_child_mut(|c| rename_expr(c, f)),
    }
}

fn rename_block(b: &mut Block, f: &impl Fn(Location) -> Location) {
    match b {
        Block::Array(vs) => vs.iter_mut().for_each(|v| rename_value(v, f)),
        Block::Pair(a, c) => {
            rename_value(a, f);
            rename_value(c, f);
        }
        Block::Inj(_, v) => rename_value(v, f),
        Block::Closure(abs) => {
            if has_loc(&abs.body) {
                rename_expr(&mut Arc::make_mut(abs).body, f)
            }
        }
    }
}
