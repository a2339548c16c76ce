use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dl2::ast::Expr;
use dl2::checker::check_program;
use dl2::corpus::{self, Outcome as CorpusOutcome};
use dl2::explorer::{
    explore, fuzz, run, ExploreOptions, MonitorMode, Outcome, Policy, RunOptions, Schedule, ViolationKind,
};
use dl2::runtime::{EdgeKind, GraphMode};
use dl2::surface::{print_type_plain, render_symbol, Program, SourceProgram};

const EXIT_TYPE_ERROR: u8 = 1;
const EXIT_OOB: u8 = 2;
const EXIT_STUCK: u8 = 3;
const EXIT_ENTANGLED: u8 = 4;
const EXIT_INCONCLUSIVE: u8 = 5;
const EXIT_USAGE: u8 = 64;
const EXIT_NO_INPUT: u8 = 66;

#[derive(Parser)]
#[command(name = "dl2", version, about = "Checker, interpreter and schedule explorer for dl2 programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cyclic,
    Standard,
}

impl From<Mode> for GraphMode {
    fn from(m: Mode) -> GraphMode {
        match m {
            Mode::Cyclic => GraphMode::Cyclic,
            Mode::Standard => GraphMode::Standard,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Monitor {
    Scan,
    Detect,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check a program and print the type of every definition.
    Check { file: PathBuf },
    /// Run a program under one random schedule.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        fuel: u64,
        #[arg(long, value_enum, default_value = "cyclic")]
        mode: Mode,
        #[arg(long, value_enum, default_value = "scan")]
        monitor: Monitor,
        /// Replay a schedule file written by --save-schedule or explore.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Write the per-step trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        save_schedule: Option<PathBuf>,
    },
    /// Run many seeded schedules and report entanglement.
    Fuzz {
        file: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 100_000)]
        fuel: u64,
        #[arg(long, value_enum, default_value = "cyclic")]
        mode: Mode,
        /// First seed; trial i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Enumerate every schedule up to a step bound.
    Explore {
        file: PathBuf,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, value_enum, default_value = "cyclic")]
        mode: Mode,
        #[arg(long, default_value_t = 1_000_000)]
        max_states: usize,
        /// Also step the other graph mode in lockstep and compare.
        #[arg(long)]
        compare_modes: bool,
    },
    /// Print the final computation graph of one run in DOT.
    Graph {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "cyclic")]
        mode: Mode,
    },
    /// Check every bundled program against its expectation.
    Corpus {
        /// Seeded runs per typed program and graph mode.
        #[arg(long, default_value_t = 50)]
        trials: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    ExitCode::from(match cli.command {
        Command::Check { file } => cmd_check(&file),
        Command::Run {
            file,
            seed,
            fuel,
            mode,
            monitor,
            replay,
            trace,
            save_schedule,
        } => {
            let monitor = match monitor {
                Monitor::Scan => MonitorMode::Scan,
                Monitor::Detect => MonitorMode::Detect,
            };
            let opts = RunOptions::new(mode.into()).fuel(fuel).monitor(monitor);
            cmd_run(&file, seed, opts, replay, trace, save_schedule)
        }
        Command::Fuzz {
            file,
            trials,
            fuel,
            mode,
            seed,
        } => cmd_fuzz(&file, trials, seed, RunOptions::new(mode.into()).fuel(fuel)),
        Command::Explore {
            file,
            steps,
            mode,
            max_states,
            compare_modes,
        } => {
            let mut opts = ExploreOptions::new(steps, mode.into());
            opts.state_cap = max_states;
            opts.compare_modes = compare_modes;
            cmd_explore(&file, &opts)
        }
        Command::Graph { file, seed, mode } => cmd_graph(&file, seed, mode.into()),
        Command::Corpus { trials } => cmd_corpus(trials),
    })
}

fn read(path: &PathBuf) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_NO_INPUT
    })
}

fn load_source(path: &PathBuf) -> Result<(SourceProgram, Program), u8> {
    let text = read(path)?;
    let name = path.display().to_string();
    SourceProgram::parse_file(&name, &text)
        .and_then(|s| s.elaborate().map(|p| (s, p)))
        .map_err(|d| {
            eprintln!("{d}");
            EXIT_TYPE_ERROR
        })
}

fn load(path: &PathBuf) -> Result<Program, u8> {
    load_source(path).map(|(_, p)| p)
}

/// Loads a program for execution. Ill-typed programs still run, with a
/// warning, since observing them is the point of the monitor.
fn load_runnable(path: &PathBuf) -> Result<Expr, u8> {
    let p = load(path)?;
    if let Err(e) = check_program(&p) {
        eprintln!("warning: running an ill-typed program: {}", e.to_diagnostic(p.file.as_deref()));
    }
    Ok(p.erased())
}

fn cmd_check(path: &PathBuf) -> u8 {
    let (src, p) = match load_source(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let show = |t| print_type_plain(&src.fold_aliases(t));
    match check_program(&p) {
        Ok(types) => {
            for (name, t) in &types.decls {
                println!("{} : {}", render_symbol(name), show(t));
            }
            println!("main : {}", show(&types.main));
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_diagnostic(p.file.as_deref()));
            EXIT_TYPE_ERROR
        }
    }
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), u8> {
    std::fs::write(path, text).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        EXIT_NO_INPUT
    })
}

fn cmd_run(
    path: &PathBuf,
    seed: u64,
    opts: RunOptions,
    replay: Option<PathBuf>,
    trace: Option<PathBuf>,
    save_schedule: Option<PathBuf>,
) -> u8 {
    let program = match load_runnable(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let policy = match replay {
        Some(f) => {
            let text = match read(&f) {
                Ok(t) => t,
                Err(code) => return code,
            };
            match serde_json::from_str::<Schedule>(text.trim()) {
                Ok(s) => Policy::Replay(s),
                Err(e) => {
                    eprintln!("error: {}: not a schedule: {e}", f.display());
                    return EXIT_USAGE;
                }
            }
        }
        None => Policy::Seeded(seed),
    };
    let report = run(&program, &policy, &opts);
    if let Some(t) = trace {
        if let Err(code) = write_file(&t, &report.trace_jsonl()) {
            return code;
        }
    }
    let schedule = serde_json::to_string(&report.schedule).expect("schedules serialize");
    if let Some(s) = save_schedule {
        if let Err(code) = write_file(&s, &schedule) {
            return code;
        }
    }
    println!("outcome: {}", report.outcome);
    println!("steps: {}", report.steps);
    if let Outcome::Final(v) = &report.outcome {
        if let Some(shown) = show_heap_value(&report.config, v) {
            println!("value: {shown}");
        }
    }
    if !report.all_safe {
        println!("unsafe configuration reached");
    }
    if let Some((step, witnesses)) = &report.first_violation {
        println!("entangled at step {step}");
        for w in witnesses {
            println!("  {w}");
        }
        println!("schedule: {schedule}");
        return EXIT_ENTANGLED;
    }
    match report.outcome {
        Outcome::Final(_) => 0,
        Outcome::OobStuck => EXIT_OOB,
        Outcome::HardStuck(_) => EXIT_STUCK,
        Outcome::EntanglementDetected => EXIT_ENTANGLED,
        Outcome::FuelExhausted | Outcome::ScheduleEnd => EXIT_INCONCLUSIVE,
        Outcome::InvalidChoice { .. } => EXIT_USAGE,
    }
}

/// Follows locations into the store, a few levels deep.
fn show_heap_value(cfg: &dl2::runtime::Configuration, v: &dl2::ast::Value) -> Option<String> {
    use dl2::ast::{Block, Value};
    fn go(cfg: &dl2::runtime::Configuration, v: &Value, depth: usize, out: &mut String) {
        match v {
            Value::Loc(l) if depth > 0 => match cfg.block(*l) {
                Some(Block::Array(vs)) => {
                    out.push('[');
                    for (i, x) in vs.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        go(cfg, x, depth - 1, out);
                    }
                    out.push(']');
                }
                Some(Block::Pair(a, b)) => {
                    out.push('(');
                    go(cfg, a, depth - 1, out);
                    out.push_str(", ");
                    go(cfg, b, depth - 1, out);
                    out.push(')');
                }
                Some(Block::Inj(side, x)) => {
                    let tag = if *side == dl2::ast::Side::Left { "inj1" } else { "inj2" };
                    let _ = write!(out, "{tag} ");
                    go(cfg, x, depth - 1, out);
                }
                _ => {
                    let _ = write!(out, "{v}");
                }
            },
            Value::Fold(x) => go(cfg, x, depth, out),
            _ => {
                let _ = write!(out, "{v}");
            }
        }
    }
    if v.as_loc().is_none() && !matches!(v, Value::Fold(_)) {
        return None;
    }
    let mut out = String::new();
    go(cfg, v, 12, &mut out);
    Some(out)
}

fn cmd_fuzz(path: &PathBuf, trials: u64, seed: u64, opts: RunOptions) -> u8 {
    let program = match load_runnable(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let s = fuzz(&program, trials, seed, &opts);
    println!(
        "trials: {}  final: {}  oob-stuck: {}  hard-stuck: {}  fuel-exhausted: {}",
        s.trials, s.finals, s.oob_stuck, s.hard_stuck, s.fuel_exhausted
    );
    println!(
        "entangled runs: {}  unsafe runs: {}  distinct witnesses: {}",
        s.violations, s.unsafe_runs, s.distinct_witnesses
    );
    if s.violating_seeds.is_empty() && s.unsafe_runs == 0 {
        return 0;
    }
    let shown: Vec<String> = s.violating_seeds.iter().take(10).map(u64::to_string).collect();
    if !shown.is_empty() {
        println!("replay seeds: {}", shown.join(" "));
        println!(
            "replay with: dl2 run {} --mode {} --seed {}",
            path.display(),
            opts.mode,
            s.violating_seeds[0]
        );
    }
    EXIT_ENTANGLED
}

fn cmd_explore(path: &PathBuf, opts: &ExploreOptions) -> u8 {
    let program = match load_runnable(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let r = match explore(&program, opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INCONCLUSIVE;
        }
    };
    println!(
        "states: {}  transitions: {}  terminal: {}  cut off at {} steps: {}",
        r.states, r.transitions, r.terminals, opts.step_bound, r.truncated
    );
    println!("violations: {}", r.violations.len());
    for v in r.violations.iter().take(20) {
        let what = match &v.kind {
            ViolationKind::Entangled(ws) => ws.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("; "),
            ViolationKind::Unsafe(m) => format!("unsafe: {m}"),
        };
        println!("  {what}");
        println!("  schedule: {}", serde_json::to_string(&v.schedule).expect("schedules serialize"));
    }
    if opts.compare_modes {
        println!("mode disagreements: {}", r.disagreements.len());
        for d in r.disagreements.iter().take(5) {
            println!("  {} after {} steps", d.what, d.schedule.choices.len());
        }
    }
    if !r.violations.is_empty() || !r.disagreements.is_empty() {
        EXIT_ENTANGLED
    } else {
        0
    }
}

fn cmd_graph(path: &PathBuf, seed: u64, mode: GraphMode) -> u8 {
    let program = match load_runnable(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let r = run(&program, &Policy::Seeded(seed), &RunOptions::new(mode).record(false));
    let g = &r.config.graph;
    let mut out = String::new();
    let _ = writeln!(out, "digraph computation {{");
    let _ = writeln!(out, "  // {mode} mode, seed {seed}, {}", r.outcome);
    for t in g.vertices() {
        let _ = writeln!(out, "  {t} [label=\"{t}\"];");
    }
    for (a, b, kind) in g.edges() {
        match kind {
            EdgeKind::Fork => {
                let _ = writeln!(out, "  {a} -> {b};");
            }
            EdgeKind::Join => {
                let _ = writeln!(out, "  {a} -> {b} [color=red, style=dashed];");
            }
        }
    }
    out.push_str("}\n");
    print!("{out}");
    0
}

fn cmd_corpus(trials: u64) -> u8 {
    let mut failed = 0;
    for e in corpus::ENTRIES {
        let mut notes = Vec::new();
        if let CorpusOutcome::Unmet(m) = corpus::check_entry(e) {
            notes.push(m);
        }
        if let Ok(p) = e.program() {
            let program = p.erased();
            for mode in [GraphMode::Cyclic, GraphMode::Standard] {
                let s = fuzz(&program, trials, 0, &RunOptions::new(mode));
                let expect_entangled = e.name == "entangled";
                if expect_entangled && s.violations == 0 {
                    notes.push(format!("{mode}: no entanglement observed"));
                }
                if !expect_entangled && s.violations > 0 && e.is_typed() {
                    notes.push(format!("{mode}: entangled under seed {}", s.violating_seeds[0]));
                }
                if s.unsafe_runs > 0 || s.hard_stuck > 0 {
                    notes.push(format!("{mode}: {} unsafe runs", s.unsafe_runs.max(s.hard_stuck)));
                }
            }
        }
        if notes.is_empty() {
            println!("ok    {}", e.name);
        } else {
            failed += 1;
            println!("FAIL  {}: {}", e.name, notes.join("; "));
        }
    }
    println!("{} of {} entries met", corpus::ENTRIES.len() - failed, corpus::ENTRIES.len());
    if failed == 0 {
        0
    } else {
        1
    }
}
