//! `activity-sos`: validate, explore, simulate and compare activity models.
//!
//! Exit codes: 0 success, 1 domain failure (invalid model, failed
//! simulation check), 2 usage or I/O error.

use activity_sos::conformance::simulates;
use activity_sos::explorer::{explore, random_trace, ExploreOptions, Kripke, Mode};
use activity_sos::extensions::parse_profile;
use activity_sos::model::{parse_model, validate_model, Model};
use activity_sos::semantics::SemanticsProfile;
use activity_sos::state::Program;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "activity-sos", version, about = "Executable operational semantics for UML activity diagrams")]
struct Cli {
    /// JSON file supplying defaults for any of the long options.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model for well-formedness.
    Validate {
        model: PathBuf,
        #[arg(long, value_enum)]
        format: Option<TextOrJson>,
    },
    /// Explore the state space and emit it as JSON or DOT.
    Explore {
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// reduced | complete
        #[arg(long)]
        mode: Option<String>,
        /// Output file (standard output if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<GraphFormat>,
        /// Include the canonical form of every state in JSON output.
        #[arg(long)]
        dump_states: bool,
        /// Drop τ self-loops.
        #[arg(long)]
        collapse_tau: bool,
    },
    /// Print one random run.
    Simulate {
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<TextOrJson>,
    },
    /// Decide whether one profile simulates another on a model.
    Check {
        model: PathBuf,
        #[arg(long = "abstract")]
        abstract_profile: Option<String>,
        #[arg(long = "concrete")]
        concrete_profile: Option<String>,
        /// Treat τ, transfer and exeTime steps as internal.
        #[arg(long)]
        hide_tau: bool,
        #[arg(long)]
        timing: Option<PathBuf>,
        #[arg(long, env = "ACTIVITY_SOS_JOBS")]
        jobs: Option<usize>,
        #[arg(long)]
        max_states: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<TextOrJson>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Profile components joined by `,` or `+`: reference, exec-time,
    /// single-core, var1, var2.
    #[arg(long)]
    profile: Option<String>,
    /// JSON object mapping action ids to execution times.
    #[arg(long)]
    timing: Option<PathBuf>,
    #[arg(long, env = "ACTIVITY_SOS_JOBS")]
    jobs: Option<usize>,
    #[arg(long)]
    max_states: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum TextOrJson {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum GraphFormat {
    Json,
    Dot,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, message: msg.into() }
}

fn domain(msg: impl Into<String>) -> Failure {
    Failure { code: 1, message: msg.into() }
}

/// Defaults read from `--config`.
struct Config(Value);

impl Config {
    fn load(path: Option<&Path>) -> Result<Config, Failure> {
        let Some(path) = path else { return Ok(Config(json!({}))) };
        let text = read(path)?;
        let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        if !v.is_object() {
            return Err(usage(format!("{}: config must be a JSON object", path.display())));
        }
        Ok(Config(v))
    }

    fn str(&self, key: &str) -> Option<String> {
        self.0.get(key).and_then(Value::as_str).map(str::to_string)
    }

    fn num(&self, key: &str) -> Option<u64> {
        self.0.get(key).and_then(Value::as_u64)
    }

    fn flag(&self, key: &str) -> bool {
        self.0.get(key).and_then(Value::as_bool).unwrap_or(false)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    parse_model(&read(path)?).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    Program::new(&load_model(path)?).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn load_timing(path: Option<PathBuf>) -> Result<Option<BTreeMap<String, u32>>, Failure> {
    let Some(path) = path else { return Ok(None) };
    let text = read(&path)?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| usage(format!("{}: timing must map action ids to non-negative integers: {e}", path.display())))
}

fn profile(spec: &str, p: &Program, timing: Option<&BTreeMap<String, u32>>) -> Result<SemanticsProfile, Failure> {
    parse_profile(spec, p, timing).map_err(|e| usage(format!("profile `{spec}`: {e}")))
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn explore_with(p: &Program, prof: &SemanticsProfile, opts: &ExploreOptions) -> Result<Kripke, Failure> {
    explore(p, prof, opts).map_err(|e| domain(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Validate { model, format } => {
            let m = load_model(&model)?;
            let report = validate_model(&m);
            let json_out = format == Some(TextOrJson::Json) || cfg.str("format").as_deref() == Some("json");
            if json_out {
                let v = json!({"clean": report.is_clean(), "violations": report.violations});
                println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            } else if report.is_clean() {
                println!("{}: ok", model.display());
            } else {
                print!("{report}");
            }
            if report.is_clean() {
                Ok(())
            } else {
                Err(domain(format!("{}: {} violation(s)", model.display(), report.violations.len())))
            }
        }
        Command::Explore { model, run, mode, out, format, dump_states, collapse_tau } => {
            let p = load_program(&model)?;
            let timing = load_timing(run.timing.or(cfg.str("timing").map(PathBuf::from)))?;
            let spec = run.profile.or(cfg.str("profile")).unwrap_or_else(|| "reference".into());
            let prof = profile(&spec, &p, timing.as_ref())?;
            let mode: Mode = mode.or(cfg.str("mode")).unwrap_or_else(|| "reduced".into()).parse().map_err(usage)?;
            let opts = ExploreOptions {
                mode,
                max_states: run.max_states.or(cfg.num("max_states").map(|n| n as usize)),
                jobs: run.jobs.or(cfg.num("jobs").map(|n| n as usize)).unwrap_or_else(default_jobs),
                collapse_tau_loops: collapse_tau || cfg.flag("collapse_tau"),
            };
            let k = explore_with(&p, &prof, &opts)?;
            let dot = format == Some(GraphFormat::Dot)
                || (format.is_none() && cfg.str("format").as_deref() == Some("dot"))
                || (format.is_none() && out.as_ref().is_some_and(|o| o.extension().is_some_and(|e| e == "dot")));
            let text = if dot {
                k.to_dot()
            } else {
                let dump = dump_states || cfg.flag("dump_states");
                serde_json::to_string_pretty(&k.to_json(dump.then_some(&p))).expect("json") + "\n"
            };
            write_out(out.as_deref(), &text)?;
            if k.truncated {
                eprintln!("warning: state bound reached; structure is truncated");
            }
            Ok(())
        }
        Command::Simulate { model, run, seed, max_len, format } => {
            let p = load_program(&model)?;
            let timing = load_timing(run.timing.or(cfg.str("timing").map(PathBuf::from)))?;
            let spec = run.profile.or(cfg.str("profile")).unwrap_or_else(|| "reference".into());
            let prof = profile(&spec, &p, timing.as_ref())?;
            let seed = seed.or(cfg.num("seed")).unwrap_or(0);
            let max_len = max_len.or(cfg.num("max_len").map(|n| n as usize)).unwrap_or(100);
            let trace = random_trace(&p, &prof, seed, max_len).map_err(|e| domain(e.to_string()))?;
            if format == Some(TextOrJson::Json) || cfg.str("format").as_deref() == Some("json") {
                let steps: Vec<Value> = trace
                    .iter()
                    .map(|(l, s)| json!({"label": l.to_string(), "fingerprint": s.fingerprint(&p).0}))
                    .collect();
                println!("{}", serde_json::to_string_pretty(&json!({"seed": seed, "steps": steps})).expect("json"));
            } else {
                for (i, (l, s)) in trace.iter().enumerate() {
                    println!("{:>4} {} {}", i + 1, l, &s.fingerprint(&p).0[..12]);
                }
            }
            Ok(())
        }
        Command::Check { model, abstract_profile, concrete_profile, hide_tau, timing, jobs, max_states, format } => {
            let p = load_program(&model)?;
            let timing = load_timing(timing.or(cfg.str("timing").map(PathBuf::from)))?;
            let abs_spec = abstract_profile.or(cfg.str("abstract")).ok_or_else(|| usage("--abstract is required"))?;
            let con_spec = concrete_profile.or(cfg.str("concrete")).ok_or_else(|| usage("--concrete is required"))?;
            let abs = profile(&abs_spec, &p, timing.as_ref())?;
            let con = profile(&con_spec, &p, timing.as_ref())?;
            let opts = ExploreOptions {
                mode: Mode::Reduced,
                max_states: max_states.or(cfg.num("max_states").map(|n| n as usize)),
                jobs: jobs.or(cfg.num("jobs").map(|n| n as usize)).unwrap_or_else(default_jobs),
                collapse_tau_loops: false,
            };
            let ka = explore_with(&p, &abs, &opts)?;
            let kc = explore_with(&p, &con, &opts)?;
            let verdict = simulates(&ka, &kc, hide_tau || cfg.flag("hide_tau")).map_err(|e| usage(e.to_string()))?;
            if format == Some(TextOrJson::Json) || cfg.str("format").as_deref() == Some("json") {
                let mut v = verdict.to_json();
                v["abstract"] = json!(abs_spec);
                v["concrete"] = json!(con_spec);
                println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            } else {
                println!("{abs_spec} simulates {con_spec}: {verdict}");
            }
            if verdict.holds {
                Ok(())
            } else {
                Err(Failure { code: 1, message: String::new() })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
