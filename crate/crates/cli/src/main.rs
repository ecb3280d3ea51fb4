//! `cioco`: validate, compose, project and check components from the command line.
//!
//! Exit codes: 0 pass/ok, 1 fail, 2 usage or structural error, 3 inconclusive or not
//! applicable.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use cioco_core::composition::{build_composed, SystemExpr};
use cioco_core::compositional::{check_theorem1, check_theorem2, CompositionalReport, Conclusion};
use cioco_core::format::{parse_component, render_dot, render_json, render_text, to_json_value};
use cioco_core::fsm::{is_input_enabled, missing_inputs, traces_up_to, validate_component};
use cioco_core::generate::{theorem1_candidate, theorem2_candidate, GenConfig};
use cioco_core::projection::{component_in_context, component_in_context_tree};
use cioco_core::{check_cioco_bounded, check_cioco_exact, Component, Error, Guard, Label, Outcome, Verdict};

const OK: u8 = 0;
const FAIL: u8 = 1;
const STRUCTURAL: u8 = 2;
const INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(name = "cioco", version, about = "Compositional conformance checking for input/output state machines")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Cardinality guard for trace enumeration and bounded exploration.
    #[arg(long, global = true, default_value_t = Guard::default().0)]
    guard: usize,
    /// Seed for `compositional --random`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check component files for structural problems and report input-enabledness.
    Validate { paths: Vec<PathBuf> },
    /// Build the system described by an expression such as `(par M D)`.
    Compose {
        #[arg(long)]
        expr: String,
        /// Component files; leaves of the expression refer to component names.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Where to write the composed component; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Compose even when the operands do not synchronise in both directions.
        #[arg(long)]
        relax: bool,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Also write a DOT rendering.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// List the traces of a component up to a depth.
    Traces {
        path: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Decide `iut cioco spec`.
    Check {
        iut: PathBuf,
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = CheckMethod::Exact)]
        method: CheckMethod,
        /// Trace length bound for `--method bounded`.
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
    /// Compute a component in the context of a system.
    Project {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        target: String,
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Also build the history tree to this depth and compare traces.
        #[arg(long)]
        oracle_depth: Option<usize>,
    },
    /// Conclude a system verdict from checks on its two components.
    Compositional {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        theorem: u8,
        #[arg(long, required_unless_present = "random")]
        iut1: Option<PathBuf>,
        #[arg(long, required_unless_present = "random")]
        spec1: Option<PathBuf>,
        #[arg(long, required_unless_present = "random")]
        iut2: Option<PathBuf>,
        #[arg(long, required_unless_present = "random")]
        spec2: Option<PathBuf>,
        /// Use the generated instance for `--seed` instead of files.
        #[arg(long, conflicts_with_all = ["iut1", "spec1", "iut2", "spec2"])]
        random: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckMethod {
    Exact,
    Bounded,
}

/// A message for stderr and the exit code that goes with it.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotComposable { .. } => FAIL,
            _ => STRUCTURAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn structural(message: impl Into<String>) -> Failure {
    Failure {
        code: STRUCTURAL,
        message: message.into(),
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if cli.json {
                println!("{}", json!({ "error": f.message, "exit_code": f.code }));
            } else {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    let guard = Guard(cli.guard);
    match &cli.command {
        Command::Validate { paths } => validate(cli, paths),
        Command::Compose {
            expr,
            paths,
            out,
            relax,
            format,
            dot,
        } => compose(cli, expr, paths, out.as_deref(), *relax, *format, dot.as_deref()),
        Command::Traces { path, depth } => traces(cli, path, *depth, guard),
        Command::Check {
            iut,
            spec,
            method,
            depth,
        } => check(cli, iut, spec, *method, *depth, guard),
        Command::Project {
            expr,
            target,
            paths,
            out,
            format,
            oracle_depth,
        } => project(cli, expr, target, paths, out.as_deref(), *format, *oracle_depth, guard),
        Command::Compositional {
            theorem,
            iut1,
            spec1,
            iut2,
            spec2,
            random,
        } => {
            let quad = if *random {
                let cfg = GenConfig::default();
                let q = if *theorem == 1 {
                    theorem1_candidate(cli.seed, &cfg)
                } else {
                    theorem2_candidate(cli.seed, &cfg)
                };
                [q.iut1, q.spec1, q.iut2, q.spec2]
            } else {
                let load = |p: &Option<PathBuf>| load(p.as_deref().expect("required by clap"));
                [load(iut1)?, load(spec1)?, load(iut2)?, load(spec2)?]
            };
            compositional(cli, *theorem, quad)
        }
    }
}

fn load(path: &Path) -> Result<Component, Failure> {
    let src = fs::read_to_string(path).map_err(|e| structural(format!("{}: {e}", path.display())))?;
    parse_component(&src).map_err(|e| structural(format!("{}: {e}", path.display())))
}

fn load_all(paths: &[PathBuf]) -> Result<BTreeMap<String, Component>, Failure> {
    let mut out = BTreeMap::new();
    for p in paths {
        let c = load(p)?;
        if out.contains_key(&c.name) {
            return Err(structural(format!("{}: component name {} is already loaded", p.display(), c.name)));
        }
        out.insert(c.name.clone(), c);
    }
    Ok(out)
}

/// An explicit `--format` wins; otherwise a `.json` output path selects JSON.
fn wants_json(format: Option<Format>, out: Option<&Path>) -> bool {
    match format {
        Some(Format::Json) => true,
        Some(Format::Text) => false,
        None => out.is_some_and(|p| p.extension().is_some_and(|e| e == "json")),
    }
}

fn render(c: &Component, format: Option<Format>, out: Option<&Path>) -> String {
    if wants_json(format, out) {
        render_json(c) + "\n"
    } else {
        render_text(c)
    }
}

fn write_or_print(text: &str, out: Option<&Path>, quiet: bool) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| structural(format!("{}: {e}", p.display()))),
        None => {
            if !quiet {
                print!("{text}");
            }
            Ok(())
        }
    }
}

fn validate(cli: &Cli, paths: &[PathBuf]) -> CmdResult {
    let mut all_ok = true;
    let mut reports = Vec::new();
    for p in paths {
        let c = load(p)?;
        let report = validate_component(&c);
        all_ok &= report.ok;
        let enabled = is_input_enabled(&c);
        if cli.json {
            reports.push(json!({
                "path": p.display().to_string(),
                "component": c.name,
                "ok": report.ok,
                "issues": report.issues,
                "input_enabled": enabled,
                "missing_inputs": missing_inputs(&c),
            }));
        } else {
            let status = if report.ok { "ok" } else { "INVALID" };
            let enabled = if enabled { "input-enabled" } else { "not input-enabled" };
            println!("{} ({}): {status}, {enabled}", c.name, p.display());
            for issue in &report.issues {
                println!("  {:?}: {}", issue.severity, issue.message);
            }
        }
    }
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&reports).unwrap());
    }
    Ok(if all_ok { OK } else { FAIL })
}

fn compose(
    cli: &Cli,
    expr: &str,
    paths: &[PathBuf],
    out: Option<&Path>,
    relax: bool,
    format: Option<Format>,
    dot: Option<&Path>,
) -> CmdResult {
    let loaded = load_all(paths)?;
    let expr = SystemExpr::parse(expr, &loaded)?;
    let composed = build_composed(&expr, relax)?;
    let c = &composed.component;
    write_or_print(&render(c, format, out), out, cli.json)?;
    if let Some(d) = dot {
        fs::write(d, render_dot(c)).map_err(|e| structural(format!("{}: {e}", d.display())))?;
    }
    let relaxed: Vec<_> = composed.reports.iter().filter(|r| r.relaxed).collect();
    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "component": to_json_value(c),
                "reports": composed.reports,
            }))
            .unwrap()
        );
    } else {
        let mut log = String::new();
        for r in &composed.reports {
            let rep = &r.report;
            log += &format!(
                "{} {}: O1∩I2={} O2∩I1={} I1∩I2={} O1∩O2={}\n",
                r.path,
                r.expr,
                set(&rep.o1_cap_i2),
                set(&rep.o2_cap_i1),
                set(&rep.i1_cap_i2),
                set(&rep.o1_cap_o2)
            );
        }
        for r in &relaxed {
            log += &format!("warning: {} composed although one synchronisation direction is empty\n", r.expr);
        }
        log += &format!("{}: {} states, {} transitions\n", c.name, c.states.len(), c.transitions.len());
        if out.is_some() {
            print!("{log}");
        } else {
            eprint!("{log}");
        }
    }
    Ok(OK)
}

fn set(labels: &BTreeSet<Label>) -> String {
    let v: Vec<&str> = labels.iter().map(Label::as_str).collect();
    format!("{{{}}}", v.join(", "))
}

fn traces(cli: &Cli, path: &Path, depth: usize, guard: Guard) -> CmdResult {
    let c = load(path)?;
    let set = traces_up_to(&c, depth, guard)?;
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&set).unwrap());
    } else {
        for t in &set {
            println!("{t}");
        }
    }
    Ok(OK)
}

fn verdict_code(v: &Verdict) -> u8 {
    match v.result {
        Outcome::Pass => OK,
        Outcome::Fail => FAIL,
        Outcome::Inconclusive => INCONCLUSIVE,
    }
}

fn check(cli: &Cli, iut: &Path, spec: &Path, method: CheckMethod, depth: usize, guard: Guard) -> CmdResult {
    let (iut, spec) = (load(iut)?, load(spec)?);
    let v = match method {
        CheckMethod::Exact => check_cioco_exact(&iut, &spec)?,
        CheckMethod::Bounded => check_cioco_bounded(&iut, &spec, depth, guard)?,
    };
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&v.to_json()).unwrap());
    } else {
        println!("{} cioco {}: {v}", iut.name, spec.name);
        for w in &v.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(verdict_code(&v))
}

#[allow(clippy::too_many_arguments)]
fn project(
    cli: &Cli,
    expr: &str,
    target: &str,
    paths: &[PathBuf],
    out: Option<&Path>,
    format: Option<Format>,
    oracle_depth: Option<usize>,
    guard: Guard,
) -> CmdResult {
    let loaded = load_all(paths)?;
    let expr = SystemExpr::parse(expr, &loaded)?;
    let ctx = component_in_context(&expr, target)?;
    let c = &ctx.component;
    let text = if wants_json(format, out) {
        serde_json::to_string_pretty(&ctx.to_json()).unwrap() + "\n"
    } else {
        render_text(c)
    };
    write_or_print(&text, out, cli.json)?;

    let mut mismatch = None;
    if let Some(k) = oracle_depth {
        let tree = component_in_context_tree(&expr, target, k, guard)?.component;
        for d in 0..=k {
            if traces_up_to(c, d, guard)? != traces_up_to(&tree, d, guard)? {
                mismatch = Some(d);
                break;
            }
        }
    }
    let summary = match (oracle_depth, mismatch) {
        (None, _) => "oracle not run".to_string(),
        (Some(k), None) => format!("agrees with the history tree up to depth {k}"),
        (Some(_), Some(d)) => format!("DIFFERS from the history tree at depth {d}"),
    };
    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "context": ctx.to_json(),
                "oracle_depth": oracle_depth,
                "oracle_agrees": oracle_depth.map(|_| mismatch.is_none()),
            }))
            .unwrap()
        );
    } else {
        let line = format!("{}: {} states, {} transitions; {summary}", c.name, c.states.len(), c.transitions.len());
        if out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    Ok(if mismatch.is_some() { FAIL } else { OK })
}

fn conclusion_code(r: &CompositionalReport) -> u8 {
    match r.global_conclusion {
        Conclusion::SoundPass => OK,
        Conclusion::SoundFail => FAIL,
        Conclusion::NotApplicable => INCONCLUSIVE,
    }
}

fn compositional(cli: &Cli, theorem: u8, [iut1, spec1, iut2, spec2]: [Component; 4]) -> CmdResult {
    let report = if theorem == 1 {
        check_theorem1(&iut1, &spec1, &iut2, &spec2)?
    } else {
        check_theorem2(&iut1, &iut2, &spec1, &spec2)?
    };
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report.to_json()).unwrap());
    } else {
        print!("{report}");
        println!("  concluded by the strategy; the composed system was not checked directly");
    }
    Ok(conclusion_code(&report))
}
