//! `clognet`: validate, simulate, check and encode CLog-net projects.
//!
//! Projects are read from one or more `.clog` files (see `docs/dsl.md`);
//! `--catalog` and `--marking` name further files loaded after the net.
//! Exit status: 0 for ok or SAFE, 2 for UNSAFE, 1 for errors.

mod steps;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use clognet::dsl::{parse_project, Project};
use clognet::explore::{
    check_bounded, check_safety_with, classify_conservative, fk_cycle, parameterised_check, BoundCheck, CatalogBounds,
    CheckOutcome, ExplorationLimits, Property,
};
use clognet::mcmt::{check_document, encode};
use clognet::model::Value;
use clognet::net::{FreshPolicy, NetContext};

use steps::{parse_steps, StepValue};

#[derive(Parser, Debug)]
#[command(name = "clognet", version, about = "Catalog Petri nets: validation, simulation, safety checking and MCMT encoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a project; print every diagnostic.
    Validate(Input),
    /// Fire a scripted sequence of steps and print the markings.
    Simulate {
        #[command(flatten)]
        input: Input,
        /// Step file: one `transition var=value ...` per line.
        #[arg(long)]
        steps: PathBuf,
        #[arg(long, default_value = "canonical", value_parser = parse_policy)]
        fresh_policy: FreshPolicy,
    },
    /// Explicit-state safety check against the project's catalog.
    Check {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        limits: Limits,
        #[arg(long)]
        prop: Option<String>,
        #[arg(long, default_value = "canonical", value_parser = parse_policy)]
        fresh_policy: FreshPolicy,
        /// Write the structured report (with the witness, if any) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Safety check over every catalog of the schema up to the given size.
    Pcheck {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        limits: Limits,
        #[arg(long)]
        prop: Option<String>,
        /// Maximum number of facts per relation.
        #[arg(long, default_value_t = 2)]
        catalog_max_facts: usize,
        /// Pool values per type beyond the named constants.
        #[arg(long, default_value_t = 2)]
        pool: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate the net and a property into an MCMT input file.
    Encode {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        prop: Option<String>,
        /// Output file; the document goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report ν-variables, foreign-key cycles and, with `--bound`, boundedness.
    Classify {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        limits: Limits,
    },
}

#[derive(Args, Debug)]
struct Input {
    /// Net files (with includes); further files may hold catalog facts, markings and properties.
    #[arg(long, required = true, num_args = 1..)]
    net: Vec<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    marking: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct Limits {
    #[arg(long, default_value_t = 10)]
    depth: usize,
    #[arg(long, default_value_t = 5000)]
    max_states: usize,
    /// Token bound per place: exploration discards larger markings; `classify` checks it.
    #[arg(long)]
    bound: Option<usize>,
}

impl Limits {
    fn exploration(&self) -> ExplorationLimits {
        let l = ExplorationLimits::new(self.max_states, self.depth);
        match self.bound {
            Some(b) => l.with_token_bound(b),
            None => l,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

fn parse_policy(s: &str) -> Result<FreshPolicy, String> {
    match s.split_once(':') {
        None if s == "canonical" => Ok(FreshPolicy::Canonical),
        Some(("enumerate", n)) => match n.parse::<u32>() {
            Ok(n) if n > 0 => Ok(FreshPolicy::Enumerate(n)),
            _ => Err(format!("`{n}` is not a positive count")),
        },
        _ => Err("expected `canonical` or `enumerate:N`".into()),
    }
}

struct Output {
    stdout: String,
    status: u8,
}

impl Output {
    fn ok(stdout: String) -> Output {
        Output { stdout, status: 0 }
    }
}

fn pretty(j: &Json) -> String {
    serde_json::to_string_pretty(j).expect("json values serialize") + "\n"
}

fn load(input: &Input) -> Result<Project> {
    let mut paths = input.net.clone();
    paths.extend(input.catalog.iter().cloned());
    paths.extend(input.marking.iter().cloned());
    let p = parse_project(&paths).map_err(|r| anyhow!("cannot load project:\n{}", r.to_string().trim_end()))?;
    let report = p.validate();
    if report.has_errors() {
        bail!("invalid project:\n{}", report.to_string().trim_end());
    }
    Ok(p)
}

fn property<'a>(p: &'a Project, name: Option<&str>) -> Result<&'a Property> {
    let names = || p.properties.iter().map(|q| q.name.to_string()).collect::<Vec<_>>().join(", ");
    match name {
        Some(n) => p.property(n).ok_or_else(|| anyhow!("no property `{n}`; available: {}", names())),
        None if p.properties.len() == 1 => Ok(&p.properties[0]),
        None => bail!("choose a property with --prop; available: {}", names()),
    }
}

fn validate(input: &Input) -> Result<Output> {
    let mut paths = input.net.clone();
    paths.extend(input.catalog.iter().cloned());
    paths.extend(input.marking.iter().cloned());
    let report = match parse_project(&paths) {
        Ok(p) => p.validate(),
        Err(r) => r,
    };
    let stdout = match input.format {
        Format::Text if report.is_empty() => "ok: no diagnostics\n".to_string(),
        Format::Text => {
            let errors = report.errors().count();
            let warnings = report.warnings().count();
            format!("{report}{errors} error(s), {warnings} warning(s)\n")
        }
        Format::Structured => pretty(&json!({ "ok": !report.has_errors(), "diagnostics": report })),
    };
    Ok(Output { stdout, status: u8::from(report.has_errors()) })
}

fn simulate(input: &Input, steps_file: &PathBuf, policy: FreshPolicy) -> Result<Output> {
    let p = load(input)?;
    let src = std::fs::read_to_string(steps_file).with_context(|| format!("cannot read {}", steps_file.display()))?;
    let steps = parse_steps(&steps_file.display().to_string(), &src)?;
    let ctx = NetContext::new(&p.net, &p.catalog);
    let mut m = p.marking.clone();
    let mut text = format!("initial: {}\n", m.display(&p.net));
    let mut fired = Vec::new();
    for (k, step) in steps.iter().enumerate() {
        let at = format!("{}:{}", steps_file.display(), step.line);
        let tid = p.net.transition_id(&step.transition).ok_or_else(|| anyhow!("{at}: unknown transition `{}`", step.transition))?;
        let vars = p.net.transition(tid).binding_vars();
        let mut fixed = Vec::new();
        for (name, val) in &step.fixed {
            let var = vars
                .iter()
                .find(|v| v.name.as_str() == name)
                .ok_or_else(|| anyhow!("{at}: `{}` has no variable `{name}`", step.transition))?;
            let value = match val {
                StepValue::Named(s) => Value::named(var.ty, s.as_str()),
                StepValue::Pool(ty, i) if ty == var.ty.as_str() => Value::pool(var.ty, *i),
                StepValue::Pool(ty, _) => bail!("{at}: `{name}` has type `{}`, not `{ty}`", var.ty),
            };
            fixed.push((var.name, value));
        }
        let cands: Vec<_> = ctx
            .enabled(&m, tid, policy)
            .into_iter()
            .filter(|b| fixed.iter().all(|(n, v)| b.get(*n) == Some(*v)))
            .collect();
        let sigma = match cands.as_slice() {
            [one] => one.clone(),
            [] => bail!("{at}: `{}` is not enabled with the given values in {}", step.transition, m.display(&p.net)),
            many => {
                let shown: Vec<String> = many.iter().take(3).map(|b| b.to_string()).collect();
                bail!("{at}: {} bindings of `{}` match; fix more variables (e.g. {})", many.len(), step.transition, shown.join(", "))
            }
        };
        m = ctx.fire(&m, tid, &sigma)?;
        let _ = writeln!(text, "{}. {} {sigma}", k + 1, step.transition);
        let _ = writeln!(text, "   -> {}", m.display(&p.net));
        fired.push(json!({ "transition": step.transition, "binding": sigma, "marking": m.display(&p.net).to_string() }));
    }
    let stdout = match input.format {
        Format::Text => text,
        Format::Structured => pretty(&json!({ "initial": p.marking.display(&p.net).to_string(), "steps": fired })),
    };
    Ok(Output::ok(stdout))
}

fn verdict_output(input: &Input, p: &Project, psi: &Property, out: &CheckOutcome, file: Option<&PathBuf>) -> Result<Output> {
    let name = psi.name.as_str();
    let structured = out.to_json(&p.net, name);
    if let Some(f) = file {
        std::fs::write(f, pretty(&structured)).with_context(|| format!("cannot write {}", f.display()))?;
    }
    let stdout = match input.format {
        Format::Text => out.transcript(&p.net, name),
        Format::Structured => pretty(&structured),
    };
    Ok(Output { stdout, status: if out.verdict.is_unsafe() { 2 } else { 0 } })
}

fn classify(input: &Input, limits: &Limits) -> Result<Output> {
    let p = load(input)?;
    let report = classify_conservative(&p.net);
    let cycle = fk_cycle(&p.net.schema);
    let bound = match limits.bound {
        Some(b) => Some((b, check_bounded(&p.net, &p.marking, &p.catalog, b, &ExplorationLimits::new(limits.max_states, limits.depth))?)),
        None => None,
    };
    let stdout = match input.format {
        Format::Text => {
            let mut s = String::new();
            if report.is_conservative() {
                s.push_str("conservative: yes\n");
            } else {
                let _ = writeln!(s, "conservative: no ({} fresh-value occurrence(s))", report.occurrences.len());
                for o in &report.occurrences {
                    let _ = writeln!(s, "  {}: nu {} in {}[{}]", o.transition, o.var.name, o.place, o.position);
                }
            }
            match &cycle {
                None => s.push_str("foreign keys: acyclic\n"),
                Some(c) => {
                    let names: Vec<String> = c.iter().map(|r| r.to_string()).collect();
                    let _ = writeln!(s, "foreign keys: cyclic ({})", names.join(" -> "));
                }
            }
            match &bound {
                None => {}
                Some((b, BoundCheck::Bounded { states, exhausted: true })) => {
                    let _ = writeln!(s, "bound {b}: holds ({states} states, all explored)");
                }
                Some((b, BoundCheck::Bounded { states, exhausted: false })) => {
                    let _ = writeln!(s, "bound {b}: holds up to limits ({states} states)");
                }
                Some((b, BoundCheck::Violation { place, tokens, steps, .. })) => {
                    let _ = writeln!(s, "bound {b}: violated, {tokens} tokens in `{}` after {} step(s)", p.net.place(*place).name, steps.len());
                }
            }
            s
        }
        Format::Structured => {
            let occ: Vec<Json> = report
                .occurrences
                .iter()
                .map(|o| json!({ "transition": o.transition.as_str(), "place": o.place.as_str(), "position": o.position, "var": o.var.name.as_str() }))
                .collect();
            let cyc = cycle.map(|c| c.iter().map(|r| r.to_string()).collect::<Vec<_>>());
            let b = bound.map(|(b, r)| r.to_json(&p.net, b));
            pretty(&json!({ "conservative": report.is_conservative(), "fresh_occurrences": occ, "fk_cycle": cyc, "bound": b }))
        }
    };
    Ok(Output::ok(stdout))
}

fn encode_cmd(input: &Input, prop: Option<&str>, out: Option<&PathBuf>) -> Result<Output> {
    let p = load(input)?;
    let psi = property(&p, prop)?;
    let e = encode(&p.net, &p.marking, psi)?;
    let doc = e.document.render();
    let structure = check_document(&doc);
    if let Some(f) = out {
        std::fs::write(f, &doc).with_context(|| format!("cannot write {}", f.display()))?;
    }
    let stdout = match input.format {
        Format::Text => {
            let mut s = String::new();
            match out {
                Some(f) => {
                    let _ = writeln!(s, "wrote {} ({} lines, {} transition statements)", f.display(), doc.lines().count(), e.document.transitions().count());
                }
                None => s.push_str(&doc),
            }
            for d in &e.diagnostics {
                eprintln!("{d}");
            }
            for err in &structure {
                eprintln!("structure: {err}");
            }
            s
        }
        Format::Structured => {
            let budgets: Vec<Json> = e
                .budgets
                .iter()
                .map(|(t, b)| json!({ "transition": t, "existential": b.existential, "universal": b.universal, "exceeds_supported": b.exceeds_supported() }))
                .collect();
            let mut j = json!({
                "property": psi.name.as_str(),
                "budgets": budgets,
                "diagnostics": e.diagnostics,
                "structure_errors": structure.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            });
            match out {
                Some(f) => j["out"] = json!(f.display().to_string()),
                None => j["document"] = json!(doc),
            }
            pretty(&j)
        }
    };
    Ok(Output { stdout, status: u8::from(!structure.is_empty()) })
}

fn run(cli: Cli) -> Result<Output> {
    match &cli.command {
        Command::Validate(input) => validate(input),
        Command::Simulate { input, steps, fresh_policy } => simulate(input, steps, *fresh_policy),
        Command::Check { input, limits, prop, fresh_policy, out } => {
            let p = load(input)?;
            let psi = property(&p, prop.as_deref())?;
            let o = check_safety_with(&p.net, &p.marking, &p.catalog, psi, &limits.exploration(), *fresh_policy, true)?;
            verdict_output(input, &p, psi, &o, out.as_ref())
        }
        Command::Pcheck { input, limits, prop, catalog_max_facts, pool, out } => {
            let p = load(input)?;
            let psi = property(&p, prop.as_deref())?;
            let bounds = CatalogBounds::new(*catalog_max_facts, *pool);
            let o = parameterised_check(&p.net, &p.marking, psi, &p.net.schema, &bounds, &limits.exploration())?;
            verdict_output(input, &p, psi, &o, out.as_ref())
        }
        Command::Encode { input, prop, out } => encode_cmd(input, prop.as_deref(), out.as_ref()),
        Command::Classify { input, limits } => classify(input, limits),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(o) => {
            print!("{}", o.stdout);
            ExitCode::from(o.status)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
