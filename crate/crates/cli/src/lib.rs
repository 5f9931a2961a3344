//! The `voforge` command line.
//!
//! Exit codes: 0 when the command succeeds with nothing to report, 1 when it
//! reports findings, violations, pending obligations in strict mode, a
//! refused evolution or a failed negotiation, and 2 for usage, I/O and parse
//! errors. Results go to standard output, diagnostics to standard error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use voforge_core::graph::{apply_evolution, expand, export_dot, DotStyle, EvolutionError, LabelledGraph, SessionLedger};
use voforge_core::lang::{parse_actions, parse_policies};
use voforge_core::model::{validate_business_configuration, validate_vbe, ComponentSpec, VoModule};
use voforge_core::runtime::{
    check_behaviour, format_value, simulate, validate_conversation, CheckMode, Script, Status, Trace, Verdict,
};
use voforge_core::sla::{joint_semiring, negotiate, vo_variables, SearchOptions, SlaError, DEFAULT_SEARCH_CAP};
use voforge_core::{load_bundle, render, typecheck, Finding, ModelBundle, ValidationReport};

pub const FORMAT_VERSION: u32 = 1;
pub const SEARCH_CAP_VAR: &str = "VOFORGE_SEARCH_CAP";

#[derive(Parser, Debug)]
#[command(name = "voforge", version, about = "Check, evolve and negotiate virtual-organisation models")]
struct Cli {
    /// Print structured JSON instead of lines.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate and type-check a bundle.
    Validate { bundle: PathBuf },
    /// Print the expanded graph of a configuration.
    Expand {
        bundle: PathBuf,
        #[arg(long)]
        config: String,
    },
    /// Write the expanded graph of a configuration as Graphviz DOT.
    ExportDot {
        bundle: PathBuf,
        #[arg(long)]
        config: String,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Style::Configuration)]
        style: Style,
    },
    /// Apply evolution actions to a configuration and print the new bundle.
    Evolve {
        bundle: PathBuf,
        #[arg(long)]
        config: String,
        #[arg(long)]
        action: PathBuf,
        /// Open sessions per VO; everything is quiescent when absent.
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a trace against a component specification.
    CheckTrace {
        bundle: PathBuf,
        #[arg(long)]
        spec: String,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, num_args = 0.., value_parser = sla_binding)]
        sla: Vec<(String, i64)>,
        /// Treat pending obligations as violations.
        #[arg(long)]
        strict: bool,
    },
    /// Generate a trace from a customer script.
    Simulate {
        bundle: PathBuf,
        #[arg(long)]
        vo: String,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, num_args = 0.., value_parser = sla_binding)]
        sla: Vec<(String, i64)>,
    },
    /// Find the best SLA between a VO's policy and customer preferences.
    Negotiate {
        bundle: PathBuf,
        #[arg(long)]
        vo: String,
        #[arg(long)]
        prefs: PathBuf,
        /// Bound on enumerated assignments; overrides the environment.
        #[arg(long)]
        search_cap: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Style {
    Module,
    Configuration,
}

fn sla_binding(s: &str) -> Result<(String, i64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, found `{s}`"))?;
    let v = v.parse().map_err(|_| format!("`{v}` is not an integer"))?;
    Ok((k.to_owned(), v))
}

/// How a command ends when it does not succeed.
enum Fail {
    /// Exit 1 with a diagnostic.
    Refused(String),
    /// Exit 2 with a diagnostic.
    Input(String),
}

type Outcome = Result<i32, Fail>;

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))
}

fn bundle(path: &Path) -> Result<ModelBundle, Fail> {
    load_bundle(path).map_err(|e| Fail::Input(e.to_string()))
}

fn write_file(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))
}

fn finding_json(f: &Finding) -> Json {
    json!({ "code": f.code.as_str(), "element": f.element.to_string(), "message": f.message })
}

fn report_json(r: &ValidationReport) -> Json {
    Json::Array(r.findings.iter().map(finding_json).collect())
}

fn verdict_json(v: &Verdict) -> Json {
    let (status, at) = match v.status {
        Status::Satisfied => ("satisfied", None),
        Status::Violated { at } => ("violated", Some(at)),
        Status::Pending => ("pending", None),
    };
    json!({ "formula": v.formula + 1, "status": status, "at": at, "events": v.witnesses })
}

fn graph_json(g: &LabelledGraph) -> Json {
    json!({
        "nodes": g.nodes.iter().map(|(id, n)| json!({ "id": id, "label": n.label, "kind": n.kind.as_str() })).collect::<Vec<_>>(),
        "edges": g.edges.iter().map(|(id, e)| json!({ "id": id, "from": e.ends.0, "to": e.ends.1, "label": e.label })).collect::<Vec<_>>(),
    })
}

struct Ctx<'a> {
    json: bool,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn emit(&mut self, plain: &str, structured: Json) {
        let _ = if self.json {
            let mut doc = json!({ "formatVersion": FORMAT_VERSION });
            if let (Json::Object(d), Json::Object(s)) = (&mut doc, structured) {
                d.extend(s);
            }
            writeln!(self.out, "{doc}")
        } else {
            write!(self.out, "{plain}")
        };
    }
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let mut ctx = Ctx { json: cli.json, out, err };
    match dispatch(cli.command, &mut ctx) {
        Ok(code) => code,
        Err(Fail::Refused(m)) => {
            let _ = writeln!(ctx.err, "error: {m}");
            1
        }
        Err(Fail::Input(m)) => {
            let _ = writeln!(ctx.err, "error: {m}");
            2
        }
    }
}

fn dispatch(cmd: Command, ctx: &mut Ctx<'_>) -> Outcome {
    match cmd {
        Command::Validate { bundle: path } => cmd_validate(&bundle(&path)?, ctx),
        Command::Expand { bundle: path, config } => {
            let g = expand(&bundle(&path)?, &config).map_err(|e| Fail::Input(e.to_string()))?;
            ctx.emit(&g.to_string(), json!({ "graph": graph_json(&g) }));
            Ok(0)
        }
        Command::ExportDot {
            bundle: path,
            config,
            output,
            style,
        } => {
            let g = expand(&bundle(&path)?, &config).map_err(|e| Fail::Input(e.to_string()))?;
            let style = match style {
                Style::Module => DotStyle::Module,
                Style::Configuration => DotStyle::Configuration,
            };
            let dot = export_dot(&g, &config, style);
            match output {
                Some(file) => {
                    write_file(&file, &dot)?;
                    ctx.emit("", json!({ "output": file.display().to_string() }));
                }
                None => ctx.emit(&dot, json!({ "dot": dot })),
            }
            Ok(0)
        }
        Command::Evolve {
            bundle: path,
            config,
            action,
            ledger,
            output,
        } => cmd_evolve(&bundle(&path)?, &config, &action, ledger.as_deref(), output.as_deref(), ctx),
        Command::CheckTrace {
            bundle: path,
            spec,
            trace,
            sla,
            strict,
        } => {
            let b = bundle(&path)?;
            let spec = b
                .spec(&spec)
                .ok_or_else(|| Fail::Input(format!("no component specification named `{spec}`")))?;
            let t = Trace::parse(&read(&trace)?).map_err(|e| Fail::Input(format!("{}: {e}", trace.display())))?;
            let mode = if strict { CheckMode::Strict } else { CheckMode::Lenient };
            cmd_check(spec, &t, &sla.into_iter().collect(), mode, ctx)
        }
        Command::Simulate {
            bundle: path,
            vo,
            script,
            seed,
            sla,
        } => {
            let b = bundle(&path)?;
            let (vo, spec) = vo_and_spec(&b, &vo)?;
            let s = Script::parse(&read(&script)?).map_err(|e| Fail::Input(format!("{}: {e}", script.display())))?;
            let t = simulate(vo, spec, &s, &sla.into_iter().collect(), seed).map_err(|e| Fail::Input(e.to_string()))?;
            let events: Vec<Json> = t
                .events
                .iter()
                .map(|e| {
                    let params: serde_json::Map<String, Json> =
                        e.params.iter().map(|(k, v)| (k.clone(), Json::String(format_value(v)))).collect();
                    json!({
                        "time": e.time.to_string(),
                        "session": e.session,
                        "event": format!("{}.{}{}", e.interaction, e.tag, e.direction.symbol()),
                        "params": params,
                    })
                })
                .collect();
            ctx.emit(&t.to_string(), json!({ "start": t.start, "events": events }));
            Ok(0)
        }
        Command::Negotiate {
            bundle: path,
            vo,
            prefs,
            search_cap,
        } => cmd_negotiate(&bundle(&path)?, &vo, &prefs, search_cap, ctx),
    }
}

fn vo_and_spec<'a>(b: &'a ModelBundle, vo: &str) -> Result<(&'a VoModule, &'a ComponentSpec), Fail> {
    let m = b
        .vo_module(vo)
        .ok_or_else(|| Fail::Input(format!("no VO module named `{vo}`")))?;
    let label = m
        .provides()
        .map(|n| n.label.as_str())
        .ok_or_else(|| Fail::Input(format!("VO `{vo}` has no provides node")))?;
    let spec = b
        .spec(label)
        .ok_or_else(|| Fail::Input(format!("no component specification named `{label}`")))?;
    Ok((m, spec))
}

fn cmd_validate(b: &ModelBundle, ctx: &mut Ctx<'_>) -> Outcome {
    let mut all = validate_vbe(&b.vbe, b);
    for bc in &b.configurations {
        all.merge(validate_business_configuration(bc, b));
    }
    all.merge(typecheck(b));
    let mut report = ValidationReport::new();
    for f in all.findings {
        if !report.findings.contains(&f) {
            report.findings.push(f);
        }
    }
    let plain = format!("{report}{} finding(s)\n", report.len());
    ctx.emit(&plain, json!({ "findings": report_json(&report) }));
    Ok(if report.is_clean() { 0 } else { 1 })
}

fn cmd_evolve(
    b: &ModelBundle,
    config: &str,
    action: &Path,
    ledger: Option<&Path>,
    output: Option<&Path>,
    ctx: &mut Ctx<'_>,
) -> Outcome {
    let mut bc = b
        .configuration(config)
        .cloned()
        .ok_or_else(|| Fail::Input(format!("no configuration named `{config}`")))?;
    let actions = parse_actions(&read(action)?).map_err(|e| Fail::Input(format!("{}: {e}", action.display())))?;
    let ledger = match ledger {
        Some(p) => SessionLedger::parse(&read(p)?).map_err(|e| Fail::Input(format!("{}: {e}", p.display())))?,
        None => SessionLedger::new(),
    };
    for a in &actions {
        let current = b.with_configuration(bc.clone());
        bc = match apply_evolution(&bc, a, &ledger, &current) {
            Ok(next) => next,
            Err(EvolutionError::ValidationFailed(r)) => {
                let _ = write!(ctx.err, "{r}");
                return Err(Fail::Refused("evolved configuration is invalid".into()));
            }
            Err(e @ EvolutionError::QuiescenceViolation { .. }) => {
                return Err(Fail::Refused(format!("QuiescenceViolation: {e}")));
            }
            Err(e) => return Err(Fail::Refused(e.to_string())),
        };
    }
    let text = render(&b.with_configuration(bc));
    match output {
        Some(file) => {
            write_file(file, &text)?;
            ctx.emit("", json!({ "output": file.display().to_string() }));
        }
        None => ctx.emit(&text, json!({ "bundle": text })),
    }
    Ok(0)
}

fn cmd_check(
    spec: &ComponentSpec,
    t: &Trace,
    sla: &BTreeMap<String, i64>,
    mode: CheckMode,
    ctx: &mut Ctx<'_>,
) -> Outcome {
    let report = validate_conversation(spec, t);
    let verdicts = check_behaviour(spec, t, sla, mode).map_err(|e| Fail::Input(e.to_string()))?;
    let mut plain = report.to_string();
    for v in &verdicts {
        plain.push_str(&format!("{v}\n"));
    }
    let bad = verdicts.iter().filter(|v| matches!(v.status, Status::Violated { .. })).count();
    let pending = verdicts.iter().filter(|v| v.status == Status::Pending).count();
    plain.push_str(&format!(
        "{} finding(s), {bad} violated, {pending} pending\n",
        report.len()
    ));
    ctx.emit(
        &plain,
        json!({
            "findings": report_json(&report),
            "verdicts": verdicts.iter().map(verdict_json).collect::<Vec<_>>(),
        }),
    );
    Ok(if report.is_clean() && bad == 0 { 0 } else { 1 })
}

fn search_cap(flag: Option<u64>) -> Result<u64, Fail> {
    let cap = match (flag, std::env::var(SEARCH_CAP_VAR)) {
        (Some(c), _) => c,
        (None, Ok(v)) => v
            .trim()
            .parse()
            .map_err(|_| Fail::Input(format!("{SEARCH_CAP_VAR}=`{v}` is not a positive integer")))?,
        (None, Err(_)) => DEFAULT_SEARCH_CAP,
    };
    if cap == 0 {
        return Err(Fail::Input("the search cap must be positive".into()));
    }
    Ok(cap)
}

fn cmd_negotiate(b: &ModelBundle, vo: &str, prefs: &Path, cap: Option<u64>, ctx: &mut Ctx<'_>) -> Outcome {
    let cap = search_cap(cap)?;
    let (m, _) = vo_and_spec(b, vo)?;
    let policy = m
        .external
        .constraints
        .iter()
        .map(|n| {
            b.constraint(n)
                .cloned()
                .ok_or_else(|| Fail::Input(format!("VO `{vo}` names unknown POLICY `{n}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let prefs = parse_policies(&read(prefs)?).map_err(|e| Fail::Input(format!("{}: {e}", prefs.display())))?;
    let semiring = joint_semiring(policy.iter().chain(&prefs))
        .ok_or_else(|| Fail::Input("policy and preferences mix the fuzzy and weighted semirings".into()))?;
    let vars = vo_variables(m, b).map_err(|e| Fail::Input(e.to_string()))?;
    let opts = SearchOptions {
        cap,
        ..SearchOptions::default()
    };
    match negotiate(&policy, &prefs, semiring, &vars, opts) {
        Ok(a) => {
            let mut plain = format!("agreement {semiring} {}\n", a.value);
            for (q, v) in &a.assignment {
                plain.push_str(&format!("{q} = {v}\n"));
            }
            let assignment: serde_json::Map<String, Json> =
                a.assignment.iter().map(|(q, v)| (q.to_string(), json!(v))).collect();
            ctx.emit(
                &plain,
                json!({
                    "agreement": true,
                    "semiring": semiring.name(),
                    "value": a.value.to_string(),
                    "assignment": assignment,
                }),
            );
            Ok(0)
        }
        Err(SlaError::NoAgreement) => {
            ctx.emit(
                "no agreement\n",
                json!({ "agreement": false, "semiring": semiring.name() }),
            );
            Ok(1)
        }
        Err(e) => Err(Fail::Input(e.to_string())),
    }
}
