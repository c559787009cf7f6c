use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use labelrefine::event_log::{parse_csv, write_csv, EventLog, Label};
use labelrefine::process_model::{discover_dfg, export_dot, prefix_closure, AcceptingPetriNet};
use labelrefine::refinement::{
    analyze_all, refine_iteratively, Decision, PipelineConfig, RefinementReport, Round,
};

use crate::args::{AnalyzeArgs, Cli, Command, ExportArgs, LogArgs, RefineArgs, ReplayArgs, TestNetArgs};
use crate::manifest::{default_manifest_path, FileRecord, RecordedCommand, RunManifest};
use crate::CliError;

const TOOL: &str = "labelrefine";
const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(a) => analyze(a, None).map(|_| ()),
        Command::Refine(a) => refine(a, None).map(|_| ()),
        Command::Export(a) => export(a),
        Command::TestNet(a) => test_net(a),
        Command::Replay(a) => replay(a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, contents: &[u8]) -> Result<FileRecord, CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(FileRecord::of(path, contents))
}

fn load_log(args: &LogArgs) -> Result<(EventLog, FileRecord), CliError> {
    let bytes = read(&args.log)?;
    let path = args.log.display().to_string();
    let events = parse_csv(bytes.as_slice(), &args.schema.csv_schema()).map_err(|source| CliError::Log {
        path: path.clone(),
        source,
    })?;
    if events.is_empty() {
        return Err(CliError::NoEvents(path));
    }
    Ok((EventLog::from_events(&events, args.schema.partition.into()), FileRecord::of(&args.log, &bytes)))
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

#[derive(Serialize)]
struct LogSummary {
    events: usize,
    traces: usize,
    labels: usize,
}

impl LogSummary {
    fn of(log: &EventLog) -> Self {
        Self {
            events: log.event_count(),
            traces: log.traces().len(),
            labels: log.alphabet().len(),
        }
    }
}

#[derive(Serialize)]
struct AnalysisDocument<'a> {
    tool: &'static str,
    version: &'static str,
    log: LogSummary,
    config: &'a PipelineConfig,
    reports: &'a [RefinementReport],
}

#[derive(Serialize)]
struct RefinementDocument<'a> {
    tool: &'static str,
    version: &'static str,
    log: LogSummary,
    refined_log: LogSummary,
    config: &'a PipelineConfig,
    applied: Vec<&'a Label>,
    rounds: &'a [Round],
}

fn print_summary(reports: &[RefinementReport]) {
    let width = reports.iter().map(|r| r.label.as_str().chars().count()).max().unwrap_or(5).max(5);
    println!("{:<width$}  {:>6}  {:>8}  {:>8}  {:>2}  {:>4}  decision", "label", "events", "rao U", "dip p", "k", "cf");
    for r in reports {
        let rao = r.rao.as_ref().map_or("-".into(), |t| format!("{:.1}", t.statistic));
        let dip = r.dip.as_ref().and_then(|t| t.p_value()).map_or("-".into(), |p| format!("{p:.4}"));
        let k = r.selection.as_ref().map_or("-".into(), |s| s.chosen_k.to_string());
        let cf = if r.control_flow.is_empty() { "-".into() } else { r.significant_activities.to_string() };
        let decision = match r.decision {
            Decision::Refined => format!("refined {}", r.refined_labels().iter().map(Label::as_str).collect::<Vec<_>>().join(", ")),
            Decision::Rejected(reason) => format!("rejected ({})", serde_json::to_value(reason).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()),
            Decision::Skipped => "skipped (too few events)".to_string(),
        };
        println!("{:<width$}  {:>6}  {rao:>8}  {dip:>8}  {k:>2}  {cf:>4}  {decision}", r.label.as_str(), r.n_events);
    }
}

fn finish_manifest(
    invocation: RecordedCommand,
    config: PipelineConfig,
    inputs: Vec<FileRecord>,
    outputs: Vec<FileRecord>,
    started_at: String,
    path: &Path,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        invocation,
        config,
        inputs,
        outputs,
        started_at,
        finished_at: now(),
    };
    write(path, &to_json(&manifest)?)?;
    Ok(())
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Runs the analysis; returns the written output records.
fn analyze(args: AnalyzeArgs, manifest_override: Option<&Path>) -> Result<Vec<FileRecord>, CliError> {
    let started_at = now();
    let config = args.pipeline.config()?;
    let (log, input) = load_log(&args.log)?;
    let reports = analyze_all(&log, &config)?;
    print_summary(&reports);
    let doc = AnalysisDocument {
        tool: TOOL,
        version: VERSION,
        log: LogSummary::of(&log),
        config: &config,
        reports: &reports,
    };
    let outputs = vec![write(&args.report, &to_json(&doc)?)?];
    if manifest_override.is_none() {
        let path = args.manifest.clone().unwrap_or_else(|| default_manifest_path(&args.report));
        finish_manifest(RecordedCommand::Analyze(args), config, vec![input], outputs.clone(), started_at, &path)?;
    }
    Ok(outputs)
}

fn refine(args: RefineArgs, manifest_override: Option<&Path>) -> Result<Vec<FileRecord>, CliError> {
    let started_at = now();
    let mut config = args.pipeline.config()?;
    config.max_rounds = if args.iterative { args.max_rounds } else { 1 };
    config.max_refinements_per_round = args
        .refinements_per_round
        .unwrap_or(if args.iterative { 1 } else { usize::MAX });
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if config.max_rounds == 0 {
        return Err(CliError::Config("max_rounds must be positive".into()));
    }
    let (log, input) = load_log(&args.log)?;
    let outcome = refine_iteratively(&log, &config)?;
    for round in &outcome.rounds {
        println!("round {}", round.round);
        print_summary(&round.reports);
    }
    let doc = RefinementDocument {
        tool: TOOL,
        version: VERSION,
        log: LogSummary::of(&log),
        refined_log: LogSummary::of(&outcome.log),
        config: &config,
        applied: outcome.rounds.iter().flat_map(|r| &r.applied).collect(),
        rounds: &outcome.rounds,
    };
    let mut csv = Vec::new();
    write_csv(&outcome.log, &mut csv, &args.log.schema.csv_schema()).map_err(|source| CliError::Log {
        path: args.out.display().to_string(),
        source,
    })?;
    let outputs = vec![write(&args.report, &to_json(&doc)?)?, write(&args.out, &csv)?];
    if manifest_override.is_none() {
        let path = args.manifest.clone().unwrap_or_else(|| default_manifest_path(&args.report));
        finish_manifest(RecordedCommand::Refine(args), config, vec![input], outputs.clone(), started_at, &path)?;
    }
    Ok(outputs)
}

fn export(args: ExportArgs) -> Result<(), CliError> {
    let dot = match (&args.net, &args.log) {
        (Some(net), _) => export_dot(&load_net(net)?),
        (None, Some(log)) => {
            let (log, _) = load_log(&LogArgs {
                log: log.clone(),
                schema: args.schema.clone(),
            })?;
            export_dot(&discover_dfg(&log))
        }
        (None, None) => return Err(CliError::Config("export needs --net or --log".into())),
    };
    match &args.out {
        Some(path) => {
            write(path, dot.as_bytes())?;
        }
        None => {
            let _ = std::io::stdout().write_all(dot.as_bytes());
        }
    }
    Ok(())
}

fn load_net(path: &Path) -> Result<AcceptingPetriNet, CliError> {
    let text = String::from_utf8_lossy(&read(path)?).into_owned();
    AcceptingPetriNet::parse(&text).map_err(|source| CliError::Net {
        path: path.display().to_string(),
        source,
    })
}

fn render_word(w: &[Label]) -> String {
    format!("<{}>", w.iter().map(Label::as_str).collect::<Vec<_>>().join(","))
}

fn test_net(args: TestNetArgs) -> Result<(), CliError> {
    let net = load_net(&args.net)?;
    let lang = net.language(args.max_len);
    println!(
        "language (length <= {}): {} words{}",
        args.max_len,
        lang.words.len(),
        if lang.complete { "" } else { " (partial: search budget exhausted)" }
    );
    for w in &lang.words {
        println!("  {}", render_word(w));
    }
    if args.prefixes {
        let closure = prefix_closure(&lang.words);
        println!("prefix closure: {} sequences", closure.len());
        for w in &closure {
            println!("  {}", render_word(w));
        }
    }
    for word in &args.word {
        let w: Vec<Label> = word
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(Label::from)
            .collect();
        let verdict = serde_json::to_value(net.accepts(&w))?;
        println!("{} {}", render_word(&w), verdict.as_str().unwrap_or_default());
    }
    Ok(())
}

fn replay(args: ReplayArgs) -> Result<(), CliError> {
    let manifest = RunManifest::load(&args.manifest)?;
    for input in &manifest.inputs {
        let now = FileRecord::of(&input.path, &read(&input.path)?);
        if now != *input {
            return Err(CliError::InputChanged(format!(
                "{} changed since the recorded run (fnv1a {} -> {})",
                input.path.display(),
                input.fnv1a,
                now.fnv1a
            )));
        }
    }
    let outputs = match manifest.invocation.clone() {
        RecordedCommand::Analyze(mut a) => {
            if let Some(r) = &args.report {
                a.report = r.clone();
            }
            analyze(a, Some(&args.manifest))?
        }
        RecordedCommand::Refine(mut a) => {
            if let Some(r) = &args.report {
                a.report = r.clone();
            }
            if let Some(o) = &args.out {
                a.out = o.clone();
            }
            refine(a, Some(&args.manifest))?
        }
    };
    let mut identical = true;
    for (old, new) in manifest.outputs.iter().zip(&outputs) {
        let same = old.fnv1a == new.fnv1a && old.bytes == new.bytes;
        identical &= same;
        println!(
            "{} {} (recorded {})",
            new.path.display(),
            if same { "reproduced" } else { "DIFFERS" },
            old.path.display()
        );
    }
    if !identical {
        return Err(CliError::ReplayMismatch);
    }
    Ok(())
}
