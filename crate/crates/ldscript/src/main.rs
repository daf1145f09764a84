//! `ldscript` — check and run Linked Data consumption scripts.
//!
//! Exit codes: 0 success, 1 type error, 2 stuck run, 3 IO/fetch-fatal.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};

use ldscript::deref::{Dereferencer, FetchConfig};
use ldscript::interp::{
    run_script, ClockSource, RunConfig, RunStatus, SelectStrategy, SystemState,
};
use ldscript::nquads::serialize_nquads;
use ldscript::script::{check_script, infer_select_types, parse_script};
use ldscript::skolem::SkolemMinter;
use ldscript::store::QuadStore;
use ldscript::term::Node;
use ldscript::turtle::{parse_nquads, parse_turtle};
use ldscript::types::OntologyMap;
use ldscript::typing::{admit_triples, derive_ontology};

const EXIT_TYPE_ERROR: u8 = 1;
const EXIT_STUCK: u8 = 2;
const EXIT_FATAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ldscript",
    version,
    about = "Typed scripting engine for consuming Linked Data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Statically type-check a script.
    Check {
        /// Script file (.lds).
        file: PathBuf,
        #[command(flatten)]
        ontology: OntologyArgs,
    },
    /// Type-check and execute a script.
    Run {
        /// Script file (.lds).
        file: PathBuf,
        #[command(flatten)]
        ontology: OntologyArgs,
        /// Fixture directory with manifest.json (overrides LDSCRIPT_FIXTURES).
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Pass bound per iterate block.
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        max_iterations: u64,
        /// Binding strategy for select.
        #[arg(long, value_parser = ["first", "all"], default_value = "first")]
        select_strategy: String,
        /// Reduction bound for the whole run.
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        step_limit: u64,
        /// Write the final store as N-Quads.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Write the reduction trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Treat a failed dereference as fatal instead of recording it.
        #[arg(long)]
        strict_deref: bool,
        /// Freeze the engine clock (ISO dateTime), for reproducible runs.
        #[arg(long)]
        fixed_clock: Option<String>,
        /// Persist fetch records; known failures are skipped on later runs.
        #[arg(long)]
        fetch_records: Option<PathBuf>,
    },
    /// Load an N-Quads store dump and emit it canonically.
    DumpStore {
        /// N-Quads file.
        file: PathBuf,
        #[command(flatten)]
        ontology: OntologyArgs,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OntologyArgs {
    /// Ontology document (Turtle/N-Triples); repeatable, maps are merged.
    #[arg(long = "ontology")]
    paths: Vec<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match cli.command {
        Command::Check { file, ontology } => check_command(&file, &ontology),
        Command::Run {
            file,
            ontology,
            fixtures,
            max_iterations,
            select_strategy,
            step_limit,
            dump,
            trace,
            strict_deref,
            fixed_clock,
            fetch_records,
        } => run_command(RunArgs {
            file,
            ontology,
            fixtures,
            max_iterations: max_iterations as usize,
            select_strategy,
            step_limit: step_limit as usize,
            dump,
            trace,
            strict_deref,
            fixed_clock,
            fetch_records,
        }),
        Command::DumpStore {
            file,
            ontology,
            out,
        } => dump_store_command(&file, &ontology, out),
    }
}

/// Loads and merges ontology documents; conflicts are fatal.
fn load_ontology(args: &OntologyArgs) -> Result<OntologyMap, (u8, String)> {
    let mut merged = OntologyMap::new();
    for path in &args.paths {
        let text = std::fs::read_to_string(path)
            .map_err(|e| (EXIT_FATAL, format!("{}: {e}", path.display())))?;
        let outcome = parse_turtle(&text, &format!("file://{}", path.display()))
            .map_err(|e| (EXIT_FATAL, format!("{}:{e}", path.display())))?;
        let mut triples = Vec::new();
        for raw in &outcome.triples {
            let (Node::Term(s), Node::Term(p), Node::Term(o)) =
                (&raw.subject, &raw.predicate, &raw.object)
            else {
                // blank nodes carry no property-type information
                continue;
            };
            triples.push(ldscript::term::Triple::new(s.clone(), p.clone(), o.clone()));
        }
        let map = derive_ontology(&triples)
            .map_err(|e| (EXIT_TYPE_ERROR, format!("{}: {e}", path.display())))?;
        merged
            .merge(&map)
            .map_err(|e| (EXIT_TYPE_ERROR, format!("{}: {e}", path.display())))?;
    }
    Ok(merged)
}

/// Parse + infer + check; prints machine-parsable diagnostics.
fn load_checked_script(
    path: &Path,
    ont: &OntologyMap,
) -> Result<ldscript::script::Script, (u8, String)> {
    let file = path.display();
    let text = std::fs::read_to_string(path).map_err(|e| (EXIT_FATAL, format!("{file}: {e}")))?;
    let script = parse_script(&text).map_err(|e| {
        (
            EXIT_TYPE_ERROR,
            format!("{file}:{}:{}: error: {}", e.line(), e.col(), e.message),
        )
    })?;
    let script = infer_select_types(&script, ont)
        .map_err(|e| (EXIT_TYPE_ERROR, format!("{file}:1:1: error: {e}")))?;
    check_script(&script, ont).map_err(|e| {
        (
            EXIT_TYPE_ERROR,
            format!(
                "{file}:{}:{}: error: {e}",
                e.span.line.max(1),
                e.span.col.max(1)
            ),
        )
    })?;
    Ok(script)
}

fn check_command(file: &Path, ontology: &OntologyArgs) -> ExitCode {
    let ont = match load_ontology(ontology) {
        Ok(o) => o,
        Err((code, msg)) => return fail(code, &msg),
    };
    match load_checked_script(file, &ont) {
        Ok(_) => {
            println!("{}: ok", file.display());
            ExitCode::SUCCESS
        }
        Err((code, msg)) => fail(code, &msg),
    }
}

struct RunArgs {
    file: PathBuf,
    ontology: OntologyArgs,
    fixtures: Option<PathBuf>,
    max_iterations: usize,
    select_strategy: String,
    step_limit: usize,
    dump: Option<PathBuf>,
    trace: Option<PathBuf>,
    strict_deref: bool,
    fixed_clock: Option<String>,
    fetch_records: Option<PathBuf>,
}

fn run_command(args: RunArgs) -> ExitCode {
    let ont = match load_ontology(&args.ontology) {
        Ok(o) => o,
        Err((code, msg)) => return fail(code, &msg),
    };
    let script = match load_checked_script(&args.file, &ont) {
        Ok(s) => s,
        Err((code, msg)) => return fail(code, &msg),
    };

    let clock = match &args.fixed_clock {
        None => ClockSource::Real,
        Some(text) => match text.parse::<DateTime<Utc>>() {
            Ok(t) => ClockSource::Fixed(t),
            Err(e) => return fail(EXIT_FATAL, &format!("--fixed-clock: {e}")),
        },
    };
    let fixture_dir = args
        .fixtures
        .or_else(|| std::env::var_os("LDSCRIPT_FIXTURES").map(PathBuf::from));
    let fetch_cfg = FetchConfig {
        fixture_dir,
        ..FetchConfig::default()
    };
    let run_cfg = RunConfig {
        max_iterations: args.max_iterations,
        strategy: if args.select_strategy == "all" {
            SelectStrategy::All
        } else {
            SelectStrategy::First
        },
        step_limit: args.step_limit,
        strict_deref: args.strict_deref,
        clock,
    };

    // the skolem run id follows the clock so fixed-clock runs mint
    // identical URIs
    let run_id = clock.now().format("%Y%m%d%H%M%S").to_string();
    let minter = SkolemMinter::new(run_id);
    let mut deref = match Dereferencer::from_config(fetch_cfg, minter) {
        Ok(d) => d,
        Err(e) => return fail(EXIT_FATAL, &e.to_string()),
    };
    if let Some(path) = &args.fetch_records {
        if path.exists() {
            match deref.registry_mut().load_failures(path) {
                Ok(n) if n > 0 => eprintln!("seeded {n} known failure(s) from {}", path.display()),
                Ok(_) => {}
                Err(e) => return fail(EXIT_FATAL, &format!("{}: {e}", path.display())),
            }
        }
    }

    let mut state = SystemState::new(QuadStore::new(ont), deref);
    let status = match run_script(script, &mut state, &run_cfg) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_FATAL, &e.to_string()),
    };

    if let Some(path) = &args.trace {
        let text = state.trace.join("\n") + "\n";
        if let Err(e) = std::fs::write(path, text) {
            return fail(EXIT_FATAL, &format!("{}: {e}", path.display()));
        }
    }
    if let Some(path) = &args.dump {
        let quads: Vec<_> = state.store.iter().cloned().collect();
        if let Err(e) = std::fs::write(path, serialize_nquads(quads.iter())) {
            return fail(EXIT_FATAL, &format!("{}: {e}", path.display()));
        }
    }
    if let Some(path) = &args.fetch_records {
        if let Err(e) = state.deref.registry().save(path) {
            return fail(EXIT_FATAL, &format!("{}: {e}", path.display()));
        }
    }

    let graphs = state.store.graph_names().count();
    eprintln!(
        "{}: {} after {} step(s); store holds {} quad(s) in {} graph(s)",
        args.file.display(),
        match status {
            RunStatus::Done => "done",
            RunStatus::Stuck => "stuck",
            RunStatus::StepLimit => "step limit reached",
        },
        state.steps_taken(),
        state.store.len(),
        graphs,
    );
    match status {
        RunStatus::Done => ExitCode::SUCCESS,
        RunStatus::Stuck => ExitCode::from(EXIT_STUCK),
        RunStatus::StepLimit => ExitCode::from(EXIT_FATAL),
    }
}

fn dump_store_command(file: &Path, ontology: &OntologyArgs, out: Option<PathBuf>) -> ExitCode {
    let ont = match load_ontology(ontology) {
        Ok(o) => o,
        Err((code, msg)) => return fail(code, &msg),
    };
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_FATAL, &format!("{}: {e}", file.display())),
    };
    let quads = match parse_nquads(&text) {
        Ok(q) => q,
        Err(e) => return fail(EXIT_FATAL, &format!("{}:{e}", file.display())),
    };

    let mut store = QuadStore::new(ont);
    if ontology.paths.is_empty() {
        // no ontology given: trust the dump (it was admitted when fetched)
        store.insert_trusted(quads);
    } else {
        let mut by_graph: std::collections::BTreeMap<_, Vec<_>> = Default::default();
        for q in quads {
            let graph = q
                .graph
                .as_uri()
                .expect("nquads parser enforces URI graphs")
                .clone();
            by_graph.entry(graph).or_default().push(q.triple);
        }
        for (graph, triples) in by_graph {
            let (admitted, rejected) = admit_triples(&triples, store.ontology());
            for r in &rejected {
                eprintln!("{}: {r}", file.display());
            }
            if let Err(e) = store.insert_quads(&graph, &admitted) {
                return fail(EXIT_FATAL, &e.to_string());
            }
        }
    }

    let quads: Vec<_> = store.iter().cloned().collect();
    let bytes = serialize_nquads(quads.iter());
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, bytes) {
                return fail(EXIT_FATAL, &format!("{}: {e}", path.display()));
            }
        }
        None => {
            use std::io::Write;
            if std::io::stdout().write_all(&bytes).is_err() {
                return ExitCode::from(EXIT_FATAL);
            }
        }
    }
    ExitCode::SUCCESS
}

fn fail(code: u8, message: &str) -> ExitCode {
    eprintln!("{message}");
    ExitCode::from(code)
}
