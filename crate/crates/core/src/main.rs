use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sketchviz::bench::{load_suite, run_suite, BenchConfig};
use sketchviz::server::{self, DEFAULT_MAX_CONCURRENT};
use sketchviz::task::Task;

#[derive(Parser)]
#[command(version, about = "Synthesize wrangling and plotting scripts from a table and a visual sketch")]
struct Cli {
    /// More logging; repeat for debug output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize from a task file and write the ranked result document.
    Synth(SynthArgs),
    /// Run a benchmark suite directory and print the report.
    Bench(BenchArgs),
    /// Serve the HTTP API used by the sketching UI.
    Serve(ServeArgs),
}

#[derive(Args)]
struct SynthArgs {
    task: PathBuf,
    /// Seconds.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long = "max-stmts")]
    max_statements: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Result file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,10,60,600")]
    budgets: Vec<f64>,
    /// Sketch elements per element type; `all` uses the whole target.
    #[arg(long, value_delimiter = ',', default_value = "4", value_parser = parse_n)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    max_stmts: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 7878)]
    port: u16,
    #[arg(long, default_value_t = DEFAULT_MAX_CONCURRENT)]
    max_concurrent: usize,
    /// Bind on all interfaces instead of loopback.
    #[arg(long)]
    public: bool,
}

fn parse_n(s: &str) -> Result<usize, String> {
    if s == "all" {
        return Ok(usize::MAX);
    }
    s.parse::<usize>()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("expected a positive count or `all`, got `{s}`"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = if matches!(cli.cmd, Cmd::Serve(_)) { "info" } else { "warn" };
    let level = match cli.verbose {
        0 => quiet,
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match cli.cmd {
        Cmd::Synth(a) => synth(a),
        Cmd::Bench(a) => bench(a),
        Cmd::Serve(a) => serve(a),
    }
}

fn synth(a: SynthArgs) -> ExitCode {
    let mut task = match Task::load(&a.task) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", a.task.display());
            return ExitCode::from(1);
        }
    };
    let o = &mut task.options;
    o.budget = a.budget.unwrap_or(o.budget);
    o.top_k = a.top_k.unwrap_or(o.top_k);
    o.max_statements = a.max_statements.unwrap_or(o.max_statements);
    o.seed = a.seed.unwrap_or(o.seed);
    if let Err(e) = o.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let (solutions, doc) = task.run(None);
    let text = serde_json::to_string_pretty(&doc).expect("result serializes") + "\n";
    match &a.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    for (i, s) in solutions.iter().take(3).enumerate() {
        log::info!("#{} size {} {}", i + 1, s.size, s.viz);
    }
    if solutions.is_empty() {
        eprintln!("no solution within the budget");
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn bench(a: BenchArgs) -> ExitCode {
    let cases = match load_suite(&a.dir) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let mut cfg = BenchConfig {
        budgets: a.budgets,
        ns: a.n,
        seed: a.seed,
        ..BenchConfig::default()
    };
    cfg.synth.max_statements = a.max_stmts;
    let report = run_suite(&cases, &cfg);
    print!("{}", report.render_text().replace(&usize::MAX.to_string(), "all"));
    if let Some(p) = &a.json {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        if let Err(e) = std::fs::write(p, text + "\n") {
            eprintln!("error: {}: {e}", p.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::SUCCESS
}

fn serve(a: ServeArgs) -> ExitCode {
    let host = if a.public { [0, 0, 0, 0] } else { [127, 0, 0, 1] };
    let addr = std::net::SocketAddr::from((host, a.port));
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    match rt.block_on(server::serve(addr, a.max_concurrent)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {addr}: {e}");
            ExitCode::from(1)
        }
    }
}
