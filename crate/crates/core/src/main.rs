use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ligraph::inference::{verify_graph, Caps, LrOptions, VerifyConfig};
use ligraph::io::{
    export_dot, export_moral_dot, fixtures, parse_graph, parse_histories, parse_model, run_fixtures, to_sorted_json,
    to_sorted_json_pretty, write_histories, DotOptions,
};
use ligraph::likelihood::breakdown;
use ligraph::markov::{local_statements, pairwise_statements};
use ligraph::sim::{simulate_range, IntensityModel};
use ligraph::{
    active_trail_witness, delta_separated_moral, delta_separated_trail, minimal_separators, DynamicGraph, Query,
    VertexSet,
};

const EXIT_NOT_SEPARATED: u8 = 3;
const EXIT_FIXTURE_FAILURE: u8 = 4;

/// Local independence graphs for marked point processes.
#[derive(Parser)]
#[command(name = "ligraph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArg {
    /// Graph file: {"nodes": [...], "edges": [[from, to], ...], "absorbing": [...]}
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Model file: {"baselines": {...}, "multipliers": [...]}
    #[arg(long)]
    model: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Moral,
    Trail,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatementKind {
    Pairwise,
    Local,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Does C δ-separate A from B? Exit 0 if so, 3 if not.
    Separate {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        c: Vec<String>,
        #[arg(long, value_enum, default_value = "both")]
        method: Method,
        /// Print an active allowed trail when not separated.
        #[arg(long)]
        witness: bool,
    },
    /// Inclusion-minimal δ-separators of A from B.
    Minsep {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<String>,
        /// Candidate vertices (default: all vertices outside A and B).
        #[arg(long, value_delimiter = ',')]
        within: Option<Vec<String>>,
    },
    /// Moral graph, optionally of An(S) after deleting edges out of B.
    Moralize {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_delimiter = ',')]
        ancestral_of: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        delete_out: Vec<String>,
    },
    /// Smallest ancestral set containing S.
    Ancestral {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<String>,
    },
    /// Statements of the pairwise and local Markov properties, one JSON per line.
    Markov {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_enum, default_value = "all")]
        kind: StatementKind,
    },
    /// Simulate histories as JSON Lines.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 1)]
        replicates: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Index of the first replicate (selects the random stream).
        #[arg(long, default_value_t = 0)]
        first: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Log-likelihood of each history, one JSON per line.
    Loglik {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        history: PathBuf,
        /// Evaluation time (default: each history's horizon).
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        per_mark: bool,
    },
    /// Likelihood-ratio audit of the independencies the graph implies.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Histories per test set.
        #[arg(long, default_value_t = 500)]
        replicates: usize,
        #[arg(long, default_value_t = 100)]
        test_sets: usize,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        cap: u32,
        #[arg(long, default_value_t = 0.0)]
        min_exposure: f64,
        #[arg(long, default_value_t = 1)]
        max_conditioning: usize,
    },
    /// Check every claim of the built-in example graphs with both routines.
    Fixtures {
        #[arg(long)]
        name: Option<String>,
    },
    /// Graphviz rendering of a graph or its moral graph.
    ExportDot {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        moral: bool,
        #[arg(long, default_value = "G")]
        name: String,
    },
}

/// Failure with its exit code.
struct Failure(u8, String);

fn usage(msg: impl ToString) -> Failure {
    Failure(1, msg.to_string())
}

fn input(msg: impl ToString) -> Failure {
    Failure(2, msg.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_graph(arg: &GraphArg) -> Result<DynamicGraph, Failure> {
    parse_graph(&read(&arg.graph)?).map_err(|e| input(format!("{}: {e}", arg.graph.display())))
}

fn load_model(args: &ModelArgs) -> Result<(DynamicGraph, IntensityModel), Failure> {
    let g = load_graph(&args.graph)?;
    let m = parse_model(&read(&args.model)?, &g).map_err(|e| input(format!("{}: {e}", args.model.display())))?;
    Ok((g, m))
}

fn set(g: &DynamicGraph, labels: &[String]) -> Result<VertexSet, Failure> {
    g.set_of(labels).map_err(usage)
}

fn run(cmd: Command) -> Result<(String, u8), Failure> {
    match cmd {
        Command::Separate { graph, a, b, c, method, witness } => {
            let g = load_graph(&graph)?;
            let q = Query::new(set(&g, &a)?, set(&g, &b)?, set(&g, &c)?);
            let moral = matches!(method, Method::Moral | Method::Both)
                .then(|| delta_separated_moral(&g, q))
                .transpose()
                .map_err(usage)?;
            let trail = matches!(method, Method::Trail | Method::Both)
                .then(|| delta_separated_trail(&g, q))
                .transpose()
                .map_err(usage)?;
            let separated = match (moral, trail) {
                (Some(m), Some(t)) if m != t => return Err(Failure(1, "routines disagree".into())),
                (Some(x), _) | (_, Some(x)) => x,
                (None, None) => unreachable!(),
            };
            let trail_text = if witness && !separated {
                active_trail_witness(&g, q).map_err(usage)?.map(|t| t.display(&g))
            } else {
                None
            };
            let out = json!({
                "a": g.set_labels(q.a), "b": g.set_labels(q.b), "c": g.set_labels(q.c),
                "separated": separated, "moral": moral, "trail": trail, "witness": trail_text,
            });
            Ok((to_sorted_json(&out), if separated { 0 } else { EXIT_NOT_SEPARATED }))
        }
        Command::Minsep { graph, a, b, within } => {
            let g = load_graph(&graph)?;
            let (a, b) = (set(&g, &a)?, set(&g, &b)?);
            let within = match within {
                Some(w) => set(&g, &w)?,
                None => g.vertices() - (a | b),
            };
            let seps = minimal_separators(&g, a, b, within).map_err(usage)?;
            let seps: Vec<Vec<String>> = seps.into_iter().map(|c| g.set_labels(c)).collect();
            Ok((to_sorted_json(&json!({ "separators": seps })), 0))
        }
        Command::Moralize { graph, ancestral_of, delete_out } => {
            let mut g = load_graph(&graph)?;
            if let Some(s) = ancestral_of {
                let an = g.ancestral_closure(set(&g, &s)?).map_err(usage)?;
                g = g.induced_subgraph(an).map_err(usage)?;
            }
            let b = set(&g, &delete_out)?;
            let u = g.delete_out_edges(b & g.vertices()).map_err(usage)?.moralize();
            let edges: Vec<_> = u
                .edges()
                .into_iter()
                .map(|(j, k)| json!({ "a": u.labels()[j], "b": u.labels()[k], "marriage": u.is_marriage_edge(j, k) }))
                .collect();
            let nodes: Vec<&str> = u.vertices().iter().map(|v| u.labels()[v].as_str()).collect();
            Ok((to_sorted_json(&json!({ "nodes": nodes, "edges": edges })), 0))
        }
        Command::Ancestral { graph, set: s } => {
            let g = load_graph(&graph)?;
            let an = g.ancestral_closure(set(&g, &s)?).map_err(usage)?;
            Ok((to_sorted_json(&json!({ "ancestral_closure": g.set_labels(an) })), 0))
        }
        Command::Markov { graph, kind } => {
            let g = load_graph(&graph)?;
            let mut st = Vec::new();
            if matches!(kind, StatementKind::Pairwise | StatementKind::All) {
                st.extend(pairwise_statements(&g));
            }
            if matches!(kind, StatementKind::Local | StatementKind::All) {
                st.extend(local_statements(&g));
            }
            let lines: Vec<String> = st.iter().map(|s| to_sorted_json(&s.to_record(&g))).collect();
            Ok((lines.join("\n"), 0))
        }
        Command::Simulate { model, horizon, replicates, seed, first, out } => {
            let (g, m) = load_model(&model)?;
            let hs = simulate_range(&g, &m, horizon, seed, first..first + replicates).map_err(usage)?;
            let text = write_histories(&g, &hs, Some(seed), first);
            match out {
                Some(p) => {
                    std::fs::write(&p, text).map_err(|e| input(format!("{}: {e}", p.display())))?;
                    Ok((String::new(), 0))
                }
                None => Ok((text.trim_end().to_string(), 0)),
            }
        }
        Command::Loglik { model, history, t, per_mark } => {
            let (g, m) = load_model(&model)?;
            let hs = parse_histories(&read(&history)?, &g).map_err(|e| input(format!("{}: {e}", history.display())))?;
            let mut lines = Vec::new();
            for (i, h) in hs.iter().enumerate() {
                let b = breakdown(&m, &g, h, t.unwrap_or(h.horizon())).map_err(usage)?;
                let v = if per_mark {
                    json!({ "history": i, "breakdown": b })
                } else {
                    json!({ "history": i, "t": b.t, "loglik": b.total })
                };
                lines.push(to_sorted_json(&v));
            }
            Ok((lines.join("\n"), 0))
        }
        Command::Verify { model, alpha, replicates, test_sets, horizon, seed, cap, min_exposure, max_conditioning } => {
            let (g, m) = load_model(&model)?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(usage("--alpha must lie in (0, 1)"));
            }
            let cfg = VerifyConfig {
                horizon,
                seed,
                histories_per_set: replicates,
                test_sets,
                alpha,
                caps: Caps::uniform(cap),
                lr: LrOptions { min_exposure },
                max_conditioning,
            };
            let report = verify_graph(&g, &m, &cfg).map_err(usage)?;
            Ok((to_sorted_json_pretty(&report), 0))
        }
        Command::Fixtures { name } => {
            let mut fx = fixtures();
            if let Some(n) = name {
                fx.retain(|f| f.name == n);
                if fx.is_empty() {
                    return Err(usage(format!("unknown fixture `{n}`")));
                }
            }
            let report = run_fixtures(&fx).map_err(usage)?;
            let code = if report.passed() { 0 } else { EXIT_FIXTURE_FAILURE };
            let v = json!({ "passed": report.passed(), "failures": report.failures(), "outcomes": report.outcomes });
            Ok((to_sorted_json_pretty(&v), code))
        }
        Command::ExportDot { graph, moral, name } => {
            let g = load_graph(&graph)?;
            let opts = DotOptions { name, ..DotOptions::default() };
            let dot = if moral { export_moral_dot(&g.moralize(), &opts) } else { export_dot(&g, &opts) };
            Ok((dot.trim_end().to_string(), 0))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("LIGRAPH_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(cli.command) {
        Ok((text, code)) => {
            if !text.is_empty() {
                println!("{text}");
            }
            ExitCode::from(code)
        }
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
