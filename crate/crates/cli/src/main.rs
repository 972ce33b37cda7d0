use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use holdclass::bounds::enumerate_classes_with;
use holdclass::census::{census_csv, census_sweep, CensusSpec, Family, CENSUS_HEADER};
use holdclass::estimate::{accumulate_stats, build_system, estimate_from_system, EstimateOptions, ThetaEstimate};
use holdclass::experiment::{run_experiment, write_outputs, ExperimentConfig};
use holdclass::graph::{self, Graph};
use holdclass::simulate::{random_initial_configuration, rng_from_seed, simulate};
use holdclass::{Configuration, Error, Estimator, Execution, Method, Model, ModelParams, StopRule, Trajectory};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Simulate contact processes on graphs and recover their rates from a single trajectory.
#[derive(Parser)]
#[command(name = "holdclass", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a contact network and write it as an edge list.
    GenerateGraph(GenerateGraphArgs),
    /// Simulate one exact trajectory and write it to a file.
    Simulate(SimulateArgs),
    /// Estimate (mu, beta, delta) from a trajectory; one CSV row per method on stdout.
    Estimate(EstimateArgs),
    /// Count holding classes exhaustively over random graph ensembles (CSV).
    EnumerateClasses(EnumerateArgs),
    /// Run a replicated estimation experiment from a TOML config.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateGraphArgs {
    /// Complete graph on N nodes.
    #[arg(long, value_name = "N", group = "kind")]
    complete: Option<usize>,
    /// Erdos-Renyi graph on N nodes (needs --p).
    #[arg(long, value_name = "N", group = "kind")]
    er: Option<usize>,
    /// Watts-Strogatz graph on N nodes (needs --nei and --rewire).
    #[arg(long, value_name = "N", group = "kind")]
    ws: Option<usize>,
    /// Path on N nodes.
    #[arg(long, value_name = "N", group = "kind")]
    path: Option<usize>,
    /// Star on N nodes (hub 0).
    #[arg(long, value_name = "N", group = "kind")]
    star: Option<usize>,
    /// The bundled IEEE 118-bus topology.
    #[arg(long, group = "kind")]
    ieee118: bool,
    /// Edge probability for --er.
    #[arg(long)]
    p: Option<f64>,
    /// Resample --er graphs until connected.
    #[arg(long)]
    connected: bool,
    /// Neighbors per side for --ws.
    #[arg(long)]
    nei: Option<usize>,
    /// Rewiring probability for --ws.
    #[arg(long)]
    rewire: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output edge-list file.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Edge-list file of the contact network.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value = "contact")]
    model: Model,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    delta: f64,
    /// Initial configuration as a 0/1 string (node 0 first); random if omitted.
    #[arg(long)]
    initial: Option<String>,
    /// Stop after M observed states (M - 1 jumps).
    #[arg(long, value_name = "M", group = "stop")]
    events: Option<usize>,
    /// Stop at time T.
    #[arg(long, value_name = "T", group = "stop")]
    time: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output trajectory file.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    trajectory: PathBuf,
    /// Model to fit; defaults to the model recorded in the trajectory.
    #[arg(long)]
    model: Option<Model>,
    #[arg(long, default_value = "mle")]
    estimator: Estimator,
    /// Comma-separated subset of wls,nnls,lad.
    #[arg(long, value_delimiter = ',', default_value = "wls,nnls,lad")]
    methods: Vec<Method>,
    /// Minimum departures for a class to enter the system.
    #[arg(long, default_value_t = 1)]
    n_min: u64,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Census a single edge-list graph instead of a random sweep.
    #[arg(long, conflicts_with_all = ["families", "n_min", "n_max", "graphs"])]
    graph: Option<PathBuf>,
    /// Comma-separated graph families: er, ws, complete.
    #[arg(long, value_delimiter = ',', default_value = "er,ws")]
    families: Vec<Family>,
    #[arg(long, default_value_t = 4)]
    n_min: usize,
    #[arg(long, default_value_t = 14)]
    n_max: usize,
    /// Random graphs per (family, n).
    #[arg(long, default_value_t = 50)]
    graphs: usize,
    #[arg(long, value_delimiter = ',', default_value = "contact,reversible")]
    models: Vec<Model>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest node count to enumerate.
    #[arg(long, default_value_t = holdclass::bounds::DEFAULT_ENUMERATION_CAP)]
    cap: usize,
    /// Write CSV here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for raw.csv and summary.csv.
    #[arg(long, short)]
    out: PathBuf,
    /// Run replications on one thread.
    #[arg(long)]
    sequential: bool,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_DATA
    }
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn usage(msg: &str) -> Error {
    Error::InvalidArgument(msg.to_string())
}

fn generate_graph(a: GenerateGraphArgs) -> Result<(), (u8, Error)> {
    let data = |e: Error| (EXIT_DATA, e);
    let g = if let Some(n) = a.complete {
        graph::generate_complete(n)
    } else if let Some(n) = a.er {
        let p = a.p.ok_or((EXIT_USAGE, usage("--er needs --p")))?;
        graph::generate_er(n, p, a.seed, a.connected)
    } else if let Some(n) = a.ws {
        let nei = a.nei.ok_or((EXIT_USAGE, usage("--ws needs --nei")))?;
        let rewire = a.rewire.ok_or((EXIT_USAGE, usage("--ws needs --rewire")))?;
        graph::generate_ws(n, nei, rewire, a.seed)
    } else if let Some(n) = a.path {
        graph::generate_path(n)
    } else if let Some(n) = a.star {
        graph::generate_star(n)
    } else if a.ieee118 {
        Ok(graph::ieee118())
    } else {
        return Err((EXIT_USAGE, usage("choose one of --complete, --er, --ws, --path, --star, --ieee118")));
    }
    .map_err(data)?;
    g.write_edgelist(&a.out).map_err(data)?;
    println!("n={} edges={} dmax={}", g.n(), g.edge_count(), g.max_degree());
    Ok(())
}

fn run_simulate(a: SimulateArgs) -> Result<(), (u8, Error)> {
    let data = |e: Error| (EXIT_DATA, e);
    let g = graph::load_edgelist(&a.graph).map_err(data)?;
    let params = ModelParams::new(a.model, a.mu, a.beta, a.delta).map_err(data)?;
    let x0 = match &a.initial {
        Some(bits) => Configuration::parse_bitstring(bits).map_err(data)?,
        None => {
            let mut rng = rng_from_seed(holdclass::par::derive_seed(a.seed, u64::MAX));
            random_initial_configuration(g.n(), &mut rng)
        }
    };
    let stop = match (a.events, a.time) {
        (Some(m), None) => StopRule::MaxEvents(m),
        (None, Some(t)) => StopRule::MaxTime(t),
        _ => return Err((EXIT_USAGE, usage("give exactly one of --events or --time"))),
    };
    let tr = simulate(&g, &params, &x0, stop, a.seed).map_err(|e| (exit_code(&e), e))?;
    tr.write(&a.out).map_err(data)?;
    eprintln!("events={} t_end={}", tr.events.len(), tr.t_end);
    Ok(())
}

const ESTIMATE_HEAD: &str = "method,estimator,model,n,m,b,rank";
const ESTIMATE_TAIL: &str = "mu_hat,beta_hat,delta_hat,residual_norm,dropped_classes,seed,status";

fn fmt_f(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

fn estimate_row(out: &mut String, e: &ThetaEstimate, seed: u64) {
    let theta: Vec<String> = e.theta.iter().map(|&v| fmt_f(v)).collect();
    let status = if e.converged { "ok" } else { "not_converged" };
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        e.method,
        e.estimator,
        e.model,
        e.n,
        e.m,
        e.b,
        e.rank,
        theta.join(","),
        fmt_f(e.recovered.mu),
        fmt_f(e.recovered.beta),
        e.recovered.delta.map(fmt_f).unwrap_or_default(),
        fmt_f(e.residual_norm),
        e.dropped_classes,
        seed,
        status
    );
}

fn run_estimate(a: EstimateArgs) -> Result<(), (u8, Error)> {
    let data = |e: Error| (EXIT_DATA, e);
    let g = graph::load_edgelist(&a.graph).map_err(data)?;
    let tr = Trajectory::read(&a.trajectory).map_err(data)?;
    let model = a.model.unwrap_or(tr.model);
    let b = holdclass::dynamics::theta_len(model, g.max_degree());
    let stats = accumulate_stats(&tr, &g, model).map_err(data)?;

    let mut out = String::new();
    let theta_cols: Vec<String> = (0..b).map(|j| format!("theta_{j}")).collect();
    let _ = writeln!(out, "{ESTIMATE_HEAD},{},{ESTIMATE_TAIL}", theta_cols.join(","));
    let system = build_system(&stats, a.estimator, EstimateOptions { n_min: a.n_min });
    let mut failure: Option<Error> = None;
    for &method in &a.methods {
        let result = match &system {
            Ok(sys) => estimate_from_system(sys, model, a.estimator, g.n(), method),
            Err(e) => Err(Error::InvalidArgument(e.to_string())),
        };
        match result {
            Ok(e) => estimate_row(&mut out, &e, tr.seed),
            Err(e) => {
                let m = system.as_ref().map(|s| s.m()).unwrap_or(0);
                let status = format!("error: {e}").replace([',', '\n'], ";");
                let _ = writeln!(
                    out,
                    "{method},{},{model},{},{m},{b},,{},,,,,,{},{status}",
                    a.estimator,
                    g.n(),
                    vec![""; b].join(","),
                    tr.seed
                );
                if system.is_ok() {
                    failure = Some(e);
                }
            }
        }
    }
    print!("{out}");
    match system.err().or(failure) {
        Some(e) => Err((exit_code(&e), e)),
        None => Ok(()),
    }
}

fn run_enumerate(a: EnumerateArgs) -> Result<(), (u8, Error)> {
    let data = |e: Error| (EXIT_DATA, e);
    let csv = if let Some(path) = &a.graph {
        let g: Graph = graph::load_edgelist(path).map_err(data)?;
        let params = format!("file={}", path.display()).replace(',', ";");
        let mut csv = format!("{CENSUS_HEADER}\n");
        for &model in &a.models {
            let c = enumerate_classes_with(&g, model, a.cap, exec(a.sequential)).map_err(data)?;
            let _ = writeln!(
                csv,
                "{},{},file,{params},0,{},{},{},{},{}",
                c.n,
                c.model,
                g.edge_count(),
                c.dmax,
                c.k_exact,
                c.k_bound,
                c.ratio
            );
        }
        csv
    } else {
        if a.n_min > a.n_max {
            return Err((EXIT_USAGE, usage("--n-min exceeds --n-max")));
        }
        let spec = CensusSpec {
            families: a.families.clone(),
            n_values: (a.n_min..=a.n_max).collect(),
            graphs_per_n: a.graphs,
            models: a.models.clone(),
            seed: a.seed,
            cap: a.cap,
        };
        census_csv(&census_sweep(&spec, exec(a.sequential)).map_err(data)?)
    };
    match &a.out {
        Some(path) => std::fs::write(path, csv).map_err(|e| {
            (
                EXIT_DATA,
                Error::Io {
                    path: path.clone(),
                    source: e,
                },
            )
        }),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run_experiment_cmd(a: ExperimentArgs) -> Result<(), (u8, Error)> {
    let data = |e: Error| (EXIT_DATA, e);
    let cfg = ExperimentConfig::load(&a.config).map_err(data)?;
    let out = run_experiment(&cfg, exec(a.sequential)).map_err(data)?;
    write_outputs(&out, &a.out).map_err(data)?;
    let failures = out.raw.iter().filter(|r| r.estimate.is_none()).count();
    eprintln!("rows={} failures={} out={}", out.raw.len(), failures, a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::GenerateGraph(a) => generate_graph(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Estimate(a) => run_estimate(a),
        Command::EnumerateClasses(a) => run_enumerate(a),
        Command::Experiment(a) => run_experiment_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, e)) => {
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
