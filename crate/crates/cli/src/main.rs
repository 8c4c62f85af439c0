//! `l22`: command-line front end for l22embed.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use l22embed::embed::{distortion, embed_case_dispatch, frechet_line, EmbedderConfig};
use l22embed::fixtures::{generate, FixtureKind, NoiseKind};
use l22embed::graph::{brute_force_phi, laplacian_spectrum, Graph};
use l22embed::io::{graph_to_string, parse_graph, parse_points, points_to_json};
use l22embed::metric::{check_l22, distances, PointSet};
use l22embed::rounding::sparsest_cut_pipeline;
use l22embed::sdp::{solve_gl_sdp, SdpOptions};
use l22embed::subspace::ssr;
use serde::Serialize;
use serde_json::{json, Value};

use output::{emit, CliError};

#[derive(Parser, Debug)]
#[command(
    name = "l22",
    version,
    about = "Line embeddings of l2-squared metrics and sparsest cut rounding"
)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Numerical tolerance for the SDP solver.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Print a readable table instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    /// Write the result here (atomically) instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Generate a fixture point set or graph.
    Gen(GenArgs),
    /// Check the l2-squared triangle inequalities and measure beta.
    Check(InputArgs),
    /// Subspace rank and spectrum of a point set.
    Ssr(SsrArgs),
    /// Embed a point set on the line.
    Embed(EmbedArgs),
    /// Distortion of the Fréchet map to a witness set.
    Distortion(DistortionArgs),
    /// Solve the sparsest-cut SDP relaxation of a graph.
    Sdp(InputArgs),
    /// Normalized Laplacian spectrum of a graph.
    Spectrum(InputArgs),
    /// Round a graph's SDP solution to a sparse cut.
    Cut(CutArgs),
    /// Exact sparsest cut by enumeration (n <= 20).
    Oracle(InputArgs),
}

#[derive(Args, Debug, Serialize)]
struct InputArgs {
    /// Input file (points: JSON or CSV; graphs: edge list).
    #[arg(short, long)]
    input: PathBuf,
    /// Include bulky fields.
    #[arg(long)]
    full: bool,
}

#[derive(Args, Debug, Serialize)]
struct SsrArgs {
    #[command(flatten)]
    #[serde(flatten)]
    io: InputArgs,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
}

#[derive(Args, Debug, Serialize)]
struct EmbedArgs {
    #[command(flatten)]
    #[serde(flatten)]
    io: InputArgs,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Smallest accepted beta for inputs that are only approximately l2-squared.
    #[arg(long, default_value_t = 0.5)]
    beta_floor: f64,
}

#[derive(Args, Debug, Serialize)]
struct DistortionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    io: InputArgs,
    /// Witness point indices (0-based), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    witness: Vec<usize>,
}

#[derive(Args, Debug, Serialize)]
struct CutArgs {
    #[command(flatten)]
    #[serde(flatten)]
    io: InputArgs,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GenKind {
    Hypercube,
    HypercubeSubset,
    ScaledHypercube,
    Simplex,
    Planted,
    Counterexample,
    Path,
    Cycle,
    Complete,
    TwoCliques,
    Gnp,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum NoiseArg {
    Gaussian,
    Binary,
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[arg(long)]
    kind: GenKind,
    /// Cube dimension, or ambient dimension for planted sets.
    #[arg(long)]
    dim: Option<usize>,
    /// Subset size, or clique size for two-cliques.
    #[arg(long)]
    size: Option<usize>,
    /// Per-axis scales of a scaled hypercube, comma separated.
    #[arg(long, value_delimiter = ',')]
    scales: Vec<f64>,
    /// Simplex size or graph order.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    noise_kind: NoiseArg,
    /// Number of planted points; defaults to every cube vertex.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, default_value_t = 0.9)]
    beta_floor: f64,
    #[arg(long, default_value_t = 100)]
    max_retries: usize,
    #[arg(long, default_value_t = 2)]
    copies: usize,
    /// Edge probability for gnp.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
}

enum Output {
    Json(Value),
    Text(String),
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this kind")))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Read(path.to_path_buf(), e))
}

fn read_points(path: &Path) -> Result<PointSet, CliError> {
    Ok(parse_points(&read(path)?)?)
}

fn read_graph(path: &Path) -> Result<Graph, CliError> {
    Ok(parse_graph(&read(path)?)?)
}

fn gen(a: &GenArgs, seed: u64) -> Result<Output, CliError> {
    let graph = match a.kind {
        GenKind::Path => Some(Graph::path(need(a.n, "n")?)?),
        GenKind::Cycle => Some(Graph::cycle(need(a.n, "n")?)?),
        GenKind::Complete => Some(Graph::complete(need(a.n, "n")?)?),
        GenKind::TwoCliques => Some(Graph::two_cliques(need(a.size, "size")?)?),
        GenKind::Gnp => Some(Graph::gnp(need(a.n, "n")?, a.p, seed)?),
        _ => None,
    };
    if let Some(g) = graph {
        return Ok(Output::Text(graph_to_string(&g)));
    }
    let kind = match a.kind {
        GenKind::Hypercube => FixtureKind::Hypercube {
            dim: need(a.dim, "dim")?,
        },
        GenKind::HypercubeSubset => FixtureKind::HypercubeSubset {
            dim: need(a.dim, "dim")?,
            size: need(a.size, "size")?,
        },
        GenKind::ScaledHypercube => FixtureKind::ScaledHypercube {
            scales: a.scales.clone(),
        },
        GenKind::Simplex => FixtureKind::Simplex { k: need(a.n, "n")? },
        GenKind::Planted => FixtureKind::PlantedLowRank {
            rank: need(a.rank, "rank")?,
            dim: need(a.dim, "dim")?,
            noise: a.noise,
            noise_kind: match a.noise_kind {
                NoiseArg::Gaussian => NoiseKind::Gaussian,
                NoiseArg::Binary => NoiseKind::Binary,
            },
            points: a.points,
            beta_floor: a.beta_floor,
            max_retries: a.max_retries,
        },
        GenKind::Counterexample => FixtureKind::Counterexample {
            dim: need(a.dim, "dim")?,
            copies: a.copies,
        },
        _ => unreachable!("graph kinds handled above"),
    };
    let fx = generate(&kind, seed)?;
    let mut v = points_to_json(&fx.points);
    if let Some(b) = fx.beta {
        v["beta"] = json!(b);
    }
    Ok(Output::Json(v))
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let seed = cli.seed;
    let out = match &cli.command {
        Command::Gen(a) => return gen(a, seed),
        Command::Check(a) => {
            let rep = check_l22(&distances(&read_points(&a.input)?));
            let mut v = serde_json::to_value(&rep)?;
            if !a.full {
                let shown: Vec<_> = rep.violating_triples.iter().take(20).collect();
                v["violating_triples"] = serde_json::to_value(shown)?;
            }
            v
        }
        Command::Ssr(a) => ssr(&read_points(&a.io.input)?, a.eta)?.to_json(a.io.full),
        Command::Embed(a) => {
            let mut cfg = EmbedderConfig::new(a.eta).with_seed(seed);
            cfg.beta_floor = a.beta_floor;
            embed_case_dispatch(&read_points(&a.io.input)?, &cfg)?.to_json(a.io.full)
        }
        Command::Distortion(a) => {
            let dm = distances(&read_points(&a.io.input)?);
            let emb = frechet_line(&dm, &a.witness)?;
            let rep = distortion(&dm, &emb)?;
            json!({ "witness": emb.witness, "values": emb.values, "report": rep })
        }
        Command::Sdp(a) => {
            let g = read_graph(&a.input)?;
            let sol = solve_gl_sdp(&g, &sdp_options(cli.tol))?;
            let mut v = json!({
                "phi_sdp": sol.objective,
                "converged": sol.converged,
                "iterations": sol.iterations,
                "rounds": sol.rounds,
                "active_constraints": sol.active_constraints,
                "residuals": sol.residuals,
            });
            if a.full {
                let dist: Vec<Vec<f64>> = sol
                    .dist
                    .matrix()
                    .row_iter()
                    .map(|r| r.iter().copied().collect())
                    .collect();
                v["dist"] = json!(dist);
                v["points"] = json!(sol.points.rows());
            }
            v
        }
        Command::Spectrum(a) => {
            let g = read_graph(&a.input)?;
            let spec = laplacian_spectrum(&g)?;
            let mut v = json!({ "lambda": spec.eigenvalues, "regular": g.is_regular() });
            if a.full {
                v["fiedler"] = json!(spec.fiedler());
            }
            v
        }
        Command::Cut(a) => {
            let g = read_graph(&a.io.input)?;
            let cfg = EmbedderConfig::new(a.eta).with_seed(seed);
            sparsest_cut_pipeline(&g, &cfg, &sdp_options(cli.tol))?.to_json()
        }
        Command::Oracle(a) => {
            let cut = brute_force_phi(&read_graph(&a.input)?)?;
            json!({ "phi": cut.sparsity, "cut": cut.side.iter().map(|v| v + 1).collect::<Vec<_>>() })
        }
    };
    Ok(Output::Json(out))
}

fn sdp_options(tol: f64) -> SdpOptions {
    SdpOptions {
        tol,
        ..SdpOptions::default()
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("L22_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("L22_THREADS must be a count, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads()
        .and_then(|()| run(&cli))
        .and_then(|out| {
            let meta = json!({
                "tool": "l22",
                "version": env!("CARGO_PKG_VERSION"),
                "seed": cli.seed,
                "tol": cli.tol,
                "config": serde_json::to_value(&cli.command)?,
            });
            emit(out_text(out, meta, cli.pretty)?, cli.output.as_deref())
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "detail": e.to_string() }));
            ExitCode::from(e.exit_code())
        }
    }
}

fn out_text(out: Output, meta: Value, pretty: bool) -> Result<String, CliError> {
    Ok(match out {
        Output::Text(t) => t,
        Output::Json(mut v) => {
            v["meta"] = meta;
            if pretty {
                output::table(&v)
            } else {
                let mut s = serde_json::to_string(&v)?;
                s.push('\n');
                s
            }
        }
    })
}
