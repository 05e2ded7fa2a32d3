use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use belyi_core::bs_stats::{self, ExperimentConfig};
use belyi_core::ends::{self, EndsDescriptor, ExhaustionTree};
use belyi_core::holonomy::{enumerate_geodesics, geodesics_csv};
use belyi_core::spectral::{self, quadrature};
use belyi_core::unimodular::{self, BlockSystem, LabeledGraph, RootedGraph, RootedMeasure, ShiftMeasure, TransportFunction};
use belyi_core::{Budget, Multigraph, RibbonGraph};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "belyi", version, about = "Experiments on random Belyi surfaces")]
struct Cli {
    /// Node budget per enumeration, used when a config does not set one.
    #[arg(long, global = true, env = "BELYI_BUDGET")]
    budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random trivalent ribbon graph.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Topological and volume invariants of a ribbon graph.
    Invariants {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed geodesics up to a length radius, as CSV.
    Geodesics {
        input: PathBuf,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Circuit counts of the underlying multigraph, as CSV.
    Circuits {
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment described by a TOML or JSON config.
    Experiment {
        kind: Kind,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify an infinite-type surface from an exhaustion tree (or an ends
    /// descriptor with --descriptor).
    ClassifyEnds {
        input: PathBuf,
        #[arg(long)]
        descriptor: bool,
        /// Exhaustion depth; defaults to the tree height.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = ends::DEFAULT_STABILITY_DEPTHS)]
        stability: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact mass transport check on a finite labeled graph.
    MtpCheck {
        input: PathBuf,
        /// distance:K, degree-two or ones-to-zeros:R
        #[arg(long, default_value = "distance:1")]
        function: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reference values: exceptional thresholds, middle Betti limits and the
    /// heat trace of the hyperbolic plane.
    Reference {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Bs,
    Poisson,
    Spectral,
    Mtp,
}

enum Failure {
    Usage(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(msg.to_string())
}

type CmdResult<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct Provenance {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    seed: Option<u64>,
}

impl Provenance {
    fn new(config: &Value) -> Self {
        let bytes = serde_json::to_vec(config).expect("config serializes");
        Provenance {
            tool: "belyi",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: hex::encode(Sha256::digest(&bytes)),
            seed: config.get("seed").and_then(Value::as_u64),
        }
    }

    fn csv_header(&self) -> String {
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into());
        format!(
            "# tool={} version={}\n# config_sha256={}\n# seed={}\n",
            self.tool, self.version, self.config_sha256, seed
        )
    }
}

fn with_provenance(p: &Provenance, data: Value) -> Value {
    let mut out = serde_json::Map::new();
    out.insert("provenance".into(), serde_json::to_value(p).unwrap());
    match data {
        Value::Object(m) => out.extend(m),
        other => {
            out.insert("data".into(), other);
        }
    }
    Value::Object(out)
}

/// Writes through a temporary file in the target directory so readers never
/// see a partial file. Without a path the text goes to stdout.
fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("cannot create temporary file in {}", dir.display()))?;
            tmp.write_all(text.as_bytes())?;
            tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, p: &Provenance, data: Value) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(&with_provenance(p, data))?;
    s.push('\n');
    emit(out, &s)
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn sha256_hex(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

/// Parses a JSON document after dropping a top-level provenance key, so
/// files written by this tool read back unchanged.
fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<(T, String)> {
    let text = read(path)?;
    let mut v: Value = serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
    if let Value::Object(m) = &mut v {
        m.remove("provenance");
    }
    let parsed = serde_json::from_value(v).with_context(|| format!("cannot parse {}", path.display()))?;
    Ok((parsed, sha256_hex(&text)))
}

fn read_graph(path: &Path) -> anyhow::Result<(RibbonGraph, String)> {
    parse_json(path)
}

fn read_config(path: &Path) -> CmdResult<Value> {
    let text = read(path)?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    let v: Value = if is_json {
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid JSON config: {e}")))?
    } else {
        toml::from_str(&text).map_err(|e| usage(format!("invalid TOML config: {e}")))?
    };
    if !v.is_object() {
        return Err(usage("config must be a table of keys"));
    }
    Ok(v)
}

fn budget(cli_budget: Option<u64>) -> Budget {
    cli_budget.map(Budget::new).unwrap_or_default()
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct MtpExperiment {
    measure: ShiftMeasure,
    window: usize,
    samples: usize,
    seed: u64,
    /// Radius of the transport function sending mass from 1s to 0s.
    #[serde(default = "default_transport_radius")]
    radius: usize,
    blocks: Option<BlockSystem>,
}

fn default_transport_radius() -> usize {
    2
}

fn cmd_experiment(kind: Kind, config: &Path, seed: Option<u64>, cli_budget: Option<u64>, out: Option<&Path>) -> CmdResult<()> {
    let mut v = read_config(config)?;
    let m = v.as_object_mut().unwrap();
    if let Some(s) = seed {
        m.insert("seed".into(), json!(s));
    }
    if let Kind::Mtp = kind {
        let cfg: MtpExperiment = serde_json::from_value(v.clone()).map_err(|e| usage(format!("invalid config: {e}")))?;
        cfg.measure.validate().map_err(usage)?;
        if let Some(b) = &cfg.blocks {
            b.validate().map_err(usage)?;
        }
        let f = TransportFunction::ones_to_zeros(cfg.radius);
        let report =
            unimodular::shift_mtp_check(&cfg.measure, &f, cfg.window, cfg.samples, cfg.seed).map_err(usage)?;
        let reweighted = match cfg.blocks {
            Some(b) => Some(unimodular::reweight(&cfg.measure, b).map_err(usage)?.p_one),
            None => None,
        };
        let resolved = json!({ "kind": kind, "config": serde_json::to_value(&cfg).unwrap() });
        let p = Provenance { seed: Some(cfg.seed), ..Provenance::new(&resolved) };
        let data = json!({
            "report": report,
            "lattice_induced": unimodular::is_induced_from_lattice(&cfg.measure).map_err(usage)?,
            "reweighted_p_one": reweighted,
        });
        emit_json(out, &p, data)?;
        return Ok(());
    }
    if !m.contains_key("budget") {
        if let Some(b) = cli_budget {
            m.insert("budget".into(), json!(b));
        }
    }
    let cfg: ExperimentConfig = serde_json::from_value(v).map_err(|e| usage(format!("invalid config: {e}")))?;
    cfg.validate().map_err(usage)?;
    let resolved = json!({ "kind": kind, "config": serde_json::to_value(&cfg).unwrap() });
    let p = Provenance { seed: Some(cfg.seed), ..Provenance::new(&resolved) };
    let body = match kind {
        Kind::Bs => bs_stats::summary_csv(&cfg, &bs_stats::run_bs_experiment(&cfg).map_err(anyhow::Error::from)?),
        Kind::Poisson => bs_stats::poisson_csv(&bs_stats::circuit_poisson_test(&cfg).map_err(anyhow::Error::from)?),
        Kind::Spectral => {
            bs_stats::moments_csv(&bs_stats::spectral_moment_experiment(&cfg).map_err(anyhow::Error::from)?)
        }
        Kind::Mtp => unreachable!(),
    };
    emit(out, &(p.csv_header() + &body))?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphInput {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    labels: Option<Vec<u8>>,
    /// Fixed root; the graph is rooted uniformly when absent.
    #[serde(default)]
    root: Option<usize>,
}

fn transport_by_name(spec: &str) -> CmdResult<TransportFunction> {
    let (name, arg) = match spec.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (spec, None),
    };
    let int = |a: Option<&str>| -> CmdResult<usize> {
        a.ok_or_else(|| usage(format!("{name} needs an integer argument")))?
            .parse()
            .map_err(|_| usage(format!("bad argument in {spec}")))
    };
    match name {
        "distance" => Ok(TransportFunction::distance_indicator(int(arg)?)),
        "degree-two" => Ok(TransportFunction::to_degree_two_neighbours()),
        "ones-to-zeros" => Ok(TransportFunction::ones_to_zeros(int(arg)?)),
        _ => Err(usage(format!("unknown transport function {spec}"))),
    }
}

fn cmd_mtp_check(input: &Path, function: &str, out: Option<&Path>) -> CmdResult<()> {
    let f = transport_by_name(function)?;
    let (g, hash): (GraphInput, String) = parse_json(input)?;
    let graph = Multigraph::new(g.vertex_count, g.edges).map_err(usage)?;
    let labeled = match g.labels {
        Some(l) => LabeledGraph::new(graph, l).map_err(usage)?,
        None => LabeledGraph::unlabeled(graph),
    };
    let mu = match g.root {
        Some(root) => RootedMeasure::point_mass(RootedGraph { graph: labeled, root }),
        None => RootedMeasure::uniform_rooting(labeled),
    }
    .map_err(usage)?;
    let report = unimodular::mtp_check(&mu, &f).map_err(usage)?;
    let p = Provenance::new(&json!({ "command": "mtp-check", "input_sha256": hash, "function": function }));
    emit_json(out, &p, serde_json::to_value(report).unwrap())?;
    Ok(())
}

fn cmd_classify_ends(input: &Path, descriptor: bool, depth: Option<usize>, stability: usize, out: Option<&Path>) -> CmdResult<()> {
    let (reading, hash) = if descriptor {
        let (d, hash): (EndsDescriptor, String) = parse_json(input)?;
        (json!({ "descriptor": d, "stable": Value::Null }), hash)
    } else {
        let (t, hash): (ExhaustionTree, String) = parse_json(input)?;
        t.validate().map_err(usage)?;
        let depth = depth.unwrap_or_else(|| t.height().max(1));
        let r = t.descriptor(depth, stability).map_err(usage)?;
        (serde_json::to_value(r).unwrap(), hash)
    };
    let d: EndsDescriptor = serde_json::from_value(reading["descriptor"].clone()).unwrap();
    d.validate().map_err(usage)?;
    let admissibility = ends::check_irs_admissible(&d).map_err(usage)?;
    let classification = match ends::classify(&d) {
        Ok(t) => json!({ "type": t, "irs_realizable": t.is_irs_realizable() }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let p = Provenance::new(&json!({
        "command": "classify-ends",
        "input_sha256": hash,
        "descriptor_input": descriptor,
        "depth": depth,
        "stability": stability,
    }));
    let data = json!({ "reading": reading, "admissibility": admissibility, "classification": classification });
    emit_json(out, &p, data)?;
    Ok(())
}

fn cmd_reference(out: Option<&Path>) -> CmdResult<()> {
    let mut lambda = Vec::new();
    for d in 2..=6u32 {
        for p in (0..d).take_while(|p| 2 * p < d) {
            lambda.push(json!({ "d": d, "p": p, "lambda": spectral::lambda_exceptional(d, p).map_err(anyhow::Error::from)? }));
        }
    }
    let mut betti = Vec::new();
    for two_m in (2..=12u32).step_by(2) {
        betti.push(json!({ "two_m": two_m, "limit": spectral::middle_betti_limit(two_m).map_err(anyhow::Error::from)? }));
    }
    let mut heat = Vec::new();
    for t in [1e-3, 1e-2, 1e-1, 1.0, 10.0] {
        let gk = spectral::h2_plancherel_heat_trace(t).map_err(anyhow::Error::from)?;
        let de = quadrature::h2_heat_trace_double_exponential(t, 1e-12);
        heat.push(json!({ "t": t, "gauss_kronrod": gk, "double_exponential": de, "t_times_trace": t * gk }));
    }
    let p = Provenance::new(&json!({ "command": "reference" }));
    emit_json(out, &p, json!({ "lambda_exceptional": lambda, "middle_betti_limit": betti, "h2_heat_trace": heat }))?;
    Ok(())
}

fn run(cli: Cli) -> CmdResult<()> {
    let b = budget(cli.budget);
    match cli.command {
        Command::Sample { n, seed, out } => {
            if n == 0 {
                return Err(usage("--n must be at least 1"));
            }
            let g = RibbonGraph::sample(n, seed).map_err(usage)?;
            let p = Provenance::new(&json!({ "command": "sample", "n": n, "seed": seed }));
            emit_json(out.as_deref(), &p, serde_json::to_value(&g).unwrap())?;
        }
        Command::Invariants { input, out } => {
            let (g, hash) = read_graph(&input)?;
            let inv = g.surface_invariants().map_err(anyhow::Error::from)?;
            let p = Provenance::new(&json!({ "command": "invariants", "input_sha256": hash }));
            emit_json(out.as_deref(), &p, serde_json::to_value(inv).unwrap())?;
        }
        Command::Geodesics { input, radius, out } => {
            if !(radius > 0.0) || !radius.is_finite() {
                return Err(usage("--radius must be positive"));
            }
            let (g, hash) = read_graph(&input)?;
            let e = enumerate_geodesics(&g, radius, b).map_err(anyhow::Error::from)?;
            let p = Provenance::new(&json!({ "command": "geodesics", "input_sha256": hash, "radius": radius, "budget": b.max_nodes }));
            emit(out.as_deref(), &(p.csv_header() + &geodesics_csv(&e.geodesics)))?;
        }
        Command::Circuits { input, k_max, out } => {
            if k_max == 0 {
                return Err(usage("--k-max must be at least 1"));
            }
            let (g, hash) = read_graph(&input)?;
            let counts = g.count_circuits(k_max, b).map_err(anyhow::Error::from)?;
            let p = Provenance::new(&json!({ "command": "circuits", "input_sha256": hash, "k_max": k_max, "budget": b.max_nodes }));
            let mut body = String::from("k,count\n");
            for (i, c) in counts.iter().enumerate() {
                body.push_str(&format!("{},{}\n", i + 1, c));
            }
            emit(out.as_deref(), &(p.csv_header() + &body))?;
        }
        Command::Experiment { kind, config, seed, out } => cmd_experiment(kind, &config, seed, cli.budget, out.as_deref())?,
        Command::ClassifyEnds { input, descriptor, depth, stability, out } => {
            cmd_classify_ends(&input, descriptor, depth, stability, out.as_deref())?
        }
        Command::MtpCheck { input, function, out } => cmd_mtp_check(&input, &function, out.as_deref())?,
        Command::Reference { out } => cmd_reference(out.as_deref())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
