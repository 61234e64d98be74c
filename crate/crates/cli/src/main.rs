mod config;
mod render;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hyperdimer::cluster::{covariance_identities, identity_estimators_mcmc, ClusterContext};
use hyperdimer::height::tiling_of;
use hyperdimer::io::{from_json, FixedBoundaryDoc, HeightFieldDoc, TilingDoc, WeightsDoc};
use hyperdimer::kasteleyn::verify_kasteleyn_capped;
use hyperdimer::regions::{FixedBoundary, DEFAULT_ENUMERATION_CAP};
use hyperdimer::sampler::{cftp_values, glauber_values, CftpOptions, Weights};
use hyperdimer::scalar::parse_ratio64;
use hyperdimer::tension::TensionEstimate;
use hyperdimer::{
    Dim, ExactWeights, HeightField, Region, RegionKind, Scalar, Slope, Vertex,
};
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(name = "hyperdimer", version, about = "Height functions and random tilings on the simplicial lattice")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// List every height function in Ω(R, b) as ndjson.
    Enumerate {
        #[command(flatten)]
        bc: BoundaryArgs,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
        /// Emit tilings instead of height functions.
        #[arg(long)]
        tilings: bool,
    },
    /// Count |Ω(R, b)| exactly.
    Count {
        #[command(flatten)]
        bc: BoundaryArgs,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
    },
    /// Compare the Cayley hyperdeterminant of the Kasteleyn hypermatrix with Z_w.
    KasteleynVerify {
        #[command(flatten)]
        bc: BoundaryArgs,
        #[arg(long, default_value_t = hyperdimer::kasteleyn::DEFAULT_HYPERDET_CAP)]
        hyperdet_cap: f64,
    },
    /// Draw samples by Glauber dynamics or coupling from the past, one field per line.
    Sample {
        #[command(flatten)]
        bc: BoundaryArgs,
        /// Number of independent chains, one output line each.
        #[arg(long, default_value_t = 1)]
        chains: u64,
        /// Heat-bath updates per chain after burn-in.
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        burnin: u64,
        /// Exact samples by coupling from the past.
        #[arg(long)]
        cftp: bool,
        /// Allow coupling from the past with non-uniform weights.
        #[arg(long)]
        weighted_experimental: bool,
        #[arg(long, default_value_t = 1 << 26)]
        max_steps: u64,
    },
    /// Level-set decompositions of sampled pairs, as CSV.
    SwapStats {
        #[command(flatten)]
        bc: BoundaryArgs,
        #[arg(long, default_value_t = 100)]
        pairs: u64,
        /// Glauber updates per sample when the weights are not uniform.
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        /// Also report d_LSD(0, x) for this point, in box coordinates.
        #[arg(long)]
        x: Option<String>,
    },
    /// Both sides of the variance or covariance identity.
    IdentityCheck {
        #[command(flatten)]
        bc: BoundaryArgs,
        /// Box coordinates of x.
        #[arg(long)]
        x: String,
        /// Box coordinates of y; defaults to x.
        #[arg(long)]
        y: Option<String>,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
        /// Estimate both sides from this many sample pairs instead of enumerating.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
    },
    /// Finite-volume surface tension σ_n(s) as CSV.
    Tension {
        /// Slope values on g_1 .. g_{d+1}, e.g. "1/2,-1/4,-1/4".
        #[arg(long, allow_hyphen_values = true)]
        slope: String,
        #[arg(long, default_value = "2,3,4")]
        n_list: String,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
    },
    /// Draw a d = 2 height function as a lozenge tiling in SVG.
    Render {
        /// A height function document; without it a uniform sample of the boundary
        /// condition is drawn.
        #[arg(long)]
        field: Option<PathBuf>,
        #[command(flatten)]
        bc: BoundaryArgs,
        /// Half-width of the drawn window in box coordinates.
        #[arg(long, default_value_t = 6)]
        radius: i64,
    },
}

#[derive(Args, Debug, Serialize, Clone)]
struct BoundaryArgs {
    /// A boundary-condition document; replaces the box flags.
    #[arg(long)]
    bc: Option<PathBuf>,
    #[arg(long, short = 'd')]
    d: Option<usize>,
    /// Box size.
    #[arg(long)]
    n: Option<i64>,
    /// box, closed_box or centred_box.
    #[arg(long, default_value = "box")]
    kind: String,
    /// Slope of the reference ⌊s + a⌋; zero by default.
    #[arg(long, allow_hyphen_values = true)]
    slope: Option<String>,
    /// Offset a of the reference.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    offset: String,
    /// An edge-weight document; uniform weights by default.
    #[arg(long)]
    weights: Option<PathBuf>,
}

fn read_doc<T: for<'de> serde::Deserialize<'de>>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_slope(text: &str) -> Result<Slope> {
    let values = text
        .split(',')
        .map(parse_ratio64)
        .collect::<hyperdimer::Result<Vec<_>>>()?;
    Ok(Slope::new(values)?)
}

fn parse_point(text: &str, dim: Dim) -> Result<Vertex> {
    let coords: Vec<i64> = text
        .split(',')
        .map(|s| s.trim().parse::<i64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| hyperdimer::Error::Invalid(format!("bad point {text:?}: {e}")))?;
    if coords.len() != dim.d() {
        return Err(hyperdimer::Error::LengthMismatch {
            expected: dim.d(),
            found: coords.len(),
        }
        .into());
    }
    Ok(Vertex::from_box_coords(&coords))
}

impl BoundaryArgs {
    fn load(&self) -> Result<(FixedBoundary, ExactWeights)> {
        let bc = match &self.bc {
            Some(path) => read_doc::<FixedBoundaryDoc>(path)?
                .to_boundary()
                .with_context(|| format!("in {}", path.display()))?,
            None => {
                let (Some(d), Some(n)) = (self.d, self.n) else {
                    return Err(hyperdimer::Error::Invalid("give --bc or both --d and --n".into()).into());
                };
                let dim = Dim::new(d)?;
                let kind = match self.kind.as_str() {
                    "box" => RegionKind::Box,
                    "closed_box" => RegionKind::ClosedBox,
                    "centred_box" => RegionKind::CentredBox,
                    other => {
                        return Err(hyperdimer::Error::Invalid(format!("unknown box kind {other:?}")).into())
                    }
                };
                let slope = match &self.slope {
                    Some(s) => parse_slope(s)?,
                    None => Slope::zero(dim),
                };
                if slope.dim() != dim {
                    return Err(hyperdimer::Error::LengthMismatch {
                        expected: dim.coords(),
                        found: slope.values().len(),
                    }
                    .into());
                }
                let reference = HeightField::floor_field(slope, parse_ratio64(&self.offset)?)?;
                FixedBoundary::new(Region::make_box(dim, kind, n)?, reference)?
            }
        };
        let weights = match &self.weights {
            Some(path) => read_doc::<WeightsDoc>(path)?
                .to_weights(bc.reference().dim())
                .with_context(|| format!("in {}", path.display()))?,
            None => ExactWeights::uniform(),
        };
        Ok((bc, weights))
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    d: Option<usize>,
    seed: u64,
    config: &'a Cli,
}

struct Output {
    out: Box<dyn Write>,
}

impl Output {
    fn open(cli: &Cli) -> Result<Self> {
        let out: Box<dyn Write> = match &cli.output {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(BufWriter::new(std::io::stdout().lock())),
        };
        Ok(Output { out })
    }

    fn line(&mut self, text: &str) -> Result<()> {
        writeln!(self.out, "{text}")?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        self.line(&serde_json::to_string(value)?)
    }
}

fn meta_json(cli: &Cli, d: Option<usize>) -> String {
    serde_json::to_string(&serde_json::json!({
        "meta": Meta {
            tool: "hyperdimer",
            version: env!("CARGO_PKG_VERSION"),
            d,
            seed: cli.seed,
            config: cli,
        }
    }))
    .expect("metadata serialises")
}

/// A check that ran but did not hold; reported with exit code 2.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "check failed: {}", self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Enumerate { bc, cap, tilings } => {
            let (bc, _) = bc.load()?;
            let all = bc.enumerate_capped(*cap)?;
            let mut out = Output::open(cli)?;
            out.line(&meta_json(cli, Some(bc.reference().dim().d())))?;
            for f in &all {
                if *tilings {
                    out.json(&TilingDoc::from_tiling(&tiling_of(f)?))?;
                } else {
                    out.json(&HeightFieldDoc::from_field(f))?;
                }
            }
        }
        Command::Count { bc, cap } => {
            let (bc, _) = bc.load()?;
            let count = bc.count_capped(*cap)?;
            let mut out = Output::open(cli)?;
            out.line(&meta_json(cli, Some(bc.reference().dim().d())))?;
            out.json(&serde_json::json!({ "count": count.to_string() }))?;
        }
        Command::KasteleynVerify { bc, hyperdet_cap } => {
            let (bc, w) = bc.load()?;
            let r = verify_kasteleyn_capped(&bc, &w, *hyperdet_cap)?;
            let mut out = Output::open(cli)?;
            out.line(&meta_json(cli, Some(bc.reference().dim().d())))?;
            out.json(&serde_json::json!({
                "n": r.n,
                "rank": r.rank,
                "count": r.count.to_string(),
                "Z": r.z.to_string(),
                "det": r.det.value.to_string(),
                "sign": r.sign,
                "positive_terms": r.det.positive_terms,
                "negative_terms": r.det.negative_terms,
                "equal": r.equal,
            }))?;
            if !r.equal || !r.det.sign_uniform() {
                bail!(CheckFailed(format!("|Det K| = {} but Z = {}", r.det.value, r.z)));
            }
        }
        Command::Sample {
            bc,
            chains,
            steps,
            burnin,
            cftp,
            weighted_experimental,
            max_steps,
        } => {
            let (bc, w) = bc.load()?;
            let graph = bc.graph();
            let weights = Weights::for_graph(&graph, &w);
            let opts = CftpOptions {
                max_steps: *max_steps,
                weighted_experimental: *weighted_experimental,
            };
            let mut out = Output::open(cli)?;
            out.line(&meta_json(cli, Some(bc.reference().dim().d())))?;
            for chain in 0..*chains {
                let values = if *cftp {
                    cftp_values(&graph, &weights, seed, chain, opts)?
                } else {
                    glauber_values(&graph, &weights, graph.upper.clone(), burnin + steps, seed, chain)
                };
                let field = bc.field_from_values(&graph, &values);
                out.json(&serde_json::json!({ "chain": chain, "field": HeightFieldDoc::from_field(&field) }))?;
            }
        }
        Command::SwapStats { bc, pairs, steps, x } => {
            let (bc, w) = bc.load()?;
            let ctx = ClusterContext::new(&bc)?;
            let graph = ctx.graph();
            let weights = Weights::for_graph(graph, &w);
            let point = x
                .as_ref()
                .map(|p| parse_point(p, bc.reference().dim()))
                .transpose()?;
            let draw = |stream: u64| -> Result<Vec<i64>> {
                Ok(if w.is_uniform() {
                    cftp_values(graph, &weights, seed, stream, CftpOptions::default())?
                } else {
                    glauber_values(graph, &weights, graph.upper.clone(), *steps, seed, stream)
                })
            };
            let mut out = Output::open(cli)?;
            out.line(&format!("# {}", meta_json(cli, Some(bc.reference().dim().d()))))?;
            let mut header = "pair,boundaries,level_sets,support_edges,max_distance".to_string();
            if point.is_some() {
                header.push_str(",distance_x");
            }
            out.line(&header)?;
            for pair in 0..*pairs {
                let v1 = draw(2 * pair)?;
                let v2 = draw(2 * pair + 1)?;
                let lsd = ctx.decompose(&v1, &v2)?;
                let max_distance = bc.region().iter().map(|y| lsd.lsd_distance(y)).max().unwrap_or(0);
                let mut row = format!(
                    "{pair},{},{},{},{max_distance}",
                    lsd.boundaries.len(),
                    lsd.level_count(),
                    lsd.support.len()
                );
                if let Some(p) = &point {
                    row.push_str(&format!(",{}", lsd.lsd_distance(p)));
                }
                out.line(&row)?;
            }
        }
        Command::IdentityCheck {
            bc,
            x,
            y,
            cap,
            samples,
            steps,
        } => {
            let (bc, w) = bc.load()?;
            let dim = bc.reference().dim();
            let px = parse_point(x, dim)?;
            let py = match y {
                Some(y) => parse_point(y, dim)?,
                None => px.clone(),
            };
            let mut out = Output::open(cli)?;
            match samples {
                Some(n) => {
                    let r = identity_estimators_mcmc(&bc, &w, &px, &py, *n, *steps, seed)?;
                    out.line(&meta_json(cli, Some(dim.d())))?;
                    out.json(&serde_json::json!({
                        "x": px, "y": py,
                        "lhs": r.lhs, "lhs_se": r.lhs_se,
                        "rhs": r.rhs, "rhs_se": r.rhs_se,
                    }))?;
                }
                None => {
                    let r = covariance_identities(&bc, &w, &[(px, py)], *cap)?.remove(0);
                    out.line(&meta_json(cli, Some(dim.d())))?;
                    out.json(&serde_json::json!({
                        "x": r.x, "y": r.y,
                        "lhs": r.lhs.to_string(),
                        "rhs": r.rhs.to_string(),
                        "lhs_float": r.lhs.to_f64_lossy(),
                        "rhs_float": r.rhs.to_f64_lossy(),
                        "equal": r.equal,
                    }))?;
                    if !r.equal {
                        bail!(CheckFailed(format!("lhs = {} but rhs = {}", r.lhs, r.rhs)));
                    }
                }
            }
        }
        Command::Tension { slope, n_list, cap } => {
            let s = parse_slope(slope)?;
            let ns: Vec<i64> = n_list
                .split(',')
                .map(|t| t.trim().parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| hyperdimer::Error::Invalid(format!("bad --n-list {n_list:?}: {e}")))?;
            let est = TensionEstimate::compute(&s, &ns, *cap)?;
            let mut out = Output::open(cli)?;
            out.line(&format!("# {}", meta_json(cli, Some(s.dim().d()))))?;
            out.line("n,a_star,count,sigma_n,zero_offset_count,zero_offset_sigma")?;
            for e in &est.entries {
                out.line(&format!(
                    "{},{},{},{:.15},{},{:.15}",
                    e.n, e.offset, e.count, e.sigma, e.zero_offset_count, e.zero_offset_sigma
                ))?;
            }
        }
        Command::Render { field, bc, radius } => {
            let f = match field {
                Some(path) => read_doc::<HeightFieldDoc>(path)?
                    .to_field()
                    .with_context(|| format!("in {}", path.display()))?,
                None => {
                    let (bc, w) = bc.load()?;
                    let graph = bc.graph();
                    let values = cftp_values(&graph, &Weights::for_graph(&graph, &w), seed, 0, CftpOptions::default())?;
                    bc.field_from_values(&graph, &values)
                }
            };
            let t = tiling_of(&f)?;
            let dim = f.dim();
            if dim.d() != 2 {
                return Err(hyperdimer::Error::Invalid(format!(
                    "rendering is only defined for d = 2, got d = {}",
                    dim.d()
                ))
                .into());
            }
            // redraw over a centred window so the picture covers the whole region
            let window = Region::make_box(dim, RegionKind::CentredBox, *radius)?
                .vertices()
                .iter()
                .map(|v| v.add(&Vertex::from_box_coords(&[*radius / 2, *radius / 2])))
                .collect();
            let edges = window_tiles(&t, &window);
            let view = hyperdimer::Tiling::new(dim, t.background().clone(), window, edges)?;
            let svg = render::render_svg(&view, &meta_json(cli, Some(2)))?;
            let mut out = Output::open(cli)?;
            write!(out.out, "{svg}")?;
        }
    }
    Ok(())
}

fn window_tiles(
    t: &hyperdimer::Tiling,
    window: &std::collections::BTreeSet<Vertex>,
) -> std::collections::BTreeSet<hyperdimer::Edge> {
    let mut edges = std::collections::BTreeSet::new();
    for x in window {
        for dir in 0..x.coords().len() {
            for e in [hyperdimer::Edge::new(x.clone(), dir), hyperdimer::Edge::new(x.step(dir, -1), dir)] {
                if t.contains(&e) {
                    edges.insert(e);
                }
            }
        }
    }
    edges
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<hyperdimer::Error>() {
        Some(e) if e.is_cap() => 3,
        _ => 2,
    }
}

fn millis_since_epoch() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn main() -> ExitCode {
    let args = match config::merge_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    let started = millis_since_epoch();
    let clock = Instant::now();
    let result = run(&cli);
    // timing goes to stderr so that standard output depends only on the inputs
    eprintln!(
        "{}",
        serde_json::json!({
            "started_unix_ms": started as u64,
            "finished_unix_ms": millis_since_epoch() as u64,
            "elapsed_ms": clock.elapsed().as_millis() as u64,
        })
    );
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
