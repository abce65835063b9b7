use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use nodefill::bench::{fit_slope, shrinking_domain, spacing_for_count, sweep, BenchRecord};
use nodefill::quality::{
    distance_histogram, hole_sizes_2d, min_pairwise_distance, neighbor_stats, uniform_edges,
    verify_empty_disk,
};
use nodefill::rbffd::{
    assemble_poisson, laplacian_spectrum, run_poisson, sine_solution, PhsConfig,
};
use nodefill::{discretize_boundary, Algorithm, Domain, Error, GrayImage, NodeFile, SpacingField};

const OUT_DIR_VAR: &str = "NODEFILL_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "nodefill",
    version,
    about = "Generate and evaluate node sets for meshless methods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fill a domain with nodes and write a node file.
    Generate(GenerateArgs),
    /// Neighbour-distance statistics, hole sizes and spacing checks for a node file.
    Analyze(AnalyzeArgs),
    /// Time fill algorithms over node counts or on shrinking domains.
    Bench(BenchArgs),
    /// Solve a Poisson problem on generated nodes and report the L1 error.
    SolvePoisson(SolveArgs),
    /// Eigenvalues of the discrete Laplacian on the interior nodes.
    Spectrum(SpectrumArgs),
}

#[derive(Args)]
struct DomainArgs {
    /// Domain description, e.g. "box 0 0 1 1", "ball 0 0 1", "diff (box 0 0 1 1) (ball 0.5 0.5 0.2)".
    #[arg(long)]
    domain: Option<String>,
    /// Dimension of the unit cube used when --domain is not given.
    #[arg(long, default_value_t = 2)]
    dim: usize,
}

impl DomainArgs {
    fn build(&self) -> Result<Domain, Error> {
        match &self.domain {
            Some(src) => Domain::parse(src),
            None => Domain::unit_cube(self.dim),
        }
    }
}

#[derive(Args)]
struct SpacingArgs {
    /// Constant spacing or an expression in x, y, z such as "0.015*(1+x+y)".
    #[arg(long)]
    h: Option<String>,
    /// PGM image mapping grey levels to spacing over the domain's bounding box.
    #[arg(long, conflicts_with = "h")]
    image: Option<PathBuf>,
    /// Scale applied to the grey-level spacing of --image.
    #[arg(long, requires = "image")]
    h0: Option<f64>,
}

impl SpacingArgs {
    fn build(&self) -> Result<SpacingField, Error> {
        if let Some(path) = &self.image {
            let h0 = self
                .h0
                .ok_or_else(|| Error::InvalidInput("--image needs --h0".into()))?;
            return SpacingField::image(GrayImage::load_pgm(path)?, h0);
        }
        match &self.h {
            Some(src) => parse_spacing(src),
            None => Err(Error::InvalidInput(
                "one of --h or --image is required".into(),
            )),
        }
    }
}

fn parse_spacing(src: &str) -> Result<SpacingField, Error> {
    match src.trim().parse::<f64>() {
        Ok(v) => SpacingField::constant(v),
        Err(_) => SpacingField::from_expr(src),
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "pnp")]
    alg: Algorithm,
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    spacing: SpacingArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Output node file; defaults to nodes_<alg>.csv in $NODEFILL_OUT_DIR or the current directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Node file written by `generate`.
    input: PathBuf,
    /// Number of nearest neighbours per node.
    #[arg(long, default_value_t = 3)]
    c: usize,
    /// Minimum distance from the boundary nodes, absolute or a multiple of h such as "2h".
    /// Defaults to 2h for constant spacing and 0 otherwise.
    #[arg(long)]
    margin: Option<String>,
    /// Spacing used for "h" in --margin and the spacing check; read from the file header when omitted.
    #[arg(long)]
    h: Option<String>,
    /// Domain for hole sizes; read from the file header when omitted.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Histogram CSV; defaults to <input stem>_hist.csv next to the input.
    #[arg(long)]
    hist: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated algorithms: pnp, pnp-grid, ff, skf.
    #[arg(long, value_delimiter = ',', default_value = "pnp,pnp-grid,ff,skf")]
    alg: Vec<Algorithm>,
    /// Comma-separated target node counts on the unit square.
    #[arg(long, value_delimiter = ',', conflicts_with = "h")]
    target_n: Vec<f64>,
    /// Comma-separated constant spacings.
    #[arg(long, value_delimiter = ',')]
    h: Vec<f64>,
    /// Comma-separated hole half-widths; times the perforated unit square instead of a sweep.
    #[arg(long, value_delimiter = ',')]
    shrink: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "pnp")]
    alg: Algorithm,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    nn: Option<usize>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Spacing of the error evaluation grid; h/2 when omitted.
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long, default_value = "pnp")]
    alg: Algorithm,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    nn: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Eigenvalue CSV; defaults to spectrum_<alg>.csv in $NODEFILL_OUT_DIR or the current directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn default_output(name: &str) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_VAR).map_or_else(|| PathBuf::from("."), PathBuf::from);
    dir.join(name)
}

fn ensure_parent(path: &Path) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(())
}

fn print_json<T: Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn generate(args: &GenerateArgs) -> Result<(), Error> {
    let domain = args.domain.build()?;
    let h = args.spacing.build()?;
    let seed = resolve_seed(args.seed);
    let start = Instant::now();
    let boundary = discretize_boundary(&domain, &h)?;
    let result = args.alg.fill(&domain, &h, &boundary, seed)?;
    let elapsed = start.elapsed().as_secs_f64();
    let min_spacing = if result.len() >= 2 {
        Some(min_pairwise_distance(&result.nodes)?.0)
    } else {
        None
    };
    let path = args
        .output
        .clone()
        .unwrap_or_else(|| default_output(&format!("nodes_{}.csv", args.alg)));
    ensure_parent(&path)?;
    NodeFile::from_fill(
        &result,
        args.alg.name(),
        Some(domain.describe()),
        Some(h.describe()),
        Some(seed),
    )
    .save(&path)?;
    print_json(&json!({
        "N": result.len(),
        "seed_count": result.seed_count,
        "time": elapsed,
        "min_spacing": min_spacing,
        "truncated": result.truncated,
        "seed": seed,
        "output": path,
    }));
    Ok(())
}

fn parse_margin(src: &str, h: Option<f64>) -> Result<f64, Error> {
    let src = src.trim();
    if let Some(factor) = src.strip_suffix('h') {
        let h = h.ok_or_else(|| {
            Error::InvalidInput(format!("margin {src:?} needs a constant spacing; pass --h"))
        })?;
        let factor = if factor.trim().is_empty() {
            1.0
        } else {
            factor
                .trim()
                .trim_end_matches('*')
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad margin {src:?}")))?
        };
        return Ok(factor * h);
    }
    src.parse()
        .map_err(|_| Error::InvalidInput(format!("bad margin {src:?}")))
}

fn analyze(args: &AnalyzeArgs) -> Result<(), Error> {
    let file = NodeFile::load(&args.input)?;
    let spacing = match args.h.as_ref().or(file.header.spacing.as_ref()) {
        Some(src) => parse_spacing(src).ok(),
        None => None,
    };
    let h_const = spacing.as_ref().and_then(|s| s.constant_value());
    let margin = match (&args.margin, h_const) {
        (Some(src), _) => parse_margin(src, h_const)?,
        (None, Some(h)) => 2.0 * h,
        (None, None) => 0.0,
    };
    let boundary = file.boundary();
    let stats = neighbor_stats(&file.nodes, &boundary, args.c, margin)?;

    let mut report = json!({
        "input": args.input,
        "N": file.nodes.len(),
        "algorithm": file.header.algorithm,
        "c": stats.c,
        "margin": margin,
        "interior_count": stats.interior_count,
        "mean": stats.mean,
        "std": stats.std,
        "spread": stats.spread,
    });

    let lo = stats
        .nodes
        .iter()
        .map(|n| n.min)
        .fold(f64::INFINITY, f64::min);
    let hi = stats
        .nodes
        .iter()
        .map(|n| n.max)
        .fold(f64::NEG_INFINITY, f64::max);
    if lo < hi {
        let hist = distance_histogram(&stats, &uniform_edges(lo, hi, args.bins)?)?;
        let path = args.hist.clone().unwrap_or_else(|| {
            let stem = args
                .input
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("nodes");
            args.input.with_file_name(format!("{stem}_hist.csv"))
        });
        ensure_parent(&path)?;
        fs::write(&path, hist.to_csv())?;
        report["histogram"] = json!(path);
    }

    if file.nodes.len() >= 2 {
        report["min_spacing"] = json!(min_pairwise_distance(&file.nodes)?.0);
    }

    let domain = match args.domain.as_ref().or(file.header.domain.as_ref()) {
        Some(src) => Some(Domain::parse(src)?),
        None => None,
    };
    if let Some(domain) = domain.filter(|d| d.dim() == 2) {
        report["holes"] =
            serde_json::to_value(hole_sizes_2d(&file.nodes, &domain)?).expect("serializable");
    }

    if let (Some(h), true) = (&spacing, file.beta.is_some()) {
        let check = verify_empty_disk(&file.to_fill_result(), h)?;
        report["empty_disk"] = serde_json::to_value(check).expect("serializable");
    }
    print_json(&report);
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.seed);
    let unit = Domain::unit_cube(2)?;
    let mut lines = Vec::new();
    if !args.shrink.is_empty() {
        let h = match args.h.as_slice() {
            [h] => *h,
            [] => 0.004,
            _ => return Err(Error::InvalidInput("--shrink takes a single --h".into())),
        };
        let records = shrinking_domain(&args.alg, &args.shrink, h, args.repeats, seed)?;
        lines.push(format!("alpha,{}", BenchRecord::csv_header(args.repeats)));
        for r in &records {
            lines.push(format!("{:.16e},{}", r.alpha, r.record.csv_row()));
        }
    } else {
        let h_list = if !args.h.is_empty() {
            args.h.clone()
        } else if !args.target_n.is_empty() {
            args.target_n
                .iter()
                .map(|&n| spacing_for_count(&unit, n))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            return Err(Error::InvalidInput(
                "bench needs --target-n, --h or --shrink".into(),
            ));
        };
        lines.push(BenchRecord::csv_header(args.repeats));
        for &alg in &args.alg {
            let records = sweep(alg, &unit, &h_list, args.repeats, seed)?;
            for r in &records {
                if let Some(w) = &r.warning {
                    eprintln!("warning: {alg} h={}: {w}", r.h);
                }
                lines.push(r.csv_row());
            }
            if let Some(k) = fit_slope(&records, 10_000) {
                eprintln!("{alg}: log-log slope {k:.3}");
            }
        }
    }
    let text = lines.join("\n") + "\n";
    match &args.output {
        Some(path) => {
            ensure_parent(path)?;
            fs::write(path, text)?;
        }
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
    }
    Ok(())
}

fn phs_config(dim: usize, nn: Option<usize>) -> Result<PhsConfig, Error> {
    let mut cfg = PhsConfig::for_dim(dim);
    if let Some(nn) = nn {
        cfg.nn = nn;
    }
    cfg.validate(dim)?;
    Ok(cfg)
}

fn solve_poisson(args: &SolveArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.seed);
    let cfg = phs_config(args.dim, args.nn)?;
    let domain = Domain::unit_cube(args.dim)?;
    let h = SpacingField::constant(args.h)?;
    let boundary = discretize_boundary(&domain, &h)?;
    let fill = args.alg.fill(&domain, &h, &boundary, seed)?;
    let report = run_poisson(
        &domain,
        &fill,
        &cfg,
        args.tol,
        args.grid_step.unwrap_or(args.h / 2.0),
    )?;
    let mut value = serde_json::to_value(&report).expect("serializable");
    value["seed"] = json!(seed);
    value["algorithm"] = json!(args.alg.name());
    print_json(&value);
    Ok(())
}

fn spectrum(args: &SpectrumArgs) -> Result<(), Error> {
    let seed = resolve_seed(args.seed);
    let cfg = phs_config(args.dim, args.nn)?;
    let domain = Domain::unit_cube(args.dim)?;
    let h = SpacingField::constant(args.h)?;
    let boundary = discretize_boundary(&domain, &h)?;
    let fill = args.alg.fill(&domain, &h, &boundary, seed)?;
    let (u, f) = sine_solution(args.dim);
    let system = assemble_poisson(&fill.nodes, &fill.boundary_mask(), &cfg, &f, &u)?;
    let eig = laplacian_spectrum(&system)?;
    let path = args
        .output
        .clone()
        .unwrap_or_else(|| default_output(&format!("spectrum_{}.csv", args.alg)));
    ensure_parent(&path)?;
    let mut text = String::from("re,im\n");
    for z in &eig {
        text.push_str(&format!("{:.16e},{:.16e}\n", z.re, z.im));
    }
    fs::write(&path, text)?;
    let top: Vec<f64> = eig.iter().take(5).map(|z| z.re).collect();
    print_json(&json!({
        "N": fill.len(),
        "interior": eig.len(),
        "max_re": top.first(),
        "top_re": top,
        "seed": seed,
        "output": path,
    }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Analyze(a) => analyze(a),
        Command::Bench(a) => bench(a),
        Command::SolvePoisson(a) => solve_poisson(a),
        Command::Spectrum(a) => spectrum(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
