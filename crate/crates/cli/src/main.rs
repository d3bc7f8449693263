use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hbsurf::geodesics::{analytic_distance, geodesic_bvp, BvpSettings};
use hbsurf::geometry::{SurfaceKind, Vec2};
use hbsurf::harness::{
    convergence_slopes, emit, read_points, read_samples, run_experiment, write_points, BasisSettings, DeltaSpec,
    ExperimentConfig, OutputFormat,
};
use hbsurf::interpolant::HermiteBirkhoff;
use hbsurf::pointsets::{eval_points, nodes_on_surface_with_skip, CellIndex};

#[derive(Parser)]
#[command(name = "hbsurf", version, about = "Hermite-Birkhoff interpolation on parametric surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PointKind {
    /// Halton interpolation nodes.
    Nodes,
    /// Evaluation points (spiral on the sphere, seeded uniform elsewhere).
    Eval,
}

#[derive(Subcommand)]
enum Command {
    /// Write a node or evaluation point set as CSV.
    GenPoints {
        #[arg(long, value_parser = parse_surface)]
        surface: SurfaceKind,
        #[arg(long)]
        n: usize,
        /// Seed of the evaluation stream.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Halton indices skipped before the first node.
        #[arg(long, default_value_t = 0)]
        skip: u64,
        #[arg(long, value_enum, default_value_t = PointKind::Nodes)]
        kind: PointKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Geodesic distance between two chart points.
    Geodesic {
        #[arg(long, value_parser = parse_surface)]
        surface: SurfaceKind,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        from: Vec2,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        to: Vec2,
        /// Write the discretized path as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        segments: usize,
    },
    /// Interpolate sample data at the given points.
    Interp {
        #[arg(long, value_parser = parse_surface, default_value = "sphere")]
        surface: SurfaceKind,
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        eval: PathBuf,
        /// Derivative order k of the basis.
        #[arg(long)]
        order: u32,
        /// Power exponent; defaults to order + 1.
        #[arg(long)]
        mu: Option<f64>,
        /// Localization radius, or `auto`.
        #[arg(long, default_value = "auto")]
        delta: DeltaSpec,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an error table described by a JSON config.
    RunTable {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_surface(s: &str) -> Result<SurfaceKind, String> {
    s.parse()
}

fn parse_pair(s: &str) -> Result<Vec2, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [a, b] = parts[..] else {
        return Err(format!("expected 'v1,v2', got '{s}'"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}'"));
    Ok([num(a)?, num(b)?])
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn gen_points(surface: SurfaceKind, n: usize, seed: u64, skip: u64, kind: PointKind, out: &Path) -> Result<()> {
    if surface == SurfaceKind::Torus {
        bail!("no point generator for the torus");
    }
    let points = match kind {
        PointKind::Nodes => nodes_on_surface_with_skip(surface, n, skip),
        PointKind::Eval => eval_points(surface, n, seed),
    };
    let mut w = create(out)?;
    write_points(&points, &mut w)?;
    w.flush()?;
    Ok(())
}

fn geodesic(surface: SurfaceKind, from: Vec2, to: Vec2, trace: Option<&Path>, segments: usize) -> Result<()> {
    let chart = surface.experiment_chart();
    let settings = BvpSettings { segments, ..BvpSettings::default() };
    let path = geodesic_bvp(&chart, from, to, &settings)?;
    println!("length {}", path.total_length);
    if let Ok(d) = analytic_distance(&chart, from, to) {
        println!("closed_form {d}");
    }
    if let Some(p) = trace {
        let mut w = create(p)?;
        path.write_csv(&chart, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn interp(
    surface: SurfaceKind,
    samples: &Path,
    eval: &Path,
    order: u32,
    mu: Option<f64>,
    delta: DeltaSpec,
    out: &Path,
) -> Result<()> {
    let chart = surface.experiment_chart();
    let samples = read_samples(open(samples)?, &chart).context("reading samples")?;
    let evals = read_points(open(eval)?, &chart).context("reading evaluation points")?;
    let settings = BasisSettings { mu, delta, ..BasisSettings::default() };
    let nodes: Vec<_> = samples.iter().map(|s| s.point()).collect();
    let index = CellIndex::with_target_occupancy(&chart, &nodes, 4.0);
    let delta = settings.resolve_delta(&index, &evals)?;
    let basis = settings.config(order, delta);
    basis.validate()?;
    let model = HermiteBirkhoff::new(&chart, samples, basis)?;
    let mut w = csv_writer(out)?;
    w.write_record(["id", "v1", "v2", "value"])?;
    for (id, (p, h)) in evals.iter().zip(model.eval_many(&evals)).enumerate() {
        let h = h.with_context(|| format!("evaluation point {id}"))?;
        w.write_record([id.to_string(), p.v[0].to_string(), p.v[1].to_string(), h.to_string()])?;
    }
    w.flush()?;
    eprintln!("delta {delta}");
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn run_table(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let mut config: ExperimentConfig =
        serde_json::from_reader(open(config)?).with_context(|| format!("parsing {}", config.display()))?;
    if out.is_some() {
        config.output = out;
    }
    let report = run_experiment(&config)?;
    println!("{:>6} {:>5} {:>10} {:>10} {:>10} {:>10}", "n", "order", "mae", "rmse", "fill", "sep");
    for r in &report.rows {
        println!("{:>6} {:>5} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e}", r.n, r.order, r.mae, r.rmse, r.fill, r.sep);
    }
    if let Ok(fits) = convergence_slopes(&report) {
        for f in fits {
            println!("slope T{} {:.3}", f.order, f.slope);
        }
    }
    if let Some(path) = &config.output {
        emit(&report, OutputFormat::from_path(path), path)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenPoints { surface, n, seed, skip, kind, out } => gen_points(surface, n, seed, skip, kind, &out),
        Command::Geodesic { surface, from, to, trace, segments } => {
            geodesic(surface, from, to, trace.as_deref(), segments)
        }
        Command::Interp { surface, samples, eval, order, mu, delta, out } => {
            interp(surface, &samples, &eval, order, mu, delta, &out)
        }
        Command::RunTable { config, out } => run_table(&config, out),
    }
}
