use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use heatmap_forecast::grid::{
    read_hgrd, write_hgrd, write_pgm, GridSpec, DEFAULT_RESOLUTION, DEFAULT_SIZE,
};
use heatmap_forecast::metrics::{
    evaluate, read_predictions_csv, write_report_json, DEFAULT_MISS_THRESHOLD,
};
use heatmap_forecast::oracle::{verify_greedy, BRUTE_FORCE_MAX_K, BRUTE_FORCE_MAX_SIDE};
use heatmap_forecast::rasterizer::{default_raster_spec, rasterize_scene, Scene};
use heatmap_forecast::sampling::{
    sample_fde, sample_kmeans, sample_mr, sample_nms, SampleSet, SamplerConfig,
};
use heatmap_forecast::scenario::{mixture_to_grid, sweep_tradeoff, GaussianMixture};

#[derive(Parser)]
#[command(
    name = "hmap",
    version,
    about = "Heatmap endpoint sampling, metrics and scenario tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract K endpoints from an HGRD heatmap.
    Sample(SampleArgs),
    /// Expected MR / FDE of FDE refinement for L = 0..=l-max on a mixture.
    Sweep(SweepArgs),
    /// Score predictions against ground truth; writes a JSON report.
    Eval(EvalArgs),
    /// Compare greedy MR sampling against exhaustive search on random grids.
    Verify(VerifyArgs),
    /// Rasterize a TOML scene into a 45-channel HGRD stack.
    Raster(RasterArgs),
    /// Render a mixture TOML as an HGRD heatmap.
    Grid(GridArgs),
}

#[derive(Args, Clone, Copy)]
struct SamplerArgs {
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value_t = 1.8)]
    mr_radius: f64,
    #[arg(long, default_value_t = 0)]
    fde_iters: usize,
    #[arg(long, default_value_t = 3.0)]
    fde_neighborhood: f64,
    #[arg(long, default_value_t = DEFAULT_MISS_THRESHOLD)]
    miss_threshold: f64,
    #[arg(long, default_value_t = 2)]
    upsample: usize,
}

impl SamplerArgs {
    fn config(self) -> SamplerConfig {
        SamplerConfig {
            k: self.k,
            mr_radius: self.mr_radius,
            upsample_factor: self.upsample,
            fde_iters: self.fde_iters,
            fde_neighborhood: self.fde_neighborhood,
            miss_threshold: self.miss_threshold,
        }
    }
}

#[derive(Args, Clone, Copy)]
struct FrameArgs {
    #[arg(long, default_value_t = DEFAULT_SIZE)]
    width: usize,
    #[arg(long, default_value_t = DEFAULT_SIZE)]
    height: usize,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: f64,
}

impl FrameArgs {
    fn spec(self) -> Result<GridSpec> {
        Ok(GridSpec::centered(
            self.width,
            self.height,
            self.resolution,
        )?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Mr,
    Fde,
    Nms,
    Kmeans,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, value_enum, default_value = "mr")]
    mode: Mode,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// Write `case_id,k,t,x,y,prob` rows (t = 1) for `eval` instead of the endpoint table.
    #[arg(long)]
    predictions: bool,
    #[arg(long, default_value = "case")]
    case_id: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    mixture: PathBuf,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    frame: FrameArgs,
    #[arg(long, default_value_t = 7)]
    l_max: usize,
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MISS_THRESHOLD)]
    miss_threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Grid side in pixels.
    #[arg(long, default_value_t = 12)]
    size: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Number of seeded instances.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// First seed; instances use seed, seed + 1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RasterArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Also write all channels as a tiled 8-bit PGM.
    #[arg(long)]
    pgm: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    mixture: PathBuf,
    #[command(flatten)]
    frame: FrameArgs,
    /// Also write an 8-bit PGM preview.
    #[arg(long)]
    pgm: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Buffered output file, or stdout when no path is given.
fn output(path: Option<&Path>, inputs: &[&Path]) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            if inputs.contains(&p) {
                bail!("output path {} is also an input", p.display());
            }
            let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

fn write_predictions(w: &mut dyn Write, case_id: &str, set: &SampleSet) -> Result<()> {
    writeln!(w, "case_id,k,t,x,y,prob")?;
    for (k, (p, prob)) in set.points().iter().zip(set.probabilities()).enumerate() {
        writeln!(w, "{case_id},{k},1,{},{},{prob}", p.x, p.y)?;
    }
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let grid =
        read_hgrd(open(&args.grid)?).with_context(|| format!("reading {}", args.grid.display()))?;
    let cfg = args.sampler.config();
    let set = match args.mode {
        Mode::Mr => sample_mr(&grid, &cfg)?,
        Mode::Fde => sample_fde(&grid, &sample_mr(&grid, &cfg)?, &cfg)?,
        Mode::Nms => sample_nms(&grid, &cfg)?,
        Mode::Kmeans => sample_kmeans(&grid, &cfg)?,
    };
    let mut w = output(args.out.as_deref(), &[&args.grid])?;
    if args.predictions {
        write_predictions(&mut w, &args.case_id, &set)?;
    } else {
        set.write_csv(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let mixture = GaussianMixture::from_toml(&read_text(&args.mixture)?)?;
    let l_values: Vec<usize> = (0..=args.l_max).collect();
    let curve = sweep_tradeoff(
        &mixture,
        args.frame.spec()?,
        &args.sampler.config(),
        &l_values,
        args.draws,
        args.seed,
    )?;
    let mut w = output(args.out.as_deref(), &[&args.mixture])?;
    curve.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let cases = read_predictions_csv(open(&args.pred)?, open(&args.gt)?).with_context(|| {
        format!(
            "reading {} against {}",
            args.pred.display(),
            args.gt.display()
        )
    })?;
    let report = evaluate(&cases, args.miss_threshold)?;
    let mut w = output(args.out.as_deref(), &[&args.pred, &args.gt])?;
    write_report_json(&mut w, &report)?;
    w.flush()?;
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<bool> {
    if args.size == 0 || args.size > BRUTE_FORCE_MAX_SIDE {
        bail!("--size must be in 1..={BRUTE_FORCE_MAX_SIDE}");
    }
    if args.k == 0 || args.k > BRUTE_FORCE_MAX_K {
        bail!("--k must be in 1..={BRUTE_FORCE_MAX_K}");
    }
    let mut instances = Vec::new();
    for seed in args.seed..args.seed + args.seeds {
        let v = verify_greedy(args.size, args.k, seed)?;
        log::info!("seed {seed}: greedy {} optimum {}", v.greedy, v.optimum);
        instances.push(v);
    }
    let passed = instances.iter().filter(|v| v.passed).count();
    eprintln!("{passed}/{} instances satisfy the bound", instances.len());
    let mut w = output(args.out.as_deref(), &[])?;
    serde_json::to_writer_pretty(&mut w, &instances)?;
    writeln!(w)?;
    w.flush()?;
    Ok(passed == instances.len())
}

fn cmd_raster(args: RasterArgs) -> Result<()> {
    let scene = Scene::from_toml(&read_text(&args.scene)?)
        .with_context(|| format!("reading {}", args.scene.display()))?;
    let stack = rasterize_scene(&scene, default_raster_spec());
    let mut w = output(Some(&args.out), &[&args.scene])?;
    stack.write_hgrd(&mut w)?;
    w.flush()?;
    if let Some(pgm) = &args.pgm {
        let mut w = output(Some(pgm), &[&args.scene, &args.out])?;
        stack.write_contact_sheet(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_grid(args: GridArgs) -> Result<()> {
    let mixture = GaussianMixture::from_toml(&read_text(&args.mixture)?)?;
    let grid = mixture_to_grid(&mixture, args.frame.spec()?)?;
    let mut w = output(Some(&args.out), &[&args.mixture])?;
    write_hgrd(&mut w, &grid)?;
    w.flush()?;
    if let Some(pgm) = &args.pgm {
        let mut w = output(Some(pgm), &[&args.mixture, &args.out])?;
        write_pgm(&mut w, &grid)?;
        w.flush()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sample(a) => cmd_sample(a)?,
        Command::Sweep(a) => cmd_sweep(a)?,
        Command::Eval(a) => cmd_eval(a)?,
        Command::Verify(a) => return cmd_verify(a),
        Command::Raster(a) => cmd_raster(a)?,
        Command::Grid(a) => cmd_grid(a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
