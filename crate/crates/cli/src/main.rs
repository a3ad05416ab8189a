use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use camweight::attention::{CawModule, TrainConfig};
use camweight::embedding::EmbeddingConfig;
use camweight::harness::{self, ExperimentConfig, Protocol, TrainingSetConfig};
use camweight::metrics::MetricReport;
use camweight::render::{
    encode_source_view, generate_scene, render_ground_truth, render_novel_view, CameraIntrinsics, Frustum,
    RenderSettings, VolumeResolution,
};
use camweight::weighting::{compute_weights, compute_weights_or_uniform, DEFAULT_EPSILON};
use camweight::{Error, Scheme};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Source-camera weighting for novel view synthesis on a synthetic bench.
#[derive(Parser)]
#[command(name = "camweight", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the weight vector of a rig as a JSON array.
    Weigh {
        #[arg(long)]
        rig: PathBuf,
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// Render a rig's target view of a generated scene to a binary PPM.
    Render {
        #[arg(long)]
        scene_seed: u64,
        #[arg(long)]
        rig: PathBuf,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the ground-truth render here.
        #[arg(long)]
        ground_truth_out: Option<PathBuf>,
        #[command(flatten)]
        image: ImageArgs,
    },
    /// Run an evaluation protocol and write one CSV row per scene and scheme.
    Experiment {
        #[arg(value_enum)]
        protocol: ProtocolArg,
        #[arg(long, default_value_t = 20)]
        scenes: usize,
        #[arg(long, default_value_t = 5)]
        sources: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated schemes, each `name` or `name:param`.
        #[arg(long, default_value = "mean,err:1")]
        schemes: String,
        /// Source counts for the sweep protocol.
        #[arg(long, default_value = "2,8,16,32", value_delimiter = ',')]
        view_counts: Vec<usize>,
        /// Close-view threshold in degrees.
        #[arg(long, default_value_t = 10.0)]
        close_degrees: f64,
        #[arg(long)]
        caw_params: Option<PathBuf>,
        /// Write per-group means here.
        #[arg(long)]
        summary_out: Option<PathBuf>,
        /// Write every rendered rig here as JSON.
        #[arg(long)]
        rigs_out: Option<PathBuf>,
        #[command(flatten)]
        image: ImageArgs,
    },
    /// Average a result CSV over scenes.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a cross-attention weighting module on generated scenes.
    TrainCaw {
        #[arg(long, default_value_t = 50)]
        scenes: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        rigs_per_scene: usize,
        #[arg(long, default_value_t = 5)]
        sources: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        loss_out: PathBuf,
        /// Write the untrained parameters here.
        #[arg(long)]
        init_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = VariantArg::Geometric)]
        variant: VariantArg,
    },
    /// Check every analytic gradient against finite differences.
    Gradcheck {
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Args)]
struct SchemeArgs {
    #[arg(long, value_enum)]
    scheme: SchemeName,
    /// α for `err`.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// β for `gauss`.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    caw_params: Option<PathBuf>,
}

#[derive(Args)]
struct ImageArgs {
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 64)]
    samples: usize,
}

impl ImageArgs {
    fn settings(&self, seed: u64) -> RenderSettings {
        RenderSettings { width: self.width, height: self.height, samples: self.samples, seed }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeName {
    Mean,
    L1,
    Fro,
    Gauss,
    Err,
    Caw,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Random,
    Close,
    Sweep,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Geometric,
    Flattened,
}

/// Exit status for each failure class.
mod exit {
    pub const FAILURE: u8 = 1;
    pub const MALFORMED_RIG: u8 = 2;
    pub const DEGENERATE_RIG: u8 = 3;
    pub const DIVERGED: u8 = 4;
}

struct Failure {
    code: u8,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match error {
            Error::DegenerateRig(_) | Error::DegenerateWeights => exit::DEGENERATE_RIG,
            Error::DivergedTraining { .. } => exit::DIVERGED,
            _ => exit::FAILURE,
        };
        Failure { code, error }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::Io(e).into()
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn malformed(error: Error) -> Failure {
    Failure { code: exit::MALFORMED_RIG, error }
}

impl SchemeArgs {
    fn scheme(&self) -> Scheme {
        match self.scheme {
            SchemeName::Mean => Scheme::Mean,
            SchemeName::L1 => Scheme::Norm { kind: camweight::pose::NormKind::L1, epsilon: self.epsilon },
            SchemeName::Fro => Scheme::Norm { kind: camweight::pose::NormKind::Frobenius, epsilon: self.epsilon },
            SchemeName::Gauss => Scheme::DistGauss { beta: self.beta },
            SchemeName::Err => Scheme::Error { alpha: self.alpha, epsilon: self.epsilon },
            SchemeName::Caw => Scheme::CrossAttention,
        }
    }

    fn module(&self) -> CliResult<Option<CawModule>> {
        match (self.scheme, &self.caw_params) {
            (SchemeName::Caw, Some(path)) => Ok(Some(load_module(path)?)),
            (SchemeName::Caw, None) => Err(Error::InvalidConfig("--scheme caw needs --caw-params".into()).into()),
            _ => Ok(None),
        }
    }
}

fn load_module(path: &Path) -> CliResult<CawModule> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?).map_err(Error::from)?)
}

fn load_rig(path: &Path) -> CliResult<camweight::CameraRig> {
    harness::load_rig(path).map_err(malformed)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn weigh(rig: &Path, args: &SchemeArgs) -> CliResult {
    let rig = load_rig(rig)?;
    let module = args.module()?;
    let w = compute_weights(&rig, &args.scheme(), module.as_ref())?;
    println!("{}", serde_json::to_string(&w).map_err(Error::from)?);
    Ok(())
}

fn render(
    scene_seed: u64,
    rig: &Path,
    args: &SchemeArgs,
    out: &Path,
    ground_truth_out: Option<&Path>,
    image: &ImageArgs,
) -> CliResult {
    let rig = load_rig(rig)?;
    let module = args.module()?;
    let w = compute_weights_or_uniform(&rig, &args.scheme(), module.as_ref())?;
    let scene = generate_scene(scene_seed, 2, 5)?;
    let intrinsics = CameraIntrinsics::default();
    let settings = image.settings(scene_seed);
    let target = Frustum::new(rig.target, intrinsics)?;
    let volumes = rig
        .sources()
        .iter()
        .map(|p| encode_source_view(&scene, &Frustum::new(*p, intrinsics)?, VolumeResolution::default()))
        .collect::<camweight::Result<Vec<_>>>()?;
    let img = render_novel_view(&volumes, &target, &w, &settings)?;
    img.write_ppm(create(out)?)?;
    let truth = render_ground_truth(&scene, &target, &settings)?;
    if let Some(path) = ground_truth_out {
        truth.write_ppm(create(path)?)?;
    }
    let report = MetricReport::compute(&img, &truth)?;
    println!(
        "{}",
        serde_json::json!({
            "weights": w,
            "psnr": if report.psnr.is_finite() { serde_json::json!(report.psnr) } else { serde_json::json!("inf") },
            "ssim": report.ssim,
        })
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn experiment(
    protocol: ProtocolArg,
    scenes: usize,
    sources: usize,
    seed: u64,
    out: &Path,
    schemes: &str,
    view_counts: Vec<usize>,
    close_degrees: f64,
    caw_params: Option<&Path>,
    summary_out: Option<&Path>,
    rigs_out: Option<&Path>,
    image: &ImageArgs,
) -> CliResult {
    let protocol = match protocol {
        ProtocolArg::Random => Protocol::RandomViews,
        ProtocolArg::Close => Protocol::OneCloseView,
        ProtocolArg::Sweep => Protocol::ViewSweep,
    };
    let schemes = schemes.split(',').map(str::parse).collect::<camweight::Result<Vec<Scheme>>>()?;
    let caw = caw_params.map(load_module).transpose()?;
    let cfg = ExperimentConfig {
        scenes,
        sources,
        seed,
        schemes,
        caw,
        view_counts,
        close_threshold: close_degrees.to_radians(),
        render: image.settings(0),
        ..ExperimentConfig::new(protocol)
    };
    let output = harness::run_experiment(&cfg)?;
    harness::write_csv(&output.rows, create(out)?)?;
    if let Some(path) = summary_out {
        harness::write_summary_csv(&harness::summarize(&output.rows), create(path)?)?;
    }
    if let Some(path) = rigs_out {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &output.rigs).map_err(Error::from)?;
        w.flush()?;
    }
    eprintln!("wrote {} rows to {}", output.rows.len(), out.display());
    Ok(())
}

fn summarize(input: &Path, out: Option<&Path>) -> CliResult {
    let rows = harness::read_csv(File::open(input)?)?;
    let summary = harness::summarize(&rows);
    match out {
        Some(path) => harness::write_summary_csv(&summary, create(path)?)?,
        None => harness::write_summary_csv(&summary, io::stdout().lock())?,
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train_caw(
    scenes: usize,
    epochs: usize,
    seed: u64,
    rigs_per_scene: usize,
    sources: usize,
    out: &Path,
    loss_out: &Path,
    init_out: Option<&Path>,
    variant: VariantArg,
) -> CliResult {
    let set = TrainingSetConfig { scenes, seed, rigs_per_scene, sources, ..Default::default() };
    let embedding = match variant {
        VariantArg::Geometric => EmbeddingConfig::default(),
        VariantArg::Flattened => EmbeddingConfig::flattened(),
    };
    let mut module = CawModule::new(embedding, seed)?;
    if let Some(path) = init_out {
        fs::write(path, serde_json::to_string(&module).map_err(Error::from)?)?;
    }
    let examples = harness::build_training_set(&set)?;
    let cfg = TrainConfig { epochs, seed, render: set.render, ..Default::default() };
    let history = camweight::attention::train_caw(&mut module, &examples, &cfg)?;
    fs::write(out, serde_json::to_string(&module).map_err(Error::from)?)?;
    let mut w = create(loss_out)?;
    writeln!(w, "epoch,mean_loss")?;
    for (i, loss) in history.epoch_losses.iter().enumerate() {
        writeln!(w, "{i},{loss}")?;
    }
    w.flush()?;
    eprintln!("trained on {} rigs for {epochs} epochs", examples.len());
    Ok(())
}

fn gradcheck(inject_fault: bool) -> CliResult {
    let lines = harness::run_gradcheck_suite(inject_fault)?;
    for l in &lines {
        println!("{l}");
    }
    if lines.iter().all(|l| l.passed()) {
        Ok(())
    } else {
        Err(Failure { code: exit::FAILURE, error: Error::InvalidConfig("gradient check failed".into()) })
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Weigh { rig, scheme } => weigh(&rig, &scheme),
        Command::Render { scene_seed, rig, scheme, out, ground_truth_out, image } => {
            render(scene_seed, &rig, &scheme, &out, ground_truth_out.as_deref(), &image)
        }
        Command::Experiment {
            protocol,
            scenes,
            sources,
            seed,
            out,
            schemes,
            view_counts,
            close_degrees,
            caw_params,
            summary_out,
            rigs_out,
            image,
        } => experiment(
            protocol,
            scenes,
            sources,
            seed,
            &out,
            &schemes,
            view_counts,
            close_degrees,
            caw_params.as_deref(),
            summary_out.as_deref(),
            rigs_out.as_deref(),
            &image,
        ),
        Command::Summarize { input, out } => summarize(&input, out.as_deref()),
        Command::TrainCaw { scenes, epochs, seed, rigs_per_scene, sources, out, loss_out, init_out, variant } => {
            train_caw(scenes, epochs, seed, rigs_per_scene, sources, &out, &loss_out, init_out.as_deref(), variant)
        }
        Command::Gradcheck { inject_fault } => gradcheck(inject_fault),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}
