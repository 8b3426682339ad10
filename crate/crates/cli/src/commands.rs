use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use aiin_core::evalharness::{evaluate, train_classifier, ClassifierConfig, GeometricRanges, LabeledDataset};
use aiin_core::frechet::{export_features, extract_features, fid, gaussian_stats, import_features, FeatureMatrix};
use aiin_core::gantrain::{generate, make_toy_dataset, run_experiment, train_gan, ExperimentConfig, GanConfig, ToyDatasetSpec};
use aiin_core::imgproc::{encode_pgm, ContrastThreshold, Preprocess, WindowGrid};
use aiin_core::neural::{load_model, save_model};
use aiin_core::similarity::{collapse_delta, mean_msssim, sample_pairs, MsSsimConfig};

use crate::config::KvConfig;
use crate::error::{CliError, CliResult, Context};
use crate::manifest::{load_image, load_images, load_labeled, read_manifest, write_image_set};
use crate::report::{emit_svg_bars, Metric, ReportTable};

#[derive(Parser, Debug)]
#[command(name = "aiin", version, about = "Adaptive input-image normalization and GAN diversity toolkit")]
pub(crate) struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Preprocess one PGM image
    Normalize(NormalizeArgs),
    /// Mean pairwise MS-SSIM of a real and a synthetic set, and their delta
    Msssim(MsssimArgs),
    /// Frechet distance between two image manifests or two feature CSVs
    Fid(FidArgs),
    /// Extract patch-statistics features from a manifest into CSV
    Features(FeaturesArgs),
    /// Write a multi-modal toy image set
    Toygen(ToygenArgs),
    /// Train the GAN on a manifest of square images
    TrainGan(TrainGanArgs),
    /// Sample images from a generator checkpoint
    Generate(GenerateArgs),
    /// Train the utility classifier and score a labeled test manifest
    Classify(ClassifyArgs),
    /// Run a variant sweep from a key=value config file
    Experiment(ExperimentArgs),
    /// Render a rows CSV as a text table and SVG bar chart
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Aiin,
    Gaussian,
    Median,
}

#[derive(Args, Debug)]
struct NormalizeArgs {
    #[arg(value_enum)]
    method: Method,
    input: PathBuf,
    output: PathBuf,
    /// Tile grid for aiin, as WxH
    #[arg(long, default_value = "8x8")]
    grid: WindowGrid,
    /// Contrast threshold for aiin
    #[arg(long, default_value_t = 50)]
    threshold: u32,
    /// Kernel size for gaussian and median (odd)
    #[arg(long, default_value_t = 3)]
    ksize: usize,
    /// Write plain (P2) instead of binary (P5) PGM
    #[arg(long)]
    ascii: bool,
}

#[derive(Args, Debug)]
struct MsssimArgs {
    /// Manifest of real images
    real: PathBuf,
    /// Manifest of synthetic images
    synthetic: PathBuf,
    /// Pairs per set [default: half the smaller set]
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct FidArgs {
    a: PathBuf,
    b: PathBuf,
    /// Regularization added to both covariances
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    manifest: PathBuf,
    /// Output CSV [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ToygenArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    k_modes: usize,
    #[arg(long, default_value_t = 16)]
    side: usize,
    #[arg(long, default_value_t = 2.0)]
    blob_sigma: f64,
    #[arg(long, default_value_t = 20.0)]
    band_low: f64,
    #[arg(long, default_value_t = 80.0)]
    band_high: f64,
    #[arg(long, default_value_t = 3.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Class label written next to every manifest entry
    #[arg(long)]
    label: Option<u8>,
}

#[derive(Args, Debug)]
struct TrainGanArgs {
    manifest: PathBuf,
    /// Generator checkpoint to write
    #[arg(long)]
    out: PathBuf,
    /// Discriminator checkpoint to write
    #[arg(long)]
    discriminator: Option<PathBuf>,
    /// Loss history CSV to write
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 20)]
    batch_size: usize,
    #[arg(long, default_value_t = 100)]
    latent_dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    checkpoint: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// Labeled training manifest
    #[arg(long)]
    train: PathBuf,
    /// Labeled test manifest
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// key=value config file; flags below override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rows CSV to write [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Comma-separated batch sizes
    #[arg(long)]
    batch_sizes: Option<String>,
    /// Comma-separated variants: none, aiin:WxH:T, gaussian:K, median:K
    #[arg(long)]
    variants: Option<String>,
    #[arg(long)]
    classifier_epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    rows: PathBuf,
    /// SVG bar chart to write
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Column charted in the SVG
    #[arg(long, default_value = "msssim_delta")]
    metric: String,
    /// Re-emit the parsed rows as CSV
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

pub(crate) fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Normalize(a) => normalize(a, out),
        Command::Msssim(a) => msssim(a, out),
        Command::Fid(a) => fid_cmd(a, out),
        Command::Features(a) => features(a, out),
        Command::Toygen(a) => toygen(a, out),
        Command::TrainGan(a) => train_gan_cmd(a, out),
        Command::Generate(a) => generate_cmd(a, out),
        Command::Classify(a) => classify(a, out),
        Command::Experiment(a) => experiment(a, out, err),
        Command::Report(a) => report(a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Data(format!("writing output: {e}")))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).context(format!("writing {}", path.display()))
}

fn normalize(a: NormalizeArgs, out: &mut dyn Write) -> CliResult<()> {
    let img = load_image(&a.input)?;
    let method = match a.method {
        Method::Aiin => Preprocess::Aiin { grid: a.grid, threshold: ContrastThreshold(a.threshold) },
        Method::Gaussian => Preprocess::Gaussian { ksize: a.ksize },
        Method::Median => Preprocess::Median { ksize: a.ksize },
    };
    let result = method.apply(&img).map_err(|e| CliError::Usage(format!("{method} on {}: {e}", a.input.display())))?;
    write_file(&a.output, &encode_pgm(&result, !a.ascii))?;
    emit(out, &format!("{method} {} -> {}\n", a.input.display(), a.output.display()))
}

fn msssim(a: MsssimArgs, out: &mut dyn Write) -> CliResult<()> {
    let real = load_images(&read_manifest(&a.real)?)?;
    let fake = load_images(&read_manifest(&a.synthetic)?)?;
    let pairs = a.pairs.unwrap_or(real.len().min(fake.len()) / 2).max(1);
    let cfg = MsSsimConfig::default();
    let score = |imgs: &[aiin_core::imgproc::Image], path: &Path| {
        sample_pairs(imgs.len(), pairs, a.seed)
            .and_then(|p| mean_msssim(imgs, &p, &cfg))
            .context(format!("msssim stage on {}", path.display()))
    };
    let r = score(&real, &a.real)?;
    let s = score(&fake, &a.synthetic)?;
    let v = collapse_delta(r, s).context("msssim stage")?;
    emit(out, &format!("real_msssim={r}\nsynthetic_msssim={s}\ndelta={}\ncollapsed={}\n", v.delta, v.collapsed))
}

/// A feature CSV has a numeric first field; a manifest has a path there.
fn load_features(path: &Path) -> CliResult<FeatureMatrix> {
    let text = fs::read_to_string(path).context(format!("reading {}", path.display()))?;
    let first = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let numeric = first.split(',').next().is_some_and(|f| f.trim().parse::<f64>().is_ok());
    if numeric {
        import_features(&text).context(format!("parsing {}", path.display()))
    } else {
        Ok(extract_features(&load_images(&read_manifest(path)?)?))
    }
}

fn fid_cmd(a: FidArgs, out: &mut dyn Write) -> CliResult<()> {
    if !(a.eps >= 0.0) {
        return Err(CliError::Usage(format!("--eps must be non-negative, got {}", a.eps)));
    }
    let fa = load_features(&a.a)?;
    let fb = load_features(&a.b)?;
    let sa = gaussian_stats(&fa, a.eps).context(format!("fid stage on {}", a.a.display()))?;
    let sb = gaussian_stats(&fb, a.eps).context(format!("fid stage on {}", a.b.display()))?;
    let score = fid(&sa, &sb).context("fid stage")?;
    emit(out, &format!("fid={}\n", score.0))
}

fn features(a: FeaturesArgs, out: &mut dyn Write) -> CliResult<()> {
    let f = extract_features(&load_images(&read_manifest(&a.manifest)?)?);
    let csv = export_features(&f);
    match a.out {
        Some(p) => write_file(&p, csv.as_bytes()),
        None => emit(out, &csv),
    }
}

fn toygen(a: ToygenArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.label.is_some_and(|l| l > 1) {
        return Err(CliError::Usage("--label must be 0 or 1".into()));
    }
    let spec = ToyDatasetSpec {
        k_modes: a.k_modes,
        side: a.side,
        blob_sigma: a.blob_sigma,
        intensity_band: (a.band_low, a.band_high),
        noise_sigma: a.noise_sigma,
        n: a.n,
    };
    let imgs = make_toy_dataset(&spec, a.seed).map_err(|e| CliError::Usage(format!("dataset stage: {e}")))?;
    let labels = a.label.map(|l| vec![l; imgs.len()]);
    let manifest = write_image_set(&a.out_dir, &imgs, labels.as_deref())?;
    emit(out, &format!("wrote {} images, manifest {}\n", imgs.len(), manifest.display()))
}

fn train_gan_cmd(a: TrainGanArgs, out: &mut dyn Write) -> CliResult<()> {
    let imgs = load_images(&read_manifest(&a.manifest)?)?;
    let side = imgs[0].width();
    if imgs.iter().any(|i| i.width() != side || i.height() != side) {
        return Err(CliError::Data(format!("{}: images must all be square and the same size", a.manifest.display())));
    }
    let cfg = GanConfig {
        latent_dim: a.latent_dim,
        image_side: side,
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed: a.seed,
        ..Default::default()
    };
    let run = train_gan(&cfg, &imgs).context("train stage")?;
    write_file(&a.out, &save_model(&run.generator))?;
    if let Some(p) = &a.discriminator {
        write_file(p, &save_model(&run.discriminator))?;
    }
    if let Some(p) = &a.history {
        write_file(p, run.history.to_csv().as_bytes())?;
    }
    let last = |v: &[f64]| v.last().map_or("n/a".to_string(), |x| x.to_string());
    emit(
        out,
        &format!(
            "epochs={}\nfinal_d_loss={}\nfinal_g_loss={}\n",
            run.history.epochs(),
            last(&run.history.d_loss),
            last(&run.history.g_loss)
        ),
    )
}

fn generate_cmd(a: GenerateArgs, out: &mut dyn Write) -> CliResult<()> {
    let bytes = fs::read(&a.checkpoint).context(format!("reading {}", a.checkpoint.display()))?;
    let g = load_model(&bytes).context(format!("loading {}", a.checkpoint.display()))?;
    let imgs = generate(&g, a.n, a.seed).context("generate stage")?;
    let manifest = write_image_set(&a.out_dir, &imgs, None)?;
    emit(out, &format!("wrote {} images, manifest {}\n", imgs.len(), manifest.display()))
}

fn classify(a: ClassifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let (train_imgs, train_labels) = load_labeled(&a.train)?;
    let (test_imgs, test_labels) = load_labeled(&a.test)?;
    let train = LabeledDataset::new(train_imgs, train_labels).context(a.train.display())?;
    let test = LabeledDataset::new(test_imgs, test_labels).context(a.test.display())?;
    let cfg = ClassifierConfig { hidden: a.hidden, epochs: a.epochs, batch_size: a.batch_size, seed: a.seed, ..Default::default() };
    let model = train_classifier(&train, &cfg).context("classifier stage")?;
    let (c, m) = evaluate(&model, &test).context("classifier stage")?;
    emit(
        out,
        &format!(
            "tp={}\nfp={}\ntn={}\nfn={}\naccuracy={}\nprecision={}\nrecall={}\nspecificity={}\ndegenerate={}\n",
            c.tp, c.fp, c.tn, c.fn_, m.accuracy, m.precision, m.recall, m.specificity, m.degenerate
        ),
    )
}

const EXPERIMENT_KEYS: [&str; 17] = [
    "seed",
    "n",
    "k_modes",
    "side",
    "blob_sigma",
    "band_low",
    "band_high",
    "noise_sigma",
    "latent_dim",
    "epochs",
    "batch_sizes",
    "variants",
    "classifier_epochs",
    "classifier_batch",
    "classifier_hidden",
    "fid_eps",
    "geometric",
];

/// Expands a config into one experiment per (batch size, variant), batch-major.
pub(crate) fn experiment_plan(kv: &KvConfig) -> CliResult<Vec<ExperimentConfig>> {
    if let Some(k) = kv.keys().find(|k| !EXPERIMENT_KEYS.contains(k)) {
        return Err(CliError::Data(format!("unknown config key '{k}' (known: {})", EXPERIMENT_KEYS.join(", "))));
    }
    let d = ToyDatasetSpec::default();
    let data = ToyDatasetSpec {
        k_modes: kv.get_or("k_modes", d.k_modes)?,
        side: kv.get_or("side", d.side)?,
        blob_sigma: kv.get_or("blob_sigma", d.blob_sigma)?,
        intensity_band: (kv.get_or("band_low", d.intensity_band.0)?, kv.get_or("band_high", d.intensity_band.1)?),
        noise_sigma: kv.get_or("noise_sigma", d.noise_sigma)?,
        n: kv.get_or("n", d.n)?,
    };
    let g = GanConfig::default();
    let gan = GanConfig {
        latent_dim: kv.get_or("latent_dim", g.latent_dim)?,
        image_side: data.side,
        epochs: kv.get_or("epochs", g.epochs)?,
        ..g
    };
    let c = ClassifierConfig::default();
    let classifier = ClassifierConfig {
        epochs: kv.get_or("classifier_epochs", c.epochs)?,
        batch_size: kv.get_or("classifier_batch", c.batch_size)?,
        hidden: kv.get_or("classifier_hidden", c.hidden)?,
        ..c
    };
    let geometric = if kv.get_or("geometric", true)? { GeometricRanges::STANDARD } else { GeometricRanges::NONE };
    let batch_sizes: Vec<usize> = kv.get_list("batch_sizes")?.unwrap_or_else(|| vec![gan.batch_size]);
    let variants: Vec<Preprocess> = kv.get_list("variants")?.unwrap_or_else(|| vec![Preprocess::None]);
    if batch_sizes.is_empty() || variants.is_empty() {
        return Err(CliError::Data("batch_sizes and variants must list at least one entry".into()));
    }
    let base = ExperimentConfig {
        data,
        gan,
        classifier,
        geometric,
        fid_eps: kv.get_or("fid_eps", ExperimentConfig::default().fid_eps)?,
        seed: kv.get_or("seed", 0)?,
        preprocess: Preprocess::None,
    };
    let mut plan = Vec::new();
    for &b in &batch_sizes {
        for &v in &variants {
            plan.push(ExperimentConfig { gan: GanConfig { batch_size: b, ..base.gan.clone() }, preprocess: v, ..base.clone() });
        }
    }
    Ok(plan)
}

fn experiment(a: ExperimentArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let mut kv = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).context(format!("reading config {}", p.display()))?;
            KvConfig::parse(&text).map_err(|e| match e {
                CliError::Data(m) => CliError::Data(format!("{}: {m}", p.display())),
                other => other,
            })?
        }
        None => KvConfig::default(),
    };
    let overrides: [(&str, Option<String>); 6] = [
        ("seed", a.seed.map(|v| v.to_string())),
        ("n", a.n.map(|v| v.to_string())),
        ("epochs", a.epochs.map(|v| v.to_string())),
        ("batch_sizes", a.batch_sizes.clone()),
        ("variants", a.variants.clone()),
        ("classifier_epochs", a.classifier_epochs.map(|v| v.to_string())),
    ];
    for (k, v) in overrides {
        if let Some(v) = v {
            kv.set(k, v);
        }
    }
    let plan = experiment_plan(&kv)?;
    let mut rows = Vec::with_capacity(plan.len());
    for cfg in &plan {
        let _ = writeln!(err, "experiment: {} batch {}", cfg.preprocess, cfg.gan.batch_size);
        let outcome = run_experiment(cfg).context(format!("experiment {} batch {}", cfg.preprocess, cfg.gan.batch_size))?;
        let _ = writeln!(
            err,
            "experiment: real_msssim={:.4} synthetic_msssim={:.4} final d_loss={:.4} g_loss={:.4}",
            outcome.real_msssim,
            outcome.fake_msssim,
            outcome.history.d_loss.last().copied().unwrap_or(f64::NAN),
            outcome.history.g_loss.last().copied().unwrap_or(f64::NAN),
        );
        rows.push(outcome.row);
    }
    let table = ReportTable::new(rows);
    match &a.out {
        Some(p) => {
            write_file(p, table.to_csv().as_bytes())?;
            emit(out, &table.to_text())
        }
        None => emit(out, &table.to_csv()),
    }
}

fn report(a: ReportArgs, out: &mut dyn Write) -> CliResult<()> {
    let metric: Metric = a.metric.parse()?;
    let text = fs::read_to_string(&a.rows).context(format!("reading {}", a.rows.display()))?;
    let table = ReportTable::parse_csv(&text).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", a.rows.display())),
        other => other,
    })?;
    if let Some(p) = &a.svg {
        write_file(p, emit_svg_bars(&table, metric)?.as_bytes())?;
    }
    if let Some(p) = &a.csv_out {
        write_file(p, table.to_csv().as_bytes())?;
    }
    emit(out, &table.to_text())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_is_batch_major_and_applies_keys() {
        let kv = KvConfig::parse("batch_sizes=20,134\nvariants=none,aiin:8x8:50\nn=40\nepochs=3\nseed=9").unwrap();
        let plan = experiment_plan(&kv).unwrap();
        let order: Vec<(usize, String)> = plan.iter().map(|c| (c.gan.batch_size, c.preprocess.to_string())).collect();
        assert_eq!(
            order,
            vec![
                (20, "none".into()),
                (20, "aiin:8x8:50".into()),
                (134, "none".into()),
                (134, "aiin:8x8:50".into())
            ]
        );
        assert!(plan.iter().all(|c| c.data.n == 40 && c.gan.epochs == 3 && c.seed == 9));
    }

    #[test]
    fn unknown_keys_and_bad_variants() {
        assert!(experiment_plan(&KvConfig::parse("epoch=3").unwrap()).is_err());
        assert!(experiment_plan(&KvConfig::parse("variants=blur:3").unwrap()).is_err());
    }
}
