use super::toy::{make_toy_dataset, ToyDatasetSpec};
use super::train::{generate, train_gan, GanConfig, TrainHistory, TrainedGan};
use crate::error::{Result, StageExt};
use crate::evalharness::{
    augment, evaluate, geometric_augment, train_classifier, ClassifierConfig, ConfusionCounts, GeometricRanges,
    LabeledDataset, UtilityMetrics,
};
use crate::frechet::{extract_features, fid, gaussian_stats};
use crate::imgproc::{Image, Preprocess};
use crate::linalg::Matrix;
use crate::neural::{Activation, Dense, MlpModel};
use crate::rng::Rng;
use crate::similarity::{collapse_delta, mean_msssim, sample_pairs, CollapseVerdict, MsSsimConfig};

/// One line of the results table.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub augmentation: String,
    pub batch_size: usize,
    pub window: Option<String>,
    pub threshold: Option<u32>,
    pub msssim_delta: f64,
    pub fid: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Minority-class toy data; `data.n` images are used for GAN training.
    pub data: ToyDatasetSpec,
    pub gan: GanConfig,
    pub classifier: ClassifierConfig,
    pub preprocess: Preprocess,
    pub geometric: GeometricRanges,
    /// Regularization added to both covariances before FID.
    pub fid_eps: f64,
    /// Master seed; every stage seed is derived from it.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: ToyDatasetSpec::default(),
            gan: GanConfig::default(),
            classifier: ClassifierConfig::default(),
            preprocess: Preprocess::None,
            geometric: GeometricRanges::STANDARD,
            fid_eps: 1e-6,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Majority (positive) class: twice as many images, twice as many blob
    /// positions and broader blobs.
    pub fn majority_spec(&self, n: usize) -> ToyDatasetSpec {
        ToyDatasetSpec { k_modes: 2 * self.data.k_modes, blob_sigma: 1.75 * self.data.blob_sigma, n, ..self.data.clone() }
    }

    /// Held-out test sizes in the 234 : 390 negative-to-positive proportion,
    /// scaled so 1340 training images map to 234 negatives.
    pub fn test_sizes(&self) -> (usize, usize) {
        let n = self.data.n as f64;
        let neg = (n * 234.0 / 1340.0).round().max(1.0) as usize;
        let pos = (n * 390.0 / 1340.0).round().max(1.0) as usize;
        (neg, pos)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub row: ExperimentRow,
    pub real_msssim: f64,
    pub fake_msssim: f64,
    pub verdict: CollapseVerdict,
    pub counts: ConfusionCounts,
    pub utility: UtilityMetrics,
    pub history: TrainHistory,
}

struct Seeds {
    minority: u64,
    majority: u64,
    test_neg: u64,
    test_pos: u64,
    gan: u64,
    generate: u64,
    real_pairs: u64,
    fake_pairs: u64,
    geometric: u64,
    classifier: u64,
}

impl Seeds {
    fn derive(master: u64) -> Self {
        let mut r = Rng::new(master);
        Seeds {
            minority: r.next_u64(),
            majority: r.next_u64(),
            test_neg: r.next_u64(),
            test_pos: r.next_u64(),
            gan: r.next_u64(),
            generate: r.next_u64(),
            real_pairs: r.next_u64(),
            fake_pairs: r.next_u64(),
            geometric: r.next_u64(),
            classifier: r.next_u64(),
        }
    }
}

/// Single-layer generator whose output is `value` at every pixel regardless
/// of the latent input. Used to exercise the collapse detector.
pub fn constant_generator(latent_dim: usize, side: usize, value: u8) -> Result<MlpModel> {
    let t = (value as f64 / 127.5 - 1.0).clamp(-0.999_999, 0.999_999);
    MlpModel::new(vec![Dense {
        weights: Matrix::zeros(side * side, latent_dim),
        bias: vec![t.atanh(); side * side],
        activation: Activation::Tanh,
    }])
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_experiment_with(cfg, train_gan)
}

/// Full pipeline with a caller-supplied GAN trainer: build data, preprocess,
/// train, generate, score diversity (MS-SSIM, FID) and downstream utility.
/// Errors are tagged with the failing stage.
pub fn run_experiment_with<F>(cfg: &ExperimentConfig, trainer: F) -> Result<ExperimentOutcome>
where
    F: FnOnce(&GanConfig, &[Image]) -> Result<TrainedGan>,
{
    let seeds = Seeds::derive(cfg.seed);
    let n = cfg.data.n;
    let (n_test_neg, n_test_pos) = cfg.test_sizes();

    let minority = make_toy_dataset(&cfg.data, seeds.minority).stage("dataset")?;
    let majority = make_toy_dataset(&cfg.majority_spec(2 * n), seeds.majority).stage("dataset")?;
    let test_neg = make_toy_dataset(&ToyDatasetSpec { n: n_test_neg, ..cfg.data.clone() }, seeds.test_neg).stage("dataset")?;
    let test_pos = make_toy_dataset(&cfg.majority_spec(n_test_pos), seeds.test_pos).stage("dataset")?;

    let prep = |imgs: &[Image]| cfg.preprocess.apply_all(imgs).stage("preprocess");
    let (minority, majority, test_neg, test_pos) = (prep(&minority)?, prep(&majority)?, prep(&test_neg)?, prep(&test_pos)?);

    let gan_cfg = GanConfig { seed: seeds.gan, ..cfg.gan.clone() };
    let trained = trainer(&gan_cfg, &minority).stage("train")?;
    let synthetic = generate(&trained.generator, n, seeds.generate).stage("generate")?;

    let ms = MsSsimConfig::default();
    let n_pairs = (n / 2).max(1);
    let real_msssim = sample_pairs(minority.len(), n_pairs, seeds.real_pairs)
        .and_then(|p| mean_msssim(&minority, &p, &ms))
        .stage("msssim")?;
    let fake_msssim = sample_pairs(synthetic.len(), n_pairs, seeds.fake_pairs)
        .and_then(|p| mean_msssim(&synthetic, &p, &ms))
        .stage("msssim")?;
    let verdict = collapse_delta(real_msssim, fake_msssim).stage("msssim")?;

    let fid_value = {
        let real = gaussian_stats(&extract_features(&minority), cfg.fid_eps)?;
        let fake = gaussian_stats(&extract_features(&synthetic), cfg.fid_eps)?;
        fid(&real, &fake)
    }
    .stage("fid")?;

    let negatives = augment(&minority, &synthetic, majority.len()).stage("classifier")?;
    let mut geo = Rng::new(seeds.geometric);
    let jitter = |imgs: Vec<Image>, geo: &mut Rng| -> Result<Vec<Image>> {
        imgs.iter().map(|img| geometric_augment(img, cfg.geometric, geo.next_u64())).collect()
    };
    let negatives = jitter(negatives, &mut geo).stage("classifier")?;
    let positives = jitter(majority, &mut geo).stage("classifier")?;
    let train_set = LabeledDataset::from_classes(negatives, positives).stage("classifier")?;
    let test_set = LabeledDataset::from_classes(test_neg, test_pos).stage("classifier")?;
    let clf_cfg = ClassifierConfig { seed: seeds.classifier, ..cfg.classifier.clone() };
    let model = train_classifier(&train_set, &clf_cfg).stage("classifier")?;
    let (counts, utility) = evaluate(&model, &test_set).stage("classifier")?;

    let row = ExperimentRow {
        augmentation: cfg.preprocess.tag().to_string(),
        batch_size: cfg.gan.batch_size,
        window: cfg.preprocess.window(),
        threshold: cfg.preprocess.threshold(),
        msssim_delta: verdict.delta,
        fid: fid_value.0,
        accuracy: utility.accuracy,
        precision: utility.precision,
        recall: utility.recall,
        specificity: utility.specificity,
    };
    Ok(ExperimentOutcome { row, real_msssim, fake_msssim, verdict, counts, utility, history: trained.history })
}
