//! Case-study runs and comparison reports.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gsa_core::analyzers::Warning;
use gsa_digits::casestudy::{
    compare_methods, evaluate_blocks, export_saliency, pixel_sensitivity, rank_pixels, BlockEvaluation, Comparison,
    ComparisonRow, Method, PixelSensitivityMap,
};
use gsa_digits::mnist::PIXELS;
use gsa_digits::{ImageSet, MnistFiles, TinyCnn};
use serde::{Deserialize, Serialize};

use crate::config::{Mode, RunConfig};
use crate::{write_file, CliError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub sensitivity: u64,
    pub blocks: u64,
    pub training: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub hash: String,
    /// `trained` or `loaded`.
    pub source: String,
    pub path: Option<PathBuf>,
    pub test_accuracy: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub method: Method,
    pub maps: Vec<String>,
    pub evaluations: usize,
    pub images_used: Vec<usize>,
    pub constant_images: usize,
    pub warning: Option<Warning>,
    pub sensitivity_seconds: f64,
    pub block_seconds: f64,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub mode: Mode,
    pub config: RunConfig,
    pub seeds: Seeds,
    pub data_dir: PathBuf,
    pub model: ModelRecord,
    pub methods: Vec<MethodRecord>,
    pub comparison: Vec<ComparisonRow>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct CaseStudyOutcome {
    pub manifest: Manifest,
    pub maps: Vec<PixelSensitivityMap>,
    pub blocks: Vec<BlockEvaluation>,
    pub comparison: Comparison,
}

fn check_budget(config: &RunConfig) -> Result<(), CliError> {
    let sa = config.sa_config();
    for &method in &config.methods {
        let projected = sa.evaluations_per_image(method, PIXELS) * config.subset_n;
        if projected > config.budget {
            return Err(gsa_digits::casestudy::CaseStudyError::Budget {
                method,
                projected,
                cap: config.budget,
            }
            .into());
        }
    }
    Ok(())
}

fn obtain_model(config: &RunConfig, train: &ImageSet) -> Result<(TinyCnn, String, Option<PathBuf>), CliError> {
    let cache = config.data.model.as_deref().map(RunConfig::resolve_data_path);
    if let Some(path) = cache.as_ref().filter(|p| p.is_file()) {
        log::info!("loading model from {}", path.display());
        return Ok((TinyCnn::load(path)?, "loaded".into(), cache));
    }
    log::info!("training on {} images", train.len());
    let model = TinyCnn::train(train, &config.train)?;
    let target = cache.clone().unwrap_or_else(|| config.out.join("model.bin"));
    if let Some(dir) = target.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    model.save(&target)?;
    Ok((model, "trained".into(), Some(target)))
}

/// Trains or loads the classifier, then for every method computes the
/// pixel maps, ranks pixels, scores the blocks and writes all artifacts
/// under `config.out`.
pub fn run_casestudy(config: &RunConfig) -> Result<CaseStudyOutcome, CliError> {
    let started = Instant::now();
    config.validate()?;
    check_budget(config)?;
    let data_dir = RunConfig::resolve_data_path(&config.data.dir);
    let files = MnistFiles::in_dir(&data_dir);
    let missing = files.missing();
    if !missing.is_empty() {
        return Err(CliError::MissingData(missing));
    }
    let (train, test) = files.load()?;

    let t = Instant::now();
    let (model, source, model_path) = obtain_model(config, &train)?;
    let test_accuracy = model.accuracy(&test);
    let model_record = ModelRecord {
        hash: model.hash(),
        source,
        path: model_path,
        test_accuracy,
        seconds: t.elapsed().as_secs_f64(),
    };
    log::info!("model test accuracy {test_accuracy:.4}");

    let out = &config.out;
    let sa = config.sa_config();
    let maps_dir = out.join("maps");
    std::fs::create_dir_all(&maps_dir).map_err(|source| CliError::Io {
        path: maps_dir.clone(),
        source,
    })?;
    let mut maps = Vec::new();
    let mut blocks = Vec::new();
    let mut records = Vec::new();
    for &method in &config.methods {
        let t = Instant::now();
        let method_maps = pixel_sensitivity(method, &model, &test, config.subset_n, &sa, config.seed, config.budget)?;
        let sensitivity_seconds = t.elapsed().as_secs_f64();
        log::info!("{method}: {} evaluations in {sensitivity_seconds:.1} s", method_maps[0].evaluations);
        let t = Instant::now();
        for map in &method_maps {
            export_saliency(map, &maps_dir.join(map.label()))?;
            // Morris sigma is ranked alongside mu* as its own contender
            if map.index_name == method.primary_index() || method == Method::Morris {
                let eval = evaluate_blocks(&rank_pixels(map), &train, &test, &config.classifier, config.seed);
                write_file(&out.join("blocks").join(format!("{}.csv", eval.method)), eval.to_csv())?;
                blocks.push(eval);
            }
        }
        let first = &method_maps[0];
        records.push(MethodRecord {
            method,
            maps: method_maps.iter().map(|m| m.label()).collect(),
            evaluations: first.evaluations,
            images_used: first.images_used.clone(),
            constant_images: first.constant_images,
            warning: first.warning,
            sensitivity_seconds,
            block_seconds: t.elapsed().as_secs_f64(),
        });
        maps.extend(method_maps);
    }
    let comparison = compare_methods(&blocks);
    write_file(&out.join("comparison.csv"), comparison.to_csv())?;
    write_file(&out.join("comparison.txt"), comparison.to_text())?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: Mode::Casestudy,
        config: config.clone(),
        seeds: Seeds {
            sensitivity: config.seed,
            blocks: config.seed,
            training: config.train.seed,
        },
        data_dir,
        model: model_record,
        methods: records,
        comparison: comparison.rows.clone(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    write_file(
        &out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(CaseStudyOutcome {
        manifest,
        maps,
        blocks,
        comparison,
    })
}

/// Rebuilds the comparison from the block tables of an earlier run.
pub fn run_report(out: &Path) -> Result<Comparison, CliError> {
    let dir = out.join("blocks");
    let entries = std::fs::read_dir(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut evals = Vec::new();
    for path in &paths {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        evals.push(BlockEvaluation::from_csv(name, &text)?);
    }
    if evals.is_empty() {
        return Err(CliError::NoBlocks(dir));
    }
    let comparison = compare_methods(&evals);
    write_file(&out.join("comparison.csv"), comparison.to_csv())?;
    write_file(&out.join("comparison.txt"), comparison.to_text())?;
    Ok(comparison)
}
