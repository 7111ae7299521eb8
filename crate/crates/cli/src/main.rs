//! `relattr`: train attribute rankers, build descriptor databases, query
//! them and run the place-recognition evaluation.
//!
//! Exit codes: 0 success, 2 input/config/format errors, 3 numerical
//! failure, 4 when trial resampling runs out of attempts.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use relattr::data_io::{self, DomainShift, SyntheticSpec};
use relattr::{
    attribute_model::group_by_attribute, build_database, query, run_experiment, DescriptorBuilder,
    Method, PlaceGrid, PrototypeSet, TrainConfig,
};

use crate::config::{parse_grid, ExperimentConfig, Paths};

#[derive(Parser)]
#[command(
    name = "relattr",
    version,
    about = "Relative-attribute place recognition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one linear ranker per attribute found in a pairs file.
    TrainAttributes {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        /// Accepted for reproducible invocations; full-batch training is
        /// deterministic and draws no random numbers.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Describe every image of a feature file and write a database.
    BuildDb {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        prototypes: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// x_min,x_max,y_min,y_max,cols,rows (defaults to the NCLT grid).
        #[arg(long, value_parser = parse_grid)]
        grid: Option<PlaceGrid>,
        #[arg(long, default_value = "")]
        domain_tag: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank database entries against one image; prints `rank,image_id,score`.
    Query {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        models: PathBuf,
        /// Prototype features in the query's domain, with the database's ids.
        #[arg(long)]
        prototypes: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long, default_value = "RRS")]
        method: Method,
        /// Number of results; all entries when omitted.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run the repeated-sampling evaluation described by a config file.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a seeded two-domain synthetic dataset and a matching config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        places: usize,
        #[arg(long, default_value_t = 50)]
        images_per_place: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 6)]
        attributes: usize,
        #[arg(long, default_value_t = 1.0)]
        gain: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        offset: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.5)]
        spread: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials in the generated evaluate config.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Labelled pairs written per attribute to `pairs.csv`.
        #[arg(long, default_value_t = 200)]
        pairs: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .chain()
                .find_map(|e| e.downcast_ref::<relattr::Error>())
                .map_or(2, relattr::Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::TrainAttributes {
            features,
            pairs,
            out,
            c,
            iters,
            lr,
            seed: _,
        } => train_attributes(
            &features,
            &pairs,
            &out,
            TrainConfig {
                learning_rate: lr,
                c,
                max_iterations: iters,
            },
        ),
        Command::BuildDb {
            models,
            prototypes,
            features,
            grid,
            domain_tag,
            out,
        } => {
            let models = data_io::load_models_dir(&models).with_context(|| at(&models))?;
            let protos = load_prototypes(&prototypes)?;
            let images = data_io::load_features(&features).with_context(|| at(features))?;
            let grid = grid.unwrap_or_else(PlaceGrid::nclt);
            let db = build_database(&models, &protos, &images, &grid)?.with_domain_tag(domain_tag);
            data_io::save_database(&out, &db).with_context(|| at(&out))?;
            eprintln!("wrote {} entries to {}", db.len(), out.display());
            Ok(())
        }
        Command::Query {
            db,
            models,
            prototypes,
            features,
            id,
            method,
            k,
        } => {
            let db = data_io::load_database(&db).with_context(|| at(&db))?;
            let models = data_io::load_models_dir(&models).with_context(|| at(&models))?;
            let protos = load_prototypes(&prototypes)?;
            let images = data_io::load_features(&features).with_context(|| at(features))?;
            let image = images
                .iter()
                .find(|f| f.id == id)
                .ok_or_else(|| relattr::Error::Input(format!("no image {id:?} in features")))?;
            let descriptor = DescriptorBuilder::new(&models, &protos)?.describe(image)?;
            let result = query(&db, &descriptor, method, k)?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "rank,image_id,score")?;
            for (r, (id, score)) in result.ranked_ids.iter().zip(&result.scores).enumerate() {
                writeln!(out, "{},{id},{}", r + 1, score.value)?;
            }
            Ok(())
        }
        Command::Evaluate { config } => evaluate(&config),
        Command::Synth {
            out,
            places,
            images_per_place,
            dim,
            attributes,
            gain,
            offset,
            noise,
            spread,
            seed,
            trials,
            pairs,
        } => synth(
            &out,
            &SyntheticSpec {
                num_places: places,
                images_per_place,
                feature_dim: dim,
                num_attributes: attributes,
                domain_shift: DomainShift {
                    monotone_gain: gain,
                    monotone_offset: offset,
                    noise_sigma: noise,
                },
                seed,
                cluster_spread: spread,
            },
            trials,
            pairs,
        ),
    }
}

fn at(path: impl AsRef<Path>) -> String {
    path.as_ref().display().to_string()
}

fn load_prototypes(path: &Path) -> anyhow::Result<PrototypeSet> {
    let protos = data_io::load_features(path).with_context(|| at(path))?;
    Ok(PrototypeSet::new(protos, path.display().to_string())?)
}

fn train_attributes(
    features: &Path,
    pairs: &Path,
    out: &Path,
    config: TrainConfig,
) -> anyhow::Result<()> {
    let corpus = data_io::load_features(features).with_context(|| at(features))?;
    let constraints = data_io::load_pairs(pairs).with_context(|| at(pairs))?;
    if constraints.is_empty() {
        bail!(relattr::Error::Input(format!(
            "{} has no constraints",
            pairs.display()
        )));
    }
    let mut models = Vec::new();
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "attribute,pairwise_accuracy,final_objective")?;
    for (name, group) in group_by_attribute(&constraints) {
        let model = relattr::train(&corpus, &group, &config)
            .with_context(|| format!("training attribute {name:?}"))?;
        writeln!(
            stdout,
            "{name},{},{}",
            model.training_meta.pairwise_accuracy, model.training_meta.final_objective
        )?;
        models.push(model);
    }
    let paths = data_io::save_models(out, &models).with_context(|| at(out))?;
    eprintln!("wrote {} model files to {}", paths.len(), out.display());
    Ok(())
}

fn evaluate(config_path: &Path) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(config_path)?;
    let train = data_io::load_features(&cfg.paths.train_features)
        .with_context(|| at(&cfg.paths.train_features))?;
    let test = data_io::load_features(&cfg.paths.test_features)
        .with_context(|| at(&cfg.paths.test_features))?;
    let needs_models = cfg.methods.iter().any(|m| m.uses_ranks());
    let models = if needs_models {
        data_io::load_models_dir(&cfg.paths.models_dir)
            .with_context(|| at(&cfg.paths.models_dir))?
    } else {
        Vec::new()
    };
    let reports = run_experiment(&train, &test, &models, &cfg.grid, &cfg.settings())?;
    data_io::save_reports(&cfg.paths.output, &reports).with_context(|| at(&cfg.paths.output))?;
    if let Some(csv) = &cfg.paths.trial_csv {
        let file = std::io::BufWriter::new(std::fs::File::create(csv)?);
        data_io::write_trial_csv(file, &reports)?;
    }
    for r in &reports {
        eprintln!(
            "{:<7} mAP {:.3} ± {:.3} over {} trials",
            r.method.as_str(),
            r.mean,
            r.std,
            r.per_trial_map.len()
        );
    }
    Ok(())
}

fn synth(out: &Path, spec: &SyntheticSpec, trials: usize, pairs: usize) -> anyhow::Result<()> {
    let data = data_io::generate_synthetic(spec)?;
    std::fs::create_dir_all(out)?;
    data_io::save_features(out.join("train.csv"), &data.train)
        .with_context(|| at(out.join("train.csv")))?;
    data_io::save_features(out.join("test.csv"), &data.test)
        .with_context(|| at(out.join("test.csv")))?;
    data_io::save_models(out.join("models"), &data.latent_models)
        .with_context(|| at(out.join("models")))?;
    let constraints = data_io::sample_pairs(&data, pairs, spec.seed)?;
    data_io::save_pairs(out.join("pairs.csv"), &constraints)?;
    // first image of every place, in both domains
    let step = spec.images_per_place;
    let pick = |v: &[relattr::FeatureVector]| v.iter().step_by(step).cloned().collect::<Vec<_>>();
    data_io::save_features(out.join("prototypes_train.csv"), &pick(&data.train))?;
    data_io::save_features(out.join("prototypes_test.csv"), &pick(&data.test))?;

    let classes = spec.num_places.min(8);
    let cfg = ExperimentConfig {
        grid: data.grid,
        num_trials: trials,
        classes_per_trial: classes,
        prototypes_per_class: 1,
        methods: Method::ALL.to_vec(),
        seed: spec.seed,
        query_prototypes: Default::default(),
        max_resample_attempts: 100,
        paths: Paths {
            train_features: "train.csv".into(),
            test_features: "test.csv".into(),
            models_dir: "models".into(),
            output: "report.json".into(),
            trial_csv: Some("trials.csv".into()),
        },
    };
    std::fs::write(
        out.join("config.json"),
        serde_json::to_string_pretty(&cfg)? + "\n",
    )?;
    std::fs::write(
        out.join("synth_spec.json"),
        serde_json::to_string_pretty(spec)? + "\n",
    )?;
    eprintln!(
        "wrote {} train and {} test images, {} models to {}",
        data.train.len(),
        data.test.len(),
        data.latent_models.len(),
        out.display()
    );
    Ok(())
}
