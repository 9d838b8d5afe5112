//! End-to-end orchestration: ingest, factorize, project, screen for
//! non-Gaussianity, discover, test residual independence, and export every
//! stage's artifact. Failures carry their stage name and leave the artifacts
//! produced so far on disk, with the manifest marking where the run stopped.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use kgcausal::kg::{self, AdjacencyTensor, KgIndex};
use kgcausal::lingam::direct::{discover, DirectParams};
use kgcausal::lingam::ica::{ica_lingam, IcaParams};
use kgcausal::lingam::{to_dot, CausalModel, CausalReport, DataMatrix};
use kgcausal::projection::{project, select_relations, ProjectionMatrix};
use kgcausal::stats::{gaussianity_test, residual_independence};
use kgcausal::tucker::{load_checkpoint, save_checkpoint, train, TrainConfig, TuckerModel};
use kgcausal::Error;

use crate::config::PipelineConfig;

/// An error annotated with the pipeline stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

/// Process exit code for an error: 2 for input and configuration problems,
/// 1 for analysis-level failures.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::MalformedLine { .. }
        | Error::EmptyInput
        | Error::OutOfBounds { .. }
        | Error::DimMismatch { .. }
        | Error::DuplicateRelation { .. }
        | Error::TooMany { .. }
        | Error::InvalidValue(_)
        | Error::Io(_)
        | Error::Json(_) => 2,
        Error::Degenerate(_)
        | Error::ConstantRegressor { .. }
        | Error::NumericalFailure(_)
        | Error::SingularWhitening
        | Error::ConstantVariable { .. }
        | Error::ZeroDiagonal
        | Error::NearGaussianPredictor { .. } => 1,
    }
}

#[derive(Debug, Clone)]
pub struct StageRecord {
    pub name: &'static str,
    pub status: &'static str, // ok | skipped | failed
    pub seconds: f64,
    pub artifacts: Vec<String>,
    pub note: Option<String>,
}

/// Summary of a pipeline run: stage statuses and timings plus the headline
/// numbers a caller wants without re-reading the artifacts.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub stages: Vec<StageRecord>,
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_triples: usize,
    pub duplicates: usize,
    pub inverse_warnings: usize,
    pub direct_order: Option<Vec<usize>>,
    pub ica_converged: Option<bool>,
    pub ica_iterations: Option<usize>,
    pub mean_p: Option<f64>,
    pub non_gaussian: Option<bool>,
}

impl RunReport {
    pub fn stage_seconds(&self, name: &str) -> Option<f64> {
        self.stages
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.seconds)
    }
}

struct Tracker {
    out_dir: PathBuf,
    stages: Vec<StageRecord>,
    config_echo: Vec<(String, String)>,
}

impl Tracker {
    fn record(
        &mut self,
        name: &'static str,
        status: &'static str,
        started: Instant,
        artifacts: Vec<String>,
        note: Option<String>,
    ) {
        self.stages.push(StageRecord {
            name,
            status,
            seconds: started.elapsed().as_secs_f64(),
            artifacts,
            note,
        });
    }

    fn write_manifest(&self, failed_stage: Option<&str>) -> std::io::Result<()> {
        let mut doc = serde_json::Map::new();
        let mut config = serde_json::Map::new();
        for (k, v) in &self.config_echo {
            config.insert(k.clone(), serde_json::Value::String(v.clone()));
        }
        doc.insert("config".into(), serde_json::Value::Object(config));
        let stages: Vec<serde_json::Value> = self
            .stages
            .iter()
            .map(|s| {
                let mut m = serde_json::Map::new();
                m.insert("name".into(), s.name.into());
                m.insert("status".into(), s.status.into());
                m.insert(
                    "artifacts".into(),
                    serde_json::Value::Array(
                        s.artifacts.iter().map(|a| a.as_str().into()).collect(),
                    ),
                );
                if let Some(note) = &s.note {
                    m.insert("note".into(), note.as_str().into());
                }
                serde_json::Value::Object(m)
            })
            .collect();
        doc.insert("stages".into(), serde_json::Value::Array(stages));
        doc.insert(
            "failed_stage".into(),
            failed_stage.map_or(serde_json::Value::Null, |s| s.into()),
        );
        let path = self.out_dir.join("MANIFEST.json");
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, &serde_json::Value::Object(doc))?;
        writeln!(f)?;
        Ok(())
    }

    fn write_timings(&self) -> std::io::Result<()> {
        let mut f = BufWriter::new(File::create(self.out_dir.join("timings.csv"))?);
        writeln!(f, "stage,status,seconds")?;
        for s in &self.stages {
            writeln!(f, "{},{},{:.6}", s.name, s.status, s.seconds)?;
        }
        Ok(())
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn ingest(
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<(KgIndex, AdjacencyTensor, usize, usize), Error> {
    let train_path = cfg.data_dir.join("train.txt");
    let file = File::open(&train_path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", train_path.display()),
        ))
    })?;
    let mut index = KgIndex::new();
    let outcome = kg::parse_triples(BufReader::new(file), &mut index)?;
    // extra splits only extend the dictionaries; the tensor is train-only
    for split in ["valid.txt", "test.txt"] {
        let path = cfg.data_dir.join(split);
        if path.exists() {
            let _ = kg::parse_triples(BufReader::new(File::open(path)?), &mut index)?;
        }
    }
    let tensor = kg::build_tensor(&outcome.triples, &index)?;
    let warnings = kg::inverse_relation_warnings(&tensor);
    for w in &warnings {
        eprintln!(
            "warning: relation {} looks like the inverse of relation {} ({:.0}% reversed)",
            w.rel,
            w.inverse,
            w.fraction * 100.0
        );
    }
    let mut f = BufWriter::new(File::create(out_dir.join("entities.tsv"))?);
    index.write_entities_tsv(&mut f)?;
    let mut f = BufWriter::new(File::create(out_dir.join("relations.tsv"))?);
    index.write_relations_tsv(&mut f)?;
    Ok((index, tensor, outcome.duplicates, warnings.len()))
}

fn train_or_load(
    cfg: &PipelineConfig,
    tensor: &AdjacencyTensor,
    out_dir: &Path,
) -> Result<(TuckerModel, bool), Error> {
    let model_path = out_dir.join("model.json");
    if cfg.skip_train {
        let (model, _, _) = load_checkpoint(BufReader::new(File::open(&model_path)?))?;
        if model.d_e() != cfg.d_e || model.n_r() != tensor.n_r() {
            return Err(Error::InvalidValue(format!(
                "checkpoint dims ({} entities x {}, {} relations x {}) do not match the requested configuration",
                model.n_e(),
                model.d_e(),
                model.n_r(),
                model.d_r(),
            )));
        }
        return Ok((model, true));
    }
    let train_cfg = TrainConfig {
        d_e: cfg.d_e,
        d_r: cfg.d_r,
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        negatives_per_positive: cfg.negatives,
        seed: cfg.seed,
        l2: cfg.l2,
    };
    let outcome = train(tensor, &train_cfg)?;
    let f = BufWriter::new(File::create(&model_path)?);
    save_checkpoint(&outcome.model, cfg.seed, cfg.epochs, f)?;
    Ok((outcome.model, false))
}

fn export_causal(
    out_dir: &Path,
    basename: &str,
    model: &CausalModel,
    labels: &[String],
    edge_threshold: f64,
    convergence: Option<(bool, usize)>,
) -> Result<Vec<String>, Error> {
    let mut report = CausalReport::new(model, labels);
    if let Some((converged, iterations)) = convergence {
        report = report.with_convergence(converged, iterations);
    }
    let json_name = format!("{basename}.json");
    let dot_name = format!("{basename}.dot");
    write_text(&out_dir.join(&json_name), &report.to_json()?)?;
    write_text(&out_dir.join(&dot_name), &to_dot(model, labels, edge_threshold))?;
    Ok(vec![json_name, dot_name])
}

/// Runs the full pipeline. Every stage's artifact is written as soon as the
/// stage finishes; on failure the manifest still lands, naming the stage that
/// failed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport, StageError> {
    let fail = |stage: &'static str| move |error: Error| StageError { stage, error };

    cfg.validate().map_err(fail("config"))?;
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| StageError { stage: "config", error: e.into() })?;

    let mut tracker = Tracker {
        out_dir: cfg.out_dir.clone(),
        stages: Vec::new(),
        config_echo: cfg.echo(),
    };

    macro_rules! stage {
        ($name:literal, $artifacts:expr, $body:expr) => {{
            let started = Instant::now();
            match $body {
                Ok(value) => {
                    tracker.record($name, "ok", started, $artifacts, None);
                    value
                }
                Err(error) => {
                    tracker.record($name, "failed", started, vec![], Some(error.to_string()));
                    let _ = tracker.write_manifest(Some($name));
                    let _ = tracker.write_timings();
                    return Err(StageError { stage: $name, error });
                }
            }
        }};
    }

    let (index, tensor, duplicates, inverse_warnings) = stage!(
        "ingest",
        vec!["entities.tsv".into(), "relations.tsv".into()],
        ingest(cfg, &cfg.out_dir)
    );

    let (model, loaded) = stage!(
        "train",
        vec!["model.json".into()],
        train_or_load(cfg, &tensor, &cfg.out_dir)
    );
    if loaded {
        if let Some(last) = tracker.stages.last_mut() {
            last.status = "skipped";
            last.note = Some("loaded existing checkpoint".into());
        }
    }

    let relation_ids = stage!(
        "select",
        vec![],
        select_relations(&index, cfg.w_r_count, cfg.relation_policy, &tensor)
    );

    let projection: ProjectionMatrix = stage!("project", vec!["q_matrix.csv".into()], {
        project(&model, &relation_ids).and_then(|pm| {
            let f = BufWriter::new(File::create(cfg.out_dir.join("q_matrix.csv"))?);
            pm.write_csv(f)?;
            Ok(pm)
        })
    });

    let data: DataMatrix = stage!("prepare", vec![], projection.to_data_matrix());

    // the kurtosis screen needs enough samples; with very few selected
    // relations it is recorded as skipped rather than failing the run
    let mut non_gaussian = None;
    {
        let started = Instant::now();
        if data.n() >= 20 {
            match gaussianity_test(&data, cfg.alpha) {
                Ok(report) => {
                    non_gaussian = Some(report.non_gaussian);
                    let json = serde_json::to_string_pretty(&report)
                        .map_err(Error::from)
                        .map_err(fail("gaussianity"))?;
                    write_text(&cfg.out_dir.join("kurtosis.json"), &json)
                        .map_err(fail("gaussianity"))?;
                    tracker.record(
                        "gaussianity",
                        "ok",
                        started,
                        vec!["kurtosis.json".into()],
                        None,
                    );
                }
                Err(error) => {
                    tracker.record(
                        "gaussianity",
                        "failed",
                        started,
                        vec![],
                        Some(error.to_string()),
                    );
                    let _ = tracker.write_manifest(Some("gaussianity"));
                    let _ = tracker.write_timings();
                    return Err(StageError { stage: "gaussianity", error });
                }
            }
        } else {
            let note = format!(
                "skipped: kurtosis test needs >= 20 samples, have {}",
                data.n()
            );
            write_text(
                &cfg.out_dir.join("kurtosis.json"),
                &format!("{{\n  \"skipped\": true,\n  \"reason\": \"{note}\"\n}}\n"),
            )
            .map_err(fail("gaussianity"))?;
            tracker.record(
                "gaussianity",
                "skipped",
                started,
                vec!["kurtosis.json".into()],
                Some(note),
            );
        }
    }

    let mut direct_model: Option<CausalModel> = None;
    if cfg.algo.runs_direct() {
        let params = DirectParams {
            tau: cfg.tau,
            sigma_rbf: None,
            sample_cap: cfg.sample_cap,
            seed: cfg.seed,
        };
        let model = stage!(
            "discover_direct",
            vec!["causal_direct.json".into(), "causal_direct.dot".into()],
            discover(&data, &params).and_then(|m| {
                export_causal(
                    &cfg.out_dir,
                    "causal_direct",
                    &m,
                    data.labels(),
                    cfg.edge_threshold,
                    None,
                )?;
                Ok(m)
            })
        );
        direct_model = Some(model);
    }

    let mut ica_converged = None;
    let mut ica_iterations = None;
    let mut ica_model: Option<CausalModel> = None;
    if cfg.algo.runs_ica() {
        let params = IcaParams {
            max_iter: cfg.ica_max_iter,
            tol: cfg.ica_tol,
            seed: cfg.seed,
        };
        let (model, ica) = stage!(
            "discover_ica",
            vec!["causal_ica.json".into(), "causal_ica.dot".into()],
            ica_lingam(&data, &params).and_then(|(m, ica)| {
                export_causal(
                    &cfg.out_dir,
                    "causal_ica",
                    &m,
                    data.labels(),
                    cfg.edge_threshold,
                    Some((ica.converged, ica.iterations)),
                )?;
                Ok((m, ica))
            })
        );
        ica_converged = Some(ica.converged);
        ica_iterations = Some(ica.iterations);
        ica_model = Some(model);
    }

    // residual independence on the primary estimator's residuals
    let mut mean_p = None;
    {
        let residual_source = direct_model.as_ref().or(ica_model.as_ref());
        let started = Instant::now();
        if let Some(m) = residual_source {
            if data.n() >= 20 {
                match residual_independence(&m.residuals, cfg.alpha) {
                    Ok(report) => {
                        mean_p = Some(report.mean_p);
                        let json = serde_json::to_string_pretty(&report)
                            .map_err(Error::from)
                            .map_err(fail("independence"))?;
                        write_text(&cfg.out_dir.join("independence.json"), &json)
                            .map_err(fail("independence"))?;
                        tracker.record(
                            "independence",
                            "ok",
                            started,
                            vec!["independence.json".into()],
                            None,
                        );
                    }
                    Err(error) => {
                        tracker.record(
                            "independence",
                            "failed",
                            started,
                            vec![],
                            Some(error.to_string()),
                        );
                        let _ = tracker.write_manifest(Some("independence"));
                        let _ = tracker.write_timings();
                        return Err(StageError { stage: "independence", error });
                    }
                }
            } else {
                let note = format!(
                    "skipped: independence test needs >= 20 samples, have {}",
                    data.n()
                );
                write_text(
                    &cfg.out_dir.join("independence.json"),
                    &format!("{{\n  \"skipped\": true,\n  \"reason\": \"{note}\"\n}}\n"),
                )
                .map_err(fail("independence"))?;
                tracker.record(
                    "independence",
                    "skipped",
                    started,
                    vec!["independence.json".into()],
                    Some(note),
                );
            }
        }
    }

    let started = Instant::now();
    tracker.record(
        "export",
        "ok",
        started,
        vec!["MANIFEST.json".into(), "timings.csv".into()],
        None,
    );
    tracker.write_manifest(None).map_err(Error::from).map_err(fail("export"))?;
    tracker.write_timings().map_err(Error::from).map_err(fail("export"))?;

    Ok(RunReport {
        out_dir: cfg.out_dir.clone(),
        stages: tracker.stages,
        n_entities: index.n_e(),
        n_relations: index.n_r(),
        n_triples: tensor.len(),
        duplicates,
        inverse_warnings,
        direct_order: direct_model.map(|m| m.order),
        ica_converged,
        ica_iterations,
        mean_p,
        non_gaussian,
    })
}
