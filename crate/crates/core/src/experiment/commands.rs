use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::config::ExperimentConfig;
use super::files::{read_labels, read_scores, scores_csv, write_file};
use super::log::Log;
use crate::coldstart::{
    apply_scenario, generate_synthetic_graph, sample_cold_entities, Scenario, ScenarioSpec,
};
use crate::eval::{
    per_class_report, scaling_benchmark, BenchTask, EvalReport, ScalingResult, CLASS_NAMES,
};
use crate::graph::{load_graph, save_graph, HeteroGraph, Label};
use crate::models::{load_checkpoint, save_checkpoint, Architecture, Model, ModelKind};
use crate::tensor::Tensor;
use crate::{Error, Result};

fn scenario_path(dir: &Path, s: Scenario) -> PathBuf {
    dir.join(format!("{}.json", s.tag()))
}

/// Writes `train/` and `test/` graph bundles plus one scenario spec per
/// configured scenario, sampled from the test graph.
pub fn cmd_generate(cfg: &ExperimentConfig, out_dir: &Path, log: &Log) -> Result<()> {
    let train = generate_synthetic_graph(&cfg.generator)?;
    let test = generate_synthetic_graph(&cfg.test_generator())?;
    save_graph(&train, out_dir.join("train"))?;
    save_graph(&test, out_dir.join("test"))?;
    let new_offers = sample_cold_entities(&test, &cfg.rates, cfg.scenario_seed);
    for &s in &cfg.scenarios {
        let spec = ScenarioSpec::new(s, cfg.scenario_seed, new_offers.clone());
        write_file(
            &scenario_path(&out_dir.join("scenarios"), s),
            spec.to_json()?,
        )?;
    }
    write_file(&out_dir.join("config.json"), cfg.to_json())?;
    log.event(
        "generate",
        json!({
            "dir": out_dir,
            "sellers": train.num_sellers(),
            "products": train.num_products(),
            "offers": train.num_offers(),
            "edges": train.num_edges(),
            "new_offers": new_offers.len(),
        }),
    );
    Ok(())
}

fn train_model(
    g: &HeteroGraph,
    cfg: &ExperimentConfig,
    kind: ModelKind,
    log: &Log,
) -> Result<Model> {
    let tc = cfg.train_config(kind);
    let arch = Architecture::for_graph(kind, g, tc.sign_hops);
    let mut model = Model::new(arch, tc.mode, tc.seed);
    model.train(g, &tc, &mut |e| {
        log.event(
            "epoch",
            json!({"model": e.model, "head": e.head, "epoch": e.epoch, "loss": e.loss, "seconds": e.seconds}),
        )
    })?;
    Ok(model)
}

/// Trains `kind` on the bundle in `graph_dir` and saves a checkpoint.
pub fn cmd_train(
    graph_dir: &Path,
    cfg: &ExperimentConfig,
    kind: ModelKind,
    out_checkpoint: &Path,
    log: &Log,
) -> Result<Model> {
    let g = load_graph(graph_dir)?;
    let started = Instant::now();
    let model = train_model(&g, cfg, kind, log)?;
    if let Some(dir) = out_checkpoint
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
    {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_checkpoint(&model, out_checkpoint)?;
    log.event(
        "trained",
        json!({"model": kind, "checkpoint": out_checkpoint, "seconds": started.elapsed().as_secs_f64()}),
    );
    Ok(model)
}

/// Scores of one model on one scenario's evaluation set.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreSet {
    pub offers: Vec<usize>,
    pub scores: Tensor<f32>,
    pub labels: Vec<Label>,
}

fn score_scenario(model: &Model, g: &HeteroGraph, spec: &ScenarioSpec) -> Result<ScoreSet> {
    let masked = apply_scenario(g, spec)?;
    let scores = model.score_with(&masked.graph, &masked.eval_offers, &masked.new_sellers)?;
    let labels = masked
        .eval_offers
        .iter()
        .map(|&o| {
            *masked
                .graph
                .label(o)
                .expect("evaluation offers are labeled")
        })
        .collect();
    Ok(ScoreSet {
        offers: masked.eval_offers,
        scores,
        labels,
    })
}

/// Applies the scenario (full data when `scenario` is `None`) and writes the
/// evaluation-set scores to `out_csv`.
pub fn cmd_score(
    checkpoint: &Path,
    graph_dir: &Path,
    scenario: Option<&Path>,
    out_csv: &Path,
    log: &Log,
) -> Result<ScoreSet> {
    let model = load_checkpoint(checkpoint)?;
    let g = load_graph(graph_dir)?;
    let spec = match scenario {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            ScenarioSpec::from_json(&text).map_err(|e| Error::format(p, e.to_string()))?
        }
        None => ScenarioSpec::new(Scenario::Full, 0, Vec::new()),
    };
    let set = score_scenario(&model, &g, &spec)?;
    write_file(out_csv, scores_csv(&set.offers, &set.scores))?;
    log.event(
        "score",
        json!({"model": model.kind(), "scenario": spec.scenario.tag(), "offers": set.offers.len(), "out": out_csv}),
    );
    Ok(set)
}

fn labels_for(
    path: &Path,
    labels: &BTreeMap<usize, Label>,
    offers: &[usize],
) -> Result<Vec<Label>> {
    offers
        .iter()
        .map(|o| {
            labels
                .get(o)
                .copied()
                .ok_or_else(|| Error::format(path, format!("no label for offer {o}")))
        })
        .collect()
}

/// Per-class report for a score file; with `out_prefix` the CSV and JSON
/// are written next to it.
pub fn cmd_eval(
    scores_csv_path: &Path,
    labels_csv: &Path,
    baseline_scores: Option<&Path>,
    out_prefix: Option<&Path>,
) -> Result<EvalReport> {
    let labels = read_labels(labels_csv)?;
    let (offers, scores) = read_scores(scores_csv_path)?;
    let l = labels_for(labels_csv, &labels, &offers)?;
    let baseline = match baseline_scores {
        Some(p) => {
            let (b_offers, b_scores) = read_scores(p)?;
            if b_offers != offers {
                return Err(Error::format(p, "baseline scores cover different offers"));
            }
            Some(per_class_report(&b_scores, &l, None)?)
        }
        None => None,
    };
    let mut report = per_class_report(&scores, &l, baseline.as_ref())?;
    report.model = scores_csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if let Some(prefix) = out_prefix {
        write_file(&prefix.with_extension("csv"), report.to_csv())?;
        write_file(&prefix.with_extension("json"), report.to_json())?;
    }
    Ok(report)
}

/// Train-epoch and inference scaling; writes `bench_<task>.csv` and a fit
/// summary under `out_dir`.
pub fn cmd_bench(cfg: &ExperimentConfig, out_dir: &Path, log: &Log) -> Result<Vec<ScalingResult>> {
    let mut out = Vec::new();
    for task in [BenchTask::TrainEpoch, BenchTask::Inference] {
        let r = scaling_benchmark(
            &cfg.generator,
            &cfg.bench.sizes,
            task,
            &cfg.train_config(ModelKind::Coldguess),
            &cfg.bench.options,
        )?;
        write_file(
            &out_dir.join(format!("bench_{}.csv", task.name())),
            r.to_csv(),
        )?;
        log.event(
            "bench",
            json!({"task": task.name(), "slope": r.fit.slope, "intercept": r.fit.intercept, "r2": r.fit.r2}),
        );
        out.push(r);
    }
    write_file(
        &out_dir.join("bench_fit.json"),
        serde_json::to_string_pretty(&out).expect("bench results serialize"),
    )?;
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
struct Timing {
    model: ModelKind,
    train_seconds: f64,
}

/// Everything `cmd_repro` produced, keyed by model then scenario.
#[derive(Clone, Debug)]
pub struct ReproOutput {
    pub reports: BTreeMap<(ModelKind, Scenario), EvalReport>,
    pub table: String,
    pub delta_table: String,
}

/// Generate, train every configured model, score every scenario and write
/// the comparison tables. Layout under `output_dir`:
///
/// ```text
/// graphs/{train,test}/    scenarios/<tag>.json    checkpoints/<model>.ckpt
/// scores/<model>_<tag>.csv    reports/<model>_<tag>.{csv,json}
/// table.csv    delta_table.csv    timings.json
/// ```
pub fn cmd_repro(cfg: &ExperimentConfig, log: &Log) -> Result<ReproOutput> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    let train = generate_synthetic_graph(&cfg.generator)?;
    let test = generate_synthetic_graph(&cfg.test_generator())?;
    save_graph(&train, out.join("graphs/train"))?;
    save_graph(&test, out.join("graphs/test"))?;
    write_file(&out.join("config.json"), cfg.to_json())?;
    let new_offers = sample_cold_entities(&test, &cfg.rates, cfg.scenario_seed);
    let specs: Vec<ScenarioSpec> = cfg
        .scenarios
        .iter()
        .map(|&s| ScenarioSpec::new(s, cfg.scenario_seed, new_offers.clone()))
        .collect();
    for spec in &specs {
        write_file(
            &scenario_path(&out.join("scenarios"), spec.scenario),
            spec.to_json()?,
        )?;
    }

    let ckpt_dir = out.join("checkpoints");
    fs::create_dir_all(&ckpt_dir).map_err(|e| Error::io(&ckpt_dir, e))?;
    let mut models = Vec::new();
    let mut timings = Vec::new();
    for &kind in &cfg.models {
        let started = Instant::now();
        let model = train_model(&train, cfg, kind, log)?;
        let seconds = started.elapsed().as_secs_f64();
        save_checkpoint(&model, ckpt_dir.join(format!("{}.ckpt", kind.name())))?;
        log.event("trained", json!({"model": kind, "seconds": seconds}));
        timings.push(Timing {
            model: kind,
            train_seconds: seconds,
        });
        models.push(model);
    }

    let mut reports = BTreeMap::new();
    for spec in &specs {
        let tag = spec.scenario.tag();
        let sets: Vec<ScoreSet> = models
            .iter()
            .map(|m| score_scenario(m, &test, spec))
            .collect::<Result<_>>()?;
        let baseline = match cfg.models.iter().position(|&k| k == cfg.baseline) {
            Some(i) => Some(per_class_report(&sets[i].scores, &sets[i].labels, None)?),
            None => None,
        };
        for (model, set) in models.iter().zip(&sets) {
            let kind = model.kind();
            write_file(
                &out.join(format!("scores/{}_{tag}.csv", kind.name())),
                scores_csv(&set.offers, &set.scores),
            )?;
            let mut report = per_class_report(&set.scores, &set.labels, baseline.as_ref())?;
            report.scenario = tag.into();
            report.model = kind.name().into();
            report.seed = cfg.generator.seed;
            let stem = out.join(format!("reports/{}_{tag}", kind.name()));
            write_file(&stem.with_extension("csv"), report.to_csv())?;
            write_file(&stem.with_extension("json"), report.to_json())?;
            log.event(
                "report",
                json!({"model": kind, "scenario": tag, "listings": report.listings, "geomean_auc": report.geomean_auc}),
            );
            reports.insert((kind, spec.scenario), report);
        }
    }

    let table = comparison_table(cfg, &reports, |r| {
        let mut v: Vec<String> = r.auc.iter().map(|a| fmt_opt(*a, 4)).collect();
        v.push(fmt_opt(r.geomean_auc, 4));
        v
    });
    let delta_table = comparison_table(cfg, &reports, |r| match &r.delta_pcp {
        Some(d) => {
            let mut v: Vec<String> = d.iter().map(|a| fmt_opt(*a, 1)).collect();
            v.push(fmt_opt(r.geomean_delta_pcp, 1));
            v
        }
        None => vec!["undefined".into(); CLASS_NAMES.len() + 1],
    });
    write_file(&out.join("table.csv"), &table)?;
    write_file(&out.join("delta_table.csv"), &delta_table)?;
    write_file(
        &out.join("timings.json"),
        serde_json::to_string_pretty(&timings).expect("timings serialize"),
    )?;
    Ok(ReproOutput {
        reports,
        table,
        delta_table,
    })
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{v:.digits$}"))
}

/// `model,class,<scenario tags...>`, one row per model and class plus a
/// geomean row per model.
fn comparison_table(
    cfg: &ExperimentConfig,
    reports: &BTreeMap<(ModelKind, Scenario), EvalReport>,
    cells: impl Fn(&EvalReport) -> Vec<String>,
) -> String {
    let mut out = String::from("model,class");
    for s in &cfg.scenarios {
        out.push(',');
        out.push_str(s.tag());
    }
    out.push('\n');
    for &kind in &cfg.models {
        let columns: Vec<Vec<String>> = cfg
            .scenarios
            .iter()
            .map(|&s| cells(&reports[&(kind, s)]))
            .collect();
        let names = CLASS_NAMES
            .iter()
            .copied()
            .chain(std::iter::once("geomean"));
        for (row, name) in names.enumerate() {
            out.push_str(&format!("{},{name}", kind.name()));
            for col in &columns {
                out.push(',');
                out.push_str(&col[row]);
            }
            out.push('\n');
        }
    }
    out
}
