//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
//! if any fails. Criterion 6 trains on the shipped default config and takes
//! a few minutes.

mod common;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use coldguess::coldstart::{
    apply_scenario, generate_synthetic_graph, sample_cold_entities, ColdStartRates,
    GeneratorConfig, Scenario, ScenarioSpec,
};
use coldguess::eval::{roc_auc, scaling_benchmark, BenchTask};
use coldguess::experiment::{cmd_repro, ExperimentConfig, Log};
use coldguess::graph::build_expanded_graph;
use coldguess::models::{load_checkpoint, save_checkpoint, Model, ModelKind, Params, TrainMode};
use coldguess::tensor::{finite_diff_check, Tensor};
use coldguess::NUM_CLASSES;
use common::{
    check_masking, check_nesting_and_idempotence, coldguess_loss, random_graph, smoke_config,
    tiny_arch, toy_graph, Shape,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn shipped_config() -> ExperimentConfig {
    ExperimentConfig::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json"))
        .expect("configs/default.json loads")
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    if took > limit {
        return Err(format!("took {took:.1?}, limit {limit:?}"));
    }
    Ok(took)
}

fn gradients() -> Outcome {
    let started = Instant::now();
    let (mut worst32, mut worst64) = (0.0f64, 0.0f64);
    for seed in 0..3 {
        let g = toy_graph(seed);
        let offers = g.labeled_offers();
        let arch = tiny_arch(&g);
        let p = arch.init(NUM_CLASSES, &mut ChaCha8Rng::seed_from_u64(seed));
        let names = p.names().to_vec();
        let rebuild = |ts: &[Tensor<f64>]| {
            Params::from_entries(names.iter().cloned().zip(ts.iter().cloned()).collect())
        };
        let p64 = p.cast::<f64>().tensors().to_vec();

        let c64 = finite_diff_check(
            |ts| coldguess_loss(&rebuild(ts), &arch, &g, &offers),
            &p64,
            1e-5,
            1e-3,
        )
        .map_err(|e| e.to_string())?;
        let mut first = true;
        let c32 = finite_diff_check(
            |ts| {
                let q = rebuild(ts);
                let (value, grads) = coldguess_loss(&q, &arch, &g, &offers)?;
                if !std::mem::take(&mut first) {
                    return Ok((value, grads));
                }
                let (_, g32) = coldguess_loss(&q.cast::<f32>(), &arch, &g, &offers)?;
                Ok((value, g32.iter().map(|t| t.cast::<f64>()).collect()))
            },
            &p64,
            1e-5,
            1e-3,
        )
        .map_err(|e| e.to_string())?;
        worst64 = worst64.max(c64.max_relative_error);
        worst32 = worst32.max(c32.max_relative_error);
    }
    let took = within(Duration::from_secs(10), started)?;
    let msg = format!(
        "f32 max rel {worst32:.2e} (< 1e-3), f64 max rel {worst64:.2e} (< 1e-5), {took:.1?}"
    );
    if worst32 < 1e-3 && worst64 < 1e-5 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn pairwise_auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let (mut twice, mut pos, mut neg) = (0u64, 0u64, 0u64);
    for &l in labels {
        if l == 1 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li == 1 && lj == 0 {
                twice += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    (pos > 0 && neg > 0).then(|| twice as f64 / (2 * pos * neg) as f64)
}

fn auc_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut defined = 0;
    for i in 0..1000 {
        let n = rng.random_range(1..=200);
        let levels = rng.random_range(1..=n.max(2));
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..levels) as f64 / levels as f64)
            .collect();
        let rate: f64 = rng.random();
        let labels: Vec<u8> = (0..n).map(|_| rng.random_bool(rate) as u8).collect();
        let (got, want) = (roc_auc(&scores, &labels), pairwise_auc(&scores, &labels));
        if got.map(f64::to_bits) != want.map(f64::to_bits) {
            return Err(format!("instance {i} (n = {n}): {got:?} vs {want:?}"));
        }
        defined += want.is_some() as usize;
    }
    let took = within(Duration::from_secs(30), started)?;
    Ok(format!(
        "1000 instances exact ({defined} with both classes), {took:.1?}"
    ))
}

fn ego_sufficiency() -> Outcome {
    let mut worst = 0.0f64;
    let mut max_edges = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = Shape {
            sellers: rng.random_range(20..400),
            products: rng.random_range(20..400),
            offers: rng.random_range(50..3000),
            seller_edges: rng.random_range(0..1500),
            dims: (16, 8, 8),
        };
        let g = random_graph(seed, &shape);
        max_edges = max_edges.max(g.num_edges());
        let k = rng.random_range(1..=g.num_offers().min(512));
        let batch = sample(&mut rng, g.num_offers(), k).into_vec();
        for kind in [ModelKind::Coldguess, ModelKind::RgcnExpanded] {
            let model = Model::for_graph(kind, &g, TrainMode::MultiTask, seed);
            let whole = model.score(&g, &batch).map_err(|e| e.to_string())?;
            let ego = model.score_batch(&g, &batch).map_err(|e| e.to_string())?;
            worst = worst.max(whole.max_abs_diff(&ego));
        }
    }
    let msg = format!("50 graphs up to {max_edges} edges, max |ego - whole| {worst:.1e} (<= 1e-6)");
    if worst <= 1e-6 && max_edges <= 5000 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn expanded_doubles() -> Outcome {
    let mut checked = 0;
    let base = GeneratorConfig::default();
    let mut configs = vec![
        base.clone(),
        GeneratorConfig {
            seed: 43,
            ..base.clone()
        },
    ];
    for (i, edges) in [1_000, 5_000, 10_000, 20_000, 40_000]
        .into_iter()
        .enumerate()
    {
        configs.push(GeneratorConfig {
            seed: i as u64,
            ..base.scaled_to_edges(edges)
        });
    }
    for cfg in &configs {
        let g = generate_synthetic_graph(cfg).map_err(|e| e.to_string())?;
        let eg = build_expanded_graph(&g);
        if eg.num_offer_incident_edges() != 2 * g.num_offers() {
            return Err(format!(
                "seed {}: {} expanded vs {} offers",
                cfg.seed,
                eg.num_offer_incident_edges(),
                g.num_offers()
            ));
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} generated graphs, offer-incident edges exactly 2x"
    ))
}

fn masking() -> Outcome {
    let cfg = shipped_config();
    let mut graphs =
        vec![generate_synthetic_graph(&cfg.test_generator()).map_err(|e| e.to_string())?];
    for seed in 0..4 {
        let small = GeneratorConfig {
            seed,
            ..cfg.generator.scaled_to_edges(3_000)
        };
        graphs.push(generate_synthetic_graph(&small).map_err(|e| e.to_string())?);
    }
    let mut evals = Vec::new();
    for (i, g) in graphs.iter().enumerate() {
        let new_offers =
            sample_cold_entities(g, &ColdStartRates::default(), cfg.scenario_seed + i as u64);
        for s in [
            Scenario::NewOffer,
            Scenario::NewSeller,
            Scenario::NewSellerNewProduct,
        ] {
            let spec = ScenarioSpec::new(s, cfg.scenario_seed, new_offers.clone());
            let m = apply_scenario(g, &spec).map_err(|e| e.to_string())?;
            check_masking(g, &spec, &m).map_err(|e| format!("graph {i} {}: {e}", s.tag()))?;
            if i == 0 {
                evals.push(format!("{} {}", s.tag(), m.eval_offers.len()));
            }
        }
        check_nesting_and_idempotence(g, &new_offers).map_err(|e| format!("graph {i}: {e}"))?;
    }
    Ok(format!(
        "{} graphs; default test eval sizes {}",
        graphs.len(),
        evals.join(", ")
    ))
}

fn directional() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = shipped_config();
    cfg.models = vec![ModelKind::Coldguess, ModelKind::Tabular];
    cfg.baseline = ModelKind::Tabular;
    cfg.output_dir = dir.path().to_path_buf();
    let out = cmd_repro(&cfg, &Log::silent()).map_err(|e| e.to_string())?;
    let took = within(Duration::from_secs(600), started)?;
    let gap = |s: Scenario| -> Result<f64, String> {
        out.reports[&(ModelKind::Coldguess, s)]
            .geomean_delta_pcp
            .ok_or_else(|| format!("{} geomean undefined", s.tag()))
    };
    let (go, gns, gnsnp) = (
        gap(Scenario::Full)?,
        gap(Scenario::NewSeller)?,
        gap(Scenario::NewSellerNewProduct)?,
    );
    let mut msg = String::new();
    for s in Scenario::ALL {
        let r = |k| out.reports[&(k, s)].geomean_auc.unwrap_or(f64::NAN);
        write!(
            msg,
            "{} {:.4}/{:.4}; ",
            s.tag(),
            r(ModelKind::Coldguess),
            r(ModelKind::Tabular)
        )
        .unwrap();
    }
    write!(msg, "gaps G_o {go:+.1} (|.| <= 3), G_ns {gns:+.1} (>= 2), G_nsnp {gnsnp:+.1} (>= 5) pcp, {took:.0?}").unwrap();
    if go.abs() <= 3.0 && gns >= 2.0 && gnsnp >= 5.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn scaling() -> Outcome {
    let cfg = shipped_config();
    let mut msg = String::new();
    let mut ok = true;
    for task in [BenchTask::TrainEpoch, BenchTask::Inference] {
        let r = scaling_benchmark(
            &cfg.generator,
            &cfg.bench.sizes,
            task,
            &cfg.train_config(ModelKind::Coldguess),
            &cfg.bench.options,
        )
        .map_err(|e| e.to_string())?;
        let secs: Vec<String> = r
            .timings
            .iter()
            .map(|t| format!("{}:{:.3}s", t.edges, t.seconds))
            .collect();
        write!(
            msg,
            "{} R2 {:.4} [{}]; ",
            task.name(),
            r.fit.r2,
            secs.join(" ")
        )
        .unwrap();
        ok &= r.fit.r2 >= 0.95;
    }
    msg.push_str("need R2 >= 0.95");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn tree_files(root: &Path, rel: &str) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    let mut names: Vec<_> = fs::read_dir(root.join(rel))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for n in names {
        let path = format!("{rel}/{n}");
        out.push((
            path.clone(),
            fs::read(root.join(&path)).map_err(|e| e.to_string())?,
        ));
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut snapshots = Vec::new();
    for run in ["a", "b"] {
        let cfg = smoke_config(&dir.path().join(run));
        cmd_repro(&cfg, &Log::silent()).map_err(|e| e.to_string())?;
        let root = &cfg.output_dir;
        let mut files = tree_files(root, "scores")?;
        files.extend(tree_files(root, "reports")?);
        for name in ["table.csv", "delta_table.csv"] {
            files.push((
                name.into(),
                fs::read(root.join(name)).map_err(|e| e.to_string())?,
            ));
        }
        snapshots.push(files);
    }
    if snapshots[0].len() != snapshots[1].len() {
        return Err("runs wrote different file sets".into());
    }
    for ((na, a), (nb, b)) in snapshots[0].iter().zip(&snapshots[1]) {
        if na != nb || a != b {
            return Err(format!("{na} differs between runs"));
        }
    }
    Ok(format!(
        "{} score, report and table files byte-identical across two runs",
        snapshots[0].len()
    ))
}

fn checkpoints() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = smoke_config(dir.path());
    let g = generate_synthetic_graph(&cfg.generator).map_err(|e| e.to_string())?;
    let probe: Vec<usize> = (0..g.num_offers()).step_by(7).collect();
    let bits = |t: &Tensor<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let mut rejected = 0;
    for kind in ModelKind::ALL {
        let tc = cfg.train_config(kind);
        let mut model = Model::for_graph(kind, &g, tc.mode, tc.seed);
        model
            .train(&g, &tc, &mut |_| {})
            .map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("{}.ckpt", kind.name()));
        save_checkpoint(&model, &path).map_err(|e| e.to_string())?;
        let back = load_checkpoint(&path).map_err(|e| e.to_string())?;
        let (a, b) = (model.score(&g, &probe), back.score(&g, &probe));
        if bits(&a.map_err(|e| e.to_string())?) != bits(&b.map_err(|e| e.to_string())?) {
            return Err(format!("{} probe scores differ after reload", kind.name()));
        }

        let bytes = fs::read(&path).map_err(|e| e.to_string())?;
        let mut flipped = bytes.clone();
        let at = bytes.len() / 2;
        flipped[at] ^= 0x10;
        let cases = [flipped, bytes[..bytes.len() - 5].to_vec(), b"CGCK".to_vec()];
        for (i, bad) in cases.iter().enumerate() {
            let p = dir.path().join(format!("bad{i}.ckpt"));
            fs::write(&p, bad).map_err(|e| e.to_string())?;
            if load_checkpoint(&p).is_ok() {
                return Err(format!(
                    "{} corrupted checkpoint {i} was accepted",
                    kind.name()
                ));
            }
            rejected += 1;
        }
    }
    Ok(format!(
        "5 models reload bitwise on {} probe offers; {rejected} corrupted files rejected",
        probe.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("gradient check", gradients),
        ("AUC oracle", auc_oracle),
        ("ego-network sufficiency", ego_sufficiency),
        ("expanded graph edge count", expanded_doubles),
        ("scenario masking", masking),
        ("cold-start direction", directional),
        ("linear scaling", scaling),
        ("determinism", determinism),
        ("checkpoint round trip", checkpoints),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let started = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("criterion {n} {name}: PASS ({msg}) [{secs:.1}s]"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({msg}) [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
