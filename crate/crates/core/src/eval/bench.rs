//! Wall-clock scaling of training and inference with graph size.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coldstart::{generate_synthetic_graph, GeneratorConfig};
use crate::models::{Model, ModelKind, TrainConfig};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchTask {
    TrainEpoch,
    Inference,
}

impl BenchTask {
    pub fn name(self) -> &'static str {
        match self {
            Self::TrainEpoch => "train_epoch",
            Self::Inference => "inference",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchOptions {
    pub warmup: usize,
    pub repeats: usize,
    /// Median runs shorter than this are too close to the timer to trust.
    pub min_seconds: f64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            warmup: 1,
            repeats: 3,
            min_seconds: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub requested_edges: usize,
    pub edges: usize,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingResult {
    pub task: String,
    pub timings: Vec<Timing>,
    pub fit: LinearFit,
}

impl ScalingResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("edges,seconds\n");
        for t in &self.timings {
            out.push_str(&format!("{},{:.6}\n", t.edges, t.seconds));
        }
        out
    }
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        r2,
    }
}

/// At least four distinct sizes spanning a factor of eight.
pub fn check_sizes(sizes: &[usize]) -> Result<()> {
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("benchmark sizes contain duplicates".into()));
    }
    if sorted.len() < 4 {
        return Err(Error::Config(format!(
            "need at least 4 sizes, got {}",
            sorted.len()
        )));
    }
    if sorted[0] == 0 || sorted[sorted.len() - 1] < 8 * sorted[0] {
        return Err(Error::Config(
            "sizes must span at least a factor of 8".into(),
        ));
    }
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Times `run` on the state built by `setup` for each size. `setup` returns
/// the realized edge count, which is what the fit uses.
pub fn measure_scaling<S>(
    task: &str,
    sizes: &[usize],
    opts: &BenchOptions,
    mut setup: impl FnMut(usize) -> Result<(usize, S)>,
    mut run: impl FnMut(&mut S) -> Result<()>,
) -> Result<ScalingResult> {
    check_sizes(sizes)?;
    if opts.repeats == 0 {
        return Err(Error::Config("repeats must be positive".into()));
    }
    let mut timings = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let (edges, mut state) = setup(size)?;
        for _ in 0..opts.warmup {
            run(&mut state)?;
        }
        let mut samples = Vec::with_capacity(opts.repeats);
        for _ in 0..opts.repeats {
            let t = Instant::now();
            run(&mut state)?;
            samples.push(t.elapsed().as_secs_f64());
        }
        let seconds = median(samples);
        if seconds < opts.min_seconds {
            return Err(Error::Config(format!(
                "size {size} ran in {seconds:.2e} s, below the {:.0e} s timer floor",
                opts.min_seconds
            )));
        }
        timings.push(Timing {
            requested_edges: size,
            edges,
            seconds,
        });
    }
    let xs: Vec<f64> = timings.iter().map(|t| t.edges as f64).collect();
    let ys: Vec<f64> = timings.iter().map(|t| t.seconds).collect();
    Ok(ScalingResult {
        task: task.into(),
        fit: linear_fit(&xs, &ys),
        timings,
    })
}

/// ColdGuess epoch or whole-graph inference time on graphs generated from
/// `base` rescaled to each edge count.
pub fn scaling_benchmark(
    base: &GeneratorConfig,
    sizes: &[usize],
    task: BenchTask,
    train: &TrainConfig,
    opts: &BenchOptions,
) -> Result<ScalingResult> {
    let one_epoch = TrainConfig {
        epochs: 1,
        ..train.clone()
    };
    measure_scaling(
        task.name(),
        sizes,
        opts,
        |size| {
            let g = generate_synthetic_graph(&base.scaled_to_edges(size))?;
            let model = Model::for_graph(ModelKind::Coldguess, &g, train.mode, train.seed);
            let offers = g.labeled_offers();
            Ok((g.num_edges(), (g, model, offers)))
        },
        |(g, model, offers)| {
            match task {
                BenchTask::TrainEpoch => {
                    model.train(g, &one_epoch, &mut |_| {})?;
                }
                BenchTask::Inference => {
                    model.score(g, offers)?;
                }
            }
            Ok(())
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_a_line() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 0.5).collect();
        let f = linear_fit(&xs, &ys);
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept - 0.5).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sizes_are_validated() {
        assert!(check_sizes(&[10, 20, 40, 80]).is_ok());
        assert!(check_sizes(&[10, 20, 20, 40, 80]).is_err());
        assert!(check_sizes(&[10, 20, 80]).is_err());
        assert!(check_sizes(&[10, 20, 40, 70]).is_err());
    }

    #[test]
    fn constant_task_has_flat_slope() {
        let r = measure_scaling(
            "sleep",
            &[1_000, 2_000, 4_000, 8_000],
            &BenchOptions::default(),
            |n| Ok((n, ())),
            |_| {
                std::thread::sleep(std::time::Duration::from_millis(2));
                Ok(())
            },
        )
        .unwrap();
        // a 2 ms task growing by 1 ms over the range would have slope 1.4e-7
        assert!(r.fit.slope.abs() < 1.5e-7, "{:?}", r.fit);
        assert_eq!(r.to_csv().lines().count(), 5);
    }

    #[test]
    fn too_fast_sizes_are_rejected() {
        let r = measure_scaling(
            "noop",
            &[1, 2, 4, 8],
            &BenchOptions::default(),
            |n| Ok((n, ())),
            |_| Ok(()),
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
