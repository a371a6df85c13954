//! The `compare` experiment: every algorithm on every image, one CSV row per
//! (image, algorithm), per-algorithm averages, and optional traces.
//!
//! Columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `set` | `within` (each image's own codebook) or `universal` |
//! | `image` | file stem, or `average` |
//! | `algorithm` | `lbg`, `ap`, `iap`, `iap-lbg` |
//! | `codebook_from` | stem of the image the codebook was trained on |
//! | `size` | codewords |
//! | `psnr`, `psnr_full` | dB at 2 decimals and at full precision |
//! | `psnr_mean`, `psnr_mean_full` | mean over every LBG restart; equals `psnr` otherwise |
//! | `iterations` | LBG iterations (mean over restarts for `lbg`) or message-passing iterations |
//! | `converged` | whether message passing settled; empty for `lbg` |
//! | `param` | `rs`, the median-preference scale, or the median preference |
//!
//! For `lbg`, `psnr` is the mean over `--seeds` experiments of the best of
//! `--runs` restarts. A PSNR of `inf` marks a lossless reconstruction.

use std::path::{Path, PathBuf};

use iapvq::ap::{run_ap, APResult};
use iapvq::imageio::{codebook_psnr, extract_blocks, BlockGeometry, Image};
use iapvq::lbg::{best_run, lbg_refine, lbg_restarts};
use iapvq::pipeline::{exemplar_stage, ExemplarStage, PreferenceFamily};
use iapvq::similarity::{apply_preference, build_similarity, PreferenceMode, SimilarityMatrix};
use iapvq::{Codebook, TrainingSet};

use crate::args::{Algo, ApMode, CompareArgs};
use crate::commands::{fit_blocks, Outcome};
use crate::error::{CliError, CliResult};
use crate::input::{load_image, write_bytes};
use crate::manifest::absolute;

pub const COLUMNS: [&str; 12] = [
    "set",
    "image",
    "algorithm",
    "codebook_from",
    "size",
    "psnr",
    "psnr_full",
    "psnr_mean",
    "psnr_mean_full",
    "iterations",
    "converged",
    "param",
];

pub fn fmt_2dp(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.2}")
    }
}

pub fn fmt_full(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        v.to_string()
    }
}

struct Loaded {
    stem: String,
    img: Image,
    geom: BlockGeometry,
    ts: TrainingSet,
}

struct Trained {
    /// Codebooks whose PSNRs are averaged into `psnr`.
    best: Vec<Codebook>,
    /// Codebooks whose PSNRs are averaged into `psnr_mean`.
    all: Vec<Codebook>,
    iterations: f64,
    converged: Option<bool>,
    param: Option<f64>,
}

struct Row {
    set: &'static str,
    image: String,
    algo: Algo,
    from: String,
    size: Option<usize>,
    psnr: f64,
    psnr_mean: f64,
    iterations: f64,
    converged: Option<bool>,
    param: Option<f64>,
}

impl Row {
    fn record(&self) -> Vec<String> {
        vec![
            self.set.to_string(),
            self.image.clone(),
            self.algo.name().to_string(),
            self.from.clone(),
            self.size.map(|s| s.to_string()).unwrap_or_default(),
            fmt_2dp(self.psnr),
            fmt_full(self.psnr),
            fmt_2dp(self.psnr_mean),
            fmt_full(self.psnr_mean),
            fmt_full(self.iterations),
            self.converged.map(|c| c.to_string()).unwrap_or_default(),
            self.param.map(fmt_full).unwrap_or_default(),
        ]
    }
}

fn evaluate(t: &Trained, on: &Loaded) -> CliResult<(f64, f64)> {
    let mean = |cbs: &[Codebook]| -> CliResult<f64> {
        let mut total = 0.0;
        for cb in cbs {
            total += codebook_psnr(&on.img, cb, &on.geom)?;
        }
        Ok(total / cbs.len() as f64)
    };
    Ok((mean(&t.best)?, mean(&t.all)?))
}

struct Tracer<'a> {
    dir: Option<&'a Path>,
    written: Vec<PathBuf>,
}

impl Tracer<'_> {
    fn energy(&mut self, stem: &str, algo: Algo, res: &APResult) -> CliResult<()> {
        let Some(dir) = self.dir else { return Ok(()) };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["iteration", "net_similarity", "exemplars"]).expect("in-memory write");
        for (k, (e, c)) in res.energy_trace.iter().zip(&res.exemplar_counts).enumerate() {
            let e = e.map(fmt_full).unwrap_or_default();
            w.write_record([(k + 1).to_string(), e, c.to_string()]).expect("in-memory write");
        }
        self.save(dir.join(format!("{stem}_{}_energy.csv", algo.name())), w)
    }

    fn distortion(&mut self, stem: &str, algo: Algo, trace: &[f64]) -> CliResult<()> {
        let Some(dir) = self.dir else { return Ok(()) };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["iteration", "distortion"]).expect("in-memory write");
        for (k, d) in trace.iter().enumerate() {
            w.write_record([(k + 1).to_string(), fmt_full(*d)]).expect("in-memory write");
        }
        self.save(dir.join(format!("{stem}_{}_distortion.csv", algo.name())), w)
    }

    fn save(&mut self, path: PathBuf, w: csv::Writer<Vec<u8>>) -> CliResult<()> {
        let bytes = w.into_inner().expect("in-memory flush");
        write_bytes(&path, &bytes)?;
        self.written.push(path);
        Ok(())
    }
}

/// A cold, traced run at an already chosen preference.
fn traced_run(sim: &SimilarityMatrix, mode: PreferenceMode, a: &CompareArgs) -> CliResult<APResult> {
    Ok(run_ap(&apply_preference(sim, mode)?, &a.ap.ap_config(true))?)
}

fn train_image(a: &CompareArgs, l: &Loaded, tracer: &mut Tracer) -> CliResult<Vec<Trained>> {
    let lbg_cfg = |seed: u64| a.lbg.config(seed);
    let pipeline = a.ap.pipeline_config(a.size, lbg_cfg(a.seed));
    let mut iap_stage: Option<ExemplarStage> = None;
    let mut out = Vec::with_capacity(a.algos.len());
    let tracing = tracer.dir.is_some();
    for &algo in &a.algos {
        let trained = match algo {
            Algo::Lbg => {
                let mut best = Vec::new();
                let mut all = Vec::new();
                let mut iterations = 0usize;
                for s in 0..a.seeds {
                    let base = a.seed.wrapping_add((s * a.runs) as u64);
                    let runs = lbg_restarts(&l.ts, a.size, &lbg_cfg(base), a.runs)?;
                    let b = best_run(&runs).expect("at least one run");
                    if s == 0 {
                        tracer.distortion(&l.stem, algo, &runs[b].distortion_trace)?;
                    }
                    best.push(runs[b].codebook.clone());
                    for r in runs {
                        iterations += r.iterations_run;
                        all.push(r.codebook);
                    }
                }
                Trained {
                    iterations: iterations as f64 / all.len() as f64,
                    best,
                    all,
                    converged: None,
                    param: None,
                }
            }
            Algo::Ap => match a.ap_mode {
                ApMode::Median => {
                    let sim = build_similarity(&l.ts)?;
                    let median = sim.median_off_diagonal();
                    let res = traced_run(&sim, PreferenceMode::Uniform(None), a)?;
                    tracer.energy(&l.stem, algo, &res)?;
                    let cb = res.codebook(&l.ts)?;
                    Trained {
                        best: vec![cb.clone()],
                        all: vec![cb],
                        iterations: res.iterations_run as f64,
                        converged: Some(res.converged),
                        param: Some(median),
                    }
                }
                ApMode::Tuned => {
                    let stage = exemplar_stage(&l.ts, PreferenceFamily::UniformMedian, &pipeline)?;
                    if tracing {
                        let sim = build_similarity(&l.ts)?;
                        let pref = stage.search.scale * sim.median_off_diagonal();
                        tracer.energy(&l.stem, algo, &traced_run(&sim, PreferenceMode::Uniform(Some(pref)), a)?)?;
                    }
                    exemplar_row(&stage)
                }
            },
            Algo::Iap | Algo::IapLbg => {
                if iap_stage.is_none() {
                    let stage = exemplar_stage(&l.ts, PreferenceFamily::NetworkSupport, &pipeline)?;
                    if tracing && a.algos.contains(&Algo::Iap) {
                        let sim = build_similarity(&l.ts)?;
                        let mode = PreferenceMode::NetworkSupport(stage.search.scale);
                        tracer.energy(&l.stem, Algo::Iap, &traced_run(&sim, mode, a)?)?;
                    }
                    iap_stage = Some(stage);
                }
                let stage = iap_stage.as_ref().expect("stage computed above");
                if algo == Algo::Iap {
                    exemplar_row(stage)
                } else {
                    let lbg = lbg_refine(&l.ts, &stage.codebook, &lbg_cfg(a.seed))?;
                    tracer.distortion(&l.stem, algo, &lbg.distortion_trace)?;
                    Trained {
                        best: vec![lbg.codebook.clone()],
                        all: vec![lbg.codebook],
                        iterations: lbg.iterations_run as f64,
                        converged: Some(stage.search.result.converged),
                        param: Some(stage.search.scale),
                    }
                }
            }
        };
        out.push(trained);
    }
    Ok(out)
}

fn exemplar_row(stage: &ExemplarStage) -> Trained {
    Trained {
        best: vec![stage.codebook.clone()],
        all: vec![stage.codebook.clone()],
        iterations: stage.search.result.iterations_run as f64,
        converged: Some(stage.search.result.converged),
        param: Some(stage.search.scale),
    }
}

fn average_rows(set: &'static str, rows: &[Row], algos: &[Algo], from: &str) -> Vec<Row> {
    algos
        .iter()
        .map(|&algo| {
            let mine: Vec<&Row> = rows.iter().filter(|r| r.algo == algo).collect();
            let n = mine.len() as f64;
            let size = mine[0].size.filter(|s| mine.iter().all(|r| r.size == Some(*s)));
            Row {
                set,
                image: "average".into(),
                algo,
                from: from.to_string(),
                size,
                psnr: mine.iter().map(|r| r.psnr).sum::<f64>() / n,
                psnr_mean: mine.iter().map(|r| r.psnr_mean).sum::<f64>() / n,
                iterations: mine.iter().map(|r| r.iterations).sum::<f64>() / n,
                converged: None,
                param: None,
            }
        })
        .collect()
}

pub fn compare(a: &CompareArgs) -> CliResult<Outcome> {
    if a.algos.is_empty() {
        return Err(CliError::Usage("--algos is empty".into()));
    }
    if a.algos.iter().enumerate().any(|(k, x)| a.algos[..k].contains(x)) {
        return Err(CliError::Usage("--algos lists an algorithm twice".into()));
    }
    if a.size == 0 || a.seeds == 0 || a.runs == 0 {
        return Err(CliError::Usage("--size, --seeds and --runs must be at least 1".into()));
    }
    let universal = match &a.universal {
        None => None,
        Some(u) => Some(
            a.images
                .iter()
                .position(|p| absolute(p) == absolute(u))
                .ok_or_else(|| CliError::Usage(format!("--universal {} is not among the images", u.display())))?,
        ),
    };

    let mut loaded = Vec::with_capacity(a.images.len());
    for path in &a.images {
        let img = load_image(path)?;
        let geom = fit_blocks(&img, a.block, path)?;
        let ts = extract_blocks(&img, &geom)?;
        if a.size > ts.len() {
            return Err(CliError::Usage(format!(
                "{}: --size {} exceeds its {} blocks",
                path.display(),
                a.size,
                ts.len()
            )));
        }
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        loaded.push(Loaded { stem, img, geom, ts });
    }

    let mut tracer = Tracer {
        dir: a.trace_dir.as_deref(),
        written: Vec::new(),
    };
    let mut trained = Vec::with_capacity(loaded.len());
    for l in &loaded {
        trained.push(train_image(a, l, &mut tracer)?);
    }

    let mut rows = Vec::new();
    let mut within = Vec::new();
    for (l, per_algo) in loaded.iter().zip(&trained) {
        for (&algo, t) in a.algos.iter().zip(per_algo) {
            let (psnr, psnr_mean) = evaluate(t, l)?;
            within.push(Row {
                set: "within",
                image: l.stem.clone(),
                algo,
                from: l.stem.clone(),
                size: Some(t.best[0].len()),
                psnr,
                psnr_mean,
                iterations: t.iterations,
                converged: t.converged,
                param: t.param,
            });
        }
    }
    let within_avg = average_rows("within", &within, &a.algos, "");
    rows.extend(within);
    rows.extend(within_avg);

    if let Some(u) = universal {
        let from = &loaded[u].stem;
        let mut uni = Vec::new();
        for l in &loaded {
            for (&algo, t) in a.algos.iter().zip(&trained[u]) {
                let (psnr, psnr_mean) = evaluate(t, l)?;
                uni.push(Row {
                    set: "universal",
                    image: l.stem.clone(),
                    algo,
                    from: from.clone(),
                    size: Some(t.best[0].len()),
                    psnr,
                    psnr_mean,
                    iterations: t.iterations,
                    converged: t.converged,
                    param: t.param,
                });
            }
        }
        let avg = average_rows("universal", &uni, &a.algos, from);
        rows.extend(uni);
        rows.extend(avg);
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for r in &rows {
        w.write_record(r.record()).expect("in-memory write");
    }
    write_bytes(&a.out, &w.into_inner().expect("in-memory flush"))?;

    let mut out = Outcome {
        inputs: a.images.clone(),
        outputs: vec![a.out.clone()],
        ..Outcome::default()
    };
    out.outputs.extend(tracer.written);
    out.put("rows", rows.len());
    for r in rows.iter().filter(|r| r.set == "within" && r.image == "average") {
        out.put(&format!("average_psnr_{}", r.algo.name()), fmt_2dp(r.psnr));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_formatting() {
        assert_eq!(fmt_2dp(f64::INFINITY), "inf");
        assert_eq!(fmt_full(f64::INFINITY), "inf");
        assert_eq!(fmt_2dp(30.069_8), "30.07");
        assert_eq!(fmt_full(28.5), "28.5");
    }

    #[test]
    fn lbg_config_seed_is_applied() {
        let cfg: iapvq::lbg::LBGConfig = crate::args::LbgOptions {
            lbg_max_iter: 7,
            threshold: 0.5,
            empty_cluster: crate::args::EmptyPolicyArg::Keep,
        }
        .config(3);
        assert_eq!((cfg.max_iterations, cfg.threshold, cfg.seed), (7, 0.5, 3));
    }
}
