use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use iapvq::ap::{run_ap, APResult};
use iapvq::imageio::{
    codebook_psnr, decode, encode, extract_blocks, psnr, read_codebook, read_index_map, verify_codebook,
    write_codebook, write_index_map, write_pgm, BlockGeometry, Image,
};
use iapvq::lbg::{best_run, lbg_refine, lbg_restarts};
use iapvq::pipeline::{adjust_codebook_size, exemplar_stage, run_iap_lbg, PreferenceFamily};
use iapvq::similarity::{apply_preference, build_similarity, PreferenceMode};
use iapvq::synth::{piecewise_smooth_image, random_mixture};
use iapvq::{assign_nearest, distortion, Codebook, TrainingSet};

use crate::args::{
    Algo, Block, Command, DecodeArgs, EncodeArgs, EvalArgs, Preference, SizePolicyArg, SynthArgs, SynthKind, TrainArgs,
};
use crate::error::{CliError, CliResult};
use crate::input::{format_vectors, load_image, load_input, read_bytes, write_bytes, Input};

/// What a command read, wrote, and wants to report.
#[derive(Default)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub results: BTreeMap<String, String>,
}

impl Outcome {
    pub fn put(&mut self, key: &str, value: impl ToString) {
        self.results.insert(key.to_string(), value.to_string());
    }
}

pub fn fit_blocks(img: &Image, block: Block, path: &Path) -> CliResult<BlockGeometry> {
    BlockGeometry::fit(img, block.w, block.h).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn mean_sq_error(ts: &TrainingSet, cb: &Codebook) -> CliResult<f64> {
    Ok(distortion(ts, cb, &assign_nearest(ts, cb)?)?.mean_sq_error_per_vector)
}

fn require_size(a: &TrainArgs) -> CliResult<usize> {
    match a.size {
        Some(m) if m > 0 => Ok(m),
        Some(_) => Err(CliError::Usage("--size must be at least 1".into())),
        None => Err(CliError::Usage(format!("--algo {} needs --size", a.algo.name()))),
    }
}

fn record_ap(out: &mut Outcome, res: &APResult) {
    out.put("exemplars", res.exemplars.len());
    out.put("ap_iterations", res.iterations_run);
    out.put("ap_converged", res.converged);
}

fn single_ap(ts: &TrainingSet, mode: PreferenceMode, a: &TrainArgs) -> CliResult<APResult> {
    let sim = apply_preference(&build_similarity(ts)?, mode)?;
    Ok(run_ap(&sim, &a.ap.ap_config(false))?)
}

fn resize(cb: Codebook, size: Option<usize>, a: &TrainArgs, ts: &TrainingSet) -> CliResult<Codebook> {
    match size {
        Some(m) if a.ap.size_policy == SizePolicyArg::Exact => Ok(adjust_codebook_size(&cb, m, ts)?),
        _ => Ok(cb),
    }
}

pub fn train(a: &TrainArgs) -> CliResult<Outcome> {
    let mut out = Outcome {
        inputs: vec![a.input.clone()],
        ..Outcome::default()
    };
    if a.auto_rs && a.size.is_none() {
        return Err(CliError::Usage("--auto-rs needs --size".into()));
    }
    if let Some(rs) = a.rs {
        if !(rs > 0.0 && rs.is_finite()) {
            return Err(CliError::Usage(format!("--rs must be positive, got {rs}")));
        }
    }
    let (ts, image) = match load_input(&a.input)? {
        Input::Image(img) => {
            let geom = fit_blocks(&img, a.block, &a.input)?;
            (extract_blocks(&img, &geom)?, Some((img, geom)))
        }
        Input::Vectors(ts) => (ts, None),
    };
    out.put("training_vectors", ts.len());
    out.put("dim", ts.dim());
    let lbg_cfg = a.lbg.config(a.seed);

    let codebook = match a.algo {
        Algo::Lbg => {
            let m = require_size(a)?;
            if a.runs == 0 {
                return Err(CliError::Usage("--runs must be at least 1".into()));
            }
            let runs = lbg_restarts(&ts, m, &lbg_cfg, a.runs)?;
            let best = best_run(&runs).expect("at least one run");
            let finals: Vec<f64> = runs.iter().map(|r| r.final_distortion()).collect();
            out.put("best_seed", lbg_cfg.seed + best as u64);
            out.put("best_distortion", finals[best]);
            out.put("mean_distortion", finals.iter().sum::<f64>() / finals.len() as f64);
            out.put("lbg_iterations", runs[best].iterations_run);
            if let Some((img, geom)) = &image {
                let mut total = 0.0;
                for r in &runs {
                    total += codebook_psnr(img, &r.codebook, geom)?;
                }
                out.put("mean_psnr", total / runs.len() as f64);
            }
            runs[best].codebook.clone()
        }
        Algo::Ap => match a.size {
            Some(m) => {
                if a.preference != Preference::Median {
                    return Err(CliError::Usage(
                        "--size tunes a multiple of the median preference; drop --preference".into(),
                    ));
                }
                let stage = exemplar_stage(&ts, PreferenceFamily::UniformMedian, &a.ap.pipeline_config(m, lbg_cfg))?;
                record_ap(&mut out, &stage.search.result);
                out.put("preference_scale", stage.search.scale);
                stage.codebook
            }
            None => {
                let mode = match a.preference {
                    Preference::Median => PreferenceMode::Uniform(None),
                    Preference::Value(v) => PreferenceMode::Uniform(Some(v)),
                };
                let res = single_ap(&ts, mode, a)?;
                record_ap(&mut out, &res);
                res.codebook(&ts)?
            }
        },
        Algo::Iap => match (a.rs, a.size) {
            (Some(rs), size) => {
                let res = single_ap(&ts, PreferenceMode::NetworkSupport(rs), a)?;
                record_ap(&mut out, &res);
                out.put("rs", rs);
                resize(res.codebook(&ts)?, size, a, &ts)?
            }
            (None, Some(m)) => {
                let stage = exemplar_stage(&ts, PreferenceFamily::NetworkSupport, &a.ap.pipeline_config(m, lbg_cfg))?;
                record_ap(&mut out, &stage.search.result);
                out.put("rs", stage.search.scale);
                stage.codebook
            }
            (None, None) => return Err(CliError::Usage("--algo iap needs --rs or --size".into())),
        },
        Algo::IapLbg => {
            let m = require_size(a)?;
            let (initial, lbg, rs) = match a.rs {
                Some(rs) => {
                    let res = single_ap(&ts, PreferenceMode::NetworkSupport(rs), a)?;
                    record_ap(&mut out, &res);
                    let initial = resize(res.codebook(&ts)?, Some(m), a, &ts)?;
                    let lbg = lbg_refine(&ts, &initial, &lbg_cfg)?;
                    (initial, lbg, rs)
                }
                None => {
                    let res = run_iap_lbg(&ts, &a.ap.pipeline_config(m, lbg_cfg))?;
                    record_ap(&mut out, &res.iap_result);
                    (res.stage.codebook, res.lbg_result, res.rs_used)
                }
            };
            out.put("rs", rs);
            out.put("iap_distortion", mean_sq_error(&ts, &initial)?);
            if let Some((img, geom)) = &image {
                out.put("iap_psnr", codebook_psnr(img, &initial, geom)?);
            }
            out.put("lbg_iterations", lbg.iterations_run);
            lbg.codebook
        }
    };

    out.put("size", codebook.len());
    out.put("distortion", mean_sq_error(&ts, &codebook)?);
    if let Some((img, geom)) = &image {
        out.put("psnr", codebook_psnr(img, &codebook, geom)?);
    }
    write_bytes(&a.out, &write_codebook(&codebook))?;
    out.outputs.push(a.out.clone());
    Ok(out)
}

fn load_codebook(path: &Path) -> CliResult<Codebook> {
    read_codebook(&read_bytes(path)?).map_err(CliError::from_file(path))
}

pub fn encode_cmd(a: &EncodeArgs) -> CliResult<Outcome> {
    let img = load_image(&a.input)?;
    let cb = load_codebook(&a.codebook)?;
    let geom = fit_blocks(&img, a.block, &a.input)?;
    if cb.dim() != geom.dim() {
        return Err(CliError::Usage(format!(
            "codebook dimension {} does not match {} blocks",
            cb.dim(),
            a.block
        )));
    }
    let map = encode(&img, &cb, &geom)?;
    let mut out = Outcome {
        inputs: vec![a.input.clone(), a.codebook.clone()],
        ..Outcome::default()
    };
    out.put("blocks", map.indices.len());
    out.put("psnr", psnr(&img, &decode(&map, &cb)?)?);
    write_bytes(&a.out, &write_index_map(&map))?;
    out.outputs.push(a.out.clone());
    Ok(out)
}

pub fn decode_cmd(a: &DecodeArgs) -> CliResult<Outcome> {
    let map = read_index_map(&read_bytes(&a.input)?).map_err(CliError::from_file(&a.input))?;
    let cb = load_codebook(&a.codebook)?;
    verify_codebook(&map, &cb)?;
    let img = decode(&map, &cb)?;
    write_bytes(&a.out, &write_pgm(&img))?;
    let mut out = Outcome {
        inputs: vec![a.input.clone(), a.codebook.clone()],
        outputs: vec![a.out.clone()],
        ..Outcome::default()
    };
    out.put("width", img.width());
    out.put("height", img.height());
    Ok(out)
}

pub fn eval_cmd(a: &EvalArgs) -> CliResult<Outcome> {
    let reference = load_image(&a.reference)?;
    let other = load_image(&a.reconstructed)?;
    let value = psnr(&reference, &other).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = Outcome::default();
    out.put("psnr", crate::report::fmt_2dp(value));
    out.put("psnr_full", crate::report::fmt_full(value));
    Ok(out)
}

pub fn synth_cmd(a: &SynthArgs) -> CliResult<Outcome> {
    let bytes = match a.kind {
        SynthKind::Image => write_pgm(&piecewise_smooth_image(a.seed, a.width, a.height)?),
        SynthKind::Mixture => {
            let ts = random_mixture(a.seed, a.clusters, a.per_cluster, a.dim, a.spread, a.sigma)?;
            format_vectors(&ts).into_bytes()
        }
    };
    write_bytes(&a.out, &bytes)?;
    Ok(Outcome {
        outputs: vec![a.out.clone()],
        ..Outcome::default()
    })
}

/// Points every output path of `cmd` into `dir`, keeping file names.
pub fn redirect_outputs(cmd: &mut Command, dir: &Path) -> CliResult<()> {
    let into = |p: &mut PathBuf| {
        let name = p.file_name().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
        *p = dir.join(name);
    };
    match cmd {
        Command::Train(a) => into(&mut a.out),
        Command::Encode(a) => into(&mut a.out),
        Command::Decode(a) => into(&mut a.out),
        Command::Synth(a) => into(&mut a.out),
        Command::Compare(a) => {
            into(&mut a.out);
            if let Some(t) = a.trace_dir.as_mut() {
                into(t);
            }
        }
        Command::Eval(_) => {}
        Command::Replay(_) => return Err(CliError::Usage("a manifest cannot record a replay".into())),
    }
    Ok(())
}
