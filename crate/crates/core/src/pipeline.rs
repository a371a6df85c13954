//! The hybrid codebook design: network-support affinity propagation tuned to
//! a target codebook size, followed by LBG refinement of the exemplars.
//!
//! The exemplar count falls as the preference scale grows, so the scale is
//! found by doubling or halving until the target count is bracketed and then
//! bisecting in log space. If a probe contradicts monotonicity the search
//! switches to a geometric grid over the allowed range. When no probed scale
//! lands exactly on the target, the closest exemplar codebook is resized by
//! merging or splitting codewords.

use std::sync::Mutex;

use crate::ap::{run_ap, run_ap_warm, APConfig, APResult, MessageState};
use crate::error::{Error, Result};
use crate::imageio::{codebook_psnr, extract_blocks, BlockGeometry, Image};
use crate::lbg::{lbg_refine, LBGConfig, LBGResult};
use crate::par;
use crate::similarity::{build_similarity, network_support, PreferenceMode, SimilarityMatrix};
use crate::vector::{assign_nearest, distortion, sq_dist_unchecked, Codebook, Provenance, TrainingSet};

/// Largest size correction, as a fraction of the target, that
/// [`adjust_codebook_size`] is trusted with after a search misses.
pub const MAX_ADJUST_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SizePolicy {
    /// Merge or split codewords until the codebook has exactly the target
    /// size.
    #[default]
    Exact,
    /// Keep whatever size the closest search probe produced.
    Nearest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub target_m: usize,
    pub rs_initial: f64,
    pub rs_bounds: (f64, f64),
    /// Maximum number of message-passing runs spent on the search.
    pub rs_search_max_steps: usize,
    pub ap: APConfig,
    pub lbg: LBGConfig,
    pub size_policy: SizePolicy,
    /// Start each bracketing or bisection probe from the previous probe's
    /// messages instead of zeros. Grid probes always start from zeros.
    pub warm_start: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            target_m: 256,
            rs_initial: 0.1,
            rs_bounds: (1e-4, 16.0),
            rs_search_max_steps: 40,
            ap: APConfig::default(),
            lbg: LBGConfig::default(),
            size_policy: SizePolicy::Exact,
            warm_start: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.rs_bounds;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid rs bounds ({lo}, {hi})")));
        }
        if !(self.rs_initial > 0.0 && self.rs_initial.is_finite()) {
            return Err(Error::InvalidRatio(self.rs_initial));
        }
        if self.target_m == 0 {
            return Err(Error::InvalidInput("target codebook size must be at least 1".into()));
        }
        if self.rs_search_max_steps == 0 {
            return Err(Error::InvalidInput("rs_search_max_steps must be at least 1".into()));
        }
        self.ap.validate()
    }
}

/// One message-passing run made during a search.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub scale: f64,
    pub count: usize,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSearch {
    /// The selected scale (`rs` for network-support preferences).
    pub scale: f64,
    pub result: APResult,
    /// Every probe in the order it was run.
    pub probes: Vec<Probe>,
    pub used_grid: bool,
}

impl ScaleSearch {
    pub fn hit_target(&self, target: usize) -> bool {
        self.result.converged && self.result.exemplars.len() == target
    }
}

struct Outcome {
    probe: Probe,
    result: Option<APResult>,
}

/// Ordering key: distance to target, then converged before not, then
/// larger counts first.
fn rank(p: &Probe, target: usize) -> (usize, bool, bool) {
    (p.count.abs_diff(target), !p.converged, p.count < target)
}

struct Search<'a, F> {
    target: usize,
    max_steps: usize,
    bounds: (f64, f64),
    probe_fn: &'a F,
    probes: Vec<Probe>,
    best: Option<(Probe, APResult)>,
}

impl<F> Search<'_, F>
where
    F: Fn(f64, bool) -> Result<APResult> + Sync,
{
    fn run_one(probe_fn: &F, scale: f64, warm: bool) -> Result<Outcome> {
        match probe_fn(scale, warm) {
            Ok(res) => Ok(Outcome {
                probe: Probe {
                    scale,
                    count: res.exemplars.len(),
                    converged: res.converged,
                    iterations: res.iterations_run,
                },
                result: Some(res),
            }),
            Err(Error::NoExemplars { iterations }) => Ok(Outcome {
                probe: Probe {
                    scale,
                    count: 0,
                    converged: false,
                    iterations,
                },
                result: None,
            }),
            Err(e) => Err(e),
        }
    }

    fn record(&mut self, out: Outcome) -> Probe {
        let probe = out.probe.clone();
        if let Some(res) = out.result {
            let better = match &self.best {
                None => true,
                Some((b, _)) => rank(&probe, self.target) < rank(b, self.target),
            };
            if better {
                self.best = Some((probe.clone(), res));
            }
        }
        self.probes.push(probe.clone());
        probe
    }

    fn eval(&mut self, scale: f64) -> Result<Probe> {
        let out = Self::run_one(self.probe_fn, scale, true)?;
        Ok(self.record(out))
    }

    fn done(&self) -> bool {
        self.best
            .as_ref()
            .is_some_and(|(p, _)| p.converged && p.count == self.target)
            || self.probes.len() >= self.max_steps
    }

    /// True when some larger scale produced more exemplars than a smaller
    /// one. Counts from runs that never settled are not trusted here.
    fn non_monotone(&self) -> bool {
        let mut sorted: Vec<&Probe> = self.probes.iter().filter(|p| p.converged).collect();
        sorted.sort_by(|a, b| a.scale.total_cmp(&b.scale));
        sorted.windows(2).any(|w| w[1].count > w[0].count)
    }

    fn grid(&mut self) -> Result<()> {
        let points = self.max_steps.saturating_sub(self.probes.len());
        if points == 0 {
            return Ok(());
        }
        let (lo, hi) = self.bounds;
        let scales: Vec<f64> = if points == 1 {
            vec![(lo * hi).sqrt()]
        } else {
            let ratio = (hi / lo).ln() / (points - 1) as f64;
            (0..points).map(|k| lo * (ratio * k as f64).exp()).collect()
        };
        let probe_fn = self.probe_fn;
        let outcomes = par::map_range(scales.len(), |k| Self::run_one(probe_fn, scales[k], false));
        for out in outcomes {
            self.record(out?);
        }
        Ok(())
    }

    /// Brackets the target by doubling or halving, then bisects
    /// geometrically. A probe that never settled gives no reliable
    /// direction: while bracketing, the search first steps to half its
    /// scale, where runs settle sooner, and comes back with warm messages
    /// (taking the count as it stands if the scale fails again); while
    /// bisecting, it resumes the same scale once.
    fn run(&mut self, initial: f64) -> Result<bool> {
        let (lo_bound, hi_bound) = self.bounds;
        // `above`: a scale yielding too many exemplars; `below`: too few.
        let mut above: Option<Probe> = None;
        let mut below: Option<Probe> = None;
        let classify = |p: Probe, above: &mut Option<Probe>, below: &mut Option<Probe>, target: usize| {
            if p.count >= target {
                if above.as_ref().is_none_or(|a| p.scale > a.scale) {
                    *above = Some(p);
                }
            } else if below.as_ref().is_none_or(|b| p.scale < b.scale) {
                *below = Some(p);
            }
        };

        let mut next = initial.clamp(lo_bound, hi_bound);
        let mut retreated: Vec<f64> = Vec::new();
        while above.is_none() || below.is_none() {
            let p = self.eval(next)?;
            if self.done() {
                return Ok(false);
            }
            if self.non_monotone() {
                self.grid()?;
                return Ok(true);
            }
            if !p.converged && p.scale > lo_bound && !retreated.contains(&p.scale) {
                retreated.push(p.scale);
                next = (p.scale / 2.0).max(lo_bound);
                continue;
            }
            classify(p, &mut above, &mut below, self.target);
            next = match (&above, &below) {
                (Some(_), Some(_)) => break,
                (None, Some(b)) if b.scale > lo_bound => (b.scale / 2.0).max(lo_bound),
                (Some(a), None) if a.scale < hi_bound => (a.scale * 2.0).min(hi_bound),
                _ => return Ok(false),
            };
        }

        while !self.done() {
            let (a, b) = (above.clone().unwrap(), below.clone().unwrap());
            let mid = (a.scale * b.scale).sqrt();
            if !(mid > a.scale && mid < b.scale) {
                break;
            }
            let mut p = self.eval(mid)?;
            if !p.converged && !self.done() {
                p = self.eval(mid)?;
            }
            if self.non_monotone() {
                self.grid()?;
                return Ok(true);
            }
            classify(p, &mut above, &mut below, self.target);
        }
        Ok(false)
    }
}

/// Searches the preference scale handed to `probe_fn` for a converged run
/// with exactly `target` exemplars. The second argument to `probe_fn` says
/// whether the probe may continue from earlier messages, within `cfg`'s bounds and step budget.
/// Falls back to the probe closest to `target` (ties to the larger count);
/// with [`SizePolicy::Exact`] that fallback must be within
/// [`MAX_ADJUST_FRACTION`] of the target.
pub fn tune_scale<F>(target: usize, cfg: &PipelineConfig, probe_fn: F) -> Result<ScaleSearch>
where
    F: Fn(f64, bool) -> Result<APResult> + Sync,
{
    cfg.validate()?;
    let mut search = Search {
        target,
        max_steps: cfg.rs_search_max_steps,
        bounds: cfg.rs_bounds,
        probe_fn: &probe_fn,
        probes: Vec::new(),
        best: None,
    };
    let used_grid = search.run(cfg.rs_initial)?;
    let min_count = search.probes.iter().map(|p| p.count).min().unwrap_or(0);
    let max_count = search.probes.iter().map(|p| p.count).max().unwrap_or(0);
    let unreachable = Error::TargetUnreachable {
        target,
        min_count,
        max_count,
    };
    let Some((best, result)) = search.best else {
        return Err(unreachable);
    };
    if cfg.size_policy == SizePolicy::Exact {
        let slack = ((target as f64) * MAX_ADJUST_FRACTION).ceil() as usize;
        if best.count.abs_diff(target) > slack.max(1) {
            return Err(unreachable);
        }
    }
    Ok(ScaleSearch {
        scale: best.scale,
        result,
        probes: search.probes,
        used_grid,
    })
}

/// Tunes `rs` for network-support preferences `s(m,m) = rs * ns(m)`.
pub fn search_rs(sim: &SimilarityMatrix, target: usize, cfg: &PipelineConfig) -> Result<ScaleSearch> {
    if target > sim.n() {
        return Err(Error::TooManyCodewords {
            requested: target,
            available: sim.n(),
        });
    }
    let ns = network_support(sim)?;
    let carried = Mutex::new(None);
    tune_scale(target, cfg, |rs, warm| {
        let mut s = sim.clone();
        s.set_network_support(&ns, rs)?;
        probe_ap(&s, cfg, warm, &carried)
    })
}

/// Tunes a multiplier on the median similarity used as a uniform preference.
pub fn search_uniform_scale(
    sim: &SimilarityMatrix,
    target: usize,
    cfg: &PipelineConfig,
) -> Result<ScaleSearch> {
    if target > sim.n() {
        return Err(Error::TooManyCodewords {
            requested: target,
            available: sim.n(),
        });
    }
    let median = sim.median_off_diagonal();
    let carried = Mutex::new(None);
    tune_scale(target, cfg, |scale, warm| {
        let mut s = sim.clone();
        s.set_preference(PreferenceMode::Uniform(Some(scale * median)))?;
        probe_ap(&s, cfg, warm, &carried)
    })
}

fn probe_ap(
    sim: &SimilarityMatrix,
    cfg: &PipelineConfig,
    warm: bool,
    carried: &Mutex<Option<MessageState>>,
) -> Result<APResult> {
    if !(warm && cfg.warm_start) {
        return run_ap(sim, &cfg.ap);
    }
    let mut slot = carried.lock().unwrap_or_else(|e| e.into_inner());
    let state = slot.get_or_insert_with(|| MessageState::new(sim.n()));
    run_ap_warm(sim, &cfg.ap, state)
}

/// Brings `cb` to `target` codewords. Surplus codewords are removed by
/// repeatedly replacing the closest pair with its midpoint; missing ones are
/// added by duplicating the codeword with the largest cluster error and
/// nudging the copy by 1e-3 of each component's data range.
pub fn adjust_codebook_size(cb: &Codebook, target: usize, ts: &TrainingSet) -> Result<Codebook> {
    if target == 0 {
        return Err(Error::InvalidInput("target codebook size must be at least 1".into()));
    }
    if target > ts.len() {
        return Err(Error::TooManyCodewords {
            requested: target,
            available: ts.len(),
        });
    }
    if cb.dim() != ts.dim() {
        return Err(Error::DimensionMismatch {
            expected: ts.dim(),
            actual: cb.dim(),
        });
    }
    if cb.len() == target {
        return Ok(cb.clone());
    }
    let mut out = cb.clone();
    while out.len() > target {
        let (i, j) = closest_pair(&out);
        let mid: Vec<f64> = out
            .codeword(i)
            .iter()
            .zip(out.codeword(j))
            .map(|(a, b)| (a + b) / 2.0)
            .collect();
        out.codeword_mut(i).copy_from_slice(&mid);
        out.remove(j);
    }
    if out.len() < target {
        let nudge: Vec<f64> = ts
            .component_ranges()
            .into_iter()
            .map(|(lo, hi)| 1e-3 * (hi - lo))
            .collect();
        while out.len() < target {
            let asg = assign_nearest(ts, &out)?;
            let rep = distortion(ts, &out, &asg)?;
            let worst = worst_cluster(&rep.per_cluster_error);
            let copy: Vec<f64> = out.codeword(worst).iter().zip(&nudge).map(|(c, d)| c + d).collect();
            out.push(&copy);
        }
    }
    Ok(out.with_provenance(Provenance::Adjusted))
}

fn worst_cluster(errors: &[f64]) -> usize {
    errors
        .iter()
        .enumerate()
        .fold(0, |best, (k, &e)| if e > errors[best] { k } else { best })
}

/// Lexicographically first pair `(i, j)`, `i < j`, at minimum distance.
fn closest_pair(cb: &Codebook) -> (usize, usize) {
    let m = cb.len();
    let rows = par::map_range(m, |i| {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in i + 1..m {
            let d = sq_dist_unchecked(cb.codeword(i), cb.codeword(j));
            if d < best.0 {
                best = (d, j);
            }
        }
        best
    });
    let (mut bi, mut bd, mut bj) = (0, f64::INFINITY, 1);
    for (i, (d, j)) in rows.into_iter().enumerate() {
        if d < bd {
            (bi, bd, bj) = (i, d, j);
        }
    }
    (bi, bj)
}

/// An exemplar codebook tuned to a target size.
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarStage {
    pub search: ScaleSearch,
    /// The exemplars themselves, before any resizing.
    pub exemplar_codebook: Codebook,
    /// The exemplar codebook brought to size per the size policy.
    pub codebook: Codebook,
    /// Mean squared error per vector of `exemplar_codebook`.
    pub exemplar_distortion: f64,
    /// Mean squared error per vector of `codebook`.
    pub distortion: f64,
}

/// Which preference rule an exemplar search tunes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreferenceFamily {
    /// `s(m,m) = rs * ns(m)`, tuning `rs`.
    NetworkSupport,
    /// `s(m,m) = scale * median`, tuning `scale`.
    UniformMedian,
}

pub fn exemplar_stage(
    ts: &TrainingSet,
    family: PreferenceFamily,
    cfg: &PipelineConfig,
) -> Result<ExemplarStage> {
    cfg.validate()?;
    if cfg.target_m > ts.len() {
        return Err(Error::TooManyCodewords {
            requested: cfg.target_m,
            available: ts.len(),
        });
    }
    let search = {
        let sim = build_similarity(ts)?;
        match family {
            PreferenceFamily::NetworkSupport => search_rs(&sim, cfg.target_m, cfg)?,
            PreferenceFamily::UniformMedian => search_uniform_scale(&sim, cfg.target_m, cfg)?,
        }
    };
    let exemplar_codebook = search.result.codebook(ts)?;
    let codebook = match cfg.size_policy {
        SizePolicy::Exact => adjust_codebook_size(&exemplar_codebook, cfg.target_m, ts)?,
        SizePolicy::Nearest => exemplar_codebook.clone(),
    };
    let mse = |cb: &Codebook| -> Result<f64> {
        Ok(distortion(ts, cb, &assign_nearest(ts, cb)?)?.mean_sq_error_per_vector)
    };
    Ok(ExemplarStage {
        exemplar_distortion: mse(&exemplar_codebook)?,
        distortion: mse(&codebook)?,
        search,
        exemplar_codebook,
        codebook,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    /// Final LBG-refined codebook.
    pub codebook: Codebook,
    pub rs_used: f64,
    pub exemplar_count_before_adjust: usize,
    pub iap_result: APResult,
    pub stage: ExemplarStage,
    pub lbg_result: LBGResult,
    /// Image PSNR of the codebook handed to LBG and of the final codebook,
    /// when the pipeline ran on an image.
    pub stage_psnr: Option<(f64, f64)>,
}

impl PipelineResult {
    /// Mean squared error per vector of the codebook handed to LBG.
    pub fn iap_distortion(&self) -> f64 {
        self.stage.distortion
    }

    pub fn final_distortion(&self) -> f64 {
        self.lbg_result.final_distortion()
    }
}

/// Similarities, network support, `rs` search, exemplar codebook, optional
/// resizing, then LBG seeded with the exemplars.
pub fn run_iap_lbg(ts: &TrainingSet, cfg: &PipelineConfig) -> Result<PipelineResult> {
    let stage = exemplar_stage(ts, PreferenceFamily::NetworkSupport, cfg)?;
    let lbg_result = lbg_refine(ts, &stage.codebook, &cfg.lbg)?;
    Ok(PipelineResult {
        codebook: lbg_result.codebook.clone(),
        rs_used: stage.search.scale,
        exemplar_count_before_adjust: stage.exemplar_codebook.len(),
        iap_result: stage.search.result.clone(),
        stage,
        lbg_result,
        stage_psnr: None,
    })
}

/// [`run_iap_lbg`] on the blocks of an image, recording PSNR at both stages.
pub fn run_iap_lbg_image(
    img: &Image,
    geom: &BlockGeometry,
    cfg: &PipelineConfig,
) -> Result<PipelineResult> {
    let ts = extract_blocks(img, geom)?;
    let mut res = run_iap_lbg(&ts, cfg)?;
    res.stage_psnr = Some((
        codebook_psnr(img, &res.stage.codebook, geom)?,
        codebook_psnr(img, &res.codebook, geom)?,
    ));
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts1(values: &[f64]) -> TrainingSet {
        TrainingSet::new(1, values.to_vec()).unwrap()
    }

    #[test]
    fn adjust_is_identity_at_target() {
        let ts = ts1(&[0.0, 1.0, 2.0]);
        let cb = Codebook::new(1, vec![0.0, 2.0]).unwrap();
        assert_eq!(adjust_codebook_size(&cb, 2, &ts).unwrap(), cb);
    }

    #[test]
    fn adjust_merges_closest_pair() {
        let ts = ts1(&[0.0, 0.1, 5.0, 9.0, 9.5]);
        let cb = Codebook::new(1, vec![0.0, 0.1, 5.0, 9.0]).unwrap();
        let out = adjust_codebook_size(&cb, 3, &ts).unwrap();
        assert_eq!(out.as_flat(), &[0.05, 5.0, 9.0]);
        assert_eq!(out.provenance(), &Provenance::Adjusted);
    }

    #[test]
    fn adjust_splits_dominant_cluster() {
        // Cluster around 0 is tight; cluster around 100 is spread out.
        let ts = ts1(&[-1.0, 0.0, 1.0, 80.0, 90.0, 110.0, 120.0]);
        let cb = Codebook::new(1, vec![0.0, 100.0]).unwrap();
        let asg = assign_nearest(&ts, &cb).unwrap();
        let errs = distortion(&ts, &cb, &asg).unwrap().per_cluster_error;
        assert_eq!(errs, vec![2.0, 1000.0]);
        let out = adjust_codebook_size(&cb, 3, &ts).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(&out.as_flat()[..2], &[0.0, 100.0]);
        // Data range 121, nudge 0.121 on the dominant codeword.
        assert!((out.codeword(2)[0] - 100.121).abs() < 1e-12);
    }

    #[test]
    fn adjust_rejects_oversized_target() {
        let ts = ts1(&[0.0, 1.0]);
        let cb = Codebook::new(1, vec![0.0]).unwrap();
        assert!(matches!(
            adjust_codebook_size(&cb, 3, &ts),
            Err(Error::TooManyCodewords { .. })
        ));
    }

    fn fake(count: usize, converged: bool) -> Result<APResult> {
        if count == 0 {
            return Err(Error::NoExemplars { iterations: 5 });
        }
        let exemplars: Vec<usize> = (0..count).collect();
        Ok(APResult {
            assignment: crate::vector::Assignment::new((0..count).collect(), count).unwrap(),
            exemplars,
            iterations_run: 10,
            converged,
            settled_at: 5,
            exemplar_counts: vec![],
            energy_trace: vec![],
        })
    }

    fn cfg(steps: usize) -> PipelineConfig {
        PipelineConfig {
            rs_search_max_steps: steps,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn bisection_finds_target_on_a_monotone_staircase() {
        // count(rs) = ceil(100 / (1 + 10 rs)), nonincreasing.
        let count = |rs: f64| (100.0 / (1.0 + 10.0 * rs)).ceil() as usize;
        for target in [1, 7, 20, 50, 90, 100] {
            let s = tune_scale(target, &cfg(40), |rs, _| fake(count(rs), true)).unwrap();
            assert_eq!(s.result.exemplars.len(), target, "target {target}");
            assert!(!s.used_grid);
            assert!(s.probes.len() <= 40);
        }
    }

    #[test]
    fn plateau_falls_back_to_nearest_with_ties_up() {
        // Jumps from 12 straight to 8 around rs = 1.
        let count = |rs: f64| if rs < 1.0 { 12 } else { 8 };
        let nearest = PipelineConfig {
            size_policy: SizePolicy::Nearest,
            ..cfg(30)
        };
        let s = tune_scale(10, &nearest, |rs, _| fake(count(rs), true)).unwrap();
        assert_eq!(s.result.exemplars.len(), 12);
        assert!(s.probes.len() <= 30);

        let s = tune_scale(10, &cfg(30), |rs, _| fake(count(rs), true)).unwrap();
        assert_eq!(s.result.exemplars.len(), 12);

        // 12 is too far from 4 to be resized.
        let far = |rs: f64| if rs < 1.0 { 12 } else { 1 };
        assert!(matches!(
            tune_scale(4, &cfg(30), |rs, _| fake(far(rs), true)),
            Err(Error::TargetUnreachable { target: 4, min_count: 1, max_count: 12 })
        ));
    }

    #[test]
    fn non_monotone_probe_triggers_grid() {
        // Doubling from 0.1 sees the count rise; only rs >= 1 gives 20.
        let count = |rs: f64| if rs < 0.15 { 30 } else if rs < 1.0 { 35 } else { 20 };
        let s = tune_scale(20, &cfg(12), |rs, _| fake(count(rs), true)).unwrap();
        assert!(s.used_grid);
        assert_eq!(s.result.exemplars.len(), 20);
        assert_eq!(s.probes.len(), 12);
    }

    #[test]
    fn unconverged_exact_counts_lose_to_converged_ones() {
        let count = |rs: f64| (100.0 / (1.0 + 10.0 * rs)).ceil() as usize;
        let s = tune_scale(50, &cfg(40), |rs, _| {
            let c = count(rs);
            fake(c, c != 50 || rs > 0.1)
        })
        .unwrap();
        assert!(s.result.converged);
        assert_eq!(s.result.exemplars.len(), 50);
    }

    #[test]
    fn empty_exemplar_sets_count_as_zero() {
        let count = |rs: f64| if rs > 0.5 { 0 } else { 3 };
        let s = tune_scale(3, &cfg(10), |rs, _| fake(count(rs), true)).unwrap();
        assert_eq!(s.result.exemplars.len(), 3);
    }
}
