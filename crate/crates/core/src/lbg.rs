//! Generalized Lloyd (LBG) codebook refinement.
//!
//! Each iteration assigns every training vector to its nearest codeword,
//! records the mean squared error per vector, stops once that value changes
//! by less than the threshold between two iterations (or the iteration cap is
//! hit), and otherwise moves every codeword to the centroid of its cluster.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::vector::{
    assign_nearest, distortion, sq_dist_unchecked, Assignment, Codebook, Provenance, TrainingSet,
};

/// What to do with a codeword that attracted no training vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmptyClusterPolicy {
    /// Replace it with the member of the highest-error cluster that lies
    /// farthest from that cluster's new centroid.
    #[default]
    SplitWorst,
    /// Leave the stale codeword where it is.
    KeepCodeword,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LBGConfig {
    pub max_iterations: usize,
    /// Stop when `|D_prev - D| < threshold`.
    pub threshold: f64,
    /// Seed for [`init_random`].
    pub seed: u64,
    pub empty_cluster_policy: EmptyClusterPolicy,
}

impl Default for LBGConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            threshold: 1e-8,
            seed: 0,
            empty_cluster_policy: EmptyClusterPolicy::SplitWorst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Threshold,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LBGResult {
    pub codebook: Codebook,
    /// Nearest-codeword assignment of the returned codebook.
    pub assignment: Assignment,
    /// Mean squared error per vector, one entry per iteration.
    pub distortion_trace: Vec<f64>,
    pub iterations_run: usize,
    pub terminated_by: Termination,
}

impl LBGResult {
    pub fn final_distortion(&self) -> f64 {
        *self.distortion_trace.last().expect("at least one iteration")
    }
}

/// The PRNG behind every random choice in this crate: ChaCha8 seeded through
/// `seed_from_u64`, which is stable across platforms.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Copies `m` distinct training vectors chosen uniformly at random.
pub fn init_random(ts: &TrainingSet, m: usize, seed: u64) -> Result<Codebook> {
    if m == 0 {
        return Err(Error::InvalidInput("codebook size must be at least 1".into()));
    }
    if m > ts.len() {
        return Err(Error::TooManyCodewords {
            requested: m,
            available: ts.len(),
        });
    }
    let mut rng = seeded_rng(seed);
    let indices = rand::seq::index::sample(&mut rng, ts.len(), m).into_vec();
    Ok(Codebook::from_training_indices(ts, &indices)?.with_provenance(Provenance::Sampled { seed, indices }))
}

pub fn lbg_refine(ts: &TrainingSet, initial: &Codebook, cfg: &LBGConfig) -> Result<LBGResult> {
    if cfg.max_iterations == 0 {
        return Err(Error::InvalidInput("max_iterations must be at least 1".into()));
    }
    if !(cfg.threshold >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "threshold must be nonnegative, got {}",
            cfg.threshold
        )));
    }
    if ts.dim() != initial.dim() {
        return Err(Error::DimensionMismatch {
            expected: ts.dim(),
            actual: initial.dim(),
        });
    }
    let mut codebook = initial.clone();
    let mut trace = Vec::new();
    loop {
        let asg = assign_nearest(ts, &codebook)?;
        let d = distortion(ts, &codebook, &asg)?.mean_sq_error_per_vector;
        let previous = trace.last().copied();
        trace.push(d);
        let terminated_by = match previous {
            Some(p) if (p - d).abs() < cfg.threshold => Some(Termination::Threshold),
            _ if trace.len() >= cfg.max_iterations => Some(Termination::MaxIterations),
            _ => None,
        };
        if let Some(terminated_by) = terminated_by {
            return Ok(LBGResult {
                codebook: codebook.with_provenance(Provenance::Refined),
                assignment: asg,
                iterations_run: trace.len(),
                distortion_trace: trace,
                terminated_by,
            });
        }
        update_codewords(ts, &mut codebook, &asg, cfg.empty_cluster_policy);
    }
}

/// Moves each codeword to its cluster centroid and repairs empty clusters.
fn update_codewords(
    ts: &TrainingSet,
    codebook: &mut Codebook,
    asg: &Assignment,
    policy: EmptyClusterPolicy,
) {
    let dim = ts.dim();
    let m = codebook.len();
    let mut sums = vec![0.0; m * dim];
    let mut counts = vec![0usize; m];
    for (v, &c) in ts.iter().zip(asg.cluster_of()) {
        counts[c] += 1;
        for (s, &x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(v) {
            *s += x;
        }
    }
    for c in 0..m {
        if counts[c] > 0 {
            let count = counts[c] as f64;
            for (w, &s) in codebook
                .codeword_mut(c)
                .iter_mut()
                .zip(&sums[c * dim..(c + 1) * dim])
            {
                *w = s / count;
            }
        }
    }

    let empty: Vec<usize> = (0..m).filter(|&c| counts[c] == 0).collect();
    if empty.is_empty() || policy == EmptyClusterPolicy::KeepCodeword {
        return;
    }

    // Errors against the freshly moved centroids.
    let mut point_err = vec![0.0; ts.len()];
    let mut cluster_err = vec![0.0; m];
    for (n, (v, &c)) in ts.iter().zip(asg.cluster_of()).enumerate() {
        let e = sq_dist_unchecked(v, codebook.codeword(c));
        point_err[n] = e;
        cluster_err[c] += e;
    }
    let mut taken = vec![false; ts.len()];
    for target in empty {
        let worst = (0..m)
            .filter(|&c| counts[c] > 0)
            .fold(None, |best: Option<usize>, c| match best {
                Some(b) if cluster_err[b] >= cluster_err[c] => Some(b),
                _ => Some(c),
            });
        let Some(worst) = worst else { return };
        let far = asg
            .cluster_of()
            .iter()
            .enumerate()
            .filter(|&(n, &c)| c == worst && !taken[n])
            .fold(None, |best: Option<usize>, (n, _)| match best {
                Some(b) if point_err[b] >= point_err[n] => Some(b),
                _ => Some(n),
            });
        let Some(far) = far else { continue };
        taken[far] = true;
        cluster_err[worst] -= point_err[far];
        codebook.codeword_mut(target).copy_from_slice(ts.vector(far));
    }
}

/// Refines `m` codewords sampled from `ts` with `cfg.seed`.
pub fn run_lbg(ts: &TrainingSet, m: usize, cfg: &LBGConfig) -> Result<LBGResult> {
    lbg_refine(ts, &init_random(ts, m, cfg.seed)?, cfg)
}

/// `runs` independent restarts seeded `cfg.seed, cfg.seed + 1, ...`, in seed
/// order.
pub fn lbg_restarts(ts: &TrainingSet, m: usize, cfg: &LBGConfig, runs: usize) -> Result<Vec<LBGResult>> {
    par::map_range(runs, |j| {
        let cfg = LBGConfig {
            seed: cfg.seed.wrapping_add(j as u64),
            ..cfg.clone()
        };
        run_lbg(ts, m, &cfg)
    })
    .into_iter()
    .collect()
}

/// Position of the lowest final distortion, earliest on ties.
pub fn best_run(runs: &[LBGResult]) -> Option<usize> {
    (0..runs.len()).reduce(|b, k| {
        if runs[k].final_distortion() < runs[b].final_distortion() {
            k
        } else {
            b
        }
    })
}
