//! Affinity propagation: damped responsibility/availability message passing
//! over a dense similarity matrix.
//!
//! One iteration is a synchronous responsibility sweep followed by a
//! synchronous availability sweep. Each sweep reads only the state left by
//! the previous one, so rows can be processed in any order. Column sums are
//! accumulated over fixed blocks of rows and combined in block order, which
//! keeps every result independent of the thread count.

use crate::error::{Error, Result};
use crate::par;
use crate::similarity::SimilarityMatrix;
use crate::vector::{Assignment, Codebook, Provenance, TrainingSet};

const ROW_BLOCK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct APConfig {
    /// Weight of the previous message in `new = damping*old + (1-damping)*raw`.
    pub damping: f64,
    pub max_iterations: usize,
    /// Consecutive iterations with an unchanged, nonempty exemplar set needed
    /// to declare convergence.
    pub stable_window: usize,
    /// Record the net similarity after every iteration.
    pub trace_energy: bool,
}

impl Default for APConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iterations: 1000,
            stable_window: 50,
            trace_energy: false,
        }
    }
}

impl APConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidInput(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        if self.max_iterations == 0 || self.stable_window == 0 {
            return Err(Error::InvalidInput(
                "max_iterations and stable_window must be positive".into(),
            ));
        }
        if self.stable_window > self.max_iterations {
            return Err(Error::InvalidInput(format!(
                "stable_window {} exceeds max_iterations {}",
                self.stable_window, self.max_iterations
            )));
        }
        Ok(())
    }
}

/// Responsibilities `r` and availabilities `a`, both `n x n` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    n: usize,
    r: Vec<f64>,
    a: Vec<f64>,
    /// `sum_{n' != m} max(0, r(n', m))` for the current `r`.
    support: Vec<f64>,
    iteration: usize,
}

impl MessageState {
    /// All messages zero.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            r: vec![0.0; n * n],
            a: vec![0.0; n * n],
            support: vec![0.0; n],
            iteration: 0,
        }
    }

    /// Builds a state from explicit message matrices.
    pub fn from_messages(n: usize, r: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if r.len() != n * n || a.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "message matrices must hold {} entries",
                n * n
            )));
        }
        let mut support = vec![0.0; n];
        for (i, row) in r.chunks_exact(n).enumerate() {
            accumulate_support(&mut support, i, row);
        }
        Ok(Self {
            n,
            r,
            a,
            support,
            iteration: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Completed responsibility sweeps.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn r(&self, i: usize, m: usize) -> f64 {
        self.r[i * self.n + m]
    }

    pub fn a(&self, i: usize, m: usize) -> f64 {
        self.a[i * self.n + m]
    }

    pub fn responsibilities(&self) -> &[f64] {
        &self.r
    }

    pub fn availabilities(&self) -> &[f64] {
        &self.a
    }
}

const LANES: usize = 4;

/// Adds `max(0, row[m])` into `support[m]` for every `m != row_index`.
#[inline]
fn accumulate_support(support: &mut [f64], row_index: usize, row: &[f64]) {
    let kept = support[row_index];
    for (acc, &v) in support.iter_mut().zip(row) {
        *acc += if v > 0.0 { v } else { 0.0 };
    }
    support[row_index] = kept;
}

#[inline]
fn damp(old: f64, raw: f64, damping: f64) -> f64 {
    if damping == 0.0 {
        raw
    } else {
        damping * old + (1.0 - damping) * raw
    }
}

/// Largest `x[m] + y[m]` over a slice; negative infinity when empty.
#[inline]
fn max_sum(x: &[f64], y: &[f64]) -> f64 {
    let mut lanes = [f64::NEG_INFINITY; LANES];
    let split = x.len() - x.len() % LANES;
    for (xc, yc) in x[..split].chunks_exact(LANES).zip(y[..split].chunks_exact(LANES)) {
        for l in 0..LANES {
            let v = xc[l] + yc[l];
            lanes[l] = if v > lanes[l] { v } else { lanes[l] };
        }
    }
    let mut best = lanes.into_iter().fold(f64::NEG_INFINITY, |m, v| if v > m { v } else { m });
    for m in split..x.len() {
        let v = x[m] + y[m];
        best = if v > best { v } else { best };
    }
    best
}

/// First position of the largest `x[m] + y[m]` and that value.
#[inline]
fn argmax_sum_with(x: &[f64], y: &[f64]) -> (usize, f64) {
    let best = max_sum(x, y);
    let at = x.iter().zip(y).position(|(a, b)| a + b == best).unwrap_or(0);
    (at, best)
}

/// First position of the largest `x[m] + y[m]`.
#[inline]
fn argmax_sum(x: &[f64], y: &[f64]) -> usize {
    argmax_sum_with(x, y).0
}

/// Largest and second largest of `x[m] + y[m]`, with the first position of
/// the largest. Equal maxima make the second largest equal the largest.
#[inline]
fn top_two(x: &[f64], y: &[f64]) -> (f64, usize, f64) {
    let (at, best) = argmax_sum_with(x, y);
    let before = max_sum(&x[..at], &y[..at]);
    let after = max_sum(&x[at + 1..], &y[at + 1..]);
    (best, at, if before > after { before } else { after })
}

/// `r(n,m) <- damp(r(n,m), s(n,m) - max_{m' != m} {a(n,m') + s(n,m')})`.
pub fn update_responsibilities(
    sim: &SimilarityMatrix,
    state: &mut MessageState,
    damping: f64,
) -> Result<()> {
    if sim.preference().is_none() {
        return Err(Error::PreferenceUnset);
    }
    let n = state.n;
    if sim.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: sim.n(),
        });
    }
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let MessageState { r, a, support, .. } = state;
    let a = &*a;
    let partials = par::map_row_blocks(r, n, ROW_BLOCK, |first_row, rows| {
        let mut partial = vec![0.0; n];
        for (k, r_row) in rows.chunks_exact_mut(n).enumerate() {
            let i = first_row + k;
            let s_row = sim.row(i);
            let a_row = &a[i * n..(i + 1) * n];
            // The runner-up is the competitor of the argmax column.
            let (best, best_at, second) = top_two(a_row, s_row);
            let old_at = r_row[best_at];
            if damping == 0.0 {
                for (rv, &sv) in r_row.iter_mut().zip(s_row) {
                    *rv = sv - best;
                }
            } else {
                for (rv, &sv) in r_row.iter_mut().zip(s_row) {
                    *rv = damping * *rv + (1.0 - damping) * (sv - best);
                }
            }
            r_row[best_at] = damp(old_at, s_row[best_at] - second, damping);
            accumulate_support(&mut partial, i, r_row);
        }
        partial
    });
    support.iter_mut().for_each(|v| *v = 0.0);
    for partial in partials {
        for (acc, p) in support.iter_mut().zip(partial) {
            *acc += p;
        }
    }
    state.iteration += 1;
    Ok(())
}

/// `a(n,m) <- damp(a(n,m), min{0, r(m,m) + sum_{n' not in {n,m}} max{0, r(n',m)}})`
/// for `n != m`, and `a(m,m) <- damp(a(m,m), sum_{n' != m} max{0, r(n',m)})`.
pub fn update_availabilities(state: &mut MessageState, damping: f64) -> Result<()> {
    if state.iteration == 0 {
        return Err(Error::InvalidInput(
            "availabilities need at least one responsibility sweep".into(),
        ));
    }
    availability_sweep(state, damping, None);
    Ok(())
}

/// Availability sweep that optionally records, per row, the column that
/// maximizes `a + r` after the update.
fn availability_sweep(state: &mut MessageState, damping: f64, decisions: Option<&mut [usize]>) {
    let n = state.n;
    let MessageState { r, a, support, .. } = state;
    let r = &*r;
    let support = &*support;
    // r(m,m) + sum over n' != m of max{0, r(n',m)}.
    let column: Vec<f64> = (0..n).map(|m| r[m * n + m] + support[m]).collect();
    let update_row = |i: usize, a_row: &mut [f64]| -> usize {
        let r_row = &r[i * n..(i + 1) * n];
        let old_diag = a_row[i];
        if damping == 0.0 {
            for ((av, &rv), &c) in a_row.iter_mut().zip(r_row).zip(&column) {
                let raw = c - if rv > 0.0 { rv } else { 0.0 };
                *av = if raw < 0.0 { raw } else { 0.0 };
            }
        } else {
            for ((av, &rv), &c) in a_row.iter_mut().zip(r_row).zip(&column) {
                let raw = c - if rv > 0.0 { rv } else { 0.0 };
                *av = damping * *av + (1.0 - damping) * if raw < 0.0 { raw } else { 0.0 };
            }
        }
        a_row[i] = damp(old_diag, support[i], damping);
        argmax_sum(a_row, r_row)
    };
    match decisions {
        Some(out) => par::for_each_row_with(a, n, out, |i, row, o| *o = update_row(i, row)),
        None => par::for_each_row(a, n, |i, row| {
            update_row(i, row);
        }),
    }
}

/// Per row, the column maximizing `a + r`, ties to the lowest index.
fn decisions(state: &MessageState) -> Vec<usize> {
    let n = state.n;
    par::map_range(n, |i| argmax_sum(&state.a[i * n..(i + 1) * n], &state.r[i * n..(i + 1) * n]))
}

fn exemplar_set(decisions: &[usize]) -> Vec<usize> {
    decisions
        .iter()
        .enumerate()
        .filter(|(i, &c)| *i == c)
        .map(|(i, _)| i)
        .collect()
}

/// Assigns exemplars to themselves and every other point to its most similar
/// exemplar (lowest index on ties). Cluster ids index into `exemplars`.
pub fn assign_to_exemplars(sim: &SimilarityMatrix, exemplars: &[usize]) -> Result<Assignment> {
    if exemplars.is_empty() {
        return Err(Error::NoExemplars { iterations: 0 });
    }
    let n = sim.n();
    let mut slot = vec![usize::MAX; n];
    for (k, &e) in exemplars.iter().enumerate() {
        if e >= n {
            return Err(Error::IndexOutOfRange { index: e, size: n });
        }
        slot[e] = k;
    }
    let cluster_of = par::map_range(n, |i| {
        if slot[i] != usize::MAX {
            return slot[i];
        }
        let row = sim.row(i);
        let mut best = f64::NEG_INFINITY;
        let mut best_k = 0;
        for (k, &e) in exemplars.iter().enumerate() {
            if row[e] > best {
                best = row[e];
                best_k = k;
            }
        }
        best_k
    });
    Assignment::new(cluster_of, exemplars.len())
}

/// Exemplars are the points that choose themselves under
/// `argmax_m {a(n,m) + r(n,m)}`; every point is then attached to its most
/// similar exemplar so the result is always a valid clustering.
pub fn identify_exemplars(
    sim: &SimilarityMatrix,
    state: &MessageState,
) -> Result<(Vec<usize>, Assignment)> {
    if sim.n() != state.n {
        return Err(Error::DimensionMismatch {
            expected: state.n,
            actual: sim.n(),
        });
    }
    let exemplars = exemplar_set(&decisions(state));
    if exemplars.is_empty() {
        return Err(Error::NoExemplars {
            iterations: state.iteration,
        });
    }
    let asg = assign_to_exemplars(sim, &exemplars)?;
    Ok((exemplars, asg))
}

/// Sum of each non-exemplar's similarity to its exemplar plus the exemplars'
/// preferences. Higher is better.
pub fn net_similarity(sim: &SimilarityMatrix, exemplars: &[usize], asg: &Assignment) -> Result<f64> {
    if asg.len() != sim.n() || asg.clusters() != exemplars.len() {
        return Err(Error::InvalidInput(
            "assignment does not match the exemplar set".into(),
        ));
    }
    let mut total = 0.0;
    for (i, &k) in asg.cluster_of().iter().enumerate() {
        let e = exemplars[k];
        if exemplars.binary_search(&i).is_ok() && e != i {
            return Err(Error::InvalidInput(format!(
                "exemplar {i} is not assigned to itself"
            )));
        }
        total += sim.get(i, e);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct APResult {
    /// Exemplar training indices, ascending.
    pub exemplars: Vec<usize>,
    /// Cluster ids index into `exemplars`.
    pub assignment: Assignment,
    pub iterations_run: usize,
    pub converged: bool,
    /// Iteration at which the final exemplar set first appeared.
    pub settled_at: usize,
    /// Exemplar count after every iteration.
    pub exemplar_counts: Vec<usize>,
    /// Net similarity after every iteration (`None` while no exemplar
    /// exists); empty unless tracing was requested.
    pub energy_trace: Vec<Option<f64>>,
}

impl APResult {
    /// Copies of the exemplar training vectors, in exemplar order.
    pub fn codebook(&self, ts: &TrainingSet) -> Result<Codebook> {
        Ok(Codebook::from_training_indices(ts, &self.exemplars)?.with_provenance(
            Provenance::Exemplars {
                indices: self.exemplars.clone(),
            },
        ))
    }
}

/// Runs message passing from zero messages until the exemplar set has been
/// unchanged for `stable_window` iterations or `max_iterations` is reached.
pub fn run_ap(sim: &SimilarityMatrix, cfg: &APConfig) -> Result<APResult> {
    run_ap_warm(sim, cfg, &mut MessageState::new(sim.n()))
}

/// Like [`run_ap`] but continues from `state`, which is left holding the
/// final messages. Iterations are counted from the start of this call.
pub fn run_ap_warm(sim: &SimilarityMatrix, cfg: &APConfig, state: &mut MessageState) -> Result<APResult> {
    cfg.validate()?;
    if sim.preference().is_none() {
        return Err(Error::PreferenceUnset);
    }
    let n = sim.n();
    if state.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: state.n,
        });
    }
    let start = state.iteration;
    let mut choice = vec![0usize; n];
    let mut previous: Vec<usize> = Vec::new();
    let mut stable = 0;
    let mut converged = false;
    let mut exemplar_counts = Vec::new();
    let mut energy_trace = Vec::new();

    while state.iteration - start < cfg.max_iterations {
        update_responsibilities(sim, state, cfg.damping)?;
        availability_sweep(state, cfg.damping, Some(&mut choice));
        let current = exemplar_set(&choice);
        exemplar_counts.push(current.len());
        if cfg.trace_energy {
            let energy = if current.is_empty() {
                None
            } else {
                let asg = assign_to_exemplars(sim, &current)?;
                Some(net_similarity(sim, &current, &asg)?)
            };
            energy_trace.push(energy);
        }
        if !current.is_empty() && current == previous {
            stable += 1;
        } else {
            stable = 0;
        }
        previous = current;
        if stable >= cfg.stable_window {
            converged = true;
            break;
        }
    }

    if previous.is_empty() {
        return Err(Error::NoExemplars {
            iterations: state.iteration - start,
        });
    }
    let assignment = assign_to_exemplars(sim, &previous)?;
    let iterations_run = state.iteration - start;
    Ok(APResult {
        exemplars: previous,
        assignment,
        iterations_run,
        converged,
        settled_at: iterations_run - stable,
        exemplar_counts,
        energy_trace,
    })
}
