//! Dense similarity matrices and the self-similarity (preference) rules.
//!
//! Off-diagonal entries are negative squared Euclidean distances. The
//! diagonal holds preferences: how strongly each point wants to be an
//! exemplar. It starts out unset and must be filled by
//! [`SimilarityMatrix::set_preference`] before message passing.

use crate::error::{Error, Result};
use crate::par;
use crate::vector::{sq_dist_unchecked, TrainingSet};

/// How to fill the diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PreferenceMode {
    /// The same preference for every point. `None` means the median of the
    /// off-diagonal similarities.
    Uniform(Option<f64>),
    /// `s(m,m) = rs * ns(m)`, where `ns(m)` is the mean similarity of all
    /// other points to `m`.
    NetworkSupport(f64),
}

/// The preference rule currently on the diagonal, with any default resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AppliedPreference {
    Uniform(f64),
    NetworkSupport { rs: f64 },
}

/// A validated network-support ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PreferenceRatio(f64);

impl PreferenceRatio {
    pub fn new(rs: f64) -> Result<Self> {
        if rs > 0.0 && rs.is_finite() {
            Ok(Self(rs))
        } else {
            Err(Error::InvalidRatio(rs))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Mean similarity of all other points to each point. Never positive; zero
/// only when every other point coincides with it.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSupport(Vec<f64>);

impl NetworkSupport {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    s: Vec<f64>,
    preference: Option<AppliedPreference>,
}

/// `s(n,m) = -|V_n - V_m|^2` for `n != m`; the diagonal is left unset.
pub fn build_similarity(ts: &TrainingSet) -> Result<SimilarityMatrix> {
    let n = ts.len();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let mut s = vec![0.0; n * n];
    par::for_each_row(&mut s, n, |i, row| {
        let vi = ts.vector(i);
        for (j, out) in row.iter_mut().enumerate() {
            if j != i {
                *out = -sq_dist_unchecked(vi, ts.vector(j));
            }
        }
    });
    Ok(SimilarityMatrix {
        n,
        s,
        preference: None,
    })
}

/// `ns(m) = sum_{m' != m} s(m', m) / (N - 1)`.
pub fn network_support(sim: &SimilarityMatrix) -> Result<NetworkSupport> {
    let n = sim.n;
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let mut acc = vec![0.0; n];
    for (i, row) in sim.s.chunks_exact(n).enumerate() {
        for (m, (a, &v)) in acc.iter_mut().zip(row).enumerate() {
            if m != i {
                *a += v;
            }
        }
    }
    let denom = (n - 1) as f64;
    Ok(NetworkSupport(acc.into_iter().map(|a| a / denom).collect()))
}

/// Returns a copy of `sim` with its diagonal set by `mode`.
pub fn apply_preference(sim: &SimilarityMatrix, mode: PreferenceMode) -> Result<SimilarityMatrix> {
    let mut out = sim.clone();
    out.set_preference(mode)?;
    Ok(out)
}

impl SimilarityMatrix {
    #[cfg(test)]
    pub(crate) fn from_raw(n: usize, s: Vec<f64>, preference: Option<AppliedPreference>) -> Self {
        assert_eq!(s.len(), n * n);
        Self { n, s, preference }
    }

    /// Number of points.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.s[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.s[i * self.n..(i + 1) * self.n]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.s
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn preference(&self) -> Option<AppliedPreference> {
        self.preference
    }

    /// Median of the off-diagonal entries (mean of the two middle values when
    /// their count is even).
    pub fn median_off_diagonal(&self) -> f64 {
        let n = self.n;
        let mut off: Vec<f64> = Vec::with_capacity(n * (n - 1));
        for (i, row) in self.s.chunks_exact(n).enumerate() {
            off.extend_from_slice(&row[..i]);
            off.extend_from_slice(&row[i + 1..]);
        }
        let len = off.len();
        let mid = len / 2;
        let (_, &mut upper, _) = off.select_nth_unstable_by(mid, f64::total_cmp);
        if len % 2 == 1 {
            upper
        } else {
            let lower = off[..mid].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lower + upper) / 2.0
        }
    }

    /// Fills the diagonal. Off-diagonal entries are never touched.
    pub fn set_preference(&mut self, mode: PreferenceMode) -> Result<()> {
        match mode {
            PreferenceMode::Uniform(value) => {
                let v = match value {
                    Some(v) if v.is_finite() => v,
                    Some(v) => {
                        return Err(Error::InvalidInput(format!("non-finite preference {v}")))
                    }
                    None => self.median_off_diagonal(),
                };
                self.fill_diagonal(|_| v);
                self.preference = Some(AppliedPreference::Uniform(v));
                Ok(())
            }
            PreferenceMode::NetworkSupport(rs) => {
                let ns = network_support(self)?;
                self.set_network_support(&ns, rs)
            }
        }
    }

    /// `s(m,m) = rs * ns(m)` with a precomputed [`NetworkSupport`].
    pub fn set_network_support(&mut self, ns: &NetworkSupport, rs: f64) -> Result<()> {
        let rs = PreferenceRatio::new(rs)?.get();
        if ns.0.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: ns.0.len(),
            });
        }
        self.fill_diagonal(|m| rs * ns.0[m]);
        self.preference = Some(AppliedPreference::NetworkSupport { rs });
        Ok(())
    }

    fn fill_diagonal(&mut self, value: impl Fn(usize) -> f64) {
        for m in 0..self.n {
            self.s[m * self.n + m] = value(m);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn three_points() -> TrainingSet {
        TrainingSet::new(1, vec![0.0, 1.0, 3.0]).unwrap()
    }

    #[test]
    fn build_examples() {
        let sim = build_similarity(&three_points()).unwrap();
        assert_eq!(sim.get(0, 1), -1.0);
        assert_eq!(sim.get(0, 2), -9.0);
        assert_eq!(sim.get(1, 2), -4.0);
        for i in 0..3 {
            assert_eq!(sim.get(i, i), 0.0);
            for j in 0..3 {
                assert_eq!(sim.get(i, j), sim.get(j, i));
            }
        }
        assert_eq!(sim.preference(), None);

        let dup = TrainingSet::new(2, vec![1.0, 2.0, 5.0, 5.0, 1.0, 2.0]).unwrap();
        assert_eq!(build_similarity(&dup).unwrap().get(0, 2), 0.0);

        let flat = TrainingSet::new(16, vec![7.0; 16 * 5]).unwrap();
        assert!(build_similarity(&flat).unwrap().as_flat().iter().all(|&v| v == 0.0));

        assert_eq!(
            build_similarity(&TrainingSet::new(1, vec![1.0]).unwrap()),
            Err(Error::TooFewPoints(1))
        );
    }

    #[test]
    fn network_support_examples() {
        let sim = build_similarity(&three_points()).unwrap();
        assert_eq!(network_support(&sim).unwrap().values(), &[-5.0, -2.5, -6.5]);

        let same = build_similarity(&TrainingSet::new(2, vec![3.0; 8]).unwrap()).unwrap();
        assert_eq!(network_support(&same).unwrap().values(), &[0.0; 4]);

        let pair = build_similarity(&TrainingSet::new(1, vec![0.0, 2.0]).unwrap()).unwrap();
        assert_eq!(network_support(&pair).unwrap().values(), &[-4.0, -4.0]);
    }

    #[test]
    fn preference_examples() {
        let sim = build_similarity(&three_points()).unwrap();
        let ns = apply_preference(&sim, PreferenceMode::NetworkSupport(1.0)).unwrap();
        assert_eq!(ns.diagonal(), vec![-5.0, -2.5, -6.5]);
        assert_eq!(ns.preference(), Some(AppliedPreference::NetworkSupport { rs: 1.0 }));

        let uni = apply_preference(&sim, PreferenceMode::Uniform(Some(-4.0))).unwrap();
        assert_eq!(uni.diagonal(), vec![-4.0; 3]);

        // Off-diagonal values -1,-9,-1,-4,-9,-4: middle pair is -4, -4.
        let med = apply_preference(&sim, PreferenceMode::Uniform(None)).unwrap();
        assert_eq!(med.diagonal(), vec![-4.0; 3]);

        for rs in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                apply_preference(&sim, PreferenceMode::NetworkSupport(rs)),
                Err(Error::InvalidRatio(_))
            ));
        }
    }

    #[test]
    fn median_even_and_odd() {
        let sim = SimilarityMatrix::from_raw(2, vec![0.0, -3.0, -5.0, 0.0], None);
        assert_eq!(sim.median_off_diagonal(), -4.0);
        let sim = build_similarity(&TrainingSet::new(1, vec![0.0, 1.0, 3.0, 7.0]).unwrap()).unwrap();
        // Distances^2: 1, 9, 49, 4, 36, 16, each twice -> middle pair 9, 16.
        assert_eq!(sim.median_off_diagonal(), -12.5);
    }

    #[test]
    fn largest_support_is_the_medoid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let n = rng.random_range(2..=20);
            let dim = rng.random_range(1..4);
            let data: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-5.0..5.0)).collect();
            let ts = TrainingSet::new(dim, data).unwrap();
            let ns = network_support(&build_similarity(&ts).unwrap()).unwrap();
            let best_ns = (0..n)
                .max_by(|&a, &b| ns.values()[a].total_cmp(&ns.values()[b]).then(b.cmp(&a)))
                .unwrap();
            // Brute force: total squared distance from each point to all others.
            let cost = |i: usize| -> f64 {
                (0..n)
                    .map(|j| {
                        ts.vector(i)
                            .iter()
                            .zip(ts.vector(j))
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                    })
                    .sum()
            };
            let medoid = (0..n)
                .min_by(|&a, &b| cost(a).total_cmp(&cost(b)).then(a.cmp(&b)))
                .unwrap();
            assert!((cost(best_ns) - cost(medoid)).abs() <= 1e-9 * cost(medoid).max(1.0));
            assert!(ns.values().iter().all(|&v| v <= 0.0));
        }
    }

    #[test]
    fn scaling_is_monotone_and_leaves_off_diagonal_alone() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..10.0)).collect();
        let sim = build_similarity(&TrainingSet::new(2, data).unwrap()).unwrap();
        let mut prev: Option<SimilarityMatrix> = None;
        for rs in [0.01, 0.1, 0.5, 1.0, 2.0, 8.0] {
            let cur = apply_preference(&sim, PreferenceMode::NetworkSupport(rs)).unwrap();
            for i in 0..sim.n() {
                for j in 0..sim.n() {
                    if i != j {
                        assert_eq!(cur.get(i, j), sim.get(i, j));
                    }
                }
            }
            if let Some(p) = &prev {
                for (a, b) in cur.diagonal().iter().zip(p.diagonal()) {
                    assert!(*a <= b);
                }
            }
            prev = Some(cur);
        }
    }
}
