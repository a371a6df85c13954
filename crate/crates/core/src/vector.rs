//! Vector arithmetic shared by every codebook-design algorithm: squared
//! distances, nearest-codeword assignment, centroids and distortion.
//!
//! Vectors are stored flat in row-major order. All accumulation is in `f64`.

use crate::error::{Error, Result};
use crate::par;

/// Fixed-dimension real vectors stored contiguously.
#[derive(Debug, Clone, PartialEq)]
struct Rows {
    dim: usize,
    data: Vec<f64>,
}

impl Rows {
    fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("vector dimension must be at least 1".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "{} values do not divide into vectors of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite component at vector {}, position {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { dim, data })
    }

    fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidInput("no vectors".into()))?;
        let mut data = Vec::with_capacity(dim * vectors.len());
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            data.extend_from_slice(v);
        }
        Self::new(dim, data)
    }

    fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// The vectors a codebook is designed from.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet(Rows);

impl TrainingSet {
    /// Builds a training set from flat row-major data. Requires at least one
    /// vector and finite components.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        let rows = Rows::new(dim, data)?;
        if rows.len() == 0 {
            return Err(Error::InvalidInput("training set is empty".into()));
        }
        Ok(Self(rows))
    }

    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Self(Rows::from_vectors(vectors)?))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    /// Number of vectors.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        self.0.get(i)
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.0.data.chunks_exact(self.0.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.0.data
    }

    /// Per-component `(min, max)` over the whole set.
    pub fn component_ranges(&self) -> Vec<(f64, f64)> {
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim()];
        for v in self.iter() {
            for (r, &x) in ranges.iter_mut().zip(v) {
                r.0 = r.0.min(x);
                r.1 = r.1.max(x);
            }
        }
        ranges
    }
}

/// Where a codebook came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Provenance {
    #[default]
    Unspecified,
    /// Copies of the listed training vectors, drawn at random.
    Sampled { seed: u64, indices: Vec<usize> },
    /// Copies of the listed training vectors, chosen as exemplars.
    Exemplars { indices: Vec<usize> },
    /// Output of LBG refinement.
    Refined,
    /// Resized by merging or splitting codewords.
    Adjusted,
    /// Read from a codebook file.
    Loaded,
}

/// An ordered list of codewords.
#[derive(Debug, Clone)]
pub struct Codebook {
    rows: Rows,
    provenance: Provenance,
}

impl PartialEq for Codebook {
    /// Codebooks compare by content; provenance is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
    }
}

impl Codebook {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        let rows = Rows::new(dim, data)?;
        if rows.len() == 0 {
            return Err(Error::InvalidInput("codebook is empty".into()));
        }
        Ok(Self {
            rows,
            provenance: Provenance::Unspecified,
        })
    }

    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Self {
            rows: Rows::from_vectors(vectors)?,
            provenance: Provenance::Unspecified,
        })
    }

    /// Copies the given training vectors, in the given order.
    pub fn from_training_indices(ts: &TrainingSet, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("codebook is empty".into()));
        }
        let mut data = Vec::with_capacity(indices.len() * ts.dim());
        for &i in indices {
            if i >= ts.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    size: ts.len(),
                });
            }
            data.extend_from_slice(ts.vector(i));
        }
        Ok(Self {
            rows: Rows {
                dim: ts.dim(),
                data,
            },
            provenance: Provenance::Unspecified,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.rows.dim
    }

    /// Number of codewords.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn codeword(&self, i: usize) -> &[f64] {
        self.rows.get(i)
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.rows.data.chunks_exact(self.rows.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.rows.data
    }

    pub(crate) fn codeword_mut(&mut self, i: usize) -> &mut [f64] {
        let d = self.rows.dim;
        &mut self.rows.data[i * d..(i + 1) * d]
    }

    pub(crate) fn push(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.rows.dim);
        self.rows.data.extend_from_slice(v);
    }

    pub(crate) fn remove(&mut self, i: usize) {
        let d = self.rows.dim;
        self.rows.data.drain(i * d..(i + 1) * d);
    }
}

/// Maps every training vector to one codeword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    cluster_of: Vec<usize>,
    clusters: usize,
}

impl Assignment {
    pub fn new(cluster_of: Vec<usize>, clusters: usize) -> Result<Self> {
        if let Some(&bad) = cluster_of.iter().find(|&&c| c >= clusters) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                size: clusters,
            });
        }
        Ok(Self {
            cluster_of,
            clusters,
        })
    }

    pub fn cluster_of(&self) -> &[usize] {
        &self.cluster_of
    }

    /// Number of clusters the assignment refers to (the codebook size M).
    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn len(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cluster_of.is_empty()
    }

    /// Training indices per cluster, each list ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.clusters];
        for (n, &c) in self.cluster_of.iter().enumerate() {
            members[c].push(n);
        }
        members
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.clusters];
        for &c in &self.cluster_of {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Squared-error accounting for a training set under a codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub total_sq_error: f64,
    /// Total squared error divided by the number of training vectors.
    pub mean_sq_error_per_vector: f64,
    pub per_cluster_error: Vec<f64>,
}

impl DistortionReport {
    /// Mean squared error per vector component, i.e. per pixel for image
    /// blocks.
    pub fn mean_sq_error_per_component(&self, dim: usize) -> f64 {
        self.mean_sq_error_per_vector / dim as f64
    }
}

/// Squared Euclidean distance.
pub fn sq_dist(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(sq_dist_unchecked(a, b))
}

#[inline]
pub(crate) fn sq_dist_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Index and distance of the codeword nearest to `v`, ties to the lowest
/// index.
///
/// Uses partial distance elimination: a candidate is abandoned once its
/// running sum reaches the best distance so far. The running sum is a prefix
/// of the same summation `sq_dist` performs, so completed distances are
/// bit-identical and the tie-break is unaffected.
#[inline]
pub(crate) fn nearest(v: &[f64], cb: &Codebook) -> (usize, f64) {
    const STRIDE: usize = 4;
    let dim = cb.dim();
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    'codewords: for (m, c) in cb.iter().enumerate() {
        let mut acc = 0.0;
        let mut i = 0;
        while i < dim {
            let end = (i + STRIDE).min(dim);
            for k in i..end {
                let d = v[k] - c[k];
                acc += d * d;
            }
            if acc >= best_d {
                continue 'codewords;
            }
            i = end;
        }
        best = m;
        best_d = acc;
    }
    (best, best_d)
}

/// Assigns every training vector to its nearest codeword (lowest index on
/// ties).
pub fn assign_nearest(ts: &TrainingSet, cb: &Codebook) -> Result<Assignment> {
    check_dims(ts, cb)?;
    let cluster_of = par::map_range(ts.len(), |n| nearest(ts.vector(n), cb).0);
    Ok(Assignment {
        cluster_of,
        clusters: cb.len(),
    })
}

/// Componentwise mean of a nonempty set of equal-length vectors.
pub fn centroid(members: &[&[f64]]) -> Result<Vec<f64>> {
    let first = members.first().ok_or(Error::EmptyCluster)?;
    let dim = first.len();
    let mut acc = vec![0.0; dim];
    for v in members {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        for (a, &x) in acc.iter_mut().zip(v.iter()) {
            *a += x;
        }
    }
    let count = members.len() as f64;
    for a in &mut acc {
        *a /= count;
    }
    Ok(acc)
}

/// Total, per-vector and per-cluster squared error of `ts` quantized by `cb`
/// under `asg`.
pub fn distortion(ts: &TrainingSet, cb: &Codebook, asg: &Assignment) -> Result<DistortionReport> {
    check_dims(ts, cb)?;
    if asg.len() != ts.len() {
        return Err(Error::InvalidInput(format!(
            "assignment covers {} vectors, training set has {}",
            asg.len(),
            ts.len()
        )));
    }
    if asg.clusters() != cb.len() {
        return Err(Error::InvalidInput(format!(
            "assignment refers to {} clusters, codebook has {}",
            asg.clusters(),
            cb.len()
        )));
    }
    let errors = par::map_range(ts.len(), |n| {
        sq_dist_unchecked(ts.vector(n), cb.codeword(asg.cluster_of[n]))
    });
    let mut per_cluster_error = vec![0.0; cb.len()];
    for (&c, e) in asg.cluster_of.iter().zip(errors) {
        per_cluster_error[c] += e;
    }
    let total_sq_error: f64 = per_cluster_error.iter().sum();
    Ok(DistortionReport {
        total_sq_error,
        mean_sq_error_per_vector: total_sq_error / ts.len() as f64,
        per_cluster_error,
    })
}

fn check_dims(ts: &TrainingSet, cb: &Codebook) -> Result<()> {
    if ts.dim() != cb.dim() {
        return Err(Error::DimensionMismatch {
            expected: ts.dim(),
            actual: cb.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ts1(values: &[f64]) -> TrainingSet {
        TrainingSet::new(1, values.to_vec()).unwrap()
    }

    fn cb1(values: &[f64]) -> Codebook {
        Codebook::new(1, values.to_vec()).unwrap()
    }

    #[test]
    fn sq_dist_examples() {
        assert_eq!(sq_dist(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(sq_dist(&[0.0], &[3.0]).unwrap(), 9.0);
        assert_eq!(sq_dist(&[0.0; 16], &[1.0; 16]).unwrap(), 16.0);
    }

    #[test]
    fn sq_dist_rejects_mismatch() {
        assert_eq!(
            sq_dist(&[0.0, 1.0], &[0.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        );
    }

    #[test]
    fn assign_examples() {
        let asg = assign_nearest(&ts1(&[0.0, 1.0, 3.0]), &cb1(&[0.0, 3.0])).unwrap();
        assert_eq!(asg.cluster_of(), &[0, 0, 1]);

        let asg = assign_nearest(&ts1(&[0.0, 1.0, 3.0]), &cb1(&[7.0])).unwrap();
        assert_eq!(asg.cluster_of(), &[0, 0, 0]);

        // 1 is equidistant from 0 and 2.
        let asg = assign_nearest(&ts1(&[1.0]), &cb1(&[0.0, 2.0])).unwrap();
        assert_eq!(asg.cluster_of(), &[0]);
        // Same tie with the codewords listed the other way round.
        let asg = assign_nearest(&ts1(&[1.0]), &cb1(&[2.0, 0.0])).unwrap();
        assert_eq!(asg.cluster_of(), &[0]);
    }

    #[test]
    fn assign_rejects_dim_mismatch() {
        let cb = Codebook::new(2, vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            assign_nearest(&ts1(&[0.0]), &cb),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn centroid_examples() {
        let c = centroid(&[&[0.0], &[1.0], &[3.0]]).unwrap();
        assert!((c[0] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(centroid(&[&[2.5, -1.0]]).unwrap(), vec![2.5, -1.0]);
        assert_eq!(centroid(&[&[0.0, 0.0], &[2.0, 4.0]]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(centroid(&[]), Err(Error::EmptyCluster));
    }

    #[test]
    fn distortion_examples() {
        let ts = ts1(&[0.0, 1.0, 3.0]);
        let cb = cb1(&[0.0, 3.0]);
        let asg = Assignment::new(vec![0, 0, 1], 2).unwrap();
        let rep = distortion(&ts, &cb, &asg).unwrap();
        assert_eq!(rep.total_sq_error, 1.0);
        assert!((rep.mean_sq_error_per_vector - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rep.per_cluster_error, vec![1.0, 0.0]);

        let cb = cb1(&[0.0, 1.0, 3.0]);
        let asg = Assignment::new(vec![0, 1, 2], 3).unwrap();
        assert_eq!(distortion(&ts, &cb, &asg).unwrap().total_sq_error, 0.0);

        let ts = ts1(&[0.0, 2.0]);
        let cb = cb1(&[1.0]);
        let asg = assign_nearest(&ts, &cb).unwrap();
        let rep = distortion(&ts, &cb, &asg).unwrap();
        assert_eq!(rep.total_sq_error, 2.0);
        assert_eq!(rep.mean_sq_error_per_vector, 1.0);
    }

    #[test]
    fn training_set_validation() {
        assert!(TrainingSet::new(0, vec![]).is_err());
        assert!(TrainingSet::new(2, vec![]).is_err());
        assert!(TrainingSet::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(TrainingSet::new(1, vec![f64::NAN]).is_err());
        assert!(TrainingSet::from_vectors(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn members_partition_indices() {
        let asg = Assignment::new(vec![1, 0, 1, 2], 4).unwrap();
        assert_eq!(asg.members(), vec![vec![1], vec![0, 2], vec![3], vec![]]);
        assert_eq!(asg.sizes(), vec![1, 2, 1, 0]);
        assert!(Assignment::new(vec![0, 4], 4).is_err());
    }

    fn random_vectors(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<f64> {
        (0..n * dim).map(|_| rng.random_range(-10.0..10.0)).collect()
    }

    #[test]
    fn centroid_beats_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let dim = rng.random_range(1..5);
            let n = rng.random_range(1..8);
            let data = random_vectors(&mut rng, n, dim);
            let members: Vec<&[f64]> = data.chunks(dim).collect();
            let c = centroid(&members).unwrap();
            let cost = |p: &[f64]| -> f64 { members.iter().map(|v| sq_dist_unchecked(v, p)).sum() };
            let best = cost(&c);
            for _ in 0..100 {
                let p: Vec<f64> = c.iter().map(|x| x + rng.random_range(-0.5..0.5)).collect();
                assert!(best <= cost(&p));
            }
        }
    }

    #[test]
    fn nearest_assignment_beats_random_assignments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let dim = rng.random_range(1..4);
            let ts = TrainingSet::new(dim, random_vectors(&mut rng, 12, dim)).unwrap();
            let cb = Codebook::new(dim, random_vectors(&mut rng, 4, dim)).unwrap();
            let best = distortion(&ts, &cb, &assign_nearest(&ts, &cb).unwrap()).unwrap();
            for _ in 0..50 {
                let other: Vec<usize> = (0..ts.len()).map(|_| rng.random_range(0..4)).collect();
                let other = Assignment::new(other, 4).unwrap();
                let rep = distortion(&ts, &cb, &other).unwrap();
                assert!(best.total_sq_error <= rep.total_sq_error);
            }
        }
    }

    #[test]
    fn pruned_search_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [1, 3, 4, 7, 16] {
            // Coarse integer grid so exact ties occur often.
            let data: Vec<f64> = (0..200 * dim).map(|_| rng.random_range(0..4) as f64).collect();
            let ts = TrainingSet::new(dim, data).unwrap();
            let cbd: Vec<f64> = (0..9 * dim).map(|_| rng.random_range(0..4) as f64).collect();
            let cb = Codebook::new(dim, cbd).unwrap();
            let asg = assign_nearest(&ts, &cb).unwrap();
            for (n, v) in ts.iter().enumerate() {
                let dists: Vec<f64> = cb.iter().map(|c| sq_dist(v, c).unwrap()).collect();
                let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
                let first = dists.iter().position(|&d| d == min).unwrap();
                assert_eq!(asg.cluster_of()[n], first);
            }
        }
    }

    proptest! {
        #[test]
        fn sq_dist_is_symmetric(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..32)) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assert_eq!(sq_dist(&a, &b).unwrap(), sq_dist(&b, &a).unwrap());
            prop_assert_eq!(sq_dist(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn report_is_consistent(
            data in prop::collection::vec(-100f64..100.0, 2..60),
            m in 1usize..5,
        ) {
            let ts = TrainingSet::new(1, data.clone()).unwrap();
            let cb = Codebook::new(1, data.iter().take(m).cloned().collect()).unwrap();
            let asg = assign_nearest(&ts, &cb).unwrap();
            let rep = distortion(&ts, &cb, &asg).unwrap();
            let sum: f64 = rep.per_cluster_error.iter().sum();
            prop_assert_eq!(rep.total_sq_error, sum);
            prop_assert_eq!(rep.mean_sq_error_per_vector, rep.total_sq_error / ts.len() as f64);
            prop_assert!(rep.per_cluster_error.iter().all(|&e| e >= 0.0));
        }
    }
}
