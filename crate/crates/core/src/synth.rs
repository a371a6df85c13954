//! Seeded synthetic data: Gaussian point clouds and piecewise-smooth
//! grayscale images. Every generator is a pure function of its seed.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::imageio::{quantize_pixel, Image};
use crate::lbg::seeded_rng;
use crate::vector::TrainingSet;

/// `per_cluster` points around each center with isotropic standard
/// deviation `sigma`. Points are grouped by cluster; the second value holds
/// each point's cluster label.
pub fn gaussian_clusters(
    seed: u64,
    centers: &[Vec<f64>],
    sigma: f64,
    per_cluster: usize,
) -> Result<(TrainingSet, Vec<usize>)> {
    let dim = centers
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidInput("no cluster centers".into()))?;
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidInput(format!("bad sigma {sigma}: {e}")))?;
    let mut rng = seeded_rng(seed);
    let mut data = Vec::with_capacity(centers.len() * per_cluster * dim);
    let mut labels = Vec::with_capacity(centers.len() * per_cluster);
    for (label, c) in centers.iter().enumerate() {
        if c.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: c.len(),
            });
        }
        for _ in 0..per_cluster {
            data.extend(c.iter().map(|&x| x + normal.sample(&mut rng)));
            labels.push(label);
        }
    }
    Ok((TrainingSet::new(dim, data)?, labels))
}

/// A Gaussian mixture with `clusters` random centers in `[0, spread)^dim`.
pub fn random_mixture(seed: u64, clusters: usize, per_cluster: usize, dim: usize, spread: f64, sigma: f64) -> Result<TrainingSet> {
    let mut rng = seeded_rng(seed ^ 0x5eed_c1a5);
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..spread)).collect())
        .collect();
    Ok(gaussian_clusters(seed, &centers, sigma, per_cluster)?.0)
}

/// Uniform points in `[lo, hi)^dim`.
pub fn uniform_points(seed: u64, n: usize, dim: usize, lo: f64, hi: f64) -> Result<TrainingSet> {
    let mut rng = seeded_rng(seed);
    TrainingSet::new(dim, (0..n * dim).map(|_| rng.random_range(lo..hi)).collect())
}

struct Region {
    cx: f64,
    cy: f64,
    base: f64,
    gx: f64,
    gy: f64,
    amp: f64,
    freq: f64,
    phase: f64,
}

/// A grayscale image made of Voronoi regions, each filled with a linear
/// ramp plus a low-frequency ripple, with mild Gaussian sensor noise on top.
pub fn piecewise_smooth_image(seed: u64, width: usize, height: usize) -> Result<Image> {
    let mut rng = seeded_rng(seed);
    let regions = rng.random_range(8..16);
    let scale = width.max(height) as f64;
    let regions: Vec<Region> = (0..regions)
        .map(|_| Region {
            cx: rng.random_range(0.0..width as f64),
            cy: rng.random_range(0.0..height as f64),
            base: rng.random_range(20.0..235.0),
            gx: rng.random_range(-60.0..60.0) / scale,
            gy: rng.random_range(-60.0..60.0) / scale,
            amp: rng.random_range(0.0..25.0),
            freq: rng.random_range(1.0..6.0) * std::f64::consts::TAU / scale,
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        })
        .collect();
    let noise = Normal::new(0.0, 2.0).expect("valid sigma");
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (xf, yf) = (x as f64, y as f64);
            let r = regions
                .iter()
                .min_by(|a, b| {
                    let da = (a.cx - xf).powi(2) + (a.cy - yf).powi(2);
                    let db = (b.cx - xf).powi(2) + (b.cy - yf).powi(2);
                    da.total_cmp(&db)
                })
                .expect("at least one region");
            let v = r.base
                + r.gx * (xf - r.cx)
                + r.gy * (yf - r.cy)
                + r.amp * (r.freq * (xf + yf) + r.phase).sin()
                + noise.sample(&mut rng);
            pixels.push(quantize_pixel(v));
        }
    }
    Image::new(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let centers = vec![vec![0.0, 0.0], vec![10.0, 10.0]];
        assert_eq!(
            gaussian_clusters(3, &centers, 1.0, 5).unwrap(),
            gaussian_clusters(3, &centers, 1.0, 5).unwrap()
        );
        assert_ne!(
            gaussian_clusters(3, &centers, 1.0, 5).unwrap().0,
            gaussian_clusters(4, &centers, 1.0, 5).unwrap().0
        );
        assert_eq!(
            piecewise_smooth_image(1, 32, 16).unwrap(),
            piecewise_smooth_image(1, 32, 16).unwrap()
        );
    }

    #[test]
    fn cluster_labels_follow_layout() {
        let centers = vec![vec![0.0], vec![50.0], vec![100.0]];
        let (ts, labels) = gaussian_clusters(1, &centers, 0.5, 4).unwrap();
        assert_eq!(ts.len(), 12);
        assert_eq!(labels, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
        for (v, &l) in ts.iter().zip(&labels) {
            assert!((v[0] - centers[l][0]).abs() < 5.0);
        }
    }

    #[test]
    fn images_use_a_wide_range() {
        let img = piecewise_smooth_image(9, 64, 64).unwrap();
        let min = *img.pixels().iter().min().unwrap();
        let max = *img.pixels().iter().max().unwrap();
        assert!(max - min > 60);
    }
}
