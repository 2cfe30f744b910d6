//! Sampled convex geometry: point clouds, support functions, affine hulls and
//! the near-equality verdict.
//!
//! Two nearly convex sets are nearly equal exactly when their closures
//! coincide, so [`near_equal`] only compares closed convex hulls (through
//! support functions inside a window) plus affine-hull dimensions. The
//! reduction is invalid for sets that are not nearly convex; callers that
//! compare such sets should use [`near_equal_with`] and clear
//! `assume_near_convex`, which is then recorded in the report.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Vector};
use crate::sets::{SetDescriptor, Window};

/// Default tolerance for set-level comparisons of sampled clouds.
pub const DEFAULT_SET_TOL: f64 = 0.05;
/// Default half-width of the comparison window.
pub const DEFAULT_WINDOW_HALF: f64 = 10.0;
/// Relative singular-value cutoff for sampled affine hulls.
pub const AFFINE_REL_TOL: f64 = 1e-6;
pub const DEFAULT_DIRECTION_SEED: u64 = 0x5u64;

pub fn default_directions(dim: usize) -> usize {
    64 * dim
}

pub fn default_window(dim: usize) -> Window {
    Window::cube(dim, DEFAULT_WINDOW_HALF)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub dim: usize,
    pub points: Vec<Vector>,
    /// Per-point provenance, e.g. the input `x` or the factors of a Minkowski sum.
    pub witnesses: Option<Vec<Vec<Vector>>>,
}

impl PointCloud {
    pub fn from_points(dim: usize, points: Vec<Vector>) -> Self {
        debug_assert!(points.iter().all(|p| p.len() == dim));
        PointCloud {
            dim,
            points,
            witnesses: None,
        }
    }

    pub fn with_witnesses(dim: usize, points: Vec<Vector>, witnesses: Vec<Vec<Vector>>) -> Self {
        assert_eq!(points.len(), witnesses.len());
        PointCloud {
            dim,
            points,
            witnesses: Some(witnesses),
        }
    }

    /// Checked constructor: all points finite and of dimension `dim`.
    pub fn try_new(dim: usize, points: Vec<Vector>) -> Result<Self> {
        for p in &points {
            check_dim(dim, p.len())?;
            if !linalg::is_finite(p) {
                return Err(Error::InvalidArgument("point cloud contains a non-finite entry".into()));
            }
        }
        Ok(Self::from_points(dim, points))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn clamped(&self, window: &Window) -> PointCloud {
        PointCloud {
            dim: self.dim,
            points: self.points.iter().map(|p| window.clamp(p)).collect(),
            witnesses: self.witnesses.clone(),
        }
    }

    /// Points inside `window`, witnesses kept.
    pub fn restricted(&self, window: &Window) -> PointCloud {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| window.contains(&self.points[i])).collect();
        PointCloud {
            dim: self.dim,
            points: keep.iter().map(|&i| self.points[i].clone()).collect(),
            witnesses: self
                .witnesses
                .as_ref()
                .map(|w| keep.iter().map(|&i| w[i].clone()).collect()),
        }
    }

    /// Keeps the first point of every grid cell of side `pitch`.
    pub fn dedup(&self, pitch: f64) -> PointCloud {
        assert!(pitch > 0.0);
        let mut seen: HashMap<Vec<i64>, ()> = HashMap::with_capacity(self.len());
        let mut keep = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            let key: Vec<i64> = p.iter().map(|v| (v / pitch).floor() as i64).collect();
            if seen.insert(key, ()).is_none() {
                keep.push(i);
            }
        }
        PointCloud {
            dim: self.dim,
            points: keep.iter().map(|&i| self.points[i].clone()).collect(),
            witnesses: self
                .witnesses
                .as_ref()
                .map(|w| keep.iter().map(|&i| w[i].clone()).collect()),
        }
    }

    pub fn nearest_distance(&self, x: &Vector) -> f64 {
        self.points
            .iter()
            .map(|p| (p - x).norm_squared())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(&Vector) -> Vector) -> PointCloud {
        PointCloud {
            dim: self.dim,
            points: self.points.iter().map(f).collect(),
            witnesses: self.witnesses.clone(),
        }
    }
}

/// Support function of a cloud over a fixed direction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportProfile {
    pub directions: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub window: Window,
}

/// `n_random` seeded unit directions followed by the `2·dim` signed axes.
pub fn direction_set(dim: usize, n_random: usize, seed: u64) -> Vec<Vector> {
    let mut rng = linalg::seeded_rng(seed);
    let mut dirs: Vec<Vector> = (0..n_random).map(|_| linalg::random_unit(dim, &mut rng)).collect();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = Vector::zeros(dim);
            e[i] = s;
            dirs.push(e);
        }
    }
    dirs
}

fn support_values(cloud: &PointCloud, dirs: &[Vector], window: &Window) -> Vec<f64> {
    let clipped = cloud.clamped(window);
    dirs.iter()
        .map(|d| {
            clipped
                .points
                .iter()
                .map(|p| p.dot(d))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Support function `h(d) = max ⟨p, d⟩` of the window-clipped cloud.
pub fn support_profile(cloud: &PointCloud, n_directions: usize, window: &Window, seed: u64) -> Result<SupportProfile> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    check_dim(window.dim(), cloud.dim)?;
    let dirs = direction_set(cloud.dim, n_directions, seed);
    let values = support_values(cloud, &dirs, window);
    Ok(SupportProfile {
        directions: dirs.iter().map(|d| d.iter().copied().collect()).collect(),
        values,
        window: window.clone(),
    })
}

/// Per-direction support gaps between two clouds, as `(direction, h_C, h_D)`.
pub fn support_gaps(
    c: &PointCloud,
    d: &PointCloud,
    n_directions: usize,
    window: &Window,
    seed: u64,
) -> Result<Vec<(Vector, f64, f64)>> {
    if c.is_empty() || d.is_empty() {
        return Err(Error::EmptyCloud);
    }
    check_dim(c.dim, d.dim)?;
    check_dim(window.dim(), c.dim)?;
    let dirs = direction_set(c.dim, n_directions, seed);
    let hc = support_values(c, &dirs, window);
    let hd = support_values(d, &dirs, window);
    Ok(dirs
        .into_iter()
        .zip(hc)
        .zip(hd)
        .map(|((dir, a), b)| (dir, a, b))
        .collect())
}

/// Largest support-function gap over the shared direction set; for convex
/// bodies this estimates the Hausdorff distance from below.
pub fn hausdorff_estimate(c: &PointCloud, d: &PointCloud, n_directions: usize, window: &Window) -> Result<f64> {
    let gaps = support_gaps(c, d, n_directions, window, DEFAULT_DIRECTION_SEED)?;
    Ok(gaps.iter().map(|(_, a, b)| (a - b).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineHull {
    pub base: Vec<f64>,
    /// Orthonormal basis vectors of the parallel subspace.
    pub basis: Vec<Vec<f64>>,
    pub dim: usize,
}

impl AffineHull {
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        let n = self.base.len();
        DMatrix::from_fn(n, self.basis.len(), |r, c| self.basis[c][r])
    }
}

/// Affine hull of a cloud: centroid plus the left singular vectors of the
/// centered points whose singular value exceeds `tol` times the largest.
pub fn affine_hull(cloud: &PointCloud, tol: f64) -> Result<AffineHull> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let n = cloud.dim;
    let mean = cloud.points.iter().fold(Vector::zeros(n), |acc, p| acc + p) / cloud.len() as f64;
    // the Gram matrix keeps the SVD at dim × dim regardless of the cloud size
    let mut gram = DMatrix::zeros(n, n);
    let mut scale = 0.0f64;
    for p in &cloud.points {
        let c = p - &mean;
        scale = scale.max(c.amax());
        gram.ger(1.0, &c, &c, 1.0);
    }
    let basis = if scale == 0.0 {
        DMatrix::zeros(n, 0)
    } else {
        // singular values of the Gram matrix are squares of those of the data
        linalg::orthonormal_columns(&gram, tol * tol)
    };
    Ok(AffineHull {
        base: mean.iter().copied().collect(),
        basis: (0..basis.ncols())
            .map(|j| basis.column(j).iter().copied().collect())
            .collect(),
        dim: basis.ncols(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearEqualityReport {
    pub verdict: bool,
    pub max_support_gap: f64,
    pub worst_direction: Vec<f64>,
    pub affine_dims: (usize, usize),
    pub tolerance_used: f64,
    pub n_directions: usize,
    pub window: Window,
    /// Whether both inputs were asserted to be nearly convex. When false the
    /// verdict only speaks about closed convex hulls.
    pub assume_near_convex: bool,
}

#[derive(Debug, Clone)]
pub struct NearEqualityOptions {
    pub tol: f64,
    pub n_directions: usize,
    pub window: Window,
    pub seed: u64,
    pub affine_tol: f64,
    pub assume_near_convex: bool,
}

impl NearEqualityOptions {
    pub fn defaults(dim: usize) -> Self {
        NearEqualityOptions {
            tol: DEFAULT_SET_TOL,
            n_directions: default_directions(dim),
            window: default_window(dim),
            seed: DEFAULT_DIRECTION_SEED,
            affine_tol: AFFINE_REL_TOL,
            assume_near_convex: true,
        }
    }
}

/// Near-equality verdict for two samples of nearly convex sets.
pub fn near_equal(c: &PointCloud, d: &PointCloud, tol: f64, n_directions: usize, window: &Window) -> Result<NearEqualityReport> {
    let opts = NearEqualityOptions {
        tol,
        n_directions,
        window: window.clone(),
        ..NearEqualityOptions::defaults(c.dim)
    };
    near_equal_with(c, d, &opts)
}

pub fn near_equal_with(c: &PointCloud, d: &PointCloud, opts: &NearEqualityOptions) -> Result<NearEqualityReport> {
    let gaps = support_gaps(c, d, opts.n_directions, &opts.window, opts.seed)?;
    let (worst, gap) = gaps
        .iter()
        .map(|(dir, a, b)| (dir, (a - b).abs()))
        .fold((&gaps[0].0, -1.0), |acc, (dir, g)| if g > acc.1 { (dir, g) } else { acc });
    let dims = (
        windowed_affine_dim(c, &opts.window, opts.affine_tol)?,
        windowed_affine_dim(d, &opts.window, opts.affine_tol)?,
    );
    Ok(NearEqualityReport {
        verdict: gap <= opts.tol && dims.0 == dims.1,
        max_support_gap: gap,
        worst_direction: worst.iter().copied().collect(),
        affine_dims: dims,
        tolerance_used: opts.tol,
        n_directions: opts.n_directions,
        window: opts.window.clone(),
        assume_near_convex: opts.assume_near_convex,
    })
}

// Clamping bends unbounded affine sets onto the window faces, so the hull is
// taken over the points already inside the window when there are any.
fn windowed_affine_dim(cloud: &PointCloud, window: &Window, tol: f64) -> Result<usize> {
    let inside = cloud.restricted(window);
    let source = if inside.is_empty() { cloud.clamped(window) } else { inside };
    Ok(affine_hull(&source, tol)?.dim)
}

/// `(rec C)^⊖` for closed-form tubes `L + B(0, r)`: the orthogonal complement
/// of the parallel space of `L` (the whole space for balls).
pub fn recession_polar(set: &SetDescriptor) -> Result<SetDescriptor> {
    let (_, basis, _) = set.tube_parts().ok_or(Error::Unsupported("recession polar"))?;
    let normal = linalg::complement(&basis, set.dim());
    Ok(SetDescriptor::linear_subspace(&normal).with_label(format!("(rec {})^⊖", set.label())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    fn disk(n: usize) -> PointCloud {
        let pts = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                vector(&[t.cos(), t.sin()])
            })
            .collect();
        PointCloud::from_points(2, pts)
    }

    #[test]
    fn support_of_square_corner() {
        let sq = PointCloud::from_points(
            2,
            vec![vector(&[1.0, 1.0]), vector(&[-1.0, 1.0]), vector(&[1.0, -1.0]), vector(&[-1.0, -1.0])],
        );
        let d = vector(&[1.0, 1.0]) / 2f64.sqrt();
        let h = sq.points.iter().map(|p| p.dot(&d)).fold(f64::MIN, f64::max);
        assert!((h - 2f64.sqrt()).abs() < 1e-15);
        let hd = hausdorff_estimate(&sq, &disk(4000), 512, &Window::cube(2, 5.0)).unwrap();
        assert!((hd - (2f64.sqrt() - 1.0)).abs() < 5e-3, "{hd}");
    }

    #[test]
    fn affine_hull_of_line() {
        let pts = (0..50).map(|k| vector(&[k as f64, -(k as f64)])).collect();
        let hull = affine_hull(&PointCloud::from_points(2, pts), AFFINE_REL_TOL).unwrap();
        assert_eq!(hull.dim, 1);
        let b = &hull.basis[0];
        assert!((b[0].abs() - 0.5f64.sqrt()).abs() < 1e-12 && (b[0] + b[1]).abs() < 1e-12);
    }

    #[test]
    fn singleton_is_not_plane() {
        let origin = PointCloud::from_points(2, vec![Vector::zeros(2)]);
        let mut rng = linalg::seeded_rng(4);
        let w = default_window(2);
        let plane = PointCloud::from_points(2, (0..1000).map(|_| w.sample(&mut rng)).collect());
        let r = near_equal(&origin, &plane, DEFAULT_SET_TOL, 128, &w).unwrap();
        assert!(!r.verdict);
        assert_eq!(r.affine_dims, (0, 2));
    }

    #[test]
    fn dedup_keeps_witnesses_aligned() {
        let pts = vec![vector(&[0.0, 0.0]), vector(&[0.001, 0.0]), vector(&[1.0, 0.0])];
        let wit = pts.iter().map(|p| vec![p * 2.0]).collect();
        let c = PointCloud::with_witnesses(2, pts, wit).dedup(0.01);
        assert_eq!(c.len(), 2);
        assert_eq!(c.witnesses.unwrap()[1][0], vector(&[2.0, 0.0]));
    }

    #[test]
    fn recession_polar_of_line() {
        let line = SetDescriptor::affine(vector(&[1.0, 1.0]), &DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
        let polar = recession_polar(&line).unwrap();
        let (_, basis) = polar.affine_basis().unwrap();
        assert_eq!(basis.ncols(), 1);
        assert!(basis[(0, 0)].abs() < 1e-12);
        assert!(recession_polar(&SetDescriptor::ball(vector(&[3.0, 0.0]), 1.0)).unwrap().is_whole_space());
    }
}
