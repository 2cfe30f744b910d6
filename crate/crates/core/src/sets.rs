//! Set descriptors for domains, ranges and their Minkowski combinations.
//!
//! Closed-form shapes are kept symbolic: every ball, affine subspace and
//! "tube" `L + B(0, r)` around an affine subspace `L` is one [`SetDescriptor`]
//! variant, and tubes are closed under translation, negation and Minkowski
//! sums. Everything else is represented by a membership predicate, the image
//! of a map, or a sampled cloud.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::PointCloud;
use crate::linalg::{self, Map, Rng, Vector};

/// Membership test `(x, tol) -> bool`.
pub type Membership = Arc<dyn Fn(&Vector, f64) -> bool + Send + Sync>;

/// Default tolerance for membership of sampled points.
pub const MEMBERSHIP_TOL: f64 = 1e-6;

/// Fraction of tube samples placed on the tube boundary.
const BOUNDARY_FRACTION: f64 = 0.2;

/// Axis-aligned box `[lo, hi]` used as sampling and comparison window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::InvalidArgument("window must have positive dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "window requires finite lo < hi on every axis, got {lo:?} / {hi:?}"
            )));
        }
        Ok(Window { lo, hi })
    }

    /// The cube `[-half, half]^dim`.
    pub fn cube(dim: usize, half: f64) -> Self {
        assert!(dim > 0 && half > 0.0);
        Window {
            lo: vec![-half; dim],
            hi: vec![half; dim],
        }
    }

    /// The cube of half-width `half` centered at `center`.
    pub fn around(center: &Vector, half: f64) -> Self {
        Window {
            lo: center.iter().map(|c| c - half).collect(),
            hi: center.iter().map(|c| c + half).collect(),
        }
    }

    /// The box scaled by `factor` about its center.
    pub fn scaled(&self, factor: f64) -> Self {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| {
                let (c, h) = ((a + b) / 2.0, (b - a) / 2.0 * factor);
                (c - h, c + h)
            })
            .unzip();
        Window { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn sample(&self, rng: &mut Rng) -> Vector {
        Vector::from_fn(self.dim(), |i, _| rng.random_range(self.lo[i]..self.hi[i]))
    }

    /// Euclidean projection onto the box (coordinate-wise clamp).
    pub fn clamp(&self, x: &Vector) -> Vector {
        Vector::from_fn(self.dim(), |i, _| x[i].clamp(self.lo[i], self.hi[i]))
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, v)| *v >= self.lo[i] && *v <= self.hi[i])
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Preimage of the box under `x ↦ scale·x + offset`.
    fn preimage(&self, scale: f64, offset: &Vector) -> Window {
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let a = (self.lo[i] - offset[i]) / scale;
            let b = (self.hi[i] - offset[i]) / scale;
            lo.push(a.min(b));
            hi.push(a.max(b));
        }
        Window { lo, hi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetKind {
    ExactClosedForm,
    Sampled,
}

#[derive(Clone)]
enum Shape {
    Empty,
    /// `{base + s + b : s ∈ span(basis), ‖b‖ ≤ radius}` with orthonormal `basis` columns.
    Tube {
        base: Vector,
        basis: DMatrix<f64>,
        radius: f64,
    },
    Predicate(Membership),
    /// Range of `map`; membership uses `test` when known, else a reference sample.
    Image {
        map: Map,
        test: Option<Membership>,
        reference: Arc<OnceLock<PointCloud>>,
    },
    Cloud {
        cloud: Arc<PointCloud>,
        pitch: f64,
    },
    /// `{scale·x + offset : x ∈ inner}`.
    Mapped {
        inner: Arc<SetDescriptor>,
        scale: f64,
        offset: Vector,
    },
    Intersection(Arc<SetDescriptor>, Arc<SetDescriptor>),
}

/// A (nearly convex) subset of `R^dim` with membership, sampling and, where
/// available, exact affine-hull data.
#[derive(Clone)]
pub struct SetDescriptor {
    dim: usize,
    label: String,
    shape: Shape,
}

impl fmt::Debug for SetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetDescriptor")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("kind", &self.kind())
            .finish()
    }
}

impl SetDescriptor {
    pub fn empty(dim: usize) -> Self {
        SetDescriptor {
            dim,
            label: "∅".into(),
            shape: Shape::Empty,
        }
    }

    pub fn whole_space(dim: usize) -> Self {
        Self::tube(Vector::zeros(dim), DMatrix::identity(dim, dim), 0.0).with_label(format!("R^{dim}"))
    }

    pub fn point(p: Vector) -> Self {
        let dim = p.len();
        let label = format!("{{{}}}", fmt_vec(&p));
        Self::tube(p, DMatrix::zeros(dim, 0), 0.0).with_label(label)
    }

    pub fn ball(center: Vector, radius: f64) -> Self {
        assert!(radius >= 0.0, "ball radius must be nonnegative");
        let dim = center.len();
        let label = format!("B({}; {radius})", fmt_vec(&center));
        Self::tube(center, DMatrix::zeros(dim, 0), radius).with_label(label)
    }

    /// The affine subspace `base + span(basis)`; `basis` columns need not be orthonormal.
    pub fn affine(base: Vector, basis: &DMatrix<f64>) -> Self {
        let q = linalg::orthonormal_columns(basis, linalg::RANK_TOL);
        let label = format!("{} + span(dim {})", fmt_vec(&base), q.ncols());
        Self::tube(base, q, 0.0).with_label(label)
    }

    pub fn linear_subspace(basis: &DMatrix<f64>) -> Self {
        Self::affine(Vector::zeros(basis.nrows()), basis)
    }

    /// `base + span(basis) + B(0, radius)` for an orthonormal `basis`.
    pub fn tube(base: Vector, basis: DMatrix<f64>, radius: f64) -> Self {
        assert_eq!(base.len(), basis.nrows());
        // keep the base point in the orthogonal complement so labels and
        // comparisons are canonical
        let base = &base - linalg::project(&basis, &base);
        let dim = base.len();
        SetDescriptor {
            dim,
            label: "tube".into(),
            shape: Shape::Tube {
                base,
                basis,
                radius,
            },
        }
    }

    pub fn predicate(dim: usize, label: impl Into<String>, test: Membership) -> Self {
        SetDescriptor {
            dim,
            label: label.into(),
            shape: Shape::Predicate(test),
        }
    }

    /// The range of `map`, optionally with a closed-form membership test.
    pub fn image(dim: usize, label: impl Into<String>, map: Map, test: Option<Membership>) -> Self {
        SetDescriptor {
            dim,
            label: label.into(),
            shape: Shape::Image {
                map,
                test,
                reference: Arc::new(OnceLock::new()),
            },
        }
    }

    /// A sampled set: membership means lying within `tol + pitch` of a sample.
    pub fn cloud(cloud: PointCloud, pitch: f64) -> Self {
        SetDescriptor {
            dim: cloud.dim,
            label: format!("cloud({} points)", cloud.len()),
            shape: Shape::Cloud {
                cloud: Arc::new(cloud),
                pitch,
            },
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> SetKind {
        match &self.shape {
            Shape::Empty | Shape::Tube { .. } | Shape::Predicate(_) => SetKind::ExactClosedForm,
            Shape::Image { test, .. } => {
                if test.is_some() {
                    SetKind::ExactClosedForm
                } else {
                    SetKind::Sampled
                }
            }
            Shape::Cloud { .. } => SetKind::Sampled,
            Shape::Mapped { inner, .. } => inner.kind(),
            Shape::Intersection(a, b) => {
                if a.kind() == SetKind::ExactClosedForm && b.kind() == SetKind::ExactClosedForm {
                    SetKind::ExactClosedForm
                } else {
                    SetKind::Sampled
                }
            }
        }
    }

    pub fn is_empty_set(&self) -> bool {
        matches!(self.shape, Shape::Empty)
    }

    pub fn is_whole_space(&self) -> bool {
        match &self.shape {
            Shape::Tube { basis, .. } => basis.ncols() == self.dim,
            Shape::Mapped { inner, .. } => inner.is_whole_space(),
            _ => false,
        }
    }

    /// `(base, orthonormal basis, radius)` for closed-form tubes.
    pub fn tube_parts(&self) -> Option<(Vector, DMatrix<f64>, f64)> {
        match &self.shape {
            Shape::Tube {
                base,
                basis,
                radius,
            } => Some((base.clone(), basis.clone(), *radius)),
            Shape::Mapped {
                inner,
                scale,
                offset,
            } => inner
                .tube_parts()
                .map(|(b, q, r)| (b * *scale + offset, q, r * scale.abs())),
            _ => None,
        }
    }

    /// Exact affine hull `(base, orthonormal basis)` when it is known.
    pub fn affine_basis(&self) -> Option<(Vector, DMatrix<f64>)> {
        let (base, basis, radius) = self.tube_parts()?;
        if radius > 0.0 {
            Some((Vector::zeros(self.dim), DMatrix::identity(self.dim, self.dim)))
        } else {
            Some((base, basis))
        }
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        if x.len() != self.dim {
            return false;
        }
        match &self.shape {
            Shape::Empty => false,
            Shape::Tube {
                base,
                basis,
                radius,
            } => {
                let r = x - base;
                linalg::distance_to_span(basis, &r) <= radius + tol
            }
            Shape::Predicate(test) => test(x, tol),
            Shape::Image {
                map,
                test,
                reference,
            } => match test {
                Some(test) => test(x, tol),
                None => {
                    let cloud = reference.get_or_init(|| reference_image(map, self.dim));
                    cloud.nearest_distance(x) <= tol + reference_pitch(self.dim)
                }
            },
            Shape::Cloud { cloud, pitch } => cloud.nearest_distance(x) <= tol + pitch,
            Shape::Mapped {
                inner,
                scale,
                offset,
            } => inner.contains(&((x - offset) / *scale), tol / scale.abs()),
            Shape::Intersection(a, b) => a.contains(x, tol) && b.contains(x, tol),
        }
    }

    /// Draws up to `count` points of the set; `window` bounds where inputs are drawn.
    ///
    /// Closed-form shapes always return `count` points (possibly outside the
    /// window for tubes); predicate and intersection shapes use rejection and
    /// may return fewer.
    pub fn sample(&self, count: usize, window: &Window, rng: &mut Rng) -> PointCloud {
        assert_eq!(window.dim(), self.dim, "window dimension");
        let points = match &self.shape {
            Shape::Empty => Vec::new(),
            Shape::Tube {
                base,
                basis,
                radius,
            } => {
                let normal = linalg::complement(basis, self.dim);
                (0..count)
                    .map(|_| {
                        let y = window.sample(rng);
                        let mut p = base + linalg::project(basis, &(y - base));
                        if *radius > 0.0 && normal.ncols() > 0 {
                            let u = &normal * linalg::random_unit(normal.ncols(), rng);
                            let rho = if rng.random::<f64>() < BOUNDARY_FRACTION {
                                1.0
                            } else {
                                rng.random::<f64>().powf(1.0 / normal.ncols() as f64)
                            };
                            p += u * (radius * rho);
                        }
                        p
                    })
                    .collect()
            }
            Shape::Predicate(test) => {
                let mut out = Vec::with_capacity(count);
                let mut attempts = 0;
                while out.len() < count && attempts < count.max(1) * 200 {
                    let y = window.sample(rng);
                    if test(&y, 0.0) {
                        out.push(y);
                    }
                    attempts += 1;
                }
                out
            }
            Shape::Image { map, .. } => (0..count).map(|_| map(&window.sample(rng))).collect(),
            Shape::Cloud { cloud, .. } => {
                if cloud.is_empty() {
                    Vec::new()
                } else {
                    (0..count)
                        .map(|_| cloud.points[rng.random_range(0..cloud.len())].clone())
                        .collect()
                }
            }
            Shape::Mapped {
                inner,
                scale,
                offset,
            } => {
                let w = window.preimage(*scale, offset);
                inner
                    .sample(count, &w, rng)
                    .points
                    .into_iter()
                    .map(|p| p * *scale + offset)
                    .collect()
            }
            Shape::Intersection(a, b) => {
                let mut out = Vec::with_capacity(count);
                for (first, second) in [(a, b), (b, a)] {
                    for _ in 0..25 {
                        if out.len() >= count {
                            break;
                        }
                        let batch = first.sample(4 * count, window, rng);
                        out.extend(
                            batch
                                .points
                                .into_iter()
                                .filter(|p| second.contains(p, 1e-9))
                                .take(count - out.len()),
                        );
                    }
                }
                out
            }
        };
        PointCloud::from_points(self.dim, points)
    }

    /// Euclidean projection onto the closure: exact for tubes, Dykstra's
    /// algorithm for intersections of tubes, `None` otherwise.
    pub fn project(&self, x: &Vector) -> Option<Vector> {
        if let Some((base, basis, radius)) = self.tube_parts() {
            let y = x - &base;
            let along = linalg::project(&basis, &y);
            let normal = &y - &along;
            let n = normal.norm();
            return Some(if n <= radius {
                x.clone()
            } else {
                base + along + normal * (radius / n)
            });
        }
        match &self.shape {
            Shape::Intersection(a, b) => {
                a.tube_parts()?;
                b.tube_parts()?;
                let mut y = x.clone();
                let mut p = Vector::zeros(self.dim);
                let mut q = Vector::zeros(self.dim);
                for _ in 0..100_000 {
                    let ya = a.project(&(&y + &p))?;
                    p = &y + &p - &ya;
                    let yb = b.project(&(&ya + &q))?;
                    q = &ya + &q - &yb;
                    let change = (&yb - &y).norm();
                    y = yb;
                    if change <= 1e-15 * (1.0 + y.norm()) {
                        break;
                    }
                }
                Some(y)
            }
            _ => None,
        }
    }

    /// `{scale·x + offset : x ∈ self}`, exact for tubes.
    pub fn affine_image(&self, scale: f64, offset: &Vector) -> SetDescriptor {
        assert!(scale != 0.0 && scale.is_finite());
        assert_eq!(offset.len(), self.dim);
        let label = affine_label(&self.label, scale, offset);
        match &self.shape {
            Shape::Empty => SetDescriptor::empty(self.dim),
            Shape::Tube {
                base,
                basis,
                radius,
            } => SetDescriptor::tube(base * scale + offset, basis.clone(), radius * scale.abs())
                .with_label(label),
            Shape::Mapped {
                inner,
                scale: s0,
                offset: o0,
            } => SetDescriptor {
                dim: self.dim,
                label,
                shape: Shape::Mapped {
                    inner: inner.clone(),
                    scale: s0 * scale,
                    offset: o0 * scale + offset,
                },
            },
            _ => SetDescriptor {
                dim: self.dim,
                label,
                shape: Shape::Mapped {
                    inner: Arc::new(self.clone()),
                    scale,
                    offset: offset.clone(),
                },
            },
        }
    }

    pub fn translate(&self, w: &Vector) -> SetDescriptor {
        self.affine_image(1.0, w)
    }

    pub fn negate(&self) -> SetDescriptor {
        self.affine_image(-1.0, &Vector::zeros(self.dim))
    }

    /// Exact Minkowski combination `self + sign·other` when both are tubes or
    /// either is the whole space; `None` otherwise.
    pub fn exact_minkowski(&self, other: &SetDescriptor, sign: f64) -> Option<SetDescriptor> {
        assert_eq!(self.dim, other.dim);
        let op = if sign < 0.0 { "−" } else { "+" };
        let label = format!("({}) {op} ({})", self.label, other.label);
        if self.is_empty_set() || other.is_empty_set() {
            return Some(SetDescriptor::empty(self.dim));
        }
        if self.is_whole_space() || other.is_whole_space() {
            return Some(SetDescriptor::whole_space(self.dim).with_label(label));
        }
        let (b1, q1, r1) = self.tube_parts()?;
        let (b2, q2, r2) = other.tube_parts()?;
        let basis = linalg::span_sum(&q1, &q2);
        Some(SetDescriptor::tube(b1 + b2 * sign, basis, r1 + r2).with_label(label))
    }

    /// `self ∩ other`; exact when either side is the whole space or both are
    /// affine subspaces.
    pub fn intersect(&self, other: &SetDescriptor) -> SetDescriptor {
        assert_eq!(self.dim, other.dim);
        if self.is_empty_set() || other.is_empty_set() {
            return SetDescriptor::empty(self.dim);
        }
        if self.is_whole_space() {
            return other.clone();
        }
        if other.is_whole_space() {
            return self.clone();
        }
        let label = format!("({}) ∩ ({})", self.label, other.label);
        if let (Some((b1, q1, 0.0)), Some((b2, q2, 0.0))) = (self.tube_parts(), other.tube_parts()) {
            return affine_intersection(&b1, &q1, &b2, &q2).with_label(label);
        }
        SetDescriptor {
            dim: self.dim,
            label,
            shape: Shape::Intersection(Arc::new(self.clone()), Arc::new(other.clone())),
        }
    }
}

fn affine_intersection(b1: &Vector, q1: &DMatrix<f64>, b2: &Vector, q2: &DMatrix<f64>) -> SetDescriptor {
    let dim = b1.len();
    // find c1, c2 with b1 + q1 c1 = b2 + q2 c2
    let k1 = q1.ncols();
    let k2 = q2.ncols();
    let rhs = b2 - b1;
    let point = if k1 + k2 == 0 {
        if rhs.norm() <= 1e-9 {
            Some(b1.clone())
        } else {
            None
        }
    } else {
        let mut m = DMatrix::zeros(dim, k1 + k2);
        m.columns_mut(0, k1).copy_from(q1);
        m.columns_mut(k1, k2).copy_from(&(-q2));
        let c = linalg::dense_lstsq(&m, &rhs);
        let residual = (&m * &c - &rhs).norm();
        if residual <= 1e-9 * (1.0 + rhs.norm()) {
            Some(b1 + q1 * c.rows(0, k1))
        } else {
            None
        }
    };
    match point {
        Some(p) => SetDescriptor::tube(p, linalg::span_intersection(q1, q2), 0.0),
        None => SetDescriptor::empty(dim),
    }
}

const REFERENCE_SAMPLES: usize = 4096;
const REFERENCE_HALF_WIDTH: f64 = 10.0;

fn reference_image(map: &Map, dim: usize) -> PointCloud {
    let mut rng = linalg::seeded_rng(0x5eed);
    let window = Window::cube(dim, REFERENCE_HALF_WIDTH);
    let points = (0..REFERENCE_SAMPLES).map(|_| map(&window.sample(&mut rng))).collect();
    PointCloud::from_points(dim, points)
}

fn reference_pitch(dim: usize) -> f64 {
    2.0 * REFERENCE_HALF_WIDTH / (REFERENCE_SAMPLES as f64).powf(1.0 / dim as f64)
}

fn affine_label(label: &str, scale: f64, offset: &Vector) -> String {
    let scaled = if scale == 1.0 {
        label.to_string()
    } else if scale == -1.0 {
        format!("−({label})")
    } else {
        format!("{scale}·({label})")
    };
    if offset.iter().all(|v| *v == 0.0) {
        scaled
    } else {
        format!("{scaled} + {}", fmt_vec(offset))
    }
}

pub(crate) fn fmt_vec(v: &Vector) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(","))
}
