//! Coordinate spaces and the distance functions on them.
//!
//! Two models are supported: the hyperboloid model of hyperbolic space,
//! parameterized by a strictly negative curvature, and a flat Euclidean
//! comparator. Points are plain real vectors; in the hyperboloid model a
//! vector `x` in R^n names the hyperboloid point `(x, sqrt(1 + |x|^2))`,
//! which keeps every optimization problem unconstrained.

use crate::error::{Error, Result};

/// Geometry model backing a [`Space`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Hyperboloid,
    Euclidean,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Hyperboloid => "hyperboloid",
            Model::Euclidean => "euclidean",
        }
    }
}

/// A coordinate space: model, curvature and dimension.
///
/// Curvature is only meaningful for the hyperboloid model and must be
/// strictly negative there; a curvature of zero is not a valid hyperboloid
/// space (the distance scale factor `|c|` would collapse every distance to
/// zero) and callers wanting the flat limit construct a Euclidean space
/// instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Space {
    model: Model,
    curvature: f64,
    dimension: usize,
}

impl Space {
    /// Hyperboloid space with curvature `c < 0` and dimension `n >= 2`.
    pub fn hyperboloid(curvature: f64, dimension: usize) -> Result<Self> {
        if !curvature.is_finite() || curvature >= 0.0 {
            return Err(Error::Argument(format!(
                "hyperboloid curvature must be strictly negative, got {curvature}"
            )));
        }
        if dimension < 2 {
            return Err(Error::Argument(format!(
                "space dimension must be at least 2, got {dimension}"
            )));
        }
        Ok(Space {
            model: Model::Hyperboloid,
            curvature,
            dimension,
        })
    }

    /// Euclidean space of dimension `n >= 2`.
    pub fn euclidean(dimension: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::Argument(format!(
                "space dimension must be at least 2, got {dimension}"
            )));
        }
        Ok(Space {
            model: Model::Euclidean,
            curvature: 0.0,
            dimension,
        })
    }

    /// The default space: hyperboloid, curvature -1, dimension 10.
    pub fn default_hyperbolic() -> Self {
        Space {
            model: Model::Hyperboloid,
            curvature: -1.0,
            dimension: 10,
        }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Distance between two points of this space.
    ///
    /// Hyperboloid: `arccosh(sqrt((1+|x|^2)(1+|y|^2)) - x.y) * |c|`.
    /// Euclidean: the L2 norm of `x - y`.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.dimension || y.len() != self.dimension {
            return Err(Error::Argument(format!(
                "dimension mismatch: space is {}-dimensional, points are {} and {}",
                self.dimension,
                x.len(),
                y.len()
            )));
        }
        Ok(self.distance_unchecked(x, y))
    }

    /// Distance without the dimension check; used on hot paths where the
    /// inputs are produced by this crate and already conform.
    #[inline]
    pub fn distance_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.model {
            Model::Euclidean => {
                let mut sum = 0.0;
                for i in 0..x.len() {
                    let d = x[i] - y[i];
                    sum += d * d;
                }
                sum.sqrt()
            }
            Model::Hyperboloid => {
                if x == y {
                    // Bitwise-equal points are at distance exactly zero; the
                    // general formula loses that to rounding.
                    return 0.0;
                }
                let mut sx = 1.0;
                let mut sy = 1.0;
                let mut dot = 0.0;
                for i in 0..x.len() {
                    sx += x[i] * x[i];
                    sy += y[i] * y[i];
                    dot += x[i] * y[i];
                }
                hyperboloid_from_parts(sx, sy, dot, self.curvature)
            }
        }
    }
}

/// Hyperboloid distance from the precomputed pieces `1+|x|^2`, `1+|y|^2`
/// and `x.y`. Exposed within the crate so per-node optimization loops can
/// cache the reference-point norms.
#[inline]
pub(crate) fn hyperboloid_from_parts(sx: f64, sy: f64, dot: f64, curvature: f64) -> f64 {
    // The exact argument is >= 1; floating-point cancellation can push it
    // just below for near-coincident points, so clamp.
    let arg = (sx * sy).sqrt() - dot;
    arg.max(1.0).acosh() * curvature.abs()
}
