use std::fmt;
use std::sync::Arc;

/// Boundary points within this distance count as inside.
pub const DOMAIN_TOL: f64 = 1e-12;

/// A closed convex set given by membership and Euclidean projection.
pub trait ConvexSet: Send + Sync + fmt::Debug {
    fn contains(&self, x: &[f64], tol: f64) -> bool;
    fn project(&self, x: &[f64], out: &mut [f64]);
}

/// Where the potential is finite.
#[derive(Debug, Clone)]
pub enum Domain {
    Full,
    /// Coordinatewise bounds; infinite bounds allowed.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// The nonnegative orthant `x ≥ 0`.
    Orthant,
    Convex(Arc<dyn ConvexSet>),
}

impl Domain {
    pub fn is_full(&self) -> bool {
        matches!(self, Domain::Full)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Full => x.iter().all(|v| !v.is_nan()),
            Domain::Orthant => x.iter().all(|&v| v >= -DOMAIN_TOL),
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&v, (&lo, &hi))| v >= lo - DOMAIN_TOL && v <= hi + DOMAIN_TOL),
            Domain::Convex(set) => set.contains(x, DOMAIN_TOL),
        }
    }

    pub fn project(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Domain::Full => out.copy_from_slice(x),
            Domain::Orthant => {
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = v.max(0.0);
                }
            }
            Domain::Box { lower, upper } => {
                for (i, (o, &v)) in out.iter_mut().zip(x).enumerate() {
                    *o = v.clamp(lower[i], upper[i]);
                }
            }
            Domain::Convex(set) => set.project(x, out),
        }
    }

    /// `-1` at the lower face, `+1` at the upper face, `0` in the interior of
    /// coordinate `i`. Always `0` for general convex sets.
    pub fn face(&self, x: &[f64], i: usize) -> i8 {
        let (lo, hi) = match self {
            Domain::Full | Domain::Convex(_) => return 0,
            Domain::Orthant => (0.0, f64::INFINITY),
            Domain::Box { lower, upper } => (lower[i], upper[i]),
        };
        if (x[i] - lo).abs() <= DOMAIN_TOL {
            -1
        } else if (x[i] - hi).abs() <= DOMAIN_TOL {
            1
        } else {
            0
        }
    }

    pub fn on_boundary(&self, x: &[f64]) -> bool {
        (0..x.len()).any(|i| self.face(x, i) != 0)
    }

    /// Deterministic starting point: the midpoint of a bounded box, otherwise the
    /// projection of the origin.
    pub fn center(&self, n: usize) -> Vec<f64> {
        if let Domain::Box { lower, upper } = self {
            if lower.iter().chain(upper).all(|v| v.is_finite()) {
                return lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect();
            }
        }
        let mut out = vec![0.0; n];
        self.project(&vec![0.0; n], &mut out);
        out
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Full => write!(f, "R^n"),
            Domain::Orthant => write!(f, "x >= 0"),
            Domain::Box { .. } => write!(f, "box"),
            Domain::Convex(s) => write!(f, "convex set {s:?}"),
        }
    }
}
