use std::ops::Deref;
use std::sync::Arc;

use super::{Convexity, Domain, NonsmoothKind, Potential, Smoothness};
use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// `u ↦ φ(u) − sᵀu`: a potential with a linear tilt.
#[derive(Debug, Clone)]
pub struct Tilted<B = Arc<dyn Potential>> {
    base: B,
    shift: Vec<f64>,
}

impl<B> Tilted<B>
where
    B: Deref,
    B::Target: Potential,
{
    pub fn new(base: B, shift: Vec<f64>) -> Result<Self> {
        check_dim(base.dim(), shift.len())?;
        Ok(Self { base, shift })
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }
}

impl<B> Potential for Tilted<B>
where
    B: Deref + Send + Sync + std::fmt::Debug,
    B::Target: Potential,
{
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn domain(&self) -> &Domain {
        self.base.domain()
    }

    fn smoothness(&self) -> Smoothness {
        self.base.smoothness()
    }

    fn convexity(&self) -> Convexity {
        self.base.convexity()
    }

    fn value_in_domain(&self, x: &[f64]) -> f64 {
        self.base.value_in_domain(x) - linalg::dot(&self.shift, x)
    }

    fn gradient_at(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.base.gradient_at(x, out)?;
        linalg::axpy(-1.0, &self.shift, out);
        Ok(())
    }

    /// Exact for smooth points and box/orthant constraints; for general
    /// non-smooth penalties at a kink this is the base selection shifted.
    fn min_norm_subgradient(&self, x: &[f64], out: &mut [f64]) {
        let domain = self.base.domain();
        if self.base.nonsmooth_kind() != NonsmoothKind::General
            && !matches!(domain, Domain::Convex(_))
        {
            self.smooth_gradient(x, out);
            for (i, q) in out.iter_mut().enumerate() {
                match domain.face(x, i) {
                    -1 => *q = q.min(0.0),
                    1 => *q = q.max(0.0),
                    _ => {}
                }
            }
            return;
        }
        self.base.min_norm_subgradient(x, out);
        linalg::axpy(-1.0, &self.shift, out);
    }

    fn hessian_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        self.base.hessian_vec(x, v, out)
    }

    fn has_hessian(&self) -> bool {
        self.base.has_hessian()
    }

    fn prox_into(&self, u: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        let moved: Vec<f64> = u.iter().zip(&self.shift).map(|(a, s)| a + gamma * s).collect();
        self.base.prox_into(&moved, gamma, out)
    }

    fn smooth_value(&self, x: &[f64]) -> f64 {
        self.base.smooth_value(x) - linalg::dot(&self.shift, x)
    }

    fn smooth_gradient(&self, x: &[f64], out: &mut [f64]) {
        self.base.smooth_gradient(x, out);
        linalg::axpy(-1.0, &self.shift, out);
    }

    fn nonsmooth_kind(&self) -> NonsmoothKind {
        self.base.nonsmooth_kind()
    }

    fn nonsmooth_value(&self, x: &[f64]) -> f64 {
        self.base.nonsmooth_value(x)
    }

    fn nonsmooth_prox(&self, u: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        self.base.nonsmooth_prox(u, gamma, out)
    }
}

/// `Σ αᵢ φᵢ` over smooth potentials on `R^n` with `αᵢ > 0`.
#[derive(Debug, Clone)]
pub struct ScaledSum {
    terms: Vec<(f64, Arc<dyn Potential>)>,
    domain: Domain,
}

impl ScaledSum {
    pub fn new(terms: Vec<(f64, Arc<dyn Potential>)>) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::invalid("empty sum of potentials"));
        };
        let n = first.dim();
        for (alpha, p) in &terms {
            check_dim(n, p.dim())?;
            if !(*alpha > 0.0) {
                return Err(Error::invalid("weights of a potential sum must be positive"));
            }
            if !p.domain().is_full() || p.smoothness() == Smoothness::NonSmooth {
                return Err(Error::unsupported("sums are limited to smooth unconstrained potentials"));
            }
        }
        Ok(Self { terms, domain: Domain::Full })
    }
}

impl Potential for ScaledSum {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn smoothness(&self) -> Smoothness {
        if self.terms.iter().all(|(_, p)| p.smoothness() == Smoothness::C3) {
            Smoothness::C3
        } else {
            Smoothness::C1
        }
    }

    fn convexity(&self) -> Convexity {
        self.terms.iter().fold(
            Convexity { strong: 0.0, lipschitz: 0.0, strict: false },
            |acc, (a, p)| {
                let c = p.convexity();
                Convexity {
                    strong: acc.strong + a * c.strong,
                    lipschitz: acc.lipschitz + a * c.lipschitz,
                    strict: acc.strict || c.strict,
                }
            },
        )
    }

    fn value_in_domain(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(a, p)| a * p.value_in_domain(x)).sum()
    }

    fn gradient_at(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        let mut tmp = vec![0.0; x.len()];
        for (a, p) in &self.terms {
            p.gradient_at(x, &mut tmp)?;
            linalg::axpy(*a, &tmp, out);
        }
        Ok(())
    }

    fn min_norm_subgradient(&self, x: &[f64], out: &mut [f64]) {
        self.smooth_gradient(x, out);
    }

    fn hessian_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        let mut tmp = vec![0.0; x.len()];
        for (a, p) in &self.terms {
            p.hessian_vec(x, v, &mut tmp)?;
            linalg::axpy(*a, &tmp, out);
        }
        Ok(())
    }

    fn has_hessian(&self) -> bool {
        self.terms.iter().all(|(_, p)| p.has_hessian())
    }

    fn smooth_value(&self, x: &[f64]) -> f64 {
        self.value_in_domain(x)
    }

    fn smooth_gradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let mut tmp = vec![0.0; x.len()];
        for (a, p) in &self.terms {
            p.smooth_gradient(x, &mut tmp);
            linalg::axpy(*a, &tmp, out);
        }
    }
}
