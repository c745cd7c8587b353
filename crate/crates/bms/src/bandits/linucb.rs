//! Disjoint LinUCB: per-arm ridge regression with an optimism bonus.
//!
//! Each arm keeps A = I + sum(x xT) and b = sum(r x); the inverse is
//! maintained incrementally by the Sherman-Morrison rank-one update. The
//! context dimensions here are small (<= 17), so dense row-major matrices
//! are plenty.

use super::{argmax_allowed, validate_reward, Agent, BanditError};

/// Row-major d x d matrix helpers used by the per-arm models.
#[derive(Debug, Clone)]
struct ArmModel {
    /// A = I + sum of outer products (kept for audits and tests).
    a: Vec<f64>,
    /// A^-1, maintained by Sherman-Morrison.
    a_inv: Vec<f64>,
    b: Vec<f64>,
    theta: Vec<f64>,
}

impl ArmModel {
    fn new(d: usize) -> Self {
        let mut a = vec![0.0; d * d];
        let mut a_inv = vec![0.0; d * d];
        for i in 0..d {
            a[i * d + i] = 1.0;
            a_inv[i * d + i] = 1.0;
        }
        ArmModel {
            a,
            a_inv,
            b: vec![0.0; d],
            theta: vec![0.0; d],
        }
    }

    fn mat_vec(m: &[f64], x: &[f64], d: usize) -> Vec<f64> {
        (0..d)
            .map(|i| (0..d).map(|j| m[i * d + j] * x[j]).sum())
            .collect()
    }

    /// x^T A^-1 x, clamped at zero against roundoff.
    fn quad_form(&self, x: &[f64], d: usize) -> f64 {
        let ax = Self::mat_vec(&self.a_inv, x, d);
        let q: f64 = x.iter().zip(&ax).map(|(xi, yi)| xi * yi).sum();
        q.max(0.0)
    }

    fn observe(&mut self, x: &[f64], reward: f64, d: usize) {
        for i in 0..d {
            for j in 0..d {
                self.a[i * d + j] += x[i] * x[j];
            }
        }
        // Sherman-Morrison: (A + x xT)^-1 = A^-1 - (A^-1 x xT A^-1)/(1 + xT A^-1 x)
        let ax = Self::mat_vec(&self.a_inv, x, d);
        let denom = 1.0 + x.iter().zip(&ax).map(|(xi, yi)| xi * yi).sum::<f64>();
        for i in 0..d {
            for j in 0..d {
                self.a_inv[i * d + j] -= ax[i] * ax[j] / denom;
            }
        }
        for i in 0..d {
            self.b[i] += reward * x[i];
        }
        self.theta = Self::mat_vec(&self.a_inv, &self.b, d);
    }
}

#[derive(Debug, Clone)]
pub struct LinUcbPolicy {
    alpha: f64,
    dim: usize,
    arms: Vec<ArmModel>,
}

impl LinUcbPolicy {
    pub fn new(num_arms: usize, dim: usize, alpha: f64) -> Self {
        LinUcbPolicy {
            alpha,
            dim,
            arms: (0..num_arms).map(|_| ArmModel::new(dim)).collect(),
        }
    }

    fn check_dim<'a>(&self, ctx: Option<&'a [f64]>) -> Result<&'a [f64], BanditError> {
        let x = ctx.ok_or(BanditError::DimensionMismatch {
            expected: self.dim,
            got: 0,
        })?;
        if x.len() != self.dim {
            return Err(BanditError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(x)
    }

    /// Ridge estimate for an arm (A^-1 b).
    pub fn theta(&self, arm: usize) -> &[f64] {
        &self.arms[arm].theta
    }

    /// The selection score theta.x + alpha * sqrt(xT A^-1 x).
    pub fn score(&self, arm: usize, x: &[f64]) -> f64 {
        let m = &self.arms[arm];
        let mean: f64 = m.theta.iter().zip(x).map(|(t, xi)| t * xi).sum();
        mean + self.alpha * m.quad_form(x, self.dim).sqrt()
    }
}

impl Agent for LinUcbPolicy {
    fn select(&mut self, ctx: Option<&[f64]>, allowed: &[usize]) -> Result<usize, BanditError> {
        if allowed.is_empty() {
            return Err(BanditError::EmptyAllowed);
        }
        let x = self.check_dim(ctx)?;
        argmax_allowed(allowed, |a| self.score(a, x))
    }

    fn update(&mut self, arm: usize, ctx: Option<&[f64]>, reward: f64) -> Result<(), BanditError> {
        validate_reward(reward)?;
        let x = self.check_dim(ctx)?.to_vec();
        self.arms[arm].observe(&x, reward, self.dim);
        Ok(())
    }
}
