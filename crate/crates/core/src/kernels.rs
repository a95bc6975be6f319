//! Torus-integral kernels of the walk: transition probabilities, Green's
//! functions, the potential kernel ρ_d and the auxiliary kernel K_d.
//!
//! All integrands are even in θ, so only the cosine part of `e^{i(θ,r)}` is
//! ever evaluated.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeVector;
use crate::model::{char_exponent_unchecked, WalkModel};
use crate::quadrature::{torus_mean, torus_mean_scalar, Grading};

/// Upper bound on grid nodes for a single refinement level.
const MAX_NODES: f64 = (1u64 << 25) as f64;

/// Absolute floor for the convergence test, in the units of the kernel.
const ROUNDING: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Even, at least 16.
    pub points_per_axis: usize,
    /// Maximum number of grid doublings.
    pub refinement_limit: u32,
    pub rel_tol: f64,
}

impl QuadratureConfig {
    /// 256 points per axis for d ≤ 2, 64 for d = 3, 32 beyond; four doublings.
    pub fn for_dimension(d: usize) -> Self {
        let (points_per_axis, rel_tol) = match d {
            0..=2 => (256, 1e-8),
            3 => (64, 1e-6),
            _ => (32, 1e-6),
        };
        QuadratureConfig {
            points_per_axis,
            refinement_limit: 4,
            rel_tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 16 || self.points_per_axis % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "points_per_axis must be even and >= 16, got {}",
                self.points_per_axis
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("rel_tol must be positive".into()));
        }
        Ok(())
    }
}

/// A quadrature result together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub est_error: f64,
}

/// Doubles the grid until two successive levels agree to `rel_tol`, or to
/// rounding level relative to `scale`, the typical size of the integrand.
fn refine(d: usize, cfg: &QuadratureConfig, scale: f64, mut eval: impl FnMut(usize) -> f64) -> Result<KernelValue> {
    cfg.validate()?;
    let mut n = cfg.points_per_axis;
    let mut prev = eval(n);
    let mut err = f64::INFINITY;
    for _ in 0..cfg.refinement_limit {
        let next = 2 * n;
        if (next as f64).powi(d as i32) > MAX_NODES {
            break;
        }
        n = next;
        let cur = eval(n);
        err = (cur - prev).abs();
        prev = cur;
        if err <= cfg.rel_tol * cur.abs() || err <= ROUNDING * scale {
            return Ok(KernelValue {
                value: cur,
                est_error: err,
            });
        }
    }
    Err(Error::NotConverged {
        value: prev,
        est_error: err,
    })
}

/// `p(t; x, y) = (2π)^{-d} ∫ e^{φ(θ)t} cos(θ, y−x) dθ`.
pub fn transition_probability(
    model: &WalkModel,
    t: f64,
    x: &LatticeVector,
    y: &LatticeVector,
    cfg: &QuadratureConfig,
) -> Result<KernelValue> {
    model.check_dim(x)?;
    model.check_dim(y)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    let r = y - x;
    if t == 0.0 {
        let value = if r.is_zero() { 1.0 } else { 0.0 };
        return Ok(KernelValue { value, est_error: 0.0 });
    }
    let d = model.dim();
    let kv = refine(d, cfg, 1.0, |n| {
        torus_mean_scalar(d, n, Grading::Uniform, |theta| {
            (char_exponent_unchecked(model, theta) * t).exp() * r.dot(theta).cos()
        })
    })?;
    Ok(KernelValue {
        value: kv.value.clamp(0.0, 1.0),
        ..kv
    })
}

fn green_grading(lambda: f64) -> Grading {
    if lambda == 0.0 {
        Grading::Sin(6)
    } else {
        Grading::Sin(2)
    }
}

/// `G_λ(x, y) = (2π)^{-d} ∫ cos(θ, y−x) / (λ − φ(θ)) dθ`, the Laplace
/// transform of `p(·; x, y)`. λ = 0 is allowed only for transient walks
/// (d ≥ 3).
pub fn green_function(
    model: &WalkModel,
    lambda: f64,
    x: &LatticeVector,
    y: &LatticeVector,
    cfg: &QuadratureConfig,
) -> Result<KernelValue> {
    model.check_dim(x)?;
    model.check_dim(y)?;
    let d = model.dim();
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if lambda == 0.0 && d <= 2 {
        return Err(Error::DivergentGreenFunction { d });
    }
    let r = y - x;
    let scale = 1.0 / if lambda > 0.0 { lambda } else { model.total_rate() };
    refine(d, cfg, scale, |n| {
        torus_mean_scalar(d, n, green_grading(lambda), |theta| {
            r.dot(theta).cos() / (lambda - char_exponent_unchecked(model, theta))
        })
    })
}

/// Potential kernel `ρ_d(x) = a (2π)^{-d} ∫ (cos(x,θ) − 1)/φ(θ) dθ`, with
/// `ρ_d(0) = 1` by convention.
pub fn rho(model: &WalkModel, x: &LatticeVector, cfg: &QuadratureConfig) -> Result<f64> {
    model.check_dim(x)?;
    if x.is_zero() {
        return Ok(1.0);
    }
    let d = model.dim();
    let a = model.total_rate();
    let kv = refine(d, cfg, 1.0 / a, |n| {
        torus_mean_scalar(d, n, Grading::Sin(2), |theta| {
            let s = (0.5 * x.dot(theta)).sin();
            2.0 * s * s / -char_exponent_unchecked(model, theta)
        })
    })?;
    Ok(a * kv.value)
}

/// `K_d(λ; r) = (G_0(0, r) − G_λ(0, r)) / λ`, evaluated as the single
/// integral of `cos(θ,r) / ((−φ)(λ − φ))` to avoid cancellation.
pub fn k_kernel(model: &WalkModel, lambda: f64, r: &LatticeVector, cfg: &QuadratureConfig) -> Result<f64> {
    model.check_dim(r)?;
    let d = model.dim();
    if d <= 2 {
        return Err(Error::DivergentGreenFunction { d });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let kv = refine(d, cfg, 1.0 / (lambda * model.total_rate()), |n| {
        torus_mean_scalar(d, n, Grading::Sin(6), |theta| {
            let phi = char_exponent_unchecked(model, theta);
            r.dot(theta).cos() / (-phi * (lambda - phi))
        })
    })?;
    Ok(kv.value)
}

/// Left side of `∫_{-π}^{π} (1 − cos xθ)/(1 − cos θ) dθ = 2πx`.
pub fn trig_identity_check(x: u32, cfg: &QuadratureConfig) -> Result<f64> {
    if x == 0 {
        return Err(Error::InvalidArgument("x must be a positive integer".into()));
    }
    let xf = x as f64;
    let kv = refine(1, cfg, 1.0, |n| {
        torus_mean_scalar(1, n, Grading::Uniform, |theta| {
            let num = (0.5 * xf * theta[0]).sin();
            let den = (0.5 * theta[0]).sin();
            (num * num) / (den * den)
        })
    })?;
    Ok(2.0 * PI * kv.value)
}

/// Transition probabilities sampled on a uniform time grid, for a fixed set
/// of offsets `r` (values are `p(t; 0, r)`).
#[derive(Debug, Clone)]
pub struct TransitionTable {
    pub step: f64,
    pub n_steps: usize,
    pub offsets: Vec<LatticeVector>,
    /// `values[i][k] = p(k·step; 0, offsets[i])`, `k = 0..=n_steps`.
    pub values: Vec<Vec<f64>>,
    /// `cell_means[i][k]` is the mean of `p(·; 0, offsets[i])` over
    /// `[k·step, (k+1)·step]`, `k = 0..n_steps`.
    pub cell_means: Vec<Vec<f64>>,
    /// Discrepancy of the horizon values against a grid twice as fine.
    pub est_error: f64,
}

impl TransitionTable {
    pub fn index_of(&self, r: &LatticeVector) -> Option<usize> {
        self.offsets.iter().position(|o| o == r)
    }
}

/// Points per axis for time series up to `horizon`: the midpoint rule with
/// `n` nodes aliases `p(t; r)` with `p(t; r ± n)`, so the grid must be wider
/// than the spread of the walk.
fn series_points(model: &WalkModel, offsets: &[LatticeVector], horizon: f64, cfg: &QuadratureConfig) -> usize {
    let spread = (0..model.dim())
        .map(|i| model.spectral().hessian[(i, i)])
        .fold(0.0f64, f64::max)
        * horizon;
    let reach = offsets.iter().map(|r| r.sup_norm()).max().unwrap_or(0) as f64;
    let need = reach + 12.0 * spread.sqrt() + 8.0 * model.max_jump() as f64 + 16.0;
    let mut n = cfg.points_per_axis;
    while (n as f64) < need {
        n *= 2;
    }
    n
}

/// Builds a [`TransitionTable`] for `offsets` on the grid `k·step`,
/// `k = 0..=n_steps`.
pub fn transition_table(
    model: &WalkModel,
    offsets: &[LatticeVector],
    step: f64,
    n_steps: usize,
    cfg: &QuadratureConfig,
) -> Result<TransitionTable> {
    cfg.validate()?;
    for r in offsets {
        model.check_dim(r)?;
    }
    if !(step > 0.0 && step.is_finite()) || n_steps < 1 {
        return Err(Error::InvalidArgument(
            "time grid needs step > 0 and n_steps >= 1".into(),
        ));
    }
    let d = model.dim();
    let m = offsets.len();
    let horizon = step * n_steps as f64;
    let n = series_points(model, offsets, horizon, cfg);
    let stride = 2 * n_steps + 1;
    let raw = torus_mean(d, n, Grading::Uniform, m * stride, |theta, w, out| {
        let phi = char_exponent_unchecked(model, theta);
        let x = phi * step;
        let e1 = x.exp();
        let cell = if x.abs() < 1e-300 { 1.0 } else { x.exp_m1() / x };
        for (i, r) in offsets.iter().enumerate() {
            let c = w * r.dot(theta).cos();
            let block = &mut out[i * stride..(i + 1) * stride];
            let (vals, means) = block.split_at_mut(n_steps + 1);
            let mut e = 1.0;
            for k in 0..n_steps {
                vals[k] += c * e;
                means[k] += c * cell * e;
                e *= e1;
            }
            vals[n_steps] += c * e;
        }
    });
    let mut values = Vec::with_capacity(m);
    let mut cell_means = Vec::with_capacity(m);
    for i in 0..m {
        let block = &raw[i * stride..(i + 1) * stride];
        values.push(block[..=n_steps].to_vec());
        cell_means.push(block[n_steps + 1..].to_vec());
    }
    // t = 0 is exact
    for (i, r) in offsets.iter().enumerate() {
        values[i][0] = if r.is_zero() { 1.0 } else { 0.0 };
    }
    let check = torus_mean(d, 2 * n, Grading::Uniform, m, |theta, w, out| {
        let e = (char_exponent_unchecked(model, theta) * horizon).exp();
        for (i, r) in offsets.iter().enumerate() {
            out[i] += w * e * r.dot(theta).cos();
        }
    });
    let est_error = values
        .iter()
        .zip(&check)
        .map(|(v, c)| (v[n_steps] - c).abs())
        .fold(0.0, f64::max);
    Ok(TransitionTable {
        step,
        n_steps,
        offsets: offsets.to_vec(),
        values,
        cell_means,
        est_error,
    })
}
