//! Tensor-product midpoint rules on the torus [-π, π]^d.
//!
//! Nodes are midpoints of a uniform grid in an auxiliary variable `s`; with
//! [`Grading::Sin`] the map `θ = w(s)` is a smooth circle diffeomorphism whose
//! derivative vanishes like `sin^m(s/2)` at `s = 0`, so nodes cluster around
//! `θ = 0` where Green-type integrands peak. The rule never samples `θ = 0`
//! because the number of nodes per axis is even.

use rayon::prelude::*;

use std::f64::consts::PI;

/// Node placement along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Grading {
    Uniform,
    /// Periodic sin^m clustering at the origin; `m` is 2, 4 or 6.
    Sin(u32),
}

#[derive(Debug, Clone)]
pub(crate) struct AxisRule {
    pub nodes: Vec<f64>,
    /// Weights for the normalized mean `(2π)^{-1} ∫ dθ`; they sum to one.
    pub weights: Vec<f64>,
}

pub(crate) fn axis_rule(n: usize, grading: Grading) -> AxisRule {
    assert!(n >= 2 && n % 2 == 0, "points per axis must be even");
    let h = 2.0 * PI / n as f64;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        let s = -PI + (k as f64 + 0.5) * h;
        let (theta, dtheta) = graded_map(s, grading);
        nodes.push(theta);
        weights.push(dtheta / n as f64);
    }
    AxisRule { nodes, weights }
}

/// `(w(s), w'(s))` with `w(±π) = ±π` and `w'` of mean one.
fn graded_map(s: f64, grading: Grading) -> (f64, f64) {
    match grading {
        Grading::Uniform => (s, 1.0),
        Grading::Sin(2) => (s - s.sin(), 1.0 - s.cos()),
        Grading::Sin(4) => (
            s - 4.0 / 3.0 * s.sin() + (2.0 * s).sin() / 6.0,
            1.0 - 4.0 / 3.0 * s.cos() + (2.0 * s).cos() / 3.0,
        ),
        Grading::Sin(6) => {
            // w' = (16/5) sin^6(s/2) = (2/5)(1 - cos s)^3
            let (sn, cs) = s.sin_cos();
            let one_minus = 1.0 - cs;
            let w = s - 1.5 * sn + 0.3 * (2.0 * s).sin() - (3.0 * s).sin() / 30.0;
            (w, 0.4 * one_minus * one_minus * one_minus)
        }
        Grading::Sin(m) => panic!("unsupported grading order {m}"),
    }
}

/// Pairwise summation of equal-length vectors in a fixed tree order.
fn pairwise_sum(mut parts: Vec<Vec<f64>>) -> Vec<f64> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// Torus mean of a vector-valued integrand.
///
/// `f(theta, weight, out)` must add `weight * value_i` into `out[i]` for each
/// of the `outputs` components. The first axis is split across threads;
/// every slice is summed sequentially and slices are combined pairwise in
/// index order, so the result does not depend on the thread count.
pub(crate) fn torus_mean<F>(d: usize, n: usize, grading: Grading, outputs: usize, f: F) -> Vec<f64>
where
    F: Fn(&[f64], f64, &mut [f64]) + Sync,
{
    let rule = axis_rule(n, grading);
    let slices: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i0| {
            let mut out = vec![0.0; outputs];
            let mut theta = vec![0.0; d];
            theta[0] = rule.nodes[i0];
            if d == 1 {
                f(&theta, rule.weights[i0], &mut out);
                return out;
            }
            let mut row = vec![0.0; outputs];
            let mut idx = vec![0usize; d - 1];
            loop {
                let mut w = rule.weights[i0];
                for (a, &k) in idx.iter().enumerate() {
                    theta[a + 1] = rule.nodes[k];
                    w *= rule.weights[k];
                }
                f(&theta, w, &mut row);
                // advance the odometer; flush the innermost row when it wraps
                let mut axis = d - 2;
                loop {
                    idx[axis] += 1;
                    if idx[axis] < n {
                        break;
                    }
                    idx[axis] = 0;
                    if axis == d - 2 {
                        for (o, r) in out.iter_mut().zip(row.iter_mut()) {
                            *o += *r;
                            *r = 0.0;
                        }
                    }
                    if axis == 0 {
                        return out;
                    }
                    axis -= 1;
                }
            }
        })
        .collect();
    pairwise_sum(slices)
}

/// Scalar convenience wrapper around [`torus_mean`].
pub(crate) fn torus_mean_scalar<F>(d: usize, n: usize, grading: Grading, f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    torus_mean(d, n, grading, 1, |theta, w, out| out[0] += w * f(theta))[0]
}
