//! Time-domain c.d.f. curves of hitting times, Laplace-domain evaluators and
//! numerical extraction of tail constants.
//!
//! Curves are computed on a uniform grid `t_k = k·step`. The unknown
//! c.d.f. is represented by its increments over grid cells with a density
//! constant on each cell, which turns the convolution equations into
//! triangular recursions with a diagonal close to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{green_function, transition_table, QuadratureConfig, TransitionTable};
use crate::lattice::LatticeVector;
use crate::limits::{hitting_limit, taboo_limit, taboo_separates, TabooQuery, TailAsymptotic, TailOrder, Variant};
use crate::model::{is_simple_1d, WalkModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub step: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(step: f64, n_steps: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || n_steps < 2 {
            return Err(Error::InvalidArgument(format!(
                "time grid needs step > 0 and n_steps >= 2, got step {step}, n_steps {n_steps}"
            )));
        }
        Ok(TimeGrid { step, n_steps })
    }

    /// Grid with `step` covering `[0, horizon]`.
    pub fn with_horizon(step: f64, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let n = (horizon / step).round().max(2.0) as usize;
        TimeGrid::new(step, n)
    }

    /// Default step `0.05/a`.
    pub fn default_for(model: &WalkModel, horizon: f64) -> Result<Self> {
        TimeGrid::with_horizon(0.05 / model.total_rate(), horizon)
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.n_steps)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|k| self.time(k))
    }
}

/// Sampled improper c.d.f. with its limit value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfCurve {
    pub grid: TimeGrid,
    /// `values[k]` is the c.d.f. at `grid.time(k)`.
    pub values: Vec<f64>,
    pub limit: f64,
    pub variant: Variant,
}

impl CdfCurve {
    pub fn last(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    /// Linear interpolation at time `t` inside the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        let s = (t / self.grid.step).clamp(0.0, self.grid.n_steps as f64);
        let k = (s.floor() as usize).min(self.grid.n_steps - 1);
        let w = s - k as f64;
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Largest decrease between consecutive samples, zero for a monotone curve.
    pub fn max_decrease(&self) -> f64 {
        self.increments().iter().fold(0.0f64, |m, &d| m.max(-d))
    }
}

/// The two curves of a taboo solve together with the residual of the
/// discretized convolution system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabooCurves {
    /// `H_{x,y,z}`.
    pub target: CdfCurve,
    /// `H_{x,z,y}`.
    pub taboo: CdfCurve,
    /// Largest residual of the two defining equations over the grid.
    pub residual: f64,
}

const MAX_DIAGONAL_DEVIATION: f64 = 0.1;

fn check_diagonal(k0: f64) -> Result<()> {
    if (k0 - 1.0).abs() > MAX_DIAGONAL_DEVIATION {
        return Err(Error::StepTooCoarse(format!(
            "mean of p(t; y, y) over the first cell is {k0}; reduce the step"
        )));
    }
    Ok(())
}

/// Solves `f(t_n) = Σ_j ΔH_j K_{n-1-j}` for the increments of `H`.
fn volterra_increments(f: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = f.len() - 1;
    let mut dh = Vec::with_capacity(n);
    for m in 0..n {
        let mut acc = f[m + 1];
        for (j, &d) in dh.iter().enumerate() {
            acc -= d * kernel[m - j];
        }
        dh.push(acc / kernel[0]);
    }
    dh
}

fn cumulative(dh: &[f64]) -> Vec<f64> {
    let mut values = Vec::with_capacity(dh.len() + 1);
    let mut acc = 0.0;
    values.push(0.0);
    for &d in dh {
        acc += d;
        values.push(acc);
    }
    values
}

/// `H_{0,r}` values on the grid from a precomputed table.
fn hitting_values(table: &TransitionTable, r: &LatticeVector, a: f64) -> Result<Vec<f64>> {
    let i0 = table.index_of(&LatticeVector::zero(r.dim())).expect("origin in table");
    let kernel = &table.cell_means[i0];
    check_diagonal(kernel[0])?;
    let f: Vec<f64> = if r.is_zero() {
        table.values[i0]
            .iter()
            .enumerate()
            .map(|(k, p)| p - (-a * k as f64 * table.step).exp())
            .collect()
    } else {
        let i = table
            .index_of(r)
            .or_else(|| table.index_of(&-r))
            .expect("offset in table");
        table.values[i].clone()
    };
    Ok(cumulative(&volterra_increments(&f, kernel)))
}

fn offsets_for(rs: &[LatticeVector]) -> Vec<LatticeVector> {
    let mut out = vec![LatticeVector::zero(rs[0].dim())];
    for r in rs {
        if !out.contains(r) && !out.contains(&-r) {
            out.push(r.clone());
        }
    }
    out
}

/// `H_{x,y}(t)` on `grid`.
pub fn hitting_cdf(
    model: &WalkModel,
    x: &LatticeVector,
    y: &LatticeVector,
    grid: &TimeGrid,
    cfg: &QuadratureConfig,
) -> Result<CdfCurve> {
    model.check_dim(x)?;
    model.check_dim(y)?;
    let r = y - x;
    let table = transition_table(model, &offsets_for(&[r.clone()]), grid.step, grid.n_steps, cfg)?;
    let values = hitting_values(&table, &r, model.total_rate())?;
    let limit = hitting_limit(model, x, y, cfg)?;
    Ok(CdfCurve {
        grid: *grid,
        values,
        limit,
        variant: Variant::Plus,
    })
}

/// Cell averages of a c.d.f. sampled at the grid nodes.
fn cell_averages(h: &[f64]) -> Vec<f64> {
    h.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// `(H_{x,y,z}, H_{x,z,y})` from the convolution system
/// `H_{x,y} = H_{x,y,z} + H_{x,z,y} ∗ H_{z,y}` and
/// `H_{x,z} = H_{x,z,y} + H_{x,y,z} ∗ H_{y,z}`.
pub fn taboo_cdf(model: &WalkModel, q: &TabooQuery, grid: &TimeGrid, cfg: &QuadratureConfig) -> Result<TabooCurves> {
    q.check(model)?;
    let a = model.total_rate();
    let r_xy = &q.y - &q.x;
    let r_xz = &q.z - &q.x;
    let r_zy = &q.y - &q.z;
    let table = transition_table(
        model,
        &offsets_for(&[r_xy.clone(), r_xz.clone(), r_zy.clone()]),
        grid.step,
        grid.n_steps,
        cfg,
    )?;
    // H_{z,y} = H_{y,z} by symmetry of the walk
    let h_zy = hitting_values(&table, &r_zy, a)?;
    let (h_xy, h_xz) = if taboo_separates(model, q) {
        // every path to y visits z first: H_{x,y} = H_{x,z} ∗ H_{z,y}
        let h_xz = hitting_values(&table, &r_xz, a)?;
        (stieltjes_convolution(&h_xz, &h_zy), h_xz)
    } else if taboo_separates(model, &q.swapped()) {
        let h_xy = hitting_values(&table, &r_xy, a)?;
        let h_xz = stieltjes_convolution(&h_xy, &h_zy);
        (h_xy, h_xz)
    } else {
        (hitting_values(&table, &r_xy, a)?, hitting_values(&table, &r_xz, a)?)
    };
    let (target, taboo, residual) = solve_taboo_system(&h_xy, &h_xz, &h_zy, &h_zy);
    Ok(TabooCurves {
        target: CdfCurve {
            grid: *grid,
            values: target,
            limit: taboo_limit(model, q, cfg)?,
            variant: Variant::Plus,
        },
        taboo: CdfCurve {
            grid: *grid,
            values: taboo,
            limit: taboo_limit(model, &q.swapped(), cfg)?,
            variant: Variant::Plus,
        },
        residual,
    })
}

/// `(F ∗ G)(t_n)` with `dF` constant on cells and `G` averaged over cells,
/// the same rule the taboo system uses.
fn stieltjes_convolution(f: &[f64], g: &[f64]) -> Vec<f64> {
    let m = cell_averages(g);
    let df: Vec<f64> = f.windows(2).map(|w| w[1] - w[0]).collect();
    let mut out = vec![0.0; f.len()];
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        *slot = (0..k).map(|j| df[j] * m[k - 1 - j]).sum();
    }
    out
}

/// Time-stepping for the coupled system; returns both curves and the
/// largest residual of the discrete equations.
pub(crate) fn solve_taboo_system(h_xy: &[f64], h_xz: &[f64], h_zy: &[f64], h_yz: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let n = h_xy.len() - 1;
    let m = cell_averages(h_zy);
    let nn = cell_averages(h_yz);
    let mut da: Vec<f64> = Vec::with_capacity(n);
    let mut db: Vec<f64> = Vec::with_capacity(n);
    let (mut a_prev, mut b_prev) = (0.0, 0.0);
    for k in 0..n {
        let mut rhs_a = h_xy[k + 1] - a_prev;
        let mut rhs_b = h_xz[k + 1] - b_prev;
        for j in 0..k {
            rhs_a -= db[j] * m[k - j];
            rhs_b -= da[j] * nn[k - j];
        }
        let det = 1.0 - m[0] * nn[0];
        let dak = (rhs_a - m[0] * rhs_b) / det;
        let dbk = (rhs_b - nn[0] * rhs_a) / det;
        da.push(dak);
        db.push(dbk);
        a_prev += dak;
        b_prev += dbk;
    }
    let a = cumulative(&da);
    let b = cumulative(&db);
    let mut residual = 0.0f64;
    for k in 0..n {
        let mut ra = h_xy[k + 1] - a[k + 1];
        let mut rb = h_xz[k + 1] - b[k + 1];
        for j in 0..=k {
            ra -= db[j] * m[k - j];
            rb -= da[j] * nn[k - j];
        }
        residual = residual.max(ra.abs()).max(rb.abs());
    }
    (a, b, residual)
}

/// Laplace–Stieltjes transform `∫ e^{-λt} dH_{x,y}(t)`.
pub fn laplace_hitting(
    model: &WalkModel,
    x: &LatticeVector,
    y: &LatticeVector,
    lambda: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    model.check_dim(x)?;
    model.check_dim(y)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let zero = LatticeVector::zero(model.dim());
    let g00 = green_function(model, lambda, &zero, &zero, cfg)?.value;
    if x == y {
        Ok(1.0 - 1.0 / ((lambda + model.total_rate()) * g00))
    } else {
        Ok(green_function(model, lambda, &zero, &(y - x), cfg)?.value / g00)
    }
}

/// Laplace–Stieltjes transform of `H_{x,y,z}`.
pub fn laplace_taboo(model: &WalkModel, q: &TabooQuery, lambda: f64, cfg: &QuadratureConfig) -> Result<f64> {
    q.check(model)?;
    let h_xy = laplace_hitting(model, &q.x, &q.y, lambda, cfg)?;
    let h_xz = laplace_hitting(model, &q.x, &q.z, lambda, cfg)?;
    let h_zy = laplace_hitting(model, &q.z, &q.y, lambda, cfg)?;
    let h_yz = laplace_hitting(model, &q.y, &q.z, lambda, cfg)?;
    let value = (h_xy - h_xz * h_zy) / (1.0 - h_zy * h_yz);
    Ok(value.clamp(0.0, 1.0))
}

/// Numerical Laplace–Stieltjes transform of a curve, with the density taken
/// constant on each cell and no mass beyond the horizon.
pub fn curve_laplace(curve: &CdfCurve, lambda: f64) -> f64 {
    let dt = curve.grid.step;
    let cell = -(-lambda * dt).exp_m1() / (lambda * dt);
    let atom = if curve.variant == Variant::Minus {
        curve.values[0]
    } else {
        0.0
    };
    atom + curve
        .increments()
        .iter()
        .enumerate()
        .map(|(j, d)| d * (-lambda * curve.grid.time(j)).exp() * cell)
        .sum::<f64>()
}

/// `H⁻` from `H` by undoing the convolution with the exponential holding
/// time: `H⁻ = H + H'/a`.
pub fn minus_from_plus(curve: &CdfCurve, model: &WalkModel) -> Result<CdfCurve> {
    let a = model.total_rate();
    let h = &curve.values;
    let dt = curve.grid.step;
    let n = h.len() - 1;
    let deriv = |k: usize, s: usize| -> f64 {
        let sf = s as f64 * dt;
        if k >= s && k + s <= n {
            (h[k + s] - h[k - s]) / (2.0 * sf)
        } else if k + 2 * s <= n {
            (-3.0 * h[k] + 4.0 * h[k + s] - h[k + 2 * s]) / (2.0 * sf)
        } else {
            (3.0 * h[k] - 4.0 * h[k - s] + h[k - 2 * s]) / (2.0 * sf)
        }
    };
    let values: Vec<f64> = (0..=n).map(|k| h[k] + deriv(k, 1) / a).collect();
    let noise = (0..=n)
        .map(|k| (deriv(k, 1) - deriv(k, 2)).abs() / a)
        .fold(0.0, f64::max);
    if noise > 0.01 * curve.limit.max(f64::MIN_POSITIVE) {
        return Err(Error::StepTooCoarse(format!(
            "derivative estimates at step {dt} and {} disagree by {noise}",
            2.0 * dt
        )));
    }
    Ok(CdfCurve {
        grid: curve.grid,
        values,
        limit: curve.limit,
        variant: Variant::Minus,
    })
}

/// Ladder exponents `k` of `λ_k = a·2^{-k}`.
const LADDER: std::ops::RangeInclusive<i32> = 8..=16;

/// Estimates the tail constant of `H_{x,y,z}` from the small-λ behaviour
/// of its Laplace transform.
///
/// In d = 1 the deficit `C/√t` transforms to `C√π/√λ`, so `√(λ/π)·F(λ)`
/// with `F = (H(∞) - Ȟ(λ))/λ` is fitted by a quadratic in `√λ` and
/// evaluated at zero. In d = 2 the deficit `C/ln t` gives
/// `H(∞) - Ȟ(λ) ≈ C/ln(a/λ)`, read off at the smallest rung.
pub fn tail_extract(model: &WalkModel, q: &TabooQuery, cfg: &QuadratureConfig) -> Result<TailAsymptotic> {
    q.check(model)?;
    let d = model.dim();
    if is_simple_1d(model) {
        return Err(Error::InvalidArgument(
            "tail extraction needs a walk other than the simple one".into(),
        ));
    }
    if d > 2 {
        return Err(Error::InvalidArgument(format!(
            "tail extraction is available for d <= 2, got d = {d}"
        )));
    }
    let a = model.total_rate();
    let limit = taboo_limit(model, q, cfg)?;
    let mut lambdas = Vec::new();
    let mut raw = Vec::new();
    for k in LADDER {
        let lambda = a * 2f64.powi(-k);
        let deficit = limit - laplace_taboo(model, q, lambda, cfg)?;
        let est = if d == 1 {
            deficit / (std::f64::consts::PI * lambda).sqrt()
        } else {
            deficit * (a / lambda).ln()
        };
        lambdas.push(lambda);
        raw.push(est);
    }
    let (previous, last) = (raw[raw.len() - 2], raw[raw.len() - 1]);
    if (last - previous).abs() > 0.1 * last.abs().max(previous.abs()) {
        return Err(Error::ExtrapolationUnstable { previous, last });
    }
    let constant = if d == 1 {
        let s: Vec<f64> = lambdas.iter().map(|l| (l / a).sqrt()).collect();
        quadratic_intercept(&s, &raw)
    } else {
        last
    };
    let order = if d == 1 {
        TailOrder::InverseSqrtT
    } else {
        TailOrder::InverseLogT
    };
    Ok(TailAsymptotic { order, constant })
}

/// Intercept of the least-squares quadratic through `(s_i, v_i)`.
fn quadratic_intercept(s: &[f64], v: &[f64]) -> f64 {
    let design = nalgebra::DMatrix::from_fn(s.len(), 3, |i, j| s[i].powi(j as i32));
    let rhs = nalgebra::DVector::from_column_slice(v);
    let coef = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .expect("svd with both factors");
    coef[0]
}
