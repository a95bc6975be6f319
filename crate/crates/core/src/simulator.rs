//! Verification oracles: Monte Carlo paths of the walk and an absorption
//! solver for the embedded jump chain on a finite box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeVector;
use crate::limits::{TabooQuery, TailAsymptotic, TailOrder};
use crate::model::WalkModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub n_paths: u64,
    pub seed: u64,
    /// Paths still unresolved after this many jumps are cut off.
    pub max_jumps: u64,
}

impl SimConfig {
    /// Horizon `200/a` and a cap of one million jumps per path.
    pub fn for_model(model: &WalkModel, n_paths: u64, seed: u64) -> Self {
        SimConfig {
            horizon: 200.0 / model.total_rate(),
            n_paths,
            seed,
            max_jumps: 1_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub probability: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub seed: u64,
    /// Paths cut off by the jump cap, counted as misses.
    pub truncated: u64,
}

impl McEstimate {
    fn from_count(hits: u64, truncated: u64, sim: &SimConfig) -> Self {
        let n = sim.n_paths as f64;
        let p = hits as f64 / n;
        McEstimate {
            probability: p,
            std_error: (p * (1.0 - p) / n).sqrt(),
            n_paths: sim.n_paths,
            seed: sim.seed,
            truncated,
        }
    }
}

/// Outcome of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PathOutcome {
    /// Hit of the target at this time.
    Hit(f64),
    /// Taboo visited, or still wandering at the horizon.
    Miss,
    Truncated,
}

/// Cumulative jump law of the embedded chain.
struct JumpSampler {
    cumulative: Vec<f64>,
    jumps: Vec<Vec<i64>>,
}

impl JumpSampler {
    fn new(model: &WalkModel) -> Self {
        let a = model.total_rate();
        let mut acc = 0.0;
        let mut cumulative = Vec::new();
        let mut jumps = Vec::new();
        for (z, r) in model.jumps().iter() {
            acc += r / a;
            cumulative.push(acc);
            jumps.push(z.0.clone());
        }
        JumpSampler { cumulative, jumps }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> &[i64] {
        let u: f64 = rng.gen::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.jumps.len() - 1);
        &self.jumps[k]
    }
}

fn exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln() / rate
}

/// Random stream for path `index`: the same path is drawn however the work
/// is split across threads.
fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Start, target and optional taboo of a simulated path.
struct Endpoints<'a> {
    x: &'a [i64],
    y: &'a [i64],
    z: Option<&'a [i64]>,
}

impl<'a> From<&'a TabooQuery> for Endpoints<'a> {
    fn from(q: &'a TabooQuery) -> Self {
        Endpoints {
            x: &q.x.0,
            y: &q.y.0,
            z: Some(&q.z.0),
        }
    }
}

/// Runs one path from `x` until it hits `y` (success), lands on `z` after the
/// first jump, or passes `t_max`. With `minus` the clock starts at the first
/// jump.
fn run_path(
    sampler: &JumpSampler,
    a: f64,
    q: &Endpoints<'_>,
    t_max: f64,
    max_jumps: u64,
    minus: bool,
    rng: &mut ChaCha8Rng,
) -> PathOutcome {
    let mut pos = q.x.to_vec();
    let first = exponential(rng, a);
    let mut time = if minus { 0.0 } else { first };
    let mut jumps = 0u64;
    loop {
        if time > t_max {
            return PathOutcome::Miss;
        }
        if jumps >= max_jumps {
            return PathOutcome::Truncated;
        }
        for (p, dz) in pos.iter_mut().zip(sampler.sample(rng)) {
            *p += dz;
        }
        jumps += 1;
        if q.z == Some(pos.as_slice()) {
            return PathOutcome::Miss;
        }
        if pos == q.y {
            return PathOutcome::Hit(time);
        }
        time += exponential(rng, a);
    }
}

fn simulate(model: &WalkModel, q: &TabooQuery, t_max: f64, sim: &SimConfig, minus: bool) -> Result<Vec<PathOutcome>> {
    q.check(model)?;
    simulate_endpoints(model, &Endpoints::from(q), t_max, sim, minus)
}

fn simulate_endpoints(
    model: &WalkModel,
    q: &Endpoints<'_>,
    t_max: f64,
    sim: &SimConfig,
    minus: bool,
) -> Result<Vec<PathOutcome>> {
    sim.validate()?;
    let sampler = JumpSampler::new(model);
    let a = model.total_rate();
    Ok((0..sim.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(sim.seed, i);
            run_path(&sampler, a, q, t_max, sim.max_jumps, minus, &mut rng)
        })
        .collect())
}

fn check_times(times: &[f64], sim: &SimConfig) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("at least one time is required".into()));
    }
    let mut t_max = 0.0f64;
    for &t in times {
        if !(t >= 0.0 && t <= sim.horizon) {
            return Err(Error::InvalidArgument(format!("time {t} outside [0, {}]", sim.horizon)));
        }
        t_max = t_max.max(t);
    }
    Ok(t_max)
}

fn tally(outcomes: &[PathOutcome], times: &[f64], sim: &SimConfig) -> Vec<McEstimate> {
    let truncated = outcomes.iter().filter(|o| **o == PathOutcome::Truncated).count() as u64;
    times
        .iter()
        .map(|&t| {
            let hits = outcomes
                .iter()
                .filter(|o| matches!(o, PathOutcome::Hit(s) if *s <= t))
                .count() as u64;
            McEstimate::from_count(hits, truncated, sim)
        })
        .collect()
}

/// Estimates of `H_{x,y,z}(t)` for every `t` in `times`, from one shared set
/// of paths.
pub fn estimate_taboo_cdf_many(
    model: &WalkModel,
    q: &TabooQuery,
    times: &[f64],
    sim: &SimConfig,
) -> Result<Vec<McEstimate>> {
    let t_max = check_times(times, sim)?;
    let outcomes = simulate(model, q, t_max, sim, false)?;
    Ok(tally(&outcomes, times, sim))
}

/// Monte Carlo estimate of `H_{x,y,z}(t)`.
pub fn estimate_taboo_cdf(model: &WalkModel, q: &TabooQuery, t: f64, sim: &SimConfig) -> Result<McEstimate> {
    Ok(estimate_taboo_cdf_many(model, q, &[t], sim)?[0])
}

/// Estimates of `H⁻_{x,y,z}(t)` (clock started at the first jump).
pub fn estimate_minus_cdf_many(
    model: &WalkModel,
    q: &TabooQuery,
    times: &[f64],
    sim: &SimConfig,
) -> Result<Vec<McEstimate>> {
    let t_max = check_times(times, sim)?;
    let outcomes = simulate(model, q, t_max, sim, true)?;
    Ok(tally(&outcomes, times, sim))
}

/// Monte Carlo estimate of `H⁻_{x,y,z}(t)`.
pub fn estimate_minus_cdf(model: &WalkModel, q: &TabooQuery, t: f64, sim: &SimConfig) -> Result<McEstimate> {
    Ok(estimate_minus_cdf_many(model, q, &[t], sim)?[0])
}

/// Estimates of `H_{x,y}(t)`, the hitting time without a taboo point.
pub fn estimate_hitting_cdf_many(
    model: &WalkModel,
    x: &LatticeVector,
    y: &LatticeVector,
    times: &[f64],
    sim: &SimConfig,
) -> Result<Vec<McEstimate>> {
    model.check_dim(x)?;
    model.check_dim(y)?;
    let t_max = check_times(times, sim)?;
    let ends = Endpoints {
        x: &x.0,
        y: &y.0,
        z: None,
    };
    let outcomes = simulate_endpoints(model, &ends, t_max, sim, false)?;
    Ok(tally(&outcomes, times, sim))
}

/// Estimates of `H_{x,y,z}(horizon) - H_{x,y,z}(t)`, the probability of a
/// hit in `(t, horizon]`. Counting these hits directly keeps the relative
/// error small where the deficit itself is small.
pub fn estimate_taboo_deficit_many(
    model: &WalkModel,
    q: &TabooQuery,
    times: &[f64],
    sim: &SimConfig,
) -> Result<Vec<McEstimate>> {
    check_times(times, sim)?;
    let outcomes = simulate(model, q, sim.horizon, sim, false)?;
    let truncated = outcomes.iter().filter(|o| **o == PathOutcome::Truncated).count() as u64;
    Ok(times
        .iter()
        .map(|&t| {
            let hits = outcomes
                .iter()
                .filter(|o| matches!(o, PathOutcome::Hit(s) if *s > t))
                .count() as u64;
            McEstimate::from_count(hits, truncated, sim)
        })
        .collect())
}

const BRACKET_SLACK: f64 = 1e-12;

/// Certified enclosure of `H_{x,y,z}(∞)` from the absorption oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionBracket {
    pub lower: f64,
    pub upper: f64,
    pub box_radius: i64,
}

impl AbsorptionBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Membership up to the accuracy of the linear solves.
    pub fn contains(&self, v: f64) -> bool {
        self.lower - BRACKET_SLACK <= v && v <= self.upper + BRACKET_SLACK
    }
}

/// Indexing of the box `{‖v‖_∞ ≤ R}`.
struct BoxIndex {
    d: usize,
    radius: i64,
    side: usize,
}

impl BoxIndex {
    fn len(&self) -> usize {
        self.side.pow(self.d as u32)
    }

    fn index(&self, v: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for &c in v.iter() {
            if c.abs() > self.radius {
                return None;
            }
            idx = idx * self.side + (c + self.radius) as usize;
        }
        Some(idx)
    }

    fn point(&self, mut idx: usize) -> Vec<i64> {
        let mut v = vec![0i64; self.d];
        for c in v.iter_mut().rev() {
            *c = (idx % self.side) as i64 - self.radius;
            idx /= self.side;
        }
        v
    }

    /// Exterior class of a point outside the box: in one dimension the two
    /// sides are kept apart, otherwise the exterior is a single class.
    fn side_of(&self, v: &[i64]) -> usize {
        if self.d == 1 && v[0] > self.radius {
            1
        } else {
            0
        }
    }

    fn n_sides(&self) -> usize {
        if self.d == 1 {
            2
        } else {
            1
        }
    }
}

/// Where a jump from an interior state lands.
#[derive(Debug, Clone, Copy)]
enum Landing {
    Free(usize),
    Target,
    Taboo,
    Outside(usize),
}

/// Sparse description of the embedded chain restricted to the box.
struct BoxChain {
    /// For every box state, the landing of each jump with its probability.
    transitions: Vec<Vec<(Landing, f64)>>,
    /// Position of each box state in the unknown vector, `None` for y and z.
    free: Vec<Option<usize>>,
    n_free: usize,
}

impl BoxChain {
    fn build(model: &WalkModel, q: &TabooQuery, bx: &BoxIndex) -> Self {
        let a = model.total_rate();
        let iy = bx.index(&q.y.0).expect("target inside box");
        let iz = bx.index(&q.z.0).expect("taboo inside box");
        let mut free = vec![None; bx.len()];
        let mut n_free = 0;
        for (i, slot) in free.iter_mut().enumerate() {
            if i != iy && i != iz {
                *slot = Some(n_free);
                n_free += 1;
            }
        }
        let jumps: Vec<(Vec<i64>, f64)> = model.jumps().iter().map(|(z, r)| (z.0.clone(), r / a)).collect();
        let transitions = (0..bx.len())
            .map(|i| {
                let u = bx.point(i);
                jumps
                    .iter()
                    .map(|(dz, p)| {
                        let v: Vec<i64> = u.iter().zip(dz).map(|(a, b)| a + b).collect();
                        let landing = match bx.index(&v) {
                            Some(j) if j == iy => Landing::Target,
                            Some(j) if j == iz => Landing::Taboo,
                            Some(j) => Landing::Free(free[j].expect("free state")),
                            None => Landing::Outside(bx.side_of(&v)),
                        };
                        (landing, *p)
                    })
                    .collect()
            })
            .collect();
        BoxChain {
            transitions,
            free,
            n_free,
        }
    }

    fn free_states(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.free.iter().enumerate().filter_map(|(i, f)| f.map(|k| (i, k)))
    }

    /// `(I - P) h` on the free states.
    fn apply(&self, h: &[f64], out: &mut [f64]) {
        for (i, k) in self.free_states() {
            let mut acc = h[k];
            for &(landing, p) in &self.transitions[i] {
                if let Landing::Free(j) = landing {
                    acc -= p * h[j];
                }
            }
            out[k] = acc;
        }
    }

    /// Right-hand side for unit value on the target or on one exterior class.
    fn rhs(&self, source: Option<usize>) -> Vec<f64> {
        let mut b = vec![0.0; self.n_free];
        for (i, k) in self.free_states() {
            for &(landing, p) in &self.transitions[i] {
                match (landing, source) {
                    (Landing::Target, None) => b[k] += p,
                    (Landing::Outside(s), Some(t)) if s == t => b[k] += p,
                    _ => {}
                }
            }
        }
        b
    }
}

/// Conjugate gradients for the symmetric positive definite `I - P`.
fn conjugate_gradient(chain: &BoxChain, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let tol = 1e-28 * rr.max(1e-300);
    for _ in 0..10 * n.max(10) {
        if rr <= tol {
            break;
        }
        chain.apply(&p, &mut ap);
        let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    x
}

/// Encloses `H_{x,y,z}(∞)` by solving the embedded chain on the box of
/// radius `box_radius`.
///
/// The unknown hitting probabilities outside the box are bracketed by the
/// maximum principle: a walk that leaves the box has to come back through
/// the states it can enter by, so its value lies between the smallest and
/// largest value there (between 0 and the largest value for a transient
/// walk, which may never return). These bounds are iterated to a fixed
/// point.
pub fn absorption_bracket(model: &WalkModel, q: &TabooQuery, box_radius: i64) -> Result<AbsorptionBracket> {
    q.check(model)?;
    if [&q.x, &q.y, &q.z].iter().any(|v| v.sup_norm() > box_radius) {
        return Err(Error::QueryOutsideBox { radius: box_radius });
    }
    let d = model.dim();
    let bx = BoxIndex {
        d,
        radius: box_radius,
        side: (2 * box_radius + 1) as usize,
    };
    let chain = BoxChain::build(model, q, &bx);
    let n_sides = bx.n_sides();
    let h0 = conjugate_gradient(&chain, &chain.rhs(None));
    let escapes: Vec<Vec<f64>> = (0..n_sides)
        .map(|s| conjugate_gradient(&chain, &chain.rhs(Some(s))))
        .collect();

    // entry layers: states reachable by one jump from outside, per side
    let iy = bx.index(&q.y.0).expect("target inside box");
    let iz = bx.index(&q.z.0).expect("taboo inside box");
    let mut layers: Vec<Vec<usize>> = vec![Vec::new(); n_sides];
    for i in 0..bx.len() {
        let u = bx.point(i);
        for (dz, _) in model.jumps().iter() {
            let from: Vec<i64> = u.iter().zip(&dz.0).map(|(a, b)| a - b).collect();
            if bx.index(&from).is_none() {
                let s = bx.side_of(&from);
                if !layers[s].contains(&i) {
                    layers[s].push(i);
                }
            }
        }
    }
    let value = |i: usize, bounds: &[f64]| -> f64 {
        if i == iy {
            1.0
        } else if i == iz {
            0.0
        } else {
            let k = chain.free[i].expect("free state");
            h0[k] + (0..n_sides).map(|s| bounds[s] * escapes[s][k]).sum::<f64>()
        }
    };
    let transient = d >= 3;
    let mut lo = vec![0.0; n_sides];
    let mut hi = vec![1.0; n_sides];
    for _ in 0..1_000_000 {
        let mut new_lo = lo.clone();
        let mut new_hi = hi.clone();
        for s in 0..n_sides {
            if layers[s].is_empty() {
                continue;
            }
            if !transient {
                new_lo[s] = layers[s]
                    .iter()
                    .map(|&i| value(i, &lo))
                    .fold(f64::INFINITY, f64::min)
                    .max(lo[s]);
            }
            new_hi[s] = layers[s]
                .iter()
                .map(|&i| value(i, &hi))
                .fold(f64::NEG_INFINITY, f64::max)
                .min(hi[s]);
        }
        let change = (0..n_sides)
            .map(|s| (new_lo[s] - lo[s]).abs() + (new_hi[s] - hi[s]).abs())
            .sum::<f64>();
        lo = new_lo;
        hi = new_hi;
        if change < 1e-15 {
            break;
        }
    }

    // first jump from x, with y and z judged as landings
    let a = model.total_rate();
    let mut lower = 0.0;
    let mut upper = 0.0;
    for (dz, r) in model.jumps().iter() {
        let p = r / a;
        let v: Vec<i64> = q.x.0.iter().zip(&dz.0).map(|(a, b)| a + b).collect();
        let (l, u) = match bx.index(&v) {
            Some(i) => (value(i, &lo), value(i, &hi)),
            None => {
                let s = bx.side_of(&v);
                (lo[s], hi[s])
            }
        };
        lower += p * l;
        upper += p * u;
    }
    Ok(AbsorptionBracket {
        lower: lower.clamp(0.0, 1.0),
        upper: upper.clamp(0.0, 1.0),
        box_radius,
    })
}

/// Midpoint of [`absorption_bracket`], or `BracketTooWide` when its width
/// exceeds `tolerance`.
pub fn absorption_limit_oracle(model: &WalkModel, q: &TabooQuery, box_radius: i64, tolerance: f64) -> Result<f64> {
    let b = absorption_bracket(model, q, box_radius)?;
    if b.width() > tolerance {
        return Err(Error::BracketTooWide {
            lower: b.lower,
            upper: b.upper,
            tolerance,
        });
    }
    Ok(b.midpoint())
}

/// Least-squares classification of the decay of sampled deficits.
///
/// Candidate models for `ln D(t)` are `c - ½ ln t`, `c - ln ln t`,
/// `c - ln t` and `c - r t`; the one with the smallest residual wins.
pub fn fit_tail_order(samples: &[(f64, f64)]) -> Result<TailAsymptotic> {
    if samples.len() < 3 {
        return Err(Error::DegenerateSamples(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|&(t, d)| !(t > 1.0 && t.is_finite() && d > 0.0 && d.is_finite()))
    {
        return Err(Error::DegenerateSamples(
            "times must exceed 1 and deficits must be positive".into(),
        ));
    }
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::DegenerateSamples("need at least 3 distinct times".into()));
    }
    let logs: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();

    // fixed-slope classes: ln D = c - g(t)
    let fixed = |g: &dyn Fn(f64) -> f64| -> (f64, f64) {
        let shifted: Vec<f64> = samples.iter().zip(&logs).map(|(s, l)| l + g(s.0)).collect();
        let c = shifted.iter().sum::<f64>() / shifted.len() as f64;
        let res = shifted.iter().map(|v| (v - c).powi(2)).sum::<f64>();
        (c, res)
    };
    let mut best: (f64, TailAsymptotic) = {
        let (c, res) = fixed(&|t: f64| 0.5 * t.ln());
        (
            res,
            TailAsymptotic {
                order: TailOrder::InverseSqrtT,
                constant: c.exp(),
            },
        )
    };
    let candidates: [(TailOrder, Box<dyn Fn(f64) -> f64>); 2] = [
        (TailOrder::InverseLogT, Box::new(|t: f64| t.ln().ln())),
        (TailOrder::InversePowT { exponent: 1.0 }, Box::new(|t: f64| t.ln())),
    ];
    for (order, g) in candidates.iter() {
        let (c, res) = fixed(g.as_ref());
        if res < best.0 {
            best = (
                res,
                TailAsymptotic {
                    order: *order,
                    constant: c.exp(),
                },
            );
        }
    }
    // exponential class: ln D = c - r t
    let n = samples.len() as f64;
    let mt = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let ml = logs.iter().sum::<f64>() / n;
    let stt = samples.iter().map(|s| (s.0 - mt).powi(2)).sum::<f64>();
    let stl = samples
        .iter()
        .zip(&logs)
        .map(|(s, l)| (s.0 - mt) * (l - ml))
        .sum::<f64>();
    let slope = stl / stt;
    let c = ml - slope * mt;
    let res = samples
        .iter()
        .zip(&logs)
        .map(|(s, l)| (l - c - slope * s.0).powi(2))
        .sum::<f64>();
    if res < best.0 && slope < 0.0 {
        best = (
            res,
            TailAsymptotic {
                order: TailOrder::Exponential { rate: -slope },
                constant: c.exp(),
            },
        );
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple() -> WalkModel {
        WalkModel::simple_1d(1.0).unwrap()
    }

    fn q1(x: i64, y: i64, z: i64) -> TabooQuery {
        TabooQuery::new([x], [y], [z]).unwrap()
    }

    fn sim(n: u64, seed: u64) -> SimConfig {
        SimConfig {
            horizon: 200.0,
            n_paths: n,
            seed,
            max_jumps: 1_000_000,
        }
    }

    #[test]
    fn separated_target_is_never_hit() {
        let est = estimate_taboo_cdf_many(&simple(), &q1(-1, 2, 0), &[1.0, 50.0, 200.0], &sim(20_000, 3)).unwrap();
        for e in est {
            assert_eq!((e.probability, e.std_error), (0.0, 0.0));
        }
        let est = estimate_minus_cdf(&simple(), &q1(-1, 2, 0), 200.0, &sim(20_000, 3)).unwrap();
        assert_eq!(est.probability, 0.0);
    }

    #[test]
    fn estimates_do_not_depend_on_thread_count() {
        let m = simple();
        let q = q1(2, 5, 0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_taboo_cdf_many(&m, &q, &[5.0, 50.0], &sim(5_000, 11)).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn gamblers_ruin_limit() {
        let e = estimate_taboo_cdf(&simple(), &q1(2, 5, 0), 200.0, &sim(200_000, 5)).unwrap();
        assert!((e.probability - 0.4).abs() < 4.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn minus_atom_at_zero() {
        let e = estimate_minus_cdf(&simple(), &q1(4, 5, 0), 0.0, &sim(100_000, 9)).unwrap();
        assert!((e.probability - 0.5).abs() < 4.0 * e.std_error, "{e:?}");
        let plus = estimate_taboo_cdf(&simple(), &q1(4, 5, 0), 0.0, &sim(1000, 9)).unwrap();
        assert_eq!(plus.probability, 0.0);
    }

    #[test]
    fn shared_paths_are_monotone_in_time() {
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 5.0).collect();
        let est = estimate_taboo_cdf_many(&simple(), &q1(0, 3, 0), &times, &sim(20_000, 2)).unwrap();
        for w in est.windows(2) {
            assert!(w[0].probability <= w[1].probability);
        }
    }

    #[test]
    fn unbiased_over_independent_seeds() {
        let m = simple();
        let q = q1(2, 5, 0);
        let n = 2_000;
        let runs: Vec<McEstimate> = (0..100)
            .map(|s| estimate_taboo_cdf(&m, &q, 200.0, &sim(n, 1000 + s)).unwrap())
            .collect();
        let mean = runs.iter().map(|e| e.probability).sum::<f64>() / runs.len() as f64;
        let se = (0.4 * 0.6 / (n as f64 * runs.len() as f64)).sqrt();
        assert!((mean - 0.4).abs() < 4.0 * se, "{mean}");
    }

    #[test]
    fn jump_epochs_see_every_visit() {
        // a dense resampling of each path finds the same first hit epoch
        let m = simple();
        let q = q1(0, 3, -2);
        let sampler = JumpSampler::new(&m);
        for i in 0..1000 {
            let mut rng = path_rng(77, i);
            let outcome = run_path(&sampler, 1.0, &Endpoints::from(&q), 50.0, 1_000_000, false, &mut rng);
            // replay the path, recording the piecewise-constant trajectory
            let mut rng = path_rng(77, i);
            let mut epochs = vec![(0.0, 0i64)];
            let mut t = exponential(&mut rng, 1.0);
            let mut pos = 0i64;
            while t <= 50.0 {
                pos += sampler.sample(&mut rng)[0];
                epochs.push((t, pos));
                if pos == 3 || pos == -2 {
                    break;
                }
                t += exponential(&mut rng, 1.0);
            }
            let dt = 1e-3;
            let mut dense_hit = None;
            let mut k = 0usize;
            for step in 0..=(50.0 / dt) as usize {
                let s = step as f64 * dt;
                while k + 1 < epochs.len() && epochs[k + 1].0 <= s {
                    k += 1;
                }
                let state = epochs[k].1;
                if k > 0 && state == -2 {
                    break;
                }
                if k > 0 && state == 3 {
                    dense_hit = Some(s);
                    break;
                }
            }
            match (outcome, dense_hit) {
                (PathOutcome::Hit(h), Some(s)) => assert!(s >= h && s - h <= dt + 1e-12),
                (PathOutcome::Miss, None) => {}
                (o, s) => panic!("path {i}: {o:?} vs {s:?}"),
            }
        }
    }

    #[test]
    fn plain_hitting_dominates_taboo_hitting() {
        let m = simple();
        let q = q1(2, 5, 0);
        let s = sim(20_000, 4);
        let with = estimate_taboo_cdf_many(&m, &q, &[10.0, 100.0], &s).unwrap();
        let without = estimate_hitting_cdf_many(&m, &q.x, &q.y, &[10.0, 100.0], &s).unwrap();
        for (a, b) in with.iter().zip(&without) {
            assert!(a.probability <= b.probability);
        }
    }

    #[test]
    fn truncation_is_reported() {
        let s = SimConfig {
            horizon: 1000.0,
            n_paths: 200,
            seed: 1,
            max_jumps: 5,
        };
        let e = estimate_taboo_cdf(&simple(), &q1(0, 50, -50), 1000.0, &s).unwrap();
        assert_eq!(e.truncated, 200);
        assert_eq!(e.probability, 0.0);
    }

    #[test]
    fn absorption_gamblers_ruin_is_exact() {
        let b = absorption_bracket(&simple(), &q1(2, 5, 0), 5).unwrap();
        assert!((b.lower - 0.4).abs() < 1e-12 && (b.upper - 0.4).abs() < 1e-12, "{b:?}");
    }

    #[test]
    fn absorption_simple_cases() {
        let m = simple();
        let b = absorption_bracket(&m, &q1(0, 3, 0), 50).unwrap();
        assert!(b.contains(1.0 / 6.0) && b.width() < 1e-3, "{b:?}");
        for (x, y, z, v) in [(3, 3, 0, 5.0 / 6.0), (-1, 2, 0, 0.0), (7, 5, 0, 1.0)] {
            let b = absorption_bracket(&m, &q1(x, y, z), 50).unwrap();
            assert!(
                b.lower - 1e-12 <= v && v <= b.upper + 1e-12 && b.width() < 1e-3,
                "({x},{y},{z}) {b:?}"
            );
        }
        assert!(matches!(
            absorption_bracket(&m, &q1(0, 60, 0), 50),
            Err(Error::QueryOutsideBox { radius: 50 })
        ));
        let m2 = WalkModel::nearest_neighbour(2, 1.0).unwrap();
        let q2 = TabooQuery::new([1, 0], [0, 1], [0, 0]).unwrap();
        assert!(matches!(
            absorption_limit_oracle(&m2, &q2, 3, 1e-6),
            Err(Error::BracketTooWide { .. })
        ));
    }

    #[test]
    fn absorption_transient_bracket_contains_polya_value() {
        let m = WalkModel::nearest_neighbour(3, 1.0).unwrap();
        // start at the target: the return probability 0.3405373 bounds H_{0,0,z} from above
        let q = TabooQuery::new([0, 0, 0], [0, 0, 0], [5, 0, 0]).unwrap();
        let b = absorption_bracket(&m, &q, 10).unwrap();
        assert!(b.lower < 0.3405373 && b.lower > 0.3);
        assert!(b.upper > b.lower);
    }

    #[test]
    fn fit_classifies_synthetic_deficits() {
        let ts: [f64; 5] = [25.0, 50.0, 100.0, 200.0, 400.0];
        let s: Vec<(f64, f64)> = ts.iter().map(|&t| (t, 1.7 / f64::sqrt(t))).collect();
        let f = fit_tail_order(&s).unwrap();
        assert_eq!(f.order, TailOrder::InverseSqrtT);
        assert!((f.constant / 1.7 - 1.0).abs() < 0.02);
        let s: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| (t / 20.0, 0.8 * f64::exp(-0.3 * t / 20.0)))
            .collect();
        let f = fit_tail_order(&s).unwrap();
        assert!(matches!(f.order, TailOrder::Exponential { rate } if (rate - 0.3).abs() < 1e-9));
        let s: Vec<(f64, f64)> = ts.iter().map(|&t| (t, 0.5 / f64::ln(t))).collect();
        assert_eq!(fit_tail_order(&s).unwrap().order, TailOrder::InverseLogT);
        assert!(matches!(fit_tail_order(&s[..2]), Err(Error::DegenerateSamples(_))));
        assert!(matches!(
            fit_tail_order(&[(2.0, 0.1), (3.0, -0.1), (4.0, 0.1)]),
            Err(Error::DegenerateSamples(_))
        ));
    }
}
