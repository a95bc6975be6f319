//! Closed-form limits `H(∞)` and leading tail asymptotics for hitting times
//! with and without a taboo point.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{green_function, rho, QuadratureConfig};
use crate::lattice::LatticeVector;
use crate::model::{is_simple_1d, WalkModel};

/// Start `x`, target `y` and taboo point `z`, with `y != z`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TabooQuery {
    pub x: LatticeVector,
    pub y: LatticeVector,
    pub z: LatticeVector,
}

impl TabooQuery {
    pub fn new(x: impl Into<LatticeVector>, y: impl Into<LatticeVector>, z: impl Into<LatticeVector>) -> Result<Self> {
        let q = TabooQuery {
            x: x.into(),
            y: y.into(),
            z: z.into(),
        };
        let d = q.x.dim();
        if q.y.dim() != d || q.z.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: if q.y.dim() != d { q.y.dim() } else { q.z.dim() },
            });
        }
        if q.y == q.z {
            return Err(Error::InvalidQuery(format!("target and taboo coincide at {}", q.y)));
        }
        Ok(q)
    }

    pub(crate) fn check(&self, model: &WalkModel) -> Result<()> {
        model.check_dim(&self.x)?;
        model.check_dim(&self.y)?;
        model.check_dim(&self.z)?;
        if self.y == self.z {
            return Err(Error::InvalidQuery(format!("target and taboo coincide at {}", self.y)));
        }
        Ok(())
    }

    pub fn shifted(&self, r: &LatticeVector) -> Self {
        TabooQuery {
            x: &self.x + r,
            y: &self.y + r,
            z: &self.z + r,
        }
    }

    pub fn reflected(&self) -> Self {
        TabooQuery {
            x: -&self.x,
            y: -&self.y,
            z: -&self.z,
        }
    }

    /// The query with target and taboo exchanged.
    pub fn swapped(&self) -> Self {
        TabooQuery {
            x: self.x.clone(),
            y: self.z.clone(),
            z: self.y.clone(),
        }
    }
}

/// Asymptotic order of the deficit `H(∞) - H(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailOrder {
    InverseSqrtT,
    InverseLogT,
    /// `t^{-exponent}` with `exponent = d/2 - 1`, `d >= 3`.
    InversePowT {
        exponent: f64,
    },
    /// Decay at least as fast as `e^{-rate t}`; `rate` is a lower bound.
    Exponential {
        rate: f64,
    },
    /// The deficit vanishes identically.
    Zero,
}

impl TailOrder {
    pub fn label(&self) -> String {
        match self {
            TailOrder::InverseSqrtT => "t^-1/2".into(),
            TailOrder::InverseLogT => "1/ln t".into(),
            TailOrder::InversePowT { exponent } => {
                let twice = (2.0 * exponent).round() as i64;
                if twice % 2 == 0 {
                    format!("t^-{}", twice / 2)
                } else {
                    format!("t^-{twice}/2")
                }
            }
            TailOrder::Exponential { .. } => "exp".into(),
            TailOrder::Zero => "zero".into(),
        }
    }

    fn for_dimension(d: usize) -> Self {
        match d {
            1 => TailOrder::InverseSqrtT,
            2 => TailOrder::InverseLogT,
            _ => TailOrder::InversePowT {
                exponent: d as f64 / 2.0 - 1.0,
            },
        }
    }
}

/// `H(∞) - H(t) ~ constant · order(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailAsymptotic {
    pub order: TailOrder,
    pub constant: f64,
}

impl TailAsymptotic {
    /// Leading-order deficit at time `t`.
    pub fn deficit_at(&self, t: f64) -> f64 {
        match self.order {
            TailOrder::InverseSqrtT => self.constant / t.sqrt(),
            TailOrder::InverseLogT => self.constant / t.ln(),
            TailOrder::InversePowT { exponent } => self.constant / t.powf(exponent),
            TailOrder::Exponential { rate } => self.constant * (-rate * t).exp(),
            TailOrder::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitValue {
    pub value: f64,
    pub variant: Variant,
    /// Probability that the clock started at the first jump reads zero at the hit.
    pub atom_at_zero: f64,
}

fn g0(model: &WalkModel, r: &LatticeVector, cfg: &QuadratureConfig) -> Result<f64> {
    let zero = LatticeVector::zero(model.dim());
    Ok(green_function(model, 0.0, &zero, r, cfg)?.value)
}

/// `H_{x,y}(∞)`.
pub fn hitting_limit(model: &WalkModel, x: &LatticeVector, y: &LatticeVector, cfg: &QuadratureConfig) -> Result<f64> {
    model.check_dim(x)?;
    model.check_dim(y)?;
    let d = model.dim();
    if d <= 2 {
        return Ok(1.0);
    }
    let zero = LatticeVector::zero(d);
    let g00 = g0(model, &zero, cfg)?;
    if x == y {
        Ok(1.0 - 1.0 / (model.total_rate() * g00))
    } else {
        Ok(g0(model, &(y - x), cfg)? / g00)
    }
}

/// Tail of `H_{x,y}(∞) - H_{x,y}(t)`.
pub fn hitting_tail(
    model: &WalkModel,
    x: &LatticeVector,
    y: &LatticeVector,
    cfg: &QuadratureConfig,
) -> Result<TailAsymptotic> {
    model.check_dim(x)?;
    model.check_dim(y)?;
    let d = model.dim();
    let a = model.total_rate();
    let gamma = model.spectral().gamma_d;
    let r = rho(model, &(y - x), cfg)?;
    let constant = match d {
        1 => r / (a * gamma * PI),
        2 => r / (a * gamma),
        _ => {
            let g00 = g0(model, &LatticeVector::zero(d), cfg)?;
            2.0 * gamma * r / (a * (d as f64 - 2.0) * g00 * g00)
        }
    };
    Ok(TailAsymptotic {
        order: TailOrder::for_dimension(d),
        constant,
    })
}

/// Configuration of a simple walk query, relative positions on the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SimpleCase {
    /// `y` strictly between `x` and `z`.
    TargetBetween,
    StartAtTarget,
    /// `x` strictly between `z` and `y`.
    StartBetween,
    StartAtTaboo,
    /// `z` strictly between `x` and `y`.
    TabooBetween,
}

fn between(lo: i64, mid: i64, hi: i64) -> bool {
    (lo < mid && mid < hi) || (hi < mid && mid < lo)
}

fn simple_case(q: &TabooQuery) -> SimpleCase {
    let (x, y, z) = (q.x.0[0], q.y.0[0], q.z.0[0]);
    if x == y {
        SimpleCase::StartAtTarget
    } else if x == z {
        SimpleCase::StartAtTaboo
    } else if between(x, y, z) {
        SimpleCase::TargetBetween
    } else if between(z, x, y) {
        SimpleCase::StartBetween
    } else {
        SimpleCase::TabooBetween
    }
}

/// Decay rate of the probability that a simple walk stays strictly between
/// two points at distance `n`: `a (1 - cos(π/n))`.
fn strip_decay_rate(a: f64, n: i64) -> f64 {
    a * (1.0 - (PI / n as f64).cos())
}

/// True for a simple walk with `z` strictly between `x` and `y`, where
/// every path from `x` to `y` passes through `z`.
pub(crate) fn taboo_separates(model: &WalkModel, q: &TabooQuery) -> bool {
    is_simple_1d(model) && simple_case(q) == SimpleCase::TabooBetween
}

fn simple_limit(q: &TabooQuery) -> f64 {
    let (x, y, z) = (q.x.0[0], q.y.0[0], q.z.0[0]);
    let n = (y - z).abs() as f64;
    match simple_case(q) {
        SimpleCase::TargetBetween => 1.0,
        SimpleCase::StartAtTarget => 1.0 - 1.0 / (2.0 * n),
        SimpleCase::StartBetween => (x - z) as f64 / (y - z) as f64,
        SimpleCase::StartAtTaboo => 1.0 / (2.0 * n),
        SimpleCase::TabooBetween => 0.0,
    }
}

fn simple_tail(model: &WalkModel, q: &TabooQuery) -> TailAsymptotic {
    let a = model.total_rate();
    let (x, y, z) = (q.x.0[0], q.y.0[0], q.z.0[0]);
    match simple_case(q) {
        SimpleCase::TargetBetween => TailAsymptotic {
            order: TailOrder::InverseSqrtT,
            constant: 2f64.sqrt() * (y - x).abs() as f64 / (a * PI).sqrt(),
        },
        SimpleCase::StartAtTarget => TailAsymptotic {
            order: TailOrder::InverseSqrtT,
            constant: 1.0 / (2.0 * a * PI).sqrt(),
        },
        SimpleCase::StartBetween | SimpleCase::StartAtTaboo => TailAsymptotic {
            order: TailOrder::Exponential {
                rate: strip_decay_rate(a, (y - z).abs()),
            },
            constant: 0.0,
        },
        SimpleCase::TabooBetween => TailAsymptotic {
            order: TailOrder::Zero,
            constant: 0.0,
        },
    }
}

/// `H_{x,y,z}(∞)`.
pub fn taboo_limit(model: &WalkModel, q: &TabooQuery, cfg: &QuadratureConfig) -> Result<f64> {
    q.check(model)?;
    if is_simple_1d(model) {
        return Ok(simple_limit(q));
    }
    let d = model.dim();
    let r_xz = rho(model, &(&q.x - &q.z), cfg)?;
    let r_yz = rho(model, &(&q.y - &q.z), cfg)?;
    let r_yx = rho(model, &(&q.y - &q.x), cfg)?;
    let value = if d <= 2 {
        (r_xz + r_yz - r_yx) / (2.0 * r_yz)
    } else {
        let g00 = g0(model, &LatticeVector::zero(d), cfg)?;
        let gyz = g0(model, &(&q.z - &q.y), cfg)?;
        (g00 * r_yz - g00 * r_yx + gyz * r_xz) / (r_yz * (g00 + gyz))
    };
    Ok(value.clamp(0.0, 1.0))
}

/// The tail constant `C_d(x, y)` for a non-simple walk, `y != 0`.
pub fn tail_constant(model: &WalkModel, x: &LatticeVector, y: &LatticeVector, cfg: &QuadratureConfig) -> Result<f64> {
    model.check_dim(x)?;
    model.check_dim(y)?;
    if y.is_zero() {
        return Err(Error::InvalidQuery("tail constant needs y != 0".into()));
    }
    let d = model.dim();
    let a = model.total_rate();
    let gamma = model.spectral().gamma_d;
    let r_yx = rho(model, &(y - x), cfg)?;
    let r_x = rho(model, x, cfg)?;
    let r_y = rho(model, y, cfg)?;
    let c = match d {
        1 => {
            let (xs, ys) = (x.0[0] as f64, y.0[0] as f64);
            let g3 = gamma.powi(3);
            (r_yx + r_x - r_y) / (4.0 * a * PI * gamma)
                + a * PI * ys * ys * g3 * (r_yx - r_x - r_y) / (r_y * r_y)
                + 2.0 * a * PI * xs * ys * g3 / r_y
        }
        2 => (r_yx + r_x - r_y) / (4.0 * a * gamma),
        _ => {
            let g00 = g0(model, &LatticeVector::zero(d), cfg)?;
            let g0y = g0(model, y, cfg)?;
            2.0 * gamma * (r_yx + r_x - r_y) / (a * (d as f64 - 2.0) * (g00 + g0y).powi(2))
        }
    };
    Ok(c)
}

/// Tail of `H_{x,y,z}(∞) - H_{x,y,z}(t)`.
pub fn taboo_tail(model: &WalkModel, q: &TabooQuery, cfg: &QuadratureConfig) -> Result<TailAsymptotic> {
    q.check(model)?;
    if is_simple_1d(model) {
        return Ok(simple_tail(model, q));
    }
    let constant = tail_constant(model, &(&q.x - &q.z), &(&q.y - &q.z), cfg)?;
    Ok(TailAsymptotic {
        order: TailOrder::for_dimension(model.dim()),
        constant,
    })
}

/// Limit of `H⁻_{x,y,z}`, the c.d.f. with the clock started at the first jump.
pub fn taboo_limit_minus(model: &WalkModel, q: &TabooQuery, cfg: &QuadratureConfig) -> Result<LimitValue> {
    let value = taboo_limit(model, q, cfg)?;
    let atom_at_zero = if q.x == q.y {
        0.0
    } else {
        model.jumps().rate(&(&q.y - &q.x)) / model.total_rate()
    };
    Ok(LimitValue {
        value,
        variant: Variant::Minus,
        atom_at_zero,
    })
}

/// Tail of `H⁻_{x,y,z}`; identical to [`taboo_tail`].
pub fn taboo_tail_minus(model: &WalkModel, q: &TabooQuery, cfg: &QuadratureConfig) -> Result<TailAsymptotic> {
    taboo_tail(model, q, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simple() -> WalkModel {
        WalkModel::simple_1d(1.0).unwrap()
    }

    fn q1(x: i64, y: i64, z: i64) -> TabooQuery {
        TabooQuery::new([x], [y], [z]).unwrap()
    }

    fn nonsimple_1d() -> WalkModel {
        WalkModel::new(1, [(LatticeVector::new([1]), 0.4), (LatticeVector::new([2]), 0.1)]).unwrap()
    }

    fn cfg(d: usize) -> QuadratureConfig {
        QuadratureConfig::for_dimension(d)
    }

    #[test]
    fn query_rejects_equal_target_and_taboo() {
        assert!(matches!(TabooQuery::new([1], [2], [2]), Err(Error::InvalidQuery(_))));
        assert!(matches!(
            TabooQuery::new([1], [2, 0], [0, 0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn simple_walk_limit_table() {
        let m = simple();
        let c = cfg(1);
        assert_eq!(taboo_limit(&m, &q1(2, 5, 0), &c).unwrap(), 0.4);
        assert_eq!(taboo_limit(&m, &q1(0, 3, 0), &c).unwrap(), 1.0 / 6.0);
        assert_eq!(taboo_limit(&m, &q1(3, 3, 0), &c).unwrap(), 5.0 / 6.0);
        assert_eq!(taboo_limit(&m, &q1(-1, 2, 0), &c).unwrap(), 0.0);
        assert_eq!(taboo_limit(&m, &q1(7, 5, 0), &c).unwrap(), 1.0);
    }

    #[test]
    fn simple_walk_tail_table() {
        let m = simple();
        let c = cfg(1);
        let t = taboo_tail(&m, &q1(1, 4, 6), &c).unwrap();
        assert_eq!(t.order, TailOrder::InverseSqrtT);
        assert!((t.constant - 3.0 * (2.0 / PI).sqrt()).abs() < 1e-12);
        assert!((t.constant - 2.39365).abs() < 1e-5);
        let t = taboo_tail(&m, &q1(3, 3, 0), &c).unwrap();
        assert!((t.constant - 0.398942).abs() < 1e-6);
        assert_eq!(taboo_tail(&m, &q1(-2, 3, 0), &c).unwrap().order, TailOrder::Zero);
        assert!(
            matches!(taboo_tail(&m, &q1(2, 5, 0), &c).unwrap().order, TailOrder::Exponential { rate } if rate > 0.05)
        );
        assert!(matches!(
            taboo_tail(&m, &q1(0, 5, 0), &c).unwrap().order,
            TailOrder::Exponential { .. }
        ));
        assert_eq!(taboo_tail_minus(&m, &q1(-2, 3, 0), &c).unwrap().order, TailOrder::Zero);
    }

    #[test]
    fn minus_limit_atoms() {
        let m = simple();
        let c = cfg(1);
        let l = taboo_limit_minus(&m, &q1(2, 5, 0), &c).unwrap();
        assert_eq!((l.value, l.atom_at_zero, l.variant), (0.4, 0.0, Variant::Minus));
        let l = taboo_limit_minus(&m, &q1(4, 5, 0), &c).unwrap();
        assert_eq!((l.value, l.atom_at_zero), (0.8, 0.5));
        assert_eq!(taboo_limit_minus(&m, &q1(3, 3, 0), &c).unwrap().atom_at_zero, 0.0);
    }

    #[test]
    fn recurrent_hitting_limits_are_one() {
        assert_eq!(
            hitting_limit(&simple(), &LatticeVector::new([0]), &LatticeVector::new([4]), &cfg(1)).unwrap(),
            1.0
        );
        let m = WalkModel::nearest_neighbour(2, 1.0).unwrap();
        let z = LatticeVector::zero(2);
        assert_eq!(hitting_limit(&m, &z, &z, &cfg(2)).unwrap(), 1.0);
    }

    #[test]
    fn polya_return_probability() {
        let m = WalkModel::nearest_neighbour(3, 1.0).unwrap();
        let c = cfg(3);
        let z = LatticeVector::zero(3);
        // 1 - 1/1.516386059... = 0.340537329...
        let ret = hitting_limit(&m, &z, &z, &c).unwrap();
        assert!((ret - 0.3405373296).abs() < 2e-6, "{ret}");
        let e1 = LatticeVector::unit(3, 0);
        let hit = hitting_limit(&m, &z, &e1, &c).unwrap();
        assert!((hit - ret).abs() < 2e-6);
    }

    #[test]
    fn hitting_tail_examples() {
        let t = hitting_tail(&simple(), &LatticeVector::new([0]), &LatticeVector::new([2]), &cfg(1)).unwrap();
        assert_eq!(t.order, TailOrder::InverseSqrtT);
        assert!((t.constant - 2.0 * (2.0 * PI).sqrt() / PI).abs() < 1e-8);
        let m = WalkModel::nearest_neighbour(3, 1.0).unwrap();
        let z = LatticeVector::zero(3);
        let t = hitting_tail(&m, &z, &z, &cfg(3)).unwrap();
        assert_eq!(t.order.label(), "t^-1/2");
        let g00 = 1.516386059151978;
        let expected = 2.0 * m.spectral().gamma_d / (g00 * g00);
        assert!((t.constant / expected - 1.0).abs() < 1e-5);
    }

    #[test]
    fn conventions_reproduce_explicit_cases() {
        // general formula with rho(0) = 1 at x = z and x = y
        for m in [nonsimple_1d(), WalkModel::nearest_neighbour(2, 1.0).unwrap()] {
            let d = m.dim();
            let c = cfg(d);
            let z = LatticeVector::zero(d);
            let mut y = LatticeVector::zero(d);
            y.0[0] = 3;
            let r = rho(&m, &y, &c).unwrap();
            let at_taboo = taboo_limit(&m, &TabooQuery::new(z.clone(), y.clone(), z.clone()).unwrap(), &c).unwrap();
            let at_target = taboo_limit(&m, &TabooQuery::new(y.clone(), y.clone(), z.clone()).unwrap(), &c).unwrap();
            assert!((at_taboo - 1.0 / (2.0 * r)).abs() < 1e-12);
            assert!((at_target - (1.0 - 1.0 / (2.0 * r))).abs() < 1e-12);
        }
    }

    #[test]
    fn nonsimple_low_dimension_limits_are_interior() {
        let m = nonsimple_1d();
        for (x, y, z) in [(2, 5, 0), (-1, 2, 0), (0, 3, 0), (3, 3, 0), (7, 5, 0)] {
            let v = taboo_limit(&m, &q1(x, y, z), &cfg(1)).unwrap();
            assert!(v > 0.0 && v < 1.0, "({x},{y},{z}) -> {v}");
            let t = taboo_tail(&m, &q1(x, y, z), &cfg(1)).unwrap();
            assert!(t.constant > 0.0, "({x},{y},{z}) -> {t:?}");
        }
        let m = WalkModel::nearest_neighbour(2, 1.0).unwrap();
        let q = TabooQuery::new([1, 0], [0, 1], [0, 0]).unwrap();
        let v = taboo_limit(&m, &q, &cfg(2)).unwrap();
        assert!(v > 0.0 && v < 1.0);
        assert!(taboo_tail(&m, &q, &cfg(2)).unwrap().constant > 0.0);
    }

    #[test]
    fn transient_taboo_bounded_by_hitting() {
        let m = WalkModel::nearest_neighbour(3, 1.0).unwrap();
        let c = cfg(3);
        let q = TabooQuery::new([1, 0, 0], [0, 1, 0], [0, 0, 0]).unwrap();
        let v = taboo_limit(&m, &q, &c).unwrap();
        let h = hitting_limit(&m, &q.x, &q.y, &c).unwrap();
        assert!(v > 0.0 && v <= h, "{v} vs {h}");
        let t = taboo_tail(&m, &q, &c).unwrap();
        assert!(t.constant > 0.0);
        assert_eq!(t.order, TailOrder::InversePowT { exponent: 0.5 });
    }

    #[test]
    fn labels() {
        assert_eq!(TailOrder::InversePowT { exponent: 1.0 }.label(), "t^-1");
        assert_eq!(TailOrder::InversePowT { exponent: 1.5 }.label(), "t^-3/2");
        assert_eq!(TailOrder::Zero.label(), "zero");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn shift_and_reflection_invariance(x in -6i64..6, y in -6i64..6, z in -6i64..6, r in -20i64..20) {
            prop_assume!(y != z);
            let c = cfg(1);
            for m in [simple(), nonsimple_1d()] {
                let q = q1(x, y, z);
                let base = taboo_limit(&m, &q, &c).unwrap();
                let tail = taboo_tail(&m, &q, &c).unwrap();
                let s = q.shifted(&LatticeVector::new([r]));
                prop_assert_eq!(taboo_limit(&m, &s, &c).unwrap(), base);
                prop_assert_eq!(taboo_tail(&m, &s, &c).unwrap(), tail);
                // rho is computed from |r| and cos, so reflection is exact too
                prop_assert_eq!(taboo_limit(&m, &q.reflected(), &c).unwrap(), base);
                prop_assert_eq!(taboo_tail(&m, &q.reflected(), &c).unwrap(), tail);
            }
        }

        #[test]
        fn complementarity_in_low_dimension(x in -6i64..6, y in -6i64..6, z in -6i64..6) {
            prop_assume!(y != z && x != y && x != z);
            for m in [simple(), nonsimple_1d()] {
                let q = q1(x, y, z);
                let s = taboo_limit(&m, &q, &cfg(1)).unwrap() + taboo_limit(&m, &q.swapped(), &cfg(1)).unwrap();
                prop_assert!((s - 1.0).abs() < 1e-12, "sum {}", s);
            }
        }
    }
}
