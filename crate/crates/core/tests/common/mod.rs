//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use taboo_hitting::WalkModel;

/// `P(N >= n)` for `N ~ Poisson(mu)`, `n = 0..len`.
pub fn poisson_upper_tails(mu: f64, len: usize) -> Vec<f64> {
    let mut pmf = vec![0.0; len];
    let mut log_p = -mu;
    for (n, slot) in pmf.iter_mut().enumerate() {
        if n > 0 {
            log_p += mu.ln() - (n as f64).ln();
        }
        *slot = log_p.exp();
    }
    let mut tails = vec![0.0; len];
    let mut acc = 0.0;
    for n in (0..len).rev() {
        acc += pmf[n];
        tails[n] = acc;
    }
    tails
}

/// Uniformization oracle for a 1d walk: the first-passage law of the jump
/// chain from `x` to `y` (killed on landing at `z`) mixed with Gamma(n, a)
/// jump epochs. With `minus` the clock starts at the first jump.
pub fn uniformized_1d(m: &WalkModel, x: i64, y: i64, z: Option<i64>, t: f64, minus: bool) -> f64 {
    let a = m.total_rate();
    let steps = (a * t + 12.0 * (a * t).sqrt() + 60.0) as usize;
    let tails = poisson_upper_tails(a * t, steps + 2);
    let jumps: Vec<(i64, f64)> = m.jumps().iter().map(|(v, r)| (v.0[0], r / a)).collect();
    let mut dist: HashMap<i64, f64> = HashMap::from([(x, 1.0)]);
    let mut total = 0.0;
    for n in 1..=steps {
        let mut next: HashMap<i64, f64> = HashMap::new();
        for (&s, &p) in &dist {
            for &(dz, w) in &jumps {
                *next.entry(s + dz).or_default() += p * w;
            }
        }
        if let Some(hit) = next.remove(&y) {
            // n jumps take Gamma(n, a); the minus clock skips the first
            total += hit * if minus { tails[n - 1] } else { tails[n] };
        }
        if let Some(zz) = z {
            next.remove(&zz);
        }
        next.retain(|_, p| *p > 1e-18);
        dist = next;
    }
    total
}
