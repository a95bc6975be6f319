//! Random-walk models: validated symmetric jump tables and their spectral
//! scalars.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hnf::lattice_index;
use crate::lattice::LatticeVector;

/// One entry of a model file's jump list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawJump {
    pub z: Vec<i64>,
    pub rate: f64,
}

/// Unvalidated model as it appears in a model file.
///
/// Either one direction of each `±z` pair may be listed (the mirror is
/// implied) or both, in which case the two rates must agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawModel {
    pub d: usize,
    pub jumps: Vec<RawJump>,
}

/// Symmetric, finite, strictly positive jump rates keyed by jump vector.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTable {
    entries: BTreeMap<LatticeVector, f64>,
}

impl JumpTable {
    pub fn rate(&self, z: &LatticeVector) -> f64 {
        self.entries.get(z).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticeVector, f64)> {
        self.entries.iter().map(|(z, &r)| (z, r))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Spectral quantities of the walk at the origin of the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScalars {
    /// Local-limit constant: `p(t;x,y) ~ gamma_d / t^{d/2}`.
    pub gamma_d: f64,
    /// `B = -Hess φ(0)`, i.e. `B_ij = Σ a(z) z_i z_j`.
    pub hessian: DMatrix<f64>,
    pub det_b: f64,
    pub(crate) hessian_inv: DMatrix<f64>,
}

/// A validated symmetric, homogeneous, irreducible random walk on Z^d with
/// finitely supported jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkModel {
    d: usize,
    jumps: JumpTable,
    total_rate: f64,
    /// One representative of each `±z` pair; φ sums these twice.
    half: Vec<(LatticeVector, f64)>,
    spectral: SpectralScalars,
}

const MIRROR_RTOL: f64 = 1e-12;

/// Validates a candidate jump table and certifies every model invariant.
pub fn validate_model(raw: &RawModel) -> Result<WalkModel> {
    let d = raw.d;
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if raw.jumps.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut listed: BTreeMap<LatticeVector, f64> = BTreeMap::new();
    for jump in &raw.jumps {
        if jump.z.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: jump.z.len(),
            });
        }
        let z = LatticeVector(jump.z.clone());
        if z.is_zero() {
            return Err(Error::ZeroJumpInSupport);
        }
        if !(jump.rate.is_finite() && jump.rate > 0.0) {
            return Err(Error::NonpositiveRate { z, rate: jump.rate });
        }
        if listed.insert(z.clone(), jump.rate).is_some() {
            return Err(Error::ModelFile(format!("jump {z} listed twice")));
        }
    }

    let mut entries = BTreeMap::new();
    for (z, &rate) in &listed {
        let mz = -z;
        if let Some(&mirror) = listed.get(&mz) {
            if (rate - mirror).abs() > MIRROR_RTOL * rate.max(mirror) {
                let (z, rate, mirror) = if z < &mz {
                    (z.clone(), rate, mirror)
                } else {
                    (mz, mirror, rate)
                };
                return Err(Error::AsymmetricRates { z, rate, mirror });
            }
        }
        entries.insert(z.clone(), rate);
        entries.entry(mz).or_insert(rate);
    }

    let support: Vec<Vec<i64>> = entries.keys().map(|z| z.0.clone()).collect();
    match lattice_index(&support, d) {
        Some(1) => {}
        Some(index) => return Err(Error::NotIrreducible { d, index }),
        None => return Err(Error::NotIrreducible { d, index: 0 }),
    }

    let total_rate: f64 = entries.values().sum();
    let half: Vec<(LatticeVector, f64)> = entries
        .iter()
        .filter(|(z, _)| **z > -*z)
        .map(|(z, &r)| (z.clone(), r))
        .collect();
    let jumps = JumpTable { entries };
    let spectral = compute_spectral(d, &jumps)?;
    Ok(WalkModel {
        d,
        jumps,
        total_rate,
        half,
        spectral,
    })
}

fn compute_spectral(d: usize, jumps: &JumpTable) -> Result<SpectralScalars> {
    let mut b = DMatrix::<f64>::zeros(d, d);
    for (z, rate) in jumps.iter() {
        for i in 0..d {
            for j in 0..d {
                b[(i, j)] += rate * z.0[i] as f64 * z.0[j] as f64;
            }
        }
    }
    let det_b = b.determinant();
    if !(det_b.is_finite() && det_b > 0.0) {
        return Err(Error::SingularHessian);
    }
    let hessian_inv = b.clone().try_inverse().ok_or(Error::SingularHessian)?;
    let gamma_d = (2.0 * PI).powf(-(d as f64) / 2.0) / det_b.sqrt();
    Ok(SpectralScalars {
        gamma_d,
        hessian: b,
        det_b,
        hessian_inv,
    })
}

impl WalkModel {
    /// Builds and validates a model from `(jump, rate)` pairs.
    pub fn new(d: usize, jumps: impl IntoIterator<Item = (LatticeVector, f64)>) -> Result<Self> {
        let raw = RawModel {
            d,
            jumps: jumps.into_iter().map(|(z, rate)| RawJump { z: z.0, rate }).collect(),
        };
        validate_model(&raw)
    }

    /// Nearest-neighbour walk on Z^d with total rate `a` split evenly over
    /// the `2d` neighbours.
    pub fn nearest_neighbour(d: usize, a: f64) -> Result<Self> {
        let rate = a / (2 * d) as f64;
        WalkModel::new(d, (0..d).map(|i| (LatticeVector::unit(d, i), rate)))
    }

    /// The simple random walk on Z with total rate `a`.
    pub fn simple_1d(a: f64) -> Result<Self> {
        WalkModel::nearest_neighbour(1, a)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: RawModel = serde_json::from_str(s).map_err(|e| Error::ModelFile(e.to_string()))?;
        validate_model(&raw)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::ModelFile(format!("{}: {e}", path.display())))?;
        WalkModel::from_json_str(&text)
    }

    /// Canonical file form: one entry per `±z` pair.
    pub fn to_raw(&self) -> RawModel {
        RawModel {
            d: self.d,
            jumps: self
                .half
                .iter()
                .map(|(z, r)| RawJump {
                    z: z.0.clone(),
                    rate: *r,
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn jumps(&self) -> &JumpTable {
        &self.jumps
    }

    /// Total jump rate `a`.
    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    pub fn spectral(&self) -> &SpectralScalars {
        &self.spectral
    }

    /// Largest sup-norm of a jump.
    pub fn max_jump(&self) -> i64 {
        self.jumps.iter().map(|(z, _)| z.sup_norm()).max().unwrap_or(0)
    }

    pub(crate) fn check_dim(&self, v: &LatticeVector) -> Result<()> {
        if v.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: v.dim(),
            });
        }
        Ok(())
    }
}

/// `φ(θ) = Σ_{z≠0} a(z)(cos(z,θ) − 1)`, evaluated as `−2 Σ a(z) sin²((z,θ)/2)`
/// so that small θ keeps full relative precision.
pub fn char_exponent(model: &WalkModel, theta: &[f64]) -> Result<f64> {
    if theta.len() != model.d {
        return Err(Error::DimensionMismatch {
            expected: model.d,
            got: theta.len(),
        });
    }
    Ok(char_exponent_unchecked(model, theta))
}

#[inline]
pub(crate) fn char_exponent_unchecked(model: &WalkModel, theta: &[f64]) -> f64 {
    let mut s = 0.0;
    for (z, rate) in &model.half {
        let h = 0.5 * z.dot(theta);
        let sn = h.sin();
        s += rate * sn * sn;
    }
    -4.0 * s
}

pub fn spectral_scalars(model: &WalkModel) -> &SpectralScalars {
    &model.spectral
}

/// `γ̃_d(z) = γ_d (z, B⁻¹ z) / 2`.
pub fn tilde_gamma(model: &WalkModel, z: &LatticeVector) -> Result<f64> {
    model.check_dim(z)?;
    let s = &model.spectral;
    let d = model.d;
    let mut q = 0.0;
    for i in 0..d {
        for j in 0..d {
            q += z.0[i] as f64 * s.hessian_inv[(i, j)] * z.0[j] as f64;
        }
    }
    Ok(s.gamma_d * q / 2.0)
}

/// closed-form taboo limits.
/// taboo limit theorems.
pub fn is_simple_1d(model: &WalkModel) -> bool {
    model.d == 1 && model.jumps.len() == 2 && model.jumps.iter().all(|(z, _)| z.0[0].abs() == 1)
}
