//! Uniform linear array signal model: steering vectors, scattered-source
//! covariances, snapshot synthesis and output SINR.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, psd_sqrt_factor, BeamWeights, ComplexMatrix, ComplexVector, HermitianMatrix,
};
use crate::random::{complex_gaussian, rng};

/// Default quadrature: 0.25° steps over [-90°, 90°].
pub const DEFAULT_GRID_POINTS: usize = 721;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub num_elements: usize,
    /// Inter-element spacing in wavelengths.
    pub spacing: f64,
}

impl ArrayConfig {
    pub fn new(num_elements: usize, spacing: f64) -> Result<Self> {
        if num_elements < 2 {
            return Err(Error::InvalidInput(format!(
                "array needs at least 2 elements, got {num_elements}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "element spacing must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            num_elements,
            spacing,
        })
    }

    /// Half-wavelength ULA.
    pub fn ula(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, 0.5)
    }
}

/// `a_m(θ) = exp(j·2π·d·m·sin θ)`, `m = 0..M-1`, θ in degrees.
pub fn steering(cfg: &ArrayConfig, theta_deg: f64) -> Result<ComplexVector> {
    if !(theta_deg.abs() <= 90.0) {
        return Err(Error::InvalidInput(format!(
            "steering angle {theta_deg}° outside [-90°, 90°]"
        )));
    }
    let phase = 2.0 * PI * cfg.spacing * theta_deg.to_radians().sin();
    Ok(ComplexVector::from_fn(cfg.num_elements, |m, _| {
        let p = phase * m as f64;
        c64(p.cos(), p.sin())
    }))
}

/// Shape of a normalized angular power density. Angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngularDensity {
    /// `spread` is the standard deviation.
    Gaussian { center: f64, spread: f64 },
    /// `width` is the total angular width.
    Uniform { center: f64, width: f64 },
    /// `exp(-|θ - center| / scale)` with `scale` in radians, zero outside
    /// `support`, multiplied point-wise by `1 + u`, `u ~ U[-s, s]` drawn from
    /// `fluctuation_seed`, then renormalized.
    TruncatedLaplacian {
        center: f64,
        scale: f64,
        support: (f64, f64),
        fluctuation_seed: u64,
        fluctuation_strength: f64,
    },
}

impl AngularDensity {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        match *self {
            AngularDensity::Gaussian { center, spread } => {
                if !(center.abs() <= 90.0) || !(spread > 0.0) {
                    return bad(format!(
                        "invalid Gaussian density (center {center}, spread {spread})"
                    ));
                }
            }
            AngularDensity::Uniform { center, width } => {
                if !(center.abs() <= 90.0) || !(width > 0.0) {
                    return bad(format!(
                        "invalid uniform density (center {center}, width {width})"
                    ));
                }
            }
            AngularDensity::TruncatedLaplacian {
                center,
                scale,
                support,
                fluctuation_strength,
                ..
            } => {
                if !(center.abs() <= 90.0)
                    || !(scale > 0.0)
                    || !(support.0 < support.1)
                    || !(0.0..1.0).contains(&fluctuation_strength)
                {
                    return bad(format!("invalid truncated Laplacian density {self:?}"));
                }
            }
        }
        Ok(())
    }

    /// Unnormalized density values on `grid` (degrees).
    fn raw_values(&self, grid: &[f64]) -> Vec<f64> {
        const EDGE: f64 = 1e-9;
        match *self {
            AngularDensity::Gaussian { center, spread } => grid
                .iter()
                .map(|&t| (-(t - center).powi(2) / (2.0 * spread * spread)).exp())
                .collect(),
            AngularDensity::Uniform { center, width } => {
                let (lo, hi) = (center - width / 2.0, center + width / 2.0);
                grid.iter()
                    .map(|&t| {
                        if t >= lo - EDGE && t <= hi + EDGE {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            AngularDensity::TruncatedLaplacian {
                center,
                scale,
                support,
                fluctuation_seed,
                fluctuation_strength,
            } => {
                let mut r = rng(fluctuation_seed);
                grid.iter()
                    .map(|&t| {
                        if t < support.0 - EDGE || t > support.1 + EDGE {
                            return 0.0;
                        }
                        let base = (-(t - center).to_radians().abs() / scale).exp();
                        let u: f64 = r.random_range(-fluctuation_strength..=fluctuation_strength);
                        base * (1.0 + u)
                    })
                    .collect()
            }
        }
    }

    /// Density values on the quadrature grid, normalized so the composite
    /// trapezoid integral over θ (radians) equals 1.
    pub fn normalized_values(&self, grid: &AngleGrid) -> Result<Vec<f64>> {
        self.validate()?;
        let raw = self.raw_values(grid.points());
        let mass: f64 = raw.iter().zip(grid.weights()).map(|(v, w)| v * w).sum();
        if !(mass > 0.0) {
            return Err(Error::InvalidInput(format!(
                "density {self:?} has no mass on the quadrature grid"
            )));
        }
        Ok(raw.into_iter().map(|v| v / mass).collect())
    }
}

/// Uniform angle grid over [-90°, 90°] with trapezoid weights in radians.
#[derive(Debug, Clone)]
pub struct AngleGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl AngleGrid {
    pub fn new(num_points: usize) -> Result<Self> {
        if num_points < 2 {
            return Err(Error::InvalidInput(
                "quadrature grid needs at least 2 points".into(),
            ));
        }
        let step = 180.0 / (num_points - 1) as f64;
        let points: Vec<f64> = (0..num_points).map(|i| -90.0 + step * i as f64).collect();
        let h = step.to_radians();
        let weights = (0..num_points)
            .map(|i| {
                if i == 0 || i + 1 == num_points {
                    h / 2.0
                } else {
                    h
                }
            })
            .collect();
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Trapezoid integral of sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// Incoherently scattered source: angular density plus power `σ_s²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteredSource {
    pub density: AngularDensity,
    pub power: f64,
}

/// `σ² ∫ ζ(θ) a(θ) aᴴ(θ) dθ` by composite trapezoid quadrature on
/// `grid_points` uniform points over [-90°, 90°].
pub fn covariance_from_density(
    cfg: &ArrayConfig,
    src: &ScatteredSource,
    grid_points: usize,
) -> Result<HermitianMatrix> {
    if grid_points < 181 {
        return Err(Error::InvalidInput(format!(
            "quadrature needs at least 181 points, got {grid_points}"
        )));
    }
    if !(src.power >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "source power must be nonnegative, got {}",
            src.power
        )));
    }
    let grid = AngleGrid::new(grid_points)?;
    let density = src.density.normalized_values(&grid)?;
    let m = cfg.num_elements;
    let mut acc = ComplexMatrix::zeros(m, m);
    for ((&theta, &zeta), &w) in grid.points().iter().zip(&density).zip(grid.weights()) {
        let weight = zeta * w;
        if weight == 0.0 {
            continue;
        }
        let a = steering(cfg, theta)?;
        acc.gerc(c64(weight, 0.0), &a, &a, c64(1.0, 0.0));
    }
    Ok(HermitianMatrix::from_raw(acc * c64(src.power, 0.0)))
}

/// `K` array snapshots stored as the columns of an `M x K` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub snapshots: ComplexMatrix,
}

impl SnapshotSet {
    pub fn len(&self) -> usize {
        self.snapshots.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.ncols() == 0
    }
}

/// `x(k) = R_s^{1/2} z_s(k) + R_int^{1/2} z_i(k) + √σ_n² z_n(k)` with
/// independent unit circular complex Gaussian `z`; deterministic per seed.
pub fn generate_snapshots(
    r_s: &HermitianMatrix,
    r_int: &HermitianMatrix,
    noise_power: f64,
    k: usize,
    seed: u64,
) -> Result<SnapshotSet> {
    if !(noise_power > 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise power must be positive, got {noise_power}"
        )));
    }
    crate::linalg::check_same_dim(r_s, r_int)?;
    let m = r_s.dim();
    // QᴴQ = R, so Qᴴ z has covariance R
    let qs = psd_sqrt_factor(r_s)?.adjoint();
    let qi = psd_sqrt_factor(r_int)?.adjoint();
    let sn = c64(noise_power.sqrt(), 0.0);
    let mut r = rng(seed);
    let mut x = ComplexMatrix::zeros(m, k);
    for col in 0..k {
        let zs = crate::random::random_vector(&mut r, m);
        let zi = crate::random::random_vector(&mut r, m);
        let zn = ComplexVector::from_fn(m, |_, _| complex_gaussian(&mut r));
        let v = &qs * zs + &qi * zi + zn * sn;
        x.set_column(col, &v);
    }
    Ok(SnapshotSet { snapshots: x })
}

/// `R̂ = (1/K) Σ x(i) x(i)ᴴ`
pub fn sample_covariance(x: &SnapshotSet) -> Result<HermitianMatrix> {
    if x.is_empty() {
        return Err(Error::InvalidInput(
            "sample covariance of an empty snapshot set".into(),
        ));
    }
    let s = &x.snapshots;
    Ok(HermitianMatrix::from_raw(
        s * s.adjoint() / c64(s.ncols() as f64, 0.0),
    ))
}

/// Output SINR in dB: `10·log10(wᴴR_s w / wᴴR_in w)`.
pub fn output_sinr(w: &BeamWeights, r_s: &HermitianMatrix, r_in: &HermitianMatrix) -> Result<f64> {
    if w.norm() == 0.0 {
        return Err(Error::InvalidInput("zero beamformer weights".into()));
    }
    let den = w.power(r_in);
    if !(den > 0.0) {
        return Err(Error::InvalidInput(format!(
            "non-positive interference-plus-noise power {den:e}"
        )));
    }
    Ok(10.0 * (w.power(r_s) / den).log10())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
