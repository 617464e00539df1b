//! Formula-driven "spherical harmonics" objects.
//!
//! A shape is the closed surface whose radius along the direction
//! (azimuth `theta`, polar angle `phi`) is
//!
//! ```text
//! r = sin(m1 φ)^p1 + cos(m2 φ)^p2 + sin(m3 θ)^p3 + cos(m4 θ)^p4
//! ```
//!
//! with real frequencies `m` and small non-negative integer exponents `p`.
//! `x^0` is taken to be 1 for every `x`, and negative radii are kept: the
//! point is reflected through the origin.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::meshio::SurfaceMesh;

/// Frequencies are drawn from `[-FREQUENCY_LIMIT, FREQUENCY_LIMIT]`.
pub const FREQUENCY_LIMIT: f64 = 5.0;
/// Exponents are drawn from `0..=EXPONENT_LIMIT`.
pub const EXPONENT_LIMIT: u8 = 4;

pub const DEFAULT_POLAR_STEPS: usize = 64;
pub const DEFAULT_AZIMUTH_STEPS: usize = 128;
pub const MIN_GRID_STEPS: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum HarmonicsError {
    #[error("grid resolution {n_polar}x{n_azimuth} below the minimum of {MIN_GRID_STEPS} per axis")]
    Resolution { n_polar: usize, n_azimuth: usize },
    #[error("coefficient out of range: {0}")]
    OutOfRange(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// The eight free parameters of one shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicCoefficients {
    pub m: [f64; 4],
    pub p: [u8; 4],
}

impl HarmonicCoefficients {
    pub fn new(m: [f64; 4], p: [u8; 4]) -> Result<Self, HarmonicsError> {
        let c = HarmonicCoefficients { m, p };
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<(), HarmonicsError> {
        if let Some(m) = self
            .m
            .iter()
            .find(|m| !(m.abs() <= FREQUENCY_LIMIT))
        {
            return Err(HarmonicsError::OutOfRange(format!("frequency {m}")));
        }
        if let Some(p) = self.p.iter().find(|&&p| p > EXPONENT_LIMIT) {
            return Err(HarmonicsError::OutOfRange(format!("exponent {p}")));
        }
        Ok(())
    }

    /// Independent uniform draws: frequencies on `[-5, 5]`, exponents on `{0..4}`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut m = [0.0; 4];
        for v in &mut m {
            *v = rng.random_range(-FREQUENCY_LIMIT..=FREQUENCY_LIMIT);
        }
        let mut p = [0u8; 4];
        for v in &mut p {
            *v = rng.random_range(0..=EXPONENT_LIMIT);
        }
        HarmonicCoefficients { m, p }
    }

    /// Signed radius at azimuth `theta` and polar angle `phi`.
    pub fn radius(&self, theta: f64, phi: f64) -> f64 {
        let [m1, m2, m3, m4] = self.m;
        let [p1, p2, p3, p4] = self.p.map(i32::from);
        (m1 * phi).sin().powi(p1)
            + (m2 * phi).cos().powi(p2)
            + (m3 * theta).sin().powi(p3)
            + (m4 * theta).cos().powi(p4)
    }

    /// Surface point for the given angles, using the signed radius.
    pub fn point(&self, theta: f64, phi: f64) -> Vec3 {
        let r = self.radius(theta, phi);
        let (sp, cp) = phi.sin_cos();
        let (st, ct) = theta.sin_cos();
        Vec3::new(r * sp * ct, r * sp * st, r * cp)
    }

    /// Triangle mesh over a uniform `(phi, theta)` grid.
    ///
    /// Row `i` holds polar angle `i·π/n_polar` (`i = 0..=n_polar`), column `j`
    /// azimuth `j·2π/n_azimuth`; the azimuth seam reuses column 0. Pole rows
    /// are not welded because the radius still varies with azimuth there.
    pub fn mesh(&self, n_polar: usize, n_azimuth: usize) -> Result<SurfaceMesh, HarmonicsError> {
        if n_polar < MIN_GRID_STEPS || n_azimuth < MIN_GRID_STEPS {
            return Err(HarmonicsError::Resolution { n_polar, n_azimuth });
        }
        let mut vertices = Vec::with_capacity((n_polar + 1) * n_azimuth);
        for i in 0..=n_polar {
            let phi = grid_angle(i, PI, n_polar);
            for j in 0..n_azimuth {
                let theta = grid_angle(j, 2.0 * PI, n_azimuth);
                vertices.push(self.point(theta, phi));
            }
        }
        let index = |i: usize, j: usize| (i * n_azimuth + j % n_azimuth) as u32;
        let mut triangles = Vec::with_capacity(2 * n_polar * n_azimuth);
        for i in 0..n_polar {
            for j in 0..n_azimuth {
                let a = index(i, j);
                let b = index(i, j + 1);
                let c = index(i + 1, j);
                let d = index(i + 1, j + 1);
                triangles.push([a, c, b]);
                triangles.push([b, c, d]);
            }
        }
        Ok(SurfaceMesh {
            vertices,
            triangles,
            object_id: 0,
        })
    }
}

/// `k·span/n`, written so that doubling both `k` and `n` gives the same bits.
fn grid_angle(k: usize, span: f64, n: usize) -> f64 {
    k as f64 * span / n as f64
}

/// Free-function form of [`HarmonicCoefficients::radius`].
pub fn eval_radius(c: &HarmonicCoefficients, theta: f64, phi: f64) -> f64 {
    c.radius(theta, phi)
}

/// Free-function form of [`HarmonicCoefficients::mesh`].
pub fn generate_mesh(
    c: &HarmonicCoefficients,
    n_polar: usize,
    n_azimuth: usize,
) -> Result<SurfaceMesh, HarmonicsError> {
    c.mesh(n_polar, n_azimuth)
}

impl fmt::Display for HarmonicCoefficients {
    /// `m1 m2 m3 m4 p1 p2 p3 p4`, with shortest round-tripping floats.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [m1, m2, m3, m4] = self.m;
        let [p1, p2, p3, p4] = self.p;
        write!(f, "{m1:?} {m2:?} {m3:?} {m4:?} {p1} {p2} {p3} {p4}")
    }
}

impl FromStr for HarmonicCoefficients {
    type Err = HarmonicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |message: String| HarmonicsError::Parse { line: 1, message };
        let tokens: Vec<&str> = s.split_whitespace().collect();
        if tokens.len() != 8 {
            return Err(bad(format!("expected 8 numbers, found {}", tokens.len())));
        }
        let mut m = [0.0; 4];
        for (k, t) in tokens[..4].iter().enumerate() {
            m[k] = t.parse().map_err(|_| bad(format!("bad frequency `{t}`")))?;
        }
        let mut p = [0u8; 4];
        for (k, t) in tokens[4..].iter().enumerate() {
            p[k] = t.parse().map_err(|_| bad(format!("bad exponent `{t}`")))?;
        }
        HarmonicCoefficients::new(m, p)
    }
}

/// One coefficient set per line.
pub fn write_coefficient_set(set: &[HarmonicCoefficients]) -> String {
    let mut out = String::with_capacity(set.len() * 64);
    for c in set {
        out.push_str(&c.to_string());
        out.push('\n');
    }
    out
}

/// Parses [`write_coefficient_set`] output; blank lines and `#` comments are skipped.
pub fn parse_coefficient_set(text: &str) -> Result<Vec<HarmonicCoefficients>, HarmonicsError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| {
            l.parse().map_err(|e| match e {
                HarmonicsError::Parse { message, .. } => HarmonicsError::Parse {
                    line: i + 1,
                    message,
                },
                HarmonicsError::OutOfRange(message) => HarmonicsError::Parse {
                    line: i + 1,
                    message,
                },
                other => other,
            })
        })
        .collect()
}
