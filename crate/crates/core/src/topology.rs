//! Winding numbers of sampled loops in the punctured plane.

use crate::geometry::{GeometryError, Lattice, SphereGrid, SphericalDisc};
use crate::C64;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Largest admissible phase increment between neighbouring samples. A
/// principal-value increment close to `π` means the loop is too coarse to
/// tell the direction of rotation.
pub const MAX_JUMP: f64 = 0.75 * PI;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("loop needs at least 8 samples, got {0}")]
    TooFewSamples(usize),
    #[error("degree undefined: sample {index} has zero modulus")]
    ZeroModulus { index: usize },
    #[error("loop under-resolved: phase jump {jump:.3} at sample {index}")]
    UnderResolved { index: usize, jump: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Closed loop of samples; the last sample repeats the first.
#[derive(Clone, Debug, PartialEq)]
pub struct Loop {
    samples: Vec<C64>,
}

impl Loop {
    /// Close the sample list if needed and check the sample count.
    pub fn new(mut samples: Vec<C64>) -> Result<Self, TopologyError> {
        if samples.first() != samples.last() {
            let first = samples[0];
            samples.push(first);
        }
        if samples.len() < 9 {
            return Err(TopologyError::TooFewSamples(samples.len().saturating_sub(1)));
        }
        Ok(Loop { samples })
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn min_modulus(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }
}

/// `(1/2π) Σ arg(z_{k+1}/z_k)` with principal-value increments.
pub fn winding_number(l: &Loop) -> Result<i32, TopologyError> {
    let s = l.samples();
    if let Some(index) = s.iter().position(|z| z.norm() == 0.0 || !z.norm().is_finite()) {
        return Err(TopologyError::ZeroModulus { index });
    }
    let mut total = 0.0;
    for (k, w) in s.windows(2).enumerate() {
        let d = (w[1] / w[0]).arg();
        if d.abs() > MAX_JUMP {
            return Err(TopologyError::UnderResolved { index: k, jump: d });
        }
        total += d;
    }
    Ok((total / TAU).round() as i32)
}

/// Degree of `u` on the boundary circle of `disc`, refining the sampling up
/// to four times when a phase jump is too large.
pub fn degree_on_sphere(sphere: &SphereGrid, u: &[C64], disc: &SphericalDisc) -> Result<i32, TopologyError> {
    let mut n: Option<usize> = None;
    let mut last = None;
    for _ in 0..5 {
        let trace = sphere.circle_trace(u, disc, n)?;
        let count = trace.len() - 1;
        match winding_number(&Loop::new(trace)?) {
            Err(e @ TopologyError::UnderResolved { .. }) => {
                last = Some(e);
                n = Some(2 * count);
            }
            other => return other,
        }
    }
    Err(last.expect("refinement rounds ran"))
}

/// Degree of a planar field on the circle of radius `r` around `center`,
/// with the same refinement policy as [`degree_on_sphere`].
pub fn degree_on_circle(lat: &Lattice, u: &[C64], center: [f64; 2], r: f64) -> Result<i32, TopologyError> {
    let mut n = ((TAU * r / lat.h()).ceil() as usize).max(32);
    let mut last = None;
    for _ in 0..5 {
        let mut samples = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let t = TAU * (k % n) as f64 / n as f64;
            let p = [center[0] + r * t.cos(), center[1] + r * t.sin(), 0.0];
            let v = lat.interpolate(u, p).ok_or(GeometryError::UnresolvedDisc {
                rho: r,
                reason: "circle leaves the lattice".into(),
            })?;
            samples.push(v);
        }
        match winding_number(&Loop::new(samples)?) {
            Err(e @ TopologyError::UnderResolved { .. }) => {
                last = Some(e);
                n *= 2;
            }
            other => return other,
        }
    }
    Err(last.expect("refinement rounds ran"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize, d: i32) -> Loop {
        Loop::new(
            (0..n)
                .map(|k| C64::from_polar(1.0, d as f64 * TAU * k as f64 / n as f64))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn canonical_windings() {
        assert_eq!(winding_number(&circle(64, 1)).unwrap(), 1);
        assert_eq!(winding_number(&circle(64, -2)).unwrap(), -2);
        assert_eq!(
            winding_number(&Loop::new(vec![C64::new(2.0, 1.0); 16]).unwrap()).unwrap(),
            0
        );
    }

    #[test]
    fn zero_sample_rejected() {
        let mut s: Vec<C64> = (0..16).map(|k| C64::from_polar(1.0, k as f64)).collect();
        s[3] = C64::new(0.0, 0.0);
        assert!(matches!(
            winding_number(&Loop::new(s).unwrap()),
            Err(TopologyError::ZeroModulus { index: 3 })
        ));
    }

    #[test]
    fn coarse_loop_flagged() {
        assert!(matches!(
            winding_number(&circle(9, 4)),
            Err(TopologyError::UnderResolved { .. })
        ));
    }
}
