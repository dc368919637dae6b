use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::DensityField;
use crate::error::{domain, Result};
use crate::manifold::Vec3;
use crate::tessellation::{ProductGrid, SpatialGrid};

/// A fibre bundle: a polyline centerline with a flat-topped cross-section and an
/// antipodally symmetric angular kernel `|n·T|^κ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub centerline: Vec<Vec3>,
    pub radius: f64,
    pub amplitude: f64,
    pub kappa: f64,
}

impl Tube {
    pub fn new(centerline: Vec<Vec3>, radius: f64, amplitude: f64, kappa: f64) -> Result<Self> {
        if centerline.len() < 2 {
            return domain("tube centerline needs at least two points");
        }
        if let Some(i) = centerline.windows(2).position(|w| (w[1] - w[0]).norm() < 1e-12) {
            return domain(format!("degenerate tangent at centerline segment {i}"));
        }
        if !(radius > 0.0) || !amplitude.is_finite() || !(kappa >= 0.0) {
            return domain(format!("bad tube parameters: radius {radius}, amplitude {amplitude}, kappa {kappa}"));
        }
        Ok(Tube { centerline, radius, amplitude, kappa })
    }

    /// Samples `f` on `[0, 1]` at `samples + 1` points.
    pub fn from_curve(f: impl Fn(f64) -> Vec3, samples: usize, radius: f64, amplitude: f64, kappa: f64) -> Result<Self> {
        let pts = (0..=samples.max(1)).map(|i| f(i as f64 / samples.max(1) as f64)).collect();
        Tube::new(pts, radius, amplitude, kappa)
    }

    /// Distance to the centerline and the unit tangent at the closest point.
    pub fn closest(&self, x: &Vec3) -> (f64, Vec3) {
        let mut best = (f64::INFINITY, Vec3::x());
        for w in self.centerline.windows(2) {
            let d = w[1] - w[0];
            let s = ((x - w[0]).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
            let dist = (x - (w[0] + d * s)).norm();
            if dist < best.0 {
                best = (dist, d.normalize());
            }
        }
        best
    }

    /// Arc length of the centerline.
    pub fn length(&self) -> f64 {
        self.centerline.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn start(&self) -> Vec3 {
        self.centerline[0]
    }

    pub fn end(&self) -> Vec3 {
        *self.centerline.last().unwrap()
    }
}

/// `W(x, n) = Σ amplitude·exp(−(d/r)⁴)·|n·T|^κ` over all tubes.
pub fn synth_tube_phantom(grid: &ProductGrid, tubes: &[Tube]) -> Result<DensityField> {
    let sp = &grid.spatial;
    for (k, t) in tubes.iter().enumerate() {
        if let Some(p) = t.centerline.iter().find(|p| !sp.contains(p)) {
            return domain(format!("tube {k} leaves the grid at {:?}", p.as_slice()));
        }
        if grid.dim() == 2 && t.centerline.iter().any(|p| p[2] != 0.0) {
            return domain(format!("tube {k} is not planar"));
        }
    }
    let no = grid.no();
    let mut values = vec![0.0; grid.len()];
    values.par_chunks_mut(no).enumerate().for_each(|(s, out)| {
        let x = sp.position(s);
        for t in tubes {
            let (d, tan) = t.closest(&x);
            let bump = t.amplitude * (-(d / t.radius).powi(4)).exp();
            if bump == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().enumerate() {
                *v += bump * grid.sphere.vertices[o].dot(&tan).abs().powf(t.kappa);
            }
        }
    });
    DensityField::new(grid.clone(), values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// A curved bundle crossing a straight one twice.
    TwoCrossings,
    /// A bundle with torsion, a bundle crossing it, and a cheaper bundle
    /// running parallel to the first over part of its length.
    TorsionParallel,
}

impl std::str::FromStr for Preset {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_crossings" => Ok(Preset::TwoCrossings),
            "torsion_parallel" => Ok(Preset::TorsionParallel),
            _ => domain(format!("unknown preset '{s}'")),
        }
    }
}

pub const DEFAULT_KAPPA: f64 = 10.0;

impl Preset {
    /// Tubes laid out in the bounding box of a 3D grid. The first tube is the
    /// one experiments track; radii are two voxels.
    pub fn tubes(self, sp: &SpatialGrid) -> Result<Vec<Tube>> {
        if sp.dim != 3 {
            return domain("phantom presets are three-dimensional");
        }
        let lo = Vec3::from_column_slice(&sp.origin);
        let ext = Vec3::new(
            (sp.dims[0] - 1) as f64 * sp.h,
            (sp.dims[1] - 1) as f64 * sp.h,
            (sp.dims[2] - 1) as f64 * sp.h,
        );
        let at = move |u: f64, v: f64, w: f64| lo + Vec3::new(u * ext[0], v * ext[1], w * ext[2]);
        let r = 2.0 * sp.h;
        let k = DEFAULT_KAPPA;
        let pi = std::f64::consts::PI;
        match self {
            Preset::TwoCrossings => {
                // The straight bundle is tilted off the lattice axes: an
                // axis-aligned one is resolved exactly by both the stencils
                // and the sphere, which biases the comparison in its favour.
                let tilt = 16f64.to_radians().tan();
                Ok(vec![
                    Tube::from_curve(|s| at(0.1 + 0.8 * s, 0.25 + 0.45 * (pi * s).sin(), 0.5), 200, r, 1.0, k)?,
                    Tube::from_curve(|s| at(0.05 + 0.9 * s, 0.5 + 0.45 * (2.0 * s - 1.0) * tilt, 0.5), 50, r, 1.0, k)?,
                ])
            }
            Preset::TorsionParallel => {
                // Green and blue cost twice as much as red at σ = 3, p = 3.
                let a = (1.0f64 / 3.0).cbrt();
                // Green: an arch whose plane turns by 60° along the way.
                let green = move |s: f64| {
                    let f = pi / 2.0 + pi / 3.0 * (s - 0.5);
                    let r = 0.3 * (pi * s).sin();
                    at(0.1 + 0.8 * s, 0.45 + r * f.cos(), 0.35 + r * f.sin())
                };
                // Blue crosses green at its apex.
                let mid = green(0.5);
                let across = at(0.19, 0.67, 0.5) - lo;
                let tilt = 10f64.to_radians().tan();
                Ok(vec![
                    Tube::from_curve(green, 300, r, a, k)?,
                    Tube::from_curve(|s| mid + across * (s - 0.5), 50, r, a, k)?,
                    // Red runs under both ends of green, slightly tilted off-axis.
                    Tube::from_curve(|s| at(0.05 + 0.9 * s, 0.45 + 0.45 * (2.0 * s - 1.0) * tilt, 0.18), 50, r, 1.0, k)?,
                ])
            }
        }
    }
}
