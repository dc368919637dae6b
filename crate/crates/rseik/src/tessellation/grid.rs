use serde::{Deserialize, Serialize};

use super::sphere::SphereGrid;
use crate::error::{domain, Result};
use crate::manifold::{PointPO, Vec3};

/// Cartesian grid `origin + h·(i, j[, k])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub dim: usize,
    /// Extents; `dims[2] == 1` for planar grids.
    pub dims: [usize; 3],
    pub h: f64,
    pub origin: [f64; 3],
    /// `true` marks a wall (masked) node.
    #[serde(skip)]
    pub mask: Option<Vec<bool>>,
}

impl SpatialGrid {
    pub fn new(dims: &[usize], h: f64, origin: &[f64]) -> Result<Self> {
        let dim = dims.len();
        if !(dim == 2 || dim == 3) || origin.len() != dim {
            return domain("spatial grid must be 2D or 3D with matching origin");
        }
        if !(h > 0.0) || !h.is_finite() {
            return domain(format!("grid scale must be positive, got {h}"));
        }
        if dims.iter().any(|&n| n < 2) {
            return domain("each grid extent must be at least 2");
        }
        let mut d = [1usize; 3];
        let mut o = [0.0; 3];
        d[..dim].copy_from_slice(dims);
        o[..dim].copy_from_slice(origin);
        Ok(SpatialGrid { dim, dims: d, h, origin: o, mask: None })
    }

    /// Grid with `n` nodes per axis spanning `[-half, half]^d`.
    pub fn centered(dim: usize, n: usize, half: f64) -> Result<Self> {
        let h = 2.0 * half / (n as f64 - 1.0);
        Self::new(&vec![n; dim], h, &vec![-half; dim])
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.len() {
            return domain(format!("mask has {} entries, grid has {}", mask.len(), self.len()));
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let r = idx / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    /// Shifts a node by an integer offset; `None` if it leaves the grid.
    #[inline]
    pub fn offset(&self, idx: usize, o: [i64; 3]) -> Option<usize> {
        let c = self.coords(idx);
        let mut out = [0usize; 3];
        for a in 0..3 {
            let v = c[a] as i64 + o[a];
            if v < 0 || v >= self.dims[a] as i64 {
                return None;
            }
            out[a] = v as usize;
        }
        Some(self.index(out))
    }

    pub fn position(&self, idx: usize) -> Vec3 {
        let c = self.coords(idx);
        let mut p = Vec3::zeros();
        for a in 0..self.dim {
            p[a] = self.origin[a] + self.h * c[a] as f64;
        }
        p
    }

    /// Continuous grid coordinates of a position.
    pub fn to_grid(&self, x: &Vec3) -> [f64; 3] {
        let mut g = [0.0; 3];
        for a in 0..self.dim {
            g[a] = (x[a] - self.origin[a]) / self.h;
        }
        g
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        let g = self.to_grid(x);
        (0..self.dim).all(|a| g[a] >= -1e-9 && g[a] <= (self.dims[a] - 1) as f64 + 1e-9)
    }

    pub fn nearest(&self, x: &Vec3) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let g = self.to_grid(x);
        let mut c = [0usize; 3];
        for a in 0..self.dim {
            c[a] = (g[a].round().max(0.0) as usize).min(self.dims[a] - 1);
        }
        Some(self.index(c))
    }

    #[inline]
    pub fn is_masked(&self, idx: usize) -> bool {
        self.mask.as_ref().is_some_and(|m| m[idx])
    }

    /// Whether the straight segment from node `idx` along offset `o` avoids walls.
    pub fn segment_clear(&self, idx: usize, o: [i64; 3]) -> bool {
        let Some(mask) = &self.mask else { return true };
        let c = self.coords(idx);
        let len = o.iter().map(|v| v.abs()).max().unwrap_or(0);
        let steps = 2 * len;
        for s in 1..=steps {
            let t = s as f64 / steps as f64;
            let mut q = [0usize; 3];
            for a in 0..3 {
                q[a] = (c[a] as f64 + t * o[a] as f64).round() as usize;
            }
            if mask[self.index(q)] {
                return false;
            }
        }
        true
    }

    /// Diameter of the box.
    pub fn diameter(&self) -> f64 {
        (0..self.dim)
            .map(|a| (self.h * (self.dims[a] - 1) as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Product grid: spatial nodes × sphere vertices, orientation index fastest.
#[derive(Clone, Debug)]
pub struct ProductGrid {
    pub spatial: SpatialGrid,
    pub sphere: SphereGrid,
}

impl ProductGrid {
    pub fn new(spatial: SpatialGrid, sphere: SphereGrid) -> Result<Self> {
        if sphere.dim() != spatial.dim {
            return domain(format!(
                "sphere S^{} does not match spatial dimension {}",
                sphere.dim() - 1,
                spatial.dim
            ));
        }
        Ok(ProductGrid { spatial, sphere })
    }

    pub fn dim(&self) -> usize {
        self.spatial.dim
    }

    pub fn no(&self) -> usize {
        self.sphere.len()
    }

    pub fn len(&self) -> usize {
        self.spatial.len() * self.sphere.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, s: usize, o: usize) -> usize {
        o + self.no() * s
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.no(), idx % self.no())
    }

    #[inline]
    pub fn is_masked(&self, idx: usize) -> bool {
        self.spatial.is_masked(idx / self.no())
    }

    pub fn state(&self, idx: usize) -> PointPO {
        let (s, o) = self.split(idx);
        PointPO { dim: self.dim(), x: self.spatial.position(s), n: self.sphere.vertices[o] }
    }

    /// Nearest node to a state.
    pub fn snap(&self, p: &PointPO) -> Result<usize> {
        if p.dim != self.dim() {
            return domain("state dimension does not match grid");
        }
        let Some(s) = self.spatial.nearest(&p.x) else {
            return domain(format!("position {:?} outside grid", &p.x.as_slice()[..p.dim]));
        };
        Ok(self.index(s, self.sphere.nearest(&p.n)))
    }

    /// Multilinear (space) × barycentric (sphere) interpolation weights.
    pub fn interp_weights(&self, p: &PointPO, out: &mut Vec<(usize, f64)>) -> Result<()> {
        out.clear();
        let sp = &self.spatial;
        if !sp.contains(&p.x) {
            return domain(format!("position {:?} outside grid", &p.x.as_slice()[..p.dim]));
        }
        let g = sp.to_grid(&p.x);
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..sp.dim {
            let f = g[a].clamp(0.0, (sp.dims[a] - 1) as f64);
            let i = (f.floor() as usize).min(sp.dims[a] - 2);
            base[a] = i;
            frac[a] = f - i as f64;
        }
        let sw = self.sphere.weights(&p.n);
        let corners = 1usize << sp.dim;
        for c in 0..corners {
            let mut idx = base;
            let mut w = 1.0;
            for a in 0..sp.dim {
                if c & (1 << a) != 0 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            let s = sp.index(idx);
            for (o, wo) in sw.iter() {
                if wo > 0.0 {
                    out.push((self.index(s, o), w * wo));
                }
            }
        }
        Ok(())
    }

    /// Interpolated value; `+∞` if any contributing node is infinite.
    pub fn interpolate(&self, values: &[f64], p: &PointPO) -> Result<f64> {
        let mut w = Vec::with_capacity(24);
        self.interp_weights(p, &mut w)?;
        Ok(w.iter().map(|&(i, wi)| wi * values[i]).sum::<f64>())
    }

    pub fn same_shape(&self, other: &ProductGrid) -> bool {
        self.spatial.dims == other.spatial.dims
            && self.spatial.dim == other.spatial.dim
            && (self.spatial.h - other.spatial.h).abs() <= 1e-12 * self.spatial.h
            && self.spatial.origin == other.spatial.origin
            && self.sphere.kind == other.sphere.kind
    }
}
