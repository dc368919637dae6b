//! Discrete eikonal residual `|F*(p, DU(p)) − 1|`.

use serde::Serialize;

use crate::cost::CostField;
use crate::manifold::{dual_cost_unchecked, Cotangent, Vec3};
use crate::tessellation::sphere_log;

use super::DistanceMap;

#[derive(Clone, Debug, Default, Serialize)]
pub struct ResidualStats {
    pub count: usize,
    pub median: f64,
    pub p90: f64,
}

/// One-sided difference toward the smaller neighbour; `None` if both
/// neighbours are missing or infinite.
fn upwind(u: f64, lo: Option<f64>, hi: Option<f64>, h: f64) -> Option<f64> {
    let lo = lo.filter(|v| v.is_finite());
    let hi = hi.filter(|v| v.is_finite());
    match (lo, hi) {
        (None, None) => None,
        (Some(a), Some(b)) if a.min(b) >= u => Some(0.0),
        (Some(a), Some(b)) => Some(if a <= b { (u - a) / h } else { (b - u) / h }),
        (Some(a), None) => Some((u - a) / h),
        (None, Some(b)) => Some((b - u) / h),
    }
}

/// Residual statistics over nodes with `U ≥ min_value`, at least `border`
/// nodes from the box boundary and `border` nodes from any wall.
pub fn eikonal_residual(map: &DistanceMap, cost: &CostField, min_value: f64, border: usize) -> ResidualStats {
    let g = &map.grid;
    let sp = &g.spatial;
    let params = map.params();
    let u = &map.values;
    let h = sp.h;
    let no = g.no();
    let b = border as i64;
    let mut res = Vec::new();
    'nodes: for idx in 0..g.len() {
        let val = u[idx];
        if !val.is_finite() || val < min_value {
            continue;
        }
        let (s, k) = g.split(idx);
        let c = sp.coords(s);
        for a in 0..sp.dim {
            if (c[a] as i64) < b || c[a] as i64 >= sp.dims[a] as i64 - b {
                continue 'nodes;
            }
        }
        if sp.mask.is_some() {
            for dz in if sp.dim == 3 { -b..=b } else { 0..=0 } {
                for dy in -b..=b {
                    for dx in -b..=b {
                        if sp.offset(s, [dx, dy, dz]).is_none_or(|q| sp.is_masked(q)) {
                            continue 'nodes;
                        }
                    }
                }
            }
        }
        let mut xhat = Vec3::zeros();
        for a in 0..sp.dim {
            let mut o = [0i64; 3];
            o[a] = 1;
            let hi = sp.offset(s, o).map(|q| u[g.index(q, k)]);
            o[a] = -1;
            let lo = sp.offset(s, o).map(|q| u[g.index(q, k)]);
            let Some(d) = upwind(val, lo, hi, h) else { continue 'nodes };
            xhat[a] = d;
        }
        let n = g.sphere.vertices[k];
        let nhat = if g.dim() == 2 {
            let dth = g.sphere.spacing();
            let hi = u[g.index(s, (k + 1) % no)];
            let lo = u[g.index(s, (k + no - 1) % no)];
            let Some(d) = upwind(val, Some(lo), Some(hi), dth) else { continue };
            Vec3::new(-n[1], n[0], 0.0) * d
        } else {
            // Least-squares tangent gradient over sphere neighbours.
            let mut ata = nalgebra::Matrix3::<f64>::zeros();
            let mut atb = Vec3::zeros();
            for &j in &g.sphere.neighbors[k] {
                let uj = u[g.index(s, j)];
                if !uj.is_finite() {
                    continue 'nodes;
                }
                let t = sphere_log(&n, &g.sphere.vertices[j]);
                ata += t * t.transpose();
                atb += t * (uj - val);
            }
            ata += n * n.transpose();
            match ata.try_inverse() {
                Some(inv) => inv * atb,
                None => continue,
            }
        };
        let f = dual_cost_unchecked(&params, &cost.sample(idx), &n, &Cotangent { xhat, nhat });
        res.push((f - 1.0).abs());
    }
    if res.is_empty() {
        return ResidualStats::default();
    }
    res.sort_by(|a, b| a.total_cmp(b));
    let q = |f: f64| res[((res.len() - 1) as f64 * f).round() as usize];
    ResidualStats { count: res.len(), median: q(0.5), p90: q(0.9) }
}
