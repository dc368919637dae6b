//! Local update operators: semi-Lagrangian (planar) and Hamiltonian finite
//! differences (planar or spatial).

use crate::cost::CostField;
use crate::error::{domain, Result};
use crate::manifold::{dn_mat3, Mat3, ModelParams, Tangent, Variant, Vec3};
use crate::tessellation::{
    angular_edge_weights, build_spatial_stencil_2d, offset_scheme, product_stencil, sphere_log, MWNorm, OffsetScheme,
    ProductGrid, SLStencil,
};

use super::hopf_lax::simplex_update;

/// A monotone, causal local update operator on a product grid.
pub trait UpdateScheme: Sync {
    fn grid(&self) -> &ProductGrid;

    /// `Λu(p)`; non-finite entries of `u` are treated as unavailable.
    fn update(&self, p: usize, u: &[f64]) -> f64;

    /// Same as [`update`](Self::update) restricted to the parts of the
    /// stencil of `p` that involve `q`.
    fn update_via(&self, p: usize, _q: usize, u: &[f64]) -> f64 {
        self.update(p, u)
    }

    /// Nodes whose stencil contains `q`.
    fn dependents(&self, q: usize, out: &mut Vec<usize>);
}

/// Largest `λ` with `Σ aᵢ (λ − uᵢ)_+² = 1`.
pub fn solve_positive_part(terms: &mut [(f64, f64)]) -> f64 {
    let mut k = 0;
    for i in 0..terms.len() {
        if terms[i].1.is_finite() && terms[i].0 > 0.0 {
            terms[k] = terms[i];
            k += 1;
        }
    }
    let terms = &mut terms[..k];
    if terms.is_empty() {
        return f64::INFINITY;
    }
    terms.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for i in 0..terms.len() {
        let (ai, ui) = terms[i];
        a += ai;
        b += ai * ui;
        c += ai * ui * ui;
        let disc = (b * b - a * (c - 1.0)).max(0.0);
        let lam = (b + disc.sqrt()) / a;
        if i + 1 == terms.len() || lam <= terms[i + 1].1 {
            return lam;
        }
    }
    unreachable!()
}

/// Semi-Lagrangian scheme for planar states.
pub struct SemiLagrangian<'a> {
    grid: &'a ProductGrid,
    cost: &'a CostField,
    pub stencils: Vec<SLStencil>,
    spatial: Vec<Mat3>,
    w_unit: Vec<Vec3>,
    dtheta: f64,
}

impl<'a> SemiLagrangian<'a> {
    pub fn new(grid: &'a ProductGrid, cost: &'a CostField, params: &ModelParams, cap: f64) -> Result<Self> {
        if grid.dim() != 2 {
            return domain("semi-Lagrangian stencils are only available for d = 2");
        }
        params.validate()?;
        if params.epsilon == 0.0 {
            return domain("solvers require epsilon > 0");
        }
        let unit = crate::manifold::CostSample::uniform();
        let mut stencils = Vec::with_capacity(grid.no());
        let mut spatial = Vec::with_capacity(grid.no());
        let mut w_unit = Vec::with_capacity(grid.no());
        for (k, n) in grid.sphere.vertices.iter().enumerate() {
            let arrival = MWNorm::planar(params, &unit, n).reversed();
            let fan = build_spatial_stencil_2d(&arrival, cap)?;
            stencils.push(product_stencil(k, fan, &[1, -1]));
            let mut s = dn_mat3(n, 1.0 / params.epsilon);
            for i in 0..3 {
                s[(2, i)] = 0.0;
                s[(i, 2)] = 0.0;
            }
            spatial.push(s);
            w_unit.push(arrival.w);
        }
        Ok(SemiLagrangian { grid, cost, stencils, spatial, w_unit, dtheta: grid.sphere.spacing() })
    }

    fn norm_at(&self, p: usize, k: usize) -> MWNorm {
        let c = self.cost.sample(p);
        let mut m = self.spatial[k] * (c.c1 * c.c1);
        m[(2, 2)] = c.c2 * c.c2;
        MWNorm { m, w: self.w_unit[k] * c.c1 }
    }

    #[inline]
    fn vertex(&self, s: usize, k: usize, o: [i64; 3], u: &[f64]) -> (Vec3, f64) {
        let h = self.grid.spatial.h;
        let a = Vec3::new(h * o[0] as f64, h * o[1] as f64, self.dtheta * o[2] as f64);
        let no = self.grid.no() as i64;
        let val = match self.grid.spatial.offset(s, [o[0], o[1], 0]) {
            Some(s2) if self.grid.spatial.segment_clear(s, [o[0], o[1], 0]) => {
                let k2 = (k as i64 + o[2]).rem_euclid(no) as usize;
                u[self.grid.index(s2, k2)]
            }
            _ => f64::INFINITY,
        };
        (a, val)
    }

    fn eval_facet(&self, norm: &MWNorm, s: usize, k: usize, j: usize, sign: i64, u: &[f64]) -> f64 {
        let fan = &self.stencils[k].fan;
        let (fa, fb) = (fan[j], fan[(j + 1) % fan.len()]);
        let (a0, u0) = self.vertex(s, k, [fa[0], fa[1], 0], u);
        let (a1, u1) = self.vertex(s, k, [fb[0], fb[1], 0], u);
        let (a2, u2) = self.vertex(s, k, [0, 0, sign], u);
        if !(u0.is_finite() || u1.is_finite() || u2.is_finite()) {
            return f64::INFINITY;
        }
        simplex_update(norm, &[a0, a1, a2], &[u0, u1, u2]).0
    }

    /// Full update with the minimizing facet and weights.
    pub fn update_detailed(&self, p: usize, u: &[f64]) -> super::HopfLaxResult {
        let (s, k) = self.grid.split(p);
        let norm = self.norm_at(p, k);
        let mut best = super::HopfLaxResult::INFINITE;
        let fan = &self.stencils[k].fan;
        let mut f = 0;
        for j in 0..fan.len() {
            for sign in [1, -1] {
                let (fa, fb) = (fan[j], fan[(j + 1) % fan.len()]);
                let verts = [[fa[0], fa[1], 0], [fb[0], fb[1], 0], [0, 0, sign]];
                let mut a = [Vec3::zeros(); 3];
                let mut vals = [0.0; 3];
                for i in 0..3 {
                    (a[i], vals[i]) = self.vertex(s, k, verts[i], u);
                }
                let (v, xi) = simplex_update(&norm, &a, &vals);
                if v < best.value {
                    best = super::HopfLaxResult { value: v, facet: Some(f), weights: xi };
                }
                f += 1;
            }
        }
        best
    }
}

impl UpdateScheme for SemiLagrangian<'_> {
    fn grid(&self) -> &ProductGrid {
        self.grid
    }

    fn update(&self, p: usize, u: &[f64]) -> f64 {
        if self.grid.is_masked(p) {
            return f64::INFINITY;
        }
        let (s, k) = self.grid.split(p);
        let norm = self.norm_at(p, k);
        let mut best = f64::INFINITY;
        for j in 0..self.stencils[k].fan.len() {
            for sign in [1, -1] {
                best = best.min(self.eval_facet(&norm, s, k, j, sign, u));
            }
        }
        best
    }

    fn update_via(&self, p: usize, q: usize, u: &[f64]) -> f64 {
        if self.grid.is_masked(p) {
            return f64::INFINITY;
        }
        let (sp, kp) = self.grid.split(p);
        let (sq, kq) = self.grid.split(q);
        let norm = self.norm_at(p, kp);
        let fan = &self.stencils[kp].fan;
        let m = fan.len();
        let mut best = f64::INFINITY;
        if kp == kq {
            let cp = self.grid.spatial.coords(sp);
            let cq = self.grid.spatial.coords(sq);
            let d = [cq[0] as i64 - cp[0] as i64, cq[1] as i64 - cp[1] as i64];
            let Some(j) = fan.iter().position(|a| *a == d) else {
                return self.update(p, u);
            };
            for e in [(j + m - 1) % m, j] {
                for sign in [1, -1] {
                    best = best.min(self.eval_facet(&norm, sp, kp, e, sign, u));
                }
            }
        } else {
            let no = self.grid.no();
            let sign = if kq == (kp + 1) % no { 1 } else { -1 };
            for j in 0..m {
                best = best.min(self.eval_facet(&norm, sp, kp, j, sign, u));
            }
        }
        best
    }

    fn dependents(&self, q: usize, out: &mut Vec<usize>) {
        let (s, k) = self.grid.split(q);
        let no = self.grid.no();
        for a in &self.stencils[k].fan {
            if let Some(sp) = self.grid.spatial.offset(s, [-a[0], -a[1], 0]) {
                out.push(self.grid.index(sp, k));
            }
        }
        out.push(self.grid.index(s, (k + 1) % no));
        out.push(self.grid.index(s, (k + no - 1) % no));
    }
}

/// Capacity of the per-node term buffer of [`Hamiltonian::terms`].
pub const MAX_TERMS: usize = 16;

enum Angular {
    /// Circle: one Rouy–Tourin pair with coefficient `1/δθ²`.
    Circle { coef: f64 },
    /// Sphere: per-vertex edge weights.
    Edges(Vec<Vec<(usize, f64)>>),
}

/// Upwind Hamiltonian scheme built from Selling decompositions.
pub struct Hamiltonian<'a> {
    grid: &'a ProductGrid,
    cost: &'a CostField,
    variant: Variant,
    pub schemes: Vec<OffsetScheme>,
    angular: Angular,
}

impl<'a> Hamiltonian<'a> {
    pub fn new(grid: &'a ProductGrid, cost: &'a CostField, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if params.epsilon == 0.0 {
            return domain("solvers require epsilon > 0");
        }
        let dim = grid.dim();
        let schemes = grid
            .sphere
            .vertices
            .iter()
            .enumerate()
            .map(|(k, n)| {
                let mut s = offset_scheme(n, dim, params.epsilon, k)?;
                s.pairs.retain(|p| p.rho > 0.0);
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        let angular = if dim == 2 {
            let d = grid.sphere.spacing();
            Angular::Circle { coef: 1.0 / (d * d) }
        } else {
            Angular::Edges((0..grid.no()).map(|k| angular_edge_weights(&grid.sphere, k)).collect())
        };
        Ok(Hamiltonian { grid, cost, variant: params.variant, schemes, angular })
    }

    /// Upwind terms `(aᵢ, uᵢ)` of the local equation `Σ aᵢ (λ − uᵢ)_+² = 1`.
    pub fn terms(&self, p: usize, u: &[f64], terms: &mut [(f64, f64); MAX_TERMS]) -> usize {
        let (s, k) = self.grid.split(p);
        let c = self.cost.sample(p);
        let h = self.grid.spatial.h;
        let sc = 1.0 / (h * h * c.c1 * c.c1);
        let ac = 1.0 / (c.c2 * c.c2);
        let mut t = 0;
        for pr in &self.schemes[k].pairs {
            let back = self.spatial_value(s, k, [-pr.w[0], -pr.w[1], -pr.w[2]], u);
            let val = match self.variant {
                Variant::Forward => back,
                Variant::Symmetric => back.min(self.spatial_value(s, k, pr.w, u)),
            };
            terms[t] = (pr.rho * sc, val);
            t += 1;
        }
        match &self.angular {
            Angular::Circle { coef } => {
                let no = self.grid.no();
                let a = u[self.grid.index(s, (k + 1) % no)];
                let b = u[self.grid.index(s, (k + no - 1) % no)];
                terms[t] = (coef * ac, a.min(b));
                t += 1;
            }
            Angular::Edges(e) => {
                for &(j, r) in e[k].iter().take(MAX_TERMS - t) {
                    terms[t] = (r * ac, u[self.grid.index(s, j)]);
                    t += 1;
                }
            }
        }
        t
    }

    /// Discrete geodesic flow `Σ aᵢ (u(p) − uᵢ)_+ (qᵢ − p)` at a node: a
    /// consistent approximation of `−G⁻¹dU` (resp. its forward analogue)
    /// pointing toward the upwind neighbors. Infinite neighbors are skipped.
    pub fn flow(&self, p: usize, u: &[f64]) -> Tangent {
        let (s, k) = self.grid.split(p);
        let up = u[p];
        let mut v = Tangent { xdot: Vec3::zeros(), ndot: Vec3::zeros() };
        if !up.is_finite() {
            return v;
        }
        let c = self.cost.sample(p);
        let h = self.grid.spatial.h;
        let sc = 1.0 / (h * h * c.c1 * c.c1);
        let ac = 1.0 / (c.c2 * c.c2);
        for pr in &self.schemes[k].pairs {
            let back = [-pr.w[0], -pr.w[1], -pr.w[2]];
            let vb = self.spatial_value(s, k, back, u);
            let (val, dir) = match self.variant {
                Variant::Symmetric if self.spatial_value(s, k, pr.w, u) < vb => {
                    (self.spatial_value(s, k, pr.w, u), pr.offset() * h)
                }
                _ => (vb, -pr.offset() * h),
            };
            if val.is_finite() && val < up {
                v.xdot += dir * (pr.rho * sc * (up - val));
            }
        }
        let n = self.grid.sphere.vertices[k];
        match &self.angular {
            Angular::Circle { coef } => {
                let no = self.grid.no();
                let (ia, ib) = ((k + 1) % no, (k + no - 1) % no);
                let (a, b) = (u[self.grid.index(s, ia)], u[self.grid.index(s, ib)]);
                let (val, j) = if a < b { (a, ia) } else { (b, ib) };
                if val.is_finite() && val < up {
                    let t = sphere_log(&n, &self.grid.sphere.vertices[j]);
                    v.ndot += t * (coef * ac * (up - val));
                }
            }
            Angular::Edges(e) => {
                for &(j, r) in e[k].iter().take(MAX_TERMS - self.schemes[k].pairs.len()) {
                    let val = u[self.grid.index(s, j)];
                    if val.is_finite() && val < up {
                        let t = sphere_log(&n, &self.grid.sphere.vertices[j]);
                        v.ndot += t * (r * ac * (up - val));
                    }
                }
            }
        }
        v
    }

    /// Discrete dual norm `√(Σ aᵢ (u(p) − uᵢ)_+²)` of the upwind gradient.
    pub fn discrete_dual(&self, p: usize, u: &[f64]) -> f64 {
        let mut terms = [(0.0, 0.0); MAX_TERMS];
        let t = self.terms(p, u, &mut terms);
        let up = u[p];
        terms[..t]
            .iter()
            .filter(|(_, v)| v.is_finite())
            .map(|&(a, v)| a * (up - v).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `Σ aᵢ` at `p`; bounds the Lipschitz constant of [`discrete_dual`](Self::discrete_dual).
    pub fn coefficient_sum(&self, p: usize) -> f64 {
        let k = p % self.grid.no();
        let c = self.cost.sample(p);
        let h = self.grid.spatial.h;
        let mut sum: f64 = self.schemes[k].pairs.iter().map(|pr| pr.rho).sum::<f64>() / (h * h * c.c1 * c.c1);
        sum += match &self.angular {
            Angular::Circle { coef } => coef / (c.c2 * c.c2),
            Angular::Edges(e) => e[k].iter().map(|(_, r)| r).sum::<f64>() / (c.c2 * c.c2),
        };
        sum
    }

    #[inline]
    fn spatial_value(&self, s: usize, k: usize, w: [i64; 3], u: &[f64]) -> f64 {
        match self.grid.spatial.offset(s, w) {
            Some(s2) if self.grid.spatial.segment_clear(s, w) => u[self.grid.index(s2, k)],
            _ => f64::INFINITY,
        }
    }
}

impl UpdateScheme for Hamiltonian<'_> {
    fn grid(&self) -> &ProductGrid {
        self.grid
    }

    fn update(&self, p: usize, u: &[f64]) -> f64 {
        if self.grid.is_masked(p) {
            return f64::INFINITY;
        }
        let mut terms = [(0.0, 0.0); MAX_TERMS];
        let t = self.terms(p, u, &mut terms);
        solve_positive_part(&mut terms[..t])
    }

    fn dependents(&self, q: usize, out: &mut Vec<usize>) {
        let (s, k) = self.grid.split(q);
        for pr in &self.schemes[k].pairs {
            if let Some(sp) = self.grid.spatial.offset(s, pr.w) {
                out.push(self.grid.index(sp, k));
            }
            if self.variant == Variant::Symmetric {
                if let Some(sp) = self.grid.spatial.offset(s, [-pr.w[0], -pr.w[1], -pr.w[2]]) {
                    out.push(self.grid.index(sp, k));
                }
            }
        }
        for &j in &self.grid.sphere.neighbors[k] {
            out.push(self.grid.index(s, j));
        }
    }
}

/// Hamiltonian update from explicit terms; exposed for direct checks.
pub fn hamiltonian_update(spatial: &[(f64, f64)], angular: &[(f64, f64)], c1: f64, c2: f64, h: f64) -> f64 {
    let mut terms: Vec<(f64, f64)> = spatial
        .iter()
        .map(|&(rho, u)| (rho / (h * h * c1 * c1), u))
        .chain(angular.iter().map(|&(r, u)| (r / (c2 * c2), u)))
        .collect();
    solve_positive_part(&mut terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_examples() {
        assert!((hamiltonian_update(&[(1.0, 0.0)], &[], 1.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
        let v = hamiltonian_update(&[(1.0, 0.0), (1.0, 0.0)], &[], 1.0, 1.0, 1.0);
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(hamiltonian_update(&[(1.0, f64::INFINITY)], &[(1.0, f64::INFINITY)], 1.0, 1.0, 1.0).is_infinite());
        // A far neighbour does not participate.
        assert!((hamiltonian_update(&[(1.0, 0.0), (1.0, 5.0)], &[], 1.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
    }
}
