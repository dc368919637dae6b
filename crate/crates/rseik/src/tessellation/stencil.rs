//! Acute semi-Lagrangian stencils and angular edge weights.

use crate::error::{Error, Result};
use crate::manifold::{dn_mat3, CostSample, Mat3, ModelParams, Variant, Vec3};

use super::sphere::{sphere_log, SphereGrid};

/// A norm on a (at most three dimensional) tangent space.
pub trait TangentNorm {
    fn value(&self, v: &Vec3) -> f64;

    /// Gradient of the norm at `v ≠ 0`; central differences by default.
    fn grad(&self, v: &Vec3) -> Vec3 {
        let h = 1e-6 * v.norm().max(1e-12);
        let mut g = Vec3::zeros();
        for i in 0..3 {
            let mut e = Vec3::zeros();
            e[i] = h;
            g[i] = (self.value(&(v + e)) - self.value(&(v - e))) / (2.0 * h);
        }
        g
    }
}

/// `v ↦ √((Mv, v) + (w, v)_-²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MWNorm {
    pub m: Mat3,
    pub w: Vec3,
}

impl MWNorm {
    pub fn euclidean() -> Self {
        MWNorm { m: Mat3::identity(), w: Vec3::zeros() }
    }

    /// Planar metric in coordinates `(x, y, θ)`.
    pub fn planar(params: &ModelParams, cost: &CostSample, n: &Vec3) -> Self {
        let eps = params.epsilon;
        let mut m = dn_mat3(n, 1.0 / eps) * (cost.c1 * cost.c1);
        for i in 0..3 {
            m[(2, i)] = 0.0;
            m[(i, 2)] = 0.0;
        }
        m[(2, 2)] = cost.c2 * cost.c2;
        let w = match params.variant {
            Variant::Symmetric => Vec3::zeros(),
            Variant::Forward => {
                let s = cost.c1 * (1.0 / (eps * eps) - 1.0).max(0.0).sqrt();
                Vec3::new(n[0] * s, n[1] * s, 0.0)
            }
        };
        MWNorm { m, w }
    }

    /// `v ↦ F(−v)`: the metric seen from the arrival node.
    pub fn reversed(&self) -> Self {
        MWNorm { m: self.m, w: -self.w }
    }

    pub fn is_riemannian(&self) -> bool {
        self.w == Vec3::zeros()
    }
}

impl TangentNorm for MWNorm {
    #[inline]
    fn value(&self, v: &Vec3) -> f64 {
        let s = self.w.dot(v).min(0.0);
        (v.dot(&(self.m * v)) + s * s).max(0.0).sqrt()
    }

    fn grad(&self, v: &Vec3) -> Vec3 {
        let f = self.value(v);
        (self.m * v + self.w * self.w.dot(v).min(0.0)) / f
    }
}

/// Generalized acuteness: `⟨dF(q), q′⟩ ≥ 0` for all ordered pairs of a facet.
pub fn acuteness_check<N: TangentNorm + ?Sized>(facet: &[Vec3], norm: &N) -> bool {
    for (i, q) in facet.iter().enumerate() {
        let g = norm.grad(q);
        for (j, q2) in facet.iter().enumerate() {
            if i != j && g.dot(q2) < -1e-12 * (1.0 + g.norm() * q2.norm()) {
                return false;
            }
        }
    }
    true
}

fn v2(a: [i64; 2]) -> Vec3 {
    Vec3::new(a[0] as f64, a[1] as f64, 0.0)
}

/// Counter-clockwise fan of integer offsets, each consecutive pair acute for
/// `norm` (restricted to the plane), built by Stern–Brocot refinement.
pub fn build_spatial_stencil_2d(norm: &MWNorm, cap: f64) -> Result<Vec<[i64; 2]>> {
    fn refine(u: [i64; 2], v: [i64; 2], norm: &MWNorm, cap: f64, out: &mut Vec<[i64; 2]>) -> Result<()> {
        if acuteness_check(&[v2(u), v2(v)], norm) {
            out.push(u);
            return Ok(());
        }
        let m = [u[0] + v[0], u[1] + v[1]];
        if v2(m).norm() > cap {
            return Err(Error::Stencil(format!(
                "offset {m:?} exceeds norm cap {cap}; increase epsilon or the cap"
            )));
        }
        refine(u, m, norm, cap, out)?;
        refine(m, v, norm, cap, out)
    }
    let base = [[1, 0], [0, 1], [-1, 0], [0, -1]];
    let mut out = Vec::new();
    for i in 0..4 {
        refine(base[i], base[(i + 1) % 4], norm, cap, &mut out)?;
    }
    Ok(out)
}

/// Product stencil for one orientation: spatial fan × angular offsets.
///
/// Facets are `{(a_j, 0), (a_{j+1}, 0), (0, s)}` for each fan edge and each
/// angular offset `s`; sub-facets are implied.
#[derive(Clone, Debug, PartialEq)]
pub struct SLStencil {
    pub orientation: usize,
    pub fan: Vec<[i64; 2]>,
    pub angular: Vec<i64>,
}

impl SLStencil {
    pub fn facet_count(&self) -> usize {
        self.fan.len() * self.angular.len().max(1)
    }

    /// Facet vertices as `(dx, dy, dk)` grid offsets.
    pub fn facets(&self) -> Vec<Vec<[i64; 3]>> {
        let m = self.fan.len();
        let mut out = Vec::with_capacity(self.facet_count());
        for j in 0..m {
            let (a, b) = (self.fan[j], self.fan[(j + 1) % m]);
            if self.angular.is_empty() {
                out.push(vec![[a[0], a[1], 0], [b[0], b[1], 0]]);
            }
            for &s in &self.angular {
                out.push(vec![[a[0], a[1], 0], [b[0], b[1], 0], [0, 0, s]]);
            }
        }
        out
    }

    /// Facets in physical tangent coordinates `(h·dx, h·dy, δθ·dk)`.
    pub fn physical_facets(&self, h: f64, dtheta: f64) -> Vec<Vec<Vec3>> {
        self.facets()
            .into_iter()
            .map(|f| f.iter().map(|o| Vec3::new(h * o[0] as f64, h * o[1] as f64, dtheta * o[2] as f64)).collect())
            .collect()
    }
}

pub fn product_stencil(orientation: usize, fan: Vec<[i64; 2]>, angular: &[i64]) -> SLStencil {
    SLStencil { orientation, fan, angular: angular.to_vec() }
}

/// Edge weights `ρ_e ≥ 0` at sphere vertex `k` such that
/// `Σ_e ρ_e (g·t_e)_+² ≈ ‖g‖²` for tangent covectors `g`, where `t_e` are
/// the log-mapped edge vectors. Fitted by nonnegative least squares.
pub fn angular_edge_weights(sphere: &SphereGrid, k: usize) -> Vec<(usize, f64)> {
    let n = sphere.vertices[k];
    let nb = &sphere.neighbors[k];
    let t: Vec<Vec3> = nb.iter().map(|&j| sphere_log(&n, &sphere.vertices[j])).collect();
    let helper = if n[0].abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (helper - n * helper.dot(&n)).normalize();
    let e2 = n.cross(&e1);
    let samples = 72;
    let m = nb.len();
    let mut a = vec![vec![0.0; m]; samples];
    for (s, row) in a.iter_mut().enumerate() {
        let ang = std::f64::consts::TAU * s as f64 / samples as f64;
        let g = e1 * ang.cos() + e2 * ang.sin();
        for (j, tj) in t.iter().enumerate() {
            row[j] = g.dot(tj).max(0.0).powi(2);
        }
    }
    let mut gram = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for row in &a {
        for i in 0..m {
            rhs[i] += row[i];
            for j in 0..m {
                gram[i][j] += row[i] * row[j];
            }
        }
    }
    // Projected coordinate descent on the normal equations.
    let mut rho = vec![0.0; m];
    for _ in 0..2000 {
        for i in 0..m {
            let r: f64 = (0..m).map(|j| gram[i][j] * rho[j]).sum::<f64>() - rhs[i];
            rho[i] = (rho[i] - r / gram[i][i]).max(0.0);
        }
    }
    nb.iter().cloned().zip(rho).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tessellation::sphere::build_s2_icosphere;

    #[test]
    fn euclidean_acuteness_examples() {
        let e = MWNorm::euclidean();
        assert!(acuteness_check(&[Vec3::x(), Vec3::y()], &e));
        assert!(!acuteness_check(&[Vec3::x(), Vec3::new(-1.0, 2.0, 0.0)], &e));
        assert!(acuteness_check(&[Vec3::new(3.0, -1.0, 0.0)], &e));
        let g = e.grad(&Vec3::x());
        assert!((g.dot(&Vec3::new(-1.0, 2.0, 0.0)) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn isotropic_fan_is_four_neighbors() {
        let p = ModelParams::new(Variant::Symmetric, 1.0).unwrap();
        let norm = MWNorm::planar(&p, &CostSample::uniform(), &Vec3::x());
        let fan = build_spatial_stencil_2d(&norm, 64.0).unwrap();
        assert_eq!(fan, vec![[1, 0], [0, 1], [-1, 0], [0, -1]]);
    }

    #[test]
    fn anisotropic_fans_are_acute() {
        for variant in [Variant::Symmetric, Variant::Forward] {
            let p = ModelParams::new(variant, 0.1).unwrap();
            for k in 0..60 {
                let t = std::f64::consts::TAU * k as f64 / 60.0;
                let n = Vec3::new(t.cos(), t.sin(), 0.0);
                let norm = MWNorm::planar(&p, &CostSample::uniform(), &n).reversed();
                let fan = build_spatial_stencil_2d(&norm, 64.0).unwrap();
                for j in 0..fan.len() {
                    let (a, b) = (v2(fan[j]), v2(fan[(j + 1) % fan.len()]));
                    assert!(acuteness_check(&[a, b], &norm));
                    assert_eq!(a.cross(&b)[2], 1.0);
                }
            }
        }
    }

    #[test]
    fn forward_fan_is_asymmetric() {
        let p = ModelParams::new(Variant::Forward, 0.1).unwrap();
        let t: f64 = 0.3;
        let n = Vec3::new(t.cos(), t.sin(), 0.0);
        let norm = MWNorm::planar(&p, &CostSample::uniform(), &n).reversed();
        let fan = build_spatial_stencil_2d(&norm, 64.0).unwrap();
        let mirrored = fan.iter().all(|a| fan.contains(&[-a[0], -a[1]]));
        assert!(!mirrored);
    }

    #[test]
    fn cap_is_enforced() {
        let p = ModelParams::new(Variant::Symmetric, 0.01).unwrap();
        let t: f64 = 0.123;
        let n = Vec3::new(t.cos(), t.sin(), 0.0);
        let norm = MWNorm::planar(&p, &CostSample::uniform(), &n);
        assert!(matches!(build_spatial_stencil_2d(&norm, 4.0), Err(Error::Stencil(_))));
    }

    #[test]
    fn product_facets_are_acute() {
        let p = ModelParams::new(Variant::Symmetric, 0.1).unwrap();
        let n = Vec3::new(0.8, 0.6, 0.0);
        let norm = MWNorm::planar(&p, &CostSample::new(1.0, 0.7).unwrap(), &n);
        let st = product_stencil(3, build_spatial_stencil_2d(&norm, 64.0).unwrap(), &[1, -1]);
        assert_eq!(st.facets().len(), 2 * st.fan.len());
        for f in st.physical_facets(0.02, 0.1) {
            assert_eq!(f.len(), 3);
            assert!(acuteness_check(&f, &norm));
        }
    }

    #[test]
    fn edge_weights_reproduce_gradient_norm() {
        let s = build_s2_icosphere(2);
        for k in [0usize, 17, 100] {
            let w = angular_edge_weights(&s, k);
            assert!(w.iter().all(|&(_, r)| r >= 0.0));
            let n = s.vertices[k];
            let e1 = (Vec3::new(0.3, 0.7, -0.2) - n * n.dot(&Vec3::new(0.3, 0.7, -0.2))).normalize();
            let val: f64 = w
                .iter()
                .map(|&(j, r)| r * e1.dot(&sphere_log(&n, &s.vertices[j])).max(0.0).powi(2))
                .sum();
            assert!((val - 1.0).abs() < 0.25, "vertex {k}: {val}");
        }
    }
}
