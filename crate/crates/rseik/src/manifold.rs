//! Reeds-Shepp metrics on position–orientation space `R^d × S^(d-1)`.
//!
//! States, tangents and cotangents are stored in 3-vectors; for `d = 2` the
//! third component is zero. Orientation derivatives `ndot` are ambient vectors
//! tangent to the sphere at `n`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Default lower bound on cost values.
pub const DEFAULT_DELTA: f64 = 1e-6;

const UNIT_TOL: f64 = 1e-9;

#[inline]
pub(crate) fn pos(s: f64) -> f64 {
    s.max(0.0)
}

#[inline]
pub(crate) fn neg(s: f64) -> f64 {
    (-s).max(0.0)
}

/// A state `p = (x, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointPO {
    pub dim: usize,
    pub x: Vec3,
    pub n: Vec3,
}

impl PointPO {
    /// Builds a state from slices of length `d`; `n` is normalized.
    pub fn new(x: &[f64], n: &[f64]) -> Result<Self> {
        let dim = x.len();
        if !(dim == 2 || dim == 3) || n.len() != dim {
            return domain(format!("state must have d in {{2,3}}, got |x|={}, |n|={}", x.len(), n.len()));
        }
        let mut xv = Vec3::zeros();
        let mut nv = Vec3::zeros();
        for i in 0..dim {
            xv[i] = x[i];
            nv[i] = n[i];
        }
        let norm = nv.norm();
        if !(norm > 1e-300) || !norm.is_finite() || !xv.iter().all(|c| c.is_finite()) {
            return domain("orientation must be a finite nonzero vector");
        }
        Ok(PointPO { dim, x: xv, n: nv / norm })
    }

    /// Planar state at `(x, y)` with orientation angle `theta`.
    pub fn planar(x: f64, y: f64, theta: f64) -> Self {
        PointPO {
            dim: 2,
            x: Vec3::new(x, y, 0.0),
            n: Vec3::new(theta.cos(), theta.sin(), 0.0),
        }
    }

    /// Spatial state; `n` is normalized.
    pub fn spatial(x: Vec3, n: Vec3) -> Result<Self> {
        Self::new(x.as_slice(), n.as_slice())
    }

    /// Orientation angle (planar states).
    pub fn theta(&self) -> f64 {
        self.n[1].atan2(self.n[0])
    }

    pub fn check_unit(&self) -> Result<()> {
        if (self.n.norm() - 1.0).abs() > UNIT_TOL {
            return domain(format!("orientation not unit: |n| = {}", self.n.norm()));
        }
        Ok(())
    }
}

/// Tangent vector `(ẋ, ṅ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tangent {
    pub xdot: Vec3,
    pub ndot: Vec3,
}

impl Tangent {
    /// Attaches a tangent at `p`, projecting `ndot` onto the sphere's tangent plane.
    pub fn at(p: &PointPO, xdot: Vec3, ndot: Vec3) -> Self {
        Tangent { xdot, ndot: ndot - p.n * ndot.dot(&p.n) }
    }

    pub fn scale(&self, s: f64) -> Self {
        Tangent { xdot: self.xdot * s, ndot: self.ndot * s }
    }
}

impl std::ops::Add for Tangent {
    type Output = Tangent;
    fn add(self, o: Tangent) -> Tangent {
        Tangent { xdot: self.xdot + o.xdot, ndot: self.ndot + o.ndot }
    }
}

impl std::ops::Neg for Tangent {
    type Output = Tangent;
    fn neg(self) -> Tangent {
        self.scale(-1.0)
    }
}

/// Cotangent vector `(x̂, n̂)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cotangent {
    pub xhat: Vec3,
    pub nhat: Vec3,
}

impl Cotangent {
    pub fn at(p: &PointPO, xhat: Vec3, nhat: Vec3) -> Self {
        Cotangent { xhat, nhat: nhat - p.n * nhat.dot(&p.n) }
    }

    pub fn pair(&self, v: &Tangent) -> f64 {
        self.xhat.dot(&v.xdot) + self.nhat.dot(&v.ndot)
    }

    pub fn norm(&self) -> f64 {
        (self.xhat.norm_squared() + self.nhat.norm_squared()).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Reversible model (reverse gear allowed).
    Symmetric,
    /// Forward-only model.
    Forward,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(Variant::Symmetric),
            "forward" => Ok(Variant::Forward),
            other => domain(format!("unknown variant `{other}` (expected symmetric|forward)")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Symmetric => "symmetric",
            Variant::Forward => "forward",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub variant: Variant,
    pub epsilon: f64,
    pub allow_exact: bool,
}

impl ModelParams {
    pub fn new(variant: Variant, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return domain(format!("epsilon must lie in (0, 1], got {epsilon}"));
        }
        Ok(ModelParams { variant, epsilon, allow_exact: false })
    }

    /// The sub-Riemannian (`ε = 0`) model; metric evaluation only.
    pub fn exact(variant: Variant) -> Self {
        ModelParams { variant, epsilon: 0.0, allow_exact: true }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = if self.allow_exact {
            (0.0..=1.0).contains(&self.epsilon)
        } else {
            self.epsilon > 0.0 && self.epsilon <= 1.0
        };
        if !ok {
            return domain(format!("invalid epsilon {}", self.epsilon));
        }
        Ok(())
    }
}

/// Spatial and angular cost at a state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSample {
    pub c1: f64,
    pub c2: f64,
}

impl CostSample {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        Self::with_floor(c1, c2, DEFAULT_DELTA)
    }

    pub fn with_floor(c1: f64, c2: f64, delta: f64) -> Result<Self> {
        if !(c1 >= delta && c2 >= delta) || !c1.is_finite() || !c2.is_finite() {
            return domain(format!("costs must be finite and >= {delta}, got c1={c1}, c2={c2}"));
        }
        Ok(CostSample { c1, c2 })
    }

    pub const fn uniform() -> Self {
        CostSample { c1: 1.0, c2: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return domain(format!("costs must be positive, got c1={}, c2={}", self.c1, self.c2));
        }
        Ok(())
    }
}

fn check(params: &ModelParams, cost: &CostSample, p: &PointPO) -> Result<()> {
    params.validate()?;
    cost.validate()?;
    p.check_unit()
}

/// Evaluates `F_0`, `F_0⁺`, `F_ε` or `F_ε⁺` at `(p, v)`.
///
/// With `ε = 0`, returns `+∞` when the velocity violates the constraints.
pub fn finsler_cost(params: &ModelParams, cost: &CostSample, p: &PointPO, v: &Tangent) -> Result<f64> {
    check(params, cost, p)?;
    Ok(finsler_cost_unchecked(params, cost, &p.n, v))
}

pub(crate) fn finsler_cost_unchecked(params: &ModelParams, cost: &CostSample, n: &Vec3, v: &Tangent) -> f64 {
    let a = v.xdot.dot(n);
    let perp2 = v.xdot.cross(n).norm_squared();
    let nd2 = v.ndot.norm_squared();
    let (c1, c2) = (cost.c1, cost.c2);
    let eps = params.epsilon;
    if eps == 0.0 {
        let collinear = perp2.sqrt() <= 1e-9 * v.xdot.norm();
        if !collinear || (params.variant == Variant::Forward && a < 0.0) {
            return f64::INFINITY;
        }
        return (c1 * c1 * a * a + c2 * c2 * nd2).sqrt();
    }
    let ie2 = 1.0 / (eps * eps);
    let spatial = match params.variant {
        Variant::Symmetric => a * a + ie2 * perp2,
        Variant::Forward => pos(a).powi(2) + ie2 * perp2 + ie2 * neg(a).powi(2),
    };
    (c1 * c1 * spatial + c2 * c2 * nd2).sqrt()
}

/// Closed-form dual metric `F*` at `(p, p̂)`.
pub fn dual_cost(params: &ModelParams, cost: &CostSample, p: &PointPO, ph: &Cotangent) -> Result<f64> {
    check(params, cost, p)?;
    Ok(dual_cost_unchecked(params, cost, &p.n, ph))
}

pub(crate) fn dual_cost_unchecked(params: &ModelParams, cost: &CostSample, n: &Vec3, ph: &Cotangent) -> f64 {
    let b = ph.xhat.dot(n);
    let perp2 = ph.xhat.cross(n).norm_squared();
    let nh2 = (ph.nhat - n * ph.nhat.dot(n)).norm_squared();
    let e2 = params.epsilon * params.epsilon;
    let spatial = match params.variant {
        Variant::Symmetric => b * b + e2 * perp2,
        Variant::Forward => pos(b).powi(2) + e2 * neg(b).powi(2) + e2 * perp2,
    };
    (nh2 / (cost.c2 * cost.c2) + spatial / (cost.c1 * cost.c1)).sqrt()
}

/// Dual of the norm `v ↦ √((Mv, v) + (w, v)_-²)`.
pub fn generic_dual_norm(m: &DMatrix<f64>, w: &DVector<f64>, ph: &DVector<f64>) -> Result<f64> {
    let k = m.nrows();
    if m.ncols() != k || w.len() != k || ph.len() != k {
        return domain("dimension mismatch in generic_dual_norm");
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return domain("matrix is not symmetric");
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("matrix is not positive definite".into()))?;
    let minv_w = chol.solve(w);
    let what = &minv_w / (1.0 + w.dot(&minv_w)).sqrt();
    let mw = m + w * w.transpose();
    let mhat_ph = mw
        .cholesky()
        .ok_or_else(|| Error::Domain("matrix is not positive definite".into()))?
        .solve(ph);
    Ok((ph.dot(&mhat_ph) + pos(ph.dot(&what)).powi(2)).max(0.0).sqrt())
}

/// Orthonormal basis of the tangent plane of `S^(d-1)` at `n`.
pub fn tangent_basis(dim: usize, n: &Vec3) -> Vec<Vec3> {
    if dim == 2 {
        return vec![Vec3::new(-n[1], n[0], 0.0)];
    }
    let helper = if n[0].abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (helper - n * helper.dot(n)).normalize();
    let e2 = n.cross(&e1);
    vec![e1, e2]
}

/// The `(M_p, w_p)` pair of the metric in tangent coordinates
/// `(ẋ, ṅ·e_1, …, ṅ·e_{d-1})`, so that `F(v)² = (Mv,v) + (w,v)_-²`.
pub fn assemble_mw(params: &ModelParams, cost: &CostSample, p: &PointPO) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check(params, cost, p)?;
    if params.epsilon == 0.0 {
        return Err(Error::Singular("epsilon = 0 has no finite matrix form".into()));
    }
    let d = p.dim;
    let k = 2 * d - 1;
    let eps = params.epsilon;
    let mut m = DMatrix::zeros(k, k);
    let dinv = dn_matrix(&p.n, d, 1.0 / eps)?;
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = cost.c1 * cost.c1 * dinv[(i, j)];
        }
    }
    for i in d..k {
        m[(i, i)] = cost.c2 * cost.c2;
    }
    let mut w = DVector::zeros(k);
    if params.variant == Variant::Forward {
        let s = cost.c1 * (1.0 / (eps * eps) - 1.0).max(0.0).sqrt();
        for i in 0..d {
            w[i] = s * p.n[i];
        }
    }
    Ok((m, w))
}

/// Tangent coordinates matching [`assemble_mw`].
pub fn tangent_coords(p: &PointPO, v: &Tangent) -> DVector<f64> {
    let basis = tangent_basis(p.dim, &p.n);
    let mut out = DVector::zeros(2 * p.dim - 1);
    for i in 0..p.dim {
        out[i] = v.xdot[i];
    }
    for (j, e) in basis.iter().enumerate() {
        out[p.dim + j] = v.ndot.dot(e);
    }
    out
}

/// Cotangent coordinates matching [`assemble_mw`].
pub fn cotangent_coords(p: &PointPO, ph: &Cotangent) -> DVector<f64> {
    tangent_coords(p, &Tangent { xdot: ph.xhat, ndot: ph.nhat })
}

/// Inverse of [`tangent_coords`].
pub fn tangent_from_coords(p: &PointPO, c: &DVector<f64>) -> Tangent {
    let basis = tangent_basis(p.dim, &p.n);
    let mut xdot = Vec3::zeros();
    for i in 0..p.dim {
        xdot[i] = c[i];
    }
    let mut ndot = Vec3::zeros();
    for (j, e) in basis.iter().enumerate() {
        ndot += e * c[p.dim + j];
    }
    Tangent { xdot, ndot }
}

/// `D_n^ε = n⊗n + ε²(I − n⊗n)` as a `d×d` matrix.
pub fn dn_matrix(n: &Vec3, dim: usize, eps: f64) -> Result<DMatrix<f64>> {
    if (n.norm() - 1.0).abs() > UNIT_TOL {
        return domain(format!("orientation not unit: |n| = {}", n.norm()));
    }
    let e2 = eps * eps;
    Ok(DMatrix::from_fn(dim, dim, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        n[i] * n[j] + e2 * (id - n[i] * n[j])
    }))
}

pub(crate) fn dn_mat3(n: &Vec3, eps: f64) -> Mat3 {
    let nn = n * n.transpose();
    nn + (Mat3::identity() - nn) * (eps * eps)
}

/// `G_{p;ε}(v, v)`: the squared symmetric metric `F_ε(p, v)²`.
pub fn metric_tensor_apply(cost: &CostSample, p: &PointPO, eps: f64, v: &Tangent) -> Result<f64> {
    let params = ModelParams { variant: Variant::Symmetric, epsilon: eps, allow_exact: true };
    let f = finsler_cost(&params, cost, p, v)?;
    Ok(f * f)
}

/// Which metric tensor to invert during backtracking.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorKind {
    /// The anisotropic tensor `G`.
    G,
    /// The spatially isotropic tensor `G̃` used where `⟨dU, n⟩ < 0`.
    Gtilde,
}

/// Returns the tangent `g` with `G(g, ·) = ⟨p̂, ·⟩`.
pub fn inverse_metric_apply(
    cost: &CostSample,
    p: &PointPO,
    eps: f64,
    which: TensorKind,
    ph: &Cotangent,
) -> Result<Tangent> {
    cost.validate()?;
    p.check_unit()?;
    if !(eps > 0.0) {
        return Err(Error::Singular("metric tensor is not invertible for epsilon = 0".into()));
    }
    Ok(inverse_metric_unchecked(cost, &p.n, eps, which, ph))
}

pub(crate) fn inverse_metric_unchecked(cost: &CostSample, n: &Vec3, eps: f64, which: TensorKind, ph: &Cotangent) -> Tangent {
    let ic1 = 1.0 / (cost.c1 * cost.c1);
    let ic2 = 1.0 / (cost.c2 * cost.c2);
    let xdot = match which {
        TensorKind::G => {
            let b = ph.xhat.dot(n);
            (n * b + (ph.xhat - n * b) * (eps * eps)) * ic1
        }
        TensorKind::Gtilde => ph.xhat * (eps * eps * ic1),
    };
    let nh = ph.nhat - n * ph.nhat.dot(n);
    Tangent { xdot, ndot: nh * ic2 }
}

/// Samples the boundary of the control set `{v : F(p, v) ≤ 1}`.
pub fn control_set_boundary(params: &ModelParams, cost: &CostSample, p: &PointPO, samples: usize) -> Result<Vec<Tangent>> {
    check(params, cost, p)?;
    let basis = tangent_basis(p.dim, &p.n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out = Vec::with_capacity(samples);
    let exact = params.epsilon == 0.0;
    let mut attempts = 0usize;
    while out.len() < samples && attempts < 100 * samples.max(1) {
        attempts += 1;
        let mut g = || -> f64 {
            // Box-Muller keeps the direction distribution isotropic.
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        };
        let v = if exact {
            let mut s = g();
            if params.variant == Variant::Forward {
                s = s.abs();
            }
            let mut ndot = Vec3::zeros();
            for e in &basis {
                ndot += e * g();
            }
            Tangent { xdot: p.n * s, ndot }
        } else {
            let mut xdot = Vec3::zeros();
            for i in 0..p.dim {
                xdot[i] = g();
            }
            let mut ndot = Vec3::zeros();
            for e in &basis {
                ndot += e * g();
            }
            Tangent { xdot, ndot }
        };
        let f = finsler_cost_unchecked(params, cost, &p.n, &v);
        if f.is_finite() && f > 0.0 {
            out.push(v.scale(1.0 / f));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(eps: f64) -> ModelParams {
        ModelParams::new(Variant::Symmetric, eps).unwrap()
    }

    fn fwd(eps: f64) -> ModelParams {
        ModelParams::new(Variant::Forward, eps).unwrap()
    }

    #[test]
    fn exact_metric_values() {
        let p = PointPO::planar(0.0, 0.0, 0.3);
        let c = CostSample::uniform();
        let v = Tangent::at(&p, p.n, Vec3::zeros());
        assert!((finsler_cost(&ModelParams::exact(Variant::Symmetric), &c, &p, &v).unwrap() - 1.0).abs() < 1e-15);
        let perp = Tangent::at(&p, Vec3::new(-p.n[1], p.n[0], 0.0), Vec3::zeros());
        assert!(finsler_cost(&ModelParams::exact(Variant::Symmetric), &c, &p, &perp).unwrap().is_infinite());
        assert!(finsler_cost(&ModelParams::exact(Variant::Forward), &c, &p, &(-v)).unwrap().is_infinite());
    }

    #[test]
    fn relaxed_metric_values() {
        let p = PointPO::planar(0.0, 0.0, 1.1);
        let c = CostSample::uniform();
        let back = Tangent::at(&p, -p.n, Vec3::zeros());
        assert!((finsler_cost(&fwd(0.1), &c, &p, &back).unwrap() - 10.0).abs() < 1e-12);
        let perp = Tangent::at(&p, Vec3::new(-p.n[1], p.n[0], 0.0), Vec3::zeros());
        assert!((finsler_cost(&sym(0.1), &c, &p, &perp).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn dual_values() {
        let p = PointPO::planar(0.0, 0.0, -0.4);
        let c = CostSample::uniform();
        let along = Cotangent::at(&p, p.n, Vec3::zeros());
        assert!((dual_cost(&sym(0.1), &c, &p, &along).unwrap() - 1.0).abs() < 1e-12);
        let perp = Cotangent::at(&p, Vec3::new(-p.n[1], p.n[0], 0.0), Vec3::zeros());
        assert!((dual_cost(&sym(0.1), &c, &p, &perp).unwrap() - 0.1).abs() < 1e-12);
        let back = Cotangent::at(&p, -p.n, Vec3::zeros());
        assert!((dual_cost(&fwd(0.1), &c, &p, &back).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn bad_inputs_rejected() {
        let mut p = PointPO::planar(0.0, 0.0, 0.0);
        p.n *= 2.0;
        let v = Tangent { xdot: Vec3::x(), ndot: Vec3::zeros() };
        assert!(matches!(finsler_cost(&sym(0.5), &CostSample::uniform(), &p, &v), Err(Error::Domain(_))));
        let p = PointPO::planar(0.0, 0.0, 0.0);
        let neg_cost = CostSample { c1: -1.0, c2: 1.0 };
        assert!(matches!(finsler_cost(&sym(0.5), &neg_cost, &p, &v), Err(Error::Domain(_))));
        assert!(CostSample::new(0.0, 1.0).is_err());
        assert!(ModelParams::new(Variant::Symmetric, 0.0).is_err());
        assert!(ModelParams::new(Variant::Symmetric, 1.5).is_err());
    }

    #[test]
    fn generic_dual_examples() {
        let m = DMatrix::<f64>::identity(3, 3);
        let w = DVector::zeros(3);
        let ph = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        assert!((generic_dual_norm(&m, &w, &ph).unwrap() - 1.0).abs() < 1e-14);
        for &(w1, t) in &[(2.0, 1.5), (2.0, -1.5), (-0.7, 0.3), (0.0, -2.0)] {
            let got = generic_dual_norm(&DMatrix::from_element(1, 1, 1.0), &DVector::from_element(1, w1), &DVector::from_element(1, t)).unwrap();
            let want = ((t * t + pos(w1 * t).powi(2)) / (1.0 + w1 * w1)).sqrt();
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        let not_spd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(generic_dual_norm(&not_spd, &DVector::zeros(2), &DVector::zeros(2)).is_err());
    }

    #[test]
    fn tensor_examples() {
        let p = PointPO::planar(0.0, 0.0, 0.9);
        let v = Tangent::at(&p, p.n, Vec3::zeros());
        assert!((metric_tensor_apply(&CostSample::uniform(), &p, 0.5, &v).unwrap() - 1.0).abs() < 1e-14);
        let ph = Cotangent::at(&p, p.n, Vec3::zeros());
        let c = CostSample::new(2.0, 1.0).unwrap();
        let g = inverse_metric_apply(&c, &p, 0.3, TensorKind::G, &ph).unwrap();
        assert!((g.xdot - p.n / 4.0).norm() < 1e-15);
        let xh = Vec3::new(0.3, -1.2, 0.0);
        let gt = inverse_metric_apply(&c, &p, 0.3, TensorKind::Gtilde, &Cotangent::at(&p, xh, Vec3::zeros())).unwrap();
        assert!((gt.xdot - xh * (0.09 / 4.0)).norm() < 1e-15);
        assert!(matches!(inverse_metric_apply(&c, &p, 0.0, TensorKind::G, &ph), Err(Error::Singular(_))));
    }

    #[test]
    fn dn_examples() {
        let d = dn_matrix(&Vec3::z(), 3, 0.2).unwrap();
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![0.04, 0.04, 1.0]));
        assert!((d - want).amax() < 1e-15);
        let n = Vec3::new(0.48, -0.6, 0.64);
        assert!((dn_matrix(&n, 3, 1.0).unwrap() - DMatrix::identity(3, 3)).amax() < 1e-15);
        let d = dn_matrix(&n, 3, 0.37).unwrap();
        let nv = DVector::from_column_slice(n.as_slice());
        assert!((&d * &nv - &nv).amax() < 1e-15);
    }

    #[test]
    fn control_set_examples() {
        let p = PointPO::planar(0.0, 0.0, 0.0);
        let c = CostSample::uniform();
        for v in control_set_boundary(&sym(1.0), &c, &p, 200).unwrap() {
            let e = (v.xdot.norm_squared() + v.ndot.norm_squared()).sqrt();
            assert!((e - 1.0).abs() < 1e-12);
        }
        let pts = control_set_boundary(&fwd(0.1), &c, &p, 500).unwrap();
        assert_eq!(pts.len(), 500);
        for v in &pts {
            assert!((finsler_cost(&fwd(0.1), &c, &p, v).unwrap() - 1.0).abs() < 1e-9);
        }
        let f = |t: Tangent| finsler_cost(&fwd(0.1), &c, &p, &t).unwrap();
        assert!((f(Tangent::at(&p, p.n, Vec3::zeros())) - 1.0).abs() < 1e-15);
        assert!((f(Tangent::at(&p, -p.n * 0.1, Vec3::zeros())) - 1.0).abs() < 1e-12);
        let exact = control_set_boundary(&ModelParams::exact(Variant::Forward), &c, &p, 50).unwrap();
        assert!(exact.iter().all(|v| v.xdot.dot(&p.n) >= 0.0));
    }
}
