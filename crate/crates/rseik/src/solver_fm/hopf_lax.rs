//! Semi-Lagrangian update `Λu(p) = min_ξ F(Σξᵢ(qᵢ−p)) + Σξᵢu(qᵢ)`.

use crate::manifold::Vec3;
use crate::tessellation::{MWNorm, TangentNorm};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfLaxResult {
    pub value: f64,
    /// Index of the minimizing facet, if any.
    pub facet: Option<usize>,
    /// Barycentric weights on the facet vertices.
    pub weights: [f64; 3],
}

impl HopfLaxResult {
    pub const INFINITE: HopfLaxResult = HopfLaxResult { value: f64::INFINITY, facet: None, weights: [0.0; 3] };
}

type Gram = [[f64; 3]; 3];

fn gram(m: &nalgebra::Matrix3<f64>, a: &[Vec3], k: usize) -> Gram {
    let mut q = [[0.0; 3]; 3];
    let ma: Vec<Vec3> = a[..k].iter().map(|v| m * v).collect();
    for i in 0..k {
        for j in i..k {
            let v = a[i].dot(&ma[j]);
            q[i][j] = v;
            q[j][i] = v;
        }
    }
    q
}

fn quad(q: &Gram, x: &[f64; 3], k: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..k {
        for j in 0..k {
            s += x[i] * q[i][j] * x[j];
        }
    }
    s
}

/// Minimizer of `√(ξᵀQξ) + ξ·u` over the simplex, by enumerating the
/// stationary points of every face.
fn riemann_simplex(q: &Gram, u: &[f64; 3], k: usize) -> (f64, [f64; 3]) {
    let mut best = (f64::INFINITY, [0.0; 3]);
    let consider = |xi: [f64; 3], best: &mut (f64, [f64; 3])| {
        let v = quad(q, &xi, k).max(0.0).sqrt() + (0..k).map(|i| xi[i] * u[i]).sum::<f64>();
        if v < best.0 {
            *best = (v, xi);
        }
    };
    for i in 0..k {
        let mut xi = [0.0; 3];
        xi[i] = 1.0;
        consider(xi, &mut best);
    }
    for mask in 1u32..(1 << k) {
        let s = mask.count_ones() as usize;
        if s < 2 {
            continue;
        }
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let Some(inv) = invert(q, &idx) else { continue };
        let one_inv = |v: &[f64]| -> Vec<f64> { (0..s).map(|r| (0..s).map(|c| inv[r][c] * v[c]).sum()).collect() };
        let us: Vec<f64> = idx.iter().map(|&i| u[i]).collect();
        let ones = vec![1.0; s];
        let qi1 = one_inv(&ones);
        let qiu = one_inv(&us);
        let a: f64 = qi1.iter().sum();
        let b: f64 = qiu.iter().sum();
        let c: f64 = us.iter().zip(&qiu).map(|(x, y)| x * y).sum();
        if !(a > 0.0) {
            continue;
        }
        let disc = b * b - a * (c - 1.0);
        if disc < 0.0 {
            continue;
        }
        let t = (b + disc.sqrt()) / a;
        let xs: Vec<f64> = (0..s).map(|r| t * qi1[r] - qiu[r]).collect();
        let sum: f64 = xs.iter().sum();
        if !(sum > 0.0) || xs.iter().any(|&x| x < -1e-12 * sum) {
            continue;
        }
        let mut xi = [0.0; 3];
        for (r, &i) in idx.iter().enumerate() {
            xi[i] = xs[r].max(0.0) / sum;
        }
        consider(xi, &mut best);
    }
    best
}

fn invert(q: &Gram, idx: &[usize]) -> Option<[[f64; 3]; 3]> {
    let mut out = [[0.0; 3]; 3];
    match idx.len() {
        2 => {
            let (a, b, d) = (q[idx[0]][idx[0]], q[idx[0]][idx[1]], q[idx[1]][idx[1]]);
            let det = a * d - b * b;
            if !(det > 1e-13 * a * d) {
                return None;
            }
            out[0] = [d / det, -b / det, 0.0];
            out[1] = [-b / det, a / det, 0.0];
            Some(out)
        }
        3 => {
            let m = nalgebra::Matrix3::from_fn(|r, c| q[idx[r]][idx[c]]);
            let scale = m[(0, 0)] * m[(1, 1)] * m[(2, 2)];
            if !(m.determinant() > 1e-12 * scale) {
                return None;
            }
            let inv = m.try_inverse()?;
            for r in 0..3 {
                for c in 0..3 {
                    out[r][c] = inv[(r, c)];
                }
            }
            Some(out)
        }
        _ => None,
    }
}

/// Update over a single simplex with vertex offsets `a` (relative to `p`)
/// and values `u`; `norm` is the arrival norm `v ↦ F(p, −v)`.
///
/// Infinite vertices are dropped. Returns the value and barycentric weights.
pub fn simplex_update(norm: &MWNorm, a: &[Vec3], u: &[f64]) -> (f64, [f64; 3]) {
    let mut aa = [Vec3::zeros(); 3];
    let mut uu = [0.0; 3];
    let mut map = [0usize; 3];
    let mut k = 0;
    for (i, (&ai, &ui)) in a.iter().zip(u).enumerate().take(3) {
        if ui.is_finite() {
            aa[k] = ai;
            uu[k] = ui;
            map[k] = i;
            k += 1;
        }
    }
    if k == 0 {
        return (f64::INFINITY, [0.0; 3]);
    }
    let unmap = |xi: [f64; 3]| {
        let mut out = [0.0; 3];
        for r in 0..k {
            out[map[r]] = xi[r];
        }
        out
    };
    if norm.is_riemannian() {
        let (v, xi) = riemann_simplex(&gram(&norm.m, &aa, k), &uu, k);
        return (v, unmap(xi));
    }
    let objective = |xi: &[f64; 3]| -> f64 {
        let mut e = Vec3::zeros();
        let mut lin = 0.0;
        for r in 0..k {
            e += aa[r] * xi[r];
            lin += uu[r] * xi[r];
        }
        norm.value(&e) + lin
    };
    let mut best = (f64::INFINITY, [0.0; 3]);
    let mut consider = |xi: [f64; 3]| {
        let v = objective(&xi);
        if v < best.0 {
            best = (v, xi);
        }
    };
    // The norm is Riemannian on each side of the hyperplane w·e = 0; the
    // minimizer is either a minimizer of one of the two quadratic pieces or
    // lies on the hyperplane.
    let (_, x1) = riemann_simplex(&gram(&norm.m, &aa, k), &uu, k);
    consider(x1);
    let mw = norm.m + norm.w * norm.w.transpose();
    let (_, x2) = riemann_simplex(&gram(&mw, &aa, k), &uu, k);
    consider(x2);
    let c: Vec<f64> = (0..k).map(|r| norm.w.dot(&aa[r])).collect();
    let mut cuts: Vec<[f64; 3]> = Vec::with_capacity(3);
    for i in 0..k {
        if c[i] == 0.0 {
            let mut xi = [0.0; 3];
            xi[i] = 1.0;
            cuts.push(xi);
        }
        for j in i + 1..k {
            if c[i] * c[j] < 0.0 {
                let mut xi = [0.0; 3];
                xi[i] = c[j] / (c[j] - c[i]);
                xi[j] = -c[i] / (c[j] - c[i]);
                cuts.push(xi);
            }
        }
    }
    for xi in &cuts {
        consider(*xi);
    }
    for i in 0..cuts.len() {
        for j in i + 1..cuts.len() {
            let (pa, pb) = (cuts[i], cuts[j]);
            let ea: Vec3 = (0..k).map(|r| aa[r] * pa[r]).sum();
            let eb: Vec3 = (0..k).map(|r| aa[r] * pb[r]).sum();
            let ua: f64 = (0..k).map(|r| uu[r] * pa[r]).sum();
            let ub: f64 = (0..k).map(|r| uu[r] * pb[r]).sum();
            let (_, s) = riemann_simplex(&gram(&norm.m, &[ea, eb], 2), &[ua, ub, 0.0], 2);
            let mut xi = [0.0; 3];
            for r in 0..k {
                xi[r] = s[0] * pa[r] + s[1] * pb[r];
            }
            consider(xi);
        }
    }
    (best.0, unmap(best.1))
}

/// Minimum of [`simplex_update`] over a list of facets `(offsets, values)`.
pub fn hopf_lax_update(norm: &MWNorm, facets: &[(Vec<Vec3>, Vec<f64>)]) -> HopfLaxResult {
    let mut best = HopfLaxResult::INFINITE;
    for (i, (a, u)) in facets.iter().enumerate() {
        let (v, xi) = simplex_update(norm, a, u);
        if v < best.value {
            best = HopfLaxResult { value: v, facet: Some(i), weights: xi };
        }
    }
    best
}
