//! Selling's decomposition of symmetric positive definite matrices.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::manifold::{dn_mat3, Mat3, Vec3};

const MAX_ITER: usize = 1000;

/// A weight and integer offset; `w[2] == 0` in the planar case.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SellingPair {
    pub rho: f64,
    pub w: [i64; 3],
}

impl SellingPair {
    pub fn offset(&self) -> Vec3 {
        Vec3::new(self.w[0] as f64, self.w[1] as f64, self.w[2] as f64)
    }

    pub fn norm(&self) -> f64 {
        self.offset().norm()
    }
}

/// Oriented decomposition of `D_n^ε` for one orientation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetScheme {
    pub orientation: usize,
    pub pairs: Vec<SellingPair>,
}

impl OffsetScheme {
    /// `r(ε)`: largest offset carrying a nonzero weight.
    pub fn radius(&self) -> f64 {
        self.pairs.iter().filter(|p| p.rho > 0.0).map(|p| p.norm()).fold(0.0, f64::max)
    }
}

fn check_spd(eigs: &[f64], what: &str) -> Result<()> {
    let lo = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eigs.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) || !hi.is_finite() {
        return domain(format!("{what} is not positive definite (eigenvalues {eigs:?})"));
    }
    if hi / lo > 1e9 {
        return domain(format!("{what} condition number {:.3e} exceeds 1e9", hi / lo));
    }
    Ok(())
}

fn as_f(b: &[i64; 3]) -> Vec3 {
    Vec3::new(b[0] as f64, b[1] as f64, b[2] as f64)
}

fn cross_i(a: &[i64; 3], b: &[i64; 3]) -> [i64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Six `(ρ, w)` pairs with `Σ ρ (w·v)² = v·Dv`.
pub fn selling_decompose(d: &Mat3) -> Result<[SellingPair; 6]> {
    if (d - d.transpose()).amax() > 1e-12 * d.amax() {
        return domain("matrix is not symmetric");
    }
    check_spd(d.symmetric_eigenvalues().as_slice(), "matrix")?;
    let tol = 1e-14 * d.trace();
    let mut b: [[i64; 3]; 4] = [[-1, -1, -1], [1, 0, 0], [0, 1, 0], [0, 0, 1]];
    let dot = |b: &[[i64; 3]; 4], i: usize, j: usize| as_f(&b[i]).dot(&(d * as_f(&b[j])));
    let mut iter = 0;
    loop {
        let mut worst = None;
        let mut wv = tol;
        for i in 0..4 {
            for j in i + 1..4 {
                let s = dot(&b, i, j);
                if s > wv {
                    wv = s;
                    worst = Some((i, j));
                }
            }
        }
        let Some((i, j)) = worst else { break };
        iter += 1;
        if iter > MAX_ITER {
            return Err(Error::Algorithm(format!("superbase reduction did not converge for D = {d:?}")));
        }
        let others: Vec<usize> = (0..4).filter(|&k| k != i && k != j).collect();
        for &k in &others {
            for a in 0..3 {
                b[k][a] += b[i][a];
            }
        }
        for a in 0..3 {
            b[i][a] = -b[i][a];
        }
    }
    let mut out = [SellingPair { rho: 0.0, w: [0; 3] }; 6];
    let mut c = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            let o: Vec<usize> = (0..4).filter(|&k| k != i && k != j).collect();
            out[c] = SellingPair { rho: (-dot(&b, i, j)).max(0.0), w: cross_i(&b[o[0]], &b[o[1]]) };
            c += 1;
        }
    }
    Ok(out)
}

/// Planar analogue: three `(ρ, w)` pairs.
pub fn selling_decompose_2d(d: &Matrix2<f64>) -> Result<[SellingPair; 3]> {
    if (d - d.transpose()).amax() > 1e-12 * d.amax() {
        return domain("matrix is not symmetric");
    }
    check_spd(d.symmetric_eigenvalues().as_slice(), "matrix")?;
    let tol = 1e-14 * d.trace();
    let mut b: [[i64; 2]; 3] = [[-1, -1], [1, 0], [0, 1]];
    let f = |v: &[i64; 2]| Vector2::new(v[0] as f64, v[1] as f64);
    let dot = |b: &[[i64; 2]; 3], i: usize, j: usize| f(&b[i]).dot(&(d * f(&b[j])));
    let mut iter = 0;
    loop {
        let mut worst = None;
        let mut wv = tol;
        for i in 0..3 {
            for j in i + 1..3 {
                let s = dot(&b, i, j);
                if s > wv {
                    wv = s;
                    worst = Some((i, j));
                }
            }
        }
        let Some((i, j)) = worst else { break };
        iter += 1;
        if iter > MAX_ITER {
            return Err(Error::Algorithm(format!("superbase reduction did not converge for D = {d:?}")));
        }
        let k = 3 - i - j;
        b[k] = [b[i][0] - b[j][0], b[i][1] - b[j][1]];
        b[i] = [-b[i][0], -b[i][1]];
    }
    let mut out = [SellingPair { rho: 0.0, w: [0; 3] }; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        out[i] = SellingPair { rho: (-dot(&b, j, k)).max(0.0), w: [-b[i][1], b[i][0], 0] };
    }
    Ok(out)
}

/// Flips offsets so that `n·w ≥ 0`.
pub fn orient_offsets(n: &Vec3, pairs: &[SellingPair]) -> Vec<SellingPair> {
    pairs
        .iter()
        .map(|p| {
            if p.offset().dot(n) < 0.0 {
                SellingPair { rho: p.rho, w: [-p.w[0], -p.w[1], -p.w[2]] }
            } else {
                *p
            }
        })
        .collect()
}

/// Oriented decomposition of `D_n^ε` in dimension `dim`.
pub fn offset_scheme(n: &Vec3, dim: usize, eps: f64, orientation: usize) -> Result<OffsetScheme> {
    let d3 = dn_mat3(n, eps);
    let pairs: Vec<SellingPair> = if dim == 2 {
        let d2 = d3.fixed_view::<2, 2>(0, 0).into_owned();
        selling_decompose_2d(&d2)?.to_vec()
    } else {
        selling_decompose(&d3)?.to_vec()
    };
    Ok(OffsetScheme { orientation, pairs: orient_offsets(n, &pairs) })
}
