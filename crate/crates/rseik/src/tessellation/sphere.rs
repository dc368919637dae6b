use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::manifold::{Mat3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphereKind {
    /// `N` equispaced angles on the circle.
    S1Uniform {
        #[serde(rename = "k_or_N")]
        n: usize,
    },
    /// Subdivided icosahedron at refinement level `k`.
    S2Icosphere {
        #[serde(rename = "k_or_N")]
        k: usize,
    },
}

/// Discretized orientation sphere.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub kind: SphereKind,
    pub vertices: Vec<Vec3>,
    /// Empty for the circle.
    pub triangles: Vec<[usize; 3]>,
    pub neighbors: Vec<Vec<usize>>,
    vertex_triangles: Vec<Vec<usize>>,
}

/// Interpolation stencil: up to three vertices with convex weights.
#[derive(Clone, Copy, Debug)]
pub struct SphereWeights {
    pub idx: [usize; 3],
    pub w: [f64; 3],
    pub len: usize,
}

impl SphereWeights {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(|i| (self.idx[i], self.w[i]))
    }
}

pub fn build_s1(n: usize) -> Result<SphereGrid> {
    if n < 4 {
        return domain(format!("circle discretization needs at least 4 points, got {n}"));
    }
    let vertices = (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            Vec3::new(t.cos(), t.sin(), 0.0)
        })
        .collect();
    let neighbors = (0..n).map(|k| vec![(k + n - 1) % n, (k + 1) % n]).collect();
    Ok(SphereGrid {
        kind: SphereKind::S1Uniform { n },
        vertices,
        triangles: Vec::new(),
        neighbors,
        vertex_triangles: Vec::new(),
    })
}

const ICO_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

pub fn build_s2_icosphere(k: usize) -> SphereGrid {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let mut vertices: Vec<Vec3> = raw.iter().map(|&(a, b, c)| Vec3::new(a, b, c).normalize()).collect();
    let mut faces: Vec<[usize; 3]> = ICO_FACES.to_vec();
    for _ in 0..k {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push((verts[a] + verts[b]).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let nv = vertices.len();
    let mut neighbors = vec![Vec::new(); nv];
    let mut vertex_triangles = vec![Vec::new(); nv];
    for (t, f) in faces.iter().enumerate() {
        for i in 0..3 {
            let (a, b) = (f[i], f[(i + 1) % 3]);
            if !neighbors[a].contains(&b) {
                neighbors[a].push(b);
            }
            if !neighbors[b].contains(&a) {
                neighbors[b].push(a);
            }
            vertex_triangles[f[i]].push(t);
        }
    }
    for nb in &mut neighbors {
        nb.sort_unstable();
    }
    SphereGrid { kind: SphereKind::S2Icosphere { k }, vertices, triangles: faces, neighbors, vertex_triangles }
}

impl SphereGrid {
    pub fn from_kind(kind: SphereKind) -> Result<Self> {
        match kind {
            SphereKind::S1Uniform { n } => build_s1(n),
            SphereKind::S2Icosphere { k } => {
                if k > 6 {
                    return domain(format!("icosphere level {k} too large"));
                }
                Ok(build_s2_icosphere(k))
            }
        }
    }

    /// Ambient dimension `d` of `S^(d-1)`.
    pub fn dim(&self) -> usize {
        match self.kind {
            SphereKind::S1Uniform { .. } => 2,
            SphereKind::S2Icosphere { .. } => 3,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Typical geodesic spacing between adjacent vertices.
    pub fn spacing(&self) -> f64 {
        match self.kind {
            SphereKind::S1Uniform { n } => TAU / n as f64,
            SphereKind::S2Icosphere { .. } => {
                let (mut s, mut c) = (0.0, 0usize);
                for (a, nb) in self.neighbors.iter().enumerate() {
                    for &b in nb {
                        s += angle(&self.vertices[a], &self.vertices[b]);
                        c += 1;
                    }
                }
                s / c as f64
            }
        }
    }

    pub fn nearest(&self, n: &Vec3) -> usize {
        match self.kind {
            SphereKind::S1Uniform { n: count } => {
                let t = n[1].atan2(n[0]).rem_euclid(TAU);
                ((t / TAU * count as f64).round() as usize) % count
            }
            SphereKind::S2Icosphere { .. } => {
                let mut best = 0;
                let mut bd = f64::NEG_INFINITY;
                for (i, v) in self.vertices.iter().enumerate() {
                    let d = v.dot(n);
                    if d > bd {
                        bd = d;
                        best = i;
                    }
                }
                best
            }
        }
    }

    /// Convex interpolation weights at an arbitrary orientation.
    pub fn weights(&self, n: &Vec3) -> SphereWeights {
        match self.kind {
            SphereKind::S1Uniform { n: count } => {
                let t = n[1].atan2(n[0]).rem_euclid(TAU) / TAU * count as f64;
                let k0 = t.floor();
                let f = t - k0;
                let k0 = (k0 as usize) % count;
                SphereWeights { idx: [k0, (k0 + 1) % count, 0], w: [1.0 - f, f, 0.0], len: 2 }
            }
            SphereKind::S2Icosphere { .. } => {
                let v = self.nearest(n);
                if let Some(w) = self.vertex_triangles[v].iter().find_map(|&t| self.barycentric(t, n)) {
                    return w;
                }
                (0..self.triangles.len())
                    .find_map(|t| self.barycentric(t, n))
                    .unwrap_or(SphereWeights { idx: [v, 0, 0], w: [1.0, 0.0, 0.0], len: 1 })
            }
        }
    }

    fn barycentric(&self, t: usize, n: &Vec3) -> Option<SphereWeights> {
        let f = self.triangles[t];
        let m = Mat3::from_columns(&[self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]);
        let l = m.try_inverse()? * n;
        if l.iter().all(|&c| c >= -1e-12) {
            let s = l.sum();
            let l = l.map(|c| c.max(0.0)) / s;
            Some(SphereWeights { idx: f, w: [l[0], l[1], l[2]], len: 3 })
        } else {
            None
        }
    }

    /// Interior angles of every triangle.
    pub fn triangle_angles(&self) -> Vec<[f64; 3]> {
        self.triangles
            .iter()
            .map(|f| {
                let mut out = [0.0; 3];
                for i in 0..3 {
                    let a = self.vertices[f[i]];
                    let b = self.vertices[f[(i + 1) % 3]];
                    let c = self.vertices[f[(i + 2) % 3]];
                    out[i] = (b - a).angle(&(c - a));
                }
                out
            })
            .collect()
    }
}

pub fn angle(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Exponential map of the unit sphere at `n`.
pub fn sphere_exp(n: &Vec3, t: &Vec3) -> Vec3 {
    let a = t.norm();
    if a < 1e-300 {
        return *n;
    }
    (n * a.cos() + t * (a.sin() / a)).normalize()
}

/// Logarithm map: tangent vector at `n` pointing to `m` with length equal to the arc.
pub fn sphere_log(n: &Vec3, m: &Vec3) -> Vec3 {
    let p = m - n * n.dot(m);
    let s = p.norm();
    if s < 1e-300 {
        return Vec3::zeros();
    }
    p * (angle(n, m) / s)
}
