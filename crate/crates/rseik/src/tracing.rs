//! Geodesic backtracking on a solved distance map, mode classification and
//! detection of cusps and in-place rotations.

use serde::{Deserialize, Serialize};

use crate::cost::CostField;
use crate::error::{domain, Error, Result};
use crate::manifold::{
    finsler_cost_unchecked, inverse_metric_unchecked, tangent_basis, Cotangent, ModelParams, PointPO, Tangent,
    TensorKind, Variant, Vec3,
};
use crate::solver_fm::{DistanceMap, Hamiltonian};
use crate::tessellation::{sphere_exp, sphere_log};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `⟨dU, n⟩ > 0`.
    Plus,
    /// `⟨dU, n⟩ < 0`.
    Minus,
    /// Within the band around the transition surface.
    Boundary,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Plus => "plus",
            Mode::Minus => "minus",
            Mode::Boundary => "boundary",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub p: PointPO,
    pub mode: Mode,
    pub u: f64,
}

/// A minimizing path, sampled from the end state (`t = 0`) to the seed
/// (`t = 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub samples: Vec<PathSample>,
    pub length: f64,
    pub source: PointPO,
    pub end: PointPO,
}

impl GeodesicPath {
    pub fn points(&self) -> Vec<PointPO> {
        self.samples.iter().map(|s| s.p).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Step size in metric units.
    pub step: f64,
    /// Stop once `U` drops below this value; defaults to twice the step.
    pub stop_value: Option<f64>,
    /// Also stop within this spatial distance of a seed (default `2h`) when
    /// the orientation is within two sphere spacings of the seed's.
    pub seed_radius: Option<f64>,
    /// Gaussian smoothing scale for the spatial gradient, in grid units.
    pub smoothing: f64,
    /// Relative half-width of the transition band.
    pub mode_band: f64,
    /// Step budget as a multiple of `U(end)/step`.
    pub budget_factor: f64,
    pub descent: Descent,
}

/// How the descent direction is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Descent {
    /// `Gradient` in 2D, `SchemeFlow` in 3D.
    #[default]
    Auto,
    /// Metric gradient of the interpolated map, with a decrease line search.
    Gradient,
    /// Interpolated upwind flow of the discretization; robust where the
    /// interpolant of a strongly anisotropic map is not monotone.
    SchemeFlow,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig { step: 0.04, stop_value: None, seed_radius: None, smoothing: 0.0, mode_band: 1e-3, budget_factor: 50.0, descent: Descent::Auto }
    }
}

fn value(map: &DistanceMap, x: &Vec3, n: &Vec3) -> Option<f64> {
    let p = PointPO { dim: map.grid.dim(), x: *x, n: *n };
    map.interpolate(&p).ok().filter(|v| v.is_finite())
}

fn deriv(fp: Option<f64>, f0: f64, fm: Option<f64>, step: f64) -> f64 {
    match (fp, fm) {
        (Some(a), Some(b)) => (a - b) / (2.0 * step),
        (Some(a), None) => (a - f0) / step,
        (None, Some(b)) => (f0 - b) / step,
        (None, None) => 0.0,
    }
}

/// `dU(p)`: central differences of the interpolated map, with the spatial
/// part averaged over a Gaussian window of `smoothing` grid units.
pub fn grid_gradient(map: &DistanceMap, p: &PointPO, smoothing: f64) -> Result<Cotangent> {
    let g = &map.grid;
    let d = g.dim();
    if p.dim != d || !g.spatial.contains(&p.x) {
        return domain("gradient requested outside the grid");
    }
    let Some(f0) = value(map, &p.x, &p.n) else {
        return domain("distance map is infinite at the requested state");
    };
    let h = g.spatial.h;
    let axis = |a: usize| {
        let mut e = Vec3::zeros();
        e[a] = h;
        e
    };
    let spatial_at = |x: &Vec3| -> Option<Vec3> {
        let c = value(map, x, &p.n)?;
        let mut gr = Vec3::zeros();
        for a in 0..d {
            let e = axis(a);
            gr[a] = deriv(value(map, &(x + e), &p.n), c, value(map, &(x - e), &p.n), h);
        }
        Some(gr)
    };
    let mut xhat = Vec3::zeros();
    if smoothing > 0.0 {
        let r = (2.0 * smoothing).ceil() as i64;
        let mut wsum = 0.0;
        let zr = if d == 3 { r } else { 0 };
        for dz in -zr..=zr {
            for dy in -r..=r {
                for dx in -r..=r {
                    let o = Vec3::new(dx as f64, dy as f64, dz as f64);
                    let w = (-o.norm_squared() / (2.0 * smoothing * smoothing)).exp();
                    if let Some(gr) = spatial_at(&(p.x + o * h)) {
                        xhat += gr * w;
                        wsum += w;
                    }
                }
            }
        }
        if wsum > 0.0 {
            xhat /= wsum;
        }
    } else {
        xhat = spatial_at(&p.x).unwrap_or_else(Vec3::zeros);
    }
    let delta = g.sphere.spacing();
    let mut nhat = Vec3::zeros();
    for t in tangent_basis(d, &p.n) {
        let np = sphere_exp(&p.n, &(t * delta));
        let nm = sphere_exp(&p.n, &(t * -delta));
        nhat += t * deriv(value(map, &p.x, &np), f0, value(map, &p.x, &nm), delta);
    }
    Ok(Cotangent { xhat, nhat })
}

/// Mode of a covector at `p`.
pub fn classify_mode(p: &PointPO, du: &Cotangent, band: f64) -> Mode {
    let b = du.xhat.dot(&p.n);
    if b.abs() < band * du.norm() {
        Mode::Boundary
    } else if b > 0.0 {
        Mode::Plus
    } else {
        Mode::Minus
    }
}

fn trace_error(msg: String, samples: &[PathSample]) -> Error {
    Error::Backtrack { msg, partial: samples.iter().map(|s| s.p).collect() }
}

fn renormalize(dim: usize, n: Vec3) -> Vec3 {
    let mut n = n;
    if dim == 2 {
        n[2] = 0.0;
    }
    n.normalize()
}

/// Integrates `ṗ = −v/F(v)` with `v = G⁻¹dU` (or `G̃⁻¹dU` in minus mode of
/// the forward variant) from `end` down to the seed. With
/// [`Descent::SchemeFlow`], `−v` is replaced by the interpolated upwind flow
/// of the solver's discretization.
pub fn backtrack(map: &DistanceMap, cost: &CostField, end: &PointPO, cfg: &TraceConfig) -> Result<GeodesicPath> {
    let g = &map.grid;
    let params = map.params();
    let dim = g.dim();
    if !(cfg.step > 0.0) {
        return domain("step must be positive");
    }
    end.check_unit()?;
    if end.dim != dim || !g.spatial.contains(&end.x) {
        return domain("end state outside the grid");
    }
    let Some(u_end) = value(map, &end.x, &end.n) else {
        return domain("distance map is infinite at the end state");
    };
    let stop = cfg.stop_value.unwrap_or(2.0 * cfg.step);
    let seed_of = |p: &PointPO| -> PointPO {
        map.meta
            .seeds
            .iter()
            .min_by(|a, b| {
                let da = (a.x - p.x).norm_squared() + (a.n - p.n).norm_squared();
                let db = (b.x - p.x).norm_squared() + (b.n - p.n).norm_squared();
                da.total_cmp(&db)
            })
            .cloned()
            .unwrap_or(*p)
    };
    let end_node = g.snap(end)?;
    let mut samples = vec![PathSample { t: 0.0, p: *end, mode: Mode::Boundary, u: u_end }];
    if map.values[end_node] == 0.0 && u_end <= stop {
        let source = seed_of(end);
        return Ok(GeodesicPath { samples, length: 0.0, source, end: *end });
    }
    let budget = ((cfg.budget_factor * u_end / cfg.step).ceil() as usize).max(100);
    let mut p = *end;
    let mut u = u_end;
    let mut first = true;
    let radius = cfg.seed_radius.unwrap_or(2.0 * g.spatial.h);
    let near_seed = |p: &PointPO| {
        let s = seed_of(p);
        (s.x - p.x).norm() <= radius && crate::tessellation::angle(&s.n, &p.n) <= 2.0 * g.sphere.spacing()
    };
    let flow = match cfg.descent {
        Descent::SchemeFlow => true,
        Descent::Gradient => false,
        Descent::Auto => dim == 3,
    };
    let ham = if flow { Some(Hamiltonian::new(g, cost, &params)?) } else { None };
    let mut weights = Vec::new();
    while u > stop && !near_seed(&p) {
        if samples.len() > budget {
            return Err(trace_error(format!("step budget {budget} exceeded at U = {u:.4}"), &samples));
        }
        if let Some(ham) = &ham {
            g.interp_weights(&p, &mut weights).map_err(|e| trace_error(e.to_string(), &samples))?;
            let mut v = Tangent { xdot: Vec3::zeros(), ndot: Vec3::zeros() };
            for &(i, w) in &weights {
                let f = ham.flow(i, &map.values);
                v.xdot += f.xdot * w;
                v.ndot += f.ndot * w;
            }
            v.ndot -= p.n * v.ndot.dot(&p.n);
            let b = -v.xdot.dot(&p.n);
            let mode = if b.abs() < cfg.mode_band * v.xdot.norm().max(v.ndot.norm()) {
                Mode::Boundary
            } else if b > 0.0 {
                Mode::Plus
            } else {
                Mode::Minus
            };
            if first {
                samples[0].mode = mode;
                first = false;
            }
            let c = cost.sample_at(g, &p)?;
            let back = Tangent { xdot: -v.xdot, ndot: -v.ndot };
            let f = finsler_cost_unchecked(&params, &c, &p.n, &back);
            let next = if f > 1e-14 && f.is_finite() {
                let x = p.x + v.xdot * (cfg.step / f);
                let n = renormalize(dim, sphere_exp(&p.n, &(v.ndot * (cfg.step / f))));
                value(map, &x, &n).map(|un| (PointPO { dim, x, n }, un))
            } else {
                None
            };
            let next = match next.or_else(|| probe_descent(map, &params, &c, &p, u, cfg.step)) {
                Some(q) => q,
                None => return Err(trace_error(format!("flow vanishes at U = {u:.4}"), &samples)),
            };
            p = next.0;
            u = next.1;
            samples.push(PathSample { t: 0.0, p, mode, u });
            continue;
        }
        let du = grid_gradient(map, &p, cfg.smoothing).map_err(|e| trace_error(e.to_string(), &samples))?;
        let mode = classify_mode(&p, &du, cfg.mode_band);
        if first {
            samples[0].mode = mode;
            first = false;
        }
        let c = cost.sample_at(g, &p)?;
        let kind = if params.variant == Variant::Forward && mode == Mode::Minus {
            TensorKind::Gtilde
        } else {
            TensorKind::G
        };
        let v = inverse_metric_unchecked(&c, &p.n, params.epsilon, kind, &du);
        let f = finsler_cost_unchecked(&params, &c, &p.n, &v);
        if !(f > 1e-14) || !f.is_finite() {
            return Err(trace_error(format!("gradient vanishes at U = {u:.4}"), &samples));
        }
        let mut s = cfg.step;
        let next = loop {
            let x = p.x - v.xdot * (s / f);
            let n = renormalize(dim, p.n - v.ndot * (s / f));
            if let Some(un) = value(map, &x, &n) {
                if un < u - 1e-12 {
                    break (PointPO { dim, x, n }, un);
                }
            }
            s *= 0.5;
            if s < cfg.step * 1e-6 {
                // On a ridge of U (e.g. a cut locus) the interpolated
                // gradient can point nowhere useful: probe coordinate moves.
                match probe_descent(map, &params, &c, &p, u, cfg.step) {
                    Some(q) => break q,
                    None => return Err(trace_error(format!("stationary point at U = {u:.4}"), &samples)),
                }
            }
        };
        // A poor decrease flags a kink of U (e.g. a Maxwell set, where the
        // interpolated gradient averages two descent directions).
        let next = if u - next.1 < 0.5 * cfg.step {
            match probe_descent(map, &params, &c, &p, u, cfg.step) {
                Some(q) if q.1 < next.1 => q,
                _ => next,
            }
        } else {
            next
        };
        p = next.0;
        u = next.1;
        samples.push(PathSample { t: 0.0, p, mode, u });
    }
    let source = seed_of(&p);
    samples.push(PathSample { t: 1.0, p: source, mode: samples.last().unwrap().mode, u: 0.0 });
    // Parametrize by accumulated metric length from the end.
    let mut acc = vec![0.0; samples.len()];
    for i in 1..samples.len() {
        let c = cost.sample_at(g, &samples[i].p).unwrap_or(cost.sample(0));
        let l = chord_cost(&params, &c, &samples[i].p, &samples[i - 1].p);
        acc[i] = acc[i - 1] + l.max(1e-12);
    }
    let total = *acc.last().unwrap();
    for (s, a) in samples.iter_mut().zip(&acc) {
        s.t = a / total;
    }
    let last = samples.len() - 1;
    samples[last].t = 1.0;
    let mut path = GeodesicPath { samples, length: 0.0, source, end: *end };
    path.length = path_length(&path, map, cost)?;
    Ok(path)
}

fn probe_descent(
    map: &DistanceMap,
    params: &ModelParams,
    c: &crate::manifold::CostSample,
    p: &PointPO,
    u: f64,
    step: f64,
) -> Option<(PointPO, f64)> {
    let dim = p.dim;
    let mut dirs: Vec<Tangent> = Vec::new();
    for a in 0..dim {
        let mut e = Vec3::zeros();
        e[a] = 1.0;
        dirs.push(Tangent { xdot: e, ndot: Vec3::zeros() });
        dirs.push(Tangent { xdot: -e, ndot: Vec3::zeros() });
    }
    for t in tangent_basis(dim, &p.n) {
        dirs.push(Tangent { xdot: Vec3::zeros(), ndot: t });
        dirs.push(Tangent { xdot: Vec3::zeros(), ndot: -t });
    }
    let mut best: Option<(PointPO, f64)> = None;
    for d in dirs {
        // The path is traversed backwards, so the cost is that of the reversed move.
        let back = Tangent { xdot: -d.xdot, ndot: -d.ndot };
        let f = finsler_cost_unchecked(params, c, &p.n, &back);
        if !(f > 0.0) || !f.is_finite() {
            continue;
        }
        let x = p.x + d.xdot * (step / f);
        let n = renormalize(dim, sphere_exp(&p.n, &(d.ndot * (step / f))));
        if let Some(un) = value(map, &x, &n) {
            if un < u - 1e-12 && best.as_ref().is_none_or(|b| un < b.1) {
                best = Some((PointPO { dim, x, n }, un));
            }
        }
    }
    best
}

/// Tangent from `a` to `b`, based at `a`.
fn chord(a: &PointPO, b: &PointPO) -> Tangent {
    Tangent { xdot: b.x - a.x, ndot: sphere_log(&a.n, &b.n) }
}

fn chord_cost(params: &ModelParams, c: &crate::manifold::CostSample, a: &PointPO, b: &PointPO) -> f64 {
    finsler_cost_unchecked(params, c, &a.n, &chord(a, b))
}

/// Trapezoidal metric length of the path traversed from the seed to the end.
pub fn path_length(path: &GeodesicPath, map: &DistanceMap, cost: &CostField) -> Result<f64> {
    let params = map.params();
    let s = &path.samples;
    let mut total = 0.0;
    for i in (1..s.len()).rev() {
        let (a, b) = (&s[i].p, &s[i - 1].p);
        let ca = cost.sample_at(&map.grid, a)?;
        let cb = cost.sample_at(&map.grid, b)?;
        let v = chord(a, b);
        let fa = finsler_cost_unchecked(&params, &ca, &a.n, &v);
        let fb = finsler_cost_unchecked(&params, &cb, &b.n, &v);
        total += 0.5 * (fa + fb);
    }
    Ok(total)
}

/// Metric length of a sampled path from `samples[0]` to the last sample,
/// with uniform costs.
pub fn polyline_length(samples: &[PointPO], params: &ModelParams, c: &crate::manifold::CostSample) -> f64 {
    samples
        .windows(2)
        .map(|w| {
            let v = chord(&w[0], &w[1]);
            0.5 * (finsler_cost_unchecked(params, c, &w[0].n, &v) + finsler_cost_unchecked(params, c, &w[1].n, &v))
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterestKind {
    Cusp,
    Keypoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterestPoint {
    pub kind: InterestKind,
    pub t0: f64,
    pub t1: f64,
    pub x: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterestThresholds {
    /// Spatial/angular speed ratio below which a segment rotates in place.
    pub speed_ratio: f64,
    /// Minimum run of in-place segments forming a keypoint.
    pub persistence: usize,
    /// `|n·ẋ| / ‖ẋ‖` above which a segment counts for cusp detection.
    pub alignment: f64,
}

impl Default for InterestThresholds {
    fn default() -> Self {
        InterestThresholds { speed_ratio: 0.1, persistence: 3, alignment: 0.2 }
    }
}

/// Cusps and keypoints along a path, with velocities taken in the
/// seed-to-end direction.
///
/// For the symmetric variant a cusp is a sign change of `n·ẋ` between runs
/// of at least two aligned segments (the ε-blurred reversal of direction
/// may rotate briefly in between); keypoints are only reported when the
/// whole path rotates in place. For the forward variant a keypoint is a run
/// of at least `persistence` segments with `‖ẋ‖ ≤ speed_ratio·‖ṅ‖`, runs
/// separated by a single segment being merged. The final segment, which
/// snaps onto the seed node, is ignored.
pub fn detect_interest_points(path: &GeodesicPath, variant: Variant, th: &InterestThresholds) -> Vec<InterestPoint> {
    let s = &path.samples;
    let mut out = Vec::new();
    if s.len() < 3 {
        return out;
    }
    // Segment i joins samples i and i+1.
    let segs: Vec<(f64, f64, f64)> = (0..s.len() - 2)
        .map(|i| {
            let (a, b) = (&s[i + 1].p, &s[i].p);
            let v = chord(a, b);
            (v.xdot.dot(&b.n), v.xdot.norm(), v.ndot.norm())
        })
        .collect();
    let rotating = |&(_, sx, sn): &(f64, f64, f64)| sn > 0.0 && sx <= th.speed_ratio * sn;
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < segs.len() {
        if rotating(&segs[i]) {
            let start = i;
            while i < segs.len() && rotating(&segs[i]) {
                i += 1;
            }
            match runs.last_mut() {
                Some(last) if variant == Variant::Forward && start <= last.1 + 1 => last.1 = i,
                _ => runs.push((start, i)),
            }
        } else {
            i += 1;
        }
    }
    let keypoint = |(a, b): (usize, usize)| InterestPoint {
        kind: InterestKind::Keypoint,
        t0: s[a].t,
        t1: s[b].t,
        x: s[(a + b) / 2].p.x,
    };
    match variant {
        Variant::Forward => {
            out.extend(runs.iter().filter(|r| r.1 - r.0 >= th.persistence).map(|&r| keypoint(r)));
        }
        Variant::Symmetric => {
            if runs.len() == 1 && runs[0] == (0, segs.len()) {
                out.push(keypoint((0, segs.len())));
            }
            let floor = 1e-9 * segs.iter().map(|g| g.1).fold(0.0, f64::max);
            let signs: Vec<(usize, f64)> = segs
                .iter()
                .enumerate()
                .filter(|(_, g)| g.1 > floor && g.0.abs() > th.alignment * g.1)
                .map(|(i, g)| (i, g.0.signum()))
                .collect();
            // Runs of equal sign: (first segment, last segment, sign, length).
            let mut sruns: Vec<(usize, usize, f64, usize)> = Vec::new();
            for (i, sg) in signs {
                match sruns.last_mut() {
                    Some(r) if r.2 == sg => {
                        r.1 = i;
                        r.3 += 1;
                    }
                    _ => sruns.push((i, i, sg, 1)),
                }
            }
            sruns.retain(|r| r.3 >= 2);
            for w in sruns.windows(2) {
                if w[0].2 != w[1].2 {
                    let (a, b) = (w[0].1 + 1, w[1].0);
                    out.push(InterestPoint { kind: InterestKind::Cusp, t0: s[a].t, t1: s[b].t, x: s[(a + b) / 2].p.x });
                }
            }
        }
    }
    out.sort_by(|a, b| a.t0.total_cmp(&b.t0));
    out
}

/// Whether every keypoint lies spatially within `radius` of the path's
/// end or its seed.
pub fn keypoints_at_endpoints(path: &GeodesicPath, points: &[InterestPoint], radius: f64) -> bool {
    points
        .iter()
        .filter(|p| p.kind == InterestKind::Keypoint)
        .all(|p| (p.x - path.end.x).norm() <= radius || (p.x - path.source.x).norm() <= radius)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndpointCase {
    A,
    B,
    C1,
    C2,
    Unknown,
}

/// `|y|` bound of the planar case C2:
/// `x ∫₀^φ √(1 − ((4 − x²)/x²) sinh² s) ds`, `φ = arsinh(x / √(4 − x²))`.
pub fn c2_bound(x: f64) -> f64 {
    if !(x > 0.0 && x < 2.0) {
        return 0.0;
    }
    let k = (4.0 - x * x) / (x * x);
    let phi = (x / (4.0 - x * x).sqrt()).asinh();
    let f = |s: f64| (1.0 - k * s.sinh().powi(2)).max(0.0).sqrt();
    x * adaptive_simpson(&f, 0.0, phi, 1e-12, 40)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// Planar endpoint classification for a path from the origin state.
///
/// `in_r` tells whether the end lies in the set reachable by geodesics of
/// the exact forward model without in-place rotation; without it, only the
/// `x < 0` case can be decided.
pub fn classify_endpoint_2d(p: &PointPO, in_r: Option<bool>) -> EndpointCase {
    let (x, y) = (p.x[0], p.x[1]);
    if x < 0.0 {
        return EndpointCase::B;
    }
    match in_r {
        Some(true) => EndpointCase::A,
        Some(false) if x >= 2.0 => EndpointCase::C1,
        Some(false) if y.abs() <= c2_bound(x) => EndpointCase::C2,
        _ => EndpointCase::Unknown,
    }
}

/// The state at spatial position `x` minimizing `U` over the sphere grid.
pub fn best_orientation(map: &DistanceMap, x: &Vec3) -> Result<PointPO> {
    let g = &map.grid;
    let mut best: Option<(f64, Vec3)> = None;
    for n in &g.sphere.vertices {
        let p = PointPO { dim: g.dim(), x: *x, n: *n };
        let v = map.interpolate(&p)?;
        if v.is_finite() && best.is_none_or(|(b, _)| v < b) {
            best = Some((v, *n));
        }
    }
    match best {
        Some((_, n)) => Ok(PointPO { dim: g.dim(), x: *x, n }),
        None => domain("distance map is infinite at every orientation of the end position"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver_fm::{fast_march, SolveConfig};
    use crate::tessellation::{build_s1, ProductGrid, SpatialGrid};

    fn synthetic(f: impl Fn(&PointPO) -> f64) -> DistanceMap {
        let g = ProductGrid::new(SpatialGrid::centered(2, 21, 1.0).unwrap(), build_s1(36).unwrap()).unwrap();
        let c = CostField::uniform(1.0, 1.0).unwrap();
        let p = ModelParams::new(Variant::Symmetric, 0.5).unwrap();
        let mut m = fast_march(&g, &c, &p, &[PointPO::planar(0.0, 0.0, 0.0)], &SolveConfig::default()).unwrap();
        for i in 0..g.len() {
            m.values[i] = f(&g.state(i));
        }
        m
    }

    #[test]
    fn gradient_of_linear_and_constant() {
        let m = synthetic(|p| 3.0 * p.x[0] + 10.0);
        let d = grid_gradient(&m, &PointPO::planar(0.13, -0.2, 0.4), 0.0).unwrap();
        assert!((d.xhat[0] - 3.0).abs() < 1e-6 && d.xhat[1].abs() < 1e-6 && d.nhat.norm() < 1e-9);
        let d = grid_gradient(&m, &PointPO::planar(0.13, -0.2, 0.4), 0.5).unwrap();
        assert!((d.xhat[0] - 3.0).abs() < 1e-6);
        let m = synthetic(|_| 2.0);
        let d = grid_gradient(&m, &PointPO::planar(0.5, 0.5, 1.0), 0.5).unwrap();
        assert!(d.norm() < 1e-12);
        assert!(grid_gradient(&m, &PointPO::planar(1.5, 0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn gradient_of_quadratic() {
        let m = synthetic(|p| p.x[0] * p.x[0] + 0.5 * p.x[1] + p.theta().sin() + 5.0);
        let p = PointPO::planar(0.3, 0.1, 0.7);
        let d = grid_gradient(&m, &p, 0.0).unwrap();
        // Finite-difference oracle: the interpolant is exact for linear
        // data, so the error is the quadratic's O(h²) plus angular O(δ²).
        assert!((d.xhat[0] - 0.6).abs() < 0.02, "{}", d.xhat[0]);
        assert!((d.xhat[1] - 0.5).abs() < 1e-6);
        let expected = 0.7f64.cos();
        let dtheta = d.nhat.dot(&Vec3::new(-p.n[1], p.n[0], 0.0));
        assert!((dtheta - expected).abs() < 0.02, "{dtheta} vs {expected}");
    }

    #[test]
    fn endpoint_cases() {
        assert_eq!(classify_endpoint_2d(&PointPO::planar(-0.5, 0.0, 0.0), None), EndpointCase::B);
        assert_eq!(classify_endpoint_2d(&PointPO::planar(1.0, 0.0, 0.3), Some(true)), EndpointCase::A);
        assert_eq!(classify_endpoint_2d(&PointPO::planar(3.0, 0.1, 0.3), Some(false)), EndpointCase::C1);
        assert_eq!(classify_endpoint_2d(&PointPO::planar(1.0, 0.0, 0.3), None), EndpointCase::Unknown);
        assert_eq!(classify_endpoint_2d(&PointPO::planar(1.0, 0.0, 0.3), Some(false)), EndpointCase::C2);
        assert_eq!(classify_endpoint_2d(&PointPO::planar(1.0, 5.0, 0.3), Some(false)), EndpointCase::Unknown);
    }

    #[test]
    fn c2_bound_is_increasing() {
        let mut last = 0.0;
        for i in 1..20 {
            let b = c2_bound(i as f64 * 0.1);
            assert!(b > last);
            last = b;
        }
        assert_eq!(c2_bound(0.0), 0.0);
    }
}
