use std::f64::consts::PI;

use num_complex::Complex64;
use rseik::cost::CostField;
use rseik::manifold::{ModelParams, PointPO, Variant};
use rseik::solver_fm::{fast_march, DistanceMap, SolveConfig};
use rseik::tessellation::{build_s1, ProductGrid, SpatialGrid};
use rseik::tracing::*;

fn solve(spatial: SpatialGrid, orientations: usize, variant: Variant, eps: f64) -> (DistanceMap, CostField) {
    let g = ProductGrid::new(spatial, build_s1(orientations).unwrap()).unwrap();
    let c = CostField::uniform(1.0, 1.0).unwrap();
    let p = ModelParams::new(variant, eps).unwrap();
    let m = fast_march(&g, &c, &p, &[PointPO::planar(0.0, 0.0, 0.0)], &SolveConfig::default()).unwrap();
    (m, c)
}

#[test]
fn straight_path_to_aligned_end() {
    let h = 0.02;
    let (m, c) = solve(SpatialGrid::new(&[76, 41], h, &[-0.3, -0.4]).unwrap(), 36, Variant::Symmetric, 0.1);
    let path = backtrack(&m, &c, &PointPO::planar(1.0, 0.0, 0.0), &TraceConfig::default()).unwrap();
    let max_y = path.samples.iter().map(|s| s.p.x[1].abs()).fold(0.0, f64::max);
    assert!(max_y <= 2.0 * h, "max |y| = {max_y}");
    assert!(detect_interest_points(&path, Variant::Symmetric, &InterestThresholds::default()).is_empty());
    assert!((path.length - 1.0).abs() < 0.05, "{}", path.length);
    for w in path.samples.windows(2) {
        assert!(w[1].u < w[0].u + 1e-9);
        assert!((w[1].p.n.norm() - 1.0).abs() < 1e-12);
    }
    assert_eq!(path.samples[0].t, 0.0);
    assert_eq!(path.samples.last().unwrap().t, 1.0);
}

#[test]
fn forward_path_behind_seed_rotates_in_place() {
    // ε must be small enough that reversing (cost μ/ε) is dearer than turning around (≈ 2π).
    let (m, c) = solve(SpatialGrid::centered(2, 61, 0.6).unwrap(), 48, Variant::Forward, 0.03);
    let end = PointPO::planar(-0.3, 0.0, 0.0);
    let path = backtrack(&m, &c, &end, &TraceConfig::default()).unwrap();
    let ip = detect_interest_points(&path, Variant::Forward, &InterestThresholds::default());
    assert!(ip.iter().any(|p| p.kind == InterestKind::Keypoint), "{ip:?}");
    assert!(keypoints_at_endpoints(&path, &ip, 0.12), "{ip:?}");
    assert!(path.samples.iter().any(|s| s.mode == Mode::Minus));
    // Traversed from the seed, the car never drives backwards.
    let s = &path.samples;
    for i in 1..s.len() - 1 {
        let dx = s[i - 1].p.x - s[i].p.x;
        assert!(dx.dot(&s[i].p.n) >= -0.05 * 0.04, "sample {i}: {}", dx.dot(&s[i].p.n));
    }
    let u = m.interpolate(&end).unwrap();
    assert!((path.length - u).abs() <= 0.05 * u + 3.0 * 0.02, "{} vs {u}", path.length);
}

#[test]
fn end_at_seed_is_a_single_sample() {
    let (m, c) = solve(SpatialGrid::centered(2, 11, 0.2).unwrap(), 16, Variant::Symmetric, 0.5);
    let path = backtrack(&m, &c, &PointPO::planar(0.0, 0.0, 0.0), &TraceConfig::default()).unwrap();
    assert_eq!(path.samples.len(), 1);
    assert_eq!(path.length, 0.0);
}

#[test]
fn lengths_of_elementary_paths() {
    let (m, c) = solve(SpatialGrid::centered(2, 11, 1.0).unwrap(), 16, Variant::Symmetric, 0.5);
    let sample = |x: f64, th: f64| PathSample { t: 0.0, p: PointPO::planar(x, 0.0, th), mode: Mode::Plus, u: 0.0 };
    let straight = GeodesicPath {
        samples: (0..=10).rev().map(|i| sample(i as f64 * 0.1, 0.0)).collect(),
        length: 0.0,
        source: PointPO::planar(0.0, 0.0, 0.0),
        end: PointPO::planar(1.0, 0.0, 0.0),
    };
    assert!((path_length(&straight, &m, &c).unwrap() - 1.0).abs() < 1e-3);
    let turn = GeodesicPath {
        samples: (0..=20).rev().map(|i| sample(0.0, i as f64 * PI / 40.0)).collect(),
        length: 0.0,
        source: PointPO::planar(0.0, 0.0, 0.0),
        end: PointPO::planar(0.0, 0.0, PI / 2.0),
    };
    let l = path_length(&turn, &m, &c).unwrap();
    assert!((l - PI / 2.0).abs() < 0.01 * PI / 2.0, "{l}");
}

/// `-i·x·E(i·φ, m)` with `E(z, m) = ∫₀^z √(1 − m sin² t) dt` evaluated along
/// the imaginary segment by composite Simpson in complex arithmetic.
fn c2_bound_complex(x: f64) -> f64 {
    let m = (x * x - 4.0) / (x * x);
    let z = Complex64::new(0.0, (x / (4.0 - x * x).sqrt()).asinh());
    let f = |t: Complex64| (Complex64::new(1.0, 0.0) - m * t.sin().powi(2)).sqrt();
    let n = 200_000;
    let mut e = f(Complex64::new(0.0, 0.0)) + f(z);
    for k in 1..n {
        let t = z * (k as f64 / n as f64);
        e += f(t) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    e *= z / (3.0 * n as f64);
    (Complex64::new(0.0, -x) * e).re
}

#[test]
fn c2_bound_matches_complex_elliptic_integral() {
    for x in [0.1, 0.5, 1.0, 1.5, 1.9] {
        let a = c2_bound(x);
        let b = c2_bound_complex(x);
        assert!((a - b).abs() < 1e-6, "x = {x}: {a} vs {b}");
    }
}

#[test]
fn best_orientation_faces_away_from_the_seed() {
    let (m, _) = solve(SpatialGrid::centered(2, 31, 0.6).unwrap(), 32, Variant::Symmetric, 0.1);
    let p = best_orientation(&m, &rseik::manifold::Vec3::new(0.5, 0.0, 0.0)).unwrap();
    assert!(p.n[0].abs() > 0.99, "{:?}", p.n);
}
