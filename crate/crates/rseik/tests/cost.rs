use proptest::prelude::*;
use rseik::cost::io::{load_cost, load_density, read_grid, store_cost, store_density, write_grid, GridHeader};
use rseik::cost::{cost_from_density, synth_tube_phantom, DensityField, Preset, Tube};
use rseik::manifold::{finsler_cost, ModelParams, PointPO, Tangent, Variant, Vec3};
use rseik::tessellation::{build_s2_icosphere, ProductGrid, SpatialGrid};
use rseik::Error;

fn grid(n: usize, k: usize) -> ProductGrid {
    ProductGrid::new(SpatialGrid::new(&[n, n, n], 1.0, &[0.0, 0.0, 0.0]).unwrap(), build_s2_icosphere(k)).unwrap()
}

fn straight(from: Vec3, to: Vec3) -> Tube {
    Tube::new(vec![from, to], 2.0, 1.0, 10.0).unwrap()
}

fn argmax_orientation(w: &DensityField, s: usize) -> Vec3 {
    let g = &w.grid;
    let best = (0..g.no()).max_by(|&a, &b| w.values[g.index(s, a)].total_cmp(&w.values[g.index(s, b)])).unwrap();
    g.sphere.vertices[best]
}

#[test]
fn straight_tube_peaks_along_its_axis() {
    let g = grid(13, 2);
    let w = synth_tube_phantom(&g, &[straight(Vec3::new(0.0, 6.0, 6.0), Vec3::new(12.0, 6.0, 6.0))]).unwrap();
    let s = g.spatial.index([6, 6, 6]);
    let n = argmax_orientation(&w, s);
    assert!((n.x.abs() - 1.0).abs() < 1e-12, "{n:?}");
}

#[test]
fn crossing_voxel_is_bimodal() {
    let g = grid(13, 2);
    let a = straight(Vec3::new(0.0, 6.0, 6.0), Vec3::new(12.0, 6.0, 6.0));
    let b = straight(Vec3::new(6.0, 0.0, 6.0), Vec3::new(6.0, 12.0, 6.0));
    let w = synth_tube_phantom(&g, &[a, b]).unwrap();
    let s = g.spatial.index([6, 6, 6]);
    let at = |n: Vec3| w.values[g.index(s, g.sphere.nearest(&n))];
    let (ex, ey) = (at(Vec3::x()), at(Vec3::y()));
    let diag = at(Vec3::new(1.0, 1.0, 0.0).normalize());
    assert!((ex - ey).abs() < 1e-9 * ex);
    assert!(diag < 0.2 * ex, "{diag} vs {ex}");
    // Each tangent is a local maximum over its sphere neighbours.
    for t in [Vec3::x(), Vec3::y()] {
        let k = g.sphere.nearest(&t);
        for &j in &g.sphere.neighbors[k] {
            assert!(w.values[g.index(s, j)] < w.values[g.index(s, k)]);
        }
    }
}

#[test]
fn density_vanishes_far_from_tubes() {
    let g = grid(24, 1);
    let w = synth_tube_phantom(&g, &[straight(Vec3::new(0.0, 4.0, 4.0), Vec3::new(23.0, 4.0, 4.0))]).unwrap();
    let max = w.max();
    for s in 0..g.spatial.len() {
        let x = g.spatial.position(s);
        if ((x.y - 4.0).powi(2) + (x.z - 4.0).powi(2)).sqrt() >= 6.0 {
            for o in 0..g.no() {
                assert!(w.values[g.index(s, o)] < 1e-6 * max);
            }
        }
    }
}

#[test]
fn tracking_along_a_tube_is_cheaper_than_across() {
    let g = grid(13, 2);
    let w = synth_tube_phantom(&g, &[straight(Vec3::new(0.0, 6.0, 6.0), Vec3::new(12.0, 6.0, 6.0))]).unwrap();
    let c = cost_from_density(&w, 3.0, 3, 0.1).unwrap();
    let params = ModelParams::new(Variant::Symmetric, 0.1).unwrap();
    let (along, across) = (g.sphere.nearest(&Vec3::x()), g.sphere.nearest(&Vec3::y()));
    for i in 1..12 {
        let s = g.spatial.index([i, 6, 6]);
        let cost = |o: usize| {
            let n = g.sphere.vertices[o];
            let p = PointPO { dim: 3, x: g.spatial.position(s), n };
            finsler_cost(&params, &c.sample(g.index(s, o)), &p, &Tangent { xdot: n, ndot: Vec3::zeros() }).unwrap()
        };
        assert!(cost(along) < cost(across), "node {i}");
    }
}

#[test]
fn presets_fit_their_grid() {
    let sp = SpatialGrid::new(&[32, 32, 32], 1.0, &[0.0, 0.0, 0.0]).unwrap();
    assert_eq!(Preset::TwoCrossings.tubes(&sp).unwrap().len(), 2);
    assert_eq!(Preset::TorsionParallel.tubes(&sp).unwrap().len(), 3);
    assert!("three_crossings".parse::<Preset>().is_err());
    let planar = SpatialGrid::new(&[8, 8], 1.0, &[0.0, 0.0]).unwrap();
    assert!(Preset::TwoCrossings.tubes(&planar).is_err());
}

#[test]
fn tube_leaving_the_grid_is_rejected() {
    let g = grid(8, 0);
    let t = straight(Vec3::new(0.0, 4.0, 4.0), Vec3::new(12.0, 4.0, 4.0));
    assert!(matches!(synth_tube_phantom(&g, &[t]), Err(Error::Domain(_))));
}

#[test]
fn stored_fields_round_trip_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid(6, 1);
    let w = synth_tube_phantom(&g, &[straight(Vec3::new(0.0, 2.5, 2.5), Vec3::new(5.0, 2.5, 2.5))]).unwrap();
    let dp = dir.path().join("w.pogrid");
    store_density(&dp, &w).unwrap();
    let back = load_density(&dp).unwrap();
    assert!(back.values.iter().zip(&w.values).all(|(a, b)| *a == (*b as f32) as f64));
    let dp2 = dir.path().join("w2.pogrid");
    store_density(&dp2, &back).unwrap();
    assert_eq!(std::fs::read(&dp).unwrap(), std::fs::read(&dp2).unwrap());

    let c = cost_from_density(&w, 3.0, 3, 0.1).unwrap();
    let cp = dir.path().join("c.pogrid");
    store_cost(&cp, &g, &c).unwrap();
    let (g2, c2) = load_cost(&cp).unwrap();
    assert!(g2.same_shape(&g));
    assert_eq!(c2.xi, 0.1);
    for (a, b) in c.c2.iter().zip(&c2.c2) {
        assert!((a - b).abs() <= 1e-7 * a);
    }
    assert!(load_density(&cp).is_err(), "quantity mismatch must be reported");
}

#[test]
fn wrong_magic_is_a_parse_error() {
    let g = grid(2, 0);
    let mut h = GridHeader::for_grid(&g, "density");
    h.magic = "NOTAGRID".into();
    let mut buf = Vec::new();
    write_grid(&mut buf, &h, &vec![0.0; g.len()]).unwrap();
    assert!(matches!(read_grid(&mut &buf[..]), Err(Error::Parse { offset: 0, .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cost_is_bounded_and_decreasing_in_density(
        vals in prop::collection::vec(0.0f64..10.0, 96),
        sigma in 0.0f64..30.0,
        p in 1u32..5,
    ) {
        let g = grid(2, 0);
        let w = DensityField::new(g, vals.clone()).unwrap();
        let c = cost_from_density(&w, sigma, p, 0.1).unwrap();
        let floor = 1.0 / (1.0 + sigma);
        for i in 0..96 {
            prop_assert!(c.c2[i] >= floor - 1e-12 && c.c2[i] <= 1.0);
            prop_assert!((c.c1[i] - 0.1 * c.c2[i]).abs() < 1e-15);
            for j in 0..96 {
                if vals[i] < vals[j] {
                    prop_assert!(c.c2[i] >= c.c2[j]);
                }
            }
        }
    }

    #[test]
    fn cost_is_invariant_under_density_scaling(
        vals in prop::collection::vec(0.0f64..10.0, 96),
        scale in 0.01f64..100.0,
    ) {
        let g = grid(2, 0);
        let a = cost_from_density(&DensityField::new(g.clone(), vals.clone()).unwrap(), 3.0, 3, 0.1).unwrap();
        let scaled = vals.iter().map(|v| v * scale).collect();
        let b = cost_from_density(&DensityField::new(g, scaled).unwrap(), 3.0, 3, 0.1).unwrap();
        for (x, y) in a.c2.iter().zip(&b.c2) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
