use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use rseik::cost::io::{load_cost, load_distance, store_cost, store_density, store_distance};
use rseik::cost::mask::{pompidou_mask, read_pnm, Bitmap};
use rseik::cost::{cost_from_density, synth_tube_phantom, CostField, Preset};
use rseik::manifold::{ModelParams, PointPO, Variant, Vec3};
use rseik::solver_fm::{fast_march, Backend, DistanceMap, SolveConfig};
use rseik::tessellation::{build_s1, build_s2_icosphere, ProductGrid, SpatialGrid, SphereGrid};
use rseik::tracing::{backtrack, best_orientation, detect_interest_points, GeodesicPath, InterestThresholds, TraceConfig};
use rseik::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Trace(a) => trace(a),
        Command::Compare(a) => compare(a),
        Command::Phantom(a) => phantom(a),
        Command::Bench(a) => bench(a),
    }
}

#[derive(Serialize)]
struct Manifest<'a, P: Serialize> {
    command: &'a str,
    params: &'a P,
    inputs: Vec<String>,
    outputs: Vec<String>,
    wall_clock_s: f64,
    stats: Value,
}

fn write_manifest<P: Serialize>(
    path: Option<&Path>,
    default_for: &Path,
    command: &str,
    params: &P,
    inputs: &[&Path],
    outputs: &[PathBuf],
    start: Instant,
    stats: Value,
) -> Result<()> {
    let path = path.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut s = default_for.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    });
    let m = Manifest {
        command,
        params,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        stats,
    };
    let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Domain(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Parses `x,y[,z],θ[,φ]` or `x,y[,z],nx,ny[,nz]` for a `d`-dimensional grid.
/// In 3D, `θ` is the azimuth in the xy-plane and `φ` the elevation.
pub fn parse_state(s: &str, d: usize) -> Result<PointPO> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Domain(format!("bad state syntax '{s}'")))?;
    match (d, v.len()) {
        (2, 3) => Ok(PointPO::planar(v[0], v[1], v[2])),
        (2, 4) => PointPO::new(&v[..2], &v[2..]),
        (3, 4) | (3, 5) => {
            let (th, ph) = (v[3], v.get(4).copied().unwrap_or(0.0));
            PointPO::new(&v[..3], &[th.cos() * ph.cos(), th.sin() * ph.cos(), ph.sin()])
        }
        (3, 6) => PointPO::new(&v[..3], &v[3..]),
        _ => usage(format!("state '{s}' has {} components, which does not fit a {d}D grid", v.len())),
    }
}

fn sphere_for(d: usize, g: &GridArgs) -> Result<SphereGrid> {
    match d {
        2 => {
            if g.icosphere.is_some() {
                return usage("--icosphere applies to 3D grids");
            }
            build_s1(g.orientations.unwrap_or(36))
        }
        _ => {
            if g.orientations.is_some() {
                return usage("--orientations applies to 2D grids; use --icosphere");
            }
            SphereGrid::from_kind(rseik::tessellation::SphereKind::S2Icosphere { k: g.icosphere.unwrap_or(2) })
        }
    }
}

fn spatial_from(dims: &[usize], g: &GridArgs) -> Result<SpatialGrid> {
    let h = g.h.unwrap_or(1.0);
    let origin = match &g.origin {
        Some(o) => o.clone(),
        None => dims.iter().map(|&n| -0.5 * (n as f64 - 1.0) * h).collect(),
    };
    SpatialGrid::new(dims, h, &origin)
}

fn mask_grid_dims(b: &Bitmap) -> Vec<usize> {
    vec![b.width, b.height]
}

/// Grid and cost for a solve: a cost file, a mask, or an explicit uniform grid.
fn problem(a: &SolveArgs) -> Result<(ProductGrid, CostField)> {
    let mask = a.mask.as_deref().map(read_pnm).transpose()?;
    let (grid, cost) = if let Some(path) = &a.cost {
        if a.grid.dims.is_some() || a.grid.orientations.is_some() || a.grid.icosphere.is_some() {
            return usage("conflicting dims: the cost file defines the grid");
        }
        load_cost(path)?
    } else {
        let dims = match (&mask, &a.grid.dims) {
            (Some(_), Some(_)) => return usage("conflicting dims: the mask defines the spatial grid"),
            (Some(b), None) => mask_grid_dims(b),
            (None, Some(d)) => d.clone(),
            (None, None) => return usage("give --cost, --mask or --dims"),
        };
        let spatial = spatial_from(&dims, &a.grid)?;
        let sphere = sphere_for(spatial.dim, &a.grid)?;
        (ProductGrid::new(spatial, sphere)?, CostField::uniform(a.xi, 1.0)?)
    };
    let grid = match mask {
        Some(b) => {
            if grid.dim() != 2 || grid.spatial.dims[0] != b.width || grid.spatial.dims[1] != b.height {
                return usage(format!(
                    "conflicting dims: mask is {}x{}, grid is {:?}",
                    b.width,
                    b.height,
                    &grid.spatial.dims[..grid.dim()]
                ));
            }
            ProductGrid::new(grid.spatial.clone().with_mask(b.grid_mask())?, grid.sphere)?
        }
        None => grid,
    };
    Ok((grid, cost))
}

fn solve(a: SolveArgs) -> Result<()> {
    let start = Instant::now();
    let (grid, cost) = problem(&a)?;
    let d = grid.dim();
    let variant: Variant = a.variant.parse()?;
    let params = ModelParams::new(variant, a.epsilon)?;
    let backend: Backend = a.backend.parse()?;
    let mut seeds: Vec<PointPO> = a.seed.iter().map(|s| parse_state(s, d)).collect::<Result<_>>()?;
    if a.all_seed_orientations {
        seeds = seeds
            .iter()
            .flat_map(|s| grid.sphere.vertices.iter().map(move |n| PointPO { dim: d, x: s.x, n: *n }))
            .collect();
    }
    let stop = a.stop.iter().map(|s| parse_state(s, d)).collect::<Result<_>>()?;
    let cfg = SolveConfig { backend, stop, stencil_cap: a.stencil_cap };
    let map = fast_march(&grid, &cost, &params, &seeds, &cfg)?;
    store_distance(&a.out, &map)?;
    let inputs: Vec<&Path> = a.cost.iter().chain(&a.mask).map(|p| p.as_path()).collect();
    write_manifest(
        a.manifest.as_deref(),
        &a.out,
        "solve",
        &a,
        &inputs,
        std::slice::from_ref(&a.out),
        start,
        json!({
            "nodes": grid.len(),
            "accepted": map.stats.accepted,
            "pops": map.stats.pops,
            "monotone": map.stats.monotone,
            "backend": map.meta.backend,
        }),
    )
}

fn indexed(path: &Path, k: usize, n: usize) -> PathBuf {
    if n == 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(e) => format!("{stem}_{k}.{}", e.to_string_lossy()),
        None => format!("{stem}_{k}"),
    };
    path.with_file_name(name)
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn path_csv(path: &GeodesicPath, d: usize) -> String {
    let axes = ["x", "y", "z"];
    let mut head = vec!["t".to_string()];
    head.extend(axes[..d].iter().map(|s| s.to_string()));
    head.extend(axes[..d].iter().map(|s| format!("n{s}")));
    head.push("mode".into());
    head.push("U".into());
    let mut out = head.join(",") + "\n";
    for s in &path.samples {
        let mut row = vec![format!("{:.9}", s.t)];
        row.extend((0..d).map(|i| format!("{:.9}", s.p.x[i])));
        row.extend((0..d).map(|i| format!("{:.9}", s.p.n[i])));
        row.push(s.mode.to_string());
        row.push(format!("{:.9}", s.u));
        out += &row.join(",");
        out.push('\n');
    }
    out
}

fn load_map(a: &TraceArgs) -> Result<(DistanceMap, CostField)> {
    let mut map = load_distance(&a.distance)?;
    let cost = match &a.cost {
        Some(p) => {
            let (g, c) = load_cost(p)?;
            if !g.same_shape(&map.grid) {
                return usage("cost grid does not match the distance grid");
            }
            c
        }
        None => CostField::uniform(map.meta.xi, 1.0)?,
    };
    if let Some(p) = &a.mask {
        let b = read_pnm(p)?;
        let sp = map.grid.spatial.clone().with_mask(b.grid_mask())?;
        map.grid = ProductGrid::new(sp, map.grid.sphere.clone())?;
    }
    Ok((map, cost))
}

fn trace(a: TraceArgs) -> Result<()> {
    let start = Instant::now();
    let (map, cost) = load_map(&a)?;
    let d = map.grid.dim();
    let ends: Vec<PointPO> = a
        .end
        .iter()
        .map(|s| {
            if a.all_orientations {
                // Only the position matters; accept bare coordinates as well.
                let v: Vec<&str> = s.split(',').collect();
                if v.len() == d {
                    let x: Vec<f64> = v.iter().map(|t| t.trim().parse().unwrap_or(f64::NAN)).collect();
                    if x.iter().any(|c| c.is_nan()) {
                        return usage(format!("bad position syntax '{s}'"));
                    }
                    let mut xv = Vec3::zeros();
                    xv.as_mut_slice()[..d].copy_from_slice(&x);
                    return best_orientation(&map, &xv);
                }
                let p = parse_state(s, d)?;
                return best_orientation(&map, &p.x);
            }
            parse_state(s, d)
        })
        .collect::<Result<_>>()?;
    for e in &ends {
        if !map.grid.spatial.contains(&e.x) {
            return usage(format!("end {:?} outside the grid", &e.x.as_slice()[..d]));
        }
        if !map.interpolate(e)?.is_finite() {
            return usage(format!("U is infinite at end {:?}", &e.x.as_slice()[..d]));
        }
    }
    let cfg = TraceConfig { step: a.step, smoothing: a.smoothing, ..Default::default() };
    let paths: Vec<Result<GeodesicPath>> = ends.par_iter().map(|e| backtrack(&map, &cost, e, &cfg)).collect();
    let mut outputs = Vec::new();
    let mut summary = Vec::new();
    for (k, (p, e)) in paths.into_iter().zip(&ends).enumerate() {
        let path = p?;
        let out = indexed(&a.out, k, ends.len());
        std::fs::write(&out, path_csv(&path, d))?;
        let ip = detect_interest_points(&path, map.meta.variant, &InterestThresholds::default());
        let side = json!({
            "end": e,
            "source": path.source,
            "length": path.length,
            "u_end": map.interpolate(e)?,
            "samples": path.samples.len(),
            "interest_points": ip,
        });
        let sp = sidecar(&out);
        std::fs::write(&sp, serde_json::to_string_pretty(&side).unwrap() + "\n")?;
        summary.push(json!({ "csv": out, "samples": path.samples.len(), "length": path.length, "interest_points": ip.len() }));
        outputs.push(out);
        outputs.push(sp);
    }
    let inputs: Vec<&Path> =
        std::iter::once(a.distance.as_path()).chain(a.cost.as_deref()).chain(a.mask.as_deref()).collect();
    write_manifest(a.manifest.as_deref(), &a.out, "trace", &a, &inputs, &outputs, start, json!({ "paths": summary }))
}

fn compare(a: CompareArgs) -> Result<()> {
    let ma = load_distance(&a.a)?;
    let mb = load_distance(&a.b)?;
    if !ma.grid.same_shape(&mb.grid) {
        return usage("grid mismatch between the two distance files");
    }
    let slack = a.slack.unwrap_or(2.0 * ma.grid.spatial.h);
    let mut rel = Vec::new();
    let (mut exceed, mut below) = (0usize, 0usize);
    for (&u, &v) in ma.values.iter().zip(&mb.values) {
        if !u.is_finite() || !v.is_finite() {
            continue;
        }
        if a.expect_b_geq_a && v < u - slack {
            below += 1;
        }
        let scale = u.abs().max(v.abs());
        if scale == 0.0 {
            rel.push(0.0);
            continue;
        }
        let r = (u - v).abs() / scale;
        if r > a.tol {
            exceed += 1;
        }
        rel.push(r);
    }
    rel.sort_by(f64::total_cmp);
    let max = rel.last().copied().unwrap_or(0.0);
    let median = if rel.is_empty() { 0.0 } else { rel[rel.len() / 2] };
    println!("compared {} finite node pairs", rel.len());
    println!("max relative difference {max:.6e}");
    println!("median relative difference {median:.6e}");
    println!("nodes above tolerance {}: {exceed}", a.tol);
    if a.expect_b_geq_a {
        println!("nodes with b < a - {slack}: {below}");
    }
    Ok(())
}

fn phantom(a: PhantomArgs) -> Result<()> {
    let start = Instant::now();
    let mut outputs = vec![a.out.clone()];
    if a.preset == "pompidou_mask" {
        std::fs::write(&a.out, pompidou_mask(a.width, a.height).to_pbm())?;
    } else {
        let preset: Preset = a.preset.parse()?;
        let sp = SpatialGrid::new(&[a.n, a.n, a.n], a.h, &[0.0, 0.0, 0.0])?;
        let grid = ProductGrid::new(sp, build_s2_icosphere(a.icosphere))?;
        let tubes = preset.tubes(&grid.spatial)?;
        let w = synth_tube_phantom(&grid, &tubes)?;
        store_density(&a.out, &w)?;
        if let Some(c) = &a.cost_out {
            store_cost(c, &grid, &cost_from_density(&w, a.sigma, a.p, a.xi)?)?;
            outputs.push(c.clone());
        }
    }
    write_manifest(a.manifest.as_deref(), &a.out, "phantom", &a, &[], &outputs, start, json!({}))
}

/// Least-squares slope of `log t` against `log n`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(n, t)| (n.ln(), t.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn bench(a: BenchArgs) -> Result<()> {
    let start = Instant::now();
    if a.sizes.len() < 3 {
        return usage("bench needs at least three grid sizes");
    }
    let variant: Variant = a.variant.parse()?;
    let params = ModelParams::new(variant, a.epsilon)?;
    let cfg = SolveConfig { backend: a.backend.parse()?, ..Default::default() };
    let cost = CostField::uniform(1.0, 1.0)?;
    let mut rows = Vec::new();
    let mut csv = String::from("n_per_axis,nodes,seconds,accepted,pops\n");
    for &n in &a.sizes {
        let sphere = if a.d == 2 { build_s1(a.orientations)? } else { build_s2_icosphere(a.icosphere) };
        let grid = ProductGrid::new(SpatialGrid::centered(a.d, n, 1.0)?, sphere)?;
        let seed = PointPO::new(&vec![0.0; a.d], &{
            let mut e = vec![0.0; a.d];
            e[0] = 1.0;
            e
        })?;
        let t = Instant::now();
        let map = fast_march(&grid, &cost, &params, &[seed], &cfg)?;
        let secs = t.elapsed().as_secs_f64();
        csv += &format!("{n},{},{secs:.6},{},{}\n", grid.len(), map.stats.accepted, map.stats.pops);
        rows.push((grid.len() as f64, secs));
    }
    std::fs::write(&a.out, csv)?;
    let slope = loglog_slope(&rows);
    println!("log-log slope {slope:.3}");
    write_manifest(a.manifest.as_deref(), &a.out, "bench", &a, &[], std::slice::from_ref(&a.out), start, json!({ "slope": slope }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_syntax() {
        let p = parse_state("1,2,0", 2).unwrap();
        assert_eq!(p.x[0], 1.0);
        assert!((p.n[0] - 1.0).abs() < 1e-15);
        let q = parse_state("0,0,0,-1", 2).unwrap();
        assert_eq!(q.n[1], -1.0);
        let r = parse_state("1,2,3,0,1.5707963267948966", 3).unwrap();
        assert!((r.n[2] - 1.0).abs() < 1e-12);
        assert!(parse_state("1,2", 2).is_err());
        assert!(parse_state("1,a,0", 2).is_err());
        assert!(parse_state("0,0,0,0,0,0", 3).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1e3, 1e4, 1e5].iter().map(|&n| (n, 2e-6 * n)).collect();
        assert!((loglog_slope(&pts) - 1.0).abs() < 1e-12);
    }
}
