//! `POGRID1` container: one JSON header line, then little-endian `f32`
//! values with the orientation index fastest, then x, y (, z).

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::field::{CostField, DensityField};
use crate::error::{domain, Error, Result};
use crate::manifold::{PointPO, Variant};
use crate::solver_fm::{Backend, DistanceMap, MapMeta, NodeState, SolveStats};
use crate::tessellation::{ProductGrid, SpatialGrid, SphereGrid, SphereKind};

pub const MAGIC: &str = "POGRID1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub magic: String,
    pub d: usize,
    /// Spatial extents followed by the orientation count.
    pub dims: Vec<usize>,
    pub h: f64,
    pub origin: Vec<f64>,
    pub sphere: SphereKind,
    /// `density`, `cost` or `distance`.
    pub quantity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<PointPO>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
}

impl GridHeader {
    pub fn for_grid(grid: &ProductGrid, quantity: &str) -> Self {
        let d = grid.dim();
        let mut dims = grid.spatial.dims[..d].to_vec();
        dims.push(grid.no());
        GridHeader {
            magic: MAGIC.into(),
            d,
            dims,
            h: grid.spatial.h,
            origin: grid.spatial.origin[..d].to_vec(),
            sphere: grid.sphere.kind,
            quantity: quantity.into(),
            variant: None,
            epsilon: None,
            xi: None,
            seeds: None,
            backend: None,
        }
    }

    pub fn grid(&self) -> Result<ProductGrid> {
        if self.dims.len() != self.d + 1 {
            return domain(format!("header has d = {} but {} dims", self.d, self.dims.len()));
        }
        let spatial = SpatialGrid::new(&self.dims[..self.d], self.h, &self.origin)?;
        let sphere = SphereGrid::from_kind(self.sphere)?;
        if sphere.len() != self.dims[self.d] {
            return domain(format!(
                "sphere {:?} has {} vertices, header says {}",
                self.sphere,
                sphere.len(),
                self.dims[self.d]
            ));
        }
        ProductGrid::new(spatial, sphere)
    }

    pub fn count(&self) -> usize {
        self.dims.iter().product()
    }
}

fn parse<T>(offset: u64, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { offset, msg: msg.into() })
}

pub fn write_grid(w: &mut impl Write, header: &GridHeader, values: &[f64]) -> Result<()> {
    if values.len() != header.count() {
        return domain(format!("header describes {} values, got {}", header.count(), values.len()));
    }
    let line = serde_json::to_string(header).map_err(|e| Error::Domain(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(4 * values.len());
    for &v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_grid(r: &mut impl BufRead) -> Result<(GridHeader, Vec<f64>)> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return parse(line.len() as u64, "header line is not terminated by a newline");
    }
    let text = match std::str::from_utf8(&line[..line.len() - 1]) {
        Ok(t) => t,
        Err(e) => return parse(e.valid_up_to() as u64, "header is not valid UTF-8"),
    };
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return parse(byte_offset(text, e.line(), e.column()), format!("malformed header: {e}")),
    };
    if value.get("magic").and_then(|m| m.as_str()) != Some(MAGIC) {
        return parse(0, format!("bad magic, expected {MAGIC}"));
    }
    let header: GridHeader = match serde_json::from_value(value) {
        Ok(h) => h,
        Err(e) => return parse(0, format!("malformed header: {e}")),
    };
    if header.dims.len() != header.d + 1 || header.origin.len() != header.d {
        return parse(0, format!("header dims {:?} do not match d = {}", header.dims, header.d));
    }
    let start = line.len() as u64;
    let expected = header.count();
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != 4 * expected {
        let found = payload.len() / 4;
        let at = start + (4 * found.min(expected)) as u64;
        return parse(
            at,
            format!("header dims give {expected} values, payload holds {found} ({} bytes)", payload.len()),
        );
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok((header, values))
}

fn byte_offset(text: &str, line: usize, column: usize) -> u64 {
    let mut off = 0;
    for (i, l) in text.split('\n').enumerate() {
        if i + 1 == line {
            return (off + column.saturating_sub(1)) as u64;
        }
        off += l.len() + 1;
    }
    off as u64
}

pub fn read_file(path: &Path) -> Result<(GridHeader, Vec<f64>)> {
    let f = std::fs::File::open(path)?;
    read_grid(&mut std::io::BufReader::new(f))
}

pub fn write_file(path: &Path, header: &GridHeader, values: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_grid(&mut f, header, values)?;
    f.flush()?;
    Ok(())
}

fn expect_quantity(h: &GridHeader, q: &str) -> Result<()> {
    if h.quantity != q {
        return domain(format!("expected a {q} grid, file holds '{}'", h.quantity));
    }
    Ok(())
}

pub fn store_density(path: &Path, w: &DensityField) -> Result<()> {
    write_file(path, &GridHeader::for_grid(&w.grid, "density"), &w.values)
}

pub fn load_density(path: &Path) -> Result<DensityField> {
    let (h, v) = read_file(path)?;
    expect_quantity(&h, "density")?;
    DensityField::new(h.grid()?, v)
}

/// Stores `C = C2`; `C1 = ξ·C` is rebuilt on load.
pub fn store_cost(path: &Path, grid: &ProductGrid, cost: &CostField) -> Result<()> {
    let mut h = GridHeader::for_grid(grid, "cost");
    h.xi = Some(cost.xi);
    let c = if cost.is_uniform() { vec![cost.c2[0]; grid.len()] } else { cost.c2.clone() };
    write_file(path, &h, &c)
}

pub fn load_cost(path: &Path) -> Result<(ProductGrid, CostField)> {
    let (h, v) = read_file(path)?;
    expect_quantity(&h, "cost")?;
    let xi = h.xi.unwrap_or(1.0);
    Ok((h.grid()?, CostField::from_base(v, xi)?))
}

pub fn store_distance(path: &Path, map: &DistanceMap) -> Result<()> {
    let mut h = GridHeader::for_grid(&map.grid, "distance");
    h.variant = Some(map.meta.variant);
    h.epsilon = Some(map.meta.epsilon);
    h.xi = Some(map.meta.xi);
    h.seeds = Some(map.meta.seeds.clone());
    h.backend = Some(map.meta.backend);
    write_file(path, &h, &map.values)
}

/// Loads a distance map; masks are not part of the container and must be
/// reattached by the caller.
pub fn load_distance(path: &Path) -> Result<DistanceMap> {
    let (h, values) = read_file(path)?;
    expect_quantity(&h, "distance")?;
    let (Some(variant), Some(epsilon)) = (h.variant, h.epsilon) else {
        return domain("distance file lacks variant/epsilon metadata");
    };
    let grid = h.grid()?;
    let states = values
        .iter()
        .map(|v| if v.is_finite() { NodeState::Accepted } else { NodeState::Far })
        .collect();
    Ok(DistanceMap {
        grid,
        values,
        states,
        meta: MapMeta {
            variant,
            epsilon,
            xi: h.xi.unwrap_or(1.0),
            seeds: h.seeds.unwrap_or_default(),
            backend: h.backend.unwrap_or_default(),
        },
        stats: SolveStats::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tessellation::build_s1;

    fn header() -> GridHeader {
        let g = ProductGrid::new(SpatialGrid::new(&[3, 2], 0.5, &[0.0, 1.0]).unwrap(), build_s1(4).unwrap()).unwrap();
        GridHeader::for_grid(&g, "density")
    }

    #[test]
    fn header_fields() {
        let h = header();
        let line = serde_json::to_string(&h).unwrap();
        assert!(line.starts_with(r#"{"magic":"POGRID1","d":2,"dims":[3,2,4],"h":0.5,"origin":[0.0,1.0],"sphere":{"kind":"s1_uniform","k_or_N":4},"quantity":"density"}"#), "{line}");
        assert_eq!(h.grid().unwrap().len(), 24);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let h = header();
        let mut buf = Vec::new();
        write_grid(&mut buf, &h, &[1.0; 24]).unwrap();
        let nl = buf.iter().position(|&b| b == b'\n').unwrap() as u64;
        buf.truncate(buf.len() - 6);
        match read_grid(&mut &buf[..]) {
            Err(Error::Parse { offset, msg }) => {
                assert_eq!(offset, nl + 1 + 4 * 22);
                assert!(msg.contains("24") && msg.contains("22"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        match read_grid(&mut &b"{\"magic\":\"POGRID1\",\"d\":}\n"[..]) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 23),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_grid(&mut &b"{\"magic\":\"POGRID2\"}\n"[..]), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(read_grid(&mut &b"{\"magic\""[..]), Err(Error::Parse { offset: 8, .. })));
    }
}
