//! Single-pass fast marching over the product grid.

mod causality;
mod hopf_lax;
mod residual;
mod scheme;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::cost::CostField;
use crate::error::{domain, Result};
use crate::manifold::{ModelParams, PointPO, Variant};
use crate::tessellation::ProductGrid;

pub use causality::{check_causality, CausalityReport};
pub use hopf_lax::{hopf_lax_update, simplex_update, HopfLaxResult};
pub use residual::{eikonal_residual, ResidualStats};
pub use scheme::{hamiltonian_update, solve_positive_part, Hamiltonian, SemiLagrangian, UpdateScheme, MAX_TERMS};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    SemiLagrangian,
    HamiltonianFd,
    #[default]
    Auto,
}

impl std::str::FromStr for Backend {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi_lagrangian" | "sl" => Ok(Backend::SemiLagrangian),
            "hamiltonian_fd" | "hamiltonian" => Ok(Backend::HamiltonianFd),
            "auto" => Ok(Backend::Auto),
            _ => domain(format!("unknown backend '{s}'")),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::SemiLagrangian => "semi_lagrangian",
            Backend::HamiltonianFd => "hamiltonian_fd",
            Backend::Auto => "auto",
        })
    }
}

impl Backend {
    pub fn resolve(self, dim: usize) -> Result<Backend> {
        match (self, dim) {
            (Backend::Auto, 2) => Ok(Backend::SemiLagrangian),
            (Backend::Auto, _) => Ok(Backend::HamiltonianFd),
            (Backend::SemiLagrangian, 3) => domain("semi-Lagrangian stencils are not available in 3D"),
            (b, _) => Ok(b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub backend: Backend,
    /// Early exit once all these states are accepted.
    #[serde(default)]
    pub stop: Vec<PointPO>,
    /// Largest admissible semi-Lagrangian stencil offset, in grid units.
    pub stencil_cap: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { backend: Backend::Auto, stop: Vec::new(), stencil_cap: 64.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeState {
    Far,
    Trial,
    Accepted,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub accepted: usize,
    pub pops: usize,
    /// Accepted values were non-decreasing in acceptance order.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    pub variant: Variant,
    pub epsilon: f64,
    pub xi: f64,
    pub seeds: Vec<PointPO>,
    pub backend: Backend,
}

/// Solved distance map `U(p) = d_F(seed, p)`.
#[derive(Clone, Debug)]
pub struct DistanceMap {
    pub grid: ProductGrid,
    pub values: Vec<f64>,
    pub states: Vec<NodeState>,
    pub meta: MapMeta,
    pub stats: SolveStats,
}

impl DistanceMap {
    pub fn params(&self) -> ModelParams {
        ModelParams { variant: self.meta.variant, epsilon: self.meta.epsilon, allow_exact: false }
    }

    /// Value at the node nearest to `p`.
    pub fn at(&self, p: &PointPO) -> Result<f64> {
        Ok(self.values[self.grid.snap(p)?])
    }

    /// Interpolated value at an arbitrary state.
    pub fn interpolate(&self, p: &PointPO) -> Result<f64> {
        self.grid.interpolate(&self.values, p)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn snap_seeds(grid: &ProductGrid, seeds: &[PointPO]) -> Result<Vec<usize>> {
    if seeds.is_empty() {
        return domain("at least one seed is required");
    }
    seeds
        .iter()
        .map(|s| {
            let i = grid.snap(s)?;
            if grid.is_masked(i) {
                return domain(format!("seed {:?} lies on a masked node", s.x.as_slice()));
            }
            Ok(i)
        })
        .collect()
}

/// Runs the label-setting loop for an arbitrary causal scheme.
pub fn march<S: UpdateScheme + ?Sized>(
    scheme: &S,
    seeds: &[usize],
    stop: &[usize],
) -> (Vec<f64>, Vec<NodeState>, SolveStats) {
    let grid = scheme.grid();
    let n = grid.len();
    let mut tent = vec![f64::INFINITY; n];
    let mut acc = vec![f64::INFINITY; n];
    let mut states = vec![NodeState::Far; n];
    let mut heap = BinaryHeap::new();
    for &s in seeds {
        tent[s] = 0.0;
        states[s] = NodeState::Trial;
        heap.push(Entry(0.0, s));
    }
    let mut remaining: Vec<usize> = stop.to_vec();
    remaining.sort_unstable();
    remaining.dedup();
    let mut stop_left = remaining.len();
    let mut stats = SolveStats { monotone: true, ..Default::default() };
    let mut last = 0.0;
    let mut deps = Vec::with_capacity(64);
    while let Some(Entry(v, q)) = heap.pop() {
        stats.pops += 1;
        if states[q] == NodeState::Accepted || v > tent[q] {
            continue;
        }
        states[q] = NodeState::Accepted;
        acc[q] = v;
        stats.accepted += 1;
        // Rounding in the local solves may reorder exact ties.
        if v < last - 1e-12 * (1.0 + last) {
            stats.monotone = false;
        }
        last = last.max(v);
        if stop_left > 0 && remaining.binary_search(&q).is_ok() {
            stop_left -= 1;
            if stop_left == 0 {
                break;
            }
        }
        deps.clear();
        scheme.dependents(q, &mut deps);
        for &p in &deps {
            if states[p] == NodeState::Accepted || grid.is_masked(p) {
                continue;
            }
            let cand = scheme.update_via(p, q, &acc);
            if cand < tent[p] {
                tent[p] = cand;
                states[p] = NodeState::Trial;
                heap.push(Entry(cand, p));
            }
        }
    }
    (tent, states, stats)
}

/// Solves for `U` with the given seeds.
pub fn fast_march(
    grid: &ProductGrid,
    cost: &CostField,
    params: &ModelParams,
    seeds: &[PointPO],
    config: &SolveConfig,
) -> Result<DistanceMap> {
    cost.check_len(grid.len())?;
    let seed_idx = snap_seeds(grid, seeds)?;
    let stop: Vec<usize> = config.stop.iter().map(|p| grid.snap(p)).collect::<Result<_>>()?;
    let backend = config.backend.resolve(grid.dim())?;
    let (values, states, stats) = match backend {
        Backend::SemiLagrangian => {
            let s = SemiLagrangian::new(grid, cost, params, config.stencil_cap)?;
            march(&s, &seed_idx, &stop)
        }
        _ => {
            let s = Hamiltonian::new(grid, cost, params)?;
            march(&s, &seed_idx, &stop)
        }
    };
    Ok(DistanceMap {
        grid: grid.clone(),
        values,
        states,
        meta: MapMeta { variant: params.variant, epsilon: params.epsilon, xi: cost.xi, seeds: seeds.to_vec(), backend },
        stats,
    })
}

/// Builds the scheme a map was solved with.
pub fn scheme_for<'a>(
    map: &'a DistanceMap,
    cost: &'a CostField,
    stencil_cap: f64,
) -> Result<Box<dyn UpdateScheme + 'a>> {
    let params = map.params();
    Ok(match map.meta.backend.resolve(map.grid.dim())? {
        Backend::SemiLagrangian => Box::new(SemiLagrangian::new(&map.grid, cost, &params, stencil_cap)?),
        _ => Box::new(Hamiltonian::new(&map.grid, cost, &params)?),
    })
}

/// Largest change `|Λu − u|` over accepted non-seed nodes.
pub fn fixed_point_defect(map: &DistanceMap, scheme: &dyn UpdateScheme) -> f64 {
    let acc: Vec<f64> = map
        .values
        .iter()
        .zip(&map.states)
        .map(|(&v, &s)| if s == NodeState::Accepted { v } else { f64::INFINITY })
        .collect();
    let mut worst: f64 = 0.0;
    for (i, &u) in acc.iter().enumerate() {
        if !u.is_finite() || u == 0.0 {
            continue;
        }
        let lu = scheme.update(i, &acc);
        worst = worst.max((lu - u).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tessellation::{build_s1, SpatialGrid};

    fn small(variant: Variant) -> (ProductGrid, CostField, ModelParams) {
        let g = ProductGrid::new(SpatialGrid::centered(2, 21, 0.4).unwrap(), build_s1(16).unwrap()).unwrap();
        (g, CostField::uniform(1.0, 1.0).unwrap(), ModelParams::new(variant, 0.3).unwrap())
    }

    #[test]
    fn seed_is_zero_and_fixed_point() {
        for variant in [Variant::Symmetric, Variant::Forward] {
            for backend in [Backend::SemiLagrangian, Backend::HamiltonianFd] {
                let (g, c, p) = small(variant);
                let cfg = SolveConfig { backend, ..Default::default() };
                let m = fast_march(&g, &c, &p, &[PointPO::planar(0.0, 0.0, 0.0)], &cfg).unwrap();
                assert_eq!(m.at(&PointPO::planar(0.0, 0.0, 0.0)).unwrap(), 0.0);
                assert!(m.stats.monotone, "{variant} {backend}");
                assert_eq!(m.stats.accepted, g.len());
                let s = scheme_for(&m, &c, 64.0).unwrap();
                assert!(fixed_point_defect(&m, s.as_ref()) < 1e-9, "{variant} {backend}");
            }
        }
    }

    #[test]
    fn seeds_validated() {
        let (g, c, p) = small(Variant::Symmetric);
        assert!(fast_march(&g, &c, &p, &[], &SolveConfig::default()).is_err());
        assert!(fast_march(&g, &c, &p, &[PointPO::planar(5.0, 0.0, 0.0)], &SolveConfig::default()).is_err());
        let mut mask = vec![false; g.spatial.len()];
        mask[g.spatial.nearest(&PointPO::planar(0.0, 0.0, 0.0).x).unwrap()] = true;
        let gm = ProductGrid::new(g.spatial.clone().with_mask(mask).unwrap(), g.sphere.clone()).unwrap();
        assert!(fast_march(&gm, &c, &p, &[PointPO::planar(0.0, 0.0, 0.0)], &SolveConfig::default()).is_err());
    }

    #[test]
    fn stop_set_exits_early() {
        let (g, c, p) = small(Variant::Symmetric);
        let cfg = SolveConfig { stop: vec![PointPO::planar(0.04, 0.0, 0.0)], ..Default::default() };
        let m = fast_march(&g, &c, &p, &[PointPO::planar(0.0, 0.0, 0.0)], &cfg).unwrap();
        assert!(m.stats.accepted < g.len());
        assert!(m.at(&PointPO::planar(0.04, 0.0, 0.0)).unwrap().is_finite());
    }
}
