//! Explicit upwind time-stepping for the auxiliary initial value problem
//! `∂U/∂r = 1 − F*(p, dU)`, `U(·, 0) = δ` (zero at the seed, `+∞`
//! elsewhere). An independent oracle for the fast-marching solver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostField;
use crate::error::{domain, Error, Result};
use crate::manifold::{ModelParams, PointPO};
use crate::solver_fm::{Backend, DistanceMap, Hamiltonian, MapMeta, NodeState, SolveStats};
use crate::tessellation::ProductGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterConfig {
    /// Artificial time step; derived from a CFL bound when absent.
    pub epsilon_step: Option<f64>,
    pub theta: f64,
    pub max_outer: usize,
    /// Finite stand-in for `+∞`; `10 ×` the grid diameter in cost units when absent.
    pub clamp: Option<f64>,
}

impl Default for IterConfig {
    fn default() -> Self {
        IterConfig { epsilon_step: None, theta: 1e-4, max_outer: 100_000, clamp: None }
    }
}

/// The explicit scheme: upwind Hamiltonian differences (the same local
/// discretization as the fast-marching backend) advanced in artificial time.
pub struct IterScheme<'a> {
    grid: &'a ProductGrid,
    ham: Hamiltonian<'a>,
}

impl<'a> IterScheme<'a> {
    pub fn new(grid: &'a ProductGrid, cost: &'a CostField, params: &ModelParams) -> Result<Self> {
        cost.check_len(grid.len())?;
        Ok(IterScheme { grid, ham: Hamiltonian::new(grid, cost, params)? })
    }

    /// Largest step keeping the update monotone: `dt · max √(Σ aᵢ) ≤ 0.9`.
    pub fn default_step(&self) -> f64 {
        let worst = (0..self.grid.len())
            .map(|p| self.ham.coefficient_sum(p))
            .fold(0.0, f64::max);
        0.9 / worst.sqrt()
    }

    /// `F*(p, DU(p))` from upwind differences.
    #[inline]
    pub fn dual_at(&self, idx: usize, u: &[f64]) -> f64 {
        self.ham.discrete_dual(idx, u)
    }
}

/// One explicit step `u′ = min(clamp, u + dt(1 − F*(DU)))`; seeds re-pinned
/// to zero and masked nodes held at the clamp.
pub fn iterate_step(scheme: &IterScheme, u: &[f64], seeds: &[usize], dt: f64, clamp: f64, out: &mut [f64]) {
    let g = scheme.grid;
    out.par_iter_mut().enumerate().for_each(|(i, o)| {
        *o = if g.is_masked(i) {
            clamp
        } else {
            (u[i] + dt * (1.0 - scheme.dual_at(i, u))).min(clamp)
        };
    });
    for &s in seeds {
        out[s] = 0.0;
    }
}

#[derive(Clone, Debug)]
pub struct IterOutcome {
    pub map: DistanceMap,
    pub iterations: usize,
    pub residual: f64,
    pub dt: f64,
}

pub fn iterative_solve(
    grid: &ProductGrid,
    cost: &CostField,
    params: &ModelParams,
    seeds: &[PointPO],
    config: &IterConfig,
) -> Result<IterOutcome> {
    if !(config.theta > 0.0) {
        return domain("theta must be positive");
    }
    if seeds.is_empty() {
        return domain("at least one seed is required");
    }
    let scheme = IterScheme::new(grid, cost, params)?;
    let seed_idx: Vec<usize> = seeds
        .iter()
        .map(|p| {
            let i = grid.snap(p)?;
            if grid.is_masked(i) {
                return domain("seed lies on a masked node");
            }
            Ok(i)
        })
        .collect::<Result<_>>()?;
    let dt = config.epsilon_step.unwrap_or_else(|| scheme.default_step());
    if !(dt > 0.0) {
        return domain("time step must be positive");
    }
    let diam = grid.spatial.diameter() * cost.max_c() + std::f64::consts::PI * cost.max_c();
    let clamp = config.clamp.unwrap_or(10.0 * diam);
    let mut u = vec![clamp; grid.len()];
    for &s in &seed_idx {
        u[s] = 0.0;
    }
    let mut next = vec![0.0; grid.len()];
    let mut residual = f64::INFINITY;
    for it in 1..=config.max_outer {
        iterate_step(&scheme, &u, &seed_idx, dt, clamp, &mut next);
        let (res, bad) = u
            .par_iter()
            .zip(&next)
            .map(|(a, b)| ((a - b).abs(), !b.is_finite() || *b < -1e-9 * clamp))
            .reduce(|| (0.0, false), |x, y| (x.0.max(y.0), x.1 || y.1));
        if bad {
            return Err(Error::Instability(format!(
                "explicit scheme diverged at iteration {it} with dt = {dt:.3e}; try dt = {:.3e}",
                dt / 2.0
            )));
        }
        std::mem::swap(&mut u, &mut next);
        residual = res;
        if res < config.theta {
            let values: Vec<f64> = u.iter().map(|&v| if v >= clamp { f64::INFINITY } else { v }).collect();
            let states = values
                .iter()
                .map(|v| if v.is_finite() { NodeState::Accepted } else { NodeState::Far })
                .collect();
            let map = DistanceMap {
                grid: grid.clone(),
                values,
                states,
                meta: MapMeta {
                    variant: params.variant,
                    epsilon: params.epsilon,
                    xi: cost.xi,
                    seeds: seeds.to_vec(),
                    backend: Backend::HamiltonianFd,
                },
                stats: SolveStats { accepted: grid.len(), pops: it, monotone: true },
            };
            return Ok(IterOutcome { map, iterations: it, residual, dt });
        }
    }
    Err(Error::Convergence { iterations: config.max_outer, residual })
}
