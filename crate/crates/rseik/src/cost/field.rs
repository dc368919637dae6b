use crate::error::{domain, Result};
use crate::manifold::{CostSample, PointPO, DEFAULT_DELTA};
use crate::tessellation::ProductGrid;

/// Orientation density `W` sampled on a product grid.
#[derive(Clone, Debug)]
pub struct DensityField {
    pub grid: ProductGrid,
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: ProductGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return domain(format!("density has {} values, grid has {} nodes", values.len(), grid.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("density values must be finite");
        }
        Ok(DensityField { grid, values })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-node spatial and angular costs.
///
/// A field with a single entry is uniform over the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CostField {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub xi: f64,
    pub delta: f64,
}

impl CostField {
    pub fn uniform(c1: f64, c2: f64) -> Result<Self> {
        CostSample::new(c1, c2)?;
        Ok(CostField { c1: vec![c1], c2: vec![c2], xi: c1 / c2, delta: DEFAULT_DELTA })
    }

    /// `C1 = ξ·C`, `C2 = C`.
    pub fn from_base(c: Vec<f64>, xi: f64) -> Result<Self> {
        if !(xi > 0.0) || !xi.is_finite() {
            return domain(format!("xi must be positive, got {xi}"));
        }
        let f = CostField { c1: c.iter().map(|v| xi * v).collect(), c2: c, xi, delta: DEFAULT_DELTA };
        f.check_floor()?;
        Ok(f)
    }

    pub fn is_uniform(&self) -> bool {
        self.c1.len() == 1
    }

    pub fn check_len(&self, nodes: usize) -> Result<()> {
        if !self.is_uniform() && (self.c1.len() != nodes || self.c2.len() != nodes) {
            return domain(format!("cost field has {} entries, grid has {} nodes", self.c1.len(), nodes));
        }
        Ok(())
    }

    fn check_floor(&self) -> Result<()> {
        let bad = self
            .c1
            .iter()
            .chain(&self.c2)
            .position(|&c| !(c >= self.delta) || !c.is_finite());
        if let Some(i) = bad {
            return domain(format!("cost entry {i} below floor {}", self.delta));
        }
        Ok(())
    }

    #[inline]
    pub fn sample(&self, idx: usize) -> CostSample {
        let i = if self.c1.len() == 1 { 0 } else { idx };
        CostSample { c1: self.c1[i], c2: self.c2[i] }
    }

    /// Interpolated costs at an arbitrary state.
    pub fn sample_at(&self, grid: &ProductGrid, p: &PointPO) -> Result<CostSample> {
        if self.is_uniform() {
            return Ok(self.sample(0));
        }
        let mut w = Vec::with_capacity(24);
        grid.interp_weights(p, &mut w)?;
        let (mut c1, mut c2) = (0.0, 0.0);
        for (i, wi) in w {
            c1 += wi * self.c1[i];
            c2 += wi * self.c2[i];
        }
        Ok(CostSample { c1, c2 })
    }

    pub fn min_c1(&self) -> f64 {
        self.c1.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn min_c2(&self) -> f64 {
        self.c2.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_c(&self) -> f64 {
        self.c1.iter().chain(&self.c2).cloned().fold(0.0, f64::max)
    }
}

/// `C = 1/(1 + σ|W₊/‖W₊‖∞|^p)`, `C1 = ξC`, `C2 = C`.
///
/// A density with no positive part yields `C ≡ 1`.
pub fn cost_from_density(w: &DensityField, sigma: f64, p_exp: u32, xi: f64) -> Result<CostField> {
    if !(sigma >= 0.0) || p_exp == 0 {
        return domain(format!("need sigma >= 0 and p >= 1, got sigma={sigma}, p={p_exp}"));
    }
    let wmax = w.values.iter().map(|v| v.max(0.0)).fold(0.0, f64::max);
    let c: Vec<f64> = if wmax > 0.0 {
        w.values
            .iter()
            .map(|v| 1.0 / (1.0 + sigma * (v.max(0.0) / wmax).powi(p_exp as i32)))
            .collect()
    } else {
        vec![1.0; w.values.len()]
    };
    CostField::from_base(c, xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tessellation::{build_s1, SpatialGrid};

    fn grid() -> ProductGrid {
        ProductGrid::new(SpatialGrid::new(&[3, 3], 1.0, &[0.0, 0.0]).unwrap(), build_s1(4).unwrap()).unwrap()
    }

    #[test]
    fn density_to_cost() {
        let g = grid();
        let zero = DensityField::new(g.clone(), vec![0.0; g.len()]).unwrap();
        assert!(cost_from_density(&zero, 3.0, 3, 0.1).unwrap().c2.iter().all(|&c| c == 1.0));
        let negative = DensityField::new(g.clone(), vec![-2.0; g.len()]).unwrap();
        assert!(cost_from_density(&negative, 3.0, 3, 0.1).unwrap().c2.iter().all(|&c| c == 1.0));
        let vals: Vec<f64> = (0..g.len()).map(|i| i as f64 * 0.1).collect();
        let c = cost_from_density(&DensityField::new(g.clone(), vals).unwrap(), 3.0, 3, 0.1).unwrap();
        assert!((c.c2[g.len() - 1] - 0.25).abs() < 1e-15);
        for i in 0..g.len() {
            assert_eq!(c.c1[i], 0.1 * c.c2[i]);
            assert!(c.c2[i] >= 0.25 && c.c2[i] <= 1.0);
        }
    }

    #[test]
    fn sizes_checked() {
        assert!(DensityField::new(grid(), vec![0.0; 3]).is_err());
        let c = CostField::from_base(vec![1.0; 3], 1.0).unwrap();
        assert!(c.check_len(36).is_err());
        assert!(CostField::from_base(vec![0.0; 3], 1.0).is_err());
    }
}
