//! Discrete measures on H^n and transport plans between them, with the JSON
//! schemas used by the command-line tools.

use crate::error::{HeisError, Result};
use crate::group::{Coords, GroupPoint};
use serde::{Deserialize, Serialize};

/// A weighted point cloud; weights are positive and sum to 1 (within 1e-12).
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub points: Vec<GroupPoint>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<GroupPoint>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(HeisError::InvalidArgument(format!(
                "measure needs matching nonempty points/weights, got {} / {}",
                points.len(),
                weights.len()
            )));
        }
        let len = points[0].coords().len();
        if points.iter().any(|p| p.coords().len() != len) {
            return Err(HeisError::DimensionMismatch { expected: len, got: 0 });
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(HeisError::InvalidArgument(
                "measure weights must be positive and finite".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(HeisError::InvalidArgument(format!(
                "measure weights must sum to 1 (got {total}); normalize first"
            )));
        }
        Ok(Self { points, weights })
    }

    /// Builds a probability measure by normalizing the given weights.
    pub fn normalized(points: Vec<GroupPoint>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(HeisError::InvalidArgument(
                "cannot normalize weights with nonpositive total".into(),
            ));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Self::new(points, weights)
    }

    /// A Dirac mass.
    pub fn dirac(point: GroupPoint) -> Self {
        Self {
            points: vec![point],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n(&self) -> usize {
        self.points[0].n()
    }

    /// Ambient axis-aligned bounding box of the support.
    pub fn bounding_box(&self) -> (Coords, Coords) {
        let dim = self.points[0].coords().len();
        let mut lo: Coords = smallvec::smallvec![f64::INFINITY; dim];
        let mut hi: Coords = smallvec::smallvec![f64::NEG_INFINITY; dim];
        for p in &self.points {
            for (a, c) in p.coords().iter().enumerate() {
                lo[a] = lo[a].min(*c);
                hi[a] = hi[a].max(*c);
            }
        }
        (lo, hi)
    }
}

/// One mass-carrying pair of a plan: (source index, target index, mass).
pub type PlanPair = (usize, usize, f64);

/// A transport plan between two discrete measures, stored as its support.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub pairs: Vec<PlanPair>,
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
}

impl TransportPlan {
    /// Validates nonnegativity and marginal constraints (within 1e-10).
    pub fn new(pairs: Vec<PlanPair>, mu: DiscreteMeasure, nu: DiscreteMeasure) -> Result<Self> {
        let plan = Self { pairs, mu, nu };
        plan.check_marginals(1e-10)?;
        Ok(plan)
    }

    pub fn check_marginals(&self, tol: f64) -> Result<()> {
        let mut row = vec![0.0; self.mu.len()];
        let mut col = vec![0.0; self.nu.len()];
        for &(i, j, m) in &self.pairs {
            if i >= self.mu.len() || j >= self.nu.len() {
                return Err(HeisError::InvalidArgument(format!(
                    "plan pair ({i},{j}) out of range"
                )));
            }
            if m < -tol {
                return Err(HeisError::InvalidArgument(format!(
                    "negative mass {m} on pair ({i},{j})"
                )));
            }
            row[i] += m;
            col[j] += m;
        }
        for (r, w) in row.iter().zip(&self.mu.weights) {
            if (r - w).abs() > tol {
                return Err(HeisError::Infeasible(format!(
                    "row marginal {r} != mu weight {w}"
                )));
            }
        }
        for (c, w) in col.iter().zip(&self.nu.weights) {
            if (c - w).abs() > tol {
                return Err(HeisError::Infeasible(format!(
                    "column marginal {c} != nu weight {w}"
                )));
            }
        }
        Ok(())
    }
}

/// JSON schema of one measure: {"points": [[...]], "weights": [...]}.
#[derive(Debug, Serialize, Deserialize)]
pub struct MeasureJson {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl MeasureJson {
    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        let points: Result<Vec<GroupPoint>> = self
            .points
            .iter()
            .map(|c| GroupPoint::new(Coords::from_slice(c)))
            .collect();
        DiscreteMeasure::new(points?, self.weights.clone())
    }

    pub fn from_measure(m: &DiscreteMeasure) -> Self {
        Self {
            points: m.points.iter().map(|p| p.coords().to_vec()).collect(),
            weights: m.weights.clone(),
        }
    }
}

/// JSON schema of a measure pair file.
#[derive(Debug, Serialize, Deserialize)]
pub struct MeasurePairJson {
    pub mu: MeasureJson,
    pub nu: MeasureJson,
}

/// JSON schema of a plan: {"pairs": [[i, j, mass]]}.
#[derive(Debug, Serialize, Deserialize)]
pub struct PlanJson {
    pub pairs: Vec<(usize, usize, f64)>,
}
