//! Communication-aware coverage potentials.
//!
//! The region of interest is the concentration ellipsoid of a bivariate
//! Gaussian, discretized into a density-weighted quadrature grid. The unary
//! potential of a candidate position is the density-weighted best received
//! signal over the region, taking the max over the candidate and the rest
//! of the neighborhood; the pairwise potential is the received signal
//! strength between two agents. Both are squashed from dBm into `(0, 1]`
//! by an affine, order-preserving map so they can serve as strictly
//! positive factor potentials.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game_core::PotentialPair;
use crate::net_topology::{LinkModelParams, Position, TopologyError};

/// Lower clamp of the squash map, keeping potentials strictly positive.
const SQUASH_EPS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum CoverageError {
    #[error("covariance must be symmetric positive-definite: {0}")]
    BadCovariance(String),
    #[error("confidence must lie in (0, 1), got {0}")]
    BadConfidence(f64),
    #[error("grid resolution must be >= 2, got {0}")]
    BadResolution(usize),
    #[error("no grid point fell inside the ellipsoid")]
    EmptyGrid,
    #[error(transparent)]
    Link(#[from] TopologyError),
}

/// Region of interest: the concentration ellipsoid of a bivariate Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiGaussian {
    /// Center of the Gaussian, meters.
    pub mean: [f64; 2],
    /// 2x2 covariance in meters^2, row-major.
    pub covariance: [[f64; 2]; 2],
    /// Probability mass enclosed by the ellipsoid, in (0, 1).
    pub confidence: f64,
}

impl RoiGaussian {
    pub fn new(
        mean: [f64; 2],
        covariance: [[f64; 2]; 2],
        confidence: f64,
    ) -> Result<Self, CoverageError> {
        let roi = Self {
            mean,
            covariance,
            confidence,
        };
        roi.validate()?;
        Ok(roi)
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        let c = &self.covariance;
        let finite = self.mean.iter().all(|v| v.is_finite())
            && c.iter().flatten().all(|v| v.is_finite())
            && self.confidence.is_finite();
        if !finite {
            return Err(CoverageError::BadCovariance("non-finite entry".into()));
        }
        if (c[0][1] - c[1][0]).abs() > 1e-9 * (1.0 + c[0][1].abs()) {
            return Err(CoverageError::BadCovariance(format!(
                "asymmetric off-diagonals {} vs {}",
                c[0][1], c[1][0]
            )));
        }
        // Positive leading principal minors.
        if c[0][0] <= 0.0 || self.det() <= 0.0 {
            return Err(CoverageError::BadCovariance(format!(
                "leading minors {} and {}",
                c[0][0],
                self.det()
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(CoverageError::BadConfidence(self.confidence));
        }
        Ok(())
    }

    fn det(&self) -> f64 {
        let c = &self.covariance;
        c[0][0] * c[1][1] - c[0][1] * c[1][0]
    }

    /// Squared Mahalanobis distance of a point from the mean.
    pub fn mahalanobis_sq(&self, p: [f64; 2]) -> f64 {
        let dx = p[0] - self.mean[0];
        let dy = p[1] - self.mean[1];
        let c = &self.covariance;
        let det = self.det();
        (c[1][1] * dx * dx - 2.0 * c[0][1] * dx * dy + c[0][0] * dy * dy) / det
    }

    /// Chi-square quantile with two degrees of freedom at this confidence:
    /// the Mahalanobis-squared radius of the ellipsoid.
    pub fn chi2_radius_sq(&self) -> f64 {
        -2.0 * (1.0 - self.confidence).ln()
    }
}

impl Default for RoiGaussian {
    /// A 200 m isotropic Gaussian at the origin with a 95% ellipsoid.
    fn default() -> Self {
        Self {
            mean: [0.0, 0.0],
            covariance: [[200.0 * 200.0, 0.0], [0.0, 200.0 * 200.0]],
            confidence: 0.95,
        }
    }
}

/// Density-weighted sample points inside the ROI ellipsoid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub points: Vec<[f64; 2]>,
    /// Strictly positive weights summing to one.
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Discretizes the ellipsoid with a cell-centered regular grid over its
/// bounding box, keeping interior points and weighting them by the Gaussian
/// density, renormalized to sum one.
pub fn build_grid(roi: &RoiGaussian, resolution: usize) -> Result<QuadratureGrid, CoverageError> {
    roi.validate()?;
    if resolution < 2 {
        return Err(CoverageError::BadResolution(resolution));
    }
    let r_sq = roi.chi2_radius_sq();
    // Exact bounding box of the ellipse along each axis.
    let half_x = (r_sq * roi.covariance[0][0]).sqrt();
    let half_y = (r_sq * roi.covariance[1][1]).sqrt();

    let mut points = Vec::new();
    let mut weights = Vec::new();
    for iy in 0..resolution {
        let fy = (iy as f64 + 0.5) / resolution as f64;
        let y = roi.mean[1] - half_y + 2.0 * half_y * fy;
        for ix in 0..resolution {
            let fx = (ix as f64 + 0.5) / resolution as f64;
            let x = roi.mean[0] - half_x + 2.0 * half_x * fx;
            let m_sq = roi.mahalanobis_sq([x, y]);
            if m_sq <= r_sq {
                points.push([x, y]);
                // Cells share one area, so the weight is the density alone;
                // the Gaussian normalizer cancels in the renormalization.
                weights.push((-0.5 * m_sq).exp());
            }
        }
    }
    if points.is_empty() {
        return Err(CoverageError::EmptyGrid);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(QuadratureGrid { points, weights })
}

/// Affine squash from dBm into `(0, 1]`: the receiver sensitivity maps to
/// (almost) zero and the power ceiling at the reference distance maps to
/// one. Order-preserving, so it never reorders the game's preferences.
fn squash_dbm(link: &LinkModelParams, v: f64) -> f64 {
    let floor = link.rx_sensitivity_dbm;
    let ceil = link.power_ceiling_dbm();
    ((v - floor) / (ceil - floor)).clamp(SQUASH_EPS, 1.0)
}

/// Received power at a ground point from an agent position, using the full
/// 3-D distance including altitude.
fn signal_at_point(link: &LinkModelParams, agent: &Position, point: [f64; 2]) -> f64 {
    let dx = agent.x - point[0];
    let dy = agent.y - point[1];
    let d = (dx * dx + dy * dy + agent.z * agent.z).sqrt();
    link.received_power_at(d)
}

/// Expected best signal over the ROI from the candidate and its
/// neighborhood context, squashed into `(0, 1]`.
///
/// Each grid point contributes its weight times the maximum received power
/// over the candidate and every context position; the weighted dBm average
/// is squashed once at the end.
pub fn unary_coverage(
    candidate: &Position,
    context: &[Position],
    grid: &QuadratureGrid,
    link: &LinkModelParams,
) -> f64 {
    let mut acc = 0.0;
    for (point, &w) in grid.points.iter().zip(&grid.weights) {
        let mut best = signal_at_point(link, candidate, *point);
        for other in context {
            let s = signal_at_point(link, other, *point);
            if s > best {
                best = s;
            }
        }
        acc += w * best;
    }
    squash_dbm(link, acc)
}

/// Batch form of [`unary_coverage`]: evaluates many candidates against one
/// shared context, computing the per-point context maximum once. Returns
/// exactly what mapping `unary_coverage` over the candidates would.
pub fn unary_coverage_batch(
    candidates: &[Position],
    context: &[Position],
    grid: &QuadratureGrid,
    link: &LinkModelParams,
) -> Vec<f64> {
    let context_best: Vec<f64> = grid
        .points
        .iter()
        .map(|&point| {
            let mut best = f64::NEG_INFINITY;
            for other in context {
                let s = signal_at_point(link, other, point);
                if s > best {
                    best = s;
                }
            }
            best
        })
        .collect();
    candidates
        .iter()
        .map(|candidate| {
            let mut acc = 0.0;
            for ((point, &w), &ctx) in grid.points.iter().zip(&grid.weights).zip(&context_best) {
                let mut best = signal_at_point(link, candidate, *point);
                if ctx > best {
                    best = ctx;
                }
                acc += w * best;
            }
            squash_dbm(link, acc)
        })
        .collect()
}

/// Received signal strength between two agents, squashed into `(0, 1]`.
/// Symmetric and strictly decreasing in distance beyond the reference.
pub fn pairwise_coverage(a: &Position, b: &Position, link: &LinkModelParams) -> f64 {
    squash_dbm(link, link.received_power_at(a.distance(b)))
}

/// Assembles the coverage potentials: unary from the expected best signal
/// over the ROI grid, pairwise from the inter-agent signal strength. Both
/// closures are stateless and safe for concurrent evaluation.
pub fn make_coverage_potentials(
    roi: &RoiGaussian,
    resolution: usize,
    link: &LinkModelParams,
) -> Result<PotentialPair, CoverageError> {
    link.validate()?;
    let grid = std::sync::Arc::new(build_grid(roi, resolution)?);
    let grid_batch = grid.clone();
    let link_u = *link;
    let link_p = *link;
    let link_b = *link;
    Ok(PotentialPair::new(
        move |candidate: &Position, context: &[Position]| {
            unary_coverage(candidate, context, &grid, &link_u)
        },
        move |a: &Position, b: &Position| pairwise_coverage(a, b, &link_p),
    )
    .with_unary_batch(move |candidates: &[Position], context: &[Position]| {
        unary_coverage_batch(candidates, context, &grid_batch, &link_b)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos(x: f64, y: f64, z: f64) -> Position {
        Position::new(x, y, z).unwrap()
    }

    fn unit_roi() -> RoiGaussian {
        RoiGaussian::new([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], 0.95).unwrap()
    }

    #[test]
    fn roi_validation() {
        assert!(RoiGaussian::new([0.0, 0.0], [[1.0, 0.2], [0.3, 1.0]], 0.95).is_err());
        assert!(RoiGaussian::new([0.0, 0.0], [[-1.0, 0.0], [0.0, 1.0]], 0.95).is_err());
        assert!(RoiGaussian::new([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], 0.95).is_err());
        assert!(RoiGaussian::new([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], 1.0).is_err());
        assert!(RoiGaussian::new([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], 0.5).is_ok());
    }

    #[test]
    fn chi2_radius_matches_quantile() {
        // 95% two-dof chi-square quantile: radius ~ 2.4477.
        let roi = unit_roi();
        assert!((roi.chi2_radius_sq().sqrt() - 2.4477).abs() < 1e-4);
    }

    #[test]
    fn grid_points_stay_inside_circle() {
        let roi = unit_roi();
        let grid = build_grid(&roi, 25).unwrap();
        let r = roi.chi2_radius_sq().sqrt();
        for p in &grid.points {
            let norm = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!(norm <= r + 1e-12, "point at {norm} outside radius {r}");
        }
        // The grid actually fills the circle out to its boundary.
        let max_norm = grid
            .points
            .iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
            .fold(0.0, f64::max);
        assert!(max_norm > 0.9 * r);
    }

    #[test]
    fn grid_weights_sum_to_one_and_peak_at_mean() {
        let roi = RoiGaussian::new([3.0, -2.0], [[4.0, 1.0], [1.0, 2.0]], 0.9).unwrap();
        let grid = build_grid(&roi, 31).unwrap();
        let sum: f64 = grid.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(grid.weights.iter().all(|&w| w > 0.0));

        // The heaviest point is the one nearest the mean.
        let (max_idx, _) = grid
            .weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let (near_idx, _) = grid
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, roi.mahalanobis_sq(*p)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert_eq!(max_idx, near_idx);
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert_eq!(
            build_grid(&unit_roi(), 1),
            Err(CoverageError::BadResolution(1))
        );
        let degenerate = RoiGaussian {
            mean: [0.0, 0.0],
            covariance: [[1.0, 1.0], [1.0, 1.0]],
            confidence: 0.95,
        };
        assert!(build_grid(&degenerate, 10).is_err());
    }

    #[test]
    fn unary_singleton_is_weighted_signal_average() {
        let link = LinkModelParams::default();
        let roi = RoiGaussian::default();
        let grid = build_grid(&roi, 20).unwrap();
        let agent = pos(10.0, -20.0, 50.0);
        let direct: f64 = grid
            .points
            .iter()
            .zip(&grid.weights)
            .map(|(p, &w)| w * signal_at_point(&link, &agent, *p))
            .sum();
        let got = unary_coverage(&agent, &[], &grid, &link);
        assert!((got - squash_dbm(&link, direct)).abs() < 1e-12);
    }

    #[test]
    fn unary_colocated_context_changes_nothing() {
        let link = LinkModelParams::default();
        let grid = build_grid(&RoiGaussian::default(), 20).unwrap();
        let agent = pos(30.0, 40.0, 60.0);
        let alone = unary_coverage(&agent, &[], &grid, &link);
        let with_twin = unary_coverage(&agent, &[agent], &grid, &link);
        assert_eq!(alone, with_twin);
    }

    #[test]
    fn unary_prefers_centered_candidate() {
        let link = LinkModelParams::default();
        let grid = build_grid(&RoiGaussian::default(), 40).unwrap();
        let centered = unary_coverage(&pos(0.0, 0.0, 50.0), &[], &grid, &link);
        let displaced = unary_coverage(&pos(100.0, 0.0, 50.0), &[], &grid, &link);
        assert!(
            centered > displaced,
            "centered {centered} <= displaced {displaced}"
        );
    }

    #[test]
    fn unary_monotone_in_context() {
        let link = LinkModelParams::default();
        let grid = build_grid(&RoiGaussian::default(), 25).unwrap();
        let candidate = pos(150.0, 0.0, 50.0);
        let helpers = [
            pos(-150.0, 0.0, 50.0),
            pos(0.0, 150.0, 50.0),
            pos(0.0, -150.0, 50.0),
        ];
        let mut last = unary_coverage(&candidate, &[], &grid, &link);
        for k in 1..=helpers.len() {
            let v = unary_coverage(&candidate, &helpers[..k], &grid, &link);
            assert!(v >= last, "adding context lowered coverage: {last} -> {v}");
            last = v;
        }
    }

    #[test]
    fn batch_unary_matches_pointwise() {
        let link = LinkModelParams::default();
        let grid = build_grid(&RoiGaussian::default(), 25).unwrap();
        let candidates = [
            pos(0.0, 0.0, 50.0),
            pos(120.0, -40.0, 50.0),
            pos(-300.0, 200.0, 80.0),
        ];
        let context = [pos(60.0, 60.0, 50.0), pos(-90.0, 10.0, 40.0)];
        let batch = unary_coverage_batch(&candidates, &context, &grid, &link);
        for (c, &b) in candidates.iter().zip(&batch) {
            assert_eq!(b, unary_coverage(c, &context, &grid, &link));
        }
        // Empty context exercises the no-neighbor path.
        let batch = unary_coverage_batch(&candidates, &[], &grid, &link);
        for (c, &b) in candidates.iter().zip(&batch) {
            assert_eq!(b, unary_coverage(c, &[], &grid, &link));
        }

        // The installed potentials use the same fast path.
        let potentials = make_coverage_potentials(&RoiGaussian::default(), 25, &link).unwrap();
        let via_pair = potentials.unary_batch(&candidates, &context);
        for (c, &b) in candidates.iter().zip(&via_pair) {
            assert_eq!(b, potentials.unary(c, &context));
        }
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        // Doubling resolution moves a fixed configuration's unary value by
        // well under 1% relative.
        let link = LinkModelParams::default();
        let roi = RoiGaussian::default();
        let coarse = build_grid(&roi, 40).unwrap();
        let fine = build_grid(&roi, 80).unwrap();
        let candidate = pos(80.0, -60.0, 50.0);
        let context = [pos(-40.0, 90.0, 50.0)];
        let a = unary_coverage(&candidate, &context, &coarse, &link);
        let b = unary_coverage(&candidate, &context, &fine, &link);
        assert!((a - b).abs() / b.abs() < 0.01, "coarse {a} vs fine {b}");
    }

    #[test]
    fn pairwise_reference_distance_value() {
        let link = LinkModelParams::default();
        let a = pos(0.0, 0.0, 0.0);
        let b = pos(link.ref_distance_m, 0.0, 0.0);
        let v = pairwise_coverage(&a, &b, &link);
        assert_eq!(v, squash_dbm(&link, link.power_ceiling_dbm()));
        assert_eq!(v, 1.0);
    }

    #[test]
    fn pairwise_symmetric_and_decreasing() {
        let link = LinkModelParams::default();
        let a = pos(12.0, 9.0, 30.0);
        let b = pos(-25.0, 14.0, 45.0);
        assert_eq!(
            pairwise_coverage(&a, &b, &link),
            pairwise_coverage(&b, &a, &link)
        );
        let near = pairwise_coverage(&pos(0.0, 0.0, 0.0), &pos(10.0, 0.0, 0.0), &link);
        let far = pairwise_coverage(&pos(0.0, 0.0, 0.0), &pos(100.0, 0.0, 0.0), &link);
        assert!(near > far);
    }

    #[test]
    fn potentials_stay_in_unit_interval() {
        let link = LinkModelParams::default();
        let potentials = make_coverage_potentials(&RoiGaussian::default(), 20, &link).unwrap();
        // Far enough that the raw dBm falls below the sensitivity floor;
        // the squash still keeps the value strictly positive.
        let far = pos(1e6, 1e6, 100.0);
        let near = pos(0.0, 0.0, 1.0);
        for p in [far, near] {
            let u = potentials.unary(&p, &[]);
            assert!(u > 0.0 && u <= 1.0, "unary {u}");
            let w = potentials.pairwise(&p, &near);
            assert!(w > 0.0 && w <= 1.0, "pairwise {w}");
        }
    }

    #[test]
    fn potentials_feed_joint_payoff() {
        use crate::game_core::{joint_payoff, ActionSet, LocalGame, PayoffWeights, RobotState};
        let link = LinkModelParams::default();
        let potentials = make_coverage_potentials(&RoiGaussian::default(), 20, &link).unwrap();
        let states: Vec<RobotState> = [(0.0, 0.0), (120.0, 0.0), (0.0, 120.0)]
            .iter()
            .enumerate()
            .map(|(id, &(x, y))| RobotState {
                id,
                position: pos(x, y, 50.0),
            })
            .collect();
        let effective: Vec<Position> = states.iter().map(|s| s.position).collect();
        let actions = vec![ActionSet::lattice(10.0, false).unwrap(); 3];
        let game = LocalGame::new(
            0,
            vec![0, 1, 2],
            states,
            effective.clone(),
            actions,
            potentials.clone(),
            PayoffWeights::default(),
        )
        .unwrap();

        let m = joint_payoff(&game, &[0, 0, 0]).unwrap();
        // Re-sum the stage objective by hand: alpha_a * sum phi_u
        // + alpha_b * sum phi_p at the stay-in-place profile.
        let mut unary_sum = 0.0;
        for j in 0..3 {
            let ctx: Vec<Position> = (0..3).filter(|&k| k != j).map(|k| effective[k]).collect();
            unary_sum += potentials.unary(&effective[j], &ctx);
        }
        let mut pair_sum = 0.0;
        for j in 0..3 {
            for k in (j + 1)..3 {
                pair_sum += potentials.pairwise(&effective[j], &effective[k]);
            }
        }
        let expect = 1.0 * unary_sum + 0.001 * pair_sum;
        assert!((m - expect).abs() < 1e-12);
    }
}
