//! Cooling schedules for the temperature and decay schedules for the
//! exploration floor, plus the admissible-gamma thresholds that tell an
//! experiment config whether its cooling constant is in the provable range.
//!
//! All logarithms are natural. Round indices are 1-based and the logarithmic
//! schedule reads `gamma / ln(t + t0)` with `t0 >= 1`, so the first round
//! divides by `ln 2` rather than by zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{critical_depth, landscape_constants, ArmGraph, Landscape};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("schedule round must be >= 1, got {0}")]
    BadRound(f64),
    #[error("edge-visit schedule needs the visit count of the proposed edge")]
    MissingEdgeVisits,
    #[error("exploration exponent must be positive, got {0}")]
    BadExponent(f64),
}

/// Temperature schedule `T_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoolingSchedule {
    /// `T_t = gamma / ln(t + t0)`, non-increasing for `t0 >= 1`.
    Logarithmic { gamma: f64, #[serde(default = "default_t0")] t0: f64 },
    /// Frozen temperature.
    Constant { temp: f64 },
    /// State-dependent schedule: `T = gamma / ln(max(2, visits))` where
    /// `visits` counts proposals of the edge currently under consideration.
    EdgeVisit { gamma: f64 },
}

fn default_t0() -> f64 {
    1.0
}

impl CoolingSchedule {
    pub fn logarithmic(gamma: f64) -> Self {
        Self::Logarithmic { gamma, t0: 1.0 }
    }

    /// Temperature at round `t >= 1`. Edge-visit schedules require the
    /// proposed edge's visit count.
    pub fn temperature(&self, t: f64, edge_visits: Option<f64>) -> Result<f64, ScheduleError> {
        if t < 1.0 {
            return Err(ScheduleError::BadRound(t));
        }
        match *self {
            Self::Logarithmic { gamma, t0 } => Ok(gamma / (t + t0).ln()),
            Self::Constant { temp } => Ok(temp),
            Self::EdgeVisit { gamma } => {
                let visits = edge_visits.ok_or(ScheduleError::MissingEdgeVisits)?;
                Ok(gamma / visits.max(2.0).ln())
            }
        }
    }

    /// Validates the schedule's parameters.
    pub fn check(&self) -> Result<(), ScheduleError> {
        let p = match *self {
            Self::Logarithmic { gamma, t0 } => {
                if t0 < 1.0 {
                    return Err(ScheduleError::BadRound(t0));
                }
                gamma
            }
            Self::Constant { temp } => temp,
            Self::EdgeVisit { gamma } => gamma,
        };
        if p > 0.0 {
            Ok(())
        } else {
            Err(ScheduleError::NonPositiveTemperature(p))
        }
    }

    pub fn is_edge_visit(&self) -> bool {
        matches!(self, Self::EdgeVisit { .. })
    }
}

/// Exploration-noise schedule `eps_n = min(1, c * n^-e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSchedule {
    pub exponent: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

impl ExplorationSchedule {
    pub fn new(exponent: f64, scale: f64) -> Self {
        Self { exponent, scale }
    }

    /// No exploration floor (`eps = 0` at every round).
    pub fn zero() -> Self {
        Self { exponent: 1.0, scale: 0.0 }
    }

    /// Midpoint of the admissible interval `(0, 4/(d+4))`: `e = 2/(d+4)`.
    pub fn default_for_depth(d: usize) -> Self {
        Self { exponent: 2.0 / (d as f64 + 4.0), scale: 1.0 }
    }

    pub fn epsilon(&self, n: f64) -> f64 {
        debug_assert!(n >= 1.0);
        (self.scale * n.powf(-self.exponent)).min(1.0)
    }
}

/// Thresholds on the cooling constant `gamma`.
///
/// The window `tau` is the smallest number of consecutive rounds whose kernel
/// product has a strictly positive column; the positivity pattern does not
/// depend on the probe temperature, only on where a diagonal entry survives
/// (an arm keeps self-mass exactly when it has a strictly uphill neighbour).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaThresholds {
    pub tau: usize,
    /// `L`: largest loss difference across an edge.
    pub landscape_l: f64,
    /// Critical depth `gamma*`.
    pub critical_depth: f64,
    /// Noiseless requirement: `gamma > tau * L (>= gamma*)`.
    pub noiseless: f64,
    /// Noisy requirement: `gamma > 4 gamma* / e` for exploration exponent `e`.
    pub noisy: f64,
}

/// Smallest window `tau` such that the product of `tau` consecutive kernels
/// has a strictly positive column, by boolean reachability.
pub fn positive_column_window(graph: &ArmGraph, landscape: &Landscape) -> usize {
    let k = graph.arm_count();
    // M[i][j] = kernel entry (i -> j) is structurally positive.
    let mut base = vec![vec![false; k]; k];
    for (i, row) in base.iter_mut().enumerate() {
        let uphill = graph
            .neighbors(i)
            .iter()
            .any(|&j| landscape.loss(j) > landscape.loss(i));
        row[i] = uphill;
        for &j in graph.neighbors(i) {
            row[j] = true;
        }
    }
    let has_positive_column =
        |m: &[Vec<bool>]| (0..k).any(|s| (0..k).all(|i| m[i][s]));
    let mut current = base.clone();
    for tau in 1..=k {
        if has_positive_column(&current) {
            return tau;
        }
        let mut next = vec![vec![false; k]; k];
        for i in 0..k {
            for j in 0..k {
                if current[i][j] {
                    for (s, cell) in next[i].iter_mut().enumerate() {
                        *cell = *cell || base[j][s];
                    }
                }
            }
        }
        current = next;
    }
    // Every arm reaches the optimum within its eccentricity and can wait
    // there (the optimum always has an uphill neighbour), so the scan cannot
    // exhaust k rounds on a valid input.
    unreachable!("connected graph with a unique optimum has a positive column within k steps")
}

/// Computes every threshold a config needs to validate its `gamma` choice.
pub fn admissible_gamma(
    graph: &ArmGraph,
    landscape: &Landscape,
    eps_exponent: f64,
) -> Result<GammaThresholds, ScheduleError> {
    if eps_exponent <= 0.0 {
        return Err(ScheduleError::BadExponent(eps_exponent));
    }
    let (big_l, _) = landscape_constants(graph, landscape);
    let tau = positive_column_window(graph, landscape);
    let depth = critical_depth(graph, landscape);
    Ok(GammaThresholds {
        tau,
        landscape_l: big_l,
        critical_depth: depth,
        noiseless: tau as f64 * big_l,
        noisy: 4.0 * depth / eps_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn logarithmic_unit_case() {
        // ln(t + 1) = 1 at t = e - 1.
        let s = CoolingSchedule::logarithmic(1.0);
        let t = std::f64::consts::E - 1.0;
        assert_relative_eq!(s.temperature(t, None).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_schedule() {
        let s = CoolingSchedule::Constant { temp: 0.3 };
        assert_eq!(s.temperature(1.0, None).unwrap(), 0.3);
        assert_eq!(s.temperature(1e6, None).unwrap(), 0.3);
    }

    #[test]
    fn edge_visit_schedule() {
        let s = CoolingSchedule::EdgeVisit { gamma: 0.5 };
        let visits = std::f64::consts::E.powi(2);
        assert_relative_eq!(
            s.temperature(10.0, Some(visits)).unwrap(),
            0.25,
            max_relative = 1e-12
        );
        // Guard against ln(0) / ln(1) before the first revisit.
        assert_relative_eq!(
            s.temperature(1.0, Some(1.0)).unwrap(),
            0.5 / 2f64.ln(),
            max_relative = 1e-12
        );
        assert!(matches!(
            s.temperature(1.0, None),
            Err(ScheduleError::MissingEdgeVisits)
        ));
    }

    #[test]
    fn logarithmic_non_increasing() {
        let s = CoolingSchedule::logarithmic(2.5);
        let mut prev = f64::INFINITY;
        for t in [1.0, 2.0, 10.0, 1e3, 1e5, 1e6] {
            let cur = s.temperature(t, None).unwrap();
            assert!(cur <= prev);
            prev = cur;
        }
    }

    #[test]
    fn epsilon_examples() {
        let s = ExplorationSchedule::new(0.5, 1.0);
        assert_relative_eq!(s.epsilon(4.0), 0.5, max_relative = 1e-12);
        assert_eq!(s.epsilon(1.0), 1.0);
        let d3 = ExplorationSchedule::default_for_depth(3);
        assert_relative_eq!(d3.exponent, 2.0 / 7.0, max_relative = 1e-12);
        assert_relative_eq!(
            d3.epsilon(100.0),
            100f64.powf(-2.0 / 7.0),
            max_relative = 1e-12
        );
        assert!((d3.epsilon(100.0) - 0.268).abs() < 1e-3);
    }

    #[test]
    fn epsilon_non_increasing_and_bounded() {
        let s = ExplorationSchedule::new(0.3, 2.0);
        let mut prev = 1.0f64;
        for n in 1..200u32 {
            let e = s.epsilon(n as f64);
            assert!((0.0..=1.0).contains(&e));
            assert!(e <= prev + 1e-15);
            prev = e;
        }
    }

    #[test]
    fn thresholds_on_complete_graph() {
        let g = ArmGraph::complete(4).unwrap();
        let l = Landscape::new(vec![0.0, 0.4, 0.2, 0.9]).unwrap();
        let t = admissible_gamma(&g, &l, 0.5).unwrap();
        assert_eq!(t.critical_depth, 0.0);
        assert_eq!(t.noisy, 0.0);
        assert_eq!(t.tau, 1);
    }

    #[test]
    fn thresholds_on_counterexample_path() {
        let g = ArmGraph::path(4).unwrap();
        let l = Landscape::linear_counterexample(0.1).unwrap();
        let e = 2.0 / 7.0;
        let t = admissible_gamma(&g, &l, e).unwrap();
        assert_relative_eq!(t.noisy, 4.0 * 0.2 / e, max_relative = 1e-12);
        assert_relative_eq!(t.noisy, 2.8, max_relative = 1e-12);
        // Arms 0, 1, 3 keep self-mass (each has an uphill neighbour) while
        // arm 2 is a local maximum; every arm then reaches column 1 within
        // two rounds, so the scan settles at the hop radius, tau = 2.
        assert_eq!(t.tau, 2);
        assert_relative_eq!(t.noiseless, 0.4, max_relative = 1e-12);
    }

    #[test]
    fn window_on_monotone_path() {
        // Strictly increasing losses along the path: only the far endpoint
        // lacks self-mass, so the middle columns fill within the hop radius.
        let g = ArmGraph::path(4).unwrap();
        let l = Landscape::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(positive_column_window(&g, &l), 2);
    }

    #[test]
    fn window_grows_to_diameter_when_interior_cannot_wait() {
        // A flat plateau in the middle removes both interior diagonals; the
        // endpoints are then only reachable by full-length walks.
        let g = ArmGraph::path(4).unwrap();
        let l = Landscape::new(vec![0.1, 0.3, 0.3, 0.2]).unwrap();
        assert_eq!(positive_column_window(&g, &l), 3);
        assert_eq!(g.diameter(), 3);
    }
}
