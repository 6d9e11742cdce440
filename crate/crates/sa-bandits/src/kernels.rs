//! Exact transition kernels, Gibbs quasi-stationary distributions,
//! ergodicity coefficients, and brute-force distribution propagation.
//!
//! Everything here is deterministic linear algebra over small row-stochastic
//! matrices; it serves as the oracle that the sampled policies and the
//! closed-form bounds are checked against.

use thiserror::Error;

use crate::graph::{ArmGraph, Landscape};
use crate::schedules::{CoolingSchedule, ScheduleError};

/// Row-sum / probability tolerance for kernel and distribution invariants.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Cost guard for exact matrix products: `k^2 * (n - m)` must stay below this.
pub const MAX_PRODUCT_OPS: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("temperature must be positive or +inf, got {0}")]
    BadTemperature(f64),
    #[error("epsilon must lie in [0, 1], got {0}")]
    BadEpsilon(f64),
    #[error("window must satisfy m < n, got m={0}, n={1}")]
    BadWindow(u64, u64),
    #[error("product of {steps} kernels at k={k} exceeds the configured cost guard")]
    ProductTooLarge { steps: u64, k: usize },
    #[error("row {row} sums to {sum}, outside tolerance")]
    NotStochastic { row: usize, sum: f64 },
    #[error("distribution entries must be nonnegative and sum to 1, got sum {0}")]
    BadDistribution(f64),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// A row-stochastic transition matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    k: usize,
    entries: Vec<f64>,
}

impl Kernel {
    /// Builds a kernel from rows, enforcing the stochasticity invariants.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, KernelError> {
        let k = rows.len();
        let mut entries = Vec::with_capacity(k * k);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), k, "kernel must be square");
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL
                || row.iter().any(|&p| !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(&p))
            {
                return Err(KernelError::NotStochastic { row: i, sum });
            }
            entries.extend_from_slice(row);
        }
        Ok(Self { k, entries })
    }

    fn from_entries_unchecked(k: usize, entries: Vec<f64>) -> Self {
        debug_assert!(entries.len() == k * k);
        debug_assert!(entries
            .chunks(k)
            .all(|row| (row.iter().sum::<f64>() - 1.0).abs() <= 1e-10));
        Self { k, entries }
    }

    pub fn arm_count(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.k..(i + 1) * self.k]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }

    /// Matrix product `self * other`.
    pub fn multiply(&self, other: &Kernel) -> Kernel {
        assert_eq!(self.k, other.k);
        let k = self.k;
        let mut out = vec![0.0; k * k];
        for i in 0..k {
            for l in 0..k {
                let p = self.entries[i * k + l];
                if p == 0.0 {
                    continue;
                }
                let orow = other.row(l);
                for (j, cell) in out[i * k..(i + 1) * k].iter_mut().enumerate() {
                    *cell += p * orow[j];
                }
            }
        }
        Kernel::from_entries_unchecked(k, out)
    }

    /// Largest pairwise l1 distance between rows.
    pub fn max_row_spread(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.k {
            for j in (i + 1)..self.k {
                let d: f64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// A probability vector over the arms.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, KernelError> {
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL || probs.iter().any(|&p| p < -STOCHASTIC_TOL) {
            return Err(KernelError::BadDistribution(sum));
        }
        Ok(Self(probs))
    }

    pub fn point_mass(k: usize, arm: usize) -> Self {
        let mut p = vec![0.0; k];
        p[arm] = 1.0;
        Self(p)
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, arm: usize) -> f64 {
        self.0[arm]
    }

    /// `nu * P` (one step of forward propagation).
    pub fn step(&self, kernel: &Kernel) -> Distribution {
        let k = kernel.arm_count();
        let mut out = vec![0.0; k];
        for (i, &p) in self.0.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (j, cell) in out.iter_mut().enumerate() {
                *cell += p * kernel.get(i, j);
            }
        }
        Self(out)
    }

    pub fn l1_distance(&self, other: &Distribution) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Total-variation distance (half the l1 distance).
    pub fn tv_distance(&self, other: &Distribution) -> f64 {
        0.5 * self.l1_distance(other)
    }
}

fn check_temperature(temp: f64) -> Result<(), KernelError> {
    if temp.is_nan() || (temp.is_finite() && temp <= 0.0) || temp == f64::NEG_INFINITY {
        Err(KernelError::BadTemperature(temp))
    } else {
        Ok(())
    }
}

/// Metropolis-style acceptance factor `exp(-(uphill)^+ / T)`.
fn acceptance(delta: f64, temp: f64) -> f64 {
    let uphill = delta.max(0.0);
    if uphill == 0.0 {
        1.0
    } else if temp.is_infinite() {
        1.0
    } else {
        (-uphill / temp).exp()
    }
}

/// The annealing kernel at a frozen temperature, from raw losses.
///
/// Off-diagonal: `g(x,y)/g(x) * exp(-(mu_y - mu_x)^+ / T)` for neighbours,
/// zero otherwise; the diagonal absorbs the residual. Losses need not have a
/// unique minimizer here; that constraint lives in [`Landscape`].
pub fn sa_kernel_from_losses(
    graph: &ArmGraph,
    losses: &[f64],
    temp: f64,
) -> Result<Kernel, KernelError> {
    check_temperature(temp)?;
    assert_eq!(losses.len(), graph.arm_count());
    let k = graph.arm_count();
    let mut entries = vec![0.0; k * k];
    for x in 0..k {
        let mut off_total = 0.0;
        for &y in graph.neighbors(x) {
            let p = graph.proposal_prob(x, y) * acceptance(losses[y] - losses[x], temp);
            entries[x * k + y] = p;
            off_total += p;
        }
        entries[x * k + x] = (1.0 - off_total).max(0.0);
    }
    Ok(Kernel::from_entries_unchecked(k, entries))
}

/// The annealing kernel for a landscape at temperature `temp` (`+inf` allowed:
/// every acceptance factor is 1 and the chain is the pure proposal walk).
pub fn sa_kernel(
    graph: &ArmGraph,
    landscape: &Landscape,
    temp: f64,
) -> Result<Kernel, KernelError> {
    sa_kernel_from_losses(graph, landscape.losses(), temp)
}

/// One row of the noisy annealing kernel driven by empirical means.
///
/// For `a'` in the neighbourhood of `current`:
/// `(1 - eps) * g-share * exp(-(est_{a'} - est_current)^+ / T) + g-share * eps`;
/// the self-probability is the residual. Unvisited arms carry a `-inf`
/// sentinel estimate, which makes a transition toward them always accepted
/// (optimism); the current arm must have been pulled at least once.
pub fn noisy_sa_row(
    graph: &ArmGraph,
    estimates: &[f64],
    current: usize,
    temp: f64,
    epsilon: f64,
) -> Result<Distribution, KernelError> {
    check_temperature(temp)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(KernelError::BadEpsilon(epsilon));
    }
    assert!(
        estimates[current].is_finite(),
        "current arm must have a finite empirical mean"
    );
    let k = graph.arm_count();
    let mut row = vec![0.0; k];
    let mut off_total = 0.0;
    for &y in graph.neighbors(current) {
        let share = graph.proposal_prob(current, y);
        let accept = acceptance(estimates[y] - estimates[current], temp);
        let p = share * ((1.0 - epsilon) * accept + epsilon);
        row[y] = p;
        off_total += p;
    }
    let residual = 1.0 - off_total;
    assert!(residual >= -1e-12, "negative self-probability {residual}");
    row[current] = residual.max(0.0);
    Ok(Distribution(row))
}

/// The Gibbs quasi-stationary distribution `pi_i proportional to
/// g(i) exp(-mu_i / T)`, computed with max-subtraction so extreme
/// temperatures stay finite. `T = +inf` gives weights proportional to `g`.
pub fn gibbs(graph: &ArmGraph, landscape: &Landscape, temp: f64) -> Result<Distribution, KernelError> {
    check_temperature(temp)?;
    let k = graph.arm_count();
    let min_loss = landscape.loss(landscape.optimal_arm());
    let mut weights = vec![0.0; k];
    let mut total = 0.0;
    for (i, w) in weights.iter_mut().enumerate() {
        let factor = if temp.is_infinite() {
            1.0
        } else {
            (-(landscape.loss(i) - min_loss) / temp).exp()
        };
        *w = graph.weight_total(i) * factor;
        total += *w;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(Distribution(weights))
}

/// l1 residual of the stationarity equation, `||pi P - pi||_1`.
pub fn stationarity_check(kernel: &Kernel, dist: &Distribution) -> f64 {
    dist.step(kernel).l1_distance(dist)
}

/// Coefficient of ergodicity
/// `kappa(P) = 1/2 max_{i,j} sum_s |P_is - P_js|`.
///
/// Also evaluates the equivalent `1 - min_{i,j} sum_s min(P_is, P_js)` and
/// asserts the two agree to within the stochasticity tolerance.
pub fn ergodicity_coefficient(kernel: &Kernel) -> f64 {
    let k = kernel.arm_count();
    let mut max_half_l1 = 0.0f64;
    let mut min_overlap = 1.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            let (mut l1, mut overlap) = (0.0, 0.0);
            for s in 0..k {
                let (a, b) = (kernel.get(i, s), kernel.get(j, s));
                l1 += (a - b).abs();
                overlap += a.min(b);
            }
            max_half_l1 = max_half_l1.max(0.5 * l1);
            min_overlap = min_overlap.min(overlap);
        }
    }
    if k > 1 {
        assert!(
            (max_half_l1 - (1.0 - min_overlap)).abs() <= STOCHASTIC_TOL,
            "ergodicity coefficient forms disagree: {} vs {}",
            max_half_l1,
            1.0 - min_overlap
        );
    }
    max_half_l1
}

/// Exact product of the per-round kernels `P(m) P(m+1) ... P(n-1)` under a
/// cooling schedule, with a cost guard.
pub fn kernel_product(
    schedule: &CoolingSchedule,
    graph: &ArmGraph,
    landscape: &Landscape,
    m: u64,
    n: u64,
) -> Result<Kernel, KernelError> {
    if m < 1 || m >= n {
        return Err(KernelError::BadWindow(m, n));
    }
    let k = graph.arm_count() as u64;
    let steps = n - m;
    if k * k * steps > MAX_PRODUCT_OPS {
        return Err(KernelError::ProductTooLarge { steps, k: graph.arm_count() });
    }
    let mut product = sa_kernel(graph, landscape, schedule.temperature(m as f64, None)?)?;
    for t in (m + 1)..n {
        let next = sa_kernel(graph, landscape, schedule.temperature(t as f64, None)?)?;
        product = product.multiply(&next);
    }
    Ok(product)
}

/// Streams the exact marginals `nu(t) = nu(0) P(1) ... P(t)` for
/// `t = 1..=horizon`, building the round-`t` kernel at `T_t` from the
/// schedule. This is the oracle for the probability of playing any arm.
pub fn propagate_with<F: FnMut(u64, &Distribution)>(
    initial: &Distribution,
    schedule: &CoolingSchedule,
    graph: &ArmGraph,
    landscape: &Landscape,
    horizon: u64,
    mut visit: F,
) -> Result<(), KernelError> {
    let mut nu = initial.clone();
    for t in 1..=horizon {
        let kernel = sa_kernel(graph, landscape, schedule.temperature(t as f64, None)?)?;
        nu = nu.step(&kernel);
        visit(t, &nu);
    }
    Ok(())
}

/// Collects the full trajectory of [`propagate_with`].
pub fn propagate(
    initial: &Distribution,
    schedule: &CoolingSchedule,
    graph: &ArmGraph,
    landscape: &Landscape,
    horizon: u64,
) -> Result<Vec<Distribution>, KernelError> {
    let mut out = Vec::with_capacity(horizon as usize);
    propagate_with(initial, schedule, graph, landscape, horizon, |_, nu| {
        out.push(nu.clone())
    })?;
    Ok(out)
}

/// Propagates under a fixed kernel: `nu(t) = nu(0) P^t` for `t = 1..=horizon`.
pub fn propagate_fixed(initial: &Distribution, kernel: &Kernel, horizon: u64) -> Vec<Distribution> {
    let mut out = Vec::with_capacity(horizon as usize);
    let mut nu = initial.clone();
    for _ in 0..horizon {
        nu = nu.step(kernel);
        out.push(nu.clone());
    }
    out
}

/// The epsilon-greedy kernel on a graph with deterministic rewards:
/// `(1 - eps) A + eps B`, where `A` moves to the lowest-loss member of the
/// closed neighbourhood (ties to the lowest index) and `B` explores uniformly
/// over the closed neighbourhood.
pub fn greedy_kernel(
    graph: &ArmGraph,
    landscape: &Landscape,
    epsilon: f64,
) -> Result<Kernel, KernelError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(KernelError::BadEpsilon(epsilon));
    }
    let k = graph.arm_count();
    let mut entries = vec![0.0; k * k];
    for x in 0..k {
        let mut closed: Vec<usize> = graph.neighbors(x).to_vec();
        closed.push(x);
        closed.sort_unstable();
        let target = *closed
            .iter()
            .min_by(|&&a, &&b| {
                landscape
                    .loss(a)
                    .partial_cmp(&landscape.loss(b))
                    .unwrap()
                    .then(a.cmp(&b))
            })
            .unwrap();
        entries[x * k + target] += 1.0 - epsilon;
        let share = epsilon / closed.len() as f64;
        for &c in &closed {
            entries[x * k + c] += share;
        }
    }
    Ok(Kernel::from_entries_unchecked(k, entries))
}

/// `sum over suboptimal arms of ratio * (t+1)^(-gap/gamma)`, the tail sum
/// shared by the Gibbs tail bound and the steady-state regret terms.
pub fn weighted_tail_sum(ratio_gap_pairs: &[(f64, f64)], gamma: f64, t: f64) -> f64 {
    ratio_gap_pairs
        .iter()
        .map(|&(ratio, gap)| ratio * (t + 1.0).powf(-gap / gamma))
        .sum()
}

/// `(g(a)/g(a*), Delta_a)` for every suboptimal arm.
pub fn weight_ratio_gap_pairs(graph: &ArmGraph, landscape: &Landscape) -> Vec<(f64, f64)> {
    let best = landscape.optimal_arm();
    let g_best = graph.weight_total(best);
    (0..graph.arm_count())
        .filter(|&a| a != best)
        .map(|a| (graph.weight_total(a) / g_best, landscape.gap(a)))
        .collect()
}

/// The closed-form Gibbs tail bound for the logarithmic schedule
/// `T_t = gamma / ln(t+1)`:
/// `||pi(t) - e*||_1 <= 2 sum_{a != a*} (g(a)/g(a*)) (t+1)^(-Delta_a/gamma)`.
pub fn gibbs_tail_bound(graph: &ArmGraph, landscape: &Landscape, gamma: f64, t: u64) -> f64 {
    2.0 * weighted_tail_sum(&weight_ratio_gap_pairs(graph, landscape), gamma, t as f64)
}

/// Finds the monotonicity onset of the Gibbs trajectory under
/// `T_t = gamma / ln(t+1)`: the smallest `m0` such that, for every scanned
/// `t >= m0`, `pi_{a*}` strictly increases and every other mass strictly
/// decreases from `t` to `t+1`. Returns `None` if the final scanned step
/// still violates monotonicity.
pub fn monotonicity_onset(
    graph: &ArmGraph,
    landscape: &Landscape,
    gamma: f64,
    horizon: u64,
) -> Result<Option<u64>, KernelError> {
    let schedule = CoolingSchedule::logarithmic(gamma);
    let best = landscape.optimal_arm();
    let mut last_violation = 0u64;
    let mut prev = gibbs(graph, landscape, schedule.temperature(1.0, None)?)?;
    for t in 1..horizon {
        let next = gibbs(graph, landscape, schedule.temperature((t + 1) as f64, None)?)?;
        let monotone = next.get(best) > prev.get(best)
            && (0..graph.arm_count())
                .filter(|&a| a != best)
                .all(|a| next.get(a) < prev.get(a));
        if !monotone {
            last_violation = t;
        }
        prev = next;
    }
    if last_violation == horizon.saturating_sub(1) && horizon > 1 {
        Ok(None)
    } else {
        Ok(Some(last_violation + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_arm() -> (ArmGraph, Landscape) {
        (
            ArmGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap(),
            Landscape::new(vec![0.0, 1.0]).unwrap(),
        )
    }

    fn path4_counterexample() -> (ArmGraph, Landscape) {
        (
            ArmGraph::path(4).unwrap(),
            Landscape::linear_counterexample(0.1).unwrap(),
        )
    }

    #[test]
    fn sa_kernel_two_arm_values() {
        let (g, l) = two_arm();
        let p = sa_kernel(&g, &l, 1.0).unwrap();
        assert_relative_eq!(p.get(0, 1), (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(p.get(1, 0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(p.get(0, 0), 1.0 - (-1.0f64).exp(), max_relative = 1e-14);
        assert_eq!(p.get(1, 1), 0.0);
    }

    #[test]
    fn equal_losses_reduce_to_proposal_walk() {
        let g = ArmGraph::path(3).unwrap();
        let p = sa_kernel_from_losses(&g, &[0.5, 0.5, 0.5], 0.7).unwrap();
        for x in 0..3 {
            for &y in g.neighbors(x) {
                assert_eq!(p.get(x, y), g.proposal_prob(x, y));
            }
        }
    }

    #[test]
    fn downhill_always_accepted() {
        let (g, l) = path4_counterexample();
        let p = sa_kernel(&g, &l, 0.123).unwrap();
        // Arm 2 (loss 1.2) moves downhill to both neighbours at full share.
        assert_relative_eq!(p.get(2, 1), 0.5, max_relative = 1e-15);
        assert_relative_eq!(p.get(2, 3), 0.5, max_relative = 1e-15);
        assert_eq!(p.get(2, 2), 0.0);
    }

    #[test]
    fn low_temperature_traps_local_minimum() {
        // Arm 3 of the counterexample is a local minimum: at T -> 0 its row
        // concentrates on itself.
        let (g, l) = path4_counterexample();
        let p = sa_kernel(&g, &l, 1e-4).unwrap();
        assert!(p.get(3, 3) > 1.0 - 1e-300);
    }

    #[test]
    fn infinite_temperature_is_pure_proposal() {
        let (g, l) = path4_counterexample();
        let p = sa_kernel(&g, &l, f64::INFINITY).unwrap();
        assert_relative_eq!(p.get(0, 1), 1.0, max_relative = 1e-15);
        assert_relative_eq!(p.get(1, 0), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn rejects_bad_temperature() {
        let (g, l) = two_arm();
        assert!(sa_kernel(&g, &l, 0.0).is_err());
        assert!(sa_kernel(&g, &l, -1.0).is_err());
    }

    #[test]
    fn noisy_row_reduces_to_kernel_row() {
        let (g, l) = path4_counterexample();
        let p = sa_kernel(&g, &l, 0.8).unwrap();
        for x in 0..4 {
            let row = noisy_sa_row(&g, l.losses(), x, 0.8, 0.0).unwrap();
            for j in 0..4 {
                assert_relative_eq!(row.get(j), p.get(x, j), max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn noisy_row_full_exploration_is_proposal() {
        let (g, l) = path4_counterexample();
        let row = noisy_sa_row(&g, l.losses(), 1, 0.3, 1.0).unwrap();
        assert_relative_eq!(row.get(0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(row.get(2), 0.5, max_relative = 1e-15);
        assert_eq!(row.get(1), 0.0);
    }

    #[test]
    fn noisy_row_unvisited_sentinel_accepts() {
        let g = ArmGraph::path(3).unwrap();
        // Arm 2 unvisited: the transition toward it gets the full g-share
        // regardless of temperature or epsilon split.
        let estimates = [0.9, 0.6, f64::NEG_INFINITY];
        let row = noisy_sa_row(&g, &estimates, 1, 0.5, 0.25).unwrap();
        assert_relative_eq!(row.get(2), 0.5, max_relative = 1e-15);
        // Arm 0 is uphill under these estimates: damped acceptance plus floor.
        let expected = 0.5 * (0.75 * (-0.3f64 / 0.5).exp() + 0.25);
        assert_relative_eq!(row.get(0), expected, max_relative = 1e-15);
        assert_relative_eq!(
            row.get(1),
            1.0 - row.get(0) - row.get(2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn gibbs_matches_frozen_examples() {
        let (g, l) = two_arm();
        let pi = gibbs(&g, &l, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert_relative_eq!(pi.get(0), 1.0 / (1.0 + e), max_relative = 1e-12);
        assert_relative_eq!(pi.get(1), e / (1.0 + e), max_relative = 1e-12);
        assert_relative_eq!(pi.get(0), 0.731059, max_relative = 1e-5);
    }

    #[test]
    fn gibbs_limits() {
        let (g, l) = path4_counterexample();
        let hot = gibbs(&g, &l, f64::INFINITY).unwrap();
        for a in 0..4 {
            assert_relative_eq!(hot.get(a), g.weight_total(a) / 6.0, max_relative = 1e-12);
        }
        let cold = gibbs(&g, &l, 1e-4).unwrap();
        assert!(cold.get(0) > 1.0 - 1e-12);
    }

    #[test]
    fn gibbs_is_stationary_for_sa_kernel() {
        let (g, l) = path4_counterexample();
        for temp in [0.1, 0.5, 2.0, 37.0] {
            let p = sa_kernel(&g, &l, temp).unwrap();
            let pi = gibbs(&g, &l, temp).unwrap();
            assert!(stationarity_check(&p, &pi) < 1e-10);
        }
    }

    #[test]
    fn stationarity_of_uniform_on_doubly_stochastic() {
        let p = Kernel::from_rows(vec![
            vec![0.5, 0.3, 0.2],
            vec![0.2, 0.5, 0.3],
            vec![0.3, 0.2, 0.5],
        ])
        .unwrap();
        let u = Distribution::uniform(3);
        assert!(stationarity_check(&p, &u) < 1e-15);
    }

    #[test]
    fn stationarity_detects_perturbation() {
        let (g, l) = path4_counterexample();
        let p = sa_kernel(&g, &l, 0.5).unwrap();
        let pi = gibbs(&g, &l, 0.5).unwrap();
        let mut bumped: Vec<f64> = pi.as_slice().to_vec();
        bumped[1] += 0.01;
        let total: f64 = bumped.iter().sum();
        for b in bumped.iter_mut() {
            *b /= total;
        }
        let perturbed = Distribution::new(bumped).unwrap();
        assert!(stationarity_check(&p, &perturbed) > 1e-4);
    }

    #[test]
    fn detailed_balance_on_counterexample() {
        let (g, l) = path4_counterexample();
        let p = sa_kernel(&g, &l, 0.5).unwrap();
        let pi = gibbs(&g, &l, 0.5).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((pi.get(i) * p.get(i, j) - pi.get(j) * p.get(j, i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ergodicity_coefficient_examples() {
        let identity = Kernel::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(ergodicity_coefficient(&identity), 1.0);
        let rank_one = Kernel::from_rows(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_eq!(ergodicity_coefficient(&rank_one), 0.0);
        let p = Kernel::from_rows(vec![vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        assert_relative_eq!(ergodicity_coefficient(&p), 0.25, max_relative = 1e-15);
    }

    #[test]
    fn kernel_product_single_step() {
        let (g, l) = path4_counterexample();
        let schedule = CoolingSchedule::logarithmic(1.0);
        let single = kernel_product(&schedule, &g, &l, 5, 6).unwrap();
        let direct = sa_kernel(&g, &l, schedule.temperature(5.0, None).unwrap()).unwrap();
        assert_eq!(single, direct);
    }

    #[test]
    fn kernel_product_guards() {
        let (g, l) = path4_counterexample();
        let schedule = CoolingSchedule::logarithmic(1.0);
        assert!(matches!(
            kernel_product(&schedule, &g, &l, 7, 7),
            Err(KernelError::BadWindow(7, 7))
        ));
        assert!(matches!(
            kernel_product(&schedule, &g, &l, 1, 10_000_000_000),
            Err(KernelError::ProductTooLarge { .. })
        ));
    }

    #[test]
    fn propagate_rank_one_reaches_rows() {
        let rows = vec![vec![0.2, 0.5, 0.3]; 3];
        let p = Kernel::from_rows(rows.clone()).unwrap();
        let nu0 = Distribution::point_mass(3, 2);
        let nu = propagate_fixed(&nu0, &p, 1);
        for j in 0..3 {
            assert_relative_eq!(nu[0].get(j), rows[0][j], max_relative = 1e-15);
        }
    }

    #[test]
    fn propagate_frozen_temperature_converges_to_gibbs() {
        let (g, l) = path4_counterexample();
        let temp = 0.5;
        let p = sa_kernel(&g, &l, temp).unwrap();
        let pi = gibbs(&g, &l, temp).unwrap();
        let nu = propagate_fixed(&Distribution::point_mass(4, 3), &p, 5000);
        assert!(nu.last().unwrap().l1_distance(&pi) < 1e-8);
    }

    #[test]
    fn greedy_kernel_matrices_match() {
        let (g, l) = path4_counterexample();
        let a = greedy_kernel(&g, &l, 0.0).unwrap();
        let expect_a = [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let b = greedy_kernel(&g, &l, 1.0).unwrap();
        let third = 1.0 / 3.0;
        let expect_b = [
            [0.5, 0.5, 0.0, 0.0],
            [third, third, third, 0.0],
            [0.0, third, third, third],
            [0.0, 0.0, 0.5, 0.5],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(a.get(i, j), expect_a[i][j], max_relative = 1e-15);
                assert_relative_eq!(b.get(i, j), expect_b[i][j], max_relative = 1e-15);
            }
        }
        let eps = 0.125;
        let p = greedy_kernel(&g, &l, eps).unwrap();
        assert_relative_eq!(p.get(3, 3), 1.0 - eps / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn greedy_chain_gets_stuck_from_arm_four() {
        // Exploration 1/T over horizon T keeps at least mass 1/e on the trap.
        let (g, l) = path4_counterexample();
        let horizon = 1000u64;
        let p = greedy_kernel(&g, &l, 1.0 / horizon as f64).unwrap();
        let nu = propagate_fixed(&Distribution::point_mass(4, 3), &p, horizon);
        assert!(nu.last().unwrap().get(3) >= (1.0f64).exp().recip());
    }

    #[test]
    fn gibbs_tail_bound_holds_on_counterexample() {
        let (g, l) = path4_counterexample();
        let best = Distribution::point_mass(4, 0);
        for gamma in [1.0, 3.0] {
            let schedule = CoolingSchedule::logarithmic(gamma);
            for t in [1u64, 10, 100, 10_000] {
                let pi = gibbs(&g, &l, schedule.temperature(t as f64, None).unwrap()).unwrap();
                assert!(pi.l1_distance(&best) <= gibbs_tail_bound(&g, &l, gamma, t) + 1e-15);
            }
        }
    }

    #[test]
    fn monotonicity_onset_found_at_gamma_one() {
        let (g, l) = path4_counterexample();
        let m0 = monotonicity_onset(&g, &l, 1.0, 100_000).unwrap();
        let m0 = m0.expect("onset exists well inside the horizon at gamma = 1");
        assert!(m0 > 1, "arm 3's mass grows initially, so the onset is not immediate");
        // Monotone from the onset: spot-check a few later pairs.
        let schedule = CoolingSchedule::logarithmic(1.0);
        for t in [m0, m0 + 7, 10 * m0] {
            let a = gibbs(&g, &l, schedule.temperature(t as f64, None).unwrap()).unwrap();
            let b = gibbs(&g, &l, schedule.temperature((t + 1) as f64, None).unwrap()).unwrap();
            assert!(b.get(0) > a.get(0));
            for arm in 1..4 {
                assert!(b.get(arm) < a.get(arm));
            }
        }
    }

    #[test]
    fn monotonicity_onset_beyond_horizon_at_gamma_three() {
        // At gamma = 3 the second-best arm's Gibbs mass is still growing at
        // t = 1e5, so no onset exists inside this window.
        let (g, l) = path4_counterexample();
        assert_eq!(monotonicity_onset(&g, &l, 3.0, 100_000).unwrap(), None);
    }
}
