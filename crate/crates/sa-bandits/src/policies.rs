//! Runnable decision policies: noiseless annealing, noisy annealing on
//! graphs with an exploration floor, the annealing-bandit policy for the
//! fully connected case, and the classic baselines.
//!
//! Each policy is a pure step function over a [`PolicyState`]; the
//! [`PolicyRunner`] wires the per-variant initialization (initial pull,
//! init sweeps, forced-pull phases) and plays whole rounds. One round is
//! exactly one arm play.
//!
//! Conventions shared by every policy: argmin/argmax ties break to the
//! lowest index, schedule rounds are 1-based, and empirical means use the
//! unvisited sentinel `-inf` (a move toward an unvisited arm is always
//! accepted). Baseline policies pre-pull every arm once, so the sentinel
//! only drives the annealing variants.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ArmGraph, Landscape};
use crate::instances::BanditInstance;
use crate::schedules::{CoolingSchedule, ExplorationSchedule, ScheduleError};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("softmax temperature must be positive, got {0}")]
    BadTau(f64),
    #[error("epsilon must lie in [0, 1], got {0}")]
    BadEpsilon(f64),
    #[error("pull-count constant must be positive, got {0}")]
    BadPullGamma(f64),
    #[error(
        "horizon {horizon} is below the forced-pull budget {budget} \
         (k * ceil(16 ln n / gamma^2)); raise gamma, extend the horizon, \
         or enable the override mode"
    )]
    HorizonTooShort { horizon: u64, budget: u64 },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Per-replication mutable state: current arm, pull counts, empirical means,
/// and (for state-dependent cooling) per-edge proposal counts.
#[derive(Debug, Clone)]
pub struct PolicyState {
    pub current: usize,
    /// Completed selection steps (schedule round = steps + 1).
    pub steps: u64,
    /// Total plays, including initialization rounds.
    pub plays: u64,
    /// Plays that drew a sample (equals the pull-count total).
    pub samples: u64,
    pub pulls: Vec<u64>,
    /// Empirical means with `-inf` for never-pulled arms.
    pub means: Vec<f64>,
    edge_visits: Option<Vec<u64>>,
}

impl PolicyState {
    pub fn new(arm_count: usize, start_arm: usize) -> Self {
        assert!(start_arm < arm_count);
        Self {
            current: start_arm,
            steps: 0,
            plays: 0,
            samples: 0,
            pulls: vec![0; arm_count],
            means: vec![f64::NEG_INFINITY; arm_count],
            edge_visits: None,
        }
    }

    pub fn arm_count(&self) -> usize {
        self.pulls.len()
    }

    /// Records one sampled play of `arm` with the incremental mean update
    /// (denominator is the count after increment, so the stored mean is the
    /// arithmetic mean of all delivered samples).
    pub fn record_pull(&mut self, arm: usize, loss: f64) {
        self.pulls[arm] += 1;
        let n = self.pulls[arm];
        if n == 1 {
            self.means[arm] = loss;
        } else {
            self.means[arm] += (loss - self.means[arm]) / n as f64;
        }
        self.plays += 1;
        self.samples += 1;
        debug_assert!(self.check_invariants());
    }

    /// Records one play that drew no sample (noiseless annealing).
    pub fn record_play(&mut self, arm: usize) {
        let _ = arm;
        self.plays += 1;
    }

    /// Increments and returns the proposal count of the undirected edge.
    pub fn note_edge_proposal(&mut self, a: usize, b: usize) -> u64 {
        let k = self.pulls.len();
        let visits = self.edge_visits.get_or_insert_with(|| vec![0; k * k]);
        let (lo, hi) = (a.min(b), a.max(b));
        visits[lo * k + hi] += 1;
        visits[lo * k + hi]
    }

    pub fn edge_proposals(&self, a: usize, b: usize) -> u64 {
        let k = self.pulls.len();
        let (lo, hi) = (a.min(b), a.max(b));
        self.edge_visits.as_ref().map_or(0, |v| v[lo * k + hi])
    }

    pub fn check_invariants(&self) -> bool {
        self.pulls.iter().sum::<u64>() == self.samples
            && self
                .pulls
                .iter()
                .zip(&self.means)
                .all(|(&n, &m)| (n >= 1) == m.is_finite())
    }

    fn min_mean_arm(&self) -> usize {
        argmin_by(self.means.len(), |a| self.means[a])
    }
}

/// Smallest index attaining the minimum of `key` over `0..n`.
fn argmin_by<F: Fn(usize) -> f64>(n: usize, key: F) -> usize {
    let mut best = 0;
    for a in 1..n {
        if key(a) < key(best) {
            best = a;
        }
    }
    best
}

/// Metropolis acceptance probability from an estimated uphill difference.
/// An unvisited candidate (`-inf` estimate) yields difference `-inf`,
/// clipped to an always-accept.
pub fn metropolis_accept_prob(delta_hat: f64, temp: f64) -> f64 {
    let uphill = delta_hat.max(0.0);
    if uphill == 0.0 {
        1.0
    } else if temp.is_infinite() {
        1.0
    } else {
        (-uphill / temp).exp()
    }
}

/// Selection probabilities of flat epsilon-greedy over empirical losses:
/// mass `1 - eps + eps/k` on the argmin, `eps/k` elsewhere.
pub fn eps_greedy_flat_probs(means: &[f64], epsilon: f64) -> Vec<f64> {
    let k = means.len();
    let best = argmin_by(k, |a| means[a]);
    let mut probs = vec![epsilon / k as f64; k];
    probs[best] += 1.0 - epsilon;
    probs
}

/// UCB exploration bonus `sqrt(2 ln t / pulls)`.
pub fn ucb_bonus(t: f64, pulls: f64) -> f64 {
    (2.0 * t.ln() / pulls).sqrt()
}

/// UCB arm choice over empirical losses at round `t`: the largest empirical
/// reward (`-mean`) plus bonus, ties to the lowest index.
pub fn ucb_select(means: &[f64], pulls: &[u64], t: f64) -> usize {
    argmin_by(means.len(), |a| means[a] - ucb_bonus(t, pulls[a] as f64))
}

/// Boltzmann selection probabilities over empirical rewards (`-loss`),
/// computed with max-subtraction.
pub fn softmax_probs(means: &[f64], tau: f64) -> Vec<f64> {
    let scores: Vec<f64> = means.iter().map(|&m| -m / tau).collect();
    let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|&s| (s - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Propose-accept step shared by the annealing chains. Returns the next arm.
/// Distributionally identical to sampling the full transition row: move to a
/// proposed neighbour with probability
/// `(1 - eps) exp(-(uphill)/T) + eps`, otherwise stay.
fn annealing_transition<R: Rng + ?Sized>(
    state: &mut PolicyState,
    graph: &ArmGraph,
    values: &[f64],
    cooling: &CoolingSchedule,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, PolicyError> {
    let round = (state.steps + 1) as f64;
    let x = state.current;
    let candidate = graph.propose(x, rng);
    let temp = if cooling.is_edge_visit() {
        let visits = state.note_edge_proposal(x, candidate);
        cooling.temperature(round, Some(visits as f64))?
    } else {
        cooling.temperature(round, None)?
    };
    let accept =
        (1.0 - epsilon) * metropolis_accept_prob(values[candidate] - values[x], temp) + epsilon;
    let next = if rng.random::<f64>() < accept { candidate } else { x };
    state.steps += 1;
    state.current = next;
    Ok(next)
}

/// One step of the noiseless annealing chain: samples the next arm from the
/// exact kernel row at the current schedule round, using true losses. No
/// estimation happens; the played arm's true loss is the incurred loss.
pub fn step_sa_noiseless<R: Rng + ?Sized>(
    state: &mut PolicyState,
    graph: &ArmGraph,
    landscape: &Landscape,
    cooling: &CoolingSchedule,
    rng: &mut R,
) -> Result<usize, PolicyError> {
    let next = annealing_transition(state, graph, landscape.losses(), cooling, 0.0, rng)?;
    state.record_play(next);
    Ok(next)
}

/// One step of noisy annealing: select from the estimate-driven row with the
/// exploration floor, pull the selected arm, update its mean incrementally.
pub fn step_algorithm1<R: Rng + ?Sized>(
    state: &mut PolicyState,
    graph: &ArmGraph,
    instance: &BanditInstance,
    cooling: &CoolingSchedule,
    exploration: &ExplorationSchedule,
    rng: &mut R,
) -> Result<(usize, f64), PolicyError> {
    debug_assert!(
        state.means[state.current].is_finite(),
        "the current arm must have been pulled at least once"
    );
    let epsilon = exploration.epsilon((state.steps + 1) as f64);
    let means = state.means.clone();
    let next = annealing_transition(state, graph, &means, cooling, epsilon, rng)?;
    let loss = instance.sample(next, rng);
    state.record_pull(next, loss);
    Ok((next, loss))
}

/// Forced-pull budget per arm for the annealing bandit: `ceil(16 ln n / gamma^2)`.
pub fn algorithm2_pull_threshold(horizon: u64, pull_gamma: f64) -> u64 {
    (16.0 * (horizon as f64).ln() / (pull_gamma * pull_gamma)).ceil() as u64
}

/// One step of the annealing bandit (fully connected arm set).
///
/// Plain mode: while some arm is under the forced-pull threshold, play the
/// least-pulled such arm; afterwards anchor at the empirical argmin, propose
/// a uniform other arm, and accept it with the Metropolis factor.
///
/// Override mode (`remark2`): skip the forced phase (after a one-pull init
/// sweep so the argmin anchor has a finite estimate) and instead pull the
/// uniformly proposed arm outright while it is under the threshold.
pub fn step_algorithm2<R: Rng + ?Sized>(
    state: &mut PolicyState,
    instance: &BanditInstance,
    cooling: &CoolingSchedule,
    horizon: u64,
    pull_gamma: f64,
    remark2: bool,
    rng: &mut R,
) -> Result<(usize, f64), PolicyError> {
    let k = state.arm_count();
    let threshold = algorithm2_pull_threshold(horizon, pull_gamma);
    let forced_floor = if remark2 { 1 } else { threshold };
    let forced = (0..k)
        .filter(|&a| state.pulls[a] < forced_floor)
        .min_by_key(|&a| (state.pulls[a], a));
    let play = match forced {
        Some(a) => a,
        None => {
            let anchor = state.min_mean_arm();
            let mut candidate = rng.random_range(0..k - 1);
            if candidate >= anchor {
                candidate += 1;
            }
            if remark2 && state.pulls[candidate] < threshold {
                candidate
            } else {
                let temp = cooling.temperature((state.steps + 1) as f64, None)?;
                let accept =
                    metropolis_accept_prob(state.means[candidate] - state.means[anchor], temp);
                if rng.random::<f64>() < accept {
                    candidate
                } else {
                    anchor
                }
            }
        }
    };
    state.steps += 1;
    state.current = play;
    let loss = instance.sample(play, rng);
    state.record_pull(play, loss);
    Ok((play, loss))
}

/// One step of graph-constrained epsilon-greedy: with probability `1 - eps`
/// move to the lowest empirical mean in the closed neighbourhood (ties to
/// the lowest index), otherwise uniform over the closed neighbourhood.
pub fn step_eps_greedy_graph<R: Rng + ?Sized>(
    state: &mut PolicyState,
    graph: &ArmGraph,
    instance: &BanditInstance,
    epsilon: f64,
    rng: &mut R,
) -> (usize, f64) {
    let x = state.current;
    let mut closed: Vec<usize> = graph.neighbors(x).to_vec();
    closed.push(x);
    closed.sort_unstable();
    let next = if rng.random::<f64>() < epsilon {
        closed[rng.random_range(0..closed.len())]
    } else {
        *closed
            .iter()
            .min_by(|&&a, &&b| {
                state.means[a]
                    .partial_cmp(&state.means[b])
                    .unwrap()
                    .then(a.cmp(&b))
            })
            .unwrap()
    };
    state.steps += 1;
    state.current = next;
    let loss = instance.sample(next, rng);
    state.record_pull(next, loss);
    (next, loss)
}

/// One step of flat epsilon-greedy over all arms.
pub fn step_eps_greedy_flat<R: Rng + ?Sized>(
    state: &mut PolicyState,
    instance: &BanditInstance,
    epsilon: f64,
    rng: &mut R,
) -> (usize, f64) {
    let probs = eps_greedy_flat_probs(&state.means, epsilon);
    let play = sample_index(&probs, rng);
    state.steps += 1;
    state.current = play;
    let loss = instance.sample(play, rng);
    state.record_pull(play, loss);
    (play, loss)
}

/// One step of UCB over empirical rewards.
pub fn step_ucb<R: Rng + ?Sized>(
    state: &mut PolicyState,
    instance: &BanditInstance,
    rng: &mut R,
) -> (usize, f64) {
    let t = (state.steps + 1) as f64;
    let play = ucb_select(&state.means, &state.pulls, t);
    state.steps += 1;
    state.current = play;
    let loss = instance.sample(play, rng);
    state.record_pull(play, loss);
    (play, loss)
}

/// One step of Boltzmann exploration over empirical rewards.
pub fn step_softmax<R: Rng + ?Sized>(
    state: &mut PolicyState,
    instance: &BanditInstance,
    tau: f64,
    rng: &mut R,
) -> Result<(usize, f64), PolicyError> {
    if tau <= 0.0 {
        return Err(PolicyError::BadTau(tau));
    }
    let probs = softmax_probs(&state.means, tau);
    let play = sample_index(&probs, rng);
    state.steps += 1;
    state.current = play;
    let loss = instance.sample(play, rng);
    state.record_pull(play, loss);
    Ok((play, loss))
}

/// Config-facing policy description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PolicySpec {
    SaNoiseless {
        cooling: CoolingSchedule,
    },
    SaNoisy {
        cooling: CoolingSchedule,
        /// Defaults to exponent `2/(d+4)` on the config's graph.
        exploration: Option<ExplorationSchedule>,
        /// Optional per-arm budget pre-allocated by a depth-first sweep
        /// before annealing starts.
        #[serde(default)]
        preallocate: Option<u64>,
    },
    SaBandits {
        cooling: CoolingSchedule,
        /// Constant in the forced-pull count `ceil(16 ln n / gamma^2)`.
        pull_gamma: f64,
        /// Replace the forced-pull phase with in-band overrides of the
        /// uniform candidate.
        #[serde(default)]
        remark2: bool,
    },
    EpsGreedyGraph {
        epsilon: f64,
    },
    EpsGreedyFlat {
        epsilon: f64,
    },
    Ucb,
    Softmax {
        tau: f64,
    },
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SaNoiseless { .. } => "sa_noiseless",
            Self::SaNoisy { .. } => "sa_noisy",
            Self::SaBandits { .. } => "sa_bandits",
            Self::EpsGreedyGraph { .. } => "eps_greedy_graph",
            Self::EpsGreedyFlat { .. } => "eps_greedy_flat",
            Self::Ucb => "ucb",
            Self::Softmax { .. } => "softmax",
        }
    }

    /// Parameter-range validation, independent of any instance.
    pub fn check(&self) -> Result<(), PolicyError> {
        match self {
            Self::SaNoiseless { cooling } | Self::SaNoisy { cooling, .. } => {
                cooling.check().map_err(PolicyError::from)
            }
            Self::SaBandits { cooling, pull_gamma, .. } => {
                cooling.check()?;
                if *pull_gamma > 0.0 {
                    Ok(())
                } else {
                    Err(PolicyError::BadPullGamma(*pull_gamma))
                }
            }
            Self::EpsGreedyGraph { epsilon } | Self::EpsGreedyFlat { epsilon } => {
                if (0.0..=1.0).contains(epsilon) {
                    Ok(())
                } else {
                    Err(PolicyError::BadEpsilon(*epsilon))
                }
            }
            Self::Ucb => Ok(()),
            Self::Softmax { tau } => {
                if *tau > 0.0 {
                    Ok(())
                } else {
                    Err(PolicyError::BadTau(*tau))
                }
            }
        }
    }
}

/// Depth-first arm order from `start`, visiting neighbours by index.
fn dfs_order(graph: &ArmGraph, start: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(graph.arm_count());
    let mut seen = vec![false; graph.arm_count()];
    let mut stack = vec![start];
    while let Some(a) = stack.pop() {
        if seen[a] {
            continue;
        }
        seen[a] = true;
        order.push(a);
        for &b in graph.neighbors(a).iter().rev() {
            if !seen[b] {
                stack.push(b);
            }
        }
    }
    order
}

/// Drives one policy through rounds: handles the variant's initialization
/// (initial pull, init sweep, pre-allocation) and then delegates to the
/// step functions. One `play_round` call is exactly one arm play.
pub struct PolicyRunner<'a> {
    spec: &'a PolicySpec,
    graph: &'a ArmGraph,
    instance: &'a BanditInstance,
    state: PolicyState,
    exploration: ExplorationSchedule,
    /// Horizon the pull threshold is computed from (an epoch length under
    /// the doubling wrapper).
    parameter_horizon: u64,
    start_arm: usize,
    prealloc_order: Vec<usize>,
}

impl<'a> PolicyRunner<'a> {
    pub fn new(
        spec: &'a PolicySpec,
        graph: &'a ArmGraph,
        instance: &'a BanditInstance,
        horizon: u64,
        start_arm: usize,
    ) -> Result<Self, PolicyError> {
        Self::with_state(
            spec,
            graph,
            instance,
            horizon,
            start_arm,
            PolicyState::new(instance.arm_count(), start_arm),
        )
    }

    /// Resumes from existing state (used by the doubling wrapper, which
    /// rebinds horizon-dependent parameters while keeping means and counts).
    pub fn with_state(
        spec: &'a PolicySpec,
        graph: &'a ArmGraph,
        instance: &'a BanditInstance,
        horizon: u64,
        start_arm: usize,
        state: PolicyState,
    ) -> Result<Self, PolicyError> {
        spec.check()?;
        let exploration = match spec {
            PolicySpec::SaNoisy { exploration, .. } => exploration.unwrap_or_else(|| {
                ExplorationSchedule::default_for_depth(crate::graph::covering_depth(graph))
            }),
            _ => ExplorationSchedule::zero(),
        };
        if let PolicySpec::SaBandits { pull_gamma, remark2: false, .. } = spec {
            let budget =
                instance.arm_count() as u64 * algorithm2_pull_threshold(horizon, *pull_gamma);
            if horizon < budget {
                return Err(PolicyError::HorizonTooShort { horizon, budget });
            }
        }
        let prealloc_order = match spec {
            PolicySpec::SaNoisy { preallocate: Some(_), .. } => dfs_order(graph, start_arm),
            _ => Vec::new(),
        };
        Ok(Self {
            spec,
            graph,
            instance,
            state,
            exploration,
            parameter_horizon: horizon,
            start_arm,
            prealloc_order,
        })
    }

    pub fn state(&self) -> &PolicyState {
        &self.state
    }

    pub fn into_state(self) -> PolicyState {
        self.state
    }

    /// Plays one round and returns the arm and the incurred loss (the true
    /// loss for the noiseless chain, a sample otherwise).
    pub fn play_round<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(usize, f64), PolicyError> {
        let k = self.instance.arm_count();
        let landscape = self.instance.landscape();
        match self.spec {
            PolicySpec::SaNoiseless { cooling } => {
                if self.state.plays == 0 {
                    self.state.record_play(self.start_arm);
                    return Ok((self.start_arm, landscape.loss(self.start_arm)));
                }
                let arm = step_sa_noiseless(&mut self.state, self.graph, landscape, cooling, rng)?;
                Ok((arm, landscape.loss(arm)))
            }
            PolicySpec::SaNoisy { cooling, preallocate, .. } => {
                if let Some(budget) = preallocate {
                    let sweep_len = *budget * k as u64;
                    if self.state.plays < sweep_len {
                        let arm = self.prealloc_order[(self.state.plays / budget) as usize];
                        let loss = self.instance.sample(arm, rng);
                        self.state.record_pull(arm, loss);
                        if self.state.plays == sweep_len {
                            self.state.current = self.start_arm;
                        }
                        return Ok((arm, loss));
                    }
                } else if self.state.plays == 0 {
                    // The initial arm is pulled once so the chain always has
                    // a finite estimate at its current position.
                    let loss = self.instance.sample(self.start_arm, rng);
                    self.state.record_pull(self.start_arm, loss);
                    return Ok((self.start_arm, loss));
                }
                step_algorithm1(
                    &mut self.state,
                    self.graph,
                    self.instance,
                    cooling,
                    &self.exploration,
                    rng,
                )
            }
            PolicySpec::SaBandits { cooling, pull_gamma, remark2 } => step_algorithm2(
                &mut self.state,
                self.instance,
                cooling,
                self.parameter_horizon,
                *pull_gamma,
                *remark2,
                rng,
            ),
            PolicySpec::EpsGreedyGraph { epsilon } => {
                if let Some(arm) = self.init_sweep_arm() {
                    let loss = self.pull_init(arm, rng);
                    // The walker sits at the start arm once the sweep ends.
                    self.state.current = if self.state.plays == k as u64 {
                        self.start_arm
                    } else {
                        self.state.current
                    };
                    return Ok((arm, loss));
                }
                Ok(step_eps_greedy_graph(
                    &mut self.state,
                    self.graph,
                    self.instance,
                    *epsilon,
                    rng,
                ))
            }
            PolicySpec::EpsGreedyFlat { epsilon } => {
                if let Some(arm) = self.init_sweep_arm() {
                    let loss = self.pull_init(arm, rng);
                    return Ok((arm, loss));
                }
                Ok(step_eps_greedy_flat(&mut self.state, self.instance, *epsilon, rng))
            }
            PolicySpec::Ucb => {
                if let Some(arm) = self.init_sweep_arm() {
                    let loss = self.pull_init(arm, rng);
                    return Ok((arm, loss));
                }
                Ok(step_ucb(&mut self.state, self.instance, rng))
            }
            PolicySpec::Softmax { tau } => {
                if let Some(arm) = self.init_sweep_arm() {
                    let loss = self.pull_init(arm, rng);
                    return Ok((arm, loss));
                }
                step_softmax(&mut self.state, self.instance, *tau, rng)
            }
        }
    }

    /// Baselines pull each arm once, in index order, before their rule runs.
    fn init_sweep_arm(&self) -> Option<usize> {
        let k = self.instance.arm_count() as u64;
        if self.state.plays < k {
            Some(self.state.plays as usize)
        } else {
            None
        }
    }

    fn pull_init<R: Rng + ?Sized>(&mut self, arm: usize, rng: &mut R) -> f64 {
        let loss = self.instance.sample(arm, rng);
        self.state.record_pull(arm, loss);
        self.state.current = arm;
        loss
    }
}
