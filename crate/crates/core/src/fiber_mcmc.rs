//! Metropolis-Hastings random walk over a fiber using sampled Graver moves.
//!
//! Proposals are drawn independently of the current state and their sign is
//! a fair coin, so the proposal is symmetric and the uniform target accepts
//! every feasible move.

use std::collections::HashSet;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_model::{degree_sequence, try_apply_in_place, Capacities, EdgeVector, Graph, Move};
use crate::graver_gen::{sample_graver_element, GenMode};

/// Stationary distribution of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[default]
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    /// Total iterations, burn-in included.
    pub steps: u64,
    pub burn_in: u64,
    /// Keep every `thinning`-th post-burn-in state.
    pub thinning: u64,
    pub seed: u64,
    /// `square_free` is overridden from the capacities by [`run_chain`].
    pub mode: GenMode,
    pub target: Target,
    /// Count distinct visited states (post burn-in) in the report.
    pub track_distinct: bool,
}

impl ChainConfig {
    pub fn new(steps: u64, burn_in: u64, seed: u64) -> Self {
        ChainConfig {
            steps,
            burn_in,
            thinning: 1,
            seed,
            mode: GenMode::default(),
            target: Target::Uniform,
            track_distinct: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.steps {
            return Err(Error::Config(format!(
                "burn-in ({}) must be smaller than the number of steps ({})",
                self.burn_in, self.steps
            )));
        }
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        if self.mode.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of states the chain emits.
    pub fn sample_count(&self) -> u64 {
        self.steps.saturating_sub(self.burn_in) / self.thinning.max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    pub current: EdgeVector,
    pub step_index: u64,
    pub accepted: u64,
    pub rejected_infeasible: u64,
    pub rejected_exhausted: u64,
}

impl ChainState {
    pub fn new(x0: EdgeVector) -> Self {
        ChainState {
            current: x0,
            step_index: 0,
            accepted: 0,
            rejected_infeasible: 0,
            rejected_exhausted: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted(Move),
    Infeasible,
    Exhausted,
}

/// One Metropolis-Hastings step: propose `+-z` for a sampled Graver element
/// `z` and move there if the result stays within the capacities.
pub fn mh_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    graph: &Graph,
    caps: &Capacities,
    mode: GenMode,
    rng: &mut R,
) -> Result<StepOutcome> {
    let proposal = match sample_graver_element(graph, mode, rng) {
        Ok(el) => el.mv,
        Err(Error::Exhausted { .. }) => {
            state.step_index += 1;
            state.rejected_exhausted += 1;
            return Ok(StepOutcome::Exhausted);
        }
        Err(e) => return Err(e),
    };
    let z = if rng.gen_bool(0.5) {
        proposal.negated()
    } else {
        proposal
    };
    Ok(propose(state, z, caps))
}

/// Applies a given proposal to the state, updating the counters.
pub fn propose(state: &mut ChainState, z: Move, caps: &Capacities) -> StepOutcome {
    state.step_index += 1;
    if try_apply_in_place(&mut state.current, &z, caps) {
        state.accepted += 1;
        StepOutcome::Accepted(z)
    } else {
        state.rejected_infeasible += 1;
        StepOutcome::Infeasible
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    pub steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub seed: u64,
    pub samples: u64,
    pub accepted: u64,
    pub rejected_infeasible: u64,
    pub rejected_exhausted: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distinct_states: Option<u64>,
}

impl ChainReport {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.steps as f64
    }

    /// Combines reports of independent chains.
    pub fn merged(reports: &[ChainReport]) -> Option<ChainReport> {
        let first = reports.first()?;
        let mut out = first.clone();
        for r in &reports[1..] {
            out.steps += r.steps;
            out.burn_in += r.burn_in;
            out.samples += r.samples;
            out.accepted += r.accepted;
            out.rejected_infeasible += r.rejected_infeasible;
            out.rejected_exhausted += r.rejected_exhausted;
            // distinct counts do not add across chains
            out.distinct_states = None;
        }
        Some(out)
    }
}

/// Receives the chain's accepted moves and retained states.
pub trait ChainObserver {
    /// Called after every accepted move (burn-in included) with the new state.
    fn on_accept(&mut self, _state: &EdgeVector, _mv: &Move) {}

    /// Called for every retained post-burn-in state.
    fn on_sample(&mut self, state: &EdgeVector);
}

/// Stores every retained state.
#[derive(Debug, Default, Clone)]
pub struct CollectSamples(pub Vec<EdgeVector>);

impl ChainObserver for CollectSamples {
    fn on_sample(&mut self, state: &EdgeVector) {
        self.0.push(state.clone());
    }
}

impl<F: FnMut(&EdgeVector)> ChainObserver for F {
    fn on_sample(&mut self, state: &EdgeVector) {
        self(state)
    }
}

/// Runs one chain from `x0`. Simple-graph fibers (all caps one) use
/// square-free moves, all others unrestricted moves.
pub fn run_chain<O: ChainObserver + ?Sized>(
    x0: &EdgeVector,
    graph: &Graph,
    caps: &Capacities,
    config: &ChainConfig,
    observer: &mut O,
) -> Result<ChainReport> {
    config.validate()?;
    if !x0.respects(caps) {
        return Err(Error::Config("starting state violates the capacities".into()));
    }
    if let Some(e) = x0.support().find(|&e| !graph.has_edge(e)) {
        return Err(Error::InvalidEdge(e.lo() + 1, e.hi() + 1));
    }
    let mode = GenMode {
        square_free: caps.is_one(),
        ..config.mode
    };
    let degrees = if cfg!(debug_assertions) {
        Some(degree_sequence(graph, x0))
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = ChainState::new(x0.clone());
    let mut distinct = config.track_distinct.then(HashSet::new);
    let mut samples = 0;
    for step in 0..config.steps {
        if let StepOutcome::Accepted(z) = mh_step(&mut state, graph, caps, mode, &mut rng)? {
            observer.on_accept(&state.current, &z);
        }
        if step >= config.burn_in {
            if let Some(set) = &mut distinct {
                if !set.contains(&state.current) {
                    set.insert(state.current.clone());
                }
            }
            if (step - config.burn_in + 1).is_multiple_of(config.thinning) {
                if let Some(d) = &degrees {
                    debug_assert_eq!(&degree_sequence(graph, &state.current), d);
                }
                observer.on_sample(&state.current);
                samples += 1;
            }
        }
    }
    Ok(ChainReport {
        steps: config.steps,
        burn_in: config.burn_in,
        thinning: config.thinning,
        seed: config.seed,
        samples,
        accepted: state.accepted,
        rejected_infeasible: state.rejected_infeasible,
        rejected_exhausted: state.rejected_exhausted,
        distinct_states: distinct.map(|s| s.len() as u64),
    })
}

/// Runs `chains` independent chains on seeds `seed, seed + 1, ...`
/// concurrently. Observers come from `make_observer(chain_index)` and are
/// returned in chain order, so results do not depend on scheduling.
pub fn run_chains<O, F>(
    x0: &EdgeVector,
    graph: &Graph,
    caps: &Capacities,
    config: &ChainConfig,
    chains: usize,
    make_observer: F,
) -> Result<Vec<(O, ChainReport)>>
where
    O: ChainObserver + Send,
    F: Fn(usize) -> Result<O> + Sync,
{
    if chains == 0 {
        return Err(Error::Config("at least one chain is required".into()));
    }
    config.validate()?;
    thread::scope(|scope| {
        let handles: Vec<_> = (0..chains)
            .map(|k| {
                let make_observer = &make_observer;
                scope.spawn(move || {
                    let config = ChainConfig {
                        seed: config.seed.wrapping_add(k as u64),
                        ..config.clone()
                    };
                    let mut observer = make_observer(k)?;
                    let report = run_chain(x0, graph, caps, &config, &mut observer)?;
                    Ok((observer, report))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}

/// Upper-tail Monte Carlo p-value: the fraction of sampled values at least
/// as large as `observed`.
pub fn estimate_pvalue(samples: &[f64], observed: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let extreme = samples.iter().filter(|&&s| s >= observed).count();
    Ok(extreme as f64 / samples.len() as f64)
}
