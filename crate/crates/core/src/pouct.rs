//! PO-UCT baseline: Monte Carlo tree search over action–observation histories
//! of the meta-level MDP.
//!
//! Each simulation samples latent criterion scores from the current belief,
//! walks the tree with UCB1, simulates expert ratings from the latent scores,
//! and evaluates the first new node with a rollout. The tree is rebuilt for
//! every decision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::{
    derive_seed, round_and_clamp, run_episode, termination_choice, BeliefState, EpisodeRecord, MetaAction,
    ProblemConfig, Query, TrialInstance,
};
use crate::error::Result;

/// How a freshly expanded node is valued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rollout {
    TerminateNow,
    /// Uniformly random unobserved queries until the budget is spent, then terminate.
    RandomToBudget,
}

/// Reward credited to `Terminate` inside the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalValue {
    /// Expected value of the belief-optimal project under the simulated belief.
    BeliefMean,
    /// Value of the belief-optimal project under the sampled latent scores.
    SampledLatent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PouctConfig {
    pub n_simulations: usize,
    /// UCB1 exploration constant, applied to values min–max normalized per node.
    pub exploration_c: f64,
    pub rollout: Rollout,
    pub terminal_value: TerminalValue,
}

impl Default for PouctConfig {
    fn default() -> Self {
        PouctConfig {
            n_simulations: 1000,
            exploration_c: 1.0,
            rollout: Rollout::RandomToBudget,
            terminal_value: TerminalValue::BeliefMean,
        }
    }
}

impl PouctConfig {
    pub fn with_simulations(n_simulations: usize) -> Self {
        PouctConfig {
            n_simulations: n_simulations.max(1),
            ..Self::default()
        }
    }
}

/// Statistics of one action below a node.
#[derive(Debug, Clone)]
pub struct ActionStats {
    pub action: MetaAction,
    pub visits: u32,
    pub value_sum: f64,
    /// Child node per observed rating (queries only).
    outcomes: Vec<Option<u32>>,
}

impl ActionStats {
    pub fn mean(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.value_sum / self.visits as f64
        }
    }
}

/// One action–observation history. A node's visit count equals the sum of
/// its actions' visit counts; a node is created unvisited.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub visits: u32,
    pub actions: Vec<ActionStats>,
}

/// Search tree built for one decision; node 0 is the root.
#[derive(Debug, Clone)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
}

impl SearchTree {
    pub fn root(&self) -> &SearchNode {
        &self.nodes[0]
    }

    /// Most visited root action; ties go to the higher mean value, then to the
    /// lexicographically first action.
    pub fn best_action(&self) -> MetaAction {
        let mut best = &self.root().actions[0];
        for a in &self.root().actions[1..] {
            if a.visits > best.visits || (a.visits == best.visits && a.mean() > best.mean()) {
                best = a;
            }
        }
        best.action
    }
}

struct Planner<'a> {
    config: &'a ProblemConfig,
    params: &'a PouctConfig,
    rng: ChaCha8Rng,
    tree: SearchTree,
    n_ratings: usize,
}

impl<'a> Planner<'a> {
    fn new_node(&self, belief: &BeliefState) -> SearchNode {
        let actions = belief
            .available_actions(self.config.budget)
            .into_iter()
            .map(|action| ActionStats {
                action,
                visits: 0,
                value_sum: 0.0,
                outcomes: match action {
                    MetaAction::Query(_) => vec![None; self.n_ratings],
                    MetaAction::Terminate => Vec::new(),
                },
            })
            .collect();
        SearchNode { visits: 0, actions }
    }

    fn select(&self, node: usize) -> usize {
        let n = &self.tree.nodes[node];
        if let Some(i) = n.actions.iter().position(|a| a.visits == 0) {
            return i;
        }
        let (lo, hi) = n
            .actions
            .iter()
            .map(ActionStats::mean)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| (lo.min(m), hi.max(m)));
        let range = hi - lo;
        let ln_n = (n.visits as f64).ln();
        let mut best = (0, f64::NEG_INFINITY);
        for (i, a) in n.actions.iter().enumerate() {
            let q = if range > 0.0 { (a.mean() - lo) / range } else { 0.0 };
            let score = q + self.params.exploration_c * (ln_n / a.visits as f64).sqrt();
            if score > best.1 {
                best = (i, score);
            }
        }
        best.0
    }

    fn sample_latent(&mut self, belief: &BeliefState) -> Vec<f64> {
        let (lo, hi) = (self.config.min_obs as f64, self.config.max_obs as f64);
        belief
            .cells()
            .iter()
            .map(|c| {
                Normal::new(c.mu, c.sigma)
                    .expect("belief sigma is positive")
                    .sample(&mut self.rng)
                    .clamp(lo, hi)
            })
            .collect()
    }

    fn observe(&mut self, belief: &mut BeliefState, latent: &[f64], q: Query) -> (i32, f64) {
        let expert = self.config.experts[q.expert];
        let noise: f64 = StandardNormal.sample(&mut self.rng);
        let score = latent[q.project * self.config.n_criteria + q.criterion];
        let obs = round_and_clamp(
            score + expert.reliability * noise,
            self.config.min_obs,
            self.config.max_obs,
        );
        belief
            .observe(q, obs as f64, expert.reliability)
            .expect("belief and expert are valid");
        (obs, -expert.cost)
    }

    fn terminal(&self, belief: &BeliefState, latent: &[f64]) -> f64 {
        let (project, value) = termination_choice(belief, &self.config.weights);
        match self.params.terminal_value {
            TerminalValue::BeliefMean => value,
            TerminalValue::SampledLatent => {
                let row = &latent[project * self.config.n_criteria..(project + 1) * self.config.n_criteria];
                row.iter().zip(&self.config.weights).map(|(s, w)| s * w).sum()
            }
        }
    }

    fn rollout(&mut self, belief: &mut BeliefState, latent: &[f64]) -> f64 {
        let mut total = 0.0;
        if self.params.rollout == Rollout::RandomToBudget {
            let n_queries = self.config.n_queries();
            let (nc, ne) = (self.config.n_criteria, self.config.n_experts);
            while belief.queries_used() < self.config.budget && belief.queries_used() < n_queries {
                let slot = self.rng.random_range(0..n_queries);
                let q = Query::new(slot / (nc * ne), (slot / ne) % nc, slot % ne);
                if belief.is_observed(q) {
                    continue;
                }
                total += self.observe(belief, latent, q).1;
            }
        }
        total + self.terminal(belief, latent)
    }

    fn simulate(&mut self, root_belief: &BeliefState) {
        let latent = self.sample_latent(root_belief);
        let mut belief = root_belief.clone();
        let mut node = 0usize;
        let mut path: Vec<(usize, usize, f64)> = Vec::new();
        let mut tail = 0.0;
        loop {
            let ai = self.select(node);
            match self.tree.nodes[node].actions[ai].action {
                MetaAction::Terminate => {
                    let r = self.terminal(&belief, &latent);
                    path.push((node, ai, r));
                    break;
                }
                MetaAction::Query(q) => {
                    let (obs, r) = self.observe(&mut belief, &latent, q);
                    path.push((node, ai, r));
                    let slot = (obs - self.config.min_obs) as usize;
                    match self.tree.nodes[node].actions[ai].outcomes[slot] {
                        Some(child) => node = child as usize,
                        None => {
                            let child = self.new_node(&belief);
                            self.tree.nodes.push(child);
                            let id = (self.tree.nodes.len() - 1) as u32;
                            self.tree.nodes[node].actions[ai].outcomes[slot] = Some(id);
                            tail = self.rollout(&mut belief, &latent);
                            break;
                        }
                    }
                }
            }
        }
        let mut ret = tail;
        for &(n, ai, r) in path.iter().rev() {
            ret += r;
            let node = &mut self.tree.nodes[n];
            node.visits += 1;
            node.actions[ai].visits += 1;
            node.actions[ai].value_sum += ret;
        }
    }
}

/// Builds the search tree for one decision at `belief`.
pub fn pouct_search(belief: &BeliefState, config: &ProblemConfig, params: &PouctConfig, seed: u64) -> SearchTree {
    let mut planner = Planner {
        config,
        params,
        rng: ChaCha8Rng::seed_from_u64(seed),
        tree: SearchTree { nodes: Vec::new() },
        n_ratings: config.n_ratings(),
    };
    let root = planner.new_node(belief);
    planner.tree.nodes.push(root);
    if planner.tree.nodes[0].actions.len() > 1 {
        for _ in 0..params.n_simulations.max(1) {
            planner.simulate(belief);
        }
    }
    planner.tree
}

/// Most visited root action after `n_simulations` simulations.
pub fn pouct_plan(belief: &BeliefState, config: &ProblemConfig, params: &PouctConfig, seed: u64) -> MetaAction {
    pouct_search(belief, config, params, seed).best_action()
}

/// Replans from scratch before every action; decision `k` uses the seed
/// `derive_seed(seed, k)`.
pub fn run_pouct_episode(
    instance: &TrialInstance,
    config: &ProblemConfig,
    params: &PouctConfig,
    seed: u64,
) -> Result<EpisodeRecord> {
    let mut decision = 0u64;
    let name = format!("pouct:{}", params.n_simulations);
    run_episode(&name, instance, config, |b| {
        let a = pouct_plan(b, config, params, derive_seed(seed, decision));
        decision += 1;
        a
    })
}
