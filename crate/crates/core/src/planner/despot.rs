//! Sparse belief tree over a fixed set of sampled scenarios. Each scenario
//! fixes the exo-agents' hidden states and the noise stream used at every
//! depth, so a tree node is the set of scenarios consistent with one
//! action-observation history.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use super::{
    argmax_action, default_rollout, nearest_others, scenario_rng, step_full, Action, PlannerInput, PomdpState,
    SearchConfig,
};
use crate::belief::{joint_sample, AgentBelief};
use crate::roadnet::RoadMap;
use crate::sim::AgentId;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub state: PomdpState,
    /// Seeds the noise stream at every depth.
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanOutcome {
    pub action: Action,
    /// Regularized lower bound of each root action.
    pub root_values: [f64; 3],
    pub lower: f64,
    pub upper: f64,
    pub trials: usize,
    pub nodes: usize,
}

/// `num_scenarios` draws of the joint hidden state of the nearest
/// exo-agents, each with its own noise seed.
pub fn sample_scenarios<R: Rng + ?Sized>(
    input: &PlannerInput<'_>,
    beliefs: &BTreeMap<AgentId, AgentBelief>,
    config: &SearchConfig,
    rng: &mut R,
) -> Vec<Scenario> {
    let near: BTreeMap<AgentId, AgentBelief> = nearest_others(input, config.max_exo)
        .into_iter()
        .filter_map(|(id, _, _)| beliefs.get(&id).map(|b| (id, b.clone())))
        .collect();
    (0..config.num_scenarios)
        .map(|_| {
            let hidden = joint_sample(&near, rng);
            let seed = rng.random::<u64>();
            Scenario { state: PomdpState::from_input(input, &near, &hidden, config.max_exo), seed }
        })
        .collect()
}

pub fn plan<R: Rng + ?Sized>(
    input: &PlannerInput<'_>,
    beliefs: &BTreeMap<AgentId, AgentBelief>,
    config: &SearchConfig,
    rng: &mut R,
) -> PlanOutcome {
    let scenarios = sample_scenarios(input, beliefs, config, rng);
    plan_scenarios(input.map, scenarios, config)
}

struct Particle {
    seed: u64,
    state: PomdpState,
}

struct QNode {
    reward: f64,
    lower: f64,
    upper: f64,
    /// (observation key, node index)
    children: Vec<(u64, usize)>,
}

struct VNode {
    particles: Vec<Particle>,
    depth: usize,
    default_lower: f64,
    lower: f64,
    upper: f64,
    actions: Vec<QNode>,
}

struct Tree<'a> {
    map: &'a RoadMap,
    config: &'a SearchConfig,
    nodes: Vec<VNode>,
    k: usize,
}

impl Tree<'_> {
    fn weight(&self, i: usize) -> f64 {
        self.nodes[i].particles.len() as f64 / self.k as f64
    }

    fn leaf(&mut self, particles: Vec<Particle>, depth: usize) -> usize {
        let c = self.config;
        let (lower, upper) = if depth >= c.max_depth {
            (0.0, 0.0)
        } else {
            let n = particles.len() as f64;
            let lo: f64 = particles.iter().map(|p| default_rollout(self.map, &p.state, p.seed, c)).sum::<f64>() / n;
            let hi: f64 = particles.iter().map(|p| free_drive_value(&p.state, c)).sum::<f64>() / n;
            (lo, hi.max(lo))
        };
        self.nodes.push(VNode { particles, depth, default_lower: lower, lower, upper, actions: Vec::new() });
        self.nodes.len() - 1
    }

    fn expand(&mut self, i: usize) {
        let depth = self.nodes[i].depth;
        let n = self.nodes[i].particles.len() as f64;
        let mut actions = Vec::with_capacity(3);
        for a in Action::ALL {
            let mut groups: BTreeMap<u64, Vec<Particle>> = BTreeMap::new();
            let mut reward = 0.0;
            for p in &self.nodes[i].particles {
                let mut rng = scenario_rng(p.seed, depth);
                let (s, r, key) = step_full(self.map, &p.state, a, self.config, &mut rng, true);
                reward += r;
                groups.entry(key).or_default().push(Particle { seed: p.seed, state: s });
            }
            let children = groups.into_iter().map(|(key, ps)| (key, self.leaf(ps, depth + 1))).collect();
            actions.push(QNode { reward: reward / n, lower: 0.0, upper: 0.0, children });
        }
        self.nodes[i].actions = actions;
        self.backup(i);
    }

    fn backup(&mut self, i: usize) {
        let c = self.config;
        let n = self.nodes[i].particles.len() as f64;
        let mut best_lower = self.nodes[i].default_lower;
        let mut best_upper = f64::NEG_INFINITY;
        for k in 0..self.nodes[i].actions.len() {
            let q = &self.nodes[i].actions[k];
            let (mut lo, mut hi) = (0.0, 0.0);
            for &(_, child) in &q.children {
                let w = self.nodes[child].particles.len() as f64 / n;
                lo += w * self.nodes[child].lower;
                hi += w * self.nodes[child].upper;
            }
            let lower = q.reward - c.regularization + c.discount * lo;
            let upper = q.reward + c.discount * hi;
            let q = &mut self.nodes[i].actions[k];
            q.lower = lower;
            q.upper = upper.max(lower);
            best_lower = best_lower.max(lower);
            best_upper = best_upper.max(q.upper);
        }
        let node = &mut self.nodes[i];
        node.lower = best_lower;
        node.upper = best_upper.max(best_lower);
    }

    fn trial(&mut self, root: usize) {
        let c = self.config;
        let root_gap = self.nodes[root].upper - self.nodes[root].lower;
        let mut path = alloc::vec![root];
        let mut i = root;
        loop {
            if self.nodes[i].depth >= c.max_depth || self.nodes[i].particles.iter().all(|p| p.state.collided) {
                break;
            }
            if self.nodes[i].actions.is_empty() {
                self.expand(i);
            }
            let uppers: [f64; 3] = core::array::from_fn(|k| self.nodes[i].actions[k].upper);
            let a = argmax_action(&uppers);
            let mut next: Option<(f64, usize)> = None;
            for &(_, child) in &self.nodes[i].actions[a.index()].children {
                let node = &self.nodes[child];
                let excess = self.weight(child) * math_pow(c.discount, node.depth) * (node.upper - node.lower)
                    - c.exploration * root_gap;
                if next.is_none_or(|(e, _)| excess > e) {
                    next = Some((excess, child));
                }
            }
            match next {
                Some((e, child)) if e > 0.0 => {
                    path.push(child);
                    i = child;
                }
                _ => break,
            }
        }
        for &j in path.iter().rev() {
            if !self.nodes[j].actions.is_empty() {
                self.backup(j);
            }
        }
    }
}

fn math_pow(x: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, _| acc * x)
}

/// Return of accelerating to `v_max` on an empty road: no real trajectory
/// does better.
fn free_drive_value(state: &PomdpState, c: &SearchConfig) -> f64 {
    if state.collided {
        return 0.0;
    }
    let mut v = state.ego.speed();
    let mut total = 0.0;
    let mut disc = 1.0;
    for _ in state.depth..c.max_depth {
        v = (v + Action::Acc.accel() * c.planning_dt).min(c.v_max);
        total += disc * c.reward.speed * (v - c.v_max) / c.v_max;
        disc *= c.discount;
    }
    total.min(0.0)
}

/// Search over the given scenarios.
pub fn plan_scenarios(map: &RoadMap, scenarios: Vec<Scenario>, config: &SearchConfig) -> PlanOutcome {
    assert!(!scenarios.is_empty(), "at least one scenario");
    let k = scenarios.len();
    let mut tree = Tree { map, config, nodes: Vec::new(), k };
    let particles = scenarios.into_iter().map(|s| Particle { seed: s.seed, state: s.state }).collect();
    let root = tree.leaf(particles, 0);
    tree.expand(root);
    let mut trials = 1;
    while trials < config.max_trials && tree.nodes[root].upper - tree.nodes[root].lower > 1e-9 {
        tree.trial(root);
        trials += 1;
    }
    let root_values: [f64; 3] = core::array::from_fn(|a| tree.nodes[root].actions[a].lower);
    let floor = config.return_floor();
    for v in root_values.iter().chain([&tree.nodes[root].lower, &tree.nodes[root].upper]) {
        assert!(*v >= floor - 1e-9 && *v <= 1e-9, "value {v} outside [{floor}, 0]");
    }
    PlanOutcome {
        action: argmax_action(&root_values),
        root_values,
        lower: tree.nodes[root].lower,
        upper: tree.nodes[root].upper,
        trials,
        nodes: tree.nodes.len(),
    }
}
