use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tool_model::{ArgumentDraft, Context, ToolOutput};

use super::SearchError;

pub type NodeId = usize;
pub const ROOT: NodeId = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub tool: String,
    pub draft: ArgumentDraft,
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub action: Option<Action>,
    /// Context after this node's action has run (before, while unvisited).
    pub context: Context,
    pub output: Option<ToolOutput>,
    pub visits: u64,
    pub value: f64,
    pub prior: f64,
    pub last_reward: Option<f64>,
    pub expandable: bool,
    pub terminal: bool,
    /// The task goal holds in this node's context.
    pub goal: bool,
    pub children: Vec<NodeId>,
    pub depth: usize,
}

impl SearchNode {
    pub fn is_executed(&self) -> bool {
        self.output.is_some()
    }
}

/// Arena of search nodes. Node 0 is the root.
#[derive(Debug, Clone)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
}

/// Prior-augmented UCT. Unvisited children score `+inf`.
pub fn uct_score(value: f64, visits: u64, prior: f64, parent_visits: u64, lambda: f64) -> f64 {
    if visits == 0 {
        return f64::INFINITY;
    }
    value + lambda * prior * ((parent_visits as f64).ln() / visits as f64).sqrt()
}

/// `lambda * factor^depth`, or `lambda` when annealing is off.
pub fn anneal_lambda(lambda: f64, depth: usize, factor: Option<f64>) -> f64 {
    match factor {
        Some(f) => lambda * f.powi(depth as i32),
        None => lambda,
    }
}

impl SearchTree {
    pub fn new(context: Context) -> Self {
        Self {
            nodes: vec![SearchNode {
                id: ROOT,
                parent: None,
                action: None,
                context,
                output: None,
                visits: 0,
                value: 0.0,
                prior: 1.0,
                last_reward: None,
                expandable: true,
                terminal: false,
                goal: false,
                children: Vec::new(),
                depth: 0,
            }],
        }
    }

    pub fn root(&self) -> &SearchNode {
        &self.nodes[ROOT]
    }

    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut SearchNode {
        &mut self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Adds an unvisited child. Panics if the parent is not expandable.
    pub fn add_child(&mut self, parent: NodeId, action: Action, prior: f64) -> NodeId {
        let p = &self.nodes[parent];
        assert!(p.expandable, "child added to non-expandable node {parent}");
        let id = self.nodes.len();
        let node = SearchNode {
            id,
            parent: Some(parent),
            action: Some(action),
            context: p.context.clone(),
            output: None,
            visits: 0,
            value: 0.0,
            prior,
            last_reward: None,
            expandable: true,
            terminal: false,
            goal: false,
            children: Vec::new(),
            depth: p.depth + 1,
        };
        self.nodes.push(node);
        self.nodes[parent].children.push(id);
        id
    }

    /// Ids from `id` up to and including the root.
    pub fn path_to_root(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path
    }

    pub fn eligible_children(&self, id: NodeId) -> Vec<NodeId> {
        self.nodes[id]
            .children
            .iter()
            .copied()
            .filter(|&c| {
                let n = &self.nodes[c];
                n.expandable || n.visits == 0
            })
            .collect()
    }

    /// Picks the best eligible child of `id`, or `None` if none is eligible.
    pub fn select_child<R: Rng>(
        &self,
        id: NodeId,
        lambda: f64,
        jitter: f64,
        rng: &mut R,
    ) -> Option<NodeId> {
        let parent = &self.nodes[id];
        let eligible = self.eligible_children(id);
        if eligible.is_empty() {
            return None;
        }
        let scores: Vec<f64> = eligible
            .iter()
            .map(|&c| {
                let n = &self.nodes[c];
                uct_score(n.value, n.visits, n.prior, parent.visits, lambda)
            })
            .collect();
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<NodeId> = eligible
            .iter()
            .zip(&scores)
            .filter(|(_, &s)| s == best)
            .map(|(&c, _)| c)
            .collect();
        let most = tied.iter().map(|&c| self.nodes[c].visits).max().unwrap();
        let tied: Vec<NodeId> = tied
            .into_iter()
            .filter(|&c| self.nodes[c].visits == most)
            .collect();
        if tied.len() == 1 {
            return Some(tied[0]);
        }
        let mut pick = tied[0];
        let mut best_draw = f64::NEG_INFINITY;
        for &c in &tied {
            let draw = if jitter > 0.0 {
                rng.gen_range(0.0..jitter)
            } else {
                0.0
            };
            if draw > best_draw {
                best_draw = draw;
                pick = c;
            }
        }
        Some(pick)
    }

    /// Descends from the root to a node with no eligible children or a
    /// terminal node.
    pub fn select_path<R: Rng>(
        &self,
        lambda: f64,
        anneal: Option<f64>,
        jitter: f64,
        rng: &mut R,
    ) -> Result<NodeId, SearchError> {
        let root = self.root();
        if root.terminal || !root.expandable {
            return Err(SearchError::TreeExhausted);
        }
        let mut cur = ROOT;
        loop {
            let node = &self.nodes[cur];
            if node.terminal || node.children.is_empty() {
                return Ok(cur);
            }
            let l = anneal_lambda(lambda, node.depth, anneal);
            match self.select_child(cur, l, jitter, rng) {
                Some(c) => cur = c,
                None => return Ok(cur),
            }
        }
    }

    /// Adds one visit with `reward` to every edge from `id` to the root.
    pub fn backpropagate(&mut self, id: NodeId, reward: f64) {
        for n in self.path_to_root(id) {
            let node = &mut self.nodes[n];
            node.visits += 1;
            node.value += (reward - node.value) / node.visits as f64;
        }
    }

    /// Marks the node non-expandable when `reward < tau_post`. Returns
    /// whether it was pruned.
    pub fn apply_post_pruning(&mut self, id: NodeId, reward: f64, tau_post: f64) -> bool {
        if reward < tau_post {
            self.nodes[id].expandable = false;
            true
        } else {
            false
        }
    }

    /// Root-to-leaf path with the highest mean edge value among visited
    /// leaves, restricted to goal leaves when any exist. Ties: higher
    /// last-edge value, then shorter, then action names.
    pub fn best_path(&self) -> Result<Vec<NodeId>, SearchError> {
        let any_goal = self.nodes[1..].iter().any(|n| n.goal && n.visits > 0);
        let mut best: Option<(Vec<NodeId>, f64, f64, Vec<&str>)> = None;
        for n in &self.nodes[1..] {
            if n.visits == 0 || n.children.iter().any(|&c| self.nodes[c].visits > 0) {
                continue;
            }
            if any_goal && !n.goal {
                continue;
            }
            let mut path = self.path_to_root(n.id);
            path.pop();
            path.reverse();
            let mean = path.iter().map(|&i| self.nodes[i].value).sum::<f64>() / path.len() as f64;
            let last = n.value;
            let names: Vec<&str> = path
                .iter()
                .map(|&i| self.nodes[i].action.as_ref().unwrap().tool.as_str())
                .collect();
            let better = match &best {
                None => true,
                Some((bp, bm, bl, bn)) => {
                    if mean != *bm {
                        mean > *bm
                    } else if last != *bl {
                        last > *bl
                    } else if path.len() != bp.len() {
                        path.len() < bp.len()
                    } else {
                        names < *bn
                    }
                }
            };
            if better {
                best = Some((path, mean, last, names));
            }
        }
        best.map(|b| b.0).ok_or(SearchError::EmptyTree)
    }

    /// `visits(node) - sum(visits(children))`: rollouts that ended at the
    /// node itself. Zero at the root.
    pub fn own_visits(&self, id: NodeId) -> i64 {
        let n = &self.nodes[id];
        n.visits as i64
            - n.children
                .iter()
                .map(|&c| self.nodes[c].visits as i64)
                .sum::<i64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tool_model::Query;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn act(name: &str) -> Action {
        Action {
            tool: name.into(),
            draft: ArgumentDraft::new(),
        }
    }

    fn tree() -> SearchTree {
        SearchTree::new(Context::new(Query::text("q")))
    }

    #[test]
    fn uct_hand_value() {
        let s = uct_score(0.5, 2, 0.8, 8, 1.4);
        let expected = 0.5 + 1.4 * 0.8 * (8f64.ln() / 2.0).sqrt();
        assert!((s - expected).abs() < 1e-15);
        assert!((s - 1.6420).abs() < 5e-5);
        assert_eq!(uct_score(0.37, 3, 0.0, 10, 1.4), 0.37);
        assert_eq!(uct_score(0.0, 0, 0.5, 10, 1.4), f64::INFINITY);
    }

    #[test]
    fn anneal_values() {
        assert_eq!(anneal_lambda(1.4, 5, None), 1.4);
        assert!((anneal_lambda(1.4, 2, Some(0.9)) - 1.134).abs() < 1e-12);
        assert_eq!(anneal_lambda(1.4, 0, Some(0.9)), 1.4);
    }

    fn set(t: &mut SearchTree, id: NodeId, visits: u64, value: f64) {
        t.nodes[id].visits = visits;
        t.nodes[id].value = value;
    }

    #[test]
    fn selects_strict_argmax() {
        let mut t = tree();
        let a = t.add_child(ROOT, act("a"), 0.0);
        let b = t.add_child(ROOT, act("b"), 0.0);
        set(&mut t, a, 1, 1.2);
        set(&mut t, b, 1, 0.9);
        set(&mut t, ROOT, 2, 1.05);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(t.select_child(ROOT, 1.4, 1e-6, &mut rng), Some(a));
    }

    #[test]
    fn ties_prefer_more_visits() {
        let mut t = tree();
        let a = t.add_child(ROOT, act("a"), 0.0);
        let b = t.add_child(ROOT, act("b"), 0.0);
        set(&mut t, a, 3, 0.5);
        set(&mut t, b, 1, 0.5);
        set(&mut t, ROOT, 4, 0.5);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(t.select_child(ROOT, 1.4, 1e-6, &mut rng), Some(a));
        }
    }

    #[test]
    fn exhausted_node_is_returned_as_leaf() {
        let mut t = tree();
        let a = t.add_child(ROOT, act("a"), 0.9);
        let x = t.add_child(a, act("x"), 0.9);
        t.backpropagate(a, 0.5);
        t.backpropagate(x, 0.1);
        t.nodes[x].expandable = false;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(t.select_path(1.4, None, 1e-6, &mut rng).unwrap(), a);
    }

    #[test]
    fn exhausted_root_errors() {
        let mut t = tree();
        t.nodes[ROOT].expandable = false;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            t.select_path(1.4, None, 0.0, &mut rng),
            Err(SearchError::TreeExhausted)
        ));
    }

    #[test]
    fn backprop_running_mean() {
        let mut t = tree();
        let a = t.add_child(ROOT, act("a"), 1.0);
        t.backpropagate(a, 0.9);
        assert_eq!((t.nodes[a].visits, t.nodes[a].value), (1, 0.9));
        let mut t = tree();
        let a = t.add_child(ROOT, act("a"), 1.0);
        for r in [0.2, 0.5, 0.9] {
            t.backpropagate(a, r);
        }
        assert!((t.nodes[a].value - 1.6 / 3.0).abs() < 1e-12);
        let q = t.nodes[a].value;
        t.backpropagate(a, q);
        assert_eq!(t.nodes[a].value, q);
        assert_eq!(t.nodes[a].visits, 4);
    }

    #[test]
    fn post_pruning_is_strict() {
        let mut t = tree();
        let a = t.add_child(ROOT, act("a"), 1.0);
        assert!(t.apply_post_pruning(a, 0.35, 0.4));
        assert!(!t.nodes[a].expandable);
        let b = t.add_child(ROOT, act("b"), 1.0);
        assert!(!t.apply_post_pruning(b, 0.4, 0.4));
        assert!(!t.apply_post_pruning(b, 0.9, 0.4));
        assert!(t.nodes[b].expandable);
    }

    #[test]
    #[should_panic]
    fn non_expandable_never_gains_children() {
        let mut t = tree();
        let a = t.add_child(ROOT, act("a"), 1.0);
        t.nodes[a].expandable = false;
        t.add_child(a, act("b"), 1.0);
    }

    #[test]
    fn best_path_rules() {
        // single path
        let mut t = tree();
        let a = t.add_child(ROOT, act("a"), 1.0);
        t.backpropagate(a, 0.6);
        assert_eq!(t.best_path().unwrap(), vec![a]);
        // 0.7 vs 0.5
        let b = t.add_child(ROOT, act("b"), 1.0);
        let b2 = t.add_child(b, act("c"), 1.0);
        t.backpropagate(b, 0.7);
        t.backpropagate(b2, 0.7);
        assert_eq!(t.best_path().unwrap(), vec![b, b2]);
    }

    #[test]
    fn best_path_prefers_shorter_on_ties() {
        let mut t = tree();
        let a = t.add_child(ROOT, act("a"), 1.0);
        let a2 = t.add_child(a, act("a2"), 1.0);
        let b = t.add_child(ROOT, act("z"), 1.0);
        let b2 = t.add_child(b, act("z2"), 1.0);
        let b3 = t.add_child(b2, act("z3"), 1.0);
        t.backpropagate(a, 0.5);
        t.backpropagate(a2, 0.5);
        t.backpropagate(b, 0.5);
        t.backpropagate(b2, 0.5);
        t.backpropagate(b3, 0.5);
        assert_eq!(t.best_path().unwrap(), vec![a, a2]);
        assert!(matches!(tree().best_path(), Err(SearchError::EmptyTree)));
    }

    #[test]
    fn best_path_prefers_goal_leaves() {
        let mut t = tree();
        let a = t.add_child(ROOT, act("a"), 1.0);
        t.backpropagate(a, 0.9);
        let b = t.add_child(ROOT, act("b"), 1.0);
        let b2 = t.add_child(b, act("b2"), 1.0);
        t.backpropagate(b, 0.2);
        t.backpropagate(b2, 0.6);
        assert_eq!(t.best_path().unwrap(), vec![a]);
        t.nodes[b2].goal = true;
        assert_eq!(t.best_path().unwrap(), vec![b, b2]);
    }

    /// Brute-force evaluation of the scoring formula term by term.
    fn oracle(q: f64, n: u64, prior: f64, parent: u64, lambda: f64) -> f64 {
        if n == 0 {
            return f64::INFINITY;
        }
        let ratio = (parent as f64).ln() / (n as f64);
        let bonus = lambda * prior * ratio.powf(0.5);
        q + bonus
    }

    proptest! {
        #[test]
        fn uct_matches_oracle(q in 0.0f64..=1.0, lambda in 0.0f64..5.0, prior in 0.0f64..=1.0,
                              n in 1u64..500, extra in 0u64..500) {
            let parent = n + extra;
            let got = uct_score(q, n, prior, parent, lambda);
            prop_assert!((got - oracle(q, n, prior, parent, lambda)).abs() <= 1e-12);
        }

        #[test]
        fn select_child_is_bruteforce_argmax(specs in prop::collection::vec((0u64..6, 0.0f64..=1.0, 0.0f64..=1.0, any::<bool>()), 1..=5),
                                             seed in any::<u64>()) {
            let mut t = tree();
            let mut total = 0;
            for (i, (n, q, p, exp)) in specs.iter().enumerate() {
                let c = t.add_child(ROOT, act(&format!("t{i}")), *p);
                set(&mut t, c, *n, *q);
                t.nodes[c].expandable = *exp;
                total += n;
            }
            t.nodes[ROOT].visits = total;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let got = t.select_child(ROOT, 1.4, 1e-6, &mut rng);
            let eligible: Vec<_> = t.nodes[ROOT].children.iter().copied()
                .filter(|&c| t.nodes[c].expandable || t.nodes[c].visits == 0).collect();
            match got {
                None => prop_assert!(eligible.is_empty()),
                Some(c) => {
                    let s = |c: NodeId| oracle(t.nodes[c].value, t.nodes[c].visits, t.nodes[c].prior, total, 1.4);
                    let best = eligible.iter().map(|&e| s(e)).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(eligible.contains(&c));
                    prop_assert_eq!(s(c), best);
                    let max_n = eligible.iter().filter(|&&e| s(e) == best).map(|&e| t.nodes[e].visits).max().unwrap();
                    prop_assert_eq!(t.nodes[c].visits, max_n);
                }
            }
        }
    }
}
