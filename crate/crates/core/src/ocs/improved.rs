//! The sender/receiver OCS built on dependence graphs.
//!
//! Each round becomes a node. The ex-ante graph links every round to the
//! previous round of each of its two candidates; these are the only places a
//! random bit could be forwarded. Every node is independently a sender (with
//! probability `p`) or a receiver. A sender flips a fresh coin. A receiver
//! looks at its ex-ante in-neighbours, picks a sender among them (uniformly
//! if both are), records that arc in the ex-post graph, and makes the
//! opposite decision for the shared candidate. A receiver with no sender
//! in-neighbour flips a fresh coin.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Candidate, CoinSource, OcsError, Pair, RoundClock, Selector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeType {
    Sender,
    Receiver,
}

/// Arc `(from, to)_candidate` between two rounds sharing `candidate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub candidate: Candidate,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    pub pair: Pair,
    pub node_type: NodeType,
    pub choice: Candidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Same,
    Different,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependenceGraph {
    nodes: BTreeMap<usize, Node>,
    ex_ante: Vec<Arc>,
    ex_post: Vec<Arc>,
    last_round: HashMap<Candidate, usize>,
}

impl DependenceGraph {
    pub fn node(&self, round: usize) -> Option<&Node> {
        self.nodes.get(&round)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, &Node)> {
        self.nodes.iter().map(|(&r, n)| (r, n))
    }

    pub fn ex_ante_arcs(&self) -> &[Arc] {
        &self.ex_ante
    }

    pub fn ex_post_arcs(&self) -> &[Arc] {
        &self.ex_post
    }

    pub fn last_round(&self, c: Candidate) -> Option<usize> {
        self.last_round.get(&c).copied()
    }

    /// For each candidate seen so far, the type of its latest node and whether
    /// that node chose it, sorted by candidate. Future selections depend on
    /// the graph only through this.
    pub fn frontier(&self) -> Vec<(Candidate, NodeType, bool)> {
        let mut out: Vec<_> = self
            .last_round
            .iter()
            .map(|(&c, r)| {
                let node = &self.nodes[r];
                (c, node.node_type, node.choice == c)
            })
            .collect();
        out.sort_unstable_by_key(|e| e.0);
        out
    }

    /// Whether two rounds are connected in the undirected ex-post graph.
    pub fn connected_component_check(&self, a: usize, b: usize) -> Result<Component, OcsError> {
        for r in [a, b] {
            if !self.nodes.contains_key(&r) {
                return Err(OcsError::UnknownRound(r));
            }
        }
        let index: HashMap<usize, usize> =
            self.nodes.keys().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut parent: Vec<usize> = (0..index.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for arc in &self.ex_post {
            let (u, v) = (find(&mut parent, index[&arc.from]), find(&mut parent, index[&arc.to]));
            parent[u] = v;
        }
        let same = find(&mut parent, index[&a]) == find(&mut parent, index[&b]);
        Ok(if same { Component::Same } else { Component::Different })
    }

    /// Structural invariants: ex-post ⊆ ex-ante, at most one ex-post in-arc
    /// per receiver and none into senders, arcs point forward between
    /// consecutive rounds of their candidate.
    pub fn check_invariants(&self) -> Result<(), String> {
        for arc in &self.ex_post {
            if !self.ex_ante.contains(arc) {
                return Err(format!("ex-post arc {arc:?} missing from ex-ante graph"));
            }
            if self.nodes[&arc.to].node_type == NodeType::Sender {
                return Err(format!("sender {} has an ex-post in-arc", arc.to));
            }
            if self.ex_post.iter().filter(|a| a.to == arc.to).count() > 1 {
                return Err(format!("receiver {} has two ex-post in-arcs", arc.to));
            }
        }
        for arc in &self.ex_ante {
            if arc.from >= arc.to {
                return Err(format!("arc {arc:?} does not point forward"));
            }
            let (from, to) = (&self.nodes[&arc.from], &self.nodes[&arc.to]);
            if !from.pair.contains(arc.candidate) || !to.pair.contains(arc.candidate) {
                return Err(format!("arc {arc:?} label is not a shared candidate"));
            }
            let between = self
                .nodes
                .range(arc.from + 1..arc.to)
                .any(|(_, n)| n.pair.contains(arc.candidate));
            if between {
                return Err(format!("arc {arc:?} skips a round of its candidate"));
            }
        }
        Ok(())
    }
}

/// `h(p) = p(1-p)(1-p/2)`: the γ achieved with sender probability `p`.
pub fn sender_gain(p: f64) -> f64 {
    p * (1.0 - p) * (1.0 - p / 2.0)
}

/// Maximiser of [`sender_gain`] on `[0, 1]` and the maximum.
///
/// `h(p) = p - 3p²/2 + p³/2`, so `h'(p) = 3p²/2 - 3p + 1`; its smaller root
/// is the interior maximum.
pub fn optimal_p() -> (f64, f64) {
    let (a, b, c) = (1.5f64, -3.0f64, 1.0f64);
    let disc = (b * b - 4.0 * a * c).sqrt();
    // numerically stable small root
    let p = 2.0 * c / (-b + disc);
    (p, sender_gain(p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImprovedOcs {
    p: f64,
    graph: DependenceGraph,
    clock: RoundClock,
}

impl ImprovedOcs {
    pub fn new(p: f64) -> Result<Self, OcsError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(OcsError::Parameter { name: "p", value: p });
        }
        Ok(Self {
            p,
            graph: DependenceGraph::default(),
            clock: RoundClock::default(),
        })
    }

    pub fn optimal() -> Self {
        Self::new(optimal_p().0).expect("optimal p lies in [0, 1]")
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn graph(&self) -> &DependenceGraph {
        &self.graph
    }
}

impl Selector for ImprovedOcs {
    fn select(&mut self, pair: Pair, coins: &mut dyn CoinSource) -> Result<Candidate, OcsError> {
        pair.validate()?;
        self.clock.advance(pair.round)?;
        let j = pair.round;
        let g = &mut self.graph;

        let in_arcs: Vec<Option<Arc>> = pair
            .candidates()
            .iter()
            .map(|&c| {
                g.last_round(c).map(|from| Arc { from, to: j, candidate: c })
            })
            .collect();
        g.ex_ante.extend(in_arcs.iter().flatten().copied());

        // every round draws all three kinds of bits, used or not
        let node_type = if coins.bernoulli(self.p) {
            NodeType::Sender
        } else {
            NodeType::Receiver
        };
        let tie = usize::from(coins.fair());
        let coin = usize::from(coins.fair());

        let choice = match node_type {
            NodeType::Sender => pair.at(coin),
            NodeType::Receiver => {
                let senders: Vec<Arc> = in_arcs
                    .iter()
                    .flatten()
                    .filter(|a| g.nodes[&a.from].node_type == NodeType::Sender)
                    .copied()
                    .collect();
                let arc = match senders.as_slice() {
                    [] => None,
                    [one] => Some(*one),
                    [first, second] => Some(if tie == 0 { *first } else { *second }),
                    _ => unreachable!("a pair has two in-arcs at most"),
                };
                match arc {
                    None => pair.at(coin),
                    Some(arc) => {
                        g.ex_post.push(arc);
                        if g.nodes[&arc.from].choice == arc.candidate {
                            pair.other(arc.candidate)
                        } else {
                            arc.candidate
                        }
                    }
                }
            }
        };

        g.nodes.insert(j, Node { pair, node_type, choice });
        for c in pair.candidates() {
            g.last_round.insert(c, j);
        }
        Ok(choice)
    }

    fn gamma(&self) -> f64 {
        sender_gain(self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Script(Vec<bool>);

    impl CoinSource for Script {
        fn fair(&mut self) -> bool {
            self.0.remove(0)
        }
        fn bernoulli(&mut self, _: f64) -> bool {
            self.0.remove(0)
        }
    }

    fn pair(r: usize, a: usize, b: usize) -> Pair {
        Pair::new(r, a, b).unwrap()
    }

    #[test]
    fn first_round_uses_coin_whatever_the_type() {
        for sender in [true, false] {
            for coin in [false, true] {
                let mut ocs = ImprovedOcs::optimal();
                let pick = ocs
                    .select(pair(0, 4, 9), &mut Script(vec![sender, false, coin]))
                    .unwrap();
                assert_eq!(pick, if coin { 9 } else { 4 });
                assert!(ocs.graph().ex_ante_arcs().is_empty());
            }
        }
    }

    #[test]
    fn receiver_negates_sender() {
        let mut ocs = ImprovedOcs::optimal();
        // sender chooses 1
        let first = ocs.select(pair(0, 1, 2), &mut Script(vec![true, false, false])).unwrap();
        assert_eq!(first, 1);
        // receiver sharing candidate 1: must pick its other candidate
        let second = ocs.select(pair(1, 1, 3), &mut Script(vec![false, false, false])).unwrap();
        assert_eq!(second, 3);
        let g = ocs.graph();
        assert_eq!(g.ex_post_arcs(), &[Arc { from: 0, to: 1, candidate: 1 }]);
        assert_eq!(g.connected_component_check(0, 1).unwrap(), Component::Same);
        g.check_invariants().unwrap();

        // receiver via candidate 2, not chosen at round 0 -> picks 2
        let third = ocs.select(pair(2, 4, 2), &mut Script(vec![false, false, true])).unwrap();
        assert_eq!(third, 2);
    }

    #[test]
    fn v_structure_joins_components() {
        let mut ocs = ImprovedOcs::optimal();
        ocs.select(pair(0, 1, 2), &mut Script(vec![true, false, false])).unwrap();
        ocs.select(pair(1, 1, 3), &mut Script(vec![false, false, false])).unwrap();
        ocs.select(pair(2, 2, 3), &mut Script(vec![false, false, false])).unwrap();
        let g = ocs.graph();
        // round 2: in-neighbours 0 (via 2, sender) and 1 (via 3, receiver)
        assert_eq!(g.ex_post_arcs().len(), 2);
        assert_eq!(g.connected_component_check(1, 2).unwrap(), Component::Same);
        // candidate 3's decisions at rounds 1 and 2 are opposite
        let c1 = g.node(1).unwrap().choice == 3;
        let c2 = g.node(2).unwrap().choice == 3;
        assert_ne!(c1, c2);
        g.check_invariants().unwrap();
    }

    #[test]
    fn tie_break_between_two_senders() {
        for tie in [false, true] {
            let mut ocs = ImprovedOcs::optimal();
            ocs.select(pair(0, 1, 5), &mut Script(vec![true, false, false])).unwrap();
            ocs.select(pair(1, 2, 6), &mut Script(vec![true, false, false])).unwrap();
            ocs.select(pair(2, 1, 2), &mut Script(vec![false, tie, false])).unwrap();
            let arc = ocs.graph().ex_post_arcs()[0];
            assert_eq!(arc.from, if tie { 1 } else { 0 });
        }
    }

    #[test]
    fn parallel_arcs() {
        let mut ocs = ImprovedOcs::optimal();
        ocs.select(pair(0, 1, 2), &mut Script(vec![true, false, true])).unwrap();
        let pick = ocs.select(pair(1, 1, 2), &mut Script(vec![false, true, false])).unwrap();
        assert_eq!(ocs.graph().ex_ante_arcs().len(), 2);
        assert_eq!(pick, 1);
    }

    #[test]
    fn component_check_errors_and_isolated() {
        let mut ocs = ImprovedOcs::optimal();
        ocs.select(pair(0, 1, 2), &mut Script(vec![true, false, false])).unwrap();
        ocs.select(pair(1, 3, 4), &mut Script(vec![false, false, false])).unwrap();
        let g = ocs.graph();
        assert_eq!(g.connected_component_check(0, 1).unwrap(), Component::Different);
        assert_eq!(g.connected_component_check(0, 7), Err(OcsError::UnknownRound(7)));
    }

    #[test]
    fn optimal_p_closed_form() {
        let (p, gamma) = optimal_p();
        assert!((p - (1.0 - 1.0 / 3f64.sqrt())).abs() < 1e-12);
        assert!((gamma - 1.0 / (3.0 * 3f64.sqrt())).abs() < 1e-12);
        assert!((gamma - 0.19245009).abs() < 1e-8);
        assert_eq!(sender_gain(0.0), 0.0);
        assert_eq!(sender_gain(1.0), 0.0);
    }

    #[test]
    fn bad_p() {
        assert!(ImprovedOcs::new(1.5).is_err());
        assert!(ImprovedOcs::new(-0.5).is_err());
    }
}
