use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::{LogicError, Polarity, Program};

/// One layer of the predicate dependency graph. A predicate and its negative
/// twin always share a stratum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratum {
    pub predicates: BTreeSet<String>,
    /// Indices into `Program::rules` of the rules whose head lies here.
    pub rules: Vec<usize>,
}

/// Orders predicates into strata, one per strongly connected component of
/// the dependency graph, in topological order (ties broken by name).
///
/// An edge `p -> q` is negative when `p` occurs as a negative body literal of
/// a rule for `q`, or when the rule's head is negative. A negative edge inside
/// a component is rejected.
pub fn stratify(program: &Program) -> Result<Vec<Stratum>, LogicError> {
    for (index, rule) in program.rules().iter().enumerate() {
        if let Some(v) = rule.unbound_variable() {
            return Err(LogicError::UnsafeRule {
                index,
                variable: v.to_string(),
            });
        }
    }

    let mut graph: DiGraph<String, bool> = DiGraph::new();
    let mut nodes: BTreeMap<String, NodeIndex> = BTreeMap::new();
    for pred in program.predicates().into_keys() {
        let idx = graph.add_node(pred.clone());
        nodes.insert(pred, idx);
    }
    let mut edges: BTreeMap<(NodeIndex, NodeIndex), bool> = BTreeMap::new();
    for rule in program.rules() {
        let head = nodes[&rule.head.predicate];
        let head_negative = rule.head.polarity == Polarity::Negative;
        for lit in &rule.body {
            let negative = head_negative || lit.is_negative();
            let entry = edges.entry((nodes[&lit.predicate], head)).or_insert(false);
            *entry |= negative;
        }
    }
    for (&(from, to), &negative) in &edges {
        graph.add_edge(from, to, negative);
    }

    let sccs = tarjan_scc(&graph);
    let mut component: BTreeMap<NodeIndex, usize> = BTreeMap::new();
    for (c, scc) in sccs.iter().enumerate() {
        for &n in scc {
            component.insert(n, c);
        }
    }

    for (&(from, to), &negative) in &edges {
        if negative && component[&from] == component[&to] {
            let mut cycle: Vec<String> = sccs[component[&from]]
                .iter()
                .map(|&n| graph[n].clone())
                .collect();
            cycle.sort();
            return Err(LogicError::Unstratifiable { cycle });
        }
    }

    // Kahn's algorithm over the condensation, smallest member name first.
    let names: Vec<BTreeSet<String>> = sccs
        .iter()
        .map(|scc| scc.iter().map(|&n| graph[n].clone()).collect())
        .collect();
    let mut indegree = vec![0usize; sccs.len()];
    let mut successors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); sccs.len()];
    for &(from, to) in edges.keys() {
        let (a, b) = (component[&from], component[&to]);
        if a != b && successors[a].insert(b) {
            indegree[b] += 1;
        }
    }
    let key = |c: usize| (names[c].iter().next().cloned().unwrap_or_default(), c);
    let mut ready: BTreeSet<(String, usize)> = (0..sccs.len())
        .filter(|&c| indegree[c] == 0)
        .map(key)
        .collect();
    let mut order = Vec::with_capacity(sccs.len());
    while let Some(first) = ready.pop_first() {
        let c = first.1;
        order.push(c);
        for &s in &successors[c] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.insert(key(s));
            }
        }
    }

    let mut strata: Vec<Stratum> = order
        .iter()
        .map(|&c| Stratum {
            predicates: names[c].clone(),
            rules: Vec::new(),
        })
        .collect();
    let position: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    for (index, rule) in program.rules().iter().enumerate() {
        let c = component[&nodes[&rule.head.predicate]];
        strata[position[&c]].rules.push(index);
    }
    Ok(strata)
}
