//! Upper accessibility graph and its communication classes. The top class
//! conditions (regularity and absorption) are decided here.
//!
//! Every structural query here works on exact support information of the
//! credal rows; no floating point threshold is involved.

use std::fmt::Write as _;

use crate::model::{StateSet, TransitionModel};

/// Edge `x -> y` iff some member of row `x` puts positive mass on `y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessibilityGraph {
    n: usize,
    adj: Vec<Vec<bool>>,
    reach: Vec<Vec<bool>>,
}

impl AccessibilityGraph {
    pub fn from_adjacency(adj: Vec<Vec<bool>>) -> Self {
        let n = adj.len();
        assert!(adj.iter().all(|r| r.len() == n), "adjacency must be square");
        // reflexive-transitive closure
        let mut reach = adj.clone();
        for (x, row) in reach.iter_mut().enumerate() {
            row[x] = true;
        }
        for k in 0..n {
            let via = reach[k].clone();
            for row in reach.iter_mut().filter(|r| r[k]) {
                for (cell, &step) in row.iter_mut().zip(&via) {
                    *cell |= step;
                }
            }
        }
        Self { n, adj, reach }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge(&self, x: usize, y: usize) -> bool {
        self.adj[x][y]
    }

    /// Accessibility `x -> y`; every state is accessible from itself.
    pub fn reaches(&self, x: usize, y: usize) -> bool {
        self.reach[x][y]
    }

    pub fn successors(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&y| self.adj[x][y])
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|x| self.successors(x).map(move |y| (x, y)))
            .collect()
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.reach.iter().all(|row| row.iter().all(|&r| r))
    }

    /// States accessible from every state.
    pub fn globally_reachable(&self) -> StateSet {
        (0..self.n)
            .filter(|&x| (0..self.n).all(|y| self.reach[y][x]))
            .collect()
    }

    /// Whether a path with exactly `k` edges leads from `x` to `y`.
    pub fn has_path_of_length(&self, x: usize, y: usize, k: usize) -> bool {
        let mut frontier = vec![false; self.n];
        frontier[x] = true;
        for _ in 0..k {
            let mut next = vec![false; self.n];
            for u in (0..self.n).filter(|&u| frontier[u]) {
                for v in self.successors(u) {
                    next[v] = true;
                }
            }
            frontier = next;
        }
        frontier[y]
    }
}

pub fn build_graph(model: &TransitionModel) -> AccessibilityGraph {
    let n = model.n();
    let adj = model
        .rows()
        .iter()
        .map(|row| (0..n).map(|y| row.reaches(y)).collect())
        .collect();
    AccessibilityGraph::from_adjacency(adj)
}

/// Partition into communication classes with their accessibility order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDecomposition {
    /// Classes, numbered in ascending order of their smallest state.
    pub classes: Vec<StateSet>,
    pub class_of: Vec<usize>,
    /// `order[i][j]`: class `j` is accessible from class `i` (reflexive).
    pub order: Vec<Vec<bool>>,
    pub closed: Vec<bool>,
    pub top_class: Option<usize>,
}

impl ClassDecomposition {
    pub fn top_states(&self) -> Option<&StateSet> {
        self.top_class.map(|c| &self.classes[c])
    }

    pub fn closed_classes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.classes.len()).filter(|&c| self.closed[c])
    }

    /// No other class is strictly above `c`.
    pub fn is_maximal(&self, c: usize) -> bool {
        (0..self.classes.len()).all(|d| d == c || !self.order[c][d])
    }

    /// Index of the class equal to `set`, if `set` is a communication class.
    pub fn class_index(&self, set: &StateSet) -> Option<usize> {
        let first = *set.iter().next()?;
        let c = *self.class_of.get(first)?;
        (self.classes[c] == *set).then_some(c)
    }
}

struct Tarjan<'a> {
    graph: &'a AccessibilityGraph,
    counter: usize,
    index: Vec<Option<usize>>,
    low: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    components: Vec<Vec<usize>>,
}

impl Tarjan<'_> {
    fn visit(&mut self, v: usize) {
        self.index[v] = Some(self.counter);
        self.low[v] = self.counter;
        self.counter += 1;
        self.stack.push(v);
        self.on_stack[v] = true;

        for w in self.graph.successors(v) {
            match self.index[w] {
                None => {
                    self.visit(w);
                    self.low[v] = self.low[v].min(self.low[w]);
                }
                Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                Some(_) => {}
            }
        }

        if Some(self.low[v]) == self.index[v] {
            let mut component = Vec::new();
            loop {
                let w = self.stack.pop().expect("tarjan stack underflow");
                self.on_stack[w] = false;
                component.push(w);
                if w == v {
                    break;
                }
            }
            self.components.push(component);
        }
    }
}

fn strongly_connected_components(graph: &AccessibilityGraph) -> Vec<Vec<usize>> {
    let n = graph.n();
    let mut tarjan = Tarjan {
        graph,
        counter: 0,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        components: Vec::new(),
    };
    for v in 0..n {
        if tarjan.index[v].is_none() {
            tarjan.visit(v);
        }
    }
    tarjan.components
}

pub fn decompose(graph: &AccessibilityGraph) -> ClassDecomposition {
    let n = graph.n();
    let mut classes: Vec<StateSet> = strongly_connected_components(graph)
        .into_iter()
        .map(|c| c.into_iter().collect())
        .collect();
    classes.sort_by_key(|c| *c.iter().next().expect("components are nonempty"));

    let mut class_of = vec![0; n];
    for (c, states) in classes.iter().enumerate() {
        for &x in states {
            class_of[x] = c;
        }
    }
    let reps: Vec<usize> = classes.iter().map(|c| *c.iter().next().unwrap()).collect();
    let order: Vec<Vec<bool>> = reps
        .iter()
        .map(|&a| reps.iter().map(|&b| graph.reaches(a, b)).collect())
        .collect();
    let closed = classes
        .iter()
        .map(|states| {
            states
                .iter()
                .all(|&x| graph.successors(x).all(|y| states.contains(&y)))
        })
        .collect();
    let top = graph.globally_reachable();
    let top_class = top.iter().next().map(|&x| class_of[x]);
    ClassDecomposition {
        classes,
        class_of,
        order,
        closed,
        top_class,
    }
}

/// Period of the subgraph induced by `set`, which must be strongly connected.
pub fn period(graph: &AccessibilityGraph, set: &StateSet) -> usize {
    let Some(&root) = set.iter().next() else {
        return 0;
    };
    let mut level = vec![None; graph.n()];
    level[root] = Some(0usize);
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let lu = level[u].unwrap();
        for v in graph.successors(u).filter(|v| set.contains(v)) {
            if level[v].is_none() {
                level[v] = Some(lu + 1);
                queue.push_back(v);
            }
        }
    }
    let mut g = 0usize;
    for &u in set {
        let Some(lu) = level[u] else { continue };
        for v in graph.successors(u).filter(|v| set.contains(v)) {
            if let Some(lv) = level[v] {
                g = gcd(g, (lu + 1).abs_diff(lv));
            }
        }
    }
    g
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Result of the regularity test on the top class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TcrCheck {
    pub regular: bool,
    /// Period of the top class, absent without a top class.
    pub period: Option<usize>,
}

/// Top class regularity: a top class exists and is aperiodic.
pub fn check_tcr(graph: &AccessibilityGraph, decomposition: &ClassDecomposition) -> TcrCheck {
    match decomposition.top_states() {
        None => TcrCheck {
            regular: false,
            period: None,
        },
        Some(top) => {
            let p = period(graph, top);
            TcrCheck {
                regular: p == 1,
                period: Some(p),
            }
        }
    }
}

/// Result of the absorption test on the top class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TcaCheck {
    pub absorbing: bool,
    /// Nonempty set outside the top class that can hold the process forever.
    pub confining_set: Option<StateSet>,
    pub no_top_class: bool,
}

/// Largest set `A` outside the top class with `1_A <= T̄ 1_A`: repeatedly
/// drop states whose row cannot keep all mass inside the current set.
pub fn confining_fixed_point(model: &TransitionModel, outside: &StateSet) -> StateSet {
    let mut current = outside.clone();
    loop {
        if current.is_empty() {
            return current;
        }
        let next: StateSet = current
            .iter()
            .copied()
            .filter(|&x| model.row(x).can_confine_unchecked(&current))
            .collect();
        if next.len() == current.len() {
            return next;
        }
        current = next;
    }
}

/// Top class absorption, decided by the confining-set fixed point.
pub fn check_tca(model: &TransitionModel, decomposition: &ClassDecomposition) -> TcaCheck {
    let Some(top) = decomposition.top_states() else {
        return TcaCheck {
            absorbing: false,
            confining_set: None,
            no_top_class: true,
        };
    };
    let outside: StateSet = (0..model.n()).filter(|x| !top.contains(x)).collect();
    let fixed = confining_fixed_point(model, &outside);
    TcaCheck {
        absorbing: fixed.is_empty(),
        confining_set: (!fixed.is_empty()).then_some(fixed),
        no_top_class: false,
    }
}

/// Structural classification of a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessibilityReport {
    pub graph: AccessibilityGraph,
    pub decomposition: ClassDecomposition,
    pub tcr: bool,
    pub tca: bool,
    pub period: Option<usize>,
    pub confining_set: Option<StateSet>,
}

impl AccessibilityReport {
    pub fn ergodic(&self) -> bool {
        self.tcr && self.tca
    }

    pub fn weakly_ergodic(&self) -> bool {
        self.tca
    }

    /// Human-readable reasons for failed conditions.
    pub fn witness(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.decomposition.top_class.is_none() {
            out.push("no top class".to_string());
        }
        if let Some(p) = self.period.filter(|&p| p != 1) {
            out.push(format!("top class has period {p}"));
        }
        if let Some(a) = &self.confining_set {
            out.push(format!("confining set {a:?}"));
        }
        out
    }
}

pub fn classify(model: &TransitionModel) -> AccessibilityReport {
    let graph = build_graph(model);
    let decomposition = decompose(&graph);
    let tcr = check_tcr(&graph, &decomposition);
    let tca = check_tca(model, &decomposition);
    AccessibilityReport {
        tcr: tcr.regular,
        tca: tca.absorbing,
        period: tcr.period,
        confining_set: tca.confining_set,
        graph,
        decomposition,
    }
}

/// Graphviz rendering of the accessibility graph, clustered by class.
pub fn to_dot(model: &TransitionModel, report: &AccessibilityReport) -> String {
    let labels = model.states();
    let d = &report.decomposition;
    let mut out = String::from("digraph accessibility {\n");
    for (c, states) in d.classes.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{c} {{");
        let mut tags = Vec::new();
        if d.top_class == Some(c) {
            tags.push("top");
        }
        if d.closed[c] {
            tags.push("closed");
        }
        let _ = writeln!(out, "    label=\"class {c} {}\";", tags.join(" "));
        for &x in states {
            let _ = writeln!(out, "    \"{}\";", labels.label(x));
        }
        out.push_str("  }\n");
    }
    for (x, y) in report.graph.edges() {
        let _ = writeln!(out, "  \"{}\" -> \"{}\";", labels.label(x), labels.label(y));
    }
    out.push_str("}\n");
    out
}
