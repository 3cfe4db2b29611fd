// SPDX-License-Identifier: Apache-2.0

//! Branch-and-bound over node mappings.
//!
//! Generated nodes are decided in insertion order; each is mapped to an
//! unused target node of the same spec (ascending target index) or deleted.
//! Branches are visited in lexicographic order of the mapping with
//! "deleted" ordered last, and only strict improvements replace the
//! incumbent, so the first optimum found is the lexicographically smallest.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use super::{MetricError, MetricOptions};
use crate::graph::SerializedGraph;

pub(super) struct Best {
    pub cost: usize,
    /// Generated node index -> target node index.
    pub mapping: Vec<Option<usize>>,
}

type EdgeKey = (usize, usize, usize);

struct Problem {
    gen_kind: Vec<usize>,
    tgt_kind: Vec<usize>,
    kinds: usize,
    /// Per generated node: incident edges to lower-indexed generated nodes,
    /// as (other, label, node_is_source).
    gen_back_edges: Vec<Vec<(usize, usize, bool)>>,
    gen_edges: HashSet<EdgeKey>,
    tgt_edges: Vec<EdgeKey>,
    tgt_edge_set: HashSet<EdgeKey>,
    /// Same-kind target candidates per generated node, ascending.
    candidates: Vec<Vec<usize>>,
    cascade: bool,
}

fn intern<'a>(table: &mut HashMap<&'a str, usize>, key: &'a str) -> usize {
    let next = table.len();
    *table.entry(key).or_insert(next)
}

impl Problem {
    fn new(generated: &SerializedGraph, target: &SerializedGraph, cascade: bool) -> Problem {
        let mut kinds: HashMap<&str, usize> = HashMap::new();
        let gen_kind: Vec<usize> = generated
            .nodes
            .iter()
            .map(|n| intern(&mut kinds, &n.node_spec_id))
            .collect();
        let tgt_kind: Vec<usize> = target
            .nodes
            .iter()
            .map(|n| intern(&mut kinds, &n.node_spec_id))
            .collect();

        let mut labels: HashMap<(String, String), usize> = HashMap::new();
        let mut label = |output: &str, input: &str| {
            let next = labels.len();
            *labels
                .entry((output.to_string(), input.to_string()))
                .or_insert(next)
        };
        let index = |g: &SerializedGraph| -> HashMap<String, usize> {
            g.nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect()
        };
        let gen_index = index(generated);
        let tgt_index = index(target);

        let mut gen_back_edges = vec![Vec::new(); generated.nodes.len()];
        let mut gen_edges = HashSet::new();
        for e in generated.edges() {
            let (s, t) = (gen_index[&e.source], gen_index[&e.target]);
            let l = label(&e.output, &e.input);
            gen_edges.insert((s, t, l));
            if s < t {
                gen_back_edges[t].push((s, l, false));
            } else {
                gen_back_edges[s].push((t, l, true));
            }
        }
        let tgt_edges: Vec<EdgeKey> = target
            .edges()
            .iter()
            .map(|e| (tgt_index[&e.source], tgt_index[&e.target], label(&e.output, &e.input)))
            .collect();
        let tgt_edge_set = tgt_edges.iter().copied().collect();
        let candidates = gen_kind
            .iter()
            .map(|&k| (0..tgt_kind.len()).filter(|&j| tgt_kind[j] == k).collect())
            .collect();
        Problem {
            gen_kind,
            tgt_kind,
            kinds: kinds.len(),
            gen_back_edges,
            gen_edges,
            tgt_edges,
            tgt_edge_set,
            candidates,
            cascade,
        }
    }
}

struct State<'p> {
    p: &'p Problem,
    mapping: Vec<Option<usize>>,
    inverse: Vec<Option<usize>>,
    rem_gen: Vec<usize>,
    rem_tgt: Vec<usize>,
    deleted: usize,
    mapped: usize,
    gen_edge_cost: usize,
    preserved: usize,
    best: Best,
    found: bool,
    expansions: u64,
    options: MetricOptions,
    started: Instant,
}

impl State<'_> {
    fn lower_bound(&self) -> usize {
        let node_part: usize = (0..self.p.kinds)
            .map(|k| self.rem_gen[k].abs_diff(self.rem_tgt[k]))
            .sum();
        let settled = |t: usize| self.inverse[t].is_some() || self.rem_gen[self.p.tgt_kind[t]] == 0;
        let lost_target_edges = self
            .p
            .tgt_edges
            .iter()
            .filter(|&&(a, b, l)| {
                settled(a)
                    && settled(b)
                    && !matches!((self.inverse[a], self.inverse[b]),
                        (Some(x), Some(y)) if self.p.gen_edges.contains(&(x, y, l)))
            })
            .count();
        self.deleted + node_part + self.gen_edge_cost + lost_target_edges
    }

    fn total(&self) -> usize {
        self.deleted
            + (self.p.tgt_kind.len() - self.mapped)
            + self.gen_edge_cost
            + (self.p.tgt_edges.len() - self.preserved)
    }

    fn check_budget(&mut self) -> Result<(), MetricError> {
        self.expansions += 1;
        if self.expansions > self.options.max_expansions {
            return Err(MetricError::BudgetExceeded(format!(
                "search explored more than {} partial mappings",
                self.options.max_expansions
            )));
        }
        if let Some(limit) = self.options.time_limit {
            if self.expansions.is_multiple_of(1024) && self.started.elapsed() > limit {
                return Err(MetricError::BudgetExceeded(format!(
                    "search ran longer than {limit:?}"
                )));
            }
        }
        Ok(())
    }

    /// Cost of the edges between `i` and earlier nodes if `i` maps to `to`,
    /// as (edge cost, newly preserved edges).
    fn edge_delta(&self, i: usize, to: Option<usize>) -> (usize, usize) {
        let mut cost = 0;
        let mut kept = 0;
        for &(j, l, i_is_source) in &self.p.gen_back_edges[i] {
            match (to, self.mapping[j]) {
                (Some(ti), Some(tj)) => {
                    let image = if i_is_source { (ti, tj, l) } else { (tj, ti, l) };
                    if self.p.tgt_edge_set.contains(&image) {
                        kept += 1;
                    } else {
                        cost += 1;
                    }
                }
                _ => {
                    if !self.p.cascade {
                        cost += 1;
                    }
                }
            }
        }
        (cost, kept)
    }

    fn dfs(&mut self, i: usize) -> Result<(), MetricError> {
        self.check_budget()?;
        let bound = self.lower_bound();
        if bound > self.best.cost || (self.found && bound == self.best.cost) {
            return Ok(());
        }
        if i == self.mapping.len() {
            let total = self.total();
            if total < self.best.cost || (!self.found && total == self.best.cost) {
                self.best = Best {
                    cost: total,
                    mapping: self.mapping.clone(),
                };
                self.found = true;
            }
            return Ok(());
        }
        let kind = self.p.gen_kind[i];
        let candidates = &self.p.candidates[i];
        for &t in candidates {
            if self.inverse[t].is_some() {
                continue;
            }
            let (cost, kept) = self.edge_delta(i, Some(t));
            self.mapping[i] = Some(t);
            self.inverse[t] = Some(i);
            self.rem_gen[kind] -= 1;
            self.rem_tgt[kind] -= 1;
            self.mapped += 1;
            self.gen_edge_cost += cost;
            self.preserved += kept;
            let result = self.dfs(i + 1);
            self.preserved -= kept;
            self.gen_edge_cost -= cost;
            self.mapped -= 1;
            self.rem_tgt[kind] += 1;
            self.rem_gen[kind] += 1;
            self.inverse[t] = None;
            self.mapping[i] = None;
            result?;
        }
        let (cost, _) = self.edge_delta(i, None);
        self.rem_gen[kind] -= 1;
        self.deleted += 1;
        self.gen_edge_cost += cost;
        let result = self.dfs(i + 1);
        self.gen_edge_cost -= cost;
        self.deleted -= 1;
        self.rem_gen[kind] += 1;
        result
    }
}

pub(super) fn best_mapping(
    generated: &SerializedGraph,
    target: &SerializedGraph,
    options: &MetricOptions,
) -> Result<Best, MetricError> {
    let p = Problem::new(generated, target, options.cascade);
    let n_gen = p.gen_kind.len();
    let mut rem_gen = vec![0; p.kinds];
    let mut rem_tgt = vec![0; p.kinds];
    for &k in &p.gen_kind {
        rem_gen[k] += 1;
    }
    for &k in &p.tgt_kind {
        rem_tgt[k] += 1;
    }
    // Incumbent: delete everything and rebuild. It is the lexicographically
    // largest mapping, so an equal-cost mapping found by the search wins.
    let delete_all = n_gen
        + if options.cascade { 0 } else { p.gen_edges.len() }
        + p.tgt_kind.len()
        + p.tgt_edges.len();
    let mut state = State {
        p: &p,
        mapping: vec![None; n_gen],
        inverse: vec![None; p.tgt_kind.len()],
        rem_gen,
        rem_tgt,
        deleted: 0,
        mapped: 0,
        gen_edge_cost: 0,
        preserved: 0,
        best: Best {
            cost: delete_all,
            mapping: vec![None; n_gen],
        },
        found: false,
        expansions: 0,
        options: *options,
        started: Instant::now(),
    };
    state.dfs(0)?;
    Ok(state.best)
}
