use std::collections::VecDeque;
use std::fmt::Write as _;

use super::{Dfa, DfaError, DfaState};
use crate::ltlf::{Interpretation, LtlfError, Prop};

/// Largest proposition set whose alphabet is enumerated densely.
pub const MAX_EXPLICIT_PROPS: usize = 12;

/// Table-driven DFA over the full alphabet `2^props`.
///
/// Symbol `k` is the interpretation containing `props[i]` iff bit `i` of `k`
/// is set. State 0 is initial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitDfa {
    props: Vec<Prop>,
    num_states: usize,
    table: Vec<u32>,
    accepting: Vec<bool>,
    /// Printed residual formula per state, when materialized from a [`Dfa`].
    names: Vec<String>,
}

impl ExplicitDfa {
    /// Builds a DFA from a raw table (`table[state * 2^|props| + symbol]`).
    pub fn from_table(props: Vec<Prop>, table: Vec<u32>, accepting: Vec<bool>) -> Self {
        let alphabet = 1usize << props.len();
        let num_states = accepting.len();
        assert_eq!(table.len(), num_states * alphabet, "table is not total");
        assert!(table.iter().all(|&t| (t as usize) < num_states));
        let names = (0..num_states).map(|i| format!("q{i}")).collect();
        ExplicitDfa {
            props,
            num_states,
            table,
            accepting,
            names,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn alphabet_size(&self) -> usize {
        1 << self.props.len()
    }

    pub fn props(&self) -> &[Prop] {
        &self.props
    }

    pub fn initial(&self) -> u32 {
        0
    }

    pub fn next(&self, q: u32, symbol: usize) -> u32 {
        self.table[q as usize * self.alphabet_size() + symbol]
    }

    pub fn is_accepting(&self, q: u32) -> bool {
        self.accepting[q as usize]
    }

    pub fn num_accepting(&self) -> usize {
        self.accepting.iter().filter(|a| **a).count()
    }

    pub fn state_name(&self, q: u32) -> &str {
        &self.names[q as usize]
    }

    pub fn symbol_of(&self, sigma: &Interpretation) -> usize {
        self.props
            .iter()
            .enumerate()
            .filter(|(_, p)| sigma.contains(p))
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    pub fn interpretation(&self, symbol: usize) -> Interpretation {
        self.props
            .iter()
            .enumerate()
            .filter(|(i, _)| symbol & (1 << i) != 0)
            .map(|(_, p)| p.clone())
            .collect()
    }

    pub fn accepts(&self, t: &[Interpretation]) -> Result<bool, DfaError> {
        if t.is_empty() {
            return Err(LtlfError::EmptyTrace.into());
        }
        let q = t.iter().fold(0, |q, s| self.next(q, self.symbol_of(s)));
        Ok(self.is_accepting(q))
    }

    /// Graphviz rendering; accepting states are double circles and each edge
    /// lists the interpretations that take it.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dfa {\n  rankdir=LR;\n  init [shape=point];\n");
        for q in 0..self.num_states {
            let shape = if self.accepting[q] { "doublecircle" } else { "circle" };
            let label = self.names[q].replace('\\', "\\\\").replace('"', "\\\"");
            let _ = writeln!(out, "  {q} [shape={shape}, label=\"{label}\"];");
        }
        out.push_str("  init -> 0;\n");
        for q in 0..self.num_states {
            let mut targets: Vec<(u32, Vec<usize>)> = Vec::new();
            for sym in 0..self.alphabet_size() {
                let t = self.next(q as u32, sym);
                match targets.iter_mut().find(|(d, _)| *d == t) {
                    Some((_, syms)) => syms.push(sym),
                    None => targets.push((t, vec![sym])),
                }
            }
            for (t, syms) in targets {
                let mut labels: Vec<String> = syms.iter().map(|s| self.interpretation(*s).to_string()).collect();
                labels.sort();
                let _ = writeln!(out, "  {q} -> {t} [label=\"{}\"];", labels.join(", "));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Explores `d` over the full alphabet, numbering states in BFS order.
pub fn materialize(d: &Dfa) -> Result<ExplicitDfa, DfaError> {
    let props: Vec<Prop> = d.props().as_slice().to_vec();
    if props.len() > MAX_EXPLICIT_PROPS {
        return Err(DfaError::AlphabetTooLarge(props.len()));
    }
    let alphabet = 1usize << props.len();
    let symbols: Vec<Interpretation> = (0..alphabet)
        .map(|k| {
            props
                .iter()
                .enumerate()
                .filter(|(i, _)| k & (1 << i) != 0)
                .map(|(_, p)| p.clone())
                .collect()
        })
        .collect();

    let mut order: Vec<DfaState> = vec![d.initial()];
    let mut local = std::collections::HashMap::from([(d.initial(), 0u32)]);
    let mut table = Vec::new();
    let mut head = 0;
    while head < order.len() {
        let q = order[head];
        head += 1;
        for sigma in &symbols {
            let next = d.step(q, sigma);
            let id = *local.entry(next).or_insert_with(|| {
                order.push(next);
                (order.len() - 1) as u32
            });
            table.push(id);
        }
    }
    Ok(ExplicitDfa {
        props,
        num_states: order.len(),
        table,
        accepting: order.iter().map(|q| d.is_accepting(*q)).collect(),
        names: order.iter().map(|q| d.state_name(*q).to_string()).collect(),
    })
}

/// Hopcroft partition refinement followed by BFS renumbering from the
/// initial state. Unreachable states are dropped.
pub fn minimize(d: &ExplicitDfa) -> ExplicitDfa {
    let k = d.alphabet_size();
    let reach = reachable(d);
    let n = reach.len();
    // dense re-indexing of the reachable part
    let mut idx = vec![u32::MAX; d.num_states];
    for (i, q) in reach.iter().enumerate() {
        idx[*q as usize] = i as u32;
    }
    let next = |q: usize, c: usize| idx[d.next(reach[q], c) as usize] as usize;

    let mut preimage: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new(); n]; k];
    for q in 0..n {
        for (c, pre) in preimage.iter_mut().enumerate() {
            pre[next(q, c)].push(q as u32);
        }
    }

    let mut block_of = vec![0usize; n];
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    let (acc, rej): (Vec<u32>, Vec<u32>) = (0..n as u32).partition(|q| d.is_accepting(reach[*q as usize]));
    for part in [acc, rej] {
        if !part.is_empty() {
            for q in &part {
                block_of[*q as usize] = blocks.len();
            }
            blocks.push(part);
        }
    }
    let mut in_work = vec![true; blocks.len()];
    let mut work: Vec<usize> = (0..blocks.len()).collect();

    let mut marked = vec![false; n];
    while let Some(splitter) = work.pop() {
        in_work[splitter] = false;
        let members = blocks[splitter].clone();
        for pre in &preimage {
            let mut touched: Vec<usize> = Vec::new();
            let mut hits: Vec<u32> = Vec::new();
            for &t in &members {
                for &q in &pre[t as usize] {
                    if !marked[q as usize] {
                        marked[q as usize] = true;
                        hits.push(q);
                        touched.push(block_of[q as usize]);
                    }
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for b in touched {
                let (inside, outside): (Vec<u32>, Vec<u32>) =
                    blocks[b].iter().partition(|q| marked[**q as usize]);
                if outside.is_empty() {
                    continue;
                }
                let new_id = blocks.len();
                let (keep, moved) = (inside, outside);
                for q in &moved {
                    block_of[*q as usize] = new_id;
                }
                let smaller_is_new = moved.len() <= keep.len();
                blocks[b] = keep;
                blocks.push(moved);
                in_work.push(false);
                // a queued block must have both halves queued
                if in_work[b] || smaller_is_new {
                    in_work[new_id] = true;
                    work.push(new_id);
                } else {
                    in_work[b] = true;
                    work.push(b);
                }
            }
            for q in hits {
                marked[q as usize] = false;
            }
        }
    }

    // quotient, renumbered by BFS from the initial block
    let mut order = vec![block_of[0]];
    let mut local = vec![u32::MAX; blocks.len()];
    local[block_of[0]] = 0;
    let mut table = Vec::new();
    let mut head = 0;
    while head < order.len() {
        let b = order[head];
        head += 1;
        let rep = blocks[b][0] as usize;
        for c in 0..k {
            let tb = block_of[next(rep, c)];
            if local[tb] == u32::MAX {
                local[tb] = order.len() as u32;
                order.push(tb);
            }
            table.push(local[tb]);
        }
    }
    ExplicitDfa {
        props: d.props.clone(),
        num_states: order.len(),
        table,
        accepting: order
            .iter()
            .map(|b| d.is_accepting(reach[blocks[*b][0] as usize]))
            .collect(),
        names: order
            .iter()
            .map(|b| d.names[reach[blocks[*b][0] as usize] as usize].clone())
            .collect(),
    }
}

fn reachable(d: &ExplicitDfa) -> Vec<u32> {
    let mut seen = vec![false; d.num_states];
    let mut out = vec![0u32];
    seen[0] = true;
    let mut queue = VecDeque::from([0u32]);
    while let Some(q) = queue.pop_front() {
        for c in 0..d.alphabet_size() {
            let t = d.next(q, c);
            if !seen[t as usize] {
                seen[t as usize] = true;
                out.push(t);
                queue.push_back(t);
            }
        }
    }
    out
}
