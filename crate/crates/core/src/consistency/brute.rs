//! Exhaustive check straight from the definitions: every simple F-cycle and
//! every F-loop of bounded length. Exponential; meant as a test oracle for
//! small graphs.

use std::collections::{HashMap, HashSet};

use crate::infograph::InfoGraph;
use crate::model::{Partition, State};
use crate::rational::Rational;

use super::{Certificate, PlFunction};

/// Returns the first violation found. F-cycles are tried before F-loops,
/// since loop products are only well defined once every F-cycle closes.
pub fn brute_force_check(graph: &InfoGraph, mediator: &Partition, phi: &PlFunction, max_len: usize) -> Result<(), Certificate> {
    let vertices: Vec<State> = graph.vertices().collect();
    for &start in &vertices {
        let mut path = vec![start];
        let mut on_path = vec![false; graph.num_states()];
        on_path[start] = true;
        cycles_from(graph, mediator, phi, &mut path, &mut on_path, Rational::one())?;
    }

    // reach[a][b] = product of φ along some path from a to b
    let mut reach: Vec<HashMap<State, Rational>> = vec![HashMap::new(); graph.num_states()];
    for &a in &vertices {
        let mut stack = vec![a];
        reach[a].insert(a, Rational::one());
        while let Some(u) = stack.pop() {
            let pu = reach[a][&u].clone();
            for &v in graph.neighbors(u) {
                if let std::collections::hash_map::Entry::Vacant(e) = reach[a].entry(v) {
                    e.insert(&pu * phi.at(u, v));
                    stack.push(v);
                }
            }
        }
    }
    let mut exits_of: Vec<Vec<State>> = vec![Vec::new(); graph.num_states()];
    for &a in &vertices {
        let mut e: Vec<State> = reach[a].keys().copied().collect();
        e.sort_unstable();
        exits_of[a] = e;
    }

    struct Node {
        start: State,
        exit: State,
        product: Rational,
        pairs: Vec<(State, State)>,
    }
    let mut seen: HashSet<(State, State, Rational)> = HashSet::new();
    let mut layer: Vec<Node> = Vec::new();
    for &w in &vertices {
        for &e in &exits_of[w] {
            let product = reach[w][&e].clone();
            if seen.insert((w, e, product.clone())) {
                layer.push(Node {
                    start: w,
                    exit: e,
                    product,
                    pairs: vec![(w, e)],
                });
            }
        }
    }
    for _ in 0..max_len {
        let mut next_layer = Vec::new();
        for node in &layer {
            let closes = mediator.same_cell(node.exit, node.start) && !reach[node.exit].contains_key(&node.start);
            if closes && !node.product.is_one() {
                return Err(Certificate::FLoop {
                    pairs: node.pairs.clone(),
                    product: node.product.clone(),
                });
            }
            if node.pairs.len() == max_len {
                continue;
            }
            for &w in mediator.cell_of(node.exit) {
                if !graph.contains(w) || reach[node.exit].contains_key(&w) {
                    continue;
                }
                for &e in &exits_of[w] {
                    let product = &node.product * &reach[w][&e];
                    if seen.insert((node.start, e, product.clone())) {
                        let mut pairs = node.pairs.clone();
                        pairs.push((w, e));
                        next_layer.push(Node {
                            start: node.start,
                            exit: e,
                            product,
                            pairs,
                        });
                    }
                }
            }
        }
        if next_layer.is_empty() {
            break;
        }
        layer = next_layer;
    }
    Ok(())
}

fn cycles_from(
    graph: &InfoGraph,
    mediator: &Partition,
    phi: &PlFunction,
    path: &mut Vec<State>,
    on_path: &mut [bool],
    product: Rational,
) -> Result<(), Certificate> {
    let start = path[0];
    let last = *path.last().unwrap();
    if path.len() >= 2 && mediator.same_cell(start, last) && !product.is_one() {
        return Err(Certificate::FCycle {
            path: path.clone(),
            product,
        });
    }
    if path.len() >= 3 && graph.has_edge(last, start) {
        let closed = &product * phi.at(last, start);
        if !closed.is_one() {
            let mut cycle = path.clone();
            cycle.push(start);
            return Err(Certificate::FCycle { path: cycle, product: closed });
        }
    }
    for &v in graph.neighbors(last) {
        if on_path[v] {
            continue;
        }
        on_path[v] = true;
        path.push(v);
        let p = &product * phi.at(last, v);
        let res = cycles_from(graph, mediator, phi, path, on_path, p);
        path.pop();
        on_path[v] = false;
        res?;
    }
    Ok(())
}
