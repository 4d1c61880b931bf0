//! Independent d-separation oracle shared by the graph tests.
//!
//! Separation is decided with the moralised ancestral graph, and each path
//! condition of the criteria is reduced to a separation statement in a graph
//! with some outgoing edges removed. Paths are never enumerated.

#![allow(dead_code)]

use causal_bounds::Dag;

/// Adjacency-list copy of a DAG, by vertex index.
#[derive(Clone, Debug)]
pub struct Plain {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Plain {
    fn parents(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == v).map(|e| e.0)
    }

    fn without_outgoing(&self, v: usize) -> Plain {
        Plain {
            n: self.n,
            edges: self.edges.iter().copied().filter(|e| e.0 != v).collect(),
        }
    }

    fn without_vertices(&self, gone: &[usize]) -> Plain {
        Plain {
            n: self.n,
            edges: self
                .edges
                .iter()
                .copied()
                .filter(|e| !gone.contains(&e.0) && !gone.contains(&e.1))
                .collect(),
        }
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(self.edges.iter().filter(|e| e.0 == v).map(|e| e.1));
        }
        false
    }

    /// `a ⊥ b | s` by the moralised ancestral graph.
    fn separated(&self, a: usize, b: usize, s: &[usize]) -> bool {
        let mut keep = vec![false; self.n];
        let mut stack: Vec<usize> = [a, b].iter().chain(s).copied().collect();
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut keep[v], true) {
                continue;
            }
            stack.extend(self.parents(v));
        }
        let mut adj = vec![vec![false; self.n]; self.n];
        for &(p, c) in &self.edges {
            if keep[p] && keep[c] {
                adj[p][c] = true;
                adj[c][p] = true;
            }
        }
        for (c, &kept) in keep.iter().enumerate() {
            if !kept {
                continue;
            }
            let ps: Vec<usize> = self.parents(c).collect();
            for &p in &ps {
                for &q in &ps {
                    if p != q {
                        adj[p][q] = true;
                    }
                }
            }
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![a];
        while let Some(v) = stack.pop() {
            if v == b {
                return false;
            }
            if s.contains(&v) || std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend((0..self.n).filter(|&w| adj[v][w] && keep[w]));
        }
        true
    }
}

pub fn backdoor_oracle(g: &Plain, xs: &[usize], ys: &[usize], zs: &[usize]) -> bool {
    for &x in xs {
        if zs.iter().any(|&z| g.reaches(x, z)) {
            return false;
        }
        let cut = g.without_outgoing(x);
        if ys.iter().any(|&y| !cut.separated(x, y, zs)) {
            return false;
        }
    }
    true
}

pub fn frontdoor_oracle(g: &Plain, x: usize, y: usize, zs: &[usize]) -> bool {
    if g.without_vertices(zs).reaches(x, y) {
        return false;
    }
    let cut = g.without_outgoing(x);
    if zs.iter().any(|&z| !cut.separated(x, z, &[])) {
        return false;
    }
    zs.iter().all(|&z| g.without_outgoing(z).separated(z, y, &[x]))
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("V{i}")).collect()
}

pub fn build(n: usize, edges: &[(usize, usize)]) -> Dag {
    let names = names(n);
    let mut dag = Dag::new();
    for name in &names {
        dag.add_vertex(name.clone(), vec!["0".into(), "1".into()]).unwrap();
    }
    for &(p, c) in edges {
        dag.add_edge(&names[p], &names[c]).unwrap();
    }
    dag
}

pub fn refs<'a>(names: &'a [String], ids: &[usize]) -> Vec<&'a str> {
    ids.iter().map(|&i| names[i].as_str()).collect()
}
