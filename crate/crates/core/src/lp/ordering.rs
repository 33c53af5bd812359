//! Fill-reducing ordering by multiple minimum degree on a quotient graph.
//!
//! Eliminated nodes become elements (cliques stored by member list), nodes
//! with identical quotient-graph adjacency are merged into supervariables,
//! and all independent nodes of minimum degree are eliminated before degrees
//! are recomputed.

use std::collections::HashMap;

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Variable,
    Element,
    Absorbed,
    Merged,
}

struct Buckets {
    head: Vec<usize>,
    next: Vec<usize>,
    prev: Vec<usize>,
    degree: Vec<usize>,
    member: Vec<bool>,
}

impl Buckets {
    fn new(n: usize) -> Self {
        Buckets {
            head: vec![NONE; n + 1],
            next: vec![NONE; n],
            prev: vec![NONE; n],
            degree: vec![0; n],
            member: vec![false; n],
        }
    }

    fn insert(&mut self, i: usize, deg: usize) {
        let deg = deg.min(self.head.len() - 1);
        self.degree[i] = deg;
        self.prev[i] = NONE;
        self.next[i] = self.head[deg];
        if self.head[deg] != NONE {
            self.prev[self.head[deg]] = i;
        }
        self.head[deg] = i;
        self.member[i] = true;
    }

    fn remove(&mut self, i: usize) {
        if !self.member[i] {
            return;
        }
        let (p, nx) = (self.prev[i], self.next[i]);
        if p != NONE {
            self.next[p] = nx;
        } else {
            self.head[self.degree[i]] = nx;
        }
        if nx != NONE {
            self.prev[nx] = p;
        }
        self.member[i] = false;
    }
}

/// Returns `perm` with `perm[new] = old` for a symmetric pattern given as
/// full adjacency lists (`indptr`/`indices`, self loops ignored).
pub fn minimum_degree(n: usize, indptr: &[usize], indices: &[usize]) -> Vec<usize> {
    let mut adj_vars: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            indices[indptr[i]..indptr[i + 1]]
                .iter()
                .copied()
                .filter(|&j| j != i)
                .collect()
        })
        .collect();
    for list in &mut adj_vars {
        list.sort_unstable();
        list.dedup();
    }
    let mut adj_elems: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut status = vec![Status::Variable; n];
    let mut weight = vec![1usize; n];
    let mut chain: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut mark = vec![0u64; n];
    let mut stamp = 0u64;
    let mut touched = vec![false; n];

    let mut buckets = Buckets::new(n);
    for i in (0..n).rev() {
        buckets.insert(i, adj_vars[i].len());
    }

    let mut order = Vec::with_capacity(n);
    let mut min_deg = 0;
    let mut touched_list: Vec<usize> = Vec::new();
    let mut reach: Vec<usize> = Vec::new();

    while order.len() < n {
        while min_deg < buckets.head.len() && buckets.head[min_deg] == NONE {
            min_deg += 1;
        }
        if min_deg == buckets.head.len() {
            // only possible if bookkeeping lost a node; append the rest
            for i in 0..n {
                if status[i] == Status::Variable {
                    order.push(i);
                    order.extend_from_slice(&chain[i]);
                    status[i] = Status::Element;
                }
            }
            break;
        }

        // eliminate an independent set of minimum-degree supervariables
        while let Some(p) = Some(buckets.head[min_deg]).filter(|&p| p != NONE) {
            buckets.remove(p);
            stamp += 1;
            mark[p] = stamp;
            reach.clear();
            for &e in &adj_elems[p] {
                if status[e] != Status::Element {
                    continue;
                }
                for &v in &members[e] {
                    if status[v] == Status::Variable && mark[v] != stamp {
                        mark[v] = stamp;
                        reach.push(v);
                    }
                }
                status[e] = Status::Absorbed;
                members[e] = Vec::new();
            }
            for &v in &adj_vars[p] {
                if status[v] == Status::Variable && mark[v] != stamp {
                    mark[v] = stamp;
                    reach.push(v);
                }
            }
            status[p] = Status::Element;
            adj_vars[p] = Vec::new();
            adj_elems[p] = Vec::new();
            order.push(p);
            order.append(&mut chain[p]);
            for &v in &reach {
                buckets.remove(v);
                adj_elems[v].push(p);
                if !touched[v] {
                    touched[v] = true;
                    touched_list.push(v);
                }
            }
            members[p] = reach.clone();
        }

        // clean adjacency and recompute external degrees of touched nodes
        for &v in &touched_list {
            if status[v] != Status::Variable {
                continue;
            }
            stamp += 1;
            mark[v] = stamp;
            let mut deg = 0;
            let mut elems = std::mem::take(&mut adj_elems[v]);
            elems.retain(|&e| status[e] == Status::Element);
            elems.sort_unstable();
            elems.dedup();
            for &e in &elems {
                members[e].retain(|&u| status[u] == Status::Variable);
                for &u in &members[e] {
                    if mark[u] != stamp {
                        mark[u] = stamp;
                        deg += weight[u];
                    }
                }
            }
            adj_elems[v] = elems;
            let covered = stamp;
            adj_vars[v].retain(|&u| status[u] == Status::Variable && mark[u] != covered);
            for &u in &adj_vars[v] {
                deg += weight[u];
            }
            buckets.degree[v] = deg;
        }

        // merge indistinguishable supervariables
        let mut groups: HashMap<(usize, usize, usize), Vec<usize>> = HashMap::new();
        for &v in &touched_list {
            if status[v] != Status::Variable {
                continue;
            }
            let key = adj_elems[v]
                .iter()
                .chain(&adj_vars[v])
                .fold(0usize, |h, &x| h.wrapping_add(x.wrapping_mul(0x9e37_79b9)));
            groups
                .entry((key, adj_elems[v].len(), adj_vars[v].len()))
                .or_default()
                .push(v);
        }
        let mut keys: Vec<_> = groups.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let group = &groups[&key];
            if group.len() < 2 {
                continue;
            }
            for a in 0..group.len() {
                let i = group[a];
                if status[i] != Status::Variable {
                    continue;
                }
                for &j in &group[a + 1..] {
                    if status[j] != Status::Variable {
                        continue;
                    }
                    if adj_elems[i] == adj_elems[j] && same_set(&adj_vars[i], &adj_vars[j]) {
                        status[j] = Status::Merged;
                        weight[i] += weight[j];
                        buckets.degree[i] = buckets.degree[i].saturating_sub(weight[j]);
                        let mut moved = std::mem::take(&mut chain[j]);
                        chain[i].push(j);
                        chain[i].append(&mut moved);
                        adj_elems[j] = Vec::new();
                        adj_vars[j] = Vec::new();
                    }
                }
            }
        }

        let round_min = min_deg;
        for &v in &touched_list {
            touched[v] = false;
            if status[v] == Status::Variable {
                let deg = buckets.degree[v];
                buckets.insert(v, deg);
                min_deg = min_deg.min(buckets.degree[v]);
            }
        }
        touched_list.clear();
        // untouched nodes never sit below the bucket just emptied
        min_deg = min_deg.min(round_min);
    }
    order
}

fn same_set(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_unstable();
    y.sort_unstable();
    x == y
}

/// Inverse of a permutation.
pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_lists(n: usize, edges: &[(usize, usize)]) -> (Vec<usize>, Vec<usize>) {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        for list in adj {
            indices.extend(list);
            indptr.push(indices.len());
        }
        (indptr, indices)
    }

    /// Fill of a symbolic elimination in the given order (dense simulation).
    fn fill(n: usize, edges: &[(usize, usize)], perm: &[usize]) -> usize {
        let inv = invert(perm);
        let mut adj = vec![vec![false; n]; n];
        for &(a, b) in edges {
            adj[inv[a]][inv[b]] = true;
            adj[inv[b]][inv[a]] = true;
        }
        let mut count = 0;
        for k in 0..n {
            let nb: Vec<usize> = (k + 1..n).filter(|&j| adj[k][j]).collect();
            count += nb.len();
            for &a in &nb {
                for &b in &nb {
                    if a != b {
                        adj[a][b] = true;
                    }
                }
            }
        }
        count
    }

    fn is_permutation(perm: &[usize], n: usize) -> bool {
        let mut seen = vec![false; n];
        perm.len() == n && perm.iter().all(|&p| p < n && !std::mem::replace(&mut seen[p], true))
    }

    #[test]
    fn star_centre_goes_last() {
        let edges: Vec<_> = (1..8).map(|i| (0, i)).collect();
        let (p, i) = to_lists(8, &edges);
        let perm = minimum_degree(8, &p, &i);
        assert!(is_permutation(&perm, 8));
        assert_eq!(fill(8, &edges, &perm), 7);
        assert!(perm[..6].iter().all(|&v| v != 0));
    }

    #[test]
    fn grid_ordering_beats_natural() {
        let k = 12;
        let mut edges = Vec::new();
        for r in 0..k {
            for c in 0..k {
                if c + 1 < k {
                    edges.push((r * k + c, r * k + c + 1));
                }
                if r + 1 < k {
                    edges.push((r * k + c, (r + 1) * k + c));
                }
            }
        }
        let n = k * k;
        let (p, i) = to_lists(n, &edges);
        let perm = minimum_degree(n, &p, &i);
        assert!(is_permutation(&perm, n));
        let natural: Vec<usize> = (0..n).collect();
        assert!(fill(n, &edges, &perm) < fill(n, &edges, &natural));
    }

    #[test]
    fn handles_isolated_nodes_and_cliques() {
        let mut edges = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                edges.push((a, b));
            }
        }
        edges.push((4, 6));
        let (p, i) = to_lists(8, &edges);
        let perm = minimum_degree(8, &p, &i);
        assert!(is_permutation(&perm, 8));
        let natural: Vec<usize> = (0..8).collect();
        assert!(fill(8, &edges, &perm) <= fill(8, &edges, &natural));
    }
}
