//! Bipartite matchings: maximum, envy-free, and Hall violators.
//!
//! Vertices are 0-based on both sides. Searches visit vertices in ascending
//! order, so results are deterministic.

use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    pub x_size: usize,
    pub y_size: usize,
    /// Sorted, duplicate-free neighbour lists of the X vertices.
    pub adjacency: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(x_size: usize, y_size: usize) -> Self {
        BipartiteGraph {
            x_size,
            y_size,
            adjacency: vec![Vec::new(); x_size],
        }
    }

    pub fn from_edges(x_size: usize, y_size: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = BipartiteGraph::new(x_size, y_size);
        for (x, y) in edges {
            g.add_edge(x, y);
        }
        g
    }

    pub fn add_edge(&mut self, x: usize, y: usize) {
        assert!(x < self.x_size && y < self.y_size, "edge ({x}, {y}) out of range");
        let adj = &mut self.adjacency[x];
        if let Err(pos) = adj.binary_search(&y) {
            adj.insert(pos, y);
        }
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        self.adjacency[x].binary_search(&y).is_ok()
    }

    /// `N_G(S)` for a set of X vertices.
    pub fn neighbourhood(&self, xs: &[usize]) -> Vec<usize> {
        let set: BTreeSet<usize> = xs.iter().flat_map(|&x| self.adjacency[x].iter().copied()).collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    /// `(x, y)` pairs sorted by `x`.
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn mate_of_x(&self, x: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == x).map(|p| p.1)
    }

    pub fn mate_of_y(&self, y: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.1 == y).map(|p| p.0)
    }

    /// No unmatched X vertex is adjacent to a matched Y vertex.
    pub fn is_envy_free(&self, g: &BipartiteGraph) -> bool {
        (0..g.x_size)
            .filter(|&x| self.mate_of_x(x).is_none())
            .all(|x| g.adjacency[x].iter().all(|&y| self.mate_of_y(y).is_none()))
    }

    fn from_mates(mate_x: &[Option<usize>]) -> Self {
        Matching {
            pairs: mate_x
                .iter()
                .enumerate()
                .filter_map(|(x, y)| y.map(|y| (x, y)))
                .collect(),
        }
    }
}

fn augment(
    g: &BipartiteGraph,
    x: usize,
    seen: &mut [bool],
    mate_y: &mut [Option<usize>],
    mate_x: &mut [Option<usize>],
) -> bool {
    for &y in &g.adjacency[x] {
        if seen[y] {
            continue;
        }
        seen[y] = true;
        let free = match mate_y[y] {
            None => true,
            Some(x2) => augment(g, x2, seen, mate_y, mate_x),
        };
        if free {
            mate_y[y] = Some(x);
            mate_x[x] = Some(y);
            return true;
        }
    }
    false
}

fn mates(g: &BipartiteGraph) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let mut mate_x = vec![None; g.x_size];
    let mut mate_y = vec![None; g.y_size];
    for x in 0..g.x_size {
        let mut seen = vec![false; g.y_size];
        augment(g, x, &mut seen, &mut mate_y, &mut mate_x);
    }
    (mate_x, mate_y)
}

/// Maximum-cardinality matching by augmenting paths.
pub fn max_matching(g: &BipartiteGraph) -> Matching {
    Matching::from_mates(&mates(g).0)
}

/// X vertices reachable by alternating paths from unmatched X vertices, and
/// the Y vertices reached on the way.
fn alternating_reach(g: &BipartiteGraph, mate_x: &[Option<usize>], mate_y: &[Option<usize>]) -> (Vec<bool>, Vec<bool>) {
    let mut in_x = vec![false; g.x_size];
    let mut in_y = vec![false; g.y_size];
    let mut stack: Vec<usize> = (0..g.x_size).filter(|&x| mate_x[x].is_none()).collect();
    for &x in &stack {
        in_x[x] = true;
    }
    while let Some(x) = stack.pop() {
        for &y in &g.adjacency[x] {
            if in_y[y] {
                continue;
            }
            in_y[y] = true;
            if let Some(x2) = mate_y[y] {
                if !in_x[x2] {
                    in_x[x2] = true;
                    stack.push(x2);
                }
            }
        }
    }
    (in_x, in_y)
}

/// A maximum matching with every pair on an alternating path from an unmatched
/// X vertex dropped. The rest is envy-free with respect to X, and non-empty
/// whenever `|N_G(X)| >= |X| >= 1`.
pub fn envy_free_matching(g: &BipartiteGraph) -> Matching {
    let (mut mate_x, mate_y) = mates(g);
    let (in_x, _) = alternating_reach(g, &mate_x, &mate_y);
    for x in 0..g.x_size {
        if in_x[x] {
            mate_x[x] = None;
        }
    }
    Matching::from_mates(&mate_x)
}

/// When X cannot be saturated, returns `(N', N_G(N'))` with `|N'| > |N_G(N')|`,
/// where `N'` is everything reachable by alternating paths from unmatched X
/// vertices of a maximum matching.
pub fn hall_deficient_split(g: &BipartiteGraph) -> Option<(Vec<usize>, Vec<usize>)> {
    let (mate_x, mate_y) = mates(g);
    if mate_x.iter().all(Option::is_some) {
        return None;
    }
    let (in_x, in_y) = alternating_reach(g, &mate_x, &mate_y);
    let xs: Vec<usize> = (0..g.x_size).filter(|&x| in_x[x]).collect();
    let ys: Vec<usize> = (0..g.y_size).filter(|&y| in_y[y]).collect();
    debug_assert!(xs.len() > ys.len());
    Some((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_matching_examples() {
        assert_eq!(max_matching(&BipartiteGraph::from_edges(1, 1, [(0, 0)])).len(), 1);
        let k33 = BipartiteGraph::from_edges(3, 3, (0..3).flat_map(|x| (0..3).map(move |y| (x, y))));
        assert_eq!(max_matching(&k33).len(), 3);
        let star = BipartiteGraph::from_edges(2, 1, [(0, 0), (1, 0)]);
        assert_eq!(max_matching(&star).len(), 1);
    }

    #[test]
    fn envy_free_examples() {
        let one = BipartiteGraph::from_edges(1, 1, [(0, 0)]);
        assert_eq!(envy_free_matching(&one).pairs, vec![(0, 0)]);
        let star = BipartiteGraph::from_edges(2, 1, [(0, 0), (1, 0)]);
        assert!(envy_free_matching(&star).is_empty());
        let g = BipartiteGraph::from_edges(2, 2, [(0, 0), (0, 1), (1, 0)]);
        let m = envy_free_matching(&g);
        assert_eq!(m.pairs, vec![(0, 1), (1, 0)]);
        assert!(m.is_envy_free(&g));
    }

    #[test]
    fn hall_examples() {
        let star = BipartiteGraph::from_edges(2, 1, [(0, 0), (1, 0)]);
        assert_eq!(hall_deficient_split(&star), Some((vec![0, 1], vec![0])));
        let k22 = BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 1)]);
        assert_eq!(hall_deficient_split(&k22), None);
    }
}
