use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};
use crate::space::{Grid, Point};
use crate::systems::SystemSpec;

/// Rounding guard added to the edge tolerance.
pub const EDGE_GUARD: f64 = 1e-12;

/// Cell graph with an edge c -> c' iff rho(T(rep c), rep c') <= d + mesh/2.
#[derive(Clone, Debug)]
pub struct TransitionGraph {
    grid: Grid,
    d: f64,
    tolerance: f64,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

/// Builds the transition graph, refusing grids with more than `max_cells`
/// cells.
pub fn build_transition_graph(system: &SystemSpec, grid: &Grid, d: f64, max_cells: usize) -> Result<TransitionGraph> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::InvalidInput(format!("d must be nonnegative, got {d}")));
    }
    if grid.space() != system.space() {
        return Err(Error::InvalidInput("grid and system live on different spaces".into()));
    }
    if grid.len() > max_cells {
        return Err(Error::Resource(format!(
            "grid has {} cells, limit is {max_cells}",
            grid.len()
        )));
    }
    let tolerance = d + 0.5 * grid.mesh() + EDGE_GUARD;
    let mut images: Vec<f64> = grid.reps().iter().map(|p| p.x()).collect();
    system.forward_batch(&mut images);
    let mut offsets = Vec::with_capacity(grid.len() + 1);
    let mut targets = Vec::new();
    offsets.push(0);
    for y in images {
        targets.extend(grid.cells_within(&Point::new1(y), tolerance).into_iter().map(|c| c as u32));
        offsets.push(targets.len());
    }
    Ok(TransitionGraph { grid: grid.clone(), d, tolerance, offsets, targets })
}

impl TransitionGraph {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn successors(&self, c: usize) -> &[u32] {
        &self.targets[self.offsets[c]..self.offsets[c + 1]]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.successors(a).binary_search(&(b as u32)).is_ok()
    }

    /// Writes one `src dst` line per edge.
    pub fn write_edges<W: Write>(&self, mut w: W) -> Result<()> {
        for c in 0..self.len() {
            for &t in self.successors(c) {
                writeln!(w, "{c} {t}")?;
            }
        }
        Ok(())
    }

    /// Shortest cycle through c as the list of its cells, starting at c.
    pub fn shortest_cycle(&self, c: usize) -> Option<Vec<usize>> {
        let n = self.len();
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        queue.push_back(c);
        parent[c] = c;
        while let Some(u) = queue.pop_front() {
            for &v in self.successors(u) {
                let v = v as usize;
                if v == c {
                    let mut path = vec![u];
                    let mut w = u;
                    while w != c {
                        w = parent[w];
                        path.push(w);
                    }
                    path.reverse();
                    return Some(path);
                }
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        None
    }

    /// Strongly connected component id of every cell (iterative Tarjan).
    pub fn components(&self) -> Vec<u32> {
        let n = self.len();
        const UNSEEN: u32 = u32::MAX;
        let mut index = vec![UNSEEN; n];
        let mut low = vec![0u32; n];
        let mut on_stack = vec![false; n];
        let mut comp = vec![UNSEEN; n];
        let mut stack: Vec<u32> = Vec::new();
        let mut call: Vec<(u32, usize)> = Vec::new();
        let mut next_index = 0u32;
        let mut next_comp = 0u32;
        for root in 0..n {
            if index[root] != UNSEEN {
                continue;
            }
            call.push((root as u32, 0));
            index[root] = next_index;
            low[root] = next_index;
            next_index += 1;
            stack.push(root as u32);
            on_stack[root] = true;
            while let Some(top) = call.last_mut() {
                let v = top.0 as usize;
                let succ = self.successors(v);
                if top.1 < succ.len() {
                    let w = succ[top.1] as usize;
                    top.1 += 1;
                    if index[w] == UNSEEN {
                        index[w] = next_index;
                        low[w] = next_index;
                        next_index += 1;
                        stack.push(w as u32);
                        on_stack[w] = true;
                        call.push((w as u32, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(p, _)) = call.last() {
                        let p = p as usize;
                        low[p] = low[p].min(low[v]);
                    }
                    if low[v] == index[v] {
                        loop {
                            let w = stack.pop().unwrap() as usize;
                            on_stack[w] = false;
                            comp[w] = next_comp;
                            if w == v {
                                break;
                            }
                        }
                        next_comp += 1;
                    }
                }
            }
        }
        comp
    }
}

/// Cells lying on a cycle of the graph: members of nontrivial strongly
/// connected components and cells with a self-loop. Sorted.
pub fn chain_recurrent_cells(graph: &TransitionGraph) -> Vec<usize> {
    let comp = graph.components();
    let mut size = vec![0usize; graph.len()];
    for &c in &comp {
        size[c as usize] += 1;
    }
    (0..graph.len())
        .filter(|&c| size[comp[c] as usize] > 1 || graph.has_edge(c, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::build_grid;
    use crate::systems::parse_selector;

    #[test]
    fn quarter_rotation_is_one_cycle() {
        let s = parse_selector("rotation:alpha=0.25").unwrap();
        let g = build_grid(s.space(), 0.25).unwrap();
        let tg = build_transition_graph(&s, &g, 0.0, 100).unwrap();
        assert_eq!(tg.edge_count(), 4);
        for c in 0..4 {
            assert_eq!(tg.successors(c), &[((c + 1) % 4) as u32]);
        }
        assert_eq!(chain_recurrent_cells(&tg), vec![0, 1, 2, 3]);
        assert_eq!(tg.shortest_cycle(2).unwrap(), vec![2, 3, 0, 1]);
    }

    #[test]
    fn identity_has_only_self_loops() {
        let s = parse_selector("identity").unwrap();
        let g = build_grid(s.space(), 0.1).unwrap();
        let tg = build_transition_graph(&s, &g, 0.0, 100).unwrap();
        for c in 0..g.len() {
            assert_eq!(tg.successors(c), &[c as u32]);
        }
    }

    #[test]
    fn north_south_cycles_stay_near_fixed_points() {
        let s = parse_selector("north_south").unwrap();
        let g = build_transition_graph(&s, &build_grid(s.space(), 1e-3).unwrap(), 1e-3, usize::MAX).unwrap();
        let cr = chain_recurrent_cells(&g);
        assert!(cr.contains(&0) && cr.contains(&500));
        for c in cr {
            let x = g.grid().rep(c);
            let near = [0.0, 0.5].iter().any(|&f| s.space().dist(&x, &Point::new1(f)) < 0.02);
            assert!(near, "cell {c} at {}", x.x());
        }
    }

    #[test]
    fn cell_cap() {
        let s = parse_selector("identity").unwrap();
        let g = build_grid(s.space(), 1e-3).unwrap();
        assert!(matches!(build_transition_graph(&s, &g, 0.0, 10), Err(Error::Resource(_))));
    }
}
