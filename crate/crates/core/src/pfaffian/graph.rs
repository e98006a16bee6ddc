//! Decorated planar graph whose perfect matchings are the even subgraphs of
//! an Ising bond graph, with a Kasteleyn orientation.
//!
//! Every spin of degree `d` becomes `d` terminals (one per incident bond, in
//! counter-clockwise order) plus a small internal gadget. The gadget has
//! exactly one perfect matching for every even set of terminals that are
//! matched externally and none for odd sets.

use crate::error::{Error, Result};
use crate::model::Bond;
use std::f64::consts::PI;

/// Spins embedded in the plane with straight-line bonds.
#[derive(Debug, Clone)]
pub struct SpinGraph {
    pub positions: Vec<[f64; 2]>,
    pub bonds: Vec<Bond>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeKind {
    Internal,
    /// Carries the bond with this index.
    External(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub kind: EdgeKind,
    /// True when oriented `u -> v`.
    pub forward: bool,
}

#[derive(Debug, Clone)]
pub struct ExpandedGraph {
    pub positions: Vec<[f64; 2]>,
    pub edges: Vec<Edge>,
    /// `terminals[site][j]` is the vertex for the site's j-th bond.
    pub terminals: Vec<Vec<usize>>,
    /// Terminal vertex of each bond at its `a` and `b` endpoints.
    pub bond_terminals: Vec<[usize; 2]>,
    /// Face walks as half-edge lists `(edge, traversed_forward)`.
    faces: Vec<Vec<(usize, bool)>>,
    outer: Vec<bool>,
}

const TERMINAL_OFFSET: f64 = 0.25;
const INTERNAL_OFFSET: f64 = 0.08;

/// Gadget edges over local vertices `0..d` (terminals) and `d..` (internal).
fn gadget(degree: usize) -> (usize, &'static [(usize, usize)]) {
    match degree {
        0 => (0, &[]),
        1 => (1, &[(0, 1)]),
        2 => (0, &[(0, 1)]),
        3 => (1, &[(0, 1), (0, 3), (1, 3), (2, 3)]),
        4 => (2, &[(0, 1), (0, 4), (1, 4), (2, 3), (2, 5), (3, 5), (4, 5)]),
        _ => unreachable!("degree checked by caller"),
    }
}

fn angle_of(from: [f64; 2], to: [f64; 2]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0])
}

fn gap(a: f64, b: f64) -> f64 {
    (b - a).rem_euclid(2.0 * PI)
}

impl ExpandedGraph {
    pub fn build(graph: &SpinGraph) -> Result<Self> {
        let n = graph.positions.len();
        let mut incident: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n];
        for (idx, b) in graph.bonds.iter().enumerate() {
            if b.a == b.b || b.a >= n || b.b >= n {
                return Err(Error::Unsupported(format!("bond {idx} has invalid endpoints")));
            }
            incident[b.a].push((angle_of(graph.positions[b.a], graph.positions[b.b]), idx));
            incident[b.b].push((angle_of(graph.positions[b.b], graph.positions[b.a]), idx));
        }
        let mut positions = Vec::new();
        let mut edges = Vec::new();
        let mut terminals = Vec::with_capacity(n);
        let mut bond_terminals = vec![[usize::MAX; 2]; graph.bonds.len()];
        for (site, list) in incident.iter_mut().enumerate() {
            let d = list.len();
            if d > 4 {
                return Err(Error::Unsupported(format!("site {site} has degree {d} > 4")));
            }
            list.sort_by(|x, y| x.0.total_cmp(&y.0));
            // Rotate so the gadget's chords span the narrowest angular gaps.
            let rot = match d {
                3 => (0..3)
                    .min_by(|&i, &j| {
                        gap(list[i].0, list[(i + 1) % 3].0).total_cmp(&gap(list[j].0, list[(j + 1) % 3].0))
                    })
                    .unwrap(),
                4 => {
                    let g = |i: usize| {
                        gap(list[i].0, list[(i + 1) % 4].0).max(gap(list[(i + 2) % 4].0, list[(i + 3) % 4].0))
                    };
                    if g(1) < g(0) {
                        1
                    } else {
                        0
                    }
                }
                _ => 0,
            };
            list.rotate_left(rot);
            let centre = graph.positions[site];
            let base = positions.len();
            let mut local = Vec::with_capacity(d);
            for &(ang, bond) in list.iter() {
                positions.push([centre[0] + TERMINAL_OFFSET * ang.cos(), centre[1] + TERMINAL_OFFSET * ang.sin()]);
                let slot = if graph.bonds[bond].a == site { 0 } else { 1 };
                bond_terminals[bond][slot] = base + local.len();
                local.push(base + local.len());
            }
            let (internal, gadget_edges) = gadget(d);
            match d {
                1 | 3 => positions.push(centre),
                4 => {
                    for pair in [(0usize, 1usize), (2, 3)] {
                        let (x, y) = (list[pair.0].0, list[pair.1].0);
                        let mid = x + 0.5 * gap(x, y);
                        positions
                            .push([centre[0] + INTERNAL_OFFSET * mid.cos(), centre[1] + INTERNAL_OFFSET * mid.sin()]);
                    }
                }
                _ => {}
            }
            debug_assert_eq!(positions.len(), base + d + internal);
            for &(x, y) in gadget_edges {
                edges.push(Edge { u: base + x, v: base + y, kind: EdgeKind::Internal, forward: true });
            }
            terminals.push(local);
        }
        for (idx, t) in bond_terminals.iter().enumerate() {
            edges.push(Edge { u: t[0], v: t[1], kind: EdgeKind::External(idx), forward: true });
        }
        let mut g = ExpandedGraph { positions, edges, terminals, bond_terminals, faces: Vec::new(), outer: Vec::new() };
        g.orient()?;
        Ok(g)
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    /// Counter-clockwise rotation system: per vertex, `(neighbor, edge)`.
    fn rotation(&self) -> Vec<Vec<(usize, usize)>> {
        let mut rot: Vec<Vec<(f64, usize, usize)>> = vec![Vec::new(); self.num_vertices()];
        for (e, edge) in self.edges.iter().enumerate() {
            rot[edge.u].push((angle_of(self.positions[edge.u], self.positions[edge.v]), edge.v, e));
            rot[edge.v].push((angle_of(self.positions[edge.v], self.positions[edge.u]), edge.u, e));
        }
        rot.into_iter()
            .map(|mut r| {
                r.sort_by(|x, y| x.0.total_cmp(&y.0));
                r.into_iter().map(|(_, w, e)| (w, e)).collect()
            })
            .collect()
    }

    fn components(&self) -> Vec<usize> {
        let n = self.num_vertices();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
            parent[a] = b;
        }
        (0..n).map(|v| find(&mut parent, v)).collect()
    }

    /// Trace faces, then orient edges so every inner face has an odd number
    /// of clockwise edges.
    fn orient(&mut self) -> Result<()> {
        let rot = self.rotation();
        let m = self.edges.len();
        // Half-edge id: 2e for u -> v, 2e + 1 for v -> u.
        let tail = |h: usize, edges: &[Edge]| if h % 2 == 0 { edges[h / 2].u } else { edges[h / 2].v };
        let head = |h: usize, edges: &[Edge]| if h % 2 == 0 { edges[h / 2].v } else { edges[h / 2].u };
        let mut face_of = vec![usize::MAX; 2 * m];
        let mut faces: Vec<Vec<(usize, bool)>> = Vec::new();
        for start in 0..2 * m {
            if face_of[start] != usize::MAX {
                continue;
            }
            let f = faces.len();
            let mut walk = Vec::new();
            let mut h = start;
            loop {
                face_of[h] = f;
                walk.push((h / 2, h % 2 == 0));
                let (from, at) = (tail(h, &self.edges), head(h, &self.edges));
                let around = &rot[at];
                let idx = around.iter().position(|&(w, e)| w == from && e == h / 2).expect("rotation entry");
                let (next_v, next_e) = around[(idx + around.len() - 1) % around.len()];
                h = if self.edges[next_e].u == at && self.edges[next_e].v == next_v {
                    2 * next_e
                } else {
                    2 * next_e + 1
                };
                if h == start {
                    break;
                }
            }
            faces.push(walk);
        }
        let area = |walk: &[(usize, bool)], edges: &[Edge], pos: &[[f64; 2]]| -> f64 {
            walk.iter()
                .map(|&(e, fwd)| {
                    let (a, b) = if fwd { (edges[e].u, edges[e].v) } else { (edges[e].v, edges[e].u) };
                    pos[a][0] * pos[b][1] - pos[b][0] * pos[a][1]
                })
                .sum::<f64>()
                * 0.5
        };
        let comp = self.components();
        let face_comp: Vec<usize> = faces.iter().map(|w| comp[self.edges[w[0].0].u]).collect();
        let areas: Vec<f64> = faces.iter().map(|w| area(w, &self.edges, &self.positions)).collect();
        let mut outer = vec![false; faces.len()];
        let mut best: std::collections::HashMap<usize, usize> = Default::default();
        for f in 0..faces.len() {
            let e = best.entry(face_comp[f]).or_insert(f);
            if areas[f] < areas[*e] {
                *e = f;
            }
        }
        for &f in best.values() {
            outer[f] = true;
        }

        // Spanning forest by BFS; tree edges keep their default orientation.
        let n = self.num_vertices();
        let mut in_tree = vec![false; m];
        let mut seen = vec![false; n];
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut queue = std::collections::VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                for &(w, e) in &rot[v] {
                    if !seen[w] {
                        seen[w] = true;
                        in_tree[e] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        // Dual tree over faces through non-tree edges, rooted at outer faces.
        let mut dual: Vec<Vec<(usize, usize)>> = vec![Vec::new(); faces.len()];
        for e in 0..m {
            if !in_tree[e] {
                let (f1, f2) = (face_of[2 * e], face_of[2 * e + 1]);
                if f1 == f2 {
                    return Err(Error::Numerical("non-tree edge bounds a single face; embedding is not planar".into()));
                }
                dual[f1].push((f2, e));
                dual[f2].push((f1, e));
            }
        }
        let mut order = Vec::with_capacity(faces.len());
        let mut parent_edge = vec![usize::MAX; faces.len()];
        let mut visited = vec![false; faces.len()];
        for root in (0..faces.len()).filter(|&f| outer[f]) {
            visited[root] = true;
            let mut queue = std::collections::VecDeque::from([root]);
            while let Some(f) = queue.pop_front() {
                order.push(f);
                for &(g, e) in &dual[f] {
                    if !visited[g] {
                        visited[g] = true;
                        parent_edge[g] = e;
                        queue.push_back(g);
                    }
                }
            }
        }
        if order.len() != faces.len() {
            return Err(Error::Numerical("dual graph is not a forest rooted at outer faces".into()));
        }
        for &f in order.iter().rev() {
            if outer[f] {
                continue;
            }
            let pe = parent_edge[f];
            let others =
                faces[f].iter().filter(|&&(e, _)| e != pe).filter(|&&(e, fwd)| self.edges[e].forward != fwd).count();
            let &(_, fwd) = faces[f].iter().find(|&&(e, _)| e == pe).expect("parent edge on face");
            // The parent edge must be clockwise iff the others are even.
            let want_clockwise = others % 2 == 0;
            self.edges[pe].forward = if want_clockwise { !fwd } else { fwd };
        }
        self.faces = faces;
        self.outer = outer;
        Ok(())
    }

    /// Clockwise-edge count of each inner face; all must be odd.
    pub fn face_parity_audit(&self) -> Vec<usize> {
        self.faces
            .iter()
            .zip(&self.outer)
            .filter(|(_, &o)| !o)
            .map(|(w, _)| w.iter().filter(|&&(e, fwd)| self.edges[e].forward != fwd).count())
            .collect()
    }

    /// `V - E + F - components` for the embedding, 1 per component when planar.
    pub fn euler_defect(&self) -> i64 {
        let comps: std::collections::HashSet<usize> = self.components().into_iter().collect();
        self.num_vertices() as i64 - self.edges.len() as i64 + self.faces.len() as i64 - 2 * comps.len() as i64
    }

    /// Graphviz rendering with orientations.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph expanded {\n  node [shape=point];\n");
        for (i, p) in self.positions.iter().enumerate() {
            s.push_str(&format!("  v{i} [pos=\"{:.3},{:.3}!\"];\n", p[0] * 4.0, p[1] * 4.0));
        }
        for e in &self.edges {
            let (a, b) = if e.forward { (e.u, e.v) } else { (e.v, e.u) };
            let style = match e.kind {
                EdgeKind::Internal => "color=gray".to_string(),
                EdgeKind::External(i) => format!("label=\"b{i}\""),
            };
            s.push_str(&format!("  v{a} -> v{b} [{style}];\n"));
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matchings(vertices: &[usize], edges: &[(usize, usize)]) -> usize {
        let Some((&v, rest)) = vertices.split_first() else { return 1 };
        edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .filter(|u| rest.contains(u))
            .map(|u| {
                let left: Vec<usize> = rest.iter().copied().filter(|&x| x != u).collect();
                matchings(&left, edges)
            })
            .sum()
    }

    #[test]
    fn gadgets_accept_exactly_even_terminal_sets() {
        for d in 1..=4 {
            let (internal, edges) = gadget(d);
            let mut accepted = 0;
            for mask in 0u32..(1 << d) {
                let rest: Vec<usize> = (0..d + internal).filter(|&v| v >= d || mask & (1 << v) == 0).collect();
                let count = matchings(&rest, edges);
                if mask.count_ones() % 2 == 0 {
                    // Degree 1 can never use its bond.
                    let expect = if d == 1 && mask != 0 { 0 } else { 1 };
                    assert_eq!(count, expect, "degree {d}, mask {mask:b}");
                    accepted += count;
                } else {
                    assert_eq!(count, 0, "degree {d}, mask {mask:b}");
                }
            }
            if d == 4 {
                assert_eq!(accepted, 8);
            }
        }
    }

    fn square_lattice(rows: usize, cols: usize) -> SpinGraph {
        let mut bonds = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    bonds.push(Bond { a: i, b: i + 1, k: 0.3 });
                }
                if r + 1 < rows {
                    bonds.push(Bond { a: i, b: i + cols, k: 0.3 });
                }
            }
        }
        let positions = (0..rows * cols).map(|i| [(i % cols) as f64, -((i / cols) as f64)]).collect();
        SpinGraph { positions, bonds }
    }

    #[test]
    fn lattice_faces_are_clockwise_odd() {
        let g = ExpandedGraph::build(&square_lattice(4, 5)).unwrap();
        assert_eq!(g.euler_defect(), 0);
        let audit = g.face_parity_audit();
        assert!(!audit.is_empty());
        assert!(audit.iter().all(|c| c % 2 == 1));
    }

    #[test]
    fn dot_dump_lists_every_edge() {
        let g = ExpandedGraph::build(&square_lattice(2, 2)).unwrap();
        assert_eq!(g.to_dot().matches("->").count(), g.edges.len());
    }
}
