//! Ising partition functions as Pfaffians of the expanded graph.
//!
//! `Z = 2^N * prod_{finite} cosh K * prod_{infinite} 1/2 * |Pf(A)|`, where
//! `A` is the oriented adjacency with weight `tanh K` on bond edges (`sign K`
//! for infinite bonds, which then act as `(1 + s s') / 2`).

use super::graph::{EdgeKind, ExpandedGraph, SpinGraph};
use super::linalg::{log_det, log_pfaffian};
use crate::error::{Error, Result};
use crate::logweight::LogWeight;
use crate::model::{Bond, LatticeModelSpec, ModelKind};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::LN_2;

#[derive(Debug, Clone)]
pub struct FktEngine {
    pub graph: ExpandedGraph,
    pub spins: SpinGraph,
    matrix: DMatrix<f64>,
    log_prefactor: f64,
}

fn bond_weight(k: f64) -> (f64, f64) {
    // (edge weight, log of the per-bond prefactor)
    if k.is_infinite() {
        (k.signum(), -LN_2)
    } else {
        (k.tanh(), k.abs() + (-2.0 * k.abs()).exp().ln_1p() - LN_2)
    }
}

impl FktEngine {
    pub fn new(spins: SpinGraph) -> Result<Self> {
        for b in &spins.bonds {
            if b.k.is_nan() {
                return Err(Error::InvalidModel("coupling is NaN".into()));
            }
        }
        let graph = ExpandedGraph::build(&spins)?;
        let n = graph.num_vertices();
        let mut matrix = DMatrix::zeros(n, n);
        let mut log_prefactor = spins.positions.len() as f64 * LN_2;
        for e in &graph.edges {
            let w = match e.kind {
                EdgeKind::Internal => 1.0,
                EdgeKind::External(i) => bond_weight(spins.bonds[i].k).0,
            };
            let (a, b) = if e.forward { (e.u, e.v) } else { (e.v, e.u) };
            matrix[(a, b)] += w;
            matrix[(b, a)] -= w;
        }
        for b in &spins.bonds {
            log_prefactor += bond_weight(b.k).1;
        }
        Ok(FktEngine { graph, spins, matrix, log_prefactor })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn log_z(&self) -> LogWeight {
        let pf = log_pfaffian(&self.matrix);
        (pf.abs()) * LogWeight::from_log(self.log_prefactor)
    }

    /// Re-evaluator for changing the signs of the listed infinite bonds.
    pub fn boundary_updater(&self, bonds: &[usize]) -> Result<BoundaryUpdater> {
        BoundaryUpdater::new(self, bonds, true)
    }

    /// Same as [`FktEngine::boundary_updater`] but never takes the Schur route.
    pub fn boundary_updater_without_schur(&self, bonds: &[usize]) -> Result<BoundaryUpdater> {
        BoundaryUpdater::new(self, bonds, false)
    }
}

/// Which linear-algebra route a [`BoundaryUpdater`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRoute {
    /// `Pf(M) = Pf(A) Pf(D + B^T A^-1 B)` with the bulk block `A` inverted once.
    Schur,
    /// `|Pf(M0 + Delta)| = |Pf(M0)| sqrt|det(1 + Delta_DD (M0^-1)_DD)|`.
    DeterminantLemma,
}

/// Fast `Z` for new signs on a fixed set of infinite bonds: only the block on
/// their terminals changes.
#[derive(Debug, Clone)]
pub struct BoundaryUpdater {
    bonds: Vec<usize>,
    // Local (row, col) of each bond edge inside the D block, oriented.
    slots: Vec<(usize, usize)>,
    reference_signs: Vec<f64>,
    route: UpdateRoute,
    // Schur: D_fixed + B^T A^-1 B with the varying entries zeroed.
    schur_base: DMatrix<f64>,
    log_pf_bulk: LogWeight,
    // Lemma: (M0^-1)_DD.
    inverse_dd: DMatrix<f64>,
    log_pf_reference: LogWeight,
    log_prefactor: f64,
}

const CONDITION_FLOOR: f64 = 1e-10;

impl BoundaryUpdater {
    fn new(engine: &FktEngine, bonds: &[usize], allow_schur: bool) -> Result<Self> {
        let mut d_vertices: Vec<usize> = Vec::new();
        for &b in bonds {
            let bond = engine.spins.bonds.get(b).ok_or_else(|| Error::InvalidModel(format!("no bond {b}")))?;
            if !bond.k.is_infinite() {
                return Err(Error::InvalidModel(format!("bond {b} is not an infinite boundary bond")));
            }
            d_vertices.extend(engine.graph.bond_terminals[b]);
        }
        d_vertices.sort_unstable();
        d_vertices.dedup();
        let n = engine.graph.num_vertices();
        let local = |v: usize| d_vertices.binary_search(&v).expect("terminal in D block");
        let mut slots = Vec::new();
        let mut reference_signs = Vec::new();
        for &b in bonds {
            let e = engine.graph.edges.iter().find(|e| e.kind == EdgeKind::External(b)).expect("bond edge");
            let (x, y) = if e.forward { (e.u, e.v) } else { (e.v, e.u) };
            slots.push((local(x), local(y)));
            reference_signs.push(engine.spins.bonds[b].k.signum());
        }
        let bulk: Vec<usize> = (0..n).filter(|v| d_vertices.binary_search(v).is_err()).collect();
        let m = &engine.matrix;
        let a = m.select_rows(&bulk).select_columns(&bulk);
        let bmat = m.select_rows(&bulk).select_columns(&d_vertices);
        let mut dmat = m.select_rows(&d_vertices).select_columns(&d_vertices);
        for (&(x, y), &s) in slots.iter().zip(&reference_signs) {
            dmat[(x, y)] -= s;
            dmat[(y, x)] += s;
        }
        let log_pf_bulk = if bulk.is_empty() { LogWeight::ONE } else { log_pfaffian(&a) };
        let lu = a.clone().lu();
        let mut route = UpdateRoute::DeterminantLemma;
        let mut schur_base = DMatrix::zeros(0, 0);
        if allow_schur && !log_pf_bulk.is_zero() {
            if let Some(inv) = lu.try_inverse() {
                // Reject an ill-conditioned bulk block.
                let cond = a.norm() * inv.norm();
                if cond.is_finite() && 1.0 / cond > CONDITION_FLOOR {
                    schur_base = &dmat + bmat.transpose() * &inv * &bmat;
                    route = UpdateRoute::Schur;
                }
            }
        }
        let mut inverse_dd = DMatrix::zeros(0, 0);
        let mut log_pf_reference = LogWeight::ZERO;
        if route == UpdateRoute::DeterminantLemma {
            log_pf_reference = log_pfaffian(m);
            if log_pf_reference.is_zero() {
                return Err(Error::Numerical("reference Pfaffian vanishes".into()));
            }
            let lu = m.clone().lu();
            let mut cols = DMatrix::zeros(n, d_vertices.len());
            for (j, &v) in d_vertices.iter().enumerate() {
                let mut e = DVector::zeros(n);
                e[v] = 1.0;
                let x = lu.solve(&e).ok_or_else(|| Error::Numerical("singular reference matrix".into()))?;
                cols.set_column(j, &x);
            }
            inverse_dd = cols.select_rows(&d_vertices);
        }
        Ok(BoundaryUpdater {
            bonds: bonds.to_vec(),
            slots,
            reference_signs,
            route,
            schur_base,
            log_pf_bulk,
            inverse_dd,
            log_pf_reference,
            log_prefactor: engine.log_prefactor,
        })
    }

    pub fn route(&self) -> UpdateRoute {
        self.route
    }

    pub fn bonds(&self) -> &[usize] {
        &self.bonds
    }

    /// `Z` with bond `bonds[i]` set to `signs[i] * inf`.
    pub fn log_z(&self, signs: &[i8]) -> LogWeight {
        assert_eq!(signs.len(), self.bonds.len());
        match self.route {
            UpdateRoute::Schur => {
                let mut s = self.schur_base.clone();
                for (&(x, y), &sg) in self.slots.iter().zip(signs) {
                    s[(x, y)] += f64::from(sg);
                    s[(y, x)] -= f64::from(sg);
                }
                (self.log_pf_bulk * log_pfaffian(&s)).abs() * LogWeight::from_log(self.log_prefactor)
            }
            UpdateRoute::DeterminantLemma => {
                let d = self.inverse_dd.nrows();
                let mut delta = DMatrix::zeros(d, d);
                for ((&(x, y), &sg), &r) in self.slots.iter().zip(signs).zip(&self.reference_signs) {
                    let change = f64::from(sg) - r;
                    delta[(x, y)] += change;
                    delta[(y, x)] -= change;
                }
                let ratio = log_det(&(DMatrix::identity(d, d) + delta * &self.inverse_dd));
                let mag = ratio.abs().sqrt();
                self.log_pf_reference.abs() * mag * LogWeight::from_log(self.log_prefactor)
            }
        }
    }
}

/// Spin graph of a finite lattice with some spins fixed. Fixed spins are
/// tied together by infinite bonds along `links` (pairs of fixed sites that
/// must form a spanning tree of the fixed set); other bonds between two fixed
/// sites are dropped.
pub fn fixed_spin_graph(
    model: &LatticeModelSpec,
    fixed: &[Option<u8>],
    links: &[(usize, usize)],
) -> Result<(SpinGraph, Vec<usize>)> {
    if model.kind != ModelKind::Ising {
        return Err(Error::Unsupported("the Pfaffian engine handles the Ising model only".into()));
    }
    let cols = model.finite_cols()?;
    let n = model.rows * cols;
    if fixed.len() != n {
        return Err(Error::PartitionMismatch("fixed-spin list length differs from the site count".into()));
    }
    let positions = (0..n).map(|i| [(i % cols) as f64, -((i / cols) as f64)]).collect();
    let mut bonds: Vec<Bond> =
        model.bonds()?.into_iter().filter(|b| fixed[b.a].is_none() || fixed[b.b].is_none()).collect();
    let mut link_bonds = Vec::new();
    for &(a, b) in links {
        let (Some(sa), Some(sb)) = (fixed[a], fixed[b]) else {
            return Err(Error::InvalidModel(format!("link ({a}, {b}) joins a free site")));
        };
        link_bonds.push(bonds.len());
        let k = if sa == sb { f64::INFINITY } else { f64::NEG_INFINITY };
        bonds.push(Bond { a, b, k });
    }
    let nfixed = fixed.iter().filter(|f| f.is_some()).count();
    if nfixed > 0 && links.len() + 1 != nfixed {
        return Err(Error::InvalidModel("links must form a spanning tree of the fixed sites".into()));
    }
    Ok((SpinGraph { positions, bonds }, link_bonds))
}

/// Spanning tree of the fixed sites using lattice bonds only.
pub fn lattice_links(model: &LatticeModelSpec, fixed: &[Option<u8>]) -> Result<Vec<(usize, usize)>> {
    let n = fixed.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut links = Vec::new();
    for b in model.bonds()? {
        if fixed[b.a].is_some() && fixed[b.b].is_some() {
            let (x, y) = (find(&mut parent, b.a), find(&mut parent, b.b));
            if x != y {
                parent[x] = y;
                links.push((b.a, b.b));
            }
        }
    }
    let nfixed = fixed.iter().filter(|f| f.is_some()).count();
    if nfixed > 0 && links.len() + 1 != nfixed {
        return Err(Error::Unsupported("fixed sites are not connected by lattice bonds".into()));
    }
    Ok(links)
}

/// `Z` of an open Ising lattice with fixed spins (bonds between two fixed
/// spins omitted), by Pfaffian.
pub fn fixed_lattice_log_z(model: &LatticeModelSpec, fixed: &[Option<u8>]) -> Result<LogWeight> {
    let links = lattice_links(model, fixed)?;
    let (graph, _) = fixed_spin_graph(model, fixed, &links)?;
    let z = FktEngine::new(graph)?.log_z();
    // Both global orientations of the fixed set are summed.
    Ok(if fixed.iter().any(|f| f.is_some()) { z * LogWeight::from_f64(0.5) } else { z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brute::brute_force_log_z;
    use crate::model::{Columns, Couplings, VerticalBc};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ising(k: f64, rows: usize, cols: usize) -> LatticeModelSpec {
        LatticeModelSpec::ising(k, rows, Columns::Finite(cols), VerticalBc::Open)
    }

    #[test]
    fn two_by_two_matches_enumeration() {
        let m = ising(0.3, 2, 2);
        let free = vec![None; 4];
        let z = fixed_lattice_log_z(&m, &free).unwrap();
        let exact = brute_force_log_z(&m, &free).unwrap();
        assert!(z.relative_difference(exact) < 1e-11);
    }

    #[test]
    fn zero_coupling_counts_states() {
        let m = ising(0.0, 3, 3);
        let z = fixed_lattice_log_z(&m, &vec![None; 9]).unwrap();
        assert!((z.to_f64() - 512.0).abs() < 1e-9);
    }

    #[test]
    fn random_couplings_and_fixed_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let (rows, cols) = (rng.random_range(2..5), rng.random_range(2..5));
            let horizontal = (0..rows * (cols - 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let vertical = (0..(rows - 1) * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m =
                LatticeModelSpec { couplings: Couplings::PerBond { horizontal, vertical }, ..ising(0.0, rows, cols) };
            let fixed: Vec<Option<u8>> =
                (0..rows * cols).map(|i| if i % cols == 0 { Some(rng.random_range(0..2)) } else { None }).collect();
            let z = fixed_lattice_log_z(&m, &fixed).unwrap();
            let exact = brute_force_log_z(&m, &fixed).unwrap();
            assert!(z.relative_difference(exact) < 1e-11, "{rows}x{cols}");
        }
    }

    #[test]
    fn updater_matches_fresh_evaluation_both_routes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for k in [0.0, 0.45] {
            let m = ising(k, 4, 4);
            let ring: Vec<usize> = (0..16).filter(|&i| i / 4 == 0 || i / 4 == 3 || i % 4 == 0 || i % 4 == 3).collect();
            let mut fixed = vec![None; 16];
            for &i in &ring {
                fixed[i] = Some(0);
            }
            let links = lattice_links(&m, &fixed).unwrap();
            let (graph, link_bonds) = fixed_spin_graph(&m, &fixed, &links).unwrap();
            let engine = FktEngine::new(graph).unwrap();
            let updater = engine.boundary_updater(&link_bonds).unwrap();
            let lemma = engine.boundary_updater_without_schur(&link_bonds).unwrap();
            assert_eq!(lemma.route(), UpdateRoute::DeterminantLemma);
            let same = vec![1i8; link_bonds.len()];
            assert!(updater.log_z(&same).relative_difference(engine.log_z()) < 1e-14);
            assert!(lemma.log_z(&same).relative_difference(engine.log_z()) < 1e-14);
            for _ in 0..50 {
                for &i in &ring {
                    fixed[i] = Some(rng.random_range(0..2));
                }
                let (fresh_graph, _) = fixed_spin_graph(&m, &fixed, &links).unwrap();
                let fresh = FktEngine::new(fresh_graph).unwrap().log_z();
                let signs: Vec<i8> = links.iter().map(|&(a, b)| if fixed[a] == fixed[b] { 1 } else { -1 }).collect();
                assert!(updater.log_z(&signs).relative_difference(fresh) < 1e-9);
                assert!(lemma.log_z(&signs).relative_difference(fresh) < 1e-9);
            }
        }
    }

    #[test]
    fn schur_route_on_invertible_bulk() {
        // Some fixed-column choices leave an invertible bulk block.
        let m = ising(0.6, 4, 4);
        let mut found = false;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for col_sets in [vec![0usize], vec![0, 1], vec![1]] {
            let mut fixed = vec![None; 16];
            for i in 0..16 {
                if col_sets.contains(&(i % 4)) {
                    fixed[i] = Some(0);
                }
            }
            let links = lattice_links(&m, &fixed).unwrap();
            let (graph, link_bonds) = fixed_spin_graph(&m, &fixed, &links).unwrap();
            let engine = FktEngine::new(graph).unwrap();
            let updater = engine.boundary_updater(&link_bonds).unwrap();
            if updater.route() != UpdateRoute::Schur {
                continue;
            }
            found = true;
            for _ in 0..20 {
                for i in 0..16 {
                    if fixed[i].is_some() {
                        fixed[i] = Some(rng.random_range(0..2));
                    }
                }
                let exact = brute_force_log_z(&m, &fixed).unwrap();
                let signs: Vec<i8> = links.iter().map(|&(a, b)| if fixed[a] == fixed[b] { 1 } else { -1 }).collect();
                let z = updater.log_z(&signs) * LogWeight::from_f64(0.5);
                assert!(z.relative_difference(exact) < 1e-9);
            }
        }
        assert!(found, "no geometry exercised the Schur route");
    }
}
