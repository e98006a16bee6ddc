//! Fixed-boundary Ising partition functions from a Gaussian fermionic
//! circuit on the diagonals of the lattice.
//!
//! An `R x C` lattice uses `R + C` modes. Site `(r, c)` acts on modes
//! `k = c - r + R - 1` (left bond in, bottom bond out) and `k + 1` (top bond
//! in, right bond out). Bond occupations are the edges of the
//! high-temperature expansion, so `Z = 2^N prod(prefactors) <vac| U |vac>`.

pub mod fock;
pub mod ops;

use crate::error::{Error, Result};
use crate::logweight::LogWeight;
use crate::model::{LatticeModelSpec, ModelKind, VerticalBc};
use crate::pfaffian::{lattice_links, log_pfaffian};
use nalgebra::DMatrix;
use ops::{annihilator, creator, Operator};
use std::f64::consts::LN_2;

/// Pure fermionic Gaussian state: normalized correlations `C_ij = <c_i c_j>`
/// and the log of the norm of the unnormalized state.
#[derive(Debug, Clone)]
pub struct GaussianState {
    pub modes: usize,
    pub correlations: DMatrix<f64>,
    pub log_norm: LogWeight,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    /// Site gate on modes `(k, k + 1)`.
    Entangle { mode: usize },
    /// Bond weight `diag(1, tanh K)` on a mode; `cosh K` goes to the prefactor.
    BondStrength { mode: usize, coupling: f64 },
    /// Renormalized infinite bond `diag(1, sign)`; `1/2` goes to the prefactor.
    BoundaryFix { mode: usize, sign: i8 },
}

impl GateKind {
    pub fn operator(self, modes: usize) -> Operator {
        match self {
            GateKind::Entangle { mode } => Operator::entangle(modes, mode, mode + 1),
            GateKind::BondStrength { mode, coupling } => Operator::occupation_weight(modes, mode, coupling.tanh()),
            GateKind::BoundaryFix { mode, sign } => Operator::occupation_weight(modes, mode, f64::from(sign)),
        }
    }

    pub fn log_prefactor(self) -> f64 {
        match self {
            GateKind::Entangle { .. } => 0.0,
            GateKind::BondStrength { coupling, .. } => {
                let k = coupling.abs();
                k + (-2.0 * k).exp().ln_1p() - LN_2
            }
            GateKind::BoundaryFix { .. } => -LN_2,
        }
    }

    pub fn modes(self) -> Vec<usize> {
        match self {
            GateKind::Entangle { mode } => vec![mode, mode + 1],
            GateKind::BondStrength { mode, .. } | GateKind::BoundaryFix { mode, .. } => vec![mode],
        }
    }
}

/// Pfaffian of a small skew matrix given by its upper triangle accessor.
fn small_pfaffian(size: usize, entry: &dyn Fn(usize, usize) -> f64) -> f64 {
    fn rec(idx: &mut Vec<usize>, entry: &dyn Fn(usize, usize) -> f64) -> f64 {
        if idx.is_empty() {
            return 1.0;
        }
        let first = idx.remove(0);
        let mut total = 0.0;
        for pos in 0..idx.len() {
            let partner = idx.remove(pos);
            let v = entry(first, partner);
            if v != 0.0 {
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * v * rec(idx, entry);
            }
            idx.insert(pos, partner);
        }
        idx.insert(0, first);
        total
    }
    if size % 2 == 1 {
        return 0.0;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    rec(&mut idx, entry)
}

impl GaussianState {
    pub fn vacuum(modes: usize) -> Self {
        let mut correlations = DMatrix::zeros(2 * modes, 2 * modes);
        for k in 0..modes {
            correlations[(annihilator(modes, k), creator(modes, k))] = 1.0;
        }
        GaussianState { modes, correlations, log_norm: LogWeight::ONE }
    }

    pub fn is_annihilated(&self) -> bool {
        self.log_norm.is_zero()
    }

    /// `<c_{i_1} ... c_{i_m}>` by Wick's theorem.
    pub fn expectation(&self, ops: &[usize]) -> f64 {
        let c = &self.correlations;
        if ops.len() <= 8 {
            return small_pfaffian(ops.len(), &|x, y| c[(ops[x], ops[y])]);
        }
        if ops.len() % 2 == 1 {
            return 0.0;
        }
        let m = ops.len();
        let mut mat = DMatrix::zeros(m, m);
        for x in 0..m {
            for y in x + 1..m {
                mat[(x, y)] = c[(ops[x], ops[y])];
                mat[(y, x)] = -c[(ops[x], ops[y])];
            }
        }
        log_pfaffian(&mat).to_f64()
    }

    /// `O|psi>` renormalized; the squared-norm ratio `<O^+ O>` is folded into `log_norm`.
    pub fn apply(&mut self, op: &Operator) {
        if self.is_annihilated() {
            return;
        }
        let dag = op.dagger();
        let pair_ops =
            |l: &[usize], mid: &[usize], r: &[usize]| -> Vec<usize> { l.iter().chain(mid).chain(r).copied().collect() };
        let mut norm2 = 0.0;
        for t1 in &dag.terms {
            for t2 in &op.terms {
                norm2 += t1.coefficient * t2.coefficient * self.expectation(&pair_ops(&t1.ops, &[], &t2.ops));
            }
        }
        if norm2 <= 1e-300 {
            self.log_norm = LogWeight::ZERO;
            return;
        }
        let dim = 2 * self.modes;
        let mut next = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = 0.0;
                for t1 in &dag.terms {
                    for t2 in &op.terms {
                        acc += t1.coefficient * t2.coefficient * self.expectation(&pair_ops(&t1.ops, &[i, j], &t2.ops));
                    }
                }
                next[(i, j)] = acc / norm2;
            }
        }
        self.correlations = next;
        self.log_norm = self.log_norm * LogWeight::from_log(0.5 * norm2.ln());
    }

    pub fn apply_gate(&mut self, gate: GateKind) {
        self.apply(&gate.operator(self.modes));
    }

    /// `|<vac|psi>|^2` for the normalized state, as `<prod_k a_k a_k^+>`.
    pub fn vacuum_probability(&self) -> f64 {
        let ops: Vec<usize> =
            (0..self.modes).flat_map(|k| [annihilator(self.modes, k), creator(self.modes, k)]).collect();
        self.expectation(&ops)
    }

    /// Same quantity from the particle-hole block only: `sqrt det(1 - <a^+ a>)`.
    pub fn vacuum_probability_from_occupations(&self) -> f64 {
        let n = self.modes;
        let occ = DMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            delta - self.correlations[(creator(n, i), annihilator(n, j))]
        });
        occ.determinant().abs().sqrt()
    }
}

/// Gate sequence and prefactor for an open lattice with per-bond couplings
/// (infinite couplings become boundary-fix gates).
pub fn lattice_circuit(model: &LatticeModelSpec) -> Result<(usize, Vec<GateKind>, f64)> {
    if model.kind != ModelKind::Ising {
        return Err(Error::Unsupported("the fermionic engine handles the Ising model only".into()));
    }
    if model.vertical_bc != VerticalBc::Open {
        return Err(Error::Unsupported("the fermionic engine needs open boundaries".into()));
    }
    let cols = model.finite_cols()?;
    let rows = model.rows;
    let modes = rows + cols;
    let bonds = model.bonds()?;
    let coupling = |a: usize, b: usize| bonds.iter().find(|x| x.a == a && x.b == b).map(|x| x.k);
    let mut gates = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let k = c + rows - 1 - r;
            let site = r * cols + c;
            gates.push(GateKind::Entangle { mode: k });
            if c + 1 < cols {
                gates.push(bond_gate(k + 1, coupling(site, site + 1).expect("horizontal bond")));
            }
            if r + 1 < rows {
                gates.push(bond_gate(k, coupling(site, site + cols).expect("vertical bond")));
            }
        }
    }
    let log_prefactor = (rows * cols) as f64 * LN_2 + gates.iter().map(|g| g.log_prefactor()).sum::<f64>();
    Ok((modes, gates, log_prefactor))
}

fn bond_gate(mode: usize, k: f64) -> GateKind {
    if k.is_infinite() {
        GateKind::BoundaryFix { mode, sign: if k > 0.0 { 1 } else { -1 } }
    } else {
        GateKind::BondStrength { mode, coupling: k }
    }
}

/// `<vac| U |vac>` folded with the prefactor, for a lattice whose couplings
/// already encode any boundary constraints.
pub fn circuit_log_z(model: &LatticeModelSpec) -> Result<LogWeight> {
    let (modes, gates, log_prefactor) = lattice_circuit(model)?;
    let mut state = GaussianState::vacuum(modes);
    for g in gates {
        state.apply_gate(g);
        if state.is_annihilated() {
            return Ok(LogWeight::ZERO);
        }
    }
    let p = state.vacuum_probability();
    if p <= 0.0 {
        return Ok(LogWeight::ZERO);
    }
    Ok(state.log_norm * LogWeight::from_log(0.5 * p.ln() + log_prefactor))
}

/// Lattice couplings with fixed spins encoded: tree links between fixed
/// sites become `+-inf`, other fixed-fixed bonds become 0.
pub fn encode_fixed(model: &LatticeModelSpec, fixed: &[Option<u8>]) -> Result<LatticeModelSpec> {
    let cols = model.finite_cols()?;
    if fixed.len() != model.rows * cols {
        return Err(Error::PartitionMismatch("fixed-spin list length differs from the site count".into()));
    }
    let links = lattice_links(model, fixed)?;
    let mut horizontal = Vec::new();
    let mut vertical = Vec::new();
    for b in model.bonds()? {
        let k = match (fixed[b.a], fixed[b.b]) {
            (Some(x), Some(y)) if links.contains(&(b.a, b.b)) => {
                if x == y {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
            (Some(_), Some(_)) => 0.0,
            _ => b.k,
        };
        if b.b == b.a + 1 && b.a / cols == b.b / cols {
            horizontal.push(k);
        } else {
            vertical.push(k);
        }
    }
    Ok(LatticeModelSpec { couplings: crate::model::Couplings::PerBond { horizontal, vertical }, ..model.clone() })
}

/// `Z` of an open Ising lattice with the given spins fixed (global-flip
/// factor 1/2 applied when any spin is fixed).
pub fn ising_partition(model: &LatticeModelSpec, fixed: &[Option<u8>]) -> Result<LogWeight> {
    let encoded = encode_fixed(model, fixed)?;
    let z = circuit_log_z(&encoded)?;
    Ok(if fixed.iter().any(|f| f.is_some()) { z * LogWeight::from_f64(0.5) } else { z })
}

#[cfg(test)]
mod tests {
    use super::fock::FockState;
    use super::*;
    use crate::brute::brute_force_log_z;
    use crate::model::{Columns, Couplings};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_lattice(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> LatticeModelSpec {
        let horizontal = (0..rows * (cols - 1)).map(|_| rng.random_range(-1.2..1.2)).collect();
        let vertical = (0..(rows - 1) * cols).map(|_| rng.random_range(-1.2..1.2)).collect();
        LatticeModelSpec {
            couplings: Couplings::PerBond { horizontal, vertical },
            ..LatticeModelSpec::ising(0.0, rows, Columns::Finite(cols), VerticalBc::Open)
        }
    }

    #[test]
    fn entangle_is_all_ones_per_parity_sector() {
        let op = Operator::entangle(2, 0, 1);
        for input in 0..4usize {
            let mut s = FockState::vacuum(2);
            s.amplitudes = vec![0.0; 4];
            s.amplitudes[input] = 1.0;
            let out = s.apply(&op);
            for (o, &amp) in out.amplitudes.iter().enumerate() {
                let same = (o.count_ones() + input.count_ones()) % 2 == 0;
                assert_eq!(amp, if same { 1.0 } else { 0.0 }, "in {input} out {o}");
            }
        }
    }

    #[test]
    fn gaussian_state_tracks_dense_fock_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = random_lattice(&mut rng, 3, 4);
        let (modes, gates, _) = lattice_circuit(&model).unwrap();
        let mut gs = GaussianState::vacuum(modes);
        let mut dense = FockState::vacuum(modes);
        for g in gates {
            gs.apply_gate(g);
            dense = dense.apply(&g.operator(modes));
            assert!((gs.log_norm.to_f64() - dense.norm()).abs() < 1e-10 * dense.norm());
            for i in 0..2 * modes {
                for j in 0..2 * modes {
                    assert!((gs.correlations[(i, j)] - dense.correlation(i, j)).abs() < 1e-10);
                }
            }
        }
        let overlap = dense.amplitudes[0] / dense.norm();
        assert!((gs.vacuum_probability() - overlap * overlap).abs() < 1e-10);
        assert!((gs.vacuum_probability() - gs.vacuum_probability_from_occupations()).abs() < 1e-10);
    }

    #[test]
    fn free_lattices_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let (rows, cols) = (rng.random_range(1..5), rng.random_range(1..5));
            let model = random_lattice(&mut rng, rows, cols);
            let free = vec![None; rows * cols];
            let z = ising_partition(&model, &free).unwrap();
            let exact = brute_force_log_z(&model, &free).unwrap();
            assert!((z.ln() - exact.ln()).abs() < 1e-9, "{rows}x{cols}");
        }
    }

    #[test]
    fn fixed_boundaries_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (rows, cols) = (rng.random_range(2..5), rng.random_range(2..5));
            let model = random_lattice(&mut rng, rows, cols);
            let ring = rng.random_bool(0.5);
            let fixed: Vec<Option<u8>> = (0..rows * cols)
                .map(|i| {
                    let (r, c) = (i / cols, i % cols);
                    let on = if ring { r == 0 || c == 0 || r + 1 == rows || c + 1 == cols } else { c == 0 };
                    on.then(|| rng.random_range(0..2))
                })
                .collect();
            let z = ising_partition(&model, &fixed).unwrap();
            let exact = brute_force_log_z(&model, &fixed).unwrap();
            assert!((z.ln() - exact.ln()).abs() < 1e-9, "{rows}x{cols} ring={ring}");
        }
    }

    #[test]
    fn commuting_gates_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = random_lattice(&mut rng, 3, 3);
        let (modes, gates, _) = lattice_circuit(&model).unwrap();
        let mut base = GaussianState::vacuum(modes);
        for g in &gates[..4] {
            base.apply_gate(*g);
        }
        let g1 = GateKind::Entangle { mode: 0 };
        let g2 = GateKind::BondStrength { mode: 4, coupling: 0.7 };
        let (mut x, mut y) = (base.clone(), base);
        x.apply_gate(g1);
        x.apply_gate(g2);
        y.apply_gate(g2);
        y.apply_gate(g1);
        assert!((&x.correlations - &y.correlations).amax() < 1e-12);
        assert!((x.log_norm.ln() - y.log_norm.ln()).abs() < 1e-12);
    }

    #[test]
    fn boundary_inversion_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = random_lattice(&mut rng, 3, 4);
        let fixed: Vec<Option<u8>> = (0..12).map(|i| (i % 4 == 0).then(|| rng.random_range(0..2))).collect();
        let flipped: Vec<Option<u8>> = fixed.iter().map(|f| f.map(|s| 1 - s)).collect();
        let a = ising_partition(&model, &fixed).unwrap();
        let b = ising_partition(&model, &flipped).unwrap();
        assert!((a.ln() - b.ln()).abs() < 1e-12);
    }

    #[test]
    fn gauge_flip_to_all_up_boundary() {
        // Flipping fixed down spins and the couplings touching them leaves Z unchanged.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let model = random_lattice(&mut rng, 4, 4);
            let fixed: Vec<Option<u8>> = (0..16).map(|i| (i % 4 == 0).then(|| rng.random_range(0..2))).collect();
            let Couplings::PerBond { horizontal, vertical } = &model.couplings else { unreachable!() };
            let down = |i: usize| fixed[i] == Some(1);
            let horizontal: Vec<f64> = (0..12)
                .map(|idx| {
                    let (r, c) = (idx / 3, idx % 3);
                    let (a, b) = (r * 4 + c, r * 4 + c + 1);
                    if down(a) ^ down(b) {
                        -horizontal[idx]
                    } else {
                        horizontal[idx]
                    }
                })
                .collect();
            let vertical: Vec<f64> =
                (0..12).map(|idx| if down(idx) ^ down(idx + 4) { -vertical[idx] } else { vertical[idx] }).collect();
            let up_model = LatticeModelSpec { couplings: Couplings::PerBond { horizontal, vertical }, ..model.clone() };
            let all_up: Vec<Option<u8>> = fixed.iter().map(|f| f.map(|_| 0)).collect();
            let a = ising_partition(&model, &fixed).unwrap();
            let b = ising_partition(&up_model, &all_up).unwrap();
            assert!((a.ln() - b.ln()).abs() < 1e-9);
        }
    }
}
