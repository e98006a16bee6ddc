//! Mutual information between a rectangle and its surrounding lattice from
//! four families of fixed-border partition functions:
//!
//! * `Z_A(alpha)`: region A with its border `alpha` fixed,
//! * `Z_B(beta)`: region B with its border `beta` fixed,
//! * `Z_Bt(alpha)`: region B plus `alpha`, with `alpha` fixed,
//! * `Z_At(beta)`: region A plus `beta`, with `beta` fixed.
//!
//! `p(alpha, beta) = q_a q_ab q_b Z_A Z_B / Z` and the estimator is
//! `log2(Z q_ab / (Z_Bt(alpha) Z_At(beta)))`.

use super::fkt::{BoundaryUpdater, FktEngine};
use super::graph::SpinGraph;
use crate::error::{Error, Result};
use crate::model::{Bipartition, Bond, LatticeModelSpec, ModelKind, VerticalBc};
use crate::sampler::{estimate, ChainTarget, McEstimate, Schedule};
use rayon::prelude::*;
use std::f64::consts::LN_2;

/// `ln Z` of a lattice region as a function of its fixed border spins.
#[derive(Debug, Clone)]
pub struct RegionPartition {
    updater: Option<BoundaryUpdater>,
    /// Infinite links as index pairs into the border list.
    links: Vec<(usize, usize)>,
    /// `ln Z` when it does not depend on the border.
    constant: f64,
}

impl RegionPartition {
    /// `include` selects the region's sites, `border` lists its fixed sites
    /// and `links` (site pairs) must form a spanning tree of `border`.
    pub fn build(
        model: &LatticeModelSpec,
        include: &[bool],
        border: &[usize],
        links: &[(usize, usize)],
    ) -> Result<Self> {
        let cols = model.finite_cols()?;
        let mut is_fixed = vec![false; include.len()];
        for &b in border {
            is_fixed[b] = true;
        }
        let has_free = include.iter().zip(&is_fixed).any(|(&inc, &fx)| inc && !fx);
        let position_in_border =
            |site: usize| border.iter().position(|&b| b == site).expect("link endpoint on the border");
        let link_idx: Vec<(usize, usize)> =
            links.iter().map(|&(a, b)| (position_in_border(a), position_in_border(b))).collect();
        if !has_free {
            return Ok(RegionPartition { updater: None, links: link_idx, constant: 0.0 });
        }
        let local: Vec<Option<usize>> = {
            let mut next = 0;
            include
                .iter()
                .map(|&inc| {
                    inc.then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect()
        };
        let positions =
            (0..include.len()).filter(|&i| include[i]).map(|i| [(i % cols) as f64, -((i / cols) as f64)]).collect();
        let mut bonds: Vec<Bond> = model
            .bonds()?
            .into_iter()
            .filter(|b| include[b.a] && include[b.b] && !(is_fixed[b.a] && is_fixed[b.b]))
            .map(|b| Bond { a: local[b.a].unwrap(), b: local[b.b].unwrap(), k: b.k })
            .collect();
        let first_link = bonds.len();
        for &(a, b) in links {
            bonds.push(Bond { a: local[a].unwrap(), b: local[b].unwrap(), k: f64::INFINITY });
        }
        let engine = FktEngine::new(SpinGraph { positions, bonds })?;
        if links.is_empty() {
            return Ok(RegionPartition { updater: None, links: link_idx, constant: engine.log_z().ln() - LN_2 });
        }
        let link_bonds: Vec<usize> = (first_link..first_link + links.len()).collect();
        let updater = engine.boundary_updater(&link_bonds)?;
        Ok(RegionPartition { updater: Some(updater), links: link_idx, constant: 0.0 })
    }

    /// `ln Z` for the border states (in border-list order).
    pub fn log_z(&self, states: &[u8]) -> f64 {
        match &self.updater {
            None => self.constant,
            Some(u) => {
                let signs: Vec<i8> =
                    self.links.iter().map(|&(a, b)| if states[a] == states[b] { 1 } else { -1 }).collect();
                // Both global orientations of the border are summed.
                u.log_z(&signs).ln() - LN_2
            }
        }
    }
}

/// Precomputed partial partition functions of a nested geometry.
#[derive(Debug, Clone)]
pub struct NestedSystem {
    pub model: LatticeModelSpec,
    pub part: Bipartition,
    z_a: RegionPartition,
    z_b: RegionPartition,
    z_b_tilde: RegionPartition,
    z_a_tilde: RegionPartition,
    pub log_z: f64,
    /// `(i, j, -E table)` with `i`, `j` indices into `alpha ++ beta`.
    alpha_bonds: Vec<(usize, usize, [f64; 4])>,
    beta_bonds: Vec<(usize, usize, [f64; 4])>,
    cross_bonds: Vec<(usize, usize, [f64; 4])>,
}

fn union_find_root(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Spanning tree of `sites` using lattice bonds first, then diagonal chords
/// across cells that contain a site of `hole`.
fn border_links(model: &LatticeModelSpec, sites: &[usize], hole: &[bool]) -> Result<Vec<(usize, usize)>> {
    let cols = model.finite_cols()?;
    let n = hole.len();
    let mut member = vec![false; n];
    for &s in sites {
        member[s] = true;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut links = Vec::new();
    let mut try_link = |a: usize, b: usize, links: &mut Vec<(usize, usize)>| {
        let (x, y) = (union_find_root(&mut parent, a), union_find_root(&mut parent, b));
        if x != y {
            parent[x] = y;
            links.push((a, b));
        }
    };
    for b in model.bonds()? {
        if member[b.a] && member[b.b] {
            try_link(b.a, b.b, &mut links);
        }
    }
    let rc = |i: usize| ((i / cols) as i64, (i % cols) as i64);
    for &a in sites {
        for &b in sites {
            let ((ra, ca), (rb, cb)) = (rc(a), rc(b));
            if a < b && (ra - rb).abs() == 1 && (ca - cb).abs() == 1 {
                let corners = [ra as usize * cols + cb as usize, rb as usize * cols + ca as usize];
                if corners.iter().any(|&c| hole[c]) {
                    try_link(a, b, &mut links);
                }
            }
        }
    }
    if links.len() + 1 != sites.len() {
        return Err(Error::Unsupported("border sites cannot be tied into one planar tree".into()));
    }
    Ok(links)
}

impl NestedSystem {
    /// Rectangle A of `inner_rows x inner_cols` at `(top, left)`, strictly
    /// inside an open lattice.
    pub fn new(
        model: &LatticeModelSpec,
        top: usize,
        left: usize,
        inner_rows: usize,
        inner_cols: usize,
    ) -> Result<Self> {
        if model.kind != ModelKind::Ising {
            return Err(Error::Unsupported("the Pfaffian engine handles the Ising model only".into()));
        }
        if model.vertical_bc != VerticalBc::Open {
            return Err(Error::Unsupported("nested geometry needs an open planar lattice".into()));
        }
        let cols = model.finite_cols()?;
        if top == 0 || left == 0 || top + inner_rows >= model.rows || left + inner_cols >= cols {
            return Err(Error::PartitionMismatch("inner region must lie strictly inside the lattice".into()));
        }
        let part = Bipartition::nested(model, top, left, inner_rows, inner_cols)?;
        let n = model.num_sites()?;
        let mut in_a = vec![false; n];
        for s in part.sites_a() {
            in_a[s] = true;
        }
        let in_b: Vec<bool> = in_a.iter().map(|x| !x).collect();
        let mut is_alpha = vec![false; n];
        let mut is_beta = vec![false; n];
        part.border_a.iter().for_each(|&s| is_alpha[s] = true);
        part.border_b.iter().for_each(|&s| is_beta[s] = true);
        let alpha_links = border_links(model, &part.border_a, &in_b)?;
        let beta_links = border_links(model, &part.border_b, &in_a)?;
        let a_plus_beta: Vec<bool> = (0..n).map(|i| in_a[i] || is_beta[i]).collect();
        let b_plus_alpha: Vec<bool> = (0..n).map(|i| in_b[i] || is_alpha[i]).collect();
        let z_a = RegionPartition::build(model, &in_a, &part.border_a, &alpha_links)?;
        let z_b = RegionPartition::build(model, &in_b, &part.border_b, &beta_links)?;
        let z_b_tilde = RegionPartition::build(model, &b_plus_alpha, &part.border_a, &alpha_links)?;
        let z_a_tilde = RegionPartition::build(model, &a_plus_beta, &part.border_b, &beta_links)?;
        let log_z = FktEngine::new(SpinGraph {
            positions: (0..n).map(|i| [(i % cols) as f64, -((i / cols) as f64)]).collect(),
            bonds: model.bonds()?,
        })?
        .log_z()
        .ln();
        let border: Vec<usize> = part.border_a.iter().chain(&part.border_b).copied().collect();
        let index_of = |s: usize| border.iter().position(|&b| b == s);
        let (mut alpha_bonds, mut beta_bonds, mut cross_bonds) = (Vec::new(), Vec::new(), Vec::new());
        for b in model.bonds()? {
            let (Some(i), Some(j)) = (index_of(b.a), index_of(b.b)) else { continue };
            let mut table = [0.0; 4];
            for (slot, t) in table.iter_mut().enumerate() {
                *t = -model.kind.pair_energy(2, b.k, slot >> 1, slot & 1)?;
            }
            let na = part.border_a.len();
            match (i < na, j < na) {
                (true, true) => alpha_bonds.push((i, j, table)),
                (false, false) => beta_bonds.push((i, j, table)),
                (true, false) => cross_bonds.push((i, j, table)),
                (false, true) => cross_bonds.push((j, i, [table[0], table[2], table[1], table[3]])),
            }
        }
        Ok(NestedSystem {
            model: model.clone(),
            part,
            z_a,
            z_b,
            z_b_tilde,
            z_a_tilde,
            log_z,
            alpha_bonds,
            beta_bonds,
            cross_bonds,
        })
    }

    pub fn alpha_len(&self) -> usize {
        self.part.border_a.len()
    }

    pub fn beta_len(&self) -> usize {
        self.part.border_b.len()
    }

    fn bond_sum(bonds: &[(usize, usize, [f64; 4])], config: &[u8]) -> f64 {
        bonds.iter().map(|&(i, j, t)| t[(config[i] as usize) << 1 | config[j] as usize]).sum()
    }

    /// `ln q_a + ln Z_A(alpha)` for the `alpha ++ beta` configuration.
    pub fn alpha_side(&self, config: &[u8]) -> f64 {
        Self::bond_sum(&self.alpha_bonds, config) + self.z_a.log_z(&config[..self.alpha_len()])
    }

    /// `ln q_b + ln Z_B(beta)`.
    pub fn beta_side(&self, config: &[u8]) -> f64 {
        Self::bond_sum(&self.beta_bonds, config) + self.z_b.log_z(&config[self.alpha_len()..])
    }

    pub fn log_between(&self, config: &[u8]) -> f64 {
        Self::bond_sum(&self.cross_bonds, config)
    }

    pub fn log_z_b_tilde(&self, config: &[u8]) -> f64 {
        self.z_b_tilde.log_z(&config[..self.alpha_len()])
    }

    pub fn log_z_a_tilde(&self, config: &[u8]) -> f64 {
        self.z_a_tilde.log_z(&config[self.alpha_len()..])
    }

    /// `ln p(alpha, beta) + ln Z`.
    pub fn log_weight(&self, config: &[u8]) -> f64 {
        self.alpha_side(config) + self.log_between(config) + self.beta_side(config)
    }

    /// Estimator `log2(Z q_ab / (Z_Bt Z_At))`.
    pub fn log_term(&self, config: &[u8]) -> f64 {
        (self.log_z + self.log_between(config) - self.log_z_b_tilde(config) - self.log_z_a_tilde(config)) / LN_2
    }

    /// Exact sum over all border configurations; also returns `ln sum w`,
    /// which must equal `ln Z`.
    pub fn exact_mi(&self) -> Result<(f64, f64)> {
        let (na, nb) = (self.alpha_len(), self.beta_len());
        if na + nb > 26 {
            return Err(Error::TooLarge { states: 2f64.powi((na + nb) as i32), bound: 2f64.powi(26) });
        }
        let fill = |cfg: &mut [u8], bits: usize, offset: usize, len: usize| {
            for i in 0..len {
                cfg[offset + i] = ((bits >> (len - 1 - i)) & 1) as u8;
            }
        };
        let mut cfg = vec![0u8; na + nb];
        let mut alpha_table = Vec::with_capacity(1 << na);
        for a in 0..1usize << na {
            fill(&mut cfg, a, 0, na);
            alpha_table.push((self.alpha_side(&cfg), self.log_z_b_tilde(&cfg)));
        }
        let mut beta_table = Vec::with_capacity(1 << nb);
        for b in 0..1usize << nb {
            fill(&mut cfg, b, na, nb);
            beta_table.push((self.beta_side(&cfg), self.log_z_a_tilde(&cfg)));
        }
        let (sum_w, sum_wf) = (0..1usize << na)
            .into_par_iter()
            .map(|a| {
                let mut cfg = vec![0u8; na + nb];
                fill(&mut cfg, a, 0, na);
                let (mut w_acc, mut wf_acc) = (0.0, 0.0);
                for (b, &(beta_side, z_at)) in beta_table.iter().enumerate() {
                    fill(&mut cfg, b, na, nb);
                    let between = self.log_between(&cfg);
                    let w = (alpha_table[a].0 + between + beta_side - self.log_z).exp();
                    w_acc += w;
                    wf_acc += w * (self.log_z + between - alpha_table[a].1 - z_at);
                }
                (w_acc, wf_acc)
            })
            .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
        Ok((sum_wf / sum_w / LN_2, sum_w.ln() + self.log_z))
    }
}

/// Metropolis target over `alpha ++ beta` for a nested system.
#[derive(Debug, Clone)]
pub struct NestedTarget<'a> {
    system: &'a NestedSystem,
    config: Vec<u8>,
    sides: [f64; 2],
    pending: Option<(usize, u8, f64)>,
}

impl<'a> NestedTarget<'a> {
    pub fn new(system: &'a NestedSystem) -> Self {
        NestedTarget { system, config: vec![0; system.alpha_len() + system.beta_len()], sides: [0.0; 2], pending: None }
    }
}

impl ChainTarget for NestedTarget<'_> {
    fn num_sites(&self) -> usize {
        self.config.len()
    }

    fn q(&self) -> usize {
        2
    }

    fn config(&self) -> &[u8] {
        &self.config
    }

    fn reset(&mut self, config: &[u8]) -> Result<f64> {
        self.config.copy_from_slice(config);
        self.sides = [self.system.alpha_side(config), self.system.beta_side(config)];
        self.pending = None;
        Ok(self.sides[0] + self.system.log_between(config) + self.sides[1])
    }

    fn propose(&mut self, site: usize, state: u8) -> Result<f64> {
        let old = self.config[site];
        self.config[site] = state;
        let side = usize::from(site >= self.system.alpha_len());
        let value = if side == 0 { self.system.alpha_side(&self.config) } else { self.system.beta_side(&self.config) };
        let mut sides = self.sides;
        sides[side] = value;
        let lw = sides[0] + self.system.log_between(&self.config) + sides[1];
        self.config[site] = old;
        self.pending = Some((site, state, value));
        Ok(lw)
    }

    fn accept(&mut self) {
        if let Some((site, state, value)) = self.pending.take() {
            self.config[site] = state;
            self.sides[usize::from(site >= self.system.alpha_len())] = value;
        }
    }

    fn observable(&mut self) -> Result<f64> {
        Ok(self.system.log_term(&self.config))
    }

    fn cache_drift(&mut self) -> Result<f64> {
        let fresh = [self.system.alpha_side(&self.config), self.system.beta_side(&self.config)];
        Ok(fresh.iter().zip(&self.sides).map(|(a, b)| (a - b).abs() / a.abs().max(1.0)).fold(0.0, f64::max))
    }
}

/// Nested mutual information: exact sum when `2^(|alpha| + |beta|)` is within
/// `schedule.exact_bound`, Metropolis sampling otherwise.
pub fn mi_nested(
    model: &LatticeModelSpec,
    top: usize,
    left: usize,
    inner_rows: usize,
    inner_cols: usize,
    schedule: &Schedule,
) -> Result<McEstimate> {
    let system = NestedSystem::new(model, top, left, inner_rows, inner_cols)?;
    let states = 2f64.powi((system.alpha_len() + system.beta_len()) as i32);
    if states <= schedule.exact_bound {
        let (mean, _) = system.exact_mi()?;
        return Ok(McEstimate {
            mean,
            std_error: 0.0,
            n_samples: states as usize,
            n_equilibration: 0,
            bin_curve: Vec::new(),
            bin_size: 1,
            plateau: true,
            acceptance: 1.0,
            exact: true,
        });
    }
    estimate(|| Ok(NestedTarget::new(&system)), schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brute::brute_force_mi;
    use crate::model::{Columns, Couplings};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(k: f64, rows: usize, cols: usize) -> LatticeModelSpec {
        LatticeModelSpec::ising(k, rows, Columns::Finite(cols), VerticalBc::Open)
    }

    #[test]
    fn exact_sum_matches_enumeration() {
        for (model, top, left, ir, ic) in [
            (square(0.3, 4, 4), 1, 1, 2, 2),
            (square(0.8, 3, 3), 1, 1, 1, 1),
            (square(0.44, 4, 5), 1, 1, 2, 3),
            (square(0.6, 5, 4), 1, 1, 3, 1),
        ] {
            let system = NestedSystem::new(&model, top, left, ir, ic).unwrap();
            let (mi, log_sum) = system.exact_mi().unwrap();
            assert!((log_sum - system.log_z).abs() < 1e-9);
            let brute = brute_force_mi(&model, &system.part).unwrap();
            assert!((mi - brute).abs() < 1e-9, "{mi} vs {brute}");
        }
    }

    #[test]
    fn random_couplings_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (rows, cols) = (4, 5);
        let model = LatticeModelSpec {
            couplings: Couplings::PerBond {
                horizontal: (0..rows * (cols - 1)).map(|_| rng.random_range(-1.0..1.0)).collect(),
                vertical: (0..(rows - 1) * cols).map(|_| rng.random_range(-1.0..1.0)).collect(),
            },
            ..square(0.0, rows, cols)
        };
        let system = NestedSystem::new(&model, 1, 2, 2, 2).unwrap();
        let (mi, _) = system.exact_mi().unwrap();
        assert!((mi - brute_force_mi(&model, &system.part).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn decoupled_lattice_has_no_information() {
        let schedule = Schedule::default();
        let est = mi_nested(&square(0.0, 5, 5), 1, 1, 3, 3, &schedule).unwrap();
        assert!(est.exact);
        assert!(est.mean.abs() < 1e-12);
    }

    #[test]
    fn sampler_agrees_with_exact_sum() {
        let model = square(0.1, 6, 6);
        let system = NestedSystem::new(&model, 2, 2, 2, 2).unwrap();
        let (exact, _) = system.exact_mi().unwrap();
        let schedule = Schedule { sweeps: 20_000, chains: 4, seed: 3, exact_bound: 0.0, ..Schedule::default() };
        let est = mi_nested(&model, 2, 2, 2, 2, &schedule).unwrap();
        assert!(!est.exact);
        assert!((est.mean - exact).abs() < 3.0 * est.std_error, "{} +- {} vs {exact}", est.mean, est.std_error);
    }

    #[test]
    fn touching_the_edge_is_rejected() {
        assert!(NestedSystem::new(&square(0.3, 4, 4), 0, 1, 2, 2).is_err());
    }
}
