//! Swendsen-Wang sampling of the Ising model on a cylinder (periodic rows,
//! open columns) with cluster statistics across a vertical cut.

use crate::error::{Error, Result};
use crate::sampler::{analyze, McEstimate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut x, mut y) = (self.find(a), self.find(b));
        if x == y {
            return false;
        }
        if self.size[x] < self.size[y] {
            std::mem::swap(&mut x, &mut y);
        }
        self.parent[y] = x;
        self.size[x] += self.size[y];
        true
    }
}

/// Ising spins (`+1` / `-1`) on `rows x cols`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinField {
    pub rows: usize,
    pub cols: usize,
    pub periodic_rows: bool,
    pub spins: Vec<i8>,
}

impl SpinField {
    pub fn uniform(rows: usize, cols: usize, periodic_rows: bool) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidModel("spin field needs positive dimensions".into()));
        }
        Ok(SpinField { rows, cols, periodic_rows, spins: vec![1; rows * cols] })
    }

    pub fn random(rows: usize, cols: usize, periodic_rows: bool, rng: &mut impl Rng) -> Result<Self> {
        let mut f = Self::uniform(rows, cols, periodic_rows)?;
        f.spins.iter_mut().for_each(|s| *s = if rng.random_bool(0.5) { 1 } else { -1 });
        Ok(f)
    }

    /// Bonds as site pairs: horizontal first, then vertical.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let (rows, cols) = (self.rows, self.cols);
        let mut out = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols - 1 {
                out.push((r * cols + c, r * cols + c + 1));
            }
        }
        let vertical_rows = if self.periodic_rows && rows > 2 { rows } else { rows - 1 };
        for r in 0..vertical_rows {
            for c in 0..cols {
                out.push((r * cols + c, ((r + 1) % rows) * cols + c));
            }
        }
        out
    }

    /// `-sum s_i s_j` over bonds.
    pub fn bond_sum(&self) -> f64 {
        -self.bonds().iter().map(|&(a, b)| f64::from(self.spins[a] * self.spins[b])).sum::<f64>()
    }

    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&s| f64::from(s)).sum::<f64>() / self.spins.len() as f64
    }
}

/// Clusters of one Swendsen-Wang update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    pub rows: usize,
    pub cols: usize,
    pub bonds: Vec<(usize, usize)>,
    pub active: Vec<bool>,
    /// Cluster root of every site.
    pub labels: Vec<usize>,
}

impl ClusterLabeling {
    pub fn from_active(rows: usize, cols: usize, bonds: Vec<(usize, usize)>, active: Vec<bool>) -> Self {
        let mut sets = DisjointSets::new(rows * cols);
        for (&(a, b), &on) in bonds.iter().zip(&active) {
            if on {
                sets.union(a, b);
            }
        }
        let labels = (0..rows * cols).map(|i| sets.find(i)).collect();
        ClusterLabeling { rows, cols, bonds, active, labels }
    }

    pub fn num_clusters(&self) -> usize {
        self.labels.iter().collect::<HashSet<_>>().len()
    }
}

/// Activation probability for aligned neighbors.
pub fn activation_probability(k: f64) -> f64 {
    -(-2.0 * k).exp_m1()
}

/// One Swendsen-Wang update: activate aligned bonds with `1 - exp(-2K)`,
/// then flip every cluster with probability 1/2.
pub fn sw_sweep(field: &mut SpinField, k: f64, rng: &mut impl Rng) -> Result<ClusterLabeling> {
    if !(k >= 0.0) {
        return Err(Error::InvalidModel(format!("cluster updates need K >= 0, got {k}")));
    }
    let p = activation_probability(k);
    let bonds = field.bonds();
    let active: Vec<bool> =
        bonds.iter().map(|&(a, b)| field.spins[a] == field.spins[b] && rng.random::<f64>() < p).collect();
    let labeling = ClusterLabeling::from_active(field.rows, field.cols, bonds, active);
    let mut flip = vec![None; field.spins.len()];
    for (site, &root) in labeling.labels.iter().enumerate() {
        let f = *flip[root].get_or_insert_with(|| rng.random_bool(0.5));
        if f {
            field.spins[site] = -field.spins[site];
        }
    }
    Ok(labeling)
}

/// Single-spin Metropolis sweep in row-major order.
pub fn metropolis_sweep(field: &mut SpinField, k: f64, rng: &mut impl Rng) {
    let (rows, cols) = (field.rows, field.cols);
    let wrap = field.periodic_rows && rows > 2;
    for site in 0..rows * cols {
        let (r, c) = (site / cols, site % cols);
        let mut local = 0i32;
        let mut add = |rr: usize, cc: usize| local += i32::from(field.spins[rr * cols + cc]);
        if c > 0 {
            add(r, c - 1);
        }
        if c + 1 < cols {
            add(r, c + 1);
        }
        if r > 0 {
            add(r - 1, c);
        } else if wrap {
            add(rows - 1, c);
        }
        if r + 1 < rows {
            add(r + 1, c);
        } else if wrap {
            add(0, c);
        }
        let s = f64::from(field.spins[site]);
        let log_ratio = -2.0 * k * s * f64::from(local);
        if crate::sampler::accept_move(log_ratio, rng) {
            field.spins[site] = -field.spins[site];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutStatistics {
    /// Clusters with sites on both sides of the cut.
    pub clusters_cut: usize,
    /// Connected components of those clusters after removing cut-crossing bonds.
    pub pieces: usize,
}

/// Statistics for the cut between columns `cut - 1` and `cut`.
pub fn cut_statistics(labeling: &ClusterLabeling, cut: usize) -> Result<CutStatistics> {
    let cols = labeling.cols;
    if cut == 0 || cut >= cols {
        return Err(Error::PartitionMismatch(format!("cut {cut} outside 1..{cols}")));
    }
    let side = |site: usize| site % cols >= cut;
    let mut left = HashSet::new();
    let mut right = HashSet::new();
    for (site, &root) in labeling.labels.iter().enumerate() {
        if side(site) {
            right.insert(root);
        } else {
            left.insert(root);
        }
    }
    let cut_roots: HashSet<usize> = left.intersection(&right).copied().collect();
    if cut_roots.is_empty() {
        return Ok(CutStatistics { clusters_cut: 0, pieces: 0 });
    }
    let mut sets = DisjointSets::new(labeling.labels.len());
    for (&(a, b), &on) in labeling.bonds.iter().zip(&labeling.active) {
        if on && side(a) == side(b) {
            sets.union(a, b);
        }
    }
    let pieces: HashSet<usize> =
        (0..labeling.labels.len()).filter(|&s| cut_roots.contains(&labeling.labels[s])).map(|s| sets.find(s)).collect();
    Ok(CutStatistics { clusters_cut: cut_roots.len(), pieces: pieces.len() })
}

/// Cylinder run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRun {
    pub rows: usize,
    /// Defaults to 16 times the circumference when `None`.
    pub cols: Option<usize>,
    pub coupling: f64,
    pub sweeps: usize,
    pub equilibration: usize,
    pub replicas: usize,
    pub seed: u64,
}

impl ClusterRun {
    pub fn columns(&self) -> usize {
        self.cols.unwrap_or(16 * self.rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub coupling: f64,
    pub rows: usize,
    pub cols: usize,
    pub clusters_cut: McEstimate,
    /// Per-sample standard deviation of `clusters_cut`.
    pub clusters_cut_spread: f64,
    pub pieces: McEstimate,
    pub abs_magnetization: McEstimate,
    /// `-sum s_i s_j` per site.
    pub energy: McEstimate,
}

/// Measurements of one replica, one entry per measured sweep.
#[derive(Debug, Clone, Default)]
struct Series {
    cut: Vec<f64>,
    pieces: Vec<f64>,
    m_abs: Vec<f64>,
    energy: Vec<f64>,
}

fn run_replica(run: &ClusterRun, replica: u64) -> Result<Series> {
    let cols = run.columns();
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    rng.set_stream(replica);
    let mut field = SpinField::random(run.rows, cols, true, &mut rng)?;
    let n = (run.rows * cols) as f64;
    let mut series = Series::default();
    for sweep in 0..run.equilibration + run.sweeps {
        let labeling = sw_sweep(&mut field, run.coupling, &mut rng)?;
        if sweep >= run.equilibration {
            // The labeling describes the clusters that were just flipped; both
            // the bonds and the flipped field are a sample of the joint measure.
            let stats = cut_statistics(&labeling, cols / 2)?;
            series.cut.push(stats.clusters_cut as f64);
            series.pieces.push(stats.pieces as f64);
            series.m_abs.push(field.magnetization().abs());
            series.energy.push(field.bond_sum() / n);
        }
    }
    Ok(series)
}

/// Swendsen-Wang run on a cylinder with the cut in the middle column.
pub fn run_clusters(run: &ClusterRun) -> Result<ClusterSummary> {
    let replicas = run.replicas.max(1);
    let parts: Vec<Series> =
        (0..replicas as u64).into_par_iter().map(|r| run_replica(run, r)).collect::<Result<_>>()?;
    let merge = |pick: fn(&Series) -> &Vec<f64>| -> Result<McEstimate> {
        let ests: Vec<McEstimate> = parts.iter().map(|s| analyze(pick(s), run.equilibration, 1.0, 0.05)).collect();
        crate::sampler::merge_estimates(&ests)
    };
    let all_cut: Vec<f64> = parts.iter().flat_map(|s| s.cut.iter().copied()).collect();
    let mean = all_cut.iter().sum::<f64>() / all_cut.len().max(1) as f64;
    let spread = (all_cut.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (all_cut.len().max(2) - 1) as f64).sqrt();
    Ok(ClusterSummary {
        coupling: run.coupling,
        rows: run.rows,
        cols: run.columns(),
        clusters_cut: merge(|s| &s.cut)?,
        clusters_cut_spread: spread,
        pieces: merge(|s| &s.pieces)?,
        abs_magnetization: merge(|s| &s.m_abs)?,
        energy: merge(|s| &s.energy)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Columns, LatticeModelSpec, VerticalBc};
    use proptest::prelude::*;

    #[test]
    fn zero_coupling_gives_single_site_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut field = SpinField::random(6, 8, true, &mut rng).unwrap();
        let lab = sw_sweep(&mut field, 0.0, &mut rng).unwrap();
        assert_eq!(lab.num_clusters(), 48);
        assert_eq!(cut_statistics(&lab, 4).unwrap(), CutStatistics { clusters_cut: 0, pieces: 0 });
    }

    #[test]
    fn infinite_coupling_keeps_one_cluster() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut field = SpinField::uniform(5, 7, true).unwrap();
        let lab = sw_sweep(&mut field, 50.0, &mut rng).unwrap();
        assert_eq!(lab.num_clusters(), 1);
        assert_eq!(cut_statistics(&lab, 3).unwrap(), CutStatistics { clusters_cut: 1, pieces: 2 });
        assert!(field.spins.iter().all(|&s| s == field.spins[0]));
    }

    #[test]
    fn active_bonds_join_aligned_spins() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut field = SpinField::random(8, 8, true, &mut rng).unwrap();
        for _ in 0..20 {
            let before = field.clone();
            let lab = sw_sweep(&mut field, 0.5, &mut rng).unwrap();
            for (&(a, b), &on) in lab.bonds.iter().zip(&lab.active) {
                if on {
                    assert_eq!(before.spins[a], before.spins[b]);
                    assert_eq!(field.spins[a], field.spins[b]);
                    assert_eq!(lab.labels[a], lab.labels[b]);
                }
            }
        }
    }

    /// Exact `<-sum s s>` per site on a small cylinder by enumeration.
    fn exact_energy(rows: usize, cols: usize, k: f64) -> f64 {
        let model = LatticeModelSpec::ising(k, rows, Columns::Finite(cols), VerticalBc::Periodic);
        let bonds = model.bonds().unwrap();
        let n = rows * cols;
        let (mut z, mut e) = (0.0, 0.0);
        for cfg in 0..1usize << n {
            let s = |i: usize| if cfg >> i & 1 == 0 { 1.0 } else { -1.0 };
            let sum: f64 = bonds.iter().map(|b| s(b.a) * s(b.b)).sum();
            let w = (k * sum).exp();
            z += w;
            e -= w * sum;
        }
        e / z / n as f64
    }

    #[test]
    fn fk_measure_reproduces_boltzmann_energy() {
        let k = 0.4;
        let run = ClusterRun {
            rows: 3,
            cols: Some(3),
            coupling: k,
            sweeps: 40_000,
            equilibration: 100,
            replicas: 4,
            seed: 9,
        };
        let summary = run_clusters(&run).unwrap();
        let exact = exact_energy(3, 3, k);
        assert!(
            (summary.energy.mean - exact).abs() < 3.0 * summary.energy.std_error,
            "{:?} vs {exact}",
            summary.energy
        );
    }

    #[test]
    fn magnetization_agrees_with_metropolis() {
        let k = 0.44;
        let run = ClusterRun {
            rows: 8,
            cols: Some(8),
            coupling: k,
            sweeps: 20_000,
            equilibration: 500,
            replicas: 4,
            seed: 4,
        };
        let sw = run_clusters(&run).unwrap().abs_magnetization;
        let parts: Vec<McEstimate> = (0..4u64)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(77);
                rng.set_stream(c);
                let mut field = SpinField::random(8, 8, true, &mut rng).unwrap();
                let mut xs = Vec::new();
                for sweep in 0..82_000 {
                    metropolis_sweep(&mut field, k, &mut rng);
                    if sweep >= 2000 {
                        xs.push(field.magnetization().abs());
                    }
                }
                analyze(&xs, 2000, 1.0, 0.05)
            })
            .collect();
        let mc = crate::sampler::merge_estimates(&parts).unwrap();
        let sigma = (sw.std_error.powi(2) + mc.std_error.powi(2)).sqrt();
        assert!(
            (sw.mean - mc.mean).abs() < 3.0 * sigma,
            "{} +- {} vs {} +- {}",
            sw.mean,
            sw.std_error,
            mc.mean,
            mc.std_error
        );
    }

    proptest! {
        #[test]
        fn cut_clusters_fall_into_at_least_two_pieces(
            active in proptest::collection::vec(any::<bool>(), 28),
            cut in 1usize..4,
        ) {
            // 4 x 4 cylinder: 12 horizontal bonds, then 16 vertical bonds including the wrap.
            let field = SpinField::uniform(4, 4, true).unwrap();
            let bonds = field.bonds();
            prop_assert_eq!(bonds.len(), 28);
            let lab = ClusterLabeling::from_active(4, 4, bonds, active);
            let stats = cut_statistics(&lab, cut).unwrap();
            prop_assert!(stats.pieces >= 2 * stats.clusters_cut);
            prop_assert!(stats.clusters_cut <= 4);
        }
    }
}
