//! Column transfer operator of a semi-infinite strip, its dominant boundary
//! state, and the strip mutual information.
//!
//! With `Q_v` the diagonal of vertical-bond weights of one column and
//! `Q_h` the horizontal-bond weights between neighboring columns, the
//! symmetric transfer operator is `M = sqrt(Q_v) Q_h sqrt(Q_v)`. Its
//! normalized dominant eigenvector `u` fixes the boundary marginal
//! `p(alpha) = u_alpha^2`.

use super::factor::{factorize_pair, weight_matrix, BondFactorization};
use super::mps::{local_expectation, Mpo, MpoSite, Mps, MpsSite};
use crate::brute::ENUMERATION_BOUND;
use crate::error::{Error, Result};
use crate::logweight::LogWeight;
use crate::model::{BoundaryConfig, Columns, LatticeModelSpec, ModelKind, VerticalBc};
use nalgebra::DMatrix;
use std::f64::consts::LN_2;

/// Matrix product operator for one column plus the data needed to score
/// boundary configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOperator {
    pub kind: ModelKind,
    pub q: usize,
    pub coupling: f64,
    pub rows: usize,
    pub vertical_bc: VerticalBc,
    /// Constant added to every bond energy; leaves the mutual information unchanged.
    pub energy_shift: f64,
    /// Factorization of `sqrt(exp(-E))` for a vertical bond.
    pub half_vertical: BondFactorization,
    /// `-E(s, t) - shift` for one bond.
    pub log_bond: DMatrix<f64>,
    pub mpo: Mpo,
}

impl TransferOperator {
    pub fn new(model: &LatticeModelSpec) -> Result<Self> {
        Self::with_energy_shift(model, 0.0)
    }

    pub fn with_energy_shift(model: &LatticeModelSpec, energy_shift: f64) -> Result<Self> {
        model.validate()?;
        if model.cols != Columns::Infinite {
            return Err(Error::InvalidModel("the transfer operator needs an infinite strip".into()));
        }
        let k = model.uniform_k()?;
        if !k.is_finite() || !energy_shift.is_finite() {
            return Err(Error::InvalidModel("strip couplings must be finite".into()));
        }
        let mut half_vertical = factorize_pair(model.kind, model.q, 0.5 * k)?;
        let half_shift = (-0.5 * energy_shift).exp();
        for h in &mut half_vertical.h {
            *h *= half_shift;
        }
        let weights = weight_matrix(model.kind, model.q, k)?;
        let log_bond = weights.map(|w| w.ln() - energy_shift);
        let horizontal = log_bond.map(f64::exp);
        let mut op = TransferOperator {
            kind: model.kind,
            q: model.q,
            coupling: k,
            rows: model.rows,
            vertical_bc: model.vertical_bc,
            energy_shift,
            half_vertical,
            log_bond,
            mpo: Mpo { sites: Vec::new() },
        };
        op.mpo = op.build_mpo(&horizontal);
        Ok(op)
    }

    /// Whether the column closes into a ring (at least three rows on a cylinder).
    pub fn wraps(&self) -> bool {
        self.vertical_bc == VerticalBc::Periodic && self.rows > 2
    }

    /// Vertical bonds of one column as row pairs.
    pub fn vertical_bonds(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..self.rows.saturating_sub(1)).map(|r| (r, r + 1)).collect();
        if self.wraps() {
            out.push((self.rows - 1, 0));
        }
        out
    }

    /// `ln q_alpha`: vertical bonds inside one column.
    pub fn log_column(&self, column: &[u8]) -> f64 {
        self.vertical_bonds().iter().map(|&(a, b)| self.log_bond[(column[a] as usize, column[b] as usize)]).sum()
    }

    /// `ln q_alpha_beta`: horizontal bonds between two neighboring columns.
    pub fn log_between(&self, left: &[u8], right: &[u8]) -> f64 {
        left.iter().zip(right).map(|(&a, &b)| self.log_bond[(a as usize, b as usize)]).sum()
    }

    /// Diagonal tensors `d[row][s][left][right]` of `sqrt(Q_v)`.
    pub fn half_column_tensors(&self) -> Vec<MpsSite> {
        let f = &self.half_vertical;
        let r = f.h.len();
        let rows = self.rows;
        (0..rows)
            .map(|i| {
                if self.wraps() {
                    // Bond index carries (chain channel, wrap channel).
                    let (left, right) = match i {
                        0 => (1, r * r),
                        _ if i == rows - 1 => (r * r, 1),
                        _ => (r * r, r * r),
                    };
                    let mut d = MpsSite::zeros(self.q, left, right);
                    for s in 0..self.q {
                        for lam in 0..r {
                            for mu in 0..r {
                                if i == 0 {
                                    *d.at_mut(s, 0, lam * r + mu) = f.g[lam][s] * f.h[lam] * f.g[mu][s] * f.h[mu];
                                } else if i == rows - 1 {
                                    *d.at_mut(s, lam * r + mu, 0) = f.g[lam][s] * f.g[mu][s];
                                } else {
                                    for next in 0..r {
                                        *d.at_mut(s, lam * r + mu, next * r + mu) =
                                            f.g[lam][s] * f.g[next][s] * f.h[next];
                                    }
                                }
                            }
                        }
                    }
                    d
                } else {
                    let left = if i > 0 { r } else { 1 };
                    let right = if i + 1 < rows { r } else { 1 };
                    let mut d = MpsSite::zeros(self.q, left, right);
                    for s in 0..self.q {
                        for a in 0..left {
                            for b in 0..right {
                                let from_above = if i > 0 { f.g[a][s] } else { 1.0 };
                                let to_below = if i + 1 < rows { f.g[b][s] * f.h[b] } else { 1.0 };
                                *d.at_mut(s, a, b) = from_above * to_below;
                            }
                        }
                    }
                    d
                }
            })
            .collect()
    }

    fn build_mpo(&self, horizontal: &DMatrix<f64>) -> Mpo {
        let sites = self.half_column_tensors().iter().map(|d| transfer_site(d, horizontal)).collect();
        Mpo { sites }
    }

    /// MPO site with the horizontal weight replaced by `horizontal`.
    pub fn site_with_horizontal(&self, row: usize, horizontal: &DMatrix<f64>) -> MpoSite {
        transfer_site(&self.half_column_tensors()[row], horizontal)
    }

    /// `sqrt(q_alpha)` as an MPS.
    pub fn half_column_state(&self) -> Mps {
        Mps { sites: self.half_column_tensors() }
    }

    fn probe_configs(&self) -> [Vec<u8>; 2] {
        let aligned = vec![0u8; self.rows];
        let split = (0..self.rows).map(|r| u8::from(2 * r >= self.rows)).collect();
        [aligned, split]
    }
}

fn transfer_site(d: &MpsSite, horizontal: &DMatrix<f64>) -> MpoSite {
    let q = d.q;
    let (l, r) = (d.left, d.right);
    let mut w = MpoSite::zeros(q, l * l, r * r);
    for so in 0..q {
        for si in 0..q {
            let wh = horizontal[(so, si)];
            if wh == 0.0 {
                continue;
            }
            for a1 in 0..l {
                for b1 in 0..r {
                    let x = d.at(so, a1, b1);
                    if x == 0.0 {
                        continue;
                    }
                    for a2 in 0..l {
                        for b2 in 0..r {
                            *w.at_mut(so, si, a1 * l + a2, b1 * r + b2) = x * wh * d.at(si, a2, b2);
                        }
                    }
                }
            }
        }
    }
    w
}

/// Power-iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions { max_iterations: 10_000, tolerance: 1e-12 }
    }
}

/// Dominant eigenpair of the transfer operator at bounded bond dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryState {
    pub op: TransferOperator,
    pub bond_dimension: usize,
    /// Normalized, left-canonical.
    pub mps: Mps,
    /// Rayleigh quotient `ln <u|M|u>`.
    pub log_lambda: f64,
    pub iterations: usize,
    /// Discarded weight of the last truncation.
    pub discarded_weight: f64,
}

/// Dominant boundary state from the symmetric uniform start.
pub fn dominant_boundary(model: &LatticeModelSpec, bond_dimension: usize) -> Result<BoundaryState> {
    let op = TransferOperator::new(model)?;
    dominant_boundary_from(op, bond_dimension, None, PowerOptions::default())
}

/// Power iteration with per-step truncation, optionally warm-started.
pub fn dominant_boundary_from(
    op: TransferOperator,
    bond_dimension: usize,
    start: Option<&Mps>,
    options: PowerOptions,
) -> Result<BoundaryState> {
    if bond_dimension == 0 {
        return Err(Error::InvalidModel("bond dimension must be positive".into()));
    }
    let mut psi = match start {
        Some(m) if m.len() == op.rows && m.sites[0].q == op.q => m.clone(),
        _ => Mps::uniform(op.q, op.rows),
    };
    psi.compress(bond_dimension);
    let probes = op.probe_configs();
    let mut last_probe: Vec<f64> = probes.iter().map(|c| psi.amplitude(c)).collect();
    let mut last_log = f64::NAN;
    let mut discarded = 0.0;
    for it in 1..=options.max_iterations {
        let mut next = psi.apply(&op.mpo);
        let info = next.compress(bond_dimension);
        if !info.log_norm.is_finite() {
            return Err(Error::Numerical("transfer operator annihilated the boundary state".into()));
        }
        discarded = info.discarded_weight;
        psi = next;
        let probe: Vec<f64> = probes.iter().map(|c| psi.amplitude(c)).collect();
        let scale = probe.iter().chain(&last_probe).fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        let probe_change = probe.iter().zip(&last_probe).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        let log_change = (info.log_norm - last_log).abs();
        last_probe = probe;
        last_log = info.log_norm;
        if log_change < options.tolerance && probe_change < options.tolerance {
            let lambda = psi.expectation(&op.mpo);
            if lambda <= 0.0 {
                return Err(Error::Numerical("non-positive dominant eigenvalue".into()));
            }
            return Ok(BoundaryState {
                op,
                bond_dimension,
                mps: psi,
                log_lambda: lambda.ln(),
                iterations: it,
                discarded_weight: discarded,
            });
        }
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge in {} iterations (last discarded weight {discarded:e})",
        options.max_iterations
    )))
}

impl BoundaryState {
    pub fn rows(&self) -> usize {
        self.op.rows
    }

    /// `u_alpha`.
    pub fn amplitude(&self, column: &[u8]) -> f64 {
        self.mps.amplitude(column)
    }

    /// Boundary vector `v_alpha = sqrt(Lambda) u_alpha / sqrt(q_alpha)`, normalized so
    /// the strip weights sum to `Lambda^2`.
    pub fn log_boundary_overlap(&self, column: &[u8]) -> Result<LogWeight> {
        let u = self.amplitude(column);
        if u == 0.0 {
            return Err(Error::Numerical("boundary overlap is exactly zero".into()));
        }
        let log = 0.5 * self.log_lambda + u.abs().ln() - 0.5 * self.op.log_column(column);
        Ok(LogWeight::new(log, if u > 0.0 { 1 } else { -1 }))
    }

    /// `ln <s|u>` where `s_alpha = sqrt(q_alpha)` is the free column end.
    pub fn log_free_end_overlap(&self) -> f64 {
        self.op.half_column_state().overlap(&self.mps).ln()
    }

    fn validate_column(&self, column: &[u8]) -> Result<()> {
        if column.len() != self.rows() {
            return Err(Error::PartitionMismatch(format!(
                "column has {} spins, strip has {} rows",
                column.len(),
                self.rows()
            )));
        }
        if let Some(&s) = column.iter().find(|&&s| s as usize >= self.op.q) {
            return Err(Error::StateOutOfRange { state: s as usize, q: self.op.q });
        }
        Ok(())
    }
}

/// `ln Z_A(alpha)` for `n_bulk` free columns to the left of the fixed column
/// `alpha`, excluding the bonds inside `alpha`. Exact as `n_bulk` grows.
pub fn partial_partition(state: &BoundaryState, alpha: &[u8], n_bulk: usize) -> Result<LogWeight> {
    state.validate_column(alpha)?;
    let u = state.amplitude(alpha);
    if u == 0.0 {
        return Err(Error::Numerical("boundary overlap is exactly zero".into()));
    }
    let log = n_bulk as f64 * state.log_lambda + state.log_free_end_overlap() + u.abs().ln()
        - 0.5 * state.op.log_column(alpha);
    Ok(LogWeight::new(log, if u > 0.0 { 1 } else { -1 }))
}

/// Strip weight `w = q_a q_ab q_b v_a v_b` and estimator `log2(q_ab / (v_a v_b))`.
pub fn weight_and_logterm(state: &BoundaryState, cfg: &BoundaryConfig) -> Result<(LogWeight, f64)> {
    state.validate_column(&cfg.alpha)?;
    state.validate_column(&cfg.beta)?;
    let va = state.log_boundary_overlap(&cfg.alpha)?;
    let vb = state.log_boundary_overlap(&cfg.beta)?;
    let between = state.op.log_between(&cfg.alpha, &cfg.beta);
    let log_w = state.op.log_column(&cfg.alpha)
        + between
        + state.op.log_column(&cfg.beta)
        + va.log_magnitude
        + vb.log_magnitude;
    let f = (between - va.log_magnitude - vb.log_magnitude) / LN_2;
    Ok((LogWeight::new(log_w, va.sign * vb.sign), f))
}

/// Components of the strip mutual information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripMi {
    pub mi_bits: f64,
    pub log_lambda: f64,
    /// Entropy of the boundary marginal `u^2` in bits.
    pub boundary_entropy_bits: f64,
    pub discarded_weight: f64,
}

/// Exact strip mutual information from the boundary state:
/// `I = <ln q_ab> + sum u^2 ln q_a + H(u^2) - ln Lambda` (nats), where the
/// bond average uses local operator insertions.
pub fn mi_strip_exact(state: &BoundaryState) -> Result<StripMi> {
    let op = &state.op;
    let states = (op.q as f64).powi(op.rows as i32);
    if states > ENUMERATION_BOUND {
        return Err(Error::TooLarge { states, bound: ENUMERATION_BOUND });
    }
    let mps = &state.mps;
    let left = mps.left_environments(&op.mpo);
    let right = mps.right_environments(&op.mpo);
    let lambda = left[op.rows][0];
    let energy_weighted = op.log_bond.zip_map(&op.log_bond, |l, _| l.exp() * l);
    let mut bond_sum = 0.0;
    for row in 0..op.rows {
        let site = op.site_with_horizontal(row, &energy_weighted);
        bond_sum += local_expectation(&left[row], &right[row + 1], &mps.sites[row], &site);
    }
    let mut norm = 0.0;
    let mut entropy = 0.0;
    let mut column_term = 0.0;
    mps.for_each_amplitude(|cfg, amp| {
        let p = amp * amp;
        if p > 0.0 {
            norm += p;
            entropy -= p * p.ln();
            column_term += p * op.log_column(cfg);
        }
    });
    let entropy = entropy / norm + norm.ln();
    let mi = bond_sum / lambda + column_term / norm + entropy - lambda.ln();
    Ok(StripMi {
        mi_bits: mi / LN_2,
        log_lambda: lambda.ln(),
        boundary_entropy_bits: entropy / LN_2,
        discarded_weight: state.discarded_weight,
    })
}

/// Strip mutual information over a coupling grid, warm-starting each point
/// from the previous boundary state.
pub fn mi_strip_scan(model: &LatticeModelSpec, couplings: &[f64], bond_dimension: usize) -> Result<Vec<StripMi>> {
    let mut out = Vec::with_capacity(couplings.len());
    let mut previous: Option<Mps> = None;
    for &k in couplings {
        let mut m = model.clone();
        m.couplings = crate::model::Couplings::Uniform(k);
        let op = TransferOperator::new(&m)?;
        let state = dominant_boundary_from(op, bond_dimension, previous.as_ref(), PowerOptions::default())?;
        out.push(mi_strip_exact(&state)?);
        previous = Some(state.mps);
    }
    Ok(out)
}

/// Heat capacity per site `K^2 d^2 (ln Lambda / rows) / dK^2` by central differences.
pub fn heat_capacity(model: &LatticeModelSpec, bond_dimension: usize) -> Result<f64> {
    let k = model.uniform_k()?;
    let step = if k == 0.0 { 1e-4 } else { 1e-3 * k.abs() };
    let mut logs = [0.0; 3];
    let mut previous: Option<Mps> = None;
    for (slot, kk) in logs.iter_mut().zip([k - step, k, k + step]) {
        let mut m = model.clone();
        m.couplings = crate::model::Couplings::Uniform(kk);
        let state = dominant_boundary_from(
            TransferOperator::new(&m)?,
            bond_dimension,
            previous.as_ref(),
            PowerOptions::default(),
        )?;
        *slot = state.log_lambda / model.rows as f64;
        previous = Some(state.mps);
    }
    Ok(k * k * (logs[2] - 2.0 * logs[1] + logs[0]) / (step * step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Columns;

    fn strip(k: f64, rows: usize, bc: VerticalBc) -> LatticeModelSpec {
        LatticeModelSpec::ising(k, rows, Columns::Infinite, bc)
    }

    /// Dense matrix of an MPO by contracting every bond.
    fn mpo_dense(mpo: &Mpo) -> DMatrix<f64> {
        let q = mpo.sites[0].q;
        let n = mpo.sites.len();
        let dim = q.pow(n as u32);
        DMatrix::from_fn(dim, dim, |row, col| {
            let mut env = vec![1.0];
            for (i, w) in mpo.sites.iter().enumerate() {
                let shift = (n - 1 - i) as u32;
                let (so, si) = ((row / q.pow(shift)) % q, (col / q.pow(shift)) % q);
                let mut next = vec![0.0; w.right];
                for (a, &e) in env.iter().enumerate() {
                    for (b, nb) in next.iter_mut().enumerate() {
                        *nb += e * w.at(so, si, a, b);
                    }
                }
                env = next;
            }
            env[0]
        })
    }

    fn column_of(index: usize, rows: usize) -> Vec<u8> {
        (0..rows).map(|r| ((index >> (rows - 1 - r)) & 1) as u8).collect()
    }

    #[test]
    fn mpo_reproduces_column_boltzmann_factors() {
        for (rows, bc) in [
            (1, VerticalBc::Open),
            (2, VerticalBc::Open),
            (2, VerticalBc::Periodic),
            (3, VerticalBc::Open),
            (4, VerticalBc::Periodic),
        ] {
            let op = TransferOperator::new(&strip(0.37, rows, bc)).unwrap();
            let dense = mpo_dense(&op.mpo);
            for a in 0..(1 << rows) {
                for b in 0..(1 << rows) {
                    let (ca, cb) = (column_of(a, rows), column_of(b, rows));
                    let expected =
                        (0.5 * op.log_column(&ca) + op.log_between(&ca, &cb) + 0.5 * op.log_column(&cb)).exp();
                    assert!((dense[(a, b)] - expected).abs() < 1e-12 * expected, "rows={rows} {bc:?}");
                }
            }
        }
    }

    #[test]
    fn single_row_eigenvalue() {
        let s = dominant_boundary(&strip(0.5, 1, VerticalBc::Open), 4).unwrap();
        assert!((s.log_lambda - (2.0 * 0.5f64.cosh()).ln()).abs() < 1e-12);
    }

    #[test]
    fn decoupled_rows_give_two_to_the_rows() {
        for rows in [1, 3, 6] {
            let s = dominant_boundary(&strip(0.0, rows, VerticalBc::Periodic), 4).unwrap();
            assert!((s.log_lambda - rows as f64 * LN_2).abs() < 1e-12);
            let mi = mi_strip_exact(&s).unwrap();
            assert!(mi.mi_bits.abs() < 1e-12);
            let a = s.log_boundary_overlap(&vec![0; rows]).unwrap();
            let b = s.log_boundary_overlap(&vec![1; rows]).unwrap();
            assert!((a.log_magnitude - b.log_magnitude).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_sum_to_lambda_squared() {
        let s = dominant_boundary(&strip(0.44, 4, VerticalBc::Periodic), 16).unwrap();
        let mut weights = Vec::new();
        let mut mi = 0.0;
        for a in 0..16 {
            for b in 0..16 {
                let cfg = BoundaryConfig { alpha: column_of(a, 4), beta: column_of(b, 4) };
                let (w, f) = weight_and_logterm(&s, &cfg).unwrap();
                assert_eq!(w.sign, 1);
                mi += w.scaled(2.0 * s.log_lambda) * f;
                weights.push(w);
            }
        }
        let total = LogWeight::sum(weights);
        assert!((total.log_magnitude - 2.0 * s.log_lambda).abs() < 1e-10);
        assert!((mi - mi_strip_exact(&s).unwrap().mi_bits).abs() < 1e-10);
    }

    #[test]
    fn global_flip_leaves_weight_and_logterm_unchanged() {
        let s = dominant_boundary(&strip(0.6, 5, VerticalBc::Open), 8).unwrap();
        let cfg = BoundaryConfig { alpha: vec![0, 1, 1, 0, 0], beta: vec![1, 1, 0, 0, 1] };
        let flip = BoundaryConfig {
            alpha: cfg.alpha.iter().map(|s| 1 - s).collect(),
            beta: cfg.beta.iter().map(|s| 1 - s).collect(),
        };
        let (w1, f1) = weight_and_logterm(&s, &cfg).unwrap();
        let (w2, f2) = weight_and_logterm(&s, &flip).unwrap();
        assert!((w1.log_magnitude - w2.log_magnitude).abs() < 1e-10);
        assert!((f1 - f2).abs() < 1e-10);
    }

    #[test]
    fn energy_shift_leaves_mi_unchanged() {
        let model = strip(0.41, 6, VerticalBc::Periodic);
        let plain = dominant_boundary(&model, 16).unwrap();
        let shifted = dominant_boundary_from(
            TransferOperator::with_energy_shift(&model, 0.7).unwrap(),
            16,
            None,
            PowerOptions::default(),
        )
        .unwrap();
        let (a, b) = (mi_strip_exact(&plain).unwrap(), mi_strip_exact(&shifted).unwrap());
        assert!((a.mi_bits - b.mi_bits).abs() < 1e-10);
        let per_column_bonds = (6 + 6) as f64;
        assert!((a.log_lambda - b.log_lambda - 0.7 * per_column_bonds).abs() < 1e-10);
    }

    #[test]
    fn deep_ferromagnet_saturates_at_one_bit() {
        let s = dominant_boundary(&strip(1.0, 8, VerticalBc::Periodic), 16).unwrap();
        let mi = mi_strip_exact(&s).unwrap().mi_bits;
        assert!((mi - 1.0).abs() < 1e-3, "{mi}");
    }

    #[test]
    fn eigenvector_satisfies_rayleigh_identity() {
        let s = dominant_boundary(&strip(0.3, 6, VerticalBc::Open), 16).unwrap();
        let applied = s.mps.apply(&s.op.mpo);
        let lambda2 = applied.overlap(&applied);
        assert!((lambda2.ln() - 2.0 * s.log_lambda).abs() < 1e-10);
    }

    #[test]
    fn potts_strip_reconstructs_weights() {
        let model = LatticeModelSpec {
            kind: ModelKind::Potts,
            q: 3,
            couplings: crate::model::Couplings::Uniform(0.9),
            rows: 3,
            cols: Columns::Infinite,
            vertical_bc: VerticalBc::Periodic,
        };
        let op = TransferOperator::new(&model).unwrap();
        let dense = mpo_dense(&op.mpo);
        let col = |i: usize| vec![(i / 9) as u8, ((i / 3) % 3) as u8, (i % 3) as u8];
        for a in 0..27 {
            for b in 0..27 {
                let expected =
                    (0.5 * op.log_column(&col(a)) + op.log_between(&col(a), &col(b)) + 0.5 * op.log_column(&col(b)))
                        .exp();
                assert!((dense[(a, b)] - expected).abs() < 1e-12 * expected);
            }
        }
    }
}
