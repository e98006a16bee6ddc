//! Metropolis sampling over boundary configurations with binning error
//! analysis.
//!
//! A [`ChainTarget`] owns the current configuration and any cached partial
//! contractions. Proposals are single-site changes visited in boustrophedon
//! order; one sweep visits every site once.

use crate::error::{Error, Result};
use crate::model::BoundaryConfig;
use crate::tensornet::mps::MpsSite;
use crate::tensornet::strip::BoundaryState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

/// A distribution over `q`-state configurations with an observable.
pub trait ChainTarget {
    fn num_sites(&self) -> usize;
    fn q(&self) -> usize;
    fn config(&self) -> &[u8];
    /// Replace the configuration, rebuild caches and return `ln w`.
    fn reset(&mut self, config: &[u8]) -> Result<f64>;
    /// `ln w` with `site` set to `state`, all else unchanged.
    fn propose(&mut self, site: usize, state: u8) -> Result<f64>;
    /// Adopt the most recent proposal.
    fn accept(&mut self);
    fn observable(&mut self) -> Result<f64>;
    /// Largest disagreement between cached and freshly computed quantities.
    fn cache_drift(&mut self) -> Result<f64> {
        Ok(0.0)
    }
}

/// Sampling budget and analysis knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Measured sweeps per chain.
    pub sweeps: usize,
    /// Discarded sweeps per chain; `None` means 10% of `sweeps`.
    pub equilibration: Option<usize>,
    pub chains: usize,
    pub seed: u64,
    /// Relative change between consecutive bin doublings that counts as a plateau.
    pub plateau_tolerance: f64,
    /// Sum exactly when the configuration count is at most this.
    pub exact_bound: f64,
    /// Sweeps between cache consistency checks.
    pub drift_interval: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            sweeps: 10_000,
            equilibration: None,
            chains: 4,
            seed: 0,
            plateau_tolerance: 0.05,
            exact_bound: (1u64 << 22) as f64,
            drift_interval: 10_000,
        }
    }
}

impl Schedule {
    pub fn equilibration_sweeps(&self) -> usize {
        self.equilibration.unwrap_or(self.sweeps / 10)
    }
}

/// Fewest bins the doubling analysis keeps.
pub const MIN_BINS: usize = 32;
/// Largest tolerated cache drift.
pub const DRIFT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub n_equilibration: usize,
    /// `(bin size, standard error)` for each doubling.
    pub bin_curve: Vec<(usize, f64)>,
    /// Bin size whose error was reported.
    pub bin_size: usize,
    /// The doubling analysis reached a plateau and `n_samples >= 100 * bin_size`.
    pub plateau: bool,
    pub acceptance: f64,
    /// The value came from exact summation.
    pub exact: bool,
}

/// Standard error of the mean at doubling bin sizes, stopping at the first
/// relative change below `tolerance` or when fewer than [`MIN_BINS`] bins
/// would remain. Returns `(curve, chosen index, converged)`.
pub fn binning_analysis(samples: &[f64], tolerance: f64) -> (Vec<(usize, f64)>, usize, bool) {
    let mut curve = Vec::new();
    let mut bins: Vec<f64> = samples.to_vec();
    let mut size = 1;
    loop {
        curve.push((size, standard_error(&bins)));
        let last = curve.len() - 1;
        if last > 0 {
            let (prev, cur) = (curve[last - 1].1, curve[last].1);
            let change = if prev == 0.0 {
                if cur == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (cur - prev).abs() / prev
            };
            if change < tolerance {
                return (curve, last, true);
            }
        }
        if bins.len() / 2 < MIN_BINS {
            return (curve, last, false);
        }
        bins = bins.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        size *= 2;
    }
}

fn standard_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Metropolis acceptance in the log domain.
#[inline]
pub fn accept_move(log_ratio: f64, rng: &mut impl Rng) -> bool {
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}

/// Visiting order for sweep `index`: forward on even sweeps, backward on odd.
pub fn sweep_order(num_sites: usize, index: usize) -> impl Iterator<Item = usize> {
    let forward = index % 2 == 0;
    (0..num_sites).map(move |i| if forward { i } else { num_sites - 1 - i })
}

/// Single Metropolis update at `site`. Returns whether the move was accepted.
pub fn metropolis_step(
    target: &mut impl ChainTarget,
    current_log_w: &mut f64,
    site: usize,
    rng: &mut impl Rng,
) -> Result<bool> {
    if *current_log_w == f64::NEG_INFINITY {
        return Err(Error::Numerical("current configuration has zero weight".into()));
    }
    let q = target.q();
    let old = target.config()[site];
    let new = if q == 2 {
        1 - old
    } else {
        let s = rng.random_range(0..q as u8 - 1);
        if s >= old {
            s + 1
        } else {
            s
        }
    };
    let proposed = target.propose(site, new)?;
    if accept_move(proposed - *current_log_w, rng) {
        target.accept();
        *current_log_w = proposed;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Run one chain from `start` and return `(samples, acceptance)`.
pub fn run_chain(
    target: &mut impl ChainTarget,
    start: &[u8],
    schedule: &Schedule,
    stream: u64,
) -> Result<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    rng.set_stream(stream);
    let mut log_w = target.reset(start)?;
    let n = target.num_sites();
    let equil = schedule.equilibration_sweeps();
    let mut samples = Vec::with_capacity(schedule.sweeps);
    let (mut accepted, mut proposed) = (0usize, 0usize);
    for sweep in 0..equil + schedule.sweeps {
        for site in sweep_order(n, sweep) {
            accepted += usize::from(metropolis_step(target, &mut log_w, site, &mut rng)?);
            proposed += 1;
        }
        if sweep >= equil {
            samples.push(target.observable()?);
        }
        if schedule.drift_interval > 0 && (sweep + 1) % schedule.drift_interval == 0 {
            let drift = target.cache_drift()?;
            if !(drift <= DRIFT_TOLERANCE) {
                return Err(Error::Numerical(format!("cached contractions drifted by {drift:e}")));
            }
        }
    }
    Ok((samples, accepted as f64 / proposed.max(1) as f64))
}

/// Per-chain estimate from raw samples.
pub fn analyze(samples: &[f64], equilibration: usize, acceptance: f64, tolerance: f64) -> McEstimate {
    let mean = samples.iter().sum::<f64>() / samples.len().max(1) as f64;
    let (curve, idx, converged) = binning_analysis(samples, tolerance);
    let (bin_size, std_error) = curve[idx];
    McEstimate {
        mean,
        std_error,
        n_samples: samples.len(),
        n_equilibration: equilibration,
        plateau: converged && samples.len() >= 100 * bin_size,
        bin_curve: curve,
        bin_size,
        acceptance,
        exact: false,
    }
}

/// Inverse-variance combination of independent chain estimates. Chains
/// with zero error are averaged directly.
pub fn merge_estimates(parts: &[McEstimate]) -> Result<McEstimate> {
    let first = parts.first().ok_or_else(|| Error::InvalidModel("no chains to merge".into()))?;
    let n_samples = parts.iter().map(|p| p.n_samples).sum();
    let acceptance = parts.iter().map(|p| p.acceptance).sum::<f64>() / parts.len() as f64;
    let exact_parts: Vec<&McEstimate> = parts.iter().filter(|p| p.std_error == 0.0).collect();
    let (mean, std_error) = if !exact_parts.is_empty() {
        (exact_parts.iter().map(|p| p.mean).sum::<f64>() / exact_parts.len() as f64, 0.0)
    } else {
        let w: f64 = parts.iter().map(|p| p.std_error.powi(-2)).sum();
        (parts.iter().map(|p| p.mean * p.std_error.powi(-2)).sum::<f64>() / w, w.sqrt().recip())
    };
    Ok(McEstimate {
        mean,
        std_error,
        n_samples,
        n_equilibration: first.n_equilibration,
        bin_curve: first.bin_curve.clone(),
        bin_size: parts.iter().map(|p| p.bin_size).max().unwrap_or(1),
        plateau: parts.iter().all(|p| p.plateau),
        acceptance,
        exact: false,
    })
}

/// Independent chains in parallel, one random stream each, merged.
pub fn estimate<T, F>(make_target: F, schedule: &Schedule) -> Result<McEstimate>
where
    T: ChainTarget,
    F: Fn() -> Result<T> + Sync,
{
    let chains = schedule.chains.max(1);
    let parts: Vec<McEstimate> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut target = make_target()?;
            let start = dispersed_start(target.num_sites(), target.q(), schedule.seed, c as u64);
            let (samples, acc) = run_chain(&mut target, &start, schedule, c as u64)?;
            Ok(analyze(&samples, schedule.equilibration_sweeps(), acc, schedule.plateau_tolerance))
        })
        .collect::<Result<_>>()?;
    merge_estimates(&parts)
}

/// Random initial configuration for chain `stream`.
pub fn dispersed_start(num_sites: usize, q: usize, seed: u64, stream: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    rng.set_stream(stream);
    (0..num_sites).map(|_| rng.random_range(0..q as u8)).collect()
}

/// Exact weighted average of `observable` over all configurations.
pub fn exact_average(target: &mut impl ChainTarget) -> Result<McEstimate> {
    let (n, q) = (target.num_sites(), target.q());
    let states = (q as f64).powi(n as i32);
    if states > (1u64 << 26) as f64 {
        return Err(Error::TooLarge { states, bound: (1u64 << 26) as f64 });
    }
    let mut logs = Vec::with_capacity(states as usize);
    let mut obs = Vec::with_capacity(states as usize);
    let mut cfg = vec![0u8; n];
    for idx in 0..states as usize {
        let mut x = idx;
        for slot in cfg.iter_mut().rev() {
            *slot = (x % q) as u8;
            x /= q;
        }
        let lw = target.reset(&cfg)?;
        if lw == f64::NEG_INFINITY {
            continue;
        }
        logs.push(lw);
        obs.push(target.observable()?);
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (l, f) in logs.iter().zip(&obs) {
        let w = (l - top).exp();
        num += w * f;
        den += w;
    }
    Ok(McEstimate {
        mean: num / den,
        std_error: 0.0,
        n_samples: logs.len(),
        n_equilibration: 0,
        bin_curve: Vec::new(),
        bin_size: 1,
        plateau: true,
        acceptance: 1.0,
        exact: true,
    })
}

/// [`estimate`], or [`exact_average`] when the state space is within `schedule.exact_bound`.
pub fn estimate_or_sum<T, F>(make_target: F, schedule: &Schedule) -> Result<McEstimate>
where
    T: ChainTarget,
    F: Fn() -> Result<T> + Sync,
{
    let probe = make_target()?;
    if (probe.q() as f64).powi(probe.num_sites() as i32) <= schedule.exact_bound {
        let mut t = probe;
        return exact_average(&mut t);
    }
    estimate(make_target, schedule)
}

/// Target defined by a log-weight function and an observable over whole configurations.
pub struct FnTarget<W, O> {
    q: usize,
    config: Vec<u8>,
    pending: Option<(usize, u8)>,
    log_weight: W,
    observable: O,
}

impl<W, O> FnTarget<W, O>
where
    W: Fn(&[u8]) -> f64,
    O: Fn(&[u8]) -> f64,
{
    pub fn new(num_sites: usize, q: usize, log_weight: W, observable: O) -> Self {
        FnTarget { q, config: vec![0; num_sites], pending: None, log_weight, observable }
    }
}

impl<W, O> ChainTarget for FnTarget<W, O>
where
    W: Fn(&[u8]) -> f64,
    O: Fn(&[u8]) -> f64,
{
    fn num_sites(&self) -> usize {
        self.config.len()
    }

    fn q(&self) -> usize {
        self.q
    }

    fn config(&self) -> &[u8] {
        &self.config
    }

    fn reset(&mut self, config: &[u8]) -> Result<f64> {
        self.config.copy_from_slice(config);
        Ok((self.log_weight)(&self.config))
    }

    fn propose(&mut self, site: usize, state: u8) -> Result<f64> {
        let old = self.config[site];
        self.config[site] = state;
        let lw = (self.log_weight)(&self.config);
        self.config[site] = old;
        self.pending = Some((site, state));
        Ok(lw)
    }

    fn accept(&mut self) {
        if let Some((site, state)) = self.pending.take() {
            self.config[site] = state;
        }
    }

    fn observable(&mut self) -> Result<f64> {
        Ok((self.observable)(&self.config))
    }
}

/// Amplitude `u(column)` of a boundary MPS with prefix and suffix caches
/// that stay valid under single-site changes visited in sweep order.
#[derive(Debug, Clone)]
struct AmplitudeCache {
    column: Vec<u8>,
    /// `left[i]` contracts sites `0..i`; valid for `i <= left_valid`.
    left: Vec<Vec<f64>>,
    left_valid: usize,
    /// `right[i]` contracts sites `i..n`; valid for `i >= right_valid`.
    right: Vec<Vec<f64>>,
    right_valid: usize,
}

impl AmplitudeCache {
    fn new(column: &[u8]) -> Self {
        let n = column.len();
        let mut left = vec![Vec::new(); n + 1];
        left[0] = vec![1.0];
        let mut right = vec![Vec::new(); n + 1];
        right[n] = vec![1.0];
        AmplitudeCache { column: column.to_vec(), left, left_valid: 0, right, right_valid: n }
    }

    fn left_env(&mut self, sites: &[MpsSite], i: usize) -> &[f64] {
        while self.left_valid < i {
            let j = self.left_valid;
            self.left[j + 1] = push_left(&self.left[j], &sites[j], self.column[j]);
            self.left_valid += 1;
        }
        &self.left[i]
    }

    fn right_env(&mut self, sites: &[MpsSite], i: usize) -> &[f64] {
        while self.right_valid > i {
            let j = self.right_valid - 1;
            self.right[j] = push_right(&self.right[j + 1], &sites[j], self.column[j]);
            self.right_valid -= 1;
        }
        &self.right[i]
    }

    /// Amplitude with site `i` set to `state`.
    fn amplitude_with(&mut self, sites: &[MpsSite], i: usize, state: u8) -> f64 {
        let r = self.right_env(sites, i + 1).to_vec();
        let l = self.left_env(sites, i);
        let site = &sites[i];
        let mut acc = 0.0;
        for (a, &la) in l.iter().enumerate() {
            if la == 0.0 {
                continue;
            }
            let row = &site.data[(state as usize * site.left + a) * site.right..][..site.right];
            acc += la * row.iter().zip(&r).map(|(x, y)| x * y).sum::<f64>();
        }
        acc
    }

    fn set(&mut self, i: usize, state: u8) {
        self.column[i] = state;
        self.left_valid = self.left_valid.min(i);
        self.right_valid = self.right_valid.max(i + 1);
    }

    fn reset(&mut self, column: &[u8]) {
        *self = AmplitudeCache::new(column);
    }
}

fn push_left(env: &[f64], site: &MpsSite, s: u8) -> Vec<f64> {
    let mut next = vec![0.0; site.right];
    for (a, &e) in env.iter().enumerate() {
        let row = &site.data[(s as usize * site.left + a) * site.right..][..site.right];
        for (n, &x) in next.iter_mut().zip(row) {
            *n += e * x;
        }
    }
    next
}

fn push_right(env: &[f64], site: &MpsSite, s: u8) -> Vec<f64> {
    (0..site.left)
        .map(|a| {
            let row = &site.data[(s as usize * site.left + a) * site.right..][..site.right];
            row.iter().zip(env).map(|(x, y)| x * y).sum()
        })
        .collect()
}

/// Strip boundary chain over `(alpha, beta)`; sites `0..rows` are `alpha`,
/// `rows..2 rows` are `beta`. The observable is the strip estimator in bits.
#[derive(Debug, Clone)]
pub struct StripTarget<'a> {
    state: &'a BoundaryState,
    config: Vec<u8>,
    caches: [AmplitudeCache; 2],
    amplitudes: [f64; 2],
    pending: Option<(usize, u8, f64)>,
}

impl<'a> StripTarget<'a> {
    pub fn new(state: &'a BoundaryState) -> Self {
        let rows = state.rows();
        let zeros = vec![0u8; rows];
        StripTarget {
            state,
            config: vec![0; 2 * rows],
            caches: [AmplitudeCache::new(&zeros), AmplitudeCache::new(&zeros)],
            amplitudes: [0.0; 2],
            pending: None,
        }
    }

    fn split(&self) -> (&[u8], &[u8]) {
        self.config.split_at(self.state.rows())
    }

    fn log_weight_with(&self, amplitudes: [f64; 2], config: &[u8]) -> f64 {
        let op = &self.state.op;
        let (a, b) = config.split_at(self.state.rows());
        if amplitudes[0] == 0.0 || amplitudes[1] == 0.0 {
            return f64::NEG_INFINITY;
        }
        0.5 * op.log_column(a)
            + op.log_between(a, b)
            + 0.5 * op.log_column(b)
            + amplitudes[0].abs().ln()
            + amplitudes[1].abs().ln()
    }

    pub fn boundary_config(&self) -> BoundaryConfig {
        let (a, b) = self.split();
        BoundaryConfig { alpha: a.to_vec(), beta: b.to_vec() }
    }
}

impl ChainTarget for StripTarget<'_> {
    fn num_sites(&self) -> usize {
        self.config.len()
    }

    fn q(&self) -> usize {
        self.state.op.q
    }

    fn config(&self) -> &[u8] {
        &self.config
    }

    fn reset(&mut self, config: &[u8]) -> Result<f64> {
        if config.len() != self.config.len() {
            return Err(Error::PartitionMismatch("strip chain configuration has the wrong length".into()));
        }
        self.config.copy_from_slice(config);
        let rows = self.state.rows();
        for side in 0..2 {
            let column = &config[side * rows..(side + 1) * rows];
            self.caches[side].reset(column);
            self.amplitudes[side] = self.state.mps.amplitude(column);
        }
        self.pending = None;
        Ok(self.log_weight_with(self.amplitudes, &self.config))
    }

    fn propose(&mut self, site: usize, state: u8) -> Result<f64> {
        let rows = self.state.rows();
        let (side, row) = (site / rows, site % rows);
        let amp = self.caches[side].amplitude_with(&self.state.mps.sites, row, state);
        let mut amps = self.amplitudes;
        amps[side] = amp;
        let old = self.config[site];
        self.config[site] = state;
        let lw = self.log_weight_with(amps, &self.config);
        self.config[site] = old;
        self.pending = Some((site, state, amp));
        Ok(lw)
    }

    fn accept(&mut self) {
        if let Some((site, state, amp)) = self.pending.take() {
            let rows = self.state.rows();
            let (side, row) = (site / rows, site % rows);
            self.config[site] = state;
            self.caches[side].set(row, state);
            self.amplitudes[side] = amp;
        }
    }

    fn observable(&mut self) -> Result<f64> {
        let (a, b) = self.split();
        let between = self.state.op.log_between(a, b);
        let log_v = |amp: f64, column: &[u8]| {
            0.5 * self.state.log_lambda + amp.abs().ln() - 0.5 * self.state.op.log_column(column)
        };
        Ok((between - log_v(self.amplitudes[0], a) - log_v(self.amplitudes[1], b)) / LN_2)
    }

    fn cache_drift(&mut self) -> Result<f64> {
        let rows = self.state.rows();
        let mut worst: f64 = 0.0;
        for side in 0..2 {
            let fresh = self.state.mps.amplitude(&self.config[side * rows..(side + 1) * rows]);
            let scale = fresh.abs().max(f64::MIN_POSITIVE);
            worst = worst.max((fresh - self.amplitudes[side]).abs() / scale);
        }
        Ok(worst)
    }
}

/// Strip mutual information by Metropolis sampling of the boundary chain.
pub fn mi_strip_mc(state: &BoundaryState, schedule: &Schedule) -> Result<McEstimate> {
    estimate(|| Ok(StripTarget::new(state)), schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Columns, LatticeModelSpec, VerticalBc};
    use crate::tensornet::{dominant_boundary, mi_strip_exact};
    use proptest::prelude::{prop_assert, proptest};
    use rand::Rng;

    #[test]
    fn uphill_moves_are_always_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| accept_move(50.0, &mut rng)));
        assert!((0..1000).all(|_| !accept_move(-1e4, &mut rng)));
        assert!(accept_move(1e4, &mut rng));
    }

    #[test]
    fn flat_weights_accept_everything() {
        let mut t = FnTarget::new(10, 2, |_| 0.0, |_| 0.0);
        let schedule = Schedule { sweeps: 10_000, chains: 1, ..Schedule::default() };
        let (_, acc) = run_chain(&mut t, &[0; 10], &schedule, 0).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn constant_observable_has_no_error() {
        let schedule = Schedule { sweeps: 2000, chains: 2, ..Schedule::default() };
        let est = estimate(|| Ok(FnTarget::new(4, 2, |c: &[u8]| c[0] as f64, |_| 3.25)), &schedule).unwrap();
        assert_eq!(est.mean, 3.25);
        assert!(est.std_error < 1e-14);
    }

    #[test]
    fn detailed_balance_on_three_sites() {
        // Arbitrary positive table over 3 binary sites.
        let table = [0.3, 1.7, 0.9, 2.4, 0.1, 1.1, 0.6, 0.8];
        let index = |c: &[u8]| (c[0] as usize) << 2 | (c[1] as usize) << 1 | c[2] as usize;
        let total: f64 = table.iter().sum();
        let mut t = FnTarget::new(3, 2, |c: &[u8]| table[index(c)].ln(), |_| 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut lw = t.reset(&[0, 0, 0]).unwrap();
        let mut counts = [0usize; 8];
        let steps = 1_000_000;
        for step in 0..steps {
            metropolis_step(&mut t, &mut lw, step % 3, &mut rng).unwrap();
            counts[index(t.config())] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let p = table[i] / total;
            let freq = c as f64 / steps as f64;
            // Correlated samples; allow for an integrated autocorrelation time of ~10 steps.
            let sigma = (p * (1.0 - p) * 10.0 / steps as f64).sqrt();
            assert!((freq - p).abs() < 3.0 * sigma, "state {i}: {freq} vs {p}");
        }
    }

    #[test]
    fn identical_seeds_reproduce_bit_for_bit() {
        let make =
            || Ok(FnTarget::new(6, 3, |c: &[u8]| c.iter().map(|&s| s as f64 * 0.3).sum(), |c: &[u8]| c[2] as f64));
        let schedule = Schedule { sweeps: 3000, chains: 3, seed: 42, ..Schedule::default() };
        assert_eq!(estimate(make, &schedule).unwrap(), estimate(make, &schedule).unwrap());
    }

    #[test]
    fn binning_grows_for_correlated_series() {
        // AR(1) series with correlation 0.9.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = 0.0;
        let series: Vec<f64> = (0..1 << 16)
            .map(|_| {
                x = 0.9 * x + rng.random_range(-1.0..1.0);
                x
            })
            .collect();
        let (curve, idx, converged) = binning_analysis(&series, 0.05);
        assert!(converged);
        assert!(curve[idx].1 > 3.0 * curve[0].1);
        for w in curve.windows(2) {
            assert!(w[1].1 > 0.97 * w[0].1);
        }
    }

    #[test]
    fn strip_cache_matches_fresh_amplitudes() {
        let model = LatticeModelSpec::ising(0.44, 6, Columns::Infinite, VerticalBc::Periodic);
        let state = dominant_boundary(&model, 8).unwrap();
        let mut t = StripTarget::new(&state);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut lw = t.reset(&[0; 12]).unwrap();
        for sweep in 0..50 {
            for site in sweep_order(12, sweep) {
                metropolis_step(&mut t, &mut lw, site, &mut rng).unwrap();
            }
            assert!(t.cache_drift().unwrap() < 1e-12);
            let (w, f) = crate::tensornet::weight_and_logterm(&state, &t.boundary_config()).unwrap();
            let fresh = t.clone().reset(&t.config().to_vec()).unwrap();
            assert!((fresh - lw).abs() < 1e-10);
            assert!((t.observable().unwrap() - f).abs() < 1e-10);
            assert!(w.sign == 1);
        }
    }

    #[test]
    fn strip_sampler_matches_exact_sum() {
        let model = LatticeModelSpec::ising(0.35, 4, Columns::Infinite, VerticalBc::Periodic);
        let state = dominant_boundary(&model, 16).unwrap();
        let exact = mi_strip_exact(&state).unwrap().mi_bits;
        let schedule = Schedule { sweeps: 20_000, chains: 4, seed: 11, ..Schedule::default() };
        let est = mi_strip_mc(&state, &schedule).unwrap();
        assert!((est.mean - exact).abs() < 4.0 * est.std_error, "{} +- {} vs {exact}", est.mean, est.std_error);
        let summed = exact_average(&mut StripTarget::new(&state)).unwrap();
        assert!((summed.mean - exact).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn acceptance_is_finite_for_huge_log_ratios(delta in -1e4f64..1e4, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ok = accept_move(delta, &mut rng);
            if delta >= 0.0 { prop_assert!(ok); }
            if delta < -800.0 { prop_assert!(!ok); }
        }

        #[test]
        fn merged_error_never_exceeds_the_best_chain(
            means in proptest::collection::vec(-1.0f64..1.0, 1..6),
            errs in proptest::collection::vec(0.01f64..1.0, 6),
        ) {
            let parts: Vec<McEstimate> = means.iter().zip(&errs).map(|(&m, &e)| McEstimate {
                mean: m, std_error: e, n_samples: 100, n_equilibration: 0, bin_curve: vec![],
                bin_size: 1, plateau: true, acceptance: 0.5, exact: false,
            }).collect();
            let merged = merge_estimates(&parts).unwrap();
            let best = parts.iter().map(|p| p.std_error).fold(f64::INFINITY, f64::min);
            prop_assert!(merged.std_error <= best + 1e-15);
            let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(merged.mean >= lo - 1e-12 && merged.mean <= hi + 1e-12);
        }
    }
}
