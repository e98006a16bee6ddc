//! Evaluation of one sweep point for each engine.

use crate::config::{Engine, FamilyKind, ModelParams, Observable, ScheduleParams};
use spinmi_collective::cgmi::{ground_state_mi, mutual_information, BipartitionSpec};
use spinmi_collective::classical::{classical_limit, SystemSize};
use spinmi_collective::ground::ground_state;
use spinmi_collective::meanfield::{critical_temperature, mean_field, BoundaryPoint, MeanFieldEnergy, TransitionOrder};
use spinmi_collective::thermal::{partition_and_observables, susceptibility};
use spinmi_collective::{CollectiveModelSpec, Family};
use spinmi_core::brute::ENUMERATION_BOUND;
use spinmi_core::clusters::{run_clusters, ClusterRun};
use spinmi_core::fermigauss::ising_partition;
use spinmi_core::pfaffian::nested::mi_nested;
use spinmi_core::sampler::{mi_strip_mc, McEstimate};
use spinmi_core::tensornet::{dominant_boundary, heat_capacity, mi_strip_exact};
use spinmi_core::{Columns, Couplings, Error, LatticeModelSpec, ModelKind, Result, VerticalBc};
use std::f64::consts::LN_2;

/// Boundary configurations the matchgate half-cut sum may enumerate.
pub const MATCHGATE_ENUMERATION_BOUND: usize = 1 << 12;

/// One row of results: named values in a fixed order per engine and
/// observable.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub values: Vec<(&'static str, f64)>,
    /// Zero exactly when the value is deterministic.
    pub std_error: f64,
    pub spectrum: Vec<SpectrumRow>,
    pub boundary: Option<BoundaryPoint>,
}

impl Measurement {
    fn exact(values: Vec<(&'static str, f64)>) -> Self {
        Measurement { values, std_error: 0.0, spectrum: Vec::new(), boundary: None }
    }

    /// Stochastic rows report at least the resolution of their mean, so a
    /// sample without spread still carries a nonzero error.
    fn sampled(values: Vec<(&'static str, f64)>, estimate: &McEstimate) -> Self {
        let std_error =
            if estimate.exact { 0.0 } else { estimate.std_error.max(f64::EPSILON * estimate.mean.abs().max(1.0)) };
        Measurement { values, std_error, spectrum: Vec::new(), boundary: None }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }
}

/// Eigenvalue of the reduced density of A in the block of spin `s1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub s1: f64,
    pub rank: usize,
    pub eigenvalue: f64,
    pub multiplicity: f64,
}

/// Column the SVG draws when the config does not name one.
pub fn primary_column(observable: Observable) -> &'static str {
    match observable {
        Observable::Mi => "mi",
        Observable::HeatCapacity => "heat_capacity",
        Observable::LogZ => "log_z",
        Observable::ClustersCut => "clusters_cut",
        Observable::Thermal => "m_x",
        Observable::MeanField => "t_c",
        Observable::GroundState => "mi",
    }
}

pub fn lattice_model(engine: Engine, params: &ModelParams) -> LatticeModelSpec {
    let strip = engine == Engine::Tensornet;
    let cylinder = engine == Engine::Clusters;
    let default_bc = if strip || cylinder { VerticalBc::Periodic } else { VerticalBc::Open };
    let cols = if strip {
        Columns::Infinite
    } else if cylinder {
        Columns::Finite(params.cols.unwrap_or(16 * params.rows))
    } else {
        Columns::Finite(params.cols.unwrap_or(params.rows))
    };
    LatticeModelSpec {
        kind: params.kind,
        q: params.q,
        couplings: Couplings::Uniform(params.coupling),
        rows: params.rows,
        cols,
        vertical_bc: params.vertical_bc.unwrap_or(default_bc),
    }
}

pub fn collective_model(params: &ModelParams) -> CollectiveModelSpec {
    let beta = params.inverse_temperature();
    match params.family {
        FamilyKind::Lmg => CollectiveModelSpec::lmg(params.spins, params.anisotropy, params.field, beta),
        FamilyKind::Mn => CollectiveModelSpec::mn(params.spins, params.x_order, params.z_order, params.angle, beta),
    }
}

/// Defaults to a centred rectangle about half the lattice wide.
fn nested_rectangle(rows: usize, cols: usize, inner: Option<[usize; 4]>) -> [usize; 4] {
    let ir = (rows.saturating_sub(2) / 2).max(1);
    let ic = (cols.saturating_sub(2) / 2).max(1);
    inner.unwrap_or([(rows.saturating_sub(ir)) / 2, (cols.saturating_sub(ic)) / 2, ir, ic])
}

/// Checks that do not need the engine to run.
pub fn check(engine: Engine, observable: Observable, params: &ModelParams) -> Result<()> {
    match engine {
        Engine::Tensornet | Engine::Fkt | Engine::Matchgate | Engine::Clusters => {
            let model = lattice_model(engine, params);
            model.validate()?;
            if engine != Engine::Tensornet && model.kind != ModelKind::Ising {
                return Err(Error::Unsupported(format!("engine {} handles the Ising model only", engine.name())));
            }
            if matches!(engine, Engine::Fkt | Engine::Matchgate) && model.vertical_bc != VerticalBc::Open {
                return Err(Error::Unsupported(format!("engine {} needs open vertical boundaries", engine.name())));
            }
            if engine == Engine::Clusters && model.vertical_bc != VerticalBc::Periodic {
                return Err(Error::Unsupported("cluster runs use a cylinder".into()));
            }
            if engine == Engine::Tensornet && params.bond_dimension == 0 {
                return Err(Error::InvalidModel("bond dimension must be positive".into()));
            }
            if engine == Engine::Matchgate && observable == Observable::Mi {
                let cols = model.finite_cols()?;
                let cut = params.cut.unwrap_or(cols / 2);
                if cut == 0 || cut >= cols {
                    return Err(Error::PartitionMismatch(format!("cut {cut} outside 1..{cols}")));
                }
                if 2 * model.rows >= usize::BITS as usize || 1usize << (2 * model.rows) > MATCHGATE_ENUMERATION_BOUND {
                    return Err(Error::TooLarge {
                        states: 2f64.powi(2 * model.rows as i32),
                        bound: MATCHGATE_ENUMERATION_BOUND as f64,
                    });
                }
            }
            if engine == Engine::Fkt {
                let cols = model.finite_cols()?;
                let [top, left, ir, ic] = nested_rectangle(model.rows, cols, params.inner);
                if top == 0 || left == 0 || top + ir >= model.rows || left + ic >= cols {
                    return Err(Error::PartitionMismatch("nested rectangle must lie strictly inside".into()));
                }
            }
            Ok(())
        }
        Engine::Collective | Engine::Cgmi => {
            let spec = collective_model(params);
            spec.validate()?;
            if engine == Engine::Cgmi || observable == Observable::GroundState {
                BipartitionSpec::from_fraction(params.spins, params.tau)?;
            }
            if observable == Observable::MeanField {
                MeanFieldEnergy::from_family(&spec.family)?;
            }
            Ok(())
        }
        Engine::Classical => {
            if !params.infinite {
                BipartitionSpec::from_fraction(params.spins, params.tau)?;
            }
            let beta = params.inverse_temperature();
            if !(beta >= 0.0 && beta.is_finite()) {
                return Err(Error::InvalidModel(format!("inverse temperature {beta} must be finite and >= 0")));
            }
            Ok(())
        }
    }
}

pub fn evaluate(
    engine: Engine,
    observable: Observable,
    params: &ModelParams,
    schedule: &ScheduleParams,
    seed: u64,
) -> Result<Measurement> {
    check(engine, observable, params)?;
    match engine {
        Engine::Tensornet => tensornet(observable, params, schedule, seed),
        Engine::Fkt => nested(params, schedule, seed),
        Engine::Matchgate => matchgate(observable, params),
        Engine::Clusters => clusters(params, schedule, seed),
        Engine::Collective => collective(observable, params),
        Engine::Cgmi => cgmi(observable, params),
        Engine::Classical => classical(params),
    }
}

fn tensornet(
    observable: Observable,
    params: &ModelParams,
    schedule: &ScheduleParams,
    seed: u64,
) -> Result<Measurement> {
    let model = lattice_model(Engine::Tensornet, params);
    if observable == Observable::HeatCapacity {
        return Ok(Measurement::exact(vec![("heat_capacity", heat_capacity(&model, params.bond_dimension)?)]));
    }
    let state = dominant_boundary(&model, params.bond_dimension)?;
    // The exact sum factorises over the two border columns.
    let column_states = (model.q as f64).powi(model.rows as i32);
    if column_states <= schedule.exact_bound.min(ENUMERATION_BOUND) {
        let mi = mi_strip_exact(&state)?;
        return Ok(Measurement::exact(vec![
            ("mi", mi.mi_bits),
            ("log_lambda", mi.log_lambda),
            ("discarded_weight", mi.discarded_weight),
            ("plateau", 1.0),
        ]));
    }
    let est = mi_strip_mc(&state, &schedule.to_core(seed))?;
    Ok(Measurement::sampled(
        vec![
            ("mi", est.mean),
            ("log_lambda", state.log_lambda),
            ("discarded_weight", state.discarded_weight),
            ("plateau", est.plateau as u8 as f64),
        ],
        &est,
    ))
}

fn nested(params: &ModelParams, schedule: &ScheduleParams, seed: u64) -> Result<Measurement> {
    let model = lattice_model(Engine::Fkt, params);
    let [top, left, ir, ic] = nested_rectangle(model.rows, model.finite_cols()?, params.inner);
    let est = mi_nested(&model, top, left, ir, ic, &schedule.to_core(seed))?;
    Ok(Measurement::sampled(vec![("mi", est.mean), ("plateau", est.plateau as u8 as f64)], &est))
}

/// Half-cut mutual information of an open lattice. The regions only
/// interact through the two border columns, so `I(A:B)` equals the mutual
/// information of the border spins, whose joint weights are fixed-spin
/// partition functions times the bonds among the border spins themselves.
pub fn matchgate_half_cut_mi(model: &LatticeModelSpec, cut: usize) -> Result<f64> {
    let cols = model.finite_cols()?;
    let rows = model.rows;
    let bonds = model.bonds()?;
    let mut log_w = vec![0.0; 1 << (2 * rows)];
    for (config, slot) in log_w.iter_mut().enumerate() {
        let mut fixed = vec![None; rows * cols];
        for r in 0..rows {
            fixed[r * cols + cut - 1] = Some((config >> r & 1) as u8);
            fixed[r * cols + cut] = Some((config >> (rows + r) & 1) as u8);
        }
        let mut border = 0.0;
        for b in &bonds {
            if let (Some(x), Some(y)) = (fixed[b.a], fixed[b.b]) {
                border -= model.kind.pair_energy(model.q, b.k, x as usize, y as usize)?;
            }
        }
        *slot = ising_partition(model, &fixed)?.ln() + border;
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let side = 1usize << rows;
    let mut alpha = vec![0.0; side];
    let mut beta = vec![0.0; side];
    for (config, w) in weights.iter().enumerate() {
        alpha[config % side] += w / total;
        beta[config / side] += w / total;
    }
    let mi: f64 = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(config, &w)| {
            let p = w / total;
            p * (p / (alpha[config % side] * beta[config / side])).ln()
        })
        .sum();
    Ok((mi / LN_2).max(0.0))
}

fn matchgate(observable: Observable, params: &ModelParams) -> Result<Measurement> {
    let model = lattice_model(Engine::Matchgate, params);
    let cols = model.finite_cols()?;
    if observable == Observable::LogZ {
        let z = ising_partition(&model, &vec![None; model.rows * cols])?;
        return Ok(Measurement::exact(vec![("log_z", z.ln())]));
    }
    let mi = matchgate_half_cut_mi(&model, params.cut.unwrap_or(cols / 2))?;
    Ok(Measurement::exact(vec![("mi", mi)]))
}

fn clusters(params: &ModelParams, schedule: &ScheduleParams, seed: u64) -> Result<Measurement> {
    let run = ClusterRun {
        rows: params.rows,
        cols: params.cols,
        coupling: params.coupling,
        sweeps: schedule.sweeps,
        equilibration: schedule.equilibration.unwrap_or(schedule.sweeps / 10),
        replicas: schedule.chains,
        seed,
    };
    let s = run_clusters(&run)?;
    Ok(Measurement::sampled(
        vec![
            ("clusters_cut", s.clusters_cut.mean),
            ("clusters_cut_spread", s.clusters_cut_spread),
            ("pieces", s.pieces.mean),
            ("abs_magnetization", s.abs_magnetization.mean),
            ("energy", s.energy.mean),
        ],
        &s.clusters_cut,
    ))
}

fn order_code(order: Option<TransitionOrder>) -> f64 {
    match order {
        None => f64::NAN,
        Some(TransitionOrder::Continuous) => 2.0,
        Some(TransitionOrder::FirstOrder) => 1.0,
    }
}

fn collective(observable: Observable, params: &ModelParams) -> Result<Measurement> {
    let spec = collective_model(params);
    match observable {
        Observable::MeanField => {
            let state = mean_field(&spec)?;
            let boundary = critical_temperature(&MeanFieldEnergy::from_family(&spec.family)?)?;
            let mut m = Measurement::exact(vec![
                ("m_x", state.m_x),
                ("m_z", state.m_z),
                ("free_energy", state.free_energy),
                ("ordered", state.is_ordered as u8 as f64),
                ("t_c", boundary.temperature.unwrap_or(f64::NAN)),
                ("jump", boundary.jump),
                ("transition_order", order_code(boundary.order)),
            ]);
            m.boundary = Some(boundary);
            Ok(m)
        }
        Observable::GroundState => {
            let ground = ground_state(&spec)?;
            let part = BipartitionSpec::from_fraction(params.spins, params.tau)?;
            let mi = ground_state_mi(&spec, &part)?;
            Ok(Measurement::exact(vec![("energy", ground.energy), ("m_x", ground.m_x), ("mi", mi)]))
        }
        _ => {
            let obs = partition_and_observables(&spec)?;
            let chi = match spec.family {
                Family::Lmg { .. } => susceptibility(&spec)?,
                Family::Mn { .. } => f64::NAN,
            };
            Ok(Measurement::exact(vec![
                ("log_z", obs.log_z.ln()),
                ("energy", obs.energy),
                ("heat_capacity", obs.heat_capacity),
                ("m_x", obs.m_x),
                ("m_z", obs.m_z),
                ("entropy", obs.entropy_bits),
                ("susceptibility", chi),
            ]))
        }
    }
}

fn cgmi(observable: Observable, params: &ModelParams) -> Result<Measurement> {
    let spec = collective_model(params);
    let part = BipartitionSpec::from_fraction(params.spins, params.tau)?;
    if observable == Observable::GroundState {
        return Ok(Measurement::exact(vec![("mi", ground_state_mi(&spec, &part)?)]));
    }
    let r = mutual_information(&spec, &part)?;
    let mut m = Measurement::exact(vec![
        ("mi", r.mi),
        ("entropy_a", r.entropy_a),
        ("entropy_b", r.entropy_b),
        ("entropy_ab", r.entropy_ab),
    ]);
    for block in &r.spectrum_a {
        for (rank, &eigenvalue) in block.eigenvalues.iter().enumerate() {
            m.spectrum.push(SpectrumRow {
                s1: block.two_s1 as f64 / 2.0,
                rank,
                eigenvalue,
                multiplicity: block.multiplicity,
            });
        }
    }
    Ok(m)
}

fn classical(params: &ModelParams) -> Result<Measurement> {
    let size = if params.infinite { SystemSize::Infinite } else { SystemSize::Finite(params.spins) };
    let r = classical_limit(size, params.inverse_temperature(), params.tau)?;
    let nan = f64::NAN;
    Ok(Measurement::exact(vec![
        ("mi", r.mi),
        ("log_z", r.log_z.unwrap_or(nan)),
        ("entropy_a", r.entropy_a.unwrap_or(nan)),
        ("entropy_b", r.entropy_b.unwrap_or(nan)),
        ("entropy_ab", r.entropy_ab.unwrap_or(nan)),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use spinmi_core::brute::brute_force_mi;
    use spinmi_core::Bipartition;

    #[test]
    fn half_cut_mi_matches_enumeration() {
        for &(rows, cols, k) in &[(2usize, 3usize, 0.4), (3, 4, 0.7), (3, 3, -0.5)] {
            let model = LatticeModelSpec::ising(k, rows, Columns::Finite(cols), VerticalBc::Open);
            let cut = cols / 2;
            let oracle = brute_force_mi(&model, &Bipartition::half_cut(&model, cut).unwrap()).unwrap();
            let mi = matchgate_half_cut_mi(&model, cut).unwrap();
            assert!((mi - oracle).abs() < 1e-10, "{rows}x{cols}: {mi} vs {oracle}");
        }
    }

    #[test]
    fn deterministic_rows_have_zero_error() {
        let params = ModelParams { spins: 8, beta: 2.0, ..ModelParams::default() };
        let m = evaluate(Engine::Cgmi, Observable::Mi, &params, &ScheduleParams::default(), 0).unwrap();
        assert_eq!(m.std_error, 0.0);
        assert!(!m.spectrum.is_empty());
    }

    #[test]
    fn sampled_rows_have_positive_error() {
        let params = ModelParams { rows: 4, cols: Some(8), coupling: 0.0, ..ModelParams::default() };
        let schedule = ScheduleParams { sweeps: 200, chains: 2, ..ScheduleParams::default() };
        let m = evaluate(Engine::Clusters, Observable::ClustersCut, &params, &schedule, 1).unwrap();
        assert_eq!(m.get("clusters_cut"), Some(0.0));
        assert!(m.std_error > 0.0);
    }

    #[test]
    fn matchgate_refuses_periodic_lattices() {
        let params = ModelParams { vertical_bc: Some(VerticalBc::Periodic), rows: 3, ..ModelParams::default() };
        assert!(check(Engine::Matchgate, Observable::Mi, &params).is_err());
    }
}
