//! Lattice model description, bipartitions and boundary configurations.
//!
//! Sites are indexed row-major, `index = row * cols + col`. Spin states are
//! integers in `0..q`; for the Ising model state 0 is `+1` and state 1 is `-1`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ising,
    Potts,
    Clock,
}

impl ModelKind {
    /// Dimensionless bond energy (inverse temperature absorbed into `k`).
    pub fn pair_energy(self, q: usize, k: f64, si: usize, sj: usize) -> Result<f64> {
        for s in [si, sj] {
            if s >= q {
                return Err(Error::StateOutOfRange { state: s, q });
            }
        }
        Ok(match self {
            ModelKind::Ising => -k * ising_sign(si) * ising_sign(sj),
            ModelKind::Potts => {
                if si == sj {
                    -k
                } else {
                    0.0
                }
            }
            ModelKind::Clock => {
                let angle = 2.0 * PI * (si as f64 - sj as f64) / q as f64;
                -k * angle.cos()
            }
        })
    }
}

/// Ising spin value of a state index.
pub fn ising_sign(state: usize) -> f64 {
    if state == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerticalBc {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Columns {
    Finite(usize),
    Infinite,
}

/// Couplings; per-bond arrays use `horizontal[r * (cols - 1) + c]` for the bond
/// `(r, c)-(r, c + 1)` and `vertical[r * cols + c]` for `(r, c)-(r + 1 mod rows, c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Couplings {
    Uniform(f64),
    PerBond { horizontal: Vec<f64>, vertical: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeModelSpec {
    pub kind: ModelKind,
    pub q: usize,
    pub couplings: Couplings,
    pub rows: usize,
    pub cols: Columns,
    pub vertical_bc: VerticalBc,
}

/// One bond between two sites with its coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub k: f64,
}

impl LatticeModelSpec {
    pub fn ising(k: f64, rows: usize, cols: Columns, vertical_bc: VerticalBc) -> Self {
        LatticeModelSpec { kind: ModelKind::Ising, q: 2, couplings: Couplings::Uniform(k), rows, cols, vertical_bc }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(Error::InvalidModel(format!("q = {} must be at least 2", self.q)));
        }
        if self.kind == ModelKind::Ising && self.q != 2 {
            return Err(Error::InvalidModel("the Ising model has q = 2".into()));
        }
        if self.rows == 0 {
            return Err(Error::InvalidModel("rows must be positive".into()));
        }
        match (&self.couplings, self.cols) {
            (Couplings::Uniform(k), _) => {
                if k.is_nan() {
                    return Err(Error::InvalidModel("coupling is NaN".into()));
                }
            }
            (Couplings::PerBond { .. }, Columns::Infinite) => {
                return Err(Error::InvalidModel("per-bond couplings need a finite column count".into()));
            }
            (Couplings::PerBond { horizontal, vertical }, Columns::Finite(cols)) => {
                let vrows = self.vertical_rows();
                if horizontal.len() != self.rows * cols.saturating_sub(1) || vertical.len() != vrows * cols {
                    return Err(Error::InvalidModel("per-bond coupling arrays have the wrong length".into()));
                }
                if horizontal.iter().chain(vertical).any(|k| k.is_nan()) {
                    return Err(Error::InvalidModel("coupling is NaN".into()));
                }
            }
        }
        if let Columns::Finite(0) = self.cols {
            return Err(Error::InvalidModel("cols must be positive".into()));
        }
        Ok(())
    }

    /// Number of vertical bonds per column.
    pub fn vertical_rows(&self) -> usize {
        match self.vertical_bc {
            VerticalBc::Open => self.rows - 1,
            VerticalBc::Periodic if self.rows > 2 => self.rows,
            // Two rows on a cylinder share a single bond pair; keep it single.
            VerticalBc::Periodic => self.rows - 1,
        }
    }

    /// Uniform coupling, or an error for per-bond couplings.
    pub fn uniform_k(&self) -> Result<f64> {
        match self.couplings {
            Couplings::Uniform(k) => Ok(k),
            Couplings::PerBond { .. } => Err(Error::InvalidModel("expected a uniform coupling".into())),
        }
    }

    /// `E(si, sj)` with the uniform coupling.
    pub fn bond_energy(&self, si: usize, sj: usize) -> Result<f64> {
        self.kind.pair_energy(self.q, self.uniform_k()?, si, sj)
    }

    pub fn finite_cols(&self) -> Result<usize> {
        match self.cols {
            Columns::Finite(c) => Ok(c),
            Columns::Infinite => Err(Error::InvalidModel("expected a finite column count".into())),
        }
    }

    pub fn num_sites(&self) -> Result<usize> {
        Ok(self.rows * self.finite_cols()?)
    }

    /// All bonds of a finite lattice.
    pub fn bonds(&self) -> Result<Vec<Bond>> {
        self.validate()?;
        let cols = self.finite_cols()?;
        let rows = self.rows;
        let mut out = Vec::new();
        for r in 0..rows {
            for c in 0..cols.saturating_sub(1) {
                let k = match &self.couplings {
                    Couplings::Uniform(k) => *k,
                    Couplings::PerBond { horizontal, .. } => horizontal[r * (cols - 1) + c],
                };
                out.push(Bond { a: r * cols + c, b: r * cols + c + 1, k });
            }
        }
        for r in 0..self.vertical_rows() {
            for c in 0..cols {
                let k = match &self.couplings {
                    Couplings::Uniform(k) => *k,
                    Couplings::PerBond { vertical, .. } => vertical[r * cols + c],
                };
                out.push(Bond { a: r * cols + c, b: ((r + 1) % rows) * cols + c, k });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    HalfCut,
    Nested,
}

/// Split of a finite lattice into regions A and B; every site appears in
/// exactly one of the four lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bipartition {
    pub geometry: Geometry,
    pub border_a: Vec<usize>,
    pub border_b: Vec<usize>,
    pub interior_a: Vec<usize>,
    pub interior_b: Vec<usize>,
}

impl Bipartition {
    /// A holds columns `0..cut`, B holds `cut..cols`.
    pub fn half_cut(model: &LatticeModelSpec, cut: usize) -> Result<Self> {
        let cols = model.finite_cols()?;
        if cut == 0 || cut >= cols {
            return Err(Error::PartitionMismatch(format!("cut {cut} outside 1..{cols}")));
        }
        Self::from_region(model, Geometry::HalfCut, |_, c| c < cut)
    }

    /// A is the `inner_rows x inner_cols` rectangle with top-left corner `(top, left)`.
    pub fn nested(
        model: &LatticeModelSpec,
        top: usize,
        left: usize,
        inner_rows: usize,
        inner_cols: usize,
    ) -> Result<Self> {
        let cols = model.finite_cols()?;
        if inner_rows == 0 || inner_cols == 0 || top + inner_rows > model.rows || left + inner_cols > cols {
            return Err(Error::PartitionMismatch("inner rectangle outside the lattice".into()));
        }
        Self::from_region(model, Geometry::Nested, |r, c| {
            r >= top && r < top + inner_rows && c >= left && c < left + inner_cols
        })
    }

    pub fn from_region(
        model: &LatticeModelSpec,
        geometry: Geometry,
        in_a: impl Fn(usize, usize) -> bool,
    ) -> Result<Self> {
        let cols = model.finite_cols()?;
        let n = model.rows * cols;
        let is_a: Vec<bool> = (0..n).map(|i| in_a(i / cols, i % cols)).collect();
        let mut touches = vec![false; n];
        for bond in model.bonds()? {
            if is_a[bond.a] != is_a[bond.b] {
                touches[bond.a] = true;
                touches[bond.b] = true;
            }
        }
        // Boundary lists run top-to-bottom, then left-to-right.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (i % cols, i / cols));
        let pick = |a: bool, border: bool| -> Vec<usize> {
            let src: Vec<usize> = if border { order.clone() } else { (0..n).collect() };
            src.into_iter().filter(|&i| is_a[i] == a && touches[i] == border).collect()
        };
        let part = Bipartition {
            geometry,
            border_a: pick(true, true),
            border_b: pick(false, true),
            interior_a: pick(true, false),
            interior_b: pick(false, false),
        };
        if part.border_a.is_empty() || part.border_b.is_empty() {
            return Err(Error::PartitionMismatch("regions A and B share no bond".into()));
        }
        Ok(part)
    }

    pub fn sites_a(&self) -> Vec<usize> {
        self.border_a.iter().chain(&self.interior_a).copied().collect()
    }

    pub fn sites_b(&self) -> Vec<usize> {
        self.border_b.iter().chain(&self.interior_b).copied().collect()
    }

    pub fn num_sites(&self) -> usize {
        self.border_a.len() + self.border_b.len() + self.interior_a.len() + self.interior_b.len()
    }
}

/// Spin states on the A border (`alpha`) and the B border (`beta`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundaryConfig {
    pub alpha: Vec<u8>,
    pub beta: Vec<u8>,
}

const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

impl BoundaryConfig {
    /// Base-q digits, alpha then beta, separated by `|`.
    pub fn encode(&self, q: usize) -> Result<String> {
        if q > DIGITS.len() {
            return Err(Error::InvalidModel(format!("q = {q} too large for digit encoding")));
        }
        let enc = |v: &[u8]| -> Result<String> {
            v.iter()
                .map(|&s| {
                    if (s as usize) < q {
                        Ok(DIGITS[s as usize] as char)
                    } else {
                        Err(Error::StateOutOfRange { state: s as usize, q })
                    }
                })
                .collect()
        };
        Ok(format!("{}|{}", enc(&self.alpha)?, enc(&self.beta)?))
    }

    pub fn decode(text: &str, q: usize) -> Result<Self> {
        let (a, b) = text.split_once('|').ok_or_else(|| Error::InvalidModel(format!("missing '|' in {text:?}")))?;
        let dec = |s: &str| -> Result<Vec<u8>> {
            s.bytes()
                .map(|ch| match DIGITS.iter().position(|&d| d == ch) {
                    Some(v) if v < q => Ok(v as u8),
                    _ => Err(Error::InvalidModel(format!("bad digit {:?} for q = {q}", ch as char))),
                })
                .collect()
        };
        Ok(BoundaryConfig { alpha: dec(a)?, beta: dec(b)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bond_energy_examples() {
        let ising = LatticeModelSpec::ising(0.5, 2, Columns::Finite(2), VerticalBc::Open);
        assert_eq!(ising.bond_energy(0, 0).unwrap(), -0.5);
        assert_eq!(ising.bond_energy(0, 1).unwrap(), 0.5);
        assert_eq!(ModelKind::Potts.pair_energy(3, 1.0, 0, 2).unwrap(), 0.0);
        assert_eq!(ModelKind::Potts.pair_energy(3, 1.0, 2, 2).unwrap(), -1.0);
        assert!(ModelKind::Clock.pair_energy(4, 1.0, 0, 1).unwrap().abs() < 1e-15);
        assert!(ModelKind::Clock.pair_energy(4, 1.0, 0, 4).is_err());
    }

    #[test]
    fn half_cut_borders_run_top_to_bottom() {
        let m = LatticeModelSpec::ising(0.3, 3, Columns::Finite(4), VerticalBc::Open);
        let p = Bipartition::half_cut(&m, 2).unwrap();
        assert_eq!(p.border_a, vec![1, 5, 9]);
        assert_eq!(p.border_b, vec![2, 6, 10]);
        assert_eq!(p.interior_a, vec![0, 4, 8]);
        assert_eq!(p.num_sites(), 12);
    }

    #[test]
    fn nested_partition_covers_lattice() {
        let m = LatticeModelSpec::ising(0.3, 4, Columns::Finite(4), VerticalBc::Open);
        let p = Bipartition::nested(&m, 1, 1, 2, 2).unwrap();
        assert_eq!(p.border_a.len(), 4);
        assert!(p.interior_a.is_empty());
        assert_eq!(p.border_b.len(), 8);
        assert_eq!(p.interior_b.len(), 4);
    }

    #[test]
    fn boundary_round_trip() {
        let cfg = BoundaryConfig { alpha: vec![0, 1, 2], beta: vec![2, 2] };
        let s = cfg.encode(3).unwrap();
        assert_eq!(s, "012|22");
        assert_eq!(BoundaryConfig::decode(&s, 3).unwrap(), cfg);
        assert!(BoundaryConfig::decode("013|0", 3).is_err());
    }
}
