//! Binary boundary-state cache: little-endian, row-major site tensors.
//!
//! Layout: magic, version, model header, then per row `left`, `right` and
//! `q * left * right` values.

use super::mps::{Mps, MpsSite};
use super::strip::{BoundaryState, TransferOperator};
use crate::error::{Error, Result};
use crate::model::{Columns, Couplings, LatticeModelSpec, ModelKind, VerticalBc};
use std::io::{Read, Write};

const MAGIC: &[u8; 8] = b"SPNMIBS\0";
const VERSION: u32 = 1;

fn put_u32(out: &mut impl Write, x: u32) -> Result<()> {
    Ok(out.write_all(&x.to_le_bytes())?)
}

fn put_f64(out: &mut impl Write, x: f64) -> Result<()> {
    Ok(out.write_all(&x.to_le_bytes())?)
}

fn get_u32(input: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64(input: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn kind_code(kind: ModelKind) -> u32 {
    match kind {
        ModelKind::Ising => 0,
        ModelKind::Potts => 1,
        ModelKind::Clock => 2,
    }
}

pub fn write_boundary_state(state: &BoundaryState, out: &mut impl Write) -> Result<()> {
    let op = &state.op;
    out.write_all(MAGIC)?;
    put_u32(out, VERSION)?;
    put_u32(out, kind_code(op.kind))?;
    put_u32(out, op.q as u32)?;
    put_u32(out, op.rows as u32)?;
    put_u32(out, u32::from(op.vertical_bc == VerticalBc::Periodic))?;
    put_f64(out, op.coupling)?;
    put_f64(out, op.energy_shift)?;
    put_u32(out, state.bond_dimension as u32)?;
    put_u32(out, state.iterations as u32)?;
    put_f64(out, state.log_lambda)?;
    put_f64(out, state.discarded_weight)?;
    for site in &state.mps.sites {
        put_u32(out, site.left as u32)?;
        put_u32(out, site.right as u32)?;
        for &x in &site.data {
            put_f64(out, x)?;
        }
    }
    Ok(())
}

pub fn read_boundary_state(input: &mut impl Read) -> Result<BoundaryState> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io("not a boundary-state cache".into()));
    }
    let version = get_u32(input)?;
    if version != VERSION {
        return Err(Error::Io(format!("unsupported cache version {version}")));
    }
    let kind = match get_u32(input)? {
        0 => ModelKind::Ising,
        1 => ModelKind::Potts,
        2 => ModelKind::Clock,
        other => return Err(Error::Io(format!("unknown model code {other}"))),
    };
    let q = get_u32(input)? as usize;
    let rows = get_u32(input)? as usize;
    let vertical_bc = if get_u32(input)? == 1 { VerticalBc::Periodic } else { VerticalBc::Open };
    let coupling = get_f64(input)?;
    let energy_shift = get_f64(input)?;
    let bond_dimension = get_u32(input)? as usize;
    let iterations = get_u32(input)? as usize;
    let log_lambda = get_f64(input)?;
    let discarded_weight = get_f64(input)?;
    let model = LatticeModelSpec {
        kind,
        q,
        couplings: Couplings::Uniform(coupling),
        rows,
        cols: Columns::Infinite,
        vertical_bc,
    };
    let op = TransferOperator::with_energy_shift(&model, energy_shift)?;
    let mut sites = Vec::with_capacity(rows);
    let mut expected_left = 1;
    for row in 0..rows {
        let left = get_u32(input)? as usize;
        let right = get_u32(input)? as usize;
        let last = row + 1 == rows;
        if left != expected_left || (last && right != 1) || right == 0 || right > bond_dimension.max(1) {
            return Err(Error::Io(format!("cache shape mismatch at row {row}")));
        }
        let mut site = MpsSite::zeros(q, left, right);
        for x in &mut site.data {
            *x = get_f64(input)?;
        }
        sites.push(site);
        expected_left = right;
    }
    Ok(BoundaryState { op, bond_dimension, mps: Mps { sites }, log_lambda, iterations, discarded_weight })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensornet::dominant_boundary;

    #[test]
    fn round_trip_is_exact() {
        let model = LatticeModelSpec::ising(0.42, 5, Columns::Infinite, VerticalBc::Periodic);
        let state = dominant_boundary(&model, 8).unwrap();
        let mut buf = Vec::new();
        write_boundary_state(&state, &mut buf).unwrap();
        let back = read_boundary_state(&mut buf.as_slice()).unwrap();
        assert_eq!(back, state);
    }

    #[test]
    fn corrupt_header_is_rejected() {
        let model = LatticeModelSpec::ising(0.2, 3, Columns::Infinite, VerticalBc::Open);
        let state = dominant_boundary(&model, 4).unwrap();
        let mut buf = Vec::new();
        write_boundary_state(&state, &mut buf).unwrap();
        buf[0] = b'X';
        assert!(read_boundary_state(&mut buf.as_slice()).is_err());
        let mut short = Vec::new();
        write_boundary_state(&state, &mut short).unwrap();
        short.truncate(short.len() - 3);
        assert!(read_boundary_state(&mut short.as_slice()).is_err());
    }
}
