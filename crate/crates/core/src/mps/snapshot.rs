//! Binary state snapshots.
//!
//! Layout of the binary file, all integers and floats little-endian:
//!
//! | field                 | type                                   |
//! |-----------------------|----------------------------------------|
//! | magic                 | 4 bytes `MPS1`                         |
//! | scalar mode           | u32, 0 = real, 1 = complex             |
//! | site count `n`        | u64                                    |
//! | site dims             | `n` x (u64 left, u64 phys, u64 right)  |
//! | bond weights          | `n-1` x (u64 len, len x f64)           |
//! | site elements         | per site, row-major `(left, phys, right)`; complex as (re, im) |
//!
//! The JSON sidecar ([`SnapshotSidecar`]) holds the layout labels, the scalar
//! mode and the per-bond orthonormality flags. Reading back both files
//! reproduces the state bit for bit.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{BondStatus, BondWeights, Chain, ChainData, MpsError, MpsResult, MpsState, SiteLabel, SiteTensor};
use crate::tensor::{ScalarMode, Scalar, DEFAULT_TRUNCATION};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"MPS1";

/// Sites beyond this count are rejected as corrupt.
const MAX_SITES: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSidecar {
    pub mode: ScalarMode,
    pub layout: Vec<SiteLabel>,
    pub status: Vec<BondStatus>,
}

/// Writes the binary container to `out` and returns the sidecar to store
/// next to it.
pub fn write_snapshot<W: Write>(state: &MpsState, out: &mut W) -> MpsResult<SnapshotSidecar> {
    out.write_all(SNAPSHOT_MAGIC)?;
    let mode_tag: u32 = match state.mode() {
        ScalarMode::Real => 0,
        ScalarMode::Complex => 1,
    };
    out.write_all(&mode_tag.to_le_bytes())?;
    out.write_all(&(state.len() as u64).to_le_bytes())?;
    for m in 0..state.len() {
        let (l, p, r) = state.site_dims(m);
        for x in [l, p, r] {
            out.write_all(&(x as u64).to_le_bytes())?;
        }
    }
    for b in 0..state.bond_count() {
        let w = state.bond_weights(b);
        out.write_all(&(w.len() as u64).to_le_bytes())?;
        for x in w.as_slice() {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    match &state.chain {
        ChainData::Real(c) => {
            for s in &c.sites {
                for x in &s.data {
                    out.write_all(&x.to_le_bytes())?;
                }
            }
        }
        ChainData::Complex(c) => {
            for s in &c.sites {
                for z in &s.data {
                    out.write_all(&z.re.to_le_bytes())?;
                    out.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(SnapshotSidecar { mode: state.mode(), layout: state.layout.clone(), status: state.status.clone() })
}

/// Reads a container written by [`write_snapshot`] together with its sidecar.
pub fn read_snapshot<R: Read>(input: &mut R, sidecar: &SnapshotSidecar) -> MpsResult<MpsState> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(MpsError::Snapshot("bad magic".into()));
    }
    let mode = match read_u32(input)? {
        0 => ScalarMode::Real,
        1 => ScalarMode::Complex,
        t => return Err(MpsError::Snapshot(format!("unknown scalar mode tag {t}"))),
    };
    if mode != sidecar.mode {
        return Err(MpsError::Snapshot("sidecar mode disagrees with the container".into()));
    }
    let n = read_u64(input)?;
    if n == 0 || n > MAX_SITES {
        return Err(MpsError::Snapshot(format!("implausible site count {n}")));
    }
    let n = n as usize;
    if sidecar.layout.len() != n || sidecar.status.len() != n - 1 {
        return Err(MpsError::Snapshot("sidecar length disagrees with the container".into()));
    }
    let mut dims = Vec::with_capacity(n);
    for _ in 0..n {
        let (l, p, r) = (read_u64(input)? as usize, read_u64(input)? as usize, read_u64(input)? as usize);
        dims.push((l, p, r));
    }
    let mut bonds = Vec::with_capacity(n - 1);
    for _ in 0..n - 1 {
        let len = read_u64(input)? as usize;
        if len > MAX_SITES as usize * 1024 {
            return Err(MpsError::Snapshot(format!("implausible bond length {len}")));
        }
        let mut w = Vec::with_capacity(len);
        for _ in 0..len {
            w.push(read_f64(input)?);
        }
        bonds.push(BondWeights(w));
    }
    let chain = match mode {
        ScalarMode::Real => ChainData::Real(read_sites(input, &dims, bonds, |i| read_f64(i))?),
        ScalarMode::Complex => {
            ChainData::Complex(read_sites(input, &dims, bonds, |i| Ok(C64::new(read_f64(i)?, read_f64(i)?)))?)
        }
    };
    let mut state = MpsState {
        chain,
        layout: sidecar.layout.clone(),
        status: sidecar.status.clone(),
        accountant: Default::default(),
        truncation: DEFAULT_TRUNCATION,
        state_vector_cap: super::DEFAULT_STATE_VECTOR_CAP,
    };
    state.refresh_live();
    Ok(state)
}

fn read_sites<R: Read, T: Scalar>(
    input: &mut R,
    dims: &[(usize, usize, usize)],
    bonds: Vec<BondWeights>,
    mut elem: impl FnMut(&mut R) -> MpsResult<T>,
) -> MpsResult<Chain<T>> {
    let mut sites = Vec::with_capacity(dims.len());
    for &(l, p, r) in dims {
        let len = l.checked_mul(p).and_then(|x| x.checked_mul(r)).ok_or_else(|| MpsError::Snapshot("dims overflow".into()))?;
        let mut data = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            data.push(elem(input)?);
        }
        sites.push(SiteTensor::new(l, p, r, data).map_err(|e| MpsError::Snapshot(e.to_string()))?);
    }
    Chain::from_parts(sites, bonds).map_err(|e| MpsError::Snapshot(e.to_string()))
}

fn read_u32<R: Read>(r: &mut R) -> MpsResult<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> MpsResult<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> MpsResult<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
