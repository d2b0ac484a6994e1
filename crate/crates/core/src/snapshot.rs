//! Binary checkpoint of a network's synapses.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic    b"NEMOSNAP"
//! version  u32 (= 1)
//! areas    u32
//!   per area:  n u32, support_len u32, support_len x u32
//! conns    u32
//!   per connectome: src u32, dst u32, count u64,
//!                   count x (src u32, dst u32, weight f64), sorted by (src, dst)
//! ```
//!
//! Restoring requires a network with the same areas and fibers; the firing
//! state is not part of the snapshot.

use std::io::{Read, Write};

use crate::error::{NemoError, Result};
use crate::network::{AreaId, Network};

const MAGIC: &[u8; 8] = b"NEMOSNAP";
pub const VERSION: u32 = 1;

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn write_snapshot(net: &Network, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(&mut w, VERSION)?;
    put_u32(&mut w, net.area_count() as u32)?;
    for a in 0..net.area_count() {
        let id = AreaId(a);
        put_u32(&mut w, net.params(id).n)?;
        let support = net.support(id);
        put_u32(&mut w, support.len() as u32)?;
        for &j in support {
            put_u32(&mut w, j)?;
        }
    }
    put_u32(&mut w, net.connectomes().len() as u32)?;
    for c in net.connectomes() {
        put_u32(&mut w, c.src().0 as u32)?;
        put_u32(&mut w, c.dst().0 as u32)?;
        let mut triples: Vec<(u32, u32, f64)> = c.synapses().collect();
        triples.sort_unstable_by_key(|t| (t.0, t.1));
        w.write_all(&(triples.len() as u64).to_le_bytes())?;
        for (i, j, wt) in triples {
            put_u32(&mut w, i)?;
            put_u32(&mut w, j)?;
            w.write_all(&wt.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Replaces the synapses and support sets of `net` with the snapshot's.
pub fn read_snapshot(net: &mut Network, mut r: impl Read) -> Result<()> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NemoError::Snapshot("bad magic".into()));
    }
    let version = get_u32(&mut r)?;
    if version != VERSION {
        return Err(NemoError::Snapshot(format!(
            "unsupported version {version}"
        )));
    }
    let areas = get_u32(&mut r)? as usize;
    if areas != net.area_count() {
        return Err(NemoError::Snapshot(format!(
            "snapshot has {areas} areas, network has {}",
            net.area_count()
        )));
    }
    let mut supports = Vec::with_capacity(areas);
    for a in 0..areas {
        let n = get_u32(&mut r)?;
        if n != net.params(AreaId(a)).n {
            return Err(NemoError::Snapshot(format!("area {a} size mismatch")));
        }
        let len = get_u32(&mut r)? as usize;
        let mut s = Vec::with_capacity(len);
        for _ in 0..len {
            let j = get_u32(&mut r)?;
            if j >= n {
                return Err(NemoError::Snapshot(format!(
                    "support neuron {j} out of range"
                )));
            }
            s.push(j);
        }
        supports.push(s);
    }
    let conns = get_u32(&mut r)? as usize;
    if conns != net.connectomes().len() {
        return Err(NemoError::Snapshot("connectome count mismatch".into()));
    }
    net.clear_synapses();
    for (a, s) in supports.iter().enumerate() {
        net.set_support(AreaId(a), s);
    }
    for c in net.connectomes_mut() {
        let src = get_u32(&mut r)? as usize;
        let dst = get_u32(&mut r)? as usize;
        if src != c.src().0 || dst != c.dst().0 {
            return Err(NemoError::Snapshot(format!(
                "fiber {src}->{dst} out of order"
            )));
        }
        let count = get_u64(&mut r)?;
        for _ in 0..count {
            let i = get_u32(&mut r)?;
            let j = get_u32(&mut r)?;
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            c.set_weight(i, j, f64::from_le_bytes(b))
                .map_err(|e| NemoError::Snapshot(e.to_string()))?;
        }
    }
    Ok(())
}
