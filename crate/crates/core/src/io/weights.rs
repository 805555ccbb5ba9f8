//! Binary weight container: the magic line `AMGW1\n`, then for each tensor a
//! little-endian `u32` name length, the UTF-8 name, a `u32` rank, one `u32`
//! per dimension and the values as little-endian `f64`. Entries follow
//! insertion order and run to end of stream.

use std::io::{ErrorKind, Read, Write};

use crate::error::{Error, Result};
use crate::velocity::{Tensor, WeightContainer};

pub const MAGIC: &[u8; 6] = b"AMGW1\n";

pub fn write_weights<W: Write>(mut w: W, weights: &WeightContainer) -> Result<()> {
    w.write_all(MAGIC)?;
    for (name, tensor) in weights.iter() {
        w.write_all(&u32_len(name.len())?.to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&u32_len(tensor.shape.len())?.to_le_bytes())?;
        for &d in &tensor.shape {
            w.write_all(&u32_len(d)?.to_le_bytes())?;
        }
        for v in &tensor.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn u32_len(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::InvalidSize(format!("{n} does not fit in 32 bits")))
}

/// Fills `buf`; `Ok(false)` on a clean end of stream before the first byte.
fn fill<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<bool> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) if got == 0 => return Ok(false),
            Ok(0) => return Err(Error::Truncated(what.to_string())),
            Ok(n) => got += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(true)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    if buf.is_empty() || fill(r, buf, what)? {
        Ok(())
    } else {
        Err(Error::Truncated(what.to_string()))
    }
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_weights<R: Read>(mut r: R) -> Result<WeightContainer> {
    let mut magic = [0u8; 6];
    match fill(&mut r, &mut magic, "magic") {
        Ok(true) if &magic == MAGIC => {}
        Ok(_) | Err(Error::Truncated(_)) => return Err(Error::BadMagic),
        Err(e) => return Err(e),
    }
    let mut out = WeightContainer::new();
    loop {
        let mut len = [0u8; 4];
        if !fill(&mut r, &mut len, "entry header")? {
            return Ok(out);
        }
        let mut name = vec![0u8; u32::from_le_bytes(len) as usize];
        read_exact(&mut r, &mut name, "tensor name")?;
        let name = String::from_utf8(name).map_err(|_| Error::WeightMismatch {
            path: "<name>".into(),
            reason: "tensor name is not UTF-8".into(),
        })?;
        let rank = read_u32(&mut r, &name)? as usize;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(read_u32(&mut r, &name)? as usize);
        }
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::WeightMismatch {
                path: name.clone(),
                reason: "shape overflows".into(),
            })?;
        let mut values = Vec::with_capacity(count.min(1 << 20));
        let mut b = [0u8; 8];
        for _ in 0..count {
            read_exact(&mut r, &mut b, &name)?;
            let v = f64::from_le_bytes(b);
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
            values.push(v);
        }
        let tensor = Tensor::new(shape, values).map_err(|e| Error::WeightMismatch {
            path: name.clone(),
            reason: e.to_string(),
        })?;
        out.insert(name, tensor);
    }
}
