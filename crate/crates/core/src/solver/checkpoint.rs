//! Binary trajectory checkpoints with a JSON sidecar.
//!
//! Layout of `<path>` (all little-endian):
//!
//! | offset | size | content                                  |
//! |-------:|-----:|------------------------------------------|
//! | 0      | 8    | magic `OSTRVTRJ`                         |
//! | 8      | 4    | format version (`u32`, currently 1)      |
//! | 12     | 8    | `n_points` (`u64`)                       |
//! | 20     | 8    | half-length `L` (`f64`)                  |
//! | 28     | 1    | sign (`0` for `+`, `1` for `-`)          |
//! | 29     | 8    | `s` (`f64`)                              |
//! | 37     | 8    | `dt` (`f64`)                             |
//! | 45     | 8    | horizon `T` (`f64`)                      |
//! | 53     | 8    | slice count `M + 1` (`u64`)              |
//! | 61     | …    | per slice, `n_points` pairs `(re, im)` of `f64` in FFT order |
//!
//! The sidecar `<path>.json` repeats the header fields and the slice shape.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_spectral::{make_grid, SpectralField};
use crate::io::write_atomic;
use crate::norms::Trajectory;
use crate::propagator::SignChoice;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"OSTRVTRJ";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER_BYTES: usize = 61;

/// A trajectory together with the regularity index it was computed for.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub trajectory: Trajectory,
    pub s: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Sidecar {
    format: String,
    version: u32,
    byte_order: String,
    header_bytes: usize,
    n_points: usize,
    half_length: f64,
    sign: SignChoice,
    s: f64,
    dt: f64,
    horizon: f64,
    slices: usize,
    slice_shape: [usize; 2],
    element: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn write_checkpoint(path: &Path, traj: &Trajectory, s: f64) -> Result<()> {
    let n = traj.grid().n_points();
    let mut buf = Vec::with_capacity(HEADER_BYTES + traj.len() * n * 16);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&traj.grid().half_length().to_le_bytes());
    buf.push(match traj.sign() {
        SignChoice::Plus => 0,
        SignChoice::Minus => 1,
    });
    buf.extend_from_slice(&s.to_le_bytes());
    buf.extend_from_slice(&traj.dt().to_le_bytes());
    buf.extend_from_slice(&traj.horizon().to_le_bytes());
    buf.extend_from_slice(&(traj.len() as u64).to_le_bytes());
    debug_assert_eq!(buf.len(), HEADER_BYTES);
    for state in traj.states() {
        for c in state.spectral() {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    let sidecar = Sidecar {
        format: "ostrovsky-trajectory".into(),
        version: CHECKPOINT_VERSION,
        byte_order: "little-endian".into(),
        header_bytes: HEADER_BYTES,
        n_points: n,
        half_length: traj.grid().half_length(),
        sign: traj.sign(),
        s,
        dt: traj.dt(),
        horizon: traj.horizon(),
        slices: traj.len(),
        slice_shape: [n, 2],
        element: "f64".into(),
    };
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Format(e.to_string()))?;
    write_atomic(path, &buf)?;
    write_atomic(&sidecar_path(path), json.as_bytes())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let out = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(out)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("length 4")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("length 8")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("length 8")))
    }
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path)?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = r.u64()? as usize;
    let half_length = r.f64()?;
    let sign = match r.take(1)?[0] {
        0 => SignChoice::Plus,
        1 => SignChoice::Minus,
        other => return Err(Error::Format(format!("bad sign byte {other}"))),
    };
    let s = r.f64()?;
    let dt = r.f64()?;
    let _horizon = r.f64()?;
    let slices = r.u64()? as usize;
    let expected = HEADER_BYTES + slices * n * 16;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let grid = make_grid(n, half_length)?;
    let mut states = Vec::with_capacity(slices);
    for _ in 0..slices {
        let mut spec = Vec::with_capacity(n);
        for _ in 0..n {
            let re = r.f64()?;
            let im = r.f64()?;
            spec.push(Complex64::new(re, im));
        }
        states.push(SpectralField::from_spectral_unchecked(&grid, spec));
    }
    Ok(Checkpoint {
        trajectory: Trajectory::new(states, dt, sign)?,
        s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::apply_group;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = make_grid(64, 8.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| x * (-x * x).exp());
        let states = (0..5)
            .map(|m| apply_group(&f, 0.1 * m as f64, SignChoice::Minus).unwrap())
            .collect();
        let traj = Trajectory::new(states, 0.1, SignChoice::Minus).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.traj");
        write_checkpoint(&path, &traj, 0.85).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back.s, 0.85);
        assert_eq!(back.trajectory.sign(), SignChoice::Minus);
        for (a, b) in traj.states().iter().zip(back.trajectory.states()) {
            assert_eq!(a.spectral(), b.spectral());
        }
        let side: Sidecar =
            serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(side.slices, 5);
        assert_eq!(side.slice_shape, [64, 2]);
        let bytes = fs::read(&path).unwrap();
        assert_eq!(bytes.len(), HEADER_BYTES + 5 * 64 * 16);
        fs::write(&path, &bytes[..100]).unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Format(_))));
    }
}
