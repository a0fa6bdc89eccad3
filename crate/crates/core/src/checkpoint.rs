//! Binary snapshots that restore a [`State`] bit for bit.
//!
//! Layout (little endian): magic `EMHDCKP1`, `n: u64`, `half_width: f64`,
//! `t: f64`, `step: u64`, a parameter flag byte followed by
//! `lambda, beta, gamma, zeta: f64, m: u64` when set, then for `a` and `b`
//! in turn the `n^2` samples and the `n (n/2 + 1)` coefficients as
//! `(re, im)` pairs.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::params::ParamSet;
use crate::state::State;

pub const MAGIC: &[u8; 8] = b"EMHDCKP1";

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub state: State,
    pub step: u64,
    pub params: Option<ParamSet>,
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_field(out: &mut Vec<u8>, f: &Field) {
    for v in f.values() {
        put_f64(out, *v);
    }
    for c in f.coeffs() {
        put_f64(out, c.re);
        put_f64(out, c.im);
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let g = self.state.grid();
        let mut out = Vec::with_capacity(64 + 2 * 8 * (g.len() + 2 * g.spectral_len()));
        out.extend_from_slice(MAGIC);
        put_u64(&mut out, g.n() as u64);
        put_f64(&mut out, g.half_width());
        put_f64(&mut out, self.state.t);
        put_u64(&mut out, self.step);
        match &self.params {
            Some(p) => {
                out.push(1);
                for v in [p.lambda, p.beta, p.gamma, p.zeta] {
                    put_f64(&mut out, v);
                }
                put_u64(&mut out, p.m);
            }
            None => out.push(0),
        }
        put_field(&mut out, &self.state.a);
        put_field(&mut out, &self.state.b);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let n = usize::try_from(r.u64()?).map_err(|_| Error::Checkpoint("grid size overflows".into()))?;
        let half_width = r.f64()?;
        let grid = Grid::new(n, half_width).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let t = r.f64()?;
        let step = r.u64()?;
        let params = match r.take(1)?[0] {
            0 => None,
            1 => Some(ParamSet {
                lambda: r.f64()?,
                beta: r.f64()?,
                gamma: r.f64()?,
                zeta: r.f64()?,
                m: r.u64()?,
            }),
            f => return Err(Error::Checkpoint(format!("bad parameter flag {f}"))),
        };
        let a = r.field(grid)?;
        let b = r.field(grid)?;
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let state = State::new(a, b, t).map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(Self { state, step, params })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn field(&mut self, grid: Grid) -> Result<Field> {
        let need = 8 * (grid.len() + 2 * grid.spectral_len());
        if self.bytes.len() - self.pos < need {
            return Err(Error::Checkpoint("truncated".into()));
        }
        let values = (0..grid.len()).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        let coeffs = (0..grid.spectral_len())
            .map(|_| Ok(Complex64::new(self.f64()?, self.f64()?)))
            .collect::<Result<Vec<_>>>()?;
        Field::from_parts(grid, values, coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let g = Grid::new(16, 0.7).unwrap();
        let a = Field::from_fn(g, |x, y| (3.0 * x).sin() * (y * 1.1).cos() + 1e-300);
        let b = Field::from_fn(g, |x, y| (x * y).exp() - 1.0 / 3.0);
        Checkpoint {
            state: State::new(a, b, 0.1 + 0.2).unwrap(),
            step: 42,
            params: Some(ParamSet::new(8.0, 3.5, 1.2, 1.47).unwrap()),
        }
    }

    fn bits(f: &Field) -> Vec<u64> {
        f.values()
            .iter()
            .map(|v| v.to_bits())
            .chain(f.coeffs().iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]))
            .collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let back = Checkpoint::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(back.state.t.to_bits(), c.state.t.to_bits());
        assert_eq!(back.step, 42);
        assert_eq!(back.params, c.params);
        assert_eq!(bits(&back.state.a), bits(&c.state.a));
        assert_eq!(bits(&back.state.b), bits(&c.state.b));
        assert_eq!(back.to_bytes(), c.to_bytes());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ckp");
        let mut c = sample();
        c.params = None;
        c.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.to_bytes(), c.to_bytes());
    }

    #[test]
    fn rejects_corruption() {
        let bytes = sample().to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(Checkpoint::from_bytes(&long).is_err());
        let mut flag = bytes;
        flag[40] = 7;
        assert!(Checkpoint::from_bytes(&flag).is_err());
    }
}
