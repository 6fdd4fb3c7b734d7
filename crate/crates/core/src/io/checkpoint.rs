//! Binary restart files.
//!
//! Little-endian throughout: the magic `ABLM`, a `u32` version, `nx ny nz`
//! as `u32`, `t` and `dt` as `f64`, then the interior values (x fastest) of
//! `u v w θ gp_x gp_y gp_z` and finally the nodal pressure.

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{CellField, NodeField};
use crate::grid::GridSpec;
use crate::timestep::State;

pub const MAGIC: &[u8; 4] = b"ABLM";
pub const VERSION: u32 = 1;
/// Bytes before the first array.
pub const HEADER_BYTES: usize = 4 + 4 + 3 * 4 + 2 * 8;
/// Cell arrays stored per checkpoint.
pub const CELL_ARRAYS: usize = 7;

/// Expected file size for an `nx × ny × nz` grid.
pub fn checkpoint_size(nx: usize, ny: usize, nz: usize) -> usize {
    HEADER_BYTES + 8 * (CELL_ARRAYS * nx * ny * nz + (nx + 1) * (ny + 1) * (nz + 1))
}

/// Contents of a restart file.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub t: f64,
    pub dt: f64,
    /// `u v w θ gp_x gp_y gp_z`, interior values.
    pub cells: [Vec<f64>; CELL_ARRAYS],
    pub p: Vec<f64>,
}

impl Checkpoint {
    pub fn from_state(state: &State<f64>, dt: f64) -> Self {
        let g = state.grid();
        Checkpoint {
            nx: g.nx,
            ny: g.ny,
            nz: g.nz,
            t: state.t,
            dt,
            cells: [
                state.u.u().interior(),
                state.u.v().interior(),
                state.u.w().interior(),
                state.theta.interior(),
                state.gp.u().interior(),
                state.gp.v().interior(),
                state.gp.w().interior(),
            ],
            p: state.p.data.clone(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(checkpoint_size(self.nx, self.ny, self.nz));
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        for n in [self.nx, self.ny, self.nz] {
            b.extend_from_slice(&(n as u32).to_le_bytes());
        }
        b.extend_from_slice(&self.t.to_le_bytes());
        b.extend_from_slice(&self.dt.to_le_bytes());
        for v in self.cells.iter().flatten().chain(&self.p) {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(m);
        if b.len() < HEADER_BYTES {
            return Err(bad(format!("truncated header ({} bytes)", b.len())));
        }
        if &b[..4] != MAGIC {
            return Err(bad("not a checkpoint (bad magic)".into()));
        }
        let word = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().expect("4 bytes"));
        let real = |o: usize| f64::from_le_bytes(b[o..o + 8].try_into().expect("8 bytes"));
        let version = word(4);
        if version != VERSION {
            return Err(bad(format!("version {version} is not supported (expected {VERSION})")));
        }
        let (nx, ny, nz) = (word(8) as usize, word(12) as usize, word(16) as usize);
        let want = checkpoint_size(nx, ny, nz);
        if b.len() != want {
            return Err(bad(format!(
                "size {} does not match a {nx}x{ny}x{nz} grid ({want} bytes); file truncated?",
                b.len()
            )));
        }
        let (t, dt) = (real(20), real(28));
        let n = nx * ny * nz;
        let mut off = HEADER_BYTES;
        let mut take = |count: usize| {
            let v: Vec<f64> = (0..count).map(|i| real(off + 8 * i)).collect();
            off += 8 * count;
            v
        };
        let cells = std::array::from_fn(|_| take(n));
        let p = take((nx + 1) * (ny + 1) * (nz + 1));
        Ok(Checkpoint {
            nx,
            ny,
            nz,
            t,
            dt,
            cells,
            p,
        })
    }

    /// State on `grid`; the step counter is recovered as `round(t/dt)`.
    /// Derived quantities (eddy viscosity, surface state, diagnostics) are
    /// left at rest values and are rebuilt by the next step.
    pub fn into_state(self, grid: &GridSpec) -> Result<State<f64>> {
        if (grid.nx, grid.ny, grid.nz) != (self.nx, self.ny, self.nz) {
            return Err(Error::Checkpoint(format!(
                "checkpoint grid {}x{}x{} does not match the case grid {}x{}x{}",
                self.nx, self.ny, self.nz, grid.nx, grid.ny, grid.nz
            )));
        }
        let theta0 = self.cells[3].first().copied().unwrap_or(0.0);
        let mut s = State::rest(grid, theta0);
        s.t = self.t;
        s.step_index = if self.dt > 0.0 { (self.t / self.dt).round() as u64 } else { 0 };
        let [u, v, w, th, gx, gy, gz] = self.cells;
        s.u.comps = [
            CellField::from_interior(grid, &u),
            CellField::from_interior(grid, &v),
            CellField::from_interior(grid, &w),
        ];
        s.theta = CellField::from_interior(grid, &th);
        s.gp.comps = [
            CellField::from_interior(grid, &gx),
            CellField::from_interior(grid, &gy),
            CellField::from_interior(grid, &gz),
        ];
        let mut p = NodeField::zeros(grid);
        p.data = self.p;
        s.p = p;
        Ok(s)
    }
}

pub fn write_checkpoint(state: &State<f64>, dt: f64, path: &Path) -> Result<()> {
    std::fs::write(path, Checkpoint::from_state(state, dt).to_bytes())?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let b = std::fs::read(path)
        .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
    Checkpoint::from_bytes(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::CellVector;
    use crate::grid::build_grid;
    use rand::{Rng, SeedableRng};

    fn random_state() -> (GridSpec, State<f64>) {
        let g = build_grid(6, 5, 4, 12.0, 10.0, 8.0, true, true).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut r = || rng.random_range(-1e3..1e3);
        let mut s = State::rest(&g, 265.0);
        s.t = 12.5;
        s.step_index = 25;
        let vals: Vec<[f64; 6]> = (0..g.cells()).map(|_| std::array::from_fn(|_| r())).collect();
        let at = |i: usize, j: usize, k: usize| vals[i + g.nx * (j + g.ny * k)];
        s.u = CellVector::from_fn(&g, |i, j, k| {
            let v = at(i, j, k);
            [v[0], v[1], v[2]]
        });
        s.gp = CellVector::from_fn(&g, |i, j, k| {
            let v = at(i, j, k);
            [v[3], v[4], v[5]]
        });
        s.theta = CellField::from_fn(&g, |i, j, k| 265.0 + at(i, j, k)[0] * 1e-3);
        s.p.data.iter_mut().for_each(|v| *v = r());
        (g, s)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (g, s) = random_state();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.chk");
        write_checkpoint(&s, 0.5, &path).unwrap();
        let c = read_checkpoint(&path).unwrap();
        assert_eq!(c, Checkpoint::from_state(&s, 0.5));
        let back = c.into_state(&g).unwrap();
        assert_eq!(back.step_index, 25);
        assert_eq!(back.t.to_bits(), s.t.to_bits());
        assert_eq!(back.u.u().interior(), s.u.u().interior());
        assert_eq!(back.gp.w().interior(), s.gp.w().interior());
        assert_eq!(back.theta.interior(), s.theta.interior());
        assert_eq!(back.p, s.p);
    }

    #[test]
    fn file_size_follows_the_layout() {
        let (_, s) = random_state();
        let b = Checkpoint::from_state(&s, 0.5).to_bytes();
        assert_eq!(b.len(), 36 + 7 * 8 * 120 + 8 * 7 * 6 * 5);
        assert_eq!(b.len(), checkpoint_size(6, 5, 4));
    }

    #[test]
    fn damaged_files_are_rejected() {
        let (g, s) = random_state();
        let b = Checkpoint::from_state(&s, 0.5).to_bytes();
        let msg = |r: Result<Checkpoint>| r.unwrap_err().to_string();
        assert!(msg(Checkpoint::from_bytes(&b[..b.len() - 8])).contains("truncated"));
        assert!(msg(Checkpoint::from_bytes(&b[..10])).contains("truncated"));
        let mut v2 = b.clone();
        v2[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(msg(Checkpoint::from_bytes(&v2)).contains("version 2 is not supported"));
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(msg(Checkpoint::from_bytes(&bad)).contains("magic"));
        let other = build_grid(6, 6, 4, 12.0, 12.0, 8.0, true, true).unwrap();
        let c = Checkpoint::from_bytes(&b).unwrap();
        assert!(c.into_state(&other).is_err());
        let _ = g;
    }
}
