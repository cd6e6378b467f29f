use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::{build_ms_space_with, GlobalOptions, MsBasis, Radius};
use crate::coefficient::Coefficient;
use crate::dg::PenaltyRule;
use crate::error::{Error, Result};
use crate::mesh::MeshHierarchy;
use crate::scalar::Real;

const MAGIC: &[u8; 8] = b"DGMSPSI1";

/// Hex SHA-256 of everything a corrected basis depends on.
pub fn cache_key<S: Real>(
    hier: &MeshHierarchy,
    coef: &Coefficient<S>,
    pen: &PenaltyRule,
    radius: Radius,
) -> String {
    let mut h = Sha256::new();
    h.update(format!("{:?}", hier.domain()).as_bytes());
    h.update(hier.coarse().level().to_le_bytes());
    h.update(hier.fine().level().to_le_bytes());
    h.update(format!("{pen:?}|{radius}|{}", std::mem::size_of::<S>()).as_bytes());
    for v in coef.values() {
        h.update(v.to_f64_lossy().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Directory of corrected bases, one file per key.
#[derive(Debug, Clone)]
pub struct CorrectorCache {
    dir: PathBuf,
}

fn put_u64(w: &mut impl Write, v: usize) -> Result<()> {
    w.write_all(&(v as u64).to_le_bytes())?;
    Ok(())
}

fn get_u64(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b) as usize)
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

impl CorrectorCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.psi"))
    }

    pub fn store<S: Real>(&self, key: &str, basis: &MsBasis<S>) -> Result<()> {
        let tmp = self.dir.join(format!("{key}.tmp"));
        {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            w.write_all(MAGIC)?;
            put_u64(&mut w, key.len())?;
            w.write_all(key.as_bytes())?;
            put_u64(&mut w, basis.coarse_level as usize)?;
            put_u64(&mut w, basis.fine_level as usize)?;
            put_u64(&mut w, basis.supports.len())?;
            for t in 0..basis.supports.len() {
                put_u64(&mut w, basis.supports[t].len())?;
                for &c in &basis.supports[t] {
                    put_u64(&mut w, c)?;
                }
                put_u64(&mut w, basis.psi[t].nrows())?;
                for v in basis.residuals[t]
                    .iter()
                    .copied()
                    .chain(basis.energies[t].iter().map(|e| e.to_f64_lossy()))
                {
                    w.write_all(&v.to_le_bytes())?;
                }
                for v in basis.psi[t].iter() {
                    w.write_all(&v.to_f64_lossy().to_le_bytes())?;
                }
            }
            w.flush()?;
        }
        fs::rename(tmp, self.path(key))?;
        Ok(())
    }

    /// `None` when the file is missing or was written for another key.
    pub fn load<S: Real>(&self, key: &str, radius: Radius) -> Result<Option<MsBasis<S>>> {
        let path = self.path(key);
        if !path.exists() {
            return Ok(None);
        }
        let mut r = BufReader::new(fs::File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Ok(None);
        }
        let klen = get_u64(&mut r)?;
        let mut stored = vec![0u8; klen];
        r.read_exact(&mut stored)?;
        if stored != key.as_bytes() {
            return Ok(None);
        }
        let coarse_level = get_u64(&mut r)? as u32;
        let fine_level = get_u64(&mut r)? as u32;
        let nt = get_u64(&mut r)?;
        let mut basis = MsBasis {
            radius,
            coarse_level,
            fine_level,
            supports: Vec::with_capacity(nt),
            psi: Vec::with_capacity(nt),
            residuals: Vec::with_capacity(nt),
            energies: Vec::with_capacity(nt),
            build_seconds: 0.0,
        };
        for _ in 0..nt {
            let ns = get_u64(&mut r)?;
            let supp = (0..ns)
                .map(|_| get_u64(&mut r))
                .collect::<Result<Vec<_>>>()?;
            let rows = get_u64(&mut r)?;
            let mut res = [0.0; 4];
            for v in &mut res {
                *v = get_f64(&mut r)?;
            }
            let mut en = [S::zero(); 4];
            for v in &mut en {
                *v = S::lit(get_f64(&mut r)?);
            }
            let mut vals = Vec::with_capacity(4 * rows);
            for _ in 0..4 * rows {
                vals.push(S::lit(get_f64(&mut r)?));
            }
            basis.supports.push(supp);
            basis.psi.push(DMatrix::from_vec(rows, 4, vals));
            basis.residuals.push(res);
            basis.energies.push(en);
        }
        Ok(Some(basis))
    }

    /// Cached basis for the configuration, built and stored on a miss.
    pub fn get_or_build<S: Real>(
        &self,
        hier: &MeshHierarchy,
        coef: &Coefficient<S>,
        pen: &PenaltyRule,
        radius: Radius,
        opts: &GlobalOptions,
    ) -> Result<MsBasis<S>> {
        let key = cache_key(hier, coef, pen, radius);
        match self.load(&key, radius) {
            Ok(Some(b)) if b.check(hier).is_ok() => return Ok(b),
            Ok(_) => {}
            Err(Error::Io(_)) => {}
            Err(e) => return Err(e),
        }
        let basis = build_ms_space_with(hier, coef, pen, radius, opts)?;
        self.store(&key, &basis)?;
        Ok(basis)
    }
}
