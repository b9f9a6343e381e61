//! Disk cache for population matrices.
//!
//! Propagation dominates every fit by orders of magnitude while the inner
//! coefficient fit is microseconds, so scan results are cached per
//! `(sigma, record)` with all velocity checkpoints in one entry. Keys are a
//! SHA-256 over the exact bit patterns of every input that influences the
//! numbers (context, protocol, record, velocity grid), so any physics change
//! invalidates cleanly. Values are deterministic, which makes concurrent
//! last-writer-wins stores benign.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use qbounce_core::basis::{BasisContext, Sigma};
use qbounce_core::experiment::{MeasurementRecord, ProtocolConfig};
use sha2::{Digest, Sha256};

/// Bump when the propagation algorithm changes in a value-affecting way.
const CACHE_VERSION: u32 = 1;

const MAGIC: &[u8; 8] = b"qbpops01";

pub struct PopulationCache {
    dir: PathBuf,
}

impl PopulationCache {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(PopulationCache {
            dir: dir.to_path_buf(),
        })
    }

    fn key(
        ctx: &BasisContext,
        protocol: &ProtocolConfig,
        sigma: Sigma,
        velocities: &[f64],
        record: &MeasurementRecord,
    ) -> String {
        let mut hasher = Sha256::new();
        hasher.update(CACHE_VERSION.to_le_bytes());
        for v in [ctx.mass(), ctx.gravity_accel(), ctx.hbar()] {
            hasher.update(v.to_le_bytes());
        }
        hasher.update((ctx.n_states() as u64).to_le_bytes());
        for p in protocol.initial_populations {
            hasher.update(p.to_le_bytes());
        }
        hasher.update(protocol.flight_length.to_le_bytes());
        hasher.update(protocol.velocity_bounds.0.to_le_bytes());
        hasher.update(protocol.velocity_bounds.1.to_le_bytes());
        match sigma {
            Sigma::Finite(s) => {
                hasher.update([1u8]);
                hasher.update(s.to_le_bytes());
            }
            Sigma::Infinite => hasher.update([2u8]),
        }
        hasher.update((velocities.len() as u64).to_le_bytes());
        for v in velocities {
            hasher.update(v.to_le_bytes());
        }
        hasher.update(record.strength.to_le_bytes());
        hasher.update(record.omega.to_le_bytes());
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.pops"))
    }

    /// Cached per-velocity populations, if present and well formed.
    pub fn load(
        &self,
        ctx: &BasisContext,
        protocol: &ProtocolConfig,
        sigma: Sigma,
        velocities: &[f64],
        record: &MeasurementRecord,
    ) -> Option<Vec<[f64; 3]>> {
        let path = self.path_for(&Self::key(ctx, protocol, sigma, velocities, record));
        let mut file = std::fs::File::open(path).ok()?;
        let mut magic = [0u8; 8];
        file.read_exact(&mut magic).ok()?;
        if &magic != MAGIC {
            return None;
        }
        let mut count = [0u8; 8];
        file.read_exact(&mut count).ok()?;
        let count = u64::from_le_bytes(count) as usize;
        if count != velocities.len() {
            return None;
        }
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let mut row = [0.0f64; 3];
            for slot in &mut row {
                let mut bytes = [0u8; 8];
                file.read_exact(&mut bytes).ok()?;
                *slot = f64::from_le_bytes(bytes);
            }
            rows.push(row);
        }
        Some(rows)
    }

    /// Stores per-velocity populations; best effort (a failed store only
    /// costs a recompute later).
    pub fn store(
        &self,
        ctx: &BasisContext,
        protocol: &ProtocolConfig,
        sigma: Sigma,
        velocities: &[f64],
        record: &MeasurementRecord,
        rows: &[[f64; 3]],
    ) {
        let path = self.path_for(&Self::key(ctx, protocol, sigma, velocities, record));
        let write = || -> std::io::Result<()> {
            let mut file = std::fs::File::create(&path)?;
            file.write_all(MAGIC)?;
            file.write_all(&(rows.len() as u64).to_le_bytes())?;
            for row in rows {
                for v in row {
                    file.write_all(&v.to_le_bytes())?;
                }
            }
            Ok(())
        };
        let _ = write();
    }
}
