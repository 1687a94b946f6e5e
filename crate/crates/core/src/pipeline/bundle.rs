use std::fs;
use std::path::Path;

use crate::codec::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::staging::{StageOneModel, StageTwoModel};

use super::io::atomic_write;

const MAGIC: &[u8; 4] = b"TSBN";
const VERSION: u16 = 1;

/// Everything trained for one city.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub city: String,
    pub config_digest: String,
    pub stage1: StageOneModel,
    pub stage2: StageTwoModel,
    /// Stage two retrained without context columns, when requested.
    pub stage2_context_free: Option<StageTwoModel>,
}

impl Bundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::with_header(MAGIC, VERSION);
        enc.put_str(&self.city);
        enc.put_str(&self.config_digest);
        self.stage1.encode(&mut enc);
        self.stage2.encode(&mut enc);
        enc.put_bool(self.stage2_context_free.is_some());
        if let Some(m) = &self.stage2_context_free {
            m.encode(&mut enc);
        }
        enc.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut dec = Decoder::with_header(bytes, MAGIC, VERSION)?;
        let city = dec.get_str()?;
        let config_digest = dec.get_str()?;
        let stage1 = StageOneModel::decode(&mut dec)?;
        let stage2 = StageTwoModel::decode(&mut dec)?;
        let stage2_context_free = if dec.get_bool()? {
            Some(StageTwoModel::decode(&mut dec)?)
        } else {
            None
        };
        dec.finish()?;
        Ok(Self {
            city,
            config_digest,
            stage1,
            stage2,
            stage2_context_free,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes();
        atomic_write(path, |w| w.write_all(&bytes))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Fails unless the bundle was trained under a config with `digest`.
    pub fn check_digest(&self, digest: &str) -> Result<()> {
        if self.config_digest == digest {
            Ok(())
        } else {
            Err(Error::DigestMismatch {
                bundle: self.config_digest.clone(),
                config: digest.to_string(),
            })
        }
    }
}
