//! Binary checkpoint format, little-endian throughout:
//!
//! ```text
//! "MOAM" | u32 version | u32 len, config text | u64 epoch
//! | 32-byte rng seed | u64 rng stream | u128 rng word position
//! | u32 tensor count | tensors...
//! tensor: u32 len, name | u8 trainable | u32 rows | u32 cols | f64 values
//! ```
//!
//! Parameters come first, then `adam.m.<name>` and `adam.v.<name>` for each
//! parameter, then the 1×1 step counter `adam.t`.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gin::{ParamStore, Tensor};

pub const MAGIC: &[u8; 4] = b"MOAM";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: String,
    pub epoch: u64,
    pub rng: ChaCha8Rng,
    pub store: ParamStore,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Data("checkpoint is truncated".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Data("checkpoint string is not UTF-8".into()))
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend((s.len() as u32).to_le_bytes());
    out.extend(s.as_bytes());
}

fn put_tensor(out: &mut Vec<u8>, name: &str, trainable: bool, t: &Tensor) {
    put_str(out, name);
    out.push(trainable as u8);
    out.extend((t.rows as u32).to_le_bytes());
    out.extend((t.cols as u32).to_le_bytes());
    for x in &t.data {
        out.extend(x.to_le_bytes());
    }
}

impl Checkpoint {
    pub fn new(config: String, epoch: u64, rng: ChaCha8Rng, store: ParamStore) -> Checkpoint {
        Checkpoint {
            config,
            epoch,
            rng,
            store,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend(MAGIC);
        out.extend(VERSION.to_le_bytes());
        put_str(&mut out, &self.config);
        out.extend(self.epoch.to_le_bytes());
        out.extend(self.rng.get_seed());
        out.extend(self.rng.get_stream().to_le_bytes());
        out.extend(self.rng.get_word_pos().to_le_bytes());
        let n = self.store.len();
        out.extend(((3 * n + 1) as u32).to_le_bytes());
        for p in self.store.iter() {
            put_tensor(&mut out, &p.name, p.trainable, &p.value);
        }
        for p in self.store.iter() {
            put_tensor(&mut out, &format!("adam.m.{}", p.name), false, &p.m);
        }
        for p in self.store.iter() {
            put_tensor(&mut out, &format!("adam.v.{}", p.name), false, &p.v);
        }
        put_tensor(
            &mut out,
            "adam.t",
            false,
            &Tensor::scalar(self.store.step as f64),
        );
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Checkpoint> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Data("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Data(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let config = r.string()?;
        let epoch = r.u64()?;
        let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
        let stream = r.u64()?;
        let word_pos = r.u128()?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);

        let count = r.u32()? as usize;
        let mut store = ParamStore::new();
        let mut step = None;
        for _ in 0..count {
            let name = r.string()?;
            let trainable = r.u8()? != 0;
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let len = rows
                .checked_mul(cols)
                .filter(|&l| l <= buf.len() / 8)
                .ok_or_else(|| Error::Data(format!("tensor {name} has an impossible shape")))?;
            let data = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let t = Tensor::from_vec(rows, cols, data);
            let missing = |n: &str| Error::Data(format!("moment for unknown parameter {n}"));
            if let Some(p) = name.strip_prefix("adam.m.") {
                store.get_mut(p).ok_or_else(|| missing(p))?.m = t;
            } else if let Some(p) = name.strip_prefix("adam.v.") {
                store.get_mut(p).ok_or_else(|| missing(p))?.v = t;
            } else if name == "adam.t" {
                step = Some(t.item() as u64);
            } else {
                store.insert(&name, t, trainable);
            }
        }
        if r.pos != buf.len() {
            return Err(Error::Data("trailing bytes after checkpoint".into()));
        }
        store.step = step.ok_or_else(|| Error::Data("checkpoint lacks adam.t".into()))?;
        Ok(Checkpoint {
            config,
            epoch,
            rng,
            store,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&buf)
    }
}

/// A fresh generator for the training loop.
pub fn training_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x7472_6169_6e5f_7267)
}
