//! Checkpoint directories: `manifest.txt` describes the network and every tensor,
//! `params.bin` holds the tensors back to back as little-endian floats in manifest
//! order.
//!
//! ```text
//! sad-checkpoint 1
//! dtype f32
//! encoder hanabi-v0belief-1
//! net input_dim=680 hidden=512 lstm_layers=2 num_actions=21 aux_slots=5
//! meta mode vdn
//! tensor fc.w 512 680
//! ...
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::net::{NetConfig, NetParams};
use crate::scalar::Scalar;
use crate::NnError;

const MAGIC: &str = "sad-checkpoint 1";
pub const MANIFEST: &str = "manifest.txt";
pub const PAYLOAD: &str = "params.bin";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<F> {
    pub params: NetParams<F>,
    pub encoder_version: String,
    /// Free-form hyperparameters, one `meta key value` line each.
    pub meta: BTreeMap<String, String>,
}

impl<F: Scalar> Checkpoint<F> {
    pub fn new(params: NetParams<F>, encoder_version: &str) -> Self {
        Self {
            params,
            encoder_version: encoder_version.to_string(),
            meta: BTreeMap::new(),
        }
    }

    pub fn manifest(&self) -> String {
        let c = &self.params.cfg;
        let mut out = format!(
            "{MAGIC}\ndtype {}\nencoder {}\nnet input_dim={} hidden={} lstm_layers={} num_actions={} aux_slots={}\n",
            F::DTYPE,
            self.encoder_version,
            c.input_dim,
            c.hidden,
            c.lstm_layers,
            c.num_actions,
            c.aux_slots
        );
        for (k, v) in &self.meta {
            out.push_str(&format!("meta {k} {v}\n"));
        }
        for (name, t) in self.params.names().iter().zip(self.params.tensors()) {
            let dims: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
            out.push_str(&format!("tensor {name} {}\n", dims.join(" ")));
        }
        out
    }

    pub fn payload(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(self.params.num_params() * F::BYTES);
        for t in self.params.tensors() {
            for &x in &t.data {
                x.write_le(&mut bytes);
            }
        }
        bytes
    }

    pub fn save(&self, dir: &Path) -> Result<(), NnError> {
        fs::create_dir_all(dir)?;
        // payload first so a manifest never points at a missing file
        fs::write(dir.join(PAYLOAD), self.payload())?;
        fs::write(dir.join(MANIFEST), self.manifest())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, NnError> {
        let manifest = fs::read_to_string(dir.join(MANIFEST))?;
        let payload = fs::read(dir.join(PAYLOAD))?;
        Self::from_parts(&manifest, &payload)
    }

    /// Load and require a specific encoder version.
    pub fn load_for_encoder(dir: &Path, encoder_version: &str) -> Result<Self, NnError> {
        let ckpt = Self::load(dir)?;
        if ckpt.encoder_version != encoder_version {
            return Err(NnError::VersionMismatch {
                found: ckpt.encoder_version,
                expected: encoder_version.to_string(),
            });
        }
        Ok(ckpt)
    }

    pub fn from_parts(manifest: &str, payload: &[u8]) -> Result<Self, NnError> {
        let bad = |m: String| NnError::Checkpoint(m);
        let mut lines = manifest.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad(format!("missing header `{MAGIC}`")));
        }
        let mut dtype = None;
        let mut encoder = None;
        let mut cfg = None;
        let mut meta = BTreeMap::new();
        let mut shapes = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "dtype" => dtype = Some(rest.to_string()),
                "encoder" => encoder = Some(rest.to_string()),
                "net" => cfg = Some(parse_net(rest).map_err(bad)?),
                "meta" => {
                    let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                    meta.insert(k.to_string(), v.to_string());
                }
                "tensor" => {
                    let mut parts = rest.split_whitespace();
                    let name = parts.next().ok_or_else(|| bad("tensor line without name".into()))?;
                    let dims = parts
                        .map(|d| d.parse::<usize>().map_err(|_| bad(format!("bad dimension `{d}`"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    shapes.push((name.to_string(), dims));
                }
                other => return Err(bad(format!("unknown manifest key `{other}`"))),
            }
        }
        let dtype = dtype.ok_or_else(|| bad("missing dtype".into()))?;
        if dtype != F::DTYPE {
            return Err(bad(format!("checkpoint holds {dtype}, loading as {}", F::DTYPE)));
        }
        let cfg = cfg.ok_or_else(|| bad("missing net line".into()))?;
        let mut params = NetParams::<F>::zeros(cfg);
        let names = params.names();
        if names.len() != shapes.len() {
            return Err(bad(format!("{} tensors listed, network has {}", shapes.len(), names.len())));
        }
        let expected_bytes = params.num_params() * F::BYTES;
        if payload.len() != expected_bytes {
            return Err(bad(format!("payload has {} bytes, expected {expected_bytes}", payload.len())));
        }
        let mut offset = 0;
        for ((name, t), (listed, dims)) in names.iter().zip(params.tensors_mut()).zip(&shapes) {
            if name != listed || t.shape() != dims.as_slice() {
                return Err(bad(format!("tensor `{listed}` {dims:?} does not match `{name}` {:?}", t.shape())));
            }
            for x in t.data.iter_mut() {
                *x = F::read_le(&payload[offset..offset + F::BYTES]);
                offset += F::BYTES;
            }
        }
        Ok(Self {
            params,
            encoder_version: encoder.ok_or_else(|| bad("missing encoder line".into()))?,
            meta,
        })
    }
}

fn parse_net(s: &str) -> Result<NetConfig, String> {
    let get = |key: &str| -> Result<usize, String> {
        s.split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| format!("net line lacks `{key}`"))?
            .parse()
            .map_err(|_| format!("bad `{key}` value"))
    };
    Ok(NetConfig {
        input_dim: get("input_dim")?,
        hidden: get("hidden")?,
        lstm_layers: get("lstm_layers")?,
        num_actions: get("num_actions")?,
        aux_slots: get("aux_slots")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn sample() -> Checkpoint<f32> {
        let cfg = NetConfig {
            input_dim: 7,
            hidden: 3,
            lstm_layers: 2,
            num_actions: 4,
            aux_slots: 2,
        };
        let params = NetParams::init(cfg, &mut rand_chacha::ChaCha8Rng::seed_from_u64(5));
        let mut c = Checkpoint::new(params, "enc-test-1");
        c.meta.insert("mode".into(), "vdn".into());
        c
    }

    #[test]
    fn bit_exact_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = sample();
        c.save(dir.path()).unwrap();
        let back = Checkpoint::<f32>::load(dir.path()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.params.checksum(), c.params.checksum());
    }

    #[test]
    fn version_and_dtype_checked() {
        let dir = tempfile::tempdir().unwrap();
        sample().save(dir.path()).unwrap();
        assert!(matches!(
            Checkpoint::<f32>::load_for_encoder(dir.path(), "other"),
            Err(NnError::VersionMismatch { .. })
        ));
        assert!(Checkpoint::<f32>::load_for_encoder(dir.path(), "enc-test-1").is_ok());
        assert!(matches!(Checkpoint::<f64>::load(dir.path()), Err(NnError::Checkpoint(_))));
    }

    #[test]
    fn truncated_payload_rejected() {
        let c = sample();
        let mut payload = c.payload();
        payload.pop();
        assert!(Checkpoint::<f32>::from_parts(&c.manifest(), &payload).is_err());
    }
}
