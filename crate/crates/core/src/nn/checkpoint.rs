//! Binary checkpoints: an 8-byte magic, a little-endian `u32` schema version,
//! a length-prefixed TOML header describing every stored object, then the raw
//! little-endian `f64` payload in header order.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, AdamConfig, DenseNet, Layer, Optimizer};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"STIRGCK\x01";
pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// Networks, optimizer states, generator state and free-form metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub nets: Vec<(String, DenseNet)>,
    pub optimizers: Vec<(String, Optimizer)>,
    pub rng: Option<ChaCha8Rng>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    meta: BTreeMap<String, String>,
    #[serde(default)]
    net: Vec<NetHeader>,
    #[serde(default)]
    optimizer: Vec<OptimizerHeader>,
    rng: Option<RngHeader>,
}

#[derive(Serialize, Deserialize)]
struct NetHeader {
    name: String,
    sizes: Vec<usize>,
    activations: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct OptimizerHeader {
    name: String,
    kind: String,
    learning_rate: f64,
    #[serde(default)]
    beta1: f64,
    #[serde(default)]
    beta2: f64,
    #[serde(default)]
    epsilon: f64,
    #[serde(default)]
    step: u64,
    /// `[rows, cols]` of every moment matrix; bias length equals rows.
    #[serde(default)]
    shapes: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
struct RngHeader {
    seed: String,
    stream: u64,
    word_pos: String,
}

fn activation_tag(a: Activation) -> String {
    match a {
        Activation::Identity => "identity".into(),
        Activation::Relu => "relu".into(),
        Activation::Tanh { scale } => format!("tanh:{scale:?}"),
    }
}

fn parse_activation(tag: &str) -> Result<Activation> {
    match tag {
        "identity" => Ok(Activation::Identity),
        "relu" => Ok(Activation::Relu),
        _ => tag
            .strip_prefix("tanh:")
            .and_then(|s| s.parse().ok())
            .map(|scale| Activation::Tanh { scale })
            .ok_or_else(|| Error::Checkpoint(format!("unknown activation `{tag}`"))),
    }
}

fn put(out: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Payload<'a> {
    bytes: &'a [u8],
}

impl Payload<'_> {
    fn take(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n.checked_mul(8).ok_or_else(|| Error::Checkpoint("payload size overflow".into()))?;
        if self.bytes.len() < len {
            return Err(Error::Checkpoint("truncated payload".into()));
        }
        let (head, rest) = self.bytes.split_at(len);
        self.bytes = rest;
        Ok(head.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let data = self.take(rows * cols)?;
        Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    fn vector(&mut self, n: usize) -> Result<Array1<f64>> {
        Ok(Array1::from(self.take(n)?))
    }
}

impl Checkpoint {
    pub fn net(&self, name: &str) -> Option<&DenseNet> {
        self.nets.iter().find(|(n, _)| n == name).map(|(_, net)| net)
    }

    pub fn optimizer(&self, name: &str) -> Option<&Optimizer> {
        self.optimizers.iter().find(|(n, _)| n == name).map(|(_, o)| o)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        let mut header = Header { meta: self.meta.clone(), net: Vec::new(), optimizer: Vec::new(), rng: None };
        for (name, net) in &self.nets {
            header.net.push(NetHeader {
                name: name.clone(),
                sizes: net.sizes(),
                activations: net.layers().iter().map(|l| activation_tag(l.activation)).collect(),
            });
            for l in net.layers() {
                put(&mut payload, l.weights.iter().copied());
                put(&mut payload, l.bias.iter().copied());
            }
        }
        for (name, opt) in &self.optimizers {
            let h = match opt {
                Optimizer::Sgd { learning_rate } => OptimizerHeader {
                    name: name.clone(),
                    kind: "sgd".into(),
                    learning_rate: *learning_rate,
                    beta1: 0.0,
                    beta2: 0.0,
                    epsilon: 0.0,
                    step: 0,
                    shapes: Vec::new(),
                },
                Optimizer::Adam { config, step, first, second } => {
                    for (w, b) in first.iter().chain(second) {
                        put(&mut payload, w.iter().copied());
                        put(&mut payload, b.iter().copied());
                    }
                    OptimizerHeader {
                        name: name.clone(),
                        kind: "adam".into(),
                        learning_rate: config.learning_rate,
                        beta1: config.beta1,
                        beta2: config.beta2,
                        epsilon: config.epsilon,
                        step: *step,
                        shapes: first.iter().map(|(w, _)| [w.nrows(), w.ncols()]).collect(),
                    }
                }
            };
            header.optimizer.push(h);
        }
        header.rng = self.rng.as_ref().map(|r| RngHeader {
            seed: hex::encode(r.get_seed()),
            stream: r.get_stream(),
            word_pos: r.get_word_pos().to_string(),
        });
        let text = toml::to_string(&header).expect("header serializes");

        let mut out = Vec::with_capacity(16 + text.len() + payload.len());
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_SCHEMA_VERSION.to_le_bytes());
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || bytes[..8] != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint schema_version {version} (expected {CHECKPOINT_SCHEMA_VERSION})"
            )));
        }
        let header_len = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
        let text = bytes
            .get(16..16 + header_len)
            .ok_or_else(|| Error::Checkpoint("truncated header".into()))?;
        let text = std::str::from_utf8(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let header: Header = toml::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut payload = Payload { bytes: &bytes[16 + header_len..] };

        let mut nets = Vec::new();
        for h in &header.net {
            if h.sizes.len() < 2 || h.activations.len() + 1 != h.sizes.len() {
                return Err(Error::Checkpoint(format!("malformed architecture for `{}`", h.name)));
            }
            let mut layers = Vec::new();
            for (w, tag) in h.sizes.windows(2).zip(&h.activations) {
                let weights = payload.matrix(w[1], w[0])?;
                let bias = payload.vector(w[1])?;
                layers.push(Layer { weights, bias, activation: parse_activation(tag)? });
            }
            nets.push((h.name.clone(), DenseNet::from_layers(layers)));
        }
        let mut optimizers = Vec::new();
        for h in &header.optimizer {
            let opt = match h.kind.as_str() {
                "sgd" => Optimizer::Sgd { learning_rate: h.learning_rate },
                "adam" => {
                    let mut moments = Vec::new();
                    for _ in 0..2 {
                        let mut layer_moments = Vec::new();
                        for &[rows, cols] in &h.shapes {
                            layer_moments.push((payload.matrix(rows, cols)?, payload.vector(rows)?));
                        }
                        moments.push(layer_moments);
                    }
                    let second = moments.pop().expect("two moment sets");
                    let first = moments.pop().expect("two moment sets");
                    Optimizer::Adam {
                        config: AdamConfig {
                            learning_rate: h.learning_rate,
                            beta1: h.beta1,
                            beta2: h.beta2,
                            epsilon: h.epsilon,
                        },
                        step: h.step,
                        first,
                        second,
                    }
                }
                other => return Err(Error::Checkpoint(format!("unknown optimizer kind `{other}`"))),
            };
            optimizers.push((h.name.clone(), opt));
        }
        if !payload.bytes.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing payload bytes", payload.bytes.len())));
        }
        let rng = header
            .rng
            .map(|h| -> Result<ChaCha8Rng> {
                let seed: [u8; 32] = hex::decode(&h.seed)
                    .ok()
                    .and_then(|v| v.try_into().ok())
                    .ok_or_else(|| Error::Checkpoint("malformed generator seed".into()))?;
                let word_pos: u128 = h.word_pos.parse().map_err(|_| Error::Checkpoint("malformed word_pos".into()))?;
                let mut rng = ChaCha8Rng::from_seed(seed);
                rng.set_stream(h.stream);
                rng.set_word_pos(word_pos);
                Ok(rng)
            })
            .transpose()?;
        Ok(Self { meta: header.meta, nets, optimizers, rng })
    }

    /// Writes atomically: a sibling temp file is renamed over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
                _ => Error::Io(e),
            })?
            .read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Checkpoint(msg) => Error::Checkpoint(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Write-temp-then-rename in the destination directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn sample() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let actor = DenseNet::mlp(&[4, 6, 5, 2], Activation::Tanh { scale: 0.01 }, 3e-3, &mut rng);
        let critic = DenseNet::mlp(&[6, 5, 1], Activation::Identity, 3e-3, &mut rng);
        let mut opt = Optimizer::adam(AdamConfig::new(1e-4), &critic);
        let mut c2 = critic.clone();
        let (_, tape) = c2.forward(&[0.1; 6]);
        let (g, _) = c2.backward(&tape, ndarray::array![[1.0]].view());
        opt.apply(&mut c2, &g).unwrap();
        let _: u64 = rng.random();
        let mut meta = BTreeMap::new();
        meta.insert("skill".into(), "stir".into());
        Checkpoint {
            meta,
            nets: vec![("actor".into(), actor), ("critic".into(), c2)],
            optimizers: vec![("critic".into(), opt), ("plain".into(), Optimizer::sgd(0.5))],
            rng: Some(rng),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ck = sample();
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes(), bytes);
        let mut a = ck.rng.clone().unwrap();
        let mut b = back.rng.unwrap();
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let mut bytes = sample().to_bytes();
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&wrong), Err(Error::Checkpoint(_))));
        bytes[8] = 99;
        let err = Checkpoint::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("schema_version 99"));
    }

    #[test]
    fn rejects_truncation() {
        let bytes = sample().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 8]).is_err());
    }

    #[test]
    fn missing_file_is_a_missing_artifact() {
        let err = Checkpoint::load(Path::new("/nonexistent/x.ckpt")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
