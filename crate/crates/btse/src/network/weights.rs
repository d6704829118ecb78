//! Weight tensors and the `.btse` bundle file format.
//!
//! Layout of a bundle file (all integers little-endian):
//!
//! ```text
//! bytes 0..4    magic "BTSE"
//! bytes 4..8    u32 format version (currently 1)
//! bytes 8..12   u32 manifest length in bytes
//! ...           UTF-8 JSON manifest
//! ...           raw tensor data: f32 little-endian, concatenated
//! ```
//!
//! The manifest carries the model config, the class registry and one
//! record per tensor: `{"name", "shape", "byte_offset"}`, the offset
//! counted from the start of the data section. Tensor bytes are written
//! verbatim from the in-memory `f32` values, so a save/load round trip is
//! bit-exact.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::ontology::ClassRegistry;

const MAGIC: &[u8; 4] = b"BTSE";
const FORMAT_VERSION: u32 = 1;

/// A named dense tensor: row-major `f32` data with an explicit shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} implies {numel} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Self { shape, data: vec![0.0; numel] }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }
}

/// One entry of the canonical tensor table.
pub(crate) struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    /// Number of summands feeding one output value; sets the init range
    /// `±1/√fan_in`.
    pub fan_in: usize,
}

/// The full tensor table for a config, in canonical (file) order.
pub(crate) fn tensor_table(cfg: &ModelConfig) -> Vec<TensorSpec> {
    let d = cfg.latent_dim;
    let l = cfg.stride;
    let ff = cfg.ff_dim;
    let mut t = Vec::new();
    let mut push = |name: &str, shape: Vec<usize>, fan_in: usize| {
        t.push(TensorSpec { name: name.to_string(), shape, fan_in });
    };

    push("in_proj.weight", vec![d, 2, 2 * l], 4 * l);
    push("in_proj.bias", vec![d], 4 * l);
    for j in 0..cfg.enc_layers {
        push(&format!("enc.{j}.weight"), vec![d, d, cfg.enc_kernel], cfg.enc_kernel * d);
        push(&format!("enc.{j}.bias"), vec![d], cfg.enc_kernel * d);
    }
    push("query_embed.weight", vec![d, cfg.n_classes], cfg.n_classes);
    for block in ["self_attn", "cross_attn"] {
        for proj in ["q", "k", "v", "out"] {
            push(&format!("dec.{block}.{proj}.weight"), vec![d, d], d);
            push(&format!("dec.{block}.{proj}.bias"), vec![d], d);
        }
    }
    push("dec.ffn.w1.weight", vec![ff, d], d);
    push("dec.ffn.w1.bias", vec![ff], d);
    push("dec.ffn.w2.weight", vec![d, ff], ff);
    push("dec.ffn.w2.bias", vec![d], ff);
    for norm in ["norm1", "norm2", "norm3"] {
        push(&format!("dec.{norm}.gain"), vec![d], d);
        push(&format!("dec.{norm}.bias"), vec![d], d);
    }
    push("out_proj.weight", vec![2, d, l], d);
    push("out_proj.bias", vec![2], d);
    t
}

/// Total parameter count (weights and biases) for a config.
pub fn param_count(cfg: &ModelConfig) -> usize {
    tensor_table(cfg).iter().map(|s| s.shape.iter().product::<usize>()).sum()
}

/// An immutable, validated set of network weights plus the config and
/// registry they were built for. Once constructed every tensor named by
/// the table is present, correctly shaped and finite, so the forward ops
/// index without checks. The bundle is `Send + Sync`; share it across
/// streams with `Arc`.
#[derive(Debug, Clone)]
pub struct WeightBundle {
    config: ModelConfig,
    registry: ClassRegistry,
    tensors: BTreeMap<String, Tensor>,
    /// Encoder kernels repacked per tap as contiguous D×D matrices so the
    /// conv inner loops run over unit-stride rows.
    enc_taps: Vec<[Vec<f32>; 3]>,
}

impl WeightBundle {
    /// Build a bundle from explicit tensors (validates against the table).
    pub fn from_tensors(
        config: ModelConfig,
        registry: ClassRegistry,
        tensors: BTreeMap<String, Tensor>,
    ) -> Result<Self> {
        config.validate()?;
        if registry.len() != config.n_classes {
            return Err(Error::Argument(format!(
                "registry has {} classes but config declares n_classes = {}",
                registry.len(),
                config.n_classes
            )));
        }
        let table = tensor_table(&config);
        if tensors.len() != table.len() {
            return Err(Error::Format(format!(
                "expected {} tensors, got {}",
                table.len(),
                tensors.len()
            )));
        }
        for spec in &table {
            let t = tensors
                .get(&spec.name)
                .ok_or_else(|| Error::Format(format!("missing tensor {:?}", spec.name)))?;
            if t.shape != spec.shape {
                return Err(Error::Shape(format!(
                    "tensor {:?} has shape {:?}, expected {:?}",
                    spec.name, t.shape, spec.shape
                )));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format(format!("tensor {:?} contains non-finite values", spec.name)));
            }
        }
        let enc_taps = pack_encoder_taps(&config, &tensors);
        Ok(Self { config, registry, tensors, enc_taps })
    }

    /// Deterministic random initialization: every tensor is drawn uniform
    /// in `±1/√fan_in` from a single ChaCha stream, in table order.
    /// Identical `(config, registry, seed)` always produce an identical
    /// bundle.
    pub fn init_random(config: ModelConfig, registry: ClassRegistry, seed: u64) -> Result<Self> {
        use rand_chacha::rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = BTreeMap::new();
        for spec in tensor_table(&config) {
            let amp = 1.0 / (spec.fan_in as f64).sqrt();
            let numel: usize = spec.shape.iter().product();
            let data = (0..numel)
                .map(|_| {
                    let u = rng.next_u32() as f64 / 4_294_967_296.0;
                    ((2.0 * u - 1.0) * amp) as f32
                })
                .collect();
            tensors.insert(spec.name, Tensor { shape: spec.shape, data });
        }
        Self::from_tensors(config, registry, tensors)
    }

    /// All-zero bundle (every projection and bias zero). Useful as the
    /// identity-free baseline: the whole pipeline maps any input to zeros.
    pub fn zeros(config: ModelConfig, registry: ClassRegistry) -> Result<Self> {
        let tensors = tensor_table(&config)
            .into_iter()
            .map(|s| (s.name, Tensor::zeros(s.shape)))
            .collect();
        Self::from_tensors(config, registry, tensors)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn registry(&self) -> &ClassRegistry {
        &self.registry
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.config)
    }

    /// Look up a tensor by canonical name. Panics on unknown names —
    /// construction guarantees the full table is present.
    pub fn tensor(&self, name: &str) -> &Tensor {
        &self.tensors[name]
    }

    pub fn tensor_names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    /// Copy of the raw tensor map (for building modified bundles).
    pub fn to_tensor_map(&self) -> BTreeMap<String, Tensor> {
        self.tensors.clone()
    }

    /// Encoder kernel of `layer`, tap index 0..3 (0 = oldest frame), as a
    /// contiguous D×D row-major matrix.
    pub(crate) fn enc_tap(&self, layer: usize, tap: usize) -> &[f32] {
        &self.enc_taps[layer][tap]
    }

    /// Serialize to the `.btse` byte format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let table = tensor_table(&self.config);
        let mut records = Vec::with_capacity(table.len());
        let mut offset = 0usize;
        for spec in &table {
            let t = &self.tensors[&spec.name];
            records.push(ManifestTensor {
                name: spec.name.clone(),
                shape: t.shape.clone(),
                byte_offset: offset,
            });
            offset += 4 * t.numel();
        }
        let manifest = Manifest {
            config: self.config,
            registry: self.registry.clone(),
            tensors: records,
        };
        let manifest_json = serde_json::to_vec(&manifest).expect("manifest serializes");

        let mut out = Vec::with_capacity(12 + manifest_json.len() + offset);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(manifest_json.len() as u32).to_le_bytes());
        out.extend_from_slice(&manifest_json);
        for spec in &table {
            for v in &self.tensors[&spec.name].data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parse a bundle from bytes. Any malformation — wrong magic, bad
    /// version, truncation anywhere, JSON errors, out-of-range offsets,
    /// non-finite values — comes back as an error, never a panic.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(Error::Format("bundle truncated before header".into()));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::Format("bad magic: not a BTSE weight bundle".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported bundle version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let manifest_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let rest = &bytes[12..];
        if manifest_len > rest.len() {
            return Err(Error::Format("bundle truncated inside manifest".into()));
        }
        let manifest: Manifest = serde_json::from_slice(&rest[..manifest_len])
            .map_err(|e| Error::Format(format!("bad bundle manifest: {e}")))?;
        let data = &rest[manifest_len..];

        let mut tensors = BTreeMap::new();
        for rec in &manifest.tensors {
            let numel = rec
                .shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| Error::Format(format!("tensor {:?} shape overflows", rec.name)))?;
            let nbytes = numel
                .checked_mul(4)
                .ok_or_else(|| Error::Format(format!("tensor {:?} size overflows", rec.name)))?;
            let end = rec
                .byte_offset
                .checked_add(nbytes)
                .ok_or_else(|| Error::Format(format!("tensor {:?} offset overflows", rec.name)))?;
            if end > data.len() {
                return Err(Error::Format(format!(
                    "bundle truncated: tensor {:?} needs bytes {}..{} of a {}-byte data section",
                    rec.name,
                    rec.byte_offset,
                    end,
                    data.len()
                )));
            }
            let values = data[rec.byte_offset..end]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            tensors.insert(rec.name.clone(), Tensor { shape: rec.shape.clone(), data: values });
        }
        Self::from_tensors(manifest.config, manifest.registry, tensors)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }
}

fn pack_encoder_taps(cfg: &ModelConfig, tensors: &BTreeMap<String, Tensor>) -> Vec<[Vec<f32>; 3]> {
    let d = cfg.latent_dim;
    (0..cfg.enc_layers)
        .map(|j| {
            let w = &tensors[&format!("enc.{j}.weight")];
            let mut taps = [vec![0.0; d * d], vec![0.0; d * d], vec![0.0; d * d]];
            for dout in 0..d {
                for din in 0..d {
                    for (tap, mat) in taps.iter_mut().enumerate() {
                        mat[dout * d + din] = w.data[(dout * d + din) * 3 + tap];
                    }
                }
            }
            taps
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    config: ModelConfig,
    registry: ClassRegistry,
    tensors: Vec<ManifestTensor>,
}

#[derive(Serialize, Deserialize)]
struct ManifestTensor {
    name: String,
    shape: Vec<usize>,
    byte_offset: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ModelConfig {
        ModelConfig {
            latent_dim: 16,
            stride: 8,
            chunk_frames: 4,
            n_classes: 20,
            enc_layers: 3,
            enc_kernel: 3,
            heads: 2,
            ff_dim: 32,
            sample_rate_hz: 44_100,
        }
    }

    #[test]
    fn in_proj_param_count_matches_hand_arithmetic() {
        // D·2·2L weights plus D biases: 128·2·64 + 128.
        let cfg = ModelConfig::default();
        let table = tensor_table(&cfg);
        let in_proj: usize = table
            .iter()
            .filter(|s| s.name.starts_with("in_proj"))
            .map(|s| s.shape.iter().product::<usize>())
            .sum();
        assert_eq!(in_proj, 16_512);
    }

    #[test]
    fn param_count_grows_monotonically_with_width_and_depth() {
        let base = param_count(&small_config());
        let wider = param_count(&ModelConfig { latent_dim: 32, ..small_config() });
        let deeper = param_count(&ModelConfig { enc_layers: 5, ..small_config() });
        assert!(wider > base);
        assert!(deeper > base);
    }

    #[test]
    fn init_is_deterministic_per_seed_and_differs_across_seeds() {
        let cfg = small_config();
        let reg = ClassRegistry::default();
        let a = WeightBundle::init_random(cfg, reg.clone(), 7).unwrap();
        let b = WeightBundle::init_random(cfg, reg.clone(), 7).unwrap();
        let c = WeightBundle::init_random(cfg, reg, 8).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_ne!(a.to_bytes(), c.to_bytes());
    }

    #[test]
    fn init_respects_fan_in_bounds() {
        let cfg = small_config();
        let bundle = WeightBundle::init_random(cfg, ClassRegistry::default(), 3).unwrap();
        for spec in tensor_table(&cfg) {
            let amp = 1.0 / (spec.fan_in as f64).sqrt();
            let t = bundle.tensor(&spec.name);
            for &v in &t.data {
                assert!((v as f64).abs() <= amp, "{}: {v} outside ±{amp}", spec.name);
            }
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let bundle =
            WeightBundle::init_random(small_config(), ClassRegistry::default(), 42).unwrap();
        let bytes = bundle.to_bytes();
        let back = WeightBundle::from_bytes(&bytes).unwrap();
        assert_eq!(back.config(), bundle.config());
        assert_eq!(back.registry(), bundle.registry());
        for name in bundle.tensor_names() {
            let a = bundle.tensor(name);
            let b = back.tensor(name);
            assert_eq!(a.shape, b.shape);
            assert_eq!(
                a.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                "tensor {name} not bit-exact"
            );
        }
    }

    #[test]
    fn corrupted_magic_is_a_format_error() {
        let mut bytes =
            WeightBundle::init_random(small_config(), ClassRegistry::default(), 1).unwrap().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(WeightBundle::from_bytes(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn truncation_anywhere_is_an_error_not_a_panic() {
        let bytes =
            WeightBundle::init_random(small_config(), ClassRegistry::default(), 1).unwrap().to_bytes();
        // Chop at a spread of byte counts covering header, manifest and
        // tensor data.
        for cut in [0, 3, 7, 11, 40, 200, bytes.len() / 2, bytes.len() - 1] {
            let res = WeightBundle::from_bytes(&bytes[..cut]);
            assert!(res.is_err(), "cut at {cut} should fail");
        }
    }

    #[test]
    fn wrong_version_and_registry_mismatch_are_rejected() {
        let mut bytes =
            WeightBundle::init_random(small_config(), ClassRegistry::default(), 1).unwrap().to_bytes();
        bytes[4] = 9;
        assert!(matches!(WeightBundle::from_bytes(&bytes), Err(Error::Format(_))));

        let reg = ClassRegistry::from_labels(vec!["a".into(), "b".into()]).unwrap();
        assert!(WeightBundle::init_random(small_config(), reg, 0).is_err());
    }

    #[test]
    fn non_finite_tensor_values_are_rejected() {
        let bundle =
            WeightBundle::init_random(small_config(), ClassRegistry::default(), 1).unwrap();
        let mut map = bundle.to_tensor_map();
        map.get_mut("in_proj.bias").unwrap().data[0] = f32::NAN;
        let res = WeightBundle::from_tensors(small_config(), ClassRegistry::default(), map);
        assert!(matches!(res, Err(Error::Format(_))));
    }
}
