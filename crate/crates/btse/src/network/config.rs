use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the extraction network.
///
/// The input projection turns `chunk_frames · stride` fresh samples plus
/// `stride` lookahead samples into `chunk_frames` latent frames of
/// `latent_dim` channels; the encoder is a stack of dilated causal
/// convolutions; the mask decoder is a single transformer decoder layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Latent channels per frame (D).
    pub latent_dim: usize,
    /// Frame hop in samples (L); also the lookahead length.
    pub stride: usize,
    /// Frames per streaming chunk (K).
    pub chunk_frames: usize,
    /// Query-vector length; must match the registry size.
    pub n_classes: usize,
    /// Dilated conv layers; layer `j` uses dilation `2^j`.
    pub enc_layers: usize,
    /// Encoder kernel width. The cached-context arithmetic assumes 3.
    pub enc_kernel: usize,
    /// Attention heads in the mask decoder.
    pub heads: usize,
    /// Hidden width of the decoder's position-wise feed-forward block.
    pub ff_dim: usize,
    pub sample_rate_hz: u32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            latent_dim: 128,
            stride: 32,
            chunk_frames: 13,
            n_classes: 20,
            enc_layers: 10,
            enc_kernel: 3,
            heads: 8,
            ff_dim: 512,
            sample_rate_hz: 44_100,
        }
    }
}

impl ModelConfig {
    /// Default-shaped config with a given latent width; `ff_dim` tracks
    /// `4 · latent_dim`.
    pub fn with_latent_dim(latent_dim: usize) -> Self {
        Self { latent_dim, ff_dim: 4 * latent_dim, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.heads == 0 || self.latent_dim % self.heads != 0 {
            return Err(Error::Argument(format!(
                "latent_dim {} must be a positive multiple of heads {}",
                self.latent_dim, self.heads
            )));
        }
        if self.stride == 0 || self.chunk_frames == 0 {
            return Err(Error::Argument("stride and chunk_frames must be positive".into()));
        }
        if self.n_classes == 0 || self.ff_dim == 0 {
            return Err(Error::Argument("n_classes and ff_dim must be positive".into()));
        }
        if self.enc_kernel != 3 {
            return Err(Error::Argument(format!(
                "enc_kernel {} unsupported: the cached-context sizes assume kernel 3",
                self.enc_kernel
            )));
        }
        if self.enc_layers == 0 || self.enc_layers > 16 {
            return Err(Error::Argument(format!(
                "enc_layers {} out of range 1..=16",
                self.enc_layers
            )));
        }
        if self.sample_rate_hz == 0 {
            return Err(Error::Argument("sample rate must be positive".into()));
        }
        Ok(())
    }

    /// Samples emitted per chunk (K·L).
    pub fn chunk_samples(&self) -> usize {
        self.chunk_frames * self.stride
    }

    /// Samples the pipeline consumes per chunk: K·L plus L lookahead.
    pub fn input_samples(&self) -> usize {
        self.chunk_samples() + self.stride
    }

    /// Channels per attention head.
    pub fn head_dim(&self) -> usize {
        self.latent_dim / self.heads
    }

    /// Receptive-field history the encoder cache carries: layer `j` needs
    /// the `2·2^j` preceding frames, so the stack totals `2·(2^layers − 1)`
    /// frames (2046 for the default ten layers).
    pub fn context_frames(&self) -> usize {
        2 * ((1usize << self.enc_layers) - 1)
    }
}
