//! The dual-channel extraction network: configuration, weight bundles and
//! the per-chunk forward operations.
//!
//! The network itself is deliberately plain — strided conv in, a dilated
//! causal conv stack, one transformer decoder layer producing a latent
//! mask, transposed conv out. What makes it streamable is the state
//! discipline: [`ops::EncoderState`] carries exactly the conv history
//! each layer needs, and [`ops::DecoderState`] carries the previous
//! chunk's (unconditioned) encoding for the decoder's 2K-frame window.
//! [`crate::streaming::StreamSession`] owns both and drives the chunk
//! loop.

pub mod config;
pub mod ops;
pub mod weights;

pub use config::ModelConfig;
pub use ops::{
    apply_mask, decode_mask, embed_query, embed_query_dense, encode_chunk, encode_full_history,
    project_in, project_out, DecoderState, EncoderState, LatentBlock,
};
pub use weights::{param_count, Tensor, WeightBundle};
