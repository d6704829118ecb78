//! The chunk-size / latency trade-off at a glance.
//!
//! Algorithmic latency is what the math itself imposes — buffering one
//! chunk plus one stride of lookahead — independent of how fast the
//! hardware is. Compute time is added separately once measured.

use btse::network::ModelConfig;
use btse::streaming::algorithmic_latency;

fn main() {
    let base = ModelConfig::default();
    println!("stride L = {} samples @ {} Hz\n", base.stride, base.sample_rate_hz);
    println!("{:>8} {:>12} {:>12} {:>14} {:>10}", "chunk", "buffer ms", "lookahead ms", "total ms", "reported");
    for k in [1usize, 4, 8, 13] {
        let cfg = ModelConfig { chunk_frames: k, ..base };
        let b = algorithmic_latency(&cfg);
        println!(
            "{:>8} {:>12.4} {:>12.4} {:>14.4} {:>10.1}",
            k * cfg.stride,
            b.buffer_ms,
            b.lookahead_ms,
            b.total_algorithmic_ms,
            b.total_ms_one_decimal(),
        );
    }
    println!(
        "\nreported figures truncate to one decimal: 448 samples is \
         {:.4} ms and reports as {:.1} ms, not {:.1} ms",
        algorithmic_latency(&base).total_algorithmic_ms,
        algorithmic_latency(&base).total_ms_one_decimal(),
        (algorithmic_latency(&base).total_algorithmic_ms * 10.0).round() / 10.0,
    );
}
