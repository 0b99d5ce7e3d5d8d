//! Stream a large trace from disk without holding the graph in memory.
//!
//! `cargo run --release --example stream_large_trace -- 5000000` writes a
//! summation trace with that many elements to the temp directory, then
//! analyzes it with the default 32 KiB cache.

use std::fs::File;
use std::time::Instant;

use edag::edag::{BuildOptions, CostModel, EdagBuilder};
use edag::synth::{write_trace, Pattern, SynthSpec};
use edag::{open_trace, CacheConfig};

fn main() {
    let n: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(250_000);
    let path = std::env::temp_dir().join(format!("edag-sum-{n}.trace"));
    let truth = write_trace(
        &SynthSpec::new(Pattern::Sum, n).with_stride(8),
        File::create(&path).unwrap(),
    )
    .unwrap();
    println!("wrote {} lines to {}", truth.lines, path.display());

    let started = Instant::now();
    let mut builder = EdagBuilder::new(
        CacheConfig::l1_32k(),
        CostModel::default(),
        BuildOptions::default(),
    )
    .unwrap();
    for rec in open_trace(&path).unwrap() {
        builder.push(&rec.unwrap()).unwrap();
        if builder.vertex_count().is_multiple_of(2_000_000) {
            eprintln!("  {} lines", builder.vertex_count());
        }
    }
    let s = builder.finish().summary;
    let secs = started.elapsed().as_secs_f64();
    println!(
        "{} lines in {secs:.2}s ({:.2} M lines/s): W = {}, D = {}, hits = {}",
        s.vertex_count,
        s.vertex_count as f64 / secs / 1e6,
        s.w,
        s.d,
        s.cache.hits()
    );
    std::fs::remove_file(&path).ok();
}
