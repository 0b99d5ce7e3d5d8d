//! Every synthetic pattern with its expected memory work and depth.

use edag::synth::{generate, Pattern, SynthSpec};

fn main() {
    for pattern in Pattern::ALL {
        let t = generate(&SynthSpec::new(pattern, 8).with_seed(3)).unwrap();
        println!(
            "== {pattern}: {} lines, W = {}, D = {}",
            t.truth.lines, t.truth.memory_work, t.truth.memory_depth
        );
        for line in t.text.lines().take(8) {
            println!("   {line}");
        }
        if let Some(edges) = &t.truth.edges {
            println!("   true dependencies: {edges:?}");
        }
    }
}
