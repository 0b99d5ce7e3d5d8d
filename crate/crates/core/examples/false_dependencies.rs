//! How register reuse inflates the critical path when output dependencies
//! are kept, and the DOT rendering of both graphs.

use edag::edag::{build_from_str, BuildOptions, CostModel, FalseDeps};
use edag::graph::export_dot;
use edag::CacheConfig;

const FRAGMENT: &str = "\
lw a4,0(a5);0x1000
lw a3,0(a2);0x2000
mulw a4,a4,a3
lw a6,4(a5);0x1004
addw a0,a0,a4
lw a3,32(a2);0x2020
mulw a6,a6,a3
addw a1,a1,a6
addw a0,a0,a1
sw a0,0(a7);0x3000
";

fn main() {
    for (label, false_deps) in [
        ("with WAW edges", FalseDeps::WAW),
        ("true dependencies only", FalseDeps::NONE),
    ] {
        let opts = BuildOptions {
            false_deps,
            ..BuildOptions::materialized()
        };
        let out =
            build_from_str(FRAGMENT, CacheConfig::disabled(), CostModel::unit(), opts).unwrap();
        let s = &out.summary;
        println!(
            "{label}: T1 = {}, Tinf = {}, parallelism = {:.3}",
            s.t1,
            s.tinf,
            s.t1 as f64 / s.tinf as f64
        );
        let mut dot = Vec::new();
        export_dot(out.graph.as_ref().unwrap(), &mut dot, 100).unwrap();
        println!("{}", String::from_utf8(dot).unwrap());
    }
}
