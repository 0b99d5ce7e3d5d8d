//! Deterministic synthetic traces with known memory work and depth.
//!
//! Every generator emits text in the trace grammar and reports the `(W, D)`
//! the trace must produce when analyzed with the cache disabled. The
//! `random-dag` pattern also reports its exact dependence edges.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("writing trace: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// Load, increment, store to the next slot: every access depends on the previous one.
    Chain,
    /// Independent loads off one never-written base register.
    Fanout,
    /// Array summation loop.
    Sum,
    /// Each load's address register is the previous load's destination.
    PtrChase,
    /// Seeded random mix of loads, stores and arithmetic.
    RandomDag,
}

impl Pattern {
    pub const ALL: [Pattern; 5] = [
        Pattern::Chain,
        Pattern::Fanout,
        Pattern::Sum,
        Pattern::PtrChase,
        Pattern::RandomDag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Chain => "chain",
            Pattern::Fanout => "fanout",
            Pattern::Sum => "sum",
            Pattern::PtrChase => "ptr-chase",
            Pattern::RandomDag => "random-dag",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| SynthError::InvalidSpec(format!("unknown pattern `{s}`")))
    }
}

pub const DEFAULT_BASE_ADDR: u64 = 0x4008_0000;
pub const DEFAULT_STRIDE: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSpec {
    pub pattern: Pattern,
    pub n: u64,
    pub seed: u64,
    pub base_addr: u64,
    pub stride: u64,
}

impl SynthSpec {
    pub fn new(pattern: Pattern, n: u64) -> Self {
        SynthSpec {
            pattern,
            n,
            seed: 0,
            base_addr: DEFAULT_BASE_ADDR,
            stride: DEFAULT_STRIDE,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SynthSpec { seed, ..self }
    }

    pub fn with_stride(self, stride: u64) -> Self {
        SynthSpec { stride, ..self }
    }

    pub fn with_base(self, base_addr: u64) -> Self {
        SynthSpec { base_addr, ..self }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self.stride == 0 {
            return bad("stride must be at least 1");
        }
        if self.pattern == Pattern::RandomDag && self.stride < 8 {
            return bad("random-dag uses 8-byte accesses and needs stride >= 8");
        }
        if self.pattern == Pattern::RandomDag && self.n > u32::MAX as u64 {
            return bad("random-dag n exceeds the vertex id range");
        }
        let span = self
            .n
            .max(4)
            .checked_add(1)
            .and_then(|k| k.checked_mul(self.stride));
        if span.and_then(|s| s.checked_add(self.base_addr)).is_none() {
            return bad("addresses overflow 64 bits");
        }
        Ok(())
    }
}

/// What the generated trace must produce with the cache disabled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub memory_work: u64,
    pub memory_depth: u64,
    /// Exact RAW edges `(from, to)` by 1-based line number, grouped by target;
    /// only for `random-dag`.
    pub edges: Option<Vec<(u32, u32)>>,
    pub lines: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthTrace {
    pub text: String,
    pub truth: GroundTruth,
}

/// Generate a trace in memory.
pub fn generate(spec: &SynthSpec) -> Result<SynthTrace, SynthError> {
    let mut buf = Vec::new();
    let truth = write_trace(spec, &mut buf)?;
    Ok(SynthTrace {
        text: String::from_utf8(buf).expect("generators emit ASCII"),
        truth,
    })
}

/// Stream a trace to `out`; suitable for traces too large to hold in memory.
pub fn write_trace<W: Write>(spec: &SynthSpec, out: W) -> Result<GroundTruth, SynthError> {
    spec.validate()?;
    let mut out = io::BufWriter::new(out);
    let truth = match spec.pattern {
        Pattern::Chain => chain(spec, &mut out)?,
        Pattern::Fanout => fanout(spec, &mut out)?,
        Pattern::Sum => sum(spec, &mut out)?,
        Pattern::PtrChase => ptr_chase(spec, &mut out)?,
        Pattern::RandomDag => random_dag(spec, &mut out)?,
    };
    out.flush()?;
    Ok(truth)
}

fn truth(w: u64, d: u64, lines: u64) -> GroundTruth {
    GroundTruth {
        memory_work: w,
        memory_depth: d,
        edges: None,
        lines,
    }
}

fn chain(spec: &SynthSpec, out: &mut impl Write) -> io::Result<GroundTruth> {
    let s = spec.stride;
    for i in 0..spec.n {
        let a = spec.base_addr + i * s;
        writeln!(out, "lw a4,0(a5);0x{a:x}")?;
        writeln!(out, "addiw a4,a4,1")?;
        writeln!(out, "sw a4,{s}(a5);0x{:x}", a + s)?;
        writeln!(out, "addi a5,a5,{s}")?;
    }
    Ok(truth(2 * spec.n, 2 * spec.n, 4 * spec.n))
}

const FANOUT_DESTS: [&str; 8] = ["a1", "a2", "a3", "a4", "a6", "a7", "t0", "t1"];

fn fanout(spec: &SynthSpec, out: &mut impl Write) -> io::Result<GroundTruth> {
    for i in 0..spec.n {
        let off = i * spec.stride;
        let rd = FANOUT_DESTS[(i % FANOUT_DESTS.len() as u64) as usize];
        writeln!(out, "lw {rd},{off}(a0);0x{:x}", spec.base_addr + off)?;
    }
    Ok(truth(spec.n, 1, spec.n))
}

fn sum(spec: &SynthSpec, out: &mut impl Write) -> io::Result<GroundTruth> {
    writeln!(out, "add a3,a0,a1")?;
    writeln!(out, "mv a0,zero")?;
    for i in 0..spec.n {
        writeln!(out, "lw a4,0(a5);0x{:x}", spec.base_addr + i * spec.stride)?;
        writeln!(out, "addi a5,a5,{}", spec.stride)?;
        writeln!(out, "addw a0,a0,a4")?;
        writeln!(out, "bne a3,a5,-6")?;
    }
    Ok(truth(spec.n, 1, 2 + 4 * spec.n))
}

fn ptr_chase(spec: &SynthSpec, out: &mut impl Write) -> io::Result<GroundTruth> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut slots: Vec<u64> = (0..spec.n).collect();
    slots.shuffle(&mut rng);
    for slot in slots {
        writeln!(
            out,
            "ld a5,0(a5);0x{:x}",
            spec.base_addr + slot * spec.stride
        )?;
    }
    Ok(truth(spec.n, spec.n, spec.n))
}

const POOL: [&str; 25] = [
    "a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "t0", "t1", "t2", "t3", "t4", "t5", "t6", "s1",
    "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10",
];

fn random_dag(spec: &SynthSpec, out: &mut impl Write) -> io::Result<GroundTruth> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let slots = (spec.n / 4).max(4);
    // Independent last-writer bookkeeping over register names and slots.
    let mut reg_writer: FxHashMap<&str, u32> = FxHashMap::default();
    let mut slot_writer: FxHashMap<u64, u32> = FxHashMap::default();
    let mut edges = Vec::new();
    let mut mem_depth: Vec<u64> = Vec::with_capacity(spec.n as usize);
    let mut work = 0;

    for id in 1..=spec.n as u32 {
        let mut preds: Vec<u32> = Vec::with_capacity(2);
        let pick = |rng: &mut ChaCha8Rng| POOL[rng.gen_range(0..POOL.len())];
        let roll = rng.gen_range(0..100);
        let (is_mem, dest) = if roll < 35 {
            // load: base from the pool (or the never-written gp)
            let rd = pick(&mut rng);
            let base = if rng.gen_bool(0.5) {
                pick(&mut rng)
            } else {
                "gp"
            };
            let slot = rng.gen_range(0..slots);
            preds.extend(reg_writer.get(base));
            preds.extend(slot_writer.get(&slot));
            writeln!(
                out,
                "ld {rd},0({base});0x{:x}",
                spec.base_addr + slot * spec.stride
            )?;
            (true, Some(rd))
        } else if roll < 60 {
            let rs = pick(&mut rng);
            let slot = rng.gen_range(0..slots);
            preds.extend(reg_writer.get(rs));
            writeln!(
                out,
                "sd {rs},0(gp);0x{:x}",
                spec.base_addr + slot * spec.stride
            )?;
            slot_writer.insert(slot, id);
            (true, None)
        } else {
            let rd = pick(&mut rng);
            match rng.gen_range(0..3) {
                0 => writeln!(out, "li {rd},{}", rng.gen_range(-2048..2048))?,
                1 => {
                    let rs = pick(&mut rng);
                    preds.extend(reg_writer.get(rs));
                    writeln!(out, "addi {rd},{rs},{}", rng.gen_range(-2048..2048))?;
                }
                _ => {
                    let (r1, r2) = (pick(&mut rng), pick(&mut rng));
                    preds.extend(reg_writer.get(r1));
                    preds.extend(reg_writer.get(r2));
                    writeln!(out, "add {rd},{r1},{r2}")?;
                }
            }
            (false, Some(rd))
        };
        preds.sort_unstable();
        preds.dedup();
        let below = preds
            .iter()
            .map(|&p| mem_depth[p as usize - 1])
            .max()
            .unwrap_or(0);
        mem_depth.push(below + is_mem as u64);
        work += is_mem as u64;
        edges.extend(preds.into_iter().map(|p| (p, id)));
        if let Some(rd) = dest {
            reg_writer.insert(rd, id);
        }
    }
    Ok(GroundTruth {
        memory_work: work,
        memory_depth: mem_depth.into_iter().max().unwrap_or(0),
        edges: Some(edges),
        lines: spec.n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_reproduces_loop_prefix() {
        let t = generate(
            &SynthSpec::new(Pattern::Sum, 2)
                .with_base(0x4008_0290)
                .with_stride(4),
        )
        .unwrap();
        assert_eq!(
            t.text,
            "add a3,a0,a1\nmv a0,zero\n\
             lw a4,0(a5);0x40080290\naddi a5,a5,4\naddw a0,a0,a4\nbne a3,a5,-6\n\
             lw a4,0(a5);0x40080294\naddi a5,a5,4\naddw a0,a0,a4\nbne a3,a5,-6\n"
        );
        assert_eq!(
            (t.truth.memory_work, t.truth.memory_depth, t.truth.lines),
            (2, 1, 10)
        );
    }

    #[test]
    fn deterministic_per_seed() {
        for p in Pattern::ALL {
            let a = generate(&SynthSpec::new(p, 50).with_seed(7)).unwrap();
            let b = generate(&SynthSpec::new(p, 50).with_seed(7)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.text.lines().count() as u64, a.truth.lines);
        }
        let a = generate(&SynthSpec::new(Pattern::RandomDag, 50).with_seed(1)).unwrap();
        let b = generate(&SynthSpec::new(Pattern::RandomDag, 50).with_seed(2)).unwrap();
        assert_ne!(a.text, b.text);
    }

    #[test]
    fn ptr_chase_addresses_are_a_permutation() {
        let t = generate(&SynthSpec::new(Pattern::PtrChase, 16).with_seed(3)).unwrap();
        let mut addrs: Vec<u64> = t
            .text
            .lines()
            .map(|l| u64::from_str_radix(l.split(";0x").nth(1).unwrap(), 16).unwrap())
            .collect();
        addrs.sort_unstable();
        let want: Vec<u64> = (0..16)
            .map(|i| DEFAULT_BASE_ADDR + i * DEFAULT_STRIDE)
            .collect();
        assert_eq!(addrs, want);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&SynthSpec::new(Pattern::Sum, 0)).is_err());
        assert!(generate(&SynthSpec::new(Pattern::Sum, 4).with_stride(0)).is_err());
        assert!(generate(&SynthSpec::new(Pattern::RandomDag, 4).with_stride(4)).is_err());
        assert!(generate(&SynthSpec::new(Pattern::Fanout, 4).with_base(u64::MAX - 8)).is_err());
        assert!("zigzag".parse::<Pattern>().is_err());
        assert_eq!("ptr-chase".parse::<Pattern>().unwrap(), Pattern::PtrChase);
    }

    #[test]
    fn random_dag_edges_are_forward() {
        let t = generate(&SynthSpec::new(Pattern::RandomDag, 200).with_seed(11)).unwrap();
        let edges = t.truth.edges.unwrap();
        assert!(!edges.is_empty());
        assert!(edges.iter().all(|&(a, b)| a < b));
        assert!(t.truth.memory_depth >= 1 && t.truth.memory_depth <= t.truth.memory_work);
    }
}
