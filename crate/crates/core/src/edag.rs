//! eDAG construction from a record stream.
//!
//! Each record becomes a vertex. A last-writer table maps every register and
//! memory byte to the vertex that last wrote it; a vertex depends on the last
//! writers of everything it reads (RAW only). Start/finish times and memory
//! layers are propagated through the table as the stream goes by, so the
//! default mode never holds the graph in memory.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{Cache, CacheConfig, CacheConfigError, CacheStats};
use crate::graph::{CapExceeded, Edge, EdgeKind, MaterializedEdag, Vertex};
use crate::isa::{decode_effect, DecodeError, DecodeMode, InstructionEffect, ValueKey};
use crate::reg::Reg;
use crate::trace::{TraceError, TraceRecord};

pub const DEFAULT_VERTEX_CAP: usize = 200_000;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    CapExceeded(#[from] CapExceeded),
    #[error(transparent)]
    Cache(#[from] CacheConfigError),
    #[error("invalid build options: {0}")]
    InvalidOptions(String),
}

/// Two-tier vertex cost: RAM accesses cost `miss_cost`, everything else
/// (cache hits included) costs `unit_cost`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub miss_cost: u64,
    pub unit_cost: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            miss_cost: 200,
            unit_cost: 1,
        }
    }
}

impl CostModel {
    pub fn unit() -> Self {
        CostModel {
            miss_cost: 1,
            unit_cost: 1,
        }
    }
}

/// Which false-dependency classes to keep as extra edges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FalseDeps {
    pub war: bool,
    pub waw: bool,
}

impl FalseDeps {
    pub const NONE: FalseDeps = FalseDeps {
        war: false,
        waw: false,
    };
    pub const WAW: FalseDeps = FalseDeps {
        war: false,
        waw: true,
    };
    pub const ALL: FalseDeps = FalseDeps {
        war: true,
        waw: true,
    };

    pub fn any(self) -> bool {
        self.war || self.waw
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub materialize: bool,
    pub false_deps: FalseDeps,
    /// Sampling interval for the data-movement series, in cycles.
    pub tau: Option<u64>,
    pub vertex_cap: usize,
    pub decode_mode: DecodeMode,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            materialize: false,
            false_deps: FalseDeps::NONE,
            tau: None,
            vertex_cap: DEFAULT_VERTEX_CAP,
            decode_mode: DecodeMode::Strict,
        }
    }
}

impl BuildOptions {
    pub fn materialized() -> Self {
        BuildOptions {
            materialize: true,
            ..Default::default()
        }
    }
}

/// Bytes in flight at each sample point `tau * i`, `i = 0..=span / tau`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MovementBins {
    pub tau: u64,
    /// Critical-path length the bins were closed against.
    pub span: u64,
    pub bins: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EdagSummary {
    /// Total work.
    pub t1: u64,
    /// Critical-path length: the latest finish time.
    pub tinf: u64,
    pub vertex_count: u64,
    /// Summed cost of non-memory-access vertices.
    pub c: u64,
    /// Memory work: number of memory-access vertices.
    pub w: u64,
    /// Memory depth: number of layers.
    pub d: u64,
    /// Layer sizes; index 0 is layer 1.
    pub layer_counts: Vec<u64>,
    pub bytes_total: u64,
    pub movement: Option<MovementBins>,
    pub cache: CacheStats,
    pub unknown_mnemonics: u64,
    pub atomic_records: u64,
}

impl EdagSummary {
    pub fn parallelism(&self) -> Option<(u64, u64)> {
        (self.tinf > 0).then_some((self.t1, self.tinf))
    }
}

pub struct BuildOutput {
    pub summary: EdagSummary,
    pub graph: Option<MaterializedEdag>,
}

/// What the table remembers about the last writer of a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueState {
    pub finish: u64,
    /// Deepest memory layer reaching the writer.
    pub mlayer: u32,
    /// Writer's vertex id. Only meaningful when materializing.
    pub writer: u32,
}

/// Byte-granular memory map, compacted per aligned 8-byte word: a word whose
/// written bytes share one writer is stored as a single state plus mask.
#[derive(Default)]
struct MemTable {
    words: FxHashMap<u64, Word>,
}

enum Word {
    Uniform { state: ValueState, mask: u8 },
    Split(Box<[Option<ValueState>; 8]>),
}

fn word_spans(addr: u64, size: u64) -> impl Iterator<Item = (u64, u8)> {
    let end = addr.saturating_add(size);
    let first = addr >> 3;
    let last = (end - 1) >> 3;
    (first..=last).map(move |w| {
        let lo = (w << 3).max(addr);
        let hi = ((w << 3) + 8).min(end);
        let mut mask = 0u8;
        for b in lo..hi {
            mask |= 1 << (b & 7);
        }
        (w, mask)
    })
}

impl MemTable {
    fn read(&self, addr: u64, size: u64, mut f: impl FnMut(ValueState)) {
        for (w, mask) in word_spans(addr, size) {
            match self.words.get(&w) {
                None => {}
                Some(Word::Uniform { state, mask: have }) => {
                    if have & mask != 0 {
                        f(*state);
                    }
                }
                Some(Word::Split(bytes)) => {
                    for (i, b) in bytes.iter().enumerate() {
                        if mask & (1 << i) != 0 {
                            if let Some(s) = b {
                                f(*s);
                            }
                        }
                    }
                }
            }
        }
    }

    fn write(&mut self, addr: u64, size: u64, state: ValueState) {
        for (w, mask) in word_spans(addr, size) {
            let entry = self
                .words
                .entry(w)
                .or_insert(Word::Uniform { state, mask: 0 });
            match entry {
                Word::Uniform {
                    state: old,
                    mask: have,
                } => {
                    if *have & !mask == 0 || *old == state {
                        *have |= mask;
                        *old = state;
                    } else {
                        let mut bytes = [None; 8];
                        for (i, b) in bytes.iter_mut().enumerate() {
                            let bit = 1u8 << i;
                            if mask & bit != 0 {
                                *b = Some(state);
                            } else if *have & bit != 0 {
                                *b = Some(*old);
                            }
                        }
                        *entry = Word::Split(Box::new(bytes));
                    }
                }
                Word::Split(bytes) => {
                    if mask == 0xff {
                        *entry = Word::Uniform { state, mask };
                    } else {
                        for (i, b) in bytes.iter_mut().enumerate() {
                            if mask & (1 << i) != 0 {
                                *b = Some(state);
                            }
                        }
                    }
                }
            }
        }
    }
}

struct GraphState {
    graph: MaterializedEdag,
    /// Readers since the last write, per key (WAR tracking only).
    readers: FxHashMap<ValueKey, Vec<u32>>,
    scratch: Vec<(u32, EdgeKind)>,
}

/// Incremental builder. Feed records in trace order, then [`finish`](Self::finish).
pub struct EdagBuilder {
    cache: Cache,
    cost: CostModel,
    opts: BuildOptions,
    regs: [Option<ValueState>; Reg::COUNT],
    mem: MemTable,
    summary: EdagSummary,
    bins: Vec<u64>,
    graph: Option<GraphState>,
}

impl EdagBuilder {
    pub fn new(
        cache: CacheConfig,
        cost: CostModel,
        opts: BuildOptions,
    ) -> Result<Self, BuildError> {
        if opts.false_deps.any() && !opts.materialize {
            return Err(BuildError::InvalidOptions(
                "keeping false dependencies requires materialization".into(),
            ));
        }
        if cost.miss_cost < 1 {
            return Err(BuildError::InvalidOptions(
                "miss cost must be at least 1".into(),
            ));
        }
        if opts.tau == Some(0) {
            return Err(BuildError::InvalidOptions("tau must be positive".into()));
        }
        if opts.materialize && opts.vertex_cap > u32::MAX as usize {
            return Err(BuildError::InvalidOptions(
                "vertex cap exceeds u32 range".into(),
            ));
        }
        Ok(EdagBuilder {
            cache: Cache::new(cache)?,
            cost,
            opts,
            regs: [None; Reg::COUNT],
            mem: MemTable::default(),
            summary: EdagSummary::default(),
            bins: Vec::new(),
            graph: opts.materialize.then(|| GraphState {
                graph: MaterializedEdag::default(),
                readers: FxHashMap::default(),
                scratch: Vec::new(),
            }),
        })
    }

    pub fn vertex_count(&self) -> u64 {
        self.summary.vertex_count
    }

    pub fn push(&mut self, rec: &TraceRecord) -> Result<(), BuildError> {
        let effect = decode_effect(rec, self.opts.decode_mode)?;
        if self.graph.is_some() && self.summary.vertex_count >= self.opts.vertex_cap as u64 {
            return Err(CapExceeded {
                vertices: self.summary.vertex_count + 1,
                cap: self.opts.vertex_cap,
            }
            .into());
        }
        self.push_effect(rec, &effect);
        Ok(())
    }

    fn push_effect(&mut self, rec: &TraceRecord, effect: &InstructionEffect) {
        let s = &mut self.summary;
        s.vertex_count += 1;
        let id = s.vertex_count as u32;
        s.unknown_mnemonics += effect.unknown as u64;
        s.atomic_records += (effect.atomic && effect.mem.is_some()) as u64;

        let (is_mem, bytes) = match effect.mem {
            Some(m) => {
                let out = self.cache.access(m.address, m.size as u64, m.is_write);
                match (out.is_miss(), self.cache.config().enabled) {
                    (false, _) => (false, 0),
                    (true, true) => (
                        true,
                        self.cache.config().line_size * out.lines_missed as u64,
                    ),
                    (true, false) => (true, m.size as u64),
                }
            }
            None => (false, 0),
        };
        let cost = if is_mem {
            self.cost.miss_cost
        } else {
            self.cost.unit_cost
        };

        let mut start = 0u64;
        let mut ml_in = 0u32;
        let mut take = |st: ValueState| {
            start = start.max(st.finish);
            ml_in = ml_in.max(st.mlayer);
        };
        let mem_read = effect.mem.filter(|_| effect.reads_memory());
        let mem_write = effect.mem.filter(|_| effect.writes_memory());

        if let Some(gs) = &mut self.graph {
            // Materialized path: same propagation, but predecessor ids are kept.
            let preds = &mut gs.scratch;
            preds.clear();
            for r in effect.read_regs.iter() {
                if let Some(st) = self.regs[r.index()] {
                    take(st);
                    preds.push((st.writer, EdgeKind::Raw));
                }
            }
            if let Some(m) = mem_read {
                self.mem.read(m.address, m.size as u64, |st| {
                    take(st);
                    preds.push((st.writer, EdgeKind::Raw));
                });
            }
            if self.opts.false_deps.waw {
                for r in effect.write_regs.iter() {
                    if let Some(st) = self.regs[r.index()] {
                        take(st);
                        preds.push((st.writer, EdgeKind::Waw));
                    }
                }
                if let Some(m) = mem_write {
                    self.mem.read(m.address, m.size as u64, |st| {
                        take(st);
                        preds.push((st.writer, EdgeKind::Waw));
                    });
                }
            }
            if self.opts.false_deps.war {
                for key in effect.writes() {
                    if let Some(list) = gs.readers.get(&key) {
                        for &reader in list {
                            if reader != id {
                                let v = gs.graph.vertex(reader);
                                take(ValueState {
                                    finish: v.finish,
                                    mlayer: v.reach,
                                    writer: reader,
                                });
                                preds.push((reader, EdgeKind::War));
                            }
                        }
                    }
                }
                for key in effect.reads() {
                    gs.readers.entry(key).or_default().push(id);
                }
                for key in effect.writes() {
                    gs.readers.remove(&key);
                }
            }
            // One edge per predecessor; a true dependency wins over a false one.
            preds.sort_unstable();
            preds.dedup_by_key(|p| p.0);
            gs.graph.edges.extend(
                preds
                    .iter()
                    .map(|&(from, kind)| Edge { from, to: id, kind }),
            );
        } else {
            for r in effect.read_regs.iter() {
                if let Some(st) = self.regs[r.index()] {
                    take(st);
                }
            }
            if let Some(m) = mem_read {
                self.mem.read(m.address, m.size as u64, take);
            }
        }

        let finish = start + cost;
        let (layer, reach) = if is_mem {
            (ml_in + 1, ml_in + 1)
        } else {
            (0, ml_in)
        };
        let state = ValueState {
            finish,
            mlayer: reach,
            writer: id,
        };
        for r in effect.write_regs.iter() {
            self.regs[r.index()] = Some(state);
        }
        if let Some(m) = mem_write {
            self.mem.write(m.address, m.size as u64, state);
        }

        let s = &mut self.summary;
        s.t1 += cost;
        s.tinf = s.tinf.max(finish);
        if is_mem {
            s.w += 1;
            s.bytes_total += bytes;
            let l = layer as usize;
            if s.layer_counts.len() < l {
                s.layer_counts.resize(l, 0);
            }
            s.layer_counts[l - 1] += 1;
            if let Some(tau) = self.opts.tau {
                let first = start.div_ceil(tau) as usize;
                let last = (finish / tau) as usize;
                if self.bins.len() <= last {
                    self.bins.resize(last + 1, 0);
                }
                for b in &mut self.bins[first..=last] {
                    *b += bytes;
                }
            }
        } else {
            s.c += cost;
        }

        if let Some(gs) = &mut self.graph {
            gs.graph.vertices.push(Vertex {
                id,
                text: rec.disassembly(),
                kind: effect.kind,
                is_memory_access: is_mem,
                cost,
                bytes,
                start,
                finish,
                layer,
                reach,
            });
        }
    }

    pub fn finish(self) -> BuildOutput {
        let mut summary = self.summary;
        summary.d = summary.layer_counts.len() as u64;
        summary.cache = self.cache.stats();
        if let Some(tau) = self.opts.tau {
            let mut bins = self.bins;
            bins.resize((summary.tinf / tau) as usize + 1, 0);
            summary.movement = Some(MovementBins {
                tau,
                span: summary.tinf,
                bins,
            });
        }
        let graph = self.graph.map(|gs| {
            let mut g = gs.graph;
            g.cache = summary.cache;
            g.unknown_mnemonics = summary.unknown_mnemonics;
            g.atomic_records = summary.atomic_records;
            g
        });
        BuildOutput { summary, graph }
    }
}

/// Build from a record stream in one call.
pub fn build<I>(
    records: I,
    cache: CacheConfig,
    cost: CostModel,
    opts: BuildOptions,
) -> Result<BuildOutput, BuildError>
where
    I: IntoIterator<Item = Result<TraceRecord, TraceError>>,
{
    let mut builder = EdagBuilder::new(cache, cost, opts)?;
    for rec in records {
        builder.push(&rec?)?;
    }
    Ok(builder.finish())
}

/// Convenience for in-memory trace text.
pub fn build_from_str(
    text: &str,
    cache: CacheConfig,
    cost: CostModel,
    opts: BuildOptions,
) -> Result<BuildOutput, BuildError> {
    build(crate::trace::read_trace(text.as_bytes()), cache, cost, opts)
}
