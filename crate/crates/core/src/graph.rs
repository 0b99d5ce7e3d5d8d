//! Explicit vertex/edge form of an eDAG, for DOT export and the oracles.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::cache::CacheStats;
use crate::edag::{EdagSummary, MovementBins};
use crate::isa::InsnKind;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{vertices} vertices exceed the materialization cap of {cap}")]
pub struct CapExceeded {
    pub vertices: u64,
    pub cap: usize,
}

#[derive(Debug, Error)]
pub enum DotError {
    #[error(transparent)]
    CapExceeded(#[from] CapExceeded),
    #[error("writing DOT output: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EdgeKind {
    /// True dependency.
    Raw,
    /// Anti-dependency; only present when false dependencies are retained.
    War,
    /// Output dependency; only present when false dependencies are retained.
    Waw,
}

impl EdgeKind {
    pub fn is_false_dep(self) -> bool {
        self != EdgeKind::Raw
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Vertex {
    /// 1-based position in the trace.
    pub id: u32,
    pub text: String,
    pub kind: InsnKind,
    pub is_memory_access: bool,
    pub cost: u64,
    /// Bytes moved to or from RAM.
    pub bytes: u64,
    pub start: u64,
    pub finish: u64,
    /// Memory layer for memory-access vertices, 0 otherwise.
    pub layer: u32,
    /// Deepest memory layer reaching this vertex (inclusive).
    pub reach: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: u32,
    pub to: u32,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaterializedEdag {
    pub vertices: Vec<Vertex>,
    /// Grouped by target in ascending order; `from < to` always.
    pub edges: Vec<Edge>,
    /// Counters carried over from the build; not derivable from the graph.
    pub cache: CacheStats,
    pub unknown_mnemonics: u64,
    pub atomic_records: u64,
}

impl MaterializedEdag {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: u32) -> &Vertex {
        &self.vertices[id as usize - 1]
    }

    pub fn check_cap(&self, cap: usize) -> Result<(), CapExceeded> {
        if self.vertices.len() > cap {
            return Err(CapExceeded {
                vertices: self.vertices.len() as u64,
                cap,
            });
        }
        Ok(())
    }

    /// Predecessor lists indexed by `id - 1`.
    pub fn predecessors(&self) -> Vec<Vec<u32>> {
        let mut preds = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            preds[e.to as usize - 1].push(e.from);
        }
        preds
    }

    pub fn successors(&self) -> Vec<Vec<u32>> {
        let mut succ = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            succ[e.from as usize - 1].push(e.to);
        }
        succ
    }

    /// Recompute every summary field from the vertex costs and the edge list
    /// alone, ignoring the start/finish/layer values stored on the vertices.
    pub fn recompute_summary(&self, tau: Option<u64>) -> EdagSummary {
        let preds = self.predecessors();
        let n = self.vertices.len();
        let mut finish = vec![0u64; n];
        let mut reach = vec![0u64; n];
        let mut start = vec![0u64; n];
        let mut s = EdagSummary {
            vertex_count: n as u64,
            cache: self.cache,
            unknown_mnemonics: self.unknown_mnemonics,
            atomic_records: self.atomic_records,
            ..EdagSummary::default()
        };
        for (i, v) in self.vertices.iter().enumerate() {
            let st = preds[i]
                .iter()
                .map(|&p| finish[p as usize - 1])
                .max()
                .unwrap_or(0);
            let ml = preds[i]
                .iter()
                .map(|&p| reach[p as usize - 1])
                .max()
                .unwrap_or(0);
            start[i] = st;
            finish[i] = st + v.cost;
            s.t1 += v.cost;
            s.tinf = s.tinf.max(finish[i]);
            if v.is_memory_access {
                reach[i] = ml + 1;
                let layer = reach[i] as usize;
                if s.layer_counts.len() < layer {
                    s.layer_counts.resize(layer, 0);
                }
                s.layer_counts[layer - 1] += 1;
                s.w += 1;
                s.bytes_total += v.bytes;
            } else {
                reach[i] = ml;
                s.c += v.cost;
            }
        }
        s.d = s.layer_counts.len() as u64;
        s.movement = tau.map(|tau| {
            let mut bins = vec![0u64; (s.tinf / tau) as usize + 1];
            for (i, v) in self.vertices.iter().enumerate() {
                if v.bytes == 0 || !v.is_memory_access {
                    continue;
                }
                let first = start[i].div_ceil(tau) as usize;
                let last = (finish[i] / tau) as usize;
                for bin in bins.iter_mut().take(last + 1).skip(first) {
                    *bin += v.bytes;
                }
            }
            MovementBins {
                tau,
                span: s.tinf,
                bins,
            }
        });
        s
    }
}

fn escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: memory-access vertices red, others white, false
/// dependencies dashed.
pub fn export_dot<W: Write>(
    graph: &MaterializedEdag,
    mut sink: W,
    cap: usize,
) -> Result<(), DotError> {
    graph.check_cap(cap)?;
    writeln!(sink, "digraph edag {{")?;
    writeln!(sink, "  rankdir=TB;")?;
    writeln!(
        sink,
        "  node [shape=box, style=filled, fontname=\"monospace\"];"
    )?;
    for v in &graph.vertices {
        let color = if v.is_memory_access { "red" } else { "white" };
        writeln!(
            sink,
            "  v{} [label=\"{}: {}\", fillcolor={}];",
            v.id,
            v.id,
            escape(&v.text),
            color
        )?;
    }
    for e in &graph.edges {
        match e.kind {
            EdgeKind::Raw => writeln!(sink, "  v{} -> v{};", e.from, e.to)?,
            EdgeKind::War => writeln!(
                sink,
                "  v{} -> v{} [style=dashed, label=\"WAR\"];",
                e.from, e.to
            )?,
            EdgeKind::Waw => writeln!(
                sink,
                "  v{} -> v{} [style=dashed, label=\"WAW\"];",
                e.from, e.to
            )?,
        }
    }
    writeln!(sink, "}}")?;
    Ok(())
}
