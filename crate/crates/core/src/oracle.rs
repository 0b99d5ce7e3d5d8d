//! Brute-force validators over a [`MaterializedEdag`]: a greedy list
//! scheduler with `m` memory issue slots and an exhaustive memory-depth DP.
//! Both ignore the times and layers stored on the vertices.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::graph::{CapExceeded, MaterializedEdag};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleResult {
    pub makespan: u64,
    /// Issue time per vertex, indexed by `id - 1`.
    pub issue: Vec<u64>,
    pub finish: Vec<u64>,
    /// Most memory vertices in flight at once.
    pub peak_memory_issues: u32,
}

/// Order in which ready memory vertices claim free slots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Priority {
    /// Shallowest memory layer first, then vertex id. With `unit_cost = 0`
    /// this never exceeds the layer-by-layer upper bound.
    #[default]
    LayerThenId,
    /// Vertex id only. Still work-conserving, but a low-id vertex can hold a
    /// slot while an earlier-layer vertex heading a long chain waits, so the
    /// makespan may exceed the layer-by-layer bound.
    Id,
}

/// Greedy event-driven schedule with the default [`Priority`].
pub fn simulate_greedy_memory(
    graph: &MaterializedEdag,
    m: u32,
    alpha: u64,
    unit_cost: u64,
    cap: usize,
) -> Result<ScheduleResult, CapExceeded> {
    simulate_greedy_memory_by(graph, m, alpha, unit_cost, cap, Priority::default())
}

/// Greedy event-driven schedule. Ready non-memory vertices start at once and
/// cost `unit_cost`; ready memory vertices cost `alpha` and start in
/// `priority` order whenever one of the `m` slots is free.
pub fn simulate_greedy_memory_by(
    graph: &MaterializedEdag,
    m: u32,
    alpha: u64,
    unit_cost: u64,
    cap: usize,
    priority: Priority,
) -> Result<ScheduleResult, CapExceeded> {
    graph.check_cap(cap)?;
    assert!(m >= 1, "m must be at least 1");
    assert!(alpha >= 1, "alpha must be at least 1");
    let n = graph.len();
    let succ = graph.successors();
    let mut indeg = vec![0u32; n];
    for e in &graph.edges {
        indeg[e.to as usize - 1] += 1;
    }
    let layer = match priority {
        Priority::LayerThenId => memory_layers(graph),
        Priority::Id => vec![0; n],
    };

    let mut issue = vec![0u64; n];
    let mut finish = vec![0u64; n];
    // Completion events, earliest first.
    let mut events: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
    let mut mem_ready: BTreeSet<(u64, u32)> = BTreeSet::new();
    let mut in_flight = 0u32;
    let mut peak = 0u32;
    let mut now = 0u64;

    let release = |id: u32,
                   now: u64,
                   issue: &mut [u64],
                   events: &mut BinaryHeap<_>,
                   mem_ready: &mut BTreeSet<(u64, u32)>| {
        if graph.vertex(id).is_memory_access {
            mem_ready.insert((layer[id as usize - 1], id));
        } else {
            issue[id as usize - 1] = now;
            events.push(Reverse((now + unit_cost, id)));
        }
    };
    for (i, &d) in indeg.iter().enumerate() {
        if d == 0 {
            release(i as u32 + 1, 0, &mut issue, &mut events, &mut mem_ready);
        }
    }

    loop {
        // Drain every completion at `now`, including zero-cost cascades, so
        // the memory slots see the complete ready set for this instant.
        while let Some(&Reverse((t, id))) = events.peek() {
            if t > now {
                break;
            }
            events.pop();
            finish[id as usize - 1] = t;
            if graph.vertex(id).is_memory_access {
                in_flight -= 1;
            }
            for &s in &succ[id as usize - 1] {
                let d = &mut indeg[s as usize - 1];
                *d -= 1;
                if *d == 0 {
                    release(s, now, &mut issue, &mut events, &mut mem_ready);
                }
            }
        }
        while in_flight < m {
            let Some((_, id)) = mem_ready.pop_first() else {
                break;
            };
            issue[id as usize - 1] = now;
            events.push(Reverse((now + alpha, id)));
            in_flight += 1;
        }
        peak = peak.max(in_flight);
        match events.peek() {
            Some(&Reverse((t, _))) => now = t,
            None => break,
        }
    }
    debug_assert!(mem_ready.is_empty());

    Ok(ScheduleResult {
        makespan: finish.iter().copied().max().unwrap_or(0),
        issue,
        finish,
        peak_memory_issues: peak,
    })
}

/// Most memory-access vertices on any path ending at each vertex, inclusive.
fn memory_layers(graph: &MaterializedEdag) -> Vec<u64> {
    let preds = graph.predecessors();
    let mut depth = vec![0u64; graph.len()];
    for (i, v) in graph.vertices.iter().enumerate() {
        let best = preds[i]
            .iter()
            .map(|&p| depth[p as usize - 1])
            .max()
            .unwrap_or(0);
        depth[i] = best + v.is_memory_access as u64;
    }
    depth
}

/// Largest number of memory-access vertices on any path, by DP over the edge list.
pub fn brute_force_memory_depth(graph: &MaterializedEdag, cap: usize) -> Result<u64, CapExceeded> {
    graph.check_cap(cap)?;
    Ok(memory_layers(graph).into_iter().max().unwrap_or(0))
}
