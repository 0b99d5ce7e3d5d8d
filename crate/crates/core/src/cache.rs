//! Single-level set-associative LRU cache, write-through, no-write-allocate.
//!
//! A read that misses allocates its line (evicting the set's LRU line); a
//! write that hits refreshes recency, a write that misses leaves the cache
//! untouched. With the cache disabled every access is a miss.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CacheConfigError {
    #[error("cache spec `{0}` is not SIZE:LINE:ASSOC")]
    BadSpec(String),
    #[error("line size {0} is not a power of two")]
    LineSize(u64),
    #[error("associativity {0} is not a power of two")]
    Associativity(u32),
    #[error("total size {total} is not a positive multiple of line size x associativity ({line} x {assoc})")]
    Geometry { total: u64, line: u64, assoc: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub total_size: u64,
    pub line_size: u64,
    pub associativity: u32,
    pub enabled: bool,
}

impl CacheConfig {
    pub fn new(
        total_size: u64,
        line_size: u64,
        associativity: u32,
    ) -> Result<Self, CacheConfigError> {
        let cfg = CacheConfig {
            total_size,
            line_size,
            associativity,
            enabled: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every access goes to RAM.
    pub fn disabled() -> Self {
        CacheConfig {
            total_size: 0,
            line_size: 0,
            associativity: 0,
            enabled: false,
        }
    }

    /// 32 KiB, 64-byte lines, 2-way.
    pub fn l1_32k() -> Self {
        CacheConfig::new(32 * 1024, 64, 2).expect("valid geometry")
    }

    pub fn validate(&self) -> Result<(), CacheConfigError> {
        if !self.enabled {
            return Ok(());
        }
        if !self.line_size.is_power_of_two() {
            return Err(CacheConfigError::LineSize(self.line_size));
        }
        if !self.associativity.is_power_of_two() {
            return Err(CacheConfigError::Associativity(self.associativity));
        }
        let way_bytes = self.line_size * self.associativity as u64;
        if self.total_size == 0 || !self.total_size.is_multiple_of(way_bytes) {
            return Err(CacheConfigError::Geometry {
                total: self.total_size,
                line: self.line_size,
                assoc: self.associativity,
            });
        }
        Ok(())
    }

    pub fn num_sets(&self) -> u64 {
        if self.enabled {
            self.total_size / (self.line_size * self.associativity as u64)
        } else {
            0
        }
    }
}

impl FromStr for CacheConfig {
    type Err = CacheConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CacheConfigError::BadSpec(s.to_string());
        let parts: Vec<_> = s.split(':').map(str::trim).collect();
        let [size, line, assoc] = parts.as_slice() else {
            return Err(bad());
        };
        CacheConfig::new(
            size.parse().map_err(|_| bad())?,
            line.parse().map_err(|_| bad())?,
            assoc.parse().map_err(|_| bad())?,
        )
    }
}

impl fmt::Display for CacheConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.enabled {
            write!(
                f,
                "{}:{}:{}",
                self.total_size, self.line_size, self.associativity
            )
        } else {
            f.write_str("none")
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub load_hits: u64,
    pub load_misses: u64,
    pub store_hits: u64,
    pub store_misses: u64,
}

impl CacheStats {
    pub fn hits(&self) -> u64 {
        self.load_hits + self.store_hits
    }

    pub fn misses(&self) -> u64 {
        self.load_misses + self.store_misses
    }

    pub fn accesses(&self) -> u64 {
        self.hits() + self.misses()
    }
}

/// Result of one access. The access misses iff any touched line misses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessOutcome {
    pub lines_touched: u32,
    pub lines_missed: u32,
}

impl AccessOutcome {
    pub fn is_hit(&self) -> bool {
        self.lines_missed == 0
    }

    pub fn is_miss(&self) -> bool {
        !self.is_hit()
    }
}

const EMPTY: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct Cache {
    config: CacheConfig,
    // Set-major; within a set, most-recently-used first. EMPTY marks free ways.
    tags: Vec<u64>,
    line_shift: u32,
    set_mask: u64,
    stats: CacheStats,
}

impl Cache {
    pub fn new(config: CacheConfig) -> Result<Self, CacheConfigError> {
        config.validate()?;
        let sets = config.num_sets();
        let ways = if config.enabled {
            config.associativity as u64
        } else {
            0
        };
        Ok(Cache {
            config,
            tags: vec![EMPTY; (sets * ways) as usize],
            line_shift: if config.enabled {
                config.line_size.trailing_zeros()
            } else {
                0
            },
            set_mask: sets.saturating_sub(1),
            stats: CacheStats::default(),
        })
    }

    pub fn config(&self) -> &CacheConfig {
        &self.config
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    /// Probe every line overlapped by `[addr, addr + size)`.
    pub fn access(&mut self, addr: u64, size: u64, is_write: bool) -> AccessOutcome {
        if !self.config.enabled {
            return self.passthrough_access(addr, size, is_write);
        }
        let size = size.max(1);
        let first = addr >> self.line_shift;
        let last = addr.saturating_add(size - 1) >> self.line_shift;
        let mut outcome = AccessOutcome {
            lines_touched: 0,
            lines_missed: 0,
        };
        for line in first..=last {
            outcome.lines_touched += 1;
            if !self.probe_line(line, is_write) {
                outcome.lines_missed += 1;
            }
        }
        self.count(outcome.is_hit(), is_write);
        outcome
    }

    /// Disabled-cache path: always a miss, counters still maintained.
    pub fn passthrough_access(&mut self, _addr: u64, _size: u64, is_write: bool) -> AccessOutcome {
        self.count(false, is_write);
        AccessOutcome {
            lines_touched: 1,
            lines_missed: 1,
        }
    }

    fn count(&mut self, hit: bool, is_write: bool) {
        let s = &mut self.stats;
        match (is_write, hit) {
            (false, true) => s.load_hits += 1,
            (false, false) => s.load_misses += 1,
            (true, true) => s.store_hits += 1,
            (true, false) => s.store_misses += 1,
        }
    }

    fn probe_line(&mut self, line: u64, is_write: bool) -> bool {
        let ways = self.config.associativity as usize;
        let base = (line & self.set_mask) as usize * ways;
        let set = &mut self.tags[base..base + ways];
        match set.iter().position(|&t| t == line) {
            Some(pos) => {
                set[..=pos].rotate_right(1);
                true
            }
            None => {
                if !is_write {
                    set.rotate_right(1);
                    set[0] = line;
                }
                false
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Cache {
        Cache::new(CacheConfig::new(256, 64, 2).unwrap()).unwrap()
    }

    fn hits(cache: &mut Cache, reads: &[u64]) -> Vec<bool> {
        reads
            .iter()
            .map(|&a| cache.access(a, 4, false).is_hit())
            .collect()
    }

    #[test]
    fn cold_misses_then_residency() {
        let mut c = small();
        assert_eq!(c.config().num_sets(), 2);
        assert_eq!(hits(&mut c, &[0x0, 0x40, 0x0]), [false, false, true]);
    }

    #[test]
    fn lru_eviction_in_one_set() {
        let mut c = small();
        assert_eq!(
            hits(&mut c, &[0x0, 0x80, 0x100, 0x0]),
            [false, false, false, false]
        );
        assert_eq!(c.stats().misses(), 4);
    }

    #[test]
    fn straddling_access_probes_two_lines() {
        let mut c = small();
        let out = c.access(0x3e, 4, false);
        assert_eq!(out.lines_touched, 2);
        assert!(out.is_miss());
        // both lines now resident
        assert!(c.access(0x00, 4, false).is_hit());
        assert!(c.access(0x40, 4, false).is_hit());
        // only one of the two lines resident -> miss
        let mut c = small();
        c.access(0x00, 4, false);
        assert!(c.access(0x3e, 4, false).is_miss());
    }

    #[test]
    fn write_miss_does_not_allocate_and_write_hit_refreshes() {
        let mut c = small();
        assert!(c.access(0x0, 4, true).is_miss());
        assert!(c.access(0x0, 4, false).is_miss());
        // set 0 now holds 0x0; bring in 0x80 then touch 0x0 with a write
        c.access(0x80, 4, false);
        assert!(c.access(0x0, 4, true).is_hit());
        // 0x100 evicts the LRU line, which is now 0x80
        c.access(0x100, 4, false);
        assert!(c.access(0x0, 4, false).is_hit());
        assert!(c.access(0x80, 4, false).is_miss());
        let s = c.stats();
        assert_eq!((s.store_hits, s.store_misses), (1, 1));
        assert_eq!(s.accesses(), 7);
    }

    #[test]
    fn passthrough_always_misses() {
        let mut c = Cache::new(CacheConfig::disabled()).unwrap();
        for i in 0..10 {
            assert!(c.access(i * 8, 8, i % 2 == 0).is_miss());
        }
        assert_eq!(c.stats().misses(), 10);
        assert_eq!(c.stats().hits(), 0);
    }

    #[test]
    fn spec_strings() {
        let cfg: CacheConfig = "32768:64:2".parse().unwrap();
        assert_eq!(cfg.num_sets(), 256);
        assert_eq!(cfg.to_string(), "32768:64:2");
        assert!("32768:48:2".parse::<CacheConfig>().is_err());
        assert!("32768:64:3".parse::<CacheConfig>().is_err());
        assert!("100:64:2".parse::<CacheConfig>().is_err());
        assert!("0:64:2".parse::<CacheConfig>().is_err());
        assert!("32768:64".parse::<CacheConfig>().is_err());
    }
}
