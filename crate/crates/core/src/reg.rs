//! RISC-V register names.
//!
//! Traces spell registers either by ABI name (`a0`, `fs1`) or architecturally
//! (`x10`, `f9`). Everything downstream keys on [`Reg`], so both spellings
//! collapse to one index space: `0..32` for the integer file, `32..64` for the
//! floating-point file.

use std::fmt;

const INT_ABI: [&str; 32] = [
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3", "a4",
    "a5", "a6", "a7", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11", "t3", "t4",
    "t5", "t6",
];

const FP_ABI: [&str; 32] = [
    "ft0", "ft1", "ft2", "ft3", "ft4", "ft5", "ft6", "ft7", "fs0", "fs1", "fa0", "fa1", "fa2",
    "fa3", "fa4", "fa5", "fa6", "fa7", "fs2", "fs3", "fs4", "fs5", "fs6", "fs7", "fs8", "fs9",
    "fs10", "fs11", "ft8", "ft9", "ft10", "ft11",
];

/// A canonical register: integer `x0..x31` or floating-point `f0..f31`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Reg(u8);

impl Reg {
    pub const ZERO: Reg = Reg(0);
    pub const RA: Reg = Reg(1);
    pub const SP: Reg = Reg(2);
    pub const GP: Reg = Reg(3);

    /// Number of distinct register keys (32 integer + 32 floating point).
    pub const COUNT: usize = 64;

    pub fn int(n: u8) -> Option<Reg> {
        (n < 32).then_some(Reg(n))
    }

    pub fn fp(n: u8) -> Option<Reg> {
        (n < 32).then_some(Reg(32 + n))
    }

    /// Parse any accepted spelling (ABI name, `xN`, `fN`, `fp`).
    pub fn parse(name: &str) -> Option<Reg> {
        if let Some(i) = INT_ABI.iter().position(|&n| n == name) {
            return Some(Reg(i as u8));
        }
        if let Some(i) = FP_ABI.iter().position(|&n| n == name) {
            return Some(Reg(32 + i as u8));
        }
        if name == "fp" {
            return Some(Reg(8));
        }
        let numbered = |prefix: &str| -> Option<u8> {
            let digits = name.strip_prefix(prefix)?;
            if digits.is_empty() || (digits.len() > 1 && digits.starts_with('0')) {
                return None;
            }
            digits.parse::<u8>().ok().filter(|&n| n < 32)
        };
        if let Some(n) = numbered("x") {
            return Reg::int(n);
        }
        numbered("f").and_then(Reg::fp)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn is_fp(self) -> bool {
        self.0 >= 32
    }

    pub fn abi_name(self) -> &'static str {
        if self.is_fp() {
            FP_ABI[(self.0 - 32) as usize]
        } else {
            INT_ABI[self.0 as usize]
        }
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abi_name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn architectural_names_normalize_to_abi() {
        assert_eq!(Reg::parse("x10").unwrap().abi_name(), "a0");
        assert_eq!(Reg::parse("x0").unwrap(), Reg::ZERO);
        assert_eq!(Reg::parse("fp").unwrap().abi_name(), "s0");
        assert_eq!(Reg::parse("f10").unwrap().abi_name(), "fa0");
        assert_eq!(Reg::parse("f0").unwrap().abi_name(), "ft0");
        assert_ne!(Reg::parse("f1"), Reg::parse("x1"));
    }

    #[test]
    fn rejects_out_of_range_and_junk() {
        for bad in ["x32", "f32", "x", "x01", "a8", "t7", "s12", "", "zero0"] {
            assert_eq!(Reg::parse(bad), None, "{bad}");
        }
    }

    #[test]
    fn every_abi_name_round_trips() {
        for i in 0..Reg::COUNT as u8 {
            let r = Reg(i);
            assert_eq!(Reg::parse(r.abi_name()), Some(r));
        }
    }
}
