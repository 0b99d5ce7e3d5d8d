//! Read/write/memory effects of RV64IMAFD instructions.
//!
//! Only what dependency tracking needs is modeled: which registers and
//! memory bytes an instruction reads, which it writes, and the width of its
//! data access. Immediates, the PC and control flow never produce
//! dependencies.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reg::Reg;
use crate::trace::{Operand, TraceRecord};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("line {line_no}: unknown mnemonic `{mnemonic}`")]
    UnknownMnemonic { line_no: u64, mnemonic: String },
    #[error("line {line_no}: `{mnemonic}` expects operands {expected}")]
    OperandMismatch {
        line_no: u64,
        mnemonic: String,
        expected: &'static str,
    },
    #[error("`{0}` is not a memory operation")]
    NotAMemoryOp(String),
}

/// What to do with mnemonics missing from the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    #[default]
    Strict,
    /// Unknown instructions write their first register operand and read the rest.
    Permissive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InsnKind {
    Load,
    Store,
    Branch,
    Jump,
    Arith,
    Move,
    Other,
}

impl fmt::Display for InsnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InsnKind::Load => "load",
            InsnKind::Store => "store",
            InsnKind::Branch => "branch",
            InsnKind::Jump => "jump",
            InsnKind::Arith => "arith",
            InsnKind::Move => "move",
            InsnKind::Other => "other",
        };
        f.write_str(s)
    }
}

/// A dependency key: a register or a single byte of memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueKey {
    Reg(Reg),
    MemByte(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemAccess {
    pub address: u64,
    pub size: u8,
    /// Cache-side direction. Atomics probe as reads; their write half is in
    /// the effect's write set.
    pub is_write: bool,
}

impl MemAccess {
    pub fn bytes(&self) -> impl Iterator<Item = u64> {
        let start = self.address;
        (0..self.size as u64).map_while(move |i| start.checked_add(i))
    }
}

/// Small duplicate-free register list. Never holds the zero register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RegList {
    regs: [Option<Reg>; 4],
    len: u8,
}

impl RegList {
    fn push(&mut self, r: Reg) {
        if r.is_zero() || self.iter().any(|x| x == r) {
            return;
        }
        self.regs[self.len as usize] = Some(r);
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = Reg> + '_ {
        self.regs[..self.len as usize].iter().flatten().copied()
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstructionEffect {
    pub kind: InsnKind,
    pub read_regs: RegList,
    pub write_regs: RegList,
    pub mem: Option<MemAccess>,
    /// A-extension record: reads and writes the addressed range.
    pub atomic: bool,
    /// Mnemonic was not in the table (permissive mode only).
    pub unknown: bool,
}

impl InstructionEffect {
    pub fn reads_memory(&self) -> bool {
        self.mem.is_some_and(|m| !m.is_write)
    }

    pub fn writes_memory(&self) -> bool {
        self.mem.is_some_and(|m| m.is_write) || (self.atomic && self.mem.is_some())
    }

    pub fn reads(&self) -> impl Iterator<Item = ValueKey> + '_ {
        let mem = self.mem.filter(|_| self.reads_memory());
        self.read_regs.iter().map(ValueKey::Reg).chain(
            mem.into_iter()
                .flat_map(|m| m.bytes().map(ValueKey::MemByte)),
        )
    }

    pub fn writes(&self) -> impl Iterator<Item = ValueKey> + '_ {
        let mem = self.mem.filter(|_| self.writes_memory());
        self.write_regs.iter().map(ValueKey::Reg).chain(
            mem.into_iter()
                .flat_map(|m| m.bytes().map(ValueKey::MemByte)),
        )
    }

    pub fn read_set(&self) -> BTreeSet<ValueKey> {
        self.reads().collect()
    }

    pub fn write_set(&self) -> BTreeSet<ValueKey> {
        self.writes().collect()
    }
}

/// Operand layout of a mnemonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Form {
    /// `rd, disp(rs1)`
    Load(u8),
    /// `rs2, disp(rs1)`
    Store(u8),
    /// `rd, (rs1)`
    LoadReserved(u8),
    /// `rd, rs2, (rs1)`
    StoreConditional(u8),
    /// `rd, rs2, (rs1)`
    Amo(u8),
    /// `rd, rs1, rs2` (or `rd, rs2` in compressed two-operand form)
    R3,
    /// `rd, rs1, rs2, rs3`
    R4,
    /// `rd, rs1, imm` (or `rd, imm` in compressed form)
    I2,
    /// `rd, rs1`
    Unary,
    /// `rd, imm`
    Upper,
    /// `rs1, rs2, target`
    Branch2,
    /// `rs1, target`
    Branch1,
    /// `[rd,] target`; one operand means rd = ra
    Jal,
    /// `rs1` (rd = ra), `rd, rs1, imm` or `rd, imm(rs1)`
    Jalr,
    /// `target`
    Jump,
    /// `rs1`
    JumpReg,
    /// reads ra
    Ret,
    /// writes ra
    Call,
    /// `rd, csr[, rs]`: writes rd, reads other registers
    CsrRead,
    /// `csr, rs`: reads rs
    CsrWrite,
    /// no register or memory effect
    Nop,
}

const fn kind_of(form: Form, mv: bool) -> InsnKind {
    match form {
        Form::Load(_) | Form::LoadReserved(_) | Form::Amo(_) => InsnKind::Load,
        Form::Store(_) | Form::StoreConditional(_) => InsnKind::Store,
        Form::Branch1 | Form::Branch2 => InsnKind::Branch,
        Form::Jal | Form::Jalr | Form::Jump | Form::JumpReg | Form::Ret | Form::Call => {
            InsnKind::Jump
        }
        Form::CsrRead | Form::CsrWrite | Form::Nop => InsnKind::Other,
        _ if mv => InsnKind::Move,
        _ => InsnKind::Arith,
    }
}

macro_rules! table {
    ($($form:expr => [$($m:literal),* $(,)?]),* $(,)?) => {
        &[$($(($m, $form),)*)*]
    };
}

static TABLE: &[(&str, Form)] = table! {
    Form::Load(1) => ["lb", "lbu"],
    Form::Load(2) => ["lh", "lhu"],
    Form::Load(4) => ["lw", "lwu", "flw", "lwsp", "flwsp"],
    Form::Load(8) => ["ld", "fld", "ldsp", "fldsp"],
    Form::Store(1) => ["sb"],
    Form::Store(2) => ["sh"],
    Form::Store(4) => ["sw", "fsw", "swsp", "fswsp"],
    Form::Store(8) => ["sd", "fsd", "sdsp", "fsdsp"],
    Form::LoadReserved(4) => ["lr.w", "lr.w.aq", "lr.w.rl", "lr.w.aqrl"],
    Form::LoadReserved(8) => ["lr.d", "lr.d.aq", "lr.d.rl", "lr.d.aqrl"],
    Form::StoreConditional(4) => ["sc.w", "sc.w.aq", "sc.w.rl", "sc.w.aqrl"],
    Form::StoreConditional(8) => ["sc.d", "sc.d.aq", "sc.d.rl", "sc.d.aqrl"],
    Form::Amo(4) => [
        "amoswap.w", "amoadd.w", "amoxor.w", "amoand.w", "amoor.w",
        "amomin.w", "amomax.w", "amominu.w", "amomaxu.w",
        "amoswap.w.aq", "amoadd.w.aq", "amoswap.w.aqrl", "amoadd.w.aqrl",
        "amoswap.w.rl", "amoadd.w.rl",
    ],
    Form::Amo(8) => [
        "amoswap.d", "amoadd.d", "amoxor.d", "amoand.d", "amoor.d",
        "amomin.d", "amomax.d", "amominu.d", "amomaxu.d",
        "amoswap.d.aq", "amoadd.d.aq", "amoswap.d.aqrl", "amoadd.d.aqrl",
        "amoswap.d.rl", "amoadd.d.rl",
    ],
    Form::R3 => [
        "add", "sub", "sll", "slt", "sltu", "xor", "srl", "sra", "or", "and",
        "addw", "subw", "sllw", "srlw", "sraw",
        "mul", "mulh", "mulhsu", "mulhu", "div", "divu", "rem", "remu",
        "mulw", "divw", "divuw", "remw", "remuw",
        "sgt", "sgtu",
        "fadd.s", "fsub.s", "fmul.s", "fdiv.s", "fmin.s", "fmax.s",
        "fsgnj.s", "fsgnjn.s", "fsgnjx.s", "feq.s", "flt.s", "fle.s",
        "fadd.d", "fsub.d", "fmul.d", "fdiv.d", "fmin.d", "fmax.d",
        "fsgnj.d", "fsgnjn.d", "fsgnjx.d", "feq.d", "flt.d", "fle.d",
        "fgt.s", "fge.s", "fgt.d", "fge.d",
    ],
    Form::R4 => [
        "fmadd.s", "fmsub.s", "fnmadd.s", "fnmsub.s",
        "fmadd.d", "fmsub.d", "fnmadd.d", "fnmsub.d",
    ],
    Form::I2 => [
        "addi", "slti", "sltiu", "xori", "ori", "andi", "slli", "srli", "srai",
        "addiw", "slliw", "srliw", "sraiw", "addi16sp", "addi4spn",
    ],
    Form::Unary => [
        "not", "neg", "negw", "sext.w", "sext.b", "sext.h", "zext.b", "zext.h", "zext.w",
        "seqz", "snez", "sltz", "sgtz",
        "fsqrt.s", "fsqrt.d", "fclass.s", "fclass.d", "fneg.s", "fneg.d", "fabs.s", "fabs.d",
        "fcvt.w.s", "fcvt.wu.s", "fcvt.l.s", "fcvt.lu.s", "fcvt.s.w", "fcvt.s.wu",
        "fcvt.s.l", "fcvt.s.lu", "fcvt.w.d", "fcvt.wu.d", "fcvt.l.d", "fcvt.lu.d",
        "fcvt.d.w", "fcvt.d.wu", "fcvt.d.l", "fcvt.d.lu", "fcvt.s.d", "fcvt.d.s",
    ],
    Form::Upper => ["lui", "auipc"],
    Form::Branch2 => [
        "beq", "bne", "blt", "bge", "bltu", "bgeu", "bgt", "ble", "bgtu", "bleu",
    ],
    Form::Branch1 => ["beqz", "bnez", "blez", "bgez", "bltz", "bgtz"],
    Form::Jal => ["jal"],
    Form::Jalr => ["jalr"],
    Form::Jump => ["j", "tail"],
    Form::JumpReg => ["jr"],
    Form::Ret => ["ret"],
    Form::Call => ["call"],
    Form::CsrRead => [
        "csrr", "csrrw", "csrrs", "csrrc", "csrrwi", "csrrsi", "csrrci",
        "frcsr", "frrm", "frflags", "fscsr", "fsrm", "fsflags", "rdcycle", "rdtime", "rdinstret",
    ],
    Form::CsrWrite => ["csrw", "csrs", "csrc", "csrwi", "csrsi", "csrci"],
    Form::Nop => [
        "nop", "fence", "fence.i", "fence.tso", "pause", "ecall", "ebreak", "wfi", "unimp",
    ],
};

/// Register-to-register moves and constant materialization.
static MOVES: &[(&str, Form)] = table! {
    Form::Unary => ["mv", "fmv.s", "fmv.d", "fmv.x.w", "fmv.w.x", "fmv.x.d", "fmv.d.x", "fmv.x.s", "fmv.s.x"],
    Form::Upper => ["li"],
};

fn lookup(mnemonic: &str) -> Option<(Form, InsnKind)> {
    static MAP: OnceLock<HashMap<&'static str, (Form, InsnKind)>> = OnceLock::new();
    let map = MAP.get_or_init(|| {
        TABLE
            .iter()
            .map(|&(m, f)| (m, (f, kind_of(f, false))))
            .chain(MOVES.iter().map(|&(m, f)| (m, (f, kind_of(f, true)))))
            .collect()
    });
    map.get(mnemonic)
        .or_else(|| map.get(mnemonic.strip_prefix("c.")?))
        .copied()
}

/// Every supported mnemonic with its kind and (for memory ops) access width.
pub fn supported_mnemonics() -> Vec<(&'static str, InsnKind, Option<u8>)> {
    let mut all: Vec<_> = TABLE
        .iter()
        .map(|&(m, f)| (m, kind_of(f, false), access_width(f)))
        .chain(
            MOVES
                .iter()
                .map(|&(m, f)| (m, kind_of(f, true), access_width(f))),
        )
        .collect();
    all.sort_by_key(|&(m, ..)| m);
    all
}

/// Human-readable dump of the mnemonic table.
pub fn isa_listing() -> String {
    let mut out = String::from("# mnemonic\tkind\taccess_bytes\n");
    for (m, kind, width) in supported_mnemonics() {
        let w = width.map_or_else(|| "-".to_string(), |w| w.to_string());
        out.push_str(&format!("{m}\t{kind}\t{w}\n"));
    }
    out.push_str("# compressed `c.` spellings decode as their base mnemonic\n");
    out
}

fn access_width(form: Form) -> Option<u8> {
    match form {
        Form::Load(w)
        | Form::Store(w)
        | Form::LoadReserved(w)
        | Form::StoreConditional(w)
        | Form::Amo(w) => Some(w),
        _ => None,
    }
}

/// Architectural access width of a load/store mnemonic, in bytes.
pub fn mem_access_size(mnemonic: &str) -> Result<u8, DecodeError> {
    lookup(mnemonic)
        .and_then(|(f, _)| access_width(f))
        .ok_or_else(|| DecodeError::NotAMemoryOp(mnemonic.to_string()))
}

struct Ops<'a> {
    rec: &'a TraceRecord,
    expected: &'static str,
}

impl Ops<'_> {
    fn err(&self) -> DecodeError {
        DecodeError::OperandMismatch {
            line_no: self.rec.line_no,
            mnemonic: self.rec.mnemonic.clone(),
            expected: self.expected,
        }
    }

    fn reg(&self, i: usize) -> Result<Reg, DecodeError> {
        self.rec
            .operands
            .get(i)
            .and_then(Operand::as_reg)
            .ok_or_else(|| self.err())
    }

    fn mem_base(&self, i: usize) -> Result<Reg, DecodeError> {
        match self.rec.operands.get(i) {
            Some(Operand::Mem { base, .. }) => Ok(*base),
            _ => Err(self.err()),
        }
    }

    fn count(&self) -> usize {
        self.rec.operands.len()
    }

    fn require(&self, ok: bool) -> Result<(), DecodeError> {
        if ok {
            Ok(())
        } else {
            Err(self.err())
        }
    }
}

/// Decode the dependency effect of one record.
pub fn decode_effect(
    rec: &TraceRecord,
    mode: DecodeMode,
) -> Result<InstructionEffect, DecodeError> {
    let Some((form, kind)) = lookup(&rec.mnemonic) else {
        return match mode {
            DecodeMode::Strict => Err(DecodeError::UnknownMnemonic {
                line_no: rec.line_no,
                mnemonic: rec.mnemonic.clone(),
            }),
            DecodeMode::Permissive => Ok(permissive_effect(rec)),
        };
    };

    let mut reads = RegList::default();
    let mut writes = RegList::default();
    let mut mem = None;
    let mut atomic = false;
    let access = |width: u8, is_write: bool| {
        rec.data_addr.map(|address| MemAccess {
            address,
            size: width,
            is_write,
        })
    };

    match form {
        Form::Load(w) | Form::LoadReserved(w) => {
            let ops = Ops {
                rec,
                expected: "rd, disp(rs1)",
            };
            ops.require(ops.count() == 2)?;
            writes.push(ops.reg(0)?);
            reads.push(ops.mem_base(1)?);
            mem = access(w, false);
        }
        Form::Store(w) => {
            let ops = Ops {
                rec,
                expected: "rs2, disp(rs1)",
            };
            ops.require(ops.count() == 2)?;
            reads.push(ops.reg(0)?);
            reads.push(ops.mem_base(1)?);
            mem = access(w, true);
        }
        Form::StoreConditional(w) => {
            let ops = Ops {
                rec,
                expected: "rd, rs2, (rs1)",
            };
            ops.require(ops.count() == 3)?;
            writes.push(ops.reg(0)?);
            reads.push(ops.reg(1)?);
            reads.push(ops.mem_base(2)?);
            mem = access(w, true);
        }
        Form::Amo(w) => {
            let ops = Ops {
                rec,
                expected: "rd, rs2, (rs1)",
            };
            ops.require(ops.count() == 3)?;
            writes.push(ops.reg(0)?);
            reads.push(ops.reg(1)?);
            reads.push(ops.mem_base(2)?);
            mem = access(w, false);
            atomic = true;
        }
        Form::R3 => {
            let ops = Ops {
                rec,
                expected: "rd, rs1, rs2",
            };
            // Trailing rounding-mode symbol is tolerated.
            let n = trailing_symbol_trim(rec);
            ops.require(n == 3 || n == 2)?;
            let rd = ops.reg(0)?;
            if n == 3 {
                reads.push(ops.reg(1)?);
                reads.push(ops.reg(2)?);
            } else {
                reads.push(rd);
                reads.push(ops.reg(1)?);
            }
            writes.push(rd);
        }
        Form::R4 => {
            let ops = Ops {
                rec,
                expected: "rd, rs1, rs2, rs3",
            };
            ops.require(trailing_symbol_trim(rec) == 4)?;
            for i in 1..4 {
                reads.push(ops.reg(i)?);
            }
            writes.push(ops.reg(0)?);
        }
        Form::I2 => {
            let ops = Ops {
                rec,
                expected: "rd, rs1, imm",
            };
            let rd = ops.reg(0)?;
            match ops.count() {
                3 => reads.push(ops.reg(1)?),
                // c.addi rd,imm / c.addi16sp sp,imm
                2 => reads.push(rd),
                _ => return Err(ops.err()),
            }
            writes.push(rd);
        }
        Form::Unary => {
            let ops = Ops {
                rec,
                expected: "rd, rs1",
            };
            ops.require(trailing_symbol_trim(rec) == 2)?;
            reads.push(ops.reg(1)?);
            writes.push(ops.reg(0)?);
        }
        Form::Upper => {
            let ops = Ops {
                rec,
                expected: "rd, imm",
            };
            ops.require(ops.count() == 2)?;
            writes.push(ops.reg(0)?);
        }
        Form::Branch2 => {
            let ops = Ops {
                rec,
                expected: "rs1, rs2, target",
            };
            ops.require(ops.count() == 3)?;
            reads.push(ops.reg(0)?);
            reads.push(ops.reg(1)?);
        }
        Form::Branch1 => {
            let ops = Ops {
                rec,
                expected: "rs1, target",
            };
            ops.require(ops.count() == 2)?;
            reads.push(ops.reg(0)?);
        }
        Form::Jal => {
            let ops = Ops {
                rec,
                expected: "[rd,] target",
            };
            match ops.count() {
                1 => writes.push(Reg::RA),
                2 => writes.push(ops.reg(0)?),
                _ => return Err(ops.err()),
            }
        }
        Form::Jalr => {
            let ops = Ops {
                rec,
                expected: "rs1 | rd, rs1, imm | rd, imm(rs1)",
            };
            match (ops.count(), rec.operands.get(1)) {
                (1, _) => {
                    let target = match &rec.operands[0] {
                        Operand::Mem { base, .. } => *base,
                        _ => ops.reg(0)?,
                    };
                    reads.push(target);
                    writes.push(Reg::RA);
                }
                (2, Some(Operand::Mem { base, .. })) => {
                    reads.push(*base);
                    writes.push(ops.reg(0)?);
                }
                (3, _) => {
                    reads.push(ops.reg(1)?);
                    writes.push(ops.reg(0)?);
                }
                _ => return Err(ops.err()),
            }
        }
        Form::Jump => {
            let ops = Ops {
                rec,
                expected: "target",
            };
            ops.require(ops.count() == 1)?;
        }
        Form::JumpReg => {
            let ops = Ops {
                rec,
                expected: "rs1",
            };
            ops.require(ops.count() == 1)?;
            let target = match &rec.operands[0] {
                Operand::Mem { base, .. } => *base,
                _ => ops.reg(0)?,
            };
            reads.push(target);
        }
        Form::Ret => reads.push(Reg::RA),
        Form::Call => writes.push(Reg::RA),
        Form::CsrRead => {
            let mut regs = rec.operands.iter().filter_map(Operand::as_reg);
            if let Some(rd) = regs.next() {
                writes.push(rd);
            }
            for r in regs {
                reads.push(r);
            }
        }
        Form::CsrWrite => {
            for r in rec.operands.iter().filter_map(Operand::as_reg) {
                reads.push(r);
            }
        }
        Form::Nop => {}
    }

    Ok(InstructionEffect {
        kind,
        read_regs: reads,
        write_regs: writes,
        mem,
        atomic,
        unknown: false,
    })
}

/// Operand count ignoring one trailing rounding-mode symbol.
fn trailing_symbol_trim(rec: &TraceRecord) -> usize {
    match rec.operands.last() {
        Some(Operand::Symbol(_)) => rec.operands.len() - 1,
        _ => rec.operands.len(),
    }
}

fn permissive_effect(rec: &TraceRecord) -> InstructionEffect {
    let mut reads = RegList::default();
    let mut writes = RegList::default();
    for (i, op) in rec.operands.iter().enumerate() {
        match op {
            Operand::Reg(r) if i == 0 => writes.push(*r),
            Operand::Reg(r) | Operand::Mem { base: r, .. } if reads.len() < 4 => reads.push(*r),
            _ => {}
        }
    }
    InstructionEffect {
        kind: InsnKind::Other,
        read_regs: reads,
        write_regs: writes,
        mem: None,
        atomic: false,
        unknown: true,
    }
}
