//! Trace line grammar and a streaming reader.
//!
//! One executed instruction per line, in program order, with an optional
//! data address for memory operations:
//!
//! ```text
//! line    := insn [';' '0x' HEX]
//! insn    := MNEMONIC [operand (',' operand)*]
//! operand := REG | INT | INT '(' REG ')'
//! ```
//!
//! For example `lw a4,0(a5);0x40080290` or `bne a3,a5,-6`.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use thiserror::Error;

use crate::reg::Reg;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line_no}: malformed trace line: {reason}")]
    MalformedLine { line_no: u64, reason: String },
    #[error("read error after line {line_no}: {source}")]
    Io {
        line_no: u64,
        #[source]
        source: io::Error,
    },
}

impl TraceError {
    pub fn line_no(&self) -> u64 {
        match self {
            TraceError::MalformedLine { line_no, .. } | TraceError::Io { line_no, .. } => *line_no,
        }
    }
}

/// One operand of a disassembled instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Reg(Reg),
    Imm(i64),
    /// `disp(base)`, e.g. `0(a5)`. A bare `(a0)` (atomics) has displacement 0.
    Mem {
        disp: i64,
        base: Reg,
    },
    /// Identifier that is not a register: CSR names, rounding modes, fence sets.
    Symbol(String),
}

impl Operand {
    pub fn as_reg(&self) -> Option<Reg> {
        match self {
            Operand::Reg(r) => Some(*r),
            _ => None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Reg(r) => write!(f, "{r}"),
            Operand::Imm(v) => write!(f, "{v}"),
            Operand::Mem { disp, base } => write!(f, "{disp}({base})"),
            Operand::Symbol(s) => f.write_str(s),
        }
    }
}

/// One trace line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    /// 1-based line number in the source file.
    pub line_no: u64,
    pub mnemonic: String,
    pub operands: Vec<Operand>,
    pub data_addr: Option<u64>,
}

impl fmt::Display for TraceRecord {
    /// Canonical text form; parsing it back yields the same record.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.mnemonic)?;
        for (i, op) in self.operands.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { "," })?;
            write!(f, "{op}")?;
        }
        if let Some(addr) = self.data_addr {
            write!(f, ";0x{addr:x}")?;
        }
        Ok(())
    }
}

impl TraceRecord {
    /// The instruction text without the address column.
    pub fn disassembly(&self) -> String {
        let mut s = self.to_string();
        if let Some(i) = s.find(';') {
            s.truncate(i);
        }
        s
    }
}

fn malformed(line_no: u64, reason: impl Into<String>) -> TraceError {
    TraceError::MalformedLine {
        line_no,
        reason: reason.into(),
    }
}

fn parse_int(tok: &str) -> Option<i64> {
    let (neg, body) = match tok.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, tok.strip_prefix('+').unwrap_or(tok)),
    };
    if body.is_empty() {
        return None;
    }
    let magnitude: i64 = if let Some(hex) = body.strip_prefix("0x").or(body.strip_prefix("0X")) {
        if hex.is_empty() || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return None;
        }
        // Disassemblers print 64-bit patterns such as 0xffffffffffffffff.
        u64::from_str_radix(hex, 16).ok()? as i64
    } else {
        if !body.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        body.parse::<u64>().ok()? as i64
    };
    Some(if neg {
        magnitude.wrapping_neg()
    } else {
        magnitude
    })
}

fn is_symbol(tok: &str) -> bool {
    let mut bytes = tok.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_alphabetic() || b == b'_' || b == b'.')
        && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'.')
}

fn parse_operand(tok: &str, line_no: u64) -> Result<Operand, TraceError> {
    if tok.is_empty() {
        return Err(malformed(line_no, "empty operand"));
    }
    if let Some(open) = tok.find('(') {
        let inner = tok[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| malformed(line_no, format!("unterminated memory operand `{tok}`")))?;
        let base = Reg::parse(inner.trim())
            .ok_or_else(|| malformed(line_no, format!("bad base register in `{tok}`")))?;
        let disp_tok = tok[..open].trim();
        let disp = if disp_tok.is_empty() {
            0
        } else {
            parse_int(disp_tok)
                .ok_or_else(|| malformed(line_no, format!("bad displacement in `{tok}`")))?
        };
        return Ok(Operand::Mem { disp, base });
    }
    if let Some(r) = Reg::parse(tok) {
        return Ok(Operand::Reg(r));
    }
    if let Some(v) = parse_int(tok) {
        return Ok(Operand::Imm(v));
    }
    if is_symbol(tok) {
        return Ok(Operand::Symbol(tok.to_string()));
    }
    Err(malformed(line_no, format!("unparseable operand `{tok}`")))
}

/// Parse one trace line (without its line terminator).
pub fn parse_trace_line(line: &str, line_no: u64) -> Result<TraceRecord, TraceError> {
    let (insn, addr_col) = match line.split_once(';') {
        Some((insn, addr)) => (insn, Some(addr.trim())),
        None => (line, None),
    };

    let data_addr = match addr_col {
        None => None,
        Some(col) => {
            let hex = col
                .strip_prefix("0x")
                .or_else(|| col.strip_prefix("0X"))
                .ok_or_else(|| malformed(line_no, format!("address `{col}` lacks 0x prefix")))?;
            if hex.is_empty() || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(malformed(line_no, format!("invalid hex address `{col}`")));
            }
            Some(
                u64::from_str_radix(hex, 16)
                    .map_err(|_| malformed(line_no, format!("address `{col}` exceeds 64 bits")))?,
            )
        }
    };

    let insn = insn.trim();
    let (mnemonic, rest) = match insn.find(char::is_whitespace) {
        Some(i) => (&insn[..i], insn[i..].trim()),
        None => (insn, ""),
    };
    if mnemonic.is_empty() {
        return Err(malformed(line_no, "missing mnemonic"));
    }

    let operands = if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(',')
            .map(|tok| parse_operand(tok.trim(), line_no))
            .collect::<Result<Vec<_>, _>>()?
    };

    Ok(TraceRecord {
        line_no,
        mnemonic: mnemonic.to_ascii_lowercase(),
        operands,
        data_addr,
    })
}

/// Streaming trace reader. Yields records in file order, skipping blank lines.
pub struct TraceReader<R> {
    inner: R,
    buf: String,
    line_no: u64,
    done: bool,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(inner: R) -> Self {
        TraceReader {
            inner,
            buf: String::new(),
            line_no: 0,
            done: false,
        }
    }

    /// Number of lines consumed so far, blank ones included.
    pub fn lines_read(&self) -> u64 {
        self.line_no
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<TraceRecord, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => {
                    self.done = true;
                }
                Ok(_) => {
                    self.line_no += 1;
                    let line = self.buf.trim_end_matches(['\n', '\r']);
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(parse_trace_line(line, self.line_no));
                }
                Err(source) => {
                    self.done = true;
                    return Some(Err(TraceError::Io {
                        line_no: self.line_no,
                        source,
                    }));
                }
            }
        }
        None
    }
}

/// Stream records from any reader.
pub fn read_trace<R: io::Read>(source: R) -> TraceReader<BufReader<R>> {
    TraceReader::new(BufReader::with_capacity(1 << 16, source))
}

/// Open a trace file, decompressing transparently when the name ends in `.gz`.
pub fn open_trace(path: impl AsRef<Path>) -> io::Result<TraceReader<Box<dyn BufRead + Send>>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let reader: Box<dyn BufRead + Send> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(BufReader::with_capacity(1 << 16, MultiGzDecoder::new(file)))
    } else {
        Box::new(BufReader::with_capacity(1 << 16, file))
    };
    Ok(TraceReader::new(reader))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(name: &str) -> Operand {
        Operand::Reg(Reg::parse(name).unwrap())
    }

    #[test]
    fn load_with_address() {
        let r = parse_trace_line("lw a4,0(a5);0x40080290", 1).unwrap();
        assert_eq!(r.mnemonic, "lw");
        assert_eq!(
            r.operands,
            vec![
                reg("a4"),
                Operand::Mem {
                    disp: 0,
                    base: Reg::parse("a5").unwrap()
                }
            ]
        );
        assert_eq!(r.data_addr, Some(0x40080290));
    }

    #[test]
    fn move_and_branch() {
        let r = parse_trace_line("mv a0,zero", 2).unwrap();
        assert_eq!(r.operands, vec![reg("a0"), reg("zero")]);
        assert_eq!(r.data_addr, None);

        let r = parse_trace_line("bne a3,a5,-6", 3).unwrap();
        assert_eq!(r.operands, vec![reg("a3"), reg("a5"), Operand::Imm(-6)]);
    }

    #[test]
    fn bad_hex_address_is_malformed() {
        let err = parse_trace_line("lw a4,0(a5);0xZZ", 7).unwrap_err();
        assert!(matches!(err, TraceError::MalformedLine { line_no: 7, .. }));
        assert!(parse_trace_line("lw a4,0(a5);40080290", 1).is_err());
        assert!(parse_trace_line("lw a4,0(a5);0x", 1).is_err());
        assert!(parse_trace_line("lw a4,0(a5);0x1ffffffffffffffff", 1).is_err());
    }

    #[test]
    fn malformed_operands() {
        for bad in [
            "",
            ";0x10",
            "add a0,,a1",
            "lw a4,0(a5",
            "lw a4,0(x99)",
            "lw a4,zz(a5)",
            "add a0,a1,@",
            "addi a0,a0,1.5",
        ] {
            assert!(parse_trace_line(bad, 1).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn whitespace_and_spellings_normalize() {
        let r = parse_trace_line("  ADDW  x10, x10 ,x14 ", 1).unwrap();
        assert_eq!(r.to_string(), "addw a0,a0,a4");
        let r = parse_trace_line("lui a5,0x40080", 1).unwrap();
        assert_eq!(r.operands[1], Operand::Imm(0x40080));
        let r = parse_trace_line("amoadd.w a5,a4,(a3);0x1000", 1).unwrap();
        assert_eq!(r.to_string(), "amoadd.w a5,a4,0(a3);0x1000");
        let r = parse_trace_line("fcvt.w.d a0,fa5,rtz", 1).unwrap();
        assert_eq!(r.operands[2], Operand::Symbol("rtz".into()));
        let r = parse_trace_line("lw a4,-0x10(sp);0x10", 1).unwrap();
        assert_eq!(r.to_string(), "lw a4,-16(sp);0x10");
    }

    #[test]
    fn reader_skips_blank_lines_and_keeps_numbers() {
        let text = "mv a0,zero\n\nbne a3,a5,-6\r\n";
        let recs: Vec<_> = read_trace(text.as_bytes())
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].line_no, 1);
        assert_eq!(recs[1].line_no, 3);
    }

    #[test]
    fn reader_on_empty_input() {
        assert_eq!(read_trace(&b""[..]).count(), 0);
    }

    #[test]
    fn reader_reports_line_number_of_bad_line() {
        let text = "mv a0,zero\nlw a4,0(a5);0xZZ\nmv a1,a0\n";
        let err = read_trace(text.as_bytes())
            .collect::<Result<Vec<_>, _>>()
            .unwrap_err();
        assert_eq!(err.line_no(), 2);
    }

    #[test]
    fn figure_prefix_reads_in_order() {
        let text = "add a3,a0,a1\nmv a0,zero\nlw a4,0(a5);0x40080290\n";
        let recs: Vec<_> = read_trace(text.as_bytes())
            .collect::<Result<_, _>>()
            .unwrap();
        let mnemonics: Vec<_> = recs.iter().map(|r| r.mnemonic.as_str()).collect();
        assert_eq!(mnemonics, ["add", "mv", "lw"]);
        assert_eq!(recs[2].disassembly(), "lw a4,0(a5)");
    }
}
