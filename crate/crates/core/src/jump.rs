//! Step-bounded oracle register machines and stage approximations of jumps.
//!
//! A program is a list of instructions over eight registers, coded as an
//! integer through Cantor pairing. Register 0 holds the input. The bound `t`
//! of a run limits the number of executed instructions, the indices that may
//! be queried, and the values registers may reach.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduction::{ReductionLedger, JUMP_LEVELS_PER_STEP};
use crate::solver::SolveResult;

pub const REGISTERS: usize = 8;
/// Longer programs decode to `HALT`.
pub const MAX_PROGRAM_LEN: usize = 256;

/// `π(m, e) = (m + e)(m + e + 1)/2 + e`.
pub fn pair(m: u64, e: u64) -> u64 {
    let s = m + e;
    s * (s + 1) / 2 + e
}

/// Inverse of [`pair`].
pub fn unpair(z: u64) -> (u64, u64) {
    let mut w = (((8.0 * z as f64 + 1.0).sqrt() - 1.0) / 2.0) as u64;
    // correct floating point drift
    while w * (w + 1) / 2 > z {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= z {
        w += 1;
    }
    let e = z - w * (w + 1) / 2;
    (w - e, e)
}

fn pair_big(m: &BigUint, e: &BigUint) -> BigUint {
    let s = m + e;
    (&s * (&s + 1u32)) / 2u32 + e
}

fn unpair_big(z: &BigUint) -> (BigUint, BigUint) {
    let w: BigUint = ((z * 8u32 + 1u32).sqrt() - 1u32) / 2u32;
    let e = z - (&w * (&w + 1u32)) / 2u32;
    (w - &e, e)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    Inc(usize),
    Dec(usize),
    /// Jump by the offset when the register is zero, else fall through.
    Jz(usize, i64),
    /// `out := X(in)`.
    Query { input: usize, output: usize },
    Halt,
}

impl Instruction {
    fn code(&self) -> BigUint {
        let zigzag = |o: i64| if o >= 0 { (o as u64) << 1 } else { ((-(o + 1)) as u64) << 1 | 1 };
        let (op, payload) = match *self {
            Instruction::Halt => (0u32, BigUint::zero()),
            Instruction::Inc(r) => (1, BigUint::from(r)),
            Instruction::Dec(r) => (2, BigUint::from(r)),
            Instruction::Jz(r, o) => (3, pair_big(&BigUint::from(r), &BigUint::from(zigzag(o)))),
            Instruction::Query { input, output } => (4, pair_big(&BigUint::from(input), &BigUint::from(output))),
        };
        payload * 5u32 + op
    }

    fn decode(code: &BigUint) -> Option<Self> {
        let op = (code % 5u32).to_u32()?;
        let payload = code / 5u32;
        let reg = |x: &BigUint| x.to_usize().filter(|&r| r < REGISTERS);
        Some(match op {
            0 if payload.is_zero() => Instruction::Halt,
            0 => return None,
            1 => Instruction::Inc(reg(&payload)?),
            2 => Instruction::Dec(reg(&payload)?),
            3 => {
                let (r, z) = unpair_big(&payload);
                let z = z.to_u64()?;
                let off = if z & 1 == 0 { (z >> 1) as i64 } else { -((z >> 1) as i64) - 1 };
                Instruction::Jz(reg(&r)?, off)
            }
            _ => {
                let (i, o) = unpair_big(&payload);
                Instruction::Query { input: reg(&i)?, output: reg(&o)? }
            }
        })
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Inc(r) => write!(f, "INC {r}"),
            Instruction::Dec(r) => write!(f, "DEC {r}"),
            Instruction::Jz(r, o) => write!(f, "JZ {r} {o}"),
            Instruction::Query { input, output } => write!(f, "QUERY {input} {output}"),
            Instruction::Halt => f.write_str("HALT"),
        }
    }
}

impl FromStr for Instruction {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("instruction {line:?}"));
        let words: Vec<&str> = line.split_whitespace().collect();
        let reg = |s: &str| s.parse::<usize>().ok().filter(|&r| r < REGISTERS).ok_or_else(bad);
        match words.as_slice() {
            [op] if op.eq_ignore_ascii_case("HALT") => Ok(Instruction::Halt),
            [op, r] if op.eq_ignore_ascii_case("INC") => Ok(Instruction::Inc(reg(r)?)),
            [op, r] if op.eq_ignore_ascii_case("DEC") => Ok(Instruction::Dec(reg(r)?)),
            [op, r, o] if op.eq_ignore_ascii_case("JZ") => {
                Ok(Instruction::Jz(reg(r)?, o.parse().map_err(|_| bad())?))
            }
            [op, i, o] if op.eq_ignore_ascii_case("QUERY") => Ok(Instruction::Query { input: reg(i)?, output: reg(o)? }),
            _ => Err(bad()),
        }
    }
}

/// A decoded program together with its code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineProgram {
    code: BigUint,
    instructions: Vec<Instruction>,
}

impl MachineProgram {
    /// Decodes any integer; codes that do not describe a nonempty valid
    /// program decode to the one-instruction program `HALT`.
    pub fn from_code(code: BigUint) -> Self {
        let instructions = Self::decode(&code).unwrap_or_else(|| vec![Instruction::Halt]);
        MachineProgram { code, instructions }
    }

    pub fn from_index(e: u64) -> Self {
        Self::from_code(BigUint::from(e))
    }

    pub fn from_instructions(instructions: Vec<Instruction>) -> Result<Self> {
        if instructions.is_empty() || instructions.len() > MAX_PROGRAM_LEN {
            return Err(Error::InvalidInput(format!("programs have 1 to {MAX_PROGRAM_LEN} instructions")));
        }
        let code = instructions
            .iter()
            .rev()
            .fold(BigUint::zero(), |rest, ins| pair_big(&ins.code(), &rest) + 1u32);
        Ok(MachineProgram { code, instructions })
    }

    fn decode(code: &BigUint) -> Option<Vec<Instruction>> {
        let mut out = Vec::new();
        let mut rest = code.clone();
        while !rest.is_zero() {
            if out.len() == MAX_PROGRAM_LEN {
                return None;
            }
            let (head, tail) = unpair_big(&(rest - 1u32));
            out.push(Instruction::decode(&head)?);
            rest = tail;
        }
        (!out.is_empty()).then_some(out)
    }

    pub fn code(&self) -> &BigUint {
        &self.code
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }
}

impl fmt::Display for MachineProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ins in &self.instructions {
            writeln!(f, "{ins}")?;
        }
        Ok(())
    }
}

impl FromStr for MachineProgram {
    type Err = Error;

    /// One instruction per line; blank lines and `#` comments are ignored.
    fn from_str(text: &str) -> Result<Self> {
        let instructions = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        MachineProgram::from_instructions(instructions)
    }
}

/// A finite initial segment of an oracle set: membership bits below `horizon`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OracleApprox {
    bits: Vec<bool>,
}

impl OracleApprox {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        OracleApprox { bits }
    }

    pub fn empty(horizon: usize) -> Self {
        OracleApprox { bits: vec![false; horizon] }
    }

    pub fn evens(horizon: usize) -> Self {
        Self::from_fn(horizon, |i| i % 2 == 0)
    }

    pub fn from_fn(horizon: usize, member: impl Fn(u64) -> bool) -> Self {
        OracleApprox { bits: (0..horizon as u64).map(member).collect() }
    }

    /// Members at or beyond `horizon` are dropped.
    pub fn from_set<'a>(horizon: usize, members: impl IntoIterator<Item = &'a u64>) -> Self {
        let mut bits = vec![false; horizon];
        for &m in members {
            if (m as usize) < horizon {
                bits[m as usize] = true;
            }
        }
        OracleApprox { bits }
    }

    pub fn horizon(&self) -> usize {
        self.bits.len()
    }

    pub fn get(&self, i: u64) -> Option<bool> {
        self.bits.get(usize::try_from(i).ok()?).copied()
    }

    pub fn members(&self) -> BTreeSet<u64> {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunOutcome {
    /// Reached `HALT` (or ran off the end of the program) after `steps` steps.
    Halted { steps: u64 },
    /// Did not halt within the bound.
    Running,
    /// Queried an index below the bound but beyond the oracle's horizon.
    OracleInsufficient { query: u64 },
}

impl RunOutcome {
    pub fn halted(&self) -> bool {
        matches!(self, RunOutcome::Halted { .. })
    }
}

/// Runs `program` on input `m` with oracle `x`, bounded by `t`.
pub fn step_run(program: &MachineProgram, x: &OracleApprox, m: u64, t: u64) -> RunOutcome {
    let code = program.instructions();
    let mut regs = [0u64; REGISTERS];
    regs[0] = m;
    let mut pc: i64 = 0;
    let mut steps = 0u64;
    loop {
        if steps >= t {
            return RunOutcome::Running;
        }
        steps += 1;
        let Some(ins) = usize::try_from(pc).ok().and_then(|p| code.get(p)) else {
            return RunOutcome::Halted { steps };
        };
        match *ins {
            Instruction::Halt => return RunOutcome::Halted { steps },
            Instruction::Inc(r) => {
                if regs[r] >= t {
                    return RunOutcome::Running;
                }
                regs[r] += 1;
                pc += 1;
            }
            Instruction::Dec(r) => {
                regs[r] = regs[r].saturating_sub(1);
                pc += 1;
            }
            Instruction::Jz(r, off) => {
                pc = if regs[r] == 0 { pc.saturating_add(off) } else { pc + 1 };
            }
            Instruction::Query { input, output } => {
                let q = regs[input];
                if q >= t {
                    return RunOutcome::Running;
                }
                match x.get(q) {
                    Some(bit) => regs[output] = u64::from(bit),
                    None => return RunOutcome::OracleInsufficient { query: q },
                }
                pc += 1;
            }
        }
    }
}

/// A finite stage of `X^{(level)}`: codes `π(m, e)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JumpStageSet {
    pub level: usize,
    pub stage: u64,
    pub members: BTreeSet<u64>,
}

impl JumpStageSet {
    pub fn contains(&self, z: u64) -> bool {
        self.members.contains(&z)
    }

    pub fn is_subset(&self, other: &JumpStageSet) -> bool {
        self.members.is_subset(&other.members)
    }

    /// The set as an oracle answering below `horizon`.
    pub fn as_oracle(&self, horizon: usize) -> OracleApprox {
        OracleApprox::from_set(horizon, &self.members)
    }
}

/// `{π(m, e) : m, e < s, program e halts on m with oracle x within s}`.
pub fn jump_stage(x: &OracleApprox, s: u64) -> JumpStageSet {
    let mut members = BTreeSet::new();
    for e in 0..s {
        let program = MachineProgram::from_index(e);
        for m in 0..s {
            if step_run(&program, x, m, s).halted() {
                members.insert(pair(m, e));
            }
        }
    }
    JumpStageSet { level: 1, stage: s, members }
}

/// Stage `s` of `X^{(levels)}`: level 0 is `x` itself, and each further level
/// is [`jump_stage`] of the previous one seen with horizon `s`.
pub fn iter_jump_stage(x: &OracleApprox, levels: usize, s: u64) -> JumpStageSet {
    let mut current = JumpStageSet { level: 0, stage: s, members: x.members() };
    for level in 1..=levels {
        let oracle = if level == 1 { x.clone() } else { current.as_oracle(s as usize) };
        current = jump_stage(&oracle, s);
        current.level = level;
    }
    current
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum CertificateVerdict {
    Consistent,
    Refuted { input: u64, reason: String },
}

/// Refutation-only check that `e` enumerates `y` and `e_co` its complement,
/// relative to `x`, on every input below `y`'s horizon and within bound `b`.
pub fn check_reduction_certificate(
    e: &MachineProgram,
    e_co: &MachineProgram,
    y: &OracleApprox,
    x: &OracleApprox,
    b: u64,
) -> CertificateVerdict {
    for m in 0..y.horizon() as u64 {
        let member = y.get(m).unwrap_or(false);
        let yes = step_run(e, x, m, b).halted();
        let no = step_run(e_co, x, m, b).halted();
        let reason = match (member, yes, no) {
            (_, true, true) => "both programs halt",
            (true, _, true) => "complement program halts on a member",
            (false, true, _) => "member program halts on a non-member",
            _ => continue,
        };
        return CertificateVerdict::Refuted { input: m, reason: reason.into() };
    }
    CertificateVerdict::Consistent
}

/// Jump levels consumed by the reductions recorded in `ledger`.
pub fn ledger_jump_cost(ledger: &ReductionLedger) -> usize {
    JUMP_LEVELS_PER_STEP * ledger.reductions
}

pub fn solve_jump_cost(result: &SolveResult) -> usize {
    ledger_jump_cost(&result.ledger)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `QUERY 0 → 1`, then halt iff the bit is 1; otherwise count up forever.
    fn parity_probe() -> MachineProgram {
        "QUERY 0 1\nJZ 1 2\nHALT\nINC 2\nJZ 3 -1\n".parse().unwrap()
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(0, 0), 0);
        assert_eq!(pair(1, 0), 1);
        assert_eq!(pair(0, 1), 2);
        assert_eq!(unpair(pair(17, 4)), (17, 4));
        let big = BigUint::from(12345u32);
        assert_eq!(unpair_big(&pair_big(&big, &BigUint::from(7u32))), (big, BigUint::from(7u32)));
    }

    #[test]
    fn halt_program() {
        let p = MachineProgram::from_instructions(vec![Instruction::Halt]).unwrap();
        assert_eq!(p.code(), &BigUint::from(1u32));
        for m in [0, 5, 1 << 40] {
            assert_eq!(step_run(&p, &OracleApprox::empty(0), m, 1), RunOutcome::Halted { steps: 1 });
        }
        assert_eq!(step_run(&p, &OracleApprox::empty(0), 0, 0), RunOutcome::Running);
    }

    #[test]
    fn invalid_codes_decode_to_halt() {
        assert_eq!(MachineProgram::from_index(0).instructions(), &[Instruction::Halt]);
        // head code 5 = HALT with payload 1
        let code = BigUint::from(pair(5, 0) + 1);
        assert_eq!(MachineProgram::from_code(code).instructions(), &[Instruction::Halt]);
    }

    #[test]
    fn code_roundtrip() {
        let p = parity_probe();
        let q = MachineProgram::from_code(p.code().clone());
        assert_eq!(q.instructions(), p.instructions());
        assert_eq!(p.to_string().parse::<MachineProgram>().unwrap(), p);
    }

    #[test]
    fn loop_runs_forever() {
        let p: MachineProgram = "INC 1\nJZ 2 -1".parse().unwrap();
        for t in [0, 1, 10, 100, 1000] {
            assert_eq!(step_run(&p, &OracleApprox::empty(10), 0, t), RunOutcome::Running);
        }
        let tight: MachineProgram = "JZ 1 0".parse().unwrap();
        assert_eq!(step_run(&tight, &OracleApprox::empty(10), 3, 500), RunOutcome::Running);
    }

    #[test]
    fn parity_probe_queries() {
        let p = parity_probe();
        let evens = OracleApprox::evens(10);
        assert_eq!(step_run(&p, &evens, 4, 10), RunOutcome::Halted { steps: 3 });
        assert_eq!(step_run(&p, &evens, 3, 10), RunOutcome::Running);
        // query index at the bound
        assert_eq!(step_run(&p, &evens, 4, 4), RunOutcome::Running);
        // beyond the horizon but below the bound
        assert_eq!(step_run(&p, &OracleApprox::evens(3), 4, 10), RunOutcome::OracleInsufficient { query: 4 });
    }

    #[test]
    fn jump_stage_zero_is_empty() {
        assert!(jump_stage(&OracleApprox::empty(5), 0).members.is_empty());
        assert_eq!(iter_jump_stage(&OracleApprox::evens(6), 0, 3).members, [0, 2, 4].into());
    }

    #[test]
    fn certificate_examples() {
        let yes: MachineProgram = "QUERY 0 1\nJZ 1 2\nHALT\nJZ 2 0".parse().unwrap();
        let no: MachineProgram = "QUERY 0 1\nJZ 1 2\nJZ 2 0\nHALT".parse().unwrap();
        let x = OracleApprox::evens(20);
        let y = OracleApprox::evens(10);
        for b in [0, 1, 5, 20, 100] {
            assert_eq!(check_reduction_certificate(&yes, &no, &y, &x, b), CertificateVerdict::Consistent);
        }
        let halt = MachineProgram::from_index(1);
        assert!(matches!(
            check_reduction_certificate(&halt, &halt, &y, &x, 5),
            CertificateVerdict::Refuted { input: 0, .. }
        ));
        assert_eq!(check_reduction_certificate(&halt, &halt, &y, &x, 0), CertificateVerdict::Consistent);
    }
}
