//! Generators of strongly contextual models: GF(2) parity systems, Boolean
//! constraint models with Boolean no-signaling, the enumeration experiments
//! over them, and the parametric (3,2,2) table families.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{classify, contextual_fraction, find_global_section};
use crate::empirical::{find_boolean_signaling, lift_uniform, EmpiricalModel, PossibilisticModel, Support};
use crate::error::{Error, Result};
use crate::rational::{q, Rational};
use crate::scenario::{bell_name, bell_scenario, parse_bell_name, GlobalAssignment, MeasurementScenario};

/// A possibilistic model read as the constraint instance "every context
/// takes one of its supported sections".
pub type BooleanModel = PossibilisticModel;

/// Largest context count accepted by [`enumerate_parity`].
pub const MAX_PARITY_CONTEXTS: usize = 20;
/// Largest candidate count accepted by [`csp_enumerate_extension`] (`2^24`).
pub const MAX_CSP_CANDIDATES: u128 = 1 << 24;

/// Runs `f` on a pool with `jobs` workers, or on the global pool for 0.
pub fn run_with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InternalConsistency(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

// ---------------------------------------------------------------------------
// Parity systems

/// One equation per context: the XOR of the context's observables equals
/// the context's parity bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParitySystem {
    scenario: MeasurementScenario,
    parities: Vec<u8>,
}

pub fn parity_system(s: &MeasurementScenario, parities: &[u8]) -> Result<ParitySystem> {
    if parities.len() != s.num_contexts() {
        return Err(Error::LengthMismatch { expected: s.num_contexts(), got: parities.len() });
    }
    if let Some(b) = parities.iter().find(|&&b| b > 1) {
        return Err(Error::OutOfRange(format!("parity bit {b}")));
    }
    Ok(ParitySystem { scenario: s.clone(), parities: parities.to_vec() })
}

#[derive(Serialize, Deserialize)]
struct ParityFile {
    scenario: String,
    parities: Vec<u8>,
}

impl ParitySystem {
    pub fn scenario(&self) -> &MeasurementScenario {
        &self.scenario
    }

    pub fn parities(&self) -> &[u8] {
        &self.parities
    }

    /// `{"scenario":"bell-3-2-2","parities":[...]}`; Bell scenarios only.
    pub fn to_json(&self) -> Result<String> {
        let (n, m) = self
            .scenario
            .bell_shape()
            .ok_or_else(|| Error::Unsupported("parity files name Bell scenarios only".into()))?;
        let file = ParityFile { scenario: bell_name(n, m), parities: self.parities.clone() };
        Ok(serde_json::to_string(&file).expect("parity file serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ParityFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        parity_system(&parse_bell_name(&file.scenario)?, &file.parities)
    }
}

/// Parses a bit string such as `01111111` (whitespace and commas ignored).
pub fn parse_bits(text: &str) -> Result<Vec<u8>> {
    text.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Format(format!("`{other}` is not a bit"))),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParityVerdict {
    /// A solution with every free variable set to 0.
    Consistent(GlobalAssignment),
    /// Equation indices whose left-hand sides cancel while their parities
    /// sum to 1.
    Inconsistent(Vec<usize>),
}

impl ParityVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, ParityVerdict::Consistent(_))
    }
}

struct Gf2Row {
    coeffs: u64,
    rhs: u8,
    combo: Vec<u64>,
}

fn combo_xor(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
}

fn coefficient_rows(s: &MeasurementScenario) -> Result<Vec<u64>> {
    if s.num_observables() > 64 {
        return Err(Error::TooLarge { what: "parity observable count", size: s.num_observables(), limit: 64 });
    }
    Ok(s.contexts().iter().map(|ctx| ctx.iter().fold(0u64, |acc, &o| acc | (1 << o))).collect())
}

/// Gauss-Jordan elimination; returns the reduced rows and their pivot columns.
fn eliminate(coeffs: &[u64], rhs: &[u8]) -> (Vec<Gf2Row>, Vec<Option<u32>>) {
    let words = coeffs.len().div_ceil(64).max(1);
    let mut rows: Vec<Gf2Row> = coeffs
        .iter()
        .zip(rhs)
        .enumerate()
        .map(|(i, (&c, &r))| {
            let mut combo = vec![0u64; words];
            combo[i / 64] |= 1 << (i % 64);
            Gf2Row { coeffs: c, rhs: r, combo }
        })
        .collect();
    let mut pivots = vec![None; rows.len()];
    let mut next = 0;
    for col in 0..64u32 {
        let Some(found) = (next..rows.len()).find(|&r| rows[r].coeffs >> col & 1 == 1) else {
            continue;
        };
        rows.swap(next, found);
        let (pc, pr, pcombo) = (rows[next].coeffs, rows[next].rhs, rows[next].combo.clone());
        for (r, row) in rows.iter_mut().enumerate() {
            if r != next && row.coeffs >> col & 1 == 1 {
                row.coeffs ^= pc;
                row.rhs ^= pr;
                combo_xor(&mut row.combo, &pcombo);
            }
        }
        pivots[next] = Some(col);
        next += 1;
        if next == rows.len() {
            break;
        }
    }
    (rows, pivots)
}

/// GF(2) rank of the context-by-observable incidence matrix.
pub fn context_matrix_rank(s: &MeasurementScenario) -> Result<usize> {
    let coeffs = coefficient_rows(s)?;
    let (_, pivots) = eliminate(&coeffs, &vec![0; coeffs.len()]);
    Ok(pivots.iter().flatten().count())
}

pub fn parity_consistent(ps: &ParitySystem) -> Result<ParityVerdict> {
    let coeffs = coefficient_rows(&ps.scenario)?;
    let (rows, pivots) = eliminate(&coeffs, &ps.parities);
    if let Some(bad) = rows.iter().find(|r| r.coeffs == 0 && r.rhs == 1) {
        let cert = (0..coeffs.len()).filter(|&i| bad.combo[i / 64] >> (i % 64) & 1 == 1).collect();
        return Ok(ParityVerdict::Inconsistent(cert));
    }
    let n = ps.scenario.num_observables();
    let mut values = vec![0u8; n];
    for (row, pivot) in rows.iter().zip(&pivots) {
        if let Some(col) = pivot {
            values[*col as usize] = row.rhs;
        }
    }
    Ok(ParityVerdict::Consistent(GlobalAssignment { values }))
}

/// Context `c` supports exactly the sections whose outcome XOR is `P_c`, so
/// each support is half of its row. A one-observable context therefore
/// supports only the single section `(P_c)`.
pub fn parity_to_possibilistic(ps: &ParitySystem) -> PossibilisticModel {
    let s = &ps.scenario;
    let supports = (0..s.num_contexts())
        .map(|c| {
            let k = s.num_sections(c);
            Support::from_indices(k, (0..k).filter(|sec| (sec.count_ones() % 2) as u8 == ps.parities[c]))
        })
        .collect();
    PossibilisticModel::new(s.clone(), supports).expect("parity supports are nonempty")
}

/// First context pair whose support projections disagree on the overlap.
pub fn boolean_signaling_witness(b: &BooleanModel) -> Option<(usize, usize, Vec<usize>)> {
    find_boolean_signaling(b)
}

pub fn boolean_no_signaling(b: &BooleanModel) -> bool {
    find_boolean_signaling(b).is_none()
}

/// A satisfying global assignment (the least one), if any.
pub fn csp_satisfiable(b: &BooleanModel) -> Result<Option<GlobalAssignment>> {
    find_global_section(b)
}

/// Verdict for one parity vector of an enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParityRecord {
    pub index: u64,
    pub parities: Vec<u8>,
    pub consistent: bool,
    /// Classification of the uniform lift, for inconsistent vectors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cf: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amcc: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParityEnumeration {
    pub total: u64,
    pub consistent: u64,
    pub amcc: u64,
    pub rank: usize,
    #[serde(skip)]
    pub records: Vec<ParityRecord>,
}

/// Bits of parity vector `index`, first context most significant.
pub fn parity_vector(index: u64, contexts: usize) -> Vec<u8> {
    (0..contexts).map(|c| ((index >> (contexts - 1 - c)) & 1) as u8).collect()
}

fn parity_record(s: &MeasurementScenario, index: u64) -> Result<ParityRecord> {
    let parities = parity_vector(index, s.num_contexts());
    let ps = parity_system(s, &parities)?;
    let consistent = parity_consistent(&ps)?.is_consistent();
    let (cf, amcc) = if consistent {
        (None, None)
    } else {
        let report = classify(&lift_uniform(&parity_to_possibilistic(&ps))?)?;
        (Some(report.cf), Some(report.amcc))
    };
    Ok(ParityRecord { index, parities, consistent, cf, amcc })
}

/// Every parity vector of `s`: GF(2) consistency, and for inconsistent ones
/// a full classification of the uniform lift.
pub fn enumerate_parity(s: &MeasurementScenario, jobs: usize) -> Result<ParityEnumeration> {
    let k = s.num_contexts();
    if k > MAX_PARITY_CONTEXTS {
        return Err(Error::TooLarge { what: "parity context count", size: k, limit: MAX_PARITY_CONTEXTS });
    }
    let rank = context_matrix_rank(s)?;
    let total = 1u64 << k;
    let records: Vec<ParityRecord> =
        run_with_jobs(jobs, || (0..total).into_par_iter().map(|i| parity_record(s, i)).collect::<Result<_>>())??;
    let consistent = records.iter().filter(|r| r.consistent).count() as u64;
    let amcc = records.iter().filter(|r| r.amcc == Some(true)).count() as u64;
    Ok(ParityEnumeration { total, consistent, amcc, rank, records })
}

// ---------------------------------------------------------------------------
// Boolean constraint extensions

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CspEnumeration {
    pub candidates: u64,
    pub passing: u64,
    /// Candidate indices that pass, ascending.
    #[serde(skip)]
    pub list: Vec<u64>,
}

/// Absent sections of each extendable context, in ascending order.
fn absent_sections(base: &BooleanModel, extendable: &[usize]) -> Result<Vec<(usize, Vec<usize>)>> {
    let k = base.scenario().num_contexts();
    let mut seen = vec![false; k];
    extendable
        .iter()
        .map(|&c| {
            if c >= k {
                return Err(Error::IndexOutOfRange { index: c, limit: k });
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::Format(format!("context {c} listed twice")));
            }
            let sup = base.support(c);
            Ok((c, (0..sup.len()).filter(|&s| !sup.contains(s)).collect()))
        })
        .collect()
}

/// Number of candidates [`csp_enumerate_extension`] would visit.
pub fn csp_candidate_count(base: &BooleanModel, extendable: &[usize]) -> Result<u128> {
    let bits: usize = absent_sections(base, extendable)?.iter().map(|(_, a)| a.len()).sum();
    Ok(if bits >= 127 { u128::MAX } else { 1u128 << bits })
}

fn extend(base: &BooleanModel, absent: &[(usize, Vec<usize>)], index: u64) -> BooleanModel {
    let mut supports = base.supports().to_vec();
    let mut bit = 0;
    for (c, missing) in absent {
        for &sec in missing {
            if index >> bit & 1 == 1 {
                supports[*c].insert(sec);
            }
            bit += 1;
        }
    }
    PossibilisticModel::new(base.scenario().clone(), supports).expect("extension keeps supports nonempty")
}

/// Candidate `index`: absent section `j` of the `k`-th extendable context is
/// added iff bit `(sum of earlier absent counts) + j` of `index` is set.
pub fn csp_candidate(base: &BooleanModel, extendable: &[usize], index: u64) -> Result<BooleanModel> {
    let absent = absent_sections(base, extendable)?;
    Ok(extend(base, &absent, index))
}

/// Visits every way of adding absent sections to the extendable contexts and
/// keeps those that are Boolean no-signaling and unsatisfiable.
pub fn csp_enumerate_extension(base: &BooleanModel, extendable: &[usize], jobs: usize) -> Result<CspEnumeration> {
    if let Some(c) = base.supports().iter().position(Support::is_empty) {
        return Err(Error::EmptySupport(c));
    }
    let count = csp_candidate_count(base, extendable)?;
    if count > MAX_CSP_CANDIDATES {
        return Err(Error::TooManyCandidates(count));
    }
    let absent = absent_sections(base, extendable)?;
    let candidates = count as u64;
    let verdicts: Vec<bool> = run_with_jobs(jobs, || {
        (0..candidates)
            .into_par_iter()
            .map(|i| {
                let m = extend(base, &absent, i);
                Ok(boolean_no_signaling(&m) && csp_satisfiable(&m)?.is_none())
            })
            .collect::<Result<_>>()
    })??;
    let list: Vec<u64> = (0..candidates).filter(|&i| verdicts[i as usize]).collect();
    Ok(CspEnumeration { candidates, passing: list.len() as u64, list })
}

fn supports_from(s: &MeasurementScenario, rule: impl Fn(usize, usize) -> bool) -> BooleanModel {
    let supports = (0..s.num_contexts())
        .map(|c| {
            let k = s.num_sections(c);
            Support::from_indices(k, (0..k).filter(|&sec| rule(c, sec)))
        })
        .collect();
    PossibilisticModel::new(s.clone(), supports).expect("preset supports are nonempty")
}

/// Base instance of the anchored extension preset on (3,2,2): odd parity on
/// the first context, even parity on contexts 4, 6 and 7 (1-based), and
/// "first outcome is 0" on the remaining four.
pub fn anchored_base() -> BooleanModel {
    let s = bell_scenario(3, 2).expect("bell scenario");
    supports_from(&s, |c, sec| match c {
        0 => sec.count_ones() % 2 == 1,
        3 | 5 | 6 => sec.count_ones() % 2 == 0,
        _ => sec & 0b100 == 0,
    })
}

/// Extendable contexts of the anchored preset: the four "first outcome is 0"
/// contexts (0-based indices).
pub const ANCHORED_EXTENDABLE: [usize; 4] = [1, 2, 4, 7];

/// A passing member of the anchored extension: sections (1,0,0) and (1,1,1)
/// added to every extendable context.
pub fn anchored_example() -> BooleanModel {
    let base = anchored_base();
    let mut supports = base.supports().to_vec();
    for c in ANCHORED_EXTENDABLE {
        supports[c].insert(0b100);
        supports[c].insert(0b111);
    }
    PossibilisticModel::new(base.scenario().clone(), supports).expect("nonempty")
}

/// Candidate index of [`anchored_example`] within the anchored enumeration.
pub fn anchored_example_index() -> u64 {
    // each extendable context misses (1,0,0),(1,0,1),(1,1,0),(1,1,1) in that
    // order; the example adds the first and the last
    (0..4).fold(0, |acc, k| acc | (0b1001 << (4 * k)))
}

// ---------------------------------------------------------------------------
// Parametric families

fn in_quarter(p: &Rational) -> bool {
    !p.is_negative() && *p <= q(1, 4)
}

/// Row `c` is `(p, 1/4-p, 1/4-p, p, 1/4-p, p, p, 1/4-p)` with `p = p[c]`.
pub fn eight_param_family(p: &[Rational]) -> Result<EmpiricalModel> {
    if p.len() != 8 {
        return Err(Error::LengthMismatch { expected: 8, got: p.len() });
    }
    if let Some(bad) = p.iter().find(|v| !in_quarter(v)) {
        return Err(Error::OutOfRange(format!("parameter {bad} outside [0, 1/4]")));
    }
    let quarter = q(1, 4);
    let tables = p
        .iter()
        .map(|x| {
            let y = &quarter - x;
            vec![x.clone(), y.clone(), y.clone(), x.clone(), y.clone(), x.clone(), x.clone(), y]
        })
        .collect();
    EmpiricalModel::new(bell_scenario(3, 2)?, tables, true)
}

/// Evaluates a linear expression such as `1/2-2p1+p2` or `1-(p1+p3)`.
fn eval_linear(expr: &str, params: &[Rational]) -> Result<Rational> {
    struct Parser<'a> {
        s: &'a [u8],
        at: usize,
        params: &'a [Rational],
    }
    impl Parser<'_> {
        fn bad(&self) -> Error {
            Error::Format(format!("bad table expression at byte {}", self.at))
        }
        fn number(&mut self) -> Option<i64> {
            let start = self.at;
            while self.at < self.s.len() && self.s[self.at].is_ascii_digit() {
                self.at += 1;
            }
            std::str::from_utf8(&self.s[start..self.at]).ok()?.parse().ok()
        }
        fn term(&mut self) -> Result<Rational> {
            if self.s.get(self.at) == Some(&b'(') {
                self.at += 1;
                let v = self.expr()?;
                if self.s.get(self.at) != Some(&b')') {
                    return Err(self.bad());
                }
                self.at += 1;
                return Ok(v);
            }
            let mut coeff = None;
            if let Some(n) = self.number() {
                let mut c = Rational::from_integer(n);
                if self.s.get(self.at) == Some(&b'/') {
                    self.at += 1;
                    let d = self.number().ok_or_else(|| self.bad())?;
                    c = Rational::new(n, d);
                }
                coeff = Some(c);
            }
            if self.s.get(self.at) == Some(&b'p') {
                self.at += 1;
                let i = self.number().ok_or_else(|| self.bad())? as usize;
                let p = self.params.get(i.wrapping_sub(1)).ok_or_else(|| self.bad())?;
                return Ok(coeff.map_or_else(|| p.clone(), |c| c * p));
            }
            coeff.ok_or_else(|| self.bad())
        }
        fn expr(&mut self) -> Result<Rational> {
            let mut acc = self.term()?;
            while let Some(&op) = self.s.get(self.at) {
                match op {
                    b'+' => {
                        self.at += 1;
                        acc = acc + self.term()?;
                    }
                    b'-' => {
                        self.at += 1;
                        acc = acc - self.term()?;
                    }
                    _ => break,
                }
            }
            Ok(acc)
        }
    }
    let mut parser = Parser { s: expr.as_bytes(), at: 0, params };
    let v = parser.expr()?;
    if parser.at != expr.len() {
        return Err(parser.bad());
    }
    Ok(v)
}

fn instantiate(table: &[[&str; 8]; 8], params: &[Rational]) -> Result<Vec<Vec<Rational>>> {
    table
        .iter()
        .enumerate()
        .map(|(c, row)| {
            row.iter()
                .enumerate()
                .map(|(sec, e)| {
                    let v = eval_linear(e, params)?;
                    if v.is_negative() || v > Rational::one() {
                        return Err(Error::OutOfRange(format!("entry ({c}, {sec}) = {e} evaluates to {v}")));
                    }
                    Ok(v)
                })
                .collect()
        })
        .collect()
}

const THREE_PARAM_TABLE: [[&str; 8]; 8] = [
    ["0", "p1", "p1", "0", "1/2-p1", "0", "0", "1/2-p1"],
    ["p2", "p1-p2", "p3", "p1-p3", "1/2-p1", "0", "0", "1/2-p1"],
    ["p2", "p3", "p1-p2", "p1-p3", "1/2-p1", "0", "0", "1/2-p1"],
    ["p2+p3", "0", "0", "2p1-p2-p3", "0", "1/2-p1", "1/2-p1", "0"],
    ["1/2-2p1+p2", "p1", "p1", "1/2-p1-p3", "p1-p2", "0", "0", "p3"],
    ["1/2-p1+p2", "0", "0", "1/2-p3", "0", "p1-p2", "p3", "0"],
    ["1/2-p1+p2", "0", "0", "1/2-p3", "0", "p3", "p1-p2", "0"],
    ["p2", "1/2-p1", "1/2-p1", "p1-p3", "p3", "0", "0", "p1-p2"],
];

/// Asymmetric strongly contextual family; entries outside `[0, 1]` give
/// `OutOfRange`, rows that fail to sum to 1 give `RowNotNormalized`.
pub fn three_param_family(p1: &Rational, p2: &Rational, p3: &Rational) -> Result<EmpiricalModel> {
    let tables = instantiate(&THREE_PARAM_TABLE, &[p1.clone(), p2.clone(), p3.clone()])?;
    EmpiricalModel::new(bell_scenario(3, 2)?, tables, true)
}

/// Interior of the region on which the three-parameter family is strongly
/// contextual: `0 <= p2 < 1/2`, `p2 < p1 < p2/2 + 1/4` and
/// `0 < p3 < min(p1, 1/2 - p1, 2 p1 - p2)`.
pub fn three_param_in_bounds(p1: &Rational, p2: &Rational, p3: &Rational) -> bool {
    let half = q(1, 2);
    let cap = [p1.clone(), &half - p1, &(p1 + p1) - p2].into_iter().min().expect("nonempty");
    !p2.is_negative() && *p2 < half && p2 < p1 && *p1 < &(p2 * &half) + &q(1, 4) && p3.is_positive() && *p3 < cap
}

const TWENTYSIX_PARAM_TABLE: [[&str; 8]; 8] = [
    ["p1", "p2", "p3", "p4", "p5", "p6", "p7", "1-(p1+p2+p3+p4+p5+p6+p7)"],
    ["p9", "p1+p2-p9", "p11", "p3+p4-p11", "p13", "p5+p6-p13", "p15", "1-(p1+p2+p3+p4+p5+p6+p15)"],
    ["p17", "p18", "p1+p3-p17", "p2+p4-p18", "p21", "p22", "p5+p7-p21", "1-(p1+p2+p3+p4+p5+p7+p22)"],
    [
        "p25",
        "p17+p18-p25",
        "p9+p11-p25",
        "p1+p2+p3+p4-p9-p11-p17-p18+p25",
        "p8",
        "p21+p22-p8",
        "p13+p15-p8",
        "1-(p1+p2+p3+p4+p21+p22+p13+p15-p8)",
    ],
    ["p10", "p12", "p14", "p16", "p1+p5-p10", "p2+p6-p12", "p3+p7-p14", "1-(p1+p2+p3+p5+p6+p7+p16)"],
    [
        "p19",
        "p10+p12-p19",
        "p20",
        "p14+p16-p20",
        "p9+p13-p19",
        "p1+p2+p5+p6-p9-p13-p10-p12+p19",
        "p11+p15-p20",
        "1-(p1+p2+p5+p6+p11+p14+p15+p16-p20)",
    ],
    [
        "p23",
        "p24",
        "p10+p14-p23",
        "p12+p16-p24",
        "p17+p21-p23",
        "p18+p22-p24",
        "p1+p3+p5+p7-p17-p21-p10-p14+p23",
        "1-(p1+p3+p5+p7+p18+p22+p12+p16-p24)",
    ],
    [
        "p26",
        "p23+p24-p26",
        "p19+p20-p26",
        "p10+p12+p14+p16-p19-p20-p23-p24+p26",
        "p25+p8-p26",
        "p17+p18+p21+p22-p25-p8-p23-p24+p26",
        "p9+p11+p13+p15-p25-p8-p19-p20+p26",
        "1-(p9+p11+p13+p15+p17+p18+p21+p22-p25-p8+p10+p12+p14+p16-p19-p20-p23-p24+p26)",
    ],
];

/// The general (3,2,2) no-signaling table in 26 parameters.
pub fn twentysix_param_family(p: &[Rational]) -> Result<EmpiricalModel> {
    if p.len() != 26 {
        return Err(Error::LengthMismatch { expected: 26, got: p.len() });
    }
    let tables = instantiate(&TWENTYSIX_PARAM_TABLE, p)?;
    EmpiricalModel::new(bell_scenario(3, 2)?, tables, true)
}

// ---------------------------------------------------------------------------
// Scans

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanPoint {
    pub params: Vec<Rational>,
    pub cf: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanReport {
    pub points: Vec<ScanPoint>,
    pub histogram: BTreeMap<Rational, u64>,
}

impl ScanReport {
    fn from_points(points: Vec<ScanPoint>) -> Self {
        let mut histogram = BTreeMap::new();
        for p in &points {
            *histogram.entry(p.cf.clone()).or_insert(0) += 1;
        }
        ScanReport { points, histogram }
    }

    /// `{"points":N,"histogram":{"0":a,"1/2":b,...}}`
    pub fn summary_json(&self) -> serde_json::Value {
        let hist: serde_json::Map<String, serde_json::Value> =
            self.histogram.iter().map(|(k, v)| (k.to_string(), (*v).into())).collect();
        serde_json::json!({ "points": self.points.len(), "histogram": hist })
    }
}

fn scan_points(points: Vec<Vec<Rational>>, jobs: usize) -> Result<ScanReport> {
    let cfs: Vec<Rational> = run_with_jobs(jobs, || {
        points
            .par_iter()
            .map(|p| contextual_fraction(&eight_param_family(p)?))
            .collect::<Result<_>>()
    })??;
    Ok(ScanReport::from_points(points.into_iter().zip(cfs).map(|(params, cf)| ScanPoint { params, cf }).collect()))
}

/// CF of the eight-parameter family over a grid: `grid[i]` lists the values
/// of parameter `i + 1`, `fixed` overrides single parameters (0-based).
/// Points are visited with parameter 1 varying slowest.
pub fn scan_eight_param(grid: &[Vec<Rational>], fixed: &[(usize, Rational)], jobs: usize) -> Result<ScanReport> {
    if grid.len() != 8 {
        return Err(Error::LengthMismatch { expected: 8, got: grid.len() });
    }
    let mut axes: Vec<Vec<Rational>> = grid.to_vec();
    for (i, v) in fixed {
        let axis = axes.get_mut(*i).ok_or(Error::IndexOutOfRange { index: *i, limit: 8 })?;
        *axis = vec![v.clone()];
    }
    if let Some(bad) = axes.iter().flatten().find(|v| !in_quarter(v)) {
        return Err(Error::OutOfRange(format!("grid value {bad} outside [0, 1/4]")));
    }
    if let Some(i) = axes.iter().position(Vec::is_empty) {
        return Err(Error::OutOfRange(format!("parameter {} has no grid values", i + 1)));
    }
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    scan_points(points, jobs)
}

/// Every choice of two parameters `i < j` with values `(a, b)` drawn from
/// `values`, all other parameters 0.
pub fn scan_eight_param_pairs(values: &[Rational], jobs: usize) -> Result<ScanReport> {
    if let Some(bad) = values.iter().find(|v| !in_quarter(v)) {
        return Err(Error::OutOfRange(format!("value {bad} outside [0, 1/4]")));
    }
    let mut points = Vec::new();
    for i in 0..8 {
        for j in i + 1..8 {
            for a in values {
                for b in values {
                    let mut p = vec![Rational::zero(); 8];
                    p[i] = a.clone();
                    p[j] = b.clone();
                    points.push(p);
                }
            }
        }
    }
    scan_points(points, jobs)
}
