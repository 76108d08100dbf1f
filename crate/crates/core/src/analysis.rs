//! Contextuality decisions: the incidence matrix, the noncontextuality
//! linear system, the contextual fraction, strong contextuality by
//! exhaustive scan, all-versus-nothing certificates and AMCC classification.

use rayon::prelude::*;
use serde::Serialize;

use crate::empirical::{
    find_marginal_defect, find_signaling, possibilistic_collapse, EmpiricalModel, MarginalWitness, PossibilisticModel,
};
use crate::error::{Error, Result};
use crate::ratlp::{maximize, solve_feasibility, LinearProgram, LpStatus};
use crate::rational::Rational;
use crate::scenario::{check_enumerable, GlobalAssignment, MeasurementScenario};

/// Largest observable count for which the dense LP is built (`2^14` columns).
pub const MAX_LP_OBSERVABLES: usize = 14;

/// Below this observable count assignment scans run on the calling thread.
const PARALLEL_SCAN_THRESHOLD: usize = 16;

/// Rows are (context, section) pairs in canonical order, columns are global
/// assignments in lexicographic order; an entry is 1 iff the assignment
/// restricts to the section. Entries are computed on demand.
#[derive(Debug, Clone)]
pub struct IncidenceMatrix {
    scenario: MeasurementScenario,
    row_offsets: Vec<usize>,
    rows: usize,
    cols: usize,
}

impl IncidenceMatrix {
    pub fn new(s: &MeasurementScenario) -> Result<Self> {
        let n = check_enumerable(s)?;
        let mut row_offsets = Vec::with_capacity(s.num_contexts());
        let mut rows = 0;
        for c in 0..s.num_contexts() {
            row_offsets.push(rows);
            rows += s.num_sections(c);
        }
        Ok(IncidenceMatrix { scenario: s.clone(), row_offsets, rows, cols: 1 << n })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row index of (context, section).
    pub fn row_of(&self, context: usize, section: usize) -> usize {
        self.row_offsets[context] + section
    }

    /// Row indices holding a 1 in column `g`, one per context.
    pub fn column_support(&self, g: u64) -> impl Iterator<Item = usize> + '_ {
        (0..self.scenario.num_contexts()).map(move |c| self.row_of(c, self.scenario.section_of_packed(c, g)))
    }

    pub fn entry(&self, row: usize, g: u64) -> u8 {
        u8::from(self.column_support(g).any(|r| r == row))
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.cols]; self.rows];
        for g in 0..self.cols {
            for r in self.column_support(g as u64) {
                m[r][g] = 1;
            }
        }
        m
    }

    fn to_rational(&self) -> Vec<Vec<Rational>> {
        let mut m = vec![vec![Rational::zero(); self.cols]; self.rows];
        for g in 0..self.cols {
            for r in self.column_support(g as u64) {
                m[r][g] = Rational::one();
            }
        }
        m
    }
}

pub fn incidence_matrix(s: &MeasurementScenario) -> Result<IncidenceMatrix> {
    IncidenceMatrix::new(s)
}

fn lp_matrix(m: &EmpiricalModel) -> Result<Vec<Vec<Rational>>> {
    let n = m.scenario().num_observables();
    if n > MAX_LP_OBSERVABLES {
        return Err(Error::TooLarge { what: "LP observable count", size: n, limit: MAX_LP_OBSERVABLES });
    }
    Ok(IncidenceMatrix::new(m.scenario())?.to_rational())
}

fn require_no_signaling(m: &EmpiricalModel) -> Result<()> {
    match find_signaling(m) {
        Some(w) => Err(Error::SignalingInput(Box::new(w))),
        None => Ok(()),
    }
}

/// Result of the noncontextuality test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextualityVerdict {
    pub contextual: bool,
    /// A global distribution reproducing the model, when noncontextual.
    pub global_distribution: Option<Vec<Rational>>,
}

/// Contextual iff `M d = v, d >= 0` has no solution.
pub fn is_contextual(m: &EmpiricalModel) -> Result<ContextualityVerdict> {
    require_no_signaling(m)?;
    let out = solve_feasibility(&lp_matrix(m)?, &m.flat())?;
    Ok(match out.status {
        LpStatus::Infeasible => ContextualityVerdict { contextual: true, global_distribution: None },
        _ => ContextualityVerdict { contextual: false, global_distribution: out.solution },
    })
}

/// Largest noncontextual part: maximize `sum d` subject to `M d <= v`,
/// `d >= 0`. Returns the noncontextual fraction and the optimal `d`.
pub fn noncontextual_decomposition(m: &EmpiricalModel) -> Result<(Rational, Vec<Rational>)> {
    require_no_signaling(m)?;
    let a = lp_matrix(m)?;
    let cols = a.first().map_or(0, Vec::len);
    let lp = LinearProgram {
        objective: vec![Rational::one(); cols],
        a_eq: Vec::new(),
        b_eq: Vec::new(),
        a_le: a,
        b_le: m.flat(),
    };
    let out = maximize(&lp)?;
    let ncf = out.value.ok_or_else(|| Error::InternalConsistency("NCF program has no optimum".into()))?;
    let d = out.solution.unwrap_or_default();
    Ok((ncf, d))
}

/// `CF = 1 - NCF`.
pub fn contextual_fraction(m: &EmpiricalModel) -> Result<Rational> {
    let (ncf, _) = noncontextual_decomposition(m)?;
    Ok(Rational::one() - ncf)
}

/// Anything with a per-context support.
pub trait Supported {
    fn possibilistic(&self) -> std::borrow::Cow<'_, PossibilisticModel>;
}

impl Supported for PossibilisticModel {
    fn possibilistic(&self) -> std::borrow::Cow<'_, PossibilisticModel> {
        std::borrow::Cow::Borrowed(self)
    }
}

impl Supported for EmpiricalModel {
    fn possibilistic(&self) -> std::borrow::Cow<'_, PossibilisticModel> {
        std::borrow::Cow::Owned(possibilistic_collapse(self))
    }
}

fn consistent_with_support(p: &PossibilisticModel, g: u64) -> bool {
    let s = p.scenario();
    (0..s.num_contexts()).all(|c| p.support(c).contains(s.section_of_packed(c, g)))
}

/// First global assignment (lexicographic) whose restriction to every
/// context is supported, i.e. the least element of `S_e`.
pub fn find_global_section(model: &impl Supported) -> Result<Option<GlobalAssignment>> {
    let p = model.possibilistic();
    let n = check_enumerable(p.scenario())?;
    let found = if n < PARALLEL_SCAN_THRESHOLD {
        (0..1u64 << n).find(|&g| consistent_with_support(&p, g))
    } else {
        (0..1u64 << n).into_par_iter().find_first(|&g| consistent_with_support(&p, g))
    };
    Ok(found.map(|g| GlobalAssignment::from_index(g, n)))
}

/// Strongly contextual iff `S_e` is empty.
pub fn is_strongly_contextual(model: &impl Supported) -> Result<bool> {
    Ok(find_global_section(model)?.is_none())
}

/// One zero constraint violated by a global assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvnEntry {
    pub assignment: GlobalAssignment,
    pub context: usize,
    pub section: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AvnOutcome {
    /// For every global assignment (in order), the first context whose
    /// support excludes its restriction.
    Certificate(Vec<AvnEntry>),
    /// The model is not strongly contextual; this assignment is in `S_e`.
    Fails(GlobalAssignment),
}

pub fn avn_certificate(model: &impl Supported) -> Result<AvnOutcome> {
    let p = model.possibilistic();
    let s = p.scenario();
    let n = check_enumerable(s)?;
    let first_zero = |g: u64| {
        (0..s.num_contexts())
            .find_map(|c| {
                let sec = s.section_of_packed(c, g);
                (!p.support(c).contains(sec)).then(|| AvnEntry {
                    assignment: GlobalAssignment::from_index(g, n),
                    context: c,
                    section: sec,
                })
            })
            .ok_or(g)
    };
    let entries: Vec<std::result::Result<AvnEntry, u64>> = if n < PARALLEL_SCAN_THRESHOLD {
        (0..1u64 << n).map(first_zero).collect()
    } else {
        (0..1u64 << n).into_par_iter().map(first_zero).collect()
    };
    let mut cert = Vec::with_capacity(entries.len());
    for e in entries {
        match e {
            Ok(entry) => cert.push(entry),
            Err(g) => return Ok(AvnOutcome::Fails(GlobalAssignment::from_index(g, n))),
        }
    }
    Ok(AvnOutcome::Certificate(cert))
}

/// CF, strong contextuality, maximal marginals and the AMCC verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationReport {
    pub cf: Rational,
    pub ncf: Rational,
    pub strongly_contextual: bool,
    pub maximal_marginal: bool,
    pub amcc: bool,
    /// Optimal global sub-distribution `d` of the noncontextual part.
    pub global_distribution: Vec<Rational>,
    /// Least element of `S_e` when not strongly contextual.
    pub global_section: Option<GlobalAssignment>,
    pub marginal_defect: Option<MarginalWitness>,
    pub avn: Option<Vec<AvnEntry>>,
}

/// Runs the LP and the exhaustive scan and cross-checks them: a model is
/// strongly contextual exactly when its contextual fraction is 1.
pub fn classify(m: &EmpiricalModel) -> Result<ClassificationReport> {
    let (ncf, d) = noncontextual_decomposition(m)?;
    let cf = Rational::one() - &ncf;
    let global_section = find_global_section(m)?;
    let strongly_contextual = global_section.is_none();
    if strongly_contextual != (cf == Rational::one()) {
        return Err(Error::InternalConsistency(format!(
            "LP gives CF = {cf} but the exhaustive scan says strongly contextual = {strongly_contextual}"
        )));
    }
    let avn = if strongly_contextual {
        match avn_certificate(m)? {
            AvnOutcome::Certificate(c) => Some(c),
            AvnOutcome::Fails(g) => {
                return Err(Error::InternalConsistency(format!(
                    "no AVN certificate although S_e is empty (assignment {})",
                    g.bit_string()
                )))
            }
        }
    } else {
        None
    };
    let marginal_defect = find_marginal_defect(m);
    let maximal_marginal = marginal_defect.is_none();
    Ok(ClassificationReport {
        amcc: strongly_contextual && maximal_marginal,
        cf,
        ncf,
        strongly_contextual,
        maximal_marginal,
        global_distribution: d,
        global_section,
        marginal_defect,
        avn,
    })
}

#[derive(Serialize)]
struct ReportJson<'a> {
    cf: &'a Rational,
    ncf: &'a Rational,
    strongly_contextual: bool,
    maximal_marginal: bool,
    amcc: bool,
    witness: WitnessJson,
}

#[derive(Serialize)]
struct WitnessJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    global_distribution: Option<serde_json::Map<String, serde_json::Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    global_section: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    marginal: Option<MarginalJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    avn_certificate: Option<Vec<AvnJson>>,
}

#[derive(Serialize)]
struct MarginalJson {
    context: String,
    subset: Vec<String>,
    values: Vec<Rational>,
}

#[derive(Serialize)]
struct AvnJson {
    assignment: String,
    context: String,
    section: String,
}

fn bits(index: usize, width: usize) -> String {
    (0..width).map(|k| if (index >> (width - 1 - k)) & 1 == 1 { '1' } else { '0' }).collect()
}

impl ClassificationReport {
    /// The report as a JSON value; labels come from `scenario`.
    pub fn to_json_value(&self, scenario: &MeasurementScenario) -> serde_json::Value {
        let n = scenario.num_observables();
        let global_distribution = (!self.ncf.is_zero()).then(|| {
            self.global_distribution
                .iter()
                .enumerate()
                .filter(|(_, w)| !w.is_zero())
                .map(|(g, w)| (bits(g, n), serde_json::Value::String(w.to_string())))
                .collect()
        });
        let marginal = self.marginal_defect.as_ref().map(|w| MarginalJson {
            context: scenario.context_key(w.context),
            subset: w.subset.iter().map(|&o| scenario.label(o).to_string()).collect(),
            values: w.marginal.clone(),
        });
        let avn_certificate = self.avn.as_ref().map(|entries| {
            entries
                .iter()
                .map(|e| AvnJson {
                    assignment: e.assignment.bit_string(),
                    context: scenario.context_key(e.context),
                    section: bits(e.section, scenario.contexts()[e.context].len()),
                })
                .collect()
        });
        serde_json::to_value(ReportJson {
            cf: &self.cf,
            ncf: &self.ncf,
            strongly_contextual: self.strongly_contextual,
            maximal_marginal: self.maximal_marginal,
            amcc: self.amcc,
            witness: WitnessJson {
                global_distribution,
                global_section: self.global_section.as_ref().map(GlobalAssignment::bit_string),
                marginal,
                avn_certificate,
            },
        })
        .expect("report serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::Support;
    use crate::rational::q;
    use crate::scenario::{bell_scenario, MeasurementScenario};

    fn pr() -> EmpiricalModel {
        let h = q(1, 2);
        let z = Rational::zero();
        let same = vec![h.clone(), z.clone(), z.clone(), h.clone()];
        let diff = vec![z.clone(), h.clone(), h, z];
        EmpiricalModel::new(bell_scenario(2, 2).unwrap(), vec![same.clone(), same.clone(), same, diff], true).unwrap()
    }

    fn deterministic(s: &MeasurementScenario, g: u64) -> EmpiricalModel {
        let tables = (0..s.num_contexts())
            .map(|c| {
                let hit = s.section_of_packed(c, g);
                (0..s.num_sections(c)).map(|k| if k == hit { Rational::one() } else { Rational::zero() }).collect()
            })
            .collect();
        EmpiricalModel::new(s.clone(), tables, true).unwrap()
    }

    #[test]
    fn incidence_shapes() {
        let m = incidence_matrix(&bell_scenario(3, 2).unwrap()).unwrap();
        assert_eq!((m.rows(), m.cols()), (64, 64));
        let m = incidence_matrix(&bell_scenario(2, 2).unwrap()).unwrap();
        assert_eq!((m.rows(), m.cols()), (16, 16));
        let dense = m.to_dense();
        for g in 0..16 {
            assert_eq!(dense.iter().map(|r| r[g] as usize).sum::<usize>(), 4);
        }
        let single = MeasurementScenario::new(&["A"], &[vec!["A"]]).unwrap();
        assert_eq!(incidence_matrix(&single).unwrap().to_dense(), vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn incidence_entries_follow_restriction() {
        let s = bell_scenario(2, 2).unwrap();
        let m = incidence_matrix(&s).unwrap();
        // g = (x1=1, x1'=0, x2=1, x2'=0); context {X1,X2} section (1,1)
        let g = 0b1010;
        assert_eq!(m.entry(m.row_of(0, 0b11), g), 1);
        assert_eq!(m.entry(m.row_of(0, 0b10), g), 0);
    }

    #[test]
    fn pr_box_is_contextual_with_cf_one() {
        let m = pr();
        assert!(is_contextual(&m).unwrap().contextual);
        assert_eq!(contextual_fraction(&m).unwrap(), Rational::one());
        assert!(is_strongly_contextual(&m).unwrap());
    }

    #[test]
    fn deterministic_model_is_noncontextual() {
        let s = bell_scenario(2, 2).unwrap();
        let m = deterministic(&s, 0b0110);
        let v = is_contextual(&m).unwrap();
        assert!(!v.contextual);
        let d = v.global_distribution.unwrap();
        let mut point = vec![Rational::zero(); 16];
        point[0b0110] = Rational::one();
        assert_eq!(d, point);
        assert_eq!(contextual_fraction(&m).unwrap(), Rational::zero());
        let (ncf, d) = noncontextual_decomposition(&m).unwrap();
        assert_eq!(ncf, Rational::one());
        assert_eq!(d, point);
    }

    #[test]
    fn half_pr_half_deterministic() {
        // Upper bound 1/2 from the explicit decomposition, LP gives exactly 1/2.
        let mix = EmpiricalModel::mix(&pr(), &deterministic(&bell_scenario(2, 2).unwrap(), 0), &q(1, 2)).unwrap();
        assert_eq!(contextual_fraction(&mix).unwrap(), q(1, 2));
    }

    #[test]
    fn signaling_input_rejected() {
        let s = bell_scenario(2, 2).unwrap();
        let one = Rational::one();
        let z = Rational::zero();
        let rows = vec![
            vec![one.clone(), z.clone(), z.clone(), z.clone()],
            vec![z.clone(), z.clone(), one.clone(), z.clone()],
            vec![one.clone(), z.clone(), z.clone(), z.clone()],
            vec![one, z.clone(), z.clone(), z],
        ];
        let m = EmpiricalModel::new(s, rows, false).unwrap();
        assert!(matches!(contextual_fraction(&m), Err(Error::SignalingInput(_))));
        assert!(matches!(classify(&m), Err(Error::SignalingInput(_))));
    }

    #[test]
    fn uniform_model_has_all_zero_global_section() {
        let s = bell_scenario(2, 2).unwrap();
        let p = PossibilisticModel::new(s, vec![Support::full(4); 4]).unwrap();
        assert_eq!(find_global_section(&p).unwrap(), Some(GlobalAssignment { values: vec![0; 4] }));
        assert!(matches!(avn_certificate(&p).unwrap(), AvnOutcome::Fails(_)));
    }

    #[test]
    fn pr_avn_certificate() {
        let cert = match avn_certificate(&pr()).unwrap() {
            AvnOutcome::Certificate(c) => c,
            other => panic!("{other:?}"),
        };
        assert_eq!(cert.len(), 16);
        // all-zero assignment fails only the anti-correlated context {X1', X2'}
        assert_eq!(cert[0].context, 3);
        assert_eq!(cert[0].section, 0b00);
    }

    #[test]
    fn classify_pr() {
        let r = classify(&pr()).unwrap();
        assert_eq!(r.cf, Rational::one());
        assert!(r.strongly_contextual && r.maximal_marginal && r.amcc);
        let json = r.to_json_value(pr().scenario());
        assert_eq!(json["cf"], "1");
        assert_eq!(json["ncf"], "0");
        assert_eq!(json["amcc"], true);
        assert_eq!(json["witness"]["avn_certificate"][0]["context"], "X1p|X2p");
    }
}
