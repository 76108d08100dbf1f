//! Probabilistic and possibilistic empirical models over a scenario.

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use std::collections::HashMap;

use crate::error::{Error, Result, SignalingWitness};
use crate::rational::Rational;
use crate::scenario::MeasurementScenario;

/// One exact distribution per context, each over that context's sections in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalModel {
    scenario: MeasurementScenario,
    tables: Vec<Vec<Rational>>,
}

/// A set of sections of one context, stored as a bitmask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Support {
    len: usize,
    words: Vec<u64>,
}

/// Per-context supports. Also read as the Boolean formula that is the
/// conjunction over contexts of the disjunction of supported sections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PossibilisticModel {
    scenario: MeasurementScenario,
    supports: Vec<Support>,
}

/// A proper sub-marginal of a context that is not uniform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarginalWitness {
    pub context: usize,
    /// Observable indices of the subset, in context order.
    pub subset: Vec<usize>,
    pub marginal: Vec<Rational>,
}

impl Support {
    pub fn empty(len: usize) -> Self {
        Support { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Support::empty(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Support::empty(bits.len());
        for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            s.insert(i);
        }
        s
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Support::empty(len);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "section {i} out of range");
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.contains(i))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.contains(i)).collect()
    }
}

/// Maps a section index of a `width`-observable context to the index of its
/// restriction onto the given positions (position 0 is leftmost).
#[inline]
fn project_index(section: usize, width: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .fold(0, |acc, &p| (acc << 1) | ((section >> (width - 1 - p)) & 1))
}

fn positions_in(context: &[usize], subset: &[usize], scenario: &MeasurementScenario) -> Result<Vec<usize>> {
    let mut missing = Vec::new();
    let positions: Vec<usize> = subset
        .iter()
        .filter_map(|o| {
            let p = context.iter().position(|c| c == o);
            if p.is_none() {
                missing.push(scenario.observables().get(*o).cloned().unwrap_or_else(|| o.to_string()));
            }
            p
        })
        .collect();
    if missing.is_empty() {
        Ok(positions)
    } else {
        Err(Error::NotASubset(missing))
    }
}

fn marginalize(row: &[Rational], width: usize, positions: &[usize]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); 1 << positions.len()];
    for (s, p) in row.iter().enumerate() {
        if !p.is_zero() {
            out[project_index(s, width, positions)] += p;
        }
    }
    out
}

fn project_support(support: &Support, width: usize, positions: &[usize]) -> Support {
    Support::from_indices(1 << positions.len(), support.iter().map(|s| project_index(s, width, positions)))
}

fn overlap(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|o| b.contains(o)).collect()
}

impl EmpiricalModel {
    /// Validates shape, nonnegativity and normalization; checks
    /// no-signaling too when `check_ns` is set.
    pub fn new(scenario: MeasurementScenario, tables: Vec<Vec<Rational>>, check_ns: bool) -> Result<Self> {
        if tables.len() != scenario.num_contexts() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows for {} contexts",
                tables.len(),
                scenario.num_contexts()
            )));
        }
        for (c, row) in tables.iter().enumerate() {
            if row.len() != scenario.num_sections(c) {
                return Err(Error::ShapeMismatch(format!(
                    "context {c} has {} entries, expected {}",
                    row.len(),
                    scenario.num_sections(c)
                )));
            }
            if let Some((s, v)) = row.iter().enumerate().find(|(_, v)| v.is_negative()) {
                return Err(Error::NegativeEntry { context: c, section: s, value: v.clone() });
            }
            let sum: Rational = row.iter().sum();
            if sum != Rational::one() {
                return Err(Error::RowNotNormalized { context: c, sum });
            }
        }
        let model = EmpiricalModel { scenario, tables };
        if check_ns {
            if let Some(w) = find_signaling(&model) {
                return Err(Error::SignalingDetected(Box::new(w)));
            }
        }
        Ok(model)
    }

    pub fn scenario(&self) -> &MeasurementScenario {
        &self.scenario
    }

    pub fn tables(&self) -> &[Vec<Rational>] {
        &self.tables
    }

    pub fn row(&self, c: usize) -> &[Rational] {
        &self.tables[c]
    }

    pub fn prob(&self, c: usize, section: usize) -> &Rational {
        &self.tables[c][section]
    }

    /// The local probability vector `v`: rows concatenated in context order.
    pub fn flat(&self) -> Vec<Rational> {
        self.tables.iter().flatten().cloned().collect()
    }

    /// `weight * a + (1 - weight) * b`, entrywise.
    pub fn mix(a: &EmpiricalModel, b: &EmpiricalModel, weight: &Rational) -> Result<EmpiricalModel> {
        if a.scenario != b.scenario {
            return Err(Error::ShapeMismatch("mixing models over different scenarios".into()));
        }
        if weight.is_negative() || *weight > Rational::one() {
            return Err(Error::OutOfRange(format!("mixture weight {weight}")));
        }
        let rest = Rational::one() - weight;
        let tables = a
            .tables
            .iter()
            .zip(&b.tables)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| weight * x + &rest * y).collect())
            .collect();
        EmpiricalModel::new(a.scenario.clone(), tables, false)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    /// Parses the model file format; `check_ns` as in [`EmpiricalModel::new`].
    pub fn from_json(text: &str, check_ns: bool) -> Result<Self> {
        let file: ModelFile<Rational> =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let tables = file.into_rows()?;
        EmpiricalModel::new(tables.0, tables.1, check_ns)
    }
}

/// Marginal of context `c` onto the observables `u` (listed in any order
/// that is a subset of the context). Output is indexed by sections of `u`.
pub fn marginal(m: &EmpiricalModel, c: usize, u: &[usize]) -> Result<Vec<Rational>> {
    let ctx = m.scenario.context(c)?;
    let positions = positions_in(ctx, u, &m.scenario)?;
    Ok(marginalize(&m.tables[c], ctx.len(), &positions))
}

/// First pair of contexts (in canonical order) whose marginals on their
/// overlap disagree, or `None` if the model is no-signaling.
pub fn find_signaling(m: &EmpiricalModel) -> Option<SignalingWitness> {
    let contexts = m.scenario.contexts();
    for i in 0..contexts.len() {
        for j in i + 1..contexts.len() {
            let shared = overlap(&contexts[i], &contexts[j]);
            if shared.is_empty() {
                continue;
            }
            let pi = positions_in(&contexts[i], &shared, &m.scenario).expect("overlap is a subset");
            let pj = positions_in(&contexts[j], &shared, &m.scenario).expect("overlap is a subset");
            let mi = marginalize(&m.tables[i], contexts[i].len(), &pi);
            let mj = marginalize(&m.tables[j], contexts[j].len(), &pj);
            if mi != mj {
                return Some(SignalingWitness {
                    first: i,
                    second: j,
                    overlap: shared,
                    first_marginal: mi,
                    second_marginal: mj,
                });
            }
        }
    }
    None
}

pub fn is_no_signaling(m: &EmpiricalModel) -> bool {
    find_signaling(m).is_none()
}

/// Proper nonempty subsets of a `width`-element context as position lists,
/// ordered by size, then lexicographically.
fn proper_subsets(width: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = (1u64..(1 << width) - 1)
        .map(|mask| (0..width).filter(|p| (mask >> p) & 1 == 1).collect())
        .collect();
    subsets.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
}

/// First context/subset whose marginal is not uniform at `1/2^k`.
pub fn find_marginal_defect(m: &EmpiricalModel) -> Option<MarginalWitness> {
    for (c, ctx) in m.scenario.contexts().iter().enumerate() {
        for positions in proper_subsets(ctx.len()) {
            let marg = marginalize(&m.tables[c], ctx.len(), &positions);
            let uniform = Rational::inv_pow2(positions.len() as u32);
            if marg.iter().any(|v| *v != uniform) {
                return Some(MarginalWitness {
                    context: c,
                    subset: positions.iter().map(|&p| ctx[p]).collect(),
                    marginal: marg,
                });
            }
        }
    }
    None
}

/// Every proper within-context marginal on `k` observables equals `1/2^k`.
pub fn is_maximal_marginal(m: &EmpiricalModel) -> bool {
    find_marginal_defect(m).is_none()
}

pub fn possibilistic_collapse(m: &EmpiricalModel) -> PossibilisticModel {
    let supports = m
        .tables
        .iter()
        .map(|row| Support::from_indices(row.len(), row.iter().enumerate().filter(|(_, p)| p.is_positive()).map(|(s, _)| s)))
        .collect();
    PossibilisticModel { scenario: m.scenario.clone(), supports }
}

/// Uniform weight on each row's support; the result is re-checked for
/// probabilistic no-signaling.
pub fn lift_uniform(p: &PossibilisticModel) -> Result<EmpiricalModel> {
    lift(p, true)
}

/// As [`lift_uniform`] but without the no-signaling check, so every model
/// with nonempty supports lifts.
pub fn lift_uniform_unchecked(p: &PossibilisticModel) -> Result<EmpiricalModel> {
    lift(p, false)
}

fn lift(p: &PossibilisticModel, check_ns: bool) -> Result<EmpiricalModel> {
    let tables = p
        .supports
        .iter()
        .enumerate()
        .map(|(c, sup)| {
            let n = sup.count();
            if n == 0 {
                return Err(Error::EmptySupport(c));
            }
            let w = Rational::new(1, n as i64);
            Ok((0..sup.len()).map(|s| if sup.contains(s) { w.clone() } else { Rational::zero() }).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    EmpiricalModel::new(p.scenario.clone(), tables, check_ns)
}

impl PossibilisticModel {
    pub fn new(scenario: MeasurementScenario, supports: Vec<Support>) -> Result<Self> {
        if supports.len() != scenario.num_contexts() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows for {} contexts",
                supports.len(),
                scenario.num_contexts()
            )));
        }
        for (c, sup) in supports.iter().enumerate() {
            if sup.len() != scenario.num_sections(c) {
                return Err(Error::ShapeMismatch(format!("context {c} support has wrong width")));
            }
            if sup.is_empty() {
                return Err(Error::EmptySupport(c));
            }
        }
        Ok(PossibilisticModel { scenario, supports })
    }

    pub fn from_bools(scenario: MeasurementScenario, rows: &[Vec<bool>]) -> Result<Self> {
        Self::new(scenario, rows.iter().map(|r| Support::from_bools(r)).collect())
    }

    pub fn scenario(&self) -> &MeasurementScenario {
        &self.scenario
    }

    pub fn supports(&self) -> &[Support] {
        &self.supports
    }

    pub fn support(&self, c: usize) -> &Support {
        &self.supports[c]
    }

    /// Projection (existential over dropped observables) of context `c`'s
    /// support onto `u`.
    pub fn project(&self, c: usize, u: &[usize]) -> Result<Support> {
        let ctx = self.scenario.context(c)?;
        let positions = positions_in(ctx, u, &self.scenario)?;
        Ok(project_support(&self.supports[c], ctx.len(), &positions))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile<u8> = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let (scenario, rows) = file.into_rows()?;
        let rows: Vec<Vec<bool>> = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|b| match b {
                        0 => Ok(false),
                        1 => Ok(true),
                        v => Err(Error::Format(format!("support entry {v} is not 0/1"))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        PossibilisticModel::from_bools(scenario, &rows)
    }
}

/// First pair of contexts whose supports project to different sets on their
/// overlap, reported as `(first, second, overlap)`.
pub fn find_boolean_signaling(p: &PossibilisticModel) -> Option<(usize, usize, Vec<usize>)> {
    let contexts = p.scenario.contexts();
    for i in 0..contexts.len() {
        for j in i + 1..contexts.len() {
            let shared = overlap(&contexts[i], &contexts[j]);
            if shared.is_empty() {
                continue;
            }
            let a = p.project(i, &shared).expect("overlap is a subset");
            let b = p.project(j, &shared).expect("overlap is a subset");
            if a != b {
                return Some((i, j, shared));
            }
        }
    }
    None
}

#[derive(Deserialize)]
struct ModelFile<T> {
    scenario: MeasurementScenario,
    tables: HashMap<String, Vec<T>>,
}

impl<T> ModelFile<T> {
    fn into_rows(mut self) -> Result<(MeasurementScenario, Vec<Vec<T>>)> {
        let mut rows = Vec::with_capacity(self.scenario.num_contexts());
        for c in 0..self.scenario.num_contexts() {
            let key = self.scenario.context_key(c);
            let row = self
                .tables
                .remove(&key)
                .ok_or_else(|| Error::Format(format!("missing table for context `{key}`")))?;
            rows.push(row);
        }
        if let Some(extra) = self.tables.keys().next() {
            return Err(Error::Format(format!("table for unknown context `{extra}`")));
        }
        Ok((self.scenario, rows))
    }
}

struct Tables<'a, T: Serialize> {
    scenario: &'a MeasurementScenario,
    rows: Vec<T>,
}

impl<T: Serialize> Serialize for Tables<'_, T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.rows.len()))?;
        for (c, row) in self.rows.iter().enumerate() {
            map.serialize_entry(&self.scenario.context_key(c), row)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct ModelFileOut<'a, T: Serialize> {
    scenario: &'a MeasurementScenario,
    tables: Tables<'a, T>,
}

impl Serialize for EmpiricalModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ModelFileOut {
            scenario: &self.scenario,
            tables: Tables { scenario: &self.scenario, rows: self.tables.iter().collect() },
        }
        .serialize(serializer)
    }
}

impl Serialize for PossibilisticModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<u8>> = self
            .supports
            .iter()
            .map(|s| s.to_bools().into_iter().map(u8::from).collect())
            .collect();
        ModelFileOut { scenario: &self.scenario, tables: Tables { scenario: &self.scenario, rows } }
            .serialize(serializer)
    }
}
