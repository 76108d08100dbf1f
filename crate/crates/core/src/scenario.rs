//! Measurement scenarios: observables, the measurement cover, sections and
//! global assignments, and the restriction maps between them.
//!
//! Orderings are part of the contract. Observables keep their input order,
//! observables inside a context are sorted by that order, and sections are
//! enumerated lexicographically with the leftmost observable most
//! significant. Incidence matrices and file formats depend on this.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest observable count for which global assignments are enumerated.
pub const MAX_ENUMERATED_OBSERVABLES: usize = 24;

/// The triple of observables, measurement cover and (binary) outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementScenario {
    observables: Vec<String>,
    contexts: Vec<Vec<usize>>,
    outcomes: u32,
}

/// An outcome for each observable of `domain`, in domain order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Section {
    pub domain: Vec<usize>,
    pub values: Vec<u8>,
}

/// An outcome for every observable, in scenario order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalAssignment {
    pub values: Vec<u8>,
}

impl MeasurementScenario {
    /// Validates a cover given by labels. Contexts keep their input order.
    pub fn new<S: AsRef<str>>(observables: &[S], contexts: &[Vec<S>]) -> Result<Self> {
        let observables: Vec<String> = observables.iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = HashMap::new();
        for (i, label) in observables.iter().enumerate() {
            if index.insert(label.as_str(), i).is_some() {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }

        let mut resolved = Vec::with_capacity(contexts.len());
        for (ci, ctx) in contexts.iter().enumerate() {
            if ctx.is_empty() {
                return Err(Error::EmptyContext(ci));
            }
            let mut ids = Vec::with_capacity(ctx.len());
            for label in ctx {
                let label = label.as_ref();
                let id = *index
                    .get(label)
                    .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
                if ids.contains(&id) {
                    return Err(Error::DuplicateLabel(label.to_string()));
                }
                ids.push(id);
            }
            ids.sort_unstable();
            resolved.push(ids);
        }
        Self::from_indices(observables, resolved)
    }

    fn from_indices(observables: Vec<String>, contexts: Vec<Vec<usize>>) -> Result<Self> {
        let mut covered = vec![false; observables.len()];
        for ctx in &contexts {
            for &o in ctx {
                covered[o] = true;
            }
        }
        if let Some(missing) = covered.iter().position(|c| !c) {
            return Err(Error::CoverViolation(observables[missing].clone()));
        }
        for (i, a) in contexts.iter().enumerate() {
            for (j, b) in contexts.iter().enumerate() {
                if i == j {
                    continue;
                }
                if a == b && i < j {
                    return Err(Error::DuplicateLabel(
                        a.iter().map(|&o| observables[o].as_str()).collect::<Vec<_>>().join("|"),
                    ));
                }
                if a.len() < b.len() && a.iter().all(|o| b.contains(o)) {
                    return Err(Error::ChainViolation { inner: i, outer: j });
                }
            }
        }
        Ok(MeasurementScenario { observables, contexts, outcomes: 2 })
    }

    pub fn observables(&self) -> &[String] {
        &self.observables
    }

    pub fn num_observables(&self) -> usize {
        self.observables.len()
    }

    pub fn contexts(&self) -> &[Vec<usize>] {
        &self.contexts
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }

    pub fn context(&self, c: usize) -> Result<&[usize]> {
        self.contexts
            .get(c)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange { index: c, limit: self.contexts.len() })
    }

    pub fn outcome_arity(&self) -> u32 {
        self.outcomes
    }

    pub fn label(&self, observable: usize) -> &str {
        &self.observables[observable]
    }

    pub fn observable_index(&self, label: &str) -> Result<usize> {
        self.observables
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Resolves labels to observable indices, keeping the given order.
    pub fn resolve(&self, labels: &[&str]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.observable_index(l)).collect()
    }

    /// `|`-joined labels of a context, used as the key in model files.
    pub fn context_key(&self, c: usize) -> String {
        self.contexts[c]
            .iter()
            .map(|&o| self.observables[o].as_str())
            .collect::<Vec<_>>()
            .join("|")
    }

    pub fn context_by_key(&self, key: &str) -> Result<usize> {
        (0..self.num_contexts())
            .find(|&c| self.context_key(c) == key)
            .ok_or_else(|| Error::UnknownLabel(key.to_string()))
    }

    pub fn num_sections(&self, c: usize) -> usize {
        1usize << self.contexts[c].len()
    }

    /// Total number of (context, section) pairs.
    pub fn num_local_events(&self) -> usize {
        (0..self.num_contexts()).map(|c| self.num_sections(c)).sum()
    }

    /// The (n, m, 2) Bell shape if this scenario is exactly `bell_scenario(n, m)`.
    pub fn bell_shape(&self) -> Option<(usize, usize)> {
        let x = self.num_observables();
        (1..=x).filter(|n| x.is_multiple_of(*n)).find_map(|n| {
            let m = x / n;
            let candidate = bell_scenario(n, m).ok()?;
            (candidate == *self).then_some((n, m))
        })
    }

    /// Section index within context `c` of the restriction of a packed
    /// global assignment (see [`GlobalAssignment::from_index`]).
    #[inline]
    pub fn section_of_packed(&self, c: usize, packed: u64) -> usize {
        let n = self.observables.len();
        self.contexts[c]
            .iter()
            .fold(0usize, |acc, &o| (acc << 1) | ((packed >> (n - 1 - o)) & 1) as usize)
    }
}

/// The (n, m, 2) Bell scenario: one observable per party-setting pair and one
/// context per choice of a setting for every party.
///
/// Setting 0 of party `i` is `Xi`, setting 1 is `Xip` (primed); further
/// settings are `Xi_s`. Contexts are ordered lexicographically by the setting
/// tuple with party 1 most significant.
pub fn bell_scenario(parties: usize, settings: usize) -> Result<MeasurementScenario> {
    if parties == 0 || settings == 0 {
        return Err(Error::OutOfRange("Bell scenario needs at least one party and setting".into()));
    }
    let total = settings
        .checked_pow(parties as u32)
        .filter(|&t| t <= 1 << 20)
        .ok_or(Error::TooLarge { what: "context count", size: usize::MAX, limit: 1 << 20 })?;
    let observables: Vec<String> = (0..parties)
        .flat_map(|p| (0..settings).map(move |s| setting_label(p, s, settings)))
        .collect();
    let contexts = (0..total)
        .map(|t| {
            let choice = setting_tuple(t, parties, settings);
            choice.iter().enumerate().map(|(p, &s)| p * settings + s).collect()
        })
        .collect();
    MeasurementScenario::from_indices(observables, contexts)
}

fn setting_label(party: usize, setting: usize, settings: usize) -> String {
    match setting {
        0 => format!("X{}", party + 1),
        1 if settings == 2 => format!("X{}p", party + 1),
        s => format!("X{}_{}", party + 1, s),
    }
}

/// Setting tuple of the `index`-th context of a Bell scenario.
pub fn setting_tuple(index: usize, parties: usize, settings: usize) -> Vec<usize> {
    let mut out = vec![0; parties];
    let mut rest = index;
    for p in (0..parties).rev() {
        out[p] = rest % settings;
        rest /= settings;
    }
    out
}

/// Parses `bell-N-M` or `bell-N-M-2`.
pub fn parse_bell_name(name: &str) -> Result<MeasurementScenario> {
    let bad = || Error::Format(format!("unrecognised scenario name `{name}` (expected bell-N-M-2)"));
    let rest = name.strip_prefix("bell-").ok_or_else(bad)?;
    let parts: Vec<usize> = rest
        .split('-')
        .map(|p| p.parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [n, m] | [n, m, 2] => bell_scenario(*n, *m),
        [_, _, o] => Err(Error::Unsupported(format!("outcome arity {o}; only binary outcomes"))),
        _ => Err(bad()),
    }
}

/// Inverse of [`parse_bell_name`].
pub fn bell_name(parties: usize, settings: usize) -> String {
    format!("bell-{parties}-{settings}-2")
}

/// All `2^|c|` sections of context `c` in lexicographic order.
pub fn enumerate_sections(s: &MeasurementScenario, c: usize) -> Result<Vec<Section>> {
    let domain = s.context(c)?.to_vec();
    if domain.len() > MAX_ENUMERATED_OBSERVABLES {
        return Err(Error::TooLarge {
            what: "context",
            size: domain.len(),
            limit: MAX_ENUMERATED_OBSERVABLES,
        });
    }
    Ok((0..1usize << domain.len())
        .map(|i| Section { values: unpack_bits(i as u64, domain.len()), domain: domain.clone() })
        .collect())
}

/// All `2^|X|` global assignments in lexicographic order.
pub fn enumerate_global_assignments(s: &MeasurementScenario) -> Result<Vec<GlobalAssignment>> {
    let n = check_enumerable(s)?;
    Ok((0..1u64 << n).map(|g| GlobalAssignment::from_index(g, n)).collect())
}

/// Errors with `TooLarge` unless `2^|X|` is within the enumeration guard.
pub fn check_enumerable(s: &MeasurementScenario) -> Result<usize> {
    let n = s.num_observables();
    if n > MAX_ENUMERATED_OBSERVABLES {
        return Err(Error::TooLarge {
            what: "observable count",
            size: n,
            limit: MAX_ENUMERATED_OBSERVABLES,
        });
    }
    Ok(n)
}

/// Restricts a section to `target`, copying values in target order.
pub fn restrict(section: &Section, target: &[usize]) -> Result<Section> {
    let mut values = Vec::with_capacity(target.len());
    let mut missing = Vec::new();
    for &t in target {
        match section.domain.iter().position(|&d| d == t) {
            Some(k) => values.push(section.values[k]),
            None => missing.push(t.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::NotASubset(missing));
    }
    Ok(Section { domain: target.to_vec(), values })
}

/// `dim P = prod_i (sum_j (o_ij - 1) + 1) - 1`, one row of outcome counts per
/// party (one entry per setting). Every entry must be at least 1.
pub fn polytope_dimension(outcomes_per_setting: &[Vec<u64>]) -> u64 {
    outcomes_per_setting
        .iter()
        .map(|party| {
            party
                .iter()
                .map(|&o| {
                    assert!(o >= 1, "outcome count must be positive");
                    o - 1
                })
                .sum::<u64>()
                + 1
        })
        .product::<u64>()
        - 1
}

/// `polytope_dimension` for `n` parties each with `m` settings of `o` outcomes.
pub fn bell_polytope_dimension(parties: usize, settings: usize, outcomes: u64) -> u64 {
    polytope_dimension(&vec![vec![outcomes; settings]; parties])
}

pub(crate) fn unpack_bits(index: u64, len: usize) -> Vec<u8> {
    (0..len).map(|k| ((index >> (len - 1 - k)) & 1) as u8).collect()
}

pub(crate) fn pack_bits(values: &[u8]) -> u64 {
    values.iter().fold(0, |acc, &v| (acc << 1) | v as u64)
}

impl Section {
    pub fn new(domain: Vec<usize>, values: Vec<u8>) -> Result<Self> {
        if domain.len() != values.len() {
            return Err(Error::LengthMismatch { expected: domain.len(), got: values.len() });
        }
        if values.iter().any(|&v| v > 1) {
            return Err(Error::OutOfRange("section values must be 0 or 1".into()));
        }
        Ok(Section { domain, values })
    }

    /// Position of this section in lexicographic order.
    pub fn index(&self) -> usize {
        pack_bits(&self.values) as usize
    }

    pub fn parity(&self) -> u8 {
        self.values.iter().fold(0, |a, v| a ^ v)
    }
}

impl GlobalAssignment {
    pub fn from_index(index: u64, observables: usize) -> Self {
        GlobalAssignment { values: unpack_bits(index, observables) }
    }

    pub fn index(&self) -> u64 {
        pack_bits(&self.values)
    }

    pub fn as_section(&self) -> Section {
        Section { domain: (0..self.values.len()).collect(), values: self.values.clone() }
    }

    pub fn restrict(&self, target: &[usize]) -> Result<Section> {
        restrict(&self.as_section(), target)
    }

    pub fn bit_string(&self) -> String {
        self.values.iter().map(|v| char::from(b'0' + v)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    observables: Vec<String>,
    contexts: Vec<Vec<String>>,
    outcomes: u32,
}

impl Serialize for MeasurementScenario {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ScenarioFile {
            observables: self.observables.clone(),
            contexts: self
                .contexts
                .iter()
                .map(|c| c.iter().map(|&o| self.observables[o].clone()).collect())
                .collect(),
            outcomes: self.outcomes,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MeasurementScenario {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = ScenarioFile::deserialize(deserializer)?;
        if file.outcomes != 2 {
            return Err(serde::de::Error::custom("only binary outcomes are supported"));
        }
        MeasurementScenario::new(&file.observables, &file.contexts).map_err(serde::de::Error::custom)
    }
}
