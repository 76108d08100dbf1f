//! Certified randomness from marginals and a parity-test secret-sharing
//! simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::construct::{parity_consistent, parity_to_possibilistic, ParitySystem};
use crate::empirical::{marginal, EmpiricalModel};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::scenario::{bell_name, setting_tuple};

/// Highest probability of any joint outcome of `u` within context `c`.
pub fn guessing_probability(m: &EmpiricalModel, c: usize, u: &[usize]) -> Result<Rational> {
    let marg = marginal(m, c, u)?;
    Ok(marg.into_iter().max().expect("a marginal has at least one entry"))
}

/// Rounds to 12 significant digits.
fn twelve_digits(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub guess_probability: Rational,
    /// `-log2(guess_probability)`, rounded to 12 significant digits.
    pub min_entropy_bits: f64,
    pub subset_size: usize,
}

fn neg_log2(p: &Rational) -> f64 {
    // exact for powers of two, which is every maximal-marginal case
    let (n, d) = (p.numer(), p.denom());
    if n.magnitude().bits() == 1 && d.magnitude().count_ones() == 1 {
        return d.trailing_zeros().unwrap_or(0) as f64;
    }
    let v = -p.to_f64().log2();
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

pub fn min_entropy(m: &EmpiricalModel, c: usize, u: &[usize]) -> Result<EntropyReport> {
    let guess_probability = guessing_probability(m, c, u)?;
    Ok(EntropyReport {
        min_entropy_bits: twelve_digits(neg_log2(&guess_probability)),
        guess_probability,
        subset_size: u.len(),
    })
}

/// True iff every proper nonempty subset of every context, of size `k`, has
/// min-entropy exactly `k` bits.
pub fn certify_amcc_entropy(m: &EmpiricalModel) -> bool {
    m.scenario().contexts().iter().enumerate().all(|(c, ctx)| {
        (1u64..(1 << ctx.len()) - 1).all(|mask| {
            let u: Vec<usize> = (0..ctx.len()).filter(|p| mask >> p & 1 == 1).map(|p| ctx[p]).collect();
            guessing_probability(m, c, &u).is_ok_and(|g| g == Rational::inv_pow2(u.len() as u32))
        })
    })
}

// ---------------------------------------------------------------------------
// Secret sharing

/// Where each round's outcomes come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Uniform over the parity model's support.
    Honest,
    /// Honest sample with one uniformly chosen outcome bit flipped.
    BitFlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundKind {
    Test,
    Secret,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Aborted,
}

/// One protocol round. The broadcast phase is the context index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShareRound {
    pub round: usize,
    pub kind: RoundKind,
    pub context: usize,
    /// Measurement-choice bit per party (Bell scenarios).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<u8>>,
    /// One outcome per party; the dealer holds the last.
    pub outcomes: Vec<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dealer_key: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ciphertext: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstructed: Option<u8>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareHeader {
    pub rng: &'static str,
    pub seed: u64,
    pub scenario: Option<String>,
    pub parities: String,
    pub rounds: usize,
    pub test_fraction: f64,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShareTranscript {
    pub header: ShareHeader,
    pub rounds: Vec<ShareRound>,
}

impl ShareTranscript {
    /// Header line followed by one line per round.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.rounds {
            out.push_str(&serde_json::to_string(r).expect("round serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShareOutcome {
    pub transcript: ShareTranscript,
    /// Secret bit used in each secret round, in order.
    pub sent: Vec<u8>,
    /// Bit the players recovered in each secret round.
    pub recovered: Vec<u8>,
    pub test_rounds: usize,
}

impl ShareOutcome {
    pub fn all_reconstructed(&self) -> bool {
        self.sent == self.recovered
    }
}

/// Simulates `rounds` rounds of the parity-test protocol: each round picks a
/// context and a supported section uniformly; test rounds check the XOR
/// against the context's parity, secret rounds pad the next secret bit
/// (cycling through `secret_bits`) with the dealer's outcome.
pub fn secret_share_simulate(
    ps: &ParitySystem,
    secret_bits: &[u8],
    rounds: usize,
    test_fraction: f64,
    seed: u64,
    source: Source,
) -> Result<ShareOutcome> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::OutOfRange(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    if secret_bits.is_empty() || secret_bits.iter().any(|&b| b > 1) {
        return Err(Error::OutOfRange("secret must be a nonempty bit list".into()));
    }
    if parity_consistent(ps)?.is_consistent() {
        return Err(Error::ConsistentResource);
    }
    let s = ps.scenario();
    let bell = s.bell_shape();
    let model = parity_to_possibilistic(ps);
    let supported: Vec<Vec<usize>> = model.supports().iter().map(|sup| sup.iter().collect()).collect();
    let header = ShareHeader {
        rng: "chacha8",
        seed,
        scenario: bell.map(|(n, m)| bell_name(n, m)),
        parities: ps.parities().iter().map(|b| char::from(b'0' + b)).collect(),
        rounds,
        test_fraction,
        source,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transcript = ShareTranscript { header, rounds: Vec::with_capacity(rounds) };
    let (mut sent, mut recovered, mut test_rounds) = (Vec::new(), Vec::new(), 0);

    for round in 0..rounds {
        let c = rng.random_range(0..s.num_contexts());
        let width = s.contexts()[c].len();
        let section = supported[c][rng.random_range(0..supported[c].len())];
        let mut outcomes: Vec<u8> = (0..width).map(|k| ((section >> (width - 1 - k)) & 1) as u8).collect();
        if source == Source::BitFlip {
            let k = rng.random_range(0..width);
            outcomes[k] ^= 1;
        }
        let inputs = bell.map(|(n, m)| setting_tuple(c, n, m).into_iter().map(|v| v as u8).collect());
        let parity = ps.parities()[c];
        let (dealer, players) = outcomes.split_last().expect("contexts are nonempty");
        let players_xor = players.iter().fold(0, |a, b| a ^ b);

        if rng.random_bool(test_fraction) {
            test_rounds += 1;
            let ok = players_xor ^ dealer == parity;
            transcript.rounds.push(ShareRound {
                round,
                kind: RoundKind::Test,
                context: c,
                inputs,
                outcomes,
                dealer_key: None,
                ciphertext: None,
                reconstructed: None,
                verdict: if ok { Verdict::Accepted } else { Verdict::Aborted },
            });
            if !ok {
                return Err(Error::Aborted { round, transcript: transcript.to_jsonl() });
            }
        } else {
            let secret = secret_bits[sent.len() % secret_bits.len()];
            let key = *dealer;
            let ciphertext = key ^ secret;
            let bit = ciphertext ^ parity ^ players_xor;
            sent.push(secret);
            recovered.push(bit);
            transcript.rounds.push(ShareRound {
                round,
                kind: RoundKind::Secret,
                context: c,
                inputs,
                outcomes,
                dealer_key: Some(key),
                ciphertext: Some(ciphertext),
                reconstructed: Some(bit),
                verdict: Verdict::Accepted,
            });
        }
    }
    Ok(ShareOutcome { transcript, sent, recovered, test_rounds })
}
