//! Exact rational linear programming: two-phase dense tableau simplex with
//! Bland's rule.
//!
//! The tableau runs over `Ratio<i64>` with checked arithmetic and is rerun
//! over `BigRational` if any intermediate value overflows. Both runs make the
//! same pivots, so results do not depend on which one finished.

use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// `maximize objective . x` subject to `a_eq x = b_eq`, `a_le x <= b_le`,
/// `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub a_eq: Vec<Vec<Rational>>,
    pub b_eq: Vec<Rational>,
    pub a_le: Vec<Vec<Rational>>,
    pub b_le: Vec<Rational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Feasible,
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Objective value, present when `Optimal`.
    pub value: Option<Rational>,
    /// A point satisfying every constraint exactly, present unless `Infeasible`.
    pub solution: Option<Vec<Rational>>,
    /// Number of pivots performed across both phases.
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![Rational::zero(); num_vars],
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            a_le: Vec::new(),
            b_le: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.num_vars();
        if self.a_eq.len() != self.b_eq.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} equality rows, {} right-hand sides",
                self.a_eq.len(),
                self.b_eq.len()
            )));
        }
        if self.a_le.len() != self.b_le.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} inequality rows, {} right-hand sides",
                self.a_le.len(),
                self.b_le.len()
            )));
        }
        if let Some(row) = self.a_eq.iter().chain(&self.a_le).find(|r| r.len() != n) {
            return Err(Error::ShapeMismatch(format!("row of width {} for {n} variables", row.len())));
        }
        Ok(())
    }

    /// Checks `x >= 0` and every constraint with exact arithmetic.
    pub fn is_feasible_point(&self, x: &[Rational]) -> bool {
        let dot = |row: &[Rational]| row.iter().zip(x).map(|(a, v)| a * v).sum::<Rational>();
        x.len() == self.num_vars()
            && x.iter().all(|v| !v.is_negative())
            && self.a_eq.iter().zip(&self.b_eq).all(|(r, b)| dot(r) == *b)
            && self.a_le.iter().zip(&self.b_le).all(|(r, b)| dot(r) <= *b)
    }
}

/// Is there `d >= 0` with `a d = b`? Returns a witness when feasible.
pub fn solve_feasibility(a: &[Vec<Rational>], b: &[Rational]) -> Result<LpOutcome> {
    let width = a.first().map_or(0, Vec::len);
    let lp = LinearProgram {
        objective: vec![Rational::zero(); width],
        a_eq: a.to_vec(),
        b_eq: b.to_vec(),
        a_le: Vec::new(),
        b_le: Vec::new(),
    };
    lp.check_shapes()?;
    let mut out = run(&lp, false)?;
    if out.status == LpStatus::Optimal {
        out.status = LpStatus::Feasible;
        out.value = None;
    }
    Ok(out)
}

/// Exact optimum of `lp`; `Err(Unbounded)` if the objective is unbounded.
pub fn maximize(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.check_shapes()?;
    run(lp, true)
}

fn run(lp: &LinearProgram, optimize: bool) -> Result<LpOutcome> {
    if let Some(small) = to_small(lp) {
        match Simplex::<Ratio<i64>>::solve(&small, optimize) {
            Ok(raw) => return Ok(raw.into_outcome()),
            Err(Halt::Unbounded) => return Err(Error::Unbounded),
            Err(Halt::Overflow) => {}
        }
    }
    let big = to_big(lp);
    match Simplex::<BigRational>::solve(&big, optimize) {
        Ok(raw) => Ok(raw.into_outcome()),
        Err(Halt::Unbounded) => Err(Error::Unbounded),
        Err(Halt::Overflow) => unreachable!("arbitrary precision cannot overflow"),
    }
}

enum Halt {
    Unbounded,
    Overflow,
}

/// A checked operation left the range of the small rational type.
struct Overflow;

impl From<Overflow> for Halt {
    fn from(_: Overflow) -> Self {
        Halt::Overflow
    }
}

type Checked<T> = std::result::Result<T, Overflow>;

/// Arithmetic the tableau needs; `Err(Overflow)` abandons the small-number run.
trait Field: Clone + PartialOrd + Sized {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn add(&self, rhs: &Self) -> Checked<Self>;
    fn sub(&self, rhs: &Self) -> Checked<Self>;
    fn mul(&self, rhs: &Self) -> Checked<Self>;
    fn div(&self, rhs: &Self) -> Checked<Self>;
    fn neg(&self) -> Checked<Self>;
    fn to_rational(&self) -> Rational;
}

impl Field for Ratio<i64> {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn add(&self, rhs: &Self) -> Checked<Self> {
        self.checked_add(rhs).ok_or(Overflow)
    }
    fn sub(&self, rhs: &Self) -> Checked<Self> {
        self.checked_sub(rhs).ok_or(Overflow)
    }
    fn mul(&self, rhs: &Self) -> Checked<Self> {
        self.checked_mul(rhs).ok_or(Overflow)
    }
    fn div(&self, rhs: &Self) -> Checked<Self> {
        self.checked_div(rhs).ok_or(Overflow)
    }
    fn neg(&self) -> Checked<Self> {
        Ok(Ratio::new_raw(self.numer().checked_neg().ok_or(Overflow)?, *self.denom()))
    }
    fn to_rational(&self) -> Rational {
        Rational::new(*self.numer(), *self.denom())
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn add(&self, rhs: &Self) -> Checked<Self> {
        Ok(self + rhs)
    }
    fn sub(&self, rhs: &Self) -> Checked<Self> {
        Ok(self - rhs)
    }
    fn mul(&self, rhs: &Self) -> Checked<Self> {
        Ok(self * rhs)
    }
    fn div(&self, rhs: &Self) -> Checked<Self> {
        Ok(self / rhs)
    }
    fn neg(&self) -> Checked<Self> {
        Ok(-self)
    }
    fn to_rational(&self) -> Rational {
        Rational::from_big(self.clone())
    }
}

struct Problem<F> {
    objective: Vec<F>,
    a_eq: Vec<Vec<F>>,
    b_eq: Vec<F>,
    a_le: Vec<Vec<F>>,
    b_le: Vec<F>,
}

fn convert<F>(lp: &LinearProgram, f: impl Fn(&Rational) -> Option<F>) -> Option<Problem<F>> {
    let vec = |v: &[Rational]| v.iter().map(&f).collect::<Option<Vec<F>>>();
    let mat = |m: &[Vec<Rational>]| m.iter().map(|r| vec(r)).collect::<Option<Vec<_>>>();
    Some(Problem {
        objective: vec(&lp.objective)?,
        a_eq: mat(&lp.a_eq)?,
        b_eq: vec(&lp.b_eq)?,
        a_le: mat(&lp.a_le)?,
        b_le: vec(&lp.b_le)?,
    })
}

fn to_small(lp: &LinearProgram) -> Option<Problem<Ratio<i64>>> {
    convert(lp, |r| r.to_i64_pair().map(|(n, d)| Ratio::new_raw(n, d)))
}

fn to_big(lp: &LinearProgram) -> Problem<BigRational> {
    convert(lp, |r| Some(r.as_big().clone())).expect("big conversion is total")
}

struct Raw<F> {
    optimize: bool,
    feasible: bool,
    value: F,
    solution: Vec<F>,
    pivots: usize,
}

impl<F: Field> Raw<F> {
    fn into_outcome(self) -> LpOutcome {
        if !self.feasible {
            return LpOutcome { status: LpStatus::Infeasible, value: None, solution: None, pivots: self.pivots };
        }
        LpOutcome {
            status: if self.optimize { LpStatus::Optimal } else { LpStatus::Feasible },
            value: self.optimize.then(|| self.value.to_rational()),
            solution: Some(self.solution.iter().map(Field::to_rational).collect()),
            pivots: self.pivots,
        }
    }
}

/// Dense tableau. Columns: original variables, then one slack per `<=` row,
/// then one artificial per row lacking a natural basic column. The last entry
/// of every row is the right-hand side. `cost[j] > 0` marks an improving
/// column; `cost[rhs]` holds minus the current objective value.
struct Simplex<F> {
    rows: Vec<Vec<F>>,
    cost: Vec<F>,
    basis: Vec<usize>,
    num_vars: usize,
    first_artificial: usize,
    pivots: usize,
}

impl<F: Field> Simplex<F> {
    fn solve(p: &Problem<F>, optimize: bool) -> std::result::Result<Raw<F>, Halt> {
        let n = p.objective.len();
        let n_le = p.a_le.len();
        let n_rows = p.a_eq.len() + n_le;

        // Normalize to nonnegative right-hand sides; remember which rows need
        // an artificial variable.
        let mut needs_artificial = Vec::with_capacity(n_rows);
        let mut raw_rows: Vec<(Vec<F>, F, Option<F>)> = Vec::with_capacity(n_rows);
        for (row, b) in p.a_eq.iter().zip(&p.b_eq) {
            let (row, b) = nonneg_rhs(row, b)?;
            raw_rows.push((row, b, None));
            needs_artificial.push(true);
        }
        for (row, b) in p.a_le.iter().zip(&p.b_le) {
            if b.is_positive() || b.is_zero() {
                raw_rows.push((row.clone(), b.clone(), Some(F::one())));
                needs_artificial.push(false);
            } else {
                let (row, b) = nonneg_rhs(row, b)?;
                raw_rows.push((row, b, Some(F::one().neg()?)));
                needs_artificial.push(true);
            }
        }

        let n_art = needs_artificial.iter().filter(|x| **x).count();
        let first_artificial = n + n_le;
        let width = first_artificial + n_art;
        let mut rows = Vec::with_capacity(n_rows);
        let mut basis = Vec::with_capacity(n_rows);
        let mut slack = 0;
        let mut art = 0;
        for (i, (coeffs, b, slack_coef)) in raw_rows.into_iter().enumerate() {
            let mut row = vec![F::zero(); width + 1];
            row[..n].clone_from_slice(&coeffs);
            if let Some(sc) = slack_coef {
                row[n + slack] = sc;
                if !needs_artificial[i] {
                    basis.push(n + slack);
                }
                slack += 1;
            }
            if needs_artificial[i] {
                row[first_artificial + art] = F::one();
                basis.push(first_artificial + art);
                art += 1;
            }
            row[width] = b;
            rows.push(row);
        }

        let mut t = Simplex { rows, cost: vec![F::zero(); width + 1], basis, num_vars: n, first_artificial, pivots: 0 };

        // Phase one: maximize minus the sum of artificials.
        if n_art > 0 {
            let mut cost = vec![F::zero(); width + 1];
            for (row, &bv) in t.rows.iter().zip(&t.basis) {
                if bv >= first_artificial {
                    for j in 0..first_artificial {
                        cost[j] = cost[j].add(&row[j])?;
                    }
                    cost[width] = cost[width].add(&row[width])?;
                }
            }
            t.cost = cost;
            t.iterate(width)?;
            if !t.cost[width].is_zero() {
                return Ok(Raw { optimize, feasible: false, value: F::zero(), solution: Vec::new(), pivots: t.pivots });
            }
            t.drive_out_artificials()?;
        }

        if optimize {
            t.set_objective(&p.objective)?;
            t.iterate(first_artificial)?;
        }

        let mut solution = vec![F::zero(); n];
        for (row, &bv) in t.rows.iter().zip(&t.basis) {
            if bv < n {
                solution[bv] = row[width].clone();
            }
        }
        let value = t.cost[width].neg()?;
        Ok(Raw { optimize, feasible: true, value, solution, pivots: t.pivots })
    }

    fn rhs(&self) -> usize {
        self.cost.len() - 1
    }

    /// Pivots with Bland's rule over columns `< allowed` until optimal.
    fn iterate(&mut self, allowed: usize) -> std::result::Result<(), Halt> {
        let rhs = self.rhs();
        loop {
            let Some(enter) = (0..allowed).find(|&j| self.cost[j].is_positive()) else {
                return Ok(());
            };
            let mut leave: Option<(usize, F)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[enter].is_positive() {
                    continue;
                }
                let ratio = row[rhs].div(&row[enter])?;
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let (leave, _) = leave.ok_or(Halt::Unbounded)?;
            self.pivot(leave, enter)?;
        }
    }

    fn pivot(&mut self, r: usize, c: usize) -> std::result::Result<(), Halt> {
        self.pivots += 1;
        let pivot = self.rows[r][c].clone();
        let nonzero: Vec<usize> = (0..self.rows[r].len()).filter(|&j| !self.rows[r][j].is_zero()).collect();
        for &j in &nonzero {
            self.rows[r][j] = self.rows[r][j].div(&pivot)?;
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let eliminate = |target: &mut Vec<F>| -> std::result::Result<(), Halt> {
            let factor = target[c].clone();
            if factor.is_zero() {
                return Ok(());
            }
            for &j in &nonzero {
                target[j] = target[j].sub(&factor.mul(&pivot_row[j])?)?;
            }
            Ok(())
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row)?;
            }
        }
        eliminate(&mut self.cost)?;
        self.rows[r] = pivot_row;
        self.basis[r] = c;
        Ok(())
    }

    /// After a zero-value phase one, pivots artificials out of the basis or
    /// drops rows that turn out to be redundant.
    fn drive_out_artificials(&mut self) -> std::result::Result<(), Halt> {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                match (0..self.first_artificial).find(|&j| !self.rows[i][j].is_zero()) {
                    Some(j) => self.pivot(i, j)?,
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        Ok(())
    }

    fn set_objective(&mut self, objective: &[F]) -> std::result::Result<(), Halt> {
        let rhs = self.rhs();
        let coef = |j: usize| if j < self.num_vars { objective[j].clone() } else { F::zero() };
        let mut cost: Vec<F> = (0..rhs).map(coef).collect();
        cost.push(F::zero());
        for (row, &bv) in self.rows.iter().zip(&self.basis) {
            let cb = coef(bv);
            if cb.is_zero() {
                continue;
            }
            for j in 0..=rhs {
                if !row[j].is_zero() {
                    cost[j] = cost[j].sub(&cb.mul(&row[j])?)?;
                }
            }
        }
        self.cost = cost;
        Ok(())
    }
}

fn nonneg_rhs<F: Field>(row: &[F], b: &F) -> std::result::Result<(Vec<F>, F), Halt> {
    if b.is_positive() || b.is_zero() {
        Ok((row.to_vec(), b.clone()))
    } else {
        let row = row.iter().map(Field::neg).collect::<Checked<Vec<F>>>()?;
        Ok((row, b.neg()?))
    }
}


#[cfg(test)]
pub(crate) fn maximize_big(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.check_shapes()?;
    match Simplex::<BigRational>::solve(&to_big(lp), true) {
        Ok(raw) => Ok(raw.into_outcome()),
        Err(_) => Err(Error::Unbounded),
    }
}
