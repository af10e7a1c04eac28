//! Exact checks of the variation condition and of membership in the
//! extreme classes, plus a small LP test for membership in their convex
//! hull.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::density::{mix_laws, LocationLaw, PiecewiseDensity};
use crate::error::{Error, Result};
use crate::lp::{big, feasible_point, small, Big};
use crate::rational::{self, ceil_int, common_denominator, int, is_integer, min_r, one, zero, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Member,
    NonMember,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `TV_(t1,t2)(f) ≤ f(t1) + f(t2)` for all `t1 < t2`.
    Tv,
    /// The same inequality along `(t, T − t)` as `t ↓ 0`.
    TvPrime,
    IntegerValued,
    /// `f ≥ 1` on `(0, T)`.
    LowerBoundOne,
    /// `f − 1` satisfies the variation condition.
    ShiftedTv,
    NoInfinityAtom,
    NoHorizonAtom,
    Decreasing,
    StepDensity,
    /// Necessary integer-envelope bound for the convex hull.
    HullEnvelope,
}

/// The extreme classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LawClass {
    /// Ergodic laws.
    #[serde(rename = "ET")]
    Extreme,
    /// Ergodic laws of invariant locators.
    #[serde(rename = "E1T")]
    Invariant,
    /// Ergodic laws of first-time locators.
    #[serde(rename = "EMT")]
    FirstTime,
}

impl fmt::Display for LawClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LawClass::Extreme => "ET",
            LawClass::Invariant => "E1T",
            LawClass::FirstTime => "EMT",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// A pair `t1 < t2` at which the variation inequality fails.
    Interval {
        #[serde(with = "rational::as_str")]
        t1: Rational,
        #[serde(with = "rational::as_str")]
        t2: Rational,
        #[serde(with = "rational::as_str")]
        variation: Rational,
        #[serde(with = "rational::as_str")]
        endpoint_sum: Rational,
    },
    Cell { index: usize },
    /// An atom that must vanish.
    Atom {
        at: String,
        #[serde(with = "rational::as_str")]
        mass: Rational,
    },
    /// Some candidate must equal `level` on `(from, to)`, so its density
    /// integrates to at least `integral > 1`.
    Envelope {
        level: i128,
        #[serde(with = "rational::as_str")]
        from: Rational,
        #[serde(with = "rational::as_str")]
        to: Rational,
        #[serde(with = "rational::as_str")]
        integral: Rational,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MembershipReport {
    pub verdict: Verdict,
    pub violated_conditions: Vec<Condition>,
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl MembershipReport {
    pub fn member() -> Self {
        Self {
            verdict: Verdict::Member,
            violated_conditions: Vec::new(),
            witness: None,
            diagnostic: None,
        }
    }

    fn unknown(diagnostic: String) -> Self {
        Self {
            verdict: Verdict::Unknown,
            violated_conditions: Vec::new(),
            witness: None,
            diagnostic: Some(diagnostic),
        }
    }

    fn violate(&mut self, condition: Condition, witness: Witness) {
        self.verdict = Verdict::NonMember;
        self.violated_conditions.push(condition);
        if self.witness.is_none() {
            self.witness = Some(witness);
        }
    }

    fn absorb(&mut self, other: MembershipReport, as_condition: Condition) {
        if other.verdict == Verdict::NonMember {
            self.violate(as_condition, other.witness.expect("non-member carries a witness"));
        }
    }

    pub fn is_member(&self) -> bool {
        self.verdict == Verdict::Member
    }
}

/// `φ(i, j) = f(x_i) + f(x_{j+1}−) − TV over (x_i, x_{j+1})`, the infimum of
/// `f(t1) + f(t2) − TV_(t1,t2)` over `t1` in cell `i` and `t2` in cell `j`.
fn slack_matrix(f: &PiecewiseDensity) -> Vec<Vec<Rational>> {
    let k = f.cells();
    let mut phi = vec![Vec::new(); k];
    for i in 0..k {
        let mut tv = zero();
        for j in i..k {
            if j > i {
                tv += f.jump(j).abs();
            }
            tv += f.segments()[j].slope.abs() * f.cell_length(j);
            phi[i].push(f.start_value(i) + f.end_value(j) - tv);
        }
    }
    phi
}

/// A concrete `(t1, t2)` realizing a negative slack for cells `i ≤ j`.
fn interval_witness(f: &PiecewiseDensity, i: usize, j: usize, phi: Rational) -> Witness {
    let (lo_i, hi_i) = f.cell_bounds(i);
    let (lo_j, hi_j) = f.cell_bounds(j);
    let (t1, t2) = if f.is_step() {
        (lo_i + (hi_i - lo_i) * Rational::new(3, 4), lo_j + (hi_j - lo_j) / int(4))
    } else {
        // Moving t1 right by δ costs (q_i + |q_i|)δ, moving t2 left costs
        // (|q_j| − q_j)δ; both are linear, so half the deficit is safe.
        let qi = f.segments()[i].slope;
        let qj = f.segments()[j].slope;
        let rate = if i == 0 { qi + qi.abs() } else { zero() } + (qj.abs() - qj);
        let mut delta = min_r(f.cell_length(i), f.cell_length(j)) / int(3);
        if rate.is_positive() {
            delta = min_r(delta, -phi / (int(2) * rate));
        }
        (if i == 0 { delta } else { lo_i }, hi_j - delta)
    };
    let variation = f.variation_between(t1, t2);
    let endpoint_sum = f.value(t1) + f.value(t2);
    debug_assert!(variation > endpoint_sum);
    Witness::Interval {
        t1,
        t2,
        variation,
        endpoint_sum,
    }
}

fn tv_report(f: &PiecewiseDensity, condition: Condition, pairs: &[(usize, usize)], phi: &[Vec<Rational>]) -> MembershipReport {
    let mut report = MembershipReport::member();
    let worst = pairs
        .iter()
        .map(|&(i, j)| (phi[i][j - i], i, j))
        .filter(|(v, _, _)| v.is_negative())
        .min_by(|a, b| a.0.cmp(&b.0));
    if let Some((v, i, j)) = worst {
        report.violate(condition, interval_witness(f, i, j, v));
    }
    report
}

/// Decides the variation condition exactly in `O(k²)`.
pub fn check_tv(f: &PiecewiseDensity) -> MembershipReport {
    let k = f.cells();
    let phi = slack_matrix(f);
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    tv_report(f, Condition::Tv, &pairs, &phi)
}

/// Decides the boundary form of the variation condition: the inequality on
/// `(t, T − t)` for all small `t`.
pub fn check_tv_prime(f: &PiecewiseDensity) -> MembershipReport {
    let phi = slack_matrix(f);
    tv_report(f, Condition::TvPrime, &[(0, f.cells() - 1)], &phi)
}

/// Membership in one of the extreme classes.
pub fn check_class(law: &LocationLaw, class: LawClass) -> MembershipReport {
    let f = law.density();
    let mut report = MembershipReport::member();

    if let Some(cell) = f.first_non_integer_cell() {
        report.violate(Condition::IntegerValued, Witness::Cell { index: cell });
    }
    report.absorb(check_tv(f), Condition::Tv);

    let needs_lower_bound = match class {
        LawClass::Invariant => true,
        _ => conditional_lower_bound_applies(law),
    };
    if needs_lower_bound {
        if let Some(cell) = (0..f.cells()).find(|&c| f.start_value(c) < one() || f.end_value(c) < one()) {
            report.violate(Condition::LowerBoundOne, Witness::Cell { index: cell });
        } else if law.atom_infinity().is_positive() {
            report.absorb(check_tv(&f.offset(-one())), Condition::ShiftedTv);
        }
    }

    match class {
        LawClass::Extreme => {}
        LawClass::Invariant => {
            if law.atom_infinity().is_positive() {
                report.violate(
                    Condition::NoInfinityAtom,
                    Witness::Atom {
                        at: "inf".into(),
                        mass: law.atom_infinity(),
                    },
                );
            }
        }
        LawClass::FirstTime => {
            if !f.is_decreasing() {
                let cell = (0..f.cells())
                    .find(|&c| {
                        f.segments()[c].slope.is_positive() || (c > 0 && f.jump(c).is_positive())
                    })
                    .unwrap_or(0);
                report.violate(Condition::Decreasing, Witness::Cell { index: cell });
            }
            if law.atom_horizon().is_positive() {
                report.violate(
                    Condition::NoHorizonAtom,
                    Witness::Atom {
                        at: "T".into(),
                        mass: law.atom_horizon(),
                    },
                );
            }
        }
    }
    report
}

/// `F[0,T] > 0` and no `t ∈ (0,T)` carries all the mass on `[0,t]` or
/// `[t,T]`.
fn conditional_lower_bound_applies(law: &LocationLaw) -> bool {
    let f = law.density();
    let last = f.cells() - 1;
    let vanishes = |c: usize| f.segments()[c].slope.is_zero() && f.start_value(c).is_zero();
    let mass_left = law.atom_horizon().is_zero() && law.atom_infinity().is_zero() && vanishes(last);
    let mass_right = law.atom_zero().is_zero() && law.atom_infinity().is_zero() && vanishes(0);
    law.atom_infinity() < one() && !mass_left && !mass_right
}

/// A decomposition of a law into extreme laws with positive weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HullCertificate {
    pub components: Vec<(LocationLaw, Rational)>,
}

impl HullCertificate {
    /// Re-mixes the components and compares with `law` exactly.
    pub fn reproduces(&self, law: &LocationLaw) -> bool {
        let (laws, weights): (Vec<_>, Vec<_>) = self.components.iter().cloned().unzip();
        mix_laws(&laws, &weights).is_ok_and(|m| m.same_law(law))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HullOutcome {
    Certificate(HullCertificate),
    Report(MembershipReport),
}

impl HullOutcome {
    pub fn verdict(&self) -> Verdict {
        match self {
            HullOutcome::Certificate(_) => Verdict::Member,
            HullOutcome::Report(r) => r.verdict,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HullOptions {
    /// Largest candidate density value; `None` means `⌈sup f⌉ + 1`.
    pub max_level: Option<i128>,
    /// Maximum number of candidate extreme laws.
    pub cap: usize,
    pub class: LawClass,
}

impl Default for HullOptions {
    fn default() -> Self {
        Self {
            max_level: None,
            cap: 20_000,
            class: LawClass::Extreme,
        }
    }
}

/// Tests whether `law` is a finite mixture of extreme laws whose densities
/// live on the input's breakpoints. Certifies membership, refutes it only
/// through the integer-envelope argument, and reports `unknown` otherwise.
pub fn hull_membership_lp(law: &LocationLaw, options: HullOptions) -> HullOutcome {
    if check_class(law, options.class).is_member() {
        return HullOutcome::Certificate(HullCertificate {
            components: vec![(law.clone(), one())],
        });
    }
    let tv = check_tv(law.density());
    if !tv.is_member() {
        return HullOutcome::Report(tv);
    }
    let f = law.density().simplified();
    if !f.is_step() {
        let mut r = MembershipReport::unknown("hull test needs a step density".into());
        r.violated_conditions.push(Condition::StepDensity);
        return HullOutcome::Report(r);
    }
    if let Some(witness) = envelope_witness(&f) {
        let mut r = MembershipReport::member();
        r.violate(Condition::HullEnvelope, witness);
        return HullOutcome::Report(r);
    }
    let candidates = match enumerate_candidates(law, &f, &options) {
        Ok(c) => c,
        Err(e) => return HullOutcome::Report(MembershipReport::unknown(e.to_string())),
    };
    if candidates.is_empty() {
        return HullOutcome::Report(MembershipReport::unknown(
            "no candidate extreme law on the input breakpoints".into(),
        ));
    }
    match solve_mixture(law, &f, &candidates) {
        Some(cert) => HullOutcome::Certificate(cert),
        None => HullOutcome::Report(MembershipReport::unknown(format!(
            "no mixture of the {} enumerated candidates matches; the family may be too small",
            candidates.len()
        ))),
    }
}

/// When `f` vanishes on a right (left) end interval, every component is
/// decreasing (increasing) and integer valued, so a cell with value `v`
/// forces a component `≥ ⌈v⌉` all the way to the boundary.
fn envelope_witness(f: &PiecewiseDensity) -> Option<Witness> {
    let k = f.cells();
    let value = |c: usize| f.start_value(c);
    let horizon = f.horizon();
    if k >= 2 && value(k - 1).is_zero() {
        for c in 0..k - 1 {
            let v = value(c);
            if v.is_positive() {
                let level = ceil_int(&v);
                let to = f.cell_bounds(c).1;
                let integral = int(level) * to;
                if integral > one() {
                    return Some(Witness::Envelope {
                        level,
                        from: zero(),
                        to,
                        integral,
                    });
                }
            }
        }
    }
    if k >= 2 && value(0).is_zero() {
        for c in 1..k {
            let v = value(c);
            if v.is_positive() {
                let level = ceil_int(&v);
                let from = f.cell_bounds(c).0;
                let integral = int(level) * (horizon - from);
                if integral > one() {
                    return Some(Witness::Envelope {
                        level,
                        from,
                        to: horizon,
                        integral,
                    });
                }
            }
        }
    }
    None
}

fn enumerate_candidates(
    law: &LocationLaw,
    f: &PiecewiseDensity,
    options: &HullOptions,
) -> Result<Vec<LocationLaw>> {
    let k = f.cells();
    let max_level = options
        .max_level
        .unwrap_or_else(|| ceil_int(&f.sup()) + 1)
        .max(0);
    let lengths: Vec<Rational> = (0..k).map(|c| f.cell_length(c)).collect();
    let forced_zero: Vec<bool> = (0..k).map(|c| f.start_value(c).is_zero()).collect();
    let atoms = [law.atom_zero(), law.atom_horizon(), law.atom_infinity()];
    let lattice = common_denominator(atoms.iter().chain(f.breakpoints()));
    let step = Rational::new(1, lattice);

    let mut out = Vec::new();
    let mut values = vec![0i128; k];
    let cap_error = || Error::SizeCap(format!("more than {} candidate extreme laws", options.cap));

    // Odometer over cell values, pruning on mass.
    loop {
        let mass: Rational = values.iter().zip(&lengths).map(|(v, l)| int(*v) * l).sum();
        if mass <= one() {
            let density = PiecewiseDensity::step(
                f.breakpoints().to_vec(),
                values.iter().map(|v| int(*v)).collect(),
            )?;
            let rest = one() - mass;
            let units = (rest / step).to_integer();
            if is_integer(&(rest / step)) {
                for n0 in 0..=units {
                    if n0 > 0 && atoms[0].is_zero() {
                        break;
                    }
                    for n_inf in 0..=units - n0 {
                        if n_inf > 0 && atoms[2].is_zero() {
                            break;
                        }
                        let n_t = units - n0 - n_inf;
                        if n_t > 0 && atoms[1].is_zero() {
                            continue;
                        }
                        let cand = LocationLaw::new(
                            density.clone(),
                            step * int(n0),
                            step * int(n_t),
                            step * int(n_inf),
                        )?;
                        if check_class(&cand, options.class).is_member() {
                            if out.len() == options.cap {
                                return Err(cap_error());
                            }
                            out.push(cand);
                        }
                    }
                }
            }
        }
        // Next value vector; cells where f vanishes stay at zero.
        let mut c = 0;
        loop {
            if c == k {
                return Ok(out);
            }
            if !forced_zero[c] && values[c] < max_level {
                values[c] += 1;
                break;
            }
            values[c] = 0;
            c += 1;
        }
    }
}

fn solve_mixture(
    law: &LocationLaw,
    f: &PiecewiseDensity,
    candidates: &[LocationLaw],
) -> Option<HullCertificate> {
    let k = f.cells();
    let mut rows: Vec<Vec<Big>> = Vec::with_capacity(k + 4);
    let mut rhs: Vec<Big> = Vec::with_capacity(k + 4);
    for c in 0..k {
        let x = f.cell_bounds(c).0;
        rows.push(candidates.iter().map(|e| big(&e.density().value(x))).collect());
        rhs.push(big(&f.value(x)));
    }
    let atom_rows: [fn(&LocationLaw) -> Rational; 3] = [
        LocationLaw::atom_zero,
        LocationLaw::atom_horizon,
        LocationLaw::atom_infinity,
    ];
    for pick in atom_rows {
        rows.push(candidates.iter().map(|e| big(&pick(e))).collect());
        rhs.push(big(&pick(law)));
    }
    rows.push(candidates.iter().map(|_| big(&one())).collect());
    rhs.push(big(&one()));

    let weights = feasible_point(&rows, &rhs)?;
    let mut components = Vec::new();
    for (cand, w) in candidates.iter().zip(&weights) {
        if w.is_positive() {
            components.push((cand.clone(), small(w)?));
        }
    }
    let cert = HullCertificate { components };
    cert.reproduces(law).then_some(cert)
}
