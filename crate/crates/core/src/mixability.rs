//! Couplings of the layer distributions of a decreasing density.
//!
//! For a decreasing `f` with `N = ⌈f(0+)⌉`, layer `i` has distribution
//! function `F_i(x) = min{(i − f(x))₊, 1}` for `x > 0`, supported on
//! `[f⁻¹(i), f⁻¹(i−1)]`. A coupling of the layers whose sum never exceeds
//! 1 shows that `f` is a mixture of first-time step densities. The
//! corollaries below give closed-form sufficient conditions; the
//! rearrangement search looks for a discretized coupling directly.

use itertools::Itertools;
use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::density::{Affine, PiecewiseDensity};
use crate::error::{Error, Result};
use crate::rational::{self, ceil_int, int, max_r, min_r, one, zero, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixProblem {
    density: PiecewiseDensity,
    count: usize,
    means: Vec<Rational>,
    supports: Vec<(Rational, Rational)>,
}

/// Layer distributions of a decreasing density.
pub fn component_distributions(f: &PiecewiseDensity) -> Result<MixProblem> {
    if !f.is_decreasing() {
        return Err(Error::NotDecreasing);
    }
    let top = f.right_limit_at_zero();
    if top.is_negative() {
        return Err(Error::NegativeValue { cell: 0 });
    }
    let count = usize::try_from(ceil_int(&top)).map_err(|_| Error::OutOfRange(format!("f(0+) = {top}")))?;
    let inverse: Vec<Rational> = (0..=count)
        .map(|i| f.generalized_inverse(int(i as i128)))
        .collect::<Result<_>>()?;
    let supports = (1..=count).map(|i| (inverse[i], inverse[i - 1])).collect();
    let means = (1..=count).map(|i| layer_mean(f, i)).collect();
    Ok(MixProblem {
        density: f.clone(),
        count,
        means,
        supports,
    })
}

/// `∫ clamp(f − (i − 1), 0, 1)`, the mean of layer `i`.
fn layer_mean(f: &PiecewiseDensity, i: usize) -> Rational {
    let base = int(i as i128 - 1);
    let mut total = zero();
    for (cell, seg) in f.segments().iter().enumerate() {
        let (lo, hi) = f.cell_bounds(cell);
        let g = Affine::new(seg.intercept - base, seg.slope);
        let mut cuts = vec![lo, hi];
        if !g.slope.is_zero() {
            for level in [zero(), one()] {
                let t = (level - g.intercept) / g.slope;
                if t > lo && t < hi {
                    cuts.push(t);
                }
            }
        }
        cuts.sort();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = g.at((a + b) / int(2));
            total += if mid <= zero() {
                zero()
            } else if mid >= one() {
                b - a
            } else {
                g.integral(a, b)
            };
        }
    }
    total
}

impl MixProblem {
    pub fn density(&self) -> &PiecewiseDensity {
        &self.density
    }

    /// Number of layers `N`.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn means(&self) -> &[Rational] {
        &self.means
    }

    /// `[f⁻¹(i), f⁻¹(i−1)]` for `i = 1..=N`.
    pub fn supports(&self) -> &[(Rational, Rational)] {
        &self.supports
    }

    /// `f⁻¹(i)` for `i = 0..=N`.
    pub fn inverse_levels(&self) -> Vec<Rational> {
        let mut out: Vec<Rational> = self.supports.iter().map(|s| s.1).collect();
        out.push(self.supports.last().map_or_else(|| self.density.generalized_inverse(zero()).unwrap(), |s| s.0));
        out
    }

    /// `F_i(x)` for `i = 1..=N`.
    pub fn cdf(&self, i: usize, x: Rational) -> Rational {
        assert!((1..=self.count).contains(&i), "layer {i} out of range");
        if !x.is_positive() {
            return zero();
        }
        let fx = if x < self.density.horizon() { self.density.value(x) } else { zero() };
        min_r(one(), max_r(zero(), int(i as i128) - fx))
    }

    /// `inf{x > 0 : F_i(x) ≥ p}` for `p ∈ (0, 1]`.
    pub fn quantile(&self, i: usize, p: Rational) -> Rational {
        assert!((1..=self.count).contains(&i), "layer {i} out of range");
        let y = int(i as i128) - p;
        let f = &self.density;
        for (cell, seg) in f.segments().iter().enumerate() {
            let (lo, hi) = f.cell_bounds(cell);
            if seg.at(lo) <= y {
                return lo;
            }
            if seg.at(hi) <= y {
                return (y - seg.intercept) / seg.slope;
            }
        }
        f.horizon()
    }

    /// Midpoint quantiles `Q_i((2r − 1)/(2n))`, `r = 1..=n`, ascending.
    pub fn discretize(&self, i: usize, n: usize) -> Vec<Rational> {
        (1..=n)
            .map(|r| self.quantile(i, Rational::new(2 * r as i128 - 1, 2 * n as i128)))
            .collect()
    }

    /// `n⁻¹ Σ_i (f⁻¹(i−1) − f⁻¹(i))`, the allowance for discretization.
    pub fn slack(&self, n: usize) -> Rational {
        self.supports.iter().map(|(lo, hi)| hi - lo).sum::<Rational>() / int(n as i128)
    }
}

/// `n` equally likely joint realizations of the layers, one row each.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Coupling {
    pub n: usize,
    #[serde(serialize_with = "matrix_ser")]
    pub matrix: Vec<Vec<Rational>>,
    #[serde(with = "rational::as_str")]
    pub max_row_sum: Rational,
}

fn matrix_ser<S: serde::Serializer>(m: &[Vec<Rational>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.len()))?;
    for row in m {
        seq.serialize_element(&row.iter().map(rational::format_rational).collect::<Vec<_>>())?;
    }
    seq.end()
}

impl Coupling {
    fn from_columns(columns: &[Vec<Rational>], n: usize) -> Self {
        let matrix: Vec<Vec<Rational>> = (0..n).map(|r| columns.iter().map(|c| c[r]).collect()).collect();
        let max_row_sum = row_max(&matrix);
        Self { n, matrix, max_row_sum }
    }

    pub fn row_sums(&self) -> Vec<Rational> {
        self.matrix.iter().map(|row| row.iter().sum()).collect()
    }

    /// Columns are the discretized layers and the stored maximum is exact.
    pub fn verify(&self, problem: &MixProblem) -> bool {
        if self.matrix.len() != self.n || self.matrix.iter().any(|r| r.len() != problem.count) {
            return false;
        }
        let columns_ok = (0..problem.count).all(|i| {
            let mut col: Vec<Rational> = self.matrix.iter().map(|r| r[i]).collect();
            col.sort();
            col == problem.discretize(i + 1, self.n)
        });
        columns_ok && row_max(&self.matrix) == self.max_row_sum
    }

    /// `n⁻¹ Σ_rows Σ_i 𝟙{y ≤ x_{r,i}}`, which should be close to `f(y)`.
    pub fn mean_profile(&self, y: Rational) -> Rational {
        let hits = self.matrix.iter().flatten().filter(|x| y <= **x).count();
        Rational::new(hits as i128, self.n as i128)
    }
}

fn row_max(matrix: &[Vec<Rational>]) -> Rational {
    matrix
        .iter()
        .map(|row| row.iter().sum::<Rational>())
        .max()
        .unwrap_or_else(zero)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    ConvexCorollary,
    LinearCorollary,
    GapCorollary,
    Coupling,
}

/// The exact inequality `lhs ≤ rhs` a corollary rests on, with its terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Evidence {
    #[serde(with = "rational::as_str")]
    pub lhs: Rational,
    #[serde(with = "rational::as_str")]
    pub rhs: Rational,
    #[serde(with = "rational::vec_as_str")]
    pub terms: Vec<Rational>,
}

impl Evidence {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Evidence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Coupling>,
    /// Normalizing mass for the linear corollary.
    #[serde(skip_serializing_if = "Option::is_none", with = "rational::opt_as_str")]
    pub scale: Option<Rational>,
}

/// A certificate, or the reason none was produced. Failing a sufficient
/// condition says nothing about membership.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MixOutcome {
    Certified(Certificate),
    Inconclusive {
        reason: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        evidence: Option<Evidence>,
        #[serde(skip_serializing_if = "Option::is_none")]
        best: Option<Coupling>,
    },
}

impl MixOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            MixOutcome::Certified(c) => Some(c),
            MixOutcome::Inconclusive { .. } => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        self.certificate().is_some()
    }

    fn inconclusive(reason: impl Into<String>) -> Self {
        MixOutcome::Inconclusive {
            reason: reason.into(),
            evidence: None,
            best: None,
        }
    }

    fn from_evidence(kind: CertificateKind, evidence: Evidence, scale: Option<Rational>, what: &str) -> Self {
        if evidence.holds() {
            MixOutcome::Certified(Certificate {
                kind,
                evidence: Some(evidence),
                coupling: None,
                scale,
            })
        } else {
            MixOutcome::Inconclusive {
                reason: format!("{what}: {} > {}", evidence.lhs, evidence.rhs),
                evidence: Some(evidence),
                best: None,
            }
        }
    }
}

/// `Σ_{i=0}^N f⁻¹(i) ≤ 1 + f⁻¹(1)` for a convex decreasing `f`.
pub fn certify_convex(f: &PiecewiseDensity) -> Result<MixOutcome> {
    if !f.is_convex() {
        return Ok(MixOutcome::inconclusive("density is not convex"));
    }
    let problem = component_distributions(f)?;
    Ok(MixOutcome::from_evidence(
        CertificateKind::ConvexCorollary,
        convex_evidence(&problem),
        None,
        "inverse-level sum too large",
    ))
}

fn convex_evidence(problem: &MixProblem) -> Evidence {
    let terms = problem.inverse_levels();
    let first = terms.get(1).copied().unwrap_or_else(zero);
    Evidence {
        lhs: terms.iter().sum(),
        rhs: one() + first,
        terms,
    }
}

/// `max_i (f⁻¹(i−1) − f⁻¹(i)) ≤ 1 − ∫f` for a decreasing `f`.
pub fn certify_gap(f: &PiecewiseDensity) -> Result<MixOutcome> {
    let problem = component_distributions(f)?;
    let terms: Vec<Rational> = problem.supports.iter().map(|(lo, hi)| hi - lo).collect();
    let evidence = Evidence {
        lhs: terms.iter().copied().max().unwrap_or_else(zero),
        rhs: one() - f.mass(),
        terms,
    };
    Ok(MixOutcome::from_evidence(CertificateKind::GapCorollary, evidence, None, "layer gap exceeds free mass"))
}

/// A density linear on its essential support `[0, b]` with `f(b) = 0`,
/// normalized to mass 1 and checked against the convex condition.
pub fn certify_linear(f: &PiecewiseDensity) -> Result<MixOutcome> {
    let f = f.simplified();
    let mass = f.mass();
    if mass.is_zero() {
        return Ok(MixOutcome::inconclusive("zero density"));
    }
    let end = f.generalized_inverse(zero())?;
    let cells_on_support: Vec<usize> = (0..f.cells()).filter(|&j| f.cell_bounds(j).0 < end).collect();
    let linear = cells_on_support.len() == 1 && {
        let seg = &f.segments()[cells_on_support[0]];
        seg.slope.is_negative() && seg.at(end).is_zero()
    };
    if !linear {
        return Ok(MixOutcome::inconclusive("density is not linear down to zero on its support"));
    }
    let normalized = f.scale_by(one() / mass);
    let problem = component_distributions(&normalized)?;
    Ok(MixOutcome::from_evidence(
        CertificateKind::LinearCorollary,
        convex_evidence(&problem),
        Some(mass),
        "inverse-level sum too large",
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub n: usize,
    pub max_iters: usize,
    /// Extra runs from shuffled starting columns.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            n: 64,
            max_iters: 1000,
            restarts: 32,
            seed: 0,
        }
    }
}

/// Rearrangement search: each column is repeatedly made counter-monotone
/// to the sum of the others until the maximal row sum stops improving.
/// Reports a coupling when it is within `1 + slack`; never refutes.
pub fn rearrangement_search(problem: &MixProblem, options: SearchOptions) -> Result<MixOutcome> {
    let n = options.n;
    if n < 2 {
        return Err(Error::Precondition("need at least two quantile levels".into()));
    }
    let budget = one() + problem.slack(n);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut coupling = rearrange(problem, n, options.max_iters);
    for _ in 0..options.restarts {
        if coupling.as_ref().is_some_and(|c| c.max_row_sum <= budget) {
            break;
        }
        let start: Vec<Vec<Rational>> = (1..=problem.count)
            .map(|i| {
                let mut c = problem.discretize(i, n);
                c.shuffle(&mut rng);
                c
            })
            .collect();
        if let Some(c) = rearrange_from(start, n, options.max_iters) {
            if coupling.as_ref().map_or(true, |b| c.max_row_sum < b.max_row_sum) {
                coupling = Some(c);
            }
        }
    }
    let Some(coupling) = coupling else {
        return Ok(MixOutcome::inconclusive(format!("no convergence in {} sweeps", options.max_iters)));
    };
    debug_assert!(coupling.verify(problem));
    if coupling.max_row_sum <= budget {
        Ok(MixOutcome::Certified(Certificate {
            kind: CertificateKind::Coupling,
            evidence: Some(Evidence {
                lhs: coupling.max_row_sum,
                rhs: budget,
                terms: coupling.row_sums(),
            }),
            coupling: Some(coupling),
            scale: None,
        }))
    } else {
        Ok(MixOutcome::Inconclusive {
            reason: format!("best row sum {} exceeds {budget}", coupling.max_row_sum),
            evidence: None,
            best: Some(coupling),
        })
    }
}

/// The rearranged coupling from alternating sorted columns, or `None` if
/// the sweep cap is hit first.
pub fn rearrange(problem: &MixProblem, n: usize, max_iters: usize) -> Option<Coupling> {
    let columns: Vec<Vec<Rational>> = (1..=problem.count)
        .map(|i| {
            let mut c = problem.discretize(i, n);
            if i % 2 == 0 {
                c.reverse();
            }
            c
        })
        .collect();
    rearrange_from(columns, n, max_iters)
}

fn rearrange_from(mut columns: Vec<Vec<Rational>>, n: usize, max_iters: usize) -> Option<Coupling> {
    let count = columns.len();
    if count <= 1 {
        return Some(Coupling::from_columns(&columns, n));
    }
    let mut best = Coupling::from_columns(&columns, n);
    for _ in 0..max_iters {
        let mut changed = false;
        for j in 0..count {
            let rest: Vec<Rational> = (0..n)
                .map(|r| (0..count).filter(|&k| k != j).map(|k| columns[k][r]).sum())
                .collect();
            let next = counter_monotone(&columns[j], &rest);
            if next != columns[j] {
                columns[j] = next;
                changed = true;
            }
        }
        let now = Coupling::from_columns(&columns, n);
        if now.max_row_sum < best.max_row_sum {
            best = now;
        }
        if !changed {
            return Some(best);
        }
    }
    None
}

/// Rearranges `values` so the largest sits with the smallest `other`.
/// Ties in `other` keep the current row order, so a fixed point is stable.
fn counter_monotone(values: &[Rational], other: &[Rational]) -> Vec<Rational> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.cmp(a));
    let mut rows: Vec<usize> = (0..other.len()).collect();
    rows.sort_by(|&a, &b| other[a].cmp(&other[b]).then(values[b].cmp(&values[a])).then(a.cmp(&b)));
    let mut out = vec![zero(); values.len()];
    for (rank, &row) in rows.iter().enumerate() {
        out[row] = sorted[rank];
    }
    out
}

pub const ORACLE_MAX_LAYERS: usize = 3;
pub const ORACLE_MAX_N: usize = 8;

/// Exact minimal maximal row sum over all couplings of the discretized
/// layers: the first column is fixed, the middle ones are enumerated and
/// the last one is paired counter-monotone to the partial sums, which is
/// optimal for it.
pub fn brute_force_optimum(problem: &MixProblem, n: usize, max_layers: usize) -> Result<Coupling> {
    if problem.count > max_layers || n > ORACLE_MAX_N {
        return Err(Error::SizeCap(format!(
            "{} layers at resolution {n} exceeds {max_layers} layers at {ORACLE_MAX_N}",
            problem.count
        )));
    }
    let count = problem.count;
    let columns: Vec<Vec<Rational>> = (1..=count).map(|i| problem.discretize(i, n)).collect();
    if count <= 1 {
        return Ok(Coupling::from_columns(&columns, n));
    }
    let middle = count - 2;
    let mut best: Option<Coupling> = None;
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let mut choice = vec![0usize; middle];
    loop {
        let mut cols = vec![columns[0].clone()];
        for (k, &p) in choice.iter().enumerate() {
            cols.push(perms[p].iter().map(|&r| columns[k + 1][r]).collect());
        }
        let partial: Vec<Rational> = (0..n).map(|r| cols.iter().map(|c| c[r]).sum()).collect();
        cols.push(counter_monotone(&columns[count - 1], &partial));
        let candidate = Coupling::from_columns(&cols, n);
        if best.as_ref().map_or(true, |b| candidate.max_row_sum < b.max_row_sum) {
            best = Some(candidate);
        }
        // Odometer over the middle columns.
        let mut k = 0;
        while k < middle {
            choice[k] += 1;
            if choice[k] < perms.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == middle {
            break;
        }
    }
    Ok(best.expect("at least one coupling"))
}

/// The optimal discretized coupling if its row sums stay within 1.
pub fn brute_force_mix(problem: &MixProblem, n: usize, max_layers: usize) -> Result<Option<Coupling>> {
    let best = brute_force_optimum(problem, n, max_layers)?;
    Ok((best.max_row_sum <= one()).then_some(best))
}
