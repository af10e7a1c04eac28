//! Càdlàg piecewise-affine densities on `(0, T)`, full location laws with
//! atoms at `0`, `T` and infinity, integer block decompositions and convex
//! mixing.
//!
//! Cell `j` covers `[x_j, x_{j+1})` and carries the affine map
//! `t ↦ p_j + q_j·t` in absolute time. All arithmetic is exact.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{abs, int, is_integer, max_r, min_r, one, zero, Rational};

/// Affine map `t ↦ intercept + slope·t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Affine {
    pub intercept: Rational,
    pub slope: Rational,
}

impl Affine {
    pub fn new(intercept: Rational, slope: Rational) -> Self {
        Self { intercept, slope }
    }

    pub fn constant(value: Rational) -> Self {
        Self::new(value, zero())
    }

    /// The affine map through `(t0, y0)` and `(t1, y1)`.
    pub fn through(t0: Rational, y0: Rational, t1: Rational, y1: Rational) -> Self {
        let slope = (y1 - y0) / (t1 - t0);
        Self::new(y0 - slope * t0, slope)
    }

    pub fn at(&self, t: Rational) -> Rational {
        self.intercept + self.slope * t
    }

    /// `∫_a^b (p + q t) dt`.
    pub fn integral(&self, a: Rational, b: Rational) -> Rational {
        self.intercept * (b - a) + self.slope * (b * b - a * a) / int(2)
    }

    fn scaled(&self, w: Rational) -> Self {
        Self::new(self.intercept * w, self.slope * w)
    }

    fn plus(&self, other: &Affine) -> Self {
        Self::new(self.intercept + other.intercept, self.slope + other.slope)
    }
}

/// Càdlàg piecewise-affine density on `(0, T)` with exact breakpoints.
///
/// The horizon `T` is the last breakpoint. The total mass is *not* bounded
/// here; [`LocationLaw`] enforces `∫f ≤ 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseDensity {
    breakpoints: Vec<Rational>,
    segments: Vec<Affine>,
}

impl PiecewiseDensity {
    /// Validates breakpoints (`0 = x_0 < … < x_k`, `k ≥ 1`) and nonnegativity
    /// at both ends of every cell.
    pub fn new(breakpoints: Vec<Rational>, segments: Vec<Affine>) -> Result<Self> {
        let density = Self::unchecked(breakpoints, segments)?;
        for cell in 0..density.cells() {
            if density.start_value(cell).is_negative() || density.end_value(cell).is_negative() {
                return Err(Error::NegativeValue { cell });
            }
        }
        Ok(density)
    }

    /// Structural checks only; values may be negative. Used for shifted
    /// copies such as `f − 1` in variation checks.
    pub(crate) fn unchecked(breakpoints: Vec<Rational>, segments: Vec<Affine>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != segments.len() + 1 {
            return Err(Error::LengthMismatch {
                breakpoints: breakpoints.len(),
                cells: segments.len(),
            });
        }
        if !breakpoints[0].is_zero() {
            return Err(Error::NonMonotoneBreakpoints { index: 0 });
        }
        for (i, w) in breakpoints.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::NonMonotoneBreakpoints { index: i + 1 });
            }
        }
        Ok(Self {
            breakpoints,
            segments,
        })
    }

    /// Step density taking `values[j]` on `[x_j, x_{j+1})`.
    pub fn step(breakpoints: Vec<Rational>, values: Vec<Rational>) -> Result<Self> {
        Self::new(breakpoints, values.into_iter().map(Affine::constant).collect())
    }

    /// The constant density `c` on `(0, horizon)`.
    pub fn constant(horizon: Rational, c: Rational) -> Result<Self> {
        Self::step(vec![zero(), horizon], vec![c])
    }

    pub fn horizon(&self) -> Rational {
        *self.breakpoints.last().expect("at least two breakpoints")
    }

    pub fn cells(&self) -> usize {
        self.segments.len()
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Affine] {
        &self.segments
    }

    pub fn cell_bounds(&self, cell: usize) -> (Rational, Rational) {
        (self.breakpoints[cell], self.breakpoints[cell + 1])
    }

    pub fn cell_length(&self, cell: usize) -> Rational {
        self.breakpoints[cell + 1] - self.breakpoints[cell]
    }

    /// Value at the left end of `cell` (the càdlàg value there).
    pub fn start_value(&self, cell: usize) -> Rational {
        self.segments[cell].at(self.breakpoints[cell])
    }

    /// Left limit at the right end of `cell`.
    pub fn end_value(&self, cell: usize) -> Rational {
        self.segments[cell].at(self.breakpoints[cell + 1])
    }

    /// Index of the cell `[x_j, x_{j+1})` containing `t ∈ [0, T)`.
    pub fn cell_of(&self, t: Rational) -> usize {
        let idx = self.breakpoints.partition_point(|x| *x <= t);
        idx.saturating_sub(1).min(self.cells() - 1)
    }

    /// Càdlàg value at `t ∈ [0, T)`; at `t ≥ T` the left limit `f(T−)`.
    pub fn value(&self, t: Rational) -> Rational {
        self.segments[self.cell_of(t)].at(t)
    }

    /// Left limit `f(t−)` for `t ∈ (0, T]`.
    pub fn left_limit(&self, t: Rational) -> Rational {
        let idx = self.breakpoints.partition_point(|x| *x < t);
        let cell = idx.saturating_sub(1).min(self.cells() - 1);
        self.segments[cell].at(t)
    }

    pub fn right_limit_at_zero(&self) -> Rational {
        self.start_value(0)
    }

    pub fn left_limit_at_horizon(&self) -> Rational {
        self.end_value(self.cells() - 1)
    }

    pub fn is_step(&self) -> bool {
        self.segments.iter().all(|s| s.slope.is_zero())
    }

    /// Step density with integer values on every cell.
    pub fn is_integer_valued(&self) -> bool {
        self.first_non_integer_cell().is_none()
    }

    pub(crate) fn first_non_integer_cell(&self) -> Option<usize> {
        self.segments
            .iter()
            .position(|s| !s.slope.is_zero() || !is_integer(&s.intercept))
    }

    /// Non-increasing on `(0, T)`: no positive slope and no upward jump.
    pub fn is_decreasing(&self) -> bool {
        self.segments.iter().all(|s| !s.slope.is_positive())
            && (1..self.cells()).all(|j| self.start_value(j) <= self.end_value(j - 1))
    }

    /// Convex on `(0, T)`: continuous across breakpoints, slopes non-decreasing.
    pub fn is_convex(&self) -> bool {
        (1..self.cells()).all(|j| {
            self.start_value(j) == self.end_value(j - 1)
                && self.segments[j].slope >= self.segments[j - 1].slope
        })
    }

    /// `sup f` over `(0, T)`.
    pub fn sup(&self) -> Rational {
        (0..self.cells())
            .flat_map(|j| [self.start_value(j), self.end_value(j)])
            .max()
            .expect("nonempty")
    }

    /// `inf f` over `(0, T)`.
    pub fn inf(&self) -> Rational {
        (0..self.cells())
            .flat_map(|j| [self.start_value(j), self.end_value(j)])
            .min()
            .expect("nonempty")
    }

    /// Jump `f(x_j) − f(x_j−)` at interior breakpoint `j ∈ 1..k`.
    pub fn jump(&self, j: usize) -> Rational {
        self.start_value(j) - self.end_value(j - 1)
    }

    /// Total variation on the open interval `(t1, t2)`, `0 < t1 < t2 < T`.
    pub fn total_variation(&self, t1: Rational, t2: Rational) -> Result<Rational> {
        if !(t1.is_positive() && t1 < t2 && t2 < self.horizon()) {
            return Err(Error::OutOfRange(format!(
                "total variation needs 0 < t1 < t2 < T, got ({t1}, {t2})"
            )));
        }
        Ok(self.variation_between(t1, t2))
    }

    /// Variation on `(a, b)` for any `0 ≤ a ≤ b ≤ T`: slope contributions of
    /// every cell piece plus jumps strictly inside.
    pub(crate) fn variation_between(&self, a: Rational, b: Rational) -> Rational {
        let mut tv = zero();
        for cell in 0..self.cells() {
            let (lo, hi) = self.cell_bounds(cell);
            let lo = max_r(lo, a);
            let hi = min_r(hi, b);
            if lo < hi {
                tv += abs(&self.segments[cell].slope) * (hi - lo);
            }
            if cell > 0 {
                let x = self.breakpoints[cell];
                if a < x && x < b {
                    tv += abs(&self.jump(cell));
                }
            }
        }
        tv
    }

    /// `∫_{t1}^{t2} f` for `0 ≤ t1 ≤ t2 ≤ T`.
    pub fn integral(&self, t1: Rational, t2: Rational) -> Result<Rational> {
        if t1.is_negative() || t1 > t2 || t2 > self.horizon() {
            return Err(Error::OutOfRange(format!(
                "integral needs 0 ≤ t1 ≤ t2 ≤ T, got ({t1}, {t2})"
            )));
        }
        let mut total = zero();
        for cell in 0..self.cells() {
            let (lo, hi) = self.cell_bounds(cell);
            let lo = max_r(lo, t1);
            let hi = min_r(hi, t2);
            if lo < hi {
                total += self.segments[cell].integral(lo, hi);
            }
        }
        Ok(total)
    }

    /// `∫_0^T f`.
    pub fn mass(&self) -> Rational {
        (0..self.cells())
            .map(|c| {
                let (lo, hi) = self.cell_bounds(c);
                self.segments[c].integral(lo, hi)
            })
            .sum()
    }

    /// `f⁻¹(y) = sup{t ∈ (0,T): f(t) ≥ y}` with `sup ∅ = 0`; for `y = 0`
    /// the right end of the essential support `sup{t: f(t) > 0}`.
    pub fn generalized_inverse(&self, y: Rational) -> Result<Rational> {
        if !self.is_decreasing() {
            return Err(Error::NotDecreasing);
        }
        if y.is_negative() {
            return Err(Error::OutOfRange(format!("level {y} is negative")));
        }
        let strict = y.is_zero();
        let holds = |v: Rational| if strict { v > y } else { v >= y };
        for cell in (0..self.cells()).rev() {
            let (lo, hi) = self.cell_bounds(cell);
            let seg = &self.segments[cell];
            if !holds(seg.at(lo)) {
                continue;
            }
            if seg.slope.is_negative() {
                // p + q t ≥ y  ⇔  t ≤ (y − p)/q
                let root = (y - seg.intercept) / seg.slope;
                return Ok(min_r(hi, max_r(lo, root)));
            }
            return Ok(hi);
        }
        Ok(zero())
    }

    /// Unique maximal nested decomposition of an integer step density.
    pub fn block_decomposition(&self) -> Result<BlockDecomposition> {
        if let Some(cell) = self.first_non_integer_cell() {
            return Err(Error::NonInteger { cell });
        }
        let merged = self.simplified();
        let values: Vec<i128> = merged
            .segments
            .iter()
            .map(|s| s.intercept.to_integer())
            .collect();
        let top = values.iter().copied().max().unwrap_or(0);
        let horizon = self.horizon();
        let mut blocks = Vec::new();
        for level in 1..=top {
            let mut run_start: Option<usize> = None;
            for cell in 0..=values.len() {
                let inside = cell < values.len() && values[cell] >= level;
                match (inside, run_start) {
                    (true, None) => run_start = Some(cell),
                    (false, Some(start)) => {
                        blocks.push(Block::new(
                            merged.breakpoints[start],
                            merged.breakpoints[cell],
                            horizon,
                        ));
                        run_start = None;
                    }
                    _ => {}
                }
            }
        }
        Ok(BlockDecomposition { horizon, blocks })
    }

    /// Merges adjacent cells carrying the same affine map.
    pub fn simplified(&self) -> Self {
        let mut breakpoints = vec![self.breakpoints[0]];
        let mut segments: Vec<Affine> = Vec::new();
        for (cell, seg) in self.segments.iter().enumerate() {
            if segments.last() == Some(seg) {
                *breakpoints.last_mut().unwrap() = self.breakpoints[cell + 1];
            } else {
                segments.push(seg.clone());
                breakpoints.push(self.breakpoints[cell + 1]);
            }
        }
        Self {
            breakpoints,
            segments,
        }
    }

    /// Same function with extra breakpoints inserted at `points` (those in
    /// `(0, T)`).
    pub fn refined(&self, points: impl IntoIterator<Item = Rational>) -> Self {
        let horizon = self.horizon();
        let mut all: BTreeSet<Rational> = self.breakpoints.iter().copied().collect();
        all.extend(points.into_iter().filter(|x| x.is_positive() && *x < horizon));
        let breakpoints: Vec<Rational> = all.into_iter().collect();
        let segments = breakpoints[..breakpoints.len() - 1]
            .iter()
            .map(|x| self.segments[self.cell_of(*x)].clone())
            .collect();
        Self {
            breakpoints,
            segments,
        }
    }

    /// `f + delta` (may be negative; structural use only).
    pub(crate) fn offset(&self, delta: Rational) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            segments: self
                .segments
                .iter()
                .map(|s| Affine::new(s.intercept + delta, s.slope))
                .collect(),
        }
    }

    /// `w · f`.
    pub fn scale_by(&self, w: Rational) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            segments: self.segments.iter().map(|s| s.scaled(w)).collect(),
        }
    }

    /// Pointwise weighted sum `Σ w_i f_i` over a common horizon.
    pub fn weighted_sum(parts: &[(&PiecewiseDensity, Rational)]) -> Result<Self> {
        let first = parts.first().ok_or(Error::BadWeights)?.0;
        let horizon = first.horizon();
        if parts.iter().any(|(d, _)| d.horizon() != horizon) {
            return Err(Error::MismatchedHorizon);
        }
        let grid: BTreeSet<Rational> = parts
            .iter()
            .flat_map(|(d, _)| d.breakpoints.iter().copied())
            .collect();
        let breakpoints: Vec<Rational> = grid.into_iter().collect();
        let segments = breakpoints[..breakpoints.len() - 1]
            .iter()
            .map(|x| {
                parts.iter().fold(Affine::constant(zero()), |acc, (d, w)| {
                    acc.plus(&d.segments[d.cell_of(*x)].scaled(*w))
                })
            })
            .collect();
        Ok(Self {
            breakpoints,
            segments,
        }
        .simplified())
    }

    /// Pointwise equality as functions on `(0, T)` (ignores redundant
    /// breakpoints).
    pub fn same_function(&self, other: &PiecewiseDensity) -> bool {
        self.horizon() == other.horizon() && self.simplified() == other.simplified()
    }
}

/// A probability law on `[0, T] ∪ {∞}` absolutely continuous on `(0, T)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocationLaw {
    horizon: Rational,
    density: PiecewiseDensity,
    atom_zero: Rational,
    atom_horizon: Rational,
    atom_infinity: Rational,
}

impl LocationLaw {
    /// Requires `T ∈ (0, 1]`, matching density horizon, atoms in `[0, 1]` and
    /// total mass exactly one.
    pub fn new(
        density: PiecewiseDensity,
        atom_zero: Rational,
        atom_horizon: Rational,
        atom_infinity: Rational,
    ) -> Result<Self> {
        let horizon = density.horizon();
        if horizon > one() {
            return Err(Error::InvalidLaw(format!("horizon {horizon} exceeds 1")));
        }
        for (name, atom) in [
            ("zero", atom_zero),
            ("T", atom_horizon),
            ("infinity", atom_infinity),
        ] {
            if atom.is_negative() || atom > one() {
                return Err(Error::InvalidLaw(format!("atom at {name} is {atom}")));
            }
        }
        let interior = density.mass();
        if interior > one() {
            return Err(Error::InvalidLaw(format!(
                "density integrates to {interior} > 1"
            )));
        }
        let total = interior + atom_zero + atom_horizon + atom_infinity;
        if total != one() {
            return Err(Error::InvalidLaw(format!("total mass is {total}, not 1")));
        }
        Ok(Self {
            horizon,
            density,
            atom_zero,
            atom_horizon,
            atom_infinity,
        })
    }

    /// Puts the missing mass `1 − ∫f − atom_zero − atom_infinity` at `T`.
    pub fn completed_at_horizon(
        density: PiecewiseDensity,
        atom_zero: Rational,
        atom_infinity: Rational,
    ) -> Result<Self> {
        let rest = one() - density.mass() - atom_zero - atom_infinity;
        Self::new(density, atom_zero, rest, atom_infinity)
    }

    pub fn horizon(&self) -> Rational {
        self.horizon
    }

    pub fn density(&self) -> &PiecewiseDensity {
        &self.density
    }

    pub fn atom_zero(&self) -> Rational {
        self.atom_zero
    }

    pub fn atom_horizon(&self) -> Rational {
        self.atom_horizon
    }

    pub fn atom_infinity(&self) -> Rational {
        self.atom_infinity
    }

    /// `F[0, t]` for `t ∈ [0, T]`.
    pub fn cdf(&self, t: Rational) -> Rational {
        let mut mass = self.atom_zero + self.density.integral(zero(), t).unwrap_or_else(|_| zero());
        if t >= self.horizon {
            mass += self.atom_horizon;
        }
        mass
    }

    /// Same law as functions and atoms.
    pub fn same_law(&self, other: &LocationLaw) -> bool {
        self.horizon == other.horizon
            && self.atom_zero == other.atom_zero
            && self.atom_horizon == other.atom_horizon
            && self.atom_infinity == other.atom_infinity
            && self.density.same_function(&other.density)
    }
}

/// Convex combination `Σ w_i F_i` of laws sharing a horizon.
pub fn mix_laws(laws: &[LocationLaw], weights: &[Rational]) -> Result<LocationLaw> {
    if laws.is_empty() || laws.len() != weights.len() {
        return Err(Error::BadWeights);
    }
    if weights.iter().any(|w| w.is_negative()) || weights.iter().sum::<Rational>() != one() {
        return Err(Error::BadWeights);
    }
    let horizon = laws[0].horizon;
    if laws.iter().any(|l| l.horizon != horizon) {
        return Err(Error::MismatchedHorizon);
    }
    let parts: Vec<(&PiecewiseDensity, Rational)> =
        laws.iter().zip(weights).map(|(l, w)| (&l.density, *w)).collect();
    let density = PiecewiseDensity::weighted_sum(&parts)?;
    let combine = |pick: fn(&LocationLaw) -> Rational| -> Rational {
        laws.iter().zip(weights).map(|(l, w)| pick(l) * w).sum()
    };
    LocationLaw::new(
        density,
        combine(LocationLaw::atom_zero),
        combine(LocationLaw::atom_horizon),
        combine(LocationLaw::atom_infinity),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Base,
    Left,
    Right,
    Central,
}

/// Half-open block `(lower, upper]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub lower: Rational,
    pub upper: Rational,
    pub kind: BlockKind,
}

impl Block {
    fn new(lower: Rational, upper: Rational, horizon: Rational) -> Self {
        let kind = match (lower.is_zero(), upper == horizon) {
            (true, true) => BlockKind::Base,
            (true, false) => BlockKind::Left,
            (false, true) => BlockKind::Right,
            (false, false) => BlockKind::Central,
        };
        Self { lower, upper, kind }
    }

    pub fn length(&self) -> Rational {
        self.upper - self.lower
    }
}

/// `f = Σ 𝟙_{(u_i, v_i]}` with nested-or-disjoint blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDecomposition {
    pub horizon: Rational,
    pub blocks: Vec<Block>,
}

impl BlockDecomposition {
    pub fn count(&self, kind: BlockKind) -> usize {
        self.blocks.iter().filter(|b| b.kind == kind).count()
    }

    pub fn of_kind(&self, kind: BlockKind) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(move |b| b.kind == kind)
    }

    /// `Σ 𝟙_{(u_i, v_i]}` as a step density (càdlàg representative).
    pub fn reconstruct(&self) -> PiecewiseDensity {
        let grid: BTreeSet<Rational> = self
            .blocks
            .iter()
            .flat_map(|b| [b.lower, b.upper])
            .chain([zero(), self.horizon])
            .collect();
        let breakpoints: Vec<Rational> = grid.into_iter().collect();
        let values = breakpoints[..breakpoints.len() - 1]
            .iter()
            .map(|x| {
                let covering = self
                    .blocks
                    .iter()
                    .filter(|b| b.lower <= *x && *x < b.upper)
                    .count();
                int(covering as i128)
            })
            .collect();
        PiecewiseDensity::step(breakpoints, values)
            .expect("block grid is increasing and counts are nonnegative")
            .simplified()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn step(bps: &[Rational], vals: &[Rational]) -> PiecewiseDensity {
        PiecewiseDensity::step(bps.to_vec(), vals.to_vec()).unwrap()
    }

    #[test]
    fn make_step_density_examples() {
        let f = step(&[zero(), rat(3, 4), one()], &[rat(4, 3), zero()]);
        assert_eq!(f.value(rat(1, 2)), rat(4, 3));
        assert_eq!(f.value(rat(3, 4)), zero());
        assert!(f.is_step());

        let u = step(&[zero(), one()], &[one()]);
        assert_eq!(u.mass(), one());

        let g = step(&[zero(), rat(1, 5), rat(2, 5)], &[int(2), one()]);
        assert_eq!(g.mass(), rat(3, 5));
        assert!(g.segments().iter().all(|s| s.slope.is_zero()));
    }

    #[test]
    fn make_step_density_rejects_bad_input() {
        assert_eq!(
            PiecewiseDensity::step(vec![zero(), rat(1, 2), rat(1, 2)], vec![one(), one()]),
            Err(Error::NonMonotoneBreakpoints { index: 2 })
        );
        assert_eq!(
            PiecewiseDensity::step(vec![zero(), one()], vec![rat(-1, 2)]),
            Err(Error::NegativeValue { cell: 0 })
        );
        assert!(matches!(
            PiecewiseDensity::step(vec![zero(), one()], vec![one(), one()]),
            Err(Error::LengthMismatch { .. })
        ));
        let heavy = step(&[zero(), rat(3, 4), one()], &[int(2), zero()]);
        assert!(matches!(
            LocationLaw::completed_at_horizon(heavy, zero(), zero()),
            Err(Error::InvalidLaw(_))
        ));
    }

    #[test]
    fn total_variation_examples() {
        let f = step(&[zero(), rat(3, 4), one()], &[rat(4, 3), zero()]);
        assert_eq!(f.total_variation(rat(1, 2), rat(9, 10)).unwrap(), rat(4, 3));
        let u = step(&[zero(), one()], &[one()]);
        assert_eq!(u.total_variation(rat(1, 10), rat(9, 10)).unwrap(), zero());
        let g = step(&[zero(), rat(1, 5), rat(2, 5)], &[int(2), one()]);
        assert_eq!(g.total_variation(rat(1, 10), rat(3, 10)).unwrap(), one());
        assert!(g.total_variation(rat(3, 10), rat(1, 10)).is_err());
        assert!(g.total_variation(zero(), rat(1, 10)).is_err());
        assert!(g.total_variation(rat(1, 10), rat(2, 5)).is_err());
    }

    #[test]
    fn total_variation_counts_slopes() {
        // 2 − 4t on (0, 1/2): variation over (1/8, 3/8) is 1.
        let f = PiecewiseDensity::new(
            vec![zero(), rat(1, 2)],
            vec![Affine::new(int(2), int(-4))],
        )
        .unwrap();
        assert_eq!(f.total_variation(rat(1, 8), rat(3, 8)).unwrap(), one());
    }

    #[test]
    fn integral_examples() {
        let f = step(&[zero(), rat(3, 4), one()], &[rat(4, 3), zero()]);
        assert_eq!(f.integral(zero(), one()).unwrap(), one());
        let z = step(&[zero(), one()], &[zero()]);
        assert_eq!(z.integral(zero(), one()).unwrap(), zero());
        let g = step(&[zero(), rat(3, 4), one()], &[int(2), zero()]);
        assert_eq!(g.integral(zero(), one()).unwrap(), rat(3, 2));
        assert_eq!(g.integral(rat(1, 4), rat(1, 2)).unwrap(), rat(1, 2));
        assert!(g.integral(rat(1, 2), rat(1, 4)).is_err());
        assert!(g.integral(zero(), int(2)).is_err());
    }

    #[test]
    fn generalized_inverse_examples() {
        let f = step(&[zero(), rat(1, 5), rat(2, 5)], &[int(2), one()]);
        assert_eq!(f.generalized_inverse(int(2)).unwrap(), rat(1, 5));
        assert_eq!(f.generalized_inverse(one()).unwrap(), rat(2, 5));
        assert_eq!(f.generalized_inverse(int(3)).unwrap(), zero());
        assert_eq!(f.generalized_inverse(zero()).unwrap(), rat(2, 5));

        let lin = PiecewiseDensity::new(
            vec![zero(), rat(1, 2)],
            vec![Affine::new(int(2), int(-4))],
        )
        .unwrap();
        assert_eq!(lin.generalized_inverse(one()).unwrap(), rat(1, 4));
        assert_eq!(lin.generalized_inverse(zero()).unwrap(), rat(1, 2));

        let up = step(&[zero(), rat(1, 2), one()], &[zero(), one()]);
        assert_eq!(up.generalized_inverse(one()), Err(Error::NotDecreasing));
    }

    #[test]
    fn support_end_ignores_trailing_zero_cells() {
        let f = step(&[zero(), rat(3, 10), rat(1, 2)], &[one(), zero()]);
        assert_eq!(f.generalized_inverse(zero()).unwrap(), rat(3, 10));
        assert_eq!(f.generalized_inverse(one()).unwrap(), rat(3, 10));
    }

    #[test]
    fn block_decomposition_examples() {
        let t = rat(3, 5);
        let base = step(&[zero(), t], &[one()]).block_decomposition().unwrap();
        assert_eq!(base.blocks, vec![Block::new(zero(), t, t)]);
        assert_eq!(base.blocks[0].kind, BlockKind::Base);

        let left = step(&[zero(), rat(3, 10), t], &[int(2), one()])
            .block_decomposition()
            .unwrap();
        assert_eq!(left.count(BlockKind::Base), 1);
        assert_eq!(left.count(BlockKind::Left), 1);
        assert_eq!(left.of_kind(BlockKind::Left).next().unwrap().upper, rat(3, 10));

        let central = step(&[zero(), rat(1, 5), rat(2, 5), t], &[one(), int(2), one()])
            .block_decomposition()
            .unwrap();
        assert_eq!(central.count(BlockKind::Base), 1);
        assert_eq!(central.count(BlockKind::Central), 1);
        let c = central.of_kind(BlockKind::Central).next().unwrap();
        assert_eq!((c.lower, c.upper), (rat(1, 5), rat(2, 5)));

        let frac = step(&[zero(), t], &[rat(3, 2)]);
        assert_eq!(frac.block_decomposition(), Err(Error::NonInteger { cell: 0 }));
    }

    #[test]
    fn block_decomposition_splits_disjoint_runs() {
        let f = step(
            &[zero(), rat(1, 10), rat(2, 10), rat(3, 10), rat(4, 10)],
            &[int(2), one(), int(2), zero()],
        );
        let d = f.block_decomposition().unwrap();
        assert_eq!(d.count(BlockKind::Left), 2);
        assert_eq!(d.count(BlockKind::Central), 1);
        assert!(d.reconstruct().same_function(&f));
    }

    #[test]
    fn mix_laws_examples() {
        let u = LocationLaw::new(step(&[zero(), one()], &[one()]), zero(), zero(), zero()).unwrap();
        assert!(mix_laws(&[u.clone()], &[one()]).unwrap().same_law(&u));

        let h = rat(1, 2);
        let a = LocationLaw::new(step(&[zero(), h], &[int(2)]), zero(), zero(), zero()).unwrap();
        let b = LocationLaw::new(step(&[zero(), h], &[zero()]), zero(), zero(), one()).unwrap();
        let m = mix_laws(&[a, b], &[h, h]).unwrap();
        assert_eq!(m.density().value(rat(1, 4)), one());
        assert_eq!(m.atom_infinity(), h);

        let t = rat(2, 5);
        let e1 = LocationLaw::new(
            step(&[zero(), rat(1, 5), t], &[int(2), one()]),
            rat(1, 10),
            zero(),
            rat(3, 10),
        )
        .unwrap();
        let e2 = LocationLaw::new(step(&[zero(), t], &[one()]), rat(3, 10), rat(3, 10), zero())
            .unwrap();
        let w = [rat(1, 4), rat(3, 4)];
        let m = mix_laws(&[e1.clone(), e2.clone()], &w).unwrap();
        assert_eq!(
            m.density().mass(),
            w[0] * e1.density().mass() + w[1] * e2.density().mass()
        );
    }

    #[test]
    fn mix_laws_rejects_bad_input() {
        let a = LocationLaw::new(step(&[zero(), one()], &[one()]), zero(), zero(), zero()).unwrap();
        let b = LocationLaw::new(step(&[zero(), rat(1, 2)], &[one()]), rat(1, 2), zero(), zero())
            .unwrap();
        assert_eq!(
            mix_laws(&[a.clone(), b], &[rat(1, 2), rat(1, 2)]),
            Err(Error::MismatchedHorizon)
        );
        assert_eq!(
            mix_laws(&[a.clone(), a], &[rat(1, 2), rat(1, 3)]),
            Err(Error::BadWeights)
        );
    }
}
