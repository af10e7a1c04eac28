//! Finite periodic point systems with an order, the locators they induce
//! and the counting formula for the law of the selected point.
//!
//! Points live on one period `[0, 1)` and are repeated with period 1. A
//! point `r` blocks `s` when `r` is not strictly below `s` in the order:
//! earlier points for first-time systems, later points for last-time
//! systems and points of equal or higher rank for explicit systems (so
//! copies of a point always block each other).

use std::collections::BTreeSet;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::density::{LocationLaw, PiecewiseDensity};
use crate::error::{Error, Result};
use crate::paths::Location;
use crate::rational::{self, frac, int, max_r, min_r, one, zero, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    FirstTime,
    LastTime,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPointSystem", into = "RawPointSystem")]
pub struct PointSystem {
    points: Vec<Rational>,
    kind: OrderKind,
    ranks: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct RawPointSystem {
    #[serde(with = "rational::vec_as_str")]
    points: Vec<Rational>,
    order_kind: OrderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    explicit_order: Option<Vec<i64>>,
}

impl TryFrom<RawPointSystem> for PointSystem {
    type Error = Error;
    fn try_from(raw: RawPointSystem) -> Result<Self> {
        match raw.order_kind {
            OrderKind::Explicit => {
                let ranks = raw
                    .explicit_order
                    .ok_or_else(|| Error::InvalidPointSystem("explicit order needs ranks".into()))?;
                PointSystem::explicit(raw.points.into_iter().zip(ranks).collect())
            }
            kind => {
                if raw.explicit_order.is_some() {
                    return Err(Error::InvalidPointSystem("ranks given for a time order".into()));
                }
                PointSystem::new(raw.points, kind)
            }
        }
    }
}

impl From<PointSystem> for RawPointSystem {
    fn from(ps: PointSystem) -> Self {
        RawPointSystem {
            explicit_order: (ps.kind == OrderKind::Explicit).then_some(ps.ranks),
            points: ps.points,
            order_kind: ps.kind,
        }
    }
}

/// How far the window may extend left (`a`) and right (`b`) of a point
/// before it contains a blocking point. `None` is unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reach {
    pub a: Option<Rational>,
    pub b: Option<Rational>,
}

impl PointSystem {
    /// A first-time or last-time system.
    pub fn new(points: Vec<Rational>, kind: OrderKind) -> Result<Self> {
        if kind == OrderKind::Explicit {
            return Err(Error::InvalidPointSystem("use PointSystem::explicit for ranked points".into()));
        }
        let n = points.len();
        Self::build(points.into_iter().zip(std::iter::repeat(0)).collect(), kind, n)
    }

    /// A system ordered by a rank per point; higher ranks win.
    pub fn explicit(ranked: Vec<(Rational, i64)>) -> Result<Self> {
        let n = ranked.len();
        Self::build(ranked, OrderKind::Explicit, n)
    }

    fn build(mut ranked: Vec<(Rational, i64)>, kind: OrderKind, n: usize) -> Result<Self> {
        if let Some((p, _)) = ranked.iter().find(|(p, _)| p.is_negative() || *p >= one()) {
            return Err(Error::InvalidPointSystem(format!("point {p} outside [0, 1)")));
        }
        ranked.sort_by(|x, y| x.0.cmp(&y.0));
        ranked.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
        if ranked.len() != n || ranked.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidPointSystem("repeated point".into()));
        }
        let (points, ranks) = ranked.into_iter().unzip();
        Ok(Self { points, kind, ranks })
    }

    pub fn points(&self) -> &[Rational] {
        &self.points
    }

    pub fn kind(&self) -> OrderKind {
        self.kind
    }

    pub fn ranks(&self) -> Option<&[i64]> {
        (self.kind == OrderKind::Explicit).then_some(&self.ranks[..])
    }

    fn index_of(&self, s: Rational) -> Result<usize> {
        self.points
            .binary_search(&s)
            .map_err(|_| Error::UnknownPoint(s.to_string()))
    }

    /// Copies of the points in `[lo, hi]` on the unrolled line, in order,
    /// with their index in the period.
    fn unrolled(&self, lo: Rational, hi: Rational) -> Vec<(Rational, usize)> {
        let mut out = Vec::new();
        if self.points.is_empty() {
            return out;
        }
        let first = lo.floor().to_integer();
        let last = hi.floor().to_integer();
        for k in first..=last {
            for (i, p) in self.points.iter().enumerate() {
                let x = p + int(k);
                if x >= lo && x <= hi {
                    out.push((x, i));
                }
            }
        }
        out
    }

    /// Whether the copy of point `ri` at `r` blocks the copy of `si` at `s`.
    fn blocks(&self, (r, ri): (Rational, usize), (s, si): (Rational, usize)) -> bool {
        match self.kind {
            OrderKind::FirstTime => r < s,
            OrderKind::LastTime => r > s,
            OrderKind::Explicit => self.ranks[ri] >= self.ranks[si],
        }
    }

    pub fn reach(&self, s: Rational) -> Result<Reach> {
        let si = self.index_of(s)?;
        let me = (s, si);
        let a = self
            .unrolled(s - one(), s)
            .into_iter()
            .rev()
            .find(|&(r, ri)| r < s && self.blocks((r, ri), me))
            .map(|(r, _)| s - r);
        let b = self
            .unrolled(s, s + one())
            .into_iter()
            .find(|&(r, ri)| r > s && self.blocks((r, ri), me))
            .map(|(r, _)| r - s);
        Ok(Reach { a, b })
    }

    /// The maximal point in `[a, b]`, as an absolute position.
    pub fn location(&self, a: Rational, b: Rational) -> Result<Location> {
        if b - a > one() {
            return Err(Error::OutOfRange(format!("window [{a}, {b}] longer than a period")));
        }
        let inside = self.unrolled(a, b);
        let Some(&first) = inside.first() else {
            return Ok(Location::Infinity);
        };
        let best = match self.kind {
            OrderKind::FirstTime => first,
            OrderKind::LastTime => *inside.last().unwrap(),
            OrderKind::Explicit => {
                let top = inside.iter().map(|&(_, i)| self.ranks[i]).max().unwrap();
                let mut winners = inside.iter().filter(|&&(_, i)| self.ranks[i] == top);
                let w = *winners.next().unwrap();
                if let Some(other) = winners.next() {
                    return Err(Error::AmbiguousMaximum(format!(
                        "{} and {} share rank {top} in [{a}, {b}]",
                        w.0, other.0
                    )));
                }
                w
            }
        };
        Ok(Location::At(best.0))
    }
}

/// The selected point of `ps` in `[a, b]` (absolute position).
pub fn poset_location(ps: &PointSystem, a: Rational, b: Rational) -> Result<Location> {
    ps.location(a, b)
}

pub fn reach(ps: &PointSystem, s: Rational) -> Result<Reach> {
    ps.reach(s)
}

/// Step density counting `[max(0, T − b_s), min(T, a_s))` over the points,
/// with the empty-window measure as the atom at infinity.
pub fn counting_density(ps: &PointSystem, horizon: Rational) -> Result<LocationLaw> {
    check_horizon(horizon)?;
    let mut intervals = Vec::new();
    for &s in ps.points() {
        let r = ps.reach(s)?;
        let lo = r.b.map_or(zero(), |b| max_r(zero(), horizon - b));
        let hi = r.a.map_or(horizon, |a| min_r(horizon, a));
        if lo < hi {
            intervals.push((lo, hi));
        }
    }
    let density = step_from_intervals(horizon, &intervals)?;
    let empty = empty_measure(ps, horizon);
    into_law(density, empty)
}

fn check_horizon(horizon: Rational) -> Result<()> {
    if !horizon.is_positive() || horizon > one() {
        return Err(Error::OutOfRange(format!("T = {horizon} outside (0, 1]")));
    }
    Ok(())
}

fn into_law(density: PiecewiseDensity, empty: Rational) -> Result<LocationLaw> {
    if density.mass() + empty != one() {
        return Err(Error::AmbiguousMaximum(format!(
            "selected mass {} plus empty windows {empty} is not 1",
            density.mass()
        )));
    }
    LocationLaw::new(density, zero(), zero(), empty)
}

/// Total length of offsets `u ∈ [0, 1)` whose window `[u, u + T]` holds no
/// point.
fn empty_measure(ps: &PointSystem, horizon: Rational) -> Rational {
    let pts = ps.points();
    if pts.is_empty() {
        return one();
    }
    let mut total = zero();
    for (i, p) in pts.iter().enumerate() {
        let next = if i + 1 < pts.len() { pts[i + 1] } else { pts[0] + one() };
        total += max_r(zero(), next - p - horizon);
    }
    total
}

/// Number of intervals covering each cell, as a step density on `[0, T]`.
fn step_from_intervals(horizon: Rational, intervals: &[(Rational, Rational)]) -> Result<PiecewiseDensity> {
    let mut cuts: BTreeSet<Rational> = BTreeSet::from([zero(), horizon]);
    for &(lo, hi) in intervals {
        cuts.insert(lo);
        cuts.insert(hi);
    }
    let cuts: Vec<Rational> = cuts.into_iter().collect();
    let values = cuts
        .windows(2)
        .map(|w| int(intervals.iter().filter(|&&(lo, hi)| lo <= w[0] && w[1] <= hi).count() as i128))
        .collect();
    Ok(PiecewiseDensity::step(cuts, values)?.simplified())
}

/// Law of the selected point relative to the window start, computed by
/// splitting the offsets `u ∈ [0, 1)` at every entry and exit of a point.
pub fn exact_sweep(ps: &PointSystem, horizon: Rational) -> Result<LocationLaw> {
    check_horizon(horizon)?;
    let mut cuts: BTreeSet<Rational> = BTreeSet::from([zero(), one()]);
    for &p in ps.points() {
        cuts.insert(p);
        cuts.insert(frac(&(p - horizon)));
    }
    let cuts: Vec<Rational> = cuts.into_iter().collect();
    let mut intervals = Vec::new();
    let mut empty = zero();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = (lo + hi) / int(2);
        match ps.location(mid, mid + horizon)? {
            Location::Infinity => empty += hi - lo,
            Location::At(s) => intervals.push((s - hi, s - lo)),
        }
    }
    let density = step_from_intervals(horizon, &intervals)?;
    into_law(density, empty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    fn ft(points: &[Rational]) -> PointSystem {
        PointSystem::new(points.to_vec(), OrderKind::FirstTime).unwrap()
    }

    #[test]
    fn reach_examples() {
        let single = ft(&[rat(3, 10)]);
        assert_eq!(single.reach(rat(3, 10)).unwrap(), Reach { a: Some(one()), b: None });

        let two = ft(&[rat(1, 5), rat(3, 5)]);
        assert_eq!(two.reach(rat(3, 5)).unwrap(), Reach { a: Some(rat(2, 5)), b: None });

        let ranked = PointSystem::explicit(vec![(rat(1, 5), 1), (rat(7, 10), 5), (rat(9, 10), 2)]).unwrap();
        assert_eq!(ranked.reach(rat(7, 10)).unwrap(), Reach { a: Some(one()), b: Some(one()) });
        assert_eq!(ranked.reach(rat(9, 10)).unwrap(), Reach { a: Some(rat(1, 5)), b: Some(rat(4, 5)) });

        assert!(matches!(single.reach(rat(1, 2)), Err(Error::UnknownPoint(_))));
    }

    #[test]
    fn location_examples() {
        let ps = ft(&[rat(1, 5), rat(3, 5)]);
        assert_eq!(ps.location(rat(1, 10), rat(7, 10)).unwrap(), Location::At(rat(1, 5)));
        assert_eq!(ps.location(rat(3, 10), rat(1, 2)).unwrap(), Location::Infinity);
        assert_eq!(ps.location(rat(9, 10), rat(13, 10)).unwrap(), Location::At(rat(6, 5)));

        let last = PointSystem::new(vec![rat(1, 5), rat(3, 5)], OrderKind::LastTime).unwrap();
        assert_eq!(last.location(zero(), one()).unwrap(), Location::At(rat(3, 5)));

        let ranked = PointSystem::explicit(vec![(rat(1, 5), 1), (rat(7, 10), 2)]).unwrap();
        assert_eq!(ranked.location(zero(), one()).unwrap(), Location::At(rat(7, 10)));

        let tied = PointSystem::explicit(vec![(rat(1, 5), 3), (rat(7, 10), 3)]).unwrap();
        assert!(matches!(tied.location(zero(), one()), Err(Error::AmbiguousMaximum(_))));
        assert!(ps.location(zero(), rat(3, 2)).is_err());
    }

    #[test]
    fn counting_examples() {
        let t = rat(2, 5);
        let law = counting_density(&ft(&[rat(3, 10)]), t).unwrap();
        assert!(law.density().same_function(&PiecewiseDensity::constant(t, one()).unwrap()));
        assert_eq!(law.atom_infinity(), rat(3, 5));

        let law = counting_density(&ft(&[zero(), rat(1, 2)]), t).unwrap();
        assert!(law.density().same_function(&PiecewiseDensity::constant(t, int(2)).unwrap()));
        assert_eq!(law.atom_infinity(), rat(1, 5));

        let law = counting_density(&ft(&[]), t).unwrap();
        assert_eq!(law.density().mass(), zero());
        assert_eq!(law.atom_infinity(), one());
    }

    #[test]
    fn unique_maximum_gives_uniform_law_at_full_period() {
        let ps = PointSystem::explicit(vec![(rat(1, 5), 1), (rat(7, 10), 9), (rat(4, 5), 4)]).unwrap();
        let law = counting_density(&ps, one()).unwrap();
        assert!(law.density().same_function(&PiecewiseDensity::constant(one(), one()).unwrap()));
        assert!(law.same_law(&exact_sweep(&ps, one()).unwrap()));
    }

    #[test]
    fn rejects_bad_systems() {
        assert!(PointSystem::new(vec![one()], OrderKind::FirstTime).is_err());
        assert!(PointSystem::new(vec![rat(1, 2), rat(1, 2)], OrderKind::LastTime).is_err());
        assert!(PointSystem::new(vec![rat(1, 2)], OrderKind::Explicit).is_err());
        let json = r#"{"points":["1/2"],"order_kind":"explicit"}"#;
        assert!(serde_json::from_str::<PointSystem>(json).is_err());
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"points":["1/5","7/10"],"order_kind":"explicit","explicit_order":[1,2]}"#;
        let ps: PointSystem = serde_json::from_str(json).unwrap();
        assert_eq!(ps.ranks(), Some(&[1, 2][..]));
        assert_eq!(serde_json::to_string(&ps).unwrap(), json);
    }

    fn arb_system() -> impl Strategy<Value = PointSystem> {
        (
            prop::collection::btree_set(0i128..40, 0..=6),
            0u8..3,
            prop::collection::vec(0i64..1000, 6),
        )
            .prop_map(|(pts, kind, ranks)| {
                let pts: Vec<Rational> = pts.into_iter().map(|k| rat(k, 40)).collect();
                match kind {
                    0 => PointSystem::new(pts, OrderKind::FirstTime).unwrap(),
                    1 => PointSystem::new(pts, OrderKind::LastTime).unwrap(),
                    _ => {
                        // Distinct ranks so every window has a unique maximum.
                        let mut used = BTreeSet::new();
                        let ranked = pts
                            .into_iter()
                            .zip(ranks)
                            .map(|(p, r)| {
                                let mut r = r;
                                while !used.insert(r) {
                                    r += 1000;
                                }
                                (p, r)
                            })
                            .collect();
                        PointSystem::explicit(ranked).unwrap()
                    }
                }
            })
    }

    proptest! {
        #[test]
        fn counting_matches_sweep(ps in arb_system(), t in 1i128..=30) {
            let horizon = rat(t, 30);
            let counted = counting_density(&ps, horizon).unwrap();
            let swept = exact_sweep(&ps, horizon).unwrap();
            prop_assert!(counted.same_law(&swept));
        }

        #[test]
        fn first_time_systems_are_decreasing(pts in prop::collection::btree_set(0i128..40, 0..=6), t in 1i128..=30) {
            let ps = PointSystem::new(pts.into_iter().map(|k| rat(k, 40)).collect(), OrderKind::FirstTime).unwrap();
            for &s in ps.points() {
                prop_assert!(ps.reach(s).unwrap().b.is_none());
            }
            prop_assert!(counting_density(&ps, rat(t, 30)).unwrap().density().is_decreasing());
        }
    }
}
