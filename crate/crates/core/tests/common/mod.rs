//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use ilf_core::membership::{check_class, LawClass};
use ilf_core::paths::PiecewiseLinearPath;
use ilf_core::poset::{OrderKind, PointSystem};
use ilf_core::{int, rat, Affine, LocationLaw, PiecewiseDensity, Rational};
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn step_law(bps: &[Rational], vals: &[i128], a: Rational, b: Rational, c: Rational) -> LocationLaw {
    let d = PiecewiseDensity::step(bps.to_vec(), vals.iter().map(|v| int(*v)).collect()).unwrap();
    LocationLaw::new(d, a, b, c).unwrap()
}

/// Sorted distinct multiples of `1/den` strictly inside `(0, top)`.
fn interior_cuts(rng: &mut ChaCha8Rng, den: i128, top: Rational, count: usize) -> Vec<Rational> {
    let slots: Vec<i128> = (1..).take_while(|k| rat(*k, den) < top).collect();
    let mut picked: Vec<i128> = slots.choose_multiple(rng, count.min(slots.len())).copied().collect();
    picked.sort();
    picked.into_iter().map(|k| rat(k, den)).collect()
}

/// A random member of the invariant class with both boundary atoms
/// positive.
pub fn random_invariant_law(rng: &mut ChaCha8Rng) -> LocationLaw {
    let horizons = [rat(1, 5), rat(1, 4), rat(3, 10), rat(2, 5), rat(1, 2), rat(3, 5), rat(7, 10)];
    loop {
        let horizon = *horizons.choose(rng).unwrap();
        let cells = rng.gen_range(1..=5);
        let mut bps = vec![Rational::zero()];
        bps.extend(interior_cuts(rng, 40, horizon, cells - 1));
        bps.push(horizon);
        let vals: Vec<i128> = (0..bps.len() - 1).map(|_| rng.gen_range(1..=4)).collect();
        let f = PiecewiseDensity::step(bps.clone(), vals.iter().map(|v| int(*v)).collect()).unwrap();
        let rest = Rational::one() - f.mass();
        if rest <= Rational::zero() {
            continue;
        }
        let a = rest * rat(rng.gen_range(1..20), 20);
        let law = LocationLaw::new(f, a, rest - a, Rational::zero()).unwrap();
        if check_class(&law, LawClass::Invariant).is_member() {
            return law;
        }
    }
}

/// A random decreasing first-time law with every breakpoint and atom on the
/// `1/100` lattice.
pub fn random_first_time_law(rng: &mut ChaCha8Rng) -> LocationLaw {
    loop {
        let horizon = rat(rng.gen_range(4..=20) * 5, 100);
        let cells = rng.gen_range(1..=4);
        let mut bps = vec![Rational::zero()];
        bps.extend(interior_cuts(rng, 100, horizon, cells - 1));
        bps.push(horizon);
        let mut vals: Vec<i128> = (0..bps.len() - 1).map(|_| rng.gen_range(0..=4)).collect();
        vals.sort_by(|x, y| y.cmp(x));
        let f = PiecewiseDensity::step(bps, vals.iter().map(|v| int(*v)).collect()).unwrap();
        let rest = Rational::one() - f.mass();
        if rest < Rational::zero() {
            continue;
        }
        let hundredths = (rest * int(100)).to_integer();
        let a = rat(rng.gen_range(0..=hundredths), 100);
        let law = LocationLaw::new(f, a, Rational::zero(), rest - a).unwrap();
        if check_class(&law, LawClass::FirstTime).is_member() {
            return law;
        }
    }
}

/// A random step density with at most `max_cells` cells and values in
/// `0..=4` on a quarter lattice.
pub fn random_step_density(rng: &mut ChaCha8Rng, max_cells: usize) -> PiecewiseDensity {
    let horizon = rat(rng.gen_range(1..=10), 10);
    let cells = rng.gen_range(1..=max_cells);
    let mut bps = vec![Rational::zero()];
    bps.extend(interior_cuts(rng, 80, horizon, cells - 1));
    bps.push(horizon);
    let integer = rng.gen_bool(0.5);
    let vals = (0..bps.len() - 1)
        .map(|_| if integer { int(rng.gen_range(0..=4)) } else { rat(rng.gen_range(0..=16), 4) })
        .collect();
    PiecewiseDensity::step(bps, vals).unwrap()
}

/// A random decreasing piecewise-linear density with `f(0+) ≤ 3` and mass
/// at most 1.
pub fn random_decreasing_density(rng: &mut ChaCha8Rng) -> PiecewiseDensity {
    loop {
        let horizon = rat(rng.gen_range(2..=10), 10);
        let cells = rng.gen_range(1..=3);
        let mut bps = vec![Rational::zero()];
        bps.extend(interior_cuts(rng, 20, horizon, cells - 1));
        bps.push(horizon);
        let mut levels: Vec<i128> = (0..2 * (bps.len() - 1)).map(|_| rng.gen_range(0..=12)).collect();
        levels.sort_by(|x, y| y.cmp(x));
        let segs = (0..bps.len() - 1)
            .map(|c| Affine::through(bps[c], rat(levels[2 * c], 4), bps[c + 1], rat(levels[2 * c + 1], 4)))
            .collect();
        let f = PiecewiseDensity::new(bps, segs).unwrap();
        if f.mass() <= Rational::one() && f.sup() > Rational::zero() {
            return f;
        }
    }
}

/// A random point system with at most six points on the `1/40` lattice.
/// Explicit systems get distinct ranks.
pub fn random_point_system(rng: &mut ChaCha8Rng) -> PointSystem {
    let count = rng.gen_range(0..=6);
    let slots: Vec<i128> = (0..40).collect();
    let mut pts: Vec<Rational> = slots.choose_multiple(rng, count).map(|k| rat(*k, 40)).collect();
    pts.sort();
    match rng.gen_range(0..3) {
        0 => PointSystem::new(pts, OrderKind::FirstTime).unwrap(),
        1 => PointSystem::new(pts, OrderKind::LastTime).unwrap(),
        _ => {
            let mut ranks: Vec<i64> = (0..count as i64).collect();
            ranks.shuffle(rng);
            PointSystem::explicit(pts.into_iter().zip(ranks).collect()).unwrap()
        }
    }
}

/// A random periodic path on the `1/32` lattice with values in
/// `{−5/2, −2, …, 3/2}`, so hits of −1 and −2, plateaus and level-½
/// crossings all occur.
pub fn random_path(rng: &mut ChaCha8Rng) -> PiecewiseLinearPath {
    let inner = rng.gen_range(0..=6);
    let mut times = vec![Rational::zero()];
    times.extend(interior_cuts(rng, 32, Rational::one(), inner));
    times.push(Rational::one());
    let mut values: Vec<Rational> = (0..times.len() - 1).map(|_| rat(rng.gen_range(-5..=3), 2)).collect();
    values.push(values[0]);
    PiecewiseLinearPath::new(times.into_iter().zip(values).collect()).unwrap()
}

/// A random rational in `[lo, hi]` on the `1/den` lattice.
pub fn lattice(rng: &mut ChaCha8Rng, lo: i128, hi: i128, den: i128) -> Rational {
    rat(rng.gen_range(lo * den..=hi * den), den)
}
