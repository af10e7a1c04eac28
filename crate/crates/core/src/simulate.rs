//! Laws of `L(g(· + U), [0, T])` for uniform `U`, estimated on a midpoint
//! grid or by seeded Monte Carlo, and compared with target laws.
//!
//! Monte Carlo draws use ChaCha8 seeded with `seed`; draw `i` reads the
//! first 32-bit word of stream `i`, so `u_i = r / 2^32` is independent of
//! thread scheduling.

use std::fmt::Write as _;

use num_traits::Zero;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::LocationLaw;
use crate::error::{Error, Result};
use crate::paths::{Location, Locator, PiecewiseLinearPath, PreparedLocator};
use crate::rational::{self, to_f64, Rational};

/// Empirical law of a location on `[0, T] ∪ {∞}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalLaw {
    #[serde(rename = "T", with = "rational::as_str")]
    pub horizon: Rational,
    pub n: usize,
    pub count_zero: usize,
    pub count_horizon: usize,
    pub count_infinity: usize,
    /// Sorted locations in `(0, T)`.
    #[serde(skip)]
    pub interior: Vec<f64>,
}

impl EmpiricalLaw {
    /// Tallies exact locations.
    pub fn from_locations(horizon: Rational, locations: &[Location]) -> Self {
        let mut law = Self {
            horizon,
            n: locations.len(),
            count_zero: 0,
            count_horizon: 0,
            count_infinity: 0,
            interior: Vec::new(),
        };
        for loc in locations {
            match loc {
                Location::Infinity => law.count_infinity += 1,
                Location::At(t) if t.is_zero() => law.count_zero += 1,
                Location::At(t) if *t == horizon => law.count_horizon += 1,
                Location::At(t) => law.interior.push(to_f64(t)),
            }
        }
        law.interior.sort_by(f64::total_cmp);
        law
    }

    pub fn freq_zero(&self) -> f64 {
        self.count_zero as f64 / self.n as f64
    }

    pub fn freq_horizon(&self) -> f64 {
        self.count_horizon as f64 / self.n as f64
    }

    pub fn freq_infinity(&self) -> f64 {
        self.count_infinity as f64 / self.n as f64
    }

    pub fn interior_mass(&self) -> f64 {
        self.interior.len() as f64 / self.n as f64
    }

    /// Empirical `F[0, t]`.
    pub fn cdf(&self, t: f64) -> f64 {
        let below = self.interior.partition_point(|x| *x <= t);
        let mut count = self.count_zero + below;
        if t >= to_f64(&self.horizon) {
            count += self.count_horizon;
        }
        count as f64 / self.n as f64
    }

    /// Density estimates `(lo, hi, count / (n·(hi − lo)))` on consecutive
    /// bins of width `width` covering `(0, T)`; the last bin may be short.
    pub fn histogram(&self, width: f64) -> Vec<Bin> {
        let horizon = to_f64(&self.horizon);
        let bins = (horizon / width).ceil() as usize;
        let mut counts = vec![0usize; bins];
        for x in &self.interior {
            let b = ((x / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                let lo = i as f64 * width;
                let hi = (lo + width).min(horizon);
                let full = hi - lo >= width * (1.0 - 1e-9);
                let span = if full { width } else { hi - lo };
                Bin {
                    lo,
                    hi,
                    full,
                    density: c as f64 / (self.n as f64 * span),
                }
            })
            .collect()
    }

    /// CSV series `t,F` of the empirical CDF at every jump.
    pub fn ecdf_csv(&self) -> String {
        let mut out = String::from("t,F\n");
        let n = self.n as f64;
        let mut count = self.count_zero;
        let _ = writeln!(out, "0,{}", count as f64 / n);
        let mut i = 0;
        while i < self.interior.len() {
            let x = self.interior[i];
            while i < self.interior.len() && self.interior[i] == x {
                i += 1;
                count += 1;
            }
            let _ = writeln!(out, "{x},{}", count as f64 / n);
        }
        let _ = writeln!(out, "{},{}", to_f64(&self.horizon), (count + self.count_horizon) as f64 / n);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub full: bool,
    pub density: f64,
}

/// `L(θ_u g, [0, T]) = L(g, [u, u + T]) − u` for each shift `u`.
pub fn locate_shifts(g: &PiecewiseLinearPath, locator: Locator, horizon: Rational, shifts: &[Rational]) -> Vec<Location> {
    let prepared = PreparedLocator::new(g, locator);
    shifts
        .par_iter()
        .map(|u| prepared.locate(*u, *u + horizon).offset(-*u))
        .collect()
}

/// Evaluates the locator at the midpoint shifts `(2i + 1) / (2n)`.
pub fn sweep_law(g: &PiecewiseLinearPath, locator: Locator, horizon: Rational, grid_n: usize) -> Result<EmpiricalLaw> {
    if grid_n == 0 {
        return Err(Error::OutOfRange("grid size must be positive".into()));
    }
    let n = grid_n as i128;
    let shifts: Vec<Rational> = (0..n).map(|i| Rational::new(2 * i + 1, 2 * n)).collect();
    Ok(EmpiricalLaw::from_locations(horizon, &locate_shifts(g, locator, horizon, &shifts)))
}

/// The `i`-th Monte Carlo shift for `seed`.
pub fn mc_shift(seed: u64, index: u64) -> Rational {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    Rational::new(rng.next_u32() as i128, 1i128 << 32)
}

/// Evaluates the locator at `n` seeded uniform shifts.
pub fn mc_law(g: &PiecewiseLinearPath, locator: Locator, horizon: Rational, n: usize, seed: u64) -> Result<EmpiricalLaw> {
    if n == 0 {
        return Err(Error::OutOfRange("sample size must be positive".into()));
    }
    let shifts: Vec<Rational> = (0..n as u64).into_par_iter().map(|i| mc_shift(seed, i)).collect();
    Ok(EmpiricalLaw::from_locations(horizon, &locate_shifts(g, locator, horizon, &shifts)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AtomErrors {
    pub zero: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub inf: f64,
}

impl AtomErrors {
    pub fn max(&self) -> f64 {
        self.zero.max(self.horizon).max(self.inf)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// KS distance between the normalized continuous parts.
    pub ks_distance: f64,
    pub atom_errors: AtomErrors,
    pub tol_ks: f64,
    pub tol_atom: f64,
    pub ks_pass: bool,
    pub atoms_pass: bool,
    pub pass: bool,
}

/// Conditional CDF of the continuous part of `law` on `(0, T)`, in `f64`.
pub struct ContinuousCdf {
    breakpoints: Vec<f64>,
    cumulative: Vec<f64>,
    intercepts: Vec<f64>,
    slopes: Vec<f64>,
    total: f64,
}

impl ContinuousCdf {
    pub fn new(law: &LocationLaw) -> Self {
        let f = law.density();
        let breakpoints: Vec<f64> = f.breakpoints().iter().map(to_f64).collect();
        let mut cumulative = vec![0.0];
        let mut acc = Rational::zero();
        for c in 0..f.cells() {
            let (lo, hi) = f.cell_bounds(c);
            acc += f.segments()[c].integral(lo, hi);
            cumulative.push(to_f64(&acc));
        }
        Self {
            breakpoints,
            total: to_f64(&acc),
            cumulative,
            intercepts: f.segments().iter().map(|s| to_f64(&s.intercept)).collect(),
            slopes: f.segments().iter().map(|s| to_f64(&s.slope)).collect(),
        }
    }

    /// `∫_0^t f / ∫_0^T f`, or 0 when the density vanishes.
    pub fn at(&self, t: f64) -> f64 {
        if self.total == 0.0 {
            return 0.0;
        }
        let k = self.intercepts.len();
        if t <= 0.0 {
            return 0.0;
        }
        if t >= self.breakpoints[k] {
            return 1.0;
        }
        let c = (self.breakpoints.partition_point(|x| *x <= t) - 1).min(k - 1);
        let x0 = self.breakpoints[c];
        let part = self.intercepts[c] * (t - x0) + self.slopes[c] * (t * t - x0 * x0) / 2.0;
        ((self.cumulative[c] + part) / self.total).clamp(0.0, 1.0)
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}

/// KS distance between the sorted sample and a continuous CDF.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let m = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let before = i as f64 / m;
        while i < sorted.len() && sorted[i] == x {
            i += 1;
        }
        let after = i as f64 / m;
        let g = cdf(x);
        d = d.max((g - before).abs()).max((after - g).abs());
    }
    d
}

pub fn compare(target: &LocationLaw, emp: &EmpiricalLaw, tol_ks: f64, tol_atom: f64) -> Result<ComparisonReport> {
    if target.horizon() != emp.horizon {
        return Err(Error::MismatchedHorizon);
    }
    let cdf = ContinuousCdf::new(target);
    let ks_distance = match (cdf.total() > 0.0, emp.interior.is_empty()) {
        (false, true) => 0.0,
        (true, false) => ks_statistic(&emp.interior, |t| cdf.at(t)),
        _ => 1.0,
    };
    let atom_errors = AtomErrors {
        zero: (emp.freq_zero() - to_f64(&target.atom_zero())).abs(),
        horizon: (emp.freq_horizon() - to_f64(&target.atom_horizon())).abs(),
        inf: (emp.freq_infinity() - to_f64(&target.atom_infinity())).abs(),
    };
    let ks_pass = ks_distance <= tol_ks;
    let atoms_pass = atom_errors.max() <= tol_atom;
    Ok(ComparisonReport {
        ks_distance,
        atom_errors,
        tol_ks,
        tol_atom,
        ks_pass,
        atoms_pass,
        pass: ks_pass && atoms_pass,
    })
}
