//! Seeded Monte Carlo engine.
//!
//! Two samplers share one move law:
//!
//! * [`run_excursion`] steps one edge at a time and records every visit.
//! * The block sampler is used on orientations that are sign-constant on each
//!   half-plane and have no drift. From height `h ≠ 0` it takes `B` vertical moves
//!   at once, with `B` small enough that neither row 0 nor a protected row can be
//!   reached. The height changes by `2·Bin(B, 1/2) − B`, and the number of
//!   horizontal moves interleaved with them is negative binomial (Gamma–Poisson
//!   mixture). This is exact in law for everything observed off the protected rows.
//!
//! Estimators split their episodes into chunks (see [`crate::rng`]) and reduce
//! in chunk order, so results are bit-identical for a given seed.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{out_degree, LatticePoint, Orientation, WalkParams, ZeroRow};
use crate::rng::{par_chunks, SeededStream};

/// Smallest block worth three distribution draws.
const MIN_BLOCK: i64 = 16;

/// Default per-episode step budget.
pub const DEFAULT_HORIZON: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub start: LatticePoint,
    /// First time `≥ 1` at which the walk is on row 0; the number of simulated
    /// steps when truncated.
    pub tau1: u64,
    /// Horizontal coordinate at `tau1` (position at the horizon when truncated).
    pub x_sigma1: i64,
    /// Visits during times `0..tau1`, time 0 included.
    pub visits: BTreeMap<LatticePoint, u64>,
    pub truncated: bool,
    pub horizontal_moves: u64,
    pub vertical_moves: u64,
    /// Self-loop or drift "stay" moves on rows with `ε = 0`.
    pub stay_moves: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    /// Episodes that hit the horizon and were excluded.
    pub truncated: u64,
}

impl EstimateWithError {
    pub fn exact(value: f64, n_samples: u64) -> Self {
        EstimateWithError {
            value,
            std_error: 0.0,
            n_samples,
            truncated: 0,
        }
    }

    pub fn truncation_rate(&self) -> f64 {
        self.truncated as f64 / (self.n_samples + self.truncated).max(1) as f64
    }
}

/// Common Monte Carlo budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McBudget {
    pub n_walks: u64,
    pub horizon: u64,
    pub seed: u64,
}

impl McBudget {
    pub fn new(n_walks: u64, horizon: u64, seed: u64) -> Self {
        McBudget { n_walks, horizon, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_walks == 0 {
            return Err(Error::validation("n_walks must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::validation("horizon must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sumsq: f64,
    truncated: u64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sumsq += v * v;
    }

    fn merge(mut self, o: &Moments) -> Moments {
        self.n += o.n;
        self.sum += o.sum;
        self.sumsq += o.sumsq;
        self.truncated += o.truncated;
        self
    }

    fn reduce(parts: &[Moments]) -> Moments {
        parts.iter().fold(Moments::default(), |a, b| a.merge(b))
    }

    fn estimate(&self) -> Result<EstimateWithError> {
        if self.n == 0 {
            return Err(Error::Diagnostic(format!(
                "no completed episodes ({} truncated)",
                self.truncated
            )));
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sumsq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Ok(EstimateWithError {
            value: mean,
            std_error: (var / n).sqrt(),
            n_samples: self.n,
            truncated: self.truncated,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Up,
    Down,
    Side,
    Stay,
}

fn draw_move<R: RngCore + ?Sized>(y: i64, o: &Orientation, w: &WalkParams, rng: &mut R) -> (Move, i64) {
    let e = o.epsilon(y) as i64;
    let u: f64 = rng.gen();
    let side = if e == 0 { Move::Stay } else { Move::Side };
    let m = match &w.drift {
        None => {
            if e == 0 && o.zero_row == ZeroRow::NoEdge {
                if u < 0.5 {
                    Move::Up
                } else {
                    Move::Down
                }
            } else {
                match (u * 3.0) as u32 {
                    0 => Move::Up,
                    1 => Move::Down,
                    _ => side,
                }
            }
        }
        Some(d) => {
            let r = d.row(y);
            if u < r.p {
                side
            } else if u < r.p + r.q {
                Move::Up
            } else {
                Move::Down
            }
        }
    };
    (m, e)
}

/// One transition of the walk.
pub fn step(u: LatticePoint, o: &Orientation, w: &WalkParams, rng: &mut SeededStream) -> Result<LatticePoint> {
    if out_degree(u, o) == 0 {
        return Err(Error::Structural { point: u });
    }
    let (m, e) = draw_move(u.v2, o, w, rng);
    Ok(apply(u, m, e))
}

fn apply(u: LatticePoint, m: Move, e: i64) -> LatticePoint {
    match m {
        Move::Up => LatticePoint::new(u.v1, u.v2 + 1),
        Move::Down => LatticePoint::new(u.v1, u.v2 - 1),
        Move::Side => LatticePoint::new(u.v1 + e, u.v2),
        Move::Stay => u,
    }
}

/// Whether the block sampler is exact for this walk.
pub fn fast_path_available(o: &Orientation, w: &WalkParams) -> bool {
    w.drift.is_none() && o.is_half_plane_constant()
}

struct Walker<'a> {
    o: &'a Orientation,
    w: &'a WalkParams,
    fast: bool,
    pos: LatticePoint,
    steps: u64,
    hmoves: u64,
    vmoves: u64,
    stays: u64,
}

impl<'a> Walker<'a> {
    fn new(start: LatticePoint, o: &'a Orientation, w: &'a WalkParams, allow_fast: bool) -> Self {
        Walker {
            o,
            w,
            fast: allow_fast && fast_path_available(o, w),
            pos: start,
            steps: 0,
            hmoves: 0,
            vmoves: 0,
            stays: 0,
        }
    }

    fn single<R: RngCore + ?Sized>(&mut self, rng: &mut R) {
        let (m, e) = draw_move(self.pos.v2, self.o, self.w, rng);
        match m {
            Move::Up | Move::Down => self.vmoves += 1,
            Move::Side => self.hmoves += 1,
            Move::Stay => self.stays += 1,
        }
        self.pos = apply(self.pos, m, e);
        self.steps += 1;
    }

    /// Vertical moves that cannot touch row 0 or the protected row.
    fn room(&self, guard: Option<i64>) -> i64 {
        let h = self.pos.v2;
        if h == 0 {
            return 0;
        }
        let mut room = h.abs() - 1;
        if let Some(g) = guard {
            if g.signum() == h.signum() {
                room = room.min((h - g).abs() - 1);
            }
        }
        room
    }

    /// A block move when there is room for enough vertical moves to beat single
    /// steps on cost, else one step.
    fn advance<R: RngCore + ?Sized>(&mut self, rng: &mut R, guard: Option<i64>) {
        if self.fast {
            let room = self.room(guard);
            if room >= MIN_BLOCK {
                self.block(rng, room as u64);
                return;
            }
        }
        self.single(rng);
    }

    fn block<R: RngCore + ?Sized>(&mut self, rng: &mut R, b: u64) {
        let ups = Binomial::new(b, 0.5).expect("valid binomial").sample(rng);
        let dv = 2 * ups as i64 - b as i64;
        // horizontal moves between b vertical ones: NegBin(b, 2/3) as Poisson(Gamma(b, 1/2))
        let lambda = Gamma::new(b as f64, 0.5).expect("valid gamma").sample(rng);
        let hk = if lambda > 0.0 {
            Poisson::new(lambda).expect("valid poisson").sample(rng) as u64
        } else {
            0
        };
        let e = self.o.epsilon(self.pos.v2) as i64;
        self.pos = LatticePoint::new(self.pos.v1 + e * hk as i64, self.pos.v2 + dv);
        self.steps += b + hk;
        self.vmoves += b;
        self.hmoves += hk;
    }
}

/// Simulates one excursion step by step, recording visits.
pub fn run_excursion(
    start: LatticePoint,
    o: &Orientation,
    w: &WalkParams,
    rng: &mut SeededStream,
    horizon: u64,
) -> Result<EpisodeStats> {
    if horizon == 0 {
        return Err(Error::validation("horizon must be at least 1"));
    }
    let mut wk = Walker::new(start, o, w, false);
    let mut visits = BTreeMap::new();
    *visits.entry(start).or_insert(0) += 1;
    let mut truncated = true;
    while wk.steps < horizon {
        wk.single(rng);
        if wk.pos.v2 == 0 {
            truncated = false;
            break;
        }
        if wk.steps < horizon {
            *visits.entry(wk.pos).or_insert(0) += 1;
        }
    }
    Ok(EpisodeStats {
        start,
        tau1: wk.steps,
        x_sigma1: wk.pos.v1,
        visits,
        truncated,
        horizontal_moves: wk.hmoves,
        vertical_moves: wk.vmoves,
        stay_moves: wk.stays,
    })
}

/// Where and when an excursion first reaches row 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint {
    pub tau1: u64,
    pub x_sigma1: i64,
    pub truncated: bool,
    pub horizontal_moves: u64,
    pub vertical_moves: u64,
}

/// Endpoint of one excursion, using block moves when exact.
pub fn excursion_endpoint<R: RngCore + ?Sized>(
    start: LatticePoint,
    o: &Orientation,
    w: &WalkParams,
    rng: &mut R,
    horizon: u64,
) -> Endpoint {
    let mut wk = Walker::new(start, o, w, true);
    let mut truncated = true;
    while wk.steps < horizon {
        wk.advance(rng, None);
        if wk.pos.v2 == 0 {
            truncated = false;
            break;
        }
    }
    Endpoint {
        tau1: wk.steps,
        x_sigma1: wk.pos.v1,
        truncated,
        horizontal_moves: wk.hmoves,
        vertical_moves: wk.vmoves,
    }
}

/// Endpoints of `n_walks` excursions from `start`, in episode order.
pub fn simulate_endpoints(
    start: LatticePoint,
    o: &Orientation,
    w: &WalkParams,
    budget: McBudget,
) -> Result<Vec<Endpoint>> {
    budget.validate()?;
    o.validate()?;
    w.validate()?;
    let parts = par_chunks(budget.seed, "endpoints", budget.n_walks, |rng, count| {
        (0..count)
            .map(|_| excursion_endpoint(start, o, w, rng, budget.horizon))
            .collect::<Vec<_>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

/// Samples of `X_{σ₁}` from `(0,0)`; truncated episodes are dropped and counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XSigmaSample {
    pub values: Vec<i64>,
    pub truncated: u64,
}

pub fn sample_x_sigma1(o: &Orientation, w: &WalkParams, budget: McBudget) -> Result<XSigmaSample> {
    let eps = simulate_endpoints(LatticePoint::ORIGIN, o, w, budget)?;
    let truncated = eps.iter().filter(|e| e.truncated).count() as u64;
    let values = eps.iter().filter(|e| !e.truncated).map(|e| e.x_sigma1).collect();
    Ok(XSigmaSample { values, truncated })
}

/// One empirical characteristic-function value with per-component standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfPoint {
    pub t: f64,
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
}

/// `(1/N) Σ e^{i t x_k}` at each grid point. Standard errors are the sample
/// standard deviations of `cos(t x)` and `sin(t x)` over `sqrt N`.
pub fn empirical_cf(samples: &[i64], t_grid: &[f64]) -> Result<Vec<CfPoint>> {
    if samples.is_empty() {
        return Err(Error::validation("empirical_cf needs at least one sample"));
    }
    // exact integer histogram first; sums over distinct values are cheaper and order-independent
    let mut hist: BTreeMap<i64, u64> = BTreeMap::new();
    for &x in samples {
        *hist.entry(x).or_insert(0) += 1;
    }
    let n = samples.len() as f64;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let (mut sc, mut ss, mut sc2, mut ss2) = (0.0, 0.0, 0.0, 0.0);
            for (&x, &c) in &hist {
                let (s, co) = (t * x as f64).sin_cos();
                let c = c as f64;
                sc += c * co;
                ss += c * s;
                sc2 += c * co * co;
                ss2 += c * s * s;
            }
            let (mc, ms) = (sc / n, ss / n);
            let se = |m2: f64, m: f64| {
                if samples.len() > 1 {
                    ((m2 / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt()
                } else {
                    0.0
                }
            };
            let value = if t == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(mc, ms)
            };
            CfPoint {
                t,
                value,
                se_re: se(sc2, mc),
                se_im: se(ss2, ms),
            }
        })
        .collect())
}

/// Expected visits to `y` at times `0..horizon` by the walk started at `x`.
///
/// Visits after the horizon are not counted, so the estimate is biased low.
pub fn estimate_green(
    x: LatticePoint,
    y: LatticePoint,
    o: &Orientation,
    w: &WalkParams,
    budget: McBudget,
) -> Result<EstimateWithError> {
    budget.validate()?;
    let parts = par_chunks(budget.seed, "green", budget.n_walks, |rng, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            let mut wk = Walker::new(x, o, w, true);
            let mut hits = (x == y) as u64;
            while wk.steps < budget.horizon {
                wk.advance(rng, Some(y.v2));
                if wk.pos == y && wk.steps < budget.horizon {
                    hits += 1;
                }
            }
            m.push(hits as f64);
        }
        m
    });
    Moments::reduce(&parts).estimate()
}

/// `E^h(x^T)` for the chain on ℕ that steps down with probability 1/3 and
/// otherwise stays, absorbed at 0.
pub fn estimate_death_chain_pgf(x: f64, h: u32, n_walks: u64, seed: u64) -> Result<EstimateWithError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::validation(format!("x={x} must lie in (0,1)")));
    }
    if n_walks == 0 {
        return Err(Error::validation("n_walks must be at least 1"));
    }
    if h == 0 {
        return Ok(EstimateWithError::exact(1.0, n_walks));
    }
    let parts = par_chunks(seed, "death-chain", n_walks, |rng, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            let mut level = h;
            let mut t: i32 = 0;
            while level > 0 {
                t += 1;
                if rng.gen::<f64>() < 1.0 / 3.0 {
                    level -= 1;
                }
            }
            m.push(x.powi(t));
        }
        m
    });
    Moments::reduce(&parts).estimate()
}

/// `g_u(y₂)`: probability that the walk from `(y1, u)` visits the site `(y1, y2)`
/// before `τ₁`, conditioned on `M⁽¹⁾_{τ₁} ≥ y1`.
///
/// Reaching `(y1, y2)` requires a purely vertical path from height `u`, because
/// horizontal moves within a half-plane never come back to column `y1` before
/// `τ₁`. The conditioning is done by rejection.
pub fn estimate_hitting_prob_gu(u: i64, y2: i64, y1: i64, budget: McBudget) -> Result<EstimateWithError> {
    budget.validate()?;
    if u < 0 || y2 < 0 {
        return Err(Error::validation("g_u needs u >= 0 and y2 >= 0"));
    }
    let o = Orientation::half_plane();
    let w = WalkParams::simple();
    if u == y2 {
        return Ok(EstimateWithError::exact(1.0, budget.n_walks));
    }
    let target = LatticePoint::new(y1, y2);
    // (accepted, hits, truncated)
    let parts = par_chunks(budget.seed, "g_u", budget.n_walks, |rng, count| {
        let mut acc = (0u64, 0u64, 0u64);
        for _ in 0..count {
            let mut wk = Walker::new(LatticePoint::new(y1, u), &o, &w, true);
            let mut hit: Option<bool> = None;
            let mut cond: Option<bool> = None;
            loop {
                if wk.steps >= budget.horizon {
                    break;
                }
                let guard = if hit.is_none() { Some(y2) } else { None };
                wk.advance(rng, guard);
                let p = wk.pos;
                if p.v2 == 0 {
                    hit.get_or_insert(false);
                    cond.get_or_insert(p.v1 >= y1);
                }
                if hit.is_none() {
                    if p == target {
                        hit = Some(true);
                    } else if p.v1 != y1 {
                        hit = Some(false);
                    }
                }
                if cond.is_none() {
                    if p.v2 > 0 && p.v1 >= y1 {
                        cond = Some(true);
                    } else if p.v2 < 0 && p.v1 < y1 {
                        cond = Some(false);
                    }
                }
                if let (Some(h), Some(c)) = (hit, cond) {
                    if c {
                        acc.0 += 1;
                        acc.1 += h as u64;
                    }
                    break;
                }
            }
            if hit.is_none() || cond.is_none() {
                acc.2 += 1;
            }
        }
        acc
    });
    let (accepted, hits, truncated) = parts
        .iter()
        .fold((0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let rate = accepted as f64 / budget.n_walks as f64;
    if rate < 1e-4 {
        return Err(Error::Diagnostic(format!(
            "conditioning event accepted in {accepted} of {} episodes (rate {rate:.2e} < 1e-4); \
             raise n_walks or choose a less extreme (u, y2)",
            budget.n_walks
        )));
    }
    let p = hits as f64 / accepted as f64;
    Ok(EstimateWithError {
        value: p,
        std_error: (p * (1.0 - p) / accepted as f64).sqrt(),
        n_samples: accepted,
        truncated,
    })
}

/// Empirical law of the first row-0 position from `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingSample {
    pub counts: BTreeMap<i64, u64>,
    pub completed: u64,
    pub truncated: u64,
}

impl HittingSample {
    /// Masses over completed episodes; they sum to 1.
    pub fn frequencies(&self) -> BTreeMap<i64, f64> {
        let n = self.completed as f64;
        self.counts.iter().map(|(&v, &c)| (v, c as f64 / n)).collect()
    }
}

pub fn mc_hitting_law(y: LatticePoint, o: &Orientation, w: &WalkParams, budget: McBudget) -> Result<HittingSample> {
    let eps = simulate_endpoints(y, o, w, budget)?;
    let mut counts = BTreeMap::new();
    let mut truncated = 0;
    for e in &eps {
        if e.truncated {
            truncated += 1;
        } else {
            *counts.entry(e.x_sigma1).or_insert(0u64) += 1;
        }
    }
    Ok(HittingSample {
        counts,
        completed: eps.len() as u64 - truncated,
        truncated,
    })
}

/// Heights at which the walk from `x` first reaches column `y1` before `τ₁`.
///
/// Episodes that return to the axis first contribute to no height, so the
/// frequencies `counts[u]/n_walks` estimate the defective law `μ_x(u)`. A start
/// on the axis is excluded by definition and yields no counts.
pub fn mc_mu(x: LatticePoint, y1: i64, budget: McBudget) -> Result<HittingSample> {
    budget.validate()?;
    if x.v2 < 0 || y1 <= x.v1 {
        return Err(Error::validation("mu needs x2 >= 0 and y1 > x1"));
    }
    if x.v2 == 0 {
        return Ok(HittingSample {
            counts: BTreeMap::new(),
            completed: budget.n_walks,
            truncated: 0,
        });
    }
    let o = Orientation::half_plane();
    let w = WalkParams::simple();
    let parts = par_chunks(budget.seed, "mu", budget.n_walks, |rng, count| {
        let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
        let mut truncated = 0u64;
        for _ in 0..count {
            let mut wk = Walker::new(x, &o, &w, false);
            loop {
                if wk.steps >= budget.horizon {
                    truncated += 1;
                    break;
                }
                wk.single(rng);
                if wk.pos.v2 == 0 {
                    break;
                }
                if wk.pos.v1 == y1 {
                    *counts.entry(wk.pos.v2).or_insert(0) += 1;
                    break;
                }
            }
        }
        (counts, truncated)
    });
    let mut counts = BTreeMap::new();
    let mut truncated = 0;
    for (c, t) in parts {
        truncated += t;
        for (k, v) in c {
            *counts.entry(k).or_insert(0u64) += v;
        }
    }
    Ok(HittingSample {
        counts,
        completed: budget.n_walks - truncated,
        truncated,
    })
}

/// `E^x(η_{0,τ₁}(y))`: mean number of visits to `y` at times `0..τ₁`.
///
/// Exactly 0 when `x` and `y` lie in opposite open half-planes. On the
/// half-plane lattice an episode stops as soon as no further visit to `y` is
/// possible before `τ₁`; such episodes are complete, not truncated.
pub fn occupation_before_return(
    x: LatticePoint,
    y: LatticePoint,
    o: &Orientation,
    w: &WalkParams,
    budget: McBudget,
) -> Result<EstimateWithError> {
    let prune = o.is_half_plane_lattice() && w.drift.is_none();
    occupation_impl(x, y, o, w, budget, prune)
}

fn occupation_impl(
    x: LatticePoint,
    y: LatticePoint,
    o: &Orientation,
    w: &WalkParams,
    budget: McBudget,
    prune: bool,
) -> Result<EstimateWithError> {
    budget.validate()?;
    if x.v2 * y.v2 < 0 {
        return Ok(EstimateWithError::exact(0.0, budget.n_walks));
    }
    let parts = par_chunks(budget.seed, "occupation", budget.n_walks, |rng, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            let mut wk = Walker::new(x, o, w, true);
            let mut hits = (x == y) as u64;
            let mut done = false;
            while wk.steps < budget.horizon {
                wk.advance(rng, Some(y.v2));
                let p = wk.pos;
                if p.v2 == 0 {
                    done = true;
                    break;
                }
                if p == y {
                    hits += 1;
                }
                if prune {
                    let unreachable = y.v2 == 0
                        || p.v2.signum() != y.v2.signum()
                        || (p.v2 > 0 && p.v1 > y.v1)
                        || (p.v2 < 0 && p.v1 < y.v1);
                    if unreachable {
                        done = true;
                        break;
                    }
                }
            }
            if done {
                m.push(hits as f64);
            } else {
                m.truncated += 1;
            }
        }
        m
    });
    let est = Moments::reduce(&parts).estimate()?;
    if est.truncation_rate() > 1e-3 {
        return Err(Error::Diagnostic(format!(
            "truncation rate {:.3e} exceeds 1e-3 (horizon {}); raise the horizon",
            est.truncation_rate(),
            budget.horizon
        )));
    }
    Ok(est)
}

/// CSV episode log: `episode_id,tau1,x_sigma1,truncated`.
pub fn write_episode_csv<W: Write>(mut out: W, episodes: &[Endpoint]) -> std::io::Result<()> {
    writeln!(out, "episode_id,tau1,x_sigma1,truncated")?;
    for (i, e) in episodes.iter().enumerate() {
        writeln!(out, "{i},{},{},{}", e.tau1, e.x_sigma1, e.truncated)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::CfModel;
    use crate::lattice::DriftProfile;

    fn h() -> Orientation {
        Orientation::half_plane()
    }

    fn srw() -> WalkParams {
        WalkParams::simple()
    }

    #[test]
    fn step_support() {
        let mut rng = SeededStream::new(1, 0);
        for _ in 0..200 {
            let v = step(LatticePoint::ORIGIN, &h(), &srw(), &mut rng).unwrap();
            assert!(v == LatticePoint::new(0, 1) || v == LatticePoint::new(0, -1));
            let v = step(LatticePoint::new(0, 5), &h(), &srw(), &mut rng).unwrap();
            assert!([LatticePoint::new(0, 6), LatticePoint::new(0, 4), LatticePoint::new(1, 5)].contains(&v));
        }
    }

    #[test]
    fn step_deterministic() {
        let run = || {
            let mut rng = SeededStream::new(7, 0);
            let mut p = LatticePoint::ORIGIN;
            (0..50)
                .map(|_| {
                    p = step(p, &h(), &srw(), &mut rng).unwrap();
                    p
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn step_frequencies_follow_kernel() {
        let mut rng = SeededStream::new(3, 0);
        let n = 60_000;
        let mut side = 0;
        for _ in 0..n {
            if step(LatticePoint::new(0, 2), &h(), &srw(), &mut rng).unwrap() == LatticePoint::new(1, 2) {
                side += 1;
            }
        }
        let f = side as f64 / n as f64;
        assert!((f - 1.0 / 3.0).abs() < 4.0 * (2.0 / 9.0 / n as f64).sqrt());
    }

    #[test]
    fn excursion_structure() {
        let mut rng = SeededStream::new(5, 0);
        for _ in 0..2000 {
            let ep = run_excursion(LatticePoint::ORIGIN, &h(), &srw(), &mut rng, 1_000_000).unwrap();
            if ep.truncated {
                continue;
            }
            assert!(ep.tau1 >= 2);
            assert_eq!(ep.visits.values().sum::<u64>(), ep.tau1);
            assert_eq!(ep.tau1, ep.horizontal_moves + ep.vertical_moves + ep.stay_moves);
            assert_eq!(ep.visits.get(&LatticePoint::ORIGIN), Some(&1));
        }
    }

    #[test]
    fn excursion_truncation_is_flagged() {
        let mut rng = SeededStream::new(9, 0);
        let mut seen = false;
        for _ in 0..200 {
            let ep = run_excursion(LatticePoint::new(0, 50), &h(), &srw(), &mut rng, 10).unwrap();
            assert!(ep.truncated);
            assert_eq!(ep.tau1, 10);
            assert_eq!(ep.visits.values().sum::<u64>(), 10);
            seen = true;
        }
        assert!(seen);
        assert!(run_excursion(LatticePoint::ORIGIN, &h(), &srw(), &mut rng, 0).is_err());
    }

    #[test]
    fn self_loop_variant_runs() {
        let o = h().with_zero_row(ZeroRow::SelfLoop);
        let mut rng = SeededStream::new(2, 0);
        let mut stays = 0;
        for _ in 0..300 {
            let ep = run_excursion(LatticePoint::ORIGIN, &o, &srw(), &mut rng, 100_000).unwrap();
            if ep.tau1 == 1 {
                stays += 1;
                assert_eq!(ep.stay_moves, 1);
            }
        }
        // a third of the first steps are loops
        assert!((60..140).contains(&stays), "{stays}");
    }

    #[test]
    fn drifted_walk_uses_generic_path() {
        let w = srw().with_drift(DriftProfile::constant(0.2, 0.3).unwrap()).unwrap();
        assert!(!fast_path_available(&h(), &w));
        let mut rng = SeededStream::new(2, 0);
        let ep = run_excursion(LatticePoint::new(0, 1), &h(), &w, &mut rng, 100_000).unwrap();
        assert!(ep.truncated || ep.x_sigma1 >= 0);
    }

    /// The block sampler and the step sampler agree in law on (τ₁, X_{σ₁}).
    #[test]
    fn block_sampler_matches_step_sampler() {
        let start = LatticePoint::new(0, 6);
        let n = 20_000;
        let horizon = 200;
        let mut a = SeededStream::new(21, 0);
        let mut b = SeededStream::new(21, 1);
        let (mut xs_step, mut xs_fast) = (Vec::new(), Vec::new());
        let (mut tr_step, mut tr_fast) = (0, 0);
        for _ in 0..n {
            let e = run_excursion(start, &h(), &srw(), &mut a, horizon).unwrap();
            if e.truncated {
                tr_step += 1;
            } else {
                xs_step.push(e.x_sigma1 as f64);
            }
            let f = excursion_endpoint(start, &h(), &srw(), &mut b, horizon);
            if f.truncated {
                tr_fast += 1;
            } else {
                xs_fast.push(f.x_sigma1 as f64);
            }
        }
        // truncation at a fixed horizon is a probability; compare as proportions
        let (p1, p2) = (tr_step as f64 / n as f64, tr_fast as f64 / n as f64);
        let se = ((p1 * (1.0 - p1) + p2 * (1.0 - p2)) / n as f64).sqrt();
        assert!((p1 - p2).abs() < 4.0 * se, "{p1} vs {p2}");
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let sd = |v: &[f64]| {
            let m = mean(v);
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
        };
        let se = (sd(&xs_step).powi(2) / xs_step.len() as f64 + sd(&xs_fast).powi(2) / xs_fast.len() as f64).sqrt();
        assert!((mean(&xs_step) - mean(&xs_fast)).abs() < 4.0 * se);
    }

    #[test]
    fn x_sigma1_is_symmetric() {
        let s = sample_x_sigma1(&h(), &srw(), McBudget::new(100_000, 10_000_000, 4)).unwrap();
        let n = s.values.len() as f64;
        // heavy tails: compare with the sign test instead of the mean
        let pos = s.values.iter().filter(|&&x| x > 0).count() as f64;
        let neg = s.values.iter().filter(|&&x| x < 0).count() as f64;
        assert!((pos - neg).abs() < 4.0 * (pos + neg).sqrt());
        let cf = empirical_cf(&s.values, &[0.3, 1.0, 2.5]).unwrap();
        for p in &cf {
            assert!(p.value.im.abs() < 4.0 * p.se_im.max(1.0 / n));
        }
    }

    #[test]
    fn empirical_cf_matches_walk_model() {
        let s = sample_x_sigma1(&h(), &srw(), McBudget::new(100_000, 10_000_000, 8)).unwrap();
        let m = CfModel::walk();
        for p in empirical_cf(&s.values, &[0.5, 1.0, 2.0, 3.0]).unwrap() {
            assert!((p.value.re - m.phi(p.t)).abs() < 4.0 * p.se_re + 1e-3, "t={}", p.t);
        }
    }

    #[test]
    fn empirical_cf_basics() {
        assert!(empirical_cf(&[], &[0.0]).is_err());
        let cf = empirical_cf(&[3, -7, 12], &[0.0]).unwrap();
        assert_eq!(cf[0].value, Complex64::new(1.0, 0.0));
        let cf = empirical_cf(&[0, 0, 0], &[0.7, 2.0]).unwrap();
        for p in cf {
            assert_eq!(p.value, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn estimate_green_conventions() {
        let b = McBudget::new(500, 2000, 1);
        let g = estimate_green(LatticePoint::ORIGIN, LatticePoint::ORIGIN, &h(), &srw(), b).unwrap();
        assert!(g.value >= 1.0);
        let g = estimate_green(LatticePoint::new(0, 1), LatticePoint::new(-1, 1), &h(), &srw(), b).unwrap();
        assert!(g.value >= 0.0 && g.value.is_finite());
    }

    #[test]
    fn estimate_green_bounded_increasing_in_horizon() {
        let vals: Vec<EstimateWithError> = [1_000u64, 10_000, 100_000]
            .iter()
            .map(|&hz| {
                estimate_green(LatticePoint::ORIGIN, LatticePoint::ORIGIN, &h(), &srw(), McBudget::new(4000, hz, 3))
                    .unwrap()
            })
            .collect();
        for w in vals.windows(2) {
            assert!(w[0].value <= w[1].value + 3.0 * (w[0].std_error + w[1].std_error), "{vals:?}");
        }
        assert!(vals[2].value < 10.0);
    }

    #[test]
    fn death_chain_estimates() {
        assert_eq!(estimate_death_chain_pgf(0.5, 0, 10, 1).unwrap().value, 1.0);
        for (hh, exact) in [(1, 0.25), (2, 0.0625)] {
            let e = estimate_death_chain_pgf(0.5, hh, 200_000, 5).unwrap();
            assert!((e.value - exact).abs() < 3.5 * e.std_error, "{e:?}");
        }
        assert!(estimate_death_chain_pgf(1.0, 1, 10, 1).is_err());
    }

    #[test]
    fn gu_bounds_and_trivial_case() {
        let b = McBudget::new(200_000, 10_000_000, 17);
        assert_eq!(estimate_hitting_prob_gu(2, 2, 0, b).unwrap().value, 1.0);
        let e = estimate_hitting_prob_gu(0, 3, 0, b).unwrap();
        assert!(e.value <= 0.125 + 3.0 * e.std_error);
        // exact under the operational reading: (1/2)(1/8) / (1/2 + ν(0)/2), ν(0) = (3 - sqrt 5)/2
        let nu0 = (3.0 - 5f64.sqrt()) / 2.0;
        let exact = 0.0625 / (0.5 + 0.5 * nu0);
        assert!((e.value - exact).abs() < 4.0 * e.std_error, "{} vs {exact}", e.value);
        let vals: Vec<EstimateWithError> = (2..=4).map(|y2| estimate_hitting_prob_gu(1, y2, 5, b).unwrap()).collect();
        for w in vals.windows(2) {
            assert!(w[1].value <= w[0].value + 3.0 * (w[0].std_error + w[1].std_error));
        }
    }

    #[test]
    fn hitting_law_from_height_one() {
        let s = mc_hitting_law(LatticePoint::new(0, 1), &h(), &srw(), McBudget::new(100_000, 10_000_000, 6)).unwrap();
        let f = s.frequencies();
        assert!((f.values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(f.keys().all(|&v| v >= 0));
        // P(no horizontal move before the first vertical step down-and-stay) = ν(0) = (3 - sqrt 5)/2
        let nu0 = (3.0 - 5f64.sqrt()) / 2.0;
        let se = (nu0 * (1.0 - nu0) / s.completed as f64).sqrt();
        assert!((f[&0] - nu0).abs() < 4.0 * se);
    }

    #[test]
    fn occupation_rules() {
        let b = McBudget::new(10_000, 1_000_000, 2);
        let z = occupation_before_return(LatticePoint::new(0, 2), LatticePoint::new(0, -2), &h(), &srw(), b).unwrap();
        assert_eq!(z.value, 0.0);
        assert_eq!(z.std_error, 0.0);
        let s = occupation_before_return(LatticePoint::new(1, 1), LatticePoint::new(1, 1), &h(), &srw(), b).unwrap();
        assert!(s.value >= 1.0);
        let vals: Vec<EstimateWithError> = [5, 10, 20]
            .iter()
            .map(|&k| {
                occupation_before_return(LatticePoint::new(0, 1), LatticePoint::new(k, 1), &h(), &srw(), b).unwrap()
            })
            .collect();
        for w in vals.windows(2) {
            assert!(w[1].value <= w[0].value + 3.0 * (w[0].std_error + w[1].std_error));
        }
    }

    /// Pruned and unpruned runs estimate the same mean.
    #[test]
    fn occupation_pruning_is_unbiased() {
        let b = McBudget::new(40_000, 1_000_000, 12);
        let x = LatticePoint::new(0, 2);
        let y = LatticePoint::new(2, 3);
        let pruned = occupation_before_return(x, y, &h(), &srw(), b).unwrap();
        let plain = occupation_impl(x, y, &h(), &srw(), McBudget { n_walks: 20_000, horizon: 100_000_000, ..b }, false).unwrap();
        let se = (pruned.std_error.powi(2) + plain.std_error.powi(2)).sqrt();
        assert!((pruned.value - plain.value).abs() < 4.0 * se, "{pruned:?} vs {plain:?}");
    }

    #[test]
    fn estimators_are_deterministic() {
        let b = McBudget::new(5000, 100_000, 42);
        let a = occupation_before_return(LatticePoint::new(0, 1), LatticePoint::new(2, 1), &h(), &srw(), b).unwrap();
        let c = occupation_before_return(LatticePoint::new(0, 1), LatticePoint::new(2, 1), &h(), &srw(), b).unwrap();
        assert_eq!(a.value.to_bits(), c.value.to_bits());
    }

    #[test]
    fn mu_sample_shape() {
        let s = mc_mu(LatticePoint::new(0, 0), 3, McBudget::new(100, 1000, 1)).unwrap();
        assert!(s.counts.is_empty());
        let s = mc_mu(LatticePoint::new(0, 1), 3, McBudget::new(10_000, 100_000, 1)).unwrap();
        assert!(s.counts.keys().all(|&u| u >= 1));
        assert!(mc_mu(LatticePoint::new(0, 1), 0, McBudget::new(1, 1, 1)).is_err());
    }

    #[test]
    fn episode_csv() {
        let eps = simulate_endpoints(LatticePoint::ORIGIN, &h(), &srw(), McBudget::new(3, 1000, 1)).unwrap();
        let mut buf = Vec::new();
        write_episode_csv(&mut buf, &eps).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("episode_id,tau1,x_sigma1,truncated\n0,"));
    }
}
