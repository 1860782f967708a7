//! Martin kernels `K(x, y) = G(x, y)/G(0, y)` of the embedded chain and of the
//! full walk on the half-plane lattice, direction sweeps and the
//! boundary-triviality report.
//!
//! The full kernel is split at the first axis visit `τ₁`:
//! `K(x, y) = E^x(η_{0,τ₁}(y))/G(0, y) + Σ_z ν_x(z) K((z, 0), y)`.
//! The first term is estimated by simulation, the second in closed form.
//! For a start on the axis `τ₁ = 0`, so the first term vanishes and `ν_x = δ_{x₁}`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::CfModel;
use crate::error::{Error, Result};
use crate::green::{folded, gamma, green_halfplane, green_to, QuadratureSpec};
use crate::lattice::{LatticePoint, Orientation, WalkParams};
use crate::simulate::{occupation_before_return, McBudget};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// How the targets of a sweep go to infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SweepMode {
    /// `y₁ = round(λ y₂²)`.
    FixedLambda { lambda: f64 },
    /// `y₁ ≈ |y|`, `y₂ ≈ |y|^{1/3}`, so `y₁/y₂² → ∞`.
    HorizontalDominant,
    /// `y₁` fixed, `y₂ → ∞`.
    VerticalOnly { y1: i64 },
}

impl SweepMode {
    /// Smallest upper-half-plane point of this mode with norm at least `norm`.
    fn point_at(&self, norm: f64) -> LatticePoint {
        let norm = norm.max(1.0);
        match *self {
            SweepMode::FixedLambda { lambda } => {
                let l2 = lambda * lambda;
                let y2 = if l2 == 0.0 {
                    norm
                } else {
                    ((-1.0 + (1.0 + 4.0 * l2 * norm * norm).sqrt()) / (2.0 * l2)).sqrt()
                };
                let mut y2 = (y2.floor() as i64).max(1);
                loop {
                    let p = LatticePoint::new((lambda * (y2 * y2) as f64).round() as i64, y2);
                    if p.norm() >= norm {
                        return p;
                    }
                    y2 += 1;
                }
            }
            SweepMode::HorizontalDominant => {
                let y2 = (norm.cbrt().round() as i64).max(1);
                let y1 = ((norm * norm - (y2 * y2) as f64).max(0.0).sqrt().ceil()) as i64;
                LatticePoint::new(y1, y2)
            }
            SweepMode::VerticalOnly { y1 } => {
                let y2 = ((norm * norm - (y1 * y1) as f64).max(1.0).sqrt().ceil()) as i64;
                LatticePoint::new(y1, y2)
            }
        }
    }

    fn admits(&self, p: LatticePoint) -> bool {
        match *self {
            SweepMode::FixedLambda { lambda } => (p.v1 as f64 - lambda * (p.v2 * p.v2) as f64).abs() <= 0.5,
            SweepMode::HorizontalDominant => p.v2 != 0,
            SweepMode::VerticalOnly { y1 } => p.v1 == y1,
        }
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepMode::FixedLambda { lambda } => write!(f, "lambda={lambda}"),
            SweepMode::HorizontalDominant => write!(f, "horizontal"),
            SweepMode::VerticalOnly { y1 } => write!(f, "vertical={y1}"),
        }
    }
}

/// Accepts `lambda=<real>`, `horizontal` and `vertical=<int>` (or `vertical`
/// for `y₁ = 0`).
impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (key, val) = match s.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (s, None),
        };
        let bad = || Error::validation(format!("cannot parse sweep '{s}'"));
        match (key, val) {
            ("lambda", Some(v)) => {
                let lambda: f64 = v.parse().map_err(|_| bad())?;
                if !lambda.is_finite() {
                    return Err(bad());
                }
                Ok(SweepMode::FixedLambda { lambda })
            }
            ("horizontal", None) => Ok(SweepMode::HorizontalDominant),
            ("vertical", None) => Ok(SweepMode::VerticalOnly { y1: 0 }),
            ("vertical", Some(v)) => Ok(SweepMode::VerticalOnly {
                y1: v.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

/// A direction of escape to infinity and the targets sampled along it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSpec {
    pub mode: SweepMode,
    pub points: Vec<LatticePoint>,
}

impl DirectionSpec {
    /// Checks that the points are nonempty, strictly increasing in norm and
    /// of the declared mode.
    pub fn new(mode: SweepMode, points: Vec<LatticePoint>) -> Result<Self> {
        let d = DirectionSpec { mode, points };
        d.validate()?;
        Ok(d)
    }

    /// `count` targets with norms spaced geometrically over `[norm_min, norm_max]`.
    /// Targets that round to the same point are kept once.
    pub fn generate(mode: SweepMode, norm_min: f64, norm_max: f64, count: usize) -> Result<Self> {
        if !(norm_min >= 1.0 && norm_max >= norm_min) || count == 0 {
            return Err(Error::validation("sweep needs 1 <= norm_min <= norm_max and count >= 1"));
        }
        let mut points: Vec<LatticePoint> = Vec::with_capacity(count);
        for k in 0..count {
            let f = if count == 1 { 1.0 } else { k as f64 / (count - 1) as f64 };
            let p = mode.point_at(norm_min * (norm_max / norm_min).powf(f));
            if points.last().is_none_or(|q| p.norm() > q.norm()) {
                points.push(p);
            }
        }
        DirectionSpec::new(mode, points)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::validation("sweep has no points"));
        }
        for w in self.points.windows(2) {
            if w[1].norm() <= w[0].norm() {
                return Err(Error::validation(format!("sweep norms not increasing at {}", w[1])));
            }
        }
        if let Some(p) = self.points.iter().find(|p| !self.mode.admits(**p)) {
            return Err(Error::validation(format!("point {p} does not follow sweep {}", self.mode)));
        }
        if let (SweepMode::HorizontalDominant, [first, .., last]) = (self.mode, self.points.as_slice()) {
            let ratio = |p: &LatticePoint| p.v1 as f64 / (p.v2 * p.v2) as f64;
            if ratio(last) <= ratio(first) {
                return Err(Error::validation("horizontal-dominant sweep needs y1/y2^2 to grow"));
            }
        }
        Ok(())
    }
}

fn reliable_denominator(value: f64, spec: &QuadratureSpec, what: &str) -> Result<()> {
    if !(value >= 10.0 * spec.abs_tol) {
        return Err(Error::numeric_with(
            format!("{what} denominator {value:.3e} is below 10·abs_tol"),
            Some(value),
            vec![],
        ));
    }
    Ok(())
}

/// `K₀(x, y) = γ(y - x)/γ(y)`, the Martin kernel of the chain embedded in the axis.
pub fn martin_kernel_embedded(x: i64, y: i64, model: &CfModel, spec: &QuadratureSpec) -> Result<f64> {
    let den = gamma(y, model, spec)?;
    reliable_denominator(den, spec, "embedded kernel")?;
    Ok(gamma(y - x, model, spec)? / den)
}

/// Kernel value with an error estimate propagated from the quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Ratio {
    value: f64,
    error: f64,
}

fn ratio(num: f64, num_err: f64, den: f64, den_err: f64) -> Ratio {
    let value = num / den;
    Ratio {
        value,
        error: value.abs() * (num_err / num.abs().max(f64::MIN_POSITIVE) + den_err / den.abs()),
    }
}

/// Visits to `y` from the axis are those of the reversed walk from the mirror
/// image of `y`, so the kernel is a ratio of two [`green_halfplane`] integrals at
/// `(y₁, -y₂)`; the degree factors of [`green_to`] cancel.
fn axis_ratio(z: i64, y: LatticePoint, model: &CfModel, spec: &QuadratureSpec) -> Result<Ratio> {
    let mirrored = LatticePoint::new(y.v1, -y.v2);
    let den = green_halfplane(0, mirrored, model, spec)?;
    reliable_denominator(den.value, spec, "axis kernel")?;
    if z == 0 {
        return Ok(Ratio { value: 1.0, error: 0.0 });
    }
    let num = green_halfplane(z, mirrored, model, spec)?;
    Ok(ratio(num.value, num.error, den.value, den.error))
}

/// `K((z, 0), y) = G((z, 0), y)/G(0, y)`.
pub fn martin_kernel_axis(z: i64, y: LatticePoint, model: &CfModel, spec: &QuadratureSpec) -> Result<f64> {
    Ok(axis_ratio(z, y, model, spec)?.value)
}

fn averaged_ratio(x: LatticePoint, y: LatticePoint, model: &CfModel, spec: &QuadratureSpec) -> Result<Ratio> {
    if x.v2 == 0 {
        return axis_ratio(x.v1, y, model, spec);
    }
    // Σ_z ν_x(z) e^{-itz} = e^{-itx₁} L_{x₂}(-t); after t → -t the mirrored
    // level factor of y becomes L_{y₂}(t)
    let den = green_halfplane(0, LatticePoint::new(y.v1, -y.v2), model, spec)?;
    reliable_denominator(den.value, spec, "averaged kernel")?;
    let shift = (y.v1 - x.v1) as f64;
    let f = |t: f64| (-I * (t * shift)).exp() * model.level(t, x.v2) * model.level(t, y.v2) / model.one_minus_phi(t);
    let num = folded(&f, shift.abs(), x.v2.unsigned_abs() + y.v2.unsigned_abs(), spec)?;
    Ok(ratio(num.value, num.error, den.value, den.error))
}

/// `Σ_z ν_x(z) K((z, 0), y)` as one Fourier integral, without summing over `z`.
pub fn averaged_axis_kernel(x: LatticePoint, y: LatticePoint, model: &CfModel, spec: &QuadratureSpec) -> Result<f64> {
    Ok(averaged_ratio(x, y, model, spec)?.value)
}

/// One evaluation of the full kernel and its two parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullKernel {
    pub y: LatticePoint,
    pub value: f64,
    /// `E^x(η_{0,τ₁}(y))/G(0, y)`.
    pub first_term: f64,
    pub first_term_se: f64,
    /// `Σ_z ν_x(z) K((z, 0), y)`.
    pub second_term: f64,
    /// Monte Carlo standard error plus the quadrature error of both ratios.
    pub error: f64,
}

/// `K(x, y)` for the simple walk on the half-plane lattice.
///
/// The first term is simulated with the simple walk whatever `model` says;
/// `model` only drives the integrals.
pub fn martin_kernel_full(
    x: LatticePoint,
    y: LatticePoint,
    model: &CfModel,
    spec: &QuadratureSpec,
    budget: McBudget,
) -> Result<FullKernel> {
    budget.validate()?;
    let second = averaged_ratio(x, y, model, spec)?;
    let (first_term, first_term_se) = if x.v2 == 0 {
        (0.0, 0.0)
    } else {
        let occ = occupation_before_return(x, y, &Orientation::half_plane(), &WalkParams::simple(), budget)?;
        let g = green_to(0, y, model, spec)?;
        reliable_denominator(2.0 * PI * g, spec, "first term")?;
        (occ.value / g, occ.std_error / g)
    };
    Ok(FullKernel {
        y,
        value: first_term + second.value,
        first_term,
        first_term_se,
        second_term: second.value,
        error: first_term_se + second.error,
    })
}

/// A sweep point whose evaluation failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub y: LatticePoint,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub sweep: DirectionSpec,
    pub points: Vec<FullKernel>,
    pub failures: Vec<PointFailure>,
    /// `max |K - 1|` over the last quartile of the successful points.
    pub sup_deviation: Option<f64>,
    /// Last-quartile deviations nonincreasing within two combined error bars.
    pub tail_monotone: bool,
    /// Every deviation at most the previous one plus two combined error bars.
    pub decreasing: bool,
}

impl SweepReport {
    fn assemble(sweep: DirectionSpec, points: Vec<FullKernel>, failures: Vec<PointFailure>) -> Self {
        let dev: Vec<(f64, f64)> = points.iter().map(|k| ((k.value - 1.0).abs(), k.error)).collect();
        let within = |a: (f64, f64), b: (f64, f64)| b.0 <= a.0 + 2.0 * (a.1 + b.1);
        let n = dev.len();
        let start = n - n.div_ceil(4);
        let tail = &dev[start.min(n)..];
        SweepReport {
            sweep,
            sup_deviation: tail.iter().map(|d| d.0).reduce(f64::max),
            tail_monotone: tail.windows(2).all(|w| within(w[0], w[1])),
            decreasing: dev.windows(2).all(|w| within(w[0], w[1])),
            points,
            failures,
        }
    }
}

/// Full-kernel values along several sweeps from one start point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartinReport {
    pub x: LatticePoint,
    pub model: CfModel,
    pub sweeps: Vec<SweepReport>,
    /// Largest per-sweep `sup_deviation`.
    pub sup_deviation: Option<f64>,
}

impl MartinReport {
    pub fn kernel_values(&self) -> Vec<(LatticePoint, f64)> {
        self.sweeps.iter().flat_map(|s| s.points.iter().map(|k| (k.y, k.value))).collect()
    }

    pub fn first_term_values(&self) -> Vec<(LatticePoint, f64)> {
        self.sweeps.iter().flat_map(|s| s.points.iter().map(|k| (k.y, k.first_term))).collect()
    }

    pub fn failure_count(&self) -> usize {
        self.sweeps.iter().map(|s| s.failures.len()).sum()
    }

    /// Flat CSV `y1,y2,K,first_term,err`, sweeps in order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "y1,y2,K,first_term,err")?;
        for k in self.sweeps.iter().flat_map(|s| &s.points) {
            writeln!(out, "{},{},{:.16e},{:.16e},{:.16e}", k.y.v1, k.y.v2, k.value, k.first_term, k.error)?;
        }
        Ok(())
    }
}

fn point_seed(seed: u64, sweep: usize, point: usize) -> u64 {
    // splitmix64 finalizer over the indices
    let mut z = seed ^ ((sweep as u64) << 32 | point as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Evaluates [`martin_kernel_full`] at every sweep point. A failing point is
/// recorded in its sweep and the remaining points are still evaluated.
pub fn boundary_triviality_report(
    x: LatticePoint,
    sweeps: &[DirectionSpec],
    model: &CfModel,
    spec: &QuadratureSpec,
    budget: McBudget,
) -> Result<MartinReport> {
    if sweeps.is_empty() {
        return Err(Error::validation("no sweeps given"));
    }
    spec.validate()?;
    budget.validate()?;
    for s in sweeps {
        s.validate()?;
    }
    let mut out = Vec::with_capacity(sweeps.len());
    for (si, sweep) in sweeps.iter().enumerate() {
        let mut points = Vec::new();
        let mut failures = Vec::new();
        for (pi, &y) in sweep.points.iter().enumerate() {
            let b = McBudget {
                seed: point_seed(budget.seed, si, pi),
                ..budget
            };
            match martin_kernel_full(x, y, model, spec, b) {
                Ok(k) => points.push(k),
                Err(e) => failures.push(PointFailure { y, message: e.to_string() }),
            }
        }
        out.push(SweepReport::assemble(sweep.clone(), points, failures));
    }
    let sup_deviation = out.iter().filter_map(|s| s.sup_deviation).reduce(f64::max);
    Ok(MartinReport {
        x,
        model: *model,
        sweeps: out,
        sup_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::hitting_law_window;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn budget(n: u64, seed: u64) -> McBudget {
        McBudget::new(n, 100_000, seed)
    }

    #[test]
    fn sweep_modes_parse_and_print() {
        for s in ["lambda=1", "lambda=0.5", "horizontal", "vertical=5", "lambda=-2"] {
            let m: SweepMode = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert_eq!("vertical".parse::<SweepMode>().unwrap(), SweepMode::VerticalOnly { y1: 0 });
        for bad in ["lambda", "lambda=x", "diag", "horizontal=3", "lambda=inf"] {
            assert!(bad.parse::<SweepMode>().is_err(), "{bad}");
        }
    }

    #[test]
    fn generated_points_follow_their_mode() {
        let l1 = DirectionSpec::generate(SweepMode::FixedLambda { lambda: 1.0 }, 100.0, 1e4, 8).unwrap();
        for p in &l1.points {
            assert_eq!(p.v1, p.v2 * p.v2);
        }
        assert!(l1.points.last().unwrap().norm() >= 1e4);
        let h = DirectionSpec::generate(SweepMode::HorizontalDominant, 100.0, 1e4, 8).unwrap();
        let r: Vec<f64> = h.points.iter().map(|p| p.v1 as f64 / (p.v2 * p.v2) as f64).collect();
        assert!(r.last().unwrap() > &(4.0 * r[0]), "{r:?}");
        let v = DirectionSpec::generate(SweepMode::VerticalOnly { y1: 3 }, 10.0, 1e3, 6).unwrap();
        assert!(v.points.iter().all(|p| p.v1 == 3));
        assert_eq!(v.points.len(), 6);
    }

    #[test]
    fn direction_spec_rejects_bad_points() {
        let m = SweepMode::VerticalOnly { y1: 0 };
        assert!(DirectionSpec::new(m, vec![]).is_err());
        assert!(DirectionSpec::new(m, vec![LatticePoint::new(0, 5), LatticePoint::new(0, 3)]).is_err());
        assert!(DirectionSpec::new(m, vec![LatticePoint::new(1, 5)]).is_err());
        let l = SweepMode::FixedLambda { lambda: 1.0 };
        assert!(DirectionSpec::new(l, vec![LatticePoint::new(26, 5)]).is_err());
        assert!(DirectionSpec::new(l, vec![LatticePoint::new(25, 5)]).is_ok());
        assert!(DirectionSpec::generate(l, 0.5, 10.0, 3).is_err());
    }

    #[test]
    fn embedded_kernel_identities() {
        let m = CfModel::walk();
        assert_eq!(martin_kernel_embedded(0, 37, &m, &spec()).unwrap(), 1.0);
        for (a, y) in [(3, 100), (-4, 17), (7, -250)] {
            let k = martin_kernel_embedded(a, y, &m, &spec()).unwrap();
            let cocycle = k * gamma(y, &m, &spec()).unwrap() / gamma(y - a, &m, &spec()).unwrap();
            assert!((cocycle - 1.0).abs() < 1e-14);
            // evenness of γ
            let mirrored = martin_kernel_embedded(-a, -y, &m, &spec()).unwrap();
            assert!((k - mirrored).abs() < 1e-12);
        }
        let k = martin_kernel_embedded(3, 10_000, &m, &spec()).unwrap();
        assert!((k - 1.0).abs() < 0.01);
    }

    #[test]
    fn embedded_kernel_flags_tiny_denominator() {
        let loose = QuadratureSpec {
            abs_tol: 1.0,
            rel_tol: 1e-3,
            ..spec()
        };
        match martin_kernel_embedded(1, 10_000, &CfModel::walk(), &loose) {
            Err(Error::Numeric { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn axis_kernel_reductions() {
        let m = CfModel::walk();
        assert_eq!(martin_kernel_axis(0, LatticePoint::new(400, 20), &m, &spec()).unwrap(), 1.0);
        for (z, y1) in [(2, 30), (-3, 100)] {
            let a = martin_kernel_axis(z, LatticePoint::new(y1, 0), &m, &spec()).unwrap();
            let e = martin_kernel_embedded(z, y1, &m, &spec()).unwrap();
            assert!((a - e).abs() < 1e-10, "{a} vs {e}");
        }
    }

    #[test]
    fn axis_kernel_tends_to_one_along_parabola() {
        let m = CfModel::walk();
        let devs: Vec<f64> = [10i64, 20, 40, 80]
            .iter()
            .map(|&y2| (martin_kernel_axis(2, LatticePoint::new(y2 * y2, y2), &m, &spec()).unwrap() - 1.0).abs())
            .collect();
        assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
        assert!(devs[3] < 0.05, "{devs:?}");
    }

    #[test]
    fn averaged_kernel_on_axis_start() {
        let m = CfModel::walk();
        let y = LatticePoint::new(50, 10);
        assert_eq!(averaged_axis_kernel(LatticePoint::ORIGIN, y, &m, &spec()).unwrap(), 1.0);
        let a = averaged_axis_kernel(LatticePoint::new(4, 0), y, &m, &spec()).unwrap();
        assert_eq!(a, martin_kernel_axis(4, y, &m, &spec()).unwrap());
    }

    /// `Σ_z ν_x(z) K(z, y)` summed term by term over a window of `w` sites.
    fn explicit_average(x: LatticePoint, y: LatticePoint, w: usize) -> (Vec<f64>, f64) {
        let m = CfModel::walk();
        let nu = hitting_law_window(x, &m, w).unwrap();
        let mut order: Vec<(i64, f64)> = nu.support.iter().copied().zip(nu.masses.iter().copied()).collect();
        order.sort_by_key(|(z, _)| (z - x.v1).abs());
        let mut partial = Vec::with_capacity(order.len());
        let mut acc = 0.0;
        for (z, mass) in order {
            acc += mass * martin_kernel_axis(z, y, &m, &spec()).unwrap();
            partial.push(acc);
        }
        (partial, nu.tail_bound)
    }

    #[test]
    fn averaged_kernel_matches_explicit_sum() {
        // the neglected tail Σ_{|z - x₁| ≥ W} ν(z) K(z, y) falls like 1/W
        // (ν ~ k^{-3/2}, K ~ k^{-1/2}) with a W^{-3/2} correction; both are
        // removed by Richardson over W = 256, 512, 1024
        let m = CfModel::walk();
        for (x, y) in [(LatticePoint::new(1, 2), LatticePoint::new(50, 10)), (LatticePoint::new(-2, -1), LatticePoint::new(-30, -4))] {
            let (partial, _) = explicit_average(x, y, 1024);
            // first pass removes the 1/W term, the second the W^{-3/2} one
            let r1 = 2.0 * partial[1023] - partial[511];
            let r0 = 2.0 * partial[511] - partial[255];
            let c = 2f64.powf(1.5);
            let extrapolated = (c * r1 - r0) / (c - 1.0);
            let closed = averaged_axis_kernel(x, y, &m, &spec()).unwrap();
            assert!((closed - extrapolated).abs() < 1e-4, "{x} {y}: {closed} vs {extrapolated} (raw {})", partial[1023]);
        }
    }

    #[test]
    fn averaged_kernel_tends_to_one_along_parabola() {
        let m = CfModel::walk();
        let x = LatticePoint::new(2, 3);
        let devs: Vec<f64> = [10i64, 20, 40, 80]
            .iter()
            .map(|&y2| (averaged_axis_kernel(x, LatticePoint::new(y2 * y2, y2), &m, &spec()).unwrap() - 1.0).abs())
            .collect();
        assert!(devs[3] < 0.05 && devs[3] < devs[0], "{devs:?}");
    }

    #[test]
    fn full_kernel_at_reference_point_is_one() {
        let m = CfModel::walk();
        for y in [LatticePoint::new(5, 3), LatticePoint::new(-40, -2), LatticePoint::new(7, 0)] {
            let k = martin_kernel_full(LatticePoint::ORIGIN, y, &m, &spec(), budget(100, 1)).unwrap();
            assert_eq!(k.value, 1.0);
            assert_eq!(k.first_term, 0.0);
            assert_eq!(k.value, k.first_term + k.second_term);
        }
    }

    #[test]
    fn full_kernel_opposite_half_plane_has_no_first_term() {
        let k = martin_kernel_full(LatticePoint::new(0, 2), LatticePoint::new(3, -5), &CfModel::walk(), &spec(), budget(1000, 2)).unwrap();
        assert_eq!(k.first_term, 0.0);
        assert_eq!(k.first_term_se, 0.0);
    }

    #[test]
    fn full_kernel_matches_green_ratio_by_simulation() {
        // K(x, y) = G(x, y)/G(0, y) with both Green values simulated directly
        use crate::simulate::estimate_green;
        let m = CfModel::walk();
        let (o, w) = (Orientation::half_plane(), WalkParams::simple());
        let x = LatticePoint::new(1, 1);
        let y = LatticePoint::new(3, 1);
        let k = martin_kernel_full(x, y, &m, &spec(), budget(40_000, 3)).unwrap();
        let gx = estimate_green(x, y, &o, &w, McBudget::new(5_000, 200_000, 4)).unwrap();
        let g0 = green_to(0, y, &m, &spec()).unwrap();
        let direct = gx.value / g0;
        let err = 4.0 * (k.error + gx.std_error / g0) + 0.01;
        assert!((k.value - direct).abs() < err, "{k:?} vs {direct} ± {err}");
        assert!(k.first_term > 0.0);
    }

    #[test]
    fn first_term_decays_along_sweep() {
        let m = CfModel::walk();
        let x = LatticePoint::new(2, 3);
        let f: Vec<f64> = [LatticePoint::new(5, 6), LatticePoint::new(5, 9), LatticePoint::new(5, 14)]
            .iter()
            .map(|&y| martin_kernel_full(x, y, &m, &spec(), budget(20_000, 5)).unwrap().first_term)
            .collect();
        assert!(f[0] > f[1] && f[1] > f[2], "{f:?}");
        assert!(f[2] < 0.05, "{f:?}");
    }

    #[test]
    fn report_at_reference_point_has_zero_deviation() {
        let m = CfModel::walk();
        let sweeps = [
            DirectionSpec::generate(SweepMode::FixedLambda { lambda: 1.0 }, 10.0, 400.0, 4).unwrap(),
            DirectionSpec::generate(SweepMode::VerticalOnly { y1: 2 }, 10.0, 400.0, 4).unwrap(),
        ];
        let r = boundary_triviality_report(LatticePoint::ORIGIN, &sweeps, &m, &spec(), budget(100, 6)).unwrap();
        assert_eq!(r.sup_deviation, Some(0.0));
        assert!(r.kernel_values().iter().all(|(_, k)| *k == 1.0));
        assert_eq!(r.failure_count(), 0);
    }

    #[test]
    fn report_is_deterministic_and_serializable() {
        let m = CfModel::walk();
        let sweeps = [DirectionSpec::generate(SweepMode::VerticalOnly { y1: 5 }, 5.0, 40.0, 3).unwrap()];
        let x = LatticePoint::new(2, 3);
        let a = boundary_triviality_report(x, &sweeps, &m, &spec(), budget(2_000, 7)).unwrap();
        let b = boundary_triviality_report(x, &sweeps, &m, &spec(), budget(2_000, 7)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let back: MartinReport = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(back, a);
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 1 + a.kernel_values().len());
        assert!(text.starts_with("y1,y2,K,first_term,err\n"));
    }

    #[test]
    fn report_records_point_failures() {
        let m = CfModel::walk();
        // a one-step horizon truncates every episode that does not return at once
        let sweeps = [DirectionSpec::new(SweepMode::VerticalOnly { y1: 2 }, vec![LatticePoint::new(2, 4)]).unwrap()];
        let r = boundary_triviality_report(LatticePoint::new(2, 3), &sweeps, &m, &spec(), McBudget::new(1000, 1, 8)).unwrap();
        assert_eq!(r.failure_count(), 1);
        assert!(r.sweeps[0].points.is_empty());
        assert_eq!(r.sup_deviation, None);
        assert!(boundary_triviality_report(LatticePoint::ORIGIN, &[], &m, &spec(), budget(10, 1)).is_err());
    }
}
