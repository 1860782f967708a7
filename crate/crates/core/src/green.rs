//! Fourier integrals of the Green function, the hitting law of the axis and the
//! column-crossing law `μ_x`.
//!
//! All integrands contain `1/(1 - φ(t))`, which behaves like `c/sqrt|t|` at the
//! origin. `[0, split]` is integrated in `u = sqrt t`, where the integrand is
//! smooth, and `[split, π]` directly. Both ranges use composite Gauss–Legendre
//! rules with panel doubling (see [`crate::quadrature`]).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analytic::CfModel;
use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::quadrature::{composite, integrate_doubling};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Boundary between the substituted and the direct range.
    pub split: f64,
    pub nodes_singular: usize,
    pub nodes_regular: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Panel budget per range.
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            split: 0.25,
            nodes_singular: 128,
            nodes_regular: 64,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_panels: 1 << 16,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.split > 0.0 && self.split < PI) {
            return Err(Error::validation(format!("split={} outside (0, π)", self.split)));
        }
        if self.nodes_singular < 16 || self.nodes_regular < 16 {
            return Err(Error::validation("node counts must be at least 16"));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::validation("tolerances must be positive"));
        }
        if self.max_panels < 2 {
            return Err(Error::validation("max_panels must be at least 2"));
        }
        Ok(())
    }

    /// Both node counts doubled.
    pub fn refined(&self) -> Self {
        QuadratureSpec {
            nodes_singular: 2 * self.nodes_singular,
            nodes_regular: 2 * self.nodes_regular,
            ..*self
        }
    }
}

/// `∫₀^π h(t) dt` for an integrand with at most a `t^{-1/2}` singularity at 0.
///
/// `freq` is the largest angular frequency present and `concentration` the
/// power of `|g|` in the integrand (mass near `t = 0` at scale `1/concentration²`);
/// both only set the starting panel counts.
pub(crate) fn half_range_integral<F: Fn(f64) -> Complex64>(
    h: &F,
    freq: f64,
    concentration: u64,
    spec: &QuadratureSpec,
) -> Result<(Complex64, f64)> {
    spec.validate()?;
    let us = spec.split.sqrt();
    let sing = |u: f64| 2.0 * u * h(u * u);
    // a panel of n nodes comfortably resolves n/8 periods
    let periods_s = freq * spec.split / (2.0 * PI);
    let p_s = 1 + (periods_s * 8.0 / spec.nodes_singular as f64) as usize + (concentration as f64 * us / 8.0) as usize;
    let periods_r = freq * (PI - spec.split) / (2.0 * PI);
    let p_r = 1 + (periods_r * 8.0 / spec.nodes_regular as f64) as usize;
    let a = integrate_doubling(&sing, 0.0, us, spec.nodes_singular, p_s, spec.abs_tol / 2.0, spec.rel_tol, spec.max_panels)?;
    let b = integrate_doubling(h, spec.split, PI, spec.nodes_regular, p_r, spec.abs_tol / 2.0, spec.rel_tol, spec.max_panels)?;
    Ok((a.value + b.value, a.error + b.error))
}

/// `γ(x) = ∫₀^π cos(xt)/(1 - φ(t)) dt`.
pub fn gamma(x: i64, model: &CfModel, spec: &QuadratureSpec) -> Result<f64> {
    let xf = x.unsigned_abs() as f64;
    let h = |t: f64| Complex64::new((xf * t).cos() / model.one_minus_phi(t), 0.0);
    Ok(half_range_integral(&h, xf, 0, spec)?.0.re)
}

/// `G₀(x, y) = γ(y - x)/π`, the expected number of visits to `y` of the
/// embedded chain on the axis started at `x`, time 0 included.
pub fn green_embedded(x: i64, y: i64, model: &CfModel, spec: &QuadratureSpec) -> Result<f64> {
    Ok(gamma(y - x, model, spec)? / PI)
}

/// A real-valued integral over `[-π, π]` together with its imaginary part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldedIntegral {
    pub value: f64,
    /// Imaginary part, zero up to rounding for conjugate-symmetric integrands.
    pub imag: f64,
    pub error: f64,
}

/// `∫_{-π}^{π} F(t) dt` for a conjugate-symmetric `F`, computed as
/// `∫₀^π (F(t) + F(-t)) dt` with both halves evaluated independently.
pub(crate) fn folded<F: Fn(f64) -> Complex64>(
    f: &F,
    freq: f64,
    concentration: u64,
    spec: &QuadratureSpec,
) -> Result<FoldedIntegral> {
    let h = |t: f64| f(t) + f(-t);
    let (v, err) = half_range_integral(&h, freq, concentration, spec)?;
    let out = FoldedIntegral {
        value: v.re,
        imag: v.im,
        error: err,
    };
    if out.imag.abs() > 1e-8 * (1.0 + out.value.abs()) {
        return Err(Error::numeric_with(
            format!("imaginary part {:.3e} of a real integral exceeds tolerance", out.imag),
            Some(out.value),
            vec![],
        ));
    }
    Ok(out)
}

/// `∫_{-π}^{π} e^{it(y₁ - z)} L_{y₂}(t)/(1 - φ(t)) dt`, where `L_{y₂}` is the
/// characteristic function of the horizontal displacement from height `y₂` to
/// the axis.
///
/// Dividing by `2π` gives the expected number of visits to `(z, 0)` by the walk
/// started at `y` (see [`green_from`]).
pub fn green_halfplane(z: i64, y: LatticePoint, model: &CfModel, spec: &QuadratureSpec) -> Result<FoldedIntegral> {
    let shift = (y.v1 - z) as f64;
    let f = |t: f64| (I * (t * shift)).exp() * model.level(t, y.v2) / model.one_minus_phi(t);
    folded(&f, shift.abs(), y.v2.unsigned_abs(), spec)
}

/// `G(y, (z, 0))`: expected visits to the axis point `z` from `y`.
pub fn green_from(y: LatticePoint, z: i64, model: &CfModel, spec: &QuadratureSpec) -> Result<f64> {
    Ok(green_halfplane(z, y, model, spec)?.value / (2.0 * PI))
}

fn halfplane_degree(p: LatticePoint) -> f64 {
    if p.v2 == 0 {
        2.0
    } else {
        3.0
    }
}

/// `G((z, 0), y)`: expected visits to `y` from the axis point `z`, counting time 0.
///
/// The walk on the half-plane lattice has in-degree equal to out-degree at every
/// vertex, so `m(v) = deg(v)` is invariant and the time reversal is the simple
/// walk on the reversed lattice. Hence `G(z, y) = deg(y)/deg(z) · G*(y, z)`,
/// where the reversed walk hits the axis with the mirrored law. That is
/// [`green_halfplane`] evaluated at `(y₁, -y₂)`.
pub fn green_to(z: i64, y: LatticePoint, model: &CfModel, spec: &QuadratureSpec) -> Result<f64> {
    let mirrored = LatticePoint::new(y.v1, -y.v2);
    let j = green_halfplane(z, mirrored, model, spec)?.value;
    Ok(halfplane_degree(y) / halfplane_degree(LatticePoint::new(z, 0)) * j / (2.0 * PI))
}

/// Green function values on the axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenTable {
    pub entries: Vec<GreenEntry>,
    /// Whether the `1/π` factor has been applied (`G₀`) or the raw `γ` is stored.
    pub normalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenEntry {
    pub x: i64,
    pub y: i64,
    pub value: f64,
}

impl GreenTable {
    /// `γ(y - x)` for each pair, divided by `π` when `normalized`.
    pub fn embedded(pairs: &[(i64, i64)], model: &CfModel, spec: &QuadratureSpec, normalized: bool) -> Result<Self> {
        let mut cache: BTreeMap<i64, f64> = BTreeMap::new();
        let mut entries = Vec::with_capacity(pairs.len());
        for &(x, y) in pairs {
            let d = (y - x).abs();
            let g = match cache.get(&d) {
                Some(v) => *v,
                None => {
                    let v = gamma(d, model, spec)?;
                    cache.insert(d, v);
                    v
                }
            };
            let value = if normalized { g / PI } else { g };
            if !value.is_finite() || value < -1e-8 {
                return Err(Error::numeric(format!("green value {value} at ({x},{y}) is invalid")));
            }
            entries.push(GreenEntry { x, y, value });
        }
        Ok(GreenTable { entries, normalized })
    }
}

/// A law on ℤ with finite support plus the mass left outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub support: Vec<i64>,
    pub masses: Vec<f64>,
    pub tail_bound: f64,
}

impl ProbabilityTable {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn mass_at(&self, v: i64) -> f64 {
        match self.support.binary_search(&v) {
            Ok(i) => self.masses[i],
            Err(_) => 0.0,
        }
    }

    pub fn as_map(&self) -> BTreeMap<i64, f64> {
        self.support.iter().copied().zip(self.masses.iter().copied()).collect()
    }

    /// Total variation distance to `other`, pointwise on the table's support and
    /// with everything outside the support lumped into one atom that also carries
    /// `tail_bound`.
    pub fn total_variation(&self, other: &BTreeMap<i64, f64>) -> f64 {
        let mut d = 0.0;
        let mut other_inside = 0.0;
        for (v, m) in self.support.iter().zip(&self.masses) {
            let o = other.get(v).copied().unwrap_or(0.0);
            other_inside += o;
            d += (m - o).abs();
        }
        let other_outside = other.values().sum::<f64>() - other_inside;
        d += (self.tail_bound - other_outside).abs();
        0.5 * d
    }
}

/// Largest support window for the hitting law.
pub const MAX_HITTING_WINDOW: usize = 1 << 19;

/// Damping `ρ^N` of the Cauchy contour; the aliasing error is below this times the
/// mass beyond the FFT length.
const CONTOUR_DAMPING: f64 = 1e-10;

/// Coefficients `[s^j]`, `j < n/2`, of a probability generating function and of
/// `(1 - L(s))/(1 - s)`, by FFT on the circle `|s| = ρ`.
fn invert_pgf<F: Fn(Complex64) -> Complex64>(pgf: &F, n: usize) -> (Vec<f64>, Vec<f64>) {
    let rho = CONTOUR_DAMPING.powf(1.0 / n as f64);
    let one = Complex64::new(1.0, 0.0);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for k in 0..n {
        let s = Complex64::from_polar(rho, 2.0 * PI * k as f64 / n as f64);
        let l = pgf(s);
        a.push(l);
        b.push((one - l) / (one - s));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    fft.process(&mut a);
    fft.process(&mut b);
    let keep = n / 2;
    let mut scale = 1.0 / n as f64;
    let mut ca = Vec::with_capacity(keep);
    let mut cb = Vec::with_capacity(keep);
    for j in 0..keep {
        ca.push(a[j].re * scale);
        cb.push(b[j].re * scale);
        scale /= rho;
    }
    (ca, cb)
}

/// Law `ν_y` of the first point of the axis reached from `y`.
///
/// `ν_y(v) = (1/2π) ∫ e^{-it(v - y₁)} L_{y₂}(t) dt`. The inversion runs on the
/// generating function of `|v - y₁|` over a damped circle rather than on the unit
/// circle, because the law has a `k^{-3/2}` tail that would alias. The window
/// starts at 1024 and doubles until the excluded mass is below `tail_tol`. The
/// excluded mass is read off `(1 - L(s))/(1 - s)`, independently of the masses.
pub fn hitting_distribution(y: LatticePoint, model: &CfModel, tail_tol: f64) -> Result<ProbabilityTable> {
    if !(tail_tol > 0.0) {
        return Err(Error::validation("tail_tol must be positive"));
    }
    let mut window = 1024usize;
    loop {
        let table = hitting_law_window(y, model, window)?;
        if table.tail_bound < tail_tol {
            return Ok(table);
        }
        if window >= MAX_HITTING_WINDOW {
            return Err(Error::numeric_with(
                format!(
                    "hitting law from {y}: mass {:.3e} beyond the maximal window {window} exceeds tail_tol {tail_tol:.1e}",
                    table.tail_bound
                ),
                Some(table.tail_bound),
                vec![format!("window={window}")],
            ));
        }
        window *= 2;
    }
}

/// [`hitting_distribution`] on a fixed window of `window` sites starting at `y₁`.
pub fn hitting_law_window(y: LatticePoint, model: &CfModel, window: usize) -> Result<ProbabilityTable> {
    if window == 0 || window > MAX_HITTING_WINDOW {
        return Err(Error::validation(format!("window {window} outside 1..={MAX_HITTING_WINDOW}")));
    }
    if y.v2 == 0 {
        return Ok(ProbabilityTable {
            support: vec![y.v1],
            masses: vec![1.0],
            tail_bound: 0.0,
        });
    }
    let dir: i64 = if y.v2 > 0 { 1 } else { -1 };
    let pgf = |s: Complex64| model.level_pgf(s, y.v2);
    let (masses, tails) = invert_pgf(&pgf, 2 * window.next_power_of_two());
    let tail = tails[window - 1].max(0.0);
    let mut out_m = Vec::with_capacity(window);
    for (j, &m) in masses.iter().take(window).enumerate() {
        if m < -1e-8 {
            return Err(Error::numeric(format!("negative mass {m:.3e} at offset {j} from {y}")));
        }
        out_m.push(m.max(0.0));
    }
    let mut support: Vec<i64> = (0..window as i64).map(|j| y.v1 + dir * j).collect();
    if dir < 0 {
        support.reverse();
        out_m.reverse();
    }
    Ok(ProbabilityTable {
        support,
        masses: out_m,
        tail_bound: tail,
    })
}

/// Column-crossing kernel `(3 - 2 cos t)^{-d}`.
///
/// Between consecutive horizontal moves the height performs `n ≥ 0` vertical
/// moves with weight `(1/3)^{n+1}`, killed at 0. On `sin(th)` this acts as
/// `Σ_n (1/3)^{n+1} (2 cos t)^n = 1/(3 - 2 cos t)`, which equals
/// `F(cos t)/cos t` with `F(x) = x/(3 - 2x)` the death-chain generating function.
fn mu_kernel(t: f64, d: i64) -> f64 {
    (3.0 - 2.0 * t.cos()).powi(-(d as i32))
}

fn check_mu(x: LatticePoint, y1: i64) -> Result<i64> {
    if x.v2 < 0 {
        return Err(Error::validation("mu needs x2 >= 0"));
    }
    if y1 <= x.v1 {
        return Err(Error::validation("mu needs y1 > x1"));
    }
    Ok(y1 - x.v1)
}

/// `μ_x(u)`: probability that the walk from `x` first reaches column `y1` at height
/// `u` before returning to the axis.
///
/// `μ_x(u) = (1/2π) ∫_{-π}^{π} K(t) 2i sin(t x₂) e^{-itu} dt` with `K` even and real.
/// The `i sin(t x₂) cos(tu)` part is odd and integrates to 0, leaving
/// `μ_x(u) = (2/π) ∫₀^π K(t) sin(t x₂) sin(tu) dt`. The integrand is smooth and
/// periodic, so it is summed with the trapezoid rule on `M` equispaced points,
/// doubling `M` until the value settles.
pub fn mu_x(u: i64, x: LatticePoint, y1: i64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let d = check_mu(x, y1)?;
    if u < 0 {
        return Err(Error::validation("mu needs u >= 0"));
    }
    if x.v2 == 0 || u == 0 {
        return Ok(0.0);
    }
    let trapezoid = |m: usize| -> f64 {
        let mut acc = 0.0;
        for k in 0..m {
            let t = 2.0 * PI * k as f64 / m as f64;
            acc += 2.0 * mu_kernel(t, d) * (t * x.v2 as f64).sin() * (t * u as f64).sin();
        }
        acc / m as f64
    };
    let mut m = (4 * (x.v2 + u + d) as usize + 64).next_power_of_two();
    let mut prev = trapezoid(m);
    loop {
        m *= 2;
        if m > spec.max_panels * spec.nodes_regular {
            return Err(Error::numeric_with("mu_x trapezoid rule did not settle", Some(prev), vec![]));
        }
        let next = trapezoid(m);
        if (next - prev).abs() <= spec.abs_tol.max(spec.rel_tol * next.abs()) {
            return Ok(next);
        }
        prev = next;
    }
}

/// `μ_x(u)` for `u = 0..=u_max`.
///
/// The law is defective (the walk may return to the axis first), so
/// `tail_bound` is left at 0 rather than closing the total to 1.
pub fn mu_table(x: LatticePoint, y1: i64, u_max: i64, spec: &QuadratureSpec) -> Result<ProbabilityTable> {
    let mut support = Vec::new();
    let mut masses = Vec::new();
    for u in 0..=u_max {
        support.push(u);
        masses.push(mu_x(u, x, y1, spec)?);
    }
    Ok(ProbabilityTable {
        support,
        masses,
        tail_bound: 0.0,
    })
}

/// Direct complex evaluation of the unreduced `μ_x(u)` integral on `[-π, π]`,
/// kept for cross-checking the real reduction.
pub fn mu_x_complex(u: i64, x: LatticePoint, y1: i64) -> Result<Complex64> {
    let d = check_mu(x, y1)?;
    let f = |t: f64| mu_kernel(t, d) * 2.0 * I * (t * x.v2 as f64).sin() * (-I * (t * u as f64)).exp();
    Ok(composite(&f, -PI, PI, 64, 32) / (2.0 * PI))
}
