//! Numbered acceptance checks, grouped in suites, with fixed thresholds.
//!
//! Every check is a pure function of [`VerifyOptions`]: quadrature is
//! deterministic and Monte Carlo runs use fixed per-check seeds derived from
//! `options.seed`, so two runs with the same options serialize to the same bytes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::{closed_form_report, death_chain_pgf, extract_singularity, first_return_pgf, geom_cf, CfForm, CfModel};
use crate::error::{Error, Result};
use crate::green::{gamma, green_halfplane, hitting_law_window, ProbabilityTable, QuadratureSpec};
use crate::lattice::{vertical_projection_chain, DriftProfile, LatticePoint, Orientation, WalkParams};
use crate::martin::{boundary_triviality_report, martin_kernel_embedded, DirectionSpec, SweepMode};
use crate::rng::par_chunks;
use crate::simulate::{
    empirical_cf, estimate_death_chain_pgf, estimate_green, estimate_hitting_prob_gu, mc_hitting_law,
    occupation_before_return, run_excursion, sample_x_sigma1, step, McBudget,
};

/// Criterion 1.
pub const CF_IDENTITY_TOL: f64 = 1e-14;
pub const QUADRATIC_RESIDUAL_TOL: f64 = 1e-12;
pub const CF_GRID: usize = 512;
/// Criterion 2.
pub const CLOSED_FORM_TOL: f64 = 1e-9;
pub const CLOSED_FORM_GRID: usize = 1000;
/// Criterion 3.
pub const CF_SE_FACTOR: f64 = 3.0;
/// Criterion 4.
pub const SQRT_GAMMA_REL_TOL: f64 = 0.02;
pub const SLOPE_RANGE: (f64, f64) = (0.4, 0.6);
/// Criterion 5.
pub const EMBEDDED_KERNEL_TOL: f64 = 1e-2;
/// Criterion 6.
pub const HITTING_TV_TOL: f64 = 0.01;
pub const HITTING_MASS_TOL: f64 = 1e-8;
/// Criteria 7 and 8.
pub const MC_SE_FACTOR: f64 = 3.0;
/// Criterion 9.
pub const DIRECTIONAL_REL_TOL: f64 = 0.05;
/// Criterion 10.
pub const FULL_KERNEL_SUP_TOL: f64 = 0.1;
pub const FIRST_TERM_TAIL_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Cf,
    Green,
    Embedded,
    Full,
    Poisson,
    All,
}

impl Suite {
    fn ids(self) -> &'static [&'static str] {
        match self {
            Suite::Cf => &["C1", "C2", "C3"],
            Suite::Embedded => &["C4", "C5"],
            Suite::Green => &["C6", "C9", "G1"],
            Suite::Full => &["C7", "C8", "C10", "C11"],
            Suite::Poisson => &["P1", "P2"],
            Suite::All => &["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10", "C11", "G1", "P1", "P2"],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Cf => "cf",
            Suite::Green => "green",
            Suite::Embedded => "embedded",
            Suite::Full => "full",
            Suite::Poisson => "poisson",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cf" => Suite::Cf,
            "green" => Suite::Green,
            "embedded" => Suite::Embedded,
            "full" => Suite::Full,
            "poisson" => Suite::Poisson,
            "all" => Suite::All,
            other => return Err(Error::validation(format!("unknown suite `{other}`"))),
        })
    }
}

/// Sample sizes. The defaults are the acceptance budgets; `scaled` shrinks them
/// for smoke runs (thresholds stay the same, so small budgets may fail).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub model: CfModel,
    pub spec: QuadratureSpec,
    pub cf_excursions: u64,
    pub hitting_episodes: u64,
    pub death_chain_walks: u64,
    pub gu_walks: u64,
    pub martin_walks: u64,
    pub occupation_episodes: u64,
    pub green_walks: u64,
    /// Steps per walk. The return time to the axis has tail P(τ > n) ≈ 0.98/√n,
    /// so keeping the truncation rate under 10⁻³ needs about 10⁶ steps.
    pub horizon: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 20_240_601,
            model: CfModel::walk(),
            spec: QuadratureSpec::default(),
            cf_excursions: 1_000_000,
            hitting_episodes: 1_000_000,
            death_chain_walks: 1_000_000,
            gu_walks: 200_000,
            martin_walks: 100_000,
            occupation_episodes: 100_000,
            green_walks: 5_000,
            horizon: 2_000_000,
        }
    }
}

impl VerifyOptions {
    /// Every Monte Carlo sample size multiplied by `factor` (at least 1 walk).
    pub fn scaled(mut self, factor: f64) -> Self {
        let s = |n: u64| ((n as f64 * factor).round() as u64).max(1);
        self.cf_excursions = s(self.cf_excursions);
        self.hitting_episodes = s(self.hitting_episodes);
        self.death_chain_walks = s(self.death_chain_walks);
        self.gu_walks = s(self.gu_walks);
        self.martin_walks = s(self.martin_walks);
        self.occupation_episodes = s(self.occupation_episodes);
        self.green_walks = s(self.green_walks);
        self
    }

    fn budget(&self, n: u64, salt: u64) -> McBudget {
        McBudget::new(n, self.horizon, self.seed.wrapping_add(salt.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
    }
}

/// One measured quantity against its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    /// Human-readable bound, e.g. `<= 1e-14` or `in [0.4, 0.6]`.
    pub bound: String,
    pub pass: bool,
}

impl Measurement {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Measurement {
            name: name.into(),
            value,
            bound: format!("<= {limit:e}"),
            pass: value <= limit,
        }
    }

    fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Measurement {
            name: name.into(),
            value,
            bound: format!("in [{lo}, {hi}]"),
            pass: (lo..=hi).contains(&value),
        }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        Measurement {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            bound: "== 1".into(),
            pass: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub title: String,
    pub pass: bool,
    pub measurements: Vec<Measurement>,
    /// Free-form verdicts and diagnoses.
    pub notes: Vec<String>,
}

impl CheckResult {
    fn new(id: &str, title: &str, measurements: Vec<Measurement>, notes: Vec<String>) -> Self {
        CheckResult {
            id: id.into(),
            title: title.into(),
            pass: measurements.iter().all(|m| m.pass),
            measurements,
            notes,
        }
    }

    fn failed(id: &str, title: &str, err: &Error) -> Self {
        CheckResult {
            id: id.into(),
            title: title.into(),
            pass: false,
            measurements: vec![],
            notes: vec![format!("error: {err}")],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub options: VerifyOptions,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn check(&self, id: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.id == id)
    }

    /// CSV `id,measurement,value,bound,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,measurement,value,bound,pass\n");
        for c in &self.checks {
            for m in &c.measurements {
                out.push_str(&format!("{},{},{:.16e},{},{}\n", c.id, csv_field(&m.name), m.value, csv_field(&m.bound), m.pass));
            }
        }
        out
    }
}

pub fn run_suite(suite: Suite, options: &VerifyOptions) -> Result<VerifyReport> {
    options.spec.validate()?;
    options.model.p.is_finite().then_some(()).ok_or_else(|| Error::validation("model p"))?;
    let mut checks = Vec::new();
    let mut c3_pass = None;
    for id in suite.ids() {
        let r = run_check(id, options, c3_pass);
        if *id == "C3" {
            c3_pass = Some(r.pass);
        }
        checks.push(r);
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        suite,
        options: *options,
        checks,
        pass,
    })
}

/// Runs one check by id. `C2` consults `C3` when the closed form disagrees; if
/// `C3` has not run yet it is run here.
pub fn run_check(id: &str, o: &VerifyOptions, c3_pass: Option<bool>) -> CheckResult {
    let (title, res) = match id {
        "C1" => ("CF identity suite", cf_identities(o)),
        "C2" => ("closed-form cross-check", closed_form_check(o, c3_pass)),
        "C3" => ("MC arbitration of the embedded CF", cf_arbitration(o)),
        "C4" => ("singularity and sqrt(x) gamma(x) asymptotics", asymptotics(o)),
        "C5" => ("embedded Martin triviality", embedded_triviality(o)),
        "C6" => ("hitting-law oracle", hitting_law_check(o)),
        "C7" => ("death-chain generating function", death_chain_check(o)),
        "C8" => ("exponential bound on g_u", gu_bound_check(o)),
        "C9" => ("directional Green limits", directional_limits(o)),
        "C10" => ("full Martin triviality", full_triviality(o)),
        "C11" => ("opposite-half-plane exactness", opposite_half_plane(o)),
        "G1" => ("G0(0,0) against simulation", green_origin(o)),
        "P1" => ("vertical projection chain rows", projection_rows()),
        "P2" => ("drifted walk against its projection chain", projection_simulation(o)),
        other => ("unknown", Err(Error::validation(format!("unknown check `{other}`")))),
    };
    match res {
        Ok((m, notes)) => CheckResult::new(id, title, m, notes),
        Err(e) => CheckResult::failed(id, title, &e),
    }
}

type Outcome = Result<(Vec<Measurement>, Vec<String>)>;

fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn cf_identities(o: &VerifyOptions) -> Outcome {
    let ts = grid(CF_GRID, -PI, PI);
    let mut at0: f64 = 0.0;
    let mut modulus: f64 = 0.0;
    let mut even: f64 = 0.0;
    for m in [o.model, CfModel::reciprocal_third()] {
        at0 = at0.max((m.phi(0.0) - 1.0).abs());
        for &t in &ts {
            modulus = modulus.max(m.phi(t).abs() - 1.0);
            even = even.max((m.phi(t) - m.phi(-t)).abs());
        }
    }
    let mut quad: f64 = 0.0;
    for p in [1.0 / 3.0, 2.0 / 3.0] {
        for &t in &ts {
            let z = geom_cf(t, p);
            let g = first_return_pgf(z)?;
            quad = quad.max((0.5 * z * g * g - g + 0.5 * z).norm());
        }
    }
    let mut power: f64 = 0.0;
    for &x in &grid(41, -1.0, 1.4) {
        let base = death_chain_pgf(x, 1)?;
        for h in 1..=12u32 {
            let direct = death_chain_pgf(x, h)?;
            let product = (0..h).fold(1.0, |acc, _| acc * base);
            power = power.max((direct - product).abs() / direct.abs().max(1.0));
        }
    }
    Ok((
        vec![
            Measurement::at_most("|phi(0)-1|", at0, CF_IDENTITY_TOL),
            Measurement::at_most("max |phi|-1", modulus, 0.0),
            Measurement::at_most("max |phi(t)-phi(-t)|", even, CF_IDENTITY_TOL),
            Measurement::at_most("max quadratic residual of g", quad, QUADRATIC_RESIDUAL_TOL),
            Measurement::at_most("death-chain power law", power, CF_IDENTITY_TOL),
        ],
        vec![],
    ))
}

fn closed_form_check(o: &VerifyOptions, c3_pass: Option<bool>) -> Outcome {
    let rep = closed_form_report(1.0 / 3.0, CLOSED_FORM_GRID, CLOSED_FORM_TOL)?;
    let mut notes = vec![format!(
        "max |diff| {:.3e} at t={:.6}; rescaled max |diff| {:.3e}",
        rep.max_abs_diff, rep.argmax_t, rep.rescaled_max_abs_diff
    )];
    let ok = if rep.agree {
        true
    } else {
        let diagnosed = rep.diagnosis.is_some();
        if let Some(d) = &rep.diagnosis {
            notes.push(format!("discrepancy report: {d}"));
        }
        let c3 = match c3_pass {
            Some(v) => v,
            None => run_check("C3", o, None).pass,
        };
        notes.push(format!("criterion 3 {}", if c3 { "passes" } else { "fails" }));
        diagnosed && c3
    };
    Ok((
        vec![
            Measurement {
                name: "max |closed - probabilistic|".into(),
                value: rep.max_abs_diff,
                bound: format!("<= {CLOSED_FORM_TOL:e} or reported discrepancy with C3 passing"),
                pass: ok,
            },
        ],
        notes,
    ))
}

fn cf_arbitration(o: &VerifyOptions) -> Outcome {
    let sample = sample_x_sigma1(&Orientation::half_plane(), &WalkParams::simple(), o.budget(o.cf_excursions, 3))?;
    let ts: Vec<f64> = (1..=10).map(|k| k as f64 * PI / 10.0).collect();
    let cf = empirical_cf(&sample.values, &ts)?;
    let candidates = [
        ("Re[g(r)/r], p=1/3", CfModel::new(1.0 / 3.0, CfForm::Reciprocal)?),
        ("Re[g(r)/r], p=2/3", CfModel::new(2.0 / 3.0, CfForm::Reciprocal)?),
        ("excursion model Re[g(r)], p=2/3", CfModel::walk()),
    ];
    let mut notes = vec![format!("{} excursions, {} truncated", sample.values.len(), sample.truncated)];
    let mut matching = Vec::new();
    for (name, m) in candidates {
        let worst = cf
            .iter()
            .map(|c| (c.value.re - m.phi(c.t)).abs() / c.se_re.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        notes.push(format!("{name}: max deviation {worst:.2} SE"));
        if worst <= CF_SE_FACTOR {
            matching.push(name);
        }
    }
    notes.push(match matching.as_slice() {
        [one] => format!("verdict: {one}"),
        [] => "verdict: no candidate matches".into(),
        _ => format!("verdict: ambiguous ({})", matching.join("; ")),
    });
    let trunc = sample.truncated as f64 / o.cf_excursions as f64;
    Ok((
        vec![
            Measurement::within("matching candidates", matching.len() as f64, 1.0, 1.0),
            Measurement::at_most("truncation rate", trunc, 1e-3),
        ],
        notes,
    ))
}

fn asymptotics(o: &VerifyOptions) -> Outcome {
    let a = 2000f64.sqrt() * gamma(2000, &o.model, &o.spec)?;
    let b = 8000f64.sqrt() * gamma(8000, &o.model, &o.spec)?;
    let s = extract_singularity(&o.model)?;
    Ok((
        vec![
            Measurement::at_most("|sqrt(2000)g(2000) / sqrt(8000)g(8000) - 1|", (a / b - 1.0).abs(), SQRT_GAMMA_REL_TOL),
            Measurement::at_most("extrapolation relative spread", s.relative_spread, 1e-3),
            Measurement::within("residual slope", s.residual_slope, SLOPE_RANGE.0, SLOPE_RANGE.1),
        ],
        vec![format!(
            "c={:.12} c'={:.12}; sqrt(x)gamma(x) at 2000, 8000: {a:.12}, {b:.12}",
            s.c, s.c_prime
        )],
    ))
}

fn embedded_triviality(o: &VerifyOptions) -> Outcome {
    let mut worst_tail: f64 = 0.0;
    let mut monotone = true;
    for x in -5..=5 {
        let devs: Vec<f64> = [100, 1000, 10_000]
            .iter()
            .map(|&y| martin_kernel_embedded(x, y, &o.model, &o.spec).map(|k| (k - 1.0).abs()))
            .collect::<Result<_>>()?;
        monotone &= devs[1] <= devs[0] && devs[2] <= devs[1];
        worst_tail = worst_tail.max(devs[2]);
    }
    Ok((
        vec![
            Measurement::at_most("max |K0(x,1e4)-1|", worst_tail, EMBEDDED_KERNEL_TOL),
            Measurement::flag("deviations decrease over y = 1e2, 1e3, 1e4", monotone),
        ],
        vec![],
    ))
}

fn hitting_law_check(o: &VerifyOptions) -> Outcome {
    let mut m = Vec::new();
    let mut notes = Vec::new();
    for (i, y2) in [1i64, 2, 5].into_iter().enumerate() {
        let y = LatticePoint::new(0, y2);
        let table = hitting_law_window(y, &o.model, 1 << 16)?;
        let total = table.total_mass() + table.tail_bound;
        let mc = mc_hitting_law(y, &Orientation::half_plane(), &WalkParams::simple(), o.budget(o.hitting_episodes, 60 + i as u64))?;
        let tv = table.total_variation(&mc.frequencies());
        notes.push(format!(
            "y2={y2}: tail beyond window {:.3e}, {} completed, {} truncated",
            table.tail_bound, mc.completed, mc.truncated
        ));
        notes.push(format!(
            "y2={y2}: TV expected from sampling alone with {} draws: {:.4}",
            mc.completed,
            sampling_tv_floor(&table, mc.completed)
        ));
        m.push(Measurement::at_most(format!("TV(y2={y2})"), tv, HITTING_TV_TOL));
        m.push(Measurement::at_most(format!("|mass+tail-1| (y2={y2})"), (total - 1.0).abs(), HITTING_MASS_TOL));
    }
    Ok((m, notes))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Expected total variation `½ E Σ_v |p̂_v - p_v|` of the empirical law of `n`
/// draws from `table`, the
/// tail lumped into one atom. Counts are normal when large, Poisson when small.
fn sampling_tv_floor(table: &ProbabilityTable, n: u64) -> f64 {
    let n = n as f64;
    let mad = |p: f64| {
        let lambda = n * p;
        if lambda > 50.0 {
            (2.0 * lambda * (1.0 - p) / PI).sqrt()
        } else {
            // E|X - λ| = 2 e^{-λ} λ^{k+1} / k!, k = ⌊λ⌋
            let k = lambda.floor() as u32;
            let mut term = (-lambda).exp() * lambda;
            for j in 1..=k {
                term *= lambda / j as f64;
            }
            2.0 * term
        }
    };
    0.5 * (table.masses.iter().map(|&p| mad(p)).sum::<f64>() + mad(table.tail_bound)) / n
}

fn death_chain_check(o: &VerifyOptions) -> Outcome {
    let mut m = Vec::new();
    for h in 1..=3u32 {
        let e = estimate_death_chain_pgf(0.5, h, o.death_chain_walks, o.seed.wrapping_add(70 + h as u64))?;
        let exact = death_chain_pgf(0.5, h)?;
        m.push(Measurement::at_most(
            format!("|E(x^T)-{exact}|/SE (h={h})"),
            (e.value - exact).abs() / e.std_error,
            MC_SE_FACTOR,
        ));
    }
    Ok((m, vec![]))
}

fn gu_bound_check(o: &VerifyOptions) -> Outcome {
    let mut m = Vec::new();
    let mut notes = Vec::new();
    for (i, (u, y2)) in [(0i64, 2i64), (0, 4), (1, 4)].into_iter().enumerate() {
        let e = estimate_hitting_prob_gu(u, y2, 0, o.budget(o.gu_walks, 80 + i as u64))?;
        let bound = 2f64.powi(-((y2 - u).abs() as i32));
        notes.push(format!("g_{u}({y2}) = {:.6} ± {:.6}, bound {bound}", e.value, e.std_error));
        m.push(Measurement::at_most(
            format!("g_{u}({y2}) - 2^-d - 3SE"),
            e.value - bound - MC_SE_FACTOR * e.std_error,
            0.0,
        ));
    }
    Ok((m, notes))
}

fn directional_limits(o: &VerifyOptions) -> Outcome {
    let j = |y: LatticePoint| green_halfplane(0, y, &o.model, &o.spec).map(|v| v.value);
    let par: Vec<f64> = [20i64, 40, 80]
        .iter()
        .map(|&y2| j(LatticePoint::new(y2 * y2, y2)).map(|v| y2 as f64 * v))
        .collect::<Result<_>>()?;
    let sweep = DirectionSpec::generate(SweepMode::HorizontalDominant, 1000.0, 16_000.0, 3)?;
    let hor: Vec<f64> = sweep
        .points
        .iter()
        .map(|&y| j(y).map(|v| (y.v1 as f64).sqrt() * v))
        .collect::<Result<_>>()?;
    let n = hor.len();
    Ok((
        vec![
            Measurement::at_most("lambda=1: |y2 J| ratio of last two - 1", (par[2] / par[1] - 1.0).abs(), DIRECTIONAL_REL_TOL),
            Measurement::at_most("horizontal: sqrt|y1| J ratio of last two - 1", (hor[n - 1] / hor[n - 2] - 1.0).abs(), DIRECTIONAL_REL_TOL),
            Measurement::flag("limits nonzero", par[2] > 0.0 && hor[n - 1] > 0.0),
        ],
        vec![
            format!("y2*J along y1=y2^2, y2=20,40,80: {par:?}"),
            format!("sqrt(y1)*J along {:?}: {hor:?}", sweep.points),
        ],
    ))
}

fn full_triviality(o: &VerifyOptions) -> Outcome {
    let x = LatticePoint::new(2, 3);
    let sweeps = [
        DirectionSpec::generate(SweepMode::FixedLambda { lambda: 0.0 }, 30.0, 4000.0, 8)?,
        DirectionSpec::generate(SweepMode::FixedLambda { lambda: 1.0 }, 30.0, 4000.0, 8)?,
        DirectionSpec::generate(SweepMode::HorizontalDominant, 30.0, 4000.0, 8)?,
    ];
    let report = boundary_triviality_report(x, &sweeps, &o.model, &o.spec, o.budget(o.martin_walks, 100))?;
    let mut m = vec![
        Measurement::at_most("sup_deviation", report.sup_deviation.unwrap_or(f64::INFINITY), FULL_KERNEL_SUP_TOL),
        Measurement::at_most("failed points", report.failure_count() as f64, 0.0),
    ];
    let mut notes = Vec::new();
    for s in &report.sweeps {
        let n = s.points.len();
        let tail = &s.points[n - n.div_ceil(4).min(n)..];
        let first = tail.iter().map(|k| k.first_term).fold(0.0, f64::max);
        m.push(Measurement::flag(format!("{}: decreasing deviations", s.sweep.mode), s.decreasing));
        m.push(Measurement::at_most(format!("{}: tail first term", s.sweep.mode), first, FIRST_TERM_TAIL_TOL));
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|k| format!("{}:K={:.4},first={:.4}", k.y, k.value, k.first_term))
            .collect();
        notes.push(format!("{}: {}", s.sweep.mode, pts.join(" ")));
    }
    Ok((m, notes))
}

fn opposite_half_plane(o: &VerifyOptions) -> Outcome {
    let (x, y) = (LatticePoint::new(0, 2), LatticePoint::new(0, -2));
    let (hp, w) = (Orientation::half_plane(), WalkParams::simple());
    let est = occupation_before_return(x, y, &hp, &w, o.budget(o.occupation_episodes, 110))?;
    // the same count from full episode records, without the structural shortcut
    let b = o.budget(o.occupation_episodes, 111);
    let counts = par_chunks(b.seed, "opposite", b.n_walks, |rng, count| -> Result<(u64, u64)> {
        let mut visits = 0;
        let mut truncated = 0;
        for _ in 0..count {
            let e = run_excursion(x, &hp, &w, rng, b.horizon)?;
            visits += e.visits.get(&y).copied().unwrap_or(0);
            truncated += e.truncated as u64;
        }
        Ok((visits, truncated))
    });
    let (mut visits, mut truncated) = (0, 0);
    for c in counts {
        let (v, t) = c?;
        visits += v;
        truncated += t;
    }
    Ok((
        vec![
            Measurement::at_most("occupation_before_return value", est.value, 0.0),
            Measurement::at_most("occupation_before_return std error", est.std_error, 0.0),
            Measurement::at_most("visits in simulated episodes", visits as f64, 0.0),
        ],
        vec![format!("{} episodes simulated, {truncated} truncated", b.n_walks)],
    ))
}

fn green_origin(o: &VerifyOptions) -> Outcome {
    let g = gamma(0, &o.model, &o.spec)? / PI;
    let e = estimate_green(
        LatticePoint::ORIGIN,
        LatticePoint::ORIGIN,
        &Orientation::half_plane(),
        &WalkParams::simple(),
        McBudget::new(o.green_walks, 200_000, o.seed.wrapping_add(120)),
    )?;
    // visits after the horizon are missed; ~1/sqrt(H) of the total
    let allowance = 4.0 * e.std_error + 5e-3;
    Ok((
        vec![
            Measurement::at_most("G0(0,0) >= 1 - 1e-6 (shortfall)", 1.0 - 1e-6 - g, 0.0),
            Measurement::at_most("|MC - gamma(0)/pi| - allowance", (e.value - g).abs() - allowance, 0.0),
        ],
        vec![format!("gamma(0)/pi = {g:.10}, MC {:.6} ± {:.6}", e.value, e.std_error)],
    ))
}

fn projection_rows() -> Outcome {
    let profiles = [
        DriftProfile::constant(1.0 / 3.0, 1.0 / 3.0)?,
        DriftProfile::constant(0.0, 0.5)?,
        DriftProfile::constant(1.0 / 3.0, 1.0 / 3.0)?.with_row(0, 0.9, 0.05)?,
    ];
    let mut worst: f64 = 0.0;
    for d in profiles.iter() {
        let c = vertical_projection_chain(&WalkParams::simple().with_drift(d.clone())?)?;
        for x in -10..=10 {
            let (s, u, dn) = c.row(x);
            worst = worst.max((s + u + dn - 1.0).abs());
        }
    }
    let third = vertical_projection_chain(&WalkParams::simple().with_drift(profiles[0].clone())?)?;
    let dev = [-1i64, 0, 1]
        .iter()
        .map(|&d| (third.prob(4, 4 + d) - 1.0 / 3.0).abs())
        .fold(0.0, f64::max);
    Ok((
        vec![
            Measurement::at_most("max |row sum - 1|", worst, 1e-15),
            Measurement::at_most("p=q=1/3 kernel deviation", dev, 1e-15),
        ],
        vec![],
    ))
}

fn projection_simulation(o: &VerifyOptions) -> Outcome {
    let drift = DriftProfile::constant(1.0 / 3.0, 1.0 / 3.0)?.with_row(2, 0.5, 0.25)?;
    let w = WalkParams::simple().with_drift(drift)?;
    let chain = vertical_projection_chain(&w)?;
    let hp = Orientation::half_plane();
    let n = o.occupation_episodes.max(1);
    let mut m = Vec::new();
    for (i, row) in [0i64, 2, 5].into_iter().enumerate() {
        let counts = par_chunks(o.seed.wrapping_add(130 + i as u64), "projection", n, |rng, count| -> Result<[u64; 3]> {
            let mut c = [0u64; 3];
            for _ in 0..count {
                let v = step(LatticePoint::new(0, row), &hp, &w, rng)?;
                c[(v.v2 - row + 1) as usize] += 1;
            }
            Ok(c)
        });
        let mut tot = [0u64; 3];
        for c in counts {
            let c = c?;
            for k in 0..3 {
                tot[k] += c[k];
            }
        }
        let (stay, up, down) = chain.row(row);
        let worst = [(down, tot[0]), (stay, tot[1]), (up, tot[2])]
            .iter()
            .map(|&(p, c)| {
                let se = (p * (1.0 - p) / n as f64).sqrt().max(f64::MIN_POSITIVE);
                (c as f64 / n as f64 - p).abs() / se
            })
            .fold(0.0, f64::max);
        m.push(Measurement::at_most(format!("row {row}: max deviation in SE"), worst, 4.0));
    }
    Ok((m, vec![]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions::default().scaled(0.01)
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::Cf, Suite::Green, Suite::Embedded, Suite::Full, Suite::Poisson, Suite::All] {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn all_suite_covers_every_check() {
        let mut ids: Vec<&str> = [Suite::Cf, Suite::Green, Suite::Embedded, Suite::Full, Suite::Poisson]
            .iter()
            .flat_map(|s| s.ids().iter().copied())
            .collect();
        ids.sort();
        let mut all = Suite::All.ids().to_vec();
        all.sort();
        assert_eq!(ids, all);
    }

    #[test]
    fn deterministic_checks_pass() {
        for id in ["C1", "C5", "C9", "P1"] {
            let r = run_check(id, &quick(), None);
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn known_asymptotic_failure_is_the_slope() {
        let r = run_check("C4", &quick(), None);
        assert!(!r.pass);
        let failing: Vec<&str> = r.measurements.iter().filter(|m| !m.pass).map(|m| m.name.as_str()).collect();
        assert_eq!(failing, vec!["residual slope"]);
    }

    #[test]
    fn structural_check_passes_at_small_budget() {
        assert!(run_check("C11", &quick(), None).pass);
        assert!(run_check("P2", &quick(), None).pass);
    }

    #[test]
    fn unknown_check_is_reported() {
        let r = run_check("C99", &quick(), None);
        assert!(!r.pass && r.notes[0].contains("unknown"));
    }

    #[test]
    fn report_is_reproducible() {
        let a = run_suite(Suite::Poisson, &quick()).unwrap();
        let b = run_suite(Suite::Poisson, &quick()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.to_csv().starts_with("id,measurement,value,bound,pass\n"));
    }

    #[test]
    fn sampling_floor_matches_simulation() {
        use rand::{Rng, SeedableRng};
        let table = ProbabilityTable {
            support: (0..200).collect(),
            masses: (0..200).map(|k| 0.5f64.powi(k + 1)).collect(),
            tail_bound: 0.0,
        };
        let n = 20_000u64;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let reps = 200;
        let mut mean_tv = 0.0;
        for _ in 0..reps {
            let mut counts = std::collections::BTreeMap::new();
            for _ in 0..n {
                let mut k = 0i64;
                while rng.gen_bool(0.5) {
                    k += 1;
                }
                *counts.entry(k).or_insert(0.0) += 1.0 / n as f64;
            }
            mean_tv += table.total_variation(&counts) / reps as f64;
        }
        let floor = sampling_tv_floor(&table, n);
        assert!((mean_tv / floor - 1.0).abs() < 0.05, "{mean_tv} vs {floor}");
    }

}
