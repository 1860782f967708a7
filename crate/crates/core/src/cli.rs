//! The `owk` command line: argument parsing, config merging, output files and
//! run manifests.
//!
//! Exit codes: 0 success, 1 invalid input (including unknown subcommands), 2
//! numeric or simulation failure, 3 a failed `verify` check.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analytic::{embedded_cf, embedded_cf_closed, CfForm, CfModel};
use crate::error::{Error, Result};
use crate::green::{gamma, green_from, green_halfplane, green_to, hitting_distribution, hitting_law_window, mu_table, QuadratureSpec};
use crate::lattice::{LatticeConfig, LatticePoint, WalkParams};
use crate::martin::{boundary_triviality_report, DirectionSpec, SweepMode};
use crate::simulate::{empirical_cf, simulate_endpoints, write_episode_csv, McBudget, DEFAULT_HORIZON};
use crate::verify::{run_suite, Suite, VerifyOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

/// Settings shared by every subcommand. A `--config` file overrides the
/// corresponding flags key by key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Geometric parameter of the characteristic-function model; `None` takes
    /// the default of `form` (2/3 for the excursion form, 1/3 for the reciprocal).
    #[serde(default)]
    pub p: Option<f64>,
    pub form: CfForm,
    pub orientation: LatticeConfig,
    pub spec: QuadratureSpec,
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: None,
            form: CfForm::Excursion,
            orientation: LatticeConfig::half_plane(),
            spec: QuadratureSpec::default(),
            seed: 1,
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn model(&self) -> Result<CfModel> {
        let p = self.p.unwrap_or(match self.form {
            CfForm::Excursion => 2.0 / 3.0,
            CfForm::Reciprocal => 1.0 / 3.0,
        });
        CfModel::new(p, self.form)
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        self.spec.validate()?;
        self.orientation.orientation()?.validate()?;
        self.orientation.drift()?;
        Ok(())
    }

    /// Overlays the keys present in `file` (a JSON object) onto `self`.
    pub fn merged_with(&self, file: &Value) -> Result<RunConfig> {
        let mut base = serde_json::to_value(self).map_err(|e| Error::validation(e.to_string()))?;
        merge(&mut base, file);
        serde_json::from_value(base).map_err(|e| Error::validation(format!("config: {e}")))
    }

    fn require_half_plane(&self, what: &str) -> Result<()> {
        let o = self.orientation.orientation()?;
        if !o.is_half_plane_lattice() || self.orientation.drift()?.is_some() {
            return Err(Error::validation(format!(
                "`{what}` evaluates closed forms of the half-plane lattice without drift"
            )));
        }
        Ok(())
    }
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                // the orientation is replaced wholesale: its fields only make sense together
                if k != "orientation" && v.is_object() && b.get(k).is_some_and(Value::is_object) {
                    merge(b.get_mut(k).expect("checked"), v);
                } else {
                    b.insert(k.clone(), v.clone());
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Written next to every output (or to stderr when the output is stdout).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub config: RunConfig,
    pub wall_time_seconds: f64,
    pub exit_code: i32,
    pub diagnostics: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

fn parse_point(s: &str) -> std::result::Result<LatticePoint, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_sweep(s: &str) -> std::result::Result<SweepMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormArg {
    Excursion,
    Reciprocal,
}

#[derive(Debug, Parser)]
#[command(name = "owk", version, about = "Green functions, hitting laws and Martin kernels on one-way oriented lattices")]
struct Cli {
    /// JSON run configuration; its keys override the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Geometric parameter of the CF model.
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true, value_enum)]
    form: Option<FormArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Re[g(r)/r] against its explicit expansion on (0, π].
    Phi {
        #[arg(long, default_value_t = 1000)]
        grid: usize,
    },
    /// γ(x) and sqrt(x)·γ(x).
    Gamma {
        #[arg(long = "x", value_delimiter = ',', allow_negative_numbers = true, required = true)]
        x: Vec<i64>,
    },
    /// Green function between the axis point z and targets y.
    Green {
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        z: i64,
        #[arg(long = "y", value_parser = parse_point, allow_hyphen_values = true, required = true)]
        y: Vec<LatticePoint>,
    },
    /// Law of the first axis point reached from y.
    Nu {
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        y: LatticePoint,
        /// Mass allowed beyond the window.
        #[arg(long, default_value_t = 1e-2)]
        tail: f64,
        /// Fixed window instead of the tail criterion.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Law of the height at which column y1 is first reached before the axis.
    Mu {
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        x: LatticePoint,
        #[arg(long, allow_negative_numbers = true)]
        y1: i64,
        #[arg(long, default_value_t = 20)]
        u_max: i64,
    },
    /// Excursions to the axis: episode log (csv) or summary (json).
    Simulate {
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0")]
        start: LatticePoint,
        #[arg(long, default_value_t = 10_000)]
        n_walks: u64,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: u64,
    },
    /// Martin kernel of the full walk along direction sweeps.
    Martin {
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        x: LatticePoint,
        /// `lambda=<real>`, `horizontal` or `vertical=<y1>`; repeatable.
        #[arg(long = "sweep", value_parser = parse_sweep, default_value = "lambda=1")]
        sweep: Vec<SweepMode>,
        #[arg(long, default_value_t = 30.0)]
        norm_min: f64,
        #[arg(long, default_value_t = 4000.0)]
        norm_max: f64,
        #[arg(long, default_value_t = 8)]
        points: usize,
        /// Absolute quadrature tolerance (the averaged kernel is a closed-form
        /// integral, so there is no hitting-law truncation to control).
        #[arg(long)]
        tail: Option<f64>,
        #[arg(long = "mc-budget", default_value_t = 100_000)]
        mc_budget: u64,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: u64,
    },
    /// Acceptance checks.
    Verify {
        #[arg(long, value_parser = parse_suite, default_value = "all")]
        suite: Suite,
        /// Multiplies every Monte Carlo sample size.
        #[arg(long, default_value_t = 1.0)]
        budget_scale: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Phi { .. } => "phi",
            Command::Gamma { .. } => "gamma",
            Command::Green { .. } => "green",
            Command::Nu { .. } => "nu",
            Command::Mu { .. } => "mu",
            Command::Simulate { .. } => "simulate",
            Command::Martin { .. } => "martin",
            Command::Verify { .. } => "verify",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Martin { .. } | Command::Verify { .. } => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// 17 significant digits, round-trip safe.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::numeric(format!("serialization: {e}")))
}

/// Rendered outputs of one command plus what goes into the manifest.
struct Rendered {
    primary: String,
    /// Same values in the other format, written next to the primary file.
    sibling: Option<(Format, String)>,
    diagnostics: Vec<String>,
    verify_failed: bool,
}

impl Rendered {
    fn plain(primary: String) -> Self {
        Rendered {
            primary,
            sibling: None,
            diagnostics: vec![],
            verify_failed: false,
        }
    }
}

fn execute(cmd: &Command, cfg: &RunConfig, format: Format) -> Result<Rendered> {
    let model = cfg.model()?;
    let spec = cfg.spec;
    match cmd {
        Command::Phi { grid } => {
            if *grid == 0 {
                return Err(Error::validation("grid must be at least 1"));
            }
            let p = cfg.p.unwrap_or(1.0 / 3.0);
            let mut rows = Vec::with_capacity(*grid);
            for k in 1..=*grid {
                let t = PI * k as f64 / *grid as f64;
                let a = embedded_cf(t, p)?;
                let b = embedded_cf_closed(t, p)?;
                rows.push((t, a, b, (a - b).abs()));
            }
            let worst = rows.iter().map(|r| r.3).fold(0.0, f64::max);
            let out = match format {
                Format::Csv => {
                    let mut s = String::from("t,phi_prob,phi_closed,absdiff\n");
                    for (t, a, b, d) in &rows {
                        s.push_str(&format!("{},{},{},{}\n", num(*t), num(*a), num(*b), num(*d)));
                    }
                    s
                }
                Format::Json => {
                    let v: Vec<Value> = rows
                        .iter()
                        .map(|(t, a, b, d)| serde_json::json!({"t": t, "phi_prob": a, "phi_closed": b, "absdiff": d}))
                        .collect();
                    json(&v)?
                }
            };
            let mut r = Rendered::plain(out);
            r.diagnostics.push(format!("p={p}; max absdiff {worst:.3e}"));
            Ok(r)
        }
        Command::Gamma { x } => {
            cfg.require_half_plane("gamma")?;
            let mut rows = Vec::new();
            for &xi in x {
                let g = gamma(xi, &model, &spec)?;
                rows.push((xi, g, (xi.unsigned_abs() as f64).sqrt() * g));
            }
            Ok(Rendered::plain(match format {
                Format::Csv => {
                    let mut s = String::from("x,gamma,sqrtx_gamma\n");
                    for (xi, g, sg) in &rows {
                        s.push_str(&format!("{xi},{},{}\n", num(*g), num(*sg)));
                    }
                    s
                }
                Format::Json => json(
                    &rows
                        .iter()
                        .map(|(xi, g, sg)| serde_json::json!({"x": xi, "gamma": g, "sqrtx_gamma": sg}))
                        .collect::<Vec<_>>(),
                )?,
            }))
        }
        Command::Green { z, y } => {
            cfg.require_half_plane("green")?;
            let mut rows = Vec::new();
            for &yi in y {
                let h = green_halfplane(*z, yi, &model, &spec)?;
                rows.push((yi, h.value, green_from(yi, *z, &model, &spec)?, green_to(*z, yi, &model, &spec)?));
            }
            Ok(Rendered::plain(match format {
                Format::Csv => {
                    let mut s = String::from("z,y1,y2,halfplane,green_from,green_to\n");
                    for (yi, h, f, t) in &rows {
                        s.push_str(&format!("{z},{},{},{},{},{}\n", yi.v1, yi.v2, num(*h), num(*f), num(*t)));
                    }
                    s
                }
                Format::Json => json(
                    &rows
                        .iter()
                        .map(|(yi, h, f, t)| serde_json::json!({"z": z, "y": yi, "halfplane": h, "green_from": f, "green_to": t}))
                        .collect::<Vec<_>>(),
                )?,
            }))
        }
        Command::Nu { y, tail, window } => {
            cfg.require_half_plane("nu")?;
            let table = match window {
                Some(w) => hitting_law_window(*y, &model, *w)?,
                None => hitting_distribution(*y, &model, *tail)?,
            };
            let mut r = Rendered::plain(match format {
                Format::Csv => {
                    let mut s = String::from("v,nu_mass\n");
                    for (v, m) in table.support.iter().zip(&table.masses) {
                        s.push_str(&format!("{v},{}\n", num(*m)));
                    }
                    s
                }
                Format::Json => json(&table)?,
            });
            r.diagnostics.push(format!(
                "window {} sites, mass beyond window {:.3e}, total in window {:.16}",
                table.support.len(),
                table.tail_bound,
                table.total_mass()
            ));
            Ok(r)
        }
        Command::Mu { x, y1, u_max } => {
            cfg.require_half_plane("mu")?;
            let table = mu_table(*x, *y1, *u_max, &spec)?;
            let mut r = Rendered::plain(match format {
                Format::Csv => {
                    let mut s = String::from("u,mu_mass\n");
                    for (u, m) in table.support.iter().zip(&table.masses) {
                        s.push_str(&format!("{u},{}\n", num(*m)));
                    }
                    s
                }
                Format::Json => json(&table)?,
            });
            r.diagnostics.push(format!("total mass up to u={u_max}: {:.16}", table.total_mass()));
            Ok(r)
        }
        Command::Simulate { start, n_walks, horizon } => {
            let o = cfg.orientation.orientation()?;
            let mut w = WalkParams::simple();
            if let Some(d) = cfg.orientation.drift()? {
                w = w.with_drift(d)?;
            }
            let eps = simulate_endpoints(*start, &o, &w, McBudget::new(*n_walks, *horizon, cfg.seed))?;
            let done: Vec<i64> = eps.iter().filter(|e| !e.truncated).map(|e| e.x_sigma1).collect();
            let truncated = eps.len() - done.len();
            let diag = format!("{} episodes, {truncated} truncated at horizon {horizon}", eps.len());
            let mut r = Rendered::plain(match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_episode_csv(&mut buf, &eps).map_err(|e| Error::validation(e.to_string()))?;
                    String::from_utf8(buf).expect("ascii")
                }
                Format::Json => {
                    let taus: Vec<f64> = eps.iter().filter(|e| !e.truncated).map(|e| e.tau1 as f64).collect();
                    let ts: Vec<f64> = (0..=10).map(|k| k as f64 * PI / 10.0).collect();
                    let cf = if done.is_empty() { vec![] } else { empirical_cf(&done, &ts)? };
                    json(&serde_json::json!({
                        "start": start,
                        "n_walks": n_walks,
                        "horizon": horizon,
                        "completed": done.len(),
                        "truncated": truncated,
                        "mean_x_sigma1": done.iter().map(|&v| v as f64).sum::<f64>() / done.len().max(1) as f64,
                        "median_tau1": median(taus),
                        "empirical_cf": cf,
                    }))?
                }
            });
            r.diagnostics.push(diag);
            Ok(r)
        }
        Command::Martin {
            x,
            sweep,
            norm_min,
            norm_max,
            points,
            tail,
            mc_budget,
            horizon,
        } => {
            cfg.require_half_plane("martin")?;
            let spec = match tail {
                Some(t) => QuadratureSpec { abs_tol: *t, ..spec },
                None => spec,
            };
            let sweeps = sweep
                .iter()
                .map(|m| DirectionSpec::generate(*m, *norm_min, *norm_max, *points))
                .collect::<Result<Vec<_>>>()?;
            let report = boundary_triviality_report(*x, &sweeps, &model, &spec, McBudget::new(*mc_budget, *horizon, cfg.seed))?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv).map_err(|e| Error::validation(e.to_string()))?;
            let csv = String::from_utf8(csv).expect("ascii");
            let js = json(&report)?;
            let (primary, sibling) = match format {
                Format::Json => (js, (Format::Csv, csv)),
                Format::Csv => (csv, (Format::Json, js)),
            };
            let mut diagnostics: Vec<String> = report
                .sweeps
                .iter()
                .flat_map(|s| s.failures.iter().map(|f| format!("{}: {}", f.y, f.message)))
                .collect();
            diagnostics.push(format!("sup_deviation {:?}", report.sup_deviation));
            Ok(Rendered {
                primary,
                sibling: Some(sibling),
                diagnostics,
                verify_failed: false,
            })
        }
        Command::Verify { suite, budget_scale } => {
            if !(*budget_scale > 0.0) {
                return Err(Error::validation("budget-scale must be positive"));
            }
            let opts = VerifyOptions {
                seed: cfg.seed,
                model,
                spec,
                ..VerifyOptions::default()
            }
            .scaled(*budget_scale);
            let report = run_suite(*suite, &opts)?;
            let diagnostics = report
                .checks
                .iter()
                .map(|c| format!("{} {} {}", c.id, if c.pass { "PASS" } else { "FAIL" }, c.title))
                .collect();
            Ok(Rendered {
                primary: match format {
                    Format::Json => json(&report)?,
                    Format::Csv => report.to_csv(),
                },
                sibling: None,
                diagnostics,
                verify_failed: !report.pass,
            })
        }
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[v.len() / 2])
}

fn sibling_path(path: &Path, format: Format) -> PathBuf {
    path.with_extension(match format {
        Format::Csv => "csv",
        Format::Json => "json",
    })
}

fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::validation(format!("cannot write {}: {e}", path.display())))
}

/// Parses `args` (including the program name) and runs the command. Results go
/// to `out` unless an output path is configured; messages and a stdout-run
/// manifest go to `err`.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let started = Instant::now();
    let cfg = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let format = cfg.output.format.unwrap_or_else(|| cli.command.default_format());
    let mut manifest = RunManifest {
        tool: "owk".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command.name().into(),
        args: args.iter().skip(1).cloned().collect(),
        config: cfg.clone(),
        wall_time_seconds: 0.0,
        exit_code: 0,
        diagnostics: vec![],
        outputs: vec![],
    };
    let result = execute(&cli.command, &cfg, format).and_then(|r| {
        match &cfg.output.path {
            Some(path) => {
                write_file(path, &r.primary)?;
                manifest.outputs.push(path.clone());
                if let Some((f, text)) = &r.sibling {
                    let p = sibling_path(path, *f);
                    if &p != path {
                        write_file(&p, text)?;
                        manifest.outputs.push(p);
                    }
                }
            }
            None => {
                out.write_all(r.primary.as_bytes())
                    .map_err(|e| Error::validation(format!("stdout: {e}")))?;
            }
        }
        Ok(r)
    });
    let code = match result {
        Ok(r) => {
            for d in &r.diagnostics {
                let _ = writeln!(err, "{d}");
            }
            manifest.diagnostics = r.diagnostics;
            if r.verify_failed {
                3
            } else {
                0
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let Error::Numeric { diagnostics, .. } = &e {
                for d in diagnostics {
                    let _ = writeln!(err, "  {d}");
                }
            }
            manifest.diagnostics.push(e.to_string());
            e.exit_code()
        }
    };
    manifest.exit_code = code;
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    let text = match json(&manifest) {
        Ok(t) => t,
        Err(_) => return code,
    };
    match &cfg.output.path {
        Some(path) => {
            if let Err(e) = write_file(&manifest_path(path), &text) {
                let _ = writeln!(err, "error: {e}");
            }
        }
        None => {
            let _ = write!(err, "{text}");
        }
    }
    code
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = cli.p {
        cfg.p = Some(p);
    }
    if let Some(f) = cli.form {
        cfg.form = match f {
            FormArg::Excursion => CfForm::Excursion,
            FormArg::Reciprocal => CfForm::Reciprocal,
        };
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.output.path = cli.output.clone();
    cfg.output.format = cli.format;
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| Error::validation(format!("config {}: {e}", path.display())))?;
        cfg = cfg.merged_with(&v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
