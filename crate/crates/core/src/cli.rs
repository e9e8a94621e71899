//! Command-line front end.
//!
//! Every command resolves one [`RunConfig`] (flag over config file over
//! default), validates it, runs, writes its artifacts and a `manifest.json`
//! into the output directory, and prints one JSON document on stdout.
//! Exit codes: 0 success, 1 solver or numerical failure, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::asymptotics::{large_q_comparison, large_q_grid};
use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid, SeedKind, SeedProfile};
use crate::physical::{compare_models, q_string_squared};
use crate::regime::{classify, deviation_profile, find_qcr};
use crate::solvers::{solve, solve_ferm2, IterationConfig, Model, SolveReport};
use crate::spectral::{find_omega, find_q0, track_root, CharModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "nonlocal", version, about = "Fixed-point solvers for nonlocal Gaussian integral equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Solve one model at one q^2.
    Solve,
    /// Solve at each q^2 of --q2-list, one directory per probe.
    Sweep,
    /// Bisect for the critical q^2 of ferm1 or ferm2.
    Qcr,
    /// Root of the linearized characteristic equation.
    CharRoots,
    /// Double real root of the characteristic equation.
    Q0,
    /// Smoothed two-field against single-equation fields.
    Compare,
    /// Rescaled large-q solution against the oscillator orbit.
    LargeQ,
    /// Relative deviation of the first two half-axis iterates.
    Deviation,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Qcr => "qcr",
            Command::CharRoots => "char-roots",
            Command::Q0 => "q0",
            Command::Compare => "compare",
            Command::LargeQ => "large-q",
            Command::Deviation => "deviation",
        }
    }

    fn default_model(self) -> Model {
        match self {
            Command::Solve => Model::Padic,
            Command::Deviation => Model::PadicHalf,
            Command::Compare => Model::Ferm2,
            _ => Model::Ferm1,
        }
    }

    fn default_q_squared(self) -> f64 {
        match self {
            Command::Compare => q_string_squared(),
            Command::LargeQ => 25.0,
            _ => 0.0,
        }
    }
}

/// Flags shared by all commands. Each may also be set as `key=value` in the
/// file given by `--config` (keys use `_` or `-`).
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// padic, padic-half, ferm1 or ferm2.
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub q2: Option<String>,
    /// t_min,t_max,n_points
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, global = true)]
    pub max_steps: Option<String>,
    #[arg(long, global = true)]
    pub step_tol: Option<String>,
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// neg-step, neg-arctan or neg-erf.
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// true or false: eps(0) = (-1)^n in the two-field iteration.
    #[arg(long, global = true)]
    pub alternating_origin: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<String>,
    #[arg(long, global = true)]
    pub record_every: Option<String>,
    /// Worker threads for sweep and qcr; 0 picks one per core.
    #[arg(long, global = true)]
    pub jobs: Option<String>,
    /// Comma-separated q^2 values for sweep.
    #[arg(long, global = true)]
    pub q2_list: Option<String>,
    /// lo,hi for qcr.
    #[arg(long, global = true)]
    pub bracket: Option<String>,
    #[arg(long, global = true)]
    pub bisections: Option<String>,
    /// re,im starting point for char-roots.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub guess: Option<String>,
    /// Continuation steps for char-roots when no guess is given.
    #[arg(long, global = true)]
    pub track_steps: Option<String>,
    /// Flat key=value file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "model",
    "q2",
    "grid",
    "max_steps",
    "step_tol",
    "window",
    "seed",
    "alternating_origin",
    "out",
    "record_every",
    "jobs",
    "q2_list",
    "bracket",
    "bisections",
    "guess",
    "track_steps",
];

impl Flags {
    fn settings(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("model", &self.model),
            ("q2", &self.q2),
            ("grid", &self.grid),
            ("max_steps", &self.max_steps),
            ("step_tol", &self.step_tol),
            ("window", &self.window),
            ("seed", &self.seed),
            ("alternating_origin", &self.alternating_origin),
            ("out", &self.out),
            ("record_every", &self.record_every),
            ("jobs", &self.jobs),
            ("q2_list", &self.q2_list),
            ("bracket", &self.bracket),
            ("bisections", &self.bisections),
            ("guess", &self.guess),
            ("track_steps", &self.track_steps),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect()
    }
}

/// Parses a flat `key = value` file; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value, got `{line}`", lineno + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Parse(format!("config line {}: unknown key `{}`", lineno + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn parse_num<T>(key: &'static str, s: &str) -> Result<T>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e| invalid(key, format!("`{s}`: {e}")))
}

fn parse_list(key: &'static str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|p| parse_num(key, p)).collect()
}

fn parse_pair(key: &'static str, s: &str) -> Result<(f64, f64)> {
    match parse_list(key, s)?.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err(invalid(key, format!("expected two comma-separated numbers, got `{s}`"))),
    }
}

fn parse_grid(s: &str) -> Result<Grid> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(invalid("grid", format!("expected t_min,t_max,n_points, got `{s}`")));
    }
    Grid::new(parse_num("grid", parts[0])?, parse_num("grid", parts[1])?, parse_num("grid", parts[2])?)
}

fn parse_bool(key: &'static str, s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(invalid(key, format!("expected true or false, got `{s}`"))),
    }
}

fn char_model(model: Model) -> Result<CharModel> {
    match model {
        Model::Ferm1 => Ok(CharModel::Ferm1),
        Model::Ferm2 => Ok(CharModel::Ferm2),
        other => Err(invalid("model", format!("no characteristic equation for `{other}`"))),
    }
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: Model,
    pub q_squared: f64,
    pub grid: Grid,
    pub max_steps: usize,
    pub step_tol: f64,
    pub window: f64,
    pub seed: SeedProfile,
    pub out: PathBuf,
    pub record_every: usize,
    pub jobs: usize,
    pub q2_list: Vec<f64>,
    pub bracket: (f64, f64),
    pub bisections: usize,
    pub guess: Option<Complex64>,
    pub track_steps: usize,
}

impl RunConfig {
    /// Builds and validates the configuration from merged settings.
    pub fn resolve(command: Command, settings: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| settings.get(k).map(String::as_str);
        let model = get("model").map_or(Ok(command.default_model()), str::parse)?;
        let q_squared = get("q2").map_or(Ok(command.default_q_squared()), |s| parse_num("q2", s))?;
        let grid = match get("grid") {
            Some(s) => parse_grid(s)?,
            None if command == Command::LargeQ => large_q_grid(q_squared)?,
            None if model == Model::PadicHalf => Grid::new(-10.0, 0.0, 1001)?,
            None => Grid::standard(),
        };
        let kind: SeedKind = get("seed").map_or(Ok(SeedKind::NegStep), str::parse)?;
        let alternating = get("alternating_origin").map_or(Ok(true), |s| parse_bool("alternating_origin", s))?;
        let bracket = match get("bracket") {
            Some(s) => parse_pair("bracket", s)?,
            None if model == Model::Ferm2 => (1.5, 3.0),
            None => (1.0, 1.8),
        };
        let guess = get("guess").map(|s| parse_pair("guess", s)).transpose()?.map(|(re, im)| Complex64::new(re, im));
        let cfg = RunConfig {
            command,
            model,
            q_squared,
            grid,
            max_steps: get("max_steps").map_or(Ok(2000), |s| parse_num("max_steps", s))?,
            step_tol: get("step_tol").map_or(Ok(1e-9), |s| parse_num("step_tol", s))?,
            window: get("window").map_or(Ok(crate::kernels::DEFAULT_WINDOW), |s| parse_num("window", s))?,
            seed: SeedProfile { kind, alternating_origin: alternating },
            out: PathBuf::from(get("out").unwrap_or("out")),
            record_every: get("record_every").map_or(Ok(0), |s| parse_num("record_every", s))?,
            jobs: get("jobs").map_or(Ok(1), |s| parse_num("jobs", s))?,
            q2_list: get("q2_list").map_or(Ok(vec![0.96, 1.0, 1.4, 1.8]), |s| parse_list("q2_list", s))?,
            bracket,
            bisections: get("bisections").map_or(Ok(6), |s| parse_num("bisections", s))?,
            guess,
            track_steps: get("track_steps").map_or(Ok(100), |s| parse_num("track_steps", s))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn iteration(&self) -> IterationConfig {
        IterationConfig {
            grid: self.grid,
            max_steps: self.max_steps,
            step_tol: self.step_tol,
            window: self.window,
            q_squared: self.q_squared,
            seed: self.seed,
            record_every: self.record_every,
            initial: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let it = self.iteration();
        match self.command {
            Command::Solve => it.validate(self.model),
            Command::Sweep => {
                if self.q2_list.is_empty() {
                    return Err(invalid("q2_list", "must not be empty"));
                }
                self.q2_list.iter().try_for_each(|&q2| it.clone().with_q_squared(q2).validate(self.model))
            }
            Command::Qcr => {
                char_model(self.model)?;
                let (lo, hi) = self.bracket;
                if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
                    return Err(invalid("bracket", format!("need finite 0 <= lo < hi, got [{lo}, {hi}]")));
                }
                it.validate(self.model)
            }
            Command::CharRoots => {
                char_model(self.model)?;
                if !(self.q_squared >= 0.0) || !self.q_squared.is_finite() {
                    return Err(invalid("q2", format!("must be finite and >= 0, got {}", self.q_squared)));
                }
                if let Some(g) = self.guess {
                    if !g.re.is_finite() || !g.im.is_finite() || g == Complex64::new(0.0, 0.0) {
                        return Err(invalid("guess", format!("must be finite and nonzero, got {g}")));
                    }
                }
                Ok(())
            }
            Command::Q0 => char_model(self.model).map(|_| ()),
            Command::Compare => it.validate(Model::Ferm2),
            Command::LargeQ => {
                if !(self.q_squared > 0.0) {
                    return Err(invalid("q2", format!("must be positive, got {}", self.q_squared)));
                }
                it.validate(Model::Ferm1)
            }
            Command::Deviation => it.validate(Model::PadicHalf),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command.name(),
            "model": self.model.name(),
            "q_squared": self.q_squared,
            "grid": {
                "t_min": self.grid.t_min(),
                "t_max": self.grid.t_max(),
                "n_points": self.grid.n_points(),
            },
            "max_steps": self.max_steps,
            "step_tol": self.step_tol,
            "window": self.window,
            "seed": self.seed.kind.name(),
            "alternating_origin": self.seed.alternating_origin,
            "out": self.out.display().to_string(),
            "record_every": self.record_every,
            "jobs": self.jobs,
            "q2_list": self.q2_list,
            "bracket": [self.bracket.0, self.bracket.1],
            "bisections": self.bisections,
            "guess": self.guess.map(|g| json!([g.re, g.im])),
            "track_steps": self.track_steps,
        })
    }
}

/// Files written by a command, relative paths in write order.
struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn field(&mut self, name: &str, f: &Field) -> Result<String> {
        if let Some(parent) = Path::new(name).parent() {
            fs::create_dir_all(self.dir.join(parent))?;
        }
        f.write_csv(self.path(name))?;
        self.files.push(name.to_string());
        Ok(self.path(name).display().to_string())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<String> {
        fs::write(self.path(name), text)?;
        self.files.push(name.to_string());
        Ok(self.path(name).display().to_string())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<String> {
        self.text(name, &pretty(v))
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_else(|_| "null".into());
    s.push('\n');
    s
}

/// Outcome of a command body: the stdout document and whether a solver
/// reported failure through its termination cause.
struct Outcome {
    document: Value,
    failed: bool,
}

fn report_json(r: &SolveReport, csv: &str) -> Value {
    let mut v = r.to_json(Some(csv));
    if r.model == Model::Ferm1 {
        let regime = classify(r);
        v["regime"] = json!({ "kind": regime.kind.to_string(), "evidence": regime.evidence });
    }
    v
}

/// Solves once into `art`, returning the report document.
fn solve_into(cfg: &RunConfig, it: &IterationConfig, art: &mut Artifacts) -> Result<(Value, bool)> {
    let (report, sigma) = if cfg.model == Model::Ferm2 {
        let (r, state) = solve_ferm2(it)?;
        (r, Some(state.sigma))
    } else {
        (solve(cfg.model, it)?, None)
    };
    let csv = art.field("final.csv", &report.final_field)?;
    let mut doc = report_json(&report, &csv);
    if let Some(sigma) = sigma {
        doc["sigma_csv_path"] = json!(art.field("sigma.csv", &sigma)?);
    }
    for (n, snap) in &report.snapshots {
        art.field(&format!("snapshots/step_{n:06}.csv"), snap)?;
    }
    art.json("report.json", &doc)?;
    Ok((doc, report.terminated_by.is_failure()))
}

fn execute(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let it = cfg.iteration();
    match cfg.command {
        Command::Solve => {
            let (document, failed) = solve_into(cfg, &it, art)?;
            Ok(Outcome { document, failed })
        }
        Command::Sweep => {
            let names: Vec<String> =
                cfg.q2_list.iter().enumerate().map(|(i, q2)| format!("probe_{i:03}_q2_{q2}")).collect();
            let probes: Vec<Result<(Value, Vec<String>)>> = cfg
                .q2_list
                .par_iter()
                .zip(names.par_iter())
                .map(|(&q2, name)| {
                    let mut sub = Artifacts::new(&art.dir.join(name))?;
                    let (doc, _) = solve_into(cfg, &it.clone().with_q_squared(q2), &mut sub)?;
                    Ok((doc, sub.files.iter().map(|f| format!("{name}/{f}")).collect()))
                })
                .collect();
            let mut rows = Vec::new();
            for p in probes {
                let (doc, files) = p?;
                art.files.extend(files);
                rows.push(json!({
                    "q_squared": doc["q_squared"],
                    "terminated_by": doc["terminated_by"],
                    "steps_taken": doc["steps_taken"],
                    "residual": doc["residual"],
                    "regime": doc.get("regime").map(|r| r["kind"].clone()),
                    "final_csv_path": doc["final_csv_path"],
                }));
            }
            let document = json!({ "model": cfg.model.name(), "probes": rows });
            art.json("sweep.json", &document)?;
            Ok(Outcome { document, failed: false })
        }
        Command::Qcr => {
            let est = find_qcr(cfg.model, cfg.bracket.0, cfg.bracket.1, &it, cfg.bisections)?;
            let document = est.to_json();
            art.json("qcr.json", &document)?;
            Ok(Outcome { document, failed: false })
        }
        Command::CharRoots => {
            let model = char_model(cfg.model)?;
            let root = match cfg.guess {
                Some(g) => find_omega(model, cfg.q_squared, g)?,
                None => track_root(model, cfg.q_squared, cfg.track_steps)?,
            };
            let document = root.to_json(model, cfg.q_squared);
            art.json("roots.json", &document)?;
            Ok(Outcome { document, failed: false })
        }
        Command::Q0 => {
            let model = char_model(cfg.model)?;
            let document = find_q0(model)?.to_json(model);
            art.json("q0.json", &document)?;
            Ok(Outcome { document, failed: false })
        }
        Command::Compare => {
            let c = compare_models(cfg.q_squared, &it)?;
            art.field("psi_exact.csv", &c.psi_exact)?;
            art.field("psi_approx.csv", &c.psi_approx)?;
            art.field("upsilon_exact.csv", &c.upsilon_exact)?;
            art.field("upsilon_approx.csv", &c.upsilon_approx)?;
            let document = c.to_json();
            art.json("compare.json", &document)?;
            Ok(Outcome { document, failed: false })
        }
        Command::LargeQ => {
            let c = large_q_comparison(cfg.q_squared, &it)?;
            art.field("final.csv", &c.report.final_field)?;
            art.field("rescaled.csv", &c.rescaled)?;
            art.text("orbit.csv", &c.orbit.to_csv())?;
            let document = c.to_json();
            art.json("large_q.json", &document)?;
            Ok(Outcome { document, failed: false })
        }
        Command::Deviation => {
            let d = deviation_profile(&it)?;
            art.field("delta.csv", &d.delta)?;
            art.field("phi1.csv", &d.phi1)?;
            art.field("phi2.csv", &d.phi2)?;
            let document = json!({ "delta_max": d.delta_max });
            art.json("deviation.json", &document)?;
            Ok(Outcome { document, failed: false })
        }
    }
}

/// Exit code for an error: 2 for bad input, 1 for everything the numerics
/// reported.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidGrid(_) | Error::InvalidParameter { .. } | Error::AsymmetricGrid { .. } | Error::Parse(_) => {
            EXIT_USAGE
        }
        _ => EXIT_FAILURE,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidGrid(_) => "InvalidGrid",
        Error::NonFiniteField { .. } => "NonFiniteField",
        Error::LengthMismatch { .. } => "LengthMismatch",
        Error::GridMismatch => "GridMismatch",
        Error::AsymmetricGrid { .. } => "AsymmetricGrid",
        Error::InvalidParameter { .. } => "InvalidParameter",
        Error::NonFiniteOutput { .. } => "NonFiniteOutput",
        Error::Solver(_) => "Solver",
        Error::DegenerateBracket { .. } => "DegenerateBracket",
        Error::NoConvergence { .. } => "NoConvergence",
        Error::DegenerateDerivative { .. } => "DegenerateDerivative",
        Error::TooFewSamples(_) => "TooFewSamples",
        Error::OutsideGrid(_) => "OutsideGrid",
        Error::Unbounded(_) => "Unbounded",
        Error::NotPeriodic(_) => "NotPeriodic",
        Error::Io(_) => "Io",
        Error::Parse(_) => "Parse",
    }
}

fn diagnosis(command: Option<Command>, kind: &str, message: String, code: i32) -> Value {
    json!({
        "status": "error",
        "command": command.map(Command::name),
        "error_kind": kind,
        "message": message,
        "exit_code": code,
    })
}

fn error_document(command: Option<Command>, e: &Error) -> Value {
    let mut v = diagnosis(command, error_kind(e), e.to_string(), exit_code(e));
    if let Error::Solver(t) = e {
        v["terminated_by"] = json!(t.to_string());
    }
    v
}

fn run_config(cfg: &RunConfig) -> (Value, i32) {
    let mut art = match Artifacts::new(&cfg.out) {
        Ok(a) => a,
        Err(e) => return (error_document(Some(cfg.command), &e), exit_code(&e)),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build();
    let result = match pool {
        Ok(pool) => pool.install(|| execute(cfg, &mut art)),
        Err(e) => Err(invalid("jobs", e.to_string())),
    };
    let (mut doc, code, status) = match result {
        Ok(o) if o.failed => (o.document, EXIT_FAILURE, "failed"),
        Ok(o) => (o.document, EXIT_OK, "ok"),
        Err(e) => {
            let doc = error_document(Some(cfg.command), &e);
            let _ = art.json("error.json", &doc);
            (doc, exit_code(&e), "error")
        }
    };
    doc["status"] = json!(status);
    let manifest = json!({
        "command": cfg.command.name(),
        "status": status,
        "exit_code": code,
        "config": cfg.to_json(),
        "files": art.files.iter().chain(std::iter::once(&"manifest.json".to_string())).collect::<Vec<_>>(),
    });
    if let Err(e) = fs::write(art.path("manifest.json"), pretty(&manifest)) {
        return (error_document(Some(cfg.command), &Error::from(e)), EXIT_FAILURE);
    }
    doc["manifest"] = json!(art.path("manifest.json").display().to_string());
    (doc, code)
}

/// Parses `argv` (program name first), runs the command and writes its JSON
/// document to `stdout`. Returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let doc = diagnosis(None, "Usage", e.to_string(), EXIT_USAGE);
            let _ = write!(stdout, "{}", pretty(&doc));
            return EXIT_USAGE;
        }
    };
    let resolved = resolve_cli(&cli);
    let (doc, code) = match resolved {
        Ok(cfg) => run_config(&cfg),
        Err(e) => (error_document(Some(cli.command), &e), exit_code(&e)),
    };
    let _ = write!(stdout, "{}", pretty(&doc));
    code
}

/// [`run_with`] on the process stdout.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock())
}

fn resolve_cli(cli: &Cli) -> Result<RunConfig> {
    let mut settings = match &cli.flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("cannot read config file {}: {e}", path.display())))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    settings.extend(cli.flags.settings());
    RunConfig::resolve(cli.command, &settings)
}
