//! Command-line front end. Every run writes its outputs, the resolved
//! `config.json` and a `manifest.json` with content hashes into `--out`.

mod report;

use clap::{ArgAction, ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use conewave::assumptions::{self, DEFAULT_FAN};
use conewave::fdtd::{self, Chi, GridSpec, Outer, Probe, RunOptions, Source};
use conewave::flow::{self, ContinuationPolicy, RayState};
use conewave::surface::{self, ConeSurface, PolygonScene};
use conewave::words::{self, LedgerOutput};
use conewave::{Error, Vec2};
use num_rational::Rational64;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "conewave", version, about = "Diffractive geodesics, assumption checks and wave experiments on cone surfaces")]
struct Cli {
    /// Seed for every randomized stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// JSON file of flag values; flags on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Validate or double a scene file.
    #[command(subcommand)]
    Scene(SceneCmd),
    /// Trace geodesic chains from one initial state.
    Trace(TraceArgs),
    /// Run the assumption checkers.
    Check(CheckArgs),
    /// Forbidden-word scan or regularity ledger.
    Words(WordsArgs),
    /// Finite-difference wave run with probes.
    Fdtd(FdtdArgs),
    /// Summarize a directory of run bundles.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum SceneCmd {
    Validate {
        file: PathBuf,
    },
    Double {
        file: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

#[derive(clap::Args, Debug)]
struct TraceArgs {
    /// Scene or surface file.
    input: PathBuf,
    /// `x,y,theta,sheet`.
    #[arg(long, allow_hyphen_values = true)]
    start: String,
    /// `geometric`, `stop` or `fan:k`.
    #[arg(long, default_value = "geometric")]
    policy: String,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Which {
    All,
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
}

#[derive(clap::Args, Debug)]
struct CheckArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    assumption: Which,
    /// Non-trapping horizon (default 10·R1).
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    /// Longest cone-to-cone geodesic examined (default 4·L).
    #[arg(long)]
    max_length: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_FAN)]
    fan: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Scan {
    Forbidden,
    Ledger,
}

#[derive(clap::Args, Debug)]
struct WordsArgs {
    input: PathBuf,
    #[arg(long = "delta-a", alias = "deltaA", default_value_t = 0.1)]
    delta_a: f64,
    /// Radius of the discs around cone points (default L/300).
    #[arg(long = "delta-psi", alias = "deltaPsi")]
    delta_psi: Option<f64>,
    #[arg(long, value_enum, default_value = "forbidden")]
    scan: Scan,
    #[arg(long, default_value_t = 2)]
    n: u32,
    /// Input Sobolev order, `p` or `p/q`.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    s: String,
    #[arg(long, default_value_t = 4)]
    max_len: usize,
    /// Longest chain of cone-to-cone geodesics (default 2.5·L).
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(clap::Args, Debug)]
struct FdtdArgs {
    /// Scene file, or surface file with `--doubled`.
    input: PathBuf,
    #[arg(long, default_value_t = 1.0 / 32.0)]
    h: f64,
    /// Time step (default h/2).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T", alias = "t-final", default_value_t = 5.0)]
    t_final: f64,
    /// `x,y,f0`.
    #[arg(long, allow_hyphen_values = true)]
    source: String,
    #[arg(long, default_value_t = 0)]
    source_sheet: usize,
    /// Probe file: one `x,y` or `x,y,sheet` per line.
    #[arg(long)]
    probes: Option<PathBuf>,
    /// Run on the doubled surface instead of the exterior.
    #[arg(long)]
    doubled: bool,
    /// Half-side of the square grid (default R1 + sponge).
    #[arg(long)]
    domain: Option<f64>,
    /// Sponge width (default max(20h, 0.5)).
    #[arg(long)]
    sponge: Option<f64>,
    /// Reflecting outer walls instead of the sponge.
    #[arg(long)]
    reflecting: bool,
    /// Radius of the energy cutoff χ (default R0).
    #[arg(long)]
    chi: Option<f64>,
    /// Also dump the final field.
    #[arg(long)]
    snapshot: bool,
}

#[derive(clap::Args, Debug)]
struct ReportArgs {
    bundle: PathBuf,
}

pub(crate) enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn main(args: Vec<OsString>) -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let (cli, matches) = match parse(args) {
        Ok(x) => x,
        Err(Parse::Clap(e)) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return code;
        }
        Err(Parse::Config(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("{}", Cli::command().render_usage());
            return 64;
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    match run(&cli, &matches) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            64
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

enum Parse {
    Clap(clap::Error),
    Config(String),
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Merges a config file into the argument list: missing subcommands come
/// from its `command` array, and every other key fills a flag that was not
/// given on the command line.
fn parse(mut args: Vec<OsString>) -> std::result::Result<(Cli, ArgMatches), Parse> {
    let Some(path) = config_path(&args) else {
        let m = Cli::command().try_get_matches_from(&args).map_err(Parse::Clap)?;
        let cli = Cli::from_arg_matches(&m).map_err(Parse::Clap)?;
        return Ok((cli, m));
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Parse::Config(format!("config {}: {e}", path.display())))?;
    let obj: Map<String, Value> = serde_json::from_str(&text)
        .map_err(|e| Parse::Config(format!("config {} is not a JSON object: {e}", path.display())))?;
    let mut m = Cli::command().try_get_matches_from(&args);
    // Without a subcommand on the command line, the config supplies it; any
    // subcommand flags given alongside only parse once it is in place.
    if let (Err(e), Some(cmd)) = (&m, obj.get("command").and_then(Value::as_array)) {
        if !matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            let words: Vec<OsString> = cmd.iter().filter_map(scalar).map(OsString::from).collect();
            let mut with = args.clone();
            with.splice(1..1, words);
            if let Ok(mm) = Cli::command().try_get_matches_from(&with) {
                args = with;
                m = Ok(mm);
            }
        }
    }
    let m = m.map_err(Parse::Clap)?;
    let root = Cli::command();
    let (sub, sub_m) = deepest(&root, &m);
    for (key, v) in &obj {
        if key == "command" || key == "config" {
            continue;
        }
        let id = key.replace('-', "_");
        let arg = sub
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_id().as_str() == id || a.get_long() == Some(key.as_str()))
            .ok_or_else(|| Parse::Config(format!("unknown config key {key:?}")))?;
        let id = arg.get_id().as_str();
        let given = [sub_m, &m]
            .iter()
            .any(|mm| mm.try_contains_id(id).unwrap_or(false) && mm.value_source(id) == Some(clap::parser::ValueSource::CommandLine));
        if given {
            continue;
        }
        let long = arg
            .get_long()
            .ok_or_else(|| Parse::Config(format!("config key {key:?} names a positional argument; use \"command\"")))?;
        match (arg.get_action(), v) {
            (ArgAction::SetTrue, Value::Bool(true)) => args.push(format!("--{long}").into()),
            (ArgAction::SetTrue, Value::Bool(false)) => {}
            (_, v) => {
                let s = scalar(v).ok_or_else(|| Parse::Config(format!("config key {key:?} must be a scalar")))?;
                args.push(format!("--{long}={s}").into());
            }
        }
    }
    let m = Cli::command().try_get_matches_from(&args).map_err(Parse::Clap)?;
    let cli = Cli::from_arg_matches(&m).map_err(Parse::Clap)?;
    Ok((cli, m))
}

fn deepest<'a>(cmd: &'a clap::Command, m: &'a ArgMatches) -> (&'a clap::Command, &'a ArgMatches) {
    match m.subcommand() {
        Some((name, sm)) => match cmd.find_subcommand(name) {
            Some(sc) => deepest(sc, sm),
            None => (cmd, m),
        },
        None => (cmd, m),
    }
}

/// The resolved configuration: subcommand path with positionals, then every
/// flag value, defaults included.
fn resolved_config(m: &ArgMatches) -> Value {
    let root = Cli::command();
    let mut command = Vec::new();
    let mut flags = Map::new();
    let mut cmd = &root;
    let mut cur = m;
    loop {
        for a in cmd.get_arguments() {
            let id = a.get_id().as_str();
            if id == "config" || id == "help" || id == "version" || !cur.try_contains_id(id).unwrap_or(false) {
                continue;
            }
            let raw: Vec<String> = cur
                .get_raw(id)
                .map(|vs| vs.map(|v| v.to_string_lossy().into_owned()).collect())
                .unwrap_or_default();
            if a.is_positional() {
                command.extend(raw);
            } else if matches!(a.get_action(), ArgAction::SetTrue) {
                flags.insert(a.get_long().unwrap_or(id).to_string(), json!(cur.get_flag(id)));
            } else if let Some(v) = raw.into_iter().next() {
                flags.insert(a.get_long().unwrap_or(id).to_string(), json!(v));
            }
        }
        match cur.subcommand() {
            Some((name, sm)) => {
                command.push(name.to_string());
                cmd = cmd.find_subcommand(name).expect("subcommand exists");
                cur = sm;
            }
            None => break,
        }
    }
    flags.insert("command".into(), json!(command));
    Value::Object(flags)
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory with a running list of written files.
struct Bundle {
    dir: PathBuf,
    files: Vec<(String, String, u64)>,
}

impl Bundle {
    fn new(dir: &Path) -> CliResult<Bundle> {
        std::fs::create_dir_all(dir)?;
        Ok(Bundle {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let p = self.dir.join(name);
        std::fs::write(&p, bytes)?;
        self.files.push((name.to_string(), sha256_hex(bytes), bytes.len() as u64));
        Ok(p)
    }

    /// Records a file written elsewhere, by absolute path.
    fn record(&mut self, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path)?;
        let abs = std::fs::canonicalize(path)?;
        self.files
            .push((abs.to_string_lossy().into_owned(), sha256_hex(&bytes), bytes.len() as u64));
        Ok(())
    }

    fn finish(mut self, command: &str, cli: &Cli, config: &Value) -> CliResult<()> {
        let cfg = serde_json::to_vec_pretty(config).map_err(Error::from)?;
        let cfg_hash = sha256_hex(&cfg);
        self.write("config.json", &cfg)?;
        let files: Vec<Value> = self
            .files
            .iter()
            .map(|(p, h, n)| json!({"path": p, "sha256": h, "bytes": n}))
            .collect();
        let manifest = json!({
            "tool": "conewave",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config_sha256": cfg_hash,
            "seed": cli.seed,
            "threads": cli.threads.unwrap_or_else(rayon::current_num_threads),
            "files": files,
        });
        let text = serde_json::to_vec_pretty(&manifest).map_err(Error::from)?;
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Usage(format!("no such file: {}", path.display())),
        _ => CliError::Run(e.into()),
    })
}

/// A scene file is validated and turned into its surface; a surface file is
/// audited and used as is.
fn load(path: &Path) -> CliResult<(ConeSurface, Option<PolygonScene>)> {
    let text = read_input(path)?;
    let v: Value = serde_json::from_str(&text).map_err(Error::from)?;
    if v.get("sheets").is_some() {
        let s: ConeSurface = serde_json::from_value(v).map_err(Error::from)?;
        s.audit()?;
        return Ok((s, None));
    }
    let scene = PolygonScene::from_json(&text)?;
    scene.validate()?;
    let s = surface::surface_from_scene(&scene)?;
    Ok((s, Some(scene)))
}

fn floats(s: &str, n: usize, what: &str) -> CliResult<Vec<f64>> {
    let v: std::result::Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == n => Ok(v),
        _ => Err(CliError::Usage(format!("{what} expects {n} comma-separated numbers, got {s:?}"))),
    }
}

fn parse_rational(s: &str) -> CliResult<Rational64> {
    let bad = || CliError::Usage(format!("--s expects an integer or p/q, got {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let (p, q): (i64, i64) = (p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?);
            if q == 0 {
                return Err(bad());
            }
            Ok(Rational64::new(p, q))
        }
        None => Ok(Rational64::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

fn run(cli: &Cli, m: &ArgMatches) -> CliResult<i32> {
    let config = resolved_config(m);
    match &cli.cmd {
        Cmd::Scene(SceneCmd::Validate { file }) => {
            let scene = PolygonScene::from_json(&read_input(file)?)?;
            scene.validate()?;
            let s = surface::surface_from_scene(&scene)?;
            println!(
                "valid: {} obstacle(s), {} slit(s), {} cone point(s), L = {}",
                scene.obstacles.len(),
                scene.slits.len(),
                s.cone_points.len(),
                surface::min_cone_distance(&s)
            );
            Ok(0)
        }
        Cmd::Scene(SceneCmd::Double { file, output }) => {
            let (s, _) = load(file)?;
            if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(output, s.to_json())?;
            let mut b = Bundle::new(&cli.out)?;
            b.record(output)?;
            b.finish("scene double", cli, &config)?;
            println!("wrote {} ({} cone points)", output.display(), s.cone_points.len());
            Ok(0)
        }
        Cmd::Trace(a) => cmd_trace(cli, a, &config),
        Cmd::Check(a) => cmd_check(cli, a, &config),
        Cmd::Words(a) => cmd_words(cli, a, &config),
        Cmd::Fdtd(a) => cmd_fdtd(cli, a, &config),
        Cmd::Report(a) => {
            let files = report::build(&a.bundle)?;
            let mut b = Bundle::new(&cli.out)?;
            for (name, bytes) in &files {
                b.write(name, bytes)?;
            }
            b.finish("report", cli, &config)?;
            println!("wrote {}", cli.out.join("summary.md").display());
            Ok(0)
        }
    }
}

fn cmd_trace(cli: &Cli, a: &TraceArgs, config: &Value) -> CliResult<i32> {
    let (s, _) = load(&a.input)?;
    let st = floats(&a.start, 4, "--start")?;
    let sheet = st[3] as usize;
    if st[3] < 0.0 || st[3].fract() != 0.0 || sheet >= s.sheets.len() {
        return Err(CliError::Usage(format!("sheet {} does not exist", st[3])));
    }
    let policy: ContinuationPolicy = a.policy.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let start = Vec2::new(st[0], st[1]);
    s.locate(sheet, start)?;
    let res = flow::trace(&s, &RayState::new(sheet, start, st[2]), a.horizon, policy);
    let mut b = Bundle::new(&cli.out)?;
    b.write("chains.csv", flow::chains_to_csv(&res.chains).as_bytes())?;
    let summary = json!({
        "chains": res.chains.len(),
        "truncated": res.truncated,
        "terminals": res.chains.iter().map(|c| format!("{:?}", c.terminal)).collect::<Vec<_>>(),
        "obstacles": s.obstacles,
        "slits": s.edges.iter().filter(|_| s.obstacles.is_empty()).map(|e| [e.a, e.b]).collect::<Vec<_>>(),
    });
    b.write("trace.json", &serde_json::to_vec_pretty(&summary).map_err(Error::from)?)?;
    b.finish("trace", cli, config)?;
    println!("{} chain(s){}", res.chains.len(), if res.truncated { " (truncated)" } else { "" });
    Ok(0)
}

fn cmd_check(cli: &Cli, a: &CheckArgs, config: &Value) -> CliResult<i32> {
    let (s, _) = load(&a.input)?;
    let l = surface::min_cone_distance(&s);
    let max_len = a.max_length.unwrap_or(if l.is_finite() { 4.0 * l } else { 4.0 * s.euclidean_radius });
    let mut b = Bundle::new(&cli.out)?;
    let mut failed = false;
    let want = |k: Which| a.assumption == Which::All || a.assumption == k;
    if want(Which::One) {
        let horizon = a.horizon.unwrap_or(10.0 * s.euclidean_radius);
        let r = assumptions::check_nontrapping(&s, a.samples, horizon, cli.seed)?;
        let j = r.to_json();
        println!("assumption 1: {}{}", j["verdict"].as_str().unwrap_or("?"), r.t0().map(|t| format!(" (T0 = {t:.4})")).unwrap_or_default());
        failed |= j["verdict"] == "Fail";
        b.write("assumption1.json", &serde_json::to_vec_pretty(&j).map_err(Error::from)?)?;
    }
    if want(Which::Two) {
        let r = assumptions::check_collinear(&s, max_len, a.fan);
        let j = r.to_json();
        println!("assumption 2: {} ({} witness(es))", j["verdict"].as_str().unwrap_or("?"), r.witnesses.len());
        failed |= !r.passed();
        b.write("assumption2.json", &serde_json::to_vec_pretty(&j).map_err(Error::from)?)?;
    }
    if want(Which::Three) {
        let r = assumptions::check_conjugacy(&s, max_len, a.fan)?;
        let j = r.to_json();
        println!("assumption 3: {} ({} certificate(s))", j["verdict"].as_str().unwrap_or("?"), r.certificates.len());
        failed |= !r.passed();
        b.write("assumption3.json", &serde_json::to_vec_pretty(&j).map_err(Error::from)?)?;
    }
    b.finish("check", cli, config)?;
    Ok(if failed { 1 } else { 0 })
}

fn cmd_words(cli: &Cli, a: &WordsArgs, config: &Value) -> CliResult<i32> {
    let (s, _) = load(&a.input)?;
    let l = surface::min_cone_distance(&s);
    if !l.is_finite() {
        return Err(CliError::Run(Error::Unsupported("word scans need at least two cone points".into())));
    }
    let delta_psi = a.delta_psi.unwrap_or(l / 300.0);
    let horizon = a.horizon.unwrap_or(2.5 * l);
    let p = words::build_partition(&s, a.delta_a, delta_psi, cli.seed)?;
    let mut b = Bundle::new(&cli.out)?;
    match a.scan {
        Scan::Forbidden => {
            let scan = words::forbidden_scan(&s, &p, a.max_len, horizon)?;
            let violations: Vec<Value> = scan
                .violations
                .iter()
                .map(|w| json!({"word": w.spelled(), "times": w.times, "tags": w.tags}))
                .collect();
            let j = json!({
                "violations": violations,
                "candidates": scan.candidates,
                "skipped": scan.skipped,
                "partial": scan.partial,
                "patches": p.patch_count(),
                "psiOffset": words::psi_offset(delta_psi, l),
            });
            b.write("forbidden.json", &serde_json::to_vec_pretty(&j).map_err(Error::from)?)?;
            println!("{} forbidden word(s) among {} candidate(s)", scan.violations.len(), scan.candidates);
        }
        Scan::Ledger => {
            let s_in = parse_rational(&a.s)?;
            let (ws, partial) = words::three_cone_words(&s, &p, horizon, words::SCAN_CAP)?;
            let mut rows = Vec::new();
            for w in ws {
                let e = words::smoothing_ledger(&w.tags, a.n, s_in)?;
                rows.push((w, e));
            }
            b.write("ledger.csv", words::ledger_csv(&rows).as_bytes())?;
            let smoothed = rows.iter().filter(|(_, e)| matches!(e.output, LedgerOutput::Smoothed(_))).count();
            println!("{} word(s), {smoothed} smoothed{}", rows.len(), if partial { " (cap reached)" } else { "" });
        }
    }
    b.finish("words", cli, config)?;
    Ok(0)
}

fn read_probes(path: &Path) -> CliResult<Vec<Probe>> {
    let text = read_input(path)?;
    let mut out = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let v: std::result::Result<Vec<f64>, _> = line.split(',').map(|x| x.trim().parse::<f64>()).collect();
        match v {
            Ok(v) if v.len() == 2 || v.len() == 3 => out.push(Probe {
                id: out.len(),
                sheet: v.get(2).copied().unwrap_or(0.0) as usize,
                pos: Vec2::new(v[0], v[1]),
            }),
            // A header line is allowed.
            _ if out.is_empty() && line.chars().any(|c| c.is_ascii_alphabetic()) => {}
            _ => return Err(CliError::Usage(format!("bad probe line {line:?} in {}", path.display()))),
        }
    }
    Ok(out)
}

fn scene_of(s: &ConeSurface) -> PolygonScene {
    PolygonScene::new(s.obstacles.clone(), s.r0, s.euclidean_radius, s.bc)
}

fn cmd_fdtd(cli: &Cli, a: &FdtdArgs, config: &Value) -> CliResult<i32> {
    let (s, scene) = load(&a.input)?;
    if !s.edges.is_empty() && s.obstacles.is_empty() {
        return Err(CliError::Run(Error::Unsupported("the wave solver handles polygon obstacles only".into())));
    }
    let scene = scene.unwrap_or_else(|| scene_of(&s));
    let src = floats(&a.source, 3, "--source")?;
    let outer = if a.reflecting { Outer::Reflecting } else { Outer::Absorbing };
    let sponge = if a.reflecting { 0.0 } else { a.sponge.unwrap_or((20.0 * a.h).max(0.5)) };
    let domain = a.domain.unwrap_or(scene.r1 + sponge);
    let grid = GridSpec::new(a.h, a.dt.unwrap_or(0.5 * a.h), domain, sponge, a.t_final)?;
    let source = Source {
        sheet: a.source_sheet,
        ..Source::ricker(Vec2::new(src[0], src[1]), src[2], a.h)
    };
    let probes = match &a.probes {
        Some(p) => read_probes(p)?,
        None => Vec::new(),
    };
    let chi = Chi::disc(a.chi.unwrap_or(scene.r0));
    let opts = RunOptions {
        probes: probes.clone(),
        chi: Some(chi),
        outer,
        ..Default::default()
    };
    let out = if a.doubled {
        fdtd::run_doubled(&s, grid, source, &opts)?
    } else {
        if a.source_sheet != 0 || probes.iter().any(|p| p.sheet != 0) {
            return Err(CliError::Usage("sheets other than 0 need --doubled".into()));
        }
        fdtd::run_exterior(&scene, grid, source, &opts)?
    };
    let f0 = source.f0;
    let bands = [(0.5 * f0, 1.5 * f0), (1.5 * f0, 2.5 * f0)];
    let mut b = Bundle::new(&cli.out)?;
    b.write("probes.csv", out.series.to_csv(&bands).as_bytes())?;
    let mut echi = String::from("t,E_chi\n");
    for (t, e) in &out.series.e_chi {
        echi.push_str(&format!("{t},{e}\n"));
    }
    b.write("energy.csv", echi.as_bytes())?;
    let surf = surface::double_exterior(&scene)?;
    let aopts = fdtd::ArrivalOptions::for_source(&source);
    let tol = 2.0 * a.h + source.half_width();
    let mut arr = String::from("probeId,sheet,x,y,lineOfSight,fdtdArrival,pathLength,difference,tolerance\n");
    for (i, p) in probes.iter().enumerate() {
        let first = fdtd::arrival_times(&out.series, i, &aopts).first().copied();
        // Shortest chains are only compared on the source's sheet.
        let path = (p.sheet == source.sheet)
            .then(|| flow::shortest_diffractive_path(&surf, source.pos, p.pos))
            .flatten()
            .map(|(l, _)| l);
        let los = p.sheet == source.sheet && surf.segment_clear(source.pos, p.pos);
        let fmt = |x: Option<f64>| x.map(|v| format!("{v}")).unwrap_or_default();
        let diff = first.zip(path).map(|(t, l)| t - l);
        arr.push_str(&format!(
            "{},{},{},{},{los},{},{},{},{tol}\n",
            p.id,
            p.sheet,
            p.pos.x,
            p.pos.y,
            fmt(first),
            fmt(path),
            fmt(diff)
        ));
    }
    b.write("arrivals.csv", arr.as_bytes())?;
    let plot: Vec<(String, Vec<(f64, f64)>)> = vec![("E_chi".into(), out.series.e_chi.clone())];
    b.write("energy.svg", fdtd::series_svg("localized energy", &plot, true).as_bytes())?;
    if !probes.is_empty() {
        let lines: Vec<(String, Vec<(f64, f64)>)> = probes
            .iter()
            .enumerate()
            .take(6)
            .map(|(i, p)| (format!("probe {}", p.id), out.series.times.iter().copied().zip(out.series.u[i].iter().copied()).collect()))
            .collect();
        b.write("probes.svg", fdtd::series_svg("probe signals", &lines, false).as_bytes())?;
    }
    if a.snapshot {
        for sheet in 0..out.field.u.len() {
            let name = format!("snapshot_sheet{sheet}.bin");
            let p = b.dir.join(&name);
            fdtd::write_snapshot(&p, &out.field, sheet)?;
            let bytes = std::fs::read(&p)?;
            b.files.push((name, sha256_hex(&bytes), bytes.len() as u64));
        }
    }
    b.finish("fdtd", cli, config)?;
    println!("{} steps, {} probe(s)", grid.steps(), probes.len());
    Ok(0)
}
