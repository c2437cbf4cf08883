//! `report`: verifies the manifests under a bundle directory and renders a
//! markdown summary with SVG figures.

use super::{sha256_hex, CliResult};
use conewave::flow::{self, ContinuationPolicy, InteractionKind, RayState, Terminal};
use conewave::surface::facing_obstacles_scene;
use conewave::{fdtd, Error, Vec2};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

struct Run {
    dir: PathBuf,
    command: String,
    /// Basename to full path of every listed file.
    files: BTreeMap<String, PathBuf>,
}

fn find_manifests(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<Vec<_>>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            find_manifests(&p, out)?;
        } else if e.file_name() == "manifest.json" {
            out.push(p);
        }
    }
    Ok(())
}

fn load_runs(bundle: &Path) -> CliResult<Vec<Run>> {
    if !bundle.is_dir() {
        return Err(super::CliError::Usage(format!("no such bundle directory: {}", bundle.display())));
    }
    let mut paths = Vec::new();
    find_manifests(bundle, &mut paths)?;
    let mut runs = Vec::new();
    let mut problems = Vec::new();
    let mut version: Option<String> = None;
    for mp in paths {
        let dir = mp.parent().unwrap_or(bundle).to_path_buf();
        let m: Value = match std::fs::read_to_string(&mp).map(|t| serde_json::from_str::<Value>(&t)) {
            Ok(Ok(v)) => v,
            _ => {
                problems.push(format!("{}: unreadable manifest", mp.display()));
                continue;
            }
        };
        let command = m["command"].as_str().unwrap_or("").to_string();
        if command == "report" {
            continue;
        }
        if m["tool"] != "conewave" {
            problems.push(format!("{}: not a conewave manifest", mp.display()));
            continue;
        }
        let v = m["version"].as_str().unwrap_or("").to_string();
        match &version {
            Some(first) if *first != v => problems.push(format!("{}: version {v} differs from {first}", mp.display())),
            None => version = Some(v),
            _ => {}
        }
        let mut files = BTreeMap::new();
        for f in m["files"].as_array().into_iter().flatten() {
            let rel = f["path"].as_str().unwrap_or("");
            let p = if Path::new(rel).is_absolute() { PathBuf::from(rel) } else { dir.join(rel) };
            match std::fs::read(&p) {
                Ok(bytes) if sha256_hex(&bytes) == f["sha256"].as_str().unwrap_or("") => {
                    let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                    files.insert(name, p);
                }
                Ok(_) => problems.push(format!("{}: hash mismatch", p.display())),
                Err(_) => problems.push(format!("{}: listed but missing", p.display())),
            }
        }
        if let Some(cfg) = files.get("config.json") {
            let h = std::fs::read(cfg).map(|b| sha256_hex(&b)).unwrap_or_default();
            if m["config_sha256"].as_str() != Some(h.as_str()) {
                problems.push(format!("{}: config hash mismatch", mp.display()));
            }
        }
        runs.push(Run { dir, command, files });
    }
    if !problems.is_empty() {
        return Err(Error::Bundle(problems.join("; ")).into());
    }
    if runs.is_empty() {
        return Err(Error::Bundle(format!("no manifests under {}", bundle.display())).into());
    }
    Ok(runs)
}

fn read_json(p: &Path) -> CliResult<Value> {
    Ok(serde_json::from_str(&std::fs::read_to_string(p)?).map_err(Error::from)?)
}

/// CSV rows as header-keyed maps.
fn read_csv(p: &Path) -> CliResult<Vec<BTreeMap<String, String>>> {
    let text = std::fs::read_to_string(p)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap_or("").split(',').map(String::from).collect();
    Ok(lines
        .filter(|l| !l.is_empty())
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect())
}

struct Figure {
    polygons: Vec<Vec<Vec2>>,
    /// `(points, dashed, colour)`.
    paths: Vec<(Vec<Vec2>, bool, &'static str)>,
}

impl Figure {
    fn svg(&self, title: &str) -> String {
        let pts = self.polygons.iter().flatten().chain(self.paths.iter().flat_map(|p| p.0.iter()));
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in pts {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
        }
        let (w, pad) = (600.0, 30.0);
        let scale = (w - 2.0 * pad) / (x1 - x0).max(y1 - y0).max(1e-9);
        let hgt = 2.0 * pad + (y1 - y0) * scale + 20.0;
        let tx = |p: Vec2| format!("{:.2},{:.2}", pad + (p.x - x0) * scale, hgt - pad - (p.y - y0) * scale);
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{hgt:.0}\" font-family=\"sans-serif\" font-size=\"12\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
             <text x=\"{}\" y=\"18\" text-anchor=\"middle\">{}</text>\n",
            w / 2.0,
            title.replace('&', "&amp;").replace('<', "&lt;")
        );
        for poly in &self.polygons {
            let p: Vec<String> = poly.iter().map(|v| tx(*v)).collect();
            s.push_str(&format!("<polygon points=\"{}\" fill=\"#ccc\" stroke=\"#444\"/>\n", p.join(" ")));
        }
        for (path, dashed, colour) in &self.paths {
            let p: Vec<String> = path.iter().map(|v| tx(*v)).collect();
            let dash = if *dashed { " stroke-dasharray=\"6,4\"" } else { "" };
            s.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"{dash}/>\n",
                p.join(" ")
            ));
        }
        s.push_str("</svg>\n");
        s
    }
}

/// The two-obstacle scene with its trapped diffractive orbit drawn dashed.
fn figure1() -> CliResult<(String, usize)> {
    let scene = facing_obstacles_scene();
    let s = conewave::surface::double_exterior(&scene)?;
    let res = flow::trace(
        &s,
        &RayState::new(0, Vec2::new(0.0, 0.0), 0.0),
        14.0,
        ContinuationPolicy::DiffractiveFan(4),
    );
    let orbit = res
        .chains
        .iter()
        .filter(|c| c.terminal == Terminal::Horizon && c.interactions.len() >= 3)
        .find(|c| c.interactions.iter().all(|i| i.kind == InteractionKind::DiffractiveStrict))
        .ok_or_else(|| Error::Unsupported("trapped orbit not found".into()))?;
    let mut pts = vec![orbit.start.point.pos];
    pts.extend(orbit.segments.iter().map(|seg| seg.end()));
    let fig = Figure {
        polygons: scene.obstacles.clone(),
        paths: vec![(pts, true, "#d62728")],
    };
    Ok((fig.svg("two-obstacle scene: trapped diffractive orbit"), orbit.interactions.len()))
}

fn trajectories(run: &Run) -> CliResult<Option<String>> {
    let Some(csv) = run.files.get("chains.csv") else {
        return Ok(None);
    };
    let rows = read_csv(csv)?;
    let f = |r: &BTreeMap<String, String>, k: &str| r.get(k).and_then(|v| v.parse::<f64>().ok()).unwrap_or(0.0);
    let mut chains: BTreeMap<String, Vec<Vec2>> = BTreeMap::new();
    let mut sheets: BTreeMap<String, usize> = BTreeMap::new();
    for r in &rows {
        let id = r.get("chainId").cloned().unwrap_or_default();
        let (a, d, l) = (Vec2::new(f(r, "x0"), f(r, "y0")), Vec2::new(f(r, "dirx"), f(r, "diry")), f(r, "length"));
        let c = chains.entry(id.clone()).or_default();
        if c.is_empty() {
            c.push(a);
        }
        c.push(a + d * l);
        sheets.entry(id).or_insert(f(r, "sheet") as usize);
    }
    let obstacles = match run.files.get("trace.json") {
        Some(p) => serde_json::from_value(read_json(p)?["obstacles"].clone()).unwrap_or_default(),
        None => Vec::new(),
    };
    let colours = ["#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];
    let paths = chains
        .into_iter()
        .map(|(id, pts)| (pts, false, colours[sheets[&id] % colours.len()]))
        .collect();
    Ok(Some(Figure { polygons: obstacles, paths }.svg("traced chains (colour = starting sheet)")))
}

/// Renders the summary; returns `(file name, contents)` pairs.
pub(super) fn build(bundle: &Path) -> CliResult<Vec<(String, Vec<u8>)>> {
    let runs = load_runs(bundle)?;
    let mut md = String::from("# conewave report\n\n## Runs\n\n| directory | command | files |\n|---|---|---|\n");
    for r in &runs {
        md.push_str(&format!("| {} | {} | {} |\n", r.dir.display(), r.command, r.files.len()));
    }
    let mut out: Vec<(String, Vec<u8>)> = Vec::new();

    let checks: Vec<&Run> = runs.iter().filter(|r| r.command == "check").collect();
    if !checks.is_empty() {
        md.push_str("\n## Assumptions\n\n| directory | assumption | verdict | detail |\n|---|---|---|---|\n");
        for r in checks {
            for k in 1..=3 {
                let Some(p) = r.files.get(&format!("assumption{k}.json")) else {
                    continue;
                };
                let j = read_json(p)?;
                let detail = match k {
                    1 => match j["certificates"][0]["T0"].as_f64() {
                        Some(t) => format!("T0 = {t:.4}"),
                        None => "no T0".into(),
                    },
                    2 => format!("{} witness(es)", j["witnesses"].as_array().map_or(0, Vec::len)),
                    _ => format!("{} certificate(s)", j["certificates"].as_array().map_or(0, Vec::len)),
                };
                md.push_str(&format!(
                    "| {} | {k} | {} | {detail} |\n",
                    r.dir.display(),
                    j["verdict"].as_str().unwrap_or("?")
                ));
            }
        }
    }

    for r in runs.iter().filter(|r| r.command == "words") {
        if let Some(p) = r.files.get("forbidden.json") {
            let j = read_json(p)?;
            md.push_str(&format!(
                "\n## Forbidden words ({})\n\n{} violation(s) among {} candidate(s).\n",
                r.dir.display(),
                j["violations"].as_array().map_or(0, Vec::len),
                j["candidates"]
            ));
        }
        if let Some(p) = r.files.get("ledger.csv") {
            let rows = read_csv(p)?;
            let mut by_rule: BTreeMap<(String, String), usize> = BTreeMap::new();
            for row in &rows {
                let tags = row.get("tags").cloned().unwrap_or_default();
                let o = row.get("outputOrder").cloned().unwrap_or_default();
                *by_rule.entry((tags, o)).or_default() += 1;
            }
            md.push_str(&format!(
                "\n## Ledger ({})\n\n| tags | output | words |\n|---|---|---|\n",
                r.dir.display()
            ));
            for ((t, o), n) in by_rule {
                md.push_str(&format!("| {t} | {o} | {n} |\n"));
            }
        }
    }

    for (i, r) in runs.iter().filter(|r| r.command == "fdtd").enumerate() {
        if let Some(p) = r.files.get("arrivals.csv") {
            let rows = read_csv(p)?;
            md.push_str(&format!(
                "\n## Arrival times ({})\n\n| probe | sheet | x | y | line of sight | FDTD | shortest chain | difference | tolerance |\n|---|---|---|---|---|---|---|---|---|\n",
                r.dir.display()
            ));
            for row in rows {
                let g = |k: &str| row.get(k).cloned().unwrap_or_default();
                md.push_str(&format!(
                    "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                    g("probeId"),
                    g("sheet"),
                    g("x"),
                    g("y"),
                    g("lineOfSight"),
                    g("fdtdArrival"),
                    g("pathLength"),
                    g("difference"),
                    g("tolerance")
                ));
            }
        }
        if let Some(p) = r.files.get("energy.csv") {
            let series: Vec<(f64, f64)> = read_csv(p)?
                .iter()
                .filter_map(|row| Some((row.get("t")?.parse().ok()?, row.get("E_chi")?.parse().ok()?)))
                .collect();
            let name = format!("energy_{i}.svg");
            out.push((
                name.clone(),
                fdtd::series_svg("localized energy (log10)", &[("E_chi".into(), series)], true).into_bytes(),
            ));
            md.push_str(&format!("\n![localized energy]({name})\n"));
        }
    }

    for (i, r) in runs.iter().filter(|r| r.command == "trace").enumerate() {
        if let Some(svg) = trajectories(r)? {
            let name = format!("trajectories_{i}.svg");
            out.push((name.clone(), svg.into_bytes()));
            md.push_str(&format!("\n## Trajectories ({})\n\n![chains]({name})\n", r.dir.display()));
        }
    }

    if runs.iter().any(|r| r.command != "trace") {
        let (svg, bounces) = figure1()?;
        out.push(("figure1.svg".into(), svg.into_bytes()));
        md.push_str(&format!(
            "\n## Two-obstacle scene\n\nThe dashed orbit bounces {bounces} times between the facing obstacles, \
             each time as a strict diffraction; geometric flow from the same start escapes.\n\n![figure 1](figure1.svg)\n"
        ));
    }
    out.insert(0, ("summary.md".into(), md.into_bytes()));
    Ok(out)
}
