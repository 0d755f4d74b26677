//! Command-line front end.
//!
//! Every subcommand prints one JSON report on stdout (keys sorted, the
//! resolved configuration and the tool version embedded) and writes its
//! artifacts under `--out`. Exit code 0 when everything ran and every gate
//! passed, 2 when a gate failed, 1 on usage or input errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::congruence::{
    focal_chart, solve_density, verify_speed_invariance, write_obj, ConservationPair,
    DensityOptions, PairField,
};
use crate::expr::{parse, Expr};
use crate::hodograph::{
    pipeline_solve, plot_script, verify_solution, PipelineOptions, PointStatus, SolutionGrid,
};
use crate::integrate::{write_grids_csv, Lattice, ScalarFieldGrid};
use crate::laplace::{laplace_transform, sequence_terminates};
use crate::system::{builtin, builtin_names, full_report, CoeffTable, DiagonalSystem};

pub const VERSION: &str = concat!("darboux ", env!("CARGO_PKG_VERSION"));

#[derive(Parser, Debug)]
#[command(
    name = "darboux",
    version,
    about = "Integrability diagnostics and hodograph solutions for diagonal systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// System file (TOML) or the name of a built-in system.
    system: String,
    /// Directory for artifacts; reports are also copied there.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tolerance for numeric identities at the samples.
    #[arg(long)]
    tol: Option<f64>,
    /// Smallest admissible gap between speeds.
    #[arg(long)]
    eps_hyp: Option<f64>,
    /// Number of sample points in the domain box.
    #[arg(long)]
    samples: Option<usize>,
    /// Sampling seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrability diagnostics.
    Diagnose {
        #[command(flatten)]
        common: Common,
    },
    /// Laplace sequence search for index `i`.
    Laplace {
        #[command(flatten)]
        common: Common,
        /// Row index whose coefficients should vanish.
        #[arg(long = "i")]
        i: usize,
        /// Also report the single `(i, j)` step.
        #[arg(long = "j")]
        j: Option<usize>,
        /// Longest j-path searched.
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Hodograph solution on an `(x, t)` lattice.
    Solve {
        #[command(flatten)]
        common: Common,
        /// One function per index, written in `v` (or `u1`).
        #[arg(long = "phi", required = true)]
        phi: Vec<String>,
        /// Extents and point counts `X,T,NX,NT`.
        #[arg(long, default_value = "0.1,0.1,41,41")]
        grid: String,
        /// Base point `x0,t0`.
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        origin: String,
        /// Value at the base point; the domain centre by default.
        #[arg(long, allow_hyphen_values = true)]
        u0: Option<String>,
        /// Solve even when the diagnostics deny order ≤ 1.
        #[arg(long)]
        force: bool,
        /// Residual gate.
        #[arg(long, default_value_t = 1e-5)]
        gate: f64,
    },
    /// Conservation laws, focal charts and the congruence transformation.
    Congruence {
        #[command(flatten)]
        common: Common,
        /// Check speed invariance of the `(I, J)` transformation.
        #[arg(long)]
        pair: Option<String>,
        /// Lattice points per axis; 21 for two components, 11 otherwise.
        #[arg(long)]
        points: Option<usize>,
        /// Gate on the transformed speed relations.
        #[arg(long, default_value_t = 1e-6)]
        gate: f64,
    },
    /// Residual of a solution CSV written by `solve`.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solution: PathBuf,
        /// Residual gate.
        #[arg(long, default_value_t = 1e-5)]
        gate: f64,
    },
}

/// Input or usage problem: exit code 1.
#[derive(Debug)]
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type Outcome = Result<Report, InputError>;

struct Report {
    name: &'static str,
    options: Value,
    body: Value,
    failures: Vec<String>,
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                1
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    let common = match &cli.command {
        Command::Diagnose { common }
        | Command::Laplace { common, .. }
        | Command::Solve { common, .. }
        | Command::Congruence { common, .. }
        | Command::Verify { common, .. } => common.clone(),
    };
    let result = load(&common).and_then(|sys| {
        let report = match &cli.command {
            Command::Diagnose { .. } => diagnose(&sys),
            Command::Laplace { i, j, depth, .. } => laplace(&sys, *i, *j, *depth),
            Command::Solve {
                phi,
                grid,
                origin,
                u0,
                force,
                gate,
                ..
            } => solve(
                &sys,
                &common,
                phi,
                grid,
                origin,
                u0.as_deref(),
                *force,
                *gate,
            ),
            Command::Congruence {
                pair, points, gate, ..
            } => congruence(&sys, &common, pair.as_deref(), *points, *gate),
            Command::Verify { solution, gate, .. } => verify(&sys, solution, *gate),
        }?;
        Ok((sys, report))
    });
    let (sys, report) = match result {
        Ok(r) => r,
        Err(InputError(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 1;
        }
    };
    let config = json!({
        "subcommand": report.name,
        "system": common.system,
        "out": common.out,
        "tol": sys.tol,
        "eps_hyp": sys.eps_hyp,
        "samples": sys.samples,
        "seed": sys.seed,
        "lambdas": sys.printed_lambdas(),
        "domain": sys.domain,
        "options": report.options,
    });
    let passed = report.failures.is_empty();
    let doc = json!({
        "version": VERSION,
        "config": config,
        "report": report.body,
        "gates": { "passed": passed, "failures": report.failures },
    });
    let text = serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n";
    if let Some(dir) = &common.out {
        if let Err(e) = fs::create_dir_all(dir)
            .and_then(|_| fs::write(dir.join(format!("{}.json", report.name)), &text))
        {
            let _ = writeln!(stderr, "error: writing {}: {e}", dir.display());
            return 1;
        }
    }
    let _ = stdout.write_all(text.as_bytes());
    for f in &report.failures {
        let _ = writeln!(stderr, "gate failed: {f}");
    }
    if passed {
        0
    } else {
        2
    }
}

fn load(c: &Common) -> Result<DiagonalSystem, InputError> {
    let path = Path::new(&c.system);
    let mut sys = if path.exists() {
        DiagonalSystem::load(path)?
    } else if builtin_names().any(|n| n == c.system) {
        builtin(&c.system)?
    } else {
        let names: Vec<&str> = builtin_names().collect();
        return Err(InputError(format!(
            "`{}` is neither a file nor a built-in system ({})",
            c.system,
            names.join(", ")
        )));
    };
    if let Some(t) = c.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(InputError(format!("--tol must be positive, got {t}")));
        }
        sys.tol = t;
    }
    if let Some(e) = c.eps_hyp {
        if !(e >= 0.0 && e.is_finite()) {
            return Err(InputError(format!(
                "--eps-hyp must be non-negative, got {e}"
            )));
        }
        sys.eps_hyp = e;
    }
    if let Some(s) = c.samples {
        if s == 0 {
            return Err(InputError("--samples must be positive".into()));
        }
        sys.samples = s;
    }
    if let Some(s) = c.seed {
        sys.seed = s;
    }
    Ok(sys)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn diagnose(sys: &DiagonalSystem) -> Outcome {
    let report = full_report(sys)?;
    let mut failures = Vec::new();
    if !report.coefficient_identity.within(sys.tol) {
        failures.push(format!(
            "coefficient identity residual {:e}",
            report.coefficient_identity.max
        ));
    }
    Ok(Report {
        name: "diagnose",
        options: json!({}),
        body: to_value(&report),
        failures,
    })
}

fn laplace(sys: &DiagonalSystem, i: usize, j: Option<usize>, depth: usize) -> Outcome {
    let n = sys.n;
    if !(1..=n).contains(&i) || j.is_some_and(|j| !(1..=n).contains(&j) || j == i) {
        return Err(InputError(format!("need distinct indices in 1..={n}")));
    }
    let seq = sequence_terminates(sys, i, depth)?;
    let mut failures = Vec::new();
    for node in &seq.nodes {
        for (what, r) in [
            ("cross-form", node.cross_form_residual),
            ("table", node.table_residual),
        ] {
            if let Some(r) = r.filter(|r| !(*r <= sys.tol)) {
                failures.push(format!("path {:?}: {what} residual {r:e}", node.path));
            }
        }
    }
    let mut body = json!({ "sequence": to_value(&seq) });
    if let Some(j) = j {
        let samples = sys.sample()?;
        let table = CoeffTable::build(sys, &samples);
        body["step"] = match laplace_transform(sys, &table, &samples, i, j) {
            Ok(step) => json!({
                "denominator": step.denominator.to_string(),
                "lambdas": step.lambdas.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                "hyperbolicity": step.hyperbolicity,
                "semihamiltonian": step.semihamiltonian.map(|c| to_value(&c)),
            }),
            Err(e) => json!({ "error": e.to_string() }),
        };
    }
    Ok(Report {
        name: "laplace",
        options: json!({ "i": i, "j": j, "depth": depth }),
        body,
        failures,
    })
}

fn numbers(s: &str, what: &str, count: usize) -> Result<Vec<f64>, InputError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| InputError(format!("{what} `{s}`: {e}")))?;
    if v.len() != count || v.iter().any(|x| !x.is_finite()) {
        return Err(InputError(format!(
            "{what} needs {count} finite comma-separated numbers, got `{s}`"
        )));
    }
    Ok(v)
}

/// A one-variable function written in `v` becomes one written in `u1`.
fn parse_phi(text: &str) -> Result<Expr, InputError> {
    let mut out = String::with_capacity(text.len() + 4);
    let chars: Vec<char> = text.chars().collect();
    for (k, &c) in chars.iter().enumerate() {
        let word = |x: Option<&char>| x.is_some_and(|x| x.is_alphanumeric() || *x == '_');
        if c == 'v' && !word(k.checked_sub(1).and_then(|p| chars.get(p))) && !word(chars.get(k + 1))
        {
            out.push_str("u1");
        } else {
            out.push(c);
        }
    }
    parse(&out, 1).map_err(|e| InputError(format!("φ `{text}`: {e}")))
}

#[allow(clippy::too_many_arguments)]
fn solve(
    sys: &DiagonalSystem,
    common: &Common,
    phi: &[String],
    grid: &str,
    origin: &str,
    u0: Option<&str>,
    force: bool,
    gate: f64,
) -> Outcome {
    if phi.len() != sys.n {
        return Err(InputError(format!(
            "need {} --phi values, got {}",
            sys.n,
            phi.len()
        )));
    }
    let phis = phi
        .iter()
        .map(|p| parse_phi(p))
        .collect::<Result<Vec<_>, _>>()?;
    let g = numbers(grid, "--grid", 4)?;
    let (nx, nt) = (g[2], g[3]);
    if nx < 3.0 || nt < 3.0 || nx.fract() != 0.0 || nt.fract() != 0.0 || g[0] == 0.0 || g[1] == 0.0
    {
        return Err(InputError(format!(
            "--grid needs non-zero extents and at least 3 points per axis, got `{grid}`"
        )));
    }
    let (nx, nt) = (nx as usize, nt as usize);
    let o = numbers(origin, "--origin", 2)?;
    let u0 = match u0 {
        Some(s) => numbers(s, "--u0", sys.n)?,
        None => sys.centre(),
    };
    let lattice = Lattice::new(
        o.clone(),
        vec![g[0] / (nx - 1) as f64, g[1] / (nt - 1) as f64],
        vec![nx, nt],
    );
    let opts = PipelineOptions {
        force,
        ..PipelineOptions::default()
    };
    let res = pipeline_solve(sys, &phis, &u0, &lattice, &opts)?;
    let mut grid = res.grid.clone();
    grid.attach(&res.verification);
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;
    let mut csv = Vec::new();
    grid.write_csv(&mut csv)?;
    fs::write(out.join("solution.csv"), csv)?;
    fs::write(out.join("solution.gp"), plot_script(&grid, "solution.csv"))?;
    let mut failures = Vec::new();
    if !res.verification.passes(gate) {
        failures.push(format!(
            "solution residual {:e} over {} points exceeds {gate:e}",
            res.verification.max, res.verification.checked
        ));
    }
    let options = json!({
        "phi": phi, "grid": [g[0], g[1], nx, nt], "origin": o, "u0": u0, "force": force, "gate": gate,
    });
    let body = json!({
        "route": to_value(&res.route),
        "residual": to_value(&res.verification),
        "path_defect": res.path_defect,
        "converged": res.converged,
        "flagged": res.flagged,
        "max_iterations": res.max_iterations,
        "warning": res.warning,
        "artifacts": ["solution.csv", "solution.gp"],
    });
    Ok(Report {
        name: "solve",
        options,
        body,
        failures,
    })
}

/// `N^k` equal to `u^k` along axis `k` and constant along the others.
fn coordinate_pairs(
    sys: &DiagonalSystem,
    table: &CoeffTable,
    samples: &crate::system::SampleSet,
    lattice: &Lattice,
) -> Result<Vec<ConservationPair>, InputError> {
    (0..sys.n)
        .map(|k| {
            let axis: Vec<Expr> = (0..sys.n)
                .map(|m| {
                    if m == k {
                        Expr::var(1)
                    } else {
                        Expr::constant(lattice.base[k])
                    }
                })
                .collect();
            solve_density(
                sys,
                table,
                samples,
                &axis,
                lattice,
                &DensityOptions::default(),
            )
            .map_err(InputError::from)
        })
        .collect()
}

fn congruence(
    sys: &DiagonalSystem,
    common: &Common,
    pair: Option<&str>,
    points: Option<usize>,
    gate: f64,
) -> Outcome {
    let points = points.unwrap_or(if sys.n == 2 { 21 } else { 11 });
    if points < 5 {
        return Err(InputError("--points must be at least 5".into()));
    }
    let ij = match pair {
        Some(p) => {
            let v = numbers(p, "--pair", 2)?;
            let (i, j) = (v[0] as usize, v[1] as usize);
            if v.iter().any(|x| x.fract() != 0.0)
                || i == j
                || !(1..=sys.n).contains(&i)
                || !(1..=sys.n).contains(&j)
            {
                return Err(InputError(format!(
                    "--pair needs distinct indices in 1..={}",
                    sys.n
                )));
            }
            Some((i, j))
        }
        None => None,
    };
    let samples = sys.sample()?;
    let table = CoeffTable::build(sys, &samples);
    let lattice = Lattice::spanning(&sys.domain, points);
    let pairs = coordinate_pairs(sys, &table, &samples, &lattice)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;
    let coords: Vec<String> = (1..=sys.n).map(|k| format!("u{k}")).collect();
    let mut failures = Vec::new();
    let mut artifacts = vec!["pairs.csv".to_string()];

    let mut pair_reports = Vec::new();
    let mut columns: Vec<(String, &ScalarFieldGrid)> = Vec::new();
    for (k, p) in pairs.iter().enumerate() {
        let PairField::Grid { n, m, .. } = &p.field else {
            unreachable!("density solutions are grids")
        };
        columns.push((format!("N{}", k + 1), n));
        columns.push((format!("M{}", k + 1), m));
        let r = p.fd_residuals(sys, &table).expect("grid pair");
        pair_reports.push(json!({ "k": k + 1, "defect": p.defect, "residuals": to_value(&r), "warning": p.warning }));
    }
    let named: Vec<(&str, &ScalarFieldGrid)> =
        columns.iter().map(|(s, g)| (s.as_str(), *g)).collect();
    let mut buf = Vec::new();
    write_grids_csv(&mut buf, &coords, &named)?;
    fs::write(out.join("pairs.csv"), buf)?;

    let mut charts = Vec::new();
    for i in 1..=sys.n {
        let chart = focal_chart(sys, &pairs, i, &lattice)?;
        let scale = 1.0 + chart.y.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(chart.incidence <= 1e-10 * scale) {
            failures.push(format!("chart {i}: incidence {:e}", chart.incidence));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = coords.clone();
        header.extend((0..=sys.n).map(|k| format!("y{k}")));
        w.write_record(&header)?;
        for f in 0..lattice.len() {
            let mut row: Vec<String> = lattice
                .point(&lattice.multi(f))
                .iter()
                .map(|v| format!("{v:.17e}"))
                .collect();
            row.extend(chart.y[f].iter().map(|v| format!("{v:.17e}")));
            w.write_record(&row)?;
        }
        fs::write(
            out.join(format!("chart{i}.csv")),
            w.into_inner().map_err(|e| InputError(e.to_string()))?,
        )?;
        artifacts.push(format!("chart{i}.csv"));
        if sys.n == 2 {
            let mut obj = Vec::new();
            write_obj(&chart, &mut obj)?;
            fs::write(out.join(format!("chart{i}.obj")), obj)?;
            artifacts.push(format!("chart{i}.obj"));
        }
        charts.push(json!({ "i": i, "incidence": chart.incidence, "pencil_variance": chart.pencil_variance() }));
    }

    let invariance = match ij {
        Some((i, j)) => {
            let r = verify_speed_invariance(sys, &table, &samples, &pairs, i, j)?;
            for rel in &r.relations {
                if let Some(x) = rel.residual.filter(|x| !(*x <= gate)) {
                    failures.push(format!(
                        "transformed relation k = {}: residual {x:e}",
                        rel.k
                    ));
                }
            }
            to_value(&r)
        }
        None => Value::Null,
    };
    let options = json!({ "pair": ij, "points": points, "gate": gate });
    let body = json!({ "pairs": pair_reports, "charts": charts, "invariance": invariance, "artifacts": artifacts });
    Ok(Report {
        name: "congruence",
        options,
        body,
        failures,
    })
}

/// Rebuild a solution grid from the CSV written by `solve`.
fn read_solution(path: &Path, n: usize) -> Result<SolutionGrid, InputError> {
    let mut rdr =
        csv::Reader::from_path(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    let header = rdr.headers()?.clone();
    if header.len() != n + 4 || &header[0] != "x" || &header[1] != "t" {
        return Err(InputError(format!(
            "{}: expected columns x, t, u1..u{n}, converged, residual",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |k: usize| {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| InputError(format!("column {k}: {e}")))
        };
        let x = num(0)?;
        let t = num(1)?;
        let u = (0..n).map(|k| num(2 + k)).collect::<Result<Vec<_>, _>>()?;
        let ok = rec[n + 2].trim() == "true";
        rows.push((x, t, u, ok));
    }
    let nt = rows.iter().take_while(|r| r.0 == rows[0].0).count();
    if nt < 3 || rows.len() % nt != 0 || rows.len() / nt < 3 {
        return Err(InputError(
            "solution CSV is not a lattice of at least 3×3 points".into(),
        ));
    }
    let nx = rows.len() / nt;
    let (x0, t0) = (rows[0].0, rows[0].1);
    let hx = (rows[(nx - 1) * nt].0 - x0) / (nx - 1) as f64;
    let ht = (rows[nt - 1].1 - t0) / (nt - 1) as f64;
    let lattice = Lattice::new(vec![x0, t0], vec![hx, ht], vec![nx, nt]);
    let mut grid = SolutionGrid::empty(lattice, n);
    for (f, (x, t, u, ok)) in rows.into_iter().enumerate() {
        let (ix, it) = (f / nt, f % nt);
        let tol = 1e-9 * (1.0 + hx.abs().max(ht.abs()));
        if (x - grid.x(ix)).abs() > tol * (1.0 + x.abs())
            || (t - grid.t(it)).abs() > tol * (1.0 + t.abs())
        {
            return Err(InputError(format!(
                "solution CSV row {} is off the lattice",
                f + 2
            )));
        }
        grid.u[f] = u;
        grid.status[f] = if ok {
            PointStatus::Converged
        } else {
            PointStatus::Masked
        };
    }
    Ok(grid)
}

fn verify(sys: &DiagonalSystem, solution: &Path, gate: f64) -> Outcome {
    let grid = read_solution(solution, sys.n)?;
    let v = verify_solution(sys, &grid);
    let mut failures = Vec::new();
    if !v.passes(gate) {
        failures.push(format!(
            "solution residual {:e} over {} points exceeds {gate:e}",
            v.max, v.checked
        ));
    }
    let options = json!({ "solution": solution, "gate": gate });
    let body = json!({ "residual": to_value(&v), "lattice": to_value(&grid.lattice) });
    Ok(Report {
        name: "verify",
        options,
        body,
        failures,
    })
}
