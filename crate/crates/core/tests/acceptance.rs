//! The acceptance suite: one PASS/FAIL line per criterion, each at its
//! stated tolerance. Every criterion runs even when an earlier one fails.

use std::fs;
use std::path::Path;

use darboux::cli;
use darboux::congruence::{
    reciprocal_speeds, speed_spread, verify_speed_invariance, ConservationPair,
};
use darboux::expr::{parse, BinaryOp, Expr, UnaryOp};
use darboux::hodograph::{pipeline_solve, PipelineOptions, Route};
use darboux::integrate::{
    integrate_orbit_solution, lame_coefficients, BZeroSlope, IntegrateOptions, Lattice,
};
use darboux::laplace::{battery, laplace_transform};
use darboux::system::{
    builtin, builtin_names, check_semihamiltonian, CoeffTable, DiagonalSystem, SampleSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn gate(ok: bool, msg: String) -> Verdict {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn setup(sys: &DiagonalSystem) -> (SampleSet, CoeffTable) {
    let s = sys.sample().expect("strictly hyperbolic");
    let t = CoeffTable::build(sys, &s);
    (s, t)
}

/// Random expression in `u1..u3` that stays finite on `[0.5, 1.5]³`.
fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.7) {
            Expr::var(rng.gen_range(1..=3))
        } else {
            Expr::constant((rng.gen_range(-30..=30) as f64) / 10.0)
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.gen_range(0..10) {
        0 => a + random_expr(rng, depth - 1),
        1 => a - random_expr(rng, depth - 1),
        2 | 3 => a * random_expr(rng, depth - 1),
        // denominators kept away from zero
        4 => a / (Expr::constant(1.5) + random_expr(rng, depth - 1).powi(2)),
        5 => Expr::unary(UnaryOp::Sin, a),
        6 => Expr::unary(UnaryOp::Cos, a),
        7 => Expr::unary(UnaryOp::Tanh, a).exp(),
        8 => (Expr::one() + a.powi(2)).sqrt(),
        _ => Expr::binary(
            BinaryOp::Pow,
            Expr::constant(1.0) + a.powi(2),
            Expr::constant(0.5 * rng.gen_range(1..=5) as f64),
        )
        .log(),
    }
}

fn derivative_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    while cases < 1000 {
        let e = random_expr(&mut rng, 4);
        let p: Vec<f64> = (0..3).map(|_| rng.gen_range(0.5..1.5)).collect();
        let k = rng.gen_range(1..=3);
        let d = e.derivative(k);
        let (Ok(f0), Ok(sym)) = (e.eval(&p), d.eval(&p)) else {
            continue;
        };
        if !f0.is_finite() || !sym.is_finite() || f0.abs() > 1e6 {
            continue;
        }
        // centred difference with step 1e-5 scaled by the coordinate
        let h = 1e-5 * p[k - 1].abs().max(1.0);
        let at = |o: f64| {
            let mut q = p.clone();
            q[k - 1] += o * h;
            e.eval(&q).unwrap()
        };
        let fd = (at(1.0) - at(-1.0)) / (2.0 * h);
        worst = worst.max((sym - fd).abs() / sym.abs().max(1.0));
        cases += 1;
    }
    gate(
        worst <= 1e-6,
        format!("{cases} cases, worst relative error {worst:.2e} (gate 1e-6)"),
    )
}

fn coefficient_identity() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();
    for name in builtin_names() {
        let sys = builtin(name).unwrap();
        let s = sys.sample_unchecked();
        let t = CoeffTable::build(&sys, &s);
        let r = t.defining_identity(&sys, &s);
        worst = worst.max(r.max);
        names.push(format!("{name}:{}", s.points.len()));
    }
    gate(
        worst <= 1e-9,
        format!(
            "worst scaled residual {worst:.2e} over [{}] (gate 1e-9)",
            names.join(", ")
        ),
    )
}

fn semihamiltonian_gate() -> Verdict {
    let sys = builtin("shifted3").unwrap();
    let (s, t) = setup(&sys);
    let good = check_semihamiltonian(&sys, &t, &s);
    let sys = builtin("nonsemiham3").unwrap();
    let (s, t) = setup(&sys);
    let bad = check_semihamiltonian(&sys, &t, &s);
    gate(
        good.holds && good.residual.max <= 1e-10 && !bad.holds && bad.residual.witness.is_some(),
        format!(
            "shifted3 residual {:.2e} (gate 1e-10); nonsemiham3 fails with residual {:.2e} at {:?}",
            good.residual.max, bad.residual.max, bad.residual.witness
        ),
    )
}

fn termination_battery() -> Verdict {
    let mut compared = 0;
    let mut disagree = Vec::new();
    let mut notes = Vec::new();
    let mut shifted_all_false = false;
    let mut degenerate_handled = true;
    for inst in battery() {
        let (verdicts, excluded) = inst.evaluate();
        for v in &verdicts {
            compared += 1;
            if !v.agree() {
                disagree.push(format!("{} ({}, {})", v.name, v.i, v.j));
            }
        }
        match inst.name {
            "shifted3" => {
                shifted_all_false = !verdicts.is_empty()
                    && verdicts
                        .iter()
                        .all(|v| !v.transformed_row_vanishes && !v.order1_criterion && !v.oracle);
            }
            "lindeg2" | "ratio2" => {
                // outside the hypotheses: every pair must be excluded with a reason
                degenerate_handled &= verdicts.is_empty() && !excluded.is_empty();
                notes.push(format!(
                    "{} excluded: {}",
                    inst.name,
                    excluded
                        .iter()
                        .map(|e| e.2.clone())
                        .collect::<Vec<_>>()
                        .join("; ")
                ));
            }
            _ => {}
        }
    }
    gate(
        disagree.is_empty() && shifted_all_false && degenerate_handled && compared > 0,
        format!(
            "{compared} pairs compared, disagreements {disagree:?}; shifted3 all false: {shifted_all_false}; {}",
            notes.join("; ")
        ),
    )
}

fn laplace_orbit() -> Verdict {
    let sys = builtin("shifted3").unwrap();
    let (s, t) = setup(&sys);
    let step = laplace_transform(&sys, &t, &s, 1, 2).map_err(|e| e.to_string())?;
    let at0: Vec<f64> = step
        .lambdas
        .iter()
        .map(|l| l.eval(&[0.0; 3]).unwrap())
        .collect();
    let err = at0
        .iter()
        .zip([-1.0, 0.0, 1.0])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    // the family itself: barλ^k − (s + c̄_k) at every sample
    let mut family: f64 = 0.0;
    for p in &s.points {
        let sum: f64 = p.iter().sum();
        for (l, c) in step.lambdas.iter().zip([-1.0, 0.0, 1.0]) {
            family = family.max((l.eval(p).unwrap() - sum - c).abs());
        }
    }
    let cross = step.row.cross_form.max;
    let table = step.table_residual.as_ref().map_or(0.0, |r| r.max);
    gate(
        err <= 1e-12 && family <= 1e-12 && cross <= 1e-7 && table <= 1e-7,
        format!(
            "barλ(0) = {at0:?} (error {err:.1e}, gate 1e-12), family error {family:.1e}; cross-form {cross:.1e}, table {table:.1e} (gate 1e-7)"
        ),
    )
}

fn lame_closed_form() -> Verdict {
    let sys = builtin("lindeg2").unwrap();
    let (s, t) = setup(&sys);
    let l = Lattice::new(vec![2.0, 1.0], vec![1.0 / 19.0, -0.5 / 19.0], vec![20, 20]);
    let g = lame_coefficients(&sys, &t, &s, 1, &[2.0, 1.0], &l).map_err(|e| e.to_string())?;
    let h = g.h.get(&[0, 19]);
    // H_1 = (u1 − 1)/(u1 − u2) solves ∂_2 ln H_1 = a_12
    let mut field: f64 = 0.0;
    for f in 0..l.len() {
        let u = l.point(&l.multi(f));
        field = field.max((g.h.values[f] - (u[0] - 1.0) / (u[0] - u[1])).abs());
    }
    gate(
        (h - 2.0 / 3.0).abs() <= 1e-8 && g.loop_defect <= 1e-8 && field <= 1e-8,
        format!(
            "H_1(2, 0.5) = {h:.12} (error {:.1e}), field error {field:.1e}, loop defect {:.1e} on 20×20 (gate 1e-8)",
            (h - 2.0 / 3.0).abs(),
            g.loop_defect
        ),
    )
}

fn hopf_end_to_end() -> Verdict {
    let sys = builtin("order0_decoupled").unwrap();
    let (s, t) = setup(&sys);
    let u0 = [10.0, 30.0];
    let slope = BZeroSlope::new(&sys, &t, &s, 0.0, &u0, &[Expr::var(1), Expr::var(1)])
        .map_err(|e| e.to_string())?;
    let run = |h: f64, count: usize| {
        let l = Lattice::new(vec![0.0, 0.0], vec![h, h], vec![count, count]);
        integrate_orbit_solution(&sys, &slope, &u0, &l, &IntegrateOptions::default()).unwrap()
    };
    let coarse = run(0.01, 30);
    let fine = run(0.005, 59);
    let g = &coarse.grid;
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for ix in 0..g.nx() {
        for it in 0..g.nt() {
            let (x, tt) = (g.x(ix), g.t(it));
            let Some(u) = g.get(ix, it) else { continue };
            for c in 0..2 {
                let q = tt * tt + 2.0 * x + u0[c] * u0[c];
                if q > 0.0 {
                    worst = worst.max((u[c] - tt - q.sqrt()).abs());
                    compared += 1;
                }
            }
        }
    }
    let ratio = coarse.verification.max / fine.verification.max;
    gate(
        worst <= 1e-6 && compared == 2 * 900 && coarse.verification.passes(1e-6) && ratio >= 3.5,
        format!(
            "closed-form error {worst:.2e} over {compared} values (gate 1e-6); residual {:.2e} (gate 1e-6); halving ratio {ratio:.2} (gate 3.5)",
            coarse.verification.max
        ),
    )
}

fn pipeline_lindeg2() -> Verdict {
    let sys = builtin("lindeg2").unwrap();
    let phis = [Expr::one(), Expr::one()];
    let u0 = [2.0, 1.0];
    let opts = PipelineOptions::default();
    // the verification residual is O(h²); h = 0.0025 keeps it well under the gate
    let l = Lattice::new(vec![0.0, 0.0], vec![0.0025, 0.0025], vec![30, 30]);
    let res = pipeline_solve(&sys, &phis, &u0, &l, &opts).map_err(|e| e.to_string())?;
    // fourth order: error against a 64-substep reference shrinks ≥ 8× per halving
    let coarse_l = Lattice::new(vec![0.0, 0.0], vec![0.05, 0.05], vec![9, 9]);
    let with = |substeps: usize| {
        let o = PipelineOptions {
            integrate: IntegrateOptions {
                substeps,
                ..opts.integrate
            },
            ..opts
        };
        pipeline_solve(&sys, &phis, &u0, &coarse_l, &o)
            .unwrap()
            .grid
    };
    let reference = with(64);
    let err = |g: &darboux::hodograph::SolutionGrid| {
        let mut w: f64 = 0.0;
        for (a, b) in g.u.iter().zip(&reference.u) {
            for (x, y) in a.iter().zip(b) {
                w = w.max((x - y).abs());
            }
        }
        w
    };
    let (e1, e2) = (err(&with(1)), err(&with(2)));
    let order = e1 / e2;
    gate(
        res.route == Route::BZero
            && res.verification.passes(1e-5)
            && res.path_defect <= 1e-7
            && e2 > 0.0
            && order >= 8.0,
        format!(
            "route {:?}; residual {:.2e} (gate 1e-5); path defect {:.2e} (gate 1e-7); RK4 errors {e1:.2e} → {e2:.2e}, ratio {order:.1} (gate 8)",
            res.route, res.verification.max, res.path_defect
        ),
    )
}

/// `N_κ = exp(Σ u^i/(c_i − κ))`, `M_κ = (s + κ) N_κ` for `λ^i = s + c_i`.
fn shifted_pairs(
    sys: &DiagonalSystem,
    s: &SampleSet,
    t: &CoeffTable,
    kappas: &[f64],
) -> Vec<ConservationPair> {
    kappas
        .iter()
        .map(|k| {
            let e: Vec<String> = (0..3)
                .map(|i| format!("u{}/({})", i + 1, i as f64 - k))
                .collect();
            let n = format!("exp({})", e.join(" + "));
            let m = format!("(u1 + u2 + u3 + ({k})) * {n}");
            ConservationPair::closed(sys, t, s, parse(&n, 3).unwrap(), parse(&m, 3).unwrap())
                .unwrap()
        })
        .collect()
}

fn congruence_invariance() -> Verdict {
    let sys = builtin("shifted3").unwrap().with_samples(50);
    let (s, t) = setup(&sys);
    let a = verify_speed_invariance(
        &sys,
        &t,
        &s,
        &shifted_pairs(&sys, &s, &t, &[-1.0, -2.0, 3.0]),
        1,
        2,
    )
    .map_err(|e| e.to_string())?;
    let b = verify_speed_invariance(
        &sys,
        &t,
        &s,
        &shifted_pairs(&sys, &s, &t, &[-3.0, 4.0, 5.0]),
        1,
        2,
    )
    .map_err(|e| e.to_string())?;
    let laplace = a
        .laplace_match
        .unwrap_or(f64::INFINITY)
        .max(b.laplace_match.unwrap_or(f64::INFINITY));
    let spread = speed_spread(&a, &b).unwrap_or(f64::INFINITY);
    let extracted = a.extracted.iter().flatten().filter(|v| v.is_some()).count();
    gate(
        laplace <= 1e-6 && spread <= 1e-6 && a.points.len() >= 50 && extracted == 3 * a.points.len(),
        format!(
            "{} shared samples, {extracted} extracted speeds; match to barλ {laplace:.2e}, basis spread {spread:.2e} (gate 1e-6)",
            a.points.len()
        ),
    )
}

fn reciprocal_sanity() -> Verdict {
    let (one, zero) = (Expr::one(), Expr::zero());
    let mut identity = true;
    for name in builtin_names().filter(|n| *n != "nonsemiham3") {
        let sys = builtin(name).unwrap();
        let (s, _) = setup(&sys);
        let r = reciprocal_speeds(&sys, &s, &one, &zero, &zero, &one).map_err(|e| e.to_string())?;
        identity &= r.system.lambdas == sys.lambdas;
    }
    let sys = builtin("lindeg2").unwrap();
    let (s, _) = setup(&sys);
    let swap = reciprocal_speeds(&sys, &s, &zero, &one, &one, &zero).map_err(|e| e.to_string())?;
    let printed = swap.system.printed_lambdas();
    let inverted = printed == ["1/u2", "1/u1"];
    let n = parse("u1 + u2", 2).unwrap();
    let m = parse("u1*u2", 2).unwrap();
    let moved = reciprocal_speeds(&sys, &s, &one, &zero, &n, &m).map_err(|e| e.to_string())?;
    let ms = moved.system.sample_unchecked();
    let mt = CoeffTable::build(&moved.system, &ms);
    let sh = check_semihamiltonian(&moved.system, &mt, &ms);
    gate(
        identity && inverted && sh.residual.max <= 1e-8,
        format!(
            "identity pair keeps speeds: {identity}; swap gives {printed:?}; lindeg2 with N = u1 + u2 gives {:?}, semihamiltonian residual {:.1e} (gate 1e-8)",
            moved.system.printed_lambdas(),
            sh.residual.max
        ),
    )
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tmp.path().join("run");
    let out = out.to_str().unwrap();
    let commands: [&[&str]; 4] = [
        &["diagnose", "shifted3", "--seed", "7"],
        &[
            "laplace", "shifted3", "--i", "1", "--j", "2", "--depth", "2", "--seed", "7",
        ],
        &[
            "solve",
            "order0_decoupled",
            "--phi",
            "v",
            "--phi",
            "v",
            "--seed",
            "7",
        ],
        &["congruence", "lindeg2", "--pair", "2,1", "--seed", "7"],
    ];
    let mut compared = 0;
    for cmd in commands {
        let mut runs = Vec::new();
        for _ in 0..2 {
            let _ = fs::remove_dir_all(out);
            let mut argv = vec!["darboux"];
            argv.extend_from_slice(cmd);
            argv.extend_from_slice(&["--out", out]);
            let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
            let code = cli::run(&argv, &mut stdout, &mut stderr);
            if code == 1 {
                return Err(format!(
                    "{} failed: {}",
                    cmd[0],
                    String::from_utf8_lossy(&stderr)
                ));
            }
            runs.push((code, stdout, snapshot(Path::new(out))));
        }
        if runs[0] != runs[1] {
            return Err(format!("`{}` differs between runs", cmd.join(" ")));
        }
        compared += 1 + runs[0].2.len();
    }
    gate(
        true,
        format!("4 subcommands run twice, {compared} reports and artifacts byte-identical"),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("derivative oracle", derivative_oracle),
        ("coefficient identity", coefficient_identity),
        ("semihamiltonian gate", semihamiltonian_gate),
        ("termination battery", termination_battery),
        ("Laplace orbit", laplace_orbit),
        ("Lamé closed form", lame_closed_form),
        ("Hopf end to end", hopf_end_to_end),
        ("pipeline on lindeg2", pipeline_lindeg2),
        ("congruence invariance", congruence_invariance),
        ("reciprocal sanity", reciprocal_sanity),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match verdict {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", k + 1),
            Err(msg) => {
                println!("FAIL {:>2} {name}: {msg}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
