//! Conservation laws as line congruences: densities by Goursat marching,
//! focal charts, and the speeds recovered from the transformed congruence.

use darboux::congruence::{focal_chart, solve_density, verify_speed_invariance, DensityOptions};
use darboux::expr::Expr;
use darboux::integrate::Lattice;
use darboux::system::{builtin, CoeffTable};

fn main() {
    let sys = builtin("lindeg2").unwrap();
    let s = sys.sample().unwrap();
    let t = CoeffTable::build(&sys, &s);
    let l = Lattice::spanning(&sys.domain, 21);
    // axis data: u1 along axis k, constant elsewhere
    let pairs: Vec<_> = (0..2)
        .map(|k| {
            let axis: Vec<Expr> = (0..2)
                .map(|m| {
                    if m == k {
                        Expr::var(1)
                    } else {
                        Expr::constant(l.base[k])
                    }
                })
                .collect();
            solve_density(&sys, &t, &s, &axis, &l, &DensityOptions::default()).unwrap()
        })
        .collect();
    for (k, p) in pairs.iter().enumerate() {
        println!("pair {}: marching defect {:.2e}", k + 1, p.defect);
    }
    for i in 1..=2 {
        let chart = focal_chart(&sys, &pairs, i, &l).unwrap();
        println!("focal chart {i}: incidence {:.1e}", chart.incidence);
    }
    let inv = verify_speed_invariance(&sys, &t, &s, &pairs, 2, 1).unwrap();
    for r in &inv.relations {
        match (&r.residual, &r.degenerate) {
            (Some(res), _) => println!("k = {}: speed relation residual {res:.2e}", r.k),
            (_, Some(why)) => println!("k = {}: {why}", r.k),
            _ => println!("k = {}: not checked", r.k),
        }
    }
}
