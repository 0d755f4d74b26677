//! Reciprocal transformations built from two conservation laws.

use darboux::congruence::reciprocal_speeds;
use darboux::expr::{parse, Expr};
use darboux::system::{builtin, check_semihamiltonian, CoeffTable};

fn main() {
    let sys = builtin("lindeg2").unwrap();
    let s = sys.sample().unwrap();
    let (one, zero) = (Expr::one(), Expr::zero());
    println!("λ               = {:?}", sys.printed_lambdas());

    // x and t swap roles
    let swap = reciprocal_speeds(&sys, &s, &zero, &one, &one, &zero).unwrap();
    println!("x ↔ t           = {:?}", swap.system.printed_lambdas());

    let n = parse("u1 + u2", 2).unwrap();
    let m = parse("u1*u2", 2).unwrap();
    let r = reciprocal_speeds(&sys, &s, &one, &zero, &n, &m).unwrap();
    let rs = r.system.sample_unchecked();
    let rt = CoeffTable::build(&r.system, &rs);
    let sh = check_semihamiltonian(&r.system, &rt, &rs);
    println!("dT = N dx + M dt: {:?}", r.system.printed_lambdas());
    println!(
        "semihamiltonian {} (residual {:.1e})",
        sh.holds, sh.residual.max
    );
}
