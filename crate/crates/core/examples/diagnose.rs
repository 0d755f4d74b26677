//! Full diagnostics for every built-in system.

use darboux::system::{builtin, builtin_names, full_report};

fn main() {
    for name in builtin_names() {
        let sys = builtin(name).unwrap();
        let r = full_report(&sys).unwrap();
        let order0: Vec<bool> = r.darboux_order0.iter().map(|o| o.holds).collect();
        println!(
            "{name:>18}: λ = {:?}\n{:>20}semihamiltonian {} (residual {:.1e}), order 0 per index {order0:?}, order ≤ 1 overall {}",
            r.lambdas,
            "",
            r.semihamiltonian.holds,
            r.semihamiltonian.residual.max,
            r.overall_darboux_order_le1,
        );
    }
    // the JSON form, as the CLI writes it
    let r = full_report(&builtin("lindeg2").unwrap()).unwrap();
    println!("{}", serde_json::to_string_pretty(&r).unwrap());
}
