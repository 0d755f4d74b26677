//! Parse, differentiate, simplify and evaluate an expression.

use darboux::expr::parse;

fn main() {
    let e = parse("u1*exp(u2) + sin(u1*u3)/(2 + u2^2)", 3).unwrap();
    let p = [0.7, 1.1, -0.4];
    println!("f        = {e}");
    for k in 1..=3 {
        let d = e.derivative(k).simplify();
        println!("d/du{k} f  = {d}");
        println!("           = {:.12} at {p:?}", d.eval(&p).unwrap());
    }
    let again = parse(&e.to_string(), 3).unwrap();
    assert_eq!(again.to_string(), e.to_string());
}
