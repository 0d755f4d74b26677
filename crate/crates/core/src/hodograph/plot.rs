//! Gnuplot script for `u^i(x, t)` profiles at a few fixed times.

use std::fmt::Write;

use super::grid::SolutionGrid;

/// Script reading `csv_name` (as written by [`SolutionGrid::write_csv`])
/// and plotting every component against `x` at up to five times.
pub fn plot_script(grid: &SolutionGrid, csv_name: &str) -> String {
    let nt = grid.nt();
    let mut picks: Vec<usize> = (0..5.min(nt))
        .map(|k| {
            if nt == 1 {
                0
            } else {
                k * (nt - 1) / 4.min(nt - 1)
            }
        })
        .collect();
    picks.dedup();
    let tol = grid.lattice.steps[1].abs() / 4.0;
    let mut s = String::new();
    let _ = writeln!(s, "# u^i(x, t) profiles at fixed t");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key outside right");
    let _ = writeln!(s, "set xlabel 'x'");
    let _ = writeln!(s, "set terminal pngcairo size 900,{}", 300 * grid.n);
    let _ = writeln!(s, "set output '{}.png'", csv_name.trim_end_matches(".csv"));
    let _ = writeln!(s, "set multiplot layout {},1", grid.n);
    for i in 1..=grid.n {
        let _ = writeln!(s, "set ylabel 'u{i}'");
        let curves: Vec<String> = picks
            .iter()
            .map(|&it| {
                let t = grid.t(it);
                format!(
                    "'{csv_name}' skip 1 using 1:(abs($2 - ({t:e})) < {tol:e} && strcol({c}) eq 'true' ? ${col} : 1/0) with lines title 't = {t:.4}'",
                    c = grid.n + 3,
                    col = i + 2,
                )
            })
            .collect();
        let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    }
    let _ = writeln!(s, "unset multiplot");
    s
}
