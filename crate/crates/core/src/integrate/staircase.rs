//! RK4 integration of a Pfaffian system `dy = Σ_m F_m(u, y) du^m` over a
//! lattice along staircase paths.
//!
//! A path order lists the axes in the order a path from the base walks
//! them. Each lattice point is reached from its neighbour one step back
//! along the last axis of that order on which the point is off the base,
//! so a single sweep in flat-index order fills the lattice.

use super::grid::Lattice;

/// Values above this magnitude count as blow-up.
pub const BLOW_UP: f64 = 1e12;

/// Right-hand sides of a Pfaffian system.
pub trait Pfaffian: Sync {
    fn dim(&self) -> usize;
    /// `∂y/∂u^axis` at `(u, y)`, `axis` 0-based. `Err` marks a breakdown.
    fn rhs(&self, axis: usize, u: &[f64], y: &[f64], out: &mut [f64]) -> Result<(), String>;
}

/// Which axes a staircase walks first.
#[derive(Clone, Debug, PartialEq)]
pub enum PathOrder {
    /// Axis 1 first, then axis 2, and so on.
    Canonical,
    /// The canonical order reversed.
    Reversed,
    /// An explicit permutation of the axes, 0-based.
    Custom(Vec<usize>),
}

impl PathOrder {
    pub fn axes(&self, dim: usize) -> Vec<usize> {
        match self {
            PathOrder::Canonical => (0..dim).collect(),
            PathOrder::Reversed => (0..dim).rev().collect(),
            PathOrder::Custom(v) => {
                let mut s = v.clone();
                s.sort_unstable();
                assert!(
                    s == (0..dim).collect::<Vec<_>>(),
                    "path order must permute the axes"
                );
                v.clone()
            }
        }
    }
}

/// Result of a lattice sweep. `None` marks masked points.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub lattice: Lattice,
    pub values: Vec<Option<Vec<f64>>>,
    pub blowups: usize,
    pub breakdowns: usize,
}

impl Sweep {
    /// Component `c` as a flat vector with `NaN` at masked points.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| v.as_ref().map_or(f64::NAN, |y| y[c]))
            .collect()
    }

    pub fn masked(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// One RK4 leg along `axis` from `u` (modified in place) to coordinate `end`.
pub fn rk4_leg(
    p: &dyn Pfaffian,
    axis: usize,
    u: &mut [f64],
    y: &mut [f64],
    end: f64,
    substeps: usize,
) -> Result<(), String> {
    let d = y.len();
    let start = u[axis];
    let h = (end - start) / substeps as f64;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tmp = vec![0.0; d];
    for s in 0..substeps {
        let s0 = start + s as f64 * h;
        u[axis] = s0;
        p.rhs(axis, u, y, &mut k1)?;
        u[axis] = s0 + 0.5 * h;
        for c in 0..d {
            tmp[c] = y[c] + 0.5 * h * k1[c];
        }
        p.rhs(axis, u, &tmp, &mut k2)?;
        for c in 0..d {
            tmp[c] = y[c] + 0.5 * h * k2[c];
        }
        p.rhs(axis, u, &tmp, &mut k3)?;
        u[axis] = s0 + h;
        for c in 0..d {
            tmp[c] = y[c] + h * k3[c];
        }
        p.rhs(axis, u, &tmp, &mut k4)?;
        for c in 0..d {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if y.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
            return Err(format!("blow-up at {u:?}"));
        }
    }
    u[axis] = end;
    Ok(())
}

/// Fill the lattice starting from `y0` at the base.
pub fn sweep(
    p: &dyn Pfaffian,
    lattice: &Lattice,
    y0: &[f64],
    substeps: usize,
    order: &PathOrder,
) -> Sweep {
    assert_eq!(y0.len(), p.dim());
    let axes = order.axes(lattice.dim());
    let mut values: Vec<Option<Vec<f64>>> = vec![None; lattice.len()];
    let (mut blowups, mut breakdowns) = (0, 0);
    for f in 0..lattice.len() {
        let idx = lattice.multi(f);
        let Some(&m) = axes.iter().rev().find(|&&a| idx[a] > 0) else {
            values[f] = Some(y0.to_vec());
            continue;
        };
        let mut prev = idx.clone();
        prev[m] -= 1;
        let Some(start) = values[lattice.flat(&prev)].clone() else {
            continue;
        };
        let mut u = lattice.point(&prev);
        let mut y = start;
        match rk4_leg(p, m, &mut u, &mut y, lattice.coord(m, idx[m]), substeps) {
            Ok(()) => values[f] = Some(y),
            Err(e) if e.starts_with("blow-up") => blowups += 1,
            Err(_) => breakdowns += 1,
        }
    }
    Sweep {
        lattice: lattice.clone(),
        values,
        blowups,
        breakdowns,
    }
}

/// Integrate from `base` to `target` along full legs in path order, with a
/// fixed number of substeps per leg so the result is smooth in `target`.
pub fn integrate_to(
    p: &dyn Pfaffian,
    base: &[f64],
    y0: &[f64],
    target: &[f64],
    order: &PathOrder,
    substeps_per_leg: usize,
) -> Result<Vec<f64>, String> {
    let mut u = base.to_vec();
    let mut y = y0.to_vec();
    for a in order.axes(base.len()) {
        if target[a] != base[a] {
            rk4_leg(p, a, &mut u, &mut y, target[a], substeps_per_leg)?;
        }
    }
    Ok(y)
}

/// Worst `max_c |a − b| / (1 + |a|)` over points valid in both sweeps.
pub fn path_defect(a: &Sweep, b: &Sweep) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .filter_map(|(x, y)| Some((x.as_ref()?, y.as_ref()?)))
        .flat_map(|(x, y)| {
            x.iter()
                .zip(y)
                .map(|(p, q)| (p - q).abs() / (1.0 + p.abs()))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `dy = y (du^1 + 2 u^2 du^2)`, closed, solution `y0 exp(u1 + u2²)`.
    struct Exp;
    impl Pfaffian for Exp {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, axis: usize, u: &[f64], y: &[f64], out: &mut [f64]) -> Result<(), String> {
            out[0] = if axis == 0 { y[0] } else { 2.0 * u[1] * y[0] };
            Ok(())
        }
    }

    /// `dy = u^2 du^1`, not closed.
    struct Twist;
    impl Pfaffian for Twist {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, axis: usize, u: &[f64], _y: &[f64], out: &mut [f64]) -> Result<(), String> {
            out[0] = if axis == 0 { u[1] } else { 0.0 };
            Ok(())
        }
    }

    #[test]
    fn closed_form_is_path_independent() {
        let l = Lattice::new(vec![0.0, 0.0], vec![0.1, 0.1], vec![6, 6]);
        let a = sweep(&Exp, &l, &[1.0], 16, &PathOrder::Canonical);
        let b = sweep(&Exp, &l, &[1.0], 16, &PathOrder::Reversed);
        assert!(path_defect(&a, &b) < 1e-12);
        let v = a.values[l.flat(&[5, 5])].as_ref().unwrap()[0];
        assert!((v - (0.5f64 + 0.25).exp()).abs() < 1e-10);
        let direct = integrate_to(
            &Exp,
            &[0.0, 0.0],
            &[1.0],
            &[0.5, 0.5],
            &PathOrder::Canonical,
            64,
        )
        .unwrap();
        assert!((direct[0] - v).abs() < 1e-9);
    }

    #[test]
    fn non_closed_form_shows_a_defect() {
        let l = Lattice::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![2, 2]);
        let a = sweep(&Twist, &l, &[0.0], 4, &PathOrder::Canonical);
        let b = sweep(&Twist, &l, &[0.0], 4, &PathOrder::Reversed);
        // canonical walks u1 at u2 = 0, reversed walks it at u2 = 1
        assert!((path_defect(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rk4_has_fourth_order_defect() {
        // one leg of dy = y du^1 at coarse steps: halving the substep cuts the error ≈ 16×
        let l = Lattice::new(vec![0.0, 0.0], vec![0.5, 0.5], vec![3, 3]);
        let e1 = (sweep(&Exp, &l, &[1.0], 1, &PathOrder::Canonical).values[l.flat(&[2, 0])]
            .as_ref()
            .unwrap()[0]
            - (1.0f64).exp())
        .abs();
        let e2 = (sweep(&Exp, &l, &[1.0], 2, &PathOrder::Canonical).values[l.flat(&[2, 0])]
            .as_ref()
            .unwrap()[0]
            - (1.0f64).exp())
        .abs();
        assert!(e1 / e2 > 12.0, "{e1} {e2}");
    }
}
