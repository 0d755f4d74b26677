//! Rectangular lattices and scalar fields sampled on them.

use std::io::Write;

use serde::Serialize;

/// A rectangular lattice: `base + idx ⊙ steps`, last axis varying fastest.
/// Steps may be negative, so the base can sit at any corner.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lattice {
    pub base: Vec<f64>,
    pub steps: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Lattice {
    pub fn new(base: Vec<f64>, steps: Vec<f64>, counts: Vec<usize>) -> Self {
        assert!(
            base.len() == steps.len() && steps.len() == counts.len(),
            "lattice shape mismatch"
        );
        assert!(counts.iter().all(|&c| c >= 1), "empty lattice axis");
        Lattice {
            base,
            steps,
            counts,
        }
    }

    /// `count` points per axis spanning `[lo, hi]` on every axis of `domain`.
    pub fn spanning(domain: &[(f64, f64)], count: usize) -> Self {
        assert!(count >= 2);
        let base = domain.iter().map(|d| d.0).collect();
        let steps = domain
            .iter()
            .map(|d| (d.1 - d.0) / (count - 1) as f64)
            .collect();
        Lattice::new(base, steps, vec![count; domain.len()])
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = flat % self.counts[k];
            flat /= self.counts[k];
        }
        idx
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        (0..self.dim()).map(|k| self.coord(k, idx[k])).collect()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.base[axis] + i as f64 * self.steps[axis]
    }

    /// The same region with the step halved on every axis.
    pub fn refined(&self) -> Self {
        Lattice::new(
            self.base.clone(),
            self.steps.iter().map(|h| h / 2.0).collect(),
            self.counts.iter().map(|c| 2 * c - 1).collect(),
        )
    }
}

/// Values of a scalar function on a lattice. Masked points carry `NaN`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalarFieldGrid {
    pub lattice: Lattice,
    #[serde(skip)]
    pub values: Vec<f64>,
    /// Worst path-independence defect recorded while building the field.
    pub defect: f64,
}

impl ScalarFieldGrid {
    pub fn new(lattice: Lattice, values: Vec<f64>, defect: f64) -> Self {
        assert_eq!(lattice.len(), values.len());
        ScalarFieldGrid {
            lattice,
            values,
            defect,
        }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.lattice.flat(idx)]
    }

    pub fn is_valid(&self, idx: &[usize]) -> bool {
        self.get(idx).is_finite()
    }

    pub fn masked(&self) -> usize {
        self.values.iter().filter(|v| !v.is_finite()).count()
    }

    /// Value at an arbitrary point by multilinear interpolation.
    /// `None` outside the lattice or next to a masked point.
    pub fn interpolate(&self, u: &[f64]) -> Option<f64> {
        let l = &self.lattice;
        let n = l.dim();
        let mut lo = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for k in 0..n {
            if l.counts[k] == 1 {
                continue;
            }
            let s = (u[k] - l.base[k]) / l.steps[k];
            let last = (l.counts[k] - 1) as f64;
            if !(-1e-9..=last + 1e-9).contains(&s) {
                return None;
            }
            let s = s.clamp(0.0, last);
            let i = (s.floor() as usize).min(l.counts[k] - 2);
            lo[k] = i;
            frac[k] = s - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = lo.clone();
            for k in 0..n {
                let up = corner >> k & 1 == 1;
                if l.counts[k] == 1 {
                    if up {
                        w = 0.0;
                    }
                    continue;
                }
                if up {
                    idx[k] += 1;
                    w *= frac[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                let v = self.get(&idx);
                if !v.is_finite() {
                    return None;
                }
                acc += w * v;
            }
        }
        Some(acc)
    }
}

/// Write grids sharing one lattice as CSV: coordinate columns, then one
/// column per grid. Masked values are written as `nan`.
pub fn write_grids_csv<W: Write>(
    w: W,
    coord_names: &[String],
    grids: &[(&str, &ScalarFieldGrid)],
) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = coord_names.to_vec();
    header.extend(grids.iter().map(|(n, _)| n.to_string()));
    out.write_record(&header)?;
    if let Some((_, first)) = grids.first() {
        let l = &first.lattice;
        for f in 0..l.len() {
            let idx = l.multi(f);
            let mut row: Vec<String> = l.point(&idx).iter().map(|v| format!("{v:.17e}")).collect();
            row.extend(grids.iter().map(|(_, g)| format!("{:.17e}", g.values[f])));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}
