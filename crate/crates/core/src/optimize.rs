//! Scalar maximization: coarse grid scan, then golden-section refinement
//! around the best grid point.

use rayon::prelude::*;

use crate::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMax {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section_maximize<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<ScalarMax>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo <= hi) || !(tol > 0.0) {
        return Err(Error::Domain {
            name: "bracket",
            value: hi - lo,
            domain: "lo <= hi, tol > 0",
        });
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd {
        ScalarMax { x: c, value: fc }
    } else {
        ScalarMax { x: d, value: fd }
    })
}

/// Evenly spaced points from `lo` to `hi` inclusive, spacing close to `step`.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let intervals = ((hi - lo) / step).round().max(1.0) as usize;
    (0..=intervals)
        .map(|i| {
            if i == intervals {
                hi
            } else {
                lo + (hi - lo) * i as f64 / intervals as f64
            }
        })
        .collect()
}

/// Maximizes `f` over `[lo, hi]`: scan a grid of spacing `step` (points are
/// evaluated in parallel), then refine with golden-section search on the two
/// grid cells around the best point. Returns whichever of the grid optimum
/// and the refined point is larger.
pub fn grid_then_golden<F>(f: F, lo: f64, hi: f64, step: f64, tol: f64) -> Result<ScalarMax>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let xs = grid(lo, hi, step);
    let values = xs.par_iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>()?;
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > values[best] { i } else { best });
    let grid_best = ScalarMax {
        x: xs[best],
        value: values[best],
    };
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(xs.len() - 1)];
    let refined = golden_section_maximize(&f, a, b, tol)?;
    Ok(if refined.value > grid_best.value {
        refined
    } else {
        grid_best
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let m = golden_section_maximize(|x| Ok(-(x - 0.3_f64).powi(2)), 0.0, 1.0, 1e-10).unwrap();
        assert!((m.x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn grid_is_inclusive() {
        let g = grid(0.0, 1.0, 0.01);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[50], 0.5);
        assert_eq!(g[100], 1.0);
    }

    #[test]
    fn grid_then_golden_handles_boundary_maximum() {
        let m = grid_then_golden(|x| Ok(-x), 0.0, 1.0, 0.01, 1e-9).unwrap();
        assert_eq!(m.x, 0.0);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn grid_then_golden_escapes_local_peak() {
        let f = |x: f64| {
            Ok(0.5 * (-(x - 0.2).powi(2) / 1e-3).exp() + (-(x - 0.71).powi(2) / 1e-3).exp())
        };
        let m = grid_then_golden(f, 0.0, 1.0, 0.01, 1e-10).unwrap();
        assert!((m.x - 0.71).abs() < 1e-6);
    }

    #[test]
    fn errors_propagate() {
        let err = grid_then_golden(
            |x| {
                if x > 0.5 {
                    Err(Error::FitDegenerate("boom".into()))
                } else {
                    Ok(x)
                }
            },
            0.0,
            1.0,
            0.1,
            1e-6,
        );
        assert!(err.is_err());
    }
}
