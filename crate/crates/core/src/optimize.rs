//! Derivative-free scalar minimisation: coarse grid bracketing followed by
//! golden-section refinement.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Where the coarse grid placed the minimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bracket {
    /// Minimum strictly inside the grid, bracketed by the two neighbours.
    Interior { lo: f64, hi: f64 },
    /// Smallest sampled value sits on the lower end of the range.
    Lower,
    /// Smallest sampled value sits on the upper end of the range.
    Upper,
}

/// Evenly spaced samples on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (points - 1) as f64;
            (0..points)
                .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Samples `f` on a uniform grid and brackets the smallest sample.
pub fn grid_bracket(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (Bracket, f64, f64) {
    let xs = linspace(lo, hi, points.max(3));
    let (best, fbest) = xs
        .iter()
        .map(|&x| f(x))
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let bracket = if best == 0 {
        Bracket::Lower
    } else if best == xs.len() - 1 {
        Bracket::Upper
    } else {
        Bracket::Interior {
            lo: xs[best - 1],
            hi: xs[best + 1],
        }
    };
    (bracket, xs[best], fbest)
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`,
/// stopping once the bracket is narrower than `tol`. Returns `(x, f(x))`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // the midpoint is not guaranteed to beat the best interior probe
    [(x, fx), (x1, f1), (x2, f2)]
        .into_iter()
        .fold((x, fx), |acc, p| if p.1 < acc.1 { p } else { acc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_vertex() {
        let (x, fx) = golden_section(|x| (x - 1.234).powi(2) + 0.5, -3.0, 7.0, 1e-8);
        assert!((x - 1.234).abs() < 1e-7);
        assert!((fx - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bracket_reports_boundaries() {
        assert_eq!(grid_bracket(|x| x, 0.0, 1.0, 11).0, Bracket::Lower);
        assert_eq!(grid_bracket(|x| -x, 0.0, 1.0, 11).0, Bracket::Upper);
        match grid_bracket(|x| (x - 0.42).abs(), 0.0, 1.0, 11).0 {
            Bracket::Interior { lo, hi } => assert!(lo < 0.42 && 0.42 < hi),
            b => panic!("{b:?}"),
        }
    }

    #[test]
    fn linspace_hits_endpoints() {
        let v = linspace(1.0, 50.0, 7);
        assert_eq!(v.len(), 7);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[6], 50.0);
    }
}
