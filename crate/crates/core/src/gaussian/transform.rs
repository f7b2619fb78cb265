use nalgebra::{Complex, DMatrix};

use super::modes::ModeSet;
use crate::error::{check_gain, check_transmission, Error, Result};

type C64 = Complex<f64>;

/// Tolerance used when checking the Bogoliubov conditions.
pub const BOGOLIUBOV_TOL: f64 = 1e-10;

/// Linear map on mode operators, `a_out,i = Σ_j (A_ij a_j + B_ij a_j†)`.
///
/// A transform carries the mode set it accepts (`input`) and the mode set it
/// produces (`output`). The two differ only when the transform allocates loss
/// ancillas: those are appended to the output set and enter in vacuum. Both
/// coefficient matrices are square over the output modes.
#[derive(Clone, Debug, PartialEq)]
pub struct BogoliubovTransform {
    input: ModeSet,
    output: ModeSet,
    a: DMatrix<C64>,
    b: DMatrix<C64>,
}

impl BogoliubovTransform {
    /// Builds a transform from raw coefficient matrices, checking shapes and
    /// the Bogoliubov conditions.
    pub fn from_parts(input: ModeSet, output: ModeSet, a: DMatrix<C64>, b: DMatrix<C64>) -> Result<Self> {
        if !input.is_prefix_of(&output) {
            return Err(Error::ModeMismatch(format!(
                "input {input} is not a prefix of output {output}"
            )));
        }
        let n = output.len();
        for m in [&a, &b] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows().max(m.ncols()),
                });
            }
        }
        let t = Self { input, output, a, b };
        let defect = t.bogoliubov_defect();
        if defect > BOGOLIUBOV_TOL {
            return Err(Error::InvalidParameter(format!(
                "coefficients violate the Bogoliubov conditions (defect {defect:e})"
            )));
        }
        Ok(t)
    }

    pub fn identity(modes: &ModeSet) -> Self {
        let n = modes.len();
        Self {
            input: modes.clone(),
            output: modes.clone(),
            a: DMatrix::identity(n, n),
            b: DMatrix::zeros(n, n),
        }
    }

    pub fn input(&self) -> &ModeSet {
        &self.input
    }

    pub fn output(&self) -> &ModeSet {
        &self.output
    }

    pub fn a(&self) -> &DMatrix<C64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<C64> {
        &self.b
    }

    /// Largest entry of `A·A† − B·B† − I` and of the antisymmetric part of
    /// `A·Bᵀ`. Zero for an exact Bogoliubov transform.
    pub fn bogoliubov_defect(&self) -> f64 {
        let n = self.output.len();
        let unit = &self.a * self.a.adjoint() - &self.b * self.b.adjoint() - DMatrix::<C64>::identity(n, n);
        let abt = &self.a * self.b.transpose();
        let asym = &abt - abt.transpose();
        let max_abs = |m: &DMatrix<C64>| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        max_abs(&unit).max(max_abs(&asym))
    }

    /// Real symplectic matrix acting on quadratures ordered `(x_1, p_1, x_2, p_2, …)`
    /// with `x = a + a†` and `p = −i(a − a†)`.
    pub fn symplectic(&self) -> DMatrix<f64> {
        let n = self.output.len();
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let sum = self.a[(i, j)] + self.b[(i, j)];
                let diff = self.a[(i, j)] - self.b[(i, j)];
                s[(2 * i, 2 * j)] = sum.re;
                s[(2 * i, 2 * j + 1)] = -diff.im;
                s[(2 * i + 1, 2 * j)] = sum.im;
                s[(2 * i + 1, 2 * j + 1)] = diff.re;
            }
        }
        s
    }

    /// Extends the transform with identity action on additional modes.
    /// `output` must start with the current output set.
    pub fn extend_to(&self, output: &ModeSet) -> Result<Self> {
        if !self.output.is_prefix_of(output) {
            return Err(Error::ModeMismatch(format!(
                "{} cannot be extended to {}",
                self.output, output
            )));
        }
        let n = self.output.len();
        let m = output.len();
        let mut a = DMatrix::<C64>::identity(m, m);
        let mut b = DMatrix::<C64>::zeros(m, m);
        a.view_mut((0, 0), (n, n)).copy_from(&self.a);
        b.view_mut((0, 0), (n, n)).copy_from(&self.b);
        Ok(Self {
            input: self.input.clone(),
            output: output.clone(),
            a,
            b,
        })
    }
}

/// Ideal phase-insensitive amplifier on the pair `(probe, conjugate)`:
/// `a → √G a − √(G−1) b†` and `b → √G b − √(G−1) a†`.
pub fn two_mode_squeezer(gain: f64, modes: &ModeSet, pair: (&str, &str)) -> Result<BogoliubovTransform> {
    check_gain(gain)?;
    let i = modes.index_of(pair.0)?;
    let j = modes.index_of(pair.1)?;
    if i == j {
        return Err(Error::ModeCollision(pair.0.to_string()));
    }
    let n = modes.len();
    let mut a = DMatrix::<C64>::identity(n, n);
    let mut b = DMatrix::<C64>::zeros(n, n);
    let amp = gain.sqrt();
    let cross = -(gain - 1.0).sqrt();
    a[(i, i)] = C64::new(amp, 0.0);
    a[(j, j)] = C64::new(amp, 0.0);
    b[(i, j)] = C64::new(cross, 0.0);
    b[(j, i)] = C64::new(cross, 0.0);
    Ok(BogoliubovTransform {
        input: modes.clone(),
        output: modes.clone(),
        a,
        b,
    })
}

/// Beam splitter of transmission `T` picking off part of `target` and
/// injecting vacuum from a freshly allocated `ancilla` mode. All other modes
/// pass unchanged.
pub fn attenuator(transmission: f64, modes: &ModeSet, target: &str, ancilla: &str) -> Result<BogoliubovTransform> {
    check_transmission(transmission)?;
    let t = modes.index_of(target)?;
    let output = modes.with_mode(ancilla)?;
    let c = output.len() - 1;
    let n = output.len();
    let mut a = DMatrix::<C64>::identity(n, n);
    let keep = transmission.sqrt();
    let leak = (1.0 - transmission).sqrt();
    a[(t, t)] = C64::new(keep, 0.0);
    a[(t, c)] = C64::new(leak, 0.0);
    a[(c, t)] = C64::new(-leak, 0.0);
    a[(c, c)] = C64::new(keep, 0.0);
    Ok(BogoliubovTransform {
        input: modes.clone(),
        output,
        a,
        b: DMatrix::zeros(n, n),
    })
}

/// `a_target → e^{iθ} a_target`.
pub fn phase_shift(theta: f64, modes: &ModeSet, target: &str) -> Result<BogoliubovTransform> {
    let t = modes.index_of(target)?;
    let mut out = BogoliubovTransform::identity(modes);
    out.a[(t, t)] = C64::from_polar(1.0, theta);
    Ok(out)
}

/// Transform that applies `first` and then `second`.
///
/// `second.input()` must equal `first.output()`.
pub fn compose(first: &BogoliubovTransform, second: &BogoliubovTransform) -> Result<BogoliubovTransform> {
    if second.input != first.output {
        return Err(Error::ModeMismatch(format!(
            "second transform expects {}, first produces {}",
            second.input, first.output
        )));
    }
    let first = first.extend_to(&second.output)?;
    let n = second.output.len();
    let zero = C64::new(0.0, 0.0);
    let mut a = first.a.clone();
    let mut b = first.b.clone();
    // A = A2·A1 + B2·conj(B1), B = A2·B1 + B2·conj(A1), evaluated row by row
    // over the nonzero coefficients of the (typically sparse) second stage.
    for i in 0..n {
        let untouched = (0..n).all(|j| {
            second.b[(i, j)] == zero && second.a[(i, j)] == if i == j { C64::new(1.0, 0.0) } else { zero }
        });
        if untouched {
            continue;
        }
        let mut row_a = vec![zero; n];
        let mut row_b = vec![zero; n];
        for j in 0..n {
            let (ca, cb) = (second.a[(i, j)], second.b[(i, j)]);
            if ca != zero {
                for k in 0..n {
                    row_a[k] += ca * first.a[(j, k)];
                    row_b[k] += ca * first.b[(j, k)];
                }
            }
            if cb != zero {
                for k in 0..n {
                    row_a[k] += cb * first.b[(j, k)].conj();
                    row_b[k] += cb * first.a[(j, k)].conj();
                }
            }
        }
        for k in 0..n {
            a[(i, k)] = row_a[k];
            b[(i, k)] = row_b[k];
        }
    }
    Ok(BogoliubovTransform {
        input: first.input,
        output: second.output.clone(),
        a,
        b,
    })
}
