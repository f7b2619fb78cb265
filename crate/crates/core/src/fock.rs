//! Brute-force truncated Fock-space simulator for the probe/conjugate pair.
//!
//! Each mode is cut off at `n_max` photons. The occupation basis
//! `|n_a, n_b⟩` splits into sectors of fixed `d = n_a − n_b`; the two-mode
//! squeeze unitary conserves `d`, so it acts block-diagonally and is applied
//! as one exact matrix exponential per sector.
//!
//! Pure states keep the full amplitude tensor. Loss turns them into density
//! operators, which are stored dephased in `d`: only blocks `⟨k+d, k|ρ|k'+d, k'⟩`
//! are kept. Gain, probe/conjugate loss and photon counting are all covariant
//! under `e^{iθ(N_a − N_b)}`, so dephasing leaves every photon-number
//! statistic downstream unchanged.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{check_gain, check_transmission, Error, Result};
use crate::gaussian::{twin_statistics, GaussianState, ModeSet, PhotonStats};
use crate::medium::{detect, propagate_medium, DetectionParams, MediumParams, StageOrder};

type C64 = Complex<f64>;

/// Leakage below which oracle results count as certified.
pub const LEAKAGE_BOUND: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FockMode {
    Probe,
    Conjugate,
}

/// Sector `d`: basis `|k + d, k⟩` for `k` in `first..first + len`.
#[derive(Clone, Copy, Debug)]
struct Sector {
    d: isize,
    first: usize,
    len: usize,
}

impl Sector {
    fn new(n_max: usize, d: isize) -> Self {
        let n = n_max as isize;
        let first = (-d).max(0);
        let last = n.min(n - d);
        Self {
            d,
            first: first as usize,
            len: (last - first + 1) as usize,
        }
    }

    fn occupations(&self, i: usize) -> (usize, usize) {
        let k = self.first + i;
        ((k as isize + self.d) as usize, k)
    }
}

fn sectors(n_max: usize) -> impl Iterator<Item = Sector> {
    let n = n_max as isize;
    (-n..=n).map(move |d| Sector::new(n_max, d))
}

/// Complex block stored as separate real and imaginary parts; every operator
/// used here is real in the occupation basis.
#[derive(Clone, Debug, PartialEq)]
struct Block {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl Block {
    fn zeros(r: usize, c: usize) -> Self {
        Self {
            re: DMatrix::zeros(r, c),
            im: DMatrix::zeros(r, c),
        }
    }

    fn get(&self, i: usize, j: usize) -> C64 {
        C64::new(self.re[(i, j)], self.im[(i, j)])
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    /// Amplitudes per sector (column vectors).
    Pure(Vec<Block>),
    /// Density blocks per sector.
    Mixed(Vec<Block>),
}

/// Two-mode state in a truncated occupation basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    n_max: usize,
    repr: Repr,
    /// Largest truncation leakage seen so far.
    leakage: f64,
}

fn poisson_amplitudes(alpha: C64, n_max: usize) -> Vec<C64> {
    let mut amp = Vec::with_capacity(n_max + 1);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..=n_max {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        amp.push(c);
    }
    amp
}

impl FockState {
    fn empty_pure(n_max: usize) -> Vec<Block> {
        sectors(n_max).map(|s| Block::zeros(s.len, 1)).collect()
    }

    fn index(&self, d: isize) -> usize {
        (d + self.n_max as isize) as usize
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::number_state(0, 0, n_max).expect("vacuum fits any cutoff")
    }

    /// `|n_a, n_b⟩`.
    pub fn number_state(n_a: usize, n_b: usize, n_max: usize) -> Result<Self> {
        if n_a > n_max || n_b > n_max {
            return Err(Error::InvalidParameter(format!(
                "|{n_a}, {n_b}⟩ exceeds the cutoff {n_max}"
            )));
        }
        let mut blocks = Self::empty_pure(n_max);
        let d = n_a as isize - n_b as isize;
        let s = Sector::new(n_max, d);
        blocks[(d + n_max as isize) as usize].re[(n_b - s.first, 0)] = 1.0;
        let mut out = Self {
            n_max,
            repr: Repr::Pure(blocks),
            leakage: 0.0,
        };
        out.leakage = out.boundary_population();
        Ok(out)
    }

    /// Probe in the coherent state `|α⟩`, conjugate in vacuum.
    pub fn coherent(alpha: C64, n_max: usize) -> Self {
        let mut blocks = Self::empty_pure(n_max);
        for (n, c) in poisson_amplitudes(alpha, n_max).into_iter().enumerate() {
            // |n, 0⟩ is the first basis state of sector d = n
            let b = &mut blocks[n + n_max];
            b.re[(0, 0)] = c.re;
            b.im[(0, 0)] = c.im;
        }
        let mut out = Self {
            n_max,
            repr: Repr::Pure(blocks),
            leakage: 0.0,
        };
        out.leakage = (1.0 - out.norm()).max(out.boundary_population());
        out
    }

    /// Probe coherent state with real amplitude and mean photon number `photons`.
    pub fn coherent_seed(photons: f64, n_max: usize) -> Self {
        Self::coherent(C64::new(photons.sqrt(), 0.0), n_max)
    }

    /// Thermal state with mean occupation `mean` on one mode, vacuum on the other.
    pub fn thermal(mean: f64, mode: FockMode, n_max: usize) -> Self {
        let mut blocks: Vec<Block> = sectors(n_max).map(|s| Block::zeros(s.len, s.len)).collect();
        let ratio = mean / (mean + 1.0);
        let mut p = 1.0 / (mean + 1.0);
        for n in 0..=n_max {
            let d = match mode {
                FockMode::Probe => n as isize,
                FockMode::Conjugate => -(n as isize),
            };
            // |n, 0⟩ and |0, n⟩ are both the first state of their sector
            blocks[(d + n_max as isize) as usize].re[(0, 0)] = p;
            p *= ratio;
        }
        let mut out = Self {
            n_max,
            repr: Repr::Mixed(blocks),
            leakage: 0.0,
        };
        out.leakage = (1.0 - out.norm()).max(out.boundary_population());
        out
    }

    /// Joint occupation distribution `P(n_a, n_b)` as `(n_a, n_b, p)` triples.
    pub fn occupation_probabilities(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for s in sectors(self.n_max) {
            let idx = self.index(s.d);
            for i in 0..s.len {
                let p = match &self.repr {
                    Repr::Pure(b) => b[idx].get(i, 0).norm_sqr(),
                    Repr::Mixed(b) => b[idx].re[(i, i)],
                };
                let (na, nb) = s.occupations(i);
                out.push((na, nb, p));
            }
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.occupation_probabilities().iter().map(|x| x.2).sum()
    }

    /// Population within the outer shell of the truncated box, used as the
    /// truncation-leakage estimate.
    pub fn boundary_population(&self) -> f64 {
        let width = (self.n_max / 8).max(2);
        let edge = self.n_max.saturating_sub(width);
        self.occupation_probabilities()
            .into_iter()
            .filter(|&(na, nb, _)| na > edge || nb > edge)
            .map(|x| x.2)
            .sum()
    }

    fn certify(mut self) -> Result<Self> {
        self.leakage = self.leakage.max(self.boundary_population());
        if self.leakage > LEAKAGE_BOUND {
            Err(Error::Truncation {
                leakage: self.leakage,
                bound: LEAKAGE_BOUND,
                n_max: self.n_max,
            })
        } else {
            Ok(self)
        }
    }

    /// Density blocks, dephasing a pure state first.
    fn density_blocks(&self) -> Vec<Block> {
        match &self.repr {
            Repr::Mixed(b) => b.clone(),
            Repr::Pure(b) => b
                .iter()
                .map(|v| Block {
                    re: &v.re * v.re.transpose() + &v.im * v.im.transpose(),
                    im: &v.im * v.re.transpose() - &v.re * v.im.transpose(),
                })
                .collect(),
        }
    }

    /// Dense density operator over `|n_a, n_b⟩` with index `n_a·(n_max+1) + n_b`,
    /// keeping only the stored (dephased) blocks for mixed states.
    pub fn to_dense_density(&self) -> DMatrix<C64> {
        let dim = (self.n_max + 1) * (self.n_max + 1);
        let idx = |na: usize, nb: usize| na * (self.n_max + 1) + nb;
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        match &self.repr {
            Repr::Pure(blocks) => {
                let mut psi = DVector::<C64>::zeros(dim);
                for s in sectors(self.n_max) {
                    for i in 0..s.len {
                        let (na, nb) = s.occupations(i);
                        psi[idx(na, nb)] = blocks[self.index(s.d)].get(i, 0);
                    }
                }
                rho = &psi * psi.adjoint();
            }
            Repr::Mixed(blocks) => {
                for s in sectors(self.n_max) {
                    let b = &blocks[self.index(s.d)];
                    for i in 0..s.len {
                        for j in 0..s.len {
                            let (na, nb) = s.occupations(i);
                            let (ma, mb) = s.occupations(j);
                            rho[(idx(na, nb), idx(ma, mb))] = b.get(i, j);
                        }
                    }
                }
            }
        }
        rho
    }
}

/// `exp(K)` for a real antisymmetric `K` by scaling and squaring a Taylor
/// series whose terms are summed until they drop below 1e-17 in max norm.
fn expm(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let norm = k.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let ks = k * scale;
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for j in 1..60 {
        term = &term * &ks / j as f64;
        result += &term;
        if term.amax() < 1e-17 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Two-mode squeeze unitary `exp(s(ab − a†b†))`, `s = arccosh(√G)`, tabulated
/// per sector for one cutoff. Its Heisenberg action is
/// `a → √G a − √(G−1) b†`.
#[derive(Clone, Debug)]
pub struct SqueezeOperator {
    n_max: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl SqueezeOperator {
    pub fn new(gain: f64, n_max: usize) -> Result<Self> {
        check_gain(gain)?;
        let s = gain.sqrt().acosh();
        let blocks = sectors(n_max)
            .map(|sec| {
                let mut k = DMatrix::<f64>::zeros(sec.len, sec.len);
                for i in 0..sec.len.saturating_sub(1) {
                    let (na, nb) = sec.occupations(i);
                    // a†b† |na, nb⟩ = √((na+1)(nb+1)) |na+1, nb+1⟩
                    let c = s * (((na + 1) * (nb + 1)) as f64).sqrt();
                    k[(i + 1, i)] = -c;
                    k[(i, i + 1)] = c;
                }
                expm(&k)
            })
            .collect();
        Ok(Self { n_max, blocks })
    }

    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        if state.n_max != self.n_max {
            return Err(Error::DimensionMismatch {
                expected: self.n_max,
                found: state.n_max,
            });
        }
        self.transform(state).certify()
    }

    fn transform(&self, state: &FockState) -> FockState {
        let repr = match &state.repr {
            Repr::Pure(b) => Repr::Pure(
                b.iter()
                    .zip(&self.blocks)
                    .map(|(v, u)| Block {
                        re: u * &v.re,
                        im: u * &v.im,
                    })
                    .collect(),
            ),
            Repr::Mixed(b) => Repr::Mixed(
                b.iter()
                    .zip(&self.blocks)
                    .map(|(r, u)| Block {
                        re: u * &r.re * u.transpose(),
                        im: u * &r.im * u.transpose(),
                    })
                    .collect(),
            ),
        };
        FockState {
            n_max: state.n_max,
            repr,
            leakage: state.leakage,
        }
    }
}

/// Applies the ideal amplifier of gain `G` to a truncated state.
pub fn oracle_squeeze(gain: f64, state: &FockState) -> Result<FockState> {
    SqueezeOperator::new(gain, state.n_max)?.apply(state)
}

fn binomial_weight(n: usize, l: usize, transmission: f64) -> f64 {
    // √(C(n,l) (1−T)^l T^(n−l)) via logs to stay finite at large n
    let mut ln_c = 0.0;
    for i in 0..l {
        ln_c += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    let lost = if l == 0 { 0.0 } else { l as f64 * (1.0 - transmission).ln() };
    let kept = if n == l { 0.0 } else { (n - l) as f64 * transmission.ln() };
    (0.5 * (ln_c + lost + kept)).exp()
}

/// Loss channel of transmission `T` on one mode, with Kraus operators
/// `E_l = √((1−T)^l / l!) T^{N/2} a^l`.
pub fn oracle_loss(transmission: f64, target: FockMode, state: &FockState) -> Result<FockState> {
    check_transmission(transmission)?;
    loss_channel(transmission, target, state).certify()
}

/// `w[n][l] = √(C(n,l) (1−T)^l T^(n−l))`.
fn binomial_table(n_max: usize, transmission: f64) -> Vec<Vec<f64>> {
    (0..=n_max)
        .map(|n| (0..=n).map(|l| binomial_weight(n, l, transmission)).collect())
        .collect()
}

// `l` indexes the weight table and shifts the target sector at once
#[allow(clippy::needless_range_loop)]
fn loss_channel(transmission: f64, target: FockMode, state: &FockState) -> FockState {
    let n_max = state.n_max;
    let table = binomial_table(n_max, transmission);
    let input = state.density_blocks();
    let mut out: Vec<Block> = sectors(n_max).map(|s| Block::zeros(s.len, s.len)).collect();
    let mut w = Vec::with_capacity(n_max + 1);
    for s in sectors(n_max) {
        let rho = &input[(s.d + n_max as isize) as usize];
        // |ρ_ij| ≤ √(ρ_ii ρ_jj): a sector with negligible trace contributes nothing
        if rho.re.trace() <= 1e-40 {
            continue;
        }
        let counts: Vec<usize> = (0..s.len)
            .map(|i| {
                let (na, nb) = s.occupations(i);
                if target == FockMode::Probe { na } else { nb }
            })
            .collect();
        let max_l = counts.iter().copied().max().unwrap_or(0);
        for l in 0..=max_l {
            // E_l maps |k+d, k⟩ to |k+d−l, k⟩ (probe) or |k+d, k−l⟩ (conjugate)
            let (d_new, k_shift) = match target {
                FockMode::Probe => (s.d - l as isize, 0),
                FockMode::Conjugate => (s.d + l as isize, l),
            };
            let t = Sector::new(n_max, d_new);
            w.clear();
            w.extend(counts.iter().map(|&n| if n >= l { table[n][l] } else { 0.0 }));
            let first = w.iter().position(|&x| x != 0.0).unwrap_or(s.len);
            if first == s.len {
                continue;
            }
            // source index i ↦ target index i + offset
            let offset = (s.first + first - k_shift - t.first) as isize - first as isize;
            let dst = &mut out[(d_new + n_max as isize) as usize];
            let (slen, tlen) = (s.len, t.len);
            for (src, dst) in [(&rho.re, &mut dst.re), (&rho.im, &mut dst.im)] {
                let src = src.as_slice();
                let dst = dst.as_mut_slice();
                for j in first..slen {
                    let wj = w[j];
                    let tj = (j as isize + offset) as usize;
                    let col = &src[j * slen..(j + 1) * slen];
                    let out_col = &mut dst[tj * tlen..(tj + 1) * tlen];
                    let lo = (first as isize + offset) as usize;
                    for (i, o) in (first..slen).zip(out_col[lo..].iter_mut()) {
                        *o += w[i] * wj * col[i];
                    }
                }
            }
        }
    }
    FockState {
        n_max,
        repr: Repr::Mixed(out),
        leakage: state.leakage,
    }
}

/// Exact photon-number moments by direct summation over the occupation basis.
pub fn oracle_observables(state: &FockState) -> PhotonStats {
    let probs = state.occupation_probabilities();
    let total: f64 = probs.iter().map(|x| x.2).sum();
    let e = |f: &dyn Fn(f64, f64) -> f64| probs.iter().map(|&(a, b, p)| p * f(a as f64, b as f64)).sum::<f64>() / total;
    let ma = e(&|a, _| a);
    let mb = e(&|_, b| b);
    let va = e(&|a, _| (a - ma) * (a - ma));
    let vb = e(&|_, b| (b - mb) * (b - mb));
    let cab = e(&|a, b| (a - ma) * (b - mb));
    let vd = e(&|a, b| {
        let x = (a - b) - (ma - mb);
        x * x
    });
    PhotonStats {
        mean_a: ma,
        mean_b: mb,
        var_a: va,
        var_b: vb,
        cov_ab: cab,
        var_diff: vd,
    }
}

/// Oracle statistics together with the cutoff that certified them.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct CertifiedStats {
    pub stats: PhotonStats,
    pub n_max: usize,
    pub leakage: f64,
}

/// Interleaved gain/loss stack run in Fock space: `stages` repetitions of
/// elementary gain then elementary probe loss, an optional balanced detector,
/// and a coherent probe seed of `seed_photons` (0 for vacuum).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct OracleChain {
    pub gain: f64,
    pub transmission: f64,
    pub stages: usize,
    pub seed_photons: f64,
    pub efficiency: f64,
}

impl OracleChain {
    fn run_at(&self, n_max: usize) -> Result<FockState> {
        let medium = MediumParams::new(self.gain, self.transmission, self.stages)?;
        let (g, t) = (medium.elementary_gain(), medium.elementary_transmission());
        let squeeze = SqueezeOperator::new(g, n_max)?;
        let mut state = if self.seed_photons > 0.0 {
            FockState::coherent_seed(self.seed_photons, n_max).certify()?
        } else {
            FockState::vacuum(n_max)
        };
        for _ in 0..self.stages {
            state = squeeze.apply(&state)?;
            if t < 1.0 {
                state = oracle_loss(t, FockMode::Probe, &state)?;
            }
        }
        if self.efficiency < 1.0 {
            state = oracle_loss(self.efficiency, FockMode::Probe, &state)?;
            state = oracle_loss(self.efficiency, FockMode::Conjugate, &state)?;
        }
        Ok(state)
    }

    /// Runs the chain, doubling the cutoff from `start_n_max` until the
    /// truncation leakage drops below [`LEAKAGE_BOUND`] (at most `max_n_max`).
    pub fn run(&self, start_n_max: usize, max_n_max: usize) -> Result<CertifiedStats> {
        check_gain(self.gain)?;
        check_transmission(self.transmission)?;
        if self.stages == 0 {
            return Err(Error::InvalidStages(0));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::InvalidEfficiency(self.efficiency));
        }
        let mut n_max = start_n_max.max(4);
        loop {
            match self.run_at(n_max) {
                Ok(state) => {
                    return Ok(CertifiedStats {
                        stats: oracle_observables(&state),
                        n_max,
                        leakage: state.leakage(),
                    })
                }
                Err(Error::Truncation { .. }) if n_max * 2 <= max_n_max => n_max *= 2,
                Err(e) => return Err(e),
            }
        }
    }
}

/// Relative agreement required between the two engines.
pub const VALIDATION_TOL: f64 = 1e-6;
/// Absolute floor for quantities that vanish in both engines.
pub const VALIDATION_FLOOR: f64 = 1e-12;

/// The same chain evaluated with the Gaussian engine.
pub fn gaussian_reference(chain: &OracleChain) -> Result<PhotonStats> {
    let medium = MediumParams::new(chain.gain, chain.transmission, chain.stages)?;
    let seed = GaussianState::coherent_seed(&ModeSet::twin_beam(), chain.seed_photons)?;
    let mut out = propagate_medium(&medium, StageOrder::GainFirst, &seed)?;
    if chain.efficiency < 1.0 {
        out = detect(&out, &DetectionParams::new(chain.efficiency)?)?;
    }
    Ok(twin_statistics(&out))
}

/// One oracle-versus-Gaussian comparison.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct CaseReport {
    pub chain: OracleChain,
    pub oracle: CertifiedStats,
    pub gaussian: PhotonStats,
    /// Largest `|x − y| / max(|x|, |y|)` over all fields above the floor.
    pub max_rel_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub cases: Vec<CaseReport>,
    pub pass: bool,
}

fn fields(s: &PhotonStats) -> [f64; 6] {
    [s.mean_a, s.mean_b, s.var_a, s.var_b, s.cov_ab, s.var_diff]
}

/// Compares both engines on one chain.
pub fn compare(chain: &OracleChain) -> Result<CaseReport> {
    let oracle = chain.run(16, 512)?;
    let gaussian = gaussian_reference(chain)?;
    let mut max_rel_error: f64 = 0.0;
    let mut pass = oracle.leakage < LEAKAGE_BOUND;
    for (x, y) in fields(&oracle.stats).into_iter().zip(fields(&gaussian)) {
        let diff = (x - y).abs();
        let scale = x.abs().max(y.abs());
        pass &= diff <= VALIDATION_TOL * scale + VALIDATION_FLOOR;
        if scale > VALIDATION_FLOOR {
            max_rel_error = max_rel_error.max(diff / scale);
        }
    }
    Ok(CaseReport {
        chain: *chain,
        oracle,
        gaussian,
        max_rel_error,
        pass,
    })
}

/// Gain {1.2, 1.5, 2} × transmission {0.7, 0.9, 1} × stages {1, 3, 5} ×
/// seed {0, 1, 4} photons, ideal detection.
pub fn default_validation_grid() -> Vec<OracleChain> {
    let mut out = Vec::new();
    for gain in [1.2, 1.5, 2.0] {
        for transmission in [0.7, 0.9, 1.0] {
            for stages in [1, 3, 5] {
                for seed_photons in [0.0, 1.0, 4.0] {
                    out.push(OracleChain {
                        gain,
                        transmission,
                        stages,
                        seed_photons,
                        efficiency: 1.0,
                    });
                }
            }
        }
    }
    out
}

pub fn validate(cases: &[OracleChain]) -> Result<ValidationReport> {
    let cases = cases.iter().map(compare).collect::<Result<Vec<_>>>()?;
    let pass = cases.iter().all(|c| c.pass);
    Ok(ValidationReport {
        tolerance: VALIDATION_TOL,
        cases,
        pass,
    })
}
