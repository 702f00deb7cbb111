//! Free-case stationary-phase machinery and limiting phase-space measures.
//!
//! After caustic onset the free solution is a superposition of branches, one
//! per stationary point `Y_j` of `Phi(t,x,y) = S0(y) + (x-y)^2 / (2t)`. Each
//! branch carries the amplitude `a0(Y_j) / sqrt(|1 + t S0''(Y_j)|)`, the phase
//! `S0(Y_j) + (t/2) S0'(Y_j)^2` and a quarter-period phase shift per negative
//! eigenvalue of `1 + t S0''(Y_j)`. Folding the `(2 pi i eps t)^(-1/2)`
//! prefactor of the exact integral representation into the branch factors
//! leaves the pre-caustic branch with zero net extra phase, so the branch
//! correction is `exp(-i pi m_minus / 2)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::spectral::Field;
use crate::wkb::{Amplitude, Phase};
use crate::{CoreError, Result};

const TWO_PI: f64 = std::f64::consts::TAU;

/// One stationary-phase branch at a fixed `(t, x)`.
#[derive(Debug, Clone, Copy)]
pub struct Branch {
    /// Stationary point `Y_j`.
    pub y: f64,
    /// Branch phase `S_j = S0(Y_j) + (t/2) S0'(Y_j)^2`.
    pub s: f64,
    /// Branch amplitude `a0(Y_j) / sqrt(|1 + t S0''(Y_j)|)` (real positive
    /// modulus).
    pub amp: Complex64,
    /// Number of negative eigenvalues of `1 + t S0''(Y_j)` (0 or 1 here).
    pub m_minus: u32,
    /// `grad S_j = S0'(Y_j)`.
    pub grad_s: f64,
}

impl Branch {
    /// Maslov phase correction `exp(-i pi m_minus / 2)`.
    pub fn phase_correction(&self) -> Complex64 {
        match self.m_minus % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        }
    }

    /// Full branch coefficient `b_j = amp_j * exp(-i pi m_minus / 2)`.
    pub fn coefficient(&self) -> Complex64 {
        self.amp * self.phase_correction()
    }
}

/// All branches through a point `(t, x)` off the caustic set.
#[derive(Debug, Clone)]
pub struct BranchSet {
    pub t: f64,
    pub x: f64,
    pub branches: Vec<Branch>,
}

impl BranchSet {
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.branches.iter().map(Branch::coefficient).collect()
    }

    pub fn gradients(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.grad_s).collect()
    }
}

const ROOT_SCAN: usize = 4096;
const ROOT_RESIDUAL: f64 = 1e-12;
const DEGENERATE_SLOPE: f64 = 1e-8;

/// All roots of `g(y) = y + t S0'(y) - x`, by fine scan for sign changes
/// refined with bisection and Newton. `(t, x)` must lie off the caustic set:
/// a root with `|g'| < 1e-8` is rejected.
pub fn stationary_points(t: f64, x: f64, s0: &Phase) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(CoreError::Invalid("stationary points require t > 0".into()));
    }
    let g = |y: f64| y + t * s0.grad(y) - x;
    let gp = |y: f64| 1.0 + t * s0.hess(y);

    // expand until the bracket encloses every root (g -> -inf / +inf for
    // sub-quadratic phases)
    let mut lo = x - 1.0 - t;
    let mut hi = x + 1.0 + t;
    let mut span = hi - lo;
    for _ in 0..200 {
        if g(lo) < 0.0 {
            break;
        }
        lo -= span;
        span *= 2.0;
    }
    span = hi - lo;
    for _ in 0..200 {
        if g(hi) > 0.0 {
            break;
        }
        hi += span;
        span *= 2.0;
    }

    let h = (hi - lo) / ROOT_SCAN as f64;
    let mut roots = Vec::new();
    let mut prev_y = lo;
    let mut prev_g = g(lo);
    for i in 1..=ROOT_SCAN {
        let y = lo + (hi - lo) * i as f64 / ROOT_SCAN as f64;
        let cur = g(y);
        if prev_g == 0.0 {
            roots.push(prev_y);
        } else if prev_g * cur < 0.0 {
            let (mut a, mut b) = (prev_y, y);
            let (mut ga, _) = (prev_g, cur);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                let gm = g(mid);
                if gm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if ga * gm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    ga = gm;
                }
            }
            let mut root = 0.5 * (a + b);
            for _ in 0..4 {
                let slope = gp(root);
                if slope.abs() < 1e-14 {
                    break;
                }
                root -= g(root) / slope;
            }
            roots.push(root);
        } else if cur.abs() < 1e-9 && cur != 0.0 && prev_g * cur > 0.0 && i < ROOT_SCAN {
            // a near-tangency without sign change sits on the caustic set
            let ahead = g(y + h);
            if (cur - prev_g) * (ahead - cur) < 0.0 {
                return Err(CoreError::DegenerateStationaryPoint { y, slope: gp(y) });
            }
        }
        prev_y = y;
        prev_g = cur;
    }

    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    for &root in &roots {
        if g(root).abs() > ROOT_RESIDUAL {
            return Err(CoreError::InversionFailed {
                time: t,
                x,
                reason: format!("stationary point residual {:.3e}", g(root).abs()),
            });
        }
        let slope = gp(root);
        if slope.abs() < DEGENERATE_SLOPE {
            return Err(CoreError::DegenerateStationaryPoint { y: root, slope });
        }
    }
    Ok(roots)
}

/// Builds the branch set at `(t, x)` for free evolution of
/// `a0 exp(i S0 / eps)`.
pub fn branch_set(t: f64, x: f64, a0: &Amplitude, s0: &Phase) -> Result<BranchSet> {
    let roots = stationary_points(t, x, s0)?;
    let branches = roots
        .into_iter()
        .map(|y| {
            let jac = 1.0 + t * s0.hess(y);
            let grad = s0.grad(y);
            Branch {
                y,
                s: s0.value(y) + 0.5 * t * grad * grad,
                amp: Complex64::new(a0.eval(y) / jac.abs().sqrt(), 0.0),
                m_minus: u32::from(jac < 0.0),
                grad_s: grad,
            }
        })
        .collect();
    Ok(BranchSet { t, x, branches })
}

/// Multi-phase approximation
/// `sum_j amp_j exp(-i pi m_minus_j / 2) exp(i S_j / eps)`.
pub fn multiphase_eval(bs: &BranchSet, epsilon: f64) -> Complex64 {
    bs.branches
        .iter()
        .map(|b| b.coefficient() * Complex64::new(0.0, b.s / epsilon).exp())
        .sum()
}

const ORACLE_MAX_POINTS: usize = 1 << 23;
const ORACLE_PPP: f64 = 40.0;

/// Direct quadrature of the exact free-evolution integral
/// `(2 pi i eps t)^(-1/2) int a0(y) exp(i Phi / eps) dy`,
/// `Phi = S0(y) + (x-y)^2 / (2t)`, with the step chosen to put at least 40
/// points per oscillation period across the amplitude support.
pub fn oscillatory_integral_oracle(
    t: f64,
    x: f64,
    epsilon: f64,
    a0: &Amplitude,
    s0: &Phase,
) -> Result<Complex64> {
    oracle_with_resolution(t, x, epsilon, a0, s0, ORACLE_PPP)
}

/// Same quadrature with an explicit points-per-period target (for
/// refinement self-tests).
pub fn oracle_with_resolution(
    t: f64,
    x: f64,
    epsilon: f64,
    a0: &Amplitude,
    s0: &Phase,
    points_per_period: f64,
) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(CoreError::Invalid("the free-evolution integral requires t > 0".into()));
    }
    let (lo, hi) = a0
        .support(1e-12)
        .ok_or_else(|| CoreError::Invalid("oracle requires a decaying amplitude".into()))?;
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    // max |d Phi / dy| over the support fixes the oscillation period
    let mut max_slope = 0.0f64;
    for i in 0..=512 {
        let y = lo + (hi - lo) * i as f64 / 512.0;
        let slope = (s0.grad(y) + (y - x) / t).abs();
        max_slope = max_slope.max(slope);
    }
    let period = TWO_PI * epsilon / max_slope.max(1e-300);
    let h_osc = period / points_per_period;
    let h_base = (hi - lo) / 512.0;
    let h = h_osc.min(h_base);
    let mut n = ((hi - lo) / h).ceil() as usize;
    if n > ORACLE_MAX_POINTS {
        n = ORACLE_MAX_POINTS;
        let ppp = period / ((hi - lo) / n as f64);
        if ppp < 10.0 {
            return Err(CoreError::UnresolvedOscillation { points_per_period: ppp });
        }
    }
    let h = (hi - lo) / n as f64;

    let phi = |y: f64| s0.value(y) + (x - y) * (x - y) / (2.0 * t);
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..=n {
        let y = lo + h * i as f64;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += w * a0.eval(y) * Complex64::new(0.0, phi(y) / epsilon).exp();
    }
    sum *= h;
    // (2 pi i eps t)^(-1/2) = exp(-i pi/4) / sqrt(2 pi eps t)
    let prefactor = Complex64::from_polar(1.0 / (TWO_PI * epsilon * t).sqrt(), -std::f64::consts::FRAC_PI_4);
    Ok(prefactor * sum)
}

/// Histogram of a measure in the momentum variable.
#[derive(Debug, Clone)]
pub struct MomentumHistogram {
    pub bin_edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub total_mass: f64,
}

impl MomentumHistogram {
    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        0.5 * (self.bin_edges[i] + self.bin_edges[i + 1])
    }

    /// `sum mass * midpoint^order`.
    pub fn moment(&self, order: u32) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(i, m)| m * self.bin_center(i).powi(order as i32))
            .sum()
    }

    /// Largest fraction of the total mass held by two adjacent bins; close to
    /// one for delta-like concentrations.
    pub fn max_two_bin_fraction(&self) -> f64 {
        if self.total_mass == 0.0 {
            return 0.0;
        }
        let single = self.masses.iter().fold(0.0f64, |a, &b| a.max(b));
        let paired = self
            .masses
            .windows(2)
            .map(|w| w[0] + w[1])
            .fold(single, f64::max);
        paired / self.total_mass
    }
}

/// Moments for measures given as momentum atoms `(p_j, mass_j)`.
pub fn atoms_moment(atoms: &[(f64, f64)], order: u32) -> f64 {
    atoms.iter().map(|&(p, m)| m * p.powi(order as i32)).sum()
}

/// Moments for histograms; mirror of [`atoms_moment`].
pub fn histogram_moment(h: &MomentumHistogram, order: u32) -> f64 {
    h.moment(order)
}

const KRONECKER_PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Torus formula for the limiting Bohmian measure at one `(t,x)`: for angles
/// `theta` on the `N`-torus, the weight `Gamma = |sum b_j e^{i theta_j}|^2`
/// lands at the momentum `v = sum_j grad_s_j Re(z_j conj(Z)) / Gamma`.
/// Sampling is a deterministic seeded Kronecker sequence.
pub fn torus_histogram(
    coefficients: &[Complex64],
    gradients: &[f64],
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<MomentumHistogram> {
    let n = coefficients.len();
    if n == 0 || gradients.len() != n {
        return Err(CoreError::Invalid("branch coefficients and gradients must match".into()));
    }
    if n > KRONECKER_PRIMES.len() / 2 {
        return Err(CoreError::Invalid(format!("torus sampling supports up to {} branches", KRONECKER_PRIMES.len() / 2)));
    }
    if samples == 0 || bins == 0 {
        return Err(CoreError::Invalid("samples and bins must be positive".into()));
    }
    let lo = gradients.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let hi = gradients.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let width = (hi - lo) / bins as f64;

    let alphas: Vec<f64> =
        (0..n).map(|i| (KRONECKER_PRIMES[i] as f64).sqrt().fract()).collect();
    let mut phases: Vec<f64> = (0..n)
        .map(|i| {
            let gamma = (KRONECKER_PRIMES[n + i] as f64).sqrt().fract();
            ((seed as f64 + 1.0) * gamma).fract()
        })
        .collect();

    let gamma_cap: f64 = coefficients.iter().map(|b| b.norm()).sum::<f64>().powi(2);
    let floor = 1e-12 * gamma_cap;

    let mut masses = vec![0.0f64; bins];
    for _ in 0..samples {
        for (phase, alpha) in phases.iter_mut().zip(&alphas) {
            *phase += alpha;
            if *phase >= 1.0 {
                *phase -= 1.0;
            }
        }
        let mut z = Vec::with_capacity(n);
        let mut total = Complex64::new(0.0, 0.0);
        for (b, phase) in coefficients.iter().zip(&phases) {
            let (s, c) = (TWO_PI * phase).sin_cos();
            let zj = b * Complex64::new(c, s);
            total += zj;
            z.push(zj);
        }
        let gamma = total.norm_sqr();
        if gamma < floor {
            continue;
        }
        let v = z
            .iter()
            .zip(gradients)
            .map(|(zj, g)| g * (zj * total.conj()).re)
            .sum::<f64>()
            / gamma;
        let idx = (((v - lo) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
        masses[idx] += gamma;
    }
    let scale = 1.0 / samples as f64;
    for m in &mut masses {
        *m *= scale;
    }
    let total_mass = masses.iter().sum();
    let bin_edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    Ok(MomentumHistogram { bin_edges, masses, total_mass })
}

/// Limiting Bohmian measure of a branch set as a momentum histogram.
pub fn limiting_bohmian_measure(
    bs: &BranchSet,
    samples: usize,
    bins: usize,
) -> Result<MomentumHistogram> {
    torus_histogram(&bs.coefficients(), &bs.gradients(), samples, bins, 0)
}

/// Limiting Wigner measure: momentum atoms `(grad S_j, |amp_j|^2)`.
/// Insensitive to the Maslov phase shifts.
pub fn limiting_wigner_measure(bs: &BranchSet) -> Vec<(f64, f64)> {
    bs.branches.iter().map(|b| (b.grad_s, b.amp.norm_sqr())).collect()
}

/// Discrete eps-scaled Wigner transform on the field's grid.
#[derive(Debug, Clone)]
pub struct WignerTransform {
    pub x: Vec<f64>,
    /// Ascending momentum grid (the spatial wavenumbers).
    pub p: Vec<f64>,
    /// `values[j][m]` is `w(x_j, p_m)`.
    pub values: Vec<Vec<f64>>,
    /// Largest imaginary leftover relative to the real peak (diagnostic).
    pub max_imag_ratio: f64,
    dx: f64,
    dp: f64,
}

impl WignerTransform {
    /// Marginal over momentum, `int w dp`; equals the position density.
    pub fn x_marginal(&self) -> Vec<f64> {
        self.values.iter().map(|col| col.iter().sum::<f64>() * self.dp).collect()
    }

    /// Marginal over position, `int w dx`.
    pub fn p_marginal(&self) -> Vec<f64> {
        let bins = self.p.len();
        let mut out = vec![0.0; bins];
        for col in &self.values {
            for (o, v) in out.iter_mut().zip(col) {
                *o += v * self.dx;
            }
        }
        out
    }

    pub fn total_mass(&self) -> f64 {
        self.x_marginal().iter().sum::<f64>() * self.dx
    }

    /// `int p^order w dx dp`.
    pub fn p_moment(&self, order: u32) -> f64 {
        self.p_marginal()
            .iter()
            .zip(&self.p)
            .map(|(m, p)| m * p.powi(order as i32) * self.dp)
            .sum()
    }
}

/// Numerical Wigner transform
/// `w(x, p) = (1/2pi) int psi(x - eps eta/2) conj(psi(x + eps eta/2)) e^{i eta p} d eta`
/// with `eta` on the grid's node offsets and the half-shifted arguments
/// evaluated by trigonometric interpolation. The unpaired Nyquist offset is
/// dropped so the output is real up to rounding.
pub fn wigner_transform_numeric(f: &Field, epsilon: f64) -> WignerTransform {
    let grid = *f.grid();
    let n = grid.n();
    let half = n / 2;
    let dx = grid.dx();
    let dp = TWO_PI / grid.length();

    let columns: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let xj = grid.node(j);
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for l in 0..half {
                let eta = l as f64 * dx;
                let minus = f.eval_at(xj - 0.5 * epsilon * eta);
                let plus = f.eval_at(xj + 0.5 * epsilon * eta);
                let g = minus * plus.conj();
                buf[l] = g;
                if l > 0 {
                    buf[n - l] = g.conj();
                }
            }
            // buf[half] (the Nyquist offset) stays zero. The unnormalized
            // inverse transform of the offsets is exactly
            // sum_l g_l e^{2 pi i l m / n}.
            let spec = crate::spectral::Spectrum::new(grid, buf).expect("grid sized buffer");
            let col_field = crate::spectral::from_spectrum(&spec, 0.0);
            let mut col = vec![0.0; n];
            let mut imag_max = 0.0f64;
            for (idx, v) in col_field.values().iter().enumerate() {
                // reorder so that p is ascending: negative modes first
                let m = grid.mode_number(idx);
                let pos = (m + half as i64) as usize;
                col[pos] = v.re * dx / TWO_PI;
                imag_max = imag_max.max(v.im.abs() * dx / TWO_PI);
            }
            (col, imag_max)
        })
        .collect();

    let mut values = Vec::with_capacity(n);
    let mut imag_max = 0.0f64;
    let mut real_max = 0.0f64;
    for (col, im) in columns {
        imag_max = imag_max.max(im);
        real_max = col.iter().fold(real_max, |a, &b| a.max(b.abs()));
        values.push(col);
    }
    let p = (0..n).map(|idx| dp * (idx as i64 - half as i64) as f64).collect();
    let max_imag_ratio = if real_max > 0.0 { imag_max / real_max } else { 0.0 };
    WignerTransform { x: grid.nodes(), p, values, max_imag_ratio, dx, dp }
}
