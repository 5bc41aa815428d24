//! Oscillatory kernels of the frequency-localized flow and their decay in time.
//!
//! `K(t, Y) = ∫ e^{i(t|η|^σ - Y·η)} χ(|η|) dη` over `R^d`. For radial `χ` the angular
//! integral is the Fourier transform of the sphere measure, leaving the 1D integral
//! `K(t, Y) = ∫ e^{itρ^σ} χ(ρ) ρ^{d-1} σ̂_d(ρ|Y|) dρ` over the support of `χ`.

use crate::admissibility::{gamma, AdmissibleTriple, Case};
use crate::spectral_field::cutoff::DyadicCutoff;
use crate::special::sphere_fourier;
use crate::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};

/// Largest trapezoid node count tried before giving up.
pub const NODE_BUDGET: usize = 1 << 22;
/// Default relative quadrature tolerance.
pub const KERNEL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelQuery {
    pub d: usize,
    pub sigma: f64,
    pub t: f64,
    pub y: Vec<f64>,
    pub profile: DyadicCutoff,
}

impl KernelQuery {
    pub fn new(d: usize, sigma: f64, t: f64, y: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&d) || y.len() != d {
            return Err(Error::InvalidArgument(format!("kernel needs 1 ≤ d ≤ 3 and |Y| of length d, got d = {d}")));
        }
        if !(t >= 0.0) || !(1.0..=2.0).contains(&sigma) {
            return Err(Error::InvalidArgument(format!("need t ≥ 0 and σ ∈ [1, 2], got t = {t}, σ = {sigma}")));
        }
        Ok(Self { d, sigma, t, y, profile: DyadicCutoff::default() })
    }

    pub fn y_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    /// Estimated absolute quadrature error.
    pub error: f64,
    /// `∫ |integrand|`, the scale the error is measured against.
    pub scale: f64,
    pub nodes: usize,
}

/// Trapezoid rule for the radial kernel at a fixed time, reusable across offsets.
#[derive(Debug, Clone)]
pub struct RadialKernel {
    pub d: usize,
    pub sigma: f64,
    pub t: f64,
    rho: Vec<f64>,
    a: Vec<Complex64>,
}

impl RadialKernel {
    /// `n` trapezoid intervals over the support of the profile.
    pub fn new(d: usize, sigma: f64, t: f64, profile: &DyadicCutoff, n: usize) -> Self {
        let (lo, hi) = profile.support();
        let h = (hi - lo) / n as f64;
        let mut rho = Vec::with_capacity(n + 1);
        let mut a = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let r = lo + h * j as f64;
            let c = profile.chi(r);
            if c == 0.0 {
                continue;
            }
            rho.push(r);
            a.push(Complex64::from_polar(h * c * r.powi(d as i32 - 1), t * r.powf(sigma)));
        }
        Self { d, sigma, t, rho, a }
    }

    pub fn eval(&self, y: f64) -> Complex64 {
        self.rho.iter().zip(&self.a).map(|(&r, &a)| a * sphere_fourier(self.d, r * y)).sum()
    }

    /// Value, the same sum on every other node, and `Σ |terms|`.
    fn eval_with_check(&self, y: f64, stride_parity: usize) -> (Complex64, Complex64, f64) {
        let mut full = Complex64::new(0.0, 0.0);
        let mut half = Complex64::new(0.0, 0.0);
        let mut mass = 0.0;
        for (i, (&r, &a)) in self.rho.iter().zip(&self.a).enumerate() {
            let v = a * sphere_fourier(self.d, r * y);
            full += v;
            mass += v.norm();
            if i % 2 == stride_parity {
                half += 2.0 * v;
            }
        }
        (full, half, mass)
    }

    pub fn n_nodes(&self) -> usize {
        self.rho.len()
    }
}

/// Initial interval count: 8 nodes per oscillation of the phase at offset `y`, at least 64.
fn initial_intervals(sigma: f64, t: f64, y: f64, profile: &DyadicCutoff) -> usize {
    let (lo, hi) = profile.support();
    let omega = sigma * t * hi.powf(sigma - 1.0) + y;
    let cycles = omega * (hi - lo) / (2.0 * std::f64::consts::PI);
    ((8.0 * cycles).ceil() as usize).max(64)
}

/// Smallest rule (doubling from the initial guess) meeting `tol` relative to the integrand
/// mass at every offset in `probe`.
pub fn resolve_kernel(d: usize, sigma: f64, t: f64, probe: &[f64], profile: &DyadicCutoff, tol: f64) -> Result<(RadialKernel, f64)> {
    let ymax = probe.iter().copied().fold(0.0, f64::max);
    let mut n = initial_intervals(sigma, t, ymax, profile);
    // even interval count keeps the every-other-node subrule aligned with both ends
    n += n % 2;
    let mut worst = f64::INFINITY;
    while n <= NODE_BUDGET {
        let k = RadialKernel::new(d, sigma, t, profile, n);
        let (lo, _) = profile.support();
        let h = (profile.support().1 - lo) / n as f64;
        // parity of the first kept node relative to the full grid
        let first = ((k.rho[0] - lo) / h).round() as usize;
        worst = probe
            .iter()
            .map(|&y| {
                let (f, half, mass) = k.eval_with_check(y, first % 2);
                (f - half).norm() / mass.max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        if worst <= tol {
            return Ok((k, worst));
        }
        n *= 2;
    }
    Err(Error::Underresolved { what: format!("kernel at t = {t}"), estimate: worst })
}

/// `K(t, Y)` by the radial reduction.
pub fn kernel(q: &KernelQuery) -> Result<KernelValue> {
    let y = q.y_norm();
    let (k, err) = resolve_kernel(q.d, q.sigma, q.t, &[y], &q.profile, KERNEL_TOL)?;
    let (value, _, mass) = k.eval_with_check(y, 0);
    Ok(KernelValue { value, error: err * mass, scale: mass, nodes: k.n_nodes() })
}

/// `K(t, Y)` by a tensor trapezoid over `[-2, 2]^d` with `n` nodes per axis.
pub fn kernel_cartesian(q: &KernelQuery, n: usize) -> Complex64 {
    let (_, hi) = q.profile.support();
    let h = 2.0 * hi / n as f64;
    let d = q.d;
    let total = n.pow(d as u32);
    let parts = crate::par::map_range(n, |i0| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut eta = vec![0.0; d];
        for rest in 0..total / n {
            eta[0] = -hi + h * i0 as f64;
            let mut p = rest;
            for e in eta.iter_mut().skip(1) {
                *e = -hi + h * (p % n) as f64;
                p /= n;
            }
            let r = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
            let c = q.profile.chi(r);
            if c == 0.0 {
                continue;
            }
            let dot: f64 = eta.iter().zip(&q.y).map(|(a, b)| a * b).sum();
            acc += Complex64::from_polar(c, q.t * r.powf(q.sigma) - dot);
        }
        acc
    });
    parts.into_iter().sum::<Complex64>() * h.powi(d as i32)
}

/// Offsets searched for the supremum over `Y` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YPolicy {
    /// Search `|Y| ≤ reach·t`.
    pub reach: f64,
    /// Coarse spacing as a fraction of the Nyquist spacing `π/ρ_max`.
    pub oversample: f64,
    /// Local maxima refined per time.
    pub refine: usize,
}

impl Default for YPolicy {
    fn default() -> Self {
        Self { reach: 4.0, oversample: 4.0, refine: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupPoint {
    pub t: f64,
    pub sup: f64,
    pub y_star: f64,
    /// `|K(t, 10t)|`, the far-zone sample.
    pub far: f64,
    pub error: f64,
    pub nodes: usize,
    pub widened: bool,
}

/// `sup_Y |K(t, Y)|` under the search policy.
pub fn sup_kernel(d: usize, sigma: f64, t: f64, policy: &YPolicy, profile: &DyadicCutoff) -> Result<SupPoint> {
    let (_, hi) = profile.support();
    let step = std::f64::consts::PI / (hi * policy.oversample);
    let mut reach = policy.reach * t.max(1.0);
    let mut widened = false;
    loop {
        let probe = [0.0, sigma * t, reach, 10.0 * t];
        let (k, err) = resolve_kernel(d, sigma, t, &probe, profile, KERNEL_TOL)?;
        let n = (reach / step).ceil() as usize + 1;
        let ys: Vec<f64> = (0..n).map(|i| (i as f64 * step).min(reach)).collect();
        let vals: Vec<f64> = crate::par::map_slice(&ys, |&y| k.eval(y).norm());
        let mut peaks: Vec<usize> = (0..n)
            .filter(|&i| (i == 0 || vals[i] >= vals[i - 1]) && (i + 1 == n || vals[i] >= vals[i + 1]))
            .collect();
        peaks.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap().then(a.cmp(&b)));
        peaks.truncate(policy.refine.max(1));
        let refined: Vec<(f64, f64)> = crate::par::map_slice(&peaks, |&i| {
            let lo = (ys[i] - step).max(0.0);
            let hi = (ys[i] + step).min(reach);
            golden_max(|y| k.eval(y).norm(), lo, hi, 40)
        });
        let (y_star, sup) = refined
            .into_iter()
            .chain(std::iter::once((ys[0], vals[0])))
            .fold((0.0, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        if y_star >= reach - step && !widened {
            reach *= 2.0;
            widened = true;
            continue;
        }
        let far = k.eval(10.0 * t).norm();
        return Ok(SupPoint { t, sup, y_star, far, error: err, nodes: k.n_nodes(), widened });
    }
}

/// Golden-section search for a maximum of `f` on `[a, b]`; returns `(argmax, max)`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let (fa, fb) = (f(a), f(b));
    [(a, fa), (b, fb), (c, fc), (d, fd)].into_iter().fold((a, -1.0), |best, p| if p.1 > best.1 { p } else { best })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub sigma: f64,
    pub d: usize,
    pub slope: f64,
    pub intercept: f64,
    /// Slope the dispersion estimate predicts: `-d/2` for `σ > 1`, `-(d-1)/2` for `σ = 1`.
    pub predicted: f64,
    pub points: Vec<SupPoint>,
    /// Times at or below this are excluded from the fit.
    pub transient: f64,
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn predicted_slope(sigma: f64, d: usize) -> f64 {
    if sigma > 1.0 {
        -(d as f64) / 2.0
    } else {
        -(d as f64 - 1.0) / 2.0
    }
}

/// `n` log-spaced times in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1).max(1) as f64)).collect()
}

/// Fit the decay exponent of `sup_Y |K(t, Y)|` over `t_grid`, dropping `t ≤ transient`.
pub fn fit_decay(sigma: f64, d: usize, t_grid: &[f64], policy: &YPolicy, transient: f64) -> Result<DecayFit> {
    let lo = t_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = t_grid.iter().copied().fold(0.0, f64::max);
    let kept = t_grid.iter().filter(|&&t| t > transient).count();
    if kept < 2 || hi / lo < 100.0 {
        return Err(Error::InvalidArgument("decay fit needs a t grid spanning two decades".into()));
    }
    let profile = DyadicCutoff::default();
    let points =
        t_grid.iter().map(|&t| sup_kernel(d, sigma, t, policy, &profile)).collect::<Result<Vec<_>>>()?;
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        points.iter().filter(|p| p.t > transient).map(|p| (p.t.ln(), p.sup.ln())).unzip();
    let (slope, intercept) = least_squares(&lx, &ly);
    Ok(DecayFit { sigma, d, slope, intercept, predicted: predicted_slope(sigma, d), points, transient })
}

/// `|σ̂(ξ)|` for the unit sphere in `R^d`, computed by quadrature on the sphere.
pub fn sphere_measure_transform(d: usize, xi: f64) -> Complex64 {
    use std::f64::consts::PI;
    match d {
        2 => {
            let n = 64 + 4 * xi.ceil() as usize;
            let h = 2.0 * PI / n as f64;
            (0..n).map(|j| Complex64::from_polar(h, -xi * (j as f64 * h).cos())).sum()
        }
        3 => {
            let n = 64 + 2 * xi.ceil() as usize;
            let (th, w) = crate::quadrature::gauss_legendre(n, 0.0, PI);
            th.iter().zip(&w).map(|(&t, &w)| Complex64::from_polar(2.0 * PI * w * t.sin(), -xi * t.cos())).sum()
        }
        _ => Complex64::new(sphere_fourier(d, xi), 0.0),
    }
}

/// Fitted decay of `sup_{[ξ, ξ+2π]} |σ̂|` over log-spaced `ξ` in `[lo, hi]`.
pub fn sphere_decay_slope(d: usize, lo: f64, hi: f64, n: usize) -> f64 {
    let xs = log_grid(lo, hi, n);
    let sups: Vec<f64> = crate::par::map_slice(&xs, |&x| {
        (0..64).map(|j| sphere_measure_transform(d, x + j as f64 * std::f64::consts::PI / 32.0).norm()).fold(0.0, f64::max)
    });
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = sups.iter().map(|v| v.ln()).collect();
    least_squares(&lx, &ly).0
}

/// `|det ∇²_η Φ|` by central differences of `-|η|^σ`, Richardson-extrapolated in the step.
pub fn hessian_det_numeric(sigma: f64, eta: &[f64]) -> f64 {
    let d = eta.len();
    let f = |e: &[f64]| -e.iter().map(|v| v * v).sum::<f64>().sqrt().powf(sigma);
    let scale = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
    let hessian = |h: f64| {
        let mut hess = nalgebra::DMatrix::<f64>::zeros(d, d);
        let mut e = eta.to_vec();
        for i in 0..d {
            for j in i..d {
                let mut acc = 0.0;
                for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                    e.copy_from_slice(eta);
                    e[i] += si * h;
                    e[j] += sj * h;
                    acc += w * f(&e);
                }
                hess[(i, j)] = acc / (4.0 * h * h);
                hess[(j, i)] = hess[(i, j)];
            }
        }
        hess
    };
    let h = 2e-3 * scale;
    let extrapolated = (hessian(h / 2.0) * 4.0 - hessian(h)) / 3.0;
    extrapolated.determinant().abs()
}

/// `σ^d (σ-1) |η|^{d(σ-2)}`.
pub fn hessian_det_formula(sigma: f64, eta: &[f64]) -> f64 {
    let d = eta.len() as f64;
    let r = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
    sigma.powf(d) * (sigma - 1.0) * r.powf(d * (sigma - 2.0))
}

/// `C(A, m)` controlling the mode-`m` piece of block `A`.
pub fn modewise_constant(a: f64, m: usize, triple: &AdmissibleTriple, epsilon: f64) -> f64 {
    let g = gamma(triple.q, triple.r, triple.sigma, triple.d1, triple.d2);
    let beta = triple.d2 as f64 * (0.5 - triple.r.recip());
    let ip = triple.p.recip();
    match triple.case {
        Case::Euclidean => a.powf(g / 2.0 + epsilon / 4.0) / (m as f64 + 1.0).powf(beta),
        Case::Compact => {
            a.powf(g / 2.0 + (triple.sigma - 1.0) * ip + epsilon / 4.0) / (m as f64 + 1.0).powf(beta - ip)
        }
    }
}

/// `C'(A, m)` of the mode-wise estimate.
pub fn modewise_constant_prime(a: f64, m: usize, triple: &AdmissibleTriple) -> f64 {
    let d2 = triple.d2 as f64;
    let e = 0.5 - triple.r.recip();
    let num = if triple.sigma == 1.0 { a.powf((d2 + 1.0) / 2.0) } else { a.powf(d2 / 2.0 * (2.0 - triple.sigma)) };
    (num / (m as f64 + 1.0).powf(d2)).powf(e)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityRow {
    pub a: f64,
    pub sum: f64,
    pub ratio: f64,
    pub modes: usize,
}

/// Mode sums `Σ_m C(A, m)²` against `A^{γ+ε/2}` for `A = 2^0 … 2^{a_exp_max}`.
///
/// Euclidean blocks contain every mode, so the sum runs to `m_cut` with an integral tail.
/// On the unit torus `|η| ≥ 1` off the zero fiber, which caps the modes at `2m+d1 ≤ 2A-1`.
pub fn summability(triple: &AdmissibleTriple, epsilon: f64, a_exp_max: u32, m_cut: usize) -> Result<Vec<SummabilityRow>> {
    let beta = triple.d2 as f64 * (0.5 - triple.r.recip());
    let decay = match triple.case {
        Case::Euclidean => 2.0 * beta,
        Case::Compact => 2.0 * (beta - triple.p.recip()),
    };
    if triple.case == Case::Euclidean && decay <= 1.0 {
        return Err(Error::InvalidArgument(format!("mode sum diverges: 2 d2 (1/2 - 1/r) = {decay} ≤ 1")));
    }
    let g = gamma(triple.q, triple.r, triple.sigma, triple.d1, triple.d2);
    let rows = (0..=a_exp_max)
        .map(|j| {
            let a = 2f64.powi(j as i32);
            let top = match triple.case {
                Case::Euclidean => m_cut,
                Case::Compact => (2.0 * a - 1.0 - triple.d1 as f64).max(0.0) as usize / 2,
            };
            // small terms first keeps the sum order-independent of m_cut rounding
            let mut sum: f64 = (0..=top).rev().map(|m| modewise_constant(a, m, triple, epsilon).powi(2)).sum();
            if triple.case == Case::Euclidean {
                let c0 = modewise_constant(a, 0, triple, epsilon).powi(2);
                sum += c0 * (top as f64 + 2.5).powf(1.0 - decay) / (decay - 1.0);
            }
            let ratio = sum / a.powf(g + epsilon / 2.0);
            SummabilityRow { a, sum, ratio, modes: top + 1 }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q(d: usize, sigma: f64, t: f64, y: Vec<f64>) -> KernelQuery {
        KernelQuery::new(d, sigma, t, y).unwrap()
    }

    /// Adaptive Simpson on a complex integrand, an independent oracle for the trapezoid.
    fn adaptive_simpson(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
        fn rec(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, fa: Complex64, fm: Complex64, fb: Complex64, whole: Complex64, tol: f64, depth: u32) -> Complex64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).norm() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn zero_time_is_profile_mass() {
        let c = DyadicCutoff::default();
        let k = kernel(&q(1, 1.5, 0.0, vec![0.0])).unwrap();
        assert!(k.value.im.abs() < 1e-14 && k.value.re > 0.0);
        // ∫_R χ(|η|) dη by a plain non-oscillatory rule
        let (x, w) = crate::quadrature::gauss_legendre(4000, 0.625, 2.0);
        let direct: f64 = 2.0 * x.iter().zip(&w).map(|(&r, &w)| w * c.chi(r)).sum::<f64>();
        assert_relative_eq!(k.value.re, direct, max_relative = 1e-9);
    }

    #[test]
    fn matches_adaptive_oracle() {
        let c = DyadicCutoff::default();
        for t in [1.0, 10.0, 50.0] {
            let k = kernel(&q(1, 2.0, t, vec![0.0])).unwrap();
            let f = |r: f64| Complex64::from_polar(2.0 * c.chi(r), t * r * r);
            let oracle = adaptive_simpson(&f, 0.625, 2.0, 1e-12);
            assert!((k.value - oracle).norm() <= 1e-6 * oracle.norm().max(1e-3), "t={t}");
        }
    }

    #[test]
    fn radial_matches_cartesian_and_is_rotation_invariant() {
        let t = 2.0;
        let n = 40 * (1 + 2 * t as usize);
        let y = [1.3f64, -0.4];
        let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
        let radial = kernel(&q(2, 1.5, t, y.to_vec())).unwrap().value;
        for angle in [0.0, 0.7, 2.1] {
            let (s, c) = f64::sin_cos(angle);
            let rotated = vec![r * c, r * s];
            let cart = kernel_cartesian(&q(2, 1.5, t, rotated), n);
            assert!((cart - radial).norm() < 1e-6 * radial.norm().max(1.0), "{cart} {radial}");
        }
    }

    #[test]
    fn no_critical_point_means_fast_decay() {
        let t = 100.0;
        for (d, sigma) in [(1, 2.0), (2, 1.5), (2, 1.0), (3, 1.0)] {
            let k = kernel(&q(d, sigma, t, {
                let mut v = vec![0.0; d];
                v[0] = 10.0 * t;
                v
            }))
            .unwrap();
            assert!(k.value.norm() <= 1e-4, "d={d} σ={sigma}: {}", k.value.norm());
        }
    }

    #[test]
    fn underresolved_reported() {
        let e = resolve_kernel(1, 2.0, 1e9, &[0.0], &DyadicCutoff::default(), 1e-6).unwrap_err();
        assert!(matches!(e, Error::Underresolved { .. }));
    }

    #[test]
    fn hessian_determinant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for sigma in [1.25, 1.5, 1.75] {
            for d in 1..=3 {
                let eta: Vec<f64> = (0..d).map(|_| rng.gen_range(0.3..1.5) * if rng.gen() { 1.0 } else { -1.0 }).collect();
                let num = hessian_det_numeric(sigma, &eta);
                let exact = hessian_det_formula(sigma, &eta);
                assert!((num / exact - 1.0).abs() < 1e-6, "σ={sigma} d={d}: {num} vs {exact}");
            }
        }
    }

    #[test]
    fn sphere_measure_decay() {
        for d in [2, 3] {
            let s = sphere_decay_slope(d, 10.0, 1000.0, 9);
            assert!((s + (d as f64 - 1.0) / 2.0).abs() < 0.1, "d={d}: {s}");
        }
        assert!((sphere_measure_transform(2, 7.3).re - sphere_fourier(2, 7.3)).abs() < 1e-12);
        assert!((sphere_measure_transform(3, 7.3).re - sphere_fourier(3, 7.3)).abs() < 1e-12);
    }

    #[test]
    fn constants() {
        let t = AdmissibleTriple::new(6.0, 2.0, 6.0, 1.0, 1, 2, Case::Euclidean);
        assert_eq!(modewise_constant(1.0, 0, &t, 0.0), 1.0);
        for (a, m) in [(1.0f64, 0), (32.0, 3), (256.0, 16)] {
            let want = (a.powf(1.5) / ((m + 1) as f64).powi(2)).powf(1.0 / 3.0);
            assert_relative_eq!(modewise_constant_prime(a, m, &t), want, max_relative = 1e-14);
        }
    }

    #[test]
    fn mode_sums_scale_like_block_weight() {
        let t = AdmissibleTriple::new(6.0, 2.0, 6.0, 1.0, 1, 2, Case::Euclidean);
        let rows = summability(&t, 0.1, 8, 100_000).unwrap();
        let (lo, hi) = rows.iter().fold((f64::MAX, 0.0f64), |(l, h), r| (l.min(r.ratio), h.max(r.ratio)));
        assert!(hi / lo <= 4.0);
        // ζ(4/3) ≈ 3.6009, the full sum of (m+1)^{-4/3}
        assert!((rows[0].sum - 3.6009).abs() < 1e-3, "{}", rows[0].sum);
        let bad = AdmissibleTriple::new(8.0, 2.0, 8.0 / 3.0, 1.5, 1, 2, Case::Euclidean);
        assert!(summability(&bad, 0.1, 2, 10).is_err());
    }

    #[test]
    fn fit_rejects_short_grids() {
        assert!(fit_decay(2.0, 1, &[10.0, 100.0], &YPolicy::default(), 10.0).is_err());
    }

    #[test]
    fn decay_slope_one_dimensional_schrodinger() {
        let f = fit_decay(2.0, 1, &log_grid(10.0, 1000.0, 5), &YPolicy::default(), 10.0).unwrap();
        assert!((f.slope - f.predicted).abs() < 0.1, "{}", f.slope);
    }
}
