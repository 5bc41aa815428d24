//! Space-time norms of the linear flows and the Strichartz experiments built on them.
//!
//! Euclidean experiments use [`RadialField`] data: each time slice of the flow is
//! `u(t, x, ρ) = Σ_l c_l e^{±itω_l} h̃(x; r_l) σ̂(ρ r_l)`, evaluated as one real matrix
//! product per component. Compact experiments use lattice fields on the torus.

use crate::admissibility::{slice_norm, time_norm, trapezoid_weights, AdmissibleTriple, Case, Exponent, MixedNormSpec, Slice};
use crate::dispersion::{least_squares, modewise_constant_prime};
use crate::hermite_basis::{hermite_values, tensor_nodes};
use crate::propagators::{evolve, modewise_timescale, PropagatorSpec, Sign};
use crate::quadrature::{gauss_hermite, gauss_legendre};
use crate::spectral_field::cutoff::{BlockWindow, DyadicCutoff};
use crate::spectral_field::radial::RadialSegment;
use crate::spectral_field::{EtaMultiplier, FieldGrid, Geometry, RadialField, SpectralField};
use crate::special::{sphere_area, sphere_fourier};
use crate::{Complex64, Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Discretization knobs shared by the radial experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resolution {
    /// Gauss–Hermite nodes per x axis.
    pub x_nodes: usize,
    /// Extra `y` reach, in units of the inverse spectral width.
    pub tail_margin: f64,
    /// Time samples per period of the fastest phase.
    pub samples_per_period: f64,
    /// `ρ` nodes per shortest wavelength.
    pub rho_per_wavelength: f64,
    /// Gauss–Legendre nodes per `ρ` panel.
    pub rho_panel_nodes: usize,
    pub r_min_nodes: usize,
    /// Radial nodes per radian of integrand oscillation.
    pub r_per_radian: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            x_nodes: 40,
            tail_margin: 30.0,
            samples_per_period: 64.0,
            rho_per_wavelength: 8.0,
            rho_panel_nodes: 12,
            r_min_nodes: 200,
            r_per_radian: 8.0 / PI,
        }
    }
}

/// Which way the flow turns: `e^{itΔ_G}` at `σ = 1`, `e^{it(-Δ_G)^σ}` above.
pub fn flow_sign(sigma: f64) -> Sign {
    if sigma == 1.0 {
        Sign::Schrodinger
    } else {
        Sign::Fractional
    }
}

/// Radial support `[lo, hi]` of one mode's profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub m: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Sizes of the space-time sampling for data with given supports.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub d1: usize,
    pub d2: usize,
    pub sigma: f64,
    pub horizon: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    /// Narrowest support width.
    pub bandwidth: f64,
    /// Largest group velocity `dω/dr`.
    pub v_max: f64,
    pub omega_max: f64,
    /// `ρ` range sampled.
    pub y_reach: f64,
    pub res: Resolution,
}

impl Plan {
    pub fn new(supports: &[Support], d1: usize, d2: usize, sigma: f64, horizon: f64, res: Resolution) -> Result<Self> {
        if supports.is_empty() {
            return Err(Error::ZeroDenominator("empty datum".into()));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be finite and ≥ 0, got {horizon}")));
        }
        let mut r_lo = f64::INFINITY;
        let mut r_hi = 0.0f64;
        let mut bw = f64::INFINITY;
        let mut v_max = 0.0f64;
        let mut omega_max = 0.0f64;
        for s in supports {
            if !(s.hi > s.lo && s.lo >= 0.0) {
                return Err(Error::InvalidArgument(format!("bad support [{}, {}]", s.lo, s.hi)));
            }
            let lam = (2 * s.m + d1) as f64;
            r_lo = r_lo.min(s.lo);
            r_hi = r_hi.max(s.hi);
            bw = bw.min(s.hi - s.lo);
            v_max = v_max.max(sigma * lam.powf(sigma) * s.hi.powf(sigma - 1.0));
            omega_max = omega_max.max((lam * s.hi).powf(sigma));
        }
        let y_reach = 1.2 * v_max * horizon + res.tail_margin / bw;
        Ok(Self { d1, d2, sigma, horizon, r_lo, r_hi, bandwidth: bw, v_max, omega_max, y_reach, res })
    }

    /// Radial nodes needed on `[lo, hi]`.
    pub fn r_nodes(&self, lo: f64, hi: f64) -> usize {
        let osc = (hi - lo) * (self.y_reach + self.v_max * self.horizon);
        self.res.r_min_nodes + (self.res.r_per_radian * osc).ceil() as usize
    }

    pub fn n_times(&self) -> usize {
        if self.horizon == 0.0 {
            return 1;
        }
        (self.res.samples_per_period * self.omega_max * self.horizon / (2.0 * PI)).ceil() as usize + 1
    }

    pub fn grid(&self) -> SampleGrid {
        let (xi, wi) = gauss_hermite(self.res.x_nodes);
        let sx = (self.r_lo.max(self.r_hi / 8.0) * self.r_hi).sqrt();
        let (x_points, x_weights) = tensor_nodes(&xi, &wi, self.d1, sx);
        let wavelength = 2.0 * PI / self.r_hi;
        let panel = self.res.rho_panel_nodes as f64 * wavelength / self.res.rho_per_wavelength;
        let n_panels = (self.y_reach / panel).ceil().max(1.0) as usize;
        let width = self.y_reach / n_panels as f64;
        let area = sphere_area(self.d2);
        let mut rho = Vec::new();
        let mut rho_weights = Vec::new();
        for p in 0..n_panels {
            let (r, w) = gauss_legendre(self.res.rho_panel_nodes, p as f64 * width, (p + 1) as f64 * width);
            for (ri, wi) in r.into_iter().zip(w) {
                rho_weights.push(area * wi * ri.powi(self.d2 as i32 - 1));
                rho.push(ri);
            }
        }
        let nt = self.n_times();
        let times: Vec<f64> =
            (0..nt).map(|i| if nt == 1 { 0.0 } else { self.horizon * i as f64 / (nt - 1) as f64 }).collect();
        let time_weights = trapezoid_weights(nt, self.horizon);
        SampleGrid { x_points, x_weights, rho, rho_weights, times, time_weights }
    }
}

/// Quadrature nodes of one space-time experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    pub x_points: Vec<f64>,
    pub x_weights: Vec<f64>,
    pub rho: Vec<f64>,
    /// Includes the sphere area and `ρ^{d2-1}`.
    pub rho_weights: Vec<f64>,
    pub times: Vec<f64>,
    pub time_weights: Vec<f64>,
}

type Profile = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A radial profile for mode `(m, k)` supported in `[lo, hi]`.
#[derive(Clone)]
pub struct Piece {
    pub m: usize,
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub profile: Profile,
}

impl std::fmt::Debug for Piece {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Piece(m={}, k={}, [{}, {}])", self.m, self.k, self.lo, self.hi)
    }
}

impl Piece {
    pub fn new(m: usize, k: usize, lo: f64, hi: f64, profile: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { m, k, lo, hi, profile: Arc::new(profile) }
    }

    pub fn support(&self) -> Support {
        Support { m: self.m, lo: self.lo, hi: self.hi }
    }

    /// The piece of `u(λx, λ²y)`: support `λ²[lo, hi]`, profile `λ^{-2d2-d1/2} f(r/λ²)`.
    pub fn rescaled(&self, lambda: f64, d1: usize, d2: usize) -> Self {
        let l2 = lambda * lambda;
        let amp = lambda.powf(-2.0 * d2 as f64 - d1 as f64 / 2.0);
        let inner = self.profile.clone();
        Piece::new(self.m, self.k, self.lo * l2, self.hi * l2, move |r| inner(r / l2) * amp)
    }
}

/// Sample every piece at the node count the plan asks for.
pub fn realize(pieces: &[Piece], plan: &Plan, m_max: usize) -> Result<RadialField> {
    let mut f = RadialField::new(plan.d1, plan.d2, m_max)?;
    for p in pieces {
        let n = plan.r_nodes(p.lo, p.hi);
        let prof = p.profile.clone();
        f.add_profile(p.m, p.k, p.lo, p.hi, n, move |r| prof(r))?;
    }
    Ok(f)
}

struct Component {
    omega: Vec<f64>,
    coef: Vec<Complex64>,
    /// `h̃_α(x_i; r_l)` as `[i][l]`.
    h: Vec<f64>,
    /// `σ̂(ρ_j r_l)` as `[l][j]`.
    j: Vec<f64>,
}

/// Linear flow of each segment of a radial field, sampled on a [`SampleGrid`].
pub struct Evolver {
    n_x: usize,
    n_rho: usize,
    sign: f64,
    comps: Vec<Component>,
}

impl Evolver {
    pub fn new(field: &RadialField, grid: &SampleGrid, spec: &PropagatorSpec) -> Result<Self> {
        spec.validate(field.m_max)?;
        let d1 = field.d1;
        let d2 = field.d2;
        let n_x = grid.x_weights.len();
        let n_rho = grid.rho.len();
        let c = (2.0 * PI).powi(-(d2 as i32));
        let comps = field
            .segments
            .iter()
            .map(|seg| {
                let alpha = &field.table.alphas[seg.mode];
                let m = field.table.modes[seg.mode];
                let nr = seg.r.len();
                let top = alpha.iter().copied().max().unwrap_or(0);
                let mut buf = vec![0.0; top + 1];
                let mut h = vec![0.0; n_x * nr];
                for (i, x) in grid.x_points.chunks(d1).enumerate() {
                    for (l, &r) in seg.r.iter().enumerate() {
                        let mut v = r.powf(d1 as f64 / 4.0);
                        for (xj, &aj) in x.iter().zip(alpha) {
                            hermite_values(aj, r.sqrt() * xj, &mut buf);
                            v *= buf[aj];
                        }
                        h[i * nr + l] = v;
                    }
                }
                let j: Vec<f64> = crate::par::map_range(nr * n_rho, |p| {
                    let (l, jj) = (p / n_rho, p % n_rho);
                    sphere_fourier(d2, seg.r[l] * grid.rho[jj])
                });
                let coef = seg
                    .r
                    .iter()
                    .zip(&seg.w)
                    .zip(&seg.f)
                    .map(|((&r, &w), &f)| f * (c * w * r.powi(d2 as i32 - 1)))
                    .collect();
                let omega = seg.r.iter().map(|&r| spec.omega(m, r, d1)).collect();
                Component { omega, coef, h, j }
            })
            .collect();
        Ok(Self { n_x, n_rho, sign: spec.sign.factor(), comps })
    }

    pub fn n_components(&self) -> usize {
        self.comps.len()
    }

    /// Values `[x][ρ]` of every component at time `t`.
    pub fn slice(&self, t: f64) -> Vec<Vec<Complex64>> {
        self.comps.iter().map(|c| self.component_slice(c, t)).collect()
    }

    fn component_slice(&self, c: &Component, t: f64) -> Vec<Complex64> {
        let nr = c.coef.len();
        let (nx, nrho) = (self.n_x, self.n_rho);
        let z: Vec<Complex64> =
            c.coef.iter().zip(&c.omega).map(|(&a, &w)| a * Complex64::from_polar(1.0, self.sign * t * w)).collect();
        let mut a = vec![0.0; 2 * nx * nr];
        for i in 0..nx {
            let hrow = &c.h[i * nr..(i + 1) * nr];
            let (re, im) = a.split_at_mut(nx * nr);
            let re = &mut re[i * nr..(i + 1) * nr];
            let im = &mut im[i * nr..(i + 1) * nr];
            for l in 0..nr {
                re[l] = hrow[l] * z[l].re;
                im[l] = hrow[l] * z[l].im;
            }
        }
        let mut out = vec![0.0; 2 * nx * nrho];
        // SAFETY: all three buffers are dense row-major with the stated shapes
        unsafe {
            matrixmultiply::dgemm(
                2 * nx,
                nr,
                nrho,
                1.0,
                a.as_ptr(),
                nr as isize,
                1,
                c.j.as_ptr(),
                nrho as isize,
                1,
                0.0,
                out.as_mut_ptr(),
                nrho as isize,
                1,
            );
        }
        let (re, im) = out.split_at(nx * nrho);
        re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect()
    }
}

/// Mixed norms `[sample][spec]` of `Σ_c g[sample][c] U_c(t)` over the grid's time nodes.
pub fn sample_norms(ev: &Evolver, grid: &SampleGrid, combos: &[Vec<Complex64>], specs: &[MixedNormSpec]) -> Result<Vec<Vec<f64>>> {
    for g in combos {
        if g.len() != ev.n_components() {
            return Err(Error::LengthMismatch { expected: ev.n_components(), got: g.len() });
        }
    }
    let per_slice: Vec<Vec<Vec<f64>>> = crate::par::map_slice(&grid.times, |&t| {
        let comps = ev.slice(t);
        let mut vals = vec![Complex64::new(0.0, 0.0); ev.n_x * ev.n_rho];
        combos
            .iter()
            .map(|g| {
                vals.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                for (gc, comp) in g.iter().zip(&comps) {
                    for (v, u) in vals.iter_mut().zip(comp) {
                        *v += gc * u;
                    }
                }
                let s = Slice { values: &vals, x_weights: &grid.x_weights, y_weights: &grid.rho_weights };
                specs.iter().map(|sp| slice_norm(&s, sp.q, sp.r)).collect()
            })
            .collect()
    });
    (0..combos.len())
        .map(|s| {
            specs
                .iter()
                .enumerate()
                .map(|(k, sp)| {
                    let series: Vec<f64> = per_slice.iter().map(|row| row[s][k]).collect();
                    time_norm(&series, &grid.time_weights, sp.p)
                })
                .collect()
        })
        .collect()
}

/// `Σ_c g_c · segment_c`, merging segments that share mode and nodes.
pub fn combine(field: &RadialField, g: &[Complex64]) -> RadialField {
    let mut out = RadialField { segments: Vec::new(), ..field.clone() };
    for (seg, &gc) in field.segments.iter().zip(g) {
        if let Some(s) = out.segments.iter_mut().find(|s| s.mode == seg.mode && s.r == seg.r) {
            for (a, b) in s.f.iter_mut().zip(&seg.f) {
                *a += gc * b;
            }
        } else {
            out.segments.push(RadialSegment { f: seg.f.iter().map(|v| v * gc).collect(), ..seg.clone() });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    /// `(1 + (2m+d1)|η|)^s`.
    Inhomogeneous,
    /// `((2m+d1)|η|)^s`.
    Homogeneous,
}

pub fn weighted_norm<F: EtaMultiplier>(u: &F, s: f64, weight: Weight) -> f64 {
    match weight {
        Weight::Inhomogeneous => u.sobolev_norm(s),
        Weight::Homogeneous => u.homogeneous_sobolev_norm(s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quotient {
    pub numerator: f64,
    pub denominator: f64,
    pub quotient: f64,
}

fn mixed_spec(t: &AdmissibleTriple) -> MixedNormSpec {
    MixedNormSpec { p: t.p, q: t.q, r: t.r }
}

/// `‖e^{±it(-Δ_G)^σ} u0‖_{L^p_T L^q_x L^r_y} / ‖u0‖_{H^{γ+ε}}` for radial pieces.
pub fn strichartz_quotient(pieces: &[Piece], triple: &AdmissibleTriple, epsilon: f64, horizon: f64, weight: Weight, res: Resolution) -> Result<Quotient> {
    let supports: Vec<Support> = pieces.iter().map(Piece::support).collect();
    let plan = Plan::new(&supports, triple.d1, triple.d2, triple.sigma, horizon, res)?;
    let m_max = pieces.iter().map(|p| p.m).max().unwrap_or(0);
    let field = realize(pieces, &plan, m_max)?;
    let den = weighted_norm(&field, triple.gamma() + epsilon, weight);
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator("Sobolev norm of the datum vanishes".into()));
    }
    let grid = plan.grid();
    let spec = PropagatorSpec::new(triple.sigma, 0.0).with_sign(flow_sign(triple.sigma));
    let ev = Evolver::new(&field, &grid, &spec)?;
    let ones = vec![vec![Complex64::new(1.0, 0.0); ev.n_components()]];
    let num = sample_norms(&ev, &grid, &ones, &[mixed_spec(triple)])?[0][0];
    let q = num / den;
    if !q.is_finite() {
        return Err(Error::Overflow("Strichartz quotient".into()));
    }
    Ok(Quotient { numerator: num, denominator: den, quotient: q })
}

/// One piece per Hermite mode `(m, k)` with `m ≤ m_cap`, profile the block-`A` window.
pub fn block_pieces(a: u64, m_cap: usize, d1: usize) -> Vec<Piece> {
    let cut = DyadicCutoff::default();
    let mut out = Vec::new();
    for m in 0..=m_cap {
        let w = BlockWindow::new(m, a, d1);
        let (lo, hi) = w.support(&cut);
        if !(hi > lo) {
            continue;
        }
        for k in 0..crate::hermite_basis::multiplicity(d1, m) {
            let w = w.clone();
            out.push(Piece::new(m, k, lo, hi, move |r| Complex64::new(w.weight(&cut, r), 0.0)));
        }
    }
    out
}

/// Independent stream for `(block, sample)` under one seed.
pub fn sample_rng(seed: u64, block: u64, sample: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((block << 32) | sample);
    rng
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub d1: usize,
    pub d2: usize,
    pub sigma: f64,
    pub p: Exponent,
    pub q: Exponent,
    pub r: Exponent,
    pub epsilon: f64,
    /// Loss exponents whose block spread is also reported.
    pub sensitivity: Vec<f64>,
    /// Blocks `A = 2^0 … 2^{a_exp_max}`.
    pub a_exp_max: u32,
    pub samples: usize,
    pub m_cap: usize,
    pub horizon: f64,
    /// The negative control lowers the Sobolev exponent by this much.
    pub control_shift: f64,
    pub max_min_bound: f64,
    pub control_min_slope: f64,
    pub resolution: Resolution,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            d1: 1,
            d2: 2,
            sigma: 1.0,
            p: Exponent::Finite(6.0),
            q: Exponent::Finite(2.0),
            r: Exponent::Finite(6.0),
            epsilon: 0.1,
            sensitivity: vec![0.05, 0.1, 0.2],
            a_exp_max: 8,
            samples: 32,
            m_cap: 1,
            horizon: 1.0 / 16.0,
            control_shift: 0.5,
            max_min_bound: 10.0,
            control_min_slope: 0.2,
            resolution: Resolution::default(),
        }
    }
}

impl ScanConfig {
    pub fn triple(&self) -> AdmissibleTriple {
        AdmissibleTriple { p: self.p, q: self.q, r: self.r, sigma: self.sigma, d1: self.d1, d2: self.d2, case: Case::Euclidean }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.triple();
        let diag = t.is_admissible();
        if !diag.admissible {
            return Err(Error::Inadmissible(diag.reason));
        }
        if self.samples == 0 {
            return Err(Error::InvalidArgument("samples must be at least 1".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        if self.d2 > 3 {
            return Err(Error::InvalidArgument("radial data support d2 ≤ 3".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub a: u64,
    pub m: usize,
    pub sample: usize,
    pub quotient: f64,
    pub constant: f64,
    pub ratio: f64,
    pub control: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSummary {
    pub a: u64,
    pub sup_quotient: f64,
    pub sup_control: f64,
    pub sup_ratio: f64,
    /// Sup quotient for each sensitivity exponent.
    pub sup_sensitivity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub gamma: f64,
    pub rows: Vec<ScanRow>,
    pub blocks: Vec<BlockSummary>,
    pub max_min: f64,
    pub control_slope: f64,
    pub sensitivity: Vec<(f64, f64)>,
    pub bounded: bool,
    pub control_grows: bool,
}

fn spread(v: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = v.fold((f64::INFINITY, 0.0f64), |(l, h), x| (l.min(x), h.max(x)));
    hi / lo
}

/// Per-block sup quotients for random block data, with the negative control.
pub fn strichartz_scan(cfg: &ScanConfig, seed: u64) -> Result<ScanReport> {
    cfg.validate()?;
    let triple = cfg.triple();
    let g = triple.gamma();
    let spec = PropagatorSpec::new(cfg.sigma, 0.0).with_sign(flow_sign(cfg.sigma));
    let mut rows = Vec::new();
    let mut blocks = Vec::new();
    for (bi, e) in (0..=cfg.a_exp_max).enumerate() {
        let a = 1u64 << e;
        let pieces = block_pieces(a, cfg.m_cap, cfg.d1);
        let supports: Vec<Support> = pieces.iter().map(Piece::support).collect();
        let plan = Plan::new(&supports, cfg.d1, cfg.d2, cfg.sigma, cfg.horizon, cfg.resolution)?;
        let field = realize(&pieces, &plan, cfg.m_cap)?;
        let grid = plan.grid();
        let ev = Evolver::new(&field, &grid, &spec)?;
        let combos: Vec<Vec<Complex64>> = (0..cfg.samples)
            .map(|s| {
                let mut rng = sample_rng(seed, bi as u64, s as u64);
                (0..ev.n_components()).map(|_| complex_gaussian(&mut rng)).collect()
            })
            .collect();
        let nums = sample_norms(&ev, &grid, &combos, &[mixed_spec(&triple)])?;
        let constant = (a as f64).powf(g / 2.0 + cfg.epsilon / 4.0);
        let mut summary = BlockSummary {
            a,
            sup_quotient: 0.0,
            sup_control: 0.0,
            sup_ratio: 0.0,
            sup_sensitivity: vec![0.0; cfg.sensitivity.len()],
        };
        for (s, (gvec, num)) in combos.iter().zip(&nums).enumerate() {
            let u = combine(&field, gvec);
            let num = num[0];
            let den = u.sobolev_norm(g + cfg.epsilon);
            let den_c = u.sobolev_norm(g + cfg.epsilon - cfg.control_shift);
            if !(den > 0.0) {
                return Err(Error::ZeroDenominator(format!("block {a} sample {s}")));
            }
            let row = ScanRow {
                a,
                m: cfg.m_cap,
                sample: s,
                quotient: num / den,
                constant,
                ratio: num / (constant * u.l2_norm()),
                control: num / den_c,
            };
            summary.sup_quotient = summary.sup_quotient.max(row.quotient);
            summary.sup_control = summary.sup_control.max(row.control);
            summary.sup_ratio = summary.sup_ratio.max(row.ratio);
            for (slot, &eps) in summary.sup_sensitivity.iter_mut().zip(&cfg.sensitivity) {
                *slot = slot.max(num / u.sobolev_norm(g + eps));
            }
            rows.push(row);
        }
        blocks.push(summary);
    }
    let max_min = spread(blocks.iter().map(|b| b.sup_quotient));
    let (lx, ly): (Vec<f64>, Vec<f64>) = blocks.iter().map(|b| ((b.a as f64).ln(), b.sup_control.ln())).unzip();
    let control_slope = if blocks.len() > 1 { least_squares(&lx, &ly).0 } else { 0.0 };
    let sensitivity = cfg
        .sensitivity
        .iter()
        .enumerate()
        .map(|(k, &eps)| (eps, spread(blocks.iter().map(|b| b.sup_sensitivity[k]))))
        .collect();
    Ok(ScanReport {
        gamma: g,
        rows,
        blocks,
        max_min,
        control_slope,
        sensitivity,
        bounded: max_min <= cfg.max_min_bound,
        control_grows: control_slope >= cfg.control_min_slope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub d1: usize,
    pub d2: usize,
    pub sigma: f64,
    pub p: Exponent,
    pub q: Exponent,
    pub r: Exponent,
    pub epsilon: f64,
    pub lambdas: Vec<f64>,
    pub horizon: f64,
    /// Hermite mode of the base datum `χ(|η|) h̃_m`.
    pub m: usize,
    pub tolerance: f64,
    pub resolution: Resolution,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            d1: 1,
            d2: 2,
            sigma: 1.0,
            p: Exponent::Finite(6.0),
            q: Exponent::Finite(2.0),
            r: Exponent::Finite(6.0),
            epsilon: 0.0,
            lambdas: vec![2.0, 4.0],
            horizon: 2.0,
            m: 0,
            tolerance: 0.1,
            resolution: Resolution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub lambda: f64,
    pub quotient: f64,
    pub quotient_scaled: f64,
    pub rel_diff: f64,
    pub broken: f64,
    pub broken_scaled: f64,
    pub observed_factor: f64,
    pub predicted_factor: f64,
    pub factor_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub invariant: bool,
    pub control_matches: bool,
}

fn is_power_of_two(l: f64) -> bool {
    l > 0.0 && l.log2().fract() == 0.0
}

/// Homogeneous quotient and broken-scaling quotient (`p → p+1`) of one datum.
fn scaling_quotients(pieces: &[Piece], triple: &AdmissibleTriple, broken_p: Exponent, s: f64, horizon: f64, res: Resolution) -> Result<(f64, f64)> {
    let supports: Vec<Support> = pieces.iter().map(Piece::support).collect();
    let plan = Plan::new(&supports, triple.d1, triple.d2, triple.sigma, horizon, res)?;
    let m_max = pieces.iter().map(|p| p.m).max().unwrap_or(0);
    let field = realize(pieces, &plan, m_max)?;
    let den = field.homogeneous_sobolev_norm(s);
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator("homogeneous norm of the datum vanishes".into()));
    }
    let grid = plan.grid();
    let spec = PropagatorSpec::new(triple.sigma, 0.0).with_sign(flow_sign(triple.sigma));
    let ev = Evolver::new(&field, &grid, &spec)?;
    let ones = vec![vec![Complex64::new(1.0, 0.0); ev.n_components()]];
    let specs = [mixed_spec(triple), MixedNormSpec { p: broken_p, ..mixed_spec(triple) }];
    let n = &sample_norms(&ev, &grid, &ones, &specs)?[0];
    Ok((n[0] / den, n[1] / den))
}

/// Compare quotients of `u0` and `u0(λx, λ²y)` over the same horizon.
pub fn scaling_check(cfg: &ScalingConfig) -> Result<ScalingReport> {
    let triple =
        AdmissibleTriple { p: cfg.p, q: cfg.q, r: cfg.r, sigma: cfg.sigma, d1: cfg.d1, d2: cfg.d2, case: Case::Euclidean };
    let diag = triple.is_admissible();
    if !diag.admissible {
        return Err(Error::Inadmissible(diag.reason));
    }
    let Exponent::Finite(p) = cfg.p else {
        return Err(Error::InvalidArgument("the broken-scaling control needs finite p".into()));
    };
    for &l in &cfg.lambdas {
        if !is_power_of_two(l) {
            return Err(Error::InvalidArgument(format!("λ = {l} is not a power of two")));
        }
    }
    let cut = DyadicCutoff::default();
    let (lo, hi) = cut.support();
    let base = Piece::new(cfg.m, 0, lo, hi, move |r| Complex64::new(cut.chi(r), 0.0));
    let s = triple.gamma() + cfg.epsilon;
    let broken_p = Exponent::Finite(p + 1.0);
    let (q0, b0) = scaling_quotients(std::slice::from_ref(&base), &triple, broken_p, s, cfg.horizon, cfg.resolution)?;
    let mut rows = Vec::new();
    for &l in &cfg.lambdas {
        let piece = base.rescaled(l, cfg.d1, cfg.d2);
        let (ql, bl) = scaling_quotients(&[piece], &triple, broken_p, s, cfg.horizon, cfg.resolution)?;
        let predicted = l.powf(2.0 * cfg.sigma * (1.0 / p - 1.0 / (p + 1.0)));
        let observed = bl / b0;
        rows.push(ScalingRow {
            lambda: l,
            quotient: q0,
            quotient_scaled: ql,
            rel_diff: (ql / q0 - 1.0).abs(),
            broken: b0,
            broken_scaled: bl,
            observed_factor: observed,
            predicted_factor: predicted,
            factor_rel_err: (observed / predicted - 1.0).abs(),
        });
    }
    let invariant = rows.iter().all(|r| r.rel_diff <= cfg.tolerance);
    let control_matches = rows.iter().all(|r| r.factor_rel_err <= cfg.tolerance);
    Ok(ScalingReport { rows, invariant, control_matches })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    /// Concentration parameter of the datum.
    pub n: f64,
    pub horizon: f64,
    /// Side of the periodic `y` box.
    pub side: f64,
    /// Frequencies kept: `0 < η ≤ eta_max`.
    pub eta_max: f64,
    pub n_x: usize,
    pub times: usize,
    pub tolerance: f64,
    pub drift_tolerance: f64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            n: 8.0,
            horizon: 1.0,
            side: 4.0 * PI,
            eta_max: 600.0,
            n_x: 128,
            times: 11,
            tolerance: 1e-3,
            drift_tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleRow {
    pub t: f64,
    /// `‖u(t) - u0(·, · - t)‖ / ‖u0‖`.
    pub translation_defect: f64,
    pub l4_ratio: f64,
    pub linf_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub rows: Vec<CounterexampleRow>,
    pub max_defect: f64,
    pub l4_drift: f64,
    pub linf_drift: f64,
    /// Relative distance between the lattice datum and the closed form on the box.
    pub continuum_defect: f64,
    pub passed: bool,
    pub verdict: String,
}

/// `u0 = N^{-1/2} ∫_0^∞ e^{iyη - ηx²/2 - η/N²} dη` on the lattice, mode 0 only.
pub fn counterexample_datum(cfg: &CounterexampleConfig) -> Result<SpectralField> {
    let dk = 2.0 * PI / cfg.side;
    let k_max = (cfg.eta_max / dk).ceil() as usize;
    let geom = Geometry::euclidean_box(1, 1, cfg.side, k_max)?;
    let mut u = SpectralField::zeros(geom, 0);
    // e^{-ηx²/2} = π^{1/4} η^{-1/4} h̃_0(x; η), and dη ≈ dk on the lattice
    let pre = cfg.side.sqrt() * dk * cfg.n.powf(-0.5) * PI.powf(0.25);
    for k in 1..=k_max as i64 {
        let eta = dk * k as f64;
        u.set(0, 0, &[k], Complex64::new(pre * eta.powf(-0.25) * (-eta / (cfg.n * cfg.n)).exp(), 0.0))?;
    }
    u.label = format!("traveling datum N = {}", cfg.n);
    Ok(u)
}

/// Evolve the traveling datum under `e^{itΔ_G}` and compare with its `y`-translate.
pub fn counterexample_d2_1(cfg: &CounterexampleConfig) -> Result<CounterexampleReport> {
    if !(cfg.n >= 2.0) {
        return Err(Error::InvalidArgument(format!("N must be at least 2, got {}", cfg.n)));
    }
    if cfg.horizon > cfg.side / 4.0 {
        return Err(Error::WrapAround(format!(
            "horizon {} exceeds a quarter of the box side {}; the translate would wrap",
            cfg.horizon, cfg.side
        )));
    }
    if cfg.times < 2 {
        return Err(Error::InvalidArgument("need at least two time samples".into()));
    }
    let u0 = counterexample_datum(cfg)?;
    let geom = u0.geometry.clone();
    let n_y = 4 * geom.k_max;
    let x_scale = (geom.dk() * cfg.eta_max).sqrt();
    let grid = FieldGrid::new(geom, 0, cfg.n_x, x_scale, n_y)?;
    let norm0 = u0.l2_norm_sqr().sqrt();
    let v0 = grid.synthesize(&u0)?;
    let l4_0 = grid.grid_lp_norm(&v0, 4.0);
    let linf_0 = grid.grid_lp_norm(&v0, f64::INFINITY);

    // lattice datum against the closed form, y taken in [-L/2, L/2)
    let continuum_defect = {
        let ny = grid.n_points_y();
        let mut diff = v0.clone();
        for (p, row) in diff.chunks_mut(ny).enumerate() {
            let x = grid.x_points[p];
            for (q, v) in row.iter_mut().enumerate() {
                let mut y = grid.y_point(q)[0];
                if y >= cfg.side / 2.0 {
                    y -= cfg.side;
                }
                let exact = Complex64::new(cfg.n.powf(-0.5), 0.0) / Complex64::new(x * x / 2.0 + 1.0 / (cfg.n * cfg.n), -y);
                *v -= exact;
            }
        }
        grid.grid_l2_norm(&diff) / grid.grid_l2_norm(&v0)
    };

    let times: Vec<f64> = (0..cfg.times).map(|i| cfg.horizon * i as f64 / (cfg.times - 1) as f64).collect();
    let rows = times
        .iter()
        .map(|&t| {
            let ut = evolve(&u0, &PropagatorSpec::new(1.0, t))?;
            let shifted = u0.translate_y(&[t]);
            let a = grid.synthesize(&ut)?;
            let b = grid.synthesize(&shifted)?;
            let diff: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            Ok(CounterexampleRow {
                t,
                translation_defect: grid.grid_l2_norm(&diff) / norm0,
                l4_ratio: grid.grid_lp_norm(&a, 4.0) / l4_0,
                linf_ratio: grid.grid_lp_norm(&a, f64::INFINITY) / linf_0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_defect = rows.iter().map(|r| r.translation_defect).fold(0.0, f64::max);
    let drift = |f: fn(&CounterexampleRow) -> f64| rows.iter().map(|r| (f(r) - 1.0).abs()).fold(0.0, f64::max);
    let l4_drift = drift(|r| r.l4_ratio);
    let linf_drift = drift(|r| r.linf_ratio);
    let passed = max_defect <= cfg.tolerance && l4_drift <= cfg.drift_tolerance;
    let verdict = if passed { "non-dispersive confirmed" } else { "translation identity violated" }.to_string();
    Ok(CounterexampleReport { rows, max_defect, l4_drift, linf_drift, continuum_defect, passed, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModewiseConfig {
    pub d1: usize,
    pub d2: usize,
    pub sigma: f64,
    pub p: Exponent,
    pub q: Exponent,
    pub r: Exponent,
    pub case: Case,
    pub a: u64,
    pub modes: Vec<usize>,
    pub samples: usize,
    /// Wave packets superposed in each random datum.
    pub packets: usize,
    pub epsilon: f64,
    /// Euclidean horizon; the compact case uses `c/((m+1)A^{σ-1})` instead.
    pub horizon: f64,
    pub window_c: f64,
    /// Lattice half-width for the compact case.
    pub k_max: usize,
    pub max_min_bound: f64,
    pub resolution: Resolution,
}

impl Default for ModewiseConfig {
    fn default() -> Self {
        Self {
            d1: 1,
            d2: 2,
            sigma: 1.0,
            p: Exponent::Finite(6.0),
            q: Exponent::Finite(2.0),
            r: Exponent::Finite(6.0),
            case: Case::Euclidean,
            a: 32,
            modes: (0..=16).collect(),
            samples: 8,
            packets: 4,
            epsilon: 0.0,
            horizon: 1.0,
            window_c: 1.0,
            k_max: 8,
            max_min_bound: 10.0,
            resolution: Resolution::default(),
        }
    }
}

impl ModewiseConfig {
    pub fn triple(&self) -> AdmissibleTriple {
        AdmissibleTriple { p: self.p, q: self.q, r: self.r, sigma: self.sigma, d1: self.d1, d2: self.d2, case: self.case }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModewiseRow {
    pub a: u64,
    pub m: usize,
    pub scale: f64,
    pub sample: usize,
    pub quotient: f64,
    pub constant: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub m: usize,
    pub horizon: f64,
    pub sup_ratio: f64,
    /// Slope of the running sup against the sample count on log axes.
    pub growth_slope: f64,
    pub growing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModewiseReport {
    pub rows: Vec<ModewiseRow>,
    pub modes: Vec<ModeSummary>,
    pub max_min: f64,
    pub bounded: bool,
}

/// Running-sup slope above which a mode is flagged as still growing with the sample count.
pub const GROWTH_FLAG: f64 = 0.2;

/// Dyadic `I` with `A ≤ 1 + (2m+d1)I < 2A` (the smallest one if several qualify).
pub fn block_scale(m: usize, a: u64, d1: usize) -> f64 {
    let w = BlockWindow::new(m, a, d1);
    match (w.exponents.first(), w.low_pass_top) {
        (Some(&j), _) => 2f64.powi(j),
        (None, Some(j)) => 2f64.powi(j),
        _ => unreachable!("every block has a scale"),
    }
}

fn growth_slope(values: &[f64]) -> f64 {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut n = 1;
    while n <= values.len() {
        xs.push((n as f64).ln());
        ys.push(values[..n].iter().copied().fold(0.0, f64::max).ln());
        n *= 2;
    }
    if xs.len() < 2 {
        0.0
    } else {
        least_squares(&xs, &ys).0
    }
}

/// Single-mode quotients against `C'(A, m) ‖⟨∂_x⟩^{(d1+ε)(1/2-1/q)} u_m‖`.
pub fn modewise_strichartz_check(cfg: &ModewiseConfig, seed: u64) -> Result<ModewiseReport> {
    let triple = cfg.triple();
    let diag = triple.is_admissible();
    if !diag.admissible {
        return Err(Error::Inadmissible(diag.reason));
    }
    if cfg.samples == 0 || cfg.packets == 0 || cfg.modes.is_empty() {
        return Err(Error::InvalidArgument("need samples, packets and modes".into()));
    }
    let s_x = (cfg.d1 as f64 + cfg.epsilon) * (0.5 - cfg.q.recip());
    let spec_norm = mixed_spec(&triple);
    let mut rows = Vec::new();
    let mut modes = Vec::new();
    for (mi, &m) in cfg.modes.iter().enumerate() {
        let scale = block_scale(m, cfg.a, cfg.d1);
        let constant = modewise_constant_prime(cfg.a as f64, m, &triple);
        let flow = PropagatorSpec::new(cfg.sigma, 0.0).with_sign(flow_sign(cfg.sigma)).modewise(m);
        let (quotients, horizon) = match cfg.case {
            Case::Euclidean => {
                let cut = DyadicCutoff::default();
                let (lo, hi) = cut.support();
                // packets centred at radii spread over a few wavelengths
                let pieces: Vec<Piece> = (0..cfg.packets)
                    .map(|j| {
                        let c = 4.0 * j as f64 / scale;
                        Piece::new(m, 0, lo * scale, hi * scale, move |r| {
                            Complex64::from_polar(cut.chi(r / scale), -r * c)
                        })
                    })
                    .collect();
                let supports: Vec<Support> = pieces.iter().map(Piece::support).collect();
                let plan = Plan::new(&supports, cfg.d1, cfg.d2, cfg.sigma, cfg.horizon, cfg.resolution)?;
                let field = realize(&pieces, &plan, m)?;
                let grid = plan.grid();
                let ev = Evolver::new(&field, &grid, &flow)?;
                let combos: Vec<Vec<Complex64>> = (0..cfg.samples)
                    .map(|s| {
                        let mut rng = sample_rng(seed, mi as u64, s as u64);
                        (0..ev.n_components()).map(|_| complex_gaussian(&mut rng)).collect()
                    })
                    .collect();
                let nums = sample_norms(&ev, &grid, &combos, &[spec_norm])?;
                let qs = combos
                    .iter()
                    .zip(&nums)
                    .map(|(g, n)| {
                        let u = combine(&field, g);
                        let den = u.x_sobolev_norm(s_x, 4 * (m + 1) + 40);
                        n[0] / den
                    })
                    .collect::<Vec<_>>();
                (qs, cfg.horizon)
            }
            Case::Compact => {
                let horizon = modewise_timescale(m, cfg.a as f64, cfg.sigma, cfg.window_c);
                let geom = Geometry::torus(cfg.d1, cfg.d2, cfg.k_max)?;
                let grid = FieldGrid::auto(geom.clone(), m, 2 * cfg.k_max + 2)?;
                let cut = DyadicCutoff::default();
                let qs = (0..cfg.samples)
                    .map(|s| {
                        let mut rng = sample_rng(seed, mi as u64, s as u64);
                        let u = SpectralField::random(geom.clone(), m, m, cfg.k_max, &mut rng)
                            .project_mode(m)
                            .apply_cutoff(m, scale, &cut);
                        let den = u.x_sobolev_norm(s_x, 4 * (m + 1) + 40);
                        if !(den > 0.0) {
                            return Err(Error::ZeroDenominator(format!("mode {m} datum has no lattice support at I = {scale}")));
                        }
                        let num = lattice_mixed_norm(&u, &grid, &spec_norm, &flow, 0.0, horizon, cfg.resolution.samples_per_period)?;
                        Ok(num / den)
                    })
                    .collect::<Result<Vec<_>>>()?;
                (qs, horizon)
            }
        };
        let ratios: Vec<f64> = quotients.iter().map(|q| q / constant).collect();
        for (s, (&q, &r)) in quotients.iter().zip(&ratios).enumerate() {
            rows.push(ModewiseRow { a: cfg.a, m, scale, sample: s, quotient: q, constant, ratio: r });
        }
        let slope = growth_slope(&ratios);
        modes.push(ModeSummary {
            m,
            horizon,
            sup_ratio: ratios.iter().copied().fold(0.0, f64::max),
            growth_slope: slope,
            growing: slope > GROWTH_FLAG,
        });
    }
    let max_min = spread(modes.iter().map(|m| m.sup_ratio));
    Ok(ModewiseReport { rows, modes, max_min, bounded: max_min <= cfg.max_min_bound })
}

/// `‖e^{flow} u‖_{L^p_{[t0, t1]} L^q_x L^r_y}` for a lattice field, sampled on the grid.
pub fn lattice_mixed_norm(
    u: &SpectralField,
    grid: &FieldGrid,
    spec: &MixedNormSpec,
    flow: &PropagatorSpec,
    t0: f64,
    t1: f64,
    samples_per_period: f64,
) -> Result<f64> {
    let d1 = u.geometry.d1;
    let mut omega_max = 0.0f64;
    for j in 0..u.geometry.n_fibers() {
        for i in 0..u.n_modes() {
            if u.coeffs[u.index(j, i)].norm_sqr() > 0.0 {
                omega_max = omega_max.max(flow.omega(u.table.modes[i], u.geometry.eta_norm(j), d1));
            }
        }
    }
    let span = t1 - t0;
    let nt = if span == 0.0 { 1 } else { (samples_per_period * omega_max * span / (2.0 * PI)).ceil() as usize + 2 };
    let tw = trapezoid_weights(nt, span);
    let yw = vec![grid.y_cell(); grid.n_points_y()];
    let per = (0..nt)
        .map(|i| {
            let t = if nt == 1 { t0 } else { t0 + span * i as f64 / (nt - 1) as f64 };
            let v = grid.synthesize(&evolve(u, &flow.at(t))?)?;
            Ok(slice_norm(&Slice { values: &v, x_weights: &grid.x_weights, y_weights: &yw }, spec.q, spec.r))
        })
        .collect::<Result<Vec<f64>>>()?;
    time_norm(&per, &tw, spec.p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GluingReport {
    pub windows: usize,
    pub window_norms: Vec<f64>,
    pub full: f64,
    /// `(Σ_i ‖u‖^p_{window i})^{1/p}`.
    pub glued: f64,
    pub triangle_bound: f64,
    pub glue_rel_err: f64,
    pub within_bound: bool,
}

/// Split `[0, total]` into windows of length `window` and compare the glued norm with the full one.
pub fn glue_windows(u: &SpectralField, grid: &FieldGrid, spec: &MixedNormSpec, flow: &PropagatorSpec, total: f64, window: f64, samples_per_period: f64) -> Result<GluingReport> {
    let Exponent::Finite(p) = spec.p else {
        return Err(Error::InvalidArgument("gluing needs finite p".into()));
    };
    let windows = (total / window).ceil() as usize;
    let full = lattice_mixed_norm(u, grid, spec, flow, 0.0, total, samples_per_period)?;
    let window_norms = (0..windows)
        .map(|i| {
            let t0 = i as f64 * window;
            let t1 = (t0 + window).min(total);
            lattice_mixed_norm(u, grid, spec, flow, t0, t1, samples_per_period)
        })
        .collect::<Result<Vec<f64>>>()?;
    let glued = window_norms.iter().map(|w| w.powf(p)).sum::<f64>().powf(1.0 / p);
    let triangle_bound: f64 = window_norms.iter().sum();
    let glue_rel_err = (glued / full - 1.0).abs();
    Ok(GluingReport {
        windows,
        window_norms,
        full,
        glued,
        triangle_bound,
        glue_rel_err,
        within_bound: full <= triangle_bound * (1.0 + 1e-12),
    })
}

/// `A^{(d1/2)(1/2-1/q)}`, the x-weight bound on block `A`.
pub fn x_weight_bound(a: f64, d1: usize, q: Exponent) -> f64 {
    a.powf(d1 as f64 / 2.0 * (0.5 - q.recip()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(p: f64, q: f64, r: f64) -> AdmissibleTriple {
        AdmissibleTriple::new(p, q, r, 1.0, 1, 2, Case::Euclidean)
    }

    #[test]
    fn energy_triple_quotient_is_at_most_one() {
        let t = triple(f64::INFINITY, 2.0, 2.0);
        let res = Resolution { tail_margin: 400.0, ..Resolution::default() };
        for a in [1u64, 4, 16] {
            let pieces = block_pieces(a, 1, 1);
            let q = strichartz_quotient(&pieces, &t, 0.0, 0.25, Weight::Inhomogeneous, res).unwrap();
            assert!(q.quotient <= 1.0 + 1e-8, "A={a}: {}", q.quotient);
            // equality up to quadrature: γ = 0 and the flow is unitary, but the weight (1+λ)^0 = 1
            assert!(q.quotient > 0.999, "A={a}: {}", q.quotient);
        }
    }

    #[test]
    fn slice_at_zero_matches_direct_sampling() {
        let pieces = block_pieces(2, 1, 1);
        let supports: Vec<Support> = pieces.iter().map(Piece::support).collect();
        let plan = Plan::new(&supports, 1, 2, 1.0, 0.1, Resolution::default()).unwrap();
        let field = realize(&pieces, &plan, 1).unwrap();
        let grid = plan.grid();
        let ev = Evolver::new(&field, &grid, &PropagatorSpec::new(1.0, 0.0)).unwrap();
        let comps = ev.slice(0.0);
        let total: Vec<Complex64> =
            (0..comps[0].len()).map(|i| comps.iter().map(|c| c[i]).sum::<Complex64>()).collect();
        let rho: Vec<f64> = grid.rho.iter().step_by(37).copied().collect();
        let direct = field.sample(&grid.x_points, &rho);
        for (p, _) in grid.x_points.iter().enumerate().step_by(7) {
            for (jj, j) in (0..grid.rho.len()).step_by(37).enumerate() {
                let a = total[p * grid.rho.len() + j];
                let b = direct[p * rho.len() + jj];
                assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()), "{a} {b}");
            }
        }
    }

    #[test]
    fn evolved_slice_is_the_evolved_field() {
        let pieces = block_pieces(4, 1, 1);
        let supports: Vec<Support> = pieces.iter().map(Piece::support).collect();
        let plan = Plan::new(&supports, 1, 2, 1.0, 0.2, Resolution::default()).unwrap();
        let field = realize(&pieces, &plan, 1).unwrap();
        let grid = plan.grid();
        let spec = PropagatorSpec::new(1.0, 0.0);
        let ev = Evolver::new(&field, &grid, &spec).unwrap();
        let t = 0.17;
        let comps = ev.slice(t);
        let moved = evolve(&field, &spec.at(t)).unwrap();
        let rho = [0.0, 0.3, 1.7];
        let direct = moved.sample(&grid.x_points, &rho);
        let ev0 = Evolver::new(&moved, &SampleGrid { rho: rho.to_vec(), rho_weights: vec![1.0; 3], ..grid.clone() }, &spec).unwrap();
        let again = ev0.slice(0.0);
        for i in 0..direct.len() {
            let a: Complex64 = again.iter().map(|c| c[i]).sum();
            assert!((a - direct[i]).norm() < 1e-12 * (1.0 + a.norm()));
        }
        assert_eq!(comps.len(), 2);
    }

    #[test]
    fn zero_datum_rejected() {
        let t = triple(6.0, 2.0, 6.0);
        let zero = Piece::new(0, 0, 0.625, 2.0, |_| Complex64::new(0.0, 0.0));
        let e = strichartz_quotient(&[zero], &t, 0.1, 0.1, Weight::Inhomogeneous, Resolution::default()).unwrap_err();
        assert!(matches!(e, Error::ZeroDenominator(_)));
        assert!(matches!(strichartz_quotient(&[], &t, 0.1, 0.1, Weight::Inhomogeneous, Resolution::default()), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn rescaled_piece_matches_exact_rescaling() {
        let cut = DyadicCutoff::default();
        let base = Piece::new(1, 0, 0.625, 2.0, move |r| Complex64::new(cut.chi(r), 0.0));
        let mut f = RadialField::new(1, 2, 1).unwrap();
        f.add_profile(1, 0, 0.625, 2.0, 50, |r| (base.profile)(r)).unwrap();
        let exact = f.rescale(2.0);
        let sc = base.rescaled(2.0, 1, 2);
        let mut g = RadialField::new(1, 2, 1).unwrap();
        g.add_profile(1, 0, sc.lo, sc.hi, 50, |r| (sc.profile)(r)).unwrap();
        for (a, b) in exact.segments[0].f.iter().zip(&g.segments[0].f) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn combine_merges_shared_nodes() {
        let mut f = RadialField::new(1, 2, 0).unwrap();
        f.add_profile(0, 0, 1.0, 2.0, 10, |_| Complex64::new(1.0, 0.0)).unwrap();
        f.add_profile(0, 0, 1.0, 2.0, 10, |r| Complex64::new(0.0, r)).unwrap();
        let c = combine(&f, &[Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert_eq!(c.segments.len(), 1);
        let r0 = c.segments[0].r[0];
        assert!((c.segments[0].f[0] - Complex64::new(2.0, r0)).norm() < 1e-15);
    }

    #[test]
    fn block_scales() {
        // A = 32, m = 0: 32 ≤ 1 + I < 64 gives I = 32
        assert_eq!(block_scale(0, 32, 1), 32.0);
        // m = 16: 31/33 ≤ I < 63/33 gives I = 1
        assert_eq!(block_scale(16, 32, 1), 1.0);
        assert_eq!(block_scale(0, 1, 1), 0.5);
    }

    #[test]
    fn x_weight_reduction() {
        // ‖⟨∂_x⟩^{d1(1/2-1/q)} u_{m,I}‖ ≤ A^{(d1/2)(1/2-1/q)} ‖u_{m,I}‖ up to a factor 2, q = ∞
        let cut = DyadicCutoff::default();
        for (m, a) in [(0usize, 8u64), (2, 8), (3, 64), (7, 64)] {
            let i = block_scale(m, a, 1);
            let mut f = RadialField::new(1, 2, m).unwrap();
            f.add_profile(m, 0, 0.625 * i, 2.0 * i, 80, move |r| Complex64::new(cut.chi(r / i), 0.0)).unwrap();
            let lhs = f.x_sobolev_norm(0.5, 4 * (m + 1) + 40);
            let rhs = x_weight_bound(a as f64, 1, Exponent::Infinite) * f.l2_norm();
            assert!(lhs <= 2.0 * rhs, "m={m} A={a}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn seeds_are_stream_separated() {
        use rand::RngCore;
        let a = sample_rng(7, 0, 1).next_u64();
        let b = sample_rng(7, 1, 0).next_u64();
        let c = sample_rng(7, 0, 1).next_u64();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn counterexample_rejects_wrap_and_small_n() {
        let cfg = CounterexampleConfig { horizon: 10.0, ..Default::default() };
        assert!(matches!(counterexample_d2_1(&cfg), Err(Error::WrapAround(_))));
        let cfg = CounterexampleConfig { n: 1.0, ..Default::default() };
        assert!(counterexample_d2_1(&cfg).is_err());
    }

    #[test]
    fn counterexample_at_time_zero_is_exact() {
        let cfg = CounterexampleConfig { eta_max: 60.0, n: 4.0, horizon: 0.5, times: 2, n_x: 48, ..Default::default() };
        let rep = counterexample_d2_1(&cfg).unwrap();
        assert_eq!(rep.rows[0].translation_defect, 0.0);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn gluing_on_the_torus() {
        use rand::SeedableRng;
        let geom = Geometry::torus(1, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = SpectralField::random(geom.clone(), 1, 1, 3, &mut rng);
        let grid = FieldGrid::auto(geom, 1, 8).unwrap();
        let spec = MixedNormSpec { p: Exponent::Finite(4.0), q: Exponent::Finite(2.0), r: Exponent::Finite(4.0) };
        let flow = PropagatorSpec::new(2.0, 0.0).with_sign(Sign::Fractional);
        let g = glue_windows(&u, &grid, &spec, &flow, 0.1, 0.1 / 3.0, 64.0).unwrap();
        assert_eq!(g.windows, 3);
        assert!(g.within_bound);
        assert!(g.glue_rel_err < 1e-3, "{}", g.glue_rel_err);
    }

    #[test]
    fn scan_config_rejects_inadmissible() {
        let cfg = ScanConfig { p: Exponent::Finite(4.0), r: Exponent::Finite(4.0), ..Default::default() };
        assert!(matches!(strichartz_scan(&cfg, 1), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn scaling_rejects_non_dyadic_lambda() {
        let cfg = ScalingConfig { lambdas: vec![3.0], ..Default::default() };
        assert!(scaling_check(&cfg).is_err());
        assert!(is_power_of_two(0.5) && is_power_of_two(4.0) && !is_power_of_two(6.0));
    }
}
