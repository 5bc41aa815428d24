//! Nonlinear Cauchy problem `i∂_t u = -s·(-Δ_G)^σ u + |u|^{κ-1}u` on lattice fields,
//! with `s = ±1` the flow sign, solved two independent ways.
//!
//! The discrete system is a Galerkin truncation: coefficients on the stored modes and
//! fibers, with the nonlinearity evaluated on a padded grid and projected back.

use crate::admissibility::{slice_norm, solve_p, time_norm, trapezoid_weights, AdmissibleTriple, Exponent, MixedNormSpec, Slice};
use crate::propagators::{evolve, PropagatorSpec, Sign};
use crate::spectral_field::{EtaMultiplier, FieldGrid, Geometry, SpectralField};
use crate::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Picard,
    Splitting,
}

/// Nonlinear half of the splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearStep {
    /// Implicit midpoint on the projected system `i f' = P F(u)`; conserves mass exactly.
    Midpoint,
    /// Pointwise phase `e^{-i dt |u|^{κ-1}}` on the grid, then projection.
    Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NlsParams {
    pub sigma: f64,
    pub kappa: u32,
    /// Regularity index used for the contraction norm.
    pub s: f64,
    pub horizon: f64,
    pub steps: usize,
    pub solver: SolverKind,
    pub nonlinear_step: NonlinearStep,
    /// Picard iterates allowed before the horizon is halved.
    pub depth: usize,
    pub tolerance: f64,
    /// Smallest horizon the Picard solver retreats to.
    pub min_horizon: f64,
    /// Flow sign of the linear part; `None` picks `e^{itΔ_G}` at `σ = 1`, `e^{it(-Δ_G)^σ}` above.
    pub sign: Option<Sign>,
}

impl Default for NlsParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            kappa: 5,
            s: 2.1,
            horizon: 0.1,
            steps: 64,
            solver: SolverKind::Splitting,
            nonlinear_step: NonlinearStep::Midpoint,
            depth: 30,
            tolerance: 1e-8,
            min_horizon: 1e-4,
            sign: None,
        }
    }
}

impl NlsParams {
    pub fn flow_sign(&self) -> Sign {
        self.sign.unwrap_or_else(|| crate::strichartz::flow_sign(self.sigma))
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        let p = self;
        if p.kappa < 3 || p.kappa % 2 == 0 {
            return Err(Error::InvalidArgument(format!("κ must be an odd integer ≥ 3, got {}", p.kappa)));
        }
        if !(1.0..=2.0).contains(&p.sigma) {
            return Err(Error::InvalidArgument(format!("σ = {} outside [1, 2]", p.sigma)));
        }
        if !(p.horizon > 0.0 && p.horizon.is_finite()) {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        if p.steps < 3 {
            return Err(Error::InvalidArgument("need at least 3 steps".into()));
        }
        Ok(())
    }
}

/// Whether a parameter set is covered by the local well-posedness theory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Regime {
    Covered,
    /// Runs, but outside the covered regimes; the string says why.
    Outside(String),
}

#[derive(Debug, Clone)]
pub struct CauchyProblem {
    pub u0: SpectralField,
    pub params: NlsParams,
}

impl CauchyProblem {
    pub fn new(u0: SpectralField, params: NlsParams) -> Result<Self> {
        params.validate()?;
        check_headroom(&u0, params.kappa)?;
        Ok(Self { u0, params })
    }

    pub fn regime(&self) -> Regime {
        let p = &self.params;
        let pair = (p.kappa == 5 && p.sigma == 1.0) || (p.kappa == 3 && p.sigma > 1.0 && p.sigma < 2.0);
        if !pair {
            return Regime::Outside(format!("(κ, σ) = ({}, {}) outside the covered pairs (5, 1) and (3, σ ∈ (1, 2))", p.kappa, p.sigma));
        }
        let need = if self.u0.geometry.is_compact() { 2.0 } else { 2.5 - p.sigma };
        if p.s <= need {
            return Regime::Outside(format!("s = {} does not exceed {need}", p.s));
        }
        Regime::Covered
    }

    /// Largest linear frequency carried by the coefficient space.
    pub fn omega_max(&self) -> f64 {
        let g = &self.u0.geometry;
        let spec = PropagatorSpec::new(self.params.sigma, 0.0);
        (0..g.n_fibers()).map(|j| spec.omega(self.u0.m_max, g.eta_norm(j), g.d1)).fold(0.0, f64::max)
    }

    fn check_step(&self, dt: f64) -> Result<()> {
        let w = self.omega_max();
        if dt * w > PI / 4.0 {
            return Err(Error::StepTooLarge(format!(
                "dt = {dt:.3e} with top frequency {w:.3e} gives phase {:.3} > π/4; need at least {} steps",
                dt * w,
                (self.params.horizon * w * 4.0 / PI).ceil()
            )));
        }
        Ok(())
    }

    fn linear(&self, t: f64) -> PropagatorSpec {
        PropagatorSpec::new(self.params.sigma, t).with_sign(self.params.flow_sign())
    }
}

/// `y` points needed so that `|u|^{κ-1}u` of a field with `|k|_∞ ≤ k_max` projects without aliasing.
pub fn dealiased_points(k_max: usize, kappa: u32) -> usize {
    ((kappa as usize + 1) * (2 * k_max + 1)).div_ceil(2)
}

/// Padded grid for the nonlinearity on this field's geometry and mode ceiling.
pub fn nls_grid(geometry: &Geometry, m_max: usize, kappa: u32) -> Result<FieldGrid> {
    FieldGrid::auto(geometry.clone(), m_max, dealiased_points(geometry.k_max, kappa))
}

/// `P(|u|^{κ-1}u)`, evaluated on `grid` and projected back.
pub fn nonlinearity(field: &SpectralField, kappa: u32, grid: &FieldGrid) -> Result<SpectralField> {
    if kappa % 2 == 0 {
        return Err(Error::InvalidArgument(format!("κ = {kappa} is even")));
    }
    check_y_budget(field, kappa, grid)?;
    check_headroom(field, kappa)?;
    apply_power(field, kappa, grid)
}

fn check_y_budget(field: &SpectralField, kappa: u32, grid: &FieldGrid) -> Result<()> {
    let needed = dealiased_points(field.geometry.k_max, kappa);
    if grid.n_y < needed {
        return Err(Error::Aliasing { n_y: grid.n_y, k_max: field.geometry.k_max, needed });
    }
    Ok(())
}

/// Modes up to `κ·top` must be stored for the first nonlinear step to be captured.
pub fn check_headroom(field: &SpectralField, kappa: u32) -> Result<()> {
    if let Some(top) = field.active_top_mode() {
        let want = kappa as usize * top;
        if want > field.m_max {
            return Err(Error::InvalidArgument(format!(
                "mode headroom: active top mode {top} needs m_max ≥ {want}, have {}",
                field.m_max
            )));
        }
    }
    Ok(())
}

fn apply_power(field: &SpectralField, kappa: u32, grid: &FieldGrid) -> Result<SpectralField> {
    let mut v = grid.synthesize(field)?;
    let e = (kappa - 1) as i32 / 2;
    v.iter_mut().for_each(|z| *z *= z.norm_sqr().powi(e));
    grid.analyze(&v)
}

/// Time nodes and states of a solution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub picard: Option<PicardReport>,
}

impl Trajectory {
    pub fn last(&self) -> &SpectralField {
        self.states.last().expect("trajectory is never empty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardReport {
    pub iterations: usize,
    /// `sup_t ‖u^{(j+1)} - u^{(j)}‖_{H^s}` per iterate.
    pub corrections: Vec<f64>,
    /// Ratio of successive corrections.
    pub factors: Vec<f64>,
    pub horizon: f64,
    pub halvings: usize,
    /// `sup_t ‖Φ(u*) - u*‖_{H^s}` at the returned iterate.
    pub residual: f64,
}

/// Cumulative fourth-order weights: `∫_0^{t_n} g ≈ h Σ_k W[n][k] g(t_k)`.
pub fn cumulative_weights(n: usize) -> Vec<Vec<f64>> {
    assert!(n >= 3, "fourth-order cumulative weights need four nodes");
    let mut w = vec![vec![0.0; n + 1]; n + 1];
    for (k, c) in [9.0, 19.0, -5.0, 1.0].iter().enumerate() {
        w[1][k] = c / 24.0;
    }
    let simpson = |row: &mut [f64], upto: usize| {
        for i in (0..upto).step_by(2) {
            row[i] += 1.0 / 3.0;
            row[i + 1] += 4.0 / 3.0;
            row[i + 2] += 1.0 / 3.0;
        }
    };
    for (m, row) in w.iter_mut().enumerate().skip(2) {
        if m % 2 == 0 {
            simpson(row, m);
        } else {
            simpson(row, m - 3);
            for (k, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                row[m - 3 + k] += 3.0 / 8.0 * c;
            }
        }
    }
    w
}

fn sup_distance(a: &[SpectralField], b: &[SpectralField], s: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.sub(y).sobolev_norm(s)).fold(0.0, f64::max)
}

/// One application of the Duhamel map to a trajectory on uniform nodes.
fn duhamel(problem: &CauchyProblem, grid: &FieldGrid, times: &[f64], w: &[Vec<f64>], u: &[SpectralField]) -> Result<Vec<SpectralField>> {
    let h = times[1] - times[0];
    let kappa = problem.params.kappa;
    let pulled: Vec<SpectralField> = u
        .iter()
        .zip(times)
        .map(|(uk, &t)| evolve(&apply_power(uk, kappa, grid)?, &problem.linear(-t)))
        .collect::<Result<_>>()?;
    times
        .iter()
        .enumerate()
        .map(|(n, &t)| {
            let mut acc = problem.u0.clone();
            for (k, g) in pulled.iter().enumerate().take(n + 1) {
                let c = w[n][k];
                if c != 0.0 {
                    let z = Complex64::new(0.0, -h * c);
                    acc.coeffs.iter_mut().zip(&g.coeffs).for_each(|(a, b)| *a += z * b);
                }
            }
            evolve(&acc, &problem.linear(t))
        })
        .collect()
}

fn uniform_times(horizon: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect()
}

/// First Picard correction `sup_t ‖Φ(u_lin) - u_lin‖_{H^s}` over `[0, horizon]`.
pub fn first_correction(problem: &CauchyProblem, grid: &FieldGrid, horizon: f64, steps: usize) -> Result<f64> {
    let times = uniform_times(horizon, steps);
    let w = cumulative_weights(steps);
    let lin: Vec<SpectralField> =
        times.iter().map(|&t| evolve(&problem.u0, &problem.linear(t))).collect::<Result<_>>()?;
    let next = duhamel(problem, grid, &times, &w, &lin)?;
    Ok(sup_distance(&next, &lin, problem.params.s))
}

/// Picard iteration of the Duhamel map, halving the horizon on non-contraction.
pub fn picard_solve(problem: &CauchyProblem, grid: &FieldGrid) -> Result<Trajectory> {
    let p = &problem.params;
    check_y_budget(&problem.u0, p.kappa, grid)?;
    let mut horizon = p.horizon;
    let mut steps = p.steps;
    let mut halvings = 0;
    loop {
        problem.check_step(horizon / steps as f64)?;
        match picard_attempt(problem, grid, horizon, steps) {
            Ok((states, mut report)) => {
                report.halvings = halvings;
                return Ok(Trajectory { times: uniform_times(horizon, steps), states, picard: Some(report) });
            }
            Err(Error::NonContraction(msg)) => {
                if horizon / 2.0 < p.min_horizon || steps < 6 {
                    return Err(Error::NonContraction(format!("{msg}; horizon floor {} reached", p.min_horizon)));
                }
                horizon /= 2.0;
                steps /= 2;
                halvings += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

fn picard_attempt(problem: &CauchyProblem, grid: &FieldGrid, horizon: f64, steps: usize) -> Result<(Vec<SpectralField>, PicardReport)> {
    let p = &problem.params;
    let times = uniform_times(horizon, steps);
    let w = cumulative_weights(steps);
    let mut u: Vec<SpectralField> = times.iter().map(|&t| evolve(&problem.u0, &problem.linear(t))).collect::<Result<_>>()?;
    let mut corrections = Vec::new();
    let mut factors = Vec::new();
    for _ in 0..p.depth {
        let next = duhamel(problem, grid, &times, &w, &u)?;
        let diff = sup_distance(&next, &u, p.s);
        if !diff.is_finite() {
            return Err(Error::NonContraction("iterate diverged".into()));
        }
        if let Some(&prev) = corrections.last() {
            let f: f64 = diff / prev;
            factors.push(f);
        }
        corrections.push(diff);
        u = next;
        let scale = u.iter().map(|x| x.sobolev_norm(p.s)).fold(0.0, f64::max);
        if diff <= p.tolerance * scale.max(f64::MIN_POSITIVE) {
            let residual = sup_distance(&duhamel(problem, grid, &times, &w, &u)?, &u, p.s);
            let report = PicardReport { iterations: corrections.len(), corrections, factors, horizon, halvings: 0, residual };
            return Ok((u, report));
        }
        if factors.last().is_some_and(|&f| f >= 1.0) {
            return Err(Error::NonContraction(format!("contraction factor {:.3} at horizon {horizon}", factors.last().unwrap())));
        }
    }
    Err(Error::NonContraction(format!("no convergence in {} iterates at horizon {horizon}", p.depth)))
}

fn phase_step(u: &SpectralField, dt: f64, kappa: u32, grid: &FieldGrid) -> Result<SpectralField> {
    let e = (kappa - 1) as i32 / 2;
    let mut v = grid.synthesize(u)?;
    v.iter_mut().for_each(|z| *z *= Complex64::from_polar(1.0, -dt * z.norm_sqr().powi(e)));
    grid.analyze(&v)
}

/// Iterations allowed for the implicit midpoint solve.
const MIDPOINT_ITERS: usize = 60;

/// `f1 = f0 - i dt P F((f0 + f1)/2)` by fixed-point iteration.
fn midpoint_step(u: &SpectralField, dt: f64, kappa: u32, grid: &FieldGrid) -> Result<SpectralField> {
    let scale = u.l2_norm();
    let mut next = phase_step(u, dt, kappa, grid)?;
    for _ in 0..MIDPOINT_ITERS {
        let mid = u.zip_with(&next, |a, b| (a + b) * 0.5);
        let f = apply_power(&mid, kappa, grid)?;
        let cand = u.zip_with(&f, |a, b| a + Complex64::new(0.0, -dt) * b);
        let diff = cand.sub(&next).l2_norm();
        next = cand;
        if diff <= 1e-15 * scale {
            return Ok(next);
        }
    }
    Err(Error::StepTooLarge(format!("implicit midpoint did not settle in {MIDPOINT_ITERS} iterations at dt = {dt:.3e}")))
}

/// Strang splitting: half linear step, nonlinear step, half linear step.
pub fn splitting_solve(problem: &CauchyProblem, grid: &FieldGrid) -> Result<Trajectory> {
    let p = &problem.params;
    check_y_budget(&problem.u0, p.kappa, grid)?;
    let dt = p.dt();
    problem.check_step(dt)?;
    let half = problem.linear(dt / 2.0);
    let mut states = Vec::with_capacity(p.steps + 1);
    states.push(problem.u0.clone());
    let mut u = problem.u0.clone();
    for _ in 0..p.steps {
        let a = evolve(&u, &half)?;
        let b = match p.nonlinear_step {
            NonlinearStep::Midpoint => midpoint_step(&a, dt, p.kappa, grid)?,
            NonlinearStep::Phase => phase_step(&a, dt, p.kappa, grid)?,
        };
        u = evolve(&b, &half)?;
        states.push(u.clone());
    }
    Ok(Trajectory { times: uniform_times(p.horizon, p.steps), states, picard: None })
}

pub fn solve(problem: &CauchyProblem, grid: &FieldGrid) -> Result<Trajectory> {
    match problem.params.solver {
        SolverKind::Picard => picard_solve(problem, grid),
        SolverKind::Splitting => splitting_solve(problem, grid),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub hs_norm: f64,
    pub h_sigma_sqr: f64,
    pub linf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationLedger {
    pub rows: Vec<LedgerRow>,
    pub mass_drift: f64,
    pub energy_drift: f64,
    /// `sup_t ‖u‖²_{H^σ} / (M + E + E²)`.
    pub h_sigma_constant: f64,
    /// `sup_t ‖u‖_{L^∞} / ‖u‖_{H^s}`.
    pub embedding_constant: f64,
    /// Mixed norms `(p, q, r, value)` of the trajectory.
    pub proxy_norms: Vec<(f64, f64, f64, f64)>,
}

/// `½ Σ ω |f|² - s/(κ+1) ∫|u|^{κ+1}`, the conserved energy for flow sign `s`.
pub fn energy(u: &SpectralField, params: &NlsParams, grid: &FieldGrid) -> Result<f64> {
    let spec = PropagatorSpec::new(params.sigma, 0.0);
    let d1 = u.geometry.d1;
    let quad = 0.5 * u.weighted_norm_sqr(|m, e| spec.omega(m, e, d1));
    let v = grid.synthesize(u)?;
    let pot = grid.grid_lp_norm(&v, (params.kappa + 1) as f64).powi(params.kappa as i32 + 1);
    Ok(quad - params.flow_sign().factor() / (params.kappa + 1) as f64 * pot)
}

/// The energy triple `(∞, 2, 2)` plus two interior window points at `q = 2`.
///
/// For `σ > 1` the compact window is empty (its lower end meets `1/d2`), so the
/// Euclidean window is used there.
pub fn proxy_triples(params: &NlsParams, geom: &Geometry) -> Vec<MixedNormSpec> {
    use crate::admissibility::Case;
    let out = window_triples(params, geom, if geom.is_compact() { Case::Compact } else { Case::Euclidean });
    if out.len() > 1 {
        out
    } else {
        window_triples(params, geom, Case::Euclidean)
    }
}

fn window_triples(params: &NlsParams, geom: &Geometry, case: crate::admissibility::Case) -> Vec<MixedNormSpec> {
    let d2 = geom.d2 as f64;
    let upper = if params.sigma == 1.0 { if geom.d2 == 1 { 0.0 } else { (1.0 / (d2 - 1.0)).min(0.5) } } else { 1.0 / d2 };
    let lower = 1.0 / (2.0 * d2);
    let q = Exponent::Finite(2.0);
    let inside: Vec<MixedNormSpec> = (1..40)
        .filter_map(|j| {
            let x = lower + (upper - lower) * j as f64 / 40.0;
            let r = Exponent::new(1.0 / (0.5 - x));
            let p = solve_p(q, r, params.sigma, geom.d1, geom.d2)?;
            let t = AdmissibleTriple { p, q, r, sigma: params.sigma, d1: geom.d1, d2: geom.d2, case };
            t.is_admissible().admissible.then_some(MixedNormSpec { p, q, r })
        })
        .collect();
    let mut out = vec![MixedNormSpec { p: Exponent::Infinite, q, r: Exponent::Finite(2.0) }];
    if !inside.is_empty() {
        out.push(inside[inside.len() / 3]);
        if inside.len() > 1 {
            out.push(inside[2 * inside.len() / 3]);
        }
    }
    out
}

pub fn conservation_report(traj: &Trajectory, params: &NlsParams, grid: &FieldGrid) -> Result<ConservationLedger> {
    let geom = &traj.states[0].geometry;
    let specs = proxy_triples(params, geom);
    let yw = vec![grid.y_cell(); grid.n_points_y()];
    let mut rows = Vec::with_capacity(traj.states.len());
    let mut slices: Vec<Vec<f64>> = vec![Vec::new(); specs.len()];
    for (u, &t) in traj.states.iter().zip(&traj.times) {
        let v = grid.synthesize(u)?;
        let sl = Slice { values: &v, x_weights: &grid.x_weights, y_weights: &yw };
        for (col, sp) in slices.iter_mut().zip(&specs) {
            col.push(slice_norm(&sl, sp.q, sp.r));
        }
        rows.push(LedgerRow {
            t,
            mass: u.l2_norm_sqr(),
            energy: energy(u, params, grid)?,
            hs_norm: u.sobolev_norm(params.s),
            h_sigma_sqr: u.sobolev_norm(params.sigma).powi(2),
            linf: grid.grid_lp_norm(&v, f64::INFINITY),
        });
        if !rows.last().unwrap().energy.is_finite() {
            return Err(Error::Overflow(format!("energy at t = {t}")));
        }
    }
    let drift = |f: fn(&LedgerRow) -> f64| {
        let f0 = f(&rows[0]);
        let d = rows.iter().map(|r| (f(r) - f0).abs()).fold(0.0, f64::max);
        if f0 == 0.0 {
            d
        } else {
            d / f0.abs()
        }
    };
    let mass_drift = drift(|r| r.mass);
    let energy_drift = drift(|r| r.energy);
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let h_sigma_constant =
        rows.iter().map(|r| ratio(r.h_sigma_sqr, r.mass + r.energy.abs() + r.energy * r.energy)).fold(0.0, f64::max);
    let embedding_constant = rows.iter().map(|r| ratio(r.linf, r.hs_norm)).fold(0.0, f64::max);
    let span = traj.times.last().copied().unwrap_or(0.0) - traj.times[0];
    let tw = trapezoid_weights(traj.times.len(), span);
    let proxy_norms = specs
        .iter()
        .zip(&slices)
        .map(|(sp, col)| Ok((sp.p.value(), sp.q.value(), sp.r.value(), time_norm(col, &tw, sp.p)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConservationLedger { rows, mass_drift, energy_drift, h_sigma_constant, embedding_constant, proxy_norms })
}

/// `‖a - b‖ / ‖b‖` at the final time.
pub fn final_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    let (x, y) = (a.last(), b.last());
    x.sub(y).l2_norm() / y.l2_norm()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementLevel {
    pub steps: usize,
    pub mass_drift: f64,
    pub energy_drift: f64,
    /// Final-time distance to the finest run.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementStudy {
    pub levels: Vec<RefinementLevel>,
    pub error_order: f64,
    pub energy_order: f64,
    /// `None` when the mass drift sits at roundoff and carries no order.
    pub mass_order: Option<f64>,
}

/// Drift below this is treated as roundoff.
pub const MASS_FLOOR: f64 = 1e-12;

/// Run at `steps, 2·steps, …` (`levels` runs) against a reference with 8× the finest step count.
pub fn refinement_study(problem: &CauchyProblem, grid: &FieldGrid, levels: usize) -> Result<RefinementStudy> {
    let run = |steps: usize| {
        let pr = CauchyProblem { params: NlsParams { steps, ..problem.params.clone() }, u0: problem.u0.clone() };
        solve(&pr, grid)
    };
    let base = problem.params.steps;
    let reference = run(base << (levels + 2))?;
    let mut out = Vec::new();
    for l in 0..levels {
        let steps = base << l;
        let tr = run(steps)?;
        let led = conservation_report(&tr, &problem.params, grid)?;
        out.push(RefinementLevel {
            steps,
            mass_drift: led.mass_drift,
            energy_drift: led.energy_drift,
            error: final_distance(&tr, &reference),
        });
    }
    let order = |f: fn(&RefinementLevel) -> f64| {
        let n = out.len();
        (f(&out[n - 2]) / f(&out[n - 1])).log2()
    };
    let mass_order = if out.iter().all(|l| l.mass_drift > MASS_FLOOR) { Some(order(|l| l.mass_drift)) } else { None };
    Ok(RefinementStudy { error_order: order(|l| l.error), energy_order: order(|l| l.energy_drift), mass_order, levels: out })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongTimeReport {
    pub horizon: f64,
    pub steps: usize,
    /// `sup_t ‖u(t)‖²_{H^σ} / ‖u0‖²_{H^σ}`.
    pub h_sigma_growth: f64,
    pub h_sigma_constant: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub bounded: bool,
}

/// Splitting run over `factor` times the problem horizon at the same step size.
///
/// Passes when every state is finite and `‖u‖²_{H^σ}` stays within `growth_bound` of its start.
pub fn long_time_check(problem: &CauchyProblem, grid: &FieldGrid, factor: usize, growth_bound: f64) -> Result<LongTimeReport> {
    if factor == 0 {
        return Err(Error::InvalidArgument("factor must be at least 1".into()));
    }
    let p = &problem.params;
    let params = NlsParams { horizon: p.horizon * factor as f64, steps: p.steps * factor, solver: SolverKind::Splitting, ..p.clone() };
    let pr = CauchyProblem { u0: problem.u0.clone(), params: params.clone() };
    let tr = splitting_solve(&pr, grid)?;
    let led = conservation_report(&tr, &params, grid)?;
    let h0 = led.rows[0].h_sigma_sqr;
    let sup = led.rows.iter().map(|r| r.h_sigma_sqr).fold(0.0, f64::max);
    let growth = if h0 > 0.0 { sup / h0 } else { 0.0 };
    let finite = led.rows.iter().all(|r| r.h_sigma_sqr.is_finite() && r.linf.is_finite());
    Ok(LongTimeReport {
        horizon: params.horizon,
        steps: params.steps,
        h_sigma_growth: growth,
        h_sigma_constant: led.h_sigma_constant,
        mass_drift: led.mass_drift,
        energy_drift: led.energy_drift,
        bounded: finite && growth <= growth_bound,
    })
}

/// Torus datum on modes `≤ m_hi` and `|k|_∞ ≤ k_hi`, scaled to `‖u0‖_{L^∞} = amplitude` on `grid`.
pub fn small_datum(geometry: &Geometry, m_max: usize, m_hi: usize, k_hi: usize, amplitude: f64, seed: u64, grid: &FieldGrid) -> Result<SpectralField> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut u = SpectralField::random(geometry.clone(), m_max, m_hi, k_hi, &mut rng);
    let peak = grid.grid_lp_norm(&grid.synthesize(&u)?, f64::INFINITY);
    if peak == 0.0 {
        return Err(Error::ZeroDenominator("random datum vanished".into()));
    }
    u = u.scale(Complex64::new(amplitude / peak, 0.0));
    u.seed = Some(seed);
    u.label = format!("random datum, amplitude {amplitude}");
    Ok(u)
}
