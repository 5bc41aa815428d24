//! Fields on `R^{d1} x Y^{d2}` stored as Hermite-Fourier coefficients `f_{m,k}(η)`.
//!
//! `Y` is a periodic box of side `L` (the torus when `L = 2π`), so `η` runs over the
//! lattice `(2π/L) Z^{d2}` truncated to `|k|_∞ ≤ K`. Coefficients use the unitary
//! normalization `u = L^{-d2/2} Σ f_{m,k}(η) h̃_{m,k}(x;η) e^{iη·y}`, so the
//! coefficient ℓ² norm equals the L² norm of `u`.

pub mod cutoff;
pub mod grid;
pub mod io;
pub mod radial;

use crate::hermite_basis::ModeTable;
use crate::{Complex64, Error, Result};
use cutoff::{sharp_block, BlockWindow, DyadicCutoff};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use grid::FieldGrid;
pub use radial::RadialField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    EuclideanBox { side: f64 },
    Torus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub d1: usize,
    pub d2: usize,
    pub domain: Domain,
    pub k_max: usize,
}

impl Geometry {
    pub fn euclidean_box(d1: usize, d2: usize, side: f64, k_max: usize) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidArgument(format!("box side must be positive, got {side}")));
        }
        Self::checked(Self { d1, d2, domain: Domain::EuclideanBox { side }, k_max })
    }

    pub fn torus(d1: usize, d2: usize, k_max: usize) -> Result<Self> {
        Self::checked(Self { d1, d2, domain: Domain::Torus, k_max })
    }

    fn checked(g: Self) -> Result<Self> {
        if g.d1 == 0 || g.d2 == 0 {
            return Err(Error::InvalidArgument("dimensions must be at least 1".into()));
        }
        if g.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be at least 1".into()));
        }
        Ok(g)
    }

    pub fn side(&self) -> f64 {
        match self.domain {
            Domain::EuclideanBox { side } => side,
            Domain::Torus => 2.0 * std::f64::consts::PI,
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(self.domain, Domain::Torus)
    }

    /// Lattice spacing `2π/L`.
    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.side()
    }

    pub fn width(&self) -> usize {
        2 * self.k_max + 1
    }

    pub fn n_fibers(&self) -> usize {
        self.width().pow(self.d2 as u32)
    }

    /// Integer lattice vector of fiber `j` (lexicographic over `[-K, K]^{d2}`).
    pub fn fiber_k(&self, j: usize) -> Vec<i64> {
        let w = self.width();
        let mut out = vec![0i64; self.d2];
        let mut p = j;
        for slot in out.iter_mut().rev() {
            *slot = (p % w) as i64 - self.k_max as i64;
            p /= w;
        }
        out
    }

    pub fn fiber_index(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.d2 {
            return None;
        }
        let w = self.width() as i64;
        let kk = self.k_max as i64;
        let mut j = 0i64;
        for &c in k {
            if c.abs() > kk {
                return None;
            }
            j = j * w + c + kk;
        }
        Some(j as usize)
    }

    pub fn zero_fiber(&self) -> usize {
        self.fiber_index(&vec![0; self.d2]).unwrap()
    }

    pub fn k_norm2(&self, j: usize) -> i64 {
        self.fiber_k(j).iter().map(|c| c * c).sum()
    }

    /// `|η|` of fiber `j`.
    pub fn eta_norm(&self, j: usize) -> f64 {
        self.dk() * (self.k_norm2(j) as f64).sqrt()
    }

    /// `η` of fiber `j`.
    pub fn eta(&self, j: usize) -> Vec<f64> {
        let dk = self.dk();
        self.fiber_k(j).iter().map(|&c| dk * c as f64).collect()
    }
}

/// Shared behaviour of coefficient representations that are diagonal in `(m, |η|)`.
pub trait EtaMultiplier: Sized {
    fn d1(&self) -> usize;
    fn m_max(&self) -> usize;
    /// New field with every coefficient mapped by `f(m, |η|, value)`.
    fn map_symbol<F: Fn(usize, f64, Complex64) -> Complex64 + Sync>(&self, f: F) -> Self;
    /// `Σ w(m, |η|) |f|²` with the representation's measure.
    fn weighted_norm_sqr<F: Fn(usize, f64) -> f64 + Sync>(&self, w: F) -> f64;
    /// All coefficient values in storage order.
    fn values(&self) -> Vec<Complex64>;

    fn l2_norm(&self) -> f64 {
        self.weighted_norm_sqr(|_, _| 1.0).sqrt()
    }

    /// `‖u‖_{H^s_G}` with the inhomogeneous weight `(1 + (2m+d1)|η|)^s`.
    fn sobolev_norm(&self, s: f64) -> f64 {
        let d1 = self.d1();
        self.weighted_norm_sqr(|m, e| (1.0 + (2 * m + d1) as f64 * e).powf(s)).sqrt()
    }

    /// Homogeneous `‖u‖_{Ḣ^s_G}` with weight `((2m+d1)|η|)^s`; zero fibers contribute nothing for `s > 0`.
    fn homogeneous_sobolev_norm(&self, s: f64) -> f64 {
        let d1 = self.d1();
        self.weighted_norm_sqr(|m, e| {
            let l = (2 * m + d1) as f64 * e;
            if l == 0.0 {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                l.powf(s)
            }
        })
        .sqrt()
    }

    /// Multiply by `(1+λ)^{s/2}` or, if `homogeneous`, by `λ^{s/2}`, `λ = (2m+d1)|η|`.
    fn fractional_symbol(&self, s: f64, homogeneous: bool) -> Result<Self> {
        let d1 = self.d1();
        if homogeneous && s < 0.0 {
            let bad = self.weighted_norm_sqr(|_, e| if e == 0.0 { 1.0 } else { 0.0 });
            if bad > 0.0 {
                return Err(Error::SingularFiber);
            }
        }
        Ok(self.map_symbol(|m, e, c| {
            let l = (2 * m + d1) as f64 * e;
            let f = if homogeneous {
                if l == 0.0 {
                    if s == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    l.powf(s / 2.0)
                }
            } else {
                (1.0 + l).powf(s / 2.0)
            };
            c * f
        }))
    }

    /// `u_{m,I} = χ(|D_y|/I) u_m`.
    fn apply_cutoff(&self, m: usize, scale: f64, profile: &DyadicCutoff) -> Self {
        self.map_symbol(|mm, e, c| if mm == m { c * profile.chi_at(e, scale) } else { Complex64::new(0.0, 0.0) })
    }

    /// Multiply by `χ(|η|/I)` on every mode.
    fn apply_cutoff_all_modes(&self, scale: f64, profile: &DyadicCutoff) -> Self {
        self.map_symbol(|_, e, c| c * profile.chi_at(e, scale))
    }

    fn project_mode(&self, m: usize) -> Self {
        self.map_symbol(|mm, _, c| if mm == m { c } else { Complex64::new(0.0, 0.0) })
    }

    /// Smooth block `u_A = Σ_{(m,I) ∈ A} u_{m,I}`.
    fn project_block(&self, a: u64, profile: &DyadicCutoff) -> Self {
        let d1 = self.d1();
        self.map_symbol(|m, e, c| c * BlockWindow::new(m, a, d1).weight(profile, e))
    }

    /// Sharp spectral projection onto `A ≤ 1 + (2m+d1)|η| < 2A`.
    fn project_block_sharp(&self, a: u64) -> Self {
        let d1 = self.d1();
        self.map_symbol(|m, e, c| {
            if sharp_block((2 * m + d1) as f64 * e) == a {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// One nonzero coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub m: usize,
    pub k: usize,
    pub lattice: Vec<i64>,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub geometry: Geometry,
    pub m_max: usize,
    pub table: ModeTable,
    /// Dense storage `[fiber][mode]`.
    pub coeffs: Vec<Complex64>,
    pub label: String,
    pub seed: Option<u64>,
}

impl SpectralField {
    pub fn zeros(geometry: Geometry, m_max: usize) -> Self {
        let table = ModeTable::new(geometry.d1, m_max);
        let n = geometry.n_fibers() * table.len();
        Self { geometry, m_max, table, coeffs: vec![Complex64::new(0.0, 0.0); n], label: String::new(), seed: None }
    }

    pub fn n_modes(&self) -> usize {
        self.table.len()
    }

    #[inline]
    pub fn index(&self, fiber: usize, mode: usize) -> usize {
        fiber * self.table.len() + mode
    }

    pub fn get(&self, m: usize, k: usize, lattice: &[i64]) -> Option<Complex64> {
        let j = self.geometry.fiber_index(lattice)?;
        Some(self.coeffs[self.index(j, self.table.index(m, k))])
    }

    pub fn set(&mut self, m: usize, k: usize, lattice: &[i64], value: Complex64) -> Result<()> {
        if m > self.m_max || k >= self.table.offsets[m + 1] - self.table.offsets[m] {
            return Err(Error::InvalidArgument(format!("mode ({m},{k}) outside table")));
        }
        let j = self
            .geometry
            .fiber_index(lattice)
            .ok_or_else(|| Error::InvalidArgument(format!("lattice point {lattice:?} outside cutoff")))?;
        let i = self.index(j, self.table.index(m, k));
        self.coeffs[i] = value;
        Ok(())
    }

    /// Nonzero coefficients in storage order.
    pub fn records(&self) -> Vec<Record> {
        let nm = self.n_modes();
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(i, &c)| {
                let (m, k) = self.table.mode_k(i % nm);
                Record { m, k, lattice: self.geometry.fiber_k(i / nm), value: c }
            })
            .collect()
    }

    /// Top mode carrying a nonzero coefficient.
    pub fn active_top_mode(&self) -> Option<usize> {
        let nm = self.n_modes();
        self.coeffs.iter().enumerate().filter(|(_, c)| c.norm_sqr() > 0.0).map(|(i, _)| self.table.modes[i % nm]).max()
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, &b)| *a = f(*a, b));
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// Same coefficients, embedded with a larger mode ceiling.
    pub fn with_m_max(&self, m_max: usize) -> Self {
        let mut out = Self::zeros(self.geometry.clone(), m_max);
        let keep = out.table.len().min(self.table.len());
        for j in 0..self.geometry.n_fibers() {
            for i in 0..keep {
                let dst = out.index(j, i);
                out.coeffs[dst] = self.coeffs[self.index(j, i)];
            }
        }
        out.label = self.label.clone();
        out.seed = self.seed;
        out
    }

    /// i.i.d. complex Gaussian coefficients on modes `≤ m_hi` and fibers with `|k|_∞ ≤ k_hi`.
    pub fn random<R: Rng>(geometry: Geometry, m_max: usize, m_hi: usize, k_hi: usize, rng: &mut R) -> Self {
        let mut f = Self::zeros(geometry, m_max);
        let m_hi = m_hi.min(m_max);
        let nm = f.n_modes();
        for j in 0..f.geometry.n_fibers() {
            let inside = f.geometry.fiber_k(j).iter().all(|c| c.unsigned_abs() as usize <= k_hi);
            for i in 0..nm {
                if inside && f.table.modes[i] <= m_hi {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let idx = f.index(j, i);
                    f.coeffs[idx] = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
                }
            }
        }
        f
    }

    /// `∂_{y_j}`: multiplier `iη_j`.
    pub fn dy(&self, axis: usize) -> Self {
        let nm = self.n_modes();
        let mut out = self.clone();
        for j in 0..self.geometry.n_fibers() {
            let e = self.geometry.eta(j)[axis];
            for c in &mut out.coeffs[j * nm..(j + 1) * nm] {
                *c *= Complex64::new(0.0, e);
            }
        }
        out
    }

    /// `u(·, · - s)`: multiplier `e^{-iη·s}`.
    pub fn translate_y(&self, shift: &[f64]) -> Self {
        let nm = self.n_modes();
        let mut out = self.clone();
        for j in 0..self.geometry.n_fibers() {
            let phase: f64 = self.geometry.eta(j).iter().zip(shift).map(|(e, s)| e * s).sum();
            let z = Complex64::from_polar(1.0, -phase);
            for c in &mut out.coeffs[j * nm..(j + 1) * nm] {
                *c *= z;
            }
        }
        out
    }

    /// `∂_{x_j}` by Hermite ladder relations; raises the top mode by one.
    pub fn dx(&self, axis: usize) -> Result<Self> {
        self.ladder(axis, true)
    }

    /// Multiplication by `x_j`; raises the top mode by one.
    pub fn mul_x(&self, axis: usize) -> Result<Self> {
        self.ladder(axis, false)
    }

    // h̃_n(x;a): d/dx = √a (√(n/2) h̃_{n-1} - √((n+1)/2) h̃_{n+1}),
    //           x    = (1/√a)(√(n/2) h̃_{n-1} + √((n+1)/2) h̃_{n+1})
    fn ladder(&self, axis: usize, derivative: bool) -> Result<Self> {
        if let Some(top) = self.active_top_mode() {
            if top + 1 > self.m_max {
                return Err(Error::InvalidArgument(format!(
                    "ladder needs mode headroom: top mode {top}, m_max {}",
                    self.m_max
                )));
            }
        }
        let nm = self.n_modes();
        let mut out = Self::zeros(self.geometry.clone(), self.m_max);
        let lookup: std::collections::HashMap<Vec<usize>, usize> =
            self.table.alphas.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        for j in 0..self.geometry.n_fibers() {
            let e = self.geometry.eta_norm(j);
            let a = if e == 0.0 { 1.0 } else { e };
            let sa = a.sqrt();
            for (i, alpha) in self.table.alphas.iter().enumerate() {
                let c = self.coeffs[j * nm + i];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let n = alpha[axis] as f64;
                let (lo, hi) = if derivative {
                    (sa * (n / 2.0).sqrt(), -sa * ((n + 1.0) / 2.0).sqrt())
                } else {
                    ((n / 2.0).sqrt() / sa, ((n + 1.0) / 2.0).sqrt() / sa)
                };
                if alpha[axis] > 0 {
                    let mut b = alpha.clone();
                    b[axis] -= 1;
                    out.coeffs[j * nm + lookup[&b]] += c * lo;
                }
                let mut b = alpha.clone();
                b[axis] += 1;
                out.coeffs[j * nm + lookup[&b]] += c * hi;
            }
        }
        Ok(out)
    }

    /// `‖u‖_{L²_y H^s_x}`: x-Sobolev norm of each fiber, summed over fibers.
    pub fn x_sobolev_norm(&self, s: f64, quad_order: usize) -> f64 {
        let nm = self.n_modes();
        let q = radial::XSobolevQuad::new(&self.table, quad_order);
        let mut total = 0.0;
        for j in 0..self.geometry.n_fibers() {
            let e = self.geometry.eta_norm(j);
            let a = if e == 0.0 { 1.0 } else { e };
            total += q.norm_sqr(&self.coeffs[j * nm..(j + 1) * nm], a, s);
        }
        total.sqrt()
    }
}

impl EtaMultiplier for SpectralField {
    fn d1(&self) -> usize {
        self.geometry.d1
    }

    fn m_max(&self) -> usize {
        self.m_max
    }

    fn values(&self) -> Vec<Complex64> {
        self.coeffs.clone()
    }

    fn map_symbol<F: Fn(usize, f64, Complex64) -> Complex64 + Sync>(&self, f: F) -> Self {
        let nm = self.n_modes();
        let mut out = self.clone();
        let g = &self.geometry;
        let modes = &self.table.modes;
        crate::par::for_each_chunk_mut(&mut out.coeffs, nm, |j, chunk| {
            let e = g.eta_norm(j);
            for (i, c) in chunk.iter_mut().enumerate() {
                *c = f(modes[i], e, *c);
            }
        });
        out
    }

    fn weighted_norm_sqr<F: Fn(usize, f64) -> f64 + Sync>(&self, w: F) -> f64 {
        let nm = self.n_modes();
        let per: Vec<f64> = crate::par::map_range(self.geometry.n_fibers(), |j| {
            let e = self.geometry.eta_norm(j);
            self.coeffs[j * nm..(j + 1) * nm]
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let n2 = c.norm_sqr();
                    if n2 == 0.0 {
                        0.0
                    } else {
                        w(self.table.modes[i], e) * n2
                    }
                })
                .sum()
        });
        per.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geom() -> Geometry {
        Geometry::torus(1, 2, 3).unwrap()
    }

    #[test]
    fn geometry_indexing() {
        let g = geom();
        assert_eq!(g.n_fibers(), 49);
        for j in 0..g.n_fibers() {
            assert_eq!(g.fiber_index(&g.fiber_k(j)), Some(j));
        }
        assert_eq!(g.fiber_k(g.zero_fiber()), vec![0, 0]);
        assert!(g.fiber_index(&[4, 0]).is_none());
        assert!(Geometry::euclidean_box(1, 1, -1.0, 3).is_err());
        assert!(Geometry::torus(1, 1, 0).is_err());
        assert!((g.side() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn sobolev_single_coefficient() {
        // |η| = 2 on the torus is k = (2, 0); (2m+d1)|η| = 3·2
        let g = Geometry::torus(1, 2, 3).unwrap();
        let mut f = SpectralField::zeros(g, 3);
        f.set(1, 0, &[2, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert!((f.sobolev_norm(1.0).powi(2) - 7.0).abs() < 1e-14);
        assert!((f.sobolev_norm(0.0) - f.l2_norm()).abs() < 1e-15);
    }

    #[test]
    fn mode_projections() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = SpectralField::random(geom(), 5, 5, 3, &mut rng);
        let total: f64 = (0..=5).map(|m| u.project_mode(m).l2_norm_sqr()).sum();
        assert!((total - u.l2_norm_sqr()).abs() < 1e-10 * total);
        let p = u.project_mode(2);
        assert_eq!(p.project_mode(2), p);
        assert!(p.project_mode(3).l2_norm() == 0.0);
        let sum = (0..=5).fold(SpectralField::zeros(geom(), 5), |acc, m| acc.add(&u.project_mode(m)));
        assert!(sum.sub(&u).l2_norm() < 1e-14);
    }

    #[test]
    fn block_quasi_orthogonality() {
        let cut = DyadicCutoff::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let u = SpectralField::random(geom(), 4, 4, 3, &mut rng);
            let s: f64 = (0..8).map(|e| u.project_block(1 << e, &cut).l2_norm_sqr()).sum::<f64>() / u.l2_norm_sqr();
            assert!((0.25..=4.0).contains(&s), "{s}");
            let sharp: f64 = (0..8).map(|e| u.project_block_sharp(1 << e).l2_norm_sqr()).sum::<f64>();
            assert!((sharp / u.l2_norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn block_sobolev_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = Geometry::torus(1, 2, 8).unwrap();
        for e in 0..5 {
            let a = 1u64 << e;
            let u = SpectralField::random(g.clone(), 6, 6, 8, &mut rng).project_block_sharp(a);
            if u.l2_norm() == 0.0 {
                continue;
            }
            let r = u.sobolev_norm(2.0).powi(2) / ((a * a) as f64 * u.l2_norm_sqr());
            assert!((1.0 / 16.0..=16.0).contains(&r), "A={a} r={r}");
        }
    }

    #[test]
    fn nested_cutoffs() {
        // χ̃ = χ(·/1); the wide profile Σ_{j=-1..1} χ(·/2^j) equals 1 on supp χ̃
        let cut = DyadicCutoff::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = SpectralField::random(Geometry::euclidean_box(1, 1, 40.0, 30).unwrap(), 2, 2, 30, &mut rng);
        let narrow = u.apply_cutoff(1, 1.0, &cut);
        let both = narrow.map_symbol(|_, e, c| c * cut.partition_sum(e, -1, 1));
        assert_eq!(both, narrow);
    }

    #[test]
    fn fractional_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = SpectralField::random(geom(), 3, 3, 3, &mut rng);
        assert_eq!(u.fractional_symbol(0.0, false).unwrap(), u);
        let back = u.fractional_symbol(2.0, false).unwrap().fractional_symbol(-2.0, false).unwrap();
        assert!(back.sub(&u).l2_norm() <= 1e-10 * u.l2_norm());
        for s in [0.5, 1.0, 2.0] {
            let v = u.fractional_symbol(s, false).unwrap();
            assert!((v.l2_norm() - u.sobolev_norm(s)).abs() <= 1e-10 * u.sobolev_norm(s));
        }
        assert_eq!(u.fractional_symbol(-1.0, true), Err(Error::SingularFiber));
        let z = u.map_symbol(|_, e, c| if e == 0.0 { Complex64::new(0.0, 0.0) } else { c });
        assert!(z.fractional_symbol(-1.0, true).is_ok());
    }

    #[test]
    fn commutator_identity_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = SpectralField::random(Geometry::torus(1, 1, 4).unwrap(), 6, 3, 4, &mut rng);
        let lhs = u.dy(0).mul_x(0).unwrap().dx(0).unwrap().sub(&u.dx(0).unwrap().dy(0).mul_x(0).unwrap());
        let err = lhs.sub(&u.dy(0)).l2_norm();
        assert!(err <= 1e-12 * u.sobolev_norm(2.0), "{err}");
    }

    #[test]
    fn ladder_requires_headroom() {
        let mut f = SpectralField::zeros(geom(), 2);
        f.set(2, 0, &[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert!(f.dx(0).is_err());
    }

    #[test]
    fn records_of_zero_field_empty() {
        assert!(SpectralField::zeros(geom(), 2).records().is_empty());
    }
}
