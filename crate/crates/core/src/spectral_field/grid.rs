//! Physical sampling of lattice fields: Gauss–Hermite nodes in `x` (one node set shared
//! by every fiber) times a uniform periodic grid in `y`.
//!
//! The `y` direction is handled by FFT. In `x` each fiber is projected by quadrature on
//! the shared nodes; that projection is exact only while the node set resolves all
//! fiber scales, which is checked once per grid through the quadrature Gram matrix.

use super::{Geometry, SpectralField};
use crate::hermite_basis::{gram_1d, hermite_values, tensor_nodes, unflatten, ModeTable};
use crate::quadrature::gauss_hermite;
use crate::{Complex64, Error, Result};
use rustfft::{Fft, FftPlanner};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Gram defect above which analysis is refused.
pub const GRAM_TOLERANCE: f64 = 1e-10;

#[derive(Clone)]
pub struct FieldGrid {
    pub geometry: Geometry,
    pub m_max: usize,
    pub table: ModeTable,
    pub n_x: usize,
    pub x_scale: f64,
    pub n_y: usize,
    /// 1D nodes/weights in physical units.
    pub nodes_1d: Vec<f64>,
    pub weights_1d: Vec<f64>,
    /// Tensor points (flat, stride d1) and weights.
    pub x_points: Vec<f64>,
    pub x_weights: Vec<f64>,
    /// `|k|²` of each fiber → row of `tables`.
    scale_keys: Vec<usize>,
    /// Per distinct fiber scale: `a^{1/4} h_n(√a x_i)` as `[i][n]`.
    tables: Vec<Vec<f64>>,
    pub gram_defect: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FieldGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldGrid")
            .field("geometry", &self.geometry)
            .field("m_max", &self.m_max)
            .field("n_x", &self.n_x)
            .field("x_scale", &self.x_scale)
            .field("n_y", &self.n_y)
            .field("gram_defect", &self.gram_defect)
            .finish()
    }
}

impl FieldGrid {
    /// `n_x` Gauss–Hermite nodes at `x = ξ/√x_scale`; `n_y` points per `y` axis.
    pub fn new(geometry: Geometry, m_max: usize, n_x: usize, x_scale: f64, n_y: usize) -> Result<Self> {
        let needed = geometry.width();
        if n_y < needed {
            return Err(Error::Aliasing { n_y, k_max: geometry.k_max, needed });
        }
        if !(x_scale > 0.0) {
            return Err(Error::InvalidArgument("x_scale must be positive".into()));
        }
        if n_x < m_max + 1 {
            return Err(Error::QuadratureUnderresolved(format!("n_x = {n_x} < m_max + 1 = {}", m_max + 1)));
        }
        let (xi, wi) = gauss_hermite(n_x);
        let s = x_scale.sqrt();
        let nodes_1d: Vec<f64> = xi.iter().map(|x| x / s).collect();
        let weights_1d: Vec<f64> = wi.iter().map(|w| w / s).collect();
        let (x_points, x_weights) = tensor_nodes(&xi, &wi, geometry.d1, x_scale);

        let mut by_key: BTreeMap<usize, usize> = BTreeMap::new();
        let mut scale_keys = Vec::with_capacity(geometry.n_fibers());
        for j in 0..geometry.n_fibers() {
            let key = geometry.k_norm2(j) as usize;
            let next = by_key.len();
            let row = *by_key.entry(key).or_insert(next);
            scale_keys.push(row);
        }
        let keys: Vec<usize> = {
            let mut v = vec![0; by_key.len()];
            for (&k, &r) in &by_key {
                v[r] = k;
            }
            v
        };
        let dk = geometry.dk();
        let scale_of = |key: usize| if key == 0 { 1.0 } else { dk * (key as f64).sqrt() };
        let w = m_max + 1;
        let tables: Vec<Vec<f64>> = crate::par::map_slice(&keys, |&key| {
            let a = scale_of(key);
            let sa = a.sqrt();
            let pre = a.powf(0.25);
            let mut t = vec![0.0; n_x * w];
            for (i, &x) in nodes_1d.iter().enumerate() {
                let row = &mut t[i * w..(i + 1) * w];
                hermite_values(m_max, sa * x, row);
                row.iter_mut().for_each(|v| *v *= pre);
            }
            t
        });
        let defects: Vec<f64> = crate::par::map_slice(&keys, |&key| {
            let g = gram_1d(&xi, &wi, m_max, scale_of(key), x_scale);
            let mut worst = 0.0f64;
            for i in 0..w {
                for j in 0..w {
                    let t = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((g[i * w + j] - t).abs());
                }
            }
            worst
        });
        // the tensor Gram is a product of 1D entries bounded by 1 + δ
        let d = defects.iter().cloned().fold(0.0, f64::max);
        let gram_defect = (1.0 + d).powi(geometry.d1 as i32) - 1.0;

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n_y);
        let inv = planner.plan_fft_inverse(n_y);
        Ok(Self {
            table: ModeTable::new(geometry.d1, m_max),
            geometry,
            m_max,
            n_x,
            x_scale,
            n_y,
            nodes_1d,
            weights_1d,
            x_points,
            x_weights,
            scale_keys,
            tables,
            gram_defect,
            fwd,
            inv,
        })
    }

    /// Grid whose node count is raised until every fiber scale is resolved.
    ///
    /// The centre scale is the geometric mean of the smallest and largest fiber scales.
    pub fn auto(geometry: Geometry, m_max: usize, n_y: usize) -> Result<Self> {
        let dk = geometry.dk();
        let top = dk * (geometry.d2 as f64).sqrt() * geometry.k_max as f64;
        let lo = dk.min(1.0);
        let hi = top.max(1.0);
        let scale = (lo * hi).sqrt();
        let mut n_x = (4 * (m_max + 1)).max(16);
        loop {
            let g = Self::new(geometry.clone(), m_max, n_x, scale, n_y)?;
            if g.gram_defect <= 0.1 * GRAM_TOLERANCE {
                return Ok(g);
            }
            if n_x > 1200 {
                return Err(Error::QuadratureUnderresolved(format!(
                    "fiber scales [{lo:.3e}, {hi:.3e}] need more than {n_x} x-nodes (Gram defect {:.2e})",
                    g.gram_defect
                )));
            }
            n_x = n_x * 5 / 4;
        }
    }

    pub fn n_points_x(&self) -> usize {
        self.x_weights.len()
    }

    pub fn n_points_y(&self) -> usize {
        self.n_y.pow(self.geometry.d2 as u32)
    }

    /// Size of one y-cell.
    pub fn y_cell(&self) -> f64 {
        (self.geometry.side() / self.n_y as f64).powi(self.geometry.d2 as i32)
    }

    /// y-coordinates of flat grid index `q`.
    pub fn y_point(&self, q: usize) -> Vec<f64> {
        let h = self.geometry.side() / self.n_y as f64;
        let mut idx = vec![0usize; self.geometry.d2];
        unflatten(q, self.n_y, &mut idx);
        idx.iter().map(|&i| i as f64 * h).collect()
    }

    fn check(&self, field: &SpectralField) -> Result<()> {
        if field.geometry != self.geometry {
            return Err(Error::GeometryMismatch("field and grid geometries differ".into()));
        }
        if field.m_max != self.m_max {
            return Err(Error::GeometryMismatch(format!("field m_max {} vs grid {}", field.m_max, self.m_max)));
        }
        Ok(())
    }

    /// `h̃_mode(x_p; |η_j|)` for tensor point `p`.
    #[inline]
    fn basis_value(&self, table: &[f64], p_idx: &[usize], alpha: &[usize]) -> f64 {
        let w = self.m_max + 1;
        let mut v = 1.0;
        for (i, &a) in p_idx.iter().zip(alpha) {
            v *= table[i * w + a];
        }
        v
    }

    /// Fiber profiles `û(x_p, η_j)` as `[fiber][point]`.
    fn fiber_profiles(&self, field: &SpectralField) -> Vec<Vec<Complex64>> {
        let nm = field.n_modes();
        let np = self.n_points_x();
        let d1 = self.geometry.d1;
        crate::par::map_range(self.geometry.n_fibers(), |j| {
            let c = &field.coeffs[j * nm..(j + 1) * nm];
            let mut out = vec![Complex64::new(0.0, 0.0); np];
            if c.iter().all(|v| v.re == 0.0 && v.im == 0.0) {
                return out;
            }
            let table = &self.tables[self.scale_keys[j]];
            let mut idx = vec![0usize; d1];
            for (p, o) in out.iter_mut().enumerate() {
                unflatten(p, self.n_x, &mut idx);
                let mut acc = Complex64::new(0.0, 0.0);
                for (ci, alpha) in c.iter().zip(&self.table.alphas) {
                    if ci.re != 0.0 || ci.im != 0.0 {
                        acc += ci * self.basis_value(table, &idx, alpha);
                    }
                }
                *o = acc;
            }
            out
        })
    }

    /// Grid values `[x point][y flat]`.
    pub fn synthesize(&self, field: &SpectralField) -> Result<Vec<Complex64>> {
        self.check(field)?;
        let prof = self.fiber_profiles(field);
        let ny = self.n_points_y();
        let np = self.n_points_x();
        let g = &self.geometry;
        let norm = g.side().powf(-(g.d2 as f64) / 2.0);
        let slots: Vec<usize> = (0..g.n_fibers()).map(|j| self.wrap_slot(&g.fiber_k(j))).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); np * ny];
        crate::par::for_each_chunk_mut(&mut out, ny, |p, row| {
            for (j, &slot) in slots.iter().enumerate() {
                row[slot] += prof[j][p] * norm;
            }
            self.fft_nd(row, false);
        });
        Ok(out)
    }

    /// Project grid values back to coefficients.
    pub fn analyze(&self, values: &[Complex64]) -> Result<SpectralField> {
        let ny = self.n_points_y();
        let np = self.n_points_x();
        if values.len() != np * ny {
            return Err(Error::LengthMismatch { expected: np * ny, got: values.len() });
        }
        if self.gram_defect > GRAM_TOLERANCE {
            return Err(Error::QuadratureUnderresolved(format!(
                "x-grid ({} nodes, scale {}) has Gram defect {:.2e} over the fiber scales",
                self.n_x, self.x_scale, self.gram_defect
            )));
        }
        let g = &self.geometry;
        let norm = g.side().powf(g.d2 as f64 / 2.0) / ny as f64;
        let mut spec = values.to_vec();
        crate::par::for_each_chunk_mut(&mut spec, ny, |_, row| self.fft_nd(row, true));
        let mut field = SpectralField::zeros(g.clone(), self.m_max);
        let nm = field.n_modes();
        let d1 = g.d1;
        let per: Vec<Vec<Complex64>> = crate::par::map_range(g.n_fibers(), |j| {
            let slot = self.wrap_slot(&g.fiber_k(j));
            let table = &self.tables[self.scale_keys[j]];
            let mut c = vec![Complex64::new(0.0, 0.0); nm];
            let mut idx = vec![0usize; d1];
            for p in 0..np {
                let v = spec[p * ny + slot] * (norm * self.x_weights[p]);
                if v.re == 0.0 && v.im == 0.0 {
                    continue;
                }
                unflatten(p, self.n_x, &mut idx);
                for (ci, alpha) in c.iter_mut().zip(&self.table.alphas) {
                    *ci += v * self.basis_value(table, &idx, alpha);
                }
            }
            c
        });
        for (j, c) in per.into_iter().enumerate() {
            field.coeffs[j * nm..(j + 1) * nm].copy_from_slice(&c);
        }
        Ok(field)
    }

    /// Discrete `L²_{x,y}` norm of grid values.
    pub fn grid_l2_norm(&self, values: &[Complex64]) -> f64 {
        let ny = self.n_points_y();
        let cell = self.y_cell();
        values
            .chunks(ny)
            .zip(&self.x_weights)
            .map(|(row, w)| w * cell * row.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Discrete `L^p_{x,y}` norm (`p = ∞` gives the node maximum).
    pub fn grid_lp_norm(&self, values: &[Complex64], p: f64) -> f64 {
        let ny = self.n_points_y();
        if p.is_infinite() {
            return values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let cell = self.y_cell();
        values
            .chunks(ny)
            .zip(&self.x_weights)
            .map(|(row, w)| w * cell * row.iter().map(|v| v.norm().powf(p)).sum::<f64>())
            .sum::<f64>()
            .powf(1.0 / p)
    }

    fn wrap_slot(&self, k: &[i64]) -> usize {
        let n = self.n_y as i64;
        k.iter().fold(0usize, |acc, &c| acc * self.n_y + c.rem_euclid(n) as usize)
    }

    /// In-place d2-dimensional FFT of one row (unnormalized).
    fn fft_nd(&self, row: &mut [Complex64], forward: bool) {
        let plan = if forward { &self.fwd } else { &self.inv };
        let n = self.n_y;
        let d2 = self.geometry.d2;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..d2 {
            let stride = n.pow((d2 - 1 - axis) as u32);
            let total = row.len();
            for base in 0..total {
                if (base / stride) % n != 0 {
                    continue;
                }
                for (i, l) in line.iter_mut().enumerate() {
                    *l = row[base + i * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (i, l) in line.iter().enumerate() {
                    row[base + i * stride] = *l;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::EtaMultiplier;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_mode_analyzes_to_single_coefficient() {
        let g = Geometry::euclidean_box(1, 1, 16.0, 6).unwrap();
        let grid = FieldGrid::auto(g.clone(), 4, 16).unwrap();
        let k0 = 3i64;
        let eta0 = g.dk() * k0 as f64;
        // u = h̃_0(x; η0) e^{iη0 y}
        let ny = grid.n_points_y();
        let h = crate::hermite_basis::HermiteBasis::new(1, 4).unwrap();
        let hv = h.eval_scaled(0, 0, eta0, &grid.x_points).unwrap();
        let mut vals = vec![Complex64::new(0.0, 0.0); grid.n_points_x() * ny];
        for p in 0..grid.n_points_x() {
            for q in 0..ny {
                let y = grid.y_point(q)[0];
                vals[p * ny + q] = Complex64::from_polar(hv[p], eta0 * y);
            }
        }
        let f = grid.analyze(&vals).unwrap();
        let amp = f.get(0, 0, &[k0]).unwrap();
        // unitary normalization puts L^{d2/2} on a unit-amplitude plane wave
        assert!((amp - Complex64::from(16f64.sqrt())).norm() < 1e-8);
        assert!((f.l2_norm_sqr() - amp.norm_sqr()).abs() < 1e-8);
    }

    #[test]
    fn zero_field_has_no_records() {
        let g = Geometry::torus(1, 2, 2).unwrap();
        let grid = FieldGrid::auto(g, 3, 5).unwrap();
        let vals = vec![Complex64::new(0.0, 0.0); grid.n_points_x() * grid.n_points_y()];
        assert!(grid.analyze(&vals).unwrap().records().is_empty());
    }

    #[test]
    fn round_trip_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (d1, d2) in [(1, 1), (1, 2), (2, 1)] {
            let g = Geometry::torus(d1, d2, 3).unwrap();
            let grid = FieldGrid::auto(g.clone(), 4, 8).unwrap();
            for _ in 0..3 {
                let u = SpectralField::random(g.clone(), 4, 4, 3, &mut rng);
                let v = grid.synthesize(&u).unwrap();
                let back = grid.analyze(&v).unwrap();
                assert!(back.sub(&u).l2_norm() <= 1e-8 * u.l2_norm());
                assert!((grid.grid_l2_norm(&v) - u.l2_norm()).abs() <= 1e-8 * u.l2_norm());
            }
        }
    }

    #[test]
    fn aliasing_rejected() {
        let g = Geometry::torus(1, 1, 4).unwrap();
        assert!(matches!(FieldGrid::new(g, 2, 16, 1.0, 8), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn underresolved_grid_refuses_analysis() {
        let g = Geometry::euclidean_box(1, 1, 2.0 * std::f64::consts::PI / 0.01, 3000).unwrap();
        let grid = FieldGrid::new(g, 8, 24, 1.0, 6001).unwrap();
        let vals = vec![Complex64::new(0.0, 0.0); grid.n_points_x() * grid.n_points_y()];
        assert!(matches!(grid.analyze(&vals), Err(Error::QuadratureUnderresolved(_))));
    }

    #[test]
    fn mismatched_geometry() {
        let g = Geometry::torus(1, 1, 2).unwrap();
        let grid = FieldGrid::auto(g, 2, 8).unwrap();
        let other = SpectralField::zeros(Geometry::torus(1, 1, 3).unwrap(), 2);
        assert!(matches!(grid.synthesize(&other), Err(Error::GeometryMismatch(_))));
    }
}
