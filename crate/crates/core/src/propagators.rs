//! Exact linear flows as diagonal multipliers on `(m, |η|)`.

use crate::spectral_field::EtaMultiplier;
use crate::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};

/// Which equation the flow solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    /// `i∂_t u + Δ_G u = 0` (and its fractional power): multiplier `e^{-itω}`.
    Schrodinger,
    /// `i∂_t u + (-Δ_G)^σ u = 0`: multiplier `e^{+itω}`.
    Fractional,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Schrodinger => -1.0,
            Sign::Fractional => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Variant {
    /// Symbol `((2m+d1)|η|)^σ` with each coefficient's own mode.
    Full,
    /// Symbol `((2m0+d1)|η|)^σ` with the mode frozen at `m0`.
    Modewise(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorSpec {
    pub sigma: f64,
    pub t: f64,
    pub variant: Variant,
    pub sign: Sign,
}

impl PropagatorSpec {
    pub fn new(sigma: f64, t: f64) -> Self {
        Self { sigma, t, variant: Variant::Full, sign: Sign::Schrodinger }
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    pub fn modewise(mut self, m: usize) -> Self {
        self.variant = Variant::Modewise(m);
        self
    }

    pub fn at(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn validate(&self, m_max: usize) -> Result<()> {
        if !(1.0..=2.0).contains(&self.sigma) {
            return Err(Error::InvalidArgument(format!("sigma = {} outside [1, 2]", self.sigma)));
        }
        if !self.t.is_finite() {
            return Err(Error::InvalidArgument("time must be finite".into()));
        }
        if let Variant::Modewise(m) = self.variant {
            if m > m_max {
                return Err(Error::InvalidArgument(format!("modewise mode {m} above m_max {m_max}")));
            }
        }
        Ok(())
    }

    /// Frequency `ω = (λ|η|)^σ` of a coefficient in mode `m`.
    #[inline]
    pub fn omega(&self, m: usize, eta: f64, d1: usize) -> f64 {
        let mm = match self.variant {
            Variant::Full => m,
            Variant::Modewise(m0) => m0,
        };
        let l = (2 * mm + d1) as f64 * eta;
        if l == 0.0 {
            0.0
        } else {
            l.powf(self.sigma)
        }
    }

    #[inline]
    pub fn multiplier(&self, m: usize, eta: f64, d1: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.sign.factor() * self.t * self.omega(m, eta, d1))
    }
}

pub fn evolve<F: EtaMultiplier>(field: &F, spec: &PropagatorSpec) -> Result<F> {
    spec.validate(field.m_max())?;
    let d1 = field.d1();
    Ok(field.map_symbol(|m, e, c| c * spec.multiplier(m, e, d1)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectReport {
    pub max_defect: f64,
    pub steps: usize,
}

/// Exact flow plus an RK4 integration of `f' = ±iω f` with step `dt_ref`.
pub fn evolve_checked<F: EtaMultiplier>(field: &F, spec: &PropagatorSpec, dt_ref: f64) -> Result<(F, DefectReport)> {
    if !(dt_ref > 0.0) {
        return Err(Error::InvalidArgument("dt_ref must be positive".into()));
    }
    let exact = evolve(field, spec)?;
    let steps = ((spec.t.abs() / dt_ref).ceil() as usize).max(1);
    let h = spec.t / steps as f64;
    let d1 = field.d1();
    let rk = field.map_symbol(|m, e, c| {
        let z = Complex64::new(0.0, spec.sign.factor() * spec.omega(m, e, d1));
        let rhs = |v: Complex64| z * v;
        let mut v = c;
        for _ in 0..steps {
            let k1 = rhs(v);
            let k2 = rhs(v + k1 * (h / 2.0));
            let k3 = rhs(v + k2 * (h / 2.0));
            let k4 = rhs(v + k3 * h);
            v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        v
    });
    let worst = exact
        .values()
        .iter()
        .zip(rk.values().iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    Ok((exact, DefectReport { max_defect: worst, steps }))
}

/// `T = c / ((m+1) A^{σ-1})`.
pub fn modewise_timescale(m: usize, a: f64, sigma: f64, c: f64) -> f64 {
    c / ((m as f64 + 1.0) * a.powf(sigma - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::cutoff::DyadicCutoff;
    use crate::spectral_field::{Geometry, SpectralField};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field(seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpectralField::random(Geometry::torus(1, 2, 3).unwrap(), 3, 3, 3, &mut rng)
    }

    #[test]
    fn identity_at_zero_time() {
        let u = field(1);
        assert_eq!(evolve(&u, &PropagatorSpec::new(1.5, 0.0)).unwrap(), u);
    }

    #[test]
    fn full_period_phase() {
        // (2m+d1)|η| = 3·2 = 6 and t = π: e^{∓6πi} = 1
        let mut u = SpectralField::zeros(Geometry::torus(1, 2, 3).unwrap(), 2);
        u.set(1, 0, &[2, 0], Complex64::new(1.0, 0.0)).unwrap();
        for sign in [Sign::Schrodinger, Sign::Fractional] {
            let v = evolve(&u, &PropagatorSpec::new(1.0, std::f64::consts::PI).with_sign(sign)).unwrap();
            assert!((v.get(1, 0, &[2, 0]).unwrap() - 1.0).norm() < 1e-13);
        }
    }

    #[test]
    fn signs_are_opposite() {
        let mut u = SpectralField::zeros(Geometry::torus(1, 1, 3).unwrap(), 1);
        u.set(0, 0, &[1], Complex64::new(1.0, 0.0)).unwrap();
        let a = evolve(&u, &PropagatorSpec::new(1.0, 0.3)).unwrap().get(0, 0, &[1]).unwrap();
        let b = evolve(&u, &PropagatorSpec::new(1.0, 0.3).with_sign(Sign::Fractional)).unwrap().get(0, 0, &[1]).unwrap();
        assert!((a - Complex64::from_polar(1.0, -0.3)).norm() < 1e-15);
        assert!((b - a.conj()).norm() < 1e-15);
    }

    #[test]
    fn unitary_and_group_law() {
        let u = field(2);
        for sigma in [1.0, 1.5, 2.0] {
            let s = PropagatorSpec::new(sigma, 0.7);
            let a = evolve(&evolve(&u, &s).unwrap(), &s.at(1.1)).unwrap();
            let b = evolve(&u, &s.at(1.8)).unwrap();
            assert!(a.sub(&b).l2_norm() <= 1e-10 * u.l2_norm());
            assert!((evolve(&u, &s).unwrap().l2_norm() - u.l2_norm()).abs() <= 1e-12 * u.l2_norm());
            for sv in [0.0, 1.0, 2.0] {
                let e = evolve(&u, &s).unwrap().sobolev_norm(sv);
                assert!((e - u.sobolev_norm(sv)).abs() <= 1e-10 * u.sobolev_norm(sv));
            }
        }
    }

    #[test]
    fn commutes_with_cutoffs() {
        let u = field(3);
        let c = DyadicCutoff::default();
        let s = PropagatorSpec::new(1.25, 2.0);
        let a = evolve(&u.apply_cutoff(1, 2.0, &c), &s).unwrap();
        let b = evolve(&u, &s).unwrap().apply_cutoff(1, 2.0, &c);
        assert!(a.sub(&b).l2_norm() <= 1e-12 * u.l2_norm());
    }

    #[test]
    fn mode_freezing() {
        let u = field(4).project_mode(2);
        let s = PropagatorSpec::new(1.5, 0.9);
        assert_eq!(evolve(&u, &s).unwrap(), evolve(&u, &s.modewise(2)).unwrap());
        assert!(evolve(&u, &s.modewise(9)).is_err());
    }

    #[test]
    fn rk4_defect_order() {
        let mut u = SpectralField::zeros(Geometry::torus(1, 1, 2).unwrap(), 1);
        u.set(1, 0, &[2], Complex64::new(1.0, 0.0)).unwrap();
        let s = PropagatorSpec::new(1.0, 1.0);
        let (_, r) = evolve_checked(&u, &s, 1e-3).unwrap();
        assert!(r.max_defect < 1e-8);
        let (_, a) = evolve_checked(&u, &s, 0.02).unwrap();
        let (_, b) = evolve_checked(&u, &s, 0.01).unwrap();
        let order = (a.max_defect / b.max_defect).log2();
        assert!(order >= 3.5, "{order}");
        let z = SpectralField::zeros(Geometry::torus(1, 1, 2).unwrap(), 1);
        assert_eq!(evolve_checked(&z, &s, 0.1).unwrap().1.max_defect, 0.0);
    }

    #[test]
    fn timescales() {
        assert_eq!(modewise_timescale(0, 37.0, 1.0, 1.0), 1.0);
        assert!((modewise_timescale(3, 16.0, 2.0, 1.0) - 1.0 / 64.0).abs() < 1e-15);
        assert!((modewise_timescale(1, 4.0, 1.5, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sigma_range_checked() {
        assert!(evolve(&field(5), &PropagatorSpec::new(2.5, 1.0)).is_err());
    }
}
