//! Admissible exponent triples and discrete mixed Lebesgue norms `L^p_T L^q_x L^r_y`.

use crate::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Scaling identity tolerance.
pub const SCALING_TOL: f64 = 1e-9;

/// A Lebesgue exponent in `[1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Finite(f64),
    #[serde(with = "infinity")]
    Infinite,
}

mod infinity {
    use serde::{Deserialize, Deserializer, Serializer};
    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("inf")
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let v = String::deserialize(d)?;
        if v == "inf" || v == "infinity" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {v:?}")))
        }
    }
}

impl Exponent {
    pub fn new(v: f64) -> Self {
        if v.is_infinite() {
            Exponent::Infinite
        } else {
            Exponent::Finite(v)
        }
    }

    /// `1/a`, with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(v) => 1.0 / v,
            Exponent::Infinite => 0.0,
        }
    }

    /// Hölder conjugate `a' = a/(a-1)`, `∞' = 1`, `1' = ∞`.
    pub fn conjugate(self) -> Self {
        match self {
            Exponent::Infinite => Exponent::Finite(1.0),
            Exponent::Finite(v) if v == 1.0 => Exponent::Infinite,
            Exponent::Finite(v) => Exponent::Finite(v / (v - 1.0)),
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(v) => v,
            Exponent::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(v) => write!(f, "{v}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Euclidean,
    Compact,
}

/// `γ_{q,r}`: `(d2+1)(½-1/r) + d1(½-1/q)` at `σ = 1`, `d2(2-σ)(½-1/r) + d1(½-1/q)` above.
pub fn gamma(q: Exponent, r: Exponent, sigma: f64, d1: usize, d2: usize) -> f64 {
    let dr = 0.5 - r.recip();
    let dq = 0.5 - q.recip();
    let y = if sigma == 1.0 { (d2 as f64 + 1.0) * dr } else { d2 as f64 * (2.0 - sigma) * dr };
    y + d1 as f64 * dq
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevGap {
    pub gamma_sob: f64,
    pub gamma_stri: f64,
    pub gap: f64,
}

/// Sobolev-embedding exponent versus the Strichartz loss.
pub fn sobolev_gap(q: Exponent, r: Exponent, sigma: f64, d1: usize, d2: usize) -> SobolevGap {
    let dr = 0.5 - r.recip();
    let gamma_sob = 2.0 * d2 as f64 * dr + d1 as f64 * (0.5 - q.recip());
    let gamma_stri = gamma(q, r, sigma, d1, d2);
    SobolevGap { gamma_sob, gamma_stri, gap: gamma_sob - gamma_stri }
}

/// `p` solving the scaling identity for given `(q, r)`; `None` if `p` falls outside `[1, ∞]`.
pub fn solve_p(q: Exponent, r: Exponent, sigma: f64, d1: usize, d2: usize) -> Option<Exponent> {
    let rhs = (d1 + 2 * d2) as f64 / 2.0 - gamma(q, r, sigma, d1, d2) - d1 as f64 * q.recip() - 2.0 * d2 as f64 * r.recip();
    let inv_p = rhs / (2.0 * sigma);
    if inv_p.abs() < 1e-15 {
        Some(Exponent::Infinite)
    } else if inv_p > 0.0 && inv_p <= 1.0 {
        Some(Exponent::Finite(1.0 / inv_p))
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleTriple {
    pub p: Exponent,
    pub q: Exponent,
    pub r: Exponent,
    pub sigma: f64,
    pub d1: usize,
    pub d2: usize,
    pub case: Case,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnosis {
    pub admissible: bool,
    pub reason: String,
}

impl AdmissibleTriple {
    pub fn new(p: f64, q: f64, r: f64, sigma: f64, d1: usize, d2: usize, case: Case) -> Self {
        Self { p: Exponent::new(p), q: Exponent::new(q), r: Exponent::new(r), sigma, d1, d2, case }
    }

    pub fn gamma(&self) -> f64 {
        gamma(self.q, self.r, self.sigma, self.d1, self.d2)
    }

    /// `2σ/p + d1/q + 2d2/r - ((d1+2d2)/2 - γ)`.
    pub fn scaling_residual(&self) -> f64 {
        2.0 * self.sigma * self.p.recip() + self.d1 as f64 * self.q.recip() + 2.0 * self.d2 as f64 * self.r.recip()
            - ((self.d1 + 2 * self.d2) as f64 / 2.0 - self.gamma())
    }

    fn is_sentinel(&self) -> bool {
        self.p.is_infinite() && self.q == Exponent::Finite(2.0) && self.r == Exponent::Finite(2.0)
    }

    pub fn is_admissible(&self) -> Diagnosis {
        let no = |reason: String| Diagnosis { admissible: false, reason };
        if self.is_sentinel() {
            return Diagnosis { admissible: true, reason: "sentinel (inf, 2, 2)".into() };
        }
        for (name, e) in [("p", self.p), ("q", self.q), ("r", self.r)] {
            if let Exponent::Finite(v) = e {
                if !(v >= 2.0) {
                    return no(format!("{name} = {v} below 2"));
                }
            }
        }
        if !(1.0..=2.0).contains(&self.sigma) {
            return no(format!("sigma = {} outside [1, 2]", self.sigma));
        }
        if self.sigma == 1.0 && self.d2 == 1 {
            return no("non-dispersive case excluded (sigma = 1, d2 = 1)".into());
        }
        let res = self.scaling_residual();
        if res.abs() > SCALING_TOL {
            return no(format!("scaling identity fails by {res:.3e}"));
        }
        let dr = 0.5 - self.r.recip();
        let d2 = self.d2 as f64;
        let upper = if self.sigma == 1.0 { 1.0 / (d2 - 1.0) } else { 1.0 / d2 };
        let lower = match self.case {
            Case::Euclidean => 1.0 / (2.0 * d2),
            Case::Compact => 1.0 / (2.0 * d2) + self.p.recip() / d2,
        };
        if !(dr < upper) {
            return no(format!("1/2 - 1/r = {dr} not below {upper}"));
        }
        if !(dr > lower) {
            return no(format!("1/2 - 1/r = {dr} not above {lower}"));
        }
        Diagnosis { admissible: true, reason: "window and scaling satisfied".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub r: f64,
    pub q: f64,
    pub p: f64,
    pub gamma: f64,
    pub gamma_sob: f64,
    pub gap: f64,
}

/// Sweep `r` across the open window at `q = 2`, solving for `p`.
///
/// The sweep contains every point `1/2 - 1/r = lower + j (upper - lower)/(n+1)` and also
/// any `r` from `extra_r` that lands inside the window.
pub fn admissibility_table(d1: usize, d2: usize, sigma: f64, case: Case, n: usize, extra_r: &[f64]) -> Vec<TableRow> {
    let q = Exponent::Finite(2.0);
    let d2f = d2 as f64;
    let upper = if sigma == 1.0 { if d2 == 1 { 0.0 } else { (1.0 / (d2f - 1.0)).min(0.5) } } else { 1.0 / d2f };
    let upper = upper.min(0.5);
    let lower = 1.0 / (2.0 * d2f);
    let mut rs: Vec<f64> = (1..=n)
        .map(|j| {
            let dr = lower + (upper - lower) * j as f64 / (n as f64 + 1.0);
            let r = 1.0 / (0.5 - dr);
            // integer r landed on by the sweep should print as that integer
            if (r - r.round()).abs() <= 1e-9 * r { r.round() } else { r }
        })
        .filter(|r| r.is_finite())
        .collect();
    rs.extend(extra_r.iter().copied());
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    rs.into_iter()
        .filter_map(|r| {
            let re = Exponent::new(r);
            let p = solve_p(q, re, sigma, d1, d2)?;
            let t = AdmissibleTriple { p, q, r: re, sigma, d1, d2, case };
            if !t.is_admissible().admissible {
                return None;
            }
            let g = sobolev_gap(q, re, sigma, d1, d2);
            Some(TableRow { r, q: 2.0, p: p.value(), gamma: g.gamma_stri, gamma_sob: g.gamma_sob, gap: g.gap })
        })
        .collect()
}

/// One time slice sampled on an `x` rule times a `y` rule, values stored `[x][y]`.
#[derive(Debug, Clone, Copy)]
pub struct Slice<'a> {
    pub values: &'a [Complex64],
    pub x_weights: &'a [f64],
    pub y_weights: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub p: Exponent,
    pub q: Exponent,
    pub r: Exponent,
}

/// Norm of a nonnegative sample vector under a weighted rule.
pub fn weighted_lp(vals: impl Iterator<Item = f64>, weights: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinite => vals.fold(0.0, f64::max),
        Exponent::Finite(p) => vals.zip(weights).map(|(v, w)| w * v.powf(p)).sum::<f64>().powf(1.0 / p),
    }
}

/// `‖·‖_{L^r_y}` then `‖·‖_{L^q_x}` of one slice.
pub fn slice_norm(s: &Slice<'_>, q: Exponent, r: Exponent) -> f64 {
    let ny = s.y_weights.len();
    let inner: Vec<f64> =
        s.values.chunks(ny).map(|row| weighted_lp(row.iter().map(|v| v.norm()), s.y_weights, r)).collect();
    weighted_lp(inner.into_iter(), s.x_weights, q)
}

/// `L^p_T` of per-slice values under time weights.
pub fn time_norm(per_slice: &[f64], time_weights: &[f64], p: Exponent) -> Result<f64> {
    if per_slice.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("mixed norm slice".into()));
    }
    let v = weighted_lp(per_slice.iter().copied(), time_weights, p);
    if !v.is_finite() {
        return Err(Error::Overflow("mixed norm".into()));
    }
    Ok(v)
}

/// Discrete `L^p_T L^q_x L^r_y`.
pub fn mixed_norm(slices: &[Slice<'_>], time_weights: &[f64], spec: &MixedNormSpec) -> Result<f64> {
    if slices.len() != time_weights.len() {
        return Err(Error::LengthMismatch { expected: slices.len(), got: time_weights.len() });
    }
    let per: Vec<f64> = crate::par::map_slice(slices, |s| slice_norm(s, spec.q, spec.r));
    time_norm(&per, time_weights, spec.p)
}

/// Trapezoid weights on a uniform grid of `n` points over `[0, t]`.
pub fn trapezoid_weights(n: usize, t: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let h = t / (n - 1) as f64;
    (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: f64) -> Exponent {
        Exponent::new(v)
    }

    #[test]
    fn gamma_examples() {
        for s in [1.0, 1.3, 2.0] {
            assert_eq!(gamma(e(2.0), e(2.0), s, 1, 2), 0.0);
        }
        assert!((gamma(e(2.0), e(6.0), 1.0, 1, 2) - 1.0).abs() < 1e-15);
        assert!((gamma(e(2.0), e(6.0), 1.5, 1, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn admissibility_examples() {
        let t = AdmissibleTriple::new(6.0, 2.0, 6.0, 1.0, 1, 2, Case::Euclidean);
        assert!(t.is_admissible().admissible);
        assert!(t.scaling_residual().abs() < 1e-12);
        let s = AdmissibleTriple::new(f64::INFINITY, 2.0, 2.0, 1.0, 1, 1, Case::Compact);
        assert!(s.is_admissible().admissible);
        let b = AdmissibleTriple::new(4.0, 2.0, 4.0, 1.0, 1, 2, Case::Euclidean);
        assert!(!b.is_admissible().admissible);
        let nd = AdmissibleTriple::new(6.0, 2.0, 6.0, 1.0, 1, 1, Case::Euclidean);
        assert!(nd.is_admissible().reason.contains("non-dispersive"));
    }

    #[test]
    fn sweep_then_perturb() {
        for (d2, sigma) in [(2, 1.0), (3, 1.0), (2, 1.5), (3, 1.75)] {
            let rows = admissibility_table(1, d2, sigma, Case::Euclidean, 25, &[]);
            assert!(!rows.is_empty());
            for row in rows {
                let t = AdmissibleTriple::new(row.p, 2.0, row.r, sigma, 1, d2, Case::Euclidean);
                assert!(t.is_admissible().admissible);
                let bumped = AdmissibleTriple::new(row.p + 0.01, 2.0, row.r, sigma, 1, d2, Case::Euclidean);
                assert!(!bumped.is_admissible().admissible);
            }
        }
    }

    #[test]
    fn gaps() {
        let g = sobolev_gap(e(2.0), e(2.0), 1.0, 1, 2);
        assert_eq!(g.gap, 0.0);
        let g = sobolev_gap(e(2.0), e(6.0), 1.0, 1, 2);
        assert!((g.gamma_sob - 4.0 / 3.0).abs() < 1e-15);
        assert!((g.gamma_stri - 1.0).abs() < 1e-15);
        assert!((g.gap - 1.0 / 3.0).abs() < 1e-15);
        let g = sobolev_gap(e(2.0), e(6.0), 1.5, 1, 2);
        assert!((g.gap - 1.0).abs() < 1e-15);
        for r in [2.5, 4.0, 10.0] {
            assert!(sobolev_gap(e(2.0), e(r), 1.0, 1, 3).gap > 0.0);
        }
    }

    #[test]
    fn gamma_monotone() {
        for sigma in [1.0, 1.5, 2.0] {
            let mut prev = -1.0;
            for i in 0..50 {
                let r = 2.0 + i as f64;
                let g = gamma(e(2.0), e(r), sigma, 1, 2);
                assert!(g >= prev);
                prev = g;
            }
        }
    }

    #[test]
    fn table_contains_r6_row() {
        let rows = admissibility_table(1, 2, 1.0, Case::Euclidean, 9, &[6.0]);
        let row = rows.iter().find(|r| (r.r - 6.0).abs() < 1e-12).unwrap();
        assert!((row.p - 6.0).abs() < 1e-12);
        assert!((row.gamma - 1.0).abs() < 1e-12);
        assert!((row.gamma_sob - 4.0 / 3.0).abs() < 1e-12);
        assert!((row.gap - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn conjugates() {
        assert_eq!(Exponent::Infinite.conjugate(), Exponent::Finite(1.0));
        assert_eq!(Exponent::Finite(1.0).conjugate(), Exponent::Infinite);
        assert_eq!(Exponent::Finite(2.0).conjugate(), Exponent::Finite(2.0));
    }

    #[test]
    fn separable_mixed_norm() {
        // u = φ(x)ψ(y), φ = e^{-x²}, ψ = 1 + cos y on a y-period, constant in t
        let (xi, wi) = crate::quadrature::gauss_hermite(40);
        let ny = 64;
        let h = 2.0 * std::f64::consts::PI / ny as f64;
        let yw = vec![h; ny];
        let vals: Vec<Complex64> = xi
            .iter()
            .flat_map(|x| (0..ny).map(move |j| Complex64::from((-x * x).exp() * (1.0 + (j as f64 * h).cos()))))
            .collect();
        let slices: Vec<Slice> = (0..11).map(|_| Slice { values: &vals, x_weights: &wi, y_weights: &yw }).collect();
        let tw = trapezoid_weights(11, 2.0);
        let spec = MixedNormSpec { p: e(4.0), q: e(2.0), r: e(2.0) };
        let got = mixed_norm(&slices, &tw, &spec).unwrap();
        let phi = (std::f64::consts::PI / 2.0).powf(0.25);
        let psi = (3.0 * std::f64::consts::PI).sqrt();
        assert!((got - 2f64.powf(0.25) * phi * psi).abs() < 1e-6);
        let zero = vec![Complex64::new(0.0, 0.0); vals.len()];
        let z: Vec<Slice> = vec![Slice { values: &zero, x_weights: &wi, y_weights: &yw }];
        assert_eq!(mixed_norm(&z, &[1.0], &spec).unwrap(), 0.0);
    }

    #[test]
    fn overflow_reported() {
        let v = [Complex64::new(f64::INFINITY, 0.0)];
        let s = [Slice { values: &v, x_weights: &[1.0], y_weights: &[1.0] }];
        let spec = MixedNormSpec { p: e(2.0), q: e(2.0), r: e(2.0) };
        assert!(matches!(mixed_norm(&s, &[1.0], &spec), Err(Error::Overflow(_))));
    }
}
