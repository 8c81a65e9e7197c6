//! Pointwise potentials V on R^d and their lifts to functionals on measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::ParticleMeasure;
use crate::vec_ops;

/// A flow map (x, t) -> position, boxed for trait-object registration.
pub type FlowMap = Box<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// Two-sided pointwise growth bound |V(x)| <= a |x|^r + b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseGrowth {
    pub a: f64,
    pub b: f64,
    pub r: f64,
}

/// A C^1 potential with an analytic gradient.
pub trait Potential: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Global Lipschitz constant, when one exists.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }

    /// Two-sided growth bound |V| <= a|x|^r + b.
    fn pointwise_growth(&self) -> Option<PointwiseGrowth> {
        None
    }

    /// One-sided bound V(x) <= a|x|^r + b. Defaults to the two-sided bound;
    /// potentials that are bounded above can do much better (a nonpositive
    /// potential has a = b = 0), which is what the discount gate consumes.
    fn upper_growth(&self) -> Option<PointwiseGrowth> {
        self.pointwise_growth()
    }

    /// True for the critical-growth family (r = p) that is known to keep a
    /// finite value function despite failing the r < p gate.
    fn admits_critical_growth(&self) -> bool {
        false
    }

    /// A known action-minimizing flow map for this potential at the given
    /// exponent and discount, used as an optional warm start.
    fn closed_form_flow(&self, p: f64, delta: f64) -> Option<FlowMap> {
        let _ = (p, delta);
        None
    }
}

impl<P: Potential + ?Sized> Potential for &P {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn lipschitz_bound(&self) -> Option<f64> {
        (**self).lipschitz_bound()
    }
    fn pointwise_growth(&self) -> Option<PointwiseGrowth> {
        (**self).pointwise_growth()
    }
    fn upper_growth(&self) -> Option<PointwiseGrowth> {
        (**self).upper_growth()
    }
    fn admits_critical_growth(&self) -> bool {
        (**self).admits_critical_growth()
    }
    fn closed_form_flow(&self, p: f64, delta: f64) -> Option<FlowMap> {
        (**self).closed_form_flow(p, delta)
    }
}

/// One monomial coeff * prod_i x_i^{powers_i}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// The potential families expressible in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnalyticPotential {
    Zero,
    /// V(x) = w . x + c
    Linear {
        w: Vec<f64>,
        c: f64,
    },
    /// V(x) = sign |x|^exponent / exponent
    Power {
        sign: f64,
        exponent: f64,
    },
    /// V(x) = sum of monomials
    Polynomial {
        coefficients: Vec<PolyTerm>,
    },
}

impl AnalyticPotential {
    pub fn linear(w: Vec<f64>, c: f64) -> Self {
        AnalyticPotential::Linear { w, c }
    }

    /// The attracting power-law well V(x) = -|x|^p / p.
    pub fn power_well(exponent: f64) -> Self {
        AnalyticPotential::Power {
            sign: -1.0,
            exponent,
        }
    }

    fn max_total_degree(terms: &[PolyTerm]) -> u32 {
        terms
            .iter()
            .map(|t| t.powers.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }
}

impl Potential for AnalyticPotential {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            AnalyticPotential::Zero => 0.0,
            AnalyticPotential::Linear { w, c } => vec_ops::dot(w, x) + c,
            AnalyticPotential::Power { sign, exponent } => {
                sign * vec_ops::norm(x).powf(*exponent) / exponent
            }
            AnalyticPotential::Polynomial { coefficients } => coefficients
                .iter()
                .map(|t| {
                    t.coeff
                        * t.powers
                            .iter()
                            .zip(x)
                            .map(|(&e, &xi)| xi.powi(e as i32))
                            .product::<f64>()
                })
                .sum(),
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            AnalyticPotential::Zero => vec![0.0; x.len()],
            AnalyticPotential::Linear { w, .. } => w.clone(),
            AnalyticPotential::Power { sign, exponent } => {
                let n = vec_ops::norm(x);
                if n == 0.0 {
                    return vec![0.0; x.len()];
                }
                vec_ops::scale(x, sign * n.powf(exponent - 2.0))
            }
            AnalyticPotential::Polynomial { coefficients } => {
                let d = x.len();
                let mut g = vec![0.0; d];
                for t in coefficients {
                    for (a, slot) in g.iter_mut().enumerate() {
                        let e = t.powers.get(a).copied().unwrap_or(0);
                        if e == 0 {
                            continue;
                        }
                        let mut partial = t.coeff * e as f64;
                        for (b, &xb) in x.iter().enumerate() {
                            let eb = t.powers.get(b).copied().unwrap_or(0);
                            let pow = if b == a { eb - 1 } else { eb };
                            partial *= xb.powi(pow as i32);
                        }
                        *slot += partial;
                    }
                }
                g
            }
        }
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        match self {
            AnalyticPotential::Zero => Some(0.0),
            AnalyticPotential::Linear { w, .. } => Some(vec_ops::norm(w)),
            AnalyticPotential::Power { exponent, .. } => {
                if *exponent == 1.0 {
                    Some(1.0)
                } else {
                    None
                }
            }
            AnalyticPotential::Polynomial { coefficients } => {
                if Self::max_total_degree(coefficients) <= 1 {
                    let dim = coefficients.iter().map(|t| t.powers.len()).max()?;
                    let mut g = vec![0.0; dim];
                    for t in coefficients {
                        if let Some(a) = t.powers.iter().position(|&e| e == 1) {
                            g[a] += t.coeff;
                        }
                    }
                    Some(vec_ops::norm(&g))
                } else {
                    None
                }
            }
        }
    }

    fn pointwise_growth(&self) -> Option<PointwiseGrowth> {
        match self {
            AnalyticPotential::Zero => Some(PointwiseGrowth {
                a: 0.0,
                b: 0.0,
                r: 1.0,
            }),
            AnalyticPotential::Linear { w, c } => Some(PointwiseGrowth {
                a: vec_ops::norm(w),
                b: c.abs(),
                r: 1.0,
            }),
            AnalyticPotential::Power { exponent, .. } => Some(PointwiseGrowth {
                a: 1.0 / exponent,
                b: 0.0,
                r: *exponent,
            }),
            AnalyticPotential::Polynomial { coefficients } => {
                // |c prod x_i^{e_i}| <= |c| max(1, |x|)^{deg} <= |c| (1 + |x|^deg_max)
                let r = Self::max_total_degree(coefficients).max(1) as f64;
                let a: f64 = coefficients
                    .iter()
                    .filter(|t| t.powers.iter().sum::<u32>() >= 1)
                    .map(|t| t.coeff.abs())
                    .sum();
                let b: f64 = coefficients.iter().map(|t| t.coeff.abs()).sum();
                Some(PointwiseGrowth { a, b, r })
            }
        }
    }

    fn upper_growth(&self) -> Option<PointwiseGrowth> {
        match self {
            // A nonpositive potential needs no growth allowance from above.
            AnalyticPotential::Power { sign, .. } if *sign <= 0.0 => Some(PointwiseGrowth {
                a: 0.0,
                b: 0.0,
                r: 1.0,
            }),
            other => other.pointwise_growth(),
        }
    }

    fn admits_critical_growth(&self) -> bool {
        // Only the attracting well stays finite at critical growth; the
        // repelling sign genuinely diverges below the gate.
        matches!(self, AnalyticPotential::Power { sign, .. } if *sign <= 0.0)
    }

    fn closed_form_flow(&self, p: f64, delta: f64) -> Option<FlowMap> {
        match self {
            AnalyticPotential::Linear { w, c } => {
                let cf = crate::classical::closed_form_linear(w, *c, delta, p).ok()?;
                Some(Box::new(move |x, t| cf.flow(x, t)))
            }
            AnalyticPotential::Power { sign, exponent }
                if *sign == -1.0 && (*exponent - p).abs() < 1e-12 =>
            {
                let cf = crate::classical::closed_form_power(p, delta).ok()?;
                Some(Box::new(move |x, t| cf.flow(x, t)))
            }
            _ => None,
        }
    }
}

/// Measure-level growth certificate: V(mu) <= alpha W_p(mu, reference)^p + beta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub alpha: f64,
    pub beta: f64,
    pub reference: ParticleMeasure,
}

impl GrowthCertificate {
    /// Converts a pointwise bound V <= a|x|^r + b with r < p into a W_p-based
    /// certificate against the Dirac at the origin, tuning alpha so the
    /// discount-validity margin p (2p/delta)^p alpha lands at 1/2. For r = p
    /// the bound is passed through unchanged (alpha = a).
    ///
    /// Uses sum w_i |x_i|^r <= (sum w_i |x_i|^p)^{r/p} and then, for s >= 0,
    /// a s^r <= alpha s^p + a (1 - r/p) (a r / (alpha p))^{r/(p-r)}.
    pub fn from_upper_growth(
        g: PointwiseGrowth,
        p: f64,
        delta: f64,
        dimension: usize,
    ) -> Option<Self> {
        let reference = ParticleMeasure::dirac(vec![0.0; dimension]).ok()?;
        if g.a == 0.0 {
            return Some(GrowthCertificate {
                alpha: 0.0,
                beta: g.b,
                reference,
            });
        }
        if g.r > p {
            return None;
        }
        if g.r == p {
            return Some(GrowthCertificate {
                alpha: g.a,
                beta: g.b,
                reference,
            });
        }
        let alpha = 0.5 / (p * (2.0 * p / delta).powf(p));
        let shift = g.a * (1.0 - g.r / p) * (g.a * g.r / (alpha * p)).powf(g.r / (p - g.r));
        Some(GrowthCertificate {
            alpha,
            beta: g.b + shift,
            reference,
        })
    }
}

/// A functional on particle measures with enough structure for the direct
/// solver: evaluation plus the gradient field evaluated at each atom, i.e.
/// the first variation along (id + eps eta)# perturbations.
pub trait MeasurePotential: Send + Sync {
    fn value(&self, mu: &ParticleMeasure) -> f64;

    /// Gradient of the first variation at atom i: the limit of
    /// [V((id + eps eta)# mu) - V(mu)] / eps equals
    /// sum_i w_i particle_gradient(mu, i) . eta(x_i).
    fn particle_gradient(&self, mu: &ParticleMeasure, i: usize) -> Vec<f64>;

    /// Measure-level growth certificate for value bounds and the discount
    /// validity gate.
    fn growth(&self, p: f64, delta: f64, dimension: usize) -> Option<GrowthCertificate> {
        let _ = (p, delta, dimension);
        None
    }

    /// The underlying pointwise potential when the functional is the plain
    /// average V(mu) = int V dmu.
    fn as_simple(&self) -> Option<&dyn Potential> {
        None
    }
}

impl<M: MeasurePotential + ?Sized> MeasurePotential for &M {
    fn value(&self, mu: &ParticleMeasure) -> f64 {
        (**self).value(mu)
    }
    fn particle_gradient(&self, mu: &ParticleMeasure, i: usize) -> Vec<f64> {
        (**self).particle_gradient(mu, i)
    }
    fn growth(&self, p: f64, delta: f64, dimension: usize) -> Option<GrowthCertificate> {
        (**self).growth(p, delta, dimension)
    }
    fn as_simple(&self) -> Option<&dyn Potential> {
        (**self).as_simple()
    }
}

/// The lift of a pointwise potential: V(mu) = sum_i w_i V(x_i).
pub struct SimpleLift<P: Potential> {
    inner: P,
}

impl<P: Potential> SimpleLift<P> {
    pub fn potential(&self) -> &P {
        &self.inner
    }
}

/// Lifts V to the simple measure functional int V dmu.
pub fn simple_potential_lift<P: Potential>(potential: P) -> SimpleLift<P> {
    SimpleLift { inner: potential }
}

impl<P: Potential> MeasurePotential for SimpleLift<P> {
    fn value(&self, mu: &ParticleMeasure) -> f64 {
        mu.points()
            .iter()
            .zip(mu.weights())
            .map(|(x, w)| w * self.inner.value(x))
            .sum()
    }

    fn particle_gradient(&self, mu: &ParticleMeasure, i: usize) -> Vec<f64> {
        self.inner.gradient(mu.point(i))
    }

    fn growth(&self, p: f64, delta: f64, dimension: usize) -> Option<GrowthCertificate> {
        GrowthCertificate::from_upper_growth(self.inner.upper_growth()?, p, delta, dimension)
    }

    fn as_simple(&self) -> Option<&dyn Potential> {
        Some(&self.inner)
    }
}

/// The zero functional, convenient in tests and defaults.
pub struct ZeroMeasurePotential;

impl MeasurePotential for ZeroMeasurePotential {
    fn value(&self, _mu: &ParticleMeasure) -> f64 {
        0.0
    }
    fn particle_gradient(&self, mu: &ParticleMeasure, _i: usize) -> Vec<f64> {
        vec![0.0; mu.dimension()]
    }
    fn growth(&self, _p: f64, _delta: f64, dimension: usize) -> Option<GrowthCertificate> {
        Some(GrowthCertificate {
            alpha: 0.0,
            beta: 0.0,
            reference: ParticleMeasure::dirac(vec![0.0; dimension]).ok()?,
        })
    }
}

/// Validates a numerically supplied gradient against central differences of
/// `value` at the given sample points. Returns the worst relative error.
pub fn gradient_consistency<P: Potential + ?Sized>(
    pot: &P,
    samples: &[Vec<f64>],
    h: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in samples {
        let g = pot.gradient(x);
        for a in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[a] += h;
            xm[a] -= h;
            let fd = (pot.value(&xp) - pot.value(&xm)) / (2.0 * h);
            if !fd.is_finite() || !g[a].is_finite() {
                return Err(Error::NonFinite("potential gradient check"));
            }
            let scale = 1.0 + fd.abs().max(g[a].abs());
            worst = worst.max((fd - g[a]).abs() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_potential_evaluates_and_differentiates() {
        let v = AnalyticPotential::linear(vec![1.0, -2.0], 0.5);
        assert_eq!(v.value(&[1.0, 1.0]), -0.5);
        assert_eq!(v.gradient(&[3.0, 4.0]), vec![1.0, -2.0]);
        assert_eq!(v.lipschitz_bound(), Some((5.0f64).sqrt()));
    }

    #[test]
    fn power_well_matches_formula() {
        let v = AnalyticPotential::power_well(2.0);
        assert!((v.value(&[3.0, 4.0]) + 12.5).abs() < 1e-12);
        let g = v.gradient(&[3.0, 4.0]);
        assert!((g[0] + 3.0).abs() < 1e-12 && (g[1] + 4.0).abs() < 1e-12);
        assert_eq!(v.gradient(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let candidates: Vec<Box<dyn Potential>> = vec![
            Box::new(AnalyticPotential::Zero),
            Box::new(AnalyticPotential::linear(vec![0.3, -1.1, 2.0], 0.7)),
            Box::new(AnalyticPotential::power_well(3.0)),
            Box::new(AnalyticPotential::Polynomial {
                coefficients: vec![
                    PolyTerm {
                        coeff: 1.5,
                        powers: vec![2, 1, 0],
                    },
                    PolyTerm {
                        coeff: -0.25,
                        powers: vec![0, 0, 3],
                    },
                    PolyTerm {
                        coeff: 2.0,
                        powers: vec![1, 0, 0],
                    },
                ],
            }),
        ];
        let samples = vec![vec![0.4, -0.9, 1.3], vec![1.0, 2.0, -0.5]];
        for v in &candidates {
            let err = gradient_consistency(v.as_ref(), &samples, 1e-5).unwrap();
            assert!(err < 1e-5, "gradient mismatch {err}");
        }
    }

    #[test]
    fn simple_lift_averages_the_potential() {
        let v = AnalyticPotential::linear(vec![1.0, 0.0], 0.0);
        let lift = simple_potential_lift(v);
        let mu =
            ParticleMeasure::new(vec![vec![0.0, 0.0], vec![2.0, 0.0]], vec![0.5, 0.5]).unwrap();
        assert!((lift.value(&mu) - 1.0).abs() < 1e-12);
        assert_eq!(lift.particle_gradient(&mu, 1), vec![1.0, 0.0]);
    }

    #[test]
    fn zero_lift_is_identically_zero() {
        let lift = simple_potential_lift(AnalyticPotential::Zero);
        let mu = ParticleMeasure::dirac(vec![3.0]).unwrap();
        assert_eq!(lift.value(&mu), 0.0);
    }

    #[test]
    fn tuned_certificate_passes_the_discount_gate() {
        let g = PointwiseGrowth {
            a: 2.0,
            b: 0.3,
            r: 1.0,
        };
        let cert = GrowthCertificate::from_upper_growth(g, 2.0, 1.0, 2).unwrap();
        let margin = 2.0 * (4.0f64).powi(2) * cert.alpha;
        assert!((margin - 0.5).abs() < 1e-12);
        // The shifted intercept must still dominate the original bound:
        // a s^r + b <= alpha s^p + beta for a sample of s.
        for &s in &[0.0f64, 0.5, 1.0, 4.0, 60.0] {
            let lhs = g.a * s.powf(g.r) + g.b;
            let rhs = cert.alpha * s * s + cert.beta;
            assert!(lhs <= rhs + 1e-12, "s={s}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn nonpositive_power_well_needs_no_growth_allowance() {
        let v = AnalyticPotential::power_well(2.0);
        let up = v.upper_growth().unwrap();
        assert_eq!((up.a, up.b), (0.0, 0.0));
        assert!(v.admits_critical_growth());
    }

    #[test]
    fn perturbation_quotient_converges_to_the_lifted_gradient() {
        // [V((id + eps eta)# mu) - V(mu)] / eps -> sum_i w_i grad V(x_i) . eta(x_i),
        // checked at eps in {1e-2, 1e-3, 1e-4} with Richardson extrapolation.
        let v = AnalyticPotential::Polynomial {
            coefficients: vec![
                PolyTerm {
                    coeff: 0.8,
                    powers: vec![2, 0],
                },
                PolyTerm {
                    coeff: -0.3,
                    powers: vec![1, 1],
                },
            ],
        };
        let lift = simple_potential_lift(v);
        let mu = ParticleMeasure::new(
            vec![vec![0.5, -0.2], vec![-1.0, 0.7], vec![0.1, 0.1]],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        let eta = |x: &[f64]| vec![x[1].sin(), x[0] * 0.5 + 0.2];

        let expected: f64 = (0..mu.len())
            .map(|i| {
                mu.weight(i) * vec_ops::dot(&lift.particle_gradient(&mu, i), &eta(mu.point(i)))
            })
            .sum();

        let quotient = |eps: f64| {
            let pert = mu
                .map_points(|x| {
                    let e = eta(x);
                    vec_ops::add(x, &vec_ops::scale(&e, eps))
                })
                .unwrap();
            (lift.value(&pert) - lift.value(&mu)) / eps
        };
        let d1 = quotient(1e-2);
        let d2 = quotient(1e-3);
        let d3 = quotient(1e-4);
        let extrap = (10.0 * d3 - d2) / 9.0;
        assert!((extrap - expected).abs() < 1e-7, "{extrap} vs {expected}");
        assert!((d1 - expected).abs() > (d3 - expected).abs());
    }
}
