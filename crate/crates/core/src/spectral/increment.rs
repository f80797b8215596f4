//! The measure-increment loop: while the orbit of `A` fails to fill a
//! `(1 - eps)`-fraction of the current component, spectral mass on
//! small-denominator rationals is converted into a denser sub-component.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use serde_json::{json, Value};

use super::components::{components_within, ErgodicComponent};
use super::measure::{spectral_measure_on, MASS_TOLERANCE};
use super::orbit::{directional_union, polynomial_union, primitive_direction_classes};
use super::system::{CyclicProductSystem, GroupSet};
use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::intpoly::IntPolynomialMap;
use crate::json;

/// Which orbits must fill the component.
#[derive(Clone, Debug, PartialEq)]
pub enum IncrementMode {
    /// `union_n T^{n v} A` for some primitive `v`.
    Directional,
    /// `union_n T^{P(n)} A`.
    Polynomial(IntPolynomialMap),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncrementOptions {
    pub epsilon: f64,
    pub max_steps: usize,
}

impl IncrementOptions {
    pub fn new(epsilon: f64) -> Self {
        IncrementOptions { epsilon, max_steps: 64 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IncrementStatus {
    /// The orbit fills more than `1 - eps` of the final component.
    Expanded,
    /// Directional mode only: no denominator carries the required mass, so no
    /// increment is available although expansion still fails.
    Saturated,
    /// The step limit was reached first.
    IterationCap,
}

impl IncrementStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            IncrementStatus::Expanded => "expanded",
            IncrementStatus::Saturated => "saturated",
            IncrementStatus::IterationCap => "iteration_cap",
        }
    }
}

/// One pass to a denser sub-component.
#[derive(Clone, Debug, PartialEq)]
pub struct IncrementStep {
    /// Smallest `M` with `sigma(Rat(M)) >= kappa` on the current component.
    pub m: u64,
    pub k_step: u64,
    pub kappa: f64,
    /// `nu(A)` on the component the step starts from.
    pub nu: BigRational,
    /// `nu(A)` on the chosen sub-component.
    pub nu_next: BigRational,
    pub rat_mass: f64,
    /// `nu` of the orbit of `A` under the current sub-action (rescaled polynomial
    /// `P^i(n) = P(K n) / K`, or directions scaled by `K`).
    pub union_measure: BigRational,
    /// Polynomial mode: `nu(union_n T^{P(n)} A)` for the original polynomial.
    pub full_union: Option<BigRational>,
    /// `sqrt(nu^2 + sigma(Rat(M)))`, the increment guaranteed for `k <= M!`.
    pub target: f64,
    pub representative: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncrementTrace {
    pub mode: String,
    pub epsilon: f64,
    pub initial_measure: BigRational,
    pub steps: Vec<IncrementStep>,
    pub status: IncrementStatus,
    /// Product of the `k_step` values.
    pub final_k: u64,
    pub final_nu: BigRational,
    pub final_union: BigRational,
    pub final_representative: Vec<u64>,
    /// Directional mode: a primitive direction achieving `final_union`.
    pub direction: Option<Vec<i64>>,
    /// `ceil(3 (1 - mu(A)) / kappa_min)`, the a-priori bound on the number of steps.
    pub step_bound: u64,
}

impl IncrementTrace {
    pub fn to_json(&self) -> Value {
        let steps: Vec<Value> = self
            .steps
            .iter()
            .map(|s| {
                json!({
                    "M": s.m,
                    "k_step": s.k_step,
                    "kappa": s.kappa,
                    "nu_A": json::rational(&s.nu),
                    "nu_A_next": json::rational(&s.nu_next),
                    "k_step_bound": (2..=s.m).map(BigInt::from).product::<BigInt>().to_string(),
                    "increment_target": s.target,
                    "rat_mass": s.rat_mass,
                    "union_measure": json::rational(&s.union_measure),
                    "full_union_measure": s.full_union.as_ref().map(json::rational),
                    "component_representative": s.representative,
                })
            })
            .collect();
        json!({
            "mode": self.mode,
            "epsilon": self.epsilon,
            "initial_measure": json::rational(&self.initial_measure),
            "steps": steps,
            "status": self.status.as_str(),
            "final_k": self.final_k,
            "final_nu_A": json::rational(&self.final_nu),
            "final_union_measure": json::rational(&self.final_union),
            "final_component_representative": self.final_representative,
            "direction": self.direction,
            "step_bound": self.step_bound,
        })
    }
}

/// `sqrt(mu^2 + kappa) >= mu + kappa/3` whenever `0 <= mu <= 1` and `0 <= kappa <= 1 - mu^2`.
pub fn increment_inequality_holds(mu: f64, kappa: f64) -> bool {
    (mu * mu + kappa).sqrt() >= mu + kappa / 3.0 - 1e-15
}

/// Directional `kappa(delta, eps) = gamma / 2` with `gamma = delta^2 eps / (2 (1 - eps))`,
/// which makes `delta^2 / (delta^2 + gamma) > 1 - eps`.
pub fn directional_kappa(delta: f64, epsilon: f64) -> f64 {
    let gamma = delta * delta * epsilon / (2.0 * (1.0 - epsilon));
    gamma / 2.0
}

/// `min(M!, cap)`.
fn factorial_capped(m: u64, cap: u64) -> u64 {
    let mut f = 1u64;
    for j in 2..=m {
        f = f.saturating_mul(j);
        if f >= cap {
            return cap;
        }
    }
    f
}

fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut i = 1;
    while i * i <= n {
        if n.is_multiple_of(i) {
            small.push(i);
            if i * i != n {
                large.push(n / i);
            }
        }
        i += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

struct Check {
    union: BigRational,
    direction: Option<Vec<i64>>,
}

/// Measure, relative to `comp`, of the orbit of `A` under the sub-action of step `K`:
/// `union_n T^{P(K n)} A` or the best `union_n T^{n K v} A`.
fn check_expansion(
    sys: &CyclicProductSystem,
    a: &Bitset,
    comp: &ErgodicComponent,
    mode: &IncrementMode,
    full_union: Option<&Bitset>,
    directions: &[Vec<i64>],
) -> Result<Check> {
    let k = comp.step;
    match mode {
        IncrementMode::Polynomial(p) => {
            let union = if k == 1 {
                full_union.expect("polynomial union computed up front").clone()
            } else {
                // T_i^{P^i(n)} = T^{K P(K n) / K} = T^{P(K n)}
                polynomial_union(sys, a, &scaled_by(&p.rescale(k)?, k))?
            };
            if let Some(full) = full_union {
                if union.intersection_count(full) != union.count() {
                    return Err(Error::Invariant("sub-action orbit leaves the full polynomial orbit".into()));
                }
            }
            Ok(Check { union: comp.relative_measure(&union), direction: None })
        }
        IncrementMode::Directional => {
            let mut best: Option<(BigRational, Vec<i64>)> = None;
            for v in directions {
                let kv: Vec<i64> = v.iter().map(|&c| c * k as i64).collect();
                let u = comp.relative_measure(&directional_union(sys, a, &kv)?);
                if best.as_ref().is_none_or(|(b, _)| &u > b) {
                    best = Some((u, v.clone()));
                }
            }
            let (union, v) = best.ok_or_else(|| Error::Invariant("no direction classes".into()))?;
            Ok(Check { union, direction: Some(v) })
        }
    }
}

/// Runs the increment loop on an ergodic system.
pub fn increment_run(sys: &CyclicProductSystem, a: &GroupSet, mode: &IncrementMode, opts: &IncrementOptions) -> Result<IncrementTrace> {
    if !(opts.epsilon > 0.0 && opts.epsilon < 1.0) {
        return Err(Error::Precondition("epsilon must lie in (0, 1)".into()));
    }
    let whole = ErgodicComponent::whole(sys)?;
    let bits = a.to_bitset(sys)?;
    let mu = a.measure(sys);
    if mu.is_zero() {
        return Err(Error::Precondition("A must have positive measure".into()));
    }
    let (mode_name, poly_union, directions) = match mode {
        IncrementMode::Polynomial(p) => {
            if p.dimension() != sys.dim() {
                return Err(Error::DimensionMismatch { expected: sys.dim(), got: p.dimension() });
            }
            if !p.has_zero_constant_term() {
                return Err(Error::Precondition("polynomial must have zero constant term".into()));
            }
            let rank = p.component_rank().rank;
            if rank != p.dimension() {
                return Err(Error::RankDeficient { rank, required: p.dimension() });
            }
            (format!("polynomial {p}"), Some(polynomial_union(sys, &bits, p)?), Vec::new())
        }
        IncrementMode::Directional => {
            if sys.dim() < 2 {
                return Err(Error::Precondition("directional mode needs an action of rank at least 2".into()));
            }
            ("directional".to_string(), None, primitive_direction_classes(sys)?)
        }
    };
    let eps = opts.epsilon;
    let threshold = BigRational::one()
        - BigRational::from_f64(eps).ok_or_else(|| Error::Precondition("epsilon is not finite".into()))?;
    let delta = mu.to_f64().unwrap_or(0.0);
    let kappa_min = match mode {
        IncrementMode::Polynomial(_) => delta * delta * eps * eps / 4.0,
        IncrementMode::Directional => directional_kappa(delta, eps),
    };
    let step_bound = (3.0 * (1.0 - delta) / kappa_min).ceil().min(u64::MAX as f64) as u64;

    let mut comp = whole;
    let mut nu = mu.clone();
    let mut steps = Vec::new();
    let finish = |status, comp: &ErgodicComponent, nu: BigRational, check: Check, steps: Vec<IncrementStep>| IncrementTrace {
        mode: mode_name.clone(),
        epsilon: eps,
        initial_measure: mu.clone(),
        steps,
        status,
        final_k: comp.step,
        final_nu: nu,
        final_union: check.union,
        final_representative: sys.coords(comp.representative),
        direction: check.direction,
        step_bound,
    };

    loop {
        let check = check_expansion(sys, &bits, &comp, mode, poly_union.as_ref(), &directions)?;
        if check.union > threshold {
            return Ok(finish(IncrementStatus::Expanded, &comp, nu, check, steps));
        }
        if steps.len() >= opts.max_steps {
            return Ok(finish(IncrementStatus::IterationCap, &comp, nu, check, steps));
        }
        let nu_f = nu.to_f64().unwrap_or(0.0);
        let full_union_measure = poly_union.as_ref().map(|u| comp.relative_measure(u));
        let kappa = match mode {
            IncrementMode::Polynomial(_) => nu_f * nu_f * eps * eps / 4.0,
            IncrementMode::Directional => kappa_min,
        };
        let sigma = spectral_measure_on(sys, &comp, &GroupSet::Explicit(bits.clone()))?;
        let chosen_m = sigma.denominators(0.0).into_iter().filter(|&q| q > 1).find(|&q| sigma.rat_mass(q) >= kappa);
        let Some(m) = chosen_m else {
            return match mode {
                IncrementMode::Directional => Ok(finish(IncrementStatus::Saturated, &comp, nu, check, steps)),
                IncrementMode::Polynomial(_) => Err(Error::Invariant(format!(
                    "polynomial expansion fails yet no denominator carries kappa = {kappa}"
                ))),
            };
        };
        let rat_mass = sigma.rat_mass(m);
        let target = (nu_f * nu_f + rat_mass).sqrt();
        let exponent = comp.generator_exponent(sys);
        // components of T^{K k} on C depend on k only through gcd(k, exponent)
        let ceiling = factorial_capped(m, exponent);
        let mut picked = None;
        for k in divisors(exponent).into_iter().filter(|&k| k <= ceiling) {
            let subs = components_within(sys, &comp, k)?;
            let best = subs
                .into_iter()
                .map(|c| (c.relative_measure(&bits), c))
                .fold(None::<(BigRational, ErgodicComponent)>, |acc, (v, c)| match acc {
                    Some((bv, bc)) if bv >= v => Some((bv, bc)),
                    _ => Some((v, c)),
                });
            if let Some((v, c)) = best {
                if v.to_f64().unwrap_or(0.0) >= target - MASS_TOLERANCE {
                    picked = Some((k, v, c));
                    break;
                }
            }
        }
        let Some((k_step, nu_next, next)) = picked else {
            return Err(Error::Invariant(format!(
                "no k <= {m}! realizes the increment to {target}"
            )));
        };
        if nu_next.to_f64().unwrap_or(0.0) - nu_f < kappa / 3.0 - MASS_TOLERANCE {
            return Err(Error::Invariant(format!("increment {nu} -> {nu_next} is below kappa/3 = {}", kappa / 3.0)));
        }
        steps.push(IncrementStep {
            m,
            k_step,
            kappa,
            nu: nu.clone(),
            nu_next: nu_next.clone(),
            rat_mass,
            union_measure: check.union,
            full_union: full_union_measure,
            target,
            representative: sys.coords(comp.representative),
        });
        comp = next;
        nu = nu_next;
    }
}

/// `k P(n)`.
fn scaled_by(p: &IntPolynomialMap, k: u64) -> IntPolynomialMap {
    let kb = BigInt::from(k);
    let comps = (0..p.dimension())
        .map(|i| p.component(i).iter().map(|(m, c)| (m.clone(), c * &kb)).collect())
        .collect();
    IntPolynomialMap::new(p.arity(), comps).expect("same shape")
}
