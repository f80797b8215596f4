//! One handler per subcommand. Each builds a [`Report`] and never prints.

use clap::{Args, ValueEnum};
use expansivity::combinatorics::{
    degenerate_obstruction_check, bogolyubov_min_k, pinned_delta_refuter, volspec as volume_spectrum, volspec_coverage,
    RefuterDomain, WindowedSet,
};
use expansivity::expsum::{hua_threshold, psi_profile, weyl_average, HUA_TOLERANCE};
use expansivity::intlinalg::{multiplicative_complexity_bound, smallest_factor_counterexample, smith_normal_form, IntMatrix};
use expansivity::intpoly::IntPolynomialMap;
use expansivity::json;
use expansivity::modular::{is_prime, TorusRational};
use expansivity::spectral::{
    find_expansive_direction, increment_run, spectral_measure, CyclicProductSystem, GroupSet, IncrementMode,
    IncrementOptions, IncrementStatus, MASS_TOLERANCE,
};
use expansivity::valueset::{
    build_counterexample, default_base_point, find_deficient_primes, max_progression_length, return_time_set,
    value_set_direct, value_set_mod_prime, value_set_mod_squarefree, value_set_size_product, CounterexampleBlueprint,
    ProgressionBound,
};
use expansivity::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive};
use serde_json::{json, Value};

use crate::report::{Check, Report};
use crate::setspec;

/// Largest modulus for which `value-set --modulus` also evaluates `P` directly.
const DIRECT_CROSS_CHECK_LIMIT: u64 = 1_000_000;

fn poly(text: &str) -> Result<IntPolynomialMap> {
    IntPolynomialMap::parse(text)
}

fn int_list(text: &str) -> Result<Vec<i64>> {
    text.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| Error::Parse(format!("expected an integer, found `{t}`"))))
        .collect()
}

fn positive_list(text: &str) -> Result<Vec<u64>> {
    int_list(text)?
        .into_iter()
        .map(|x| u64::try_from(x).ok().filter(|&q| q > 0).ok_or_else(|| Error::Parse(format!("`{x}` is not a positive modulus"))))
        .collect()
}

// ---------------------------------------------------------------- value-set

#[derive(Args, Debug)]
pub struct ValueSetArgs {
    /// Univariate integer polynomial, e.g. `n^2` or `n^3 - n`.
    #[arg(long)]
    poly: String,
    /// Reduce modulo this prime.
    #[arg(long, conflicts_with = "modulus", required_unless_present = "modulus")]
    prime: Option<u64>,
    /// Reduce modulo this squarefree integer, assembling the set by CRT.
    #[arg(long)]
    modulus: Option<u64>,
}

pub fn value_set(args: ValueSetArgs, seed: u64) -> Result<Report> {
    let p = poly(&args.poly)?;
    let mut r = Report::new("value-set", seed);
    r.input("poly", p.to_string());
    if let Some(prime) = args.prime {
        r.input("prime", prime);
        let v = value_set_mod_prime(&p, prime)?;
        r.result("value_set", v.to_json());
        r.result("density", json::rational(&v.density()));
        let deg = p.degree() as u64;
        if deg >= 1 && deg < prime && (v.len() as u64) < prime {
            // a non-permutation polynomial of degree D < p takes at most p - (p - 1)/D values
            let ok = (v.len() as u128) * deg as u128 <= prime as u128 * deg as u128 - (prime as u128 - 1);
            r.check(Check::exact(
                "non_permutation_value_bound",
                "|V(P, p)| <= p - (p - 1)/deg P when P is not a permutation of Z/pZ",
                ok,
            ));
        }
        if p.to_string() == "n^2" && prime > 2 {
            r.check(Check::exact(
                "squares_mod_odd_prime",
                "there are exactly (p + 1)/2 squares modulo an odd prime",
                v.len() as u64 == prime.div_ceil(2),
            ));
        }
    } else if let Some(q) = args.modulus {
        r.input("modulus", q);
        let v = value_set_mod_squarefree(&p, q)?;
        r.result("value_set", v.to_json());
        r.result("density", json::rational(&v.density()));
        let product = value_set_size_product(&p, q)?;
        r.check(Check::exact(
            "crt_size_product",
            "|S(q)| = product of |V(P, p)| over the primes p dividing squarefree q",
            BigInt::from(v.len()) == product,
        ));
        if q <= DIRECT_CROSS_CHECK_LIMIT {
            let direct = value_set_direct(&p, q)?;
            r.check(Check::exact(
                "crt_matches_direct_evaluation",
                "S(q) assembled by CRT equals {P(n) mod q : 0 <= n < q}",
                direct == v,
            ));
        }
    }
    Ok(r)
}

// ---------------------------------------------------------- deficient-primes

#[derive(Args, Debug)]
pub struct DeficientPrimesArgs {
    #[arg(long)]
    poly: String,
    /// Number of primes to find.
    #[arg(long, default_value_t = 3)]
    count: usize,
    /// Give up past this prime.
    #[arg(long, default_value_t = 10_000)]
    scan_bound: u64,
}

pub fn deficient_primes(args: DeficientPrimesArgs, seed: u64) -> Result<Report> {
    let p = poly(&args.poly)?;
    let mut r = Report::new("deficient-primes", seed);
    r.input("poly", p.to_string()).input("count", args.count).input("scan_bound", args.scan_bound);
    let found = find_deficient_primes(&p, args.count, args.scan_bound)?;
    let lambda = found.best_lambda().clone();
    r.result("primes", found.primes.clone());
    r.result("sizes", found.sizes.clone());
    r.result("lambda", json::rational(&found.lambda));
    r.result("quadratic_lambda", found.quadratic_lambda.as_ref().map(json::rational));
    r.result("best_lambda", json::rational(&lambda));
    let within = found
        .primes
        .iter()
        .zip(&found.sizes)
        .all(|(&q, &s)| BigRational::from_integer(s.into()) <= &lambda * BigRational::from_integer(q.into()));
    r.check(Check::exact("deficiency_ratio", "|V(P, p)| <= lambda p at every returned prime", within));
    r.check(Check::exact(
        "returned_primes_are_prime",
        "every returned modulus is prime",
        found.primes.iter().all(|&q| is_prime(q)),
    ));
    Ok(r)
}

// ------------------------------------------------------------ counterexample

#[derive(Args, Debug)]
pub struct CounterexampleArgs {
    #[arg(long, default_value = "n^2")]
    poly: String,
    /// Number of levels.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Tabulate pinned progression bounds for k = 1..=kmax.
    #[arg(long, default_value_t = 10)]
    kmax: u64,
    /// Deepest blueprint tried when no level is coprime to k (default: depth + 2).
    #[arg(long)]
    max_depth: Option<usize>,
}

/// Blueprints by depth, built on demand.
struct Blueprints {
    poly: IntPolynomialMap,
    built: Vec<Option<CounterexampleBlueprint>>,
}

impl Blueprints {
    fn new(poly: IntPolynomialMap) -> Self {
        Blueprints { poly, built: Vec::new() }
    }

    fn get(&mut self, depth: usize) -> Result<&CounterexampleBlueprint> {
        if self.built.len() <= depth {
            self.built.resize(depth + 1, None);
        }
        if self.built[depth].is_none() {
            self.built[depth] = Some(build_counterexample(&self.poly, depth)?);
        }
        Ok(self.built[depth].as_ref().expect("just built"))
    }

    /// Progression bound for `k`, deepening from `depth` up to `max_depth` until some level is coprime to `k`.
    fn progression(&mut self, k: u64, depth: usize, max_depth: usize) -> Result<(usize, ProgressionBound)> {
        let mut last = None;
        for d in depth..=max_depth.max(depth) {
            match max_progression_length(self.get(d)?, k) {
                Ok(b) => return Ok((d, b)),
                Err(e @ Error::NoCoprimeLevel { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one depth tried"))
    }
}

fn blueprint_checks(r: &mut Report, bp: &CounterexampleBlueprint) {
    let misses_zero = bp.levels.iter().all(|l| !l.orbit.contains(0));
    r.check(Check::exact(
        format!("orbit_misses_zero_depth_{}", bp.depth),
        "0 is not in A_i + S(q_i) at any level, so no polynomial return to A",
        misses_zero,
    ));
    let dense = bp.levels.iter().enumerate().all(|(i, l)| {
        l.set.density() >= BigRational::one() - Pow::pow(&bp.lambda, i as u32 + 1)
    });
    r.check(Check::exact(
        format!("level_density_depth_{}", bp.depth),
        "mu(A_i) >= 1 - lambda^i at level i",
        dense,
    ));
}

fn progression_holds(bp: &CounterexampleBlueprint, k: u64, b: &ProgressionBound) -> bool {
    let level = &bp.levels[b.level - 1];
    let q = level.modulus;
    b.m < q && (0..b.m).all(|j| level.orbit.contains(((b.start as u128 + j as u128 * k as u128) % q as u128) as u64))
}

pub fn counterexample(args: CounterexampleArgs, seed: u64) -> Result<Report> {
    let p = poly(&args.poly)?;
    let max_depth = args.max_depth.unwrap_or(args.depth + 2);
    let mut r = Report::new("counterexample", seed);
    r.input("poly", p.to_string()).input("depth", args.depth).input("kmax", args.kmax).input("max_depth", max_depth);
    let mut books = Blueprints::new(p);
    let base = books.get(args.depth)?.clone();
    r.result("blueprint", base.to_json());
    blueprint_checks(&mut r, &base);
    let mut rows = Vec::new();
    let mut deeper = std::collections::BTreeSet::new();
    let mut all_hold = true;
    for k in 1..=args.kmax {
        let (d, b) = books.progression(k, args.depth, max_depth)?;
        let bp = books.get(d)?;
        all_hold &= progression_holds(bp, k, &b);
        if d != args.depth {
            deeper.insert(d);
        }
        rows.push(json!({ "k": k, "depth": d, "level": b.level, "modulus": b.modulus, "m": b.m, "start": b.start }));
    }
    for d in deeper {
        let bp = books.get(d)?.clone();
        r.result(&format!("blueprint_depth_{d}"), bp.to_json());
        blueprint_checks(&mut r, &bp);
    }
    r.result("progression_bounds", rows);
    r.check(Check::exact(
        "progression_runs",
        "a, a + k, ..., a + (m - 1)k lie in A_i + S(q_i) and m < q_i, so {k, ..., mk} is never fully pinned",
        all_hold,
    ));
    Ok(r)
}

// ------------------------------------------------------------- pinned-refute

#[derive(Args, Debug)]
pub struct PinnedRefuteArgs {
    #[arg(long, default_value = "n^2")]
    poly: String,
    /// Step of the pinned pattern `{k, 2k, ..., mk}`.
    #[arg(long)]
    k: u64,
    /// Pattern length; defaults to the blueprint progression bound.
    #[arg(long)]
    m: Option<u64>,
    /// Lattice set E (see the set grammar); without it E is a blueprint return-time set.
    #[arg(long)]
    set: Option<String>,
    /// Treat `--set` as periodic with this period; its window must be `[0, period)`.
    #[arg(long, requires = "set")]
    period: Option<u64>,
    /// Blueprint depth.
    #[arg(long, default_value_t = 2, conflicts_with = "set")]
    depth: usize,
    /// Deepest blueprint tried when no level is coprime to k (default: depth + 2).
    #[arg(long, conflicts_with = "set")]
    max_depth: Option<usize>,
    /// Blueprint base point, one residue per level (default: the least element of each A_i).
    #[arg(long, conflicts_with = "set")]
    base: Option<String>,
}

pub fn pinned_refute(args: PinnedRefuteArgs, seed: u64) -> Result<Report> {
    let p = poly(&args.poly)?;
    let mut r = Report::new("pinned-refute", seed);
    r.input("poly", p.to_string()).input("k", args.k).input("m", args.m);
    if let Some(spec) = &args.set {
        let m = args.m.ok_or_else(|| Error::Precondition("--m is required with --set".into()))?;
        let e = setspec::lattice_set(spec)?;
        let domain = match args.period {
            Some(l) => RefuterDomain::Periodic(l),
            None => RefuterDomain::Finite,
        };
        r.input("set", spec.as_str()).input("period", args.period);
        let rep = pinned_delta_refuter(&e, &p, args.k, m, domain)?;
        r.result("refuter", rep.to_json());
        r.check(Check::exact(
            "certified_length_within_pattern",
            "every certificate names a multiple jk with j <= m",
            rep.m_certified <= m,
        ));
        return Ok(r);
    }
    let max_depth = args.max_depth.unwrap_or(args.depth + 2);
    r.input("depth", args.depth).input("max_depth", max_depth).input("base", args.base.clone());
    let mut books = Blueprints::new(p.clone());
    let (d, bound) = books.progression(args.k, args.depth, max_depth)?;
    let bp = books.get(d)?;
    let base = match &args.base {
        Some(text) => positive_or_zero(text)?,
        None => default_base_point(bp),
    };
    let period = bp.period();
    let values = return_time_set(bp, Some(&base), 0, period as i64)?;
    let e = WindowedSet::from_values(0, period as i64, values)?;
    let m = args.m.unwrap_or(bound.m);
    let rep = pinned_delta_refuter(&e, &p, args.k, m, RefuterDomain::Periodic(period))?;
    r.result("depth_used", d);
    r.result("period", period);
    r.result("base_point", base);
    r.result("progression_bound", json!({ "level": bound.level, "modulus": bound.modulus, "m": bound.m, "start": bound.start }));
    r.result("refuter", rep.to_json());
    if m >= bound.m {
        r.check(Check::exact(
            "return_set_refuted",
            "no pinned pair (x, y) of the return-time set covers {k, ..., mk} once m reaches the level bound",
            rep.refuted() && rep.m_certified <= bound.m,
        ));
    }
    Ok(r)
}

fn positive_or_zero(text: &str) -> Result<Vec<u64>> {
    int_list(text)?
        .into_iter()
        .map(|x| u64::try_from(x).map_err(|_| Error::Parse(format!("base residue {x} is negative"))))
        .collect()
}

// -------------------------------------------------------------- bogolyubov

#[derive(Args, Debug)]
pub struct BogolyubovArgs {
    #[arg(long, default_value = "n^2")]
    poly: String,
    /// Lattice set E; omit it for the degenerate-polynomial check on a Bohr set.
    #[arg(long, required_unless_present = "alpha")]
    set: Option<String>,
    #[arg(long, default_value_t = 10)]
    kmax: u64,
    /// Test box `‖m‖∞ <= radius`.
    #[arg(long, default_value_t = 5)]
    radius: u64,
    /// Bohr frequency `a` as `NUM/DEN`.
    #[arg(long, conflicts_with = "set", requires_all = ["eps", "window"])]
    alpha: Option<String>,
    /// Bohr radius as `NUM/DEN`.
    #[arg(long)]
    eps: Option<String>,
    /// Window `LO..HI`, or `LO..HIxD`.
    #[arg(long)]
    window: Option<String>,
}

pub fn bogolyubov(args: BogolyubovArgs, seed: u64) -> Result<Report> {
    let p = poly(&args.poly)?;
    let mut r = Report::new("bogolyubov", seed);
    r.input("poly", p.to_string()).input("kmax", args.kmax).input("radius", args.radius);
    if let Some(spec) = &args.set {
        r.input("set", spec.as_str());
        let e = setspec::lattice_set(spec)?;
        r.result("set_size", e.len());
        let rep = bogolyubov_min_k(&e, &p, args.kmax, args.radius)?;
        r.result("bogolyubov", rep.to_json());
        r.check(Check::exact(
            "failures_precede_success",
            "every failing k is smaller than the reported k",
            rep.uncovered.iter().all(|(k, _)| rep.k.is_none_or(|best| *k < best)),
        ));
        return Ok(r);
    }
    let (alpha, eps, window) = (args.alpha.unwrap(), args.eps.unwrap(), args.window.unwrap());
    r.input("alpha", alpha.as_str()).input("eps", eps.as_str()).input("window", window.as_str());
    let a = setspec::rational(&alpha)?;
    let e = setspec::rational(&eps)?;
    let d = p.dimension();
    let boxes = match window.rsplit_once('x') {
        Some(_) => setspec::lattice_set(&format!("grid:{window}"))?.window().to_vec(),
        None => vec![setspec::range(&window)?; d],
    };
    let rep = degenerate_obstruction_check(&p, &a, &e, &boxes, args.kmax, args.radius)?;
    r.result("degenerate_check", rep.to_json());
    r.check(Check::exact(
        "sums_in_fat_bohr_set",
        "sum alpha_i z_i lies in B(a, 2 eps sum(|alpha_i| + |beta_i|)) for every z = x + P(y), x, y in E - E",
        true,
    ));
    Ok(r)
}

// ------------------------------------------------------------------ volspec

#[derive(Args, Debug)]
pub struct VolspecArgs {
    /// Lattice set E.
    #[arg(long)]
    set: String,
    /// Coverage test: is every multiple of k with absolute value at most `bound` a volume?
    #[arg(long, default_value_t = 1)]
    k: u64,
    #[arg(long, default_value_t = 5)]
    bound: u64,
}

pub fn volspec(args: VolspecArgs, seed: u64) -> Result<Report> {
    let e = setspec::lattice_set(&args.set)?;
    let mut r = Report::new("volspec", seed);
    r.input("set", args.set.as_str()).input("k", args.k).input("bound", args.bound);
    let spec = volume_spectrum(&e)?;
    let values: Vec<i64> = spec
        .iter()
        .map(|&v| i64::try_from(v).map_err(|_| Error::Invariant(format!("volume {v} overflows i64"))))
        .collect::<Result<_>>()?;
    r.result("set_size", e.len());
    r.result("dimension", e.dim());
    r.result("spectrum_size", values.len());
    r.result("spectrum", json::sorted_list(&values));
    r.result("covered", volspec_coverage(&e, args.k, args.bound)?);
    r.check(Check::exact(
        "sign_symmetric",
        "reordering two vertices negates the volume, so the spectrum is closed under negation",
        spec.iter().all(|v| spec.contains(&-v)),
    ));
    Ok(r)
}

// ------------------------------------------------------- rotation systems

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Action {
    /// `Z` adds `(1, ..., 1)`.
    Diagonal,
    /// `Z^I` acts coordinatewise.
    Standard,
}

#[derive(Args, Debug)]
pub struct SystemArgs {
    /// Moduli `q_1,...,q_I`.
    #[arg(long, required_unless_present = "blueprint_depth")]
    moduli: Option<String>,
    #[arg(long, value_enum, default_value_t = Action::Diagonal)]
    action: Action,
    /// Explicit generators, one per `;`, coordinates split by `:`, e.g. `1:1;0:1`.
    #[arg(long, conflicts_with = "action")]
    generators: Option<String>,
    /// Use the counterexample system of this depth (its moduli, and `A = prod A_i` as the default set).
    #[arg(long, conflicts_with_all = ["moduli", "generators"])]
    blueprint_depth: Option<usize>,
    /// Polynomial used to build the blueprint.
    #[arg(long, default_value = "n^2")]
    blueprint_poly: String,
    /// Set of states (see the set grammar).
    #[arg(long)]
    set: Option<String>,
}

struct System {
    sys: CyclicProductSystem,
    set: GroupSet,
}

fn system(args: &SystemArgs, seed: u64, r: &mut Report) -> Result<System> {
    if let Some(depth) = args.blueprint_depth {
        let bp_poly = poly(&args.blueprint_poly)?;
        let bp = build_counterexample(&bp_poly, depth)?;
        let sys = CyclicProductSystem::diagonal(bp.moduli())?;
        let set = match &args.set {
            Some(spec) => setspec::group_set(&sys, spec, seed)?,
            None => GroupSet::product(&sys, bp.levels.iter().map(|l| l.set.residues().to_vec()).collect())?,
        };
        r.input("blueprint_depth", depth).input("blueprint_poly", bp_poly.to_string()).input("set", args.set.clone());
        r.result("moduli", bp.moduli());
        return Ok(System { sys, set });
    }
    let moduli = positive_list(args.moduli.as_deref().expect("clap requires moduli"))?;
    let sys = match &args.generators {
        Some(text) => {
            let gens = text
                .split(';')
                .map(|g| g.split(':').map(|x| x.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad generator `{g}`")))).collect())
                .collect::<Result<Vec<Vec<i64>>>>()?;
            CyclicProductSystem::new(moduli.clone(), gens)?
        }
        None => match args.action {
            Action::Diagonal => CyclicProductSystem::diagonal(moduli.clone())?,
            Action::Standard => CyclicProductSystem::standard(moduli.clone())?,
        },
    };
    let spec = args.set.as_deref().ok_or_else(|| Error::Precondition("--set is required".into()))?;
    let set = setspec::group_set(&sys, spec, seed)?;
    r.input("moduli", moduli.clone()).input("generators", sys.generators().to_vec()).input("set", spec);
    Ok(System { sys, set })
}

fn system_summary(r: &mut Report, s: &System) {
    r.result("states", s.sys.size());
    r.result("rank", s.sys.dim());
    r.result("ergodic", s.sys.is_ergodic());
    r.result("set_measure", json::rational(&s.set.measure(&s.sys)));
}

// ---------------------------------------------------------------- spectrum

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    system: SystemArgs,
}

pub fn spectrum(args: SpectrumArgs, seed: u64) -> Result<Report> {
    let mut r = Report::new("spectrum", seed);
    let s = system(&args.system, seed, &mut r)?;
    system_summary(&mut r, &s);
    let table = spectral_measure(&s.sys, &s.set)?;
    let mu = table.set_measure().to_f64().unwrap_or(f64::NAN);
    r.result("spectral_measure", table.to_json());
    r.check(Check::within(
        "atom_at_zero",
        "sigma({0}) = mu(A)^2 for an ergodic action",
        !s.sys.is_ergodic() || (table.zero_mass() - mu * mu).abs() <= MASS_TOLERANCE,
        MASS_TOLERANCE,
    ));
    r.check(Check::within("total_mass", "sigma(T^d) = mu(A)", (table.total_mass() - mu).abs() <= MASS_TOLERANCE, MASS_TOLERANCE));
    Ok(r)
}

// --------------------------------------------------------------- increment

#[derive(Args, Debug)]
pub struct IncrementArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Polynomial orbits `union_n T^{P(n)} A` (rank of the action = dimension of P).
    #[arg(long, conflicts_with = "directional")]
    poly: Option<String>,
    /// Orbits along a single direction instead of a polynomial.
    #[arg(long)]
    directional: bool,
    /// Stop once the orbit fills more than `1 - eps` of a component.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 64)]
    max_steps: usize,
}

pub fn increment(args: IncrementArgs, seed: u64) -> Result<Report> {
    let mut r = Report::new("increment", seed);
    let s = system(&args.system, seed, &mut r)?;
    let mode = if args.directional {
        IncrementMode::Directional
    } else {
        let text = match (&args.poly, args.system.blueprint_depth) {
            (Some(t), _) => t.clone(),
            (None, Some(_)) => args.system.blueprint_poly.clone(),
            (None, None) => return Err(Error::Precondition("pass --poly or --directional".into())),
        };
        IncrementMode::Polynomial(poly(&text)?)
    };
    r.input(
        "mode",
        match &mode {
            IncrementMode::Directional => "directional".to_string(),
            IncrementMode::Polynomial(p) => format!("polynomial {p}"),
        },
    );
    r.input("eps", args.eps).input("max_steps", args.max_steps);
    system_summary(&mut r, &s);
    let opts = IncrementOptions { epsilon: args.eps, max_steps: args.max_steps };
    let trace = increment_run(&s.sys, &s.set, &mode, &opts)?;
    r.result("trace", trace.to_json());
    r.check(Check::within(
        "density_increment",
        "each step reaches a component with nu(A) >= sqrt(nu^2 + sigma(Rat M)) >= nu + kappa/3",
        trace.steps.iter().all(|st| {
            let next = st.nu_next.to_f64().unwrap_or(0.0);
            let nu = st.nu.to_f64().unwrap_or(0.0);
            next >= st.target - MASS_TOLERANCE && next >= nu + st.kappa / 3.0 - MASS_TOLERANCE
        }),
        MASS_TOLERANCE,
    ));
    r.check(Check::exact(
        "step_count_bound",
        "the number of increments is at most 3(1 - mu(A))/kappa",
        trace.steps.len() as u64 <= trace.step_bound,
    ));
    if trace.status == IncrementStatus::Expanded {
        let one_minus_eps = 1.0 - args.eps;
        r.check(Check::within(
            "expanded",
            "the final orbit fills more than 1 - eps of its component",
            trace.final_union.to_f64().unwrap_or(0.0) > one_minus_eps - MASS_TOLERANCE,
            MASS_TOLERANCE,
        ));
    }
    Ok(r)
}

// --------------------------------------------------------------- direction

#[derive(Args, Debug)]
pub struct DirectionArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Accept a direction once `sigma(L_v^perp \ {0}) <= gamma`.
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    /// Largest haystack window `M`.
    #[arg(long, default_value_t = 6)]
    cap: u64,
}

pub fn direction(args: DirectionArgs, seed: u64) -> Result<Report> {
    let mut r = Report::new("direction", seed);
    let s = system(&args.system, seed, &mut r)?;
    r.input("gamma", args.gamma).input("cap", args.cap);
    system_summary(&mut r, &s);
    let found = find_expansive_direction(&s.sys, &s.set, args.gamma, args.cap)?;
    r.result("direction", found.direction.clone());
    r.result("window", found.window);
    r.result("line_mass", found.line_mass);
    r.result("union_measure", json::rational(&found.union_measure));
    r.result("lower_bound", found.lower_bound);
    r.check(Check::exact("line_mass_below_gamma", "sigma(L_v^perp \\ {0}) <= gamma", found.line_mass <= args.gamma));
    r.check(Check::within(
        "union_lower_bound",
        "mu(union_n T^{nv} A) >= mu(A)^2 / sigma(L_v^perp)",
        found.union_measure.to_f64().unwrap_or(0.0) >= found.lower_bound - MASS_TOLERANCE,
        MASS_TOLERANCE,
    ));
    Ok(r)
}

// -------------------------------------------------------------------- weyl

#[derive(Args, Debug)]
pub struct WeylArgs {
    #[arg(long)]
    poly: String,
    /// Profile `psi(q)` for `q = 2..=q_max`.
    #[arg(long, default_value_t = 30)]
    q_max: u64,
    /// Report the smallest M with `psi(q) < target` for all scanned `q > M`.
    #[arg(long)]
    target: Option<f64>,
    /// Also evaluate the average at these frequencies, e.g. `1/3` or `1/3,2/5`; repeatable.
    #[arg(long)]
    alpha: Vec<String>,
}

pub fn weyl(args: WeylArgs, seed: u64) -> Result<Report> {
    let p = poly(&args.poly)?;
    let mut r = Report::new("weyl", seed);
    r.input("poly", p.to_string()).input("q_max", args.q_max).input("target", args.target).input("alpha", args.alpha.clone());
    let profile = psi_profile(&p, args.q_max)?;
    let mut csv = String::from("q,psi\n");
    for (q, v) in &profile {
        csv.push_str(&format!("{q},{v}\n"));
    }
    r.csv = Some(csv);
    r.result("psi", profile.iter().map(|&(q, v)| json!({ "q": q, "psi": v })).collect::<Vec<_>>());
    r.check(Check::within(
        "psi_in_unit_interval",
        "0 <= psi(q) <= 1",
        profile.iter().all(|&(_, v)| (-HUA_TOLERANCE..=1.0 + HUA_TOLERANCE).contains(&v)),
        HUA_TOLERANCE,
    ));
    if let Some(target) = args.target {
        r.result("threshold", hua_threshold(&p, target, args.q_max)?.to_json());
    }
    let mut averages = Vec::new();
    for text in &args.alpha {
        let coords: Vec<(i64, i64)> = text
            .split(',')
            .map(|c| {
                let q = setspec::rational(c)?;
                match (q.numer().to_i64(), q.denom().to_i64()) {
                    (Some(n), Some(d)) => Ok((n, d)),
                    _ => Err(Error::Parse(format!("frequency `{c}` is too large"))),
                }
            })
            .collect::<Result<_>>()?;
        let a = TorusRational::reduce(&coords)?;
        let w = weyl_average(&p, &a)?;
        averages.push(json!({
            "alpha": a.coordinate_strings(),
            "period": w.period,
            "re": w.value.re,
            "im": w.value.im,
            "magnitude": w.magnitude(),
        }));
    }
    if !averages.is_empty() {
        r.result("averages", averages);
    }
    Ok(r)
}

// --------------------------------------------------------------------- snf

#[derive(Args, Debug)]
pub struct SnfArgs {
    /// Rows split by `;`, entries by `,`, e.g. `2,4;6,8`.
    #[arg(long, conflicts_with = "poly", required_unless_present = "poly")]
    matrix: Option<String>,
    /// Use the coefficient matrix of this polynomial map, e.g. `2*n; n^2`, and bound its complexity.
    #[arg(long)]
    poly: Option<String>,
    /// Random coprime pairs checked against the bound.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Search box for a pair beating the smallest invariant factor.
    #[arg(long, default_value_t = 3)]
    radius: i64,
    #[arg(long, default_value_t = 16)]
    q_max: u64,
}

fn parse_matrix(text: &str) -> Result<IntMatrix> {
    let rows = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<BigInt>().map_err(|_| Error::Parse(format!("bad matrix entry `{x}`"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    IntMatrix::from_big_rows(rows)
}

fn big_rows(m: &IntMatrix) -> Value {
    Value::from(m.to_rows().iter().map(|row| row.iter().map(json::big).collect::<Vec<_>>()).collect::<Vec<_>>())
}

pub fn snf(args: SnfArgs, seed: u64) -> Result<Report> {
    let mut r = Report::new("snf", seed);
    if let Some(text) = &args.matrix {
        r.input("matrix", text.as_str());
        let b = parse_matrix(text)?;
        let dec = smith_normal_form(&b)?;
        r.result("invariant_factors", dec.invariant_factors().iter().map(json::big).collect::<Vec<_>>());
        r.result("rank", dec.rank());
        r.result("left", big_rows(&dec.left));
        r.result("diagonal", big_rows(&dec.diagonal));
        r.result("right", big_rows(&dec.right));
        snf_checks(&mut r, &b, &dec);
        return Ok(r);
    }
    let p = poly(args.poly.as_deref().expect("clap requires poly"))?;
    r.input("poly", p.to_string()).input("samples", args.samples).input("radius", args.radius).input("q_max", args.q_max);
    let bound = multiplicative_complexity_bound(&p, args.samples, seed)?;
    r.result("coefficient_matrix", big_rows(&bound.coefficient_matrix));
    r.result("invariant_factors", bound.invariant_factors.clone());
    r.result("bound", json::big(&bound.bound));
    r.result("samples_checked", bound.samples_checked);
    let witness = smallest_factor_counterexample(&p, args.radius, args.q_max)?;
    r.result("smallest_factor_counterexample", serde_json::to_value(witness).expect("serializable"));
    snf_checks(&mut r, &bound.coefficient_matrix, &bound.decomposition);
    r.check(Check::exact(
        "sampled_gcds_within_bound",
        "gcd(B a, q) <= Q for every sampled coprime pair (a, q)",
        bound.samples_checked == args.samples,
    ));
    Ok(r)
}

fn snf_checks(r: &mut Report, b: &IntMatrix, dec: &expansivity::intlinalg::SmithDecomposition) {
    r.check(Check::exact("reconstruction", "L · D · R = B", dec.reconstruct() == *b));
    let f = dec.invariant_factors();
    r.check(Check::exact(
        "divisibility_chain",
        "D_1 | D_2 | ... | D_r",
        f.windows(2).all(|w| (&w[1] % &w[0]) == BigInt::from(0)),
    ));
    let unimodular = |m: &IntMatrix| {
        let det = m.determinant();
        det == BigInt::one() || det == -BigInt::one()
    };
    r.check(Check::exact("unimodular_factors", "det L = ±1 and det R = ±1", unimodular(&dec.left) && unimodular(&dec.right)));
}
