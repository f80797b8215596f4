//! Set specifications accepted on the command line.
//!
//! Lattice sets (for `bogolyubov`, `volspec`, `pinned-refute`), ranges are half-open:
//!
//! * `lit:{0,1,4}` or `lit:{(0,0),(1,0),(0,1)}`; the window is the bounding box
//! * `grid:LO..HIxD`, every point of `[LO, HI)^D`
//! * `ap:START,STEP,LO..HI`, the progression `START + STEP Z` inside `[LO, HI)`
//! * `bohr:NUM/DEN,EPS,LO..HIxD`, `B(NUM/DEN, EPS)^D ∩ [LO, HI)^D`
//! * `file:PATH`, whitespace separated points, one per line, coordinates split by `,`
//!
//! States of a rotation system (for `increment`, `direction`):
//!
//! * `0,2,5`, state indices, or `1:3,0:2` with one coordinate per level
//! * `all`, `random:DENSITY` (drawn with the run seed), `file:PATH`

use std::fs;

use expansivity::bitset::Bitset;
use expansivity::combinatorics::{bohr_product, WindowedSet};
use expansivity::spectral::{CyclicProductSystem, GroupSet};
use expansivity::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bad(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn int(s: &str) -> Result<i64> {
    s.trim().parse().map_err(|_| bad(format!("expected an integer, found `{s}`")))
}

/// `LO..HI` as a half-open range.
pub fn range(s: &str) -> Result<(i64, i64)> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| bad(format!("expected LO..HI, found `{s}`")))?;
    let (lo, hi) = (int(lo)?, int(hi)?);
    if hi < lo {
        return Err(bad(format!("empty range `{s}`")));
    }
    Ok((lo, hi))
}

/// `LO..HIxD`, or `LO..HI` for one axis.
fn boxed(s: &str) -> Result<Vec<(i64, i64)>> {
    let (r, d) = match s.rsplit_once('x') {
        Some((r, d)) => (r, d.trim().parse::<usize>().map_err(|_| bad(format!("bad dimension in `{s}`")))?),
        None => (s, 1),
    };
    if d == 0 {
        return Err(bad("dimension must be positive"));
    }
    Ok(vec![range(r)?; d])
}

/// `p/q` or an integer.
pub fn rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let n: BigInt = n.trim().parse().map_err(|_| bad(format!("bad rational `{s}`")))?;
    let d: BigInt = d.trim().parse().map_err(|_| bad(format!("bad rational `{s}`")))?;
    if d == BigInt::from(0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(BigRational::new(n, d))
}

fn points_in_braces(body: &str) -> Result<Vec<Vec<i64>>> {
    let inner = body
        .trim()
        .strip_prefix('{')
        .and_then(|b| b.strip_suffix('}'))
        .ok_or_else(|| bad("a literal set is written `{...}`"))?
        .trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    if inner.starts_with('(') {
        let mut out = Vec::new();
        for chunk in inner.split(')') {
            let chunk = chunk.trim().trim_start_matches(',').trim();
            if chunk.is_empty() {
                continue;
            }
            let body = chunk.strip_prefix('(').ok_or_else(|| bad(format!("bad point `{chunk}`")))?;
            out.push(body.split(',').map(int).collect::<Result<Vec<_>>>()?);
        }
        Ok(out)
    } else {
        inner.split(',').map(|x| int(x).map(|v| vec![v])).collect()
    }
}

fn bounding_window(points: &[Vec<i64>]) -> Result<Vec<(i64, i64)>> {
    let d = points.first().map_or(1, Vec::len);
    if points.iter().any(|p| p.len() != d) {
        return Err(bad("points of a literal set must share a dimension"));
    }
    if points.is_empty() {
        return Ok(vec![(0, 0)]);
    }
    Ok((0..d)
        .map(|i| {
            let lo = points.iter().map(|p| p[i]).min().unwrap();
            let hi = points.iter().map(|p| p[i]).max().unwrap();
            (lo, hi + 1)
        })
        .collect())
}

/// Parses a lattice set specification.
pub fn lattice_set(spec: &str) -> Result<WindowedSet> {
    let (kind, body) = spec.split_once(':').ok_or_else(|| bad(format!("set spec `{spec}` lacks a `kind:` prefix")))?;
    match kind {
        "lit" => {
            let points = points_in_braces(body)?;
            let window = bounding_window(&points)?;
            WindowedSet::new(window, points)
        }
        "grid" => WindowedSet::full(boxed(body)?),
        "ap" => {
            let parts: Vec<&str> = body.splitn(3, ',').collect();
            let [start, step, window] = parts[..] else {
                return Err(bad("expected ap:START,STEP,LO..HI"));
            };
            let (start, step, (lo, hi)) = (int(start)?, int(step)?, range(window)?);
            if step == 0 {
                return Err(bad("progression step must be nonzero"));
            }
            WindowedSet::from_values(lo, hi, (lo..hi).filter(|n| (n - start).rem_euclid(step.abs()) == 0))
        }
        "bohr" => {
            let parts: Vec<&str> = body.splitn(3, ',').collect();
            let [alpha, eps, window] = parts[..] else {
                return Err(bad("expected bohr:NUM/DEN,EPS,LO..HIxD"));
            };
            bohr_product(&rational(alpha)?, &rational(eps)?, &boxed(window)?)
        }
        "file" => {
            let text = fs::read_to_string(body).map_err(|e| bad(format!("cannot read `{body}`: {e}")))?;
            let points: Vec<Vec<i64>> = text
                .lines()
                .flat_map(|line| line.split_whitespace().map(str::to_string).collect::<Vec<_>>())
                .map(|tok| tok.split(',').map(int).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?;
            let window = bounding_window(&points)?;
            WindowedSet::new(window, points)
        }
        other => Err(bad(format!("unknown set kind `{other}`"))),
    }
}

fn state(sys: &CyclicProductSystem, tok: &str) -> Result<usize> {
    if tok.contains(':') {
        let coords: Vec<i64> = tok.split(':').map(int).collect::<Result<_>>()?;
        if coords.len() != sys.levels() {
            return Err(Error::DimensionMismatch { expected: sys.levels(), got: coords.len() });
        }
        let reduced: Vec<u64> = coords.iter().zip(sys.moduli()).map(|(&c, &q)| c.rem_euclid(q as i64) as u64).collect();
        return Ok(sys.index(&reduced));
    }
    let i = int(tok)?;
    if i < 0 || i as usize >= sys.size() {
        return Err(bad(format!("state {i} outside a system of {} states", sys.size())));
    }
    Ok(i as usize)
}

/// Parses a subset of the states of `sys`.
pub fn group_set(sys: &CyclicProductSystem, spec: &str, seed: u64) -> Result<GroupSet> {
    let spec = spec.trim();
    if spec == "all" {
        return Ok(GroupSet::full(sys));
    }
    if let Some(density) = spec.strip_prefix("random:") {
        let p: f64 = density.parse().map_err(|_| bad(format!("bad density `{density}`")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(bad("density must lie in [0, 1]"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bits = Bitset::new(sys.size());
        for i in 0..sys.size() {
            if rng.gen_bool(p) {
                bits.insert(i);
            }
        }
        return Ok(GroupSet::Explicit(bits));
    }
    let text = match spec.strip_prefix("file:") {
        Some(path) => fs::read_to_string(path).map_err(|e| bad(format!("cannot read `{path}`: {e}")))?,
        None => spec.to_string(),
    };
    let mut bits = Bitset::new(sys.size());
    for tok in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        bits.insert(state(sys, tok)?);
    }
    Ok(GroupSet::Explicit(bits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_specs() {
        assert_eq!(lattice_set("lit:{0,1,4}").unwrap().values(), vec![0, 1, 4]);
        let tri = lattice_set("lit:{(0,0),(1,0),(0,1)}").unwrap();
        assert_eq!(tri.dim(), 2);
        assert_eq!(tri.len(), 3);
        assert_eq!(lattice_set("grid:0..10x2").unwrap().len(), 100);
        let evens = lattice_set("ap:0,2,0..200").unwrap();
        assert_eq!(evens.len(), 100);
        assert_eq!(evens.window(), &[(0, 200)]);
        assert!(lattice_set("bohr:408/577,1/20,0..40x2").unwrap().contains(&[0, 0]));
        assert!(lattice_set("nope:1").is_err());
        assert!(lattice_set("ap:0,0,0..4").is_err());
    }

    #[test]
    fn state_specs() {
        let sys = CyclicProductSystem::diagonal(vec![3, 5]).unwrap();
        let a = group_set(&sys, "0, 1:3", 1).unwrap();
        let bits = a.to_bitset(&sys).unwrap();
        assert!(bits.contains(0) && bits.contains(sys.index(&[1, 3])));
        assert_eq!(group_set(&sys, "all", 1).unwrap().to_bitset(&sys).unwrap().count(), 15);
        assert_eq!(group_set(&sys, "random:0.5", 9), group_set(&sys, "random:0.5", 9));
        assert!(group_set(&sys, "15", 1).is_err());
    }

    #[test]
    fn rationals_and_ranges() {
        assert_eq!(rational("2/4").unwrap(), BigRational::new(1.into(), 2.into()));
        assert!(rational("1/0").is_err());
        assert_eq!(range("-3..4").unwrap(), (-3, 4));
        assert!(range("4..3").is_err());
    }
}
