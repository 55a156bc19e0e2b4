//! Combination calculus: L^p and logarithmic (0-)combinations realized as
//! finite-direction Wulff bodies (outer approximations), coordinate-wise
//! geometric-mean bodies of unconditional pairs, slab families, and diagonal
//! scaling families.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::body::{wulff, DirectionSet, GridSpec, HPolytope, Halfspace, SupportProfile};
use crate::error::{Error, Result};
use crate::geometry::dot;
use crate::measure::{sample_point, volume_mc, McSettings, VolumeEstimate};
use crate::report::{CheckReport, InputDigest};

/// Exponent of a combination; p = 0 is stored as a distinguished value, not
/// approximated by tiny p.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CombineExponent {
    Log,
    P(f64),
}

impl Serialize for CombineExponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CombineExponent::Log => s.serialize_str("log"),
            CombineExponent::P(p) => s.serialize_f64(*p),
        }
    }
}

impl<'de> Deserialize<'de> for CombineExponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(CombineExponent::P(p)),
            Raw::Word(w) if w == "log" => Ok(CombineExponent::Log),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "exponent must be a number or \"log\", got {w:?}"
            ))),
        }
    }
}

/// A combination request: exponent, weights, bodies and the direction grid.
#[derive(Clone, Debug)]
pub struct CombinationSpec {
    pub p: CombineExponent,
    pub weights: Vec<f64>,
    pub bodies: Vec<HPolytope>,
    pub grid: GridSpec,
}

/// On-disk form of a combination spec; body entries are file paths.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CombinationSpecFile {
    pub p: CombineExponent,
    pub weights: Vec<f64>,
    pub bodies: Vec<String>,
    pub grid: GridSpec,
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| *w <= 0.0) {
        return Err(Error::InvalidInput("weights must be positive".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::WeightSumError { sum });
    }
    Ok(())
}

fn check_symmetric_same_dim(bodies: &[&HPolytope]) -> Result<usize> {
    let dim = bodies
        .first()
        .ok_or_else(|| Error::InvalidInput("need at least one body".into()))?
        .dim();
    for b in bodies {
        if b.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: b.dim(),
            });
        }
        if !b.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
    }
    Ok(dim)
}

/// Weighted geometric-mean support profile over `dirs`.
pub fn log_profile_multi(
    bodies: &[&HPolytope],
    weights: &[f64],
    dirs: &DirectionSet,
) -> Result<SupportProfile> {
    check_symmetric_same_dim(bodies)?;
    check_weights(weights)?;
    if bodies.len() != weights.len() || bodies.len() < 2 {
        return Err(Error::InvalidInput(
            "need m >= 2 bodies with matching weights".into(),
        ));
    }
    let profiles: Vec<SupportProfile> = bodies
        .iter()
        .map(|b| b.support_profile(dirs))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = (0..dirs.len())
        .map(|i| {
            profiles
                .iter()
                .zip(weights)
                .map(|(pr, &w)| pr.values()[i].powf(w))
                .product()
        })
        .collect();
    SupportProfile::new(dirs.clone(), values)
}

/// Weighted p-mean support profile over `dirs` (p > 0).
pub fn lp_profile(
    k: &HPolytope,
    l: &HPolytope,
    p: f64,
    lambda: f64,
    dirs: &DirectionSet,
) -> Result<SupportProfile> {
    check_symmetric_same_dim(&[k, l])?;
    if !(p > 0.0) {
        return Err(Error::InvalidInput("lp_combine requires p > 0".into()));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidInput("lambda must lie in (0,1)".into()));
    }
    let hk = k.support_profile(dirs)?;
    let hl = l.support_profile(dirs)?;
    let values: Vec<f64> = hk
        .values()
        .iter()
        .zip(hl.values())
        .map(|(a, b)| (lambda * a.powf(p) + (1.0 - lambda) * b.powf(p)).powf(1.0 / p))
        .collect();
    SupportProfile::new(dirs.clone(), values)
}

/// L^p combination as the Wulff body of the p-mean profile; an outer
/// approximation of the true combination.
pub fn lp_combine(
    k: &HPolytope,
    l: &HPolytope,
    p: f64,
    lambda: f64,
    dirs: &DirectionSet,
) -> Result<HPolytope> {
    wulff(&lp_profile(k, l, p, lambda, dirs)?)
}

/// Multi-entry 0-combination as the Wulff body of the weighted geometric-mean
/// profile. An outer approximation that shrinks under direction refinement.
pub fn log_combine_multi(
    bodies: &[&HPolytope],
    weights: &[f64],
    dirs: &DirectionSet,
) -> Result<HPolytope> {
    wulff(&log_profile_multi(bodies, weights, dirs)?)
}

/// Two-body 0-combination; delegates to the multi-entry form so both agree
/// bitwise.
pub fn log_combine(
    k: &HPolytope,
    l: &HPolytope,
    lambda: f64,
    dirs: &DirectionSet,
) -> Result<HPolytope> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidInput("lambda must lie in (0,1)".into()));
    }
    log_combine_multi(&[k, l], &[lambda, 1.0 - lambda], dirs)
}

/// Dispatch a combination spec.
pub fn combine(spec: &CombinationSpec) -> Result<HPolytope> {
    let refs: Vec<&HPolytope> = spec.bodies.iter().collect();
    let dim = check_symmetric_same_dim(&refs)?;
    let dirs = DirectionSet::for_bodies(&spec.grid, &refs)?;
    let _ = dim;
    match spec.p {
        CombineExponent::Log => log_combine_multi(&refs, &spec.weights, &dirs),
        CombineExponent::P(p) => {
            if refs.len() == 2 {
                lp_combine(refs[0], refs[1], p, spec.weights[0], &dirs)
            } else {
                // Multi-entry p-mean profile; the p = 0 limit of this form is
                // the multi-entry 0-combination.
                check_weights(&spec.weights)?;
                if !(p > 0.0) {
                    return Err(Error::InvalidInput("p must be positive".into()));
                }
                let profiles: Vec<SupportProfile> = refs
                    .iter()
                    .map(|b| b.support_profile(&dirs))
                    .collect::<Result<_>>()?;
                let values: Vec<f64> = (0..dirs.len())
                    .map(|i| {
                        profiles
                            .iter()
                            .zip(&spec.weights)
                            .map(|(pr, &w)| w * pr.values()[i].powf(p))
                            .sum::<f64>()
                            .powf(1.0 / p)
                    })
                    .collect();
                wulff(&SupportProfile::new(dirs.clone(), values)?)
            }
        }
    }
}

/// Slab family: intersections of |x.v_i| <= r_i^lambda s_i^(1-lambda).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlabFamily {
    pub dim: usize,
    pub slabs: Vec<Slab>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Slab {
    pub v: Vec<f64>,
    pub r: f64,
    pub s: f64,
}

impl SlabFamily {
    pub fn new(dim: usize, slabs: Vec<Slab>) -> Result<SlabFamily> {
        if slabs.len() < dim {
            return Err(Error::InvalidInput(
                "a slab family needs at least dim slabs".into(),
            ));
        }
        for s in &slabs {
            if s.v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.v.len(),
                });
            }
            if !(s.r > 0.0 && s.s > 0.0) {
                return Err(Error::InvalidInput("slab widths must be positive".into()));
            }
        }
        Ok(SlabFamily { dim, slabs })
    }

    /// R_lambda: widths interpolate geometrically between s (lambda = 0) and
    /// r (lambda = 1).
    pub fn body(&self, lambda: f64) -> Result<HPolytope> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidInput("lambda must lie in [0,1]".into()));
        }
        let mut hs = Vec::with_capacity(self.slabs.len() * 2);
        for s in &self.slabs {
            let w = s.r.powf(lambda) * s.s.powf(1.0 - lambda);
            hs.push(Halfspace::new(s.v.clone(), w));
            hs.push(Halfspace::new(
                s.v.iter().map(|x| -x).collect(),
                w,
            ));
        }
        HPolytope::new(self.dim, hs).map_err(|e| match e {
            Error::UnboundedBody => Error::UnboundedResult,
            other => other,
        })
    }
}

/// Diagonal scaling diag(t_1^s, .., t_n^s).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagonalScaling {
    pub t: Vec<f64>,
    pub s: f64,
}

impl DiagonalScaling {
    pub fn new(t: Vec<f64>, s: f64) -> Result<DiagonalScaling> {
        if t.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidInput("scaling entries must be > 0".into()));
        }
        Ok(DiagonalScaling { t, s })
    }

    /// diag(t^s) K: each halfspace (u, b) maps to (diag(t^-s) u, b), then
    /// renormalized; the volume multiplies by (prod t_i)^s exactly.
    pub fn apply(&self, k: &HPolytope) -> Result<HPolytope> {
        if self.t.len() != k.dim() {
            return Err(Error::DimensionMismatch {
                expected: k.dim(),
                got: self.t.len(),
            });
        }
        let hs = k
            .halfspaces()
            .iter()
            .map(|h| {
                Halfspace::new(
                    h.normal
                        .iter()
                        .zip(&self.t)
                        .map(|(u, t)| u * t.powf(-self.s))
                        .collect(),
                    h.offset,
                )
            })
            .collect();
        HPolytope::new(k.dim(), hs)
    }
}

/// Convenience: diag(t^s) K.
pub fn scale_body(t: &[f64], s: f64, k: &HPolytope) -> Result<HPolytope> {
    DiagonalScaling::new(t.to_vec(), s)?.apply(k)
}

/// Coordinate-wise geometric-mean body K^lambda . L^(1-lambda) of two
/// unconditional bodies.
#[derive(Clone, Debug)]
pub struct GeomMeanBody {
    k: HPolytope,
    l: HPolytope,
    lambda: f64,
    /// (direction, support bound) pairs used as a cheap outer screen.
    screen: Vec<(Vec<f64>, f64)>,
}

impl GeomMeanBody {
    pub fn new(k: HPolytope, l: HPolytope, lambda: f64) -> Result<GeomMeanBody> {
        if k.dim() != l.dim() {
            return Err(Error::DimensionMismatch {
                expected: k.dim(),
                got: l.dim(),
            });
        }
        if !k.is_unconditional() || !l.is_unconditional() {
            return Err(Error::NotUnconditional);
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidInput("lambda must lie in (0,1)".into()));
        }
        let dim = k.dim();
        // Outer screen: h_G(u) <= h_K(u)^lambda h_L(u)^(1-lambda) on
        // nonnegative directions (axes plus the all-ones diagonal).
        let mut dirs: Vec<Vec<f64>> = (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
        dirs.push(vec![1.0 / (dim as f64).sqrt(); dim]);
        let mut screen = Vec::with_capacity(dirs.len());
        for d in dirs {
            let bound = k.support(&d)?.powf(lambda) * l.support(&d)?.powf(1.0 - lambda);
            screen.push((d, bound));
        }
        Ok(GeomMeanBody { k, l, lambda, screen })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k(&self) -> &HPolytope {
        &self.k
    }

    pub fn l(&self) -> &HPolytope {
        &self.l
    }

    /// Tight coordinate bounding box: the axis supports of the body are the
    /// geometric means of the factors' axis supports.
    pub fn bounding_box(&self) -> Result<Vec<(f64, f64)>> {
        (0..self.k.dim())
            .map(|i| {
                let mut e = vec![0.0; self.k.dim()];
                e[i] = 1.0;
                let w = self.k.support(&e)?.powf(self.lambda)
                    * self.l.support(&e)?.powf(1.0 - self.lambda);
                Ok((-w, w))
            })
            .collect()
    }

    /// Decide membership of `x`, correct up to radial tolerance `tol`.
    ///
    /// In log coordinates the positive parts of unconditional bodies are
    /// convex and downward closed, so the largest radial multiple of |x|
    /// realizable as a coordinate-wise mean is a chain of partial maxima of a
    /// concave function; each level is unimodal and solved by golden-section
    /// over the Pareto frontier. Zero coordinates restrict to the spanned
    /// face.
    pub fn membership(&self, x: &[f64], tol: f64) -> Result<bool> {
        if x.len() != self.k.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.k.dim(),
                got: x.len(),
            });
        }
        let stop = 1.0 - tol.max(0.0);
        Ok(self.radial_sup_stop(x, stop) >= stop)
    }

    /// Infallible oracle for Monte Carlo paths.
    pub fn contains_mc(&self, x: &[f64]) -> bool {
        self.radial_sup_stop(x, 1.0) >= 1.0
    }

    /// sup { t : t x in body }, with 1.0 as the membership threshold.
    pub fn radial_sup(&self, x: &[f64]) -> f64 {
        self.radial_sup_stop(x, f64::INFINITY)
    }

    /// As `radial_sup`, but the search may return early with any value
    /// >= `stop` once the threshold is certified.
    fn radial_sup_stop(&self, x: &[f64], stop: f64) -> f64 {
        let a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let scale = a.iter().cloned().fold(0.0, f64::max);
        if scale <= 1e-14 {
            return f64::INFINITY;
        }
        // Outer screen: t* <= bound / (a.d), an upper bound that settles the
        // decision only when it already falls below the threshold. The exact
        // search still runs otherwise (in particular whenever the exact
        // radial supremum was requested).
        if stop.is_finite() {
            for (d, bound) in &self.screen {
                let v = dot(&a, d);
                if v > *bound {
                    let ub = bound / v;
                    if ub < stop {
                        return ub;
                    }
                }
            }
        }
        // Restrict to nonzero coordinates (the spanned coordinate face).
        let support_idx: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 1e-15 * scale).collect();
        let (k_sec, l_sec, a_sec) = if support_idx.len() == a.len() {
            (
                positive_constraints(&self.k, None),
                positive_constraints(&self.l, None),
                a.clone(),
            )
        } else {
            (
                positive_constraints(&self.k, Some(&support_idx)),
                positive_constraints(&self.l, Some(&support_idx)),
                support_idx.iter().map(|&i| a[i]).collect(),
            )
        };
        // Diagonal lower bound: y, z proportional to a.
        let rho_k = radial(&k_sec, &a_sec);
        let rho_l = radial(&l_sec, &a_sec);
        let diag = rho_k.powf(self.lambda) * rho_l.powf(1.0 - self.lambda);
        if diag >= stop {
            return diag;
        }
        let search = FrontierSearch {
            k: &k_sec,
            l: &l_sec,
            a: &a_sec,
            lambda: self.lambda,
            stop,
        };
        let nested = search.best(0, &mut vec![0.0; a_sec.len()]);
        nested.max(diag)
    }

    /// A random point of the body: coordinate-wise weighted geometric mean of
    /// uniform samples of K and L, with random signs.
    pub fn sample_product_point(&self, rng: &mut impl Rng) -> Result<Vec<f64>> {
        let y = sample_point(&self.k, rng)?;
        let z = sample_point(&self.l, rng)?;
        Ok(y
            .iter()
            .zip(&z)
            .map(|(yi, zi)| {
                let mag = yi.abs().powf(self.lambda) * zi.abs().powf(1.0 - self.lambda);
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            })
            .collect())
    }

    /// Monte Carlo volume over the tight coordinate box.
    pub fn volume(&self, mc: McSettings) -> Result<VolumeEstimate> {
        let bbox = self.bounding_box()?;
        volume_mc(|x| self.contains_mc(x), &bbox, mc.samples, mc.seed)
    }

    pub fn digest(&self) -> u64 {
        let mut f = crate::geometry::Fnv::new();
        f.write(&self.k.digest().to_le_bytes());
        f.write(&self.l.digest().to_le_bytes());
        f.write_f64(self.lambda);
        f.finish()
    }
}

/// Halfspace data restricted to a coordinate subset (or cloned as-is).
fn positive_constraints(body: &HPolytope, subset: Option<&[usize]>) -> Vec<(Vec<f64>, f64)> {
    body.halfspaces()
        .iter()
        .filter_map(|h| {
            let u: Vec<f64> = match subset {
                None => h.normal.clone(),
                Some(idx) => idx.iter().map(|&i| h.normal[i]).collect(),
            };
            if u.iter().map(|x| x * x).sum::<f64>() > 1e-24 {
                Some((u, h.offset))
            } else {
                None
            }
        })
        .collect()
}

/// Radial function of an H-polytope along `w`: min b / (u.w) over u.w > 0.
fn radial(constraints: &[(Vec<f64>, f64)], w: &[f64]) -> f64 {
    let mut r = f64::INFINITY;
    for (u, b) in constraints {
        let d = dot(u, w);
        if d > 1e-15 {
            r = r.min(b / d);
        }
    }
    r
}

struct FrontierSearch<'a> {
    k: &'a [(Vec<f64>, f64)],
    l: &'a [(Vec<f64>, f64)],
    a: &'a [f64],
    lambda: f64,
    /// Early-exit threshold: any value >= stop settles the decision.
    stop: f64,
}

impl FrontierSearch<'_> {
    /// Max feasible coordinate j of K given fixed earlier coordinates.
    fn cap(&self, j: usize, y: &[f64]) -> f64 {
        let mut cap = f64::INFINITY;
        for (u, b) in self.k {
            if u[j] > 1e-12 {
                let mut partial = 0.0;
                for i in 0..j {
                    partial += u[i] * y[i];
                }
                cap = cap.min((b - partial) / u[j]);
            }
        }
        cap
    }

    /// Objective at a full positive K-point y: the largest t with the induced
    /// L-point feasible, computed in log space to avoid overflow.
    fn eval(&self, y: &[f64]) -> f64 {
        let n = self.a.len();
        let inv = 1.0 / (1.0 - self.lambda);
        let mut logw = vec![0.0; n];
        let mut cmax = f64::NEG_INFINITY;
        for i in 0..n {
            if y[i] <= 0.0 {
                return 0.0;
            }
            logw[i] = (self.a[i].ln() - self.lambda * y[i].ln()) * inv;
            cmax = cmax.max(logw[i]);
        }
        let w: Vec<f64> = logw.iter().map(|lw| (lw - cmax).exp()).collect();
        let rho = radial(self.l, &w);
        if !(rho > 0.0) {
            return 0.0;
        }
        // rho_L(w_true) = rho * exp(-cmax); t = rho_L^(1-lambda).
        ((rho.ln() - cmax) * (1.0 - self.lambda)).exp()
    }

    /// Nested golden-section maximization over the Pareto frontier of K's
    /// positive part; each level is unimodal because partial maxima of a
    /// concave function over a convex set are concave.
    fn best(&self, level: usize, y: &mut Vec<f64>) -> f64 {
        let n = self.a.len();
        let cap = self.cap(level, y);
        if !(cap > 1e-14) {
            return 0.0;
        }
        if level == n - 1 {
            // The objective is nondecreasing in the last coordinate.
            y[level] = cap;
            return self.eval(y);
        }
        let lo = 1e-9 * cap;
        let hi = cap;
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut a = lo;
        let mut b = hi;
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let f = |t: f64, y: &mut Vec<f64>| -> f64 {
            y[level] = t;
            self.best(level + 1, y)
        };
        let mut best = f(hi, y);
        if best >= self.stop {
            return best;
        }
        let mut f1 = f(x1, y);
        let mut f2 = f(x2, y);
        best = best.max(f1).max(f2);
        if best >= self.stop {
            return best;
        }
        for _ in 0..44 {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INV_PHI * (b - a);
                f2 = f(x2, y);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INV_PHI * (b - a);
                f1 = f(x1, y);
            }
            best = best.max(f1).max(f2);
            if best >= self.stop {
                return best;
            }
        }
        best
    }
}

/// Verifies by membership sampling that the outer Wulff realization of
/// lambda Q_1 +_o (1-lambda) Q_0 is contained in Q_lambda, where
/// Q_mu = diag(t^(mu s1 + (1-mu) s0)) C_n intersected with K. With the
/// facet-inclusive grid the outer body is mathematically inside Q_lambda, so
/// the sampled test only strengthens the claim when it passes.
#[allow(clippy::too_many_arguments)]
pub fn lemma31_inclusion_check(
    k: &HPolytope,
    t: &[f64],
    s1: f64,
    s0: f64,
    lambda: f64,
    grid: &GridSpec,
    samples: u64,
    seed: u64,
) -> Result<CheckReport> {
    if !k.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidInput("lambda must lie in (0,1)".into()));
    }
    let dim = k.dim();
    let cube = HPolytope::unit_cube(dim);
    let q1 = scale_body(t, s1, &cube)?.intersect(k)?;
    let q0 = scale_body(t, s0, &cube)?.intersect(k)?;
    let s_mid = lambda * s1 + (1.0 - lambda) * s0;
    let q_mid = scale_body(t, s_mid, &cube)?.intersect(k)?;

    let dirs = DirectionSet::for_bodies(grid, &[&q1, &q0])?;
    let combo = log_combine(&q1, &q0, lambda, &dirs)?;

    let mut rng = crate::gen::seeded_rng(seed, 0);
    let mut violations: Vec<Vec<f64>> = Vec::new();
    for _ in 0..samples {
        let x = sample_point(&combo, &mut rng)?;
        if q_mid.membership(&x, 1e-9)? == crate::body::Location::Outside {
            violations.push(x);
        }
    }
    let frac_inside = 1.0 - violations.len() as f64 / samples as f64;
    let digest = InputDigest::new("lemma31-inclusion")
        .body(k)
        .f64(s1)
        .f64(s0)
        .f64(lambda)
        .dirs(&dirs)
        .u64(seed)
        .finish();
    let mut report = CheckReport::new("lemma31-inclusion", digest)
        .with_values(frac_inside, 1.0, 1e-12, 0.0)
        .param("lambda", lambda)
        .param("s", s1)
        .certificate("combination realized as outer Wulff over a facet-inclusive grid");
    report.samples = Some(samples);
    report.seed = Some(seed);
    report.grid = Some(crate::report::GridDesc {
        kind: format!("{:?}", grid.kind).to_lowercase(),
        m: grid.m,
        merged_facets: true,
    });
    for v in violations.iter().take(5) {
        report = report.certificate(format!("violation point: {v:?}"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::volume;

    #[test]
    fn exponent_serde_accepts_log_and_numbers() {
        let log: CombineExponent = serde_json::from_str("\"log\"").unwrap();
        assert_eq!(log, CombineExponent::Log);
        let p: CombineExponent = serde_json::from_str("0.5").unwrap();
        assert_eq!(p, CombineExponent::P(0.5));
        assert!(serde_json::from_str::<CombineExponent>("\"linear\"").is_err());
        assert_eq!(serde_json::to_string(&CombineExponent::Log).unwrap(), "\"log\"");
        let file: CombinationSpecFile = serde_json::from_str(
            r#"{"p":"log","weights":[0.5,0.5],"bodies":["a.json","b.json"],"grid":{"kind":"angle","m":64}}"#,
        )
        .unwrap();
        assert_eq!(file.p, CombineExponent::Log);
    }

    fn dirs_for(bodies: &[&HPolytope], m: usize) -> DirectionSet {
        DirectionSet::for_bodies(&GridSpec::default_for(bodies[0].dim()).with_m(m), bodies)
            .unwrap()
    }

    #[test]
    fn minkowski_midpoint_of_dilates() {
        let k = HPolytope::cube(2, 1.0);
        let l = HPolytope::cube(2, 3.0);
        let dirs = dirs_for(&[&k, &l], 256);
        let m = lp_combine(&k, &l, 1.0, 0.5, &dirs).unwrap();
        let v = volume(&m, None).unwrap().value;
        assert!((v - 16.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn identity_combination_reproduces_body() {
        let k = HPolytope::cross_polytope(2, 1.0);
        let dirs = dirs_for(&[&k], 128);
        for p in [0.5, 1.0, 2.0] {
            let c = lp_combine(&k, &k, p, 0.3, &dirs).unwrap();
            let pk = k.support_profile(&dirs).unwrap();
            let pc = c.support_profile(&dirs).unwrap();
            for (a, b) in pk.values().iter().zip(pc.values()) {
                assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }
    }

    #[test]
    fn p2_dilates_give_double_box() {
        let k = HPolytope::cube(2, 1.0);
        let l = HPolytope::cube(2, 7f64.sqrt());
        let dirs = dirs_for(&[&k, &l], 256);
        let m = lp_combine(&k, &l, 2.0, 0.5, &dirs).unwrap();
        // (0.5 * 1 + 0.5 * 7)^(1/2) = 2 on every direction ratio.
        let v = volume(&m, None).unwrap().value;
        assert!((v - 16.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn log_combination_of_boxes_is_geometric_mean_box() {
        let k = HPolytope::cube(2, 1.0);
        let l = HPolytope::box_body(&[2.0, 1.0]).unwrap();
        let dirs = dirs_for(&[&k, &l], 720);
        let c = log_combine(&k, &l, 0.5, &dirs).unwrap();
        let v = volume(&c, None).unwrap().value;
        let expect = 4.0 * std::f64::consts::SQRT_2;
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        // stable under strong refinement
        let fine = dirs_for(&[&k, &l], 10_000);
        let c2 = log_combine(&k, &l, 0.5, &fine).unwrap();
        let v2 = volume(&c2, None).unwrap().value;
        assert!((v2 - expect).abs() < 1e-9);
    }

    #[test]
    fn rotated_square_combination_shrinks_with_refinement() {
        let k = HPolytope::cube(2, 1.0);
        let l = k.rotated_2d(std::f64::consts::FRAC_PI_4).unwrap();
        let mut volumes = Vec::new();
        for m in [16usize, 64, 256, 1024] {
            let dirs = dirs_for(&[&k, &l], m);
            let c = log_combine(&k, &l, 0.5, &dirs).unwrap();
            volumes.push(volume(&c, None).unwrap().value);
        }
        for w in volumes.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{volumes:?}");
        }
        // Theorem guarantee: outer volume >= geometric mean of volumes.
        let rhs = 4.0f64;
        assert!(volumes.last().unwrap() >= &rhs);
    }

    #[test]
    fn multi_entry_box_closed_form() {
        let boxes = [
            HPolytope::box_body(&[1.0, 2.0]).unwrap(),
            HPolytope::box_body(&[3.0, 1.0]).unwrap(),
            HPolytope::box_body(&[2.0, 2.0]).unwrap(),
        ];
        let weights = [0.5, 0.25, 0.25];
        let refs: Vec<&HPolytope> = boxes.iter().collect();
        for m in [16usize, 64, 256] {
            let dirs = dirs_for(&refs, m);
            let c = log_combine_multi(&refs, &weights, &dirs).unwrap();
            let v = volume(&c, None).unwrap().value;
            let w0 = 1.0f64.powf(0.5) * 3.0f64.powf(0.25) * 2.0f64.powf(0.25);
            let w1 = 2.0f64.powf(0.5) * 1.0f64.powf(0.25) * 2.0f64.powf(0.25);
            let expect = 4.0 * w0 * w1;
            assert!((v - expect).abs() < 1e-9, "m={m}: {v} vs {expect}");
        }
    }

    #[test]
    fn nested_combination_lies_inside_multi_entry() {
        // Lemma direction: the multi-entry body contains the nested one.
        let k1 = HPolytope::cube(2, 1.0);
        let k2 = HPolytope::cross_polytope(2, 1.5);
        let k3 = HPolytope::box_body(&[2.0, 0.8]).unwrap();
        let weights = [0.5, 0.25, 0.25];
        let refs = [&k1, &k2, &k3];
        let dirs = dirs_for(&refs, 256);
        let multi = log_combine_multi(&refs, &weights, &dirs).unwrap();
        let lam = weights[0] + weights[1];
        let inner12 = log_combine(&k1, &k2, weights[0] / lam, &dirs).unwrap();
        let nested = log_combine(&inner12, &k3, lam, &dirs).unwrap();
        let mut rng = crate::gen::seeded_rng(11, 0);
        for _ in 0..2000 {
            let x = sample_point(&nested, &mut rng).unwrap();
            assert_ne!(
                multi.membership(&x, 1e-9).unwrap(),
                crate::body::Location::Outside
            );
        }
    }

    #[test]
    fn weight_sum_is_validated() {
        let k = HPolytope::cube(2, 1.0);
        let refs = [&k, &k];
        let dirs = dirs_for(&refs, 16);
        let err = log_combine_multi(&refs, &[0.6, 0.6], &dirs).unwrap_err();
        assert!(matches!(err, Error::WeightSumError { .. }));
    }

    #[test]
    fn slab_bodies_interpolate() {
        let fam = SlabFamily::new(
            2,
            vec![
                Slab {
                    v: vec![1.0, 0.0],
                    r: 2.0,
                    s: 1.0,
                },
                Slab {
                    v: vec![0.0, 1.0],
                    r: 1.0,
                    s: 1.0,
                },
            ],
        )
        .unwrap();
        let b = fam.body(0.5).unwrap();
        assert!((b.support(&[1.0, 0.0]).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((b.support(&[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        // endpoints
        assert!((fam.body(1.0).unwrap().support(&[1.0, 0.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!((fam.body(0.0).unwrap().support(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_slab_family_is_constant() {
        let fam = SlabFamily::new(
            2,
            vec![
                Slab {
                    v: vec![1.0, 0.0],
                    r: 1.5,
                    s: 1.5,
                },
                Slab {
                    v: vec![0.0, 1.0],
                    r: 0.7,
                    s: 0.7,
                },
            ],
        )
        .unwrap();
        for lam in [0.0, 0.3, 1.0] {
            let b = fam.body(lam).unwrap();
            assert!((volume(&b, None).unwrap().value - 4.0 * 1.5 * 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn scale_body_identity_and_area() {
        let k = HPolytope::unit_cube(2);
        let same = scale_body(&[1.0, 1.0], 3.0, &k).unwrap();
        assert!((volume(&same, None).unwrap().value - 1.0).abs() < 1e-12);
        let stretched = scale_body(&[2.0, 1.0], 1.0, &k).unwrap();
        assert!((stretched.support(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((stretched.support(&[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-12);
        assert!((volume(&stretched, None).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scale_composition_matches_summed_exponent() {
        let k = HPolytope::cross_polytope(2, 1.0);
        let t = [1.7, 0.4];
        let a = scale_body(&t, 0.8, &scale_body(&t, 0.5, &k).unwrap()).unwrap();
        let b = scale_body(&t, 1.3, &k).unwrap();
        for (ha, hb) in a.halfspaces().iter().zip(b.halfspaces()) {
            for (x, y) in ha.normal.iter().zip(&hb.normal) {
                assert!((x - y).abs() < 1e-12);
            }
            assert!((ha.offset - hb.offset).abs() < 1e-12);
        }
    }

    #[test]
    fn geom_mean_of_equal_bodies_is_the_body() {
        let k = HPolytope::cross_polytope(2, 1.0);
        let g = GeomMeanBody::new(k.clone(), k.clone(), 0.4).unwrap();
        let mut rng = crate::gen::seeded_rng(5, 0);
        for _ in 0..300 {
            let x: Vec<f64> = (0..2).map(|_| rng.random::<f64>() * 2.4 - 1.2).collect();
            let inside_k = k.membership(&x, 1e-9).unwrap() != crate::body::Location::Outside;
            let r: f64 = x.iter().map(|v| v.abs()).sum();
            if (r - 1.0).abs() < 1e-6 {
                continue; // skip knife-edge boundary points
            }
            assert_eq!(g.membership(&x, 1e-9).unwrap(), inside_k, "{x:?}");
        }
    }

    #[test]
    fn geom_mean_of_boxes_is_coordinate_gm_box() {
        let k = HPolytope::box_body(&[1.0, 1.0]).unwrap();
        let l = HPolytope::box_body(&[2.0, 1.0]).unwrap();
        let g = GeomMeanBody::new(k, l, 0.5).unwrap();
        let wx = 2f64.sqrt();
        for (x, want) in [
            (vec![wx - 1e-6, 0.99], true),
            (vec![wx + 1e-4, 0.0], false),
            (vec![0.0, 1.0 + 1e-4], false),
            (vec![-1.2, -0.7], true),
        ] {
            assert_eq!(g.membership(&x, 1e-9).unwrap(), want, "{x:?}");
        }
    }

    #[test]
    fn screen_near_miss_does_not_mask_deep_outside_points() {
        // A body with a diagonal facet the screen directions do not cover:
        // points barely past an axis bound but far outside radially must
        // still be rejected by the exact search.
        let k = HPolytope::unconditional_closure(
            2,
            vec![
                Halfspace::new(vec![1.0, 0.0], 1.0),
                Halfspace::new(vec![0.0, 1.0], 1.0),
                Halfspace::new(vec![2.0, 1.0], 5f64.sqrt() * 0.6),
            ],
        )
        .unwrap();
        let g = GeomMeanBody::new(k.clone(), k, 0.5).unwrap();
        let x = [1.0 + 1e-10, 0.2];
        // ray hits 2x + y = 0.6 sqrt(5) at t = 0.6 sqrt(5) / 2.2
        let expect = 0.6 * 5f64.sqrt() / 2.2;
        assert!(!g.membership(&x, 1e-9).unwrap());
        assert!((g.radial_sup(&x) - expect).abs() < 1e-6, "{}", g.radial_sup(&x));
    }

    #[test]
    fn geom_mean_points_lie_in_log_combination() {
        let mut rng = crate::gen::seeded_rng(17, 0);
        let k = crate::gen::random_unconditional_polygon(&mut rng, 3);
        let l = crate::gen::random_unconditional_polygon(&mut rng, 3);
        let lambda = 0.35;
        let g = GeomMeanBody::new(k.clone(), l.clone(), lambda).unwrap();
        let dirs = dirs_for(&[&k, &l], 360);
        let combo = log_combine(&k, &l, lambda, &dirs).unwrap();
        for _ in 0..1000 {
            let x = g.sample_product_point(&mut rng).unwrap();
            assert_ne!(
                combo.membership(&x, 1e-7).unwrap(),
                crate::body::Location::Outside,
                "{x:?}"
            );
        }
    }

    #[test]
    fn lemma31_cube_inside_large_body() {
        // K contains every cube in the family: Q_mu is the cube itself and
        // the inclusion is exact per coordinate.
        let k = HPolytope::cube(2, 50.0);
        let rep = lemma31_inclusion_check(
            &k,
            &[2.0, 0.7],
            0.6,
            -0.4,
            0.5,
            &GridSpec::default_for(2).with_m(64),
            2000,
            9,
        )
        .unwrap();
        assert_eq!(rep.verdict, crate::report::Verdict::Holds);
    }

    #[test]
    fn p_profile_decreases_to_log_profile() {
        // Mild support ratios keep the p -> 0 gap inside the stated band.
        let k = HPolytope::cube(2, 1.0);
        let l = HPolytope::box_body(&[1.1, 0.95]).unwrap();
        let dirs = dirs_for(&[&k, &l], 64);
        let lam = 0.5;
        let log_p = log_profile_multi(&[&k, &l], &[lam, 1.0 - lam], &dirs).unwrap();
        let mut prev: Option<Vec<f64>> = None;
        for p in [1.0, 0.5, 0.1, 0.01] {
            let pr = lp_profile(&k, &l, p, lam, &dirs).unwrap();
            if let Some(prev) = &prev {
                for (now, before) in pr.values().iter().zip(prev) {
                    assert!(*now <= before + 1e-12);
                }
            }
            if (p - 0.01f64).abs() < 1e-13 {
                for (a, b) in pr.values().iter().zip(log_p.values()) {
                    assert!(*a >= b - 1e-12);
                    assert!((a - b).abs() < 1e-4, "{a} vs {b}");
                }
            }
            prev = Some(pr.values().to_vec());
        }
    }
}
