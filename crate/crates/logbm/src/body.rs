//! Halfspace-represented convex bodies, direction sets, support profiles and
//! Wulff construction. Every body here contains the origin in its interior
//! and every operation is a pure function of immutable inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, dot, norm};
use crate::lp::{self, LpValue};
use crate::par;

/// Chord tolerance treated as "same direction" on the unit sphere.
pub const DIRECTION_TOL: f64 = 1e-10;
/// Offset tolerance for flag detection.
const OFFSET_TOL: f64 = 1e-12;

/// One halfspace `{ x : x.normal <= offset }` with a unit normal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Halfspace { normal, offset }
    }
}

/// Membership verdict for a point against a body.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// A bounded symmetric-capable convex body as an intersection of halfspaces.
///
/// Invariants established at construction: unit normals, positive offsets
/// (origin interior), per-direction canonical offsets (duplicates merged to
/// the tightest), and boundedness (normals positively span, checked with
/// n + 1 LP probes). The `symmetric`/`unconditional` flags are detected from
/// the halfspace list.
#[derive(Clone, Debug)]
pub struct HPolytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    symmetric: bool,
    unconditional: bool,
}

/// Serialized body format.
#[derive(Serialize, Deserialize)]
struct BodyFile {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    flags: BodyFlags,
}

#[derive(Serialize, Deserialize, Default)]
struct BodyFlags {
    symmetric: bool,
    unconditional: bool,
}

fn normalize_halfspaces(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Vec<Halfspace>> {
    let mut out = Vec::with_capacity(halfspaces.len());
    for (index, hs) in halfspaces.into_iter().enumerate() {
        if hs.normal.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: hs.normal.len(),
            });
        }
        let n = norm(&hs.normal);
        if n < 1e-12 {
            return Err(Error::SingularInput);
        }
        let normal: Vec<f64> = hs.normal.iter().map(|x| x / n).collect();
        let offset = hs.offset / n;
        if !(offset > 0.0) || !offset.is_finite() {
            return Err(Error::NonPositiveOffset { index });
        }
        out.push(Halfspace { normal, offset });
    }
    Ok(out)
}

/// Merge halfspaces with coinciding directions: the earliest input index in a
/// coincidence group supplies the normal, the tightest offset wins. A sorted
/// sweep on the first coordinate keeps large direction grids cheap.
fn dedupe_directions(halfspaces: Vec<Halfspace>) -> Vec<Halfspace> {
    let m = halfspaces.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        halfspaces[a].normal[0]
            .partial_cmp(&halfspaces[b].normal[0])
            .unwrap()
    });
    let mut visited = vec![false; m];
    let mut groups: Vec<(usize, f64)> = Vec::new(); // (representative, offset)
    for pos in 0..m {
        let i = order[pos];
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let mut rep = i;
        let mut best = halfspaces[i].offset;
        for &j in order[pos + 1..].iter() {
            if halfspaces[j].normal[0] - halfspaces[i].normal[0] > 2.0 * DIRECTION_TOL {
                break;
            }
            if visited[j] {
                continue;
            }
            if geometry::dist(&halfspaces[j].normal, &halfspaces[i].normal) <= DIRECTION_TOL {
                visited[j] = true;
                best = best.min(halfspaces[j].offset);
                rep = rep.min(j);
            }
        }
        groups.push((rep, best));
    }
    groups.sort_by_key(|&(rep, _)| rep);
    groups
        .into_iter()
        .map(|(rep, offset)| Halfspace {
            normal: halfspaces[rep].normal.clone(),
            offset,
        })
        .collect()
}

/// Sorted-by-first-coordinate lookup over a normal list.
struct NormalIndex<'a> {
    halfspaces: &'a [Halfspace],
    order: Vec<usize>,
}

impl<'a> NormalIndex<'a> {
    fn new(halfspaces: &'a [Halfspace]) -> Self {
        let mut order: Vec<usize> = (0..halfspaces.len()).collect();
        order.sort_by(|&a, &b| {
            halfspaces[a].normal[0]
                .partial_cmp(&halfspaces[b].normal[0])
                .unwrap()
        });
        NormalIndex { halfspaces, order }
    }

    /// Index of a halfspace whose normal is within `DIRECTION_TOL` of `u`.
    fn find(&self, u: &[f64]) -> Option<usize> {
        let lo = self
            .order
            .partition_point(|&i| self.halfspaces[i].normal[0] < u[0] - 2.0 * DIRECTION_TOL);
        for &i in &self.order[lo..] {
            if self.halfspaces[i].normal[0] > u[0] + 2.0 * DIRECTION_TOL {
                break;
            }
            if geometry::dist(&self.halfspaces[i].normal, u) <= DIRECTION_TOL {
                return Some(i);
            }
        }
        None
    }
}

fn detect_symmetric(halfspaces: &[Halfspace]) -> bool {
    let idx = NormalIndex::new(halfspaces);
    halfspaces.iter().all(|hs| {
        let neg = geometry::negated(&hs.normal);
        idx.find(&neg)
            .map(|j| (halfspaces[j].offset - hs.offset).abs() <= OFFSET_TOL)
            .unwrap_or(false)
    })
}

fn sign_patterns(dim: usize) -> Vec<Vec<f64>> {
    (0..1usize << dim)
        .map(|mask| {
            (0..dim)
                .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect()
        })
        .collect()
}

fn detect_unconditional(dim: usize, halfspaces: &[Halfspace]) -> bool {
    if dim > 16 {
        return false;
    }
    let idx = NormalIndex::new(halfspaces);
    let patterns = sign_patterns(dim);
    halfspaces.iter().all(|hs| {
        patterns.iter().all(|sigma| {
            let flipped: Vec<f64> = hs.normal.iter().zip(sigma).map(|(u, s)| u * s).collect();
            idx.find(&flipped)
                .map(|j| (halfspaces[j].offset - hs.offset).abs() <= OFFSET_TOL)
                .unwrap_or(false)
        })
    })
}

impl HPolytope {
    /// Build and validate a body from raw halfspace data. Normals are
    /// normalized, duplicate directions merged, boundedness verified.
    pub fn new(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let halfspaces = dedupe_directions(normalize_halfspaces(dim, halfspaces)?);
        let body = HPolytope {
            dim,
            symmetric: detect_symmetric(&halfspaces),
            unconditional: detect_unconditional(dim, &halfspaces),
            halfspaces,
        };
        body.check_bounded()?;
        Ok(body)
    }

    /// As `new`, but validates claimed flags from a file against detection.
    pub fn with_claimed_flags(
        dim: usize,
        halfspaces: Vec<Halfspace>,
        symmetric: bool,
        unconditional: bool,
    ) -> Result<Self> {
        let body = Self::new(dim, halfspaces)?;
        if symmetric && !body.symmetric {
            return Err(Error::InvalidInput(
                "file claims a symmetric body but the halfspace list is not closed under negation"
                    .into(),
            ));
        }
        if unconditional && !body.unconditional {
            return Err(Error::InvalidInput(
                "file claims an unconditional body but the halfspace list is not closed under coordinate sign flips"
                    .into(),
            ));
        }
        Ok(body)
    }

    /// Close the halfspace list under all coordinate sign flips, then
    /// validate. Accepts raw data that is unbounded before closure (a slab
    /// closes to a bounded body).
    pub fn unconditional_closure(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        let base = normalize_halfspaces(dim, halfspaces)?;
        let mut closed = Vec::with_capacity(base.len() << dim);
        for hs in &base {
            for sigma in sign_patterns(dim) {
                closed.push(Halfspace {
                    normal: hs.normal.iter().zip(&sigma).map(|(u, s)| u * s).collect(),
                    offset: hs.offset,
                });
            }
        }
        Self::new(dim, closed)
    }

    fn check_bounded(&self) -> Result<()> {
        // Probe directions e_1..e_n and -(1,..,1)/sqrt(n): they positively
        // span, so finite support along all of them bounds the body.
        let n = self.dim;
        let mut probes: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        probes.push(vec![-1.0 / (n as f64).sqrt(); n]);
        for p in &probes {
            match self.support_lp(p)? {
                LpValue::Optimal(_) => {}
                LpValue::Unbounded => return Err(Error::UnboundedBody),
            }
        }
        Ok(())
    }

    fn support_lp(&self, c: &[f64]) -> Result<LpValue> {
        let normals: Vec<Vec<f64>> = self.halfspaces.iter().map(|h| h.normal.clone()).collect();
        let offsets: Vec<f64> = self.halfspaces.iter().map(|h| h.offset).collect();
        lp::max_dot(&normals, &offsets, c).map_err(Error::Numerical)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_unconditional(&self) -> bool {
        self.unconditional
    }

    /// Support function h(u) = max{ x.u : x in body }, by linear programming.
    /// Positively homogeneous in `u`; `u` need not be unit.
    pub fn support(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        if norm(u) < 1e-12 {
            return Err(Error::SingularInput);
        }
        match self.support_lp(u)? {
            LpValue::Optimal(v) => Ok(v),
            LpValue::Unbounded => Err(Error::UnboundedBody),
        }
    }

    /// Support values over a direction set, evaluated in parallel. Values for
    /// a symmetric body are symmetrized across negation pairs so the profile
    /// is exactly even.
    pub fn support_profile(&self, dirs: &DirectionSet) -> Result<SupportProfile> {
        self.support_profile_forced(cfg!(feature = "parallel"), dirs)
    }

    #[doc(hidden)]
    pub fn support_profile_forced(
        &self,
        parallel: bool,
        dirs: &DirectionSet,
    ) -> Result<SupportProfile> {
        if dirs.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: dirs.dim,
            });
        }
        let raw: Vec<Result<f64>> = par::map_indexed_forced(parallel, dirs.len(), |i| {
            self.support(&dirs.directions[i])
        });
        let mut values = Vec::with_capacity(raw.len());
        for v in raw {
            values.push(v?);
        }
        if self.symmetric {
            let mut even = values.clone();
            for (i, &j) in dirs.negation_pairs.iter().enumerate() {
                even[i] = 0.5 * (values[i] + values[j]);
            }
            values = even;
        }
        SupportProfile::new(dirs.clone(), values)
    }

    /// Classify a point as inside / boundary / outside at tolerance `tol`.
    pub fn membership(&self, x: &[f64], tol: f64) -> Result<Location> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if tol < 0.0 {
            return Err(Error::InvalidInput("membership tolerance must be >= 0".into()));
        }
        let mut on_boundary = false;
        for hs in &self.halfspaces {
            let v = dot(&hs.normal, x);
            if v > hs.offset + tol {
                return Ok(Location::Outside);
            }
            if v >= hs.offset - tol {
                on_boundary = true;
            }
        }
        Ok(if on_boundary {
            Location::Boundary
        } else {
            Location::Inside
        })
    }

    /// Strict halfspace test (no tolerance); useful as a Monte Carlo oracle.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.halfspaces.iter().all(|hs| dot(&hs.normal, x) <= hs.offset)
    }

    /// All vertices, exact enumeration for dim <= 3. In 2-D the cycle is
    /// counterclockwise.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        let verts = match self.dim {
            1 => self.vertices_1d(),
            2 => self.hull2d()?.0,
            3 => self.vertices_3d(),
            d => return Err(Error::DimensionTooHigh { dim: d, max: 3 }),
        };
        if verts.len() < self.dim + 1 {
            return Err(Error::DegenerateBody);
        }
        Ok(verts)
    }

    fn vertices_1d(&self) -> Vec<Vec<f64>> {
        let mut hi = f64::INFINITY;
        let mut lo = f64::NEG_INFINITY;
        for hs in &self.halfspaces {
            if hs.normal[0] > 0.0 {
                hi = hi.min(hs.offset / hs.normal[0]);
            } else {
                lo = lo.max(-hs.offset / -hs.normal[0]);
            }
        }
        vec![vec![lo], vec![hi]]
    }

    /// 2-D vertex enumeration through the polar dual: facets of the body are
    /// the vertices of conv{ u_j / b_j }, and consecutive hull facets meet in
    /// a body vertex. Returns (CCW vertices, facet constraint indices in CCW
    /// order); vertex k is the intersection of facets k and k+1 (mod len).
    pub(crate) fn hull2d(&self) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let pts: Vec<(f64, f64)> = self
            .halfspaces
            .iter()
            .map(|h| (h.normal[0] / h.offset, h.normal[1] / h.offset))
            .collect();
        let hull = convex_hull_ccw(&pts);
        if hull.len() < 3 {
            return Err(Error::DegenerateBody);
        }
        let k = hull.len();
        let mut verts = Vec::with_capacity(k);
        for t in 0..k {
            let a = &self.halfspaces[hull[t]];
            let b = &self.halfspaces[hull[(t + 1) % k]];
            let det = geometry::cross2(a.normal[0], a.normal[1], b.normal[0], b.normal[1]);
            if det.abs() < 1e-14 {
                return Err(Error::Numerical(
                    "near-parallel facet pair in 2-D enumeration".into(),
                ));
            }
            let x = (a.offset * b.normal[1] - b.offset * a.normal[1]) / det;
            let y = (a.normal[0] * b.offset - b.normal[0] * a.offset) / det;
            verts.push(vec![x, y]);
        }
        // Tolerance-deduplicate consecutive coincident vertices.
        let mut out_v: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut out_f: Vec<usize> = Vec::with_capacity(k);
        for t in 0..k {
            if out_v
                .last()
                .map(|p| geometry::dist(p, &verts[t]) <= 1e-9)
                .unwrap_or(false)
            {
                continue;
            }
            out_v.push(verts[t].clone());
            out_f.push(hull[(t + 1) % k]);
        }
        if out_v.len() >= 2 && geometry::dist(&out_v[0], out_v.last().unwrap()) <= 1e-9 {
            out_v.pop();
            out_f.pop();
        }
        Ok((out_v, out_f))
    }

    fn vertices_3d(&self) -> Vec<Vec<f64>> {
        let m = self.halfspaces.len();
        let hs = &self.halfspaces;
        let mut candidates: Vec<Vec<f64>> = par::map_indexed(m, |i| {
            let mut local = Vec::new();
            for j in i + 1..m {
                for k in j + 1..m {
                    let a = vec![
                        hs[i].normal.clone(),
                        hs[j].normal.clone(),
                        hs[k].normal.clone(),
                    ];
                    let b = vec![hs[i].offset, hs[j].offset, hs[k].offset];
                    if let Some(x) = geometry::solve_small(a, b) {
                        if hs
                            .iter()
                            .all(|h| dot(&h.normal, &x) <= h.offset + 1e-9)
                        {
                            local.push(x);
                        }
                    }
                }
            }
            local
        })
        .into_iter()
        .flatten()
        .collect();
        candidates.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let mut verts: Vec<Vec<f64>> = Vec::new();
        for c in candidates {
            if verts.iter().all(|v| geometry::dist(v, &c) > 1e-9) {
                verts.push(c);
            }
        }
        verts
    }

    /// Indices of halfspaces that are facets (non-redundant), certified by
    /// LP: constraint j is redundant iff its maximum over the remaining kept
    /// set stays at or below its own offset. Removal is sequential, so the
    /// body never changes.
    pub fn essential_halfspaces(&self) -> Result<Vec<usize>> {
        let mut kept: Vec<bool> = vec![true; self.halfspaces.len()];
        for j in 0..self.halfspaces.len() {
            let normals: Vec<Vec<f64>> = self
                .halfspaces
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j && kept[*i])
                .map(|(_, h)| h.normal.clone())
                .collect();
            let offsets: Vec<f64> = self
                .halfspaces
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j && kept[*i])
                .map(|(_, h)| h.offset)
                .collect();
            match lp::max_dot(&normals, &offsets, &self.halfspaces[j].normal)
                .map_err(Error::Numerical)?
            {
                LpValue::Optimal(v) => {
                    if v <= self.halfspaces[j].offset + 1e-9 {
                        kept[j] = false;
                    }
                }
                LpValue::Unbounded => {} // load-bearing constraint
            }
        }
        Ok((0..self.halfspaces.len()).filter(|&j| kept[j]).collect())
    }

    /// Body with only essential halfspaces.
    pub fn essential_body(&self) -> Result<HPolytope> {
        let keep = self.essential_halfspaces()?;
        HPolytope::new(
            self.dim,
            keep.iter().map(|&j| self.halfspaces[j].clone()).collect(),
        )
    }

    /// Close the halfspace list under coordinate sign flips; idempotent, and
    /// the result is contained in the input body.
    pub fn normalize_unconditional(&self) -> HPolytope {
        Self::unconditional_closure(self.dim, self.halfspaces.clone())
            .expect("closure of a bounded body stays bounded")
    }

    /// Axis-aligned bounding box [(lo_i, hi_i)] from support values.
    pub fn bounding_box(&self) -> Result<Vec<(f64, f64)>> {
        (0..self.dim)
            .map(|i| {
                let mut e = vec![0.0; self.dim];
                e[i] = 1.0;
                let hi = self.support(&e)?;
                e[i] = -1.0;
                let lo = -self.support(&e)?;
                Ok((lo, hi))
            })
            .collect()
    }

    /// Linear image under an invertible diagonal-free map is not needed;
    /// dilation by c > 0 scales offsets.
    pub fn dilate(&self, c: f64) -> Result<HPolytope> {
        if !(c > 0.0) {
            return Err(Error::InvalidInput("dilation factor must be > 0".into()));
        }
        HPolytope::new(
            self.dim,
            self.halfspaces
                .iter()
                .map(|h| Halfspace::new(h.normal.clone(), h.offset * c))
                .collect(),
        )
    }

    /// Rotate a planar body by `angle`.
    pub fn rotated_2d(&self, angle: f64) -> Result<HPolytope> {
        if self.dim != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.dim,
            });
        }
        let (s, c) = angle.sin_cos();
        HPolytope::new(
            2,
            self.halfspaces
                .iter()
                .map(|h| {
                    Halfspace::new(
                        vec![
                            c * h.normal[0] - s * h.normal[1],
                            s * h.normal[0] + c * h.normal[1],
                        ],
                        h.offset,
                    )
                })
                .collect(),
        )
    }

    /// Cartesian product; halfspaces lift with zero padding.
    pub fn product(&self, other: &HPolytope) -> Result<HPolytope> {
        let dim = self.dim + other.dim;
        let mut hs = Vec::with_capacity(self.halfspaces.len() + other.halfspaces.len());
        for h in &self.halfspaces {
            let mut n = h.normal.clone();
            n.resize(dim, 0.0);
            hs.push(Halfspace::new(n, h.offset));
        }
        for h in &other.halfspaces {
            let mut n = vec![0.0; self.dim];
            n.extend_from_slice(&h.normal);
            hs.push(Halfspace::new(n, h.offset));
        }
        HPolytope::new(dim, hs)
    }

    /// Intersection by halfspace concatenation.
    pub fn intersect(&self, other: &HPolytope) -> Result<HPolytope> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut hs = self.halfspaces.clone();
        hs.extend(other.halfspaces.iter().cloned());
        HPolytope::new(self.dim, hs)
    }

    /// The cube [-half, half]^n.
    pub fn cube(dim: usize, half: f64) -> HPolytope {
        let mut hs = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut u = vec![0.0; dim];
                u[i] = s;
                hs.push(Halfspace::new(u, half));
            }
        }
        HPolytope::new(dim, hs).expect("cube is bounded")
    }

    /// The unit-volume cube [-1/2, 1/2]^n.
    pub fn unit_cube(dim: usize) -> HPolytope {
        Self::cube(dim, 0.5)
    }

    /// Axis box with given half-widths.
    pub fn box_body(half_widths: &[f64]) -> Result<HPolytope> {
        let dim = half_widths.len();
        let mut hs = Vec::with_capacity(2 * dim);
        for (i, &a) in half_widths.iter().enumerate() {
            for s in [1.0, -1.0] {
                let mut u = vec![0.0; dim];
                u[i] = s;
                hs.push(Halfspace::new(u, a));
            }
        }
        HPolytope::new(dim, hs)
    }

    /// conv{ +-scale e_i }: sum_i |x_i| <= scale.
    pub fn cross_polytope(dim: usize, scale: f64) -> HPolytope {
        let r = (dim as f64).sqrt();
        let hs = sign_patterns(dim)
            .into_iter()
            .map(|sigma| {
                Halfspace::new(sigma.iter().map(|s| s / r).collect(), scale / r)
            })
            .collect();
        HPolytope::new(dim, hs).expect("cross polytope is bounded")
    }

    /// Symmetric segment [-half, half] in R^1.
    pub fn segment(half: f64) -> HPolytope {
        HPolytope::new(
            1,
            vec![
                Halfspace::new(vec![1.0], half),
                Halfspace::new(vec![-1.0], half),
            ],
        )
        .expect("segment is bounded")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&BodyFile {
            dim: self.dim,
            halfspaces: self.halfspaces.clone(),
            flags: BodyFlags {
                symmetric: self.symmetric,
                unconditional: self.unconditional,
            },
        })
        .expect("body serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<HPolytope> {
        let file: BodyFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("body parse error: {e}")))?;
        Self::with_claimed_flags(
            file.dim,
            file.halfspaces,
            file.flags.symmetric,
            file.flags.unconditional,
        )
    }

    /// Stable content digest used in report provenance.
    pub fn digest(&self) -> u64 {
        let mut h = geometry::Fnv::new();
        h.write_usize(self.dim);
        for hs in &self.halfspaces {
            for &x in &hs.normal {
                h.write_f64(x);
            }
            h.write_f64(hs.offset);
        }
        h.finish()
    }
}

/// Monotone-chain convex hull (strictly convex turns), CCW order.
fn convex_hull_ccw(pts: &[(f64, f64)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a].partial_cmp(&pts[b]).unwrap());
    let scale = pts
        .iter()
        .map(|p| p.0.abs().max(p.1.abs()))
        .fold(1.0f64, f64::max);
    let eps = 1e-13 * scale * scale;
    let cross = |o: usize, a: usize, b: usize| -> f64 {
        geometry::cross2(
            pts[a].0 - pts[o].0,
            pts[a].1 - pts[o].1,
            pts[b].0 - pts[o].0,
            pts[b].1 - pts[o].1,
        )
    };
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], i) <= eps {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], i) <= eps {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Provenance tag of a direction set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionSource {
    Grid,
    FacetNormals,
    Merged,
}

/// Direction grid request, as stored in combination spec files.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: GridKind,
    pub m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Angle,
    Fibonacci,
}

impl GridSpec {
    /// Default desk-scale grid for a dimension: 720 angles in the plane,
    /// a 2000-point symmetrized Fibonacci sphere in 3-D.
    pub fn default_for(dim: usize) -> GridSpec {
        if dim <= 2 {
            GridSpec {
                kind: GridKind::Angle,
                m: 720,
            }
        } else {
            GridSpec {
                kind: GridKind::Fibonacci,
                m: 2000,
            }
        }
    }

    pub fn with_m(self, m: usize) -> GridSpec {
        GridSpec { m, ..self }
    }
}

/// Finite sign-symmetric set of unit directions.
#[derive(Clone, Debug)]
pub struct DirectionSet {
    dim: usize,
    directions: Vec<Vec<f64>>,
    source: DirectionSource,
    negation_pairs: Vec<usize>,
}

impl DirectionSet {
    fn build(dim: usize, dirs: Vec<Vec<f64>>, source: DirectionSource) -> Result<DirectionSet> {
        // Normalize, close under negation, deduplicate keep-first.
        let mut normd: Vec<Vec<f64>> = Vec::with_capacity(dirs.len() * 2);
        for d in dirs {
            if d.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: d.len(),
                });
            }
            let n = norm(&d);
            if n < 1e-12 {
                return Err(Error::SingularInput);
            }
            normd.push(d.iter().map(|x| x / n).collect());
        }
        let negs: Vec<Vec<f64>> = normd.iter().map(|d| geometry::negated(d)).collect();
        normd.extend(negs);
        let hs: Vec<Halfspace> = normd.into_iter().map(|d| Halfspace::new(d, 1.0)).collect();
        let directions: Vec<Vec<f64>> = dedupe_directions(hs)
            .into_iter()
            .map(|h| h.normal)
            .collect();
        // Positive span: sign-closed sets positively span iff they span.
        let refs: Vec<&[f64]> = directions.iter().map(|d| d.as_slice()).collect();
        if geometry::orthonormalize(&refs, 1e-10).len() < dim {
            return Err(Error::InvalidInput(
                "directions do not span the ambient space".into(),
            ));
        }
        let negation_pairs = negation_pairs(&directions);
        Ok(DirectionSet {
            dim,
            directions,
            source,
            negation_pairs,
        })
    }

    /// `m` equally spaced planar angles (sign-symmetric for even m; odd m is
    /// symmetrized).
    pub fn angle_grid(m: usize) -> Result<DirectionSet> {
        if m < 2 {
            return Err(Error::InvalidInput("angle grid needs m >= 2".into()));
        }
        let dirs = (0..m)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * (k as f64) / (m as f64);
                vec![a.cos(), a.sin()]
            })
            .collect();
        Self::build(2, dirs, DirectionSource::Grid)
    }

    /// Symmetrized Fibonacci sphere with `m` seed points in 3-D.
    pub fn fibonacci_sphere(m: usize) -> Result<DirectionSet> {
        if m < 3 {
            return Err(Error::InvalidInput("fibonacci grid needs m >= 3".into()));
        }
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let dirs = (0..m)
            .map(|k| {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / (m as f64);
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = 2.0 * std::f64::consts::PI * (k as f64) / golden;
                vec![r * phi.cos(), r * phi.sin(), z]
            })
            .collect();
        Self::build(3, dirs, DirectionSource::Grid)
    }

    /// The +-e_i axes.
    pub fn axes(dim: usize) -> Result<DirectionSet> {
        let dirs = (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
        Self::build(dim, dirs, DirectionSource::Grid)
    }

    /// All halfspace normals of a body (facet normals after redundancy, plus
    /// any redundant directions, which are harmless for Wulff outer bodies).
    pub fn facet_normals(body: &HPolytope) -> Result<DirectionSet> {
        Self::build(
            body.dim,
            body.halfspaces.iter().map(|h| h.normal.clone()).collect(),
            DirectionSource::FacetNormals,
        )
    }

    /// Grid of the requested kind for `dim`.
    pub fn from_grid(dim: usize, grid: &GridSpec) -> Result<DirectionSet> {
        match (dim, grid.kind) {
            (1, _) => Self::axes(1),
            (2, GridKind::Angle) => Self::angle_grid(grid.m),
            (3, GridKind::Fibonacci) => Self::fibonacci_sphere(grid.m),
            (d, GridKind::Angle) if d != 2 => Err(Error::InvalidInput(format!(
                "angle grid is planar, body dim is {d}"
            ))),
            (d, GridKind::Fibonacci) => Err(Error::InvalidInput(format!(
                "fibonacci grid is 3-D, body dim is {d}"
            ))),
            _ => unreachable!(),
        }
    }

    /// Default grid for the bodies' dimension merged with all their facet
    /// normals (facet directions first, so exact axis directions survive
    /// dedup).
    pub fn for_bodies(grid: &GridSpec, bodies: &[&HPolytope]) -> Result<DirectionSet> {
        let dim = bodies
            .first()
            .ok_or_else(|| Error::InvalidInput("need at least one body".into()))?
            .dim;
        for b in bodies {
            if b.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: b.dim,
                });
            }
        }
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for b in bodies {
            dirs.extend(b.halfspaces.iter().map(|h| h.normal.clone()));
        }
        dirs.extend(Self::from_grid(dim, grid)?.directions);
        Self::build(dim, dirs, DirectionSource::Merged)
    }

    /// Union of two direction sets (self first).
    pub fn merge(&self, other: &DirectionSet) -> Result<DirectionSet> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut dirs = self.directions.clone();
        dirs.extend(other.directions.iter().cloned());
        Self::build(self.dim, dirs, DirectionSource::Merged)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn source(&self) -> DirectionSource {
        self.source
    }

    /// Index of the negation of direction `i`.
    pub fn negation_pair(&self, i: usize) -> usize {
        self.negation_pairs[i]
    }

    pub fn digest(&self) -> u64 {
        let mut h = geometry::Fnv::new();
        h.write_usize(self.dim);
        for d in &self.directions {
            for &x in d {
                h.write_f64(x);
            }
        }
        h.finish()
    }
}

fn negation_pairs(directions: &[Vec<f64>]) -> Vec<usize> {
    let hs: Vec<Halfspace> = directions
        .iter()
        .map(|d| Halfspace::new(d.clone(), 1.0))
        .collect();
    let idx = NormalIndex::new(&hs);
    directions
        .iter()
        .enumerate()
        .map(|(i, d)| idx.find(&geometry::negated(d)).unwrap_or(i))
        .collect()
}

/// Positive support values over a direction set.
#[derive(Clone, Debug)]
pub struct SupportProfile {
    directions: DirectionSet,
    values: Vec<f64>,
}

impl SupportProfile {
    pub fn new(directions: DirectionSet, values: Vec<f64>) -> Result<SupportProfile> {
        if directions.len() != values.len() {
            return Err(Error::InvalidInput(
                "profile length does not match direction count".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidInput(
                "support profile values must be finite and positive".into(),
            ));
        }
        // Profiles represent even support data.
        for (i, &v) in values.iter().enumerate() {
            let j = directions.negation_pair(i);
            if (v - values[j]).abs() > 1e-12 * v.max(1.0) {
                return Err(Error::InvalidInput(
                    "support profile must be even (equal values at antipodal directions)".into(),
                ));
            }
        }
        Ok(SupportProfile { directions, values })
    }

    pub fn directions(&self) -> &DirectionSet {
        &self.directions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise transform of the values over the same directions.
    pub fn map(&self, f: impl Fn(usize, f64) -> f64) -> Result<SupportProfile> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i, v))
            .collect();
        SupportProfile::new(self.directions.clone(), values)
    }
}

/// The Wulff body of a positive profile: the intersection of `x.u <= f(u)`
/// over the profile's directions. An outer approximation of any body whose
/// sphere-wide support function restricts to `f`.
pub fn wulff(profile: &SupportProfile) -> Result<HPolytope> {
    let hs = profile
        .directions
        .directions()
        .iter()
        .zip(&profile.values)
        .map(|(u, &v)| Halfspace::new(u.clone(), v))
        .collect();
    HPolytope::new(profile.directions.dim, hs).map_err(|e| match e {
        Error::UnboundedBody => Error::UnboundedResult,
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2() -> HPolytope {
        HPolytope::unit_cube(2)
    }

    #[test]
    fn cube_support_values() {
        let p = c2();
        let mut e1 = vec![1.0, 0.0];
        assert!((p.support(&e1).unwrap() - 0.5).abs() < 1e-12);
        e1 = vec![std::f64::consts::FRAC_1_SQRT_2; 2];
        assert!((p.support(&e1).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn membership_trichotomy_on_cube() {
        let p = c2();
        assert_eq!(p.membership(&[0.0, 0.0], 1e-9).unwrap(), Location::Inside);
        assert_eq!(p.membership(&[0.5, 0.0], 1e-9).unwrap(), Location::Boundary);
        assert_eq!(p.membership(&[0.6, 0.0], 1e-9).unwrap(), Location::Outside);
    }

    #[test]
    fn cube_vertices_ccw() {
        let v = c2().vertices().unwrap();
        assert_eq!(v.len(), 4);
        // CCW: shoelace positive
        let mut area2 = 0.0;
        for i in 0..v.len() {
            let j = (i + 1) % v.len();
            area2 += v[i][0] * v[j][1] - v[j][0] * v[i][1];
        }
        assert!(area2 > 0.0);
        assert!((area2 / 2.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cross_polytope_vertices() {
        let p = HPolytope::cross_polytope(2, 1.0);
        let v = p.vertices().unwrap();
        assert_eq!(v.len(), 4);
        for vert in &v {
            let r: f64 = vert.iter().map(|x| x.abs()).sum();
            assert!((r - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn hexagon_vertices_have_two_active_constraints() {
        // Regular symmetric hexagon from 3 direction pairs.
        let mut hs = Vec::new();
        for k in 0..3 {
            let a = std::f64::consts::PI * (k as f64) / 3.0 + 0.2;
            hs.push(Halfspace::new(vec![a.cos(), a.sin()], 1.0));
            hs.push(Halfspace::new(vec![-a.cos(), -a.sin()], 1.0));
        }
        let p = HPolytope::new(2, hs).unwrap();
        let verts = p.vertices().unwrap();
        assert_eq!(verts.len(), 6);
        for v in &verts {
            let active = p
                .halfspaces()
                .iter()
                .filter(|h| (dot(&h.normal, v) - h.offset).abs() < 1e-9)
                .count();
            assert_eq!(active, 2);
        }
    }

    #[test]
    fn slab_is_rejected_as_unbounded() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let err = HPolytope::new(
            2,
            vec![
                Halfspace::new(vec![s, s], 1.0),
                Halfspace::new(vec![-s, -s], 1.0),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnboundedBody));
    }

    #[test]
    fn unconditional_closure_of_slab_is_rotated_square() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = HPolytope::unconditional_closure(
            2,
            vec![
                Halfspace::new(vec![s, s], 1.0),
                Halfspace::new(vec![-s, -s], 1.0),
            ],
        )
        .unwrap();
        assert_eq!(p.halfspaces().len(), 4);
        assert!(p.is_unconditional());
        // Support along e_1 is sqrt(2) for {|x_1 + x_2| <= sqrt2, |x_1 - x_2| <= sqrt2}.
        assert!((p.support(&[1.0, 0.0]).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn normalize_unconditional_is_idempotent_on_cube() {
        let p = HPolytope::unit_cube(3);
        let q = p.normalize_unconditional();
        assert_eq!(q.halfspaces().len(), p.halfspaces().len());
        assert!(q.is_unconditional());
    }

    #[test]
    fn flags_detected() {
        assert!(c2().is_symmetric());
        assert!(c2().is_unconditional());
        let asym = HPolytope::new(
            2,
            vec![
                Halfspace::new(vec![1.0, 0.0], 1.0),
                Halfspace::new(vec![-1.0, 0.0], 2.0),
                Halfspace::new(vec![0.0, 1.0], 1.0),
                Halfspace::new(vec![0.0, -1.0], 1.0),
            ],
        )
        .unwrap();
        assert!(!asym.is_symmetric());
        assert!(!asym.is_unconditional());
    }

    #[test]
    fn wulff_axes_profile_gives_cube() {
        let dirs = DirectionSet::axes(2).unwrap();
        let profile =
            SupportProfile::new(dirs, vec![0.5; 4]).unwrap();
        let p = wulff(&profile).unwrap();
        assert!((p.support(&[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(p.vertices().unwrap().len(), 4);
    }

    #[test]
    fn wulff_grid_constraints_redundant_for_cube() {
        let p = c2();
        let grid = DirectionSet::for_bodies(&GridSpec::default_for(2).with_m(360), &[&p]).unwrap();
        let profile = p.support_profile(&grid).unwrap();
        let w = wulff(&profile).unwrap();
        let keep = w.essential_halfspaces().unwrap();
        assert_eq!(keep.len(), 4);
        for &j in &keep {
            let u = &w.halfspaces()[j].normal;
            assert!(u.iter().any(|x| (x.abs() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn wulff_box_from_two_offsets() {
        let dirs = DirectionSet::axes(2).unwrap();
        let values: Vec<f64> = dirs
            .directions()
            .iter()
            .map(|d| if d[0].abs() > 0.5 { std::f64::consts::SQRT_2 } else { 1.0 })
            .collect();
        let w = wulff(&SupportProfile::new(dirs, values).unwrap()).unwrap();
        assert!((w.support(&[1.0, 0.0]).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((w.support(&[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn direction_set_dedupes_and_pairs() {
        let d = DirectionSet::angle_grid(8).unwrap();
        assert_eq!(d.len(), 8);
        for i in 0..d.len() {
            let j = d.negation_pair(i);
            let s: f64 = d.directions()[i]
                .iter()
                .zip(&d.directions()[j])
                .map(|(a, b)| (a + b).abs())
                .sum();
            assert!(s < 1e-9);
        }
    }

    #[test]
    fn merged_grid_puts_facets_first() {
        let p = c2();
        let d = DirectionSet::for_bodies(&GridSpec::default_for(2).with_m(720), &[&p]).unwrap();
        // exact axis directions survive
        assert!(d
            .directions()
            .iter()
            .any(|u| u[0] == 1.0 && u[1] == 0.0));
        assert_eq!(d.source(), DirectionSource::Merged);
    }

    #[test]
    fn body_json_round_trip() {
        let p = HPolytope::cross_polytope(2, 1.3);
        let q = HPolytope::from_json(&p.to_json()).unwrap();
        let grid = DirectionSet::angle_grid(64).unwrap();
        let a = p.support_profile(&grid).unwrap();
        let b = q.support_profile(&grid).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn claimed_flag_mismatch_is_rejected() {
        let json = r#"{"dim":2,"halfspaces":[{"normal":[1,0],"offset":1},{"normal":[-1,0],"offset":2},{"normal":[0,1],"offset":1},{"normal":[0,-1],"offset":1}],"flags":{"symmetric":true,"unconditional":false}}"#;
        assert!(HPolytope::from_json(json).is_err());
    }
}
