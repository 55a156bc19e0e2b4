//! Volumes (exact in dimension <= 3, Monte Carlo above), surface-area and
//! cone-volume measures, and the subspace concentration condition.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::body::{HPolytope, Location};
use crate::error::{Error, Result};
use crate::geometry::{self, dot};
use crate::par;
use crate::report::{CheckReport, InputDigest};

/// Two-sided 99% normal quantile used for Monte Carlo confidence intervals.
pub const Z99: f64 = 2.5758293035489004;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeMethod {
    ExactTriangulation,
    MonteCarlo,
}

/// Volume value with method tag and error bound (0 for exact paths, 99% CI
/// half-width for Monte Carlo).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub method: VolumeMethod,
    pub error: f64,
    pub samples: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl VolumeEstimate {
    fn exact(value: f64) -> VolumeEstimate {
        VolumeEstimate {
            value,
            method: VolumeMethod::ExactTriangulation,
            error: 0.0,
            samples: 0,
            seed: None,
        }
    }
}

/// Monte Carlo budget for paths that need it.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct McSettings {
    pub samples: u64,
    pub seed: u64,
}

/// Volume of a body: exact fan evaluation from the origin for dim <= 3,
/// Monte Carlo with the provided budget above.
pub fn volume(p: &HPolytope, mc: Option<McSettings>) -> Result<VolumeEstimate> {
    match p.dim() {
        1 => {
            let v = p.vertices()?;
            Ok(VolumeEstimate::exact(v[1][0] - v[0][0]))
        }
        2 => Ok(VolumeEstimate::exact(area_2d(p)?)),
        3 => Ok(VolumeEstimate::exact(volume_3d(p)?)),
        _ => {
            let mc = mc.ok_or(Error::McConfigRequired)?;
            let bbox = p.bounding_box()?;
            volume_mc(|x| p.contains(x), &bbox, mc.samples, mc.seed)
        }
    }
}

/// Shoelace area over the CCW vertex cycle.
fn area_2d(p: &HPolytope) -> Result<f64> {
    let verts = p.vertices()?;
    Ok(shoelace(&verts))
}

pub(crate) fn shoelace(verts: &[Vec<f64>]) -> f64 {
    let k = verts.len();
    let mut twice = 0.0;
    for i in 0..k {
        let j = (i + 1) % k;
        twice += verts[i][0] * verts[j][1] - verts[j][0] * verts[i][1];
    }
    twice / 2.0
}

/// One facet of a 3-D (or 2-D) body: constraint index, outward normal,
/// supporting offset, (n-1)-measure and the ordered vertex cycle.
#[derive(Clone, Debug)]
pub struct Facet {
    pub constraint: usize,
    pub normal: Vec<f64>,
    pub offset: f64,
    pub area: f64,
    pub cycle: Vec<Vec<f64>>,
}

/// Facets by vertex-constraint incidence. Redundant halfspaces collect fewer
/// than dim vertices and drop out.
pub fn facets(p: &HPolytope) -> Result<Vec<Facet>> {
    let verts = p.vertices()?;
    let mut out = Vec::new();
    for (ci, hs) in p.halfspaces().iter().enumerate() {
        let tol = 1e-9 * hs.offset.abs().max(1.0);
        let incident: Vec<&Vec<f64>> = verts
            .iter()
            .filter(|v| (dot(&hs.normal, v) - hs.offset).abs() <= tol)
            .collect();
        match p.dim() {
            1 => {
                if incident.len() == 1 {
                    out.push(Facet {
                        constraint: ci,
                        normal: hs.normal.clone(),
                        offset: hs.offset,
                        area: 1.0,
                        cycle: vec![incident[0].clone()],
                    });
                }
            }
            2 => {
                if incident.len() >= 2 {
                    // Extent along the edge tangent.
                    let t = [-hs.normal[1], hs.normal[0]];
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    let mut lo_v = incident[0].clone();
                    let mut hi_v = incident[0].clone();
                    for v in &incident {
                        let s = t[0] * v[0] + t[1] * v[1];
                        if s < lo {
                            lo = s;
                            lo_v = (*v).clone();
                        }
                        if s > hi {
                            hi = s;
                            hi_v = (*v).clone();
                        }
                    }
                    let len = hi - lo;
                    if len > 1e-12 {
                        out.push(Facet {
                            constraint: ci,
                            normal: hs.normal.clone(),
                            offset: hs.offset,
                            area: len,
                            cycle: vec![lo_v, hi_v],
                        });
                    }
                }
            }
            3 => {
                if incident.len() >= 3 {
                    let (t1, t2) = geometry::tangent_basis(&hs.normal);
                    let centroid: Vec<f64> = (0..3)
                        .map(|k| incident.iter().map(|v| v[k]).sum::<f64>() / incident.len() as f64)
                        .collect();
                    let mut planar: Vec<(f64, Vec<f64>)> = incident
                        .iter()
                        .map(|v| {
                            let d: Vec<f64> = (0..3).map(|k| v[k] - centroid[k]).collect();
                            let x = dot(&d, &t1);
                            let y = dot(&d, &t2);
                            (y.atan2(x), (*v).clone())
                        })
                        .collect();
                    planar.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                    let cycle: Vec<Vec<f64>> = planar.into_iter().map(|(_, v)| v).collect();
                    let coords: Vec<Vec<f64>> = cycle
                        .iter()
                        .map(|v| {
                            let d: Vec<f64> = (0..3).map(|k| v[k] - centroid[k]).collect();
                            vec![dot(&d, &t1), dot(&d, &t2)]
                        })
                        .collect();
                    let area = shoelace(&coords);
                    if area > 1e-12 {
                        out.push(Facet {
                            constraint: ci,
                            normal: hs.normal.clone(),
                            offset: hs.offset,
                            area,
                            cycle,
                        });
                    }
                }
            }
            d => return Err(Error::DimensionTooHigh { dim: d, max: 3 }),
        }
    }
    Ok(out)
}

/// Exact 3-D volume: fan of signed origin tetrahedra over oriented facet
/// cycles (a different arithmetic route than the cone identity it is tested
/// against).
fn volume_3d(p: &HPolytope) -> Result<f64> {
    let fs = facets(p)?;
    if fs.is_empty() {
        return Err(Error::DegenerateBody);
    }
    let mut vol = 0.0;
    for f in &fs {
        let a = &f.cycle[0];
        for t in 1..f.cycle.len() - 1 {
            let b = &f.cycle[t];
            let c = &f.cycle[t + 1];
            let cr = geometry::cross3(b, c);
            vol += dot(a, &cr) / 6.0;
        }
    }
    Ok(vol)
}

/// Hit-count Monte Carlo volume over a bounding box. Deterministic for a
/// fixed seed: sampling is split into fixed-size batches, each drawing from
/// its own counter-derived ChaCha stream, so the result is independent of the
/// parallel schedule.
pub fn volume_mc(
    oracle: impl Fn(&[f64]) -> bool + Sync,
    bbox: &[(f64, f64)],
    samples: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    volume_mc_forced(cfg!(feature = "parallel"), oracle, bbox, samples, seed)
}

#[doc(hidden)]
pub fn volume_mc_forced(
    parallel: bool,
    oracle: impl Fn(&[f64]) -> bool + Sync,
    bbox: &[(f64, f64)],
    samples: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    if samples == 0 {
        return Err(Error::InvalidInput("sample budget must be positive".into()));
    }
    let dim = bbox.len();
    let box_vol: f64 = bbox.iter().map(|(lo, hi)| hi - lo).product();
    if !(box_vol > 0.0) {
        return Err(Error::InvalidInput("empty bounding box".into()));
    }
    const BATCH: u64 = 1 << 14;
    let batches = samples.div_ceil(BATCH);
    let hits_per_batch: Vec<u64> = par::map_indexed_forced(parallel, batches as usize, |bi| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(bi as u64 + 1);
        let count = BATCH.min(samples - bi as u64 * BATCH);
        let mut x = vec![0.0f64; dim];
        let mut hits = 0u64;
        for _ in 0..count {
            for (k, (lo, hi)) in bbox.iter().enumerate() {
                x[k] = lo + (hi - lo) * rng.random::<f64>();
            }
            if oracle(&x) {
                hits += 1;
            }
        }
        hits
    });
    let hits: u64 = hits_per_batch.iter().sum();
    if hits == 0 {
        return Err(Error::ZeroHits);
    }
    let n = samples as f64;
    let p_hat = hits as f64 / n;
    let ci = Z99 * (p_hat * (1.0 - p_hat) / n).sqrt() * box_vol;
    Ok(VolumeEstimate {
        value: p_hat * box_vol,
        method: VolumeMethod::MonteCarlo,
        error: ci,
        samples,
        seed: Some(seed),
    })
}

/// Finitely supported even measure on the unit sphere.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphericalMeasure {
    pub dim: usize,
    pub atoms: Vec<Atom>,
    pub even: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Atom {
    pub u: Vec<f64>,
    pub w: f64,
}

impl SphericalMeasure {
    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<SphericalMeasure> {
        let m: SphericalMeasure = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("measure parse error: {e}")))?;
        for (i, a) in m.atoms.iter().enumerate() {
            if a.u.len() != m.dim {
                return Err(Error::DimensionMismatch {
                    expected: m.dim,
                    got: a.u.len(),
                });
            }
            if a.w < 0.0 {
                return Err(Error::InvalidInput("atom weights must be >= 0".into()));
            }
            let n = geometry::norm(&a.u);
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "atom {i} direction is not unit (norm {n})"
                )));
            }
            for b in &m.atoms[..i] {
                if geometry::dist(&a.u, &b.u) <= 1e-10 {
                    return Err(Error::InvalidInput(format!(
                        "atom {i} coincides with an earlier atom direction"
                    )));
                }
            }
        }
        if m.even {
            let bad = m.atoms.iter().any(|a| {
                !m.atoms.iter().any(|b| {
                    a.u.iter()
                        .zip(&b.u)
                        .map(|(x, y)| (x + y) * (x + y))
                        .sum::<f64>()
                        .sqrt()
                        <= 1e-10
                        && (a.w - b.w).abs() <= 1e-12 * a.w.max(1.0)
                })
            });
            if bad {
                return Err(Error::InvalidInput(
                    "even measure must be closed under negation with equal weights".into(),
                ));
            }
        }
        Ok(m)
    }

    pub fn digest(&self) -> u64 {
        let mut h = geometry::Fnv::new();
        h.write_usize(self.dim);
        for a in &self.atoms {
            for &x in &a.u {
                h.write_f64(x);
            }
            h.write_f64(a.w);
        }
        h.finish()
    }

    /// Match atoms of two measures up to angular tolerance; true when both
    /// measures have identical support and weights within `w_tol`.
    pub fn approx_eq(&self, other: &SphericalMeasure, w_tol: f64) -> bool {
        if self.dim != other.dim || self.atoms.len() != other.atoms.len() {
            return false;
        }
        let mut used = vec![false; other.atoms.len()];
        for a in &self.atoms {
            let mut found = false;
            for (j, b) in other.atoms.iter().enumerate() {
                if used[j] {
                    continue;
                }
                if geometry::dist(&a.u, &b.u) <= 1e-9 && (a.w - b.w).abs() <= w_tol {
                    used[j] = true;
                    found = true;
                    break;
                }
            }
            if !found {
                return false;
            }
        }
        true
    }
}

/// Pair antipodal atoms and average their weights so even measures are
/// exactly even.
fn symmetrize_atoms(atoms: &mut [Atom]) {
    let n = atoms.len();
    for i in 0..n {
        for j in i + 1..n {
            let anti = atoms[i]
                .u
                .iter()
                .zip(&atoms[j].u)
                .map(|(a, b)| (a + b) * (a + b))
                .sum::<f64>()
                .sqrt();
            if anti <= 1e-10 {
                let w = 0.5 * (atoms[i].w + atoms[j].w);
                atoms[i].w = w;
                atoms[j].w = w;
            }
        }
    }
}

/// Surface area measure: one atom per facet, weighted by the facet's
/// (n-1)-volume. Even when the body is symmetric.
pub fn surface_area_measure(p: &HPolytope) -> Result<SphericalMeasure> {
    let fs = facets(p)?;
    let mut atoms: Vec<Atom> = fs
        .iter()
        .map(|f| Atom {
            u: f.normal.clone(),
            w: f.area,
        })
        .collect();
    if p.is_symmetric() {
        symmetrize_atoms(&mut atoms);
    }
    Ok(SphericalMeasure {
        dim: p.dim(),
        atoms,
        even: p.is_symmetric(),
    })
}

/// Cone-volume measure: atom weights h(u_j) * S(u_j); the supporting distance
/// of a facet equals its canonical offset. Total mass is n V.
pub fn cone_volume_measure(p: &HPolytope) -> Result<SphericalMeasure> {
    let fs = facets(p)?;
    let mut atoms: Vec<Atom> = fs
        .iter()
        .map(|f| Atom {
            u: f.normal.clone(),
            w: f.offset * f.area,
        })
        .collect();
    if p.is_symmetric() {
        symmetrize_atoms(&mut atoms);
    }
    Ok(SphericalMeasure {
        dim: p.dim(),
        atoms,
        even: p.is_symmetric(),
    })
}

/// A linear subspace given by an orthonormal basis.
#[derive(Clone, Debug)]
pub struct SubspaceSpec {
    basis: Vec<Vec<f64>>,
}

impl SubspaceSpec {
    /// Validates orthonormality to 1e-10.
    pub fn new(basis: Vec<Vec<f64>>) -> Result<SubspaceSpec> {
        for (i, q) in basis.iter().enumerate() {
            if (geometry::norm(q) - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidInput("basis vectors must be unit".into()));
            }
            for p in &basis[..i] {
                if dot(p, q).abs() > 1e-10 {
                    return Err(Error::InvalidInput("basis must be orthogonal".into()));
                }
            }
        }
        Ok(SubspaceSpec { basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Distance of a vector to the subspace.
    pub fn distance(&self, v: &[f64]) -> f64 {
        let mut res = v.to_vec();
        for q in &self.basis {
            let c = dot(v, q);
            for (ri, qi) in res.iter_mut().zip(q) {
                *ri -= c * qi;
            }
        }
        geometry::norm(&res)
    }
}

/// Subspace concentration condition for a finitely supported even measure.
///
/// Candidate subspaces are spans of subsets (size <= dim) of the support
/// directions, deduplicated by projector comparison; condition (i) is checked
/// for every candidate and equality cases are searched for complementary
/// equality partners among the candidates. The complement search is restricted
/// to the candidate family, which is recorded in the report.
pub fn subspace_concentration(sigma: &SphericalMeasure, tol: f64) -> Result<CheckReport> {
    let n = sigma.dim;
    let total = sigma.total();
    if sigma.atoms.is_empty() || total <= 0.0 {
        return Err(Error::EmptyMeasure);
    }
    if !sigma.even {
        return Err(Error::InvalidInput(
            "subspace concentration is defined for even measures".into(),
        ));
    }
    let dirs: Vec<&[f64]> = sigma.atoms.iter().map(|a| a.u.as_slice()).collect();

    // Enumerate subsets of size <= n-1 (proper subspaces); record orthonormal
    // bases and projectors.
    struct Cand {
        subspace: SubspaceSpec,
        projector: Vec<f64>, // row-major n x n
        mass: f64,
    }
    let mut cands: Vec<Cand> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn build(
        start: usize,
        max_size: usize,
        dirs: &[&[f64]],
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if !stack.is_empty() {
            out.push(stack.clone());
        }
        if stack.len() == max_size {
            return;
        }
        for i in start..dirs.len() {
            stack.push(i);
            build(i + 1, max_size, dirs, stack, out);
            stack.pop();
        }
    }
    let mut subsets = Vec::new();
    build(0, n - 1, &dirs, &mut stack, &mut subsets);

    for subset in subsets {
        let chosen: Vec<&[f64]> = subset.iter().map(|&i| dirs[i]).collect();
        let basis = geometry::orthonormalize(&chosen, 1e-10);
        if basis.is_empty() || basis.len() >= n || basis.len() < subset.len() {
            // rank-deficient subsets reduce to a smaller subset's span
            continue;
        }
        let mut projector = vec![0.0; n * n];
        for q in &basis {
            for r in 0..n {
                for c in 0..n {
                    projector[r * n + c] += q[r] * q[c];
                }
            }
        }
        let dup = cands.iter().any(|cand| {
            cand.subspace.dim() == basis.len()
                && cand
                    .projector
                    .iter()
                    .zip(&projector)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    <= 1e-9
        });
        if dup {
            continue;
        }
        let subspace = SubspaceSpec::new(basis)?;
        let mass: f64 = sigma
            .atoms
            .iter()
            .filter(|a| subspace.distance(&a.u) <= 1e-9)
            .map(|a| a.w)
            .sum();
        cands.push(Cand {
            subspace,
            projector,
            mass,
        });
    }

    let mut worst_margin = f64::INFINITY;
    let mut worst_lhs = 0.0;
    let mut worst_rhs = total;
    let mut violations = Vec::new();
    let mut equality: Vec<usize> = Vec::new();
    for (idx, c) in cands.iter().enumerate() {
        let bound = total * c.subspace.dim() as f64 / n as f64;
        let margin = bound - c.mass;
        if margin < worst_margin {
            worst_margin = margin;
            worst_lhs = bound;
            worst_rhs = c.mass;
        }
        if margin < -tol {
            violations.push(format!(
                "dim-{} subspace holds mass {} > {}",
                c.subspace.dim(),
                c.mass,
                bound
            ));
        } else if margin.abs() <= tol {
            equality.push(idx);
        }
    }

    // Condition (ii): each equality subspace needs a complementary equality
    // subspace within the candidate family.
    let mut pair_notes = Vec::new();
    let mut missing_complement = 0usize;
    for &i in &equality {
        let needed = n - cands[i].subspace.dim();
        let mut found = false;
        for &j in &equality {
            if cands[j].subspace.dim() != needed {
                continue;
            }
            let mut stacked: Vec<&[f64]> = Vec::new();
            stacked.extend(cands[i].subspace.basis().iter().map(|v| v.as_slice()));
            stacked.extend(cands[j].subspace.basis().iter().map(|v| v.as_slice()));
            if geometry::orthonormalize(&stacked, 1e-8).len() == n {
                found = true;
                pair_notes.push(format!(
                    "equality pair: dim {} mass {} with complementary dim {}",
                    cands[i].subspace.dim(),
                    cands[i].mass,
                    cands[j].subspace.dim()
                ));
                break;
            }
        }
        if !found {
            missing_complement += 1;
        }
    }

    let digest = InputDigest::new("subspace-concentration")
        .u64(sigma.digest())
        .f64(tol)
        .finish();
    let mut report = CheckReport::new("subspace-concentration", digest).with_values(
        worst_lhs,
        worst_rhs,
        tol,
        0.0,
    );
    if !violations.is_empty() {
        report.verdict = crate::report::Verdict::Violated;
        for v in violations {
            report = report.certificate(v);
        }
    } else if missing_complement > 0 {
        report.verdict = crate::report::Verdict::Inconclusive;
        report = report.certificate(format!(
            "{missing_complement} equality subspace(s) lack a complementary equality partner in the candidate family"
        ));
    }
    for note in pair_notes {
        report = report.certificate(note);
    }
    report = report.certificate(
        "complement search restricted to spans of support subsets; completeness over arbitrary subspaces is not claimed",
    );
    report = report.param("candidates", cands.len() as f64);
    Ok(report)
}

/// Uniform rejection sample from a body (for test harnesses and inclusion
/// checks).
pub fn sample_point(p: &HPolytope, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let bbox = p.bounding_box()?;
    for _ in 0..100_000 {
        let x: Vec<f64> = bbox
            .iter()
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        if p.membership(&x, 0.0)? != Location::Outside {
            return Ok(x);
        }
    }
    Err(Error::Numerical(
        "rejection sampling failed; body too thin for its bounding box".into(),
    ))
}
