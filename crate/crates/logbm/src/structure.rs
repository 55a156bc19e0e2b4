//! Structural analysis behind the equality cases: irreducible product
//! decomposition of unconditional bodies, dilate and diagonal-map fitting,
//! and the equality-case classifier.

use serde::{Deserialize, Serialize};

use crate::body::{HPolytope, Halfspace};
use crate::combine::scale_body;
use crate::error::{Error, Result};
use crate::measure::{volume, McSettings};

/// Partition of coordinates into independent blocks with one factor body per
/// block.
#[derive(Clone, Debug)]
pub struct ProductDecomposition {
    pub blocks: Vec<Vec<usize>>,
    pub factors: Vec<HPolytope>,
    pub irreducible: Vec<bool>,
}

/// Serialized form: {"blocks": [[indices]], "irreducible": [bool]}.
#[derive(Serialize, Deserialize)]
pub struct DecompositionFile {
    pub blocks: Vec<Vec<usize>>,
    pub irreducible: Vec<bool>,
}

impl ProductDecomposition {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&DecompositionFile {
            blocks: self.blocks.clone(),
            irreducible: self.irreducible.clone(),
        })
        .expect("decomposition serialization is infallible")
    }
}

/// Positive diagonal map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagonalMap {
    pub entries: Vec<f64>,
}

const COUPLING_TOL: f64 = 1e-10;

/// Decompose an unconditional body into irreducible factors via the
/// coordinate-coupling graph of its facet normals. Redundant halfspaces are
/// removed first so a stray diagonal constraint cannot spuriously couple
/// coordinates; the result is verified by a support-profile reconstruction
/// test.
pub fn decompose_irreducible(p: &HPolytope) -> Result<ProductDecomposition> {
    if !p.is_unconditional() {
        return Err(Error::NotUnconditional);
    }
    let n = p.dim();
    let essential = p.essential_body()?;

    // Union-find over coordinates.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for hs in essential.halfspaces() {
        let support: Vec<usize> = (0..n)
            .filter(|&i| hs.normal[i].abs() > COUPLING_TOL)
            .collect();
        for w in support.windows(2) {
            let a = find(&mut parent, w[0]);
            let b = find(&mut parent, w[1]);
            parent[a] = b;
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        match blocks.iter_mut().find(|b| find(&mut parent.clone(), b[0]) == root) {
            Some(b) => b.push(i),
            None => blocks.push(vec![i]),
        }
    }
    blocks.sort_by_key(|b| b[0]);

    // Factor bodies: restrict the halfspaces supported in each block.
    let mut factors = Vec::with_capacity(blocks.len());
    for block in &blocks {
        let mut hs = Vec::new();
        for h in essential.halfspaces() {
            let inside: Vec<f64> = block.iter().map(|&i| h.normal[i]).collect();
            let mass: f64 = inside.iter().map(|x| x * x).sum();
            if mass > COUPLING_TOL * COUPLING_TOL {
                hs.push(Halfspace::new(inside, h.offset));
            }
        }
        factors.push(HPolytope::new(block.len(), hs)?);
    }

    // Reconstruction check: the product of factor supports must reproduce the
    // body's support profile on a test grid.
    let dirs = test_directions(n, 128);
    for d in &dirs {
        let mut sum = 0.0;
        for (block, factor) in blocks.iter().zip(&factors) {
            let sub: Vec<f64> = block.iter().map(|&i| d[i]).collect();
            if sub.iter().map(|x| x * x).sum::<f64>().sqrt() > 1e-12 {
                sum += factor.support(&sub)?;
            }
        }
        let h = p.support(d)?;
        if (h - sum).abs() > 1e-9 * h.abs().max(1.0) {
            return Err(Error::ReconstructionFailed(format!(
                "support {h} vs product {sum} along {d:?}"
            )));
        }
    }

    let irreducible = vec![true; blocks.len()];
    Ok(ProductDecomposition {
        blocks,
        factors,
        irreducible,
    })
}

/// Coordinate directions plus a deterministic spread of unit directions.
fn test_directions(n: usize, extra: usize) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e.clone());
        e[i] = -1.0;
        dirs.push(e);
    }
    let mut rng = crate::gen::seeded_rng(0x1ee7, 0);
    use rand::Rng;
    for _ in 0..extra {
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                let u1: f64 = rng.random::<f64>().max(1e-12);
                let u2: f64 = rng.random();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            dirs.push(v);
        }
    }
    dirs
}

fn volume_any_dim(p: &HPolytope) -> Result<f64> {
    if p.dim() <= 3 {
        Ok(volume(p, None)?.value)
    } else {
        // Deterministic seeded budget for desk-scale high-dim fitting.
        Ok(volume(
            p,
            Some(McSettings {
                samples: 200_000,
                seed: 0x5eed,
            }),
        )?
        .value)
    }
}

/// Fit `L = c K`: candidate c = (V(L)/V(K))^(1/n), accepted iff the support
/// profiles match at relative 1e-8 on a 1000-direction grid.
pub fn fit_dilate(k: &HPolytope, l: &HPolytope) -> Result<Option<f64>> {
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: l.dim(),
        });
    }
    let n = k.dim() as f64;
    let c = (volume_any_dim(l)? / volume_any_dim(k)?).powf(1.0 / n);
    let dirs = test_directions(k.dim(), 1000);
    for d in &dirs {
        let hk = k.support(d)?;
        let hl = l.support(d)?;
        if (hl - c * hk).abs() > 1e-8 * hk {
            return Ok(None);
        }
    }
    Ok(Some(c))
}

/// Fit `L = diag(t) K` for unconditional bodies: per-coordinate candidates
/// t_i = h_L(e_i)/h_K(e_i), accepted iff diag(t) K matches L at relative 1e-8
/// on the test grid.
pub fn fit_diagonal(k: &HPolytope, l: &HPolytope) -> Result<Option<DiagonalMap>> {
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: l.dim(),
        });
    }
    if !k.is_unconditional() || !l.is_unconditional() {
        return Err(Error::NotUnconditional);
    }
    let n = k.dim();
    let mut t = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        t.push(l.support(&e)? / k.support(&e)?);
    }
    let mapped = scale_body(&t, 1.0, k)?;
    let dirs = test_directions(n, 1000);
    for d in &dirs {
        let hm = mapped.support(d)?;
        let hl = l.support(d)?;
        if (hl - hm).abs() > 1e-8 * hm.max(1e-300) {
            return Ok(None);
        }
    }
    Ok(Some(DiagonalMap { entries: t }))
}

/// Equality-case classification for a pair of unconditional bodies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqualityClass {
    EqualityCase,
    Strict,
    Undetermined,
}

/// Block-constancy spread below which a fitted diagonal counts as a dilation
/// per irreducible block.
const BLOCK_EQ_TOL: f64 = 1e-6;
/// Spread above which the verdict is strict; the band in between stays
/// undetermined.
const BLOCK_STRICT_TOL: f64 = 2e-6;

/// Classify whether (K, L) is an equality case of the logarithmic
/// Brunn-Minkowski inequality for unconditional bodies: L must be a fitted
/// diagonal image of K whose diagonal is constant on every irreducible block
/// of K.
pub fn classify_equality(k: &HPolytope, l: &HPolytope, _lambda: f64) -> Result<EqualityClass> {
    let Some(map) = fit_diagonal(k, l)? else {
        return Ok(EqualityClass::Strict);
    };
    let decomp = decompose_irreducible(k)?;
    let mut worst = 0.0f64;
    for block in &decomp.blocks {
        let vals: Vec<f64> = block.iter().map(|&i| map.entries[i]).collect();
        let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
        let spread = vals
            .iter()
            .map(|v| (v - mean).abs())
            .fold(0.0f64, f64::max)
            / mean;
        worst = worst.max(spread);
    }
    Ok(if worst <= BLOCK_EQ_TOL {
        EqualityClass::EqualityCase
    } else if worst > BLOCK_STRICT_TOL {
        EqualityClass::Strict
    } else {
        EqualityClass::Undetermined
    })
}
