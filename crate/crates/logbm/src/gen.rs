//! Seeded random body generation for harnesses, searches and tests.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::body::{HPolytope, Halfspace};

/// ChaCha stream `stream` of master seed `seed`; deterministic and
/// independent across streams.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random origin-symmetric polygon from `pairs` stratified direction pairs
/// with offsets in [0.7, 1.5]. Always bounded; at least two distinct
/// direction pairs.
pub fn random_symmetric_polygon(rng: &mut impl Rng, pairs: usize) -> HPolytope {
    let pairs = pairs.max(2);
    let mut hs = Vec::with_capacity(2 * pairs);
    for k in 0..pairs {
        let jitter: f64 = rng.random::<f64>() * 0.7 + 0.15;
        let angle = (k as f64 + jitter) * std::f64::consts::PI / pairs as f64;
        let offset = 0.7 + 0.8 * rng.random::<f64>();
        let u = vec![angle.cos(), angle.sin()];
        hs.push(Halfspace::new(u.clone(), offset));
        hs.push(Halfspace::new(vec![-u[0], -u[1]], offset));
    }
    HPolytope::new(2, hs).expect("stratified symmetric polygon is bounded")
}

/// Random unconditional polygon: axis constraints plus `quadrant` stratified
/// first-quadrant normals, closed under sign flips.
pub fn random_unconditional_polygon(rng: &mut impl Rng, quadrant: usize) -> HPolytope {
    let mut hs = vec![
        Halfspace::new(vec![1.0, 0.0], 0.7 + 0.8 * rng.random::<f64>()),
        Halfspace::new(vec![0.0, 1.0], 0.7 + 0.8 * rng.random::<f64>()),
    ];
    for k in 0..quadrant {
        let jitter: f64 = rng.random::<f64>() * 0.7 + 0.15;
        let angle = (k as f64 + jitter) * std::f64::consts::FRAC_PI_2 / quadrant.max(1) as f64;
        let offset = 0.8 + 0.8 * rng.random::<f64>();
        hs.push(Halfspace::new(vec![angle.cos(), angle.sin()], offset));
    }
    HPolytope::unconditional_closure(2, hs).expect("axis-closed polygon is bounded")
}

/// Random origin-symmetric 3-D polytope from `pairs` direction pairs drawn
/// from normalized Gaussians (axis pairs included to guarantee boundedness).
pub fn random_symmetric_polytope_3d(rng: &mut impl Rng, pairs: usize) -> HPolytope {
    let mut hs = Vec::with_capacity(2 * pairs + 6);
    for i in 0..3 {
        let off = 1.0 + 0.5 * rng.random::<f64>();
        for s in [1.0, -1.0] {
            let mut u = vec![0.0; 3];
            u[i] = s;
            hs.push(Halfspace::new(u, off));
        }
    }
    for _ in 0..pairs {
        let u = random_unit(rng, 3);
        let offset = 0.8 + 0.8 * rng.random::<f64>();
        hs.push(Halfspace::new(u.iter().map(|x| -x).collect(), offset));
        hs.push(Halfspace::new(u, offset));
    }
    HPolytope::new(3, hs).expect("axis-boxed polytope is bounded")
}

/// Random unconditional 3-D polytope: axis constraints plus `octant`
/// positive-octant normals closed under sign flips.
pub fn random_unconditional_polytope_3d(rng: &mut impl Rng, octant: usize) -> HPolytope {
    let mut hs = Vec::new();
    for i in 0..3 {
        let mut u = vec![0.0; 3];
        u[i] = 1.0;
        hs.push(Halfspace::new(u, 0.7 + 0.8 * rng.random::<f64>()));
    }
    for _ in 0..octant {
        let u: Vec<f64> = (0..3).map(|_| 0.2 + 0.8 * rng.random::<f64>()).collect();
        hs.push(Halfspace::new(u, 0.8 + 0.8 * rng.random::<f64>()));
    }
    HPolytope::unconditional_closure(3, hs).expect("axis-closed polytope is bounded")
}

fn random_unit(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        // Box-Muller pairs give isotropic Gaussians.
        let v: Vec<f64> = (0..dim)
            .map(|_| {
                let u1: f64 = rng.random::<f64>().max(1e-12);
                let u2: f64 = rng.random();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_produce_valid_flagged_bodies() {
        let mut rng = seeded_rng(1, 0);
        for _ in 0..20 {
            let p = random_symmetric_polygon(&mut rng, 5);
            assert!(p.is_symmetric());
            assert!(p.vertices().unwrap().len() >= 4);
            let u = random_unconditional_polygon(&mut rng, 3);
            assert!(u.is_unconditional());
            let q = random_symmetric_polytope_3d(&mut rng, 8);
            assert!(q.is_symmetric());
            let w = random_unconditional_polytope_3d(&mut rng, 3);
            assert!(w.is_unconditional());
        }
    }

    #[test]
    fn streams_are_reproducible_and_independent() {
        let a: Vec<f64> = {
            let mut r = seeded_rng(42, 3);
            (0..4).map(|_| r.random()).collect()
        };
        let b: Vec<f64> = {
            let mut r = seeded_rng(42, 3);
            (0..4).map(|_| r.random()).collect()
        };
        let c: Vec<f64> = {
            let mut r = seeded_rng(42, 4);
            (0..4).map(|_| r.random()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
