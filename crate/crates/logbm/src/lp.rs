//! Dense linear programming for support evaluation over halfspace systems.
//!
//! Every LP in this crate has the form
//!   maximize c.x  subject to  u_j.x <= b_j,  b_j > 0,
//! so the origin is strictly feasible and only the optimal value is needed.
//! We solve the dual (minimize b.y subject to sum y_j u_j = c, y >= 0) with a
//! two-phase revised simplex whose basis is n x n, where n is the ambient
//! dimension (small), while the constraint count m may reach a few thousand.

/// Outcome of a support LP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LpValue {
    Optimal(f64),
    /// The primal is unbounded along `c` (dual infeasible).
    Unbounded,
}

const ENTER_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-7;

/// Maximize `c.x` over the intersection of `u_j.x <= b_j`.
pub(crate) fn max_dot(
    normals: &[Vec<f64>],
    offsets: &[f64],
    c: &[f64],
) -> Result<LpValue, String> {
    let m = normals.len();
    let n = c.len();
    if m == 0 {
        return Ok(LpValue::Unbounded);
    }

    // Flip rows so the dual right-hand side is nonnegative.
    let mut rhs = c.to_vec();
    let mut flip = vec![1.0f64; n];
    for i in 0..n {
        if rhs[i] < 0.0 {
            rhs[i] = -rhs[i];
            flip[i] = -1.0;
        }
    }
    // Column j < m is the flipped normal; columns m..m+n are artificials e_i.
    let col = |j: usize, i: usize| -> f64 {
        if j < m {
            normals[j][i] * flip[i]
        } else if j - m == i {
            1.0
        } else {
            0.0
        }
    };

    let mut basis: Vec<usize> = (m..m + n).collect();
    let mut binv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut xb = rhs.clone();

    for phase in 0..2 {
        let cost = |j: usize| -> f64 {
            match (phase == 0, j < m) {
                (true, true) => 0.0,
                (true, false) => 1.0,
                (false, true) => offsets[j],
                (false, false) => 0.0,
            }
        };
        let max_iters = 400 * (m + n) + 400;
        let bland_after = 60 * (m + n) + 60;
        let mut iters = 0usize;
        loop {
            iters += 1;
            if iters > max_iters {
                return Err("simplex iteration limit exceeded".into());
            }
            // Simplex multipliers z = Binv^T c_B.
            let mut z = vec![0.0; n];
            for i in 0..n {
                let cb = cost(basis[i]);
                if cb != 0.0 {
                    for k in 0..n {
                        z[k] += cb * binv[i][k];
                    }
                }
            }
            // Pricing.
            let bland = iters > bland_after;
            let mut enter: Option<usize> = None;
            let mut best = -ENTER_TOL;
            for j in 0..m + n {
                if phase == 1 && j >= m {
                    continue;
                }
                if basis.contains(&j) {
                    continue;
                }
                let zc = if j < m {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += z[k] * normals[j][k] * flip[k];
                    }
                    s
                } else {
                    z[j - m]
                };
                let r = cost(j) - zc;
                if r < -ENTER_TOL {
                    if bland {
                        enter = Some(j);
                        break;
                    }
                    if r < best {
                        best = r;
                        enter = Some(j);
                    }
                }
            }
            let Some(e) = enter else { break };
            // Direction w = Binv * col_e.
            let mut w = vec![0.0; n];
            for i in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += binv[i][k] * col(e, k);
                }
                w[i] = s;
            }
            // Ratio test; break ties toward the smallest basis index (Bland).
            let mut leave: Option<usize> = None;
            let mut best_t = f64::INFINITY;
            for i in 0..n {
                if w[i] > PIVOT_TOL {
                    let t = xb[i] / w[i];
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            t < best_t - 1e-15
                                || (t <= best_t + 1e-15 && basis[i] < basis[l])
                        }
                    };
                    if better {
                        best_t = t;
                        leave = Some(i);
                    }
                }
            }
            let Some(l) = leave else {
                if phase == 0 {
                    return Err("phase-1 objective unbounded".into());
                }
                // Dual unbounded means the primal is infeasible, which cannot
                // happen with a strictly interior origin; treat as numerical.
                return Err("dual ray found for an origin-interior system".into());
            };
            let t = best_t;
            for i in 0..n {
                if i != l {
                    xb[i] -= w[i] * t;
                    if xb[i] < 0.0 {
                        xb[i] = 0.0;
                    }
                }
            }
            xb[l] = t;
            let piv = w[l];
            for k in 0..n {
                binv[l][k] /= piv;
            }
            for i in 0..n {
                if i != l && w[i] != 0.0 {
                    let f = w[i];
                    for k in 0..n {
                        binv[i][k] -= f * binv[l][k];
                    }
                }
            }
            basis[l] = e;
        }

        if phase == 0 {
            let infeas: f64 = basis
                .iter()
                .zip(&xb)
                .filter(|(j, _)| **j >= m)
                .map(|(_, v)| *v)
                .sum();
            if infeas > FEAS_TOL {
                return Ok(LpValue::Unbounded);
            }
            // Drive remaining zero-valued artificials out of the basis.
            for i in 0..n {
                if basis[i] < m {
                    continue;
                }
                let mut replaced = false;
                for j in 0..m {
                    if basis.contains(&j) {
                        continue;
                    }
                    let mut wi = 0.0;
                    for k in 0..n {
                        wi += binv[i][k] * col(j, k);
                    }
                    if wi.abs() > 1e-9 {
                        let piv = wi;
                        // Degenerate pivot at ratio zero.
                        let mut w = vec![0.0; n];
                        for r in 0..n {
                            let mut s = 0.0;
                            for k in 0..n {
                                s += binv[r][k] * col(j, k);
                            }
                            w[r] = s;
                        }
                        for k in 0..n {
                            binv[i][k] /= piv;
                        }
                        for r in 0..n {
                            if r != i && w[r] != 0.0 {
                                let f = w[r];
                                for k in 0..n {
                                    binv[r][k] -= f * binv[i][k];
                                }
                            }
                        }
                        basis[i] = j;
                        replaced = true;
                        break;
                    }
                }
                if !replaced && xb[i] > FEAS_TOL {
                    return Err("artificial variable stuck in basis".into());
                }
            }
        }
    }

    let val: f64 = basis
        .iter()
        .zip(&xb)
        .map(|(j, v)| if *j < m { offsets[*j] * v } else { 0.0 })
        .sum();
    Ok(LpValue::Optimal(val))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_system(n: usize, half: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut u = vec![0.0; n];
                u[i] = s;
                normals.push(u);
                offsets.push(half);
            }
        }
        (normals, offsets)
    }

    #[test]
    fn cube_support_is_l1_norm_scaled() {
        let (normals, offsets) = cube_system(2, 0.5);
        let c = vec![1.0, 0.0];
        match max_dot(&normals, &offsets, &c).unwrap() {
            LpValue::Optimal(v) => assert!((v - 0.5).abs() < 1e-12),
            _ => panic!("expected optimum"),
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = vec![s, s];
        match max_dot(&normals, &offsets, &c).unwrap() {
            LpValue::Optimal(v) => assert!((v - s).abs() < 1e-12),
            _ => panic!("expected optimum"),
        }
    }

    #[test]
    fn detects_unbounded_slab() {
        // Single slab |x.(1,1)/sqrt(2)| <= 1 is unbounded along (1,-1).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let normals = vec![vec![s, s], vec![-s, -s]];
        let offsets = vec![1.0, 1.0];
        let c = vec![s, -s];
        assert_eq!(max_dot(&normals, &offsets, &c).unwrap(), LpValue::Unbounded);
    }

    #[test]
    fn cross_polytope_support_is_max_norm() {
        // conv{+-e_1, +-e_2}: normals (+-1,+-1)/sqrt(2), offset 1/sqrt(2).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for a in [1.0f64, -1.0] {
            for b in [1.0f64, -1.0] {
                normals.push(vec![a * s, b * s]);
                offsets.push(s);
            }
        }
        for (c, want) in [
            (vec![1.0, 0.0], 1.0),
            (vec![0.0, -1.0], 1.0),
            (vec![0.6, 0.8], 0.8),
        ] {
            match max_dot(&normals, &offsets, &c).unwrap() {
                LpValue::Optimal(v) => assert!((v - want).abs() < 1e-10, "{v} vs {want}"),
                _ => panic!("expected optimum"),
            }
        }
    }

    #[test]
    fn zero_objective_gives_zero() {
        let (normals, offsets) = cube_system(3, 1.0);
        match max_dot(&normals, &offsets, &[0.0, 0.0, 0.0]).unwrap() {
            LpValue::Optimal(v) => assert!(v.abs() < 1e-12),
            _ => panic!("expected optimum"),
        }
    }

    #[test]
    fn many_redundant_constraints() {
        // Unit disk approximation with 512 tangent lines; support along any
        // direction is 1.
        let m = 512;
        let mut normals = Vec::new();
        let mut offsets = Vec::new();
        for k in 0..m {
            let a = 2.0 * std::f64::consts::PI * (k as f64) / (m as f64);
            normals.push(vec![a.cos(), a.sin()]);
            offsets.push(1.0);
        }
        let c = vec![0.3, -0.95];
        let norm = (0.3f64 * 0.3 + 0.95 * 0.95).sqrt();
        match max_dot(&normals, &offsets, &c).unwrap() {
            LpValue::Optimal(v) => assert!((v - norm).abs() < 1e-4),
            _ => panic!("expected optimum"),
        }
    }
}
