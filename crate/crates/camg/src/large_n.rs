//! Large-N analysis of the first strategy switch: scaled variables, the
//! reduced 3-state chain over (C_M, C_{M+1}, rest), its exact eigensystem,
//! the asymptotic payoff of the majority state, the optimal scaled jump
//! amplitude a*(b), and the boundary b_max of the regime where the
//! win-stay lose-shift strategy beats random choice.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scaled parameters of the large-N regime: jump amplitude `a` with
/// `T_21 = a M^{-1/4}`, horizon `b = (1 - lambda) M^{3/4}`, and the
/// Gaussian-approximation constants `c = 1/sqrt(pi)`, `d = 1/(2 sqrt(pi))`,
/// always computed from pi rather than hard-coded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub m: usize,
}

/// `c = 1/sqrt(pi)`.
pub fn gaussian_c() -> f64 {
    std::f64::consts::PI.sqrt().recip()
}

/// `d = 1/(2 sqrt(pi))`.
pub fn gaussian_d() -> f64 {
    0.5 * gaussian_c()
}

impl ScaledParams {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if a < 0.0 || !a.is_finite() {
            return Err(Error::NonPositiveAmplitude(a));
        }
        if b < 0.0 || !b.is_finite() {
            return Err(Error::NegativeHorizon(b));
        }
        Ok(Self {
            a,
            b,
            c: gaussian_c(),
            d: gaussian_d(),
            m,
        })
    }
}

/// The reduced 3-state transition matrix over `(|e_1>, |e_2>, |e_3>) =
/// (C_M, C_{M+1}, rest)`, truncated at order `M^{-1/2}`. Columns sum to 1
/// exactly as written. Rejects parameter combinations pushing any entry
/// outside [0, 1].
pub fn reduced_matrix(params: &ScaledParams) -> Result<Matrix3<f64>> {
    let m = params.m as f64;
    let am14 = params.a * m.powf(-0.25);
    let a2m12 = params.a * params.a * m.sqrt().recip();
    let cm12 = params.c * m.sqrt().recip();
    let t = Matrix3::new(
        1.0 - am14 - 0.5 * a2m12, am14,                     cm12,
        am14,                     1.0 - am14 - 0.5 * a2m12, cm12,
        0.5 * a2m12,              0.5 * a2m12,              1.0 - 2.0 * cm12,
    );
    if t.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::ReducedMatrixDomain {
            a: params.a,
            m: params.m,
        });
    }
    Ok(t)
}

/// One eigenvalue with its left and right eigenvectors, normalized so that
/// `<L_i|R_j> = delta_ij` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    pub left: [f64; 3],
    pub right: [f64; 3],
}

/// The complete eigensystem of the reduced chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenTriple {
    pub pairs: [EigenPair; 3],
}

impl EigenTriple {
    /// Steady-state distribution, the right eigenvector at eigenvalue 1.
    pub fn steady_state(&self) -> [f64; 3] {
        self.pairs[0].right
    }

    /// Relaxation times `1 / (1 - mu_i)` in days for the two decaying
    /// modes. These carry the implicit `M^{1/2}` and `M^{1/4}` time scales
    /// of the reduced dynamics.
    pub fn relaxation_days(&self) -> (f64, f64) {
        (
            (1.0 - self.pairs[1].value).recip(),
            (1.0 - self.pairs[2].value).recip(),
        )
    }
}

/// Exact eigensystem of the reduced matrix:
/// `mu_1 = 1`, `mu_2 = 1 - (a^2 + 4c)/2 * M^{-1/2}`,
/// `mu_3 = 1 - 2a M^{-1/4} - a^2 M^{-1/2}/2`, with the displayed
/// biorthonormal vector pairs.
pub fn eigen_triple(params: &ScaledParams) -> EigenTriple {
    let m = params.m as f64;
    let (a, c) = (params.a, params.c);
    let a2 = a * a;
    let norm = a2 + 4.0 * c;

    let mu1 = 1.0;
    let l1 = [1.0, 1.0, 1.0];
    let r1 = [2.0 * c / norm, 2.0 * c / norm, a2 / norm];

    let mu2 = 1.0 - 0.5 * norm * m.sqrt().recip();
    let l2 = [a2 / norm, a2 / norm, -4.0 * c / norm];
    let r2 = [0.5, 0.5, -1.0];

    let mu3 = 1.0 - 2.0 * a * m.powf(-0.25) - 0.5 * a2 * m.sqrt().recip();
    let l3 = [0.5, -0.5, 0.0];
    let r3 = [1.0, -1.0, 0.0];

    EigenTriple {
        pairs: [
            EigenPair {
                value: mu1,
                left: l1,
                right: r1,
            },
            EigenPair {
                value: mu2,
                left: l2,
                right: r2,
            },
            EigenPair {
                value: mu3,
                left: l3,
                right: r3,
            },
        ],
    }
}

/// The discounted payoff of the majority state `|e_2>` expanded to order
/// `M^{-1/2}`, together with the two contributing resolvent weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffExpansion {
    /// `W_{e_2} = 1/2 + M^{-1/2} [ -b/(4a) - d + 4dc/(a^2 + 4c) ]`.
    pub w_e2: f64,
    /// Steady-state weight `U_1 = 1/2 - d a^2 M^{-1/2} / (a^2 + 4c)`.
    pub u1: f64,
    /// Slow-mode weight `U_3 = (b / 2a) M^{-1/2}`.
    pub u3: f64,
}

/// Evaluates the asymptotic payoff of the majority state. `a = 0` sits on
/// the pole of the `b/(4a)` term and is rejected.
pub fn asymptotic_payoff_e2(a: f64, b: f64, m: usize) -> Result<PayoffExpansion> {
    if a <= 0.0 || !a.is_finite() {
        return Err(Error::NonPositiveAmplitude(a));
    }
    if b < 0.0 || !b.is_finite() {
        return Err(Error::NegativeHorizon(b));
    }
    let c = gaussian_c();
    let d = gaussian_d();
    let m12 = (m as f64).sqrt().recip();
    let bracket = -b / (4.0 * a) - d + 4.0 * d * c / (a * a + 4.0 * c);
    Ok(PayoffExpansion {
        w_e2: 0.5 + m12 * bracket,
        u1: 0.5 - d * a * a * m12 / (a * a + 4.0 * c),
        u3: 0.5 * b / a * m12,
    })
}

/// Boundary of the efficient regime, `b_max = 2 pi^{-3/4}`.
pub fn b_max() -> f64 {
    2.0 * std::f64::consts::PI.powf(-0.75)
}

/// Stationarity condition for the scaled amplitude, the right side of
/// `b = 32 a^3 d c / (a^2 + 4c)^2`.
fn amplitude_equation(a: f64) -> f64 {
    let c = gaussian_c();
    let d = gaussian_d();
    32.0 * a.powi(3) * d * c / (a * a + 4.0 * c).powi(2)
}

/// Result of solving the amplitude equation for a given scaled horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AStarSolution {
    /// A root on the efficient branch `a*^2 <= 4c` exists.
    OnBranch {
        a_star: f64,
        residual: f64,
        /// The other root of the equation beyond the branch, if any.
        secondary_root: Option<f64>,
    },
    /// `b > b_max`: the win-stay lose-shift strategy is not preferred; only
    /// the off-branch root, if any, is reported.
    NoEfficientBranch { secondary_root: Option<f64> },
}

/// Solves `b = 32 a^3 d c / (a^2 + 4c)^2` for the root with `a^2 <= 4c` by
/// bracketed bisection; the right side is strictly increasing there, so the
/// root is unique when `b <= b_max`.
pub fn solve_a_star(b: f64) -> Result<AStarSolution> {
    if b < 0.0 || !b.is_finite() {
        return Err(Error::NegativeHorizon(b));
    }
    let c = gaussian_c();
    let branch_end = 2.0 * c.sqrt();
    let secondary = secondary_root(b, branch_end);
    if b > b_max() {
        return Ok(AStarSolution::NoEfficientBranch {
            secondary_root: secondary,
        });
    }
    if b == 0.0 {
        return Ok(AStarSolution::OnBranch {
            a_star: 0.0,
            residual: 0.0,
            secondary_root: secondary,
        });
    }
    let (mut lo, mut hi) = (0.0f64, branch_end);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if amplitude_equation(mid) < b {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    let a_star = 0.5 * (lo + hi);
    Ok(AStarSolution::OnBranch {
        a_star,
        residual: (b - amplitude_equation(a_star)).abs(),
        secondary_root: secondary,
    })
}

/// First root of the amplitude equation beyond the efficient branch.
fn secondary_root(b: f64, branch_end: f64) -> Option<f64> {
    if b == 0.0 {
        return None;
    }
    const SCAN: usize = 512;
    let hi = 64.0f64;
    let mut prev_a = branch_end;
    let mut prev = amplitude_equation(prev_a) - b;
    for k in 1..=SCAN {
        let a = branch_end + (hi - branch_end) * k as f64 / SCAN as f64;
        let v = amplitude_equation(a) - b;
        if (prev <= 0.0) != (v <= 0.0) {
            let (mut lo_a, mut hi_a) = (prev_a, a);
            let lo_nonpos = prev <= 0.0;
            for _ in 0..100 {
                let mid = 0.5 * (lo_a + hi_a);
                if (amplitude_equation(mid) - b <= 0.0) == lo_nonpos {
                    lo_a = mid;
                } else {
                    hi_a = mid;
                }
            }
            return Some(0.5 * (lo_a + hi_a));
        }
        prev_a = a;
        prev = v;
    }
    None
}

/// Large-N estimate of the first critical discount,
/// `lambda_c1 = 1 - b_max M^{-3/4}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaC1Estimate {
    pub value: f64,
    pub m: usize,
    /// The expansion assumes large M; small-M values are heuristic only.
    pub small_m_caveat: bool,
}

pub fn lambda_c1_estimate(n: usize) -> Result<LambdaC1Estimate> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidAgentCount(n));
    }
    let m = (n - 1) / 2;
    Ok(LambdaC1Estimate {
        value: 1.0 - b_max() * (m as f64).powf(-0.75),
        m,
        small_m_caveat: m < 10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_matrix_columns_sum_to_one() {
        let params = ScaledParams::new(0.7, 0.3, 100).unwrap();
        let t = reduced_matrix(&params).unwrap();
        for j in 0..3 {
            let sum: f64 = (0..3).map(|i| t[(i, j)]).sum();
            assert!((sum - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reduced_matrix_a_zero_freezes_pair() {
        let params = ScaledParams::new(0.0, 0.0, 64).unwrap();
        let t = reduced_matrix(&params).unwrap();
        let cm12 = gaussian_c() / 8.0;
        assert_eq!(t[(0, 0)], 1.0);
        assert_eq!(t[(1, 1)], 1.0);
        assert!((t[(0, 2)] - cm12).abs() < 1e-15);
        assert!((t[(1, 2)] - cm12).abs() < 1e-15);
        assert!((t[(2, 2)] - (1.0 - 2.0 * cm12)).abs() < 1e-15);
    }

    #[test]
    fn reduced_matrix_rejects_domain_violations() {
        // a M^{-1/4} + a^2 M^{-1/2}/2 > 1 for a = 3, M = 2
        let params = ScaledParams::new(3.0, 0.0, 2).unwrap();
        assert!(reduced_matrix(&params).is_err());
    }

    #[test]
    fn biorthonormality_is_exact() {
        for (a, m) in [(0.3, 16usize), (0.9, 100), (1.4, 10_000)] {
            let params = ScaledParams::new(a, 0.2, m).unwrap();
            let triple = eigen_triple(&params);
            for (i, pi) in triple.pairs.iter().enumerate() {
                for (j, pj) in triple.pairs.iter().enumerate() {
                    let dot: f64 = pi.left.iter().zip(pj.right.iter()).map(|(x, y)| x * y).sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (dot - expected).abs() < 1e-12,
                        "a={a} m={m} <L_{i}|R_{j}> = {dot}"
                    );
                }
            }
        }
    }

    #[test]
    fn eigenvectors_satisfy_eigenproblem() {
        let params = ScaledParams::new(0.8, 0.0, 256).unwrap();
        let t = reduced_matrix(&params).unwrap();
        let triple = eigen_triple(&params);
        for pair in &triple.pairs {
            for row in 0..3 {
                let tr: f64 = (0..3).map(|col| t[(row, col)] * pair.right[col]).sum();
                assert!(
                    (tr - pair.value * pair.right[row]).abs() < 1e-12,
                    "mu={} row={row}",
                    pair.value
                );
            }
        }
    }

    #[test]
    fn steady_state_sums_to_one() {
        let params = ScaledParams::new(1.1, 0.4, 81).unwrap();
        let ss = eigen_triple(&params).steady_state();
        assert!((ss.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mu2_at_a_equal_two_sqrt_c() {
        let m = 144usize;
        let c = gaussian_c();
        let params = ScaledParams::new(2.0 * c.sqrt(), 0.0, m).unwrap();
        let triple = eigen_triple(&params);
        let expected = 1.0 - 4.0 * c / (m as f64).sqrt();
        assert!((triple.pairs[1].value - expected).abs() < 1e-14);
    }

    #[test]
    fn spectral_reconstruction_is_exact() {
        let params = ScaledParams::new(0.6, 0.0, 400).unwrap();
        let t = reduced_matrix(&params).unwrap();
        let triple = eigen_triple(&params);
        for row in 0..3 {
            for col in 0..3 {
                let rebuilt: f64 = triple
                    .pairs
                    .iter()
                    .map(|p| p.right[row] * p.value * p.left[col])
                    .sum();
                assert!(
                    (rebuilt - t[(row, col)]).abs() < 1e-13,
                    "({row},{col}): {rebuilt} vs {}",
                    t[(row, col)]
                );
            }
        }
    }

    #[test]
    fn b_max_value() {
        assert!((b_max() - 2.0 * std::f64::consts::PI.powf(-0.75)).abs() < 1e-16);
        assert!((b_max() - 0.8476).abs() < 1e-4);
    }

    #[test]
    fn a_star_endpoints() {
        match solve_a_star(0.0).unwrap() {
            AStarSolution::OnBranch { a_star, .. } => assert_eq!(a_star, 0.0),
            _ => panic!("b = 0 must stay on branch"),
        }
        let expected = 2.0 * std::f64::consts::PI.powf(-0.25);
        match solve_a_star(b_max()).unwrap() {
            AStarSolution::OnBranch { a_star, residual, .. } => {
                assert!((a_star - expected).abs() < 1e-8, "{a_star} vs {expected}");
                assert!(residual < 1e-10);
            }
            _ => panic!("b = b_max must stay on branch"),
        }
        assert!(matches!(
            solve_a_star(b_max() + 1e-6).unwrap(),
            AStarSolution::NoEfficientBranch { .. }
        ));
    }

    #[test]
    fn a_star_is_strictly_increasing() {
        let mut prev = -1.0;
        for k in 0..=40 {
            let b = b_max() * k as f64 / 40.0;
            if let AStarSolution::OnBranch { a_star, residual, .. } = solve_a_star(b).unwrap() {
                assert!(residual < 1e-10, "b={b}");
                assert!(a_star > prev, "b={b}");
                prev = a_star;
            } else {
                panic!("b={b} left the branch");
            }
        }
    }

    #[test]
    fn payoff_is_stationary_at_a_star() {
        let m = 10_000usize;
        for k in 1..=8 {
            let b = b_max() * k as f64 / 9.0;
            let AStarSolution::OnBranch { a_star, .. } = solve_a_star(b).unwrap() else {
                panic!("on-branch expected");
            };
            let h = 1e-5;
            let up = asymptotic_payoff_e2(a_star + h, b, m).unwrap().w_e2;
            let down = asymptotic_payoff_e2(a_star - h, b, m).unwrap().w_e2;
            let derivative = (up - down) / (2.0 * h);
            assert!(derivative.abs() < 1e-6, "b={b} dW={derivative}");
        }
    }

    #[test]
    fn payoff_at_branch_boundary_equals_random_baseline() {
        let m = 625usize;
        let AStarSolution::OnBranch { a_star, .. } = solve_a_star(b_max()).unwrap() else {
            panic!("on-branch expected");
        };
        let w = asymptotic_payoff_e2(a_star, b_max(), m).unwrap().w_e2;
        let baseline = 0.5 - gaussian_d() / (m as f64).sqrt();
        assert!((w - baseline).abs() < 1e-10, "{w} vs {baseline}");
    }

    #[test]
    fn payoff_bracket_reference_at_a_star() {
        // bracket at the stationary point collapses to the closed form
        let m = 100usize;
        let b = 0.5;
        let AStarSolution::OnBranch { a_star, .. } = solve_a_star(b).unwrap() else {
            panic!("on-branch expected");
        };
        let c = gaussian_c();
        let d = gaussian_d();
        let a2 = a_star * a_star;
        let reference = 0.5
            - d * (m as f64).sqrt().recip()
                * (1.0 - 4.0 * c * (4.0 * c - a2) / (a2 + 4.0 * c).powi(2));
        let w = asymptotic_payoff_e2(a_star, b, m).unwrap().w_e2;
        assert!((w - reference).abs() < 1e-12);
    }

    #[test]
    fn payoff_rejects_a_zero() {
        assert!(asymptotic_payoff_e2(0.0, 0.1, 100).is_err());
    }

    #[test]
    fn lambda_estimate() {
        let est = lambda_c1_estimate(3).unwrap();
        assert!((est.value - (1.0 - b_max())).abs() < 1e-15);
        assert!(est.small_m_caveat);
        let est = lambda_c1_estimate(20_001).unwrap();
        assert!(est.value > 0.999);
        assert!(!est.small_m_caveat);
        assert!(lambda_c1_estimate(4).is_err());
    }
}
