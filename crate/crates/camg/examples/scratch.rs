use camg::equilibrium::*;
use camg::*;

fn main() {
    for lambda in [0.50, 0.55, 0.60, 0.70, 0.85] {
        let cfg = GameConfig::with_defaults(7, lambda).unwrap();
        let sol = solve_coaction(&cfg).unwrap();
        // landmarks of pair (2,5) in the solved context
        let curves = best_response_curves(2, &sol.profile, &cfg, 2).unwrap();
        let lm = curves.landmarks;
        println!(
            "lambda={lambda}: (2,5) A={:.5} B={:.5} C={:?} D={:?} W'={:.6} | profile={:?}",
            lm.a, lm.b, lm.c.map(|c| (c*1e5).round()/1e5), lm.d.map(|d| (d*1e5).round()/1e5), lm.w_prime,
            sol.profile.probs().iter().map(|p| (p * 1e4).round() / 1e4).collect::<Vec<_>>(),
        );
    }
}
