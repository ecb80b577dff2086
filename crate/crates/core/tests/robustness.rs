//! Root-finding robustness across the (nu, eps) parameter plane: roots
//! exist, satisfy admissibility, and track the asymptotic guess at small eps.

use ablrt::evans::{find_lambda, lambda_guess};
use ablrt::profile::{PhysicalParams, Profile};

#[test]
fn roots_across_parameter_plane() {
    for nu in [1.3, 1.7, 2.5, 4.0] {
        let p = PhysicalParams::new(nu, 1.0, 1.0, 1.0).unwrap();
        let prof = Profile::new(nu).unwrap();
        for eps in [1e-5, 1e-3] {
            let root = find_lambda(&p, &prof, eps, (0.5, 2.0)).unwrap();
            let guess = lambda_guess(eps, nu).unwrap();
            let floor = 1.0f64.max(eps * (nu + 1.0).powf(nu + 1.0) / nu.powf(nu));
            assert!(
                root >= floor,
                "nu={nu} eps={eps}: root {root} below floor {floor}"
            );
            // the first-order guess captures the root to a modest multiple
            // of the correction size
            assert!(
                (root - guess).abs() <= 0.35 * (guess - 1.0),
                "nu={nu} eps={eps}: root {root} vs guess {guess}"
            );
            // gamma stays below the cap
            let (_, cap, _) = p.l_eff_and_cap();
            let gamma = (p.g * eps / p.l0 / root).sqrt();
            assert!(gamma < cap * (1.0 + 1e-12));
        }
    }
}
