//! Non-coordinated reference strategies: full time-frequency reuse and
//! orthogonal allocation. Both ignore interference when designing the
//! precoder — eigen-beamforming on the own link with equal stream powers —
//! and differ only in how the rate metric treats them (the orthogonal tag
//! removes the ICI term and applies the `1/B` prelog).

use nalgebra::DVector;

use crate::linalg::{dominant_right_singular_vectors, CMat};
use crate::Result;

use super::{equal_powers, mmse_combiner_inner, BeamformerSolution, DesignProblem};

fn eigen_beamforming(problem: &DesignProblem, orthogonal: bool) -> Result<BeamformerSolution> {
    let n_bs = problem.n_bs();
    let mut precoders: Vec<CMat> = Vec::with_capacity(n_bs);
    let mut powers: Vec<DVector<f64>> = Vec::with_capacity(n_bs);
    for b in 0..n_bs {
        let d = problem.max_streams(b);
        precoders.push(dominant_right_singular_vectors(problem.channel(b, b), d));
        powers.push(equal_powers(problem.power(), d));
    }
    // Under orthogonal allocation no intra-cluster interference reaches the
    // receiver, so its MMSE combiner sees the own link only.
    let combiners = mmse_combiner_inner(problem, &precoders, &powers, !orthogonal)?;
    let solution = BeamformerSolution {
        precoders,
        powers,
        combiners,
        trace: Vec::new(),
        iterations: 0,
        residual_leakage: None,
        orthogonal_allocation: orthogonal,
        fallback_columns: 0,
    };
    solution.check(problem)?;
    Ok(solution)
}

/// Full reuse of time-frequency resources: every base station transmits on
/// the evaluated resource unit and ignores all interference in its design.
pub fn full_reuse_baseline(problem: &DesignProblem) -> Result<BeamformerSolution> {
    eigen_beamforming(problem, false)
}

/// Orthogonal allocation: the same per-link design, tagged so the rate
/// metric drops the ICI term and multiplies each terminal rate by `1/B`.
/// Out-of-cluster interference still applies.
pub fn orthogonal_baseline(problem: &DesignProblem) -> Result<BeamformerSolution> {
    eigen_beamforming(problem, true)
}

#[cfg(test)]
mod tests {
    use super::super::tests::random_problem;
    use super::*;
    use crate::linalg::scaled_eye;
    use crate::schemes::DesignProblem;

    #[test]
    fn single_cell_is_eigen_beamforming() {
        let problem = random_problem(100, 1, 4, 2, 0.1);
        let solution = full_reuse_baseline(&problem).unwrap();
        let expected = dominant_right_singular_vectors(problem.channel(0, 0), 2);
        assert!((&solution.precoders[0] - expected).norm() < 1e-12);
        let orth = orthogonal_baseline(&problem).unwrap();
        assert!((&orth.precoders[0] - &solution.precoders[0]).norm() < 1e-12);
        assert!(orth.orthogonal_allocation);
    }

    #[test]
    fn precoder_ignores_interference_levels() {
        // Same estimated channels under two different cross-link scalings
        // must give the same full-reuse precoders.
        let strong = random_problem(101, 2, 3, 2, 0.1);
        let mut weak_channels: Vec<Vec<CMat>> = (0..2)
            .map(|b| (0..2).map(|l| strong.channel(b, l).clone()).collect())
            .collect();
        for b in 0..2 {
            for l in 0..2 {
                if l != b {
                    weak_channels[b][l] = weak_channels[b][l].scale(0.1);
                }
            }
        }
        let weak =
            DesignProblem::from_channels(weak_channels, 1.0, vec![0.5; 2], 10, 1e-4).unwrap();
        let a = full_reuse_baseline(&strong).unwrap();
        let b = full_reuse_baseline(&weak).unwrap();
        for i in 0..2 {
            assert!((&a.precoders[i] - &b.precoders[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_combiner_sees_own_link_only() {
        // With an identity own link and huge cross links, the orthogonal
        // combiner must match the interference-free MMSE closed form.
        let mut channels = vec![vec![CMat::zeros(0, 0); 2]; 2];
        for b in 0..2 {
            for l in 0..2 {
                channels[b][l] = if b == l {
                    scaled_eye(2, 1.0)
                } else {
                    scaled_eye(2, 100.0)
                };
            }
        }
        let problem =
            DesignProblem::from_channels(channels, 1.0, vec![0.5; 2], 10, 1e-4).unwrap();
        let solution = orthogonal_baseline(&problem).unwrap();
        // own link identity, equal power P/2 per stream:
        // u_k = e_k * (P/2) / (P/2 + sigma^2)
        let expected = 0.5 / (0.5 + 0.5);
        for b in 0..2 {
            for k in 0..2 {
                let col = solution.combiners[b].column(k);
                assert!((col.norm() - expected).abs() < 1e-12);
            }
        }
    }
}
