mod common;

use common::simpson;
use ftbias::joint::{process_noise, transition_matrix, ProcessModel};
use nalgebra::{Matrix3, Vector3};

const DTS: [f64; 4] = [1e-3, 1e-2, 0.1, 1.0];

/// Continuous-time state matrix of the position/velocity/acceleration chain.
fn drift() -> Matrix3<f64> {
    Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0)
}

fn integrated_noise(psd: f64, input: Vector3<f64>, dt: f64) -> Matrix3<f64> {
    let f = drift();
    simpson(
        |s| {
            let g = (f * s).exp() * input;
            g * g.transpose() * psd
        },
        dt,
        2000,
    )
}

#[test]
fn jerk_noise_matches_quadrature() {
    for dt in DTS {
        let model = ProcessModel::IntegratedJerkNoise { psd: 2.5 };
        let q = process_noise(&model, dt).unwrap();
        let oracle = integrated_noise(2.5, Vector3::z(), dt);
        assert!((q - oracle).amax() < 1e-8, "dt={dt}: {:e}", (q - oracle).amax());
    }
}

#[test]
fn acceleration_noise_matches_quadrature() {
    for dt in DTS {
        let model = ProcessModel::IntegratedAccelNoise { psd: 0.7 };
        let q = process_noise(&model, dt).unwrap();
        let oracle = integrated_noise(0.7, Vector3::y(), dt);
        assert!((q - oracle).amax() < 1e-8, "dt={dt}: {:e}", (q - oracle).amax());
    }
}

#[test]
fn integrated_transitions_are_matrix_exponentials() {
    for dt in DTS {
        for model in [
            ProcessModel::IntegratedJerkNoise { psd: 1.0 },
            ProcessModel::IntegratedAccelNoise { psd: 1.0 },
        ] {
            let a = transition_matrix(&model, dt).unwrap();
            assert!((a - (drift() * dt).exp()).amax() < 1e-12);
        }
    }
}

#[test]
fn discrete_model_is_diagonal_and_constant() {
    let model = ProcessModel::NonIntegratedAccelNoise {
        var_q: 1e-6,
        var_qd: 1e-4,
        var_qdd: 1e-2,
    };
    for dt in DTS {
        let q = process_noise(&model, dt).unwrap();
        assert_eq!(q, Matrix3::from_diagonal(&Vector3::new(1e-6, 1e-4, 1e-2)));
        let a = transition_matrix(&model, dt).unwrap();
        assert_eq!(a, Matrix3::new(1.0, dt, 0.0, 0.0, 1.0, dt, 0.0, 0.0, 1.0));
    }
}

#[test]
fn non_positive_intervals_are_rejected() {
    let model = ProcessModel::default();
    for dt in [0.0, -1e-3, f64::NAN] {
        assert!(process_noise(&model, dt).is_err());
        assert!(transition_matrix(&model, dt).is_err());
    }
}
