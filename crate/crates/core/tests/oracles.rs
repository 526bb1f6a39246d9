use nalgebra::DVector;

use graph_unlearn::graph::Graph;
use graph_unlearn::scattering::{embed, ScatteringConfig};
use graph_unlearn::wavelets::{FamilyKind, WaveletFamily};

fn four_cycle(x: DVector<f64>) -> Graph {
    Graph::from_edges(0, 0, 4, &[(0, 1), (1, 2), (2, 3), (3, 0)], x).unwrap()
}

/// On the 4-cycle both walk operators equal A/2, so the lazy operator is
/// T = (I + A/2)/2. For x = e_0, J = 1, L = 2:
///   U x = 1/4
///   (I - T) x = (1/2, -1/4, 0, -1/4)      -> mean |.| = 1/4
///   (T - T^2) x = (1/8, 0, -1/8, 0)       -> mean |.| = 1/16
#[test]
fn delta_on_four_cycle_by_hand() {
    let x = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
    for kind in [FamilyKind::Diffusion, FamilyKind::Geometric] {
        let cfg = ScatteringConfig::new(WaveletFamily::new(kind, 1, 1).unwrap(), 2).unwrap();
        let z = embed(&four_cycle(x.clone()), &cfg).unwrap();
        let expected = [0.25, 0.25, 1.0 / 16.0];
        assert_eq!(z.len(), 3);
        for (got, want) in z.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-15, "{}: {got} vs {want}", kind.name());
        }
    }
}

/// A constant signal is fixed by T, so every wavelet coefficient vanishes
/// and only the root average survives.
#[test]
fn constant_signal_on_four_cycle() {
    let x = DVector::from_element(4, 0.5);
    let cfg = ScatteringConfig::new(WaveletFamily::new(FamilyKind::Diffusion, 3, 1).unwrap(), 3).unwrap();
    let z = embed(&four_cycle(x), &cfg).unwrap();
    assert!((z.values[0] - 0.5).abs() < 1e-15);
    assert!(z.values.iter().skip(1).all(|v| v.abs() < 1e-15));
}

/// The alternating signal is the T-eigenvector with eigenvalue 0, so the
/// scale-0 filter passes it unchanged and all coarser ones kill it.
#[test]
fn alternating_signal_on_four_cycle() {
    let x = DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0]);
    let cfg = ScatteringConfig::new(WaveletFamily::new(FamilyKind::Diffusion, 2, 1).unwrap(), 2).unwrap();
    let z = embed(&four_cycle(x), &cfg).unwrap();
    // root average 0, |H_0 x| = 1 everywhere, H_1 x = H_2 x = 0
    let expected = [0.0, 1.0, 0.0, 0.0];
    for (got, want) in z.values.iter().zip(expected) {
        assert!((got - want).abs() < 1e-15, "{got} vs {want}");
    }
}
