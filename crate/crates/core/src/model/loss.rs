use std::f64::consts::TAU;

use crate::sim::{angular_distance, Pose};

/// Weighted pose loss: `(1−γ)·‖Δxy‖² + γ·wrap(|Δα|)` with the symmetric
/// wrapped angular distance.
pub fn loss(pred: &Pose, gt: &Pose, gamma: f64) -> f64 {
    let dx = pred.x - gt.x;
    let dy = pred.y - gt.y;
    (1.0 - gamma) * (dx * dx + dy * dy) + gamma * angular_distance(pred.alpha, gt.alpha)
}

/// Derivative of the wrapped angular distance w.r.t. the predicted angle.
/// Zero at the two non-differentiable points (`Δα ≡ 0` and `Δα ≡ π`).
pub fn wrapped_distance_slope(pred_alpha: f64, gt_alpha: f64) -> f64 {
    let m = (pred_alpha - gt_alpha).rem_euclid(TAU);
    if m == 0.0 || m == TAU / 2.0 {
        0.0
    } else if m < TAU / 2.0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn zero_at_truth() {
        let p = Pose::new(3.0, 4.0, 1.0);
        assert_eq!(loss(&p, &p, 0.3), 0.0);
    }

    #[test]
    fn right_angle_heading_error() {
        let l = loss(
            &Pose::new(1.0, 2.0, FRAC_PI_2),
            &Pose::new(1.0, 2.0, 0.0),
            0.3,
        );
        assert!((l - 0.471_238_898_038_469).abs() < 1e-9);
    }

    #[test]
    fn wrap_takes_short_way() {
        let l = loss(
            &Pose::new(0.0, 0.0, 0.1),
            &Pose::new(0.0, 0.0, TAU - 0.1),
            1.0,
        );
        assert!((l - 0.2).abs() < 1e-9);
    }

    #[test]
    fn slope_signs() {
        assert_eq!(wrapped_distance_slope(0.5, 0.0), 1.0);
        assert_eq!(wrapped_distance_slope(0.0, 0.5), -1.0);
        assert_eq!(wrapped_distance_slope(0.1, TAU - 0.1), 1.0);
        assert_eq!(wrapped_distance_slope(PI, 0.0), 0.0);
    }
}
