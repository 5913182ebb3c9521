//! Axis-angle rotation vectors and their composition through unit quaternions.

use serde::{Deserialize, Serialize};

/// Rotation by `|u|` radians about `u / |u|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationVector {
    u: [f64; 3],
}

impl RotationVector {
    /// Panics on non-finite components.
    pub fn new(u: [f64; 3]) -> Self {
        assert!(u.iter().all(|x| x.is_finite()), "rotation vector must be finite");
        Self { u }
    }

    pub fn try_new(u: [f64; 3]) -> Option<Self> {
        u.iter().all(|x| x.is_finite()).then_some(Self { u })
    }

    pub fn components(&self) -> [f64; 3] {
        self.u
    }

    pub fn angle(&self) -> f64 {
        norm3(self.u)
    }

    fn quaternion(&self) -> [f64; 4] {
        let angle = self.angle();
        if angle == 0.0 {
            return [1.0, 0.0, 0.0, 0.0];
        }
        let s = (angle / 2.0).sin() / angle;
        [(angle / 2.0).cos(), self.u[0] * s, self.u[1] * s, self.u[2] * s]
    }

    /// Canonical form: angle in `[0, pi]`; at exactly `pi` the axis is flipped
    /// so its first nonzero component is positive.
    pub fn canonical(&self) -> Self {
        from_quaternion(self.quaternion())
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn quaternion_product(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn from_quaternion(mut q: [f64; 4]) -> RotationVector {
    if q[0] < 0.0 {
        q = q.map(|x| -x);
    }
    let v = [q[1], q[2], q[3]];
    let sin_half = norm3(v);
    if sin_half == 0.0 {
        return RotationVector { u: [0.0; 3] };
    }
    let angle = 2.0 * sin_half.atan2(q[0]);
    let mut axis = v.map(|x| x / sin_half);
    if q[0] == 0.0 || (angle - std::f64::consts::PI).abs() < 1e-15 {
        if let Some(&first) = axis.iter().find(|x| x.abs() > 1e-15) {
            if first < 0.0 {
                axis = axis.map(|x| -x);
            }
        }
    }
    RotationVector {
        u: axis.map(|x| x * angle),
    }
}

/// Axis-angle vector of `R(u1) R(u2)`.
pub fn rotation_compose(u1: &RotationVector, u2: &RotationVector) -> RotationVector {
    from_quaternion(quaternion_product(u1.quaternion(), u2.quaternion()))
}

/// 3x3 rotation matrix (Rodrigues), used as an independent check.
pub fn rotation_matrix(u: &RotationVector) -> [[f64; 3]; 3] {
    let angle = u.angle();
    let mut r = [[0.0; 3]; 3];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    if angle == 0.0 {
        return r;
    }
    let n = u.u.map(|x| x / angle);
    let (s, c) = angle.sin_cos();
    let k = [[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]];
    for i in 0..3 {
        for j in 0..3 {
            let k2: f64 = (0..3).map(|m| k[i][m] * k[m][j]).sum();
            r[i][j] += s * k[i][j] + (1.0 - c) * k2;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn identity_and_inverse() {
        let u = RotationVector::new([0.3, -0.2, 0.9]);
        let zero = RotationVector::new([0.0; 3]);
        assert!(close(rotation_compose(&u, &zero).components(), u.components(), 1e-15));
        let a = RotationVector::new([FRAC_PI_2, 0.0, 0.0]);
        let b = RotationVector::new([-FRAC_PI_2, 0.0, 0.0]);
        assert!(close(rotation_compose(&a, &b).components(), [0.0; 3], 1e-15));
    }

    #[test]
    fn quarter_turns_about_x_then_y() {
        let a = RotationVector::new([FRAC_PI_2, 0.0, 0.0]);
        let b = RotationVector::new([0.0, FRAC_PI_2, 0.0]);
        let c = rotation_compose(&a, &b);
        assert!((c.angle() - 2.0 * PI / 3.0).abs() < 1e-14);
        let axis = c.components().map(|x| x / c.angle());
        let k = 1.0 / 3f64.sqrt();
        assert!(close(axis, [k, k, k], 1e-14));
    }

    #[test]
    fn canonical_range() {
        let u = RotationVector::new([0.0, 0.0, 1.5 * PI]).canonical();
        assert!(close(u.components(), [0.0, 0.0, -0.5 * PI], 1e-14));
        let half = RotationVector::new([0.0, -PI, 0.0]).canonical();
        assert!(close(half.components(), [0.0, PI, 0.0], 1e-14));
        let full = RotationVector::new([2.0 * PI, 0.0, 0.0]).canonical();
        assert!(full.angle() < 1e-15);
    }

    fn matmul3(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        out
    }

    proptest! {
        #[test]
        fn composition_matches_rotation_matrices(
            a in prop::array::uniform3(-4.0f64..4.0),
            b in prop::array::uniform3(-4.0f64..4.0),
        ) {
            let (ua, ub) = (RotationVector::new(a), RotationVector::new(b));
            let c = rotation_compose(&ua, &ub);
            prop_assert!(c.angle() <= PI + 1e-12);
            let lhs = matmul3(rotation_matrix(&ua), rotation_matrix(&ub));
            let rhs = rotation_matrix(&c);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((lhs[i][j] - rhs[i][j]).abs() < 1e-12);
                }
            }
        }
    }
}
