//! Minimal 3-vector / 3x3-matrix arithmetic for field work.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Cartesian 3-vector of f64, used for positions (m), velocities (m/s) and
/// magnetic fields (T).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Unit vector; `None` for vectors shorter than `1e-300`.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n < 1e-300 {
            None
        } else {
            Some(self / n)
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Any unit vector perpendicular to `self` (which must be nonzero).
    pub fn any_perpendicular(self) -> Vec3 {
        let trial = if self.x.abs() < 0.9 * self.norm() { Vec3::X } else { Vec3::Y };
        let p = trial - self * (trial.dot(self) / self.norm_sq());
        p.normalized().expect("perpendicular of nonzero vector")
    }

    pub fn component(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("Vec3 component index out of range: {i}"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Row-major 3x3 matrix, used for field-gradient tensors and rotations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn zero() -> Mat3 {
        Mat3([[0.0; 3]; 3])
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[row][col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.0[row][col] = v;
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn matmul(&self, o: &Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for (k, ok) in o.0.iter().enumerate() {
                    r[i][j] += self.0[i][k] * ok[j];
                }
            }
        }
        Mat3(r)
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.0[0][0] * v.x + self.0[0][1] * v.y + self.0[0][2] * v.z,
            self.0[1][0] * v.x + self.0[1][1] * v.y + self.0[1][2] * v.z,
            self.0[2][0] * v.x + self.0[2][1] * v.y + self.0[2][2] * v.z,
        )
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry of (A - A^T)/2.
    pub fn antisymmetric_residual(&self) -> f64 {
        let m = &self.0;
        let mut r: f64 = 0.0;
        for i in 0..3 {
            for j in (i + 1)..3 {
                r = r.max(0.5 * (m[i][j] - m[j][i]).abs());
            }
        }
        r
    }

    /// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi
    /// rotations. Only valid for symmetric input.
    pub fn symmetric_eigenvalues(&self) -> [f64; 3] {
        let mut a = self.0;
        for _ in 0..32 {
            let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
            let scale = a[0][0].abs() + a[1][1].abs() + a[2][2].abs() + off;
            if scale == 0.0 || off <= 1e-15 * scale {
                break;
            }
            for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..3 {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
        let mut ev = [a[0][0], a[1][1], a[2][2]];
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }

    /// Solve A x = b for a well-conditioned 3x3 system by Cramer's rule.
    /// Returns `None` when the determinant is numerically zero.
    pub fn solve(&self, b: Vec3) -> Option<Vec3> {
        let det = self.det();
        if det.abs() < 1e-300 {
            return None;
        }
        let col = |m: &Mat3, j: usize| Vec3::new(m.0[0][j], m.0[1][j], m.0[2][j]);
        let mut cols = [col(self, 0), col(self, 1), col(self, 2)];
        let mut x = [0.0; 3];
        for i in 0..3 {
            let saved = cols[i];
            cols[i] = b;
            let m = Mat3([
                [cols[0].x, cols[1].x, cols[2].x],
                [cols[0].y, cols[1].y, cols[2].y],
                [cols[0].z, cols[1].z, cols[2].z],
            ]);
            x[i] = m.det() / det;
            cols[i] = saved;
        }
        Some(Vec3::new(x[0], x[1], x[2]))
    }

    /// Rotation by `angle` (rad) about the given axis (need not be unit).
    pub fn rotation(axis: Vec3, angle: f64) -> Mat3 {
        let u = axis.normalized().expect("rotation axis must be nonzero");
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Mat3([
            [c + u.x * u.x * t, u.x * u.y * t - u.z * s, u.x * u.z * t + u.y * s],
            [u.y * u.x * t + u.z * s, c + u.y * u.y * t, u.y * u.z * t - u.x * s],
            [u.z * u.x * t - u.y * s, u.z * u.y * t + u.x * s, c + u.z * u.z * t],
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cross_follows_right_hand_rule() {
        assert_eq!(Vec3::X.cross(Vec3::Y), Vec3::Z);
        assert_eq!(Vec3::Y.cross(Vec3::Z), Vec3::X);
    }

    #[test]
    fn rotation_preserves_length_and_orientation() {
        let r = Mat3::rotation(Vec3::new(1.0, 2.0, -0.5), 1.234);
        let v = Vec3::new(0.3, -0.7, 1.1);
        assert_relative_eq!(r.mul_vec(v).norm(), v.norm(), max_relative = 1e-14);
        assert_relative_eq!(r.det(), 1.0, epsilon = 1e-14);
        let rtr = r.transpose().matmul(&r);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(rtr.get(i, j), expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn jacobi_eigenvalues_match_known_spectrum() {
        let m = Mat3([[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]]);
        let ev = m.symmetric_eigenvalues();
        assert_relative_eq!(ev[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(ev[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(ev[2], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_recovers_rhs() {
        let m = Mat3([[4.0, 1.0, 0.2], [1.0, 3.0, -0.5], [0.2, -0.5, 2.0]]);
        let x = Vec3::new(0.3, -1.2, 2.5);
        let b = m.mul_vec(x);
        let got = m.solve(b).unwrap();
        assert!((got - x).norm() < 1e-12);
    }

    #[test]
    fn any_perpendicular_is_perpendicular() {
        for v in [Vec3::X, Vec3::Z, Vec3::new(0.99, 0.01, 0.0), Vec3::new(1.0, 2.0, 3.0)] {
            let p = v.any_perpendicular();
            assert!(v.dot(p).abs() < 1e-12 * v.norm());
            assert_relative_eq!(p.norm(), 1.0, epsilon = 1e-12);
        }
    }
}
