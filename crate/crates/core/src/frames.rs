//! Reference-frame mathematics shared by every other module: 3-2-1 Euler
//! rotations, scalar-first quaternions and body <-> LVLH transforms.
//!
//! Conventions: rotations are right-handed and active, the composition order
//! for Euler angles is 3-2-1 (yaw about z, then pitch about y, then roll
//! about x), and the resulting matrix maps body-frame vectors into LVLH.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Pitch band treated as gimbal lock for diagnostics: |pitch| > pi/2 - 1e-3.
pub const GIMBAL_LOCK_MARGIN: f64 = 1e-3;

/// Unit quaternion, scalar part first. Renormalize after integration; all
/// rotation helpers assume unit norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let axis = axis.normalize();
        let half = 0.5 * angle;
        let s = half.sin();
        Self::new(half.cos(), s * axis.x, s * axis.y, s * axis.z)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    /// Hamilton product self ⊗ rhs.
    pub fn mul(&self, rhs: &Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * rhs.w - self.x * rhs.x - self.y * rhs.y - self.z * rhs.z,
            self.w * rhs.x + self.x * rhs.w + self.y * rhs.z - self.z * rhs.y,
            self.w * rhs.y - self.x * rhs.z + self.y * rhs.w + self.z * rhs.x,
            self.w * rhs.z + self.x * rhs.y - self.y * rhs.x + self.z * rhs.w,
        )
    }

    /// Kinematic rate q̇ = ½ q ⊗ (0, ω) for a body rate ω expressed in the
    /// body frame.
    pub fn derivative(&self, omega_body: Vec3) -> Quaternion {
        let omega = Quaternion::new(0.0, omega_body.x, omega_body.y, omega_body.z);
        let q = self.mul(&omega);
        Quaternion::new(0.5 * q.w, 0.5 * q.x, 0.5 * q.y, 0.5 * q.z)
    }

    pub fn add_scaled(&self, rate: &Quaternion, dt: f64) -> Quaternion {
        Quaternion::new(
            self.w + dt * rate.w,
            self.x + dt * rate.x,
            self.y + dt * rate.y,
            self.z + dt * rate.z,
        )
    }

    /// Direction-cosine matrix of this quaternion (body -> LVLH).
    pub fn to_dcm(&self) -> Mat3 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }
}

/// 3-2-1 Euler angles in radians: roll about body x, pitch about body y,
/// yaw about body z, composed as R = Rz(yaw) Ry(pitch) Rx(roll).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles321 {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles321 {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub const ZERO: EulerAngles321 = EulerAngles321 {
        roll: 0.0,
        pitch: 0.0,
        yaw: 0.0,
    };

    /// True when the pitch is inside the degenerate band where roll and yaw
    /// are no longer separable. The converted angles are still returned.
    pub fn near_gimbal_lock(&self) -> bool {
        self.pitch.abs() > std::f64::consts::FRAC_PI_2 - GIMBAL_LOCK_MARGIN
    }
}

/// Rotation matrix (body -> LVLH) for 3-2-1 Euler angles.
pub fn euler_to_dcm(angles: &EulerAngles321) -> Mat3 {
    let (sr, cr) = angles.roll.sin_cos();
    let (sp, cp) = angles.pitch.sin_cos();
    let (sy, cy) = angles.yaw.sin_cos();
    Mat3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )
}

/// Quaternion equivalent of `euler_to_dcm` (same 3-2-1 composition).
pub fn euler_to_quat(angles: &EulerAngles321) -> Quaternion {
    let qz = Quaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), angles.yaw);
    let qy = Quaternion::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), angles.pitch);
    let qx = Quaternion::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), angles.roll);
    qz.mul(&qy).mul(&qx)
}

/// 3-2-1 Euler angles of a unit quaternion. Inside the gimbal-lock band the
/// returned angles are still valid (pitch saturates at ±pi/2); callers can
/// query `near_gimbal_lock` on the result.
pub fn quat_to_euler(q: &Quaternion) -> EulerAngles321 {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    let r20 = 2.0 * (x * z - w * y);
    let r21 = 2.0 * (y * z + w * x);
    let r22 = 1.0 - 2.0 * (x * x + y * y);
    let r10 = 2.0 * (x * y + w * z);
    let r00 = 1.0 - 2.0 * (y * y + z * z);
    EulerAngles321 {
        roll: r21.atan2(r22),
        pitch: (-r20).clamp(-1.0, 1.0).asin(),
        yaw: r10.atan2(r00),
    }
}

/// Rotate a body-frame vector into LVLH with the attitude quaternion.
pub fn rotate_body_to_lvlh(v_body: Vec3, q: &Quaternion) -> Vec3 {
    // v' = v + w t + q_v x t with t = 2 q_v x v
    let qv = q.vector();
    let t = 2.0 * qv.cross(&v_body);
    v_body + q.w * t + qv.cross(&t)
}

/// Inverse transform of `rotate_body_to_lvlh`.
pub fn rotate_lvlh_to_body(v_lvlh: Vec3, q: &Quaternion) -> Vec3 {
    rotate_body_to_lvlh(v_lvlh, &q.conjugate())
}
