//! Coupled translational/rotational propagation of the chaser.
//!
//! Translation follows the Hill equations written in the target-centered
//! LVLH frame (x along V-bar, y along H-bar, z along R-bar toward the
//! Earth), attitude follows quaternion kinematics plus the Euler rigid-body
//! equations, and mass depletes with the L1 norm of the commanded thrust.
//! Everything is integrated together with a fixed-step RK4.

use crate::frames::{rotate_body_to_lvlh, Quaternion, Vec3};
use thiserror::Error;

/// Standard gravity at sea level [m/s²].
pub const G0: f64 = 9.80665;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("non-finite force component in ({0}, {1}, {2})")]
    NonFiniteForce(f64, f64, f64),
    #[error("propellant exhausted: mass {mass:.3} kg fell below dry mass {dry_mass:.3} kg")]
    PropellantExhausted { mass: f64, dry_mass: f64 },
}

/// Full 14-dimensional chaser state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacecraftState {
    /// Position in LVLH [m].
    pub position: Vec3,
    /// Velocity in LVLH [m/s].
    pub velocity: Vec3,
    /// Attitude quaternion, body -> LVLH.
    pub attitude: Quaternion,
    /// Body angular rate [rad/s].
    pub angular_rate: Vec3,
    /// Current mass [kg].
    pub mass: f64,
}

impl SpacecraftState {
    pub fn at_rest(position: Vec3, mass: f64) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            attitude: Quaternion::IDENTITY,
            angular_rate: Vec3::zeros(),
            mass,
        }
    }
}

/// Circular reference orbit of the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitParams {
    /// Gravitational parameter [m³/s²].
    pub mu: f64,
    /// Orbit radius [m].
    pub radius: f64,
    /// Mean motion ω0 = sqrt(mu / radius³) [rad/s].
    pub mean_motion: f64,
    /// Planet equatorial radius [m].
    pub earth_radius: f64,
    /// Oblateness coefficient used by the J2 disturbance.
    pub j2: f64,
}

impl OrbitParams {
    pub fn new(mu: f64, radius: f64, earth_radius: f64, j2: f64) -> Self {
        Self {
            mu,
            radius,
            mean_motion: (mu / radius.powi(3)).sqrt(),
            earth_radius,
            j2,
        }
    }

    /// Orbital speed of the reference point [m/s].
    pub fn orbital_speed(&self) -> f64 {
        self.mean_motion * self.radius
    }
}

/// Chaser geometry and propulsion constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyProperties {
    /// Cube side length [m].
    pub side_length: f64,
    /// Principal inertia diagonal [kg·m²].
    pub inertia: Vec3,
    /// Drag coefficient.
    pub drag_coefficient: f64,
    /// Surface reflectivity in [0, 1].
    pub reflectivity: f64,
    /// Thruster specific impulse [s].
    pub specific_impulse: f64,
    /// Mass floor below which propellant is considered exhausted [kg].
    pub dry_mass: f64,
}

impl BodyProperties {
    /// Cross section of the cube face [m²].
    pub fn cross_section(&self) -> f64 {
        self.side_length * self.side_length
    }

    /// Half body diagonal, used as the collision envelope radius [m].
    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.side_length * 3.0_f64.sqrt()
    }
}

/// External disturbance loads accumulated by the disturbance model.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExternalDisturbance {
    /// Disturbance force in LVLH [N].
    pub force_lvlh: Vec3,
    /// Disturbance torque in body axes [Nm].
    pub torque_body: Vec3,
}

/// Hill (Clohessy-Wiltshire) acceleration for the total LVLH force acting on
/// the chaser:
///
/// ẍ = Fx/m + 2ω0 ż
/// ÿ = Fy/m − ω0² y
/// z̈ = Fz/m − 2ω0 ẋ + 3ω0² z
pub fn hill_accel(
    state: &SpacecraftState,
    force_lvlh: Vec3,
    orbit: &OrbitParams,
) -> Result<Vec3, DynamicsError> {
    if !force_lvlh.iter().all(|c| c.is_finite()) {
        return Err(DynamicsError::NonFiniteForce(
            force_lvlh.x,
            force_lvlh.y,
            force_lvlh.z,
        ));
    }
    let n = orbit.mean_motion;
    let m = state.mass;
    Ok(Vec3::new(
        force_lvlh.x / m + 2.0 * n * state.velocity.z,
        force_lvlh.y / m - n * n * state.position.y,
        force_lvlh.z / m - 2.0 * n * state.velocity.x + 3.0 * n * n * state.position.z,
    ))
}

/// Quaternion kinematics and Euler rigid-body equations:
/// q̇ = ½ q ⊗ (0, ω), ω̇ = J⁻¹ (M − ω × Jω).
pub fn attitude_derivatives(
    state: &SpacecraftState,
    torque_body: Vec3,
    props: &BodyProperties,
) -> (Quaternion, Vec3) {
    let q_dot = state.attitude.derivative(state.angular_rate);
    let j = props.inertia;
    let w = state.angular_rate;
    let j_omega = Vec3::new(j.x * w.x, j.y * w.y, j.z * w.z);
    let rhs = torque_body - w.cross(&j_omega);
    let w_dot = Vec3::new(rhs.x / j.x, rhs.y / j.y, rhs.z / j.z);
    (q_dot, w_dot)
}

/// Propellant mass flow for a body-frame thrust command, using the L1 thrust
/// magnitude |F| = |Fx| + |Fy| + |Fz| [kg/s].
pub fn mass_flow(thrust_body: Vec3, props: &BodyProperties) -> f64 {
    l1_norm(thrust_body) / (G0 * props.specific_impulse)
}

pub fn l1_norm(v: Vec3) -> f64 {
    v.x.abs() + v.y.abs() + v.z.abs()
}

#[derive(Clone, Copy)]
struct StateDerivative {
    velocity: Vec3,
    acceleration: Vec3,
    attitude_rate: Quaternion,
    angular_accel: Vec3,
    mass_rate: f64,
}

fn derivative(
    state: &SpacecraftState,
    thrust_body: Vec3,
    thrust_sum: f64,
    torque_body: Vec3,
    disturbance: &ExternalDisturbance,
    orbit: &OrbitParams,
    props: &BodyProperties,
) -> Result<StateDerivative, DynamicsError> {
    // Intermediate RK4 states drift slightly off unit norm; normalize for the
    // force rotation while integrating the raw quaternion components.
    let q_unit = state.attitude.normalized();
    let force_lvlh = rotate_body_to_lvlh(thrust_body, &q_unit) + disturbance.force_lvlh;
    let acceleration = hill_accel(state, force_lvlh, orbit)?;
    let (attitude_rate, angular_accel) =
        attitude_derivatives(state, torque_body + disturbance.torque_body, props);
    Ok(StateDerivative {
        velocity: state.velocity,
        acceleration,
        attitude_rate,
        angular_accel,
        mass_rate: -thrust_sum / (G0 * props.specific_impulse),
    })
}

fn advance(state: &SpacecraftState, d: &StateDerivative, dt: f64) -> SpacecraftState {
    SpacecraftState {
        position: state.position + dt * d.velocity,
        velocity: state.velocity + dt * d.acceleration,
        attitude: state.attitude.add_scaled(&d.attitude_rate, dt),
        angular_rate: state.angular_rate + dt * d.angular_accel,
        mass: state.mass + dt * d.mass_rate,
    }
}

/// One fixed RK4 step under zero-order-held commands. The thrust command is
/// given in body axes, the wheel/thruster torque in body axes and the
/// disturbance loads as produced by the disturbance model. The attitude is
/// renormalized after the step; a mass-floor breach is reported as an error.
pub fn step(
    state: &SpacecraftState,
    thrust_body: Vec3,
    torque_body: Vec3,
    disturbance: &ExternalDisturbance,
    orbit: &OrbitParams,
    props: &BodyProperties,
    dt: f64,
) -> Result<SpacecraftState, DynamicsError> {
    step_with_thrust_sum(
        state,
        thrust_body,
        l1_norm(thrust_body),
        torque_body,
        disturbance,
        orbit,
        props,
        dt,
    )
}

/// `step` with the propellant-weighted thrust magnitude passed explicitly:
/// the sum of the individual thruster magnitudes behind `thrust_body`. For
/// axis-aligned banks this equals the component sum of the net vector; for
/// canted banks the two differ and fuel follows the thrusters, not the
/// vector components.
#[allow(clippy::too_many_arguments)]
pub fn step_with_thrust_sum(
    state: &SpacecraftState,
    thrust_body: Vec3,
    thrust_sum: f64,
    torque_body: Vec3,
    disturbance: &ExternalDisturbance,
    orbit: &OrbitParams,
    props: &BodyProperties,
    dt: f64,
) -> Result<SpacecraftState, DynamicsError> {
    let k1 = derivative(state, thrust_body, thrust_sum, torque_body, disturbance, orbit, props)?;
    let s2 = advance(state, &k1, 0.5 * dt);
    let k2 = derivative(&s2, thrust_body, thrust_sum, torque_body, disturbance, orbit, props)?;
    let s3 = advance(state, &k2, 0.5 * dt);
    let k3 = derivative(&s3, thrust_body, thrust_sum, torque_body, disturbance, orbit, props)?;
    let s4 = advance(state, &k3, dt);
    let k4 = derivative(&s4, thrust_body, thrust_sum, torque_body, disturbance, orbit, props)?;

    let sixth = dt / 6.0;
    let combine3 = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| sixth * (a + 2.0 * b + 2.0 * c + d);
    let mut next = SpacecraftState {
        position: state.position + combine3(k1.velocity, k2.velocity, k3.velocity, k4.velocity),
        velocity: state.velocity
            + combine3(
                k1.acceleration,
                k2.acceleration,
                k3.acceleration,
                k4.acceleration,
            ),
        attitude: Quaternion::new(
            state.attitude.w
                + sixth
                    * (k1.attitude_rate.w
                        + 2.0 * k2.attitude_rate.w
                        + 2.0 * k3.attitude_rate.w
                        + k4.attitude_rate.w),
            state.attitude.x
                + sixth
                    * (k1.attitude_rate.x
                        + 2.0 * k2.attitude_rate.x
                        + 2.0 * k3.attitude_rate.x
                        + k4.attitude_rate.x),
            state.attitude.y
                + sixth
                    * (k1.attitude_rate.y
                        + 2.0 * k2.attitude_rate.y
                        + 2.0 * k3.attitude_rate.y
                        + k4.attitude_rate.y),
            state.attitude.z
                + sixth
                    * (k1.attitude_rate.z
                        + 2.0 * k2.attitude_rate.z
                        + 2.0 * k3.attitude_rate.z
                        + k4.attitude_rate.z),
        ),
        angular_rate: state.angular_rate
            + combine3(
                k1.angular_accel,
                k2.angular_accel,
                k3.angular_accel,
                k4.angular_accel,
            ),
        mass: state.mass
            + sixth * (k1.mass_rate + 2.0 * k2.mass_rate + 2.0 * k3.mass_rate + k4.mass_rate),
    };
    next.attitude = next.attitude.normalized();
    if next.mass <= props.dry_mass {
        return Err(DynamicsError::PropellantExhausted {
            mass: next.mass,
            dry_mass: props.dry_mass,
        });
    }
    Ok(next)
}
