//! Environmental forces and torques acting on the chaser: aerodynamic drag,
//! Earth-oblateness (J2) force, solar radiation pressure force/torque and the
//! gravity-gradient torque. Forces are returned in LVLH, torques in body
//! axes. The J2 term can run either from its closed formula or as a seeded
//! random injection bounded per axis, which is how it is exercised in the
//! shipped scenarios.

use crate::dynamics::{BodyProperties, ExternalDisturbance, OrbitParams, SpacecraftState};
use crate::frames::{rotate_lvlh_to_body, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum J2Mode {
    /// Closed formula with a fixed inclination and true anomaly advancing at
    /// the orbit rate.
    Formula { inclination: f64 },
    /// Uniform per-axis draw in [-bound, bound], redrawn every evaluation.
    RandomBounded { bound: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceConfig {
    /// Residual air density at the orbit altitude [kg/m³].
    pub air_density: f64,
    /// Solar constant [W/m²].
    pub solar_constant: f64,
    /// Speed of light [m/s].
    pub light_speed: f64,
    /// Unit sun direction in LVLH for the radiation-pressure force.
    pub sun_direction: Vec3,
    /// Center-of-pressure offset from the center of mass, body axes [m].
    pub cp_offset: Vec3,
    pub j2_mode: J2Mode,
    /// Constant torque bias applied per body axis [Nm]; stands in for the
    /// gravity-gradient contribution, which vanishes identically for a
    /// symmetric inertia matrix.
    pub gravity_bias_torque: f64,
    pub enable_drag: bool,
    pub enable_j2: bool,
    pub enable_solar_force: bool,
    pub enable_solar_torque: bool,
    pub enable_gravity_gradient: bool,
    pub enable_gravity_bias: bool,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self {
            air_density: 1e-12,
            solar_constant: 1370.0,
            light_speed: 3e8,
            sun_direction: Vec3::new(1.0, 1.0, 1.0).normalize(),
            cp_offset: Vec3::new(0.6, 0.0, 0.0),
            j2_mode: J2Mode::RandomBounded { bound: 1e-3 },
            gravity_bias_torque: 1e-4,
            enable_drag: true,
            enable_j2: true,
            enable_solar_force: true,
            enable_solar_torque: true,
            enable_gravity_gradient: true,
            enable_gravity_bias: true,
        }
    }
}

/// Disturbance evaluator owning the RNG stream for the random J2 injection.
pub struct DisturbanceModel {
    pub config: DisturbanceConfig,
    rng: ChaCha8Rng,
}

impl DisturbanceModel {
    pub fn new(config: DisturbanceConfig, seed: u64) -> Self {
        Self {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Drag force ½ ρ C_D A V² along -V-bar, with A the cube cross section
    /// and V the orbital speed.
    pub fn drag_force(&self, orbit: &OrbitParams, props: &BodyProperties) -> Vec3 {
        let v = orbit.orbital_speed();
        let magnitude = 0.5
            * self.config.air_density
            * props.drag_coefficient
            * props.cross_section()
            * v
            * v;
        Vec3::new(-magnitude, 0.0, 0.0)
    }

    /// J2 oblateness force. In formula mode the true anomaly advances as
    /// θ = ω0 t; in random mode each axis is drawn uniformly within the
    /// configured bound.
    pub fn j2_force(
        &mut self,
        state: &SpacecraftState,
        orbit: &OrbitParams,
        t: f64,
    ) -> Vec3 {
        match self.config.j2_mode {
            J2Mode::Formula { inclination } => {
                let coeff = state.mass * 3.0 * orbit.j2 * orbit.mu * orbit.earth_radius.powi(2)
                    / (2.0 * orbit.radius.powi(4));
                let theta = orbit.mean_motion * t;
                let (st, ct) = theta.sin_cos();
                let (si, ci) = inclination.sin_cos();
                -coeff
                    * Vec3::new(
                        1.0 - 3.0 * si * si * st,
                        2.0 * si * si * st * ct,
                        2.0 * si * ci * st,
                    )
            }
            J2Mode::RandomBounded { bound } => Vec3::new(
                self.rng.gen_range(-bound..=bound),
                self.rng.gen_range(-bound..=bound),
                self.rng.gen_range(-bound..=bound),
            ),
        }
    }

    /// Solar radiation pressure at the configured distance [N/m²].
    pub fn solar_pressure(&self) -> f64 {
        self.config.solar_constant / self.config.light_speed
    }

    /// Radiation-pressure force (1 + K) p_s A⊥ along the sun direction.
    pub fn solar_force(&self, props: &BodyProperties) -> Vec3 {
        let magnitude =
            (1.0 + props.reflectivity) * self.solar_pressure() * props.cross_section();
        magnitude * self.config.sun_direction
    }

    /// Radiation-pressure torque r_s × F_s about the center of mass.
    pub fn solar_torque(&self, props: &BodyProperties) -> Vec3 {
        self.config.cp_offset.cross(&self.solar_force(props))
    }

    /// Gravity-gradient torque 3 n² r̂ × (J r̂) with r̂ the planet-to-chaser
    /// unit direction expressed in body axes (LVLH +z points at the planet).
    pub fn gravity_gradient_torque(
        &self,
        state: &SpacecraftState,
        orbit: &OrbitParams,
        props: &BodyProperties,
    ) -> Vec3 {
        let n2 = orbit.mu / orbit.radius.powi(3);
        let nadir_lvlh = Vec3::new(0.0, 0.0, -1.0);
        let r_hat = rotate_lvlh_to_body(nadir_lvlh, &state.attitude);
        let j = props.inertia;
        let j_r = Vec3::new(j.x * r_hat.x, j.y * r_hat.y, j.z * r_hat.z);
        3.0 * n2 * r_hat.cross(&j_r)
    }

    /// Sum of the enabled force terms (LVLH) and torque terms (body).
    pub fn total(
        &mut self,
        state: &SpacecraftState,
        orbit: &OrbitParams,
        props: &BodyProperties,
        t: f64,
    ) -> ExternalDisturbance {
        let mut force = Vec3::zeros();
        let mut torque = Vec3::zeros();
        if self.config.enable_drag {
            force += self.drag_force(orbit, props);
        }
        if self.config.enable_j2 {
            force += self.j2_force(state, orbit, t);
        }
        if self.config.enable_solar_force {
            force += self.solar_force(props);
        }
        if self.config.enable_solar_torque {
            torque += self.solar_torque(props);
        }
        if self.config.enable_gravity_gradient {
            torque += self.gravity_gradient_torque(state, orbit, props);
        }
        if self.config.enable_gravity_bias {
            let b = self.config.gravity_bias_torque;
            torque += Vec3::new(b, b, b);
        }
        ExternalDisturbance {
            force_lvlh: force,
            torque_body: torque,
        }
    }
}
