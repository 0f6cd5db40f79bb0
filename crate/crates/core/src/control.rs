//! Sliding-mode controllers. Position control comes in two flavors: a
//! simplex-based law that fires exactly one thruster pair chosen from a
//! moving cone partition of the sliding output space, and a component-wise
//! bang-bang law. Attitude control is a per-axis super-twisting law driving
//! the reaction wheels.

use crate::frames::{rotate_body_to_lvlh, Mat3, Quaternion, Vec3};
use thiserror::Error;

/// Cone-membership tolerance for the simplex decomposition.
pub const EPS_LAMBDA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("degenerate simplex: spanning directions are singular for cone {cone}")]
    DegenerateSimplex { cone: usize },
    #[error("invalid simplex configuration: {0}")]
    InvalidSimplex(String),
    #[error("no cone accepts the sliding output ({0}, {1}, {2})")]
    ConeNotFound(f64, f64, f64),
}

/// Sliding output σ = c_x (v - v_des).
pub fn sliding_output(velocity: Vec3, desired: Vec3, c_x: f64) -> Vec3 {
    c_x * (velocity - desired)
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Four body-frame thrust direction versors forming a simplex (their strictly
/// positive convex combination is the origin), with the pair thrust ratings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexConfig {
    pub directions: [Vec3; 4],
    /// Max thrust of each pair member [N]; a pair delivers 2 T_max.
    pub max_thrusts: [f64; 4],
    /// Simplex coefficients μ_i > 0 with Σ μ_i = 1 and Σ μ_i d_i = 0.
    pub weights: [f64; 4],
}

impl SimplexConfig {
    /// Regular tetrahedral simplex with equal weights, corner-aligned with
    /// the body axes.
    pub fn regular_tetrahedron(max_thrust: f64) -> Self {
        let s = 3.0_f64.sqrt().recip();
        Self {
            directions: [
                Vec3::new(s, s, s),
                Vec3::new(s, -s, -s),
                Vec3::new(-s, s, -s),
                Vec3::new(-s, -s, s),
            ],
            max_thrusts: [max_thrust; 4],
            weights: [0.25; 4],
        }
    }

    /// Regular tetrahedron with its apex versor along -x (-V-bar): braking
    /// on the approach axis fires a single pure-axial pair and injects no
    /// cross-track error, while the rear triad covers acceleration and
    /// lateral corrections. Matched to V-bar rendezvous profiles, where the
    /// one hard braking event dominates the final lateral accuracy.
    pub fn vbar_tetrahedron(max_thrust: f64) -> Self {
        let third = 1.0 / 3.0;
        let a = 2.0 * 2.0_f64.sqrt() / 3.0;
        let b = 2.0_f64.sqrt() / 3.0;
        let c = 6.0_f64.sqrt() / 3.0;
        Self {
            directions: [
                Vec3::new(-1.0, 0.0, 0.0),
                Vec3::new(third, a, 0.0),
                Vec3::new(third, -b, c),
                Vec3::new(third, -b, -c),
            ],
            max_thrusts: [max_thrust; 4],
            weights: [0.25; 4],
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let mut combo = Vec3::zeros();
        let mut weight_sum = 0.0;
        for (d, &mu) in self.directions.iter().zip(&self.weights) {
            if mu <= 0.0 {
                return Err(ControlError::InvalidSimplex(format!(
                    "coefficient {mu} is not strictly positive"
                )));
            }
            if (d.norm() - 1.0).abs() > 1e-6 {
                return Err(ControlError::InvalidSimplex(format!(
                    "direction ({}, {}, {}) is not unit length",
                    d.x, d.y, d.z
                )));
            }
            combo += mu * d;
            weight_sum += mu;
        }
        if (weight_sum - 1.0).abs() > 1e-9 {
            return Err(ControlError::InvalidSimplex(format!(
                "coefficients sum to {weight_sum}, expected 1"
            )));
        }
        if combo.norm() > 1e-9 {
            return Err(ControlError::InvalidSimplex(format!(
                "weighted directions sum to ({}, {}, {}), expected the origin",
                combo.x, combo.y, combo.z
            )));
        }
        for t in self.max_thrusts {
            if t <= 0.0 {
                return Err(ControlError::InvalidSimplex(format!(
                    "pair thrust {t} is not positive"
                )));
            }
        }
        Ok(())
    }
}

/// Body simplex expressed in LVLH through the current attitude; rotation
/// preserves the simplex property with the same coefficients.
pub fn rotate_simplex(config: &SimplexConfig, attitude: &Quaternion) -> [Vec3; 4] {
    [
        rotate_body_to_lvlh(config.directions[0], attitude),
        rotate_body_to_lvlh(config.directions[1], attitude),
        rotate_body_to_lvlh(config.directions[2], attitude),
        rotate_body_to_lvlh(config.directions[3], attitude),
    ]
}

/// Index of the cone containing σ: the least h such that σ is a nonnegative
/// combination of the directions excluding d_h. Returns `None` for σ = 0
/// (no thrust). The 3x3 system for each candidate is solved in ascending
/// order so ties on cone edges resolve to the least index.
pub fn cone_select(sigma: Vec3, directions: &[Vec3; 4]) -> Result<Option<usize>, ControlError> {
    if sigma == Vec3::zeros() {
        return Ok(None);
    }
    for h in 0..4 {
        let cols: Vec<Vec3> = (0..4).filter(|&i| i != h).map(|i| directions[i]).collect();
        let m = Mat3::from_columns(&cols);
        let lambda = match m.lu().solve(&sigma) {
            Some(l) => l,
            None => return Err(ControlError::DegenerateSimplex { cone: h }),
        };
        if lambda.iter().all(|&l| l >= -EPS_LAMBDA) {
            return Ok(Some(h));
        }
    }
    Err(ControlError::ConeNotFound(sigma.x, sigma.y, sigma.z))
}

/// Output of one simplex SMC evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexCommand {
    /// Commanded body-frame thrust (2 T_max along the active pair direction).
    pub force_body: Vec3,
    pub active_pair: Option<usize>,
    /// Pair on/off word.
    pub beta: [bool; 4],
}

impl SimplexCommand {
    pub fn off() -> Self {
        Self {
            force_body: Vec3::zeros(),
            active_pair: None,
            beta: [false; 4],
        }
    }
}

/// Simplex sliding-mode law: pick the cone containing σ in the rotated
/// (LVLH) simplex and fire the excluded pair along its body direction.
pub fn simplex_smc(
    sigma: Vec3,
    config: &SimplexConfig,
    attitude: &Quaternion,
) -> Result<SimplexCommand, ControlError> {
    let rotated = rotate_simplex(config, attitude);
    match cone_select(sigma, &rotated)? {
        None => Ok(SimplexCommand::off()),
        Some(h) => {
            let mut beta = [false; 4];
            beta[h] = true;
            Ok(SimplexCommand {
                force_body: 2.0 * config.max_thrusts[h] * config.directions[h],
                active_pair: Some(h),
                beta,
            })
        }
    }
}

/// Component-wise first-order law F = -K0 sgn(σ) with sgn(0) = 0.
pub fn componentwise_smc(sigma: Vec3, k0: f64) -> Vec3 {
    Vec3::new(-k0 * sgn(sigma.x), -k0 * sgn(sigma.y), -k0 * sgn(sigma.z))
}

/// Per-axis super-twisting controller for the reaction wheels. The integral
/// state advances with explicit Euler at the controller period.
#[derive(Debug, Clone, Copy)]
pub struct SuperTwisting {
    pub k1: f64,
    pub k2: f64,
    /// Wheel torque saturation [Nm].
    pub torque_limit: f64,
    integral: Vec3,
}

impl SuperTwisting {
    pub fn new(k1: f64, k2: f64, torque_limit: f64) -> Self {
        Self {
            k1,
            k2,
            torque_limit,
            integral: Vec3::zeros(),
        }
    }

    pub fn integral(&self) -> Vec3 {
        self.integral
    }

    /// u = -k1 |σ|^½ sgn(σ) + w, ẇ = -k2 sgn(σ); output saturated at the
    /// wheel torque limit.
    pub fn update(&mut self, sigma: Vec3, dt: f64) -> Vec3 {
        let mut torque = Vec3::zeros();
        for i in 0..3 {
            let s = sigma[i];
            torque[i] = -self.k1 * s.abs().sqrt() * sgn(s) + self.integral[i];
            self.integral[i] -= self.k2 * sgn(s) * dt;
        }
        torque.map(|u| u.clamp(-self.torque_limit, self.torque_limit))
    }
}

/// Attitude sliding output for an LVLH-aligned hold: σ = ω + c q_err, with
/// q_err the vector part of the shortest error quaternion to the reference.
pub fn attitude_sliding_output(
    attitude: &Quaternion,
    rate_body: Vec3,
    reference: &Quaternion,
    gain: f64,
) -> Vec3 {
    let mut err = reference.conjugate().mul(attitude);
    if err.w < 0.0 {
        err = Quaternion::new(-err.w, -err.x, -err.y, -err.z);
    }
    rate_body + gain * err.vector()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn sliding_output_examples() {
        assert_eq!(
            sliding_output(Vec3::new(1.0, 2.0, 3.0), Vec3::new(1.0, 2.0, 3.0), 1.0),
            Vec3::zeros()
        );
        let sigma = sliding_output(Vec3::new(0.1, 0.0, -0.2), Vec3::zeros(), 1.0);
        assert_eq!(sigma, Vec3::new(0.1, 0.0, -0.2));
        let doubled = sliding_output(Vec3::new(0.1, 0.0, -0.2), Vec3::zeros(), 2.0);
        assert_eq!(doubled, 2.0 * sigma);
    }

    #[test]
    fn tetrahedron_is_a_valid_simplex() {
        let cfg = SimplexConfig::regular_tetrahedron(1.5);
        cfg.validate().unwrap();
        let combo: Vec3 = cfg
            .directions
            .iter()
            .zip(&cfg.weights)
            .map(|(d, &mu)| mu * d)
            .sum();
        assert!(combo.norm() < 1e-15);
    }

    #[test]
    fn vbar_tetrahedron_is_a_valid_axial_simplex() {
        let cfg = SimplexConfig::vbar_tetrahedron(1.5);
        cfg.validate().unwrap();
        // Pure axial brake versor plus a rear triad.
        assert_eq!(cfg.directions[0], Vec3::new(-1.0, 0.0, 0.0));
        for d in &cfg.directions[1..] {
            assert!(d.x > 0.0);
        }
    }

    #[test]
    fn invalid_simplices_are_rejected() {
        let mut cfg = SimplexConfig::regular_tetrahedron(1.5);
        cfg.directions[0] = Vec3::new(1.0, 0.0, 0.0);
        assert!(matches!(
            cfg.validate(),
            Err(ControlError::InvalidSimplex(_))
        ));
        let mut cfg = SimplexConfig::regular_tetrahedron(1.5);
        cfg.weights = [0.5, 0.5, 0.25, -0.25];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rotation_keeps_the_simplex_property() {
        let cfg = SimplexConfig::regular_tetrahedron(1.5);
        let q = Quaternion::from_axis_angle(Vec3::new(0.3, -0.5, 0.8), 1.1);
        let rotated = rotate_simplex(&cfg, &q);
        let combo: Vec3 = rotated
            .iter()
            .zip(&cfg.weights)
            .map(|(d, &mu)| mu * d)
            .sum();
        assert!(combo.norm() < 1e-12);
    }

    #[test]
    fn rotation_with_identity_is_identity() {
        let cfg = SimplexConfig::regular_tetrahedron(1.5);
        let rotated = rotate_simplex(&cfg, &Quaternion::IDENTITY);
        for (r, d) in rotated.iter().zip(&cfg.directions) {
            assert!((r - d).norm() < 1e-15);
        }
    }

    #[test]
    fn pure_yaw_rotates_each_versor_x_into_y() {
        let cfg = SimplexConfig::regular_tetrahedron(1.5);
        let q = Quaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), FRAC_PI_2);
        let rotated = rotate_simplex(&cfg, &q);
        for (r, d) in rotated.iter().zip(&cfg.directions) {
            assert_relative_eq!(r.y, d.x, epsilon = 1e-12);
            assert_relative_eq!(r.x, -d.y, epsilon = 1e-12);
            assert_relative_eq!(r.z, d.z, epsilon = 1e-12);
        }
    }

    #[test]
    fn opposite_of_a_versor_selects_that_cone() {
        let cfg = SimplexConfig::regular_tetrahedron(1.5);
        // -d_0 = d_1 + d_2 + d_3 for the regular tetrahedron, so the first
        // cone (spanned by the other three) contains it.
        let h = cone_select(-cfg.directions[0], &cfg.directions).unwrap();
        assert_eq!(h, Some(0));
    }

    #[test]
    fn versor_on_cone_edges_resolves_to_least_index() {
        let cfg = SimplexConfig::regular_tetrahedron(1.5);
        // d_0 itself spans an edge of every cone that includes it; the scan
        // order makes the answer cone 1, the first that excludes d_1.
        let h = cone_select(cfg.directions[0], &cfg.directions).unwrap();
        assert_eq!(h, Some(1));
        // Deterministic under repetition.
        for _ in 0..10 {
            assert_eq!(
                cone_select(cfg.directions[0], &cfg.directions).unwrap(),
                Some(1)
            );
        }
    }

    #[test]
    fn zero_sigma_returns_the_no_thrust_sentinel() {
        let cfg = SimplexConfig::regular_tetrahedron(1.5);
        assert_eq!(cone_select(Vec3::zeros(), &cfg.directions).unwrap(), None);
    }

    #[test]
    fn coplanar_directions_are_reported_degenerate() {
        let s = 2.0_f64.sqrt().recip();
        let dirs = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(-s, -s, 0.0),
            Vec3::new(s, -s, 0.0),
        ];
        assert!(matches!(
            cone_select(Vec3::new(0.0, 0.0, 1.0), &dirs),
            Err(ControlError::DegenerateSimplex { .. })
        ));
    }

    #[test]
    fn simplex_smc_fires_one_pair_at_double_thrust() {
        let cfg = SimplexConfig::regular_tetrahedron(1.5);
        let cmd = simplex_smc(-cfg.directions[0], &cfg, &Quaternion::IDENTITY).unwrap();
        assert_eq!(cmd.active_pair, Some(0));
        assert_eq!(cmd.beta, [true, false, false, false]);
        assert_relative_eq!(cmd.force_body.norm(), 3.0, epsilon = 1e-12);
        assert_relative_eq!(
            (cmd.force_body - 3.0 * cfg.directions[0]).norm(),
            0.0,
            epsilon = 1e-12
        );
        let off = simplex_smc(Vec3::zeros(), &cfg, &Quaternion::IDENTITY).unwrap();
        assert_eq!(off, SimplexCommand::off());
    }

    #[test]
    fn componentwise_smc_examples() {
        let f = componentwise_smc(Vec3::new(0.1, -0.2, 0.0), 2.0);
        assert_eq!(f, Vec3::new(-2.0, 2.0, 0.0));
        assert_eq!(componentwise_smc(Vec3::zeros(), 2.0), Vec3::zeros());
    }

    #[test]
    fn super_twisting_examples() {
        let mut stw = SuperTwisting::new(1.0, 0.2, 10.0);
        assert_eq!(stw.update(Vec3::zeros(), 0.1), Vec3::zeros());
        let mut stw = SuperTwisting::new(1.0, 0.2, 10.0);
        let u = stw.update(Vec3::new(0.04, 0.0, 0.0), 0.1);
        assert_relative_eq!(u.x, -0.2, epsilon = 1e-12);
        // Integral accumulated against the sign of sigma.
        assert_relative_eq!(stw.integral().x, -0.02, epsilon = 1e-15);
    }

    #[test]
    fn super_twisting_is_continuous_across_zero() {
        let mut stw = SuperTwisting::new(0.4, 0.2, 0.05);
        let eps = 1e-12;
        let up = stw.update(Vec3::new(eps, 0.0, 0.0), 0.0);
        let down = stw.update(Vec3::new(-eps, 0.0, 0.0), 0.0);
        assert!(up.x.abs() < 1e-6 && down.x.abs() < 1e-6);
    }

    #[test]
    fn super_twisting_integral_stays_bounded() {
        let mut stw = SuperTwisting::new(0.05, 1e-3, 0.05);
        let dt = 0.1;
        let steps = 20_000;
        for k in 0..steps {
            // Oscillating sliding variable with a slow bias.
            let s = 1e-3 * ((k as f64) * 0.37).sin() + 1e-5;
            stw.update(Vec3::new(s, -s, 0.5 * s), dt);
        }
        // |dw/dt| <= k2, so the integral cannot outrun k2 * elapsed.
        let bound = 1e-3 * dt * steps as f64 + 1e-12;
        for w in stw.integral().iter() {
            assert!(w.abs() <= bound);
        }
    }

    #[test]
    fn super_twisting_saturates_at_the_wheel_limit() {
        let mut stw = SuperTwisting::new(10.0, 0.2, 0.05);
        let u = stw.update(Vec3::new(4.0, -4.0, 0.0), 0.1);
        assert_eq!(u.x, -0.05);
        assert_eq!(u.y, 0.05);
        assert_eq!(u.z, 0.0);
    }

    #[test]
    fn attitude_sliding_output_is_zero_at_the_reference() {
        let sigma = attitude_sliding_output(
            &Quaternion::IDENTITY,
            Vec3::zeros(),
            &Quaternion::IDENTITY,
            1.0,
        );
        assert_eq!(sigma, Vec3::zeros());
        // The sign flip keeps -q equivalent to q.
        let minus = Quaternion::new(-1.0, 0.0, 0.0, 0.0);
        let sigma = attitude_sliding_output(&minus, Vec3::zeros(), &Quaternion::IDENTITY, 1.0);
        assert_eq!(sigma, Vec3::zeros());
    }

    proptest! {
        #[test]
        fn cones_cover_the_space_and_reconstruct_sigma(
            sx in -10.0f64..10.0, sy in -10.0f64..10.0, sz in -10.0f64..10.0,
            roll in -3.0f64..3.0, pitch in -1.4f64..1.4, yaw in -3.0f64..3.0,
        ) {
            let sigma = Vec3::new(sx, sy, sz);
            prop_assume!(sigma.norm() > 1e-6);
            let cfg = SimplexConfig::regular_tetrahedron(1.5);
            let q = crate::frames::euler_to_quat(
                &crate::frames::EulerAngles321::new(roll, pitch, yaw),
            );
            let dirs = rotate_simplex(&cfg, &q);
            let h = cone_select(sigma, &dirs).unwrap().unwrap();
            let cols: Vec<Vec3> = (0..4).filter(|&i| i != h).map(|i| dirs[i]).collect();
            let m = Mat3::from_columns(&cols);
            let lambda = m.lu().solve(&sigma).unwrap();
            for l in lambda.iter() {
                prop_assert!(*l >= -1e-9);
            }
            let rebuilt: Vec3 = cols.iter().zip(lambda.iter()).map(|(d, &l)| l * d).sum();
            prop_assert!((rebuilt - sigma).norm() < 1e-9 * sigma.norm().max(1.0));
        }

        #[test]
        fn componentwise_output_range(
            sx in -5.0f64..5.0, sy in -5.0f64..5.0, sz in -5.0f64..5.0,
        ) {
            let f = componentwise_smc(Vec3::new(sx, sy, sz), 2.0);
            for c in f.iter() {
                prop_assert!(*c == 0.0 || *c == 2.0 || *c == -2.0);
            }
        }
    }

    /// Reaching test on the nominal double integrator m v̇ = F with the
    /// command held between controller ticks.
    fn simulate_reaching<F: FnMut(Vec3) -> Vec3>(
        mut law: F,
        sigma0: Vec3,
        mass: f64,
        control_dt: f64,
        duration: f64,
    ) -> (f64, Vec<f64>) {
        let c_x = 1.0;
        let v_des = Vec3::new(0.5, -0.2, 0.1);
        let mut v = v_des + sigma0 / c_x;
        let dt = 0.01;
        let ticks = (control_dt / dt).round() as usize;
        let steps = (duration / dt).ceil() as usize;
        let mut force = Vec3::zeros();
        let mut reach_time = f64::INFINITY;
        let mut tick_norms = Vec::new();
        for k in 0..steps {
            if k % ticks == 0 {
                let sigma = sliding_output(v, v_des, c_x);
                tick_norms.push(sigma.norm());
                force = law(sigma);
            }
            v += force / mass * dt;
            let t = (k + 1) as f64 * dt;
            if sliding_output(v, v_des, c_x).norm() < 1e-3 && t < reach_time {
                reach_time = t;
            }
        }
        (reach_time, tick_norms)
    }

    #[test]
    fn componentwise_reaches_and_stays_on_the_surface() {
        let sigma0 = Vec3::new(0.3, -0.3, 0.2).normalize() * 0.5;
        let mass = 600.0;
        let k0 = 2.0;
        // Worst axis takes m |sigma| / K0 seconds; allow 50% margin.
        let bound = mass * 0.5 / k0 * 1.5;
        let (reach, norms) = simulate_reaching(
            |sigma| componentwise_smc(sigma, k0),
            sigma0,
            mass,
            0.1,
            bound + 100.0,
        );
        assert!(reach < bound, "reaching took {reach} s, bound {bound} s");
        // Decrease between ticks until the surface is reached; axes already
        // inside the boundary layer may chatter by one switching amplitude.
        for w in norms.windows(2) {
            if w[0] > 2e-3 {
                assert!(w[1] < w[0] + 1e-4);
            }
        }
        let tail: Vec<f64> = norms
            .iter()
            .copied()
            .skip((reach / 0.1) as usize + 10)
            .collect();
        for n in tail {
            assert!(n < 1e-3, "sigma norm {n} escaped the boundary layer");
        }
    }

    #[test]
    fn simplex_reaches_and_stays_on_the_surface() {
        let cfg = SimplexConfig::regular_tetrahedron(1.5);
        let sigma0 = Vec3::new(0.35, -0.25, 0.22).normalize() * 0.5;
        let mass = 600.0;
        // Pair thrust is 3 N; the worst-case projection onto -sigma for the
        // regular tetrahedron is 1/3 of it, with 3x margin on top.
        let bound = mass * 0.5 / (3.0 / 3.0) * 3.0;
        let (reach, norms) = simulate_reaching(
            |sigma| {
                simplex_smc(sigma, &cfg, &Quaternion::IDENTITY)
                    .unwrap()
                    .force_body
            },
            sigma0,
            mass,
            0.1,
            bound + 200.0,
        );
        assert!(reach < bound, "reaching took {reach} s, bound {bound} s");
        let tail: Vec<f64> = norms
            .iter()
            .copied()
            .skip((reach / 0.1) as usize + 10)
            .collect();
        assert!(!tail.is_empty());
        for n in tail {
            assert!(n < 2e-3, "sigma norm {n} escaped the boundary layer");
        }
    }
}
