//! Potential-field guidance. An attractive field pulls toward the goal; each
//! detected obstacle contributes a hyperbolic repulsive field whose influence
//! region grows with the closing speed (dynamic radius), so braking capability
//! is accounted for. The total field direction, taken at the commanded speed,
//! becomes the desired velocity tracked by the position controller.

use crate::frames::Vec3;
use crate::sensors::ObstacleTrack;

/// Distance floor for the repulsive field; inside it the magnitude is held at
/// its floor value (the harness flags the run as a collision long before).
pub const EPS_DIST: f64 = 1.0;

/// Field-strength floor below which the previous command is held instead of
/// normalizing a vanishing vector.
pub const EPS_FIELD: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct ApfGains {
    /// Attractive gain k_a.
    pub k_attractive: f64,
    /// Default repulsive gain k_r applied to obstacles without an override.
    pub k_repulsive: f64,
    /// Default influence distance η0 [m].
    pub influence_distance: f64,
    /// Commanded speed along the field direction [m/s].
    pub max_speed: f64,
    /// Thrust available to the controller u_x [N].
    pub thrust_available: f64,
    /// Thrust bound reduction f reserved for actuator uncertainty [N].
    pub thrust_margin: f64,
}

/// Per-obstacle repulsive parameters, resolved from the scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepulsiveParams {
    pub gain: f64,
    pub influence: f64,
}

/// Desired velocity plus the field decomposition behind it.
#[derive(Debug, Clone, Copy)]
pub struct GuidanceCommand {
    /// Desired LVLH velocity [m/s].
    pub velocity: Vec3,
    /// Attractive force term.
    pub attractive: Vec3,
    /// Sum of the repulsive components along the chaser-obstacle lines.
    pub repulsive_radial: Vec3,
    /// Sum of the repulsive components perpendicular to those lines.
    pub repulsive_steering: Vec3,
    /// Normalized total field direction (zero while the stall guard holds).
    pub direction: Vec3,
}

/// Attractive force k_a (goal - x).
pub fn attractive_force(position: Vec3, goal: Vec3, k_attractive: f64) -> Vec3 {
    k_attractive * (goal - position)
}

/// Worst-case braking acceleration available to the controller,
/// (u_x - f) / (sqrt(2) m).
pub fn braking_accel(thrust_available: f64, thrust_margin: f64, mass: f64) -> f64 {
    (thrust_available - thrust_margin) / (2.0_f64.sqrt() * mass)
}

/// Influence radius enlarged by the stopping distance at the current closing
/// speed: η0 + v_rn² / (2 a_max).
pub fn dynamic_radius(closing_speed: f64, influence: f64, a_max: f64) -> f64 {
    influence + closing_speed * closing_speed / (2.0 * a_max)
}

struct RepulsiveGeometry {
    eta: f64,
    n_co: Vec3,
    v_rel: Vec3,
    closing_speed: f64,
}

fn geometry(position: Vec3, velocity: Vec3, obstacle_pos: Vec3, obstacle_vel: Vec3) -> RepulsiveGeometry {
    let offset = obstacle_pos - position;
    let eta = offset.norm();
    let n_co = if eta > 0.0 { offset / eta } else { Vec3::zeros() };
    let v_rel = velocity - obstacle_vel;
    RepulsiveGeometry {
        eta,
        n_co,
        v_rel,
        closing_speed: v_rel.dot(&n_co),
    }
}

/// Repulsive potential value; nonzero only inside the influence distance and
/// while closing on the obstacle.
pub fn repulsive_potential(
    position: Vec3,
    velocity: Vec3,
    obstacle_pos: Vec3,
    obstacle_vel: Vec3,
    params: &RepulsiveParams,
    a_max: f64,
) -> f64 {
    let g = geometry(position, velocity, obstacle_pos, obstacle_vel);
    if g.eta >= params.influence || g.closing_speed <= 0.0 {
        return 0.0;
    }
    let eta = g.eta.max(EPS_DIST);
    let r_dyn = dynamic_radius(g.closing_speed, params.influence, a_max);
    let gap = 1.0 / eta - 1.0 / r_dyn;
    0.5 * params.gain * gap * gap
}

/// Negative gradient of the repulsive potential with respect to position and
/// velocity, split into the component along the chaser-obstacle line (slows
/// the approach) and the perpendicular remainder (steers around).
pub fn repulsive_force(
    position: Vec3,
    velocity: Vec3,
    track: &ObstacleTrack,
    params: &RepulsiveParams,
    a_max: f64,
) -> (Vec3, Vec3) {
    let g = geometry(position, velocity, track.position, track.velocity);
    if g.eta >= params.influence || g.closing_speed <= 0.0 || g.eta == 0.0 {
        return (Vec3::zeros(), Vec3::zeros());
    }
    let eta = g.eta.max(EPS_DIST);
    let r_dyn = dynamic_radius(g.closing_speed, params.influence, a_max);
    let gap = 1.0 / eta - 1.0 / r_dyn;

    // grad_x(v_rn) = -(v_rel - v_rn n_co) / eta, grad_v(v_rn) = n_co
    let grad_x_vrn = -(g.v_rel - g.closing_speed * g.n_co) / eta;
    let grad_x_rdyn = g.closing_speed / a_max * grad_x_vrn;
    let grad_v_rdyn = g.closing_speed / a_max * g.n_co;
    let grad_x_eta = -g.n_co;

    let grad_x = gap
        * (params.gain / (r_dyn * r_dyn) * grad_x_rdyn
            - params.gain / (eta * eta) * grad_x_eta);
    let grad_v = gap * params.gain / (r_dyn * r_dyn) * grad_v_rdyn;

    let force = -grad_x - grad_v;
    let radial = force.dot(&g.n_co) * g.n_co;
    (radial, force - radial)
}

/// Total field: attractive force plus every repulsive contribution.
pub fn total_field(attractive: Vec3, repulsive: &[(Vec3, Vec3)]) -> Vec3 {
    repulsive
        .iter()
        .fold(attractive, |acc, (radial, steering)| acc + radial + steering)
}

/// Field direction at the commanded speed; holds the previous command when
/// the field magnitude falls under the stall threshold.
pub fn desired_velocity(field: Vec3, max_speed: f64, previous: Vec3) -> Vec3 {
    let norm = field.norm();
    if norm > EPS_FIELD {
        max_speed * field / norm
    } else {
        previous
    }
}

/// Guidance layer evaluated at the guidance rate; owns the stall-guard state.
pub struct Guidance {
    pub gains: ApfGains,
    /// Per-obstacle repulsive parameters indexed by track id.
    pub per_obstacle: Vec<RepulsiveParams>,
    pub goal: Vec3,
    previous_command: Vec3,
}

impl Guidance {
    pub fn new(gains: ApfGains, per_obstacle: Vec<RepulsiveParams>, goal: Vec3) -> Self {
        Self {
            gains,
            per_obstacle,
            goal,
            previous_command: Vec3::zeros(),
        }
    }

    fn params_for(&self, id: usize) -> RepulsiveParams {
        self.per_obstacle.get(id).copied().unwrap_or(RepulsiveParams {
            gain: self.gains.k_repulsive,
            influence: self.gains.influence_distance,
        })
    }

    /// One guidance evaluation over the currently detected tracks.
    pub fn update(
        &mut self,
        position: Vec3,
        velocity: Vec3,
        mass: f64,
        tracks: &[&ObstacleTrack],
    ) -> GuidanceCommand {
        let attractive = attractive_force(position, self.goal, self.gains.k_attractive);
        let a_max = braking_accel(self.gains.thrust_available, self.gains.thrust_margin, mass);
        let mut radial_sum = Vec3::zeros();
        let mut steering_sum = Vec3::zeros();
        let mut contributions = Vec::with_capacity(tracks.len());
        for track in tracks {
            let params = self.params_for(track.id);
            let (radial, steering) = repulsive_force(position, velocity, track, &params, a_max);
            radial_sum += radial;
            steering_sum += steering;
            contributions.push((radial, steering));
        }
        let field = total_field(attractive, &contributions);
        let velocity_cmd = desired_velocity(field, self.gains.max_speed, self.previous_command);
        self.previous_command = velocity_cmd;
        let norm = field.norm();
        GuidanceCommand {
            velocity: velocity_cmd,
            attractive,
            repulsive_radial: radial_sum,
            repulsive_steering: steering_sum,
            direction: if norm > EPS_FIELD { field / norm } else { Vec3::zeros() },
        }
    }
}
