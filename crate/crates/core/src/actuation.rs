//! Thruster banks and reaction wheels. Maps controller outputs to physical
//! on/off firings, aggregates net body force and torque (including the torque
//! produced by thruster errors) and exposes the per-tick on/off word for
//! telemetry. Two layouts exist: 8 thrusters in 4 opposed pairs for the
//! simplex law, and 12 axis-aligned thrusters for the component-wise law.
//! The same total thrust is deliverable by both.

use crate::control::SimplexConfig;
use crate::frames::Vec3;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ActuationError {
    #[error("invalid thruster pair index {0}")]
    InvalidPair(usize),
    #[error("command component {value} not representable by on/off thrusters (expected 0 or ±{expected})")]
    UnrepresentableCommand { value: f64, expected: f64 },
    #[error("command issued to the wrong layout: {0}")]
    WrongLayout(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Simplex8,
    Componentwise12,
}

/// One mono-directional thruster: unit firing direction and mounting point in
/// body axes, plus its thrust rating.
#[derive(Debug, Clone, Copy)]
pub struct Thruster {
    pub direction: Vec3,
    pub position: Vec3,
    pub max_thrust: f64,
}

/// Systematic per-run thruster errors: a constant magnitude reduction and a
/// constant direction inside a small misalignment cone, drawn once per run.
#[derive(Debug, Clone)]
pub struct ThrusterErrors {
    /// Realized thrust fraction (1 - reduction) per thruster.
    pub scale: Vec<f64>,
    /// Realized unit firing direction per thruster.
    pub direction: Vec<Vec3>,
}

/// Bounds for the error draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModel {
    /// Max magnitude reduction fraction; draws are uniform in [0, max].
    pub magnitude_fraction_max: f64,
    /// Misalignment cone half-angle [rad].
    pub misalignment_half_angle: f64,
}

#[derive(Debug, Clone)]
pub struct ThrusterBank {
    pub layout: Layout,
    pub thrusters: Vec<Thruster>,
    pub errors: Option<ThrusterErrors>,
}

fn orthonormal_basis(d: Vec3) -> (Vec3, Vec3) {
    let helper = if d.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let e1 = d.cross(&helper).normalize();
    (e1, d.cross(&e1))
}

impl ThrusterBank {
    /// Eight thrusters in four opposed pairs: member i and i+4 share the pair
    /// direction and rating and sit at mirrored mounting points, so nominal
    /// pair torque cancels exactly.
    pub fn simplex8(config: &SimplexConfig, mount_arm: f64) -> Self {
        let mount_axes = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 0.0),
        ];
        let mut thrusters = Vec::with_capacity(8);
        for sign in [1.0, -1.0] {
            for (pair, axis) in mount_axes.iter().enumerate() {
                thrusters.push(Thruster {
                    direction: config.directions[pair],
                    position: sign * mount_arm * axis,
                    max_thrust: config.max_thrusts[pair],
                });
            }
        }
        Self {
            layout: Layout::Simplex8,
            thrusters,
            errors: None,
        }
    }

    /// Twelve axis-aligned thrusters, two per axis per sign, mounted at
    /// mirrored points so each same-sign group has zero nominal torque.
    /// Index layout: axis * 4 + (0,1 for +, 2,3 for -).
    pub fn componentwise12(max_thrust: f64, mount_arm: f64) -> Self {
        let axes = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let mut thrusters = Vec::with_capacity(12);
        for axis in 0..3 {
            let offset = axes[(axis + 1) % 3] * mount_arm;
            for sign in [1.0, -1.0] {
                for member in [1.0, -1.0] {
                    thrusters.push(Thruster {
                        direction: sign * axes[axis],
                        position: member * offset,
                        max_thrust,
                    });
                }
            }
        }
        Self {
            layout: Layout::Componentwise12,
            thrusters,
            errors: None,
        }
    }

    /// Sum of the thrust ratings across the bank [N].
    pub fn total_thrust(&self) -> f64 {
        self.thrusters.iter().map(|t| t.max_thrust).sum()
    }

    /// Draw the per-run systematic errors: magnitude fraction uniform in
    /// [0, max] and a fixed direction inside the misalignment cone.
    pub fn draw_errors<R: Rng>(&mut self, model: &ErrorModel, rng: &mut R) {
        let mut scale = Vec::with_capacity(self.thrusters.len());
        let mut direction = Vec::with_capacity(self.thrusters.len());
        for t in &self.thrusters {
            scale.push(1.0 - rng.gen_range(0.0..=model.magnitude_fraction_max));
            let tilt = rng.gen_range(0.0..=model.misalignment_half_angle);
            let azimuth = rng.gen_range(0.0..std::f64::consts::TAU);
            let (e1, e2) = orthonormal_basis(t.direction);
            direction.push(
                t.direction * tilt.cos() + (e1 * azimuth.cos() + e2 * azimuth.sin()) * tilt.sin(),
            );
        }
        self.errors = Some(ThrusterErrors { scale, direction });
    }

    /// Realized thrust vector and application point of one thruster.
    fn firing(&self, index: usize) -> (Vec3, Vec3) {
        let t = &self.thrusters[index];
        match &self.errors {
            Some(e) => (t.max_thrust * e.scale[index] * e.direction[index], t.position),
            None => (t.max_thrust * t.direction, t.position),
        }
    }

    /// Net body loads for a set of firing thrusters.
    fn aggregate(&self, firing: impl Iterator<Item = usize>) -> BankOutput {
        let mut out = BankOutput::off();
        for index in firing {
            let (f, p) = self.firing(index);
            out.force_body += f;
            out.torque_body += p.cross(&f);
            out.thrust_sum += f.norm();
            out.word |= 1 << index;
        }
        out
    }
}

/// Aggregate result of one actuation command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankOutput {
    /// Net thrust vector in body axes [N].
    pub force_body: Vec3,
    /// Net torque about the center of mass from thruster geometry and
    /// errors [Nm]; zero for nominal banks.
    pub torque_body: Vec3,
    /// Sum of the individual thruster magnitudes [N]; the fuel-relevant
    /// thrust level, equal to the component sum of `force_body` for the
    /// axis-aligned bank but not for canted pair directions.
    pub thrust_sum: f64,
    /// Per-thruster on/off bitmask.
    pub word: u16,
}

impl BankOutput {
    pub fn off() -> Self {
        Self {
            force_body: Vec3::zeros(),
            torque_body: Vec3::zeros(),
            thrust_sum: 0.0,
            word: 0,
        }
    }
}

/// Fire both members of the selected pair (or none). Nominal result is
/// 2 T_max along the pair direction with zero torque; enabled errors bend
/// both.
pub fn command_simplex(
    bank: &ThrusterBank,
    active_pair: Option<usize>,
) -> Result<BankOutput, ActuationError> {
    if bank.layout != Layout::Simplex8 {
        return Err(ActuationError::WrongLayout("expected the simplex-8 bank"));
    }
    match active_pair {
        None => Ok(BankOutput::off()),
        Some(h) if h < 4 => Ok(bank.aggregate([h, h + 4].into_iter())),
        Some(h) => Err(ActuationError::InvalidPair(h)),
    }
}

/// Fire the two thrusters matching the sign of each nonzero command
/// component. Components must be 0 or ±2 T_max, the only magnitudes the
/// on/off hardware can realize.
pub fn command_componentwise(
    bank: &ThrusterBank,
    command: Vec3,
) -> Result<BankOutput, ActuationError> {
    if bank.layout != Layout::Componentwise12 {
        return Err(ActuationError::WrongLayout(
            "expected the componentwise-12 bank",
        ));
    }
    let per_axis = 2.0 * bank.thrusters[0].max_thrust;
    let mut firing = Vec::with_capacity(6);
    for axis in 0..3 {
        let c = command[axis];
        if c == 0.0 {
            continue;
        }
        if (c.abs() - per_axis).abs() > 1e-9 {
            return Err(ActuationError::UnrepresentableCommand {
                value: c,
                expected: per_axis,
            });
        }
        let base = axis * 4 + if c > 0.0 { 0 } else { 2 };
        firing.push(base);
        firing.push(base + 1);
    }
    Ok(bank.aggregate(firing.into_iter()))
}

/// Component-wise reaction-wheel torque saturation.
pub fn wheel_torque(command: Vec3, limit: f64) -> Vec3 {
    command.map(|c| c.clamp(-limit, limit))
}
