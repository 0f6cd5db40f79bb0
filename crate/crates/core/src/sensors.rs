//! LIDAR-style obstacle detection: a range gate around the chaser, sampled
//! obstacle positions and finite-difference velocity estimates. Guidance only
//! ever sees tracks produced here, never the true obstacle states.

use crate::frames::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SensorError {
    #[error("non-monotone sample time {t} (last sample at {last})")]
    NonMonotoneTime { t: f64, last: f64 },
}

/// Scripted motion of a physical obstacle.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionProfile {
    ConstantVelocity { position: Vec3, velocity: Vec3 },
    /// Piecewise-linear interpolation through timestamped waypoints; the
    /// position holds at the first/last waypoint outside the listed span.
    Waypoints(Vec<Waypoint>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub time: f64,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub radius: f64,
    pub profile: MotionProfile,
}

impl Obstacle {
    pub fn position(&self, t: f64) -> Vec3 {
        match &self.profile {
            MotionProfile::ConstantVelocity { position, velocity } => position + t * velocity,
            MotionProfile::Waypoints(points) => {
                match points.windows(2).find(|w| t >= w[0].time && t <= w[1].time) {
                    Some(w) => {
                        let frac = (t - w[0].time) / (w[1].time - w[0].time);
                        w[0].position + frac * (w[1].position - w[0].position)
                    }
                    None if t < points[0].time => points[0].position,
                    None => points[points.len() - 1].position,
                }
            }
        }
    }

    pub fn velocity(&self, t: f64) -> Vec3 {
        match &self.profile {
            MotionProfile::ConstantVelocity { velocity, .. } => *velocity,
            MotionProfile::Waypoints(points) => {
                match points.windows(2).find(|w| t >= w[0].time && t < w[1].time) {
                    Some(w) => (w[1].position - w[0].position) / (w[1].time - w[0].time),
                    None => Vec3::zeros(),
                }
            }
        }
    }

    pub fn state_at(&self, t: f64) -> ObstacleState {
        ObstacleState {
            position: self.position(t),
            velocity: self.velocity(t),
            radius: self.radius,
        }
    }
}

/// True kinematic state of one obstacle at a given instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub radius: f64,
}

/// Sensor-side view of one obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleTrack {
    pub id: usize,
    /// Last sampled position (with measurement noise if enabled).
    pub position: Vec3,
    /// Finite-difference velocity estimate; zero until two samples exist.
    pub velocity: Vec3,
    pub radius: f64,
    pub last_sample_time: f64,
    pub detected: bool,
    pub sample_count: u32,
}

impl ObstacleTrack {
    fn empty(id: usize) -> Self {
        Self {
            id,
            position: Vec3::zeros(),
            velocity: Vec3::zeros(),
            radius: 0.0,
            last_sample_time: 0.0,
            detected: false,
            sample_count: 0,
        }
    }
}

/// Range-gate detection: an obstacle is visible iff its center lies within
/// the sensor range of the chaser.
pub fn detect(chaser: Vec3, obstacles: &[ObstacleState], range: f64) -> Vec<bool> {
    obstacles
        .iter()
        .map(|o| (o.position - chaser).norm() <= range)
        .collect()
}

/// Finite-difference velocity estimate from the previous track sample.
pub fn estimate_velocity(
    track: &ObstacleTrack,
    new_position: Vec3,
    t: f64,
) -> Result<Vec3, SensorError> {
    if track.sample_count == 0 {
        // No previous sample to difference against.
        return Ok(Vec3::zeros());
    }
    if t <= track.last_sample_time {
        return Err(SensorError::NonMonotoneTime {
            t,
            last: track.last_sample_time,
        });
    }
    Ok((new_position - track.position) / (t - track.last_sample_time))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarConfig {
    /// Detection range [m].
    pub range: f64,
    /// Sample period [s].
    pub sample_period: f64,
    /// Half-width of the optional uniform position noise [m]; 0 disables it.
    pub noise_bound: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            range: 300.0,
            sample_period: 1.0,
            noise_bound: 0.0,
        }
    }
}

/// Obstacle detector with per-obstacle track store. `sample` is meant to be
/// called at the sensor period only; tracks are zero-order-held in between.
pub struct Lidar {
    pub config: LidarConfig,
    tracks: Vec<ObstacleTrack>,
    rng: ChaCha8Rng,
}

impl Lidar {
    pub fn new(config: LidarConfig, obstacle_count: usize, seed: u64) -> Self {
        Self {
            config,
            tracks: (0..obstacle_count).map(ObstacleTrack::empty).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Update every track from the true obstacle states at time `t`. A track
    /// that leaves the range gate is dropped and starts from scratch when the
    /// obstacle is reacquired.
    pub fn sample(
        &mut self,
        chaser: Vec3,
        obstacles: &[ObstacleState],
        t: f64,
    ) -> Result<(), SensorError> {
        debug_assert_eq!(obstacles.len(), self.tracks.len());
        let visible = detect(chaser, obstacles, self.config.range);
        for (i, obstacle) in obstacles.iter().enumerate() {
            let track = &mut self.tracks[i];
            if !visible[i] {
                track.detected = false;
                track.sample_count = 0;
                track.velocity = Vec3::zeros();
                continue;
            }
            let mut measured = obstacle.position;
            if self.config.noise_bound > 0.0 {
                let b = self.config.noise_bound;
                measured += Vec3::new(
                    self.rng.gen_range(-b..=b),
                    self.rng.gen_range(-b..=b),
                    self.rng.gen_range(-b..=b),
                );
            }
            track.velocity = estimate_velocity(track, measured, t)?;
            track.position = measured;
            track.radius = obstacle.radius;
            track.last_sample_time = t;
            track.detected = true;
            track.sample_count = track.sample_count.saturating_add(1);
        }
        Ok(())
    }

    pub fn tracks(&self) -> &[ObstacleTrack] {
        &self.tracks
    }

    /// Tracks currently inside the range gate; the only obstacle information
    /// guidance is allowed to consume.
    pub fn detected_tracks(&self) -> impl Iterator<Item = &ObstacleTrack> {
        self.tracks.iter().filter(|t| t.detected)
    }
}
