//! UE mobility: random waypoint and Gauss-Markov.
//!
//! Both models are pure state transitions driven by a caller-owned RNG.
//! Random waypoint uses zero pause time and a fixed speed. Initial RWP
//! positions are drawn from the model's stationary distribution so the
//! center bias is present from t = 0 rather than only after a long burn-in.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{Area, Point};

pub const UE_HEIGHT_M: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MobilityModel {
    Rwp,
    GaussMarkov,
    /// UEs never move. Used for calibration and unit scenarios.
    Static,
}

impl MobilityModel {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rwp" | "random-waypoint" => Some(Self::Rwp),
            "gauss-markov" | "gm" => Some(Self::GaussMarkov),
            "static" => Some(Self::Static),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Rwp => "rwp",
            Self::GaussMarkov => "gauss-markov",
            Self::Static => "static",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussMarkovParams {
    pub mean_speed: f64,
    /// Memory parameter in [0, 1]: 0 is memoryless, 1 is constant velocity.
    pub alpha: f64,
    pub speed_std: f64,
    /// Standard deviation of the direction noise, radians.
    pub dir_std: f64,
    /// Seconds between velocity updates.
    pub update_interval: f64,
}

impl GaussMarkovParams {
    pub fn with_mean_speed(mean_speed: f64) -> Self {
        Self {
            mean_speed,
            alpha: 0.85,
            speed_std: 0.3 * mean_speed,
            dir_std: 0.3,
            update_interval: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MobilityMemory {
    Static,
    Rwp {
        waypoint: Point,
    },
    GaussMarkov {
        speed: f64,
        direction: f64,
        mean_direction: f64,
        until_update: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityState {
    pub ue: usize,
    pub position: Point,
    pub height: f64,
    /// Velocity in m/s.
    pub velocity: (f64, f64),
    pub memory: MobilityMemory,
}

fn uniform_point<R: Rng + ?Sized>(area: &Area, rng: &mut R) -> Point {
    Point::new(
        rng.random::<f64>() * area.width,
        rng.random::<f64>() * area.height,
    )
}

impl MobilityState {
    pub fn stationary(ue: usize, position: Point) -> Self {
        Self {
            ue,
            position,
            height: UE_HEIGHT_M,
            velocity: (0.0, 0.0),
            memory: MobilityMemory::Static,
        }
    }

    /// Samples a random-waypoint UE from the stationary distribution: a leg
    /// is chosen with probability proportional to its length and the UE is
    /// placed uniformly along it, heading for the leg's end.
    pub fn rwp_initial<R: Rng + ?Sized>(ue: usize, area: &Area, speed: f64, rng: &mut R) -> Self {
        let diag = area.width.hypot(area.height);
        let (from, to) = loop {
            let a = uniform_point(area, rng);
            let b = uniform_point(area, rng);
            if rng.random::<f64>() * diag <= a.distance(b) {
                break (a, b);
            }
        };
        let u: f64 = rng.random();
        let position = Point::new(from.x + u * (to.x - from.x), from.y + u * (to.y - from.y));
        let mut state = Self {
            ue,
            position,
            height: UE_HEIGHT_M,
            velocity: (0.0, 0.0),
            memory: MobilityMemory::Rwp { waypoint: to },
        };
        state.velocity = heading(position, to, speed);
        state
    }

    /// Uniform position and direction, speed at the mean.
    pub fn gauss_markov_initial<R: Rng + ?Sized>(
        ue: usize,
        area: &Area,
        params: &GaussMarkovParams,
        rng: &mut R,
    ) -> Self {
        let position = uniform_point(area, rng);
        let direction = rng.random::<f64>() * TAU;
        let mean_direction = rng.random::<f64>() * TAU;
        let speed = params.mean_speed;
        Self {
            ue,
            position,
            height: UE_HEIGHT_M,
            velocity: (speed * direction.cos(), speed * direction.sin()),
            memory: MobilityMemory::GaussMarkov {
                speed,
                direction,
                mean_direction,
                until_update: params.update_interval,
            },
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.0.hypot(self.velocity.1)
    }
}

fn heading(from: Point, to: Point, speed: f64) -> (f64, f64) {
    let d = from.distance(to);
    if d <= 0.0 {
        (0.0, 0.0)
    } else {
        (speed * (to.x - from.x) / d, speed * (to.y - from.y) / d)
    }
}

/// Advances a random-waypoint UE by `dt` seconds at `speed`. Arriving at a
/// waypoint draws the next one uniformly in the area and continues with the
/// remaining path length.
pub fn rwp_step<R: Rng + ?Sized>(
    state: &MobilityState,
    dt: f64,
    speed: f64,
    area: &Area,
    rng: &mut R,
) -> MobilityState {
    let MobilityMemory::Rwp { mut waypoint } = state.memory else {
        return *state;
    };
    let mut pos = state.position;
    let mut remaining = speed * dt;
    // Bounded: each pass either finishes the step or consumes a whole leg.
    for _ in 0..64 {
        let to_go = pos.distance(waypoint);
        if to_go > remaining {
            let f = remaining / to_go;
            pos = Point::new(pos.x + f * (waypoint.x - pos.x), pos.y + f * (waypoint.y - pos.y));
            break;
        }
        remaining -= to_go;
        pos = waypoint;
        waypoint = uniform_point(area, rng);
        if remaining <= 0.0 {
            break;
        }
    }
    MobilityState {
        position: pos,
        velocity: heading(pos, waypoint, speed),
        memory: MobilityMemory::Rwp { waypoint },
        ..*state
    }
}

/// Folds `x` back into `[lo, hi]`; returns whether an odd number of
/// reflections occurred.
fn reflect(x: f64, lo: f64, hi: f64) -> (f64, bool) {
    let span = hi - lo;
    if span <= 0.0 {
        return (lo, false);
    }
    let mut t = (x - lo).rem_euclid(2.0 * span);
    let flipped_cycles = ((x - lo) / span).floor() as i64;
    if t > span {
        t = 2.0 * span - t;
    }
    (lo + t, flipped_cycles.rem_euclid(2) == 1)
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Advances a Gauss-Markov UE. Position moves with the current velocity and
/// reflects at the area boundary; every `update_interval` the speed and
/// direction follow `s' = a*s + (1-a)*mean + sqrt(1-a^2)*noise`.
pub fn gauss_markov_step<R: Rng + ?Sized>(
    state: &MobilityState,
    dt: f64,
    params: &GaussMarkovParams,
    area: &Area,
    rng: &mut R,
) -> MobilityState {
    let MobilityMemory::GaussMarkov {
        mut speed,
        mut direction,
        mut mean_direction,
        mut until_update,
    } = state.memory
    else {
        return *state;
    };

    let raw = Point::new(
        state.position.x + speed * direction.cos() * dt,
        state.position.y + speed * direction.sin() * dt,
    );
    let (x, flip_x) = reflect(raw.x, 0.0, area.width);
    let (y, flip_y) = reflect(raw.y, 0.0, area.height);
    if flip_x {
        direction = PI - direction;
        mean_direction = PI - mean_direction;
    }
    if flip_y {
        direction = -direction;
        mean_direction = -mean_direction;
    }
    direction = wrap_angle(direction);
    mean_direction = wrap_angle(mean_direction);

    until_update -= dt;
    if until_update <= 1e-12 {
        let a = params.alpha.clamp(0.0, 1.0);
        let k = (1.0 - a * a).sqrt();
        let speed_noise = gaussian(params.speed_std, rng);
        let dir_noise = gaussian(params.dir_std, rng);
        speed = (a * speed + (1.0 - a) * params.mean_speed + k * speed_noise).max(0.0);
        // Blend directions on the shortest arc around the mean.
        let offset = wrap_angle(direction - mean_direction);
        direction = wrap_angle(mean_direction + a * offset + k * dir_noise);
        until_update += params.update_interval.max(dt);
    }

    MobilityState {
        position: Point::new(x, y),
        velocity: (speed * direction.cos(), speed * direction.sin()),
        memory: MobilityMemory::GaussMarkov {
            speed,
            direction,
            mean_direction,
            until_update,
        },
        ..*state
    }
}

fn gaussian<R: Rng + ?Sized>(std: f64, rng: &mut R) -> f64 {
    if std > 0.0 {
        Normal::new(0.0, std).expect("positive std").sample(rng)
    } else {
        0.0
    }
}
