use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{ArwError, Result};
use crate::law::{initial_bits, InitialLaw};
use crate::rng::{unit_f64, Purpose, SeedSpec};

/// Origin crossings of one run: the times at which particles first entered
/// `[0, inf)` from the left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub crossing_times: Vec<f64>,
    pub horizon: f64,
    /// Every `-1 -> 0` move, including re-entries after backtracking.
    pub directed_crossings: u64,
    pub events: u64,
    pub exited_left: u64,
    pub exited_right: u64,
    pub frozen: u64,
    /// Particle ids in crossing order (only with `track_ids`).
    pub crossing_ids: Option<Vec<u32>>,
    pub warnings: Vec<String>,
}

impl FlowTrace {
    /// `C(t) = #{t_i <= t}`.
    pub fn count_at(&self, t: f64) -> u64 {
        self.crossing_times.partition_point(|&s| s <= t) as u64
    }

    pub fn total(&self) -> u64 {
        self.crossing_times.len() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Stop moving particles that cannot influence `C` before the horizon:
    /// those left of the light cone `-(v (T-t) + 8 sqrt(T-t) + 16)` and
    /// those far right of the origin, where backtracking has probability
    /// below `e^-40`.
    pub freeze: bool,
    pub track_ids: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            freeze: true,
            track_ids: false,
        }
    }
}

/// Default window `[-W, R]` for horizon `T`: `W = 3 v T + 10 sqrt(v T)`,
/// `R = v T`.
pub fn default_window(v: f64, horizon: f64) -> (i64, i64) {
    let vt = v * horizon;
    (
        (3.0 * vt + 10.0 * vt.sqrt()).ceil() as i64,
        vt.ceil().max(1.0) as i64,
    )
}

/// Distance left of the origin beyond which a particle cannot reach it in
/// the remaining time `tau` except with negligible probability.
#[inline]
pub fn light_cone(v: f64, tau: f64) -> f64 {
    v * tau + 8.0 * tau.sqrt() + 16.0
}

fn right_reach(p: f64) -> i64 {
    if p >= 1.0 {
        return 1;
    }
    (40.0 / (p / (1.0 - p)).ln()).ceil() as i64 + 16
}

#[derive(Clone, Copy)]
struct Token {
    pos: i64,
    id: u32,
    visited: bool,
}

/// Biased one-dimensional particle-hole model on `[-w, r]`: each unsettled
/// particle jumps at rate 1, right with probability `p`, and settles on the
/// first site whose hole is unfilled.
pub fn measure_flow(
    p: f64,
    law: &InitialLaw,
    w: i64,
    r: i64,
    horizon: f64,
    seed: &SeedSpec,
    opts: FlowOptions,
) -> Result<FlowTrace> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(ArwError::Precondition(format!("requires p > 1/2, got {p}")));
    }
    if w < 1 || r < 0 {
        return Err(ArwError::InvalidParameter(
            "window must contain -1 and 0".into(),
        ));
    }
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(ArwError::InvalidParameter("horizon must be > 0".into()));
    }
    let len = (w + r + 1) as usize;
    if let InitialLaw::Deterministic { counts } = law {
        if counts.len() != len {
            return Err(ArwError::InvalidDistribution(format!(
                "{} deterministic counts for {len} sites",
                counts.len()
            )));
        }
    }
    let v = 2.0 * p - 1.0;
    let sampler = law.sampler()?;
    let mut filled = vec![false; len];
    let mut tokens: Vec<Token> = Vec::new();
    let mut next_id = 0u32;
    for (i, hole) in filled.iter_mut().enumerate() {
        let x = i as i64 - w;
        let k = sampler.sample(initial_bits(seed, &[x]), i);
        if k > 0 {
            *hole = true;
            for _ in 1..k {
                tokens.push(Token {
                    pos: x,
                    id: next_id,
                    visited: x >= 0,
                });
                next_id += 1;
            }
        }
    }

    let mut warnings = Vec::new();
    if (w as f64) < light_cone(v, horizon) {
        warnings.push(format!(
            "window too small: particles left of -{w} can reach the origin by time {horizon}"
        ));
    }
    let reach = right_reach(p);
    let mut rng = seed.rng(Purpose::Flow);
    let mut t = 0.0f64;
    let mut trace = FlowTrace {
        crossing_times: Vec::new(),
        horizon,
        directed_crossings: 0,
        events: 0,
        exited_left: 0,
        exited_right: 0,
        frozen: 0,
        crossing_ids: opts.track_ids.then(Vec::new),
        warnings: Vec::new(),
    };
    while !tokens.is_empty() {
        let e: f64 = Exp1.sample(&mut rng);
        t += e / tokens.len() as f64;
        if t > horizon {
            break;
        }
        let j = rng.random_range(0..tokens.len());
        let tok = tokens[j];
        if opts.freeze && ((tok.pos as f64) < -light_cone(v, horizon - t) || tok.pos > reach) {
            tokens.swap_remove(j);
            trace.frozen += 1;
            continue;
        }
        trace.events += 1;
        let right = p >= 1.0 || unit_f64(rng.random()) < p;
        let to = if right { tok.pos + 1 } else { tok.pos - 1 };
        if to < -w {
            trace.exited_left += 1;
            tokens.swap_remove(j);
            continue;
        }
        if to > r {
            trace.exited_right += 1;
            tokens.swap_remove(j);
            continue;
        }
        let mut visited = tok.visited;
        if to == 0 && right {
            trace.directed_crossings += 1;
            if !visited {
                visited = true;
                trace.crossing_times.push(t);
                if let Some(ids) = trace.crossing_ids.as_mut() {
                    ids.push(tok.id);
                }
            }
        }
        let cell = (to + w) as usize;
        if !filled[cell] {
            filled[cell] = true;
            tokens.swap_remove(j);
        } else {
            tokens[j] = Token {
                pos: to,
                id: tok.id,
                visited,
            };
        }
    }
    if trace.exited_left > 0 {
        warnings.push(format!(
            "{} unsettled particles reached the left end -{w}",
            trace.exited_left
        ));
    }
    trace.warnings = warnings;
    Ok(trace)
}
