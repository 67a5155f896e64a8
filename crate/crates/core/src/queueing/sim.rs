//! Discrete-event check of the mean-delay formula: FIFO single server,
//! Poisson arrivals, geometric number of packet slots per service.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{packet_time, pk_mean_delay, LinkRate, TrafficQos};
use crate::error::{Error, Result};
use crate::phy::Efficiency;
use crate::scalar::Scalar;

pub const MIN_PACKETS: usize = 10_000;

const BATCHES: usize = 50;
const ARRIVAL_STREAM: u64 = 0;
const SERVICE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub packets: usize,
    pub seed: u64,
    /// ACK/NACK turnaround added to every slot (s). Not part of the analytic model.
    pub ack_turnaround: f64,
}

impl SimConfig {
    pub fn new(packets: usize, seed: u64) -> Self {
        Self { packets, seed, ack_turnaround: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimReport {
    pub packets: usize,
    pub mean_delay: f64,
    /// Batch-means standard error of `mean_delay`.
    pub std_error: f64,
    pub mean_service: f64,
    pub service_std_error: f64,
    /// Pollaczek-Khinchine prediction for the same inputs.
    pub analytic_delay: f64,
    pub analytic_service: f64,
}

impl SimReport {
    /// Distance between simulated and analytic mean delay, in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.mean_delay - self.analytic_delay) / self.std_error
    }
}

#[derive(Serialize)]
struct TraceRow {
    packet_id: usize,
    arrival_time: f64,
    start_service: f64,
    departure: f64,
    delay: f64,
}

/// Unit-interval draw excluding zero, so `ln` is finite.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

fn batch_means_se(values: &[f64]) -> f64 {
    let size = values.len() / BATCHES;
    let means: Vec<f64> =
        values.chunks_exact(size).take(BATCHES).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let grand = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    (var / BATCHES as f64).sqrt()
}

/// Simulates `cfg.packets` packets and reports the sample-mean delay with its
/// standard error. With `lambda = 0` every packet finds the server idle.
/// Optionally writes a per-packet CSV trace.
pub fn simulate_queue<T: Scalar>(
    link: &LinkRate<T>,
    traffic: &TrafficQos<T>,
    gamma: T,
    cfg: &SimConfig,
    trace: Option<&mut dyn Write>,
) -> Result<SimReport> {
    if cfg.packets < MIN_PACKETS {
        return Err(Error::Domain(format!(
            "simulation horizon must be at least {MIN_PACKETS} packets, got {}",
            cfg.packets
        )));
    }
    let success = Efficiency::new(&link.scheme, traffic.pkt).value(gamma)?;
    let tau = packet_time(link, traffic.pkt);
    let analytic = pk_mean_delay(tau, traffic.lambda, success)?;

    let f = success.to_f64_lossy();
    let lambda = traffic.lambda.to_f64_lossy();
    let slot = tau.to_f64_lossy() + cfg.ack_turnaround;
    let ln_fail = (-f).ln_1p();

    let mut arrivals = ChaCha8Rng::seed_from_u64(cfg.seed);
    arrivals.set_stream(ARRIVAL_STREAM);
    let mut services = ChaCha8Rng::seed_from_u64(cfg.seed);
    services.set_stream(SERVICE_STREAM);

    let mut writer = trace.map(csv::Writer::from_writer);
    let mut delays = Vec::with_capacity(cfg.packets);
    let mut service_times = Vec::with_capacity(cfg.packets);
    let (mut clock, mut free_at) = (0.0f64, 0.0f64);
    for id in 0..cfg.packets {
        let arrival = if lambda > 0.0 {
            clock += -open_unit(&mut arrivals).ln() / lambda;
            clock
        } else {
            free_at
        };
        // P{M > m} = (1 - f)^m
        let transmissions =
            if ln_fail == f64::NEG_INFINITY { 1.0 } else { 1.0 + (open_unit(&mut services).ln() / ln_fail).floor() };
        let service = transmissions * slot;
        let start = arrival.max(free_at);
        free_at = start + service;
        let delay = free_at - arrival;
        if let Some(w) = writer.as_mut() {
            w.serialize(TraceRow {
                packet_id: id,
                arrival_time: arrival,
                start_service: start,
                departure: free_at,
                delay,
            })?;
        }
        delays.push(delay);
        service_times.push(service);
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }

    let n = cfg.packets as f64;
    Ok(SimReport {
        packets: cfg.packets,
        mean_delay: delays.iter().sum::<f64>() / n,
        std_error: batch_means_se(&delays),
        mean_service: service_times.iter().sum::<f64>() / n,
        service_std_error: batch_means_se(&service_times),
        analytic_delay: analytic.to_f64_lossy(),
        analytic_service: slot / f,
    })
}
