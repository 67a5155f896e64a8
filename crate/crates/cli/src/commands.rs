use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qamgame::experiments::{self, DelaySweep, Spacing, SweepSpec};
use qamgame::game::{nash_equilibrium_with, verify_equilibrium, NetworkScene, RatePolicy, Regime, Verdict};
use qamgame::phy::{efficiency, fit_coding_gain, GainEntry, ModScheme, PacketConfig, TcmConfig};
use qamgame::queueing::{packet_time, simulate_queue, LinkRate, SimConfig, TrafficQos};
use qamgame::scalar::from_db;
use qamgame::{EquilibriumReport, Error};

use crate::output::{fixed, full, opt, trimmed, Sink};
use crate::PhyArgs;

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_SOLVER: u8 = 4;
/// A completed check that came out negative.
const EXIT_CHECK_FAILED: u8 = 1;

pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::QosInfeasible { .. } | Error::InfeasibleTarget { .. })
        | Some(Error::DelayUnsatisfiable { .. } | Error::Unstable { .. }) => EXIT_INFEASIBLE,
        Some(Error::Solver(_) | Error::Fit(_)) => EXIT_SOLVER,
        _ => EXIT_CONFIG,
    }
}

fn packet(bits: u32) -> Result<PacketConfig> {
    Ok(PacketConfig::new(bits)?)
}

fn gain_table(path: Option<&Path>) -> Result<TcmConfig<f64>> {
    match path {
        Some(p) => TcmConfig::load(p).with_context(|| format!("loading gain file {}", p.display())),
        None => Ok(TcmConfig::default_trellis()),
    }
}

fn coding(phy: &PhyArgs) -> Result<Option<TcmConfig<f64>>> {
    if !phy.coded {
        if phy.gain_file.is_some() {
            bail!(Error::Config("--gain-file needs --coded".into()));
        }
        return Ok(None);
    }
    gain_table(phy.gain_file.as_deref()).map(Some)
}

pub fn tables(sink: &Sink, phy: &PhyArgs) -> Result<ExitCode> {
    let coding = coding(phy)?;
    let rows = experiments::optimum_table(packet(phy.packet_bits)?, coding.as_ref())?;
    let mut header = vec!["b", "alpha", "beta", "gamma_star_db", "f_star", "b_over_gamma_star_db", "utility_factor"];
    if coding.is_some() {
        header.extend(["coded_gamma_star_db", "coded_f_star", "coded_utility_factor"]);
    }
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![
                r.bits.to_string(),
                trimmed(r.alpha, 4),
                trimmed(r.beta, 4),
                fixed(r.gamma_star_db, 1),
                fixed(r.f_star, 3),
                fixed(r.bits_over_gamma_db, 1),
                fixed(r.utility_factor, 4),
            ];
            if let Some(c) = r.coded {
                v.extend([fixed(c.gamma_star_db, 1), fixed(c.f_star, 3), fixed(c.utility_factor, 4)]);
            }
            v
        })
        .collect();
    sink.emit(&rows, &header, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Optimum => "optimum",
        Regime::RateLimited => "rate_limited",
    }
}

pub fn sweep_delay(
    sink: &Sink,
    phy: &PhyArgs,
    points: usize,
    (min, max): (f64, f64),
    load: f64,
    b_max: u32,
    linear: bool,
) -> Result<ExitCode> {
    let coding = coding(phy)?;
    let spacing = if linear { Spacing::Linear } else { Spacing::Log };
    let cfg =
        DelaySweep { pkt: packet(phy.packet_bits)?, load, b_max, delays: SweepSpec::new(min, max, points, spacing)? };
    let rows = experiments::delay_sweep(&cfg, coding.as_ref())?;
    let mut header = vec![
        "norm_delay",
        "feasible",
        "b",
        "regime",
        "symbol_rate",
        "target_sir_db",
        "throughput",
        "power",
        "utility",
        "size",
    ];
    if coding.is_some() {
        header.extend([
            "coded_b",
            "coded_regime",
            "coded_symbol_rate",
            "coded_target_sir_db",
            "coded_throughput",
            "coded_power",
            "coded_utility",
            "coded_size",
            "tcm_gain_db",
        ]);
    }
    let point_cells = |p: Option<experiments::OperatingPoint<f64>>| {
        vec![
            opt(p, |p| p.bits.to_string()),
            opt(p, |p| regime_name(p.regime).to_string()),
            opt(p, |p| full(p.symbol_rate)),
            opt(p, |p| full(p.target_sir_db)),
            opt(p, |p| full(p.throughput)),
            opt(p, |p| full(p.power)),
            opt(p, |p| full(p.utility)),
            opt(p, |p| full(p.size)),
        ]
    };
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![full(r.norm_delay), r.uncoded.is_some().to_string()];
            v.extend(point_cells(r.uncoded));
            if coding.is_some() {
                v.extend(point_cells(r.coded));
                v.push(opt(r.tcm_gain_db, full));
            }
            v
        })
        .collect();
    sink.emit(&rows, &header, &csv)?;
    Ok(ExitCode::SUCCESS)
}

pub fn tradeoff(sink: &Sink, phy: &PhyArgs, symbol_rate: f64) -> Result<ExitCode> {
    let coding = coding(phy)?;
    let rows = experiments::tradeoff(packet(phy.packet_bits)?, symbol_rate, coding.as_ref())?;
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.bits.to_string(), r.coded.to_string(), full(r.spectral_eff), full(r.energy_factor)])
        .collect();
    sink.emit(&rows, &["b", "coded", "spectral_eff", "energy_factor"], &csv)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct NashOutput<'a> {
    #[serde(flatten)]
    report: &'a EquilibriumReport<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<&'a Verdict>,
}

pub fn nash(
    sink: &Sink,
    scene_path: &Path,
    gain_file: Option<&Path>,
    policy: RatePolicy,
    verify: Option<usize>,
    seed: u64,
) -> Result<ExitCode> {
    let file = qamgame::game::SceneFile::load(scene_path)
        .with_context(|| format!("reading scene {}", scene_path.display()))?;
    let table = if file.coded { Some(gain_table(gain_file)?) } else { None };
    let scene = NetworkScene::from_file(&file, table)?;
    let report = nash_equilibrium_with(&scene, policy)?;
    let verdict = match verify {
        Some(n) if report.feasible => Some(verify_equilibrium(&scene, &report, n, seed)?),
        _ => None,
    };

    let mut header = vec![
        "user",
        "b",
        "coded",
        "regime",
        "symbol_rate",
        "target_sir_db",
        "power",
        "size",
        "utility",
        "exceeds_p_max",
    ];
    if verdict.is_some() {
        header.push("max_deviation_gain");
    }
    let csv: Vec<Vec<String>> = report
        .users
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let s = &u.strategy;
            let mut v = vec![
                k.to_string(),
                s.scheme.bits().to_string(),
                s.scheme.is_coded().to_string(),
                regime_name(u.regime).to_string(),
                full(s.symbol_rate),
                full(qamgame::scalar::to_db(s.target_sir)),
                opt(s.power, full),
                full(u.size),
                opt(u.utility, full),
                u.exceeds_p_max.to_string(),
            ];
            if let Some(vd) = &verdict {
                v.push(full(vd.max_relative_gain[k]));
            }
            v
        })
        .collect();
    sink.emit(&NashOutput { report: &report, verification: verdict.as_ref() }, &header, &csv)?;

    if !report.feasible {
        eprintln!("scene infeasible: total user size {} >= 1", report.total_size);
        return Ok(ExitCode::from(EXIT_INFEASIBLE));
    }
    if let Some(vd) = verdict.filter(|v| !v.passed) {
        let worst = vd.max_relative_gain.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        bail!(Error::Solver(format!("equilibrium check failed: a deviation gains {worst:e}")));
    }
    Ok(ExitCode::SUCCESS)
}

pub struct QueueArgs {
    pub bits: u32,
    pub packet_bits: u32,
    pub symbol_rate: f64,
    pub sir_db: f64,
    pub rho: f64,
    pub lambda: Option<f64>,
    pub packets: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct QueueOutput {
    lambda: f64,
    utilization: f64,
    success: f64,
    #[serde(flatten)]
    sim: qamgame::queueing::SimReport,
    z_score: f64,
    pass: bool,
}

pub fn validate_queue(sink: &Sink, q: &QueueArgs, trace: Option<&Path>) -> Result<ExitCode> {
    let pkt = packet(q.packet_bits)?;
    let scheme = ModScheme::uncoded(q.bits)?;
    let link = LinkRate::new(scheme, q.symbol_rate)?;
    let gamma = from_db(q.sir_db);
    let f = efficiency(&scheme, pkt, gamma)?;
    let tau = packet_time(&link, pkt);
    let lambda = q.lambda.unwrap_or(q.rho * f / tau);
    let traffic = TrafficQos::new(lambda, pkt, f64::MAX)?;
    let cfg = SimConfig::new(q.packets, q.seed);
    let sim = match trace {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?);
            simulate_queue(&link, &traffic, gamma, &cfg, Some(&mut w))?
        }
        None => simulate_queue(&link, &traffic, gamma, &cfg, None)?,
    };
    let z = sim.z_score();
    let out = QueueOutput { lambda, utilization: lambda * tau / f, success: f, sim, z_score: z, pass: z.abs() <= 3.0 };
    let header = [
        "packets",
        "lambda",
        "utilization",
        "success",
        "analytic_delay",
        "mean_delay",
        "std_error",
        "z_score",
        "analytic_service",
        "mean_service",
        "pass",
    ];
    let row = vec![
        sim.packets.to_string(),
        full(lambda),
        full(out.utilization),
        full(f),
        full(sim.analytic_delay),
        full(sim.mean_delay),
        full(sim.std_error),
        full(z),
        full(sim.analytic_service),
        full(sim.mean_service),
        out.pass.to_string(),
    ];
    sink.emit(&out, &header, &[row])?;
    eprintln!(
        "analytic {:.6e} s, simulated {:.6e} +/- {:.2e} s ({z:+.2} se): {}",
        sim.analytic_delay,
        sim.mean_delay,
        sim.std_error,
        if out.pass { "pass" } else { "FAIL" }
    );
    Ok(if out.pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_CHECK_FAILED) })
}

#[derive(Deserialize)]
struct GainSample {
    gamma_db: f64,
    gain_db: f64,
}

pub fn fit_gain(sink: &Sink, input: &Path, bits: u32) -> Result<ExitCode> {
    let mut reader =
        csv::Reader::from_path(input).map_err(Error::from).with_context(|| format!("reading {}", input.display()))?;
    let samples = reader
        .deserialize::<GainSample>()
        .map(|r| r.map(|s| (from_db(s.gamma_db), from_db(s.gain_db))).map_err(Error::from))
        .collect::<Result<Vec<_>, _>>()?;
    let fit = fit_coding_gain(&samples, bits)?;
    let entry = GainEntry::from_params(bits, &fit.params);
    eprintln!("rms residual {:.3e} (linear gain) over {} samples", fit.rms, samples.len());
    let row =
        vec![entry.b.to_string(), full(entry.a), full(entry.c), full(entry.d_db), full(entry.gamma_bar), full(fit.rms)];
    sink.emit(&[entry], &["b", "A", "C", "D", "gamma_bar", "rms"], &[row])?;
    Ok(ExitCode::SUCCESS)
}
