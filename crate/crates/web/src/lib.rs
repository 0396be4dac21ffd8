//! WebAssembly bindings for the browser demo. Each export returns a JSON
//! string; the plain Rust functions behind them are usable natively.
//! Integers cross the boundary as `u32` so JavaScript can pass plain numbers.

use gfe_core::config::{RunConfig, UserSelector};
use gfe_core::experiments::run_binary_experiment;
use gfe_core::optim::LrSchedule;
use gfe_core::structnet::{build_region_map, build_spec, param_count, parse_region, Preset, REGIONS};
use gfe_core::train::EpochRecord;
use gfe_core::MarkerClass;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct LrCurve {
    pub steps: Vec<u64>,
    pub lr: Vec<f64>,
}

/// Staircase learning rate sampled at `points` evenly spaced steps.
pub fn lr_curve(schedule: &LrSchedule, total_steps: u64, points: usize) -> Result<LrCurve, String> {
    schedule.validate().map_err(|e| e.to_string())?;
    let points = points.clamp(2, 5000) as u64;
    let steps: Vec<u64> = (0..points).map(|i| i * total_steps / (points - 1)).collect();
    let lr = steps.iter().map(|&s| schedule.lr_at(s)).collect();
    Ok(LrCurve { steps, lr })
}

#[derive(Debug, Serialize)]
pub struct RegionInfo {
    pub name: &'static str,
    pub first: usize,
    pub last: usize,
}

#[derive(Debug, Serialize)]
pub struct PresetInfo {
    pub preset: Preset,
    pub layer_sizes: Vec<usize>,
    pub edges: Vec<usize>,
    pub param_count: usize,
}

#[derive(Debug, Serialize)]
pub struct Topology {
    pub outputs: usize,
    pub presets: Vec<PresetInfo>,
    pub regions: Vec<RegionInfo>,
    /// Region index of every landmark.
    pub region_of_point: Vec<usize>,
}

pub fn topology(outputs: usize) -> Result<Topology, String> {
    let presets = [Preset::Structured, Preset::FullyConnected]
        .into_iter()
        .map(|preset| {
            let spec = build_spec(preset, outputs).map_err(|e| e.to_string())?;
            Ok(PresetInfo {
                preset,
                layer_sizes: spec.layer_sizes(),
                edges: spec.layers().iter().map(|l| l.num_edges()).collect(),
                param_count: param_count(&spec),
            })
        })
        .collect::<Result<_, String>>()?;
    Ok(Topology {
        outputs,
        presets,
        regions: REGIONS.iter().map(|r| RegionInfo { name: r.name, first: r.first, last: r.last }).collect(),
        region_of_point: build_region_map().to_vec(),
    })
}

#[derive(Debug, Serialize)]
pub struct DemoRun {
    pub preset: Preset,
    pub param_count: usize,
    pub history: Vec<EpochRecord>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Serialize)]
pub struct Demo {
    pub region: String,
    pub train_size: usize,
    pub test_size: usize,
    pub runs: Vec<DemoRun>,
}

/// Trains both presets on one synthetic split whose class signal sits in
/// `region`.
pub fn demo(seed: u64, epochs: usize, samples: usize, region: &str, shift: f64) -> Result<Demo, String> {
    let idx = parse_region(region).ok_or_else(|| format!("unknown region {region:?}"))?;
    let config = RunConfig {
        synthetic: true,
        seed,
        epochs: epochs.clamp(1, 500),
        synthetic_positives: samples.clamp(10, 400),
        synthetic_negatives: samples.clamp(10, 400),
        synthetic_regions: idx.to_string(),
        synthetic_shift: shift,
        ..Default::default()
    };
    config.validate().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    let (mut train_size, mut test_size) = (0, 0);
    for preset in [Preset::Structured, Preset::FullyConnected] {
        let out = run_binary_experiment(MarkerClass::Assertion, UserSelector::A, preset, &config)
            .map_err(|e| e.to_string())?;
        let r = out.report;
        train_size = r.train_metrics.n;
        test_size = r.test_metrics.n;
        runs.push(DemoRun {
            preset,
            param_count: r.param_count,
            history: r.history,
            train_accuracy: r.train_metrics.accuracy,
            test_accuracy: r.test_metrics.accuracy,
        });
    }
    Ok(Demo { region: REGIONS[idx].name.to_string(), train_size, test_size, runs })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.map(|v| serde_json::to_string(&v).expect("demo output serializes")).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = lrSchedule)]
pub fn lr_schedule_js(
    initial_rate: f64,
    decay_ratio: f64,
    decay_step: u32,
    total_steps: u32,
    points: usize,
) -> Result<String, JsValue> {
    let schedule = LrSchedule { initial_rate, decay_ratio, decay_step: decay_step.into() };
    to_js(lr_curve(&schedule, total_steps.into(), points))
}

#[wasm_bindgen(js_name = topology)]
pub fn topology_js(outputs: usize) -> Result<String, JsValue> {
    to_js(topology(outputs))
}

#[wasm_bindgen(js_name = trainDemo)]
pub fn train_demo_js(seed: u32, epochs: usize, samples: usize, region: &str, shift: f64) -> Result<String, JsValue> {
    to_js(demo(seed.into(), epochs, samples, region, shift))
}
