//! Scenario documents: truth source, contracts, polls, degradation and
//! synthetic ADS-B coverage, read from TOML.

use serde::{Deserialize, Serialize};

use super::{
    degrade_stream, Aircraft, Contract, Emission, Result, RouteSpec, SimError, SimulationOutput, Simulator, TruthFix,
    TruthTrajectory, Waypoint, DEFAULT_PERIODIC_INTERVAL_S,
};
use crate::assembly::StateVector;
use crate::codec::icao_from_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AircraftSpec {
    pub callsign: String,
    /// Hex, e.g. `"4ca2d1"`.
    pub icao24: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSource {
    Route(RouteSpec),
    Inline {
        fixes: Vec<TruthFix>,
        #[serde(default)]
        waypoints: Vec<Waypoint>,
    },
}

impl TruthSource {
    pub fn build(&self) -> Result<TruthTrajectory> {
        match self {
            TruthSource::Route(spec) => TruthTrajectory::from_route(spec),
            TruthSource::Inline { fixes, waypoints } => TruthTrajectory::new(fixes.clone(), waypoints.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Poll {
    pub contract_number: u8,
    /// Seconds after the first truth fix.
    pub at_offset_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Degradation {
    pub loss_rate: f64,
    pub jitter_s: f64,
}

/// ADS-B coverage at both ends of the flight, as seen by coastal receivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdsbCoverage {
    /// Covered span after departure and before arrival, seconds.
    pub edge_s: f64,
    pub interval_s: f64,
}

impl Default for AdsbCoverage {
    fn default() -> Self {
        AdsbCoverage {
            edge_s: 1800.0,
            interval_s: 10.0,
        }
    }
}

fn default_contracts() -> Vec<Contract> {
    vec![Contract::periodic(1, "Shanwick", DEFAULT_PERIODIC_INTERVAL_S)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    pub aircraft: AircraftSpec,
    pub truth: TruthSource,
    #[serde(default = "default_contracts")]
    pub contracts: Vec<Contract>,
    #[serde(default)]
    pub polls: Vec<Poll>,
    #[serde(default)]
    pub degradation: Degradation,
    #[serde(default)]
    pub adsb: Option<AdsbCoverage>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SimError::Scenario(e.to_string()))
    }

    pub fn aircraft(&self) -> Result<Aircraft> {
        let icao24 = icao_from_hex(&self.aircraft.icao24)
            .ok_or_else(|| SimError::Scenario(format!("bad icao24 `{}`", self.aircraft.icao24)))?;
        Ok(Aircraft {
            callsign: self.aircraft.callsign.clone(),
            icao24,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub truth: TruthTrajectory,
    pub aircraft: Aircraft,
    /// Undegraded simulator output, including the tag ledger.
    pub clean: SimulationOutput,
    /// Frames after loss and jitter.
    pub frames: Vec<Emission>,
    pub adsb: Vec<StateVector>,
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioRun> {
    let truth = scenario.truth.build()?;
    let aircraft = scenario.aircraft()?;
    let mut sim = Simulator::new(truth.clone(), aircraft.clone());
    let mut handles = Vec::new();
    for c in &scenario.contracts {
        handles.push(sim.establish_contract(c.clone())?);
    }
    for p in &scenario.polls {
        let h = handles
            .iter()
            .find(|h| h.contract_number == p.contract_number)
            .ok_or(SimError::UnknownContract(p.contract_number))?;
        sim.poll(*h, truth.start() + p.at_offset_s)?;
    }
    let clean = sim.run()?;
    let d = scenario.degradation;
    let frames = degrade_stream(&clean.emissions, d.loss_rate, d.jitter_s, scenario.seed)?;
    let adsb = scenario
        .adsb
        .map(|c| synthesize_adsb(&truth, &aircraft, &c))
        .unwrap_or_default();
    Ok(ScenarioRun {
        truth,
        aircraft,
        clean,
        frames,
        adsb,
    })
}

/// Noise-free ADS-B samples of the truth inside the departure and arrival
/// coverage windows.
pub fn synthesize_adsb(truth: &TruthTrajectory, aircraft: &Aircraft, coverage: &AdsbCoverage) -> Vec<StateVector> {
    let (start, end) = (truth.start(), truth.end());
    if !(coverage.interval_s > 0.0) || !(coverage.edge_s >= 0.0) {
        return Vec::new();
    }
    let in_window = |t: f64| t <= start + coverage.edge_s || t >= end - coverage.edge_s;
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let t = start + k as f64 * coverage.interval_s;
        if t > end {
            break;
        }
        k += 1;
        if !in_window(t) {
            continue;
        }
        let (p, alt) = truth.state_at(t).expect("inside truth span");
        let (gs, _) = truth.kinematics_at(t);
        out.push(StateVector {
            t,
            icao24: aircraft.icao24,
            callsign: Some(aircraft.callsign.clone()),
            lat: p.lat,
            lon: p.lon,
            baro_altitude_ft: Some(alt),
            velocity_kn: Some(gs),
            vertical_rate_fpm: Some(truth.vertical_rate_at(t)),
            on_ground: false,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::{ContractKind, ContractMode, EventTrigger};

    const DOC: &str = r#"
seed = 7

[aircraft]
callsign = "UAE201"
icao24 = "896123"

[truth.route]
origin = [51.47, -0.45]
destination = [40.64, -73.78]
start_t = 1717200000
lateral_offset_deg = 2.0
waypoints = 3

[[contracts]]
contract_number = 1
kind = "periodic"
interval_s = 900
atsu = "Shanwick"
mode = { emergency = { interval_s = 300, from_offset_s = 3600 } }

[[contracts]]
contract_number = 2
kind = "event"
atsu = "Gander"
triggers = [ { kind = "waypoint_change" }, { kind = "lateral_deviation", threshold_nm = 50 } ]

[[contracts]]
contract_number = 3
kind = "demand"
atsu = "Santa Maria"

[[polls]]
contract_number = 3
at_offset_s = 5000

[degradation]
loss_rate = 0.1
jitter_s = 5

[adsb]
edge_s = 1200
"#;

    #[test]
    fn parses_and_runs() {
        let s = Scenario::from_toml(DOC).unwrap();
        assert_eq!(
            s.contracts[0].mode,
            ContractMode::Emergency {
                interval_s: 300.0,
                from_offset_s: 3600.0
            }
        );
        assert!(
            matches!(&s.contracts[1].kind, ContractKind::Event { triggers } if triggers[0] == EventTrigger::WaypointChange)
        );
        let run = run_scenario(&s).unwrap();
        assert_eq!(run.clean.ledger[&20], 3);
        assert!(run.frames.len() < run.clean.emissions.len());
        let (t0, t1) = (run.truth.start(), run.truth.end());
        let expected = (0..)
            .map(|k| t0 + k as f64 * 10.0)
            .take_while(|&t| t <= t1)
            .filter(|&t| t <= t0 + 1200.0 || t >= t1 - 1200.0)
            .count();
        assert_eq!(run.adsb.len(), expected);
        assert!(run.adsb.iter().all(|v| v.icao24 == 0x896123));
        let again = run_scenario(&s).unwrap();
        assert_eq!(run.frames, again.frames);
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = DOC.replace("seed = 7", "seed = 7\nbogus = 1");
        assert!(Scenario::from_toml(&bad).is_err());
    }
}
