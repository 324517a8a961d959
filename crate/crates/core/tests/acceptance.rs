//! Acceptance criteria. Prints one PASS/FAIL/SKIP line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use adsc_core::analytics::pipeline::reconstruction;
use adsc_core::analytics::{decode_stream, stats_from_decoded};
use adsc_core::assembly::{extract_fixes, fuse, match_adsb, resample, segment_flights, FusionConfig};
use adsc_core::codec::{
    decode_frame, decode_payload, encode_report, quantize_position, Tag, ALT_STEP_FT, LATLON_STEP_DEG,
};
use adsc_core::contract::scenario::{synthesize_adsb, AdsbCoverage};
use adsc_core::contract::{
    periodic_schedule, run_simulation, Aircraft, Contract, ContractMode, RouteSpec, TruthFix, TruthTrajectory,
};
use adsc_core::fuel::{compare_paths, estimate_fuel, FuelModel, FuelTable, CO2_PER_KG_FUEL};
use adsc_core::geo::{
    baseline_trajectory, country_crossings, crossing_table_from_counts, destination, gc_distance, solve_total, Anchor,
    GeoPoint,
};
use adsc_core::trajectory::{FusedSample, FusedTrajectory, Provenance};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const T0: f64 = 1_717_200_000.0;

struct Outcome {
    status: &'static str,
    detail: String,
}

fn verdict(ok: bool, detail: String) -> Outcome {
    Outcome {
        status: if ok { "PASS" } else { "FAIL" },
        detail,
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    out.detail = format!("{} ({:.1} s)", out.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took > limit && out.status == "PASS" {
            out.status = "FAIL";
            out.detail = format!("{} over the {} s budget", out.detail, limit.as_secs());
        }
    }
    out
}

fn codec_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut seen = BTreeSet::new();
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let report = common::report(&mut rng);
        seen.extend(report.tags().map(Tag::number));
        let bytes = encode_report(&report).expect("generated reports are valid");
        if decode_payload(&bytes).ok().as_ref() != Some(&report) {
            mismatches += 1;
        }
    }
    let mut panics = 0;
    let mut typed_errors = 0;
    let mut buf = [0u8; 64];
    for _ in 0..1_000_000 {
        let len = rng.gen_range(0..=buf.len());
        rng.fill_bytes(&mut buf[..len]);
        match catch_unwind(AssertUnwindSafe(|| decode_payload(&buf[..len]))) {
            Ok(Ok(_)) => {}
            Ok(Err(_)) => typed_errors += 1,
            Err(_) => panics += 1,
        }
    }
    verdict(
        mismatches == 0 && seen.len() == 17 && panics == 0,
        format!(
            "10000 reports, {} of 17 tags, {mismatches} mismatches; 1000000 fuzz inputs, {typed_errors} typed errors, {panics} panics",
            seen.len()
        ),
    )
}

fn nearest_on_grid(v: f64, step: f64, lo: i64, hi: i64) -> i64 {
    let guess = (v / step).floor() as i64;
    (guess - 2..=guess + 2)
        .map(|k| k.clamp(lo, hi))
        .min_by(|&a, &b| (v - a as f64 * step).abs().total_cmp(&(v - b as f64 * step).abs()))
        .unwrap()
}

fn quantization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    for _ in 0..10_000 {
        let lat = rng.gen_range(-90.0..=90.0);
        let lon = rng.gen_range(-180.0..=180.0);
        let alt = rng.gen_range(-1000.0..=66_000.0);
        let (ql, qn, qa) = quantize_position(lat, lon, alt).unwrap();

        let lat_k = nearest_on_grid(lat, LATLON_STEP_DEG, -(1 << 19), 1 << 19);
        let mut lon_k = nearest_on_grid(lon, LATLON_STEP_DEG, -(1 << 20), 1 << 20);
        if lon_k == 1 << 20 {
            lon_k = -(1 << 20);
        }
        let alt_raw = (0..=16_750i64)
            .min_by(|&a, &b| {
                (alt - (a as f64 * ALT_STEP_FT - 1000.0))
                    .abs()
                    .total_cmp(&(alt - (b as f64 * ALT_STEP_FT - 1000.0)).abs())
            })
            .unwrap();
        let oracle = (
            lat_k as f64 * LATLON_STEP_DEG,
            lon_k as f64 * LATLON_STEP_DEG,
            alt_raw as f64 * ALT_STEP_FT - 1000.0,
        );
        let lon_err = {
            let d = (lon - qn).rem_euclid(360.0);
            d.min(360.0 - d)
        };
        let within = (lat - ql).abs() <= LATLON_STEP_DEG / 2.0
            && lon_err <= LATLON_STEP_DEG / 2.0
            && (alt - qa).abs() <= ALT_STEP_FT / 2.0;
        if (ql, qn, qa) != oracle || !within {
            failures += 1;
        }
    }
    verdict(
        failures == 0,
        format!("10000 positions, {failures} differ from the nearest-grid oracle"),
    )
}

fn straight_truth(duration: f64) -> TruthTrajectory {
    let n = (duration / 30.0) as usize;
    let fixes = (0..=n)
        .map(|k| TruthFix {
            t: T0 + k as f64 * 30.0,
            lat: 5.0,
            lon: -30.0 + k as f64 * 0.06,
            alt_ft: 37_000.0,
            ground_speed_kn: 480.0,
            track_deg: 90.0,
        })
        .collect();
    TruthTrajectory::new(fixes, vec![]).unwrap()
}

fn aircraft() -> Aircraft {
    Aircraft {
        callsign: "ETH700".into(),
        icao24: 0x040f1c,
    }
}

fn report_times(contract: Contract) -> Vec<f64> {
    run_simulation(straight_truth(7200.0), aircraft(), vec![contract])
        .unwrap()
        .emissions
        .iter()
        .filter(|e| {
            let r = decode_frame(&e.frame).unwrap();
            r.has_tag(Tag::Basic) || r.has_tag(Tag::EmergencyBasic)
        })
        .map(|e| e.emission_time - T0)
        .collect()
}

fn contract_timing() -> Outcome {
    let normal = report_times(Contract::periodic(1, "Addis", 900.0));
    let emergency = report_times(Contract::periodic(1, "Addis", 900.0).with_emergency(300.0, 3600.0));
    let brute: Vec<f64> = (0..=7200u32)
        .filter(|&t| if t < 3600 { t % 900 == 0 } else { (t - 3600) % 300 == 0 })
        .map(f64::from)
        .collect();
    let sched: Vec<f64> = periodic_schedule(
        0.0,
        7200.0,
        900.0,
        ContractMode::Emergency {
            interval_s: 300.0,
            from_offset_s: 3600.0,
        },
    )
    .into_iter()
    .map(|(t, _)| t)
    .collect();
    let gaps = |ts: &[f64]| ts.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
    let pre = gaps(&emergency.iter().copied().filter(|&t| t <= 3600.0).collect::<Vec<_>>());
    let post = gaps(&emergency.iter().copied().filter(|&t| t >= 3600.0).collect::<Vec<_>>());
    let max_post = post.iter().copied().fold(0.0, f64::max);
    let min_pre = pre.iter().copied().fold(f64::INFINITY, f64::min);
    verdict(
        normal.len() == 9 && emergency == brute && sched == brute && max_post < min_pre,
        format!(
            "{} periodic reports; emergency schedule {} entries vs {} enumerated; gaps {min_pre} s before, {max_post} s after",
            normal.len(),
            emergency.len(),
            brute.len()
        ),
    )
}

/// Cross-track RMS of the reconstructed path and of the great-circle
/// baseline, km.
fn reconstruct(spec: &RouteSpec) -> (f64, f64) {
    let truth = TruthTrajectory::from_route(spec).unwrap();
    let ac = aircraft();
    let out = run_simulation(
        truth.clone(),
        ac.clone(),
        vec![Contract::periodic(1, "Mogadishu", 900.0)],
    )
    .unwrap();
    let adsb = synthesize_adsb(
        &truth,
        &ac,
        &AdsbCoverage {
            edge_s: 1800.0,
            interval_s: 10.0,
        },
    );
    let fixes: Vec<_> = out
        .emissions
        .iter()
        .flat_map(|e| extract_fixes(&e.frame, &decode_frame(&e.frame).unwrap(), None, None))
        .collect();
    let seg = segment_flights(&fixes, 14_400.0).segments.remove(0);
    let matched = match_adsb(&seg, &adsb, 10_800.0);
    let fused = fuse(&seg, &matched, &FusionConfig::default()).unwrap();
    let traj = resample(&fused.trajectory, 60.0).unwrap();
    let r = reconstruction(&traj, &truth, 60.0).unwrap();
    (r.fused_rms_km, r.baseline_rms_km)
}

fn fusion_accuracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let routes: Vec<RouteSpec> = (0..24)
        .map(|_| {
            let o = GeoPoint::new(rng.gen_range(-30.0..50.0), rng.gen_range(-60.0..10.0));
            let d = GeoPoint::new(o.lat + rng.gen_range(-10.0..10.0), o.lon + rng.gen_range(30.0..55.0));
            let mut spec = RouteSpec::new(o, d, T0);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            spec.lateral_offset_deg = sign * rng.gen_range(2.0..4.0);
            spec.initial_alt_ft = 3000.0;
            spec
        })
        .collect();
    let (mut fused, mut base) = (0.0, 0.0);
    for spec in &routes {
        let (f, b) = reconstruct(spec);
        fused += f;
        base += b;
    }
    let n = routes.len() as f64;
    let (fused, base) = (fused / n, base / n);
    let reduction = 1.0 - fused / base;

    let mut straight_delta = 0.0;
    for spec in &routes {
        let mut s = spec.clone();
        s.lateral_offset_deg = 0.0;
        let (f, b) = reconstruct(&s);
        straight_delta += (f - b).abs();
    }
    straight_delta /= n;
    verdict(
        reduction >= 0.30 && straight_delta < 0.1,
        format!(
            "{} offset routes: mean RMS {fused:.2} km fused vs {base:.2} km great circle ({:.0}% lower); zero-offset mean |delta| {straight_delta:.3} km",
            routes.len(),
            100.0 * reduction
        ),
    )
}

/// Edge coordinates of the fixture atlas in unwrapped longitude.
const EDGE_LATS: [f64; 5] = [-10.0, -5.0, 0.0, 5.0, 10.0];

fn edge_lons(antimeridian: bool) -> Vec<f64> {
    if antimeridian {
        vec![172.0, 180.0, 188.0]
    } else {
        (0..=8).map(|i| -20.0 + 5.0 * i as f64).collect()
    }
}

/// Rejects paths that pass near a polygon corner or touch an edge line at a
/// turning point, where sampling and intersection can legitimately differ.
fn has_clearance(dense: &[(f64, f64)], antimeridian: bool) -> bool {
    let lons = edge_lons(antimeridian);
    let near = |v: f64, edges: &[f64], tol: f64| edges.iter().any(|e| (v - e).abs() < tol);
    for &(lat, lon) in dense {
        if near(lat, &EDGE_LATS, 0.05) && near(lon, &lons, 0.05) {
            return false;
        }
    }
    for w in dense.windows(3) {
        let ext = |a: f64, b: f64, c: f64| (b - a) * (c - b) <= 0.0;
        if ext(w[0].0, w[1].0, w[2].0) && near(w[1].0, &EDGE_LATS, 0.01) {
            return false;
        }
        if ext(w[0].1, w[1].1, w[2].1) && near(w[1].1, &lons, 0.01) {
            return false;
        }
    }
    true
}

fn random_track(rng: &mut ChaCha8Rng, antimeridian: bool) -> FusedTrajectory {
    let lon0 = if antimeridian {
        rng.gen_range(168.0..192.0)
    } else {
        rng.gen_range(-22.0..22.0)
    };
    let mut p = GeoPoint::new(rng.gen_range(-11.0..11.0), lon0);
    p.lon = adsc_core::geo::normalize_lon(p.lon);
    let mut t = T0;
    let mut samples = vec![common::sample(t, p.lat, p.lon)];
    let mut heading = if antimeridian {
        if rng.gen_bool(0.5) {
            90.0
        } else {
            270.0
        }
    } else {
        rng.gen_range(0.0..360.0)
    };
    for _ in 0..rng.gen_range(1..=4) {
        let dt = rng.gen_range(600.0..2400.0);
        heading += rng.gen_range(-40.0..40.0);
        p = destination(p, heading, 480.0 * 1.852 * dt / 3600.0);
        t += dt.round();
        samples.push(common::sample(t, p.lat, p.lon));
    }
    FusedTrajectory::new(samples)
}

fn dense_points(traj: &FusedTrajectory, antimeridian: bool) -> Vec<(f64, f64)> {
    let step = resample(traj, 1.0).unwrap();
    step.samples
        .iter()
        .map(|s| {
            let lon = if antimeridian && s.lon < 0.0 {
                s.lon + 360.0
            } else {
                s.lon
            };
            (s.lat, lon)
        })
        .collect()
}

fn country_agreement() -> Outcome {
    let atlas = common::grid_atlas();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut accepted, mut across, mut agree, mut tries) = (0, 0, 0, 0);
    let mut crossing_sets = 0;
    while accepted < 60 && tries < 10_000 {
        tries += 1;
        let anti = accepted % 4 == 0;
        let traj = random_track(&mut rng, anti);
        if !has_clearance(&dense_points(&traj, anti), anti) {
            continue;
        }
        accepted += 1;
        let seg = country_crossings(&traj, &atlas);
        let dense = common::dense_crossings(&traj, &atlas);
        if anti && seg.iter().any(|c| c.starts_with('E')) && seg.iter().any(|c| c.starts_with('W')) {
            across += 1;
        }
        if seg.len() > 1 {
            crossing_sets += 1;
        }
        if seg == dense {
            agree += 1;
        }
    }
    verdict(
        accepted >= 50 && agree == accepted && across > 0,
        format!(
            "{agree}/{accepted} trajectories agree with 1 s sampling ({crossing_sets} cross a border, {across} cross the antimeridian)"
        ),
    )
}

/// Country, flights, percentage as published.
const PUBLISHED: [(&str, u64, &str); 15] = [
    ("ETH", 2569, "33.50"),
    ("DZA", 2134, "27.83"),
    ("SOM", 2128, "27.75"),
    ("EGY", 1539, "20.07"),
    ("ZAF", 1428, "18.62"),
    ("ERI", 1398, "18.23"),
    ("SDN", 1194, "15.57"),
    ("COD", 1171, "15.27"),
    ("NER", 1072, "13.98"),
    ("KEN", 1056, "13.77"),
    ("AGO", 916, "11.94"),
    ("-99", 869, "11.33"),
    ("TZA", 845, "11.02"),
    ("NAM", 724, "9.44"),
    ("BWA", 704, "9.18"),
];

fn table_arithmetic() -> Outcome {
    let hundredths = |s: &str| -> u64 {
        let (a, b) = s.split_once('.').unwrap();
        a.parse::<u64>().unwrap() * 100 + b.parse::<u64>().unwrap()
    };
    let rows: Vec<(u64, u64)> = PUBLISHED.iter().map(|&(_, c, p)| (c, hundredths(p))).collect();
    let totals = solve_total(&rows);
    let Some(&n) = totals.first() else {
        return verdict(false, "no consistent total".into());
    };
    let counts: BTreeMap<String, u64> = PUBLISHED.iter().map(|&(code, c, _)| (code.to_string(), c)).collect();
    let table = crossing_table_from_counts(&counts, n).unwrap();
    let reproduced = PUBLISHED
        .iter()
        .filter(|&&(code, _, pct)| table.rows.iter().any(|r| r.code == code && r.percentage_text() == pct))
        .count();
    verdict(
        totals.len() == 1 && reproduced == 15,
        format!("consistent totals {totals:?}; {reproduced}/15 percentages reproduced"),
    )
}

fn fuel_track(rng: &mut ChaCha8Rng) -> FusedTrajectory {
    let mut p = GeoPoint::new(rng.gen_range(-50.0..50.0), rng.gen_range(-170.0..170.0));
    let mut heading = rng.gen_range(0.0..360.0);
    let mut t = T0;
    let n = rng.gen_range(3..80);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            let dt = rng.gen_range(30.0..900.0);
            heading += rng.gen_range(-15.0..15.0);
            p = destination(p, heading, rng.gen_range(400.0..520.0) * 1.852 * dt / 3600.0);
            t += dt;
        }
        samples.push(FusedSample {
            t,
            lat: p.lat,
            lon: p.lon,
            alt_ft: Some(rng.gen_range(28_000.0..41_000.0)),
            provenance: if i == 0 || i == n - 1 {
                Provenance::Adsb
            } else {
                Provenance::Adsc
            },
        });
    }
    FusedTrajectory::new(samples)
}

fn fuel_properties() -> Outcome {
    let table = FuelTable::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures: BTreeMap<&str, u32> = BTreeMap::new();
    let mut worst_fixed_point: f64 = 0.0;
    for _ in 0..100 {
        let model = &table.family[rng.gen_range(0..table.family.len())];
        let traj = fuel_track(&mut rng);
        let est = estimate_fuel(&traj, model).unwrap();

        let k = rng.gen_range(1..traj.len() - 1);
        let head = estimate_fuel(&FusedTrajectory::new(traj.samples[..=k].to_vec()), model).unwrap();
        let tail = estimate_fuel(&FusedTrajectory::new(traj.samples[k..].to_vec()), model).unwrap();
        let sum = head.total_fuel_kg + tail.total_fuel_kg;
        if (sum - est.total_fuel_kg).abs() > 1e-9 * est.total_fuel_kg {
            *failures.entry("additivity").or_default() += 1;
        }

        if est.total_co2_kg != CO2_PER_KG_FUEL * est.total_fuel_kg {
            *failures.entry("co2").or_default() += 1;
        }

        for w in traj.samples.windows(2) {
            let stretched = {
                let brg = adsc_core::geo::initial_bearing(w[0].point(), w[1].point());
                let d = gc_distance(w[0].point(), w[1].point());
                let q = destination(w[0].point(), brg, d * 1.05);
                FusedSample {
                    lat: q.lat,
                    lon: q.lon,
                    ..w[1].clone()
                }
            };
            let base = model.segment_fuel_kg(&w[0], &w[1]).unwrap();
            let longer = model.segment_fuel_kg(&w[0], &stretched).unwrap();
            if longer < base * (1.0 - 1e-12) {
                *failures.entry("monotonicity").or_default() += 1;
                break;
            }
        }

        let first = &traj.samples[0];
        let last = &traj.samples[traj.len() - 1];
        let anchor = |s: &FusedSample| Anchor {
            t: s.t,
            point: s.point(),
            alt_ft: s.alt_ft,
        };
        let gc = baseline_trajectory(anchor(first), anchor(last), 60.0).unwrap();
        let r = compare_paths(&gc, model).unwrap();
        worst_fixed_point = worst_fixed_point.max(r.relative_delta.abs());
        if r.relative_delta.abs() >= 1e-3 {
            *failures.entry("fixed_point").or_default() += 1;
        }
    }
    verdict(
        failures.is_empty(),
        format!("100 trajectories, failures {failures:?}, worst fixed-point delta {worst_fixed_point:.2e}"),
    )
}

fn dataset_check() -> Outcome {
    let Ok(path) = std::env::var("ADSC_DATASET") else {
        return Outcome {
            status: "SKIP",
            detail: "set ADSC_DATASET to a raw-frame JSONL export to run".into(),
        };
    };
    let file = match std::fs::File::open(&path) {
        Ok(f) => f,
        Err(e) => return verdict(false, format!("{path}: {e}")),
    };
    let mut decoded = Vec::new();
    if let Err(e) = decode_stream(std::io::BufReader::new(file), &mut decoded) {
        return verdict(false, format!("{path}: {e}"));
    }
    let (stats, _) = stats_from_decoded(decoded.as_slice()).unwrap();
    let basic = stats.tag_histogram.get("07").copied().unwrap_or(0.0);
    let shanwick = stats
        .atsu_histogram
        .iter()
        .filter(|(k, _)| k.to_ascii_lowercase().contains("shanwick"))
        .map(|(_, v)| *v)
        .sum::<u64>();
    let positioned: u64 = stats.altitude_histogram.values().sum();
    let cruise: u64 = stats.altitude_histogram.range(30_000..44_000).map(|(_, v)| *v).sum();
    let cruise_share = cruise as f64 / positioned.max(1) as f64;
    let aircraft_ok = (2_400..=2_800).contains(&stats.unique_aircraft);
    verdict(
        stats.total_messages == 720_415
            && aircraft_ok
            && (basic - 0.80).abs() <= 0.02
            && shanwick > 100_000
            && cruise_share > 0.5,
        format!(
            "{} messages, {} aircraft, basic share {basic:.3}, Shanwick {shanwick}, {:.0}% of positions in 30000-44000 ft",
            stats.total_messages,
            stats.unique_aircraft,
            100.0 * cruise_share
        ),
    )
}

type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("codec round-trip and fuzz", Some(60), codec_round_trip),
        ("quantization against nearest-grid oracle", None, quantization),
        ("contract timing", None, contract_timing),
        ("fusion accuracy on offset routes", Some(120), fusion_accuracy),
        ("country crossings against dense sampling", None, country_agreement),
        ("crossing table arithmetic", None, table_arithmetic),
        ("fuel model properties", Some(30), fuel_properties),
        ("public dataset statistics", None, dataset_check),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let out = timed(limit.map(Duration::from_secs), run);
        if out.status == "FAIL" {
            failed += 1;
        }
        println!("[{}] {} {}: {}", out.status, i + 1, name, out.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
