//! Figure-ready output: CSV tables and JSON envelopes for trajectories,
//! measurement-time results, and sweeps.
//!
//! CSV numeric fields carry 17 significant digits (exact f64 round trip);
//! column orders are fixed. JSON mirrors the CSV rows as arrays of objects
//! inside an envelope `{version, config, rows}`. Nothing time- or
//! machine-dependent is ever written, so outputs are byte-stable.

use serde_json::{json, Map, Value};

use crate::config::{fmt_float, ScenarioConfig};
use crate::dynamics::Trajectory;
use crate::measurement::{MeasurementTimeResult, SweepRow};
use crate::VERSION;

fn config_header(config: &ScenarioConfig) -> String {
    let mut out = format!("# decotime {VERSION}\n");
    for (k, v) in config.echo_map() {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out
}

fn config_json(config: &ScenarioConfig) -> Value {
    let mut map = Map::new();
    for (k, v) in config.echo_map() {
        map.insert(k, Value::String(v));
    }
    Value::Object(map)
}

/// Columns: t, rho11, re_rho12, im_rho12, abs_rho12, method.
pub fn trajectory_csv(config: &ScenarioConfig, traj: &Trajectory) -> String {
    let mut out = config_header(config);
    out.push_str("t,rho11,re_rho12,im_rho12,abs_rho12,method\n");
    for s in &traj.samples {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_float(s.t),
            fmt_float(s.state.rho11()),
            fmt_float(s.state.rho12().re),
            fmt_float(s.state.rho12().im),
            fmt_float(s.coherence),
            traj.method.name(),
        ));
    }
    out
}

pub fn trajectory_json(config: &ScenarioConfig, traj: &Trajectory) -> String {
    let rows: Vec<Value> = traj
        .samples
        .iter()
        .map(|s| {
            json!({
                "t": s.t,
                "rho11": s.state.rho11(),
                "re_rho12": s.state.rho12().re,
                "im_rho12": s.state.rho12().im,
                "abs_rho12": s.coherence,
                "method": traj.method.name(),
            })
        })
        .collect();
    let envelope = json!({
        "version": VERSION,
        "config": config_json(config),
        "rows": rows,
    });
    serde_json::to_string_pretty(&envelope).expect("trajectory envelope serializes") + "\n"
}

/// Single-result JSON with the fields t_m, upper_bound, f, lambda, eta,
/// residual, method.
pub fn tmeasure_json(config: &ScenarioConfig, r: &MeasurementTimeResult) -> String {
    let obj = json!({
        "t_m": r.t_m,
        "upper_bound": r.upper_bound,
        "f": config.fraction.expect("tmeasure ran with a threshold"),
        "lambda": config.lambda,
        "eta": config.eta,
        "residual": r.residual,
        "method": r.method.name(),
    });
    serde_json::to_string_pretty(&obj).expect("tmeasure result serializes") + "\n"
}

/// Columns: lambda, eta, t_m, upper_bound, status. Failed cells carry `nan`
/// in t_m and their error code in status.
pub fn sweep_csv(config: &ScenarioConfig, rows: &[SweepRow]) -> String {
    let mut out = config_header(config);
    out.push_str("lambda,eta,t_m,upper_bound,status\n");
    for row in rows {
        let (t_m, bound) = match &row.result {
            Ok(r) => (fmt_float(r.t_m), fmt_float(r.upper_bound)),
            Err(_) => (
                "nan".to_string(),
                crate::measurement::upper_bound(row.lambda, config.fraction.unwrap_or(0.3))
                    .map(fmt_float)
                    .unwrap_or_else(|_| "nan".to_string()),
            ),
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_float(row.lambda),
            fmt_float(row.eta),
            t_m,
            bound,
            row.status(),
        ));
    }
    out
}

pub fn sweep_json(config: &ScenarioConfig, rows: &[SweepRow]) -> String {
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|row| {
            let (t_m, bound, residual) = match &row.result {
                Ok(r) => (json!(r.t_m), json!(r.upper_bound), json!(r.residual)),
                Err(_) => (
                    Value::Null,
                    crate::measurement::upper_bound(row.lambda, config.fraction.unwrap_or(0.3))
                        .map(|b| json!(b))
                        .unwrap_or(Value::Null),
                    Value::Null,
                ),
            };
            json!({
                "lambda": row.lambda,
                "eta": row.eta,
                "t_m": t_m,
                "upper_bound": bound,
                "residual": residual,
                "status": row.status(),
            })
        })
        .collect();
    let envelope = json!({
        "version": VERSION,
        "config": config_json(config),
        "rows": json_rows,
    });
    serde_json::to_string_pretty(&envelope).expect("sweep envelope serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{propagate_lindblad, SystemParams};
    use crate::qubit::DensityMatrix;

    fn sample_config() -> ScenarioConfig {
        ScenarioConfig::parse("system.lambda = 1\nsystem.observable = sigma_z\ntime.t_end = 0.5\nthreshold.f = 0.3\n")
            .unwrap()
    }

    #[test]
    fn trajectory_csv_shape() {
        let cfg = sample_config();
        let s = SystemParams::new(0.0, 1.0, crate::dynamics::Observable::SigmaZ).unwrap();
        let traj =
            propagate_lindblad(&DensityMatrix::reference_initial_state(), 0.5, 5, &s).unwrap();
        let csv = trajectory_csv(&cfg, &traj);
        let data_lines: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data_lines[0], "t,rho11,re_rho12,im_rho12,abs_rho12,method");
        assert_eq!(data_lines.len(), 7); // header + 6 samples
        for line in &data_lines[1..] {
            assert_eq!(line.split(',').count(), 6);
            assert!(line.ends_with("lindblad"));
        }
    }

    #[test]
    fn csv_fields_round_trip_doubles() {
        let cfg = sample_config();
        let s = SystemParams::new(0.3, 1.0, crate::dynamics::Observable::SigmaZ).unwrap();
        let traj =
            propagate_lindblad(&DensityMatrix::reference_initial_state(), 0.5, 3, &s).unwrap();
        let csv = trajectory_csv(&cfg, &traj);
        for line in csv.lines().filter(|l| !l.starts_with('#')).skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            for f in &fields[..5] {
                f.parse::<f64>().expect("numeric field parses");
            }
        }
    }

    #[test]
    fn emission_is_deterministic() {
        let cfg = sample_config();
        let s = SystemParams::new(0.0, 1.0, crate::dynamics::Observable::SigmaZ).unwrap();
        let t1 =
            propagate_lindblad(&DensityMatrix::reference_initial_state(), 0.5, 5, &s).unwrap();
        let t2 =
            propagate_lindblad(&DensityMatrix::reference_initial_state(), 0.5, 5, &s).unwrap();
        assert_eq!(trajectory_csv(&cfg, &t1), trajectory_csv(&cfg, &t2));
        assert_eq!(trajectory_json(&cfg, &t1), trajectory_json(&cfg, &t2));
    }
}
