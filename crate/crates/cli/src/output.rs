//! CSV and JSON writers. Both carry the full configuration so an output file
//! can be fed back as `--config`.

use std::io::{self, Write};

use eit_noise_core::{CMatrix, SpectrumRecord};
use serde_json::{json, Map, Value};

use crate::scan::ScanOutput;

pub const CSV_HEADER: &str =
    "delta_L2,omega,s_pump,s_probe,fano_pump,fano_probe,s_sum,s_diff,correlation_2C,correlation_norm";

pub const CONVENTION: &str = "fluctuations obey d(dx)/dt = -A dx + F with <F(t) F(t')^dagger> = N delta(t-t'); \
spectra are normalized to the shot noise of the beam (1 = coherent light); \
s_sum and s_diff are photocurrent sum/difference noise over the total shot noise; \
correlation_2C = s_sum - s_diff; correlation_norm = (s_sum - s_diff)/(s_sum + s_diff)";

pub const UNITS: [(&str, &str); 10] = [
    ("delta_L2", "Gamma"),
    ("omega", "Gamma"),
    ("s_pump", "shot noise"),
    ("s_probe", "shot noise"),
    ("fano_pump", "shot noise"),
    ("fano_probe", "shot noise"),
    ("s_sum", "shot noise"),
    ("s_diff", "shot noise"),
    ("correlation_2C", "shot noise"),
    ("correlation_norm", "dimensionless"),
];

fn columns(r: &SpectrumRecord) -> [f64; 10] {
    [
        r.delta_l2,
        r.omega,
        r.s_pump,
        r.s_probe,
        r.fano_pump,
        r.fano_probe,
        r.s_sum,
        r.s_diff,
        r.correlation_2c,
        r.correlation_norm,
    ]
}

pub fn write_csv<W: Write + ?Sized>(out: &ScanOutput, w: &mut W) -> io::Result<()> {
    for (k, v) in out.config.entries() {
        writeln!(w, "#@ {k} = {v}")?;
    }
    writeln!(w, "# convention: {CONVENTION}")?;
    let units: Vec<String> = UNITS.iter().map(|(c, u)| format!("{c} [{u}]")).collect();
    writeln!(w, "# units: {}", units.join(", "))?;
    writeln!(w, "# config rates share one unit; delta_L2 and omega are in units of Gamma1 + Gamma2")?;
    writeln!(w, "{CSV_HEADER}")?;
    for p in &out.points {
        let row: Vec<String> = columns(&p.record).iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

fn metadata(out: &ScanOutput) -> Value {
    let config: Map<String, Value> =
        out.config.entries().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
    let units: Map<String, Value> = UNITS.iter().map(|(c, u)| (c.to_string(), Value::String(u.to_string()))).collect();
    json!({
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "convention": CONVENTION,
        "units": units,
    })
}

pub fn write_json<W: Write + ?Sized>(out: &ScanOutput, w: &mut W) -> io::Result<()> {
    let records: Vec<Value> = out
        .points
        .iter()
        .map(|p| {
            let row: Map<String, Value> =
                UNITS.iter().zip(columns(&p.record)).map(|((c, _), x)| (c.to_string(), json!(x))).collect();
            Value::Object(row)
        })
        .collect();
    let doc = json!({ "metadata": metadata(out), "records": records });
    serde_json::to_writer_pretty(&mut *w, &doc)?;
    writeln!(w)
}

fn matrix(m: &CMatrix) -> Value {
    let rows: Vec<Value> =
        m.row_iter().map(|row| Value::Array(row.iter().map(|z| json!([z.re, z.im])).collect())).collect();
    Value::Array(rows)
}

/// Per-point drift, noise and covariance matrices as `[re, im]` pairs.
pub fn write_diagnostics<W: Write + ?Sized>(out: &ScanOutput, w: &mut W) -> io::Result<()> {
    let points: Vec<Value> = out
        .points
        .iter()
        .filter_map(|p| {
            p.diagnostics.as_ref().map(|d| {
                json!({
                    "delta_L2": p.record.delta_l2,
                    "drift": matrix(&d.drift),
                    "noise": matrix(&d.noise),
                    "covariance": matrix(&d.covariance),
                })
            })
        })
        .collect();
    let doc = json!({
        "metadata": metadata(out),
        "variables": eit_noise_core::model::idx::NAMES,
        "units": "rates in Gamma; entries are [re, im]",
        "points": points,
    });
    serde_json::to_writer_pretty(&mut *w, &doc)?;
    writeln!(w)
}
