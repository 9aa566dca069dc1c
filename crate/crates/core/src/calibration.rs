//! Dichroism extraction from transmitted-power measurements, and plate
//! tables that turn per-voltage calibration rows into runnable protocols.
//!
//! The forward model for a plate of thickness d is
//! I_ord = e^{-2 alpha_o d} I_0 and I_ext = e^{-2 alpha_e d} I_0, so
//! eta  = (alpha_e - alpha_o) d =  (1/2) ln(I_ord / I_ext)
//! eta' = (alpha_e + alpha_o) d = -(1/2) ln(I_ord I_ext / I_0^2).

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::walk::{PlateParams, Protocol};

/// Default sample thickness in micrometers.
pub const DEFAULT_THICKNESS_UM: f64 = 17.0;

/// Attenuation exponents extracted below this negative tolerance flag an
/// inconsistent input-power reference; anything in (-tol, 0) is clamped.
const NEGATIVE_ETA_PRIME_TOL: f64 = 1e-9;

/// Name of the built-in table holding the six voltage-averaged dichroism
/// values measured at half-wave retardation.
pub const BUILTIN_MEASURED_ETA_AVERAGES: &str = "measured-eta-averages";

/// The six voltage-averaged dichroism values, highest drive dichroism
/// first.
pub const MEASURED_ETA_AVERAGES: [f64; 6] = [0.57, 0.48, 0.40, 0.31, 0.23, 0.13];

/// One transmitted-power measurement: ordinary and extraordinary waves plus
/// the input power, in arbitrary linear power units.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationSample {
    voltage_label: String,
    i_ord: f64,
    i_ext: f64,
    i_0: f64,
    thickness_d: f64,
}

impl CalibrationSample {
    pub fn new(voltage_label: impl Into<String>, i_ord: f64, i_ext: f64, i_0: f64) -> Result<Self> {
        Self::with_thickness(voltage_label, i_ord, i_ext, i_0, DEFAULT_THICKNESS_UM)
    }

    pub fn with_thickness(
        voltage_label: impl Into<String>,
        i_ord: f64,
        i_ext: f64,
        i_0: f64,
        thickness_d: f64,
    ) -> Result<Self> {
        let voltage_label = voltage_label.into();
        for (name, v) in [("i_ord", i_ord), ("i_ext", i_ext), ("i_0", i_0), ("thickness_d", thickness_d)]
        {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidSample {
                    label: voltage_label,
                    reason: format!("{name} = {v} must be a positive finite number"),
                });
            }
        }
        Ok(CalibrationSample { voltage_label, i_ord, i_ext, i_0, thickness_d })
    }

    pub fn voltage_label(&self) -> &str {
        &self.voltage_label
    }

    pub fn i_ord(&self) -> f64 {
        self.i_ord
    }

    pub fn i_ext(&self) -> f64 {
        self.i_ext
    }

    pub fn i_0(&self) -> f64 {
        self.i_0
    }

    pub fn thickness_d(&self) -> f64 {
        self.thickness_d
    }
}

/// Dichroic parameter eta = (1/2) ln(I_ord / I_ext); positive when the
/// ordinary wave transmits more.
pub fn extract_eta(sample: &CalibrationSample) -> f64 {
    0.5 * (sample.i_ord / sample.i_ext).ln()
}

/// Global attenuation exponent eta' = -(1/2) ln(I_ord I_ext / I_0^2);
/// nonnegative for passive samples. A clearly negative result means the
/// recorded input power is inconsistent with the transmitted powers.
pub fn extract_eta_prime(sample: &CalibrationSample) -> Result<f64> {
    let eta_prime = -0.5 * (sample.i_ord * sample.i_ext / (sample.i_0 * sample.i_0)).ln();
    if eta_prime < -NEGATIVE_ETA_PRIME_TOL {
        return Err(Error::InconsistentReference(eta_prime));
    }
    Ok(eta_prime.max(0.0))
}

/// One calibrated operating point of a plate.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateRow {
    pub voltage_label: String,
    pub delta: f64,
    pub eta: f64,
    pub eta_prime: f64,
}

/// Per-voltage calibration rows for one physical plate, keyed uniquely by
/// voltage label.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateTable {
    plate_id: String,
    rows: Vec<PlateRow>,
}

impl PlateTable {
    pub fn new(plate_id: impl Into<String>, rows: Vec<PlateRow>) -> Result<Self> {
        let plate_id = plate_id.into();
        if rows.is_empty() {
            return Err(Error::InvalidTable(format!("plate '{plate_id}' has no rows")));
        }
        for row in &rows {
            if !(row.eta >= 0.0) {
                return Err(Error::InvalidTable(format!(
                    "plate '{}' voltage '{}': eta = {} is negative",
                    plate_id, row.voltage_label, row.eta
                )));
            }
            if !(row.eta_prime >= 0.0) {
                return Err(Error::InvalidTable(format!(
                    "plate '{}' voltage '{}': eta_prime = {} is negative",
                    plate_id, row.voltage_label, row.eta_prime
                )));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if rows[..i].iter().any(|r| r.voltage_label == row.voltage_label) {
                return Err(Error::InvalidTable(format!(
                    "plate '{}' has duplicate voltage '{}'",
                    plate_id, row.voltage_label
                )));
            }
        }
        Ok(PlateTable { plate_id, rows })
    }

    pub fn plate_id(&self) -> &str {
        &self.plate_id
    }

    pub fn rows(&self) -> &[PlateRow] {
        &self.rows
    }

    pub fn row(&self, voltage_label: &str) -> Option<&PlateRow> {
        self.rows.iter().find(|r| r.voltage_label == voltage_label)
    }

    /// Built-in table with the six voltage-averaged dichroism values at
    /// half-wave retardation (delta = pi, passive eta' = eta), labeled
    /// V1..V6 from strongest to weakest dichroism.
    pub fn measured_eta_averages() -> PlateTable {
        let rows = MEASURED_ETA_AVERAGES
            .iter()
            .enumerate()
            .map(|(i, &eta)| PlateRow {
                voltage_label: format!("V{}", i + 1),
                delta: PI,
                eta,
                eta_prime: eta,
            })
            .collect();
        PlateTable::new(BUILTIN_MEASURED_ETA_AVERAGES, rows).expect("static table is valid")
    }
}

/// Look up a built-in plate table by name.
pub fn builtin_table(name: &str) -> Option<PlateTable> {
    match name {
        BUILTIN_MEASURED_ETA_AVERAGES => Some(PlateTable::measured_eta_averages()),
        _ => None,
    }
}

/// How calibration rows map onto walk steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolMode {
    /// One table broadcasts its row at the requested voltage to every step.
    Uniform,
    /// Table k supplies the displacement plate of step k; needs at least as
    /// many tables as steps.
    PerPlate,
}

/// Build a `steps`-step protocol [CoinRotation, Displacement] x steps from
/// calibration tables at the requested voltage.
pub fn build_protocol(
    tables: &[PlateTable],
    voltage_label: &str,
    steps: usize,
    mode: ProtocolMode,
) -> Result<Protocol> {
    if tables.is_empty() {
        return Err(Error::InvalidTable("no plate tables given".into()));
    }
    // the requested voltage row must exist in every table up front
    for table in tables {
        if table.row(voltage_label).is_none() {
            return Err(Error::MissingVoltage {
                table: table.plate_id.clone(),
                voltage: voltage_label.to_string(),
            });
        }
    }
    if steps == 0 {
        return Ok(Protocol::empty());
    }
    let rows: Vec<&PlateRow> = match mode {
        ProtocolMode::Uniform => {
            if tables.len() != 1 {
                return Err(Error::InvalidTable(format!(
                    "uniform mode broadcasts a single table, got {}",
                    tables.len()
                )));
            }
            let row = tables[0].row(voltage_label).expect("checked above");
            vec![row; steps]
        }
        ProtocolMode::PerPlate => {
            if steps > tables.len() {
                return Err(Error::InvalidTable(format!(
                    "{steps} steps requested but only {} plate tables given",
                    tables.len()
                )));
            }
            tables[..steps]
                .iter()
                .map(|t| t.row(voltage_label).expect("checked above"))
                .collect()
        }
    };
    let mut plates = Vec::with_capacity(2 * steps);
    for row in rows {
        plates.push(PlateParams::coin_rotation());
        plates.push(PlateParams::displacement_with_attenuation(
            row.delta,
            row.eta,
            row.eta_prime,
        )?);
    }
    Protocol::from_plates(plates, steps)
}

/// Read plate tables from CSV with header
/// `plate_id,voltage_label,delta,eta,eta_prime`. Rows group by plate id in
/// first-appearance order.
pub fn read_plate_tables<R: Read>(reader: R) -> Result<Vec<PlateTable>> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let expected = ["plate_id", "voltage_label", "delta", "eta", "eta_prime"];
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::InvalidTable(format!(
            "bad header {:?}, expected {:?}",
            got.join(","),
            expected.join(",")
        )));
    }
    let mut order: Vec<String> = Vec::new();
    let mut grouped: Vec<Vec<PlateRow>> = Vec::new();
    for (line, record) in csv_reader.records().enumerate() {
        let record = record?;
        let row_no = line + 2; // header is line 1
        if record.len() != expected.len() {
            return Err(Error::InvalidTable(format!(
                "row {row_no}: {} fields, expected {}",
                record.len(),
                expected.len()
            )));
        }
        let parse = |idx: usize, name: &str| -> Result<f64> {
            record[idx].trim().parse::<f64>().map_err(|_| {
                Error::InvalidTable(format!(
                    "row {row_no}: cannot parse {name} '{}'",
                    &record[idx]
                ))
            })
        };
        let plate_id = record[0].trim().to_string();
        let row = PlateRow {
            voltage_label: record[1].trim().to_string(),
            delta: parse(2, "delta")?,
            eta: parse(3, "eta")?,
            eta_prime: parse(4, "eta_prime")?,
        };
        match order.iter().position(|id| *id == plate_id) {
            Some(idx) => grouped[idx].push(row),
            None => {
                order.push(plate_id);
                grouped.push(vec![row]);
            }
        }
    }
    if order.is_empty() {
        return Err(Error::InvalidTable("no data rows".into()));
    }
    order
        .into_iter()
        .zip(grouped)
        .map(|(id, rows)| PlateTable::new(id, rows))
        .collect()
}

/// Convenience wrapper over [`read_plate_tables`] for a filesystem path.
pub fn read_plate_tables_path(path: &Path) -> Result<Vec<PlateTable>> {
    let file = std::fs::File::open(path).map_err(|e| {
        Error::InvalidTable(format!("cannot open '{}': {e}", path.display()))
    })?;
    read_plate_tables(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::PlateKind;

    #[test]
    fn eta_zero_for_isotropic_absorption() {
        let s = CalibrationSample::new("v", 0.25, 0.25, 1.0).unwrap();
        assert_eq!(extract_eta(&s), 0.0);
    }

    #[test]
    fn eta_unity_analytic_point() {
        let s = CalibrationSample::new("v", 1.0, (-2.0f64).exp(), 1.0).unwrap();
        assert!((extract_eta(&s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eta_prime_lossless_and_analytic_points() {
        let lossless = CalibrationSample::new("v", 1.0, 1.0, 1.0).unwrap();
        assert_eq!(extract_eta_prime(&lossless).unwrap(), 0.0);

        let s = CalibrationSample::new("v", 1.0, (-2.0f64).exp(), 1.0).unwrap();
        assert!((extract_eta_prime(&s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn forward_model_round_trip() {
        let d = DEFAULT_THICKNESS_UM;
        for eta in [0.0, 0.13, 0.7, 2.0] {
            for eta_o in [0.0, 0.2, 1.0] {
                let alpha_o = eta_o / d;
                let alpha_e = (eta + eta_o) / d;
                let i0 = 1.7;
                let s = CalibrationSample::with_thickness(
                    "v",
                    (-2.0 * alpha_o * d).exp() * i0,
                    (-2.0 * alpha_e * d).exp() * i0,
                    i0,
                    d,
                )
                .unwrap();
                assert!((extract_eta(&s) - eta).abs() < 1e-12, "eta={eta} eta_o={eta_o}");
                let eta_prime = eta + 2.0 * eta_o;
                assert!(
                    (extract_eta_prime(&s).unwrap() - eta_prime).abs() < 1e-12,
                    "eta={eta} eta_o={eta_o}"
                );
            }
        }
    }

    #[test]
    fn eta_prime_never_below_eta_for_passive_samples() {
        for (i_ord, i_ext) in [(0.9, 0.5), (1.0, 1.0), (0.3, 0.29), (0.999, 0.001)] {
            let s = CalibrationSample::new("v", i_ord, i_ext, 1.0).unwrap();
            assert!(extract_eta_prime(&s).unwrap() >= extract_eta(&s) - 1e-12);
        }
    }

    #[test]
    fn inconsistent_input_power_is_flagged() {
        let s = CalibrationSample::new("v", 2.0, 1.5, 1.0).unwrap();
        assert!(matches!(extract_eta_prime(&s), Err(Error::InconsistentReference(_))));
    }

    #[test]
    fn nonpositive_intensity_rejected() {
        assert!(CalibrationSample::new("v", 0.0, 0.5, 1.0).is_err());
        assert!(CalibrationSample::new("v", 0.5, -0.1, 1.0).is_err());
        assert!(CalibrationSample::new("v", 0.5, 0.1, 0.0).is_err());
    }

    #[test]
    fn builtin_table_contents() {
        let t = PlateTable::measured_eta_averages();
        assert_eq!(t.plate_id(), BUILTIN_MEASURED_ETA_AVERAGES);
        assert_eq!(t.rows().len(), 6);
        assert_eq!(t.row("V1").unwrap().eta, 0.57);
        assert_eq!(t.row("V6").unwrap().eta, 0.13);
        for row in t.rows() {
            assert_eq!(row.delta, PI);
            assert_eq!(row.eta_prime, row.eta);
        }
        assert!(builtin_table("measured-eta-averages").is_some());
        assert!(builtin_table("nope").is_none());
    }

    #[test]
    fn uniform_protocol_from_builtin() {
        let t = PlateTable::measured_eta_averages();
        let p = build_protocol(&[t], "V1", 5, ProtocolMode::Uniform).unwrap();
        assert_eq!(p.steps(), 5);
        assert_eq!(p.plates().len(), 10);
        for step in p.step_slices() {
            assert_eq!(step[0].kind(), PlateKind::CoinRotation);
            assert_eq!(step[1].kind(), PlateKind::Displacement);
            assert_eq!(step[1].eta(), 0.57);
            assert_eq!(step[1].delta(), PI);
        }
    }

    #[test]
    fn zero_steps_gives_empty_protocol() {
        let t = PlateTable::measured_eta_averages();
        let p = build_protocol(&[t], "V3", 0, ProtocolMode::Uniform).unwrap();
        assert_eq!(p.steps(), 0);
        assert!(p.plates().is_empty());
    }

    fn toy_tables(n: usize) -> Vec<PlateTable> {
        (0..n)
            .map(|k| {
                PlateTable::new(
                    format!("gp{}", k + 1),
                    vec![PlateRow {
                        voltage_label: "V1".into(),
                        delta: PI,
                        eta: 0.1 * (k + 1) as f64,
                        eta_prime: 0.1 * (k + 1) as f64,
                    }],
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn per_plate_mode_orders_rows_by_plate() {
        let tables = toy_tables(5);
        let p = build_protocol(&tables, "V1", 5, ProtocolMode::PerPlate).unwrap();
        for (k, step) in p.step_slices().enumerate() {
            assert!((step[1].eta() - 0.1 * (k + 1) as f64).abs() < 1e-15);
        }
        assert!(build_protocol(&tables, "V1", 6, ProtocolMode::PerPlate).is_err());
    }

    #[test]
    fn missing_voltage_is_reported() {
        let tables = toy_tables(2);
        match build_protocol(&tables, "V9", 2, ProtocolMode::PerPlate) {
            Err(Error::MissingVoltage { table, voltage }) => {
                assert_eq!(table, "gp1");
                assert_eq!(voltage, "V9");
            }
            other => panic!("expected missing voltage, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_and_grouping() {
        let csv = "plate_id,voltage_label,delta,eta,eta_prime\n\
                   gp1,V1,3.14159,0.67,0.67\n\
                   gp2,V1,3.14159,0.83,0.83\n\
                   gp1,V2,3.14159,0.55,0.55\n";
        let tables = read_plate_tables(csv.as_bytes()).unwrap();
        assert_eq!(tables.len(), 2);
        assert_eq!(tables[0].plate_id(), "gp1");
        assert_eq!(tables[0].rows().len(), 2);
        assert_eq!(tables[1].plate_id(), "gp2");
        assert!((tables[0].row("V2").unwrap().eta - 0.55).abs() < 1e-15);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        let bad_header = "plate,voltage_label,delta,eta,eta_prime\ngp1,V1,3.14,0.5,0.5\n";
        assert!(read_plate_tables(bad_header.as_bytes()).is_err());

        let bad_float = "plate_id,voltage_label,delta,eta,eta_prime\ngp1,V1,3.14,x,0.5\n";
        assert!(matches!(
            read_plate_tables(bad_float.as_bytes()),
            Err(Error::InvalidTable(msg)) if msg.contains("row 2")
        ));

        let dup = "plate_id,voltage_label,delta,eta,eta_prime\n\
                   gp1,V1,3.14,0.5,0.5\ngp1,V1,3.14,0.6,0.6\n";
        assert!(read_plate_tables(dup.as_bytes()).is_err());

        let negative = "plate_id,voltage_label,delta,eta,eta_prime\ngp1,V1,3.14,-0.5,0.5\n";
        assert!(read_plate_tables(negative.as_bytes()).is_err());

        let empty = "plate_id,voltage_label,delta,eta,eta_prime\n";
        assert!(read_plate_tables(empty.as_bytes()).is_err());
    }
}
