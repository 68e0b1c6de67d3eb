//! CSV output: UTF-8, header row, `.` decimals, 12 significant digits.

use std::io::{self, Write};

/// One output record: a sweep point with analytic and simulated VE.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultRow {
    pub scenario_id: String,
    pub sweep_param: String,
    pub sweep_value: String,
    pub target_ve: Option<f64>,
    /// `1 - delta`: the asymptomatic-vs-symptomatic SAR reduction.
    pub one_minus_delta: Option<f64>,
    /// Vaccinated/unvaccinated transmission ratio at fixed symptom status,
    /// or the daily-hazard ratio under the duration model.
    pub nu: Option<f64>,
    pub actual_ve_analytic: Option<f64>,
    pub actual_ve_mc: Option<f64>,
    pub mc_se: Option<f64>,
    pub true_ve_mc: Option<f64>,
    pub n_units: u64,
    pub excluded_no_index: u64,
    pub excluded_coprimary: u64,
    pub excluded_no_contacts: u64,
    pub status: String,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "scenario_id",
    "sweep_param",
    "sweep_value",
    "target_ve",
    "one_minus_delta",
    "nu",
    "actual_ve_analytic",
    "actual_ve_mc",
    "mc_se",
    "true_ve_mc",
    "n_units",
    "excluded_no_index",
    "excluded_coprimary",
    "excluded_no_contacts",
    "status",
];

/// `printf("%.12g")`.
pub fn format_g12(x: f64) -> String {
    const PREC: i32 = 12;
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PREC).contains(&exp) {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PREC - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_g12).unwrap_or_default()
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ResultRow {
    fn fields(&self) -> [String; 15] {
        [
            field(&self.scenario_id),
            field(&self.sweep_param),
            field(&self.sweep_value),
            opt(self.target_ve),
            opt(self.one_minus_delta),
            opt(self.nu),
            opt(self.actual_ve_analytic),
            opt(self.actual_ve_mc),
            opt(self.mc_se),
            opt(self.true_ve_mc),
            self.n_units.to_string(),
            self.excluded_no_index.to_string(),
            self.excluded_coprimary.to_string(),
            self.excluded_no_contacts.to_string(),
            field(&self.status),
        ]
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{}", CSV_COLUMNS.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.fields().join(","))?;
    }
    w.flush()
}

pub fn to_csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_matches_printf() {
        let cases = [
            (0.4, "0.4"),
            (1.0 / 3.0, "0.333333333333"),
            (0.5365384615384616, "0.536538461538"),
            (100.0, "100"),
            (-2.5, "-2.5"),
            (1e-5, "1e-05"),
            (0.0001234, "0.0001234"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (9.99999999999995, "10"),
            (-0.0, "0"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g12(x), want, "{x}");
        }
    }

    #[test]
    fn header_only_for_no_rows() {
        let s = to_csv_string(&[]);
        assert_eq!(s.lines().count(), 1);
        assert!(s.starts_with("scenario_id,sweep_param"));
    }

    #[test]
    fn quoting_and_blanks() {
        let row = ResultRow {
            scenario_id: "a,b".into(),
            status: "degenerate: \"x\"".into(),
            target_ve: Some(0.5),
            ..ResultRow::default()
        };
        let s = to_csv_string(&[row]);
        let line = s.lines().nth(1).unwrap();
        assert!(line.starts_with("\"a,b\",,,0.5,,"));
        assert!(line.ends_with("\"degenerate: \"\"x\"\"\""));
    }
}
