//! Number formatting and CSV output for curves.

use std::io::Write;

use crate::twofail::CurveRow;

/// Formats like C's `%.12g`: twelve significant digits, trailing zeros
/// dropped, scientific notation outside `1e-4 ≤ |x| < 1e12`.
pub fn fmt_g12(x: f64) -> String {
    const P: i32 = 12;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes a curve with header `<theta_name>,p_f,p_fidp`.
pub fn write_curve_csv<W: Write>(out: W, theta_name: &str, rows: &[CurveRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record([theta_name, "p_f", "p_fidp"])?;
    for r in rows {
        w.write_record([fmt_g12(r.theta), fmt_g12(r.p_f), fmt_g12(r.p_fidp)])?;
    }
    w.flush()?;
    Ok(())
}
