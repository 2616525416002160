//! Deterministic text formatting for CSV output.

use sdm_core::sdm::SweepRow;

pub const SWEEP_HEADER: &str = "freq_hz,probe_id,re_pa,im_pa,spl_db,status";

/// Fixed decimal notation with 17 significant digits. Non-finite values
/// print as `nan`, `inf` or `-inf`.
pub fn fixed17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return format!("{:.16}", 0.0);
    }
    // The exponent comes from the rounded scientific form, so 9.99...e-1
    // rounding up to 1.0e0 shifts the decimal count correctly.
    let sci = format!("{x:.16e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).expect("scientific float format");
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::with_capacity(96 * (rows.len() + 1));
    s.push_str(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let f = fixed17(r.f);
        match &r.value {
            Ok((p, spl)) => {
                s.push_str(&format!("{f},{},{},{},{},ok\n", r.probe_id, fixed17(p.re), fixed17(p.im), fixed17(*spl)));
            }
            Err(_) => s.push_str(&format!("{f},{},,,,error\n", r.probe_id)),
        }
    }
    s
}
