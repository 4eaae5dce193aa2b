//! Byte-level entry points for every decoder, shared by the fuzz targets and
//! the corpus replay test. Each accepts arbitrary input; rejecting it with an
//! error is fine, panicking is a bug.

use num_complex::Complex64;

use crate::cubature::CubatureJson;
use crate::index::MultiIndex;
use crate::jacobi::ZeroSetJson;
use crate::momentrec::{laurent_coefficients, parse_point, rational_eval, LevelReport};
use crate::moments::MomentTable;
use crate::orthopoly::RecurrenceJson;
use crate::weight::WeightDescriptor;

/// Weight descriptor grammar; accepted descriptors must survive a
/// display/parse round trip.
pub fn weight_descriptor(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(w) = text.parse::<WeightDescriptor>() {
        let again: WeightDescriptor = w.to_string().parse().expect("displayed descriptor parses");
        assert_eq!(w, again);
    }
}

/// Moment table JSON; an accepted table must answer every moment it lists
/// and round-trip through `to_table`.
pub fn moment_table(data: &[u8]) {
    let Ok(table) = serde_json::from_slice::<MomentTable>(data) else { return };
    let Ok(provider) = table.clone().into_provider() else { return };
    for e in &table.entries {
        assert_eq!(provider.moment(&e.alpha).expect("listed moment"), e.value);
    }
    let mut beyond = vec![0; table.d];
    beyond[0] = table.max_degree as u32 + 1;
    assert!(provider.moment(&MultiIndex::new(beyond)).is_err());
    let back = provider.to_table(table.max_degree).expect("complete table");
    assert_eq!(back.entries.len(), table.entries.len());
}

/// Recurrence JSON; an accepted recurrence must evaluate at a point.
pub fn recurrence(data: &[u8]) {
    let Ok(js) = serde_json::from_slice::<RecurrenceJson>(data) else { return };
    let Ok(rec) = js.into_recurrence(1e-10) else { return };
    let z: Vec<Complex64> = (0..rec.dim).map(|i| Complex64::new(0.25 + 0.1 * i as f64, -0.5)).collect();
    let vals = rec.evaluate_recursive(&z);
    assert_eq!(vals.len(), rec.degree + 2);
    let _ = serde_json::to_string(&RecurrenceJson::from(&rec)).expect("serializes");
}

/// Zero-set JSON; the first byte selects the dimension (1 to 4).
pub fn zero_set(data: &[u8]) {
    let Some((&first, rest)) = data.split_first() else { return };
    let d = 1 + (first % 4) as usize;
    let Ok(js) = serde_json::from_slice::<ZeroSetJson>(rest) else { return };
    let Ok(zs) = js.into_zero_set(d) else { return };
    assert!(zs.points.iter().all(|p| p.z.len() == d));
    assert!(zs.points.len() <= zs.expected);
    let _ = serde_json::to_string(&ZeroSetJson::from(&zs)).expect("serializes");
}

/// Cubature-rule JSON; an accepted rule must integrate and print.
pub fn cubature(data: &[u8]) {
    let Ok(js) = serde_json::from_slice::<CubatureJson>(data) else { return };
    let Ok(rule) = js.into_rule() else { return };
    let _ = rule.weight_sum();
    let _ = rule.integrate(|z| z.iter().sum());
    let text = rule.to_text();
    assert_eq!(text.lines().count(), rule.len() + 2);
    let rule = rule.sorted();
    let _ = serde_json::to_string(&CubatureJson::from(&rule)).expect("serializes");
}

/// Stored convergent level; an accepted level must evaluate or report a pole.
pub fn level_report(data: &[u8]) {
    let Ok(report) = serde_json::from_slice::<LevelReport>(data) else { return };
    let Ok(g) = report.into_exponential() else { return };
    let z: Vec<Complex64> = (0..g.dim()).map(|i| Complex64::new(3.0 + i as f64, 0.5)).collect();
    let _ = rational_eval(&g, &z);
    if g.nodes.len() <= 64 {
        let _ = laurent_coefficients(&g, 2);
    }
}

/// Evaluation point syntax `re+imi,...`; accepted points are finite.
pub fn point(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(z) = parse_point(text) {
        assert!(!z.is_empty());
        assert!(z.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
    }
}
