//! Stable float formatting for CSV and JSON output.

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest text for `x` after rounding to 12 significant digits.
///
/// Plain decimal notation is used for moderate magnitudes and exponent
/// notation elsewhere; non-finite values print as `nan`, `inf`, `-inf`.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round12(x);
    let a = r.abs();
    if r == 0.0 {
        "0".into()
    } else if (1e-5..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Rounds every float inside a JSON value to 12 significant digits.
pub fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round12).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(sig12(150.0), "150");
        assert_eq!(sig12(0.1 + 0.2), "0.3");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(-2.5e-9), "-2.5e-9");
        assert_eq!(sig12(6.02214076e23), "6.02214076e23");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(f64::NAN), "nan");
    }

    #[test]
    fn rounding_is_idempotent() {
        for x in [std::f64::consts::PI, 1e-300, 123456789.123456789, -0.000123] {
            assert_eq!(round12(round12(x)), round12(x));
            assert_eq!(sig12(x).parse::<f64>().unwrap(), round12(x));
        }
    }
}
