use crate::CliError;

/// Inclusive `start:stop:step` range, or a single value; grid values are rounded to 12 significant digits.
pub fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::Usage(format!("'{s}' is not a finite number in '{text}'")))
    };
    match parts[..] {
        [one] => Ok(vec![num(one)?]),
        [a, b, c] => {
            let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
            if !(step > 0.0) {
                return Err(CliError::Usage(format!("range step must be positive in '{text}'")));
            }
            if stop < start {
                return Err(CliError::Usage(format!("empty range '{text}'")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if n > 10_000_000 {
                return Err(CliError::Usage(format!("range '{text}' has too many points")));
            }
            Ok((0..n).map(|i| round_sig(start + step * i as f64).unwrap_or(stop)).collect())
        }
        _ => Err(CliError::Usage(format!("expected a value or start:stop:step, got '{text}'"))),
    }
}

/// Shortest decimal of `x` rounded to 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    match round_sig(x) {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

pub fn round_sig(x: f64) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    if x == 0.0 {
        return Some(0.0);
    }
    format!("{x:.11e}").parse::<f64>().ok()
}

pub fn json_num(x: Option<f64>) -> serde_json::Value {
    x.and_then(round_sig)
        .and_then(serde_json::Number::from_f64)
        .map_or(serde_json::Value::Null, serde_json::Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0.01:1.0:0.01").unwrap().len(), 100);
        assert_eq!(parse_range("0.5:1.0:0.005").unwrap().len(), 101);
        assert_eq!(parse_range("7").unwrap(), vec![7.0]);
        assert_eq!(parse_range("1:1:0.5").unwrap(), vec![1.0]);
        assert_eq!(parse_range("0.1:1:0.3").unwrap(), vec![0.1, 0.4, 0.7, 1.0]);
        for bad in ["1:0:0.1", "0:1:0", "0:1:-1", "a", "1:2", "nan", "0:inf:1"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn formatting() {
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(123456789.1234567), "123456789.123");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(f64::INFINITY), "");
        assert_eq!(json_num(Some(2.5)).to_string(), "2.5");
        assert!(json_num(None).is_null());
    }
}
