//! Value parsers for the command line and the key-value config file.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

/// Parses `a`, `bj`, `a+bj` or `a-bj`. A bare `j` means `1j`.
pub fn complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read {s:?} as a complex number (expected a+bj)");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix(['j', 'i']) else {
        return t
            .parse()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(|_| bad());
    };
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse().map_err(|_| bad())?,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

pub fn complex_list(s: &str) -> Result<Vec<Complex64>, String> {
    s.split(',').map(complex).collect()
}

/// Rows separated by `;`, entries by `,`.
pub fn complex_matrix(s: &str) -> Result<Vec<Vec<Complex64>>, String> {
    s.split(';').map(complex_list).collect()
}

pub fn int_list(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("bad integer {x:?}")))
        .collect()
}

/// `start:step:stop` (inclusive) or a comma-separated list of dB values.
pub fn snr_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number {x:?}"))
    };
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(step > 0.0) || stop < start {
                return Err(format!("empty SNR range {s:?}"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(format!(
            "bad SNR grid {s:?} (use start:step:stop or a list)"
        )),
    }
}

/// Reads `key = value` lines into flag form. Blank lines and `#` comments
/// are skipped; `true`/`false` toggle switches.
pub fn config_args(path: &Path) -> Result<Vec<String>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut args = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key = value", path.display(), n + 1))?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        match value.trim() {
            "true" => args.push(flag),
            "false" => {}
            v => {
                args.push(flag);
                args.push(v.to_string());
            }
        }
    }
    Ok(args)
}
