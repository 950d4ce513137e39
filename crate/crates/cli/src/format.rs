use std::fmt::Write;

/// `x` rounded to `n` significant figures, without exponent notation.
pub fn sig(x: f64, n: i32) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(mag - n + 1);
    let rounded = (x / scale).round() * scale;
    // Rounding may carry into the next decade (e.g. 99.96 → 100).
    let mag = rounded.abs().log10().floor() as i32;
    let decimals = (n - 1 - mag).max(0) as usize;
    format!("{rounded:.decimals$}")
}

/// Fixed-point with `decimals` places; never prints a negative zero.
pub fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_owned(),
        _ => s,
    }
}

/// dB value with two decimals.
pub fn db(x: f64) -> String {
    fixed(x, 2)
}

/// Left-aligned first column, right-aligned others.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "  {c:>w$}");
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header);
    for r in rows {
        let cells: Vec<&str> = r.iter().map(String::as_str).collect();
        line(&cells);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_figures() {
        assert_eq!(sig(138.34, 3), "138");
        assert_eq!(sig(138.34, 2), "140");
        assert_eq!(sig(569.24, 3), "569");
        assert_eq!(sig(0.998254, 3), "0.998");
        assert_eq!(sig(2.9566, 3), "2.96");
        assert_eq!(sig(99.96, 3), "100");
        assert_eq!(sig(-0.0123, 2), "-0.012");
    }

    #[test]
    fn db_format() {
        assert_eq!(db(-12.8812), "-12.88");
        assert_eq!(db(-0.001), "0.00");
        assert_eq!(db(0.0), "0.00");
        assert_eq!(fixed(-0.00001, 4), "0.0000");
        assert_eq!(fixed(-0.5, 1), "-0.5");
    }

    #[test]
    fn table_alignment() {
        let t = table(&["a", "value"], &[vec!["long name".into(), "1".into()]]);
        assert_eq!(t, "a          value\nlong name      1\n");
    }
}
