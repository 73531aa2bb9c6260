//! Exact text round-tripping of `f64` as C99-style hex floats,
//! e.g. `0x1.152aaa3bf81ccp-3`.

/// Formats `x` exactly. Infinities are written `inf`/`-inf`, NaN as `nan`.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x == 0.0 {
        return format!("{sign}0x0p+0");
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let mut mant = bits & ((1u64 << 52) - 1);
    let (lead, exp) = if biased == 0 {
        (0, -1022)
    } else {
        (1, biased - 1023)
    };
    if mant == 0 {
        return format!("{sign}0x{lead}p{exp:+}");
    }
    let mut digits = 13;
    while mant & 0xf == 0 {
        mant >>= 4;
        digits -= 1;
    }
    format!("{sign}0x{lead}.{mant:0digits$x}p{exp:+}")
}

/// Parses hex floats, decimal floats, `inf` and `nan`.
pub fn parse_f64(s: &str) -> Option<f64> {
    let s = s.trim();
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) else {
        return s.parse().ok();
    };
    let (mantissa, exp) = match hex.find(['p', 'P']) {
        Some(i) => (&hex[..i], hex[i + 1..].parse::<i32>().ok()?),
        None => (hex, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    // Accumulate into u64; extra digits beyond 15 must be zero for exactness.
    let mut value: u64 = 0;
    let mut shift: i32 = 0;
    let mut used = 0;
    for (k, c) in int_part.chars().chain(frac_part.chars()).enumerate() {
        let d = c.to_digit(16)? as u64;
        if used < 15 {
            value = value * 16 + d;
            used += 1;
            if k >= int_part.len() {
                shift -= 4;
            }
        } else {
            if d != 0 {
                return None;
            }
            if k < int_part.len() {
                shift += 4;
            }
        }
    }
    let x = value as f64 * 2f64.powi(shift) * pow2(exp);
    Some(if neg { -x } else { x })
}

// 2^e without intermediate overflow/underflow for subnormal-range results.
fn pow2(e: i32) -> f64 {
    if e > 1023 {
        2f64.powi(1023) * 2f64.powi(e - 1023)
    } else if e < -1022 {
        2f64.powi(-1022) * 2f64.powi(e + 1022)
    } else {
        2f64.powi(e)
    }
}
