//! Punycode codec (RFC 3492) for `xn--` domain labels.
//!
//! Hand-rolled on purpose: the toolkit needs the bare RFC 3492 transform —
//! decode exactly what is on the wire — without the IDNA mapping layer
//! (case folding, dot normalization, validity profiles) that full IDNA
//! libraries add on top and that would change comparison semantics.
//! Errors are reported as plain strings; the datagen module wraps them
//! with the offending label.

const BASE: u32 = 36;
const TMIN: u32 = 1;
const TMAX: u32 = 26;
const SKEW: u32 = 38;
const DAMP: u32 = 700;
const INITIAL_BIAS: u32 = 72;
const INITIAL_N: u32 = 128;

/// Bias adaptation after each delta (RFC 3492 §6.1).
fn adapt(delta: u32, num_points: u32, first_time: bool) -> u32 {
    let mut delta = if first_time { delta / DAMP } else { delta / 2 };
    delta += delta / num_points;
    let mut k = 0;
    while delta > ((BASE - TMIN) * TMAX) / 2 {
        delta /= BASE - TMIN;
        k += BASE;
    }
    k + ((BASE - TMIN + 1) * delta) / (delta + SKEW)
}

fn digit_value(c: char) -> Option<u32> {
    match c {
        'a'..='z' => Some(c as u32 - 'a' as u32),
        'A'..='Z' => Some(c as u32 - 'A' as u32),
        '0'..='9' => Some(c as u32 - '0' as u32 + 26),
        _ => None,
    }
}

fn digit_char(d: u32) -> char {
    debug_assert!(d < BASE);
    if d < 26 {
        (b'a' + d as u8) as char
    } else {
        (b'0' + (d - 26) as u8) as char
    }
}

/// Decodes the content of an `xn--` label (the part after the prefix).
pub fn decode(input: &str) -> Result<String, String> {
    let (mut output, extended): (Vec<char>, &str) = match input.rfind('-') {
        Some(pos) => {
            let basic = &input[..pos];
            if !basic.is_ascii() {
                return Err("basic code points must be ASCII".into());
            }
            (basic.chars().collect(), &input[pos + 1..])
        }
        None => (Vec::new(), input),
    };
    if extended.is_empty() {
        return Err("no extended code points after the delimiter".into());
    }
    let ext: Vec<char> = extended.chars().collect();
    let mut n = INITIAL_N;
    let mut i: u32 = 0;
    let mut bias = INITIAL_BIAS;
    let mut pos = 0;
    while pos < ext.len() {
        let old_i = i;
        let mut w: u32 = 1;
        let mut k = BASE;
        loop {
            let c = *ext
                .get(pos)
                .ok_or_else(|| "truncated variable-length integer".to_string())?;
            pos += 1;
            let digit = digit_value(c).ok_or_else(|| format!("invalid digit {c:?}"))?;
            i = digit
                .checked_mul(w)
                .and_then(|dw| i.checked_add(dw))
                .ok_or_else(|| "integer overflow".to_string())?;
            let t = if k <= bias {
                TMIN
            } else if k >= bias + TMAX {
                TMAX
            } else {
                k - bias
            };
            if digit < t {
                break;
            }
            w = w
                .checked_mul(BASE - t)
                .ok_or_else(|| "integer overflow".to_string())?;
            k += BASE;
        }
        let len_plus_one = output.len() as u32 + 1;
        bias = adapt(i - old_i, len_plus_one, old_i == 0);
        n = n
            .checked_add(i / len_plus_one)
            .ok_or_else(|| "integer overflow".to_string())?;
        i %= len_plus_one;
        let ch = char::from_u32(n).ok_or_else(|| format!("invalid scalar value {n:#x}"))?;
        output.insert(i as usize, ch);
        i += 1;
    }
    Ok(output.into_iter().collect())
}

/// Encodes a Unicode label into the form that follows `xn--`.
///
/// Inverse of [`decode`] for any label containing at least one non-ASCII
/// scalar; used by tests and corpus tooling.
pub fn encode(input: &str) -> Result<String, String> {
    let scalars: Vec<u32> = input.chars().map(|c| c as u32).collect();
    let mut output: String = input.chars().filter(char::is_ascii).collect();
    let basic_len = output.chars().count() as u32;
    if basic_len > 0 {
        output.push('-');
    }
    let mut n = INITIAL_N;
    let mut delta: u32 = 0;
    let mut bias = INITIAL_BIAS;
    let mut handled = basic_len;
    let total = scalars.len() as u32;
    while handled < total {
        let m = scalars
            .iter()
            .copied()
            .filter(|&c| c >= n)
            .min()
            .expect("an unhandled scalar exists");
        delta = (m - n)
            .checked_mul(handled + 1)
            .and_then(|d| delta.checked_add(d))
            .ok_or_else(|| "integer overflow".to_string())?;
        n = m;
        for &c in &scalars {
            if c < n {
                delta = delta.checked_add(1).ok_or_else(|| "integer overflow".to_string())?;
            }
            if c == n {
                let mut q = delta;
                let mut k = BASE;
                loop {
                    let t = if k <= bias {
                        TMIN
                    } else if k >= bias + TMAX {
                        TMAX
                    } else {
                        k - bias
                    };
                    if q < t {
                        break;
                    }
                    output.push(digit_char(t + (q - t) % (BASE - t)));
                    q = (q - t) / (BASE - t);
                    k += BASE;
                }
                output.push(digit_char(q));
                bias = adapt(delta, handled + 1, handled == basic_len);
                delta = 0;
                handled += 1;
            }
        }
        delta += 1;
        n += 1;
    }
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_known_labels() {
        assert_eq!(decode("ggle-0qaa").unwrap(), "gõõgle");
        assert_eq!(decode("bcher-kva").unwrap(), "bücher");
        assert_eq!(decode("nxasmq6b").unwrap(), "βόλοσ");
        assert_eq!(decode("78jc3dwa").unwrap(), "びじねす");
    }

    #[test]
    fn encodes_known_labels() {
        assert_eq!(encode("gõõgle").unwrap(), "ggle-0qaa");
        assert_eq!(encode("bücher").unwrap(), "bcher-kva");
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(decode("ggle-0q!a").is_err(), "invalid digit");
        assert!(decode("ggle-").is_err(), "empty extended part");
        assert!(decode("ggle-0").is_err(), "truncated integer");
        assert!(decode("-9999999999").is_err(), "overflow");
    }

    proptest! {
        #[test]
        fn round_trips_mixed_labels(
            ascii in "[a-z0-9]{0,8}",
            extras in proptest::collection::vec(0xA0u32..0x2FF, 1..6),
        ) {
            // Interleave some non-ASCII scalars into the ASCII base.
            let mut label: Vec<char> = ascii.chars().collect();
            for (i, cp) in extras.iter().enumerate() {
                let c = char::from_u32(*cp).unwrap();
                let pos = (i * 7) % (label.len() + 1);
                label.insert(pos, c);
            }
            let label: String = label.into_iter().collect();
            let encoded = encode(&label).unwrap();
            prop_assert!(encoded.is_ascii());
            prop_assert_eq!(decode(&encoded).unwrap(), label);
        }
    }
}
