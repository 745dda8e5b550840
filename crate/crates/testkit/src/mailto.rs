//! Hand-written `mailto:` decoder.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub recipients: Vec<String>,
    pub subject: String,
    pub body: String,
}

fn hex(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'A'..=b'F' => Some(b - b'A' + 10),
        b'a'..=b'f' => Some(b - b'a' + 10),
        _ => None,
    }
}

/// Percent-decodes `s`, rejecting malformed escapes and any byte that
/// should have been escaped.
pub fn percent_decode(s: &str) -> Result<String, String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'%' {
            let hi = bytes.get(i + 1).copied().and_then(hex);
            let lo = bytes.get(i + 2).copied().and_then(hex);
            match (hi, lo) {
                (Some(h), Some(l)) => out.push(h * 16 + l),
                _ => return Err(format!("bad escape at {i}")),
            }
            i += 3;
        } else if b.is_ascii_alphanumeric() || b"-._~@".contains(&b) {
            out.push(b);
            i += 1;
        } else {
            return Err(format!("unescaped byte {b:#04x} at {i}"));
        }
    }
    String::from_utf8(out).map_err(|e| e.to_string())
}

pub fn decode(url: &str) -> Result<Decoded, String> {
    let rest = url.strip_prefix("mailto:").ok_or("missing mailto: scheme")?;
    let (to, query) = rest.split_once('?').ok_or("missing query")?;
    let recipients = to
        .split(',')
        .filter(|s| !s.is_empty())
        .map(percent_decode)
        .collect::<Result<Vec<_>, _>>()?;
    let mut subject = None;
    let mut body = None;
    for pair in query.split('&') {
        let (k, v) = pair.split_once('=').ok_or("field without `=`")?;
        let v = percent_decode(v)?;
        match k {
            "subject" => subject = Some(v),
            "body" => body = Some(v),
            other => return Err(format!("unexpected field {other}")),
        }
    }
    Ok(Decoded {
        recipients,
        subject: subject.ok_or("no subject")?,
        body: body.ok_or("no body")?,
    })
}
