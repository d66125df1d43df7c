use std::io::BufRead;

use crate::error::{Error, Result};

/// Reads one whitespace-delimited header token of a netpbm-style file, skipping `#`
/// comments. Consumes exactly one whitespace byte after the token.
pub(crate) fn token<R: BufRead>(r: &mut R, format: &'static str) -> Result<String> {
    let mut tok = Vec::new();
    let mut in_comment = false;
    loop {
        let mut byte = [0u8; 1];
        if r.read(&mut byte)? == 0 {
            if tok.is_empty() {
                return Err(Error::format(format, "unexpected end of header"));
            }
            break;
        }
        let b = byte[0];
        if in_comment {
            in_comment = b != b'\n';
            continue;
        }
        if b == b'#' && tok.is_empty() {
            in_comment = true;
            continue;
        }
        if b.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(b);
        if tok.len() > 64 {
            return Err(Error::format(format, "header token too long"));
        }
    }
    String::from_utf8(tok).map_err(|_| Error::format(format, "non-ascii header"))
}

pub(crate) fn number<R: BufRead, T: std::str::FromStr>(
    r: &mut R,
    format: &'static str,
    what: &str,
) -> Result<T> {
    let t = token(r, format)?;
    t.parse()
        .map_err(|_| Error::format(format, format!("bad {what} `{t}`")))
}
