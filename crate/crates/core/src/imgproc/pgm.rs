use super::Image;
use crate::error::{Error, Result};

const FMT: &str = "PGM";

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn uint(&mut self, what: &str) -> Result<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(FMT, format!("expected {what} at byte {start}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(FMT, format!("{what} out of range")))
    }
}

/// Decodes a binary (`P5`) or ASCII (`P2`) PGM, rescaling intensities to a
/// maxval of 255 with round-half-up.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(Error::format(FMT, "unknown magic number (expected P5 or P2)")),
    };
    let mut hdr = Header { bytes, pos: 2 };
    let width = hdr.uint("width")? as usize;
    let height = hdr.uint("height")? as usize;
    let maxval = hdr.uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(FMT, format!("zero dimension {width}x{height}")));
    }
    if !(1..=255).contains(&maxval) {
        return Err(Error::format(FMT, format!("maxval {maxval} outside [1, 255]")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::format(FMT, "dimensions overflow"))?;

    let mut raw = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the payload
        match bytes.get(hdr.pos) {
            Some(c) if c.is_ascii_whitespace() => hdr.pos += 1,
            _ => return Err(Error::format(FMT, "missing whitespace after maxval")),
        }
        let payload = &bytes[hdr.pos..];
        if payload.len() < n {
            return Err(Error::format(FMT, format!("truncated payload: {} of {n} bytes", payload.len())));
        }
        raw.extend_from_slice(&payload[..n]);
    } else {
        for i in 0..n {
            let v = hdr.uint("pixel").map_err(|_| {
                Error::format(FMT, format!("truncated payload: {i} of {n} samples"))
            })?;
            if v > 255 {
                return Err(Error::format(FMT, format!("sample {v} exceeds 8-bit range")));
            }
            raw.push(v as u8);
        }
    }

    let m = maxval as u32;
    if let Some(&bad) = raw.iter().find(|&&p| p as u32 > m) {
        return Err(Error::format(FMT, format!("sample {bad} exceeds maxval {maxval}")));
    }
    if m != 255 {
        for p in &mut raw {
            *p = ((*p as u32 * 255 * 2 + m) / (2 * m)) as u8;
        }
    }
    Image::new(width, height, raw)
}

/// Encodes with maxval 255 as `P5` when `binary`, else `P2`.
pub fn encode_pgm(img: &Image, binary: bool) -> Vec<u8> {
    let magic = if binary { "P5" } else { "P2" };
    let mut out = format!("{magic} {} {} 255\n", img.width(), img.height()).into_bytes();
    if binary {
        out.extend_from_slice(img.data());
    } else {
        for row in img.data().chunks(img.width()) {
            let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_binary_identity_maxval() {
        let img = decode_pgm(b"P5 1 1 255\n\x80").unwrap();
        assert_eq!((img.width(), img.height()), (1, 1));
        assert_eq!(img.data(), &[128]);
    }

    #[test]
    fn decodes_ascii() {
        let img = decode_pgm(b"P2 2 1 255\n0 255").unwrap();
        assert_eq!(img.data(), &[0, 255]);
    }

    #[test]
    fn rescales_maxval_half_up() {
        // 50 * 255 / 100 = 127.5
        let img = decode_pgm(b"P5 1 1 100\n\x32").unwrap();
        assert_eq!(img.data(), &[128]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let img = decode_pgm(b"P2\n# made by hand\n2 1\n# max\n255\n7 9\n").unwrap();
        assert_eq!(img.data(), &[7, 9]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(decode_pgm(b"P6 1 1 255\n\x00").is_err());
        assert!(decode_pgm(b"P5 1 1 256\n\x00").is_err());
        assert!(decode_pgm(b"P5 1 1 0\n\x00").is_err());
        assert!(decode_pgm(b"P5 2 2 255\n\x00\x01\x02").is_err());
        assert!(decode_pgm(b"P5 0 2 255\n").is_err());
        assert!(decode_pgm(b"P2 2 1 255\n0").is_err());
        assert!(decode_pgm(b"P5 1 1 100\n\x65").is_err());
        assert!(decode_pgm(b"").is_err());
    }

    #[test]
    fn encodes_zero_pixel() {
        let img = Image::filled(1, 1, 0).unwrap();
        assert_eq!(encode_pgm(&img, true), b"P5 1 1 255\n\x00");
    }

    #[test]
    fn binary_payload_is_row_major() {
        let img = Image::new(2, 2, vec![1, 2, 3, 4]).unwrap();
        let bytes = encode_pgm(&img, true);
        assert_eq!(&bytes[bytes.len() - 4..], &[1, 2, 3, 4]);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            (w, h, data) in (1usize..20, 1usize..20)
                .prop_flat_map(|(w, h)| (Just(w), Just(h), prop::collection::vec(any::<u8>(), w * h))),
            binary in any::<bool>(),
        ) {
            let img = Image::new(w, h, data).unwrap();
            let back = decode_pgm(&encode_pgm(&img, binary)).unwrap();
            prop_assert_eq!(back, img);
        }
    }
}
