//! TCP framing.
//!
//! A frame is a 4-byte big-endian length, then a 12-byte header
//! `{comm_id, tag, src}` (each `u32` big-endian), then the payload. The
//! length counts the header and the payload. Payload elements are
//! little-endian.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};

pub const HEADER_LEN: usize = 12;

/// Largest accepted frame body.
pub const MAX_FRAME: usize = 1 << 30;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub comm_id: u32,
    pub tag: u32,
    pub src: u32,
    pub payload: Vec<u8>,
}

pub fn encode_frame(comm_id: u32, tag: u32, src: u32, payload: &[u8]) -> Vec<u8> {
    let body = HEADER_LEN + payload.len();
    let mut out = Vec::with_capacity(4 + body);
    out.extend_from_slice(&(body as u32).to_be_bytes());
    out.extend_from_slice(&comm_id.to_be_bytes());
    out.extend_from_slice(&tag.to_be_bytes());
    out.extend_from_slice(&src.to_be_bytes());
    out.extend_from_slice(payload);
    out
}

pub fn write_frame(w: &mut impl Write, comm_id: u32, tag: u32, src: u32, payload: &[u8]) -> io::Result<()> {
    w.write_all(&encode_frame(comm_id, tag, src, payload))
}

/// Reads one frame; `None` on a clean end of stream between frames.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Frame>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let body = u32::from_be_bytes(len) as usize;
    if !(HEADER_LEN..=MAX_FRAME).contains(&body) {
        return Err(Error::Frame(format!("frame length {body}")));
    }
    let mut buf = vec![0u8; body];
    r.read_exact(&mut buf)?;
    let word = |i: usize| u32::from_be_bytes(buf[i..i + 4].try_into().expect("4 bytes"));
    let (comm_id, tag, src) = (word(0), word(4), word(8));
    buf.drain(..HEADER_LEN);
    Ok(Some(Frame { comm_id, tag, src, payload: buf }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::encode;

    #[test]
    fn layout_is_bit_exact() {
        let bytes = encode_frame(0x0102_0304, 0x8000_0001, 7, &encode(&[1i32, -2]));
        assert_eq!(
            bytes,
            vec![
                0, 0, 0, 20, // length = 12 + 8
                1, 2, 3, 4, // comm id
                0x80, 0, 0, 1, // tag
                0, 0, 0, 7, // src
                1, 0, 0, 0, // 1 little-endian
                0xfe, 0xff, 0xff, 0xff, // -2 little-endian
            ]
        );
    }

    #[test]
    fn round_trip_and_clean_eof() {
        let mut stream = encode_frame(5, 6, 7, &[]);
        stream.extend(encode_frame(1, 2, 3, &[9, 9, 9, 9]));
        let mut r = &stream[..];
        assert_eq!(read_frame(&mut r).unwrap().unwrap(), Frame { comm_id: 5, tag: 6, src: 7, payload: vec![] });
        assert_eq!(read_frame(&mut r).unwrap().unwrap().payload, vec![9, 9, 9, 9]);
        assert!(read_frame(&mut r).unwrap().is_none());
    }

    #[test]
    fn short_length_is_rejected() {
        let mut r = &[0u8, 0, 0, 3, 1, 2, 3][..];
        assert!(matches!(read_frame(&mut r), Err(Error::Frame(_))));
    }

    #[test]
    fn truncated_body_is_an_error() {
        let bytes = encode_frame(1, 1, 1, &[1, 2, 3, 4]);
        let mut r = &bytes[..bytes.len() - 1];
        assert!(read_frame(&mut r).is_err());
    }
}
