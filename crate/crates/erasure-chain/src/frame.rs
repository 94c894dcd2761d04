//! Frame geometry, block interleaving, CRC-16, and bit/byte packing.
//!
//! A frame carries `I` Reed-Solomon codewords (the interleave depth).
//! Symbol `i` of block `j` is transmitted at stream position `p = i·I + j`,
//! so consecutive transmitted bytes belong to different blocks and a burst
//! of B bad bytes costs any single block at most ⌈B/I⌉ symbols. Because
//! every block is systematic (message first), the first `k·I` positions of
//! the interleaved stream are exactly the frame payload in transmitted
//! order — the byte sequence the corruption scorer sees.
//!
//! The last two payload bytes hold a CRC-16 over the preceding payload
//! (CCITT variant: polynomial 0x1021, init 0xFFFF, no reflection, no final
//! XOR), the end-to-end acceptance check for a recovered frame.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("interleave depth {0} outside the supported 1..=8")]
    BadDepth(usize),
    #[error("expected {expected} blocks, got {got}")]
    WrongBlockCount { expected: usize, got: usize },
    #[error("block {index} has {got} symbols, expected {expected}")]
    WrongBlockLength { index: usize, got: usize, expected: usize },
    #[error("stream length {got} is not {expected}")]
    WrongStreamLength { got: usize, expected: usize },
    #[error("bit count {0} is not a multiple of 8")]
    RaggedBits(usize),
    #[error("payload length {got}, geometry wants {expected}")]
    WrongPayloadLength { got: usize, expected: usize },
}

/// How one frame maps onto RS codewords.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGeometry {
    /// Interleave depth I: RS blocks per frame.
    pub depth: usize,
    /// RS codeword length in symbols.
    pub n: usize,
    /// RS message length in symbols.
    pub k: usize,
}

impl FrameGeometry {
    pub fn new(depth: usize, n: usize, k: usize) -> Result<FrameGeometry, FrameError> {
        if !(1..=8).contains(&depth) {
            return Err(FrameError::BadDepth(depth));
        }
        Ok(FrameGeometry { depth, n, k })
    }

    /// The default production geometry: RS(255,223) at depth 5.
    pub fn production() -> FrameGeometry {
        FrameGeometry { depth: 5, n: 255, k: 223 }
    }

    /// Payload bytes per frame, k·I.
    pub fn payload_bytes(&self) -> usize {
        self.k * self.depth
    }

    /// Transmitted bytes per frame, n·I.
    pub fn code_bytes(&self) -> usize {
        self.n * self.depth
    }

    /// Stream position of symbol `i` of block `j`.
    pub fn stream_pos(&self, block: usize, symbol: usize) -> usize {
        symbol * self.depth + block
    }

    /// Inverse of [`stream_pos`](Self::stream_pos): (block, symbol).
    pub fn block_symbol(&self, stream_pos: usize) -> (usize, usize) {
        (stream_pos % self.depth, stream_pos / self.depth)
    }
}

/// A frame payload plus the receiver's knowledge of which bytes are
/// verified correct (from already-decoded blocks).
#[derive(Debug, Clone)]
pub struct Frame {
    pub payload: Vec<u8>,
    pub known_mask: Vec<bool>,
}

impl Frame {
    pub fn new(payload: Vec<u8>) -> Frame {
        let known_mask = vec![false; payload.len()];
        Frame { payload, known_mask }
    }
}

/// Round-robin interleave: exactly I blocks of n symbols in, n·I bytes out.
pub fn interleave(blocks: &[Vec<u8>], geometry: &FrameGeometry) -> Result<Vec<u8>, FrameError> {
    if blocks.len() != geometry.depth {
        return Err(FrameError::WrongBlockCount { expected: geometry.depth, got: blocks.len() });
    }
    for (index, b) in blocks.iter().enumerate() {
        if b.len() != geometry.n {
            return Err(FrameError::WrongBlockLength { index, got: b.len(), expected: geometry.n });
        }
    }
    let mut out = vec![0u8; geometry.code_bytes()];
    for (j, block) in blocks.iter().enumerate() {
        for (i, &sym) in block.iter().enumerate() {
            out[geometry.stream_pos(j, i)] = sym;
        }
    }
    Ok(out)
}

/// Inverse of [`interleave`].
pub fn deinterleave(stream: &[u8], geometry: &FrameGeometry) -> Result<Vec<Vec<u8>>, FrameError> {
    if stream.len() != geometry.code_bytes() {
        return Err(FrameError::WrongStreamLength {
            got: stream.len(),
            expected: geometry.code_bytes(),
        });
    }
    let mut blocks = vec![vec![0u8; geometry.n]; geometry.depth];
    for (p, &byte) in stream.iter().enumerate() {
        let (j, i) = geometry.block_symbol(p);
        blocks[j][i] = byte;
    }
    Ok(blocks)
}

/// CRC-16 (CCITT): polynomial 0x1021, init 0xFFFF, no reflection, no final
/// XOR. check("123456789") = 0x29B1.
pub fn crc16(data: &[u8]) -> u16 {
    let mut crc = 0xFFFFu16;
    for &byte in data {
        crc ^= (byte as u16) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 { (crc << 1) ^ 0x1021 } else { crc << 1 };
        }
    }
    crc
}

/// Writes the CRC of everything before the last two bytes into the last two
/// bytes (big-endian). Panics on payloads shorter than the check itself.
pub fn write_crc(payload: &mut [u8]) {
    assert!(payload.len() >= 2, "payload too short for a CRC");
    let split = payload.len() - 2;
    let crc = crc16(&payload[..split]);
    payload[split] = (crc >> 8) as u8;
    payload[split + 1] = (crc & 0xFF) as u8;
}

/// True when the trailing two bytes match the CRC of the preceding payload.
pub fn crc_verify(payload: &[u8]) -> bool {
    if payload.len() < 2 {
        return false;
    }
    let split = payload.len() - 2;
    let stored = ((payload[split] as u16) << 8) | payload[split + 1] as u16;
    crc16(&payload[..split]) == stored
}

/// Bytes to bits, MSB first within each byte.
pub fn pack_bits(bytes: &[u8]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(bytes.len() * 8);
    for &byte in bytes {
        for i in (0..8).rev() {
            bits.push((byte >> i) & 1);
        }
    }
    bits
}

/// Bits (0/1 values, MSB first) back to bytes.
pub fn unpack_bits(bits: &[u8]) -> Result<Vec<u8>, FrameError> {
    if !bits.len().is_multiple_of(8) {
        return Err(FrameError::RaggedBits(bits.len()));
    }
    Ok(bits
        .chunks(8)
        .map(|chunk| chunk.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1)))
        .collect())
}
