//! Baseline LoRa coding chain: Hamming(8,4), diagonal interleaving, Gray
//! mapping and a CRC-16 trailer.
//!
//! Framing has no PHY header. The payload length is implied by the symbol
//! count: data occupies `ceil(16 L / sf)` symbols and the CRC another
//! `ceil(32 / sf)`, which is strictly increasing in `L`.

use crc::{Crc, CRC_16_IBM_3740};

use crate::error::{Error, Result};
use crate::params::{LoraParams, SymbolValue};

pub const MAX_PAYLOAD: usize = 255;

/// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF).
const CRC16: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

pub fn crc16(data: &[u8]) -> u16 {
    CRC16.checksum(data)
}

/// Codeword bit layout: bits 0-3 data, 4-6 Hamming parity, 7 overall parity.
pub fn hamming84_encode(nibble: u8) -> u8 {
    let d = |i: u8| (nibble >> i) & 1;
    let p0 = d(0) ^ d(1) ^ d(3);
    let p1 = d(0) ^ d(2) ^ d(3);
    let p2 = d(1) ^ d(2) ^ d(3);
    let word = (nibble & 0x0f) | p0 << 4 | p1 << 5 | p2 << 6;
    word | ((word.count_ones() as u8 & 1) << 7)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodewordStatus {
    Clean,
    Corrected,
    /// Two or more bit errors seen; the data bits are passed through as received.
    Uncorrectable,
}

const fn build_decode_table() -> [(u8, CodewordStatus); 256] {
    let mut codewords = [0u8; 16];
    let mut n = 0;
    while n < 16 {
        let nib = n as u8;
        let d0 = nib & 1;
        let d1 = (nib >> 1) & 1;
        let d2 = (nib >> 2) & 1;
        let d3 = (nib >> 3) & 1;
        let word = nib | (d0 ^ d1 ^ d3) << 4 | (d0 ^ d2 ^ d3) << 5 | (d1 ^ d2 ^ d3) << 6;
        codewords[n] = word | ((word.count_ones() as u8 & 1) << 7);
        n += 1;
    }
    let mut table = [(0u8, CodewordStatus::Clean); 256];
    let mut rx = 0;
    while rx < 256 {
        let mut best = 0;
        let mut best_dist = 9;
        let mut c = 0;
        while c < 16 {
            let dist = ((rx as u8) ^ codewords[c]).count_ones();
            if dist < best_dist {
                best_dist = dist;
                best = c;
            }
            c += 1;
        }
        table[rx] = match best_dist {
            0 => (best as u8, CodewordStatus::Clean),
            1 => (best as u8, CodewordStatus::Corrected),
            _ => ((rx as u8) & 0x0f, CodewordStatus::Uncorrectable),
        };
        rx += 1;
    }
    table
}

static DECODE_TABLE: [(u8, CodewordStatus); 256] = build_decode_table();

/// Nearest-codeword decoding: corrects one bit error, flags two.
pub fn hamming84_decode(word: u8) -> (u8, CodewordStatus) {
    DECODE_TABLE[word as usize]
}

pub fn gray_encode(x: u16) -> u16 {
    x ^ (x >> 1)
}

pub fn gray_decode(mut g: u16) -> u16 {
    let mut x = g;
    while g > 1 {
        g >>= 1;
        x ^= g;
    }
    x
}

/// Spreads codewords over symbol words. A full block of `sf` codewords maps
/// diagonally onto 8 symbols (symbol `j`, bit `i` carries bit `j` of codeword
/// `(i + j) mod sf`), so every symbol touches each codeword at most once. A
/// trailing partial block of `k` codewords is packed column-wise into
/// `ceil(8k / sf)` symbols.
fn interleave(codewords: &[u8], sf: usize) -> Vec<u16> {
    let mut words = Vec::with_capacity(symbol_count(codewords.len(), sf));
    for block in codewords.chunks(sf) {
        if block.len() == sf {
            for j in 0..8 {
                let mut w = 0u16;
                for i in 0..sf {
                    let bit = (block[(i + j) % sf] >> j) & 1;
                    w |= (bit as u16) << i;
                }
                words.push(w);
            }
        } else {
            let k = block.len();
            let mut tail = vec![0u16; (8 * k).div_ceil(sf)];
            for (c, cw) in block.iter().enumerate() {
                for b in 0..8 {
                    let p = b * k + c;
                    tail[p / sf] |= (((cw >> b) & 1) as u16) << (p % sf);
                }
            }
            words.extend(tail);
        }
    }
    words
}

fn deinterleave(words: &[u16], n_codewords: usize, sf: usize) -> Vec<u8> {
    let mut codewords = Vec::with_capacity(n_codewords);
    let mut cursor = 0;
    let mut remaining = n_codewords;
    while remaining > 0 {
        let k = remaining.min(sf);
        let mut block = vec![0u8; k];
        if k == sf {
            for j in 0..8 {
                let w = words[cursor + j];
                for i in 0..sf {
                    block[(i + j) % sf] |= (((w >> i) & 1) as u8) << j;
                }
            }
            cursor += 8;
        } else {
            for (c, cw) in block.iter_mut().enumerate() {
                for b in 0..8 {
                    let p = b * k + c;
                    *cw |= (((words[cursor + p / sf] >> (p % sf)) & 1) as u8) << b;
                }
            }
            cursor += (8 * k).div_ceil(sf);
        }
        codewords.extend(block);
        remaining -= k;
    }
    codewords
}

fn symbol_count(n_codewords: usize, sf: usize) -> usize {
    (8 * n_codewords).div_ceil(sf)
}

fn data_symbol_count(payload_len: usize, sf: usize) -> usize {
    symbol_count(2 * payload_len, sf)
}

fn crc_symbol_count(sf: usize) -> usize {
    symbol_count(4, sf)
}

/// Total symbols on air for a payload of `payload_len` bytes.
pub fn packet_symbol_count(payload_len: usize, params: &LoraParams) -> usize {
    let sf = params.sf() as usize;
    data_symbol_count(payload_len, sf) + crc_symbol_count(sf)
}

fn bytes_to_codewords(bytes: &[u8]) -> Vec<u8> {
    bytes
        .iter()
        .flat_map(|b| [hamming84_encode(b & 0x0f), hamming84_encode(b >> 4)])
        .collect()
}

fn to_symbols(words: Vec<u16>, params: &LoraParams) -> Vec<SymbolValue> {
    words
        .into_iter()
        .map(|w| {
            params
                .symbol(gray_decode(w) as usize)
                .expect("sf-bit word is a valid symbol")
        })
        .collect()
}

/// An encoded packet: payload symbols followed by the CRC block.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedPacket {
    pub payload: Vec<u8>,
    pub symbols: Vec<SymbolValue>,
    pub crc: u16,
    pub crc_symbols: Vec<SymbolValue>,
}

impl CodedPacket {
    /// Everything that goes on air, in transmission order.
    pub fn transmit_symbols(&self) -> Vec<SymbolValue> {
        self.symbols.iter().chain(&self.crc_symbols).copied().collect()
    }
}

pub fn encode_payload(payload: &[u8], params: &LoraParams) -> Result<CodedPacket> {
    if payload.len() > MAX_PAYLOAD {
        return Err(Error::PayloadTooLong(payload.len()));
    }
    let sf = params.sf() as usize;
    let crc = crc16(payload);
    let data_words = interleave(&bytes_to_codewords(payload), sf);
    let crc_words = interleave(&bytes_to_codewords(&crc.to_be_bytes()), sf);
    Ok(CodedPacket {
        payload: payload.to_vec(),
        symbols: to_symbols(data_words, params),
        crc,
        crc_symbols: to_symbols(crc_words, params),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedPayload {
    pub payload: Vec<u8>,
    pub crc_ok: bool,
    /// Codewords with a single corrected bit error.
    pub corrected: usize,
    /// Codewords with an uncorrectable error pattern.
    pub uncorrectable: usize,
}

fn decode_codewords(codewords: &[u8], stats: &mut DecodedPayload) -> Vec<u8> {
    codewords
        .chunks(2)
        .map(|pair| {
            let mut byte = 0u8;
            for (shift, &cw) in [0u8, 4].iter().zip(pair) {
                let (nibble, status) = hamming84_decode(cw);
                match status {
                    CodewordStatus::Clean => {}
                    CodewordStatus::Corrected => stats.corrected += 1,
                    CodewordStatus::Uncorrectable => stats.uncorrectable += 1,
                }
                byte |= nibble << shift;
            }
            byte
        })
        .collect()
}

/// Inverts [`encode_payload`]; the payload length is recovered from the
/// symbol count.
pub fn decode_payload(symbols: &[SymbolValue], params: &LoraParams) -> Result<DecodedPayload> {
    let sf = params.sf() as usize;
    let payload_len = (0..=MAX_PAYLOAD)
        .find(|&len| packet_symbol_count(len, params) == symbols.len())
        .ok_or(Error::Framing(symbols.len()))?;
    let words: Vec<u16> = symbols.iter().map(|s| gray_encode(s.value() as u16)).collect();
    let (data, trailer) = words.split_at(data_symbol_count(payload_len, sf));

    let mut out = DecodedPayload {
        payload: Vec::new(),
        crc_ok: false,
        corrected: 0,
        uncorrectable: 0,
    };
    let payload = decode_codewords(&deinterleave(data, 2 * payload_len, sf), &mut out);
    let crc_bytes = decode_codewords(&deinterleave(trailer, 4, sf), &mut out);
    out.crc_ok = u16::from_be_bytes([crc_bytes[0], crc_bytes[1]]) == crc16(&payload);
    out.payload = payload;
    Ok(out)
}
