//! `.oft` force log: the 4-byte magic `OFT1`, then fixed 42-byte
//! little-endian records `u64 t_ns, 3 x u16 counts, 3 x f64 wrench,
//! u32 crc32` where the CRC covers the 38 bytes before it.

use std::io::{Read, Write};

use crate::physics::SensorReading;

pub const MAGIC: &[u8; 4] = b"OFT1";
pub const RECORD_LEN: usize = 42;
const PAYLOAD_LEN: usize = RECORD_LEN - 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OftRecord {
    pub timestamp_ns: u64,
    pub counts: [u16; 3],
    /// Estimated `(fz, mx, my)`.
    pub wrench: [f64; 3],
}

impl OftRecord {
    pub fn reading(&self) -> SensorReading {
        SensorReading { timestamp_ns: self.timestamp_ns, counts: self.counts }
    }

    pub fn encode(&self, out: &mut [u8; RECORD_LEN]) {
        out[0..8].copy_from_slice(&self.timestamp_ns.to_le_bytes());
        for (i, c) in self.counts.iter().enumerate() {
            out[8 + 2 * i..10 + 2 * i].copy_from_slice(&c.to_le_bytes());
        }
        for (i, w) in self.wrench.iter().enumerate() {
            out[14 + 8 * i..22 + 8 * i].copy_from_slice(&w.to_le_bytes());
        }
        let crc = crc32fast::hash(&out[..PAYLOAD_LEN]);
        out[PAYLOAD_LEN..].copy_from_slice(&crc.to_le_bytes());
    }

    /// Decodes one record; `index` is only used for error reporting.
    pub fn decode(buf: &[u8; RECORD_LEN], index: usize) -> Result<Self, OftError> {
        let stored = u32::from_le_bytes(buf[PAYLOAD_LEN..].try_into().unwrap());
        let computed = crc32fast::hash(&buf[..PAYLOAD_LEN]);
        if stored != computed {
            return Err(OftError::CrcMismatch { index, stored, computed });
        }
        let u16_at = |o: usize| u16::from_le_bytes([buf[o], buf[o + 1]]);
        let f64_at = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        Ok(Self {
            timestamp_ns: u64::from_le_bytes(buf[0..8].try_into().unwrap()),
            counts: [u16_at(8), u16_at(10), u16_at(12)],
            wrench: [f64_at(14), f64_at(22), f64_at(30)],
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OftError {
    #[error("not an .oft stream (bad magic)")]
    BadMagic,
    #[error("record {index} is truncated")]
    Truncated { index: usize },
    #[error("record {index} failed its checksum (stored {stored:08x}, computed {computed:08x})")]
    CrcMismatch { index: usize, stored: u32, computed: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Streaming writer; the magic goes out on construction.
pub struct OftWriter<W: Write> {
    inner: W,
    buf: [u8; RECORD_LEN],
    written: usize,
}

impl<W: Write> OftWriter<W> {
    pub fn new(mut inner: W) -> Result<Self, OftError> {
        inner.write_all(MAGIC)?;
        Ok(Self { inner, buf: [0; RECORD_LEN], written: 0 })
    }

    pub fn write(&mut self, rec: &OftRecord) -> Result<(), OftError> {
        rec.encode(&mut self.buf);
        self.inner.write_all(&self.buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn records_written(&self) -> usize {
        self.written
    }

    pub fn finish(mut self) -> Result<W, OftError> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn write_oft<W: Write>(w: W, records: &[OftRecord]) -> Result<(), OftError> {
    let mut wr = OftWriter::new(w)?;
    for r in records {
        wr.write(r)?;
    }
    wr.finish()?;
    Ok(())
}

/// Reads every record, stopping at the first corrupt or truncated one.
pub fn read_oft<R: Read>(mut r: R) -> Result<Vec<OftRecord>, OftError> {
    let mut magic = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut magic[got..])? {
            0 => return Err(OftError::BadMagic),
            n => got += n,
        }
    }
    if &magic != MAGIC {
        return Err(OftError::BadMagic);
    }
    let mut out = Vec::new();
    let mut buf = [0u8; RECORD_LEN];
    loop {
        let mut filled = 0;
        while filled < RECORD_LEN {
            match r.read(&mut buf[filled..])? {
                0 => break,
                n => filled += n,
            }
        }
        if filled == 0 {
            return Ok(out);
        }
        if filled < RECORD_LEN {
            return Err(OftError::Truncated { index: out.len() });
        }
        out.push(OftRecord::decode(&buf, out.len())?);
    }
}
