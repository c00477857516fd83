//! Little helpers for the binary containers.

use crate::error::{Error, Result};

pub(crate) struct Reader<'a> {
    format: &'static str,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(format: &'static str, buf: &'a [u8]) -> Self {
        Self { format, buf, pos: 0 }
    }

    pub fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub fn error(&self, at: u64, message: impl Into<String>) -> Error {
        Error::Format {
            format: self.format,
            offset: at,
            message: message.into(),
        }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.error(
                self.pos as u64,
                format!("truncated: needed {n} bytes, {} remain", self.buf.len() - self.pos),
            ));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32_le(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u32_be(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f64s_le(&mut self, n: usize) -> Result<Vec<f64>> {
        let start = self.offset();
        let len = n
            .checked_mul(8)
            .ok_or_else(|| self.error(start, "value count overflows"))?;
        let raw = self.take(len)?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(self.error(start + 8 * k as u64, "non-finite value"));
        }
        Ok(values)
    }

    pub fn expect_end(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.error(
                self.pos as u64,
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}
