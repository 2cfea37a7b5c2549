//! Byte-level reader for the little-endian file formats. Keeps track of
//! the current offset so format errors can name where they happened.

pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

/// Not enough bytes left; `offset` is where the read started.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct NeedBytes {
    pub offset: usize,
    pub needed: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], NeedBytes> {
        if self.remaining() < n {
            return Err(NeedBytes {
                offset: self.pos,
                needed: n,
            });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub fn u8(&mut self) -> Result<u8, NeedBytes> {
        Ok(self.take(1)?[0])
    }

    pub fn u16_le(&mut self) -> Result<u16, NeedBytes> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32_le(&mut self) -> Result<u32, NeedBytes> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64_le(&mut self) -> Result<u64, NeedBytes> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64_le(&mut self) -> Result<f64, NeedBytes> {
        Ok(f64::from_bits(self.u64_le()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_in_order_and_reports_offsets() {
        let bytes = [1u8, 2, 0, 0x40, 0, 0, 0, 0];
        let mut r = ByteReader::new(&bytes);
        assert_eq!(r.u8().unwrap(), 1);
        assert_eq!(r.u16_le().unwrap(), 2);
        assert_eq!(r.offset(), 3);
        assert_eq!(r.u32_le().unwrap(), 0x40);
        assert_eq!(
            r.u16_le().unwrap_err(),
            NeedBytes {
                offset: 7,
                needed: 2
            }
        );
    }

    #[test]
    fn f64_round_trips_bits() {
        let value = -0.1f64;
        let bytes = value.to_bits().to_le_bytes();
        let mut r = ByteReader::new(&bytes);
        assert_eq!(r.f64_le().unwrap().to_bits(), value.to_bits());
    }
}
