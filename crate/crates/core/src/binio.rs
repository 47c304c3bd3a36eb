//! Little-endian primitives shared by the `PBNN` and `PBML` model formats.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

pub(crate) struct Writer<W: Write>(pub W);

impl<W: Write> Writer<W> {
    pub fn magic(&mut self, magic: &[u8; 4], version: u16) -> Result<()> {
        self.0.write_all(magic)?;
        self.0.write_u16::<LittleEndian>(version)?;
        Ok(())
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.0.write_u8(v)?)
    }

    pub fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
        Ok(self.0.write_u32::<LittleEndian>(v)?)
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_u64::<LittleEndian>(v)?)
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_f64::<LittleEndian>(v)?)
    }

    pub fn f64s(&mut self, vs: &[f64]) -> Result<()> {
        vs.iter().try_for_each(|&v| self.f64(v))
    }

    pub fn usizes(&mut self, vs: &[usize]) -> Result<()> {
        self.u32(vs.len())?;
        vs.iter().try_for_each(|&v| self.u32(v))
    }

    pub fn array1(&mut self, a: &Array1<f64>) -> Result<()> {
        self.u32(a.len())?;
        a.iter().try_for_each(|&v| self.f64(v))
    }

    pub fn array2(&mut self, a: &Array2<f64>) -> Result<()> {
        self.u32(a.nrows())?;
        self.u32(a.ncols())?;
        a.iter().try_for_each(|&v| self.f64(v))
    }
}

pub(crate) struct Reader<R: Read>(pub R);

impl<R: Read> Reader<R> {
    pub fn magic(&mut self, magic: &[u8; 4], version: u16) -> Result<()> {
        let mut buf = [0u8; 4];
        self.0.read_exact(&mut buf)?;
        if &buf != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {}",
                buf,
                String::from_utf8_lossy(magic)
            )));
        }
        let v = self.0.read_u16::<LittleEndian>()?;
        if v != version {
            return Err(Error::Format(format!(
                "unsupported {} version {v}",
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.0.read_u8()?)
    }

    pub fn u32(&mut self) -> Result<usize> {
        Ok(self.0.read_u32::<LittleEndian>()? as usize)
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(self.0.read_u64::<LittleEndian>()?)
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(self.0.read_f64::<LittleEndian>()?)
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut v = vec![0.0; n];
        self.0.read_f64_into::<LittleEndian>(&mut v)?;
        Ok(v)
    }

    pub fn usizes(&mut self) -> Result<Vec<usize>> {
        let n = self.u32()?;
        (0..n).map(|_| self.u32()).collect()
    }

    pub fn array1(&mut self) -> Result<Array1<f64>> {
        let n = self.u32()?;
        Ok(Array1::from(self.f64s(n)?))
    }

    pub fn array2(&mut self) -> Result<Array2<f64>> {
        let r = self.u32()?;
        let c = self.u32()?;
        let v = self.f64s(r * c)?;
        Ok(Array2::from_shape_vec((r, c), v).expect("sized"))
    }
}
